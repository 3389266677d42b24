//! Motor torque envelope and electrical loss models.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// `P_loss = k_c T² + k_i |ω| + k_w |ω|³ + k_0`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct LossCoeffs {
    /// Copper loss (W per N²m²).
    pub k_c: f64,
    /// Iron loss (W s/rad).
    pub k_i: f64,
    /// Windage (W s³/rad³).
    pub k_w: f64,
    /// Constant loss (W).
    pub k_0: f64,
}

impl Default for LossCoeffs {
    fn default() -> Self {
        LossCoeffs { k_c: 0.03, k_i: 0.5, k_w: 1e-6, k_0: 50.0 }
    }
}

impl LossCoeffs {
    pub fn loss(&self, torque: f64, omega: f64) -> f64 {
        let w = omega.abs();
        self.k_c * torque * torque + self.k_i * w + self.k_w * w * w * w + self.k_0
    }
}

/// Tabulated loss over a rectangular (speed, torque) grid, bilinear inside and
/// clamped to the edge values outside. Torque is looked up by magnitude when
/// the grid holds no negative torques.
#[derive(Clone, Debug, PartialEq)]
pub struct LossMap {
    speeds: Vec<f64>,
    torques: Vec<f64>,
    /// Row-major, `speeds.len()` rows by `torques.len()` columns (W).
    losses: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LossMapError {
    #[error("loss map needs at least two speeds and two torques")]
    TooSmall,
    #[error("loss map axes must be strictly increasing")]
    NotIncreasing,
    #[error("loss map has {got} values, expected {expected}")]
    Shape { expected: usize, got: usize },
    #[error("loss map values must be finite and non-negative")]
    BadValue,
}

impl LossMap {
    pub fn new(speeds: Vec<f64>, torques: Vec<f64>, losses: Vec<f64>) -> Result<Self, LossMapError> {
        if speeds.len() < 2 || torques.len() < 2 {
            return Err(LossMapError::TooSmall);
        }
        let increasing = |v: &[f64]| v.windows(2).all(|p| p[1] > p[0]) && v.iter().all(|x| x.is_finite());
        if !increasing(&speeds) || !increasing(&torques) {
            return Err(LossMapError::NotIncreasing);
        }
        let expected = speeds.len() * torques.len();
        if losses.len() != expected {
            return Err(LossMapError::Shape { expected, got: losses.len() });
        }
        if losses.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(LossMapError::BadValue);
        }
        Ok(LossMap { speeds, torques, losses })
    }

    pub fn loss(&self, torque: f64, omega: f64) -> f64 {
        let t = if self.torques[0] >= 0.0 { torque.abs() } else { torque };
        let (i, fi) = locate(&self.speeds, omega.abs());
        let (j, fj) = locate(&self.torques, t);
        let n = self.torques.len();
        let at = |r: usize, c: usize| self.losses[r * n + c];
        let lo = at(i, j) * (1.0 - fj) + at(i, j + 1) * fj;
        let hi = at(i + 1, j) * (1.0 - fj) + at(i + 1, j + 1) * fj;
        lo * (1.0 - fi) + hi * fi
    }
}

/// Cell index and fraction for `x` on a sorted axis, clamped to the ends.
fn locate(axis: &[f64], x: f64) -> (usize, f64) {
    let last = axis.len() - 2;
    if x <= axis[0] {
        return (0, 0.0);
    }
    if x >= axis[last + 1] {
        return (last, 1.0);
    }
    let i = axis.partition_point(|&a| a <= x).saturating_sub(1).min(last);
    (i, (x - axis[i]) / (axis[i + 1] - axis[i]))
}
