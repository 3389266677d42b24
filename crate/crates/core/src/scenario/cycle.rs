use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

/// A sample of a drive cycle that breaks the cycle invariants. `index` counts
/// samples from zero.
#[derive(Clone, Debug, PartialEq, Error)]
#[error("sample {index}: {reason}")]
pub struct CycleError {
    pub index: usize,
    pub reason: &'static str,
}

/// Time-speed trace, linearly interpolated between samples.
#[derive(Clone, Debug, PartialEq)]
pub struct DriveCycle {
    name: String,
    time: Vec<f64>,
    speed: Vec<f64>,
}

impl DriveCycle {
    /// Validates `(t, v)` samples: at least two, time strictly increasing from
    /// zero, speed finite and non-negative.
    pub fn new(name: impl Into<String>, samples: impl IntoIterator<Item = (f64, f64)>) -> Result<Self, CycleError> {
        let (time, speed): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
        for (i, (&t, &v)) in time.iter().zip(&speed).enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(CycleError { index: i, reason: "value is not finite" });
            }
            if i == 0 && t != 0.0 {
                return Err(CycleError { index: 0, reason: "time must start at 0" });
            }
            if i > 0 && t <= time[i - 1] {
                return Err(CycleError { index: i, reason: "time must be strictly increasing" });
            }
            if v < 0.0 {
                return Err(CycleError { index: i, reason: "speed must be non-negative" });
            }
        }
        if time.len() < 2 {
            return Err(CycleError { index: time.len(), reason: "need at least two samples" });
        }
        Ok(DriveCycle { name: name.into(), time, speed })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.time.iter().copied().zip(self.speed.iter().copied())
    }

    pub fn duration(&self) -> f64 {
        self.time[self.time.len() - 1]
    }

    /// Target speed at `t`, held at the end values outside the trace.
    pub fn speed_at(&self, t: f64) -> f64 {
        let n = self.time.len();
        if t <= 0.0 {
            return self.speed[0];
        }
        if t >= self.time[n - 1] {
            return self.speed[n - 1];
        }
        let i = self.time.partition_point(|&ti| ti <= t);
        let (t0, t1) = (self.time[i - 1], self.time[i]);
        let (v0, v1) = (self.speed[i - 1], self.speed[i]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Cumulative trapezoid distance at every sample (m).
    pub fn cumulative_distance(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.time.len());
        let mut s = 0.0;
        out.push(0.0);
        for i in 1..self.time.len() {
            s += 0.5 * (self.speed[i] + self.speed[i - 1]) * (self.time[i] - self.time[i - 1]);
            out.push(s);
        }
        out
    }

    /// Distance of the exact trace (m).
    pub fn nominal_distance(&self) -> f64 {
        self.cumulative_distance()[self.time.len() - 1]
    }

    /// The trace driven `n` times back to back. The first sample of each
    /// repeat is dropped, so a cycle that ends at its start speed joins
    /// without a step.
    pub fn repeated(&self, n: u32) -> DriveCycle {
        let mut out = self.clone();
        let period = self.duration();
        for k in 1..n {
            let offset = period * k as f64;
            for i in 1..self.time.len() {
                out.time.push(self.time[i] + offset);
                out.speed.push(self.speed[i]);
            }
        }
        if n > 1 {
            out.name = alloc::format!("{}x{}", self.name, n);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sample_cycle() {
        let c = DriveCycle::new("ramp", [(0.0, 0.0), (10.0, 5.0)]).unwrap();
        assert_eq!(c.duration(), 10.0);
        assert_eq!(c.speed_at(4.0), 2.0);
        assert_eq!(c.nominal_distance(), 25.0);
        assert_eq!(c.speed_at(20.0), 5.0);
    }

    #[test]
    fn decreasing_time_is_rejected() {
        let e = DriveCycle::new("bad", [(0.0, 0.0), (2.0, 1.0), (1.0, 1.0)]).unwrap_err();
        assert_eq!(e.index, 2);
    }

    #[test]
    fn negative_speed_is_rejected() {
        let e = DriveCycle::new("bad", [(0.0, 0.0), (1.0, -1.0)]).unwrap_err();
        assert_eq!(e.index, 1);
    }

    #[test]
    fn repeating_doubles_distance() {
        let c = DriveCycle::new("tri", [(0.0, 0.0), (5.0, 10.0), (10.0, 0.0)]).unwrap();
        let r = c.repeated(3);
        assert_eq!(r.duration(), 30.0);
        assert_eq!(r.nominal_distance(), 3.0 * c.nominal_distance());
        assert_eq!(r.speed_at(15.0), 10.0);
    }
}
