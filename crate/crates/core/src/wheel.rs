use core::ops::{Index, IndexMut};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Wheel position. The discriminant is the storage index in [`PerWheel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Wheel {
    LeftFront = 0,
    RightFront = 1,
    LeftRear = 2,
    RightRear = 3,
}

impl Wheel {
    pub const ALL: [Wheel; 4] = [
        Wheel::LeftFront,
        Wheel::RightFront,
        Wheel::LeftRear,
        Wheel::RightRear,
    ];

    pub const fn is_front(self) -> bool {
        matches!(self, Wheel::LeftFront | Wheel::RightFront)
    }

    pub const fn is_left(self) -> bool {
        matches!(self, Wheel::LeftFront | Wheel::LeftRear)
    }

    /// Short label used in trace column names.
    pub const fn tag(self) -> &'static str {
        match self {
            Wheel::LeftFront => "lf",
            Wheel::RightFront => "rf",
            Wheel::LeftRear => "lr",
            Wheel::RightRear => "rr",
        }
    }
}

/// One value per wheel, indexed by [`Wheel`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PerWheel<T>(pub [T; 4]);

impl<T: Copy> PerWheel<T> {
    pub const fn splat(v: T) -> Self {
        PerWheel([v; 4])
    }

    pub fn from_fn(mut f: impl FnMut(Wheel) -> T) -> Self {
        PerWheel(Wheel::ALL.map(&mut f))
    }

    pub fn map<U>(self, mut f: impl FnMut(Wheel, T) -> U) -> PerWheel<U> {
        let mut i = 0;
        PerWheel(self.0.map(|v| {
            let w = Wheel::ALL[i];
            i += 1;
            f(w, v)
        }))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Wheel, T)> + '_ {
        Wheel::ALL.iter().map(move |&w| (w, self[w]))
    }
}

impl PerWheel<f64> {
    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn front_sum(&self) -> f64 {
        self[Wheel::LeftFront] + self[Wheel::RightFront]
    }

    pub fn rear_sum(&self) -> f64 {
        self[Wheel::LeftRear] + self[Wheel::RightRear]
    }
}

impl<T> Index<Wheel> for PerWheel<T> {
    type Output = T;

    fn index(&self, w: Wheel) -> &T {
        &self.0[w as usize]
    }
}

impl<T> IndexMut<Wheel> for PerWheel<T> {
    fn index_mut(&mut self, w: Wheel) -> &mut T {
        &mut self.0[w as usize]
    }
}
