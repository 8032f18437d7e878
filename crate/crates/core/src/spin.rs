use std::fmt;

use serde::{Deserialize, Serialize};

/// Non-negative half-integer, stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Spin(u32);

impl Spin {
    pub const fn from_doubled(doubled: u32) -> Self {
        Spin(doubled)
    }

    pub const fn from_integer(s: u32) -> Self {
        Spin(2 * s)
    }

    pub const fn doubled(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    /// S(S+1)
    pub fn casimir(self) -> f64 {
        let s = self.value();
        s * (s + 1.0)
    }

    /// Snaps an eigenvalue of S^2 to the nearest S on the half-integer
    /// lattice. Returns `None` when S(S+1) misses the lattice by more
    /// than `tol`.
    pub fn from_casimir(x: f64, tol: f64) -> Option<Spin> {
        if !x.is_finite() || x < -tol {
            return None;
        }
        let s = 0.5 * (-1.0 + (1.0 + 4.0 * x.max(0.0)).sqrt());
        let doubled = (2.0 * s).round();
        let spin = Spin(doubled as u32);
        ((spin.casimir() - x).abs() <= tol).then_some(spin)
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}
