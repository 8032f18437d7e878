//! Error-free floating point accumulation.
//!
//! Sums of products are kept as non-overlapping expansions (Shewchuk's
//! representation), so a sum that is mathematically zero evaluates to
//! exactly `0.0`. Used to check commutators of assembled operators without
//! any rounding tolerance.

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bv = s - a;
    let av = s - bv;
    (s, (a - av) + (b - bv))
}

#[inline]
fn two_product(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Exact running sum of f64 terms.
#[derive(Clone, Debug, Default)]
pub struct ExactSum {
    parts: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let mut q = x;
        let mut kept = 0;
        for i in 0..self.parts.len() {
            let (s, err) = two_sum(q, self.parts[i]);
            q = s;
            if err != 0.0 {
                self.parts[kept] = err;
                kept += 1;
            }
        }
        self.parts.truncate(kept);
        if q != 0.0 {
            self.parts.push(q);
        }
    }

    /// Adds the exact value of `a * b`.
    pub fn add_product(&mut self, a: f64, b: f64) {
        let (p, e) = two_product(a, b);
        self.add(p);
        self.add(e);
    }

    pub fn is_zero(&self) -> bool {
        self.parts.iter().all(|&p| p == 0.0)
    }

    /// Nearest-ish f64 to the exact sum (smallest components first).
    pub fn value(&self) -> f64 {
        self.parts.iter().fold(0.0, |acc, &p| acc + p)
    }
}
