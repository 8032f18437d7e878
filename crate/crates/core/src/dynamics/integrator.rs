//! Embedded explicit Runge-Kutta integration with PI step-size control.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::tableau::*;
use crate::error::{Error, Result};

/// Autonomous linear or nonlinear system `y' = f(y)` on complex vectors.
pub trait OdeSystem {
    fn len(&self) -> usize;
    fn rhs(&mut self, y: &[Complex64], dy: &mut [Complex64]);
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Dormand-Prince 5(4)
    Dopri5,
    /// Dormand-Prince 8(5,3)
    #[default]
    Dop853,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    #[serde(default)]
    pub method: Method,
    /// Abort after this many accepted plus rejected steps.
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_max_steps() -> usize {
    50_000_000
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            method: Method::Dop853,
            max_steps: default_max_steps(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const PI_BETA: f64 = 0.04;

struct Tableau {
    a: &'static [&'static [(usize, f64)]],
    stages: usize,
    /// Exponent of the error estimate, `1 / (q + 1)`.
    error_exponent: f64,
}

const DOPRI5: Tableau = Tableau {
    a: &DOPRI5_A,
    stages: 7,
    error_exponent: 0.2,
};

const DOP853: Tableau = Tableau {
    a: &DOP853_A,
    stages: 12,
    error_exponent: 0.125,
};

/// Adaptive integrator that carries its step size across calls to
/// [`Integrator::advance`].
pub struct Integrator<S: OdeSystem> {
    system: S,
    control: StepControl,
    tableau: &'static Tableau,
    k: Vec<Vec<Complex64>>,
    stage: Vec<Complex64>,
    y_new: Vec<Complex64>,
    /// rhs at the current point is valid in `k[0]`
    fsal_valid: bool,
    h: Option<f64>,
    err_prev: f64,
    stats: IntegratorStats,
}

impl<S: OdeSystem> Integrator<S> {
    pub fn new(system: S, control: StepControl) -> Result<Self> {
        if !(control.rtol >= 0.0 && control.atol >= 0.0) || (control.rtol == 0.0 && control.atol == 0.0)
        {
            return Err(Error::InvalidArgument(format!(
                "tolerances must be non-negative and not both zero (rtol {}, atol {})",
                control.rtol, control.atol
            )));
        }
        let tableau = match control.method {
            Method::Dopri5 => &DOPRI5,
            Method::Dop853 => &DOP853,
        };
        let n = system.len();
        // DOP853 needs one extra slot for the rhs at the new point
        let slots = tableau.stages + 1;
        Ok(Self {
            system,
            control,
            tableau,
            k: vec![vec![Complex64::new(0.0, 0.0); n]; slots],
            stage: vec![Complex64::new(0.0, 0.0); n],
            y_new: vec![Complex64::new(0.0, 0.0); n],
            fsal_valid: false,
            h: None,
            err_prev: 1e-4,
            stats: IntegratorStats::default(),
        })
    }

    pub fn system(&self) -> &S {
        &self.system
    }

    pub fn system_mut(&mut self) -> &mut S {
        self.fsal_valid = false;
        &mut self.system
    }

    pub fn stats(&self) -> IntegratorStats {
        self.stats
    }

    /// Call after modifying `y` outside the integrator.
    pub fn invalidate(&mut self) {
        self.fsal_valid = false;
    }

    /// Integrates `y` from `*t` to exactly `t_end`.
    pub fn advance(&mut self, y: &mut [Complex64], t: &mut f64, t_end: f64) -> Result<()> {
        assert_eq!(y.len(), self.system.len());
        if t_end <= *t {
            return Ok(());
        }
        if !self.fsal_valid {
            let (k0, _) = self.k.split_first_mut().unwrap();
            self.system.rhs(y, k0);
            self.stats.rhs_evals += 1;
            self.fsal_valid = true;
        }
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(y, t_end - *t),
        };

        while *t < t_end {
            if self.stats.accepted + self.stats.rejected >= self.control.max_steps {
                return Err(Error::TooManySteps {
                    steps: self.control.max_steps,
                    t: *t,
                });
            }
            let min_step = 16.0 * f64::EPSILON * t.abs().max(1.0);
            if h < min_step {
                return Err(Error::StepSizeUnderflow { t: *t, h });
            }
            let remaining = t_end - *t;
            let landing = h >= remaining;
            let h_try = if landing { remaining } else { h };

            let err = self.attempt(y, h_try);
            if err <= 1.0 {
                self.stats.accepted += 1;
                *t = if landing { t_end } else { *t + h_try };
                y.copy_from_slice(&self.y_new);
                // FSAL: the rhs at the new point sits in the last slot
                let last = match self.tableau.stages {
                    7 => 6,
                    _ => 12,
                };
                self.k.swap(0, last);

                let factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    let alpha = self.tableau.error_exponent - 0.75 * PI_BETA;
                    (SAFETY * err.powf(-alpha) * self.err_prev.powf(PI_BETA)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                self.err_prev = err.max(1e-4);
                // a step shortened to land on t_end says nothing about the
                // natural step size
                if !landing || h_try * factor > h {
                    h = h_try * factor;
                }
            } else {
                self.stats.rejected += 1;
                let factor =
                    (SAFETY * err.powf(-self.tableau.error_exponent)).clamp(MIN_FACTOR, 1.0);
                h = h_try * factor;
            }
        }
        self.h = Some(h);
        Ok(())
    }

    /// One trial step of size `h` from `y`; leaves the candidate in `y_new`
    /// and returns the scaled error norm.
    fn attempt(&mut self, y: &[Complex64], h: f64) -> f64 {
        let tab = self.tableau;
        let n = y.len();
        for s in 1..tab.stages {
            fill_stage(&mut self.stage, y, &self.k, tab.a[s], h);
            let (_, rest) = self.k.split_at_mut(s);
            self.system.rhs(&self.stage, &mut rest[0]);
            self.stats.rhs_evals += 1;
        }
        match tab.stages {
            7 => {
                // the seventh stage of DOPRI5 is the new point itself
                // its rhs was already evaluated by the loop above
                self.y_new.copy_from_slice(&self.stage);
                let mut sum = 0.0;
                for i in 0..n {
                    let mut e = Complex64::new(0.0, 0.0);
                    for (j, kj) in self.k.iter().take(7).enumerate() {
                        e += kj[i] * DOPRI5_E[j];
                    }
                    let sc = self.control.atol + self.control.rtol * y[i].norm().max(self.y_new[i].norm());
                    sum += (h * e.norm() / sc).powi(2);
                }
                (sum / n as f64).sqrt()
            }
            _ => {
                let b: Vec<(usize, f64)> = DOP853_B
                    .iter()
                    .copied()
                    .enumerate()
                    .filter(|(_, v)| *v != 0.0)
                    .collect();
                fill_stage(&mut self.y_new, y, &self.k, &b, h);
                let mut err5 = 0.0;
                let mut err3 = 0.0;
                for i in 0..n {
                    let mut e5 = Complex64::new(0.0, 0.0);
                    let mut e3 = Complex64::new(0.0, 0.0);
                    for j in 0..12 {
                        let kj = self.k[j][i];
                        e5 += kj * DOP853_E5[j];
                        e3 += kj * DOP853_E3[j];
                    }
                    let sc = self.control.atol + self.control.rtol * y[i].norm().max(self.y_new[i].norm());
                    err5 += (e5.norm() / sc).powi(2);
                    err3 += (e3.norm() / sc).powi(2);
                }
                let err = if err5 == 0.0 && err3 == 0.0 {
                    0.0
                } else {
                    h * err5 / ((err5 + 0.01 * err3) * n as f64).sqrt()
                };
                // rhs at the candidate point, consumed as k[0] after acceptance
                if err <= 1.0 {
                    let (_, rest) = self.k.split_at_mut(12);
                    self.system.rhs(&self.y_new, &mut rest[0]);
                    self.stats.rhs_evals += 1;
                }
                err
            }
        }
    }

    fn initial_step(&mut self, y: &[Complex64], span: f64) -> f64 {
        let order = 1.0 / self.tableau.error_exponent;
        let sc: Vec<f64> = y
            .iter()
            .map(|v| self.control.atol + self.control.rtol * v.norm())
            .collect();
        let rms = |v: &[Complex64]| {
            (v.iter().zip(&sc).map(|(x, s)| (x.norm() / s).powi(2)).sum::<f64>() / v.len().max(1) as f64)
                .sqrt()
        };
        let d0 = rms(y);
        let d1 = rms(&self.k[0]);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }.min(span);
        for i in 0..y.len() {
            self.stage[i] = y[i] + self.k[0][i] * h0;
        }
        let (k0, rest) = self.k.split_first_mut().unwrap();
        let k1 = &mut rest[0];
        self.system.rhs(&self.stage, k1);
        self.stats.rhs_evals += 1;
        let diff: Vec<Complex64> = k1.iter().zip(k0.iter()).map(|(a, b)| a - b).collect();
        let d2 = rms(&diff) / h0;
        let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / order)
        };
        (100.0 * h0).min(h1).min(span)
    }
}

/// `out = y + h * sum_j a_j k_j`, fused into one pass over memory.
fn fill_stage(out: &mut [Complex64], y: &[Complex64], k: &[Vec<Complex64>], a: &[(usize, f64)], h: f64) {
    match a.len() {
        0 => out.copy_from_slice(y),
        1 => {
            let (j0, a0) = (a[0].0, a[0].1 * h);
            let k0 = &k[j0];
            for i in 0..out.len() {
                out[i] = y[i] + k0[i] * a0;
            }
        }
        2 => {
            let (k0, a0) = (&k[a[0].0], a[0].1 * h);
            let (k1, a1) = (&k[a[1].0], a[1].1 * h);
            for i in 0..out.len() {
                out[i] = y[i] + k0[i] * a0 + k1[i] * a1;
            }
        }
        _ => {
            // chunked so the partial sums stay in cache
            const CHUNK: usize = 1024;
            let coeffs: Vec<(usize, f64)> = a.iter().map(|&(j, v)| (j, v * h)).collect();
            let n = out.len();
            let mut start = 0;
            while start < n {
                let end = (start + CHUNK).min(n);
                out[start..end].copy_from_slice(&y[start..end]);
                for &(j, c) in &coeffs {
                    let kj = &k[j][start..end];
                    for (o, v) in out[start..end].iter_mut().zip(kj) {
                        *o += v * c;
                    }
                }
                start = end;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// y' = -i w y + (-g) y, solution exp((-i w - g) t)
    struct Oscillator {
        w: f64,
        g: f64,
    }

    impl OdeSystem for Oscillator {
        fn len(&self) -> usize {
            1
        }
        fn rhs(&mut self, y: &[Complex64], dy: &mut [Complex64]) {
            dy[0] = Complex64::new(-self.g, -self.w) * y[0];
        }
    }

    fn run(method: Method) -> (Complex64, IntegratorStats) {
        let control = StepControl {
            method,
            ..StepControl::default()
        };
        let mut int = Integrator::new(Oscillator { w: 3.0, g: 0.1 }, control).unwrap();
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let mut t = 0.0;
        for s in 1..=20 {
            int.advance(&mut y, &mut t, s as f64 * 0.5).unwrap();
            assert_eq!(t, s as f64 * 0.5);
        }
        (y[0], int.stats())
    }

    #[test]
    fn both_methods_hit_tolerance() {
        let exact = (Complex64::new(-0.1, -3.0) * 10.0).exp();
        for method in [Method::Dopri5, Method::Dop853] {
            let (y, stats) = run(method);
            assert!((y - exact).norm() < 1e-7, "{method:?}: {}", (y - exact).norm());
            assert!(stats.accepted > 0);
        }
    }

    #[test]
    fn higher_order_takes_fewer_steps() {
        let (_, s5) = run(Method::Dopri5);
        let (_, s8) = run(Method::Dop853);
        assert!(s8.accepted < s5.accepted, "{s8:?} vs {s5:?}");
    }

    #[test]
    fn rejects_bad_tolerances() {
        let control = StepControl {
            rtol: 0.0,
            atol: 0.0,
            ..StepControl::default()
        };
        assert!(Integrator::new(Oscillator { w: 1.0, g: 0.0 }, control).is_err());
    }

    #[test]
    fn step_underflow_is_reported() {
        struct Blowup;
        impl OdeSystem for Blowup {
            fn len(&self) -> usize {
                1
            }
            fn rhs(&mut self, y: &[Complex64], dy: &mut [Complex64]) {
                dy[0] = y[0] * y[0] * y[0] * 1e3;
            }
        }
        let mut int = Integrator::new(Blowup, StepControl::default()).unwrap();
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let mut t = 0.0;
        let err = int.advance(&mut y, &mut t, 1.0).unwrap_err();
        assert!(matches!(err, Error::StepSizeUnderflow { .. } | Error::TooManySteps { .. }));
    }
}
