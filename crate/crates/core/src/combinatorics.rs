//! Closed-form state counting for collective spin ensembles.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::spin::Spin;

/// Binomial coefficient `C(n, k)`, zero for `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Number of dark states among `N_x` molecular excitations of `N`
/// two-level molecules: `C(N, N_x) - C(N, N_x - 1)`, clamped at zero.
pub fn dark_state_count(n: u64, n_x: u64) -> Result<BigUint> {
    if n == 0 || n_x > n {
        return Err(Error::InvalidArgument(format!(
            "dark_state_count needs N >= 1 and 0 <= N_x <= N (got N = {n}, N_x = {n_x})"
        )));
    }
    if n_x == 0 {
        return Ok(BigUint::one());
    }
    let hi = binomial(n, n_x);
    let lo = binomial(n, n_x - 1);
    Ok(if hi > lo { hi - lo } else { BigUint::zero() })
}

/// Exact ratio `N_DS(N, N/2 - S) / N_DS(N, N_x)` of dark-polariton
/// progenitors in the S sector to dark states of the manifold.
pub fn dark_polariton_ratio_exact(n: u64, n_x: u64, s: Spin) -> Result<BigRational> {
    let doubled = s.doubled() as u64;
    // N/2 - N_x < S < N/2 in doubled units
    let lower_ok = n < doubled + 2 * n_x;
    if n_x > n || doubled >= n || !lower_ok || !(n - doubled).is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "S = {s} is not a dark-polariton sector of N = {n}, N_x = {n_x}"
        )));
    }
    let progenitor = (n - doubled) / 2;
    let num = dark_state_count(n, progenitor)?;
    let den = dark_state_count(n, n_x)?;
    if den.is_zero() {
        return Err(Error::InvalidArgument(format!(
            "manifold N_x = {n_x} of N = {n} has no dark states"
        )));
    }
    Ok(BigRational::new(BigInt::from(num), BigInt::from(den)))
}

/// Large-N approximation `(c / (1 - c))^i` of the ratio for the sector
/// `i = N_x - (N/2 - S)` levels above the manifold's dark states.
pub fn dark_polariton_ratio_approx(c: f64, i: u32) -> Result<f64> {
    if !(0.0..1.0).contains(&c) {
        return Err(Error::InvalidArgument(format!(
            "relative excitation must lie in [0, 1), got {c}"
        )));
    }
    if i == 0 {
        return Err(Error::InvalidArgument("sector index i must be at least 1".into()));
    }
    Ok((c / (1.0 - c)).powi(i as i32))
}

/// `sqrt(8 g^2 S + delta^2)`.
pub fn rabi_splitting(g_c: f64, s: Spin, detuning: f64) -> Result<f64> {
    if g_c.is_nan() || g_c < 0.0 {
        return Err(Error::InvalidArgument(format!("g_c must be non-negative, got {g_c}")));
    }
    Ok((8.0 * g_c * g_c * s.value() + detuning * detuning).sqrt())
}

/// Rabi splitting of the lowest dark-polariton sector relative to the
/// fully symmetric one, `sqrt(1 - 2c)`.
pub fn relative_rabi(c: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&c) {
        return Err(Error::InvalidArgument(format!(
            "relative excitation must lie in [0, 0.5], got {c}"
        )));
    }
    Ok((1.0 - 2.0 * c).sqrt())
}

/// Number of basis states with at most `n_exc` excitations.
pub fn manifold_dimension(n: u64, n_exc: u64, levels: u8) -> Result<BigUint> {
    if n_exc > n {
        return Err(Error::InvalidArgument(format!(
            "N_exc = {n_exc} exceeds N = {n}"
        )));
    }
    if levels != 2 && levels != 3 {
        return Err(Error::InvalidArgument(format!("levels must be 2 or 3, got {levels}")));
    }
    let mut total = BigUint::zero();
    for m in 0..=n_exc {
        for k in 0..=m {
            let ways = if levels == 3 {
                BigUint::one() << k
            } else {
                BigUint::one()
            };
            total += ways * binomial(n, k);
        }
    }
    Ok(total)
}

/// Float value of a rational.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(8, 3), BigUint::from(56u32));
        assert_eq!(binomial(8, 9), BigUint::zero());
        assert_eq!(binomial(0, 0), BigUint::one());
        assert_eq!(binomial(1000, 500).to_string().len(), 300);
    }

    #[test]
    fn dark_counts() {
        assert_eq!(dark_state_count(8, 1).unwrap(), BigUint::from(7u32));
        assert_eq!(dark_state_count(8, 2).unwrap(), BigUint::from(20u32));
        assert_eq!(dark_state_count(8, 4).unwrap(), BigUint::from(14u32));
        assert_eq!(dark_state_count(8, 0).unwrap(), BigUint::one());
        assert_eq!(dark_state_count(8, 5).unwrap(), BigUint::zero());
        assert!(dark_state_count(8, 9).is_err());
    }

    #[test]
    fn ratios() {
        let r = dark_polariton_ratio_exact(8, 3, Spin::from_integer(2)).unwrap();
        assert_eq!(r, BigRational::new(5.into(), 7.into()));
        let r = dark_polariton_ratio_exact(8, 3, Spin::from_integer(3)).unwrap();
        assert_eq!(r, BigRational::new(1.into(), 4.into()));
        assert!(dark_polariton_ratio_exact(8, 3, Spin::from_integer(1)).is_err());
        assert!(dark_polariton_ratio_exact(8, 3, Spin::from_integer(4)).is_err());
        assert!(dark_polariton_ratio_exact(8, 3, Spin::from_doubled(5)).is_err());
    }

    #[test]
    fn approximations() {
        assert!((dark_polariton_ratio_approx(0.01, 1).unwrap() - 0.010101).abs() < 1e-6);
        assert_eq!(dark_polariton_ratio_approx(0.0, 3).unwrap(), 0.0);
        assert!((dark_polariton_ratio_approx(0.375, 1).unwrap() - 0.6).abs() < 1e-15);
        assert!(dark_polariton_ratio_approx(1.0, 1).is_err());
        assert!((relative_rabi(0.01).unwrap() - 0.98995).abs() < 1e-5);
        assert_eq!(relative_rabi(0.5).unwrap(), 0.0);
        assert!(relative_rabi(0.6).is_err());
    }

    #[test]
    fn rabi_values() {
        let g = 0.5 / 8f64.sqrt();
        assert!((rabi_splitting(g, Spin::from_integer(4), 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((rabi_splitting(g, Spin::from_integer(3), 0.0).unwrap() - 0.75f64.sqrt()).abs() < 1e-15);
        assert_eq!(rabi_splitting(0.0, Spin::from_integer(4), -0.2).unwrap(), 0.2);
    }

    #[test]
    fn dimensions() {
        assert_eq!(manifold_dimension(8, 3, 2).unwrap(), BigUint::from(140u32));
        assert_eq!(manifold_dimension(8, 3, 3).unwrap(), BigUint::from(724u32));
        assert_eq!(manifold_dimension(5, 0, 3).unwrap(), BigUint::one());
        assert!(manifold_dimension(3, 4, 2).is_err());
    }
}
