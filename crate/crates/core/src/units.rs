//! Energies are in eV, times in fs, rates in 1/fs.

/// Reduced Planck constant in eV fs.
pub const HBAR_EV_FS: f64 = 0.6582119569;
