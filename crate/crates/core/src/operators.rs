//! Hamiltonians and observables on a [`BasisSet`], stored as sparse
//! matrices in row-major coordinate order.

use std::collections::BTreeMap;
use std::io::Write;
use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSet, BasisState, MoleculeLevel};
use crate::dynamics::DensityMatrix;
use crate::error::{Error, Result};
use crate::exact::ExactSum;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Sparse square matrix with sorted, duplicate-free entries (CSR layout).
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseOperator {
    /// Builds an operator from unordered triplets. Duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        let mut t: Vec<(usize, usize, Complex64)> = triplets.into_iter().collect();
        t.sort_by_key(|a| (a.0, a.1));

        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals = Vec::with_capacity(t.len());
        let mut rows = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            assert!(r < dim && c < dim, "entry ({r}, {c}) outside dimension {dim}");
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
            }
        }
        let mut keep_cols = Vec::with_capacity(cols.len());
        let mut keep_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v != ZERO {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            dim,
            row_ptr,
            cols: keep_cols,
            vals: keep_vals,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_triplets(dim, std::iter::empty())
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self::from_triplets(
            diag.len(),
            diag.iter()
                .enumerate()
                .map(|(i, &d)| (i, i, Complex64::new(d, 0.0))),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Entries in canonical (row, column) order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    /// Entries of one row as `(column, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.iter().map(|(r, c, v)| (c, r, v.conj())))
    }

    /// max |A_ij - conj(A_ji)|
    pub fn hermitian_deviation(&self) -> f64 {
        self.iter()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() == 0.0
    }

    pub fn is_real(&self) -> bool {
        self.vals.iter().all(|v| v.im == 0.0)
    }

    pub fn is_diagonal(&self) -> bool {
        self.iter().all(|(r, c, _)| r == c)
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    /// Restriction to the index window `range x range`.
    pub fn submatrix(&self, range: Range<usize>) -> Self {
        let start = range.start;
        let n = range.len();
        Self::from_triplets(
            n,
            range.clone().flat_map(|r| {
                self.row(r)
                    .filter(|(c, _)| range.contains(c))
                    .map(move |(c, v)| (r - start, c - start, v))
            }),
        )
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_triplets(self.dim, self.iter().map(|(r, c, v)| (r, c, v * s)))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim)?;
        Ok(Self::from_triplets(self.dim, self.iter().chain(other.iter())))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim)?;
        Ok(Self::from_triplets(
            self.dim,
            self.iter().chain(other.iter().map(|(r, c, v)| (r, c, -v))),
        ))
    }

    /// Sparse product `self * other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim)?;
        let mut out = Vec::new();
        let mut acc: BTreeMap<usize, Complex64> = BTreeMap::new();
        for r in 0..self.dim {
            acc.clear();
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    *acc.entry(c).or_insert(ZERO) += a * b;
                }
            }
            out.extend(acc.iter().map(|(&c, &v)| (r, c, v)));
        }
        Ok(Self::from_triplets(self.dim, out))
    }

    /// `self * other - other * self`, with every entry evaluated in exact
    /// arithmetic and rounded once at the end. An entry is `0.0` exactly
    /// when the commutator of the stored matrices vanishes there.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim)?;
        let mut out = Vec::new();
        let mut acc: BTreeMap<usize, (ExactSum, ExactSum)> = BTreeMap::new();
        let push = |acc: &mut BTreeMap<usize, (ExactSum, ExactSum)>,
                        c: usize,
                        a: Complex64,
                        b: Complex64,
                        sign: f64| {
            let e = acc.entry(c).or_default();
            e.0.add_product(sign * a.re, b.re);
            e.0.add_product(-sign * a.im, b.im);
            e.1.add_product(sign * a.re, b.im);
            e.1.add_product(sign * a.im, b.re);
        };
        for r in 0..self.dim {
            acc.clear();
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    push(&mut acc, c, a, b, 1.0);
                }
            }
            for (k, b) in other.row(r) {
                for (c, a) in self.row(k) {
                    push(&mut acc, c, b, a, -1.0);
                }
            }
            for (&c, (re, im)) in acc.iter() {
                if !(re.is_zero() && im.is_zero()) {
                    out.push((r, c, Complex64::new(re.value(), im.value())));
                }
            }
        }
        Ok(Self::from_triplets(self.dim, out))
    }

    /// Dense vector product `self * v`.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|r| self.row(r).map(|(c, a)| a * v[c]).sum())
            .collect()
    }

    /// `<v| self |v>`
    pub fn quadratic_form(&self, v: &[Complex64]) -> Complex64 {
        (0..self.dim)
            .map(|r| v[r].conj() * self.row(r).map(|(c, a)| a * v[c]).sum::<Complex64>())
            .sum()
    }

    /// MatrixMarket coordinate export (1-based, every stored entry listed).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate complex general")?;
        writeln!(w, "{} {} {}", self.dim, self.dim, self.nnz())?;
        for (r, c, v) in self.iter() {
            writeln!(w, "{} {} {:e} {:e}", r + 1, c + 1, v.re, v.im)?;
        }
        Ok(())
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found,
            });
        }
        Ok(())
    }
}

/// Energies in eV. `omega_tg` and `c_et` are only used by the three-level
/// Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParameters {
    pub n_molecules: usize,
    pub omega_eg: f64,
    pub omega_c: f64,
    /// Single-molecule cavity coupling.
    pub g_c: f64,
    #[serde(default)]
    pub omega_tg: f64,
    #[serde(default)]
    pub c_et: f64,
}

impl ModelParameters {
    /// Resonant cavity at 4.3 eV with collective coupling `g_c sqrt(N) = 0.5`
    /// eV; `t` sits 0.4 eV below `e` and couples to it with 0.05 eV.
    pub fn resonant_defaults(n_molecules: usize) -> Self {
        Self {
            n_molecules,
            omega_eg: 4.3,
            omega_c: 4.3,
            g_c: 0.5 / (n_molecules as f64).sqrt(),
            omega_tg: 3.9,
            c_et: 0.05,
        }
    }

    pub fn collective_coupling(&self) -> f64 {
        self.g_c * (self.n_molecules as f64).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega_eg", self.omega_eg),
            ("omega_c", self.omega_c),
            ("g_c", self.g_c),
            ("omega_tg", self.omega_tg),
            ("c_et", self.c_et),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be finite, got {v}")));
            }
        }
        if self.g_c < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "g_c must be non-negative, got {}",
                self.g_c
            )));
        }
        if self.n_molecules == 0 {
            return Err(Error::InvalidArgument("n_molecules must be positive".into()));
        }
        Ok(())
    }

    fn check_basis(&self, basis: &BasisSet) -> Result<()> {
        self.validate()?;
        if basis.n_molecules() != self.n_molecules {
            return Err(Error::ModelMismatch(format!(
                "parameters describe {} molecules, basis has {}",
                self.n_molecules,
                basis.n_molecules()
            )));
        }
        Ok(())
    }
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn with_level(state: &BasisState, i: usize, level: MoleculeLevel) -> BasisState {
    let mut s = state.clone();
    s.occupations[i] = level;
    s
}

/// Diagonal energies plus the `g_c (a^dag S^- + a S^+)` exchange.
fn tc_triplets(params: &ModelParameters, basis: &BasisSet) -> Result<Vec<(usize, usize, Complex64)>> {
    let mut t = Vec::new();
    for (i, s) in basis.states().iter().enumerate() {
        let diag = s.count(MoleculeLevel::E) as f64 * params.omega_eg
            + s.photons as f64 * params.omega_c
            + s.count(MoleculeLevel::T) as f64 * params.omega_tg;
        t.push((i, i, real(diag)));
        if params.g_c == 0.0 {
            continue;
        }
        // |..e_k.., n> -> |..g_k.., n+1>; the reverse direction is pushed as
        // the conjugate so the matrix is Hermitian by construction.
        let coupling = params.g_c * ((s.photons + 1) as f64).sqrt();
        for (k, &level) in s.occupations.iter().enumerate() {
            if level == MoleculeLevel::E {
                let mut target = with_level(s, k, MoleculeLevel::G);
                target.photons += 1;
                let j = basis.index_of(&target)?;
                t.push((i, j, real(coupling)));
                t.push((j, i, real(coupling)));
            }
        }
    }
    Ok(t)
}

/// Two-level Tavis-Cummings Hamiltonian.
pub fn build_tc_hamiltonian(params: &ModelParameters, basis: &BasisSet) -> Result<SparseOperator> {
    params.check_basis(basis)?;
    if basis.levels() != 2 {
        return Err(Error::ModelMismatch(
            "the two-level Hamiltonian needs a two-level basis".into(),
        ));
    }
    Ok(SparseOperator::from_triplets(basis.len(), tc_triplets(params, basis)?))
}

/// Tavis-Cummings Hamiltonian plus the optically dark level `t` at
/// `omega_tg` coupled to `e` by `c_et` on every molecule.
pub fn build_three_level_hamiltonian(
    params: &ModelParameters,
    basis: &BasisSet,
) -> Result<SparseOperator> {
    params.check_basis(basis)?;
    if basis.levels() != 3 {
        return Err(Error::ModelMismatch(
            "the e-t coupling needs a three-level basis".into(),
        ));
    }
    let mut t = tc_triplets(params, basis)?;
    if params.c_et != 0.0 {
        for (i, s) in basis.states().iter().enumerate() {
            for (k, &level) in s.occupations.iter().enumerate() {
                if level == MoleculeLevel::T {
                    let j = basis.index_of(&with_level(s, k, MoleculeLevel::E))?;
                    t.push((i, j, real(params.c_et)));
                    t.push((j, i, real(params.c_et)));
                }
            }
        }
    }
    Ok(SparseOperator::from_triplets(basis.len(), t))
}

/// Builds whichever Hamiltonian matches the basis.
pub fn build_hamiltonian(params: &ModelParameters, basis: &BasisSet) -> Result<SparseOperator> {
    match basis.levels() {
        2 => build_tc_hamiltonian(params, basis),
        _ => build_three_level_hamiltonian(params, basis),
    }
}

/// Observables on a basis. Operators that raise the excitation number are
/// truncated at the basis cutoff; `s_squared` is assembled directly inside
/// each manifold and is therefore exact everywhere.
#[derive(Clone, Debug)]
pub struct ObservableSet {
    pub n_phot: SparseOperator,
    pub n_e: SparseOperator,
    pub n_t: SparseOperator,
    pub n_exc: SparseOperator,
    /// Cavity annihilation operator.
    pub annihilation: SparseOperator,
    pub s_plus: SparseOperator,
    pub s_minus: SparseOperator,
    /// Collective spin of the g/e subspace; `t` occupations are spectators.
    pub s_squared: SparseOperator,
    /// `|g_i><e_i|` for every molecule.
    pub sigma_minus: Vec<SparseOperator>,
}

pub fn build_observables(basis: &BasisSet) -> Result<ObservableSet> {
    let dim = basis.len();
    let states = basis.states();
    let count = |level| {
        states
            .iter()
            .map(|s| s.count(level) as f64)
            .collect::<Vec<_>>()
    };
    let photons: Vec<f64> = states.iter().map(|s| s.photons as f64).collect();
    let n_e = count(MoleculeLevel::E);
    let n_g = count(MoleculeLevel::G);
    let n_t = count(MoleculeLevel::T);
    let n_exc: Vec<f64> = (0..dim).map(|i| n_e[i] + n_t[i] + photons[i]).collect();

    let mut annihilation = Vec::new();
    let mut sigma_minus = vec![Vec::new(); basis.n_molecules()];
    let mut s_minus_s_plus = Vec::new();
    for (i, s) in states.iter().enumerate() {
        if s.photons > 0 {
            let mut target = s.clone();
            target.photons -= 1;
            let j = basis.index_of(&target)?;
            annihilation.push((j, i, real((s.photons as f64).sqrt())));
        }
        for (k, &level) in s.occupations.iter().enumerate() {
            match level {
                MoleculeLevel::E => {
                    let j = basis.index_of(&with_level(s, k, MoleculeLevel::G))?;
                    sigma_minus[k].push((j, i, real(1.0)));
                }
                MoleculeLevel::G => {
                    // S^- S^+ = sum_k sigma_k^- sigma_k^+ + sum_{k != l} sigma_l^- sigma_k^+
                    s_minus_s_plus.push((i, i, real(1.0)));
                    for (l, &other) in s.occupations.iter().enumerate() {
                        if other == MoleculeLevel::E {
                            let mut swapped = with_level(s, k, MoleculeLevel::E);
                            swapped.occupations[l] = MoleculeLevel::G;
                            let j = basis.index_of(&swapped)?;
                            s_minus_s_plus.push((j, i, real(1.0)));
                        }
                    }
                }
                MoleculeLevel::T => {}
            }
        }
    }

    let sigma_minus: Vec<SparseOperator> = sigma_minus
        .into_iter()
        .map(|t| SparseOperator::from_triplets(dim, t))
        .collect();
    let s_minus = SparseOperator::from_triplets(dim, sigma_minus.iter().flat_map(|op| op.iter()));
    let s_plus = s_minus.adjoint();

    let sz_term = (0..dim).map(|i| {
        let sz = 0.5 * (n_e[i] - n_g[i]);
        (i, i, real(sz * (sz + 1.0)))
    });
    let s_squared = SparseOperator::from_triplets(dim, s_minus_s_plus.into_iter().chain(sz_term));

    Ok(ObservableSet {
        n_phot: SparseOperator::from_diagonal(&photons),
        n_e: SparseOperator::from_diagonal(&n_e),
        n_t: SparseOperator::from_diagonal(&n_t),
        n_exc: SparseOperator::from_diagonal(&n_exc),
        annihilation: SparseOperator::from_triplets(dim, annihilation),
        s_plus,
        s_minus,
        s_squared,
        sigma_minus,
    })
}

/// Tr(op rho). The imaginary part must stay below 1e-10.
pub fn expectation(op: &SparseOperator, rho: &DensityMatrix) -> Result<f64> {
    let z = expectation_complex(op, rho)?;
    if z.im.abs() > 1e-10 {
        return Err(Error::ComplexExpectation { imag: z.im });
    }
    Ok(z.re)
}

/// Tr(op rho) without the Hermiticity check, for non-Hermitian operators.
pub fn expectation_complex(op: &SparseOperator, rho: &DensityMatrix) -> Result<Complex64> {
    if op.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: rho.dim(),
        });
    }
    let m = rho.matrix();
    Ok(op.iter().map(|(r, c, v)| v * m[(c, r)]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::enumerate_basis;
    use MoleculeLevel::*;

    fn sorted_eigenvalues(op: &SparseOperator) -> Vec<f64> {
        let dense = op.to_dense().map(|z| z.re);
        let mut ev: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    #[test]
    fn triplets_are_merged_and_sorted() {
        let op = SparseOperator::from_triplets(
            3,
            vec![
                (2, 0, real(1.0)),
                (0, 1, real(2.0)),
                (0, 1, real(3.0)),
                (1, 1, real(0.0)),
            ],
        );
        let entries: Vec<_> = op.iter().collect();
        assert_eq!(entries, vec![(0, 1, real(5.0)), (2, 0, real(1.0))]);
    }

    #[test]
    fn jaynes_cummings_doublet() {
        let basis = enumerate_basis(1, 2, 1).unwrap();
        let p = ModelParameters {
            n_molecules: 1,
            omega_eg: 2.0,
            omega_c: 2.0,
            g_c: 0.1,
            omega_tg: 0.0,
            c_et: 0.0,
        };
        let h = build_tc_hamiltonian(&p, &basis).unwrap();
        let ev = sorted_eigenvalues(&h);
        assert!((ev[0] - 0.0).abs() < 1e-14);
        assert!((ev[1] - 1.9).abs() < 1e-12);
        assert!((ev[2] - 2.1).abs() < 1e-12);
    }

    #[test]
    fn uncoupled_limit_is_diagonal() {
        let basis = enumerate_basis(4, 2, 3).unwrap();
        let mut p = ModelParameters::resonant_defaults(4);
        p.g_c = 0.0;
        p.omega_c = 4.1;
        let h = build_tc_hamiltonian(&p, &basis).unwrap();
        assert!(h.is_diagonal());
        for (i, s) in basis.states().iter().enumerate() {
            let expected = s.count(E) as f64 * 4.3 + s.photons as f64 * 4.1;
            assert_eq!(h.get(i, i).re, expected);
        }
    }

    #[test]
    fn collective_splitting_of_eight_molecules() {
        let basis = enumerate_basis(8, 2, 1).unwrap();
        let h = build_tc_hamiltonian(&ModelParameters::resonant_defaults(8), &basis).unwrap();
        let ev = sorted_eigenvalues(&h);
        assert!((ev[9] - ev[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_level_single_molecule_block() {
        let basis = enumerate_basis(1, 3, 1).unwrap();
        let p = ModelParameters {
            n_molecules: 1,
            omega_eg: 4.3,
            omega_c: 4.3,
            g_c: 0.01,
            omega_tg: 3.9,
            c_et: 0.05,
        };
        let h = build_three_level_hamiltonian(&p, &basis).unwrap();
        let e0 = basis.index_of(&BasisState::new(vec![E], 0)).unwrap();
        let g1 = basis.index_of(&BasisState::new(vec![G], 1)).unwrap();
        let t0 = basis.index_of(&BasisState::new(vec![T], 0)).unwrap();
        let idx = [e0, g1, t0];
        let expected = [
            [4.3, 0.01, 0.05],
            [0.01, 4.3, 0.0],
            [0.05, 0.0, 3.9],
        ];
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(h.get(idx[a], idx[b]), real(expected[a][b]), "({a}, {b})");
            }
        }
    }

    #[test]
    fn three_level_needs_three_level_basis() {
        let basis = enumerate_basis(2, 2, 1).unwrap();
        let p = ModelParameters::resonant_defaults(2);
        assert!(build_three_level_hamiltonian(&p, &basis).is_err());
        let basis3 = enumerate_basis(2, 3, 1).unwrap();
        assert!(build_tc_hamiltonian(&p, &basis3).is_err());
        let wrong_n = ModelParameters::resonant_defaults(3);
        assert!(matches!(
            build_tc_hamiltonian(&wrong_n, &basis),
            Err(Error::ModelMismatch(_))
        ));
    }

    #[test]
    fn decoupled_t_shifts_tc_spectrum() {
        // c_et = 0: each manifold is a union of TC spectra of the molecules
        // left in g/e, shifted by omega_tg per parked molecule.
        let n = 2;
        let mut p = ModelParameters::resonant_defaults(n);
        p.c_et = 0.0;
        let h3 = build_three_level_hamiltonian(&p, &enumerate_basis(n, 3, 2).unwrap()).unwrap();
        let mut expected = Vec::new();
        // k molecules parked in t (C(2,k) ways) leave a TC system of 2-k
        // molecules with an excitation budget of 2-k
        for (k, ways) in [(0usize, 1), (1, 2), (2, 1)] {
            let shift = k as f64 * p.omega_tg;
            let free = n - k;
            for _ in 0..ways {
                if free == 0 {
                    expected.push(shift);
                    continue;
                }
                let mut sub = p.clone();
                sub.n_molecules = free;
                let b = enumerate_basis(free, 2, free as u32).unwrap();
                let h = build_tc_hamiltonian(&sub, &b).unwrap();
                expected.extend(sorted_eigenvalues(&h).into_iter().map(|e| e + shift));
            }
        }
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let got = sorted_eigenvalues(&h3);
        assert_eq!(got.len(), expected.len());
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn number_operators_add_up() {
        let basis = enumerate_basis(3, 3, 3).unwrap();
        let obs = build_observables(&basis).unwrap();
        let sum = obs.n_e.add(&obs.n_t).unwrap().add(&obs.n_phot).unwrap();
        assert_eq!(sum, obs.n_exc);
    }

    #[test]
    fn hamiltonians_conserve_excitations_and_spin() {
        for (levels, n, cutoff) in [(2u8, 6usize, 4u32), (3, 4, 3)] {
            let basis = enumerate_basis(n, levels, cutoff).unwrap();
            let obs = build_observables(&basis).unwrap();
            let h = build_hamiltonian(&ModelParameters::resonant_defaults(n), &basis).unwrap();
            assert!(h.is_hermitian());
            assert_eq!(h.commutator(&obs.n_exc).unwrap().nnz(), 0);
            if levels == 2 {
                assert_eq!(h.commutator(&obs.s_squared).unwrap().max_abs(), 0.0);
            }
        }
    }

    #[test]
    fn s_squared_known_states() {
        let n = 4;
        let basis = enumerate_basis(n, 2, 1).unwrap();
        let obs = build_observables(&basis).unwrap();
        // symmetric single excitation: S = N/2
        let mut v = vec![Complex64::new(0.0, 0.0); basis.len()];
        for k in 0..n {
            let mut s = BasisState::ground(n);
            s.occupations[k] = E;
            v[basis.index_of(&s).unwrap()] = real(1.0 / (n as f64).sqrt());
        }
        let s2 = obs.s_squared.quadratic_form(&v);
        assert!((s2.re - 2.0 * 3.0).abs() < 1e-12);

        // singlet of two molecules
        let basis = enumerate_basis(2, 2, 1).unwrap();
        let obs = build_observables(&basis).unwrap();
        let mut v = vec![Complex64::new(0.0, 0.0); basis.len()];
        v[basis.index_of(&BasisState::new(vec![E, G], 0)).unwrap()] = real(0.5f64.sqrt());
        v[basis.index_of(&BasisState::new(vec![G, E], 0)).unwrap()] = real(-(0.5f64.sqrt()));
        assert!(obs.s_squared.quadratic_form(&v).norm() < 1e-12);
    }

    #[test]
    fn commutator_detects_nonzero() {
        let basis = enumerate_basis(2, 2, 2).unwrap();
        let obs = build_observables(&basis).unwrap();
        // [S^2, n_e] != 0 is false, but [a, n_phot] = a != 0
        let c = obs.annihilation.commutator(&obs.n_phot).unwrap();
        assert_eq!(c, obs.annihilation);
    }

    #[test]
    fn matrix_market_header() {
        let op = SparseOperator::from_diagonal(&[1.0, 2.0]);
        let mut buf = Vec::new();
        op.write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "%%MatrixMarket matrix coordinate complex general");
        assert_eq!(lines[1], "2 2 2");
        assert_eq!(lines[3], "2 2 2e0 0e0");
    }
}
