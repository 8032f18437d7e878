//! Lindblad dynamics of the cavity-molecule ensemble.
//!
//! `d rho/dt = -i [H, rho] / hbar + kappa D[a] rho + Gamma sum_i D[sigma_i^-] rho`
//! with `D[L] rho = L rho L^dag - {L^dag L, rho} / 2`.

mod integrator;
mod kernel;
mod tableau;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

pub use integrator::{Integrator, IntegratorStats, Method, OdeSystem, StepControl};
pub use kernel::LindbladGenerator;

use crate::basis::{BasisSet, BasisState, MoleculeLevel};
use crate::error::{Error, Result};
use crate::operators::{build_observables, SparseOperator};
use crate::spectrum::ClassifiedSpectrum;
use crate::spin::Spin;
use crate::units::HBAR_EV_FS;

/// Dense density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    values: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn from_matrix(values: DMatrix<Complex64>) -> Result<Self> {
        if !values.is_square() {
            return Err(Error::DimensionMismatch {
                expected: values.nrows(),
                found: values.ncols(),
            });
        }
        Ok(Self { values })
    }

    /// `|psi><psi|` for a normalized vector.
    pub fn from_pure(psi: &[Complex64]) -> Self {
        let n = psi.len();
        Self {
            values: DMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj()),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.values
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.values
    }

    pub fn trace(&self) -> f64 {
        self.values.diagonal().iter().map(|z| z.re).sum()
    }

    /// Tr(rho^2) for Hermitian rho.
    pub fn purity(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest `|rho_ij - conj(rho_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.values[(i, j)] - self.values[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.values)
    }
}

fn min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let ev = if herm.iter().all(|z| z.im == 0.0) {
        SymmetricEigen::new(herm.map(|z| z.re)).eigenvalues
    } else {
        SymmetricEigen::new(herm).eigenvalues
    };
    ev.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Photon-free basis states with exactly `k` molecules in `target`, all
/// others in `g`.
fn bare_states(basis: &BasisSet, target: MoleculeLevel, k: usize) -> Result<Vec<usize>> {
    let n = basis.n_molecules();
    if target == MoleculeLevel::G {
        return Err(Error::InvalidArgument("initial target must be E or T".into()));
    }
    if target == MoleculeLevel::T && basis.levels() != 3 {
        return Err(Error::InvalidArgument(
            "T excitations need a three-level basis".into(),
        ));
    }
    if k > n || k as u32 > basis.n_max() {
        return Err(Error::InvalidArgument(format!(
            "{k} excitations exceed the basis cutoff {}",
            basis.n_max()
        )));
    }
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let occ = (0..n)
            .map(|i| {
                if mask >> i & 1 == 1 {
                    target
                } else {
                    MoleculeLevel::G
                }
            })
            .collect();
        out.push(basis.index_of(&BasisState::new(occ, 0))?);
    }
    out.sort_unstable();
    Ok(out)
}

/// Equal-amplitude superposition of every photon-free configuration with
/// `k` molecules in `target`.
pub fn pure_initial_state(basis: &BasisSet, target: MoleculeLevel, k: usize) -> Result<DensityMatrix> {
    let idx = bare_states(basis, target, k)?;
    let amp = Complex64::new(1.0 / (idx.len() as f64).sqrt(), 0.0);
    let mut psi = vec![Complex64::zero(); basis.len()];
    for i in idx {
        psi[i] = amp;
    }
    Ok(DensityMatrix::from_pure(&psi))
}

/// Equal-weight classical mixture of the same configurations.
pub fn mixed_initial_state(basis: &BasisSet, target: MoleculeLevel, k: usize) -> Result<DensityMatrix> {
    let idx = bare_states(basis, target, k)?;
    let w = Complex64::new(1.0 / idx.len() as f64, 0.0);
    let mut m = DMatrix::zeros(basis.len(), basis.len());
    for i in idx {
        m[(i, i)] = w;
    }
    DensityMatrix::from_matrix(m)
}

/// Hamiltonian plus the two dissipative channels.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    pub hamiltonian: SparseOperator,
    /// Cavity decay rate (fs^-1).
    pub kappa: f64,
    /// Spontaneous emission rate of `e` (fs^-1).
    pub gamma: f64,
    pub annihilation: SparseOperator,
    pub sigma_minus: Vec<SparseOperator>,
    /// Index ranges of the excitation manifolds.
    pub manifolds: Vec<Range<usize>>,
}

impl LindbladModel {
    pub fn new(basis: &BasisSet, hamiltonian: SparseOperator, kappa: f64, gamma: f64) -> Result<Self> {
        let obs = build_observables(basis)?;
        Self::from_parts(
            hamiltonian,
            kappa,
            gamma,
            obs.annihilation,
            obs.sigma_minus,
            basis.manifold_ranges(),
        )
    }

    pub fn from_parts(
        hamiltonian: SparseOperator,
        kappa: f64,
        gamma: f64,
        annihilation: SparseOperator,
        sigma_minus: Vec<SparseOperator>,
        manifolds: Vec<Range<usize>>,
    ) -> Result<Self> {
        for (name, rate) in [("kappa", kappa), ("gamma", gamma)] {
            if !(rate.is_finite() && rate >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be a non-negative rate, got {rate}"
                )));
            }
        }
        let dim = hamiltonian.dim();
        for op in std::iter::once(&annihilation).chain(&sigma_minus) {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: op.dim(),
                });
            }
        }
        let deviation = hamiltonian.hermitian_deviation();
        if deviation > 0.0 {
            return Err(Error::NonHermitian { deviation });
        }
        Ok(Self {
            hamiltonian,
            kappa,
            gamma,
            annihilation,
            sigma_minus,
            manifolds,
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    /// `(rate, L)` for every jump operator.
    pub fn jump_operators(&self) -> Vec<(f64, &SparseOperator)> {
        std::iter::once((self.kappa, &self.annihilation))
            .chain(self.sigma_minus.iter().map(|s| (self.gamma, s)))
            .collect()
    }
}

/// Dense reference evaluation of the master equation right-hand side.
pub fn lindblad_rhs(rho: &DensityMatrix, model: &LindbladModel) -> Result<DMatrix<Complex64>> {
    if rho.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: rho.dim(),
        });
    }
    let r = rho.matrix();
    let h = model.hamiltonian.to_dense();
    let mi = Complex64::new(0.0, -1.0 / HBAR_EV_FS);
    let mut out = (&h * r - r * &h) * mi;
    for (rate, op) in model.jump_operators() {
        if rate == 0.0 {
            continue;
        }
        let l = op.to_dense();
        let ld = l.adjoint();
        let ldl = &ld * &l;
        let term = &l * r * &ld - (&ldl * r + r * &ldl) * Complex64::new(0.5, 0.0);
        out += term * Complex64::new(rate, 0.0);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Character {
    Bright,
    Dark,
}

/// Population group: excitation manifold, photonic character and
/// optionally the cooperation number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey {
    pub n_exc: u32,
    pub s: Option<Spin>,
    pub character: Character,
}

impl GroupKey {
    pub fn new(n_exc: u32, character: Character) -> Self {
        Self {
            n_exc,
            s: None,
            character,
        }
    }

    pub fn with_spin(n_exc: u32, s: Spin, character: Character) -> Self {
        Self {
            n_exc,
            s: Some(s),
            character,
        }
    }

    /// Parses the CSV column name produced by `Display`.
    pub fn parse(name: &str) -> Option<Self> {
        let mut parts = name.split('_');
        let n_exc = parts.next()?.strip_prefix('N')?.parse().ok()?;
        let mut next = parts.next()?;
        let mut s = None;
        if let Some(spin) = next.strip_prefix('S') {
            s = Some(match spin.split_once('/') {
                Some((num, "2")) => Spin::from_doubled(num.parse().ok()?),
                None => Spin::from_integer(spin.parse().ok()?),
                _ => return None,
            });
            next = parts.next()?;
        }
        let character = match next {
            "bright" => Character::Bright,
            "dark" => Character::Dark,
            _ => return None,
        };
        if parts.next().is_some() {
            return None;
        }
        Some(Self {
            n_exc,
            s,
            character,
        })
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ch = match self.character {
            Character::Bright => "bright",
            Character::Dark => "dark",
        };
        match self.s {
            Some(s) => write!(f, "N{}_S{}_{}", self.n_exc, s, ch),
            None => write!(f, "N{}_{}", self.n_exc, ch),
        }
    }
}

/// Projectors onto the eigenspaces of every population group, stored per
/// manifold.
#[derive(Clone, Debug)]
pub struct GroupProjectors {
    manifolds: Vec<Range<usize>>,
    /// per manifold: (key, dense block-local projector)
    groups: Vec<Vec<(GroupKey, DMatrix<Complex64>)>>,
}

impl GroupProjectors {
    /// Builds the projectors from a classified spectrum. With `resolve_spin`
    /// the groups are additionally split by S (two-level models).
    pub fn new(spectrum: &ClassifiedSpectrum, resolve_spin: bool) -> Result<Self> {
        let mut manifolds = Vec::new();
        let mut groups = Vec::new();
        for m in &spectrum.eigensystem.manifolds {
            let records = spectrum.manifold_records(m.n_exc);
            let mut members: BTreeMap<GroupKey, Vec<usize>> = BTreeMap::new();
            for (j, r) in records.iter().enumerate() {
                let character = if r.group.is_dark() {
                    Character::Dark
                } else {
                    Character::Bright
                };
                let key = GroupKey {
                    n_exc: m.n_exc,
                    s: if resolve_spin { r.s } else { None },
                    character,
                };
                members.entry(key).or_default().push(j);
            }
            let d = m.range.len();
            let mut sum = DMatrix::<Complex64>::zeros(d, d);
            let mut here = Vec::new();
            for (key, cols) in members {
                let v = DMatrix::from_fn(d, cols.len(), |r, c| m.vectors[(r, cols[c])]);
                let p = &v * v.adjoint();
                sum += &p;
                here.push((key, p));
            }
            let deviation = (sum - DMatrix::identity(d, d))
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            if deviation > 1e-10 {
                return Err(Error::IncompleteProjectors { deviation });
            }
            manifolds.push(m.range.clone());
            groups.push(here);
        }
        Ok(Self { manifolds, groups })
    }

    pub fn keys(&self) -> Vec<GroupKey> {
        self.groups.iter().flatten().map(|(k, _)| *k).collect()
    }

    pub fn dim(&self) -> usize {
        self.manifolds.last().map(|r| r.end).unwrap_or(0)
    }

    /// Populations `Tr(P rho)`, with manifold-diagonal blocks supplied by
    /// `block(m)` as row-major slices.
    fn populations_from_blocks<'a, F>(&self, mut block: F) -> BTreeMap<GroupKey, f64>
    where
        F: FnMut(usize) -> Option<&'a [Complex64]>,
    {
        let mut out = BTreeMap::new();
        for (m, groups) in self.groups.iter().enumerate() {
            let d = self.manifolds[m].len();
            let rho = block(m);
            for (key, p) in groups {
                let pop = match rho {
                    // Tr(P rho) = sum_ij P_ij rho_ji
                    Some(rho) => {
                        let mut acc = 0.0;
                        for j in 0..d {
                            let col = p.column(j);
                            for i in 0..d {
                                let x = col[i] * rho[j * d + i];
                                acc += x.re;
                            }
                        }
                        acc
                    }
                    None => 0.0,
                };
                out.insert(*key, pop);
            }
        }
        out
    }
}

/// Population of every group for a dense density matrix.
pub fn population_groups(
    rho: &DensityMatrix,
    projectors: &GroupProjectors,
) -> Result<BTreeMap<GroupKey, f64>> {
    if rho.dim() != projectors.dim() {
        return Err(Error::DimensionMismatch {
            expected: projectors.dim(),
            found: rho.dim(),
        });
    }
    let blocks: Vec<Vec<Complex64>> = projectors
        .manifolds
        .iter()
        .map(|r| {
            let mut v = Vec::with_capacity(r.len() * r.len());
            for i in r.clone() {
                for j in r.clone() {
                    v.push(rho.matrix()[(i, j)]);
                }
            }
            v
        })
        .collect();
    Ok(projectors.populations_from_blocks(|m| Some(&blocks[m][..])))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationOptions {
    pub t_end: f64,
    pub sample_dt: f64,
    pub control: StepControl,
    /// Compute the minimum eigenvalue at every `positivity_stride`-th
    /// sample (0 disables the check).
    pub positivity_stride: usize,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            t_end: 1000.0,
            sample_dt: 5.0,
            control: StepControl::default(),
            positivity_stride: 1,
        }
    }
}

/// Worst values of the monitored invariants over a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_trace_drift: f64,
    /// Largest `|rho - rho^dag|` entry seen before symmetrization.
    pub max_hermitian_deviation: f64,
    /// Smallest eigenvalue over the checked samples.
    pub min_eigenvalue: f64,
    /// Largest increase of `<N_exc>` between consecutive samples.
    pub max_excitation_increase: f64,
    /// Largest `|sum of group populations - 1|`.
    pub max_population_defect: f64,
    pub stats: IntegratorStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PopulationTrajectory {
    pub times: Vec<f64>,
    pub groups: BTreeMap<GroupKey, Vec<f64>>,
    pub trace: Vec<f64>,
    pub purity: Vec<f64>,
    pub n_phot: Vec<f64>,
    pub n_e: Vec<f64>,
    pub n_t: Vec<f64>,
    pub n_exc: Vec<f64>,
    pub diagnostics: Diagnostics,
    /// State at the last sample.
    pub final_state: DensityMatrix,
}

impl PopulationTrajectory {
    /// Series of one group; zeros if the group is absent.
    pub fn group(&self, key: &GroupKey) -> Vec<f64> {
        self.groups
            .get(key)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.times.len()])
    }

    /// Sum over groups selected by `filter`.
    pub fn sum_where<F: Fn(&GroupKey) -> bool>(&self, filter: F) -> Vec<f64> {
        let mut out = vec![0.0; self.times.len()];
        for (k, series) in &self.groups {
            if filter(k) {
                for (o, x) in out.iter_mut().zip(series) {
                    *o += x;
                }
            }
        }
        out
    }

    pub fn ground(&self) -> Vec<f64> {
        self.sum_where(|k| k.n_exc == 0)
    }

    /// Photon-free excited population.
    pub fn excited_dark(&self) -> Vec<f64> {
        self.sum_where(|k| k.n_exc > 0 && k.character == Character::Dark)
    }

    /// Index of the sample closest to `t`.
    pub fn sample_index(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &ti) in self.times.iter().enumerate() {
            if (ti - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "time_fs")?;
        for key in self.groups.keys() {
            write!(w, ",{key}")?;
        }
        writeln!(w, ",purity,n_phot,N_e,N_t")?;
        for (i, t) in self.times.iter().enumerate() {
            write!(w, "{t}")?;
            for series in self.groups.values() {
                write!(w, ",{:.12e}", series[i])?;
            }
            writeln!(
                w,
                ",{:.12e},{:.12e},{:.12e},{:.12e}",
                self.purity[i], self.n_phot[i], self.n_e[i], self.n_t[i]
            )?;
        }
        Ok(())
    }
}

/// Integrates the master equation from `rho0` and samples the grouped
/// populations every `sample_dt` (and at `t_end`).
pub fn propagate(
    rho0: &DensityMatrix,
    model: &LindbladModel,
    projectors: &GroupProjectors,
    options: &PropagationOptions,
) -> Result<PopulationTrajectory> {
    if rho0.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: rho0.dim(),
        });
    }
    if projectors.manifolds != model.manifolds {
        return Err(Error::ModelMismatch(
            "group projectors and model use different manifold ranges".into(),
        ));
    }
    if !(options.t_end > 0.0 && options.sample_dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "t_end and sample_dt must be positive (got {} and {})",
            options.t_end, options.sample_dt
        )));
    }

    let seed = LindbladGenerator::populated_pairs(&model.manifolds, rho0.matrix());
    let generator = LindbladGenerator::new(
        &model.hamiltonian,
        &model.jump_operators(),
        model.manifolds.clone(),
        &seed,
    )?;
    let mut y = generator.pack(rho0.matrix())?;
    let mut integrator = Integrator::new(generator, options.control)?;

    let diag = |op: &SparseOperator| -> Vec<f64> { op.diagonal().iter().map(|z| z.re).collect() };
    let obs_diag = {
        let dim = model.dim();
        let n_phot = diag(&model.annihilation.adjoint().mul(&model.annihilation)?);
        let mut n_e = vec![0.0; dim];
        for s in &model.sigma_minus {
            for (i, v) in diag(&s.adjoint().mul(s)?).into_iter().enumerate() {
                n_e[i] += v;
            }
        }
        (n_phot, n_e)
    };

    let n_samples = (options.t_end / options.sample_dt - 1e-9).ceil() as usize;
    let mut times = Vec::with_capacity(n_samples + 1);
    times.push(0.0);
    for k in 1..=n_samples {
        times.push((k as f64 * options.sample_dt).min(options.t_end));
    }

    let mut recorder = Recorder::new(projectors, &obs_diag.0, &obs_diag.1, model, times.len());
    let mut t = 0.0;
    for (i, &target) in times.iter().enumerate() {
        integrator.advance(&mut y, &mut t, target)?;
        t = target;
        let dev = integrator.system().symmetrize(&mut y);
        integrator.invalidate();
        let check_positivity =
            options.positivity_stride > 0 && i % options.positivity_stride == 0;
        recorder.record(integrator.system(), &y, t, dev, check_positivity)?;
    }
    let final_state = DensityMatrix::from_matrix(integrator.system().unpack(&y))?;
    let mut traj = recorder.finish(times, final_state);
    traj.diagnostics.stats = integrator.stats();
    Ok(traj)
}

struct Recorder<'a> {
    projectors: &'a GroupProjectors,
    n_phot: &'a [f64],
    n_e: &'a [f64],
    n_t: Vec<f64>,
    groups: BTreeMap<GroupKey, Vec<f64>>,
    trace: Vec<f64>,
    purity: Vec<f64>,
    phot: Vec<f64>,
    exc_e: Vec<f64>,
    exc_t: Vec<f64>,
    exc: Vec<f64>,
    diagnostics: Diagnostics,
}

impl<'a> Recorder<'a> {
    fn new(
        projectors: &'a GroupProjectors,
        n_phot: &'a [f64],
        n_e: &'a [f64],
        model: &LindbladModel,
        capacity: usize,
    ) -> Self {
        // N_t = N_exc - N_e - n on every basis state
        let mut n_t = vec![0.0; model.dim()];
        for (m, r) in model.manifolds.iter().enumerate() {
            for i in r.clone() {
                n_t[i] = m as f64 - n_e[i] - n_phot[i];
            }
        }
        Self {
            projectors,
            n_phot,
            n_e,
            n_t,
            groups: projectors
                .keys()
                .into_iter()
                .map(|k| (k, Vec::with_capacity(capacity)))
                .collect(),
            trace: Vec::with_capacity(capacity),
            purity: Vec::with_capacity(capacity),
            phot: Vec::with_capacity(capacity),
            exc_e: Vec::with_capacity(capacity),
            exc_t: Vec::with_capacity(capacity),
            exc: Vec::with_capacity(capacity),
            diagnostics: Diagnostics {
                max_trace_drift: 0.0,
                max_hermitian_deviation: 0.0,
                min_eigenvalue: f64::INFINITY,
                max_excitation_increase: 0.0,
                max_population_defect: 0.0,
                stats: IntegratorStats::default(),
            },
        }
    }

    fn record(
        &mut self,
        gen: &LindbladGenerator,
        y: &[Complex64],
        t: f64,
        hermitian_deviation: f64,
        check_positivity: bool,
    ) -> Result<()> {
        let blocks = gen.blocks();
        let diag_blocks: Vec<Option<&[Complex64]>> =
            (0..blocks.len()).map(|m| gen.pair_slice(y, m, m)).collect();

        let (mut tr, mut phot, mut e, mut tt, mut exc) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (m, r) in blocks.iter().enumerate() {
            if let Some(b) = diag_blocks[m] {
                let d = r.len();
                for (local, i) in r.clone().enumerate() {
                    let p = b[local * d + local].re;
                    tr += p;
                    phot += p * self.n_phot[i];
                    e += p * self.n_e[i];
                    tt += p * self.n_t[i];
                    exc += p * m as f64;
                }
            }
        }
        let drift = (tr - 1.0).abs();
        if drift > 1e-6 {
            return Err(Error::TraceDrift { t, drift });
        }
        let purity: f64 = y.iter().map(|z| z.norm_sqr()).sum();
        let pops = self.projectors.populations_from_blocks(|m| diag_blocks[m]);
        let total: f64 = pops.values().sum();

        let d = &mut self.diagnostics;
        d.max_trace_drift = d.max_trace_drift.max(drift);
        d.max_hermitian_deviation = d.max_hermitian_deviation.max(hermitian_deviation);
        d.max_population_defect = d.max_population_defect.max((total - 1.0).abs());
        if let Some(&prev) = self.exc.last() {
            d.max_excitation_increase = d.max_excitation_increase.max(exc - prev);
        }
        if check_positivity {
            d.min_eigenvalue = d.min_eigenvalue.min(state_min_eigenvalue(gen, y));
        }

        for (k, v) in pops {
            self.groups.get_mut(&k).expect("projector keys are fixed").push(v);
        }
        self.trace.push(tr);
        self.purity.push(purity);
        self.phot.push(phot);
        self.exc_e.push(e);
        self.exc_t.push(tt);
        self.exc.push(exc);
        Ok(())
    }

    fn finish(self, times: Vec<f64>, final_state: DensityMatrix) -> PopulationTrajectory {
        PopulationTrajectory {
            times,
            groups: self.groups,
            trace: self.trace,
            purity: self.purity,
            n_phot: self.phot,
            n_e: self.exc_e,
            n_t: self.exc_t,
            n_exc: self.exc,
            diagnostics: self.diagnostics,
            final_state,
        }
    }
}

/// Minimum eigenvalue of the packed state: block by block when no
/// coherences between manifolds are present.
fn state_min_eigenvalue(gen: &LindbladGenerator, y: &[Complex64]) -> f64 {
    let block_diagonal = gen.pairs().iter().all(|p| p.row_block == p.col_block);
    if !block_diagonal {
        return min_eigenvalue(&gen.unpack(y));
    }
    let mut min = f64::INFINITY;
    for (m, r) in gen.blocks().iter().enumerate() {
        if let Some(b) = gen.pair_slice(y, m, m) {
            let d = r.len();
            let mat = DMatrix::from_row_slice(d, d, b);
            min = min.min(min_eigenvalue(&mat));
        }
    }
    min
}

/// Manifold pairs populated by `rho`.
pub fn populated_manifold_pairs(model: &LindbladModel, rho: &DensityMatrix) -> BTreeSet<(usize, usize)> {
    LindbladGenerator::populated_pairs(&model.manifolds, rho.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::enumerate_basis;
    use crate::operators::{build_hamiltonian, ModelParameters};
    use MoleculeLevel::*;

    fn model(n: usize, levels: u8, n_max: u32, kappa: f64, gamma: f64) -> (BasisSet, LindbladModel) {
        let basis = enumerate_basis(n, levels, n_max).unwrap();
        let h = build_hamiltonian(&ModelParameters::resonant_defaults(n), &basis).unwrap();
        let model = LindbladModel::new(&basis, h, kappa, gamma).unwrap();
        (basis, model)
    }

    #[test]
    fn pure_state_components() {
        let basis = enumerate_basis(8, 2, 3).unwrap();
        let rho = pure_initial_state(&basis, E, 3).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-14);
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        let nonzero_diag = rho.matrix().diagonal().iter().filter(|z| z.re > 0.0).count();
        assert_eq!(nonzero_diag, 56);
    }

    #[test]
    fn mixed_state_purity() {
        let basis = enumerate_basis(8, 2, 3).unwrap();
        let rho = mixed_initial_state(&basis, E, 3).unwrap();
        assert!((rho.purity() - 1.0 / 56.0).abs() < 1e-14);
    }

    #[test]
    fn single_component_pure_equals_mixed() {
        let basis = enumerate_basis(1, 2, 1).unwrap();
        let pure = pure_initial_state(&basis, E, 1).unwrap();
        let mixed = mixed_initial_state(&basis, E, 1).unwrap();
        assert_eq!(pure, mixed);
        let idx = basis.index_of(&BasisState::new(vec![E], 0)).unwrap();
        assert_eq!(pure.matrix()[(idx, idx)], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn initial_state_errors() {
        let basis = enumerate_basis(4, 2, 2).unwrap();
        assert!(pure_initial_state(&basis, E, 3).is_err());
        assert!(pure_initial_state(&basis, T, 1).is_err());
        assert!(mixed_initial_state(&basis, G, 1).is_err());
    }

    #[test]
    fn ground_state_is_stationary() {
        let (basis, model) = model(3, 2, 2, 0.02, 0.001);
        let mut m = DMatrix::zeros(basis.len(), basis.len());
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        let rhs = lindblad_rhs(&DensityMatrix::from_matrix(m).unwrap(), &model).unwrap();
        assert!(rhs.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn photon_decay_rate() {
        let basis = enumerate_basis(2, 2, 1).unwrap();
        let h = SparseOperator::zeros(basis.len());
        let model = LindbladModel::new(&basis, h, 0.02, 0.0).unwrap();
        let i = basis.index_of(&BasisState::new(vec![G, G], 1)).unwrap();
        let mut m = DMatrix::zeros(basis.len(), basis.len());
        m[(i, i)] = Complex64::new(1.0, 0.0);
        let rhs = lindblad_rhs(&DensityMatrix::from_matrix(m).unwrap(), &model).unwrap();
        assert!((rhs[(i, i)].re + 0.02).abs() < 1e-15);
        assert!((rhs[(0, 0)].re - 0.02).abs() < 1e-15);
    }

    #[test]
    fn rhs_trace_free_and_hermitian() {
        let (basis, model) = model(3, 3, 2, 0.02, 0.001);
        let rho = pure_initial_state(&basis, E, 2).unwrap();
        let rhs = lindblad_rhs(&rho, &model).unwrap();
        assert!(rhs.trace().norm() < 1e-14);
        assert!((&rhs - rhs.adjoint()).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn kernel_matches_dense_rhs() {
        let (basis, model) = model(3, 3, 2, 0.02, 0.003);
        let mut rho = pure_initial_state(&basis, E, 2).unwrap().into_matrix();
        // add coherences with lower manifolds to exercise off-diagonal pairs
        let n = basis.len();
        for i in 0..n {
            for j in 0..n {
                rho[(i, j)] += Complex64::new(0.01 * ((i + 2 * j) % 5) as f64, 0.003 * (i as f64 - j as f64));
            }
        }
        let rho = DensityMatrix::from_matrix(&rho + rho.adjoint()).unwrap();
        let expected = lindblad_rhs(&rho, &model).unwrap();
        let seed = populated_manifold_pairs(&model, &rho);
        let mut gen = LindbladGenerator::new(
            &model.hamiltonian,
            &model.jump_operators(),
            model.manifolds.clone(),
            &seed,
        )
        .unwrap();
        let y = gen.pack(rho.matrix()).unwrap();
        let mut dy = vec![Complex64::zero(); y.len()];
        gen.rhs(&y, &mut dy);
        let got = gen.unpack(&dy);
        let err = (&got - &expected).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "max deviation {err}");
    }

    #[test]
    fn group_key_names_round_trip() {
        for key in [
            GroupKey::new(3, Character::Bright),
            GroupKey::with_spin(2, Spin::from_doubled(3), Character::Dark),
            GroupKey::with_spin(0, Spin::from_integer(4), Character::Dark),
        ] {
            assert_eq!(GroupKey::parse(&key.to_string()), Some(key));
        }
        assert_eq!(GroupKey::parse("N3_purple"), None);
    }
}
