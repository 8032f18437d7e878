//! Manifold-by-manifold diagonalization and eigenstate classification.
//!
//! Eigenvalues closer than [`Tolerances::degeneracy`] form a cluster. Inside
//! a cluster the eigenvectors are rotated so that they also diagonalize
//! `S^2` (two-level models) and then the photon number, which makes the
//! labels independent of the arbitrary basis an eigensolver returns for a
//! degenerate eigenspace.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::operators::{ObservableSet, SparseOperator};
use crate::spin::Spin;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Absolute eigenvalue gap (eV) below which states count as degenerate.
    pub degeneracy: f64,
    /// Largest photon fraction of a dark state.
    pub dark: f64,
    /// Largest allowed distance of `<S^2>` from an S(S+1) lattice point.
    pub spin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            degeneracy: 1e-9,
            dark: 1e-8,
            spin: 1e-6,
        }
    }
}

/// Sorted eigenvalues with orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Eigendecomposition {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

/// Full diagonalization of a Hermitian matrix. Independent diagonal blocks
/// are found from the sparsity pattern and solved separately.
pub fn diagonalize_hermitian(h: &SparseOperator) -> Result<Eigendecomposition> {
    check_hermitian(h)?;
    let blocks = contiguous_blocks(h);
    let parts: Vec<Eigendecomposition> = blocks
        .par_iter()
        .map(|r| dense_eigen(&h.submatrix(r.clone())))
        .collect();

    let dim = h.dim();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(dim);
    for (b, part) in parts.iter().enumerate() {
        pairs.extend(part.values.iter().enumerate().map(|(j, &v)| (v, b, j)));
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut vectors = DMatrix::zeros(dim, dim);
    for (col, &(_, b, j)) in pairs.iter().enumerate() {
        let r = &blocks[b];
        vectors
            .view_mut((r.start, col), (r.len(), 1))
            .copy_from(&parts[b].vectors.column(j));
    }
    Ok(Eigendecomposition {
        values: pairs.iter().map(|p| p.0).collect(),
        vectors,
    })
}

fn check_hermitian(h: &SparseOperator) -> Result<()> {
    let deviation = h.hermitian_deviation();
    if deviation > 1e-12 * h.max_abs().max(1.0) {
        return Err(Error::NonHermitian { deviation });
    }
    Ok(())
}

/// Splits `0..dim` into the finest contiguous ranges that no matrix entry
/// couples.
fn contiguous_blocks(h: &SparseOperator) -> Vec<Range<usize>> {
    let mut blocks = Vec::new();
    let mut start = 0;
    let mut reach = 0;
    for r in 0..h.dim() {
        reach = reach.max(r);
        for (c, _) in h.row(r) {
            reach = reach.max(c);
        }
        if reach == r {
            blocks.push(start..r + 1);
            start = r + 1;
        }
    }
    blocks
}

fn dense_eigen(h: &SparseOperator) -> Eigendecomposition {
    let n = h.dim();
    if n == 0 {
        return Eigendecomposition {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        };
    }
    let (values, vectors) = if h.is_real() {
        let eig = SymmetricEigen::new(h.to_dense().map(|z| z.re));
        (eig.eigenvalues, eig.eigenvectors.map(|x| Complex64::new(x, 0.0)))
    } else {
        let eig = SymmetricEigen::new(h.to_dense());
        (eig.eigenvalues, eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    Eigendecomposition {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors: DMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]),
    }
}

/// Eigenpairs of one excitation manifold, in local (manifold) coordinates.
#[derive(Clone, Debug)]
pub struct ManifoldEigen {
    pub n_exc: u32,
    pub range: Range<usize>,
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub n_molecules: usize,
    pub levels: u8,
    pub manifolds: Vec<ManifoldEigen>,
}

impl Eigensystem {
    pub fn dim(&self) -> usize {
        self.manifolds.last().map(|m| m.range.end).unwrap_or(0)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.manifolds.iter().flat_map(|m| m.values.iter().copied())
    }
}

/// Diagonalizes every excitation manifold of `h` independently.
pub fn diagonalize_manifolds(h: &SparseOperator, basis: &BasisSet) -> Result<Eigensystem> {
    if h.dim() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            found: h.dim(),
        });
    }
    check_hermitian(h)?;
    let excitations = basis.excitations();
    if let Some((r, c, _)) = h.iter().find(|&(r, c, _)| excitations[r] != excitations[c]) {
        return Err(Error::ModelMismatch(format!(
            "Hamiltonian couples manifolds {} and {} (entry {r}, {c})",
            excitations[r], excitations[c]
        )));
    }
    let manifolds = (0..=basis.n_max())
        .into_par_iter()
        .map(|m| {
            let range = basis.manifold_range(m);
            let eig = dense_eigen(&h.submatrix(range.clone()));
            ManifoldEigen {
                n_exc: m,
                range,
                values: eig.values,
                vectors: eig.vectors,
            }
        })
        .collect();
    Ok(Eigensystem {
        n_molecules: basis.n_molecules(),
        levels: basis.levels(),
        manifolds,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Ground,
    Dark,
    MultiPolariton,
    DarkPolariton,
    Unclassified,
}

impl Group {
    pub fn name(self) -> &'static str {
        match self {
            Group::Ground => "ground",
            Group::Dark => "dark",
            Group::MultiPolariton => "multi_polariton",
            Group::DarkPolariton => "dark_polariton",
            Group::Unclassified => "unclassified",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [
            Group::Ground,
            Group::Dark,
            Group::MultiPolariton,
            Group::DarkPolariton,
            Group::Unclassified,
        ]
        .into_iter()
        .find(|g| g.name() == s)
    }

    /// Ground and dark states have no photonic character.
    pub fn is_dark(self) -> bool {
        matches!(self, Group::Ground | Group::Dark)
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenstateRecord {
    pub eigenvalue: f64,
    pub relative_shift: f64,
    pub n_exc: u32,
    pub photon_frac: f64,
    pub t_frac: f64,
    #[serde(rename = "S")]
    pub s: Option<Spin>,
    pub group: Group,
    pub degeneracy_block: usize,
}

/// Eigensystem with degenerate clusters rotated to the classification
/// basis, plus one record per eigenvector (manifold-major, column order).
#[derive(Clone, Debug)]
pub struct ClassifiedSpectrum {
    pub eigensystem: Eigensystem,
    pub records: Vec<EigenstateRecord>,
}

impl ClassifiedSpectrum {
    /// Records of the manifold with `n_exc` excitations.
    pub fn manifold_records(&self, n_exc: u32) -> &[EigenstateRecord] {
        let m = &self.eigensystem.manifolds[n_exc as usize];
        let start = m.range.start;
        &self.records[start..m.range.end]
    }
}

/// Labels every eigenstate. `reference` is the uncoupled per-excitation
/// energy used for `relative_shift` (the molecular transition at resonance).
pub fn classify_eigenstates(
    eig: Eigensystem,
    observables: &ObservableSet,
    reference: f64,
    tol: &Tolerances,
) -> Result<ClassifiedSpectrum> {
    if observables.n_phot.dim() != eig.dim() {
        return Err(Error::DimensionMismatch {
            expected: eig.dim(),
            found: observables.n_phot.dim(),
        });
    }
    let two_level = eig.levels == 2;
    let n_molecules = eig.n_molecules;
    let results: Vec<(ManifoldEigen, Vec<(EigenstateRecord, usize)>)> = eig
        .manifolds
        .into_par_iter()
        .map(|m| classify_manifold(m, observables, two_level, n_molecules, reference, tol))
        .collect();

    let mut manifolds = Vec::with_capacity(results.len());
    let mut records = Vec::new();
    let mut block_offset = 0;
    for (m, recs) in results {
        let blocks_here = recs.iter().map(|(_, b)| b + 1).max().unwrap_or(0);
        records.extend(recs.into_iter().map(|(mut r, b)| {
            r.degeneracy_block = block_offset + b;
            r
        }));
        block_offset += blocks_here;
        manifolds.push(m);
    }
    Ok(ClassifiedSpectrum {
        eigensystem: Eigensystem {
            n_molecules: eig.n_molecules,
            levels: eig.levels,
            manifolds,
        },
        records,
    })
}

fn classify_manifold(
    mut m: ManifoldEigen,
    obs: &ObservableSet,
    two_level: bool,
    n_molecules: usize,
    reference: f64,
    tol: &Tolerances,
) -> (ManifoldEigen, Vec<(EigenstateRecord, usize)>) {
    let n_phot = obs.n_phot.submatrix(m.range.clone());
    let n_t = obs.n_t.submatrix(m.range.clone());
    let s2 = obs.s_squared.submatrix(m.range.clone());

    let clusters = clusters(&m.values, tol.degeneracy);
    for c in &clusters {
        if c.len() < 2 {
            continue;
        }
        if two_level {
            let spin_sub = rotate_to_diagonal(&mut m.vectors, c.clone(), &s2);
            for sub in spin_sub {
                rotate_to_diagonal(&mut m.vectors, sub, &n_phot);
            }
        } else {
            rotate_to_diagonal(&mut m.vectors, c.clone(), &n_phot);
        }
    }

    let n_exc = m.n_exc;
    let full_spin = Spin::from_doubled(n_molecules as u32);
    let mut records = Vec::with_capacity(m.values.len());
    for (b, c) in clusters.iter().enumerate() {
        for j in c.clone() {
            let v: Vec<Complex64> = m.vectors.column(j).iter().copied().collect();
            let photons = n_phot.quadratic_form(&v).re.max(0.0);
            let t_occ = n_t.quadratic_form(&v).re.max(0.0);
            let (photon_frac, t_frac) = if n_exc == 0 {
                (0.0, 0.0)
            } else {
                (
                    (photons / n_exc as f64).min(1.0),
                    (t_occ / n_exc as f64).min(1.0),
                )
            };
            let s = if two_level {
                Spin::from_casimir(s2.quadratic_form(&v).re, tol.spin)
            } else {
                None
            };
            let group = if n_exc == 0 {
                Group::Ground
            } else if photon_frac <= tol.dark {
                Group::Dark
            } else {
                match s {
                    Some(s) if s == full_spin => Group::MultiPolariton,
                    Some(_) => Group::DarkPolariton,
                    None => Group::Unclassified,
                }
            };
            let eigenvalue = m.values[j];
            records.push((
                EigenstateRecord {
                    eigenvalue,
                    relative_shift: eigenvalue - n_exc as f64 * reference,
                    n_exc,
                    photon_frac,
                    t_frac,
                    s,
                    group,
                    degeneracy_block: 0,
                },
                b,
            ));
        }
    }
    (m, records)
}

/// Consecutive index ranges of sorted values whose neighbouring gaps are
/// below `tol`.
fn clusters(values: &[f64], tol: f64) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] >= tol {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// Rotates the columns `cols` of `vectors` so that they diagonalize `op`
/// restricted to their span; columns end up sorted by descending
/// eigenvalue of `op`. Returns the sub-ranges with equal `op` eigenvalue.
fn rotate_to_diagonal(
    vectors: &mut DMatrix<Complex64>,
    cols: Range<usize>,
    op: &SparseOperator,
) -> Vec<Range<usize>> {
    let k = cols.len();
    let v = vectors.columns(cols.start, k).into_owned();
    let projected = sandwich(op, &v);
    let projected = (&projected + projected.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(projected);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let u = DMatrix::from_fn(k, k, |r, c| eig.eigenvectors[(r, order[c])]);
    let rotated = v * u;
    vectors.columns_mut(cols.start, k).copy_from(&rotated);

    let sorted: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut subs = Vec::new();
    let mut start = 0;
    for i in 1..=k {
        if i == k || (sorted[i - 1] - sorted[i]).abs() > 1e-6 {
            subs.push(cols.start + start..cols.start + i);
            start = i;
        }
    }
    subs
}

/// `V^dag A V` for a sparse `A`.
fn sandwich(a: &SparseOperator, v: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let mut av = DMatrix::zeros(v.nrows(), v.ncols());
    for (r, c, x) in a.iter() {
        for j in 0..v.ncols() {
            av[(r, j)] += x * v[(c, j)];
        }
    }
    v.adjoint() * av
}

/// One point of the ladder diagram: a set of degenerate eigenstates sharing
/// group and S.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderEntry {
    pub n_exc: u32,
    #[serde(rename = "shift_eV")]
    pub shift: f64,
    pub multiplicity: usize,
    pub group: Group,
    #[serde(rename = "S")]
    pub s: Option<Spin>,
    pub photon_frac: f64,
    pub t_frac: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderDiagram {
    pub records: Vec<EigenstateRecord>,
    pub entries: Vec<LadderEntry>,
    /// Multiplicity per `(n_exc, shift)` with the shift rounded to 1e-6 eV
    /// and printed with six decimals.
    pub degeneracy_counts: BTreeMap<String, usize>,
}

fn unsigned_zero(x: f64) -> f64 {
    if x.abs() < 5e-13 {
        0.0
    } else {
        x
    }
}

/// Key used in [`LadderDiagram::degeneracy_counts`].
pub fn degeneracy_key(n_exc: u32, shift: f64) -> String {
    let rounded = (shift * 1e6).round() / 1e6;
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{n_exc}:{rounded:.6}")
}

pub fn ladder_export(records: &[EigenstateRecord]) -> LadderDiagram {
    let mut grouped: BTreeMap<(u32, usize, Group, Option<Spin>), Vec<&EigenstateRecord>> =
        BTreeMap::new();
    for r in records {
        grouped
            .entry((r.n_exc, r.degeneracy_block, r.group, r.s))
            .or_default()
            .push(r);
    }
    let mut entries: Vec<LadderEntry> = grouped
        .into_iter()
        .map(|((n_exc, _, group, s), rs)| {
            let k = rs.len() as f64;
            LadderEntry {
                n_exc,
                shift: rs.iter().map(|r| r.relative_shift).sum::<f64>() / k,
                multiplicity: rs.len(),
                group,
                s,
                photon_frac: rs.iter().map(|r| r.photon_frac).sum::<f64>() / k,
                t_frac: rs.iter().map(|r| r.t_frac).sum::<f64>() / k,
            }
        })
        .collect();
    entries.sort_by(|a, b| {
        a.n_exc
            .cmp(&b.n_exc)
            .then(a.shift.total_cmp(&b.shift))
            .then(a.group.cmp(&b.group))
            .then(b.s.cmp(&a.s))
    });
    let mut degeneracy_counts = BTreeMap::new();
    for r in records {
        *degeneracy_counts
            .entry(degeneracy_key(r.n_exc, r.relative_shift))
            .or_insert(0) += 1;
    }
    LadderDiagram {
        records: records.to_vec(),
        entries,
        degeneracy_counts,
    }
}

impl LadderDiagram {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ladder serializes")
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n_exc,shift_eV,multiplicity,group,S,photon_frac,t_frac")?;
        for e in &self.entries {
            let s = e.s.map(|s| s.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{:.12},{},{},{},{:.12},{:.12}",
                e.n_exc,
                unsigned_zero(e.shift),
                e.multiplicity,
                e.group,
                s,
                unsigned_zero(e.photon_frac),
                unsigned_zero(e.t_frac)
            )?;
        }
        Ok(())
    }

    /// Entries of one manifold.
    pub fn manifold(&self, n_exc: u32) -> impl Iterator<Item = &LadderEntry> {
        self.entries.iter().filter(move |e| e.n_exc == n_exc)
    }
}

/// Counts records by group in manifold `n_exc`, optionally split by S.
pub fn group_census(
    records: &[EigenstateRecord],
    n_exc: u32,
) -> BTreeMap<(Group, Option<Spin>), usize> {
    let mut out = BTreeMap::new();
    for r in records.iter().filter(|r| r.n_exc == n_exc) {
        *out.entry((r.group, r.s)).or_insert(0) += 1;
    }
    out
}
