#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

use polariton::basis::{enumerate_basis, BasisSet};
use polariton::operators::{build_hamiltonian, build_observables};
use polariton::spectrum::{classify_eigenstates, diagonalize_manifolds, ClassifiedSpectrum, Tolerances};
use polariton::{ModelParameters, Spin};

pub fn classified(params: &ModelParameters, levels: u8, n_max: u32) -> (BasisSet, ClassifiedSpectrum) {
    let basis = enumerate_basis(params.n_molecules, levels, n_max).unwrap();
    let h = build_hamiltonian(params, &basis).unwrap();
    let obs = build_observables(&basis).unwrap();
    let eig = diagonalize_manifolds(&h, &basis).unwrap();
    let spec = classify_eigenstates(eig, &obs, params.omega_eg, &Tolerances::default()).unwrap();
    (basis, spec)
}

fn subsets(n: usize, k: usize) -> Vec<u32> {
    (0u32..1 << n).filter(|m| m.count_ones() as usize == k).collect()
}

/// Rank over the rationals by Gaussian elimination.
pub fn exact_rank(mut m: Vec<Vec<BigRational>>) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| !m[r][c].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let pivot = m[rank][c].clone();
        for r in 0..rows {
            if r != rank && !m[r][c].is_zero() {
                let f = &m[r][c] / &pivot;
                for j in c..cols {
                    let d = &f * &m[rank][j];
                    m[r][j] -= d;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Dimension of the kernel of the collective lowering operator restricted to
/// photon-free states with `n_x` excited two-level molecules, i.e. the
/// number of solutions of the linear system demanding every amplitude of
/// `S^- |psi>` to vanish.
pub fn s_minus_kernel_dim(n: usize, n_x: usize) -> usize {
    if n_x == 0 {
        return 1;
    }
    let from = subsets(n, n_x);
    let to = subsets(n, n_x - 1);
    let index: BTreeMap<u32, usize> = to.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let mut mat = vec![vec![BigRational::zero(); from.len()]; to.len()];
    for (j, &m) in from.iter().enumerate() {
        for bit in 0..n {
            if m >> bit & 1 == 1 {
                mat[index[&(m & !(1 << bit))]][j] = BigRational::one();
            }
        }
    }
    from.len() - exact_rank(mat)
}

/// Eigenstate count per cooperation number in manifold `n_exc` of the
/// resonant two-level model: each S sector opens with its kernel states at
/// `N_x = N/2 - S` and climbs `min(2S, n_exc - N_x) + 1` rungs.
pub fn ladder_oracle(n: usize, n_exc: usize) -> BTreeMap<Spin, usize> {
    let mut out = BTreeMap::new();
    for n_x in 0..=n_exc.min(n / 2) {
        let doubled = n - 2 * n_x;
        let rungs = doubled.min(n_exc - n_x) + 1;
        out.insert(Spin::from_doubled(doubled as u32), s_minus_kernel_dim(n, n_x) * rungs);
    }
    out
}

/// Column-stacking superoperator of the Lindblad generator built from dense
/// matrices with Kronecker products.
pub fn liouvillian(h: &DMatrix<Complex64>, jumps: &[(f64, DMatrix<Complex64>)], hbar: f64) -> DMatrix<Complex64> {
    let d = h.nrows();
    let id = DMatrix::<Complex64>::identity(d, d);
    let i = Complex64::new(0.0, 1.0);
    let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * (-i / hbar);
    for (rate, a) in jumps {
        let ada = a.adjoint() * a;
        let r = Complex64::new(*rate, 0.0);
        let half = Complex64::new(0.5 * rate, 0.0);
        l += a.conjugate().kronecker(a) * r;
        l -= (id.kronecker(&ada) + ada.transpose().kronecker(&id)) * half;
    }
    l
}

pub fn vectorize(rho: &DMatrix<Complex64>) -> nalgebra::DVector<Complex64> {
    nalgebra::DVector::from_column_slice(rho.as_slice())
}

pub fn unvectorize(v: &nalgebra::DVector<Complex64>, d: usize) -> DMatrix<Complex64> {
    DMatrix::from_column_slice(d, d, v.as_slice())
}

/// Largest deviation, over every 5 fs sample up to 1 ps, between the
/// library trajectory of one excitation shared by two resonant molecules
/// and direct matrix-exponential propagation of the dense generator. The
/// oracle side builds the Hamiltonian, jumps, initial state and group
/// projectors by hand in the states `gg0, eg0, ge0, gg1`.
pub fn two_molecule_oracle_deviation(
    kappa: f64,
    gamma: f64,
    options: &polariton::dynamics::PropagationOptions,
) -> f64 {
    use polariton::dynamics::{
        propagate, pure_initial_state, Character, GroupKey, GroupProjectors, LindbladModel,
    };
    use polariton::units::HBAR_EV_FS;
    use polariton::{BasisState, MoleculeLevel};

    let params = ModelParameters::resonant_defaults(2);
    let (basis, spec) = classified(&params, 2, 1);
    let h_lib = build_hamiltonian(&params, &basis).unwrap();
    let model = LindbladModel::new(&basis, h_lib, kappa, gamma).unwrap();
    let projectors = GroupProjectors::new(&spec, false).unwrap();
    let rho0 = pure_initial_state(&basis, MoleculeLevel::E, 1).unwrap();
    let traj = propagate(&rho0, &model, &projectors, options).unwrap();

    let idx = |occ: &str, p: u32| basis.index_of(&BasisState::parse(occ, p).unwrap()).unwrap();
    let (gg0, eg0, ge0, gg1) = (idx("gg", 0), idx("eg", 0), idx("ge", 0), idx("gg", 1));
    let c = |x: f64| Complex64::new(x, 0.0);
    let g = params.g_c;
    let mut h = DMatrix::<Complex64>::zeros(4, 4);
    h[(eg0, eg0)] = c(params.omega_eg);
    h[(ge0, ge0)] = c(params.omega_eg);
    h[(gg1, gg1)] = c(params.omega_c);
    for m in [eg0, ge0] {
        h[(m, gg1)] = c(g);
        h[(gg1, m)] = c(g);
    }
    let mut a = DMatrix::<Complex64>::zeros(4, 4);
    a[(gg0, gg1)] = c(1.0);
    let mut s1 = DMatrix::<Complex64>::zeros(4, 4);
    s1[(gg0, eg0)] = c(1.0);
    let mut s2 = DMatrix::<Complex64>::zeros(4, 4);
    s2[(gg0, ge0)] = c(1.0);
    let l = liouvillian(&h, &[(kappa, a.clone()), (gamma, s1), (gamma, s2)], HBAR_EV_FS);
    let step = (l * c(5.0)).exp();

    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut bright = nalgebra::DVector::<Complex64>::zeros(4);
    bright[eg0] = c(r);
    bright[ge0] = c(r);
    let mut dark = nalgebra::DVector::<Complex64>::zeros(4);
    dark[eg0] = c(r);
    dark[ge0] = c(-r);
    let mut photon = nalgebra::DVector::<Complex64>::zeros(4);
    photon[gg1] = c(1.0);
    let proj = |v: &nalgebra::DVector<Complex64>| v * v.adjoint();
    let p_bright = proj(&bright) + proj(&photon);
    let p_dark = proj(&dark);
    let n_phot = a.adjoint() * &a;
    let mut n_e = DMatrix::<Complex64>::zeros(4, 4);
    n_e[(eg0, eg0)] = c(1.0);
    n_e[(ge0, ge0)] = c(1.0);

    let mut v = vectorize(&proj(&bright));
    let tr = |p: &DMatrix<Complex64>, rho: &DMatrix<Complex64>| (p * rho).trace().re;
    let ground = traj.group(&GroupKey::new(0, Character::Dark));
    let b1 = traj.group(&GroupKey::new(1, Character::Bright));
    let d1 = traj.group(&GroupKey::new(1, Character::Dark));
    let mut worst: f64 = 0.0;
    for (k, &t) in traj.times.iter().enumerate() {
        assert!((t - 5.0 * k as f64).abs() < 1e-9);
        let rho = unvectorize(&v, 4);
        let checks = [
            (rho[(gg0, gg0)].re, ground[k]),
            (tr(&p_bright, &rho), b1[k]),
            (tr(&p_dark, &rho), d1[k]),
            (tr(&n_phot, &rho), traj.n_phot[k]),
            (tr(&n_e, &rho), traj.n_e[k]),
        ];
        for (expected, got) in checks {
            worst = worst.max((expected - got).abs());
        }
        v = &step * v;
    }
    worst
}
