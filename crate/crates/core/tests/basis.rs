use std::collections::BTreeSet;

use num_bigint::BigUint;
use polariton::basis::{enumerate_basis, excitation};
use polariton::combinatorics::manifold_dimension;
use polariton::{BasisState, MoleculeLevel};

const LEVELS: [MoleculeLevel; 3] = [MoleculeLevel::G, MoleculeLevel::E, MoleculeLevel::T];

/// Every (occupation, photon) pair with excitation `<= n_max`, by counting
/// through `levels^N` in base `levels`.
fn brute_force(n: usize, levels: u8, n_max: u32) -> BTreeSet<BasisState> {
    let mut out = BTreeSet::new();
    let total = (levels as u64).pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let occ: Vec<MoleculeLevel> = (0..n)
            .map(|_| {
                let l = LEVELS[(c % levels as u64) as usize];
                c /= levels as u64;
                l
            })
            .collect();
        let molecular = occ.iter().filter(|l| l.is_excited()).count() as u32;
        for photons in 0..=n_max {
            if molecular + photons <= n_max {
                out.insert(BasisState::new(occ.clone(), photons));
            }
        }
    }
    out
}

#[test]
fn two_level_basis_matches_brute_force() {
    for n in 1..=10 {
        for n_max in 0..=n.min(4) as u32 {
            let basis = enumerate_basis(n, 2, n_max).unwrap();
            let expected = brute_force(n, 2, n_max);
            let got: BTreeSet<BasisState> = basis.states().iter().cloned().collect();
            assert_eq!(got.len(), basis.len(), "duplicates for N={n}, n_max={n_max}");
            assert_eq!(got, expected, "N={n}, n_max={n_max}");
        }
    }
}

#[test]
fn three_level_basis_matches_brute_force() {
    for n in 1..=7 {
        for n_max in 0..=n.min(3) as u32 {
            let basis = enumerate_basis(n, 3, n_max).unwrap();
            let expected = brute_force(n, 3, n_max);
            let got: BTreeSet<BasisState> = basis.states().iter().cloned().collect();
            assert_eq!(got.len(), basis.len());
            assert_eq!(got, expected, "N={n}, n_max={n_max}");
        }
    }
}

#[test]
fn manifolds_are_contiguous_and_cumulative_size_matches_formula() {
    for levels in [2u8, 3] {
        for n in 1..=8 {
            let n_max = n.min(3) as u32;
            let basis = enumerate_basis(n, levels, n_max).unwrap();
            let mut covered = 0;
            for m in 0..=n_max {
                let range = basis.manifold_range(m);
                assert_eq!(range.start, covered);
                covered = range.end;
                for i in range.clone() {
                    assert_eq!(excitation(basis.state(i)), m);
                }
                assert_eq!(
                    BigUint::from(range.end),
                    manifold_dimension(n as u64, m as u64, levels).unwrap()
                );
            }
            assert_eq!(covered, basis.len());
        }
    }
}

#[test]
fn eight_molecule_manifold_sizes() {
    let basis = enumerate_basis(8, 2, 3).unwrap();
    let dims: Vec<usize> = (0..=3).map(|m| basis.manifold_range(m).len()).collect();
    assert_eq!(dims, [1, 9, 37, 93]);
    assert_eq!(enumerate_basis(8, 3, 3).unwrap().len(), 724);
}

#[test]
fn index_round_trips() {
    let basis = enumerate_basis(6, 3, 3).unwrap();
    for (i, s) in basis.states().iter().enumerate() {
        assert_eq!(basis.index_of(s).unwrap(), i);
    }
    let outside = BasisState::parse("eeeegg", 0).unwrap();
    assert!(basis.index_of(&outside).is_err());
}
