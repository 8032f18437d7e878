//! Excitation-truncated product basis: N molecules with two (g, e) or three
//! (g, e, t) levels times a Fock ladder of the cavity mode.
//!
//! States are ordered by total excitation first and lexicographically on
//! `(occupations, photons)` within a manifold, so every excitation manifold
//! occupies a contiguous index range.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MoleculeLevel {
    G,
    E,
    T,
}

impl MoleculeLevel {
    pub fn as_char(self) -> char {
        match self {
            MoleculeLevel::G => 'G',
            MoleculeLevel::E => 'E',
            MoleculeLevel::T => 'T',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'G' | 'g' => Some(MoleculeLevel::G),
            'E' | 'e' => Some(MoleculeLevel::E),
            'T' | 't' => Some(MoleculeLevel::T),
            _ => None,
        }
    }

    pub fn is_excited(self) -> bool {
        self != MoleculeLevel::G
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisState {
    pub occupations: Vec<MoleculeLevel>,
    pub photons: u32,
}

impl BasisState {
    pub fn new(occupations: Vec<MoleculeLevel>, photons: u32) -> Self {
        Self {
            occupations,
            photons,
        }
    }

    /// All molecules in `g`, cavity in vacuum.
    pub fn ground(n_molecules: usize) -> Self {
        Self::new(vec![MoleculeLevel::G; n_molecules], 0)
    }

    /// Parses the compact notation used in the JSON dump, e.g. `"GGEG"`.
    pub fn parse(occ: &str, photons: u32) -> Result<Self> {
        let occupations = occ
            .chars()
            .map(|c| {
                MoleculeLevel::from_char(c)
                    .ok_or_else(|| Error::Parse(format!("unknown molecular level {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(occupations, photons))
    }

    pub fn count(&self, level: MoleculeLevel) -> usize {
        self.occupations.iter().filter(|&&l| l == level).count()
    }

    pub fn occupation_string(&self) -> String {
        self.occupations.iter().map(|l| l.as_char()).collect()
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}, n={}>", self.occupation_string(), self.photons)
    }
}

/// Total excitation number: excited molecules (`e` or `t`) plus photons.
pub fn excitation(state: &BasisState) -> u32 {
    state.occupations.iter().filter(|l| l.is_excited()).count() as u32 + state.photons
}

#[derive(Clone, Debug)]
pub struct BasisSet {
    n_molecules: usize,
    levels: u8,
    n_max: u32,
    states: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
    manifold_offsets: Vec<usize>,
}

/// Enumerates every product state with excitation `<= n_max`.
pub fn enumerate_basis(n_molecules: usize, levels: u8, n_max: u32) -> Result<BasisSet> {
    BasisSet::new(n_molecules, levels, n_max)
}

impl BasisSet {
    pub fn new(n_molecules: usize, levels: u8, n_max: u32) -> Result<Self> {
        if n_molecules == 0 {
            return Err(Error::InvalidBasis("at least one molecule is required".into()));
        }
        if levels != 2 && levels != 3 {
            return Err(Error::InvalidBasis(format!(
                "molecules must have 2 or 3 levels, got {levels}"
            )));
        }
        if n_max as usize > n_molecules {
            return Err(Error::InvalidBasis(format!(
                "excitation cutoff {n_max} exceeds the molecule count {n_molecules}"
            )));
        }

        let mut states = Vec::new();
        let mut manifold_offsets = vec![0];
        for m in 0..=n_max {
            let mut manifold = Vec::new();
            for photons in 0..=m {
                let k = (m - photons) as usize;
                let mut occ = Vec::with_capacity(n_molecules);
                push_configurations(&mut manifold, &mut occ, n_molecules, k, levels, photons);
            }
            manifold.sort();
            states.extend(manifold);
            manifold_offsets.push(states.len());
        }

        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();

        Ok(Self {
            n_molecules,
            levels,
            n_max,
            states,
            index,
            manifold_offsets,
        })
    }

    pub fn n_molecules(&self) -> usize {
        self.n_molecules
    }

    pub fn levels(&self) -> u8 {
        self.levels
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &BasisState {
        &self.states[i]
    }

    pub fn index_of(&self, state: &BasisState) -> Result<usize> {
        self.index
            .get(state)
            .copied()
            .ok_or_else(|| Error::StateNotInBasis(state.to_string()))
    }

    /// Index range of the manifold with `n_exc` excitations.
    pub fn manifold_range(&self, n_exc: u32) -> Range<usize> {
        let m = n_exc as usize;
        self.manifold_offsets[m]..self.manifold_offsets[m + 1]
    }

    pub fn manifold_ranges(&self) -> Vec<Range<usize>> {
        (0..=self.n_max).map(|m| self.manifold_range(m)).collect()
    }

    /// Excitation number of every basis state, in basis order.
    pub fn excitations(&self) -> Vec<u32> {
        self.states.iter().map(excitation).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&BasisJson::from(self)).expect("basis serializes")
    }

    /// Rebuilds a basis from its JSON dump, checking that the stored state
    /// list matches a fresh enumeration.
    pub fn from_json(text: &str) -> Result<Self> {
        let dump: BasisJson =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let basis = BasisSet::new(dump.n, dump.levels, dump.n_max)?;
        if dump.states.len() != basis.len() {
            return Err(Error::Parse(format!(
                "basis dump lists {} states, expected {}",
                dump.states.len(),
                basis.len()
            )));
        }
        for (i, s) in dump.states.iter().enumerate() {
            let parsed = BasisState::parse(&s.occ, s.n)?;
            if parsed != basis.states[i] {
                return Err(Error::Parse(format!(
                    "state {i} is {parsed}, expected {}",
                    basis.states[i]
                )));
            }
        }
        Ok(basis)
    }
}

fn push_configurations(
    out: &mut Vec<BasisState>,
    occ: &mut Vec<MoleculeLevel>,
    n: usize,
    excited_left: usize,
    levels: u8,
    photons: u32,
) {
    let remaining = n - occ.len();
    if excited_left > remaining {
        return;
    }
    if remaining == 0 {
        out.push(BasisState::new(occ.clone(), photons));
        return;
    }
    occ.push(MoleculeLevel::G);
    push_configurations(out, occ, n, excited_left, levels, photons);
    occ.pop();
    if excited_left > 0 {
        let excited: &[MoleculeLevel] = if levels == 3 {
            &[MoleculeLevel::E, MoleculeLevel::T]
        } else {
            &[MoleculeLevel::E]
        };
        for &level in excited {
            occ.push(level);
            push_configurations(out, occ, n, excited_left - 1, levels, photons);
            occ.pop();
        }
    }
}

#[derive(Serialize, Deserialize)]
struct BasisJson {
    #[serde(rename = "N")]
    n: usize,
    levels: u8,
    n_max: u32,
    states: Vec<StateJson>,
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    occ: String,
    n: u32,
}

impl From<&BasisSet> for BasisJson {
    fn from(b: &BasisSet) -> Self {
        BasisJson {
            n: b.n_molecules,
            levels: b.levels,
            n_max: b.n_max,
            states: b
                .states
                .iter()
                .map(|s| StateJson {
                    occ: s.occupation_string(),
                    n: s.photons,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use MoleculeLevel::*;

    #[test]
    fn single_excitation_count() {
        let b = enumerate_basis(8, 2, 1).unwrap();
        assert_eq!(b.len(), 10);
        assert_eq!(b.manifold_range(1), 1..10);
    }

    #[test]
    fn documented_sizes() {
        assert_eq!(enumerate_basis(8, 2, 3).unwrap().len(), 140);
        assert_eq!(enumerate_basis(8, 3, 3).unwrap().len(), 724);
    }

    #[test]
    fn excitation_counts() {
        assert_eq!(excitation(&BasisState::ground(4)), 0);
        assert_eq!(excitation(&BasisState::new(vec![G, E, G], 2)), 3);
        assert_eq!(excitation(&BasisState::new(vec![T, E, T, G], 0)), 3);
    }

    #[test]
    fn ground_first_and_last_consistent() {
        let b = enumerate_basis(8, 2, 3).unwrap();
        assert_eq!(b.index_of(&BasisState::ground(8)).unwrap(), 0);
        let last = b.states().last().unwrap().clone();
        assert_eq!(b.index_of(&last).unwrap(), b.len() - 1);
        for (i, s) in b.states().iter().enumerate() {
            assert_eq!(b.index_of(s).unwrap(), i);
        }
    }

    #[test]
    fn lookup_errors() {
        let b = enumerate_basis(3, 2, 1).unwrap();
        assert!(matches!(
            b.index_of(&BasisState::new(vec![E, E, G], 0)),
            Err(Error::StateNotInBasis(_))
        ));
        assert!(b.index_of(&BasisState::new(vec![T, G, G], 0)).is_err());
    }

    #[test]
    fn invalid_requests() {
        assert!(enumerate_basis(3, 2, 4).is_err());
        assert!(enumerate_basis(3, 4, 1).is_err());
        assert!(enumerate_basis(0, 2, 0).is_err());
    }

    #[test]
    fn two_level_basis_has_no_t() {
        let b = enumerate_basis(5, 2, 5).unwrap();
        assert!(b.states().iter().all(|s| s.count(T) == 0));
    }

    #[test]
    fn ordering_within_manifold() {
        let b = enumerate_basis(2, 2, 1).unwrap();
        let listed: Vec<String> = b.states().iter().map(|s| s.to_string()).collect();
        assert_eq!(
            listed,
            ["|GG, n=0>", "|GG, n=1>", "|GE, n=0>", "|EG, n=0>"]
        );
    }

    #[test]
    fn json_round_trip() {
        let b = enumerate_basis(3, 3, 2).unwrap();
        let text = b.to_json();
        assert!(text.starts_with("{\"N\":3,\"levels\":3,\"n_max\":2,\"states\":[{\"occ\":\"GGG\",\"n\":0}"));
        let back = BasisSet::from_json(&text).unwrap();
        assert_eq!(back.states(), b.states());
    }
}
