//! Ensembles of identical two- or three-level molecules coupled to a single
//! lossy cavity mode in the rotating-wave (Tavis-Cummings) picture.
//!
//! The crate is organised bottom-up:
//!
//! * [`basis`] enumerates the excitation-truncated product basis,
//! * [`operators`] assembles Hamiltonians and observables as sparse matrices,
//! * [`spectrum`] diagonalizes manifold by manifold and labels eigenstates
//!   (ground, dark, multi polariton, dark polariton),
//! * [`combinatorics`] holds the closed-form state counts and splittings,
//! * [`dynamics`] propagates the Lindblad master equation and groups
//!   populations by excitation number and photonic character,
//! * [`scenario`], [`config`] and [`plot`] drive the command line tool.

pub mod basis;
pub mod combinatorics;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod operators;
pub mod plot;
pub mod scenario;
pub mod spectrum;
pub mod spin;
pub mod units;

pub use basis::{BasisSet, BasisState, MoleculeLevel};
pub use error::{Error, Result};
pub use operators::{ModelParameters, ObservableSet, SparseOperator};
pub use spin::Spin;
