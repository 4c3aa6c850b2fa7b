//! Toolkit for CH-type Bell inequalities of binary settings.
//!
//! The crate covers the full pipeline for the `mn22` scenario (two parties
//! with `m` and `n` two-outcome measurement settings):
//!
//! * [`expr`] — exact bilinear expressions over box-bounded variables, the
//!   algebraic counterpart of probabilistic CH inequalities, with the
//!   transformations (bound substitution, affine flips, relabelings) used to
//!   build and normalize inequality families.
//! * [`lhv`] — local bound certification by exact vertex enumeration, finite
//!   local-hidden-variable models, and the rearrangement bound chains.
//! * [`proof`] — machine-checkable decomposition proofs: recursive sign
//!   splits on a variable plus exact positivity-cone leaves.
//! * [`quantum`] — two-qubit evaluation: the one-parameter entangled state
//!   family, projective measurements, white-noise mixtures, and the
//!   alternative (max-form) inequality evaluators.
//! * [`optimize`] — multi-start maximization of quantum violations, a grid
//!   oracle for independent validation, and report rows.
//! * [`catalog`] — JSON file formats for inequality catalogs, proof
//!   certificates, and optimizer configuration.
//! * [`cli`] — the command handlers behind the `bellforge` binary.

// Coefficient tables are walked by index throughout; iterator rewrites of
// those loops obscure the row/column structure.
#![allow(clippy::needless_range_loop)]

pub mod catalog;
pub mod cli;
pub mod expr;
pub mod lhv;
pub mod optimize;
pub mod proof;
pub mod quantum;

pub use expr::{BellExpression, BoxPoint, Builtin, Form, Party, PinValue, Rational};
pub use lhv::{DeterministicStrategy, LhvModel};
pub use optimize::{Objective, OptimizerConfig, ViolationResult};
pub use proof::{PositivityKind, PositivityTerm, ProofCertificate};
pub use quantum::{ProbabilityTable, Projector, QuantumModel};
