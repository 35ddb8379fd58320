//! Dense numerical toolkit for quantum entropies and entropy accumulation.
//!
//! The crate is organised around a small stack of layers:
//!
//! - [`layout`], [`operator`]: labelled tensor-product systems and dense
//!   complex operators on them (tensor, partial trace, permutation,
//!   Hermitian eigendecomposition, matrix powers on the support).
//! - [`channel`]: completely positive maps in Kraus and Choi form,
//!   Stinespring dilations, the replacer map, and the non-signalling
//!   condition checker.
//! - [`pinching`]: spectral pinching maps and distinct-spectrum counting.
//! - [`entropy`]: sandwiched Rényi divergences and the derived conditional
//!   entropies, including the optimised (`H↑`) variants, min-/max-entropy
//!   at zero smoothing, and finite-order channel divergences.
//! - [`solver`]: a dense primal-dual interior-point SDP solver plus the
//!   max-divergence programs and marginal-constrained relative-entropy
//!   minimisation with a Frank-Wolfe certificate.
//! - [`eat`]: explicit entropy-accumulation bound formulas, min-tradeoff
//!   function construction, and the dual max-entropy bound.
//! - [`protocol`]: a Monte-Carlo simulator and exact single-round analysis
//!   of the blind randomness-expansion protocol.
//! - [`verify`]: numerical verification suites that make the chain rules
//!   and duality statements executable, with honest one-sidedness caveats.
//!
//! All values are immutable after construction and safe to share across
//! threads. Batch work (verification instances, Monte-Carlo trials,
//! optimizer restarts) fans out through [`par`], which uses rayon when the
//! default `parallel` feature is enabled and falls back to sequential
//! iteration otherwise.

pub mod channel;
pub mod eat;
pub mod entropy;
pub mod error;
pub mod layout;
pub mod operator;
pub mod par;
pub mod pinching;
pub mod protocol;
pub mod random;
pub mod rng;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use layout::{SystemLabel, SystemLayout};
pub use operator::{DensityMatrix, Operator, PureState};
