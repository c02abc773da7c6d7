//! Symmetric-cone programming by multiplicative weights.
//!
//! The crate is organised bottom-up:
//!
//! - [`eja`]: closed-form Euclidean Jordan algebra arithmetic for products of
//!   nonnegative orthants and second-order cones.
//! - [`scmwu`]: the exponential-weights learner over the trace-one slice of
//!   such a cone.
//! - [`meta`]: the primal-dual feasibility test driven by a pluggable
//!   [`meta::FeasibilityOracle`], and the adaptive search that turns it into
//!   an optimizer.
//! - [`ses`] and [`svm`]: smallest enclosing sphere and hard-margin SVM /
//!   polytope distance built on top of [`meta`].
//! - [`baselines`]: small, independent reference solvers used for
//!   cross-checking.
//!
//! The crate is `no_std` (it needs `alloc`). The `std` feature adds wall-clock
//! timing to solve reports and `parallel` fans per-block work out over rayon.
//! Every reduction runs over a fixed chunk partition, so results are bitwise
//! identical whatever the thread count.

#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_debug_implementations)]
// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod baselines;
pub mod eja;
pub mod meta;
pub mod scmwu;
pub mod ses;
pub mod svm;

mod clock;
mod math;
mod par;

pub use eja::{BlockKind, ConeDescriptor, EjaElement, EjaError, SpectralDecomposition};
pub use meta::{
    adaptive_search, early_stop_check, solve_ftp, EarlyStopConfig, FeasibilityOracle, FtpExit, FtpResult, MetaError,
    OracleOutcome, Orientation, SearchConfig, SearchOutcome, SolveReport, Termination,
};
pub use scmwu::{ScmwuError, ScmwuState};
