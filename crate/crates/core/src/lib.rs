//! Equitable and optimal transport (EOT) between discrete measures.
//!
//! Given two discrete probability measures and a family of `N` cost
//! matrices, EOT looks for `N` transport plans whose sum couples the two
//! measures and which minimise the largest per-cost transport value. At the
//! optimum every cost carries exactly the same load.
//!
//! The crate is organised as:
//!
//! * [`measures`]: discrete measures, cost construction and file ingestion;
//! * [`lp`]: a dense two-phase simplex and the exact EOT / OT / Dudley programs;
//! * [`entropic`]: the entropic relaxation, its smooth dual and the PAM / APGA solvers;
//! * [`metrics`]: Dudley and Hölder IPMs, the harmonic bound and closed forms;
//! * [`experiments`]: scenario generators, epsilon sweeps and the time/accuracy benchmark.

pub mod entropic;
pub mod error;
pub mod experiments;
pub mod lp;
pub mod measures;
pub mod metrics;

pub use error::{EotError, Result};
