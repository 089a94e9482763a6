//! Sums of random permutation matrices: samplers, exact trace and cycle
//! statistics, secular coefficients of the characteristic polynomial,
//! limiting random analytic functions, and eigenvalue-side verification.
//!
//! The central object is [`digraph::PermSum`], the random matrix
//! `A = P(1) + ... + P(d)` built from `d` independent permutation matrices,
//! equivalently the adjacency matrix of a random d-regular digraph with
//! multiplicities. The crate keeps `A` implicit (it stores only the
//! permutations) and derives everything else exactly where possible:
//!
//! - [`perm`]: uniform and Ewens(theta) permutation sampling, cycle types;
//! - [`digraph`]: matrix entries, exact `tr(A^k)`, simple-cycle counts `Q_l`,
//!   and the divisor-weighted decomposition of traces;
//! - [`secular`]: secular coefficients of `det(I - zA)` by Newton identities
//!   (exact integer arithmetic), principal-minor oracles, and evaluation of
//!   the rescaled characteristic polynomial;
//! - [`fields`]: the limiting random analytic functions on the unit disk
//!   (Poisson-coefficient series and their Gaussian degenerate-d limit);
//! - [`spectra`]: dense nonsymmetric eigensolver, second-eigenvalue power
//!   iteration, the oriented Kesten-McKay density and log-potential, and the
//!   log-determinant fluctuation field;
//! - [`stats`]: the statistical verification engine (moment reports,
//!   Poisson goodness of fit, trace limit tests, Ewens variants).
//!
//! Everything random is driven by [`rng::RngStream`], keyed by
//! `(seed, trial_index)` for bit-exact reproducibility under parallelism.

pub mod digraph;
pub mod error;
pub mod fields;
pub mod linalg;
pub mod perm;
pub mod rng;
pub mod secular;
pub mod spectra;
pub mod stats;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book;
