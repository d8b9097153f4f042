//! Simulation core for a directed-polymer laboratory.
//!
//! The crate models the continuum directed random polymer through a
//! nearest-neighbour lattice polymer in Gaussian disorder, calibrated so that
//! the intermediate-disorder limit reproduces the multiplicative stochastic
//! heat equation started from a Dirac mass. On top of the lattice it provides:
//!
//! * [`environment`] — disorder generation with deterministic, collision-free
//!   replica streams, and the continuum-to-lattice coordinate map;
//! * [`partition`] — log-domain transfer recursions for point-to-point and
//!   point-to-line partition functions, short/long-time KPZ rescalings of the
//!   free energy, and the multi-segment spatial process built from it;
//! * [`sampler`] — exact quenched path sampling by backward-field Doob
//!   transform, quenched marginals and modes, path rescaling, and a
//!   Laplace-concentration checker;
//! * [`analysis`] — the statistical toolkit used by the experiments
//!   (log-log exponent fits, stretched-tail fits, modulus-of-continuity and
//!   local-fluctuation statistics, KS tests, a Brownian-expectation identity
//!   checker);
//! * [`gibbs`] — a softly non-intersecting line ensemble with exponential
//!   pairwise interaction, Metropolis bridge resampling, a monotone coupling
//!   checker, and a stochastic-domination event bound checker.
//!
//! Everything is deterministic given a master seed: randomness is split by
//! (seed, domain, replica) into independent counter-constructed streams, so
//! results are independent of scheduling and worker counts.

pub mod analysis;
pub mod environment;
mod error;
pub mod gibbs;
mod numeric;
pub mod partition;
pub mod sampler;

pub use error::{CoreError, Result};
pub use numeric::{logsumexp2, logsumexp_slice};
