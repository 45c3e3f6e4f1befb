//! Robust low-rank matrix factorization under a mixture of asymmetric
//! Laplace (MoAL) noise.
//!
//! The observed matrix `X` (with missing entries) is modelled as
//! `X = U Vᵀ + E`, where every noise entry of `E` is drawn from a mixture of
//! asymmetric Laplace distributions located at zero. The parameters are
//! learned by expectation-maximization:
//!
//! * the E-step computes the posterior component memberships of every
//!   observed residual ([`em::e_step`]);
//! * the mixture weights, scales and asymmetries have closed-form updates
//!   ([`em::update_pi`], [`em::update_lambda`], [`em::update_kappa`]);
//! * the factor update reduces to a weighted L1 factorization, solved by
//!   cyclic weighted medians ([`wl1::solve_wl1`]).
//!
//! The crate also carries the synthetic-noise generator used for
//! benchmarking ([`synth`]), error metrics ([`metrics`]), CSV/PGM readers
//! and writers ([`io`]), the benchmark harness ([`bench`]) and the
//! command-line front end ([`cli`]).
//!
//! ```no_run
//! use aqlrmf::{em, synth};
//!
//! let spec = synth::NoiseSpec::Laplace { location: 0.0, scale: 1.5 };
//! let inst = synth::make_instance(40, 20, 4, 0.2, Some(&spec), 7).unwrap();
//! let opts = em::FitOptions::new(4);
//! let fit = em::fit(&inst.observed, &opts, 11).unwrap();
//! println!("{} components left after {} iterations", fit.report.final_s, fit.report.iterations);
//! ```

pub mod ald;
pub mod bench;
pub mod cli;
pub mod em;
mod error;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod synth;
pub mod wl1;

pub use error::{Error, Result};
pub use matrix::{FactorPair, MaskedMatrix};

/// Deterministic random source used throughout the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Builds the crate's random source from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
