//! Restricted Boltzmann machine likelihoods and their Rademacher complexity.
//!
//! * [`rbm`]: exact energy, factorized free energy, partition function and
//!   sampling by enumeration.
//! * [`meanfield`]: mean-field CD-1 passes, the CD-1 log-partition
//!   approximation and a training loop audited against the exact likelihood.
//! * [`rademacher`]: Monte-Carlo estimates of empirical Rademacher complexity
//!   for the linear, softplus, log-likelihood and compositional classes.
//! * [`bounds`]: closed-form bounds those estimates are compared with.

pub mod bounds;
pub mod error;
pub mod format;
pub mod meanfield;
pub mod numerics;
pub mod rademacher;
pub mod rbm;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent RNG stream `stream` of a master seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
