//! Rate regions for interference channels with common information.
//!
//! The crate computes achievable rate regions as linear inequality systems,
//! eliminates auxiliary rates by Fourier-Motzkin elimination, compares
//! regions on grids, and simulates the layered superposition code that
//! attains them.

pub mod channel;
pub mod cli;
pub mod error;
pub mod num;
pub mod polytope;
pub mod prob;
pub mod regions;
pub mod sim;

pub use channel::{ChannelSpec, DeterministicSpec, Family, InputFactorization};
pub use error::{Error, Result};
pub use polytope::{IneqSystem, RatePoint, Row};
pub use prob::{JointPmf, VarId};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The crate's seeded generator.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
