pub mod fdos;
pub mod mitigate;
pub mod resources;
pub mod sample;
pub mod timeseries;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::output::OutDir;

/// What every subcommand receives.
pub struct Ctx {
    pub cfg: RunConfig,
    pub out: OutDir,
}

/// Independent, order-free seed for work item `stream` so that parallel
/// scheduling cannot change results.
pub fn stream_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, stream))
}
