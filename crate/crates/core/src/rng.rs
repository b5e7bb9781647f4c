use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent substream for `(seed, stream)`. Realization `r` of sweep point
/// `k` uses `stream = (k << 32) | r`, so results never depend on scheduling.
pub(crate) fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn stream_id(outer: usize, inner: usize) -> u64 {
    ((outer as u64) << 32) | (inner as u64 & 0xffff_ffff)
}
