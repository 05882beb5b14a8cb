use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Realisation key reserved for reference ensembles, so reference samples
/// never coincide with the samples whose error they measure.
pub const REFERENCE_REALISATION: u64 = u64::MAX;

const DOMAIN_TAG: &[u8; 8] = b"MCNSFV01";

/// Independent stream for `(base_seed, sample index, realisation)`.
///
/// ChaCha is counter based: the key holds the seed and realisation, the
/// 64-bit stream id holds the sample index, so a stream depends on nothing
/// but its key and can be recreated on any worker.
pub fn rng_stream(base_seed: u64, index: u64, realisation: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&base_seed.to_le_bytes());
    key[8..16].copy_from_slice(&realisation.to_le_bytes());
    key[16..24].copy_from_slice(DOMAIN_TAG);
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Draw from `U(-w, w)`.
pub fn uniform_symmetric(rng: &mut impl Rng, half_width: f64) -> f64 {
    half_width * (2.0 * rng.random::<f64>() - 1.0)
}
