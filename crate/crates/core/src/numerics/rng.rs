use rand::{Error as RandError, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded, independently addressable random stream.
///
/// A `(seed, stream)` pair selects one ChaCha keystream; distinct stream ids
/// under the same seed never overlap.
#[derive(Clone, Debug)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self(rng)
    }

    /// Stream used to place the initial proposal means.
    pub fn for_init(seed: u64) -> Self {
        Self::new(seed, 0)
    }

    /// Stream owned by proposal `n` for the whole run.
    pub fn for_proposal(seed: u64, n: usize) -> Self {
        Self::new(seed, 1 + n as u64)
    }

    /// Stream reserved for post-run diagnostics (χ² estimation).
    pub fn for_diagnostics(seed: u64) -> Self {
        Self::new(seed, u64::MAX)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), RandError> {
        self.0.try_fill_bytes(dest)
    }
}
