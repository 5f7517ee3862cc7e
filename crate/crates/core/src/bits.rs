//! Raw randomness: seeded, auditable bit streams split into per-query substreams.
//!
//! Every random decision made by the secure mechanism is drawn from a
//! [`BitSource`]. A source is one substream of a ChaCha12 keystream,
//! addressed by a [`StreamId`]:
//!
//! * the 256-bit key is the ASCII tag `gaptopk/bits/v1` (16 bytes, zero
//!   padded) followed by the little-endian 64-bit seed and eight zero bytes,
//!   or 32 bytes of OS entropy for [`StreamKey::from_os_entropy`];
//! * the ChaCha stream (nonce) is the query index;
//! * the ChaCha word position starts at `phase_code << 40`, where the phase
//!   code is the refinement level, or [`SHUFFLE_PHASE_CODE`] for the gap
//!   permutation.
//!
//! The mapping `(seed, query, phase) -> keystream offset` is injective, so two
//! substreams never overlap as long as each consumes fewer than 2^46 bits.
//! Because a query's noise depends only on its own substream, whether other
//! queries were sampled (or pruned) never changes the values it receives.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

const KEY_TAG: &[u8; 16] = b"gaptopk/bits/v1\0";
const PHASE_SHIFT: u32 = 40;

/// Phase code reserved for the permutation drawn in the gap phase.
pub const SHUFFLE_PHASE_CODE: u32 = (1 << 28) - 1;

/// A source of independent, uniformly random bits.
pub trait RandomBits {
    /// Returns the next `n` bits of the stream in the low bits of the result.
    ///
    /// `n` must be at most 64.
    fn next_bits(&mut self, n: u32) -> u64;

    /// Total number of bits handed out so far.
    fn bits_consumed(&self) -> u64;

    fn next_bit(&mut self) -> bool {
        self.next_bits(1) == 1
    }
}

/// Which part of a mechanism run a substream feeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    /// Noise drawn at refinement level `t` (level 0 is the initial noise).
    Level(u32),
    /// The random permutation used to simulate the rounded-gap correction.
    Shuffle,
}

impl Phase {
    fn code(self) -> u32 {
        match self {
            Phase::Level(t) => {
                assert!(t < SHUFFLE_PHASE_CODE, "refinement level {t} out of range");
                t
            }
            Phase::Shuffle => SHUFFLE_PHASE_CODE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StreamId {
    pub query: u64,
    pub phase: Phase,
}

impl StreamId {
    pub fn new(query: u64, phase: Phase) -> Self {
        Self { query, phase }
    }
}

/// Root key from which all substreams of one mechanism run are derived.
#[derive(Clone)]
pub struct StreamKey {
    key: [u8; 32],
    seed: Option<u64>,
}

impl std::fmt::Debug for StreamKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.seed {
            Some(seed) => f.debug_struct("StreamKey").field("seed", &seed).finish(),
            None => f.write_str("StreamKey(<os entropy>)"),
        }
    }
}

impl StreamKey {
    /// Deterministic key for reproducible runs.
    pub fn from_seed(seed: u64) -> Self {
        let mut key = [0u8; 32];
        key[..16].copy_from_slice(KEY_TAG);
        key[16..24].copy_from_slice(&seed.to_le_bytes());
        Self {
            key,
            seed: Some(seed),
        }
    }

    /// Key drawn from the operating system's entropy pool.
    ///
    /// This is the production entry point; runs keyed this way are not
    /// reproducible.
    pub fn from_os_entropy() -> Self {
        let mut rng = ChaCha12Rng::from_os_rng();
        let mut key = [0u8; 32];
        rng.fill_bytes(&mut key);
        Self { key, seed: None }
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn substream(&self, id: StreamId) -> BitSource {
        let mut rng = ChaCha12Rng::from_seed(self.key);
        rng.set_stream(id.query);
        rng.set_word_pos(u128::from(id.phase.code()) << PHASE_SHIFT);
        BitSource {
            id,
            rng,
            buf: 0,
            avail: 0,
            consumed: 0,
        }
    }
}

/// One substream of bits. Single owner; not meant to be shared.
pub struct BitSource {
    id: StreamId,
    rng: ChaCha12Rng,
    buf: u64,
    avail: u32,
    consumed: u64,
}

impl BitSource {
    /// Shorthand for `StreamKey::from_seed(seed).substream(id)`.
    pub fn seeded(seed: u64, id: StreamId) -> Self {
        StreamKey::from_seed(seed).substream(id)
    }

    pub fn id(&self) -> StreamId {
        self.id
    }
}

impl RandomBits for BitSource {
    fn next_bits(&mut self, n: u32) -> u64 {
        assert!(n <= 64, "at most 64 bits per draw");
        if n == 0 {
            return 0;
        }
        self.consumed += u64::from(n);
        if n <= self.avail {
            let out = self.buf & low_mask(n);
            self.buf = self.buf.checked_shr(n).unwrap_or(0);
            self.avail -= n;
            return out;
        }
        // Drain what is left, then top up from a fresh word.
        let head_len = self.avail;
        let head = self.buf;
        let word = self.rng.next_u64();
        let tail_len = n - head_len;
        let tail = word & low_mask(tail_len);
        self.buf = word.checked_shr(tail_len).unwrap_or(0);
        self.avail = 64 - tail_len;
        head | (tail << head_len)
    }

    fn bits_consumed(&self) -> u64 {
        self.consumed
    }
}

fn low_mask(n: u32) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(query: u64, level: u32) -> StreamId {
        StreamId::new(query, Phase::Level(level))
    }

    #[test]
    fn replay_is_identical() {
        let mut a = BitSource::seeded(7, id(3, 1));
        let mut b = BitSource::seeded(7, id(3, 1));
        let xs: Vec<u64> = (0..100).map(|i| a.next_bits(1 + i % 64)).collect();
        let ys: Vec<u64> = (0..100).map(|i| b.next_bits(1 + i % 64)).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn distinct_ids_and_seeds_differ() {
        let draw = |seed, sid| {
            let mut s = BitSource::seeded(seed, sid);
            (0..4).map(|_| s.next_bits(64)).collect::<Vec<_>>()
        };
        let base = draw(1, id(0, 0));
        assert_ne!(base, draw(2, id(0, 0)));
        assert_ne!(base, draw(1, id(1, 0)));
        assert_ne!(base, draw(1, id(0, 1)));
        assert_ne!(base, draw(1, StreamId::new(0, Phase::Shuffle)));
    }

    #[test]
    fn split_draws_concatenate() {
        // Drawing 64 single bits must reproduce one 64-bit draw, low bit first.
        let mut whole = BitSource::seeded(11, id(5, 2));
        let mut bits = BitSource::seeded(11, id(5, 2));
        let w = whole.next_bits(64);
        let mut acc = 0u64;
        for i in 0..64 {
            acc |= bits.next_bits(1) << i;
        }
        assert_eq!(w, acc);

        let mut odd = BitSource::seeded(11, id(5, 2));
        let lo = odd.next_bits(13);
        let hi = odd.next_bits(51);
        assert_eq!(w, lo | (hi << 13));
    }

    #[test]
    fn counter_tracks_bits() {
        let mut s = BitSource::seeded(0, id(0, 0));
        s.next_bits(3);
        s.next_bits(64);
        s.next_bits(0);
        s.next_bit();
        assert_eq!(s.bits_consumed(), 68);
    }

    #[test]
    fn os_keys_are_fresh() {
        let a = StreamKey::from_os_entropy();
        let b = StreamKey::from_os_entropy();
        assert!(a.seed().is_none());
        let mut sa = a.substream(id(0, 0));
        let mut sb = b.substream(id(0, 0));
        assert_ne!(
            (sa.next_bits(64), sa.next_bits(64)),
            (sb.next_bits(64), sb.next_bits(64))
        );
    }
}
