//! Deterministic per-subsystem seeds derived from one top-level seed.

/// Named random streams. Each subsystem draws from its own stream so adding
/// draws in one place never shifts another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Synthesis,
    Landmarks,
    Folds,
    Init,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Synthesis => 1,
            Stream::Landmarks => 2,
            Stream::Folds => 3,
            Stream::Init => 4,
        }
    }
}

/// splitmix64 finalizer over the seed mixed with the stream tag.
pub fn derive_seed(seed: u64, stream: Stream) -> u64 {
    let mut z = seed ^ stream.tag().wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
