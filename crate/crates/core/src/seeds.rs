//! Counter-based seed derivation.
//!
//! All randomness in an experiment flows from a single master seed. Derived
//! seeds are produced by hashing (master, stream, index) so that the real-data
//! seed block, per-cell strategy streams and per-evaluation simulator seeds
//! stay disjoint without coordination.

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Derive a child seed from a master seed, a stream tag and an index.
pub fn derive(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream ^ splitmix64(index)))
}

/// Stream tag reserved for the real-data seed block.
pub const STREAM_REAL: u64 = 0;
/// Base stream tag for objective evaluations; add the cell seed.
pub const STREAM_SIM: u64 = 1 << 32;
