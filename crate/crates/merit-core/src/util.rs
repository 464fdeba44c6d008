use alloc::format;
use alloc::string::String;

/// Formats a float with the shortest representation that round-trips,
/// keeping a trailing `.0` for integral values (`format!("{:?}")` semantics).
///
/// All user-visible numbers (FOM lines, tables, CSV exports) go through this
/// so that identical inputs yield byte-identical output.
pub fn format_float(value: f64) -> String {
    format!("{value:?}")
}

/// SplitMix64 step, used to derive independent RNG streams from a base seed.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over a byte string, for hashing command text into seed salt.
/// Stable across platforms and builds so seeded runs stay reproducible.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
