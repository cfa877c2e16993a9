//! Deterministic seed derivation.
//!
//! Every random draw in a run descends from the single master seed through
//! [`subseed`], which hashes the master seed together with a tag path
//! (for example `["pit", station, init_time, lead]`). Two consumers with
//! different tag paths therefore get independent streams, and re-running
//! with the same master seed reproduces every stream bit for bit,
//! regardless of evaluation order.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over a byte slice.
fn fnv1a(hash: u64, bytes: &[u8]) -> u64 {
    let mut h = hash;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Derive a stream seed from `master` and a tag path. Tags are hashed with
/// a separator byte so that `["ab", "c"]` and `["a", "bc"]` differ.
pub fn subseed(master: u64, tags: &[&str]) -> u64 {
    let mut h = fnv1a(FNV_OFFSET, &master.to_le_bytes());
    for tag in tags {
        h = fnv1a(h, tag.as_bytes());
        h = fnv1a(h, &[0xff]);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_values() {
        // frozen so serialized outputs cannot drift silently
        assert_eq!(subseed(0, &[]), 0xa8c7_f832_281a_39c5);
        assert_eq!(subseed(42, &["pit", "A", "60"]), 0x3830_d0c6_f034_2398);
    }

    #[test]
    fn distinct_paths_distinct_seeds() {
        assert_ne!(subseed(1, &["a"]), subseed(2, &["a"]));
        assert_ne!(subseed(1, &["a"]), subseed(1, &["b"]));
        assert_ne!(subseed(1, &["ab", "c"]), subseed(1, &["a", "bc"]));
        assert_ne!(subseed(1, &["a", ""]), subseed(1, &["a"]));
    }

    #[test]
    fn deterministic() {
        assert_eq!(subseed(7, &["boot", "lead", "00060"]), subseed(7, &["boot", "lead", "00060"]));
    }
}
