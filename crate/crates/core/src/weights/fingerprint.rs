use std::hash::Hasher;

use fnv::FnvHasher;

use super::{io::encode_entry, WeightStore};

/// Digest of an empty store: the FNV-1a 64-bit offset basis.
pub const EMPTY_FINGERPRINT: u64 = 0xcbf2_9ce4_8422_2325;

/// FNV-1a (64-bit) over the canonical CFW1 encoding of every entry, in
/// store order, each in its own storage dtype.
///
/// This is exactly the digest written at the end of a CFW1 file, so a
/// loaded store fingerprints to the value recorded in its file.
pub fn fingerprint(store: &WeightStore) -> u64 {
    let mut hasher = FnvHasher::default();
    let mut buf = Vec::new();
    for (name, tensor) in store.iter() {
        buf.clear();
        encode_entry(&mut buf, name, tensor);
        hasher.write(&buf);
    }
    hasher.finish()
}
