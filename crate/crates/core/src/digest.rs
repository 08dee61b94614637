//! Short content digests used to make reports re-runnable.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// First 16 hex digits of the SHA-256 of `bytes`.
pub fn of_bytes(bytes: &[u8]) -> String {
    let out = Sha256::digest(bytes);
    hex::encode(&out[..8])
}

/// Digest of the canonical JSON encoding of `value`.
pub fn of_json<T: Serialize + ?Sized>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("serializable digest input");
    of_bytes(&json)
}

/// Digest of a float slice via its little-endian bit patterns.
pub fn of_f64s(values: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    of_bytes(&bytes)
}
