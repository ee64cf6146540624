//! Content hashing shared by documents, configs and manifests.
//!
//! Every digest in the toolkit is SHA-256 rendered as lowercase hex.

use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(bytes.as_ref()))
}

/// Rewrites `\r\n` and lone `\r` to `\n`.
pub fn normalize_newlines(text: &str) -> std::borrow::Cow<'_, str> {
    if !text.contains('\r') {
        return std::borrow::Cow::Borrowed(text);
    }
    std::borrow::Cow::Owned(text.replace("\r\n", "\n").replace('\r', "\n"))
}

/// Canonical document identifier: SHA-256 over the UTF-8 bytes of the
/// newline-normalized text.
pub fn doc_id_for_text(text: &str) -> String {
    sha256_hex(normalize_newlines(text).as_bytes())
}

/// Digest of a value's canonical JSON form. Struct fields serialize in
/// declaration order and maps are `BTreeMap`s, so the output is stable.
pub fn canonical_json_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable value");
    sha256_hex(bytes)
}

pub fn is_hex_digest(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}
