//! Canonical JSON: lexicographically sorted keys, no insignificant whitespace.
//!
//! `serde_json::Map` is backed by a `BTreeMap` (the `preserve_order` feature is
//! not enabled), so round-tripping through `Value` sorts every object level.

use serde::Serialize;

/// Serializes `value` into canonical JSON bytes.
pub fn to_canonical_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, serde_json::Error> {
    let tree = serde_json::to_value(value)?;
    serde_json::to_vec(&tree)
}

/// Same as [`to_canonical_bytes`], as a `String`.
pub fn to_canonical_string<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let tree = serde_json::to_value(value)?;
    serde_json::to_string(&tree)
}

/// Converts the line/column pair reported by `serde_json` into a byte offset.
pub(crate) fn byte_offset(input: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut current = 1;
    let mut line_start = 0;
    for (idx, b) in input.iter().enumerate() {
        if current == line {
            break;
        }
        if *b == b'\n' {
            current += 1;
            line_start = idx + 1;
        }
    }
    (line_start + column.saturating_sub(1)).min(input.len())
}
