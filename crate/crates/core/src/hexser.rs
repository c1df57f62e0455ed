//! Lowercase-hex serde adapters for fixed-size byte arrays.

macro_rules! hex_array {
    ($name:ident, $len:expr) => {
        pub mod $name {
            use serde::{de::Error, Deserialize, Deserializer, Serializer};

            pub fn serialize<S: Serializer>(bytes: &[u8; $len], s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&hex::encode(bytes))
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; $len], D::Error> {
                let text = String::deserialize(d)?;
                if text.bytes().any(|b| b.is_ascii_uppercase()) {
                    return Err(D::Error::custom("hex must be lowercase"));
                }
                let mut out = [0u8; $len];
                hex::decode_to_slice(&text, &mut out)
                    .map_err(|e| D::Error::custom(format!("expected {} hex-encoded bytes: {e}", $len)))?;
                Ok(out)
            }
        }
    };
}

hex_array!(array32, 32);
hex_array!(array64, 64);
