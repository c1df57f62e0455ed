//! Asset references and content binding hashes.

use std::borrow::Cow;
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Coarse media classification of an asset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaKind {
    Image,
    Video,
    Audio,
    Other,
}

impl MediaKind {
    /// Classifies from leading magic bytes; `None` when unrecognized.
    pub fn sniff(bytes: &[u8]) -> Option<Self> {
        let starts = |magic: &[u8]| bytes.starts_with(magic);
        let riff_form = |form: &[u8]| bytes.len() >= 12 && &bytes[..4] == b"RIFF" && &bytes[8..12] == form;
        if starts(b"\x89PNG\r\n\x1a\n")
            || starts(&[0xff, 0xd8, 0xff])
            || starts(b"GIF87a")
            || starts(b"GIF89a")
            || riff_form(b"WEBP")
        {
            return Some(MediaKind::Image);
        }
        if riff_form(b"WAVE") || starts(b"fLaC") || starts(b"OggS") || starts(b"ID3") {
            return Some(MediaKind::Audio);
        }
        if (bytes.len() >= 8 && &bytes[4..8] == b"ftyp") || starts(&[0x1a, 0x45, 0xdf, 0xa3]) || riff_form(b"AVI ") {
            return Some(MediaKind::Video);
        }
        None
    }

    /// Classifies from a file extension; `Other` when unrecognized.
    pub fn from_extension(path: &Path) -> Self {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .unwrap_or_default();
        match ext.as_str() {
            "png" | "jpg" | "jpeg" | "gif" | "webp" | "bmp" | "tif" | "tiff" => MediaKind::Image,
            "mp4" | "mov" | "m4v" | "webm" | "mkv" | "avi" => MediaKind::Video,
            "wav" | "mp3" | "flac" | "ogg" | "m4a" | "aac" => MediaKind::Audio,
            _ => MediaKind::Other,
        }
    }
}

/// Where an asset's bytes live.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Locator {
    Path(PathBuf),
    Bytes { name: String, data: Vec<u8> },
}

/// A media asset under evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssetRef {
    pub locator: Locator,
    pub media_kind: MediaKind,
    pub size_bytes: u64,
}

impl AssetRef {
    /// Opens a file asset; the media kind comes from magic bytes, falling back to the extension.
    pub fn from_path(path: impl Into<PathBuf>) -> io::Result<Self> {
        let path = path.into();
        let meta = std::fs::metadata(&path)?;
        if !meta.is_file() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("{} is not a regular file", path.display()),
            ));
        }
        let mut head = [0u8; 16];
        let n = {
            use std::io::Read;
            let mut f = std::fs::File::open(&path)?;
            let mut filled = 0;
            while filled < head.len() {
                let read = f.read(&mut head[filled..])?;
                if read == 0 {
                    break;
                }
                filled += read;
            }
            filled
        };
        let media_kind = MediaKind::sniff(&head[..n]).unwrap_or_else(|| MediaKind::from_extension(&path));
        Ok(Self {
            locator: Locator::Path(path),
            media_kind,
            size_bytes: meta.len(),
        })
    }

    /// Wraps an in-memory byte stream. Such assets never have a sidecar.
    pub fn from_bytes(name: impl Into<String>, data: Vec<u8>) -> Self {
        let name = name.into();
        let media_kind = MediaKind::sniff(&data).unwrap_or_else(|| MediaKind::from_extension(Path::new(&name)));
        Self {
            size_bytes: data.len() as u64,
            locator: Locator::Bytes { name, data },
            media_kind,
        }
    }

    pub fn path(&self) -> Option<&Path> {
        match &self.locator {
            Locator::Path(p) => Some(p),
            Locator::Bytes { .. } => None,
        }
    }

    /// Display name: file name for paths, the given name for byte streams.
    pub fn name(&self) -> String {
        match &self.locator {
            Locator::Path(p) => p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string()),
            Locator::Bytes { name, .. } => name.clone(),
        }
    }

    pub fn read_bytes(&self) -> io::Result<Cow<'_, [u8]>> {
        match &self.locator {
            Locator::Path(p) => std::fs::read(p).map(Cow::Owned),
            Locator::Bytes { data, .. } => Ok(Cow::Borrowed(data)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HashAlgorithm {
    #[serde(rename = "sha-256")]
    Sha256,
}

/// Digest binding a manifest to its asset bytes.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentHash {
    pub algorithm: HashAlgorithm,
    #[serde(with = "crate::hexser::array32")]
    pub digest: [u8; 32],
}

impl ContentHash {
    pub fn sha256(bytes: &[u8]) -> Self {
        Self {
            algorithm: HashAlgorithm::Sha256,
            digest: Sha256::digest(bytes).into(),
        }
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.digest)
    }
}

impl fmt::Debug for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sha-256:{}", self.to_hex())
    }
}

/// Hashes the full byte stream of `asset`.
pub fn compute_content_hash(asset: &AssetRef) -> io::Result<ContentHash> {
    let bytes = asset.read_bytes()?;
    Ok(ContentHash::sha256(&bytes))
}
