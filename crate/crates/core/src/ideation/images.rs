use std::path::{Path, PathBuf};

use base64::Engine as _;
use sha2::{Digest, Sha256};

use super::IdeationError;
use crate::client::{http, GeneratedImage, ImageInput};

const MAX_FETCH_BYTES: u64 = 32 * 1024 * 1024;

const TYPES: [(&str, &str); 5] = [
    ("png", "image/png"),
    ("jpg", "image/jpeg"),
    ("webp", "image/webp"),
    ("gif", "image/gif"),
    ("svg", "image/svg+xml"),
];

fn ext_for(mime: &str) -> &'static str {
    let m = mime.split(';').next().unwrap_or("").trim();
    TYPES.iter().find(|(_, t)| *t == m).map(|(e, _)| *e).unwrap_or("bin")
}

fn mime_for_ext(ext: &str) -> &'static str {
    TYPES.iter().find(|(e, _)| *e == ext).map(|(_, t)| *t).unwrap_or("application/octet-stream")
}

/// Content-addressed image directory. Refs look like `<hex>.<ext>`.
#[derive(Debug, Clone)]
pub struct ImageStore {
    dir: PathBuf,
}

impl ImageStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<ImageStore, IdeationError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| IdeationError::Images(format!("{}: {e}", dir.display())))?;
        Ok(ImageStore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Accepts only names this store could have produced.
    pub fn is_valid_ref(r: &str) -> bool {
        let Some((stem, ext)) = r.split_once('.') else { return false };
        stem.len() == 32
            && stem.bytes().all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase())
            && (ext == "bin" || TYPES.iter().any(|(e, _)| *e == ext))
    }

    pub fn path(&self, r: &str) -> Option<PathBuf> {
        ImageStore::is_valid_ref(r).then(|| self.dir.join(r))
    }

    pub fn put(&self, mime: &str, bytes: &[u8]) -> Result<String, IdeationError> {
        let digest = hex::encode(Sha256::digest(bytes));
        let r = format!("{}.{}", &digest[..32], ext_for(mime));
        let path = self.dir.join(&r);
        if !path.exists() {
            crate::fsutil::write_atomic(&path, bytes)
                .map_err(|e| IdeationError::Images(format!("{}: {e}", path.display())))?;
        }
        Ok(r)
    }

    /// Stores inline bytes, or downloads URL results first.
    pub fn put_generated(&self, image: &GeneratedImage) -> Result<String, IdeationError> {
        match image {
            GeneratedImage::Bytes { mime, data_base64 } => {
                let bytes = base64::engine::general_purpose::STANDARD
                    .decode(data_base64)
                    .map_err(|e| IdeationError::Images(format!("bad base64: {e}")))?;
                self.put(mime, &bytes)
            }
            GeneratedImage::Url(url) => {
                let (mime, bytes) = http::fetch_bytes(url, MAX_FETCH_BYTES)?;
                self.put(&mime, &bytes)
            }
        }
    }

    /// `(mime, bytes)` for a ref, or `None` when unknown.
    pub fn get(&self, r: &str) -> Result<Option<(&'static str, Vec<u8>)>, IdeationError> {
        let Some(path) = self.path(r) else { return Ok(None) };
        match std::fs::read(&path) {
            Ok(b) => Ok(Some((mime_for_ext(r.rsplit('.').next().unwrap_or("")), b))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(IdeationError::Images(format!("{}: {e}", path.display()))),
        }
    }

    pub fn contains(&self, r: &str) -> bool {
        self.path(r).is_some_and(|p| p.is_file())
    }

    /// Inline payload for sending a stored image to a model.
    pub fn input(&self, r: &str) -> Result<ImageInput, IdeationError> {
        let (mime, bytes) = self.get(r)?.ok_or_else(|| IdeationError::Images(format!("unknown image `{r}`")))?;
        Ok(ImageInput::Inline {
            mime: mime.to_string(),
            data_base64: base64::engine::general_purpose::STANDARD.encode(bytes),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn put_get_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = ImageStore::open(dir.path()).unwrap();
        let r = store.put("image/png", b"\x89PNG fake").unwrap();
        assert!(r.ends_with(".png"));
        assert_eq!(store.get(&r).unwrap().unwrap(), ("image/png", b"\x89PNG fake".to_vec()));
        assert_eq!(store.put("image/png", b"\x89PNG fake").unwrap(), r);
    }

    #[test]
    fn traversal_refs_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let store = ImageStore::open(dir.path()).unwrap();
        assert!(store.get("../etc/passwd").unwrap().is_none());
        assert!(!ImageStore::is_valid_ref("0123456789abcdef0123456789abcdef.exe"));
        assert!(store.get("0123456789abcdef0123456789abcdef.png").unwrap().is_none());
    }
}
