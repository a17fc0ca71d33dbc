//! Content-addressed image store.
//!
//! Layout under the root directory:
//!
//! ```text
//! <sha256>.bin    raw bytes
//! <sha256>.json   the ImageRef (media type, dimensions)
//! ```
//!
//! The blob is written before its metadata and both are written atomically,
//! so an image is visible only once it is complete.

use std::fs;
use std::io::{self, Cursor};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::write_atomic;
use crate::prototype::{ImageRef, MediaType};

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("unsupported media type {0:?}")]
    UnsupportedMediaType(String),
    #[error("corrupt image: {0}")]
    CorruptImage(String),
    #[error("image of {size} bytes exceeds the {max} byte limit")]
    TooLarge { size: usize, max: usize },
    #[error("no image with hash {0}")]
    NotFound(String),
    #[error("image storage failed: {0}")]
    Io(#[from] io::Error),
}

impl ImageError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::UnsupportedMediaType(_) => "UnsupportedMediaType",
            Self::CorruptImage(_) => "CorruptImage",
            Self::TooLarge { .. } => "ImageTooLarge",
            Self::NotFound(_) => "NotFound",
            Self::Io(_) => "StorageError",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ImageStore {
    root: PathBuf,
    max_bytes: Option<usize>,
}

fn is_sha256_hex(s: &str) -> bool {
    s.len() == 64
        && s.bytes()
            .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ImageStore {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self {
            root,
            max_bytes: None,
        })
    }

    pub fn with_max_bytes(mut self, max: usize) -> Self {
        self.max_bytes = Some(max);
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn blob_path(&self, hash: &str) -> PathBuf {
        self.root.join(format!("{hash}.bin"))
    }

    fn meta_path(&self, hash: &str) -> PathBuf {
        self.root.join(format!("{hash}.json"))
    }

    /// Parses a declared media type (`png`, `image/png`, ...) and stores the bytes.
    pub fn store_declared(&self, bytes: &[u8], media_type: &str) -> Result<ImageRef, ImageError> {
        let media_type = media_type
            .parse::<MediaType>()
            .map_err(ImageError::UnsupportedMediaType)?;
        self.store(bytes, media_type)
    }

    /// Stores `bytes`, deduplicating by content hash.
    pub fn store(&self, bytes: &[u8], media_type: MediaType) -> Result<ImageRef, ImageError> {
        if let Some(max) = self.max_bytes {
            if bytes.len() > max {
                return Err(ImageError::TooLarge {
                    size: bytes.len(),
                    max,
                });
            }
        }
        let (width, height) = dimensions(bytes, media_type)?;
        let hash = content_hash(bytes);
        if let Ok(existing) = self.lookup(&hash) {
            return Ok(existing);
        }
        let image = ImageRef {
            id: hash.clone(),
            media_type,
            width,
            height,
            content_hash: hash.clone(),
        };
        write_atomic(&self.blob_path(&hash), bytes)?;
        let meta = serde_json::to_vec(&image).expect("ImageRef serializes");
        write_atomic(&self.meta_path(&hash), &meta)?;
        Ok(image)
    }

    /// Metadata of a stored image.
    pub fn lookup(&self, hash: &str) -> Result<ImageRef, ImageError> {
        if !is_sha256_hex(hash) {
            return Err(ImageError::NotFound(hash.to_owned()));
        }
        let meta = match fs::read(self.meta_path(hash)) {
            Ok(meta) => meta,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(ImageError::NotFound(hash.to_owned()))
            }
            Err(e) => return Err(e.into()),
        };
        serde_json::from_slice(&meta)
            .map_err(|e| ImageError::CorruptImage(format!("metadata for {hash}: {e}")))
    }

    /// Bytes of a stored image, verified against its hash.
    pub fn fetch(&self, image: &ImageRef) -> Result<Vec<u8>, ImageError> {
        if !is_sha256_hex(&image.content_hash) {
            return Err(ImageError::NotFound(image.content_hash.clone()));
        }
        let bytes = match fs::read(self.blob_path(&image.content_hash)) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(ImageError::NotFound(image.content_hash.clone()))
            }
            Err(e) => return Err(e.into()),
        };
        if content_hash(&bytes) != image.content_hash {
            return Err(ImageError::CorruptImage(format!(
                "stored bytes for {} do not match their hash",
                image.content_hash
            )));
        }
        Ok(bytes)
    }
}

/// Pixel dimensions read from the image header.
pub fn dimensions(bytes: &[u8], media_type: MediaType) -> Result<(u32, u32), ImageError> {
    if bytes.is_empty() {
        return Err(ImageError::CorruptImage("empty file".into()));
    }
    let dims = match media_type {
        MediaType::Svg => svg_dimensions(bytes).ok_or_else(|| {
            ImageError::CorruptImage("no width/height or viewBox on the svg root".into())
        })?,
        raster => {
            let format = match raster {
                MediaType::Png => image::ImageFormat::Png,
                MediaType::Jpeg => image::ImageFormat::Jpeg,
                MediaType::Gif => image::ImageFormat::Gif,
                MediaType::Svg => unreachable!(),
            };
            image::ImageReader::with_format(Cursor::new(bytes), format)
                .into_dimensions()
                .map_err(|e| ImageError::CorruptImage(e.to_string()))?
        }
    };
    if dims.0 == 0 || dims.1 == 0 {
        return Err(ImageError::CorruptImage("zero width or height".into()));
    }
    Ok(dims)
}

fn svg_dimensions(bytes: &[u8]) -> Option<(u32, u32)> {
    let text = std::str::from_utf8(bytes).ok()?;
    let start = text.find("<svg")?;
    let tag_end = start + text[start..].find('>')?;
    let attrs = svg_attributes(&text[start + 4..tag_end]);
    let get = |name: &str| attrs.iter().find(|(k, _)| *k == name).map(|(_, v)| *v);

    let length = |v: &str| -> Option<u32> {
        let v = v.trim().trim_end_matches("px");
        let n: f64 = v.parse().ok()?;
        (n.is_finite() && n > 0.0).then(|| n.ceil() as u32)
    };
    if let (Some(w), Some(h)) = (
        get("width").and_then(length),
        get("height").and_then(length),
    ) {
        return Some((w, h));
    }
    let view_box: Vec<f64> = get("viewBox")?
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<_, _>>()
        .ok()?;
    match view_box[..] {
        [_, _, w, h] if w > 0.0 && h > 0.0 => Some((w.ceil() as u32, h.ceil() as u32)),
        _ => None,
    }
}

/// `name="value"` / `name='value'` pairs of a tag body.
fn svg_attributes(body: &str) -> Vec<(&str, &str)> {
    let mut out = Vec::new();
    let mut rest = body;
    while let Some(eq) = rest.find('=') {
        let name = rest[..eq].split_whitespace().last().unwrap_or("");
        let after = rest[eq + 1..].trim_start();
        let Some(quote) = after.chars().next().filter(|c| *c == '"' || *c == '\'') else {
            break;
        };
        let Some(close) = after[1..].find(quote) else {
            break;
        };
        out.push((name, &after[1..1 + close]));
        rest = &after[close + 2..];
    }
    out
}
