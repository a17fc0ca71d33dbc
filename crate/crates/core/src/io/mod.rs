//! Persistence and export formats.
//!
//! * `.pimproj`: project documents, canonical JSON with sorted keys.
//! * `.pim`: line-oriented PIM text.
//! * `.dot`: Graphviz digraph of the PIM.
//! * a content-addressed image store.
//!
//! All text formats are UTF-8 with LF line endings and are byte-deterministic.

mod dot;
mod images;
mod pim_text;
mod project_file;

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::pim::Violation;
use crate::prototype::InvariantProblem;

pub use dot::export_dot;
pub use images::{content_hash, dimensions, ImageError, ImageStore};
pub use pim_text::{export_pim_text, parse_pim_text};
pub use project_file::{load_project, save_project, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema version {found} is not supported (expected {SCHEMA_VERSION})")]
    VersionUnsupported { found: u64 },
    #[error("project violates model invariants: {}", join(.0.iter().map(|p| format!("{}: {}", p.path, p.message))))]
    ProjectInvariant(Vec<InvariantProblem>),
    #[error("PIM violates model invariants: {}", join(.0.iter().map(ToString::to_string)))]
    PimInvariant(Vec<Violation>),
    #[error("cannot export an invalid PIM: {}", join(.0.iter().map(ToString::to_string)))]
    InvalidPim(Vec<Violation>),
}

fn join(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join("; ")
}

impl FormatError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Parse { .. } => "ParseError",
            Self::VersionUnsupported { .. } => "VersionUnsupported",
            Self::ProjectInvariant(_) | Self::PimInvariant(_) => "InvariantViolation",
            Self::InvalidPim(_) => "InvalidPim",
        }
    }

    pub fn path(&self) -> Option<String> {
        match self {
            Self::ProjectInvariant(p) => p.first().map(|p| p.path.clone()),
            Self::PimInvariant(v) | Self::InvalidPim(v) => v.first().map(|v| v.path.clone()),
            _ => None,
        }
    }
}

/// Pretty JSON with object keys sorted and a trailing newline.
///
/// This is the machine-readable encoding shared by the CLI and the HTTP API.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Vec<u8> {
    let value = serde_json::to_value(value).expect("model types serialize to JSON");
    let mut out = serde_json::to_vec_pretty(&value).expect("JSON values always serialize");
    out.push(b'\n');
    out
}

/// Writes `bytes` to a temporary file next to `path`, syncs it, then renames it
/// over `path`. Readers see either the old or the new content, never a prefix.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::Builder::new().prefix(".tmp-").tempfile_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// 1-based line and column (in characters) of byte offset `offset` in `text`.
pub(crate) fn position_of(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    (line, before[line_start..].chars().count() + 1)
}

/// Decodes UTF-8, reporting the position of the first invalid byte.
pub(crate) fn decode_utf8(bytes: &[u8]) -> Result<&str, FormatError> {
    std::str::from_utf8(bytes).map_err(|e| {
        let valid = std::str::from_utf8(&bytes[..e.valid_up_to()]).expect("prefix is valid");
        let (line, column) = position_of(valid, valid.len());
        FormatError::Parse {
            line,
            column,
            message: "invalid UTF-8".into(),
        }
    })
}
