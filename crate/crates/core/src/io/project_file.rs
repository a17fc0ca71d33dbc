use serde::{Deserialize, Serialize};

use super::{decode_utf8, to_canonical_json, FormatError};
use crate::prototype::Project;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Serialize)]
struct ProjectFileOut<'a> {
    schema_version: u64,
    project: &'a Project,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectFileIn {
    #[allow(dead_code)]
    schema_version: u64,
    project: Project,
}

/// Serializes a project as a `.pimproj` document.
pub fn save_project(project: &Project) -> Vec<u8> {
    to_canonical_json(&ProjectFileOut {
        schema_version: SCHEMA_VERSION,
        project,
    })
}

pub fn load_project(bytes: &[u8]) -> Result<Project, FormatError> {
    let text = decode_utf8(bytes)?;
    let parse_err = |e: serde_json::Error| FormatError::Parse {
        line: e.line().max(1),
        column: e.column().max(1),
        message: e.to_string(),
    };

    // Check the version before the strict typed pass so that documents from a
    // newer schema fail with VersionUnsupported rather than an unknown-field error.
    let tree: serde_json::Value = serde_json::from_str(text).map_err(parse_err)?;
    let version = tree
        .get("schema_version")
        .ok_or_else(|| FormatError::Parse {
            line: 1,
            column: 1,
            message: "missing schema_version".into(),
        })?;
    let version = version.as_u64().ok_or_else(|| FormatError::Parse {
        line: 1,
        column: 1,
        message: "schema_version must be a non-negative integer".into(),
    })?;
    if version != SCHEMA_VERSION {
        return Err(FormatError::VersionUnsupported { found: version });
    }

    let doc: ProjectFileIn = serde_json::from_str(text).map_err(parse_err)?;
    let problems = doc.project.check_invariants();
    if problems.is_empty() {
        Ok(doc.project)
    } else {
        Err(FormatError::ProjectInvariant(problems))
    }
}
