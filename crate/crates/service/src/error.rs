//! Error envelope returned by every endpoint.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use pimp_core::io::{FormatError, ImageError};
use pimp_core::{AnalysisError, ConvertError, ModelError, SimulatorError};
use serde::{Deserialize, Serialize};

/// `{status, code, message, path}` body of every error response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub path: Option<String>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status: status.as_u16(),
            code: code.to_owned(),
            message: message.into(),
            path: None,
        }
    }

    pub fn at(mut self, path: impl Into<String>) -> Self {
        self.path = Some(path.into());
        self
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "NotFound",
            format!("no {what} with id {id:?}"),
        )
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }

    /// Persistence failure. The cause is logged, not echoed to the client.
    pub fn storage(err: &std::io::Error) -> Self {
        tracing::error!(error = %err, "storage failure");
        Self::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "StorageError",
            "could not persist the change",
        )
    }

    pub fn status_code(&self) -> StatusCode {
        StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status_code();
        (status, crate::routes::json_body(&self)).into_response()
    }
}

impl From<ModelError> for ApiError {
    fn from(e: ModelError) -> Self {
        let status = match e {
            ModelError::DuplicateScreenName { .. } | ModelError::DuplicateHotspotName { .. } => {
                StatusCode::CONFLICT
            }
            ModelError::UnknownScreen { .. } | ModelError::UnknownHotspot { .. } => {
                StatusCode::NOT_FOUND
            }
            ModelError::EmptyName
            | ModelError::InvalidRect { .. }
            | ModelError::InvalidPoint { .. }
            | ModelError::InvalidBehaviourName { .. } => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let path = match &e {
            ModelError::UnknownScreen { id } => Some(format!("screens/{id}")),
            ModelError::UnknownHotspot { id } => Some(format!("hotspots/{id}")),
            _ => None,
        };
        Self {
            path,
            ..Self::new(status, e.code(), e.to_string())
        }
    }
}

impl From<ConvertError> for ApiError {
    fn from(e: ConvertError) -> Self {
        let status = match e {
            ConvertError::NameCollision { .. } => StatusCode::CONFLICT,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self {
            path: e.path(),
            ..Self::new(status, e.code(), e.to_string())
        }
    }
}

impl From<AnalysisError> for ApiError {
    fn from(e: AnalysisError) -> Self {
        let (status, path) = match &e {
            AnalysisError::UnknownState(s) => (StatusCode::NOT_FOUND, Some(format!("states/{s}"))),
            AnalysisError::InvalidPim(v) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                v.first().map(|v| v.path.clone()),
            ),
            AnalysisError::TargetIsInitial(_) => (StatusCode::UNPROCESSABLE_ENTITY, None),
            AnalysisError::Cancelled => (StatusCode::SERVICE_UNAVAILABLE, None),
        };
        Self {
            path,
            ..Self::new(status, e.code(), e.to_string())
        }
    }
}

impl From<FormatError> for ApiError {
    fn from(e: FormatError) -> Self {
        let status = match e {
            FormatError::Parse { .. } => StatusCode::BAD_REQUEST,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self {
            path: e.path(),
            ..Self::new(status, e.code(), e.to_string())
        }
    }
}

impl From<ImageError> for ApiError {
    fn from(e: ImageError) -> Self {
        match &e {
            ImageError::Io(io) => Self::storage(io),
            ImageError::UnsupportedMediaType(_) => {
                Self::new(StatusCode::UNSUPPORTED_MEDIA_TYPE, e.code(), e.to_string())
            }
            ImageError::CorruptImage(_) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string())
            }
            ImageError::TooLarge { .. } => {
                Self::new(StatusCode::PAYLOAD_TOO_LARGE, e.code(), e.to_string())
            }
            ImageError::NotFound(_) => Self::new(StatusCode::NOT_FOUND, e.code(), e.to_string()),
        }
    }
}

impl From<SimulatorError> for ApiError {
    fn from(e: SimulatorError) -> Self {
        match e {
            SimulatorError::Convert(e) => e.into(),
            SimulatorError::Model(e) => e.into(),
            other => Self::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                other.code(),
                other.to_string(),
            ),
        }
    }
}
