//! Project registry, on-disk persistence and simulation sessions.
//!
//! Every project lives in `<data_dir>/projects/<id>.pimproj`. A mutation takes
//! the project's lock, applies the change to a copy, writes the copy to disk
//! atomically and only then publishes it, so a failed write leaves both the
//! file and the in-memory project untouched.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex as StdMutex};
use std::time::{Duration, Instant};

use pimp_core::io::{load_project, save_project, write_atomic, ImageStore};
use pimp_core::{Project, ProjectId, SimulationSession};
use tokio::sync::Mutex;

use crate::error::ApiError;

const PROJECT_EXT: &str = "pimproj";

pub(crate) struct Session {
    pub session: SimulationSession,
    pub last_used: Instant,
}

pub(crate) struct Inner {
    projects_dir: PathBuf,
    pub images: ImageStore,
    projects: StdMutex<BTreeMap<ProjectId, Arc<Mutex<Project>>>>,
    sessions: StdMutex<HashMap<String, Arc<StdMutex<Session>>>>,
    pub session_idle: Duration,
}

#[derive(Clone)]
pub(crate) struct AppState(pub Arc<Inner>);

impl std::ops::Deref for AppState {
    type Target = Inner;
    fn deref(&self) -> &Inner {
        &self.0
    }
}

/// Fails unless a file can be created and renamed inside `dir`.
fn probe_writable(dir: &Path) -> io::Result<()> {
    let probe = dir.join(".write-probe");
    write_atomic(&probe, b"ok")?;
    fs::remove_file(probe)
}

impl AppState {
    /// Opens the data directory and loads every readable project in it.
    ///
    /// Leftover temporary files from interrupted writes are removed. A project
    /// file that does not load is skipped with an error log and left in place.
    pub fn open(
        data_dir: &Path,
        max_image_bytes: usize,
        session_idle: Duration,
    ) -> io::Result<Self> {
        let projects_dir = data_dir.join("projects");
        fs::create_dir_all(&projects_dir)?;
        probe_writable(&projects_dir)?;
        let images = ImageStore::open(data_dir.join("images"))?.with_max_bytes(max_image_bytes);
        probe_writable(images.root())?;

        let mut projects = BTreeMap::new();
        for entry in fs::read_dir(&projects_dir)? {
            let path = entry?.path();
            let name = path
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or_default();
            if name.starts_with(".tmp-") {
                tracing::warn!(file = %path.display(), "removing leftover temporary file");
                let _ = fs::remove_file(&path);
                continue;
            }
            if path.extension().and_then(|e| e.to_str()) != Some(PROJECT_EXT) {
                continue;
            }
            match fs::read(&path)
                .map_err(|e| e.to_string())
                .and_then(|b| load_project(&b).map_err(|e| e.to_string()))
            {
                Ok(p) if path.file_stem().and_then(|s| s.to_str()) == Some(p.id().as_str()) => {
                    projects.insert(p.id().clone(), Arc::new(Mutex::new(p)));
                }
                Ok(_) => {
                    tracing::error!(file = %path.display(), "project id does not match its file name; skipped")
                }
                Err(e) => {
                    tracing::error!(file = %path.display(), error = %e, "cannot load project; skipped")
                }
            }
        }
        tracing::info!(count = projects.len(), dir = %projects_dir.display(), "projects loaded");

        Ok(Self(Arc::new(Inner {
            projects_dir,
            images,
            projects: StdMutex::new(projects),
            sessions: StdMutex::new(HashMap::new()),
            session_idle,
        })))
    }

    fn project_path(&self, id: &ProjectId) -> PathBuf {
        self.projects_dir.join(format!("{id}.{PROJECT_EXT}"))
    }

    fn persist(&self, project: &Project) -> Result<(), ApiError> {
        write_atomic(&self.project_path(project.id()), &save_project(project))
            .map_err(|e| ApiError::storage(&e))
    }

    pub fn handle(&self, id: &str) -> Result<Arc<Mutex<Project>>, ApiError> {
        self.projects
            .lock()
            .expect("registry lock")
            .get(&ProjectId::new(id))
            .cloned()
            .ok_or_else(|| ApiError::not_found("project", id))
    }

    pub fn list(&self) -> Vec<Arc<Mutex<Project>>> {
        self.projects
            .lock()
            .expect("registry lock")
            .values()
            .cloned()
            .collect()
    }

    pub fn create(&self, project: Project) -> Result<Project, ApiError> {
        self.persist(&project)?;
        self.projects
            .lock()
            .expect("registry lock")
            .insert(project.id().clone(), Arc::new(Mutex::new(project.clone())));
        Ok(project)
    }

    /// Consistent copy of a project.
    pub async fn snapshot(&self, id: &str) -> Result<Project, ApiError> {
        let handle = self.handle(id)?;
        let guard = handle.lock().await;
        Ok(guard.clone())
    }

    /// Applies `f` to a copy of the project under its lock, persists the copy,
    /// then publishes it. Returns `f`'s output together with the new project.
    pub async fn mutate<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut Project) -> Result<T, ApiError>,
    ) -> Result<(T, Project), ApiError> {
        let handle = self.handle(id)?;
        let mut guard = handle.lock().await;
        let mut next = guard.clone();
        let out = f(&mut next)?;
        self.persist(&next)?;
        *guard = next.clone();
        Ok((out, next))
    }

    pub async fn delete(&self, id: &str) -> Result<(), ApiError> {
        let handle = self.handle(id)?;
        let guard = handle.lock().await;
        match fs::remove_file(self.project_path(guard.id())) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(ApiError::storage(&e)),
        }
        self.projects
            .lock()
            .expect("registry lock")
            .remove(guard.id());
        Ok(())
    }

    pub fn add_session(&self, session: SimulationSession) -> Arc<StdMutex<Session>> {
        let id = session.id().to_owned();
        let entry = Arc::new(StdMutex::new(Session {
            session,
            last_used: Instant::now(),
        }));
        self.sessions
            .lock()
            .expect("session lock")
            .insert(id, entry.clone());
        entry
    }

    /// A live session; expired sessions are dropped on access.
    pub fn session(&self, id: &str) -> Result<Arc<StdMutex<Session>>, ApiError> {
        let mut sessions = self.sessions.lock().expect("session lock");
        let entry = sessions
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("session", id))?;
        let expired = entry
            .lock()
            .expect("session entry lock")
            .last_used
            .elapsed()
            > self.session_idle;
        if expired {
            sessions.remove(id);
            return Err(ApiError::not_found("session", id));
        }
        Ok(entry)
    }

    /// Drops every session idle for longer than the configured timeout.
    pub fn expire_sessions(&self) -> usize {
        let mut sessions = self.sessions.lock().expect("session lock");
        let before = sessions.len();
        sessions.retain(|_, s| {
            s.lock().expect("session entry lock").last_used.elapsed() <= self.session_idle
        });
        before - sessions.len()
    }
}
