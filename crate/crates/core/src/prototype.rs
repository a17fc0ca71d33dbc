//! The informal prototype: projects, screens, hotspots and links.
//!
//! All mutation goes through [`Project`] so the structural invariants (unique
//! ids, unique sanitized names, valid rectangles, no dangling links, initial
//! screen present iff there are screens) hold after every operation. Failed
//! operations leave the project untouched.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convert::sanitize_name;

/// Slack allowed on the `x + w <= 1` style bounds checks.
pub const RECT_EPSILON: f64 = 1e-9;

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }
    };
}

string_id!(
    /// Opaque project identifier.
    ProjectId
);
string_id!(
    /// Opaque screen identifier, unique within a project.
    ScreenId
);
string_id!(
    /// Opaque hotspot identifier, unique within a project.
    HotspotId
);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("name must not be empty")]
    EmptyName,
    #[error("a screen named {name:?} already exists")]
    DuplicateScreenName { name: String },
    #[error("a hotspot named {name:?} already exists on this screen")]
    DuplicateHotspotName { name: String },
    #[error("invalid hotspot rectangle: {reason}")]
    InvalidRect { reason: String },
    #[error("invalid point: {reason}")]
    InvalidPoint { reason: String },
    #[error("unknown screen {id}")]
    UnknownScreen { id: ScreenId },
    #[error("unknown hotspot {id}")]
    UnknownHotspot { id: HotspotId },
    #[error("invalid S-behaviour name {name:?}, expected S_[A-Za-z0-9_]+")]
    InvalidBehaviourName { name: String },
}

impl ModelError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::EmptyName => "EmptyName",
            Self::DuplicateScreenName { .. } => "DuplicateScreenName",
            Self::DuplicateHotspotName { .. } => "DuplicateHotspotName",
            Self::InvalidRect { .. } => "InvalidRect",
            Self::InvalidPoint { .. } => "InvalidPoint",
            Self::UnknownScreen { .. } => "UnknownScreen",
            Self::UnknownHotspot { .. } => "UnknownHotspot",
            Self::InvalidBehaviourName { .. } => "InvalidBehaviourName",
        }
    }
}

/// Axis-aligned rectangle in image-relative coordinates, all components in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self, ModelError> {
        let rect = Self { x, y, w, h };
        rect.validate()?;
        Ok(rect)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |reason: &str| {
            Err(ModelError::InvalidRect {
                reason: reason.to_owned(),
            })
        };
        if ![self.x, self.y, self.w, self.h]
            .iter()
            .all(|v| v.is_finite())
        {
            return bad("components must be finite");
        }
        if self.w <= 0.0 || self.h <= 0.0 {
            return bad("width and height must be positive");
        }
        if self.x < 0.0 || self.y < 0.0 {
            return bad("x and y must be non-negative");
        }
        if self.x + self.w > 1.0 + RECT_EPSILON {
            return bad("x + w exceeds 1");
        }
        if self.y + self.h > 1.0 + RECT_EPSILON {
            return bad("y + h exceeds 1");
        }
        Ok(())
    }

    /// Boundary-inclusive containment.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x && p.x <= self.x + self.w && p.y >= self.y && p.y <= self.y + self.h
    }
}

/// Image-relative point, both components in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Result<Self, ModelError> {
        let p = Self { x, y };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let inside = |v: f64| (0.0..=1.0).contains(&v);
        if inside(self.x) && inside(self.y) {
            Ok(())
        } else {
            Err(ModelError::InvalidPoint {
                reason: format!("({}, {}) lies outside [0,1]^2", self.x, self.y),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaType {
    Png,
    Jpeg,
    Gif,
    Svg,
}

impl MediaType {
    pub fn mime(self) -> &'static str {
        match self {
            Self::Png => "image/png",
            Self::Jpeg => "image/jpeg",
            Self::Gif => "image/gif",
            Self::Svg => "image/svg+xml",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Self::Png => "png",
            Self::Jpeg => "jpeg",
            Self::Gif => "gif",
            Self::Svg => "svg",
        }
    }
}

impl fmt::Display for MediaType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for MediaType {
    type Err = String;

    /// Accepts short names (`png`, `jpg`) and MIME types (`image/png`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        let s = s.split(';').next().unwrap_or_default().trim();
        match s {
            "png" | "image/png" => Ok(Self::Png),
            "jpeg" | "jpg" | "image/jpeg" | "image/jpg" => Ok(Self::Jpeg),
            "gif" | "image/gif" => Ok(Self::Gif),
            "svg" | "image/svg+xml" | "image/svg" => Ok(Self::Svg),
            other => Err(other.to_owned()),
        }
    }
}

/// Reference to a stored screen image. The id is the SHA-256 of the bytes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageRef {
    pub id: String,
    pub media_type: MediaType,
    pub width: u32,
    pub height: u32,
    pub content_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hotspot {
    pub id: HotspotId,
    pub name: String,
    pub rect: Rect,
    pub link_target: Option<ScreenId>,
    pub s_behaviours: Vec<String>,
    pub created_seq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Screen {
    pub id: ScreenId,
    pub name: String,
    pub image: Option<ImageRef>,
    pub hotspots: Vec<Hotspot>,
}

impl Screen {
    pub fn hotspot(&self, id: &HotspotId) -> Option<&Hotspot> {
        self.hotspots.iter().find(|h| &h.id == id)
    }

    /// The topmost (most recently created) hotspot containing `point`.
    pub fn hit_test(&self, point: Point) -> Option<&Hotspot> {
        self.hotspots
            .iter()
            .filter(|h| h.rect.contains(point))
            .max_by_key(|h| h.created_seq)
    }
}

/// Project-scoped counters. Values are never reused after deletion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Counters {
    pub next_screen: u64,
    pub next_hotspot: u64,
}

impl Default for Counters {
    fn default() -> Self {
        Self {
            next_screen: 1,
            next_hotspot: 1,
        }
    }
}

/// Partial update applied atomically by [`Project::update_hotspot`].
///
/// `link_target: Some(None)` clears the link; `None` leaves it unchanged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HotspotPatch {
    pub name: Option<String>,
    pub rect: Option<Rect>,
    pub link_target: Option<Option<ScreenId>>,
    pub s_behaviours: Option<Vec<String>>,
}

/// A structural problem found by [`Project::check_invariants`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InvariantProblem {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Project {
    id: ProjectId,
    name: String,
    screens: Vec<Screen>,
    initial_screen: Option<ScreenId>,
    counters: Counters,
}

pub fn is_s_behaviour_name(name: &str) -> bool {
    name.strip_prefix("S_").is_some_and(|rest| {
        !rest.is_empty() && rest.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
    })
}

fn normalized_name(raw: &str) -> Result<String, ModelError> {
    let name = raw.trim();
    if name.is_empty() {
        Err(ModelError::EmptyName)
    } else {
        Ok(name.to_owned())
    }
}

fn check_s_behaviours(names: &[String]) -> Result<(), ModelError> {
    match names.iter().find(|n| !is_s_behaviour_name(n)) {
        Some(bad) => Err(ModelError::InvalidBehaviourName { name: bad.clone() }),
        None => Ok(()),
    }
}

impl Project {
    /// Creates an empty project with a fresh random id.
    pub fn new(name: &str) -> Result<Self, ModelError> {
        Self::with_id(
            ProjectId::new(uuid::Uuid::new_v4().simple().to_string()),
            name,
        )
    }

    pub fn with_id(id: ProjectId, name: &str) -> Result<Self, ModelError> {
        Ok(Self {
            id,
            name: normalized_name(name)?,
            screens: Vec::new(),
            initial_screen: None,
            counters: Counters::default(),
        })
    }

    pub fn id(&self) -> &ProjectId {
        &self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn screens(&self) -> &[Screen] {
        &self.screens
    }

    pub fn initial_screen(&self) -> Option<&ScreenId> {
        self.initial_screen.as_ref()
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn screen(&self, id: &ScreenId) -> Option<&Screen> {
        self.screens.iter().find(|s| &s.id == id)
    }

    pub fn screen_by_name(&self, name: &str) -> Option<&Screen> {
        self.screens.iter().find(|s| s.name == name)
    }

    /// Finds a hotspot anywhere in the project, with its owning screen.
    pub fn find_hotspot(&self, id: &HotspotId) -> Option<(&Screen, &Hotspot)> {
        self.screens
            .iter()
            .find_map(|s| s.hotspot(id).map(|h| (s, h)))
    }

    pub fn rename(&mut self, name: &str) -> Result<(), ModelError> {
        self.name = normalized_name(name)?;
        Ok(())
    }

    fn screen_index(&self, id: &ScreenId) -> Result<usize, ModelError> {
        self.screens
            .iter()
            .position(|s| &s.id == id)
            .ok_or_else(|| ModelError::UnknownScreen { id: id.clone() })
    }

    fn hotspot_index(&self, screen: usize, id: &HotspotId) -> Result<usize, ModelError> {
        self.screens[screen]
            .hotspots
            .iter()
            .position(|h| &h.id == id)
            .ok_or_else(|| ModelError::UnknownHotspot { id: id.clone() })
    }

    fn screen_name_taken(&self, name: &str, except: Option<&ScreenId>) -> bool {
        let wanted = sanitize_name(name);
        self.screens
            .iter()
            .filter(|s| Some(&s.id) != except)
            .any(|s| sanitize_name(&s.name) == wanted)
    }

    fn hotspot_name_taken(screen: &Screen, name: &str, except: Option<&HotspotId>) -> bool {
        let wanted = sanitize_name(name);
        screen
            .hotspots
            .iter()
            .filter(|h| Some(&h.id) != except)
            .any(|h| sanitize_name(&h.name) == wanted)
    }

    /// Appends a screen. The first screen becomes the initial screen.
    pub fn add_screen(
        &mut self,
        name: &str,
        image: Option<ImageRef>,
    ) -> Result<&Screen, ModelError> {
        let name = normalized_name(name)?;
        if self.screen_name_taken(&name, None) {
            return Err(ModelError::DuplicateScreenName { name });
        }
        let id = ScreenId(format!("s{}", self.counters.next_screen));
        self.counters.next_screen += 1;
        if self.initial_screen.is_none() {
            self.initial_screen = Some(id.clone());
        }
        self.screens.push(Screen {
            id,
            name,
            image,
            hotspots: Vec::new(),
        });
        Ok(self.screens.last().expect("just pushed"))
    }

    pub fn set_initial_screen(&mut self, id: &ScreenId) -> Result<(), ModelError> {
        self.screen_index(id)?;
        self.initial_screen = Some(id.clone());
        Ok(())
    }

    pub fn rename_screen(&mut self, id: &ScreenId, name: &str) -> Result<(), ModelError> {
        let idx = self.screen_index(id)?;
        let name = normalized_name(name)?;
        if self.screen_name_taken(&name, Some(id)) {
            return Err(ModelError::DuplicateScreenName { name });
        }
        self.screens[idx].name = name;
        Ok(())
    }

    pub fn set_screen_image(
        &mut self,
        id: &ScreenId,
        image: Option<ImageRef>,
    ) -> Result<(), ModelError> {
        let idx = self.screen_index(id)?;
        self.screens[idx].image = image;
        Ok(())
    }

    /// Removes a screen and clears every link that pointed at it.
    ///
    /// Returns the ids of the hotspots (on other screens) whose link was cleared.
    pub fn delete_screen(&mut self, id: &ScreenId) -> Result<Vec<HotspotId>, ModelError> {
        let idx = self.screen_index(id)?;
        self.screens.remove(idx);
        let mut affected = Vec::new();
        for hotspot in self.screens.iter_mut().flat_map(|s| s.hotspots.iter_mut()) {
            if hotspot.link_target.as_ref() == Some(id) {
                hotspot.link_target = None;
                affected.push(hotspot.id.clone());
            }
        }
        if self.initial_screen.as_ref() == Some(id) {
            self.initial_screen = self.screens.first().map(|s| s.id.clone());
        }
        Ok(affected)
    }

    /// Draws a new unlinked hotspot. Without a name it is called `hotspot_<n>`.
    pub fn add_hotspot(
        &mut self,
        screen: &ScreenId,
        rect: Rect,
        name: Option<&str>,
    ) -> Result<&Hotspot, ModelError> {
        let sidx = self.screen_index(screen)?;
        rect.validate()?;
        let seq = self.counters.next_hotspot;
        let name = match name {
            Some(raw) => {
                let name = normalized_name(raw)?;
                if Self::hotspot_name_taken(&self.screens[sidx], &name, None) {
                    return Err(ModelError::DuplicateHotspotName { name });
                }
                name
            }
            None => {
                let base = format!("hotspot_{seq}");
                let mut candidate = base.clone();
                let mut k = 2;
                while Self::hotspot_name_taken(&self.screens[sidx], &candidate, None) {
                    candidate = format!("{base}_{k}");
                    k += 1;
                }
                candidate
            }
        };
        self.counters.next_hotspot += 1;
        let hotspots = &mut self.screens[sidx].hotspots;
        hotspots.push(Hotspot {
            id: HotspotId(format!("h{seq}")),
            name,
            rect,
            link_target: None,
            s_behaviours: Vec::new(),
            created_seq: seq,
        });
        Ok(hotspots.last().expect("just pushed"))
    }

    pub fn set_hotspot_link(
        &mut self,
        screen: &ScreenId,
        hotspot: &HotspotId,
        target: Option<&ScreenId>,
    ) -> Result<&Hotspot, ModelError> {
        self.update_hotspot(
            screen,
            hotspot,
            HotspotPatch {
                link_target: Some(target.cloned()),
                ..HotspotPatch::default()
            },
        )
    }

    /// Applies every field of `patch` or none of them.
    pub fn update_hotspot(
        &mut self,
        screen: &ScreenId,
        hotspot: &HotspotId,
        patch: HotspotPatch,
    ) -> Result<&Hotspot, ModelError> {
        let sidx = self.screen_index(screen)?;
        let hidx = self.hotspot_index(sidx, hotspot)?;
        let name = match &patch.name {
            Some(raw) => {
                let name = normalized_name(raw)?;
                if Self::hotspot_name_taken(&self.screens[sidx], &name, Some(hotspot)) {
                    return Err(ModelError::DuplicateHotspotName { name });
                }
                Some(name)
            }
            None => None,
        };
        if let Some(rect) = &patch.rect {
            rect.validate()?;
        }
        if let Some(Some(target)) = &patch.link_target {
            self.screen_index(target)?;
        }
        if let Some(list) = &patch.s_behaviours {
            check_s_behaviours(list)?;
        }

        let h = &mut self.screens[sidx].hotspots[hidx];
        if let Some(name) = name {
            h.name = name;
        }
        if let Some(rect) = patch.rect {
            h.rect = rect;
        }
        if let Some(target) = patch.link_target {
            h.link_target = target;
        }
        if let Some(list) = patch.s_behaviours {
            h.s_behaviours = list;
        }
        Ok(h)
    }

    pub fn delete_hotspot(
        &mut self,
        screen: &ScreenId,
        hotspot: &HotspotId,
    ) -> Result<Hotspot, ModelError> {
        let sidx = self.screen_index(screen)?;
        let hidx = self.hotspot_index(sidx, hotspot)?;
        Ok(self.screens[sidx].hotspots.remove(hidx))
    }

    pub fn hit_test(
        &self,
        screen: &ScreenId,
        point: Point,
    ) -> Result<Option<&Hotspot>, ModelError> {
        point.validate()?;
        let idx = self.screen_index(screen)?;
        Ok(self.screens[idx].hit_test(point))
    }

    /// Re-checks every structural invariant. Used after deserialization.
    pub fn check_invariants(&self) -> Vec<InvariantProblem> {
        let mut problems = Vec::new();
        let mut push =
            |path: String, message: String| problems.push(InvariantProblem { path, message });

        if self.name.trim().is_empty() || self.name.trim() != self.name {
            push(
                "name".into(),
                "project name must be non-empty and trimmed".into(),
            );
        }

        let screen_ids: BTreeSet<&ScreenId> = self.screens.iter().map(|s| &s.id).collect();
        let mut seen_screens = HashSet::new();
        let mut seen_screen_names = HashSet::new();
        let mut seen_hotspots = HashSet::new();
        let mut max_screen = 0;
        let mut max_hotspot = 0;

        for screen in &self.screens {
            let spath = format!("screens/{}", screen.id);
            if !seen_screens.insert(&screen.id) {
                push(spath.clone(), format!("duplicate screen id {}", screen.id));
            }
            if let Some(n) = screen
                .id
                .0
                .strip_prefix('s')
                .and_then(|n| n.parse::<u64>().ok())
            {
                max_screen = max_screen.max(n);
            }
            if screen.name.trim().is_empty() {
                push(spath.clone(), "screen name must not be empty".into());
            } else if !seen_screen_names.insert(sanitize_name(&screen.name)) {
                push(
                    spath.clone(),
                    format!("duplicate screen name {:?}", screen.name),
                );
            }
            if let Some(img) = &screen.image {
                if img.width == 0 || img.height == 0 {
                    push(
                        format!("{spath}/image"),
                        "image dimensions must be positive".into(),
                    );
                }
                if img.id != img.content_hash {
                    push(
                        format!("{spath}/image"),
                        "image id must equal its content hash".into(),
                    );
                }
            }

            let mut seen_names = HashSet::new();
            for h in &screen.hotspots {
                let hpath = format!("{spath}/hotspots/{}", h.id);
                if !seen_hotspots.insert(&h.id) {
                    push(hpath.clone(), format!("duplicate hotspot id {}", h.id));
                }
                if let Some(n) = h.id.0.strip_prefix('h').and_then(|n| n.parse::<u64>().ok()) {
                    max_hotspot = max_hotspot.max(n);
                }
                max_hotspot = max_hotspot.max(h.created_seq);
                if h.name.trim().is_empty() {
                    push(hpath.clone(), "hotspot name must not be empty".into());
                } else if !seen_names.insert(sanitize_name(&h.name)) {
                    push(
                        hpath.clone(),
                        format!("duplicate hotspot name {:?}", h.name),
                    );
                }
                if let Err(e) = h.rect.validate() {
                    push(format!("{hpath}/rect"), e.to_string());
                }
                if let Some(target) = &h.link_target {
                    if !screen_ids.contains(target) {
                        push(
                            format!("{hpath}/link_target"),
                            format!("link to unknown screen {target}"),
                        );
                    }
                }
                if let Err(e) = check_s_behaviours(&h.s_behaviours) {
                    push(format!("{hpath}/s_behaviours"), e.to_string());
                }
            }
        }

        match &self.initial_screen {
            Some(id) if !screen_ids.contains(id) => push(
                "initial_screen".into(),
                format!("initial screen {id} does not exist"),
            ),
            None if !self.screens.is_empty() => {
                push("initial_screen".into(), "initial screen missing".into())
            }
            _ => {}
        }
        if self.counters.next_screen <= max_screen || self.counters.next_hotspot <= max_hotspot {
            push(
                "counters".into(),
                "counters must exceed every id already issued".into(),
            );
        }
        problems
    }
}
