//! Prototype to PIM conversion.
//!
//! Each screen becomes a state and each hotspot an action-control widget.
//! A linked hotspot carries the I-behaviour `I_<target state>`, so every
//! hotspot on one screen that links to the same destination shares one
//! behaviour name and the resulting transitions merge into one.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pim::{Behaviour, Pim, PresentationModel, Transition, Widget, WidgetCategory};
use crate::prototype::{HotspotId, Project, ScreenId};

/// Maps an arbitrary display name onto a state identifier `[A-Za-z][A-Za-z0-9_]*`.
///
/// Every other character becomes `_`, runs of `_` collapse, and an `S` is
/// prefixed when the result does not start with a letter.
pub fn sanitize_name(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len() + 1);
    for c in raw.chars() {
        let c = if c.is_ascii_alphanumeric() { c } else { '_' };
        if c == '_' && out.ends_with('_') {
            continue;
        }
        out.push(c);
    }
    if !out.starts_with(|c: char| c.is_ascii_alphabetic()) {
        out.insert(0, 'S');
    }
    out
}

pub fn i_behaviour_for(target_state: &str) -> String {
    format!("I_{target_state}")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConvertError {
    #[error("the project has no screens")]
    EmptyProject,
    #[error("the project has no initial screen")]
    NoInitialScreen,
    #[error("{first} and {second} both map to the name {name:?}")]
    NameCollision {
        name: String,
        first: String,
        second: String,
    },
    #[error("hotspot {hotspot} links to unknown screen {target}")]
    UnknownScreen {
        hotspot: HotspotId,
        target: ScreenId,
    },
}

impl ConvertError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::EmptyProject => "EmptyProject",
            Self::NoInitialScreen => "NoInitialScreen",
            Self::NameCollision { .. } => "NameCollision",
            Self::UnknownScreen { .. } => "UnknownScreen",
        }
    }

    /// Element path of the offending item, when there is one.
    pub fn path(&self) -> Option<String> {
        match self {
            Self::NameCollision { second, .. } => Some(second.clone()),
            Self::UnknownScreen { hotspot, .. } => Some(format!("hotspots/{hotspot}")),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WarningCode {
    UnlinkedHotspot,
    MissingImage,
    SinkScreen,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub code: WarningCode,
    pub message: String,
    pub path: String,
    pub screen: ScreenId,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hotspot: Option<HotspotId>,
}

/// Generated names for one hotspot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WidgetName {
    pub state: String,
    pub widget: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub behaviour: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameMap {
    pub states: BTreeMap<ScreenId, String>,
    pub widgets: BTreeMap<HotspotId, WidgetName>,
}

impl NameMap {
    pub fn screen_for_state(&self, state: &str) -> Option<&ScreenId> {
        self.states
            .iter()
            .find_map(|(id, name)| (name == state).then_some(id))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversionReport {
    pub pim: Pim,
    pub warnings: Vec<Warning>,
    pub name_map: NameMap,
}

/// Free-text PIM name derived from the project name: one trimmed line.
fn pim_name(project_name: &str) -> String {
    let cleaned: String = project_name
        .chars()
        .map(|c| if c.is_control() { ' ' } else { c })
        .collect();
    let trimmed = cleaned.trim();
    if trimmed.is_empty() {
        "prototype".to_owned()
    } else {
        trimmed.to_owned()
    }
}

pub fn convert(project: &Project) -> Result<ConversionReport, ConvertError> {
    if project.screens().is_empty() {
        return Err(ConvertError::EmptyProject);
    }
    let initial_id = project
        .initial_screen()
        .ok_or(ConvertError::NoInitialScreen)?;

    let mut name_map = NameMap::default();
    let mut owner_of: HashMap<String, &ScreenId> = HashMap::new();
    for screen in project.screens() {
        let name = sanitize_name(&screen.name);
        if let Some(first) = owner_of.insert(name.clone(), &screen.id) {
            return Err(ConvertError::NameCollision {
                name,
                first: format!("screens/{first}"),
                second: format!("screens/{}", screen.id),
            });
        }
        name_map.states.insert(screen.id.clone(), name);
    }
    let initial = name_map
        .states
        .get(initial_id)
        .cloned()
        .ok_or(ConvertError::NoInitialScreen)?;

    let targeted: std::collections::HashSet<&ScreenId> = project
        .screens()
        .iter()
        .flat_map(|s| s.hotspots.iter().filter_map(|h| h.link_target.as_ref()))
        .collect();

    let mut states = Vec::with_capacity(project.screens().len());
    let mut transitions: BTreeMap<(String, String), String> = BTreeMap::new();
    let mut warnings = Vec::new();

    for screen in project.screens() {
        let state = name_map.states[&screen.id].clone();
        let spath = format!("screens/{}", screen.id);
        if screen.image.is_none() {
            warnings.push(Warning {
                code: WarningCode::MissingImage,
                message: format!("screen {:?} has no image", screen.name),
                path: spath.clone(),
                screen: screen.id.clone(),
                hotspot: None,
            });
        }
        if screen.hotspots.is_empty() && targeted.contains(&screen.id) {
            warnings.push(Warning {
                code: WarningCode::SinkScreen,
                message: format!(
                    "screen {:?} is linked to but has no hotspots to leave it",
                    screen.name
                ),
                path: spath.clone(),
                screen: screen.id.clone(),
                hotspot: None,
            });
        }

        let mut widget_owner: HashMap<String, &HotspotId> = HashMap::new();
        let mut widgets = Vec::with_capacity(screen.hotspots.len());
        for hotspot in &screen.hotspots {
            let hpath = format!("{spath}/hotspots/{}", hotspot.id);
            let widget = sanitize_name(&hotspot.name);
            if let Some(first) = widget_owner.insert(widget.clone(), &hotspot.id) {
                return Err(ConvertError::NameCollision {
                    name: widget,
                    first: format!("{spath}/hotspots/{first}"),
                    second: hpath,
                });
            }

            let mut behaviours = Vec::with_capacity(hotspot.s_behaviours.len() + 1);
            let behaviour =
                match &hotspot.link_target {
                    Some(target) => {
                        let target_state = name_map.states.get(target).ok_or_else(|| {
                            ConvertError::UnknownScreen {
                                hotspot: hotspot.id.clone(),
                                target: target.clone(),
                            }
                        })?;
                        let name = i_behaviour_for(target_state);
                        behaviours.push(Behaviour::interaction(name.clone(), target_state.clone()));
                        transitions.insert((state.clone(), name.clone()), target_state.clone());
                        Some(name)
                    }
                    None => {
                        warnings.push(Warning {
                            code: WarningCode::UnlinkedHotspot,
                            message: format!(
                                "hotspot {:?} on {:?} links nowhere",
                                hotspot.name, screen.name
                            ),
                            path: hpath,
                            screen: screen.id.clone(),
                            hotspot: Some(hotspot.id.clone()),
                        });
                        None
                    }
                };
            behaviours.extend(hotspot.s_behaviours.iter().cloned().map(Behaviour::system));

            name_map.widgets.insert(
                hotspot.id.clone(),
                crate::convert::WidgetName {
                    state: state.clone(),
                    widget: widget.clone(),
                    behaviour,
                },
            );
            widgets.push(Widget {
                name: widget,
                category: WidgetCategory::ActionControl,
                behaviours,
            });
        }
        states.push(PresentationModel {
            name: state,
            widgets,
        });
    }

    let transitions = transitions
        .into_iter()
        .map(|((source, behaviour), target)| Transition {
            source,
            behaviour,
            target,
        })
        .collect();

    Ok(ConversionReport {
        pim: Pim {
            name: pim_name(project.name()),
            states,
            initial,
            transitions,
        },
        warnings,
        name_map,
    })
}
