//! Presentation models and the presentation interaction model (PIM).
//!
//! A [`PresentationModel`] describes one interface state by its widgets. A
//! [`Pim`] is a finite automaton over presentation models whose transitions
//! are I-behaviours triggered from the source state. We require it to be
//! deterministic: one clicked widget leads to exactly one next state.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WidgetCategory {
    ActionControl,
    ValueSelectionControl,
    BinarySelectionControl,
    Display,
}

impl WidgetCategory {
    pub const ALL: [WidgetCategory; 4] = [
        Self::ActionControl,
        Self::ValueSelectionControl,
        Self::BinarySelectionControl,
        Self::Display,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ActionControl => "ActionControl",
            Self::ValueSelectionControl => "ValueSelectionControl",
            Self::BinarySelectionControl => "BinarySelectionControl",
            Self::Display => "Display",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for WidgetCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A behaviour attached to a widget.
///
/// I-behaviours change the interface state and always name a target state;
/// S-behaviours stand for underlying system functionality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum Behaviour {
    #[serde(rename = "I")]
    Interaction { name: String, target: String },
    #[serde(rename = "S")]
    System { name: String },
}

impl Behaviour {
    pub fn interaction(name: impl Into<String>, target: impl Into<String>) -> Self {
        Self::Interaction {
            name: name.into(),
            target: target.into(),
        }
    }

    pub fn system(name: impl Into<String>) -> Self {
        Self::System { name: name.into() }
    }

    pub fn name(&self) -> &str {
        match self {
            Self::Interaction { name, .. } | Self::System { name } => name,
        }
    }

    pub fn target(&self) -> Option<&str> {
        match self {
            Self::Interaction { target, .. } => Some(target),
            Self::System { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Widget {
    pub name: String,
    pub category: WidgetCategory,
    pub behaviours: Vec<Behaviour>,
}

impl Widget {
    pub fn interactions(&self) -> impl Iterator<Item = (&str, &str)> {
        self.behaviours.iter().filter_map(|b| match b {
            Behaviour::Interaction { name, target } => Some((name.as_str(), target.as_str())),
            Behaviour::System { .. } => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresentationModel {
    pub name: String,
    pub widgets: Vec<Widget>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transition {
    pub source: String,
    pub behaviour: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pim {
    pub name: String,
    pub states: Vec<PresentationModel>,
    pub initial: String,
    pub transitions: Vec<Transition>,
}

impl Pim {
    pub fn state(&self, name: &str) -> Option<&PresentationModel> {
        self.states.iter().find(|s| s.name == name)
    }

    pub fn transition(&self, source: &str, behaviour: &str) -> Option<&Transition> {
        self.transitions
            .iter()
            .find(|t| t.source == source && t.behaviour == behaviour)
    }

    pub fn outgoing<'a>(&'a self, source: &'a str) -> impl Iterator<Item = &'a Transition> + 'a {
        self.transitions.iter().filter(move |t| t.source == source)
    }

    /// Transitions implied by the widgets' I-behaviours, sorted and de-duplicated.
    pub fn derive_transitions(states: &[PresentationModel]) -> Vec<Transition> {
        let set: BTreeSet<Transition> = states
            .iter()
            .flat_map(|s| {
                s.widgets.iter().flat_map(move |w| {
                    w.interactions().map(move |(name, target)| Transition {
                        source: s.name.clone(),
                        behaviour: name.to_owned(),
                        target: target.to_owned(),
                    })
                })
            })
            .collect();
        set.into_iter().collect()
    }

    /// Same automaton with states, widgets and transitions sorted by name.
    ///
    /// Two PIMs describe the same model iff their canonical forms are equal.
    pub fn canonical(&self) -> Pim {
        let mut pim = self.clone();
        pim.states.sort_by(|a, b| a.name.cmp(&b.name));
        for state in &mut pim.states {
            state.widgets.sort_by(|a, b| a.name.cmp(&b.name));
        }
        pim.transitions.sort();
        pim
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViolationCode {
    InvalidPimName,
    InvalidStateName,
    DuplicateStateName,
    UnknownInitialState,
    InvalidWidgetName,
    DuplicateWidgetName,
    MultipleIBehaviours,
    InvalidBehaviourName,
    UnknownState,
    OrphanTransitionBehaviour,
    NondeterministicState,
    MissingTransition,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::InvalidPimName => "InvalidPimName",
            Self::InvalidStateName => "InvalidStateName",
            Self::DuplicateStateName => "DuplicateStateName",
            Self::UnknownInitialState => "UnknownInitialState",
            Self::InvalidWidgetName => "InvalidWidgetName",
            Self::DuplicateWidgetName => "DuplicateWidgetName",
            Self::MultipleIBehaviours => "MultipleIBehaviours",
            Self::InvalidBehaviourName => "InvalidBehaviourName",
            Self::UnknownState => "UnknownState",
            Self::OrphanTransitionBehaviour => "OrphanTransitionBehaviour",
            Self::NondeterministicState => "NondeterministicState",
            Self::MissingTransition => "MissingTransition",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
    pub path: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code, self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PimError {
    #[error("unknown state {0:?}")]
    UnknownState(String),
}

impl PimError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::UnknownState(_) => "UnknownState",
        }
    }
}

/// `[A-Za-z][A-Za-z0-9_]*`
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn has_behaviour_prefix(name: &str, prefix: &str) -> bool {
    name.strip_prefix(prefix).is_some_and(|rest| {
        !rest.is_empty() && rest.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
    })
}

pub fn is_i_behaviour_name(name: &str) -> bool {
    has_behaviour_prefix(name, "I_")
}

/// PIM names are free text on a single line, trimmed and non-empty.
pub fn is_valid_pim_name(name: &str) -> bool {
    !name.is_empty() && name.trim() == name && !name.chars().any(char::is_control)
}

/// Checks every PIM, presentation model, widget and transition invariant.
pub fn validate_pim(pim: &Pim) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |code, path: String, message: String| {
        out.push(Violation {
            code,
            message,
            path,
        })
    };

    if !is_valid_pim_name(&pim.name) {
        push(
            ViolationCode::InvalidPimName,
            "name".into(),
            format!(
                "PIM name {:?} must be a trimmed, non-empty single line",
                pim.name
            ),
        );
    }

    let mut state_names = HashSet::new();
    for state in &pim.states {
        let spath = format!("states/{}", state.name);
        if !is_identifier(&state.name) {
            push(
                ViolationCode::InvalidStateName,
                spath.clone(),
                format!("{:?} is not a state identifier", state.name),
            );
        }
        if !state_names.insert(state.name.as_str()) {
            push(
                ViolationCode::DuplicateStateName,
                spath.clone(),
                format!("state {:?} defined twice", state.name),
            );
        }
        let mut widget_names = HashSet::new();
        for widget in &state.widgets {
            let wpath = format!("{spath}/widgets/{}", widget.name);
            if !is_identifier(&widget.name) {
                push(
                    ViolationCode::InvalidWidgetName,
                    wpath.clone(),
                    format!("{:?} is not a widget identifier", widget.name),
                );
            }
            if !widget_names.insert(widget.name.as_str()) {
                push(
                    ViolationCode::DuplicateWidgetName,
                    wpath.clone(),
                    format!("widget {:?} defined twice", widget.name),
                );
            }
            if widget.category == WidgetCategory::ActionControl && widget.interactions().count() > 1
            {
                push(
                    ViolationCode::MultipleIBehaviours,
                    wpath.clone(),
                    "an action control carries at most one I-behaviour".into(),
                );
            }
            for b in &widget.behaviours {
                let ok = match b {
                    Behaviour::Interaction { name, .. } => is_i_behaviour_name(name),
                    Behaviour::System { name } => has_behaviour_prefix(name, "S_"),
                };
                if !ok {
                    push(
                        ViolationCode::InvalidBehaviourName,
                        format!("{wpath}/behaviours/{}", b.name()),
                        format!("behaviour name {:?} does not match its kind", b.name()),
                    );
                }
            }
        }
    }

    if !state_names.contains(pim.initial.as_str()) {
        push(
            ViolationCode::UnknownInitialState,
            "initial".into(),
            format!("initial state {:?} does not exist", pim.initial),
        );
    }

    let mut pairs: HashMap<(&str, &str), usize> = HashMap::new();
    for t in &pim.transitions {
        let tpath = format!("transitions/{}/{}", t.source, t.behaviour);
        for end in [&t.source, &t.target] {
            if !state_names.contains(end.as_str()) {
                push(
                    ViolationCode::UnknownState,
                    tpath.clone(),
                    format!("transition refers to unknown state {end:?}"),
                );
            }
        }
        if !is_i_behaviour_name(&t.behaviour) {
            push(
                ViolationCode::InvalidBehaviourName,
                tpath.clone(),
                format!("transition label {:?} is not an I-behaviour", t.behaviour),
            );
        }
        let on_widget = pim.state(&t.source).is_some_and(|s| {
            s.widgets
                .iter()
                .any(|w| w.interactions().any(|(name, _)| name == t.behaviour))
        });
        if !on_widget {
            push(
                ViolationCode::OrphanTransitionBehaviour,
                tpath.clone(),
                format!("{} is carried by no widget of {}", t.behaviour, t.source),
            );
        }
        let count = pairs.entry((&t.source, &t.behaviour)).or_default();
        *count += 1;
        if *count == 2 {
            push(
                ViolationCode::NondeterministicState,
                tpath,
                format!(
                    "{} has more than one transition labelled {}",
                    t.source, t.behaviour
                ),
            );
        }
    }

    // Every I-behaviour on a widget must be backed by the matching transition.
    let edges: HashSet<(&str, &str, &str)> = pim
        .transitions
        .iter()
        .map(|t| (t.source.as_str(), t.behaviour.as_str(), t.target.as_str()))
        .collect();
    for state in &pim.states {
        for widget in &state.widgets {
            for (name, target) in widget.interactions() {
                let path = format!(
                    "states/{}/widgets/{}/behaviours/{name}",
                    state.name, widget.name
                );
                if !state_names.contains(target) {
                    push(
                        ViolationCode::UnknownState,
                        path,
                        format!("{name} targets unknown state {target:?}"),
                    );
                } else if !edges.contains(&(state.name.as_str(), name, target)) {
                    push(
                        ViolationCode::MissingTransition,
                        path,
                        format!("no transition {} --{name}--> {target}", state.name),
                    );
                }
            }
        }
    }
    out
}

/// I-behaviours carried by the state's widgets that also label an outgoing transition.
pub fn enabled_behaviours(pim: &Pim, state: &str) -> Result<Vec<String>, PimError> {
    let pm = pim
        .state(state)
        .ok_or_else(|| PimError::UnknownState(state.to_owned()))?;
    let outgoing: HashSet<&str> = pim.outgoing(state).map(|t| t.behaviour.as_str()).collect();
    let names: BTreeSet<&str> = pm
        .widgets
        .iter()
        .flat_map(|w| w.interactions().map(|(name, _)| name))
        .filter(|name| outgoing.contains(name))
        .collect();
    Ok(names.into_iter().map(str::to_owned).collect())
}

/// Out-neighbours of every state, keyed by source, each list sorted by (target, behaviour).
pub(crate) fn adjacency(pim: &Pim) -> BTreeMap<&str, Vec<&Transition>> {
    let mut adj: BTreeMap<&str, Vec<&Transition>> = pim
        .states
        .iter()
        .map(|s| (s.name.as_str(), Vec::new()))
        .collect();
    for t in &pim.transitions {
        adj.entry(t.source.as_str()).or_default().push(t);
    }
    for list in adj.values_mut() {
        list.sort_by(|a, b| (&a.target, &a.behaviour).cmp(&(&b.target, &b.behaviour)));
    }
    adj
}

#[cfg(test)]
mod tests {
    use super::*;

    fn action(name: &str, behaviours: Vec<Behaviour>) -> Widget {
        Widget {
            name: name.into(),
            category: WidgetCategory::ActionControl,
            behaviours,
        }
    }

    fn two_state() -> Pim {
        Pim {
            name: "demo".into(),
            states: vec![
                PresentationModel {
                    name: "A".into(),
                    widgets: vec![action("go", vec![Behaviour::interaction("I_B", "B")])],
                },
                PresentationModel {
                    name: "B".into(),
                    widgets: vec![],
                },
            ],
            initial: "A".into(),
            transitions: vec![Transition {
                source: "A".into(),
                behaviour: "I_B".into(),
                target: "B".into(),
            }],
        }
    }

    fn codes(pim: &Pim) -> Vec<ViolationCode> {
        validate_pim(pim).into_iter().map(|v| v.code).collect()
    }

    #[test]
    fn well_formed_pim_has_no_violations() {
        assert_eq!(validate_pim(&two_state()), vec![]);
    }

    #[test]
    fn orphan_transition() {
        let mut pim = two_state();
        pim.transitions.push(Transition {
            source: "B".into(),
            behaviour: "I_A".into(),
            target: "A".into(),
        });
        assert_eq!(codes(&pim), vec![ViolationCode::OrphanTransitionBehaviour]);
    }

    #[test]
    fn duplicate_source_behaviour_pair() {
        let mut pim = two_state();
        pim.transitions.push(pim.transitions[0].clone());
        assert_eq!(codes(&pim), vec![ViolationCode::NondeterministicState]);
    }

    #[test]
    fn widget_behaviour_without_transition() {
        let mut pim = two_state();
        pim.transitions.clear();
        assert_eq!(codes(&pim), vec![ViolationCode::MissingTransition]);
    }

    #[test]
    fn structural_violations() {
        let mut pim = two_state();
        pim.initial = "Z".into();
        pim.states[1].name = "2B".into();
        pim.states[0]
            .widgets
            .push(action("go", vec![Behaviour::system("beep")]));
        let got = codes(&pim);
        for code in [
            ViolationCode::UnknownInitialState,
            ViolationCode::InvalidStateName,
            ViolationCode::DuplicateWidgetName,
            ViolationCode::InvalidBehaviourName,
            ViolationCode::UnknownState,
        ] {
            assert!(got.contains(&code), "{code} missing from {got:?}");
        }
    }

    #[test]
    fn action_control_single_interaction() {
        let mut pim = two_state();
        pim.states[0].widgets[0]
            .behaviours
            .push(Behaviour::interaction("I_A", "A"));
        pim.transitions.push(Transition {
            source: "A".into(),
            behaviour: "I_A".into(),
            target: "A".into(),
        });
        assert_eq!(codes(&pim), vec![ViolationCode::MultipleIBehaviours]);
        // other categories may carry several
        pim.states[0].widgets[0].category = WidgetCategory::ValueSelectionControl;
        assert_eq!(codes(&pim), vec![]);
    }

    #[test]
    fn enabled_behaviours_cases() {
        let mut pim = two_state();
        assert_eq!(
            enabled_behaviours(&pim, "A").unwrap(),
            vec!["I_B".to_string()]
        );
        assert_eq!(enabled_behaviours(&pim, "B").unwrap(), Vec::<String>::new());
        pim.states[0]
            .widgets
            .push(action("go2", vec![Behaviour::interaction("I_B", "B")]));
        assert_eq!(
            enabled_behaviours(&pim, "A").unwrap(),
            vec!["I_B".to_string()]
        );
        assert_eq!(
            enabled_behaviours(&pim, "Nope").unwrap_err(),
            PimError::UnknownState("Nope".into())
        );
    }

    #[test]
    fn identifiers() {
        assert!(is_identifier("Main_Menu"));
        assert!(!is_identifier("_x"));
        assert!(!is_identifier("2nd"));
        assert!(!is_identifier(""));
        assert!(is_i_behaviour_name("I_B"));
        assert!(!is_i_behaviour_name("I_"));
        assert!(!is_i_behaviour_name("S_B"));
    }

    #[test]
    fn derive_transitions_dedups() {
        let mut pim = two_state();
        pim.states[0]
            .widgets
            .push(action("go2", vec![Behaviour::interaction("I_B", "B")]));
        assert_eq!(Pim::derive_transitions(&pim.states), pim.transitions);
    }
}
