//! Viewer-mode execution of a prototype.
//!
//! A session pins an immutable snapshot of the project and its PIM at start;
//! editing the project afterwards does not affect it. Clicks that hit nothing
//! are not recorded, so the trace is always a path through the PIM and
//! replaying it from the initial state re-derives the current state.

use std::sync::Arc;
use std::time::SystemTime;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convert::{convert, ConversionReport, ConvertError};
use crate::pim::{enabled_behaviours, Pim};
use crate::prototype::{HotspotId, ModelError, Point, Project, Screen};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimulatorError {
    #[error(transparent)]
    Convert(#[from] ConvertError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{behaviour} is not enabled in state {state}")]
    BehaviourNotEnabled { state: String, behaviour: String },
    #[error("trace event {seq} cannot be replayed: {reason}")]
    ReplayMismatch { seq: u64, reason: String },
}

impl SimulatorError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Convert(e) => e.code(),
            Self::Model(e) => e.code(),
            Self::BehaviourNotEnabled { .. } => "BehaviourNotEnabled",
            Self::ReplayMismatch { .. } => "ReplayMismatch",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TraceKind {
    Navigate,
    SBehaviour,
    Reset,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub seq: u64,
    pub kind: TraceKind,
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub behaviour: Option<String>,
    pub result: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hotspot: Option<HotspotId>,
    /// S-behaviours carried by the clicked hotspot, for highlighting.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub s_behaviours: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome")]
pub enum ClickOutcome {
    Event(TraceEvent),
    NoOp,
}

#[derive(Debug, Clone)]
pub struct SimulationSession {
    id: String,
    project: Arc<Project>,
    conversion: ConversionReport,
    current: String,
    trace: Vec<TraceEvent>,
    created_at: SystemTime,
}

impl SimulationSession {
    pub fn start(project: &Project) -> Result<Self, SimulatorError> {
        Self::start_shared(Arc::new(project.clone()))
    }

    /// Starts on an already shared snapshot.
    pub fn start_shared(project: Arc<Project>) -> Result<Self, SimulatorError> {
        let conversion = convert(&project)?;
        Ok(Self {
            id: uuid::Uuid::new_v4().simple().to_string(),
            current: conversion.pim.initial.clone(),
            conversion,
            project,
            trace: Vec::new(),
            created_at: SystemTime::now(),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn project(&self) -> &Arc<Project> {
        &self.project
    }

    pub fn conversion(&self) -> &ConversionReport {
        &self.conversion
    }

    pub fn pim(&self) -> &Pim {
        &self.conversion.pim
    }

    pub fn current(&self) -> &str {
        &self.current
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    pub fn created_at(&self) -> SystemTime {
        self.created_at
    }

    /// The screen shown for the current state.
    pub fn current_screen(&self) -> &Screen {
        let id = self
            .conversion
            .name_map
            .screen_for_state(&self.current)
            .expect("every state comes from a screen");
        self.project
            .screen(id)
            .expect("snapshot contains every mapped screen")
    }

    fn record(&mut self, mut event: TraceEvent) -> &TraceEvent {
        event.seq = self.trace.len() as u64 + 1;
        self.current = event.result.clone();
        self.trace.push(event);
        self.trace.last().expect("just pushed")
    }

    /// Resolves a click on the current screen.
    pub fn click(&mut self, point: Point) -> Result<ClickOutcome, SimulatorError> {
        point.validate()?;
        let Some(hotspot) = self.current_screen().hit_test(point) else {
            return Ok(ClickOutcome::NoOp);
        };
        let hotspot_id = hotspot.id.clone();
        let s_behaviours = hotspot.s_behaviours.clone();
        let behaviour = self
            .conversion
            .name_map
            .widgets
            .get(&hotspot_id)
            .and_then(|w| w.behaviour.clone());

        let event = match behaviour {
            Some(behaviour) => {
                let target = self
                    .pim()
                    .transition(&self.current, &behaviour)
                    .map(|t| t.target.clone())
                    .ok_or_else(|| SimulatorError::BehaviourNotEnabled {
                        state: self.current.clone(),
                        behaviour: behaviour.clone(),
                    })?;
                TraceEvent {
                    seq: 0,
                    kind: TraceKind::Navigate,
                    source: self.current.clone(),
                    behaviour: Some(behaviour),
                    result: target,
                    hotspot: Some(hotspot_id),
                    s_behaviours,
                }
            }
            None if !s_behaviours.is_empty() => TraceEvent {
                seq: 0,
                kind: TraceKind::SBehaviour,
                source: self.current.clone(),
                behaviour: None,
                result: self.current.clone(),
                hotspot: Some(hotspot_id),
                s_behaviours,
            },
            None => return Ok(ClickOutcome::NoOp),
        };
        Ok(ClickOutcome::Event(self.record(event).clone()))
    }

    /// Fires an enabled I-behaviour without going through hit testing.
    pub fn step(&mut self, behaviour: &str) -> Result<&TraceEvent, SimulatorError> {
        let enabled = enabled_behaviours(self.pim(), &self.current).unwrap_or_default();
        let target = enabled
            .iter()
            .any(|b| b == behaviour)
            .then(|| self.pim().transition(&self.current, behaviour))
            .flatten()
            .map(|t| t.target.clone())
            .ok_or_else(|| SimulatorError::BehaviourNotEnabled {
                state: self.current.clone(),
                behaviour: behaviour.to_owned(),
            })?;
        let event = TraceEvent {
            seq: 0,
            kind: TraceKind::Navigate,
            source: self.current.clone(),
            behaviour: Some(behaviour.to_owned()),
            result: target,
            hotspot: None,
            s_behaviours: Vec::new(),
        };
        Ok(self.record(event))
    }

    /// Returns to the initial state. The trace is kept and gains a Reset event.
    pub fn reset(&mut self) -> &TraceEvent {
        let event = TraceEvent {
            seq: 0,
            kind: TraceKind::Reset,
            source: self.current.clone(),
            behaviour: None,
            result: self.pim().initial.clone(),
            hotspot: None,
            s_behaviours: Vec::new(),
        };
        self.record(event)
    }

    pub fn replay(&self) -> Result<String, SimulatorError> {
        replay_trace(self.pim(), &self.trace)
    }
}

/// Folds a trace over the PIM from its initial state and returns the final state.
pub fn replay_trace(pim: &Pim, trace: &[TraceEvent]) -> Result<String, SimulatorError> {
    let mut current = pim.initial.clone();
    let mut last_seq = 0;
    for event in trace {
        let fail = |reason: String| SimulatorError::ReplayMismatch {
            seq: event.seq,
            reason,
        };
        if event.seq <= last_seq {
            return Err(fail("sequence numbers must increase".into()));
        }
        last_seq = event.seq;
        if event.kind != TraceKind::Reset && event.source != current {
            return Err(fail(format!(
                "event starts in {} but replay is in {current}",
                event.source
            )));
        }
        current = match event.kind {
            TraceKind::Navigate => {
                let behaviour = event
                    .behaviour
                    .as_deref()
                    .ok_or_else(|| fail("navigation without behaviour".into()))?;
                let t = pim
                    .transition(&current, behaviour)
                    .ok_or_else(|| fail(format!("no transition {current} --{behaviour}-->")))?;
                if t.target != event.result {
                    return Err(fail(format!(
                        "{behaviour} leads to {}, not {}",
                        t.target, event.result
                    )));
                }
                t.target.clone()
            }
            TraceKind::SBehaviour => {
                if event.result != current {
                    return Err(fail("S-behaviours do not change state".into()));
                }
                current
            }
            TraceKind::Reset => pim.initial.clone(),
        };
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prototype::{HotspotPatch, Rect, ScreenId};

    fn home_settings() -> (Project, ScreenId, ScreenId) {
        let mut p = Project::new("clock").unwrap();
        let home = p.add_screen("Home", None).unwrap().id.clone();
        let settings = p.add_screen("Settings", None).unwrap().id.clone();
        let h = p
            .add_hotspot(&home, Rect::new(0.1, 0.1, 0.2, 0.2).unwrap(), None)
            .unwrap()
            .id
            .clone();
        p.set_hotspot_link(&home, &h, Some(&settings)).unwrap();
        let beep = p
            .add_hotspot(&home, Rect::new(0.6, 0.6, 0.2, 0.2).unwrap(), None)
            .unwrap()
            .id
            .clone();
        p.update_hotspot(
            &home,
            &beep,
            HotspotPatch {
                s_behaviours: Some(vec!["S_beep".into()]),
                ..Default::default()
            },
        )
        .unwrap();
        (p, home, settings)
    }

    fn pt(x: f64, y: f64) -> Point {
        Point::new(x, y).unwrap()
    }

    #[test]
    fn start_at_initial() {
        let (p, _, _) = home_settings();
        let s = SimulationSession::start(&p).unwrap();
        assert_eq!(s.current(), "Home");
        assert!(s.trace().is_empty());

        let empty = Project::new("empty").unwrap();
        assert_eq!(
            SimulationSession::start(&empty).unwrap_err(),
            SimulatorError::Convert(ConvertError::EmptyProject)
        );
    }

    #[test]
    fn click_navigates() {
        let (p, _, _) = home_settings();
        let mut s = SimulationSession::start(&p).unwrap();
        let ClickOutcome::Event(e) = s.click(pt(0.2, 0.2)).unwrap() else {
            panic!("expected navigation");
        };
        assert_eq!(e.kind, TraceKind::Navigate);
        assert_eq!(
            (e.source.as_str(), e.behaviour.as_deref(), e.result.as_str()),
            ("Home", Some("I_Settings"), "Settings")
        );
        assert_eq!(s.current(), "Settings");
        assert_eq!(s.current_screen().name, "Settings");
    }

    #[test]
    fn empty_click_is_noop() {
        let (p, _, _) = home_settings();
        let mut s = SimulationSession::start(&p).unwrap();
        assert_eq!(s.click(pt(0.0, 0.9)).unwrap(), ClickOutcome::NoOp);
        assert!(s.trace().is_empty());
    }

    #[test]
    fn s_behaviour_click() {
        let (p, _, _) = home_settings();
        let mut s = SimulationSession::start(&p).unwrap();
        let ClickOutcome::Event(e) = s.click(pt(0.7, 0.7)).unwrap() else {
            panic!("expected S-behaviour event");
        };
        assert_eq!(e.kind, TraceKind::SBehaviour);
        assert_eq!(e.s_behaviours, vec!["S_beep".to_string()]);
        assert!(e.hotspot.is_some());
        assert_eq!(s.current(), "Home");
    }

    #[test]
    fn step_and_reset() {
        let (p, _, _) = home_settings();
        let mut s = SimulationSession::start(&p).unwrap();
        s.step("I_Settings").unwrap();
        assert_eq!(s.current(), "Settings");
        assert_eq!(
            s.step("I_Settings").unwrap_err(),
            SimulatorError::BehaviourNotEnabled {
                state: "Settings".into(),
                behaviour: "I_Settings".into()
            }
        );
        s.reset();
        assert_eq!(s.current(), "Home");
        assert_eq!(s.trace().len(), 2);
        assert_eq!(s.trace()[1].kind, TraceKind::Reset);
        assert_eq!(s.replay().unwrap(), s.current());
    }

    #[test]
    fn reset_fresh_session_logs() {
        let (p, _, _) = home_settings();
        let mut s = SimulationSession::start(&p).unwrap();
        s.reset();
        assert_eq!(s.current(), "Home");
        assert_eq!(s.trace().len(), 1);
    }

    #[test]
    fn session_is_isolated_from_later_edits() {
        let (mut p, _, settings) = home_settings();
        let mut s = SimulationSession::start(&p).unwrap();
        p.delete_screen(&settings).unwrap();
        s.step("I_Settings").unwrap();
        assert_eq!(s.current(), "Settings");
        assert_eq!(s.project().screens().len(), 2);
    }

    #[test]
    fn replay_rejects_tampered_trace() {
        let (p, _, _) = home_settings();
        let mut s = SimulationSession::start(&p).unwrap();
        s.step("I_Settings").unwrap();
        let mut trace = s.trace().to_vec();
        trace[0].result = "Home".into();
        assert!(matches!(
            replay_trace(s.pim(), &trace),
            Err(SimulatorError::ReplayMismatch { seq: 1, .. })
        ));
    }
}
