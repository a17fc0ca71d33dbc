//! Core engine of the PIM prototyper.
//!
//! A designer sketches a clickable mock-up as a [`Project`]: screens backed by
//! images, rectangular hotspots drawn over them, and links from hotspots to
//! screens. [`convert()`] turns that mock-up into a [`Pim`], a finite state
//! automaton whose states are presentation models and whose transitions are
//! interaction behaviours. The [`analysis`] module runs reachability,
//! must-pass-through and abstract test generation over the automaton, and
//! [`simulator`] drives the prototype the way the viewer does.

pub mod analysis;
pub mod convert;
pub mod io;
pub mod pim;
pub mod prototype;
pub mod simulator;

#[cfg(any(test, feature = "testkit"))]
pub mod testkit;

pub use analysis::{
    analyze, analyze_with_gate, generate_tests, must_pass_through, reachability, AnalysisError,
    AnalysisOutcome, AnalysisReport, CancelToken, GateCheck, TestCase, TestStep, TestSuite,
    TransitionKey,
};
pub use convert::{
    convert, sanitize_name, ConversionReport, ConvertError, NameMap, Warning, WarningCode,
};
pub use pim::{
    enabled_behaviours, validate_pim, Behaviour, Pim, PimError, PresentationModel, Transition,
    Violation, ViolationCode, Widget, WidgetCategory,
};
pub use prototype::{
    Hotspot, HotspotId, HotspotPatch, ImageRef, MediaType, ModelError, Point, Project, ProjectId,
    Rect, Screen, ScreenId,
};
pub use simulator::{ClickOutcome, SimulationSession, SimulatorError, TraceEvent, TraceKind};
