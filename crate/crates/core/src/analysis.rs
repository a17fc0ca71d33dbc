//! Graph analyses over a PIM.
//!
//! Every traversal visits states and out-edges in lexicographic order (edges
//! by target name, then behaviour), so reports and generated tests are
//! byte-stable across runs.

use std::collections::{BTreeSet, HashMap};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convert::{ConversionReport, WarningCode};
use crate::pim::{adjacency, validate_pim, Pim, Transition, Violation};
use crate::prototype::{HotspotId, ScreenId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("the PIM is invalid ({} violation(s))", .0.len())]
    InvalidPim(Vec<Violation>),
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("the target state {0:?} is the initial state")]
    TargetIsInitial(String),
    #[error("analysis cancelled")]
    Cancelled,
}

impl AnalysisError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::InvalidPim(_) => "InvalidPim",
            Self::UnknownState(_) => "UnknownState",
            Self::TargetIsInitial(_) => "TargetIsInitial",
            Self::Cancelled => "Cancelled",
        }
    }
}

/// Cooperative cancellation flag, checked between BFS layers.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::Relaxed);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::Relaxed)
    }

    fn check(&self) -> Result<(), AnalysisError> {
        if self.is_cancelled() {
            Err(AnalysisError::Cancelled)
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DanglingHotspot {
    pub screen: ScreenId,
    pub hotspot: HotspotId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub reachable: BTreeSet<String>,
    pub unreachable: BTreeSet<String>,
    pub dangling_hotspots: Vec<DanglingHotspot>,
    pub dead_ends: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TransitionKey {
    pub source: String,
    pub behaviour: String,
}

impl From<&Transition> for TransitionKey {
    fn from(t: &Transition) -> Self {
        Self {
            source: t.source.clone(),
            behaviour: t.behaviour.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestStep {
    pub state: String,
    pub behaviour: String,
    pub next: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    pub steps: Vec<TestStep>,
    pub covered_transitions: BTreeSet<TransitionKey>,
}

impl TestCase {
    pub fn final_state(&self) -> Option<&str> {
        self.steps.last().map(|s| s.next.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSuite {
    pub tests: Vec<TestCase>,
    /// Transitions that no test can reach from the initial state.
    pub uncovered: BTreeSet<TransitionKey>,
}

/// Result of a must-pass-through query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCheck {
    pub gate: String,
    pub target: String,
    pub holds: bool,
    /// The target is unreachable, so the property holds trivially.
    pub vacuous: bool,
}

/// Index-based view of a validated PIM.
struct Graph<'a> {
    names: Vec<&'a str>,
    index: HashMap<&'a str, usize>,
    succ: Vec<Vec<(usize, &'a Transition)>>,
    initial: usize,
}

impl<'a> Graph<'a> {
    fn new(pim: &'a Pim) -> Result<Self, AnalysisError> {
        let violations = validate_pim(pim);
        if !violations.is_empty() {
            return Err(AnalysisError::InvalidPim(violations));
        }
        let adj = adjacency(pim);
        let names: Vec<&str> = adj.keys().copied().collect();
        let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let succ = adj
            .values()
            .map(|edges| {
                edges
                    .iter()
                    .map(|t| (index[t.target.as_str()], *t))
                    .collect()
            })
            .collect();
        Ok(Self {
            initial: index[pim.initial.as_str()],
            names,
            index,
            succ,
        })
    }

    fn node(&self, name: &str) -> Result<usize, AnalysisError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| AnalysisError::UnknownState(name.to_owned()))
    }

    /// Layered BFS from the initial state, never entering `skip`.
    /// Returns the BFS-tree parent edge of every visited node.
    #[allow(clippy::type_complexity)]
    fn bfs(
        &self,
        skip: Option<usize>,
        cancel: &CancelToken,
    ) -> Result<(Vec<bool>, Vec<Option<(usize, &'a Transition)>>), AnalysisError> {
        let n = self.names.len();
        let mut visited = vec![false; n];
        let mut parent = vec![None; n];
        if skip == Some(self.initial) {
            return Ok((visited, parent));
        }
        visited[self.initial] = true;
        let mut frontier = vec![self.initial];
        while !frontier.is_empty() {
            cancel.check()?;
            let mut next = Vec::new();
            for &u in &frontier {
                for &(v, t) in &self.succ[u] {
                    if !visited[v] && Some(v) != skip {
                        visited[v] = true;
                        parent[v] = Some((u, t));
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
        Ok((visited, parent))
    }

    /// Reverse postorder of the reachable subgraph (DFS in lexicographic edge order).
    fn reverse_postorder(&self) -> Vec<usize> {
        let n = self.names.len();
        let mut seen = vec![false; n];
        let mut post = Vec::with_capacity(n);
        let mut stack = vec![(self.initial, 0usize)];
        seen[self.initial] = true;
        while let Some((u, i)) = stack.pop() {
            if let Some(&(v, _)) = self.succ[u].get(i) {
                stack.push((u, i + 1));
                if !seen[v] {
                    seen[v] = true;
                    stack.push((v, 0));
                }
            } else {
                post.push(u);
            }
        }
        post.reverse();
        post
    }

    /// Immediate dominators (Cooper, Harvey & Kennedy). `None` for unreachable nodes.
    fn immediate_dominators(&self) -> Vec<Option<usize>> {
        let n = self.names.len();
        let rpo = self.reverse_postorder();
        let mut order = vec![usize::MAX; n];
        for (i, &u) in rpo.iter().enumerate() {
            order[u] = i;
        }
        let mut preds = vec![Vec::new(); n];
        for &u in &rpo {
            for &(v, _) in &self.succ[u] {
                preds[v].push(u);
            }
        }

        let mut idom: Vec<Option<usize>> = vec![None; n];
        idom[self.initial] = Some(self.initial);
        let intersect = |idom: &[Option<usize>], mut a: usize, mut b: usize| {
            while a != b {
                while order[a] > order[b] {
                    a = idom[a].expect("processed");
                }
                while order[b] > order[a] {
                    b = idom[b].expect("processed");
                }
            }
            a
        };

        let mut changed = true;
        while changed {
            changed = false;
            for &u in rpo.iter().skip(1) {
                let mut new_idom = None;
                for &p in &preds[u] {
                    if idom[p].is_none() {
                        continue;
                    }
                    new_idom = Some(match new_idom {
                        None => p,
                        Some(cur) => intersect(&idom, p, cur),
                    });
                }
                if new_idom.is_some() && idom[u] != new_idom {
                    idom[u] = new_idom;
                    changed = true;
                }
            }
        }
        idom
    }
}

/// Reachable / unreachable states and dead ends.
pub fn reachability(pim: &Pim) -> Result<AnalysisReport, AnalysisError> {
    reachability_with(pim, &CancelToken::new())
}

pub fn reachability_with(pim: &Pim, cancel: &CancelToken) -> Result<AnalysisReport, AnalysisError> {
    let graph = Graph::new(pim)?;
    let (visited, _) = graph.bfs(None, cancel)?;
    let mut report = AnalysisReport {
        reachable: BTreeSet::new(),
        unreachable: BTreeSet::new(),
        dangling_hotspots: Vec::new(),
        dead_ends: BTreeSet::new(),
    };
    for (i, name) in graph.names.iter().enumerate() {
        let name = (*name).to_owned();
        if graph.succ[i].is_empty() {
            report.dead_ends.insert(name.clone());
        }
        if visited[i] {
            report.reachable.insert(name);
        } else {
            report.unreachable.insert(name);
        }
    }
    Ok(report)
}

/// Reachability over a conversion result, with unlinked hotspots listed as dangling.
pub fn analyze(conversion: &ConversionReport) -> Result<AnalysisReport, AnalysisError> {
    let mut report = reachability(&conversion.pim)?;
    report.dangling_hotspots = conversion
        .warnings
        .iter()
        .filter(|w| w.code == WarningCode::UnlinkedHotspot)
        .filter_map(|w| {
            w.hotspot.as_ref().map(|h| DanglingHotspot {
                screen: w.screen.clone(),
                hotspot: h.clone(),
            })
        })
        .collect();
    Ok(report)
}

/// Reachability report plus an optional gate verdict. This is the `analyze`
/// payload of both the CLI and the HTTP API.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisOutcome {
    #[serde(flatten)]
    pub report: AnalysisReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gate_check: Option<GateCheck>,
}

impl AnalysisOutcome {
    /// No unreachable states and, if a gate was checked, it holds.
    pub fn passed(&self) -> bool {
        self.report.unreachable.is_empty() && self.gate_check.as_ref().is_none_or(|g| g.holds)
    }
}

/// [`analyze`], plus a must-pass-through check when `gate` is `Some((gate, target))`.
pub fn analyze_with_gate(
    conversion: &ConversionReport,
    gate: Option<(&str, &str)>,
) -> Result<AnalysisOutcome, AnalysisError> {
    let report = analyze(conversion)?;
    let gate_check = gate
        .map(|(gate, target)| must_pass_through(&conversion.pim, gate, target))
        .transpose()?;
    Ok(AnalysisOutcome { report, gate_check })
}

/// Whether every path from the initial state to `target` visits `gate`.
pub fn must_pass_through(pim: &Pim, gate: &str, target: &str) -> Result<GateCheck, AnalysisError> {
    must_pass_through_with(pim, gate, target, &CancelToken::new())
}

pub fn must_pass_through_with(
    pim: &Pim,
    gate: &str,
    target: &str,
    cancel: &CancelToken,
) -> Result<GateCheck, AnalysisError> {
    let graph = Graph::new(pim)?;
    let g = graph.node(gate)?;
    let t = graph.node(target)?;
    if t == graph.initial {
        return Err(AnalysisError::TargetIsInitial(target.to_owned()));
    }
    let (visited, _) = graph.bfs(None, cancel)?;
    cancel.check()?;
    let (holds, vacuous) = if !visited[t] {
        (true, true)
    } else {
        let idom = graph.immediate_dominators();
        let mut node = t;
        let mut holds = node == g;
        while !holds && node != graph.initial {
            node = idom[node].expect("reachable nodes have an immediate dominator");
            holds = node == g;
        }
        (holds, false)
    };
    Ok(GateCheck {
        gate: gate.to_owned(),
        target: target.to_owned(),
        holds,
        vacuous,
    })
}

/// Immediate dominator of every reachable non-initial state.
pub fn immediate_dominators(pim: &Pim) -> Result<Vec<(String, String)>, AnalysisError> {
    let graph = Graph::new(pim)?;
    let idom = graph.immediate_dominators();
    Ok(idom
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != graph.initial)
        .filter_map(|(i, d)| d.map(|d| (graph.names[i].to_owned(), graph.names[d].to_owned())))
        .collect())
}

/// Abstract tests achieving transition coverage of the reachable automaton.
///
/// Each candidate test is the BFS shortest path from the initial state to a
/// transition's source followed by that transition. Longer candidates are
/// kept first; a candidate whose goal transition is already covered by a kept
/// test is dropped. Output is ordered by goal transition `(source, behaviour)`.
pub fn generate_tests(pim: &Pim) -> Result<TestSuite, AnalysisError> {
    generate_tests_with(pim, &CancelToken::new())
}

pub fn generate_tests_with(pim: &Pim, cancel: &CancelToken) -> Result<TestSuite, AnalysisError> {
    let graph = Graph::new(pim)?;
    let (visited, parent) = graph.bfs(None, cancel)?;

    let path_to = |mut node: usize| {
        let mut steps = Vec::new();
        while let Some((prev, t)) = parent[node] {
            steps.push(t);
            node = prev;
        }
        steps.reverse();
        steps
    };

    let mut goals: Vec<&Transition> = pim.transitions.iter().collect();
    goals.sort();
    let mut uncovered = BTreeSet::new();
    let mut candidates: Vec<(TransitionKey, Vec<&Transition>)> = Vec::new();
    for t in goals {
        let source = graph.index[t.source.as_str()];
        if !visited[source] {
            uncovered.insert(TransitionKey::from(t));
            continue;
        }
        let mut steps = path_to(source);
        steps.push(t);
        candidates.push((TransitionKey::from(t), steps));
    }
    cancel.check()?;

    let mut by_length: Vec<usize> = (0..candidates.len()).collect();
    by_length.sort_by(|&a, &b| {
        candidates[b]
            .1
            .len()
            .cmp(&candidates[a].1.len())
            .then_with(|| candidates[a].0.cmp(&candidates[b].0))
    });
    let mut covered: BTreeSet<TransitionKey> = BTreeSet::new();
    let mut kept = Vec::new();
    for i in by_length {
        let (goal, steps) = &candidates[i];
        if covered.contains(goal) {
            continue;
        }
        covered.extend(steps.iter().map(|t| TransitionKey::from(*t)));
        kept.push(i);
    }
    kept.sort_by(|&a, &b| candidates[a].0.cmp(&candidates[b].0));

    let tests = kept
        .into_iter()
        .enumerate()
        .map(|(n, i)| {
            let steps = &candidates[i].1;
            TestCase {
                id: format!("TC{}", n + 1),
                covered_transitions: steps.iter().map(|t| TransitionKey::from(*t)).collect(),
                steps: steps
                    .iter()
                    .map(|t| TestStep {
                        state: t.source.clone(),
                        behaviour: t.behaviour.clone(),
                        next: t.target.clone(),
                    })
                    .collect(),
            }
        })
        .collect();
    Ok(TestSuite { tests, uncovered })
}
