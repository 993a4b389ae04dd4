//! Reachability-graph construction for bounded LSPs, with a state cap and a
//! coverability-style unboundedness heuristic, plus deadlock/livelock/live
//! state classification.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::net::{FinalSpec, Label, Lsp, Marking};

pub const DEFAULT_MAX_STATES: usize = 1_000_000;

/// What a state of a stochastic transition system stands for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StateInfo {
    Marking(Marking),
    /// Product state: (reachability-graph state, DFA state).
    Pair(usize, usize),
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub source: usize,
    /// Id of the net transition that fired (kept for provenance and for
    /// determinism checks on products).
    pub transition: String,
    pub label: Label,
    pub target: usize,
    pub probability: f64,
}

/// A finite labelled transition system with per-edge probabilities. Serves
/// both as the stochastic reachability graph of an LSP and as a product
/// system (where it may be sub-stochastic).
#[derive(Debug, Clone)]
pub struct Sts {
    pub states: Vec<StateInfo>,
    pub initial: usize,
    pub finals: BTreeSet<usize>,
    outgoing: Vec<Vec<Edge>>,
}

impl Sts {
    pub fn new(states: Vec<StateInfo>, initial: usize, finals: BTreeSet<usize>) -> Self {
        let n = states.len();
        Sts { states, initial, finals, outgoing: vec![Vec::new(); n] }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_edges(&self) -> usize {
        self.outgoing.iter().map(Vec::len).sum()
    }

    pub fn outgoing(&self, state: usize) -> &[Edge] {
        &self.outgoing[state]
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.outgoing.iter().flatten()
    }

    pub fn add_edge(&mut self, edge: Edge) {
        debug_assert!(edge.source < self.states.len() && edge.target < self.states.len());
        self.outgoing[edge.source].push(edge);
    }

    pub fn is_deadlock(&self, state: usize) -> bool {
        self.outgoing[state].is_empty()
    }

    /// Total outgoing probability mass of a state.
    pub fn out_mass(&self, state: usize) -> f64 {
        self.outgoing[state].iter().map(|e| e.probability).sum()
    }

    /// States from which some state in `targets` is reachable (including the
    /// targets themselves).
    pub fn can_reach(&self, targets: &BTreeSet<usize>) -> Vec<bool> {
        let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); self.num_states()];
        for e in self.edges() {
            incoming[e.target].push(e.source);
        }
        let mut seen = vec![false; self.num_states()];
        let mut queue: VecDeque<usize> = targets.iter().copied().collect();
        for &t in targets {
            seen[t] = true;
        }
        while let Some(s) = queue.pop_front() {
            for &p in &incoming[s] {
                if !seen[p] {
                    seen[p] = true;
                    queue.push_back(p);
                }
            }
        }
        seen
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateClass {
    Deadlock,
    Livelock,
    Live,
}

/// Deadlocks are out-degree-0 states; livelocks are non-deadlock states from
/// which no deadlock is reachable; everything else is live.
pub fn classify_states(sts: &Sts) -> Vec<StateClass> {
    let deadlocks: BTreeSet<usize> =
        (0..sts.num_states()).filter(|&s| sts.is_deadlock(s)).collect();
    let reaches = sts.can_reach(&deadlocks);
    (0..sts.num_states())
        .map(|s| {
            if deadlocks.contains(&s) {
                StateClass::Deadlock
            } else if reaches[s] {
                StateClass::Live
            } else {
                StateClass::Livelock
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct GraphStats {
    pub state_count: usize,
    pub edge_count: usize,
    pub final_count: usize,
    pub deadlock_count: usize,
    pub livelock_count: usize,
    /// False if the domination heuristic flagged a possibly unbounded net.
    pub bounded_within_cap: bool,
}

#[derive(Debug)]
pub struct ReachabilityGraph {
    pub sts: Sts,
    pub warnings: Vec<String>,
    /// Set if a generated marking strictly dominated an ancestor.
    pub domination_detected: bool,
}

impl ReachabilityGraph {
    pub fn stats(&self) -> GraphStats {
        let classes = classify_states(&self.sts);
        GraphStats {
            state_count: self.sts.num_states(),
            edge_count: self.sts.num_edges(),
            final_count: self.sts.finals.len(),
            deadlock_count: classes.iter().filter(|c| **c == StateClass::Deadlock).count(),
            livelock_count: classes.iter().filter(|c| **c == StateClass::Livelock).count(),
            bounded_within_cap: !self.domination_detected,
        }
    }
}

/// Breadth-first closure of the marking graph from the initial marking.
/// State 0 is the initial marking; states are indexed in FIFO discovery
/// order so indexing is reproducible.
pub fn build_reachability_graph(lsp: &Lsp, max_states: usize) -> Result<ReachabilityGraph> {
    let mut index: HashMap<Marking, usize> = HashMap::new();
    let mut markings: Vec<Marking> = Vec::new();
    let mut parent: Vec<Option<(usize, String)>> = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut domination_detected = false;

    index.insert(lsp.initial.clone(), 0);
    markings.push(lsp.initial.clone());
    parent.push(None);
    queue.push_back(0);

    while let Some(s) = queue.pop_front() {
        let marking = markings[s].clone();
        let enabled = lsp.enabled(&marking);
        for &t in &enabled {
            let next = lsp.fire(&marking, t)?;
            let p = lsp.firing_probability(&marking, t);
            let target = match index.get(&next) {
                Some(&i) => i,
                None => {
                    let i = markings.len();
                    if i >= max_states {
                        return Err(Error::StateCapExceeded {
                            cap: max_states,
                            witness: witness_path(&parent, s, &lsp.net.transition(t).id),
                        });
                    }
                    // Coverability-style check: a new marking strictly
                    // dominating an ancestor on its generation path pumps
                    // tokens forever.
                    if !domination_detected {
                        let mut cursor = Some(s);
                        while let Some(c) = cursor {
                            if next.strictly_dominates(&markings[c]) {
                                domination_detected = true;
                                break;
                            }
                            cursor = parent[c].as_ref().map(|(p, _)| *p);
                        }
                    }
                    index.insert(next.clone(), i);
                    markings.push(next);
                    parent.push(Some((s, lsp.net.transition(t).id.clone())));
                    queue.push_back(i);
                    i
                }
            };
            edges.push(Edge {
                source: s,
                transition: lsp.net.transition(t).id.clone(),
                label: lsp.net.transition(t).label.clone(),
                target,
                probability: p,
            });
        }
    }

    let mut warnings = Vec::new();
    if domination_detected {
        warnings.push(
            "a reachable marking strictly dominates an ancestor: the net is unbounded".into(),
        );
    }

    let deadlocks: BTreeSet<usize> = (0..markings.len())
        .filter(|&s| !edges.iter().any(|e| e.source == s))
        .collect();

    let finals: BTreeSet<usize> = match &lsp.finals {
        FinalSpec::Complete => deadlocks.clone(),
        FinalSpec::Explicit(ms) => {
            let mut finals = BTreeSet::new();
            for m in ms {
                match index.get(m) {
                    Some(&s) => {
                        if !deadlocks.contains(&s) {
                            return Err(Error::FinalNotDeadlock(lsp.format_marking(m)));
                        }
                        finals.insert(s);
                    }
                    None => warnings
                        .push(format!("final marking {} is unreachable", lsp.format_marking(m))),
                }
            }
            finals
        }
    };

    let mut sts = Sts::new(
        markings.into_iter().map(StateInfo::Marking).collect(),
        0,
        finals,
    );
    for e in edges {
        sts.add_edge(e);
    }
    Ok(ReachabilityGraph { sts, warnings, domination_detected })
}

fn witness_path(parent: &[Option<(usize, String)>], state: usize, last: &str) -> String {
    let mut ids = vec![last.to_string()];
    let mut cursor = state;
    while let Some((p, t)) = &parent[cursor] {
        ids.push(t.clone());
        cursor = *p;
    }
    ids.reverse();
    ids.join(",")
}

fn state_name(lsp: Option<&Lsp>, info: &StateInfo) -> String {
    match (lsp, info) {
        (Some(lsp), StateInfo::Marking(m)) => lsp.format_marking(m),
        (None, StateInfo::Marking(m)) => format!("{m:?}"),
        (_, StateInfo::Pair(a, b)) => format!("({a},{b})"),
    }
}

/// Plain-text edge list, one `source -(transition:label/prob)-> target` line
/// per edge.
pub fn export_edge_list(sts: &Sts, lsp: Option<&Lsp>) -> String {
    let mut out = String::new();
    for (s, info) in sts.states.iter().enumerate() {
        let marks = if s == sts.initial { " initial" } else { "" };
        let fin = if sts.finals.contains(&s) { " final" } else { "" };
        writeln!(out, "state {s} {}{marks}{fin}", state_name(lsp, info)).unwrap();
    }
    for e in sts.edges() {
        writeln!(
            out,
            "edge {} -({}:{}/{:.9})-> {}",
            e.source, e.transition, e.label, e.probability, e.target
        )
        .unwrap();
    }
    out
}

/// DOT text for inspection; styling is not contractual.
pub fn export_dot(sts: &Sts, lsp: Option<&Lsp>) -> String {
    let mut out = String::from("digraph sts {\n  rankdir=LR;\n");
    for (s, info) in sts.states.iter().enumerate() {
        let shape = if sts.finals.contains(&s) { "doublecircle" } else { "circle" };
        writeln!(
            out,
            "  s{s} [shape={shape},label=\"s{s}\\n{}\"];",
            state_name(lsp, info).replace('"', "'")
        )
        .unwrap();
    }
    writeln!(out, "  init [shape=point]; init -> s{};", sts.initial).unwrap();
    for e in sts.edges() {
        writeln!(
            out,
            "  s{} -> s{} [label=\"({},{}) {:.4}\"];",
            e.source, e.target, e.transition, e.label, e.probability
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}
