//! Labelled generalised stochastic Petri nets and their token-game semantics.
//!
//! Transitions are either immediate or timed and carry a positive weight.
//! Whenever at least one immediate transition is token-enabled, timed
//! transitions are not enabled (immediate-over-timed priority). The firing
//! probability of an enabled transition is its weight divided by the total
//! weight of the enabled set; for timed transitions this is the embedded
//! race probability, so no delay distributions are needed.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// The reserved token for the silent label in the text format.
pub const TAU: &str = "tau";

/// Transition label: a visible activity or the silent step.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Silent,
    Activity(String),
}

impl Label {
    pub fn activity(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::InvalidLabel("activity label must be non-empty".into()));
        }
        if name == TAU {
            return Err(Error::InvalidLabel(format!(
                "`{TAU}` is reserved for the silent label"
            )));
        }
        Ok(Label::Activity(name))
    }

    pub fn is_silent(&self) -> bool {
        matches!(self, Label::Silent)
    }

    pub fn as_activity(&self) -> Option<&str> {
        match self {
            Label::Silent => None,
            Label::Activity(a) => Some(a),
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Label::Silent => f.write_str(TAU),
            Label::Activity(a) => f.write_str(a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransitionKind {
    Immediate,
    Timed,
}

/// A net transition. The weight of a timed transition is its exponential
/// rate; only weight ratios are ever used.
#[derive(Debug, Clone)]
pub struct Transition {
    pub id: String,
    pub kind: TransitionKind,
    pub weight: f64,
    pub label: Label,
}

/// Index into [`Lgspn::transitions`].
pub type TransitionIndex = usize;
/// Index into [`Lgspn::places`].
pub type PlaceIndex = usize;

/// A marking: multiset over places, canonicalised so that zero entries are
/// never stored. Structural equality is thus marking equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Marking(BTreeMap<PlaceIndex, u64>);

impl Marking {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (PlaceIndex, u64)>) -> Self {
        let mut m = Marking::new();
        for (p, k) in entries {
            m.add(p, k);
        }
        m
    }

    pub fn get(&self, place: PlaceIndex) -> u64 {
        self.0.get(&place).copied().unwrap_or(0)
    }

    pub fn add(&mut self, place: PlaceIndex, count: u64) {
        if count > 0 {
            *self.0.entry(place).or_insert(0) += count;
        }
    }

    /// Removes `count` tokens; panics if there are not enough.
    pub fn remove(&mut self, place: PlaceIndex, count: u64) {
        let e = self.0.get_mut(&place).expect("removing token from empty place");
        assert!(*e >= count, "removing more tokens than present");
        *e -= count;
        if *e == 0 {
            self.0.remove(&place);
        }
    }

    pub fn total_tokens(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (PlaceIndex, u64)> + '_ {
        self.0.iter().map(|(&p, &k)| (p, k))
    }

    /// True if `self(p) >= other(p)` for every place.
    pub fn covers(&self, other: &Marking) -> bool {
        other.iter().all(|(p, k)| self.get(p) >= k)
    }

    /// Strict domination: covers `other` and differs from it.
    pub fn strictly_dominates(&self, other: &Marking) -> bool {
        self != other && self.covers(other)
    }
}

/// A labelled generalised stochastic Petri net with unweighted arcs.
#[derive(Debug, Clone)]
pub struct Lgspn {
    places: Vec<String>,
    transitions: Vec<Transition>,
    /// pre[t]: input places of transition t, sorted, no duplicates.
    pre: Vec<Vec<PlaceIndex>>,
    /// post[t]: output places of transition t, sorted, no duplicates.
    post: Vec<Vec<PlaceIndex>>,
    place_index: HashMap<String, PlaceIndex>,
    transition_index: HashMap<String, TransitionIndex>,
}

impl Lgspn {
    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn transition(&self, t: TransitionIndex) -> &Transition {
        &self.transitions[t]
    }

    pub fn preset(&self, t: TransitionIndex) -> &[PlaceIndex] {
        &self.pre[t]
    }

    pub fn postset(&self, t: TransitionIndex) -> &[PlaceIndex] {
        &self.post[t]
    }

    pub fn place_index(&self, id: &str) -> Option<PlaceIndex> {
        self.place_index.get(id).copied()
    }

    pub fn transition_index(&self, id: &str) -> Option<TransitionIndex> {
        self.transition_index.get(id).copied()
    }

    /// The set of visible activity labels used by the net, sorted.
    pub fn alphabet(&self) -> Vec<String> {
        let mut set: Vec<String> = self
            .transitions
            .iter()
            .filter_map(|t| t.label.as_activity().map(str::to_owned))
            .collect();
        set.sort();
        set.dedup();
        set
    }

    fn token_enabled(&self, m: &Marking, t: TransitionIndex) -> bool {
        self.pre[t].iter().all(|&p| m.get(p) >= 1)
    }
}

/// Final-marking designation of an LSP.
#[derive(Debug, Clone)]
pub enum FinalSpec {
    /// Finals coincide with the set of deadlock markings.
    Complete,
    /// Explicitly listed markings, each required to be a deadlock.
    Explicit(Vec<Marking>),
}

/// A labelled stochastic process: a net plus initial and final markings.
#[derive(Debug, Clone)]
pub struct Lsp {
    pub net: Lgspn,
    pub initial: Marking,
    pub finals: FinalSpec,
}

impl Lsp {
    /// Enabled transitions in `m`, with immediate-over-timed priority applied.
    /// An empty result means `m` is a deadlock.
    pub fn enabled(&self, m: &Marking) -> Vec<TransitionIndex> {
        let token_enabled: Vec<TransitionIndex> = (0..self.net.transitions.len())
            .filter(|&t| self.net.token_enabled(m, t))
            .collect();
        let any_immediate = token_enabled
            .iter()
            .any(|&t| self.net.transitions[t].kind == TransitionKind::Immediate);
        if any_immediate {
            token_enabled
                .into_iter()
                .filter(|&t| self.net.transitions[t].kind == TransitionKind::Immediate)
                .collect()
        } else {
            token_enabled
        }
    }

    /// Fires `t` in `m`, returning `(m - pre(t)) + post(t)`.
    pub fn fire(&self, m: &Marking, t: TransitionIndex) -> Result<Marking> {
        if !self.enabled(m).contains(&t) {
            return Err(Error::NotEnabled(self.net.transitions[t].id.clone()));
        }
        let mut next = m.clone();
        for &p in &self.net.pre[t] {
            next.remove(p, 1);
        }
        for &p in &self.net.post[t] {
            next.add(p, 1);
        }
        Ok(next)
    }

    /// Weight ratio of `t` over the enabled set of `m`; 0 if `t` is not enabled.
    pub fn firing_probability(&self, m: &Marking, t: TransitionIndex) -> f64 {
        let enabled = self.enabled(m);
        if !enabled.contains(&t) {
            return 0.0;
        }
        let total: f64 = enabled.iter().map(|&u| self.net.transitions[u].weight).sum();
        self.net.transitions[t].weight / total
    }

    /// Parses a marking given as `place:mult[,place:mult...]`; a bare place id
    /// means multiplicity 1.
    pub fn parse_marking(&self, text: &str) -> Result<Marking> {
        let mut m = Marking::new();
        for part in text.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (id, mult) = match part.split_once(':') {
                Some((id, mult)) => {
                    let mult: u64 = mult.trim().parse().map_err(|_| {
                        Error::Parse(format!("invalid multiplicity in marking spec `{part}`"))
                    })?;
                    (id.trim(), mult)
                }
                None => (part, 1),
            };
            let p = self
                .net
                .place_index(id)
                .ok_or_else(|| Error::Parse(format!("unknown place `{id}` in marking spec")))?;
            m.add(p, mult);
        }
        Ok(m)
    }

    pub fn format_marking(&self, m: &Marking) -> String {
        if m.is_empty() {
            return "[]".into();
        }
        let inner: Vec<String> = m
            .iter()
            .map(|(p, k)| {
                if k == 1 {
                    self.net.places[p].clone()
                } else {
                    format!("{}:{}", self.net.places[p], k)
                }
            })
            .collect();
        format!("[{}]", inner.join(","))
    }
}

/// Structural diagnostics; warnings only. Final-marking checks that need the
/// reachability graph are reported by the reachability module.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub warnings: Vec<String>,
}

impl Diagnostics {
    pub fn is_empty(&self) -> bool {
        self.warnings.is_empty()
    }
}

/// Reports unconnected nodes and places that can never receive a token.
pub fn validate(lsp: &Lsp) -> Diagnostics {
    let net = &lsp.net;
    let mut connected_places: HashSet<PlaceIndex> = HashSet::new();
    for t in 0..net.transitions.len() {
        connected_places.extend(net.pre[t].iter().copied());
        connected_places.extend(net.post[t].iter().copied());
    }
    let mut diags = Diagnostics::default();
    for (p, name) in net.places.iter().enumerate() {
        if !connected_places.contains(&p) && lsp.initial.get(p) == 0 {
            diags.warnings.push(format!("place `{name}` is isolated"));
        }
    }
    for (t, tr) in net.transitions.iter().enumerate() {
        if net.pre[t].is_empty() && net.post[t].is_empty() {
            diags.warnings.push(format!("transition `{}` is isolated", tr.id));
        }
    }
    diags
}

/// Parses a positive weight given as a decimal or a fraction `p/q`.
pub fn parse_weight(text: &str) -> Result<f64> {
    let value = if let Some((num, den)) = text.split_once('/') {
        let num: u64 = num
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("invalid fraction numerator `{text}`")))?;
        let den: u64 = den
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("invalid fraction denominator `{text}`")))?;
        if den == 0 {
            return Err(Error::Parse(format!("zero denominator in `{text}`")));
        }
        num as f64 / den as f64
    } else {
        text.parse::<f64>()
            .map_err(|_| Error::Parse(format!("invalid weight `{text}`")))?
    };
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::NonpositiveWeight(text.to_string()));
    }
    Ok(value)
}

fn valid_identifier(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Splits a line into whitespace-separated tokens, keeping double-quoted
/// strings (which may contain spaces) as single tokens.
pub(crate) fn tokenize(line: &str) -> Result<Vec<String>> {
    let mut tokens = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '"' {
            chars.next();
            let mut tok = String::new();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some(ch) => tok.push(ch),
                    None => return Err(Error::Parse("unterminated quoted string".into())),
                }
            }
            tokens.push(tok);
        } else {
            let mut tok = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() {
                    break;
                }
                tok.push(ch);
                chars.next();
            }
            tokens.push(tok);
        }
    }
    Ok(tokens)
}

struct NetBuilder {
    places: Vec<String>,
    transitions: Vec<Transition>,
    pre: Vec<Vec<PlaceIndex>>,
    post: Vec<Vec<PlaceIndex>>,
    place_index: HashMap<String, PlaceIndex>,
    transition_index: HashMap<String, TransitionIndex>,
    arcs: HashSet<(String, String)>,
}

impl NetBuilder {
    fn new() -> Self {
        NetBuilder {
            places: Vec::new(),
            transitions: Vec::new(),
            pre: Vec::new(),
            post: Vec::new(),
            place_index: HashMap::new(),
            transition_index: HashMap::new(),
            arcs: HashSet::new(),
        }
    }

    fn add_place(&mut self, id: &str) -> Result<()> {
        if self.place_index.contains_key(id) || self.transition_index.contains_key(id) {
            return Err(Error::DuplicateId(id.to_string()));
        }
        self.place_index.insert(id.to_string(), self.places.len());
        self.places.push(id.to_string());
        Ok(())
    }

    fn add_transition(&mut self, tr: Transition) -> Result<()> {
        if self.place_index.contains_key(&tr.id) || self.transition_index.contains_key(&tr.id) {
            return Err(Error::DuplicateId(tr.id.clone()));
        }
        self.transition_index.insert(tr.id.clone(), self.transitions.len());
        self.transitions.push(tr);
        self.pre.push(Vec::new());
        self.post.push(Vec::new());
        Ok(())
    }

    fn add_arc(&mut self, from: &str, to: &str) -> Result<()> {
        if !self.arcs.insert((from.to_string(), to.to_string())) {
            return Err(Error::Parse(format!("duplicate arc {from} -> {to}")));
        }
        match (self.place_index.get(from), self.transition_index.get(to)) {
            (Some(&p), Some(&t)) => {
                self.pre[t].push(p);
                return Ok(());
            }
            _ => {}
        }
        match (self.transition_index.get(from), self.place_index.get(to)) {
            (Some(&t), Some(&p)) => {
                self.post[t].push(p);
                Ok(())
            }
            _ => Err(Error::Parse(format!(
                "arc {from} -> {to} must connect a place and a transition, both declared"
            ))),
        }
    }

    fn finish(mut self) -> Lgspn {
        for v in self.pre.iter_mut().chain(self.post.iter_mut()) {
            v.sort_unstable();
        }
        Lgspn {
            places: self.places,
            transitions: self.transitions,
            pre: self.pre,
            post: self.post,
            place_index: self.place_index,
            transition_index: self.transition_index,
        }
    }
}

/// Parses the SLPN text format.
///
/// ```text
/// place <id>
/// transition <id> immediate|timed <weight> <label>
/// arc <id> <id>
/// initial <place-id> [<multiplicity>]
/// final <place-id>:<mult>[,...]   |   final complete
/// ```
///
/// `#` starts a comment; if no `final` line appears, `final complete` is
/// assumed.
pub fn parse_slpn(text: &str) -> Result<Lsp> {
    let mut builder = NetBuilder::new();
    // (line, tokens) for declarations that need the full id tables.
    let mut arcs: Vec<(usize, Vec<String>)> = Vec::new();
    let mut initials: Vec<(usize, Vec<String>)> = Vec::new();
    let mut final_lines: Vec<(usize, Vec<String>)> = Vec::new();

    let at = |line: usize, e: Error| Error::AtLine(line, Box::new(e));

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.split_once('#') {
            Some((before, _)) => before,
            None => raw,
        };
        let tokens = tokenize(line).map_err(|e| at(lineno, e))?;
        if tokens.is_empty() {
            continue;
        }
        let err = |msg: String| at(lineno, Error::Parse(msg));
        match tokens[0].as_str() {
            "place" => {
                if tokens.len() != 2 {
                    return Err(err("expected `place <id>`".into()));
                }
                if !valid_identifier(&tokens[1]) {
                    return Err(err(format!("invalid place identifier `{}`", tokens[1])));
                }
                builder.add_place(&tokens[1]).map_err(|e| at(lineno, e))?;
            }
            "transition" => {
                if tokens.len() != 5 {
                    return Err(err(
                        "expected `transition <id> immediate|timed <weight> <label>`".into(),
                    ));
                }
                if !valid_identifier(&tokens[1]) {
                    return Err(err(format!("invalid transition identifier `{}`", tokens[1])));
                }
                let kind = match tokens[2].as_str() {
                    "immediate" => TransitionKind::Immediate,
                    "timed" => TransitionKind::Timed,
                    other => return Err(err(format!("unknown transition kind `{other}`"))),
                };
                let weight = parse_weight(&tokens[3]).map_err(|e| at(lineno, e))?;
                let label = if tokens[4] == TAU {
                    Label::Silent
                } else {
                    Label::activity(tokens[4].clone()).map_err(|e| at(lineno, e))?
                };
                builder
                    .add_transition(Transition { id: tokens[1].clone(), kind, weight, label })
                    .map_err(|e| at(lineno, e))?;
            }
            "arc" => {
                if tokens.len() == 3 {
                    arcs.push((lineno, tokens));
                } else if tokens.len() == 4 {
                    // reserved arc-multiplicity field
                    return Err(err("arc multiplicities are unsupported".into()));
                } else {
                    return Err(err("expected `arc <id> <id>`".into()));
                }
            }
            "initial" => {
                if tokens.len() != 2 && tokens.len() != 3 {
                    return Err(err("expected `initial <place-id> [<multiplicity>]`".into()));
                }
                initials.push((lineno, tokens));
            }
            "final" => {
                if tokens.len() != 2 {
                    return Err(err(
                        "expected `final complete` or `final <place>:<mult>[,...]`".into(),
                    ));
                }
                final_lines.push((lineno, tokens));
            }
            other => return Err(err(format!("unknown declaration `{other}`"))),
        }
    }

    if builder.places.is_empty() {
        return Err(Error::Parse("no places declared".into()));
    }

    for (lineno, tokens) in arcs {
        builder.add_arc(&tokens[1], &tokens[2]).map_err(|e| at(lineno, e))?;
    }
    let net = builder.finish();

    let mut initial = Marking::new();
    for (lineno, tokens) in initials {
        let p = net
            .place_index(&tokens[1])
            .ok_or_else(|| at(lineno, Error::Parse(format!("unknown place `{}`", tokens[1]))))?;
        let mult: u64 = if tokens.len() == 3 {
            tokens[2]
                .parse()
                .map_err(|_| at(lineno, Error::Parse(format!("invalid multiplicity `{}`", tokens[2]))))?
        } else {
            1
        };
        if mult == 0 {
            return Err(at(lineno, Error::Parse("initial multiplicity must be positive".into())));
        }
        initial.add(p, mult);
    }

    let mut finals = FinalSpec::Complete;
    let mut explicit: Vec<Marking> = Vec::new();
    let mut complete = false;
    for (lineno, tokens) in &final_lines {
        if tokens[1] == "complete" {
            complete = true;
            continue;
        }
        let mut m = Marking::new();
        for part in tokens[1].split(',') {
            let (id, mult) = match part.split_once(':') {
                Some((id, mult)) => {
                    let mult: u64 = mult.parse().map_err(|_| {
                        at(*lineno, Error::Parse(format!("invalid multiplicity in `{part}`")))
                    })?;
                    (id, mult)
                }
                None => (part, 1),
            };
            let p = net
                .place_index(id)
                .ok_or_else(|| at(*lineno, Error::Parse(format!("unknown place `{id}`"))))?;
            m.add(p, mult);
        }
        explicit.push(m);
    }
    if complete && !explicit.is_empty() {
        return Err(Error::Parse(
            "`final complete` cannot be combined with explicit final markings".into(),
        ));
    }
    if !explicit.is_empty() {
        explicit.sort();
        explicit.dedup();
        finals = FinalSpec::Explicit(explicit);
    }

    Ok(Lsp { net, initial, finals })
}

pub(crate) fn format_label_token(label: &Label) -> String {
    match label {
        Label::Silent => TAU.to_string(),
        Label::Activity(a) => {
            if valid_identifier(a) && a != TAU {
                a.clone()
            } else {
                format!("\"{a}\"")
            }
        }
    }
}

fn format_weight(w: f64) -> String {
    // Try to recover a small exact fraction so that parse(serialize(x)) is
    // value-identical for the fraction-denoted weights of the input format.
    for den in 1u64..=64 {
        let num = w * den as f64;
        if num > 0.0 && num.fract() == 0.0 && num <= 1e15 {
            let num = num as u64;
            return if den == 1 { format!("{num}") } else { format!("{num}/{den}") };
        }
    }
    format!("{w}")
}

/// Serialises an LSP back to the SLPN text format. Identifier-preserving:
/// parsing the output yields an isomorphic LSP.
pub fn serialize_slpn(lsp: &Lsp) -> String {
    let mut out = String::new();
    for p in lsp.net.places() {
        writeln!(out, "place {p}").unwrap();
    }
    for (t, tr) in lsp.net.transitions().iter().enumerate() {
        let kind = match tr.kind {
            TransitionKind::Immediate => "immediate",
            TransitionKind::Timed => "timed",
        };
        writeln!(
            out,
            "transition {} {} {} {}",
            tr.id,
            kind,
            format_weight(tr.weight),
            format_label_token(&tr.label)
        )
        .unwrap();
        for &p in lsp.net.preset(t) {
            writeln!(out, "arc {} {}", lsp.net.places()[p], tr.id).unwrap();
        }
        for &p in lsp.net.postset(t) {
            writeln!(out, "arc {} {}", tr.id, lsp.net.places()[p]).unwrap();
        }
    }
    for (p, k) in lsp.initial.iter() {
        writeln!(out, "initial {} {}", lsp.net.places()[p], k).unwrap();
    }
    match &lsp.finals {
        FinalSpec::Complete => writeln!(out, "final complete").unwrap(),
        FinalSpec::Explicit(ms) => {
            for m in ms {
                let parts: Vec<String> = m
                    .iter()
                    .map(|(p, k)| format!("{}:{}", lsp.net.places()[p], k))
                    .collect();
                writeln!(out, "final {}", parts.join(",")).unwrap();
            }
        }
    }
    out
}
