//! DFAs over activity labels, the silencing transformation, trace DFAs, and
//! products of a stochastic reachability graph with a silenced DFA.
//!
//! DFAs are partial: a missing transition rejects, exactly as if routed to a
//! dead non-accepting sink. The wildcard `*` stands for every alphabet
//! symbol without an explicit transition from its source state; it is
//! expanded at build time but also retained so that product construction can
//! match visible labels outside the declared alphabet. The wildcard never
//! matches the silent label.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::net::{format_label_token, tokenize, Label, TAU};
use crate::reachability::{Edge, StateInfo, Sts};

#[derive(Debug, Clone)]
pub struct Dfa {
    alphabet: BTreeSet<Label>,
    states: Vec<String>,
    initial: usize,
    accepting: BTreeSet<usize>,
    trans: HashMap<(usize, Label), usize>,
    wildcard: HashMap<usize, usize>,
}

impl Dfa {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_id(&self, s: usize) -> &str {
        &self.states[s]
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn is_accepting(&self, s: usize) -> bool {
        self.accepting.contains(&s)
    }

    pub fn accepting(&self) -> &BTreeSet<usize> {
        &self.accepting
    }

    pub fn alphabet(&self) -> &BTreeSet<Label> {
        &self.alphabet
    }

    pub fn is_silenced(&self) -> bool {
        self.alphabet.contains(&Label::Silent)
    }

    /// Successor under `label`, if any. Visible labels outside the alphabet
    /// fall through to the wildcard; the silent label never does.
    pub fn step(&self, state: usize, label: &Label) -> Option<usize> {
        if let Some(&t) = self.trans.get(&(state, label.clone())) {
            return Some(t);
        }
        if !label.is_silent() && !self.alphabet.contains(label) {
            return self.wildcard.get(&state).copied();
        }
        None
    }

    /// True iff the unique run on `word` exists and ends accepting.
    /// Symbols must come from the alphabet.
    pub fn accepts(&self, word: &[Label]) -> Result<bool> {
        let mut state = self.initial;
        for l in word {
            if !self.alphabet.contains(l) {
                return Err(Error::Analysis(format!("symbol `{l}` outside the alphabet")));
            }
            match self.trans.get(&(state, l.clone())) {
                Some(&t) => state = t,
                None => return Ok(false),
            }
        }
        Ok(self.accepting.contains(&state))
    }
}

/// Incremental construction with the same invariants the parser enforces.
#[derive(Debug, Clone)]
pub struct DfaBuilder {
    alphabet: BTreeSet<Label>,
    states: Vec<String>,
    index: HashMap<String, usize>,
    initial: Option<usize>,
    accepting: BTreeSet<usize>,
    trans: HashMap<(usize, Label), usize>,
    wildcard: HashMap<usize, usize>,
}

impl DfaBuilder {
    pub fn new(alphabet: impl IntoIterator<Item = Label>) -> Result<Self> {
        let alphabet: BTreeSet<Label> = alphabet.into_iter().collect();
        if alphabet.contains(&Label::Silent) {
            return Err(Error::Parse("alphabet must not contain the silent label".into()));
        }
        Ok(DfaBuilder {
            alphabet,
            states: Vec::new(),
            index: HashMap::new(),
            initial: None,
            accepting: BTreeSet::new(),
            trans: HashMap::new(),
            wildcard: HashMap::new(),
        })
    }

    pub fn add_state(&mut self, id: impl Into<String>) -> Result<usize> {
        let id = id.into();
        if self.index.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        let s = self.states.len();
        self.index.insert(id.clone(), s);
        self.states.push(id);
        Ok(s)
    }

    pub fn state(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::Parse(format!("unknown state `{id}`")))
    }

    pub fn set_initial(&mut self, s: usize) -> Result<()> {
        if self.initial.is_some() {
            return Err(Error::Parse("more than one initial state".into()));
        }
        self.initial = Some(s);
        Ok(())
    }

    pub fn set_accepting(&mut self, s: usize) {
        self.accepting.insert(s);
    }

    pub fn add_trans(&mut self, src: usize, label: Label, dst: usize) -> Result<()> {
        if let Label::Activity(_) = &label {
            if !self.alphabet.contains(&label) {
                return Err(Error::Parse(format!("label `{label}` not in the alphabet")));
            }
        }
        if self.trans.insert((src, label.clone()), dst).is_some() {
            return Err(Error::Parse(format!(
                "duplicate transition from `{}` on `{label}`",
                self.states[src]
            )));
        }
        Ok(())
    }

    pub fn add_wildcard(&mut self, src: usize, dst: usize) -> Result<()> {
        if self.wildcard.insert(src, dst).is_some() {
            return Err(Error::Parse(format!(
                "duplicate wildcard transition from `{}`",
                self.states[src]
            )));
        }
        Ok(())
    }

    /// Expands wildcards against the alphabet and seals the automaton.
    pub fn build(mut self) -> Result<Dfa> {
        let initial = self
            .initial
            .ok_or_else(|| Error::Parse("no initial state".into()))?;
        for (&s, &t) in &self.wildcard {
            for l in &self.alphabet {
                self.trans.entry((s, l.clone())).or_insert(t);
            }
        }
        Ok(Dfa {
            alphabet: self.alphabet,
            states: self.states,
            initial,
            accepting: self.accepting,
            trans: self.trans,
            wildcard: self.wildcard,
        })
    }
}

/// Parses the DFA text format. Lines: optional `silenced` flag,
/// `alphabet <label>...`, `state <id> [initial] [accepting]`,
/// `trans <src> <label|*|tau> <dst>`. `#` starts a comment.
pub fn parse_dfa(text: &str) -> Result<Dfa> {
    let mut silenced = false;
    let mut alphabet: BTreeSet<Label> = BTreeSet::new();
    let mut state_lines: Vec<(usize, Vec<String>)> = Vec::new();
    let mut trans_lines: Vec<(usize, Vec<String>)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let tokens = tokenize(line).map_err(|e| Error::AtLine(lineno, Box::new(e)))?;
        if tokens.is_empty() {
            continue;
        }
        let err = |e: Error| Error::AtLine(lineno, Box::new(e));
        match tokens[0].as_str() {
            "silenced" => {
                if tokens.len() != 1 {
                    return Err(err(Error::Parse("`silenced` takes no arguments".into())));
                }
                silenced = true;
            }
            "alphabet" => {
                for tok in &tokens[1..] {
                    alphabet.insert(Label::activity(tok.clone()).map_err(err)?);
                }
            }
            "state" => state_lines.push((lineno, tokens)),
            "trans" => trans_lines.push((lineno, tokens)),
            other => {
                return Err(err(Error::Parse(format!("unknown directive `{other}`"))));
            }
        }
    }

    let mut b = DfaBuilder::new(alphabet)?;
    for (lineno, tokens) in state_lines {
        let err = |e: Error| Error::AtLine(lineno, Box::new(e));
        if tokens.len() < 2 {
            return Err(err(Error::Parse("state needs an identifier".into())));
        }
        let s = b.add_state(tokens[1].clone()).map_err(err)?;
        for flag in &tokens[2..] {
            match flag.as_str() {
                "initial" => b.set_initial(s).map_err(err)?,
                "accepting" => b.set_accepting(s),
                other => {
                    return Err(err(Error::Parse(format!("unknown state flag `{other}`"))));
                }
            }
        }
    }
    for (lineno, tokens) in trans_lines {
        let err = |e: Error| Error::AtLine(lineno, Box::new(e));
        if tokens.len() != 4 {
            return Err(err(Error::Parse("trans needs source, label, target".into())));
        }
        let src = b.state(&tokens[1]).map_err(err)?;
        let dst = b.state(&tokens[3]).map_err(err)?;
        match tokens[2].as_str() {
            "*" => b.add_wildcard(src, dst).map_err(err)?,
            TAU => {
                if !silenced {
                    return Err(err(Error::Parse(
                        "tau transitions require the `silenced` flag".into(),
                    )));
                }
                b.add_trans(src, Label::Silent, dst).map_err(err)?;
            }
            l => b.add_trans(src, Label::activity(l).map_err(err)?, dst).map_err(err)?,
        }
    }
    let mut dfa = b.build()?;
    if silenced {
        dfa.alphabet.insert(Label::Silent);
    }
    Ok(dfa)
}

pub fn serialize_dfa(dfa: &Dfa) -> String {
    let mut out = String::new();
    if dfa.is_silenced() {
        out.push_str("silenced\n");
    }
    let visible: Vec<String> = dfa
        .alphabet
        .iter()
        .filter(|l| !l.is_silent())
        .map(format_label_token)
        .collect();
    if !visible.is_empty() {
        writeln!(out, "alphabet {}", visible.join(" ")).unwrap();
    }
    for (s, id) in dfa.states.iter().enumerate() {
        let initial = if s == dfa.initial { " initial" } else { "" };
        let accepting = if dfa.accepting.contains(&s) { " accepting" } else { "" };
        writeln!(out, "state {id}{initial}{accepting}").unwrap();
    }
    let mut entries: Vec<(usize, &Label, usize)> =
        dfa.trans.iter().map(|((s, l), t)| (*s, l, *t)).collect();
    entries.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    for (s, l, t) in entries {
        writeln!(
            out,
            "trans {} {} {}",
            dfa.states[s],
            format_label_token(l),
            dfa.states[t]
        )
        .unwrap();
    }
    let mut wild: Vec<(usize, usize)> = dfa.wildcard.iter().map(|(s, t)| (*s, *t)).collect();
    wild.sort();
    for (s, t) in wild {
        writeln!(out, "trans {} * {}", dfa.states[s], dfa.states[t]).unwrap();
    }
    out
}

/// Adds a tau self-loop to every state. Errors if the automaton is already
/// silenced.
pub fn silence(dfa: &Dfa) -> Result<Dfa> {
    if dfa.is_silenced() {
        return Err(Error::Analysis("automaton is already silenced".into()));
    }
    let mut out = dfa.clone();
    out.alphabet.insert(Label::Silent);
    for s in 0..out.states.len() {
        out.trans.insert((s, Label::Silent), s);
    }
    Ok(out)
}

/// Linear automaton accepting exactly `trace`. The trace must consist of
/// visible labels.
pub fn trace_dfa(trace: &[Label]) -> Result<Dfa> {
    let mut alphabet = BTreeSet::new();
    for l in trace {
        if l.is_silent() {
            return Err(Error::Analysis("trace must not contain the silent label".into()));
        }
        alphabet.insert(l.clone());
    }
    let mut b = DfaBuilder::new(alphabet)?;
    for i in 0..=trace.len() {
        b.add_state(format!("q{i}"))?;
    }
    b.set_initial(0)?;
    b.set_accepting(trace.len());
    for (i, l) in trace.iter().enumerate() {
        b.add_trans(i, l.clone(), i + 1)?;
    }
    b.build()
}

/// Universal automaton over `alphabet`: one accepting state looping on every
/// symbol (and on anything outside the alphabet, via the wildcard).
pub fn universal_dfa(alphabet: impl IntoIterator<Item = Label>) -> Result<Dfa> {
    let mut b = DfaBuilder::new(alphabet)?;
    let s = b.add_state("q0")?;
    b.set_initial(s)?;
    b.set_accepting(s);
    b.add_wildcard(s, s)?;
    b.build()
}

/// Automaton with empty language over `alphabet`.
pub fn empty_dfa(alphabet: impl IntoIterator<Item = Label>) -> Result<Dfa> {
    let mut b = DfaBuilder::new(alphabet)?;
    let s = b.add_state("q0")?;
    b.set_initial(s)?;
    b.add_wildcard(s, s)?;
    b.build()
}

/// Synchronised product of a stochastic transition system with a silenced
/// DFA, by forward closure from the initial pair. Edges keep their source
/// probability; sts edges the DFA cannot follow are dropped, so the result
/// may be sub-stochastic. Finals pair sts finals with accepting DFA states.
pub fn product(sts: &Sts, sdfa: &Dfa) -> Result<Sts> {
    if !sdfa.is_silenced() {
        return Err(Error::Analysis("product requires a silenced automaton".into()));
    }
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    let start = (sts.initial, sdfa.initial());
    index.insert(start, 0);
    pairs.push(start);
    queue.push_back(0);
    let mut edges: Vec<Edge> = Vec::new();
    while let Some(s) = queue.pop_front() {
        let (s1, s2) = pairs[s];
        for e in sts.outgoing(s1) {
            let Some(t2) = sdfa.step(s2, &e.label) else { continue };
            let pair = (e.target, t2);
            let target = *index.entry(pair).or_insert_with(|| {
                let i = pairs.len();
                pairs.push(pair);
                queue.push_back(i);
                i
            });
            edges.push(Edge {
                source: s,
                transition: e.transition.clone(),
                label: e.label.clone(),
                target,
                probability: e.probability,
            });
        }
    }
    let finals: BTreeSet<usize> = pairs
        .iter()
        .enumerate()
        .filter(|(_, &(s1, s2))| sts.finals.contains(&s1) && sdfa.is_accepting(s2))
        .map(|(i, _)| i)
        .collect();
    let mut out = Sts::new(
        pairs.into_iter().map(|(a, b)| StateInfo::Pair(a, b)).collect(),
        0,
        finals,
    );
    for e in edges {
        out.add_edge(e);
    }
    Ok(out)
}

/// Export-time completion of a sub-stochastic system: routes every state's
/// missing probability mass to a fresh non-final sink. The analysis pipeline
/// never needs this; it exists for inspection of products.
pub fn complete_substochastic(sts: &Sts) -> Sts {
    let n = sts.num_states();
    let mut deficits = Vec::new();
    for s in 0..n {
        if sts.is_deadlock(s) && sts.finals.contains(&s) {
            continue;
        }
        if sts.is_deadlock(s) && !sts.finals.contains(&s) {
            // dead non-final state: all mass is lost here
            deficits.push((s, 1.0));
            continue;
        }
        let deficit = 1.0 - sts.out_mass(s);
        if deficit > 1e-12 {
            deficits.push((s, deficit));
        }
    }
    if deficits.is_empty() {
        return sts.clone();
    }
    let mut states = sts.states.clone();
    states.push(StateInfo::Pair(usize::MAX, usize::MAX));
    let sink = n;
    let mut out = Sts::new(states, sts.initial, sts.finals.clone());
    for e in sts.edges() {
        out.add_edge(e.clone());
    }
    for (s, deficit) in deficits {
        out.add_edge(Edge {
            source: s,
            transition: "__sink".into(),
            label: Label::Silent,
            target: sink,
            probability: deficit,
        });
    }
    out.add_edge(Edge {
        source: sink,
        transition: "__sink_loop".into(),
        label: Label::Silent,
        target: sink,
        probability: 1.0,
    });
    out
}
