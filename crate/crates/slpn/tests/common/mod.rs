//! Shared helpers for integration tests: random net generation and
//! exhaustive run enumeration on small nets.

// each integration test binary uses a different subset
#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng;

use slpn::net::{parse_slpn, Label, Lsp};

pub fn label(name: &str) -> Label {
    Label::activity(name).unwrap()
}

/// Random bounded LSP in state-machine form: every transition has exactly
/// one input and one output place, so the token count is invariant and the
/// net is trivially bounded. At least one transition is silent. Cycles are
/// allowed.
pub fn random_state_machine_net(rng: &mut impl Rng) -> Lsp {
    parse_slpn(&random_state_machine_text(rng)).unwrap()
}

pub fn random_state_machine_text(rng: &mut impl Rng) -> String {
    let n_places = rng.gen_range(3..=10);
    let n_trans = rng.gen_range(4..=12);
    let activities = ["a", "b", "c", "d", "e"];
    let mut text = String::new();
    for p in 0..n_places {
        text.push_str(&format!("place p{p}\n"));
    }
    for t in 0..n_trans {
        // bias edges forward so a fair share of runs reach a deadlock
        let src = rng.gen_range(0..n_places - 1);
        let dst = rng.gen_range(src + 1..n_places);
        let src = if rng.gen_bool(0.15) { rng.gen_range(0..n_places) } else { src };
        let dst = if rng.gen_bool(0.15) { rng.gen_range(0..n_places) } else { dst };
        let kind = if rng.gen_bool(0.5) { "immediate" } else { "timed" };
        let weight = rng.gen_range(1..=4);
        let lbl = if t == 0 || rng.gen_bool(0.25) {
            "tau".to_string()
        } else {
            activities[rng.gen_range(0..activities.len())].to_string()
        };
        text.push_str(&format!("transition t{t} {kind} {weight} {lbl}\n"));
        text.push_str(&format!("arc p{src} t{t}\narc t{t} p{dst}\n"));
    }
    text.push_str("initial p0\nfinal complete\n");
    text
}

/// Splices a weight-1 immediate silent transition into the output arc of
/// `trans_id`: where the transition used to mark its target place directly,
/// it now marks a fresh place whose only consumer is the new silent step.
/// Visible behaviour and all trace probabilities are unchanged.
pub fn insert_silent_pad(text: &str, trans_id: &str) -> String {
    let needle = format!("arc {trans_id} ");
    let mut out = String::new();
    let mut done = false;
    for line in text.lines() {
        if !done && line.starts_with(&needle) {
            let target = line[needle.len()..].trim();
            out.push_str(&format!(
                "place mid_pad\ntransition pad immediate 1 tau\n\
                 arc {trans_id} mid_pad\narc mid_pad pad\narc pad {target}\n"
            ));
            done = true;
        } else {
            out.push_str(line);
            out.push('\n');
        }
    }
    assert!(done, "transition {trans_id} has no output arc");
    out
}

/// Random acyclic LSP: transitions only go from lower to higher places, so
/// every run terminates and the trace set is finite.
pub fn random_acyclic_net(rng: &mut impl Rng) -> Lsp {
    let n_places = rng.gen_range(3..=8);
    let n_trans = rng.gen_range(3..=10);
    let activities = ["a", "b", "c", "d"];
    let mut text = String::new();
    for p in 0..n_places {
        text.push_str(&format!("place p{p}\n"));
    }
    for t in 0..n_trans {
        let src = rng.gen_range(0..n_places - 1);
        let dst = rng.gen_range(src + 1..n_places);
        let kind = if rng.gen_bool(0.5) { "immediate" } else { "timed" };
        let weight = rng.gen_range(1..=4);
        let lbl = if rng.gen_bool(0.3) {
            "tau".to_string()
        } else {
            activities[rng.gen_range(0..activities.len())].to_string()
        };
        text.push_str(&format!("transition t{t} {kind} {weight} {lbl}\n"));
        text.push_str(&format!("arc p{src} t{t}\narc t{t} p{dst}\n"));
    }
    text.push_str("initial p0\nfinal complete\n");
    parse_slpn(&text).unwrap()
}

/// All complete traces with their probabilities, by exhaustive run
/// enumeration. Only safe on nets whose runs all terminate.
pub fn enumerate_traces(lsp: &Lsp) -> HashMap<Vec<Label>, f64> {
    let mut out = HashMap::new();
    let mut stack = vec![(lsp.initial.clone(), Vec::<Label>::new(), 1.0f64)];
    while let Some((marking, trace, prob)) = stack.pop() {
        let enabled = lsp.enabled(&marking);
        if enabled.is_empty() {
            *out.entry(trace).or_insert(0.0) += prob;
            continue;
        }
        for t in enabled {
            let p = lsp.firing_probability(&marking, t);
            let next = lsp.fire(&marking, t).unwrap();
            let mut tr = trace.clone();
            if let Some(a) = lsp.net.transition(t).label.as_activity() {
                tr.push(Label::activity(a).unwrap());
            }
            stack.push((next, tr, prob * p));
        }
    }
    out
}

/// All runs of at most `max_len` firings, as (label sequence with taus,
/// induced visible trace) pairs. Used for the silencing correspondence.
pub fn enumerate_runs(lsp: &Lsp, max_len: usize) -> Vec<(Vec<Label>, Vec<Label>)> {
    let mut out = Vec::new();
    let mut stack = vec![(lsp.initial.clone(), Vec::<Label>::new())];
    while let Some((marking, labels)) = stack.pop() {
        out.push((
            labels.clone(),
            labels.iter().filter(|l| !l.is_silent()).cloned().collect(),
        ));
        if labels.len() >= max_len {
            continue;
        }
        for t in lsp.enabled(&marking) {
            let next = lsp.fire(&marking, t).unwrap();
            let mut ls = labels.clone();
            ls.push(lsp.net.transition(t).label.clone());
            stack.push((next, ls));
        }
    }
    out
}
