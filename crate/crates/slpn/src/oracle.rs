//! Brute-force cross-validation: probability-ordered run enumeration giving
//! certified brackets on absorption probabilities, and a seeded play-out
//! sampler.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::conformance::StochasticLog;
use crate::net::{FinalSpec, Lsp, Marking};
use crate::reachability::Sts;

#[derive(Debug, Clone, Copy)]
pub struct BracketOptions {
    pub epsilon: f64,
    pub max_steps: usize,
}

impl Default for BracketOptions {
    fn default() -> Self {
        BracketOptions { epsilon: 1e-9, max_steps: 10_000_000 }
    }
}

/// Certified bounds: the true absorption probability lies in
/// [lower, lower + residual].
#[derive(Debug, Clone, Copy)]
pub struct ProbabilityBracket {
    /// Mass of enumerated runs ending in a target.
    pub lower: f64,
    /// Mass of the unresolved frontier when enumeration stopped.
    pub residual: f64,
    /// Expansions performed.
    pub steps: usize,
}

impl ProbabilityBracket {
    pub fn upper(&self) -> f64 {
        self.lower + self.residual
    }

    pub fn contains(&self, value: f64, tolerance: f64) -> bool {
        self.lower - tolerance <= value && value <= self.upper() + tolerance
    }
}

/// Frontier entry; the heap is a max-heap on run probability with ties
/// broken by insertion order.
struct Entry {
    prob: f64,
    seq: usize,
    state: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.prob
            .total_cmp(&other.prob)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Best-first enumeration of partial runs ordered by run probability.
/// A run reaching a target contributes to lower; a run dying in a non-target
/// dead state is discarded; the rest stays in the frontier until the
/// frontier mass drops below epsilon or the step budget runs out.
pub fn enumerate_bracket(
    sts: &Sts,
    targets: &BTreeSet<usize>,
    epsilon: f64,
    max_steps: usize,
) -> ProbabilityBracket {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Entry { prob: 1.0, seq, state: sts.initial });
    let mut frontier_mass = 1.0f64;
    let mut lower = 0.0f64;
    let mut steps = 0usize;
    while let Some(Entry { prob, state, .. }) = heap.pop() {
        if frontier_mass < epsilon || steps >= max_steps {
            // put the popped entry back into the accounting and stop
            break;
        }
        steps += 1;
        frontier_mass -= prob;
        if targets.contains(&state) {
            lower += prob;
            continue;
        }
        for e in sts.outgoing(state) {
            seq += 1;
            heap.push(Entry { prob: prob * e.probability, seq, state: e.target });
            frontier_mass += prob * e.probability;
        }
        // mass lost to sub-stochastic rows or dead states is discarded
    }
    ProbabilityBracket { lower, residual: frontier_mass.max(0.0), steps }
}

#[derive(Debug, Clone)]
pub struct SampleReport {
    /// Completed traces only.
    pub log: StochasticLog,
    /// Runs cut off at max_len or stuck in a non-final deadlock.
    pub excluded: usize,
}

fn is_final_marking(lsp: &Lsp, m: &Marking) -> bool {
    match &lsp.finals {
        FinalSpec::Complete => true,
        FinalSpec::Explicit(ms) => ms.contains(m),
    }
}

/// Plays the token game `n` times with weighted random choices among the
/// enabled transitions. Deterministic for a fixed seed. Runs that do not
/// complete within `max_len` firings are excluded from the log and counted.
pub fn sample_playout(lsp: &Lsp, n: usize, seed: u64, max_len: usize) -> SampleReport {
    assert!(n >= 1, "need at least one sample");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = StochasticLog::new();
    let mut excluded = 0usize;
    for _ in 0..n {
        let mut marking = lsp.initial.clone();
        let mut trace = Vec::new();
        let mut completed = false;
        let mut fired = 0usize;
        loop {
            let enabled = lsp.enabled(&marking);
            if enabled.is_empty() {
                completed = is_final_marking(lsp, &marking);
                break;
            }
            if fired >= max_len {
                break;
            }
            fired += 1;
            let weights: Vec<f64> =
                enabled.iter().map(|&t| lsp.net.transition(t).weight).collect();
            let pick = enabled[WeightedIndex::new(&weights).unwrap().sample(&mut rng)];
            let tr = lsp.net.transition(pick);
            if let Some(a) = tr.label.as_activity() {
                trace.push(crate::net::Label::Activity(a.to_string()));
            }
            marking = lsp.fire(&marking, pick).unwrap();
        }
        if completed {
            log.add(trace, 1).unwrap();
        } else {
            excluded += 1;
        }
    }
    SampleReport { log, excluded }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{product, silence, trace_dfa};
    use crate::net::{parse_slpn, Label};
    use crate::reachability::build_reachability_graph;
    use crate::testnets;

    fn word(names: &[&str]) -> Vec<Label> {
        names.iter().map(|n| Label::activity(*n).unwrap()).collect()
    }

    #[test]
    fn fig_1a_trace_bracket_contains_two_thirds() {
        let lsp = parse_slpn(testnets::FIG_1A).unwrap();
        let rg = build_reachability_graph(&lsp, 100).unwrap();
        let sdfa = silence(&trace_dfa(&word(&["a", "b"])).unwrap()).unwrap();
        let prod = product(&rg.sts, &sdfa).unwrap();
        let bracket = enumerate_bracket(&prod, &prod.finals, 1e-6, 1_000_000);
        assert!(bracket.lower >= 2.0 / 3.0 - 1e-6);
        assert!(bracket.contains(2.0 / 3.0, 1e-12), "{bracket:?}");
        assert!(bracket.residual < 1e-6);
    }

    #[test]
    fn acyclic_system_closes_the_bracket() {
        let lsp = parse_slpn(testnets::FIG_1B).unwrap();
        let rg = build_reachability_graph(&lsp, 100).unwrap();
        let sdfa = silence(&trace_dfa(&word(&["a", "c"])).unwrap()).unwrap();
        let prod = product(&rg.sts, &sdfa).unwrap();
        let bracket = enumerate_bracket(&prod, &prod.finals, 1e-12, 1_000_000);
        assert!(bracket.residual.abs() < 1e-12);
        assert!((bracket.lower - 3.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn pure_cycle_stops_at_step_budget_with_full_residual() {
        let lsp = parse_slpn("place p\ntransition t timed 1 a\narc p t\narc t p\ninitial p")
            .unwrap();
        let rg = build_reachability_graph(&lsp, 10).unwrap();
        let bracket = enumerate_bracket(&rg.sts, &BTreeSet::new(), 1e-9, 500);
        assert_eq!(bracket.lower, 0.0);
        assert!((bracket.residual - 1.0).abs() < 1e-12);
        assert_eq!(bracket.steps, 500);
    }

    #[test]
    fn bracket_width_monotone_in_epsilon() {
        let lsp = parse_slpn(testnets::ORDER_TO_CASH).unwrap();
        let rg = build_reachability_graph(&lsp, 10_000).unwrap();
        let coarse = enumerate_bracket(&rg.sts, &rg.sts.finals, 1e-3, 10_000_000);
        let fine = enumerate_bracket(&rg.sts, &rg.sts.finals, 1e-6, 10_000_000);
        assert!(fine.residual <= coarse.residual + 1e-15);
    }

    #[test]
    fn sampler_is_deterministic() {
        let lsp = parse_slpn(testnets::FIG_1A).unwrap();
        let a = sample_playout(&lsp, 500, 7, 100);
        let b = sample_playout(&lsp, 500, 7, 100);
        assert_eq!(a.excluded, b.excluded);
        let (sa, sb) = (
            crate::conformance::serialize_log_csv(&a.log),
            crate::conformance::serialize_log_csv(&b.log),
        );
        assert_eq!(sa, sb);
    }

    #[test]
    fn sampler_frequency_close_to_analytic() {
        let lsp = parse_slpn(testnets::FIG_1A).unwrap();
        let report = sample_playout(&lsp, 100_000, 1234, 1_000);
        assert_eq!(report.excluded, 0);
        let freq = report.log.frequency(&word(&["a", "b"]));
        assert!((freq - 2.0 / 3.0).abs() < 0.01, "{freq}");
    }

    #[test]
    fn deterministic_net_yields_identical_traces() {
        let lsp = parse_slpn(
            "place p0\nplace p1\ntransition a timed 2 a\narc p0 a\narc a p1\ninitial p0",
        )
        .unwrap();
        let report = sample_playout(&lsp, 50, 0, 10);
        assert_eq!(report.log.num_distinct(), 1);
        assert_eq!(report.log.frequency(&word(&["a"])), 1.0);
    }

    #[test]
    fn livelock_mass_shows_up_as_exclusions() {
        let lsp = parse_slpn(testnets::LIVELOCK).unwrap();
        let report = sample_playout(&lsp, 20_000, 99, 500);
        let ratio = report.excluded as f64 / 20_000.0;
        assert!((ratio - 1.0 / 3.0).abs() < 0.02, "{ratio}");
    }
}
