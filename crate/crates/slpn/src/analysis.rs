//! Top-level analysis tasks gluing reachability, automata and markov:
//! specification probability, trace probability and language mass.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use crate::automata::{product, silence, trace_dfa, Dfa};
use crate::error::{Error, Result};
use crate::markov::{assemble_system, solve_linear, Row, SolverOptions};
use crate::net::{Label, Lsp};
use crate::oracle::{enumerate_bracket, BracketOptions};
use crate::reachability::{build_reachability_graph, Sts, DEFAULT_MAX_STATES};

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub max_states: usize,
    pub solver: SolverOptions,
    /// Cross-check the analytic value by run enumeration when set.
    pub oracle: Option<BracketOptions>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            max_states: DEFAULT_MAX_STATES,
            solver: SolverOptions::default(),
            oracle: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisResult {
    pub value: f64,
    pub rg_states: usize,
    pub product_states: usize,
    pub residual: f64,
    pub wall_time: Duration,
    /// (lower, upper) when oracle cross-checking was requested.
    pub bracket: Option<(f64, f64)>,
    pub warnings: Vec<String>,
}

fn solved_value(
    sts: &Sts,
    targets: &BTreeSet<usize>,
    solver: SolverOptions,
) -> Result<(f64, f64)> {
    if targets.is_empty() {
        return Ok((0.0, 0.0));
    }
    let system = assemble_system(sts, targets)?;
    let x = solve_linear(&system, solver)?;
    let mut residual = 0.0f64;
    for (s, row) in system.rows.iter().enumerate() {
        if let Row::Flow(terms) = row {
            let rhs: f64 = terms.iter().map(|&(t, p)| p * x[t]).sum();
            residual = residual.max((x[s] - rhs).abs());
        }
    }
    Ok((x[sts.initial], residual))
}

/// Probability that a complete run of `lsp` induces a trace accepted by
/// `dfa`. The automaton must range over visible labels only; it is silenced
/// internally before the product is taken.
pub fn spec_probability(lsp: &Lsp, dfa: &Dfa) -> Result<AnalysisResult> {
    spec_probability_with(lsp, dfa, &AnalysisOptions::default())
}

pub fn spec_probability_with(
    lsp: &Lsp,
    dfa: &Dfa,
    opts: &AnalysisOptions,
) -> Result<AnalysisResult> {
    let start = Instant::now();
    let rg = build_reachability_graph(lsp, opts.max_states)?;
    let mut warnings = rg.warnings.clone();
    for label in lsp.net.alphabet() {
        let l = Label::Activity(label.clone());
        if !dfa.alphabet().contains(&l) {
            warnings.push(format!("net label `{label}` is not in the automaton alphabet"));
        }
    }
    let sdfa = silence(dfa)?;
    let prod = product(&rg.sts, &sdfa)?;
    let (value, residual) = solved_value(&prod, &prod.finals.clone(), opts.solver)?;
    let bracket = opts
        .oracle
        .map(|b| enumerate_bracket(&prod, &prod.finals, b.epsilon, b.max_steps))
        .map(|b| (b.lower, b.upper()));
    if let Some((lower, upper)) = bracket {
        if value < lower - 1e-9 || value > upper + 1e-9 {
            return Err(Error::Analysis(format!(
                "analytic value {value} outside enumeration bracket [{lower}, {upper}]"
            )));
        }
    }
    Ok(AnalysisResult {
        value,
        rg_states: rg.sts.num_states(),
        product_states: prod.num_states(),
        residual,
        wall_time: start.elapsed(),
        bracket,
        warnings,
    })
}

/// Probability that `lsp` produces exactly the trace `trace`, summing over
/// all (possibly infinitely many) runs inducing it.
pub fn trace_probability(lsp: &Lsp, trace: &[Label]) -> Result<AnalysisResult> {
    trace_probability_with(lsp, trace, &AnalysisOptions::default())
}

pub fn trace_probability_with(
    lsp: &Lsp,
    trace: &[Label],
    opts: &AnalysisOptions,
) -> Result<AnalysisResult> {
    let dfa = trace_dfa(trace)?;
    let mut result = spec_probability_with(lsp, &dfa, opts)?;
    // a trace rarely mentions the whole net alphabet; not worth a warning
    result.warnings.retain(|w| !w.contains("automaton alphabet"));
    Ok(result)
}

/// Total probability mass of complete traces: 1 exactly when the induced
/// trace function is a stochastic language, less when livelocks leak mass.
pub fn language_mass(lsp: &Lsp) -> Result<f64> {
    language_mass_with(lsp, &AnalysisOptions::default())
}

pub fn language_mass_with(lsp: &Lsp, opts: &AnalysisOptions) -> Result<f64> {
    let rg = build_reachability_graph(lsp, opts.max_states)?;
    let (value, _) = solved_value(&rg.sts, &rg.sts.finals.clone(), opts.solver)?;
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{empty_dfa, parse_dfa, universal_dfa};
    use crate::net::parse_slpn;
    use crate::testnets;

    fn word(names: &[&str]) -> Vec<Label> {
        names.iter().map(|n| Label::activity(*n).unwrap()).collect()
    }

    fn net_alphabet(lsp: &Lsp) -> Vec<Label> {
        lsp.net.alphabet().into_iter().map(Label::Activity).collect()
    }

    #[test]
    fn fig_1a_trace_probabilities() {
        let lsp = parse_slpn(testnets::FIG_1A).unwrap();
        let ab = trace_probability(&lsp, &word(&["a", "b"])).unwrap();
        let ac = trace_probability(&lsp, &word(&["a", "c"])).unwrap();
        assert!((ab.value - 2.0 / 3.0).abs() < 1e-9, "{}", ab.value);
        assert!((ac.value - 1.0 / 3.0).abs() < 1e-9, "{}", ac.value);
    }

    #[test]
    fn fig_1b_trace_probabilities() {
        let lsp = parse_slpn(testnets::FIG_1B).unwrap();
        let ac = trace_probability(&lsp, &word(&["a", "c"])).unwrap();
        let ad = trace_probability(&lsp, &word(&["a", "d"])).unwrap();
        assert!((ac.value - 3.0 / 4.0).abs() < 1e-9, "{}", ac.value);
        assert!((ad.value - 1.0 / 4.0).abs() < 1e-9, "{}", ad.value);
    }

    #[test]
    fn order_trace_is_one_forty_eighth() {
        let lsp = parse_slpn(testnets::ORDER_TO_CASH).unwrap();
        let sigma = word(&["open", "finalize", "ack accept", "finalize", "ack reject"]);
        let r = trace_probability(&lsp, &sigma).unwrap();
        assert!((r.value - 1.0 / 48.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn universal_dfa_captures_everything_on_livelock_free_nets() {
        let lsp = parse_slpn(testnets::ORDER_TO_CASH).unwrap();
        let uni = universal_dfa(net_alphabet(&lsp)).unwrap();
        let r = spec_probability(&lsp, &uni).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn empty_language_dfa_yields_zero() {
        let lsp = parse_slpn(testnets::ORDER_TO_CASH).unwrap();
        let empty = empty_dfa(net_alphabet(&lsp)).unwrap();
        let r = spec_probability(&lsp, &empty).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn response_open_pay_on_order_net() {
        // accepted model traces are exactly those reaching the happy final
        let lsp = parse_slpn(testnets::ORDER_TO_CASH).unwrap();
        let text = "
alphabet open finalize \"ack accept\" \"ack reject\" pay \"emit receipt\" leave
state s0 initial accepting
state s1
trans s0 open s1
trans s0 * s0
trans s1 pay s0
trans s1 * s1
";
        let dfa = parse_dfa(text).unwrap();
        let r = spec_probability(&lsp, &dfa).unwrap();
        assert!((r.value - 1.0 / 11.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn language_mass_values() {
        let order = parse_slpn(testnets::ORDER_TO_CASH).unwrap();
        assert!((language_mass(&order).unwrap() - 1.0).abs() < 1e-9);
        let livelock = parse_slpn(testnets::LIVELOCK).unwrap();
        assert!((language_mass(&livelock).unwrap() - 2.0 / 3.0).abs() < 1e-9);
        let dead = parse_slpn("place p\ninitial p").unwrap();
        assert_eq!(language_mass(&dead).unwrap(), 1.0);
    }

    #[test]
    fn additivity_over_disjoint_traces() {
        let lsp = parse_slpn(testnets::FIG_1A).unwrap();
        let mass = language_mass(&lsp).unwrap();
        let sum = trace_probability(&lsp, &word(&["a", "b"])).unwrap().value
            + trace_probability(&lsp, &word(&["a", "c"])).unwrap().value;
        assert!(sum <= mass + 1e-9);
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn impossible_trace_has_probability_zero() {
        let lsp = parse_slpn(testnets::FIG_1A).unwrap();
        let r = trace_probability(&lsp, &word(&["b", "a"])).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn empty_trace_on_deadlocked_initial() {
        let lsp = parse_slpn("place p\ninitial p").unwrap();
        let r = trace_probability(&lsp, &[]).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alphabet_mismatch_warns() {
        let lsp = parse_slpn(testnets::FIG_1A).unwrap();
        let dfa = parse_dfa("alphabet a\nstate s initial accepting\ntrans s * s\n").unwrap();
        let r = spec_probability(&lsp, &dfa).unwrap();
        assert!(!r.warnings.is_empty());
        // the wildcard still eats b and c, so the value is the full mass
        assert!((r.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn oracle_bracket_contains_value() {
        let lsp = parse_slpn(testnets::ORDER_TO_CASH).unwrap();
        let opts = AnalysisOptions {
            oracle: Some(BracketOptions { epsilon: 1e-7, max_steps: 1_000_000 }),
            ..Default::default()
        };
        let sigma = word(&["open", "finalize", "ack accept", "finalize", "ack reject"]);
        let r = trace_probability_with(&lsp, &sigma, &opts).unwrap();
        let (lower, upper) = r.bracket.unwrap();
        assert!(lower - 1e-9 <= r.value && r.value <= upper + 1e-9);
        // run interleavings blow up combinatorially on this net, so the
        // budget caps the width well above epsilon; soundness still holds
        assert!(upper - lower < 1e-2);
    }

    #[test]
    fn containment_monotonicity() {
        let lsp = parse_slpn(testnets::FIG_1A).unwrap();
        let single = trace_probability(&lsp, &word(&["a", "b"])).unwrap().value;
        let uni = universal_dfa(net_alphabet(&lsp)).unwrap();
        let all = spec_probability(&lsp, &uni).unwrap().value;
        assert!(single <= all + 1e-9);
    }
}
