//! Cross-validation tools: seeded play-out sampling and certified
//! probability brackets from best-first run enumeration.
//!
//! Run with: cargo run --example sampling

use slpn::analysis::trace_probability;
use slpn::automata::{product, silence, trace_dfa};
use slpn::conformance::parse_trace;
use slpn::net::parse_slpn;
use slpn::oracle::{enumerate_bracket, sample_playout};
use slpn::reachability::build_reachability_graph;

fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/testdata");
    let fig1a = parse_slpn(&std::fs::read_to_string(format!("{dir}/fig1a.slpn")).unwrap()).unwrap();

    // Monte Carlo: empirical trace frequencies from 100k play-outs
    let sample = sample_playout(&fig1a, 100_000, 42, 1_000);
    let trace = parse_trace("a,b").unwrap();
    println!("empirical  P(a,b) ~ {:.4}", sample.log.frequency(&trace));
    println!("excluded runs: {}", sample.excluded);

    // analytic value with certified enumeration bracket
    let analytic = trace_probability(&fig1a, &trace).unwrap().value;
    let rg = build_reachability_graph(&fig1a, 1_000).unwrap();
    let sdfa = silence(&trace_dfa(&trace).unwrap()).unwrap();
    let prod = product(&rg.sts, &sdfa).unwrap();
    let bracket = enumerate_bracket(&prod, &prod.finals, 1e-9, 1_000_000);
    println!(
        "analytic   P(a,b) = {:.9} in [{:.9}, {:.9}] after {} expansions",
        analytic,
        bracket.lower,
        bracket.upper(),
        bracket.steps
    );
    assert!(bracket.contains(analytic, 1e-9));
}
