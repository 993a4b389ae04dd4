//! Parse a net, build its stochastic reachability graph, classify states
//! and report the language mass.
//!
//! Run with: cargo run --example inspect

use slpn::analysis::language_mass;
use slpn::net::parse_slpn;
use slpn::reachability::{build_reachability_graph, export_edge_list, DEFAULT_MAX_STATES};

fn show(name: &str, path: &str) {
    let text = std::fs::read_to_string(path).unwrap();
    let lsp = parse_slpn(&text).unwrap();
    let rg = build_reachability_graph(&lsp, DEFAULT_MAX_STATES).unwrap();
    let stats = rg.stats();
    println!("== {name} ==");
    println!(
        "{} states, {} edges, {} final, {} deadlock, {} livelock",
        stats.state_count,
        stats.edge_count,
        stats.final_count,
        stats.deadlock_count,
        stats.livelock_count
    );
    println!("language mass {:.9}", language_mass(&lsp).unwrap());
    for w in &rg.warnings {
        println!("warning: {w}");
    }
    if stats.state_count <= 8 {
        print!("{}", export_edge_list(&rg.sts, Some(&lsp)));
    }
    println!();
}

fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/testdata");
    show("order-to-cash", &format!("{dir}/order.slpn"));
    show("livelock", &format!("{dir}/livelock.slpn"));
}
