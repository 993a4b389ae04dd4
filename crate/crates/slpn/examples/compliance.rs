//! Stochastic compliance of an LSP with a probabilistic Declare
//! specification.
//!
//! Run with: cargo run --example compliance

use slpn::net::parse_slpn;
use slpn::probdeclare::{check_compliance, parse_probdeclare};

fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/testdata");
    let order = parse_slpn(&std::fs::read_to_string(format!("{dir}/order.slpn")).unwrap()).unwrap();
    let spec_text = std::fs::read_to_string(format!("{dir}/order.pdeclare")).unwrap();
    let spec = parse_probdeclare(&spec_text, Some(std::path::Path::new(dir))).unwrap();

    let report = check_compliance(&order, &spec).unwrap();
    for v in &report.verdicts {
        println!(
            "{:8} {} {} {:.9}   computed {:.9}   {}",
            v.name,
            v.source,
            v.operator.symbol(),
            v.threshold,
            v.computed,
            if v.holds { "holds" } else { "violated" }
        );
    }
    println!("compliant: {}", report.compliant);
    for w in &report.warnings {
        println!("warning: {w}");
    }
}
