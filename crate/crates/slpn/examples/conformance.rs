//! Unit Earth Movers' stochastic conformance between an event log and a
//! model: 1 minus the log mass the model cannot cover.
//!
//! Run with: cargo run --example conformance

use slpn::conformance::{format_trace, parse_log_csv, parse_xes, uemsc};
use slpn::net::parse_slpn;

fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/testdata");
    let fig1a = parse_slpn(&std::fs::read_to_string(format!("{dir}/fig1a.slpn")).unwrap()).unwrap();

    // a log matching the model's exact trace distribution scores 1
    let exact = parse_log_csv(&std::fs::read_to_string(format!("{dir}/fig1a_exact.csv")).unwrap())
        .unwrap();
    let report = uemsc(&exact, &fig1a).unwrap();
    println!("exact log: uemsc = {:.9}", report.value);

    // the same model against an XES log that overweights one variant
    let (xes_log, warnings) =
        parse_xes(&std::fs::read_to_string(format!("{dir}/mini.xes")).unwrap()).unwrap();
    for w in warnings {
        println!("warning: {w}");
    }
    let report = uemsc(&xes_log, &fig1a).unwrap();
    for row in &report.rows {
        println!(
            "  {:8}  L={:.4}  P={:.4}  deficit={:.4}",
            format_trace(&row.trace),
            row.log_frequency,
            row.model_probability,
            row.contribution
        );
    }
    println!("xes log:   uemsc = {:.9}", report.value);
}
