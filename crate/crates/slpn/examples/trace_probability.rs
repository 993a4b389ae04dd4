//! Exact trace probabilities, including nets where one trace is induced by
//! infinitely many runs (silent loops collapse into a linear system).
//!
//! Run with: cargo run --example trace_probability

use slpn::analysis::trace_probability;
use slpn::conformance::parse_trace;
use slpn::net::parse_slpn;

fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/testdata");

    let fig1a = parse_slpn(&std::fs::read_to_string(format!("{dir}/fig1a.slpn")).unwrap()).unwrap();
    for t in ["a,b", "a,c"] {
        let trace = parse_trace(t).unwrap();
        let r = trace_probability(&fig1a, &trace).unwrap();
        println!("fig1a  P({t}) = {:.9}", r.value);
    }

    let fig1b = parse_slpn(&std::fs::read_to_string(format!("{dir}/fig1b.slpn")).unwrap()).unwrap();
    for t in ["a,c", "a,d"] {
        let trace = parse_trace(t).unwrap();
        let r = trace_probability(&fig1b, &trace).unwrap();
        println!("fig1b  P({t}) = {:.9}", r.value);
    }

    // the silent add-item loop makes infinitely many runs induce this trace
    let order = parse_slpn(&std::fs::read_to_string(format!("{dir}/order.slpn")).unwrap()).unwrap();
    let sigma = parse_trace("open,finalize,\"ack accept\",finalize,\"ack reject\"").unwrap();
    let r = trace_probability(&order, &sigma).unwrap();
    println!(
        "order  P(open, finalize, ack accept, finalize, ack reject) = {:.9}  (1/48 = {:.9})",
        r.value,
        1.0 / 48.0
    );
    println!(
        "       rg {} states, product {} states, solved in {} us",
        r.rg_states,
        r.product_states,
        r.wall_time.as_micros()
    );
}
