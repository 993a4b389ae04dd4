//! Probability that the model satisfies a DFA-specified property, computed
//! through the product of the reachability graph with the silenced DFA.
//!
//! Run with: cargo run --example spec_probability

use slpn::analysis::spec_probability;
use slpn::automata::{parse_dfa, serialize_dfa, silence};
use slpn::net::parse_slpn;

fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/testdata");
    let order = parse_slpn(&std::fs::read_to_string(format!("{dir}/order.slpn")).unwrap()).unwrap();

    let response =
        parse_dfa(&std::fs::read_to_string(format!("{dir}/response_open_pay.dfa")).unwrap())
            .unwrap();
    let r = spec_probability(&order, &response).unwrap();
    println!("P(every open followed by pay) = {:.9}", r.value);

    let universal =
        parse_dfa(&std::fs::read_to_string(format!("{dir}/universal.dfa")).unwrap()).unwrap();
    let r = spec_probability(&order, &universal).unwrap();
    println!("P(anything at all)            = {:.9}", r.value);

    // silencing adds a tau self-loop per state so the DFA can read runs
    println!("\nsilenced response automaton:");
    print!("{}", serialize_dfa(&silence(&response).unwrap()));
}
