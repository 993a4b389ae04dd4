//! Outcome probabilities: where does the order-to-cash process end up?
//!
//! The net has three final markings: the happy path [q_h], rejection [q_r]
//! and cancellation [q_c]. With all weights equal the happy path gets 1/11.
//!
//! Run with: cargo run --example outcome

use slpn::markov::{livelock_mass, outcome_probability};
use slpn::net::parse_slpn;

fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/testdata");
    let text = std::fs::read_to_string(format!("{dir}/order.slpn")).unwrap();
    let lsp = parse_slpn(&text).unwrap();

    let mut total = 0.0;
    for place in ["q_h", "q_r", "q_c"] {
        let target = lsp.parse_marking(place).unwrap();
        let p = outcome_probability(&lsp, std::slice::from_ref(&target)).unwrap();
        println!("P(end in [{place}]) = {p:.9}");
        total += p;
    }
    println!("sum = {total:.9}");
    println!("livelock mass = {:.9}", livelock_mass(&lsp).unwrap());
}
