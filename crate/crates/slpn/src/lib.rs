//! Analysis toolkit for bounded labelled stochastic Petri nets with silent
//! transitions under finite-trace semantics.
//!
//! The crate parses `.slpn` net descriptions, builds stochastic reachability
//! graphs, and computes exact outcome, trace and specification probabilities
//! by solving absorbing-chain linear systems, optionally against a DFA
//! product. On top of that sit probabilistic Declare compliance checking and
//! unit-Earth-movers stochastic conformance against event logs.
//!
//! Start with [`net::parse_slpn`] and the functions in [`analysis`]; the
//! `examples/` directory shows one runnable program per capability.

pub mod analysis;
pub mod automata;
pub mod conformance;
pub mod error;
pub mod markov;
pub mod net;
pub mod oracle;
pub mod probdeclare;
pub mod reachability;
#[doc(hidden)]
pub mod testnets;

pub use error::{Error, Result};
pub use net::{Label, Lgspn, Lsp, Marking, parse_slpn, serialize_slpn};
