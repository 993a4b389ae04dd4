//! Fixture nets shared by unit tests, integration tests and examples.

#![doc(hidden)]

pub const FIG_1A: &str = include_str!("../testdata/fig1a.slpn");
pub const FIG_1B: &str = include_str!("../testdata/fig1b.slpn");
pub const ORDER_TO_CASH: &str = include_str!("../testdata/order.slpn");
pub const LIVELOCK: &str = include_str!("../testdata/livelock.slpn");
