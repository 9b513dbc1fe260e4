//! Command implementations behind the `bridgeroute` binary, and the
//! benchmark harness.

pub mod bench;
pub mod commands;
