//! Command-line tools and the live WebSocket service around `gesture-pilot`.

pub mod cli;
pub mod server;
