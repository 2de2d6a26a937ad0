//! Command-line and HTTP front ends for `lplm-core`.

pub mod api;
pub mod repl;
pub mod session;
