//! Command-line front end and playground server for `nilnet`.

pub mod cli;
pub mod server;
