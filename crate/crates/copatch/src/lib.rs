//! On-disk store and command-line front end for `copatch-core`.
//!
//! A working directory holds one tracked file (`FILE`, or the name in
//! `COPATCH_FILE`) and a `.copatch/` store. See [`store`] for the layout and
//! [`cli::run`] for the commands.

pub mod cli;
pub mod store;
