//! Numerical toolkit for channels with action-dependent states.

pub mod bc;
pub mod cdc;
pub mod cli;
pub mod channel;
pub mod config;
pub mod gaussian;
pub mod mc;
pub mod nelder_mead;
pub mod output;
pub mod prob;
pub mod probing;
pub mod search;
