//! IO, formats, HTTP rating and the command-line front end for stereoscan.

pub use stereoscan_core as core;

pub mod analyze;
pub mod cli;
pub mod archive;
pub mod config;
pub mod images;
pub mod provider;
pub mod report;
