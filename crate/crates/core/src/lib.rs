//! Analysis core for auditing Scratch 3 projects for gender stereotype
//! smells. Pure computation over in-memory data; no file or network IO.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod blocks_text;
pub mod build;
pub mod framework;
pub mod genprompt;
pub mod ir;
pub mod rater;
pub mod render;
#[cfg(test)]
mod testgen;
pub mod smells;
pub mod stats;
