//! Simulator for recovering hidden friend lists from what a social
//! network still exposes publicly.
//!
//! * [`graph`], [`generate`], [`io`]: the ground-truth world, its
//!   synthetic generator and its JSON file format.
//! * [`service`]: the public primitives a crawler may call, in-process or
//!   over HTTP, with exact per-account request accounting.
//! * [`strategies`]: the page, picture and group based recovery
//!   strategies and their ground-truth references.
//! * [`harness`]: multi-victim experiments, recall curves and reports.

pub mod error;
pub mod generate;
pub mod graph;
pub mod harness;
pub mod io;
pub mod seed;
pub mod service;
pub mod strategies;

pub use error::{Error, Result};
