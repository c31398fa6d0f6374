//! Exact and Monte Carlo projection statistics of planar Cantor iterates: the
//! four-corner set `K_n`, the Sierpiński Cantor set `S_n` and the random
//! four-corner model.

pub mod energy;
pub mod error;
pub mod favard;
pub mod geometry;
pub mod models;
pub mod pairs;
pub mod projection;
pub mod report;
pub mod rng;

pub use error::{Error, Result};
