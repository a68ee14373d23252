//! Numerical laboratory for sub-Riemannian geodesics on metabelian Carnot
//! groups (`Eng(n)`, `N631`, `G357`) and their magnetic spaces.

pub mod classification;
pub mod cli;
pub mod costmaps;
pub mod error;
pub mod integrator;
pub mod models;
pub mod oracles;
pub mod poly;
pub mod quad;
pub mod reconstruction;
pub mod reduced;

pub use error::{Error, Result};
