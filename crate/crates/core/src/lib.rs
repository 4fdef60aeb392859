//! Universal clustering: pick `k` centers before knowing which clients will
//! show up, minimizing the worst-case regret against the optimum in hindsight.

#![allow(clippy::needless_range_loop, clippy::redundant_guards)]

pub mod discounts;
pub mod error;
pub mod exact;
pub mod generate;
pub mod io;
pub mod lp;
pub mod model;
pub mod separation;
pub mod solvers;
pub mod submodular;

pub use error::{Error, Result};
pub use model::{CostVector, Exponent, Instance, Objective, Realization, Solution};
