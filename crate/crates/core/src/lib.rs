//! Two-type screening models of a reverse supply chain with retail
//! competition, emission caps and recycling rewards.
//!
//! Each model is solved two ways: by evaluating its printed closed-form
//! solution, and by a bilevel numerical oracle (manufacturer leads, the
//! retailers then price and collect). [`solver::cross_check`] compares them
//! and [`analysis`] turns the comparisons into verdicts.

pub mod analysis;
pub mod constraints;
pub mod error;
pub mod model;
pub mod params;
pub mod solution;
pub mod solver;

pub use constraints::{screening_check, type_payoff, Constraint, ScreeningReport, DEFAULT_TOL};
pub use error::{Error, Result};
pub use model::{ContractMenu, Demand, PricePair, Warning};
pub use params::{Conventions, ModelId, ModelParams, TransferRule, TypeLabel, TypeProfile};
pub use solution::{Diagnostics, Profits, Provenance, Solution, StageResidual, Transfers};
pub use solver::{ConstraintHandling, CrossCheckReport, SolveOptions};
