//! Equilibrium computation: printed closed forms and the numerical oracle.

mod centralized;
mod closed_form;
mod crosscheck;
mod follower;
pub mod kkt;
mod leader;
pub mod search;

pub use centralized::{buyback_prices, centralized_optimize};
pub use closed_form::{closed_form, closed_form_values, emission_price_corrections, ClosedFormValues};
pub use crosscheck::{cross_check, CrossCheckReport, VariableCheck, VariableStatus};
pub use follower::{
    follower_equilibrium, retailer1_best_response, retailer1_tau, retailer2_best_response, FollowerOutcome,
    Retailer1Response,
};
pub use leader::leader_optimize;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ModelId, ModelParams};
use crate::solution::Solution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintHandling {
    #[default]
    RejectInfeasible,
    /// Subtracts `penalty_weight * violation` from the objective.
    Penalty,
}

/// Tuning and bounds for the numerical oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    /// Points per decision variable on the first outer grid pass.
    pub grid: usize,
    /// Points per variable on each refinement pass.
    pub refine_grid: usize,
    pub refine_iters: usize,
    /// Outer search stops once the box is narrower than this.
    pub xtol: f64,
    /// Relative objective difference below which outer candidates tie.
    pub tie_tol: f64,
    /// Grid points for retailer 1's price search.
    pub price_grid: usize,
    pub price_xtol: f64,
    pub damping: f64,
    pub fixed_point_tol: f64,
    pub max_iter: usize,
    /// Screening feasibility tolerance.
    pub tol: f64,
    pub w_max: Option<f64>,
    pub p1_max: Option<f64>,
    pub p2_max: Option<f64>,
    pub constraint_handling: ConstraintHandling,
    pub penalty_weight: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            grid: 21,
            refine_grid: 9,
            refine_iters: 48,
            xtol: 1e-10,
            tie_tol: 1e-12,
            price_grid: 16,
            price_xtol: 1e-11,
            damping: 0.5,
            fixed_point_tol: 1e-10,
            max_iter: 1000,
            tol: crate::constraints::DEFAULT_TOL,
            w_max: None,
            p1_max: None,
            p2_max: None,
            constraint_handling: ConstraintHandling::RejectInfeasible,
            penalty_weight: 1e3,
        }
    }
}

/// Resolved search box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub w_max: f64,
    pub p1_max: f64,
    pub p2_max: f64,
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.grid < 2 {
            errs.push(format!("grid must be at least 2 (got {})", self.grid));
        }
        if self.refine_grid < 3 {
            errs.push(format!("refine_grid must be at least 3 (got {})", self.refine_grid));
        }
        if self.price_grid < 3 {
            errs.push(format!("price_grid must be at least 3 (got {})", self.price_grid));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            errs.push(format!("damping must lie in (0, 1] (got {})", self.damping));
        }
        for (name, v) in [
            ("xtol", self.xtol),
            ("price_xtol", self.price_xtol),
            ("fixed_point_tol", self.fixed_point_tol),
            ("tol", self.tol),
        ] {
            if !(v > 0.0) {
                errs.push(format!("{name} must be positive (got {v})"));
            }
        }
        if !(self.tie_tol >= 0.0) {
            errs.push(format!("tie_tol must be nonnegative (got {})", self.tie_tol));
        }
        if self.max_iter == 0 {
            errs.push("max_iter must be positive".into());
        }
        for (name, v) in [("w_max", self.w_max), ("p1_max", self.p1_max), ("p2_max", self.p2_max)] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    errs.push(format!("{name} must be positive and finite (got {v})"));
                }
            }
        }
        if !(self.penalty_weight >= 0.0) {
            errs.push(format!("penalty_weight must be nonnegative (got {})", self.penalty_weight));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidOptions(errs.join("; ")))
        }
    }

    /// Explicit bounds, else `w_max = 3 (c + c_d + c_r)` and
    /// `p_max = a (1 + eps) / (1 - eps)`.
    pub fn bounds(&self, params: &ModelParams) -> Result<Bounds> {
        self.validate()?;
        let w_max = self.w_max.unwrap_or(3.0 * (params.c + params.c_d + params.c_r));
        let p_default = if params.eps < 1.0 {
            Some(params.a * (1.0 + params.eps) / (1.0 - params.eps))
        } else {
            None
        };
        let resolve = |v: Option<f64>, name: &str| {
            v.or(p_default)
                .ok_or_else(|| Error::InvalidOptions(format!("{name} must be given when eps >= 1")))
        };
        let b = Bounds {
            w_max,
            p1_max: resolve(self.p1_max, "p1_max")?,
            p2_max: resolve(self.p2_max, "p2_max")?,
        };
        for (name, v) in [("w_max", b.w_max), ("p1_max", b.p1_max), ("p2_max", b.p2_max)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidOptions(format!("{name} bound is empty (upper {v})")));
            }
        }
        Ok(b)
    }

    pub(crate) fn grid_spec(&self) -> search::GridSpec {
        search::GridSpec {
            resolution: self.grid,
            refine_resolution: self.refine_grid,
            refine_iters: self.refine_iters,
            xtol: self.xtol,
            tie_tol: self.tie_tol,
        }
    }
}

/// Runs the oracle appropriate to the model.
pub fn oracle(model: ModelId, params: &ModelParams, opts: &SolveOptions) -> Result<Solution> {
    if model.is_centralized() {
        centralized_optimize(model, params, opts)
    } else {
        leader_optimize(model, params, opts)
    }
}
