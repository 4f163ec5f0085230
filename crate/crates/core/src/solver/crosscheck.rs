//! Side-by-side comparison of the printed formulas and the oracle.

use serde::Serialize;

use crate::error::Error;
use crate::params::{ModelId, ModelParams};
use crate::solution::Solution;

use super::closed_form::closed_form_values;
use super::{oracle, SolveOptions};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum VariableStatus {
    Ok,
    /// The closed form has a zero denominator; carries the expression.
    Singular(String),
    /// The oracle failed; carries its error text.
    OracleFailed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableCheck {
    pub variable: String,
    pub closed_form: Option<f64>,
    pub oracle: Option<f64>,
    pub abs_deviation: Option<f64>,
    /// `abs_deviation / max(|oracle|, 1e-12)`.
    pub rel_deviation: Option<f64>,
    pub status: VariableStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheckReport {
    pub model: ModelId,
    pub rows: Vec<VariableCheck>,
    /// Screening feasibility of the closed-form menu, when it evaluates.
    pub closed_form_feasible: Option<bool>,
    pub closed_form: Option<Solution>,
    pub oracle: Result<Solution, Error>,
}

impl CrossCheckReport {
    pub fn row(&self, variable: &str) -> Option<&VariableCheck> {
        self.rows.iter().find(|r| r.variable == variable)
    }
}

/// Runs both solvers and tabulates per-variable deviations. Disagreement is
/// reported, never treated as an error.
pub fn cross_check(model: ModelId, params: &ModelParams, opts: &SolveOptions) -> CrossCheckReport {
    let values = closed_form_values(model, params);
    let cf_solution = super::closed_form(model, params, opts.tol).ok();
    let or = oracle(model, params, opts);

    let mut cf: Vec<(String, Result<f64, Error>)> =
        values.entries().into_iter().map(|(n, v)| (n.to_string(), v)).collect();
    if let Some(s) = &cf_solution {
        for (n, v) in s.comparable_values().into_iter().skip(s.decision_values().len()) {
            cf.push((n.to_string(), Ok(v)));
        }
    } else if let Ok(o) = &or {
        for (n, _) in o.comparable_values().into_iter().skip(o.decision_values().len()) {
            let err = values.first_error().unwrap_or(Error::InvalidOptions("closed form unavailable".into()));
            cf.push((n.to_string(), Err(err)));
        }
    }
    let oracle_values: Vec<(&'static str, f64)> = or.as_ref().map(|s| s.comparable_values()).unwrap_or_default();

    let rows = cf
        .into_iter()
        .map(|(variable, cfv)| {
            let ov = oracle_values.iter().find(|(n, _)| *n == variable).map(|(_, v)| *v);
            let (closed_form, status) = match (&cfv, &or) {
                (Err(Error::Singular { expression, .. }), _) => (None, VariableStatus::Singular(expression.to_string())),
                (Err(e), _) => (None, VariableStatus::Singular(e.to_string())),
                (Ok(v), Err(e)) => (Some(*v), VariableStatus::OracleFailed(e.to_string())),
                (Ok(v), Ok(_)) => (Some(*v), VariableStatus::Ok),
            };
            let abs_deviation = match (closed_form, ov) {
                (Some(a), Some(b)) => Some((a - b).abs()),
                _ => None,
            };
            let rel_deviation = abs_deviation.zip(ov).map(|(d, o)| d / o.abs().max(1e-12));
            VariableCheck {
                variable,
                closed_form,
                oracle: ov,
                abs_deviation,
                rel_deviation,
                status,
            }
        })
        .collect();

    CrossCheckReport {
        model,
        rows,
        closed_form_feasible: cf_solution.as_ref().map(|s| s.feasible()),
        closed_form: cf_solution,
        oracle: or,
    }
}
