//! Executable proposition checks, model comparisons and the policy sweep.

mod compare;
mod draws;
mod propositions;
mod sweep;

pub use compare::{compare_models, ComparisonRow, ComparisonTable};
pub use draws::{random_params, DEFAULT_SEED};
pub use propositions::{
    check_all, check_proposition, prop2_random_check, Antecedent, Claim, Conclusion, PropositionReport, RandomCheck,
    Relation, Verdict,
};
pub use sweep::{
    deviations, sweep, CellDeviation, GridMode, ReferenceRow, SweepChecks, SweepRow, SweepTable, DEFAULT_F_GRID,
    DEFAULT_K_GRID, SWEEP_COLUMNS,
};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::params::{ModelId, ModelParams};
use crate::solution::Provenance;
use crate::solver::{closed_form, closed_form_values, oracle, SolveOptions};

/// Named values of one model under one source, computed once.
type Values = Result<Vec<(&'static str, Result<f64>)>>;

/// Lazily evaluates models under a fixed source and caches the results.
pub(crate) struct Evaluator<'a> {
    params: &'a ModelParams,
    source: Provenance,
    opts: &'a SolveOptions,
    cache: BTreeMap<ModelId, Values>,
}

impl<'a> Evaluator<'a> {
    pub(crate) fn new(params: &'a ModelParams, source: Provenance, opts: &'a SolveOptions) -> Self {
        Evaluator {
            params,
            source,
            opts,
            cache: BTreeMap::new(),
        }
    }

    fn compute(&self, model: ModelId) -> Values {
        match self.source {
            Provenance::ClosedForm => {
                let mut v: Vec<(&'static str, Result<f64>)> = closed_form_values(model, self.params).entries();
                match closed_form(model, self.params, self.opts.tol) {
                    Ok(s) => {
                        let skip = s.decision_values().len();
                        v.extend(s.comparable_values().into_iter().skip(skip).map(|(n, x)| (n, Ok(x))));
                    }
                    Err(e) => {
                        let mut names = vec!["profit_manufacturer", "profit_retailer1"];
                        if model.is_competitive() {
                            names.push("profit_retailer2");
                        }
                        names.push("profit_chain");
                        v.extend(names.into_iter().map(|n| (n, Err(e.clone()))));
                    }
                }
                Ok(v)
            }
            Provenance::Oracle => {
                let s = oracle(model, self.params, self.opts)?;
                Ok(s.comparable_values().into_iter().map(|(n, x)| (n, Ok(x))).collect())
            }
        }
    }

    pub(crate) fn values(&mut self, model: ModelId) -> &Values {
        if !self.cache.contains_key(&model) {
            let v = self.compute(model);
            self.cache.insert(model, v);
        }
        &self.cache[&model]
    }

    pub(crate) fn value(&mut self, model: ModelId, name: &str) -> Result<f64> {
        match self.values(model) {
            Err(e) => Err(e.clone()),
            Ok(v) => v
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, x)| x.clone())
                .unwrap_or_else(|| {
                    Err(Error::Structural {
                        model,
                        detail: format!("no variable {name}"),
                    })
                }),
        }
    }
}
