use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constraints::{screening_check, ScreeningReport};
use crate::error::Result;
use crate::model::{
    chain_profit, demand, emission_transfer, manufacturer_profit, manufacturer_quantity, recycling_transfer,
    retailer1_profit, retailer2_penalty, retailer2_profit, warnings_at, ContractMenu, Demand, PricePair, Warning,
};
use crate::params::{ModelId, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Oracle,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::ClosedForm => "closed_form",
            Provenance::Oracle => "oracle",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Profits {
    pub manufacturer: f64,
    pub retailer1: f64,
    /// `None` for the centralized models.
    pub retailer2: Option<f64>,
    pub chain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transfers {
    /// Emission reward-penalty of the manufacturer (0 where not applied).
    pub emission: f64,
    /// Recycling reward-penalty of retailer 1 in each type branch.
    pub recycling_h: f64,
    pub recycling_l: f64,
    pub retailer2_penalty: f64,
}

/// Stationarity or KKT residual of one optimized stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageResidual {
    pub stage: String,
    /// Norm of the projected gradient (or Lagrangian gradient), divided by
    /// `max(1, |objective|)`.
    pub scaled_norm: f64,
    pub active: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Diagnostics {
    pub warnings: Vec<Warning>,
    pub kkt: Vec<StageResidual>,
    pub notes: Vec<String>,
    /// Best-response iterations used by the follower stage.
    pub follower_iterations: Option<usize>,
}

/// An equilibrium record for one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub model: ModelId,
    pub menu: ContractMenu,
    pub prices: PricePair,
    pub demand: Demand,
    pub profits: Profits,
    pub transfers: Transfers,
    pub screening: ScreeningReport,
    pub diagnostics: Diagnostics,
    pub provenance: Provenance,
}

impl Solution {
    /// Evaluates every derived quantity at a decision point.
    pub fn evaluate(
        model: ModelId,
        params: &ModelParams,
        menu: ContractMenu,
        prices: PricePair,
        provenance: Provenance,
        tol: f64,
    ) -> Result<Solution> {
        let d = demand(params, &prices, model)?;
        let retailer2 = if model.is_competitive() {
            Some(retailer2_profit(model, params, &prices)?)
        } else {
            None
        };
        let profits = Profits {
            manufacturer: manufacturer_profit(model, params, &menu, &prices)?,
            retailer1: retailer1_profit(model, params, &menu, &prices)?,
            retailer2,
            chain: chain_profit(model, params, &menu, &prices)?,
        };
        let transfers = Transfers {
            emission: if model.has_emission_cap() {
                emission_transfer(params, manufacturer_quantity(&d, model))
            } else {
                0.0
            },
            recycling_h: if model.has_recycling_transfer() {
                recycling_transfer(params, menu.tau_h)
            } else {
                0.0
            },
            recycling_l: if model.has_recycling_transfer() {
                recycling_transfer(params, menu.tau_l)
            } else {
                0.0
            },
            retailer2_penalty: if model.has_recycling_transfer() {
                retailer2_penalty(params)
            } else {
                0.0
            },
        };
        let screening = screening_check(&menu, params, &prices, model, tol)?;
        let diagnostics = Diagnostics {
            warnings: warnings_at(model, params, &menu, &prices)?,
            ..Default::default()
        };
        Ok(Solution {
            model,
            menu,
            prices,
            demand: d,
            profits,
            transfers,
            screening,
            diagnostics,
            provenance,
        })
    }

    pub fn feasible(&self) -> bool {
        self.screening.feasible
    }

    /// `chain - (manufacturer + retailer1 + retailer2)`.
    pub fn accounting_residual(&self) -> f64 {
        let p = &self.profits;
        p.chain - (p.manufacturer + p.retailer1 + p.retailer2.unwrap_or(0.0))
    }

    /// Named decision variables, in a fixed order.
    pub fn decision_values(&self) -> Vec<(&'static str, f64)> {
        let mut v = vec![
            ("w_h", self.menu.w_h),
            ("w_l", self.menu.w_l),
            ("tau_h", self.menu.tau_h),
            ("tau_l", self.menu.tau_l),
            ("p1", self.prices.p1),
        ];
        if let Some(p2) = self.prices.p2 {
            v.push(("p2", p2));
        }
        v
    }

    /// Decision variables followed by member and chain profits.
    pub fn comparable_values(&self) -> Vec<(&'static str, f64)> {
        let mut v = self.decision_values();
        v.push(("profit_manufacturer", self.profits.manufacturer));
        v.push(("profit_retailer1", self.profits.retailer1));
        if let Some(r2) = self.profits.retailer2 {
            v.push(("profit_retailer2", r2));
        }
        v.push(("profit_chain", self.profits.chain));
        v
    }
}
