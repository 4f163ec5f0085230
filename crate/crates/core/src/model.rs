//! Demand, profit and transfer evaluators.
//!
//! Every function here is a pure function of its arguments. Out-of-range
//! inputs (negative demand, recycling rates outside `[0, 1]`, negative
//! margins) are evaluated as-is; callers collect them as warnings through
//! [`warnings_at`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ModelId, ModelParams, TypeLabel};

/// Screening menu `{(w_H, tau_H), (w_L, tau_L)}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ContractMenu {
    pub w_h: f64,
    pub w_l: f64,
    pub tau_h: f64,
    pub tau_l: f64,
}

impl ContractMenu {
    pub fn new(w_h: f64, tau_h: f64, w_l: f64, tau_l: f64) -> Self {
        ContractMenu { w_h, w_l, tau_h, tau_l }
    }

    pub fn w(&self, item: TypeLabel) -> f64 {
        match item {
            TypeLabel::H => self.w_h,
            TypeLabel::L => self.w_l,
        }
    }

    pub fn tau(&self, item: TypeLabel) -> f64 {
        match item {
            TypeLabel::H => self.tau_h,
            TypeLabel::L => self.tau_l,
        }
    }
}

/// Retail prices. `p2` is present exactly for the competitive models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePair {
    pub p1: f64,
    pub p2: Option<f64>,
}

impl PricePair {
    pub fn single(p1: f64) -> Self {
        PricePair { p1, p2: None }
    }

    pub fn pair(p1: f64, p2: f64) -> Self {
        PricePair { p1, p2: Some(p2) }
    }

    /// Reference prices shaped for `model`.
    pub fn reference(params: &ModelParams, model: ModelId) -> Self {
        if model.is_competitive() {
            PricePair::pair(params.p1_ref, params.p2_ref)
        } else {
            PricePair::single(params.p1_ref)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    pub q1: f64,
    pub q2: f64,
    pub total: f64,
}

fn check_shape(prices: &PricePair, model: ModelId) -> Result<()> {
    match (model.is_competitive(), prices.p2) {
        (true, None) => Err(Error::Structural {
            model,
            detail: "retailer 2 price p2 is required".into(),
        }),
        (false, Some(_)) => Err(Error::Structural {
            model,
            detail: "model has no retailer 2, p2 must be absent".into(),
        }),
        _ => Ok(()),
    }
}

pub fn demand(params: &ModelParams, prices: &PricePair, model: ModelId) -> Result<Demand> {
    check_shape(prices, model)?;
    let p1 = prices.p1;
    Ok(match prices.p2 {
        None => {
            let q1 = params.a - p1;
            Demand { q1, q2: 0.0, total: q1 }
        }
        Some(p2) => {
            let q1 = params.a - p1 + params.eps * p2;
            let q2 = params.a - p2 + params.eps * p1;
            Demand { q1, q2, total: q1 + q2 }
        }
    })
}

/// Emission reward (positive) or penalty (negative): `-f (quantity e_m - e_0)`.
pub fn emission_transfer(params: &ModelParams, quantity: f64) -> f64 {
    -params.f * (quantity * params.e_m - params.e_0)
}

/// Recycling reward-penalty received by retailer 1 at rate `tau`.
pub fn recycling_transfer(params: &ModelParams, tau: f64) -> f64 {
    params.k * (tau - params.tau_0)
}

/// Penalty levied on retailer 2, which does not collect.
pub fn retailer2_penalty(params: &ModelParams) -> f64 {
    -params.k * params.tau_0
}

/// Manufacturer's per-unit margin when a fraction `tau` is remanufactured
/// at buy-back price `w`.
pub fn manufacturer_unit_margin(params: &ModelParams, w: f64, tau: f64) -> f64 {
    params.p_m - tau * (w + params.c_d + params.c_r) - (1.0 - tau) * params.c_m
}

/// Units the manufacturer sells: retailer 1's demand in the centralized
/// models, total demand otherwise.
pub fn manufacturer_quantity(d: &Demand, model: ModelId) -> f64 {
    if model.is_competitive() {
        d.total
    } else {
        d.q1
    }
}

pub fn manufacturer_profit(
    model: ModelId,
    params: &ModelParams,
    menu: &ContractMenu,
    prices: &PricePair,
) -> Result<f64> {
    let d = demand(params, prices, model)?;
    let qty = manufacturer_quantity(&d, model);
    let mut profit = 0.0;
    for t in TypeLabel::BOTH {
        profit += params.weight(t) * qty * manufacturer_unit_margin(params, menu.w(t), menu.tau(t));
    }
    if model.has_emission_cap() {
        profit += emission_transfer(params, qty);
    }
    Ok(profit)
}

/// Payoff of a retailer-1 type whose cost coefficient is `beta` and which
/// collects at rate `tau` for buy-back price `w`, facing demand `q1`.
/// `transfer_tau` is the rate the recycling transfer is assessed on
/// (ignored outside model V).
#[allow(clippy::too_many_arguments)]
pub fn retailer1_payoff(
    model: ModelId,
    params: &ModelParams,
    q1: f64,
    p1: f64,
    beta: f64,
    w: f64,
    tau: f64,
    transfer_tau: f64,
) -> f64 {
    let mut v = q1 * tau * (w - params.c) + q1 * (p1 - params.p_m) - beta * tau * tau;
    if model.has_recycling_transfer() {
        v += recycling_transfer(params, transfer_tau);
    }
    v
}

/// Retailer 1's profit in the branch where its type is `label` and it takes
/// its own contract.
pub fn retailer1_branch(
    model: ModelId,
    params: &ModelParams,
    label: TypeLabel,
    menu: &ContractMenu,
    prices: &PricePair,
) -> Result<f64> {
    let d = demand(params, prices, model)?;
    let tau = menu.tau(label);
    Ok(retailer1_payoff(
        model,
        params,
        d.q1,
        prices.p1,
        params.beta(label),
        menu.w(label),
        tau,
        tau,
    ))
}

pub fn retailer1_profit(
    model: ModelId,
    params: &ModelParams,
    menu: &ContractMenu,
    prices: &PricePair,
) -> Result<f64> {
    let mut profit = 0.0;
    for t in TypeLabel::BOTH {
        profit += params.weight(t) * retailer1_branch(model, params, t, menu, prices)?;
    }
    Ok(profit)
}

pub fn retailer2_profit(model: ModelId, params: &ModelParams, prices: &PricePair) -> Result<f64> {
    if !model.is_competitive() {
        return Err(Error::WrongModel {
            op: "retailer2_profit",
            model,
        });
    }
    let d = demand(params, prices, model)?;
    let p2 = prices.p2.expect("shape checked by demand");
    let mut v = (p2 - params.p_m) * d.q2;
    if model.has_recycling_transfer() {
        v += retailer2_penalty(params);
    }
    Ok(v)
}

/// Sum of member profits.
pub fn chain_profit(
    model: ModelId,
    params: &ModelParams,
    menu: &ContractMenu,
    prices: &PricePair,
) -> Result<f64> {
    let mut v = manufacturer_profit(model, params, menu, prices)? + retailer1_profit(model, params, menu, prices)?;
    if model.is_competitive() {
        v += retailer2_profit(model, params, prices)?;
    }
    Ok(v)
}

/// Chain profit of a centralized model written without buy-back prices:
/// the per-unit recycling margin of the whole chain is
/// `-(c_d + c_r - c_m + c) tau`.
pub fn centralized_chain_profit(
    model: ModelId,
    params: &ModelParams,
    p1: f64,
    tau_h: f64,
    tau_l: f64,
) -> Result<f64> {
    if !model.is_centralized() {
        return Err(Error::WrongModel {
            op: "centralized_chain_profit",
            model,
        });
    }
    let q1 = params.a - p1;
    let unit = params.c_d + params.c_r - params.c_m + params.c;
    let mut v = 0.0;
    for (t, tau) in [(TypeLabel::H, tau_h), (TypeLabel::L, tau_l)] {
        v += params.weight(t) * (q1 * (p1 - tau * unit - params.c_m) - params.beta(t) * tau * tau);
    }
    if model.has_emission_cap() {
        v += emission_transfer(params, q1);
    }
    Ok(v)
}

/// Non-fatal conditions found at an evaluated point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Warning {
    NegativeDemand { retailer: u8, value: f64 },
    TauOutOfRange { item: TypeLabel, value: f64 },
    NegativeManufacturerMargin { item: TypeLabel, value: f64 },
    NegativeRetailMargin { retailer: u8, value: f64 },
    NonFinite { field: &'static str },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::NegativeDemand { retailer, value } => write!(f, "negative_demand_q{retailer}={value}"),
            Warning::TauOutOfRange { item, value } => write!(f, "tau_{item}_out_of_range={value}"),
            Warning::NegativeManufacturerMargin { item, value } => {
                write!(f, "negative_manufacturer_margin_{item}={value}")
            }
            Warning::NegativeRetailMargin { retailer, value } => {
                write!(f, "negative_retail_margin_r{retailer}={value}")
            }
            Warning::NonFinite { field } => write!(f, "non_finite_{field}"),
        }
    }
}

/// Collects out-of-range conditions at a decision point.
pub fn warnings_at(
    model: ModelId,
    params: &ModelParams,
    menu: &ContractMenu,
    prices: &PricePair,
) -> Result<Vec<Warning>> {
    let d = demand(params, prices, model)?;
    let mut out = Vec::new();
    for (field, v) in [
        ("w_h", menu.w_h),
        ("w_l", menu.w_l),
        ("tau_h", menu.tau_h),
        ("tau_l", menu.tau_l),
        ("p1", prices.p1),
        ("p2", prices.p2.unwrap_or(0.0)),
    ] {
        if !v.is_finite() {
            out.push(Warning::NonFinite { field });
        }
    }
    if d.q1 < 0.0 {
        out.push(Warning::NegativeDemand { retailer: 1, value: d.q1 });
    }
    if model.is_competitive() && d.q2 < 0.0 {
        out.push(Warning::NegativeDemand { retailer: 2, value: d.q2 });
    }
    for t in TypeLabel::BOTH {
        let tau = menu.tau(t);
        if !(0.0..=1.0).contains(&tau) {
            out.push(Warning::TauOutOfRange { item: t, value: tau });
        }
    }
    for t in TypeLabel::BOTH {
        let m = manufacturer_unit_margin(params, menu.w(t), menu.tau(t));
        if m < 0.0 {
            out.push(Warning::NegativeManufacturerMargin { item: t, value: m });
        }
    }
    if prices.p1 - params.p_m < 0.0 {
        out.push(Warning::NegativeRetailMargin {
            retailer: 1,
            value: prices.p1 - params.p_m,
        });
    }
    if let Some(p2) = prices.p2 {
        if p2 - params.p_m < 0.0 {
            out.push(Warning::NegativeRetailMargin {
                retailer: 2,
                value: p2 - params.p_m,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn study() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn competitive_demand_at_study_prices() {
        let d = demand(&study(), &PricePair::pair(1.7, 1.9), ModelId::III).unwrap();
        assert_abs_diff_eq!(d.q1, 2.06, epsilon = 1e-12);
        assert_abs_diff_eq!(d.q2, 1.78, epsilon = 1e-12);
        assert_abs_diff_eq!(d.total, 3.84, epsilon = 1e-12);
    }

    #[test]
    fn demand_vanishes_at_choke_price() {
        let p = study();
        let d = demand(&p, &PricePair::single(p.a), ModelId::I).unwrap();
        assert_eq!(d.q1, 0.0);
        assert_eq!(d.q2, 0.0);
    }

    #[test]
    fn demand_is_symmetric_without_substitution() {
        let p = ModelParams { eps: 0.0, ..study() };
        let d = demand(&p, &PricePair::pair(1.1, 1.1), ModelId::IV).unwrap();
        assert_eq!(d.q1, p.a - 1.1);
        assert_eq!(d.q2, d.q1);
    }

    #[test]
    fn demand_rejects_mismatched_price_shape() {
        let p = study();
        assert!(matches!(
            demand(&p, &PricePair::single(1.7), ModelId::III),
            Err(Error::Structural { .. })
        ));
        assert!(matches!(
            demand(&p, &PricePair::pair(1.7, 1.9), ModelId::I),
            Err(Error::Structural { .. })
        ));
    }

    #[test]
    fn negative_demand_is_returned_and_flagged() {
        let p = study();
        let prices = PricePair::single(4.0);
        let d = demand(&p, &prices, ModelId::I).unwrap();
        assert_eq!(d.q1, -1.0);
        let w = warnings_at(ModelId::I, &p, &ContractMenu::default(), &prices).unwrap();
        assert!(w.contains(&Warning::NegativeDemand { retailer: 1, value: -1.0 }));
    }

    #[test]
    fn emission_transfer_values() {
        let p = study();
        assert_abs_diff_eq!(emission_transfer(&p, 3.84), -6.468, epsilon = 1e-12);
        assert_eq!(emission_transfer(&p, p.e_0 / p.e_m) + 0.0, 0.0);
        let off = ModelParams { f: 0.0, ..p };
        assert_eq!(emission_transfer(&off, 123.0), 0.0);
    }

    #[test]
    fn recycling_transfers() {
        let p = study();
        assert_abs_diff_eq!(recycling_transfer(&p, 0.56), -0.48, epsilon = 1e-12);
        assert_eq!(recycling_transfer(&p, p.tau_0), 0.0);
        assert_abs_diff_eq!(retailer2_penalty(&p), -1.6, epsilon = 1e-12);
    }

    #[test]
    fn manufacturer_profit_model_one_single_type() {
        let p = ModelParams { mu: 1.0, ..study() };
        let menu = ContractMenu::new(4.5, 0.5, 0.0, 0.0);
        let prices = PricePair::single(1.7);
        assert_abs_diff_eq!(manufacturer_unit_margin(&p, 4.5, 0.5), -4.75, epsilon = 1e-12);
        let v = manufacturer_profit(ModelId::I, &p, &menu, &prices).unwrap();
        assert_abs_diff_eq!(v, -6.175, epsilon = 1e-12);
    }

    #[test]
    fn manufacturer_profit_without_recycling_is_new_product_margin() {
        let p = study();
        let menu = ContractMenu::new(3.0, 0.0, 1.0, 0.0);
        let prices = PricePair::single(1.7);
        let v = manufacturer_profit(ModelId::I, &p, &menu, &prices).unwrap();
        assert_abs_diff_eq!(v, (p.a - 1.7) * (p.p_m - p.c_m), epsilon = 1e-12);
        let v2 = manufacturer_profit(ModelId::II, &p, &menu, &prices).unwrap();
        assert_abs_diff_eq!(v2, v + emission_transfer(&p, p.a - 1.7), epsilon = 1e-12);
    }

    #[test]
    fn model_two_without_emission_strength_is_model_one() {
        let p = ModelParams { f: 0.0, ..study() };
        let menu = ContractMenu::new(4.5, 0.3, 4.0, 0.6);
        let prices = PricePair::single(1.7);
        assert_eq!(
            manufacturer_profit(ModelId::II, &p, &menu, &prices).unwrap(),
            manufacturer_profit(ModelId::I, &p, &menu, &prices).unwrap()
        );
        assert_eq!(
            chain_profit(ModelId::II, &p, &menu, &prices).unwrap(),
            chain_profit(ModelId::I, &p, &menu, &prices).unwrap()
        );
    }

    #[test]
    fn retailer1_profit_model_three_single_type() {
        let p = ModelParams { mu: 1.0, ..study() };
        let menu = ContractMenu::new(4.5, 0.5, 0.0, 0.0);
        let v = retailer1_profit(ModelId::III, &p, &menu, &PricePair::pair(1.7, 1.9)).unwrap();
        assert_abs_diff_eq!(v, 1.164, epsilon = 1e-12);
    }

    #[test]
    fn retailer1_zero_without_recycling_or_margin() {
        let p = study();
        let menu = ContractMenu::new(4.5, 0.0, 2.0, 0.0);
        let v = retailer1_profit(ModelId::I, &p, &menu, &PricePair::single(p.p_m)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn model_five_without_recycling_strength_is_model_four() {
        let p = ModelParams { k: 0.0, ..study() };
        let menu = ContractMenu::new(4.5, 0.56, 3.3, 0.43);
        let prices = PricePair::pair(1.7, 1.9);
        assert_eq!(
            retailer1_profit(ModelId::V, &p, &menu, &prices).unwrap(),
            retailer1_profit(ModelId::IV, &p, &menu, &prices).unwrap()
        );
        assert_eq!(
            retailer2_profit(ModelId::V, &p, &prices).unwrap(),
            retailer2_profit(ModelId::IV, &p, &prices).unwrap()
        );
    }

    #[test]
    fn retailer2_profit_values() {
        let p = study();
        let prices = PricePair::pair(1.7, 1.9);
        assert_abs_diff_eq!(retailer2_profit(ModelId::III, &p, &prices).unwrap(), 1.068, epsilon = 1e-12);
        assert_abs_diff_eq!(retailer2_profit(ModelId::V, &p, &prices).unwrap(), -0.532, epsilon = 1e-12);
        let zero = PricePair::pair(1.7, p.p_m);
        assert_eq!(retailer2_profit(ModelId::IV, &p, &zero).unwrap(), 0.0);
        assert!(retailer2_profit(ModelId::I, &p, &PricePair::single(1.7)).is_err());
    }

    #[test]
    fn centralized_chain_without_recycling() {
        let p = study();
        let v = centralized_chain_profit(ModelId::I, &p, 1.7, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(v, (p.a - 1.7) * (1.7 - p.c_m), epsilon = 1e-12);
        let off = ModelParams { f: 0.0, ..p };
        assert_eq!(
            centralized_chain_profit(ModelId::II, &off, 1.9, 0.2, 0.4).unwrap(),
            centralized_chain_profit(ModelId::I, &off, 1.9, 0.2, 0.4).unwrap()
        );
    }
}
