//! Participation (IR) and incentive-compatibility (IC) constraints of the
//! two-type screening menu.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{demand, retailer1_payoff, ContractMenu, PricePair};
use crate::params::{ModelId, ModelParams, TransferRule, TypeLabel};

pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Constraint {
    IrH,
    IrL,
    IcH,
    IcL,
}

impl Constraint {
    pub const ALL: [Constraint; 4] = [Constraint::IrL, Constraint::IrH, Constraint::IcH, Constraint::IcL];

    pub fn name(self) -> &'static str {
        match self {
            Constraint::IrH => "ir_h",
            Constraint::IrL => "ir_l",
            Constraint::IcH => "ic_h",
            Constraint::IcL => "ic_l",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Slacks of the four screening constraints. A constraint holds iff its
/// slack is at least `-tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub ir_l: f64,
    pub ir_h: f64,
    pub ic_h: f64,
    pub ic_l: f64,
    pub tol: f64,
    pub binding: Vec<Constraint>,
    pub feasible: bool,
}

impl ScreeningReport {
    pub fn slack(&self, c: Constraint) -> f64 {
        match c {
            Constraint::IrH => self.ir_h,
            Constraint::IrL => self.ir_l,
            Constraint::IcH => self.ic_h,
            Constraint::IcL => self.ic_l,
        }
    }

    /// Constraint with the smallest slack, ties resolved in `Constraint::ALL` order.
    pub fn most_violated(&self) -> (Constraint, f64) {
        let mut best = (Constraint::ALL[0], self.slack(Constraint::ALL[0]));
        for c in &Constraint::ALL[1..] {
            let s = self.slack(*c);
            if s < best.1 || (best.1.is_nan() && !s.is_nan()) {
                best = (*c, s);
            }
        }
        best
    }

    /// Sum of squared violations, zero when feasible.
    pub fn violation(&self) -> f64 {
        Constraint::ALL
            .iter()
            .map(|c| {
                let s = self.slack(*c);
                if s < 0.0 {
                    s * s
                } else {
                    0.0
                }
            })
            .sum()
    }
}

/// Payoff of a retailer-1 type `ty` that takes the contract `item`.
///
/// The cost coefficient is always the deviator's own `beta`; the contract
/// terms come from `item`.
pub fn type_payoff(
    ty: TypeLabel,
    menu: &ContractMenu,
    params: &ModelParams,
    prices: &PricePair,
    model: ModelId,
    item: TypeLabel,
) -> Result<f64> {
    let d = demand(params, prices, model)?;
    let transfer_tau = match params.conventions.transfer_on_deviation {
        TransferRule::ChosenItem => menu.tau(item),
        TransferRule::OwnType => menu.tau(ty),
    };
    Ok(retailer1_payoff(
        model,
        params,
        d.q1,
        prices.p1,
        params.beta(ty),
        menu.w(item),
        menu.tau(item),
        transfer_tau,
    ))
}

pub fn screening_check(
    menu: &ContractMenu,
    params: &ModelParams,
    prices: &PricePair,
    model: ModelId,
    tol: f64,
) -> Result<ScreeningReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidOptions(format!("screening tolerance must be positive (got {tol})")));
    }
    let own_h = type_payoff(TypeLabel::H, menu, params, prices, model, TypeLabel::H)?;
    let own_l = type_payoff(TypeLabel::L, menu, params, prices, model, TypeLabel::L)?;
    let dev_h = type_payoff(TypeLabel::H, menu, params, prices, model, TypeLabel::L)?;
    let dev_l = type_payoff(TypeLabel::L, menu, params, prices, model, TypeLabel::H)?;
    let mut r = ScreeningReport {
        ir_l: own_l - params.pi_r0,
        ir_h: own_h - params.pi_r0,
        ic_h: own_h - dev_h,
        ic_l: own_l - dev_l,
        tol,
        binding: Vec::new(),
        feasible: false,
    };
    r.binding = Constraint::ALL
        .into_iter()
        .filter(|c| r.slack(*c).abs() <= tol)
        .collect();
    r.feasible = Constraint::ALL.iter().all(|c| r.slack(*c) >= -tol);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::retailer1_branch;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn study() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn own_item_payoff_is_the_profit_branch() {
        let p = study();
        let menu = ContractMenu::new(4.5, 0.5, 3.3, 0.4);
        let prices = PricePair::pair(1.7, 1.9);
        for model in ModelId::ALL.into_iter().filter(|m| m.is_competitive()) {
            for t in TypeLabel::BOTH {
                assert_eq!(
                    type_payoff(t, &menu, &p, &prices, model, t).unwrap(),
                    retailer1_branch(model, &p, t, &menu, &prices).unwrap()
                );
            }
        }
        let v = type_payoff(TypeLabel::H, &menu, &p, &prices, ModelId::III, TypeLabel::H).unwrap();
        assert_abs_diff_eq!(v, 1.164, epsilon = 1e-12);
    }

    #[test]
    fn identical_items_have_zero_ic_slack() {
        let p = study();
        let menu = ContractMenu::new(4.2, 0.3, 4.2, 0.3);
        for model in ModelId::ALL {
            let prices = PricePair::reference(&p, model);
            let r = screening_check(&menu, &p, &prices, model, DEFAULT_TOL).unwrap();
            assert_eq!(r.ic_h, 0.0);
            assert_eq!(r.ic_l, 0.0);
        }
    }

    #[test]
    fn zero_profit_boundary_is_feasible_and_binding() {
        let p = study();
        let menu = ContractMenu::new(4.5, 0.0, 3.0, 0.0);
        let prices = PricePair::single(p.p_m);
        let r = screening_check(&menu, &p, &prices, ModelId::I, DEFAULT_TOL).unwrap();
        for c in Constraint::ALL {
            assert_eq!(r.slack(c), 0.0);
        }
        assert!(r.feasible);
        assert_eq!(r.binding.len(), 4);
    }

    #[test]
    fn reservation_profit_above_payoff_is_infeasible() {
        let p = ModelParams { mu: 1.0, pi_r0: 2.0, ..study() };
        let menu = ContractMenu::new(4.5, 0.5, 4.5, 0.5);
        let r = screening_check(&menu, &p, &PricePair::pair(1.7, 1.9), ModelId::III, DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(r.ir_h, -0.836, epsilon = 1e-12);
        assert!(!r.feasible);
        assert_eq!(r.most_violated().0, Constraint::IrH);
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        let p = study();
        let r = screening_check(&ContractMenu::default(), &p, &PricePair::single(1.7), ModelId::I, 0.0);
        assert!(matches!(r, Err(Error::InvalidOptions(_))));
    }

    /// With a common buy-back price, the L type's IC holds exactly when
    /// `q1 (w - c)(tau_H - tau_L) <= beta_L (tau_H^2 - tau_L^2)`; checked
    /// over a 50x50 grid of menus.
    #[test]
    fn low_type_ic_condition_matches_enumeration() {
        let p = study();
        let prices = PricePair::pair(1.7, 1.9);
        let q1 = demand(&p, &prices, ModelId::III).unwrap().q1;
        let mut checked = 0;
        for i in 0..50 {
            for j in 0..50 {
                let tau_l = i as f64 / 49.0 * 0.98;
                let tau_h = tau_l + 0.01 + j as f64 / 49.0 * (1.0 - tau_l - 0.01);
                for w in [3.0, 4.0, 4.3, 5.5, 7.0] {
                    let menu = ContractMenu::new(w, tau_h, w, tau_l);
                    let r = screening_check(&menu, &p, &prices, ModelId::III, DEFAULT_TOL).unwrap();
                    let lhs = q1 * (w - p.c) * (tau_h - tau_l);
                    let rhs = p.beta_l * (tau_h * tau_h - tau_l * tau_l);
                    if (lhs - rhs).abs() > 1e-9 {
                        assert_eq!(r.ic_l >= 0.0, lhs <= rhs, "w={w} tau_h={tau_h} tau_l={tau_l}");
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked > 10_000);
    }

    #[test]
    fn model_five_ic_shift_under_chosen_item_rule() {
        let p = study();
        let menu = ContractMenu::new(4.5, 0.56, 3.3, 0.43);
        let prices = PricePair::pair(1.7, 1.9);
        let r4 = screening_check(&menu, &p, &prices, ModelId::IV, DEFAULT_TOL).unwrap();
        let r5 = screening_check(&menu, &p, &prices, ModelId::V, DEFAULT_TOL).unwrap();
        let shift = p.k * (menu.tau_h - menu.tau_l);
        assert_abs_diff_eq!(r5.ic_h - r4.ic_h, shift, epsilon = 1e-12);
        assert_abs_diff_eq!(r5.ic_l - r4.ic_l, -shift, epsilon = 1e-12);

        let mut own = p;
        own.conventions.transfer_on_deviation = TransferRule::OwnType;
        let r5o = screening_check(&menu, &own, &prices, ModelId::V, DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(r5o.ic_h, r4.ic_h, epsilon = 1e-12);
        assert_abs_diff_eq!(r5o.ic_l, r4.ic_l, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn slacks_match_direct_payoff_differences(
            w_h in 0.0..10.0f64, w_l in 0.0..10.0f64,
            tau_h in 0.0..1.0f64, tau_l in 0.0..1.0f64,
            p1 in 0.5..3.0f64, p2 in 0.5..3.0f64,
            pi_r0 in 0.0..2.0f64, m in 0usize..5,
        ) {
            let model = ModelId::ALL[m];
            let p = ModelParams { pi_r0, ..study() };
            let menu = ContractMenu::new(w_h, tau_h, w_l, tau_l);
            let prices = if model.is_competitive() { PricePair::pair(p1, p2) } else { PricePair::single(p1) };
            let q1 = demand(&p, &prices, model).unwrap().q1;
            let pay = |beta: f64, w: f64, tau: f64| {
                let mut v = q1 * tau * (w - p.c) + q1 * (p1 - p.p_m) - beta * tau * tau;
                if model == ModelId::V { v += p.k * (tau - p.tau_0); }
                v
            };
            let r = screening_check(&menu, &p, &prices, model, DEFAULT_TOL).unwrap();
            let hh = pay(p.beta_h, w_h, tau_h);
            let ll = pay(p.beta_l, w_l, tau_l);
            prop_assert!((r.ir_h - (hh - pi_r0)).abs() < 1e-9);
            prop_assert!((r.ir_l - (ll - pi_r0)).abs() < 1e-9);
            prop_assert!((r.ic_h - (hh - pay(p.beta_h, w_l, tau_l))).abs() < 1e-9);
            prop_assert!((r.ic_l - (ll - pay(p.beta_l, w_h, tau_h))).abs() < 1e-9);
            prop_assert_eq!(r.feasible, Constraint::ALL.iter().all(|c| r.slack(*c) >= -DEFAULT_TOL));
        }

        #[test]
        fn retail_margin_shift_moves_only_ir(
            tau_h in 0.0..1.0f64, tau_l in 0.0..1.0f64, shift in -0.5..0.5f64,
        ) {
            let p = study();
            let menu = ContractMenu::new(5.0, tau_h, 4.5, tau_l);
            let base = PricePair::single(1.7);
            let moved = ModelParams { p_m: p.p_m - shift, ..p };
            let r0 = screening_check(&menu, &p, &base, ModelId::I, DEFAULT_TOL).unwrap();
            let r1 = screening_check(&menu, &moved, &base, ModelId::I, DEFAULT_TOL).unwrap();
            let q1 = p.a - 1.7;
            prop_assert!((r1.ir_h - r0.ir_h - q1 * shift).abs() < 1e-9);
            prop_assert!((r1.ir_l - r0.ir_l - q1 * shift).abs() < 1e-9);
            prop_assert!((r1.ic_h - r0.ic_h).abs() < 1e-9);
            prop_assert!((r1.ic_l - r0.ic_l).abs() < 1e-9);
        }
    }
}
