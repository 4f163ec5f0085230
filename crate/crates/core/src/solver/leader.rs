//! Competitive models: the manufacturer chooses `(w_H, w_L)` anticipating
//! the retailer-stage equilibrium.

use crate::constraints::{screening_check, Constraint, ScreeningReport};
use crate::error::{Error, Result};
use crate::model::{demand, manufacturer_profit, retailer2_profit, ContractMenu, PricePair};
use crate::params::{ModelId, ModelParams};
use crate::solution::{Provenance, Solution, StageResidual};

use super::follower::{follower_equilibrium, retailer1_value};
use super::kkt::{central_gradient, circle_directions, kkt_residual, max_feasible_ascent, scaled, ActiveConstraint};
use super::search::{grid_refine_max, GridOutcome, Score};
use super::{ConstraintHandling, SolveOptions};

const FD_STEP: f64 = 1e-6;
const ACTIVE_SLACK: f64 = 1e-4;
const ASCENT_STEP: f64 = 1e-4;

struct Stage {
    menu: ContractMenu,
    prices: PricePair,
    profit: f64,
    report: ScreeningReport,
    iterations: usize,
    min_demand: f64,
}

fn stage(model: ModelId, params: &ModelParams, opts: &SolveOptions, w: &[f64]) -> Result<Stage> {
    let offer = ContractMenu::new(w[0], 0.0, w[1], 0.0);
    let out = follower_equilibrium(&offer, params, model, opts)?;
    let menu = out.menu(w[0], w[1]);
    let profit = manufacturer_profit(model, params, &menu, &out.prices)?;
    let report = screening_check(&menu, params, &out.prices, model, opts.tol)?;
    let d = demand(params, &out.prices, model)?;
    Ok(Stage {
        min_demand: d.q1.min(d.q2),
        menu,
        prices: out.prices,
        profit,
        report,
        iterations: out.iterations,
    })
}

/// Maximizes expected manufacturer profit over the buy-back prices, solving
/// the retailer stage at every candidate and screening the resulting menu.
/// Candidates whose retail equilibrium has negative demand are infeasible.
pub fn leader_optimize(model: ModelId, params: &ModelParams, opts: &SolveOptions) -> Result<Solution> {
    if !model.is_competitive() {
        return Err(Error::WrongModel {
            op: "leader_optimize",
            model,
        });
    }
    params.validate()?;
    let b = opts.bounds(params)?;
    let score = |w: &[f64]| match stage(model, params, opts, w) {
        Ok(s) if s.min_demand < 0.0 => Score::Infeasible(-s.min_demand),
        Ok(s) if s.profit.is_finite() => match opts.constraint_handling {
            ConstraintHandling::RejectInfeasible if s.report.feasible => Score::Feasible(s.profit),
            ConstraintHandling::RejectInfeasible => Score::Infeasible(s.report.violation()),
            ConstraintHandling::Penalty => Score::Feasible(s.profit - opts.penalty_weight * s.report.violation()),
        },
        _ => Score::Infeasible(f64::INFINITY),
    };
    let lower = [0.0, 0.0];
    let upper = [b.w_max, b.w_max];
    let w = match grid_refine_max(score, &lower, &upper, &opts.grid_spec()) {
        GridOutcome::Found { x, .. } => x,
        GridOutcome::Infeasible { x, violation } => {
            let (constraint, slack) = match stage(model, params, opts, &x) {
                Ok(s) => {
                    let (c, v) = s.report.most_violated();
                    (c.name().to_string(), v)
                }
                Err(_) => ("follower".to_string(), -violation),
            };
            return Err(Error::Infeasible { constraint, slack });
        }
    };
    let s = stage(model, params, opts, &w)?;
    let mut sol = Solution::evaluate(model, params, s.menu, s.prices, Provenance::Oracle, opts.tol)?;
    sol.diagnostics.follower_iterations = Some(s.iterations);
    if !sol.feasible() {
        sol.diagnostics
            .notes
            .push(format!("penalized optimum violates {}", s.report.most_violated().0.name()));
    }
    sol.diagnostics.kkt = vec![
        leader_residual(model, params, opts, &w, b.w_max, s.profit)?,
        retailer1_residual(model, params, &sol, b.p1_max),
        retailer2_residual(model, params, &sol, b.p2_max)?,
    ];
    Ok(sol)
}

/// Largest first-order gain the manufacturer can get by moving the buy-back
/// prices in a screening-feasible direction. Directions are 16 evenly spaced
/// ones plus the two tangents of each active screening constraint.
fn leader_residual(
    model: ModelId,
    params: &ModelParams,
    opts: &SolveOptions,
    w: &[f64],
    w_max: f64,
    value: f64,
) -> Result<StageResidual> {
    let eval = |y: &[f64]| stage(model, params, opts, y);
    let penalized = opts.constraint_handling == ConstraintHandling::Penalty;
    let objective = |y: &[f64]| match eval(y) {
        Ok(s) if penalized => s.profit - opts.penalty_weight * s.report.violation(),
        Ok(s) => s.profit,
        Err(_) => f64::NAN,
    };
    let at = eval(w)?.report;
    let mut dirs = circle_directions(16);
    let mut active = Vec::new();
    for c in Constraint::ALL {
        if at.slack(c).abs() <= ACTIVE_SLACK {
            active.push(c.name().to_string());
            let g = central_gradient(|y| eval(y).map(|s| s.report.slack(c)).unwrap_or(f64::NAN), w, FD_STEP);
            let n = (g[0] * g[0] + g[1] * g[1]).sqrt();
            if n > 0.0 && n.is_finite() {
                dirs.push(vec![-g[1] / n, g[0] / n]);
                dirs.push(vec![g[1] / n, -g[0] / n]);
            }
        }
    }
    let names = ["w_h", "w_l"];
    for i in 0..2 {
        if w[i] <= 1e-7 * w_max {
            active.push(format!("{}_lower", names[i]));
        }
        if w[i] >= w_max * (1.0 - 1e-7) {
            active.push(format!("{}_upper", names[i]));
        }
    }
    let feasible = |y: &[f64]| {
        y.iter().all(|v| (0.0..=w_max).contains(v))
            && (penalized || eval(y).map(|s| s.report.feasible && s.min_demand >= 0.0).unwrap_or(false))
    };
    let h = ASCENT_STEP * w.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let (rate, _) = max_feasible_ascent(objective, feasible, w, &dirs, h);
    Ok(StageResidual {
        stage: "leader".into(),
        scaled_norm: scaled(rate, value),
        active,
    })
}

/// Projected gradient of retailer 1's expected profit in `(p1, tau_H, tau_L)`
/// at the equilibrium, with retailer 2's price held fixed.
fn retailer1_residual(model: ModelId, params: &ModelParams, sol: &Solution, p1_max: f64) -> StageResidual {
    let p2 = sol.prices.p2;
    let (w_h, w_l) = (sol.menu.w_h, sol.menu.w_l);
    let x = [sol.prices.p1, sol.menu.tau_h, sol.menu.tau_l];
    let f = |y: &[f64]| {
        let menu = ContractMenu::new(w_h, y[1], w_l, y[2]);
        let prices = PricePair { p1: y[0], p2 };
        crate::model::retailer1_profit(model, params, &menu, &prices).unwrap_or(f64::NAN)
    };
    let grad = central_gradient(f, &x, FD_STEP);
    let mut active = Vec::new();
    let upper = [p1_max, 1.0, 1.0];
    let names = ["p1", "tau_h", "tau_l"];
    for i in 0..3 {
        if x[i] <= 1e-9 {
            active.push(ActiveConstraint::lower_bound(format!("{}_lower", names[i]), 3, i));
        }
        if x[i] >= upper[i] - 1e-9 {
            active.push(ActiveConstraint::upper_bound(format!("{}_upper", names[i]), 3, i));
        }
    }
    let (res, used) = kkt_residual(&grad, &active);
    let value = retailer1_value(model, params, w_h, w_l, x[0], p2).0;
    StageResidual {
        stage: "retailer1".into(),
        scaled_norm: scaled(res, value),
        active: used,
    }
}

fn retailer2_residual(model: ModelId, params: &ModelParams, sol: &Solution, p2_max: f64) -> Result<StageResidual> {
    let p1 = sol.prices.p1;
    let p2 = sol.prices.p2.expect("competitive model has p2");
    let f = |y: &[f64]| retailer2_profit(model, params, &PricePair::pair(p1, y[0])).unwrap_or(f64::NAN);
    let grad = central_gradient(f, &[p2], FD_STEP);
    let mut active = Vec::new();
    if p2 <= 1e-9 {
        active.push(ActiveConstraint::lower_bound("p2_lower", 1, 0));
    }
    if p2 >= p2_max - 1e-9 {
        active.push(ActiveConstraint::upper_bound("p2_upper", 1, 0));
    }
    let (res, used) = kkt_residual(&grad, &active);
    Ok(StageResidual {
        stage: "retailer2".into(),
        scaled_norm: scaled(res, retailer2_profit(model, params, &sol.prices)?),
        active: used,
    })
}
