//! Centralized models: the chain picks `(p1, tau_H, tau_L)`, then the
//! cheapest buy-back prices that keep the menu screening-feasible.

use crate::constraints::Constraint;
use crate::error::{Error, Result};
use crate::model::{centralized_chain_profit, ContractMenu, PricePair};
use crate::params::{ModelId, ModelParams, TypeLabel};
use crate::solution::{Provenance, Solution, StageResidual};

use super::kkt::{central_gradient, kkt_residual, scaled, solve_dense, ActiveConstraint};
use super::search::{grid_refine_max, GridOutcome, GridSpec, Score};
use super::SolveOptions;

const FD_STEP: f64 = 1e-6;
const ACTIVE_SLACK: f64 = 1e-6;
// Objective and constraints are quadratic, so central differences with a
// coarse step carry no truncation error.
const POLISH_STEP: f64 = 1e-3;
const NEWTON_ITERS: usize = 60;
const MARGIN_TOL: f64 = 1e-11;

/// Names of the entries of [`margins`].
const MARGIN_NAMES: [&str; 14] = [
    "ir_h",
    "ir_l",
    "ic_l",
    "ic_l_ir_h",
    "ic_h",
    "ic_h_ir_l",
    "rate_order",
    "demand",
    "p1_lower",
    "p1_upper",
    "tau_h_lower",
    "tau_h_upper",
    "tau_l_lower",
    "tau_l_upper",
];
const SUPPORT: usize = 8;

/// Every inequality of the centralized problem in `x = (p1, tau_H, tau_L)`,
/// each feasible when `>= 0`. The first seven hold exactly when some
/// buy-back prices in `[0, w_max]` satisfy IR and IC: with
/// `u_t = q1 tau_t (w_t - c)` boxed in `[lo_t, hi_t]` and bounded below by
/// IR at `r_t`, IC asks `u_L - u_H` to meet `[beta_L D, beta_H D]` where
/// `D = tau_L^2 - tau_H^2`.
fn margins(params: &ModelParams, x: &[f64], w_max: f64, p1_max: f64) -> [f64; 14] {
    let (p1, th, tl) = (x[0], x[1], x[2]);
    let q1 = params.a - p1;
    let m = q1 * (p1 - params.p_m);
    let (bh, bl) = (params.beta_h, params.beta_l);
    let d = tl * tl - th * th;
    let hi = |t: f64| q1 * t * (w_max - params.c);
    let lo = |t: f64| -q1 * t * params.c;
    let r_h = params.pi_r0 - m + bh * th * th;
    let r_l = params.pi_r0 - m + bl * tl * tl;
    [
        hi(th) - r_h,
        hi(tl) - r_l,
        hi(tl) - lo(th) - bl * d,
        hi(tl) - r_h - bl * d,
        bh * d + hi(th) - lo(tl),
        bh * d + hi(th) - r_l,
        tl - th,
        q1,
        p1,
        p1_max - p1,
        th,
        1.0 - th,
        tl,
        1.0 - tl,
    ]
}

/// Newton's method on the KKT system of `max f` with the constraints in
/// `active` held as equalities. `None` unless the iteration settles.
fn newton_kkt<F, G>(f: &F, g: &G, active: &[usize], x0: &[f64; 3]) -> Option<[f64; 3]>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> [f64; 14],
{
    let k = active.len();
    let mut x = *x0;
    let mut lam = vec![0.0; k];
    for _ in 0..NEWTON_ITERS {
        let lagrangian = |y: &[f64]| {
            let gy = g(y);
            f(y) + active.iter().zip(&lam).map(|(&i, l)| l * gy[i]).sum::<f64>()
        };
        let grad = central_gradient(lagrangian, &x, POLISH_STEP);
        let cons: Vec<Vec<f64>> = active
            .iter()
            .map(|&i| central_gradient(|y| g(y)[i], &x, POLISH_STEP))
            .collect();
        let n = 3 + k;
        let mut jac = vec![vec![0.0; n]; n];
        let mut y = x;
        for j in 0..3 {
            let step = POLISH_STEP * x[j].abs().max(1.0);
            y[j] = x[j] + step;
            let gp = central_gradient(lagrangian, &y, POLISH_STEP);
            y[j] = x[j] - step;
            let gm = central_gradient(lagrangian, &y, POLISH_STEP);
            y[j] = x[j];
            for i in 0..3 {
                jac[i][j] = (gp[i] - gm[i]) / (2.0 * step);
            }
        }
        let gx = g(&x);
        let mut rhs = vec![0.0; n];
        for i in 0..3 {
            rhs[i] = -grad[i];
        }
        for (r, &c) in active.iter().enumerate() {
            for i in 0..3 {
                jac[i][3 + r] = cons[r][i];
                jac[3 + r][i] = cons[r][i];
            }
            rhs[3 + r] = -gx[c];
        }
        let delta = solve_dense(jac, rhs)?;
        for i in 0..3 {
            x[i] += delta[i];
        }
        for r in 0..k {
            lam[r] += delta[3 + r];
        }
        if !x.iter().all(|v| v.is_finite()) {
            return None;
        }
        let size = delta[..3].iter().map(|d| d.abs()).fold(0.0, f64::max);
        if size <= 1e-13 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
            return Some(x);
        }
    }
    None
}

/// Improves a grid optimum by solving the KKT system for every set of at
/// most three constraints held active, keeping the best feasible result.
/// The grid stalls where the optimum sits on a curved boundary.
fn polish<F, G>(f: &F, g: &G, x0: [f64; 3], upper: &[f64; 3]) -> [f64; 3]
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> [f64; 14],
{
    let mut best = (f(&x0), x0);
    let n = MARGIN_NAMES.len();
    let mut sets: Vec<Vec<usize>> = vec![vec![]];
    for i in 0..n {
        sets.push(vec![i]);
        for j in i + 1..n {
            sets.push(vec![i, j]);
            for k in j + 1..n {
                sets.push(vec![i, j, k]);
            }
        }
    }
    for set in &sets {
        let Some(mut x) = newton_kkt(f, g, set, &x0) else { continue };
        for i in 0..3 {
            x[i] = x[i].clamp(0.0, upper[i]);
        }
        let scale = 1.0 + best.0.abs();
        if g(&x).iter().any(|m| *m < -MARGIN_TOL * scale) {
            continue;
        }
        let v = f(&x);
        if v.is_finite() && v > best.0 {
            best = (v, x);
        }
    }
    best.1
}

/// Half-plane `a . u >= b` in the transfer variables `u_t = q1 tau_t (w_t - c)`.
#[derive(Debug, Clone, Copy)]
struct HalfPlane {
    a: [f64; 2],
    b: f64,
}

impl HalfPlane {
    fn violation(&self, u: [f64; 2]) -> f64 {
        (self.b - self.a[0] * u[0] - self.a[1] * u[1]).max(0.0)
    }
}

fn buyback_halfplanes(params: &ModelParams, p1: f64, tau: [f64; 2], w_max: f64) -> (Vec<HalfPlane>, f64) {
    let q1 = params.a - p1;
    let m = q1 * (p1 - params.p_m);
    let (bh, bl) = (params.beta_h, params.beta_l);
    let (th2, tl2) = (tau[0] * tau[0], tau[1] * tau[1]);
    let mut hp = vec![
        HalfPlane { a: [1.0, 0.0], b: params.pi_r0 - m + bh * th2 },
        HalfPlane { a: [0.0, 1.0], b: params.pi_r0 - m + bl * tl2 },
        HalfPlane { a: [1.0, -1.0], b: bh * (th2 - tl2) },
        HalfPlane { a: [-1.0, 1.0], b: bl * (tl2 - th2) },
    ];
    for i in 0..2 {
        let (x, y) = (q1 * tau[i] * (0.0 - params.c), q1 * tau[i] * (w_max - params.c));
        let (lo, hi) = (x.min(y), x.max(y));
        let mut a = [0.0; 2];
        a[i] = 1.0;
        hp.push(HalfPlane { a, b: lo });
        a[i] = -1.0;
        hp.push(HalfPlane { a, b: -hi });
    }
    (hp, q1)
}

fn intersect(h: &HalfPlane, g: &HalfPlane) -> Option<[f64; 2]> {
    let det = h.a[0] * g.a[1] - h.a[1] * g.a[0];
    if det.abs() < 1e-14 {
        return None;
    }
    Some([
        (h.b * g.a[1] - h.a[1] * g.b) / det,
        (h.a[0] * g.b - h.b * g.a[0]) / det,
    ])
}

enum Lp {
    Optimal([f64; 2]),
    Infeasible { violation: f64, worst: usize },
}

/// Minimizes the expected transfer over the feasible polygon by enumerating
/// its vertices. Ties go to the lexicographically smallest `u`.
fn solve_buyback_lp(hp: &[HalfPlane], weights: [f64; 2]) -> Lp {
    let feas_tol = 1e-10;
    let mut best: Option<([f64; 2], f64)> = None;
    let mut least: Option<(f64, usize)> = None;
    for i in 0..hp.len() {
        for j in i + 1..hp.len() {
            let Some(u) = intersect(&hp[i], &hp[j]) else { continue };
            let (worst, viol) = hp
                .iter()
                .enumerate()
                .map(|(k, h)| (k, h.violation(u) / (1.0 + h.b.abs())))
                .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if viol <= feas_tol {
                let obj = weights[0] * u[0] + weights[1] * u[1];
                let better = match &best {
                    None => true,
                    Some((bu, bo)) => {
                        obj < *bo - 1e-12 * (1.0 + bo.abs())
                            || (obj <= *bo + 1e-12 * (1.0 + bo.abs()) && (u[0], u[1]) < (bu[0], bu[1]))
                    }
                };
                if better {
                    best = Some((u, obj));
                }
            } else if least.map_or(true, |l| viol < l.0) {
                least = Some((viol, worst));
            }
        }
    }
    match best {
        Some((u, _)) => Lp::Optimal(u),
        None => {
            let (violation, worst) = least.unwrap_or((f64::INFINITY, 0));
            Lp::Infeasible { violation, worst }
        }
    }
}

fn constraint_of(index: usize) -> &'static str {
    match index {
        0 => Constraint::IrH.name(),
        1 => Constraint::IrL.name(),
        2 => Constraint::IcH.name(),
        3 => Constraint::IcL.name(),
        4 => "w_h_lower",
        5 => "w_h_upper",
        6 => "w_l_lower",
        _ => "w_l_upper",
    }
}

/// Cheapest screening-feasible buy-back prices `(w_H, w_L)` supporting the
/// quantities `(p1, tau_H, tau_L)`. A zero rate makes its price irrelevant;
/// it is then reported as 0.
pub fn buyback_prices(params: &ModelParams, p1: f64, tau_h: f64, tau_l: f64, w_max: f64) -> Result<(f64, f64)> {
    let (hp, q1) = buyback_halfplanes(params, p1, [tau_h, tau_l], w_max);
    match solve_buyback_lp(&hp, [params.weight(TypeLabel::H), params.weight(TypeLabel::L)]) {
        Lp::Optimal(u) => {
            let w = |ut: f64, tau: f64| {
                let s = q1 * tau;
                if s.abs() < 1e-14 {
                    0.0
                } else {
                    params.c + ut / s
                }
            };
            Ok((w(u[0], tau_h), w(u[1], tau_l)))
        }
        Lp::Infeasible { violation, worst } => Err(Error::Infeasible {
            constraint: constraint_of(worst).to_string(),
            slack: -violation,
        }),
    }
}

/// Maximizes centralized chain profit over `(p1, tau_H, tau_L)` among
/// quantities with nonnegative demand that some buy-back menu can support,
/// then prices the menu.
pub fn centralized_optimize(model: ModelId, params: &ModelParams, opts: &SolveOptions) -> Result<Solution> {
    if !model.is_centralized() {
        return Err(Error::WrongModel {
            op: "centralized_optimize",
            model,
        });
    }
    params.validate()?;
    let b = opts.bounds(params)?;
    let weights = [params.weight(TypeLabel::H), params.weight(TypeLabel::L)];
    let objective = |x: &[f64]| centralized_chain_profit(model, params, x[0], x[1], x[2]).unwrap_or(f64::NAN);
    let g = |x: &[f64]| margins(params, x, b.w_max, b.p1_max);
    let score = |x: &[f64]| {
        let worst = g(x)[..SUPPORT].iter().fold(0.0f64, |acc, m| acc.max(-m));
        if worst > 0.0 {
            return Score::Infeasible(worst);
        }
        match objective(x) {
            v if v.is_finite() => Score::Feasible(v),
            _ => Score::Infeasible(f64::INFINITY),
        }
    };
    let lower = [0.0, 0.0, 0.0];
    let upper = [b.p1_max, 1.0, 1.0];
    // The chain objective is evaluated exactly, so no tie tolerance.
    let spec = GridSpec {
        tie_tol: 0.0,
        ..opts.grid_spec()
    };
    let x = match grid_refine_max(score, &lower, &upper, &spec) {
        GridOutcome::Found { x, .. } => polish(&objective, &g, [x[0], x[1], x[2]], &upper),
        GridOutcome::Infeasible { x, .. } => {
            let (hp, _) = buyback_halfplanes(params, x[0], [x[1], x[2]], b.w_max);
            return Err(match solve_buyback_lp(&hp, weights) {
                Lp::Infeasible { violation, worst } => Error::Infeasible {
                    constraint: constraint_of(worst).to_string(),
                    slack: -violation,
                },
                Lp::Optimal(_) => Error::Infeasible {
                    constraint: "unknown".into(),
                    slack: f64::NAN,
                },
            });
        }
    };
    let (p1, tau_h, tau_l) = (x[0], x[1], x[2]);
    let (w_h, w_l) = buyback_prices(params, p1, tau_h, tau_l, b.w_max)?;
    let menu = ContractMenu::new(w_h, tau_h, w_l, tau_l);
    let mut sol = Solution::evaluate(model, params, menu, PricePair::single(p1), Provenance::Oracle, opts.tol)?;
    sol.diagnostics.kkt.push(chain_stage_residual(model, params, &sol, b.w_max, b.p1_max));
    Ok(sol)
}

/// Stationarity of the chain objective in `(p1, tau_H, tau_L)` against the
/// active constraints of the problem with the buy-back prices eliminated.
fn chain_stage_residual(model: ModelId, params: &ModelParams, sol: &Solution, w_max: f64, p1_max: f64) -> StageResidual {
    let x = [sol.prices.p1, sol.menu.tau_h, sol.menu.tau_l];
    let objective = |y: &[f64]| centralized_chain_profit(model, params, y[0], y[1], y[2]).unwrap_or(f64::NAN);
    let grad = central_gradient(objective, &x, FD_STEP);
    let value = objective(&x);
    let g = |y: &[f64]| margins(params, y, w_max, p1_max);
    let at = g(&x);
    let tol = ACTIVE_SLACK * value.abs().max(1.0);
    let active: Vec<ActiveConstraint> = (0..MARGIN_NAMES.len())
        .filter(|&i| at[i] <= tol)
        .map(|i| ActiveConstraint {
            name: MARGIN_NAMES[i].to_string(),
            grad: central_gradient(|y| g(y)[i], &x, POLISH_STEP),
        })
        .collect();
    let (res, used) = kkt_residual(&grad, &active);
    StageResidual {
        stage: "chain".into(),
        scaled_norm: scaled(res, value),
        active: used,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn study() -> ModelParams {
        ModelParams::default()
    }

    fn fast() -> SolveOptions {
        SolveOptions {
            grid: 11,
            refine_grid: 7,
            ..Default::default()
        }
    }

    #[test]
    fn wrong_model_rejected() {
        assert!(matches!(
            centralized_optimize(ModelId::III, &study(), &fast()),
            Err(Error::WrongModel { .. })
        ));
    }

    #[test]
    fn model_two_without_emission_is_model_one() {
        let p = ModelParams { f: 0.0, ..study() };
        let one = centralized_optimize(ModelId::I, &p, &fast()).unwrap();
        let two = centralized_optimize(ModelId::II, &p, &fast()).unwrap();
        for ((n, a), (_, b)) in one.comparable_values().iter().zip(two.comparable_values()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-9);
            let _ = n;
        }
    }

    #[test]
    fn study_point_model_one_prices_like_a_monopolist() {
        // Recycling only costs the chain here, so no collection and the
        // monopoly price (a + c_m) / 2.
        let s = centralized_optimize(ModelId::I, &study(), &fast()).unwrap();
        assert_abs_diff_eq!(s.prices.p1, 2.5, epsilon = 1e-8);
        assert_eq!((s.menu.tau_h, s.menu.tau_l), (0.0, 0.0));
        assert!(s.feasible());
    }

    #[test]
    fn single_type_agrees_with_brute_force() {
        // Profitable collection: c_m large against recycling costs.
        let p = ModelParams {
            mu: 1.0,
            c_m: 12.0,
            a: 20.0,
            beta_h: 30.0,
            beta_l: 10.0,
            ..study()
        };
        let s = centralized_optimize(ModelId::I, &p, &fast()).unwrap();
        let unit = p.c_d + p.c_r - p.c_m + p.c;
        let mut best = f64::NEG_INFINITY;
        let n = 400;
        for i in 0..=n {
            let p1 = 20.0 * i as f64 / n as f64;
            let q1 = p.a - p1;
            let tau = (-q1 * unit / (2.0 * p.beta_h)).clamp(0.0, 1.0);
            best = best.max(q1 * (p1 - tau * unit - p.c_m) - p.beta_h * tau * tau);
        }
        assert!(s.profits.chain >= best - 1e-9);
        assert!(s.profits.chain <= best + 0.01);
        let q1 = p.a - s.prices.p1;
        let tau = (-q1 * unit / (2.0 * p.beta_h)).clamp(0.0, 1.0);
        assert_abs_diff_eq!(s.menu.tau_h, tau, epsilon = 1e-6);
        assert!(s.feasible());
    }

    #[test]
    fn large_reservation_profit_is_infeasible() {
        let p = ModelParams { pi_r0: 1e4, ..study() };
        let Err(Error::Infeasible { constraint, slack }) = centralized_optimize(ModelId::I, &p, &fast()) else {
            panic!("expected infeasibility")
        };
        assert!(constraint.starts_with("ir_"), "{constraint}");
        assert!(slack < 0.0);
    }

    #[test]
    fn buyback_prices_bind_ir_of_the_low_type() {
        let p = ModelParams { pi_r0: 0.5, ..study() };
        let (w_h, w_l) = buyback_prices(&p, 2.0, 0.2, 0.3, 28.8).unwrap();
        let menu = ContractMenu::new(w_h, 0.2, w_l, 0.3);
        let r = crate::constraints::screening_check(&menu, &p, &PricePair::single(2.0), ModelId::I, 1e-6).unwrap();
        assert!(r.feasible, "{r:?}");
        assert!(r.binding.iter().any(|c| matches!(c, Constraint::IrL | Constraint::IrH)));
    }

    #[test]
    fn incentive_compatibility_needs_monotone_rates() {
        // Summing the two IC rows: (beta_H - beta_L)(tau_H^2 - tau_L^2) <= 0.
        let Err(Error::Infeasible { constraint, .. }) = buyback_prices(&study(), 2.0, 0.3, 0.2, 28.8) else {
            panic!("expected infeasibility")
        };
        assert!(constraint.starts_with("ic_"));
    }

    #[test]
    fn zero_rate_reports_zero_price() {
        let (w_h, w_l) = buyback_prices(&study(), 2.5, 0.0, 0.0, 28.8).unwrap();
        assert_eq!((w_h, w_l), (0.0, 0.0));
    }

    proptest::proptest! {
        #[test]
        fn margins_agree_with_the_buyback_lp(
            p1 in 0.0f64..5.0,
            th in 0.0f64..1.0,
            tl in 0.0f64..1.0,
            pi_r0 in 0.0f64..2.0,
            w_max in 0.0f64..10.0,
        ) {
            let p = ModelParams { pi_r0, ..study() };
            let x = [p1, th, tl];
            let m = margins(&p, &x, w_max, 10.0);
            let least = m[..SUPPORT].iter().copied().fold(f64::INFINITY, f64::min);
            proptest::prop_assume!(least.abs() > 1e-8);
            let lp = buyback_prices(&p, p1, th, tl, w_max).is_ok();
            proptest::prop_assert_eq!(lp, least > 0.0, "margins {:?}", m);
        }
    }

    #[test]
    fn curved_boundary_optima_are_stationary() {
        let opts = SolveOptions::default();
        for p in crate::analysis::random_params(crate::analysis::DEFAULT_SEED, 10) {
            let Ok(s) = centralized_optimize(ModelId::I, &p, &opts) else { continue };
            let chain = &s.diagnostics.kkt[0];
            assert!(chain.scaled_norm < 1e-6, "{chain:?}");
            let b = opts.bounds(&p).unwrap();
            let x = [s.prices.p1, s.menu.tau_h, s.menu.tau_l];
            let f = |y: &[f64]| centralized_chain_profit(ModelId::I, &p, y[0], y[1], y[2]).unwrap();
            for h in [1e-3, 1e-5] {
                for i in -2i32..=2 {
                    for j in -2i32..=2 {
                        for k in -2i32..=2 {
                            let y = [x[0] + h * i as f64, x[1] + h * j as f64, x[2] + h * k as f64];
                            let inside = y[0] >= 0.0 && y[0] <= b.p1_max && (0.0..=1.0).contains(&y[1]) && (0.0..=1.0).contains(&y[2]);
                            if inside && buyback_prices(&p, y[0], y[1], y[2], b.w_max).is_ok() {
                                assert!(f(&y) <= s.profits.chain + 1e-9, "{y:?} beats {x:?}");
                            }
                        }
                    }
                }
            }
        }
    }
}
