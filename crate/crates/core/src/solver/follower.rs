//! Retailer stage: retailer 1 picks its price and per-type recycling rates,
//! retailer 2 prices against it.

use crate::error::{Error, Result};
use crate::model::{retailer1_payoff, ContractMenu, PricePair};
use crate::params::{ModelId, ModelParams, TypeLabel};

use super::search::grid_golden_max;
use super::SolveOptions;

/// Relative gap below which the exact solve is attempted.
const EARLY_EXACT: f64 = 1e-3;

/// Retailer 2's unconstrained best reply, the stationary point of
/// `(p2 - p_m)(a - p2 + eps p1)`.
pub fn retailer2_best_response(p1: f64, params: &ModelParams) -> f64 {
    (params.a + params.p_m + params.eps * p1) / 2.0
}

/// Optimal recycling rate of a retailer-1 type facing demand `q1` and
/// buy-back price `w`, clamped to `[0, 1]`. In model V the recycling reward
/// adds `k` to the marginal value of collection.
pub fn retailer1_tau(model: ModelId, params: &ModelParams, q1: f64, w: f64, beta: f64) -> f64 {
    let k = if model.has_recycling_transfer() { params.k } else { 0.0 };
    ((q1 * (w - params.c) + k) / (2.0 * beta)).clamp(0.0, 1.0)
}

fn q1_at(params: &ModelParams, p1: f64, p2: Option<f64>) -> f64 {
    params.a - p1 + params.eps * p2.unwrap_or(0.0)
}

/// Retailer 1's expected profit at `p1` when each type collects optimally.
/// Returns `(value, tau_h, tau_l)`.
pub(crate) fn retailer1_value(
    model: ModelId,
    params: &ModelParams,
    w_h: f64,
    w_l: f64,
    p1: f64,
    p2: Option<f64>,
) -> (f64, f64, f64) {
    let q1 = q1_at(params, p1, p2);
    let mut value = 0.0;
    let mut taus = [0.0; 2];
    for (i, (t, w)) in [(TypeLabel::H, w_h), (TypeLabel::L, w_l)].into_iter().enumerate() {
        let beta = params.beta(t);
        let tau = retailer1_tau(model, params, q1, w, beta);
        taus[i] = tau;
        value += params.weight(t) * retailer1_payoff(model, params, q1, p1, beta, w, tau, tau);
    }
    (value, taus[0], taus[1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Retailer1Response {
    pub p1: f64,
    pub tau_h: f64,
    pub tau_l: f64,
    pub value: f64,
}

/// Joint `(p1, tau_H, tau_L)` best response of retailer 1. The rates are
/// solved per type in closed form; the price by grid and golden section
/// over prices in `[0, p1_max]` that leave its demand nonnegative.
pub fn retailer1_best_response(
    model: ModelId,
    params: &ModelParams,
    w_h: f64,
    w_l: f64,
    p2: Option<f64>,
    p1_max: f64,
    opts: &SolveOptions,
) -> Retailer1Response {
    let hi = p1_max.min(params.a + params.eps * p2.unwrap_or(0.0)).max(0.0);
    let (p1, value) = grid_golden_max(
        |p1| retailer1_value(model, params, w_h, w_l, p1, p2).0,
        0.0,
        hi,
        opts.price_grid,
        opts.price_xtol,
    );
    let (_, tau_h, tau_l) = retailer1_value(model, params, w_h, w_l, p1, p2);
    Retailer1Response { p1, tau_h, tau_l, value }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FollowerOutcome {
    pub prices: PricePair,
    pub tau_h: f64,
    pub tau_l: f64,
    pub iterations: usize,
    /// Undamped step length `max(|BR1 - p1|, |BR2 - p2|)` per iteration.
    pub gaps: Vec<f64>,
}

impl FollowerOutcome {
    /// The menu the leader offered, completed with the chosen rates.
    pub fn menu(&self, w_h: f64, w_l: f64) -> ContractMenu {
        ContractMenu::new(w_h, self.tau_h, w_l, self.tau_l)
    }
}

/// Retailer-stage equilibrium for the buy-back prices in `menu` (its rates
/// are ignored). Competitive models iterate damped simultaneous best
/// responses from the reference prices; otherwise retailer 1 responds once.
pub fn follower_equilibrium(
    menu: &ContractMenu,
    params: &ModelParams,
    model: ModelId,
    opts: &SolveOptions,
) -> Result<FollowerOutcome> {
    let b = opts.bounds(params)?;
    let (w_h, w_l) = (menu.w_h, menu.w_l);
    if !model.is_competitive() {
        let r = retailer1_best_response(model, params, w_h, w_l, None, b.p1_max, opts);
        return Ok(FollowerOutcome {
            prices: PricePair::single(r.p1),
            tau_h: r.tau_h,
            tau_l: r.tau_l,
            iterations: 1,
            gaps: Vec::new(),
        });
    }
    let d = opts.damping;
    let mut p1 = params.p1_ref.clamp(0.0, b.p1_max);
    let mut p2 = params.p2_ref.clamp(0.0, b.p2_max);
    let mut trace = vec![(p1, p2)];
    let mut gaps = Vec::new();
    for it in 1..=opts.max_iter {
        let r1 = retailer1_best_response(model, params, w_h, w_l, Some(p2), b.p1_max, opts).p1;
        let r2 = retailer2_best_response(p1, params).clamp(0.0, b.p2_max.min(params.a + params.eps * p1));
        let gap = (r1 - p1).abs().max((r2 - p2).abs());
        gaps.push(gap);
        p1 += d * (r1 - p1);
        p2 += d * (r2 - p2);
        trace.push((p1, p2));
        if !gap.is_finite() {
            break;
        }
        let scale = p1.abs().max(p2.abs()).max(1.0);
        let converged = gap <= opts.fixed_point_tol * scale;
        // Once the clamping pattern has likely settled, the exact solve can
        // end the iteration early; it is only accepted near the iterate.
        let exact = if converged || gap <= EARLY_EXACT * scale {
            let reach = (10.0 * gap).max(1e-6 * scale);
            exact_finish(model, params, w_h, w_l, p1, p2, b.p1_max, b.p2_max, reach, opts)
        } else {
            None
        };
        if converged || exact.is_some() {
            if let Some((e1, e2)) = exact {
                p1 = e1;
                p2 = e2;
            }
            let (_, tau_h, tau_l) = retailer1_value(model, params, w_h, w_l, p1, Some(p2));
            return Ok(FollowerOutcome {
                prices: PricePair::pair(p1, p2),
                tau_h,
                tau_l,
                iterations: it,
                gaps,
            });
        }
    }
    Err(Error::Divergence {
        iterations: gaps.len(),
        last_gap: gaps.last().copied().unwrap_or(f64::NAN),
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Regime {
    Zero,
    Interior,
    Full,
}

fn regime(model: ModelId, params: &ModelParams, q1: f64, w: f64, beta: f64) -> Regime {
    let k = if model.has_recycling_transfer() { params.k } else { 0.0 };
    let raw = (q1 * (w - params.c) + k) / (2.0 * beta);
    if raw <= 0.0 {
        Regime::Zero
    } else if raw >= 1.0 {
        Regime::Full
    } else {
        Regime::Interior
    }
}

/// Solves the two first-order conditions exactly once the iteration has
/// settled which rates are clamped, accepting the result only within
/// `reach` of the iterate. Inside a fixed clamping pattern
/// retailer 1's price condition is linear:
/// `(2 - S) p1 = (1 - S)(a + eps p2) + p_m - C`, with `S` and `C` summing
/// the interior and saturated types' contributions. Returns `None` when the
/// exact point leaves the pattern or the box, or is not retailer 1's global
/// best reply.
#[allow(clippy::too_many_arguments)]
fn exact_finish(
    model: ModelId,
    params: &ModelParams,
    w_h: f64,
    w_l: f64,
    p1: f64,
    p2: f64,
    p1_max: f64,
    p2_max: f64,
    reach: f64,
    opts: &SolveOptions,
) -> Option<(f64, f64)> {
    let k = if model.has_recycling_transfer() { params.k } else { 0.0 };
    let q1 = q1_at(params, p1, Some(p2));
    let types = [(TypeLabel::H, w_h), (TypeLabel::L, w_l)];
    let pattern: Vec<Regime> = types
        .iter()
        .map(|&(t, w)| regime(model, params, q1, w, params.beta(t)))
        .collect();
    let (mut s, mut c) = (0.0, 0.0);
    for (&(t, w), r) in types.iter().zip(&pattern) {
        let (m, u, beta) = (params.weight(t), w - params.c, params.beta(t));
        match r {
            Regime::Zero => {}
            Regime::Full => c += m * u,
            Regime::Interior => {
                s += m * u * u / (2.0 * beta);
                c += m * u * k / (2.0 * beta);
            }
        }
    }
    if !(2.0 - s > 0.0) {
        return None;
    }
    let (a, e, pm) = (params.a, params.eps, params.p_m);
    let a1 = ((1.0 - s) * a + pm - c) / (2.0 - s);
    let b1 = (1.0 - s) * e / (2.0 - s);
    let det = 1.0 - b1 * e / 2.0;
    if det.abs() < 1e-12 {
        return None;
    }
    let x1 = (a1 + b1 * (a + pm) / 2.0) / det;
    let x2 = (a + pm + e * x1) / 2.0;
    let q1x = q1_at(params, x1, Some(x2));
    let inside = x1 > 0.0 && x1 < p1_max && q1x > 0.0 && x2 > 0.0 && x2 < p2_max && a - x2 + e * x1 > 0.0;
    let same = types
        .iter()
        .zip(&pattern)
        .all(|(&(t, w), r)| regime(model, params, q1x, w, params.beta(t)) == *r);
    let close = (x1 - p1).abs().max((x2 - p2).abs()) <= reach;
    if !(inside && same && close) {
        return None;
    }
    let global = retailer1_best_response(model, params, w_h, w_l, Some(x2), p1_max, opts);
    let at_x = retailer1_value(model, params, w_h, w_l, x1, Some(x2)).0;
    if global.value > at_x + 1e-12 * at_x.abs().max(1.0) {
        return None;
    }
    Some((x1, x2))
}
