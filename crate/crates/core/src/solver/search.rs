//! Derivative-free maximizers: 1-D grid + golden section, n-D shrinking grid.

use rayon::prelude::*;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of `f` on `[lo, hi]`.
/// Stops when the bracket is narrower than `xtol`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut it = 0;
    while b - a > xtol && it < max_iter {
        // `>=` keeps the left point on ties, so flat regions resolve toward `lo`.
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        it += 1;
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Successive parabolic steps through `x - h, x, x + h`. A step is kept
/// unless it is worse than the incumbent by more than rounding, so kinks
/// never make things worse while flat-topped quadratics still resolve below
/// the square root of machine precision.
pub fn parabolic_polish<F: FnMut(f64) -> f64>(mut f: F, x: f64, fx: f64, lo: f64, hi: f64, steps: &[f64]) -> (f64, f64) {
    let (mut x, mut fx) = (x, fx);
    for &h in steps {
        let (xl, xr) = (x - h, x + h);
        if xl < lo || xr > hi {
            continue;
        }
        let (fl, fr) = (f(xl), f(xr));
        let curv = fl - 2.0 * fx + fr;
        if !(curv < 0.0) {
            continue;
        }
        let cand = x - 0.5 * h * (fr - fl) / curv;
        if !(cand >= lo && cand <= hi) || (cand - x).abs() > h {
            continue;
        }
        let fc = f(cand);
        if fc >= fx - 4.0 * f64::EPSILON * fx.abs().max(1.0) {
            x = cand;
            fx = fc;
        }
    }
    (x, fx)
}

/// Coarse grid of `n` points, golden section inside the bracket around the
/// best grid point, then a parabolic polish.
pub fn grid_golden_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, n: usize, xtol: f64) -> (f64, f64) {
    let n = n.max(3);
    let step = (hi - lo) / (n - 1) as f64;
    let mut best = (lo, f(lo));
    for i in 1..n {
        let x = if i == n - 1 { hi } else { lo + step * i as f64 };
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let a = (best.0 - step).max(lo);
    let b = (best.0 + step).min(hi);
    let (gx, gv) = golden_section_max(&mut f, a, b, xtol.max(1e-9 * step), 200);
    let (x, v) = if gv > best.1 { (gx, gv) } else { best };
    let scale = step.max(1e-12);
    parabolic_polish(&mut f, x, v, lo, hi, &[1e-3 * scale, 1e-3 * scale])
}

/// Result of scoring one candidate of an n-D search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Score {
    Feasible(f64),
    /// Infeasible, with a nonnegative violation measure.
    Infeasible(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridOutcome {
    Found { x: Vec<f64>, value: f64, evaluations: usize },
    /// No feasible point; `x` is the least-violating candidate seen.
    Infeasible { x: Vec<f64>, violation: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Points per variable on the first pass.
    pub resolution: usize,
    /// Points per variable on each refinement pass.
    pub refine_resolution: usize,
    pub refine_iters: usize,
    /// Refinement stops once every box side is below this.
    pub xtol: f64,
    /// Values within `tie_tol * max(1, |best|)` of the incumbent count as
    /// ties, so evaluation noise cannot override the lexicographic rule.
    pub tie_tol: f64,
}

fn lattice(lower: &[f64], upper: &[f64], n: usize) -> Vec<Vec<f64>> {
    let dim = lower.len();
    let total = n.pow(dim as u32);
    let mut pts = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let x: Vec<f64> = (0..dim)
            .map(|d| {
                if n == 1 || idx[d] == 0 {
                    lower[d]
                } else if idx[d] == n - 1 {
                    upper[d]
                } else {
                    lower[d] + (upper[d] - lower[d]) * idx[d] as f64 / (n - 1) as f64
                }
            })
            .collect();
        pts.push(x);
        // Last coordinate varies fastest: lexicographic order.
        for d in (0..dim).rev() {
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
        }
    }
    pts
}

/// Maximizes over a box by a uniform grid followed by repeated grids on a
/// shrinking box around the incumbent.
///
/// Candidates are scored in parallel; the reduction scans them in
/// lexicographic order and only replaces the incumbent on a value better by
/// more than the tie tolerance, so ties go to the lexicographically smallest
/// point and the result does not depend on the thread schedule.
pub fn grid_refine_max<F>(f: F, lower: &[f64], upper: &[f64], spec: &GridSpec) -> GridOutcome
where
    F: Fn(&[f64]) -> Score + Sync,
{
    assert_eq!(lower.len(), upper.len());
    let dim = lower.len();
    let mut lo = lower.to_vec();
    let mut hi = upper.to_vec();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut least_bad: Option<(Vec<f64>, f64)> = None;
    let mut evaluations = 0;
    let mut n = spec.resolution.max(2);
    for pass in 0..=spec.refine_iters {
        let pts = lattice(&lo, &hi, n);
        let scores: Vec<Score> = pts.par_iter().map(|x| f(x)).collect();
        evaluations += pts.len();
        for (x, s) in pts.iter().zip(scores) {
            match s {
                Score::Feasible(v) => {
                    if best.as_ref().map_or(!v.is_nan(), |b| v > b.1 + spec.tie_tol * b.1.abs().max(1.0)) {
                        best = Some((x.clone(), v));
                    }
                }
                Score::Infeasible(viol) => {
                    if best.is_none() && least_bad.as_ref().map_or(true, |b| viol < b.1) {
                        least_bad = Some((x.clone(), viol));
                    }
                }
            }
        }
        let Some((bx, _)) = best.as_ref() else {
            break;
        };
        if pass == spec.refine_iters {
            break;
        }
        let mut done = true;
        for d in 0..dim {
            let cell = (hi[d] - lo[d]) / (n - 1) as f64;
            let half = 2.0 * cell;
            lo[d] = (bx[d] - half).max(lower[d]);
            hi[d] = (bx[d] + half).min(upper[d]);
            if hi[d] - lo[d] > spec.xtol {
                done = false;
            }
        }
        if done {
            break;
        }
        n = spec.refine_resolution.max(3);
    }
    match best {
        Some((x, value)) => GridOutcome::Found { x, value, evaluations },
        None => {
            let (x, violation) = least_bad.unwrap_or((lower.to_vec(), f64::INFINITY));
            GridOutcome::Infeasible { x, violation }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_quadratic_peak() {
        let (x, v) = golden_section_max(|x| -(x - 0.3) * (x - 0.3) + 2.0, -1.0, 2.0, 1e-9, 200);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn golden_flat_region_resolves_left() {
        let (x, _) = golden_section_max(|x| if x < 1.0 { 0.0 } else { -(x - 1.0) }, 0.0, 3.0, 1e-10, 200);
        assert!(x < 1.0);
    }

    #[test]
    fn polish_lands_on_exact_vertex() {
        let f = |x: f64| -3.0 * (x - 1.234_567_89) * (x - 1.234_567_89);
        let (x, _) = grid_golden_max(f, 0.0, 5.0, 20, 1e-9);
        assert!((x - 1.234_567_89).abs() < 1e-11, "{x}");
    }

    #[test]
    fn grid_golden_handles_bimodal() {
        let f = |x: f64| (-(x - 0.5).powi(2) * 40.0).exp() + 2.0 * (-(x - 3.5).powi(2) * 40.0).exp();
        let (x, _) = grid_golden_max(f, 0.0, 4.0, 40, 1e-9);
        assert!((x - 3.5).abs() < 1e-6);
    }

    #[test]
    fn grid_refine_constrained_quadratic() {
        // max -(x-2)^2 - (y-1)^2 subject to x + y <= 2: optimum (1.5, 0.5).
        let spec = GridSpec {
            resolution: 21,
            refine_resolution: 9,
            refine_iters: 60,
            xtol: 1e-11,
            tie_tol: 0.0,
        };
        let out = grid_refine_max(
            |x| {
                let g = 2.0 - x[0] - x[1];
                if g >= 0.0 {
                    Score::Feasible(-(x[0] - 2.0).powi(2) - (x[1] - 1.0).powi(2))
                } else {
                    Score::Infeasible(-g)
                }
            },
            &[0.0, 0.0],
            &[4.0, 4.0],
            &spec,
        );
        match out {
            GridOutcome::Found { x, .. } => {
                assert!((x[0] - 1.5).abs() < 1e-6 && (x[1] - 0.5).abs() < 1e-6, "{x:?}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_refine_ties_choose_smallest_point() {
        let spec = GridSpec {
            resolution: 11,
            refine_resolution: 5,
            refine_iters: 5,
            xtol: 1e-9,
            tie_tol: 0.0,
        };
        let out = grid_refine_max(|_| Score::Feasible(1.0), &[0.0, 0.0], &[1.0, 1.0], &spec);
        assert!(matches!(out, GridOutcome::Found { ref x, .. } if x == &vec![0.0, 0.0]));
    }

    #[test]
    fn grid_refine_reports_least_violation() {
        let spec = GridSpec {
            resolution: 11,
            refine_resolution: 5,
            refine_iters: 3,
            xtol: 1e-9,
            tie_tol: 0.0,
        };
        let out = grid_refine_max(|x| Score::Infeasible(1.0 + (x[0] - 0.7).abs()), &[0.0], &[1.0], &spec);
        match out {
            GridOutcome::Infeasible { x, violation } => {
                assert!((x[0] - 0.7).abs() < 1e-12);
                assert!((violation - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }
}
