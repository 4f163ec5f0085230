//! Finite-difference stationarity and KKT residuals.

/// Central-difference gradient with per-coordinate step `h * max(1, |x_i|)`.
pub fn central_gradient<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = Vec::with_capacity(x.len());
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let step = h * x[i].abs().max(1.0);
        xp[i] = x[i] + step;
        let fp = f(&xp);
        xp[i] = x[i] - step;
        let fm = f(&xp);
        xp[i] = x[i];
        g.push((fp - fm) / (2.0 * step));
    }
    g
}

/// An inequality `g(x) >= 0` that is active at the point, with its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveConstraint {
    pub name: String,
    pub grad: Vec<f64>,
}

impl ActiveConstraint {
    pub fn lower_bound(name: impl Into<String>, dim: usize, i: usize) -> Self {
        let mut grad = vec![0.0; dim];
        grad[i] = 1.0;
        ActiveConstraint { name: name.into(), grad }
    }

    pub fn upper_bound(name: impl Into<String>, dim: usize, i: usize) -> Self {
        let mut grad = vec![0.0; dim];
        grad[i] = -1.0;
        ActiveConstraint { name: name.into(), grad }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves the small system `a x = b` by Gaussian elimination with partial
/// pivoting. `None` when (numerically) singular.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Smallest `|grad_obj + sum lambda_i grad_i|` over nonnegative multipliers
/// on subsets of the active constraints (maximization convention). Returns
/// the residual norm and the names of the constraints carrying multipliers.
pub fn kkt_residual(grad_obj: &[f64], active: &[ActiveConstraint]) -> (f64, Vec<String>) {
    let dim = grad_obj.len();
    let mut best = (norm(grad_obj), Vec::new());
    let m = active.len().min(16);
    for mask in 1u32..(1u32 << m) {
        let idx: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        if idx.len() > dim {
            continue;
        }
        // Normal equations: (A^T A) lambda = -A^T g.
        let gram: Vec<Vec<f64>> = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| dot(&active[i].grad, &active[j].grad)).collect())
            .collect();
        let rhs: Vec<f64> = idx.iter().map(|&i| -dot(&active[i].grad, grad_obj)).collect();
        let Some(lambda) = solve_dense(gram, rhs) else {
            continue;
        };
        if lambda.iter().any(|l| *l < 0.0) {
            continue;
        }
        let mut r = grad_obj.to_vec();
        for (l, &i) in lambda.iter().zip(&idx) {
            for d in 0..dim {
                r[d] += l * active[i].grad[d];
            }
        }
        let rn = norm(&r);
        if rn < best.0 {
            best = (rn, idx.iter().map(|&i| active[i].name.clone()).collect());
        }
    }
    best
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Divides a residual by `max(1, |objective|)`.
pub fn scaled(residual: f64, objective: f64) -> f64 {
    residual / objective.abs().max(1.0)
}

/// `n` unit directions evenly spaced on the circle, starting at `+x`.
pub fn circle_directions(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            vec![t.cos(), t.sin()]
        })
        .collect()
}

/// Largest first-order ascent rate of `f` from `x` over the directions in
/// `dirs` whose two probe points `x + h d`, `x + 2 h d` pass `feasible`.
///
/// Rates use the one-sided second-order difference
/// `(-3 f(x) + 4 f(x + h d) - f(x + 2 h d)) / (2 h)`, which is exact on
/// quadratic pieces and stays valid when `x` sits on a kink. Returns the
/// rate (floored at 0) and the number of directions that were feasible.
pub fn max_feasible_ascent<F, G>(mut f: F, mut feasible: G, x: &[f64], dirs: &[Vec<f64>], h: f64) -> (f64, usize)
where
    F: FnMut(&[f64]) -> f64,
    G: FnMut(&[f64]) -> bool,
{
    let f0 = f(x);
    let mut worst: f64 = 0.0;
    let mut used = 0;
    for d in dirs {
        let at = |t: f64| -> Vec<f64> { x.iter().zip(d).map(|(xi, di)| xi + t * di).collect() };
        let (x1, x2) = (at(h), at(2.0 * h));
        if !feasible(&x1) || !feasible(&x2) {
            continue;
        }
        used += 1;
        let rate = (-3.0 * f0 + 4.0 * f(&x1) - f(&x2)) / (2.0 * h);
        if rate.is_nan() {
            return (f64::NAN, used);
        }
        worst = worst.max(rate);
    }
    (worst, used)
}
