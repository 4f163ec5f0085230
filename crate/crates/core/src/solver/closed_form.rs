//! Literal evaluation of the published solution formulas.
//!
//! Nothing here is simplified or corrected: several of these expressions are
//! dimensionally inconsistent or do not reduce to each other when the policy
//! strengths vanish. They are evaluated exactly as printed and compared
//! against the numerical oracle by [`crate::solver::cross_check`].

use crate::error::{Error, Result};
use crate::model::{ContractMenu, PricePair};
use crate::params::{ModelId, ModelParams};
use crate::solution::{Provenance, Solution};

fn div(num: f64, den: f64, variable: &'static str, expression: &'static str) -> Result<f64> {
    if den.abs() < 1e-12 || !den.is_finite() {
        Err(Error::Singular { variable, expression })
    } else {
        Ok(num / den)
    }
}

/// Per-variable closed-form values; each carries its own singularity status.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormValues {
    pub model: ModelId,
    pub w_h: Result<f64>,
    pub w_l: Result<f64>,
    pub tau_h: Result<f64>,
    pub tau_l: Result<f64>,
    pub p1: Result<f64>,
    /// `None` for the centralized models.
    pub p2: Option<Result<f64>>,
}

impl ClosedFormValues {
    pub fn entries(&self) -> Vec<(&'static str, Result<f64>)> {
        let mut v = vec![
            ("w_h", self.w_h.clone()),
            ("w_l", self.w_l.clone()),
            ("tau_h", self.tau_h.clone()),
            ("tau_l", self.tau_l.clone()),
            ("p1", self.p1.clone()),
        ];
        if let Some(p2) = &self.p2 {
            v.push(("p2", p2.clone()));
        }
        v
    }

    /// First singular entry, if any.
    pub fn first_error(&self) -> Option<Error> {
        self.entries().into_iter().find_map(|(_, r)| r.err())
    }
}

/// Shorthand for the parameter combinations that recur in the formulas.
struct Terms {
    /// `p_m + c_m - c_r - c - c_d`
    x1: f64,
    /// `beta_L - mu beta_H`
    gap: f64,
    /// `a - p1`
    qa: f64,
}

fn centralized_terms(p: &ModelParams) -> Terms {
    Terms {
        x1: p.p_m + p.c_m - p.c_r - p.c - p.c_d,
        gap: p.beta_l - p.mu * p.beta_h,
        qa: p.a - p.p1_ref,
    }
}

fn centralized(model: ModelId, p: &ModelParams) -> ClosedFormValues {
    let t = centralized_terms(p);
    let mu = p.mu;
    let fe_m = if model == ModelId::II { p.f * p.e_m } else { 0.0 };
    let rent_den = t.qa * t.qa * t.x1;

    let tau_h = div(mu * t.qa * t.x1 - fe_m, 4.0 * p.beta_h, "tau_h", "4*beta_h");
    let tau_l = div(
        (1.0 - mu) * t.qa * t.x1 - fe_m,
        4.0 * t.gap,
        "tau_l",
        "4*(beta_l - mu*beta_h)",
    );

    let w_h = (|| {
        let rent = div(4.0 * p.pi_r0 * p.beta_h, rent_den, "w_h", "(a - p1)^2*(p_m + c_m - c_r - c - c_d)")?;
        let second = if model == ModelId::II {
            div(
                (1.0 - mu).powi(2) * t.x1 + (t.gap - fe_m),
                4.0 * t.gap,
                "w_h",
                "4*(beta_l - mu*beta_h)",
            )?
        } else {
            div((1.0 - mu).powi(2) * t.x1, 4.0 * t.gap, "w_h", "4*(beta_l - mu*beta_h)")?
        };
        Ok((mu * t.x1 - fe_m) / 4.0 + second + rent + p.c + p.c_d)
    })();

    let w_l = (|| {
        let first = div((1.0 - mu) * t.x1 - fe_m, 4.0 * t.gap, "w_l", "4*(beta_l - mu*beta_h)")?;
        let rent = div(
            4.0 * p.pi_r0 * p.beta_h * t.gap,
            (1.0 - mu) * rent_den,
            "w_l",
            "(1 - mu)*(a - p1)^2*(p_m + c_m - c_r - c - c_d)",
        )?;
        Ok(first + (1.0 - mu).powi(2) * t.x1 / 4.0 + rent + p.c + p.c_d)
    })();

    ClosedFormValues {
        model,
        w_h,
        w_l,
        tau_h,
        tau_l,
        p1: Ok(p.p1_ref),
        p2: None,
    }
}

fn decentralized(model: ModelId, p: &ModelParams) -> ClosedFormValues {
    let (a, c, e, mu, pm) = (p.a, p.c, p.eps, p.mu, p.p_m);
    let (bh, bl) = (p.beta_h, p.beta_l);
    let (fe_m, fe_0) = if model.has_emission_cap() {
        (p.f * p.e_m, p.f * p.e_0)
    } else {
        (0.0, 0.0)
    };
    let k = if model == ModelId::V { p.k } else { 0.0 };
    let e2 = e * e;
    let c2 = c * c;

    // Buy-back prices.
    let n_h = 2.0 * a + 2.0 * c - 2.0 * pm + a * e - c * e * pm - c * e2 * pm + e2 * pm - a * c * e - 2.0 * a * c;
    let den_w = 2.0 * bh * (4.0 * bl - c2 - bl * bl + bl * mu) - 2.0 * bl * (c2 * mu - mu * bh * bh);
    let den_w_expr = "2*beta_h*(4*beta_l - c^2 - beta_l^2 + beta_l*mu) - 2*beta_l*mu*(c^2 - beta_h^2)";
    let n_l_core = bh
        * (2.0 * a * bl - c * e * pm + e * bl * pm - c * e2 * pm + e2 * bl * pm - a * c * e + a * e * bl - 2.0 * a * c);

    let w_h = (|| {
        let base = div(bl * (n_h + fe_m) - fe_0, den_w, "w_h", den_w_expr)?;
        if model == ModelId::V {
            let corr = div(
                k * (2.0 + e2 - mu * mu),
                2.0 * bh * (4.0 * bl - c2 - bl * bl) - 2.0 * c2 * bl * mu,
                "w_h",
                "2*beta_h*(4*beta_l - c^2 - beta_l^2) - 2*c^2*beta_l*mu",
            )?;
            Ok(base + corr)
        } else {
            Ok(base)
        }
    })();

    let w_l = (|| match model {
        ModelId::III => div(
            n_l_core + 2.0 * bl * (c * pm - bl * pm),
            2.0 * bh * (bl - c2 - bl * bl + bl * mu) - 2.0 * bl * (c2 * mu - mu * bh * bh),
            "w_l",
            "2*beta_h*(beta_l - c^2 - beta_l^2 + beta_l*mu) - 2*beta_l*(c^2*mu - mu*beta_h^2)",
        ),
        _ => {
            let base = div(
                n_l_core + bl * (2.0 * c * pm - 2.0 * bl * pm + fe_m) - fe_0,
                den_w,
                "w_l",
                den_w_expr,
            )?;
            if model == ModelId::V {
                let corr = div(
                    k * (2.0 - e2 - 2.0 * mu * mu),
                    2.0 * bh * (4.0 * bl - c2 - bl * bl + bl * mu),
                    "w_l",
                    "2*beta_h*(4*beta_l - c^2 - beta_l^2 + beta_l*mu)",
                )?;
                Ok(base + corr)
            } else {
                Ok(base)
            }
        }
    })();

    // Recycling rates.
    let g = 2.0 * a - 2.0 * c + a * e + c * e2;
    let tau_h = (|| {
        let base = div(
            p.pi_r0 * mu * (a - e) * g + bh * fe_m,
            mu * bh * (e - 2.0 * mu).powi(2),
            "tau_h",
            "mu*beta_h*(eps - 2*mu)^2",
        )?;
        if model == ModelId::V {
            Ok(base + div((8.0 - e2) * k, (e - 2.0 * mu).powi(2), "tau_h", "(eps - 2*mu)^2")?)
        } else {
            Ok(base)
        }
    })();
    let tau_l = (|| {
        let base = div(
            p.pi_r0 * (1.0 - mu) * g + (bh - bl) * fe_m,
            mu * (bh - bl) * (e2 - 4.0 * mu),
            "tau_l",
            "mu*(beta_h - beta_l)*(eps^2 - 4*mu)",
        )?;
        if model == ModelId::V {
            Ok(base + div((4.0 - e2) * k - e, e2 - 4.0 * mu, "tau_l", "eps^2 - 4*mu")?)
        } else {
            Ok(base)
        }
    })();

    // Retail prices.
    let x = pm + p.c_m + p.c_r + p.c_d - c;
    let x2 = x * x;
    let z2 = (pm + p.c_m + p.c_r - c).powi(2);
    let y = p.c_m + p.c_r + p.c_d - c;
    let (p1, p2) = if model == ModelId::III {
        let den = 4.0 * bh - x2 + 4.0 * bl - e2;
        let den_expr = "4*beta_h - X^2 + 4*beta_l - eps^2";
        let p1 = div(
            mu * (2.0 + e) * (2.0 * bh - x2) + (1.0 - mu) * (4.0 + e) * (2.0 * bl - x2),
            den,
            "p1",
            den_expr,
        );
        let p2 = div(
            mu * (6.0 + e) * (4.0 * bh * bh - 2.0 * z2) + (1.0 - mu) * (8.0 + 2.0 * e) * (4.0 * bl * bl - 2.0 * z2),
            den,
            "p2",
            den_expr,
        );
        (p1, p2)
    } else {
        let den = 4.0 * bh - (a - e) * x2 + 4.0 * bl - e2;
        let den_expr = "4*beta_h - (a - eps)*X^2 + 4*beta_l - eps^2";
        let p1 = (|| {
            let main = div(
                mu * (2.0 + e) * (a - e) * (2.0 * bh + x2) + (a + e) * (1.0 - mu) * (4.0 + e) * (2.0 * bl - x2),
                den,
                "p1",
                den_expr,
            )?;
            let emis = div(fe_m, 4.0 * bh + (a - e) * x2, "p1", "4*beta_h + (a - eps)*X^2")?;
            let tail = if model == ModelId::V {
                div(2.0 * fe_0 - y * k, x2, "p1", "X^2")?
            } else {
                fe_0
            };
            Ok(main + emis + tail)
        })();
        let p2 = (|| {
            let main = div(
                mu * (a - e) * (6.0 + e) * (4.0 * bh * bh - 2.0 * z2)
                    + (a + e) * (1.0 - mu) * (8.0 + 2.0 * e) * (4.0 * bl * bl - 2.0 * z2),
                den,
                "p2",
                den_expr,
            )?;
            let emis = div(fe_m, (a - e) * x2, "p2", "(a - eps)*X^2")?;
            let tail = if model == ModelId::V {
                div(3.0 * fe_0 - y * (k - e), x2, "p2", "X^2")?
            } else {
                div(fe_0, bh * (a - e), "p2", "beta_h*(a - eps)")?
            };
            Ok(main + emis + tail)
        })();
        (p1, p2)
    };

    ClosedFormValues {
        model,
        w_h,
        w_l,
        tau_h,
        tau_l,
        p1,
        p2: Some(p2),
    }
}

/// Evaluates the printed solution formulas for `model`.
pub fn closed_form_values(model: ModelId, params: &ModelParams) -> ClosedFormValues {
    if model.is_centralized() {
        centralized(model, params)
    } else {
        decentralized(model, params)
    }
}

/// Closed-form equilibrium with the model evaluators applied at it.
/// Fails with [`Error::Singular`] naming the first zero denominator.
pub fn closed_form(model: ModelId, params: &ModelParams, tol: f64) -> Result<Solution> {
    let v = closed_form_values(model, params);
    if let Some(e) = v.first_error() {
        return Err(e);
    }
    let menu = ContractMenu::new(v.w_h?, v.tau_h?, v.w_l?, v.tau_l?);
    let prices = match v.p2 {
        Some(p2) => PricePair::pair(v.p1?, p2?),
        None => PricePair::single(v.p1?),
    };
    Solution::evaluate(model, params, menu, prices, Provenance::ClosedForm, tol)
}

/// The two price corrections that separate the carbon-constrained
/// decentralized prices from the unconstrained ones in the printed proof:
/// `f e_m / (4 beta_H + (a - eps) X^2) + f e_0` and
/// `f e_m / ((a - eps) X^2) + f e_0 / (beta_H (a - eps))`.
pub fn emission_price_corrections(params: &ModelParams) -> Result<(f64, f64)> {
    let p = params;
    let x2 = (p.p_m + p.c_m + p.c_r + p.c_d - p.c).powi(2);
    let fe_m = p.f * p.e_m;
    let fe_0 = p.f * p.e_0;
    let r1 = div(fe_m, 4.0 * p.beta_h + (p.a - p.eps) * x2, "p1", "4*beta_h + (a - eps)*X^2")? + fe_0;
    let r2 = div(fe_m, (p.a - p.eps) * x2, "p2", "(a - eps)*X^2")?
        + div(fe_0, p.beta_h * (p.a - p.eps), "p2", "beta_h*(a - eps)")?;
    Ok((r1, r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn study() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn tau_h_model_one_at_study_point() {
        let v = closed_form_values(ModelId::I, &study());
        assert_abs_diff_eq!(v.tau_h.unwrap(), -1.4625, epsilon = 1e-12);
        let s = closed_form(ModelId::I, &study(), 1e-6).unwrap();
        assert!(s
            .diagnostics
            .warnings
            .iter()
            .any(|w| matches!(w, crate::model::Warning::TauOutOfRange { value, .. } if (*value + 1.4625).abs() < 1e-12)));
    }

    #[test]
    fn model_two_tau_reduces_without_emission_strength() {
        let p = ModelParams { f: 0.0, ..study() };
        let one = closed_form_values(ModelId::I, &p);
        let two = closed_form_values(ModelId::II, &p);
        assert_eq!(one.tau_h, two.tau_h);
        assert_eq!(one.tau_l, two.tau_l);
        assert_eq!(one.w_l, two.w_l);
        // The printed high-type buy-back price carries an extra
        // (beta_l - mu beta_h)/(4 (beta_l - mu beta_h)) = 1/4.
        assert_abs_diff_eq!(two.w_h.unwrap() - one.w_h.unwrap(), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn singular_when_beta_gap_vanishes() {
        let p = ModelParams { beta_h: 1.0, beta_l: 0.5, mu: 0.5, ..study() };
        let v = closed_form_values(ModelId::I, &p);
        assert!(matches!(v.tau_l, Err(Error::Singular { variable: "tau_l", expression: "4*(beta_l - mu*beta_h)" })));
        assert!(v.tau_h.is_ok());
        assert!(matches!(closed_form(ModelId::I, &p, 1e-6), Err(Error::Singular { .. })));
    }

    #[test]
    fn model_one_w_h_by_hand() {
        // Independent hand transcription at a point with a reservation profit.
        let p = ModelParams { pi_r0: 0.4, ..study() };
        let x1: f64 = 1.3 + 2.0 - 2.6 - 4.0 - 3.0;
        let gap: f64 = 0.5 - 0.5 * 0.7;
        let qa: f64 = 3.0 - 1.7;
        let expect_wh = 0.5 * x1 / 4.0 + 0.25 * x1 / (4.0 * gap) + 4.0 * 0.4 * 0.7 / (qa * qa * x1) + 4.0 + 3.0;
        let expect_wl = 0.5 * x1 / (4.0 * gap) + 0.25 * x1 / 4.0 + 4.0 * 0.4 * 0.7 * gap / (0.5 * qa * qa * x1) + 7.0;
        let v = closed_form_values(ModelId::I, &p);
        assert_abs_diff_eq!(v.w_h.unwrap(), expect_wh, epsilon = 1e-12);
        assert_abs_diff_eq!(v.w_l.unwrap(), expect_wl, epsilon = 1e-12);
    }

    #[test]
    fn model_five_by_hand_at_study_point() {
        let p = study();
        let (a, c, e, mu, pm, bh, bl) = (3.0f64, 4.0f64, 0.4f64, 0.5f64, 1.3f64, 0.7f64, 0.5f64);
        let (fe_m, fe_0, k) = (2.7, 3.9, 2.0);
        let n_h = 2.0 * a + 2.0 * c - 2.0 * pm + a * e - c * e * pm - c * e * e * pm + e * e * pm - a * c * e - 2.0 * a * c;
        let den = 2.0 * bh * (4.0 * bl - c * c - bl * bl + bl * mu) - 2.0 * bl * mu * (c * c - bh * bh);
        let w_h4 = (bl * (n_h + fe_m) - fe_0) / den;
        let w_h5 = w_h4 + k * (2.0 + e * e - mu * mu) / (2.0 * bh * (4.0 * bl - c * c - bl * bl) - 2.0 * c * c * bl * mu);
        let tau_h5 = bh * fe_m / (mu * bh * (e - 2.0 * mu).powi(2)) + (8.0 - e * e) * k / (e - 2.0 * mu).powi(2);
        let v = closed_form_values(ModelId::V, &p);
        assert_abs_diff_eq!(v.w_h.unwrap(), w_h5, epsilon = 1e-12);
        assert_abs_diff_eq!(v.tau_h.unwrap(), tau_h5, epsilon = 1e-12);
        let v4 = closed_form_values(ModelId::IV, &p);
        assert_abs_diff_eq!(v4.w_h.unwrap(), w_h4, epsilon = 1e-12);
    }

    #[test]
    fn decentralized_models_are_singular_at_eps_equal_two_mu() {
        let p = ModelParams { mu: 0.2, ..study() };
        let v = closed_form_values(ModelId::III, &p);
        assert!(matches!(v.tau_h, Err(Error::Singular { variable: "tau_h", .. })));
        assert!(v.w_h.is_ok());
    }

    proptest! {
        #[test]
        fn model_two_tau_h_shift_is_emission_over_four_beta(f in 0.0..5.0f64, e_m in 0.0..2.0f64) {
            let p = ModelParams { f, e_m, ..study() };
            let d = closed_form_values(ModelId::II, &p).tau_h.unwrap() - closed_form_values(ModelId::I, &p).tau_h.unwrap();
            prop_assert!((d + f * e_m / (4.0 * p.beta_h)).abs() < 1e-12);
        }
    }
}
