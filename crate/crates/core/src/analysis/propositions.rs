//! The eight comparative-statics propositions as executable checks.
//!
//! Antecedents are encoded exactly as stated, including conditions that are
//! trivially true or impossible under the parameter invariants, so that each
//! sub-condition shows up individually in the report.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{ModelId, ModelParams};
use crate::solution::Provenance;
use crate::solver::SolveOptions;

use super::draws::random_params;
use super::Evaluator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
}

impl Relation {
    pub fn test(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Relation::Lt => lhs < rhs,
            Relation::Gt => lhs > rhs,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Lt => "<",
            Relation::Gt => ">",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    /// Some antecedent is false.
    Vacuous,
    /// A value needed by the conclusion could not be evaluated (zero
    /// denominator in a closed form, or an oracle failure).
    Singular,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Vacuous => "vacuous",
            Verdict::Singular => "singular",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Antecedent {
    pub name: String,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conclusion {
    pub lhs_name: String,
    pub lhs: Option<f64>,
    pub relation: Relation,
    pub rhs_name: String,
    pub rhs: Option<f64>,
    pub holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Claim {
    pub label: String,
    pub antecedents: Vec<Antecedent>,
    pub conclusion: Conclusion,
    /// `Holds` only if every antecedent and the conclusion pass.
    pub verdict: Verdict,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropositionReport {
    pub id: u8,
    pub source: Provenance,
    pub claims: Vec<Claim>,
    /// `Fails` if any applicable claim fails, else `Singular` if any is
    /// singular, else `Holds` if some claim applies, else `Vacuous`.
    pub verdict: Verdict,
}

fn ante(name: &str, lhs: f64, relation: Relation, rhs: f64) -> Antecedent {
    Antecedent {
        name: name.to_string(),
        lhs,
        relation,
        rhs,
        holds: relation.test(lhs, rhs),
    }
}

struct Builder<'e, 'a> {
    ev: &'e mut Evaluator<'a>,
    claims: Vec<Claim>,
}

impl Builder<'_, '_> {
    fn claim(
        &mut self,
        label: &str,
        antecedents: Vec<Antecedent>,
        (lhs_model, lhs_var): (ModelId, &str),
        relation: Relation,
        (rhs_model, rhs_var): (ModelId, &str),
    ) {
        let l = self.ev.value(lhs_model, lhs_var);
        let r = self.ev.value(rhs_model, rhs_var);
        let note = match (&l, &r) {
            (Err(e), _) | (_, Err(e)) => Some(e.to_string()),
            _ => None,
        };
        let holds = match (&l, &r) {
            (Ok(a), Ok(b)) => Some(relation.test(*a, *b)),
            _ => None,
        };
        let verdict = if antecedents.iter().any(|a| !a.holds) {
            Verdict::Vacuous
        } else {
            match holds {
                None => Verdict::Singular,
                Some(true) => Verdict::Holds,
                Some(false) => Verdict::Fails,
            }
        };
        self.claims.push(Claim {
            label: label.to_string(),
            antecedents,
            conclusion: Conclusion {
                lhs_name: format!("{lhs_var}({lhs_model})"),
                lhs: l.ok(),
                relation,
                rhs_name: format!("{rhs_var}({rhs_model})"),
                rhs: r.ok(),
                holds,
            },
            verdict,
            note,
        });
    }
}

fn aggregate(claims: &[Claim]) -> Verdict {
    let has = |v: Verdict| claims.iter().any(|c| c.verdict == v);
    if has(Verdict::Fails) {
        Verdict::Fails
    } else if has(Verdict::Singular) {
        Verdict::Singular
    } else if has(Verdict::Holds) {
        Verdict::Holds
    } else {
        Verdict::Vacuous
    }
}

use ModelId::{I, II, III, IV, V};
use Relation::{Gt, Lt};

fn build(n: u8, p: &ModelParams, b: &mut Builder) {
    let (fe_m, fe_0) = (p.f * p.e_m, p.f * p.e_0);
    let gap = p.beta_l - p.mu * p.beta_h;
    let (c2, e2) = (p.c * p.c, p.eps * p.eps);
    let x = p.p_m + p.c_m + p.c_r + p.c_d - p.c;
    let y = p.c_m + p.c_r + p.c_d - p.c;
    match n {
        1 => {
            let t = gap / (1.0 + gap);
            b.claim("high", vec![ante("f*e_m vs threshold", fe_m, Lt, t)], (II, "w_h"), Gt, (I, "w_h"));
            b.claim("high", vec![ante("f*e_m vs threshold", fe_m, Gt, t)], (II, "w_h"), Lt, (I, "w_h"));
            b.claim(
                "low",
                vec![ante("-f*e_m", -fe_m, Lt, 0.0), ante("beta_l - mu*beta_h", gap, Gt, 0.0)],
                (II, "w_l"),
                Lt,
                (I, "w_l"),
            );
        }
        2 => {
            b.claim(
                "high",
                vec![ante("beta_h", p.beta_h, Gt, 0.0), ante("-f*e_m", -fe_m, Lt, 0.0)],
                (II, "tau_h"),
                Lt,
                (I, "tau_h"),
            );
            b.claim(
                "low",
                vec![ante("-f*e_m", -fe_m, Lt, 0.0), ante("beta_l - mu*beta_h", gap, Gt, 0.0)],
                (II, "tau_l"),
                Lt,
                (I, "tau_l"),
            );
        }
        3 => {
            let lhs2 = p.beta_h * (4.0 * p.beta_l - c2 - p.beta_l * p.beta_l + p.mu * p.beta_l);
            let rhs2 = p.beta_l * (p.mu * c2 - p.mu * p.beta_h * p.beta_h);
            let ratio = p.e_0 / p.beta_l;
            let cond2 = || ante("beta_h*(4*beta_l - c^2 - beta_l^2 + mu*beta_l) vs beta_l*(mu*c^2 - mu*beta_h^2)", lhs2, Lt, rhs2);
            for (var, label) in [("w_h", "high"), ("w_l", "low")] {
                b.claim(label, vec![ante("e_m vs e_0/beta_l", p.e_m, Lt, ratio), cond2()], (IV, var), Gt, (III, var));
                b.claim(label, vec![ante("e_m vs e_0/beta_l", p.e_m, Gt, ratio), cond2()], (IV, var), Lt, (III, var));
            }
        }
        4 => {
            b.claim(
                "high",
                vec![
                    ante("beta_h*f*e_m", p.beta_h * fe_m, Gt, 0.0),
                    ante("mu", p.mu, Gt, 0.0),
                    ante("beta_h", p.beta_h, Gt, 0.0),
                    ante("(eps - 2*mu)^2", (p.eps - 2.0 * p.mu).powi(2), Gt, 0.0),
                ],
                (IV, "tau_h"),
                Gt,
                (III, "tau_h"),
            );
            let common = || vec![ante("beta_h - beta_l", p.beta_h - p.beta_l, Gt, 0.0), ante("mu", p.mu, Gt, 0.0)];
            let mut a = common();
            a.push(ante("eps^2 - 4*mu", e2 - 4.0 * p.mu, Gt, 0.0));
            b.claim("low", a, (IV, "tau_l"), Gt, (III, "tau_l"));
            let mut a = common();
            a.push(ante("eps^2 - 4*mu", e2 - 4.0 * p.mu, Lt, 0.0));
            b.claim("low", a, (IV, "tau_l"), Lt, (III, "tau_l"));
        }
        5 => {
            let a = || {
                vec![
                    ante("f*e_m", fe_m, Gt, 0.0),
                    ante("f*e_0", fe_0, Gt, 0.0),
                    ante("a - eps", p.a - p.eps, Gt, 0.0),
                    ante("(p_m + c_m + c_r + c_d - c)^2", x * x, Gt, 0.0),
                ]
            };
            b.claim("retailer1", a(), (IV, "p1"), Gt, (III, "p1"));
            b.claim("retailer2", a(), (IV, "p2"), Gt, (III, "p2"));
        }
        6 => {
            let q = 4.0 * p.beta_l - c2 - p.beta_l * p.beta_l;
            b.claim(
                "high",
                vec![
                    ante("4*beta_l - c^2 - beta_l^2", q, Gt, 0.0),
                    ante("4*beta_l - c^2 - beta_l^2 vs c^2*mu", q, Gt, c2 * p.mu),
                ],
                (V, "w_h"),
                Gt,
                (IV, "w_h"),
            );
            b.claim(
                "low",
                vec![
                    ante("2 - eps^2 - 2*mu^2", 2.0 - e2 - 2.0 * p.mu * p.mu, Gt, 0.0),
                    ante("4*beta_l - c^2 - beta_l^2 + beta_l*mu", q + p.beta_l * p.mu, Gt, 0.0),
                ],
                (V, "w_l"),
                Gt,
                (IV, "w_l"),
            );
        }
        7 => {
            b.claim(
                "high",
                vec![
                    ante("8 - eps^2", 8.0 - e2, Gt, 0.0),
                    ante("k", p.k, Gt, 0.0),
                    ante("(eps - 2*mu)^2", (p.eps - 2.0 * p.mu).powi(2), Gt, 0.0),
                ],
                (V, "tau_h"),
                Gt,
                (IV, "tau_h"),
            );
            let t = e2 / 4.0 - e2;
            let d = ante("eps^2 - 4*mu", e2 - 4.0 * p.mu, Gt, 0.0);
            b.claim("low", vec![d.clone(), ante("k vs eps^2/4 - eps^2", p.k, Gt, t)], (V, "tau_l"), Gt, (IV, "tau_l"));
            b.claim("low", vec![d, ante("k vs eps^2/4 - eps^2", p.k, Lt, t)], (V, "tau_l"), Lt, (IV, "tau_l"));
        }
        8 => {
            let t1 = (2.0 - x * x) * fe_0 / y;
            let t2 = 3.0 * fe_0 / y - fe_0 * x * x / (p.beta_h * (p.a - p.eps) * y) + p.eps;
            b.claim("retailer1", vec![ante("k vs retailer-1 threshold", p.k, Lt, t1)], (V, "p1"), Gt, (IV, "p1"));
            b.claim("retailer1", vec![ante("k vs retailer-1 threshold", p.k, Gt, t1)], (V, "p1"), Lt, (IV, "p1"));
            b.claim("retailer2", vec![ante("k vs retailer-2 threshold", p.k, Lt, t2)], (V, "p2"), Gt, (IV, "p2"));
            b.claim("retailer2", vec![ante("k vs retailer-2 threshold", p.k, Gt, t2)], (V, "p2"), Lt, (IV, "p2"));
        }
        _ => unreachable!(),
    }
}

pub(crate) fn check_with(n: u8, params: &ModelParams, ev: &mut Evaluator) -> PropositionReport {
    let source = ev.source;
    let mut b = Builder { ev, claims: Vec::new() };
    build(n, params, &mut b);
    let verdict = aggregate(&b.claims);
    PropositionReport {
        id: n,
        source,
        claims: b.claims,
        verdict,
    }
}

/// Evaluates proposition `n` (1..=8) under one solution source.
pub fn check_proposition(
    n: u8,
    params: &ModelParams,
    source: Provenance,
    opts: &SolveOptions,
) -> Result<PropositionReport> {
    if !(1..=8).contains(&n) {
        return Err(Error::InvalidOptions(format!("proposition id must be 1..=8 (got {n})")));
    }
    params.validate()?;
    let mut ev = Evaluator::new(params, source, opts);
    Ok(check_with(n, params, &mut ev))
}

/// All eight propositions, sharing model evaluations.
pub fn check_all(params: &ModelParams, source: Provenance, opts: &SolveOptions) -> Result<Vec<PropositionReport>> {
    params.validate()?;
    let mut ev = Evaluator::new(params, source, opts);
    Ok((1..=8).map(|n| check_with(n, params, &mut ev)).collect())
}

/// Tally of one proposition over random parameter draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomCheck {
    pub proposition: u8,
    pub seed: u64,
    pub draws: usize,
    pub holds: usize,
    pub fails: usize,
    pub vacuous: usize,
    pub singular: usize,
}

/// The recycling-rate claim comparing the centralized models, under the
/// closed-form source, on `n` random draws.
pub fn prop2_random_check(seed: u64, n: usize) -> RandomCheck {
    let opts = SolveOptions::default();
    let mut r = RandomCheck {
        proposition: 2,
        seed,
        draws: n,
        holds: 0,
        fails: 0,
        vacuous: 0,
        singular: 0,
    };
    for p in random_params(seed, n) {
        let mut ev = Evaluator::new(&p, Provenance::ClosedForm, &opts);
        match check_with(2, &p, &mut ev).verdict {
            Verdict::Holds => r.holds += 1,
            Verdict::Fails => r.fails += 1,
            Verdict::Vacuous => r.vacuous += 1,
            Verdict::Singular => r.singular += 1,
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cf(n: u8, p: &ModelParams) -> PropositionReport {
        check_proposition(n, p, Provenance::ClosedForm, &SolveOptions::default()).unwrap()
    }

    #[test]
    fn first_threshold_at_study_point() {
        let r = cf(1, &ModelParams::default());
        let a = &r.claims[0].antecedents[0];
        assert_abs_diff_eq!(a.rhs, 0.15 / 1.15, epsilon = 1e-12);
        assert_abs_diff_eq!(a.rhs, 0.130435, epsilon = 1e-6);
        assert_abs_diff_eq!(a.lhs, 2.7, epsilon = 1e-12);
        assert_eq!(r.claims[0].verdict, Verdict::Vacuous);
        assert!(r.claims[1].antecedents[0].holds);
        // Printed forms: w_h(II) - w_h(I) = -f e_m / 4 + (D - f e_m) / (4 D).
        let d = 0.15;
        let diff = r.claims[1].conclusion.lhs.unwrap() - r.claims[1].conclusion.rhs.unwrap();
        assert_abs_diff_eq!(diff, -2.7 / 4.0 + (d - 2.7) / (4.0 * d), epsilon = 1e-9);
        assert_eq!(r.claims[1].verdict, Verdict::Holds);
    }

    #[test]
    fn emission_free_second_is_vacuous() {
        let p = ModelParams { f: 0.0, ..Default::default() };
        let r = cf(2, &p);
        assert_eq!(r.verdict, Verdict::Vacuous);
        // The rates coincide, so the strict conclusion would fail anyway.
        let c = &r.claims[0].conclusion;
        assert_eq!(c.lhs, c.rhs);
        assert_eq!(c.holds, Some(false));
    }

    #[test]
    fn every_report_is_populated() {
        let p = ModelParams::default();
        for n in 1..=8 {
            let r = cf(n, &p);
            assert_eq!(r.id, n);
            assert!(!r.claims.is_empty());
            for c in &r.claims {
                assert!(!c.antecedents.is_empty());
                assert!(c.antecedents.iter().all(|a| a.lhs.is_finite() && a.rhs.is_finite()));
            }
        }
        assert!(check_proposition(9, &p, Provenance::ClosedForm, &SolveOptions::default()).is_err());
    }

    #[test]
    fn seventh_uses_printed_threshold() {
        let r = cf(7, &ModelParams::default());
        let t = &r.claims[1].antecedents[1];
        assert_abs_diff_eq!(t.rhs, 0.16 / 4.0 - 0.16, epsilon = 1e-15);
    }

    #[test]
    fn eighth_thresholds_by_hand() {
        let p = ModelParams::default();
        let x: f64 = 1.3 + 2.0 + 2.6 + 3.0 - 4.0;
        let y = 2.0 + 2.6 + 3.0 - 4.0;
        let fe0 = 3.0 * 1.3;
        let r = cf(8, &p);
        assert_abs_diff_eq!(r.claims[0].antecedents[0].rhs, (2.0 - x * x) * fe0 / y, epsilon = 1e-12);
        let t2 = 3.0 * fe0 / y - fe0 * x * x / (0.7 * 2.6 * y) + 0.4;
        assert_abs_diff_eq!(r.claims[2].antecedents[0].rhs, t2, epsilon = 1e-12);
    }

    #[test]
    fn singular_closed_forms_give_singular_verdict() {
        // beta_l = mu * beta_h zeroes the centralized denominators while the
        // high-type branch of the first claim still applies.
        let p = ModelParams {
            beta_h: 1.0,
            beta_l: 0.5,
            ..Default::default()
        };
        let r = cf(1, &p);
        let c = &r.claims[1];
        assert!(c.antecedents.iter().all(|a| a.holds));
        assert_eq!(c.verdict, Verdict::Singular, "{c:?}");
        assert!(c.note.is_some());
        assert_eq!(r.verdict, Verdict::Singular);
        // A false guard wins over a missing value.
        let q = ModelParams { mu: 0.2, ..Default::default() };
        let r = cf(7, &q);
        assert_eq!(r.claims[0].verdict, Verdict::Vacuous);
        assert!(r.claims[0].conclusion.holds.is_none());
        assert!(r.claims[0].note.as_deref().unwrap().contains("tau_h"));
    }

    #[test]
    fn verdicts_are_deterministic_and_labeled() {
        let p = ModelParams::default();
        let o = SolveOptions::default();
        let a = check_all(&p, Provenance::Oracle, &o).unwrap();
        let b = check_all(&p, Provenance::Oracle, &o).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.source == Provenance::Oracle));
    }

    #[test]
    fn second_holds_on_random_draws() {
        let r = prop2_random_check(super::super::DEFAULT_SEED, 100);
        assert_eq!(r.holds, 100, "{r:?}");
    }

    proptest! {
        #[test]
        fn holds_implies_antecedents_and_conclusion(
            f in 0.0..5.0f64, k in 0.0..5.0f64, mu in 0.05..0.95f64, eps in 0.05..0.95f64
        ) {
            let p = ModelParams { f, k, mu, eps, ..Default::default() };
            for n in 1..=8 {
                for c in cf(n, &p).claims {
                    if c.verdict == Verdict::Holds {
                        prop_assert!(c.antecedents.iter().all(|a| a.holds));
                        prop_assert_eq!(c.conclusion.holds, Some(true));
                    }
                }
            }
        }
    }
}
