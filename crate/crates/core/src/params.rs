use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five game structures.
///
/// `I` and `II` are centralized (one retailer, chain-profit maximization),
/// `III`..`V` are decentralized with two competing retailers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelId {
    I,
    II,
    III,
    IV,
    V,
}

impl ModelId {
    pub const ALL: [ModelId; 5] = [ModelId::I, ModelId::II, ModelId::III, ModelId::IV, ModelId::V];

    /// Two retailers competing on price.
    pub fn is_competitive(self) -> bool {
        matches!(self, ModelId::III | ModelId::IV | ModelId::V)
    }

    pub fn is_centralized(self) -> bool {
        !self.is_competitive()
    }

    /// Emission reward-penalty applies to the manufacturer.
    pub fn has_emission_cap(self) -> bool {
        matches!(self, ModelId::II | ModelId::IV | ModelId::V)
    }

    /// Recycling reward-penalty applies to both retailers.
    pub fn has_recycling_transfer(self) -> bool {
        self == ModelId::V
    }

    pub fn number(self) -> u8 {
        match self {
            ModelId::I => 1,
            ModelId::II => 2,
            ModelId::III => 3,
            ModelId::IV => 4,
            ModelId::V => 5,
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelId::I => "I",
            ModelId::II => "II",
            ModelId::III => "III",
            ModelId::IV => "IV",
            ModelId::V => "V",
        };
        f.write_str(s)
    }
}

impl FromStr for ModelId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(ModelId::I),
            "II" | "2" => Ok(ModelId::II),
            "III" | "3" => Ok(ModelId::III),
            "IV" | "4" => Ok(ModelId::IV),
            "V" | "5" => Ok(ModelId::V),
            other => Err(format!("unknown model `{other}` (expected I, II, III, IV or V)")),
        }
    }
}

/// Retailer-1 cost type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TypeLabel {
    H,
    L,
}

impl TypeLabel {
    pub const BOTH: [TypeLabel; 2] = [TypeLabel::H, TypeLabel::L];

    pub fn other(self) -> TypeLabel {
        match self {
            TypeLabel::H => TypeLabel::L,
            TypeLabel::L => TypeLabel::H,
        }
    }
}

impl fmt::Display for TypeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TypeLabel::H => "H",
            TypeLabel::L => "L",
        })
    }
}

/// Which recycling rate enters the `k(tau - tau_0)` transfer when a type
/// evaluates the other type's contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferRule {
    /// The rate of the contract actually taken.
    #[default]
    ChosenItem,
    /// The rate of the deviator's own contract.
    OwnType,
}

impl FromStr for TransferRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "chosen_item" => Ok(TransferRule::ChosenItem),
            "own_type" => Ok(TransferRule::OwnType),
            other => Err(format!("unknown transfer rule `{other}`")),
        }
    }
}

/// Modelling conventions that the equations leave open.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Conventions {
    /// Put the probability `mu` on the L branch instead of the H branch.
    pub mu_weights_l_branch: bool,
    pub transfer_on_deviation: TransferRule,
}

/// Exogenous scalars of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Potential market demand.
    pub a: f64,
    /// Substitution coefficient between the two retailers.
    pub eps: f64,
    /// Retailer 1's unit collection cost.
    pub c: f64,
    /// Manufacturer's unit testing and sorting cost.
    pub c_d: f64,
    /// Manufacturer's unit remanufacturing cost.
    pub c_r: f64,
    /// Manufacturer's unit cost of new production.
    pub c_m: f64,
    /// Wholesale price charged to the retailers.
    pub p_m: f64,
    /// Probability weight on the H branch (see [`Conventions`]).
    pub mu: f64,
    pub beta_h: f64,
    pub beta_l: f64,
    /// Retailer 1's reservation profit.
    pub pi_r0: f64,
    /// Emission reward-penalty strength.
    pub f: f64,
    /// Recycling reward-penalty strength.
    pub k: f64,
    /// Unit carbon emission of the manufacturer.
    pub e_m: f64,
    /// Emission cap.
    pub e_0: f64,
    /// Target recycling rate.
    pub tau_0: f64,
    /// Reference retail price of retailer 1. The centralized closed forms
    /// take it as given; the oracle starts its price iteration there.
    pub p1_ref: f64,
    /// Reference retail price of retailer 2.
    pub p2_ref: f64,
    /// Informational fixed-cost levels, not used by any evaluator.
    pub fixed_cost_h: Option<f64>,
    pub fixed_cost_l: Option<f64>,
    pub conventions: Conventions,
}

impl Default for ModelParams {
    /// The numerical-study point with `mu = 0.5`, `pi_r0 = 0`, `f = 3`, `k = 2`.
    fn default() -> Self {
        ModelParams {
            a: 3.0,
            eps: 0.4,
            c: 4.0,
            c_d: 3.0,
            c_r: 2.6,
            c_m: 2.0,
            p_m: 1.3,
            mu: 0.5,
            beta_h: 0.7,
            beta_l: 0.5,
            pi_r0: 0.0,
            f: 3.0,
            k: 2.0,
            e_m: 0.9,
            e_0: 1.3,
            tau_0: 0.8,
            p1_ref: 1.7,
            p2_ref: 1.9,
            fixed_cost_h: Some(40.0),
            fixed_cost_l: Some(30.0),
            conventions: Conventions::default(),
        }
    }
}

/// One retailer type with its cost coefficient and probability mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeProfile {
    pub label: TypeLabel,
    pub beta: f64,
    pub weight: f64,
}

impl ModelParams {
    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let scalars = [
            ("a", self.a),
            ("eps", self.eps),
            ("c", self.c),
            ("c_d", self.c_d),
            ("c_r", self.c_r),
            ("c_m", self.c_m),
            ("p_m", self.p_m),
            ("mu", self.mu),
            ("beta_h", self.beta_h),
            ("beta_l", self.beta_l),
            ("pi_r0", self.pi_r0),
            ("f", self.f),
            ("k", self.k),
            ("e_m", self.e_m),
            ("e_0", self.e_0),
            ("tau_0", self.tau_0),
            ("p1_ref", self.p1_ref),
            ("p2_ref", self.p2_ref),
        ];
        for (name, v) in scalars {
            if !v.is_finite() {
                errs.push(format!("{name} must be finite (got {v})"));
            }
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            errs.push(format!("eps must satisfy 0 < eps < 1 (got {})", self.eps));
        }
        if !(0.0..=1.0).contains(&self.mu) {
            errs.push(format!("mu must lie in [0, 1] (got {})", self.mu));
        }
        if !(0.0..=1.0).contains(&self.tau_0) {
            errs.push(format!("tau_0 must lie in [0, 1] (got {})", self.tau_0));
        }
        if !(self.beta_l > 0.0) {
            errs.push(format!("beta_l must be positive (got {})", self.beta_l));
        }
        if !(self.beta_h > self.beta_l) {
            errs.push(format!(
                "beta_h must exceed beta_l (got beta_h={}, beta_l={})",
                self.beta_h, self.beta_l
            ));
        }
        if !(self.a > 0.0) {
            errs.push(format!("a must be positive (got {})", self.a));
        }
        for (name, v) in [
            ("c", self.c),
            ("c_d", self.c_d),
            ("c_r", self.c_r),
            ("c_m", self.c_m),
            ("p_m", self.p_m),
            ("f", self.f),
            ("k", self.k),
            ("e_m", self.e_m),
            ("e_0", self.e_0),
        ] {
            if v < 0.0 {
                errs.push(format!("{name} must be nonnegative (got {v})"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(errs))
        }
    }

    /// Probability mass of the H branch.
    pub fn weight_h(&self) -> f64 {
        if self.conventions.mu_weights_l_branch {
            1.0 - self.mu
        } else {
            self.mu
        }
    }

    pub fn weight(&self, label: TypeLabel) -> f64 {
        match label {
            TypeLabel::H => self.weight_h(),
            TypeLabel::L => 1.0 - self.weight_h(),
        }
    }

    pub fn beta(&self, label: TypeLabel) -> f64 {
        match label {
            TypeLabel::H => self.beta_h,
            TypeLabel::L => self.beta_l,
        }
    }

    pub fn profile(&self, label: TypeLabel) -> TypeProfile {
        TypeProfile {
            label,
            beta: self.beta(label),
            weight: self.weight(label),
        }
    }

    pub fn profiles(&self) -> [TypeProfile; 2] {
        [self.profile(TypeLabel::H), self.profile(TypeLabel::L)]
    }

    /// Sets a scalar field by name. Used by `--set key=value` overrides.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = match key {
            "a" => &mut self.a,
            "eps" => &mut self.eps,
            "c" => &mut self.c,
            "c_d" => &mut self.c_d,
            "c_r" => &mut self.c_r,
            "c_m" => &mut self.c_m,
            "p_m" => &mut self.p_m,
            "mu" => &mut self.mu,
            "beta_h" => &mut self.beta_h,
            "beta_l" => &mut self.beta_l,
            "pi_r0" => &mut self.pi_r0,
            "f" => &mut self.f,
            "k" => &mut self.k,
            "e_m" => &mut self.e_m,
            "e_0" => &mut self.e_0,
            "tau_0" => &mut self.tau_0,
            "p1_ref" => &mut self.p1_ref,
            "p2_ref" => &mut self.p2_ref,
            _ => return Err(Error::InvalidParams(vec![format!("unknown parameter `{key}`")])),
        };
        *slot = value;
        Ok(())
    }
}
