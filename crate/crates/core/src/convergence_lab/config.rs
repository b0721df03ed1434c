use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_geometry::{
    enumerate_ball, CircleMetric, Combinator, Group, LengthFunction, VecNorm, DEFAULT_BUDGET,
};
use crate::twisted_algebra::{Cocycle, CocycleSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Solenoid,
    BunceDeddens,
    RootsOfUnity,
}

/// Test functions in C₀(ℝ) for the functional calculus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionPreset {
    /// 1/(1+x²)
    Lorentzian,
    /// exp(−x²)
    Gaussian,
    /// the zero function
    Zero,
}

impl FunctionPreset {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            FunctionPreset::Lorentzian => 1.0 / (1.0 + x * x),
            FunctionPreset::Gaussian => (-x * x).exp(),
            FunctionPreset::Zero => 0.0,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            FunctionPreset::Lorentzian => "lorentzian",
            FunctionPreset::Gaussian => "gaussian",
            FunctionPreset::Zero => "zero",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative residual for the Lanczos norm estimates.
    #[serde(default = "defaults::norm_tol")]
    pub norm: f64,
    /// Absolute slack on the dynamics Lipschitz bound.
    #[serde(default = "defaults::slack")]
    pub slack: f64,
    /// Relative slack for floating comparisons between certified quantities.
    #[serde(default = "defaults::compare")]
    pub compare: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            norm: defaults::norm_tol(),
            slack: defaults::slack(),
            compare: defaults::compare(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: FamilyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// α₁, α₂, … (α₀ = 1 is implicit).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<u64>>,
    #[serde(default)]
    pub cocycle: CocycleSpec,
    #[serde(default)]
    pub h_norm: VecNorm,
    #[serde(default)]
    pub circle: CircleMetric,
    /// Combinator for the ball length 𝕃′ built from 𝕃_H and 𝔽.
    #[serde(default = "defaults::combinator")]
    pub combinator: Combinator,
    #[serde(default = "defaults::levels")]
    pub levels: Vec<usize>,
    #[serde(default = "defaults::radii")]
    pub radii: Vec<f64>,
    /// Random functions per (level, radius).
    #[serde(default = "defaults::samples")]
    pub samples: usize,
    /// Terms per random function.
    #[serde(default = "defaults::terms")]
    pub terms: usize,
    #[serde(default)]
    pub trace_zero: bool,
    #[serde(default = "defaults::window_factor")]
    pub window_factor: f64,
    #[serde(default = "defaults::dim_e")]
    pub dim_e: usize,
    #[serde(default = "defaults::eps")]
    pub eps: f64,
    /// Diameter proxy; when absent, 2 / (smallest nonzero 𝕃′ in the window).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diameter_proxy: Option<f64>,
    /// Fejér order applied before truncating to G_n in the certificate; none means no smoothing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fejer_order: Option<usize>,
    #[serde(default = "defaults::functions")]
    pub functions: Vec<FunctionPreset>,
    /// Random (ξ, s, t) triples for the dynamics checks.
    #[serde(default = "defaults::dynamics_samples")]
    pub dynamics_samples: usize,
    /// Points on the time grid [0, 1/ε].
    #[serde(default = "defaults::time_points")]
    pub time_points: usize,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    #[serde(default = "defaults::budget")]
    pub budget: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

mod defaults {
    use super::*;
    pub fn norm_tol() -> f64 {
        1e-10
    }
    pub fn slack() -> f64 {
        1e-10
    }
    pub fn compare() -> f64 {
        1e-12
    }
    pub fn combinator() -> Combinator {
        Combinator::Max
    }
    pub fn levels() -> Vec<usize> {
        vec![1, 2]
    }
    pub fn radii() -> Vec<f64> {
        vec![4.0]
    }
    pub fn samples() -> usize {
        100
    }
    pub fn terms() -> usize {
        4
    }
    pub fn window_factor() -> f64 {
        4.0
    }
    pub fn dim_e() -> usize {
        2
    }
    pub fn eps() -> f64 {
        0.5
    }
    pub fn functions() -> Vec<FunctionPreset> {
        vec![FunctionPreset::Lorentzian, FunctionPreset::Gaussian]
    }
    pub fn dynamics_samples() -> usize {
        1000
    }
    pub fn time_points() -> usize {
        9
    }
    pub fn seed() -> u64 {
        0x5EED_2024
    }
    pub fn budget() -> usize {
        DEFAULT_BUDGET
    }
}

fn field(name: &str, msg: impl Into<String>) -> Error {
    Error::Validation {
        field: name.into(),
        message: msg.into(),
    }
}

impl ExperimentConfig {
    /// Config with every optional field at its default.
    pub fn minimal(family: FamilyKind) -> Self {
        ExperimentConfig {
            family,
            p: None,
            d: None,
            alpha: None,
            cocycle: CocycleSpec::default(),
            h_norm: VecNorm::default(),
            circle: CircleMetric::default(),
            combinator: defaults::combinator(),
            levels: defaults::levels(),
            radii: defaults::radii(),
            samples: defaults::samples(),
            terms: defaults::terms(),
            trace_zero: false,
            window_factor: defaults::window_factor(),
            dim_e: defaults::dim_e(),
            eps: defaults::eps(),
            diameter_proxy: None,
            fejer_order: None,
            functions: defaults::functions(),
            dynamics_samples: defaults::dynamics_samples(),
            time_points: defaults::time_points(),
            seed: defaults::seed(),
            budget: defaults::budget(),
            tolerances: Tolerances::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn solenoid(p: u32, d: usize) -> Self {
        ExperimentConfig {
            p: Some(p),
            d: Some(d),
            ..Self::minimal(FamilyKind::Solenoid)
        }
    }

    pub fn bunce_deddens(alpha: &[u64]) -> Self {
        ExperimentConfig {
            alpha: Some(alpha.to_vec()),
            cocycle: CocycleSpec::BunceDeddens,
            radii: vec![2.0],
            ..Self::minimal(FamilyKind::BunceDeddens)
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.family {
            FamilyKind::Solenoid => {
                match self.p {
                    None => return Err(field("p", "required for the solenoid family")),
                    Some(p) if p < 2 => return Err(field("p", "must be at least 2")),
                    _ => {}
                }
                if self.d == Some(0) {
                    return Err(field("d", "must be positive"));
                }
                if self.alpha.is_some() {
                    return Err(field("alpha", "not used by the solenoid family"));
                }
            }
            FamilyKind::BunceDeddens | FamilyKind::RootsOfUnity => {
                if self.alpha.as_ref().map_or(true, |a| a.is_empty()) {
                    return Err(field("alpha", "a nonempty tower prefix is required"));
                }
                if self.p.is_some() || self.d.is_some() {
                    return Err(field("p", "p and d are only used by the solenoid family"));
                }
            }
        }
        if self.radii.is_empty() {
            return Err(field("radii", "at least one radius is required"));
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(field("radii", "radii must be positive and finite"));
        }
        if self.radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(field("radii", "radii not increasing"));
        }
        if self.levels.is_empty() {
            return Err(field("levels", "at least one level is required"));
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(field("levels", "levels not increasing"));
        }
        if !(self.window_factor > 1.0) {
            return Err(field("window_factor", "must exceed 1"));
        }
        if self.dim_e < 2 || self.dim_e % 2 != 0 {
            return Err(field("dim_e", "must be even and positive"));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(field("eps", "must be positive"));
        }
        if let Some(c) = self.diameter_proxy {
            if !(c > 0.0 && c.is_finite()) {
                return Err(field("diameter_proxy", "must be positive"));
            }
            if self.eps >= c / 2.0 {
                return Err(field("eps", format!("must lie in (0, C/2) = (0, {})", c / 2.0)));
            }
        }
        if self.terms == 0 {
            return Err(field("terms", "must be positive"));
        }
        if self.time_points < 2 {
            return Err(field("time_points", "need at least two time points"));
        }
        for (name, v) in [
            ("tolerances.norm", self.tolerances.norm),
            ("tolerances.slack", self.tolerances.slack),
            ("tolerances.compare", self.tolerances.compare),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(field(name, "must be a finite nonnegative number"));
            }
        }
        self.combinator.validate().map_err(|e| field("combinator", e.to_string()))?;
        self.group()?;
        Ok(())
    }

    pub fn group(&self) -> Result<Group> {
        match self.family {
            FamilyKind::Solenoid => Group::solenoid(self.p.unwrap_or(2), self.d.unwrap_or(1)),
            FamilyKind::BunceDeddens => Group::bunce_deddens(self.alpha.as_deref().unwrap_or(&[])),
            FamilyKind::RootsOfUnity => Group::roots_of_unity(self.alpha.as_deref().unwrap_or(&[])),
        }
    }

    pub fn cocycle(&self, group: &Group) -> Result<Cocycle> {
        Cocycle::from_spec(&self.cocycle, group)
    }

    pub fn h_length(&self) -> LengthFunction {
        LengthFunction::H {
            norm: self.h_norm,
            circle: self.circle,
        }
    }

    pub fn f_length(&self) -> LengthFunction {
        LengthFunction::f()
    }

    /// 𝕃′, the length that defines the truncation balls.
    pub fn ball_length(&self) -> LengthFunction {
        LengthFunction::Combined {
            a: Box::new(self.h_length()),
            b: Box::new(self.f_length()),
            comb: self.combinator.clone(),
        }
    }

    /// ε/C must stay below 1/2.
    pub fn diameter_proxy_for(&self, group: &Group, window_radius: f64) -> Result<f64> {
        if let Some(c) = self.diameter_proxy {
            return Ok(c);
        }
        let len = self.ball_length();
        let ball = enumerate_ball(group, &len, window_radius, self.budget)?;
        let smallest = ball
            .elements()
            .iter()
            .map(|g| len.eval(group, g))
            .filter(|&v| v > 0.0)
            .fold(f64::INFINITY, f64::min);
        if !smallest.is_finite() {
            return Err(field("diameter_proxy", "window holds no nonzero length; supply one explicitly"));
        }
        Ok(2.0 / smallest)
    }
}
