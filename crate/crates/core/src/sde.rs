//! Stochastic simulation of the three-species activation and inhibition motifs.
//!
//! In both motifs Z is an unregulated birth-death process that activates X
//! through a Hill function. X then either activates Y (activation motif) or
//! represses it on top of a basal production rate (inhibition motif). Every
//! species decays linearly and receives additive white noise of amplitude
//! `sigma`. Integration is Euler-Maruyama with non-negativity enforced by
//! clamping each component at zero after every step.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, DataMatrix};

/// Generator used for every simulation; recorded in sidecar metadata.
pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha 0.9, seed_from_u64), normals via rand_distr 0.5 StandardNormal";

/// Noise amplitude used when none is given.
pub const DEFAULT_SIGMA: f64 = 20.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("parameter `{name}` = {value} is invalid: {reason}")]
    InvalidParameter { name: String, value: f64, reason: &'static str },
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("state component {component} is negative ({value})")]
    NegativeState { component: &'static str, value: f64 },
    #[error("state became non-finite at step {0}")]
    Diverged(usize),
    #[error("sampling plan invalid: {0}")]
    Plan(&'static str),
    #[error("mixture inputs differ in columns")]
    ColumnMismatch,
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Motif {
    Activation,
    Inhibition,
}

impl std::str::FromStr for Motif {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "activation" => Ok(Motif::Activation),
            "inhibition" => Ok(Motif::Inhibition),
            other => Err(format!("unknown model `{other}`")),
        }
    }
}

/// Numerator of the Y repression term in the inhibition motif.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepressionForm {
    /// `V_y * K_xy^n_y / (X^n_y + K_xy^n_y)`: equals `V_y` at X = 0.
    KScaled,
    /// `V_y / (X^n_y + K_xy^n_y)`.
    AsPrinted,
}

impl std::str::FromStr for RepressionForm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "k_scaled" | "k-scaled" => Ok(RepressionForm::KScaled),
            "as_printed" | "as-printed" => Ok(RepressionForm::AsPrinted),
            other => Err(format!("unknown repression form `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub motif: Motif,
    pub n_x: f64,
    pub n_y: f64,
    pub k_zx: f64,
    pub k_xy: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub k_z: f64,
    /// Basal Y production; unused by the activation motif.
    pub a_y: f64,
    pub beta_x: f64,
    pub beta_y: f64,
    pub beta_z: f64,
    pub sigma: f64,
    pub x0: f64,
    pub y0: f64,
    pub z0: f64,
    pub dt: f64,
    pub repression_form: RepressionForm,
}

impl ModelSpec {
    /// Activation motif parameters; fixed point (1000, 1000, 900).
    pub fn activation() -> Self {
        ModelSpec {
            motif: Motif::Activation,
            n_x: 2.0,
            n_y: 2.0,
            k_zx: 900.0,
            k_xy: 1000.0,
            v_x: 600.0,
            v_y: 600.0,
            k_z: 450.0,
            a_y: 0.0,
            beta_x: 0.3,
            beta_y: 0.3,
            beta_z: 0.5,
            sigma: DEFAULT_SIGMA,
            x0: 100.0,
            y0: 100.0,
            z0: 100.0,
            dt: 0.1,
            repression_form: RepressionForm::KScaled,
        }
    }

    /// Inhibition motif parameters; Z settles at 1100.
    pub fn inhibition() -> Self {
        ModelSpec {
            motif: Motif::Inhibition,
            n_x: 2.0,
            n_y: 2.0,
            k_zx: 4000.0,
            k_xy: 1000.0,
            v_x: 10000.0,
            v_y: 70.0,
            k_z: 110.0,
            a_y: 70.0,
            beta_x: 0.5,
            beta_y: 0.1,
            beta_z: 0.1,
            sigma: DEFAULT_SIGMA,
            x0: 100.0,
            y0: 1500.0,
            z0: 1000.0,
            dt: 0.1,
            repression_form: RepressionForm::KScaled,
        }
    }

    pub fn for_motif(motif: Motif) -> Self {
        match motif {
            Motif::Activation => Self::activation(),
            Motif::Inhibition => Self::inhibition(),
        }
    }

    pub const PARAMETER_NAMES: [&'static str; 16] =
        ["n_x", "n_y", "K_zx", "K_xy", "V_x", "V_y", "k_z", "a_y", "beta_x", "beta_y", "beta_z", "sigma", "X0", "Y0", "Z0", "dt"];

    /// Overrides one parameter by name. Names are case-sensitive except that
    /// the all-lowercase spelling is also accepted.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<(), SimError> {
        let slot = match name {
            "n_x" => &mut self.n_x,
            "n_y" => &mut self.n_y,
            "K_zx" | "k_zx" => &mut self.k_zx,
            "K_xy" | "k_xy" => &mut self.k_xy,
            "V_x" | "v_x" => &mut self.v_x,
            "V_y" | "v_y" => &mut self.v_y,
            "k_z" => &mut self.k_z,
            "a_y" | "alpha_y" => &mut self.a_y,
            "beta_x" => &mut self.beta_x,
            "beta_y" => &mut self.beta_y,
            "beta_z" => &mut self.beta_z,
            "sigma" => &mut self.sigma,
            "X0" | "x0" => &mut self.x0,
            "Y0" | "y0" => &mut self.y0,
            "Z0" | "z0" => &mut self.z0,
            "dt" => &mut self.dt,
            other => return Err(SimError::UnknownParameter(other.to_string())),
        };
        *slot = value;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |name: &str, value: f64, reason| Err(SimError::InvalidParameter { name: name.to_string(), value, reason });
        let positive = [
            ("n_x", self.n_x),
            ("n_y", self.n_y),
            ("K_zx", self.k_zx),
            ("K_xy", self.k_xy),
            ("V_x", self.v_x),
            ("V_y", self.v_y),
            ("k_z", self.k_z),
            ("beta_x", self.beta_x),
            ("beta_y", self.beta_y),
            ("beta_z", self.beta_z),
            ("dt", self.dt),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(name, v, "must be finite and strictly positive");
            }
        }
        if self.motif == Motif::Inhibition && !(self.a_y.is_finite() && self.a_y > 0.0) {
            return bad("a_y", self.a_y, "must be finite and strictly positive");
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return bad("sigma", self.sigma, "must be finite and non-negative");
        }
        for (name, v) in [("X0", self.x0), ("Y0", self.y0), ("Z0", self.z0)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(name, v, "must be finite and non-negative");
            }
        }
        Ok(())
    }

    /// Deterministic fixed point of the drift.
    pub fn fixed_point(&self) -> State {
        let z = self.k_z / self.beta_z;
        let x = hill(z, self.k_zx, self.n_x) * self.v_x / self.beta_x;
        let y = match self.motif {
            Motif::Activation => hill(x, self.k_xy, self.n_y) * self.v_y / self.beta_y,
            Motif::Inhibition => (self.a_y + self.repression(x)) / self.beta_y,
        };
        State { x, y, z }
    }

    fn repression(&self, x: f64) -> f64 {
        let kn = self.k_xy.powf(self.n_y);
        let denom = x.powf(self.n_y) + kn;
        match self.repression_form {
            RepressionForm::KScaled => self.v_y * kn / denom,
            RepressionForm::AsPrinted => self.v_y / denom,
        }
    }
}

/// `u^n / (u^n + k^n)`.
fn hill(u: f64, k: f64, n: f64) -> f64 {
    let un = u.powf(n);
    un / (un + k.powf(n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Drift of (X, Y, Z) per unit time.
pub fn drift(spec: &ModelSpec, s: State) -> Result<State, SimError> {
    for (component, value) in [("X", s.x), ("Y", s.y), ("Z", s.z)] {
        if value < 0.0 {
            return Err(SimError::NegativeState { component, value });
        }
    }
    Ok(drift_unchecked(spec, s))
}

fn drift_unchecked(spec: &ModelSpec, s: State) -> State {
    let dx = hill(s.z, spec.k_zx, spec.n_x) * spec.v_x - spec.beta_x * s.x;
    let dy = match spec.motif {
        Motif::Activation => hill(s.x, spec.k_xy, spec.n_y) * spec.v_y - spec.beta_y * s.y,
        Motif::Inhibition => spec.a_y + spec.repression(s.x) - spec.beta_y * s.y,
    };
    let dz = spec.k_z - spec.beta_z * s.z;
    State { x: dx, y: dy, z: dz }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub burn_in: usize,
    pub thin: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan { burn_in: 300, thin: 20, samples: 500, seed: 0 }
    }
}

impl SamplingPlan {
    pub fn total_steps(&self) -> usize {
        self.burn_in + self.samples * self.thin
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.thin == 0 {
            return Err(SimError::Plan("thin must be at least 1"));
        }
        if self.samples == 0 {
            return Err(SimError::Plan("samples must be at least 1"));
        }
        Ok(())
    }
}

/// Runs the integrator and returns the retained states as rows of X, Y, Z.
///
/// After `burn_in` steps every `thin`-th state is kept, for
/// `burn_in + samples * thin` steps in total.
pub fn simulate(spec: &ModelSpec, plan: &SamplingPlan) -> Result<DataMatrix, SimError> {
    spec.validate()?;
    plan.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(plan.seed);
    let noise = spec.sigma * spec.dt.sqrt();
    let mut s = State { x: spec.x0, y: spec.y0, z: spec.z0 };
    let mut rows = Vec::with_capacity(plan.samples);
    for step in 1..=plan.total_steps() {
        let d = drift_unchecked(spec, s);
        let xi: [f64; 3] = [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)];
        let next = [s.x + d.x * spec.dt + noise * xi[0], s.y + d.y * spec.dt + noise * xi[1], s.z + d.z * spec.dt + noise * xi[2]];
        // checked before clamping: f64::max would turn NaN into 0
        if next.iter().any(|v| !v.is_finite()) {
            return Err(SimError::Diverged(step));
        }
        s = State { x: next[0].max(0.0), y: next[1].max(0.0), z: next[2].max(0.0) };
        if step > plan.burn_in && (step - plan.burn_in).is_multiple_of(plan.thin) {
            rows.push(vec![s.x, s.y, s.z]);
        }
    }
    Ok(DataMatrix::from_rows(&["X", "Y", "Z"], &rows)?)
}

/// Reproducibility record written next to simulated data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub spec: ModelSpec,
    pub plan: SamplingPlan,
    pub seed: u64,
    pub rng: String,
}

impl SimulationRecord {
    pub fn new(spec: &ModelSpec, plan: &SamplingPlan) -> Self {
        SimulationRecord { spec: *spec, plan: *plan, seed: plan.seed, rng: RNG_ALGORITHM.to_string() }
    }
}

/// Concatenates labelled matrices. Observation ids become `label:original_id`.
pub fn make_mixture(parts: &[(&str, &DataMatrix)]) -> Result<DataMatrix, SimError> {
    let Some((_, first)) = parts.first() else {
        return Err(SimError::ColumnMismatch);
    };
    let names = first.variable_names();
    let mut rows = Vec::new();
    let mut ids = Vec::new();
    for (label, m) in parts {
        if m.variable_names() != names {
            return Err(SimError::ColumnMismatch);
        }
        for r in 0..m.n_rows() {
            let row: Option<Vec<f64>> = (0..m.n_cols()).map(|c| m.get(r, c)).collect();
            rows.push(row.ok_or(SimError::Data(DataError::Shape("mixture inputs must be complete".into())))?);
            ids.push(format!("{label}:{}", m.observation_ids()[r]));
        }
    }
    Ok(DataMatrix::from_rows(names, &rows)?.with_ids(ids)?)
}

/// Simulates both motifs with the given plan and mixes them. The inhibition
/// run uses `seed + 1` so the two noise streams are independent.
pub fn simulate_mixture(activation: &ModelSpec, inhibition: &ModelSpec, plan: &SamplingPlan) -> Result<DataMatrix, SimError> {
    let a = simulate(activation, plan)?;
    let b = simulate(inhibition, &SamplingPlan { seed: plan.seed.wrapping_add(1), ..*plan })?;
    make_mixture(&[("activation", &a), ("inhibition", &b)])
}
