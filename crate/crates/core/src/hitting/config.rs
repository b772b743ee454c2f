//! Experiment configuration shared by the hitting, recurrence and restart runs.

use serde::{Deserialize, Serialize};

use crate::dynamics::{IntegratorConfig, Potential, TabulatedProfile};
use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// Margin added to `N + 2 sup|grad U|` when the exit radius is not given.
pub const DEFAULT_K_MARGIN: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PotentialConfig {
    #[default]
    Zero,
    Cosine { amplitudes: Vec<f64> },
    /// Separable `U(z) = sum_i g(z_i)` with `g` interpolating `values` on a
    /// uniform grid of `[lo, hi]`.
    Tabulated { lo: f64, hi: f64, values: Vec<f64> },
}

impl PotentialConfig {
    pub fn build(&self, d: usize) -> Result<Potential<f64>> {
        match self {
            PotentialConfig::Zero => Ok(Potential::zero(d)),
            PotentialConfig::Cosine { amplitudes } => {
                if amplitudes.len() != d {
                    return Err(Error::Configuration(format!(
                        "potential.amplitudes: expected {d} entries, got {}",
                        amplitudes.len()
                    )));
                }
                Potential::cosine(amplitudes.clone())
            }
            PotentialConfig::Tabulated { lo, hi, values } => Ok(Potential::tabulated(
                d,
                TabulatedProfile::new(*lo, *hi, values.clone())
                    .map_err(|e| Error::Configuration(format!("potential: {e}")))?,
            )),
        }
    }
}

/// Initial field, identical in every component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    #[default]
    Zero,
    /// `amplitude * sin(mode pi x)`; its sup-norm is `|amplitude|`.
    Sine { amplitude: f64, mode: usize },
    /// `4 height x (1 - x)`.
    Parabola { height: f64 },
}

impl InitialCondition {
    pub fn build(&self, d: usize, n_x: usize) -> Result<GridFunction<f64>> {
        let f: Box<dyn Fn(f64) -> f64> = match *self {
            InitialCondition::Zero => Box::new(|_| 0.0),
            InitialCondition::Sine { amplitude, mode } => {
                if mode == 0 {
                    return Err(Error::Configuration("u0.mode: must be at least 1".into()));
                }
                Box::new(move |x| amplitude * crate::grid::sine_eigenfunction(mode, x) / std::f64::consts::SQRT_2)
            }
            InitialCondition::Parabola { height } => Box::new(move |x| 4.0 * height * x * (1.0 - x)),
        };
        Ok(GridFunction::from_fn(d, n_x, |x, out| out.iter_mut().for_each(|o| *o = f(x))))
    }

    pub fn sup_norm(&self) -> f64 {
        match *self {
            InitialCondition::Zero => 0.0,
            InitialCondition::Sine { amplitude, .. } => amplitude.abs(),
            InitialCondition::Parabola { height } => height.abs(),
        }
    }
}

/// Space-time window `I x J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub t: [f64; 2],
    pub x: [f64; 2],
}

impl Window {
    pub fn new(t: [f64; 2], x: [f64; 2]) -> Self {
        Self { t, x }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t[0] >= 0.0 && self.t[0] <= self.t[1] && self.t[1].is_finite()) {
            return Err(Error::Configuration(format!(
                "window.t: need 0 <= lo <= hi, got {:?}",
                self.t
            )));
        }
        if !(self.x[0] > 0.0 && self.x[0] <= self.x[1] && self.x[1] < 1.0) {
            return Err(Error::Configuration(format!(
                "window.x: need 0 < lo <= hi < 1, got {:?}",
                self.x
            )));
        }
        Ok(())
    }

    /// Node indices `j` with `x_j` in `J` on a grid of `n` intervals.
    pub fn nodes(&self, n: usize) -> std::ops::RangeInclusive<usize> {
        let nf = n as f64;
        let lo = (self.x[0] * nf - 1e-9).ceil().max(0.0) as usize;
        let hi = ((self.x[1] * nf + 1e-9).floor() as usize).min(n);
        lo..=hi
    }
}

fn default_d() -> usize {
    1
}
fn default_inner() -> f64 {
    1.0
}
fn default_box() -> f64 {
    2.0
}
fn default_window() -> Window {
    Window::new([1.0, 2.0], [0.2, 0.8])
}
fn default_horizon() -> f64 {
    2.0
}
fn default_dt() -> f64 {
    1e-3
}
fn default_n_x() -> usize {
    128
}
fn default_k_max() -> usize {
    128
}
fn default_trials() -> usize {
    2000
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_max_excursions() -> usize {
    20
}
fn default_time_cap() -> f64 {
    1e4
}

/// Parameters of a hitting or restart experiment. Field names map to the
/// usual symbols: `inner_radius` = N, `outer_radius` = K, `box_scale` = M,
/// `window.t` = I, `window.x` = J.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub u0: InitialCondition,
    #[serde(default = "default_inner")]
    pub inner_radius: f64,
    /// Defaults to `N + 2 sup|grad U| + 0.5`.
    #[serde(default)]
    pub outer_radius: Option<f64>,
    #[serde(default = "default_box")]
    pub box_scale: f64,
    #[serde(default = "default_window")]
    pub window: Window,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_n_x")]
    pub n_x: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Exponent of the capacity lower bound; recorded in reports only.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_excursions")]
    pub max_excursions: usize,
    /// Simulated-time budget per restart run; runs reaching it are censored.
    #[serde(default = "default_time_cap")]
    pub time_cap: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: default_d(),
            potential: PotentialConfig::Zero,
            u0: InitialCondition::Zero,
            inner_radius: default_inner(),
            outer_radius: None,
            box_scale: default_box(),
            window: default_window(),
            horizon: default_horizon(),
            dt: default_dt(),
            n_x: default_n_x(),
            k_max: default_k_max(),
            n_trials: default_trials(),
            seed: 0,
            epsilon: default_epsilon(),
            max_excursions: default_max_excursions(),
            time_cap: default_time_cap(),
        }
    }
}

impl ExperimentConfig {
    pub fn potential(&self) -> Result<Potential<f64>> {
        self.potential.build(self.d)
    }

    pub fn initial(&self) -> Result<GridFunction<f64>> {
        self.u0.build(self.d, self.n_x)
    }

    pub fn integrator(&self, horizon: f64) -> IntegratorConfig<f64> {
        IntegratorConfig {
            horizon,
            dt: self.dt,
            n_x: self.n_x,
            k_max: self.k_max,
            noise: true,
            record_noise: false,
            record_from: 0.0,
        }
    }

    /// Exit radius `K`, defaulted from the drift bound when absent.
    pub fn exit_radius(&self) -> Result<f64> {
        let g = self.potential()?.bounds()?.grad_sup;
        Ok(self
            .outer_radius
            .unwrap_or(self.inner_radius + 2.0 * g + DEFAULT_K_MARGIN))
    }

    /// Checks ranges; messages name the offending field.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::Configuration(format!("{field}: {msg}")));
        if self.d == 0 {
            return bad("d", "must be at least 1".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", format!("must be positive, got {}", self.dt));
        }
        if self.n_x < 2 {
            return bad("n_x", format!("must be at least 2, got {}", self.n_x));
        }
        if self.k_max == 0 {
            return bad("k_max", "must be at least 1".into());
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad("horizon", format!("must be positive, got {}", self.horizon));
        }
        if !(self.inner_radius > 0.0) {
            return bad("inner_radius", format!("must be positive, got {}", self.inner_radius));
        }
        if !(self.box_scale > 0.0) {
            return bad("box_scale", format!("must be positive, got {}", self.box_scale));
        }
        if self.n_trials == 0 {
            return bad("n_trials", "must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon", format!("must lie in (0, 1), got {}", self.epsilon));
        }
        if !(self.time_cap > 0.0) {
            return bad("time_cap", "must be positive".into());
        }
        self.window.validate()?;
        let pot = self.potential()?;
        let g = pot.bounds()?.grad_sup;
        if !pot.is_zero() && self.dt > crate::dynamics::MAX_DRIFT_DT {
            return bad(
                "dt",
                format!("must be at most {} with a drift", crate::dynamics::MAX_DRIFT_DT),
            );
        }
        let k = self.exit_radius()?;
        if !(k > self.inner_radius + 2.0 * g) {
            return bad(
                "outer_radius",
                format!(
                    "must exceed inner_radius + 2 sup|grad U| = {}",
                    self.inner_radius + 2.0 * g
                ),
            );
        }
        if let InitialCondition::Sine { mode: 0, .. } = self.u0 {
            return bad("u0.mode", "must be at least 1".into());
        }
        Ok(())
    }
}
