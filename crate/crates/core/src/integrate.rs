//! Fixed-step time integration, trajectory recording and the empirical
//! convergence check.

use serde::{Deserialize, Serialize};

use crate::control::ControlLaw;
use crate::error::{Result, SitError};
use crate::model::{derivative_unchecked, observe, ModelParams, Observation, SitState};
use crate::seed;

/// Any component above this aborts a simulation.
pub const BLOWUP_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Euler,
    Rk4,
}

impl std::str::FromStr for Scheme {
    type Err = SitError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" | "explicit-euler" => Ok(Scheme::Euler),
            "rk4" => Ok(Scheme::Rk4),
            other => Err(SitError::Config(format!(
                "unknown scheme '{other}' (expected euler or rk4)"
            ))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Euler => "euler",
            Scheme::Rk4 => "rk4",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Step size in days.
    pub dt: f64,
    /// Horizon in days.
    pub t_end: f64,
    pub scheme: Scheme,
    /// Steps between control re-evaluations; the rate is held in between.
    pub control_update_interval: usize,
    /// Steps between recorded samples. The final state is always recorded.
    pub output_stride: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_end: 1000.0,
            scheme: Scheme::Euler,
            control_update_interval: 1,
            output_stride: 100,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(SitError::Argument(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(SitError::Argument(format!("t_end must be > 0, got {}", self.t_end)));
        }
        if self.control_update_interval == 0 || self.output_stride == 0 {
            return Err(SitError::Argument(
                "control_update_interval and output_stride must be >= 1".into(),
            ));
        }
        if self.n_steps() == 0 {
            return Err(SitError::Argument("t_end shorter than half a step".into()));
        }
        Ok(())
    }

    /// Number of steps, `round(t_end / dt)`.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Step index closest to `day`.
    pub fn step_at(&self, day: f64) -> usize {
        (day / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: SitState,
    /// Release rate applied from this sample onwards.
    pub u: f64,
    pub observation: Observation,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn final_state(&self) -> SitState {
        self.samples.last().map(|s| s.state).unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples with `t >= from`.
    pub fn after(&self, from: f64) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(move |s| s.t >= from)
    }
}

fn check_step_inputs(u: f64, dt: f64) -> Result<()> {
    if !(u.is_finite() && u >= 0.0) {
        return Err(SitError::Domain(format!(
            "release rate must be finite and >= 0, got {u}"
        )));
    }
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(SitError::Domain(format!("dt must be finite and >= 0, got {dt}")));
    }
    Ok(())
}

#[inline]
fn axpy(s: &SitState, h: f64, d: &crate::model::StateDerivative) -> SitState {
    SitState {
        e: s.e + h * d.de,
        m: s.m + h * d.dm,
        f: s.f + h * d.df,
        ms: s.ms + h * d.dms,
    }
}

#[inline]
fn clamp_nonneg(s: SitState) -> Result<SitState> {
    let a = s.as_array();
    if a.iter().any(|v| !v.is_finite()) {
        return Err(SitError::NonFiniteStep { state: a });
    }
    Ok(SitState::from_array(a.map(|v| v.max(0.0))))
}

/// One explicit Euler step, floored at zero component-wise.
pub fn euler_step(state: &SitState, params: &ModelParams, u: f64, dt: f64) -> Result<SitState> {
    state.validate()?;
    check_step_inputs(u, dt)?;
    euler_unchecked(state, params, u, dt)
}

#[inline]
fn euler_unchecked(state: &SitState, params: &ModelParams, u: f64, dt: f64) -> Result<SitState> {
    let d = derivative_unchecked(state, params, u);
    clamp_nonneg(axpy(state, dt, &d))
}

/// Classical four-stage Runge-Kutta step with `u` frozen across stages.
/// Stage states are floored at zero before evaluation; the result is floored
/// at zero as well.
pub fn rk4_step(state: &SitState, params: &ModelParams, u: f64, dt: f64) -> Result<SitState> {
    state.validate()?;
    check_step_inputs(u, dt)?;
    rk4_unchecked(state, params, u, dt)
}

#[inline]
fn rk4_unchecked(s: &SitState, p: &ModelParams, u: f64, dt: f64) -> Result<SitState> {
    let floor = |x: SitState| SitState::from_array(x.as_array().map(|v| v.max(0.0)));
    let k1 = derivative_unchecked(s, p, u);
    let k2 = derivative_unchecked(&floor(axpy(s, 0.5 * dt, &k1)), p, u);
    let k3 = derivative_unchecked(&floor(axpy(s, 0.5 * dt, &k2)), p, u);
    let k4 = derivative_unchecked(&floor(axpy(s, dt, &k3)), p, u);
    let w = dt / 6.0;
    clamp_nonneg(SitState {
        e: s.e + w * (k1.de + 2.0 * k2.de + 2.0 * k3.de + k4.de),
        m: s.m + w * (k1.dm + 2.0 * k2.dm + 2.0 * k3.dm + k4.dm),
        f: s.f + w * (k1.df + 2.0 * k2.df + 2.0 * k3.df + k4.df),
        ms: s.ms + w * (k1.dms + 2.0 * k2.dms + 2.0 * k3.dms + k4.dms),
    })
}

pub fn step(scheme: Scheme, state: &SitState, params: &ModelParams, u: f64, dt: f64) -> Result<SitState> {
    match scheme {
        Scheme::Euler => euler_step(state, params, u, dt),
        Scheme::Rk4 => rk4_step(state, params, u, dt),
    }
}

/// Drives a simulation, handing every sample at step `n` to `visit(n, sample)`
/// for all `n` in `0..=n_steps`. Returns the final sample.
pub(crate) fn drive(
    initial: &SitState,
    params: &ModelParams,
    law: &ControlLaw,
    cfg: &SimConfig,
    seed: u64,
    mut visit: impl FnMut(usize, &Sample),
) -> Result<Sample> {
    initial.validate()?;
    params.validate()?;
    law.validate()?;
    cfg.validate()?;

    let advance = match cfg.scheme {
        Scheme::Euler => euler_unchecked,
        Scheme::Rk4 => rk4_unchecked,
    };
    let mut rng = seed::stream(seed);
    let n_steps = cfg.n_steps();
    let interval = cfg.control_update_interval;
    let mut state = *initial;
    let mut u = 0.0;

    for n in 0..=n_steps {
        let obs = observe(&state);
        if n % interval == 0 {
            u = law.evaluate(&obs, &mut rng);
        }
        let sample = Sample {
            t: n as f64 * cfg.dt,
            state,
            u,
            observation: obs,
        };
        visit(n, &sample);
        if n == n_steps {
            return Ok(sample);
        }
        let t_next = (n + 1) as f64 * cfg.dt;
        state = advance(&state, params, u, cfg.dt).map_err(|e| match e {
            SitError::NonFiniteStep { state } => SitError::Blowup { t: t_next, state },
            other => other,
        })?;
        if state.as_array().iter().any(|v| *v > BLOWUP_LIMIT) {
            return Err(SitError::Blowup {
                t: t_next,
                state: state.as_array(),
            });
        }
    }
    unreachable!("loop returns at n == n_steps")
}

/// Integrates from `t = 0` to `t_end`, recording every `output_stride` steps
/// plus the final state. Noise draws come from a stream seeded by `seed`.
pub fn simulate(
    initial: &SitState,
    params: &ModelParams,
    law: &ControlLaw,
    cfg: &SimConfig,
    seed: u64,
) -> Result<Trajectory> {
    let n_steps = cfg.n_steps();
    let stride = cfg.output_stride.max(1);
    let mut samples = Vec::with_capacity(n_steps / stride + 2);
    drive(initial, params, law, cfg, seed, |n, s| {
        if n % stride == 0 || n == n_steps {
            samples.push(*s);
        }
    })?;
    Ok(Trajectory { samples })
}

/// True iff every sample with `t >= t_check` satisfies
/// `max(E, M, F, |Ms - target_ms|) <= eps`.
pub fn convergence_check(traj: &Trajectory, target_ms: f64, eps: f64, t_check: f64) -> Result<bool> {
    let last = traj
        .last()
        .ok_or_else(|| SitError::Argument("empty trajectory".into()))?;
    if t_check > last.t {
        return Err(SitError::Argument(format!(
            "t_check = {t_check} lies beyond the trajectory end {}",
            last.t
        )));
    }
    Ok(traj
        .after(t_check)
        .all(|s| s.state.pest_max().max((s.state.ms - target_ms).abs()) <= eps))
}
