//! Partially observed training environment with reset/step semantics.
//!
//! An episode starts from a uniform random state in `[0, ic_max]^4`. Each
//! action in `[-1, 1]` is mapped affinely onto a release rate in
//! `[0, action_u_max]` and held for `substeps_per_action` explicit Euler steps.
//! The agent only sees the two observable totals, scaled into `[0, 1]`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SitError};
use crate::integrate::euler_step;
use crate::model::{observe, ModelParams, SitState};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub dt: f64,
    pub substeps_per_action: usize,
    pub horizon_steps: usize,
    pub ic_max: f64,
    pub action_u_max: f64,
    pub obs_scale: f64,
    pub c1: f64,
    pub c3: f64,
    pub c4: f64,
    /// Fraction of the horizon after which the sterile-male penalty grows by `c4`.
    pub switch_fraction: f64,
    pub params: ModelParams,
    pub seed: u64,
}

impl EnvConfig {
    /// Defaults scaled by the capacity `K` of `params`.
    pub fn for_params(params: ModelParams) -> Self {
        let ic_max = 10.0 * params.k;
        Self {
            dt: 0.01,
            substeps_per_action: 700,
            horizon_steps: 143,
            ic_max,
            action_u_max: 10.0 * params.k,
            obs_scale: 2.0 * ic_max,
            c1: 0.1,
            c3: 0.001,
            c4: 0.01,
            switch_fraction: 0.9,
            params,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let positive = [
            ("dt", self.dt),
            ("ic_max", self.ic_max),
            ("action_u_max", self.action_u_max),
            ("obs_scale", self.obs_scale),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SitError::Argument(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.substeps_per_action == 0 || self.horizon_steps == 0 {
            return Err(SitError::Argument(
                "substeps_per_action and horizon_steps must be >= 1".into(),
            ));
        }
        if [self.c1, self.c3, self.c4]
            .iter()
            .any(|c| !(c.is_finite() && *c >= 0.0))
        {
            return Err(SitError::Argument("reward weights must be finite and >= 0".into()));
        }
        if !(self.switch_fraction > 0.0 && self.switch_fraction < 1.0) {
            return Err(SitError::Argument(format!(
                "switch_fraction must lie in (0, 1), got {}",
                self.switch_fraction
            )));
        }
        Ok(())
    }

    /// Simulated days per episode.
    pub fn episode_days(&self) -> f64 {
        (self.substeps_per_action * self.horizon_steps) as f64 * self.dt
    }

    /// First action index that carries the extra sterile-male penalty.
    pub fn penalty_switch_step(&self) -> usize {
        (self.switch_fraction * self.horizon_steps as f64).ceil() as usize
    }
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self::for_params(ModelParams::default())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub state: SitState,
    pub step_index: usize,
    pub rng: ChaCha8Rng,
}

impl EnvState {
    pub fn is_done(&self, cfg: &EnvConfig) -> bool {
        self.step_index >= cfg.horizon_steps
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub observation: [f64; 2],
    pub reward: f64,
    pub done: bool,
    /// Release rate applied during the step.
    pub u: f64,
}

/// Draws each compartment independently and uniformly from `[0, ic_max]`,
/// in the order E, M, F, Ms.
pub fn sample_initial_state<R: Rng + ?Sized>(rng: &mut R, ic_max: f64) -> SitState {
    SitState {
        e: rng.random_range(0.0..=ic_max),
        m: rng.random_range(0.0..=ic_max),
        f: rng.random_range(0.0..=ic_max),
        ms: rng.random_range(0.0..=ic_max),
    }
}

pub fn normalized_observation(state: &SitState, cfg: &EnvConfig) -> [f64; 2] {
    let obs = observe(state);
    [
        (obs.m_total / cfg.obs_scale).min(1.0),
        (obs.f_total / cfg.obs_scale).min(1.0),
    ]
}

pub fn reset(cfg: &EnvConfig, episode_seed: u64) -> Result<(EnvState, [f64; 2])> {
    cfg.validate()?;
    let mut rng = seed::stream(seed::derive_seed(cfg.seed, episode_seed));
    let state = sample_initial_state(&mut rng, cfg.ic_max);
    let obs = normalized_observation(&state, cfg);
    Ok((
        EnvState {
            state,
            step_index: 0,
            rng,
        },
        obs,
    ))
}

/// `u = (a + 1) / 2 * action_u_max`, after clamping `a` into `[-1, 1]`.
pub fn map_action(a: f64, cfg: &EnvConfig) -> Result<f64> {
    if !a.is_finite() {
        return Err(SitError::Argument(format!("action must be finite, got {a}")));
    }
    let a = a.clamp(-1.0, 1.0);
    Ok((a + 1.0) / 2.0 * cfg.action_u_max)
}

/// Penalty `-(c1 |(E, M, F)|_2 + c2 Ms)`, with `c2 = c3` before the switch
/// step and `c3 + c4` from it onwards.
pub fn compute_reward(state: &SitState, step_index: usize, cfg: &EnvConfig) -> f64 {
    let c2 = if step_index < cfg.penalty_switch_step() {
        cfg.c3
    } else {
        cfg.c3 + cfg.c4
    };
    -(cfg.c1 * state.pest_norm() + c2 * state.ms.abs())
}

/// Applies one action. The reward uses the index of the action being taken
/// (`step_index` before the increment) and the state after the advance.
pub fn step(env: &mut EnvState, a: f64, cfg: &EnvConfig) -> Result<StepOutcome> {
    if env.is_done(cfg) {
        return Err(SitError::EpisodeDone);
    }
    let u = map_action(a, cfg)?;
    let mut state = env.state;
    for _ in 0..cfg.substeps_per_action {
        state = euler_step(&state, &cfg.params, u, cfg.dt)?;
    }
    let reward = compute_reward(&state, env.step_index, cfg);
    env.state = state;
    env.step_index += 1;
    Ok(StepOutcome {
        observation: normalized_observation(&state, cfg),
        reward,
        done: env.is_done(cfg),
        u,
    })
}

/// Owns a configuration and the current episode.
#[derive(Debug, Clone)]
pub struct Environment {
    cfg: EnvConfig,
    current: Option<EnvState>,
}

impl Environment {
    pub fn new(cfg: EnvConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, current: None })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn state(&self) -> Option<&EnvState> {
        self.current.as_ref()
    }

    pub fn reset(&mut self, episode_seed: u64) -> Result<[f64; 2]> {
        let (state, obs) = reset(&self.cfg, episode_seed)?;
        self.current = Some(state);
        Ok(obs)
    }

    pub fn step(&mut self, a: f64) -> Result<StepOutcome> {
        let env = self.current.as_mut().ok_or(SitError::EpisodeDone)?;
        step(env, a, &self.cfg)
    }
}

/// One line of a rollout transcript. Row 0 holds the initial state and has no
/// action, rate or reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranscriptRow {
    pub step: usize,
    pub action: Option<f64>,
    pub u: Option<f64>,
    pub state: SitState,
    pub reward: Option<f64>,
    pub done: bool,
}

/// Resets with `episode_seed` and plays `actions` in order.
pub fn rollout(cfg: &EnvConfig, episode_seed: u64, actions: &[f64]) -> Result<Vec<TranscriptRow>> {
    let (mut env, _) = reset(cfg, episode_seed)?;
    let mut rows = Vec::with_capacity(actions.len() + 1);
    rows.push(TranscriptRow {
        step: 0,
        action: None,
        u: None,
        state: env.state,
        reward: None,
        done: false,
    });
    for &a in actions {
        let out = step(&mut env, a, cfg)?;
        rows.push(TranscriptRow {
            step: env.step_index,
            action: Some(a),
            u: Some(out.u),
            state: env.state,
            reward: Some(out.reward),
            done: out.done,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_give_1001_days() {
        let cfg = EnvConfig::default();
        assert!((cfg.episode_days() - 1001.0).abs() < 1e-9);
        assert_eq!(cfg.penalty_switch_step(), 129);
        assert_eq!(cfg.ic_max, 5e5);
        assert_eq!(cfg.obs_scale, 1e6);
    }

    #[test]
    fn action_mapping() {
        let cfg = EnvConfig::default();
        assert_eq!(map_action(-1.0, &cfg).unwrap(), 0.0);
        assert_eq!(map_action(1.0, &cfg).unwrap(), 500_000.0);
        assert_eq!(map_action(0.0, &cfg).unwrap(), 250_000.0);
        assert_eq!(map_action(7.0, &cfg).unwrap(), 500_000.0);
        assert_eq!(map_action(-3.0, &cfg).unwrap(), 0.0);
        assert!(map_action(f64::NAN, &cfg).is_err());
    }

    #[test]
    fn reward_examples() {
        let cfg = EnvConfig::default();
        let s = SitState {
            e: 3.0,
            m: 4.0,
            f: 0.0,
            ms: 10.0,
        };
        assert!((compute_reward(&s, 10, &cfg) + 0.51).abs() < 1e-12);
        assert!((compute_reward(&s, 130, &cfg) + 0.61).abs() < 1e-12);
        assert!((compute_reward(&s, 128, &cfg) + 0.51).abs() < 1e-12);
        assert!((compute_reward(&s, 129, &cfg) + 0.61).abs() < 1e-12);
        assert_eq!(compute_reward(&SitState::ZERO, 50, &cfg), 0.0);
    }

    #[test]
    fn reset_is_deterministic_and_bounded() {
        let cfg = EnvConfig::default();
        let (a, oa) = reset(&cfg, 42).unwrap();
        let (b, ob) = reset(&cfg, 42).unwrap();
        assert_eq!(a.state, b.state);
        assert_eq!(oa, ob);
        assert_eq!(a.step_index, 0);
        for seed in 0..200 {
            let (s, _) = reset(&cfg, seed).unwrap();
            assert!(s.state.as_array().iter().all(|v| (0.0..=5e5).contains(v)));
        }
    }

    #[test]
    fn initial_mean_is_half_ic_max() {
        let cfg = EnvConfig::default();
        let n = 10_000;
        let mean = (0..n).map(|s| reset(&cfg, s).unwrap().0.state.e).sum::<f64>() / n as f64;
        assert!((mean - 2.5e5).abs() < 0.02 * 2.5e5, "mean = {mean}");
    }

    #[test]
    fn sterile_decay_over_one_action() {
        let cfg = EnvConfig::default();
        let (mut env, _) = reset(&cfg, 0).unwrap();
        env.state = SitState {
            ms: 100.0,
            ..SitState::ZERO
        };
        let out = step(&mut env, -1.0, &cfg).unwrap();
        let expected = 100.0 * (1.0f64 - 0.0012).powi(700);
        assert!((env.state.ms - expected).abs() < 1e-9);
        assert!((env.state.ms - 43.15).abs() < 0.01);
        assert_eq!(env.step_index, 1);
        assert!(!out.done);
        assert_eq!(out.u, 0.0);
    }

    #[test]
    fn episode_ends_after_horizon() {
        let cfg = EnvConfig::default();
        let mut env = Environment::new(cfg).unwrap();
        assert!(env.step(0.0).is_err());
        env.reset(3).unwrap();
        for k in 1..=143 {
            let out = env.step(0.5).unwrap();
            assert_eq!(out.done, k == 143);
            assert!(out.reward <= 0.0);
            assert!(out.observation.iter().all(|o| (0.0..=1.0).contains(o)));
        }
        assert_eq!(env.step(0.5), Err(SitError::EpisodeDone));
    }

    #[test]
    fn rollout_transcript_layout() {
        let cfg = EnvConfig::default();
        let rows = rollout(&cfg, 9, &[1.0, -1.0, 0.0]).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].action, None);
        assert_eq!(rows[3].step, 3);
        assert_eq!(rows[1].u, Some(5e5));
        assert!(rollout(&cfg, 9, &vec![0.0; 144]).is_err());
    }

    #[test]
    fn config_validation() {
        let d = EnvConfig::default;
        assert!(EnvConfig {
            switch_fraction: 1.0,
            ..d()
        }
        .validate()
        .is_err());
        assert!(EnvConfig { c4: -1.0, ..d() }.validate().is_err());
        assert!(Environment::new(EnvConfig {
            substeps_per_action: 0,
            ..d()
        })
        .is_err());
    }
}
