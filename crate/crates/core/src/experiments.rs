//! Monte Carlo batches, heatmaps, `u_min` sweeps and cycle detection.

use crate::control::ControlLaw;
use crate::env::sample_initial_state;
use crate::error::{Result, SitError};
use crate::integrate::{convergence_check, drive, simulate, SimConfig, Trajectory};
use crate::model::{ModelParams, Observation, SitState};
use crate::parallel::{map_indexed, Execution};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct BatchConfig {
    pub n_sims: usize,
    /// Initial conditions are uniform on `[0, ic_max]^4`.
    pub ic_max: f64,
    /// Days at which statistics are taken, ascending.
    pub checkpoints: Vec<f64>,
    pub law: ControlLaw,
    pub sim: SimConfig,
    pub params: ModelParams,
    pub master_seed: u64,
    /// Tolerance for counting a run as converged at its final state.
    pub convergence_eps: f64,
}

impl BatchConfig {
    pub fn new(law: ControlLaw, params: ModelParams) -> Self {
        Self {
            n_sims: 100,
            ic_max: 10.0 * params.k,
            checkpoints: vec![200.0, 400.0, 600.0, 800.0],
            law,
            sim: SimConfig::default(),
            params,
            master_seed: 0,
            convergence_eps: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sims == 0 {
            return Err(SitError::Argument("n_sims must be >= 1".into()));
        }
        if !(self.ic_max.is_finite() && self.ic_max >= 0.0) {
            return Err(SitError::Argument(format!("ic_max must be >= 0, got {}", self.ic_max)));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SitError::Argument("checkpoints must be strictly ascending".into()));
        }
        if self.checkpoints.iter().any(|c| !(*c >= 0.0 && *c <= self.sim.t_end)) {
            return Err(SitError::Argument(format!(
                "checkpoints must lie in [0, t_end = {}]",
                self.sim.t_end
            )));
        }
        self.sim.validate()?;
        self.params.validate()?;
        self.law.validate()
    }

    /// Seed of batch member `index`.
    pub fn run_seed(&self, index: usize) -> u64 {
        seed::derive_seed(self.master_seed, index as u64)
    }

    /// Initial condition of batch member `index`.
    pub fn initial_state(&self, index: usize) -> SitState {
        let mut rng = seed::stream(seed::derive_seed(self.run_seed(index), seed::IC_STREAM));
        sample_initial_state(&mut rng, self.ic_max)
    }

    /// Sterile-male level the law should settle to.
    pub fn target_ms(&self) -> f64 {
        self.law.resting_rate() / self.params.delta_s
    }
}

/// Mean, population variance and maximum of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Aggregate {
    pub mean: f64,
    pub variance: f64,
    pub max: f64,
}

impl Aggregate {
    /// Two-pass statistics in iteration order. Empty input gives all zeros.
    pub fn from_values(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self { mean, variance, max }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointStats {
    pub day: f64,
    /// Of `|E| + |M| + |F|`.
    pub pest: Aggregate,
    /// Of `|Ms|`.
    pub sterile: Aggregate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub index: usize,
    pub seed: u64,
    pub initial: SitState,
    /// State at each checkpoint, in checkpoint order.
    pub at_checkpoints: Vec<SitState>,
    pub final_state: SitState,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Completed(RunRecord),
    Failed {
        index: usize,
        seed: u64,
        initial: SitState,
        error: SitError,
    },
}

impl RunOutcome {
    pub fn record(&self) -> Option<&RunRecord> {
        match self {
            RunOutcome::Completed(r) => Some(r),
            RunOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsReport {
    pub checkpoints: Vec<CheckpointStats>,
    pub runs: Vec<RunOutcome>,
    pub n_converged: usize,
    pub n_failed: usize,
    pub target_ms: f64,
}

impl StatsReport {
    pub fn completed(&self) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter_map(RunOutcome::record)
    }
}

fn run_member(cfg: &BatchConfig, index: usize, checkpoint_steps: &[usize]) -> RunOutcome {
    let seed = cfg.run_seed(index);
    let initial = cfg.initial_state(index);
    let mut at_checkpoints = Vec::with_capacity(checkpoint_steps.len());
    let mut next = 0;
    let result = drive(
        &initial,
        &cfg.params,
        &cfg.law,
        &cfg.sim,
        seed::derive_seed(seed, seed::NOISE_STREAM),
        |n, sample| {
            while next < checkpoint_steps.len() && checkpoint_steps[next] == n {
                at_checkpoints.push(sample.state);
                next += 1;
            }
        },
    );
    match result {
        Ok(last) => {
            let target = cfg.target_ms();
            let s = last.state;
            let converged = s.pest_max().max((s.ms - target).abs()) <= cfg.convergence_eps;
            RunOutcome::Completed(RunRecord {
                index,
                seed,
                initial,
                at_checkpoints,
                final_state: s,
                converged,
            })
        }
        Err(error) => RunOutcome::Failed {
            index,
            seed,
            initial,
            error,
        },
    }
}

/// Runs the batch with the default execution mode.
pub fn run_batch(cfg: &BatchConfig) -> Result<StatsReport> {
    run_batch_with(cfg, Execution::default())
}

/// Member `i` draws its initial condition and noise from streams derived from
/// `derive_seed(master_seed, i)`; statistics are reduced in index order, so the
/// report does not depend on `exec`.
pub fn run_batch_with(cfg: &BatchConfig, exec: Execution) -> Result<StatsReport> {
    cfg.validate()?;
    let checkpoint_steps: Vec<usize> = cfg.checkpoints.iter().map(|d| cfg.sim.step_at(*d)).collect();
    let runs = map_indexed(cfg.n_sims, exec, |i| run_member(cfg, i, &checkpoint_steps));

    let n_failed = runs.iter().filter(|r| r.record().is_none()).count();
    if n_failed * 10 >= cfg.n_sims && n_failed > 0 {
        return Err(SitError::BatchFailed {
            failed: n_failed,
            total: cfg.n_sims,
        });
    }
    let completed: Vec<&RunRecord> = runs.iter().filter_map(RunOutcome::record).collect();
    let checkpoints = cfg
        .checkpoints
        .iter()
        .enumerate()
        .map(|(k, &day)| {
            let pest: Vec<f64> = completed.iter().map(|r| r.at_checkpoints[k].pest_sum()).collect();
            let sterile: Vec<f64> = completed.iter().map(|r| r.at_checkpoints[k].ms.abs()).collect();
            CheckpointStats {
                day,
                pest: Aggregate::from_values(&pest),
                sterile: Aggregate::from_values(&sterile),
            }
        })
        .collect();
    let n_converged = completed.iter().filter(|r| r.converged).count();
    Ok(StatsReport {
        checkpoints,
        runs,
        n_converged,
        n_failed,
        target_ms: cfg.target_ms(),
    })
}

/// `n` points log-spaced over `[lo, hi]`, endpoints included.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else {
                        10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)
                    }
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatmapGrid {
    pub m_range: (f64, f64),
    pub m_points: usize,
    pub f_range: (f64, f64),
    pub f_points: usize,
}

impl Default for HeatmapGrid {
    fn default() -> Self {
        Self {
            m_range: (1.0, 1e5),
            m_points: 50,
            f_range: (1.0, 1e5),
            f_points: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatmapRow {
    pub m_total: f64,
    pub f_total: f64,
    pub u: f64,
}

/// Evaluates `law` with noise disabled on the grid. Rows are ordered by
/// `f_total`, then `m_total`.
pub fn emit_heatmap(law: &ControlLaw, grid: &HeatmapGrid) -> Result<Vec<HeatmapRow>> {
    law.validate()?;
    let bounds = [grid.m_range.0, grid.m_range.1, grid.f_range.0, grid.f_range.1];
    if bounds.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
        return Err(SitError::Argument("heatmap bounds must be positive".into()));
    }
    let ms = log_space(grid.m_range.0, grid.m_range.1, grid.m_points);
    let fs = log_space(grid.f_range.0, grid.f_range.1, grid.f_points);
    Ok(fs
        .iter()
        .flat_map(|&f_total| {
            ms.iter().map(move |&m_total| HeatmapRow {
                m_total,
                f_total,
                u: law.evaluate_deterministic(&Observation { m_total, f_total }),
            })
        })
        .collect())
}

/// True iff, after `settle_time`, the `(E, M, F)` norm rises from below
/// `threshold` to above it at least twice.
pub fn detect_cycle(traj: &Trajectory, threshold: f64, settle_time: f64) -> bool {
    let mut armed = false;
    let mut upcrossings = 0;
    for s in traj.after(settle_time) {
        let norm = s.state.pest_norm();
        if norm < threshold {
            armed = true;
        } else if norm > threshold && armed {
            upcrossings += 1;
            armed = false;
        }
    }
    upcrossings >= 2
}

/// `sup |a - b| / sup |b|` over samples with `t >= from`; trajectories must
/// share their time grid.
pub fn sup_relative_difference(a: &Trajectory, b: &Trajectory, from: f64) -> f64 {
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for (x, y) in a.after(from).zip(b.after(from)) {
        num = num.max((x.state.pest_norm() - y.state.pest_norm()).abs());
        den = den.max(y.state.pest_norm());
    }
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCriteria {
    pub eps: f64,
    pub t_check: f64,
    pub cycle_threshold: f64,
    pub settle_time: f64,
}

impl Default for SweepCriteria {
    fn default() -> Self {
        Self {
            eps: 1.0,
            t_check: 1500.0,
            cycle_threshold: 100.0,
            settle_time: 500.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub u_min: f64,
    pub law: ControlLaw,
    pub trajectory: Trajectory,
    /// `convergence_check` against `u_min / delta_s`.
    pub converged: bool,
    pub cyclic: bool,
}

/// Minimum horizon for a sweep, in days.
pub const SWEEP_MIN_DAYS: f64 = 2000.0;

/// One simulation per `u_min` value, all from the same initial condition and seed.
pub fn umin_sweep(
    base: &ControlLaw,
    umin_values: &[f64],
    ic: &SitState,
    params: &ModelParams,
    sim: &SimConfig,
    criteria: &SweepCriteria,
    seed: u64,
) -> Result<Vec<SweepResult>> {
    if sim.t_end < SWEEP_MIN_DAYS {
        return Err(SitError::Argument(format!(
            "sweeps need t_end >= {SWEEP_MIN_DAYS} days, got {}",
            sim.t_end
        )));
    }
    umin_values
        .iter()
        .map(|&u_min| {
            let law = base.with_u_min(u_min)?;
            let trajectory = simulate(ic, params, &law, sim, seed)?;
            let converged = convergence_check(&trajectory, u_min / params.delta_s, criteria.eps, criteria.t_check)?;
            let cyclic = detect_cycle(&trajectory, criteria.cycle_threshold, criteria.settle_time);
            Ok(SweepResult {
                u_min,
                law,
                trajectory,
                converged,
                cyclic,
            })
        })
        .collect()
}
