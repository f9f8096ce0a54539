//! `sit`: command-line front end for the sit-core toolkit.
//!
//! Configuration is layered: built-in defaults, then `--params <file>`, then
//! `--set key=value` overrides, then the dedicated flags. The resolved
//! configuration is written as a `#` comment block at the top of every output
//! file, so any output can be reproduced from its own header.
//!
//! Exit status is 0 on success, 2 on usage or configuration errors and 1 on
//! runtime failures.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sit_core::config::{ControlKind, RunConfig};
use sit_core::env::{self, EnvConfig};
use sit_core::experiments::{emit_heatmap, umin_sweep, HeatmapGrid, SweepCriteria, SWEEP_MIN_DAYS};
use sit_core::export;
use sit_core::model::{critical_constant_control, persistence_equilibrium};
use sit_core::{run_batch, simulate, BatchConfig, Scheme, SitError};

#[derive(Parser, Debug)]
#[command(name = "sit", version, about = "Sterile insect technique simulations")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ControlArg {
    Constant,
    Ureg,
    Vreg,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SchemeArg {
    Euler,
    Rk4,
}

#[derive(Args, Debug)]
struct Common {
    /// Configuration file (flat TOML keys).
    #[arg(long, global = true, value_name = "FILE")]
    params: Option<PathBuf>,
    /// Override any configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, global = true, value_enum)]
    control: Option<ControlArg>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true, value_enum)]
    scheme: Option<SchemeArg>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long = "t-end", global = true)]
    t_end: Option<f64>,
    #[arg(long = "u-bar", global = true)]
    u_bar: Option<f64>,
    #[arg(long = "u-min", global = true)]
    u_min: Option<f64>,
    #[arg(long = "u-max", global = true)]
    u_max: Option<f64>,
    #[arg(long, global = true)]
    alpha1: Option<f64>,
    #[arg(long, global = true)]
    alpha2: Option<f64>,
    #[arg(long = "m-thr", global = true)]
    m_thr: Option<f64>,
    #[arg(long = "noise-sigma", global = true)]
    noise_sigma: Option<f64>,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    force: bool,
    /// Print the fully resolved configuration and exit.
    #[arg(long = "dump-config", global = true)]
    dump_config: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one trajectory and write it as CSV.
    Simulate {
        #[arg(long)]
        e0: Option<f64>,
        #[arg(long)]
        m0: Option<f64>,
        #[arg(long)]
        f0: Option<f64>,
        #[arg(long)]
        ms0: Option<f64>,
        /// Record every n-th integrator step.
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Monte Carlo batch from random initial conditions.
    Batch {
        #[arg(long = "n-sims")]
        n_sims: Option<usize>,
        /// Comma-separated checkpoint days.
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<f64>>,
    },
    /// Evaluate the control law on a log-spaced grid.
    Heatmap {
        #[arg(long = "m-min", default_value_t = 1.0)]
        m_min: f64,
        #[arg(long = "m-max", default_value_t = 1e5)]
        m_max: f64,
        #[arg(long = "m-points", default_value_t = 50)]
        m_points: usize,
        #[arg(long = "f-min", default_value_t = 1.0)]
        f_min: f64,
        #[arg(long = "f-max", default_value_t = 1e5)]
        f_max: f64,
        #[arg(long = "f-points", default_value_t = 50)]
        f_points: usize,
    },
    /// Simulate the same initial condition for several u_min values.
    Sweep {
        #[arg(long = "u-min-values", value_delimiter = ',', default_value = "0,0.001,1,5")]
        u_min_values: Vec<f64>,
    },
    /// Play an action file through the environment.
    EnvRollout {
        /// One action in [-1, 1] per line; blank lines and `#` comments are skipped.
        #[arg(long, value_name = "FILE")]
        actions: PathBuf,
        #[arg(long = "episode-seed", default_value_t = 0)]
        episode_seed: u64,
    },
    /// Print the persistence equilibrium and the critical constant release.
    Equilibria,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<SitError> for CliError {
    fn from(e: SitError) -> Self {
        match e {
            SitError::Config(_) | SitError::Argument(_) | SitError::Domain(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("sit: error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("sit: error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Parses `key=value` pairs as TOML, retrying with the value quoted so that
/// `control=vreg` works without shell quoting.
fn parse_overrides(pairs: &[String]) -> CliResult<RunConfig> {
    let mut merged = RunConfig::default();
    for pair in pairs {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got '{pair}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let one = RunConfig::from_toml_str(&format!("{key} = {value}"))
            .or_else(|_| RunConfig::from_toml_str(&format!("{key} = \"{value}\"")))?;
        merged.overlay(&one);
    }
    Ok(merged)
}

fn flag_overrides(c: &Common) -> RunConfig {
    RunConfig {
        control: c.control.map(|k| match k {
            ControlArg::Constant => ControlKind::Constant,
            ControlArg::Ureg => ControlKind::Ureg,
            ControlArg::Vreg => ControlKind::Vreg,
        }),
        seed: c.seed,
        scheme: c.scheme.map(|s| match s {
            SchemeArg::Euler => Scheme::Euler,
            SchemeArg::Rk4 => Scheme::Rk4,
        }),
        dt: c.dt,
        t_end: c.t_end,
        u_bar: c.u_bar,
        u_min: c.u_min,
        u_max: c.u_max,
        alpha1: c.alpha1,
        alpha2: c.alpha2,
        m_thr: c.m_thr,
        noise_sigma: c.noise_sigma,
        ..RunConfig::default()
    }
}

fn subcommand_overrides(cmd: &Command) -> RunConfig {
    match cmd {
        Command::Simulate {
            e0,
            m0,
            f0,
            ms0,
            stride,
        } => RunConfig {
            e0: *e0,
            m0: *m0,
            f0: *f0,
            ms0: *ms0,
            output_stride: *stride,
            ..RunConfig::default()
        },
        Command::Batch { n_sims, checkpoints } => RunConfig {
            n_sims: *n_sims,
            checkpoints: checkpoints.clone(),
            ..RunConfig::default()
        },
        _ => RunConfig::default(),
    }
}

fn build_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.common.params {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    cfg.overlay(&parse_overrides(&cli.common.set)?);
    cfg.overlay(&flag_overrides(&cli.common));
    cfg.overlay(&subcommand_overrides(&cli.command));
    if matches!(cli.command, Command::Sweep { .. }) && cfg.t_end.is_none() {
        cfg.t_end = Some(SWEEP_MIN_DAYS);
    }
    Ok(cfg)
}

fn provenance(command: &str, resolved: &RunConfig, extra: &[String]) -> Vec<String> {
    let mut lines = vec![format!("sit {} {command}", env!("CARGO_PKG_VERSION"))];
    lines.extend(extra.iter().cloned());
    lines.extend(resolved.to_toml_string().lines().map(str::to_string));
    lines
}

fn create_output(dir: &Path, name: &str, force: bool) -> CliResult<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    if path.exists() && !force {
        return Err(CliError::Usage(format!(
            "{} exists; pass --force to overwrite",
            path.display()
        )));
    }
    Ok(BufWriter::new(File::create(&path)?))
}

fn read_actions(path: &Path) -> CliResult<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .map(|(i, l)| (i, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            let a: f64 = l
                .parse()
                .map_err(|_| CliError::Usage(format!("{}:{}: not a number: '{l}'", path.display(), i + 1)))?;
            if !(-1.0..=1.0).contains(&a) {
                return Err(CliError::Usage(format!(
                    "{}:{}: action {a} outside [-1, 1]",
                    path.display(),
                    i + 1
                )));
            }
            Ok(a)
        })
        .collect()
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = build_config(&cli)?;
    let resolved = cfg.resolved()?;
    if cli.common.dump_config {
        print!("{}", resolved.to_toml_string());
        return Ok(());
    }
    let out = &cli.common.out;
    let force = cli.common.force;
    let params = cfg.params()?;

    match &cli.command {
        Command::Simulate { .. } => {
            let traj = simulate(&cfg.initial_state()?, &params, &cfg.law()?, &cfg.sim()?, cfg.seed())?;
            let mut w = create_output(out, "trajectory.csv", force)?;
            export::write_trajectory(&mut w, &traj, &provenance("simulate", &resolved, &[]))?;
            w.flush()?;
            let s = traj.final_state();
            println!(
                "t = {}: E = {:.6e}, M = {:.6e}, F = {:.6e}, Ms = {:.6e}",
                traj.last().map_or(0.0, |l| l.t),
                s.e,
                s.m,
                s.f,
                s.ms
            );
        }
        Command::Batch { .. } => {
            let mut batch = BatchConfig::new(cfg.law()?, params);
            batch.n_sims = cfg.n_sims();
            batch.checkpoints = cfg.checkpoints();
            batch.sim = cfg.sim()?;
            batch.master_seed = cfg.seed();
            let report = run_batch(&batch)?;
            let prov = provenance("batch", &resolved, &[]);
            let mut text = create_output(out, "stats.txt", force)?;
            let mut csv = create_output(out, "stats.csv", force)?;
            let mut runs = create_output(out, "runs.csv", force)?;
            export::write_stats_report(&mut text, &report, &prov)?;
            export::write_stats_csv(&mut csv, &report, &prov)?;
            export::write_runs_csv(&mut runs, &report, &prov)?;
            for w in [&mut text, &mut csv, &mut runs] {
                w.flush()?;
            }
            export::write_stats_report(&mut io::stdout().lock(), &report, &[])?;
        }
        Command::Heatmap {
            m_min,
            m_max,
            m_points,
            f_min,
            f_max,
            f_points,
        } => {
            let grid = HeatmapGrid {
                m_range: (*m_min, *m_max),
                m_points: *m_points,
                f_range: (*f_min, *f_max),
                f_points: *f_points,
            };
            let rows = emit_heatmap(&cfg.law()?, &grid)?;
            let extra = [format!(
                "grid m_total [{m_min}, {m_max}] x {m_points}, f_total [{f_min}, {f_max}] x {f_points}"
            )];
            let mut w = create_output(out, "heatmap.csv", force)?;
            export::write_heatmap(&mut w, &rows, &provenance("heatmap", &resolved, &extra))?;
            w.flush()?;
            println!("{} grid points written", rows.len());
        }
        Command::Sweep { u_min_values } => {
            let results = umin_sweep(
                &cfg.law()?,
                u_min_values,
                &cfg.initial_state()?,
                &params,
                &cfg.sim()?,
                &SweepCriteria::default(),
                cfg.seed(),
            )?;
            let values = u_min_values.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
            let prov = provenance("sweep", &resolved, &[format!("u_min values {values}")]);
            let mut summary = create_output(out, "sweep.csv", force)?;
            export::write_sweep_summary(&mut summary, &results, &prov)?;
            summary.flush()?;
            for r in &results {
                let mut w = create_output(out, &format!("sweep_umin_{}.csv", r.u_min), force)?;
                export::write_trajectory(&mut w, &r.trajectory, &prov)?;
                w.flush()?;
                println!(
                    "u_min = {}: converged = {}, cyclic = {}",
                    r.u_min, r.converged, r.cyclic
                );
            }
        }
        Command::EnvRollout { actions, episode_seed } => {
            let actions = read_actions(actions)?;
            let mut env_cfg = EnvConfig::for_params(params);
            env_cfg.seed = cfg.seed();
            if actions.len() > env_cfg.horizon_steps {
                return Err(CliError::Usage(format!(
                    "{} actions exceed the {}-step horizon",
                    actions.len(),
                    env_cfg.horizon_steps
                )));
            }
            let rows = env::rollout(&env_cfg, *episode_seed, &actions)?;
            let extra = [format!("episode_seed = {episode_seed}")];
            let mut w = create_output(out, "rollout.csv", force)?;
            export::write_rollout(&mut w, &rows, &provenance("env-rollout", &resolved, &extra))?;
            w.flush()?;
            let total: f64 = rows.iter().filter_map(|r| r.reward).sum();
            println!("{} steps, total reward {total:.6e}", rows.len() - 1);
        }
        Command::Equilibria => {
            let eq = persistence_equilibrium(&params)?;
            println!("E* = {}", eq.e);
            println!("M* = {}", eq.m);
            println!("F* = {}", eq.f);
            println!("U* = {}", critical_constant_control(&params)?);
        }
    }
    Ok(())
}
