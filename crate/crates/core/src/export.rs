//! Delimited-text and report writers.
//!
//! Every writer takes provenance lines that are emitted first, each prefixed
//! with `# `. Floating-point fields use the shortest representation that
//! round-trips, so files can be compared bit-exactly.

use std::io::{self, Write};

use crate::env::TranscriptRow;
use crate::experiments::{HeatmapRow, RunOutcome, StatsReport, SweepResult};
use crate::integrate::Trajectory;
use crate::model::unfertilized_females;

pub const TRAJECTORY_HEADER: &str = "t,E,M,F,Ms,Fs,u,m_total,f_total";
pub const ROLLOUT_HEADER: &str = "step,action,u,E,M,F,Ms,reward,done";
pub const HEATMAP_HEADER: &str = "m_total,f_total,u";
pub const STATS_HEADER: &str = "day,statistic,pest_sum,sterile";

fn provenance<W: Write>(w: &mut W, lines: &[String]) -> io::Result<()> {
    for line in lines {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_trajectory<W: Write>(w: &mut W, traj: &Trajectory, prov: &[String]) -> io::Result<()> {
    provenance(w, prov)?;
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for s in &traj.samples {
        let st = &s.state;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            s.t,
            st.e,
            st.m,
            st.f,
            st.ms,
            unfertilized_females(st),
            s.u,
            s.observation.m_total,
            s.observation.f_total
        )?;
    }
    Ok(())
}

pub fn write_rollout<W: Write>(w: &mut W, rows: &[TranscriptRow], prov: &[String]) -> io::Result<()> {
    provenance(w, prov)?;
    writeln!(w, "{ROLLOUT_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.step,
            opt(r.action),
            opt(r.u),
            r.state.e,
            r.state.m,
            r.state.f,
            r.state.ms,
            opt(r.reward),
            r.done
        )?;
    }
    Ok(())
}

pub fn write_heatmap<W: Write>(w: &mut W, rows: &[HeatmapRow], prov: &[String]) -> io::Result<()> {
    provenance(w, prov)?;
    writeln!(w, "{HEATMAP_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.m_total, r.f_total, r.u)?;
    }
    Ok(())
}

/// Long-format statistics: one row per checkpoint and statistic.
pub fn write_stats_csv<W: Write>(w: &mut W, report: &StatsReport, prov: &[String]) -> io::Result<()> {
    provenance(w, prov)?;
    writeln!(w, "{STATS_HEADER}")?;
    for c in &report.checkpoints {
        for (name, p, s) in [
            ("average", c.pest.mean, c.sterile.mean),
            ("variance", c.pest.variance, c.sterile.variance),
            ("maximum", c.pest.max, c.sterile.max),
        ] {
            writeln!(w, "{},{name},{p},{s}", c.day)?;
        }
    }
    Ok(())
}

/// Per-run initial and final states.
pub fn write_runs_csv<W: Write>(w: &mut W, report: &StatsReport, prov: &[String]) -> io::Result<()> {
    provenance(w, prov)?;
    writeln!(w, "index,seed,status,E0,M0,F0,Ms0,E,M,F,Ms,converged")?;
    for run in &report.runs {
        match run {
            RunOutcome::Completed(r) => {
                let (a, b) = (r.initial, r.final_state);
                writeln!(
                    w,
                    "{},{},ok,{},{},{},{},{},{},{},{},{}",
                    r.index, r.seed, a.e, a.m, a.f, a.ms, b.e, b.m, b.f, b.ms, r.converged
                )?;
            }
            RunOutcome::Failed {
                index,
                seed,
                initial: a,
                ..
            } => {
                writeln!(w, "{index},{seed},failed,{},{},{},{},,,,,false", a.e, a.m, a.f, a.ms)?;
            }
        }
    }
    Ok(())
}

/// Table laid out with statistics as rows and checkpoints as columns.
pub fn write_stats_report<W: Write>(w: &mut W, report: &StatsReport, prov: &[String]) -> io::Result<()> {
    provenance(w, prov)?;
    let completed = report.runs.len() - report.n_failed;
    writeln!(
        w,
        "Statistics over {completed} simulations ({} failed); variance is the population variance (divide by n).",
        report.n_failed
    )?;
    write!(w, "{:<26}", "")?;
    for c in &report.checkpoints {
        write!(w, "{:>18}", format!("{} days", c.day))?;
    }
    writeln!(w)?;
    type Pick = fn(&crate::experiments::CheckpointStats) -> f64;
    let rows: [(&str, Pick); 6] = [
        ("average |E|+|M|+|F|", |c| c.pest.mean),
        ("variance |E|+|M|+|F|", |c| c.pest.variance),
        ("maximum |E|+|M|+|F|", |c| c.pest.max),
        ("average |Ms|", |c| c.sterile.mean),
        ("variance |Ms|", |c| c.sterile.variance),
        ("maximum |Ms|", |c| c.sterile.max),
    ];
    for (label, pick) in rows {
        write!(w, "{label:<26}")?;
        for c in &report.checkpoints {
            write!(w, "{:>18}", format_stat(pick(c)))?;
        }
        writeln!(w)?;
    }
    writeln!(
        w,
        "converged at final time: {} of {} (target Ms = {})",
        report.n_converged, completed, report.target_ms
    )?;
    Ok(())
}

fn format_stat(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e9) {
        format!("{v:.3e}")
    } else {
        format!("{v:.2}")
    }
}

/// Summary of a sweep, one row per `u_min`.
pub fn write_sweep_summary<W: Write>(w: &mut W, results: &[SweepResult], prov: &[String]) -> io::Result<()> {
    provenance(w, prov)?;
    writeln!(w, "u_min,converged,cyclic,final_E,final_M,final_F,final_Ms")?;
    for r in results {
        let s = r.trajectory.final_state();
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.u_min, r.converged, r.cyclic, s.e, s.m, s.f, s.ms
        )?;
    }
    Ok(())
}

/// Parses the numeric columns of a trajectory file written by
/// [`write_trajectory`], skipping provenance and the header.
pub fn read_trajectory_rows(text: &str) -> Result<Vec<[f64; 9]>, String> {
    text.lines()
        .filter(|l| !l.starts_with('#') && *l != TRAJECTORY_HEADER && !l.is_empty())
        .map(|l| {
            let vals: Vec<f64> = l
                .split(',')
                .map(|x| x.parse::<f64>().map_err(|e| format!("{x}: {e}")))
                .collect::<Result<_, _>>()?;
            vals.try_into()
                .map_err(|v: Vec<f64>| format!("expected 9 columns, got {}", v.len()))
        })
        .collect()
}
