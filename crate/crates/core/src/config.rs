//! Flat key-value run configuration.
//!
//! The file is TOML with top-level keys only, for example:
//!
//! ```text
//! # model
//! beta_e = 8.0
//! k = 50000.0
//! # control: constant | ureg | vreg
//! control = "vreg"
//! u_min = 5.0
//! noise_sigma = 0.0
//! # integration
//! scheme = "euler"
//! dt = 0.01
//! t_end = 1000.0
//! seed = 7
//! ```
//!
//! Every key is optional; missing model keys take the default parameter set.
//! Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::control::{
    ControlLaw, RegPiecewise, SimplifiedBang, DEFAULT_ALPHA1, DEFAULT_ALPHA2, DEFAULT_M_THR, DEFAULT_U_MAX,
};
use crate::error::{Result, SitError};
use crate::integrate::{Scheme, SimConfig};
use crate::model::{persistence_equilibrium, ModelParams, SitState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlKind {
    Constant,
    Ureg,
    Vreg,
}

impl std::str::FromStr for ControlKind {
    type Err = SitError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(ControlKind::Constant),
            "ureg" => Ok(ControlKind::Ureg),
            "vreg" => Ok(ControlKind::Vreg),
            other => Err(SitError::Config(format!(
                "unknown control '{other}' (expected constant, ureg or vreg)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_bar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_thr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_sigma: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control_update_interval: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_stride: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_sims: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<f64>>,

    /// Initial state; each missing component comes from the persistence
    /// equilibrium with no sterile males.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ms0: Option<f64>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($field:ident),* $(,)?) => {
        $( if $src.$field.is_some() { $dst.$field = $src.$field.clone(); } )*
    };
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| SitError::Config(e.message().to_string()))
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SitError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| SitError::Config(format!("{}: {}", path.display(), e)))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    /// Keys set in `over` replace those in `self`.
    pub fn overlay(&mut self, over: &RunConfig) {
        overlay!(self, over;
            beta_e, nu_e, delta_e, delta_f, delta_m, delta_s, nu, k,
            control, u_bar, u_min, u_max, alpha1, alpha2, m_thr, noise_sigma,
            scheme, dt, t_end, control_update_interval, output_stride,
            seed, n_sims, checkpoints, e0, m0, f0, ms0,
        );
    }

    pub fn params(&self) -> Result<ModelParams> {
        let d = ModelParams::default();
        let p = ModelParams {
            beta_e: self.beta_e.unwrap_or(d.beta_e),
            nu_e: self.nu_e.unwrap_or(d.nu_e),
            delta_e: self.delta_e.unwrap_or(d.delta_e),
            delta_f: self.delta_f.unwrap_or(d.delta_f),
            delta_m: self.delta_m.unwrap_or(d.delta_m),
            delta_s: self.delta_s.unwrap_or(d.delta_s),
            nu: self.nu.unwrap_or(d.nu),
            k: self.k.unwrap_or(d.k),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn control_kind(&self) -> ControlKind {
        self.control.unwrap_or(ControlKind::Vreg)
    }

    pub fn law(&self) -> Result<ControlLaw> {
        let u_min = self.u_min.unwrap_or(5.0);
        let u_max = self.u_max.unwrap_or(DEFAULT_U_MAX);
        let base = match self.control_kind() {
            ControlKind::Constant => ControlLaw::Constant {
                u_bar: self.u_bar.unwrap_or(0.0),
            },
            ControlKind::Ureg => ControlLaw::RegPiecewise(RegPiecewise {
                u_min,
                u_max,
                alpha1: self.alpha1.unwrap_or(DEFAULT_ALPHA1),
                alpha2: self.alpha2.unwrap_or(DEFAULT_ALPHA2),
                m_thr: self.m_thr.unwrap_or(DEFAULT_M_THR),
            }),
            ControlKind::Vreg => ControlLaw::SimplifiedBang(SimplifiedBang {
                u_min,
                u_max,
                alpha2: self.alpha2.unwrap_or(DEFAULT_ALPHA2),
            }),
        };
        let law = match self.noise_sigma {
            Some(sigma) if sigma != 0.0 => base.with_noise(sigma),
            _ => base,
        };
        law.validate()?;
        Ok(law)
    }

    pub fn sim(&self) -> Result<SimConfig> {
        let d = SimConfig::default();
        let cfg = SimConfig {
            dt: self.dt.unwrap_or(d.dt),
            t_end: self.t_end.unwrap_or(d.t_end),
            scheme: self.scheme.unwrap_or(d.scheme),
            control_update_interval: self.control_update_interval.unwrap_or(d.control_update_interval),
            output_stride: self.output_stride.unwrap_or(d.output_stride),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn n_sims(&self) -> usize {
        self.n_sims.unwrap_or(100)
    }

    pub fn checkpoints(&self) -> Vec<f64> {
        self.checkpoints
            .clone()
            .unwrap_or_else(|| vec![200.0, 400.0, 600.0, 800.0])
    }

    pub fn initial_state(&self) -> Result<SitState> {
        let params = self.params()?;
        let eq = persistence_equilibrium(&params).unwrap_or(SitState::ZERO);
        SitState::new(
            self.e0.unwrap_or(eq.e),
            self.m0.unwrap_or(eq.m),
            self.f0.unwrap_or(eq.f),
            self.ms0.unwrap_or(0.0),
        )
    }

    /// Copy with every key filled in from its default, so that the dump fully
    /// determines a run.
    pub fn resolved(&self) -> Result<RunConfig> {
        let p = self.params()?;
        let sim = self.sim()?;
        let ic = self.initial_state()?;
        let mut out = RunConfig {
            beta_e: Some(p.beta_e),
            nu_e: Some(p.nu_e),
            delta_e: Some(p.delta_e),
            delta_f: Some(p.delta_f),
            delta_m: Some(p.delta_m),
            delta_s: Some(p.delta_s),
            nu: Some(p.nu),
            k: Some(p.k),
            control: Some(self.control_kind()),
            noise_sigma: Some(self.noise_sigma.unwrap_or(0.0)),
            scheme: Some(sim.scheme),
            dt: Some(sim.dt),
            t_end: Some(sim.t_end),
            control_update_interval: Some(sim.control_update_interval),
            output_stride: Some(sim.output_stride),
            seed: Some(self.seed()),
            n_sims: Some(self.n_sims()),
            checkpoints: Some(self.checkpoints()),
            e0: Some(ic.e),
            m0: Some(ic.m),
            f0: Some(ic.f),
            ms0: Some(ic.ms),
            ..RunConfig::default()
        };
        match self.law()? {
            ControlLaw::Noisy { inner, .. } => fill_law(&mut out, &inner),
            law => fill_law(&mut out, &law),
        }
        Ok(out)
    }
}

fn fill_law(out: &mut RunConfig, law: &ControlLaw) {
    match law {
        ControlLaw::Constant { u_bar } => out.u_bar = Some(*u_bar),
        ControlLaw::RegPiecewise(r) => {
            out.u_min = Some(r.u_min);
            out.u_max = Some(r.u_max);
            out.alpha1 = Some(r.alpha1);
            out.alpha2 = Some(r.alpha2);
            out.m_thr = Some(r.m_thr);
        }
        ControlLaw::SimplifiedBang(v) => {
            out.u_min = Some(v.u_min);
            out.u_max = Some(v.u_max);
            out.alpha2 = Some(v.alpha2);
        }
        ControlLaw::Noisy { inner, .. } => fill_law(out, inner),
    }
}
