//! Feedback release laws mapping an [`Observation`] to a release rate.
//!
//! The two explicit laws are written in terms of log ratios,
//! `I1(f) = ln(m_thr) / ln(f)` and `I2(m, f) = ln(m) / ln(f)`. Those ratios
//! change sign when an argument drops below 1, so branch selection is done on
//! the equivalent power-law comparisons (`I2 > a` iff `m > f^a` for `f > 1`),
//! which extend monotonically to the whole non-negative quadrant. Logarithms
//! are only taken inside the ramp regions, where `f > 1` holds.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SitError};
use crate::model::Observation;

pub const DEFAULT_ALPHA1: f64 = 3.0;
pub const DEFAULT_ALPHA2: f64 = 4.0;
pub const DEFAULT_M_THR: f64 = 200.0;
pub const DEFAULT_U_MAX: f64 = 3.0e5;

/// Piecewise law recovered from the trained policy (`u_reg`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegPiecewise {
    pub u_min: f64,
    pub u_max: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Total-male threshold splitting the left and right halves.
    pub m_thr: f64,
}

impl RegPiecewise {
    pub fn with_u_min(u_min: f64) -> Self {
        Self {
            u_min,
            u_max: DEFAULT_U_MAX,
            alpha1: DEFAULT_ALPHA1,
            alpha2: DEFAULT_ALPHA2,
            m_thr: DEFAULT_M_THR,
        }
    }
}

/// Two-level bang-bang law (`v_reg`): `u_min` when `ln(m) / ln(f) > alpha2`,
/// `u_max` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplifiedBang {
    pub u_min: f64,
    pub u_max: f64,
    pub alpha2: f64,
}

impl SimplifiedBang {
    pub fn with_u_min(u_min: f64) -> Self {
        Self {
            u_min,
            u_max: DEFAULT_U_MAX,
            alpha2: DEFAULT_ALPHA2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ControlLaw {
    Constant {
        u_bar: f64,
    },
    RegPiecewise(RegPiecewise),
    SimplifiedBang(SimplifiedBang),
    /// Adds one zero-mean Gaussian draw per evaluation, clipped to `[0, u_max]`.
    Noisy {
        inner: Box<ControlLaw>,
        sigma: f64,
    },
}

fn check_bounds(u_min: f64, u_max: f64) -> Result<()> {
    if !(u_min.is_finite() && u_max.is_finite() && 0.0 <= u_min && u_min <= u_max) {
        return Err(SitError::Domain(format!(
            "need 0 <= u_min <= u_max, got u_min = {u_min}, u_max = {u_max}"
        )));
    }
    Ok(())
}

impl ControlLaw {
    pub fn constant(u_bar: f64) -> Self {
        ControlLaw::Constant { u_bar }
    }

    pub fn reg(u_min: f64) -> Self {
        ControlLaw::RegPiecewise(RegPiecewise::with_u_min(u_min))
    }

    pub fn vreg(u_min: f64) -> Self {
        ControlLaw::SimplifiedBang(SimplifiedBang::with_u_min(u_min))
    }

    pub fn with_noise(self, sigma: f64) -> Self {
        ControlLaw::Noisy {
            inner: Box::new(self),
            sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ControlLaw::Constant { u_bar } => {
                if !(u_bar.is_finite() && *u_bar >= 0.0) {
                    return Err(SitError::Domain(format!("u_bar must be finite and >= 0, got {u_bar}")));
                }
            }
            ControlLaw::RegPiecewise(r) => {
                check_bounds(r.u_min, r.u_max)?;
                if !(r.alpha1 > 0.0 && r.alpha1 < r.alpha2 && r.alpha2.is_finite()) {
                    return Err(SitError::Domain(format!(
                        "need 0 < alpha1 < alpha2, got alpha1 = {}, alpha2 = {}",
                        r.alpha1, r.alpha2
                    )));
                }
                if !(r.m_thr > 1.0 && r.m_thr.is_finite()) {
                    return Err(SitError::Domain(format!("m_thr must be > 1, got {}", r.m_thr)));
                }
            }
            ControlLaw::SimplifiedBang(v) => {
                check_bounds(v.u_min, v.u_max)?;
                if !(v.alpha2 > 0.0 && v.alpha2.is_finite()) {
                    return Err(SitError::Domain(format!("alpha2 must be > 0, got {}", v.alpha2)));
                }
            }
            ControlLaw::Noisy { inner, sigma } => {
                if !(sigma.is_finite() && *sigma >= 0.0) {
                    return Err(SitError::Domain(format!("noise sigma must be >= 0, got {sigma}")));
                }
                inner.validate()?;
            }
        }
        Ok(())
    }

    /// Upper bound on the law's output, when it has one.
    pub fn u_max(&self) -> Option<f64> {
        match self {
            ControlLaw::Constant { .. } => None,
            ControlLaw::RegPiecewise(r) => Some(r.u_max),
            ControlLaw::SimplifiedBang(v) => Some(v.u_max),
            ControlLaw::Noisy { inner, .. } => inner.u_max(),
        }
    }

    /// The rate the law settles to near extinction: `u_min`, or `u_bar` for a
    /// constant law. The sterile-male target is this value over `delta_s`.
    pub fn resting_rate(&self) -> f64 {
        match self {
            ControlLaw::Constant { u_bar } => *u_bar,
            ControlLaw::RegPiecewise(r) => r.u_min,
            ControlLaw::SimplifiedBang(v) => v.u_min,
            ControlLaw::Noisy { inner, .. } => inner.resting_rate(),
        }
    }

    /// Same law with `u_min` replaced. Constant laws have no `u_min`.
    pub fn with_u_min(&self, u_min: f64) -> Result<ControlLaw> {
        Ok(match self {
            ControlLaw::Constant { .. } => {
                return Err(SitError::Argument("a constant law has no u_min to sweep".into()))
            }
            ControlLaw::RegPiecewise(r) => ControlLaw::RegPiecewise(RegPiecewise { u_min, ..*r }),
            ControlLaw::SimplifiedBang(v) => ControlLaw::SimplifiedBang(SimplifiedBang { u_min, ..*v }),
            ControlLaw::Noisy { inner, sigma } => ControlLaw::Noisy {
                inner: Box::new(inner.with_u_min(u_min)?),
                sigma: *sigma,
            },
        })
    }

    pub fn is_noisy(&self) -> bool {
        matches!(self, ControlLaw::Noisy { .. })
    }

    /// Evaluates the law with noise disabled.
    pub fn evaluate_deterministic(&self, obs: &Observation) -> f64 {
        match self {
            ControlLaw::Constant { u_bar } => *u_bar,
            ControlLaw::RegPiecewise(r) => evaluate_reg(r, obs),
            ControlLaw::SimplifiedBang(v) => evaluate_simplified(v, obs),
            ControlLaw::Noisy { inner, .. } => inner.evaluate_deterministic(obs),
        }
    }

    /// Evaluates the law, consuming one normal draw per noise layer.
    pub fn evaluate<R: Rng + ?Sized>(&self, obs: &Observation, rng: &mut R) -> f64 {
        match self {
            ControlLaw::Noisy { inner, sigma } => {
                let base = inner.evaluate(obs, rng);
                let draw = if *sigma > 0.0 {
                    Normal::new(0.0, *sigma).expect("sigma validated").sample(rng)
                } else {
                    0.0
                };
                noisy_rate(base, draw, inner.u_max())
            }
            other => other.evaluate_deterministic(obs),
        }
    }
}

pub fn evaluate_constant(u_bar: f64, _obs: &Observation) -> f64 {
    u_bar
}

/// Combines an inner rate with one noise draw: `max(0, base + draw)`, capped
/// at `u_max` when given.
pub fn noisy_rate(base: f64, draw: f64, u_max: Option<f64>) -> f64 {
    let u = (base + draw).max(0.0);
    match u_max {
        Some(cap) => u.min(cap),
        None => u,
    }
}

/// Noise wrapper evaluation with an explicit stream.
pub fn apply_noise<R: Rng + ?Sized>(inner: &ControlLaw, sigma: f64, obs: &Observation, rng: &mut R) -> f64 {
    ControlLaw::Noisy {
        inner: Box::new(inner.clone()),
        sigma,
    }
    .evaluate(obs, rng)
}

/// Three-level split shared by both halves of `u_reg`: `u_min` above `alpha2`,
/// a linear ramp `u_max * (alpha2 - ratio)` on `(alpha1, alpha2]`, `u_max` below.
#[inline]
fn three_level(law: &RegPiecewise, above_alpha2: bool, above_alpha1: bool, ratio: impl FnOnce() -> f64) -> f64 {
    if above_alpha2 {
        law.u_min
    } else if above_alpha1 {
        (law.u_max * (law.alpha2 - ratio())).clamp(0.0, law.u_max)
    } else {
        law.u_max
    }
}

pub fn evaluate_reg(law: &RegPiecewise, obs: &Observation) -> f64 {
    let (m, f) = (obs.m_total, obs.f_total);
    if m < law.m_thr {
        // I1(f) > a  <=>  f < m_thr^(1/a); covers f <= 1 as well.
        let above2 = f < law.m_thr.powf(1.0 / law.alpha2);
        let above1 = f < law.m_thr.powf(1.0 / law.alpha1);
        three_level(law, above2, above1, || law.m_thr.ln() / f.ln())
    } else {
        // I2(m, f) > a  <=>  m > f^a; the ramp forces f > m^(1/alpha2) > 1.
        let above2 = m > f.powf(law.alpha2);
        let above1 = m > f.powf(law.alpha1);
        three_level(law, above2, above1, || m.ln() / f.ln())
    }
}

pub fn evaluate_simplified(law: &SimplifiedBang, obs: &Observation) -> f64 {
    if obs.m_total > obs.f_total.powf(law.alpha2) {
        law.u_min
    } else {
        law.u_max
    }
}
