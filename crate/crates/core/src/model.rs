//! The four-compartment SIT system.
//!
//! State is `(E, M, F, Ms)`: aquatic phase, wild males, fertilized females and
//! sterile males. The release rate `u` only enters the sterile-male equation.
//! Only the totals `M + Ms` and `F + Fs` are observable, where `Fs = F * Ms / M`
//! counts the females that mated with sterile males.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SitError};

/// Biological rate and capacity constants. Rates are per day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Oviposition rate.
    pub beta_e: f64,
    /// Hatching rate.
    pub nu_e: f64,
    /// Aquatic phase death rate.
    pub delta_e: f64,
    /// Fertilized female death rate.
    pub delta_f: f64,
    /// Wild male death rate.
    pub delta_m: f64,
    /// Sterile male death rate.
    pub delta_s: f64,
    /// Probability that a pupa gives rise to a female.
    pub nu: f64,
    /// Environmental capacity for eggs.
    pub k: f64,
}

/// Documented field ranges for the default parameter set. `None` means a single
/// value was reported. These are informational and never enforced.
pub const PARAM_RANGES: [(&str, Option<(f64, f64)>); 8] = [
    ("beta_e", Some((7.46, 14.85))),
    ("nu_e", Some((0.005, 0.25))),
    ("delta_e", Some((0.023, 0.046))),
    ("delta_f", Some((0.033, 0.046))),
    ("delta_m", Some((0.077, 0.139))),
    ("delta_s", None),
    ("nu", None),
    ("k", None),
];

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            beta_e: 8.0,
            nu_e: 0.25,
            delta_e: 0.03,
            delta_f: 0.04,
            delta_m: 0.1,
            delta_s: 0.12,
            nu: 0.49,
            k: 50_000.0,
        }
    }
}

impl ModelParams {
    /// Builds and validates a parameter set.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        beta_e: f64,
        nu_e: f64,
        delta_e: f64,
        delta_f: f64,
        delta_m: f64,
        delta_s: f64,
        nu: f64,
        k: f64,
    ) -> Result<Self> {
        let p = Self {
            beta_e,
            nu_e,
            delta_e,
            delta_f,
            delta_m,
            delta_s,
            nu,
            k,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("beta_e", self.beta_e),
            ("nu_e", self.nu_e),
            ("delta_e", self.delta_e),
            ("delta_f", self.delta_f),
            ("delta_m", self.delta_m),
            ("delta_s", self.delta_s),
            ("k", self.k),
        ];
        for (name, v) in rates {
            if !(v.is_finite() && v > 0.0) {
                return Err(SitError::Domain(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !(self.nu > 0.0 && self.nu < 1.0) {
            return Err(SitError::Domain(format!("nu must lie in (0, 1), got {}", self.nu)));
        }
        if self.delta_s < self.delta_m {
            return Err(SitError::Domain(format!(
                "delta_s ({}) must be >= delta_m ({})",
                self.delta_s, self.delta_m
            )));
        }
        Ok(())
    }

    /// Whether the uncontrolled system has a positive equilibrium:
    /// `beta_e * nu * nu_e > delta_f * (nu_e + delta_e)`.
    pub fn is_persistent(&self) -> bool {
        self.beta_e * self.nu * self.nu_e > self.delta_f * (self.nu_e + self.delta_e)
    }

    /// `1 - delta_f (nu_e + delta_e) / (beta_e nu nu_e)`, the fraction of `K`
    /// occupied by eggs at the persistence equilibrium.
    fn egg_fill_fraction(&self) -> f64 {
        1.0 - self.delta_f * (self.nu_e + self.delta_e) / (self.beta_e * self.nu * self.nu_e)
    }
}

/// Population densities. All components are non-negative and finite.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SitState {
    pub e: f64,
    pub m: f64,
    pub f: f64,
    pub ms: f64,
}

impl SitState {
    pub const ZERO: SitState = SitState {
        e: 0.0,
        m: 0.0,
        f: 0.0,
        ms: 0.0,
    };

    pub fn new(e: f64, m: f64, f: f64, ms: f64) -> Result<Self> {
        let s = Self { e, m, f, ms };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.as_array().iter().all(|v| v.is_finite() && *v >= 0.0) {
            Ok(())
        } else {
            Err(SitError::Domain(format!(
                "state must be finite and non-negative: {:?}",
                self.as_array()
            )))
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.e, self.m, self.f, self.ms]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self {
            e: a[0],
            m: a[1],
            f: a[2],
            ms: a[3],
        }
    }

    /// Euclidean norm of the wild compartments `(E, M, F)`.
    pub fn pest_norm(&self) -> f64 {
        (self.e * self.e + self.m * self.m + self.f * self.f).sqrt()
    }

    /// Max norm of the wild compartments.
    pub fn pest_max(&self) -> f64 {
        self.e.max(self.m).max(self.f)
    }

    /// `|E| + |M| + |F|`.
    pub fn pest_sum(&self) -> f64 {
        self.e.abs() + self.m.abs() + self.f.abs()
    }
}

/// Time derivative of [`SitState`]. Components may be negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub de: f64,
    pub dm: f64,
    pub df: f64,
    pub dms: f64,
}

impl StateDerivative {
    pub fn as_array(&self) -> [f64; 4] {
        [self.de, self.dm, self.df, self.dms]
    }
}

/// The measurable totals `(M + Ms, F + Fs)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Observation {
    pub m_total: f64,
    pub f_total: f64,
}

/// Fraction of matings with wild males, `M / (M + Ms)`; zero when no males exist.
#[inline]
fn wild_mating_fraction(m: f64, ms: f64) -> f64 {
    let total = m + ms;
    if total > 0.0 {
        m / total
    } else {
        0.0
    }
}

/// Right-hand side of the SIT system under release rate `u`.
pub fn derivative(state: &SitState, params: &ModelParams, u: f64) -> Result<StateDerivative> {
    state.validate()?;
    if !(u.is_finite() && u >= 0.0) {
        return Err(SitError::Domain(format!(
            "release rate must be finite and >= 0, got {u}"
        )));
    }
    Ok(derivative_unchecked(state, params, u))
}

#[inline]
pub(crate) fn derivative_unchecked(s: &SitState, p: &ModelParams, u: f64) -> StateDerivative {
    StateDerivative {
        de: p.beta_e * s.f * (1.0 - s.e / p.k) - (p.nu_e + p.delta_e) * s.e,
        dm: (1.0 - p.nu) * p.nu_e * s.e - p.delta_m * s.m,
        df: p.nu * p.nu_e * s.e * wild_mating_fraction(s.m, s.ms) - p.delta_f * s.f,
        dms: u - p.delta_s * s.ms,
    }
}

/// `Fs = F * Ms / M`, taken as zero when `M = 0`.
pub fn unfertilized_females(state: &SitState) -> f64 {
    if state.m > 0.0 {
        state.f * state.ms / state.m
    } else {
        0.0
    }
}

pub fn observe(state: &SitState) -> Observation {
    Observation {
        m_total: state.m + state.ms,
        f_total: state.f + unfertilized_females(state),
    }
}

/// Positive steady state `(E*, M*, F*)` of the uncontrolled system with `Ms = 0`.
pub fn persistence_equilibrium(params: &ModelParams) -> Result<SitState> {
    if !params.is_persistent() {
        return Err(SitError::NoPositiveEquilibrium);
    }
    let e = params.k * params.egg_fill_fraction();
    Ok(SitState {
        e,
        m: (1.0 - params.nu) * params.nu_e * e / params.delta_m,
        f: params.nu * params.nu_e * e / params.delta_f,
        ms: 0.0,
    })
}

/// Critical constant release rate `U*`. Any constant release above it drives
/// the wild population to extinction.
pub fn critical_constant_control(params: &ModelParams) -> Result<f64> {
    if !params.is_persistent() {
        return Err(SitError::Domain(
            "critical release rate is undefined without a positive equilibrium".into(),
        ));
    }
    let p = params;
    let scale = p.k * p.beta_e * p.nu * (1.0 - p.nu) * p.nu_e * p.nu_e * p.delta_s
        / (4.0 * (p.delta_e + p.nu_e) * p.delta_f * p.delta_m);
    let fill = p.egg_fill_fraction();
    Ok(scale * fill * fill)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn origin_is_an_equilibrium() {
        let d = derivative(&SitState::ZERO, &ModelParams::default(), 0.0).unwrap();
        assert_eq!(d.as_array(), [0.0; 4]);
    }

    #[test]
    fn derivative_hand_example() {
        let s = SitState::new(1000.0, 500.0, 400.0, 100.0).unwrap();
        let d = derivative(&s, &ModelParams::default(), 0.0).unwrap();
        assert!(close(d.de, 2856.0, 1e-12));
        assert!(close(d.dm, 77.5, 1e-12));
        assert!(close(d.df, 86.083_333_333_333_33, 1e-12));
        assert!(close(d.dms, -12.0, 1e-12));
    }

    #[test]
    fn derivative_rejects_bad_input() {
        let p = ModelParams::default();
        let bad = SitState {
            e: f64::NAN,
            ..SitState::ZERO
        };
        assert!(matches!(derivative(&bad, &p, 0.0), Err(SitError::Domain(_))));
        assert!(derivative(&SitState::ZERO, &p, f64::INFINITY).is_err());
        assert!(derivative(&SitState::ZERO, &p, -1.0).is_err());
    }

    #[test]
    fn no_males_means_no_fertilization() {
        let s = SitState {
            e: 10.0,
            m: 0.0,
            f: 3.0,
            ms: 0.0,
        };
        let p = ModelParams::default();
        let d = derivative(&s, &p, 0.0).unwrap();
        assert_eq!(d.df, -p.delta_f * 3.0);
    }

    #[test]
    fn unfertilized_female_cases() {
        let s = |f, m, ms| SitState { e: 0.0, m, f, ms };
        assert_eq!(unfertilized_females(&s(100.0, 50.0, 25.0)), 50.0);
        assert_eq!(unfertilized_females(&s(100.0, 0.0, 25.0)), 0.0);
        assert_eq!(unfertilized_females(&s(0.0, 7.0, 3.0)), 0.0);
    }

    #[test]
    fn observe_cases() {
        let o = observe(&SitState {
            e: 10.0,
            m: 5.0,
            f: 2.0,
            ms: 20.0,
        });
        assert_eq!((o.m_total, o.f_total), (25.0, 10.0));
        let o = observe(&SitState::ZERO);
        assert_eq!((o.m_total, o.f_total), (0.0, 0.0));
        let o = observe(&SitState {
            e: 0.0,
            m: 0.0,
            f: 3.0,
            ms: 41.67,
        });
        assert_eq!((o.m_total, o.f_total), (41.67, 3.0));
    }

    #[test]
    fn default_equilibrium_values() {
        let eq = persistence_equilibrium(&ModelParams::default()).unwrap();
        assert!((eq.e - 49_428.571_428_571).abs() < 1e-6);
        assert!((eq.m - 63_021.428_571_428).abs() < 1e-6);
        assert!((eq.f - 151_375.0).abs() < 1e-6);
        let d = derivative(&eq, &ModelParams::default(), 0.0).unwrap();
        let scale = eq.pest_norm();
        for c in d.as_array() {
            assert!(c.abs() <= 1e-9 * scale, "residual {c}");
        }
    }

    #[test]
    fn half_capacity_equilibrium() {
        // beta_e * nu * nu_e = 2 * delta_f * (nu_e + delta_e)
        let mut p = ModelParams::default();
        p.beta_e = 2.0 * p.delta_f * (p.nu_e + p.delta_e) / (p.nu * p.nu_e);
        let eq = persistence_equilibrium(&p).unwrap();
        assert!(close(eq.e, p.k / 2.0, 1e-12));
    }

    #[test]
    fn extinct_parameters_have_no_equilibrium() {
        let p = ModelParams {
            beta_e: 0.01,
            ..ModelParams::default()
        };
        assert!(p.validate().is_ok());
        assert!(!p.is_persistent());
        assert_eq!(persistence_equilibrium(&p), Err(SitError::NoPositiveEquilibrium));
        assert!(critical_constant_control(&p).is_err());
    }

    #[test]
    fn critical_control_default_and_scaling() {
        let p = ModelParams::default();
        let u = critical_constant_control(&p).unwrap();
        assert!((u - 163_540.9).abs() < 1.0, "U* = {u}");
        let doubled = critical_constant_control(&ModelParams { k: 2.0 * p.k, ..p }).unwrap();
        assert!(close(doubled, 2.0 * u, 1e-12));
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(8.0, 0.25, 0.03, 0.04, 0.1, 0.12, 0.49, 5e4).is_ok());
        // delta_s < delta_m
        assert!(ModelParams::new(8.0, 0.25, 0.03, 0.04, 0.1, 0.05, 0.49, 5e4).is_err());
        assert!(ModelParams::new(8.0, 0.25, 0.03, 0.04, 0.1, 0.12, 1.0, 5e4).is_err());
        assert!(ModelParams::new(8.0, 0.25, 0.03, 0.04, 0.1, 0.12, 0.49, 0.0).is_err());
        assert!(ModelParams::new(-8.0, 0.25, 0.03, 0.04, 0.1, 0.12, 0.49, 5e4).is_err());
    }
}
