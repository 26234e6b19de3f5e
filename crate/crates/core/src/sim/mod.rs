//! Adaptive Dormand–Prince 5(4) integration with dense output.

mod csv;
mod dopri;

pub use csv::{read_csv, write_csv};

use thiserror::Error;

use crate::crn::{PolynomialOde, SpeciesId};
use crate::library::Rails;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("initial state has {found} entries, the system has {expected} species")]
    Dimension { expected: usize, found: usize },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepFailure { t: f64, h: f64 },
    #[error("state is no longer finite at t = {t}; reduce the input values")]
    NonFinite { t: f64 },
    #[error("oracle runs disagree by {diff:e} (relative) at the end state")]
    OracleDisagreement { diff: f64 },
    #[error("bad trajectory CSV at line {line}: {message}")]
    Csv { line: usize, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Standard,
    /// Tight tolerances and a second run with halved maximum step.
    Oracle,
}

pub const ORACLE_REL_TOL: f64 = 1e-12;
pub const ORACLE_AGREEMENT: f64 = 1e-10;
/// Environment variable overriding `rel_tol`.
pub const TOL_ENV: &str = "CRNCALC_TOL";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_end: f64,
    pub max_step: f64,
    /// Uniform samples including `t = 0` and `t = t_end`.
    pub sample_count: usize,
    pub mode: Mode,
    /// Hard cap on attempted steps.
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            t_end: 40.0,
            max_step: 0.5,
            sample_count: 2000,
            mode: Mode::Standard,
            max_steps: 5_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn oracle() -> Self {
        IntegratorConfig { rel_tol: ORACLE_REL_TOL, abs_tol: 1e-15, mode: Mode::Oracle, ..Default::default() }
    }

    pub fn t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn samples(mut self, n: usize) -> Self {
        self.sample_count = n;
        self
    }

    pub fn max_step(mut self, h: f64) -> Self {
        self.max_step = h;
        self
    }

    pub fn rel_tol(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self
    }

    /// Applies `CRNCALC_TOL` if it is set to a positive number.
    pub fn with_env_override(mut self) -> Result<Self, SimError> {
        if let Ok(v) = std::env::var(TOL_ENV) {
            let tol: f64 = v
                .trim()
                .parse()
                .map_err(|_| SimError::InvalidConfig(format!("{TOL_ENV}={v} is not a number")))?;
            self.rel_tol = tol;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(SimError::InvalidConfig(format!("{name} must be positive and finite, got {v}")))
            }
        };
        pos("rel_tol", self.rel_tol)?;
        pos("abs_tol", self.abs_tol)?;
        pos("t_end", self.t_end)?;
        pos("max_step", self.max_step)?;
        if self.sample_count < 2 {
            return Err(SimError::InvalidConfig("sample_count must be at least 2".into()));
        }
        if self.mode == Mode::Oracle && self.rel_tol > ORACLE_REL_TOL {
            return Err(SimError::InvalidConfig(format!("oracle mode needs rel_tol <= {ORACLE_REL_TOL:e}")));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.sample_count - 1;
        (0..=n).map(|k| k as f64 * self.t_end / n as f64).collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub largest_step: f64,
    pub smallest_step: f64,
}

/// Sampled solution. `states[k]` is the state at `times[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub species: Vec<SpeciesId>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Scaled local error estimate of every accepted step.
    pub step_errors: Vec<f64>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn index_of(&self, s: &SpeciesId) -> Option<usize> {
        self.species.iter().position(|x| x == s)
    }

    pub fn column(&self, s: &SpeciesId) -> Option<Vec<f64>> {
        let i = self.index_of(s)?;
        Some(self.states.iter().map(|row| row[i]).collect())
    }

    pub fn value(&self, k: usize, s: &SpeciesId) -> f64 {
        self.states[k][self.index_of(s).expect("species in trajectory")]
    }

    /// Dual-rail-resolved output at sample `k`.
    pub fn output_value(&self, rails: &Rails, k: usize) -> f64 {
        rails.value(|s| self.value(k, s))
    }

    pub fn output_series(&self, rails: &Rails) -> Vec<f64> {
        (0..self.len()).map(|k| self.output_value(rails, k)).collect()
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("nonempty trajectory")
    }

    /// Linear interpolation between samples.
    pub fn sample_at(&self, s: &SpeciesId, t: f64) -> f64 {
        let i = self.index_of(s).expect("species in trajectory");
        let k = self.times.partition_point(|&x| x < t);
        if k == 0 {
            return self.states[0][i];
        }
        if k >= self.len() {
            return self.states[self.len() - 1][i];
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        self.states[k - 1][i] * (1.0 - w) + self.states[k][i] * w
    }
}

/// Integrates `ode` from `init` over `[0, cfg.t_end]`. Oracle mode runs
/// twice and checks agreement.
pub fn integrate(ode: &PolynomialOde, init: &[f64], cfg: &IntegratorConfig) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    if init.len() != ode.len() {
        return Err(SimError::Dimension { expected: ode.len(), found: init.len() });
    }
    match cfg.mode {
        Mode::Standard => dopri::run(ode, init, cfg),
        Mode::Oracle => {
            let first = dopri::run(ode, init, cfg)?;
            let finer = IntegratorConfig { max_step: (first.stats.largest_step / 2.0).min(cfg.max_step), ..*cfg };
            let second = dopri::run(ode, init, &finer)?;
            let diff = first
                .last()
                .iter()
                .zip(second.last())
                .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1.0))
                .fold(0.0, f64::max);
            if diff > ORACLE_AGREEMENT {
                return Err(SimError::OracleDisagreement { diff });
            }
            Ok(second)
        }
    }
}

/// High-accuracy run used as ground truth.
pub fn oracle(ode: &PolynomialOde, init: &[f64], t_end: f64) -> Result<Trajectory, SimError> {
    integrate(ode, init, &IntegratorConfig::oracle().t_end(t_end))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::sp;
    use crate::library::mk_exp_nonneg;

    fn addition() -> PolynomialOde {
        let mut ode = PolynomialOde::new(vec![sp("X"), sp("Y"), sp("Z")]).unwrap();
        ode.term("Z", 1.0, &[("X", 1)]);
        ode.term("Z", 1.0, &[("Y", 1)]);
        ode.term("Z", -1.0, &[("Z", 1)]);
        ode
    }

    #[test]
    fn addition_matches_closed_form() {
        let traj = integrate(&addition(), &[1.0, 2.0, 0.0], &IntegratorConfig::default()).unwrap();
        assert_eq!(traj.states[0], vec![1.0, 2.0, 0.0]);
        for (t, row) in traj.times.iter().zip(&traj.states) {
            let exact = 3.0 * (1.0 - (-t).exp());
            assert!((row[2] - exact).abs() <= 1e-9 * exact.max(1e-3), "t={t}");
        }
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn zero_field_is_constant() {
        let ode = PolynomialOde::new(vec![sp("Q")]).unwrap();
        let traj = integrate(&ode, &[7.0], &IntegratorConfig::default()).unwrap();
        assert!(traj.states.iter().all(|r| r[0] == 7.0));
    }

    #[test]
    fn exponential_at_ten() {
        let spec = mk_exp_nonneg();
        let mut init = vec![0.0; 3];
        init[spec.ode.index_of(&sp("A")).unwrap()] = 2.0;
        init[spec.ode.index_of(&sp("X")).unwrap()] = 1.0;
        let cfg = IntegratorConfig::default().t_end(10.0).samples(11);
        let traj = integrate(&spec.ode, &init, &cfg).unwrap();
        let x = traj.value(10, &sp("X"));
        let exact = (2.0 * (1.0 - (-10f64).exp())).exp();
        assert!((x - exact).abs() < 1e-8, "{x} vs {exact}");
    }

    #[test]
    fn overflow_is_reported() {
        let spec = mk_exp_nonneg();
        let init = [1000.0, 1.0, 0.0];
        let err = integrate(&spec.ode, &init, &IntegratorConfig::default()).unwrap_err();
        assert!(matches!(err, SimError::NonFinite { .. }), "{err}");
    }

    #[test]
    fn oracle_agrees_with_logistic_closed_form() {
        let mut ode = PolynomialOde::new(vec![sp("A"), sp("Z")]).unwrap();
        ode.term("Z", 1.0, &[("A", 1), ("Z", 1)]);
        ode.term("Z", -1.0, &[("Z", 2)]);
        let traj = oracle(&ode, &[2.0, 0.5], 10.0).unwrap();
        for (t, row) in traj.times.iter().zip(&traj.states) {
            let exact = 2.0 / (1.0 + (2.0 / 0.5 - 1.0) * (-2.0 * t).exp());
            assert!((row[1] - exact).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::default().rel_tol(0.0).validate().is_err());
        assert!(IntegratorConfig::default().samples(1).validate().is_err());
        assert!(IntegratorConfig { mode: Mode::Oracle, ..Default::default() }.validate().is_err());
        let err = integrate(&addition(), &[1.0], &IntegratorConfig::default()).unwrap_err();
        assert_eq!(err, SimError::Dimension { expected: 3, found: 1 });
    }
}
