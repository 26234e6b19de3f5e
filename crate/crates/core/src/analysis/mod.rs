//! Limit and rate estimation, conservation monitors and input sweeps.

mod fit;
mod report;

pub use fit::{estimate_rate, estimate_rate_with, FitOptions, RateEstimate};
pub use report::{gnuplot_data, sweep_csv, sweep_text};

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::compiler::{CircuitInstance, CompileError, InitOptions, InputSignal};
use crate::library::{ConservationLaw, Rails};
use crate::sim::{integrate, IntegratorConfig, SimError, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("output has not converged: last-decile variation {variation:e}")]
    NotConverged { variation: f64 },
    #[error("rate fit is degenerate: {0}")]
    DegenerateFit(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Compile(#[from] CompileError),
}

/// Relative last-decile variation accepted by `estimate_limit`.
pub const LIMIT_VARIATION: f64 = 1e-8;

/// Mean of the last decile of the output, after checking it has settled.
pub fn estimate_limit(traj: &Trajectory, output: &Rails) -> Result<f64, AnalysisError> {
    let series = traj.output_series(output);
    let start = series.len() - (series.len() / 10).max(1);
    let tail = &series[start..];
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let variation = (hi - lo) / mean.abs().max(1.0);
    if !(variation < LIMIT_VARIATION) {
        return Err(AnalysisError::NotConverged { variation });
    }
    Ok(mean)
}

/// Largest deviation of a first integral from its initial value.
pub fn check_conservation(traj: &Trajectory, law: &ConservationLaw) -> f64 {
    let at = |k: usize| law.eval(|s| traj.value(k, s));
    let c0 = at(0);
    (0..traj.len()).map(|k| (at(k) - c0).abs()).fold(0.0, f64::max)
}

/// One grid point of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub inputs: BTreeMap<String, f64>,
    pub limit: f64,
    pub result: Result<RateEstimate, AnalysisError>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub threshold: f64,
    pub min_rate: f64,
    pub input_independent: bool,
}

/// Minimum r² for a fit to count toward an input-independence verdict.
pub const VERDICT_R2: f64 = 0.99;

impl SweepReport {
    pub fn new(points: Vec<SweepPoint>, threshold: f64) -> Self {
        let min_rate = points
            .iter()
            .map(|p| p.result.as_ref().map(|r| r.fitted_rate).unwrap_or(f64::NAN))
            .fold(f64::INFINITY, |m, r| if r.is_nan() { f64::NAN } else { m.min(r) });
        let fits_ok = points.iter().all(|p| matches!(&p.result, Ok(r) if r.r_squared >= VERDICT_R2));
        SweepReport { threshold, min_rate, input_independent: fits_ok && min_rate >= threshold, points }
    }

    /// Same points judged against another threshold.
    pub fn with_threshold(&self, threshold: f64) -> SweepReport {
        SweepReport::new(self.points.clone(), threshold)
    }
}

/// Simulates one grid point with constant inputs and fits the rate against
/// the given true limit.
pub fn run_point(
    circuit: &CircuitInstance,
    inputs: &BTreeMap<String, f64>,
    limit: f64,
    cfg: &IntegratorConfig,
    fit: &FitOptions,
) -> Result<RateEstimate, AnalysisError> {
    let signals = inputs.iter().map(|(k, v)| (k.clone(), InputSignal::Constant(*v))).collect();
    let setup = circuit.setup(&signals, &InitOptions::default())?;
    let traj = integrate(&setup.ode, &setup.state, cfg)?;
    estimate_rate_with(&traj, &circuit.output, limit, fit)
}

/// Rate estimates over a grid, computed in parallel. `truth` gives the
/// exact limit for each grid point.
pub fn sweep(
    circuit: &CircuitInstance,
    grid: &[BTreeMap<String, f64>],
    threshold: f64,
    cfg: &IntegratorConfig,
    truth: &(dyn Fn(&BTreeMap<String, f64>) -> f64 + Sync),
) -> SweepReport {
    let fit = FitOptions::for_config(cfg);
    let points = grid
        .par_iter()
        .map(|inputs| {
            let limit = truth(inputs);
            SweepPoint { inputs: inputs.clone(), limit, result: run_point(circuit, inputs, limit, cfg, &fit) }
        })
        .collect();
    SweepReport::new(points, threshold)
}

/// Grid over a single input.
pub fn grid_1d(name: &str, values: &[f64]) -> Vec<BTreeMap<String, f64>> {
    values.iter().map(|v| BTreeMap::from([(name.to_string(), *v)])).collect()
}

/// Exact limit of a compiled expression by direct evaluation.
pub fn expression_truth(circuit: &CircuitInstance) -> impl Fn(&BTreeMap<String, f64>) -> f64 + Sync + '_ {
    move |inputs| {
        circuit
            .expr
            .as_ref()
            .and_then(|e| e.eval(&|n| inputs.get(n).copied()))
            .unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::{sp, PolynomialOde};
    use crate::sim::{StepStats, Trajectory};

    fn flat(v: f64, n: usize) -> Trajectory {
        Trajectory {
            species: vec![sp("Z")],
            times: (0..n).map(|k| k as f64).collect(),
            states: vec![vec![v]; n],
            step_errors: vec![],
            stats: StepStats::default(),
        }
    }

    #[test]
    fn limit_of_constant_system() {
        assert_eq!(estimate_limit(&flat(7.0, 100), &Rails::Single(sp("Z"))).unwrap(), 7.0);
        let ode = PolynomialOde::new(vec![sp("Z")]).unwrap();
        let traj = integrate(&ode, &[7.0], &IntegratorConfig::default()).unwrap();
        assert_eq!(estimate_limit(&traj, &Rails::Single(sp("Z"))).unwrap(), 7.0);
        assert_eq!(check_conservation(&traj, &ConservationLaw::LnMinus { log_of: sp("Z"), minus: sp("Z") }), 0.0);
    }

    #[test]
    fn unsettled_output_is_rejected() {
        let mut t = flat(1.0, 100);
        t.states[99][0] = 1.1;
        assert!(matches!(estimate_limit(&t, &Rails::Single(sp("Z"))), Err(AnalysisError::NotConverged { .. })));
    }

    #[test]
    fn single_point_sweep_at_fixed_point_is_trivially_fine() {
        let p = SweepPoint {
            inputs: BTreeMap::new(),
            limit: 1.0,
            result: Ok(RateEstimate {
                fitted_rate: 2.0,
                fit_window: (0.0, 1.0),
                r_squared: 1.0,
                limit_used: 1.0,
                floor_hit: false,
                points: 10,
            }),
        };
        let r = SweepReport::new(vec![p], 0.5);
        assert!(r.input_independent);
        assert!(!r.with_threshold(3.0).input_independent);
    }
}
