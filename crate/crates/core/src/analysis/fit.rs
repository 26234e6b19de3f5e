use super::AnalysisError;
use crate::library::Rails;
use crate::sim::{IntegratorConfig, Trajectory};

/// Window and acceptance rules for rate fits. Errors are measured relative
/// to `scale = max(1, |limit|, |final rails|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    /// The window opens after the last sample with `err > upper * scale`.
    pub upper: f64,
    /// Lowest error used, relative to scale.
    pub lower: f64,
    /// Integrator tolerance; samples below `10 * rel_tol * scale` are floor.
    pub rel_tol: f64,
    pub min_points: usize,
    pub min_r2: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { upper: 1e-2, lower: 1e-12, rel_tol: 1e-9, min_points: 8, min_r2: 0.9 }
    }
}

impl FitOptions {
    pub fn for_config(cfg: &IntegratorConfig) -> Self {
        FitOptions { rel_tol: cfg.rel_tol, ..Default::default() }
    }
}

/// Log-linear fit of `|u(t) - u*|` over the decay window; `fitted_rate` is
/// minus the slope. An output that sits at its limit from the start has
/// infinite rate.
#[derive(Clone, Debug, PartialEq)]
pub struct RateEstimate {
    pub fitted_rate: f64,
    pub fit_window: (f64, f64),
    pub r_squared: f64,
    pub limit_used: f64,
    pub floor_hit: bool,
    pub points: usize,
}

pub fn estimate_rate(traj: &Trajectory, output: &Rails, limit: f64) -> Result<RateEstimate, AnalysisError> {
    estimate_rate_with(traj, output, limit, &FitOptions::default())
}

pub fn estimate_rate_with(
    traj: &Trajectory,
    output: &Rails,
    limit: f64,
    opts: &FitOptions,
) -> Result<RateEstimate, AnalysisError> {
    let series = traj.output_series(output);
    let last = traj.len() - 1;
    let rails_scale = output.species().iter().map(|s| traj.value(last, s).abs()).fold(0.0, f64::max);
    let scale = limit.abs().max(rails_scale).max(1.0);
    let upper = opts.upper * scale;
    let floor = (opts.lower * scale).max(10.0 * opts.rel_tol * scale);
    let err: Vec<f64> = series.iter().map(|u| (u - limit).abs()).collect();

    if err.iter().all(|&e| e < floor) {
        return Ok(RateEstimate {
            fitted_rate: f64::INFINITY,
            fit_window: (traj.times[0], traj.times[last]),
            r_squared: 1.0,
            limit_used: limit,
            floor_hit: true,
            points: 0,
        });
    }
    // Open after the last excursion above `upper`; earlier dips are
    // zero crossings of a transient, not decay.
    let start = match err.iter().rposition(|&e| e > upper) {
        Some(k) if k == last => return Err(AnalysisError::NotConverged { variation: err[last] / scale }),
        Some(k) => k + 1,
        None => 1,
    };
    let stop = (start..err.len()).find(|&k| err[k] < floor);
    let end = stop.unwrap_or(err.len());
    let (t, y): (Vec<f64>, Vec<f64>) = (start..end).map(|k| (traj.times[k], err[k].ln())).unzip();
    if t.len() < opts.min_points {
        return Err(AnalysisError::DegenerateFit(format!(
            "{} samples in the window [{:e}, {:e}], need {}",
            t.len(),
            floor,
            upper,
            opts.min_points
        )));
    }
    let (slope, _, r2) = linear_fit(&t, &y);
    let rate = -slope;
    if !(r2 >= opts.min_r2) || !rate.is_finite() {
        return Err(AnalysisError::DegenerateFit(format!("r² = {r2:.4} below {}", opts.min_r2)));
    }
    Ok(RateEstimate {
        fitted_rate: rate,
        fit_window: (t[0], t[t.len() - 1]),
        r_squared: r2,
        limit_used: limit,
        floor_hit: stop.is_some(),
        points: t.len(),
    })
}

/// Least squares `y = a + b x`; returns `(b, a, r²)`.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let b = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (b, my - b * mx, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::sp;
    use crate::sim::StepStats;

    fn synthetic(f: impl Fn(f64) -> f64, t_end: f64, n: usize) -> Trajectory {
        let times: Vec<f64> = (0..n).map(|k| k as f64 * t_end / (n - 1) as f64).collect();
        Trajectory {
            species: vec![sp("U")],
            states: times.iter().map(|&t| vec![f(t)]).collect(),
            times,
            step_errors: vec![],
            stats: StepStats::default(),
        }
    }

    #[test]
    fn recovers_pure_exponential() {
        for rho in [0.1, 1.0, std::f64::consts::E, 10.0] {
            let traj = synthetic(|t| 3.0 + 0.5 * (-rho * t).exp(), 40.0 / rho.min(1.0), 2000);
            let r = estimate_rate(&traj, &Rails::Single(sp("U")), 3.0).unwrap();
            assert!((r.fitted_rate - rho).abs() < 1e-6, "{rho}: {r:?}");
        }
    }

    #[test]
    fn stationary_output_has_infinite_rate() {
        let traj = synthetic(|_| 2.0, 10.0, 100);
        let r = estimate_rate(&traj, &Rails::Single(sp("U")), 2.0).unwrap();
        assert_eq!(r.fitted_rate, f64::INFINITY);
    }

    #[test]
    fn too_short_window_is_degenerate() {
        let traj = synthetic(|t| (-100.0 * t).exp(), 1.0, 20);
        assert!(matches!(
            estimate_rate(&traj, &Rails::Single(sp("U")), 0.0),
            Err(AnalysisError::DegenerateFit(_))
        ));
    }
}
