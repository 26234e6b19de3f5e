use super::{IntegratorConfig, SimError, StepStats, Trajectory};
use crate::crn::PolynomialOde;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

fn finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn rms(v: impl Iterator<Item = f64>, n: usize) -> f64 {
    (v.map(|x| x * x).sum::<f64>() / n.max(1) as f64).sqrt()
}

pub(super) fn run(ode: &PolynomialOde, init: &[f64], cfg: &IntegratorConfig) -> Result<Trajectory, SimError> {
    let f = ode.compile();
    let n = init.len();
    // Mass-action systems started in the orthant stay there; steps leaving it
    // are integration artifacts and get retried.
    let keep_orthant = ode.is_mass_action_realizable().realizable && init.iter().all(|&x| x >= 0.0);
    let times = cfg.times();
    let mut states = Vec::with_capacity(times.len());
    states.push(init.to_vec());
    let mut next_sample = 1;

    let mut t = 0.0;
    let mut y = init.to_vec();
    let mut k1 = vec![0.0; n];
    f.eval(&y, &mut k1);
    if !finite(&k1) {
        return Err(SimError::NonFinite { t });
    }
    let scale = |a: &[f64], b: &[f64], i: usize| cfg.abs_tol + cfg.rel_tol * a[i].abs().max(b[i].abs());

    let mut h = {
        let d0 = rms((0..n).map(|i| y[i] / scale(&y, &y, i)), n);
        let d1 = rms((0..n).map(|i| k1[i] / scale(&y, &y, i)), n);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1: Vec<f64> = (0..n).map(|i| y[i] + h0 * k1[i]).collect();
        let mut f1 = vec![0.0; n];
        f.eval(&y1, &mut f1);
        let d2 = rms((0..n).map(|i| (f1[i] - k1[i]) / scale(&y, &y, i)), n) / h0;
        let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
        let h = (100.0 * h0).min(h1);
        if h.is_finite() && h > 0.0 { h } else { 1e-6 }
    }
    .min(cfg.max_step)
    .min(cfg.t_end);

    let mut stats = StepStats { smallest_step: f64::INFINITY, ..Default::default() };
    let mut step_errors = Vec::new();
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    let mut attempts = 0usize;
    let mut overflowing = false;

    while next_sample < times.len() {
        attempts += 1;
        if attempts > cfg.max_steps {
            return Err(SimError::StepFailure { t, h });
        }
        let last = t + h >= cfg.t_end;
        if last {
            h = cfg.t_end - t;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(if overflowing { SimError::NonFinite { t } } else { SimError::StepFailure { t, h } });
        }
        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        f.eval(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f.eval(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f.eval(&tmp, &mut k4);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f.eval(&tmp, &mut k5);
        for i in 0..n {
            tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f.eval(&tmp, &mut k6);
        for i in 0..n {
            y1[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f.eval(&y1, &mut k7);

        let err = rms(
            (0..n).map(|i| {
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]) / scale(&y, &y1, i)
            }),
            n,
        );
        let bad = !err.is_finite() || !finite(&y1) || !finite(&k7);
        overflowing = bad;
        let left_orthant = keep_orthant && y1.iter().any(|&x| x < -cfg.abs_tol);
        if bad || err > 1.0 || left_orthant {
            stats.rejected += 1;
            h *= if bad || left_orthant {
                0.25
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0)
            };
            continue;
        }

        let t1 = if last { cfg.t_end } else { t + h };
        while next_sample < times.len() && times[next_sample] <= t1 {
            let ts = times[next_sample];
            if ts == t1 {
                states.push(y1.clone());
            } else {
                let th = (ts - t) / h;
                let th1 = 1.0 - th;
                let row = (0..n)
                    .map(|i| {
                        let dy = y1[i] - y[i];
                        let bspl = h * k1[i] - dy;
                        let r4 = dy - h * k7[i] - bspl;
                        let r5 = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                        y[i] + th * (dy + th1 * (bspl + th * (r4 + th1 * r5)))
                    })
                    .collect();
                states.push(row);
            }
            next_sample += 1;
        }

        stats.accepted += 1;
        stats.largest_step = stats.largest_step.max(h);
        stats.smallest_step = stats.smallest_step.min(h);
        step_errors.push(err);
        t = t1;
        std::mem::swap(&mut y, &mut y1);
        std::mem::swap(&mut k1, &mut k7);
        let factor = if err == 0.0 { MAX_FACTOR } else { (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR) };
        h = (h * factor).min(cfg.max_step);
    }

    Ok(Trajectory { species: ode.variables().to_vec(), times, states, step_errors, stats })
}
