use super::SweepReport;
use crate::library::Rails;
use crate::sim::Trajectory;

fn point_label(inputs: &std::collections::BTreeMap<String, f64>) -> String {
    inputs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

/// Line-oriented report, one line per grid point and a verdict line.
pub fn sweep_text(r: &SweepReport) -> String {
    let mut out = String::new();
    for p in &r.points {
        match &p.result {
            Ok(e) => out.push_str(&format!(
                "point {} limit={} rate={:.6} r2={:.6} window=[{:.3}, {:.3}] floor_hit={}\n",
                point_label(&p.inputs),
                p.limit,
                e.fitted_rate,
                e.r_squared,
                e.fit_window.0,
                e.fit_window.1,
                e.floor_hit
            )),
            Err(err) => out.push_str(&format!("point {} limit={} error: {err}\n", point_label(&p.inputs), p.limit)),
        }
    }
    out.push_str(&format!(
        "min_rate={:.6} threshold={} input_independent={}\n",
        r.min_rate, r.threshold, r.input_independent
    ));
    out
}

/// `grid_point,fitted_rate,r_squared,verdict`, where the verdict is whether
/// that point alone clears the threshold.
pub fn sweep_csv(r: &SweepReport) -> String {
    let mut out = String::from("grid_point,fitted_rate,r_squared,verdict\n");
    for p in &r.points {
        let (rate, r2) = match &p.result {
            Ok(e) => (e.fitted_rate, e.r_squared),
            Err(_) => (f64::NAN, f64::NAN),
        };
        let ok = rate >= r.threshold && r2 >= super::VERDICT_R2;
        out.push_str(&format!("{},{rate:.16e},{r2:.16e},{}\n", point_label(&p.inputs), if ok { "pass" } else { "fail" }));
    }
    out
}

/// Gnuplot data blocks of `t log10|u(t) - u*|`, separated by two blank lines.
pub fn gnuplot_data(runs: &[(String, &Trajectory, &Rails, f64)]) -> String {
    let mut out = String::new();
    for (i, (label, traj, rails, limit)) in runs.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        out.push_str(&format!("# {label}\n# t log10_abs_error\n"));
        for (k, t) in traj.times.iter().enumerate() {
            let e = (traj.output_value(rails, k) - limit).abs();
            if e > 0.0 {
                out.push_str(&format!("{t:.16e} {:.16e}\n", e.log10()));
            }
        }
    }
    out
}
