//! Trajectory CSV: header `t,<species...>`, one row per sample, every value
//! in `{:.16e}` (17 significant digits, round-trips exactly).

use super::{SimError, StepStats, Trajectory};
use crate::crn::SpeciesId;

pub fn write_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t");
    for s in &traj.species {
        out.push(',');
        out.push_str(s.as_str());
    }
    out.push('\n');
    for (t, row) in traj.times.iter().zip(&traj.states) {
        out.push_str(&format!("{t:.16e}"));
        for v in row {
            out.push_str(&format!(",{v:.16e}"));
        }
        out.push('\n');
    }
    out
}

pub fn read_csv(text: &str) -> Result<Trajectory, SimError> {
    let err = |line: usize, message: String| SimError::Csv { line, message };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let mut cols = header.split(',');
    if cols.next() != Some("t") {
        return Err(err(1, "first column must be `t`".into()));
    }
    let species = cols
        .map(|c| SpeciesId::new(c.trim()).map_err(|e| err(1, e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let mut times = Vec::new();
    let mut states = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let vals = line
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| err(i + 1, format!("bad number `{v}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        if vals.len() != species.len() + 1 {
            return Err(err(i + 1, format!("expected {} columns, found {}", species.len() + 1, vals.len())));
        }
        if let Some(&prev) = times.last() {
            if vals[0] <= prev {
                return Err(err(i + 1, "times must increase".into()));
            }
        }
        times.push(vals[0]);
        states.push(vals[1..].to_vec());
    }
    Ok(Trajectory { species, times, states, step_errors: Vec::new(), stats: StepStats::default() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::sp;

    #[test]
    fn round_trip_is_exact() {
        let traj = Trajectory {
            species: vec![sp("A"), sp("log6.X")],
            times: vec![0.0, 0.1, 1.0 / 3.0],
            states: vec![vec![1.0, 0.0], vec![std::f64::consts::E, -1e-300], vec![1e300, 0.1 + 0.2]],
            step_errors: vec![],
            stats: StepStats::default(),
        };
        let text = write_csv(&traj);
        assert!(text.starts_with("t,A,log6.X\n0.0000000000000000e0,"));
        assert_eq!(read_csv(&text).unwrap(), traj);
    }

    #[test]
    fn rejects_malformed() {
        assert!(read_csv("x,A\n").is_err());
        assert!(matches!(read_csv("t,A\n0,1\n0,2\n"), Err(SimError::Csv { line: 3, .. })));
        assert!(matches!(read_csv("t,A\n0,1,2\n"), Err(SimError::Csv { line: 2, .. })));
    }
}
