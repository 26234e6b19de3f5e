//! Reference integration for the integration tests: classical fixed-step
//! RK4, sharing no code with the library integrator.

#![allow(dead_code)]

use crncalc::crn::PolynomialOde;

/// Right-hand side read term by term from a polynomial ODE.
pub fn polynomial_rhs(ode: &PolynomialOde) -> impl Fn(&[f64], &mut [f64]) {
    let vars = ode.variables().to_vec();
    let terms: Vec<Vec<(f64, Vec<(usize, i32)>)>> = vars
        .iter()
        .map(|v| {
            ode.rhs(v)
                .iter()
                .map(|m| {
                    let powers = m
                        .powers()
                        .iter()
                        .map(|(s, &p)| (vars.iter().position(|w| w == s).expect("species of the system"), p as i32))
                        .collect();
                    (m.coefficient(), powers)
                })
                .collect()
        })
        .collect();
    move |y, dy| {
        for (i, eq) in terms.iter().enumerate() {
            dy[i] = eq.iter().map(|(c, ps)| ps.iter().fold(*c, |acc, &(j, p)| acc * y[j].powi(p))).sum();
        }
    }
}

fn step(f: &dyn Fn(&[f64], &mut [f64]), y: &mut [f64], h: f64) {
    let n = y.len();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    f(y, &mut k1);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    f(&tmp, &mut k2);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    f(&tmp, &mut k3);
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    f(&tmp, &mut k4);
    for i in 0..n {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// State at `t_end` after `steps` equal steps.
pub fn rk4(f: &dyn Fn(&[f64], &mut [f64]), y0: &[f64], t_end: f64, steps: usize) -> Vec<f64> {
    let h = t_end / steps as f64;
    let mut y = y0.to_vec();
    for _ in 0..steps {
        step(f, &mut y, h);
    }
    y
}

/// States at each of the increasing `times`, stepping with at most `h`.
pub fn rk4_at(f: &dyn Fn(&[f64], &mut [f64]), y0: &[f64], times: &[f64], h: f64) -> Vec<Vec<f64>> {
    let mut y = y0.to_vec();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let n = (span / h).ceil() as usize;
            for _ in 0..n {
                step(f, &mut y, span / n as f64);
            }
        }
        t = target;
        out.push(y.clone());
    }
    out
}

#[test]
fn rk4_solves_linear_decay() {
    let f = |y: &[f64], dy: &mut [f64]| dy[0] = -y[0];
    let y = rk4(&f, &[1.0], 5.0, 5000);
    assert!((y[0] - (-5f64).exp()).abs() < 1e-13);
}
