//! Compile arithmetic and transcendental expressions into chemical reaction
//! networks, integrate their mass-action ODEs and certify that outputs
//! converge exponentially at a rate that does not depend on the input.
//!
//! ```
//! use std::collections::BTreeMap;
//! use crncalc::compiler::{compile_str, CompileOptions, Decls};
//! use crncalc::sim::{integrate, IntegratorConfig};
//!
//! let decls = Decls::parse(&["b:nonneg(0.1,100)"]).unwrap();
//! let circuit = compile_str("ln(b)", &decls, &CompileOptions::default()).unwrap();
//! let init = circuit.resolve_init(&BTreeMap::from([("b".to_string(), 2.0)])).unwrap();
//! let traj = integrate(&circuit.ode, &init, &IntegratorConfig::default()).unwrap();
//! let out = traj.output_value(&circuit.output, traj.len() - 1);
//! assert!((out - 2f64.ln()).abs() < 1e-6);
//! ```

pub mod analysis;
pub mod cli;
pub mod compiler;
pub mod crn;
pub mod library;
pub mod sim;
pub mod verify;
