//! Solver for multi-order Caputo fractional differential equations
//!
//! ```text
//! D^{α_e} y_e(t) = f_e(t, y(t)),   t ∈ [0, T],   e = 1..m,
//! ```
//!
//! using piecewise spectral expansions in Jacobi bases, one per distinct
//! order, with a quadrature on shared Jacobi–Piñeiro abscissae.
//!
//! ```
//! use fhbvm::mesh::Mesh;
//! use fhbvm::problem::registry;
//! use fhbvm::solver::{solve, SolverConfig};
//!
//! let p = registry("p3").unwrap();
//! let mesh = Mesh::from_divisor(2.0, 20, 100, 2).unwrap();
//! let tr = solve(&p, &mesh, &SolverConfig::default()).unwrap();
//! let exact = p.exact(2.0).unwrap();
//! assert!((tr.endpoint()[0] - exact[0]).abs() < 1e-10);
//! ```

pub mod cli;
pub mod linalg;
pub mod mesh;
pub mod mop;
pub mod ortho_poly;
pub mod problem;
pub mod solver;
pub mod special;
