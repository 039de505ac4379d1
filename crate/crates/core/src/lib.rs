//! Numerical laboratory for fully nonlinear parabolic equations
//! `u_t - F(x, t, D^2 u) = f`: a monotone explicit solver, the regularity
//! estimators (Hölder, Campanato, Log-Lipschitz, Sobolev, p-BMO), paraboloid
//! good-set classification and an experiment driver.

pub mod config;
pub mod error;
pub mod experiment;
pub mod expr;
pub mod field;
pub mod goodsets;
pub mod grid;
pub mod lp;
pub mod operators;
pub mod regularity;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
