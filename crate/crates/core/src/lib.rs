//! Exact differential algebra for fifth-order Hamiltonian evolution
//! equations and their canonical conservation laws.

pub mod calculus;
pub mod catalog;
pub mod densities;
pub mod error;
pub mod exactness;
pub mod expr;
pub mod factor;
pub mod groebner;
pub mod hamiltonian;
pub mod integrability;
pub mod parse;
pub mod poly;
pub mod print;
pub mod rational;
pub mod var;

pub use error::{Error, Result};
pub use expr::Expr;
pub use parse::{parse, parse_with};
pub use rational::Q;
