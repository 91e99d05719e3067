//! Numerical toolkit for mobile defects in a dimerized Bose gas.

pub mod error;
pub mod harness;
pub mod kinematics;
pub mod linalg;
pub mod momentum_ed;
pub mod models;
pub mod mps;
pub mod tebd;

pub use error::{Error, Result, ValidationIssue};
