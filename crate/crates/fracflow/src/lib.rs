//! fracflow: a sequential-implicit two-phase flow simulator for fractured
//! porous media. Fractures are embedded in a Cartesian matrix grid
//! (EDFM); the implicit transport solve can be accelerated by an
//! adaptively activated nonlinear-elimination preconditioner that
//! pre-solves the fracture unknowns before each global Newton pass.

pub mod bench;
pub mod case;
pub mod edfm;
pub mod flow;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod model;
pub mod netgen;
pub mod nepc;
pub mod newton;
pub mod output;
pub mod physics;
pub mod sim;
pub mod transport;
pub mod units;

pub use error::{FracflowError, Result};
