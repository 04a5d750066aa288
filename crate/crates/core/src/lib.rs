// `!(x > 0.0)` style checks also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod damping;
pub mod decay_ode;
pub mod error;
pub mod report;
pub mod linalg;
pub mod mesh;
pub mod verify;
pub mod wave_sim;
