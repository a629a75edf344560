//! Adaptive tracking control of the collocated joints of underactuated
//! mechanical systems, with a two-link reference model, a fixed-step
//! closed-loop simulator and runtime Lyapunov/determinant monitors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod experiment;
pub mod model;
pub mod monitor;
pub mod plant;
