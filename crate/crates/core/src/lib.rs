//! Flexible-arm quadrotor: modal model of the arms, rigid-body dynamics,
//! adaptive control with open- or closed-loop reference models, a delayed
//! human-operator model and the stability analysis of the resulting loop.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod cli;
pub mod config;
pub mod delay;
pub mod dynamics;
pub mod error;
pub mod integrate;
pub mod linalg;
pub mod modal;
pub mod operator;
pub mod output;
pub mod scenario;
