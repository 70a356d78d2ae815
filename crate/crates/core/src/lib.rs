//! Stationary power flows and small-signal stability certificates for
//! lossless power systems with synchronous generators, grid-forming
//! inverters and constant-power loads.
//!
//! The crate offers two independent routes to the same stability verdict:
//!
//! - [`certificate::certify`] evaluates a closed-form matrix inequality built
//!   only from the stationary power flow, the synchronous reactances and the
//!   susceptance matrix;
//! - [`lindyn::eig_verdict`] linearizes the full differential-algebraic model,
//!   Kron-reduces the bus variables and inspects the spectrum.
//!
//! [`simlab`] integrates the nonlinear model for time-domain corroboration.

// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod config;
pub mod devices;
pub mod error;
pub mod lindyn;
pub mod linalg;
pub mod netmodel;
pub mod output;
pub mod sampling;
pub mod simlab;
pub mod sweep;
pub mod system;

pub use certificate::{certify, StabilityReport, Verdict};
pub use devices::{Component, Device, DeviceState, FdcParams, LoadParams, TwoAxisParams, VsgParams};
pub use error::{Error, Result};
pub use lindyn::{eig_verdict, EigenAnalysis};
pub use netmodel::{solve_power_flow, BusSpec, Line, Network, PowerFlowSolution};
pub use system::{Equilibrium, PowerSystem};
