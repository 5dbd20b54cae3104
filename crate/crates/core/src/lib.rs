//! Finite-volume solver and admissibility checks for 1D scalar conservation laws
//! `u_t + A(x,u)_x = 0` whose flux jumps in `x`.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the precision for common use.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod contraction;
pub mod csvio;
pub mod fluxmodel;
pub mod germ;
pub mod grid;
pub mod kinetic;
pub mod scalar;
pub mod solver1d;

pub use config::{parse_config, ConfigError, ProblemConfig};
pub use contraction::{
    contraction_report, l1_distance, localized_contraction, ContractionError, ContractionReport,
    LocalizedReport, Verdict,
};
pub use fluxmodel::{FluxError, Kernel, Shape, Side, StateBox};
pub use germ::{find_connections, is_admissible, q_value, w_sign_sweep, w_value, GermError, SweepConfig};
pub use grid::{GridError, InitialData};
pub use kinetic::{chi, lift, HatRule, KineticError, Mollifier, VGrid};
pub use scalar::Scalar;
pub use solver1d::{run, viscous_reference, SolverConfig, SolverError};

pub type FluxModel = fluxmodel::FluxModel<f64>;
pub type InterfacePair = fluxmodel::InterfacePair<f64>;
pub type GermState = germ::GermState<f64>;
pub type GermReport = germ::GermReport<f64>;
pub type Grid1D = grid::Grid1D<f64>;
pub type CellField = grid::CellField<f64>;
pub type Trajectory = solver1d::Trajectory<f64>;
pub type DefectMeasure = kinetic::DefectMeasure<f64>;

pub type FluxModelF32 = fluxmodel::FluxModel<f32>;
pub type GermStateF32 = germ::GermState<f32>;
pub type TrajectoryF32 = solver1d::Trajectory<f32>;
