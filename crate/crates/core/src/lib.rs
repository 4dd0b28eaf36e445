//! Trapping classification and cutoff-resolvent scaling for 1D semiclassical
//! Schrödinger operators arising from warped products.
//!
//! The pipeline: a warp function `A(x)` induces an effective potential
//! (`warp`), whose critical structure is detected and classified
//! (`classify`); each trapping kind predicts a scaling law for the cutoff
//! resolvent, which is measured with a CAP discretization (`discretize`,
//! `probe`) and fitted (`scaling`).  Stable wells get certified quasimode
//! lower bounds (`quasimode`); `gluing` and `billiard` cover the worst-of
//! principle and the waveguide application.

pub mod billiard;
pub mod classify;
pub mod discretize;
pub mod error;
pub mod gluing;
pub mod probe;
pub mod quasimode;
pub mod scaling;
pub mod testkit;
pub mod warp;

pub use classify::{
    classify_profile, ComponentKind, CriticalComponent, GlobalCase, LawForm, Order, ScalingLaw,
    TrappingReport,
};
pub use discretize::{auto_grid, build_operator, CapProfile, DiscreteOperator, Grid};
pub use error::{CoreError, Result};
pub use probe::{
    cutoff_resolvent_norm, energy_scan, h_sweep, probe_once, CutoffSpec, FnPotential,
    PotentialSource, ProbeConfig, ResolventSample,
};
pub use scaling::{fit_power, fit_power_log, verdict, FitModel, ScalingFitResult, Verdict};
pub use warp::{effective_potential, Family, PotentialProfile, WarpSpec};
