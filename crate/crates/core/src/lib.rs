//! Detection-time models for nuclear-spin sensing with ensembles of NV centers.
//!
//! The crate covers two readout protocols for an unpolarized nuclear ensemble:
//! dynamical decoupling on separable probes and a spin echo on a GHZ-entangled
//! probe register. It provides
//!
//! * the shared physical vocabulary ([`model`]): constants, coupling strength,
//!   semicylindrical probe geometry and the dipole coefficients `A`, `B`, `C`;
//! * discrete and continuum geometric factors with a quadrature oracle
//!   ([`geometry`]);
//! * the closed-form observables and the SNR / detection-time chain ([`signal`]);
//! * optimizers that re-derive the optimal geometry and the detection-time
//!   prefactors ([`optimize`]);
//! * an exact dense simulator of nuclear + probe qubits that executes both
//!   protocols step by step ([`oracle`]).
//!
//! All quantities are SI internally. Probe densities are accepted in cm⁻³ at
//! the configuration boundary and converted with [`model::per_cm3_to_per_m3`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod model;
pub mod optimize;
pub mod oracle;
mod quadrature;
pub mod report;
pub mod signal;

pub use error::{Error, Result};
pub use geometry::{FormVariant, GeometricFactorResult, GeometryMethod};
pub use model::{
    DipoleCoefficients, EnsembleGeometry, GammaConvention, NvPreset, PhysicalScenario, SiteRole,
    SpinSite,
};
pub use optimize::{GeometryVariant, OptimizationOutcome};
pub use report::{DiscrepancyReport, ReportEntry, Verdict};
pub use signal::{DetectionResult, ProtocolParams, Provenance};
