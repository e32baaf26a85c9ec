//! An unfiltered low-regularity exponential integrator for the KdV equation
//!
//! ```text
//! ∂ₜu + ∂ₓ³u = (1/2) ∂ₓ(u²),   x ∈ 𝕋 = [0, 2π],
//! ```
//!
//! converging in L² with order γ for initial data in H^γ, γ ∈ (0, 1] — no
//! frequency filtering involved. The crate bundles:
//!
//! * [`spectral`] — exact Fourier-side fields, multipliers, projections,
//!   Sobolev norms and alias-free pseudospectral products;
//! * [`scheme`] — the integrator itself (one step, evolution, a first-order
//!   baseline and the Galilean reduction for nonzero-mean data);
//! * [`oracle`] — machine-precision verification of the scheme's derivation
//!   by direct convolution sums with exact oscillatory integrals;
//! * [`phase`] — the phase-function combinatorics and averaging bounds the
//!   derivation rests on, with exhaustive and sampled scans;
//! * [`experiments`] — rough initial data and the convergence-order harness;
//! * [`snapshot`] — field snapshots and report files.

pub mod error;
pub mod experiments;
pub mod oracle;
pub mod phase;
pub mod scheme;
pub mod snapshot;
pub mod spectral;

pub use error::{Error, Result};
pub use experiments::{
    convergence_study, error_l2, fit_order, reference_solution, rough_initial_data,
    ConvergenceReport, OrderFit, ReferenceCache, RoughDataSpec, StudyConfig, StudyRow,
};
pub use oracle::{
    averaging_remainder, direct_convolution, exact_cubic_term, identity_residual,
    quadratic_closed_form_residual, seeded_test_field, PhaseIntegralTable, VerificationRecord,
};
pub use phase::{
    averaging_defect, classify, phase_average, scan_averaging_bounds, scan_phase_bounds,
    AveragingScanReport, PhaseScanReport, PhaseTuple, ResonanceClass,
};
pub use scheme::{
    cubic_term, evolve, evolve_with, galilean_restore, galilean_split, quadratic_term, step,
    Evolution, GalileanFrame, SchemeConfig, SchemeKind,
};
pub use spectral::{dealiased_cube, dealiased_product, dealiased_square, GridSpec, SpectralField};
