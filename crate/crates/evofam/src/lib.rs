//! Spectral evolution families for time-dependent wave equations.
//!
//! This crate realizes, at a finite spectral truncation, the two-parameter
//! solution operators of the non-autonomous string equation
//!
//! ```text
//!   u''(t) = α(t)·∂²_ξ u(t) + β(t,·)·u(t),   u(s) = φ,  u'(s) = ψ,
//! ```
//!
//! on (0, π) with Dirichlet ends, diagonalized in the sine basis. The pieces:
//!
//! * [`space`] — mode indexing, the weighted ℓ² scales X ⊃ Z ⊃ D, and
//!   product-space vectors for the first-order formulation.
//! * [`grid`] — the uniform reporting grid on [0, T].
//! * [`coeffs`] — the α/β coefficient menu with validation.
//! * [`config`] — JSON run configurations: strict parsing, canonical
//!   serialization, hashing.
//! * [`oscillator`] — per-mode solutions r_n, c_n of r'' + n²α(t)r = 0 with
//!   the two canonical initial conditions, plus rigorous energy envelopes.
//! * [`fundsol`] — the assembled second-order solution operator S(t,s) and
//!   its partial derivatives, with residual checks of its defining
//!   properties.
//! * [`reduction`] — the equivalent first-order propagator U(t,s) on the
//!   product space, built from the same mode data, with evolution-family
//!   residual checks.
//! * [`perturbation`] — the bounded multiplication perturbation β, its
//!   sine-basis matrix, the Volterra fixed-point construction of the
//!   perturbed propagator, and an independent integrator oracle for it.
//! * [`verify`] — the full machine-checkable suite combining all residuals
//!   into one report.
//! * [`report`] — the JSON report format and pass/fail accounting.
//!
//! Throughout, operators at truncation N act on sine coefficients 1..=N and
//! norms are the weighted Euclidean norms of the scale in question, so every
//! abstract statement becomes a concrete finite-dimensional residual that can
//! be measured and thresholded.

pub mod coeffs;
pub mod config;
pub mod error;
pub mod fundsol;
pub mod grid;
pub mod opnorm;
pub mod oracle;
pub mod oscillator;
pub mod perturbation;
pub mod probes;
pub mod reduction;
pub mod report;
pub mod space;
pub mod verify;

pub use coeffs::{AlphaFamily, BetaFamily, CoefficientFamily, Polynomial};
pub use config::{parse_config, serialize_config, RunSpec, Tolerances};
pub use error::{EvofamError, Result};
pub use fundsol::FundamentalSolutionField;
pub use grid::TimeGrid;
pub use oscillator::{solve_mode, ModeSample, OscillatorSolution};
pub use perturbation::{
    assemble_b, direct_oracle, solve_volterra, PerturbationMatrixField, PerturbedPropagatorField,
};
pub use reduction::{build_u_from_s, u_axiom_residuals, PropagatorMap, PropagatorSample};
pub use report::{CheckEntry, InvariantReport, ReportMeta, FORMAT_VERSION};
pub use space::{ModeIndex, ProductVector, Space, SpectralVector, Truncation};
pub use verify::{conjecture_probe, convergence_study, run_full_suite, ConjectureTable};
