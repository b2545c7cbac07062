//! A numerical laboratory for dispersive estimates of orthonormal quantum
//! systems and Schatten-class space-time operators.
//!
//! The crate implements, at desk scale, the objects behind mixed-norm
//! space-time bounds for systems of orthonormal functions evolving under the
//! free Schrödinger flow:
//!
//! * [`spectral`] — periodic grids, the unitary Fourier pair, the free flow.
//! * [`gaussian`] — closed-form coherent-state ensembles: the independent
//!   analytic oracle every discretized pipeline is validated against.
//! * [`schatten`] — singular values, Schatten norms, weak quasi-norms, traces
//!   of powers for dense discretized operators.
//! * [`strichartz`] — low-rank states `γ = Σ n_j |u_j⟩⟨u_j|`, their densities,
//!   mixed space-time norms, and inequality ratios.
//! * [`phase_space`] — operators `f(αx+βp)`, the generalized Kato–Seiler–Simon
//!   product bound, the dual space-time operator `B_V`, and its end-point
//!   trace divergence.
//! * [`wave_op`] — the Dyson-series wave operator for time-dependent
//!   potentials, factorial and Schatten growth checks, the scattering matrix,
//!   and a split-step direct propagator used as a cross-validation oracle.
//! * [`quadrature`] — ordered-simplex integration, singular multilinear
//!   integrals with admissibility checking, shared mixed-norm kernels.
//! * [`experiments`] — reproducible experiment drivers with CSV reports.
//!
//! Run the experiment CLI with `cargo run --release --bin strichartz-lab`, or
//! start from the `examples/` directory: each example exercises one major
//! capability end to end.

pub mod error;
pub mod experiments;
pub mod gaussian;
pub mod phase_space;
pub mod quadrature;
pub mod schatten;
pub mod spectral;
pub mod strichartz;
pub mod wave_op;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{LabError, Result};
