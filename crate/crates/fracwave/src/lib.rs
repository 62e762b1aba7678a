//! Spectral solver for fractional viscoelastic wave equations with
//! obstacle-type constraints.
//!
//! The model is a wave equation posed on a bounded domain Ω, driven by the
//! Riesz fractional gradient D^s (0 < s ≤ 1) instead of the classical
//! gradient, with a viscous damping term and a maximal monotone constraint
//! graph regularized by Moreau–Yosida penalization:
//!
//! ```text
//! ü + 𝒜^s u + ν ℬ^s u̇ + β^ε(u) ∋ g,     𝒜^s u = −D^s·(A D^s u),
//! u = 0 on ℝ^d ∖ Ω,                      ℬ^s u = −D^s·(B D^s u).
//! ```
//!
//! The crate provides:
//!
//! * [`domain`] — the discrete geometry: Ω embedded in a periodic extended
//!   box, scalar/vector fields with interior masks, weighted norms.
//! * [`frac_ops`] — D^s and its negative adjoint realized as Fourier
//!   multipliers, the heterogeneous elliptic operators 𝒜^s and ℬ^s, and an
//!   independent singular-integral oracle for cross-checking.
//! * [`monotone`] — maximal monotone graphs, resolvents, Yosida
//!   approximations and Moreau envelopes.
//! * [`rothe`] — the implicit two-step time discretization, one semismooth
//!   Newton + Krylov solve per step, and trajectory interpolants.
//! * [`diagnostics`] — energy ledgers, a-priori bounds, penalty mass,
//!   BV functionals, and weak/very-weak residual checks.
//! * [`harness`] — parameter sweeps for the three limit passages
//!   (penalty ε → 0, viscosity ν → 0, exponent s → 1) and the acceptance
//!   criteria behind `fracwave check`.

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod diagnostics;
pub mod domain;
pub mod harness;
pub mod monotone;
pub mod rothe;
pub mod frac_ops;

pub(crate) mod spectral;
