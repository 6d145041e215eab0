//! Numerical laboratory for blow-up of the weakly coupled system
//!
//! ```text
//! u_tt - Δu + μ₁/(1+t) u_t + ν₁²/(1+t)² u = |v_t|^p
//! v_tt - Δv + μ₂/(1+t) v_t + ν₂²/(1+t)² v = |u_t|^q
//! ```
//!
//! with data `(ε f₁, ε g₁, ε f₂, ε g₂)` supported in the ball of radius `R`.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerics:
//!
//! * [`exponents`]: the Λ/Ω exponent algebra and lifespan-case classification.
//! * [`specfun`]: `K_ν` by quadrature, the spatial weight `φ^η`, the temporal weight `ρ^η`
//!   and their residual checks.
//! * [`solver`]: an explicit radial finite-difference simulator with blow-up detection.
//! * [`functionals`]: the weighted integrals `F`, `F̃`, `G`, `G̃`, `L` along a run and the checks
//!   built on them.
//! * [`kato`]: the reduced ODE system for `L₁, L₂` and the lifespan sweep.
//!
//! File formats, the command line and threading live in the `blowuplab` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod exponents;
pub mod functionals;
pub mod kato;
pub mod quad;
pub mod solver;
pub mod specfun;

pub use error::{Error, Result};
pub use exponents::{CaseLabel, LifespanBound, RegionReport, SystemParams};
