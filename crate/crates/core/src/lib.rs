//! Pseudospectral solver and certificate suite for the `L²`-gradient flow of
//! a nonlocal epitaxial-growth energy on the periodic unit interval.
//!
//! The flow is `u_t = -[2π H(u_x) + ln(u_xx + a) + (3/2)(u_xx + a)²]_xx`,
//! the steepest descent of
//!
//! ```text
//! E(u) = ∫∫ ln|sin π(x-y)| v(x) v(y) dy dx + ∫ Φ(v),   v = u_xx + a,
//! Φ(ξ) = ξ ln ξ + ξ³/2.
//! ```
//!
//! Modules, bottom-up:
//!
//! - [`spectral`]: grid, transforms, derivatives, Hilbert transform, log-kernel convolution.
//! - [`energy`]: `Φ`, `E`, the convexity constant and a-priori bounds.
//! - [`subgradient`]: `δE/δu`, the metric slope, the second variation.
//! - [`flow`]: the proximal (minimizing-movement) stepper, an RK4 reference, trajectories.
//! - [`diagnostics`]: certificates checked along trajectories.
//! - [`oracle`]: brute-force quadrature references, independent of the Fourier path.
//! - [`io`]: checkpoint JSON, trajectory CSV, certificate reports.

pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod flow;
pub mod io;
pub mod oracle;
pub mod spectral;
pub mod subgradient;

pub use energy::{energy, EnergyReport, ExtReal, ModelParams};
pub use error::{EpiError, Result};
pub use spectral::{GridSpec, Profile, SpectralField};
