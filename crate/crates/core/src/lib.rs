//! Azimuthal Fourier modes of the free-space Helmholtz Green's function.
//!
//! For a source ring `(rp, zp)` and target ring `(r, z)` the crate computes
//! `G_m`, `m = 0..=M`, together with all first- and second-order derivatives
//! with respect to `(r, z, rp, zp)`, at a cost linear in `M` and independent
//! of the wavenumber and of the source-target distance.
//!
//! The normalization is
//!
//! ```text
//! G_m = 1/(2π) ∫_{-π}^{π} e^{ik|x-x'|} / (4π|x-x'|) e^{-imθ} dθ,   θ = φ - φ'
//! ```
//!
//! so that `G(x, x') = Σ_m G_m e^{imθ}` and `G_{-m} = G_m`.
//!
//! Entry point: [`assembly::evaluate_all`].

pub mod assembly;
pub mod bench;
pub mod bie;
pub mod contour;
pub mod error;
pub mod ext;
pub mod geometry;
pub mod modal_eval;
pub mod nearaxis;
pub mod oracle;
pub mod quadrature;
pub mod recurrence;
pub mod sweep;

pub use assembly::{evaluate_all, CylDerivBundle, DerivBundle, Evaluation};
pub use error::{Error, Result};
pub use geometry::{GeomParams, Regime, RegimeTag, SourceTargetPair};
pub use num_complex::Complex64;

/// Requested derivative order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Want {
    /// `G_m` only.
    Values,
    /// `G_m` and first derivatives.
    First,
    /// `G_m`, first and second derivatives.
    Second,
}

impl Want {
    pub fn from_level(level: u8) -> Option<Self> {
        match level {
            0 => Some(Want::Values),
            1 => Some(Want::First),
            2 => Some(Want::Second),
            _ => None,
        }
    }

    pub fn level(self) -> u8 {
        match self {
            Want::Values => 0,
            Want::First => 1,
            Want::Second => 2,
        }
    }
}
