//! Dimensionless parameters of a source/target ring pair and regime selection.

use crate::error::{Error, Result};

/// Target `(r, z)` and source `(rp, zp)` in cylindrical coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceTargetPair {
    pub r: f64,
    pub z: f64,
    pub rp: f64,
    pub zp: f64,
}

impl SourceTargetPair {
    pub fn new(r: f64, z: f64, rp: f64, zp: f64) -> Self {
        Self { r, z, rp, zp }
    }

    /// Source and target exchanged.
    pub fn swapped(self) -> Self {
        Self::new(self.rp, self.zp, self.r, self.z)
    }

    /// Pair with `r = rp = R0·sqrt(α/2)`, `zp = 0`, `z = R0·sqrt(1-α)`.
    pub fn from_alpha(alpha: f64, r0: f64) -> Self {
        let r = r0 * (alpha / 2.0).sqrt();
        let z = r0 * (1.0 - alpha).sqrt();
        Self::new(r, z, r, 0.0)
    }
}

/// Everything the evaluators consume, derived once per pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeomParams {
    pub pair: SourceTargetPair,
    pub k: f64,
    /// `sqrt(r² + rp² + (z-zp)²)`
    pub r0: f64,
    /// `k·R0`
    pub kappa: f64,
    /// `2·r·rp / R0²`
    pub alpha: f64,
    /// `1 - α`, formed from the separation so it keeps full relative accuracy.
    pub one_minus_alpha: f64,
    /// `R0²`
    pub a: f64,
    /// `2·r·rp`
    pub b: f64,
    /// `sqrt(1/α - 1)`
    pub beta_minus: f64,
    /// `sqrt(1/α + 1)`
    pub beta_plus: f64,
    /// `r - rp`
    pub dr: f64,
    /// `z - zp`
    pub dz: f64,
}

/// Which evaluation path applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegimeTag {
    NearAxis,
    NonDecay,
    Decay,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regime {
    pub tag: RegimeTag,
    pub m_star: f64,
}

pub const NEAR_AXIS_ALPHA: f64 = 0.05;
pub const NEAR_UNITY_GAP: f64 = 1e-5;
pub const NEAR_UNITY_MAX_MODE: usize = 3000;

pub fn compute_params(pair: SourceTargetPair, k: f64) -> Result<GeomParams> {
    compute_params_with_offset(pair, pair.r - pair.rp, pair.z - pair.zp, k)
}

/// As [`compute_params`], with `r - rp` and `z - zp` supplied by a caller
/// that knows them more accurately than the rounded coordinates do.
pub fn compute_params_with_offset(
    pair: SourceTargetPair,
    dr: f64,
    dz: f64,
    k: f64,
) -> Result<GeomParams> {
    let SourceTargetPair { r, z, rp, zp } = pair;
    if !(r.is_finite() && z.is_finite() && rp.is_finite() && zp.is_finite()) {
        return Err(Error::Domain("coordinates must be finite".into()));
    }
    if r <= 0.0 || rp <= 0.0 {
        return Err(Error::Domain(format!(
            "radii must be positive (r = {r}, rp = {rp})"
        )));
    }
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::Domain(format!("wavenumber must be finite and >= 0 (k = {k})")));
    }
    let sep2 = dr * dr + dz * dz;
    if sep2 == 0.0 {
        return Err(Error::Domain("source and target coincide".into()));
    }
    let scale = r.max(rp).max(dz.abs());
    let (rs, rps, dzs) = (r / scale, rp / scale, dz / scale);
    let r0 = scale * (rs * rs + rps * rps + dzs * dzs).sqrt();
    let a = r * r + rp * rp + dz * dz;
    let b = 2.0 * (r * rp);
    let alpha = b / a;
    let one_minus_alpha = sep2 / a;
    Ok(GeomParams {
        pair,
        k,
        r0,
        kappa: k * r0,
        alpha,
        one_minus_alpha,
        a,
        b,
        beta_minus: (sep2 / b).sqrt(),
        beta_plus: ((a + b) / b).sqrt(),
        dr,
        dz,
    })
}

/// Stationary-phase transition mode `(κ/√2)·sqrt(1 - sqrt(1-α²))`.
pub fn m_star(kappa: f64, alpha: f64, one_minus_alpha: f64) -> f64 {
    let root = (one_minus_alpha * (1.0 + alpha)).sqrt();
    // 1 - sqrt(1-α²) without cancellation at small α
    let gap = alpha * alpha / (1.0 + root);
    kappa / std::f64::consts::SQRT_2 * gap.sqrt()
}

pub fn classify_regime(g: &GeomParams, m_max: usize) -> Regime {
    let m_star = m_star(g.kappa, g.alpha, g.one_minus_alpha);
    let tag = if g.alpha <= NEAR_AXIS_ALPHA && g.kappa * g.alpha <= 1.0 {
        RegimeTag::NearAxis
    } else if g.one_minus_alpha <= NEAR_UNITY_GAP && m_max <= NEAR_UNITY_MAX_MODE {
        RegimeTag::NonDecay
    } else if (m_max as f64) > m_star {
        RegimeTag::Decay
    } else {
        RegimeTag::NonDecay
    };
    Regime { tag, m_star }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn well_separated_reference_geometry() {
        let g = compute_params(SourceTargetPair::new(2.35, 3.16, 3.68, 2.82), 2500.0).unwrap();
        assert!((g.alpha - 0.902).abs() < 5e-4, "{}", g.alpha);
        assert!((g.kappa - 10949.0).abs() < 1.0, "{}", g.kappa);
    }

    #[test]
    fn unit_geometry() {
        let g = compute_params(SourceTargetPair::new(1.0, 1.0, 1.0, 0.0), 3.0).unwrap();
        assert!(rel(g.r0, 3f64.sqrt()) < 1e-15);
        assert!(rel(g.alpha, 2.0 / 3.0) < 1e-15);
        assert!(rel(g.beta_minus, 0.5f64.sqrt()) < 1e-15);
    }

    #[test]
    fn constructed_near_unity_alpha() {
        let eps = 1e-9;
        // δ² = 2ε/(1-ε), evaluated in double-word arithmetic
        use crate::ext::ExtReal;
        let e = ExtReal::from_f64(eps);
        let d2 = e.mul_f64(2.0) / (ExtReal::ONE - e);
        let delta = d2.sqrt().to_f64();
        let g = compute_params(SourceTargetPair::new(1.0, delta, 1.0, 0.0), 2500.0).unwrap();
        assert!(rel(g.one_minus_alpha, eps) < 1e-12);
        assert!(rel(g.alpha, 1.0 - eps) < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(compute_params(SourceTargetPair::new(1.0, 0.0, 1.0, 0.0), 1.0).is_err());
        assert!(compute_params(SourceTargetPair::new(0.0, 0.0, 1.0, 0.0), 1.0).is_err());
        assert!(compute_params(SourceTargetPair::new(1.0, 0.0, -1.0, 0.0), 1.0).is_err());
        assert!(compute_params(SourceTargetPair::new(1.0, 0.0, 2.0, 0.0), -1.0).is_err());
    }

    #[test]
    fn m_star_examples() {
        let r = classify_regime(
            &compute_params(SourceTargetPair::new(2.35, 3.16, 3.68, 2.82), 100.0).unwrap(),
            300,
        );
        assert_eq!(r.tag, RegimeTag::Decay);
        assert!((r.m_star - 233.0).abs() < 1.0, "{}", r.m_star);
        assert_eq!(m_star(5.0, 0.0, 1.0), 0.0);
        assert!(rel(m_star(7.0, 1.0, 0.0), 7.0 / 2f64.sqrt()) < 1e-15);
    }

    #[test]
    fn regime_thresholds() {
        let near = compute_params(SourceTargetPair::from_alpha(0.01, 1.0), 0.5).unwrap();
        assert_eq!(classify_regime(&near, 10).tag, RegimeTag::NearAxis);
        // small alpha but high frequency falls back to the contour path
        let fast = compute_params(SourceTargetPair::from_alpha(0.01, 1.0), 500.0).unwrap();
        assert_ne!(classify_regime(&fast, 10).tag, RegimeTag::NearAxis);
        // near-unity alpha is forced non-decay for moderate M
        let close = compute_params(SourceTargetPair::new(1.0, 1e-4, 1.0, 0.0), 1e-3).unwrap();
        assert_eq!(classify_regime(&close, 1000).tag, RegimeTag::NonDecay);
        assert_eq!(classify_regime(&close, 5000).tag, RegimeTag::Decay);
    }

    proptest! {
        #[test]
        fn exchange_symmetry(r in 0.1f64..5.0, z in -3.0f64..3.0, rp in 0.1f64..5.0, zp in -3.0f64..3.0, k in 0.0f64..100.0) {
            let p = SourceTargetPair::new(r, z, rp, zp);
            let g1 = compute_params(p, k).unwrap();
            let g2 = compute_params(p.swapped(), k).unwrap();
            prop_assert_eq!(g1.r0, g2.r0);
            prop_assert_eq!(g1.alpha, g2.alpha);
            prop_assert_eq!(g1.kappa, g2.kappa);
            prop_assert_eq!(g1.beta_minus, g2.beta_minus);
            prop_assert_eq!(g1.beta_plus, g2.beta_plus);
            prop_assert_eq!(g1.a, g2.a);
            prop_assert_eq!(g1.b, g2.b);
        }

        #[test]
        fn invariants(r in 0.01f64..5.0, z in -3.0f64..3.0, rp in 0.01f64..5.0, zp in -3.0f64..3.0) {
            let g = compute_params(SourceTargetPair::new(r, z, rp, zp), 1.0).unwrap();
            prop_assert!(g.alpha < 1.0 && g.alpha >= 0.0);
            prop_assert!(rel(g.r0 * g.r0, r * r + rp * rp + (z - zp) * (z - zp)) < 1e-15);
            prop_assert!(rel(g.beta_minus * g.beta_minus + 1.0, 1.0 / g.alpha) < 1e-13);
            prop_assert!(rel(g.alpha + g.one_minus_alpha, 1.0) < 1e-15);
        }

        #[test]
        fn m_star_monotone(k1 in 0.0f64..1e4, dk in 0.0f64..1e3, a1 in 0.0f64..0.999, da in 0.0f64..0.001) {
            let f = |k: f64, a: f64| m_star(k, a, 1.0 - a);
            prop_assert!(f(k1 + dk, a1) >= f(k1, a1));
            prop_assert!(f(k1, a1 + da) >= f(k1, a1) * (1.0 - 1e-15));
        }
    }
}
