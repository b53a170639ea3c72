//! Deformed integration path for one mode: the two steepest-descent rays
//! leaving `z = ±1` and the Bernstein-ellipse arc joining them.
//!
//! ```text
//! γ1(τ) =  1 + τ⁴ - 2iβ₋τ²
//! γ2(τ) = -1 + τ⁴ - 2iβ₊τ²
//! E(θ)  = a_e cosθ - i b_e sinθ,   θ ∈ [θ1, θ2] ⊂ (0, π)
//! ```
//!
//! and `∫_{-1}^{1} = -∫_{γ1} + ∫_{γ2} - ∫_{E}`, each ray taken outward from
//! its endpoint and the arc taken with increasing θ.

use crate::error::{Error, Result};
use crate::geometry::GeomParams;
use num_complex::Complex64;

/// Growth budget: `|T_m| ≤ B` on the truncating ellipse.
pub const ELLIPSE_GROWTH: f64 = 100.0;
/// Contours for smaller modes reuse the geometry of this mode.
pub const MIN_GEOMETRY_MODE: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourGeometry {
    pub m_geom: usize,
    pub rho: f64,
    pub a_e: f64,
    pub b_e: f64,
    /// `a_e - 1`, kept separately since it is small for large modes.
    pub a_e_minus_one: f64,
    pub beta_minus: f64,
    pub beta_plus: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub tau1: f64,
    pub tau2: f64,
}

pub fn build_contour(g: &GeomParams, m: usize) -> Result<ContourGeometry> {
    if !(g.alpha > 0.0) {
        return Err(Error::Domain(
            "contour path needs alpha > 0; use the near-axis series".into(),
        ));
    }
    build_contour_for(g.beta_minus, g.beta_plus, m)
}

/// Geometry from the two contour scales alone.
pub fn build_contour_for(beta_minus: f64, beta_plus: f64, m: usize) -> Result<ContourGeometry> {
    let m_geom = m.max(MIN_GEOMETRY_MODE);
    let l = ELLIPSE_GROWTH.ln() / m_geom as f64;
    let rho = l.exp();
    let a_e = l.cosh();
    let b_e = l.sinh();
    let half = (0.5 * l).sinh();
    let a_e_minus_one = 2.0 * half * half;

    // γ1 meets the ellipse where A c² + a_e c - (1 + A) = 0, A = b_e²/(4β₋²),
    // written in q = 1/sqrt(A) so that β₋ → 0 neither overflows nor cancels.
    let q = 2.0 * beta_minus / b_e;
    let q2 = q * q;
    let t1 = (a_e * a_e * q2 * q2 + 4.0 * q2 + 4.0).sqrt();
    let c1 = 2.0 * (q2 + 1.0) / (a_e * q2 + t1);
    let one_minus_c1 =
        q2 * (a_e_minus_one + b_e * b_e * q2 / (t1 + 2.0 + q2)) / (a_e * q2 + t1);
    // γ2 meets it where B c² + a_e c + (1 - B) = 0, B = b_e²/(4β₊²).
    let big_b = b_e * b_e / (4.0 * beta_plus * beta_plus);
    let s2 = (b_e * b_e + (1.0 - 2.0 * big_b) * (1.0 - 2.0 * big_b)).sqrt();
    let c2 = -2.0 * (1.0 - big_b) / (a_e + s2);
    let one_plus_c2 = (a_e_minus_one + b_e * b_e / (s2 + 1.0 - 2.0 * big_b)) / (a_e + s2);

    let sin1 = (one_minus_c1 * (1.0 + c1)).sqrt();
    let sin2 = ((1.0 - c2) * one_plus_c2).sqrt();
    if !(sin1 >= 0.0 && sin1.is_finite() && sin2 > 0.0 && sin2.is_finite()) {
        return Err(Error::Internal(format!(
            "degenerate contour intersection: beta_minus = {beta_minus:e}, \
             beta_plus = {beta_plus:e}, m = {m}, cos1 = {c1}, cos2 = {c2}"
        )));
    }
    let theta1 = sin1.atan2(c1);
    let theta2 = sin2.atan2(c2);
    // τ² = b_e sinθ / (2β); near-coincident points give τ1 → (a_e - 1)^{1/4}
    let tau1 = if q2 > 0.0 {
        (sin1 / q).sqrt()
    } else {
        a_e_minus_one.sqrt().sqrt()
    };
    let tau2 = (b_e * sin2 / (2.0 * beta_plus)).sqrt();
    Ok(ContourGeometry {
        m_geom,
        rho,
        a_e,
        b_e,
        a_e_minus_one,
        beta_minus,
        beta_plus,
        theta1,
        theta2,
        tau1,
        tau2,
    })
}

impl ContourGeometry {
    pub fn gamma1(&self, tau: f64) -> Complex64 {
        let t2 = tau * tau;
        Complex64::new(1.0 + t2 * t2, -2.0 * self.beta_minus * t2)
    }

    pub fn gamma2(&self, tau: f64) -> Complex64 {
        let t2 = tau * tau;
        Complex64::new(-1.0 + t2 * t2, -2.0 * self.beta_plus * t2)
    }

    /// Point on the ellipse and its θ-derivative.
    pub fn ellipse(&self, theta: f64) -> (Complex64, Complex64) {
        let (s, c) = theta.sin_cos();
        (
            Complex64::new(self.a_e * c, -self.b_e * s),
            Complex64::new(-self.a_e * s, -self.b_e * c),
        )
    }

    /// `T_m` on the ellipse, `½(ρ^m e^{-imθ} + ρ^{-m} e^{imθ})`.
    pub fn chebyshev_on_ellipse(&self, m: usize, theta: f64) -> Complex64 {
        let lm = m as f64 * self.rho.ln();
        let (s, c) = (m as f64 * theta).sin_cos();
        Complex64::new(lm.cosh() * c, -lm.sinh() * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{compute_params, SourceTargetPair};
    use proptest::prelude::*;

    fn contour(beta_minus: f64, m: usize) -> ContourGeometry {
        let alpha = 1.0 / (1.0 + beta_minus * beta_minus);
        build_contour_for(beta_minus, (1.0 / alpha + 1.0).sqrt(), m).unwrap()
    }

    #[test]
    fn ellipse_parameters_for_mode_five() {
        for m in [0, 3, 5] {
            let c = contour(0.5, m);
            assert_eq!(c.m_geom, 5);
            assert!((c.rho - 2.51189).abs() < 1e-5);
            assert!((c.a_e - 1.45500).abs() < 1e-5);
            assert!((c.b_e - 1.05689).abs() < 1e-5);
            assert!(((c.a_e * c.a_e - c.b_e * c.b_e) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn endpoints() {
        let c = contour(0.5, 40);
        assert_eq!(c.gamma1(0.0), Complex64::new(1.0, 0.0));
        assert_eq!(c.gamma2(0.0), Complex64::new(-1.0, 0.0));
        let (p, dp) = c.ellipse(0.0);
        assert_eq!(p, Complex64::new(c.a_e, 0.0));
        assert_eq!(dp, Complex64::new(0.0, -c.b_e));
    }

    #[test]
    fn known_intersection_cosine() {
        let c = build_contour_for(0.5, 1.5, 5).unwrap();
        assert!((c.theta2.cos() + 0.63655).abs() < 1e-4);
    }

    #[test]
    fn arc_runs_through_lower_half_plane() {
        // β₋ = 0.5, β₊ = 1.5 is α = 0.8
        let c = contour(0.5, 200);
        assert!(c.theta1 > 0.0 && c.theta1 < std::f64::consts::FRAC_PI_2);
        assert!(c.theta2 > std::f64::consts::FRAC_PI_2 && c.theta2 < std::f64::consts::PI);
        let mid = 0.5 * (c.theta1 + c.theta2);
        assert!(c.ellipse(mid).0.im < 0.0);
    }

    #[test]
    fn coincident_limit() {
        let c = build_contour_for(1e-200, 2f64.sqrt(), 10).unwrap();
        assert!((c.gamma1(c.tau1) - c.ellipse(c.theta1).0).norm() < 1e-12);
    }

    #[test]
    fn rejects_zero_alpha() {
        let g = compute_params(SourceTargetPair::new(1.0, 0.0, 1.0, 2.0), 1.0).unwrap();
        let mut g0 = g;
        g0.alpha = 0.0;
        assert!(build_contour(&g0, 5).is_err());
        assert!(build_contour(&g, 5).is_ok());
    }

    /// Bisection on the implicit ellipse equation along the ray.
    fn solve_intersection(c: &ContourGeometry, which: u8) -> (f64, f64) {
        let point = |tau: f64| if which == 1 { c.gamma1(tau) } else { c.gamma2(tau) };
        let f = |tau: f64| {
            let p = point(tau);
            (p.re / c.a_e).powi(2) + (p.im / c.b_e).powi(2) - 1.0
        };
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let p = point(lo);
        (lo, (-p.im / c.b_e).atan2(p.re / c.a_e))
    }

    #[test]
    fn closed_forms_match_root_finder() {
        for (bm, m) in [(0.7, 5), (0.5, 30), (0.05, 300), (1e-3, 1000), (3.0, 12)] {
            let c = contour(bm, m);
            let (t1, th1) = solve_intersection(&c, 1);
            let (t2, th2) = solve_intersection(&c, 2);
            assert!((t1 - c.tau1).abs() < 1e-9 * c.tau1, "{bm} {m}");
            assert!((th1 - c.theta1).abs() < 1e-9, "{bm} {m}");
            assert!((t2 - c.tau2).abs() < 1e-9 * c.tau2, "{bm} {m}");
            assert!((th2 - c.theta2).abs() < 1e-9, "{bm} {m}");
        }
    }

    #[test]
    fn angles_continuous_in_beta() {
        let mut prev: Option<ContourGeometry> = None;
        for i in 0..4000 {
            let bm = 10f64.powf(-10.0 + 11.5 * i as f64 / 4000.0);
            let c = build_contour_for(bm, (bm * bm + 2.0).sqrt(), 50).unwrap();
            if let Some(p) = prev {
                assert!((c.theta1 - p.theta1).abs() < 0.01, "{bm}");
                assert!((c.theta2 - p.theta2).abs() < 0.01, "{bm}");
            }
            prev = Some(c);
        }
    }

    proptest! {
        #[test]
        fn intersection_residuals(log_bm in -12.0f64..1.5, m in 0usize..4000) {
            let c = contour(10f64.powf(log_bm), m);
            prop_assert!((c.gamma1(c.tau1) - c.ellipse(c.theta1).0).norm() <= 1e-12);
            prop_assert!((c.gamma2(c.tau2) - c.ellipse(c.theta2).0).norm() <= 1e-12);
            prop_assert!(c.tau1 >= 0.0 && c.tau2 >= 0.0);
            prop_assert!(((c.a_e * c.a_e - c.b_e * c.b_e) - 1.0).abs() <= 1e-14);
        }

        #[test]
        fn chebyshev_bound_on_ellipse(m in 0usize..500, t in 0.0f64..std::f64::consts::PI) {
            let c = contour(0.3, m);
            let tm = c.chebyshev_on_ellipse(c.m_geom, t);
            prop_assert!(tm.norm() <= ELLIPSE_GROWTH * (1.0 + 1e-12));
        }
    }
}
