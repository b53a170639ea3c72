//! Near-axis modes from power series in `u = α cosθ`.
//!
//! With `w = a(1 - u)` and `s = √(1 - u)` the three kernels are
//!
//! ```text
//! f  = e^{iκs} / s
//! h1 = e^{iκs} (iκ/s² - 1/s³)
//! h2 = e^{iκs} (-κ²/s³ - 3iκ/s⁴ + 3/s⁵)
//! ```
//!
//! expanded in `u`, then integrated term by term with
//! `∫₀^π cos^J θ cos mθ dθ = π 2^{-J} C(J, (J-m)/2)`. All coefficient arrays
//! carry the factor `(α/2)^J`, so nothing overflows for large `J`.

use crate::error::{Error, Result};
use crate::geometry::{classify_regime, GeomParams, RegimeTag};
use crate::recurrence::DerivBundle;
use crate::Want;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Per-mode term budget.
pub const MAX_TERMS: usize = 120;
/// A mode sum stops once a term is this small against the partial sum.
pub const SERIES_TOLERANCE: f64 = 1e-17;

/// Scaled Taylor coefficients of the three kernels, index `J`.
#[derive(Clone, Debug)]
pub struct SeriesTable {
    pub kappa: f64,
    pub lambda: f64,
    pub f: Vec<Complex64>,
    pub h1: Vec<Complex64>,
    pub h2: Vec<Complex64>,
}

impl SeriesTable {
    /// Coefficients `0..=n` scaled by `λ^J`, `λ = α/2`.
    pub fn new(kappa: f64, alpha: f64, n: usize) -> Self {
        let lambda = 0.5 * alpha;
        let len = n + 1;
        // √(1-u) - 1 = Σ g_i u^i, g_i = (-1)^i C(1/2, i)
        let mut g = vec![0.0; len];
        let mut binom = 1.0;
        let mut lp = 1.0;
        for i in 1..len {
            binom *= (0.5 - (i as f64 - 1.0)) / i as f64;
            lp *= lambda;
            g[i] = if i % 2 == 0 { binom } else { -binom } * lp;
        }
        // E = exp(iκ(√(1-u) - 1)): j E_j = Σ_i i (iκ g_i) E_{j-i}
        let ik = Complex64::new(0.0, kappa);
        let mut e = vec![Complex64::new(0.0, 0.0); len];
        e[0] = Complex64::new(1.0, 0.0);
        for j in 1..len {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 1..=j {
                acc += e[j - i] * (ik * (i as f64 * g[i]));
            }
            e[j] = acc / j as f64;
        }
        let phase = Complex64::new(0.0, kappa).exp();
        // (1-u)^{-p/2} for p = 1..=5
        let power = |p: usize| {
            let half = 0.5 * p as f64;
            let mut d = vec![0.0; len];
            d[0] = 1.0;
            for j in 1..len {
                d[j] = d[j - 1] * (half + j as f64 - 1.0) / j as f64 * lambda;
            }
            d
        };
        let conv = |d: &[f64]| -> Vec<Complex64> {
            (0..len)
                .map(|j| (0..=j).map(|i| e[i] * d[j - i]).sum::<Complex64>() * phase)
                .collect()
        };
        let s1 = conv(&power(1));
        let s2 = conv(&power(2));
        let s3 = conv(&power(3));
        let s4 = conv(&power(4));
        let s5 = conv(&power(5));
        let k2 = kappa * kappa;
        let h1 = (0..len).map(|j| ik * s2[j] - s3[j]).collect();
        let h2 = (0..len)
            .map(|j| -s3[j] * k2 - ik * s4[j] * 3.0 + s5[j] * 3.0)
            .collect();
        Self {
            kappa,
            lambda,
            f: s1,
            h1,
            h2,
        }
    }
}

/// Highest index whose `λ^J` scaling is still a normal number.
fn useful_order(alpha: f64, m_max: usize) -> usize {
    let cap = m_max + 2 * MAX_TERMS + 2;
    if alpha <= 0.0 {
        return 2;
    }
    let per = -(0.5 * alpha).ln();
    let limit = (708.0 / per).ceil() as usize + 2;
    cap.min(limit.max(2))
}

/// `Σ_t C(m+2t, t) term(m+2t)` with the stopping rule of the module.
fn mode_sum<F: Fn(usize) -> Complex64>(m: usize, n: usize, term: F) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut c = 1.0f64;
    for t in 0..MAX_TERMS {
        let j = m + 2 * t;
        if j > n {
            break;
        }
        let x = term(j) * c;
        acc += x;
        if t > 0 && x.norm() <= SERIES_TOLERANCE * acc.norm() {
            break;
        }
        let (jf, tf) = (j as f64, t as f64);
        c *= (jf + 1.0) * (jf + 2.0) / ((tf + 1.0) * (m as f64 + tf + 1.0));
    }
    acc
}

/// All bundle entries for `m = 0..=M` from the series; the caller checks
/// the regime.
pub fn series_modes(g: &GeomParams, m_max: usize, want: Want) -> DerivBundle {
    let n = useful_order(g.alpha, m_max);
    let t = SeriesTable::new(g.kappa, g.alpha, n);
    let at = |v: &[Complex64], j: isize| {
        if j < 0 || j as usize > n {
            Complex64::new(0.0, 0.0)
        } else {
            v[j as usize]
        }
    };
    let r0 = g.r0;
    let p0 = 1.0 / (4.0 * PI * r0);
    let p1 = 1.0 / (8.0 * PI * r0 * r0 * r0);
    let p2 = p1 / (2.0 * r0 * r0);
    let zero = Complex64::new(0.0, 0.0);
    let sum = |m: usize, f: &dyn Fn(isize) -> Complex64| {
        if m > n {
            zero
        } else {
            mode_sum(m, n, |j| f(j as isize))
        }
    };
    let mut b = DerivBundle {
        g: (0..=m_max).map(|m| sum(m, &|j| at(&t.f, j)) * p0).collect(),
        ..Default::default()
    };
    if want >= Want::First {
        let h = &t.h1;
        b.da = (0..=m_max).map(|m| sum(m, &|j| at(h, j)) * p1).collect();
        b.dapb = (0..=m_max)
            .map(|m| sum(m, &|j| at(h, j) - at(h, j - 1) * 0.5) * p1)
            .collect();
        b.db = (0..=m_max)
            .map(|m| sum(m, &|j| -at(h, j - 1) * 0.5) * p1)
            .collect();
    }
    if want == Want::Second {
        let h = &t.h2;
        b.daa = (0..=m_max).map(|m| sum(m, &|j| at(h, j)) * p2).collect();
        b.daapab = (0..=m_max)
            .map(|m| sum(m, &|j| at(h, j) - at(h, j - 1) * 0.5) * p2)
            .collect();
        b.dab = (0..=m_max)
            .map(|m| sum(m, &|j| -at(h, j - 1) * 0.5) * p2)
            .collect();
        b.dabpbb = (0..=m_max)
            .map(|m| sum(m, &|j| at(h, j - 2) * 0.25 - at(h, j - 1) * 0.5) * p2)
            .collect();
    }
    b
}

/// Series evaluation, restricted to the near-axis regime.
pub fn nearaxis_modes(g: &GeomParams, m_max: usize, want: Want) -> Result<DerivBundle> {
    if classify_regime(g, m_max).tag != RegimeTag::NearAxis {
        return Err(Error::Domain(format!(
            "series needs alpha <= 0.05 and kappa*alpha <= 1 (alpha = {:e}, kappa = {:e})",
            g.alpha, g.kappa
        )));
    }
    Ok(series_modes(g, m_max, want))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{compute_params, SourceTargetPair};
    use proptest::prelude::*;

    fn binom(n: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn cos_power_identity() {
        let rule = crate::quadrature::gauss_legendre(200, 0.0, PI);
        for j in 0..=20usize {
            for m in 0..=22usize {
                let q = rule.integrate(|th| th.cos().powi(j as i32) * (m as f64 * th).cos());
                let want = if m <= j && (j - m) % 2 == 0 {
                    PI * 0.5f64.powi(j as i32) * binom(j, (j - m) / 2)
                } else {
                    0.0
                };
                assert!((q - want).abs() < 1e-14, "{j} {m} {q} {want}");
            }
        }
    }

    #[test]
    fn coefficients_match_direct_expansion() {
        // e^{iκ√(1-u)}/√(1-u) at a point, from the truncated series
        let (kappa, alpha) = (3.0, 0.04);
        let t = SeriesTable::new(kappa, alpha, 60);
        let u = 0.03;
        let x = u / t.lambda;
        let series: Complex64 = t.f.iter().enumerate().map(|(j, c)| c * x.powi(j as i32)).sum();
        let s = (1.0f64 - u).sqrt();
        let direct = Complex64::new(0.0, kappa * s).exp() / s;
        assert!((series - direct).norm() < 1e-14);
        let h2: Complex64 = t.h2.iter().enumerate().map(|(j, c)| c * x.powi(j as i32)).sum();
        let ik = Complex64::new(0.0, kappa);
        let d2 = Complex64::new(0.0, kappa * s).exp()
            * (-kappa * kappa / s.powi(3) - ik * 3.0 / s.powi(4) + 3.0 / s.powi(5));
        assert!((h2 - d2).norm() < 1e-13 * d2.norm());
    }

    #[test]
    fn axis_limit() {
        let pair = SourceTargetPair::new(1e-7, 1.0, 1e-7, 0.0);
        let g = compute_params(pair, 1.0).unwrap();
        let b = nearaxis_modes(&g, 4, Want::Values).unwrap();
        let want = Complex64::new(0.0, g.kappa).exp() / (4.0 * PI * g.r0);
        assert!((b.g[0] - want).norm() < 1e-12 * want.norm());
        assert!(b.g[1].norm() <= 1e-13 * want.norm());
    }

    #[test]
    fn rejects_other_regimes() {
        let g = compute_params(SourceTargetPair::new(1.0, 0.3, 1.0, 0.0), 1.0).unwrap();
        assert!(nearaxis_modes(&g, 4, Want::Values).is_err());
    }

    #[test]
    fn sum_consistency() {
        let g = compute_params(SourceTargetPair::new(0.1, 1.0, 0.2, -0.5), 3.0).unwrap();
        let b = nearaxis_modes(&g, 12, Want::Second).unwrap();
        for m in 0..=12 {
            let r = b.dapb[m] - b.da[m] - b.db[m];
            assert!(r.norm() <= 1e-13 * b.da[m].norm().max(b.db[m].norm()), "{m}");
        }
    }

    proptest! {
        #[test]
        fn geometric_mode_decay(r in 0.01f64..0.2, z in -2.0f64..2.0, rp in 0.01f64..0.2, k in 0.0f64..40.0) {
            let g = compute_params(SourceTargetPair::new(r, z, rp, 0.0), k).unwrap();
            prop_assume!(g.alpha <= 0.05 && g.alpha > 1e-6 && g.kappa * g.alpha <= 1.0);
            let b = nearaxis_modes(&g, 10, Want::Values).unwrap();
            // the first ratio grows like κ²/8; the constant 4 holds for κ ≤ 5
            let c = if g.kappa <= 5.0 { 4.0 } else { 0.25 * g.kappa * g.kappa };
            let bound = (0.5 * g.alpha).powi(2) * c;
            for m in 0..=8 {
                if b.g[m].norm() > 1e-280 {
                    prop_assert!(b.g[m + 2].norm() <= bound * b.g[m].norm());
                }
            }
        }
    }
}
