//! Single-mode evaluation of `G_m` and the four direct derivative quantities
//! by quadrature on the deformed contour.
//!
//! Every segment integrand has the form
//!
//! ```text
//! e^{iκs} K(s) (1-z)^c T_m(z) dz/sqrt(1-z²),   s = sqrt(1-αz)
//! ```
//!
//! with `K = 1/s` for `G_m`, `K = iκ/s² - 1/s³` for the first-order pair and
//! `K = -κ²/s³ - 3iκ/s⁴ + 3/s⁵` for the second-order pair (`c` is 0 for the
//! plain and 1 for the combined quantity). All five share the node set and
//! the exponential, measure and Chebyshev values at each node.

use crate::contour::{build_contour, MIN_GEOMETRY_MODE};
use crate::error::Result;
use crate::geometry::GeomParams;
use crate::quadrature::{ellipse_rule, gamma1_rule, gamma2_rule, GgqTable};
use crate::Want;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Decay `e^{-κ√α τ²}` below which the rays are cut short.
const RAY_DECAY_CUTOFF: f64 = 50.0;
/// `e^{-745}` underflows.
const UNDERFLOW_EXPONENT: f64 = 745.0;

/// `G_m` and the direct derivative quantities; entries above the requested
/// order are zero.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DirectQuantities {
    pub g: Complex64,
    /// `∂G/∂a`
    pub da: Complex64,
    /// `∂G/∂a + ∂G/∂b`
    pub dapb: Complex64,
    /// `∂²G/∂a²`
    pub daa: Complex64,
    /// `∂²G/∂a² + ∂²G/∂a∂b`
    pub daapab: Complex64,
}

impl DirectQuantities {
    pub fn as_array(&self) -> [Complex64; 5] {
        [self.g, self.da, self.dapb, self.daa, self.daapab]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Options that change the quadrature, not the result.
#[derive(Clone, Copy, Debug, Default)]
pub struct EvalOptions<'a> {
    pub gamma1_table: Option<&'a GgqTable>,
}

/// Values plus the number of quadrature nodes used.
#[derive(Clone, Debug)]
pub struct ContourEvaluation {
    pub values: Vec<DirectQuantities>,
    pub nodes: usize,
}

pub fn eval_mode(g: &GeomParams, m: usize, want: Want) -> Result<DirectQuantities> {
    Ok(eval_modes_on_contour(g, m, &[m], want, EvalOptions::default())?.values[0])
}

/// Evaluates several modes on the contour built for `m_geom`
/// (modes above `max(m_geom, 5)` lose accuracy and should not be requested).
pub fn eval_modes_on_contour(
    g: &GeomParams,
    m_geom: usize,
    modes: &[usize],
    want: Want,
    opts: EvalOptions<'_>,
) -> Result<ContourEvaluation> {
    let c = build_contour(g, m_geom)?;
    debug_assert!(modes.iter().all(|&m| m <= c.m_geom.max(MIN_GEOMETRY_MODE)));
    let mut acc = vec![[Complex64::new(0.0, 0.0); 5]; modes.len()];
    let mut nodes = 0;
    let kernel = Kernel {
        kappa: g.kappa,
        want,
    };
    let sqrt_alpha = g.alpha.sqrt();
    let ray_end = (RAY_DECAY_CUTOFF / (g.kappa * sqrt_alpha)).sqrt();

    // γ1, entering with a minus sign
    let tau_end = c.tau1.min(ray_end);
    let rule = gamma1_rule(c.beta_minus, tau_end, opts.gamma1_table).rule;
    nodes += rule.len();
    let mut seg = vec![[Complex64::new(0.0, 0.0); 5]; modes.len()];
    for (&tau, &w) in rule.nodes.iter().zip(&rule.weights) {
        let t2 = tau * tau;
        let beta = c.beta_minus;
        let u = Complex64::new(t2, -beta);
        let v = Complex64::new(t2, -2.0 * beta);
        let s = Complex64::new(0.0, sqrt_alpha) * u;
        let one_minus_z = -t2 * v;
        let one_plus_z = Complex64::new(2.0 + t2 * t2, -2.0 * beta * t2);
        let sqrt_v = v.sqrt();
        let sqrt_opz = one_plus_z.sqrt();
        let mu = Complex64::new(0.0, -4.0) * u / (sqrt_v * sqrt_opz) * w;
        let e = (-g.kappa * sqrt_alpha * u).exp();
        // acosh(z) = log1p((z-1) + sqrt(z-1) sqrt(z+1)), sqrt(z-1) = τ sqrt(v)
        let lz = log1p(t2 * v + tau * sqrt_v * sqrt_opz);
        kernel.add(&mut seg, modes, e * mu, s, one_minus_z, |m| {
            (lz * m as f64).cosh()
        });
    }
    for (a, s) in acc.iter_mut().zip(&seg) {
        for q in 0..5 {
            a[q] -= s[q];
        }
    }

    // γ2
    let tau_end = c.tau2.min(ray_end);
    let rule = gamma2_rule(tau_end);
    nodes += rule.len();
    for (&tau, &w) in rule.nodes.iter().zip(&rule.weights) {
        let t2 = tau * tau;
        let beta = c.beta_plus;
        let u = Complex64::new(t2, -beta);
        let v = Complex64::new(t2, -2.0 * beta);
        let s = Complex64::new(0.0, sqrt_alpha) * u;
        let z = Complex64::new(-1.0 + t2 * t2, -2.0 * beta * t2);
        let one_minus_z = Complex64::new(2.0 - t2 * t2, 2.0 * beta * t2);
        let sqrt_v = v.sqrt();
        let mu = Complex64::new(4.0, 0.0) * u / (one_minus_z.sqrt() * sqrt_v) * w;
        let e = (-g.kappa * sqrt_alpha * u).exp();
        // T_m(z) = (-1)^m T_m(-z), with -z near +1
        let lz = log1p(-t2 * v - (z - 1.0).sqrt() * tau * sqrt_v);
        kernel.add(&mut acc, modes, e * mu, s, one_minus_z, |m| {
            let t = (lz * m as f64).cosh();
            if m % 2 == 0 {
                t
            } else {
                -t
            }
        });
    }

    // ellipse arc θ1 → θ2, entering with a minus sign
    let rule = ellipse_rule(c.theta1, c.theta2, c.m_geom);
    nodes += rule.len();
    let growth: Vec<(f64, f64)> = modes
        .iter()
        .map(|&m| {
            let lm = m as f64 * c.rho.ln();
            (lm.cosh(), lm.sinh())
        })
        .collect();
    let mut seg = vec![[Complex64::new(0.0, 0.0); 5]; modes.len()];
    for (&theta, &w) in rule.nodes.iter().zip(&rule.weights) {
        let (sn, cs) = theta.sin_cos();
        let z = Complex64::new(c.a_e * cs, -c.b_e * sn);
        let dz = Complex64::new(-c.a_e * sn, -c.b_e * cs);
        let h = (0.5 * theta).sin();
        let one_minus_z = Complex64::new(2.0 * h * h - c.a_e_minus_one * cs, c.b_e * sn);
        let one_plus_z = Complex64::new(1.0, 0.0) + z;
        let s = csqrt(Complex64::new(g.one_minus_alpha, 0.0) + g.alpha * one_minus_z);
        if g.kappa * s.im > UNDERFLOW_EXPONENT {
            continue;
        }
        let mu = dz / (csqrt(one_minus_z) * csqrt(one_plus_z)) * w;
        let e = (Complex64::new(0.0, g.kappa) * s).exp();
        // e^{-imθ} by stepping between consecutive modes
        let step = Complex64::new(cs, -sn);
        let mut idx = 0;
        let mut prev: Option<(usize, Complex64)> = None;
        kernel.add(&mut seg, modes, e * mu, s, one_minus_z, |m| {
            let (ch, sh) = growth[idx];
            idx += 1;
            let phase = match prev {
                Some((pm, p)) if m == pm + 1 => p * step,
                _ => {
                    let (s, c) = (m as f64 * theta).sin_cos();
                    Complex64::new(c, -s)
                }
            };
            prev = Some((m, phase));
            Complex64::new(ch * phase.re, sh * phase.im)
        });
    }
    for (a, s) in acc.iter_mut().zip(&seg) {
        for q in 0..5 {
            a[q] -= s[q];
        }
    }

    let p0 = 1.0 / (4.0 * PI * PI * g.r0);
    let p1 = p0 / (2.0 * g.a);
    let p2 = p1 / (2.0 * g.a);
    let values = acc
        .iter()
        .map(|a| DirectQuantities {
            g: a[0] * p0,
            da: a[1] * p1,
            dapb: a[2] * p1,
            daa: a[3] * p2,
            daapab: a[4] * p2,
        })
        .collect();
    Ok(ContourEvaluation { values, nodes })
}

/// Principal square root without the polar round trip.
#[inline]
fn csqrt(z: Complex64) -> Complex64 {
    if z.re == 0.0 && z.im == 0.0 {
        return z;
    }
    let t = (0.5 * (z.re.abs() + (z.re * z.re + z.im * z.im).sqrt())).sqrt();
    if z.re >= 0.0 {
        Complex64::new(t, z.im / (2.0 * t))
    } else {
        Complex64::new(z.im.abs() / (2.0 * t), t.copysign(z.im))
    }
}

/// Principal `log(1 + x)` accurate for small `|x|`.
pub fn log1p(x: Complex64) -> Complex64 {
    let re = 0.5 * (x.re * (2.0 + x.re) + x.im * x.im).ln_1p();
    let im = x.im.atan2(1.0 + x.re);
    Complex64::new(re, im)
}

struct Kernel {
    kappa: f64,
    want: Want,
}

impl Kernel {
    /// Adds one node's contribution for every mode; `base` carries weight,
    /// measure and exponential, `tm` yields `T_m` in the order of `modes`.
    #[inline]
    fn add<F: FnMut(usize) -> Complex64>(
        &self,
        acc: &mut [[Complex64; 5]],
        modes: &[usize],
        base: Complex64,
        s: Complex64,
        one_minus_z: Complex64,
        mut tm: F,
    ) {
        let inv_s = s.inv();
        let h0 = base * inv_s;
        let ik = Complex64::new(0.0, self.kappa);
        let (h1, h1c, h2, h2c) = match self.want {
            Want::Values => Default::default(),
            Want::First | Want::Second => {
                let inv_s2 = inv_s * inv_s;
                let h1 = base * inv_s2 * (ik - inv_s);
                let h1c = h1 * one_minus_z;
                if self.want == Want::Second {
                    // -κ²/s³ - 3iκ/s⁴ + 3/s⁵
                    let k2 = inv_s2 * inv_s * (ik * ik - 3.0 * ik * inv_s + 3.0 * inv_s2);
                    let h2 = base * k2;
                    (h1, h1c, h2, h2 * one_minus_z)
                } else {
                    (h1, h1c, Complex64::default(), Complex64::default())
                }
            }
        };
        for (a, &m) in acc.iter_mut().zip(modes) {
            let t = tm(m);
            a[0] += h0 * t;
            if self.want >= Want::First {
                a[1] += h1 * t;
                a[2] += h1c * t;
            }
            if self.want == Want::Second {
                a[3] += h2 * t;
                a[4] += h2c * t;
            }
        }
    }
}
