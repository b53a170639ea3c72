//! Slow reference values from adaptive double-word quadrature of the
//! defining θ-integrals.
//!
//! With `w(θ) = (r-r')² + (z-z')² + 4rr' sin²(θ/2)` and
//! `f(w) = e^{ik√w}/√w`, every quantity is a combination of the six basis
//! integrals
//!
//! ```text
//! B[n][j] = 1/(4π²) ∫₀^π f⁽ⁿ⁾(w) (1-cosθ)^j cos(mθ) dθ,   (n, j) ∈ {00, 10, 11, 20, 21, 22}
//! ```
//!
//! where `f⁽ⁿ⁾` is the n-th derivative in `w`. Cylindrical derivatives come
//! from differentiating `w` under the integral sign.

use crate::error::{Error, Result};
use crate::ext::{ExtComplex, ExtReal};
use crate::geometry::SourceTargetPair;
use num_complex::Complex64;
use std::sync::OnceLock;

pub const DEFAULT_TOLERANCE: f64 = 1e-24;
/// Tighter targets are below the double-double resolution; they are clamped
/// here and the result is flagged as not converged.
pub const TOLERANCE_FLOOR: f64 = 1e-30;
const MAX_DEPTH: u32 = 40;
/// Panel differences below this fraction of the panel value are rounding
/// noise of the extended arithmetic, not truncation error.
const ROUNDOFF_FLOOR: f64 = 1e-28;
/// Well separated rings (`α` below this, moderate `κ`) are integrated along
/// a shifted contour, at this fraction of the distance to the singularity.
const SHIFT_ALPHA: f64 = 0.1;
const SHIFT_KAPPA: f64 = 50.0;
const SHIFT_FRACTION: f64 = 0.8;
const LOW_ORDER: usize = 10;
const HIGH_ORDER: usize = 20;

/// Every quantity the oracle can produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quantity {
    G,
    Da,
    Dapb,
    Db,
    Daa,
    Daapab,
    Dab,
    Dabpbb,
    Dr,
    Drp,
    Dz,
    Dzp,
    Drr,
    Drprp,
    Drrp,
    Drz,
    Drpz,
    Dzz,
    Drzp,
    Drpzp,
    Dzzp,
    Dzpzp,
}

impl Quantity {
    pub const AB: [Quantity; 8] = [
        Quantity::G,
        Quantity::Da,
        Quantity::Dapb,
        Quantity::Db,
        Quantity::Daa,
        Quantity::Daapab,
        Quantity::Dab,
        Quantity::Dabpbb,
    ];
    pub const FIRST: [Quantity; 4] = [Quantity::Dr, Quantity::Drp, Quantity::Dz, Quantity::Dzp];
    pub const SECOND: [Quantity; 10] = [
        Quantity::Drr,
        Quantity::Drprp,
        Quantity::Drrp,
        Quantity::Drz,
        Quantity::Drpz,
        Quantity::Dzz,
        Quantity::Drzp,
        Quantity::Drpzp,
        Quantity::Dzzp,
        Quantity::Dzpzp,
    ];

    pub fn order(self) -> u8 {
        use Quantity::*;
        match self {
            G => 0,
            Da | Dapb | Db | Dr | Drp | Dz | Dzp => 1,
            _ => 2,
        }
    }
}

/// Basis integrals for one mode.
#[derive(Clone, Copy, Debug, Default)]
pub struct Basis {
    pub b00: ExtComplex,
    pub b10: ExtComplex,
    pub b11: ExtComplex,
    pub b20: ExtComplex,
    pub b21: ExtComplex,
    pub b22: ExtComplex,
}

#[derive(Clone, Debug)]
pub struct OracleModes {
    pub pair: SourceTargetPair,
    pub k: f64,
    pub modes: Vec<usize>,
    pub basis: Vec<Basis>,
    /// Estimated absolute error per basis integral, shared by all modes.
    pub abs_error: [f64; 6],
    /// `∫|integrand|` per basis integral, an upper bound for every mode.
    pub l1: [f64; 6],
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct OracleValue {
    pub value: ExtComplex,
    pub abs_error: f64,
    pub converged: bool,
}

impl OracleModes {
    pub fn get(&self, idx: usize, q: Quantity) -> ExtComplex {
        let b = &self.basis[idx];
        let p = self.pair;
        let dr = ExtReal::from_sum(p.r, -p.rp);
        let dz = ExtReal::from_sum(p.z, -p.zp);
        let r = ExtReal::from_f64(p.r);
        let rp = ExtReal::from_f64(p.rp);
        let two = ExtReal::from_f64(2.0);
        let four = ExtReal::from_f64(4.0);
        use Quantity::*;
        match q {
            G => b.b00,
            Da => b.b10,
            Dapb => b.b11,
            Db => b.b11 - b.b10,
            Daa => b.b20,
            Daapab => b.b21,
            Dab => b.b21 - b.b20,
            Dabpbb => b.b22 - b.b21,
            Dr => b.b10 * (two * dr) + b.b11 * (two * rp),
            Drp => b.b11 * (two * r) - b.b10 * (two * dr),
            Dz => b.b10 * (two * dz),
            Dzp => -(b.b10 * (two * dz)),
            Drr => {
                b.b20 * (four * dr.sqr()) + b.b21 * (four * two * dr * rp)
                    + b.b22 * (four * rp.sqr())
                    + b.b10 * two
            }
            Drprp => {
                b.b20 * (four * dr.sqr()) - b.b21 * (four * two * dr * r)
                    + b.b22 * (four * r.sqr())
                    + b.b10 * two
            }
            Drrp => {
                (b.b21 - b.b20) * (four * dr.sqr()) + b.b22 * (four * r * rp)
                    + (b.b11 - b.b10) * two
            }
            Drz => (b.b20 * dr + b.b21 * rp) * (four * dz),
            Drpz => (b.b21 * r - b.b20 * dr) * (four * dz),
            Dzz => b.b20 * (four * dz.sqr()) + b.b10 * two,
            Drzp => -((b.b20 * dr + b.b21 * rp) * (four * dz)),
            Drpzp => -((b.b21 * r - b.b20 * dr) * (four * dz)),
            Dzzp => -(b.b20 * (four * dz.sqr()) + b.b10 * two),
            Dzpzp => b.b20 * (four * dz.sqr()) + b.b10 * two,
        }
    }

    pub fn get_c64(&self, idx: usize, q: Quantity) -> Complex64 {
        self.get(idx, q).to_c64()
    }

    /// Loose absolute error bound for quantity `q`, from the basis errors.
    pub fn error_bound(&self, q: Quantity) -> f64 {
        let p = self.pair;
        let scale = 4.0 * (p.r.max(p.rp).max((p.z - p.zp).abs()) + 1.0).powi(2);
        let e = &self.abs_error;
        match q.order() {
            0 => e[0],
            1 => scale * (e[1] + e[2]),
            _ => scale * scale * (e[1] + e[2] + e[3] + e[4] + e[5]),
        }
    }
}

/// Reference GL rule on [-1, 1] in double-word precision.
fn ext_rule(n: usize) -> &'static (Vec<ExtReal>, Vec<ExtReal>) {
    static RULES: [OnceLock<(Vec<ExtReal>, Vec<ExtReal>)>; 64] =
        [const { OnceLock::new() }; 64];
    RULES[n].get_or_init(|| {
        let base = crate::quadrature::reference_rule(n);
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for &x0 in &base.0 {
            let mut x = ExtReal::from_f64(x0);
            let mut dp = ExtReal::ONE;
            for _ in 0..3 {
                let (p, d) = ext_legendre(n, x);
                dp = d;
                if p.hi != 0.0 {
                    x = x - p / d;
                }
            }
            let (_, d) = ext_legendre(n, x);
            if d.hi.is_finite() && d.hi != 0.0 {
                dp = d;
            }
            let w = ExtReal::from_f64(2.0) / ((ExtReal::ONE - x.sqr()) * dp.sqr());
            nodes.push(x);
            weights.push(w);
        }
        (nodes, weights)
    })
}

fn ext_legendre(n: usize, x: ExtReal) -> (ExtReal, ExtReal) {
    let mut p0 = ExtReal::ONE;
    let mut p1 = x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = (x * p1 * (2.0 * kf + 1.0) - p0 * kf) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = (x * p1 - p0) * (n as f64) / (x.sqr() - ExtReal::ONE);
    (p1, dp)
}

/// Sum of `n`-node GL on `[lo, hi]` applied to a vector-valued integrand.
fn panel_sum<F: FnMut(ExtReal, &mut [ExtComplex], ExtReal)>(
    f: &mut F,
    lo: ExtReal,
    hi: ExtReal,
    n: usize,
    out: &mut [ExtComplex],
) {
    let (x, w) = ext_rule(n);
    let half = (hi - lo).mul_f64(0.5);
    let mid = (hi + lo).mul_f64(0.5);
    out.iter_mut().for_each(|o| *o = ExtComplex::ZERO);
    for (xi, wi) in x.iter().zip(w) {
        f(mid + half * *xi, out, half * *wi);
    }
}

/// Adaptive vector quadrature. `f(x, acc, weight)` adds `weight · F(x)` into
/// `acc`; `scale[i]` sets the absolute target `tol · scale[i] · len/total`.
/// Returns (integrals, per-component absolute error estimate, converged).
pub fn adaptive_vector<F: FnMut(ExtReal, &mut [ExtComplex], ExtReal)>(
    mut f: F,
    breakpoints: &[ExtReal],
    dim: usize,
    scale: &[f64],
    tol: f64,
) -> (Vec<ExtComplex>, Vec<f64>, bool) {
    let total = (breakpoints[breakpoints.len() - 1] - breakpoints[0]).to_f64();
    let mut sum = vec![ExtComplex::ZERO; dim];
    let mut err = vec![0.0; dim];
    let mut converged = true;
    let mut lo_buf = vec![ExtComplex::ZERO; dim];
    let mut hi_buf = vec![ExtComplex::ZERO; dim];
    let mut stack: Vec<(ExtReal, ExtReal, u32)> = breakpoints
        .windows(2)
        .rev()
        .map(|w| (w[0], w[1], 0))
        .collect();
    while let Some((lo, hi, depth)) = stack.pop() {
        panel_sum(&mut f, lo, hi, LOW_ORDER, &mut lo_buf);
        panel_sum(&mut f, lo, hi, HIGH_ORDER, &mut hi_buf);
        let frac = (hi - lo).to_f64() / total;
        let mut ok = true;
        for i in 0..dim {
            let d = (hi_buf[i] - lo_buf[i]).norm().to_f64();
            let noise = ROUNDOFF_FLOOR * hi_buf[i].norm().to_f64();
            if d > (tol * scale[i] * frac).max(noise) {
                ok = false;
                break;
            }
        }
        if ok || depth >= MAX_DEPTH {
            if !ok {
                converged = false;
            }
            for i in 0..dim {
                err[i] += (hi_buf[i] - lo_buf[i]).norm().to_f64();
                sum[i] += hi_buf[i];
            }
        } else {
            let mid = (lo + hi).mul_f64(0.5);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    (sum, err, converged)
}

/// Scalar convenience wrapper over [`adaptive_vector`] with a relative target.
pub fn adaptive_scalar<F: FnMut(ExtReal) -> ExtComplex>(
    mut f: F,
    lo: ExtReal,
    hi: ExtReal,
    tol: f64,
) -> (ExtComplex, f64, bool) {
    // rough magnitude from a coarse pass sets the absolute target
    let mut coarse = [ExtComplex::ZERO];
    let mut g = |x: ExtReal, acc: &mut [ExtComplex], w: ExtReal| {
        let v = f(x);
        acc[0] += ExtComplex::new(v.re.abs(), v.im.abs()).scale(w);
    };
    let mut pts = vec![lo];
    for i in 1..=64 {
        pts.push(lo + (hi - lo).mul_f64(i as f64 / 64.0));
    }
    let mut l1 = 0.0;
    for w in pts.windows(2) {
        panel_sum(&mut g, w[0], w[1], HIGH_ORDER, &mut coarse);
        l1 += coarse[0].re.to_f64() + coarse[0].im.to_f64();
    }
    let (s, e, c) = adaptive_vector(
        |x, acc, w| {
            let v = f(x);
            acc[0] += v.scale(w);
        },
        &pts,
        1,
        &[l1.max(1e-300)],
        tol,
    );
    (s[0], e[0], c)
}

/// Reference values for several modes of one pair at once.
pub fn oracle_modes(
    pair: SourceTargetPair,
    k: f64,
    modes: &[usize],
    tol: f64,
) -> Result<OracleModes> {
    let p = crate::geometry::compute_params(pair, k)?;
    if modes.iter().any(|&m| m > 20_000) {
        return Err(Error::Domain("oracle supports m <= 20000".into()));
    }
    let mut order: Vec<usize> = (0..modes.len()).collect();
    order.sort_by_key(|&i| modes[i]);
    let sorted: Vec<usize> = order.iter().map(|&i| modes[i]).collect();

    let dr = ExtReal::from_sum(pair.r, -pair.rp);
    let dz = ExtReal::from_sum(pair.z, -pair.zp);
    let sep2 = dr.sqr() + dz.sqr();
    let b = ExtReal::from_prod(pair.r, pair.rp).mul_f64(2.0);
    let kk = ExtReal::from_f64(k);

    // panels: ≥ 10 per period of the fastest oscillation, graded toward θ = 0
    let m_max = sorted.last().copied().unwrap_or(0) as f64;
    let omega = m_max + k * (pair.r * pair.rp).sqrt() + 1.0;
    let n_uniform = (5.0 * omega).ceil().max(8.0) as usize;
    let h = std::f64::consts::PI / n_uniform as f64;
    let sigma = p.r0 * p.one_minus_alpha.sqrt() / (pair.r * pair.rp).sqrt();
    let mut pts = vec![ExtReal::ZERO];
    if sigma < h {
        let mut x = 0.25 * sigma;
        while x < h {
            pts.push(ExtReal::from_f64(x));
            x *= 2.0;
        }
    }
    let start = pts.len();
    for i in 1..=n_uniform {
        let x = ExtReal::PI.mul_f64(i as f64 / n_uniform as f64);
        if start > 1 && x.to_f64() <= pts[start - 1].to_f64() {
            continue;
        }
        pts.push(x);
    }

    // differences of powers of e^{iθ}, reused at every node
    let steps: Vec<usize> = sorted
        .iter()
        .scan(0usize, |prev, &m| {
            let d = m - *prev;
            *prev = m;
            Some(d)
        })
        .collect();

    let nm = sorted.len();
    let integrand = |theta: ExtReal, acc: &mut [ExtComplex], wt: ExtReal| {
        let (sh, ch) = theta.mul_f64(0.5).sin_cos();
        let one_minus_c = sh.sqr().mul_f64(2.0);
        let w = sep2 + b * one_minus_c;
        let sqrt_w = w.sqrt();
        let inv_sqrt_w = sqrt_w.recip();
        let inv_w = inv_sqrt_w.sqr();
        let e = ExtComplex::cis(kk * sqrt_w);
        let f0 = e.scale(inv_sqrt_w);
        // f' = e/(2w) (ik - 1/√w)
        let f1 = (e * ExtComplex::new(-inv_sqrt_w, kk)).scale(inv_w.mul_f64(0.5));
        // f'' = e/(4w) (-k²/√w - 3ik/w + 3/w^{3/2})
        let f2 = (e * ExtComplex::new(
            (inv_w.mul_f64(3.0) - kk.sqr()) * inv_sqrt_w,
            -(kk * inv_w).mul_f64(3.0),
        ))
        .scale(inv_w.mul_f64(0.25));
        let p1 = one_minus_c;
        let p2 = one_minus_c.sqr();
        let vals = [
            f0.scale(wt),
            f1.scale(wt),
            f1.scale(wt * p1),
            f2.scale(wt),
            f2.scale(wt * p1),
            f2.scale(wt * p2),
        ];
        // cos(mθ) by stepping e^{imθ}
        let step1 = ExtComplex::new(
            ExtReal::ONE - one_minus_c,
            (sh * ch).mul_f64(2.0),
        );
        let mut cur = ExtComplex::ONE;
        for (j, &d) in steps.iter().enumerate() {
            if d > 0 {
                cur = cur * cpow(step1, d);
            }
            let c = cur.re;
            for (q, v) in vals.iter().enumerate() {
                acc[6 * j + q] += v.scale(c);
            }
        }
    };

    // L1 norms of |f⁽ⁿ⁾ (1-c)^j| in ordinary precision on the same panels
    let mut l1 = [0.0f64; 6];
    {
        let rule = crate::quadrature::reference_rule(HIGH_ORDER);
        let (sep2f, bf) = (sep2.to_f64(), b.to_f64());
        for wdw in pts.windows(2) {
            let (lo, hi) = (wdw[0].to_f64(), wdw[1].to_f64());
            let half = 0.5 * (hi - lo);
            for (x, wq) in rule.0.iter().zip(&rule.1) {
                let th = 0.5 * (hi + lo) + half * x;
                let s = (0.5 * th).sin();
                let omc = 2.0 * s * s;
                let w = sep2f + bf * omc;
                let rw = w.sqrt();
                let a0 = 1.0 / rw;
                let a1 = (k * k + 1.0 / w).sqrt() / (2.0 * w);
                let a2 = (k * k / rw + 3.0 * k / w + 3.0 / (w * rw)) / (4.0 * w);
                let ww = half * wq;
                l1[0] += ww * a0;
                l1[1] += ww * a1;
                l1[2] += ww * a1 * omc;
                l1[3] += ww * a2;
                l1[4] += ww * a2 * omc;
                l1[5] += ww * a2 * omc * omc;
            }
        }
    }
    let shifted = p.alpha < SHIFT_ALPHA && p.kappa < SHIFT_KAPPA && m_max > 0.0;
    let (sum, err, converged) = if shifted {
        shifted_integrals(sep2, b, k, p.alpha, &steps, 2 * n_uniform, tol.max(TOLERANCE_FLOOR))
    } else {
        let scale: Vec<f64> = (0..6 * nm).map(|i| l1[i % 6]).collect();
        adaptive_vector(integrand, &pts, 6 * nm, &scale, tol.max(TOLERANCE_FLOOR))
    };
    let converged = converged && tol >= TOLERANCE_FLOOR;

    let mut norm = ExtReal::ONE / (ExtReal::PI.sqr().mul_f64(4.0));
    if shifted {
        norm = norm.mul_f64(0.5);
    }
    let inv_norm = 1.0 / (4.0 * std::f64::consts::PI * std::f64::consts::PI);
    let mut abs_error = [0.0f64; 6];
    for (i, e) in err.iter().enumerate() {
        abs_error[i % 6] = abs_error[i % 6].max(e * inv_norm);
    }
    let mut basis = vec![Basis::default(); nm];
    for (j, &orig) in order.iter().enumerate() {
        let s = &sum[6 * j..6 * j + 6];
        basis[orig] = Basis {
            b00: s[0].scale(norm),
            b10: s[1].scale(norm),
            b11: s[2].scale(norm),
            b20: s[3].scale(norm),
            b21: s[4].scale(norm),
            b22: s[5].scale(norm),
        };
    }
    Ok(OracleModes {
        pair,
        k,
        modes: modes.to_vec(),
        basis,
        abs_error,
        l1: l1.map(|x| x * inv_norm),
        converged,
    })
}

/// The six basis integrals over the full period along `θ - iτ`, where
/// `e^{-imθ}` carries the factor `e^{-mτ}` and high modes of well separated
/// rings no longer cancel against the zeroth. `w` keeps a positive real part
/// since `α cosh τ < 1`. Returns twice the half-period integrals.
fn shifted_integrals(
    sep2: ExtReal,
    b: ExtReal,
    k: f64,
    alpha: f64,
    steps: &[usize],
    n_panels: usize,
    tol: f64,
) -> (Vec<ExtComplex>, Vec<f64>, bool) {
    let tau = SHIFT_FRACTION * (1.0 / alpha).acosh();
    let t = ExtReal::from_f64(tau);
    let (ch_t, sh_t, decay) = (t.cosh(), t.sinh(), (-t).exp());
    let kk = ExtReal::from_f64(k);
    let ik = ExtComplex::new(ExtReal::ZERO, kk);
    let pts: Vec<ExtReal> = (0..=n_panels)
        .map(|i| ExtReal::PI.mul_f64(2.0 * i as f64 / n_panels as f64 - 1.0))
        .collect();
    let integrand = |theta: ExtReal, acc: &mut [ExtComplex], wt: ExtReal| {
        let (sn, cs) = theta.sin_cos();
        let omc = ExtComplex::new(ExtReal::ONE - cs * ch_t, -(sn * sh_t));
        let w = ExtComplex::from_real(sep2) + omc * b;
        let sqrt_w = w.sqrt();
        let inv_sqrt_w = sqrt_w.recip();
        let inv_w = inv_sqrt_w * inv_sqrt_w;
        let e = ExtComplex::cis(kk * sqrt_w.re).scale((-(kk * sqrt_w.im)).exp());
        let f0 = e * inv_sqrt_w;
        let f1 = e * inv_w * (ik - inv_sqrt_w) * ExtReal::from_f64(0.5);
        let three = ExtReal::from_f64(3.0);
        let f2 = e
            * inv_w
            * (inv_sqrt_w * (inv_w * three - ExtComplex::from_real(kk.sqr())) - ik * inv_w * three)
            * ExtReal::from_f64(0.25);
        let p2 = omc * omc;
        let vals = [f0, f1, f1 * omc, f2, f2 * omc, f2 * p2].map(|v| v.scale(wt));
        let step1 = ExtComplex::new(cs * decay, -(sn * decay));
        let mut cur = ExtComplex::ONE;
        for (j, &d) in steps.iter().enumerate() {
            if d > 0 {
                cur = cur * cpow(step1, d);
            }
            for (q, v) in vals.iter().enumerate() {
                acc[6 * j + q] += *v * cur;
            }
        }
    };

    // absolute targets from the L1 norms along the shifted line
    let mut l1 = [0.0f64; 6];
    let rule = crate::quadrature::reference_rule(HIGH_ORDER);
    let (sep2f, bf) = (sep2.to_f64(), b.to_f64());
    for wdw in pts.windows(2) {
        let (lo, hi) = (wdw[0].to_f64(), wdw[1].to_f64());
        let half = 0.5 * (hi - lo);
        for (x, wq) in rule.0.iter().zip(&rule.1) {
            let th = 0.5 * (hi + lo) + half * x;
            let omc = Complex64::new(1.0 - th.cos() * tau.cosh(), -th.sin() * tau.sinh());
            let w = sep2f + bf * omc;
            let rw = w.sqrt();
            let grow = (-k * rw.im).exp();
            let (wn, rn) = (w.norm(), rw.norm());
            let a0 = grow / rn;
            let a1 = grow * (k * k + 1.0 / wn).sqrt() / (2.0 * wn);
            let a2 = grow * (k * k / rn + 3.0 * k / wn + 3.0 / (wn * rn)) / (4.0 * wn);
            let (o1, ww) = (omc.norm(), half * wq);
            l1[0] += ww * a0;
            l1[1] += ww * a1;
            l1[2] += ww * a1 * o1;
            l1[3] += ww * a2;
            l1[4] += ww * a2 * o1;
            l1[5] += ww * a2 * o1 * o1;
        }
    }
    let mut scale = Vec::with_capacity(6 * steps.len());
    let mut m = 0usize;
    for &d in steps {
        m += d;
        let f = (-(m as f64) * tau).exp();
        scale.extend(l1.iter().map(|x| (x * f).max(f64::MIN_POSITIVE)));
    }
    adaptive_vector(integrand, &pts, 6 * steps.len(), &scale, tol)
}

fn cpow(z: ExtComplex, mut n: usize) -> ExtComplex {
    let mut base = z;
    let mut acc = ExtComplex::ONE;
    while n > 0 {
        if n & 1 == 1 {
            acc = acc * base;
        }
        base = base * base;
        n >>= 1;
    }
    acc
}

/// One quantity for one mode.
pub fn oracle_mode(
    pair: SourceTargetPair,
    k: f64,
    m: usize,
    q: Quantity,
    tol: f64,
) -> Result<OracleValue> {
    let o = oracle_modes(pair, k, &[m], tol)?;
    Ok(OracleValue {
        value: o.get(0, q),
        abs_error: o.error_bound(q),
        converged: o.converged,
    })
}

/// `Q_{m-1/2}(x)` for `x = cosh η > 1`, given `x - 1` separately for accuracy,
/// from `∫_η^∞ e^{-mt} / sqrt(2cosh t - 2cosh η) dt` with `t = η + u²`.
pub fn oracle_legendre_q_half(m: usize, x: ExtReal, x_minus_one: ExtReal) -> ExtReal {
    // η = ln(x + sqrt(x² - 1)), with x² - 1 = (x - 1)(x + 1)
    let root = (x_minus_one * (x + ExtReal::ONE)).sqrt();
    let eta = (x + root).ln();
    let nu = m as f64 + 0.5;
    let upper = (80.0 / nu).sqrt();
    let mf = ExtReal::from_f64(m as f64);
    let (val, _, _) = adaptive_scalar(
        |u| {
            if u.hi == 0.0 {
                // limit u → 0: sqrt(2 / sinh η)
                let v = (ExtReal::from_f64(2.0) / eta.sinh()).sqrt() * (-(mf * eta)).exp();
                return ExtComplex::from_real(v);
            }
            let u2 = u.sqr();
            let half = u2.mul_f64(0.5);
            // 2cosh t - 2cosh η = 4 sinh(η + u²/2) sinh(u²/2)
            let den = ((eta + half).sinh() * half.sinh()).sqrt();
            let num = u * (-(mf * (eta + u2))).exp();
            ExtComplex::from_real(num / den)
        },
        ExtReal::ZERO,
        ExtReal::from_f64(upper),
        1e-28,
    );
    val.re
}

/// Laplace (`k = 0`) modes from the Legendre function:
/// `G_m = (1/(4π²)) sqrt(2/b) Q_{m-1/2}(a/b)`.
pub fn laplace_mode(pair: SourceTargetPair, m: usize) -> ExtReal {
    let dr = ExtReal::from_sum(pair.r, -pair.rp);
    let dz = ExtReal::from_sum(pair.z, -pair.zp);
    let sep2 = dr.sqr() + dz.sqr();
    let b = ExtReal::from_prod(pair.r, pair.rp).mul_f64(2.0);
    let x = (sep2 + b) / b;
    let xm1 = sep2 / b;
    let q = oracle_legendre_q_half(m, x, xm1);
    (ExtReal::from_f64(2.0) / b).sqrt() * q / ExtReal::PI.sqr().mul_f64(4.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: ExtComplex, b: ExtComplex) -> f64 {
        (a - b).norm().to_f64() / b.norm().to_f64()
    }

    #[test]
    fn ext_rules_are_exact() {
        let (x, w) = ext_rule(20);
        // ∫_{-1}^{1} x^38 = 2/39
        let mut s = ExtReal::ZERO;
        for (xi, wi) in x.iter().zip(w) {
            let mut p = ExtReal::ONE;
            for _ in 0..38 {
                p = p * *xi;
            }
            s += p * *wi;
        }
        let want = ExtReal::from_f64(2.0) / ExtReal::from_f64(39.0);
        assert!((s - want).abs().to_f64() < 1e-30);
    }

    #[test]
    fn tiny_alpha_constant_integrand() {
        let pair = SourceTargetPair::from_alpha(1e-14, 1.0);
        let o = oracle_modes(pair, 1.0, &[0], DEFAULT_TOLERANCE).unwrap();
        let r0 = ExtReal::from_f64(pair.r).sqr().mul_f64(2.0) + ExtReal::from_f64(pair.z).sqr();
        let r0 = r0.sqrt();
        let want = ExtComplex::cis(r0).scale((ExtReal::PI.mul_f64(4.0) * r0).recip());
        // α = 1e-14 shifts the value by about α/2
        assert!(rel(o.get(0, Quantity::G), want) < 1e-13);
        assert!(o.converged);
    }

    #[test]
    fn legendre_asymptote() {
        let x = ExtReal::from_f64(1e4);
        let q = oracle_legendre_q_half(0, x, x - ExtReal::ONE).to_f64();
        let asym = std::f64::consts::PI / (2.0 * 1e4f64).sqrt();
        assert!((q / asym - 1.0).abs() < 0.01);
    }

    #[test]
    fn legendre_known_values() {
        // Q_{-1/2}(x) = sqrt(2/(x+1)) K(sqrt(2/(x+1))); at x = 3: sqrt(1/2) K(k²=1/2)
        let x = ExtReal::from_f64(3.0);
        let q = oracle_legendre_q_half(0, x, ExtReal::from_f64(2.0)).to_f64();
        // K(m = 1/2) = 1.8540746773013719
        assert!((q - 0.5f64.sqrt() * 1.854_074_677_301_371_9).abs() < 1e-15);
    }

    #[test]
    fn shifted_contour_resolves_tiny_modes() {
        let pair = SourceTargetPair::from_alpha(0.01, 1.0);
        let o = oracle_modes(pair, 0.0, &[0, 4, 12], DEFAULT_TOLERANCE).unwrap();
        for (i, m) in [0, 4, 12].into_iter().enumerate() {
            let l = laplace_mode(pair, m);
            let d = (o.get(i, Quantity::G).re - l).abs().to_f64() / l.abs().to_f64();
            assert!(d < 1e-18, "m={m} {d:e}");
        }
    }

    #[test]
    fn laplace_cross_check() {
        let pair = SourceTargetPair::from_alpha(0.5, 1.0);
        for m in [0, 3] {
            let o = oracle_modes(pair, 0.0, &[m], DEFAULT_TOLERANCE).unwrap();
            let l = laplace_mode(pair, m);
            let d = (o.get(0, Quantity::G).re - l).abs().to_f64() / l.abs().to_f64();
            assert!(d < 1e-18, "m={m} {d:e}");
        }
    }

    #[test]
    fn legendre_self_convergence() {
        let x = ExtReal::from_f64(2.0);
        let a = oracle_legendre_q_half(1, x, ExtReal::ONE);
        // independent check: three-term recurrence from Q_{-1/2}, Q_{1/2}
        // and direct value at m = 2
        let q0 = oracle_legendre_q_half(0, x, ExtReal::ONE);
        let q2 = oracle_legendre_q_half(2, x, ExtReal::ONE);
        // (m + 1/2) Q_{m+1/2} = 2m x Q_{m-1/2} - (m - 1/2) Q_{m-3/2}, m = 1
        let lhs = q2.mul_f64(1.5);
        let rhs = (x * a).mul_f64(2.0) - q0.mul_f64(0.5);
        assert!((lhs - rhs).abs().to_f64() < 1e-20 * lhs.abs().to_f64().max(1e-10));
    }

    #[test]
    fn batch_matches_single() {
        let pair = SourceTargetPair::new(1.2, 0.3, 0.9, -0.4);
        let o = oracle_modes(pair, 7.0, &[9, 0, 4], DEFAULT_TOLERANCE).unwrap();
        let s = oracle_modes(pair, 7.0, &[4], DEFAULT_TOLERANCE).unwrap();
        assert!(rel(o.get(2, Quantity::Daapab), s.get(0, Quantity::Daapab)) < 1e-22);
        assert_eq!(o.modes, vec![9, 0, 4]);
    }
}
