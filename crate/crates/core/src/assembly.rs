//! End-to-end evaluation: regime dispatch, mode solve, ladders, and the
//! chain rule to cylindrical derivatives.
//!
//! Arrays cover `m = 0..=M`; negative modes follow from `G_{-m} = G_m`.

use crate::error::Result;
use crate::geometry::{classify_regime, compute_params, compute_params_with_offset, GeomParams, Regime, RegimeTag, SourceTargetPair};
use crate::nearaxis::nearaxis_modes;
use crate::modal_eval::EvalOptions;
use crate::recurrence::{all_modes, all_modes_with, derivative_ladders, pointwise_identities, DA_BY_BVP_THRESHOLD};
use crate::Want;
use num_complex::Complex64;

pub use crate::recurrence::DerivBundle;

/// Cylindrical derivatives per mode. `r`, `z` are the target, `rp`, `zp`
/// the source coordinates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CylDerivBundle {
    pub dr: Vec<Complex64>,
    pub drp: Vec<Complex64>,
    pub dz: Vec<Complex64>,
    pub dzp: Vec<Complex64>,
    pub drr: Vec<Complex64>,
    pub drprp: Vec<Complex64>,
    pub drrp: Vec<Complex64>,
    pub drz: Vec<Complex64>,
    pub drpz: Vec<Complex64>,
    pub dzz: Vec<Complex64>,
    pub drzp: Vec<Complex64>,
    pub drpzp: Vec<Complex64>,
    pub dzzp: Vec<Complex64>,
    pub dzpzp: Vec<Complex64>,
}

impl CylDerivBundle {
    /// `(name, array)` pairs in a fixed order: four first-order then ten
    /// second-order entries.
    pub fn columns(&self) -> [(&'static str, &Vec<Complex64>); 14] {
        [
            ("dr", &self.dr),
            ("drp", &self.drp),
            ("dz", &self.dz),
            ("dzp", &self.dzp),
            ("drr", &self.drr),
            ("drprp", &self.drprp),
            ("drrp", &self.drrp),
            ("drz", &self.drz),
            ("drpz", &self.drpz),
            ("dzz", &self.dzz),
            ("drzp", &self.drzp),
            ("drpzp", &self.drpzp),
            ("dzzp", &self.dzzp),
            ("dzpzp", &self.dzpzp),
        ]
    }
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub params: GeomParams,
    pub regime: Regime,
    /// Tail length used in the decay regime.
    pub m_prime: Option<usize>,
    pub bundle: DerivBundle,
    pub cyl: CylDerivBundle,
}

impl Evaluation {
    pub fn values(&self) -> &[Complex64] {
        &self.bundle.g
    }
}

pub fn evaluate_all(pair: SourceTargetPair, k: f64, m_max: usize, want: Want) -> Result<Evaluation> {
    let g = compute_params(pair, k)?;
    evaluate_params(&g, m_max, want)
}

/// As [`evaluate_all`] with accurately known `r - rp`, `z - zp`.
pub fn evaluate_all_with_offset(
    pair: SourceTargetPair,
    dr: f64,
    dz: f64,
    k: f64,
    m_max: usize,
    want: Want,
) -> Result<Evaluation> {
    let g = compute_params_with_offset(pair, dr, dz, k)?;
    evaluate_params(&g, m_max, want)
}

pub fn evaluate_params(g: &GeomParams, m_max: usize, want: Want) -> Result<Evaluation> {
    let regime = classify_regime(g, m_max);
    let (mut bundle, m_prime) = match regime.tag {
        RegimeTag::NearAxis => (nearaxis_modes(g, m_max, want)?, None),
        _ => {
            let sol = all_modes(g, m_max, want)?;
            let da_by_bvp = regime.tag == RegimeTag::NonDecay && m_max > DA_BY_BVP_THRESHOLD;
            let ladders = derivative_ladders(g, &sol, want, da_by_bvp)?;
            let m_prime = sol.m_prime;
            let mut bundle = pointwise_identities(sol.values(), ladders, want);
            if regime.tag == RegimeTag::Decay {
                flush_underflow(&mut bundle, regime.m_star);
            }
            (bundle, m_prime)
        }
    };
    let mut cyl = chain_rule(g, &bundle, want);
    flush_subnormal(&mut bundle, &mut cyl);
    Ok(Evaluation {
        params: *g,
        regime,
        m_prime,
        bundle,
        cyl,
    })
}

/// The decay path with an explicit tail length `m_prime`, whatever the regime.
pub fn evaluate_with_tail(g: &GeomParams, m_max: usize, want: Want, m_prime: usize) -> Result<Evaluation> {
    let sol = all_modes_with(g, m_max, want, Some(m_prime), EvalOptions::default())?;
    let ladders = derivative_ladders(g, &sol, want, false)?;
    let mut bundle = pointwise_identities(sol.values(), ladders, want);
    flush_underflow(&mut bundle, classify_regime(g, m_max).m_star);
    let mut cyl = chain_rule(g, &bundle, want);
    flush_subnormal(&mut bundle, &mut cyl);
    Ok(Evaluation {
        params: *g,
        regime: classify_regime(g, m_max),
        m_prime: sol.m_prime,
        bundle,
        cyl,
    })
}

/// Below this magnitude decayed modes are returned as exact zeros rather
/// than as subnormals with no relative accuracy.
pub const FLUSH_LEVEL: f64 = 1e-280;

/// Zeroes every mode from the first one past `m_star` whose value is below
/// [`FLUSH_LEVEL`].
fn flush_underflow(b: &mut DerivBundle, m_star: f64) {
    let start = (m_star.max(0.0).ceil() as usize).min(b.g.len());
    let Some(cut) = (start..b.g.len()).find(|&m| b.g[m].norm() < FLUSH_LEVEL) else {
        return;
    };
    let zero = Complex64::new(0.0, 0.0);
    for v in [
        &mut b.g, &mut b.da, &mut b.dapb, &mut b.db, &mut b.daa, &mut b.daapab, &mut b.dab, &mut b.dabpbb,
    ] {
        for x in v.iter_mut().skip(cut) {
            *x = zero;
        }
    }
}

/// Sets subnormal real or imaginary parts to zero; they carry no digits.
fn flush_subnormal(b: &mut DerivBundle, c: &mut CylDerivBundle) {
    let bundle = [
        &mut b.g, &mut b.da, &mut b.dapb, &mut b.db, &mut b.daa, &mut b.daapab, &mut b.dab, &mut b.dabpbb,
    ];
    let cyl = [
        &mut c.dr, &mut c.drp, &mut c.dz, &mut c.dzp, &mut c.drr, &mut c.drprp, &mut c.drrp, &mut c.drz,
        &mut c.drpz, &mut c.dzz, &mut c.drzp, &mut c.drpzp, &mut c.dzzp, &mut c.dzpzp,
    ];
    for v in bundle.into_iter().chain(cyl) {
        for z in v.iter_mut() {
            for x in [&mut z.re, &mut z.im] {
                if x.is_subnormal() {
                    *x = 0.0;
                }
            }
        }
    }
}

/// `(a, b)` derivatives to cylindrical ones, written so that `∂G/∂a` and
/// `∂G/∂b` only enter through their sums.
pub fn chain_rule(g: &GeomParams, b: &DerivBundle, want: Want) -> CylDerivBundle {
    let mut c = CylDerivBundle::default();
    if want == Want::Values {
        return c;
    }
    let p = g.pair;
    let (r, rp) = (p.r, p.rp);
    let (dr, dz) = (g.dr, g.dz);
    let n = b.g.len();
    c.dr = (0..n).map(|m| b.da[m] * (2.0 * dr) + b.dapb[m] * (2.0 * rp)).collect();
    c.drp = (0..n).map(|m| -b.da[m] * (2.0 * dr) + b.dapb[m] * (2.0 * r)).collect();
    c.dz = (0..n).map(|m| b.da[m] * (2.0 * dz)).collect();
    c.dzp = c.dz.iter().map(|x| -x).collect();
    if want == Want::First {
        return c;
    }
    let dr2 = dr * dr;
    for m in 0..n {
        let s1 = b.daapab[m];
        let s2 = b.dabpbb[m];
        let (da, db, dab, daa) = (b.da[m], b.db[m], b.dab[m], b.daa[m]);
        c.drr.push(s1 * (4.0 * r * r) + s2 * (4.0 * rp * rp) - dab * (4.0 * dr2) + da * 2.0);
        c.drprp.push(s1 * (4.0 * rp * rp) + s2 * (4.0 * r * r) - dab * (4.0 * dr2) + da * 2.0);
        c.drrp.push((s1 + s2) * (4.0 * r * rp) + dab * (4.0 * dr2) + db * 2.0);
        c.drz.push((s1 * r - dab * dr) * (4.0 * dz));
        c.drpz.push((s1 * rp + dab * dr) * (4.0 * dz));
        c.dzz.push(da * 2.0 + daa * (4.0 * dz * dz));
    }
    c.drzp = c.drz.iter().map(|x| -x).collect();
    c.drpzp = c.drpz.iter().map(|x| -x).collect();
    c.dzzp = c.dzz.iter().map(|x| -x).collect();
    c.dzpzp = c.dzz.clone();
    c
}
