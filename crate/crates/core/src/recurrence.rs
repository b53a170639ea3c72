//! Mode recurrences: the five-term relation solved as a banded boundary-value
//! problem (directly, or with a zero tail in the decay regime), the two-term
//! ladders for the derivative quantities, and the pointwise identities.

use crate::error::{Error, Result};
use crate::geometry::{classify_regime, GeomParams, RegimeTag};
use crate::modal_eval::{eval_modes_on_contour, DirectQuantities, EvalOptions};
use crate::Want;
use num_complex::Complex64;

/// Largest `M` for which every mode is taken straight from the contour.
pub const DIRECT_MAX_MODE: usize = 5;
/// Above this `M` the `∂G/∂a` values come from the banded solve.
pub const DA_BY_BVP_THRESHOLD: usize = 300;
/// Tail values at `M' - 2` must fall below this fraction of the peak.
pub const TAIL_TOLERANCE: f64 = 1e-32;
const TAIL_DIGITS: f64 = 36.0;
const UNDERFLOW_DIGITS: f64 = 310.0;
const TAIL_RETRIES: usize = 3;

/// `[c₋₂, c₋₁, c₀, c₁, c₂]` of the five-term relation at mode `m ≥ 2`.
pub fn five_term_coefficients(g: &GeomParams, m: usize) -> [f64; 5] {
    let mf = m as f64;
    let ak2 = g.alpha * g.alpha * g.kappa * g.kappa;
    [
        ak2 / (16.0 * mf * (mf - 1.0)),
        -g.alpha * (2.0 * mf - 1.0) / (4.0 * mf),
        1.0 - ak2 / (8.0 * (mf * mf - 1.0)),
        -g.alpha * (2.0 * mf + 1.0) / (4.0 * mf),
        ak2 / (16.0 * mf * (mf + 1.0)),
    ]
}

/// Rows `m = 2..=top-2` of the five-term relation with unknowns
/// `G_2..=G_{top-2}`; row `i` is mode `i + 2`.
#[derive(Clone, Debug)]
pub struct PentaSystem {
    pub top: usize,
    /// `bands[i] = [c₋₂, c₋₁, c₀, c₁, c₂]` of row `i`.
    pub bands: Vec<[f64; 5]>,
}

impl PentaSystem {
    pub fn new(g: &GeomParams, top: usize) -> Result<Self> {
        if top < 4 {
            return Err(Error::Internal(format!("banded system needs top >= 4, got {top}")));
        }
        let bands = (2..=top - 2).map(|m| five_term_coefficients(g, m)).collect();
        Ok(Self { top, bands })
    }

    pub fn size(&self) -> usize {
        self.bands.len()
    }

    /// Right-hand side carrying the four boundary values
    /// `(lo0, lo1) = (X_0, X_1)` and `(hi0, hi1) = (X_{top-1}, X_top)`.
    pub fn boundary_rhs(&self, lo: [Complex64; 2], hi: [Complex64; 2]) -> Vec<Complex64> {
        let n = self.size();
        let top = self.top;
        let mut rhs = vec![Complex64::new(0.0, 0.0); n];
        for (i, row) in self.bands.iter().enumerate() {
            let m = i + 2;
            for (t, &c) in row.iter().enumerate() {
                let col = m + t - 2;
                let known = match col {
                    0 => Some(lo[0]),
                    1 => Some(lo[1]),
                    _ if col == top - 1 => Some(hi[0]),
                    _ if col == top => Some(hi[1]),
                    _ => None,
                };
                if let Some(x) = known {
                    rhs[i] -= x * c;
                }
            }
        }
        rhs
    }

    /// Banded QR by Givens rotations.
    pub fn factor(&self) -> Result<PentaFactor> {
        let n = self.size();
        // row i keeps columns i-2..=i+4 at offsets 0..7
        let mut r = vec![[0.0f64; 7]; n];
        for (i, row) in self.bands.iter().enumerate() {
            for t in 0..5 {
                let col = i as isize + t as isize - 2;
                if col >= 0 && (col as usize) < n {
                    r[i][t] = row[t];
                }
            }
        }
        let at = |i: usize, col: usize| col + 2 - i;
        let mut rotations = Vec::with_capacity(2 * n);
        for j in 0..n {
            for rr in [j + 2, j + 1] {
                if rr >= n {
                    continue;
                }
                let a = r[j][at(j, j)];
                let b = r[rr][at(rr, j)];
                if b == 0.0 {
                    rotations.push((j, rr, 1.0, 0.0));
                    continue;
                }
                let h = a.hypot(b);
                let (c, s) = (a / h, b / h);
                for col in j..(j + 5).min(n) {
                    let x = r[j][at(j, col)];
                    let y = if col + 2 >= rr && col <= rr + 4 {
                        r[rr][at(rr, col)]
                    } else {
                        0.0
                    };
                    r[j][at(j, col)] = c * x + s * y;
                    if col + 2 >= rr && col <= rr + 4 {
                        r[rr][at(rr, col)] = -s * x + c * y;
                    }
                }
                rotations.push((j, rr, c, s));
            }
            if r[j][at(j, j)] == 0.0 {
                return Err(Error::Internal(format!("singular banded system at row {j}")));
            }
        }
        Ok(PentaFactor { r, rotations })
    }
}

/// Retained factorization, reusable for several right-hand sides.
#[derive(Clone, Debug)]
pub struct PentaFactor {
    r: Vec<[f64; 7]>,
    rotations: Vec<(usize, usize, f64, f64)>,
}

impl PentaFactor {
    pub fn size(&self) -> usize {
        self.r.len()
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = self.size();
        let mut y = rhs.to_vec();
        for &(j, rr, c, s) in &self.rotations {
            let (x, z) = (y[j], y[rr]);
            y[j] = x * c + z * s;
            y[rr] = z * c - x * s;
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for col in i + 1..(i + 5).min(n) {
                acc -= y[col] * self.r[i][col + 2 - i];
            }
            y[i] = acc / self.r[i][2];
        }
        y
    }

    /// `‖A⁻¹‖₁` by solving for every unit vector, `O(n²)`.
    pub fn inverse_norm1(&self) -> f64 {
        let n = self.size();
        let mut best = 0.0f64;
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            e[j] = Complex64::new(1.0, 0.0);
            let col = self.solve(&e);
            best = best.max(col.iter().map(|z| z.re.abs()).sum());
            e[j] = Complex64::new(0.0, 0.0);
        }
        best
    }
}

impl PentaSystem {
    pub fn norm1(&self) -> f64 {
        let n = self.size();
        let mut cols = vec![0.0f64; n];
        for (i, row) in self.bands.iter().enumerate() {
            for (t, &c) in row.iter().enumerate() {
                let col = i as isize + t as isize - 2;
                if col >= 0 && (col as usize) < n {
                    cols[col as usize] += c.abs();
                }
            }
        }
        cols.into_iter().fold(0.0, f64::max)
    }

    /// 1-norm condition number.
    pub fn condition_number(&self, f: &PentaFactor) -> f64 {
        self.norm1() * f.inverse_norm1()
    }

    /// Largest row residual relative to the row's own scale.
    pub fn relative_residual(&self, x: &[Complex64], rhs_extra: &[Complex64]) -> f64 {
        let mut worst = 0.0f64;
        for (i, row) in self.bands.iter().enumerate() {
            let m = i + 2;
            let mut acc = Complex64::new(0.0, 0.0);
            let mut scale = 0.0;
            for (t, &c) in row.iter().enumerate() {
                let v = x[m + t - 2];
                acc += v * c;
                scale += (v * c).norm();
            }
            acc -= rhs_extra.get(i).copied().unwrap_or_default();
            if scale > 0.0 {
                worst = worst.max(acc.norm() / scale);
            }
        }
        worst
    }
}

/// Tail length for the zero-boundary solve in the decay regime.
pub fn initial_tail(g: &GeomParams, m_max: usize) -> usize {
    let m_star = classify_regime(g, 0).m_star;
    // |G_m| ~ e^{-μ m} beyond m*, cosh μ = 1/α
    let x = 1.0 / g.alpha;
    let mu = (x + ((x - 1.0) * (x + 1.0)).sqrt()).ln();
    let extra = (TAIL_DIGITS * std::f64::consts::LN_10 / mu).ceil();
    // The downward derivative ladders lose accuracy within `extra` modes of
    // the tail, so it is pushed past M unless G_M underflows anyway.
    let underflow = m_star + UNDERFLOW_DIGITS * std::f64::consts::LN_10 / mu;
    let reach = m_star.max((m_max as f64).min(underflow));
    ((reach.ceil() + extra) as usize).max(8)
}

/// Output of [`all_modes`].
#[derive(Clone, Debug)]
pub struct ModeSolution {
    pub tag: RegimeTag,
    /// `G_0..=G_top`; `top = M` without a tail, `M'` with one.
    pub g: Vec<Complex64>,
    /// Contour values at modes 0 and 1.
    pub lo: [DirectQuantities; 2],
    /// Contour values at modes `M-1`, `M` (non-decay, `M > 5`).
    pub hi: Option<[DirectQuantities; 2]>,
    /// Every mode `0..=M+1` from the contour (`M ≤ 5`).
    pub direct: Option<Vec<DirectQuantities>>,
    pub system: Option<PentaSystem>,
    pub factor: Option<PentaFactor>,
    /// Tail length used in the decay regime.
    pub m_prime: Option<usize>,
    pub m_max: usize,
}

impl ModeSolution {
    /// `G_m` for `m ≤ M`, zero-filled above the tail.
    pub fn values(&self) -> Vec<Complex64> {
        (0..=self.m_max)
            .map(|m| self.g.get(m).copied().unwrap_or_default())
            .collect()
    }
}

/// Non-decay and decay paths for `G_0..=G_M`; contour values are evaluated
/// with derivative level `want` so the ladders can reuse them.
pub fn all_modes(g: &GeomParams, m_max: usize, want: Want) -> Result<ModeSolution> {
    all_modes_with(g, m_max, want, None, EvalOptions::default())
}

/// As [`all_modes`]; a forced tail length selects the decay path for any regime.
pub fn all_modes_with(
    g: &GeomParams,
    m_max: usize,
    want: Want,
    forced_tail: Option<usize>,
    opts: EvalOptions<'_>,
) -> Result<ModeSolution> {
    if forced_tail.is_some() {
        return decay_modes(g, m_max, want, forced_tail, opts);
    }
    let regime = classify_regime(g, m_max);
    if regime.tag == RegimeTag::NearAxis {
        return Err(Error::Domain(
            "near-axis geometry: use the series evaluator".into(),
        ));
    }
    if regime.tag == RegimeTag::Decay {
        return decay_modes(g, m_max, want, None, opts);
    }
    if m_max <= DIRECT_MAX_MODE {
        let modes: Vec<usize> = (0..=m_max + 1).collect();
        let direct = eval_modes_on_contour(g, m_max + 1, &modes, want, opts)?.values;
        return Ok(ModeSolution {
            tag: RegimeTag::NonDecay,
            g: direct.iter().take(m_max + 1).map(|d| d.g).collect(),
            lo: [direct[0], direct[1]],
            hi: None,
            direct: Some(direct),
            system: None,
            factor: None,
            m_prime: None,
            m_max,
        });
    }
    let lo = eval_modes_on_contour(g, 0, &[0, 1], want, opts)?.values;
    let hi_want = if m_max > DA_BY_BVP_THRESHOLD { want.min(Want::First) } else { Want::Values };
    let hi = eval_modes_on_contour(g, m_max, &[m_max - 1, m_max], hi_want, opts)?.values;
    let sys = PentaSystem::new(g, m_max)?;
    let f = sys.factor()?;
    let rhs = sys.boundary_rhs([lo[0].g, lo[1].g], [hi[0].g, hi[1].g]);
    let interior = f.solve(&rhs);
    let mut vals = Vec::with_capacity(m_max + 1);
    vals.push(lo[0].g);
    vals.push(lo[1].g);
    vals.extend(interior);
    vals.push(hi[0].g);
    vals.push(hi[1].g);
    Ok(ModeSolution {
        tag: RegimeTag::NonDecay,
        g: vals,
        lo: [lo[0], lo[1]],
        hi: Some([hi[0], hi[1]]),
        direct: None,
        system: Some(sys),
        factor: Some(f),
        m_prime: None,
        m_max,
    })
}

fn decay_modes(
    g: &GeomParams,
    m_max: usize,
    want: Want,
    forced_tail: Option<usize>,
    opts: EvalOptions<'_>,
) -> Result<ModeSolution> {
    let lo = eval_modes_on_contour(g, 0, &[0, 1], want, opts)?.values;
    let zero = Complex64::new(0.0, 0.0);
    let mut top = forced_tail.unwrap_or_else(|| initial_tail(g, m_max));
    let mut attempt = 0;
    loop {
        let sys = PentaSystem::new(g, top)?;
        let f = sys.factor()?;
        let rhs = sys.boundary_rhs([lo[0].g, lo[1].g], [zero, zero]);
        let interior = f.solve(&rhs);
        let mut vals = Vec::with_capacity(top + 2);
        vals.push(lo[0].g);
        vals.push(lo[1].g);
        vals.extend(interior);
        vals.push(zero);
        vals.push(zero);
        let peak = vals.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let tail_ok = vals[top - 2].norm() <= TAIL_TOLERANCE * peak;
        if tail_ok || forced_tail.is_some() || attempt >= TAIL_RETRIES {
            return Ok(ModeSolution {
                tag: RegimeTag::Decay,
                g: vals,
                lo: [lo[0], lo[1]],
                hi: None,
                direct: None,
                system: Some(sys),
                factor: Some(f),
                m_prime: Some(top),
                m_max,
            });
        }
        top += top.div_ceil(2);
        attempt += 1;
    }
}

/// The eight `(a, b)` quantities per mode `0..=M`; derivative arrays are
/// empty when not requested.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DerivBundle {
    pub g: Vec<Complex64>,
    /// `∂G/∂a`
    pub da: Vec<Complex64>,
    /// `∂G/∂a + ∂G/∂b`
    pub dapb: Vec<Complex64>,
    /// `∂G/∂b`
    pub db: Vec<Complex64>,
    /// `∂²G/∂a²`
    pub daa: Vec<Complex64>,
    /// `∂²G/∂a² + ∂²G/∂a∂b`
    pub daapab: Vec<Complex64>,
    /// `∂²G/∂a∂b`
    pub dab: Vec<Complex64>,
    /// `∂²G/∂a∂b + ∂²G/∂b²`
    pub dabpbb: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
}

/// Ladder arrays before the pointwise identities: `da`, `daa`, `daapab`
/// reach `M+1`, `dapb` reaches `M`.
#[derive(Clone, Debug, Default)]
pub struct Ladders {
    pub da: Vec<Complex64>,
    pub dapb: Vec<Complex64>,
    pub daa: Vec<Complex64>,
    pub daapab: Vec<Complex64>,
}

/// `∂G_{m+1}/∂a = ∂G_{m-1}/∂a + (2m/b) G_m` and its relatives, run up from
/// contour values at 0, 1 or down from zeros past the tail.
pub fn derivative_ladders(
    g: &GeomParams,
    sol: &ModeSolution,
    want: Want,
    da_by_bvp: bool,
) -> Result<Ladders> {
    if !(g.b > 0.0) {
        return Err(Error::Domain("ladders need b > 0".into()));
    }
    let m_max = sol.m_max;
    if want == Want::Values {
        return Ok(Ladders::default());
    }
    if let Some(direct) = &sol.direct {
        let pick = |f: fn(&DirectQuantities) -> Complex64| direct.iter().map(f).collect::<Vec<_>>();
        let mut l = Ladders {
            da: pick(|d| d.da),
            dapb: pick(|d| d.dapb),
            ..Default::default()
        };
        l.dapb.truncate(m_max + 1);
        if want == Want::Second {
            l.daa = pick(|d| d.daa);
            l.daapab = pick(|d| d.daapab);
        }
        return Ok(l);
    }
    let inv_b = 1.0 / g.b;
    let gm = |m: usize| sol.g.get(m).copied().unwrap_or_default();
    let zero = Complex64::new(0.0, 0.0);
    match sol.tag {
        RegimeTag::Decay => {
            let top = sol.m_prime.expect("decay solution carries its tail");
            let n = top + 2;
            let down = |seed_src: &dyn Fn(usize) -> Complex64, combined: bool| {
                let mut x = vec![zero; n];
                for m in (1..=top).rev() {
                    let mf = m as f64;
                    let step = if combined {
                        (seed_src(m) * (2.0 * mf)
                            - seed_src(m + 1) * (mf + 1.0)
                            - seed_src(m - 1) * (mf - 1.0))
                            * inv_b
                    } else {
                        seed_src(m) * (2.0 * mf * inv_b)
                    };
                    x[m - 1] = x[m + 1] - step;
                }
                x
            };
            let da = down(&gm, false);
            let dapb = down(&gm, true);
            let (daa, daapab) = if want == Want::Second {
                let dam = |m: usize| da.get(m).copied().unwrap_or_default();
                (down(&dam, false), down(&dam, true))
            } else {
                (vec![], vec![])
            };
            let fit = |mut v: Vec<Complex64>, len: usize| {
                v.resize(len.max(v.len()), zero);
                v.truncate(len);
                v
            };
            Ok(Ladders {
                da: fit(da, m_max + 2),
                dapb: fit(dapb, m_max + 1),
                daa: if want == Want::Second { fit(daa, m_max + 2) } else { vec![] },
                daapab: if want == Want::Second { fit(daapab, m_max + 2) } else { vec![] },
            })
        }
        _ => {
            let lo = &sol.lo;
            let mut da = vec![zero; m_max + 2];
            if da_by_bvp {
                let hi = sol
                    .hi
                    .ok_or_else(|| Error::Internal("banded derivative solve needs M > 5".into()))?;
                let sys = sol.system.as_ref().expect("non-decay system");
                let f = sol.factor.as_ref().expect("non-decay factor");
                let mut rhs = sys.boundary_rhs([lo[0].da, lo[1].da], [hi[0].da, hi[1].da]);
                for (i, r) in rhs.iter_mut().enumerate() {
                    *r -= gm(i + 2) / g.a;
                }
                let interior = f.solve(&rhs);
                da[0] = lo[0].da;
                da[1] = lo[1].da;
                da[2..m_max - 1].copy_from_slice(&interior);
                da[m_max - 1] = hi[0].da;
                da[m_max] = hi[1].da;
                let mf = m_max as f64;
                da[m_max + 1] = da[m_max - 1] + gm(m_max) * (2.0 * mf * inv_b);
            } else {
                da[0] = lo[0].da;
                da[1] = lo[1].da;
                for m in 1..=m_max {
                    da[m + 1] = da[m - 1] + gm(m) * (2.0 * m as f64 * inv_b);
                }
            }
            let mut dapb = vec![zero; m_max + 1];
            dapb[0] = lo[0].dapb;
            dapb[1] = lo[1].dapb;
            for m in 1..m_max {
                let mf = m as f64;
                dapb[m + 1] = dapb[m - 1]
                    + (gm(m) * (2.0 * mf) - gm(m + 1) * (mf + 1.0) - gm(m - 1) * (mf - 1.0))
                        * inv_b;
            }
            let (mut daa, mut daapab) = (vec![], vec![]);
            if want == Want::Second {
                daa = vec![zero; m_max + 2];
                daapab = vec![zero; m_max + 2];
                daa[0] = lo[0].daa;
                daa[1] = lo[1].daa;
                daapab[0] = lo[0].daapab;
                daapab[1] = lo[1].daapab;
                for m in 1..=m_max {
                    let mf = m as f64;
                    daa[m + 1] = daa[m - 1] + da[m] * (2.0 * mf * inv_b);
                    daapab[m + 1] = daapab[m - 1]
                        + (da[m] * (2.0 * mf) - da[m + 1] * (mf + 1.0) - da[m - 1] * (mf - 1.0))
                            * inv_b;
                }
            }
            Ok(Ladders {
                da,
                dapb,
                daa,
                daapab,
            })
        }
    }
}

/// Completes the bundle with `∂G/∂b`, `∂²G/∂a∂b`, `∂²G/∂a∂b + ∂²G/∂b²`,
/// using `X_{-1} = X_1` at `m = 0`.
pub fn pointwise_identities(values: Vec<Complex64>, l: Ladders, want: Want) -> DerivBundle {
    let m_max = values.len() - 1;
    let mut b = DerivBundle {
        g: values,
        ..Default::default()
    };
    if want == Want::Values {
        return b;
    }
    let neighbours = |x: &[Complex64], m: usize| {
        let below = if m == 0 { x[1] } else { x[m - 1] };
        -(x[m + 1] + below) * 0.5
    };
    b.db = (0..=m_max).map(|m| neighbours(&l.da, m)).collect();
    b.da = l.da[..=m_max].to_vec();
    b.dapb = l.dapb[..=m_max].to_vec();
    if want == Want::Second {
        b.dab = (0..=m_max).map(|m| neighbours(&l.daa, m)).collect();
        b.dabpbb = (0..=m_max).map(|m| neighbours(&l.daapab, m)).collect();
        b.daa = l.daa[..=m_max].to_vec();
        b.daapab = l.daapab[..=m_max].to_vec();
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{compute_params, SourceTargetPair};
    use crate::modal_eval::eval_mode;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn coefficients() {
        let g = compute_params(SourceTargetPair::new(1.0, 1.0, 1.0, 0.0), 3.0).unwrap();
        let cf = five_term_coefficients(&g, 4);
        let (a, k) = (g.alpha, g.kappa);
        assert!((cf[2] - (1.0 - a * a * k * k / 120.0)).abs() < 1e-15);
        assert!((cf[3] + a * 9.0 / 16.0).abs() < 1e-15);
        assert!((cf[0] - a * a * k * k / 192.0).abs() < 1e-15);
    }

    #[test]
    fn solver_reproduces_known_sequence() {
        // any sequence defines a consistent right-hand side
        let g = compute_params(SourceTargetPair::new(2.35, 3.16, 3.68, 2.82), 40.0).unwrap();
        let top = 60;
        let x: Vec<Complex64> = (0..=top)
            .map(|m| c((0.3 * m as f64).cos() / (m as f64 + 1.0), (m as f64).sin()))
            .collect();
        let sys = PentaSystem::new(&g, top).unwrap();
        let mut rhs = sys.boundary_rhs([x[0], x[1]], [x[top - 1], x[top]]);
        for (i, row) in sys.bands.iter().enumerate() {
            let m = i + 2;
            for (t, &cf) in row.iter().enumerate() {
                rhs[i] += x[m + t - 2] * cf;
            }
        }
        let f = sys.factor().unwrap();
        let y = f.solve(&rhs);
        for (i, v) in y.iter().enumerate() {
            assert!((v - x[i + 2]).norm() < 1e-12 * x[i + 2].norm().max(1e-3), "{i}");
        }
    }

    #[test]
    fn interior_matches_contour_for_small_system() {
        let g = compute_params(SourceTargetPair::new(2.35, 3.16, 3.68, 2.82), 30.0).unwrap();
        let sol = all_modes(&g, 6, Want::Values).unwrap();
        assert_eq!(sol.tag, RegimeTag::NonDecay);
        for m in 2..=4 {
            let d = eval_mode(&g, m, Want::Values).unwrap().g;
            assert!((sol.g[m] - d).norm() < 1e-11 * d.norm(), "{m}");
        }
    }

    #[test]
    fn direct_path_agrees_with_banded_path() {
        let g = compute_params(SourceTargetPair::new(2.35, 3.16, 3.68, 2.82), 60.0).unwrap();
        let small = all_modes(&g, 5, Want::Values).unwrap().values();
        let big = all_modes(&g, 100, Want::Values).unwrap().values();
        for m in 0..=5 {
            assert!((small[m] - big[m]).norm() < 1e-11 * big[m].norm(), "{m}");
        }
    }

    #[test]
    fn ladder_single_step() {
        let g = compute_params(SourceTargetPair::new(2.35, 3.16, 3.68, 2.82), 60.0).unwrap();
        let sol = all_modes(&g, 40, Want::First).unwrap();
        let l = derivative_ladders(&g, &sol, Want::First, false).unwrap();
        let r = l.da[2] - l.da[0] - sol.g[1] * (2.0 / g.b);
        assert!(r.norm() <= 1e-15 * l.da[2].norm());
    }

    #[test]
    fn identity_on_constant_sequence() {
        let x = vec![c(2.0, -1.0); 4];
        let l = Ladders {
            da: x.clone(),
            dapb: x[..3].to_vec(),
            daa: x.clone(),
            daapab: x.clone(),
        };
        let b = pointwise_identities(vec![c(0.0, 0.0); 3], l, Want::Second);
        for m in 0..3 {
            assert_eq!(b.db[m], -b.da[m]);
        }
    }

    #[test]
    fn decay_regime_uses_tail() {
        let g = compute_params(SourceTargetPair::new(2.35, 3.16, 3.68, 2.82), 100.0).unwrap();
        let sol = all_modes(&g, 300, Want::Values).unwrap();
        assert_eq!(sol.tag, RegimeTag::Decay);
        let mp = sol.m_prime.unwrap();
        assert!(mp >= 233);
        let peak = sol.g.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(sol.g[mp - 2].norm() <= TAIL_TOLERANCE * peak);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn ladders_symmetric_under_exchange(r in 0.5f64..3.0, z in -2.0f64..2.0, rp in 0.5f64..3.0, zp in -2.0f64..2.0, k in 0.5f64..30.0) {
            let p = SourceTargetPair::new(r, z, rp, zp);
            let g1 = compute_params(p, k).unwrap();
            let g2 = compute_params(p.swapped(), k).unwrap();
            prop_assume!(g1.alpha > 0.06);
            let s1 = all_modes(&g1, 20, Want::Second).unwrap();
            let s2 = all_modes(&g2, 20, Want::Second).unwrap();
            let l1 = derivative_ladders(&g1, &s1, Want::Second, false).unwrap();
            let l2 = derivative_ladders(&g2, &s2, Want::Second, false).unwrap();
            prop_assert_eq!(l1.da, l2.da);
            prop_assert_eq!(l1.daapab, l2.daapab);
        }
    }
}
