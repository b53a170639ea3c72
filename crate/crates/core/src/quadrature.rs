//! Gauss-Legendre rules, the fixed rules for the γ2 ray and the ellipse arc,
//! and the near-singular rule for the γ1 ray.

use crate::error::{Error, Result};
use std::path::Path;
use std::sync::{Arc, OnceLock};

/// Nodes on the γ2 ray and on γ1 when the points are well separated.
pub const RAY_NODES: usize = 32;
/// Ellipse-arc nodes per unit of geometry mode.
pub const ARC_NODES_PER_MODE: usize = 5;
/// Nodes per panel of the graded γ1 rule.
pub const PANEL_NODES: usize = 16;
/// Graded refinement stops at `GRADED_FLOOR_FACTOR · sqrt(β₋)`.
pub const GRADED_FLOOR_FACTOR: f64 = 0.25;
/// Absolute floor on the smallest graded panel.
pub const GRADED_FLOOR_ABS: f64 = 1.4210854715202004e-14; // 2^-46

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Reference GL rule on [-1, 1] as (nodes, weights), nodes increasing.
pub type Reference = Arc<(Vec<f64>, Vec<f64>)>;

const CACHE_SIZE: usize = 1 << 15;
static REFERENCE_CACHE: [OnceLock<Reference>; CACHE_SIZE] = [const { OnceLock::new() }; CACHE_SIZE];

/// Cached reference rule with `n` nodes.
pub fn reference_rule(n: usize) -> Reference {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    if n < CACHE_SIZE {
        REFERENCE_CACHE[n]
            .get_or_init(|| Arc::new(legendre_newton(n)))
            .clone()
    } else {
        Arc::new(legendre_newton(n))
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn legendre_newton(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // largest roots first; the odd middle root is exactly zero
        let theta = std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5);
        let mut x = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
        if n % 2 == 1 && i == n / 2 {
            x = 0.0;
        }
        let mut dp = 0.0;
        for _ in 0..12 {
            let (p, d) = legendre_and_derivative(n, x);
            let dx = p / d;
            x -= dx;
            dp = d;
            if dx.abs() <= 4e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    (nodes, weights)
}

/// `n`-node Gauss-Legendre rule on `[lo, hi]`.
pub fn gauss_legendre(n: usize, lo: f64, hi: f64) -> QuadratureRule {
    let r = reference_rule(n);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    QuadratureRule {
        nodes: r.0.iter().map(|&x| mid + half * x).collect(),
        weights: r.1.iter().map(|&w| half * w).collect(),
        lo,
        hi,
    }
}

pub fn gamma2_rule(tau2: f64) -> QuadratureRule {
    gauss_legendre(RAY_NODES, 0.0, tau2)
}

pub fn ellipse_node_count(m: usize) -> usize {
    ARC_NODES_PER_MODE * m.max(crate::contour::MIN_GEOMETRY_MODE)
}

pub fn ellipse_rule(theta1: f64, theta2: f64, m: usize) -> QuadratureRule {
    gauss_legendre(ellipse_node_count(m), theta1, theta2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gamma1Source {
    Gauss,
    Graded,
    LoadedTable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gamma1Rule {
    pub rule: QuadratureRule,
    /// `floor(-log2 β₋)`, clamped at 0.
    pub beta_level: u32,
    pub source: Gamma1Source,
}

pub fn beta_level(beta_minus: f64) -> u32 {
    if beta_minus >= 1.0 || beta_minus <= 0.0 {
        return if beta_minus <= 0.0 { u32::MAX } else { 0 };
    }
    (-beta_minus.log2()).floor() as u32
}

/// Panel breakpoints of the graded rule, increasing from 0 to `tau1`.
pub fn graded_breakpoints(beta_minus: f64, tau1: f64) -> Vec<f64> {
    let floor = (GRADED_FLOOR_FACTOR * beta_minus.sqrt()).max(GRADED_FLOOR_ABS);
    let mut pts = vec![tau1];
    let mut left = tau1;
    // at least two panels, so a short ray still gets the plain ray budget
    loop {
        left *= 0.5;
        pts.push(left);
        if left <= floor {
            break;
        }
    }
    pts.push(0.0);
    pts.reverse();
    pts.dedup();
    pts
}

/// Rule for the γ1 ray on `[0, tau1]`, using a loaded table when one covers β₋.
pub fn gamma1_rule(beta_minus: f64, tau1: f64, table: Option<&GgqTable>) -> Gamma1Rule {
    let level = beta_level(beta_minus);
    if let Some(t) = table {
        if let Some(lv) = t.find(beta_minus) {
            return Gamma1Rule {
                rule: QuadratureRule {
                    nodes: lv.nodes.iter().map(|&x| x * tau1).collect(),
                    weights: lv.weights.iter().map(|&w| w * tau1).collect(),
                    lo: 0.0,
                    hi: tau1,
                },
                beta_level: level,
                source: Gamma1Source::LoadedTable,
            };
        }
    }
    if beta_minus > 0.5 {
        return Gamma1Rule {
            rule: gauss_legendre(RAY_NODES, 0.0, tau1),
            beta_level: level,
            source: Gamma1Source::Gauss,
        };
    }
    let pts = graded_breakpoints(beta_minus, tau1);
    let reference = reference_rule(PANEL_NODES);
    let n = (pts.len() - 1) * PANEL_NODES;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for w in pts.windows(2) {
        let half = 0.5 * (w[1] - w[0]);
        let mid = 0.5 * (w[1] + w[0]);
        for (x, wt) in reference.0.iter().zip(&reference.1) {
            nodes.push(mid + half * x);
            weights.push(half * wt);
        }
    }
    Gamma1Rule {
        rule: QuadratureRule {
            nodes,
            weights,
            lo: 0.0,
            hi: tau1,
        },
        beta_level: level,
        source: Gamma1Source::Graded,
    }
}

/// One β₋ range of a loaded γ1 table; nodes on [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct GgqLevel {
    pub index: usize,
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct GgqTable {
    pub levels: Vec<GgqLevel>,
}

impl GgqTable {
    /// Level with `beta_lo < β₋ ≤ beta_hi`.
    pub fn find(&self, beta_minus: f64) -> Option<&GgqLevel> {
        self.levels
            .iter()
            .find(|l| beta_minus > l.beta_lo && beta_minus <= l.beta_hi)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let bad = |line: usize, what: &str| Error::Config(format!("line {line}: {what}"));
        let (ln, header) = lines.next().ok_or_else(|| bad(1, "empty table"))?;
        let mut it = header.split_whitespace();
        if it.next() != Some("GGQ1") {
            return Err(bad(ln, "expected header 'GGQ1 <num_levels>'"));
        }
        let count: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(ln, "missing level count"))?;
        let mut levels = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, l) = lines.next().ok_or_else(|| bad(ln, "missing level header"))?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 4 {
                return Err(bad(ln, "level header needs '<index> <beta_lo> <beta_hi> <n>'"));
            }
            let index = f[0].parse().map_err(|_| bad(ln, "bad level index"))?;
            let beta_lo: f64 = f[1].parse().map_err(|_| bad(ln, "bad beta_lo"))?;
            let beta_hi: f64 = f[2].parse().map_err(|_| bad(ln, "bad beta_hi"))?;
            let n: usize = f[3].parse().map_err(|_| bad(ln, "bad node count"))?;
            if !(beta_lo < beta_hi) {
                return Err(bad(ln, "beta_lo must be below beta_hi"));
            }
            let mut nodes = Vec::with_capacity(n);
            let mut weights = Vec::with_capacity(n);
            for _ in 0..n {
                let (ln, l) = lines.next().ok_or_else(|| bad(ln, "missing node line"))?;
                let mut p = l.split_whitespace().map(str::parse::<f64>);
                match (p.next(), p.next(), p.next()) {
                    (Some(Ok(x)), Some(Ok(w)), None) if (0.0..=1.0).contains(&x) && w.is_finite() => {
                        nodes.push(x);
                        weights.push(w);
                    }
                    _ => return Err(bad(ln, "expected '<node> <weight>' with node in [0, 1]")),
                }
            }
            levels.push(GgqLevel {
                index,
                beta_lo,
                beta_hi,
                nodes,
                weights,
            });
        }
        if let Some((ln, _)) = lines.next() {
            return Err(bad(ln, "trailing content after last level"));
        }
        Ok(Self { levels })
    }
}
