//! Single-threaded wall-clock timings of all-mode evaluation.

use crate::assembly::evaluate_all;
use crate::error::Result;
use crate::geometry::{classify_regime, compute_params, RegimeTag, SourceTargetPair};
use crate::Want;
use std::hint::black_box;
use std::time::Instant;

#[derive(Clone, Debug)]
pub struct Timing {
    /// Mean seconds per evaluation in each repeat.
    pub means: Vec<f64>,
    pub median: f64,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Median over `repeats` of the mean time of `inner` back-to-back evaluations.
pub fn time_evaluation(
    pair: SourceTargetPair,
    k: f64,
    m_max: usize,
    want: Want,
    repeats: usize,
    inner: usize,
) -> Result<Timing> {
    // Surface domain errors before timing, and warm up.
    black_box(evaluate_all(pair, k, m_max, want)?);
    let inner = inner.max(1);
    let mut means = Vec::with_capacity(repeats);
    for _ in 0..repeats.max(1) {
        let t = Instant::now();
        for _ in 0..inner {
            black_box(evaluate_all(black_box(pair), k, m_max, want)?);
        }
        means.push(t.elapsed().as_secs_f64() / inner as f64);
    }
    let median = median(&means);
    Ok(Timing { means, median })
}

#[derive(Clone, Debug)]
pub struct BenchRecord {
    pub pair: SourceTargetPair,
    pub k: f64,
    pub m_max: usize,
    pub alpha: f64,
    pub kappa: f64,
    pub regime: RegimeTag,
    pub repeats: usize,
    pub inner: usize,
    /// Seconds for values only, with first, and with second derivatives.
    pub t0: f64,
    pub t1: f64,
    pub t2: f64,
}

pub fn bench_point(
    pair: SourceTargetPair,
    k: f64,
    m_max: usize,
    repeats: usize,
    inner: usize,
) -> Result<BenchRecord> {
    let g = compute_params(pair, k)?;
    let regime = classify_regime(&g, m_max).tag;
    let t = |w| time_evaluation(pair, k, m_max, w, repeats, inner).map(|t| t.median);
    Ok(BenchRecord {
        pair,
        k,
        m_max,
        alpha: g.alpha,
        kappa: g.kappa,
        regime,
        repeats,
        inner,
        t0: t(Want::Values)?,
        t1: t(Want::First)?,
        t2: t(Want::Second)?,
    })
}

/// Max over min of a set of timings.
pub fn spread(times: &[f64]) -> f64 {
    let max = times.iter().copied().fold(f64::MIN, f64::max);
    let min = times.iter().copied().fold(f64::MAX, f64::min);
    max / min
}
