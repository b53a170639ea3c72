//! Per-mode relative errors of the fast evaluator against the oracle.

use crate::assembly::{evaluate_all, Evaluation};
use crate::error::Result;
use crate::geometry::SourceTargetPair;
use crate::oracle::{oracle_modes, OracleModes, Quantity};
use crate::Want;
use num_complex::Complex64;

/// The evaluator's value of `q` at mode `m`, if that order was computed.
pub fn quantity_value(e: &Evaluation, q: Quantity, m: usize) -> Option<Complex64> {
    use Quantity::*;
    let (b, c) = (&e.bundle, &e.cyl);
    let v = match q {
        G => &b.g,
        Da => &b.da,
        Dapb => &b.dapb,
        Db => &b.db,
        Daa => &b.daa,
        Daapab => &b.daapab,
        Dab => &b.dab,
        Dabpbb => &b.dabpbb,
        Dr => &c.dr,
        Drp => &c.drp,
        Dz => &c.dz,
        Dzp => &c.dzp,
        Drr => &c.drr,
        Drprp => &c.drprp,
        Drrp => &c.drrp,
        Drz => &c.drz,
        Drpz => &c.drpz,
        Dzz => &c.dzz,
        Drzp => &c.drzp,
        Drpzp => &c.drpzp,
        Dzzp => &c.dzzp,
        Dzpzp => &c.dzpzp,
    };
    v.get(m).copied()
}

pub const ALL_QUANTITIES: [Quantity; 22] = {
    use Quantity::*;
    [
        G, Da, Dapb, Db, Daa, Daapab, Dab, Dabpbb, Dr, Drp, Dz, Dzp, Drr, Drprp, Drrp, Drz, Drpz,
        Dzz, Drzp, Drpzp, Dzzp, Dzpzp,
    ]
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub m: usize,
    pub abs_g: f64,
    pub err_g: f64,
    /// Worst over first-order quantities, NaN when not requested.
    pub err_first: f64,
    pub err_second: f64,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub evaluation: Evaluation,
    pub oracle: OracleModes,
    pub rows: Vec<SweepRow>,
}

/// Relative error, or 0 when both values vanish (e.g. z-derivatives at equal heights).
pub fn relative_error(ours: Complex64, reference: Complex64) -> f64 {
    let d = (ours - reference).norm();
    if d == 0.0 {
        0.0
    } else {
        d / reference.norm()
    }
}

/// `m_j = round(j M / (n - 1))`, `j = 0..n`, deduplicated.
pub fn sample_modes(m_max: usize, n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = if n <= 1 {
        vec![0]
    } else {
        (0..n)
            .map(|j| ((j * m_max) as f64 / (n - 1) as f64).round() as usize)
            .collect()
    };
    v.dedup();
    v
}

/// Errors per quantity at each sampled mode; `floor` drops quantities whose
/// oracle magnitude is below that fraction of the largest sampled value of
/// the same quantity, since the oracle's absolute error floor dominates there.
pub fn quantity_errors(
    e: &Evaluation,
    o: &OracleModes,
    q: Quantity,
    floor: f64,
) -> Vec<Option<f64>> {
    let peak = (0..o.modes.len())
        .map(|i| o.get_c64(i, q).norm())
        .fold(0.0, f64::max);
    o.modes
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let r = o.get_c64(i, q);
            let ours = quantity_value(e, q, m)?;
            if r.norm() < floor * peak {
                return None;
            }
            Some(relative_error(ours, r))
        })
        .collect()
}

pub fn sweep(
    pair: SourceTargetPair,
    k: f64,
    m_max: usize,
    modes: &[usize],
    want: Want,
    tol: f64,
) -> Result<SweepReport> {
    let evaluation = evaluate_all(pair, k, m_max, want)?;
    let oracle = oracle_modes(pair, k, modes, tol)?;
    let floor = 1e-15;
    let worst = |order: u8| -> Vec<f64> {
        let mut out = vec![0.0f64; modes.len()];
        for q in ALL_QUANTITIES.iter().filter(|q| q.order() == order) {
            for (i, e) in quantity_errors(&evaluation, &oracle, *q, floor).into_iter().enumerate() {
                if let Some(e) = e {
                    out[i] = out[i].max(e);
                }
            }
        }
        out
    };
    let g_err = worst(0);
    let first = if want >= Want::First { worst(1) } else { vec![f64::NAN; modes.len()] };
    let second = if want == Want::Second { worst(2) } else { vec![f64::NAN; modes.len()] };
    let rows = modes
        .iter()
        .enumerate()
        .map(|(i, &m)| SweepRow {
            m,
            abs_g: oracle.get_c64(i, Quantity::G).norm(),
            err_g: g_err[i],
            err_first: first[i],
            err_second: second[i],
        })
        .collect();
    Ok(SweepReport {
        evaluation,
        oracle,
        rows,
    })
}
