//! Evaluator output against reference values computed once by the
//! extended-precision oracle and frozen here.

use modal_green::assembly::evaluate_all;
use modal_green::geometry::{RegimeTag, SourceTargetPair};
use modal_green::oracle::{oracle_modes, Quantity};
use modal_green::sweep::{quantity_value, relative_error};
use modal_green::Want;
use num_complex::Complex64;

#[derive(Clone, Copy, PartialEq, Debug)]
enum Case {
    Separated,
    Decay,
    NearAxis,
    NearSingular,
}

impl Case {
    fn setup(self) -> (SourceTargetPair, f64, usize, RegimeTag) {
        let table = SourceTargetPair::new(2.35, 3.16, 3.68, 2.82);
        match self {
            Case::Separated => (table, 50.0, 40, RegimeTag::NonDecay),
            Case::Decay => (table, 100.0, 300, RegimeTag::Decay),
            Case::NearAxis => (SourceTargetPair::from_alpha(0.01, 1.0), 0.5, 10, RegimeTag::NearAxis),
            Case::NearSingular => (SourceTargetPair::new(1.0, 0.0, 1.0, 1e-6), 20.0, 30, RegimeTag::NonDecay),
        }
    }
}

#[rustfmt::skip]
const FROZEN: [(Case, usize, Quantity, f64, f64); 50] = [
    (Case::Separated, 0, Quantity::G, 1.81371507004091039e-3, 1.51560507851862634e-4),
    (Case::Separated, 0, Quantity::Dr, 3.12313570183887883e-2, -3.14904421342622129e-2),
    (Case::Separated, 0, Quantity::Dzp, 4.31517649442186412e-3, -1.69549685868828383e-2),
    (Case::Separated, 0, Quantity::Drrp, 1.47180558228242164e0, 1.55088814989188517e0),
    (Case::Separated, 0, Quantity::Dzz, -2.05888426593766410e-1, -1.42555833111071405e-2),
    (Case::Separated, 7, Quantity::G, 6.48418812658740971e-4, 3.33708642247063526e-4),
    (Case::Separated, 7, Quantity::Dr, 1.28767511847389243e-2, -9.23253235121603427e-2),
    (Case::Separated, 7, Quantity::Dzp, 3.88730420728918826e-3, -1.39284772338553447e-2),
    (Case::Separated, 7, Quantity::Drrp, 4.50874337195710684e0, 6.54773582998060766e-1),
    (Case::Separated, 7, Quantity::Dzz, -1.99407451319125878e-1, -1.03681649594015244e-2),
    (Case::Separated, 40, Quantity::G, -9.64384177487126546e-4, -1.66354477716502318e-3),
    (Case::Separated, 40, Quantity::Dr, -1.52024676219301488e-2, 3.56067084859776964e-2),
    (Case::Separated, 40, Quantity::Dzp, -1.40099705868854379e-2, 1.05871603562352496e-2),
    (Case::Separated, 40, Quantity::Drrp, -1.66617611981739944e0, -6.93200754227148774e-1),
    (Case::Separated, 40, Quantity::Dzz, 1.61701776811807973e-1, 1.21323919223622304e-1),
    (Case::Decay, 250, Quantity::G, -1.76910712434489121e-5, -3.21914447978059074e-6),
    (Case::Decay, 250, Quantity::Dr, -6.92335843575912118e-4, -1.38796163508645375e-4),
    (Case::Decay, 250, Quantity::Dzp, -1.05057877248554201e-4, 1.86432983082896820e-4),
    (Case::Decay, 250, Quantity::Drrp, 9.99354748429730384e-3, -5.02105451438251693e-2),
    (Case::Decay, 250, Quantity::Dzz, 1.99614299942492846e-3, 1.38254887520923423e-3),
    (Case::Decay, 300, Quantity::G, -5.28727271413417624e-19, -3.73374927993440003e-18),
    (Case::Decay, 300, Quantity::Dr, -3.96155515306576819e-17, -2.98817459793617476e-16),
    (Case::Decay, 300, Quantity::Dzp, -3.74311277232927668e-17, -2.46760390467939452e-17),
    (Case::Decay, 300, Quantity::Drrp, 1.71751084326132668e-14, -2.45921906357500119e-15),
    (Case::Decay, 300, Quantity::Dzz, -4.07284198301062628e-16, 2.08372147162893042e-16),
    (Case::NearAxis, 3, Quantity::G, 3.18820204094353494e-9, 1.52061803744887673e-14),
    (Case::NearAxis, 3, Quantity::Dr, 1.33706043492230873e-7, 6.45113652444333504e-13),
    (Case::NearAxis, 3, Quantity::Dzp, 2.20452979950031596e-8, 4.21342485140935873e-16),
    (Case::NearAxis, 3, Quantity::Drrp, 5.60779814179013589e-6, 2.73685839797050122e-11),
    (Case::NearAxis, 3, Quantity::Dzz, 1.74481197665264083e-7, -4.13920457368607668e-16),
    (Case::NearAxis, 10, Quantity::G, 1.37868857649697091e-25, 7.05369389481291176e-51),
    (Case::NearAxis, 10, Quantity::Dr, 1.92940627098421213e-23, 1.02023877977852488e-48),
    (Case::NearAxis, 10, Quantity::Dzp, 2.87907754687791880e-24, 1.99982602579717634e-53),
    (Case::NearAxis, 10, Quantity::Drrp, 2.70016695567561763e-21, 1.44271468567942984e-46),
    (Case::NearAxis, 10, Quantity::Dzz, 6.29628937192636817e-23, -2.38388116675091650e-52),
    (Case::NearSingular, 0, Quantity::G, 2.77352283056804927e-1, 4.47932097822094644e-2),
    (Case::NearSingular, 0, Quantity::Dr, -2.38885286111941486e-1, -1.65342196331116284e-2),
    (Case::NearSingular, 0, Quantity::Dzp, -2.53302959686031245e4, -7.95979444501488456e-6),
    (Case::NearSingular, 0, Quantity::Drrp, 2.53302959686303520e10, 5.96209942136459947e0),
    (Case::NearSingular, 0, Quantity::Dzz, 2.53302958576349907e10, -7.95979444421861437e0),
    (Case::NearSingular, 5, Quantity::G, 2.82683252136352481e-1, 3.77948770808930537e-2),
    (Case::NearSingular, 5, Quantity::Dr, -1.04990329041464006e-1, 7.61048230081306232e-2),
    (Case::NearSingular, 5, Quantity::Dzp, -2.53302959650658267e4, -7.41490284988968402e-6),
    (Case::NearSingular, 5, Quantity::Drrp, 2.53302959632697754e10, 8.07162964363386948e0),
    (Case::NearSingular, 5, Quantity::Dzz, 2.53302958608556595e10, -7.41490284918939579e0),
    (Case::NearSingular, 30, Quantity::G, 2.74194596699911253e-1, 4.45319990776002313e-9),
    (Case::NearSingular, 30, Quantity::Dr, -1.14232544123242727e-1, 1.01961568489661943e-7),
    (Case::NearSingular, 30, Quantity::Dzp, -2.53302958389032283e4, -3.60543728346601911e-14),
    (Case::NearSingular, 30, Quantity::Drrp, 2.53302958389675064e10, 2.33476307238371477e-6),
    (Case::NearSingular, 30, Quantity::Dzz, 2.53302959759362526e10, -3.60543728343826153e-8),
];

fn check(case: Case, tol: f64) {
    let (pair, k, m_max, regime) = case.setup();
    let e = evaluate_all(pair, k, m_max, Want::Second).unwrap();
    assert_eq!(e.regime.tag, regime);
    for &(c, m, q, re, im) in FROZEN.iter().filter(|r| r.0 == case) {
        let ours = quantity_value(&e, q, m).unwrap();
        let err = relative_error(ours, Complex64::new(re, im));
        assert!(err <= tol, "{c:?} m={m} {q:?}: {ours} vs {re}+{im}i, rel err {err:.2e}");
    }
}

#[test]
fn well_separated_non_decay() {
    check(Case::Separated, 1e-11);
}

#[test]
fn decay_tail() {
    check(Case::Decay, 1e-11);
}

#[test]
fn near_axis_series() {
    check(Case::NearAxis, 1e-12);
}

#[test]
fn near_singular() {
    check(Case::NearSingular, 1e-9);
}

#[test]
fn oracle_reproduces_frozen_values() {
    for case in [Case::Separated, Case::Decay, Case::NearAxis, Case::NearSingular] {
        let (pair, k, _, _) = case.setup();
        let rows: Vec<_> = FROZEN.iter().filter(|r| r.0 == case).collect();
        let mut modes: Vec<usize> = rows.iter().map(|r| r.1).collect();
        modes.dedup();
        let o = oracle_modes(pair, k, &modes, 1e-26).unwrap();
        assert!(o.converged);
        for r in rows {
            let i = modes.iter().position(|&m| m == r.1).unwrap();
            let err = relative_error(o.get_c64(i, r.2), Complex64::new(r.3, r.4));
            assert!(err <= 1e-15, "{r:?} {err:e}");
        }
    }
}
