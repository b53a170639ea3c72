use clap::{Args, Parser, Subcommand, ValueEnum};
use modal_green::bench::{bench_point, spread, BenchRecord};
use modal_green::bie::{run_demo, Curve, DemoConfig};
use modal_green::oracle::{oracle_modes, Quantity, DEFAULT_TOLERANCE};
use modal_green::sweep::{sample_modes, sweep};
use modal_green::{evaluate_all, geometry::compute_params, Complex64, Error, SourceTargetPair, Want};
use serde_json::json;
use std::io::Write;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "mgf", version, about = "Azimuthal modes of the 3D Helmholtz Green's function")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Evaluate all modes 0..=M and print them as CSV.
    Eval(EvalArgs),
    /// Reference values from the extended-precision oracle.
    Oracle(OracleArgs),
    /// Per-mode relative errors of the evaluator against the oracle.
    Sweep(SweepArgs),
    /// Timings as JSON lines.
    Bench(BenchArgs),
    /// Exterior scattering demo on a body of revolution.
    BieDemo(BieArgs),
}

#[derive(Args, Debug, Clone)]
struct Geometry {
    #[arg(long, allow_hyphen_values = true)]
    r: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    z: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    rp: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    zp: Option<f64>,
    /// `2 r rp / R0²`; with --kappa and --r0 replaces the coordinates.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    r0: Option<f64>,
    /// Wavenumber. Ignored when --kappa is given, since then k = kappa / r0.
    #[arg(long)]
    k: Option<f64>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    geom: Geometry,
    #[arg(long)]
    mmax: usize,
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=2))]
    derivs: u8,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    geom: Geometry,
    /// Comma-separated mode list.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    modes: Vec<usize>,
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=2))]
    derivs: u8,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tol: f64,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    geom: Geometry,
    #[arg(long)]
    mmax: usize,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(0..=2))]
    derivs: u8,
    /// Number of evenly spaced sampled modes.
    #[arg(long, default_value_t = 40)]
    samples: usize,
    /// Sample every `stride` modes instead (M is always included).
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tol: f64,
    #[arg(long)]
    out: Option<String>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Scan {
    /// M over 500, 1000, 2000, 4000.
    M,
    /// k over 10, 100, 1000, 5000 at M = 1000.
    K,
    /// α over 0.902, 1-1e-5, 1-1e-14 at M = 1000.
    Alpha,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    geom: Geometry,
    #[arg(long, default_value_t = 1000)]
    mmax: usize,
    /// Run a preset scan instead of the single given point.
    #[arg(long, value_enum)]
    scan: Option<Scan>,
    #[arg(long, default_value_t = 11)]
    repeats: usize,
    /// Evaluations per repeat.
    #[arg(long, default_value_t = 20)]
    inner: usize,
    /// Timings are single-threaded; only 1 is accepted.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    out: Option<String>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Shape {
    Torus,
    Circle,
    File,
}

#[derive(Args, Debug)]
struct BieArgs {
    #[arg(long, value_enum, default_value_t = Shape::Torus)]
    geometry: Shape,
    /// `r,z` samples of a closed curve, one per line; used with --geometry file.
    #[arg(long)]
    curve_file: Option<String>,
    #[arg(long, default_value_t = 20.0)]
    k: f64,
    #[arg(long, default_value_t = 60)]
    modes: usize,
    #[arg(long, default_value_t = 12.0)]
    ppw: f64,
    #[arg(long, default_value_t = 2)]
    sources: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<String>,
}

enum Failure {
    Lib(Error),
    Config(String),
    Oracle(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(s) => Failure::Config(s),
            e => Failure::Lib(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("io: {e}"))
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn resolve(g: &Geometry) -> Res<(SourceTargetPair, f64)> {
    let coords = [g.r, g.z, g.rp, g.zp];
    let triplet = [g.alpha, g.kappa, g.r0];
    let any_c = coords.iter().any(Option::is_some);
    let any_t = triplet.iter().any(Option::is_some);
    match (any_c, any_t) {
        (true, true) => Err(Failure::Config(
            "give either --r --z --rp --zp or --alpha --kappa --r0, not both".into(),
        )),
        (false, false) => Err(Failure::Config("no geometry given".into())),
        (true, false) => {
            let [Some(r), Some(z), Some(rp), Some(zp)] = coords else {
                return Err(Failure::Config("--r, --z, --rp and --zp are all required".into()));
            };
            let k = g.k.ok_or_else(|| Failure::Config("--k is required".into()))?;
            Ok((SourceTargetPair::new(r, z, rp, zp), k))
        }
        (false, true) => {
            let [Some(alpha), Some(kappa), Some(r0)] = triplet else {
                return Err(Failure::Config("--alpha, --kappa and --r0 are all required".into()));
            };
            if !(alpha > 0.0 && alpha <= 1.0) || !(r0 > 0.0) || !(kappa >= 0.0) {
                return Err(Failure::Lib(Error::Domain(
                    "need 0 < alpha <= 1, r0 > 0, kappa >= 0".into(),
                )));
            }
            let k = kappa / r0;
            if let Some(given) = g.k {
                if (given - k).abs() > 1e-12 * k.max(1.0) {
                    eprintln!("note: --k {given} ignored; kappa / r0 = {k}");
                }
            }
            Ok((SourceTargetPair::from_alpha(alpha, r0), k))
        }
    }
}

fn want(level: u8) -> Want {
    Want::from_level(level).expect("range checked by the parser")
}

fn sink(out: &Option<String>) -> Res<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::BufWriter::new(std::io::stdout().lock())),
    })
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn push_c(row: &mut Vec<String>, c: Complex64) {
    row.push(num(c.re));
    row.push(num(c.im));
}

const CYL_NAMES: [&str; 14] = [
    "dr", "drp", "dz", "dzp", "drr", "drprp", "drrp", "drz", "drpz", "dzz", "drzp", "drpzp", "dzzp",
    "dzpzp",
];

fn column_names(level: u8) -> Vec<String> {
    let n = match level {
        0 => 0,
        1 => 4,
        _ => 14,
    };
    let mut h = vec!["m".to_string(), "re_g".into(), "im_g".into()];
    for name in &CYL_NAMES[..n] {
        h.push(format!("re_{name}"));
        h.push(format!("im_{name}"));
    }
    h
}

fn geometry_comment(pair: SourceTargetPair, k: f64, m_max: usize) -> Res<String> {
    let g = compute_params(pair, k)?;
    let reg = modal_green::geometry::classify_regime(&g, m_max);
    Ok(format!(
        "# r={} z={} rp={} zp={} k={} alpha={} kappa={} R0={} regime={:?} m_star={}",
        num(pair.r),
        num(pair.z),
        num(pair.rp),
        num(pair.zp),
        num(k),
        num(g.alpha),
        num(g.kappa),
        num(g.r0),
        reg.tag,
        num(reg.m_star)
    ))
}

fn cmd_eval(a: EvalArgs) -> Res<()> {
    let (pair, k) = resolve(&a.geom)?;
    let e = evaluate_all(pair, k, a.mmax, want(a.derivs))?;
    let mut w = sink(&a.out)?;
    writeln!(w, "{}", geometry_comment(pair, k, a.mmax)?)?;
    writeln!(w, "{}", column_names(a.derivs).join(","))?;
    let cols = e.cyl.columns();
    let n = column_names(a.derivs).len() / 2 - 1;
    for m in 0..=a.mmax {
        let mut row = vec![m.to_string()];
        push_c(&mut row, e.bundle.g[m]);
        for (_, v) in &cols[..n] {
            push_c(&mut row, v[m]);
        }
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_oracle(a: OracleArgs) -> Res<()> {
    let (pair, k) = resolve(&a.geom)?;
    let o = oracle_modes(pair, k, &a.modes, a.tol)?;
    let qs: Vec<Quantity> = std::iter::once(Quantity::G)
        .chain(Quantity::FIRST.into_iter().filter(|_| a.derivs >= 1))
        .chain(Quantity::SECOND.into_iter().filter(|_| a.derivs >= 2))
        .collect();
    let mut w = sink(&a.out)?;
    writeln!(w, "{}", geometry_comment(pair, k, a.modes.iter().copied().max().unwrap_or(0))?)?;
    writeln!(w, "# converged={}", o.converged)?;
    writeln!(w, "{}", column_names(a.derivs).join(","))?;
    for (i, m) in o.modes.iter().enumerate() {
        let mut row = vec![m.to_string()];
        for q in &qs {
            push_c(&mut row, o.get_c64(i, *q));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    if !o.converged {
        eprintln!("mgf: warning: oracle did not reach the requested tolerance");
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Res<()> {
    let (pair, k) = resolve(&a.geom)?;
    let modes = match a.stride {
        Some(0) => return Err(Failure::Config("--stride must be positive".into())),
        Some(s) => {
            let mut v: Vec<usize> = (0..=a.mmax).step_by(s).collect();
            if v.last() != Some(&a.mmax) {
                v.push(a.mmax);
            }
            v
        }
        None => sample_modes(a.mmax, a.samples),
    };
    let rep = sweep(pair, k, a.mmax, &modes, want(a.derivs), a.tol)?;
    let mut w = sink(&a.out)?;
    writeln!(w, "{}", geometry_comment(pair, k, a.mmax)?)?;
    writeln!(w, "m,abs_g,relerr_g,relerr_first,relerr_second")?;
    for r in &rep.rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.m,
            num(r.abs_g),
            num(r.err_g),
            num(r.err_first),
            num(r.err_second)
        )?;
    }
    w.flush()?;
    if rep.oracle.converged {
        Ok(())
    } else {
        Err(Failure::Oracle("oracle did not reach the requested tolerance".into()))
    }
}

fn record_json(r: &BenchRecord) -> serde_json::Value {
    json!({
        "r": r.pair.r, "z": r.pair.z, "rp": r.pair.rp, "zp": r.pair.zp,
        "k": r.k, "M": r.m_max, "alpha": r.alpha, "kappa": r.kappa,
        "regime": format!("{:?}", r.regime),
        "repeats": r.repeats, "inner": r.inner,
        "T0": r.t0, "T1": r.t1, "T2": r.t2,
    })
}

fn cmd_bench(a: BenchArgs) -> Res<()> {
    if a.threads != 1 {
        return Err(Failure::Config("bench timings are single-threaded; use --threads 1".into()));
    }
    let separated = SourceTargetPair::new(2.35, 3.16, 3.68, 2.82);
    let points: Vec<(SourceTargetPair, f64, usize)> = match a.scan {
        None => {
            let (pair, k) = resolve(&a.geom)?;
            vec![(pair, k, a.mmax)]
        }
        Some(Scan::M) => [500, 1000, 2000, 4000].iter().map(|&m| (separated, 2500.0, m)).collect(),
        Some(Scan::K) => [10.0, 100.0, 1000.0, 5000.0].iter().map(|&k| (separated, k, 1000)).collect(),
        Some(Scan::Alpha) => [0.902, 1.0 - 1e-5, 1.0 - 1e-14]
            .iter()
            .map(|&al| (SourceTargetPair::from_alpha(al, 1.0), 2500.0, 1000))
            .collect(),
    };
    let mut w = sink(&a.out)?;
    let mut recs = vec![];
    for (pair, k, m) in points {
        let r = bench_point(pair, k, m, a.repeats, a.inner)?;
        writeln!(w, "{}", record_json(&r))?;
        w.flush()?;
        recs.push(r);
    }
    if let Some(scan) = a.scan {
        let summary = match scan {
            Scan::M => json!({"scan": "M", "T2_ratio_4000_500": recs[3].t2 / recs[0].t2}),
            Scan::K => json!({"scan": "k", "T0_spread": spread(&recs.iter().map(|r| r.t0).collect::<Vec<_>>())}),
            Scan::Alpha => json!({"scan": "alpha", "T0_spread": spread(&recs.iter().map(|r| r.t0).collect::<Vec<_>>())}),
        };
        writeln!(w, "{summary}")?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_bie(a: BieArgs) -> Res<()> {
    let curve = match a.geometry {
        Shape::Torus => Curve::torus(),
        Shape::Circle => Curve::circle(),
        Shape::File => {
            let path = a
                .curve_file
                .as_ref()
                .ok_or_else(|| Failure::Config("--geometry file needs --curve-file".into()))?;
            Curve::parse(&std::fs::read_to_string(path)?)?
        }
    };
    let cfg = DemoConfig {
        curve,
        k: a.k,
        modes: a.modes,
        ppw: a.ppw,
        sources: a.sources,
        seed: a.seed,
    };
    let t = std::time::Instant::now();
    let rep = run_demo(&cfg)?;
    let v = &rep.verification;
    let mut w = sink(&a.out)?;
    writeln!(
        w,
        "# nodes={} k={} modes={} evaluator_calls={} field_error={} band_limited_error={} truncation_error={} seconds={:.3}",
        rep.nodes,
        num(a.k),
        a.modes,
        rep.counters.evaluator_calls,
        num(v.field_error),
        num(v.band_limited_error),
        num(v.truncation_error),
        t.elapsed().as_secs_f64()
    )?;
    writeln!(w, "mode,rhs_norm,residual,field_error")?;
    for m in &v.modes {
        writeln!(w, "{},{},{},{}", m.mode, num(m.rhs_norm), num(m.residual), num(m.field_error))?;
    }
    w.flush()?;
    eprintln!("field error {:.3e} with {} nodes", v.field_error, rep.nodes);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.cmd {
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Oracle(a) => cmd_oracle(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::BieDemo(a) => cmd_bie(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e @ Error::Domain(_))) => {
            eprintln!("mgf: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e @ Error::Config(_))) => {
            eprintln!("mgf: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("mgf: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Config(s)) => {
            eprintln!("mgf: configuration error: {s}");
            ExitCode::from(3)
        }
        Err(Failure::Oracle(s)) => {
            eprintln!("mgf: {s}");
            ExitCode::from(4)
        }
    }
}
