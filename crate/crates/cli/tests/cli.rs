use std::process::{Command, Output};

fn mgf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mgf")).args(args).output().unwrap()
}

fn data_rows(out: &Output) -> Vec<Vec<String>> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

const SEPARATED: [&str; 8] = ["--r", "2.35", "--z", "3.16", "--rp", "3.68", "--zp", "2.82"];

#[test]
fn eval_row_count() {
    let mut a = vec!["eval"];
    a.extend(SEPARATED);
    a.extend(["--k", "2500", "--mmax", "10", "--derivs", "0"]);
    let out = mgf(&a);
    assert!(out.status.success());
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| r.len() == 3));
    let text = String::from_utf8_lossy(&out.stdout);
    let header = text.lines().next().unwrap();
    assert!(header.contains("regime=NonDecay") && header.contains("r=2.35"));
}

#[test]
fn eval_second_derivative_columns() {
    let mut a = vec!["eval"];
    a.extend(SEPARATED);
    a.extend(["--k", "2500", "--mmax", "4", "--derivs", "2"]);
    let rows = data_rows(&mgf(&a));
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.len() == 31));
    // 17 significant digits
    let mantissa = rows[0][1].split('e').next().unwrap();
    assert_eq!(mantissa.trim_start_matches('-').replace('.', "").len(), 17);
}

#[test]
fn eval_is_reproducible() {
    let mut a = vec!["eval"];
    a.extend(SEPARATED);
    a.extend(["--k", "100", "--mmax", "50", "--derivs", "2"]);
    assert_eq!(mgf(&a).stdout, mgf(&a).stdout);
}

#[test]
fn alpha_kappa_form_matches_synthesized_coordinates() {
    let tri = mgf(&["eval", "--alpha", "0.902", "--kappa", "438", "--r0", "1", "--k", "100", "--mmax", "20"]);
    assert!(tri.status.success());
    let r = (0.902f64 / 2.0).sqrt();
    let z = (1.0f64 - 0.902).sqrt();
    let (rs, zs) = (format!("{r:.17}"), format!("{z:.17}"));
    let raw = mgf(&["eval", "--r", &rs, "--z", &zs, "--rp", &rs, "--zp", "0", "--k", "438", "--mmax", "20"]);
    let (a, b) = (data_rows(&tri), data_rows(&raw));
    assert_eq!(a.len(), 21);
    for (x, y) in a.iter().zip(&b) {
        for (u, v) in x.iter().zip(y).skip(1) {
            let (u, v): (f64, f64) = (u.parse().unwrap(), v.parse().unwrap());
            assert!((u - v).abs() <= 1e-12 * v.abs().max(1e-300), "{u} {v}");
        }
    }
    let header = String::from_utf8_lossy(&tri.stdout);
    assert!(header.contains("alpha=9.02") && header.contains("kappa=4.38"));
}

#[test]
fn exit_codes() {
    let coincide = mgf(&["eval", "--r", "1", "--z", "0", "--rp", "1", "--zp", "0", "--k", "1", "--mmax", "3"]);
    assert_eq!(coincide.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&coincide.stderr).contains("coincide"));
    let axis = mgf(&["eval", "--r", "0", "--z", "0", "--rp", "1", "--zp", "0", "--k", "1", "--mmax", "3"]);
    assert_eq!(axis.status.code(), Some(2));
    let both = mgf(&["eval", "--r", "1", "--z", "0", "--rp", "1", "--zp", "1", "--alpha", "0.5", "--k", "1", "--mmax", "3"]);
    assert_eq!(both.status.code(), Some(3));
    assert_eq!(mgf(&["eval", "--mmax", "3"]).status.code(), Some(3));
    assert_eq!(mgf(&["eval", "--bogus"]).status.code(), Some(3));
    assert_eq!(mgf(&["bench", "--scan", "k", "--threads", "4"]).status.code(), Some(3));
}

#[test]
fn sweep_columns_and_accuracy() {
    let out = mgf(&["sweep", "--r", "1", "--z", "0.5", "--rp", "1.2", "--zp", "0", "--k", "4", "--mmax", "12", "--stride", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("m,abs_g,relerr_g,relerr_first,relerr_second"));
    let rows = data_rows(&out);
    assert_eq!(rows.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(), ["0", "5", "10", "12"]);
    for r in rows {
        for e in &r[2..] {
            assert!(e.parse::<f64>().unwrap() < 1e-12);
        }
    }
}

#[test]
fn sweep_reports_unreachable_oracle_tolerance() {
    let out = mgf(&["sweep", "--r", "1", "--z", "0.5", "--rp", "1.2", "--zp", "0", "--k", "4", "--mmax", "4", "--samples", "2", "--tol", "1e-40"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn oracle_subcommand() {
    let out = mgf(&["oracle", "--r", "1", "--z", "0.5", "--rp", "1.2", "--zp", "0", "--k", "4", "--modes", "0,3", "--derivs", "1"]);
    assert!(out.status.success());
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.len() == 11));
}

#[test]
fn bench_emits_json_lines() {
    let out = mgf(&["bench", "--r", "1", "--z", "0.5", "--rp", "1.2", "--zp", "0", "--k", "40", "--mmax", "50", "--repeats", "3", "--inner", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let v: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    for key in ["T0", "T1", "T2"] {
        assert!(v[key].as_f64().unwrap() > 0.0);
    }
    assert_eq!(v["M"], 50);
}

#[test]
fn bie_demo_report() {
    let dir = std::env::temp_dir().join(format!("mgf-bie-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("report.csv");
    let out = mgf(&["bie-demo", "--geometry", "circle", "--k", "3", "--modes", "4", "--ppw", "12", "--sources", "1", "--seed", "7", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.contains("mode,rhs_norm,residual,field_error"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 6);
    let missing = mgf(&["bie-demo", "--geometry", "file"]);
    assert_eq!(missing.status.code(), Some(3));
    std::fs::remove_dir_all(dir).ok();
}
