use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gpsp_bench::record::{read_rows, ResultRow, Solver, HEADER, SUMMARY_HEADER};
use tempfile::TempDir;

fn gpsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpsp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = gpsp(args);
    assert!(o.status.success(), "{args:?} failed: {}", stderr(&o));
    stdout(&o)
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

const MANIFEST_FLAGS: [&str; 12] = [
    "--example",
    "ind",
    "--n",
    "500",
    "--m",
    "250",
    "--s",
    "5",
    "--r",
    "0.05",
    "--seed",
    "1",
];

const GOLDEN_MANIFEST: &str = r#"{
  "example": "independent",
  "spec": {
    "n": 500,
    "m": 250,
    "s_star": 5,
    "r": 0.05,
    "v": null,
    "noise_sigma": 0.1,
    "seed": 1
  }
}
"#;

fn write_manifest(dir: &TempDir) -> PathBuf {
    let path = dir.path().join("m.json");
    let mut args = vec!["generate"];
    args.extend(MANIFEST_FLAGS);
    args.extend(["-o", path_str(&path)]);
    ok(&args);
    path
}

fn parse_rows(text: &str) -> Vec<ResultRow> {
    read_rows(text.as_bytes()).unwrap()
}

#[test]
fn generate_echoes_flags_deterministically() {
    let mut args = vec!["generate"];
    args.extend(MANIFEST_FLAGS);
    let first = ok(&args);
    assert_eq!(first, GOLDEN_MANIFEST);
    assert_eq!(ok(&args), first);
}

#[test]
fn generate_correlated_needs_v() {
    let o = gpsp(&["generate", "--example", "cor", "--n", "10", "--m", "5", "--s", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--v"));
    let text = ok(&[
        "generate",
        "--example",
        "cor",
        "--n",
        "10",
        "--m",
        "5",
        "--s",
        "2",
        "--v",
        "0.5",
    ]);
    assert!(text.contains("\"correlated\"") && text.contains("\"v\": 0.5"));
}

#[test]
fn bad_flip_ratio_is_a_usage_error_naming_the_flag() {
    let o = gpsp(&["generate", "--n", "10", "--m", "5", "--s", "2", "--r", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--r"), "{}", stderr(&o));
}

#[test]
fn sparsity_above_n_is_a_usage_error() {
    let o = gpsp(&["generate", "--n", "10", "--m", "5", "--s", "11"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("s_star"));
}

#[test]
fn solve_rows_match_first_build() {
    let dir = TempDir::new().unwrap();
    let m = write_manifest(&dir);
    let text = ok(&["solve", "--manifest", path_str(&m), "--solver", "gpsp,biht", "--header"]);
    assert_eq!(text.lines().next(), Some(HEADER));
    let rows = parse_rows(&text);
    assert_eq!(rows.len(), 2);

    let g = &rows[0];
    assert_eq!(
        (g.seed, g.n, g.m, g.s_star, g.k, g.solver),
        (1, 500, 250, 5, 3, Solver::Gpsp)
    );
    assert_eq!((g.eta, g.epsilon), (1e-4, 0.01));
    assert_eq!(g.iterations, 10);
    assert!(g.iterations <= 2000);
    assert!((g.snr_db.unwrap() - 18.0131689199233).abs() < 1e-9);
    assert_eq!((g.hd, g.he), (Some(0.096), Some(0.028)));
    assert!(text.lines().nth(1).unwrap().ends_with(",tolerance_met"));

    let b = &rows[1];
    assert_eq!(b.solver, Solver::Biht);
    assert_eq!(b.iterations, 200);
    assert!((b.snr_db.unwrap() - 4.879959963326577).abs() < 1e-9);
    assert!(b.snr_db < g.snr_db);
}

#[test]
fn solve_is_deterministic_apart_from_timing() {
    let dir = TempDir::new().unwrap();
    let m = write_manifest(&dir);
    let strip = |mut rows: Vec<ResultRow>| {
        rows.iter_mut().for_each(|r| r.time_ms = 0.0);
        rows
    };
    let args = ["solve", "--manifest", path_str(&m), "--solver", "gpsp,biht"];
    assert_eq!(
        strip(parse_rows(&format!("{HEADER}\n{}", ok(&args)))),
        strip(parse_rows(&format!("{HEADER}\n{}", ok(&args))))
    );
}

#[test]
fn solve_rejects_unknown_solver() {
    let dir = TempDir::new().unwrap();
    let m = write_manifest(&dir);
    let o = gpsp(&["solve", "--manifest", path_str(&m), "--solver", "cosamp"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_manifest_is_a_runtime_error() {
    let o = gpsp(&["solve", "--manifest", "/nonexistent/m.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn zero_signal_row_has_empty_metrics() {
    let dir = TempDir::new().unwrap();
    let m = write_manifest(&dir);
    let text = ok(&[
        "solve",
        "--manifest",
        path_str(&m),
        "--solver",
        "biht",
        "--biht-step",
        "0",
    ]);
    let line = text.trim_end();
    let fields: Vec<&str> = line.split(',').collect();
    assert_eq!(fields.len(), 16);
    assert_eq!(&fields[10..13], ["", "", ""]);
    assert_eq!(fields[15], "zero_signal");
}

#[test]
fn certify_reads_dumped_iterate() {
    let dir = TempDir::new().unwrap();
    let m = write_manifest(&dir);
    let it = dir.path().join("it.json");
    ok(&["solve", "--manifest", path_str(&m), "--dump-iterate", path_str(&it)]);
    let report: serde_json::Value = serde_json::from_str(&ok(&[
        "certify",
        "--manifest",
        path_str(&m),
        "--iterate",
        path_str(&it),
    ]))
    .unwrap();
    assert_eq!(report["kkt_ok"], true);
    assert_eq!(report["is_tau_stationary"], true);
    assert!(report["tau_star"].as_f64().unwrap() > 0.0);
    assert!(report["max_violation"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn certify_rejects_iterate_of_wrong_size() {
    let dir = TempDir::new().unwrap();
    let m = write_manifest(&dir);
    let it = dir.path().join("it.json");
    fs::write(
        &it,
        r#"{"params":{"epsilon":0.01,"eta":0.0001,"s":5,"k":3},"x":[0.0],"y":[0.0]}"#,
    )
    .unwrap();
    let o = gpsp(&["certify", "--manifest", path_str(&m), "--iterate", path_str(&it)]);
    assert_eq!(o.status.code(), Some(2));
}

fn sweep(dir: &Path, name: &str, extra: &[&str]) -> (PathBuf, Vec<ResultRow>) {
    let out = dir.join(name);
    let mut args = vec![
        "sweep",
        "--n",
        "120",
        "--m",
        "60,90",
        "--s",
        "3",
        "--epsilon",
        "0.01,1",
        "--trials",
        "3",
        "--seed",
        "9",
        "-o",
        path_str(&out),
    ];
    args.extend(extra);
    ok(&args);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some(HEADER));
    (out, parse_rows(&text))
}

fn metric_columns(rows: &[ResultRow]) -> Vec<ResultRow> {
    rows.iter()
        .cloned()
        .map(|mut r| {
            r.time_ms = 0.0;
            r
        })
        .collect()
}

#[test]
fn sweep_is_reproducible_and_independent_of_worker_count() {
    let dir = TempDir::new().unwrap();
    let (_, serial) = sweep(dir.path(), "a.csv", &["--workers", "1"]);
    let (_, parallel) = sweep(dir.path(), "b.csv", &["--workers", "4"]);
    let (_, again) = sweep(dir.path(), "c.csv", &["--workers", "4"]);
    assert_eq!(serial.len(), 2 * 2 * 3 * 2);
    assert_eq!(metric_columns(&serial), metric_columns(&parallel));
    assert_eq!(metric_columns(&parallel), metric_columns(&again));
}

#[test]
fn sweep_shares_instances_across_model_settings() {
    let dir = TempDir::new().unwrap();
    let (_, rows) = sweep(dir.path(), "s.csv", &[]);
    // Per (m, trial): epsilon 0.01 and 1 for gpsp and biht, same seed.
    for block in rows.chunks(4) {
        assert!(block.iter().all(|r| r.seed == block[0].seed && r.m == block[0].m));
        assert_eq!([block[0].epsilon, block[2].epsilon], [0.01, 1.0]);
    }
    assert_ne!(rows[0].seed, rows[4].seed);
}

#[test]
fn sweep_writes_summary_and_charts() {
    let dir = TempDir::new().unwrap();
    let (out, rows) = sweep(dir.path(), "run.csv", &["--svg"]);
    let summary = fs::read_to_string(dir.path().join("run.summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some(SUMMARY_HEADER));
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), 2 * 2 * 2);
    assert!(body.iter().all(|l| l.contains(",3,0,")), "{summary}");
    let g: Vec<f64> = rows
        .iter()
        .filter(|r| r.solver == Solver::Gpsp && r.m == 60 && r.epsilon == 0.01)
        .map(|r| r.snr_db.unwrap())
        .collect();
    let expected = g.iter().sum::<f64>() / 3.0;
    let first: Vec<&str> = body[0].split(',').collect();
    assert!((first[11].parse::<f64>().unwrap() - expected).abs() < 1e-9);
    for var in ["m", "epsilon"] {
        let svg = fs::read_to_string(out.with_file_name(format!("run.{var}.svg"))).unwrap();
        assert!(svg.starts_with("<svg"));
    }
    assert!(!out.with_file_name("run.n.svg").exists());
}

#[test]
fn sweep_usage_errors() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x.csv");
    let o = path_str(&out);
    for args in [
        vec!["sweep", "--eta=", "-o", o],
        vec!["sweep", "--trials", "0", "-o", o],
        vec!["sweep", "--example", "cor", "-o", o],
        vec!["sweep", "--r", "0.05,2", "-o", o],
        vec!["sweep", "--solvers", "gpsp,nope", "-o", o],
        vec!["sweep", "--k", "1000", "--trials", "1", "-o", o],
    ] {
        let res = gpsp(&args);
        assert_eq!(res.status.code(), Some(2), "{args:?}: {}", stderr(&res));
    }
    assert!(!out.exists());
}

#[test]
fn gpsp_beats_biht_on_flipped_signs() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("cmp.csv");
    ok(&[
        "sweep",
        "--n",
        "500",
        "--m",
        "250",
        "--s",
        "5",
        "--r",
        "0.05",
        "--trials",
        "20",
        "--seed",
        "3",
        "-o",
        path_str(&out),
    ]);
    let rows = parse_rows(&fs::read_to_string(&out).unwrap());
    let mean = |s: Solver| {
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| r.solver == s)
            .map(|r| r.snr_db.unwrap())
            .collect();
        assert_eq!(v.len(), 20);
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (g, b) = (mean(Solver::Gpsp), mean(Solver::Biht));
    assert!(g > b + 3.0, "gpsp {g:.2} dB vs biht {b:.2} dB");
}
