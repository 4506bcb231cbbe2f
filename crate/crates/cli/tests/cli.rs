use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lienard::construction::{build, ExtensionPlan};
use lienard::LienardSystem;
use lienard_cli::{cycle_report, CycleReport, Settings};
use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn lienard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lienard"))
        .args(args)
        .env_remove("LIENARD_RTOL")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_single_error_line(out: &Output, code: &str) {
    assert!(!out.status.success());
    let err = stderr(out);
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines.len(), 1, "{err}");
    assert!(lines[0].starts_with(&format!("error[{code}]: ")), "{err}");
}

fn load<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> T {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn cycle_y0(report: &Path) -> Vec<f64> {
    let r: CycleReport = load(report);
    r.search.cycles.iter().map(|c| c.y0).collect()
}

#[test]
fn construct_example1_matches_fixture() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("s.json");
    let run = lienard(&[
        "construct",
        "--plan",
        p(&fixture("example1.plan.json")),
        "--out",
        p(&out),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    assert!(String::from_utf8_lossy(&run.stdout).contains("joint x = 0.2"));
    let got: LienardSystem = load(&out);
    let want: LienardSystem = load(&fixture("example1.system.json"));
    assert_eq!(got.curve.segments.len(), want.curve.segments.len());
    assert_eq!(got.g, want.g);
    for i in 0..=400 {
        let x = i as f64 / 200.0;
        assert!((got.curve.eval(x) - want.curve.eval(x)).abs() < 1e-12, "x = {x}");
    }
}

#[test]
fn construct_example3_has_three_zeros() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("s.json");
    let run = lienard(&[
        "construct",
        "--plan",
        p(&fixture("example3.plan.json")),
        "--out",
        p(&out),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let sys: LienardSystem = load(&out);
    assert_eq!(sys.curve.positive_zeros().unwrap().len(), 3);
}

#[test]
fn reversed_plan_is_rejected() {
    let dir = TempDir::new().unwrap();
    let mut plan: Value = load(&fixture("example1.plan.json"));
    plan["steps"][0]["a_next"] = Value::from(0.1);
    let path = dir.path().join("plan.json");
    std::fs::write(&path, plan.to_string()).unwrap();
    let out = dir.path().join("s.json");
    let run = lienard(&["construct", "--plan", p(&path), "--out", p(&out)]);
    assert_single_error_line(&run, "InvalidOrdering");
    assert!(stderr(&run).contains("step 1"), "{}", stderr(&run));
    assert!(!out.exists());
}

#[test]
fn find_cycles_reports_positions() {
    let dir = TempDir::new().unwrap();
    for (n, want) in [(1, [0.26731065, 0.5749823]), (2, [0.29039755, 0.567249])] {
        let report = dir.path().join(format!("r{n}.json"));
        let sys = fixture(&format!("example{n}.system.json"));
        let run = lienard(&["find-cycles", "--system", p(&sys), "--report", p(&report)]);
        assert!(run.status.success(), "{}", stderr(&run));
        let got = cycle_y0(&report);
        assert_eq!(got.len(), 2);
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-4, "example {n}: {g} vs {w}");
        }
        let r: CycleReport = load(&report);
        assert_eq!(r.alpha_bars.len(), 1);
    }
}

#[test]
fn conservative_system_reports_continuum() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("r.json");
    let sys = fixture("conservative.system.json");
    let run = lienard(&[
        "find-cycles",
        "--system",
        p(&sys),
        "--report",
        p(&report),
        "--ymax",
        "2",
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let r: Value = load(&report);
    assert_eq!(r["cycles"], Value::Array(vec![]));
    assert_eq!(r["diagnostics"], serde_json::json!(["DegenerateContinuum"]));
}

#[test]
fn coarse_grid_fails_with_code() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("r.json");
    let sys = fixture("example3.system.json");
    // One cell cannot separate three cycles, and halving is not enough to recover.
    let run = lienard(&[
        "find-cycles",
        "--system",
        p(&sys),
        "--report",
        p(&report),
        "--grid",
        "1",
    ]);
    assert_single_error_line(&run, "ScanTooCoarse");
}

#[test]
fn check_exit_codes() {
    let dir = TempDir::new().unwrap();
    for (n, alphas) in [(1, 1), (3, 2)] {
        let report = dir.path().join(format!("c{n}.json"));
        let sys = fixture(&format!("example{n}.system.json"));
        let run = lienard(&["check", "--system", p(&sys), "--report", p(&report)]);
        assert!(run.status.success(), "example {n}: {}", stderr(&run));
        let r: Value = load(&report);
        assert_eq!(r["alpha_bars"].as_array().unwrap().len(), alphas);
    }

    let mut sys: Value = load(&fixture("example1.system.json"));
    let segments = sys["segments"].as_array_mut().unwrap();
    segments.last_mut().unwrap()["slope"] = Value::from(0.0);
    let path = dir.path().join("flat.json");
    std::fs::write(&path, sys.to_string()).unwrap();
    let run = lienard(&[
        "check",
        "--system",
        p(&path),
        "--report",
        p(&dir.path().join("flat.report.json")),
    ]);
    assert_single_error_line(&run, "CheckFailed");
    assert!(stderr(&run).contains("iv"));
}

fn read_csv(path: &Path) -> Vec<[f64; 3]> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x,y"));
    lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect()
}

#[test]
fn simulate_one_turn_on_a_cycle() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("t.csv");
    let sys = fixture("example1.system.json");
    let run = lienard(&[
        "simulate",
        "--system",
        p(&sys),
        "--y0",
        "0.26731065",
        "--turns",
        "1",
        "--csv",
        p(&csv),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let rows = read_csv(&csv);
    let last = rows.last().unwrap();
    assert!(last[1].abs() < 1e-9);
    assert!((last[2] - 0.26731065).abs() < 1e-6, "{last:?}");
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
}

#[test]
fn simulate_conservative_circle() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("t.csv");
    let sys = fixture("conservative.system.json");
    let run = lienard(&[
        "simulate",
        "--system",
        p(&sys),
        "--y0",
        "0.5",
        "--turns",
        "1",
        "--csv",
        p(&csv),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let rows = read_csv(&csv);
    for r in &rows {
        assert!((r[1].hypot(r[2]) - 0.5).abs() < 1e-8, "{r:?}");
    }
    let last = rows.last().unwrap();
    assert!(last[1].abs() < 1e-9 && (last[2] - 0.5).abs() < 1e-8, "{last:?}");
    assert!((last[0] - 2.0 * std::f64::consts::PI).abs() < 1e-6);
}

#[test]
fn simulate_crossings_grow_near_origin() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("t.csv");
    let sys = fixture("example1.system.json");
    let run = lienard(&[
        "simulate",
        "--system",
        p(&sys),
        "--y0",
        "0.05",
        "--turns",
        "3",
        "--csv",
        p(&csv),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let crossings: Vec<f64> = read_csv(&csv)
        .iter()
        .filter(|r| r[1].abs() < 1e-12 && r[2] > 0.0)
        .map(|r| r[2])
        .collect();
    assert_eq!(crossings.len(), 4, "{crossings:?}");
    assert!(crossings.windows(2).all(|w| w[1] > w[0]), "{crossings:?}");
}

#[test]
fn simulate_rejects_nonpositive_start() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("t.csv");
    let run = lienard(&[
        "simulate",
        "--system",
        p(&fixture("example1.system.json")),
        "--y0",
        "0",
        "--csv",
        p(&csv),
    ]);
    assert_single_error_line(&run, "InvalidArgument");
}

fn count(svg: &str, needle: &str) -> usize {
    svg.matches(needle).count()
}

#[test]
fn plot_draws_each_cycle() {
    let dir = TempDir::new().unwrap();
    for (n, cycles) in [(1, 2), (3, 3)] {
        let svg = dir.path().join(format!("p{n}.svg"));
        let run = lienard(&[
            "plot",
            "--system",
            p(&fixture(&format!("example{n}.system.json"))),
            "--svg",
            p(&svg),
        ]);
        assert!(run.status.success(), "{}", stderr(&run));
        let text = std::fs::read_to_string(&svg).unwrap();
        assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
        assert_eq!(count(&text, r#"class="cycle""#), cycles);
        assert_eq!(count(&text, " Z\""), cycles);
        assert_eq!(count(&text, r#"class="f-curve""#), 1);
        assert_eq!(count(&text, r#"class="axis""#), 2);
        assert!(text.contains(r#"class="legend""#));
    }
}

#[test]
fn plot_uses_a_saved_report() {
    let dir = TempDir::new().unwrap();
    let sys = fixture("example1.system.json");
    let report = dir.path().join("r.json");
    assert!(lienard(&["find-cycles", "--system", p(&sys), "--report", p(&report)])
        .status
        .success());
    let svg = dir.path().join("p.svg");
    let run = lienard(&["plot", "--system", p(&sys), "--report", p(&report), "--svg", p(&svg)]);
    assert!(run.status.success(), "{}", stderr(&run));
    assert_eq!(count(&std::fs::read_to_string(&svg).unwrap(), r#"class="cycle""#), 2);
}

#[test]
fn plot_without_cycles_has_only_the_curve() {
    let dir = TempDir::new().unwrap();
    let svg = dir.path().join("p.svg");
    let run = lienard(&[
        "plot",
        "--system",
        p(&fixture("conservative.system.json")),
        "--svg",
        p(&svg),
        "--ymax",
        "2",
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(count(&text, r#"class="cycle""#), 0);
    assert_eq!(count(&text, r#"class="f-curve""#), 1);
}

#[test]
fn odani_report_for_example2() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("o.json");
    let run = lienard(&[
        "odani",
        "--plan",
        p(&fixture("example2.plan.json")),
        "--report",
        p(&report),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let r: Value = load(&report);
    let step = &r["steps"][0];
    assert_eq!(step["left"]["verdict"], "Piecewise");
    let loci: Vec<f64> = step["left"]["equality_loci"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!(loci.iter().any(|s| (s - 0.0529).abs() < 1e-3), "{loci:?}");
}

#[test]
fn round_trip_matches_in_process() {
    let dir = TempDir::new().unwrap();
    for n in 1..=3 {
        let plan = fixture(&format!("example{n}.plan.json"));
        let sys = dir.path().join("s.json");
        let report = dir.path().join("r.json");
        assert!(lienard(&["construct", "--plan", p(&plan), "--out", p(&sys)])
            .status
            .success());
        let run = lienard(&["find-cycles", "--system", p(&sys), "--report", p(&report)]);
        assert!(run.status.success(), "{}", stderr(&run));

        let plan: ExtensionPlan = load(&plan);
        let system = build(&plan).unwrap().system;
        let in_process = cycle_report(&system, &Settings::default()).unwrap();
        let expected = serde_json::to_string_pretty(&in_process).unwrap() + "\n";
        assert_eq!(std::fs::read_to_string(&report).unwrap(), expected, "example {n}");
    }
}

#[test]
fn rtol_env_var_is_honoured() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("r.json");
    let run = Command::new(env!("CARGO_BIN_EXE_lienard"))
        .args([
            "find-cycles",
            "--system",
            p(&fixture("example1.system.json")),
            "--report",
            p(&report),
        ])
        .env("LIENARD_RTOL", "-1")
        .output()
        .unwrap();
    assert_single_error_line(&run, "InvalidArgument");
    assert!(stderr(&run).contains("rtol"));

    let run = Command::new(env!("CARGO_BIN_EXE_lienard"))
        .args([
            "find-cycles",
            "--system",
            p(&fixture("example1.system.json")),
            "--report",
            p(&report),
        ])
        .env("LIENARD_RTOL", "1e-8")
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", stderr(&run));
    assert_eq!(cycle_y0(&report).len(), 2);
}

#[test]
fn error_paths_print_one_coded_line() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("r.json");
    assert_single_error_line(
        &lienard(&["find-cycles", "--system", "/does/not/exist", "--report", p(&report)]),
        "Io",
    );
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_single_error_line(
        &lienard(&["find-cycles", "--system", p(&bad), "--report", p(&report)]),
        "Parse",
    );
    assert_single_error_line(&lienard(&["find-cycles", "--system", p(&bad)]), "Usage");
    assert_single_error_line(&lienard(&["bogus"]), "Usage");
    let sys = fixture("example1.system.json");
    assert_single_error_line(
        &lienard(&[
            "find-cycles",
            "--system",
            p(&sys),
            "--report",
            p(&report),
            "--method",
            "euler",
        ]),
        "InvalidArgument",
    );
}
