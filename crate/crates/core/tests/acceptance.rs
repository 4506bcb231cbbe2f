//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use lienard::construction::{build, build_phi, odani_check, ExtensionPlan, Relation};
use lienard::cycles::{check_theorem, find_cycles, ScanConfig, Stability, TheoremReport};
use lienard::dynamics::half_return;
use lienard::{IntegratorConfig, LienardSystem};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn read(name: &str) -> String {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn system(n: u32) -> LienardSystem {
    serde_json::from_str(&read(&format!("example{n}.system.json"))).unwrap()
}

fn plan(n: u32) -> ExtensionPlan {
    serde_json::from_str(&read(&format!("example{n}.plan.json"))).unwrap()
}

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

fn theorem(n: u32) -> TheoremReport {
    check_theorem(&system(n), None, &cfg(), &ScanConfig::default())
}

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn close(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() < tol
}

fn cycle_positions(n: u32, want: &[f64]) -> Outcome {
    let found = find_cycles(&system(n), None, &cfg(), &ScanConfig::default()).map_err(|e| e.to_string())?;
    let got: Vec<f64> = found.cycles.iter().map(|c| c.y0).collect();
    let ok = got.len() == want.len() && got.iter().zip(want).all(|(g, w)| close(*g, *w, 1e-4));
    ensure(ok, format!("y0 = {got:?}, expected {want:?} ± 1e-4"))
}

fn c1() -> Outcome {
    cycle_positions(1, &[0.26731065, 0.5749823])
}

fn c2() -> Outcome {
    let r = theorem(1);
    let a = r.alpha_bars.first().ok_or("no ᾱ₁")?.value;
    let l1 = r.extrema.get(1).ok_or("no L₁")?.0;
    ensure(
        close(a, 0.254219124, 1e-4) && a < l1 && l1 == 0.3,
        format!("ᾱ₁ = {a}, L₁ = {l1}"),
    )
}

fn c3() -> Outcome {
    let cycles = cycle_positions(2, &[0.29039755, 0.567249])?;
    let r = theorem(2);
    let a = r.alpha_bars.first().ok_or("no ᾱ₁")?.value;
    ensure(close(a, 0.2892792083, 1e-4), format!("{cycles}; ᾱ₁ = {a}"))
}

fn c4() -> Outcome {
    let built = build(&plan(2)).map_err(|e| e.to_string())?;
    let cmp = odani_check(&built).steps.remove(0).left;
    let interior: Vec<f64> = cmp
        .equality_loci
        .iter()
        .copied()
        .filter(|&s| s > 0.0 && s < cmp.s_hi)
        .collect();
    let rels: Vec<Relation> = cmp.pieces.iter().map(|p| p.2).collect();
    let ok = interior.len() == 1 && close(interior[0], 0.05290111, 1e-4) && rels == [Relation::Less, Relation::Greater];
    ensure(ok, format!("loci = {:?}, pattern = {rels:?}", cmp.equality_loci))
}

fn c5() -> Outcome {
    let r = theorem(3);
    let alphas: Vec<f64> = r.alpha_bars.iter().map(|a| a.value).collect();
    let below = r.alpha_bars.iter().all(|a| a.value < r.extrema[a.interval_index].0);
    let ok = r.cycles_found.len() == 3
        && alphas.len() == 2
        && close(alphas[0], 0.12418214965, 1e-4)
        && close(alphas[1], 0.2354818163, 1e-4)
        && below
        && r.passes();
    ensure(
        ok,
        format!(
            "{} cycles, ᾱ = {alphas:?}, ᾱᵢ < Lᵢ: {below}, theorem check: {}",
            r.cycles_found.len(),
            r.passes()
        ),
    )
}

fn c6() -> Outcome {
    let p = build_phi(0.0, 0.1, 0.2, 0.3).map_err(|e| e.to_string())?;
    let q = build_phi(0.1, 0.2, 0.3, 0.5).map_err(|e| e.to_string())?;
    let ok = close(p.a, 5.0, 1e-12)
        && close(p.b, 0.04, 1e-12)
        && close(q.a, 16.0 / 3.0, 1e-12)
        && close(q.b, 11.0 / 300.0, 1e-12);
    ensure(ok, format!("(A, B) = ({}, {}) and ({}, {})", p.a, p.b, q.a, q.b))
}

fn c7() -> Outcome {
    let sys = LienardSystem::conservative();
    let mut worst: f64 = 0.0;
    for y0 in [0.1, 0.5, 1.0, 2.0] {
        let p = half_return(&sys, y0, &cfg()).map_err(|e| e.to_string())?;
        worst = worst.max((p - y0).abs());
    }
    ensure(worst < 1e-8, format!("max |P − y0| = {worst:e}"))
}

fn c8() -> Outcome {
    let mut notes = Vec::new();
    for n in 1..=3 {
        let sys = system(n);
        let cycles = find_cycles(&sys, None, &cfg(), &ScanConfig::default())
            .map_err(|e| e.to_string())?
            .cycles;
        let outer = cycles.last().ok_or("no cycles")?.y0;
        let (lo, hi) = (0.01, 1.004 * outer);
        let mut ps = Vec::new();
        for i in 0..50 {
            let y = lo + (hi - lo) * i as f64 / 49.0;
            ps.push(half_return(&sys, y, &cfg()).map_err(|e| format!("example {n}, y0 = {y}: {e}"))?);
        }
        if !ps.windows(2).all(|w| w[1] > w[0]) {
            return Err(format!("example {n}: P not increasing on [{lo}, {hi}]"));
        }
        notes.push(format!("ex{n} on [{lo}, {hi:.4}]"));
    }
    Ok(notes.join(", "))
}

fn c9() -> Outcome {
    let mut notes = Vec::new();
    for n in 1..=3 {
        let r = theorem(n);
        if !r.localization.holds {
            return Err(format!("example {n}: {:?}", r.localization.diagnostics));
        }
        let crossings: Vec<String> = r.cycles_found.iter().map(|c| format!("{:.6}", c.alpha_cross)).collect();
        notes.push(format!("ex{n} crossings [{}]", crossings.join(", ")));
    }
    Ok(notes.join("; "))
}

fn c10() -> Outcome {
    let mut notes = Vec::new();
    for n in 1..=3 {
        let cycles = find_cycles(&system(n), None, &cfg(), &ScanConfig::default())
            .map_err(|e| e.to_string())?
            .cycles;
        let flags: Vec<Stability> = cycles.iter().map(|c| c.stability).collect();
        let ok = flags.first() == Some(&Stability::Stable)
            && !flags.contains(&Stability::Neutral)
            && flags.windows(2).all(|w| w[0] != w[1]);
        if !ok {
            return Err(format!("example {n}: {flags:?}"));
        }
        notes.push(format!("ex{n} {flags:?}"));
    }
    Ok(notes.join("; "))
}

/// Changes at or below this are indistinguishable from rounding in `P`.
const ROUNDOFF_FLOOR: f64 = 1e-13;

fn c11() -> Outcome {
    let sys = system(1);
    let mut tols: Vec<f64> = (0..).map(|k| 1e-6 / 2f64.powi(k)).take_while(|&t| t > 1e-10).collect();
    tols.push(1e-10);
    let mut ps = Vec::new();
    for &t in &tols {
        ps.push(half_return(&sys, 0.3, &cfg().with_rel_tol(t)).map_err(|e| e.to_string())?);
    }
    let changes: Vec<f64> = ps.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let shrinking = changes.windows(2).all(|w| w[1] <= w[0] || w[1] <= ROUNDOFF_FLOOR);
    let last = *changes.last().unwrap();
    let shown: Vec<String> = changes.iter().map(|c| format!("{c:.1e}")).collect();
    ensure(
        shrinking && last < 1e-9,
        format!("changes [{}], final {last:.1e}", shown.join(", ")),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("example 1 cycle positions", c1),
        ("example 1 amplitude bound", c2),
        ("example 2 cycles and amplitude bound", c3),
        ("example 2 equality locus", c4),
        ("example 3 cycles, bounds and hypotheses", c5),
        ("φ parameter solve", c6),
        ("conservation", c7),
        ("return-map monotonicity", c8),
        ("localization", c9),
        ("stability alternation", c10),
        ("tolerance convergence", c11),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name}: {msg} ({secs:.2}s)", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
