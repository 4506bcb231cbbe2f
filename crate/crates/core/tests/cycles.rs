use lienard::curves::Segment;
use lienard::cycles::{
    alpha_bar, check_theorem, classify_stability, delta, find_cycles, CycleError, Diagnostic, ScanConfig, Stability,
};
use lienard::dynamics::half_return;
use lienard::{IntegratorConfig, LienardSystem};
use serde_json::Value;

fn read(name: &str) -> String {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn system(n: u32) -> LienardSystem {
    serde_json::from_str(&read(&format!("example{n}.system.json"))).unwrap()
}

fn expected(n: u32) -> Value {
    serde_json::from_str(&read(&format!("example{n}.expected.json"))).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

#[test]
fn cycle_counts_match_zero_counts() {
    for n in 1..=3 {
        let sys = system(n);
        let zeros = sys.curve.positive_zeros().unwrap();
        let found = find_cycles(&sys, None, &cfg(), &ScanConfig::default()).unwrap();
        assert_eq!(found.cycles.len(), zeros.len(), "example {n}");
    }
}

#[test]
fn cycle_positions_match_expected_reports() {
    for n in [1, 2] {
        let exp = expected(n);
        let want = floats(&exp["cycles_y0"]);
        let tol = exp["y0_tol"].as_f64().unwrap();
        let found = find_cycles(&system(n), None, &cfg(), &ScanConfig::default()).unwrap();
        let got: Vec<f64> = found.cycles.iter().map(|c| c.y0).collect();
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < tol, "example {n}: {g} vs {w}");
        }
    }
}

#[test]
fn fixed_point_residuals() {
    for n in 1..=3 {
        let sys = system(n);
        for c in find_cycles(&sys, None, &cfg(), &ScanConfig::default()).unwrap().cycles {
            assert!(c.residual < 1e-8, "example {n}: {c:?}");
            assert!(c.alpha_cross > 0.0 && c.amplitude >= c.alpha_cross, "{c:?}");
            let p = half_return(&sys, c.y0, &cfg()).unwrap();
            assert!((p - c.y0).abs() < 1e-8);
        }
    }
}

#[test]
fn stability_alternates_from_stable() {
    for n in 1..=3 {
        let exp = expected(n);
        let want: Vec<String> = exp["stability"]
            .as_array()
            .unwrap()
            .iter()
            .map(|s| s.as_str().unwrap().to_string())
            .collect();
        let found = find_cycles(&system(n), None, &cfg(), &ScanConfig::default()).unwrap();
        let got: Vec<String> = found.cycles.iter().map(|c| format!("{:?}", c.stability)).collect();
        assert_eq!(got, want, "example {n}");
        for w in found.cycles.windows(2) {
            assert_ne!(w[0].stability, w[1].stability);
        }
    }
}

#[test]
fn stability_matches_sign_of_delta_around_cycles() {
    let sys = system(1);
    let found = find_cycles(&sys, None, &cfg(), &ScanConfig::default()).unwrap();
    for c in &found.cycles {
        let (below, above) = (
            delta(&sys, c.y0 - 0.01, &cfg()).unwrap(),
            delta(&sys, c.y0 + 0.01, &cfg()).unwrap(),
        );
        let expect = if below > 0.0 && above < 0.0 {
            Stability::Stable
        } else {
            Stability::Unstable
        };
        assert_eq!(c.stability, expect, "{c:?}: {below}, {above}");
        assert_eq!(classify_stability(&sys, c.y0, &cfg()).unwrap(), c.stability);
    }
    assert!(delta(&sys, 0.5, &cfg()).unwrap() < 0.0 && delta(&sys, 0.7, &cfg()).unwrap() > 0.0);
}

#[test]
fn conservative_system_is_a_continuum() {
    let sys: LienardSystem = serde_json::from_str(&read("conservative.system.json")).unwrap();
    let found = find_cycles(&sys, Some(2.0), &cfg(), &ScanConfig::default()).unwrap();
    assert!(found.cycles.is_empty());
    assert_eq!(found.diagnostics, vec![Diagnostic::DegenerateContinuum]);
    assert_eq!(classify_stability(&sys, 0.5, &cfg()).unwrap(), Stability::Neutral);
}

#[test]
fn alpha_bars_match_expected_reports() {
    for n in 1..=3 {
        let exp = expected(n);
        let want = floats(&exp["alpha_bars"]);
        let tol = exp["alpha_tol"].as_f64().unwrap();
        let report = check_theorem(&system(n), None, &cfg(), &ScanConfig::default());
        let got: Vec<f64> = report.alpha_bars.iter().map(|a| a.value).collect();
        assert_eq!(got.len(), want.len(), "example {n}");
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < tol, "example {n}: {g} vs {w}");
        }
        for a in &report.alpha_bars {
            assert!(a.residual < 1e-10);
        }
    }
}

#[test]
fn alpha_bar_from_printed_crossing() {
    let ab = alpha_bar(&system(1), 0.26731065, (0.2, 0.5)).unwrap();
    assert!((ab.value - 0.254219124).abs() < 1e-6, "{ab:?}");
    let ab = alpha_bar(&system(2), 0.29039755, (0.25, 0.5)).unwrap();
    assert!((ab.value - 0.2892792083).abs() < 1e-6, "{ab:?}");
}

#[test]
fn alpha_bar_at_a_zero_of_f_equals_y0() {
    // F(0.5) = 0 and g(x) = x, so 2G(α) + F(α)² = α² there.
    let ab = alpha_bar(&system(1), 0.5, (0.45, 0.55)).unwrap();
    assert!((ab.value - 0.5).abs() < 1e-12, "{ab:?}");
    assert!(matches!(
        alpha_bar(&system(1), 5.0, (0.2, 0.5)),
        Err(CycleError::NoRootInInterval { .. })
    ));
}

#[test]
fn theorem_holds_for_examples() {
    for n in 1..=3 {
        let report = check_theorem(&system(n), None, &cfg(), &ScanConfig::default());
        assert!(report.passes(), "example {n}: {report:#?}");
        assert!(report.localization.holds, "example {n}: {:?}", report.localization);
        for a in &report.alpha_bars {
            assert!(a.value < report.extrema[a.interval_index].0);
        }
    }
}

#[test]
fn flat_tail_breaks_condition_iv() {
    let mut sys = system(1);
    if let Some(Segment::Linear(tail)) = sys.curve.segments.last_mut() {
        tail.slope = 0.0;
    }
    let report = check_theorem(&sys, None, &cfg(), &ScanConfig::default());
    assert!(!report.condition_iv.holds);
    assert!(!report.passes());
}

#[test]
fn coarse_grid_is_detected() {
    let scan = ScanConfig {
        grid: 2,
        max_refinements: 0,
        ..ScanConfig::default()
    };
    let err = find_cycles(&system(3), None, &cfg(), &scan).unwrap_err();
    assert!(matches!(err, CycleError::ScanTooCoarse { .. }), "{err}");
}

/// Beyond the outermost cycle `|Δ|` grows without changing sign; an orbit
/// that runs off to infinity counts as `Δ = +∞`.
#[test]
fn delta_grows_beyond_outermost_cycle() {
    for n in 1..=3 {
        let sys = system(n);
        let outer = find_cycles(&sys, None, &cfg(), &ScanConfig::default())
            .unwrap()
            .cycles
            .last()
            .unwrap()
            .y0;
        let ds: Vec<f64> = (1..=20)
            .map(|i| outer * (1.0 + i as f64 / 20.0))
            .map(|y| delta(&sys, y, &cfg()).unwrap())
            .collect();
        let sign = ds[0].signum();
        assert!(ds.iter().all(|d| d.signum() == sign), "example {n}: {ds:?}");
        for w in ds.windows(2) {
            assert!(w[1].abs() > w[0].abs() || w[1].is_infinite(), "example {n}: {ds:?}");
        }
    }
}
