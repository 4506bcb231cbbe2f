use lienard::{LienardSystem, RestoringFunction};
use proptest::prelude::*;

fn system(n: u32) -> LienardSystem {
    let path = format!("{}/fixtures/example{n}.system.json", env!("CARGO_MANIFEST_DIR"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fixtures_round_trip_bitwise() {
    for n in 1..=3 {
        let sys = system(n);
        let text = serde_json::to_string(&sys).unwrap();
        let back: LienardSystem = serde_json::from_str(&text).unwrap();
        assert_eq!(back, sys);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}

#[test]
fn missing_g_defaults_to_identity() {
    let sys: LienardSystem = serde_json::from_str(
        r#"{"segments": [{"kind": "linear", "x_lo": 0, "x_hi": "inf", "slope": 1, "anchor_x": 0, "anchor_y": 0}]}"#,
    )
    .unwrap();
    assert_eq!(sys.g, RestoringFunction::identity());
}

#[test]
fn fixture_zeros_and_extrema() {
    let e1 = system(1);
    assert_eq!(e1.curve.positive_zeros().unwrap(), vec![0.2, 0.5]);
    let e3 = system(3);
    let z = e3.curve.positive_zeros().unwrap();
    for (got, want) in z.iter().zip([0.1, 0.2, 0.4]) {
        assert!((got - want).abs() < 1e-6);
    }
    let x: Vec<f64> = e3.curve.extrema().iter().map(|e| e.0).collect();
    assert_eq!(x, vec![0.05, 0.15, 0.3]);
}

fn cubic_g() -> RestoringFunction {
    RestoringFunction::new(vec![(1, 0.5), (3, 2.0)]).unwrap()
}

proptest! {
    #[test]
    fn curves_are_odd(x in -2.0f64..2.0, n in 1u32..=3) {
        let c = &system(n).curve;
        prop_assert_eq!(c.eval(-x), -c.eval(x));
    }

    #[test]
    fn derivative_matches_finite_difference(x in 0.001f64..1.0, n in 1u32..=3) {
        let c = &system(n).curve;
        let h = 1e-7;
        // Keep the stencil inside one segment.
        prop_assume!(c.joints().iter().all(|j| (x - j).abs() > 2.0 * h));
        let fd = (c.eval(x + h) - c.eval(x - h)) / (2.0 * h);
        let d = c.derivative(x).unwrap();
        prop_assert!((fd - d).abs() <= 1e-5 * d.abs().max(1.0), "x = {}: {} vs {}", x, fd, d);
        prop_assert_eq!(c.derivative(-x).unwrap(), d);
    }

    #[test]
    fn potential_is_increasing_in_x(a in 0.0f64..3.0, b in 0.0f64..3.0) {
        prop_assume!(a != b);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        for g in [RestoringFunction::identity(), cubic_g()] {
            prop_assert!(g.antiderivative(hi) > g.antiderivative(lo));
            prop_assert_eq!(g.antiderivative(-hi), g.antiderivative(hi));
            prop_assert!(g.eval(hi) > 0.0);
            prop_assert_eq!(g.eval(-hi), -g.eval(hi));
        }
    }

    #[test]
    fn inverse_antiderivative_inverts(y in 0.01f64..3.0) {
        let g = cubic_g();
        let x = g.inverse_antiderivative(g.antiderivative(y));
        prop_assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn zeros_have_small_residuals() {
    for n in 1..=3 {
        let c = &system(n).curve;
        // A zero on a joint of a rounded curve cannot beat the joint's own jump.
        let tol = c.validate().max_value_residual().max(1e-9);
        for z in c.positive_zeros().unwrap() {
            assert!(c.eval(z).abs() <= tol, "example {n}: F({z}) = {}", c.eval(z));
        }
    }
}
