//! Bracketing scalar root finders.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RootError {
    #[error("no sign change on [{a}, {b}]: f(a) = {fa}, f(b) = {fb}")]
    NotBracketed { a: f64, b: f64, fa: f64, fb: f64 },
    #[error("function returned NaN at x = {x}")]
    NaN { x: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

fn check_bracket(a: f64, b: f64, fa: f64, fb: f64) -> Result<(), RootError> {
    if fa.is_nan() {
        return Err(RootError::NaN { x: a });
    }
    if fb.is_nan() {
        return Err(RootError::NaN { x: b });
    }
    if fa * fb > 0.0 {
        return Err(RootError::NotBracketed { a, b, fa, fb });
    }
    Ok(())
}

/// Plain bisection until the bracket is narrower than `xtol`.
///
/// Infinite function values are allowed; only their sign is used.
pub fn bisect<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, xtol: f64) -> Result<Root, RootError> {
    bisect_until(f, a, b, xtol, 0.0)
}

/// Bisection that also stops once `|f(mid)| < ftol`.
pub fn bisect_until<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    xtol: f64,
    ftol: f64,
) -> Result<Root, RootError> {
    let mut fa = f(a);
    let fb = f(b);
    check_bracket(a, b, fa, fb)?;
    if fa == 0.0 {
        return Ok(Root {
            x: a,
            fx: fa,
            iterations: 0,
        });
    }
    if fb == 0.0 {
        return Ok(Root {
            x: b,
            fx: fb,
            iterations: 0,
        });
    }
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    let mut iterations = 0;
    while (b - a).abs() > xtol && iterations < 200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        iterations += 1;
        if fm.is_nan() {
            return Err(RootError::NaN { x: m });
        }
        if fm.abs() < best.1.abs() {
            best = (m, fm);
        }
        if fm == 0.0 || fm.abs() < ftol {
            return Ok(Root {
                x: m,
                fx: fm,
                iterations,
            });
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(Root {
        x: best.0,
        fx: best.1,
        iterations,
    })
}

/// Brent's method (inverse quadratic interpolation guarded by bisection).
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<Root, RootError> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    check_bracket(a, b, fa, fb)?;
    if fa == 0.0 {
        return Ok(Root {
            x: a,
            fx: fa,
            iterations: 0,
        });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for iterations in 1..=200 {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(Root {
                x: b,
                fx: fb,
                iterations,
            });
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if fb.is_nan() {
            return Err(RootError::NaN { x: b });
        }
    }
    Ok(Root {
        x: b,
        fx: fb,
        iterations: 200,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r.x - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bisect_handles_infinite_values() {
        let r = bisect(|x| if x > 0.7 { f64::INFINITY } else { x - 0.5 }, 0.0, 1.0, 1e-14).unwrap();
        assert!((r.x - 0.5).abs() < 1e-13);
    }

    #[test]
    fn brent_cosine() {
        let r = brent(f64::cos, 1.0, 2.0, 1e-15).unwrap();
        assert!((r.x - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
        assert!(r.iterations < 20);
    }

    #[test]
    fn unbracketed_is_an_error() {
        assert!(matches!(
            bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-9),
            Err(RootError::NotBracketed { .. })
        ));
        assert!(matches!(
            brent(|x| x * x + 1.0, -1.0, 1.0, 1e-9),
            Err(RootError::NotBracketed { .. })
        ));
    }
}
