use super::{OdeError, Tableau};

/// Right-hand side of an autonomous or time-dependent system `z' = f(t, z)`.
pub trait VectorField<const D: usize> {
    fn eval(&self, t: f64, z: &[f64; D]) -> [f64; D];
}

impl<const D: usize, F> VectorField<D> for F
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    fn eval(&self, t: f64, z: &[f64; D]) -> [f64; D] {
        self(t, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const MAX_STAGES: usize = 8;

/// Adaptive single-step driver over a fixed-size state.
///
/// The driver only ever advances by one accepted step at a time; callers own
/// the stopping logic and use [`Integrator::locate`] to pin down sign changes
/// inside the last step.
pub struct Integrator<'a, const D: usize, F: VectorField<D>> {
    field: &'a F,
    tableau: &'static Tableau,
    ctl: StepControl,
    t: f64,
    z: [f64; D],
    prev_t: f64,
    prev_z: [f64; D],
    h: f64,
    steps: usize,
    rejected: usize,
}

impl<'a, const D: usize, F: VectorField<D>> Integrator<'a, D, F> {
    pub fn new(field: &'a F, tableau: &'static Tableau, ctl: StepControl, t0: f64, z0: [f64; D]) -> Self {
        let mut it = Self {
            field,
            tableau,
            ctl,
            t: t0,
            z: z0,
            prev_t: t0,
            prev_z: z0,
            h: 0.0,
            steps: 0,
            rejected: 0,
        };
        it.h = it.initial_step();
        it
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[f64; D] {
        &self.z
    }

    pub fn previous(&self) -> (f64, &[f64; D]) {
        (self.prev_t, &self.prev_z)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn rejected(&self) -> usize {
        self.rejected
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.ctl.atol + self.ctl.rtol * a.abs().max(b.abs())
    }

    fn rms<I: Iterator<Item = f64>>(it: I) -> f64 {
        let (sum, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
        (sum / n.max(1) as f64).sqrt()
    }

    // Hairer–Nørsett–Wanner starting step heuristic.
    fn initial_step(&self) -> f64 {
        let f0 = self.field.eval(self.t, &self.z);
        let d0 = Self::rms((0..D).map(|i| self.z[i] / self.scale(self.z[i], 0.0)));
        let d1 = Self::rms((0..D).map(|i| f0[i] / self.scale(self.z[i], 0.0)));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(self.ctl.max_step);
        let mut z1 = self.z;
        for i in 0..D {
            z1[i] += h0 * f0[i];
        }
        let f1 = self.field.eval(self.t + h0, &z1);
        let d2 = Self::rms((0..D).map(|i| (f1[i] - f0[i]) / self.scale(self.z[i], 0.0))) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / f64::from(self.tableau.order + 1))
        };
        (100.0 * h0).min(h1).min(self.ctl.max_step)
    }

    /// One trial step of size `h` from `(t, z)`: the new state and the
    /// unscaled local error estimate.
    fn trial(&self, t: f64, z: &[f64; D], h: f64) -> ([f64; D], [f64; D]) {
        let tab = self.tableau;
        let s = tab.stages();
        debug_assert!(s <= MAX_STAGES);
        let mut k = [[0.0; D]; MAX_STAGES];
        for i in 0..s {
            let mut zi = *z;
            for (j, &aij) in tab.a[i].iter().enumerate() {
                if aij != 0.0 {
                    for d in 0..D {
                        zi[d] += h * aij * k[j][d];
                    }
                }
            }
            k[i] = self.field.eval(t + tab.c[i] * h, &zi);
        }
        let mut next = *z;
        let mut err = [0.0; D];
        for (i, ki) in k.iter().enumerate().take(s) {
            let (bi, ei) = (tab.b[i], tab.b[i] - tab.b_hat[i]);
            for d in 0..D {
                next[d] += h * bi * ki[d];
                err[d] += h * ei * ki[d];
            }
        }
        (next, err)
    }

    /// Take one accepted step, never going past `t_limit`.
    pub fn advance(&mut self, t_limit: f64) -> Result<(), OdeError> {
        if self.steps >= self.ctl.max_steps {
            return Err(OdeError::MaxSteps {
                t: self.t,
                max_steps: self.ctl.max_steps,
            });
        }
        let exponent = -1.0 / f64::from(self.tableau.control_order());
        let mut h = self.h.min(self.ctl.max_step);
        let mut last_rejected = false;
        loop {
            let remaining = t_limit - self.t;
            let clipped = h >= remaining;
            let step = if clipped { remaining } else { h };
            if step <= 1e-15 * self.t.abs().max(1.0) {
                return Err(OdeError::StepUnderflow { t: self.t, h: step });
            }
            let (next, err) = self.trial(self.t, &self.z, step);
            if next.iter().any(|v| !v.is_finite()) {
                self.rejected += 1;
                h = step * MIN_FACTOR;
                last_rejected = true;
                continue;
            }
            let norm = Self::rms((0..D).map(|i| err[i] / self.scale(self.z[i], next[i])));
            if norm <= 1.0 {
                let mut factor = if norm == 0.0 {
                    MAX_FACTOR
                } else {
                    SAFETY * norm.powf(exponent)
                };
                factor = factor.clamp(MIN_FACTOR, MAX_FACTOR);
                if last_rejected {
                    factor = factor.min(1.0);
                }
                self.prev_t = self.t;
                self.prev_z = self.z;
                self.t = if clipped { t_limit } else { self.t + step };
                self.z = next;
                self.steps += 1;
                // A clipped step says nothing about the natural step size.
                if !clipped || step * factor > self.h {
                    self.h = (step * factor).min(self.ctl.max_step);
                }
                return Ok(());
            }
            self.rejected += 1;
            last_rejected = true;
            h = step * (SAFETY * norm.powf(exponent)).clamp(MIN_FACTOR, 1.0);
        }
    }

    /// State at `prev_t + dt` for `dt` within the last accepted step,
    /// recomputed by a single step of the same method.
    pub fn reintegrate(&self, dt: f64) -> [f64; D] {
        if dt <= 0.0 {
            return self.prev_z;
        }
        self.trial(self.prev_t, &self.prev_z, dt).0
    }

    /// Locate a sign change of `g` inside the last accepted step down to a
    /// time bracket of `tol` (Illinois regula falsi on the step fraction).
    /// Returns the bracket end with the smaller `|g|`.
    pub fn locate<G: Fn(&[f64; D]) -> f64>(&self, g: G, tol: f64) -> (f64, [f64; D]) {
        let span = self.t - self.prev_t;
        let (mut lo, mut hi) = (0.0, span);
        let (mut z_lo, mut z_hi) = (self.prev_z, self.z);
        let (mut g_lo, mut g_hi) = (g(&z_lo), g(&z_hi));
        let mut side = 0i8;
        for _ in 0..100 {
            if hi - lo <= tol || g_lo == 0.0 || g_hi == 0.0 {
                break;
            }
            let mut mid = hi - g_hi * (hi - lo) / (g_hi - g_lo);
            let margin = 0.5 * tol;
            if !(mid > lo + margin && mid < hi - margin) {
                mid = 0.5 * (lo + hi);
            }
            let zm = self.reintegrate(mid);
            let gm = g(&zm);
            if (gm > 0.0) == (g_lo > 0.0) {
                lo = mid;
                z_lo = zm;
                g_lo = gm;
                if side == -1 {
                    g_hi *= 0.5;
                }
                side = -1;
            } else {
                hi = mid;
                z_hi = zm;
                g_hi = gm;
                if side == 1 {
                    g_lo *= 0.5;
                }
                side = 1;
            }
        }
        if g(&z_lo).abs() < g(&z_hi).abs() {
            (self.prev_t + lo, z_lo)
        } else {
            (self.prev_t + hi, z_hi)
        }
    }

    /// If `g` changes sign over the last step, shorten that step so it ends
    /// on the crossing. Used to keep steps from straddling points where the
    /// vector field loses smoothness.
    pub fn truncate_at<G: Fn(&[f64; D]) -> f64>(&mut self, g: G, tol: f64) -> bool {
        let (g_prev, g_now) = (g(&self.prev_z), g(&self.z));
        if g_prev.abs() < 1e-11 || (g_prev > 0.0) == (g_now > 0.0) {
            return false;
        }
        let (t, z) = self.locate(&g, tol);
        if t <= self.prev_t {
            return false;
        }
        self.t = t;
        self.z = z;
        true
    }
}
