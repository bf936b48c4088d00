//! Dormand–Prince 5(4) with dense output.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Tolerances and limits for every ODE solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// First trial step; chosen automatically when `None`.
    pub initial_step: Option<f64>,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-8, abs_tol: 1e-10, max_steps: 1_000_000, initial_step: None }
    }
}

impl OdeConfig {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.max_steps >= 1) {
            return Err(Error::InvalidArgument(format!("bad ODE config {self:?}")));
        }
        if let Some(h) = self.initial_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidArgument("initial_step must be positive".into()));
            }
        }
        Ok(())
    }
}

const C2: f64 = 0.2;
const C3: f64 = 0.3;
const C4: f64 = 0.8;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 0.2;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step's continuous extension.
#[derive(Debug, Clone)]
struct Segment<T> {
    t0: T,
    h: T,
    /// Five stacked coefficient vectors of length `dim`.
    cont: Vec<T>,
}

/// Dense solution over `[t_start, t_end]`.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    dim: usize,
    t_start: T,
    t_end: T,
    y_start: Vec<T>,
    y_end: Vec<T>,
    segments: Vec<Segment<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t_start(&self) -> T {
        self.t_start
    }

    pub fn t_end(&self) -> T {
        self.t_end
    }

    pub fn final_state(&self) -> &[T] {
        &self.y_end
    }

    pub fn steps(&self) -> usize {
        self.segments.len()
    }

    /// Interpolated state at `t`, clamped to the integration interval.
    pub fn eval(&self, t: T) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        self.eval_into(t, &mut out);
        out
    }

    pub fn eval_into(&self, t: T, out: &mut [T]) {
        if self.segments.is_empty() || t <= self.t_start {
            out.copy_from_slice(&self.y_start);
            return;
        }
        if t >= self.t_end {
            out.copy_from_slice(&self.y_end);
            return;
        }
        let idx = self.segments.partition_point(|s| s.t0 + s.h < t).min(self.segments.len() - 1);
        let seg = &self.segments[idx];
        let n = self.dim;
        let th = (t - seg.t0) / seg.h;
        let th1 = T::one() - th;
        for i in 0..n {
            let c = |k: usize| seg.cont[k * n + i];
            out[i] = c(0) + th * (c(1) + th1 * (c(2) + th * (c(3) + th1 * c(4))));
        }
    }
}

fn finite<T: Real>(v: &[T]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn error_norm<T: Real>(y: &[T], y_new: &[T], err: &[T], rtol: T, atol: T) -> T {
    let n = y.len().max(1);
    let mut acc = T::zero();
    for i in 0..y.len() {
        let sc = atol + rtol * y[i].abs().max(y_new[i].abs());
        let r = err[i] / sc;
        acc += r * r;
    }
    (acc / T::lit(n as f64)).sqrt()
}

/// Integrates `y' = f(t, y)` from `t0` to `t1`, returning the final state.
pub fn integrate_ode<T, F>(f: F, x0: &[T], t0: T, t1: T, cfg: &OdeConfig) -> Result<Vec<T>>
where
    T: Real,
    F: FnMut(T, &[T], &mut [T]),
{
    run(f, x0, t0, t1, cfg, false).map(|tr| tr.y_end)
}

/// As [`integrate_ode`] but keeps the continuous extension of every step.
pub fn integrate_ode_dense<T, F>(
    f: F,
    x0: &[T],
    t0: T,
    t1: T,
    cfg: &OdeConfig,
) -> Result<Trajectory<T>>
where
    T: Real,
    F: FnMut(T, &[T], &mut [T]),
{
    run(f, x0, t0, t1, cfg, true)
}

fn run<T, F>(mut f: F, x0: &[T], t0: T, t1: T, cfg: &OdeConfig, dense: bool) -> Result<Trajectory<T>>
where
    T: Real,
    F: FnMut(T, &[T], &mut [T]),
{
    cfg.validate()?;
    if !(t0.is_finite() && t1.is_finite()) || t1 < t0 {
        return Err(Error::InvalidArgument("integration interval must satisfy t0 <= t1".into()));
    }
    if !finite(x0) {
        return Err(Error::NonFinite("initial state"));
    }
    let n = x0.len();
    let mut traj = Trajectory {
        dim: n,
        t_start: t0,
        t_end: t1,
        y_start: x0.to_vec(),
        y_end: x0.to_vec(),
        segments: Vec::new(),
    };
    if t1 == t0 || n == 0 {
        return Ok(traj);
    }
    let rtol = T::lit(cfg.rel_tol);
    let atol = T::lit(cfg.abs_tol);
    let lit = T::lit;

    let mut y = x0.to_vec();
    let mut k1 = vec![T::zero(); n];
    let mut k2 = vec![T::zero(); n];
    let mut k3 = vec![T::zero(); n];
    let mut k4 = vec![T::zero(); n];
    let mut k5 = vec![T::zero(); n];
    let mut k6 = vec![T::zero(); n];
    let mut k7 = vec![T::zero(); n];
    let mut ys = vec![T::zero(); n];
    let mut y_new = vec![T::zero(); n];
    let mut err = vec![T::zero(); n];

    let mut t = t0;
    f(t, &y, &mut k1);
    if !finite(&k1) {
        return Err(Error::NonFiniteDerivative { t: t.approx() });
    }
    let span = t1 - t0;
    let mut h = match cfg.initial_step {
        Some(h0) => lit(h0).min(span),
        None => {
            // Hairer's starting-step heuristic.
            let d0 = error_norm(&y, &y, &y, rtol, atol);
            let d1 = error_norm(&y, &y, &k1, rtol, atol);
            let h0 = if d0 < lit(1e-5) || d1 < lit(1e-5) { lit(1e-6) } else { lit(0.01) * d0 / d1 };
            let h0 = h0.min(span);
            for i in 0..n {
                ys[i] = y[i] + h0 * k1[i];
            }
            f(t + h0, &ys, &mut k2);
            for i in 0..n {
                err[i] = (k2[i] - k1[i]) / h0;
            }
            let d2 = error_norm(&y, &y, &err, rtol, atol);
            let h1 = if d1.max(d2) <= lit(1e-15) {
                (h0 * lit(1e-3)).max(lit(1e-6))
            } else {
                (lit(0.01) / d1.max(d2)).powf(lit(0.2))
            };
            (lit(100.0) * h0).min(h1).min(span)
        }
    };
    let mut steps = 0usize;
    let mut last_rejected = false;
    loop {
        if steps >= cfg.max_steps {
            return Err(Error::StepLimit { steps, t: t.approx() });
        }
        steps += 1;
        let remaining = t1 - t;
        let last = h >= remaining * (T::one() - lit(1e-12));
        if last {
            h = remaining;
        }
        if h <= t.abs().max(span) * lit(1e-15) {
            return Err(Error::StepUnderflow { t: t.approx() });
        }
        for i in 0..n {
            ys[i] = y[i] + h * lit(A21) * k1[i];
        }
        f(t + lit(C2) * h, &ys, &mut k2);
        for i in 0..n {
            ys[i] = y[i] + h * (lit(A31) * k1[i] + lit(A32) * k2[i]);
        }
        f(t + lit(C3) * h, &ys, &mut k3);
        for i in 0..n {
            ys[i] = y[i] + h * (lit(A41) * k1[i] + lit(A42) * k2[i] + lit(A43) * k3[i]);
        }
        f(t + lit(C4) * h, &ys, &mut k4);
        for i in 0..n {
            ys[i] = y[i]
                + h * (lit(A51) * k1[i] + lit(A52) * k2[i] + lit(A53) * k3[i] + lit(A54) * k4[i]);
        }
        f(t + lit(C5) * h, &ys, &mut k5);
        for i in 0..n {
            ys[i] = y[i]
                + h * (lit(A61) * k1[i]
                    + lit(A62) * k2[i]
                    + lit(A63) * k3[i]
                    + lit(A64) * k4[i]
                    + lit(A65) * k5[i]);
        }
        let t_new = if last { t1 } else { t + h };
        f(t_new, &ys, &mut k6);
        for i in 0..n {
            y_new[i] = y[i]
                + h * (lit(A71) * k1[i]
                    + lit(A73) * k3[i]
                    + lit(A74) * k4[i]
                    + lit(A75) * k5[i]
                    + lit(A76) * k6[i]);
        }
        f(t_new, &y_new, &mut k7);
        if !finite(&k7) || !finite(&y_new) {
            // Treat as a failed step; shrink and retry.
            h *= lit(0.25);
            last_rejected = true;
            continue;
        }
        for i in 0..n {
            err[i] = h
                * (lit(E1) * k1[i]
                    + lit(E3) * k3[i]
                    + lit(E4) * k4[i]
                    + lit(E5) * k5[i]
                    + lit(E6) * k6[i]
                    + lit(E7) * k7[i]);
        }
        let e = error_norm(&y, &y_new, &err, rtol, atol);
        if e <= T::one() {
            if dense {
                let mut cont = vec![T::zero(); 5 * n];
                for i in 0..n {
                    let ydiff = y_new[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    cont[i] = y[i];
                    cont[n + i] = ydiff;
                    cont[2 * n + i] = bspl;
                    cont[3 * n + i] = ydiff - h * k7[i] - bspl;
                    cont[4 * n + i] = h
                        * (lit(D1) * k1[i]
                            + lit(D3) * k3[i]
                            + lit(D4) * k4[i]
                            + lit(D5) * k5[i]
                            + lit(D6) * k6[i]
                            + lit(D7) * k7[i]);
                }
                traj.segments.push(Segment { t0: t, h, cont });
            }
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            if last {
                break;
            }
            let mut fac = if e.is_zero() { lit(10.0) } else { lit(0.9) * e.powf(lit(-0.2)) };
            fac = fac.min(lit(10.0)).max(lit(0.2));
            if last_rejected {
                fac = fac.min(T::one());
            }
            h *= fac;
            last_rejected = false;
        } else {
            let fac = (lit(0.9) * e.powf(lit(-0.2))).max(lit(0.2));
            h *= fac;
            last_rejected = true;
        }
    }
    traj.y_end = y;
    Ok(traj)
}
