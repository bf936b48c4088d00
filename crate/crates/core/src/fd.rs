//! Moments by central finite differences of the transform.
//!
//! Derivatives in `s` are taken at `0` and in `z` at `1`; stencils are tensor
//! products of one-dimensional second-order central stencils, evaluated in
//! parallel.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::HawkesModel;
use crate::moments::{assemble_system, transient_moments, MomentIndex, TransientMethod};
use crate::numerics::OdeConfig;
use crate::scalar::Real;
use crate::transform::{zeta, zeta_two_time, TransformArgs, SOFT_EXTENSION};

/// Highest total derivative order accepted.
pub const MAX_FD_ORDER: u32 = 3;

/// Solver tolerances for transform evaluations inside a stencil. Loose
/// enough that the solver's own error shows up at small `h`, as with an
/// off-the-shelf integrator at default settings.
pub fn default_solver() -> OdeConfig {
    OdeConfig::with_tolerances(1e-6, 1e-8)
}

/// Step width of the central stencils.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSpec {
    pub h: f64,
}

impl Default for FdSpec {
    fn default() -> Self {
        Self { h: 1e-3 }
    }
}

impl FdSpec {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 0.1) {
            return Err(Error::InvalidArgument(format!("FD width must lie in (0, 0.1], got {h}")));
        }
        Ok(Self { h })
    }
}

/// Offsets (in units of `h`) and weights of the central stencil for a
/// derivative of order `k`, already divided by `h^k`.
fn stencil(k: u32, h: f64) -> Vec<(i32, f64)> {
    let raw: Vec<(i32, f64)> = match k {
        0 => vec![(0, 1.0)],
        1 => vec![(-1, -0.5), (1, 0.5)],
        2 => vec![(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => vec![(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        _ => unreachable!("order checked by caller"),
    };
    let scale = h.powi(k as i32);
    raw.into_iter().map(|(o, w)| (o, w / scale)).collect()
}

/// Tensor product of per-variable stencils: every combination of offsets
/// with the product weight.
fn tensor(orders: &[u32], h: f64) -> Vec<(Vec<i32>, f64)> {
    let mut out = vec![(Vec::with_capacity(orders.len()), 1.0)];
    for &k in orders {
        let st = stencil(k, h);
        let mut next = Vec::with_capacity(out.len() * st.len());
        for (offs, w) in &out {
            for &(o, sw) in &st {
                let mut v = offs.clone();
                v.push(o);
                next.push((v, w * sw));
            }
        }
        out = next;
    }
    out
}

fn check_reach(orders: &[u32], h: f64) -> Result<()> {
    let reach = orders.iter().map(|&k| if k >= 3 { 2.0 } else if k > 0 { 1.0 } else { 0.0 }).fold(0.0, f64::max) * h;
    if reach > SOFT_EXTENSION + 1e-15 {
        return Err(Error::Domain(format!(
            "stencil reaches {reach}, beyond the transform's extension {SOFT_EXTENSION}"
        )));
    }
    Ok(())
}

/// A finite-difference estimate and a rough bound on the solver noise it
/// amplifies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdEstimate {
    pub value: f64,
    pub evaluations: usize,
    /// `rel_tol / h^k`: solver error amplified by the stencil.
    pub roundoff_bound: f64,
    /// `h²`, the order of the truncation error.
    pub truncation_scale: f64,
}

impl FdEstimate {
    /// True when amplified solver noise likely dominates truncation.
    pub fn cancellation_risk(&self) -> bool {
        self.roundoff_bound > self.truncation_scale
    }
}

/// Reduced moment `ψ(n_λ, n_Q)` at time `t` by differentiating `ζ`.
pub fn fd_moment<T: Real>(
    m: &HawkesModel<T>,
    t: T,
    idx: &MomentIndex,
    spec: &FdSpec,
    cfg: &OdeConfig,
) -> Result<f64> {
    fd_moment_detailed(m, t, idx, spec, cfg).map(|e| e.value)
}

pub fn fd_moment_detailed<T: Real>(
    m: &HawkesModel<T>,
    t: T,
    idx: &MomentIndex,
    spec: &FdSpec,
    cfg: &OdeConfig,
) -> Result<FdEstimate> {
    let d = m.d();
    if idx.d() != d {
        return Err(Error::Dimension(format!("index has dimension {}, model {d}", idx.d())));
    }
    let order = idx.order();
    if order == 0 || order > MAX_FD_ORDER {
        return Err(Error::InvalidArgument(format!(
            "finite differences support total orders 1..={MAX_FD_ORDER}, got {order}"
        )));
    }
    FdSpec::new(spec.h)?;
    let orders: Vec<u32> = idx.n_lambda.iter().chain(&idx.n_q).copied().collect();
    check_reach(&orders, spec.h)?;
    let points = tensor(&orders, spec.h);
    let h = T::lit(spec.h);
    let terms: Vec<f64> = points
        .par_iter()
        .filter(|(_, w)| *w != 0.0)
        .map(|(offs, w)| {
            let s = (0..d).map(|i| h * T::lit(offs[i] as f64)).collect();
            let z = (0..d).map(|i| T::one() + h * T::lit(offs[d + i] as f64)).collect();
            let v = zeta(m, t, &TransformArgs { s, z }, cfg)?;
            Ok(w * v.approx())
        })
        .collect::<Result<_>>()?;
    let sign = if idx.lambda_order() % 2 == 1 { -1.0 } else { 1.0 };
    Ok(FdEstimate {
        value: sign * terms.iter().sum::<f64>(),
        evaluations: terms.len(),
        roundoff_bound: cfg.rel_tol / spec.h.powi(order as i32),
        truncation_scale: spec.h * spec.h,
    })
}

/// Which pair of processes a two-time moment refers to: the first letter is
/// observed at `t`, the second at `t + τ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossKind {
    QQ,
    LambdaLambda,
    QLambda,
    LambdaQ,
}

impl CrossKind {
    pub const ALL: [CrossKind; 4] = [CrossKind::QQ, CrossKind::LambdaLambda, CrossKind::QLambda, CrossKind::LambdaQ];

    pub(crate) fn position(self) -> usize {
        self as usize
    }

    /// Label such as `QQ` or `LQ`.
    pub fn tag(self) -> &'static str {
        match self {
            CrossKind::QQ => "QQ",
            CrossKind::LambdaLambda => "LL",
            CrossKind::QLambda => "QL",
            CrossKind::LambdaQ => "LQ",
        }
    }

    /// Whether the first and second factors are `Q` (otherwise `λ`).
    pub fn parts(self) -> (bool, bool) {
        match self {
            CrossKind::QQ => (true, true),
            CrossKind::LambdaLambda => (false, false),
            CrossKind::QLambda => (true, false),
            CrossKind::LambdaQ => (false, true),
        }
    }
}

/// `E[X_i(t) Y_j(t+τ)]` by a mixed central difference of the two-time
/// transform.
#[allow(clippy::too_many_arguments)]
pub fn fd_cross_moment<T: Real>(
    m: &HawkesModel<T>,
    t: T,
    tau: T,
    i: usize,
    j: usize,
    which: CrossKind,
    spec: &FdSpec,
    cfg: &OdeConfig,
) -> Result<f64> {
    let d = m.d();
    if i >= d || j >= d {
        return Err(Error::Dimension(format!("component index out of range for d = {d}")));
    }
    FdSpec::new(spec.h)?;
    check_reach(&[1], spec.h)?;
    let (first_q, second_q) = which.parts();
    let h = T::lit(spec.h);
    let corners = [(1i32, 1i32, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)];
    let vals: Vec<f64> = corners
        .par_iter()
        .map(|&(a, b, w)| {
            let mut r = vec![T::zero(); d];
            let mut y = vec![T::one(); d];
            let mut s = vec![T::zero(); d];
            let mut z = vec![T::one(); d];
            let da = h * T::lit(a as f64);
            let db = h * T::lit(b as f64);
            if first_q {
                y[i] += da;
            } else {
                r[i] = da;
            }
            if second_q {
                z[j] += db;
            } else {
                s[j] = db;
            }
            let v = zeta_two_time(m, t, tau, &r, &y, &s, &z, cfg)?;
            Ok(w * v.approx())
        })
        .collect::<Result<_>>()?;
    let mut sign = 1.0;
    if !first_q {
        sign = -sign;
    }
    if !second_q {
        sign = -sign;
    }
    Ok(sign * vals.iter().sum::<f64>() / (4.0 * spec.h * spec.h))
}

/// `C(t, τ) = R(t, τ) - E[X(t)] E[Y(t+τ)]ᵀ` with exact means.
pub fn autocovariance<T: Real>(
    m: &HawkesModel<T>,
    t: T,
    tau: T,
    which: CrossKind,
    spec: &FdSpec,
    cfg: &OdeConfig,
) -> Result<DMatrix<f64>> {
    cross_matrices(m, t, tau, which, spec, cfg).map(|(_, c)| c)
}

/// `(R, C)`: raw two-time moments and their covariance.
pub fn cross_matrices<T: Real>(
    m: &HawkesModel<T>,
    t: T,
    tau: T,
    which: CrossKind,
    spec: &FdSpec,
    cfg: &OdeConfig,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let d = m.d();
    let sys = assemble_system(m, 1)?;
    let at = |time: T| -> Result<(Vec<f64>, Vec<f64>)> {
        let tab = transient_moments(&sys, time, TransientMethod::Auto, cfg)?;
        let mut lam = Vec::with_capacity(d);
        let mut q = Vec::with_capacity(d);
        for k in 0..d {
            lam.push(tab.value(&MomentIndex::lambda(d, k))?.approx());
            q.push(tab.value(&MomentIndex::q(d, k))?.approx());
        }
        Ok((lam, q))
    };
    let (l0, q0) = at(t)?;
    let (l1, q1) = at(t + tau)?;
    let (first_q, second_q) = which.parts();
    let first = if first_q { q0 } else { l0 };
    let second = if second_q { q1 } else { l1 };
    let mut r = DMatrix::zeros(d, d);
    let mut c = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            r[(i, j)] = fd_cross_moment(m, t, tau, i, j, which, spec, cfg)?;
            c[(i, j)] = r[(i, j)] - first[i] * second[j];
        }
    }
    Ok((r, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn cfg() -> OdeConfig {
        OdeConfig::with_tolerances(1e-12, 1e-14)
    }

    #[test]
    fn stencils_are_exact_on_low_degree() {
        let h = 0.1;
        let quad = |x: f64| 1.0 + 2.0 * x - 3.0 * x * x;
        let cubic = |x: f64| quad(x) + 0.5 * x * x * x;
        let d = |k: u32, f: &dyn Fn(f64) -> f64| {
            stencil(k, h).iter().map(|&(o, w)| w * f(o as f64 * h)).sum::<f64>()
        };
        assert!((d(1, &quad) - 2.0).abs() < 1e-9);
        assert!((d(2, &quad) + 6.0).abs() < 1e-9);
        assert!((d(3, &cubic) - 3.0).abs() < 1e-9);
        assert!((d(1, &cubic) - 2.0 - 0.5 * h * h).abs() < 1e-9);
        assert_eq!(tensor(&[1, 1], h).len(), 4);
        assert_eq!(tensor(&[2, 1, 0], h).len(), 6);
    }

    #[test]
    fn spec_bounds() {
        assert!(FdSpec::new(0.0).is_err());
        assert!(FdSpec::new(0.2).is_err());
        assert_eq!(FdSpec::default().h, 1e-3);
    }

    #[test]
    fn rejects_high_orders_and_wide_stencils() {
        let m = presets::bivariate::<f64>();
        let idx = MomentIndex::new(vec![4, 0], vec![0, 0]);
        assert!(fd_moment(&m, 1.0, &idx, &FdSpec::default(), &cfg()).is_err());
        let idx = MomentIndex::new(vec![3, 0], vec![0, 0]);
        assert!(matches!(
            fd_moment(&m, 1.0, &idx, &FdSpec { h: 0.04 }, &cfg()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn poisson_queue_mean() {
        let m = presets::poisson(vec![2.0, 1.0], vec![1.0, 1.0], vec![0.5, 2.0]).unwrap();
        let t: f64 = 3.0;
        for i in 0..2 {
            let v = fd_moment(&m, t, &MomentIndex::q(2, i), &FdSpec::default(), &cfg()).unwrap();
            let mu = m.mu()[i];
            let want = m.lambda_bar()[i] * (1.0 - (-mu * t).exp()) / mu;
            assert!((v - want).abs() < 1e-4, "{v} vs {want}");
        }
    }

    #[test]
    fn first_moment_against_engine() {
        let m = presets::bivariate::<f64>();
        let sys = assemble_system(&m, 2).unwrap();
        let tab = transient_moments(&sys, 5.0, TransientMethod::ClosedForm, &cfg()).unwrap();
        for idx in [MomentIndex::lambda(2, 0), MomentIndex::new(vec![1, 1], vec![0, 0])] {
            let v = fd_moment(&m, 5.0, &idx, &FdSpec::default(), &cfg()).unwrap();
            let want = tab.value(&idx).unwrap();
            assert!(((v - want) / want).abs() < 1e-3, "{idx}: {v} vs {want}");
        }
    }

    #[test]
    fn mm_infinity_autocovariance() {
        let m = presets::poisson(vec![2.0, 1.0], vec![1.0, 1.0], vec![0.5, 2.0]).unwrap();
        let (t, tau) = (1.0f64, 0.7f64);
        let c = autocovariance(&m, t, tau, CrossKind::QQ, &FdSpec::default(), &cfg()).unwrap();
        let mu = 0.5f64;
        let var = 2.0 * (1.0 - (-mu * t).exp()) / mu;
        assert!((c[(0, 0)] - var * (-mu * tau).exp()).abs() < 1e-4, "{}", c[(0, 0)]);
        assert!(c[(0, 1)].abs() < 1e-4);
        let c0 = autocovariance(&m, 0.0, tau, CrossKind::QQ, &FdSpec::default(), &cfg()).unwrap();
        assert!(c0.amax() < 1e-6);
    }
}
