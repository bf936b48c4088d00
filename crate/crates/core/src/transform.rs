//! Joint transform `ζ(t, s, z) = E[∏ z_i^{Q_i(t)} e^{-s_i λ_i(t)}]` via the
//! characteristic ODEs.
//!
//! The backward variable `s̃` solves
//! `s̃_j' = -α_j s̃_j - c_j(u) β_j(s̃) + 1`, where `c_j(u)` is the transform of
//! the contribution of an arrival `u` time units before the horizon. Its time
//! integral is carried as `d` extra state components.

use crate::error::{Error, Result};
use crate::model::HawkesModel;
use crate::numerics::{integrate_ode, OdeConfig};
use crate::scalar::Real;

/// How far `s` may go below zero and `z` above one, for central differences.
pub const SOFT_EXTENSION: f64 = 0.05;

/// Transform arguments `(s, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformArgs<T> {
    pub s: Vec<T>,
    pub z: Vec<T>,
}

impl<T: Real> TransformArgs<T> {
    pub fn new(s: Vec<T>, z: Vec<T>) -> Result<Self> {
        let a = Self { s, z };
        a.validate(None)?;
        Ok(a)
    }

    /// `s = 0`, `z = 1`.
    pub fn origin(d: usize) -> Self {
        Self { s: vec![T::zero(); d], z: vec![T::one(); d] }
    }

    fn validate(&self, d: Option<usize>) -> Result<()> {
        if self.s.len() != self.z.len() || d.is_some_and(|d| d != self.s.len()) {
            return Err(Error::Dimension("s and z must both have length d".into()));
        }
        let eps = T::lit(SOFT_EXTENSION);
        for (&s, &z) in self.s.iter().zip(&self.z) {
            if !s.is_finite() || s < -eps {
                return Err(Error::Domain(format!("s = {s:?} is below -{SOFT_EXTENSION}")));
            }
            if !z.is_finite() || z < -T::one() || z > T::one() + eps {
                return Err(Error::Domain(format!("z = {z:?} is outside [-1, 1 + {SOFT_EXTENSION}]")));
            }
        }
        Ok(())
    }
}

/// Observed state at time `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalState<T> {
    pub t0: T,
    pub q0: Vec<u64>,
    pub lambda0: Vec<T>,
}

impl<T: Real> ConditionalState<T> {
    /// The default start `Q = 0`, `λ = λ̄` at time zero.
    pub fn initial(m: &HawkesModel<T>) -> Self {
        Self { t0: T::zero(), q0: vec![0; m.d()], lambda0: m.lambda_bar().to_vec() }
    }
}

/// Terminal value of `s̃` and `∫ s̃ du` over the solved interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TildeS<T> {
    pub end: Vec<T>,
    pub integral: Vec<T>,
}

fn solve_characteristic<T, C>(
    m: &HawkesModel<T>,
    length: T,
    s_init: &[T],
    coef: C,
    cfg: &OdeConfig,
) -> Result<TildeS<T>>
where
    T: Real,
    C: Fn(usize, T) -> T,
{
    let d = m.d();
    if s_init.len() != d {
        return Err(Error::Dimension(format!("expected {d} initial values, got {}", s_init.len())));
    }
    if !(length >= T::zero()) {
        return Err(Error::InvalidArgument("interval must have nonnegative length".into()));
    }
    if length.is_zero() {
        return Ok(TildeS { end: s_init.to_vec(), integral: vec![T::zero(); d] });
    }
    let mut x0 = s_init.to_vec();
    x0.extend(std::iter::repeat_n(T::zero(), d));
    let mut left_domain = false;
    let alpha = m.alpha();
    let res = integrate_ode(
        |u, y: &[T], dy: &mut [T]| {
            let st = &y[..d];
            for j in 0..d {
                match m.beta(j, st) {
                    Some(b) => dy[j] = -alpha[j] * st[j] - coef(j, u) * b + T::one(),
                    None => {
                        left_domain = true;
                        dy[j] = T::lit(f64::NAN);
                    }
                }
                dy[d + j] = st[j];
            }
        },
        &x0,
        T::zero(),
        length,
        cfg,
    );
    match res {
        Ok(x) => Ok(TildeS { end: x[..d].to_vec(), integral: x[d..].to_vec() }),
        Err(_) if left_domain => {
            Err(Error::Domain("s̃ left the region where the mark Laplace transform is finite".into()))
        }
        Err(e) => Err(e),
    }
}

/// Solves the `s̃` system on `[t_start, t_end]` with `s̃(t_start) = s_init`.
pub fn solve_tilde_s<T: Real>(
    m: &HawkesModel<T>,
    t_start: T,
    t_end: T,
    s_init: &[T],
    z: &[T],
    cfg: &OdeConfig,
) -> Result<TildeS<T>> {
    if !(t_end >= t_start) {
        return Err(Error::InvalidArgument("need t_end >= t_start".into()));
    }
    if z.len() != m.d() {
        return Err(Error::Dimension("z must have length d".into()));
    }
    let mu = m.mu();
    solve_characteristic(m, t_end - t_start, s_init, |j, u| T::one() + (z[j] - T::one()) * (-mu[j] * u).exp(), cfg)
}

/// `ζ(t, s, z)` from `Q(0) = 0`, `λ(0) = λ̄`.
pub fn zeta<T: Real>(m: &HawkesModel<T>, t: T, args: &TransformArgs<T>, cfg: &OdeConfig) -> Result<T> {
    zeta_conditional_inner(m, &ConditionalState::initial(m), t, args, cfg)
}

/// Transform at `t` given the state at `state.t0 < t`.
pub fn zeta_conditional<T: Real>(
    m: &HawkesModel<T>,
    state: &ConditionalState<T>,
    t: T,
    args: &TransformArgs<T>,
    cfg: &OdeConfig,
) -> Result<T> {
    if !(t > state.t0) {
        return Err(Error::InvalidArgument("need t > t0".into()));
    }
    zeta_conditional_inner(m, state, t, args, cfg)
}

fn zeta_conditional_inner<T: Real>(
    m: &HawkesModel<T>,
    state: &ConditionalState<T>,
    t: T,
    args: &TransformArgs<T>,
    cfg: &OdeConfig,
) -> Result<T> {
    let d = m.d();
    args.validate(Some(d))?;
    if state.q0.len() != d || state.lambda0.len() != d {
        return Err(Error::Dimension("conditional state must have length d".into()));
    }
    if !(state.t0 >= T::zero()) || !(t >= state.t0) {
        return Err(Error::InvalidArgument("need 0 <= t0 <= t".into()));
    }
    let sol = solve_tilde_s(m, state.t0, t, &args.s, &args.z, cfg)?;
    let mut log = T::zero();
    for j in 0..d {
        log -= sol.end[j] * state.lambda0[j] + m.lambda_bar()[j] * m.alpha()[j] * sol.integral[j];
    }
    let mut out = log.exp();
    for j in 0..d {
        if state.q0[j] > 0 {
            let zh = T::one() + (args.z[j] - T::one()) * (-m.mu()[j] * (t - state.t0)).exp();
            out *= zh.powi(state.q0[j] as i32);
        }
    }
    Ok(out)
}

/// `E[∏ y_i^{Q_i(t)} e^{-r_i λ_i(t)} z_i^{Q_i(t+τ)} e^{-s_i λ_i(t+τ)}]`.
#[allow(clippy::too_many_arguments)]
pub fn zeta_two_time<T: Real>(
    m: &HawkesModel<T>,
    t: T,
    tau: T,
    r: &[T],
    y: &[T],
    s: &[T],
    z: &[T],
    cfg: &OdeConfig,
) -> Result<T> {
    let d = m.d();
    TransformArgs { s: r.to_vec(), z: y.to_vec() }.validate(Some(d))?;
    TransformArgs { s: s.to_vec(), z: z.to_vec() }.validate(Some(d))?;
    if !(t >= T::zero()) || !(tau >= T::zero()) {
        return Err(Error::InvalidArgument("need t >= 0 and tau >= 0".into()));
    }
    let mu = m.mu();
    let late = solve_tilde_s(m, t, t + tau, s, z, cfg)?;
    let r_init: Vec<T> = (0..d).map(|j| r[j] + late.end[j]).collect();
    let early = solve_characteristic(
        m,
        t,
        &r_init,
        |j, v| {
            T::one() + (y[j] - T::one()) * (-mu[j] * v).exp() + y[j] * (z[j] - T::one()) * (-mu[j] * (v + tau)).exp()
        },
        cfg,
    )?;
    let mut log = T::zero();
    for j in 0..d {
        let lb = m.lambda_bar()[j];
        let a = m.alpha()[j];
        log -= lb * early.end[j] + lb * a * early.integral[j] + lb * a * late.integral[j];
    }
    Ok(log.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{assemble_system, transient_moments, MomentIndex, TransientMethod};
    use crate::presets;

    fn cfg() -> OdeConfig {
        OdeConfig::with_tolerances(1e-11, 1e-13)
    }

    #[test]
    fn fixed_point_at_origin() {
        let m = presets::bivariate::<f64>();
        let r = solve_tilde_s(&m, 0.0, 5.0, &[0.0, 0.0], &[1.0, 1.0], &cfg()).unwrap();
        assert_eq!(r.end, vec![0.0, 0.0]);
        assert_eq!(r.integral, vec![0.0, 0.0]);
        let r = solve_tilde_s(&m, 2.0, 2.0, &[0.3, 0.1], &[0.5, 1.0], &cfg()).unwrap();
        assert_eq!(r.end, vec![0.3, 0.1]);
        assert_eq!(r.integral, vec![0.0, 0.0]);
    }

    #[test]
    fn total_probability_and_boundary() {
        let m = presets::bivariate::<f64>();
        let z = zeta(&m, 5.0, &TransformArgs::origin(2), &cfg()).unwrap();
        assert_eq!(z, 1.0);
        let args = TransformArgs::new(vec![0.2, 0.4], vec![0.3, 0.7]).unwrap();
        let z0 = zeta(&m, 0.0, &args, &cfg()).unwrap();
        assert!((z0 - (-(0.2 * 0.5 + 0.4 * 0.5f64)).exp()).abs() < 1e-15);
    }

    #[test]
    fn derivatives_give_means() {
        let m = presets::bivariate::<f64>();
        let sys = assemble_system(&m, 1).unwrap();
        let tab = transient_moments(&sys, 5.0, TransientMethod::ClosedForm, &cfg()).unwrap();
        let h = 1e-4;
        for i in 0..2 {
            let mut sp = vec![0.0; 2];
            let mut sm = vec![0.0; 2];
            sp[i] = h;
            sm[i] = -h;
            let zp = zeta(&m, 5.0, &TransformArgs::new(sp, vec![1.0; 2]).unwrap(), &cfg()).unwrap();
            let zm = zeta(&m, 5.0, &TransformArgs::new(sm, vec![1.0; 2]).unwrap(), &cfg()).unwrap();
            let el = -(zp - zm) / (2.0 * h);
            let want = tab.value(&MomentIndex::lambda(2, i)).unwrap();
            assert!((el - want).abs() < 1e-5 * want, "{el} vs {want}");

            let mut zp = vec![1.0; 2];
            let mut zm = vec![1.0; 2];
            zp[i] += h;
            zm[i] -= h;
            let fp = zeta(&m, 5.0, &TransformArgs::new(vec![0.0; 2], zp).unwrap(), &cfg()).unwrap();
            let fm = zeta(&m, 5.0, &TransformArgs::new(vec![0.0; 2], zm).unwrap(), &cfg()).unwrap();
            let eq = (fp - fm) / (2.0 * h);
            let want = tab.value(&MomentIndex::q(2, i)).unwrap();
            assert!((eq - want).abs() < 1e-5 * want, "{eq} vs {want}");
        }
    }

    #[test]
    fn z_below_one_is_a_probability() {
        let m = presets::bivariate::<f64>();
        let v = zeta(&m, 5.0, &TransformArgs::new(vec![0.0; 2], vec![0.9, 1.0]).unwrap(), &cfg()).unwrap();
        assert!(v > 0.0 && v < 1.0);
    }

    #[test]
    fn conditional_reduces_to_unconditional() {
        let m = presets::bivariate::<f64>();
        let args = TransformArgs::new(vec![0.2, 0.1], vec![0.6, 0.8]).unwrap();
        let a = zeta(&m, 3.0, &args, &cfg()).unwrap();
        let b = zeta_conditional(&m, &ConditionalState::initial(&m), 3.0, &args, &cfg()).unwrap();
        assert_eq!(a, b);
        let st = ConditionalState { t0: 1.0, q0: vec![3, 1], lambda0: vec![4.0, 1.0] };
        let one = zeta_conditional(&m, &st, 3.0, &TransformArgs::origin(2), &cfg()).unwrap();
        assert!((one - 1.0).abs() < 1e-15);
        assert!(zeta_conditional(&m, &st, 1.0, &args, &cfg()).is_err());
    }

    #[test]
    fn conditional_mean_shift_from_initial_population() {
        let m = presets::bivariate::<f64>();
        let h = 1e-4;
        let mean_q1 = |q0: Vec<u64>| {
            let st = ConditionalState { t0: 2.0, q0, lambda0: m.lambda_bar().to_vec() };
            let f = |z: f64| {
                let a = TransformArgs::new(vec![0.0; 2], vec![z, 1.0]).unwrap();
                zeta_conditional(&m, &st, 4.0, &a, &cfg()).unwrap()
            };
            (f(1.0 + h) - f(1.0 - h)) / (2.0 * h)
        };
        let diff = mean_q1(vec![5, 0]) - mean_q1(vec![0, 0]);
        assert!((diff - 5.0 * (-2.0f64).exp()).abs() < 1e-6, "{diff}");
    }

    #[test]
    fn two_time_tower_property() {
        let m = presets::bivariate::<f64>();
        let s = [0.3, 0.2];
        let z = [0.7, 0.9];
        let a = zeta_two_time(&m, 1.5, 2.0, &[0.0, 0.0], &[1.0, 1.0], &s, &z, &cfg()).unwrap();
        let b = zeta(&m, 3.5, &TransformArgs::new(s.to_vec(), z.to_vec()).unwrap(), &cfg()).unwrap();
        assert!((a - b).abs() < 1e-7);
        let one = zeta_two_time(&m, 1.5, 2.0, &[0.0; 2], &[1.0; 2], &[0.0; 2], &[1.0; 2], &cfg()).unwrap();
        assert!((one - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_time_with_trivial_late_part_matches_single_time() {
        let m = presets::bivariate::<f64>();
        let r = [0.3, 0.2];
        let y = [0.7, 0.9];
        let a = zeta_two_time(&m, 1.5, 2.0, &r, &y, &[0.0; 2], &[1.0; 2], &cfg()).unwrap();
        let b = zeta(&m, 1.5, &TransformArgs::new(r.to_vec(), y.to_vec()).unwrap(), &cfg()).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn rejects_arguments_outside_domain() {
        assert!(TransformArgs::new(vec![-0.1], vec![1.0]).is_err());
        assert!(TransformArgs::new(vec![0.0], vec![1.2]).is_err());
        assert!(TransformArgs::new(vec![0.0], vec![-1.5]).is_err());
        assert!(TransformArgs::new(vec![-0.04], vec![1.04]).is_ok());
        let m = presets::bivariate::<f64>();
        let bad = TransformArgs::new(vec![0.0; 3], vec![1.0; 3]).unwrap();
        assert!(matches!(zeta(&m, 1.0, &bad, &cfg()), Err(Error::Dimension(_))));
    }
}
