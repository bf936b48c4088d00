//! Nearly unstable symmetric models: the stationary transform of `λ` and its
//! Gamma limit as `θ ↑ 1`.
//!
//! The symmetric model gives every intensity the same jump at every event, so
//! all `λ_i` coincide and the stationary transform depends on `s` only
//! through `s̄ = Σ s_i`.

use crate::error::{Error, Result};
use crate::model::{symmetric_theta_sigma, HawkesModel, MarkDependence, MarkLaw, SymmetricModel};
use crate::moments::{stationary_moments, MomentIndex};
use crate::numerics::quad_adaptive;
use crate::scalar::Real;

/// Below this the integrand is replaced by its limit at zero.
const SMALL_U: f64 = 1e-8;

/// `Γ(shape, rate)` with Laplace transform `(rate / (rate + s))^shape`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaLimit<T> {
    pub shape: T,
    pub rate: T,
}

impl<T: Real> GammaLimit<T> {
    /// Shape `σλ̄`, rate `σ`.
    pub fn of(m: &SymmetricModel<T>) -> Result<Self> {
        let (_, sigma) = symmetric_theta_sigma(m)?;
        Ok(Self { shape: sigma * m.lambda_bar, rate: sigma })
    }

    pub fn mean(&self) -> T {
        self.shape / self.rate
    }

    pub fn variance(&self) -> T {
        self.shape / (self.rate * self.rate)
    }

    pub fn laplace(&self, s: T) -> T {
        (self.rate / (self.rate + s)).powf(self.shape)
    }
}

/// `1 - E[exp(-uB)]`, without cancellation for small `u`.
fn deficit<T: Real>(law: &MarkLaw<T>, u: T) -> T {
    match law {
        MarkLaw::Exponential { mean } => *mean * u / (T::one() + *mean * u),
        MarkLaw::Deterministic { value } => -(-*value * u).exp_m1(),
        MarkLaw::Zero => T::zero(),
    }
}

fn check_args<T: Real>(m: &SymmetricModel<T>, s: &[T]) -> Result<T> {
    if s.len() != m.d {
        return Err(Error::Dimension(format!("s has length {}, model has d = {}", s.len(), m.d)));
    }
    if s.iter().any(|x| !x.is_finite() || *x < T::zero()) {
        return Err(Error::Domain("s must be finite and nonnegative".into()));
    }
    Ok(s.iter().fold(T::zero(), |a, &b| a + b))
}

/// `E[exp(-sᵀλ)]` under the stationary law.
pub fn stationary_laplace_symmetric<T: Real>(m: &SymmetricModel<T>, s: &[T], tol: T) -> Result<T> {
    let sbar = check_args(m, s)?;
    let mean_sum = m.marks.iter().fold(T::zero(), |a, b| a + b.mean());
    let gap = m.alpha - mean_sum;
    if !(gap > T::zero()) {
        let theta = if m.alpha > T::zero() { (mean_sum / m.alpha).approx() } else { f64::INFINITY };
        return Err(Error::Unstable { rho: theta });
    }
    let limit = T::one() / gap;
    let small = T::lit(SMALL_U);
    let integrand = |u: T| {
        if u < small {
            return limit;
        }
        let lost = m.marks.iter().fold(T::zero(), |a, b| a + deficit(b, u));
        u / (m.alpha * u - lost)
    };
    let integral = quad_adaptive(integrand, T::zero(), sbar, tol)?;
    Ok((-m.alpha * m.lambda_bar * integral).exp())
}

/// `(σ/(σ+s̄))^{σλ̄}`.
pub fn gamma_limit_transform<T: Real>(m: &SymmetricModel<T>, s: &[T]) -> Result<T> {
    let sbar = check_args(m, s)?;
    Ok(GammaLimit::of(m)?.laplace(sbar))
}

/// `d` components, common `α` and `λ̄`, exponential jumps of mean `θα/d`.
pub fn exponential_family<T: Real>(d: usize, alpha: T, lambda_bar: T, theta: T) -> Result<SymmetricModel<T>> {
    if d == 0 {
        return Err(Error::InvalidModel("need d >= 1".into()));
    }
    let mean = theta * alpha / T::count(d as u64);
    SymmetricModel::new(alpha, lambda_bar, vec![MarkLaw::exponential(mean); d])
}

/// The symmetric description of `m`, if it has one: common `α` and `λ̄`,
/// shared column jumps.
pub fn as_symmetric<T: Real>(m: &HawkesModel<T>) -> Result<SymmetricModel<T>> {
    let d = m.d();
    let reject = |why: &str| Err(Error::InvalidModel(format!("model is not symmetric: {why}")));
    if m.alpha().iter().any(|&a| a != m.alpha()[0]) {
        return reject("decay rates differ");
    }
    if m.lambda_bar().iter().any(|&l| l != m.lambda_bar()[0]) {
        return reject("base rates differ");
    }
    if d > 1 && m.dependence() != MarkDependence::SharedColumn {
        return reject("jumps must use shared_column dependence");
    }
    SymmetricModel::new(m.alpha()[0], m.lambda_bar()[0], m.marks()[0].clone())
}

fn scale_law<T: Real>(law: &MarkLaw<T>, c: T) -> MarkLaw<T> {
    match law {
        MarkLaw::Exponential { mean } => MarkLaw::exponential(*mean * c),
        MarkLaw::Deterministic { value } => MarkLaw::deterministic(*value * c),
        MarkLaw::Zero => MarkLaw::Zero,
    }
}

/// Family through `base` obtained by scaling every jump by a common factor,
/// so that jump laws keep their shape while `θ` moves.
pub fn scaled_family<T: Real>(base: &SymmetricModel<T>) -> Result<impl Fn(T) -> Result<SymmetricModel<T>> + '_> {
    let (theta0, _) = symmetric_theta_sigma(base)?;
    if !(theta0 > T::zero()) {
        return Err(Error::InvalidModel("cannot rescale a model without jumps".into()));
    }
    Ok(move |theta: T| {
        let c = theta / theta0;
        SymmetricModel::new(base.alpha, base.lambda_bar, base.marks.iter().map(|l| scale_law(l, c)).collect())
    })
}

/// One `θ` of a convergence sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub theta: f64,
    /// `σ` of the model at this `θ`.
    pub sigma: f64,
    /// `sup_s̄ |T(s(1-θ)) - (σ*/(σ*+s̄))^{σ*λ̄}|` over the grid, `σ*` taken at `θ = 1`.
    pub distance: f64,
    /// Per grid point, the same difference.
    pub differences: Vec<f64>,
    /// `(1-θ)² Var(λ_1)` from the stationary moment engine.
    pub rescaled_variance: f64,
}

/// Distance to the Gamma limit along a family of symmetric models.
///
/// The limit uses `σ` of `family(1)`, the member at criticality, so the
/// target does not move with `θ`. Every grid point puts all of `s̄` on the
/// first coordinate; the transform depends on `s̄` only.
pub fn convergence_sweep<T, F>(family: F, thetas: &[T], s_grid: &[T], tol: T) -> Result<Vec<SweepRow>>
where
    T: Real,
    F: Fn(T) -> Result<SymmetricModel<T>>,
{
    if thetas.iter().any(|&t| !(t > T::zero() && t < T::one())) {
        return Err(Error::InvalidArgument("every theta must lie in (0, 1)".into()));
    }
    let limit = GammaLimit::of(&family(T::one())?)?;
    let mut rows = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let m = family(theta)?;
        let (th, sigma) = symmetric_theta_sigma(&m)?;
        let scale = T::one() - th;
        let mut differences = Vec::with_capacity(s_grid.len());
        for &sb in s_grid {
            let mut s = vec![T::zero(); m.d];
            s[0] = sb * scale;
            let v = stationary_laplace_symmetric(&m, &s, tol)?;
            differences.push((v - limit.laplace(sb)).approx());
        }
        let distance = differences.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let tab = stationary_moments(&m.to_hawkes(vec![T::one(); m.d])?, 2)?;
        let e1 = tab.value(&MomentIndex::lambda(m.d, 0))?;
        let mut sq = vec![0; m.d];
        sq[0] = 2;
        let e2 = tab.value(&MomentIndex::new(sq, vec![0; m.d]))?;
        let var = e2 - e1 * e1;
        rows.push(SweepRow {
            theta: th.approx(),
            sigma: sigma.approx(),
            distance,
            differences,
            rescaled_variance: (scale * scale * var).approx(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(theta: f64) -> SymmetricModel<f64> {
        exponential_family(2, 1.0, 1.0, theta).unwrap()
    }

    #[test]
    fn origin_and_poisson_limit() {
        let m = fam(0.5);
        assert_eq!(stationary_laplace_symmetric(&m, &[0.0, 0.0], 1e-12).unwrap(), 1.0);
        let flat = SymmetricModel::new(2.0, 0.7, vec![MarkLaw::Zero]).unwrap();
        let v = stationary_laplace_symmetric(&flat, &[1.3], 1e-12).unwrap();
        assert!((v - (-0.7f64 * 1.3).exp()).abs() < 1e-12);
    }

    #[test]
    fn first_derivative_is_stationary_mean() {
        let m = fam(0.6);
        let h = 1e-5;
        let up = stationary_laplace_symmetric(&m, &[h, 0.0], 1e-13).unwrap();
        let down = stationary_laplace_symmetric(&m, &[2.0 * h, 0.0], 1e-13).unwrap();
        // One-sided second-order difference at 0.
        let d = (-3.0 + 4.0 * up - down) / (2.0 * h);
        let tab = stationary_moments(&m.to_hawkes(vec![1.0, 1.0]).unwrap(), 1).unwrap();
        let mean = tab.value(&MomentIndex::lambda(2, 0)).unwrap();
        assert!((-d - mean).abs() < 1e-6 * mean, "{} vs {mean}", -d);
        assert!((mean - 1.0 / (1.0 - 0.6)).abs() < 1e-12);
    }

    #[test]
    fn deterministic_marks_are_accurate_near_zero() {
        let m = SymmetricModel::new(1.0, 1.0, vec![MarkLaw::deterministic(0.3), MarkLaw::deterministic(0.2)]).unwrap();
        let v = stationary_laplace_symmetric(&m, &[1e-6, 0.0], 1e-14).unwrap();
        assert!((v - (-1e-6f64 / 0.5).exp()).abs() < 1e-12);
    }

    #[test]
    fn rejects_critical_and_bad_args() {
        let m = exponential_family(2, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(stationary_laplace_symmetric(&m, &[1.0, 0.0], 1e-10), Err(Error::Unstable { .. })));
        let m = fam(0.5);
        assert!(stationary_laplace_symmetric(&m, &[-1.0, 0.0], 1e-10).is_err());
        assert!(stationary_laplace_symmetric(&m, &[1.0], 1e-10).is_err());
    }

    #[test]
    fn symmetric_round_trip_and_scaling() {
        let m = fam(0.5);
        let h = m.to_hawkes(vec![1.0, 2.0]).unwrap();
        assert_eq!(as_symmetric(&h).unwrap(), m);
        assert!(as_symmetric(&crate::presets::bivariate::<f64>()).is_err());
        let f = scaled_family(&m).unwrap();
        let m9 = f(0.9).unwrap();
        assert!((symmetric_theta_sigma(&m9).unwrap().0 - 0.9).abs() < 1e-15);
        assert!((m9.marks[0].mean() - fam(0.9).marks[0].mean()).abs() < 1e-15);
    }

    #[test]
    fn gamma_moments() {
        let m = fam(0.9);
        let g = GammaLimit::of(&m).unwrap();
        let (_, sigma) = symmetric_theta_sigma(&m).unwrap();
        assert!((g.mean() - 1.0).abs() < 1e-15);
        assert!((g.variance() - 1.0 / sigma).abs() < 1e-15);
        assert_eq!(gamma_limit_transform(&m, &[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn sweep_converges() {
        let grid: Vec<f64> = (0..=20).map(|k| k as f64 * 0.25).collect();
        let rows = convergence_sweep(|t| exponential_family(2, 1.0, 1.0, t), &[0.5, 0.9, 0.99], &grid, 1e-12).unwrap();
        assert!(rows[0].distance > rows[1].distance && rows[1].distance > rows[2].distance);
        assert!(rows[2].distance <= 0.02);
        for r in &rows {
            assert_eq!(r.differences[0], 0.0);
            // Exact at every θ for exponential jumps; tends to λ̄/σ* = 1/2.
            assert!((r.rescaled_variance - 1.0 / r.sigma).abs() < 1e-8, "{r:?}");
        }
        assert!((rows[2].rescaled_variance - 0.5).abs() < (rows[1].rescaled_variance - 0.5).abs());
    }
}
