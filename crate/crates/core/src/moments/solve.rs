use nalgebra::{DMatrix, DVector, DVectorView, DVectorViewMut};

use super::index::{enumerate_indices, MomentIndex};
use super::system::{assemble_system, MomentSystem};
use super::table::{Horizon, MomentTable};
use crate::error::{Error, Result};
use crate::model::{check_stability, HawkesModel};
use crate::numerics::{integrate_ode, solve_exact, FixedExpm, solve_linear, solve_sylvester, OdeConfig};
use crate::scalar::{Real, Scalar};

/// How transient moments are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransientMethod {
    /// Integrate `x' = F x + b`.
    Ode,
    /// `x(t) = e^{tF} x0 - F^{-1} (I - e^{tF}) b`; needs `F` invertible.
    ClosedForm,
    /// Closed form, falling back to integration when `F` is singular.
    Auto,
}

fn table<T: Scalar>(sys: &MomentSystem<T>, horizon: Horizon, x: &DVector<T>) -> MomentTable<T> {
    MomentTable::new(horizon, sys.indices.clone(), x.iter().cloned().collect())
}

/// Solves the moment ODE by integration; also used for long runs.
pub fn integrate_system<T: Real>(sys: &MomentSystem<T>, t: T, cfg: &OdeConfig) -> Result<DVector<T>> {
    let n = sys.dim();
    let f = &sys.f;
    let b = &sys.b;
    let x = integrate_ode(
        |_, y: &[T], dy: &mut [T]| {
            let yv = DVectorView::from_slice(y, n);
            let mut out = DVectorViewMut::from_slice(dy, n);
            out.copy_from(b);
            out.gemv(T::one(), f, &yv, T::one());
        },
        sys.x0.as_slice(),
        T::zero(),
        t,
        cfg,
    )?;
    Ok(DVector::from_vec(x))
}

/// Horizon covered by one-off closed-form evaluations at fixed cost.
pub const DEFAULT_HORIZON: f64 = 1000.0;

/// Affine matrix-exponential solution `x(t) = e^{tF}(x0 + F^{-1}b) - F^{-1}b`
/// with `F^{-1}b` factored once. Every `t` in `[0, horizon]` costs the same.
#[derive(Debug, Clone)]
pub struct ClosedFormEvaluator<T: nalgebra::Scalar> {
    expm: FixedExpm<T>,
    shift: DVector<T>,
    start: DVector<T>,
}

impl<T: Real> ClosedFormEvaluator<T> {
    pub fn new(sys: &MomentSystem<T>, horizon: T) -> Result<Self> {
        let fb = solve_linear(&sys.f, &DMatrix::from_column_slice(sys.dim(), 1, sys.b.as_slice()))?;
        let shift = fb.column(0).into_owned();
        let start = &sys.x0 + &shift;
        Ok(Self { expm: FixedExpm::new(&sys.f, horizon)?, shift, start })
    }

    pub fn horizon(&self) -> T {
        self.expm.horizon()
    }

    /// Squarings per evaluation; the same for every `t`.
    pub fn squarings(&self) -> u32 {
        self.expm.squarings()
    }

    pub fn eval(&self, t: T) -> Result<DVector<T>> {
        Ok(self.expm.eval(t)? * &self.start - &self.shift)
    }
}

/// Affine matrix-exponential solution at time `t`.
pub fn closed_form_system<T: Real>(sys: &MomentSystem<T>, t: T) -> Result<DVector<T>> {
    let horizon = if t > T::lit(DEFAULT_HORIZON) { t } else { T::lit(DEFAULT_HORIZON) };
    ClosedFormEvaluator::new(sys, horizon)?.eval(t)
}

/// Transient reduced moments at time `t`.
pub fn transient_moments<T: Real>(
    sys: &MomentSystem<T>,
    t: T,
    method: TransientMethod,
    cfg: &OdeConfig,
) -> Result<MomentTable<T>> {
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::InvalidArgument("time must be finite and >= 0".into()));
    }
    let horizon = Horizon::At(t.approx());
    if t.is_zero() {
        return Ok(table(sys, horizon, &sys.x0));
    }
    let x = match method {
        TransientMethod::Ode => integrate_system(sys, t, cfg)?,
        TransientMethod::ClosedForm => closed_form_system(sys, t)?,
        TransientMethod::Auto => match closed_form_system(sys, t) {
            Ok(x) => x,
            Err(Error::Singular { .. }) => integrate_system(sys, t, cfg)?,
            Err(e) => return Err(e),
        },
    };
    Ok(table(sys, horizon, &x))
}

fn stationary_preconditions<T: Scalar>(m: &HawkesModel<T>) -> Result<()> {
    let st = check_stability(m)?;
    if !st.stable {
        return Err(Error::Unstable { rho: st.rho });
    }
    if m.mu().iter().any(|x| x.is_zero()) {
        return Err(Error::InvalidArgument(
            "stationary moments of Q need every departure rate mu_i > 0".into(),
        ));
    }
    Ok(())
}

/// Stationary reduced moments up to order `n`: `x = -F^{-1} b`.
pub fn stationary_moments<T: Real>(m: &HawkesModel<T>, n: u32) -> Result<MomentTable<T>> {
    stationary_preconditions(m)?;
    let sys = assemble_system(m, n)?;
    stationary_from_system(&sys)
}

pub fn stationary_from_system<T: Real>(sys: &MomentSystem<T>) -> Result<MomentTable<T>> {
    let x = solve_linear(&sys.f, &DMatrix::from_column_slice(sys.dim(), 1, sys.b.as_slice()))?;
    let x = -x.column(0).into_owned();
    Ok(table(sys, Horizon::Stationary, &x))
}

/// Stationary moments in exact arithmetic (e.g. over rationals).
pub fn stationary_moments_exact<T: Scalar>(m: &HawkesModel<T>, n: u32) -> Result<MomentTable<T>> {
    stationary_preconditions(m)?;
    let sys = assemble_system(m, n)?;
    let x = solve_exact(&sys.f, &DMatrix::from_column_slice(sys.dim(), 1, sys.b.as_slice()))?;
    let x: DVector<T> = x.column(0).map(|v| -v);
    Ok(table(&sys, Horizon::Stationary, &x))
}

/// Second-order stationary moments from three Sylvester equations, an
/// independent route to `stationary_moments(m, 2)`.
pub fn stationary_second_order_sylvester<T: Real>(m: &HawkesModel<T>) -> Result<MomentTable<T>> {
    stationary_preconditions(m)?;
    let d = m.d();
    let eb = m.mean_matrix();
    let d_alpha = DMatrix::from_diagonal(&DVector::from_column_slice(m.alpha()));
    let d_mu = DMatrix::from_diagonal(&DVector::from_column_slice(m.mu()));
    let lb = DVector::from_column_slice(m.lambda_bar());
    let c = d_alpha.clone() * &lb;
    let a = &eb - &d_alpha;

    let el = -solve_linear(&a, &DMatrix::from_column_slice(d, 1, c.as_slice()))?.column(0).into_owned();
    let eq = DVector::from_fn(d, |i, _| el[i] / m.mu()[i]);

    let mut s = DMatrix::zeros(d, d);
    for i in 0..d {
        for k in 0..d {
            let mut acc = T::zero();
            for j in 0..d {
                let mut e = vec![0usize; d];
                e[i] += 1;
                e[k] += 1;
                acc += m.joint_mark_moment(j, &e)? * el[j];
            }
            s[(i, k)] = acc;
        }
    }
    let rhs = -(s + &d_alpha * &lb * el.transpose() + &el * lb.transpose() * &d_alpha);
    let lam2 = solve_sylvester(&a, &a.transpose(), &rhs)?;
    let rhs = -(&lam2 + &c * eq.transpose() + &eb * DMatrix::from_diagonal(&el));
    let x = solve_sylvester(&a, &(-&d_mu), &rhs)?;
    let rhs = -(&x + x.transpose());
    let q2 = solve_sylvester(&(-&d_mu), &(-&d_mu), &rhs)?;

    let indices = enumerate_indices(d, 2);
    let mut values = Vec::with_capacity(indices.len());
    for idx in &indices {
        let lam: Vec<usize> = expand(&idx.n_lambda);
        let q: Vec<usize> = expand(&idx.n_q);
        let v = match (lam.as_slice(), q.as_slice()) {
            ([i], []) => el[*i],
            ([], [i]) => eq[*i],
            ([i, k], []) => lam2[(*i, *k)],
            ([i], [k]) => x[(*i, *k)],
            ([], [i, k]) => q2[(*i, *k)],
            _ => unreachable!("order is at most two"),
        };
        values.push(v);
    }
    Ok(MomentTable::new(Horizon::Stationary, indices, values))
}

fn expand(e: &[u32]) -> Vec<usize> {
    e.iter().enumerate().flat_map(|(i, &k)| std::iter::repeat_n(i, k as usize)).collect()
}

/// Convenience lookup of `E[λ_i]` and `E[Q_i]` vectors from a table.
pub fn first_order_means<T: Scalar>(t: &MomentTable<T>, d: usize) -> Result<(Vec<T>, Vec<T>)> {
    let l = (0..d).map(|i| t.value(&MomentIndex::lambda(d, i))).collect::<Result<Vec<_>>>()?;
    let q = (0..d).map(|i| t.value(&MomentIndex::q(d, i))).collect::<Result<Vec<_>>>()?;
    Ok((l, q))
}
