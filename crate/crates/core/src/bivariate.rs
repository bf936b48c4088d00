//! Explicit constructions for two components.
//!
//! For `d = 2` the order-`n` block `Ψ^(k, n-k)` (moments with `k` factors of
//! `Q`) evolves as
//!
//! ```text
//! d/dt Ψ^(k,n-k) = M^(k,n-k) Ψ^(k,n-k) + K^(k,n-k) Ψ^(k-1,n-k+1) + L^(k,n-k) (Ψ^(1), .., Ψ^(n-1))
//! ```
//!
//! `M` is a direct sum of tridiagonal matrices and is built here from its
//! closed description. `K` and `L` are sliced out of the generator assembled
//! by [`crate::moments::assemble_system`], so there is a single source of
//! truth for the coefficients.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{check_stability, HawkesModel};
use crate::moments::{assemble_system, dimension, transient_moments, MomentSystem, TransientMethod};
use crate::numerics::{
    gauss_legendre, integrate_ode_dense, mat_exp, solve_exact, OdeConfig, Trajectory,
};
use crate::scalar::{Real, Scalar};

fn require_bivariate<T: Scalar>(m: &HawkesModel<T>) -> Result<()> {
    if m.d() != 2 {
        return Err(Error::Dimension(format!("expected a bivariate model, got d = {}", m.d())));
    }
    Ok(())
}

fn check_block(k: u32, n: u32) -> Result<()> {
    if n == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 0 <= k <= n and n >= 1, got k={k}, n={n}")));
    }
    Ok(())
}

/// A tridiagonal matrix by its three diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagSpec<T> {
    pub sub: Vec<T>,
    pub diag: Vec<T>,
    pub sup: Vec<T>,
}

impl<T: Scalar> TridiagSpec<T> {
    pub fn new(sub: Vec<T>, diag: Vec<T>, sup: Vec<T>) -> Result<Self> {
        let n = diag.len();
        if n == 0 || sub.len() + 1 != n || sup.len() + 1 != n {
            return Err(Error::Dimension(format!(
                "tridiagonal lengths {}/{}/{} are inconsistent",
                sub.len(),
                n,
                sup.len()
            )));
        }
        Ok(Self { sub, diag, sup })
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn to_matrix(&self) -> DMatrix<T> {
        let n = self.size();
        let mut a = DMatrix::from_element(n, n, T::zero());
        for i in 0..n {
            a[(i, i)] = self.diag[i].clone();
            if i + 1 < n {
                a[(i, i + 1)] = self.sup[i].clone();
                a[(i + 1, i)] = self.sub[i].clone();
            }
        }
        a
    }
}

/// Position of each `(k, n-k)` block inside `Ψ^(n)` for `d = 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    pub order: u32,
    pub offsets: Vec<usize>,
    pub sizes: Vec<usize>,
}

impl BlockLayout {
    pub fn new(order: u32) -> Self {
        let mut offsets = Vec::with_capacity(order as usize + 1);
        let mut sizes = Vec::with_capacity(order as usize + 1);
        let mut at = 0;
        for k in 0..=order as usize {
            let size = (k + 1) * (order as usize - k + 1);
            offsets.push(at);
            sizes.push(size);
            at += size;
        }
        Self { order, offsets, sizes }
    }

    pub fn len(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn range(&self, k: u32) -> std::ops::Range<usize> {
        let k = k as usize;
        self.offsets[k]..self.offsets[k] + self.sizes[k]
    }
}

fn alpha_bar<T: Scalar>(m: &HawkesModel<T>) -> [T; 2] {
    let eb = m.mean_matrix();
    [m.alpha()[0].clone() - eb[(0, 0)].clone(), m.alpha()[1].clone() - eb[(1, 1)].clone()]
}

/// The tridiagonal piece of `M^(k,n-k)` for the `Q` exponents `n_Q`.
pub fn tridiag_block<T: Scalar>(m: &HawkesModel<T>, n_q: [u32; 2], p: u32) -> Result<TridiagSpec<T>> {
    require_bivariate(m)?;
    let eb = m.mean_matrix();
    let ab = alpha_bar(m);
    let mu = m.mu();
    let q_part = -(T::count(n_q[0] as u64) * mu[0].clone() + T::count(n_q[1] as u64) * mu[1].clone());
    let diag = (0..=p)
        .map(|i| {
            let l1 = T::count((p - i) as u64);
            let l2 = T::count(i as u64);
            q_part.clone() - l1 * ab[0].clone() - l2 * ab[1].clone()
        })
        .collect();
    let sub = (1..=p).map(|i| T::count(i as u64) * eb[(1, 0)].clone()).collect();
    let sup = (1..=p).rev().map(|i| T::count(i as u64) * eb[(0, 1)].clone()).collect();
    TridiagSpec::new(sub, diag, sup)
}

/// `M^(k,n-k)`: direct sum over `n_Q = (k-j, j)`, `j = 0..=k`, of
/// tridiagonal blocks acting on the `λ` exponents.
pub fn build_m<T: Scalar>(m: &HawkesModel<T>, k: u32, n: u32) -> Result<DMatrix<T>> {
    require_bivariate(m)?;
    check_block(k, n)?;
    let p = n - k;
    let w = (p + 1) as usize;
    let size = (k as usize + 1) * w;
    let mut out = DMatrix::from_element(size, size, T::zero());
    for j in 0..=k {
        let blk = tridiag_block(m, [k - j, j], p)?.to_matrix();
        let at = j as usize * w;
        out.view_mut((at, at), (w, w)).copy_from(&blk);
    }
    Ok(out)
}

/// Blocks of the stacked generator, sliced from one assembled system.
#[derive(Debug, Clone)]
pub struct BlockSystem<T: nalgebra::Scalar> {
    sys: MomentSystem<T>,
}

impl<T: Scalar> BlockSystem<T> {
    pub fn new(m: &HawkesModel<T>, n: u32) -> Result<Self> {
        require_bivariate(m)?;
        Ok(Self { sys: assemble_system(m, n)? })
    }

    pub fn system(&self) -> &MomentSystem<T> {
        &self.sys
    }

    pub fn order(&self) -> u32 {
        self.sys.order
    }

    /// Row range of `Ψ^(k,n-k)` in the stack.
    pub fn range(&self, k: u32, n: u32) -> std::ops::Range<usize> {
        self.sys.block_range(k, n)
    }

    /// Number of stacked moments of order below `n`.
    pub fn lower_len(&self, n: u32) -> usize {
        (1..n).map(|o| dimension(2, o)).sum()
    }

    fn slice(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> DMatrix<T> {
        self.sys.f.view((rows.start, cols.start), (rows.len(), cols.len())).into_owned()
    }

    fn check(&self, k: u32, n: u32) -> Result<()> {
        check_block(k, n)?;
        if n > self.sys.order {
            return Err(Error::InvalidArgument(format!(
                "order {n} exceeds the assembled order {}",
                self.sys.order
            )));
        }
        Ok(())
    }

    /// Diagonal block as it appears in the assembled generator.
    pub fn m(&self, k: u32, n: u32) -> Result<DMatrix<T>> {
        self.check(k, n)?;
        let r = self.range(k, n);
        Ok(self.slice(r.clone(), r))
    }

    /// Coupling of `Ψ^(k,n-k)` to `Ψ^(k-1,n-k+1)`; empty rows when `k = 0`.
    pub fn k(&self, k: u32, n: u32) -> Result<DMatrix<T>> {
        self.check(k, n)?;
        let r = self.range(k, n);
        if k == 0 {
            return Ok(DMatrix::from_element(r.len(), 0, T::zero()));
        }
        Ok(self.slice(r, self.range(k - 1, n)))
    }

    /// Coupling of `Ψ^(k,n-k)` to every moment of order below `n`.
    pub fn l(&self, k: u32, n: u32) -> Result<DMatrix<T>> {
        self.check(k, n)?;
        Ok(self.slice(self.range(k, n), 0..self.lower_len(n)))
    }

    /// Constant forcing of the block (nonzero only for `Ψ^(0,1)`).
    pub fn forcing(&self, k: u32, n: u32) -> Result<DVector<T>> {
        self.check(k, n)?;
        Ok(self.sys.b.rows_range(self.range(k, n)).into_owned())
    }

    pub fn initial(&self, k: u32, n: u32) -> Result<DVector<T>> {
        self.check(k, n)?;
        Ok(self.sys.x0.rows_range(self.range(k, n)).into_owned())
    }
}

pub fn build_k<T: Scalar>(m: &HawkesModel<T>, k: u32, n: u32) -> Result<DMatrix<T>> {
    check_block(k, n)?;
    BlockSystem::new(m, n)?.k(k, n)
}

pub fn build_l<T: Scalar>(m: &HawkesModel<T>, k: u32, n: u32) -> Result<DMatrix<T>> {
    check_block(k, n)?;
    BlockSystem::new(m, n)?.l(k, n)
}

/// The nested block lower-triangular generator `F_n` and forcing, built
/// from `M` (tridiagonal construction), `K` and `L`.
pub fn nested_block_matrix<T: Scalar>(m: &HawkesModel<T>, n: u32) -> Result<(DMatrix<T>, DVector<T>)> {
    let bs = BlockSystem::new(m, n)?;
    let total = bs.system().dim();
    let mut f = DMatrix::from_element(total, total, T::zero());
    for order in 1..=n {
        let lower = bs.lower_len(order);
        for k in 0..=order {
            let r = bs.range(k, order);
            f.view_mut((r.start, r.start), (r.len(), r.len())).copy_from(&build_m(m, k, order)?);
            if k > 0 {
                let rp = bs.range(k - 1, order);
                f.view_mut((r.start, rp.start), (r.len(), rp.len())).copy_from(&bs.k(k, order)?);
            }
            f.view_mut((r.start, 0), (r.len(), lower)).copy_from(&bs.l(k, order)?);
        }
    }
    Ok((f, bs.system().b.clone()))
}

fn stationary_checks<T: Scalar>(m: &HawkesModel<T>) -> Result<()> {
    let st = check_stability(m)?;
    if !st.stable {
        return Err(Error::Unstable { rho: st.rho });
    }
    if m.mu().iter().any(|x| x.is_zero()) {
        return Err(Error::InvalidArgument("stationary Q moments need mu_i > 0".into()));
    }
    Ok(())
}

/// Stationary `(Ψ^(1), .., Ψ^(n))` by solving one block at a time,
/// `Ψ^(k,n-k) = -M^{-1}(K Ψ^(k-1,n-k+1) + L · lower)`.
pub fn psi_recursive_stationary<T: Scalar>(m: &HawkesModel<T>, n: u32) -> Result<DVector<T>> {
    require_bivariate(m)?;
    stationary_checks(m)?;
    let bs = BlockSystem::new(m, n)?;
    let mut x = DVector::from_element(bs.system().dim(), T::zero());
    for order in 1..=n {
        let lower_len = bs.lower_len(order);
        for k in 0..=order {
            let r = bs.range(k, order);
            let mut rhs = bs.forcing(k, order)?;
            if lower_len > 0 {
                rhs += bs.l(k, order)? * x.rows(0, lower_len);
            }
            if k > 0 {
                let rp = bs.range(k - 1, order);
                rhs += bs.k(k, order)? * x.rows(rp.start, rp.len());
            }
            let neg = DMatrix::from_column_slice(r.len(), 1, rhs.map(|v| -v).as_slice());
            let sol = solve_exact(&build_m(m, k, order)?, &neg)?;
            x.rows_mut(r.start, r.len()).copy_from(&sol.column(0));
        }
    }
    Ok(x)
}

/// Transient `(Ψ^(1), .., Ψ^(n))` at `t`, one block at a time.
///
/// Each block ODE is integrated with dense output so later blocks can be
/// forced by it. The reported value comes from variation of constants,
/// `e^{tM} Ψ_0 + ∫_0^t e^{(t-s)M} g(s) ds`, with composite Gauss–Legendre
/// quadrature over the dense forcing `g`.
pub fn psi_recursive_transient<T: Real>(
    m: &HawkesModel<T>,
    n: u32,
    t: T,
    cfg: &OdeConfig,
) -> Result<DVector<T>> {
    require_bivariate(m)?;
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::InvalidArgument("time must be finite and >= 0".into()));
    }
    let bs = BlockSystem::new(m, n)?;
    let dim = bs.system().dim();
    let mut x = DVector::from_element(dim, T::zero());
    let mut paths: Vec<(std::ops::Range<usize>, Trajectory<T>)> = Vec::new();

    for order in 1..=n {
        let lower_len = bs.lower_len(order);
        for k in 0..=order {
            let r = bs.range(k, order);
            let mm = build_m(m, k, order)?;
            let kk = bs.k(k, order)?;
            let ll = bs.l(k, order)?;
            let b = bs.forcing(k, order)?;
            let x0 = bs.initial(k, order)?;
            let prev = if k > 0 { Some(bs.range(k - 1, order)) } else { None };

            let mut buf = vec![T::zero(); dim];
            let mut forcing = |s: T, out: &mut DVector<T>| {
                for (rg, tr) in &paths {
                    tr.eval_into(s, &mut buf[rg.clone()]);
                }
                out.copy_from(&b);
                if lower_len > 0 {
                    let lo = DVector::from_column_slice(&buf[..lower_len]);
                    out.gemv(T::one(), &ll, &lo, T::one());
                }
                if let Some(rp) = &prev {
                    let pv = DVector::from_column_slice(&buf[rp.clone()]);
                    out.gemv(T::one(), &kk, &pv, T::one());
                }
            };

            let len = r.len();
            let mut g = DVector::from_element(len, T::zero());
            let traj = integrate_ode_dense(
                |s, y: &[T], dy: &mut [T]| {
                    forcing(s, &mut g);
                    let yv = DVector::from_column_slice(y);
                    let v = &mm * yv + &g;
                    dy.copy_from_slice(v.as_slice());
                },
                x0.as_slice(),
                T::zero(),
                t,
                cfg,
            )?;

            let value = variation_of_constants(&mm, &x0, t, len, &mut forcing)?;
            x.rows_mut(r.start, len).copy_from(&value);
            paths.push((r, traj));
        }
    }
    Ok(x)
}

const NODES_PER_UNIT: usize = 32;
const MAX_REFINEMENTS: u32 = 6;

fn variation_of_constants<T: Real>(
    mm: &DMatrix<T>,
    x0: &DVector<T>,
    t: T,
    len: usize,
    forcing: &mut impl FnMut(T, &mut DVector<T>),
) -> Result<DVector<T>> {
    let base = mat_exp(mm, t)? * x0;
    if t.is_zero() {
        return Ok(base);
    }
    let (nodes, weights) = gauss_legendre::<T>(NODES_PER_UNIT);
    let mut panels = (t.approx().ceil() as usize).max(1);
    let mut g = DVector::from_element(len, T::zero());
    let mut integrate = |panels: usize| -> Result<DVector<T>> {
        let mut acc = DVector::from_element(len, T::zero());
        let h = t / T::count(panels as u64);
        let half = h * T::lit(0.5);
        for p in 0..panels {
            let mid = h * T::count(p as u64) + half;
            for (xi, wi) in nodes.iter().zip(&weights) {
                let s = mid + half * *xi;
                forcing(s, &mut g);
                let e = mat_exp(mm, t - s)?;
                acc.gemv(*wi * half, &e, &g, T::one());
            }
        }
        Ok(acc)
    };
    let mut current = integrate(panels)?;
    for _ in 0..MAX_REFINEMENTS {
        panels *= 2;
        let finer = integrate(panels)?;
        let diff = (&finer - &current).amax();
        let scale = finer.amax().max(T::one());
        current = finer;
        if diff <= T::lit(1e-11) * scale {
            break;
        }
    }
    Ok(base + current)
}

/// Explicit first- and second-order results for two components.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForms<T> {
    /// Eigenvalues of `M^(0,1)`, larger first.
    pub eta: [T; 2],
    pub d1: T,
    /// Eigenvalues of `M^(0,2)`: `η₁+η₂`, `2η₁`, `2η₂`.
    pub kappa: [T; 3],
    pub exp_m01: DMatrix<T>,
    pub exp_m02: DMatrix<T>,
    pub mean_lambda: [T; 2],
    pub mean_q: [T; 2],
    /// Stationary `Ψ^(1)`, when it exists.
    pub stationary_first: Option<[T; 4]>,
    /// Stationary `Ψ^(2)`, when it exists.
    pub stationary_second: Option<[T; 10]>,
    /// Set when a repeated eigenvalue forced the numeric fallback.
    pub degenerate: bool,
}

/// `η₁,₂ = ½(-ᾱ₁-ᾱ₂ ± √D₁)` with `D₁ = (ᾱ₁-ᾱ₂)² + 4E[B₁₂]E[B₂₁]`.
pub fn eta<T: Real>(m: &HawkesModel<T>) -> Result<([T; 2], T)> {
    require_bivariate(m)?;
    let eb = m.mean_matrix();
    let [a1, a2] = alpha_bar(m);
    let d1 = (a1 - a2) * (a1 - a2) + T::lit(4.0) * eb[(0, 1)] * eb[(1, 0)];
    let r = d1.max(T::zero()).sqrt();
    let half = T::lit(0.5);
    Ok(([half * (-a1 - a2 + r), half * (-a1 - a2 - r)], d1))
}

/// Eigenvalues of `M^(0,2)`. The matrix acts on symmetric products, so
/// they are the pairwise sums of the `η`'s.
pub fn kappa<T: Real>(m: &HawkesModel<T>) -> Result<[T; 3]> {
    let ([e1, e2], _) = eta(m)?;
    Ok([e1 + e2, e1 + e1, e2 + e2])
}

/// Coefficients `(b, c, d)` of `κ³ + bκ² + cκ + d`, the characteristic
/// polynomial of `M^(0,2)`.
pub fn kappa_cubic<T: Real>(m: &HawkesModel<T>) -> Result<[T; 3]> {
    require_bivariate(m)?;
    let eb = m.mean_matrix();
    let [a1, a2] = alpha_bar(m);
    let bb = eb[(0, 1)] * eb[(1, 0)];
    let s = a1 + a2;
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    Ok([
        T::lit(3.0) * s,
        two * a1 * a1 + T::lit(8.0) * a1 * a2 + two * a2 * a2 - four * bb,
        four * s * (a1 * a2 - bb),
    ])
}

fn degenerate_gap<T: Real>(m: &HawkesModel<T>) -> Result<bool> {
    let ([e1, e2], d1) = eta(m)?;
    let scale = e1.abs().max(e2.abs()).max(T::one());
    Ok(d1 <= T::lit(1e-20) * scale * scale)
}

/// `e^{tM^(0,1)} = ½(e₁+e₂) I + (e₁-e₂)/√D₁ · N`.
pub fn exp_m01<T: Real>(m: &HawkesModel<T>, t: T) -> Result<DMatrix<T>> {
    if degenerate_gap(m)? {
        return mat_exp(&build_m(m, 0, 1)?, t);
    }
    let ([e1, e2], d1) = eta(m)?;
    let (x1, x2) = ((t * e1).exp(), (t * e2).exp());
    let nmat = n_matrix(m);
    let half = T::lit(0.5);
    Ok(DMatrix::identity(2, 2) * (half * (x1 + x2)) + nmat * ((x1 - x2) / d1.sqrt()))
}

fn n_matrix<T: Real>(m: &HawkesModel<T>) -> DMatrix<T> {
    let eb = m.mean_matrix();
    let [a1, a2] = alpha_bar(m);
    let half = T::lit(0.5);
    DMatrix::from_row_slice(2, 2, &[half * (a2 - a1), eb[(0, 1)], eb[(1, 0)], half * (a1 - a2)])
}

/// `e^{tM^(0,2)}` by the Lagrange interpolation formula over the `κ`'s.
pub fn exp_m02<T: Real>(m: &HawkesModel<T>, t: T) -> Result<DMatrix<T>> {
    let mm = build_m(m, 0, 2)?;
    if degenerate_gap(m)? {
        return mat_exp(&mm, t);
    }
    let ks = kappa(m)?;
    let id = DMatrix::<T>::identity(3, 3);
    let mut out = DMatrix::from_element(3, 3, T::zero());
    for l in 0..3 {
        let mut term = id.clone();
        for j in 0..3 {
            if j != l {
                term = term * (&mm - &id * ks[j]) / (ks[l] - ks[j]);
            }
        }
        out += term * (t * ks[l]).exp();
    }
    Ok(out)
}

/// Stationary first moments `(E λ₁, E λ₂, E Q₁, E Q₂)`.
pub fn stationary_first_closed<T: Real>(m: &HawkesModel<T>) -> Result<[T; 4]> {
    require_bivariate(m)?;
    stationary_checks(m)?;
    let eb = m.mean_matrix();
    let [a1, a2] = alpha_bar(m);
    let c = forcing_vector(m);
    let det = a1 * a2 - eb[(0, 1)] * eb[(1, 0)];
    let l1 = (c[0] * a2 + c[1] * eb[(0, 1)]) / det;
    let l2 = (c[1] * a1 + c[0] * eb[(1, 0)]) / det;
    Ok([l1, l2, l1 / m.mu()[0], l2 / m.mu()[1]])
}

fn forcing_vector<T: Real>(m: &HawkesModel<T>) -> [T; 2] {
    [m.alpha()[0] * m.lambda_bar()[0], m.alpha()[1] * m.lambda_bar()[1]]
}

fn solve_small<T: Real>(a: DMatrix<T>, b: DVector<T>) -> Result<DVector<T>> {
    let x = solve_exact(&a, &DMatrix::from_column_slice(b.len(), 1, b.as_slice()))?;
    Ok(x.column(0).into_owned())
}

/// Stationary `Ψ^(2)` from the three block systems written out by hand.
pub fn stationary_second_closed<T: Real>(m: &HawkesModel<T>) -> Result<[T; 10]> {
    let [l1, l2, q1, q2] = stationary_first_closed(m)?;
    let eb = m.mean_matrix();
    let [a1, a2] = alpha_bar(m);
    let [c1, c2] = forcing_vector(m);
    let (b12, b21) = (eb[(0, 1)], eb[(1, 0)]);
    let jm = |j: usize, e: [usize; 2]| m.joint_mark_moment(j, &e);
    let two = T::lit(2.0);

    let a02 = DMatrix::from_row_slice(
        3,
        3,
        &[two * a1, -two * b12, T::zero(), -b21, a1 + a2, -b12, T::zero(), -two * b21, two * a2],
    );
    let r02 = DVector::from_vec(vec![
        l1 * (two * c1 + jm(0, [2, 0])?) + l2 * jm(1, [2, 0])?,
        l1 * (jm(0, [1, 1])? + c2) + l2 * (jm(1, [1, 1])? + c1),
        l1 * jm(0, [0, 2])? + l2 * (two * c2 + jm(1, [0, 2])?),
    ]);
    let x02 = solve_small(a02, r02)?;
    let (ll11, ll12, ll22) = (x02[0], x02[1], x02[2]);

    let mut a11 = DMatrix::from_element(4, 4, T::zero());
    for (blk, mu) in m.mu().iter().enumerate() {
        let o = 2 * blk;
        a11[(o, o)] = a1 + *mu;
        a11[(o, o + 1)] = -b12;
        a11[(o + 1, o)] = -b21;
        a11[(o + 1, o + 1)] = a2 + *mu;
    }
    let r11 = DVector::from_vec(vec![
        ll11 + c1 * q1 + eb[(0, 0)] * l1,
        ll12 + c2 * q1 + eb[(1, 0)] * l1,
        ll12 + c1 * q2 + eb[(0, 1)] * l2,
        ll22 + c2 * q2 + eb[(1, 1)] * l2,
    ]);
    let x11 = solve_small(a11, r11)?;

    let (mu1, mu2) = (m.mu()[0], m.mu()[1]);
    let qq11 = two * x11[0] / (two * mu1);
    let qq12 = (x11[1] + x11[2]) / (mu1 + mu2);
    let qq22 = two * x11[3] / (two * mu2);
    Ok([ll11, ll12, ll22, x11[0], x11[1], x11[2], x11[3], qq11, qq12, qq22])
}

/// `E[λ(t)]` and `E[Q(t)]` from the two-eigenvalue expansion, or from the
/// engine when eigenvalues collide.
pub fn first_moments_closed<T: Real>(m: &HawkesModel<T>, t: T) -> Result<([T; 2], [T; 2], bool)> {
    require_bivariate(m)?;
    let ([e1, e2], d1) = eta(m)?;
    let mu = [m.mu()[0], m.mu()[1]];
    let tiny = |x: T| x.abs() <= T::lit(1e-9) * (T::one() + x.abs());
    let collide = degenerate_gap(m)?
        || tiny(e1)
        || tiny(e2)
        || (0..2).any(|i| tiny(mu[i] + e1) || tiny(mu[i] + e2) || tiny(mu[i]));
    if collide {
        let sys = assemble_system(m, 1)?;
        let tab = transient_moments(&sys, t, TransientMethod::Auto, &OdeConfig::default())?;
        let v = tab.values();
        return Ok(([v[0], v[1]], [v[2], v[3]], true));
    }
    let eb = m.mean_matrix();
    let [a1, a2] = alpha_bar(m);
    let [c1, c2] = forcing_vector(m);
    let lb = [m.lambda_bar()[0], m.lambda_bar()[1]];
    let half = T::lit(0.5);
    let rd = d1.sqrt();
    let det = a1 * a2 - eb[(0, 1)] * eb[(1, 0)];
    let c0 = [(c1 * a2 + c2 * eb[(0, 1)]) / det, (c2 * a1 + c1 * eb[(1, 0)]) / det];
    let v1 = [
        half * lb[0] * (a2 - a1) + lb[1] * eb[(0, 1)],
        half * lb[1] * (a1 - a2) + lb[0] * eb[(1, 0)],
    ];
    let v2 = [half * c1 * (a2 - a1) + c2 * eb[(0, 1)], half * c2 * (a1 - a2) + c1 * eb[(1, 0)]];
    let c = [c1, c2];
    let (x1, x2) = ((t * e1).exp(), (t * e2).exp());

    let mut lam = [T::zero(); 2];
    let mut q = [T::zero(); 2];
    for i in 0..2 {
        lam[i] = c0[i]
            + half * (x1 + x2) * lb[i]
            + (x1 - x2) / rd * v1[i]
            + half * (x1 / e1 + x2 / e2) * c[i]
            + (x1 / e1 - x2 / e2) / rd * v2[i];
        let decay = (-t * mu[i]).exp();
        let g1 = (x1 - decay) / (mu[i] + e1);
        let g2 = (x2 - decay) / (mu[i] + e2);
        let u1 = g1 + g2;
        let u2 = g1 - g2;
        let u3 = g1 / e1 + g2 / e2;
        let u4 = g1 / e1 - g2 / e2;
        q[i] = c0[i] * (T::one() - decay) / mu[i]
            + half * u1 * lb[i]
            + u2 / rd * v1[i]
            + half * u3 * c[i]
            + u4 / rd * v2[i];
    }
    Ok((lam, q, false))
}

/// Every explicit two-component formula evaluated at `t`.
pub fn closed_form_oracles<T: Real>(m: &HawkesModel<T>, t: T) -> Result<ClosedForms<T>> {
    let (eta_v, d1) = eta(m)?;
    let (mean_lambda, mean_q, degenerate) = first_moments_closed(m, t)?;
    let stable = stationary_checks(m).is_ok();
    Ok(ClosedForms {
        eta: eta_v,
        d1,
        kappa: kappa(m)?,
        exp_m01: exp_m01(m, t)?,
        exp_m02: exp_m02(m, t)?,
        mean_lambda,
        mean_q,
        stationary_first: if stable { Some(stationary_first_closed(m)?) } else { None },
        stationary_second: if stable { Some(stationary_second_closed(m)?) } else { None },
        degenerate: degenerate || degenerate_gap(m)?,
    })
}
