//! Model parameters and admissibility checks.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::spectral_radius;
use crate::scalar::{Real, Scalar};

/// Highest mark moment available by default.
pub const DEFAULT_MAX_MARK_ORDER: usize = 8;

/// Law of a single jump size `B_ij`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MarkLaw<T> {
    Exponential { mean: T },
    Deterministic { value: T },
    Zero,
}

impl<T: Scalar> MarkLaw<T> {
    pub fn exponential(mean: T) -> Self {
        MarkLaw::Exponential { mean }
    }

    pub fn deterministic(value: T) -> Self {
        MarkLaw::Deterministic { value }
    }

    /// Raw moment `E[B^k]`.
    pub fn moment(&self, k: usize) -> T {
        match self {
            MarkLaw::Exponential { mean } => {
                let mut acc = T::one();
                for i in 1..=k {
                    acc = acc * T::count(i as u64) * mean.clone();
                }
                acc
            }
            MarkLaw::Deterministic { value } => {
                let mut acc = T::one();
                for _ in 0..k {
                    acc = acc * value.clone();
                }
                acc
            }
            MarkLaw::Zero => {
                if k == 0 {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    pub fn mean(&self) -> T {
        self.moment(1)
    }

    fn validate(&self) -> Result<()> {
        let p = match self {
            MarkLaw::Exponential { mean } => mean,
            MarkLaw::Deterministic { value } => value,
            MarkLaw::Zero => return Ok(()),
        };
        if *p < T::zero() || !p.approx().is_finite() {
            return Err(Error::InvalidModel(format!("mark parameter must be finite and >= 0, got {p:?}")));
        }
        Ok(())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> MarkLaw<U> {
        match self {
            MarkLaw::Exponential { mean } => MarkLaw::Exponential { mean: f(mean) },
            MarkLaw::Deterministic { value } => MarkLaw::Deterministic { value: f(value) },
            MarkLaw::Zero => MarkLaw::Zero,
        }
    }
}

impl<T: Real> MarkLaw<T> {
    /// Laplace transform `E[exp(-u B)]`, or `None` where it diverges.
    pub fn laplace(&self, u: T) -> Option<T> {
        match self {
            MarkLaw::Exponential { mean } => {
                let den = T::one() + *mean * u;
                if den > T::zero() {
                    Some(T::one() / den)
                } else {
                    None
                }
            }
            MarkLaw::Deterministic { value } => Some((-*value * u).exp()),
            MarkLaw::Zero => Some(T::one()),
        }
    }
}

impl MarkLaw<f64> {
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            MarkLaw::Exponential { mean } => {
                if *mean == 0.0 {
                    0.0
                } else {
                    let e: f64 = rand_distr::Distribution::sample(&rand_distr::Exp1, rng);
                    e * mean
                }
            }
            MarkLaw::Deterministic { value } => *value,
            MarkLaw::Zero => 0.0,
        }
    }
}

/// How the jumps triggered by one event relate across affected components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkDependence {
    /// Every `B_ij` is drawn independently.
    #[default]
    Independent,
    /// An event in component `j` adds one common draw `B_j` to every
    /// intensity; all laws in a column must coincide.
    SharedColumn,
}

/// Markovian multivariate Hawkes process with infinite-server departures.
#[derive(Debug, Clone, PartialEq)]
pub struct HawkesModel<T> {
    lambda_bar: Vec<T>,
    alpha: Vec<T>,
    mu: Vec<T>,
    /// Row `i`, column `j`: jump of `λ_i` caused by an event in component `j`.
    marks: Vec<Vec<MarkLaw<T>>>,
    dependence: MarkDependence,
    max_mark_order: usize,
}

/// Verdict of [`check_stability`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability {
    pub stable: bool,
    pub rho: f64,
}

impl<T: Scalar> HawkesModel<T> {
    /// Builds a model and rejects it unless `ρ(H) < 1`.
    pub fn new(
        lambda_bar: Vec<T>,
        alpha: Vec<T>,
        mu: Vec<T>,
        marks: Vec<Vec<MarkLaw<T>>>,
    ) -> Result<Self> {
        Self::build(lambda_bar, alpha, mu, marks, MarkDependence::Independent, false)
    }

    /// Like [`HawkesModel::new`] without the stability requirement.
    pub fn new_allow_unstable(
        lambda_bar: Vec<T>,
        alpha: Vec<T>,
        mu: Vec<T>,
        marks: Vec<Vec<MarkLaw<T>>>,
    ) -> Result<Self> {
        Self::build(lambda_bar, alpha, mu, marks, MarkDependence::Independent, true)
    }

    pub fn build(
        lambda_bar: Vec<T>,
        alpha: Vec<T>,
        mu: Vec<T>,
        marks: Vec<Vec<MarkLaw<T>>>,
        dependence: MarkDependence,
        allow_unstable: bool,
    ) -> Result<Self> {
        let d = lambda_bar.len();
        if d == 0 {
            return Err(Error::InvalidModel("dimension must be at least 1".into()));
        }
        if alpha.len() != d || mu.len() != d {
            return Err(Error::InvalidModel(format!(
                "lambda_bar, alpha and mu must all have length {d}"
            )));
        }
        if marks.len() != d || marks.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidModel(format!("marks must be a {d}x{d} grid")));
        }
        for (name, v) in [("lambda_bar", &lambda_bar), ("alpha", &alpha), ("mu", &mu)] {
            for x in v.iter() {
                if *x < T::zero() || !x.approx().is_finite() {
                    return Err(Error::InvalidModel(format!("{name} entries must be finite and >= 0")));
                }
            }
        }
        for row in &marks {
            for m in row {
                m.validate()?;
            }
        }
        if dependence == MarkDependence::SharedColumn {
            for j in 0..d {
                if (1..d).any(|i| marks[i][j] != marks[0][j]) {
                    return Err(Error::InvalidModel(format!(
                        "shared-column marks need identical laws in column {}",
                        j + 1
                    )));
                }
            }
        }
        let model = Self {
            lambda_bar,
            alpha,
            mu,
            marks,
            dependence,
            max_mark_order: DEFAULT_MAX_MARK_ORDER,
        };
        let st = check_stability(&model)?;
        if !st.stable && !allow_unstable {
            return Err(Error::Unstable { rho: st.rho });
        }
        Ok(model)
    }

    pub fn with_max_mark_order(mut self, k: usize) -> Self {
        self.max_mark_order = k;
        self
    }

    pub fn d(&self) -> usize {
        self.lambda_bar.len()
    }

    pub fn lambda_bar(&self) -> &[T] {
        &self.lambda_bar
    }

    pub fn alpha(&self) -> &[T] {
        &self.alpha
    }

    pub fn mu(&self) -> &[T] {
        &self.mu
    }

    pub fn mark(&self, i: usize, j: usize) -> &MarkLaw<T> {
        &self.marks[i][j]
    }

    pub fn marks(&self) -> &[Vec<MarkLaw<T>>] {
        &self.marks
    }

    pub fn dependence(&self) -> MarkDependence {
        self.dependence
    }

    pub fn max_mark_order(&self) -> usize {
        self.max_mark_order
    }

    /// `E[B_ij^k]`, refusing orders above the configured maximum.
    pub fn mark_moment(&self, i: usize, j: usize, k: usize) -> Result<T> {
        if k > self.max_mark_order {
            return Err(Error::MissingMarkMoment { order: k, max: self.max_mark_order });
        }
        Ok(self.marks[i][j].moment(k))
    }

    /// `E[∏_i B_ij^{k_i}]` for the jumps caused by one event in component `j`.
    pub fn joint_mark_moment(&self, j: usize, exps: &[usize]) -> Result<T> {
        match self.dependence {
            MarkDependence::Independent => {
                let mut acc = T::one();
                for (i, &k) in exps.iter().enumerate() {
                    if k > 0 {
                        acc = acc * self.mark_moment(i, j, k)?;
                    }
                }
                Ok(acc)
            }
            MarkDependence::SharedColumn => self.mark_moment(0, j, exps.iter().sum()),
        }
    }

    /// Matrix of mark means `E[B]`.
    pub fn mean_matrix(&self) -> DMatrix<T> {
        let d = self.d();
        DMatrix::from_fn(d, d, |i, j| self.marks[i][j].mean())
    }

    /// Same model with every parameter mapped through `f`.
    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U + Copy) -> HawkesModel<U> {
        HawkesModel {
            lambda_bar: self.lambda_bar.iter().map(f).collect(),
            alpha: self.alpha.iter().map(f).collect(),
            mu: self.mu.iter().map(f).collect(),
            marks: self.marks.iter().map(|r| r.iter().map(|m| m.map(f)).collect()).collect(),
            dependence: self.dependence,
            max_mark_order: self.max_mark_order,
        }
    }

    /// Lossy conversion to `f64` parameters.
    pub fn to_f64(&self) -> HawkesModel<f64> {
        self.map(|x| x.approx())
    }

    /// Copy with replaced departure rates (no stability re-check needed).
    pub fn with_mu(&self, mu: Vec<T>) -> Result<Self> {
        if mu.len() != self.d() || mu.iter().any(|x| *x < T::zero()) {
            return Err(Error::InvalidModel("mu must have length d and be >= 0".into()));
        }
        let mut m = self.clone();
        m.mu = mu;
        Ok(m)
    }

    /// Copy with replaced marks, re-validated.
    pub fn with_marks(&self, marks: Vec<Vec<MarkLaw<T>>>, allow_unstable: bool) -> Result<Self> {
        Self::build(
            self.lambda_bar.clone(),
            self.alpha.clone(),
            self.mu.clone(),
            marks,
            self.dependence,
            allow_unstable,
        )
        .map(|m| m.with_max_mark_order(self.max_mark_order))
    }
}

impl<T: Real> HawkesModel<T> {
    /// `β_j(s) = E[exp(-sᵀ B_j)]` for the column of jumps caused by component `j`.
    pub fn beta(&self, j: usize, s: &[T]) -> Option<T> {
        match self.dependence {
            MarkDependence::Independent => {
                let mut acc = T::one();
                for (i, &si) in s.iter().enumerate() {
                    acc *= self.marks[i][j].laplace(si)?;
                }
                Some(acc)
            }
            MarkDependence::SharedColumn => {
                let total = s.iter().fold(T::zero(), |a, &b| a + b);
                self.marks[0][j].laplace(total)
            }
        }
    }
}

/// `H` with `h_ij = E[B_ij] / α_i`.
pub fn branching_matrix<T: Scalar>(m: &HawkesModel<T>) -> Result<DMatrix<T>> {
    let d = m.d();
    let mut h = DMatrix::from_element(d, d, T::zero());
    for i in 0..d {
        for j in 0..d {
            let mean = m.mark(i, j).mean();
            if mean.is_zero() {
                continue;
            }
            if m.alpha()[i].is_zero() {
                return Err(Error::Unstable { rho: f64::INFINITY });
            }
            h[(i, j)] = mean / m.alpha()[i].clone();
        }
    }
    Ok(h)
}

/// Spectral radius of the branching matrix and whether it is below one.
pub fn check_stability<T: Scalar>(m: &HawkesModel<T>) -> Result<Stability> {
    let h = match branching_matrix(m) {
        Ok(h) => h,
        Err(Error::Unstable { rho }) => return Ok(Stability { stable: false, rho }),
        Err(e) => return Err(e),
    };
    let hf = h.map(|x| x.approx());
    let rho = spectral_radius(&hf)?;
    Ok(Stability { stable: rho < 1.0, rho })
}

/// Symmetric parameterisation: common `α`, common `λ̄`, and one jump law per
/// triggering component shared by every affected intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricModel<T> {
    pub d: usize,
    pub alpha: T,
    pub lambda_bar: T,
    pub marks: Vec<MarkLaw<T>>,
}

impl<T: Scalar> SymmetricModel<T> {
    pub fn new(alpha: T, lambda_bar: T, marks: Vec<MarkLaw<T>>) -> Result<Self> {
        if marks.is_empty() {
            return Err(Error::InvalidModel("symmetric model needs at least one mark law".into()));
        }
        if alpha < T::zero() || lambda_bar <= T::zero() {
            return Err(Error::InvalidModel("need alpha >= 0 and lambda_bar > 0".into()));
        }
        for m in &marks {
            m.validate()?;
        }
        Ok(Self { d: marks.len(), alpha, lambda_bar, marks })
    }

    /// The general model with shared column jumps; stability not enforced.
    pub fn to_hawkes(&self, mu: Vec<T>) -> Result<HawkesModel<T>> {
        let d = self.d;
        HawkesModel::build(
            vec![self.lambda_bar.clone(); d],
            vec![self.alpha.clone(); d],
            mu,
            (0..d).map(|_| self.marks.clone()).collect(),
            MarkDependence::SharedColumn,
            true,
        )
    }
}

/// `θ = Σ E[B_i] / α` and `σ = 2α / Σ E[B_i²]`.
pub fn symmetric_theta_sigma<T: Scalar>(m: &SymmetricModel<T>) -> Result<(T, T)> {
    let s1 = m.marks.iter().fold(T::zero(), |a, b| a + b.moment(1));
    let s2 = m.marks.iter().fold(T::zero(), |a, b| a + b.moment(2));
    if s2.is_zero() {
        return Err(Error::InvalidModel("sigma undefined: all second mark moments vanish".into()));
    }
    if m.alpha.is_zero() {
        return Err(Error::InvalidModel("theta undefined for alpha = 0".into()));
    }
    let two = T::count(2);
    Ok((s1 / m.alpha.clone(), two * m.alpha.clone() / s2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn exp(m: f64) -> MarkLaw<f64> {
        MarkLaw::exponential(m)
    }

    pub(crate) fn bivariate() -> HawkesModel<f64> {
        HawkesModel::new(
            vec![0.5, 0.5],
            vec![3.0, 2.0],
            vec![1.0, 2.0],
            vec![vec![exp(1.5), exp(0.5)], vec![exp(0.75), exp(1.25)]],
        )
        .unwrap()
    }

    #[test]
    fn exponential_moments_and_laplace() {
        let b = exp(0.4);
        assert_eq!(b.moment(0), 1.0);
        for k in 1..8 {
            let fact: f64 = (1..=k).map(|x| x as f64).product();
            assert!((b.moment(k) - fact * 0.4f64.powi(k as i32)).abs() < 1e-12);
        }
        assert_eq!(b.laplace(0.0), Some(1.0));
        assert!((b.laplace(2.0).unwrap() - 1.0 / 1.8).abs() < 1e-15);
        // Against quadrature of the density.
        let q = crate::numerics::quad_adaptive(
            |x: f64| (-2.0 * x).exp() * (-x / 0.4).exp() / 0.4,
            0.0,
            60.0,
            1e-13,
        )
        .unwrap();
        assert!((q - b.laplace(2.0).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn rational_moments_are_exact() {
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        let b = MarkLaw::exponential(r(3, 2));
        assert_eq!(b.moment(2), r(9, 2));
        assert_eq!(b.moment(3), r(81, 4));
    }

    #[test]
    fn zero_marks_give_zero_branching() {
        let m = HawkesModel::new(
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![vec![MarkLaw::Zero, MarkLaw::Zero], vec![MarkLaw::Zero, MarkLaw::Zero]],
        )
        .unwrap();
        assert_eq!(branching_matrix(&m).unwrap(), DMatrix::zeros(2, 2));
        assert_eq!(check_stability(&m).unwrap(), Stability { stable: true, rho: 0.0 });
    }

    #[test]
    fn bivariate_branching_matrix() {
        let m = bivariate();
        let h = branching_matrix(&m).unwrap();
        let want = [[0.5, 1.0 / 6.0], [0.375, 0.625]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((h[(i, j)] - want[i][j]).abs() < 1e-15);
            }
        }
        let st = check_stability(&m).unwrap();
        assert!(st.stable && st.rho < 1.0);
    }

    #[test]
    fn near_boundary_variant() {
        let m = bivariate();
        let mut marks = m.marks().to_vec();
        marks[0][0] = exp(2.25);
        let st = check_stability(&m.with_marks(marks.clone(), true).unwrap()).unwrap();
        assert!(st.rho > 0.9);
    }

    #[test]
    fn trivariate_is_stable() {
        let means = [[0.5, 0.3, 0.4], [0.7, 0.5, 0.5], [0.4, 0.2, 0.5]];
        let m = HawkesModel::new(
            vec![0.3, 1.0, 0.5],
            vec![2.0, 1.5, 2.5],
            vec![1.5, 0.5, 1.0],
            means.iter().map(|r| r.iter().map(|&x| exp(x)).collect()).collect(),
        )
        .unwrap();
        assert!(check_stability(&m).unwrap().stable);
    }

    #[test]
    fn unstable_is_rejected_unless_allowed() {
        let marks = vec![vec![exp(3.0)]];
        assert!(matches!(
            HawkesModel::new(vec![1.0], vec![2.0], vec![1.0], marks.clone()),
            Err(Error::Unstable { .. })
        ));
        assert!(HawkesModel::new_allow_unstable(vec![1.0], vec![2.0], vec![1.0], marks).is_ok());
        let zero_alpha = HawkesModel::new(vec![1.0], vec![0.0], vec![1.0], vec![vec![exp(0.1)]]);
        assert!(matches!(zero_alpha, Err(Error::Unstable { .. })));
    }

    #[test]
    fn invalid_inputs() {
        assert!(HawkesModel::<f64>::new(vec![], vec![], vec![], vec![]).is_err());
        assert!(HawkesModel::new(vec![-1.0], vec![1.0], vec![1.0], vec![vec![MarkLaw::Zero]]).is_err());
        assert!(HawkesModel::new(vec![1.0], vec![1.0], vec![1.0], vec![vec![exp(-0.1)]]).is_err());
        assert!(HawkesModel::new(vec![1.0, 1.0], vec![1.0], vec![1.0], vec![vec![MarkLaw::Zero]]).is_err());
    }

    #[test]
    fn theta_sigma() {
        let m = SymmetricModel::new(2.0, 1.0, vec![MarkLaw::deterministic(1.0)]).unwrap();
        assert_eq!(symmetric_theta_sigma(&m).unwrap(), (0.5, 4.0));
        let m = SymmetricModel::new(1.0, 1.0, vec![exp(0.25), exp(0.25)]).unwrap();
        let (th, sg) = symmetric_theta_sigma(&m).unwrap();
        assert!((th - 0.5).abs() < 1e-15 && (sg - 8.0).abs() < 1e-12);
        let m2 = SymmetricModel::new(1.0, 1.0, vec![exp(0.5), exp(0.5)]).unwrap();
        assert!((symmetric_theta_sigma(&m2).unwrap().0 - 2.0 * th).abs() < 1e-15);
        let z = SymmetricModel::new(1.0, 1.0, vec![MarkLaw::<f64>::Zero]).unwrap();
        assert!(symmetric_theta_sigma(&z).is_err());
    }

    #[test]
    fn shared_column_joint_moments() {
        let s = SymmetricModel::new(1.0, 1.0, vec![exp(0.25), exp(0.25)]).unwrap();
        let h = s.to_hawkes(vec![1.0, 1.0]).unwrap();
        assert!((h.joint_mark_moment(0, &[1, 1]).unwrap() - 2.0 * 0.0625).abs() < 1e-15);
        assert!((h.beta(1, &[0.5, 1.5]).unwrap() - 1.0 / 1.5).abs() < 1e-15);
        let ind = bivariate();
        assert!((ind.joint_mark_moment(0, &[1, 1]).unwrap() - 1.5 * 0.75).abs() < 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn scaling_marks_down_keeps_stability(c in 0.01f64..1.0) {
            let m = bivariate();
            let marks: Vec<Vec<_>> = m.marks().iter()
                .map(|r| r.iter().map(|b| b.map(|x| x * c)).collect()).collect();
            let scaled = m.with_marks(marks, true).unwrap();
            let h = branching_matrix(&scaled).unwrap();
            proptest::prop_assert!(h.iter().all(|x| *x >= 0.0));
            proptest::prop_assert!(check_stability(&scaled).unwrap().stable);
        }

        #[test]
        fn jensen_holds(mean in 0.0f64..5.0) {
            for law in [MarkLaw::exponential(mean), MarkLaw::deterministic(mean)] {
                proptest::prop_assert!(law.moment(2) >= law.moment(1).powi(2) - 1e-12);
                proptest::prop_assert_eq!(law.moment(0), 1.0);
            }
        }
    }
}
