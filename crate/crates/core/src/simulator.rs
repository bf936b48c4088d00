//! Exact Monte Carlo of the Hawkes population process by Ogata thinning.
//!
//! Lifetimes are drawn at arrival, so one pass over a path gives `Q` and `λ`
//! at any query time. Replication `r` of a run with master seed `s` uses
//! stream `r` of a ChaCha generator keyed by `s`; parallel and serial runs
//! therefore agree bit for bit.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fd::CrossKind;
use crate::model::{HawkesModel, MarkDependence};
use crate::moments::{enumerate_indices, Horizon, MomentIndex, MomentTable};

/// Default cap on accepted events per path.
pub const DEFAULT_EVENT_CAP: usize = 10_000_000;

/// One accepted arrival.
#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent {
    pub time: f64,
    pub component: usize,
    /// Exponential sojourn; `f64::INFINITY` when `μ = 0`.
    pub lifetime: f64,
    /// Jump added to each `λ_i`.
    pub marks: Vec<f64>,
    /// Intensities right after the jump.
    lambda_after: Vec<f64>,
}

impl SimEvent {
    pub fn departure(&self) -> f64 {
        self.time + self.lifetime
    }
}

/// A simulated path on `[0, horizon]`, starting from `λ(0) = λ̄`, `Q(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub seed: u64,
    pub stream: u64,
    pub horizon: f64,
    lambda_bar: Vec<f64>,
    alpha: Vec<f64>,
    events: Vec<SimEvent>,
}

impl EventLog {
    pub fn d(&self) -> usize {
        self.lambda_bar.len()
    }

    pub fn events(&self) -> &[SimEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    fn last_before(&self, t: f64) -> Option<&SimEvent> {
        let k = self.events.partition_point(|e| e.time <= t);
        k.checked_sub(1).map(|k| &self.events[k])
    }

    /// `λ(t)` from the exact decay law.
    pub fn intensity_at(&self, t: f64) -> Vec<f64> {
        match self.last_before(t) {
            None => self.lambda_bar.clone(),
            Some(e) => (0..self.d())
                .map(|i| {
                    let lb = self.lambda_bar[i];
                    lb + (e.lambda_after[i] - lb) * (-self.alpha[i] * (t - e.time)).exp()
                })
                .collect(),
        }
    }

    /// `Q(t)`: arrivals in `[0, t]` still present at `t`.
    pub fn queue_at(&self, t: f64) -> Vec<u64> {
        let mut q = vec![0u64; self.d()];
        for e in self.events.iter().take_while(|e| e.time <= t) {
            if e.departure() > t {
                q[e.component] += 1;
            }
        }
        q
    }

    /// `Q(t)` by running a birth/death counter forward in time.
    pub fn queue_by_counter(&self, t: f64) -> Vec<u64> {
        let mut q = vec![0u64; self.d()];
        let mut departures: BinaryHeap<Reverse<(OrdF64, usize)>> = BinaryHeap::new();
        for e in self.events.iter().take_while(|e| e.time <= t) {
            while let Some(&Reverse((OrdF64(dep), c))) = departures.peek() {
                if dep > e.time {
                    break;
                }
                q[c] -= 1;
                departures.pop();
            }
            q[e.component] += 1;
            departures.push(Reverse((OrdF64(e.departure()), e.component)));
        }
        while let Some(Reverse((OrdF64(dep), c))) = departures.pop() {
            if dep <= t {
                q[c] -= 1;
            }
        }
        q
    }

    /// `N(t)`: arrivals in `[0, t]` per component.
    pub fn counts_at(&self, t: f64) -> Vec<u64> {
        let mut n = vec![0u64; self.d()];
        for e in self.events.iter().take_while(|e| e.time <= t) {
            n[e.component] += 1;
        }
        n
    }

    /// `∫_a^b λ_i(u) du` per component.
    pub fn integrated_intensity(&self, a: f64, b: f64) -> Vec<f64> {
        let d = self.d();
        let mut out = vec![0.0; d];
        let mut cur = a;
        let mut lam = self.intensity_at(a);
        let start = self.events.partition_point(|e| e.time <= a);
        let stops = self.events[start..].iter().take_while(|e| e.time < b).map(|e| (e.time, Some(e)));
        for (tn, ev) in stops.chain(std::iter::once((b, None))) {
            let dt = tn - cur;
            for i in 0..d {
                let lb = self.lambda_bar[i];
                let a_i = self.alpha[i];
                let excess = lam[i] - lb;
                let decayed = if a_i > 0.0 { excess * (1.0 - (-a_i * dt).exp()) / a_i } else { excess * dt };
                out[i] += lb * dt + decayed;
            }
            if let Some(e) = ev {
                lam.clone_from(&e.lambda_after);
            }
            cur = tn;
        }
        out
    }

    /// Writes one row per event: `t,component,lifetime,mark_1..mark_d`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let io = |e: csv::Error| Error::InvalidArgument(format!("event dump failed: {e}"));
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string(), "component".into(), "lifetime".into()];
        header.extend((1..=self.d()).map(|i| format!("mark_{i}")));
        wr.write_record(&header).map_err(io)?;
        for e in &self.events {
            let mut row = vec![e.time.to_string(), (e.component + 1).to_string(), e.lifetime.to_string()];
            row.extend(e.marks.iter().map(|m| m.to_string()));
            wr.write_record(&row).map_err(io)?;
        }
        wr.flush().map_err(|e| Error::InvalidArgument(format!("event dump failed: {e}")))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Generator for replication `stream` of a run keyed by `seed`.
pub fn replication_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn simulate_path(m: &HawkesModel<f64>, horizon: f64, seed: u64) -> Result<EventLog> {
    simulate_stream(m, horizon, seed, 0, DEFAULT_EVENT_CAP)
}

/// Path for replication `stream` with an explicit event cap.
pub fn simulate_stream(
    m: &HawkesModel<f64>,
    horizon: f64,
    seed: u64,
    stream: u64,
    cap: usize,
) -> Result<EventLog> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive and finite, got {horizon}")));
    }
    let d = m.d();
    let lambda_bar = m.lambda_bar().to_vec();
    let alpha = m.alpha().to_vec();
    let mu = m.mu();
    let mut rng = replication_rng(seed, stream);
    let mut lam = lambda_bar.clone();
    let mut t = 0.0;
    let mut events = Vec::new();
    loop {
        let bound: f64 = lam.iter().sum();
        if !(bound > 0.0) {
            break;
        }
        let w: f64 = Exp1.sample(&mut rng);
        let cand = t + w / bound;
        if cand > horizon {
            break;
        }
        let dt = cand - t;
        for i in 0..d {
            lam[i] = lambda_bar[i] + (lam[i] - lambda_bar[i]) * (-alpha[i] * dt).exp();
        }
        t = cand;
        let u = rng.random::<f64>() * bound;
        let mut acc = 0.0;
        let mut hit = None;
        for (i, &l) in lam.iter().enumerate() {
            acc += l;
            if u < acc {
                hit = Some(i);
                break;
            }
        }
        let Some(c) = hit else { continue };
        if events.len() >= cap {
            return Err(Error::Explosion { cap, t });
        }
        let marks: Vec<f64> = match m.dependence() {
            MarkDependence::Independent => (0..d).map(|i| m.mark(i, c).sample(&mut rng)).collect(),
            MarkDependence::SharedColumn => vec![m.mark(0, c).sample(&mut rng); d],
        };
        for i in 0..d {
            lam[i] += marks[i];
        }
        let lifetime = if mu[c] > 0.0 {
            let e: f64 = Exp1.sample(&mut rng);
            e / mu[c]
        } else {
            f64::INFINITY
        };
        events.push(SimEvent { time: t, component: c, lifetime, marks, lambda_after: lam.clone() });
    }
    Ok(EventLog { seed, stream, horizon, lambda_bar, alpha, events })
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub replications: usize,
}

impl McEstimate {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 2 {
            return Err(Error::InvalidArgument("need at least two replications".into()));
        }
        if xs.iter().all(|&x| x == xs[0]) {
            return Ok(Self { mean: xs[0], std_error: 0.0, replications: n });
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Ok(Self { mean, std_error: (var / n as f64).sqrt(), replications: n })
    }

    /// Normal-approximation 95% interval.
    pub fn ci95(&self) -> (f64, f64) {
        let w = 1.959963984540054 * self.std_error;
        (self.mean - w, self.mean + w)
    }

    /// Distance from `x` in standard errors; infinite if `x` differs from a
    /// zero-variance estimate.
    pub fn z_score(&self, x: f64) -> f64 {
        let diff = (self.mean - x).abs();
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

fn falling(q: u64, k: u32) -> f64 {
    (0..k as u64).map(|j| q.saturating_sub(j) as f64).product()
}

/// `∏ λ_i^{a_i} ∏ Q_i^{[b_i]}`.
fn reduced_product(idx: &MomentIndex, lam: &[f64], q: &[u64]) -> f64 {
    let mut v = 1.0;
    for (i, &a) in idx.n_lambda.iter().enumerate() {
        v *= lam[i].powi(a as i32);
    }
    for (i, &b) in idx.n_q.iter().enumerate() {
        v *= falling(q[i], b);
    }
    v
}

fn check_reps(reps: usize) -> Result<()> {
    if reps < 2 {
        return Err(Error::InvalidArgument(format!("need at least two replications, got {reps}")));
    }
    Ok(())
}

/// Runs `reps` paths on `[0, horizon]` in parallel and maps each to a row of
/// statistics; rows come back in replication order.
fn replicate<F>(m: &HawkesModel<f64>, horizon: f64, reps: usize, seed: u64, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&EventLog) -> Vec<f64> + Sync,
{
    // A zero-length horizon still needs a valid path: simulate a sliver.
    let h = if horizon > 0.0 { horizon } else { f64::MIN_POSITIVE };
    (0..reps as u64)
        .into_par_iter()
        .map(|r| simulate_stream(m, h, seed, r, DEFAULT_EVENT_CAP).map(|log| f(&log)))
        .collect()
}

fn column_estimates(rows: &[Vec<f64>], width: usize) -> Result<Vec<McEstimate>> {
    (0..width)
        .map(|k| {
            let xs: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            McEstimate::from_samples(&xs)
        })
        .collect()
}

/// Reduced moments of every order `1..=n` at time `t`, in canonical order.
pub fn estimate_moments(
    m: &HawkesModel<f64>,
    t: f64,
    n: u32,
    reps: usize,
    seed: u64,
) -> Result<MomentTable<McEstimate>> {
    check_reps(reps)?;
    if n == 0 {
        return Err(Error::InvalidArgument("moment order must be at least 1".into()));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument("time must be finite and >= 0".into()));
    }
    let indices = enumerate_indices(m.d(), n);
    let rows = replicate(m, t, reps, seed, |log| {
        let lam = log.intensity_at(t);
        let q = log.queue_at(t);
        indices.iter().map(|idx| reduced_product(idx, &lam, &q)).collect()
    })?;
    let est = column_estimates(&rows, indices.len())?;
    Ok(MomentTable::new(Horizon::At(t), indices, est))
}

/// Two-time products at one lag, from the same paths.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossEstimate {
    pub tau: f64,
    /// Indexed like [`CrossKind::ALL`]; entry `(i, j)` is
    /// `E[X_i(t) Y_j(t+τ)]`.
    pub products: [DMatrix<McEstimate>; 4],
    /// `E[λ(t)]`, `E[Q(t)]`, `E[λ(t+τ)]`, `E[Q(t+τ)]`.
    pub means: [Vec<McEstimate>; 4],
}

impl CrossEstimate {
    pub fn product(&self, kind: CrossKind) -> &DMatrix<McEstimate> {
        &self.products[kind.position()]
    }

    /// `E[X(t) Y(t+τ)ᵀ] - E[X(t)] E[Y(t+τ)]ᵀ` from the sample means.
    pub fn covariance(&self, kind: CrossKind) -> DMatrix<f64> {
        let (first_q, second_q) = kind.parts();
        let a = &self.means[if first_q { 1 } else { 0 }];
        let b = &self.means[if second_q { 3 } else { 2 }];
        let r = self.product(kind);
        DMatrix::from_fn(r.nrows(), r.ncols(), |i, j| r[(i, j)].mean - a[i].mean * b[j].mean)
    }
}

/// `E[X_i(t) Y_j(t+τ)]` for every τ in `taus` and every [`CrossKind`].
pub fn estimate_cross_moments(
    m: &HawkesModel<f64>,
    t: f64,
    taus: &[f64],
    reps: usize,
    seed: u64,
) -> Result<Vec<CrossEstimate>> {
    check_reps(reps)?;
    if !(t >= 0.0 && t.is_finite()) || taus.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(Error::InvalidArgument("t and every tau must be finite and >= 0".into()));
    }
    let d = m.d();
    let horizon = t + taus.iter().cloned().fold(0.0, f64::max);
    // Per lag: 4 d² products then 4 d means.
    let width = 4 * d * d + 4 * d;
    let rows = replicate(m, horizon, reps, seed, |log| {
        let lam0 = log.intensity_at(t);
        let q0: Vec<f64> = log.queue_at(t).into_iter().map(|x| x as f64).collect();
        let mut out = Vec::with_capacity(width * taus.len());
        for &tau in taus {
            let lam1 = log.intensity_at(t + tau);
            let q1: Vec<f64> = log.queue_at(t + tau).into_iter().map(|x| x as f64).collect();
            for kind in CrossKind::ALL {
                let (fq, sq) = kind.parts();
                let x = if fq { &q0 } else { &lam0 };
                let y = if sq { &q1 } else { &lam1 };
                for i in 0..d {
                    for j in 0..d {
                        out.push(x[i] * y[j]);
                    }
                }
            }
            for v in [&lam0, &q0, &lam1, &q1] {
                out.extend_from_slice(v);
            }
        }
        out
    })?;
    let est = column_estimates(&rows, width * taus.len())?;
    Ok(taus
        .iter()
        .enumerate()
        .map(|(k, &tau)| {
            let block = &est[k * width..(k + 1) * width];
            let products = std::array::from_fn(|p| {
                DMatrix::from_fn(d, d, |i, j| block[p * d * d + i * d + j])
            });
            let base = 4 * d * d;
            let means = std::array::from_fn(|p| block[base + p * d..base + (p + 1) * d].to_vec());
            CrossEstimate { tau, products, means }
        })
        .collect())
}

/// Time-averaged intensity over `[a, b]`, one estimate per component.
pub fn estimate_mean_intensity(
    m: &HawkesModel<f64>,
    a: f64,
    b: f64,
    reps: usize,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    check_reps(reps)?;
    if !(0.0 <= a && a < b && b.is_finite()) {
        return Err(Error::InvalidArgument("need 0 <= a < b < inf".into()));
    }
    let rows = replicate(m, b, reps, seed, |log| {
        log.integrated_intensity(a, b).into_iter().map(|x| x / (b - a)).collect()
    })?;
    column_estimates(&rows, m.d())
}

/// Arrival counts `N(t)` per component.
pub fn estimate_counts(m: &HawkesModel<f64>, t: f64, reps: usize, seed: u64) -> Result<Vec<McEstimate>> {
    check_reps(reps)?;
    let rows = replicate(m, t, reps, seed, |log| log.counts_at(t).into_iter().map(|x| x as f64).collect())?;
    column_estimates(&rows, m.d())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MarkLaw;
    use crate::moments::{assemble_system, transient_moments, TransientMethod};
    use crate::numerics::OdeConfig;
    use crate::presets;

    #[test]
    fn deterministic_given_seed() {
        let m = presets::bivariate::<f64>();
        let a = simulate_path(&m, 20.0, 7).unwrap();
        let b = simulate_path(&m, 20.0, 7).unwrap();
        let c = simulate_path(&m, 20.0, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn log_invariants() {
        let m = presets::trivariate::<f64>();
        let log = simulate_path(&m, 30.0, 3).unwrap();
        assert!(!log.is_empty());
        for w in log.events().windows(2) {
            assert!(w[1].time > w[0].time);
        }
        for e in log.events() {
            assert!(e.lifetime > 0.0 && e.marks.iter().all(|&x| x >= 0.0));
        }
        for t in [0.5, 5.0, 12.3, 29.9] {
            assert_eq!(log.queue_at(t), log.queue_by_counter(t));
        }
    }

    #[test]
    fn intensity_decays_between_events() {
        let m = presets::bivariate::<f64>();
        let log = simulate_path(&m, 10.0, 11).unwrap();
        for w in log.events().windows(2) {
            let (a, b) = (w[0].time, w[1].time);
            let mut prev = log.intensity_at(a);
            for k in 1..10 {
                let cur = log.intensity_at(a + (b - a) * k as f64 / 10.0);
                for i in 0..2 {
                    assert!(cur[i] <= prev[i] + 1e-12 && cur[i] >= m.lambda_bar()[i] - 1e-12);
                }
                prev = cur;
            }
        }
    }

    #[test]
    fn shared_column_draws_once() {
        let m = HawkesModel::build(
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            vec![1.0, 1.0],
            vec![vec![MarkLaw::exponential(0.4); 2]; 2],
            MarkDependence::SharedColumn,
            false,
        )
        .unwrap();
        let log = simulate_path(&m, 20.0, 1).unwrap();
        for e in log.events() {
            assert_eq!(e.marks[0], e.marks[1]);
        }
    }

    #[test]
    fn explosion_is_reported() {
        let m = HawkesModel::build(
            vec![1.0],
            vec![1.0],
            vec![1.0],
            vec![vec![MarkLaw::deterministic(3.0)]],
            MarkDependence::Independent,
            true,
        )
        .unwrap();
        let err = simulate_stream(&m, 50.0, 1, 0, 10_000).unwrap_err();
        assert!(matches!(err, Error::Explosion { cap: 10_000, .. }));
    }

    #[test]
    fn time_zero_is_exact() {
        let m = presets::bivariate::<f64>();
        let tab = estimate_moments(&m, 0.0, 2, 10, 5).unwrap();
        for (idx, e) in tab.iter() {
            assert_eq!(e.std_error, 0.0);
            let want = if idx.q_order() > 0 { 0.0 } else { reduced_product(idx, m.lambda_bar(), &[0, 0]) };
            assert_eq!(e.mean, want);
        }
    }

    #[test]
    fn poisson_rates() {
        let m = presets::poisson(vec![0.7, 2.0], vec![1.0, 1.0], vec![1.0, 0.5]).unwrap();
        let n = estimate_counts(&m, 10.0, 400, 9).unwrap();
        for (e, lb) in n.iter().zip([0.7, 2.0]) {
            assert!(e.z_score(lb * 10.0) < 4.0, "{e:?}");
        }
    }

    #[test]
    fn matches_engine_first_order() {
        let m = presets::bivariate::<f64>();
        let sys = assemble_system(&m, 1).unwrap();
        let exact = transient_moments(&sys, 2.0, TransientMethod::ClosedForm, &OdeConfig::default()).unwrap();
        let mc = estimate_moments(&m, 2.0, 1, 2000, 21).unwrap();
        for (idx, v) in exact.iter() {
            assert!(mc.value(idx).unwrap().z_score(*v) < 4.5, "{idx}");
        }
    }

    #[test]
    fn cross_at_zero_lag_is_second_moment() {
        let m = presets::bivariate::<f64>();
        let cr = estimate_cross_moments(&m, 1.0, &[0.0, 2.0], 50, 4).unwrap();
        let tab = estimate_moments(&m, 1.0, 2, 50, 4).unwrap();
        let qq = cr[0].product(CrossKind::QQ);
        let ll = cr[0].product(CrossKind::LambdaLambda);
        // Q_i² = Q_i^[2] + Q_i.
        let qi = tab.value(&MomentIndex::q(2, 0)).unwrap().mean;
        let qi2 = tab.value(&MomentIndex::new(vec![0, 0], vec![2, 0])).unwrap().mean;
        assert!((qq[(0, 0)].mean - (qi2 + qi)).abs() < 1e-9);
        let l12 = tab.value(&MomentIndex::new(vec![1, 1], vec![0, 0])).unwrap().mean;
        assert!((ll[(0, 1)].mean - l12).abs() < 1e-9);
    }

    #[test]
    fn dump_has_header_and_rows() {
        let m = presets::bivariate::<f64>();
        let log = simulate_path(&m, 3.0, 2).unwrap();
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,component,lifetime,mark_1,mark_2"));
        assert_eq!(lines.count(), log.len());
    }
}
