use std::collections::HashMap;

use super::index::MomentIndex;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// When a table was evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    At(f64),
    Stationary,
}

/// Moments keyed by index, in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable<T> {
    horizon: Horizon,
    indices: Vec<MomentIndex>,
    values: Vec<T>,
    lookup: HashMap<MomentIndex, usize>,
}

impl<T: Clone> MomentTable<T> {
    pub fn new(horizon: Horizon, indices: Vec<MomentIndex>, values: Vec<T>) -> Self {
        assert_eq!(indices.len(), values.len());
        let lookup = indices.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        Self { horizon, indices, values, lookup }
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn indices(&self) -> &[MomentIndex] {
        &self.indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, idx: &MomentIndex) -> Option<&T> {
        self.lookup.get(idx).map(|&i| &self.values[i])
    }

    /// Like [`MomentTable::get`] but reports a missing index as an error.
    pub fn value(&self, idx: &MomentIndex) -> Result<T> {
        self.get(idx).cloned().ok_or_else(|| Error::MissingIndex(idx.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MomentIndex, &T)> {
        self.indices.iter().zip(&self.values)
    }

    pub fn max_order(&self) -> u32 {
        self.indices.iter().map(|i| i.order()).max().unwrap_or(0)
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> MomentTable<U> {
        MomentTable::new(self.horizon, self.indices.clone(), self.values.iter().map(f).collect())
    }

    /// Sub-table restricted to the indices accepted by `keep`.
    pub fn filter(&self, keep: impl Fn(&MomentIndex) -> bool) -> MomentTable<T> {
        let (i, v): (Vec<_>, Vec<_>) =
            self.iter().filter(|(k, _)| keep(k)).map(|(k, v)| (k.clone(), v.clone())).unzip();
        MomentTable::new(self.horizon, i, v)
    }
}

/// Stirling numbers of the second kind `S(n, k)`.
pub fn stirling2(n: u32, k: u32) -> u64 {
    let n = n as usize;
    let k = k as usize;
    if k > n {
        return 0;
    }
    let mut row = vec![0u64; n + 1];
    row[0] = 1;
    for i in 1..=n {
        for j in (1..=i).rev() {
            row[j] = j as u64 * row[j] + row[j - 1];
        }
        row[0] = 0;
    }
    row[k]
}

fn boxes(bounds: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &b in bounds {
        let mut next = Vec::new();
        for prefix in &out {
            for v in 0..=b {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Converts reduced moments (factorial powers of `Q`) into raw moments
/// `E[∏ λ^{n_λ} ∏ Q^{n_Q}]`.
pub fn factorial_to_raw<T: Scalar>(table: &MomentTable<T>) -> Result<MomentTable<T>> {
    let mut values = Vec::with_capacity(table.len());
    for idx in table.indices() {
        let mut acc = T::zero();
        for k in boxes(&idx.n_q) {
            let mut coef: u64 = 1;
            for (&b, &kk) in idx.n_q.iter().zip(&k) {
                coef *= stirling2(b, kk);
            }
            if coef == 0 {
                continue;
            }
            let sub = MomentIndex::new(idx.n_lambda.clone(), k);
            let v = if sub.is_zero() { T::one() } else { table.value(&sub)? };
            acc += T::count(coef) * v;
        }
        values.push(acc);
    }
    Ok(MomentTable::new(table.horizon(), table.indices().to_vec(), values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::index::enumerate_indices;

    #[test]
    fn stirling_values() {
        assert_eq!(stirling2(0, 0), 1);
        assert_eq!(stirling2(3, 0), 0);
        assert_eq!(stirling2(3, 2), 3);
        assert_eq!(stirling2(4, 2), 7);
        assert_eq!(stirling2(5, 3), 25);
    }

    #[test]
    fn poisson_raw_moments() {
        // Factorial moments of Poisson(m) are m^k.
        let m: f64 = 1.7;
        let idx = enumerate_indices(1, 3);
        let vals: Vec<f64> = idx
            .iter()
            .map(|i| if i.lambda_order() == 0 { m.powi(i.q_order() as i32) } else { 0.0 })
            .collect();
        let t = MomentTable::new(Horizon::At(1.0), idx, vals);
        let raw = factorial_to_raw(&t).unwrap();
        let q = |k| raw.get(&MomentIndex::new(vec![0], vec![k])).copied().unwrap();
        assert!((q(1) - m).abs() < 1e-14);
        assert!((q(2) - (m * m + m)).abs() < 1e-13);
        assert!((q(3) - (m.powi(3) + 3.0 * m * m + m)).abs() < 1e-12);
    }

    #[test]
    fn missing_index_is_reported() {
        let t = MomentTable::new(
            Horizon::Stationary,
            vec![MomentIndex::new(vec![0], vec![2])],
            vec![1.0],
        );
        assert!(matches!(factorial_to_raw(&t), Err(Error::MissingIndex(_))));
    }
}
