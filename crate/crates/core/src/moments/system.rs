use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::index::{binomial, enumerate_indices, MomentIndex};
use crate::error::{Error, Result};
use crate::model::HawkesModel;
use crate::scalar::Scalar;

/// Linear system `x' = F x + b`, `x(0) = x0`, over every reduced moment of
/// total order `1..=order`, rows in canonical order.
#[derive(Debug, Clone)]
pub struct MomentSystem<T: nalgebra::Scalar> {
    pub d: usize,
    pub order: u32,
    pub indices: Vec<MomentIndex>,
    pub f: DMatrix<T>,
    pub b: DVector<T>,
    pub x0: DVector<T>,
    lookup: HashMap<MomentIndex, usize>,
}

impl<T: Scalar> MomentSystem<T> {
    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn position(&self, idx: &MomentIndex) -> Option<usize> {
        self.lookup.get(idx).copied()
    }

    /// Indices of total order `n` with `|n_Q| = k`, as row positions.
    pub fn block_range(&self, k: u32, n: u32) -> std::ops::Range<usize> {
        let start = self.indices.iter().position(|i| i.order() == n && i.q_order() == k);
        match start {
            None => 0..0,
            Some(s) => {
                let len = self.indices[s..]
                    .iter()
                    .take_while(|i| i.order() == n && i.q_order() == k)
                    .count();
                s..s + len
            }
        }
    }
}

/// All `m` with `0 ≤ m ≤ a` componentwise.
fn sub_vectors(a: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::with_capacity(a.len())];
    for &ai in a {
        let mut next = Vec::with_capacity(out.len() * (ai as usize + 1));
        for p in &out {
            for v in 0..=ai {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Generator coefficients of the row for `ψ(a, b)`: pairs of (column
/// index, coefficient). The index `0` (empty monomial) stands for the
/// constant forcing.
pub fn row_terms<T: Scalar>(m: &HawkesModel<T>, idx: &MomentIndex) -> Result<Vec<(MomentIndex, T)>> {
    let d = m.d();
    let a = &idx.n_lambda;
    let b = &idx.n_q;
    let mut terms: Vec<(MomentIndex, T)> = Vec::new();

    let mut diag = T::zero();
    for j in 0..d {
        diag -= T::count(a[j] as u64) * m.alpha()[j].clone();
        diag -= T::count(b[j] as u64) * m.mu()[j].clone();
    }
    terms.push((idx.clone(), diag));

    // Mean reversion towards the base rate.
    for i in 0..d {
        if a[i] > 0 {
            let mut na = a.clone();
            na[i] -= 1;
            let coef = T::count(a[i] as u64) * m.alpha()[i].clone() * m.lambda_bar()[i].clone();
            terms.push((MomentIndex::new(na, b.clone()), coef));
        }
    }

    let subs = sub_vectors(a);
    for j in 0..d {
        for mv in &subs {
            let mut binom: u64 = 1;
            let mut exps = vec![0usize; d];
            for i in 0..d {
                binom *= binomial(a[i] as u64, mv[i] as u64);
                exps[i] = (a[i] - mv[i]) as usize;
            }
            let jump = T::count(binom) * m.joint_mark_moment(j, &exps)?;
            let mut target = mv.clone();
            target[j] += 1;
            // Intensity jumps caused by an arrival in component j.
            if mv != a {
                terms.push((MomentIndex::new(target.clone(), b.clone()), jump.clone()));
            }
            // The arrival also raises Q_j.
            if b[j] > 0 {
                let mut nb = b.clone();
                nb[j] -= 1;
                terms.push((MomentIndex::new(target, nb), T::count(b[j] as u64) * jump));
            }
        }
    }
    Ok(terms)
}

/// Assembles the stacked moment system up to total order `n`.
pub fn assemble_system<T: Scalar>(m: &HawkesModel<T>, n: u32) -> Result<MomentSystem<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("moment order must be at least 1".into()));
    }
    if n as usize > m.max_mark_order() {
        return Err(Error::MissingMarkMoment { order: n as usize, max: m.max_mark_order() });
    }
    let d = m.d();
    let indices = enumerate_indices(d, n);
    let lookup: HashMap<MomentIndex, usize> =
        indices.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
    let dim = indices.len();
    let mut f = DMatrix::from_element(dim, dim, T::zero());
    let mut b = DVector::from_element(dim, T::zero());
    let mut x0 = DVector::from_element(dim, T::zero());
    for (row, idx) in indices.iter().enumerate() {
        for (col, coef) in row_terms(m, idx)? {
            if coef.is_zero() {
                continue;
            }
            if col.is_zero() {
                b[row] += coef;
            } else {
                let c = *lookup.get(&col).expect("generator stays within the stacked orders");
                f[(row, c)] += coef;
            }
        }
        if idx.q_order() == 0 {
            let mut v = T::one();
            for (lb, &a) in m.lambda_bar().iter().zip(&idx.n_lambda) {
                for _ in 0..a {
                    v = v * lb.clone();
                }
            }
            x0[row] = v;
        }
    }
    Ok(MomentSystem { d, order: n, indices, f, b, x0, lookup })
}
