use std::fmt;

/// Identifies the reduced moment `E[∏ λ_i^{a_i} ∏ Q_i^{[b_i]}]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MomentIndex {
    pub n_lambda: Vec<u32>,
    pub n_q: Vec<u32>,
}

impl MomentIndex {
    pub fn new(n_lambda: Vec<u32>, n_q: Vec<u32>) -> Self {
        assert_eq!(n_lambda.len(), n_q.len(), "index halves must share a dimension");
        Self { n_lambda, n_q }
    }

    pub fn zero(d: usize) -> Self {
        Self { n_lambda: vec![0; d], n_q: vec![0; d] }
    }

    /// First moment of `λ_i`.
    pub fn lambda(d: usize, i: usize) -> Self {
        let mut m = Self::zero(d);
        m.n_lambda[i] = 1;
        m
    }

    /// First moment of `Q_i`.
    pub fn q(d: usize, i: usize) -> Self {
        let mut m = Self::zero(d);
        m.n_q[i] = 1;
        m
    }

    pub fn d(&self) -> usize {
        self.n_lambda.len()
    }

    pub fn lambda_order(&self) -> u32 {
        self.n_lambda.iter().sum()
    }

    pub fn q_order(&self) -> u32 {
        self.n_q.iter().sum()
    }

    pub fn order(&self) -> u32 {
        self.lambda_order() + self.q_order()
    }

    pub fn is_zero(&self) -> bool {
        self.order() == 0
    }

    /// Index of the product of two monomials.
    pub fn plus(&self, other: &MomentIndex) -> MomentIndex {
        MomentIndex {
            n_lambda: self.n_lambda.iter().zip(&other.n_lambda).map(|(a, b)| a + b).collect(),
            n_q: self.n_q.iter().zip(&other.n_q).map(|(a, b)| a + b).collect(),
        }
    }

    /// Parses the rendering produced by `Display`, e.g. `L1^2 Q2^[1]`.
    pub fn parse(d: usize, s: &str) -> Option<MomentIndex> {
        let mut idx = MomentIndex::zero(d);
        for tok in s.split_whitespace() {
            let (head, rest) = tok.split_at(1);
            let (comp, pow) = rest.split_once('^')?;
            let i: usize = comp.parse().ok()?;
            if i == 0 || i > d {
                return None;
            }
            match head {
                "L" => idx.n_lambda[i - 1] += pow.parse::<u32>().ok()?,
                "Q" => {
                    let p = pow.strip_prefix('[')?.strip_suffix(']')?;
                    idx.n_q[i - 1] += p.parse::<u32>().ok()?;
                }
                _ => return None,
            }
        }
        Some(idx)
    }
}

impl fmt::Display for MomentIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (i, &a) in self.n_lambda.iter().enumerate() {
            if a > 0 {
                parts.push(format!("L{}^{}", i + 1, a));
            }
        }
        for (i, &b) in self.n_q.iter().enumerate() {
            if b > 0 {
                parts.push(format!("Q{}^[{}]", i + 1, b));
            }
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join(" "))
        }
    }
}

/// All `d`-vectors of nonnegative integers summing to `total`, first
/// component descending.
pub fn compositions(d: usize, total: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; d];
    fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let d = cur.len();
        if pos + 1 == d {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for v in (0..=left).rev() {
            cur[pos] = v;
            rec(pos + 1, left - v, cur, out);
        }
    }
    if d == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(0, total, &mut cur, &mut out);
    out
}

/// Indices of exactly total order `n` with `|n_Q| = k`, in block order.
pub fn block_indices(d: usize, k: u32, n: u32) -> Vec<MomentIndex> {
    let mut out = Vec::new();
    for nq in compositions(d, k) {
        for nl in compositions(d, n - k) {
            out.push(MomentIndex::new(nl, nq.clone()));
        }
    }
    out
}

/// Canonical ordering of every index of total order `1..=n`.
///
/// Orders ascend; within an order the number of `Q` factors ascends; within
/// such a block the `Q` exponents form the outer loop and the `λ` exponents
/// the inner one, each in descending lexicographic order.
pub fn enumerate_indices(d: usize, n: u32) -> Vec<MomentIndex> {
    let mut out = Vec::new();
    for order in 1..=n {
        for k in 0..=order {
            out.extend(block_indices(d, k, order));
        }
    }
    out
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Number of reduced moments of total order exactly `n` in dimension `d`.
pub fn dimension(d: usize, n: u32) -> usize {
    (1..=n as u64)
        .map(|k| binomial(2 * d as u64, k) * binomial(n as u64 - 1, k - 1))
        .sum::<u64>() as usize
}

/// Size of the stacked system of all orders up to `n`.
pub fn stacked_dimension(d: usize, n: u32) -> usize {
    (1..=n).map(|m| dimension(d, m)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(l: &[u32], q: &[u32]) -> MomentIndex {
        MomentIndex::new(l.to_vec(), q.to_vec())
    }

    #[test]
    fn dimension_values() {
        assert_eq!(dimension(2, 1), 4);
        assert_eq!(dimension(2, 2), 10);
        assert_eq!(dimension(2, 3), 20);
        assert_eq!(stacked_dimension(2, 3), 34);
        assert_eq!(stacked_dimension(2, 6), 209);
    }

    #[test]
    fn bivariate_first_order() {
        let v = enumerate_indices(2, 1);
        assert_eq!(v, vec![idx(&[1, 0], &[0, 0]), idx(&[0, 1], &[0, 0]), idx(&[0, 0], &[1, 0]), idx(&[0, 0], &[0, 1])]);
    }

    #[test]
    fn bivariate_second_order_blocks() {
        let v = enumerate_indices(2, 2);
        assert_eq!(&v[4..7], &[idx(&[2, 0], &[0, 0]), idx(&[1, 1], &[0, 0]), idx(&[0, 2], &[0, 0])]);
        assert_eq!(
            &v[7..11],
            &[idx(&[1, 0], &[1, 0]), idx(&[0, 1], &[1, 0]), idx(&[1, 0], &[0, 1]), idx(&[0, 1], &[0, 1])]
        );
        assert_eq!(&v[11..14], &[idx(&[0, 0], &[2, 0]), idx(&[0, 0], &[1, 1]), idx(&[0, 0], &[0, 2])]);
    }

    #[test]
    fn enumeration_length_matches_formula() {
        for d in 1..=4 {
            for n in 1..=4 {
                let v = enumerate_indices(d, n);
                assert_eq!(v.len(), stacked_dimension(d, n));
                let set: std::collections::HashSet<_> = v.iter().collect();
                assert_eq!(set.len(), v.len());
                assert_eq!(
                    v.iter().filter(|i| i.order() == n).count(),
                    binomial((n as u64) + 2 * d as u64 - 1, 2 * d as u64 - 1) as usize
                );
            }
        }
    }

    #[test]
    fn display_round_trip() {
        for i in enumerate_indices(3, 3) {
            let s = i.to_string();
            assert_eq!(MomentIndex::parse(3, &s), Some(i));
        }
        assert_eq!(idx(&[2, 1], &[1, 0]).to_string(), "L1^2 L2^1 Q1^[1]");
        assert_eq!(MomentIndex::parse(2, "L3^1"), None);
    }
}
