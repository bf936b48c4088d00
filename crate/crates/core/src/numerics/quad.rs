use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_DEPTH: u32 = 60;

fn gk15<T: Real, G: FnMut(T) -> Result<T>>(g: &mut G, a: T, b: T) -> Result<(T, T)> {
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    let fc = g(mid)?;
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for k in 0..7 {
        let dx = half * T::lit(XGK[k]);
        let f1 = g(mid - dx)?;
        let f2 = g(mid + dx)?;
        kron += (f1 + f2) * T::lit(WGK[k]);
        if k % 2 == 1 {
            gauss += (f1 + f2) * T::lit(WG[k / 2]);
        }
    }
    Ok((kron * half, ((kron - gauss) * half).abs()))
}

/// Adaptive Gauss–Kronrod (7/15) quadrature to absolute tolerance `tol`.
pub fn quad_adaptive<T: Real, G: FnMut(T) -> T>(mut g: G, a: T, b: T, tol: T) -> Result<T> {
    if a == b {
        return Ok(T::zero());
    }
    if b < a {
        return quad_adaptive(g, b, a, tol).map(|v| -v);
    }
    let mut checked = |x: T| {
        let v = g(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite("integrand"))
        }
    };
    let total = b - a;
    let mut stack = vec![(a, b, 0u32)];
    let mut sum = T::zero();
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err) = gk15(&mut checked, lo, hi)?;
        let budget = tol * (hi - lo) / total;
        let floor = val.abs() * T::lit(50.0) * T::default_epsilon();
        if err <= budget || err <= floor || depth >= MAX_DEPTH {
            sum += val;
        } else {
            let mid = (lo + hi) * T::lit(0.5);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Ok(sum)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = T::lit(-x);
        nodes[n - 1 - i] = T::lit(x);
        weights[i] = T::lit(w);
        weights[n - 1 - i] = T::lit(w);
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_and_lines() {
        assert!((quad_adaptive(|_: f64| 1.0, 0.0, 2.0, 1e-12).unwrap() - 2.0).abs() < 1e-14);
        assert!((quad_adaptive(|u: f64| u, 0.0, 1.0, 1e-12).unwrap() - 0.5).abs() < 1e-14);
        assert!((quad_adaptive(|u: f64| u, 1.0, 0.0, 1e-12).unwrap() + 0.5).abs() < 1e-14);
    }

    #[test]
    fn oscillatory_and_peaked() {
        let v = quad_adaptive(|u: f64| (10.0 * u).sin(), 0.0, 3.0, 1e-12).unwrap();
        assert!((v - (1.0 - 30f64.cos()) / 10.0).abs() < 1e-11);
        let v = quad_adaptive(|u: f64| 1.0 / (1e-4 + u * u), -1.0, 1.0, 1e-10).unwrap();
        let want = 2.0 * (1.0 / 1e-2) * (1.0f64 / 1e-2).atan();
        assert!((v - want).abs() < 1e-8 * want);
    }

    #[test]
    fn non_finite_is_an_error() {
        assert!(quad_adaptive(|u: f64| if u > 0.5 { f64::NAN } else { u }, 0.0, 1.0, 1e-8).is_err());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..40 {
            let (x, w) = gauss_legendre::<f64>(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let deg = 2 * n - 1;
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let want = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((got - want).abs() < 1e-12, "n={n}");
        }
    }
}
