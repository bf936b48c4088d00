use hawkespop::bivariate::{
    build_m, eta, kappa, kappa_cubic, nested_block_matrix, psi_recursive_stationary, psi_recursive_transient,
    BlockSystem,
};
use hawkespop::fd::{default_solver, fd_moment, FdSpec};
use hawkespop::model::{HawkesModel, MarkLaw};
use hawkespop::moments::{
    assemble_system, dimension, enumerate_indices, stacked_dimension, stationary_moments, transient_moments,
    ClosedFormEvaluator, MomentIndex, TransientMethod, DEFAULT_HORIZON,
};
use hawkespop::numerics::OdeConfig;
use hawkespop::presets;
use hawkespop::simulator::estimate_moments;
use hawkespop::Rational;
use proptest::prelude::*;

fn tight() -> OdeConfig {
    OdeConfig::with_tolerances(1e-11, 1e-13)
}

fn random_model(d: usize, seed: &[f64]) -> HawkesModel<f64> {
    let mut it = seed.iter().cycle();
    let mut next = || *it.next().unwrap();
    let lb = (0..d).map(|_| 0.2 + next()).collect();
    let alpha: Vec<f64> = (0..d).map(|_| 1.0 + 2.0 * next()).collect();
    let mu = (0..d).map(|_| 0.3 + next()).collect();
    // Column sums of H at most 0.8 keep ρ(H) < 1.
    let marks = (0..d)
        .map(|i| (0..d).map(|_| MarkLaw::exponential(0.8 * alpha[i] * next() / d as f64)).collect())
        .collect();
    HawkesModel::new(lb, alpha, mu, marks).unwrap()
}

#[test]
fn system_size_matches_dimension_formula() {
    let m = presets::bivariate::<f64>();
    for d in 1..=4 {
        for n in 1..=4u32 {
            let total: usize = (1..=n).map(|k| dimension(d, k)).sum();
            assert_eq!(stacked_dimension(d, n), total);
            assert_eq!(enumerate_indices(d, n).len(), total);
        }
    }
    for n in 1..=4 {
        assert_eq!(assemble_system(&m, n).unwrap().dim(), stacked_dimension(2, n));
    }
    let tri = presets::trivariate::<f64>();
    assert_eq!(assemble_system(&tri, 2).unwrap().dim(), stacked_dimension(3, 2));
}

#[test]
fn index_order_is_shared_across_modules() {
    let m = presets::bivariate::<f64>();
    let sys = assemble_system(&m, 3).unwrap();
    assert_eq!(sys.indices, enumerate_indices(2, 3));
    let bs = BlockSystem::new(&m, 3).unwrap();
    for n in 1..=3 {
        for k in 0..=n {
            assert_eq!(bs.range(k, n), sys.block_range(k, n));
        }
    }
    let mc = estimate_moments(&m, 1.0, 3, 2, 1).unwrap();
    assert_eq!(mc.indices(), sys.indices.as_slice());
    let st = stationary_moments(&m, 3).unwrap();
    assert_eq!(st.indices(), sys.indices.as_slice());
}

#[test]
fn generator_equals_nested_block_matrix() {
    let m = presets::bivariate::<Rational>();
    for n in 1..=3 {
        let sys = assemble_system(&m, n).unwrap();
        let (f, b) = nested_block_matrix(&m, n).unwrap();
        assert_eq!(f, sys.f);
        assert_eq!(b, sys.b);
    }
}

#[test]
fn diagonal_blocks_match_generator() {
    let m = presets::bivariate::<Rational>();
    let sys = assemble_system(&m, 4).unwrap();
    for n in 1..=4 {
        for k in 0..=n {
            let r = sys.block_range(k, n);
            let block = sys.f.view((r.start, r.start), (r.len(), r.len())).into_owned();
            assert_eq!(build_m(&m, k, n).unwrap(), block, "k = {k}, n = {n}");
        }
    }
}

#[test]
fn recursions_match_engine() {
    let m = presets::bivariate::<f64>();
    let sys = assemble_system(&m, 3).unwrap();
    let st = stationary_moments(&m, 3).unwrap();
    let rec = psi_recursive_stationary(&m, 3).unwrap();
    for (k, v) in st.values().iter().enumerate() {
        assert!((rec[k] - v).abs() <= 1e-6, "{}", sys.indices[k]);
    }
    for t in [0.5, 5.0] {
        let eng = transient_moments(&sys, t, TransientMethod::Ode, &tight()).unwrap();
        let rec = psi_recursive_transient(&m, 3, t, &tight()).unwrap();
        for (k, v) in eng.values().iter().enumerate() {
            assert!((rec[k] - v).abs() <= 1e-6, "t = {t}, {}", sys.indices[k]);
        }
    }
}

#[test]
fn positivity_and_cauchy_schwarz() {
    let m = presets::bivariate::<f64>();
    let sys = assemble_system(&m, 4).unwrap();
    let get = |tab: &hawkespop::Table, l: [u32; 2], q: [u32; 2]| tab.value(&MomentIndex::new(l.to_vec(), q.to_vec())).unwrap();
    for t in [0.1, 1.0, 5.0, 20.0] {
        let tab = transient_moments(&sys, t, TransientMethod::Auto, &tight()).unwrap();
        for (idx, v) in tab.iter() {
            let pure = idx.n_lambda.iter().chain(&idx.n_q).filter(|&&e| e > 0).count() == 1;
            if pure {
                assert!(*v > 0.0, "{idx} at t = {t}");
            }
        }
        let l12 = get(&tab, [1, 1], [0, 0]);
        assert!(l12 * l12 <= get(&tab, [2, 0], [0, 0]) * get(&tab, [0, 2], [0, 0]));
        // E[Q1 Q2]² ≤ E[Q1²] E[Q2²] with E[Q²] = E[Q^[2]] + E[Q].
        let q12 = get(&tab, [0, 0], [1, 1]);
        let q1 = get(&tab, [0, 0], [2, 0]) + get(&tab, [0, 0], [1, 0]);
        let q2 = get(&tab, [0, 0], [0, 2]) + get(&tab, [0, 0], [0, 1]);
        assert!(q12 * q12 <= q1 * q2);
        let lq = get(&tab, [1, 0], [1, 0]);
        assert!(lq * lq <= get(&tab, [2, 0], [0, 0]) * q1);
    }
}

#[test]
fn fd_consistency_on_both_presets() {
    for (m, t) in [(presets::trivariate::<f64>(), 5.0), (presets::bivariate::<f64>(), 5.0)] {
        let sys = assemble_system(&m, 2).unwrap();
        let tab = transient_moments(&sys, t, TransientMethod::Auto, &tight()).unwrap();
        for n in 1..=2 {
            let mut mre = 0.0;
            let mut mae = 0.0;
            for (idx, v) in tab.iter().filter(|(i, _)| i.order() == n) {
                let f = fd_moment(&m, t, idx, &FdSpec::default(), &default_solver()).unwrap();
                mae += (f - v).abs();
                mre += (f - v).abs() / v;
            }
            assert!(mre <= 5e-3, "d = {}, n = {n}: MRE {mre}", m.d());
            assert!(mae <= 1e-2, "d = {}, n = {n}: MAE {mae}", m.d());
        }
    }
}

#[test]
fn monte_carlo_covers_exact_values() {
    let m = presets::bivariate::<f64>();
    let sys = assemble_system(&m, 2).unwrap();
    let tab = transient_moments(&sys, 5.0, TransientMethod::Auto, &tight()).unwrap();
    let mc = estimate_moments(&m, 5.0, 2, 10_000, 2024).unwrap();
    for (idx, v) in tab.iter() {
        let (lo, hi) = {
            let e = mc.value(idx).unwrap();
            (e.mean - 2.5758 * e.std_error, e.mean + 2.5758 * e.std_error)
        };
        assert!(lo <= *v && *v <= hi, "{idx}: {v} outside [{lo}, {hi}]");
    }
}

#[test]
fn closed_form_work_is_independent_of_t() {
    let m = presets::bivariate::<f64>();
    let sys = assemble_system(&m, 3).unwrap();
    let ev = ClosedFormEvaluator::new(&sys, DEFAULT_HORIZON).unwrap();
    let a = ev.eval(5.0).unwrap();
    let b = ev.eval(500.0).unwrap();
    assert!(a.iter().chain(b.iter()).all(|x| x.is_finite()));
    // Same evaluator, same squaring count, for every t up to the horizon.
    let again = ClosedFormEvaluator::new(&sys, DEFAULT_HORIZON).unwrap();
    assert_eq!(ev.squarings(), again.squarings());
    let st = stationary_moments(&m, 3).unwrap();
    for (k, v) in st.values().iter().enumerate() {
        assert!((b[k] - v).abs() < 1e-8 * v.abs().max(1.0));
    }
}

#[test]
fn eigenvalue_identities() {
    let m = presets::bivariate::<f64>();
    let (ab, bb) = (
        [m.alpha()[0] - m.mark(0, 0).mean(), m.alpha()[1] - m.mark(1, 1).mean()],
        m.mark(0, 1).mean() * m.mark(1, 0).mean(),
    );
    let ([e1, e2], _) = eta(&m).unwrap();
    assert!((e1 + e2 + ab[0] + ab[1]).abs() < 1e-12);
    assert!((e1 * e2 - (ab[0] * ab[1] - bb)).abs() < 1e-12);
    let k = kappa(&m).unwrap();
    assert!((k.iter().sum::<f64>() + 3.0 * (ab[0] + ab[1])).abs() < 1e-10);
    let c = kappa_cubic(&m).unwrap();
    for x in k {
        assert!((x * x * x + c[0] * x * x + c[1] * x + c[2]).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_models_keep_cauchy_schwarz(seed in proptest::collection::vec(0.05f64..1.0, 12), t in 0.1f64..10.0) {
        let m = random_model(2, &seed);
        let sys = assemble_system(&m, 2).unwrap();
        let tab = transient_moments(&sys, t, TransientMethod::Auto, &tight()).unwrap();
        let g = |l: [u32; 2]| tab.value(&MomentIndex::new(l.to_vec(), vec![0, 0])).unwrap();
        let l12 = g([1, 1]);
        prop_assert!(l12 * l12 <= g([2, 0]) * g([0, 2]) * (1.0 + 1e-12));
    }

    #[test]
    fn random_models_closed_form_matches_ode(seed in proptest::collection::vec(0.05f64..1.0, 12), t in 0.1f64..10.0) {
        let m = random_model(2, &seed);
        let sys = assemble_system(&m, 2).unwrap();
        let a = transient_moments(&sys, t, TransientMethod::ClosedForm, &tight()).unwrap();
        let b = transient_moments(&sys, t, TransientMethod::Ode, &tight()).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-7 * y.abs().max(1.0));
        }
    }
}
