use proptest::prelude::*;
use rand::Rng;

use bpp_core::ising::{
    exact_joint, glauber_sample, network_dominance_audit, degree_condition, tree_ratio, Graph, IsingModel,
};
use bpp_core::rng::seeded;
use bpp_core::Signal;

/// Ferromagnetic zero-field correlations grow with every coupling.
#[test]
fn correlations_increase_with_coupling() {
    let mut rng = seeded(31);
    for _ in 0..20 {
        let n = rng.random_range(3..=8);
        let g = Graph::random_gnp(n, 0.5, &mut rng);
        if g.edges().is_empty() {
            continue;
        }
        let beta: Vec<f64> = g.edges().iter().map(|_| rng.random_range(0.0..1.0)).collect();
        let m = IsingModel::new(g.clone(), beta.clone(), vec![0.0; n]).unwrap();
        let e = rng.random_range(0..beta.len());
        let stronger = m.with_beta(e, beta[e] + 0.2).unwrap();
        let (t0, t1) = (exact_joint(&m).unwrap(), exact_joint(&stronger).unwrap());
        for i in 0..n {
            for j in (i + 1)..n {
                let (c0, c1) = (t0.correlation(i, j), t1.correlation(i, j));
                assert!(c0 >= -1e-12, "negative correlation {c0}");
                assert!(c1 >= c0 - 1e-12, "({i},{j}) fell from {c0} to {c1}");
            }
        }
    }
}

fn bounded_model() -> impl Strategy<Value = (IsingModel, bool)> {
    (any::<u64>(), 5usize..=10, 1usize..=3, 0.01f64..0.4, 0.0f64..1.0).prop_map(|(seed, n, d, hi, spread)| {
        let mut rng = seeded(seed);
        let g = Graph::random_bounded_degree(n, d, 2 * n, &mut rng);
        let lo = hi * (1.0 - 0.5 * spread);
        let beta: Vec<f64> = g.edges().iter().map(|_| rng.random_range(lo..=hi)).collect();
        let m = IsingModel::new(g, beta, vec![0.0; n]).unwrap();
        let holds = m.graph().max_degree() > 0
            && degree_condition(m.beta_min(), m.beta_max(), m.graph().max_degree()).unwrap().holds;
        (m, holds)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn degree_condition_implies_network_dominance((m, holds) in bounded_model()) {
        prop_assume!(holds);
        let audit = network_dominance_audit(&m).unwrap();
        prop_assert!(audit.failures.is_empty(), "{:?}", audit.failures.first());
    }
}

#[test]
fn tree_recursion_matches_enumeration() {
    let mut rng = seeded(32);
    let g = Graph::dary_tree(2, 3);
    let n = g.n();
    for _ in 0..10 {
        let beta: Vec<f64> = g.edges().iter().map(|_| rng.random_range(0.0..1.5)).collect();
        let alpha: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.5)).collect();
        let m = IsingModel::new(g.clone(), beta, alpha).unwrap();
        let t = exact_joint(&m).unwrap();
        let boundary = [(3, Signal::Pos), (5, Signal::Neg), (6, Signal::Pos)];
        let exact = t.conditional_ratio(0, &boundary).unwrap();
        let rec = tree_ratio(&m, 0, &boundary).unwrap();
        assert!((exact / rec - 1.0).abs() <= 1e-10, "{exact} vs {rec}");
    }
}

#[test]
fn glauber_matches_exact_marginals() {
    let g = Graph::cycle(5);
    let m = IsingModel::new(g, vec![0.4, 0.2, 0.6, 0.3, 0.5], vec![0.3, 0.0, 0.2, 0.0, 0.1]).unwrap();
    let t = exact_joint(&m).unwrap();
    let draws = glauber_sample(&m, 40_000, 100, &mut seeded(33)).unwrap();
    let n = draws.len() as f64;
    for i in 0..5 {
        let mean: f64 = draws.iter().map(|x| x[i].as_f64()).sum::<f64>() / n;
        assert!((mean - t.mean(i)).abs() < 0.03, "node {i}: {mean} vs {}", t.mean(i));
        let j = (i + 1) % 5;
        let corr: f64 = draws.iter().map(|x| x[i].as_f64() * x[j].as_f64()).sum::<f64>() / n;
        assert!((corr - t.correlation(i, j)).abs() < 0.03, "edge ({i},{j}): {corr} vs {}", t.correlation(i, j));
    }
}

#[test]
fn glauber_is_reproducible() {
    let m = IsingModel::uniform(Graph::path(6), 0.3).unwrap();
    let a = glauber_sample(&m, 50, 10, &mut seeded(5)).unwrap();
    let b = glauber_sample(&m, 50, 10, &mut seeded(5)).unwrap();
    assert_eq!(a, b);
}
