mod common;

use common::tensor_expectation;
use stochflow_core::math::compensated_sum;
use stochflow_core::sparsegrid::{build_sparse_grid, count_nodes, Rule1D};

fn moment(alpha: &[u32]) -> f64 {
    alpha
        .iter()
        .map(|&a| if a % 2 == 1 { 0.0 } else { 1.0 / (a as f64 + 1.0) })
        .product()
}

fn multi_indices(dim: usize, max_degree: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        let mut next = Vec::new();
        for a in &out {
            let used: u32 = a.iter().sum();
            for k in 0..=max_degree - used {
                let mut b = a.clone();
                b.push(k);
                next.push(b);
            }
        }
        out = next;
    }
    out
}

#[test]
fn level_two_integrates_degree_five() {
    for dim in 1..=3 {
        let g = build_sparse_grid(dim, 2).unwrap();
        for alpha in multi_indices(dim, 5) {
            let vals: Vec<f64> = g
                .nodes()
                .map(|x| x.iter().zip(&alpha).map(|(x, &a)| x.powi(a as i32)).product())
                .collect();
            let q = g.quadrature(&vals).unwrap();
            assert!((q - moment(&alpha)).abs() < 1e-10, "alpha {alpha:?}: {q}");
        }
    }
}

#[test]
fn weights_sum_to_one() {
    for dim in [1, 10, 80] {
        let g = build_sparse_grid(dim, 2).unwrap();
        let s = compensated_sum(g.weights().iter().copied());
        assert!((s - 1.0).abs() < 1e-12, "dim {dim}: {s}");
    }
}

#[test]
fn counts_match_enumeration_and_closed_form() {
    for n in [1usize, 2, 5, 10, 31, 80] {
        let closed = 2 * n * n + 2 * n + 1;
        assert_eq!(count_nodes(n, 2), closed as u64);
        assert_eq!(build_sparse_grid(n, 2).unwrap().num_nodes(), closed);
    }
    assert_eq!(count_nodes(80, 2), 12961);
}

#[test]
fn one_dimensional_rule_matches_gauss_oracle() {
    for level in 0..=4 {
        let r = Rule1D::new(level);
        let exact = if level == 0 { 1 } else { r.len() as i32 };
        for p in 0..=exact {
            let v: Vec<f64> = r.nodes().iter().map(|x| x.powi(p)).collect();
            let oracle = tensor_expectation(1, 12, |x| x[0].powi(p));
            assert!((r.quadrature(&v) - oracle).abs() < 1e-13, "level {level} degree {p}");
        }
    }
}

#[test]
fn smooth_integrand_converges_to_oracle() {
    let f = |x: &[f64]| (0.5 * x[0] - 0.3 * x[1] + 0.2 * x[2]).exp();
    let oracle = tensor_expectation(3, 12, f);
    let mut last = f64::INFINITY;
    for level in 1..=5 {
        let g = build_sparse_grid(3, level).unwrap();
        let vals: Vec<f64> = g.nodes().map(f).collect();
        let err = (g.quadrature(&vals).unwrap() - oracle).abs();
        assert!(err < last);
        last = err;
    }
    assert!(last < 1e-9);
}
