#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};

/// Gauss-Legendre nodes and weights on [-1, 1], weights scaled to the
/// uniform probability density (they sum to one).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        x[i] = -z;
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

/// Tensor Gauss-Legendre expectation of `f` under the uniform density.
pub fn tensor_expectation(dim: usize, n: usize, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let (x, w) = gauss_legendre(n);
    let mut idx = vec![0usize; dim];
    let mut point = vec![0.0; dim];
    let mut sum = 0.0;
    loop {
        let mut weight = 1.0;
        for d in 0..dim {
            point[d] = x[idx[d]];
            weight *= w[idx[d]];
        }
        sum += weight * f(&point);
        let mut d = 0;
        loop {
            if d == dim {
                return sum;
            }
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Deterministic points in [-1, 1]^dim.
pub fn points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    (0..count).map(|_| (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect()).collect()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Sparse polynomial: sum of `c * prod theta_d^p`.
#[derive(Clone, Debug)]
pub struct Poly {
    pub terms: Vec<(f64, Vec<(usize, i32)>)>,
}

impl Poly {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, m)| c * m.iter().map(|&(d, p)| x[d].powi(p)).product::<f64>())
            .sum()
    }
}

pub struct Case {
    pub n: usize,
    pub active: Vec<usize>,
}

pub fn cases() -> Vec<Case> {
    vec![
        Case { n: 4, active: vec![0, 2] },
        Case { n: 4, active: vec![0, 1, 3] },
        Case { n: 6, active: vec![1, 4] },
        Case { n: 6, active: vec![0, 2, 5] },
    ]
}

/// Members whose hybrid surrogate has a square the level-2 rules integrate
/// exactly: on the active block at most quadratic per variable plus bilinear
/// pairs, quadratic lines, and interactions with inactive variables that are
/// odd in an inactive variable (they vanish on every cut through the anchor
/// and are orthogonal to functions of the active block).
pub fn corpus_member(case: &Case, seed: u64) -> Poly {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut c = || rng.random_range(-1.0..1.0);
    let inactive: Vec<usize> = (0..case.n).filter(|d| !case.active.contains(d)).collect();
    let mut terms = vec![(c() + 2.0, vec![])];
    for &i in &case.active {
        terms.push((c(), vec![(i, 1)]));
        terms.push((c(), vec![(i, 2)]));
    }
    for (a, &i) in case.active.iter().enumerate() {
        for &j in &case.active[a + 1..] {
            terms.push((c(), vec![(i, 1), (j, 1)]));
        }
    }
    for &k in &inactive {
        terms.push((0.5 * c(), vec![(k, 1)]));
        terms.push((0.5 * c(), vec![(k, 2)]));
    }
    let (i, k) = (case.active[0], inactive[0]);
    let l = *inactive.last().unwrap();
    terms.push((0.3 * c(), vec![(i, 1), (k, 1)]));
    terms.push((0.2 * c(), vec![(i, 2), (k, 3)]));
    if l != k {
        terms.push((0.2 * c(), vec![(l, 2), (k, 1)]));
    }
    terms.push((0.1 * c(), vec![(case.active[1], 3), (l, 1)]));
    Poly { terms }
}

pub fn corpus() -> Vec<(usize, Vec<usize>, Poly)> {
    let mut out = Vec::new();
    for (ci, case) in cases().into_iter().enumerate() {
        for s in 0..3 {
            let p = corpus_member(&case, 100 * ci as u64 + s);
            out.push((case.n, case.active.clone(), p));
        }
    }
    out
}

pub fn genz(n: usize) -> Vec<Box<dyn Fn(&[f64]) -> f64>> {
    let a: Vec<f64> = (0..n).map(|d| 1.0 / (1.0 + d as f64)).collect();
    let a1 = a.clone();
    let a2 = a.clone();
    let a3 = a.clone();
    vec![
        // oscillatory
        Box::new(move |x: &[f64]| (0.3 + x.iter().zip(&a1).map(|(x, a)| a * x).sum::<f64>()).cos()),
        // product peak
        Box::new(move |x: &[f64]| x.iter().zip(&a2).map(|(x, a)| 1.0 / (1.0 + (a * (x - 0.2)).powi(2))).product()),
        // corner peak
        Box::new(move |x: &[f64]| (3.0 + x.iter().zip(&a3).map(|(x, a)| a * x).sum::<f64>()).powi(-2)),
        // Gaussian
        Box::new(move |x: &[f64]| (-x.iter().zip(&a).map(|(x, a)| (a * x).powi(2)).sum::<f64>()).exp()),
    ]
}
