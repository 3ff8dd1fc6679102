use alloc::vec;
use alloc::vec::Vec;
use alloc::format;

use nalgebra::{DMatrix, SymmetricEigen};

use super::{CovarianceSpec, StructuredGrid};
use crate::math::{exp, sqrt};
use crate::{Error, Result};

/// Relative threshold (times `sigma2 * |D|`) under which negative
/// eigenvalues are treated as roundoff and clipped to zero.
pub const NEGATIVE_EIGENVALUE_TOLERANCE: f64 = 1e-10;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 0;

/// Truncated Karhunen-Loève expansion sampled at fine-cell centres.
///
/// Eigenfunctions are stored term-major: term `i` occupies
/// `eigenfunctions[i * cells..(i + 1) * cells]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KLBasis {
    grid: StructuredGrid,
    eigenvalues: Vec<f64>,
    eigenfunctions: Vec<f64>,
    mean_field: Vec<f64>,
    total_trace: f64,
}

impl KLBasis {
    /// Assembles a basis from stored parts (for instance a cache file).
    pub fn from_parts(
        grid: StructuredGrid,
        eigenvalues: Vec<f64>,
        eigenfunctions: Vec<f64>,
        mean_field: Vec<f64>,
        total_trace: f64,
    ) -> Result<Self> {
        let cells = grid.num_cells();
        if eigenfunctions.len() != eigenvalues.len() * cells {
            return Err(Error::DimensionMismatch {
                context: "eigenfunctions",
                expected: eigenvalues.len() * cells,
                actual: eigenfunctions.len(),
            });
        }
        if mean_field.len() != cells {
            return Err(Error::DimensionMismatch {
                context: "mean field",
                expected: cells,
                actual: mean_field.len(),
            });
        }
        if eigenvalues.iter().any(|&l| !(l >= 0.0)) || eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid(
                "eigenvalues",
                "must be non-negative and sorted non-increasing",
            ));
        }
        if !(total_trace > 0.0) {
            return Err(Error::invalid("total_trace", "must be positive"));
        }
        Ok(KLBasis {
            grid,
            eigenvalues,
            eigenfunctions,
            mean_field,
            total_trace,
        })
    }

    pub fn grid(&self) -> &StructuredGrid {
        &self.grid
    }

    pub fn n_terms(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfunction(&self, i: usize) -> &[f64] {
        let n = self.grid.num_cells();
        &self.eigenfunctions[i * n..(i + 1) * n]
    }

    pub fn eigenfunctions(&self) -> &[f64] {
        &self.eigenfunctions
    }

    pub fn mean_field(&self) -> &[f64] {
        &self.mean_field
    }

    pub fn total_trace(&self) -> f64 {
        self.total_trace
    }

    pub fn with_mean_field(mut self, mean: Vec<f64>) -> Result<Self> {
        if mean.len() != self.grid.num_cells() {
            return Err(Error::DimensionMismatch {
                context: "mean field",
                expected: self.grid.num_cells(),
                actual: mean.len(),
            });
        }
        self.mean_field = mean;
        Ok(self)
    }

    /// Keeps the leading `m` terms.
    pub fn truncate(mut self, m: usize) -> Result<Self> {
        if m > self.n_terms() {
            return Err(Error::invalid(
                "m",
                format!("cannot keep {m} of {} terms", self.n_terms()),
            ));
        }
        self.eigenvalues.truncate(m);
        self.eigenfunctions.truncate(m * self.grid.num_cells());
        Ok(self)
    }

    /// Share of the total covariance trace captured by the first `m` terms.
    pub fn energy_fraction(&self, m: usize) -> Result<f64> {
        if m > self.n_terms() {
            return Err(Error::invalid(
                "m",
                format!("{m} exceeds the {} retained terms", self.n_terms()),
            ));
        }
        let captured: f64 = self.eigenvalues[..m].iter().sum();
        Ok((captured / self.total_trace).clamp(0.0, 1.0))
    }

    /// Smallest number of retained terms whose energy reaches `target`.
    pub fn terms_for_energy(&self, target: f64) -> Option<usize> {
        let mut acc = 0.0;
        if target <= 0.0 {
            return Some(0);
        }
        for (i, l) in self.eigenvalues.iter().enumerate() {
            acc += l;
            if acc / self.total_trace >= target {
                return Some(i + 1);
            }
        }
        None
    }
}

/// Flips `v` so that its entry of largest magnitude (first on ties) is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn eigen(m: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let n = m.nrows();
    SymmetricEigen::try_new(m, EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::EigenSolver(format!("symmetric QR did not converge on a {n}x{n} matrix")))
}

/// Clips roundoff negatives and rejects genuinely negative eigenvalues.
fn clip(values: &mut [f64], tolerance: f64) -> Result<()> {
    for v in values.iter_mut() {
        if *v < -tolerance {
            return Err(Error::NotPositiveSemiDefinite {
                value: *v,
                tolerance,
            });
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(())
}

/// Indices of `values` sorted descending, ties kept in index order.
fn descending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

/// Nyström KLE: eigen-decomposition of the cell-area weighted covariance.
pub fn compute_kle(cov: &DMatrix<f64>, grid: &StructuredGrid, n_terms: usize) -> Result<KLBasis> {
    let cells = grid.num_cells();
    if cov.nrows() != cells || cov.ncols() != cells {
        return Err(Error::DimensionMismatch {
            context: "covariance matrix",
            expected: cells,
            actual: cov.nrows(),
        });
    }
    if n_terms > cells {
        return Err(Error::invalid(
            "n_terms",
            format!("{n_terms} terms requested on {cells} cells"),
        ));
    }
    let w = grid.cell_area();
    let sigma2 = (0..cells).map(|i| cov[(i, i)]).fold(0.0_f64, f64::max);
    let tolerance = NEGATIVE_EIGENVALUE_TOLERANCE * sigma2 * grid.domain_area();

    let eig = eigen(cov * w)?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    clip(&mut values, tolerance)?;
    let order = descending(&values);
    let total_trace: f64 = values.iter().sum();

    let scale = 1.0 / sqrt(w);
    let mut eigenvalues = Vec::with_capacity(n_terms);
    let mut eigenfunctions = Vec::with_capacity(n_terms * cells);
    for &k in order.iter().take(n_terms) {
        eigenvalues.push(values[k]);
        let start = eigenfunctions.len();
        eigenfunctions.extend(eig.eigenvectors.column(k).iter().map(|v| v * scale));
        fix_sign(&mut eigenfunctions[start..]);
    }
    KLBasis::from_parts(*grid, eigenvalues, eigenfunctions, vec![0.0; cells], total_trace)
}

/// Weighted 1-D eigenpairs of the Gaussian kernel along one axis.
fn axis_eigenpairs(n: usize, h: f64, corr: f64, tolerance: f64) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let m = DMatrix::from_fn(n, n, |i, j| {
        let d = (i as f64 - j as f64) * h;
        h * exp(-d * d / (2.0 * corr * corr))
    });
    let eig = eigen(m)?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    clip(&mut values, tolerance)?;
    let order = descending(&values);
    let sorted: Vec<f64> = order.iter().map(|&k| values[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (c, &k) in order.iter().enumerate() {
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        fix_sign(&mut v);
        vectors.column_mut(c).copy_from_slice(&v);
    }
    Ok((sorted, vectors))
}

/// KLE of the separable Gaussian kernel on a uniform grid.
///
/// The weighted covariance operator is the Kronecker product of two 1-D
/// operators, so its eigenpairs are products of 1-D eigenpairs. This gives
/// the same basis as [`compute_kle`] (up to the ordering of exactly equal
/// eigenvalues) at a tiny fraction of the cost.
pub fn compute_kle_separable(grid: &StructuredGrid, spec: &CovarianceSpec, n_terms: usize) -> Result<KLBasis> {
    spec.validate()?;
    let cells = grid.num_cells();
    if n_terms > cells {
        return Err(Error::invalid(
            "n_terms",
            format!("{n_terms} terms requested on {cells} cells"),
        ));
    }
    let (nx, ny) = (grid.nx(), grid.ny());
    let tol_x = NEGATIVE_EIGENVALUE_TOLERANCE * grid.lx();
    let tol_y = NEGATIVE_EIGENVALUE_TOLERANCE * grid.ly();
    let (mu, u) = axis_eigenpairs(nx, grid.hx(), spec.corr_x, tol_x)?;
    let (nu, v) = axis_eigenpairs(ny, grid.hy(), spec.corr_y, tol_y)?;

    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(cells);
    for (a, &ma) in mu.iter().enumerate() {
        for (b, &nb) in nu.iter().enumerate() {
            pairs.push((spec.sigma2 * ma * nb, a, b));
        }
    }
    pairs.sort_by(|p, q| q.0.total_cmp(&p.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
    let total_trace = spec.sigma2 * mu.iter().sum::<f64>() * nu.iter().sum::<f64>();

    let scale = 1.0 / sqrt(grid.cell_area());
    let mut eigenvalues = Vec::with_capacity(n_terms);
    let mut eigenfunctions = vec![0.0; n_terms * cells];
    for (t, &(lambda, a, b)) in pairs.iter().take(n_terms).enumerate() {
        eigenvalues.push(lambda);
        let f = &mut eigenfunctions[t * cells..(t + 1) * cells];
        for iy in 0..ny {
            for ix in 0..nx {
                f[grid.cell(ix, iy)] = u[(ix, a)] * v[(iy, b)] * scale;
            }
        }
        fix_sign(f);
    }
    KLBasis::from_parts(*grid, eigenvalues, eigenfunctions, vec![0.0; cells], total_trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::build_covariance;

    fn weighted_dot(g: &StructuredGrid, a: &[f64], b: &[f64]) -> f64 {
        g.cell_area() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }

    #[test]
    fn full_rank_trace_identity() {
        let g = StructuredGrid::unit(8, 6).unwrap();
        let spec = CovarianceSpec::new(1.7, 0.25, 0.4).unwrap();
        let cov = build_covariance(&g, &spec).unwrap();
        let klb = compute_kle(&cov, &g, g.num_cells()).unwrap();
        let sum: f64 = klb.eigenvalues().iter().sum();
        assert!((sum - 1.7).abs() < 1e-8);
        assert!((klb.total_trace() - 1.7).abs() < 1e-8);
        assert!((klb.energy_fraction(g.num_cells()).unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(klb.energy_fraction(0).unwrap(), 0.0);
    }

    #[test]
    fn eigenfunctions_orthonormal_and_sorted() {
        let g = StructuredGrid::unit(7, 7).unwrap();
        let spec = CovarianceSpec::new(1.0, 0.2, 0.2).unwrap();
        let cov = build_covariance(&g, &spec).unwrap();
        let klb = compute_kle(&cov, &g, 12).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                let d = weighted_dot(&g, klb.eigenfunction(i), klb.eigenfunction(j));
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-10, "<b{i},b{j}> = {d}");
            }
        }
        assert!(klb.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn reconstruction_error_decreases_with_terms() {
        let g = StructuredGrid::unit(6, 5).unwrap();
        let spec = CovarianceSpec::new(1.0, 0.3, 0.2).unwrap();
        let cov = build_covariance(&g, &spec).unwrap();
        let n = g.num_cells();
        let full = compute_kle(&cov, &g, n).unwrap();
        let norm = cov.norm();
        let mut last = f64::INFINITY;
        for m in [1, 3, 8, 15, n] {
            let mut approx = DMatrix::zeros(n, n);
            for k in 0..m {
                let b = nalgebra::DVector::from_column_slice(full.eigenfunction(k));
                approx += full.eigenvalues()[k] * &b * b.transpose();
            }
            let rel = (&cov - approx).norm() / norm;
            assert!(rel <= last + 1e-14);
            last = rel;
        }
        assert!(last <= 1e-8);
    }

    #[test]
    fn separable_matches_dense() {
        let g = StructuredGrid::new(7, 5, 1.0, 0.8).unwrap();
        let spec = CovarianceSpec::new(1.3, 0.3, 0.15).unwrap();
        let cov = build_covariance(&g, &spec).unwrap();
        let dense = compute_kle(&cov, &g, 10).unwrap();
        let sep = compute_kle_separable(&g, &spec, 10).unwrap();
        assert!((dense.total_trace() - sep.total_trace()).abs() < 1e-10);
        for k in 0..10 {
            let (ld, ls) = (dense.eigenvalues()[k], sep.eigenvalues()[k]);
            assert!((ld - ls).abs() < 1e-10 * dense.eigenvalues()[0], "term {k}: {ld} vs {ls}");
            // distinct spectrum here, so the functions agree up to sign
            let d = weighted_dot(&g, dense.eigenfunction(k), sep.eigenfunction(k));
            assert!((d.abs() - 1.0).abs() < 1e-8, "term {k}: overlap {d}");
        }
    }

    #[test]
    fn sign_convention() {
        let g = StructuredGrid::unit(5, 5).unwrap();
        let spec = CovarianceSpec::new(1.0, 0.2, 0.2).unwrap();
        let klb = compute_kle_separable(&g, &spec, 6).unwrap();
        for k in 0..6 {
            let f = klb.eigenfunction(k);
            let big = f.iter().copied().fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn non_psd_matrix_rejected() {
        let g = StructuredGrid::unit(2, 1).unwrap();
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            compute_kle(&cov, &g, 1),
            Err(Error::NotPositiveSemiDefinite { .. })
        ));
    }

    #[test]
    fn too_many_terms_rejected() {
        let g = StructuredGrid::unit(3, 3).unwrap();
        let spec = CovarianceSpec::new(1.0, 0.2, 0.2).unwrap();
        assert!(compute_kle_separable(&g, &spec, 10).is_err());
        let klb = compute_kle_separable(&g, &spec, 4).unwrap();
        assert!(klb.energy_fraction(5).is_err());
        assert!(klb.truncate(5).is_err());
    }
}
