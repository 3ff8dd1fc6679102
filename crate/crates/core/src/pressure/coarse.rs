use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::basis::MsBasisSet;
use super::fine::{transmissibility, MixedSolution, RESIDUAL_TOLERANCE};
use crate::{Error, Result};

/// Coarse mixed solution and the fine flux reconstructed from it.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseSolution {
    /// Block pressures and coarse edge fluxes.
    pub coarse: MixedSolution,
    /// Weight of each basis function.
    pub coefficients: Vec<f64>,
    pub fine_flux: Vec<f64>,
}

/// Galerkin mixed solve on the span of the basis set with piecewise
/// constant block pressures.
///
/// The velocity bilinear form is evaluated on the fine edges with the
/// two-point inverse transmissibilities of `coefficient`, so it changes
/// with the mobility while the basis stays fixed.
pub fn solve_coarse(set: &MsBasisSet, coefficient: &[f64], source: &[f64]) -> Result<CoarseSolution> {
    let p = set.partition();
    let fine = p.fine();
    let block = p.block_grid();
    let n_cells = fine.num_cells();
    for (context, v) in [("coefficient", coefficient), ("source", source)] {
        if v.len() != n_cells {
            return Err(Error::DimensionMismatch {
                context,
                expected: n_cells,
                actual: v.len(),
            });
        }
    }
    if let Some(c) = coefficient.iter().position(|&k| !(k > 0.0 && k.is_finite())) {
        return Err(Error::invalid(
            "coefficient",
            alloc::format!("cell {c} has non-positive value {}", coefficient[c]),
        ));
    }
    let nb = set.bases().len();
    let nk = p.num_blocks();
    let size = nb + nk + 1;
    let mut m = DMatrix::<f64>::zeros(size, size);

    // velocity mass matrix, block by block
    let mut inv_t = vec![0.0; block.num_edges()];
    for k in 0..nk {
        let local = p.gather(k, coefficient);
        for (e, slot) in inv_t.iter_mut().enumerate() {
            *slot = match block.edge_cells(e) {
                (Some(l), Some(r)) => 1.0 / transmissibility(block, e, local[l], local[r]),
                _ => 0.0,
            };
        }
        let list = set.block_bases(k);
        let restrict = |b: usize, neg: bool| {
            let basis = &set.bases()[b];
            if neg {
                &basis.neg
            } else {
                &basis.pos
            }
        };
        for (i, &(bi, ni)) in list.iter().enumerate() {
            let fi = restrict(bi, ni);
            for &(bj, nj) in &list[i..] {
                let fj = restrict(bj, nj);
                let a: f64 = fi.iter().zip(fj).zip(&inv_t).map(|((x, y), w)| x * y * w).sum();
                m[(bi, bj)] += a;
                if bi != bj {
                    m[(bj, bi)] += a;
                }
            }
        }
    }
    // the fine sub-edges on each coarse edge
    for (b, basis) in set.bases().iter().enumerate() {
        for (&s, &g) in p.sub_edges(basis.edge).iter().zip(&basis.profile) {
            let (l, r) = fine.edge_cells(s);
            let (l, r) = (l.expect("interior"), r.expect("interior"));
            m[(b, b)] += g * g / transmissibility(fine, s, coefficient[l], coefficient[r]);
        }
    }
    // divergence: +1 leaving the negative block, -1 entering the positive one
    for (b, basis) in set.bases().iter().enumerate() {
        let (kn, kp) = basis.blocks;
        m[(nb + kn, b)] = 1.0;
        m[(nb + kp, b)] = -1.0;
        m[(b, nb + kn)] = -1.0;
        m[(b, nb + kp)] = 1.0;
    }
    // mean-zero block pressure
    let area = p.block_area();
    for k in 0..nk {
        m[(nb + k, size - 1)] = area;
        m[(size - 1, nb + k)] = area;
    }
    let cell_area = fine.cell_area();
    let mut rhs = DVector::<f64>::zeros(size);
    let mut q_block = vec![0.0; nk];
    for (c, &q) in source.iter().enumerate() {
        q_block[p.block_of(c)] += q * cell_area;
    }
    let net: f64 = q_block.iter().sum();
    let absolute: f64 = q_block.iter().map(|q| q.abs()).sum();
    if net.abs() > super::fine::COMPATIBILITY_TOLERANCE * absolute.max(f64::MIN_POSITIVE) {
        return Err(Error::IncompatibleSource { net });
    }
    for (k, &q) in q_block.iter().enumerate() {
        rhs[nb + k] = q;
    }

    let scale = (0..size).map(|i| m[(i, i)].abs()).fold(0.0_f64, f64::max);
    let x = m
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularSystem {
            row: 0,
            pivot: 0.0,
            scale,
        })?;
    let coefficients: Vec<f64> = x.as_slice()[..nb].to_vec();
    let pressure: Vec<f64> = x.as_slice()[nb..nb + nk].to_vec();

    let mut fine_flux = vec![0.0; fine.num_edges()];
    for (b, &c) in coefficients.iter().enumerate() {
        set.add_fine_flux(b, c, &mut fine_flux);
    }
    let mut block_out = vec![0.0; nk];
    for c in 0..n_cells {
        block_out[p.block_of(c)] += fine.cell_outflow(&fine_flux, c);
    }
    let rate_scale = q_block.iter().map(|q| q.abs()).fold(0.0_f64, f64::max);
    let residual = block_out
        .iter()
        .zip(&q_block)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    if residual > RESIDUAL_TOLERANCE * rate_scale.max(f64::MIN_POSITIVE) && residual > 0.0 {
        return Err(Error::Residual {
            residual,
            tolerance: RESIDUAL_TOLERANCE * rate_scale,
        });
    }
    let coarse_grid = p.coarse();
    let mut coarse_flux = vec![0.0; coarse_grid.num_edges()];
    for (basis, &c) in set.bases().iter().zip(&coefficients) {
        coarse_flux[basis.edge] = c;
    }
    Ok(CoarseSolution {
        coarse: MixedSolution {
            pressure,
            flux: coarse_flux,
        },
        coefficients,
        fine_flux,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::StructuredGrid;
    use crate::pressure::{assemble_ms_basis_set, solve_fine_mixed, BoundaryData, CoarsePartition, Wells};

    fn perm(g: &StructuredGrid) -> Vec<f64> {
        (0..g.num_cells())
            .map(|c| {
                let (x, y) = g.center(c);
                (1.2 * (11.0 * x * y).sin() + 0.8 * (6.0 * x).cos()).exp()
            })
            .collect()
    }

    #[test]
    fn zero_source() {
        let fine = StructuredGrid::unit(8, 8).unwrap();
        let p = CoarsePartition::new(fine, StructuredGrid::unit(2, 2).unwrap()).unwrap();
        let ones = vec![1.0; 64];
        let zero = vec![0.0; 64];
        let set = assemble_ms_basis_set(&p, &ones, &zero, BoundaryData::Local).unwrap();
        let s = solve_coarse(&set, &ones, &zero).unwrap();
        assert!(s.fine_flux.iter().all(|f| f.abs() < 1e-14));
        assert!(s.coarse.pressure.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn conservative_at_both_scales() {
        let fine = StructuredGrid::unit(24, 24).unwrap();
        let p = CoarsePartition::new(fine, StructuredGrid::unit(4, 4).unwrap()).unwrap();
        let k = perm(&fine);
        let q = Wells::quarter_five_spot(&fine, 1.0).source(&fine);
        let set = assemble_ms_basis_set(&p, &k, &q, BoundaryData::Local).unwrap();
        let s = solve_coarse(&set, &k, &q).unwrap();
        for c in 0..fine.num_cells() {
            let div = fine.cell_outflow(&s.fine_flux, c);
            assert!((div - q[c] * fine.cell_area()).abs() < 1e-10);
        }
        for e in 0..fine.num_edges() {
            if fine.is_boundary_edge(e) {
                assert_eq!(s.fine_flux[e], 0.0);
            }
        }
    }

    #[test]
    fn exact_global_data_is_reproduced() {
        let fine = StructuredGrid::unit(24, 24).unwrap();
        let p = CoarsePartition::new(fine, StructuredGrid::unit(4, 4).unwrap()).unwrap();
        let k = perm(&fine);
        let q = Wells::quarter_five_spot(&fine, 1.0).source(&fine);
        let u = solve_fine_mixed(&fine, &k, &q).unwrap();
        let set = assemble_ms_basis_set(&p, &k, &q, BoundaryData::Global(&u.flux)).unwrap();
        assert!(set.fallbacks().is_empty());
        let s = solve_coarse(&set, &k, &q).unwrap();
        let err: f64 = s.fine_flux.iter().zip(&u.flux).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let norm: f64 = u.flux.iter().map(|a| a * a).sum::<f64>();
        assert!((err / norm).sqrt() < 1e-8);
    }

    #[test]
    fn local_basis_is_close_to_fine_solution() {
        let fine = StructuredGrid::unit(24, 24).unwrap();
        let p = CoarsePartition::new(fine, StructuredGrid::unit(4, 4).unwrap()).unwrap();
        let k = perm(&fine);
        let q = Wells::quarter_five_spot(&fine, 1.0).source(&fine);
        let u = solve_fine_mixed(&fine, &k, &q).unwrap();
        let set = assemble_ms_basis_set(&p, &k, &q, BoundaryData::Local).unwrap();
        let s = solve_coarse(&set, &k, &q).unwrap();
        let err: f64 = s.fine_flux.iter().zip(&u.flux).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let norm: f64 = u.flux.iter().map(|a| a * a).sum::<f64>();
        assert!((err / norm).sqrt() < 0.5);
    }
}
