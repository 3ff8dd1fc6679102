use alloc::vec;
use alloc::vec::Vec;

use super::fine::TpfaSystem;
use super::partition::CoarsePartition;
use crate::{Error, Result};

/// Net flux below which global boundary data cannot be normalised.
pub const DEGENERATE_FLUX: f64 = 1e-12;

/// How the flux profile on a coarse edge is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BasisFlavor {
    /// Uniform normal flux along the coarse edge.
    Local,
    /// Profile of a fine-scale velocity field on the coarse edge.
    Global,
}

/// Boundary information for the local basis problems.
#[derive(Debug, Clone, Copy)]
pub enum BoundaryData<'a> {
    Local,
    /// Fine edge fluxes of a global velocity field.
    Global(&'a [f64]),
}

impl BoundaryData<'_> {
    pub fn flavor(&self) -> BasisFlavor {
        match self {
            BoundaryData::Local => BasisFlavor::Local,
            BoundaryData::Global(_) => BasisFlavor::Global,
        }
    }
}

/// Velocity basis function of one interior coarse edge, stored as
/// block-local edge fluxes on its two adjacent blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct MsBasis {
    pub edge: usize,
    /// Blocks on the negative and positive side of the edge.
    pub blocks: (usize, usize),
    /// Normalised flux profile on the fine sub-edges (sums to one).
    pub profile: Vec<f64>,
    pub neg: Vec<f64>,
    pub pos: Vec<f64>,
    pub flavor: BasisFlavor,
    /// Global data was degenerate and the local profile was used instead.
    pub fallback: bool,
}

/// Flux profile on the sub-edges of coarse edge `e`.
fn profile(partition: &CoarsePartition, e: usize, data: BoundaryData<'_>) -> Result<(Vec<f64>, bool)> {
    let subs = partition.sub_edges(e);
    let fine = partition.fine();
    let uniform = || {
        let total: f64 = subs.iter().map(|&s| fine.edge_length(s)).sum();
        subs.iter().map(|&s| fine.edge_length(s) / total).collect::<Vec<_>>()
    };
    match data {
        BoundaryData::Local => Ok((uniform(), false)),
        BoundaryData::Global(u) => {
            if u.len() != fine.num_edges() {
                return Err(Error::DimensionMismatch {
                    context: "global boundary data",
                    expected: fine.num_edges(),
                    actual: u.len(),
                });
            }
            let net: f64 = subs.iter().map(|&s| u[s]).sum();
            if net.abs() < DEGENERATE_FLUX {
                Ok((uniform(), true))
            } else {
                Ok((subs.iter().map(|&s| u[s] / net).collect(), false))
            }
        }
    }
}

/// Integrated source weights of a block (sum to one).
///
/// Blocks containing a net source distribute the basis divergence like the
/// source, so that the reconstructed fine flux is cellwise conservative;
/// elsewhere it is spread uniformly.
pub(crate) fn block_weights(partition: &CoarsePartition, k: usize, source: &[f64]) -> Vec<f64> {
    let n = partition.block_grid().num_cells();
    let q = partition.gather(k, source);
    let total: f64 = q.iter().sum();
    let absolute: f64 = q.iter().map(|v| v.abs()).sum();
    if absolute > 0.0 && total.abs() > DEGENERATE_FLUX * absolute {
        q.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / n as f64; n]
    }
}

fn check_inputs(partition: &CoarsePartition, coefficient: &[f64], source: &[f64]) -> Result<()> {
    let n = partition.fine().num_cells();
    for (context, v) in [("coefficient", coefficient), ("source", source)] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                context,
                expected: n,
                actual: v.len(),
            });
        }
    }
    Ok(())
}

/// Solves one half of a basis on block `k` with the profile on `side`.
fn half(
    partition: &CoarsePartition,
    system: &TpfaSystem,
    weights: &[f64],
    side: usize,
    profile: &[f64],
    outflow: bool,
) -> Result<Vec<f64>> {
    let block = partition.block_grid();
    let mut boundary = vec![0.0; block.num_edges()];
    for (&l, &g) in partition.block_side(side).iter().zip(profile) {
        boundary[l] = g;
    }
    let sign = if outflow { 1.0 } else { -1.0 };
    let rate: Vec<f64> = weights.iter().map(|w| sign * w).collect();
    Ok(system.solve(&rate, Some(&boundary))?.flux)
}

fn block_system(partition: &CoarsePartition, k: usize, coefficient: &[f64]) -> Result<TpfaSystem> {
    TpfaSystem::new(*partition.block_grid(), &partition.gather(k, coefficient))
}

/// Basis function of interior coarse edge `edge`: unit flux through the
/// edge, leaving the negative block and entering the positive one.
pub fn build_ms_basis(
    partition: &CoarsePartition,
    edge: usize,
    coefficient: &[f64],
    source: &[f64],
    data: BoundaryData<'_>,
) -> Result<MsBasis> {
    check_inputs(partition, coefficient, source)?;
    let (kn, kp) = partition
        .edge_blocks(edge)
        .ok_or_else(|| Error::invalid("edge", "not an interior coarse edge"))?;
    let (profile, fallback) = profile(partition, edge, data)?;
    let (sn, sp) = partition.edge_sides(edge);
    let neg = half(
        partition,
        &block_system(partition, kn, coefficient)?,
        &block_weights(partition, kn, source),
        sn,
        &profile,
        true,
    )?;
    let pos = half(
        partition,
        &block_system(partition, kp, coefficient)?,
        &block_weights(partition, kp, source),
        sp,
        &profile,
        false,
    )?;
    Ok(MsBasis {
        edge,
        blocks: (kn, kp),
        profile,
        neg,
        pos,
        flavor: data.flavor(),
        fallback,
    })
}

/// Basis functions of every interior coarse edge.
#[derive(Debug, Clone, PartialEq)]
pub struct MsBasisSet {
    partition: CoarsePartition,
    flavor: BasisFlavor,
    bases: Vec<MsBasis>,
    // per block: (basis index, block is the negative side)
    block_bases: Vec<Vec<(usize, bool)>>,
}

pub fn assemble_ms_basis_set(
    partition: &CoarsePartition,
    coefficient: &[f64],
    source: &[f64],
    data: BoundaryData<'_>,
) -> Result<MsBasisSet> {
    check_inputs(partition, coefficient, source)?;
    let edges = partition.interior_edges();
    let mut block_bases: Vec<Vec<(usize, bool)>> = vec![Vec::new(); partition.num_blocks()];
    let mut profiles = Vec::with_capacity(edges.len());
    for (b, &e) in edges.iter().enumerate() {
        let (kn, kp) = partition.edge_blocks(e).expect("interior edge");
        block_bases[kn].push((b, true));
        block_bases[kp].push((b, false));
        profiles.push(profile(partition, e, data)?);
    }
    let mut halves: Vec<(Option<Vec<f64>>, Option<Vec<f64>>)> = vec![(None, None); edges.len()];
    for (k, list) in block_bases.iter().enumerate() {
        if list.is_empty() {
            continue;
        }
        // one factorisation per block serves all its edges
        let system = block_system(partition, k, coefficient)?;
        let weights = block_weights(partition, k, source);
        for &(b, is_neg) in list {
            let (sn, sp) = partition.edge_sides(edges[b]);
            let side = if is_neg { sn } else { sp };
            let flux = half(partition, &system, &weights, side, &profiles[b].0, is_neg)?;
            if is_neg {
                halves[b].0 = Some(flux);
            } else {
                halves[b].1 = Some(flux);
            }
        }
    }
    let bases = edges
        .iter()
        .zip(profiles)
        .zip(halves)
        .map(|((&e, (profile, fallback)), (neg, pos))| MsBasis {
            edge: e,
            blocks: partition.edge_blocks(e).expect("interior edge"),
            profile,
            neg: neg.expect("negative half solved"),
            pos: pos.expect("positive half solved"),
            flavor: data.flavor(),
            fallback,
        })
        .collect();
    Ok(MsBasisSet {
        partition: *partition,
        flavor: data.flavor(),
        bases,
        block_bases,
    })
}

impl MsBasisSet {
    pub fn partition(&self) -> &CoarsePartition {
        &self.partition
    }

    pub fn flavor(&self) -> BasisFlavor {
        self.flavor
    }

    pub fn bases(&self) -> &[MsBasis] {
        &self.bases
    }

    pub(crate) fn block_bases(&self, k: usize) -> &[(usize, bool)] {
        &self.block_bases[k]
    }

    /// Coarse edges whose global data was degenerate.
    pub fn fallbacks(&self) -> Vec<usize> {
        self.bases.iter().filter(|b| b.fallback).map(|b| b.edge).collect()
    }

    /// Fine flux field of one basis function.
    pub fn fine_flux(&self, b: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.partition.fine().num_edges()];
        self.add_fine_flux(b, 1.0, &mut out);
        out
    }

    /// `out += c * psi_b` on the fine edges.
    pub(crate) fn add_fine_flux(&self, b: usize, c: f64, out: &mut [f64]) {
        let p = &self.partition;
        let block = p.block_grid();
        let basis = &self.bases[b];
        let (kn, kp) = basis.blocks;
        for (l, &v) in basis.neg.iter().enumerate() {
            if v != 0.0 {
                out[p.fine_edge(kn, l)] += c * v;
            }
        }
        // the shared sub-edges were already added from the negative side
        for (l, &v) in basis.pos.iter().enumerate() {
            if v != 0.0 && !block.is_boundary_edge(l) {
                out[p.fine_edge(kp, l)] += c * v;
            }
        }
    }
}
