use alloc::vec::Vec;

use crate::field::{Edge, StructuredGrid};
use crate::{Error, Result};

/// Equal rectangular blocks of fine cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarsePartition {
    fine: StructuredGrid,
    coarse: StructuredGrid,
    block: StructuredGrid,
    bx: usize,
    by: usize,
}

impl CoarsePartition {
    pub fn new(fine: StructuredGrid, coarse: StructuredGrid) -> Result<Self> {
        if !fine.is_partitioned_by(&coarse) {
            return Err(Error::invalid(
                "coarse grid",
                alloc::format!(
                    "{}x{} blocks do not tile the {}x{} fine grid",
                    coarse.nx(),
                    coarse.ny(),
                    fine.nx(),
                    fine.ny()
                ),
            ));
        }
        let bx = fine.nx() / coarse.nx();
        let by = fine.ny() / coarse.ny();
        Ok(CoarsePartition {
            fine,
            coarse,
            block: StructuredGrid::new(bx, by, coarse.hx(), coarse.hy())?,
            bx,
            by,
        })
    }

    pub fn fine(&self) -> &StructuredGrid {
        &self.fine
    }

    pub fn coarse(&self) -> &StructuredGrid {
        &self.coarse
    }

    /// Grid of one block in local coordinates.
    pub fn block_grid(&self) -> &StructuredGrid {
        &self.block
    }

    pub fn num_blocks(&self) -> usize {
        self.coarse.num_cells()
    }

    pub fn block_of(&self, cell: usize) -> usize {
        let (ix, iy) = self.fine.cell_coords(cell);
        self.coarse.cell(ix / self.bx, iy / self.by)
    }

    pub fn block_area(&self) -> f64 {
        self.coarse.cell_area()
    }

    /// Fine cell of local cell `local` in block `k`.
    pub fn fine_cell(&self, k: usize, local: usize) -> usize {
        let (kx, ky) = self.coarse.cell_coords(k);
        let (lx, ly) = self.block.cell_coords(local);
        self.fine.cell(kx * self.bx + lx, ky * self.by + ly)
    }

    /// Fine edge of local edge `local` in block `k`.
    pub fn fine_edge(&self, k: usize, local: usize) -> usize {
        let (kx, ky) = self.coarse.cell_coords(k);
        match self.block.edge(local) {
            Edge::X { ix, iy } => self.fine.x_edge(kx * self.bx + ix, ky * self.by + iy),
            Edge::Y { ix, iy } => self.fine.y_edge(kx * self.bx + ix, ky * self.by + iy),
        }
    }

    pub fn block_cells(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.block.num_cells()).map(move |l| self.fine_cell(k, l))
    }

    /// Gathers a per-cell fine field into block-local order.
    pub fn gather(&self, k: usize, field: &[f64]) -> Vec<f64> {
        self.block_cells(k).map(|c| field[c]).collect()
    }

    /// Coarse edges shared by two blocks.
    pub fn interior_edges(&self) -> Vec<usize> {
        (0..self.coarse.num_edges())
            .filter(|&e| !self.coarse.is_boundary_edge(e))
            .collect()
    }

    /// Blocks on the negative and positive side of an interior coarse edge.
    pub fn edge_blocks(&self, e: usize) -> Option<(usize, usize)> {
        match self.coarse.edge_cells(e) {
            (Some(a), Some(b)) => Some((a, b)),
            _ => None,
        }
    }

    /// Local edges of a block lying on one of its four sides, given as
    /// `0 = west, 1 = east, 2 = south, 3 = north`.
    pub fn block_side(&self, side: usize) -> Vec<usize> {
        let b = &self.block;
        match side {
            0 => (0..self.by).map(|iy| b.x_edge(0, iy)).collect(),
            1 => (0..self.by).map(|iy| b.x_edge(self.bx, iy)).collect(),
            2 => (0..self.bx).map(|ix| b.y_edge(ix, 0)).collect(),
            _ => (0..self.bx).map(|ix| b.y_edge(ix, self.by)).collect(),
        }
    }

    /// Side of a coarse edge as seen from its negative and positive block.
    pub fn edge_sides(&self, e: usize) -> (usize, usize) {
        match self.coarse.edge(e) {
            Edge::X { .. } => (1, 0),
            Edge::Y { .. } => (3, 2),
        }
    }

    /// Fine edges making up a coarse edge, in local side order.
    pub fn sub_edges(&self, e: usize) -> Vec<usize> {
        let (neg, _) = self.edge_blocks(e).unwrap_or((0, 0));
        let (side, _) = self.edge_sides(e);
        match self.coarse.edge_cells(e) {
            (Some(_), _) => self.block_side(side).into_iter().map(|l| self.fine_edge(neg, l)).collect(),
            (None, Some(pos)) => {
                let (_, s) = self.edge_sides(e);
                self.block_side(s).into_iter().map(|l| self.fine_edge(pos, l)).collect()
            }
            (None, None) => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiles_fine_grid() {
        let fine = StructuredGrid::unit(12, 8).unwrap();
        let p = CoarsePartition::new(fine, StructuredGrid::unit(3, 2).unwrap()).unwrap();
        let mut seen = alloc::vec![0; fine.num_cells()];
        for k in 0..p.num_blocks() {
            for c in p.block_cells(k) {
                seen[c] += 1;
                assert_eq!(p.block_of(c), k);
            }
        }
        assert!(seen.iter().all(|&s| s == 1));
        assert_eq!(p.interior_edges().len(), 2 * 2 + 3);
        assert!(CoarsePartition::new(fine, StructuredGrid::unit(5, 2).unwrap()).is_err());
    }

    #[test]
    fn sub_edges_lie_between_blocks() {
        let fine = StructuredGrid::unit(12, 8).unwrap();
        let p = CoarsePartition::new(fine, StructuredGrid::unit(3, 2).unwrap()).unwrap();
        for e in p.interior_edges() {
            let (a, b) = p.edge_blocks(e).unwrap();
            let subs = p.sub_edges(e);
            assert!(!subs.is_empty());
            for s in subs {
                let (l, r) = fine.edge_cells(s);
                assert_eq!(p.block_of(l.unwrap()), a);
                assert_eq!(p.block_of(r.unwrap()), b);
            }
        }
    }
}
