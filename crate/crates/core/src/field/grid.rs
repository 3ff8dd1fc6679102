use crate::{Error, Result};

/// Uniform rectangular grid over `[0, lx] x [0, ly]`.
///
/// Cells are numbered row-major with `iy = 0` the bottom row. Edges come in
/// two families: x-normal edges (`(nx + 1) * ny`, oriented towards `+x`)
/// followed by y-normal edges (`nx * (ny + 1)`, oriented towards `+y`).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StructuredGrid {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

/// Location of an edge in the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    /// Edge at `x = ix * hx` spanning row `iy`.
    X { ix: usize, iy: usize },
    /// Edge at `y = iy * hy` spanning column `ix`.
    Y { ix: usize, iy: usize },
}

impl StructuredGrid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::invalid("grid", "cell counts must be at least 1"));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::invalid("grid", "domain lengths must be positive"));
        }
        Ok(StructuredGrid { nx, ny, lx, ly })
    }

    /// Grid on the unit square.
    pub fn unit(nx: usize, ny: usize) -> Result<Self> {
        Self::new(nx, ny, 1.0, 1.0)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn domain_area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn cell(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    #[inline]
    pub fn cell_coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx, cell / self.nx)
    }

    pub fn center(&self, cell: usize) -> (f64, f64) {
        let (ix, iy) = self.cell_coords(cell);
        ((ix as f64 + 0.5) * self.hx(), (iy as f64 + 0.5) * self.hy())
    }

    pub fn num_x_edges(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    pub fn num_edges(&self) -> usize {
        self.num_x_edges() + self.nx * (self.ny + 1)
    }

    #[inline]
    pub fn x_edge(&self, ix: usize, iy: usize) -> usize {
        iy * (self.nx + 1) + ix
    }

    #[inline]
    pub fn y_edge(&self, ix: usize, iy: usize) -> usize {
        self.num_x_edges() + iy * self.nx + ix
    }

    pub fn edge(&self, e: usize) -> Edge {
        let nxe = self.num_x_edges();
        if e < nxe {
            Edge::X {
                ix: e % (self.nx + 1),
                iy: e / (self.nx + 1),
            }
        } else {
            let k = e - nxe;
            Edge::Y {
                ix: k % self.nx,
                iy: k / self.nx,
            }
        }
    }

    /// Cells on the negative and positive side of an edge, `None` outside
    /// the domain.
    pub fn edge_cells(&self, e: usize) -> (Option<usize>, Option<usize>) {
        match self.edge(e) {
            Edge::X { ix, iy } => (
                (ix > 0).then(|| self.cell(ix - 1, iy)),
                (ix < self.nx).then(|| self.cell(ix, iy)),
            ),
            Edge::Y { ix, iy } => (
                (iy > 0).then(|| self.cell(ix, iy - 1)),
                (iy < self.ny).then(|| self.cell(ix, iy)),
            ),
        }
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        let (a, b) = self.edge_cells(e);
        a.is_none() || b.is_none()
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        match self.edge(e) {
            Edge::X { .. } => self.hy(),
            Edge::Y { .. } => self.hx(),
        }
    }

    /// Distance between the centres of the two cells sharing an edge.
    pub fn edge_span(&self, e: usize) -> f64 {
        match self.edge(e) {
            Edge::X { .. } => self.hx(),
            Edge::Y { .. } => self.hy(),
        }
    }

    /// The four edges of a cell as `(west, east, south, north)`.
    pub fn cell_edges(&self, cell: usize) -> [usize; 4] {
        let (ix, iy) = self.cell_coords(cell);
        [
            self.x_edge(ix, iy),
            self.x_edge(ix + 1, iy),
            self.y_edge(ix, iy),
            self.y_edge(ix, iy + 1),
        ]
    }

    /// Net outward flux of a cell for edge fluxes oriented along `+x`/`+y`.
    pub fn cell_outflow(&self, flux: &[f64], cell: usize) -> f64 {
        let [w, e, s, n] = self.cell_edges(cell);
        flux[e] - flux[w] + flux[n] - flux[s]
    }

    /// Whether `coarse` partitions this grid into equal blocks.
    pub fn is_partitioned_by(&self, coarse: &StructuredGrid) -> bool {
        coarse.nx <= self.nx
            && coarse.ny <= self.ny
            && self.nx % coarse.nx == 0
            && self.ny % coarse.ny == 0
            && self.lx == coarse.lx
            && self.ly == coarse.ly
    }
}
