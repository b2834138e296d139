//! Uniform periodic simplicial meshes in one and two space dimensions.
//!
//! 1D meshes are segment subdivisions of an interval `[0, L0)`; 2D meshes
//! subdivide a rectangle `[0, L0) x [0, L1)` into squares, each split along
//! its main diagonal into two triangles. Periodicity is built in at the
//! connectivity level: boundary nodes are identified by index arithmetic, so
//! a periodic degree of freedom is represented exactly once and no seam
//! stitching or coordinate matching is ever needed.
//!
//! Because the rightmost elements wrap around to node 0, element geometry
//! cannot be reconstructed from the (wrapped) node coordinates alone. Each
//! element therefore carries its own unwrapped vertex coordinates, and all
//! geometric computations (volumes, gradients, quadrature) use those.

use crate::error::{Error, Result};
use crate::state::{SpatialVec, State};

/// Maximum allowed circumradius/inradius ratio for triangles. Uniform
/// right-triangle meshes with aspect ratios up to ~8 stay well below this.
pub const SHAPE_REGULARITY_BOUND: f64 = 20.0;

/// Minimum number of cells per axis. Below this, periodic wrap-around would
/// make two local basis functions share more than one mesh entity and the
/// sparsity pattern would degenerate.
pub const MIN_CELLS_PER_AXIS: usize = 4;

#[derive(Clone, Debug)]
pub struct Mesh {
    pub dim: usize,
    /// Cells per axis (same count on both axes in 2D).
    pub cells_per_axis: usize,
    /// Domain edge lengths; `extent[1]` is unused in 1D.
    pub extent: SpatialVec,
    /// Wrapped node coordinates in `[0, L)^dim`, one entry per DOF.
    pub node_coords: Vec<SpatialVec>,
    /// `dim + 1` node indices per element; the last slot is unused in 1D.
    conn: Vec<[usize; 3]>,
    /// Unwrapped vertex coordinates per element, aligned with `conn`.
    elem_coords: Vec<[SpatialVec; 3]>,
    /// Longest element edge in the mesh.
    pub h_max: f64,
    /// Shortest element edge in the mesh.
    pub h_min: f64,
}

impl Mesh {
    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.node_coords.len()
    }

    #[inline]
    pub fn n_elements(&self) -> usize {
        self.conn.len()
    }

    #[inline]
    pub fn nodes_per_element(&self) -> usize {
        self.dim + 1
    }

    /// Node indices of element `e` (wrapped, i.e. actual DOF numbers).
    #[inline]
    pub fn element_nodes(&self, e: usize) -> &[usize] {
        &self.conn[e][..self.dim + 1]
    }

    /// Unwrapped vertex coordinates of element `e`.
    #[inline]
    pub fn element_coords(&self, e: usize) -> &[SpatialVec] {
        &self.elem_coords[e][..self.dim + 1]
    }

    /// Length (1D) or area (2D) of element `e`, from its unwrapped geometry.
    pub fn element_volume(&self, e: usize) -> f64 {
        let x = &self.elem_coords[e];
        match self.dim {
            1 => x[1][0] - x[0][0],
            _ => {
                let (a, b, c) = (x[0], x[1], x[2]);
                0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
            }
        }
    }

    pub fn domain_volume(&self) -> f64 {
        match self.dim {
            1 => self.extent[0],
            _ => self.extent[0] * self.extent[1],
        }
    }

    /// Consistency checks: positive volumes that tile the domain, in-range
    /// connectivity, and per-element shape regularity.
    pub fn validate(&self) -> Result<()> {
        let mut vol_sum = 0.0;
        for e in 0..self.n_elements() {
            let vol = self.element_volume(e);
            if !(vol > 0.0) {
                return Err(Error::Assembly(format!(
                    "element {e} has non-positive volume {vol}"
                )));
            }
            vol_sum += vol;
            for &n in self.element_nodes(e) {
                if n >= self.n_nodes() {
                    return Err(Error::Assembly(format!(
                        "element {e} references node {n} out of {}",
                        self.n_nodes()
                    )));
                }
            }
            if self.dim == 2 {
                let ratio = self.circum_to_inradius(e);
                if !(ratio <= SHAPE_REGULARITY_BOUND) {
                    return Err(Error::Assembly(format!(
                        "element {e} violates shape regularity: R/r = {ratio:.3} > {SHAPE_REGULARITY_BOUND}"
                    )));
                }
            }
        }
        let dom = self.domain_volume();
        if (vol_sum - dom).abs() > 1e-12 * dom {
            return Err(Error::Assembly(format!(
                "element volumes sum to {vol_sum} but the domain measures {dom}"
            )));
        }
        Ok(())
    }

    fn circum_to_inradius(&self, e: usize) -> f64 {
        let x = &self.elem_coords[e];
        let l0 = dist(x[1], x[2]);
        let l1 = dist(x[0], x[2]);
        let l2 = dist(x[0], x[1]);
        let area = self.element_volume(e);
        let perimeter = l0 + l1 + l2;
        let r_in = 2.0 * area / perimeter;
        let r_circ = l0 * l1 * l2 / (4.0 * area);
        r_circ / r_in
    }

    /// Wrap a point into the fundamental domain `[0, L)^dim`.
    pub fn wrap_point(&self, mut x: SpatialVec) -> SpatialVec {
        for k in 0..self.dim {
            let l = self.extent[k];
            x[k] -= l * (x[k] / l).floor();
            if x[k] >= l {
                x[k] = 0.0; // guards against roundoff pushing x onto L
            }
        }
        if self.dim == 1 {
            x[1] = 0.0;
        }
        x
    }

    /// Evaluate the piecewise-linear interpolant of a nodal field at an
    /// arbitrary point (wrapped periodically). Exact for P1 fields.
    pub fn eval_p1(&self, field: &[State], point: SpatialVec) -> State {
        debug_assert_eq!(field.len(), self.n_nodes());
        let x = self.wrap_point(point);
        let n = self.cells_per_axis;
        match self.dim {
            1 => {
                let h = self.extent[0] / n as f64;
                let s = x[0] / h;
                let cell = (s.floor() as usize).min(n - 1);
                let xi = s - cell as f64;
                let u0 = field[cell];
                let u1 = field[(cell + 1) % n];
                u0 * (1.0 - xi) + u1 * xi
            }
            _ => {
                let hx = self.extent[0] / n as f64;
                let hy = self.extent[1] / n as f64;
                let sx = x[0] / hx;
                let sy = x[1] / hy;
                let ix = (sx.floor() as usize).min(n - 1);
                let iy = (sy.floor() as usize).min(n - 1);
                let xi = sx - ix as f64;
                let eta = sy - iy as f64;
                let node = |jx: usize, jy: usize| field[(jy % n) * n + (jx % n)];
                let a = node(ix, iy);
                let b = node(ix + 1, iy);
                let c = node(ix + 1, iy + 1);
                let d = node(ix, iy + 1);
                if xi >= eta {
                    // lower triangle (a, b, c)
                    a * (1.0 - xi) + b * (xi - eta) + c * eta
                } else {
                    // upper triangle (a, c, d)
                    a * (1.0 - eta) + c * xi + d * (eta - xi)
                }
            }
        }
    }
}

#[inline]
fn dist(a: SpatialVec, b: SpatialVec) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Build a uniform periodic mesh with `cells_per_axis` cells along each axis
/// of a `dim`-dimensional box with the given edge lengths.
pub fn build_uniform_periodic_mesh(
    dim: usize,
    cells_per_axis: usize,
    extent: &[f64],
) -> Result<Mesh> {
    if dim != 1 && dim != 2 {
        return Err(Error::config(format!("dim must be 1 or 2, got {dim}")));
    }
    if extent.len() != dim {
        return Err(Error::config(format!(
            "extent has {} entries but dim = {dim}",
            extent.len()
        )));
    }
    if extent.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::config(format!("extent must be positive: {extent:?}")));
    }
    if cells_per_axis < MIN_CELLS_PER_AXIS {
        return Err(Error::config(format!(
            "need at least {MIN_CELLS_PER_AXIS} cells per axis for a periodic mesh, got {cells_per_axis}"
        )));
    }

    let n = cells_per_axis;
    let mesh = match dim {
        1 => {
            let l = extent[0];
            let h = l / n as f64;
            let node_coords: Vec<SpatialVec> = (0..n).map(|i| [i as f64 * h, 0.0]).collect();
            let mut conn = Vec::with_capacity(n);
            let mut elem_coords = Vec::with_capacity(n);
            for i in 0..n {
                conn.push([i, (i + 1) % n, usize::MAX]);
                let x0 = i as f64 * h;
                elem_coords.push([[x0, 0.0], [x0 + h, 0.0], [0.0, 0.0]]);
            }
            Mesh {
                dim,
                cells_per_axis: n,
                extent: [l, 0.0],
                node_coords,
                conn,
                elem_coords,
                h_max: h,
                h_min: h,
            }
        }
        _ => {
            let (lx, ly) = (extent[0], extent[1]);
            let hx = lx / n as f64;
            let hy = ly / n as f64;
            let mut node_coords = Vec::with_capacity(n * n);
            for iy in 0..n {
                for ix in 0..n {
                    node_coords.push([ix as f64 * hx, iy as f64 * hy]);
                }
            }
            let idx = |ix: usize, iy: usize| (iy % n) * n + (ix % n);
            let mut conn = Vec::with_capacity(2 * n * n);
            let mut elem_coords = Vec::with_capacity(2 * n * n);
            for iy in 0..n {
                for ix in 0..n {
                    let (x0, y0) = (ix as f64 * hx, iy as f64 * hy);
                    let a = idx(ix, iy);
                    let b = idx(ix + 1, iy);
                    let c = idx(ix + 1, iy + 1);
                    let d = idx(ix, iy + 1);
                    let pa = [x0, y0];
                    let pb = [x0 + hx, y0];
                    let pc = [x0 + hx, y0 + hy];
                    let pd = [x0, y0 + hy];
                    // Split each square along its main diagonal a-c.
                    conn.push([a, b, c]);
                    elem_coords.push([pa, pb, pc]);
                    conn.push([a, c, d]);
                    elem_coords.push([pa, pc, pd]);
                }
            }
            Mesh {
                dim,
                cells_per_axis: n,
                extent: [lx, ly],
                node_coords,
                conn,
                elem_coords,
                h_max: (hx * hx + hy * hy).sqrt(),
                h_min: hx.min(hy),
            }
        }
    };
    mesh.validate()?;
    Ok(mesh)
}
