//! Cartesian phase-space discretisation and global physical parameters.
//!
//! Velocity space is the box (-L_v, L_v)^D with 2N_v + 1 nodes per axis at
//! v_j = j * dv, dv = 2 L_v / (2 N_v + 1), j in {-N_v, ..., N_v}. Space is a
//! rectangle split into uniform cells with centers offset half a cell from
//! the domain origin. Both grids are plain `Copy` values; one-dimensional
//! grids use a single dummy node/cell along the second axis so the same code
//! paths serve 1D and 2D.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Velocity grid, shared by all species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityGrid {
    /// Velocity dimension (1 or 2).
    pub dim: usize,
    /// Half node count per axis; axis holds 2*n_half+1 nodes.
    pub n_half: [usize; 2],
    /// Node spacing per axis.
    pub dv: [f64; 2],
    /// Domain half-width per axis.
    pub half_width: [f64; 2],
}

impl VelocityGrid {
    /// Isotropic grid: every axis gets the same half-width and node count.
    pub fn build(half_width: f64, n_half: usize, dim: usize) -> Result<Self> {
        Self::build_anisotropic([half_width; 2], [n_half; 2], dim)
    }

    /// Per-axis half-widths and counts (2D only; both must still be valid).
    pub fn build_anisotropic(half_width: [f64; 2], n_half: [usize; 2], dim: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::invalid(format!("velocity dimension must be 1 or 2, got {dim}")));
        }
        let mut hw = [0.0; 2];
        let mut nh = [0usize; 2];
        let mut dv = [1.0; 2];
        for axis in 0..dim {
            if !(half_width[axis] > 0.0) {
                return Err(Error::invalid(format!(
                    "velocity half-width must be positive, got {} on axis {axis}",
                    half_width[axis]
                )));
            }
            if n_half[axis] < 1 {
                return Err(Error::invalid("velocity half-count must be at least 1".to_string()));
            }
            hw[axis] = half_width[axis];
            nh[axis] = n_half[axis];
            dv[axis] = 2.0 * half_width[axis] / (2 * n_half[axis] + 1) as f64;
        }
        Ok(VelocityGrid { dim, n_half: nh, dv, half_width: hw })
    }

    /// Grid with spacing exactly `spacing` whose nodes cover at least
    /// (-target_half_width, target_half_width). The half-width is enlarged to
    /// (2N_v+1) * spacing / 2 so that dv comes out exact.
    pub fn covering(target_half_width: f64, spacing: f64, dim: usize) -> Result<Self> {
        if !(spacing > 0.0) || !(target_half_width > 0.0) {
            return Err(Error::invalid("covering grid needs positive half-width and spacing".to_string()));
        }
        let n = ((target_half_width / spacing - 0.5).ceil().max(1.0)) as usize;
        let half_width = (2 * n + 1) as f64 * spacing / 2.0;
        Self::build(half_width, n, dim)
    }

    /// Nodes per axis (1 on the dummy axis of a 1D grid).
    #[inline]
    pub fn axis_nodes(&self, axis: usize) -> usize {
        if axis < self.dim {
            2 * self.n_half[axis] + 1
        } else {
            1
        }
    }

    /// Total number of velocity nodes.
    #[inline]
    pub fn node_count(&self) -> usize {
        self.axis_nodes(0) * self.axis_nodes(1)
    }

    /// Coordinates of the node with linear index `node` (row-major, most
    /// negative velocity first on each axis).
    #[inline]
    pub fn node(&self, node: usize) -> [f64; 2] {
        let ny = self.axis_nodes(1);
        let jx = node / ny;
        let jy = node % ny;
        [
            (jx as f64 - self.n_half[0] as f64) * self.dv[0],
            if self.dim == 2 {
                (jy as f64 - self.n_half[1] as f64) * self.dv[1]
            } else {
                0.0
            },
        ]
    }

    /// Linear index of the node with signed per-axis indices.
    pub fn node_index(&self, j: [isize; 2]) -> Result<usize> {
        let mut lin = 0usize;
        for axis in 0..self.dim {
            let n = self.n_half[axis] as isize;
            if j[axis] < -n || j[axis] > n {
                return Err(Error::invalid(format!(
                    "velocity index {} out of range [-{n}, {n}] on axis {axis}",
                    j[axis]
                )));
            }
            lin = lin * self.axis_nodes(axis).max(1) + (j[axis] + n) as usize;
        }
        if self.dim == 1 {
            Ok(lin)
        } else {
            // recompute with row-major strides (jx outer, jy inner)
            let n0 = self.n_half[0] as isize;
            let n1 = self.n_half[1] as isize;
            Ok(((j[0] + n0) as usize) * self.axis_nodes(1) + (j[1] + n1) as usize)
        }
    }

    /// Largest |node component| per axis.
    #[inline]
    pub fn max_speed(&self, axis: usize) -> f64 {
        if axis < self.dim {
            self.n_half[axis] as f64 * self.dv[axis]
        } else {
            0.0
        }
    }

    /// Volume element dv^{D_v}.
    #[inline]
    pub fn volume_element(&self) -> f64 {
        let mut w = 1.0;
        for axis in 0..self.dim {
            w *= self.dv[axis];
        }
        w
    }
}

/// Spatial grid: uniform cells over a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    /// Spatial dimension (1 or 2).
    pub dim: usize,
    /// Cells per axis (1 on the dummy axis).
    pub cells: [usize; 2],
    /// Domain lower corner.
    pub origin: [f64; 2],
    /// Domain extent per axis.
    pub length: [f64; 2],
    /// Cell size per axis.
    pub dx: [f64; 2],
}

impl SpatialGrid {
    pub fn build(origin: [f64; 2], length: [f64; 2], cells: [usize; 2], dim: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::invalid(format!("spatial dimension must be 1 or 2, got {dim}")));
        }
        let mut n = [1usize; 2];
        let mut len = [0.0; 2];
        let mut org = [0.0; 2];
        let mut dx = [1.0; 2];
        for axis in 0..dim {
            if cells[axis] < 1 {
                return Err(Error::invalid("cell count must be at least 1".to_string()));
            }
            if !(length[axis] > 0.0) {
                return Err(Error::invalid(format!("domain extent must be positive, got {}", length[axis])));
            }
            n[axis] = cells[axis];
            len[axis] = length[axis];
            org[axis] = origin[axis];
            dx[axis] = length[axis] / cells[axis] as f64;
        }
        Ok(SpatialGrid { dim, cells: n, origin: org, length: len, dx })
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    /// Center coordinates of the cell with linear index `cell` (row-major,
    /// x outer, y inner).
    #[inline]
    pub fn cell_center(&self, cell: usize) -> [f64; 2] {
        let ny = self.cells[1];
        let ix = cell / ny;
        let iy = cell % ny;
        [
            self.origin[0] + (ix as f64 + 0.5) * self.dx[0],
            if self.dim == 2 {
                self.origin[1] + (iy as f64 + 0.5) * self.dx[1]
            } else {
                0.0
            },
        ]
    }

    #[inline]
    pub fn cell_index(&self, i: [usize; 2]) -> Result<usize> {
        for axis in 0..self.dim {
            if i[axis] >= self.cells[axis] {
                return Err(Error::invalid(format!(
                    "cell index {} out of range 0..{} on axis {axis}",
                    i[axis], self.cells[axis]
                )));
            }
        }
        Ok(i[0] * self.cells[1] + if self.dim == 2 { i[1] } else { 0 })
    }

    /// Volume element dx^{D_x}.
    #[inline]
    pub fn volume_element(&self) -> f64 {
        let mut w = 1.0;
        for axis in 0..self.dim {
            w *= self.dx[axis];
        }
        w
    }
}

/// Physical parameters of the mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    /// Molecular mass per species.
    pub masses: Vec<f64>,
    /// Collision frequencies, row-major P x P.
    pub nu: Vec<f64>,
    /// Knudsen number.
    pub epsilon: f64,
    /// Vacuum density floor used by scenario builders and pair moments.
    pub delta_floor: f64,
}

pub const DEFAULT_DELTA_FLOOR: f64 = 1e-5;

impl MixtureParams {
    /// All collision frequencies set to one (the default model).
    pub fn unit_frequencies(masses: Vec<f64>, epsilon: f64) -> Result<Self> {
        let p = masses.len();
        Self::new(masses, vec![1.0; p * p], epsilon, DEFAULT_DELTA_FLOOR)
    }

    pub fn new(masses: Vec<f64>, nu: Vec<f64>, epsilon: f64, delta_floor: f64) -> Result<Self> {
        let p = masses.len();
        if p == 0 {
            return Err(Error::invalid("at least one species required".to_string()));
        }
        if nu.len() != p * p {
            return Err(Error::invalid(format!(
                "collision frequency matrix must be {p}x{p}, got {} entries",
                nu.len()
            )));
        }
        if masses.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::invalid("all masses must be strictly positive".to_string()));
        }
        if nu.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::invalid("all collision frequencies must be strictly positive".to_string()));
        }
        if !(epsilon > 0.0) {
            return Err(Error::invalid(format!("Knudsen number must be positive, got {epsilon}")));
        }
        if !(delta_floor > 0.0) {
            return Err(Error::invalid("density floor must be positive".to_string()));
        }
        Ok(MixtureParams { masses, nu, epsilon, delta_floor })
    }

    #[inline]
    pub fn species_count(&self) -> usize {
        self.masses.len()
    }

    #[inline]
    pub fn nu(&self, p: usize, q: usize) -> f64 {
        self.nu[p * self.masses.len() + q]
    }
}

/// Shape of a distribution field: species count plus both grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldShape {
    pub n_species: usize,
    pub space: SpatialGrid,
    pub velocity: VelocityGrid,
}

impl FieldShape {
    pub fn new(n_species: usize, space: SpatialGrid, velocity: VelocityGrid) -> Self {
        FieldShape { n_species, space, velocity }
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.space.cell_count()
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.velocity.node_count()
    }

    /// Total state dimension P * cells * nodes.
    #[inline]
    pub fn len(&self) -> usize {
        self.n_species * self.cell_count() * self.node_count()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear index, species-major, then space, then velocity, row-major
    /// within each. This ordering is the contract for binary dumps.
    #[inline]
    pub fn flatten_linear(&self, species: usize, cell: usize, node: usize) -> usize {
        (species * self.cell_count() + cell) * self.node_count() + node
    }

    /// Multi-index variant with range checks; `j` uses the signed velocity
    /// convention j in {-N_v, ..., N_v} per axis.
    pub fn flatten_index(&self, species: usize, i: [usize; 2], j: [isize; 2]) -> Result<usize> {
        if species >= self.n_species {
            return Err(Error::invalid(format!(
                "species index {species} out of range 0..{}",
                self.n_species
            )));
        }
        let cell = self.space.cell_index(i)?;
        let node = self.velocity.node_index(j)?;
        Ok(self.flatten_linear(species, cell, node))
    }
}

/// Per-species discrete distribution over (space cell x velocity node).
///
/// Stored as one contiguous array in `flatten_linear` order.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField {
    pub shape: FieldShape,
    pub data: Vec<f64>,
}

impl DistributionField {
    pub fn zeros(shape: FieldShape) -> Self {
        DistributionField { data: vec![0.0; shape.len()], shape }
    }

    pub fn from_data(shape: FieldShape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::invalid(format!(
                "data length {} does not match shape length {}",
                data.len(),
                shape.len()
            )));
        }
        Ok(DistributionField { shape, data })
    }

    /// Values of one (species, cell) pair, contiguous over velocity nodes.
    #[inline]
    pub fn cell(&self, species: usize, cell: usize) -> &[f64] {
        let nn = self.shape.node_count();
        let start = self.shape.flatten_linear(species, cell, 0);
        &self.data[start..start + nn]
    }

    #[inline]
    pub fn cell_mut(&mut self, species: usize, cell: usize) -> &mut [f64] {
        let nn = self.shape.node_count();
        let start = self.shape.flatten_linear(species, cell, 0);
        &mut self.data[start..start + nn]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    /// self + c * other, elementwise.
    pub fn scaled_add(&self, c: f64, other: &DistributionField) -> DistributionField {
        debug_assert_eq!(self.shape.len(), other.shape.len());
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a + c * b)
            .collect();
        DistributionField { shape: self.shape, data }
    }
}

/// Largest forward-Euler step for which pure upwind transport is a convex
/// combination of neighbours: dx / v_max in 1D and the harmonic combination
/// 1 / (v_max,x/dx + v_max,y/dy) in 2D.
pub fn cfl_max_step(velocity: &VelocityGrid, space: &SpatialGrid) -> f64 {
    let mut sum = 0.0;
    for axis in 0..space.dim {
        sum += velocity.max_speed(axis) / space.dx[axis];
    }
    if sum == 0.0 {
        f64::INFINITY
    } else {
        1.0 / sum
    }
}
