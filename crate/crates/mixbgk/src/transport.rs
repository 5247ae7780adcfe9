//! First-order upwind finite-volume discretisation of v . grad_x f with
//! ghost-cell boundary conditions.
//!
//! The flux at a face is F = f_left * max(v, 0) + f_right * min(v, 0). The
//! paper-style "no-flux" and "outflow" conditions both reduce to zero-gradient
//! ghost copies for a first-order scheme; influx faces hold a fixed Maxwellian
//! state per species. 2D sweeps are unsplit: both directional differences are
//! summed into one rate so the semi-discrete operator stays a single map.

use crate::error::{Error, Result};
use crate::grid::{DistributionField, MixtureParams};
use crate::moments::discrete_maxwellian;
use rayon::prelude::*;

/// Fixed inflow state for one species at an influx face.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluxState {
    pub n: f64,
    pub velocity: [f64; 2],
    pub temperature: f64,
}

/// Boundary condition on one face.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryKind {
    Periodic,
    /// Ghost copies the nearest interior cell (covers no-flux and outflow).
    ZeroGradient,
    /// Ghost holds the discrete Maxwellian of a fixed state, one per species.
    Influx(Vec<InfluxState>),
}

/// Boundary conditions per spatial face; `y` is ignored for 1D fields.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub x: (BoundaryKind, BoundaryKind),
    pub y: (BoundaryKind, BoundaryKind),
}

impl BoundarySpec {
    pub fn periodic() -> Self {
        BoundarySpec {
            x: (BoundaryKind::Periodic, BoundaryKind::Periodic),
            y: (BoundaryKind::Periodic, BoundaryKind::Periodic),
        }
    }

    pub fn zero_gradient() -> Self {
        BoundarySpec {
            x: (BoundaryKind::ZeroGradient, BoundaryKind::ZeroGradient),
            y: (BoundaryKind::ZeroGradient, BoundaryKind::ZeroGradient),
        }
    }

    /// Periodic faces must come in matched pairs per axis.
    pub fn validate(&self, dim: usize, n_species: usize) -> Result<()> {
        let axes: &[&(BoundaryKind, BoundaryKind)] =
            if dim == 2 { &[&self.x, &self.y] } else { &[&self.x] };
        for (axis, pair) in axes.iter().enumerate() {
            let low_periodic = matches!(pair.0, BoundaryKind::Periodic);
            let high_periodic = matches!(pair.1, BoundaryKind::Periodic);
            if low_periodic != high_periodic {
                return Err(Error::invalid(format!(
                    "axis {axis}: periodic faces must be paired"
                )));
            }
            for kind in [&pair.0, &pair.1] {
                if let BoundaryKind::Influx(states) = kind {
                    if states.len() != n_species {
                        return Err(Error::invalid(format!(
                            "influx face on axis {axis} specifies {} species states, need {n_species}",
                            states.len()
                        )));
                    }
                    for s in states {
                        if !(s.n >= 0.0) || !(s.temperature > 0.0) {
                            return Err(Error::invalid(
                                "influx state needs n >= 0 and T > 0".to_string(),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// First-order upwind flux through a face with velocity component `v`.
#[inline]
pub fn upwind_flux(f_left: f64, f_right: f64, v: f64) -> f64 {
    f_left * v.max(0.0) + f_right * v.min(0.0)
}

/// Field with one ghost layer on each active spatial face.
///
/// Interior cell (ix, iy) sits at extended index (ix + 1, iy + 1) in 2D and
/// (ix + 1, 0) in 1D. Corner ghosts are never read by the unsplit sweep and
/// stay zero.
#[derive(Debug, Clone)]
pub struct ExtendedField {
    pub n_species: usize,
    pub ext_cells: [usize; 2],
    pub node_count: usize,
    pub data: Vec<f64>,
}

impl ExtendedField {
    #[inline]
    pub fn cell(&self, species: usize, ix: usize, iy: usize) -> &[f64] {
        let nn = self.node_count;
        let idx = (species * self.ext_cells[0] * self.ext_cells[1]
            + ix * self.ext_cells[1]
            + iy)
            * nn;
        &self.data[idx..idx + nn]
    }

    #[inline]
    fn cell_mut(&mut self, species: usize, ix: usize, iy: usize) -> &mut [f64] {
        let nn = self.node_count;
        let idx = (species * self.ext_cells[0] * self.ext_cells[1]
            + ix * self.ext_cells[1]
            + iy)
            * nn;
        &mut self.data[idx..idx + nn]
    }
}

/// Copies the field into a ghost-augmented buffer and fills the ghost layers
/// per the boundary specification.
pub fn fill_ghost_cells(
    field: &DistributionField,
    boundary: &BoundarySpec,
    params: &MixtureParams,
    normalize: bool,
) -> Result<ExtendedField> {
    let shape = &field.shape;
    let sg = &shape.space;
    let np = shape.n_species;
    boundary.validate(sg.dim, np)?;
    let nn = shape.node_count();
    let (nx, ny) = (sg.cells[0], sg.cells[1]);
    let ext = [nx + 2, if sg.dim == 2 { ny + 2 } else { 1 }];
    let mut out = ExtendedField {
        n_species: np,
        ext_cells: ext,
        node_count: nn,
        data: vec![0.0; np * ext[0] * ext[1] * nn],
    };

    let yoff = if sg.dim == 2 { 1 } else { 0 };
    for p in 0..np {
        for ix in 0..nx {
            for iy in 0..ny {
                let src = field.cell(p, ix * ny + iy);
                out.cell_mut(p, ix + 1, iy + yoff).copy_from_slice(src);
            }
        }
    }

    let influx_profile = |states: &Vec<InfluxState>, p: usize| -> Result<Vec<f64>> {
        let s = &states[p];
        discrete_maxwellian(s.n, s.velocity, s.temperature, params.masses[p], &shape.velocity, normalize)
    };

    // x faces: one ghost column per interior row
    for p in 0..np {
        for iy in 0..ny {
            let ey = iy + yoff;
            match &boundary.x.0 {
                BoundaryKind::Periodic => {
                    let src = field.cell(p, (nx - 1) * ny + iy).to_vec();
                    out.cell_mut(p, 0, ey).copy_from_slice(&src);
                }
                BoundaryKind::ZeroGradient => {
                    let src = field.cell(p, iy).to_vec();
                    out.cell_mut(p, 0, ey).copy_from_slice(&src);
                }
                BoundaryKind::Influx(states) => {
                    out.cell_mut(p, 0, ey).copy_from_slice(&influx_profile(states, p)?);
                }
            }
            match &boundary.x.1 {
                BoundaryKind::Periodic => {
                    let src = field.cell(p, iy).to_vec();
                    out.cell_mut(p, nx + 1, ey).copy_from_slice(&src);
                }
                BoundaryKind::ZeroGradient => {
                    let src = field.cell(p, (nx - 1) * ny + iy).to_vec();
                    out.cell_mut(p, nx + 1, ey).copy_from_slice(&src);
                }
                BoundaryKind::Influx(states) => {
                    out.cell_mut(p, nx + 1, ey).copy_from_slice(&influx_profile(states, p)?);
                }
            }
        }
    }

    if sg.dim == 2 {
        for p in 0..np {
            for ix in 0..nx {
                match &boundary.y.0 {
                    BoundaryKind::Periodic => {
                        let src = field.cell(p, ix * ny + (ny - 1)).to_vec();
                        out.cell_mut(p, ix + 1, 0).copy_from_slice(&src);
                    }
                    BoundaryKind::ZeroGradient => {
                        let src = field.cell(p, ix * ny).to_vec();
                        out.cell_mut(p, ix + 1, 0).copy_from_slice(&src);
                    }
                    BoundaryKind::Influx(states) => {
                        out.cell_mut(p, ix + 1, 0).copy_from_slice(&influx_profile(states, p)?);
                    }
                }
                match &boundary.y.1 {
                    BoundaryKind::Periodic => {
                        let src = field.cell(p, ix * ny).to_vec();
                        out.cell_mut(p, ix + 1, ny + 1).copy_from_slice(&src);
                    }
                    BoundaryKind::ZeroGradient => {
                        let src = field.cell(p, ix * ny + (ny - 1)).to_vec();
                        out.cell_mut(p, ix + 1, ny + 1).copy_from_slice(&src);
                    }
                    BoundaryKind::Influx(states) => {
                        out.cell_mut(p, ix + 1, ny + 1).copy_from_slice(&influx_profile(states, p)?);
                    }
                }
            }
        }
    }

    Ok(out)
}

/// Transport contribution to df/dt: minus the net upwind flux divergence,
/// with ghost cells filled per the boundary specification.
pub fn transport_rhs(
    field: &DistributionField,
    boundary: &BoundarySpec,
    params: &MixtureParams,
    normalize: bool,
) -> Result<DistributionField> {
    let ext = fill_ghost_cells(field, boundary, params, normalize)?;
    let shape = field.shape;
    let sg = &shape.space;
    let vg = &shape.velocity;
    let nn = shape.node_count();
    let (nx, ny) = (sg.cells[0], sg.cells[1]);
    let inv_dx = 1.0 / sg.dx[0];
    let inv_dy = 1.0 / sg.dx[1];
    let coords: Vec<[f64; 2]> = (0..nn).map(|k| vg.node(k)).collect();
    let two_d = sg.dim == 2;
    let yoff = if two_d { 1 } else { 0 };

    let mut out = DistributionField::zeros(shape);
    out.data
        .par_chunks_mut(nn)
        .enumerate()
        .for_each(|(pc, rate)| {
            let p = pc / (nx * ny);
            let cell = pc % (nx * ny);
            let ix = cell / ny;
            let iy = cell % ny;
            let (ex, ey) = (ix + 1, iy + yoff);
            let center = ext.cell(p, ex, ey);
            let xm = ext.cell(p, ex - 1, ey);
            let xp = ext.cell(p, ex + 1, ey);
            if two_d {
                let ym = ext.cell(p, ex, ey - 1);
                let yp = ext.cell(p, ex, ey + 1);
                for k in 0..nn {
                    let [vx, vy] = coords[k];
                    let phi_x = (upwind_flux(center[k], xp[k], vx)
                        - upwind_flux(xm[k], center[k], vx))
                        * inv_dx;
                    let phi_y = (upwind_flux(center[k], yp[k], vy)
                        - upwind_flux(ym[k], center[k], vy))
                        * inv_dy;
                    rate[k] = -(phi_x + phi_y);
                }
            } else {
                for k in 0..nn {
                    let vx = coords[k][0];
                    let phi_x = (upwind_flux(center[k], xp[k], vx)
                        - upwind_flux(xm[k], center[k], vx))
                        * inv_dx;
                    rate[k] = -phi_x;
                }
            }
        });
    Ok(out)
}
