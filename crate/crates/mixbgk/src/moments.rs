//! Discrete moments, mixture moments, Maxwellians, and entropy.
//!
//! All velocity reductions run in a fixed deterministic order so results are
//! bit-identical across thread counts. Sums pair each node with its negation
//! (linear index k with nn-1-k) before accumulating; this makes the mean
//! velocity of a v -> -v symmetric field exactly zero and mirrored fields
//! produce exactly mirrored moments.

use crate::error::{Error, Result};
use crate::grid::{DistributionField, MixtureParams, VelocityGrid};

/// Exponent clamp for Maxwellian evaluation. Extreme mass ratios produce very
/// narrow Gaussians whose tails would otherwise underflow through NaN-prone
/// paths.
const EXPONENT_CLAMP: f64 = 700.0;

/// Per-species, per-cell moments (struct of arrays, index species*cells+cell).
#[derive(Debug, Clone)]
pub struct MomentSet {
    pub n_species: usize,
    pub n_cells: usize,
    /// Velocity dimension of the underlying grid.
    pub d_v: usize,
    /// Number density.
    pub n: Vec<f64>,
    /// Mass density rho = m * n.
    pub rho: Vec<f64>,
    /// Mean velocity.
    pub velocity: Vec<[f64; 2]>,
    /// Temperature (>= 0).
    pub temperature: Vec<f64>,
    /// Pressure P = n * T.
    pub pressure: Vec<f64>,
}

impl MomentSet {
    #[inline]
    pub fn idx(&self, species: usize, cell: usize) -> usize {
        species * self.n_cells + cell
    }
}

/// Whole-mixture moments per cell.
#[derive(Debug, Clone)]
pub struct TotalMoments {
    pub n_cells: usize,
    pub n: Vec<f64>,
    pub rho: Vec<f64>,
    /// Mass-weighted mixture velocity.
    pub velocity: Vec<[f64; 2]>,
    /// Temperature from the total second moment about the mixture velocity.
    pub temperature: Vec<f64>,
    /// Total pressure, the sum of species pressures.
    pub pressure: Vec<f64>,
}

/// Pairwise mixture moments v_pq and T_pq, stored once per unordered pair so
/// the symmetry v_pq = v_qp, T_pq = T_qp holds exactly.
#[derive(Debug, Clone)]
pub struct MixtureMoments {
    pub n_species: usize,
    pub n_cells: usize,
    velocity: Vec<[f64; 2]>,
    temperature: Vec<f64>,
}

impl MixtureMoments {
    #[inline]
    fn pair_index(&self, p: usize, q: usize) -> usize {
        let (a, b) = if p <= q { (p, q) } else { (q, p) };
        // row-wise upper triangle including the diagonal
        a * self.n_species - a * (a + 1) / 2 + b
    }

    #[inline]
    pub fn velocity(&self, p: usize, q: usize, cell: usize) -> [f64; 2] {
        self.velocity[self.pair_index(p, q) * self.n_cells + cell]
    }

    #[inline]
    pub fn temperature(&self, p: usize, q: usize, cell: usize) -> f64 {
        self.temperature[self.pair_index(p, q) * self.n_cells + cell]
    }
}

/// Deterministic reduction over velocity nodes: node k is paired with its
/// negation nn-1-k, then pairs accumulate in ascending order. The node count
/// is odd, so the middle (zero-velocity) node is added last.
#[inline]
pub(crate) fn node_pair_sum(nn: usize, mut term: impl FnMut(usize) -> f64) -> f64 {
    let half = nn / 2;
    let mut acc = 0.0;
    for k in 0..half {
        acc += term(k) + term(nn - 1 - k);
    }
    if nn % 2 == 1 {
        acc += term(half);
    }
    acc
}

#[inline]
fn sq_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Discrete species moments of a distribution field.
///
/// n = sum_j f dv^D, rho v = sum_j m v_j f dv^D, and
/// (D/2) n T = sum_j (m/2) |v - v_j|^2 f dv^D per species and cell.
pub fn species_moments(field: &DistributionField, params: &MixtureParams) -> Result<MomentSet> {
    let shape = &field.shape;
    let vg = &shape.velocity;
    let nn = shape.node_count();
    let nc = shape.cell_count();
    let np = shape.n_species;
    if params.species_count() != np {
        return Err(Error::invalid(format!(
            "params have {} species, field has {np}",
            params.species_count()
        )));
    }
    let dvol = vg.volume_element();
    let dim = vg.dim as f64;
    let coords: Vec<[f64; 2]> = (0..nn).map(|k| vg.node(k)).collect();

    let mut out = MomentSet {
        n_species: np,
        n_cells: nc,
        d_v: vg.dim,
        n: vec![0.0; np * nc],
        rho: vec![0.0; np * nc],
        velocity: vec![[0.0; 2]; np * nc],
        temperature: vec![0.0; np * nc],
        pressure: vec![0.0; np * nc],
    };

    for p in 0..np {
        let m = params.masses[p];
        for cell in 0..nc {
            let f = field.cell(p, cell);
            let raw_n = node_pair_sum(nn, |k| f[k]);
            if !(raw_n > 0.0) {
                return Err(Error::DegenerateMoments { species: p, cell, n: raw_n * dvol });
            }
            let mom_x = node_pair_sum(nn, |k| coords[k][0] * f[k]);
            let mom_y = if vg.dim == 2 {
                node_pair_sum(nn, |k| coords[k][1] * f[k])
            } else {
                0.0
            };
            let vbar = [mom_x / raw_n, mom_y / raw_n];
            let e2 = node_pair_sum(nn, |k| sq_dist(vbar, coords[k]) * f[k]);
            let n = raw_n * dvol;
            let t = m * e2 / (dim * raw_n);
            let i = out.idx(p, cell);
            out.n[i] = n;
            out.rho[i] = m * n;
            out.velocity[i] = vbar;
            out.temperature[i] = t;
            out.pressure[i] = n * t;
        }
    }
    Ok(out)
}

/// Total mixture moments. The temperature comes from the total second moment
/// about the mixture velocity, summed over the field directly; the pressure
/// is the sum of species pressures.
pub fn total_moments(
    field: &DistributionField,
    moments: &MomentSet,
    params: &MixtureParams,
) -> Result<TotalMoments> {
    let shape = &field.shape;
    let vg = &shape.velocity;
    let nn = shape.node_count();
    let nc = shape.cell_count();
    let np = shape.n_species;
    let dvol = vg.volume_element();
    let dim = vg.dim as f64;
    let coords: Vec<[f64; 2]> = (0..nn).map(|k| vg.node(k)).collect();

    let mut out = TotalMoments {
        n_cells: nc,
        n: vec![0.0; nc],
        rho: vec![0.0; nc],
        velocity: vec![[0.0; 2]; nc],
        temperature: vec![0.0; nc],
        pressure: vec![0.0; nc],
    };

    for cell in 0..nc {
        let mut n = 0.0;
        let mut rho = 0.0;
        let mut mom = [0.0; 2];
        let mut pressure = 0.0;
        for p in 0..np {
            let i = moments.idx(p, cell);
            n += moments.n[i];
            rho += moments.rho[i];
            mom[0] += moments.rho[i] * moments.velocity[i][0];
            mom[1] += moments.rho[i] * moments.velocity[i][1];
            pressure += moments.pressure[i];
        }
        let vbar = [mom[0] / rho, mom[1] / rho];
        let mut e2 = 0.0;
        for p in 0..np {
            let f = field.cell(p, cell);
            e2 += params.masses[p] * node_pair_sum(nn, |k| sq_dist(vbar, coords[k]) * f[k]);
        }
        out.n[cell] = n;
        out.rho[cell] = rho;
        out.velocity[cell] = vbar;
        out.temperature[cell] = e2 * dvol / (dim * n);
        out.pressure[cell] = pressure;
    }
    Ok(out)
}

/// Pairwise mixture velocity and temperature.
///
/// v_pq balances momentum exchange between the species; T_pq adds the
/// velocity correction term divided by D_v and is nonnegative by
/// construction. Cells where one species sits below the vacuum floor
/// (n_p <= delta_floor * n_total) borrow the other species' moments, which
/// mirrors the delta-seeding of near-vacuum regions and avoids 0/0.
pub fn mixture_pair_moments(moments: &MomentSet, params: &MixtureParams) -> Result<MixtureMoments> {
    let np = moments.n_species;
    let nc = moments.n_cells;
    let n_pairs = np * (np + 1) / 2;
    let mut out = MixtureMoments {
        n_species: np,
        n_cells: nc,
        velocity: vec![[0.0; 2]; n_pairs * nc],
        temperature: vec![0.0; n_pairs * nc],
    };

    for p in 0..np {
        for q in p..np {
            let pair = out.pair_index(p, q);
            for cell in 0..nc {
                let ip = moments.idx(p, cell);
                let (v_pq, t_pq) = if p == q {
                    (moments.velocity[ip], moments.temperature[ip])
                } else {
                    pair_moments_for_cell(moments, params, p, q, cell)?
                };
                if t_pq < -1e-12 {
                    return Err(Error::Internal(format!(
                        "mixture temperature T[{p},{q}] = {t_pq:e} < 0 in cell {cell}"
                    )));
                }
                out.velocity[pair * nc + cell] = v_pq;
                out.temperature[pair * nc + cell] = t_pq;
            }
        }
    }
    Ok(out)
}

fn pair_moments_for_cell(
    moments: &MomentSet,
    params: &MixtureParams,
    p: usize,
    q: usize,
    cell: usize,
) -> Result<([f64; 2], f64)> {
    let ip = moments.idx(p, cell);
    let iq = moments.idx(q, cell);
    let n_total: f64 = (0..moments.n_species).map(|r| moments.n[moments.idx(r, cell)]).sum();
    let floor = params.delta_floor * n_total;

    let p_vac = moments.n[ip] <= floor;
    let q_vac = moments.n[iq] <= floor;
    if p_vac && !q_vac {
        return Ok((moments.velocity[iq], moments.temperature[iq]));
    }
    if q_vac && !p_vac {
        return Ok((moments.velocity[ip], moments.temperature[ip]));
    }

    let nu_pq = params.nu(p, q);
    let nu_qp = params.nu(q, p);
    let wp = moments.rho[ip] * nu_pq;
    let wq = moments.rho[iq] * nu_qp;
    let wsum = wp + wq;
    if !(wsum > 0.0) {
        return Err(Error::DegenerateMoments { species: p, cell, n: moments.n[ip] });
    }
    let vp = moments.velocity[ip];
    let vq = moments.velocity[iq];
    let v_pq = [(wp * vp[0] + wq * vq[0]) / wsum, (wp * vp[1] + wq * vq[1]) / wsum];

    let cp = moments.n[ip] * nu_pq;
    let cq = moments.n[iq] * nu_qp;
    let csum = cp + cq;
    let dim = moments.d_v as f64;
    let t_mean = (cp * moments.temperature[ip] + cq * moments.temperature[iq]) / csum;
    let vpq2 = v_pq[0] * v_pq[0] + v_pq[1] * v_pq[1];
    let vp2 = vp[0] * vp[0] + vp[1] * vp[1];
    let vq2 = vq[0] * vq[0] + vq[1] * vq[1];
    let t_corr = (wp * (vp2 - vpq2) + wq * (vq2 - vpq2)) / (dim * csum);
    Ok((v_pq, t_mean + t_corr))
}

/// Pointwise Maxwellian n (m / 2 pi T)^{D/2} exp(-m |v - vbar|^2 / 2T) at
/// every velocity node.
pub fn maxwellian_eval(
    n: f64,
    v_mean: [f64; 2],
    temperature: f64,
    mass: f64,
    grid: &VelocityGrid,
) -> Result<Vec<f64>> {
    if !(temperature > 0.0) {
        return Err(Error::invalid(format!("Maxwellian needs T > 0, got {temperature}")));
    }
    if !(n >= 0.0) {
        return Err(Error::invalid(format!("Maxwellian needs n >= 0, got {n}")));
    }
    let nn = grid.node_count();
    let prefactor = n * (mass / (2.0 * std::f64::consts::PI * temperature)).powf(grid.dim as f64 / 2.0);
    let inv_2t = mass / (2.0 * temperature);
    let mut out = Vec::with_capacity(nn);
    for k in 0..nn {
        let z = (inv_2t * sq_dist(v_mean, grid.node(k))).min(EXPONENT_CLAMP);
        out.push(prefactor * (-z).exp());
    }
    Ok(out)
}

/// Maxwellian evaluation with an optional global rescale so that the discrete
/// zeroth moment equals `n` exactly. With the flag off this is identical to
/// `maxwellian_eval`.
pub fn discrete_maxwellian(
    n: f64,
    v_mean: [f64; 2],
    temperature: f64,
    mass: f64,
    grid: &VelocityGrid,
    normalize: bool,
) -> Result<Vec<f64>> {
    let mut values = maxwellian_eval(n, v_mean, temperature, mass, grid)?;
    if !normalize || n == 0.0 {
        // n == 0 gives the all-zero profile, whose zeroth moment is already
        // exact; rescaling would divide zero by zero.
        return Ok(values);
    }
    let raw = node_pair_sum(grid.node_count(), |k| values[k]) * grid.volume_element();
    if !(raw > 0.0) {
        return Err(Error::invalid(
            "discrete Maxwellian has zero mass on this grid; it is far too coarse or narrow".to_string(),
        ));
    }
    let scale = n / raw;
    for v in &mut values {
        *v *= scale;
    }
    Ok(values)
}

/// Discrete Boltzmann entropy H = sum_p sum_j f log f dv^D per cell, with the
/// convention 0 log 0 = 0.
pub fn entropy(field: &DistributionField) -> Result<Vec<f64>> {
    let shape = &field.shape;
    let nn = shape.node_count();
    let nc = shape.cell_count();
    let dvol = shape.velocity.volume_element();
    let mut out = vec![0.0; nc];
    for p in 0..shape.n_species {
        for cell in 0..nc {
            let f = field.cell(p, cell);
            for &v in f {
                if v < -1e-13 {
                    return Err(Error::invalid(format!(
                        "entropy of a negative distribution (f = {v:e})"
                    )));
                }
            }
            out[cell] += node_pair_sum(nn, |k| if f[k] > 0.0 { f[k] * f[k].ln() } else { 0.0 }) * dvol;
        }
    }
    Ok(out)
}
