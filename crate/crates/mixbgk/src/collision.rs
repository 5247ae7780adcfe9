//! Discrete multispecies BGK collision operator.
//!
//! Q_p = sum_q nu_pq (M_pq - f_p), where M_pq is the Maxwellian of species p
//! evaluated at the pair moments (n_p, v_pq, T_pq). The operator is local in
//! space and carries no 1/epsilon factor; the integrator scales it, so both
//! scaled and unscaled forms are available to the spectrum machinery.
//!
//! With `normalize` on (the default everywhere in this crate) each Maxwellian
//! is rescaled so its discrete zeroth moment equals n_p exactly, which makes
//! the operator conserve species mass to machine precision instead of
//! quadrature precision.

use crate::error::{Error, Result};
use crate::grid::{DistributionField, MixtureParams};
use crate::moments::{mixture_pair_moments, node_pair_sum, species_moments, MomentSet};
use rayon::prelude::*;

/// Rate-of-change field produced by the collision operator; same shape and
/// ordering as the distribution it was computed from.
pub type CollisionRhs = DistributionField;

const EXPONENT_CLAMP: f64 = 700.0;

/// Evaluates the BGK right-hand side for every species and cell.
pub fn bgk_rhs(
    field: &DistributionField,
    params: &MixtureParams,
    normalize: bool,
) -> Result<CollisionRhs> {
    let moments = species_moments(field, params)?;
    bgk_rhs_with_moments(field, params, normalize, &moments)
}

/// BGK right-hand side reusing an existing moment set (the driver computes
/// moments once per step for diagnostics anyway).
pub fn bgk_rhs_with_moments(
    field: &DistributionField,
    params: &MixtureParams,
    normalize: bool,
    moments: &MomentSet,
) -> Result<CollisionRhs> {
    let shape = field.shape;
    let vg = &shape.velocity;
    let np = shape.n_species;
    let nc = shape.cell_count();
    let nn = shape.node_count();
    if params.species_count() != np {
        return Err(Error::invalid(format!(
            "params have {} species, field has {np}",
            params.species_count()
        )));
    }
    let mix = mixture_pair_moments(moments, params)?;
    let dvol = vg.volume_element();
    let half_dim = vg.dim as f64 / 2.0;
    let coords: Vec<[f64; 2]> = (0..nn).map(|k| vg.node(k)).collect();

    let mut out = DistributionField::zeros(shape);
    out.data
        .par_chunks_mut(nn)
        .enumerate()
        .try_for_each_init(
            || vec![0.0f64; nn],
            |scratch, (pc, rate)| -> Result<()> {
                let p = pc / nc;
                let cell = pc % nc;
                let f = field.cell(p, cell);
                let mass = params.masses[p];
                let n_p = moments.n[moments.idx(p, cell)];
                for q in 0..np {
                    let nu = params.nu(p, q);
                    let target_v = mix.velocity(p, q, cell);
                    let target_t = mix.temperature(p, q, cell);
                    if !(target_t > 0.0) {
                        return Err(Error::invalid(format!(
                            "mixture temperature T[{p},{q}] = {target_t:e} in cell {cell} is not positive"
                        )));
                    }
                    let inv_2t = mass / (2.0 * target_t);
                    for k in 0..nn {
                        let dx = target_v[0] - coords[k][0];
                        let dy = target_v[1] - coords[k][1];
                        let z = (inv_2t * (dx * dx + dy * dy)).min(EXPONENT_CLAMP);
                        scratch[k] = (-z).exp();
                    }
                    let coef = if normalize {
                        let s = node_pair_sum(nn, |k| scratch[k]) * dvol;
                        let c = n_p / s;
                        if !c.is_finite() {
                            return Err(Error::invalid(format!(
                                "mixture Maxwellian for species {p} in cell {cell} has no discrete support"
                            )));
                        }
                        c
                    } else {
                        n_p * (mass / (2.0 * std::f64::consts::PI * target_t)).powf(half_dim)
                    };
                    for k in 0..nn {
                        rate[k] += nu * (coef * scratch[k] - f[k]);
                    }
                }
                Ok(())
            },
        )?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{FieldShape, SpatialGrid, VelocityGrid};
    use crate::moments::{discrete_maxwellian, entropy, species_moments, total_moments};

    fn one_cell(np: usize, vg: VelocityGrid) -> FieldShape {
        let sg = SpatialGrid::build([0.0; 2], [1.0; 2], [1, 1], 1).unwrap();
        FieldShape::new(np, sg, vg)
    }

    fn common_maxwellian_field(
        vg: VelocityGrid,
        params: &MixtureParams,
        densities: &[f64],
        v: [f64; 2],
        t: f64,
    ) -> DistributionField {
        let shape = one_cell(params.species_count(), vg);
        let mut data = Vec::new();
        for (p, &n) in densities.iter().enumerate() {
            data.extend(discrete_maxwellian(n, v, t, params.masses[p], &vg, true).unwrap());
        }
        DistributionField::from_data(shape, data).unwrap()
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let vg = VelocityGrid::covering(8.0, 0.5, 1).unwrap();
        let params = MixtureParams::unit_frequencies(vec![1.0, 2.0], 1.0).unwrap();
        let field = common_maxwellian_field(vg, &params, &[1.0, 0.5], [0.2, 0.0], 1.0);
        let q = bgk_rhs(&field, &params, true).unwrap();
        assert!(q.max_abs() <= 1e-6, "residual {}", q.max_abs());
    }

    #[test]
    fn equilibrium_residual_shrinks_with_domain() {
        let params = MixtureParams::unit_frequencies(vec![1.0], 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for lv in [4.0, 6.0, 8.0] {
            let vg = VelocityGrid::covering(lv, 0.5, 1).unwrap();
            let field = common_maxwellian_field(vg, &params, &[1.0], [0.3, 0.0], 1.0);
            let q = bgk_rhs(&field, &params, true).unwrap();
            assert!(q.max_abs() < prev);
            prev = q.max_abs();
        }
    }

    #[test]
    fn single_species_reduces_to_classic_bgk() {
        let vg = VelocityGrid::covering(8.0, 0.5, 1).unwrap();
        let params = MixtureParams::unit_frequencies(vec![1.3], 1.0).unwrap();
        let shape = one_cell(1, vg);
        let nn = vg.node_count();
        // arbitrary positive distribution
        let data: Vec<f64> = (0..nn)
            .map(|k| {
                let v = vg.node(k)[0];
                (-0.4 * (v - 0.7) * (v - 0.7)).exp() + 0.05 * (-0.2 * (v + 2.0) * (v + 2.0)).exp()
            })
            .collect();
        let field = DistributionField::from_data(shape, data.clone()).unwrap();
        let q = bgk_rhs(&field, &params, true).unwrap();
        let mom = species_moments(&field, &params).unwrap();
        let m = discrete_maxwellian(mom.n[0], mom.velocity[0], mom.temperature[0], 1.3, &vg, true)
            .unwrap();
        for k in 0..nn {
            let expect = m[k] - data[k];
            assert!(
                (q.data[k] - expect).abs() <= 1e-13 * expect.abs().max(1.0),
                "node {k}: {} vs {expect}",
                q.data[k]
            );
        }
    }

    #[test]
    fn species_mass_is_conserved_to_machine_precision() {
        let vg = VelocityGrid::covering(6.0, 0.5, 1).unwrap();
        let params = MixtureParams::unit_frequencies(vec![1.0, 5.0], 1.0).unwrap();
        let shape = one_cell(2, vg);
        let nn = vg.node_count();
        let data: Vec<f64> = (0..shape.len())
            .map(|i| 0.02 + ((i * 2654435761) % 997) as f64 / 997.0)
            .collect();
        let field = DistributionField::from_data(shape, data).unwrap();
        let q = bgk_rhs(&field, &params, true).unwrap();
        let dvol = vg.volume_element();
        for p in 0..2 {
            let slice = q.cell(p, 0);
            let mass_rate = node_pair_sum(nn, |k| slice[k]) * dvol;
            let scale: f64 = slice.iter().map(|v| v.abs()).sum::<f64>() * dvol;
            assert!(mass_rate.abs() <= 1e-13 * scale.max(1.0), "drift {mass_rate:e}");
        }
    }

    #[test]
    fn momentum_exchange_balances_by_quadrature() {
        // L_v >= 8 sqrt(T_max / m_min) with T = 1, m_min = 1
        let vg = VelocityGrid::covering(8.0, 0.5, 1).unwrap();
        let params = MixtureParams::unit_frequencies(vec![1.0, 3.0], 1.0).unwrap();
        let shape = one_cell(2, vg);
        let nn = vg.node_count();
        let mut data = discrete_maxwellian(1.0, [0.5, 0.0], 0.8, 1.0, &vg, true).unwrap();
        data.extend(discrete_maxwellian(0.7, [-0.4, 0.0], 1.0, 3.0, &vg, true).unwrap());
        let field = DistributionField::from_data(shape, data).unwrap();
        let q = bgk_rhs(&field, &params, true).unwrap();
        // direct summation oracle for the momentum rate
        let dvol = vg.volume_element();
        let mut momentum_rate = 0.0;
        for p in 0..2 {
            let slice = q.cell(p, 0);
            for k in 0..nn {
                momentum_rate += params.masses[p] * vg.node(k)[0] * slice[k] * dvol;
            }
        }
        assert!(momentum_rate.abs() <= 1e-6, "momentum rate {momentum_rate:e}");
    }

    #[test]
    fn degree_one_homogeneity_in_density() {
        let vg = VelocityGrid::covering(6.0, 0.5, 1).unwrap();
        let params = MixtureParams::unit_frequencies(vec![1.0, 2.0], 1.0).unwrap();
        let shape = one_cell(2, vg);
        let data: Vec<f64> = (0..shape.len())
            .map(|i| 0.05 + ((i * 1103515245) % 811) as f64 / 811.0)
            .collect();
        let field = DistributionField::from_data(shape, data.clone()).unwrap();
        let c = 3.7;
        let scaled =
            DistributionField::from_data(shape, data.iter().map(|v| c * v).collect()).unwrap();
        let q1 = bgk_rhs(&field, &params, true).unwrap();
        let q2 = bgk_rhs(&scaled, &params, true).unwrap();
        for (a, b) in q1.data.iter().zip(q2.data.iter()) {
            assert!((c * a - b).abs() <= 1e-12 * b.abs().max(1e-12));
        }
    }

    #[test]
    fn zero_field_propagates_degenerate_moments() {
        let vg = VelocityGrid::build(4.0, 4, 1).unwrap();
        let params = MixtureParams::unit_frequencies(vec![1.0], 1.0).unwrap();
        let field = DistributionField::zeros(one_cell(1, vg));
        assert!(matches!(
            bgk_rhs(&field, &params, true),
            Err(Error::DegenerateMoments { .. })
        ));
    }

    #[test]
    fn homogeneous_relaxation_conserves_and_dissipates() {
        // forward Euler with dt << eps / nu; momentum and energy drift stay at
        // quadrature scale and H never increases
        let vg = VelocityGrid::covering(10.0, 0.25, 1).unwrap();
        let eps = 1.0; // homogeneous: the 1/eps scaling is irrelevant here
        let params = MixtureParams::unit_frequencies(vec![1.0, 2.0], eps).unwrap();
        let shape = one_cell(2, vg);
        let mut data = discrete_maxwellian(1.0, [0.5, 0.0], 1.2, 1.0, &vg, true).unwrap();
        data.extend(discrete_maxwellian(0.8, [-0.6, 0.0], 0.7, 2.0, &vg, true).unwrap());
        let mut field = DistributionField::from_data(shape, data).unwrap();

        let observables = |f: &DistributionField| {
            let mom = species_moments(f, &params).unwrap();
            let tot = total_moments(f, &mom, &params).unwrap();
            let energy = 0.5 * tot.rho[0] * (tot.velocity[0][0].powi(2) + tot.velocity[0][1].powi(2))
                + 0.5 * tot.n[0] * tot.temperature[0];
            (tot.rho[0] * tot.velocity[0][0], energy, entropy(f).unwrap()[0])
        };

        let (p0, e0, mut h_prev) = observables(&field);
        let dt = 0.02;
        for _ in 0..900 {
            let q = bgk_rhs(&field, &params, true).unwrap();
            field = field.scaled_add(dt, &q);
            let (p, e, h) = observables(&field);
            assert!((p - p0).abs() <= 1e-6, "momentum drift {:e}", p - p0);
            assert!((e - e0).abs() <= 1e-6 * e0.abs(), "energy drift {:e}", e - e0);
            assert!(h <= h_prev + 1e-12 * h_prev.abs(), "entropy rose: {h} > {h_prev}");
            h_prev = h;
        }
        // both species end near the conserved mixture velocity
        let mom = species_moments(&field, &params).unwrap();
        let v_mix = p0 / (mom.rho[0] + mom.rho[1]);
        assert!((mom.velocity[0][0] - v_mix).abs() < 1e-6);
        assert!((mom.velocity[1][0] - v_mix).abs() < 1e-6);
    }
}
