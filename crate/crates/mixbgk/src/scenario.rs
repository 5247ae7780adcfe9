//! Initial data builders for the bundled experiments.
//!
//! Every builder seeds nominally-absent species at a relative density
//! delta_floor of the local resident gas, which keeps temperatures defined
//! without altering the hydrodynamics to leading order. Builders return the
//! field together with the resolved grids and boundary conditions, and the
//! result is checked to produce valid moments everywhere.

use crate::config::{
    resolve_grids, ScenarioConfig, ScenarioKind, SodSection,
};
use crate::error::{Error, Result};
use crate::grid::{DistributionField, FieldShape, MixtureParams};
use crate::moments::{discrete_maxwellian, species_moments};
use crate::transport::BoundarySpec;

/// A fully resolved scenario: parameters, grids, boundary, and initial state.
pub struct Scenario {
    pub kind: ScenarioKind,
    pub params: MixtureParams,
    pub shape: FieldShape,
    pub boundary: BoundarySpec,
    pub initial: DistributionField,
    /// Short description used in spectra reports and run manifests.
    pub descriptor: String,
}

/// Builds the scenario named by the config. `paper_scale` switches the grid
/// defaults from desk scale to the full experiment resolution.
pub fn build_scenario(config: &ScenarioConfig, paper_scale: bool) -> Result<Scenario> {
    config.validate()?;
    let params = config.mixture_params()?;
    let grids = resolve_grids(config, paper_scale)?;
    let shape = FieldShape::new(params.species_count(), grids.space, grids.velocity);

    let (initial, descriptor) = match config.scenario {
        ScenarioKind::Sod => {
            let section = config.sod.clone().unwrap_or_default();
            let field = build_sod(shape, &params, &section)?;
            (field, format!("sod interface at {}", section.interface))
        }
        ScenarioKind::ShockBubble => {
            let center = config
                .shock_bubble
                .clone()
                .unwrap_or_default()
                .bubble_center;
            let center = [
                center.first().copied().unwrap_or(0.0),
                center.get(1).copied().unwrap_or(0.0),
            ];
            (build_shock_bubble(shape, &params, center)?, format!("shock-bubble at {center:?}"))
        }
        ScenarioKind::KelvinHelmholtz => {
            (build_kelvin_helmholtz(shape, &params)?, "kelvin-helmholtz shear layer".to_string())
        }
        ScenarioKind::RichtmyerMeshkov => {
            (build_richtmyer_meshkov(shape, &params)?, "richtmyer-meshkov interface".to_string())
        }
        ScenarioKind::HomogeneousRelaxation => {
            let section = config.homogeneous.as_ref().ok_or_else(|| {
                Error::Config("homogeneous_relaxation needs a [homogeneous] section".to_string())
            })?;
            let states: Vec<([f64; 2], f64, f64)> = section
                .species
                .iter()
                .map(|s| (s.velocity2(), s.n, s.t))
                .collect();
            (build_homogeneous(shape, &params, &states)?, "homogeneous relaxation".to_string())
        }
        ScenarioKind::Custom => {
            let section = config.custom.as_ref().expect("validated");
            let field = crate::output::read_raw_dump(std::path::Path::new(&section.initial_state))?;
            if field.shape != shape {
                return Err(Error::Config(format!(
                    "custom initial state shape {:?} does not match the configured grids",
                    field.shape
                )));
            }
            (field, format!("custom state from {}", section.initial_state))
        }
    };

    // every builder output must yield valid moments in every cell
    species_moments(&initial, &params)?;

    Ok(Scenario {
        kind: config.scenario,
        params,
        shape,
        boundary: grids.boundary,
        initial,
        descriptor,
    })
}

fn require_two_species(params: &MixtureParams, what: &str) -> Result<()> {
    if params.species_count() != 2 {
        return Err(Error::Config(format!(
            "{what} is a two-species scenario, got {} masses",
            params.species_count()
        )));
    }
    Ok(())
}

/// Two-gas Riemann datum: the left state is carried by species 1 and the
/// right state by species 2, each seeded into the other side at relative
/// density delta_floor. Both species on a side share the velocity and a
/// common temperature chosen so the side's total pressure equals the datum
/// pressure (evaluating the seed at the full datum pressure instead would
/// double the mixture pressure and break the hydrodynamic limit).
pub fn build_sod(
    shape: FieldShape,
    params: &MixtureParams,
    section: &SodSection,
) -> Result<DistributionField> {
    require_two_species(params, "sod")?;
    if shape.space.dim != 1 || shape.velocity.dim != 1 {
        return Err(Error::Config("sod needs 1D space and velocity".to_string()));
    }
    let delta = params.delta_floor;
    let mut field = DistributionField::zeros(shape);
    for cell in 0..shape.cell_count() {
        let x = shape.space.cell_center(cell)[0];
        let side = if x <= section.interface { &section.left } else { &section.right };
        let (rho1, rho2) = if x <= section.interface {
            ((1.0 - delta) * side.rho, delta * side.rho)
        } else {
            (delta * side.rho, (1.0 - delta) * side.rho)
        };
        let n1 = rho1 / params.masses[0];
        let n2 = rho2 / params.masses[1];
        let temperature = side.p / (n1 + n2);
        for (p, n) in [(0usize, n1), (1usize, n2)] {
            let values = discrete_maxwellian(
                n,
                [side.v, 0.0],
                temperature,
                params.masses[p],
                &shape.velocity,
                true,
            )?;
            field.cell_mut(p, cell).copy_from_slice(&values);
        }
    }
    Ok(field)
}

/// Mach-2 shock in the light gas meeting a Gaussian bubble of the heavy gas.
/// In the unshocked region both species share the temperature
/// (n_1 + n_2)^{-1}, which gives unit total pressure and matches the
/// pre-shock state away from the bubble.
pub fn build_shock_bubble(
    shape: FieldShape,
    params: &MixtureParams,
    bubble_center: [f64; 2],
) -> Result<DistributionField> {
    require_two_species(params, "shock_bubble")?;
    if shape.space.dim != 2 || shape.velocity.dim != 2 {
        return Err(Error::Config("shock_bubble needs 2D space and velocity".to_string()));
    }
    let delta = params.delta_floor;
    let mut field = DistributionField::zeros(shape);
    for cell in 0..shape.cell_count() {
        let xy = shape.space.cell_center(cell);
        let r2 = (xy[0] - bubble_center[0]).powi(2) + (xy[1] - bubble_center[1]).powi(2);
        let rho2 = (-16.0 * r2).exp().max(delta);
        let n2 = rho2 / params.masses[1];
        let shocked = xy[0] <= -1.0;
        let (rho1, v1, t1) =
            if shocked { (2.0, [1.414, 0.0], 2.5) } else { (1.0, [0.0, 0.0], f64::NAN) };
        let n1 = rho1 / params.masses[0];
        // common temperature with unit total pressure around the bubble
        let (t1, t2) = if shocked { (t1, t1) } else { (1.0 / (n1 + n2), 1.0 / (n1 + n2)) };
        let f1 = discrete_maxwellian(n1, v1, t1, params.masses[0], &shape.velocity, true)?;
        let f2 = discrete_maxwellian(n2, [0.0, 0.0], t2, params.masses[1], &shape.velocity, true)?;
        field.cell_mut(0, cell).copy_from_slice(&f1);
        field.cell_mut(1, cell).copy_from_slice(&f2);
    }
    Ok(field)
}

/// Opposed shear streams with temperatures T_p = n_p^{-1} (unit partial
/// pressure per species) and the sinusoidal vertical seed velocity.
pub fn build_kelvin_helmholtz(shape: FieldShape, params: &MixtureParams) -> Result<DistributionField> {
    require_two_species(params, "kelvin_helmholtz")?;
    if shape.space.dim != 2 || shape.velocity.dim != 2 {
        return Err(Error::Config("kelvin_helmholtz needs 2D space and velocity".to_string()));
    }
    let delta = params.delta_floor;
    let mut field = DistributionField::zeros(shape);
    for cell in 0..shape.cell_count() {
        let xy = shape.space.cell_center(cell);
        let upper = xy[1] >= 0.0;
        let (rho1, rho2) = if upper {
            ((1.0 - delta) * 1.0, delta * 1.0)
        } else {
            (delta * 2.0, (1.0 - delta) * 2.0)
        };
        let vy = 1e-2 * (4.0 * std::f64::consts::PI * xy[0]).sin();
        for (p, rho, vx) in [(0usize, rho1, 0.5), (1usize, rho2, -0.5)] {
            let n = rho / params.masses[p];
            let t = 1.0 / n;
            let values =
                discrete_maxwellian(n, [vx, vy], t, params.masses[p], &shape.velocity, true)?;
            field.cell_mut(p, cell).copy_from_slice(&values);
        }
    }
    Ok(field)
}

/// Mach-1.21 shock in the light gas approaching the perturbed interface
/// x = -1e-2 sin(20 pi y) of the heavy gas. The shock starts at
/// s0 = -0.0242 so it reaches x = 0 around t = 0 when the run begins at
/// t = -0.02, and every horizontal velocity is shifted by -0.07 before the
/// Maxwellians are built so the interface stays inside the domain.
pub fn build_richtmyer_meshkov(
    shape: FieldShape,
    params: &MixtureParams,
) -> Result<DistributionField> {
    require_two_species(params, "richtmyer_meshkov")?;
    if shape.space.dim != 2 || shape.velocity.dim != 2 {
        return Err(Error::Config("richtmyer_meshkov needs 2D space and velocity".to_string()));
    }
    let delta = params.delta_floor;
    let s0 = -0.0242;
    let drift = -0.07;
    let mut field = DistributionField::zeros(shape);
    for cell in 0..shape.cell_count() {
        let xy = shape.space.cell_center(cell);
        let interface = -1e-2 * (20.0 * std::f64::consts::PI * xy[1]).sin();
        // resident light-gas state left of the interface
        let (rho1_res, v1x, p1) =
            if xy[0] <= s0 { (1.268, 0.256, 0.809) } else { (1.0, 0.0, 0.5) };
        let light_side = xy[0] <= interface;
        let (rho1, rho2, v2x, p2);
        if light_side {
            rho1 = (1.0 - delta) * rho1_res;
            rho2 = delta * rho1_res;
            v2x = v1x; // seed shares the local velocity and pressure
            p2 = p1;
        } else {
            rho1 = delta * 5.0;
            rho2 = (1.0 - delta) * 5.0;
            v2x = 0.0;
            p2 = 0.5;
        }
        let (v1x, p1) = if light_side { (v1x, p1) } else { (v2x, p2) };
        for (p, rho, vx, pressure) in
            [(0usize, rho1, v1x, p1), (1usize, rho2, v2x, p2)]
        {
            let n = rho / params.masses[p];
            let t = pressure / n;
            let values = discrete_maxwellian(
                n,
                [vx + drift, 0.0],
                t,
                params.masses[p],
                &shape.velocity,
                true,
            )?;
            field.cell_mut(p, cell).copy_from_slice(&values);
        }
    }
    Ok(field)
}

/// Spatially uniform Maxwellians with per-species (n, v, T).
pub fn build_homogeneous(
    shape: FieldShape,
    params: &MixtureParams,
    states: &[([f64; 2], f64, f64)],
) -> Result<DistributionField> {
    if states.len() != params.species_count() {
        return Err(Error::Config(format!(
            "homogeneous relaxation needs one state per species ({} given, {} species)",
            states.len(),
            params.species_count()
        )));
    }
    let mut field = DistributionField::zeros(shape);
    for (p, &(v, n, t)) in states.iter().enumerate() {
        let values = discrete_maxwellian(n, v, t, params.masses[p], &shape.velocity, true)?;
        for cell in 0..shape.cell_count() {
            field.cell_mut(p, cell).copy_from_slice(&values);
        }
    }
    Ok(field)
}
