//! Semi-discrete operator assembly and time integration.
//!
//! The semi-discrete operator is D[f] = -Phi[f] + (1/eps) Q[f]. Forward Euler
//! is the inner integrator; projective forward Euler runs K+1 inner steps and
//! extrapolates linearly over the remaining M inner-step equivalents; the
//! two-level telescopic method nests one projective level inside another.

use crate::collision::bgk_rhs_with_moments;
use crate::error::{Error, Result};
use crate::grid::{DistributionField, MixtureParams};
use crate::moments::{entropy, node_pair_sum, species_moments};
use crate::transport::{transport_rhs, BoundarySpec};
use std::time::Instant;

/// A map from a distribution field to a field-shaped rate of change.
pub trait RateOperator: Sync {
    fn rate(&self, field: &DistributionField) -> Result<DistributionField>;
}

/// The assembled multispecies BGK operator: upwind transport plus the
/// collision operator scaled by 1/epsilon.
pub struct BgkOperator {
    pub params: MixtureParams,
    pub boundary: BoundarySpec,
    /// Maxwellian density normalization (exact species-mass conservation).
    pub normalize: bool,
}

impl BgkOperator {
    pub fn new(params: MixtureParams, boundary: BoundarySpec) -> Self {
        BgkOperator { params, boundary, normalize: true }
    }

    /// Collision part alone, unscaled by 1/epsilon (used by spectra tooling).
    pub fn collision_rate(&self, field: &DistributionField) -> Result<DistributionField> {
        let moments = species_moments(field, &self.params)?;
        bgk_rhs_with_moments(field, &self.params, self.normalize, &moments)
    }
}

impl RateOperator for BgkOperator {
    fn rate(&self, field: &DistributionField) -> Result<DistributionField> {
        let mut out = transport_rhs(field, &self.boundary, &self.params, self.normalize)?;
        let moments = species_moments(field, &self.params)?;
        let collision = bgk_rhs_with_moments(field, &self.params, self.normalize, &moments)?;
        let inv_eps = 1.0 / self.params.epsilon;
        for (o, q) in out.data.iter_mut().zip(collision.data.iter()) {
            *o += inv_eps * q;
        }
        Ok(out)
    }
}

/// One projective level: outer step size and the count K of inner steps
/// taken before the extrapolation pair (K+1 inner steps run in total).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectiveLevel {
    pub dt: f64,
    pub k: u32,
}

/// Ordered ladder of integrator levels. No levels means plain forward Euler
/// with step `dt0`; one level is projective forward Euler; two levels is the
/// telescopic method.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorLadder {
    pub dt0: f64,
    pub levels: Vec<ProjectiveLevel>,
}

impl IntegratorLadder {
    pub fn direct(dt0: f64) -> Result<Self> {
        let ladder = IntegratorLadder { dt0, levels: Vec::new() };
        ladder.validate()?;
        Ok(ladder)
    }

    pub fn projective(dt0: f64, dt1: f64, k0: u32) -> Result<Self> {
        let ladder = IntegratorLadder { dt0, levels: vec![ProjectiveLevel { dt: dt1, k: k0 }] };
        ladder.validate()?;
        Ok(ladder)
    }

    pub fn telescopic(dt0: f64, dt1: f64, k0: u32, dt2: f64, k1: u32) -> Result<Self> {
        let ladder = IntegratorLadder {
            dt0,
            levels: vec![ProjectiveLevel { dt: dt1, k: k0 }, ProjectiveLevel { dt: dt2, k: k1 }],
        };
        ladder.validate()?;
        Ok(ladder)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt0 > 0.0) {
            return Err(Error::invalid(format!("dt0 must be positive, got {}", self.dt0)));
        }
        if self.levels.len() > 2 {
            return Err(Error::invalid("at most two projective levels are supported".to_string()));
        }
        let mut below = self.dt0;
        for (idx, level) in self.levels.iter().enumerate() {
            if !(level.dt > 0.0) {
                return Err(Error::invalid(format!("dt{} must be positive", idx + 1)));
            }
            let composed = below * (level.k as f64 + 1.0);
            if level.dt < composed {
                return Err(Error::invalid(format!(
                    "dt{} = {} is below the inner composition (K+1) dt = {}",
                    idx + 1,
                    level.dt,
                    composed
                )));
            }
            below = level.dt;
        }
        Ok(())
    }

    /// Extrapolation factor M_l = dt_{l+1}/dt_l - (K_l + 1) of projective
    /// level `level` (0-based).
    pub fn extrapolation_factor(&self, level: usize) -> f64 {
        let below = if level == 0 { self.dt0 } else { self.levels[level - 1].dt };
        let l = &self.levels[level];
        l.dt / below - (l.k as f64 + 1.0)
    }

    /// Step size of the outermost level.
    pub fn outer_dt(&self) -> f64 {
        self.levels.last().map_or(self.dt0, |l| l.dt)
    }

    /// Inner forward-Euler evaluations per outer step.
    pub fn inner_steps_per_outer(&self) -> usize {
        self.levels.iter().map(|l| l.k as usize + 1).product()
    }
}

/// Cost reduction factor S of a ladder versus direct integration with dt0:
/// the product over levels of (dt_{l+1}/dt_l) / (K_l + 1).
pub fn efficiency_factor(ladder: &IntegratorLadder) -> f64 {
    let mut s = 1.0;
    let mut below = ladder.dt0;
    for level in &ladder.levels {
        s *= (level.dt / below) / (level.k as f64 + 1.0);
        below = level.dt;
    }
    s
}

fn check_finite(field: DistributionField, what: &str) -> Result<DistributionField> {
    // a single sum detects any NaN or infinity without a per-element branch
    if field.data.iter().sum::<f64>().is_finite() {
        Ok(field)
    } else {
        Err(Error::Blowup { t: f64::NAN, step: 0, context: what.to_string() })
    }
}

/// One forward Euler step f + dt D[f].
pub fn forward_euler_step(
    field: &DistributionField,
    dt: f64,
    op: &dyn RateOperator,
) -> Result<DistributionField> {
    let rate = op.rate(field)?;
    check_finite(field.scaled_add(dt, &rate), "forward Euler step produced non-finite values")
}

/// Projective forward Euler: K+1 steps of the inner stepper, then a linear
/// extrapolation to cover dt_out in total. A zero extrapolation weight
/// returns the composed inner steps bitwise.
pub fn pfe_step(
    field: &DistributionField,
    dt_out: f64,
    dt_in: f64,
    k: u32,
    inner: &mut dyn FnMut(&DistributionField) -> Result<DistributionField>,
) -> Result<DistributionField> {
    // K inner steps reach f^{K}; one more gives the extrapolation pair
    let mut f_k = field.clone();
    for _ in 0..k {
        f_k = inner(&f_k)?;
    }
    let f_k1 = inner(&f_k)?;
    let weight = (dt_out - (k as f64 + 1.0) * dt_in) / dt_in;
    if weight == 0.0 {
        return Ok(f_k1);
    }
    let mut out = f_k1.clone();
    for ((o, a), b) in out.data.iter_mut().zip(f_k1.data.iter()).zip(f_k.data.iter()) {
        *o = a + weight * (a - b);
    }
    check_finite(out, "projective extrapolation produced non-finite values")
}

/// One step of the ladder: forward Euler, PFE, or two-level telescopic PFE
/// depending on the ladder depth.
pub fn tpfe_step(
    field: &DistributionField,
    ladder: &IntegratorLadder,
    op: &dyn RateOperator,
) -> Result<DistributionField> {
    tpfe_step_with_outer(field, ladder, op, ladder.outer_dt())
}

/// Ladder step whose outermost step size is overridden (used to land exactly
/// on the final time: truncation shortens the outermost extrapolation weight,
/// never the inner steps).
pub fn tpfe_step_with_outer(
    field: &DistributionField,
    ladder: &IntegratorLadder,
    op: &dyn RateOperator,
    outer_dt: f64,
) -> Result<DistributionField> {
    let dt0 = ladder.dt0;
    match ladder.levels.len() {
        0 => forward_euler_step(field, outer_dt, op),
        1 => {
            let l1 = ladder.levels[0];
            pfe_step(field, outer_dt, dt0, l1.k, &mut |g| forward_euler_step(g, dt0, op))
        }
        2 => {
            let l1 = ladder.levels[0];
            let l2 = ladder.levels[1];
            pfe_step(field, outer_dt, l1.dt, l2.k, &mut |g| {
                pfe_step(g, l1.dt, dt0, l1.k, &mut |h| forward_euler_step(h, dt0, op))
            })
        }
        _ => Err(Error::invalid("at most two projective levels are supported".to_string())),
    }
}

/// Conserved-quantity totals of a field: per-species mass, total momentum,
/// and total kinetic energy, all integrated over phase space.
pub fn global_invariants(
    field: &DistributionField,
    params: &MixtureParams,
) -> (Vec<f64>, [f64; 2], f64) {
    let shape = &field.shape;
    let nn = shape.node_count();
    let nc = shape.cell_count();
    let vol = shape.velocity.volume_element() * shape.space.volume_element();
    let coords: Vec<[f64; 2]> = (0..nn).map(|k| shape.velocity.node(k)).collect();
    let mut mass = vec![0.0; shape.n_species];
    let mut momentum = [0.0; 2];
    let mut energy = 0.0;
    for p in 0..shape.n_species {
        let m = params.masses[p];
        for cell in 0..nc {
            let f = field.cell(p, cell);
            mass[p] += node_pair_sum(nn, |k| f[k]);
            momentum[0] += m * node_pair_sum(nn, |k| coords[k][0] * f[k]) * vol;
            momentum[1] += m * node_pair_sum(nn, |k| coords[k][1] * f[k]) * vol;
            energy += 0.5
                * m
                * node_pair_sum(nn, |k| {
                    (coords[k][0] * coords[k][0] + coords[k][1] * coords[k][1]) * f[k]
                })
                * vol;
        }
        mass[p] *= m * vol;
    }
    (mass, momentum, energy)
}

/// Per-outer-step observables emitted by the driver.
#[derive(Debug, Clone)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    pub species_mass: Vec<f64>,
    pub momentum: [f64; 2],
    pub energy: f64,
    pub entropy_total: f64,
    pub min_f: f64,
    pub wall_seconds: f64,
}

/// A state snapshot handed to sinks.
pub struct Snapshot<'a> {
    pub index: usize,
    pub step: usize,
    pub time: f64,
    pub field: &'a DistributionField,
}

/// Receiver for snapshots and diagnostics. Default impls ignore everything.
pub trait SimulationSink {
    fn on_diagnostics(&mut self, _d: &StepDiagnostics) -> Result<()> {
        Ok(())
    }
    fn on_snapshot(&mut self, _s: &Snapshot) -> Result<()> {
        Ok(())
    }
}

/// Sink that drops everything.
pub struct NullSink;
impl SimulationSink for NullSink {}

/// Driver options.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub t_begin: f64,
    pub t_end: f64,
    /// Simulation-time interval between snapshots.
    pub snapshot_cadence: f64,
    /// Diagnostics are computed every this many outer steps (1 = every step;
    /// useful to thin out the direct integrator, where every step is outer).
    pub diagnostics_every: usize,
}

#[derive(Debug, Clone)]
pub struct RunStats {
    pub outer_steps: usize,
    pub inner_steps: usize,
    pub wall_seconds: f64,
}

/// Advances the field from t_begin to t_end with the given ladder, emitting
/// snapshots at the requested cadence and diagnostics per outer step. The
/// final step is truncated to land on t_end exactly; on blowup the last good
/// state is flushed as a snapshot before the error is returned.
pub fn run_simulation(
    initial: &DistributionField,
    ladder: &IntegratorLadder,
    op: &dyn RateOperator,
    params: &MixtureParams,
    options: &RunOptions,
    sink: &mut dyn SimulationSink,
) -> Result<(DistributionField, RunStats)> {
    if !(options.t_end > options.t_begin) {
        return Err(Error::invalid("t_end must exceed t_begin".to_string()));
    }
    if !(options.snapshot_cadence > 0.0) {
        return Err(Error::invalid("snapshot cadence must be positive".to_string()));
    }
    ladder.validate()?;
    let start = Instant::now();
    let dt_outer = ladder.outer_dt();
    let horizon = options.t_end - options.t_begin;
    let diag_every = options.diagnostics_every.max(1);

    let mut field = initial.clone();
    let mut snapshot_index = 0usize;
    let mut next_snapshot = options.t_begin;
    let mut step = 0usize;
    let mut inner_steps = 0usize;

    let emit_diagnostics =
        |field: &DistributionField, step: usize, t: f64, sink: &mut dyn SimulationSink, start: &Instant| -> Result<()> {
            let (species_mass, momentum, energy) = global_invariants(field, params);
            let h_cells = entropy(field).unwrap_or_default();
            let cell_vol = field.shape.space.volume_element();
            let entropy_total = h_cells.iter().sum::<f64>() * cell_vol;
            sink.on_diagnostics(&StepDiagnostics {
                step,
                time: t,
                species_mass,
                momentum,
                energy,
                entropy_total,
                min_f: field.min_value(),
                wall_seconds: start.elapsed().as_secs_f64(),
            })
        };

    emit_diagnostics(&field, 0, options.t_begin, sink, &start)?;
    sink.on_snapshot(&Snapshot { index: snapshot_index, step: 0, time: options.t_begin, field: &field })?;
    snapshot_index += 1;
    next_snapshot += options.snapshot_cadence;

    loop {
        let t = options.t_begin + step as f64 * dt_outer;
        let remaining = options.t_end - t;
        if remaining <= 1e-12 * horizon {
            break;
        }
        let this_dt = if remaining < dt_outer { remaining } else { dt_outer };
        let result = if this_dt == dt_outer {
            tpfe_step(&field, ladder, op)
        } else {
            tpfe_step_with_outer(&field, ladder, op, this_dt)
        };
        let next = match result {
            Ok(next) => next,
            Err(Error::Blowup { context, .. }) => {
                // flush the last good state, then report where it happened
                sink.on_snapshot(&Snapshot {
                    index: snapshot_index,
                    step,
                    time: t,
                    field: &field,
                })?;
                return Err(Error::Blowup { t, step, context });
            }
            Err(other) => return Err(other),
        };
        field = next;
        inner_steps += ladder.inner_steps_per_outer();
        step += 1;
        let t_now = if this_dt == dt_outer {
            options.t_begin + step as f64 * dt_outer
        } else {
            options.t_end
        };

        if step % diag_every == 0 {
            emit_diagnostics(&field, step, t_now, sink, &start)?;
        }
        if t_now + 1e-12 * horizon >= next_snapshot && t_now < options.t_end - 1e-12 * horizon {
            sink.on_snapshot(&Snapshot { index: snapshot_index, step, time: t_now, field: &field })?;
            snapshot_index += 1;
            while next_snapshot <= t_now + 1e-12 * horizon {
                next_snapshot += options.snapshot_cadence;
            }
        }
        if this_dt != dt_outer {
            break;
        }
    }

    if step % diag_every != 0 {
        emit_diagnostics(&field, step, options.t_end, sink, &start)?;
    }
    sink.on_snapshot(&Snapshot { index: snapshot_index, step, time: options.t_end, field: &field })?;
    Ok((
        field,
        RunStats { outer_steps: step, inner_steps, wall_seconds: start.elapsed().as_secs_f64() },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{FieldShape, SpatialGrid, VelocityGrid};
    use crate::moments::discrete_maxwellian;

    /// y' = diag(lambda) y on the flattened state.
    struct DiagonalOp {
        lambda: Vec<f64>,
    }

    impl RateOperator for DiagonalOp {
        fn rate(&self, field: &DistributionField) -> Result<DistributionField> {
            let mut out = field.clone();
            for (o, l) in out.data.iter_mut().zip(self.lambda.iter()) {
                *o *= l;
            }
            Ok(out)
        }
    }

    /// Complex scalar y' = lambda y embedded as a 2x2 real rotation-scaling
    /// block in the first two state entries.
    struct ComplexScalarOp {
        re: f64,
        im: f64,
    }

    impl RateOperator for ComplexScalarOp {
        fn rate(&self, field: &DistributionField) -> Result<DistributionField> {
            let mut out = DistributionField::zeros(field.shape);
            out.data[0] = self.re * field.data[0] - self.im * field.data[1];
            out.data[1] = self.im * field.data[0] + self.re * field.data[1];
            Ok(out)
        }
    }

    struct ZeroOp;
    impl RateOperator for ZeroOp {
        fn rate(&self, field: &DistributionField) -> Result<DistributionField> {
            Ok(DistributionField::zeros(field.shape))
        }
    }

    fn tiny_shape() -> FieldShape {
        let vg = VelocityGrid::build(1.5, 1, 1).unwrap();
        let sg = SpatialGrid::build([0.0; 2], [1.0; 2], [1, 1], 1).unwrap();
        FieldShape::new(1, sg, vg)
    }

    fn scalar_field(values: [f64; 3]) -> DistributionField {
        DistributionField::from_data(tiny_shape(), values.to_vec()).unwrap()
    }

    fn dummy_params() -> MixtureParams {
        MixtureParams::unit_frequencies(vec![1.0], 1.0).unwrap()
    }

    #[test]
    fn euler_identity_and_decay() {
        let f = scalar_field([1.0, 2.0, 3.0]);
        let stepped = forward_euler_step(&f, 0.3, &ZeroOp).unwrap();
        assert_eq!(stepped.data, f.data);

        let op = DiagonalOp { lambda: vec![-1.0; 3] };
        let stepped = forward_euler_step(&f, 0.1, &op).unwrap();
        assert_eq!(stepped.data, vec![0.9, 1.8, 2.7]);
    }

    #[test]
    fn euler_fixed_point_on_maxwellian() {
        let vg = VelocityGrid::covering(8.0, 0.5, 1).unwrap();
        let sg = SpatialGrid::build([0.0; 2], [1.0; 2], [1, 1], 1).unwrap();
        let shape = FieldShape::new(1, sg, vg);
        let params = MixtureParams::unit_frequencies(vec![1.0], 1e-2).unwrap();
        let data = discrete_maxwellian(1.0, [0.2, 0.0], 1.0, 1.0, &vg, true).unwrap();
        let field = DistributionField::from_data(shape, data).unwrap();
        let op = BgkOperator::new(params, BoundarySpec::periodic());
        let stepped = forward_euler_step(&field, 1e-3, &op).unwrap();
        for (a, b) in field.data.iter().zip(stepped.data.iter()) {
            assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-12));
        }
    }

    #[test]
    fn pfe_scalar_formula() {
        // y' = -y, dt_in = 0.1, K = 1, dt_out = 0.4: result is 0.63 y
        let f = scalar_field([1.0, 1.0, 1.0]);
        let op = DiagonalOp { lambda: vec![-1.0; 3] };
        let out = pfe_step(&f, 0.4, 0.1, 1, &mut |g| forward_euler_step(g, 0.1, &op)).unwrap();
        for v in out.data {
            assert!((v - 0.63).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_projection_is_bitwise_composition() {
        let f = scalar_field([1.3, -0.4, 0.9]);
        let op = DiagonalOp { lambda: vec![-0.7, 0.3, -1.9] };
        // power-of-two step so the ratios (and hence the weights) are exact
        let dt = 0.0625;
        // dt_out = (K+1) dt_in: extrapolation weight is exactly zero
        let k = 2;
        let composed = {
            let mut g = f.clone();
            for _ in 0..(k + 1) {
                g = forward_euler_step(&g, dt, &op).unwrap();
            }
            g
        };
        let pfe = pfe_step(&f, (k as f64 + 1.0) * dt, dt, k, &mut |g| {
            forward_euler_step(g, dt, &op)
        })
        .unwrap();
        assert_eq!(pfe.data, composed.data);

        // the same holds through the full telescopic path
        let ladder = IntegratorLadder::telescopic(dt, 2.0 * dt, 1, 6.0 * dt, 2).unwrap();
        assert_eq!(ladder.extrapolation_factor(0), 0.0);
        assert_eq!(ladder.extrapolation_factor(1), 0.0);
        let tel = tpfe_step(&f, &ladder, &op).unwrap();
        let composed6 = {
            let mut g = f.clone();
            for _ in 0..6 {
                g = forward_euler_step(&g, dt, &op).unwrap();
            }
            g
        };
        assert_eq!(tel.data, composed6.data);
    }

    #[test]
    fn single_level_ladder_matches_pfe_bitwise() {
        let f = scalar_field([0.8, 0.5, 1.7]);
        let op = DiagonalOp { lambda: vec![-2.0, -0.3, -1.0] };
        let ladder = IntegratorLadder::projective(0.05, 0.4, 2).unwrap();
        let via_ladder = tpfe_step(&f, &ladder, &op).unwrap();
        let via_pfe =
            pfe_step(&f, 0.4, 0.05, 2, &mut |g| forward_euler_step(g, 0.05, &op)).unwrap();
        assert_eq!(via_ladder.data, via_pfe.data);
    }

    #[test]
    fn telescopic_step_counts() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        struct CountingOp(AtomicUsize);
        impl RateOperator for CountingOp {
            fn rate(&self, field: &DistributionField) -> Result<DistributionField> {
                self.0.fetch_add(1, Ordering::Relaxed);
                Ok(DistributionField::zeros(field.shape))
            }
        }
        let f = scalar_field([1.0, 1.0, 1.0]);
        let op = CountingOp(AtomicUsize::new(0));
        let ladder = IntegratorLadder::telescopic(0.01, 0.04, 1, 0.4, 6).unwrap();
        tpfe_step(&f, &ladder, &op).unwrap();
        // (K1 + 1) middle steps, each of (K0 + 1) inner Euler steps
        assert_eq!(op.0.load(Ordering::Relaxed), 7 * 2);
        assert_eq!(ladder.inner_steps_per_outer(), 14);
    }

    #[test]
    fn paper_sod_ladder_extrapolation_factor() {
        // dt0 = eps/2, dt1 = 2 eps, K0 = 1 -> M0 = 4 - 2 = 2
        let eps = 1e-6;
        let ladder = IntegratorLadder::telescopic(eps / 2.0, 2.0 * eps, 1, 6.1e-5, 6).unwrap();
        assert_eq!(ladder.extrapolation_factor(0), 2.0);
    }

    #[test]
    fn efficiency_factor_examples() {
        // single level: dt1/dt0 = 4, K0 = 1 -> S = 2
        let ladder = IntegratorLadder::projective(0.25, 1.0, 1).unwrap();
        assert_eq!(efficiency_factor(&ladder), 2.0);

        // benchmark ladders: dt0 = eps/2, dt1 = 2 eps, dt2 = 2^-8/16, K0 = 1, K1 = 6
        let dt2 = 2f64.powi(-8) / 16.0;
        for (eps, expect) in [(1e-5, 3.48772321), (1e-6, 34.877232142857146), (1e-7, 348.77232142857144)]
        {
            let ladder = IntegratorLadder::telescopic(eps / 2.0, 2.0 * eps, 1, dt2, 6).unwrap();
            let s = efficiency_factor(&ladder);
            assert!((s - expect).abs() < 1e-6, "S = {s}, expected {expect}");
        }

        // reported cost reductions of the 2D experiments
        let sb = IntegratorLadder::telescopic(0.5e-5, 2e-5, 1, 0.00125, 6).unwrap();
        assert!((efficiency_factor(&sb) - 17.857142857).abs() < 1e-6);
        let kh = IntegratorLadder::telescopic(0.5e-5, 2e-5, 2, 0.000390625, 4).unwrap();
        assert!((efficiency_factor(&kh) - 5.2083333333).abs() < 1e-6);
        let rm = IntegratorLadder::telescopic(0.5e-6, 2e-6, 1, 6.25e-5, 6).unwrap();
        assert!((efficiency_factor(&rm) - 8.9285714286).abs() < 1e-6);
    }

    #[test]
    fn ladder_validation() {
        assert!(IntegratorLadder::direct(0.0).is_err());
        assert!(IntegratorLadder::projective(0.1, 0.15, 1).is_err()); // 0.15 < 2*0.1
        assert!(IntegratorLadder::projective(0.1, 0.2, 1).is_ok()); // equality allowed
        assert!(IntegratorLadder::telescopic(0.1, 0.2, 1, 0.3, 1).is_err()); // 0.3 < 2*0.2
    }

    /// Amplification of the real PFE/TPFE code on the complex scalar problem
    /// y' = lambda y, via the 2x2 real embedding.
    fn scalar_amplification(ladder: &IntegratorLadder, re: f64, im: f64, steps: usize) -> f64 {
        let op = ComplexScalarOp { re, im };
        let mut f = scalar_field([1.0, 0.0, 0.0]);
        let mut max_mod: f64 = 1.0;
        for _ in 0..steps {
            f = match tpfe_step(&f, ladder, &op) {
                Ok(next) => next,
                Err(_) => return f64::INFINITY,
            };
            let modulus = (f.data[0] * f.data[0] + f.data[1] * f.data[1]).sqrt();
            if !modulus.is_finite() {
                return f64::INFINITY;
            }
            max_mod = max_mod.max(modulus);
            if modulus > 1e12 {
                return modulus;
            }
        }
        let modulus = (f.data[0] * f.data[0] + f.data[1] * f.data[1]).sqrt();
        modulus.max(if max_mod > 1e6 { max_mod } else { modulus })
    }

    #[test]
    fn pfe_stability_matches_disk_intuition() {
        // M = 100, K = 2, dt_in = 1: stable near -1 and near -1/M, unstable
        // in the gap
        let dt_in = 1.0;
        let k = 2u32;
        let m = 100.0;
        let dt_out = (m + k as f64 + 1.0) * dt_in;
        let ladder = IntegratorLadder::projective(dt_in, dt_out, k).unwrap();
        assert!(scalar_amplification(&ladder, -0.99, 0.0, 100) <= 1.0 + 1e-9);
        assert!(scalar_amplification(&ladder, -1.0 / m, 0.0, 100) <= 1.0 + 1e-9);
        assert!(scalar_amplification(&ladder, -0.5, 0.0, 100) > 1e3);
    }

    #[test]
    fn steps_are_affine_in_the_state() {
        // step(alpha f + beta g) = alpha step(f) + beta step(g) for a linear
        // operator
        let op = DiagonalOp { lambda: vec![-1.4, 0.2, -0.6] };
        let ladder = IntegratorLadder::telescopic(0.01, 0.05, 2, 0.5, 3).unwrap();
        let f = scalar_field([0.3, -1.0, 2.0]);
        let g = scalar_field([1.1, 0.4, -0.7]);
        let (alpha, beta) = (0.6, -1.7);
        let combined = {
            let mut c = DistributionField::zeros(tiny_shape());
            for i in 0..3 {
                c.data[i] = alpha * f.data[i] + beta * g.data[i];
            }
            c
        };
        let lhs = tpfe_step(&combined, &ladder, &op).unwrap();
        let sf = tpfe_step(&f, &ladder, &op).unwrap();
        let sg = tpfe_step(&g, &ladder, &op).unwrap();
        for i in 0..3 {
            let rhs = alpha * sf.data[i] + beta * sg.data[i];
            assert!((lhs.data[i] - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn mass_invariant_per_telescopic_step() {
        let vg = VelocityGrid::covering(8.0, 0.5, 1).unwrap();
        let sg = SpatialGrid::build([0.0; 2], [1.0; 2], [8, 1], 1).unwrap();
        let shape = FieldShape::new(2, sg, vg);
        let params = MixtureParams::unit_frequencies(vec![1.0, 2.0], 1e-3).unwrap();
        let mut data = Vec::new();
        for p in 0..2 {
            for c in 0..8 {
                let n = 0.5 + 0.3 * ((c + p) as f64 * 0.9).sin().abs();
                let v = 0.2 * ((c * 3 + p) as f64).cos();
                data.extend(
                    discrete_maxwellian(n, [v, 0.0], 1.0, params.masses[p], &vg, true).unwrap(),
                );
            }
        }
        let field = DistributionField::from_data(shape, data).unwrap();
        let op = BgkOperator::new(params.clone(), BoundarySpec::periodic());
        let ladder = IntegratorLadder::telescopic(0.5e-3, 2e-3, 1, 0.02, 6).unwrap();
        let (mass0, _, _) = global_invariants(&field, &params);
        let stepped = tpfe_step(&field, &ladder, &op).unwrap();
        let (mass1, _, _) = global_invariants(&stepped, &params);
        for p in 0..2 {
            assert!(
                (mass1[p] - mass0[p]).abs() <= 1e-11 * mass0[p],
                "species {p} drift {:e}",
                mass1[p] - mass0[p]
            );
        }
    }

    #[test]
    fn run_simulation_zero_operator_and_landing() {
        let f = scalar_field([1.0, 2.0, 3.0]);
        let params = dummy_params();
        let options = RunOptions {
            t_begin: 0.0,
            t_end: 1.0,
            snapshot_cadence: 0.25,
            diagnostics_every: 1,
        };
        struct Recorder {
            times: Vec<f64>,
            diags: Vec<StepDiagnostics>,
        }
        impl SimulationSink for Recorder {
            fn on_diagnostics(&mut self, d: &StepDiagnostics) -> Result<()> {
                self.diags.push(d.clone());
                Ok(())
            }
            fn on_snapshot(&mut self, s: &Snapshot) -> Result<()> {
                self.times.push(s.time);
                Ok(())
            }
        }
        let mut sink = Recorder { times: Vec::new(), diags: Vec::new() };
        // dt = 0.3 does not divide 1.0: the last step is truncated
        let ladder = IntegratorLadder::direct(0.3).unwrap();
        let (final_field, stats) =
            run_simulation(&f, &ladder, &ZeroOp, &params, &options, &mut sink).unwrap();
        assert_eq!(final_field.data, f.data);
        assert_eq!(stats.outer_steps, 4);
        let t_final = sink.times.last().copied().unwrap();
        assert!((t_final - 1.0).abs() <= 1e-12);
        // diagnostics constant under the zero operator
        let m0 = sink.diags[0].species_mass[0];
        for d in &sink.diags {
            assert_eq!(d.species_mass[0], m0);
        }
    }

    #[test]
    fn blowup_carries_step_metadata() {
        struct ExplodingOp;
        impl RateOperator for ExplodingOp {
            fn rate(&self, field: &DistributionField) -> Result<DistributionField> {
                let mut out = field.clone();
                for v in out.data.iter_mut() {
                    *v = f64::NAN;
                }
                Ok(out)
            }
        }
        let f = scalar_field([1.0, 1.0, 1.0]);
        let params = dummy_params();
        let options = RunOptions {
            t_begin: 0.0,
            t_end: 1.0,
            snapshot_cadence: 0.5,
            diagnostics_every: 1,
        };
        let ladder = IntegratorLadder::direct(0.1).unwrap();
        match run_simulation(&f, &ladder, &ExplodingOp, &params, &options, &mut NullSink) {
            Err(Error::Blowup { step: 0, .. }) => {}
            other => panic!("expected blowup, got {other:?}"),
        }
    }

    #[test]
    fn homogeneous_two_species_relax_to_mixture_velocity() {
        let vg = VelocityGrid::covering(10.0, 0.25, 1).unwrap();
        let sg = SpatialGrid::build([0.0; 2], [1.0; 2], [1, 1], 1).unwrap();
        let shape = FieldShape::new(2, sg, vg);
        let params = MixtureParams::unit_frequencies(vec![1.0, 2.0], 1e-2).unwrap();
        let mut data = discrete_maxwellian(1.0, [0.5, 0.0], 1.5, 1.0, &vg, true).unwrap();
        data.extend(discrete_maxwellian(1.0, [-0.5, 0.0], 0.5, 2.0, &vg, true).unwrap());
        let field = DistributionField::from_data(shape, data).unwrap();
        let op = BgkOperator::new(params.clone(), BoundarySpec::periodic());
        let ladder = IntegratorLadder::direct(5e-4).unwrap();
        let options = RunOptions {
            t_begin: 0.0,
            t_end: 0.2,
            snapshot_cadence: 0.1,
            diagnostics_every: 50,
        };
        let (final_field, _) =
            run_simulation(&field, &ladder, &op, &params, &options, &mut NullSink).unwrap();
        let mom = species_moments(&final_field, &params).unwrap();
        // conserved mixture velocity: (rho1 v1 + rho2 v2)/(rho1 + rho2) = -1/6
        let v_mix = (1.0 * 0.5 + 2.0 * (-0.5)) / 3.0;
        assert!((mom.velocity[0][0] - v_mix).abs() < 1e-6);
        assert!((mom.velocity[1][0] - v_mix).abs() < 1e-6);
    }
}
