//! Exact self-similar solution of the two-fluid Sod tube problem.
//!
//! Only the rarefaction-left / shock-right wave pattern is supported
//! (P_L >= P_C >= P_R); anything else raises a typed error instead of
//! silently producing a wrong profile. The two fluids remain unmixed and
//! separated by the contact discontinuity, so the mixture solution is the
//! single-gas solution with the density assigned to species 1 left of the
//! contact and species 2 right of it. Different adiabatic exponents per side
//! are supported; the exponent of an ideal monatomic gas is 1 + 2/D.
//!
//! Note the velocity jump across the right shock grows with P_C; writing the
//! Rankine-Hugoniot relation with the factor (1 - P_C/P_R) flips its sign and
//! leaves v_rare = v_shock without a root, so the (P_C/P_R - 1) form below is
//! the one consistent with the classic Sod values.

use crate::error::{Error, Result};
use std::io::Write;

/// Euler-variable state of one gas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasState {
    pub rho: f64,
    pub velocity: f64,
    pub pressure: f64,
    pub gamma: f64,
}

impl GasState {
    pub fn new(rho: f64, velocity: f64, pressure: f64, gamma: f64) -> Result<Self> {
        if !(rho > 0.0) || !(pressure > 0.0) {
            return Err(Error::invalid(format!(
                "gas state needs rho > 0 and P > 0, got rho = {rho}, P = {pressure}"
            )));
        }
        if !(gamma > 1.0) {
            return Err(Error::invalid(format!("adiabatic exponent must exceed 1, got {gamma}")));
        }
        Ok(GasState { rho, velocity, pressure, gamma })
    }

    #[inline]
    pub fn sound_speed(&self) -> f64 {
        (self.gamma * self.pressure / self.rho).sqrt()
    }
}

/// Adiabatic exponent of a monatomic ideal gas in D dimensions.
#[inline]
pub fn gamma_for_dimension(d: usize) -> f64 {
    1.0 + 2.0 / d as f64
}

/// Velocity behind the left rarefaction as a function of the contact
/// pressure, from the Riemann invariant constant across the fan.
pub fn v_rare(p_c: f64, left: &GasState) -> Result<f64> {
    if !(p_c > 0.0) || p_c > left.pressure {
        return Err(Error::invalid(format!(
            "rarefaction branch needs 0 < P_C <= P_L, got P_C = {p_c}, P_L = {}",
            left.pressure
        )));
    }
    let g = left.gamma;
    let c = left.sound_speed();
    Ok(left.velocity + 2.0 * c * (1.0 - (p_c / left.pressure).powf((g - 1.0) / (2.0 * g))) / (g - 1.0))
}

/// Velocity behind the right shock as a function of the contact pressure,
/// from the Rankine-Hugoniot conditions.
pub fn v_shock(p_c: f64, right: &GasState) -> Result<f64> {
    if p_c < right.pressure {
        return Err(Error::invalid(format!(
            "shock branch needs P_C >= P_R, got P_C = {p_c}, P_R = {}",
            right.pressure
        )));
    }
    let g = right.gamma;
    let c = right.sound_speed();
    let ratio = p_c / right.pressure;
    Ok(right.velocity
        + 2.0 * c * (ratio - 1.0) / (2.0 * g * (g - 1.0 + ratio * (g + 1.0))).sqrt())
}

/// Exact solution of the Riemann problem with a left rarefaction and a right
/// shock.
#[derive(Debug, Clone)]
pub struct RiemannSolution {
    pub left: GasState,
    pub right: GasState,
    pub contact_pressure: f64,
    pub contact_velocity: f64,
    pub density_contact_left: f64,
    pub density_contact_right: f64,
    pub shock_speed: f64,
    pub rarefaction_head: f64,
    pub rarefaction_tail: f64,
}

/// Finds the contact pressure by bisection of v_rare(P) = v_shock(P) on
/// [P_R, P_L] to a relative tolerance of 1e-12.
pub fn solve_contact(left: GasState, right: GasState) -> Result<RiemannSolution> {
    if left.pressure < right.pressure {
        return Err(Error::UnsupportedWavePattern(format!(
            "P_L = {} < P_R = {}; the rarefaction-left/shock-right pattern needs P_L >= P_R",
            left.pressure, right.pressure
        )));
    }
    let mismatch = |p: f64| -> Result<f64> { Ok(v_rare(p, &left)? - v_shock(p, &right)?) };

    let (mut lo, mut hi) = (right.pressure, left.pressure);
    let g_lo = mismatch(lo)?;
    let g_hi = mismatch(hi)?;
    let p_c = if g_lo == 0.0 {
        lo
    } else if g_hi == 0.0 {
        hi
    } else if g_lo > 0.0 && g_hi < 0.0 {
        // v_rare decreases and v_shock increases in P_C, so the mismatch is
        // strictly decreasing: plain bisection converges unconditionally.
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (hi - lo) <= 1e-12 * mid {
                break;
            }
            if mismatch(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    } else {
        return Err(Error::UnsupportedWavePattern(format!(
            "no contact pressure in [P_R, P_L] = [{lo}, {hi}] (mismatch {g_lo:e} .. {g_hi:e}); \
             the states do not produce a rarefaction-left/shock-right pattern"
        )));
    };

    let v_c = v_rare(p_c, &left)?;
    let gl = left.gamma;
    let gr = right.gamma;
    let rho_cl = left.rho * (p_c / left.pressure).powf(1.0 / gl);
    let pr = p_c / right.pressure;
    let rho_cr = right.rho * (pr + (gr - 1.0) / (gr + 1.0)) / (pr * (gr - 1.0) / (gr + 1.0) + 1.0);
    let shock_speed = if (right.rho - rho_cr).abs() <= 1e-14 * right.rho {
        // zero-strength shock: the wave collapses onto the contact
        v_c
    } else {
        (right.rho * right.velocity - rho_cr * v_c) / (right.rho - rho_cr)
    };
    let c_cl = (gl * p_c / rho_cl).sqrt();

    Ok(RiemannSolution {
        left,
        right,
        contact_pressure: p_c,
        contact_velocity: v_c,
        density_contact_left: rho_cl,
        density_contact_right: rho_cr,
        shock_speed,
        rarefaction_head: left.velocity - left.sound_speed(),
        rarefaction_tail: v_c - c_cl,
    })
}

/// Evaluates the self-similar solution at (x, t) for t > 0. Points left of
/// the contact report the left gas's adiabatic exponent, points right of it
/// the right gas's.
pub fn sample(solution: &RiemannSolution, x: f64, t: f64) -> Result<GasState> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!("sampling requires t > 0, got {t}")));
    }
    let xi = x / t;
    let s = solution;
    let gl = s.left.gamma;
    Ok(if xi <= s.rarefaction_head {
        s.left
    } else if xi < s.rarefaction_tail {
        let v = ((gl - 1.0) * s.left.velocity + 2.0 * (s.left.sound_speed() + xi)) / (gl + 1.0);
        let c = v - xi;
        let rho = (s.left.rho.powf(gl) * c * c / (gl * s.left.pressure)).powf(1.0 / (gl - 1.0));
        let pressure = rho.powf(gl) * s.left.pressure / s.left.rho.powf(gl);
        GasState { rho, velocity: v, pressure, gamma: gl }
    } else if xi <= s.contact_velocity {
        GasState {
            rho: s.density_contact_left,
            velocity: s.contact_velocity,
            pressure: s.contact_pressure,
            gamma: gl,
        }
    } else if xi <= s.shock_speed {
        GasState {
            rho: s.density_contact_right,
            velocity: s.contact_velocity,
            pressure: s.contact_pressure,
            gamma: s.right.gamma,
        }
    } else {
        s.right
    })
}

/// Per-species densities plus the shared velocity and pressure: species 1
/// carries the gas left of the contact, species 2 the gas right of it, with a
/// `delta` seed of the other species mirroring the kinetic initial data.
pub fn mixture_sample(
    solution: &RiemannSolution,
    x: f64,
    t: f64,
    delta: f64,
) -> Result<(f64, f64, f64, f64)> {
    let state = sample(solution, x, t)?;
    let xi = x / t;
    let (rho1, rho2) = if xi <= solution.contact_velocity {
        ((1.0 - delta) * state.rho, delta * state.rho)
    } else {
        (delta * state.rho, (1.0 - delta) * state.rho)
    };
    Ok((rho1, rho2, state.velocity, state.pressure))
}

/// Writes the sampled profile as CSV with columns x, rho1, rho2, v, P.
pub fn write_profile_csv<W: Write>(
    out: &mut W,
    solution: &RiemannSolution,
    xs: &[f64],
    t: f64,
    delta: f64,
) -> Result<()> {
    let fmt = |v: f64| format!("{v:.16e}");
    writeln!(out, "x,rho1,rho2,v,P").map_err(|e| Error::io("<writer>", e))?;
    for &x in xs {
        let (r1, r2, v, p) = mixture_sample(solution, x, t, delta)?;
        writeln!(out, "{},{},{},{},{}", fmt(x), fmt(r1), fmt(r2), fmt(v), fmt(p))
            .map_err(|e| Error::io("<writer>", e))?;
    }
    Ok(())
}
