//! Spectrum estimation and stability-disk analysis for ladder parameters.
//!
//! The Jacobian of the semi-discrete operator is estimated by central finite
//! differences and its eigenvalues serve as the approximate spectrum. For
//! large extrapolation factors the stability region of projective forward
//! Euler tends to a union of disks in the dt0-scaled complex plane; ladders
//! are validated by testing every scaled eigenvalue for disk membership.

use crate::error::{Error, Result};
use crate::grid::DistributionField;
use crate::integrate::{IntegratorLadder, RateOperator};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::ops::Range;

/// Default cap on the dense-Jacobian state dimension.
pub const DEFAULT_DIMENSION_CAP: usize = 4096;

/// Relative magnitude below which an eigenvalue counts as a neutral
/// (conserved) mode rather than a dynamic one.
const KERNEL_RELATIVE_TOL: f64 = 1e-8;

/// Relative gap that separates two magnitude clusters.
const CLUSTER_GAP: f64 = 10.0;

/// Estimated spectrum with a slow-to-fast clustering by magnitude gaps.
#[derive(Debug, Clone)]
pub struct SpectrumEstimate {
    /// Eigenvalues sorted by ascending magnitude.
    pub eigenvalues: Vec<Complex64>,
    /// Index ranges into `eigenvalues`, ordered slow to fast. The first
    /// cluster holds near-kernel modes when any magnitude is below
    /// 1e-8 x max; the remaining splits occur at relative gaps above 10x.
    pub clusters: Vec<Range<usize>>,
    /// Human-readable description of the linearization state.
    pub state_descriptor: String,
}

impl SpectrumEstimate {
    pub fn from_eigenvalues(mut eigenvalues: Vec<Complex64>, state_descriptor: String) -> Self {
        eigenvalues.sort_by(|a, b| {
            (a.norm(), a.re, a.im)
                .partial_cmp(&(b.norm(), b.re, b.im))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let clusters = cluster_by_magnitude(&eigenvalues);
        SpectrumEstimate { eigenvalues, clusters, state_descriptor }
    }

    pub fn cluster_slice(&self, idx: usize) -> &[Complex64] {
        &self.eigenvalues[self.clusters[idx].clone()]
    }

    pub fn fast_cluster(&self) -> &[Complex64] {
        self.cluster_slice(self.clusters.len() - 1)
    }

    pub fn centroid(&self, idx: usize) -> Complex64 {
        let s = self.cluster_slice(idx);
        s.iter().sum::<Complex64>() / s.len() as f64
    }

    /// CSV dump of the eigenvalues with their cluster label (re, im, cluster).
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "re,im,cluster").map_err(|e| Error::io("<writer>", e))?;
        for (idx, range) in self.clusters.iter().enumerate() {
            for ev in &self.eigenvalues[range.clone()] {
                writeln!(out, "{:.16e},{:.16e},{idx}", ev.re, ev.im)
                    .map_err(|e| Error::io("<writer>", e))?;
            }
        }
        Ok(())
    }
}

fn cluster_by_magnitude(sorted: &[Complex64]) -> Vec<Range<usize>> {
    if sorted.is_empty() {
        return Vec::new();
    }
    let max_mag = sorted.last().map(|e| e.norm()).unwrap_or(0.0);
    if max_mag == 0.0 {
        return vec![0..sorted.len()];
    }
    let kernel_tol = KERNEL_RELATIVE_TOL * max_mag;
    let mut clusters = Vec::new();
    let mut start = 0usize;
    let kernel_end = sorted.partition_point(|e| e.norm() <= kernel_tol);
    if kernel_end > 0 {
        clusters.push(0..kernel_end);
        start = kernel_end;
    }
    let mut begin = start;
    for i in start..sorted.len().saturating_sub(1) {
        let a = sorted[i].norm();
        let b = sorted[i + 1].norm();
        if a > 0.0 && b > CLUSTER_GAP * a {
            clusters.push(begin..i + 1);
            begin = i + 1;
        }
    }
    if begin < sorted.len() {
        clusters.push(begin..sorted.len());
    }
    clusters
}

/// Default finite-difference step 1e-6 (1 + ||f||_inf).
pub fn default_fd_step(base: &DistributionField) -> f64 {
    1e-6 * (1.0 + base.max_abs())
}

/// Dense Jacobian of `op` at `base` by central differences with step `h`.
pub fn jacobian_fd(
    op: &dyn RateOperator,
    base: &DistributionField,
    h: f64,
) -> Result<DMatrix<f64>> {
    jacobian_fd_with_cap(op, base, h, DEFAULT_DIMENSION_CAP)
}

pub fn jacobian_fd_with_cap(
    op: &dyn RateOperator,
    base: &DistributionField,
    h: f64,
    cap: usize,
) -> Result<DMatrix<f64>> {
    let dim = base.shape.len();
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    if !(h > 0.0) {
        return Err(Error::invalid(format!("finite-difference step must be positive, got {h}")));
    }
    let columns: Vec<Vec<f64>> = (0..dim)
        .into_par_iter()
        .map(|k| -> Result<Vec<f64>> {
            let mut plus = base.clone();
            plus.data[k] += h;
            let mut minus = base.clone();
            minus.data[k] -= h;
            let fp = op.rate(&plus)?;
            let fm = op.rate(&minus)?;
            Ok(fp
                .data
                .iter()
                .zip(fm.data.iter())
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_fn(dim, dim, |r, c| columns[c][r]))
}

/// All eigenvalues of a dense real matrix.
///
/// Backed by faer's Hessenberg/QR eigensolver; the operator Jacobians here
/// carry eigenvalues of multiplicity in the hundreds, which nalgebra's Schur
/// iteration fails to deflate.
pub fn eigenvalues(matrix: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if matrix.nrows() != matrix.ncols() {
        return Err(Error::invalid(format!(
            "eigenvalues need a square matrix, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let n = matrix.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure("matrix contains non-finite entries".to_string()));
    }
    let a = faer::Mat::from_fn(n, n, |r, c| matrix[(r, c)]);
    a.eigenvalues()
        .map_err(|e| Error::EigenFailure(format!("eigensolver did not converge: {e:?} on a {n}x{n} matrix")))
}

/// Jacobian + eigenvalues + clustering in one call.
pub fn estimate_spectrum(
    op: &dyn RateOperator,
    base: &DistributionField,
    h: f64,
    state_descriptor: impl Into<String>,
) -> Result<SpectrumEstimate> {
    let jac = jacobian_fd(op, base, h)?;
    let evs = eigenvalues(&jac)?;
    Ok(SpectrumEstimate::from_eigenvalues(evs, state_descriptor.into()))
}

/// Disk D(center, radius) in the dt0-scaled eigenvalue plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityDisk {
    pub center_re: f64,
    pub center_im: f64,
    pub radius: f64,
}

impl StabilityDisk {
    pub fn new(center: Complex64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid(format!("disk radius must be positive, got {radius}")));
        }
        Ok(StabilityDisk { center_re: center.re, center_im: center.im, radius })
    }

    #[inline]
    pub fn center(&self) -> Complex64 {
        Complex64::new(self.center_re, self.center_im)
    }

    #[inline]
    pub fn contains(&self, z: Complex64) -> bool {
        (z - self.center()).norm() <= self.radius
    }

    /// Positive inside the disk, normalized by the radius.
    #[inline]
    pub fn relative_margin(&self, z: Complex64) -> f64 {
        (self.radius - (z - self.center()).norm()) / self.radius
    }

    /// Largest factor c such that c*z still lies in the disk, or None when
    /// the ray from the origin through z misses it. Upwind transport modes
    /// sit on circles through the origin, where the geometric distance to the
    /// slow disk boundary vanishes; scaling headroom along the ray stays
    /// uniform over such circles and is the meaningful safety measure.
    pub fn radial_headroom(&self, z: Complex64) -> Option<f64> {
        let zz = z.norm_sqr();
        if zz == 0.0 {
            return Some(f64::INFINITY);
        }
        let c = self.center();
        let zc = z.re * c.re + z.im * c.im;
        let disc = zc * zc - zz * (c.norm_sqr() - self.radius * self.radius);
        if disc < 0.0 {
            return None;
        }
        let root = (zc + disc.sqrt()) / zz;
        (root >= 0.0).then_some(root)
    }
}

/// Asymptotic stability disks of projective forward Euler:
/// D(-1, M^{-1/K}) and D(-1/M, 1/M).
pub fn pfe_disks(m: f64, k: u32) -> Result<[StabilityDisk; 2]> {
    if !(m > 1.0) || k < 1 {
        return Err(Error::invalid(format!(
            "asymptotic PFE disks need M > 1 and K >= 1, got M = {m}, K = {k}"
        )));
    }
    Ok([
        StabilityDisk::new(Complex64::new(-1.0, 0.0), m.powf(-1.0 / k as f64))?,
        StabilityDisk::new(Complex64::new(-1.0 / m, 0.0), 1.0 / m)?,
    ])
}

/// Asymptotic stability disks of the two-level telescopic method:
/// D(-1, M0^{-1/K0} M1^{-1/K1}), D(-1/M0, M0^{-1} M1^{-1/K1}),
/// D(-1/(M0 M1), 1/(M0 M1)).
pub fn tpfe_disks(m0: f64, k0: u32, m1: f64, k1: u32) -> Result<[StabilityDisk; 3]> {
    if !(m0 > 1.0) || !(m1 > 1.0) || k0 < 1 || k1 < 1 {
        return Err(Error::invalid(format!(
            "asymptotic TPFE disks need M0, M1 > 1 and K0, K1 >= 1, got M0 = {m0}, K0 = {k0}, M1 = {m1}, K1 = {k1}"
        )));
    }
    let r1 = m1.powf(-1.0 / k1 as f64);
    Ok([
        StabilityDisk::new(Complex64::new(-1.0, 0.0), m0.powf(-1.0 / k0 as f64) * r1)?,
        StabilityDisk::new(Complex64::new(-1.0 / m0, 0.0), r1 / m0)?,
        StabilityDisk::new(Complex64::new(-1.0 / (m0 * m1), 0.0), 1.0 / (m0 * m1))?,
    ])
}

/// Stability disks of a ladder in the dt0-scaled plane: the forward Euler
/// disk for a direct ladder, the PFE pair for one level, the TPFE triple for
/// two.
pub fn ladder_disks(ladder: &IntegratorLadder) -> Result<Vec<StabilityDisk>> {
    ladder.validate()?;
    match ladder.levels.len() {
        0 => Ok(vec![StabilityDisk::new(Complex64::new(-1.0, 0.0), 1.0)?]),
        1 => {
            let m = ladder.extrapolation_factor(0);
            Ok(pfe_disks(m, ladder.levels[0].k)?.to_vec())
        }
        _ => {
            let m0 = ladder.extrapolation_factor(0);
            let m1 = ladder.extrapolation_factor(1);
            Ok(tpfe_disks(m0, ladder.levels[0].k, m1, ladder.levels[1].k)?.to_vec())
        }
    }
}

/// Coverage of one spectral cluster by the disk union.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterCoverage {
    pub cluster: usize,
    pub total: usize,
    pub covered: usize,
}

/// Result of testing a spectrum against a ladder's stability disks.
#[derive(Debug, Clone, Serialize)]
pub struct LadderReport {
    pub dt0: f64,
    pub pass: bool,
    /// Smallest safety margin over the non-neutral eigenvalues. For covered
    /// eigenvalues this is the radial scaling headroom minus one (how much
    /// the eigenvalue magnitude may grow before leaving every disk); for
    /// uncovered ones it is the negative distance deficit to the nearest disk
    /// relative to its radius.
    pub worst_margin: f64,
    pub coverage: Vec<ClusterCoverage>,
    /// Unscaled offending eigenvalues as (re, im) pairs.
    pub offending: Vec<(f64, f64)>,
    pub disks: Vec<StabilityDisk>,
    pub state_descriptor: String,
}

impl LadderReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Scales every eigenvalue by dt0 and tests membership in the ladder's disk
/// union. Near-zero eigenvalues (conserved modes) always pass and are left
/// out of the margin, since the slow disk touches the origin by construction.
pub fn check_ladder(spectrum: &SpectrumEstimate, ladder: &IntegratorLadder) -> Result<LadderReport> {
    let disks = ladder_disks(ladder)?;
    check_with_disks(spectrum, ladder.dt0, &disks)
}

/// Disk-membership check against an explicit disk union (the ladder check
/// with the disks swapped in; also the hook for monotonicity tests).
pub fn check_with_disks(
    spectrum: &SpectrumEstimate,
    dt0: f64,
    disks: &[StabilityDisk],
) -> Result<LadderReport> {
    if !(dt0 > 0.0) {
        return Err(Error::invalid(format!("dt0 must be positive, got {dt0}")));
    }
    let max_scaled = spectrum.eigenvalues.iter().map(|e| (e * dt0).norm()).fold(0.0, f64::max);
    let neutral_tol = 1e-12 * max_scaled.max(1e-300);
    let mut coverage = Vec::new();
    let mut offending = Vec::new();
    let mut worst_margin = f64::INFINITY;
    let mut pass = true;
    for (idx, range) in spectrum.clusters.iter().enumerate() {
        let mut covered = 0usize;
        for ev in &spectrum.eigenvalues[range.clone()] {
            let z = ev * dt0;
            if z.norm() <= neutral_tol {
                covered += 1;
                continue;
            }
            let inside = disks.iter().any(|d| d.contains(z));
            let margin = if inside {
                disks
                    .iter()
                    .filter(|d| d.contains(z))
                    .filter_map(|d| d.radial_headroom(z))
                    .fold(f64::NEG_INFINITY, f64::max)
                    - 1.0
            } else {
                disks
                    .iter()
                    .map(|d| d.relative_margin(z))
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            if inside {
                covered += 1;
            } else {
                pass = false;
                offending.push((ev.re, ev.im));
            }
            worst_margin = worst_margin.min(margin);
        }
        coverage.push(ClusterCoverage { cluster: idx, total: range.len(), covered });
    }
    if worst_margin == f64::INFINITY {
        // only neutral modes: any ladder is fine
        worst_margin = 1.0;
    }
    Ok(LadderReport {
        dt0,
        pass,
        worst_margin,
        coverage,
        offending,
        disks: disks.to_vec(),
        state_descriptor: spectrum.state_descriptor.clone(),
    })
}

/// Margin demanded by the ladder search.
const SUGGEST_MARGIN: f64 = 0.05;
const SUGGEST_K_MAX: u32 = 32;

/// Proposes a ladder for a spectrum: dt0 maps the fast cluster near -1, the
/// smallest inner-step counts that pass `check_ladder` with a 5% margin win,
/// and the outer step is the caller-provided target (already capped by the
/// CFL bound upstream).
pub fn suggest_ladder(
    spectrum: &SpectrumEstimate,
    target_outer_dt: f64,
) -> Result<IntegratorLadder> {
    if !(target_outer_dt > 0.0) {
        return Err(Error::invalid("target outer step must be positive".to_string()));
    }
    if spectrum.clusters.is_empty() {
        return Err(Error::invalid("empty spectrum".to_string()));
    }
    let fast = spectrum.centroid(spectrum.clusters.len() - 1);
    if !(fast.re < 0.0) {
        return Err(Error::invalid(format!(
            "fast cluster centroid {fast} has no negative real part; nothing to project over"
        )));
    }
    let dt0 = -1.0 / fast.re;
    if target_outer_dt <= dt0 {
        // no stiffness to bridge: direct integration reaches the target
        return IntegratorLadder::direct(target_outer_dt);
    }

    let passes = |ladder: &IntegratorLadder| -> Option<(bool, Vec<(f64, f64)>)> {
        match check_ladder(spectrum, ladder) {
            Ok(report) => Some((report.pass && report.worst_margin >= SUGGEST_MARGIN, report.offending)),
            Err(_) => None,
        }
    };

    let mut last_offending: Vec<(f64, f64)> = Vec::new();

    // single level first
    for k0 in 1..=SUGGEST_K_MAX {
        if target_outer_dt < dt0 * (k0 as f64 + 1.0) {
            break;
        }
        if let Ok(ladder) = IntegratorLadder::projective(dt0, target_outer_dt, k0) {
            if ladder.extrapolation_factor(0) > 1.0 {
                if let Some((ok, offending)) = passes(&ladder) {
                    if ok {
                        return Ok(ladder);
                    }
                    last_offending = offending;
                }
            }
        }
    }

    // two levels: aim the middle disk at the middle cluster when one exists,
    // otherwise fall back to the dt1 = 4 dt0 pattern
    let mid_rate = if spectrum.clusters.len() >= 3 {
        let mid = spectrum.centroid(spectrum.clusters.len() - 2);
        (mid.re < 0.0).then_some(-mid.re)
    } else {
        None
    };
    for k_sum in 2..=(2 * SUGGEST_K_MAX) {
        for k0 in 1..k_sum.min(SUGGEST_K_MAX + 1) {
            let k1 = k_sum - k0;
            if !(1..=SUGGEST_K_MAX).contains(&k1) {
                continue;
            }
            let m0_target = match mid_rate {
                // middle cluster at -r: the middle disk center -1/M0 should
                // sit at dt0 * r
                Some(r) => (1.0 / (dt0 * r)).max(k0 as f64 + 2.0),
                None => (k0 as f64 + 1.0).max(2.0),
            };
            let dt1 = dt0 * (k0 as f64 + 1.0 + m0_target);
            if target_outer_dt < dt1 * (k1 as f64 + 1.0) {
                continue;
            }
            if let Ok(ladder) = IntegratorLadder::telescopic(dt0, dt1, k0, target_outer_dt, k1) {
                if ladder.extrapolation_factor(0) > 1.0 && ladder.extrapolation_factor(1) > 1.0 {
                    if let Some((ok, offending)) = passes(&ladder) {
                        if ok {
                            return Ok(ladder);
                        }
                        last_offending = offending;
                    }
                }
            }
        }
    }

    Err(Error::InfeasibleLadder {
        k_max: SUGGEST_K_MAX,
        blocking: last_offending
            .into_iter()
            .map(|(re, im)| Complex64::new(re, im))
            .collect(),
    })
}
