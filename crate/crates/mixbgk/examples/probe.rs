// scratch probe: disk-band mismatch measurement and Schur convergence
use mixbgk::grid::*;
use mixbgk::integrate::BgkOperator;
use mixbgk::moments::discrete_maxwellian;
use mixbgk::spectra::*;
use mixbgk::transport::BoundarySpec;
use num_complex::Complex64;

fn pfe_amp(z: Complex64, m: f64, k: u32) -> f64 {
    let a = Complex64::new(1.0, 0.0) + z;
    (a.powu(k) * (a + m * (a - 1.0))).norm()
}

fn main() {
    // 1. measure the band needed for disk-vs-amplification agreement
    for &m in &[50.0, 100.0] {
        for &k in &[1u32, 2, 6] {
            let disks = pfe_disks(m, k).unwrap();
            let mut worst = 0.0f64;
            let mut mism2 = 0;
            let n = 20;
            for i in 0..n {
                for j in 0..n {
                    let z = Complex64::new(
                        -1.6 + 1.8 * (i as f64 + 0.5) / n as f64,
                        -0.8 + 1.6 * (j as f64 + 0.5) / n as f64,
                    );
                    let in_disks = disks.iter().any(|d| d.contains(z));
                    let stable = pfe_amp(z, m, k) <= 1.0;
                    if in_disks != stable {
                        let rel = disks
                            .iter()
                            .map(|d| ((z - d.center()).norm() - d.radius).abs() / d.radius)
                            .fold(f64::INFINITY, f64::min);
                        worst = worst.max(rel);
                        if rel > 0.02 {
                            mism2 += 1;
                        }
                    }
                }
            }
            eprintln!(
                "M={m:5} K={k}: mismatches beyond 2% band: {mism2:3}, band needed: {worst:.3}"
            );
        }
    }

    // 2. Schur on the homogeneous BGK Jacobian, with matrix prescaling
    let vg = VelocityGrid::build(8.0, 40, 1).unwrap();
    let sg = SpatialGrid::build([0.0; 2], [1.0; 2], [1, 1], 1).unwrap();
    let shape = FieldShape::new(1, sg, vg);
    let params = MixtureParams::unit_frequencies(vec![1.0], 1e-2).unwrap();
    let data = discrete_maxwellian(1.0, [0.2, 0.0], 1.0, 1.0, &vg, true).unwrap();
    let base = DistributionField::from_data(shape, data).unwrap();
    let op = BgkOperator::new(params, BoundarySpec::periodic());
    let t0 = std::time::Instant::now();
    let jac = jacobian_fd(&op, &base, default_fd_step(&base)).unwrap();
    eprintln!("jacobian built in {:?}, max {}", t0.elapsed(), jac.amax());
    let t0 = std::time::Instant::now();
    match eigenvalues(&jac) {
        Ok(evs) => {
            let mut mags: Vec<f64> = evs.iter().map(|e| e.norm()).collect();
            mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
            eprintln!(
                "eigenvalues ok in {:?}; smallest 4: {:?}, largest: {:.3}",
                t0.elapsed(),
                &mags[..4],
                mags.last().unwrap()
            );
            let real_parts: Vec<f64> = evs.iter().map(|e| e.re).collect();
            let in_5pct = real_parts.iter().filter(|r| (*r + 100.0).abs() < 5.0).count();
            eprintln!("eigenvalues within 5% of -100: {in_5pct} / {}", evs.len());
        }
        Err(e) => eprintln!("eigenvalues FAILED in {:?}: {e}", t0.elapsed()),
    }
}
