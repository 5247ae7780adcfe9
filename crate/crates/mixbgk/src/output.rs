//! File emitters: snapshot CSVs, raw binary state dumps, the run-directory
//! sink, and the plot-data join against the Riemann oracle.
//!
//! All floating-point values in CSVs are printed with 17 significant digits
//! so that re-parsing reproduces them bit-exactly. Raw dumps carry a single
//! text header line (a JSON shape record plus the ordering and endianness
//! contract) followed by the state in little-endian f64, flattened
//! species-major, then space, then velocity, row-major within each.

use crate::error::{Error, Result};
use crate::grid::{DistributionField, FieldShape, MixtureParams};
use crate::integrate::{SimulationSink, Snapshot, StepDiagnostics};
use crate::moments::{entropy, species_moments, total_moments};
use crate::riemann;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

#[inline]
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the per-cell moment table: cell coordinates, then per-species
/// n, mean velocity components, T, P, then the same block for the mixture
/// totals, then the entropy H.
pub fn write_moments_csv<W: Write>(
    out: &mut W,
    field: &DistributionField,
    params: &MixtureParams,
) -> Result<()> {
    let shape = &field.shape;
    let d_x = shape.space.dim;
    let d_v = shape.velocity.dim;
    let np = shape.n_species;
    let moments = species_moments(field, params)?;
    let totals = total_moments(field, &moments, params)?;
    let h = entropy(field)?;

    let mut header: Vec<String> = vec!["x".to_string()];
    if d_x == 2 {
        header.push("y".to_string());
    }
    for p in 1..=np {
        header.push(format!("n{p}"));
        header.push(format!("vx{p}"));
        if d_v == 2 {
            header.push(format!("vy{p}"));
        }
        header.push(format!("T{p}"));
        header.push(format!("P{p}"));
    }
    header.extend(["n", "vx"].map(String::from));
    if d_v == 2 {
        header.push("vy".to_string());
    }
    header.extend(["T", "P", "H"].map(String::from));
    writeln!(out, "{}", header.join(",")).map_err(|e| Error::io("<writer>", e))?;

    for cell in 0..shape.cell_count() {
        let mut row: Vec<String> = Vec::with_capacity(header.len());
        let xy = shape.space.cell_center(cell);
        row.push(fmt(xy[0]));
        if d_x == 2 {
            row.push(fmt(xy[1]));
        }
        for p in 0..np {
            let i = moments.idx(p, cell);
            row.push(fmt(moments.n[i]));
            row.push(fmt(moments.velocity[i][0]));
            if d_v == 2 {
                row.push(fmt(moments.velocity[i][1]));
            }
            row.push(fmt(moments.temperature[i]));
            row.push(fmt(moments.pressure[i]));
        }
        row.push(fmt(totals.n[cell]));
        row.push(fmt(totals.velocity[cell][0]));
        if d_v == 2 {
            row.push(fmt(totals.velocity[cell][1]));
        }
        row.push(fmt(totals.temperature[cell]));
        row.push(fmt(totals.pressure[cell]));
        row.push(fmt(h[cell]));
        writeln!(out, "{}", row.join(",")).map_err(|e| Error::io("<writer>", e))?;
    }
    Ok(())
}

const RAW_MAGIC: &str = "mixbgk-raw-v1";

/// Writes the state as a raw dump: one text header line with the shape and
/// the ordering/endianness contract, then 64-bit little-endian floats in
/// flatten order.
pub fn write_raw_dump(path: &Path, field: &DistributionField) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = BufWriter::new(file);
    let shape_json = serde_json::to_string(&field.shape).expect("shape serialization cannot fail");
    writeln!(
        out,
        "{RAW_MAGIC} order=species,space,velocity;row-major float=f64 endian=le shape={shape_json}"
    )
    .map_err(|e| Error::io(path.display().to_string(), e))?;
    for v in &field.data {
        out.write_all(&v.to_le_bytes())
            .map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    out.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

/// Reads a raw dump back; the inverse of `write_raw_dump`, bit-exact.
pub fn read_raw_dump(path: &Path) -> Result<DistributionField> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut reader = BufReader::new(file);
    let mut header = String::new();
    reader
        .read_line(&mut header)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let header = header.trim_end();
    if !header.starts_with(RAW_MAGIC) {
        return Err(Error::invalid(format!(
            "{} is not a raw state dump (missing {RAW_MAGIC} header)",
            path.display()
        )));
    }
    let shape_json = header
        .split_once("shape=")
        .map(|(_, s)| s)
        .ok_or_else(|| Error::invalid("raw dump header lacks the shape record".to_string()))?;
    let shape: FieldShape =
        serde_json::from_str(shape_json).map_err(|e| Error::invalid(format!("bad shape record: {e}")))?;
    let mut bytes = Vec::new();
    reader
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    if bytes.len() != shape.len() * 8 {
        return Err(Error::invalid(format!(
            "raw dump holds {} bytes, shape needs {}",
            bytes.len(),
            shape.len() * 8
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DistributionField::from_data(shape, data)
}

/// Simulation sink that writes a run directory: resolved config, a
/// diagnostics CSV (one row per outer step), an index of snapshots, the
/// per-snapshot moment CSVs, and optional raw state dumps.
pub struct RunDirSink {
    dir: PathBuf,
    params: MixtureParams,
    raw_dumps: bool,
    diagnostics: BufWriter<File>,
    index: BufWriter<File>,
    wrote_diag_header: bool,
}

impl RunDirSink {
    pub fn create(
        dir: &Path,
        params: MixtureParams,
        raw_dumps: bool,
        resolved_config_toml: &str,
    ) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        let config_path = dir.join("config.resolved.toml");
        std::fs::write(&config_path, resolved_config_toml)
            .map_err(|e| Error::io(config_path.display().to_string(), e))?;
        let diag_path = dir.join("diagnostics.csv");
        let diagnostics = BufWriter::new(
            File::create(&diag_path).map_err(|e| Error::io(diag_path.display().to_string(), e))?,
        );
        let index_path = dir.join("snapshots.csv");
        let mut index = BufWriter::new(
            File::create(&index_path).map_err(|e| Error::io(index_path.display().to_string(), e))?,
        );
        writeln!(index, "index,step,time,moments,raw")
            .map_err(|e| Error::io(index_path.display().to_string(), e))?;
        Ok(RunDirSink {
            dir: dir.to_path_buf(),
            params,
            raw_dumps,
            diagnostics,
            index,
            wrote_diag_header: false,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Flushes buffered writers (called automatically on drop as well).
    pub fn finish(&mut self) -> Result<()> {
        self.diagnostics.flush().map_err(|e| Error::io("diagnostics.csv", e))?;
        self.index.flush().map_err(|e| Error::io("snapshots.csv", e))?;
        Ok(())
    }
}

impl SimulationSink for RunDirSink {
    fn on_diagnostics(&mut self, d: &StepDiagnostics) -> Result<()> {
        if !self.wrote_diag_header {
            let masses: Vec<String> =
                (1..=d.species_mass.len()).map(|p| format!("mass{p}")).collect();
            writeln!(
                self.diagnostics,
                "step,time,{},momentum_x,momentum_y,energy,entropy,min_f,wall_seconds",
                masses.join(",")
            )
            .map_err(|e| Error::io("diagnostics.csv", e))?;
            self.wrote_diag_header = true;
        }
        let masses: Vec<String> = d.species_mass.iter().map(|&m| fmt(m)).collect();
        writeln!(
            self.diagnostics,
            "{},{},{},{},{},{},{},{},{}",
            d.step,
            fmt(d.time),
            masses.join(","),
            fmt(d.momentum[0]),
            fmt(d.momentum[1]),
            fmt(d.energy),
            fmt(d.entropy_total),
            fmt(d.min_f),
            fmt(d.wall_seconds)
        )
        .map_err(|e| Error::io("diagnostics.csv", e))
    }

    fn on_snapshot(&mut self, s: &Snapshot) -> Result<()> {
        let moments_name = format!("moments_{:05}.csv", s.index);
        let path = self.dir.join(&moments_name);
        let mut out = BufWriter::new(
            File::create(&path).map_err(|e| Error::io(path.display().to_string(), e))?,
        );
        write_moments_csv(&mut out, s.field, &self.params)?;
        out.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
        let raw_name = if self.raw_dumps {
            let raw_name = format!("raw_{:05}.bin", s.index);
            write_raw_dump(&self.dir.join(&raw_name), s.field)?;
            raw_name
        } else {
            String::new()
        };
        writeln!(self.index, "{},{},{},{moments_name},{raw_name}", s.index, s.step, fmt(s.time))
            .map_err(|e| Error::io("snapshots.csv", e))?;
        self.index.flush().map_err(|e| Error::io("snapshots.csv", e))?;
        Ok(())
    }
}

impl Drop for RunDirSink {
    fn drop(&mut self) {
        let _ = self.finish();
    }
}

/// A parsed snapshot index row.
#[derive(Debug, Clone)]
pub struct SnapshotEntry {
    pub index: usize,
    pub step: usize,
    pub time: f64,
    pub moments_file: String,
    pub raw_file: Option<String>,
}

/// Reads the snapshot index of a run directory.
pub fn read_snapshot_index(run_dir: &Path) -> Result<Vec<SnapshotEntry>> {
    let path = run_dir.join("snapshots.csv");
    let text =
        std::fs::read_to_string(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut entries = Vec::new();
    for line in text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() < 4 {
            return Err(Error::invalid(format!("malformed snapshot index row: {line}")));
        }
        entries.push(SnapshotEntry {
            index: parts[0].parse().map_err(|_| Error::invalid("bad snapshot index".to_string()))?,
            step: parts[1].parse().map_err(|_| Error::invalid("bad snapshot step".to_string()))?,
            time: parts[2].parse().map_err(|_| Error::invalid("bad snapshot time".to_string()))?,
            moments_file: parts[3].to_string(),
            raw_file: parts.get(4).filter(|s| !s.is_empty()).map(|s| s.to_string()),
        });
    }
    Ok(entries)
}

/// Plot-ready join of a Sod run's final snapshot with the exact Riemann
/// solution: columns x, rho, v, T, P from the run and rho_exact, v_exact,
/// T_exact, P_exact from the oracle.
pub fn plot_data(run_dir: &Path) -> Result<String> {
    use crate::config::{ScenarioConfig, ScenarioKind};

    let config_path = run_dir.join("config.resolved.toml");
    let config = ScenarioConfig::from_path(&config_path)?;
    if config.scenario != ScenarioKind::Sod {
        return Err(Error::invalid(format!(
            "plot-data joins against the Riemann oracle and needs a sod run, got {}",
            config.scenario.name()
        )));
    }
    let sod = config.sod.clone().unwrap_or_default();
    let entries = read_snapshot_index(run_dir)?;
    let last = entries
        .last()
        .ok_or_else(|| Error::invalid("run directory holds no snapshots".to_string()))?;
    if !(last.time > 0.0) {
        return Err(Error::invalid("final snapshot is at t <= 0; nothing to compare".to_string()));
    }

    let moments_path = run_dir.join(&last.moments_file);
    let text = std::fs::read_to_string(&moments_path)
        .map_err(|e| Error::io(moments_path.display().to_string(), e))?;
    let mut lines = text.lines();
    let header: Vec<&str> =
        lines.next().ok_or_else(|| Error::invalid("empty moments file".to_string()))?.split(',').collect();
    let col = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| Error::invalid(format!("moments file lacks column {name}")))
    };
    let (cx, cn1, cn2, cv, ct, cp) =
        (col("x")?, col("n1")?, col("n2")?, col("vx")?, col("T")?, col("P")?);

    let gamma = riemann::gamma_for_dimension(1);
    let left = riemann::GasState::new(sod.left.rho, sod.left.v, sod.left.p, gamma)?;
    let right = riemann::GasState::new(sod.right.rho, sod.right.v, sod.right.p, gamma)?;
    let solution = riemann::solve_contact(left, right)?;
    let masses = &config.physical.masses;

    let mut out = String::from("x,rho,v,T,P,rho_exact,v_exact,T_exact,P_exact\n");
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let get = |i: usize| -> Result<f64> {
            fields
                .get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::invalid(format!("malformed moments row: {line}")))
        };
        let x = get(cx)?;
        let rho = masses[0] * get(cn1)? + masses[1] * get(cn2)?;
        let (r1, r2, v_ex, p_ex) =
            riemann::mixture_sample(&solution, x - sod.interface, last.time, 0.0)?;
        let n_ex = r1 / masses[0] + r2 / masses[1];
        let t_ex = p_ex / n_ex;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            fmt(x),
            fmt(rho),
            fmt(get(cv)?),
            fmt(get(ct)?),
            fmt(get(cp)?),
            fmt(r1 + r2),
            fmt(v_ex),
            fmt(t_ex),
            fmt(p_ex)
        ));
    }
    Ok(out)
}
