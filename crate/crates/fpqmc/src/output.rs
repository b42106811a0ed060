//! File formats: reference files with a JSON metadata line, and the
//! trajectory, convergence and slope CSVs.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fpqmc_core::scenario::{MomentField, Provenance, Quantity, ReferenceSolution, ScenarioConfig, N_QUANTITIES};
use fpqmc_core::stats::ConvergenceRecord;
use serde::{Deserialize, Serialize};

use crate::config::{config_hash, config_text};

pub const REFERENCE_FORMAT: &str = "fpqmc-reference";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMeta {
    pub format: String,
    pub version: u32,
    pub scenario: String,
    /// Hash of the configuration the reference was simulated with.
    pub config_hash: String,
    pub n_ref: usize,
    pub r_ref: usize,
    pub seed: u64,
    pub steps: usize,
    pub cells: usize,
    /// Standard error of the reference mean per quantity, averaged.
    pub noise_floor: Vec<(String, f64)>,
    pub config: String,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

/// `reference_cfg` is the configuration the reference runs used.
pub fn write_reference(
    path: &Path,
    reference_cfg: &ScenarioConfig,
    reference: &ReferenceSolution,
    floor: &[f64; N_QUANTITIES],
) -> Result<()> {
    let Provenance::HighResolution { n_ref, r_ref, seed } = reference.provenance else {
        bail!("only simulated references are persisted");
    };
    let meta = ReferenceMeta {
        format: REFERENCE_FORMAT.into(),
        version: 1,
        scenario: reference_cfg.kind.name().into(),
        config_hash: config_hash(reference_cfg),
        n_ref,
        r_ref,
        seed,
        steps: reference.field.n_steps,
        cells: reference.field.n_cells,
        noise_floor: Quantity::ALL.iter().map(|q| (q.name().into(), floor[q.index()])).collect(),
        config: config_text(reference_cfg),
    };
    let mut w = create(path)?;
    writeln!(w, "# {}", serde_json::to_string(&meta)?)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["step", "cell", "quantity", "value"])?;
    write_field_rows(&mut csv, &reference.field, None)?;
    csv.flush()?;
    Ok(())
}

fn write_field_rows<W: Write>(csv: &mut csv::Writer<W>, field: &MomentField, repetition: Option<usize>) -> Result<()> {
    for s in 0..field.n_steps {
        for j in 0..field.n_cells {
            for q in Quantity::ALL {
                let (step, cell, value) = ((s + 1).to_string(), j.to_string(), field.get(s, j, q).to_string());
                match repetition {
                    Some(r) => csv.write_record([&step, &cell, q.name(), &r.to_string(), &value])?,
                    None => csv.write_record([&step, &cell, q.name(), &value])?,
                }
            }
        }
    }
    Ok(())
}

/// Loads a reference and checks it was built from `expected_cfg`.
pub fn read_reference(path: &Path, expected_cfg: &ScenarioConfig) -> Result<(ReferenceMeta, ReferenceSolution)> {
    let file = File::open(path).with_context(|| {
        format!(
            "no reference at {}; build it first with `fpqmc reference --scenario {}`",
            path.display(),
            expected_cfg.kind
        )
    })?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let json = first.strip_prefix("# ").context("reference file lacks its metadata line")?;
    let meta: ReferenceMeta = serde_json::from_str(json.trim()).context("malformed reference metadata")?;
    if meta.format != REFERENCE_FORMAT {
        bail!("{} is not a reference file", path.display());
    }
    let expected = config_hash(expected_cfg);
    if meta.config_hash != expected {
        bail!(
            "stale reference {}: built for config {} but this run needs {}; rebuild with `fpqmc reference`",
            path.display(),
            meta.config_hash,
            expected
        );
    }
    let mut field = MomentField::new(meta.steps, meta.cells);
    let mut seen = 0usize;
    for row in csv::Reader::from_reader(reader).records() {
        let row = row?;
        let step: usize = row[0].parse()?;
        let cell: usize = row[1].parse()?;
        let q: Quantity = row[2].parse().map_err(anyhow::Error::msg)?;
        if step == 0 || step > meta.steps || cell >= meta.cells {
            bail!("reference row out of range: {row:?}");
        }
        let idx = ((step - 1) * meta.cells + cell) * N_QUANTITIES + q.index();
        field.values[idx] = row[3].parse()?;
        seen += 1;
    }
    if seen != field.values.len() {
        bail!("reference {} has {seen} values, expected {}", path.display(), field.values.len());
    }
    let provenance = Provenance::HighResolution { n_ref: meta.n_ref, r_ref: meta.r_ref, seed: meta.seed };
    Ok((meta, ReferenceSolution { field, provenance }))
}

pub fn trajectory_path(out: &Path, cfg: &ScenarioConfig) -> PathBuf {
    out.join("trajectories").join(format!("{}_{}_N{}.csv", cfg.kind, cfg.strategy, cfg.particles))
}

pub fn convergence_path(out: &Path, scenario: &str) -> PathBuf {
    out.join(format!("convergence_{scenario}.csv"))
}

pub fn slopes_path(out: &Path, scenario: &str) -> PathBuf {
    out.join(format!("slopes_{scenario}.csv"))
}

/// Rows `step, cell, quantity, repetition, value`.
pub fn write_trajectories(path: &Path, header: &str, runs: &[MomentField]) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(header.as_bytes())?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["step", "cell", "quantity", "repetition", "value"])?;
    for (r, field) in runs.iter().enumerate() {
        write_field_rows(&mut csv, field, Some(r))?;
    }
    csv.flush()?;
    Ok(())
}

/// Rows `strategy, quantity, N, averaged_rmse`.
pub fn write_convergence(path: &Path, header: &str, records: &[ConvergenceRecord]) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(header.as_bytes())?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["strategy", "quantity", "N", "averaged_rmse"])?;
    for r in records {
        for (n, e) in &r.points {
            csv.write_record([&r.strategy, &r.quantity, &n.to_string(), &e.to_string()])?;
        }
    }
    csv.flush()?;
    Ok(())
}

/// The slope column holds a number, `exact` or `nan` (too few points).
pub fn slope_label(record: &ConvergenceRecord) -> String {
    if record.is_exact() {
        "exact".into()
    } else {
        record.slope().map_or_else(|_| "nan".into(), |s| format!("{s:.4}"))
    }
}

/// Rows `strategy, quantity, slope, fit_window, n_min, n_max`.
pub fn write_slopes(path: &Path, header: &str, records: &[ConvergenceRecord]) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(header.as_bytes())?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["strategy", "quantity", "slope", "fit_window", "n_min", "n_max"])?;
    for r in records {
        let (lo, hi) = r.fit_range().unwrap_or((0, 0));
        csv.write_record([&r.strategy, &r.quantity, &slope_label(r), r.window.name(), &lo.to_string(), &hi.to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct SlopeRow {
    pub strategy: String,
    pub quantity: String,
    pub slope: String,
    pub fit_window: String,
    pub n_min: usize,
    pub n_max: usize,
}

pub fn read_slopes(path: &Path) -> Result<Vec<SlopeRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(reader.deserialize().collect::<Result<Vec<SlopeRow>, _>>()?)
}

/// Strategy × quantity matrix of slopes, one row per strategy in file order.
pub fn render_table(rows: &[SlopeRow], quantities: &[&str]) -> String {
    let mut strategies: Vec<&str> = Vec::new();
    for r in rows {
        if !strategies.contains(&r.strategy.as_str()) {
            strategies.push(&r.strategy);
        }
    }
    let mut out = format!("{:<20}", "strategy");
    for q in quantities {
        out.push_str(&format!("{q:>10}"));
    }
    out.push('\n');
    for s in strategies {
        out.push_str(&format!("{s:<20}"));
        for q in quantities {
            let cell = rows
                .iter()
                .find(|r| r.strategy == s && r.quantity == *q)
                .map_or("-", |r| if r.slope == "exact" { "0" } else { r.slope.as_str() });
            let cell = cell.parse::<f64>().map_or(cell.to_string(), |v| format!("{v:.2}"));
            out.push_str(&format!("{cell:>10}"));
        }
        out.push('\n');
    }
    out
}
