//! Parallel repetitions, reference selection and N sweeps.

use std::sync::Mutex;

use anyhow::{anyhow, Result};
use fpqmc_core::ensemble::CellMoments;
use fpqmc_core::scenario::{
    anisotropic_moments, average_fields, noise_floor, reference_config, reference_relax_const,
    reference_relax_mckean, run_repetition, run_uniform_demo, MomentField, Provenance, Quantity, RateConvention,
    ReferenceSolution, ScenarioConfig, ScenarioKind, N_QUANTITIES,
};
use fpqmc_core::stats::{averaged_rmse, rmse_field, ConvergenceRecord};
use rayon::prelude::*;

use crate::config::RunManifest;

/// Sample size for the initial stress of the anisotropic start.
pub const MCKEAN_REFERENCE_SAMPLES: usize = 1 << 22;
const MCKEAN_REFERENCE_SEED: u64 = 0xC0FFEE;

/// All repetitions of `config`, ordered by repetition index whatever the
/// worker count.
pub fn run_repetitions(config: &ScenarioConfig, workers: usize) -> Result<Vec<MomentField>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    pool.install(|| {
        (0..config.repetitions as u64)
            .into_par_iter()
            .map(|r| run_repetition(config, r).map_err(|e| anyhow!("{} repetition {r}: {e}", config.kind)))
            .collect()
    })
}

/// Initial moments of the anisotropic start at large N, computed once per
/// cut angle.
pub fn mckean_initial_moments(angle_deg: f64) -> Result<CellMoments> {
    static CACHE: Mutex<Vec<(u64, CellMoments)>> = Mutex::new(Vec::new());
    let key = angle_deg.to_bits();
    if let Some((_, m)) = CACHE.lock().unwrap().iter().find(|(k, _)| *k == key) {
        return Ok(*m);
    }
    let m = anisotropic_moments(angle_deg, MCKEAN_REFERENCE_SAMPLES, MCKEAN_REFERENCE_SEED)?;
    CACHE.lock().unwrap().push((key, m));
    Ok(m)
}

/// Analytic reference for the homogeneous scenarios.
pub fn analytic_reference(config: &ScenarioConfig, rate: RateConvention) -> Result<ReferenceSolution> {
    match config.kind {
        ScenarioKind::RelaxConst => Ok(reference_relax_const(config, rate)),
        ScenarioKind::RelaxMcKean => Ok(reference_relax_mckean(config, &mckean_initial_moments(config.cut_angle)?, rate)),
        other => Err(anyhow!("{other} has no analytic reference")),
    }
}

/// High-resolution pseudo-random reference and its noise floor per quantity.
pub fn build_reference(
    config: &ScenarioConfig,
    n_ref: usize,
    r_ref: usize,
    seed: u64,
    workers: usize,
) -> Result<(ReferenceSolution, [f64; N_QUANTITIES])> {
    let cfg = reference_config(config, n_ref, r_ref, seed)?;
    let runs = run_repetitions(&cfg, workers)?;
    let field = average_fields(&runs)?;
    let floor = noise_floor(&runs)?;
    Ok((ReferenceSolution { field, provenance: Provenance::HighResolution { n_ref, r_ref, seed } }, floor))
}

/// Averaged RMSE per quantity of a set of repetitions.
pub fn averaged_errors(runs: &[MomentField], reference: &MomentField) -> Result<[f64; N_QUANTITIES]> {
    if runs.iter().any(|r| !r.same_shape(reference)) {
        return Err(anyhow!("reference shape does not match the run (steps/cells)"));
    }
    let mut out = [0.0; N_QUANTITIES];
    for q in Quantity::ALL {
        let series: Vec<Vec<f64>> = runs.iter().map(|r| r.series(q)).collect();
        out[q.index()] = averaged_rmse(&rmse_field(&series, &reference.series(q)).rmse);
    }
    Ok(out)
}

/// Output of one sweep cell: strategy and N with their repetitions.
pub struct SweepRun {
    pub config: ScenarioConfig,
    pub runs: Vec<MomentField>,
    pub errors: [f64; N_QUANTITIES],
}

/// Every (strategy, N) of the manifest against `reference`. `visit` sees
/// each finished run before its repetitions are dropped.
pub fn sweep(
    manifest: &RunManifest,
    reference: &MomentField,
    mut visit: impl FnMut(&SweepRun) -> Result<()>,
) -> Result<Vec<ConvergenceRecord>> {
    let mut records = Vec::new();
    for &strategy in &manifest.strategies {
        let mut points: Vec<Vec<(usize, f64)>> = vec![Vec::new(); N_QUANTITIES];
        for &n in &manifest.particles {
            let config = ScenarioConfig { strategy, particles: n, ..manifest.config.clone() };
            let runs = run_repetitions(&config, manifest.workers)?;
            let errors = averaged_errors(&runs, reference)?;
            for (q, e) in errors.iter().enumerate() {
                points[q].push((n, *e));
            }
            visit(&SweepRun { config, runs, errors })?;
        }
        for (q, pts) in Quantity::ALL.iter().zip(points) {
            records.push(ConvergenceRecord::new(strategy.name().into(), q.name().into(), pts, manifest.fit_window));
        }
    }
    Ok(records)
}

/// Uniform-moment demo over the manifest's sweep.
pub fn uniform_demo(manifest: &RunManifest) -> Result<Vec<ConvergenceRecord>> {
    Ok(run_uniform_demo(&manifest.particles, manifest.config.repetitions, manifest.config.seed, manifest.fit_window)?)
}

/// Looks up the record for `(strategy, quantity)`.
pub fn find<'a>(records: &'a [ConvergenceRecord], strategy: &str, quantity: &str) -> Option<&'a ConvergenceRecord> {
    records.iter().find(|r| r.strategy == strategy && r.quantity == quantity)
}
