//! Symbol-error-rate heatmap over the observation-angle grid for the
//! configuration extracted from a trained checkpoint.

use crate::error::{Error, Result};
use crate::gflownet::best_of_s;
use crate::harness::config::ScenarioConfig;
use crate::harness::csvio::{build_csv, cell};
use crate::nn::load_checkpoint;
use crate::rng::derive_seed;
use crate::signal::{Direction, ser_monte_carlo};
use rayon::prelude::*;
use std::path::Path;

/// Stream salt for best-of-S extraction seeds.
pub(crate) const SALT_BEST: u64 = 0xB357;
/// Stream salt for per-cell SER seeds.
const SALT_CELL: u64 = 0xCE11;
/// Cells with zero measured errors are clamped here before taking log10.
const LOG10_SER_FLOOR: f64 = 1e-9;

/// Evaluate the checkpoint's best-of-S configuration over a
/// `[-90, 90]` x `[-90, 90]` grid at `resolution_deg` spacing and return the
/// CSV (theta, phi, ser, log10_ser). Byte-deterministic per
/// (config, seed, checkpoint).
pub fn run_heatmap(
    cfg: &ScenarioConfig,
    checkpoint: &Path,
    resolution_deg: u32,
) -> Result<String> {
    if resolution_deg == 0 || 180 % resolution_deg != 0 {
        return Err(Error::Validation(format!(
            "heatmap resolution must divide 180, got {resolution_deg}"
        )));
    }
    let (net, meta) = load_checkpoint(checkpoint)?;
    let expected = cfg.fingerprint();
    if meta.fingerprint != expected {
        return Err(Error::FingerprintMismatch {
            expected,
            found: meta.fingerprint,
        });
    }
    let env = cfg.env();
    let best = best_of_s(&net, &env, cfg.best_of, derive_seed(cfg.seed, SALT_BEST, 0));
    let n_axis = (180 / resolution_deg + 1) as usize;
    let geom = cfg.geometry();
    let ofdm = cfg.ofdm();
    let cells: Vec<(f64, f64, f64)> = (0..n_axis * n_axis)
        .into_par_iter()
        .map(|idx| {
            let ti = idx / n_axis;
            let pi = idx % n_axis;
            let theta = -90.0 + (ti as u32 * resolution_deg) as f64;
            let phi = -90.0 + (pi as u32 * resolution_deg) as f64;
            let est = ser_monte_carlo(
                &best,
                &geom,
                &ofdm,
                Direction::new(theta, phi),
                cfg.ser_frames,
                derive_seed(cfg.seed, SALT_CELL, idx as u64),
            );
            (theta, phi, est.ser)
        })
        .collect();
    Ok(build_csv(
        &["theta", "phi", "ser", "log10_ser"],
        cells.into_iter().map(|(theta, phi, ser)| {
            vec![
                cell(theta),
                cell(phi),
                cell(ser),
                cell(ser.max(LOG10_SER_FLOOR).log10()),
            ]
        }),
    ))
}
