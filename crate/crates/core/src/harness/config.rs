//! Flat key/value scenario configuration: strict parsing with positioned
//! diagnostics, paper-default and desk-scale presets, and a canonical save
//! format that round-trips exactly.

use crate::error::{Error, Result};
use crate::gflownet::{TaskEnv, TrainSchedule};
use crate::mdp::DiscretizationGrid;
use crate::meta::{MetaConfig, TaskRegion};
use crate::signal::{Direction, OfdmSpec, SinrMode, SystemGeometry};
use std::f64::consts::PI;
use std::path::Path;

/// Fully resolved scenario: geometry, link, discretization, training
/// schedules and evaluation knobs. Every field has a default equal to the
/// published experiment's value; the desk preset shrinks the instance to
/// laptop scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub m_x: usize,
    pub m_z: usize,
    pub n_tx: usize,
    pub k_sub: usize,
    pub mod_order: usize,
    /// Phase-constraint threshold, radians.
    pub xi: f64,
    pub snr_db: f64,
    pub q_levels: usize,
    pub tx_theta: f64,
    pub tx_phi: f64,
    pub cu_theta: f64,
    pub cu_phi: f64,
    pub eve_theta: f64,
    pub eve_phi: f64,
    pub region_theta: f64,
    pub region_phi: f64,
    pub region_radius: f64,
    pub path_to_theta: f64,
    pub path_to_phi: f64,
    pub path_waypoints: usize,
    pub path_curvature: f64,
    pub hidden: Vec<usize>,
    /// Single-task schedule as (trajectories, learning rate) segments.
    pub train_segments: Vec<(usize, f64)>,
    pub retrain_lr: f64,
    pub alpha: f64,
    pub beta: f64,
    pub k_sup: usize,
    pub k_qry: usize,
    pub task_batch: usize,
    pub meta_iters: usize,
    pub meta_eval_samples: usize,
    pub meta_telemetry_every: usize,
    /// Periodic meta-training checkpoint cadence in meta-iterations
    /// (0 = final checkpoint only).
    pub checkpoint_every: usize,
    pub early_stop: bool,
    pub second_order: bool,
    /// Terminal configurations sampled when extracting one deployment
    /// configuration from the stochastic policy (best by actual reward).
    pub best_of: usize,
    pub ser_frames: usize,
    pub heatmap_resolution: u32,
    pub r_floor: f64,
    pub enum_cap: u64,
    pub telemetry_every: usize,
    pub oracle_samples: usize,
    pub sinr_mode: SinrMode,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl ScenarioConfig {
    /// Published experiment parameters: 6x6 panel, 8 transmit antennas,
    /// 16 QPSK subcarriers at 0 dB, Q = 8 levels, 9e5-trajectory single-task
    /// schedule and 1e6 meta-iterations with 100/800 support/query sets.
    pub fn paper() -> Self {
        Self {
            seed: 0,
            m_x: 6,
            m_z: 6,
            n_tx: 8,
            k_sub: 16,
            mod_order: 4,
            xi: PI / 4.0,
            snr_db: 0.0,
            q_levels: 8,
            tx_theta: 15.0,
            tx_phi: 10.0,
            cu_theta: 40.0,
            cu_phi: 30.0,
            eve_theta: -20.0,
            eve_phi: -20.0,
            region_theta: 40.0,
            region_phi: 30.0,
            region_radius: 10.0,
            path_to_theta: 20.0,
            path_to_phi: 10.0,
            path_waypoints: 30,
            path_curvature: 5.0,
            hidden: vec![256, 256, 256],
            train_segments: vec![(700_000, 1e-2), (200_000, 1e-3)],
            retrain_lr: 1e-2,
            alpha: 1e-2,
            beta: 1e-3,
            k_sup: 100,
            k_qry: 800,
            task_batch: 10,
            meta_iters: 1_000_000,
            meta_eval_samples: 8,
            meta_telemetry_every: 10,
            checkpoint_every: 0,
            early_stop: false,
            second_order: false,
            best_of: 64,
            ser_frames: 20_000,
            heatmap_resolution: 1,
            r_floor: 1e-6,
            enum_cap: 1_000_000,
            telemetry_every: 1000,
            oracle_samples: 100_000,
            sinr_mode: SinrMode::Corrected,
        }
    }

    /// Laptop-scale preset: 3x3 panel, Q = 4, K = 8, a 2e5-trajectory
    /// single-task budget and 2e4 meta-iterations with batches of 4.
    pub fn desk() -> Self {
        Self {
            m_x: 3,
            m_z: 3,
            k_sub: 8,
            q_levels: 4,
            hidden: vec![48, 48],
            train_segments: vec![(140_000, 1e-2), (60_000, 1e-3)],
            k_sup: 8,
            k_qry: 24,
            task_batch: 4,
            meta_iters: 20_000,
            ser_frames: 2_000,
            heatmap_resolution: 5,
            ..Self::paper()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper" => Ok(Self::paper()),
            "desk" => Ok(Self::desk()),
            other => Err(Error::Validation(format!(
                "unknown preset '{other}' (expected 'paper' or 'desk')"
            ))),
        }
    }

    /// Parse a config file over this base. Unknown keys and malformed values
    /// are rejected with their line number; missing keys keep the base value.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_str(&text, &path.display().to_string())
    }

    /// See [`ScenarioConfig::apply_file`]; `label` names the source in
    /// diagnostics.
    pub fn apply_str(&mut self, text: &str, label: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Config {
                path: label.to_string(),
                line: idx + 1,
                msg,
            };
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(format!("expected 'key = value', got '{line}'")));
            };
            self.set_key(key.trim(), value.trim()).map_err(err)?;
        }
        self.validate()
    }

    fn set_key(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
            value
                .parse::<T>()
                .map_err(|_| format!("invalid value '{value}' for {key}"))
        }
        fn flag(key: &str, value: &str) -> std::result::Result<bool, String> {
            match value {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(format!("invalid value '{value}' for {key} (true/false)")),
            }
        }
        match key {
            "seed" => self.seed = num(key, value)?,
            "m_x" => self.m_x = num(key, value)?,
            "m_z" => self.m_z = num(key, value)?,
            "n_tx" => self.n_tx = num(key, value)?,
            "k_sub" => self.k_sub = num(key, value)?,
            "mod_order" => self.mod_order = num(key, value)?,
            "xi" => self.xi = num(key, value)?,
            "snr_db" => self.snr_db = num(key, value)?,
            "q_levels" => self.q_levels = num(key, value)?,
            "tx_theta" => self.tx_theta = num(key, value)?,
            "tx_phi" => self.tx_phi = num(key, value)?,
            "cu_theta" => self.cu_theta = num(key, value)?,
            "cu_phi" => self.cu_phi = num(key, value)?,
            "eve_theta" => self.eve_theta = num(key, value)?,
            "eve_phi" => self.eve_phi = num(key, value)?,
            "region_theta" => self.region_theta = num(key, value)?,
            "region_phi" => self.region_phi = num(key, value)?,
            "region_radius" => self.region_radius = num(key, value)?,
            "path_to_theta" => self.path_to_theta = num(key, value)?,
            "path_to_phi" => self.path_to_phi = num(key, value)?,
            "path_waypoints" => self.path_waypoints = num(key, value)?,
            "path_curvature" => self.path_curvature = num(key, value)?,
            "hidden" => {
                self.hidden = value
                    .split(',')
                    .map(|s| num::<usize>(key, s.trim()))
                    .collect::<std::result::Result<_, _>>()?;
            }
            "train_segments" => {
                self.train_segments = value
                    .split(',')
                    .map(|seg| {
                        let (n, lr) = seg
                            .trim()
                            .split_once(':')
                            .ok_or_else(|| format!("segment '{seg}' is not 'count:rate'"))?;
                        Ok((num::<usize>(key, n.trim())?, num::<f64>(key, lr.trim())?))
                    })
                    .collect::<std::result::Result<_, String>>()?;
            }
            "retrain_lr" => self.retrain_lr = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "beta" => self.beta = num(key, value)?,
            "k_sup" => self.k_sup = num(key, value)?,
            "k_qry" => self.k_qry = num(key, value)?,
            "task_batch" => self.task_batch = num(key, value)?,
            "meta_iters" => self.meta_iters = num(key, value)?,
            "meta_eval_samples" => self.meta_eval_samples = num(key, value)?,
            "meta_telemetry_every" => self.meta_telemetry_every = num(key, value)?,
            "checkpoint_every" => self.checkpoint_every = num(key, value)?,
            "early_stop" => self.early_stop = flag(key, value)?,
            "second_order" => self.second_order = flag(key, value)?,
            "best_of" => self.best_of = num(key, value)?,
            "ser_frames" => self.ser_frames = num(key, value)?,
            "heatmap_resolution" => self.heatmap_resolution = num(key, value)?,
            "r_floor" => self.r_floor = num(key, value)?,
            "enum_cap" => self.enum_cap = num(key, value)?,
            "telemetry_every" => self.telemetry_every = num(key, value)?,
            "oracle_samples" => self.oracle_samples = num(key, value)?,
            "sinr_mode" => {
                self.sinr_mode = match value {
                    "corrected" => SinrMode::Corrected,
                    "literal" => SinrMode::Literal,
                    _ => {
                        return Err(format!(
                            "invalid value '{value}' for sinr_mode (corrected/literal)"
                        ));
                    }
                }
            }
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Canonical text form: every key explicit, fixed order. Parsing this
    /// over any base reproduces the config exactly.
    pub fn save_string(&self) -> String {
        let segments = self
            .train_segments
            .iter()
            .map(|(n, lr)| format!("{n}:{lr}"))
            .collect::<Vec<_>>()
            .join(",");
        let hidden = self
            .hidden
            .iter()
            .map(|h| h.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("seed", self.seed.to_string());
        kv("m_x", self.m_x.to_string());
        kv("m_z", self.m_z.to_string());
        kv("n_tx", self.n_tx.to_string());
        kv("k_sub", self.k_sub.to_string());
        kv("mod_order", self.mod_order.to_string());
        kv("xi", format!("{}", self.xi));
        kv("snr_db", format!("{}", self.snr_db));
        kv("q_levels", self.q_levels.to_string());
        kv("tx_theta", format!("{}", self.tx_theta));
        kv("tx_phi", format!("{}", self.tx_phi));
        kv("cu_theta", format!("{}", self.cu_theta));
        kv("cu_phi", format!("{}", self.cu_phi));
        kv("eve_theta", format!("{}", self.eve_theta));
        kv("eve_phi", format!("{}", self.eve_phi));
        kv("region_theta", format!("{}", self.region_theta));
        kv("region_phi", format!("{}", self.region_phi));
        kv("region_radius", format!("{}", self.region_radius));
        kv("path_to_theta", format!("{}", self.path_to_theta));
        kv("path_to_phi", format!("{}", self.path_to_phi));
        kv("path_waypoints", self.path_waypoints.to_string());
        kv("path_curvature", format!("{}", self.path_curvature));
        kv("hidden", hidden);
        kv("train_segments", segments);
        kv("retrain_lr", format!("{}", self.retrain_lr));
        kv("alpha", format!("{}", self.alpha));
        kv("beta", format!("{}", self.beta));
        kv("k_sup", self.k_sup.to_string());
        kv("k_qry", self.k_qry.to_string());
        kv("task_batch", self.task_batch.to_string());
        kv("meta_iters", self.meta_iters.to_string());
        kv("meta_eval_samples", self.meta_eval_samples.to_string());
        kv("meta_telemetry_every", self.meta_telemetry_every.to_string());
        kv("checkpoint_every", self.checkpoint_every.to_string());
        kv("early_stop", self.early_stop.to_string());
        kv("second_order", self.second_order.to_string());
        kv("best_of", self.best_of.to_string());
        kv("ser_frames", self.ser_frames.to_string());
        kv("heatmap_resolution", self.heatmap_resolution.to_string());
        kv("r_floor", format!("{}", self.r_floor));
        kv("enum_cap", self.enum_cap.to_string());
        kv("telemetry_every", self.telemetry_every.to_string());
        kv("oracle_samples", self.oracle_samples.to_string());
        kv(
            "sinr_mode",
            match self.sinr_mode {
                SinrMode::Corrected => "corrected".to_string(),
                SinrMode::Literal => "literal".to_string(),
            },
        );
        out
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Validation(msg));
        if self.q_levels < 2 {
            return fail("q_levels must be ≥ 2".into());
        }
        if self.m_x == 0 || self.m_z == 0 {
            return fail("m_x and m_z must be ≥ 1".into());
        }
        if self.n_tx == 0 {
            return fail("n_tx must be ≥ 1".into());
        }
        if self.k_sub == 0 {
            return fail("k_sub must be ≥ 1".into());
        }
        if self.mod_order < 2 {
            return fail("mod_order must be ≥ 2".into());
        }
        if !(self.xi > 0.0 && self.xi <= PI / self.mod_order as f64) {
            return fail(format!(
                "xi must satisfy 0 < xi ≤ pi/mod_order, got {}",
                self.xi
            ));
        }
        for (name, theta, phi) in [
            ("tx", self.tx_theta, self.tx_phi),
            ("cu", self.cu_theta, self.cu_phi),
            ("eve", self.eve_theta, self.eve_phi),
            ("region center", self.region_theta, self.region_phi),
            ("path destination", self.path_to_theta, self.path_to_phi),
        ] {
            if !Direction::new(theta, phi).in_evaluation_range() {
                return fail(format!("{name} direction ({theta}, {phi}) outside ±90°"));
            }
        }
        if self.region_radius <= 0.0 {
            return fail("region_radius must be > 0".into());
        }
        if self.region_theta.abs() + self.region_radius > 90.0
            || self.region_phi.abs() + self.region_radius > 90.0
        {
            return fail("task region disk extends outside ±90°".into());
        }
        if self.path_waypoints < 2 {
            return fail("path_waypoints must be ≥ 2".into());
        }
        if self.train_segments.iter().any(|&(_, lr)| lr <= 0.0) {
            return fail("train_segments rates must be > 0".into());
        }
        if self.retrain_lr <= 0.0 {
            return fail("retrain_lr must be > 0".into());
        }
        if self.alpha < 0.0 || self.beta < 0.0 {
            return fail("alpha and beta must be ≥ 0".into());
        }
        if self.k_qry == 0 {
            return fail("k_qry must be ≥ 1".into());
        }
        if self.task_batch == 0 {
            return fail("task_batch must be ≥ 1".into());
        }
        if self.best_of == 0 {
            return fail("best_of must be ≥ 1".into());
        }
        if self.ser_frames == 0 {
            return fail("ser_frames must be ≥ 1".into());
        }
        if self.heatmap_resolution == 0 || 180 % self.heatmap_resolution != 0 {
            return fail(format!(
                "heatmap_resolution must divide 180, got {}",
                self.heatmap_resolution
            ));
        }
        if self.r_floor <= 0.0 {
            return fail("r_floor must be > 0".into());
        }
        if self.enum_cap == 0 {
            return fail("enum_cap must be ≥ 1".into());
        }
        Ok(())
    }

    pub fn geometry(&self) -> SystemGeometry {
        SystemGeometry {
            m_x: self.m_x,
            m_z: self.m_z,
            n_tx: self.n_tx,
            tx_dir: Direction::new(self.tx_theta, self.tx_phi),
            theta_irs: 0.0,
        }
    }

    /// Noise variance from the SNR with unit-power symbols and unit path
    /// loss: sigma^2 = 10^(-SNR/10).
    pub fn noise_var(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }

    pub fn ofdm(&self) -> OfdmSpec {
        OfdmSpec {
            k_sub: self.k_sub,
            noise_var: self.noise_var(),
            mod_order: self.mod_order,
            xi: self.xi,
            sinr_mode: self.sinr_mode,
        }
    }

    pub fn grid(&self) -> DiscretizationGrid {
        DiscretizationGrid::new(self.q_levels).expect("validated q_levels")
    }

    pub fn cu(&self) -> Direction {
        Direction::new(self.cu_theta, self.cu_phi)
    }

    pub fn eve(&self) -> Direction {
        Direction::new(self.eve_theta, self.eve_phi)
    }

    pub fn path_to(&self) -> Direction {
        Direction::new(self.path_to_theta, self.path_to_phi)
    }

    pub fn region(&self) -> TaskRegion {
        TaskRegion::new(
            Direction::new(self.region_theta, self.region_phi),
            self.region_radius,
        )
    }

    /// Single-task environment: rewards and the phase anchor both at the
    /// configured user direction.
    pub fn env(&self) -> TaskEnv {
        TaskEnv::new(
            self.geometry(),
            self.ofdm(),
            self.grid(),
            self.cu(),
            self.eve(),
            self.r_floor,
        )
    }

    pub fn train_schedule(&self) -> TrainSchedule {
        TrainSchedule::new(self.train_segments.clone(), self.seed)
    }

    pub fn meta_config(&self) -> MetaConfig {
        MetaConfig {
            alpha: self.alpha,
            beta: self.beta,
            k_sup: self.k_sup,
            k_qry: self.k_qry,
            task_batch: self.task_batch,
            meta_iters: self.meta_iters,
            seed: self.seed,
            second_order: self.second_order,
            early_stop: self.early_stop,
            telemetry_every: self.meta_telemetry_every,
            eval_samples: self.meta_eval_samples,
        }
    }

    /// Scenario fingerprint stored in checkpoints: everything that changes
    /// what a parameter vector means (geometry, discretization, reward
    /// semantics), but not evaluation knobs like the SNR.
    pub fn fingerprint(&self) -> u64 {
        let mut bytes = Vec::new();
        for v in [
            self.m_x as u64,
            self.m_z as u64,
            self.n_tx as u64,
            self.k_sub as u64,
            self.q_levels as u64,
            self.mod_order as u64,
        ] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        for v in [
            self.xi,
            self.tx_theta,
            self.tx_phi,
            self.cu_theta,
            self.cu_phi,
            self.r_floor,
        ] {
            bytes.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        bytes.push(match self.sinr_mode {
            SinrMode::Corrected => 0,
            SinrMode::Literal => 1,
        });
        fnv1a(&bytes)
    }
}

/// FNV-1a 64-bit hash.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
