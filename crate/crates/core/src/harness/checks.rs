//! Self-checks exposed on the CLI: the exhaustive-enumeration oracle for
//! reward-proportional sampling, and the finite-difference gradient check.

use crate::error::Result;
use crate::gflownet::{TaskEnv, empirical_terminal_distribution, sample_trajectory, tb_loss, tb_residual, train_single_task};
use crate::harness::config::ScenarioConfig;
use crate::harness::csvio::{build_csv, cell};
use crate::mdp::{AssignmentState, DiscretizationGrid, decode_terminal, enumerate_terminals};
use crate::nn::InitScheme;
use crate::rng::{derive_seed, seeded_rng};
use crate::signal::{Direction, OfdmSpec, SinrMode, SystemGeometry};

/// L1 threshold between the empirical terminal distribution and the
/// enumerated reward-proportional target.
pub const ORACLE_L1_THRESHOLD: f64 = 0.15;
/// Maximum relative error accepted between analytic and central-difference
/// gradients.
pub const GRAD_CHECK_TOL: f64 = 1e-4;

const SALT_ORACLE: u64 = 0x0AC1;

/// One terminal state in the oracle report.
#[derive(Debug, Clone)]
pub struct OracleRow {
    /// Level assignment, slots joined with '-'.
    pub key: String,
    pub reward: f64,
    /// R / sum(R) from exhaustive enumeration.
    pub target: f64,
    /// Relative frequency under the trained sampler.
    pub empirical: f64,
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub l1: f64,
    pub n_terminals: usize,
    pub threshold: f64,
    pub pass: bool,
    pub rows: Vec<OracleRow>,
}

impl OracleReport {
    pub fn table_csv(&self) -> String {
        build_csv(
            &["terminal", "reward", "target_prob", "empirical_prob"],
            self.rows.iter().map(|r| {
                vec![
                    r.key.clone(),
                    cell(r.reward),
                    cell(r.target),
                    cell(r.empirical),
                ]
            }),
        )
    }
}

/// Train a single-task sampler on the configured (enumerable) instance and
/// compare its empirical terminal distribution against the exact
/// reward-proportional target.
pub fn run_oracle_check(cfg: &ScenarioConfig) -> Result<OracleReport> {
    let env = cfg.env();
    let grid = cfg.grid();
    let geom = cfg.geometry();
    // Enumerate rewards first so an over-cap instance fails fast.
    let mut keys = Vec::new();
    let mut rewards = Vec::new();
    for levels in enumerate_terminals(&geom, &grid, cfg.enum_cap)? {
        let cfgt = decode_terminal(&AssignmentState::from_levels(&levels), &grid, &geom, env.steer)?;
        rewards.push(env.reward(&cfgt));
        keys.push(levels);
    }
    let z: f64 = rewards.iter().sum();
    let mut net = env.make_net(&cfg.hidden, cfg.seed, InitScheme::FanInUniform);
    train_single_task(&mut net, &env, &cfg.train_schedule(), 0);
    let dist = empirical_terminal_distribution(
        &net,
        &env,
        cfg.oracle_samples,
        derive_seed(cfg.seed, SALT_ORACLE, 0),
    );
    let mut l1 = 0.0;
    let mut rows = Vec::with_capacity(keys.len());
    for (levels, reward) in keys.iter().zip(&rewards) {
        let target = reward / z;
        let empirical = dist.get(levels).copied().unwrap_or(0.0);
        l1 += (empirical - target).abs();
        rows.push(OracleRow {
            key: levels
                .iter()
                .map(|l| l.to_string())
                .collect::<Vec<_>>()
                .join("-"),
            reward: *reward,
            target,
            empirical,
        });
    }
    Ok(OracleReport {
        l1,
        n_terminals: rows.len(),
        threshold: ORACLE_L1_THRESHOLD,
        pass: l1 < ORACLE_L1_THRESHOLD,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub n_pairs: usize,
    pub pass: bool,
}

/// Compare analytic trajectory-balance gradients against central finite
/// differences (step 1e-5) over `n_pairs` random network/trajectory pairs.
/// `corrupt` deliberately perturbs one analytic coordinate as a negative
/// control.
pub fn run_grad_check(seed: u64, n_pairs: usize, corrupt: bool) -> GradCheckReport {
    let geom = SystemGeometry {
        m_x: 1,
        m_z: 1,
        n_tx: 8,
        tx_dir: Direction::new(15.0, 10.0),
        theta_irs: 0.0,
    };
    let ofdm = OfdmSpec {
        k_sub: 8,
        noise_var: 1.0,
        mod_order: 4,
        xi: std::f64::consts::PI / 4.0,
        sinr_mode: SinrMode::Corrected,
    };
    let env = TaskEnv::new(
        geom,
        ofdm,
        DiscretizationGrid::new(2).unwrap(),
        Direction::new(40.0, 30.0),
        Direction::new(-20.0, -20.0),
        1e-6,
    );
    let h = 1e-5;
    let mut max_rel: f64 = 0.0;
    for pair in 0..n_pairs {
        let pair_seed = derive_seed(seed, 0x6AD, pair as u64);
        let mut net = env.make_net(&[10, 7], pair_seed, InitScheme::FanInUniform);
        let mut rng = seeded_rng(derive_seed(pair_seed, 1, 0));
        let traj = sample_trajectory(&net, &env, &mut rng);
        let (_, mut analytic) = tb_loss(&net, &traj, &env);
        if corrupt {
            analytic[0] += 0.5;
        }
        let params = net.get_params();
        let mut probe = params.clone();
        for i in 0..params.len() {
            probe[i] = params[i] + h;
            net.set_params(&probe);
            let lp = tb_residual(&net, &traj, &env).powi(2);
            probe[i] = params[i] - h;
            net.set_params(&probe);
            let lm = tb_residual(&net, &traj, &env).powi(2);
            probe[i] = params[i];
            let fd = (lp - lm) / (2.0 * h);
            if analytic[i].abs() < 1e-10 && fd.abs() < 1e-10 {
                continue;
            }
            let rel = (analytic[i] - fd).abs() / analytic[i].abs().max(fd.abs()).max(1e-8);
            max_rel = max_rel.max(rel);
        }
    }
    GradCheckReport {
        max_rel_err: max_rel,
        n_pairs,
        pass: max_rel < GRAD_CHECK_TOL,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn tiny_oracle_cfg() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::desk();
        cfg.m_x = 1;
        cfg.m_z = 1;
        cfg.q_levels = 2;
        cfg.hidden = vec![16];
        cfg.train_segments = vec![(20_000, 1e-2)];
        cfg.oracle_samples = 20_000;
        cfg
    }

    #[test]
    fn oracle_check_aligns_on_tiny_instance() {
        let cfg = tiny_oracle_cfg();
        let report = run_oracle_check(&cfg).unwrap();
        assert_eq!(report.n_terminals, 4);
        assert_eq!(report.rows.len(), 4);
        assert!(report.pass, "L1 {}", report.l1);
        let target_sum: f64 = report.rows.iter().map(|r| r.target).sum();
        assert!((target_sum - 1.0).abs() < 1e-12);
        let csv = report.table_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("terminal,reward,target_prob,empirical_prob\n"));
    }

    #[test]
    fn oracle_check_untrained_report_normalizes() {
        // No training: the report still enumerates every terminal and its
        // target column normalizes to one.
        let mut cfg = tiny_oracle_cfg();
        cfg.train_segments = vec![];
        cfg.oracle_samples = 5_000;
        let report = run_oracle_check(&cfg).unwrap();
        assert_eq!(report.n_terminals, 4);
        let target_sum: f64 = report.rows.iter().map(|r| r.target).sum();
        assert!((target_sum - 1.0).abs() < 1e-12);
        let emp_sum: f64 = report.rows.iter().map(|r| r.empirical).sum();
        assert!((emp_sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_check_respects_enumeration_cap() {
        let mut cfg = ScenarioConfig::paper();
        cfg.enum_cap = 100;
        let err = run_oracle_check(&cfg).unwrap_err();
        assert!(matches!(err, Error::EnumerationCap { .. }));
    }

    #[test]
    fn grad_check_passes_and_corruption_fails() {
        let report = run_grad_check(0, 4, false);
        assert!(report.pass, "max rel err {}", report.max_rel_err);
        let corrupted = run_grad_check(0, 4, true);
        assert!(!corrupted.pass);
        // Same seed, same report.
        let again = run_grad_check(0, 4, false);
        assert_eq!(report, again);
    }
}
