//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured quantities (visible with `--nocapture`). Heavy fixtures
//! (desk-scale pretraining and meta-training) are shared across criteria.

use std::sync::LazyLock;
use std::time::Instant;
use tmirs::gflownet::{
    TaskEnv, TrainSchedule, best_of_s, flow_implied_reward, sample_trajectory, tb_residual,
    train_single_task,
};
use tmirs::harness::{ScenarioConfig, gen_motion_path, run_grad_check, run_oracle_check};
use tmirs::meta::{DirectionTask, MetaConfig, build_sets, deploy_adapt, meta_step, meta_train, query_grad};
use tmirs::nn::{InitScheme, PolicyNet, sgd_step};
use tmirs::rng::{derive_seed, seeded_rng};
use tmirs::signal::{
    Direction, TmIrsConfig, effective_sum_rate, psk_symbol, secrecy_rate, ser_monte_carlo,
    switching_coeff,
};

fn desk() -> ScenarioConfig {
    ScenarioConfig::desk()
}

/// Desk-scale single-task sampler trained at the initial user direction.
static PRETRAINED: LazyLock<PolicyNet> = LazyLock::new(|| {
    let cfg = desk();
    let env = cfg.env();
    let mut net = env.make_net(&cfg.hidden, cfg.seed, InitScheme::FanInUniform);
    train_single_task(&mut net, &env, &cfg.train_schedule(), 0);
    net
});

/// Desk-scale meta-trained initialization over the task region.
static META_TRAINED: LazyLock<PolicyNet> = LazyLock::new(|| {
    let cfg = desk();
    let env = cfg.env();
    let (net, _) = meta_train(&cfg.region(), &env, &cfg.meta_config(), &cfg.hidden, 0, None);
    net
});

#[test]
fn acceptance_01_fourier_partial_sums() {
    let start = Instant::now();
    let l_max = 512i64;
    let grid = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut failures = Vec::new();
    for &tau_on in &grid {
        for &delta_tau in &grid {
            let dc = switching_coeff(0, tau_on, delta_tau);
            assert_eq!(dc.re, delta_tau, "psi_0 must equal the duty cycle exactly");
            assert_eq!(dc.im, 0.0);
            let sum: f64 = (-l_max..=l_max)
                .map(|l| switching_coeff(l, tau_on, delta_tau).norm_sqr())
                .sum();
            let gap = (sum - delta_tau).abs();
            let tol = 1e-3 * delta_tau;
            if gap > tol {
                failures.push(format!(
                    "(tau_on={tau_on}, delta_tau={delta_tau}): |sum - duty| = {gap:.6e} > {tol:.1e}"
                ));
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 1.0,
        "criterion 1 runtime {elapsed:?} exceeds 1 s"
    );
    assert!(
        failures.is_empty(),
        "criterion 1: Parseval partial sums out of tolerance at {} of 25 grid points \
         (the |l|<=512 tail is ~1/(pi^2*512) ~ 1.98e-4 independent of delta_tau, which \
         exceeds 1e-3*delta_tau when delta_tau = 0.1):\n{}",
        failures.len(),
        failures.join("\n")
    );
    println!(
        "criterion 1: PASS - 25 grid points within 1e-3*duty, psi_0 exact, {:.1} ms",
        elapsed.as_secs_f64() * 1e3
    );
}

#[test]
fn acceptance_02_gradient_correctness() {
    let start = Instant::now();
    let report = run_grad_check(0, 20, false);
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 30.0,
        "criterion 2 runtime {elapsed:?} exceeds 30 s"
    );
    assert!(
        report.pass && report.max_rel_err < 1e-4,
        "criterion 2: max relative gradient error {:.3e} >= 1e-4",
        report.max_rel_err
    );
    println!(
        "criterion 2: PASS - {} pairs, max rel err {:.3e}, {:.2} s",
        report.n_pairs,
        report.max_rel_err,
        elapsed.as_secs_f64()
    );
}

#[test]
fn acceptance_03_sampler_proportional_to_reward() {
    let start = Instant::now();
    // 1x2 elements, Q=4: 256 terminals; 2e5 single-task trajectories; 1e5
    // samples against R / sum(R) from exhaustive enumeration.
    let mut cfg = desk();
    cfg.m_x = 1;
    cfg.m_z = 2;
    assert_eq!(cfg.train_segments.iter().map(|s| s.0).sum::<usize>(), 200_000);
    assert_eq!(cfg.oracle_samples, 100_000);
    let report = run_oracle_check(&cfg).expect("enumerable instance");
    assert_eq!(report.n_terminals, 256);
    assert!(
        report.l1 < 0.15,
        "criterion 3: L1 distance {:.4} >= 0.15",
        report.l1
    );
    println!(
        "criterion 3: PASS - L1 {:.4} over 256 terminals, {:.1} s",
        report.l1,
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn acceptance_04_maml_collapse_identity() {
    // alpha = 0: one meta-update over B identical tasks must equal one
    // batched TB-SGD step over the pooled B*K_qry query trajectories,
    // bit for bit.
    let cfg = desk();
    let mut tiny = cfg.clone();
    tiny.m_x = 1;
    tiny.m_z = 1;
    tiny.q_levels = 2;
    let env = tiny.env();
    let mut net = env.make_net(&[12], 41, InitScheme::FanInUniform);
    let omega = net.clone();
    let meta_cfg = MetaConfig {
        alpha: 0.0,
        beta: 1e-3,
        k_sup: 2,
        k_qry: 8,
        task_batch: 3,
        meta_iters: 1,
        seed: 41,
        second_order: false,
        early_stop: false,
        telemetry_every: 0,
        eval_samples: 0,
    };
    let task = DirectionTask {
        cu: Direction::new(40.0, 30.0),
    };
    let tasks = vec![task; meta_cfg.task_batch];
    let mut rng = seeded_rng(99);
    let mut rng_clone = rng.clone();
    meta_step(&mut net, &tasks, &env, &meta_cfg, &mut rng, false);
    // Batched single-task TB SGD on the same trajectories: per-task mean
    // gradients at omega, summed in task order, scaled once by 1/B.
    use rand::RngCore;
    let seeds: Vec<u64> = tasks.iter().map(|_| rng_clone.next_u64()).collect();
    let mut pooled = vec![0.0; omega.param_count()];
    for (task, &seed) in tasks.iter().zip(&seeds) {
        let mut task_rng = seeded_rng(seed);
        let env_t = env.with_cu(task.cu);
        let (_, qry) = build_sets(&omega, task, &env, meta_cfg.k_sup, meta_cfg.k_qry, &mut task_rng);
        assert_eq!(qry.len(), meta_cfg.k_qry);
        let (_, g) = query_grad(&omega, &qry, &env_t);
        for (p, gi) in pooled.iter_mut().zip(&g) {
            *p += gi;
        }
    }
    let scale = 1.0 / tasks.len() as f64;
    for p in &mut pooled {
        *p *= scale;
    }
    let want = sgd_step(&omega.get_params(), &pooled, meta_cfg.beta);
    let got = net.get_params();
    let mut diffs = 0usize;
    for (a, b) in got.iter().zip(&want) {
        if a.to_bits() != b.to_bits() {
            diffs += 1;
        }
    }
    assert_eq!(
        diffs, 0,
        "criterion 4: {} of {} parameters differ bitwise",
        diffs,
        want.len()
    );
    println!(
        "criterion 4: PASS - {} parameters bit-identical after collapse",
        want.len()
    );
}

#[test]
fn acceptance_05_adaptation_advantage() {
    let start = Instant::now();
    let cfg = desk();
    let env = cfg.env();
    let geom = cfg.geometry();
    let ofdm = cfg.ofdm();
    let eve = cfg.eve();
    let pre = &*PRETRAINED;
    let meta_net = &*META_TRAINED;
    // 5 held-out directions at least 10 degrees from the pretraining
    // direction, spread along the motion path.
    let path = gen_motion_path(cfg.cu(), cfg.path_to(), cfg.path_waypoints, cfg.path_curvature);
    let held: Vec<Direction> = path
        .waypoints
        .iter()
        .copied()
        .filter(|d| d.distance(&cfg.cu()) >= 10.0)
        .collect();
    assert!(held.len() >= 5, "motion path too short for held-out set");
    let dirs: Vec<Direction> = (0..5).map(|i| held[i * (held.len() - 1) / 4]).collect();
    let n_seeds = 5u64;
    // Per-seed means over the 5 directions, per method, plus a
    // per-direction breakdown averaged over seeds.
    let mut meta_m = Vec::new();
    let mut r4_m = Vec::new();
    let mut r2_m = Vec::new();
    let mut native_m = Vec::new();
    let mut by_dir = vec![[0.0f64; 4]; dirs.len()];
    for seed in 1..=n_seeds {
        let mut sums = [0.0f64; 4];
        for (d_i, dir) in dirs.iter().enumerate() {
            let env_w = env.with_cu(*dir);
            let base = derive_seed(seed, 0xAC5, d_i as u64);
            let eval = |net: &PolicyNet, salt: u64| -> f64 {
                let best = best_of_s(net, &env_w, cfg.best_of, derive_seed(base, salt, 1));
                secrecy_rate(&best, &geom, &ofdm, *dir, eve)
            };
            let adapted = deploy_adapt(
                meta_net,
                *dir,
                &env,
                100,
                cfg.alpha,
                &mut seeded_rng(derive_seed(base, 1, 0)),
            );
            let v = eval(&adapted, 2);
            sums[0] += v;
            by_dir[d_i][0] += v / n_seeds as f64;
            let mut retrained = pre.clone();
            train_single_task(
                &mut retrained,
                &env_w,
                &TrainSchedule::constant(10_000, cfg.retrain_lr, derive_seed(base, 3, 0)),
                0,
            );
            let v = eval(&retrained, 4);
            sums[1] += v;
            by_dir[d_i][1] += v / n_seeds as f64;
            let mut retrained = pre.clone();
            train_single_task(
                &mut retrained,
                &env_w,
                &TrainSchedule::constant(100, cfg.retrain_lr, derive_seed(base, 5, 0)),
                0,
            );
            let v = eval(&retrained, 6);
            sums[2] += v;
            by_dir[d_i][2] += v / n_seeds as f64;
            let v = eval(pre, 7);
            sums[3] += v;
            by_dir[d_i][3] += v / n_seeds as f64;
        }
        let n = dirs.len() as f64;
        meta_m.push(sums[0] / n);
        r4_m.push(sums[1] / n);
        r2_m.push(sums[2] / n);
        native_m.push(sums[3] / n);
    }
    for (d_i, dir) in dirs.iter().enumerate() {
        println!(
            "criterion 5 at ({:.1}, {:.1}) [{:.1}° out]: meta {:.3} retrain(1e4) {:.3} retrain(1e2) {:.3} native {:.3}",
            dir.theta,
            dir.phi,
            dir.distance(&cfg.cu()),
            by_dir[d_i][0],
            by_dir[d_i][1],
            by_dir[d_i][2],
            by_dir[d_i][3]
        );
    }
    let stats = |v: &[f64]| -> (f64, f64) {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        (mean, (var / v.len() as f64).sqrt())
    };
    let (meta_mean, meta_se) = stats(&meta_m);
    let (r4_mean, r4_se) = stats(&r4_m);
    let (r2_mean, r2_se) = stats(&r2_m);
    let (native_mean, native_se) = stats(&native_m);
    let pooled_meta_r2 = (meta_se.powi(2) + r2_se.powi(2)).sqrt();
    let pooled_r2_native = (r2_se.powi(2) + native_se.powi(2)).sqrt();
    println!("criterion 5 means over {n_seeds} seeds x 5 directions:");
    println!("  meta(100)    {meta_mean:.4} ± {meta_se:.4}");
    println!("  retrain(1e4) {r4_mean:.4} ± {r4_se:.4}");
    println!("  retrain(1e2) {r2_mean:.4} ± {r2_se:.4}");
    println!("  native       {native_mean:.4} ± {native_se:.4}");
    let mut failures = Vec::new();
    if !(meta_mean > r4_mean) {
        failures.push(format!(
            "meta(100) {meta_mean:.4} not above retrain(1e4) {r4_mean:.4}"
        ));
    }
    if !(r4_mean >= r2_mean) {
        failures.push(format!(
            "retrain(1e4) {r4_mean:.4} below retrain(1e2) {r2_mean:.4}"
        ));
    }
    if !((r2_mean - native_mean).abs() <= 3.0 * pooled_r2_native) {
        failures.push(format!(
            "retrain(1e2) {r2_mean:.4} not comparable to native {native_mean:.4} (|diff| > 3 x pooled SE {pooled_r2_native:.4})"
        ));
    }
    if !(meta_mean - r2_mean > pooled_meta_r2) {
        failures.push(format!(
            "meta margin over retrain(1e2) {:.4} not above pooled SE {pooled_meta_r2:.4}",
            meta_mean - r2_mean
        ));
    }
    assert!(
        failures.is_empty(),
        "criterion 5: ordering meta(100) > retrain(1e4) >= retrain(1e2) ~= native violated:\n{}\n\
         (means over {n_seeds} seeds x 5 held-out directions; at this desk scale 1e4 retraining \
         steps approach full re-training, see the per-direction breakdown printed above)",
        failures.join("\n")
    );
    println!(
        "criterion 5: PASS - meta > retrain(1e4) >= retrain(1e2) ~= native, margin {:.4} > pooled SE {:.4}, {:.1} min",
        meta_mean - r2_mean,
        pooled_meta_r2,
        start.elapsed().as_secs_f64() / 60.0
    );
}

#[test]
fn acceptance_06_dm_directionality() {
    let start = Instant::now();
    let cfg = desk();
    let env = cfg.env();
    let geom = cfg.geometry();
    let ofdm = cfg.ofdm();
    let cu = cfg.cu();
    let best = best_of_s(
        &PRETRAINED,
        &env,
        cfg.best_of,
        derive_seed(cfg.seed, 0xD6, 0),
    );
    let cu_ser = ser_monte_carlo(&best, &geom, &ofdm, cu, cfg.ser_frames, derive_seed(cfg.seed, 0xD6, 1));
    assert!(
        !cu_ser.degenerate_equalization,
        "criterion 6: degenerate equalization at the trained direction"
    );
    assert!(
        cu_ser.ser < 0.1,
        "criterion 6: SER at trained direction {:.4} >= 0.1",
        cu_ser.ser
    );
    // Desk-preset heatmap grid; mean SER over all cells at least 20 degrees
    // away, plus the local-minimum check in the 5x5 neighborhood of the CU.
    let res = cfg.heatmap_resolution as i64;
    let n_axis = (180 / res + 1) as usize;
    let mut far_sum = 0.0;
    let mut far_n = 0usize;
    let mut cells = vec![vec![0.0f64; n_axis]; n_axis];
    for (ti, row) in cells.iter_mut().enumerate() {
        for (pi, cell) in row.iter_mut().enumerate() {
            let theta = -90.0 + (ti as i64 * res) as f64;
            let phi = -90.0 + (pi as i64 * res) as f64;
            let dir = Direction::new(theta, phi);
            let est = ser_monte_carlo(
                &best,
                &geom,
                &ofdm,
                dir,
                cfg.ser_frames,
                derive_seed(cfg.seed, 0xD6, (2 + ti * n_axis + pi) as u64),
            );
            *cell = est.ser;
            if dir.distance(&cu) >= 20.0 {
                far_sum += est.ser;
                far_n += 1;
            }
        }
    }
    let far_mean = far_sum / far_n as f64;
    assert!(
        far_mean > 0.3,
        "criterion 6: mean SER beyond 20 degrees {:.4} <= 0.3",
        far_mean
    );
    // Nearest grid cell to the trained direction is no worse than any
    // neighbor in its 5x5 patch.
    let ci = ((cu.theta + 90.0) / res as f64).round() as usize;
    let cj = ((cu.phi + 90.0) / res as f64).round() as usize;
    let center = cells[ci][cj];
    for di in -2i64..=2 {
        for dj in -2i64..=2 {
            let (i, j) = (ci as i64 + di, cj as i64 + dj);
            if i >= 0 && j >= 0 && (i as usize) < n_axis && (j as usize) < n_axis {
                assert!(
                    center <= cells[i as usize][j as usize] + 1e-12,
                    "criterion 6: cell ({di},{dj}) beats the trained direction"
                );
            }
        }
    }
    println!(
        "criterion 6: PASS - SER(cu) {:.4} < 0.1, far mean {:.4} > 0.3 over {} cells, {:.1} s",
        cu_ser.ser,
        far_mean,
        far_n,
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn acceptance_07_reward_gating() {
    // A phase-rotated single-element configuration with |arg V0| > xi gets
    // exactly zero effective rate and the floored training reward.
    let cfg = desk();
    let mut tiny = cfg.clone();
    tiny.m_x = 1;
    tiny.m_z = 1;
    let env = tiny.env();
    let geom = tiny.geometry();
    let ofdm = tiny.ofdm();
    let gated = TmIrsConfig {
        tau_on: vec![0.25],
        delta_tau: vec![0.5],
        phase: vec![psk_symbol(1, 4) * psk_symbol(1, 8)], // arg = 3pi/4 > pi/4
    };
    let dir = Direction::new(0.0, 0.0);
    let arg = tmirs::signal::harmonic_gain(0, &gated, &geom, dir).arg().abs();
    assert!(arg > ofdm.xi, "construction must violate the phase gate");
    let rate = effective_sum_rate(&gated, &geom, &ofdm, dir);
    assert_eq!(rate, 0.0, "criterion 7: gated rate must be exactly zero");
    let mut gated_env = env.clone();
    gated_env.cu = dir;
    assert_eq!(
        gated_env.reward(&gated),
        gated_env.r_floor,
        "criterion 7: training reward must floor exactly"
    );
    println!(
        "criterion 7: PASS - |arg V0| {:.3} > xi {:.3} gives rate 0 and floored reward {}",
        arg, ofdm.xi, gated_env.r_floor
    );
}

#[test]
fn acceptance_08_deterministic_artifacts() {
    use std::process::Command;
    let bin = env!("CARGO_BIN_EXE_tmirs");
    let dir = tempfile::tempdir().unwrap();
    // Small scenario and checkpoint shared by both runs.
    let mut cfg = desk();
    cfg.m_x = 1;
    cfg.m_z = 2;
    cfg.hidden = vec![8];
    cfg.best_of = 4;
    cfg.ser_frames = 25;
    cfg.path_waypoints = 4;
    cfg.seed = 11;
    let cfg_path = dir.path().join("tiny.cfg");
    std::fs::write(&cfg_path, cfg.save_string()).unwrap();
    let env = cfg.env();
    let net = env.make_net(&cfg.hidden, 7, InitScheme::FanInUniform);
    let ckpt = dir.path().join("single.ckpt");
    tmirs::nn::save_checkpoint(
        &ckpt,
        &net,
        &tmirs::nn::CheckpointMeta {
            tag: "single".into(),
            seed: cfg.seed,
            fingerprint: cfg.fingerprint(),
        },
    )
    .unwrap();
    let run = |sub: &[&str], out: &str| -> Vec<u8> {
        let out_dir = dir.path().join(out);
        let status = Command::new(bin)
            .args(sub)
            .arg("--config")
            .arg(&cfg_path)
            .arg("--preset")
            .arg("desk")
            .arg("--checkpoint")
            .arg(&ckpt)
            .arg("--out")
            .arg(&out_dir)
            .status()
            .expect("binary runs");
        assert!(status.success(), "{sub:?} failed");
        let artifact = if sub[0] == "heatmap" {
            out_dir.join("heatmap.csv")
        } else {
            out_dir.join("motion_retrain_10.csv")
        };
        std::fs::read(artifact).unwrap()
    };
    let h1 = run(&["heatmap", "--resolution", "45"], "h1");
    let h2 = run(&["heatmap", "--resolution", "45"], "h2");
    assert_eq!(h1, h2, "criterion 8: heatmap CSVs differ between reruns");
    let m1 = run(&["motion-eval", "--method", "retrain:10"], "m1");
    let m2 = run(&["motion-eval", "--method", "retrain:10"], "m2");
    assert_eq!(m1, m2, "criterion 8: motion CSVs differ between reruns");
    println!(
        "criterion 8: PASS - heatmap ({} bytes) and motion-eval ({} bytes) byte-identical",
        h1.len(),
        m1.len()
    );
}

#[test]
fn acceptance_09_tb_flow_identity() {
    // tb loss == (log R' - log R)^2 with the log residual within 1e-10,
    // over 1e3 random network/trajectory pairs.
    let cfg = desk();
    let mut tiny = cfg.clone();
    tiny.m_x = 1;
    tiny.m_z = 2;
    tiny.q_levels = 4;
    let env: TaskEnv = tiny.env();
    let mut worst: f64 = 0.0;
    for i in 0..1000u64 {
        let net = env.make_net(&[10, 6], derive_seed(7, 0x1de, i), InitScheme::FanInUniform);
        let mut rng = seeded_rng(derive_seed(8, 0x1de, i));
        let traj = sample_trajectory(&net, &env, &mut rng);
        let residual = tb_residual(&net, &traj, &env);
        let log_ratio = flow_implied_reward(&net, &traj, &env).ln() - traj.reward.ln();
        worst = worst.max((residual - log_ratio).abs());
    }
    assert!(
        worst <= 1e-10,
        "criterion 9: log residual mismatch {worst:.3e} > 1e-10"
    );
    println!("criterion 9: PASS - 1000 pairs, max |log residual mismatch| {worst:.3e}");
}
