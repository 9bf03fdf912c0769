use std::time::Instant;
use tmirs::gflownet::{TrainSchedule, best_of_s, train_single_task};
use tmirs::harness::{ScenarioConfig, gen_motion_path};
use tmirs::meta::{deploy_adapt, meta_train};
use tmirs::nn::InitScheme;
use tmirs::rng::{derive_seed, seeded_rng};
use tmirs::signal::secrecy_rate;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let meta_iters: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(4000);
    let mut cfg = ScenarioConfig::desk();
    if let Some(k) = args.get(2) { cfg.k_sup = k.parse().unwrap(); }
    if let Some(k) = args.get(3) { cfg.k_qry = k.parse().unwrap(); }
    if let Some(b) = args.get(4) { cfg.beta = b.parse().unwrap(); }
    let env = cfg.env();
    let geom = cfg.geometry();
    let ofdm = cfg.ofdm();
    let eve = cfg.eve();

    let t0 = Instant::now();
    let mut mcfg = cfg.meta_config();
    mcfg.meta_iters = meta_iters;
    mcfg.telemetry_every = 500;
    let (meta_net, telemetry) = meta_train(&cfg.region(), &env, &mcfg, &cfg.hidden, 0, None);
    println!("meta-train {} iters (k_sup {} k_qry {} beta {}) in {:.1}s",
        meta_iters, cfg.k_sup, cfg.k_qry, cfg.beta, t0.elapsed().as_secs_f64());
    for row in telemetry.iter().step_by((telemetry.len()/5).max(1)) {
        println!("  iter {:>6} loss {:>12.3} adapted_reward {:>7.3}", row.meta_iter, row.mean_query_loss, row.mean_adapted_reward);
    }

    let path = gen_motion_path(cfg.cu(), cfg.path_to(), cfg.path_waypoints, cfg.path_curvature);
    let held: Vec<_> = path.waypoints.iter().copied().filter(|d| d.distance(&cfg.cu()) >= 10.0).collect();
    let idxs: Vec<usize> = (0..5).map(|i| i * (held.len() - 1) / 4).collect();
    let dirs: Vec<_> = idxs.iter().map(|&i| held[i]).collect();

    let mut pre = env.make_net(&cfg.hidden, cfg.seed, InitScheme::FanInUniform);
    train_single_task(&mut pre, &env, &cfg.train_schedule(), 0);

    // methods: meta100, r1e4@1e-2, r1e4@1e-3, r1e2@1e-2, r1e2@1e-3, native
    let labels = ["meta100", "r1e4@1e-2", "r1e4@1e-3", "r1e2@1e-2", "r1e2@1e-3", "native"];
    let mut per_dir = vec![vec![0.0f64; dirs.len()]; labels.len()];
    let mut per_seed = vec![vec![0.0f64; 5]; labels.len()];
    for seed in 1..=5u64 {
        for (d_i, dir) in dirs.iter().enumerate() {
            let env_w = env.with_cu(*dir);
            let base = derive_seed(seed, 0xC5, d_i as u64);
            let mut record = |m: usize, v: f64| {
                per_dir[m][d_i] += v / 5.0;
                per_seed[m][(seed - 1) as usize] += v / dirs.len() as f64;
            };
            let adapted = deploy_adapt(&meta_net, *dir, &env, 100, cfg.alpha, &mut seeded_rng(derive_seed(base, 1, 0)));
            record(0, secrecy_rate(&best_of_s(&adapted, &env_w, cfg.best_of, derive_seed(base, 2, 0)), &geom, &ofdm, *dir, eve));
            for (m, (steps, lr)) in [(10_000, 1e-2), (10_000, 1e-3), (100, 1e-2), (100, 1e-3)].iter().enumerate() {
                let mut net = pre.clone();
                train_single_task(&mut net, &env_w, &TrainSchedule::constant(*steps, *lr, derive_seed(base, 3 + 2 * m as u64, 0)), 0);
                record(1 + m, secrecy_rate(&best_of_s(&net, &env_w, cfg.best_of, derive_seed(base, 4 + 2 * m as u64, 0)), &geom, &ofdm, *dir, eve));
            }
            record(5, secrecy_rate(&best_of_s(&pre, &env_w, cfg.best_of, derive_seed(base, 11, 0)), &geom, &ofdm, *dir, eve));
        }
    }
    println!("per-direction means (distance from cu: {:?}):",
        dirs.iter().map(|d| format!("{:.1}", d.distance(&cfg.cu()))).collect::<Vec<_>>());
    for (m, label) in labels.iter().enumerate() {
        let vals: Vec<String> = per_dir[m].iter().map(|v| format!("{v:7.3}")).collect();
        let mean: f64 = per_seed[m].iter().sum::<f64>() / 5.0;
        let var: f64 = per_seed[m].iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
        println!("  {label:<10} [{}] mean {:.4} se {:.4}", vals.join(" "), mean, (var / 5.0).sqrt());
    }
}
