use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use tmirs::error::{Error, Result};
use tmirs::gflownet::train_single_task;
use tmirs::harness::csvio::{build_csv, cell};
use tmirs::harness::{
    AdaptMethod, ScenarioConfig, gen_motion_path, run_grad_check, run_heatmap, run_manifest,
    run_motion_eval, run_oracle_check,
};
use tmirs::meta::meta_train;
use tmirs::nn::{CheckpointMeta, InitScheme, save_checkpoint};

#[derive(Parser)]
#[command(
    name = "tmirs",
    version,
    about = "Time-modulated IRS directional modulation: train samplers, adapt them across user directions, and emit deterministic experiment artifacts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Base scenario: 'paper' (published constants) or 'desk' (laptop scale).
    #[arg(long, global = true, default_value = "paper")]
    preset: String,
    /// Key/value config file applied over the preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Trained checkpoint consumed by evaluation subcommands.
    #[arg(long, global = true)]
    checkpoint: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Train the single-task sampler at the configured user direction.
    Train,
    /// Meta-train the direction-general initialization over the task region.
    MetaTrain,
    /// Evaluate a checkpoint's best configuration as an SER heatmap CSV.
    Heatmap {
        /// Grid spacing in degrees (must divide 180); defaults to the config.
        #[arg(long)]
        resolution: Option<u32>,
    },
    /// Secrecy rate along the motion path for one adaptation method.
    MotionEval {
        /// native, retrain:N or meta:K.
        #[arg(long)]
        method: String,
        /// Meta-trained checkpoint (required by meta:K).
        #[arg(long)]
        meta_checkpoint: Option<PathBuf>,
    },
    /// Train on an enumerable instance and validate reward-proportional
    /// sampling against exhaustive enumeration.
    OracleCheck,
    /// Validate analytic gradients against central finite differences.
    GradCheck {
        /// Deliberately corrupt one gradient coordinate (negative control).
        #[arg(long)]
        corrupt: bool,
        /// Number of random network/trajectory pairs.
        #[arg(long, default_value_t = 20)]
        pairs: usize,
    },
    /// Print the fully resolved configuration.
    ShowConfig,
}

fn resolve_config(cli: &Cli) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::preset(&cli.preset)?;
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn write_run_records(cli: &Cli, cfg: &ScenarioConfig) -> Result<()> {
    let cmd: Vec<String> = std::env::args().collect();
    write_artifact(&cli.out, "config_resolved.txt", &cfg.save_string())?;
    write_artifact(&cli.out, "manifest.json", &run_manifest(&cmd, cfg))?;
    Ok(())
}

fn require_checkpoint(cli: &Cli) -> Result<&Path> {
    cli.checkpoint
        .as_deref()
        .ok_or_else(|| Error::Validation("--checkpoint is required".into()))
}

fn cmd_train(cli: &Cli, cfg: &ScenarioConfig) -> Result<()> {
    let env = cfg.env();
    let mut net = env.make_net(&cfg.hidden, cfg.seed, InitScheme::FanInUniform);
    let telemetry = train_single_task(&mut net, &env, &cfg.train_schedule(), cfg.telemetry_every);
    let csv = build_csv(
        &["trajectory_index", "tb_loss", "reward"],
        telemetry
            .iter()
            .map(|r| vec![r.trajectory_index.to_string(), cell(r.tb_loss), cell(r.reward)]),
    );
    write_artifact(&cli.out, "train_telemetry.csv", &csv)?;
    let ckpt = cli.out.join("single.ckpt");
    save_checkpoint(
        &ckpt,
        &net,
        &CheckpointMeta {
            tag: "single".into(),
            seed: cfg.seed,
            fingerprint: cfg.fingerprint(),
        },
    )?;
    write_run_records(cli, cfg)?;
    println!(
        "trained {} trajectories at ({}, {}); checkpoint {}",
        cfg.train_schedule().n_trajectories(),
        cfg.cu_theta,
        cfg.cu_phi,
        ckpt.display()
    );
    Ok(())
}

fn cmd_meta_train(cli: &Cli, cfg: &ScenarioConfig) -> Result<()> {
    let env = cfg.env();
    let region = cfg.region();
    let meta_cfg = cfg.meta_config();
    std::fs::create_dir_all(&cli.out)?;
    let out_dir = cli.out.clone();
    let fingerprint = cfg.fingerprint();
    let seed = cfg.seed;
    let mut save_periodic = move |iter: usize, net: &tmirs::PolicyNet| {
        let path = out_dir.join(format!("meta_{iter}.ckpt"));
        let _ = save_checkpoint(
            &path,
            net,
            &CheckpointMeta {
                tag: "meta".into(),
                seed,
                fingerprint,
            },
        );
    };
    let (net, telemetry) = meta_train(
        &region,
        &env,
        &meta_cfg,
        &cfg.hidden,
        cfg.checkpoint_every,
        Some(&mut save_periodic),
    );
    let csv = build_csv(
        &["meta_iter", "mean_query_loss", "mean_adapted_reward"],
        telemetry.iter().map(|r| {
            vec![
                r.meta_iter.to_string(),
                cell(r.mean_query_loss),
                cell(r.mean_adapted_reward),
            ]
        }),
    );
    write_artifact(&cli.out, "meta_telemetry.csv", &csv)?;
    let ckpt = cli.out.join("meta.ckpt");
    save_checkpoint(
        &ckpt,
        &net,
        &CheckpointMeta {
            tag: "meta".into(),
            seed: cfg.seed,
            fingerprint: cfg.fingerprint(),
        },
    )?;
    write_run_records(cli, cfg)?;
    println!(
        "meta-trained {} iterations over ({}, {}) r={}°; checkpoint {}",
        meta_cfg.meta_iters,
        cfg.region_theta,
        cfg.region_phi,
        cfg.region_radius,
        ckpt.display()
    );
    Ok(())
}

fn cmd_heatmap(cli: &Cli, cfg: &ScenarioConfig, resolution: Option<u32>) -> Result<()> {
    let ckpt = require_checkpoint(cli)?;
    let resolution = resolution.unwrap_or(cfg.heatmap_resolution);
    let csv = run_heatmap(cfg, ckpt, resolution)?;
    let path = write_artifact(&cli.out, "heatmap.csv", &csv)?;
    write_run_records(cli, cfg)?;
    println!(
        "heatmap at {resolution}° resolution ({} cells) -> {}",
        csv.lines().count() - 1,
        path.display()
    );
    Ok(())
}

fn cmd_motion_eval(
    cli: &Cli,
    cfg: &ScenarioConfig,
    method: &str,
    meta_checkpoint: Option<&Path>,
) -> Result<()> {
    let method = AdaptMethod::parse(method)?;
    let path = gen_motion_path(
        cfg.cu(),
        cfg.path_to(),
        cfg.path_waypoints,
        cfg.path_curvature,
    );
    let csv = run_motion_eval(cfg, method, &path, cli.checkpoint.as_deref(), meta_checkpoint)?;
    let name = format!("motion_{}.csv", method.label());
    let out = write_artifact(&cli.out, &name, &csv)?;
    write_run_records(cli, cfg)?;
    println!(
        "motion path {:.2}° over {} waypoints, method {} -> {}",
        path.total_angle(),
        path.waypoints.len(),
        method.label(),
        out.display()
    );
    Ok(())
}

fn cmd_oracle_check(cli: &Cli, cfg: &ScenarioConfig) -> Result<()> {
    let report = run_oracle_check(cfg)?;
    write_artifact(&cli.out, "oracle_table.csv", &report.table_csv())?;
    write_run_records(cli, cfg)?;
    println!(
        "oracle check: {} terminals, L1 distance {:.6} (threshold {})",
        report.n_terminals, report.l1, report.threshold
    );
    if report.pass {
        println!("oracle check: PASS");
        Ok(())
    } else {
        Err(Error::CheckFailed(format!(
            "empirical distribution L1 {:.6} ≥ {}",
            report.l1, report.threshold
        )))
    }
}

fn cmd_grad_check(cfg: &ScenarioConfig, corrupt: bool, pairs: usize) -> Result<()> {
    let report = run_grad_check(cfg.seed, pairs, corrupt);
    println!(
        "gradient check: {} pairs, max relative error {:.3e} (tolerance {:.0e})",
        report.n_pairs,
        report.max_rel_err,
        tmirs::harness::GRAD_CHECK_TOL
    );
    if report.pass {
        println!("gradient check: PASS");
        Ok(())
    } else {
        Err(Error::CheckFailed(format!(
            "max relative gradient error {:.3e}",
            report.max_rel_err
        )))
    }
}

fn run(cli: &Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
    }
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Train => cmd_train(cli, &cfg),
        Command::MetaTrain => cmd_meta_train(cli, &cfg),
        Command::Heatmap { resolution } => cmd_heatmap(cli, &cfg, *resolution),
        Command::MotionEval {
            method,
            meta_checkpoint,
        } => cmd_motion_eval(cli, &cfg, method, meta_checkpoint.as_deref()),
        Command::OracleCheck => cmd_oracle_check(cli, &cfg),
        Command::GradCheck { corrupt, pairs } => cmd_grad_check(&cfg, *corrupt, *pairs),
        Command::ShowConfig => {
            print!("{}", cfg.save_string());
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
