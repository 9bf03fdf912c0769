//! Bi-level training of a direction-general sampler: tasks are user
//! directions drawn from a disk, the inner loop runs a few trajectory-balance
//! updates per task, and the outer loop updates the shared initialization
//! with the first-order approximation of the meta-gradient.

use crate::gflownet::{TaskEnv, sample_trajectory, tb_loss_into, tb_residual};
use crate::mdp::Trajectory;
use crate::nn::{GradVector, ParamVector, PolicyNet, sgd_step};
use crate::rng::{derive_seed, seeded_rng};
use crate::signal::Direction;
use rand::Rng;
use rand::RngCore;
use rayon::prelude::*;

/// One task: a user direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionTask {
    pub cu: Direction,
}

/// Disk of user directions in (theta, phi) coordinates, degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskRegion {
    pub center: Direction,
    pub radius: f64,
}

impl TaskRegion {
    pub fn new(center: Direction, radius: f64) -> Self {
        assert!(radius >= 0.0, "radius must be nonnegative");
        Self { center, radius }
    }

    pub fn contains(&self, dir: &Direction) -> bool {
        dir.distance(&self.center) <= self.radius + 1e-9
    }
}

/// Meta-training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaConfig {
    /// Inner-loop learning rate alpha.
    pub alpha: f64,
    /// Outer-loop learning rate beta.
    pub beta: f64,
    pub k_sup: usize,
    pub k_qry: usize,
    /// Tasks per meta-update.
    pub task_batch: usize,
    pub meta_iters: usize,
    pub seed: u64,
    /// Exact meta-gradient through the inner loop via central finite
    /// differences; only permitted for k_sup <= 2 on small networks.
    pub second_order: bool,
    /// Stop on a plateau of the query-loss moving average
    /// (window 1000, relative improvement below 1e-3).
    pub early_stop: bool,
    /// Telemetry cadence in meta-iterations (0 = none).
    pub telemetry_every: usize,
    /// Fresh trajectories sampled under each adapted policy at logged
    /// iterations to estimate the adapted reward (0 = skip).
    pub eval_samples: usize,
}

impl MetaConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if self.alpha < 0.0 || self.beta < 0.0 {
            return Err(crate::Error::Validation(
                "learning rates must be nonnegative".into(),
            ));
        }
        if self.task_batch == 0 {
            return Err(crate::Error::Validation("task_batch must be ≥ 1".into()));
        }
        if self.k_qry == 0 {
            return Err(crate::Error::Validation("k_qry must be ≥ 1".into()));
        }
        if self.second_order && self.k_sup > 2 {
            return Err(crate::Error::Validation(
                "second_order meta-gradients are only supported for k_sup ≤ 2".into(),
            ));
        }
        Ok(())
    }
}

const PLATEAU_WINDOW: usize = 1000;
const PLATEAU_REL_IMPROVEMENT: f64 = 1e-3;
/// Parameter-count guard for the finite-difference meta-gradient.
const SECOND_ORDER_MAX_PARAMS: usize = 4096;

/// Draw a direction uniformly over the disk (area-uniform).
pub fn sample_task(region: &TaskRegion, rng: &mut impl Rng) -> DirectionTask {
    let r = region.radius * rng.random::<f64>().sqrt();
    let angle = std::f64::consts::TAU * rng.random::<f64>();
    DirectionTask {
        cu: Direction::new(
            region.center.theta + r * angle.cos(),
            region.center.phi + r * angle.sin(),
        ),
    }
}

/// Sample the support and query sets for one task under the current
/// meta-parameters (both sets are drawn before any inner update).
pub fn build_sets(
    net: &PolicyNet,
    task: &DirectionTask,
    env_template: &TaskEnv,
    k_sup: usize,
    k_qry: usize,
    rng: &mut impl Rng,
) -> (Vec<Trajectory>, Vec<Trajectory>) {
    let env = env_template.with_cu(task.cu);
    let support = (0..k_sup)
        .map(|_| sample_trajectory(net, &env, rng))
        .collect();
    let query = (0..k_qry)
        .map(|_| sample_trajectory(net, &env, rng))
        .collect();
    (support, query)
}

/// Working-copy adaptation shared by [`inner_adapt`] and [`deploy_adapt`]:
/// one gradient update per support trajectory, each loss recomputed at the
/// current parameters.
fn adapt_net(net: &PolicyNet, support: &[Trajectory], env: &TaskEnv, alpha: f64) -> PolicyNet {
    let mut work = net.clone();
    let mut grads = vec![0.0; work.param_count()];
    for traj in support {
        grads.fill(0.0);
        tb_loss_into(&work, traj, env, &mut grads);
        work.apply_gradients(&grads, alpha);
    }
    work
}

/// Sequential inner-loop adaptation: one gradient update per support
/// trajectory, each loss recomputed at the current parameters. The source
/// network is never mutated.
pub fn inner_adapt(
    net: &PolicyNet,
    support: &[Trajectory],
    env: &TaskEnv,
    alpha: f64,
) -> ParamVector {
    adapt_net(net, support, env, alpha).get_params()
}

/// Mean TB loss of the query set at the network's current parameters.
/// Panics on an empty query set.
pub fn query_loss(net: &PolicyNet, query: &[Trajectory], env: &TaskEnv) -> f64 {
    assert!(!query.is_empty(), "empty query set");
    let total: f64 = query
        .iter()
        .map(|t| tb_residual(net, t, env).powi(2))
        .sum();
    total / query.len() as f64
}

/// Mean TB loss and its gradient over the query set: per-trajectory
/// gradients are summed in order, then scaled once by 1/len.
pub fn query_grad(net: &PolicyNet, query: &[Trajectory], env: &TaskEnv) -> (f64, GradVector) {
    assert!(!query.is_empty(), "empty query set");
    let mut grads = vec![0.0; net.param_count()];
    let mut total = 0.0;
    for traj in query {
        total += tb_loss_into(net, traj, env, &mut grads);
    }
    let scale = 1.0 / query.len() as f64;
    for g in &mut grads {
        *g *= scale;
    }
    (total * scale, grads)
}

/// Outcome of one meta-update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetaStepStats {
    pub mean_query_loss: f64,
    /// Present when adapted-policy evaluation was requested.
    pub mean_adapted_reward: Option<f64>,
}

struct TaskOutcome {
    query_loss: f64,
    meta_grad: GradVector,
    adapted_reward: f64,
}

fn run_task(
    omega: &PolicyNet,
    task: &DirectionTask,
    env_template: &TaskEnv,
    cfg: &MetaConfig,
    task_seed: u64,
    eval_adapted: bool,
) -> TaskOutcome {
    let env = env_template.with_cu(task.cu);
    let mut rng = seeded_rng(task_seed);
    let (support, query) = build_sets(omega, task, env_template, cfg.k_sup, cfg.k_qry, &mut rng);
    let (query_loss_value, meta_grad) = if cfg.second_order {
        second_order_meta_grad(omega, &support, &query, &env, cfg.alpha)
    } else {
        // First-order approximation: the query gradient at the adapted
        // parameters is applied to the meta-parameters directly.
        let adapted = adapt_net(omega, &support, &env, cfg.alpha);
        query_grad(&adapted, &query, &env)
    };
    let adapted_reward = if eval_adapted && cfg.eval_samples > 0 {
        let adapted = adapt_net(omega, &support, &env, cfg.alpha);
        let mut eval_rng = seeded_rng(derive_seed(task_seed, 0xE7A1, 0));
        let total: f64 = (0..cfg.eval_samples)
            .map(|_| sample_trajectory(&adapted, &env, &mut eval_rng).reward)
            .sum();
        total / cfg.eval_samples as f64
    } else {
        f64::NAN
    };
    TaskOutcome {
        query_loss: query_loss_value,
        meta_grad,
        adapted_reward,
    }
}

/// Exact meta-gradient d/d omega of query_loss(inner_adapt(omega)) by
/// central finite differences; validation tool for tiny networks.
fn second_order_meta_grad(
    omega: &PolicyNet,
    support: &[Trajectory],
    query: &[Trajectory],
    env: &TaskEnv,
    alpha: f64,
) -> (f64, GradVector) {
    assert!(
        support.len() <= 2,
        "second-order meta-gradients are limited to k_sup ≤ 2"
    );
    assert!(
        omega.param_count() <= SECOND_ORDER_MAX_PARAMS,
        "second-order meta-gradients are limited to small networks"
    );
    let pipeline = |params: &[f64]| -> f64 {
        let mut net = omega.clone();
        net.set_params(params);
        let phi = inner_adapt(&net, support, env, alpha);
        net.set_params(&phi);
        query_loss(&net, query, env)
    };
    let base_params = omega.get_params();
    let loss = pipeline(&base_params);
    let h = 1e-5;
    let mut grad = vec![0.0; base_params.len()];
    let mut probe = base_params.clone();
    for i in 0..base_params.len() {
        probe[i] = base_params[i] + h;
        let plus = pipeline(&probe);
        probe[i] = base_params[i] - h;
        let minus = pipeline(&probe);
        probe[i] = base_params[i];
        grad[i] = (plus - minus) / (2.0 * h);
    }
    (loss, grad)
}

/// One outer update over a batch of tasks. Per-task seeds are drawn from
/// `rng` in task order before any work runs; tasks then execute in parallel
/// and reduce in task-index order (sum of per-task mean gradients, scaled
/// once by 1/batch), so results are independent of thread count.
pub fn meta_step(
    net: &mut PolicyNet,
    tasks: &[DirectionTask],
    env_template: &TaskEnv,
    cfg: &MetaConfig,
    rng: &mut impl RngCore,
    eval_adapted: bool,
) -> MetaStepStats {
    assert!(!tasks.is_empty(), "empty task batch");
    let task_seeds: Vec<u64> = tasks.iter().map(|_| rng.next_u64()).collect();
    let omega = net.clone();
    let outcomes: Vec<TaskOutcome> = tasks
        .par_iter()
        .zip(task_seeds.par_iter())
        .map(|(task, &seed)| run_task(&omega, task, env_template, cfg, seed, eval_adapted))
        .collect();
    let mut meta_grad = vec![0.0; net.param_count()];
    let mut loss_total = 0.0;
    let mut reward_total = 0.0;
    for outcome in &outcomes {
        for (m, g) in meta_grad.iter_mut().zip(&outcome.meta_grad) {
            *m += g;
        }
        loss_total += outcome.query_loss;
        reward_total += outcome.adapted_reward;
    }
    let scale = 1.0 / tasks.len() as f64;
    for m in &mut meta_grad {
        *m *= scale;
    }
    let updated = sgd_step(&net.get_params(), &meta_grad, cfg.beta);
    net.set_params(&updated);
    MetaStepStats {
        mean_query_loss: loss_total * scale,
        mean_adapted_reward: if eval_adapted && cfg.eval_samples > 0 {
            Some(reward_total * scale)
        } else {
            None
        },
    }
}

/// Callback receiving periodic checkpoints during meta-training.
pub type CheckpointSink<'a> = &'a mut dyn FnMut(usize, &PolicyNet);

/// One telemetry row per logged meta-iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetaTelemetryRow {
    pub meta_iter: usize,
    pub mean_query_loss: f64,
    pub mean_adapted_reward: f64,
}

/// Full meta-training loop: sample a task batch, run [`meta_step`], repeat
/// for `cfg.meta_iters` (or until an optional plateau). Deterministic per
/// `(cfg.seed, cfg, region)`. `on_checkpoint` is invoked every
/// `checkpoint_every` iterations when nonzero.
pub fn meta_train(
    region: &TaskRegion,
    env_template: &TaskEnv,
    cfg: &MetaConfig,
    hidden: &[usize],
    checkpoint_every: usize,
    mut on_checkpoint: Option<CheckpointSink<'_>>,
) -> (PolicyNet, Vec<MetaTelemetryRow>) {
    cfg.validate().expect("meta configuration");
    let mut net = env_template.make_net(hidden, cfg.seed, crate::nn::InitScheme::FanInUniform);
    let mut rng = seeded_rng(derive_seed(cfg.seed, 0x4D45_5441, 1));
    let mut telemetry = Vec::new();
    let mut window: Vec<f64> = Vec::new();
    let mut prev_window_mean: Option<f64> = None;
    for iter in 0..cfg.meta_iters {
        let tasks: Vec<DirectionTask> = (0..cfg.task_batch)
            .map(|_| sample_task(region, &mut rng))
            .collect();
        let log_now = cfg.telemetry_every > 0 && (iter + 1) % cfg.telemetry_every == 0;
        let stats = meta_step(&mut net, &tasks, env_template, cfg, &mut rng, log_now);
        if log_now {
            telemetry.push(MetaTelemetryRow {
                meta_iter: iter + 1,
                mean_query_loss: stats.mean_query_loss,
                mean_adapted_reward: stats.mean_adapted_reward.unwrap_or(f64::NAN),
            });
        }
        if checkpoint_every > 0
            && (iter + 1) % checkpoint_every == 0
            && let Some(cb) = on_checkpoint.as_deref_mut()
        {
            cb(iter + 1, &net);
        }
        if cfg.early_stop {
            window.push(stats.mean_query_loss);
            if window.len() == PLATEAU_WINDOW {
                let mean = window.iter().sum::<f64>() / window.len() as f64;
                if let Some(prev) = prev_window_mean
                    && prev.is_finite()
                    && (prev - mean) / prev.abs().max(1e-12) < PLATEAU_REL_IMPROVEMENT
                {
                    break;
                }
                prev_window_mean = Some(mean);
                window.clear();
            }
        }
    }
    (net, telemetry)
}

/// Deployment-time fast adaptation: sample `k_sup` fresh trajectories at the
/// new direction under the meta-parameters, then run the inner loop on them.
pub fn deploy_adapt(
    net: &PolicyNet,
    new_direction: Direction,
    env_template: &TaskEnv,
    k_sup: usize,
    alpha: f64,
    rng: &mut impl Rng,
) -> PolicyNet {
    let env = env_template.with_cu(new_direction);
    let support: Vec<Trajectory> = (0..k_sup)
        .map(|_| sample_trajectory(net, &env, rng))
        .collect();
    adapt_net(net, &support, &env, alpha)
}
