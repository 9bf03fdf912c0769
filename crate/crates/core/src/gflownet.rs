//! Trajectory-balance training over the assignment MDP: sampling, the TB
//! loss and its exact gradients, the flow-implied reward, and single-task
//! (fixed-direction) training.

use crate::mdp::{
    AssignmentState, DiscretizationGrid, Trajectory, apply_action, decode_terminal,
    encode_state_into,
};
use crate::nn::{GradVector, PolicyNet, block_log_softmax};
use crate::rng::seeded_rng;
use crate::signal::{Direction, OfdmSpec, SystemGeometry, TmIrsConfig, effective_sum_rate};
use rand::Rng;
use std::collections::BTreeMap;

/// Everything needed to sample and score trajectories for one user direction.
///
/// `cu` is the direction rewards are evaluated at; `steer` is the direction
/// the fixed phase profile points at. Single-task training keeps them equal.
/// Under user motion the profile stays anchored at the initial direction
/// while `cu` tracks the user, which is what makes directions distinct tasks.
#[derive(Debug, Clone)]
pub struct TaskEnv {
    pub geom: SystemGeometry,
    pub ofdm: OfdmSpec,
    pub grid: DiscretizationGrid,
    pub cu: Direction,
    pub eve: Direction,
    pub steer: Direction,
    pub r_floor: f64,
}

impl TaskEnv {
    pub fn new(
        geom: SystemGeometry,
        ofdm: OfdmSpec,
        grid: DiscretizationGrid,
        cu: Direction,
        eve: Direction,
        r_floor: f64,
    ) -> Self {
        assert!(r_floor > 0.0, "reward floor must be positive");
        Self {
            geom,
            ofdm,
            grid,
            cu,
            eve,
            steer: cu,
            r_floor,
        }
    }

    /// Re-anchor the phase profile (kept fixed across tasks under mobility).
    pub fn with_steer(mut self, steer: Direction) -> Self {
        self.steer = steer;
        self
    }

    /// Same environment evaluated at a different user direction.
    pub fn with_cu(&self, cu: Direction) -> Self {
        let mut env = self.clone();
        env.cu = cu;
        env
    }

    /// Trajectory length T = 2 * M_x * M_z.
    pub fn n_slots(&self) -> usize {
        2 * self.geom.n_elements()
    }

    /// Size of each policy head: one logit per (slot, level) pair.
    pub fn n_actions(&self) -> usize {
        self.n_slots() * self.grid.q()
    }

    /// Network input width (equals `n_actions` for the binary encoding).
    pub fn input_dim(&self) -> usize {
        self.n_actions()
    }

    /// Floored training reward of a terminal configuration.
    pub fn reward(&self, cfg: &TmIrsConfig) -> f64 {
        effective_sum_rate(cfg, &self.geom, &self.ofdm, self.cu).max(self.r_floor)
    }

    /// Decode a terminal state with this environment's phase anchor.
    pub fn decode(&self, state: &AssignmentState) -> TmIrsConfig {
        decode_terminal(state, &self.grid, &self.geom, self.steer)
            .expect("terminal state decodes")
    }

    /// Policy network sized for this environment.
    pub fn make_net(&self, hidden: &[usize], seed: u64, scheme: crate::nn::InitScheme) -> PolicyNet {
        PolicyNet::init(self.input_dim(), hidden, self.n_actions(), seed, scheme)
    }
}

/// Sample one complete trajectory from the masked forward policy.
pub fn sample_trajectory(net: &PolicyNet, env: &TaskEnv, rng: &mut impl Rng) -> Trajectory {
    let t_steps = env.n_slots();
    let q = env.grid.q();
    let mut state = AssignmentState::initial(&env.geom);
    let mut input = vec![0.0; env.input_dim()];
    let mut actions = Vec::with_capacity(t_steps);
    let mut logpf_terms = Vec::with_capacity(t_steps);
    for _ in 0..t_steps {
        encode_state_into(&state, &env.grid, &mut input);
        let pass = net.forward(&input);
        let block = state.cursor() * q;
        let logp = block_log_softmax(pass.forward_logits(), block, q);
        // Inverse-CDF draw over the legal block.
        let u: f64 = rng.random();
        let mut cum = 0.0;
        let mut chosen = q - 1;
        for (lvl, lp) in logp.iter().enumerate() {
            cum += lp.exp();
            if u < cum {
                chosen = lvl;
                break;
            }
        }
        actions.push(chosen as u8);
        logpf_terms.push(logp[chosen]);
        state = apply_action(&state, chosen as u8, &env.grid).expect("legal action");
    }
    let terminal = env.decode(&state);
    let reward = env.reward(&terminal);
    Trajectory {
        actions,
        logpf_terms,
        logpb_terms: vec![0.0; t_steps],
        terminal,
        reward,
    }
}

/// Signed trajectory-balance residual
/// log Z + sum log P_F - log R - sum log P_B, with the forward log-probs
/// recomputed under the current parameters. The TB loss is its square.
pub fn tb_residual(net: &PolicyNet, traj: &Trajectory, env: &TaskEnv) -> f64 {
    let q = env.grid.q();
    let mut state = AssignmentState::initial(&env.geom);
    let mut input = vec![0.0; env.input_dim()];
    let mut sum_logpf = 0.0;
    for (step, &action) in traj.actions.iter().enumerate() {
        encode_state_into(&state, &env.grid, &mut input);
        let pass = net.forward(&input);
        let logp = block_log_softmax(pass.forward_logits(), step * q, q);
        sum_logpf += logp[action as usize];
        state = apply_action(&state, action, &env.grid).expect("legal action");
    }
    let sum_logpb: f64 = traj.logpb_terms.iter().sum();
    net.log_z() + sum_logpf - traj.reward.ln() - sum_logpb
}

/// TB loss and its exact gradient for one trajectory.
pub fn tb_loss(net: &PolicyNet, traj: &Trajectory, env: &TaskEnv) -> (f64, GradVector) {
    let mut grads = vec![0.0; net.param_count()];
    let loss = tb_loss_into(net, traj, env, &mut grads);
    (loss, grads)
}

/// Accumulating variant of [`tb_loss`]: adds this trajectory's gradient into
/// `grads` and returns the loss.
pub fn tb_loss_into(
    net: &PolicyNet,
    traj: &Trajectory,
    env: &TaskEnv,
    grads: &mut [f64],
) -> f64 {
    let q = env.grid.q();
    let t_steps = traj.actions.len();
    let n_actions = net.n_actions();
    // Forward sweep: cache one pass per step plus the per-step log-softmax.
    let mut passes = Vec::with_capacity(t_steps);
    let mut logps = Vec::with_capacity(t_steps);
    let mut state = AssignmentState::initial(&env.geom);
    let mut input = vec![0.0; env.input_dim()];
    let mut sum_logpf = 0.0;
    for (step, &action) in traj.actions.iter().enumerate() {
        encode_state_into(&state, &env.grid, &mut input);
        let pass = net.forward(&input);
        let logp = block_log_softmax(pass.forward_logits(), step * q, q);
        sum_logpf += logp[action as usize];
        passes.push(pass);
        logps.push(logp);
        state = apply_action(&state, action, &env.grid).expect("legal action");
    }
    let sum_logpb: f64 = traj.logpb_terms.iter().sum();
    let residual = net.log_z() + sum_logpf - traj.reward.ln() - sum_logpb;
    let loss = residual * residual;
    // d loss / d logit_j at step t: 2*residual * (1[j = a_t] - p_j) on the
    // legal block, zero elsewhere; d loss / d log Z = 2*residual.
    let scale = 2.0 * residual;
    let zero_bwd = vec![0.0; n_actions];
    for (step, (pass, logp)) in passes.iter().zip(&logps).enumerate() {
        let mut up_f = vec![0.0; n_actions];
        let base = step * q;
        for (lvl, lp) in logp.iter().enumerate() {
            let indicator = if lvl == traj.actions[step] as usize {
                1.0
            } else {
                0.0
            };
            up_f[base + lvl] = scale * (indicator - lp.exp());
        }
        // log Z contributes once, attached to the first step.
        let g_log_z = if step == 0 { scale } else { 0.0 };
        net.backprop_into(pass, &up_f, &zero_bwd, g_log_z, grads);
    }
    if t_steps == 0 {
        let last = grads.len() - 1;
        grads[last] += scale;
    }
    loss
}

/// Flow-implied reward R' = Z * prod P_F / prod P_B, computed in log space
/// under the current parameters and exponentiated.
pub fn flow_implied_reward(net: &PolicyNet, traj: &Trajectory, env: &TaskEnv) -> f64 {
    let log_r_prime = tb_residual(net, traj, env) + traj.reward.ln();
    log_r_prime.exp()
}

/// Piecewise-constant learning-rate schedule over a trajectory budget.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSchedule {
    /// (trajectory count, learning rate) segments, applied in order.
    pub segments: Vec<(usize, f64)>,
    pub seed: u64,
}

impl TrainSchedule {
    pub fn new(segments: Vec<(usize, f64)>, seed: u64) -> Self {
        assert!(
            segments.iter().all(|&(_, lr)| lr > 0.0),
            "learning rates must be positive"
        );
        Self { segments, seed }
    }

    /// Single-segment schedule.
    pub fn constant(n: usize, lr: f64, seed: u64) -> Self {
        Self::new(vec![(n, lr)], seed)
    }

    pub fn n_trajectories(&self) -> usize {
        self.segments.iter().map(|&(n, _)| n).sum()
    }

    /// Learning rate for the i-th trajectory.
    pub fn lr_at(&self, index: usize) -> f64 {
        let mut start = 0;
        for &(n, lr) in &self.segments {
            if index < start + n {
                return lr;
            }
            start += n;
        }
        self.segments.last().map(|&(_, lr)| lr).unwrap_or(0.0)
    }
}

/// One row of training telemetry, emitted every `telemetry_every`
/// trajectories with values averaged over the elapsed window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryRow {
    pub trajectory_index: usize,
    pub tb_loss: f64,
    pub reward: f64,
}

/// On-policy single-task TB training: sample, compute the loss, step.
/// Deterministic per `(schedule.seed, net)`.
pub fn train_single_task(
    net: &mut PolicyNet,
    env: &TaskEnv,
    schedule: &TrainSchedule,
    telemetry_every: usize,
) -> Vec<TelemetryRow> {
    let mut rng = seeded_rng(schedule.seed);
    let total = schedule.n_trajectories();
    let mut telemetry = Vec::new();
    let mut window_loss = 0.0;
    let mut window_reward = 0.0;
    let mut window_n = 0usize;
    let mut grads = vec![0.0; net.param_count()];
    for i in 0..total {
        let traj = sample_trajectory(net, env, &mut rng);
        grads.fill(0.0);
        let loss = tb_loss_into(net, &traj, env, &mut grads);
        net.apply_gradients(&grads, schedule.lr_at(i));
        window_loss += loss;
        window_reward += traj.reward;
        window_n += 1;
        if telemetry_every > 0 && (i + 1) % telemetry_every == 0 {
            telemetry.push(TelemetryRow {
                trajectory_index: i + 1,
                tb_loss: window_loss / window_n as f64,
                reward: window_reward / window_n as f64,
            });
            window_loss = 0.0;
            window_reward = 0.0;
            window_n = 0;
        }
    }
    telemetry
}

/// Relative frequency of each decoded terminal over `n_samples` policy
/// samples, keyed by the level assignment.
pub fn empirical_terminal_distribution(
    net: &PolicyNet,
    env: &TaskEnv,
    n_samples: usize,
    seed: u64,
) -> BTreeMap<Vec<u8>, f64> {
    let mut counts: BTreeMap<Vec<u8>, u64> = BTreeMap::new();
    let mut rng = seeded_rng(seed);
    for _ in 0..n_samples {
        let traj = sample_trajectory(net, env, &mut rng);
        *counts.entry(traj.actions).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .map(|(k, c)| (k, c as f64 / n_samples as f64))
        .collect()
}

/// Sample `s` trajectories and return the configuration with the highest
/// actual reward (first maximum on ties). Deterministic per seed.
pub fn best_of_s(net: &PolicyNet, env: &TaskEnv, s: usize, seed: u64) -> TmIrsConfig {
    assert!(s >= 1, "need at least one sample");
    let mut rng = seeded_rng(seed);
    let mut best: Option<(f64, TmIrsConfig)> = None;
    for _ in 0..s {
        let traj = sample_trajectory(net, env, &mut rng);
        if best.as_ref().is_none_or(|(r, _)| traj.reward > *r) {
            best = Some((traj.reward, traj.terminal));
        }
    }
    best.unwrap().1
}
