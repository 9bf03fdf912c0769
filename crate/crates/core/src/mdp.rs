//! Deterministic assignment MDP over discretized switching parameters.
//!
//! Slots are filled in a fixed canonical order: all turn-on times by element
//! index, then all on-durations. The state graph is therefore a tree, every
//! trajectory has exactly T = 2 * M_x * M_z steps, and the backward policy is
//! identically 1.

use crate::error::{Error, Result};
use crate::signal::{Direction, OfdmSpec, SystemGeometry, TmIrsConfig, default_phase_profile, effective_sum_rate};

/// Uniform grid of Q levels {0, 1/Q, ..., (Q-1)/Q} over [0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationGrid {
    q_levels: usize,
    values: Vec<f64>,
}

impl DiscretizationGrid {
    pub fn new(q_levels: usize) -> Result<Self> {
        if q_levels < 2 {
            return Err(Error::Validation("q_levels must be ≥ 2".into()));
        }
        let values = (0..q_levels).map(|i| i as f64 / q_levels as f64).collect();
        Ok(Self { q_levels, values })
    }

    pub fn q(&self) -> usize {
        self.q_levels
    }

    pub fn value(&self, level: u8) -> f64 {
        self.values[level as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Partially assigned parameter vector. Slots [0, cursor) hold level indices;
/// the rest are unassigned.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentState {
    slots: Vec<Option<u8>>,
    cursor: usize,
}

impl AssignmentState {
    /// Empty root state for the geometry's 2 * M_x * M_z slots.
    pub fn initial(geom: &SystemGeometry) -> Self {
        Self {
            slots: vec![None; 2 * geom.n_elements()],
            cursor: 0,
        }
    }

    pub fn n_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn is_terminal(&self) -> bool {
        self.cursor == self.slots.len()
    }

    pub fn slot(&self, idx: usize) -> Option<u8> {
        self.slots[idx]
    }

    /// Terminal state directly from a level assignment.
    pub fn from_levels(levels: &[u8]) -> Self {
        Self {
            slots: levels.iter().map(|&l| Some(l)).collect(),
            cursor: levels.len(),
        }
    }
}

/// Binary encoding of a state: slot t at level q sets bit t*Q + q; unassigned
/// slots contribute all-zero blocks. Exactly `cursor` entries are 1.
pub fn encode_state(state: &AssignmentState, grid: &DiscretizationGrid) -> Vec<f64> {
    let mut out = vec![0.0; state.n_slots() * grid.q()];
    encode_state_into(state, grid, &mut out);
    out
}

/// In-place variant of [`encode_state`] for hot loops.
pub fn encode_state_into(state: &AssignmentState, grid: &DiscretizationGrid, out: &mut [f64]) {
    assert_eq!(out.len(), state.n_slots() * grid.q(), "encode buffer size");
    out.fill(0.0);
    for (t, slot) in state.slots.iter().enumerate() {
        if let Some(level) = slot {
            out[t * grid.q() + *level as usize] = 1.0;
        }
    }
}

/// Legal actions: every level for the cursor slot; empty iff terminal.
pub fn legal_actions(state: &AssignmentState, grid: &DiscretizationGrid) -> Vec<u8> {
    if state.is_terminal() {
        Vec::new()
    } else {
        (0..grid.q() as u8).collect()
    }
}

/// Assign `level` to the cursor slot, advancing the cursor.
pub fn apply_action(
    state: &AssignmentState,
    level: u8,
    grid: &DiscretizationGrid,
) -> Result<AssignmentState> {
    if state.is_terminal() {
        return Err(Error::Validation(
            "cannot apply an action to a terminal state".into(),
        ));
    }
    if level as usize >= grid.q() {
        return Err(Error::Validation(format!(
            "level {level} out of range for Q={}",
            grid.q()
        )));
    }
    let mut next = state.clone();
    next.slots[next.cursor] = Some(level);
    next.cursor += 1;
    Ok(next)
}

/// Decode a terminal state: the first M_x*M_z slots are turn-on times, the
/// rest on-durations, both via grid lookup. Phases come from the profile
/// steered at `steer` (they are excluded from the sampled parameters).
pub fn decode_terminal(
    state: &AssignmentState,
    grid: &DiscretizationGrid,
    geom: &SystemGeometry,
    steer: Direction,
) -> Result<TmIrsConfig> {
    if !state.is_terminal() {
        return Err(Error::Validation(format!(
            "state with cursor {} of {} is not terminal",
            state.cursor,
            state.n_slots()
        )));
    }
    let n = geom.n_elements();
    assert_eq!(state.n_slots(), 2 * n, "state/geometry slot mismatch");
    let tau_on = (0..n)
        .map(|el| grid.value(state.slots[el].unwrap()))
        .collect();
    let delta_tau = (0..n)
        .map(|el| grid.value(state.slots[n + el].unwrap()))
        .collect();
    Ok(TmIrsConfig {
        tau_on,
        delta_tau,
        phase: default_phase_profile(geom, steer),
    })
}

/// One step of a sampled trajectory plus its terminal payload.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Level index chosen at each step, in assignment order.
    pub actions: Vec<u8>,
    /// Per-step forward log-probabilities at sampling time.
    pub logpf_terms: Vec<f64>,
    /// Per-step backward log-probabilities (identically 0 on the tree MDP).
    pub logpb_terms: Vec<f64>,
    /// Decoded terminal configuration.
    pub terminal: TmIrsConfig,
    /// Floored effective-sum-rate reward at the task direction.
    pub reward: f64,
}

impl Trajectory {
    /// Key identifying the terminal state (the full level assignment).
    pub fn terminal_key(&self) -> &[u8] {
        &self.actions
    }
}

fn terminal_count(geom: &SystemGeometry, grid: &DiscretizationGrid) -> Option<u128> {
    let t = 2 * geom.n_elements();
    let mut count: u128 = 1;
    for _ in 0..t {
        count = count.checked_mul(grid.q() as u128)?;
    }
    Some(count)
}

/// Exhaustive iterator over all Q^(2*M_x*M_z) terminal level assignments in
/// lexicographic order (slot 0 most significant). Errors when the state count
/// exceeds `cap`.
pub fn enumerate_terminals(
    geom: &SystemGeometry,
    grid: &DiscretizationGrid,
    cap: u64,
) -> Result<TerminalIter> {
    let count = terminal_count(geom, grid);
    match count {
        Some(c) if c <= cap as u128 => Ok(TerminalIter {
            q: grid.q() as u8,
            next: Some(vec![0u8; 2 * geom.n_elements()]),
        }),
        c => Err(Error::EnumerationCap {
            count: c.unwrap_or(u128::MAX),
            cap,
        }),
    }
}

#[derive(Debug)]
pub struct TerminalIter {
    q: u8,
    next: Option<Vec<u8>>,
}

impl Iterator for TerminalIter {
    type Item = Vec<u8>;

    fn next(&mut self) -> Option<Vec<u8>> {
        let current = self.next.take()?;
        // Odometer increment from the least significant (last) slot.
        let mut succ = current.clone();
        let mut pos = succ.len();
        loop {
            if pos == 0 {
                break; // wrapped: iteration ends after `current`
            }
            pos -= 1;
            if succ[pos] + 1 < self.q {
                succ[pos] += 1;
                succ[pos + 1..].fill(0);
                self.next = Some(succ);
                break;
            }
        }
        Some(current)
    }
}

/// Sum of floored rewards over every terminal configuration: the exact
/// partition function targeted by trajectory-balance training.
pub fn true_partition(
    geom: &SystemGeometry,
    grid: &DiscretizationGrid,
    ofdm: &OfdmSpec,
    cu: Direction,
    steer: Direction,
    r_floor: f64,
    cap: u64,
) -> Result<f64> {
    let mut total = 0.0;
    for levels in enumerate_terminals(geom, grid, cap)? {
        let state = AssignmentState::from_levels(&levels);
        let cfg = decode_terminal(&state, grid, geom, steer)?;
        total += effective_sum_rate(&cfg, geom, ofdm, cu).max(r_floor);
    }
    Ok(total)
}
