//! Minimal dense policy network with exact reverse-mode gradients.
//!
//! The network maps the binary state encoding to two logit heads of equal
//! size: forward-transition logits over every slot-level action and a
//! backward head kept for the unordered MDP variant (unused by the default
//! tree MDP). One extra learnable scalar holds log Z. Parameters flatten to a
//! single vector (per layer: row-major weights then biases; log Z last) so
//! meta-learning can snapshot and restore them.

use crate::error::{Error, Result};
use crate::rng::seeded_rng;
use rand::Rng;
use std::io::{Read, Write};
use std::path::Path;

/// Flat parameter vector; layout documented on [`PolicyNet`].
pub type ParamVector = Vec<f64>;
/// Same layout as [`ParamVector`], holding d(loss)/d(parameter).
pub type GradVector = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitScheme {
    /// Weights and biases uniform in ±1/sqrt(fan_in). Nonzero biases keep
    /// pre-activations off the rectifier kink at the all-zero root input,
    /// where central differences would disagree with the subgradient.
    FanInUniform,
    /// All-zero parameters: the policy is exactly uniform everywhere.
    Zeros,
}

/// Dense ReLU network with a learnable log-partition scalar.
#[derive(Debug, Clone)]
pub struct PolicyNet {
    dims: Vec<usize>,
    /// weights[l] is row-major [dims[l+1] x dims[l]].
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    log_z: f64,
    version: u64,
}

/// Cached activations from one forward pass, consumed by [`PolicyNet::backprop`].
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// Input followed by each hidden layer's post-activation.
    activations: Vec<Vec<f64>>,
    output: Vec<f64>,
    n_actions: usize,
    version: u64,
}

impl ForwardPass {
    pub fn forward_logits(&self) -> &[f64] {
        &self.output[..self.n_actions]
    }

    pub fn backward_logits(&self) -> &[f64] {
        &self.output[self.n_actions..]
    }
}

impl PolicyNet {
    /// Build a network with explicit dimensions. `n_actions` is the size of
    /// each head, so the output layer has 2*n_actions units.
    pub fn init(
        input_dim: usize,
        hidden: &[usize],
        n_actions: usize,
        seed: u64,
        scheme: InitScheme,
    ) -> Self {
        assert!(input_dim > 0 && n_actions > 0, "degenerate network shape");
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden);
        dims.push(2 * n_actions);
        let mut rng = seeded_rng(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..dims.len() - 1 {
            let fan_in = dims[l];
            let fan_out = dims[l + 1];
            let bound = 1.0 / (fan_in as f64).sqrt();
            let (w, b) = match scheme {
                InitScheme::FanInUniform => (
                    (0..fan_in * fan_out)
                        .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * bound)
                        .collect(),
                    (0..fan_out)
                        .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * bound)
                        .collect(),
                ),
                InitScheme::Zeros => (vec![0.0; fan_in * fan_out], vec![0.0; fan_out]),
            };
            weights.push(w);
            biases.push(b);
        }
        Self {
            dims,
            weights,
            biases,
            log_z: 0.0,
            version: 0,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn n_actions(&self) -> usize {
        self.dims[self.dims.len() - 1] / 2
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn set_log_z(&mut self, v: f64) {
        self.log_z = v;
        self.version += 1;
    }

    /// Monotone counter bumped on every parameter mutation; guards against
    /// backpropagating through a stale cache.
    pub fn version(&self) -> u64 {
        self.version
    }

    /// Total parameter count including log Z.
    pub fn param_count(&self) -> usize {
        let mut n = 0;
        for l in 0..self.dims.len() - 1 {
            n += (self.dims[l] + 1) * self.dims[l + 1];
        }
        n + 1
    }

    /// Affine + ReLU stack; the final layer is linear and split into the two
    /// heads. Panics on input length mismatch.
    pub fn forward(&self, input: &[f64]) -> ForwardPass {
        assert_eq!(input.len(), self.dims[0], "input length mismatch");
        let n_layers = self.dims.len() - 1;
        let mut activations = Vec::with_capacity(n_layers);
        activations.push(input.to_vec());
        let mut current: &[f64] = input;
        let mut output = Vec::new();
        for l in 0..n_layers {
            let fan_in = self.dims[l];
            let w = &self.weights[l];
            let mut next = self.biases[l].clone();
            for (o, acc) in next.iter_mut().enumerate() {
                let row = &w[o * fan_in..(o + 1) * fan_in];
                let mut s = 0.0;
                for (wi, xi) in row.iter().zip(current) {
                    s += wi * xi;
                }
                *acc += s;
            }
            if l + 1 < n_layers {
                for v in &mut next {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
                activations.push(next);
                current = activations.last().unwrap();
            } else {
                output = next;
            }
        }
        ForwardPass {
            activations,
            output,
            n_actions: self.n_actions(),
            version: self.version,
        }
    }

    /// Exact reverse-mode gradients for one cached forward pass, given
    /// upstream gradients at both heads and at log Z. Panics when the cache
    /// is stale (parameters changed since the forward pass).
    pub fn backprop(
        &self,
        pass: &ForwardPass,
        grad_forward: &[f64],
        grad_backward: &[f64],
        grad_log_z: f64,
    ) -> GradVector {
        let mut grads = vec![0.0; self.param_count()];
        self.backprop_into(pass, grad_forward, grad_backward, grad_log_z, &mut grads);
        grads
    }

    /// Accumulating variant of [`PolicyNet::backprop`]: adds into `grads`.
    pub fn backprop_into(
        &self,
        pass: &ForwardPass,
        grad_forward: &[f64],
        grad_backward: &[f64],
        grad_log_z: f64,
        grads: &mut [f64],
    ) {
        assert_eq!(
            pass.version, self.version,
            "stale forward cache: parameters changed since the forward pass"
        );
        assert_eq!(grad_forward.len(), self.n_actions(), "forward head size");
        assert_eq!(grad_backward.len(), self.n_actions(), "backward head size");
        assert_eq!(grads.len(), self.param_count(), "gradient vector size");
        let n_layers = self.dims.len() - 1;
        let mut delta: Vec<f64> = grad_forward
            .iter()
            .chain(grad_backward)
            .copied()
            .collect();
        // Offsets of each layer's weight block in the flat vector.
        let mut offsets = Vec::with_capacity(n_layers);
        let mut off = 0;
        for l in 0..n_layers {
            offsets.push(off);
            off += (self.dims[l] + 1) * self.dims[l + 1];
        }
        for l in (0..n_layers).rev() {
            let fan_in = self.dims[l];
            let fan_out = self.dims[l + 1];
            let a_prev = &pass.activations[l];
            let base = offsets[l];
            let wg = &mut grads[base..base + fan_in * fan_out + fan_out];
            for o in 0..fan_out {
                let d = delta[o];
                if d != 0.0 {
                    let row = &mut wg[o * fan_in..(o + 1) * fan_in];
                    for (g, &a) in row.iter_mut().zip(a_prev) {
                        *g += d * a;
                    }
                }
                wg[fan_in * fan_out + o] += d;
            }
            if l > 0 {
                let w = &self.weights[l];
                let mut prev_delta = vec![0.0; fan_in];
                for o in 0..fan_out {
                    let d = delta[o];
                    if d != 0.0 {
                        let row = &w[o * fan_in..(o + 1) * fan_in];
                        for (pd, &wi) in prev_delta.iter_mut().zip(row) {
                            *pd += d * wi;
                        }
                    }
                }
                // ReLU mask from the cached post-activation.
                for (pd, &a) in prev_delta.iter_mut().zip(a_prev) {
                    if a <= 0.0 {
                        *pd = 0.0;
                    }
                }
                delta = prev_delta;
            }
        }
        let last = grads.len() - 1;
        grads[last] += grad_log_z;
    }

    /// Snapshot every parameter (log Z last).
    pub fn get_params(&self) -> ParamVector {
        let mut out = Vec::with_capacity(self.param_count());
        for l in 0..self.dims.len() - 1 {
            out.extend_from_slice(&self.weights[l]);
            out.extend_from_slice(&self.biases[l]);
        }
        out.push(self.log_z);
        out
    }

    /// Restore parameters from a flat vector. Panics on length mismatch.
    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count(), "parameter vector length");
        let mut pos = 0;
        for l in 0..self.dims.len() - 1 {
            let nw = self.dims[l] * self.dims[l + 1];
            self.weights[l].copy_from_slice(&params[pos..pos + nw]);
            pos += nw;
            let nb = self.dims[l + 1];
            self.biases[l].copy_from_slice(&params[pos..pos + nb]);
            pos += nb;
        }
        self.log_z = params[pos];
        self.version += 1;
    }

    /// In-place SGD update, arithmetically identical to
    /// `set_params(sgd_step(get_params(), grads, lr))`.
    pub fn apply_gradients(&mut self, grads: &[f64], lr: f64) {
        assert_eq!(grads.len(), self.param_count(), "gradient vector length");
        let mut pos = 0;
        for l in 0..self.dims.len() - 1 {
            for w in &mut self.weights[l] {
                *w -= lr * grads[pos];
                pos += 1;
            }
            for b in &mut self.biases[l] {
                *b -= lr * grads[pos];
                pos += 1;
            }
        }
        self.log_z -= lr * grads[pos];
        self.version += 1;
    }
}

/// Element-wise params - lr * grads. Panics on length mismatch.
pub fn sgd_step(params: &[f64], grads: &[f64], lr: f64) -> ParamVector {
    assert_eq!(params.len(), grads.len(), "params/grads length mismatch");
    params
        .iter()
        .zip(grads)
        .map(|(p, g)| p - lr * g)
        .collect()
}

/// Log-softmax restricted to `legal` positions; illegal positions come back
/// as -inf. Panics on an empty mask.
pub fn masked_log_softmax(logits: &[f64], legal: &[usize]) -> Vec<f64> {
    assert!(!legal.is_empty(), "empty action mask");
    let max = legal
        .iter()
        .map(|&i| logits[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let lse = legal
        .iter()
        .map(|&i| (logits[i] - max).exp())
        .sum::<f64>()
        .ln()
        + max;
    let mut out = vec![f64::NEG_INFINITY; logits.len()];
    for &i in legal {
        out[i] = logits[i] - lse;
    }
    out
}

/// Log-softmax over one contiguous block of logits (the per-slot action
/// block), returned as a dense vector of block length.
pub fn block_log_softmax(logits: &[f64], start: usize, len: usize) -> Vec<f64> {
    let block = &logits[start..start + len];
    let max = block.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = block.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
    block.iter().map(|v| v - lse).collect()
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"TMIRSNET";
const CHECKPOINT_VERSION: u32 = 1;

/// Checkpoint sidecar data. The binary layout is, in order: the 8-byte magic
/// "TMIRSNET", format version (u32 LE), tag length (u32 LE) + tag bytes
/// (UTF-8), seed (u64 LE), scenario fingerprint (u64 LE), layer count
/// (u32 LE), layer dims (u32 LE each), parameter count (u64 LE), then the
/// flat parameter vector as little-endian f64 (log Z last). Round-trips
/// bit-exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointMeta {
    pub tag: String,
    pub seed: u64,
    pub fingerprint: u64,
}

pub fn save_checkpoint(
    path: &Path,
    net: &PolicyNet,
    meta: &CheckpointMeta,
) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(meta.tag.len() as u32).to_le_bytes());
    buf.extend_from_slice(meta.tag.as_bytes());
    buf.extend_from_slice(&meta.seed.to_le_bytes());
    buf.extend_from_slice(&meta.fingerprint.to_le_bytes());
    buf.extend_from_slice(&(net.dims.len() as u32).to_le_bytes());
    for &d in &net.dims {
        buf.extend_from_slice(&(d as u32).to_le_bytes());
    }
    let params = net.get_params();
    buf.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in &params {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(PolicyNet, CheckpointMeta)> {
    let err = |msg: &str| Error::Checkpoint {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    };
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        if pos + n > bytes.len() {
            return Err(err("truncated checkpoint"));
        }
        let s = &bytes[pos..pos + n];
        pos += n;
        Ok(s)
    };
    if take(8)? != CHECKPOINT_MAGIC {
        return Err(err("bad magic"));
    }
    let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(err(&format!("unsupported format version {version}")));
    }
    let tag_len = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    let tag = String::from_utf8(take(tag_len)?.to_vec()).map_err(|_| err("tag is not UTF-8"))?;
    let seed = u64::from_le_bytes(take(8)?.try_into().unwrap());
    let fingerprint = u64::from_le_bytes(take(8)?.try_into().unwrap());
    let n_dims = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    if n_dims < 2 {
        return Err(err("fewer than two layer dims"));
    }
    let mut dims = Vec::with_capacity(n_dims);
    for _ in 0..n_dims {
        dims.push(u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize);
    }
    let n_params = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    let out_dim = dims[n_dims - 1];
    if out_dim == 0 || out_dim % 2 != 0 {
        return Err(err("output layer must hold two equal heads"));
    }
    let hidden = &dims[1..n_dims - 1];
    let mut net = PolicyNet::init(dims[0], hidden, out_dim / 2, 0, InitScheme::Zeros);
    if n_params != net.param_count() {
        return Err(err(&format!(
            "parameter count {n_params} does not match dims {dims:?}"
        )));
    }
    let mut params = Vec::with_capacity(n_params);
    for _ in 0..n_params {
        params.push(f64::from_le_bytes(take(8)?.try_into().unwrap()));
    }
    if pos != bytes.len() {
        return Err(err("trailing bytes"));
    }
    net.set_params(&params);
    Ok((
        net,
        CheckpointMeta {
            tag,
            seed,
            fingerprint,
        },
    ))
}
