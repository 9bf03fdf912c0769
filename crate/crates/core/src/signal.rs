//! Closed-form physical model of the time-modulated IRS OFDM link: switching
//! harmonics, array steering, per-subcarrier SINR, the effective sum rate used
//! as the sampling reward, secrecy rate, and a Monte-Carlo symbol error rate.
//!
//! Angles cross the public API in degrees and are converted to radians once,
//! internally. All arithmetic is double precision.

use crate::rng::{complex_gaussian, seeded_rng};
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

/// Elevation/azimuth pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub theta: f64,
    pub phi: f64,
}

impl Direction {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    /// Angular displacement sqrt(dtheta^2 + dphi^2), in degrees.
    pub fn distance(&self, other: &Direction) -> f64 {
        let dt = self.theta - other.theta;
        let dp = self.phi - other.phi;
        (dt * dt + dp * dp).sqrt()
    }

    /// True when both coordinates lie in the evaluated [-90, 90] range.
    pub fn in_evaluation_range(&self) -> bool {
        self.theta.abs() <= 90.0 && self.phi.abs() <= 90.0
    }
}

/// Static array geometry: IRS panel size, transmitter ULA size and placement.
///
/// `theta_irs` is informational only: the steered ULA output collapses to a
/// scalar factor absorbed into eta, so the IRS direction as seen from the
/// transmitter never enters a runtime formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemGeometry {
    pub m_x: usize,
    pub m_z: usize,
    pub n_tx: usize,
    pub tx_dir: Direction,
    pub theta_irs: f64,
}

impl SystemGeometry {
    pub fn n_elements(&self) -> usize {
        self.m_x * self.m_z
    }
}

/// Which SINR denominator to use. The literal published form subtracts the
/// bare signal power and goes negative whenever eta < 1; the corrected form
/// removes the signal term together with its eta factor and is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SinrMode {
    #[default]
    Corrected,
    Literal,
}

/// OFDM and detection parameters shared by every receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmSpec {
    pub k_sub: usize,
    /// Noise variance sigma^2 (linear power).
    pub noise_var: f64,
    /// M-PSK order; 4 = QPSK.
    pub mod_order: usize,
    /// Phase-constraint threshold xi, radians.
    pub xi: f64,
    pub sinr_mode: SinrMode,
}

impl OfdmSpec {
    /// eta = N/K; derived, never stored.
    pub fn eta(&self, geom: &SystemGeometry) -> f64 {
        geom.n_tx as f64 / self.k_sub as f64
    }
}

/// One terminal design point: per-element normalized turn-on times,
/// on-durations and unit-modulus phase coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct TmIrsConfig {
    pub tau_on: Vec<f64>,
    pub delta_tau: Vec<f64>,
    pub phase: Vec<Complex64>,
}

impl TmIrsConfig {
    pub fn n_elements(&self) -> usize {
        self.tau_on.len()
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.tau_on.len() != self.delta_tau.len() || self.tau_on.len() != self.phase.len() {
            return Err(crate::Error::Validation(
                "tau_on, delta_tau and phase must have equal length".into(),
            ));
        }
        for &t in &self.tau_on {
            if !(0.0..1.0).contains(&t) {
                return Err(crate::Error::Validation(format!(
                    "turn-on time {t} outside [0,1)"
                )));
            }
        }
        for &d in &self.delta_tau {
            if !(0.0..1.0).contains(&d) {
                return Err(crate::Error::Validation(format!(
                    "on-duration {d} outside [0,1)"
                )));
            }
        }
        for c in &self.phase {
            if (c.norm() - 1.0).abs() > 1e-12 {
                return Err(crate::Error::Validation(format!(
                    "phase coefficient {c} is not unit modulus"
                )));
            }
        }
        Ok(())
    }
}

/// sin(x)/x with the removable singularity filled in.
fn sinc(x: f64) -> f64 {
    if x == 0.0 { 1.0 } else { x.sin() / x }
}

/// l-th Fourier coefficient of the periodic on/off switching waveform:
/// dtau * sinc(l*pi*dtau) * exp(-j*l*pi*(2*tau_on + dtau)).
pub fn switching_coeff(l: i64, tau_on: f64, delta_tau: f64) -> Complex64 {
    if l == 0 {
        // Exact: sinc(0) = 1, zero exponent.
        return Complex64::new(delta_tau, 0.0);
    }
    let lf = l as f64;
    let amp = delta_tau * sinc(lf * PI * delta_tau);
    let phase = -lf * PI * (2.0 * tau_on + delta_tau);
    amp * Complex64::cis(phase)
}

/// Far-field steering vector of the M_x x M_z panel at `dir`, the Kronecker
/// product of the x-axis and z-axis linear phase ramps. Element (p, q) sits at
/// index p * M_z + q.
pub fn steering_vector(geom: &SystemGeometry, dir: Direction) -> Vec<Complex64> {
    let theta = dir.theta.to_radians();
    let phi = dir.phi.to_radians();
    let u = theta.sin() * phi.cos();
    let v = theta.sin() * phi.sin();
    let mut out = Vec::with_capacity(geom.n_elements());
    for p in 0..geom.m_x {
        for q in 0..geom.m_z {
            let phase = -PI * (p as f64 * u + q as f64 * v);
            out.push(Complex64::cis(phase));
        }
    }
    out
}

/// Unit-modulus phase profile that compensates both hops toward `steer`:
/// c_el = [a_el(tx) * a_el(steer)]^{-1}.
pub fn default_phase_profile(geom: &SystemGeometry, steer: Direction) -> Vec<Complex64> {
    let a_tx = steering_vector(geom, geom.tx_dir);
    let a_cu = steering_vector(geom, steer);
    a_tx.iter()
        .zip(&a_cu)
        .map(|(t, c)| (t * c).inv())
        .collect()
}

/// Harmonic array gain V(l, cfg, dir): the panel response at harmonic offset
/// `l`, observation direction `dir`, for the incident wave from the
/// transmitter direction.
pub fn harmonic_gain(
    l: i64,
    cfg: &TmIrsConfig,
    geom: &SystemGeometry,
    dir: Direction,
) -> Complex64 {
    assert_eq!(
        cfg.n_elements(),
        geom.n_elements(),
        "configuration has {} elements, geometry {}",
        cfg.n_elements(),
        geom.n_elements()
    );
    let a_obs = steering_vector(geom, dir);
    let a_tx = steering_vector(geom, geom.tx_dir);
    let mut acc = Complex64::new(0.0, 0.0);
    for el in 0..cfg.n_elements() {
        let psi = switching_coeff(l, cfg.tau_on[el], cfg.delta_tau[el]);
        acc += a_obs[el] * cfg.phase[el] * psi * a_tx[el];
    }
    acc
}

/// All harmonic gains entering the demodulation window, V(j) for
/// j in [-(K-1), K-1]. Index with [`window_gain`].
pub fn harmonic_window(cfg: &TmIrsConfig, geom: &SystemGeometry, ofdm: &OfdmSpec, dir: Direction) -> Vec<Complex64> {
    let k = ofdm.k_sub as i64;
    (-(k - 1)..=(k - 1))
        .map(|l| harmonic_gain(l, cfg, geom, dir))
        .collect()
}

/// Look up V(j) in a window produced by [`harmonic_window`].
pub fn window_gain(window: &[Complex64], k_sub: usize, j: i64) -> Complex64 {
    let idx = j + (k_sub as i64 - 1);
    window[idx as usize]
}

fn sinr_from_window(window: &[Complex64], ofdm: &OfdmSpec, eta: f64, i: usize) -> f64 {
    let k = ofdm.k_sub as i64;
    assert!((i as i64) < k, "subcarrier {i} out of range for K={k}");
    let v0 = window_gain(window, ofdm.k_sub, 0).norm_sqr();
    let mut interference = 0.0;
    // Subcarrier i hears harmonics j = i-(K-1) .. i.
    for j in (i as i64 - (k - 1))..=(i as i64) {
        if j != 0 {
            interference += window_gain(window, ofdm.k_sub, j).norm_sqr();
        }
    }
    let denom = match ofdm.sinr_mode {
        SinrMode::Corrected => eta * interference + ofdm.noise_var,
        SinrMode::Literal => eta * (interference + v0) - v0 + ofdm.noise_var,
    };
    eta * v0 / denom
}

/// SINR of subcarrier `i` at `dir`. Panics when `i >= K`.
pub fn sinr_subcarrier(
    i: usize,
    cfg: &TmIrsConfig,
    geom: &SystemGeometry,
    ofdm: &OfdmSpec,
    dir: Direction,
) -> f64 {
    let window = harmonic_window(cfg, geom, ofdm, dir);
    sinr_from_window(&window, ofdm, ofdm.eta(geom), i)
}

/// Sum over subcarriers of log2(1 + SINR_i).
pub fn achievable_sum_rate(
    cfg: &TmIrsConfig,
    geom: &SystemGeometry,
    ofdm: &OfdmSpec,
    dir: Direction,
) -> f64 {
    let window = harmonic_window(cfg, geom, ofdm, dir);
    let eta = ofdm.eta(geom);
    (0..ofdm.k_sub)
        .map(|i| (1.0 + sinr_from_window(&window, ofdm, eta, i)).log2())
        .sum()
}

/// Achievable sum rate gated by the phase constraint |arg V0| <= xi
/// (boundary inclusive). This is the sampling reward before flooring.
pub fn effective_sum_rate(
    cfg: &TmIrsConfig,
    geom: &SystemGeometry,
    ofdm: &OfdmSpec,
    dir: Direction,
) -> f64 {
    let window = harmonic_window(cfg, geom, ofdm, dir);
    let v0 = window_gain(&window, ofdm.k_sub, 0);
    if v0.arg().abs() > ofdm.xi {
        return 0.0;
    }
    let eta = ofdm.eta(geom);
    (0..ofdm.k_sub)
        .map(|i| (1.0 + sinr_from_window(&window, ofdm, eta, i)).log2())
        .sum()
}

/// Effective sum rate of the user minus that of the eavesdropper; may be
/// negative.
pub fn secrecy_rate(
    cfg: &TmIrsConfig,
    geom: &SystemGeometry,
    ofdm: &OfdmSpec,
    cu: Direction,
    eve: Direction,
) -> f64 {
    effective_sum_rate(cfg, geom, ofdm, cu) - effective_sum_rate(cfg, geom, ofdm, eve)
}

/// Post-demodulation symbols y_i = sqrt(eta) * sum_k d(k) V(i-k) + z_i.
/// `data` and `noise` must both have length K.
pub fn received_symbols(
    cfg: &TmIrsConfig,
    geom: &SystemGeometry,
    ofdm: &OfdmSpec,
    dir: Direction,
    data: &[Complex64],
    noise: &[Complex64],
) -> Vec<Complex64> {
    assert_eq!(data.len(), ofdm.k_sub, "data length != K");
    assert_eq!(noise.len(), ofdm.k_sub, "noise length != K");
    let window = harmonic_window(cfg, geom, ofdm, dir);
    let sqrt_eta = ofdm.eta(geom).sqrt();
    (0..ofdm.k_sub)
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, d) in data.iter().enumerate() {
                acc += d * window_gain(&window, ofdm.k_sub, i as i64 - k as i64);
            }
            sqrt_eta * acc + noise[i]
        })
        .collect()
}

/// m-th point of the M-PSK constellation, exp(j*2*pi*m/M).
pub fn psk_symbol(m: usize, mod_order: usize) -> Complex64 {
    Complex64::cis(std::f64::consts::TAU * m as f64 / mod_order as f64)
}

/// Monte-Carlo symbol error rate estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SerEstimate {
    pub ser: f64,
    /// Set when |V0| at the evaluation direction is numerically zero and the
    /// estimate falls back to chance level (M-1)/M.
    pub degenerate_equalization: bool,
}

/// Symbol error rate over `n_frames` OFDM frames of K uniform M-PSK symbols,
/// with the receiver equalizing by its own sqrt(eta)*V0 and detecting by
/// nearest neighbor. Deterministic given `seed`.
pub fn ser_monte_carlo(
    cfg: &TmIrsConfig,
    geom: &SystemGeometry,
    ofdm: &OfdmSpec,
    dir: Direction,
    n_frames: usize,
    seed: u64,
) -> SerEstimate {
    assert!(n_frames >= 1, "n_frames must be >= 1");
    let window = harmonic_window(cfg, geom, ofdm, dir);
    let v0 = window_gain(&window, ofdm.k_sub, 0);
    let m = ofdm.mod_order;
    if v0.norm_sqr() < 1e-24 {
        return SerEstimate {
            ser: (m - 1) as f64 / m as f64,
            degenerate_equalization: true,
        };
    }
    let sqrt_eta = ofdm.eta(geom).sqrt();
    let gain = sqrt_eta * v0;
    let constellation: Vec<Complex64> = (0..m).map(|s| psk_symbol(s, m)).collect();
    let mut rng = seeded_rng(seed);
    let k = ofdm.k_sub;
    let mut errors = 0usize;
    let mut sent = vec![0usize; k];
    let mut data = vec![Complex64::new(0.0, 0.0); k];
    for _ in 0..n_frames {
        for (slot, symbol) in sent.iter_mut().zip(&mut data) {
            let s = rng.random_range(0..m);
            *slot = s;
            *symbol = constellation[s];
        }
        for (i, &tx_symbol) in sent.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, d) in data.iter().enumerate() {
                acc += d * window_gain(&window, k, i as i64 - j as i64);
            }
            let y = sqrt_eta * acc + complex_gaussian(&mut rng, ofdm.noise_var);
            let eq = y / gain;
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (s, point) in constellation.iter().enumerate() {
                let d = (eq - point).norm_sqr();
                if d < best_d {
                    best_d = d;
                    best = s;
                }
            }
            if best != tx_symbol {
                errors += 1;
            }
        }
    }
    SerEstimate {
        ser: errors as f64 / (n_frames * k) as f64,
        degenerate_equalization: false,
    }
}
