//! Reward-modulated Hebbian plasticity on the registered plastic synapses:
//! reward profile over the frame, neuromodulator (reward prediction error),
//! covariance Hebbian term, eligibility trace, and the bounded weight update.

use crate::error::{Error, Result};
use crate::retina::{FrameSpec, TargetDot};
use crate::snn::Network;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardShape {
    /// Piecewise-linear profile peaking at the fovea center, zero at the
    /// frame edge.
    Triangular,
    /// Gaussian alternative with sigma = quarter extent per axis.
    Gaussian,
}

impl RewardShape {
    pub fn parse(s: &str) -> Result<RewardShape> {
        match s {
            "triangular" => Ok(RewardShape::Triangular),
            "gaussian" => Ok(RewardShape::Gaussian),
            other => Err(Error::config(
                "learning",
                format!("unknown reward shape `{other}`"),
            )),
        }
    }
}

fn axis_profile(offset: f64, half_extent: f64, shape: RewardShape) -> f64 {
    match shape {
        RewardShape::Triangular => (1.0 - offset.abs() / half_extent).max(0.0),
        RewardShape::Gaussian => {
            let sigma = half_extent / 2.0;
            (-offset * offset / (2.0 * sigma * sigma)).exp()
        }
    }
}

/// Reward in [0, 1] from the two eyes' dot positions. Per eye the reward is
/// the mean of the horizontal and vertical profiles; an eye whose dot is off
/// frame contributes 0; R is the mean over eyes.
pub fn compute_reward(dots: &[TargetDot; 2], frame: &FrameSpec, shape: RewardShape) -> f64 {
    let (cx, cy) = frame.fovea_center();
    let per_eye = dots.map(|dot| {
        if !dot.visible {
            return 0.0;
        }
        let rx = axis_profile(dot.x - cx, cx, shape);
        let ry = axis_profile(dot.y - cy, cy, shape);
        (rx + ry) / 2.0
    });
    (per_eye[0] + per_eye[1]) / 2.0
}

/// Reward signal, its running average and the neuromodulator M = R - <R>.
#[derive(Debug, Clone, Copy, Default)]
pub struct RewardState {
    pub r: f64,
    pub r_avg: f64,
    pub m: f64,
}

/// Exponential running average with alpha = 1 - exp(-dt/tau), which matches
/// the continuous first-order response exactly for step inputs.
pub fn ema_alpha(dt_ms: f64, tau_ms: f64) -> f64 {
    1.0 - (-dt_ms / tau_ms).exp()
}

pub fn update_modulator(state: &mut RewardState, r: f64, dt_ms: f64, avg_tau_ms: f64) {
    debug_assert!(dt_ms > 0.0);
    state.r = r;
    state.r_avg += ema_alpha(dt_ms, avg_tau_ms) * (r - state.r_avg);
    state.m = r - state.r_avg;
}

/// Covariance Hebbian term: gamma * (v_post - <v_post>) * (v_pre - <v_pre>).
pub fn hebbian_term(v_pre: f64, v_post: f64, v_pre_avg: f64, v_post_avg: f64, gamma: f64) -> f64 {
    gamma * (v_post - v_post_avg) * (v_pre - v_pre_avg)
}

/// Explicit Euler step of the eligibility trace:
/// e' = e + dt/tau_e * (-e + H).
pub fn update_trace(e: f64, h: f64, tau_e_ms: f64, dt_ms: f64) -> f64 {
    e + dt_ms / tau_e_ms * (-e + h)
}

/// Bounded weight update w' = clamp(w + dt * M * H * e). The weight ODE is
/// integrated in seconds (rates are in Hz), so dt is converted from ms.
/// Bounds carry the sign class, so clamping also preserves sign.
pub fn apply_weight_update(
    w: f64,
    m: f64,
    h: f64,
    e: f64,
    dt_ms: f64,
    w_lo: f64,
    w_hi: f64,
) -> f64 {
    (w + dt_ms / 1000.0 * m * h * e).clamp(w_lo, w_hi)
}

#[derive(Debug, Clone, Copy)]
pub struct LearningParams {
    pub enabled: bool,
    pub gamma: f64,
    pub tau_e_ms: f64,
    pub reward_avg_tau_ms: f64,
    pub rate_avg_tau_ms: f64,
    pub w_lo_scale: f64,
    pub w_hi_scale: f64,
    pub modulated_trace_only: bool,
    pub shape: RewardShape,
}

impl LearningParams {
    pub fn validate(&self, window_ms: f64) -> Result<()> {
        if !(self.tau_e_ms > 0.0) {
            return Err(Error::config("learning", "tau_e must be > 0"));
        }
        if window_ms > self.tau_e_ms / 10.0 {
            return Err(Error::config(
                "learning",
                format!(
                    "update step {window_ms} ms too large for tau_e {} ms (need dt <= tau_e/10)",
                    self.tau_e_ms
                ),
            ));
        }
        if self.w_lo_scale < 0.0 || self.w_hi_scale < self.w_lo_scale {
            return Err(Error::config("learning", "weight bound scales must satisfy 0 <= lo <= hi"));
        }
        Ok(())
    }
}

/// Registered plastic synapse: network synapse index plus its pre/post
/// neuron ids and weight bounds.
#[derive(Debug, Clone, Copy)]
pub struct PlasticSynapse {
    pub syn_index: usize,
    pub pre: u32,
    pub post: u32,
    pub w_lo: f64,
    pub w_hi: f64,
}

/// Per-window plasticity state for the whole registry. Updates are
/// semi-local by construction: each synapse reads only (M, its pre/post
/// window rates and their running means, its own trace).
#[derive(Debug, Clone)]
pub struct PlasticityEngine {
    pub params: LearningParams,
    pub reward: RewardState,
    registry: Vec<PlasticSynapse>,
    traces: Vec<f64>,
    /// Running mean window rate per network neuron (only pre/post neurons of
    /// plastic synapses are read).
    rate_avg: Vec<f64>,
    /// Sum of |dw| applied in the most recent window (diagnostic).
    pub last_sum_abs_dw: f64,
}

impl PlasticityEngine {
    pub fn new(params: LearningParams, registry: Vec<PlasticSynapse>, n_neurons: usize) -> Self {
        PlasticityEngine {
            params,
            reward: RewardState::default(),
            traces: vec![0.0; registry.len()],
            registry,
            rate_avg: vec![0.0; n_neurons],
            last_sum_abs_dw: 0.0,
        }
    }

    pub fn registry(&self) -> &[PlasticSynapse] {
        &self.registry
    }

    /// One decode-window update. `window_rates` holds this window's firing
    /// rate (Hz) per network neuron; `r` is the reward for the window.
    pub fn window_update(&mut self, network: &mut Network, window_rates: &[f64], r: f64, window_ms: f64) {
        update_modulator(&mut self.reward, r, window_ms, self.params.reward_avg_tau_ms);
        let m = self.reward.m;
        let mut sum_abs_dw = 0.0;
        if self.params.enabled {
            for (k, syn) in self.registry.iter().enumerate() {
                let v_pre = window_rates[syn.pre as usize];
                let v_post = window_rates[syn.post as usize];
                let h = hebbian_term(
                    v_pre,
                    v_post,
                    self.rate_avg[syn.pre as usize],
                    self.rate_avg[syn.post as usize],
                    self.params.gamma,
                );
                let e = update_trace(self.traces[k], h, self.params.tau_e_ms, window_ms);
                self.traces[k] = e;
                let w = network.weight(syn.syn_index);
                let drive = if self.params.modulated_trace_only { m * e } else { m * h * e };
                let w_new = (w + window_ms / 1000.0 * drive).clamp(syn.w_lo, syn.w_hi);
                if w_new != w {
                    network.set_weight(syn.syn_index, w_new);
                    sum_abs_dw += (w_new - w).abs();
                }
            }
        }
        self.last_sum_abs_dw = sum_abs_dw;
        // running rate means advance regardless, so learning can be toggled
        // mid-experiment without a discontinuity in the statistics
        let alpha = ema_alpha(window_ms, self.params.rate_avg_tau_ms);
        for (avg, rate) in self.rate_avg.iter_mut().zip(window_rates) {
            *avg += alpha * (rate - *avg);
        }
    }
}
