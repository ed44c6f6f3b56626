//! Closed-loop experiment harness: wires the retina, controller, decoder and
//! plant into one deterministic simulation, samples gaze state at the camera
//! rate, and computes the relative-error metrics.

use std::fmt::Write as _;

use crate::config::Config;
use crate::connectome::{assemble_controller, ConnectomeParams, ControllerAssembly, NeuronDefaults};
use crate::decoder::{decode_window, DecodeWindowSpec, RomLimits, AXES};
use crate::error::{Error, Result};
use crate::learning::{
    compute_reward, LearningParams, PlasticityEngine, RewardShape,
};
use crate::plant::{gaze_error, render_frame, Geometry, Pose, Trajectory, EYES};
use crate::retina::{
    build_rf_grid, default_ring_spec, sc_activation, FrameSpec, RingSpec, TargetDot, WeightProfile,
};
use crate::snn::SpikeRecord;

/// One camera-rate sample of the closed-loop state.
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub t_ms: f64,
    pub target_cm: (f64, f64),
    /// Dot pixel position and visibility per eye (left, right).
    pub dot_px: [(f64, f64, bool); 2],
    /// Relative gaze error, degrees:
    /// [left horizontal, left vertical, right horizontal, right vertical].
    pub re_deg: [f64; 4],
    /// Actual servo angles for all six axes.
    pub angles_deg: [f64; 6],
    /// Commanded servo ticks for all six axes.
    pub cmd_ticks: [i32; 6],
    pub reward: f64,
}

/// Aggregate relative-error statistics over one run, per eye axis in the
/// same order as [`Sample::re_deg`].
#[derive(Debug, Clone, Copy)]
pub struct Metrics {
    pub rmse_deg: [f64; 4],
    pub median_re_deg: [f64; 4],
    pub mean_re_deg: [f64; 4],
    pub overall_mean_re_deg: f64,
    pub n_samples: usize,
}

pub fn compute_metrics(samples: &[Sample]) -> Metrics {
    let n = samples.len();
    let mut rmse = [0.0; 4];
    let mut mean = [0.0; 4];
    let mut median = [0.0; 4];
    for k in 0..4 {
        let mut values: Vec<f64> = samples.iter().map(|s| s.re_deg[k]).collect();
        let sum: f64 = values.iter().sum();
        let sum_sq: f64 = values.iter().map(|v| v * v).sum();
        mean[k] = sum / n.max(1) as f64;
        rmse[k] = (sum_sq / n.max(1) as f64).sqrt();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        median[k] = if n == 0 {
            0.0
        } else if n % 2 == 1 {
            values[n / 2]
        } else {
            (values[n / 2 - 1] + values[n / 2]) / 2.0
        };
    }
    Metrics {
        rmse_deg: rmse,
        median_re_deg: median,
        mean_re_deg: mean,
        overall_mean_re_deg: mean.iter().sum::<f64>() / 4.0,
        n_samples: n,
    }
}

/// Result of one closed-loop run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub samples: Vec<Sample>,
    pub metrics: Metrics,
    /// Total spikes emitted per neuron over the run.
    pub spike_counts: Vec<u64>,
    /// Sum of |dw| applied over the run (0 with learning off).
    pub total_abs_dw: f64,
}

/// The assembled closed loop. Construction reads every tunable from the
/// config; `run` (or repeated `step_window`) advances it.
#[derive(Debug)]
pub struct Simulation {
    pub assembly: ControllerAssembly,
    pub pose: Pose,
    pub trajectory: Trajectory,
    pub geometry: Geometry,
    pub frame: FrameSpec,
    pub plasticity: PlasticityEngine,
    rom: RomLimits,
    eye_decode: DecodeWindowSpec,
    neck_decode: DecodeWindowSpec,
    dt_ms: f64,
    window_ticks: u64,
    sc_drive: f64,
    activation_fraction: f64,
    dot_radius_px: f64,
    servo_tau_ms: f64,
    sample_rate_hz: f64,
    pub duration_ms: f64,
    reward_shape: RewardShape,
    // running state
    tick: u64,
    next_sample: u64,
    window_spike_counts: Vec<u32>,
    spike_counts: Vec<u64>,
    spikes_buf: Vec<SpikeRecord>,
    external: Vec<f64>,
    last_dots: [TargetDot; 2],
    total_abs_dw: f64,
    /// Spike log for the current window only (cleared each window).
    pub window_spikes: Vec<SpikeRecord>,
}

fn ring_from_config(cfg: &Config) -> Result<RingSpec> {
    Ok(default_ring_spec(
        (cfg.u32("retina.band1_half_extent")?, cfg.u32("retina.band1_side")?),
        (cfg.u32("retina.band2_half_extent")?, cfg.u32("retina.band2_side")?),
        cfg.u32("retina.outer_side")?,
    ))
}

fn connectome_from_config(cfg: &Config) -> Result<ConnectomeParams> {
    Ok(ConnectomeParams {
        population: cfg.u32("sim.population")? as usize,
        default_delay_ms: cfg.f64("connectome.default_delay_ms")?,
        llbn_ebn_delay_ms: cfg.f64("connectome.llbn_ebn_delay_ms")?,
        sc_llbn_gain: cfg.f64("connectome.sc_llbn_gain")?,
        sc_ebn_gain: cfg.f64("connectome.sc_ebn_gain")?,
        sc_llbn_gain_v: cfg.f64("connectome.sc_llbn_gain_v")?,
        sc_ebn_gain_v: cfg.f64("connectome.sc_ebn_gain_v")?,
        llbn_ebn_weight: cfg.f64("connectome.llbn_ebn_weight")?,
        ebn_ifn_weight: cfg.f64("connectome.ebn_ifn_weight")?,
        ifn_llbn_weight: cfg.f64("connectome.ifn_llbn_weight")?,
        ebn_tn_weight: cfg.f64("connectome.ebn_tn_weight")?,
        tn_mn_weight: cfg.f64("connectome.tn_mn_weight")?,
        tn_dsn_weight: cfg.f64("connectome.tn_dsn_weight")?,
        tn_dsn_contra_weight: cfg.f64("connectome.tn_dsn_contra_weight")?,
        dsn_mn_weight: cfg.f64("connectome.dsn_mn_weight")?,
        ebn_ibn_weight: cfg.f64("connectome.ebn_ibn_weight")?,
        ibn_contra_weight: cfg.f64("connectome.ibn_contra_weight")?,
        ibn_opn_weight: cfg.f64("connectome.ibn_opn_weight")?,
        opn_ibn_weight: cfg.f64("connectome.opn_ibn_weight")?,
        opn_ebn_weight: cfg.f64("connectome.opn_ebn_weight")?,
        sc_opn_fovea_weight: cfg.f64("connectome.sc_opn_fovea_weight")?,
        sc_fovea_gaze_gain: cfg.f64("connectome.sc_fovea_gaze_gain")?,
        neck_gain: cfg.f64("connectome.neck_gain")?,
        verg_s_gain: cfg.f64("connectome.verg_s_gain")?,
        verg_ebn_gain: cfg.f64("connectome.verg_ebn_gain")?,
        verg_s_dsn_weight: cfg.f64("connectome.verg_s_dsn_weight")?,
        verg_ebn_ifn_weight: cfg.f64("connectome.verg_ebn_ifn_weight")?,
        verg_ifn_ebn_weight: cfg.f64("connectome.verg_ifn_ebn_weight")?,
        verg_ebn_tn_weight: cfg.f64("connectome.verg_ebn_tn_weight")?,
        verg_tn_dsn_weight: cfg.f64("connectome.verg_tn_dsn_weight")?,
        verg_dsn_mn_weight: cfg.f64("connectome.verg_dsn_mn_weight")?,
    })
}

fn defaults_from_config(cfg: &Config) -> Result<NeuronDefaults> {
    Ok(NeuronDefaults {
        tau_m_ms: cfg.f64("snn.tau_m_ms")?,
        threshold: cfg.f64("snn.threshold")?,
        reset: cfg.f64("snn.reset")?,
        refractory_ms: cfg.f64("snn.refractory_ms")?,
        sc_refractory_ms: cfg.f64("snn.sc_refractory_ms")?,
        tn_leak_scale: cfg.f64("snn.tn_leak_scale")?,
        opn_bias: cfg.f64("snn.opn_bias")?,
        initial_stagger: cfg.bool("snn.initial_stagger")?,
    })
}

fn trajectory_from_config(cfg: &Config) -> Result<Trajectory> {
    match cfg.get("trajectory.kind") {
        "random" => Ok(Trajectory::RandomSteps {
            seed: cfg.u64("harness.seed")?,
            dwell_ms: cfg.f64("trajectory.dwell_ms")?,
            amplitude_x_cm: cfg.f64("trajectory.amplitude_x_cm")?,
            amplitude_y_cm: cfg.f64("trajectory.amplitude_y_cm")?,
        }),
        "repetitive" => {
            let mut points = Vec::new();
            for part in cfg.get("trajectory.repetitive_points").split(';') {
                let (x, y) = part.split_once(':').ok_or_else(|| {
                    Error::config("trajectory", format!("bad point `{part}` (want x:y)"))
                })?;
                let x: f64 = x.trim().parse().map_err(|_| {
                    Error::config("trajectory", format!("bad x in `{part}`"))
                })?;
                let y: f64 = y.trim().parse().map_err(|_| {
                    Error::config("trajectory", format!("bad y in `{part}`"))
                })?;
                points.push((x, y));
            }
            if points.is_empty() {
                return Err(Error::config("trajectory", "no repetitive points"));
            }
            Ok(Trajectory::Repetitive { points, dwell_ms: cfg.f64("trajectory.dwell_ms")? })
        }
        "scripted" => {
            let path = cfg.get("trajectory.scripted_path");
            if path.is_empty() {
                return Err(Error::config("trajectory", "scripted kind needs trajectory.scripted_path"));
            }
            Trajectory::load_scripted(std::path::Path::new(path))
        }
        other => Err(Error::config("trajectory", format!("unknown kind `{other}`"))),
    }
}

impl Simulation {
    pub fn new(cfg: &Config) -> Result<Simulation> {
        let dt_ms = cfg.f64("sim.dt_ms")?;
        let frame = FrameSpec {
            width: cfg.u32("retina.width")?,
            height: cfg.u32("retina.height")?,
            fovea_half_width: cfg.u32("retina.fovea_half_width")?,
        };
        let grid = build_rf_grid(
            &frame,
            &ring_from_config(cfg)?,
            cfg.f64("retina.peripheral_threshold_px")?,
        )?;
        let profile = WeightProfile {
            w_min: cfg.f64("retina.weight_min")?,
            w_max: cfg.f64("retina.weight_max")?,
            d_sat_px: cfg.f64("retina.weight_saturation_px")?,
        };
        let mut assembly = assemble_controller(
            grid,
            profile,
            &defaults_from_config(cfg)?,
            &connectome_from_config(cfg)?,
            dt_ms,
        )?;
        let geometry = Geometry {
            wall_distance_cm: cfg.f64("plant.wall_distance_cm")?,
            interocular_cm: cfg.f64("plant.interocular_cm")?,
            fov_h_deg: cfg.f64("plant.eye_fov_h_deg")?,
            fov_v_deg: cfg.f64("plant.eye_fov_v_deg")?,
        };
        geometry.validate()?;
        let window_ms = cfg.f64("decoder.window_ms")?;
        let eye_decode = DecodeWindowSpec {
            window_ms,
            max_rate_hz: cfg.f64("decoder.max_rate_hz")?,
            max_delta_per_window: cfg.i32("decoder.eye_max_delta")?,
        };
        let neck_decode = DecodeWindowSpec {
            max_delta_per_window: cfg.i32("decoder.neck_max_delta")?,
            ..eye_decode
        };
        eye_decode.validate()?;
        neck_decode.validate()?;
        let window_ticks = (window_ms / dt_ms).round() as u64;
        if window_ticks == 0 || (window_ticks as f64 * dt_ms - window_ms).abs() > 1e-9 {
            return Err(Error::config("motor-decoder", "window must be a multiple of dt"));
        }
        let learning = LearningParams {
            enabled: cfg.bool("learning.enabled")?,
            gamma: cfg.f64("learning.gamma")?,
            tau_e_ms: cfg.f64("learning.tau_e_ms")?,
            reward_avg_tau_ms: cfg.f64("learning.reward_avg_tau_ms")?,
            rate_avg_tau_ms: cfg.f64("learning.rate_avg_tau_ms")?,
            w_lo_scale: cfg.f64("learning.w_lo_scale")?,
            w_hi_scale: cfg.f64("learning.w_hi_scale")?,
            modulated_trace_only: cfg.bool("learning.modulated_trace_only")?,
            shape: RewardShape::parse(cfg.get("learning.reward_shape"))?,
        };
        learning.validate(window_ms)?;
        // weight bounds scale from each synapse's initial weight
        let mut registry = std::mem::take(&mut assembly.plastic);
        for ps in &mut registry {
            let w0 = assembly.network.weight(ps.syn_index);
            ps.w_lo = w0 * learning.w_lo_scale;
            ps.w_hi = w0 * learning.w_hi_scale;
        }
        assembly.plastic = registry.clone();
        let n = assembly.network.n_neurons();
        let plasticity = PlasticityEngine::new(learning, registry, n);
        let rom = RomLimits::from_degrees(
            cfg.f64("plant.eye_pan_rom_deg")?,
            cfg.f64("plant.eye_tilt_rom_deg")?,
            cfg.f64("plant.neck_pan_rom_deg")?,
            cfg.f64("plant.neck_tilt_rom_deg")?,
        );
        let far = TargetDot { x: 0.0, y: 0.0, radius: 0.0, visible: false };
        Ok(Simulation {
            pose: Pose::default(),
            trajectory: trajectory_from_config(cfg)?,
            geometry,
            frame,
            plasticity,
            rom,
            eye_decode,
            neck_decode,
            dt_ms,
            window_ticks,
            sc_drive: cfg.f64("retina.sc_drive")?,
            activation_fraction: cfg.f64("retina.activation_fraction")?,
            dot_radius_px: cfg.f64("plant.dot_radius_px")?,
            servo_tau_ms: cfg.f64("plant.servo_tau_ms")?,
            sample_rate_hz: cfg.f64("harness.sample_rate_hz")?,
            duration_ms: cfg.f64("harness.duration_ms")?,
            reward_shape: RewardShape::parse(cfg.get("learning.reward_shape"))?,
            tick: 0,
            next_sample: 1,
            window_spike_counts: vec![0; n],
            spike_counts: vec![0; n],
            spikes_buf: Vec::new(),
            external: vec![0.0; n],
            last_dots: [far; 2],
            total_abs_dw: 0.0,
            window_spikes: Vec::new(),
            assembly,
        })
    }

    pub fn time_ms(&self) -> f64 {
        self.tick as f64 * self.dt_ms
    }

    pub fn window_ms(&self) -> f64 {
        self.window_ticks as f64 * self.dt_ms
    }

    /// Tick index of camera sample k (1-based), at the configured rate.
    fn sample_tick(&self, k: u64) -> u64 {
        (k as f64 * 1000.0 / (self.sample_rate_hz * self.dt_ms)).round() as u64
    }

    fn observe(&mut self) -> [TargetDot; 2] {
        let target = self.trajectory.position(self.time_ms());
        let dots = EYES.map(|eye| {
            render_frame(&self.geometry, &self.frame, target, eye, &self.pose, self.dot_radius_px)
        });
        self.last_dots = dots;
        dots
    }

    /// Advance one simulation tick: render, activate SC, step the network,
    /// integrate the servos.
    pub fn step_tick(&mut self) -> Result<()> {
        let dots = self.observe();
        self.external.fill(0.0);
        for (eye_idx, dot) in dots.iter().enumerate() {
            let cov = self.assembly.grid.coverages(dot);
            for id in sc_activation(&cov, self.activation_fraction) {
                let sc = self.assembly.sc_id(EYES[eye_idx], id);
                self.external[sc as usize] = self.sc_drive;
            }
        }
        self.spikes_buf.clear();
        self.assembly.network.step(&self.external, &mut self.spikes_buf)?;
        for spike in &self.spikes_buf {
            self.window_spike_counts[spike.neuron as usize] += 1;
            self.spike_counts[spike.neuron as usize] += 1;
        }
        self.window_spikes.extend_from_slice(&self.spikes_buf);
        self.pose.integrate(self.dt_ms, self.servo_tau_ms);
        self.tick += 1;
        Ok(())
    }

    /// Mean window firing rate (Hz) over a neuron group.
    fn group_rate(&self, ids: &[u32]) -> f64 {
        if ids.is_empty() {
            return 0.0;
        }
        let count: u32 = ids.iter().map(|&id| self.window_spike_counts[id as usize]).sum();
        count as f64 * 1000.0 / (self.window_ms() * ids.len() as f64)
    }

    /// End-of-window processing: decode all six axes into servo deltas,
    /// run the plasticity update, clear window counters. Returns the deltas
    /// in [`AXES`] order.
    pub fn close_window(&mut self) -> [i32; 6] {
        let window_ms = self.window_ms();
        let mut deltas = [0i32; 6];
        for (i, axis) in AXES.into_iter().enumerate() {
            let (neg, pos) = self.assembly.mn_groups(axis);
            let spec = match axis {
                crate::decoder::Axis::NeckPan | crate::decoder::Axis::NeckTilt => &self.neck_decode,
                _ => &self.eye_decode,
            };
            deltas[i] = decode_window(self.group_rate(pos), self.group_rate(neg), spec);
        }
        for (i, axis) in AXES.into_iter().enumerate() {
            self.pose.command(axis, deltas[i], &self.rom);
        }
        let r = compute_reward(&self.last_dots, &self.frame, self.reward_shape);
        let rates: Vec<f64> = self
            .window_spike_counts
            .iter()
            .map(|&c| c as f64 * 1000.0 / window_ms)
            .collect();
        self.plasticity
            .window_update(&mut self.assembly.network, &rates, r, window_ms);
        self.total_abs_dw += self.plasticity.last_sum_abs_dw;
        self.window_spike_counts.fill(0);
        self.window_spikes.clear();
        deltas
    }

    fn sample(&self) -> Sample {
        let target = self.trajectory.position(self.time_ms());
        let re = gaze_error(&self.geometry, &self.pose, target);
        let angles = AXES.map(|a| self.pose.angle_deg(a));
        let cmd = AXES.map(|a| self.pose.commanded_ticks(a));
        Sample {
            t_ms: self.time_ms(),
            target_cm: target,
            dot_px: [
                (self.last_dots[0].x, self.last_dots[0].y, self.last_dots[0].visible),
                (self.last_dots[1].x, self.last_dots[1].y, self.last_dots[1].visible),
            ],
            re_deg: re,
            angles_deg: angles,
            cmd_ticks: cmd,
            reward: compute_reward(&self.last_dots, &self.frame, self.reward_shape),
        }
    }

    /// Run to `duration_ms`, collecting camera-rate samples.
    pub fn run(&mut self) -> Result<RunResult> {
        let total_ticks = (self.duration_ms / self.dt_ms).round() as u64;
        let mut samples = Vec::new();
        while self.tick < total_ticks {
            self.step_tick()?;
            if self.tick % self.window_ticks == 0 {
                self.close_window();
            }
            if self.tick == self.sample_tick(self.next_sample) {
                samples.push(self.sample());
                self.next_sample += 1;
            }
        }
        Ok(RunResult {
            metrics: compute_metrics(&samples),
            samples,
            spike_counts: self.spike_counts.clone(),
            total_abs_dw: self.total_abs_dw,
        })
    }
}

/// Camera-rate trace as a columnar text file; fixed formatting makes runs
/// byte-comparable.
pub fn format_trace(samples: &[Sample]) -> String {
    let mut out = String::from(
        "t_ms target_x_cm target_y_cm dot_lx dot_ly dot_lv dot_rx dot_ry dot_rv \
         re_lh re_lv re_rh re_rv lp lt rp rt np nt reward\n",
    );
    for s in samples {
        let _ = write!(
            out,
            "{:.1} {:.4} {:.4} {:.4} {:.4} {} {:.4} {:.4} {} ",
            s.t_ms,
            s.target_cm.0,
            s.target_cm.1,
            s.dot_px[0].0,
            s.dot_px[0].1,
            s.dot_px[0].2 as u8,
            s.dot_px[1].0,
            s.dot_px[1].1,
            s.dot_px[1].2 as u8,
        );
        for v in s.re_deg {
            let _ = write!(out, "{:.6} ", v);
        }
        for v in s.angles_deg {
            let _ = write!(out, "{:.6} ", v);
        }
        let _ = writeln!(out, "{:.6}", s.reward);
    }
    out
}

pub fn format_metrics(metrics: &Metrics) -> String {
    let axes = ["left_h", "left_v", "right_h", "right_v"];
    let mut out = String::from("axis rmse_deg median_re_deg mean_re_deg\n");
    for (k, name) in axes.iter().enumerate() {
        let _ = writeln!(
            out,
            "{name} {:.4} {:.4} {:.4}",
            metrics.rmse_deg[k], metrics.median_re_deg[k], metrics.mean_re_deg[k]
        );
    }
    let _ = writeln!(out, "overall_mean_re_deg {:.4}", metrics.overall_mean_re_deg);
    let _ = writeln!(out, "n_samples {}", metrics.n_samples);
    out
}

/// Learning comparison: paired runs per seed with plasticity off and on.
pub fn compare_learning(cfg: &Config, seeds: &[u64]) -> Result<Vec<(u64, Metrics, Metrics)>> {
    let mut rows = Vec::new();
    for &seed in seeds {
        let mut base = cfg.clone();
        base.set("harness.seed", &seed.to_string())?;
        base.set("learning.enabled", "false")?;
        let off = Simulation::new(&base)?.run_owned()?;
        base.set("learning.enabled", "true")?;
        let on = Simulation::new(&base)?.run_owned()?;
        rows.push((seed, off.metrics, on.metrics));
    }
    Ok(rows)
}

impl Simulation {
    fn run_owned(mut self) -> Result<RunResult> {
        self.run()
    }
}

/// Columnar RF-grid dump for inspection.
pub fn format_rf_grid(assembly: &ControllerAssembly) -> String {
    let mut out = String::from("id x0 y0 side ecc dx dy left upper peripheral\n");
    for rf in &assembly.grid.rfs {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {} {} {}",
            rf.id,
            rf.x0,
            rf.y0,
            rf.side,
            rf.ecc,
            rf.dx,
            rf.dy,
            rf.left as u8,
            rf.upper as u8,
            rf.peripheral as u8
        );
    }
    out
}
