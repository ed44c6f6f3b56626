//! Behavioral acceptance suite for the closed-loop simulator.
//!
//! Each test checks one contract of the controller and prints a single
//! PASS/FAIL line (run with `-- --nocapture` to see them all). The heavy
//! ten-seed run matrix is computed once and shared.
//!
//! Contracts covered:
//!   1.  tracking accuracy over ten seeded 2-minute random-step runs
//!   2.  learning improves tracking on most seeds, per axis
//!   3.  overall gaze bias stays small without learning
//!   4.  a target at the gaze center decodes to zero deltas (exactly)
//!   5.  left/right vertical deltas are identical at every window (exactly)
//!   6.  left-hemifield drive never excites rightward eye motoneurons
//!   7.  mirrored trajectories produce exactly mirrored traces
//!   8.  fixation on a static off-center dot shows high-frequency jitter
//!   9.  analytic oracles: eligibility decay, EMA step, geometry, decoder
//!   10. repeated identical runs are byte-identical
//!   11. the neck joins in only for peripheral targets

use std::sync::OnceLock;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use oculomotor::config::Config;
use oculomotor::connectome::{PoolTag, Side};
use oculomotor::decoder::{decode_window, DecodeWindowSpec};
use oculomotor::harness::{format_metrics, format_trace, Metrics, Simulation};
use oculomotor::learning::{ema_alpha, update_modulator, update_trace, RewardState};
use oculomotor::plant::{angles_to_wall, wall_to_angles, Eye, Geometry, Pose, Trajectory};
use oculomotor::retina::{sc_activation, TargetDot};

const SEEDS: [u64; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + rng.next_u64() as f64 / u64::MAX as f64 * (hi - lo)
}

fn report(criterion: u32, name: &str, ok: bool) {
    println!("criterion {criterion:02} {name}: {}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {criterion:02} {name} failed");
}

fn base_config() -> Config {
    // defaults only: acceptance must not depend on the caller's environment
    Config::default()
}

fn run_once(seed: u64, duration_ms: u64, learning: bool) -> oculomotor::harness::RunResult {
    let mut cfg = base_config();
    cfg.set("harness.seed", &seed.to_string()).unwrap();
    cfg.set("harness.duration_ms", &duration_ms.to_string()).unwrap();
    cfg.set("learning.enabled", if learning { "true" } else { "false" }).unwrap();
    Simulation::new(&cfg).unwrap().run().unwrap()
}

struct SeedRuns {
    off: Metrics,
    on: Metrics,
}

/// Ten 2-minute runs, learning off and on, shared by criteria 1-3.
fn seed_matrix() -> &'static Vec<SeedRuns> {
    static MATRIX: OnceLock<Vec<SeedRuns>> = OnceLock::new();
    MATRIX.get_or_init(|| {
        SEEDS
            .iter()
            .map(|&seed| SeedRuns {
                off: run_once(seed, 120_000, false).metrics,
                on: run_once(seed, 120_000, true).metrics,
            })
            .collect()
    })
}

/// Build a simulation from defaults with a fixed scripted trajectory.
fn scripted_sim(waypoints: Vec<(f64, f64, f64)>, duration_ms: u64, learning: bool) -> Simulation {
    let mut cfg = base_config();
    cfg.set("harness.duration_ms", &duration_ms.to_string()).unwrap();
    cfg.set("learning.enabled", if learning { "true" } else { "false" }).unwrap();
    let mut sim = Simulation::new(&cfg).unwrap();
    sim.trajectory = Trajectory::Scripted { waypoints };
    sim
}

#[test]
fn c01_tracking_accuracy() {
    let ok = seed_matrix().iter().all(|runs| {
        (0..4).all(|k| {
            runs.off.rmse_deg[k] <= 4.0 && runs.off.median_re_deg[k].abs() <= 2.5
        })
    });
    report(1, "tracking accuracy (RMSE <= 4.0 deg, |median| <= 2.5 deg)", ok);
}

#[test]
fn c02_learning_improves_tracking() {
    let matrix = seed_matrix();
    let ok = (0..4).all(|k| {
        let improved = matrix
            .iter()
            .filter(|runs| runs.on.rmse_deg[k] <= runs.off.rmse_deg[k])
            .count();
        improved >= 7
    });
    report(2, "learning lowers RMSE on >= 7 of 10 seeds per axis", ok);
}

#[test]
fn c03_overall_bias() {
    let ok = seed_matrix()
        .iter()
        .all(|runs| runs.off.overall_mean_re_deg.abs() <= 1.0);
    report(3, "overall bias (|mean RE| <= 1.0 deg without learning)", ok);
}

#[test]
fn c04_fixation_gate() {
    // target straight ahead at the gaze center: every decoded delta must be
    // exactly zero and the gaze error identically zero, from the first
    // window onward (well beyond the required 2 s of quiescence)
    let mut sim = scripted_sim(vec![(0.0, 0.0, 0.0)], 8_000, false);
    let window_ticks = (sim.window_ms() / 1.0).round() as u64;
    let total = 8_000u64;
    let mut all_zero = true;
    for tick in 1..=total {
        sim.step_tick().unwrap();
        if tick % window_ticks == 0 {
            let deltas = sim.close_window();
            all_zero &= deltas == [0i32; 6];
        }
    }
    let target = (0.0, 0.0);
    let re = oculomotor::plant::gaze_error(&sim.geometry, &sim.pose, target);
    let ok = all_zero && re.iter().all(|v| v.abs() <= 2.5) && re.iter().all(|&v| v == 0.0);
    report(4, "fixation gate (centered target decodes to exact zeros)", ok);
}

#[test]
fn c05_vertical_conjugacy() {
    // left and right eye tilt deltas must agree at every decode window
    let mut ok = true;
    for seed in [1u64, 2, 3] {
        let mut cfg = base_config();
        cfg.set("harness.seed", &seed.to_string()).unwrap();
        cfg.set("harness.duration_ms", "30000").unwrap();
        let mut sim = Simulation::new(&cfg).unwrap();
        let window_ticks = (sim.window_ms() / 1.0).round() as u64;
        for tick in 1..=30_000u64 {
            sim.step_tick().unwrap();
            if tick % window_ticks == 0 {
                let deltas = sim.close_window();
                // AXES order: lp, lt, rp, rt, np, nt
                ok &= deltas[1] == deltas[3];
            }
        }
    }
    report(5, "vertical conjugacy (identical tilt deltas every window)", ok);
}

#[test]
fn c06_contralateral_inhibition() {
    // sustained drive from left-hemifield SC cells (both eyes) must leave
    // every rightward eye motoneuron silent after a 100 ms transient
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0117A);
    let mut ok = true;
    for _ in 0..10 {
        let cfg = base_config();
        let mut sim = Simulation::new(&cfg).unwrap();
        let x = uniform(&mut rng, 130.0, 300.0);
        let y = uniform(&mut rng, 140.0, 340.0);
        let dot = TargetDot { x, y, radius: 12.0, visible: true };
        let cov = sim.assembly.grid.coverages(&dot);
        let active = sc_activation(&cov, 0.1);
        assert!(!active.is_empty(), "placement ({x:.0},{y:.0}) activates no SC cells");
        let mut external = vec![0.0; sim.assembly.n_neurons()];
        for &rf in &active {
            external[sim.assembly.sc_id(Eye::Left, rf) as usize] = 0.6;
            external[sim.assembly.sc_id(Eye::Right, rf) as usize] = 0.6;
        }
        let rightward: Vec<u32> = [Eye::Left, Eye::Right]
            .iter()
            .flat_map(|&eye| sim.assembly.pools[&PoolTag::HMn(eye, Side::Right)].clone())
            .collect();
        let leftward: Vec<u32> = [Eye::Left, Eye::Right]
            .iter()
            .flat_map(|&eye| sim.assembly.pools[&PoolTag::HMn(eye, Side::Left)].clone())
            .collect();
        let mut spikes = Vec::new();
        let mut right_spikes = 0u64;
        let mut left_spikes = 0u64;
        for step in 0..600u64 {
            spikes.clear();
            sim.assembly.network.step(&external, &mut spikes).unwrap();
            if step >= 100 {
                right_spikes +=
                    spikes.iter().filter(|s| rightward.contains(&s.neuron)).count() as u64;
                left_spikes +=
                    spikes.iter().filter(|s| leftward.contains(&s.neuron)).count() as u64;
            }
        }
        ok &= right_spikes == 0 && left_spikes > 0;
    }
    report(6, "contralateral inhibition (rightward MNs silent)", ok);
}

#[test]
fn c07_mirror_equivariance() {
    // mirroring the target trajectory about the vertical midline must yield
    // the exactly mirrored motor trace: eyes swap, pan angles negate
    let mut ok = true;
    for seed in [1u64, 2, 3] {
        let dwell = 1500.0;
        let source = Trajectory::RandomSteps {
            seed,
            dwell_ms: dwell,
            amplitude_x_cm: 12.0,
            amplitude_y_cm: 8.0,
        };
        let mut straight = Vec::new();
        let mut mirrored = Vec::new();
        for k in 0..20u32 {
            let t = k as f64 * dwell;
            let (x, y) = source.position(t + 0.5);
            straight.push((t, x, y));
            mirrored.push((t, -x, y));
        }
        let a = scripted_sim(straight, 30_000, false).run().unwrap();
        let b = scripted_sim(mirrored, 30_000, false).run().unwrap();
        for (sa, sb) in a.samples.iter().zip(&b.samples) {
            let ang_a = sa.angles_deg;
            let ang_b = sb.angles_deg;
            ok &= ang_b[0] == -ang_a[2] // left pan  <- -right pan
                && ang_b[1] == ang_a[3] //  left tilt <-  right tilt
                && ang_b[2] == -ang_a[0]
                && ang_b[3] == ang_a[1]
                && ang_b[4] == -ang_a[4] // neck pan negates
                && ang_b[5] == ang_a[5];
            ok &= sb.re_deg[0] == -sa.re_deg[2]
                && sb.re_deg[1] == sa.re_deg[3]
                && sb.re_deg[2] == -sa.re_deg[0]
                && sb.re_deg[3] == sa.re_deg[1];
        }
    }
    report(7, "mirror equivariance (exactly mirrored traces)", ok);
}

#[test]
fn c08_microsaccade_signature() {
    // fixating a static off-center dot (radius 12 px, larger than a foveal
    // RF) must keep producing small corrective movements: the > 2 Hz
    // component of the horizontal eye angle has nonzero variance
    let result = scripted_sim(vec![(0.0, 8.0, 0.0)], 20_000, false).run().unwrap();
    let xs: Vec<f64> = result
        .samples
        .iter()
        .filter(|s| s.t_ms >= 5_000.0)
        .map(|s| s.angles_deg[0])
        .collect();
    // high-pass at ~2 Hz: subtract a centered 0.5 s moving average
    let half = 11usize; // ~0.24 s each side at 45 samples/s
    let mut var = 0.0;
    let mut n = 0usize;
    for i in half..xs.len() - half {
        let local: f64 = xs[i - half..=i + half].iter().sum::<f64>() / (2 * half + 1) as f64;
        let r = xs[i] - local;
        var += r * r;
        n += 1;
    }
    var /= n.max(1) as f64;
    report(8, "microsaccade signature (nonzero >2 Hz fixation variance)", var > 1e-6);
}

#[test]
fn c09_analytic_oracles() {
    // eligibility trace: Euler decay against exp(-t/tau) over 5 s
    let tau_e = 1000.0;
    let mut e = 1.0f64;
    let mut decay_ok = true;
    for t in 1..=5000u32 {
        e = update_trace(e, 0.0, tau_e, 1.0);
        decay_ok &= (e - (-(t as f64) / tau_e).exp()).abs() < 1e-3;
    }

    // EMA step response against the closed form 1 - (1 - alpha)^n
    let mut state = RewardState::default();
    let alpha = ema_alpha(20.0, 5000.0);
    let mut ema_ok = true;
    for n in 1..=500u32 {
        update_modulator(&mut state, 1.0, 20.0, 5000.0);
        let exact = 1.0 - (1.0 - alpha).powi(n as i32);
        ema_ok &= (state.r_avg - exact).abs() < 1e-6;
    }

    // geometry: wall -> angles -> wall round trip
    let geom = Geometry {
        wall_distance_cm: 55.0,
        interocular_cm: 6.5,
        fov_h_deg: 60.0,
        fov_v_deg: 40.0,
    };
    let mut pose = Pose::default();
    pose.snap_to([3.0, -2.0, 1.5, 2.0, -4.0, 1.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut geo_ok = true;
    for _ in 0..200 {
        let p = (uniform(&mut rng, -25.0, 25.0), uniform(&mut rng, -15.0, 15.0));
        for eye in [Eye::Left, Eye::Right] {
            let ang = wall_to_angles(&geom, p, eye, &pose);
            let back = angles_to_wall(&geom, ang, eye, &pose);
            geo_ok &= (back.0 - p.0).abs() < 1e-6 && (back.1 - p.1).abs() < 1e-6;
        }
    }

    // decoder endpoints are exact
    let eye_spec = DecodeWindowSpec { window_ms: 20.0, max_rate_hz: 150.0, max_delta_per_window: 40 };
    let neck_spec = DecodeWindowSpec { window_ms: 20.0, max_rate_hz: 150.0, max_delta_per_window: 10 };
    let dec_ok = decode_window(150.0, 0.0, &eye_spec) == 40
        && decode_window(0.0, 150.0, &eye_spec) == -40
        && decode_window(400.0, 0.0, &eye_spec) == 40
        && decode_window(75.0, 75.0, &eye_spec) == 0
        && decode_window(150.0, 0.0, &neck_spec) == 10
        && decode_window(0.0, 150.0, &neck_spec) == -10;

    report(9, "analytic oracles (trace, EMA, geometry, decoder)", decay_ok && ema_ok && geo_ok && dec_ok);
}

#[test]
fn c10_determinism() {
    let a = run_once(5, 15_000, true);
    let b = run_once(5, 15_000, true);
    let ok = format_trace(&a.samples) == format_trace(&b.samples)
        && format_metrics(&a.metrics) == format_metrics(&b.metrics)
        && a.total_abs_dw.to_bits() == b.total_abs_dw.to_bits();
    report(10, "determinism (byte-identical trace and metrics)", ok);
}

#[test]
fn c11_neck_recruitment() {
    // a step inside the eye's comfortable range leaves the neck untouched
    let near = scripted_sim(vec![(0.0, 8.0, 0.0)], 8_000, false).run().unwrap();
    let neck_still = near
        .samples
        .iter()
        .all(|s| s.cmd_ticks[4] == 512 && s.cmd_ticks[5] == 512);
    // a peripheral step recruits the neck
    let far = scripted_sim(vec![(0.0, 24.0, 0.0)], 8_000, false).run().unwrap();
    let neck_moved = far.samples.iter().any(|s| s.angles_deg[4].abs() > 0.1);
    report(11, "neck recruitment (peripheral targets only)", neck_still && neck_moved);
}
