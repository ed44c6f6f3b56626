//! Physical-setup simulation: target trajectories on a wall, eye/neck servo
//! kinematics with first-order lag, and rendering of the laser dot into each
//! eye's frame.

use rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decoder::{self, Axis, RomLimits, SERVO_CENTER};
use crate::error::{Error, Result};
use crate::retina::{FrameSpec, TargetDot};

#[derive(Debug, Clone, Copy)]
pub struct Geometry {
    pub wall_distance_cm: f64,
    pub interocular_cm: f64,
    pub fov_h_deg: f64,
    pub fov_v_deg: f64,
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.wall_distance_cm > 0.0) {
            return Err(Error::config("plant-sim", "wall_distance must be > 0"));
        }
        if !(self.fov_h_deg > 0.0 && self.fov_v_deg > 0.0) {
            return Err(Error::config("plant-sim", "fields of view must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Eye {
    Left,
    Right,
}

pub const EYES: [Eye; 2] = [Eye::Left, Eye::Right];

/// Commanded and actual servo state for all six axes. Commands are integer
/// ticks; the actual position chases the command with a first-order lag and
/// is quantized to the tick grid when read. Lag state is stored as the
/// deviation from center so that mirrored poses stay exact float negations
/// of each other (negation is exact; 1024 - x is not).
#[derive(Debug, Clone)]
pub struct Pose {
    cmd_ticks: [i32; 6],
    servo_dev: [f64; 6],
}

impl Default for Pose {
    fn default() -> Self {
        Pose {
            cmd_ticks: [SERVO_CENTER; 6],
            servo_dev: [0.0; 6],
        }
    }
}

impl Pose {
    pub fn command(&mut self, axis: Axis, delta: i32, rom: &RomLimits) {
        let i = axis.index();
        self.cmd_ticks[i] = rom.apply(axis, self.cmd_ticks[i], delta);
    }

    pub fn commanded_ticks(&self, axis: Axis) -> i32 {
        self.cmd_ticks[axis.index()]
    }

    /// Quantized actual servo position.
    pub fn ticks(&self, axis: Axis) -> i32 {
        SERVO_CENTER + self.servo_dev[axis.index()].round() as i32
    }

    pub fn angle_deg(&self, axis: Axis) -> f64 {
        decoder::ticks_to_deg(self.ticks(axis) as f64)
    }

    /// Advance the first-order servo lag by dt.
    pub fn integrate(&mut self, dt_ms: f64, tau_ms: f64) {
        let k = 1.0 - (-dt_ms / tau_ms).exp();
        for i in 0..6 {
            let target = (self.cmd_ticks[i] - SERVO_CENTER) as f64;
            self.servo_dev[i] += (target - self.servo_dev[i]) * k;
        }
    }

    /// Jump commands and positions to given angles (test/setup helper).
    pub fn snap_to(&mut self, angles_deg: [f64; 6]) {
        for (i, a) in angles_deg.iter().enumerate() {
            let t = decoder::deg_to_ticks(*a);
            self.cmd_ticks[i] = t;
            self.servo_dev[i] = (t - SERVO_CENTER) as f64;
        }
    }

    fn eye_pan(&self, eye: Eye) -> f64 {
        match eye {
            Eye::Left => self.angle_deg(Axis::LeftPan),
            Eye::Right => self.angle_deg(Axis::RightPan),
        }
    }

    fn eye_tilt(&self, eye: Eye) -> f64 {
        match eye {
            Eye::Left => self.angle_deg(Axis::LeftTilt),
            Eye::Right => self.angle_deg(Axis::RightTilt),
        }
    }
}

// minimal 3-vector / yaw-pitch rotation helpers
#[derive(Debug, Clone, Copy)]
struct Vec3 {
    x: f64,
    y: f64,
    z: f64,
}

fn yaw_pitch_apply(yaw_deg: f64, pitch_deg: f64, v: Vec3) -> Vec3 {
    let (sa, ca) = yaw_deg.to_radians().sin_cos();
    let (sb, cb) = pitch_deg.to_radians().sin_cos();
    // pitch about x (positive = up), then yaw about y (positive = right)
    let p = Vec3 { x: v.x, y: cb * v.y + sb * v.z, z: -sb * v.y + cb * v.z };
    Vec3 { x: ca * p.x + sa * p.z, y: p.y, z: -sa * p.x + ca * p.z }
}

fn yaw_pitch_unapply(yaw_deg: f64, pitch_deg: f64, v: Vec3) -> Vec3 {
    let (sa, ca) = yaw_deg.to_radians().sin_cos();
    let (sb, cb) = pitch_deg.to_radians().sin_cos();
    let q = Vec3 { x: ca * v.x - sa * v.z, y: v.y, z: sa * v.x + ca * v.z };
    Vec3 { x: q.x, y: cb * q.y - sb * q.z, z: sb * q.y + cb * q.z }
}

fn eye_position_world(geom: &Geometry, pose: &Pose, eye: Eye) -> Vec3 {
    let offset = match eye {
        Eye::Left => -geom.interocular_cm / 2.0,
        Eye::Right => geom.interocular_cm / 2.0,
    };
    yaw_pitch_apply(
        pose.angle_deg(Axis::NeckPan),
        pose.angle_deg(Axis::NeckTilt),
        Vec3 { x: offset, y: 0.0, z: 0.0 },
    )
}

/// Azimuth/elevation (degrees) of a wall point relative to the eye's current
/// optical axis. Positive azimuth = right, positive elevation = up.
pub fn wall_to_angles(
    geom: &Geometry,
    point_cm: (f64, f64),
    eye: Eye,
    pose: &Pose,
) -> (f64, f64) {
    let eye_pos = eye_position_world(geom, pose, eye);
    let rel = Vec3 {
        x: point_cm.0 - eye_pos.x,
        y: point_cm.1 - eye_pos.y,
        z: geom.wall_distance_cm - eye_pos.z,
    };
    let head = yaw_pitch_unapply(
        pose.angle_deg(Axis::NeckPan),
        pose.angle_deg(Axis::NeckTilt),
        rel,
    );
    let v = yaw_pitch_unapply(pose.eye_pan(eye), pose.eye_tilt(eye), head);
    let az = v.x.atan2(v.z).to_degrees();
    let el = v.y.atan2(v.x.hypot(v.z)).to_degrees();
    (az, el)
}

/// Inverse of [`wall_to_angles`]: intersect the gaze ray for (az, el) with
/// the wall plane and return the wall point.
pub fn angles_to_wall(
    geom: &Geometry,
    az_el_deg: (f64, f64),
    eye: Eye,
    pose: &Pose,
) -> (f64, f64) {
    let (sa, ca) = az_el_deg.0.to_radians().sin_cos();
    let (sb, cb) = az_el_deg.1.to_radians().sin_cos();
    let dir_eye = Vec3 { x: cb * sa, y: sb, z: cb * ca };
    let in_head = yaw_pitch_apply(pose.eye_pan(eye), pose.eye_tilt(eye), dir_eye);
    let dir = yaw_pitch_apply(
        pose.angle_deg(Axis::NeckPan),
        pose.angle_deg(Axis::NeckTilt),
        in_head,
    );
    let eye_pos = eye_position_world(geom, pose, eye);
    let t = (geom.wall_distance_cm - eye_pos.z) / dir.z;
    (eye_pos.x + t * dir.x, eye_pos.y + t * dir.y)
}

/// Linear angle -> pixel map of the wall point into the eye's frame.
pub fn render_frame(
    geom: &Geometry,
    frame: &FrameSpec,
    point_cm: (f64, f64),
    eye: Eye,
    pose: &Pose,
    dot_radius_px: f64,
) -> TargetDot {
    let (az, el) = wall_to_angles(geom, point_cm, eye, pose);
    let half_w = frame.width as f64 / 2.0;
    let half_h = frame.height as f64 / 2.0;
    let x = half_w + az / (geom.fov_h_deg / 2.0) * half_w;
    let y = half_h - el / (geom.fov_v_deg / 2.0) * half_h;
    let visible = az.abs() <= geom.fov_h_deg / 2.0 && el.abs() <= geom.fov_v_deg / 2.0;
    TargetDot { x, y, radius: dot_radius_px, visible }
}

/// Target angles from the head origin (neck pivot), in the world frame.
pub fn target_angles_from_head(geom: &Geometry, point_cm: (f64, f64)) -> (f64, f64) {
    let az = point_cm.0.atan2(geom.wall_distance_cm).to_degrees();
    let el = point_cm
        .1
        .atan2(point_cm.0.hypot(geom.wall_distance_cm))
        .to_degrees();
    (az, el)
}

/// Per-eye per-axis relative gaze error in degrees:
/// (eye angle + neck angle) - target angle from head. Order:
/// [left horizontal, left vertical, right horizontal, right vertical].
pub fn gaze_error(geom: &Geometry, pose: &Pose, point_cm: (f64, f64)) -> [f64; 4] {
    let (taz, tel) = target_angles_from_head(geom, point_cm);
    [
        pose.angle_deg(Axis::LeftPan) + pose.angle_deg(Axis::NeckPan) - taz,
        pose.angle_deg(Axis::LeftTilt) + pose.angle_deg(Axis::NeckTilt) - tel,
        pose.angle_deg(Axis::RightPan) + pose.angle_deg(Axis::NeckPan) - taz,
        pose.angle_deg(Axis::RightTilt) + pose.angle_deg(Axis::NeckTilt) - tel,
    ]
}

/// Target trajectory on the wall.
#[derive(Debug, Clone)]
pub enum Trajectory {
    /// New uniform position every dwell period, pure function of (seed, t).
    RandomSteps {
        seed: u64,
        dwell_ms: f64,
        amplitude_x_cm: f64,
        amplitude_y_cm: f64,
    },
    /// Cycles a fixed list of wall points.
    Repetitive { points: Vec<(f64, f64)>, dwell_ms: f64 },
    /// Piecewise-constant waypoints (t_ms, x_cm, y_cm) from a file.
    Scripted { waypoints: Vec<(f64, f64, f64)> },
}

impl Trajectory {
    pub fn parse_scripted(text: &str, name: &str) -> Result<Trajectory> {
        let mut waypoints = Vec::new();
        let mut prev_t = f64::NEG_INFINITY;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = |what: &str| {
                Error::input(format!("{name} line {}: {what}", lineno + 1))
            };
            if fields.len() != 3 {
                return Err(bad("expected `t_ms x_cm y_cm`"));
            }
            let t: f64 = fields[0].parse().map_err(|_| bad("bad t_ms"))?;
            let x: f64 = fields[1].parse().map_err(|_| bad("bad x_cm"))?;
            let y: f64 = fields[2].parse().map_err(|_| bad("bad y_cm"))?;
            if t <= prev_t {
                return Err(bad("timestamps must be strictly increasing"));
            }
            prev_t = t;
            waypoints.push((t, x, y));
        }
        if waypoints.is_empty() {
            return Err(Error::input(format!("{name}: no waypoints")));
        }
        Ok(Trajectory::Scripted { waypoints })
    }

    pub fn load_scripted(path: &std::path::Path) -> Result<Trajectory> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))?;
        Trajectory::parse_scripted(&text, &path.display().to_string())
    }

    /// Wall position at time t (piecewise constant in all variants).
    pub fn position(&self, t_ms: f64) -> (f64, f64) {
        debug_assert!(t_ms >= 0.0);
        match self {
            Trajectory::RandomSteps { seed, dwell_ms, amplitude_x_cm, amplitude_y_cm } => {
                let index = (t_ms / dwell_ms).floor() as u64;
                // fixed word consumption per waypoint keeps this a pure
                // function of (seed, index)
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_word_pos(index as u128 * 4);
                let unit = |r: u64| r as f64 / u64::MAX as f64 * 2.0 - 1.0;
                let x = unit(rng.next_u64()) * amplitude_x_cm;
                let y = unit(rng.next_u64()) * amplitude_y_cm;
                (x, y)
            }
            Trajectory::Repetitive { points, dwell_ms } => {
                let index = (t_ms / dwell_ms).floor() as usize % points.len();
                points[index]
            }
            Trajectory::Scripted { waypoints } => {
                let mut current = (waypoints[0].1, waypoints[0].2);
                for &(t, x, y) in waypoints {
                    if t <= t_ms {
                        current = (x, y);
                    } else {
                        break;
                    }
                }
                current
            }
        }
    }
}
