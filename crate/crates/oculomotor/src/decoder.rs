//! Rate-window decoding of motor-neuron activity into signed servo deltas,
//! plus the servo tick <-> degree mapping and range-of-motion clamps.

use crate::error::{Error, Result};

/// AX-12A-style servo scale: positions 0..=1023 span 300 degrees, 512 is
/// straight ahead.
pub const SERVO_MIN: i32 = 0;
pub const SERVO_MAX: i32 = 1023;
pub const SERVO_CENTER: i32 = 512;
pub const SERVO_RANGE_DEG: f64 = 300.0;
pub const TICK_DEG: f64 = SERVO_RANGE_DEG / 1023.0;

pub fn ticks_to_deg(ticks: f64) -> f64 {
    (ticks - SERVO_CENTER as f64) * TICK_DEG
}

pub fn deg_to_ticks(deg: f64) -> i32 {
    SERVO_CENTER + (deg / TICK_DEG).round() as i32
}

/// The six servo axes of the head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Axis {
    LeftPan,
    LeftTilt,
    RightPan,
    RightTilt,
    NeckPan,
    NeckTilt,
}

pub const AXES: [Axis; 6] = [
    Axis::LeftPan,
    Axis::LeftTilt,
    Axis::RightPan,
    Axis::RightTilt,
    Axis::NeckPan,
    Axis::NeckTilt,
];

impl Axis {
    pub fn index(&self) -> usize {
        AXES.iter().position(|a| a == self).unwrap()
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::LeftPan => "left_pan",
            Axis::LeftTilt => "left_tilt",
            Axis::RightPan => "right_pan",
            Axis::RightTilt => "right_tilt",
            Axis::NeckPan => "neck_pan",
            Axis::NeckTilt => "neck_tilt",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DecodeWindowSpec {
    pub window_ms: f64,
    /// Rate difference mapped to a full-scale delta, Hz.
    pub max_rate_hz: f64,
    pub max_delta_per_window: i32,
}

impl DecodeWindowSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_ms > 0.0) {
            return Err(Error::config("motor-decoder", "window must be > 0"));
        }
        if !(self.max_rate_hz > 0.0) {
            return Err(Error::config("motor-decoder", "max_rate must be > 0"));
        }
        if self.max_delta_per_window < 1 {
            return Err(Error::config("motor-decoder", "max_delta_per_window must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServoCommandDelta {
    pub axis: Axis,
    pub delta: i32,
}

/// Decode one window: opposing direction-group rates subtract, the net rate
/// is clamped to +/- max_rate and scaled to +/- max_delta ticks.
pub fn decode_window(rate_positive: f64, rate_negative: f64, spec: &DecodeWindowSpec) -> i32 {
    debug_assert!(rate_positive >= 0.0 && rate_negative >= 0.0);
    let net = (rate_positive - rate_negative).clamp(-spec.max_rate_hz, spec.max_rate_hz);
    (net / spec.max_rate_hz * spec.max_delta_per_window as f64).round() as i32
}

/// Per-axis range-of-motion limits in servo ticks from center.
#[derive(Debug, Clone, Copy)]
pub struct RomLimits {
    pub eye_pan_ticks: i32,
    pub eye_tilt_ticks: i32,
    pub neck_pan_ticks: i32,
    pub neck_tilt_ticks: i32,
}

impl RomLimits {
    pub fn from_degrees(eye_pan: f64, eye_tilt: f64, neck_pan: f64, neck_tilt: f64) -> RomLimits {
        let t = |deg: f64| (deg / TICK_DEG).floor() as i32;
        RomLimits {
            eye_pan_ticks: t(eye_pan),
            eye_tilt_ticks: t(eye_tilt),
            neck_pan_ticks: t(neck_pan),
            neck_tilt_ticks: t(neck_tilt),
        }
    }

    pub fn limit_ticks(&self, axis: Axis) -> i32 {
        match axis {
            Axis::LeftPan | Axis::RightPan => self.eye_pan_ticks,
            Axis::LeftTilt | Axis::RightTilt => self.eye_tilt_ticks,
            Axis::NeckPan => self.neck_pan_ticks,
            Axis::NeckTilt => self.neck_tilt_ticks,
        }
    }

    /// Apply a delta to a commanded position, clamping to the axis ROM and
    /// the valid servo range.
    pub fn apply(&self, axis: Axis, current_ticks: i32, delta: i32) -> i32 {
        let lim = self.limit_ticks(axis);
        (current_ticks + delta)
            .clamp(SERVO_CENTER - lim, SERVO_CENTER + lim)
            .clamp(SERVO_MIN, SERVO_MAX)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec() -> DecodeWindowSpec {
        DecodeWindowSpec { window_ms: 20.0, max_rate_hz: 400.0, max_delta_per_window: 40 }
    }

    #[test]
    fn decode_endpoints() {
        let s = spec();
        assert_eq!(decode_window(0.0, 0.0, &s), 0);
        assert_eq!(decode_window(400.0, 0.0, &s), 40);
        assert_eq!(decode_window(0.0, 400.0, &s), -40);
        assert_eq!(decode_window(200.0, 200.0, &s), 0);
        assert_eq!(decode_window(1e6, 0.0, &s), 40);
    }

    #[test]
    fn rom_clamp_holds_at_limit() {
        let rom = RomLimits::from_degrees(100.0, 70.0, 45.0, 30.0);
        let at_limit = SERVO_CENTER + rom.eye_pan_ticks;
        assert_eq!(rom.apply(Axis::LeftPan, at_limit, 5), at_limit);
        assert_eq!(rom.apply(Axis::LeftPan, at_limit, 0), at_limit);
        assert_eq!(rom.apply(Axis::NeckTilt, SERVO_CENTER, 0), SERVO_CENTER);
    }

    #[test]
    fn tick_degree_arithmetic() {
        // one tick from center ~ 0.2933 degrees
        assert!((ticks_to_deg(513.0) - 300.0 / 1023.0).abs() < 1e-12);
        assert_eq!(ticks_to_deg(512.0), 0.0);
    }

    proptest! {
        #[test]
        fn decode_is_odd_and_monotone(a in 0.0..2000.0f64, b in 0.0..2000.0f64, c in 0.0..2000.0f64) {
            let s = spec();
            // odd in the rate difference
            prop_assert_eq!(decode_window(a, b, &s), -decode_window(b, a, &s));
            // nondecreasing in the net rate
            let (lo, hi) = if a <= c { (a, c) } else { (c, a) };
            prop_assert!(decode_window(lo, b, &s) <= decode_window(hi, b, &s));
            // saturation
            prop_assert!(decode_window(a, b, &s).abs() <= s.max_delta_per_window);
        }

        #[test]
        fn quantization_round_trips_within_one_tick(deg in -150.0..150.0f64) {
            let ticks = deg_to_ticks(deg);
            let back = ticks_to_deg(ticks as f64);
            prop_assert!((back - deg).abs() <= TICK_DEG / 2.0 + 1e-9);
        }
    }
}
