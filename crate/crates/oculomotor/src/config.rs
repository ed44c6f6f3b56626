//! Flat key-value configuration with dotted module prefixes.
//!
//! Every tunable constant in the simulator lives here, with its default in
//! [`DEFAULTS`]. A config file overrides defaults, environment variables
//! (prefix `OCULO_`, dots spelled as `__`) override the file, and CLI flags
//! override everything.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Environment variable prefix: `retina.activation_fraction` is overridden by
/// `OCULO_RETINA__ACTIVATION_FRACTION`.
pub const ENV_PREFIX: &str = "OCULO_";

/// Every config key and its default value. This table is the single
/// source of truth for all constants the simulator uses.
pub const DEFAULTS: &[(&str, &str)] = &[
    // simulation substrate
    ("sim.dt_ms", "1.0"),
    ("sim.population", "5"),
    // neuron defaults (leaky integrate-and-fire)
    ("snn.tau_m_ms", "20.0"),
    ("snn.threshold", "1.0"),
    ("snn.reset", "0.0"),
    ("snn.refractory_ms", "2.0"),
    ("snn.sc_refractory_ms", "4.0"),
    ("snn.tn_leak_scale", "0.02"),
    ("snn.opn_bias", "0.127"),
    ("snn.initial_stagger", "true"),
    // retina / superior colliculus front end
    ("retina.width", "720"),
    ("retina.height", "480"),
    ("retina.fovea_half_width", "30"),
    ("retina.band1_half_extent", "60"),
    ("retina.band1_side", "10"),
    ("retina.band2_half_extent", "200"),
    ("retina.band2_side", "20"),
    ("retina.outer_side", "40"),
    ("retina.peripheral_threshold_px", "240"),
    ("retina.activation_fraction", "0.1"),
    ("retina.sc_drive", "0.6"),
    ("retina.weight_min", "0.05"),
    ("retina.weight_max", "0.5"),
    ("retina.weight_saturation_px", "360"),
    // connectome edge-class weights (pool-level gains; see module docs)
    ("connectome.sc_llbn_gain", "0.64"),
    ("connectome.sc_ebn_gain", "0.64"),
    ("connectome.sc_llbn_gain_v", "0.33"),
    ("connectome.sc_ebn_gain_v", "0.33"),
    ("connectome.llbn_ebn_weight", "0.10"),
    ("connectome.llbn_ebn_delay_ms", "5.0"),
    ("connectome.ebn_ifn_weight", "0.20"),
    ("connectome.ifn_llbn_weight", "-0.40"),
    ("connectome.ebn_tn_weight", "0.8"),
    ("connectome.tn_mn_weight", "2.2"),
    ("connectome.tn_dsn_weight", "1.5"),
    ("connectome.tn_dsn_contra_weight", "-1.5"),
    ("connectome.dsn_mn_weight", "1.0"),
    ("connectome.ebn_ibn_weight", "0.30"),
    ("connectome.ibn_contra_weight", "-0.50"),
    ("connectome.ibn_opn_weight", "-0.60"),
    ("connectome.opn_ibn_weight", "-0.30"),
    ("connectome.opn_ebn_weight", "-0.30"),
    ("connectome.sc_opn_fovea_weight", "0.10"),
    ("connectome.sc_fovea_gaze_gain", "1.0"),
    ("connectome.neck_gain", "0.3"),
    ("connectome.verg_s_gain", "0.05"),
    ("connectome.verg_ebn_gain", "0.05"),
    ("connectome.verg_s_dsn_weight", "-0.05"),
    ("connectome.verg_ebn_ifn_weight", "0.20"),
    ("connectome.verg_ifn_ebn_weight", "-0.40"),
    ("connectome.verg_ebn_tn_weight", "0.05"),
    ("connectome.verg_tn_dsn_weight", "0.20"),
    ("connectome.verg_dsn_mn_weight", "0.05"),
    ("connectome.default_delay_ms", "1.0"),
    // motor decoder
    ("decoder.window_ms", "20.0"),
    ("decoder.max_rate_hz", "150.0"),
    ("decoder.eye_max_delta", "40"),
    ("decoder.neck_max_delta", "10"),
    // plant: geometry, servos, target rendering
    ("plant.wall_distance_cm", "55.0"),
    ("plant.interocular_cm", "6.5"),
    ("plant.eye_fov_h_deg", "60.0"),
    ("plant.eye_fov_v_deg", "40.0"),
    ("plant.dot_radius_px", "12.0"),
    ("plant.servo_tau_ms", "30.0"),
    ("plant.eye_pan_rom_deg", "100.0"),
    ("plant.eye_tilt_rom_deg", "70.0"),
    ("plant.neck_pan_rom_deg", "45.0"),
    ("plant.neck_tilt_rom_deg", "30.0"),
    // target trajectory
    ("trajectory.kind", "random"),
    ("trajectory.dwell_ms", "1500"),
    ("trajectory.amplitude_x_cm", "12.0"),
    ("trajectory.amplitude_y_cm", "8.0"),
    ("trajectory.scripted_path", ""),
    ("trajectory.repetitive_points", "-10:-6;10:-6;10:6;-10:6"),
    // reward-modulated Hebbian learning
    ("learning.enabled", "false"),
    ("learning.gamma", "0.002"),
    ("learning.tau_e_ms", "1000.0"),
    ("learning.reward_avg_tau_ms", "5000.0"),
    ("learning.rate_avg_tau_ms", "2000.0"),
    ("learning.w_lo_scale", "1.0"),
    ("learning.w_hi_scale", "1.3"),
    ("learning.modulated_trace_only", "false"),
    ("learning.reward_shape", "triangular"),
    // experiment harness
    ("harness.duration_ms", "120000"),
    ("harness.seed", "1"),
    ("harness.sample_rate_hz", "45.0"),
];

/// Resolved key-value configuration (defaults + file + environment).
#[derive(Debug, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Default for Config {
    fn default() -> Self {
        let values = DEFAULTS
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Config { values }
    }
}

impl Config {
    /// Defaults overlaid with a config file, then with `OCULO_` env vars.
    pub fn load(path: &Path) -> Result<Config> {
        let mut cfg = Config::default();
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config("config", format!("cannot read {}: {e}", path.display()))
        })?;
        cfg.apply_text(&text)?;
        cfg.apply_env();
        Ok(cfg)
    }

    /// Defaults plus environment only (no file).
    pub fn from_defaults_and_env() -> Config {
        let mut cfg = Config::default();
        cfg.apply_env();
        cfg
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config("config", format!("line {}: expected `key = value`", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    fn apply_env(&mut self) {
        let keys: Vec<String> = self.values.keys().cloned().collect();
        for key in keys {
            let env_name = format!("{}{}", ENV_PREFIX, key.replace('.', "__").to_uppercase());
            if let Ok(v) = std::env::var(&env_name) {
                self.values.insert(key, v);
            }
        }
    }

    /// Rejects unknown keys so typos fail loudly at startup.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !self.values.contains_key(key) {
            return Err(Error::config("config", format!("unknown key `{key}`")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values
            .get(key)
            .map(|s| s.as_str())
            .unwrap_or_else(|| panic!("config key {key} missing from defaults table"))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.get(key)
            .parse()
            .map_err(|_| Error::config("config", format!("{key}: expected a number, got `{}`", self.get(key))))
    }

    pub fn u32(&self, key: &str) -> Result<u32> {
        self.get(key)
            .parse()
            .map_err(|_| Error::config("config", format!("{key}: expected an integer, got `{}`", self.get(key))))
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.get(key)
            .parse()
            .map_err(|_| Error::config("config", format!("{key}: expected an integer, got `{}`", self.get(key))))
    }

    pub fn i32(&self, key: &str) -> Result<i32> {
        self.get(key)
            .parse()
            .map_err(|_| Error::config("config", format!("{key}: expected an integer, got `{}`", self.get(key))))
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            "true" | "on" | "1" => Ok(true),
            "false" | "off" | "0" => Ok(false),
            other => Err(Error::config(
                "config",
                format!("{key}: expected true/false, got `{other}`"),
            )),
        }
    }

    /// Render the full resolved configuration as config-file text.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse() {
        let cfg = Config::default();
        assert_eq!(cfg.u32("retina.width").unwrap(), 720);
        assert_eq!(cfg.f64("plant.wall_distance_cm").unwrap(), 55.0);
        assert!(!cfg.bool("learning.enabled").unwrap());
    }

    #[test]
    fn unknown_key_rejected() {
        let mut cfg = Config::default();
        let err = cfg.set("retina.typo", "1").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn file_overlay_and_comments() {
        let mut cfg = Config::default();
        cfg.apply_text("# comment\nretina.activation_fraction = 0.2  # inline\n")
            .unwrap();
        assert_eq!(cfg.f64("retina.activation_fraction").unwrap(), 0.2);
    }

    #[test]
    fn defaults_file_in_repo_matches_table() {
        // config/default.cfg is the committed reference listing every default.
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../../config/default.cfg");
        let text = std::fs::read_to_string(path).expect("config/default.cfg present");
        let mut from_file = Config::default();
        from_file.apply_text(&text).unwrap();
        assert_eq!(from_file.to_text(), Config::default().to_text());
        // and the file mentions every key explicitly
        for (k, _) in DEFAULTS {
            assert!(text.contains(k), "default.cfg missing key {k}");
        }
    }
}
