//! Experiment configuration: reference defaults, a flat `key = value`
//! config-file format, and CLI-style overrides.

use irslink_core::assoc::Algorithm;
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: `{value}` ({reason})")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// All knobs of one experiment. Field defaults follow the reference
/// simulation setup (300 GHz carrier, 64-antenna AP, 10+10 devices,
/// 100x100-element surfaces, 40 m x 40 m floor, 200-slot coherence
/// interval, 23 dBm transmit power, -174 dBm/Hz noise density, 10 dB
/// noise figure, absorption 0.0033 1/m).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub carrier_freq_ghz: f64,
    pub bandwidth_ghz: f64,
    pub noise_density_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub uplink_power_dbm: f64,
    pub ap_power_dbm: f64,
    pub antennas: usize,
    /// Reflecting elements per surface side; a surface has `side^2`
    /// elements.
    pub elements_per_side: usize,
    pub uplink_devices: usize,
    pub downlink_devices: usize,
    pub uplink_irs: usize,
    pub downlink_irs: usize,
    pub kappa_abs: f64,
    /// Side of the square floor, meters.
    pub area_m: f64,
    pub coherence_slots: u64,
    /// Normalized device<->surface estimation-error variance.
    pub sigma2_g: f64,
    /// Normalized surface<->AP estimation-error variance.
    pub sigma2_big_g: f64,
    /// Antenna/element gains in dBi: AP, element in, element out, device.
    pub gains_dbi: [f64; 4],
    pub v_min: f64,
    pub v_max: f64,
    pub pause_slots: u32,
    pub alpha_a: f64,
    pub alpha_s: f64,
    /// Mobility slots to advance before evaluating a trial.
    pub mobility_steps: u64,
    pub device_height_m: f64,
    pub irs_height_m: f64,
    pub ap_height_m: f64,
    /// Exhaustive-search size cap (factorial guard).
    pub es_cap: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub algos: Vec<Algorithm>,
    /// Report rates with the association overhead applied.
    pub overhead: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            carrier_freq_ghz: 300.0,
            bandwidth_ghz: 10.0,
            noise_density_dbm_hz: -174.0,
            noise_figure_db: 10.0,
            uplink_power_dbm: 23.0,
            ap_power_dbm: 23.0,
            antennas: 64,
            elements_per_side: 100,
            uplink_devices: 10,
            downlink_devices: 10,
            uplink_irs: 4,
            downlink_irs: 4,
            kappa_abs: 0.0033,
            area_m: 40.0,
            coherence_slots: 200,
            sigma2_g: 0.0,
            sigma2_big_g: 0.0,
            gains_dbi: [0.0; 4],
            v_min: 0.5,
            v_max: 2.0,
            pause_slots: 5,
            alpha_a: 0.5,
            alpha_s: 0.5,
            mobility_steps: 0,
            device_height_m: 1.0,
            irs_height_m: 10.0,
            ap_height_m: 10.0,
            es_cap: 9,
            trials: 1000,
            base_seed: 1,
            algos: vec![
                Algorithm::GaleShapley,
                Algorithm::Exhaustive,
                Algorithm::Greedy,
                Algorithm::Random,
            ],
            overhead: false,
        }
    }
}

impl ExperimentConfig {
    /// Load a flat `key = value` file over the defaults. `#` starts a
    /// comment; blank lines are ignored.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: idx + 1,
                text: raw.to_string(),
            })?;
            self.apply_key(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Apply one `key = value` override.
    pub fn apply_key(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |reason: &str| ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            reason: reason.to_string(),
        };
        let f = || value.parse::<f64>().map_err(|e| bad(&e.to_string()));
        let u = || value.parse::<usize>().map_err(|e| bad(&e.to_string()));
        match key {
            "carrier_freq_ghz" => self.carrier_freq_ghz = f()?,
            "bandwidth_ghz" => self.bandwidth_ghz = f()?,
            "noise_density_dbm_hz" => self.noise_density_dbm_hz = f()?,
            "noise_figure_db" => self.noise_figure_db = f()?,
            "uplink_power_dbm" => self.uplink_power_dbm = f()?,
            "ap_power_dbm" => self.ap_power_dbm = f()?,
            "power_dbm" => {
                // Convenience: the paper's single transmit-power knob.
                let v = f()?;
                self.uplink_power_dbm = v;
                self.ap_power_dbm = v;
            }
            "antennas" => self.antennas = u()?,
            "elements_per_side" => self.elements_per_side = u()?,
            "uplink_devices" => self.uplink_devices = u()?,
            "downlink_devices" => self.downlink_devices = u()?,
            "uplink_irs" => self.uplink_irs = u()?,
            "downlink_irs" => self.downlink_irs = u()?,
            "irs_per_side" => {
                let v = u()?;
                self.uplink_irs = v;
                self.downlink_irs = v;
            }
            "kappa_abs" => self.kappa_abs = f()?,
            "area_m" => self.area_m = f()?,
            "coherence_slots" => {
                self.coherence_slots = value.parse().map_err(|_| bad("expected integer"))?
            }
            "sigma2_g" => self.sigma2_g = f()?,
            "sigma2_G" => self.sigma2_big_g = f()?,
            "gains_dbi" => {
                let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                let vals: Result<Vec<f64>, _> = parts.iter().map(|p| p.parse::<f64>()).collect();
                let vals = vals.map_err(|e| bad(&e.to_string()))?;
                self.gains_dbi = match vals.len() {
                    1 => [vals[0]; 4],
                    4 => [vals[0], vals[1], vals[2], vals[3]],
                    _ => return Err(bad("expected one value or four comma-separated values")),
                };
            }
            "v_min" => self.v_min = f()?,
            "v_max" => self.v_max = f()?,
            "pause_slots" => self.pause_slots = value.parse().map_err(|_| bad("expected integer"))?,
            "alpha_a" => self.alpha_a = f()?,
            "alpha_s" => self.alpha_s = f()?,
            "mobility_steps" => {
                self.mobility_steps = value.parse().map_err(|_| bad("expected integer"))?
            }
            "device_height_m" => self.device_height_m = f()?,
            "irs_height_m" => self.irs_height_m = f()?,
            "ap_height_m" => self.ap_height_m = f()?,
            "es_cap" => self.es_cap = u()?,
            "trials" => self.trials = u()?,
            "seed" => self.base_seed = value.parse().map_err(|_| bad("expected integer"))?,
            "algos" => {
                let parsed: Result<Vec<Algorithm>, _> = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::parse)
                    .collect();
                self.algos = parsed.map_err(|_| bad("expected gs|es|greedy|random list"))?;
                if self.algos.is_empty() {
                    return Err(bad("at least one algorithm"));
                }
            }
            "overhead" => {
                self.overhead = value
                    .parse::<bool>()
                    .map_err(|_| bad("expected true|false"))?
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Cross-field sanity checks, run before an experiment starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("carrier_freq_ghz", self.carrier_freq_ghz),
            ("bandwidth_ghz", self.bandwidth_ghz),
            ("area_m", self.area_m),
            ("v_max", self.v_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(ConfigError::Invalid(format!("{name} must be positive")));
            }
        }
        if self.kappa_abs < 0.0 || self.sigma2_g < 0.0 || self.sigma2_big_g < 0.0 {
            return Err(ConfigError::Invalid(
                "kappa_abs and CEE variances must be non-negative".into(),
            ));
        }
        if self.antennas == 0
            || self.elements_per_side == 0
            || self.uplink_devices == 0
            || self.downlink_devices == 0
            || self.uplink_irs == 0
            || self.downlink_irs == 0
        {
            return Err(ConfigError::Invalid(
                "counts must all be at least 1".into(),
            ));
        }
        if self.trials == 0 {
            return Err(ConfigError::Invalid("trials must be at least 1".into()));
        }
        if self.coherence_slots == 0 {
            return Err(ConfigError::Invalid(
                "coherence_slots must be at least 1".into(),
            ));
        }
        if self.v_min < 0.0 || self.v_min > self.v_max {
            return Err(ConfigError::Invalid(
                "require 0 <= v_min <= v_max".into(),
            ));
        }
        if self.alpha_a.abs() >= 1.0 || self.alpha_s.abs() >= 1.0 {
            return Err(ConfigError::Invalid(
                "deviation factors must have magnitude below 1".into(),
            ));
        }
        if self.algos.contains(&Algorithm::Exhaustive) {
            if self.uplink_irs != self.downlink_irs {
                return Err(ConfigError::Invalid(
                    "exhaustive search requires uplink_irs = downlink_irs".into(),
                ));
            }
            if self.uplink_irs > self.es_cap {
                return Err(ConfigError::Invalid(format!(
                    "exhaustive search over {}! pairings exceeds es_cap {}",
                    self.uplink_irs, self.es_cap
                )));
            }
        }
        Ok(())
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_ghz * 1e9
    }

    pub fn carrier_freq_hz(&self) -> f64 {
        self.carrier_freq_ghz * 1e9
    }

    /// Documented keys and current values, for `--help`-style listings.
    pub fn to_map(&self) -> BTreeMap<&'static str, String> {
        let mut m = BTreeMap::new();
        m.insert("carrier_freq_ghz", self.carrier_freq_ghz.to_string());
        m.insert("bandwidth_ghz", self.bandwidth_ghz.to_string());
        m.insert("noise_density_dbm_hz", self.noise_density_dbm_hz.to_string());
        m.insert("noise_figure_db", self.noise_figure_db.to_string());
        m.insert("uplink_power_dbm", self.uplink_power_dbm.to_string());
        m.insert("ap_power_dbm", self.ap_power_dbm.to_string());
        m.insert("antennas", self.antennas.to_string());
        m.insert("elements_per_side", self.elements_per_side.to_string());
        m.insert("uplink_devices", self.uplink_devices.to_string());
        m.insert("downlink_devices", self.downlink_devices.to_string());
        m.insert("uplink_irs", self.uplink_irs.to_string());
        m.insert("downlink_irs", self.downlink_irs.to_string());
        m.insert("kappa_abs", self.kappa_abs.to_string());
        m.insert("area_m", self.area_m.to_string());
        m.insert("coherence_slots", self.coherence_slots.to_string());
        m.insert("sigma2_g", self.sigma2_g.to_string());
        m.insert("sigma2_G", self.sigma2_big_g.to_string());
        m.insert(
            "gains_dbi",
            format!(
                "{},{},{},{}",
                self.gains_dbi[0], self.gains_dbi[1], self.gains_dbi[2], self.gains_dbi[3]
            ),
        );
        m.insert("v_min", self.v_min.to_string());
        m.insert("v_max", self.v_max.to_string());
        m.insert("pause_slots", self.pause_slots.to_string());
        m.insert("alpha_a", self.alpha_a.to_string());
        m.insert("alpha_s", self.alpha_s.to_string());
        m.insert("mobility_steps", self.mobility_steps.to_string());
        m.insert("device_height_m", self.device_height_m.to_string());
        m.insert("irs_height_m", self.irs_height_m.to_string());
        m.insert("ap_height_m", self.ap_height_m.to_string());
        m.insert("es_cap", self.es_cap.to_string());
        m.insert("trials", self.trials.to_string());
        m.insert("seed", self.base_seed.to_string());
        m.insert(
            "algos",
            self.algos
                .iter()
                .map(|a| a.tag())
                .collect::<Vec<_>>()
                .join(","),
        );
        m.insert("overhead", self.overhead.to_string());
        m
    }
}

/// Receiver noise power in watts: density plus bandwidth plus noise
/// figure, converted from dBm.
pub fn noise_power(n0_dbm_per_hz: f64, bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    let dbm = n0_dbm_per_hz + 10.0 * bandwidth_hz.log10() + noise_figure_db;
    dbm_to_watts(dbm)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
