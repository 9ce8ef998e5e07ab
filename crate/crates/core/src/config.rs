//! Shared `key = value` configuration file.
//!
//! One file configures every subcommand. Keys carry their unit in the name
//! (`pulse_energy_pJ = 1.4`); repeated `am_level` / `pm_state` lines build
//! the modulator calibration tables. `#` starts a comment, unknown keys are
//! rejected, and every module-level invariant is re-checked on load.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::decoy::DecoyParams;
use crate::link::LinkParams;
use crate::montecarlo::MCConfig;
use crate::source::{AmLevel, PmState, SourceConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read {file}: {msg}")]
    Io { file: String, msg: String },
}

/// Raw configuration exactly as the file states it (file units, not SI).
/// Keeping the file's own numbers makes dump/reload round-trips exact;
/// conversion to SI domain parameters happens in the accessor methods.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub rep_rate_hz: f64,
    pub pulse_energy_pj: f64,
    pub wavelength_nm: f64,
    pub pulse_fwhm_ps: f64,
    pub bias_current_ma: f64,
    pub threshold_current_ma: f64,
    pub mirror_reflectivity: f64,
    pub cavity_length_um: f64,
    pub refractive_index: f64,
    pub voa_attenuation_db: f64,
    pub dc_resistance_ohm: f64,
    pub modulation_current_ma: f64,
    pub rf_load_ohm: f64,
    pub electrical_pulse_width_ns: f64,
    pub am_levels: Vec<AmLevel>,
    pub pm_states: Vec<PmState>,

    pub distance_km: f64,
    pub atmosphere_loss_db_per_km: f64,
    pub optics_loss_db: f64,
    pub detector_efficiency: f64,
    pub background_yield: f64,
    pub misalignment_error: f64,

    pub mu: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub prob_mu: f64,
    pub prob_nu1: f64,
    pub prob_nu2: f64,
    pub sifting_ratio: f64,
    pub error_correction_efficiency: f64,
    pub duration_s: f64,

    pub n_pulses: u64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let source = SourceConfig::default();
        Self {
            rep_rate_hz: 1e8,
            pulse_energy_pj: 1.4,
            wavelength_nm: 850.0,
            pulse_fwhm_ps: 400.0,
            bias_current_ma: 24.0,
            threshold_current_ma: 36.0,
            mirror_reflectivity: 0.30,
            cavity_length_um: 300.0,
            refractive_index: 3.6,
            voa_attenuation_db: 70.8,
            dc_resistance_ohm: 3.0,
            modulation_current_ma: 50.0,
            rf_load_ohm: 50.0,
            electrical_pulse_width_ns: 1.0,
            am_levels: source.am_levels,
            pm_states: source.pm_states,
            distance_km: 20.0,
            atmosphere_loss_db_per_km: 0.1,
            optics_loss_db: 5.0,
            detector_efficiency: 0.5,
            background_yield: 1e-5,
            misalignment_error: 0.01,
            mu: 0.5,
            nu1: 0.125,
            nu2: 0.0167,
            prob_mu: 0.85,
            prob_nu1: 0.10,
            prob_nu2: 0.05,
            sifting_ratio: 0.5,
            error_correction_efficiency: 1.16,
            duration_s: 1.0,
            n_pulses: 1_000_000,
            seed: 1,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let file = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            file: file.clone(),
            msg: e.to_string(),
        })?;
        Self::parse(&text, &file)
    }

    /// Parse over the defaults: keys present in the text replace defaults,
    /// table keys replace the whole default table on first occurrence.
    pub fn parse(text: &str, file: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut seen_am = false;
        let mut seen_pm = false;
        let mut seen_keys: Vec<String> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |msg: String| ConfigError::Parse {
                file: file.to_string(),
                line: line_no,
                msg,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(format!("expected 'key = value', got '{line}'")));
            };
            let key = key.trim();
            let value = value.trim();
            if value.is_empty() {
                return Err(err(format!("empty value for key '{key}'")));
            }

            let parse_f64 = |v: &str| {
                v.parse::<f64>().map_err(|_| ConfigError::Parse {
                    file: file.to_string(),
                    line: line_no,
                    msg: format!("not a number: '{v}'"),
                })
            };

            match key {
                "am_level" => {
                    if !seen_am {
                        cfg.am_levels.clear();
                        seen_am = true;
                    }
                    let fields: Vec<&str> = value.split(',').map(str::trim).collect();
                    if fields.len() != 3 {
                        return Err(err(format!(
                            "am_level needs 'label,drive_mV,atten_dB', got '{value}'"
                        )));
                    }
                    cfg.am_levels.push(AmLevel {
                        label: fields[0].to_string(),
                        drive_mv: parse_f64(fields[1])?,
                        attenuation_db: parse_f64(fields[2])?,
                    });
                    continue;
                }
                "pm_state" => {
                    if !seen_pm {
                        cfg.pm_states.clear();
                        seen_pm = true;
                    }
                    let fields: Vec<&str> = value.split(',').map(str::trim).collect();
                    if fields.len() != 3 {
                        return Err(err(format!(
                            "pm_state needs 'label,drive_V,gamma_rad', got '{value}'"
                        )));
                    }
                    cfg.pm_states.push(PmState {
                        label: fields[0].to_string(),
                        drive_v: parse_f64(fields[1])?,
                        gamma_rad: parse_f64(fields[2])?,
                    });
                    continue;
                }
                _ => {}
            }

            if seen_keys.iter().any(|k| k == key) {
                return Err(err(format!("duplicate key '{key}'")));
            }
            seen_keys.push(key.to_string());

            match key {
                "rep_rate_Hz" => cfg.rep_rate_hz = parse_f64(value)?,
                "pulse_energy_pJ" => cfg.pulse_energy_pj = parse_f64(value)?,
                "wavelength_nm" => cfg.wavelength_nm = parse_f64(value)?,
                "pulse_fwhm_ps" => cfg.pulse_fwhm_ps = parse_f64(value)?,
                "bias_current_mA" => cfg.bias_current_ma = parse_f64(value)?,
                "threshold_current_mA" => cfg.threshold_current_ma = parse_f64(value)?,
                "mirror_reflectivity" => cfg.mirror_reflectivity = parse_f64(value)?,
                "cavity_length_um" => cfg.cavity_length_um = parse_f64(value)?,
                "refractive_index" => cfg.refractive_index = parse_f64(value)?,
                "voa_attenuation_dB" => cfg.voa_attenuation_db = parse_f64(value)?,
                "dc_resistance_ohm" => cfg.dc_resistance_ohm = parse_f64(value)?,
                "modulation_current_mA" => cfg.modulation_current_ma = parse_f64(value)?,
                "rf_load_ohm" => cfg.rf_load_ohm = parse_f64(value)?,
                "electrical_pulse_width_ns" => cfg.electrical_pulse_width_ns = parse_f64(value)?,
                "distance_km" => cfg.distance_km = parse_f64(value)?,
                "atmosphere_loss_dB_per_km" => cfg.atmosphere_loss_db_per_km = parse_f64(value)?,
                "optics_loss_dB" => cfg.optics_loss_db = parse_f64(value)?,
                "detector_efficiency" => cfg.detector_efficiency = parse_f64(value)?,
                "background_yield" => cfg.background_yield = parse_f64(value)?,
                "misalignment_error" => cfg.misalignment_error = parse_f64(value)?,
                "mu" => cfg.mu = parse_f64(value)?,
                "nu1" => cfg.nu1 = parse_f64(value)?,
                "nu2" => cfg.nu2 = parse_f64(value)?,
                "prob_mu" => cfg.prob_mu = parse_f64(value)?,
                "prob_nu1" => cfg.prob_nu1 = parse_f64(value)?,
                "prob_nu2" => cfg.prob_nu2 = parse_f64(value)?,
                "sifting_ratio" => cfg.sifting_ratio = parse_f64(value)?,
                "error_correction_efficiency" => {
                    cfg.error_correction_efficiency = parse_f64(value)?
                }
                "duration_s" => cfg.duration_s = parse_f64(value)?,
                "n_pulses" => {
                    cfg.n_pulses = value.parse::<u64>().map_err(|_| {
                        err(format!(
                            "n_pulses must be a nonnegative integer, got '{value}'"
                        ))
                    })?
                }
                "seed" => {
                    cfg.seed = value.parse::<u64>().map_err(|_| {
                        err(format!("seed must be a nonnegative integer, got '{value}'"))
                    })?
                }
                other => return Err(err(format!("unknown key '{other}'"))),
            }
        }

        cfg.validate()?;
        Ok(cfg)
    }

    /// Re-check every module-level invariant.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.source_config()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.link_params()
            .validate()
            .map_err(ConfigError::Invalid)?;
        self.decoy_params()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.n_pulses == 0 {
            return Err(ConfigError::Invalid("n_pulses must be at least 1".into()));
        }
        Ok(())
    }

    /// Serialize in the file format; reloading the output reproduces this
    /// configuration exactly.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# transmitter");
        let _ = writeln!(s, "rep_rate_Hz = {}", self.rep_rate_hz);
        let _ = writeln!(s, "pulse_energy_pJ = {}", self.pulse_energy_pj);
        let _ = writeln!(s, "wavelength_nm = {}", self.wavelength_nm);
        let _ = writeln!(s, "pulse_fwhm_ps = {}", self.pulse_fwhm_ps);
        let _ = writeln!(s, "bias_current_mA = {}", self.bias_current_ma);
        let _ = writeln!(s, "threshold_current_mA = {}", self.threshold_current_ma);
        let _ = writeln!(s, "mirror_reflectivity = {}", self.mirror_reflectivity);
        let _ = writeln!(s, "cavity_length_um = {}", self.cavity_length_um);
        let _ = writeln!(s, "refractive_index = {}", self.refractive_index);
        let _ = writeln!(s, "voa_attenuation_dB = {}", self.voa_attenuation_db);
        let _ = writeln!(s, "dc_resistance_ohm = {}", self.dc_resistance_ohm);
        let _ = writeln!(s, "modulation_current_mA = {}", self.modulation_current_ma);
        let _ = writeln!(s, "rf_load_ohm = {}", self.rf_load_ohm);
        let _ = writeln!(
            s,
            "electrical_pulse_width_ns = {}",
            self.electrical_pulse_width_ns
        );
        for level in &self.am_levels {
            let _ = writeln!(
                s,
                "am_level = {},{},{}",
                level.label, level.drive_mv, level.attenuation_db
            );
        }
        for state in &self.pm_states {
            let _ = writeln!(
                s,
                "pm_state = {},{},{}",
                state.label, state.drive_v, state.gamma_rad
            );
        }
        let _ = writeln!(s, "# link");
        let _ = writeln!(s, "distance_km = {}", self.distance_km);
        let _ = writeln!(
            s,
            "atmosphere_loss_dB_per_km = {}",
            self.atmosphere_loss_db_per_km
        );
        let _ = writeln!(s, "optics_loss_dB = {}", self.optics_loss_db);
        let _ = writeln!(s, "detector_efficiency = {}", self.detector_efficiency);
        let _ = writeln!(s, "background_yield = {}", self.background_yield);
        let _ = writeln!(s, "misalignment_error = {}", self.misalignment_error);
        let _ = writeln!(s, "# decoy protocol");
        let _ = writeln!(s, "mu = {}", self.mu);
        let _ = writeln!(s, "nu1 = {}", self.nu1);
        let _ = writeln!(s, "nu2 = {}", self.nu2);
        let _ = writeln!(s, "prob_mu = {}", self.prob_mu);
        let _ = writeln!(s, "prob_nu1 = {}", self.prob_nu1);
        let _ = writeln!(s, "prob_nu2 = {}", self.prob_nu2);
        let _ = writeln!(s, "sifting_ratio = {}", self.sifting_ratio);
        let _ = writeln!(
            s,
            "error_correction_efficiency = {}",
            self.error_correction_efficiency
        );
        let _ = writeln!(s, "duration_s = {}", self.duration_s);
        let _ = writeln!(s, "# monte carlo");
        let _ = writeln!(s, "n_pulses = {}", self.n_pulses);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }

    pub fn source_config(&self) -> SourceConfig {
        SourceConfig {
            rep_rate: self.rep_rate_hz,
            pulse_energy: self.pulse_energy_pj * 1e-12,
            wavelength: self.wavelength_nm * 1e-9,
            pulse_fwhm: self.pulse_fwhm_ps * 1e-12,
            bias_current: self.bias_current_ma * 1e-3,
            threshold_current: self.threshold_current_ma * 1e-3,
            mirror_reflectivity: self.mirror_reflectivity,
            cavity_length: self.cavity_length_um * 1e-6,
            refractive_index: self.refractive_index,
            voa_attenuation_db: self.voa_attenuation_db,
            dc_resistance: self.dc_resistance_ohm,
            modulation_current: self.modulation_current_ma * 1e-3,
            rf_load: self.rf_load_ohm,
            electrical_pulse_width: self.electrical_pulse_width_ns * 1e-9,
            am_levels: self.am_levels.clone(),
            pm_states: self.pm_states.clone(),
        }
    }

    pub fn link_params(&self) -> LinkParams {
        LinkParams {
            distance_km: self.distance_km,
            atmosphere_loss_db_per_km: self.atmosphere_loss_db_per_km,
            optics_loss_db: self.optics_loss_db,
            detector_efficiency: self.detector_efficiency,
            background_yield: self.background_yield,
            misalignment_error: self.misalignment_error,
        }
    }

    pub fn decoy_params(&self) -> DecoyParams {
        DecoyParams {
            mu: self.mu,
            nu1: self.nu1,
            nu2: self.nu2,
            prob_mu: self.prob_mu,
            prob_nu1: self.prob_nu1,
            prob_nu2: self.prob_nu2,
            sifting_ratio: self.sifting_ratio,
            error_correction_efficiency: self.error_correction_efficiency,
            rep_rate: self.rep_rate_hz,
            duration_s: self.duration_s,
        }
    }

    pub fn mc_config(&self) -> MCConfig {
        MCConfig {
            n_pulses: self.n_pulses,
            seed: self.seed,
            link: self.link_params(),
            decoy: self.decoy_params(),
            source: self.source_config(),
        }
    }
}
