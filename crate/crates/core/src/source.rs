//! Faint-pulse-source transmitter model.
//!
//! A gain-switched laser diode emits a 100 MHz train of ~400 ps pulses with
//! independent random phases (the diode falls below threshold between
//! pulses). An amplitude modulator sets one of three calibrated intensity
//! levels, a phase modulator sets the polarization state, and a variable
//! optical attenuator brings the macroscopic pulses down to the faint-pulse
//! regime. This module covers the photon budget, the calibration tables, the
//! pulse-train synthesis, the cavity coherence-suppression estimate, and the
//! laser-driver power budget.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::rng;
use crate::sidechannel::Waveform;

/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Conservative per-pass cavity loss used for the coherence suppression
/// lower bound, dB.
pub const ROUND_TRIP_LOSS_DB: f64 = 1.0;
/// Phase-modulator half-wave voltage implied by the -45 degree calibration
/// entry, volts.
pub const DEFAULT_PM_V_PI: f64 = 1.56;

/// Tolerance for snapping a relative phase onto one of the four protocol
/// states when labeling.
const LABEL_TOLERANCE_RAD: f64 = 1e-9;

const PHASE_DOMAIN: u64 = 0x9E77_F0C5;
const PROTOCOL_DOMAIN: u64 = 0x51D3_AA10;

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("config error: {0}")]
    Config(String),
}

/// One calibrated amplitude-modulator level.
#[derive(Clone, Debug, PartialEq)]
pub struct AmLevel {
    pub label: String,
    pub drive_mv: f64,
    pub attenuation_db: f64,
}

/// One calibrated polarization-modulator state: the drive voltage and the
/// relative phase it imprints between the two field components.
#[derive(Clone, Debug, PartialEq)]
pub struct PmState {
    pub label: String,
    pub drive_v: f64,
    pub gamma_rad: f64,
}

/// Transmitter calibration and hardware constants (SI units).
#[derive(Clone, Debug, PartialEq)]
pub struct SourceConfig {
    pub rep_rate: f64,
    pub pulse_energy: f64,
    pub wavelength: f64,
    /// Intensity full width at half maximum of one optical pulse.
    pub pulse_fwhm: f64,
    pub bias_current: f64,
    pub threshold_current: f64,
    pub mirror_reflectivity: f64,
    pub cavity_length: f64,
    pub refractive_index: f64,
    pub voa_attenuation_db: f64,
    pub dc_resistance: f64,
    /// Peak RF modulation current driving the diode, A.
    pub modulation_current: f64,
    pub rf_load: f64,
    /// Width of one electrical drive pulse, s.
    pub electrical_pulse_width: f64,
    pub am_levels: Vec<AmLevel>,
    pub pm_states: Vec<PmState>,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            rep_rate: 1e8,
            pulse_energy: 1.4e-12,
            wavelength: 850e-9,
            pulse_fwhm: 400e-12,
            bias_current: 24e-3,
            threshold_current: 36e-3,
            mirror_reflectivity: 0.30,
            cavity_length: 300e-6,
            refractive_index: 3.6,
            voa_attenuation_db: 70.8,
            dc_resistance: 3.0,
            modulation_current: 50e-3,
            rf_load: 50.0,
            electrical_pulse_width: 1e-9,
            am_levels: vec![
                AmLevel {
                    label: "High".into(),
                    drive_mv: 460.0,
                    attenuation_db: 0.0,
                },
                AmLevel {
                    label: "Medium".into(),
                    drive_mv: 745.0,
                    attenuation_db: 4.65,
                },
                AmLevel {
                    label: "Low".into(),
                    drive_mv: 920.0,
                    attenuation_db: 14.76,
                },
            ],
            pm_states: vec![
                PmState {
                    label: "P45".into(),
                    drive_v: 0.0,
                    gamma_rad: 0.0,
                },
                PmState {
                    label: "M45".into(),
                    drive_v: 1.56,
                    gamma_rad: PI,
                },
                PmState {
                    label: "RHC".into(),
                    drive_v: 0.81,
                    gamma_rad: PI / 2.0,
                },
                PmState {
                    label: "LHC".into(),
                    drive_v: -0.76,
                    gamma_rad: -PI / 2.0,
                },
            ],
        }
    }
}

impl SourceConfig {
    pub fn validate(&self) -> Result<(), SourceError> {
        let positive = [
            ("rep_rate", self.rep_rate),
            ("pulse_energy", self.pulse_energy),
            ("wavelength", self.wavelength),
            ("pulse_fwhm", self.pulse_fwhm),
            ("threshold_current", self.threshold_current),
            ("cavity_length", self.cavity_length),
            ("refractive_index", self.refractive_index),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SourceError::Config(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.mirror_reflectivity > 0.0 && self.mirror_reflectivity < 1.0) {
            return Err(SourceError::Config(format!(
                "mirror_reflectivity must be in (0, 1), got {}",
                self.mirror_reflectivity
            )));
        }
        if self.voa_attenuation_db < 0.0 {
            return Err(SourceError::Config(
                "voa_attenuation_dB must be nonnegative".into(),
            ));
        }
        if !(self.bias_current < self.threshold_current) {
            return Err(SourceError::Config(format!(
                "bias current {} A must stay below threshold {} A",
                self.bias_current, self.threshold_current
            )));
        }
        if self.am_levels.is_empty() {
            return Err(SourceError::Config("at least one am_level required".into()));
        }
        let mut references = 0;
        for level in &self.am_levels {
            if level.attenuation_db < 0.0 {
                return Err(SourceError::Config(format!(
                    "am_level '{}' attenuation must be nonnegative",
                    level.label
                )));
            }
            if level.attenuation_db == 0.0 {
                references += 1;
            }
        }
        if references != 1 {
            return Err(SourceError::Config(format!(
                "exactly one am_level must be the 0 dB reference, found {references}"
            )));
        }
        if self.pm_states.is_empty() {
            return Err(SourceError::Config("at least one pm_state required".into()));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        1.0 / self.rep_rate
    }

    fn am_level_index(&self, label: &str) -> Result<usize, SourceError> {
        self.am_levels
            .iter()
            .position(|l| l.label == label)
            .ok_or_else(|| SourceError::Config(format!("unknown intensity level '{label}'")))
    }

    fn pm_state_index(&self, label: &str) -> Result<usize, SourceError> {
        self.pm_states
            .iter()
            .position(|p| p.label == label)
            .ok_or_else(|| SourceError::Config(format!("unknown polarization state '{label}'")))
    }
}

/// Named polarization states; `Custom` covers anything off the four
/// protocol settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolLabel {
    P45,
    M45,
    Rhc,
    Lhc,
    Custom,
}

/// Fully polarized state as a unit Jones vector.
///
/// Handedness convention: the third Stokes component is `2 Im(ex* ey)`, so
/// a relative phase of `+pi/2` (field `(x + i y)/sqrt(2)`) is right-handed.
#[derive(Clone, Debug)]
pub struct PolarizationState {
    pub jones: [Complex64; 2],
    pub label: PolLabel,
}

impl PolarizationState {
    pub fn new(ex: Complex64, ey: Complex64) -> Result<Self, SourceError> {
        let norm = (ex.norm_sqr() + ey.norm_sqr()).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(SourceError::Domain(
                "Jones vector must be nonzero and finite".into(),
            ));
        }
        Ok(Self {
            jones: [ex / norm, ey / norm],
            label: PolLabel::Custom,
        })
    }

    /// State `(x + e^{j gamma} y)/sqrt(2)` produced by a phase modulator fed
    /// at 45 degrees; labels the four protocol settings when `gamma` is
    /// within tolerance of {0, pi, +-pi/2}.
    pub fn from_relative_phase(gamma: f64) -> Self {
        let inv = 1.0 / 2f64.sqrt();
        let jones = [
            Complex64::new(inv, 0.0),
            Complex64::new(0.0, gamma).exp() * inv,
        ];
        let principal = {
            let g = gamma.rem_euclid(2.0 * PI);
            if g > PI {
                g - 2.0 * PI
            } else {
                g
            }
        };
        let snap = |target: f64| (principal - target).abs() < LABEL_TOLERANCE_RAD;
        let label = if snap(0.0) {
            PolLabel::P45
        } else if snap(PI) || snap(-PI) {
            PolLabel::M45
        } else if snap(PI / 2.0) {
            PolLabel::Rhc
        } else if snap(-PI / 2.0) {
            PolLabel::Lhc
        } else {
            PolLabel::Custom
        };
        Self { jones, label }
    }

    /// Normalized Stokes 3-vector (s1, s2, s3).
    pub fn stokes(&self) -> [f64; 3] {
        let [ex, ey] = self.jones;
        let cross = ex.conj() * ey;
        [
            ex.norm_sqr() - ey.norm_sqr(),
            2.0 * cross.re,
            2.0 * cross.im,
        ]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.jones[0].norm_sqr() + self.jones[1].norm_sqr()
    }
}

/// One pulse of the synthesized train: the modulated-train field model is
/// `A alpha_i e^{j(phi_i + beta_i)} (x + e^{j gamma_i} y)/sqrt(2) Pi(t - iT)`.
#[derive(Clone, Debug)]
pub struct PulseSpec {
    pub index: usize,
    /// Common laser pulse amplitude `A` (normalized field units).
    pub amplitude_scale: f64,
    /// Intensity transmission `alpha_i^2` of the amplitude modulator.
    pub intensity_transmission: f64,
    /// Random laser phase `phi_i`, reduced to [0, 2 pi).
    pub global_phase: f64,
    /// Phase `beta_i` introduced by the amplitude modulator.
    pub am_phase: f64,
    /// Relative phase `gamma_i` between field components, in [0, 2 pi).
    pub pm_relative_phase: f64,
    /// Shared pulse shape `Pi`; identical for every pulse by construction.
    pub shape: Arc<Waveform>,
    /// Train period `T`, s.
    pub period: f64,
    pub level_idx: usize,
    pub pol_idx: usize,
}

impl PulseSpec {
    pub fn polarization(&self) -> PolarizationState {
        PolarizationState::from_relative_phase(self.pm_relative_phase)
    }
}

/// Mean photon number of one full-power pulse: `E_pulse / (h c / lambda)`.
pub fn photons_per_pulse(cfg: &SourceConfig) -> Result<f64, SourceError> {
    if !(cfg.pulse_energy > 0.0) {
        return Err(SourceError::Domain(format!(
            "pulse energy must be positive, got {}",
            cfg.pulse_energy
        )));
    }
    if !(cfg.wavelength > 0.0) {
        return Err(SourceError::Domain(format!(
            "wavelength must be positive, got {}",
            cfg.wavelength
        )));
    }
    Ok(cfg.pulse_energy / (PLANCK * SPEED_OF_LIGHT / cfg.wavelength))
}

/// Attenuation the VOA must introduce so the signal level carries
/// `target_mu` photons per pulse on average.
pub fn voa_for_target_mu(cfg: &SourceConfig, target_mu: f64) -> Result<f64, SourceError> {
    let photons = photons_per_pulse(cfg)?;
    if !(target_mu > 0.0) {
        return Err(SourceError::Domain(format!(
            "target mu must be positive, got {target_mu}"
        )));
    }
    if target_mu > photons {
        return Err(SourceError::Domain(format!(
            "target mu {target_mu} exceeds the source output of {photons:.3e} photons/pulse"
        )));
    }
    Ok(10.0 * (photons / target_mu).log10())
}

/// Mean photon number after applying an amplitude-modulator level to the
/// signal intensity. `attenuation_db` must be nonnegative.
pub fn mu_for_level(signal_mu: f64, attenuation_db: f64) -> f64 {
    signal_mu * 10f64.powf(-attenuation_db / 10.0)
}

/// Polarization state produced by driving the phase modulator at `drive_v`
/// with half-wave voltage `v_pi`: the relative phase is `pi drive_v / v_pi`.
pub fn pm_voltage_to_state(drive_v: f64, v_pi: f64) -> PolarizationState {
    assert!(v_pi > 0.0, "half-wave voltage must be positive");
    PolarizationState::from_relative_phase(PI * drive_v / v_pi)
}

/// Default pulse envelope: Gaussian with the configured intensity FWHM,
/// normalized to unit energy. A measured waveform (e.g. loaded from CSV)
/// can be passed to [`generate_pulse_train_with_shape`] instead.
pub fn default_pulse_shape(cfg: &SourceConfig) -> Result<Waveform, SourceError> {
    // intensity FWHM F -> amplitude std F / (2 sqrt(ln 2))
    let amplitude_std = cfg.pulse_fwhm / (2.0 * (2f64.ln()).sqrt());
    let dt = cfg.pulse_fwhm / 64.0;
    let half_width = 4.0 * cfg.pulse_fwhm;
    Waveform::gaussian(0.0, amplitude_std, dt, half_width)
        .normalize()
        .map_err(|e| SourceError::Config(format!("default pulse shape: {e}")))
}

/// Synthesize a pulse train for the given per-pulse protocol choices.
///
/// Every pulse gets an independent uniform random phase in [0, 2 pi) keyed
/// by `(seed, index)`, and all pulses share the identical shape object: the
/// shape carries no information about the modulation choices.
pub fn generate_pulse_train(
    cfg: &SourceConfig,
    n: usize,
    choices: &[(String, String)],
    seed: u64,
) -> Result<Vec<PulseSpec>, SourceError> {
    let shape = default_pulse_shape(cfg)?;
    generate_pulse_train_with_shape(cfg, n, choices, seed, Arc::new(shape))
}

/// As [`generate_pulse_train`], but with an explicit (measured) pulse shape.
pub fn generate_pulse_train_with_shape(
    cfg: &SourceConfig,
    n: usize,
    choices: &[(String, String)],
    seed: u64,
    shape: Arc<Waveform>,
) -> Result<Vec<PulseSpec>, SourceError> {
    if n == 0 {
        return Err(SourceError::Domain("pulse count must be at least 1".into()));
    }
    if choices.len() != n {
        return Err(SourceError::Domain(format!(
            "got {} protocol choices for {n} pulses",
            choices.len()
        )));
    }
    let period = cfg.period();
    let span = shape.end_time() - shape.t0();
    if span >= period {
        return Err(SourceError::Config(format!(
            "pulse shape spans {span:.3e} s, at least one full period of {period:.3e} s"
        )));
    }
    let phase_seed = rng::stream(seed, PHASE_DOMAIN).next_u64();
    let mut train = Vec::with_capacity(n);
    for (i, (level, pol)) in choices.iter().enumerate() {
        let level_idx = cfg.am_level_index(level)?;
        let pol_idx = cfg.pm_state_index(pol)?;
        let phi = 2.0 * PI * rng::stream(phase_seed, i as u64).next_f64();
        train.push(PulseSpec {
            index: i,
            amplitude_scale: 1.0,
            intensity_transmission: 10f64.powf(-cfg.am_levels[level_idx].attenuation_db / 10.0),
            global_phase: phi,
            am_phase: 0.0,
            pm_relative_phase: cfg.pm_states[pol_idx].gamma_rad.rem_euclid(2.0 * PI),
            shape: Arc::clone(&shape),
            period,
            level_idx,
            pol_idx,
        });
    }
    Ok(train)
}

/// Uniformly random (level, polarization) choices, keyed by `(seed, index)`
/// on a domain separated from the pulse phases.
pub fn random_protocol_choices(cfg: &SourceConfig, n: usize, seed: u64) -> Vec<(String, String)> {
    let proto_seed = rng::stream(seed, PROTOCOL_DOMAIN).next_u64();
    (0..n)
        .map(|i| {
            let mut r = rng::stream(proto_seed, i as u64);
            let level = (r.next_f64() * cfg.am_levels.len() as f64) as usize;
            let pol = (r.next_f64() * cfg.pm_states.len() as f64) as usize;
            (
                cfg.am_levels[level.min(cfg.am_levels.len() - 1)]
                    .label
                    .clone(),
                cfg.pm_states[pol.min(cfg.pm_states.len() - 1)]
                    .label
                    .clone(),
            )
        })
        .collect()
}

/// Cavity round trips between pulses and the coherence loss they imply.
#[derive(Clone, Copy, Debug)]
pub struct CoherenceSuppression {
    pub round_trip_time_s: f64,
    pub passes_per_period: u64,
    pub suppression_db_lower_bound: f64,
}

/// Round-trip time `2 L_c n / c0` and the coherence suppression bound from
/// bouncing the residual field `floor(T / RTT)` times at >= 1 dB loss per
/// pass.
pub fn coherence_suppression(cfg: &SourceConfig) -> CoherenceSuppression {
    let rtt = 2.0 * cfg.cavity_length * cfg.refractive_index / SPEED_OF_LIGHT;
    let passes = passes_per_period(rtt, cfg.period());
    CoherenceSuppression {
        round_trip_time_s: rtt,
        passes_per_period: passes,
        suppression_db_lower_bound: passes as f64 * ROUND_TRIP_LOSS_DB,
    }
}

/// Number of complete cavity round trips in one train period. Ratios that
/// land within 1e-9 (relative) of an integer count as that integer, so exact
/// physical ratios are not lost to floating-point representation.
pub fn passes_per_period(round_trip_time: f64, period: f64) -> u64 {
    assert!(round_trip_time > 0.0 && period > 0.0);
    let ratio = period / round_trip_time;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * ratio {
        nearest as u64
    } else {
        ratio.floor() as u64
    }
}

/// Laser-diode electrical power budget, mW.
#[derive(Clone, Copy, Debug)]
pub struct PowerBudget {
    pub ld_dc_mw: f64,
    pub ld_rf_mw: f64,
}

/// DC bias dissipation `I_bias^2 R_dc` and RF drive dissipation
/// `I_rf^2 R_load duty` with `duty = pulse_width * rep_rate`.
pub fn power_budget(cfg: &SourceConfig) -> PowerBudget {
    let duty = cfg.electrical_pulse_width * cfg.rep_rate;
    PowerBudget {
        ld_dc_mw: cfg.bias_current * cfg.bias_current * cfg.dc_resistance * 1e3,
        ld_rf_mw: cfg.modulation_current * cfg.modulation_current * cfg.rf_load * duty * 1e3,
    }
}
