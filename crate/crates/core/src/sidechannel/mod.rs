//! Pulse indistinguishability analysis.
//!
//! Quantifies how well an eavesdropper could tell pulses apart from degrees
//! of freedom other than the encoded polarization: mode-overlap integrals
//! between pulse shapes (the photon-count discrimination ratio is
//! `|S_lm|^2`), chirp sensitivity, spectra, polarization-extinction QBER
//! floors, and inter-pulse first-order coherence.

mod waveform;

pub use waveform::{parse_waveform_csv, read_waveform_csv, Waveform, SPEED_OF_LIGHT};

use num_complex::Complex64;
use thiserror::Error;

use crate::source::{PulseSpec, SourceConfig};
use waveform::{align, inner_product_same_grid};

#[derive(Debug, Error)]
pub enum SideChannelError {
    #[error("zero-energy waveform cannot be normalized")]
    ZeroEnergy,
    #[error("waveform is not normalized (energy {0})")]
    NotNormalized(f64),
    #[error("chirp unobservable: intensity-only input carries no phase information")]
    ChirpUnobservable,
    #[error("invalid waveform: {0}")]
    Invalid(String),
    #[error("waveform format: {0}")]
    Format(String),
    #[error("{file}:{line}: {msg}")]
    Csv {
        file: String,
        line: usize,
        msg: String,
    },
}

/// Overlap between two normalized pulse modes.
///
/// `abs_s_sq` is the photon-count ratio available to an eavesdropper probing
/// mode `a` while mode `b` was sent. The RMS residuals compare the magnitude
/// profiles the way measured traces are compared: phase-blind, in time and
/// in frequency.
#[derive(Clone, Debug)]
pub struct OverlapReport {
    pub label_a: String,
    pub label_b: String,
    pub s: Complex64,
    pub abs_s_sq: f64,
    pub temporal_rms: f64,
    pub spectral_rms: f64,
}

impl OverlapReport {
    pub fn abs_s(&self) -> f64 {
        self.s.norm()
    }

    pub fn with_labels(mut self, a: &str, b: &str) -> Self {
        self.label_a = a.to_string();
        self.label_b = b.to_string();
        self
    }
}

fn require_normalized(w: &Waveform) -> Result<(), SideChannelError> {
    let e = w.energy();
    if (e - 1.0).abs() > 1e-6 {
        return Err(SideChannelError::NotNormalized(e));
    }
    Ok(())
}

/// Mode-overlap integral `s = integral conj(a) b dt` of two normalized
/// envelopes, with phase-blind RMS residuals of the magnitude profiles in
/// both domains. Grids are aligned by band-limited resampling when they
/// differ; disjoint supports give `s ~ 0`, which is a valid result.
pub fn overlap(a: &Waveform, b: &Waveform) -> Result<OverlapReport, SideChannelError> {
    require_normalized(a)?;
    require_normalized(b)?;
    let (ga, gb) = align(a, b)?;
    let s = inner_product_same_grid(&ga, &gb);
    let temporal_rms = magnitude_residual(&ga, &gb);
    let (fa, fb) = (ga.spectrum(), gb.spectrum());
    let spectral_rms = magnitude_residual(&fa, &fb);
    Ok(OverlapReport {
        label_a: String::new(),
        label_b: String::new(),
        s,
        abs_s_sq: s.norm_sqr(),
        temporal_rms,
        spectral_rms,
    })
}

/// `sqrt(integral (|a|-|b|)^2 dx)` on a shared grid.
fn magnitude_residual(a: &Waveform, b: &Waveform) -> f64 {
    let dt = a.dt();
    let n = a.len();
    let d = |k: usize| {
        let diff = a.samples()[k].norm() - b.samples()[k].norm();
        diff * diff
    };
    let sum: f64 = (0..n).map(d).sum();
    (dt * (sum - 0.5 * (d(0) + d(n - 1)))).max(0.0).sqrt()
}

/// Distinguishability `1 - |s|` contributed by phase structure alone.
///
/// Meaningful when the two intensity profiles agree; pulses reconstructed
/// from intensity-only traces carry no phase, so the comparison is refused
/// for them rather than reporting a spurious zero.
pub fn chirp_sensitivity(a: &Waveform, b: &Waveform) -> Result<f64, SideChannelError> {
    if a.is_intensity_only() || b.is_intensity_only() {
        return Err(SideChannelError::ChirpUnobservable);
    }
    let report = overlap(a, b)?;
    Ok(1.0 - report.abs_s())
}

/// QBER floor set by a finite polarization extinction ratio:
/// a fraction `1/(1 + 10^(PER/10))` of the power leaks into the orthogonal
/// polarization and is detected as an error.
pub fn per_to_qber_floor(per_db: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf(per_db / 10.0))
}

/// First-order coherence estimate.
#[derive(Clone, Debug)]
pub struct G1Estimate {
    pub value: Complex64,
    /// Standard error of the magnitude, from the scatter across segments.
    pub std_error: f64,
    pub n_pulses: usize,
    pub n_realizations: usize,
    /// Set when fewer than 100 realizations (segments) back the error bar.
    pub low_statistics: bool,
}

impl G1Estimate {
    pub fn magnitude(&self) -> f64 {
        self.value.norm()
    }
}

/// Estimate `g1(tau) = <E*(t) E(t+tau)> / <|E|^2>` for a pulse train.
///
/// The field is the modulated train model: pulse `i` contributes
/// `A alpha_i e^{j(phi_i+beta_i)} p_i Pi(t - iT)`, so the correlation at lag
/// `tau` reduces to pair sums over pulse indices separated by `round(tau/T)`
/// weighted by the shape autocorrelation at the residual lag. The ensemble
/// is the pulse-pair ensemble within the train (the train already carries
/// the phase randomness); `n_realizations` sets how many contiguous segments
/// back the standard-error estimate.
pub fn estimate_g1(
    train: &[PulseSpec],
    cfg: &SourceConfig,
    tau: f64,
    n_realizations: usize,
) -> Result<G1Estimate, SideChannelError> {
    if train.is_empty() {
        return Err(SideChannelError::Invalid("empty pulse train".into()));
    }
    if !(tau >= 0.0) {
        return Err(SideChannelError::Invalid(format!(
            "lag must be nonnegative, got {tau}"
        )));
    }
    let period = 1.0 / cfg.rep_rate;
    if (train[0].period - period).abs() > 1e-9 * period {
        return Err(SideChannelError::Invalid(
            "pulse train period does not match the configured repetition rate".into(),
        ));
    }
    let n = train.len();
    let shape = &train[0].shape;
    let k0 = inner_product_same_grid(shape, shape);

    // complex pulse coefficients and modulator phases
    let coeff: Vec<Complex64> = train
        .iter()
        .map(|p| {
            p.amplitude_scale
                * p.intensity_transmission.sqrt()
                * Complex64::new(0.0, p.global_phase + p.am_phase).exp()
        })
        .collect();
    let polprod = |i: usize, j: usize| -> Complex64 {
        // (x + e^{j g_i} y)/sqrt(2) pairs: p_i^dag . p_j = (1 + e^{j(g_j - g_i)})/2
        (1.0 + Complex64::new(0.0, train[j].pm_relative_phase - train[i].pm_relative_phase).exp())
            / 2.0
    };

    let mean_energy: f64 = coeff.iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64;
    let den = k0 * mean_energy;

    let m0 = (tau / period).floor() as usize;
    let mut num = Complex64::new(0.0, 0.0);
    let segments = n_realizations.max(1);
    let mut seg_num = vec![Complex64::new(0.0, 0.0); segments];
    let mut seg_pairs = vec![0u64; segments];
    let mut seg_energy = vec![0.0f64; segments];
    let mut seg_len = vec![0u64; segments];
    for (i, c) in coeff.iter().enumerate() {
        let b = i * segments / n;
        seg_energy[b] += c.norm_sqr();
        seg_len[b] += 1;
    }

    for m in [m0, m0 + 1] {
        if m >= n {
            continue;
        }
        let lag = tau - m as f64 * period;
        // shape autocorrelation K(lag) = <Pi(t), Pi(t + lag)>
        let k_lag = if m == m0 && lag == 0.0 {
            k0
        } else {
            let shifted = shape.shifted_by(-lag);
            let (ga, gb) = align(shape, &shifted)?;
            inner_product_same_grid(&ga, &gb)
        };
        if k_lag.norm() < 1e-15 * k0.norm() {
            continue;
        }
        let pairs = n - m;
        let mut pair_sum = Complex64::new(0.0, 0.0);
        for i in 0..pairs {
            let term = coeff[i].conj() * coeff[i + m] * polprod(i, i + m);
            pair_sum += term;
            let b = i * segments / n;
            seg_num[b] += term * k_lag;
            seg_pairs[b] += 1;
        }
        num += k_lag * pair_sum / pairs as f64;
    }

    let value = num / den;

    // segment scatter -> standard error of the estimate
    let seg_values: Vec<Complex64> = (0..segments)
        .filter(|&b| seg_energy[b] > 0.0 && seg_pairs[b] > 0)
        .map(|b| {
            let mean_pair = seg_num[b] / seg_pairs[b] as f64;
            let mean_e = seg_energy[b] / seg_len[b] as f64;
            mean_pair / (k0 * mean_e)
        })
        .collect();
    let used = seg_values.len();
    let std_error = if used > 1 {
        let mean: Complex64 = seg_values.iter().sum::<Complex64>() / used as f64;
        let var: f64 = seg_values
            .iter()
            .map(|g| (g - mean).norm_sqr())
            .sum::<f64>()
            / (used - 1) as f64;
        (var / used as f64).sqrt()
    } else {
        f64::NAN
    };

    Ok(G1Estimate {
        value,
        std_error,
        n_pulses: n,
        n_realizations: segments,
        low_statistics: segments < 100 || n < segments,
    })
}
