//! Subcommand implementations behind the binary front end.
//!
//! Every command writes machine-readable CSV (full precision, header first,
//! stable order) to its `csv` writer and a human-readable report to its
//! `report` writer. Outputs depend only on the configuration and seeds, so
//! repeated runs are byte-identical.

use std::io::Write;
use std::path::PathBuf;

use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::decoy::{
    distance_sweep, estimator_by_name, estimators, parse_sweep_spec, secure_key_rate, DecoyError,
    SinglePhotonEstimator,
};
use crate::montecarlo::{estimate_key_rate, run_with_workers, IntensityClass, MCResult};
use crate::reference;
use crate::sidechannel::{overlap, read_waveform_csv, SideChannelError, Waveform};
use crate::source::{
    coherence_suppression, generate_pulse_train, passes_per_period, photons_per_pulse,
    power_budget, random_protocol_choices, voa_for_target_mu, SourceError, ROUND_TRIP_LOSS_DB,
};

/// Command failures, split by the exit-code contract: input problems exit
/// with 2, numerical/estimator failures with 3.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
    /// The consumer closed our output (e.g. `| head`); exit quietly.
    #[error("output pipe closed")]
    PipeClosed,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::PipeClosed => 0,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<DecoyError> for CliError {
    fn from(e: DecoyError) -> Self {
        match e {
            DecoyError::Domain(_) => CliError::Input(e.to_string()),
            DecoyError::EstimatorFailure(_) | DecoyError::DegenerateLink => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

impl From<SideChannelError> for CliError {
    fn from(e: SideChannelError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SourceError> for CliError {
    fn from(e: SourceError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            CliError::PipeClosed
        } else {
            CliError::Input(e.to_string())
        }
    }
}

/// Full-precision float formatting for CSV fields (17 significant digits).
fn full(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug)]
pub struct AnalyzeOptions {
    /// `start:stop:step` sweep; absent means the single configured distance.
    pub sweep: Option<String>,
    /// Single-photon estimator name (`exact` or `decoy`).
    pub mode: String,
}

pub fn cmd_analyze(
    cfg: &RunConfig,
    opts: &AnalyzeOptions,
    csv: &mut dyn Write,
    report: &mut dyn Write,
) -> Result<(), CliError> {
    let est = lookup_estimator(&opts.mode)?;
    let distances = match &opts.sweep {
        Some(spec) => parse_sweep_spec(spec)?,
        None => vec![cfg.distance_km],
    };
    let link = cfg.link_params();
    let decoy = cfg.decoy_params();
    let rows = distance_sweep(&decoy, &link, &distances, est)?;

    writeln!(
        csv,
        "distance_km,Q_mu,Q_nu1,Q_nu2,E_mu,Y1,Q1,e1,raw_bps,secure_bps,clamped"
    )?;
    for row in &rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            full(row.distance_km),
            full(row.gains.q_mu),
            full(row.gains.q_nu1),
            full(row.gains.q_nu2),
            full(row.gains.e_mu),
            full(row.single.y1),
            full(row.single.q1),
            full(row.single.e1),
            full(row.rate.raw_sifted_rate_bps),
            full(row.rate.secure_rate_bps),
            u8::from(row.rate.clamped),
        )?;
    }

    write_reference_report(cfg, report)?;
    Ok(())
}

fn lookup_estimator(mode: &str) -> Result<&'static dyn SinglePhotonEstimator, CliError> {
    estimator_by_name(mode).ok_or_else(|| {
        let names: Vec<&str> = estimators().iter().map(|e| e.name()).collect();
        CliError::Input(format!(
            "unknown mode '{mode}'; available: {}",
            names.join(", ")
        ))
    })
}

/// Cross-check the engine against the published 20 km rate table, flagging
/// every value the model does not reproduce.
fn write_reference_report(cfg: &RunConfig, report: &mut dyn Write) -> Result<(), CliError> {
    let link = cfg.link_params().with_distance(reference::DISTANCE_KM);
    let decoy = cfg.decoy_params();
    let est = lookup_estimator("exact")?;
    let (gains, single, rate) = secure_key_rate(&link, &decoy, est)?;
    writeln!(
        report,
        "reference comparison at {} km (exact single-photon estimator):",
        reference::DISTANCE_KM
    )?;
    for check in reference::compare_rate_table(&gains, &single, &rate) {
        let verdict = if check.diverges() { "DIVERGES" } else { "ok" };
        writeln!(
            report,
            "  {:<12} computed {:>13.6e}  published {:>13.6e}  {} ({:.1}%)",
            check.name,
            check.computed,
            check.published,
            verdict,
            100.0 * check.relative_deviation(),
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, Default)]
pub struct SimulateOptions {
    pub workers: Option<usize>,
}

pub fn cmd_simulate(
    cfg: &RunConfig,
    opts: &SimulateOptions,
    csv: &mut dyn Write,
    report: &mut dyn Write,
) -> Result<(), CliError> {
    let mc = cfg.mc_config();
    let workers = opts.workers.unwrap_or(1);
    let result = run_with_workers(&mc, workers)?;

    writeln!(
        csv,
        "class,sent,detected,sifted,errors,gain_emp,gain_model,z_gain,qber_emp,qber_model,z_qber"
    )?;
    let link = cfg.link_params();
    let decoy = cfg.decoy_params();
    for class in IntensityClass::ALL {
        let counts = result.counts(class);
        let (q_model, e_model) = crate::decoy::gain_and_qber(&link, class.intensity(&decoy));
        let q_emp = result.empirical_gain(class);
        let e_emp = result.empirical_qber(class);
        let z_gain = if counts.sent > 0 {
            (q_emp - q_model) / (q_model * (1.0 - q_model) / counts.sent as f64).sqrt()
        } else {
            f64::NAN
        };
        let z_qber = if counts.sifted > 0 {
            (e_emp - e_model) / (e_model * (1.0 - e_model) / counts.sifted as f64).sqrt()
        } else {
            f64::NAN
        };
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            class.label(),
            counts.sent,
            counts.detected,
            counts.sifted,
            counts.errors,
            full(q_emp),
            full(q_model),
            full(z_gain),
            full(e_emp),
            full(e_model),
            full(z_qber),
        )?;
    }

    write_simulation_report(cfg, &result, report)?;
    Ok(())
}

fn write_simulation_report(
    cfg: &RunConfig,
    result: &MCResult,
    report: &mut dyn Write,
) -> Result<(), CliError> {
    let decoy = cfg.decoy_params();
    let link = cfg.link_params();
    writeln!(
        report,
        "simulation: {} pulses, seed {}",
        result.n_pulses, result.seed
    )?;
    writeln!(
        report,
        "  detections {}  sifted {}  sift fraction {:.4}",
        result.detected_total(),
        result.sifted_total(),
        result.sifted_total() as f64 / result.detected_total().max(1) as f64
    )?;
    let rate = estimate_key_rate(result, &decoy)?;
    writeln!(
        report,
        "  empirical decoy-bound secure rate = {:.4e} b/s (raw sifted {:.4e} b/s{})",
        rate.secure_rate_bps,
        rate.raw_sifted_rate_bps,
        if rate.clamped { ", clamped" } else { "" }
    )?;
    for (name, est) in [("exact", "exact"), ("decoy-bound", "decoy")] {
        let est = lookup_estimator(est)?;
        match secure_key_rate(&link, &decoy, est) {
            Ok((_, _, rate)) => writeln!(
                report,
                "  analytic {name} secure rate = {:.4e} b/s",
                rate.secure_rate_bps
            )?,
            Err(e) => writeln!(report, "  analytic {name} rate unavailable: {e}")?,
        }
    }
    Ok(())
}

pub fn cmd_sidechannel(
    files: &[PathBuf],
    labels: Option<&str>,
    csv: &mut dyn Write,
    report: &mut dyn Write,
) -> Result<(), CliError> {
    if files.len() < 2 {
        return Err(CliError::Input(format!(
            "need at least 2 waveform files to compare, got {}",
            files.len()
        )));
    }
    let labels: Vec<String> = match labels {
        Some(joined) => {
            let parts: Vec<String> = joined.split(',').map(|s| s.trim().to_string()).collect();
            if parts.len() != files.len() {
                return Err(CliError::Input(format!(
                    "{} labels for {} files",
                    parts.len(),
                    files.len()
                )));
            }
            parts
        }
        None => files
            .iter()
            .map(|p| {
                p.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            })
            .collect(),
    };

    let mut waveforms: Vec<Waveform> = Vec::with_capacity(files.len());
    for (path, label) in files.iter().zip(&labels) {
        // measured traces are compared normalized to their own total energy
        let w = read_waveform_csv(path)?
            .normalize()
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if w.is_intensity_only() {
            writeln!(report, "chirp unobservable: {label} (intensity-only input)")?;
        }
        waveforms.push(w);
    }

    writeln!(
        csv,
        "label_a,label_b,abs_s,abs_s_sq,temporal_rms,spectral_rms"
    )?;
    for i in 0..waveforms.len() {
        for j in (i + 1)..waveforms.len() {
            let r = overlap(&waveforms[i], &waveforms[j])?;
            writeln!(
                csv,
                "{},{},{},{},{},{}",
                labels[i],
                labels[j],
                full(r.abs_s()),
                full(r.abs_s_sq),
                full(r.temporal_rms),
                full(r.spectral_rms),
            )?;
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct SourceOptions {
    /// Pulses to emit in the train CSV.
    pub pulses: u64,
    pub seed: u64,
    /// `random` or `fixed:LEVEL/POL`.
    pub protocol: String,
}

pub fn cmd_source(
    cfg: &RunConfig,
    opts: &SourceOptions,
    csv: &mut dyn Write,
    report: &mut dyn Write,
) -> Result<(), CliError> {
    if opts.pulses == 0 {
        return Err(CliError::Input("pulse count must be at least 1".into()));
    }
    let source = cfg.source_config();
    let n = opts.pulses as usize;
    let choices: Vec<(String, String)> = if opts.protocol == "random" {
        random_protocol_choices(&source, n, opts.seed)
    } else if let Some(spec) = opts.protocol.strip_prefix("fixed:") {
        let Some((level, pol)) = spec.split_once('/') else {
            return Err(CliError::Input(format!(
                "fixed protocol must be 'fixed:LEVEL/POL', got '{}'",
                opts.protocol
            )));
        };
        vec![(level.to_string(), pol.to_string()); n]
    } else {
        return Err(CliError::Input(format!(
            "unknown protocol '{}'; use 'random' or 'fixed:LEVEL/POL'",
            opts.protocol
        )));
    };
    let train = generate_pulse_train(&source, n, &choices, opts.seed)?;

    write_budget_report(cfg, report)?;

    writeln!(csv, "i,level,atten_dB,pol_label,gamma_rad,phi_rad")?;
    for pulse in &train {
        let level = &source.am_levels[pulse.level_idx];
        let pol = &source.pm_states[pulse.pol_idx];
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            pulse.index,
            level.label,
            full(level.attenuation_db),
            pol.label,
            full(pulse.pm_relative_phase),
            full(pulse.global_phase),
        )?;
    }
    Ok(())
}

fn write_budget_report(cfg: &RunConfig, report: &mut dyn Write) -> Result<(), CliError> {
    let source = cfg.source_config();
    let photons = photons_per_pulse(&source)?;
    let voa = voa_for_target_mu(&source, cfg.mu)?;
    let coherence = coherence_suppression(&source);
    let budget = power_budget(&source);
    let published_passes = passes_per_period(reference::ROUND_TRIP_TIME_S, source.period());

    writeln!(report, "transmitter budget report")?;
    writeln!(
        report,
        "  photons_per_pulse = {photons:.4e} (published ~{:.0e})",
        reference::PHOTONS_PER_PULSE
    )?;
    writeln!(
        report,
        "  voa_for_signal_mu({}) = {voa:.3} dB (published ~{:.0} dB)",
        cfg.mu,
        reference::VOA_DB
    )?;
    writeln!(
        report,
        "  round_trip_time = {:.3} ps (2 L_c n / c0)",
        coherence.round_trip_time_s * 1e12
    )?;
    writeln!(
        report,
        "  round_trip_time_published = {:.3} ps [differs from the computed {:.3} ps]",
        reference::ROUND_TRIP_TIME_S * 1e12,
        coherence.round_trip_time_s * 1e12
    )?;
    writeln!(
        report,
        "  cavity_passes_per_period = {} (computed rtt) -> suppression >= {:.0} dB",
        coherence.passes_per_period, coherence.suppression_db_lower_bound
    )?;
    writeln!(
        report,
        "  cavity_passes_per_period = {} (published rtt) -> suppression >= {:.0} dB",
        published_passes,
        published_passes as f64 * ROUND_TRIP_LOSS_DB
    )?;
    writeln!(report, "  ld_dc_power = {:.3} mW", budget.ld_dc_mw)?;
    writeln!(report, "  ld_rf_power = {:.3} mW", budget.ld_rf_mw)?;
    Ok(())
}
