//! Single-photon estimation strategies.
//!
//! The two interchangeable ways of producing `(Y1, Q1, e1)` live behind one
//! trait and are selected by name at runtime (`--mode` on the CLI): the
//! exact channel-model values, or the measurement-only decoy bound.

use crate::link::LinkParams;

use super::{
    single_photon_decoy_bound, single_photon_exact, DecoyError, DecoyParams, GainStats,
    SinglePhoton,
};

/// Everything an estimator may draw on. The decoy bound uses only the
/// measured gains; the exact model needs the channel parameters and fails
/// without them (empirical data has no channel model to consult).
#[derive(Clone, Copy)]
pub struct EstimatorInput<'a> {
    pub gains: &'a GainStats,
    pub link: Option<&'a LinkParams>,
    pub decoy: &'a DecoyParams,
}

pub trait SinglePhotonEstimator: Sync {
    /// Registry key, also the CLI `--mode` value.
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    fn estimate(&self, input: EstimatorInput<'_>) -> Result<SinglePhoton, DecoyError>;
}

/// Channel-model single-photon values (requires link parameters).
pub struct ExactModel;

impl SinglePhotonEstimator for ExactModel {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn describe(&self) -> &'static str {
        "single-photon yield and error straight from the channel model"
    }

    fn estimate(&self, input: EstimatorInput<'_>) -> Result<SinglePhoton, DecoyError> {
        let link = input.link.ok_or_else(|| {
            DecoyError::EstimatorFailure(
                "exact estimator needs channel parameters; measured gains alone are not enough"
                    .into(),
            )
        })?;
        single_photon_exact(link, input.decoy)
    }
}

/// Three-intensity decoy bound computed from the gains alone.
pub struct DecoyBound;

impl SinglePhotonEstimator for DecoyBound {
    fn name(&self) -> &'static str {
        "decoy"
    }

    fn describe(&self) -> &'static str {
        "lower-bounded single-photon yield from the three-intensity decoy estimator"
    }

    fn estimate(&self, input: EstimatorInput<'_>) -> Result<SinglePhoton, DecoyError> {
        single_photon_decoy_bound(input.gains, input.decoy)
    }
}

static EXACT: ExactModel = ExactModel;
static DECOY: DecoyBound = DecoyBound;
static REGISTRY: [&dyn SinglePhotonEstimator; 2] = [&EXACT, &DECOY];

/// All registered estimators, in a stable order.
pub fn estimators() -> &'static [&'static dyn SinglePhotonEstimator] {
    &REGISTRY
}

pub fn estimator_by_name(name: &str) -> Option<&'static dyn SinglePhotonEstimator> {
    estimators().iter().copied().find(|e| e.name() == name)
}
