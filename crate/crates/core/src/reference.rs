//! Published characterization values for the transmitter and its 20 km
//! simulation scenario.
//!
//! Reports compare this implementation's independently computed values
//! against these figures and annotate every divergence instead of silently
//! adopting either side. Known divergences: the published `Q_nu1`, `Q_1`
//! and secure rate are not reproduced by the standard channel model that
//! does reproduce `Q_mu`, `Q_nu2` and `E_mu` from the same parameters.

use crate::decoy::{GainStats, KeyRateResult, SinglePhoton};

/// Scenario distance for the published rate table, km.
pub const DISTANCE_KM: f64 = 20.0;

pub const Q_MU: f64 = 4.87e-2;
pub const Q_NU1: f64 = 1.70e-2;
pub const Q_NU2: f64 = 1.68e-3;
/// Signal QBER.
pub const E_MU: f64 = 1.01e-2;
pub const Q_1: f64 = 3.47e-2;
pub const E_1: f64 = 1.01e-2;
pub const SECURE_RATE_BPS: f64 = 559.80e3;

/// Published cavity round-trip estimate, s (the formula value from the same
/// cavity constants is ~7.2 ps).
pub const ROUND_TRIP_TIME_S: f64 = 20e-12;
pub const CAVITY_PASSES: u64 = 500;
pub const SUPPRESSION_DB_MIN: f64 = 500.0;
/// Photons per full-power pulse, order-of-magnitude figure.
pub const PHOTONS_PER_PULSE: f64 = 6e6;
/// VOA attenuation quoted for the mu = 0.5 signal level, dB.
pub const VOA_DB: f64 = 70.0;

/// Relative deviation beyond which a comparison row is marked as diverging.
pub const DIVERGENCE_THRESHOLD: f64 = 0.05;

/// One row of a computed-vs-published comparison.
#[derive(Clone, Debug)]
pub struct ReferenceCheck {
    pub name: &'static str,
    pub computed: f64,
    pub published: f64,
}

impl ReferenceCheck {
    pub fn relative_deviation(&self) -> f64 {
        ((self.computed - self.published) / self.published).abs()
    }

    pub fn diverges(&self) -> bool {
        self.relative_deviation() > DIVERGENCE_THRESHOLD
    }
}

/// Compare a computed 20 km operating point against the published table.
pub fn compare_rate_table(
    gains: &GainStats,
    single: &SinglePhoton,
    rate: &KeyRateResult,
) -> Vec<ReferenceCheck> {
    vec![
        ReferenceCheck {
            name: "Q_mu",
            computed: gains.q_mu,
            published: Q_MU,
        },
        ReferenceCheck {
            name: "Q_nu1",
            computed: gains.q_nu1,
            published: Q_NU1,
        },
        ReferenceCheck {
            name: "Q_nu2",
            computed: gains.q_nu2,
            published: Q_NU2,
        },
        ReferenceCheck {
            name: "E_mu",
            computed: gains.e_mu,
            published: E_MU,
        },
        ReferenceCheck {
            name: "Q_1",
            computed: single.q1,
            published: Q_1,
        },
        ReferenceCheck {
            name: "e_1",
            computed: single.e1,
            published: E_1,
        },
        ReferenceCheck {
            name: "R_secure_bps",
            computed: rate.secure_rate_bps,
            published: SECURE_RATE_BPS,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoy::estimator::ExactModel;
    use crate::decoy::{model_gain_stats, secure_key_rate, DecoyParams};
    use crate::link::LinkParams;

    #[test]
    fn matching_and_diverging_rows_are_separated() {
        let link = LinkParams::default().with_distance(DISTANCE_KM);
        let d = DecoyParams::default();
        let (gains, single, rate) = secure_key_rate(&link, &d, &ExactModel).unwrap();
        let checks = compare_rate_table(&gains, &single, &rate);
        let by_name = |n: &str| checks.iter().find(|c| c.name == n).unwrap();
        // reproduced by the model
        assert!(!by_name("Q_mu").diverges());
        assert!(!by_name("Q_nu2").diverges());
        assert!(!by_name("E_mu").diverges());
        assert!(!by_name("e_1").diverges());
        // documented divergences
        assert!(by_name("Q_nu1").diverges());
        assert!(by_name("Q_1").diverges());
        assert!(by_name("R_secure_bps").diverges());
        let _ = model_gain_stats(&link, &d);
    }
}
