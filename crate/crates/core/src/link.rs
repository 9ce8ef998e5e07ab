//! Free-space link budget and detection-layer parameters.

/// Error probability of a background-only click: the dark/stray photon
/// carries no signal correlation, so half the assignments are wrong.
pub const VACUUM_ERROR: f64 = 0.5;

/// Channel and receiver parameters for one link distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkParams {
    pub distance_km: f64,
    pub atmosphere_loss_db_per_km: f64,
    pub optics_loss_db: f64,
    pub detector_efficiency: f64,
    /// Background yield Y0: dark counts plus stray light, per gate.
    pub background_yield: f64,
    /// Misalignment error probability for signal detections.
    pub misalignment_error: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            distance_km: 20.0,
            atmosphere_loss_db_per_km: 0.1,
            optics_loss_db: 5.0,
            detector_efficiency: 0.5,
            background_yield: 1e-5,
            misalignment_error: 0.01,
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.distance_km < 0.0 {
            return Err(format!(
                "distance must be nonnegative, got {}",
                self.distance_km
            ));
        }
        if self.atmosphere_loss_db_per_km < 0.0 || self.optics_loss_db < 0.0 {
            return Err("losses must be nonnegative".into());
        }
        for (name, p) in [
            ("detector_efficiency", self.detector_efficiency),
            ("background_yield", self.background_yield),
            ("misalignment_error", self.misalignment_error),
        ] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(format!("{name} must be a probability in [0, 1], got {p}"));
            }
        }
        Ok(())
    }

    pub fn with_distance(&self, distance_km: f64) -> Self {
        Self {
            distance_km,
            ..*self
        }
    }

    /// Overall single-photon transmittance: detector efficiency folded into
    /// the dB losses of atmosphere and optics.
    pub fn transmittance(&self) -> f64 {
        let loss_db = self.distance_km * self.atmosphere_loss_db_per_km + self.optics_loss_db;
        self.detector_efficiency * 10f64.powf(-loss_db / 10.0)
    }

    /// Yield of an n-photon pulse: background and signal click independently
    /// and combine by union, `Y_n = Y0 + eta_n - Y0 eta_n` with
    /// `eta_n = 1 - (1 - eta)^n`.
    pub fn yield_n(&self, n: u32) -> f64 {
        let eta_n = 1.0 - (1.0 - self.transmittance()).powi(n as i32);
        let y0 = self.background_yield;
        y0 + eta_n - y0 * eta_n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transmittance_reference_points() {
        let p = LinkParams::default();
        assert!(
            (p.transmittance() - 0.0998).abs() < 1e-4,
            "{}",
            p.transmittance()
        );
        let far = p.with_distance(50.0);
        assert!((far.transmittance() - 0.05).abs() < 1e-12);
        let ideal = LinkParams {
            distance_km: 0.0,
            optics_loss_db: 0.0,
            detector_efficiency: 1.0,
            ..p
        };
        assert_eq!(ideal.transmittance(), 1.0);
    }

    #[test]
    fn yield_reference_points() {
        let p = LinkParams::default();
        assert_eq!(p.yield_n(0), 1e-5);
        assert!((p.yield_n(1) - 0.09977).abs() < 1e-5, "{}", p.yield_n(1));
        let ideal = LinkParams {
            distance_km: 0.0,
            optics_loss_db: 0.0,
            detector_efficiency: 1.0,
            ..p
        };
        for n in 1..5 {
            assert_eq!(ideal.yield_n(n), 1.0);
        }
    }

    #[test]
    fn transmittance_decreases_with_distance() {
        let p = LinkParams::default();
        let mut last = f64::INFINITY;
        for d in 0..20 {
            let eta = p.with_distance(d as f64 * 10.0).transmittance();
            assert!(eta < last);
            last = eta;
        }
    }

    #[test]
    fn yield_increases_with_photon_number() {
        let p = LinkParams::default();
        let mut last = 0.0;
        for n in 0..200 {
            let y = p.yield_n(n);
            assert!(y > last || (y == 1.0 && last == 1.0));
            last = y;
        }
        assert!((p.yield_n(1000) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validation_rejects_bad_probabilities() {
        let p = LinkParams {
            detector_efficiency: 1.5,
            ..LinkParams::default()
        };
        assert!(p.validate().is_err());
        let p = LinkParams {
            distance_km: -1.0,
            ..LinkParams::default()
        };
        assert!(p.validate().is_err());
    }
}
