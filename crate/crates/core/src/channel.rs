//! Link budget, 3GPP macro path loss, per-PRB Shannon rate with SINR gap,
//! and the horizon-proportional prediction error model.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("distance must be positive, got {0} km")]
    NonPositiveDistance(f64),
    #[error("invalid link budget: {0}")]
    InvalidBudget(String),
    #[error("slot offset {t} outside prediction horizon 1..={horizon}")]
    SlotOutOfRange { t: usize, horizon: usize },
    #[error("prediction error deviation must be non-negative, got {0} dB")]
    NegativeSigma(f64),
}

/// Radio constants shared by all users. Power and gains in dB units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub antenna_gain_dbi: f64,
    pub prb_bandwidth_hz: f64,
    pub noise_density_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub interference_margin_db: f64,
    pub shadow_margin_db: f64,
    /// Target bit error rate; determines the SINR gap.
    pub ber: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            tx_power_dbm: 46.0,
            antenna_gain_dbi: 18.0,
            prb_bandwidth_hz: 180e3,
            noise_density_dbm_hz: -174.0,
            noise_figure_db: 10.0,
            interference_margin_db: 6.0,
            shadow_margin_db: 10.0,
            ber: 1e-6,
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<(), ChannelError> {
        let finite = [
            self.tx_power_dbm,
            self.antenna_gain_dbi,
            self.noise_density_dbm_hz,
            self.noise_figure_db,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(ChannelError::InvalidBudget("non-finite power or gain".into()));
        }
        if !(self.prb_bandwidth_hz > 0.0 && self.prb_bandwidth_hz.is_finite()) {
            return Err(ChannelError::InvalidBudget(format!(
                "PRB bandwidth {} Hz",
                self.prb_bandwidth_hz
            )));
        }
        if !(self.interference_margin_db >= 0.0 && self.shadow_margin_db >= 0.0) {
            return Err(ChannelError::InvalidBudget("margins must be non-negative".into()));
        }
        if !(self.ber > 0.0 && self.ber < 0.2) {
            return Err(ChannelError::InvalidBudget(format!(
                "BER {} outside (0, 0.2)",
                self.ber
            )));
        }
        Ok(())
    }

    /// Γ = −ln(5·BER)/1.5, linear.
    pub fn sinr_gap_linear(&self) -> f64 {
        -(5.0 * self.ber).ln() / 1.5
    }

    /// Thermal noise plus receiver noise figure over one PRB, dBm.
    pub fn noise_power_dbm(&self) -> f64 {
        self.noise_density_dbm_hz + 10.0 * self.prb_bandwidth_hz.log10() + self.noise_figure_db
    }

    /// Effective SINR (linear, after the gap) for a channel gain in dB that
    /// already includes path loss and shadowing.
    pub fn effective_sinr(&self, gain_db: f64) -> f64 {
        let sinr_db = self.tx_power_dbm + self.antenna_gain_dbi + gain_db
            - self.noise_power_dbm()
            - self.interference_margin_db;
        10f64.powf(sinr_db / 10.0) / self.sinr_gap_linear()
    }

    /// Channel gain in dB at `distance_km` from the serving BS: −(PL + L_s).
    pub fn gain_db(&self, distance_km: f64) -> Result<f64, ChannelError> {
        Ok(-(path_loss_db(distance_km)? + self.shadow_margin_db))
    }
}

/// 3GPP macro-cell path loss `128.1 + 37.6·log10(d)` with `d` in km,
/// without the shadowing term.
pub fn path_loss_db(distance_km: f64) -> Result<f64, ChannelError> {
    if !(distance_km > 0.0) {
        return Err(ChannelError::NonPositiveDistance(distance_km));
    }
    Ok(128.1 + 37.6 * distance_km.log10())
}

/// Achievable rate of one PRB in bits/s: `B·log2(1 + SINR/Γ)`.
pub fn achievable_rate_per_prb(gain_db: f64, budget: &LinkBudget) -> f64 {
    budget.prb_bandwidth_hz * (1.0 + budget.effective_sinr(gain_db)).log2()
}

/// Predicted gain for a slot `t` steps ahead (1-based) in a horizon of `horizon`
/// slots: the true gain plus `N(0, ((t/T)·σ)²)` in dB.
///
/// Always consumes exactly one normal draw so that streams stay aligned
/// across different `sigma` values.
pub fn apply_prediction_error<R: Rng + ?Sized>(
    true_gain_db: f64,
    t: usize,
    horizon: usize,
    sigma_db: f64,
    rng: &mut R,
) -> Result<f64, ChannelError> {
    if t == 0 || t > horizon {
        return Err(ChannelError::SlotOutOfRange { t, horizon });
    }
    if !(sigma_db >= 0.0) {
        return Err(ChannelError::NegativeSigma(sigma_db));
    }
    let z: f64 = rng.sample(StandardNormal);
    let std = t as f64 / horizon as f64 * sigma_db;
    if std == 0.0 {
        return Ok(true_gain_db);
    }
    Ok(true_gain_db + std * z)
}

/// Per-slot true and predicted gains over a user's lifetime, dB.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGainTrace {
    pub true_db: Vec<f64>,
    pub predicted_db: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn path_loss_reference_points() {
        assert!((path_loss_db(1.0).unwrap() - 128.1).abs() < 1e-12);
        assert!((path_loss_db(0.1).unwrap() - 90.5).abs() < 1e-12);
        // 37.6·log10(0.25) = −22.637 (log10(0.25) = −0.60206)
        assert!((path_loss_db(0.25).unwrap() - 105.4625).abs() < 1e-3);
        assert!(path_loss_db(0.0).is_err());
        assert!(path_loss_db(-1.0).is_err());
    }

    #[test]
    fn sinr_gap_at_default_ber() {
        let g = LinkBudget::default().sinr_gap_linear();
        // −ln(5e-6)/1.5 = 12.206/1.5
        assert!((g - 8.137).abs() < 1e-3, "{g}");
        assert!((10.0 * g.log10() - 9.105).abs() < 1e-3);
    }

    #[test]
    fn unit_effective_sinr_gives_one_bit_per_hz() {
        let budget = LinkBudget::default();
        // Pick the gain that makes SINR/Γ exactly 1.
        let gain = budget.noise_power_dbm() + budget.interference_margin_db
            - budget.tx_power_dbm
            - budget.antenna_gain_dbi
            + 10.0 * budget.sinr_gap_linear().log10();
        let rate = achievable_rate_per_prb(gain, &budget);
        assert!((rate - 180e3).abs() < 1e-6, "{rate}");
    }

    #[test]
    fn vanishing_sinr_gives_vanishing_rate() {
        let rate = achievable_rate_per_prb(-400.0, &LinkBudget::default());
        assert!(rate < 1e-20);
    }

    #[test]
    fn rate_is_monotone_in_gain_and_ber() {
        let budget = LinkBudget::default();
        let mut prev = 0.0;
        for g in (-200..=-50).map(|g| g as f64) {
            let r = achievable_rate_per_prb(g, &budget);
            assert!(r > prev);
            prev = r;
        }
        let loose = LinkBudget { ber: 1e-3, ..budget.clone() };
        assert!(achievable_rate_per_prb(-110.0, &loose) > achievable_rate_per_prb(-110.0, &budget));
    }

    #[test]
    fn budget_validation() {
        assert!(LinkBudget::default().validate().is_ok());
        for bad in [
            LinkBudget { ber: 0.2, ..Default::default() },
            LinkBudget { ber: 0.0, ..Default::default() },
            LinkBudget { shadow_margin_db: -1.0, ..Default::default() },
            LinkBudget { prb_bandwidth_hz: 0.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn zero_sigma_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for t in 1..=10 {
            assert_eq!(apply_prediction_error(-97.3, t, 10, 0.0, &mut rng).unwrap(), -97.3);
        }
    }

    #[test]
    fn out_of_range_offsets_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(apply_prediction_error(0.0, 0, 10, 1.0, &mut rng).is_err());
        assert!(apply_prediction_error(0.0, 11, 10, 1.0, &mut rng).is_err());
        assert!(apply_prediction_error(0.0, 1, 10, -1.0, &mut rng).is_err());
    }

    fn empirical_std(t: usize, horizon: usize, sigma: f64, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| apply_prediction_error(0.0, t, horizon, sigma, &mut rng).unwrap())
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, var.sqrt())
    }

    #[test]
    fn error_deviation_grows_linearly_with_lookahead() {
        let (_, full) = empirical_std(100, 100, 10.0, 7);
        assert!((9.9..=10.1).contains(&full), "{full}");
        let (_, half) = empirical_std(50, 100, 10.0, 8);
        assert!((half - 5.0).abs() <= 0.05, "{half}");
    }

    #[test]
    fn error_is_zero_mean() {
        for (t, horizon, sigma) in [(1, 1, 20.0), (20, 100, 10.0), (3, 7, 15.0)] {
            let (mean, _) = empirical_std(t, horizon, sigma, 11);
            assert!(mean.abs() <= 0.1, "{mean}");
        }
    }
}
