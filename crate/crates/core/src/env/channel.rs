//! Link-level formulas: geometry, power-law mmWave gain, SIC-aware SINR and
//! spectral efficiency.

use serde::{Deserialize, Serialize};

use super::EnvError;

/// Large-scale channel and radio parameters, all in linear units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Path-loss intercept `C` (linear).
    pub intercept: f64,
    /// Path-loss exponent `a`.
    pub exponent: f64,
    /// Noise power in watts.
    pub noise_w: f64,
    /// MIMO array gain, the product of UAV and UE antenna counts.
    pub mimo_gain: f64,
    /// Transmit power per cluster in watts.
    pub tx_power_w: f64,
    pub bandwidth_hz: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            intercept: 10f64.powf(-6.4),
            exponent: 2.0,
            noise_w: dbm_to_watts(-84.0),
            mimo_gain: 64.0,
            tx_power_w: dbm_to_watts(20.0),
            bandwidth_hz: 2e9,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), EnvError> {
        for (name, v) in [
            ("intercept", self.intercept),
            ("noise_w", self.noise_w),
            ("mimo_gain", self.mimo_gain),
            ("tx_power_w", self.tx_power_w),
            ("bandwidth_hz", self.bandwidth_hz),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(EnvError::InvalidChannel(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.exponent >= 1.0 && self.exponent.is_finite()) {
            return Err(EnvError::InvalidChannel(format!(
                "path-loss exponent must be at least 1, got {}",
                self.exponent
            )));
        }
        Ok(())
    }

    /// Same channel with a different transmit power.
    pub fn with_tx_power_dbm(&self, dbm: f64) -> Self {
        Self {
            tx_power_w: dbm_to_watts(dbm),
            ..self.clone()
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Euclidean distance from the UAV to a ground user (user height 0).
pub fn distance_3d(uav: [f64; 3], user: [f64; 2]) -> f64 {
    let dx = uav[0] - user[0];
    let dy = uav[1] - user[1];
    (dx * dx + dy * dy + uav[2] * uav[2]).sqrt()
}

/// `C * d^-a`.
pub fn channel_gain(distance: f64, params: &ChannelParams) -> Result<f64, EnvError> {
    if !(distance > 0.0) {
        return Err(EnvError::NonPositiveDistance(distance));
    }
    Ok(params.intercept * distance.powf(-params.exponent))
}

/// Received SNR with the full cluster power: `P_T * G * g / sigma^2`.
pub fn snr(gain: f64, params: &ChannelParams) -> f64 {
    params.tx_power_w * params.mimo_gain * gain / params.noise_w
}

/// SINR of a user holding power share `alpha` while `interference` is the
/// share of an undecoded co-cluster signal (0 after successful SIC).
pub fn sinr(snr: f64, alpha: f64, interference: f64) -> f64 {
    snr * alpha / (snr * interference + 1.0)
}

/// Spectral efficiency in bit/s/Hz.
pub fn rate_se(sinr: f64) -> f64 {
    sinr.ln_1p() / std::f64::consts::LN_2
}

/// Smallest power share that lets an interference-free user reach
/// `min_se` bit/s/Hz.
pub fn min_alpha_feasible(min_se: f64, snr: f64) -> f64 {
    (min_se.exp2() - 1.0) / snr
}
