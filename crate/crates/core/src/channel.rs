//! Forward model: expected gains and error rates from device parameters,
//! channel loss and intensities.
//!
//! Uses the asymptotic weak-coherent-pulse model
//! `Q = Y0 + 1 - exp(-eta * mu)` and `Y_n = Y0 + 1 - (1 - eta)^n`.
//! The dB figure is the total attenuation between preparation and
//! detection; both passes of the two-way path are folded into it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{binary_entropy_unchecked, tau_unchecked};
use crate::types::{ChannelPoint, DeviceParams, IntensitySet, MeasuredStats};

/// Highest photon number tracked in the per-photon tables.
pub const N_MAX: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedStats {
    pub q_mu: f64,
    pub e_mu: f64,
    pub q_nu: f64,
    pub e_nu: f64,
    pub y0: f64,
    /// Yield `Y_n` for `n = 0..=N_MAX`.
    pub yields: Vec<f64>,
    /// Error rate `e_n` for `n = 0..=N_MAX`.
    pub errors: Vec<f64>,
}

impl PredictedStats {
    pub fn to_measured(&self) -> Result<MeasuredStats> {
        MeasuredStats::new(self.q_mu, self.e_mu, self.q_nu, self.e_nu, self.y0)
    }
}

/// `eta_bob * 10^(-loss/10)`.
pub fn overall_transmission(params: &DeviceParams, channel: ChannelPoint) -> f64 {
    params.eta_bob() * channel.transmittance()
}

/// Expected gain of a pulse with mean photon number `intensity`.
pub fn expected_gain(params: &DeviceParams, eta: f64, intensity: f64) -> f64 {
    (params.y0() - (-eta * intensity).exp_m1()).min(1.0)
}

/// Expected QBER of a pulse with mean photon number `intensity`.
pub fn expected_qber(params: &DeviceParams, eta: f64, intensity: f64) -> Result<f64> {
    let q = expected_gain(params, eta, intensity);
    if !(q > 0.0) {
        return Err(Error::InsufficientData(format!(
            "expected gain is zero at intensity {intensity}; QBER undefined"
        )));
    }
    let err = params.e0() * params.y0() - params.e_detector() * (-eta * intensity).exp_m1();
    Ok((err / q).clamp(0.0, 1.0))
}

fn photon_yield(params: &DeviceParams, eta: f64, n: usize) -> (f64, f64) {
    let arrive = 1.0 - (1.0 - eta).powi(n as i32);
    let y = (params.y0() + arrive).min(1.0);
    let e = if y > 0.0 {
        ((params.e0() * params.y0() + params.e_detector() * arrive) / y).clamp(0.0, 1.0)
    } else {
        params.e0()
    };
    (y, e)
}

pub fn predict_stats(
    params: &DeviceParams,
    channel: ChannelPoint,
    intensities: &IntensitySet,
) -> PredictedStats {
    let eta = overall_transmission(params, channel);
    let (yields, errors) = (0..=N_MAX).map(|n| photon_yield(params, eta, n)).unzip();
    // Gains are positive for positive intensities and eta > 0.
    PredictedStats {
        q_mu: expected_gain(params, eta, intensities.mu()),
        e_mu: expected_qber(params, eta, intensities.mu()).expect("positive gain"),
        q_nu: expected_gain(params, eta, intensities.nu()),
        e_nu: expected_qber(params, eta, intensities.nu()).expect("positive gain"),
        y0: params.y0(),
        yields,
        errors,
    }
}

/// Exact one- and two-photon gain and error rate at signal intensity `mu`.
pub fn exact_q12(params: &DeviceParams, channel: ChannelPoint, mu: f64) -> (f64, f64) {
    let eta = overall_transmission(params, channel);
    let (y1, e1) = photon_yield(params, eta, 1);
    let (y2, e2) = photon_yield(params, eta, 2);
    let w1 = mu * (-mu).exp();
    let w2 = 0.5 * mu * mu * (-mu).exp();
    let q12 = y1 * w1 + y2 * w2;
    let e12 = if q12 > 0.0 {
        (e1 * y1 * w1 + e2 * y2 * w2) / q12
    } else {
        0.0
    };
    (q12, e12)
}

/// Key rate with perfect knowledge of the one- and two-photon
/// contributions, i.e. the limit of infinitely many decoy intensities.
///
/// The key-rate formula is evaluated with exact `Q12`, `e12` in place of
/// their decoy bounds.
pub fn infinite_decoy_rate(params: &DeviceParams, channel: ChannelPoint, mu: f64) -> f64 {
    let eta = overall_transmission(params, channel);
    let q_mu = expected_gain(params, eta, mu);
    let e_mu = expected_qber(params, eta, mu).unwrap_or(params.e0());
    let (q12, e12) = exact_q12(params, channel, mu);
    -q_mu * params.f_ec() * binary_entropy_unchecked(e_mu) + q12 * (1.0 - tau_unchecked(e12))
}
