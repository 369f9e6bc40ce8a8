//! Weak+vacuum decoy-state bounds for LM05.
//!
//! One [`MeasuredStats`] row goes in; the single-photon yield bound, the
//! combined one/two-photon yield bound, the effective gain and error rate of
//! one- and two-photon pulses and the resulting secure key rate come out.
//! Negative intermediate lower bounds (statistical fluctuation can produce
//! them) are clamped into their physical range and reported via
//! [`Bounded::clamped`].

use crate::error::{Error, Result};
use crate::scalar::{binary_entropy_unchecked, tau_unchecked};
use crate::types::{BoundsResult, DeviceParams, IntensitySet, MeasuredStats};

/// A bound value together with whether it had to be clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounded {
    pub value: f64,
    pub clamped: bool,
}

impl Bounded {
    fn clamp(raw: f64, lo: f64, hi: f64) -> Self {
        let value = raw.clamp(lo, hi);
        Self {
            value,
            clamped: value != raw,
        }
    }
}

/// Lower bound on the single-photon yield from the weak and vacuum decoys,
/// clamped to `[0, 1]`.
pub fn y1_lower(stats: &MeasuredStats, intensities: &IntensitySet) -> Result<Bounded> {
    let (mu, nu) = (intensities.mu(), intensities.nu());
    let denom = mu * nu - nu * nu;
    if !(denom > 0.0) {
        return Err(Error::DegenerateIntensities {
            mu,
            nu,
            what: "mu*nu - nu^2",
        });
    }
    let mu2 = mu * mu;
    let raw = (mu / denom)
        * (stats.q_nu() * nu.exp()
            - stats.q_mu() * mu.exp() * (nu * nu) / mu2
            - ((mu2 - nu * nu) / mu2) * stats.y0());
    Ok(Bounded::clamp(raw, 0.0, 1.0))
}

/// Lower bound on `Y1 + Y2`, clamped to `[y1_l, 1]`.
///
/// `y1_l` must come from [`y1_lower`] on the same inputs.
pub fn y12_lower(stats: &MeasuredStats, intensities: &IntensitySet, y1_l: f64) -> Result<Bounded> {
    let (mu, nu) = (intensities.mu(), intensities.nu());
    let (mu2, mu3, nu3) = (mu * mu, mu * mu * mu, nu * nu * nu);
    let denom = mu3 * (nu - 0.5 * nu3 / mu);
    if !(denom > 0.0) {
        return Err(Error::DegenerateIntensities {
            mu,
            nu,
            what: "mu^3 (nu - nu^3 / 2mu)",
        });
    }
    let numer = mu3 * nu.exp() * stats.q_nu()
        - nu3 * stats.q_mu() * mu.exp()
        - (mu3 - nu3) * stats.y0()
        + (nu3 * mu - 0.5 * nu3 * mu2) * y1_l;
    Ok(Bounded::clamp(numer / denom, y1_l, 1.0))
}

/// Lower bound on the gain contributed by one- and two-photon pulses at
/// intensity `mu`.
pub fn q12_lower(y12_l: f64, y1_l: f64, mu: f64) -> Bounded {
    let raw = (0.5 * y12_l * mu * mu + (y1_l * mu - 0.5 * y1_l * mu * mu)) * (-mu).exp();
    Bounded::clamp(raw, 0.0, 1.0)
}

/// Upper bound on the error rate of one- and two-photon pulses, clamped to
/// `[0, 1]`.
///
/// Fails with [`Error::VacuousBound`] when `q12_l` is not positive; the
/// point then carries no secure key.
pub fn eps12_upper(stats: &MeasuredStats, q12_l: f64, mu: f64, e0: f64) -> Result<Bounded> {
    if !(q12_l > 0.0) {
        return Err(Error::VacuousBound { q12_l });
    }
    let raw = (stats.e_mu() * stats.q_mu() - e0 * stats.y0() * (-mu).exp()) / q12_l;
    Ok(Bounded::clamp(raw, 0.0, 1.0))
}

/// Lower bound on the secure key rate per pulse. Negative values mean no
/// key can be extracted.
pub fn key_rate_lower(
    stats: &MeasuredStats,
    q12_l: f64,
    eps12_u: f64,
    params: &DeviceParams,
) -> f64 {
    let leak = stats.q_mu() * params.f_ec() * binary_entropy_unchecked(stats.e_mu());
    -leak + q12_l * (1.0 - tau_unchecked(eps12_u))
}

/// Runs the whole bound chain on one row.
///
/// A vacuous error-rate bound does not fail: the row is returned with
/// `insecure` set, `eps12_u = 1` and `r_l` reduced to the (negative) error
/// correction term.
pub fn analyze(
    stats: &MeasuredStats,
    intensities: &IntensitySet,
    params: &DeviceParams,
) -> Result<BoundsResult> {
    let mu = intensities.mu();
    let y1 = y1_lower(stats, intensities)?;
    let y12 = y12_lower(stats, intensities, y1.value)?;
    let q12 = q12_lower(y12.value, y1.value, mu);
    let mut clamped = y1.clamped || y12.clamped || q12.clamped;

    let (eps12_u, vacuous) = match eps12_upper(stats, q12.value, mu, params.e0()) {
        Ok(eps) => {
            clamped |= eps.clamped;
            (eps.value, false)
        }
        Err(Error::VacuousBound { .. }) => (1.0, true),
        Err(e) => return Err(e),
    };
    let r_l = key_rate_lower(stats, q12.value, eps12_u, params);

    Ok(BoundsResult {
        y1_l: y1.value,
        y12_l: y12.value,
        q12_l: q12.value,
        eps12_u,
        r_l,
        clamped,
        insecure: vacuous || !(r_l > 0.0),
    })
}
