//! Domain values shared across the crate.
//!
//! Every type validates its invariants on construction, so a value that
//! exists is a value the bound pipeline can consume.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::db_to_transmittance;

fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidField {
        field,
        reason: reason.into(),
    }
}

fn probability(field: &'static str, v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(invalid(field, format!("{v} is not a probability in [0, 1]")))
    }
}

/// Intrinsic parameters of the prepare-and-measure apparatus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDeviceParams")]
pub struct DeviceParams {
    eta_bob: f64,
    e_detector: f64,
    y0: f64,
    e0: f64,
    f_ec: f64,
}

#[derive(Deserialize)]
struct RawDeviceParams {
    eta_bob: f64,
    e_detector: f64,
    y0: f64,
    #[serde(default = "DeviceParams::default_e0")]
    e0: f64,
    #[serde(default = "DeviceParams::default_f_ec")]
    f_ec: f64,
}

impl TryFrom<RawDeviceParams> for DeviceParams {
    type Error = Error;
    fn try_from(r: RawDeviceParams) -> Result<Self> {
        DeviceParams::new(r.eta_bob, r.e_detector, r.y0, r.e0, r.f_ec)
    }
}

impl DeviceParams {
    pub const DEFAULT_E0: f64 = 0.5;
    pub const DEFAULT_F_EC: f64 = 1.22;

    fn default_e0() -> f64 {
        Self::DEFAULT_E0
    }

    fn default_f_ec() -> f64 {
        Self::DEFAULT_F_EC
    }

    pub fn new(eta_bob: f64, e_detector: f64, y0: f64, e0: f64, f_ec: f64) -> Result<Self> {
        if !(eta_bob > 0.0 && eta_bob <= 1.0) {
            return Err(invalid("eta_bob", format!("{eta_bob} not in (0, 1]")));
        }
        if !(0.0..0.5).contains(&e_detector) {
            return Err(invalid("e_detector", format!("{e_detector} not in [0, 0.5)")));
        }
        if !(0.0..1.0).contains(&y0) {
            return Err(invalid("y0", format!("{y0} not in [0, 1)")));
        }
        probability("e0", e0)?;
        if !(f_ec >= 1.0) || !f_ec.is_finite() {
            return Err(invalid("f_ec", format!("{f_ec} must be a finite value >= 1")));
        }
        Ok(Self {
            eta_bob,
            e_detector,
            y0,
            e0,
            f_ec,
        })
    }

    /// Device with the default `e0` and `f_ec`.
    pub fn with_defaults(eta_bob: f64, e_detector: f64, y0: f64) -> Result<Self> {
        Self::new(eta_bob, e_detector, y0, Self::DEFAULT_E0, Self::DEFAULT_F_EC)
    }

    /// The free-space LM05 setup characterised in the experiment:
    /// transmittance 0.072, detector error 0.045, background 3.52e-6.
    pub fn reference_setup() -> Self {
        Self::with_defaults(0.072, 0.045, 3.52e-6).expect("reference parameters are valid")
    }

    pub fn eta_bob(&self) -> f64 {
        self.eta_bob
    }
    pub fn e_detector(&self) -> f64 {
        self.e_detector
    }
    pub fn y0(&self) -> f64 {
        self.y0
    }
    /// Error probability of a background-only detection.
    pub fn e0(&self) -> f64 {
        self.e0
    }
    /// Error-correction inefficiency relative to the Shannon limit.
    pub fn f_ec(&self) -> f64 {
        self.f_ec
    }
}

/// Signal and weak-decoy mean photon numbers. The vacuum decoy is implicit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIntensitySet")]
pub struct IntensitySet {
    mu: f64,
    nu: f64,
}

#[derive(Deserialize)]
struct RawIntensitySet {
    mu: f64,
    nu: f64,
}

impl TryFrom<RawIntensitySet> for IntensitySet {
    type Error = Error;
    fn try_from(r: RawIntensitySet) -> Result<Self> {
        IntensitySet::new(r.mu, r.nu)
    }
}

impl IntensitySet {
    pub fn new(mu: f64, nu: f64) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(invalid("nu", format!("{nu} must be positive")));
        }
        if !(mu > nu) || !mu.is_finite() {
            return Err(invalid("mu", format!("{mu} must exceed nu = {nu}")));
        }
        Ok(Self { mu, nu })
    }

    /// mu = 0.31, nu = 0.13.
    pub fn reference() -> Self {
        Self::new(0.31, 0.13).expect("reference intensities are valid")
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
}

/// A channel attenuation in dB.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ChannelPoint(f64);

impl ChannelPoint {
    pub fn new(loss_db: f64) -> Result<Self> {
        if !(loss_db >= 0.0) || !loss_db.is_finite() {
            return Err(invalid("loss_db", format!("{loss_db} must be a finite value >= 0")));
        }
        Ok(Self(loss_db))
    }

    pub fn loss_db(&self) -> f64 {
        self.0
    }

    pub fn transmittance(&self) -> f64 {
        db_to_transmittance(self.0).expect("validated on construction")
    }
}

impl TryFrom<f64> for ChannelPoint {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ChannelPoint> for f64 {
    fn from(c: ChannelPoint) -> f64 {
        c.0
    }
}

/// Observed gains and error rates at one channel point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasuredStats")]
pub struct MeasuredStats {
    q_mu: f64,
    e_mu: f64,
    q_nu: f64,
    e_nu: f64,
    y0: f64,
}

#[derive(Deserialize)]
struct RawMeasuredStats {
    q_mu: f64,
    e_mu: f64,
    q_nu: f64,
    e_nu: f64,
    y0: f64,
}

impl TryFrom<RawMeasuredStats> for MeasuredStats {
    type Error = Error;
    fn try_from(r: RawMeasuredStats) -> Result<Self> {
        MeasuredStats::new(r.q_mu, r.e_mu, r.q_nu, r.e_nu, r.y0)
    }
}

impl MeasuredStats {
    pub fn new(q_mu: f64, e_mu: f64, q_nu: f64, e_nu: f64, y0: f64) -> Result<Self> {
        probability("q_mu", q_mu)?;
        probability("e_mu", e_mu)?;
        probability("q_nu", q_nu)?;
        probability("e_nu", e_nu)?;
        probability("y0", y0)?;
        if q_mu < y0 {
            return Err(invalid("q_mu", format!("{q_mu} below background yield {y0}")));
        }
        if q_nu < y0 {
            return Err(invalid("q_nu", format!("{q_nu} below background yield {y0}")));
        }
        Ok(Self {
            q_mu,
            e_mu,
            q_nu,
            e_nu,
            y0,
        })
    }

    pub fn q_mu(&self) -> f64 {
        self.q_mu
    }
    pub fn e_mu(&self) -> f64 {
        self.e_mu
    }
    pub fn q_nu(&self) -> f64 {
        self.q_nu
    }
    pub fn e_nu(&self) -> f64 {
        self.e_nu
    }
    pub fn y0(&self) -> f64 {
        self.y0
    }
}

/// Bounds derived from one [`MeasuredStats`] row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsResult {
    /// Single-photon yield, lower bound.
    pub y1_l: f64,
    /// Combined single- plus double-photon yield, lower bound.
    pub y12_l: f64,
    /// Effective gain of one- and two-photon pulses, lower bound.
    pub q12_l: f64,
    /// Effective error rate of one- and two-photon pulses, upper bound.
    pub eps12_u: f64,
    /// Secure key rate per pulse, lower bound. May be negative.
    pub r_l: f64,
    /// Some intermediate was clamped into its physical range.
    pub clamped: bool,
    /// No secure key can be distilled at this point.
    pub insecure: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn device_validation() {
        assert!(DeviceParams::with_defaults(0.0, 0.045, 1e-6).is_err());
        assert!(DeviceParams::with_defaults(1.1, 0.045, 1e-6).is_err());
        assert!(DeviceParams::with_defaults(0.5, 0.5, 1e-6).is_err());
        assert!(DeviceParams::with_defaults(0.5, 0.1, 1.0).is_err());
        assert!(DeviceParams::new(0.5, 0.1, 1e-6, 1.2, 1.22).is_err());
        assert!(DeviceParams::new(0.5, 0.1, 1e-6, 0.5, 0.9).is_err());
        let d = DeviceParams::reference_setup();
        assert_eq!(d.e0(), 0.5);
        assert_eq!(d.f_ec(), 1.22);
    }

    #[test]
    fn intensity_ordering() {
        assert!(IntensitySet::new(0.31, 0.13).is_ok());
        assert!(IntensitySet::new(0.13, 0.13).is_err());
        assert!(IntensitySet::new(0.1, 0.2).is_err());
        assert!(IntensitySet::new(0.3, 0.0).is_err());
    }

    #[test]
    fn measured_stats_validation() {
        assert!(MeasuredStats::new(1e-2, 0.04, 5e-3, 0.04, 4e-6).is_ok());
        match MeasuredStats::new(1e-2, 1.5, 5e-3, 0.04, 4e-6) {
            Err(Error::InvalidField { field, .. }) => assert_eq!(field, "e_mu"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(MeasuredStats::new(1e-6, 0.04, 5e-3, 0.04, 4e-6).is_err());
        assert!(MeasuredStats::new(1e-2, 0.04, 1e-6, 0.04, 4e-6).is_err());
    }

    #[test]
    fn serde_rejects_invalid() {
        let bad = r#"{"mu":0.1,"nu":0.2}"#;
        assert!(serde_json::from_str::<IntensitySet>(bad).is_err());
        let ok = r#"{"eta_bob":0.072,"e_detector":0.045,"y0":3.52e-6}"#;
        let d: DeviceParams = serde_json::from_str(ok).unwrap();
        assert_eq!(d, DeviceParams::reference_setup());
    }

    #[test]
    fn channel_point() {
        assert!(ChannelPoint::new(-1.0).is_err());
        assert!((ChannelPoint::new(10.0).unwrap().transmittance() - 0.1).abs() < 1e-15);
    }
}
