//! Scalar functions used by the key-rate formula.

use crate::error::{Error, Result};

fn check_probability(func: &'static str, e: f64) -> Result<()> {
    if (0.0..=1.0).contains(&e) {
        Ok(())
    } else {
        Err(Error::Domain {
            func,
            value: e,
            domain: "[0, 1]",
        })
    }
}

/// Binary Shannon entropy in bits, with `H(0) = H(1) = 0`.
pub fn binary_entropy(e: f64) -> Result<f64> {
    check_probability("binary_entropy", e)?;
    Ok(binary_entropy_unchecked(e))
}

pub(crate) fn binary_entropy_unchecked(e: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    term(e) + term(1.0 - e)
}

/// Information leaked per key bit as a function of the effective error
/// rate of the single- and double-photon pulses.
///
/// `log2(1 + 4e - 4e^2)` below one half, saturating at exactly 1 from one
/// half upward.
pub fn tau(e1: f64) -> Result<f64> {
    check_probability("tau", e1)?;
    Ok(tau_unchecked(e1))
}

pub(crate) fn tau_unchecked(e1: f64) -> f64 {
    if e1 < 0.5 {
        (1.0 + 4.0 * e1 - 4.0 * e1 * e1).log2()
    } else {
        1.0
    }
}

/// Converts an attenuation in dB to a power transmittance.
pub fn db_to_transmittance(loss_db: f64) -> Result<f64> {
    if !(loss_db >= 0.0) || !loss_db.is_finite() {
        return Err(Error::Domain {
            func: "db_to_transmittance",
            value: loss_db,
            domain: "[0, inf)",
        });
    }
    Ok(10f64.powf(-loss_db / 10.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn entropy_anchors() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // high-precision reference: 0.264191774506276...
        assert_abs_diff_eq!(binary_entropy(0.04487).unwrap(), 0.26419, epsilon = 1e-5);
    }

    #[test]
    fn tau_anchors() {
        assert_eq!(tau(0.0).unwrap(), 0.0);
        assert_eq!(tau(0.5).unwrap(), 1.0);
        assert_eq!(tau(0.9).unwrap(), 1.0);
        // 30-digit reference: 0.274454608450401716...
        assert_abs_diff_eq!(tau(0.05546).unwrap(), 0.274455, epsilon = 1e-5);
    }

    #[test]
    fn transmittance_anchors() {
        assert_eq!(db_to_transmittance(0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(db_to_transmittance(10.0).unwrap(), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(db_to_transmittance(3.26).unwrap(), 0.47206, epsilon = 1e-5);
    }

    #[test]
    fn domain_errors() {
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
        assert!(tau(-1e-9).is_err());
        assert!(tau(1.5).is_err());
        assert!(db_to_transmittance(-0.5).is_err());
        assert!(db_to_transmittance(f64::NAN).is_err());
    }

    #[test]
    fn tau_left_limit_at_half() {
        let left = tau(0.5 - 1e-9).unwrap();
        assert!((left - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn entropy_symmetric(e in 0.0f64..=1.0) {
            let a = binary_entropy(e).unwrap();
            let b = binary_entropy(1.0 - e).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn entropy_monotone_below_half(a in 0.0f64..=0.5, b in 0.0f64..=0.5) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(binary_entropy(lo).unwrap() <= binary_entropy(hi).unwrap() + 1e-15);
        }

        #[test]
        fn tau_monotone_below_half(a in 0.0f64..=0.5, b in 0.0f64..=0.5) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(tau(lo).unwrap() <= tau(hi).unwrap() + 1e-15);
        }

        #[test]
        fn losses_compose(a in 0.0f64..60.0, b in 0.0f64..60.0) {
            let lhs = db_to_transmittance(a + b).unwrap();
            let rhs = db_to_transmittance(a).unwrap() * db_to_transmittance(b).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
