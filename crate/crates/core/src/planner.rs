//! Intensity optimisation and maximum-secure-loss search over the forward
//! model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::analyze;
use crate::channel::{infinite_decoy_rate, predict_stats};
use crate::error::{Error, Result};
use crate::types::{ChannelPoint, DeviceParams, IntensitySet};

const COARSE_STEP: f64 = 0.01;
const FINE_STEP: f64 = 0.001;
const MU_MAX: f64 = 1.0;
/// Resolution of the maximum-loss search, in dB.
pub const LOSS_RESOLUTION_DB: f64 = 0.01;
const BRACKET_STEP_DB: f64 = 0.5;
const SCAN_LIMIT_DB: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub best_mu: f64,
    pub best_nu: f64,
    pub best_rate: f64,
    pub evaluations: u64,
}

/// Which key-rate model a loss search runs against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateModel {
    /// Weak+vacuum decoy bound on predicted statistics at fixed intensities.
    WeakVacuum,
    /// Infinite-decoy rate at the fixed signal intensity.
    InfiniteDecoy,
    /// Infinite-decoy rate with the signal intensity re-optimised at every loss.
    InfiniteDecoyOptimalMu,
}

/// Weak+vacuum key-rate bound computed from forward-model statistics.
pub fn predicted_rate(params: &DeviceParams, channel: ChannelPoint, i: &IntensitySet) -> f64 {
    let stats = predict_stats(params, channel, i)
        .to_measured()
        .expect("forward model produces valid statistics");
    analyze(&stats, i, params)
        .map(|b| b.r_l)
        .unwrap_or(f64::NEG_INFINITY)
}

fn grid(lo: f64, hi: f64, step: f64) -> impl Iterator<Item = f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as i64;
    (0..=n.max(-1)).map(move |k| round_to(lo + k as f64 * step, step))
}

fn round_to(x: f64, step: f64) -> f64 {
    (x / step).round() * step
}

#[derive(Clone, Copy)]
struct Candidate {
    mu: f64,
    nu: f64,
    rate: f64,
}

/// Argmax with ties going to smaller mu, then smaller nu.
fn better(a: Candidate, b: Candidate) -> Candidate {
    use std::cmp::Ordering::*;
    match a.rate.partial_cmp(&b.rate) {
        Some(Greater) => a,
        Some(Less) => b,
        _ => {
            if (a.mu, a.nu) <= (b.mu, b.nu) {
                a
            } else {
                b
            }
        }
    }
}

fn search(params: &DeviceParams, channel: ChannelPoint, points: Vec<(f64, f64)>) -> Option<Candidate> {
    points
        .into_par_iter()
        .filter_map(|(mu, nu)| {
            let i = IntensitySet::new(mu, nu).ok()?;
            Some(Candidate {
                mu,
                nu,
                rate: predicted_rate(params, channel, &i),
            })
        })
        .reduce_with(better)
}

fn coarse_points() -> Vec<(f64, f64)> {
    grid(COARSE_STEP, MU_MAX, COARSE_STEP)
        .flat_map(|mu| grid(COARSE_STEP, mu - COARSE_STEP, COARSE_STEP).map(move |nu| (mu, nu)))
        .collect()
}

/// Exhaustive sweep over the coarse grid only: mu in [0.01, 1.0], nu in
/// [0.01, mu - 0.01], step 0.01.
pub fn coarse_grid_optimum(params: &DeviceParams, channel: ChannelPoint) -> PlanResult {
    let pts = coarse_points();
    let n = pts.len() as u64;
    let c = search(params, channel, pts).expect("coarse grid is non-empty");
    PlanResult {
        best_mu: c.mu,
        best_nu: c.nu,
        best_rate: c.rate,
        evaluations: n,
    }
}

/// Maximises the weak+vacuum rate over `(mu, nu)`: a 0.01 grid, then one
/// 0.001 refinement pass in the neighbourhood of the coarse optimum.
///
/// Returns [`Error::Insecure`] when no grid point has a positive rate.
pub fn optimize_intensities(params: &DeviceParams, channel: ChannelPoint) -> Result<PlanResult> {
    let coarse = coarse_grid_optimum(params, channel);
    if !(coarse.best_rate > 0.0) {
        return Err(Error::Insecure(format!(
            "no intensity pair gives a positive key rate at {} dB",
            channel.loss_db()
        )));
    }
    let fine: Vec<(f64, f64)> = grid(
        (coarse.best_mu - COARSE_STEP).max(FINE_STEP),
        (coarse.best_mu + COARSE_STEP).min(MU_MAX),
        FINE_STEP,
    )
    .flat_map(|mu| {
        grid(
            (coarse.best_nu - COARSE_STEP).max(FINE_STEP),
            coarse.best_nu + COARSE_STEP,
            FINE_STEP,
        )
        .filter(move |&nu| nu <= mu - FINE_STEP + 1e-12)
        .map(move |nu| (mu, nu))
    })
    .collect();
    let n_fine = fine.len() as u64;
    let start = Candidate {
        mu: coarse.best_mu,
        nu: coarse.best_nu,
        rate: coarse.best_rate,
    };
    let best = search(params, channel, fine).map_or(start, |c| better(start, c));
    Ok(PlanResult {
        best_mu: best.mu,
        best_nu: best.nu,
        best_rate: best.rate,
        evaluations: coarse.evaluations + n_fine,
    })
}

/// Best infinite-decoy rate over mu in [0.001, 1.0]: 0.01 grid, then 0.001
/// refinement.
pub fn optimal_infinite_decoy(params: &DeviceParams, channel: ChannelPoint) -> (f64, f64) {
    let eval = |mu: f64| (mu, infinite_decoy_rate(params, channel, mu));
    let pick = |a: (f64, f64), b: (f64, f64)| if b.1 > a.1 { b } else { a };
    let coarse = grid(COARSE_STEP, MU_MAX, COARSE_STEP)
        .map(eval)
        .fold((0.0, f64::NEG_INFINITY), pick);
    grid(
        (coarse.0 - COARSE_STEP).max(FINE_STEP),
        (coarse.0 + COARSE_STEP).min(MU_MAX),
        FINE_STEP,
    )
    .map(eval)
    .fold(coarse, pick)
}

pub fn rate_at(
    params: &DeviceParams,
    intensities: &IntensitySet,
    model: RateModel,
    loss_db: f64,
) -> f64 {
    let channel = ChannelPoint::new(loss_db).expect("non-negative loss");
    match model {
        RateModel::WeakVacuum => predicted_rate(params, channel, intensities),
        RateModel::InfiniteDecoy => infinite_decoy_rate(params, channel, intensities.mu()),
        RateModel::InfiniteDecoyOptimalMu => optimal_infinite_decoy(params, channel).1,
    }
}

/// Largest loss, on a 0.01 dB grid, at which the selected rate stays
/// positive.
///
/// A 0.5 dB scan brackets the sign change; bisection over whole hundredths
/// of a dB then finds `L` with `rate(L) > 0 >= rate(L + 0.01)`.
pub fn max_secure_loss(
    params: &DeviceParams,
    intensities: &IntensitySet,
    model: RateModel,
) -> Result<f64> {
    let rate = |l: f64| rate_at(params, intensities, model, l);
    if !(rate(0.0) > 0.0) {
        return Err(Error::Insecure("key rate is not positive at zero loss".into()));
    }
    let per_step = (BRACKET_STEP_DB / LOSS_RESOLUTION_DB).round() as i64;
    let limit = (SCAN_LIMIT_DB / LOSS_RESOLUTION_DB).round() as i64;
    let to_db = |k: i64| k as f64 * LOSS_RESOLUTION_DB;

    let mut lo = 0i64;
    let mut hi = per_step;
    while rate(to_db(hi)) > 0.0 {
        lo = hi;
        hi += per_step;
        if hi > limit {
            return Err(Error::Config(format!(
                "rate still positive at {SCAN_LIMIT_DB} dB; no loss bound found"
            )));
        }
    }
    // rate(lo) > 0 >= rate(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if rate(to_db(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(to_db(lo))
}
