//! Pulse-level Monte Carlo of LM05 with weak+vacuum decoys.
//!
//! Every pulse is tagged with the photon number the source actually
//! emitted, which lets the simulator report the true one- and two-photon
//! gain and error rate next to the decoy bounds computed from the ordinary
//! click statistics.
//!
//! The pulse stream is cut into blocks of [`BLOCK_PULSES`]. Block `b` draws
//! from a ChaCha8 generator seeded with the run seed and set to stream `b`,
//! and per-block tallies are merged by integer addition, so results do not
//! depend on how many workers execute the blocks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::overall_transmission;
use crate::error::{Error, Result};
use crate::types::{BoundsResult, ChannelPoint, DeviceParams, IntensitySet, MeasuredStats};

pub const BLOCK_PULSES: u64 = 1 << 16;

/// Photon-number tag buckets; the last bucket collects `n >= PHOTON_TAGS - 1`.
pub const PHOTON_TAGS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateClass {
    Signal,
    Weak,
    Vacuum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCConfig {
    pub n_pulses: u64,
    pub seed: u64,
    /// Probabilities of (signal, weak, vacuum).
    pub class_probs: [f64; 3],
    /// Probability that Alice runs the control mode on a pulse.
    pub control_mode_prob: f64,
    pub params: DeviceParams,
    pub channel: ChannelPoint,
    pub intensities: IntensitySet,
    /// Used only to convert per-pulse rates to per-second figures.
    pub pulse_rate_hz: f64,
}

impl MCConfig {
    /// Signal, weak and vacuum mixed 2:1:1.
    pub const DEFAULT_CLASS_PROBS: [f64; 3] = [0.5, 0.25, 0.25];
    pub const DEFAULT_PULSE_RATE_HZ: f64 = 7.25e5;
    /// 140 Mbit per channel point.
    pub const DEFAULT_PULSES: u64 = 140_000_000;

    pub fn new(params: DeviceParams, channel: ChannelPoint, intensities: IntensitySet) -> Self {
        Self {
            n_pulses: Self::DEFAULT_PULSES,
            seed: 0,
            class_probs: Self::DEFAULT_CLASS_PROBS,
            control_mode_prob: 0.5,
            params,
            channel,
            intensities,
            pulse_rate_hz: Self::DEFAULT_PULSE_RATE_HZ,
        }
    }

    pub fn with_pulses(mut self, n: u64) -> Self {
        self.n_pulses = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pulses == 0 {
            return Err(Error::Config("n_pulses must be at least 1".into()));
        }
        if self.class_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config(format!(
                "class probabilities {:?} must lie in [0, 1]",
                self.class_probs
            )));
        }
        let sum: f64 = self.class_probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "class probabilities sum to {sum}, expected 1"
            )));
        }
        if !(0.0..=1.0).contains(&self.control_mode_prob) {
            return Err(Error::Config(format!(
                "control_mode_prob {} not in [0, 1]",
                self.control_mode_prob
            )));
        }
        if !(self.pulse_rate_hz > 0.0) || !self.pulse_rate_hz.is_finite() {
            return Err(Error::Config("pulse_rate_hz must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassTally {
    /// Encoding-mode pulses; these carry the key statistics.
    pub pulses_sent: u64,
    pub clicks: u64,
    pub bit_errors: u64,
    pub control_pulses: u64,
    pub control_clicks: u64,
    /// Encoding-mode pulses by emitted photon number.
    pub sent_n: [u64; PHOTON_TAGS],
    pub clicks_n: [u64; PHOTON_TAGS],
    pub errors_n: [u64; PHOTON_TAGS],
}

impl ClassTally {
    fn merge(&mut self, other: &ClassTally) {
        self.pulses_sent += other.pulses_sent;
        self.clicks += other.clicks;
        self.bit_errors += other.bit_errors;
        self.control_pulses += other.control_pulses;
        self.control_clicks += other.control_clicks;
        for n in 0..PHOTON_TAGS {
            self.sent_n[n] += other.sent_n[n];
            self.clicks_n[n] += other.clicks_n[n];
            self.errors_n[n] += other.errors_n[n];
        }
    }

    pub fn gain(&self) -> Option<f64> {
        (self.pulses_sent > 0).then(|| self.clicks as f64 / self.pulses_sent as f64)
    }

    pub fn qber(&self) -> Option<f64> {
        (self.clicks > 0).then(|| self.bit_errors as f64 / self.clicks as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallySet {
    pub signal: ClassTally,
    pub weak: ClassTally,
    pub vacuum: ClassTally,
}

impl TallySet {
    pub fn class(&self, c: StateClass) -> &ClassTally {
        match c {
            StateClass::Signal => &self.signal,
            StateClass::Weak => &self.weak,
            StateClass::Vacuum => &self.vacuum,
        }
    }

    fn class_mut(&mut self, c: StateClass) -> &mut ClassTally {
        match c {
            StateClass::Signal => &mut self.signal,
            StateClass::Weak => &mut self.weak,
            StateClass::Vacuum => &mut self.vacuum,
        }
    }

    /// Associative, commutative merge.
    pub fn merge(mut self, other: &TallySet) -> TallySet {
        self.signal.merge(&other.signal);
        self.weak.merge(&other.weak);
        self.vacuum.merge(&other.vacuum);
        self
    }

    pub fn total_pulses(&self) -> u64 {
        [&self.signal, &self.weak, &self.vacuum]
            .iter()
            .map(|c| c.pulses_sent + c.control_pulses)
            .sum()
    }
}

/// Inverse-CDF Poisson sampler for small means.
#[derive(Debug, Clone)]
struct PoissonTable {
    mean: f64,
    cdf: Vec<f64>,
}

impl PoissonTable {
    fn new(mean: f64) -> Self {
        let mut cdf = Vec::new();
        let mut p = (-mean).exp();
        let mut acc = 0.0;
        let mut n = 0u32;
        loop {
            acc += p;
            cdf.push(acc);
            n += 1;
            p *= mean / n as f64;
            if (1.0 - acc < 1e-17 && n as f64 > mean) || n >= 4096 {
                break;
            }
        }
        Self { mean, cdf }
    }

    fn sample(&self, u: f64) -> u32 {
        if self.mean == 0.0 {
            return 0;
        }
        match self.cdf.iter().position(|&c| u < c) {
            Some(n) => n as u32,
            None => self.cdf.len() as u32,
        }
    }
}

struct PulseModel {
    cumulative: [f64; 2],
    control_prob: f64,
    tables: [PoissonTable; 3],
    /// `1 - (1 - eta)^n` for `n < PHOTON_TAGS`.
    arrive: [f64; PHOTON_TAGS],
    eta: f64,
    y0: f64,
    e_detector: f64,
    e0: f64,
}

impl PulseModel {
    fn new(cfg: &MCConfig) -> Self {
        let eta = overall_transmission(&cfg.params, cfg.channel);
        let mut arrive = [0.0; PHOTON_TAGS];
        for (n, a) in arrive.iter_mut().enumerate() {
            *a = 1.0 - (1.0 - eta).powi(n as i32);
        }
        let p = cfg.class_probs;
        Self {
            cumulative: [p[0], p[0] + p[1]],
            control_prob: cfg.control_mode_prob,
            tables: [
                PoissonTable::new(cfg.intensities.mu()),
                PoissonTable::new(cfg.intensities.nu()),
                PoissonTable::new(0.0),
            ],
            arrive,
            eta,
            y0: cfg.params.y0(),
            e_detector: cfg.params.e_detector(),
            e0: cfg.params.e0(),
        }
    }

    fn arrive_prob(&self, n: u32) -> f64 {
        match self.arrive.get(n as usize) {
            Some(&a) => a,
            None => 1.0 - (1.0 - self.eta).powi(n as i32),
        }
    }

    fn run_block(&self, seed: u64, block: u64, pulses: u64) -> TallySet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block);
        let mut t = TallySet::default();
        for _ in 0..pulses {
            let u: f64 = rng.gen();
            let class = if u < self.cumulative[0] {
                StateClass::Signal
            } else if u < self.cumulative[1] {
                StateClass::Weak
            } else {
                StateClass::Vacuum
            };
            let control = rng.gen::<f64>() < self.control_prob;
            // Vacuum pulses: no laser fires, nothing to sample.
            let n = match class {
                StateClass::Vacuum => 0,
                StateClass::Signal => self.tables[0].sample(rng.gen()),
                StateClass::Weak => self.tables[1].sample(rng.gen()),
            };
            let photon_click = n > 0 && rng.gen::<f64>() < self.arrive_prob(n);
            let background = rng.gen::<f64>() < self.y0;
            let click = photon_click || background;

            let tally = t.class_mut(class);
            if control {
                tally.control_pulses += 1;
                tally.control_clicks += click as u64;
                continue;
            }
            let tag = (n as usize).min(PHOTON_TAGS - 1);
            tally.pulses_sent += 1;
            tally.sent_n[tag] += 1;
            if !click {
                continue;
            }
            // Alice flips (bit 1) or not (bit 0); Bob reads the bit back in
            // his preparation basis, wrong with the detector or background
            // error probability.
            let alice_bit: bool = rng.gen();
            let p_err = if photon_click { self.e_detector } else { self.e0 };
            let bob_bit = alice_bit ^ (rng.gen::<f64>() < p_err);
            let error = (alice_bit != bob_bit) as u64;
            tally.clicks += 1;
            tally.clicks_n[tag] += 1;
            tally.bit_errors += error;
            tally.errors_n[tag] += error;
        }
        t
    }
}

/// Runs the simulation on the current rayon pool.
pub fn simulate_run(config: &MCConfig) -> Result<TallySet> {
    config.validate()?;
    let model = PulseModel::new(config);
    let blocks = config.n_pulses.div_ceil(BLOCK_PULSES);
    let tallies = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let len = BLOCK_PULSES.min(config.n_pulses - b * BLOCK_PULSES);
            model.run_block(config.seed, b, len)
        })
        .reduce(TallySet::default, |a, b| a.merge(&b));
    Ok(tallies)
}

/// Runs the simulation on a dedicated pool of `workers` threads.
pub fn simulate_run_with_workers(config: &MCConfig, workers: usize) -> Result<TallySet> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| simulate_run(config))
}

/// Ratio estimators: signal class gives `Q_mu`, `E_mu`; weak gives `Q_nu`,
/// `E_nu`; vacuum gives `Y0`.
///
/// A signal or weak class without clicks has no defined QBER and is
/// reported as [`Error::InsufficientData`].
pub fn estimate_stats(tallies: &TallySet) -> Result<MeasuredStats> {
    let gain = |c: StateClass| {
        tallies.class(c).gain().ok_or_else(|| {
            Error::InsufficientData(format!("no encoding-mode {c:?} pulses were sent"))
        })
    };
    let qber = |c: StateClass| {
        tallies.class(c).qber().ok_or_else(|| {
            Error::InsufficientData(format!("no {c:?} clicks; QBER undefined"))
        })
    };
    let q_mu = gain(StateClass::Signal)?;
    let q_nu = gain(StateClass::Weak)?;
    let y0 = gain(StateClass::Vacuum)?;
    let e_mu = qber(StateClass::Signal)?;
    let e_nu = qber(StateClass::Weak)?;
    MeasuredStats::new(q_mu, e_mu, q_nu, e_nu, y0)
}

/// Ground-truth one- and two-photon statistics of the signal class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueTagged {
    pub q12: f64,
    pub e12: f64,
    /// Binomial standard error of `q12`.
    pub q12_sigma: f64,
    /// Binomial standard error of `e12`.
    pub e12_sigma: f64,
    pub clicks12: u64,
    pub signal_sent: u64,
}

pub fn true_tagged_stats(tallies: &TallySet) -> Result<TrueTagged> {
    let s = &tallies.signal;
    if s.pulses_sent == 0 {
        return Err(Error::InsufficientData("no signal pulses sent".into()));
    }
    let clicks12 = s.clicks_n[1] + s.clicks_n[2];
    if clicks12 == 0 {
        return Err(Error::InsufficientData(
            "no clicks from one- or two-photon signal pulses".into(),
        ));
    }
    let errors12 = s.errors_n[1] + s.errors_n[2];
    let q12 = clicks12 as f64 / s.pulses_sent as f64;
    let e12 = errors12 as f64 / clicks12 as f64;
    Ok(TrueTagged {
        q12,
        e12,
        q12_sigma: (q12 * (1.0 - q12) / s.pulses_sent as f64).sqrt(),
        e12_sigma: (e12 * (1.0 - e12) / clicks12 as f64).sqrt(),
        clicks12,
        signal_sent: s.pulses_sent,
    })
}

/// Whether the decoy bounds enclose the ground truth, with three standard
/// errors of slack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandwichVerdict {
    pub q12_lower_holds: bool,
    pub eps12_upper_holds: bool,
}

impl SandwichVerdict {
    pub fn evaluate(bounds: &BoundsResult, truth: &TrueTagged) -> Self {
        Self {
            q12_lower_holds: bounds.q12_l <= truth.q12 + 3.0 * truth.q12_sigma,
            eps12_upper_holds: bounds.eps12_u >= truth.e12 - 3.0 * truth.e12_sigma,
        }
    }

    pub fn passed(&self) -> bool {
        self.q12_lower_holds && self.eps12_upper_holds
    }
}
