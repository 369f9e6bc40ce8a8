//! C ABI over `lm05-decoy`.
//!
//! Handles are opaque heap objects created by `*_new`/`lm05_simulate` and
//! released by the matching `*_free`. Every fallible call returns an
//! [`Lm05Status`]; on failure [`lm05_last_error_message`] describes the
//! error for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lm05_decoy::bounds::analyze;
use lm05_decoy::channel::{infinite_decoy_rate, predict_stats};
use lm05_decoy::montecarlo::{
    estimate_stats, simulate_run_with_workers, true_tagged_stats, MCConfig, TallySet,
};
use lm05_decoy::planner::{max_secure_loss, predicted_rate, RateModel};
use lm05_decoy::scalar::{binary_entropy, tau};
use lm05_decoy::{ChannelPoint, DeviceParams, Error, IntensitySet, MeasuredStats};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lm05Status {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Computation = 3,
    Insecure = 4,
    InsufficientData = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lm05RateModel {
    WeakVacuum = 0,
    InfiniteDecoy = 1,
    InfiniteDecoyOptimalMu = 2,
}

impl From<Lm05RateModel> for RateModel {
    fn from(m: Lm05RateModel) -> Self {
        match m {
            Lm05RateModel::WeakVacuum => RateModel::WeakVacuum,
            Lm05RateModel::InfiniteDecoy => RateModel::InfiniteDecoy,
            Lm05RateModel::InfiniteDecoyOptimalMu => RateModel::InfiniteDecoyOptimalMu,
        }
    }
}

/// One row of observed gains and error rates.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Lm05Stats {
    pub q_mu: f64,
    pub e_mu: f64,
    pub q_nu: f64,
    pub e_nu: f64,
    pub y0: f64,
}

impl From<MeasuredStats> for Lm05Stats {
    fn from(s: MeasuredStats) -> Self {
        Self {
            q_mu: s.q_mu(),
            e_mu: s.e_mu(),
            q_nu: s.q_nu(),
            e_nu: s.e_nu(),
            y0: s.y0(),
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Lm05Bounds {
    pub y1_l: f64,
    pub y12_l: f64,
    pub q12_l: f64,
    pub eps12_u: f64,
    pub r_l: f64,
    pub clamped: bool,
    pub insecure: bool,
}

/// Device parameters plus signal/decoy intensities.
pub struct Lm05Analyzer {
    params: DeviceParams,
    intensities: IntensitySet,
}

/// Tallies of one Monte Carlo run.
pub struct Lm05Simulation {
    tallies: TallySet,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> Lm05Status {
    match e {
        Error::Domain { .. }
        | Error::InvalidField { .. }
        | Error::DegenerateIntensities { .. }
        | Error::Config(_) => Lm05Status::InvalidArgument,
        Error::Insecure(_) => Lm05Status::Insecure,
        Error::InsufficientData(_) => Lm05Status::InsufficientData,
        Error::VacuousBound { .. } => Lm05Status::Computation,
    }
}

/// Runs `f`, translating errors and panics into a status code.
fn guard<F>(f: F) -> Lm05Status
where
    F: FnOnce() -> Result<(), (Lm05Status, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => Lm05Status::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside lm05-decoy".into());
            Lm05Status::Panic
        }
    }
}

fn lift<T>(r: lm05_decoy::Result<T>) -> Result<T, (Lm05Status, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (Lm05Status, String) {
    (Lm05Status::NullPointer, format!("{name} is NULL"))
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lm05_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lm05_binary_entropy(e: f64, out: *mut f64) -> Lm05Status {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = lift(binary_entropy(e))?;
        Ok(())
    })
}

/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lm05_tau(e1: f64, out: *mut f64) -> Lm05Status {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = lift(tau(e1))?;
        Ok(())
    })
}

/// Creates an analyzer. `*out` receives the handle on success.
///
/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lm05_analyzer_new(
    eta_bob: f64,
    e_detector: f64,
    y0: f64,
    e0: f64,
    f_ec: f64,
    mu: f64,
    nu: f64,
    out: *mut *mut Lm05Analyzer,
) -> Lm05Status {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let params = lift(DeviceParams::new(eta_bob, e_detector, y0, e0, f_ec))?;
        let intensities = lift(IntensitySet::new(mu, nu))?;
        *out = Box::into_raw(Box::new(Lm05Analyzer {
            params,
            intensities,
        }));
        Ok(())
    })
}

/// # Safety
/// `analyzer` must be NULL or a handle from [`lm05_analyzer_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lm05_analyzer_free(analyzer: *mut Lm05Analyzer) {
    if !analyzer.is_null() {
        drop(Box::from_raw(analyzer));
    }
}

/// Decoy bounds for one measured row.
///
/// # Safety
/// Pointers must be NULL or valid; `analyzer` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lm05_analyze(
    analyzer: *const Lm05Analyzer,
    stats: *const Lm05Stats,
    out: *mut Lm05Bounds,
) -> Lm05Status {
    guard(|| {
        let a = analyzer.as_ref().ok_or_else(|| null("analyzer"))?;
        let s = stats.as_ref().ok_or_else(|| null("stats"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let stats = lift(MeasuredStats::new(s.q_mu, s.e_mu, s.q_nu, s.e_nu, s.y0))?;
        let b = lift(analyze(&stats, &a.intensities, &a.params))?;
        *out = Lm05Bounds {
            y1_l: b.y1_l,
            y12_l: b.y12_l,
            q12_l: b.q12_l,
            eps12_u: b.eps12_u,
            r_l: b.r_l,
            clamped: b.clamped,
            insecure: b.insecure,
        };
        Ok(())
    })
}

/// Forward-model statistics at `loss_db`, with the weak+vacuum rate bound
/// and the infinite-decoy rate at the analyzer's signal intensity.
/// `r_l` and `r_inf` may be NULL.
///
/// # Safety
/// Pointers must be NULL or valid; `analyzer` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lm05_predict(
    analyzer: *const Lm05Analyzer,
    loss_db: f64,
    stats: *mut Lm05Stats,
    r_l: *mut f64,
    r_inf: *mut f64,
) -> Lm05Status {
    guard(|| {
        let a = analyzer.as_ref().ok_or_else(|| null("analyzer"))?;
        let stats = stats.as_mut().ok_or_else(|| null("stats"))?;
        let channel = lift(ChannelPoint::new(loss_db))?;
        *stats = lift(predict_stats(&a.params, channel, &a.intensities).to_measured())?.into();
        if let Some(r) = r_l.as_mut() {
            *r = predicted_rate(&a.params, channel, &a.intensities);
        }
        if let Some(r) = r_inf.as_mut() {
            *r = infinite_decoy_rate(&a.params, channel, a.intensities.mu());
        }
        Ok(())
    })
}

/// Largest loss in dB (0.01 dB grid) with a positive key rate.
///
/// # Safety
/// Pointers must be NULL or valid; `analyzer` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lm05_max_secure_loss(
    analyzer: *const Lm05Analyzer,
    model: Lm05RateModel,
    out: *mut f64,
) -> Lm05Status {
    guard(|| {
        let a = analyzer.as_ref().ok_or_else(|| null("analyzer"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = lift(max_secure_loss(&a.params, &a.intensities, model.into()))?;
        Ok(())
    })
}

/// Runs the Monte Carlo with the default 2:1:1 class mix and control-mode
/// probability one half. Results depend only on the arguments, not on
/// `workers`.
///
/// # Safety
/// Pointers must be NULL or valid; `analyzer` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lm05_simulate(
    analyzer: *const Lm05Analyzer,
    loss_db: f64,
    pulses: u64,
    seed: u64,
    workers: u32,
    out: *mut *mut Lm05Simulation,
) -> Lm05Status {
    guard(|| {
        let a = analyzer.as_ref().ok_or_else(|| null("analyzer"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let cfg = MCConfig::new(a.params, lift(ChannelPoint::new(loss_db))?, a.intensities)
            .with_pulses(pulses)
            .with_seed(seed);
        let tallies = lift(simulate_run_with_workers(&cfg, workers as usize))?;
        *out = Box::into_raw(Box::new(Lm05Simulation { tallies }));
        Ok(())
    })
}

/// # Safety
/// `sim` must be NULL or a handle from [`lm05_simulate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lm05_simulation_free(sim: *mut Lm05Simulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Ratio estimates of the run's gains and error rates.
///
/// # Safety
/// Pointers must be NULL or valid; `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lm05_simulation_estimate(
    sim: *const Lm05Simulation,
    out: *mut Lm05Stats,
) -> Lm05Status {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("sim"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = lift(estimate_stats(&sim.tallies))?.into();
        Ok(())
    })
}

/// Ground-truth one- and two-photon gain and error rate of the signal class.
///
/// # Safety
/// Pointers must be NULL or valid; `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lm05_simulation_true_q12(
    sim: *const Lm05Simulation,
    q12: *mut f64,
    e12: *mut f64,
) -> Lm05Status {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("sim"))?;
        let q = q12.as_mut().ok_or_else(|| null("q12"))?;
        let e = e12.as_mut().ok_or_else(|| null("e12"))?;
        let t = lift(true_tagged_stats(&sim.tallies))?;
        *q = t.q12;
        *e = t.e12;
        Ok(())
    })
}

/// Tallies as a JSON document. Release with [`lm05_string_free`].
/// Returns NULL for a NULL handle.
///
/// # Safety
/// `sim` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lm05_simulation_tallies_json(sim: *const Lm05Simulation) -> *mut c_char {
    match sim.as_ref() {
        Some(s) => {
            let json = serde_json::to_string(&s.tallies).expect("tallies serialize");
            CString::new(json).expect("JSON has no NULs").into_raw()
        }
        None => {
            set_error("sim is NULL".into());
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn lm05_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
