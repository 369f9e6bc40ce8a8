//! The `lm05` command-line tool.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 computation error,
//! 3 no secure key anywhere in the searched range.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::bounds::analyze;
use crate::channel::{infinite_decoy_rate, predict_stats};
use crate::error::Error;
use crate::manifest::RunManifest;
use crate::montecarlo::{
    estimate_stats, simulate_run_with_workers, true_tagged_stats, MCConfig, SandwichVerdict,
    TallySet, TrueTagged,
};
use crate::planner::{
    max_secure_loss, optimal_infinite_decoy, optimize_intensities, predicted_rate, RateModel,
};
use crate::svg::{log_line_chart, Series};
use crate::table::{fmt_f64, parse_measured_table, write_bounds_table, TableError};
use crate::types::{BoundsResult, ChannelPoint, DeviceParams, IntensitySet, MeasuredStats};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_COMPUTE: i32 = 2;
pub const EXIT_INSECURE: i32 = 3;

pub const PREDICT_HEADER: [&str; 10] = [
    "loss_db", "q_mu", "e_mu", "q_nu", "e_nu", "r_l", "r_inf", "r_inf_opt", "mu_opt", "r_l_per_s",
];

#[derive(Debug, Parser)]
#[command(name = "lm05", version, about = "LM05 weak+vacuum decoy-state analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute decoy-state bounds and key rate for every row of a measured table.
    Bounds(BoundsArgs),
    /// Sweep channel loss with the forward model and emit predicted key rates.
    Predict(PredictArgs),
    /// Run the pulse-level Monte Carlo and check the bounds against ground truth.
    Simulate(SimulateArgs),
    /// Optimise intensities at one loss, or find the maximum secure loss.
    Plan(PlanArgs),
}

#[derive(Debug, Args, Serialize)]
struct DeviceArgs {
    /// Internal transmittance including detector efficiency.
    #[arg(long, default_value_t = 0.072)]
    eta_bob: f64,
    /// Erroneous detection probability.
    #[arg(long = "e-det", default_value_t = 0.045)]
    e_det: f64,
    /// Background yield per pulse.
    #[arg(long, default_value_t = 3.52e-6)]
    y0: f64,
    /// Error probability of background-only detections.
    #[arg(long, default_value_t = DeviceParams::DEFAULT_E0)]
    e0: f64,
    /// Error-correction inefficiency.
    #[arg(long = "f-ec", default_value_t = DeviceParams::DEFAULT_F_EC)]
    f_ec: f64,
}

impl DeviceArgs {
    fn params(&self) -> Result<DeviceParams, Error> {
        DeviceParams::new(self.eta_bob, self.e_det, self.y0, self.e0, self.f_ec)
    }
}

#[derive(Debug, Args, Serialize)]
struct BoundsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    mu: f64,
    #[arg(long)]
    nu: f64,
    #[arg(long = "f-ec", default_value_t = DeviceParams::DEFAULT_F_EC)]
    f_ec: f64,
    #[arg(long, default_value_t = DeviceParams::DEFAULT_E0)]
    e0: f64,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct PredictArgs {
    #[command(flatten)]
    device: DeviceArgs,
    #[arg(long, default_value_t = 0.31)]
    mu: f64,
    #[arg(long, default_value_t = 0.13)]
    nu: f64,
    #[arg(long, default_value_t = 0.0)]
    loss_min: f64,
    #[arg(long, default_value_t = 14.0)]
    loss_max: f64,
    #[arg(long, default_value_t = 0.5)]
    loss_step: f64,
    #[arg(long, default_value_t = MCConfig::DEFAULT_PULSE_RATE_HZ)]
    pulse_rate: f64,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional rate-versus-loss chart.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    device: DeviceArgs,
    #[arg(long, default_value_t = MCConfig::DEFAULT_PULSES)]
    pulses: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    loss: f64,
    #[arg(long, default_value_t = 0.31)]
    mu: f64,
    #[arg(long, default_value_t = 0.13)]
    nu: f64,
    #[arg(long, default_value_t = 0.5)]
    control_prob: f64,
    #[arg(long, default_value_t = MCConfig::DEFAULT_PULSE_RATE_HZ)]
    pulse_rate: f64,
    /// Worker threads; results are identical for any value.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output JSON report; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[group(id = "mode", required = true, multiple = false, args = ["loss", "maxloss"])]
struct PlanArgs {
    #[command(flatten)]
    device: DeviceArgs,
    /// Optimise (mu, nu) at this channel loss.
    #[arg(long)]
    loss: Option<f64>,
    /// Find the largest loss with a positive key rate.
    #[arg(long)]
    maxloss: bool,
    /// Intensities for the weak+vacuum loss search.
    #[arg(long, default_value_t = 0.31)]
    mu: f64,
    #[arg(long, default_value_t = 0.13)]
    nu: f64,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain { .. }
            | Error::InvalidField { .. }
            | Error::DegenerateIntensities { .. }
            | Error::Config(_) => EXIT_USAGE,
            Error::Insecure(_) => EXIT_INSECURE,
            Error::VacuousBound { .. } | Error::InsufficientData(_) => EXIT_COMPUTE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<TableError> for Failure {
    fn from(e: TableError) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure {
        code: EXIT_COMPUTE,
        message: format!("{}: {e}", path.display()),
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Bounds(a) => run_bounds(a),
        Command::Predict(a) => run_predict(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Plan(a) => run_plan(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("lm05: {}", f.message);
            f.code
        }
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| io_failure(p, e)),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| io_failure(Path::new("<stdout>"), e)),
    }
}

fn params_json<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).expect("arguments serialize")
}

fn run_bounds(a: &BoundsArgs) -> Result<(), Failure> {
    let intensities = IntensitySet::new(a.mu, a.nu)?;
    // Only e0 and f_ec enter the bound chain; the intrinsic fields are inert.
    let reference = DeviceParams::reference_setup();
    let params = DeviceParams::new(reference.eta_bob(), reference.e_detector(), reference.y0(), a.e0, a.f_ec)?;
    let rows = parse_measured_table(&a.input)?;

    let results = rows
        .iter()
        .map(|(c, s)| analyze(s, &intensities, &params).map(|b| (*c, b)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut buf = Vec::new();
    write_bounds_table(&mut buf, &results)?;
    emit(a.out.as_deref(), &buf)?;
    if let Some(out) = &a.out {
        RunManifest::new("bounds", params_json(a))
            .with_input(&a.input)
            .and_then(|m| m.write_beside(out))
            .map_err(|e| io_failure(out, e))?;
        let insecure = results.iter().filter(|r| r.1.insecure).count();
        eprintln!(
            "lm05: {} rows written to {} ({insecure} insecure)",
            results.len(),
            out.display()
        );
    }
    Ok(())
}

struct PredictRow {
    loss: f64,
    stats: MeasuredStats,
    r_l: f64,
    r_inf: f64,
    r_inf_opt: f64,
    mu_opt: f64,
}

fn run_predict(a: &PredictArgs) -> Result<(), Failure> {
    if !(a.loss_min >= 0.0) {
        return Err(usage("--loss-min must be non-negative"));
    }
    if !(a.loss_min <= a.loss_max) {
        return Err(usage("--loss-min must not exceed --loss-max"));
    }
    if !(a.loss_step > 0.0) {
        return Err(usage("--loss-step must be positive"));
    }
    if !(a.pulse_rate > 0.0) {
        return Err(usage("--pulse-rate must be positive"));
    }
    let params = a.device.params()?;
    let intensities = IntensitySet::new(a.mu, a.nu)?;

    let steps = ((a.loss_max - a.loss_min) / a.loss_step + 1e-9).floor() as u64;
    let mut rows = Vec::with_capacity(steps as usize + 1);
    for k in 0..=steps {
        let loss = a.loss_min + k as f64 * a.loss_step;
        let channel = ChannelPoint::new(loss)?;
        let stats = predict_stats(&params, channel, &intensities).to_measured()?;
        let (mu_opt, r_inf_opt) = optimal_infinite_decoy(&params, channel);
        rows.push(PredictRow {
            loss,
            stats,
            r_l: predicted_rate(&params, channel, &intensities),
            r_inf: infinite_decoy_rate(&params, channel, intensities.mu()),
            r_inf_opt,
            mu_opt,
        });
    }

    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(PREDICT_HEADER).map_err(TableError::from)?;
    for r in &rows {
        let s = &r.stats;
        wtr.write_record(
            [
                r.loss,
                s.q_mu(),
                s.e_mu(),
                s.q_nu(),
                s.e_nu(),
                r.r_l,
                r.r_inf,
                r.r_inf_opt,
                r.mu_opt,
                r.r_l * a.pulse_rate,
            ]
            .map(fmt_f64),
        )
        .map_err(TableError::from)?;
    }
    let buf = wtr.into_inner().map_err(|e| usage(e.to_string()))?;
    emit(a.out.as_deref(), &buf)?;
    let manifest = RunManifest::new("predict", params_json(a));
    if let Some(out) = &a.out {
        manifest.write_beside(out).map_err(|e| io_failure(out, e))?;
    }

    if let Some(svg_path) = &a.svg {
        let series = [
            Series {
                label: "weak+vacuum R_L",
                color: "#1f77b4",
                points: rows.iter().map(|r| (r.loss, r.r_l)).collect(),
            },
            Series {
                label: "infinite decoy, same mu",
                color: "#2ca02c",
                points: rows.iter().map(|r| (r.loss, r.r_inf)).collect(),
            },
            Series {
                label: "infinite decoy, optimal mu",
                color: "#d62728",
                points: rows.iter().map(|r| (r.loss, r.r_inf_opt)).collect(),
            },
        ];
        let svg = log_line_chart(
            &format!("Key rate vs loss (mu = {}, nu = {})", a.mu, a.nu),
            "channel loss (dB)",
            "key rate per pulse",
            &series,
        );
        fs::write(svg_path, svg).map_err(|e| io_failure(svg_path, e))?;
        manifest
            .write_beside(svg_path)
            .map_err(|e| io_failure(svg_path, e))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Verdict {
    Pass,
    Fail,
}

impl From<bool> for Verdict {
    fn from(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Serialize)]
struct SandwichReport {
    q12_lower: Verdict,
    eps12_upper: Verdict,
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    config: MCConfig,
    estimated_stats: Option<MeasuredStats>,
    true_tagged: Option<TrueTagged>,
    bounds: Option<BoundsResult>,
    sandwich: Option<SandwichReport>,
    /// r_l scaled by the pulse rate; a derived convenience figure.
    key_rate_per_second: Option<f64>,
    tallies: TallySet,
    diagnostics: Vec<String>,
    manifest: RunManifest,
}

fn run_simulate(a: &SimulateArgs) -> Result<(), Failure> {
    if a.pulses == 0 {
        return Err(usage("--pulses must be at least 1"));
    }
    let params = a.device.params()?;
    let mut config = MCConfig::new(
        params,
        ChannelPoint::new(a.loss)?,
        IntensitySet::new(a.mu, a.nu)?,
    )
    .with_pulses(a.pulses)
    .with_seed(a.seed);
    config.control_mode_prob = a.control_prob;
    config.pulse_rate_hz = a.pulse_rate;

    let tallies = simulate_run_with_workers(&config, a.workers)?;
    let mut diagnostics = Vec::new();
    let estimated = estimate_stats(&tallies)
        .map_err(|e| diagnostics.push(format!("estimate_stats: {e}")))
        .ok();
    let truth = true_tagged_stats(&tallies)
        .map_err(|e| diagnostics.push(format!("true_tagged_stats: {e}")))
        .ok();
    let bounds = match &estimated {
        Some(s) => analyze(s, &config.intensities, &params)
            .map_err(|e| diagnostics.push(format!("bounds: {e}")))
            .ok(),
        None => None,
    };
    let sandwich = match (&bounds, &truth) {
        (Some(b), Some(t)) => {
            let v = SandwichVerdict::evaluate(b, t);
            Some(SandwichReport {
                q12_lower: v.q12_lower_holds.into(),
                eps12_upper: v.eps12_upper_holds.into(),
            })
        }
        _ => None,
    };

    // Workers do not affect the output, so they stay out of the manifest.
    let mut manifest_params = params_json(a);
    if let Some(m) = manifest_params.as_object_mut() {
        m.remove("workers");
        m.remove("out");
    }
    let report = SimulateReport {
        key_rate_per_second: bounds.map(|b| b.r_l * config.pulse_rate_hz),
        config,
        estimated_stats: estimated,
        true_tagged: truth,
        bounds,
        sandwich,
        tallies,
        diagnostics,
        manifest: RunManifest::new("simulate", manifest_params).with_seed(a.seed),
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    emit(a.out.as_deref(), json.as_bytes())
}

fn run_plan(a: &PlanArgs) -> Result<(), Failure> {
    let params = a.device.params()?;
    if let Some(loss) = a.loss {
        let channel = ChannelPoint::new(loss)?;
        let plan = optimize_intensities(&params, channel)?;
        println!(
            "loss {loss} dB: best mu = {:.3}, nu = {:.3}, rate = {:.6e} per pulse ({} evaluations)",
            plan.best_mu, plan.best_nu, plan.best_rate, plan.evaluations
        );
        println!("{}", json!({ "loss_db": loss, "plan": plan }));
    } else {
        let intensities = IntensitySet::new(a.mu, a.nu)?;
        let wv = max_secure_loss(&params, &intensities, RateModel::WeakVacuum)?;
        let inf = max_secure_loss(&params, &intensities, RateModel::InfiniteDecoyOptimalMu)?;
        println!(
            "maximum secure loss: weak+vacuum (mu = {}, nu = {}) {wv:.2} dB; infinite decoy (optimal mu) {inf:.2} dB",
            a.mu, a.nu
        );
        println!(
            "{}",
            json!({
                "mu": a.mu,
                "nu": a.nu,
                "max_secure_loss_db": {
                    "weak_vacuum": wv,
                    "infinite_decoy_optimal_mu": inf,
                }
            })
        );
    }
    Ok(())
}
