use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lm05_decoy::table::{parse_measured_str, write_measured_table, BOUNDS_HEADER};
use lm05_decoy::{ChannelPoint, MeasuredStats};
use proptest::prelude::*;

fn lm05(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lm05"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn reference_table() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/reference_measured.csv")
}

fn read_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn bounds_writes_documented_schema_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t2.csv");
    let o = lm05(&[
        "bounds",
        "--input",
        reference_table().to_str().unwrap(),
        "--mu",
        "0.31",
        "--nu",
        "0.13",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_rows(&out);
    assert_eq!(rows[0], BOUNDS_HEADER);
    assert_eq!(rows.len(), 8);
    // Row 6 of the bundled table is flagged, not fatal.
    assert_eq!(rows[6][6..], ["true", "true"]);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("t2.csv.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "bounds");
    assert_eq!(manifest["input_digests"].as_object().unwrap().len(), 1);
}

#[test]
fn bounds_single_row_four() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("row4.csv");
    fs::write(
        &input,
        "loss_db,q_mu,e_mu,q_nu,e_nu,y0\n6.50,1.086e-3,5.397e-2,4.706e-4,5.410e-2,3.686e-6\n",
    )
    .unwrap();
    let out = dir.path().join("o.csv");
    let o = lm05(&[
        "bounds", "--input", input.to_str().unwrap(), "--mu", "0.31", "--nu", "0.13", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows = read_rows(&out);
    let r_l: f64 = rows[1][5].parse().unwrap();
    assert!(((r_l - 1.560e-4) / 1.560e-4).abs() < 0.01, "{r_l}");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(lm05(&["bounds", "--mu", "0.31", "--nu", "0.13"]).status.code(), Some(1));
    assert_eq!(lm05(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        lm05(&["predict", "--loss-min", "5", "--loss-max", "1"]).status.code(),
        Some(1)
    );
    assert_eq!(lm05(&["simulate", "--pulses", "0", "--loss", "3"]).status.code(), Some(1));
    assert_eq!(lm05(&["plan"]).status.code(), Some(1));
    assert_eq!(lm05(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let o = lm05(&["bounds", "--input", empty.to_str().unwrap(), "--mu", "0.31", "--nu", "0.13"]);
    assert_eq!(o.status.code(), Some(1));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "loss_db,q_mu,e_mu,q_nu,e_nu,y0\n1,1e-2,1.5,5e-3,4e-2,4e-6\n").unwrap();
    let o = lm05(&["bounds", "--input", bad.to_str().unwrap(), "--mu", "0.31", "--nu", "0.13"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("e_mu"));
}

#[test]
fn predict_sweep_and_chart() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let svg = dir.path().join("p.svg");
    let o = lm05(&[
        "predict", "--loss-min", "0", "--loss-max", "14", "--loss-step", "0.01", "--out",
        out.to_str().unwrap(), "--svg", svg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_rows(&out);
    assert_eq!(rows[0], lm05_decoy::cli::PREDICT_HEADER);
    assert_eq!(rows.len(), 1 + 1401);
    for r in &rows[1..] {
        let v: Vec<f64> = r.iter().map(|x| x.parse().unwrap()).collect();
        assert!(v[6] >= v[5] && v[7] >= v[5], "dominance at {} dB", v[0]);
        if (v[0] - 11.01).abs() < 1e-9 {
            assert!(v[5] > 0.0);
        }
    }
    let chart = fs::read_to_string(&svg).unwrap();
    assert!(chart.contains("<polyline"));
}

#[test]
fn plan_modes() {
    let o = lm05(&["plan", "--maxloss"]);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let json: serde_json::Value = serde_json::from_str(stdout.lines().last().unwrap()).unwrap();
    assert!(json["max_secure_loss_db"]["weak_vacuum"].as_f64().unwrap() > 11.01);

    let o = lm05(&["plan", "--loss", "3.26"]);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let json: serde_json::Value = serde_json::from_str(stdout.lines().last().unwrap()).unwrap();
    let best = json["plan"]["best_rate"].as_f64().unwrap();
    let reference = lm05_decoy::planner::predicted_rate(
        &lm05_decoy::DeviceParams::reference_setup(),
        ChannelPoint::new(3.26).unwrap(),
        &lm05_decoy::IntensitySet::reference(),
    );
    assert!(best >= reference);

    assert_eq!(lm05(&["plan", "--maxloss", "--e-det", "0.4999"]).status.code(), Some(3));
    assert_eq!(lm05(&["plan", "--loss", "0", "--e-det", "0.4999"]).status.code(), Some(3));
    assert_eq!(lm05(&["plan", "--maxloss", "--e-det", "0.5"]).status.code(), Some(1));
}

fn strip_timestamp(mut v: serde_json::Value) -> serde_json::Value {
    v["manifest"].as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        let o = lm05(&[
            "simulate", "--pulses", "2000000", "--seed", "42", "--loss", "3.26", "--workers",
            workers, "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
        v
    };
    let a = run("a.json", "1");
    let b = run("b.json", "4");
    for key in ["config", "estimated_stats", "true_tagged", "bounds", "sandwich", "manifest"] {
        assert!(a.get(key).is_some(), "missing {key}");
    }
    assert_eq!(strip_timestamp(a), strip_timestamp(b));
}

fn stats_strategy() -> impl Strategy<Value = (ChannelPoint, MeasuredStats)> {
    (0.0f64..50.0, 0.0f64..1e-3, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0).prop_map(
        |(loss, y0, a, e_mu, b, e_nu)| {
            let q_mu = y0 + a * (1.0 - y0);
            let q_nu = y0 + b * (1.0 - y0);
            (
                ChannelPoint::new(loss).unwrap(),
                MeasuredStats::new(q_mu, e_mu, q_nu, e_nu, y0).unwrap(),
            )
        },
    )
}

proptest! {
    #[test]
    fn measured_table_round_trips(rows in prop::collection::vec(stats_strategy(), 1..20)) {
        let mut buf = Vec::new();
        write_measured_table(&mut buf, &rows).unwrap();
        let back = parse_measured_str(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(back, rows);
    }
}
