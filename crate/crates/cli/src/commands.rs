//! Subcommand implementations. Each returns a [`CommandOutput`] or an
//! error; input validation failures surface as [`UsageError`].

use anyhow::{anyhow, Result};
use serde::Serialize;
use serde_json::json;

use qudit_qkd::bounds::{scan_curves, table1_reference, threshold, BISECTION_TOL, SCAN_STEP, TABLE1, TABLE1_TOL_PP};
use qudit_qkd::oracle::{run_protocol, RNG_DESCRIPTION};
use qudit_qkd::verify::{run_verification, OPTIMALITY_TOL};
use qudit_qkd::{BoundKind, Protocol, QkdError, SimConfig, EXACT_TOL, NUMERIC_TOL};

use crate::output::{CommandOutput, Status, UsageError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ProtocolArg {
    /// Computational and Fourier-dual bases.
    TwoBases,
    /// All d+1 mutually unbiased bases.
    AllBases,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::TwoBases => Protocol::TwoBases,
            ProtocolArg::AllBases => Protocol::AllBases,
        }
    }
}

fn protocol_label(p: Protocol) -> &'static str {
    match p {
        Protocol::TwoBases => "two-bases",
        Protocol::AllBases => "all-bases",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BoundArg {
    Ind2,
    #[value(name = "indD1")]
    IndD1,
    Coh,
}

impl From<BoundArg> for BoundKind {
    fn from(b: BoundArg) -> Self {
        match b {
            BoundArg::Ind2 => BoundKind::IndTwoBases,
            BoundArg::IndD1 => BoundKind::IndAllBases,
            BoundArg::Coh => BoundKind::Coherent,
        }
    }
}

/// Input-side core errors are usage errors; solver trouble is a failure.
fn classify(e: QkdError) -> anyhow::Error {
    match e {
        QkdError::Solver(_) | QkdError::UndefinedConditional { .. } => anyhow!(e),
        _ => anyhow!(UsageError(e.to_string())),
    }
}

fn solver_tolerances() -> serde_json::Value {
    json!({ "scan_step": SCAN_STEP, "bisection": BISECTION_TOL })
}

#[derive(Debug, Serialize)]
struct ThresholdRow {
    d: usize,
    bound: &'static str,
    d_star: f64,
    f_star: f64,
    residual: f64,
    percent: f64,
    /// Percent rounded half-up to two decimals.
    percent_display: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference_percent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    deviation_pp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    matches_reference: Option<bool>,
}

impl ThresholdRow {
    fn new(r: &qudit_qkd::ThresholdResult, reference: Option<f64>) -> Self {
        let deviation = reference.map(|want| (r.percent() - want).abs());
        ThresholdRow {
            d: r.d,
            bound: r.bound_kind.label(),
            d_star: r.d_star,
            f_star: r.f_star,
            residual: r.residual,
            percent: r.percent(),
            percent_display: r.percent_display(),
            reference_percent: reference,
            deviation_pp: deviation,
            matches_reference: deviation.map(|dev| dev <= TABLE1_TOL_PP),
        }
    }
}

pub fn table1() -> Result<CommandOutput> {
    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for &(d, ..) in &TABLE1 {
        for kind in BoundKind::ALL {
            let reference = table1_reference(d, kind);
            let r = threshold(d, kind).map_err(classify)?;
            let row = ThresholdRow::new(&r, reference);
            if row.matches_reference != Some(true) {
                bad.push(format!(
                    "d={d} {}: computed {} %, reference {:?} %",
                    kind.label(),
                    row.percent_display,
                    reference
                ));
            }
            rows.push(row);
        }
    }
    let all_match = bad.is_empty();
    let results = json!({ "rows": rows, "all_match": all_match });
    let mut tolerances = solver_tolerances();
    tolerances["table_pp"] = json!(TABLE1_TOL_PP);
    let out = CommandOutput::new("table1", json!({}), results, &rows, tolerances, None)?;
    Ok(if all_match {
        out
    } else {
        out.with_status(Status::Failed(bad))
    })
}

pub fn thresholds(d: usize, bound: BoundArg, tol: f64) -> Result<CommandOutput> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(UsageError(format!("--tol must be positive, got {tol}")).into());
    }
    let kind = BoundKind::from(bound);
    let r = threshold(d, kind).map_err(classify)?;
    if r.residual > tol {
        return Err(anyhow!(
            "solver residual {:e} exceeds --tol {tol:e} for d={d} {}",
            r.residual,
            kind.label()
        ));
    }
    let row = ThresholdRow::new(&r, None);
    let params = json!({ "d": d, "bound": kind.label(), "tol": tol });
    let mut tolerances = solver_tolerances();
    tolerances["residual"] = json!(tol);
    CommandOutput::new(
        "thresholds",
        params,
        serde_json::to_value(&row)?,
        &[row],
        tolerances,
        None,
    )
}

#[derive(Debug, Serialize)]
struct ScanRow {
    f: f64,
    disturbance: f64,
    i_ab: f64,
    i_ae: f64,
    r_lower: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    raw_rate: Option<f64>,
}

pub fn scan(
    d: usize,
    protocol: ProtocolArg,
    f_min: Option<f64>,
    f_max: f64,
    steps: usize,
    raw_rate: bool,
) -> Result<CommandOutput> {
    let protocol = Protocol::from(protocol);
    let lo = protocol.min_fidelity(d.max(2));
    let f_min = f_min.unwrap_or(lo);
    let points = scan_curves(d, protocol, f_min, f_max, steps).map_err(|e| match e {
        QkdError::Domain { .. } => anyhow!(UsageError(format!(
            "{e}; {} protocol with d={d} needs fidelities in [{lo}, 1]",
            protocol_label(protocol)
        ))),
        other => classify(other),
    })?;
    let yield_ = protocol.sift_yield(d);
    let rows: Vec<ScanRow> = points
        .iter()
        .map(|p| ScanRow {
            f: p.f,
            disturbance: p.disturbance,
            i_ab: p.i_ab,
            i_ae: p.i_ae,
            r_lower: p.r_lower,
            raw_rate: raw_rate.then_some(p.r_lower * yield_),
        })
        .collect();
    let params = json!({
        "d": d,
        "protocol": protocol_label(protocol),
        "f_min": f_min,
        "f_max": f_max,
        "steps": steps,
        "raw_rate": raw_rate,
    });
    let mut results = json!({ "rows": rows });
    if raw_rate {
        results["sift_yield"] = json!(yield_);
    }
    let tolerances = json!({ "domain_slack": 1e-14 });
    CommandOutput::new("scan", params, results, &rows, tolerances, None)
}

#[derive(Debug, Serialize)]
struct SimRow {
    d: usize,
    protocol: &'static str,
    disturbance: f64,
    rounds: u64,
    seed: u64,
    rounds_kept: u64,
    symbol_errors: u64,
    sift_fraction: f64,
    expected_sift_fraction: f64,
    sift_fraction_stderr: f64,
    qber: f64,
    expected_qber: f64,
    qber_stderr: f64,
    sift_within_3_sigma: bool,
    qber_within_3_sigma: bool,
}

pub fn simulate(d: usize, protocol: ProtocolArg, disturbance: f64, rounds: u64, seed: u64) -> Result<CommandOutput> {
    let cfg = SimConfig {
        d,
        protocol: protocol.into(),
        disturbance,
        rounds,
        seed,
    };
    let r = run_protocol(&cfg).map_err(classify)?;
    let row = SimRow {
        d,
        protocol: protocol_label(cfg.protocol),
        disturbance,
        rounds,
        seed,
        rounds_kept: r.rounds_kept,
        symbol_errors: r.symbol_errors,
        sift_fraction: r.sift_fraction,
        expected_sift_fraction: r.expected_sift_fraction,
        sift_fraction_stderr: r.sift_fraction_stderr,
        qber: r.qber,
        expected_qber: r.expected_qber,
        qber_stderr: r.qber_stderr,
        sift_within_3_sigma: r.sift_within(3.0),
        qber_within_3_sigma: r.qber_within(3.0),
    };
    let params = json!({
        "d": d,
        "protocol": protocol_label(cfg.protocol),
        "disturbance": disturbance,
        "rounds": rounds,
        "seed": seed,
    });
    let results = serde_json::to_value(&row)?;
    let tolerances = json!({ "sigma_gate": 3.0 });
    CommandOutput::new(
        "simulate",
        params,
        results,
        &[row],
        tolerances,
        Some(RNG_DESCRIPTION.to_string()),
    )
}

pub const VERIFY_SAMPLES: usize = 10;

pub fn verify(d_max: usize, samples: usize) -> Result<CommandOutput> {
    if samples == 0 {
        return Err(UsageError("--samples must be at least 1".into()).into());
    }
    let report = run_verification(d_max, samples).map_err(classify)?;
    let failed: Vec<String> = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{}: worst residual {:e} > {:e}", c.name, c.worst_residual, c.tolerance))
        .collect();
    let params = json!({ "d_max": d_max, "samples": samples });
    let results = json!({ "checks": report.checks, "all_passed": failed.is_empty() });
    let tolerances = json!({ "exact": EXACT_TOL, "numeric": NUMERIC_TOL, "optimality": OPTIMALITY_TOL });
    let out = CommandOutput::new("verify", params, results, &report.checks, tolerances, None)?;
    Ok(if failed.is_empty() {
        out
    } else {
        out.with_status(Status::Failed(failed))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::Format;

    #[test]
    fn table1_matches() {
        let out = table1().unwrap();
        assert_eq!(out.status, Status::Ok);
        assert_eq!(out.record.results["rows"].as_array().unwrap().len(), 15);
        assert_eq!(out.csv.lines().count(), 16);
    }

    #[test]
    fn thresholds_usage_errors() {
        let e = thresholds(1, BoundArg::Ind2, 1e-10).unwrap_err();
        assert!(e.is::<UsageError>());
        assert!(thresholds(2, BoundArg::Coh, 0.0).unwrap_err().is::<UsageError>());
    }

    #[test]
    fn scan_names_valid_range() {
        let e = scan(2, ProtocolArg::TwoBases, Some(0.3), 1.0, 5, false).unwrap_err();
        let msg = e.to_string();
        assert!(e.is::<UsageError>());
        assert!(msg.contains("[0.5, 1]"), "{msg}");
    }

    #[test]
    fn scan_raw_rate_uses_yield() {
        let out = scan(3, ProtocolArg::AllBases, Some(0.8), 1.0, 5, true).unwrap();
        for row in out.record.results["rows"].as_array().unwrap() {
            let r = row["r_lower"].as_f64().unwrap();
            let raw = row["raw_rate"].as_f64().unwrap();
            assert!((raw - r / 4.0).abs() < 1e-15);
        }
        assert!(out
            .render(Format::Csv)
            .unwrap()
            .starts_with("f,disturbance,i_ab,i_ae,r_lower,raw_rate\n"));
    }

    #[test]
    fn simulate_rejects_large_disturbance() {
        let e = simulate(2, ProtocolArg::TwoBases, 0.6, 100, 1).unwrap_err();
        assert!(e.is::<UsageError>());
    }

    #[test]
    fn verify_small_run_passes() {
        let out = verify(3, 2).unwrap();
        assert_eq!(out.status, Status::Ok);
        assert!(verify(9, 2).unwrap_err().is::<UsageError>());
    }
}
