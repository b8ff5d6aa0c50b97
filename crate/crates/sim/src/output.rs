//! CSV emission. Rows are written in record order by a single writer, so
//! identical sweeps produce byte-identical files.

use std::path::{Path, PathBuf};

use phasecoop_core::pipeline::EEReport;
use serde::Serialize;

use crate::error::HarnessError;
use crate::sweep::{Stat, SweepResult};

pub const TRIALS_FILE: &str = "trials.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const TRACES_FILE: &str = "traces.csv";

/// One row of the long-format trial table. Numeric result columns are
/// empty on failure rows.
#[derive(Debug, Serialize)]
pub struct TrialRow<'a> {
    pub seed: u64,
    pub variable: &'a str,
    pub value: f64,
    pub trial: u64,
    pub scheme: String,
    pub bf: &'a str,
    pub n_irs: usize,
    pub m_u: usize,
    pub m_i: usize,
    pub p_ap_u_dbm: f64,
    pub p_ap_i_dbm: f64,
    pub p_c_dbm: f64,
    pub unet_sum_rate: Option<f64>,
    pub unet_ee: Option<f64>,
    pub unet_power_w: Option<f64>,
    pub inet_sum_rate: Option<f64>,
    pub inet_ee: Option<f64>,
    pub inet_power_w: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub unet_sinr_ok: Option<bool>,
    pub unet_budget_ok: Option<bool>,
    pub inet_sinr_ok: Option<bool>,
    pub inet_eh_ok: Option<bool>,
    pub inet_budget_ok: Option<bool>,
    pub sdr_relaxed: Option<bool>,
    pub error: &'a str,
}

#[derive(Debug, Serialize)]
pub struct AggregateRow<'a> {
    pub variable: &'a str,
    pub value: f64,
    pub scheme: String,
    pub bf: &'a str,
    pub trials_ok: usize,
    pub trials_failed: usize,
    pub trials_feasible: usize,
    pub unet_ee_mean: f64,
    pub unet_ee_se: Option<f64>,
    pub inet_ee_mean: f64,
    pub inet_ee_se: Option<f64>,
    pub unet_sum_rate_mean: f64,
    pub unet_sum_rate_se: Option<f64>,
    pub inet_sum_rate_mean: f64,
    pub inet_sum_rate_se: Option<f64>,
    pub iterations_mean: f64,
}

#[derive(Debug, Serialize)]
pub struct TraceRow<'a> {
    pub variable: &'a str,
    pub value: f64,
    pub trial: u64,
    pub scheme: String,
    pub bf: &'a str,
    pub iteration: usize,
    pub unet_ee: f64,
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, HarnessError> {
    csv::Writer::from_path(path).map_err(|source| HarnessError::Csv { path: path.to_owned(), source })
}

fn write_all<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), HarnessError> {
    let csv_err = |source| HarnessError::Csv { path: path.to_owned(), source };
    let mut w = writer(path)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| HarnessError::Io { path: path.to_owned(), source })
}

pub fn trial_rows(result: &SweepResult) -> impl Iterator<Item = TrialRow<'_>> {
    let variable = result.spec.variable.name();
    result.records.iter().map(move |r| {
        let sc = &r.scenario;
        let ok = r.outcome.as_ref().ok();
        let flags = ok.map(|rep| rep.flags);
        TrialRow {
            seed: result.seed,
            variable,
            value: r.value,
            trial: r.trial,
            scheme: r.scheme.kind.label(),
            bf: r.scheme.bf.label(),
            n_irs: sc.n_irs,
            m_u: sc.m_u,
            m_i: sc.m_i,
            p_ap_u_dbm: sc.p_ap_u_dbm,
            p_ap_i_dbm: sc.p_ap_i_dbm,
            p_c_dbm: sc.p_c_dbm,
            unet_sum_rate: ok.map(|x| x.unet_sum_rate),
            unet_ee: ok.map(|x| x.unet_ee),
            unet_power_w: ok.map(|x| x.unet_power),
            inet_sum_rate: ok.map(|x| x.inet_sum_rate),
            inet_ee: ok.map(|x| x.inet_ee),
            inet_power_w: ok.map(|x| x.inet_power),
            iterations: ok.map(|x| x.iterations_outer),
            converged: ok.map(|x| x.converged),
            unet_sinr_ok: flags.map(|f| f.unet_sinr_ok),
            unet_budget_ok: flags.map(|f| f.unet_budget_ok),
            inet_sinr_ok: flags.map(|f| f.inet_sinr_ok),
            inet_eh_ok: flags.map(|f| f.inet_eh_ok),
            inet_budget_ok: flags.map(|f| f.inet_budget_ok),
            sdr_relaxed: flags.map(|f| f.sdr_relaxed),
            error: r.outcome.as_ref().err().map_or("", String::as_str),
        }
    })
}

pub fn write_trials(path: &Path, result: &SweepResult) -> Result<(), HarnessError> {
    write_all(path, trial_rows(result))
}

pub fn write_aggregate(path: &Path, result: &SweepResult) -> Result<(), HarnessError> {
    let variable = result.spec.variable.name();
    let agg = result.aggregate();
    write_all(
        path,
        agg.iter().map(|a| {
            let Stat { mean: ue, std_err: ue_se } = a.unet_ee;
            let Stat { mean: ie, std_err: ie_se } = a.inet_ee;
            let Stat { mean: ur, std_err: ur_se } = a.unet_sum_rate;
            let Stat { mean: ir, std_err: ir_se } = a.inet_sum_rate;
            AggregateRow {
                variable,
                value: a.value,
                scheme: a.scheme.kind.label(),
                bf: a.scheme.bf.label(),
                trials_ok: a.ok,
                trials_failed: a.failed,
                trials_feasible: a.feasible,
                unet_ee_mean: ue,
                unet_ee_se: ue_se,
                inet_ee_mean: ie,
                inet_ee_se: ie_se,
                unet_sum_rate_mean: ur,
                unet_sum_rate_se: ur_se,
                inet_sum_rate_mean: ir,
                inet_sum_rate_se: ir_se,
                iterations_mean: a.iterations.mean,
            }
        }),
    )
}

/// Outer-iteration EE traces of every successful record.
pub fn write_traces(path: &Path, result: &SweepResult) -> Result<(), HarnessError> {
    let variable = result.spec.variable.name();
    let rows = result.records.iter().filter_map(|r| r.outcome.as_ref().ok().map(|rep| (r, rep))).flat_map(|(r, rep)| {
        rep.trace.iter().enumerate().map(move |(iteration, &unet_ee)| TraceRow {
            variable,
            value: r.value,
            trial: r.trial,
            scheme: r.scheme.kind.label(),
            bf: r.scheme.bf.label(),
            iteration,
            unet_ee,
        })
    });
    write_all(path, rows)
}

/// Iteration-vs-EE table of a single report.
pub fn emit_trace(report: &EEReport, path: &Path) -> Result<(), HarnessError> {
    #[derive(Serialize)]
    struct Row {
        iteration: usize,
        unet_ee: f64,
    }
    write_all(path, report.trace.iter().enumerate().map(|(iteration, &unet_ee)| Row { iteration, unet_ee }))
}

/// Eigenvalues of a relaxed solution, largest first.
pub fn write_spectrum(path: &Path, eigenvalues: &[f64]) -> Result<(), HarnessError> {
    #[derive(Serialize)]
    struct Row {
        index: usize,
        eigenvalue: f64,
        share: f64,
    }
    let total: f64 = eigenvalues.iter().map(|v| v.max(0.0)).sum();
    write_all(
        path,
        eigenvalues.iter().enumerate().map(|(index, &eigenvalue)| Row { index, eigenvalue, share: eigenvalue.max(0.0) / total }),
    )
}

/// `dir/name`, creating `dir` if needed.
pub fn output_path(dir: &Path, name: &str) -> Result<PathBuf, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.to_owned(), source })?;
    Ok(dir.join(name))
}
