//! Monte Carlo sweeps over one scenario parameter.

use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;

use phasecoop_core::beamforming::BfScheme;
use phasecoop_core::pipeline::{evaluate_schemes, realization, EEReport, SchemeId, SchemeKind};
use phasecoop_core::scenario::{dbm_to_watt, Scenario};
use rayon::prelude::*;

use crate::error::HarnessError;

/// Parameter varied by a sweep. Powers are given in dBm, positions in
/// metres.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepVar {
    PApU,
    PApI,
    NIrs,
    PC,
    IrsX,
    IrsY,
    /// Both exponents of the reflected path.
    AExponents,
    EhMin,
}

impl SweepVar {
    pub const ALL: [SweepVar; 8] = [
        SweepVar::PApU,
        SweepVar::PApI,
        SweepVar::NIrs,
        SweepVar::PC,
        SweepVar::IrsX,
        SweepVar::IrsY,
        SweepVar::AExponents,
        SweepVar::EhMin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepVar::PApU => "p_ap_u",
            SweepVar::PApI => "p_ap_i",
            SweepVar::NIrs => "n_irs",
            SweepVar::PC => "p_c",
            SweepVar::IrsX => "irs_x",
            SweepVar::IrsY => "irs_y",
            SweepVar::AExponents => "a_exponents",
            SweepVar::EhMin => "eh_min",
        }
    }

    /// Scenario with this variable set to `value`.
    pub fn apply(self, base: &Scenario, value: f64) -> Result<Scenario, HarnessError> {
        let mut s = base.clone();
        match self {
            SweepVar::PApU => s.p_ap_u_max = dbm_to_watt(value),
            SweepVar::PApI => s.p_ap_i_max = dbm_to_watt(value),
            SweepVar::NIrs => {
                if !(value >= 1.0 && value.fract() == 0.0 && value <= 1e6) {
                    return Err(HarnessError::Sweep(format!("n_irs must be a positive integer, got {value}")));
                }
                s.n_irs = value as usize;
            }
            SweepVar::PC => s.circuit.ap_static = dbm_to_watt(value),
            SweepVar::IrsX => s.irs_pos[0] = value,
            SweepVar::IrsY => s.irs_pos[1] = value,
            SweepVar::AExponents => {
                s.pathloss.ap_irs = value;
                s.pathloss.irs_rx = value;
            }
            SweepVar::EhMin => s.eh_min = dbm_to_watt(value),
        }
        s.validate()?;
        Ok(s)
    }

    /// Current value of this variable in `s`, in sweep units.
    pub fn read(self, s: &Scenario) -> f64 {
        use phasecoop_core::scenario::watt_to_dbm;
        match self {
            SweepVar::PApU => watt_to_dbm(s.p_ap_u_max),
            SweepVar::PApI => watt_to_dbm(s.p_ap_i_max),
            SweepVar::NIrs => s.n_irs as f64,
            SweepVar::PC => watt_to_dbm(s.circuit.ap_static),
            SweepVar::IrsX => s.irs_pos[0],
            SweepVar::IrsY => s.irs_pos[1],
            SweepVar::AExponents => s.pathloss.ap_irs,
            SweepVar::EhMin => watt_to_dbm(s.eh_min),
        }
    }
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVar {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SweepVar::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| {
            let known: Vec<&str> = SweepVar::ALL.iter().map(|v| v.name()).collect();
            HarnessError::Sweep(format!("unknown variable `{s}` (expected one of {})", known.join(", ")))
        })
    }
}

/// What to run: one variable over a list of values, `trials` seeded
/// trials per value, every listed scheme on every trial.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVar,
    pub values: Vec<f64>,
    pub trials: u64,
    pub schemes: Vec<SchemeId>,
}

impl SweepSpec {
    pub fn new(variable: SweepVar, values: Vec<f64>, trials: u64, schemes: Vec<SchemeId>) -> Result<Self, HarnessError> {
        if values.is_empty() {
            return Err(HarnessError::Sweep("no values given".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(HarnessError::Sweep("values must be finite".into()));
        }
        let up = values.windows(2).all(|w| w[1] > w[0]);
        let down = values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(HarnessError::Sweep(format!("values of {variable} must be strictly monotone")));
        }
        if trials == 0 {
            return Err(HarnessError::Sweep("at least one trial is required".into()));
        }
        if schemes.is_empty() {
            return Err(HarnessError::Sweep("no schemes given".into()));
        }
        Ok(Self { variable, values, trials, schemes })
    }

    /// A one-point sweep at the base scenario's own value of `variable`.
    pub fn single(base: &Scenario, trials: u64, schemes: Vec<SchemeId>) -> Result<Self, HarnessError> {
        Self::new(SweepVar::NIrs, vec![base.n_irs as f64], trials, schemes)
    }

    /// Parse `VAR=v1,v2,...`.
    pub fn parse_assignment(text: &str) -> Result<(SweepVar, Vec<f64>), HarnessError> {
        let (var, list) =
            text.split_once('=').ok_or_else(|| HarnessError::Sweep(format!("expected VAR=v1,v2,..., got `{text}`")))?;
        let var: SweepVar = var.trim().parse()?;
        let values = list
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| HarnessError::Sweep(format!("value `{v}`: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((var, values))
    }
}

/// Parse a comma-separated scheme list crossed with a comma-separated
/// beamformer list.
pub fn parse_schemes(schemes: &str, bfs: &str) -> Result<Vec<SchemeId>, HarnessError> {
    let bfs = bfs
        .split(',')
        .map(|b| match b.trim() {
            "mmse" => Ok(BfScheme::Mmse),
            "zf" => Ok(BfScheme::Zf),
            other => Err(HarnessError::Scheme(format!("unknown beamformer `{other}` (expected mmse or zf)"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::new();
    for bf in bfs {
        for name in schemes.split(',') {
            let kind = SchemeKind::parse(name.trim()).ok_or_else(|| HarnessError::Scheme(format!("unknown scheme `{name}`")))?;
            out.push(SchemeId { kind, bf });
        }
    }
    Ok(out)
}

/// One scheme on one trial at one sweep point.
#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub value: f64,
    pub trial: u64,
    pub scheme: SchemeId,
    pub scenario: PointSummary,
    pub outcome: Result<EEReport, String>,
}

/// Scenario values echoed into every CSV row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointSummary {
    pub n_irs: usize,
    pub m_u: usize,
    pub m_i: usize,
    pub p_ap_u_dbm: f64,
    pub p_ap_i_dbm: f64,
    pub p_c_dbm: f64,
}

impl PointSummary {
    fn of(s: &Scenario) -> Self {
        use phasecoop_core::scenario::watt_to_dbm;
        Self {
            n_irs: s.n_irs,
            m_u: s.m_u,
            m_i: s.m_i,
            p_ap_u_dbm: watt_to_dbm(s.p_ap_u_max),
            p_ap_i_dbm: watt_to_dbm(s.p_ap_i_max),
            p_c_dbm: watt_to_dbm(s.circuit.ap_static),
        }
    }
}

/// Every record of a sweep, ordered by value, then trial, then scheme.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub seed: u64,
    pub spec: SweepSpec,
    pub records: Vec<TrialRecord>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.outcome.is_err()).count()
    }

    /// Records of one scheme at one sweep point, in trial order.
    pub fn reports(&self, value: f64, scheme: SchemeId) -> impl Iterator<Item = &EEReport> {
        self.records
            .iter()
            .filter(move |r| r.value == value && r.scheme == scheme)
            .filter_map(|r| r.outcome.as_ref().ok())
    }

    pub fn aggregate(&self) -> Vec<Aggregate> {
        let mut out = Vec::new();
        for &value in &self.spec.values {
            for &scheme in &self.spec.schemes {
                let reports: Vec<&EEReport> = self.reports(value, scheme).collect();
                let failed = self.records.iter().filter(|r| r.value == value && r.scheme == scheme && r.outcome.is_err()).count();
                out.push(Aggregate {
                    value,
                    scheme,
                    ok: reports.len(),
                    failed,
                    feasible: reports.iter().filter(|r| r.flags.all_ok()).count(),
                    unet_ee: Stat::of(reports.iter().map(|r| r.unet_ee)),
                    inet_ee: Stat::of(reports.iter().map(|r| r.inet_ee)),
                    unet_sum_rate: Stat::of(reports.iter().map(|r| r.unet_sum_rate)),
                    inet_sum_rate: Stat::of(reports.iter().map(|r| r.inet_sum_rate)),
                    iterations: Stat::of(reports.iter().map(|r| r.iterations_outer as f64)),
                });
            }
        }
        out
    }
}

/// Sample mean and standard error of the mean, accumulated in trial order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stat {
    pub mean: f64,
    /// `None` with fewer than two samples.
    pub std_err: Option<f64>,
}

impl Stat {
    pub fn of(values: impl Iterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.collect();
        let n = v.len() as f64;
        if v.is_empty() {
            return Stat { mean: f64::NAN, std_err: None };
        }
        let mean = v.iter().sum::<f64>() / n;
        let std_err = (v.len() > 1).then(|| {
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        });
        Stat { mean, std_err }
    }
}

/// Per-point, per-scheme summary.
#[derive(Clone, Debug)]
pub struct Aggregate {
    pub value: f64,
    pub scheme: SchemeId,
    pub ok: usize,
    pub failed: usize,
    /// Trials whose report satisfies every constraint flag.
    pub feasible: usize,
    pub unet_ee: Stat,
    pub inet_ee: Stat,
    pub unet_sum_rate: Stat,
    pub inet_sum_rate: Stat,
    pub iterations: Stat,
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_owned()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "unknown panic".to_owned()
    }
}

/// Run every (value, trial) job in parallel and collect the records in a
/// fixed order. Errors and panics inside a trial become failure records.
pub fn run_sweep(spec: &SweepSpec, base: &Scenario) -> Result<SweepResult, HarnessError> {
    let points = spec.values.iter().map(|&v| spec.variable.apply(base, v).map(|s| (v, s))).collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<(usize, u64)> = (0..points.len()).flat_map(|p| (0..spec.trials).map(move |t| (p, t))).collect();
    let chunks: Vec<Vec<TrialRecord>> = jobs
        .par_iter()
        .map(|&(p, trial)| {
            let (value, ref s) = points[p];
            let summary = PointSummary::of(s);
            let outcomes = catch_unwind(AssertUnwindSafe(|| {
                let (streams, real) = realization(s, trial);
                evaluate_schemes(s, &real, &spec.schemes, &streams)
            }));
            let results: Vec<Result<EEReport, String>> = match outcomes {
                Ok(list) => list.into_iter().map(|o| o.map(|o| o.report).map_err(|e| e.to_string())).collect(),
                Err(payload) => {
                    let msg = format!("panic: {}", panic_message(payload.as_ref()));
                    spec.schemes.iter().map(|_| Err(msg.clone())).collect()
                }
            };
            spec.schemes
                .iter()
                .zip(results)
                .map(|(&scheme, outcome)| TrialRecord { value, trial, scheme, scenario: summary, outcome })
                .collect()
        })
        .collect();
    Ok(SweepResult { seed: base.seed, spec: spec.clone(), records: chunks.into_iter().flatten().collect() })
}
