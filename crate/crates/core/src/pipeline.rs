//! End-to-end schemes: phase design for the user network, beamforming
//! policies for both networks, and the baselines.
//!
//! Beamformers for a fixed effective channel are built in two stages. First,
//! minimum-power beams meet every SINR target with equality. Then a
//! network-specific power policy scales them up:
//!
//! * user network: a common factor `α ≥ 1` maximizing EE, found by
//!   golden-section search on `ln α` (the EE is quasiconcave in `α`);
//! * IoT network: the smallest factor that lets every device harvest its
//!   requirement after power splitting.
//!
//! For MMSE the regularization is searched with the network's own EE as the
//! score.

#[allow(unused_imports)] // idle when std is linked
use num_traits::Float;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::beamforming::{
    beamform_lagrangian, min_power_allocation, mmse_line_search, solve_dual_fixed_point, zf_directions, BeamformingSolution,
    BfScheme, Targets, SINR_TOL,
};
use crate::channel::{ChannelRealization, NetworkLinks, PhaseShifts};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::metrics;
use crate::phase_ebcd::{build_instance, run_ebcd};
use crate::phase_sdr::{gaussian_randomize, lift, solve_sdp_with_hint};
use crate::scenario::{Scenario, Stream, TrialStreams};
use crate::swipt::{scale_for_harvesting, SwiptParams, SwiptReport};

/// Continuous phase optimizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhaseMethod {
    /// Alternating optimization with semidefinite relaxation.
    AoSdr,
    /// Low-complexity alternative with element-wise coordinate descent.
    LcasEbcd,
}

impl PhaseMethod {
    pub fn label(self) -> &'static str {
        match self {
            PhaseMethod::AoSdr => "ao_sdr",
            PhaseMethod::LcasEbcd => "lcas_ebcd",
        }
    }
}

/// How the reflection phases are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemeKind {
    AoSdr,
    LcasEbcd,
    /// Continuous phases of `source` quantized to `2^bits` levels.
    Dps { bits: u32, source: PhaseMethod },
    /// Uniformly random phases.
    Rps,
    /// No reflecting surface.
    NoIrs,
}

impl SchemeKind {
    /// Parse `ao_sdr`, `lcas_ebcd`, `rps`, `no_irs`, `dps<b>` (quantizing
    /// AO phases) or `dps<b>_lcas`.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ao_sdr" => return Some(SchemeKind::AoSdr),
            "lcas_ebcd" => return Some(SchemeKind::LcasEbcd),
            "rps" => return Some(SchemeKind::Rps),
            "no_irs" => return Some(SchemeKind::NoIrs),
            _ => {}
        }
        let rest = s.strip_prefix("dps")?;
        let (digits, source) = match rest.strip_suffix("_lcas") {
            Some(d) => (d, PhaseMethod::LcasEbcd),
            None => (rest.strip_suffix("_ao").unwrap_or(rest), PhaseMethod::AoSdr),
        };
        let bits: u32 = digits.parse().ok()?;
        (1..=30).contains(&bits).then_some(SchemeKind::Dps { bits, source })
    }

    pub fn label(&self) -> String {
        match self {
            SchemeKind::AoSdr => "ao_sdr".into(),
            SchemeKind::LcasEbcd => "lcas_ebcd".into(),
            SchemeKind::Dps { bits, source: PhaseMethod::AoSdr } => format!("dps{bits}"),
            SchemeKind::Dps { bits, source: PhaseMethod::LcasEbcd } => format!("dps{bits}_lcas"),
            SchemeKind::Rps => "rps".into(),
            SchemeKind::NoIrs => "no_irs".into(),
        }
    }
}

/// A phase scheme paired with a beamforming scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SchemeId {
    pub kind: SchemeKind,
    pub bf: BfScheme,
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.kind.label(), self.bf.label())
    }
}

/// Constraint status of a reported operating point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Flags {
    pub unet_sinr_ok: bool,
    pub unet_budget_ok: bool,
    pub inet_sinr_ok: bool,
    pub inet_eh_ok: bool,
    pub inet_budget_ok: bool,
    /// Some SDR phase update had to relax the SINR target.
    pub sdr_relaxed: bool,
}

impl Flags {
    pub fn all_ok(&self) -> bool {
        self.unet_sinr_ok && self.unet_budget_ok && self.inet_sinr_ok && self.inet_eh_ok && self.inet_budget_ok
    }
}

/// Headline numbers of one scheme on one realization.
#[derive(Clone, Debug, PartialEq)]
pub struct EEReport {
    pub scheme: SchemeId,
    /// Bits per joule.
    pub unet_ee: f64,
    pub inet_ee: f64,
    /// Bits per channel use.
    pub unet_sum_rate: f64,
    pub inet_sum_rate: f64,
    /// Radiated power, W.
    pub unet_power: f64,
    pub inet_power: f64,
    pub iterations_outer: usize,
    pub converged: bool,
    /// User-network EE at the initial point and after every outer iteration.
    pub trace: Vec<f64>,
    pub flags: Flags,
}

/// User-network beamformers with their evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct UnetDesign {
    pub bf: BeamformingSolution,
    pub sinr: Vec<f64>,
    pub sum_rate: f64,
    pub total_power: f64,
    pub ee: f64,
    pub sinr_ok: bool,
    pub budget_ok: bool,
}

impl UnetDesign {
    fn feasible(&self) -> bool {
        self.sinr_ok && self.budget_ok
    }
}

/// IoT-network beamformers with their evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct InetDesign {
    pub bf: BeamformingSolution,
    pub report: SwiptReport,
}

/// Outer-loop bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct Convergence {
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
}

/// Result of a user-network phase optimizer.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseDesign {
    pub phases: PhaseShifts,
    pub unet: UnetDesign,
    pub convergence: Convergence,
    pub sdr_relaxed: bool,
}

/// Everything a scheme produced, for re-verification.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeOutcome {
    pub report: EEReport,
    pub phases: PhaseShifts,
    pub unet: UnetDesign,
    pub inet: InetDesign,
}

fn unet_targets(s: &Scenario) -> Targets {
    Targets { gamma: s.sinr_min(), sigma2: s.noise_variance }
}

/// Parameters of the IoT-network objective and constraints.
pub fn swipt_params(s: &Scenario) -> SwiptParams {
    SwiptParams {
        targets: Targets { gamma: s.sinr_min(), sigma2: s.noise_variance },
        slack: s.ps_slack,
        eh_efficiency: s.eh_efficiency,
        eh_min: s.eh_min,
        amp_efficiency: s.amp_efficiency,
        circuit: s.inet_circuit_power(),
        budget: s.p_ap_i_max,
        bandwidth_hz: s.bandwidth_hz,
    }
}

/// Evaluate user-network beamformers `bf` on channels `f`.
pub fn unet_report(s: &Scenario, f: &CMat, bf: BeamformingSolution) -> UnetDesign {
    let t = unet_targets(s);
    let sinr = metrics::sinr(f, &bf.w, t.sigma2);
    let sum_rate = sinr.iter().map(|&x| metrics::rate(x)).sum();
    let total_power = metrics::radiated_power(&bf.w);
    let ee = metrics::energy_efficiency(sum_rate, total_power, s.amp_efficiency, s.unet_circuit_power(), s.bandwidth_hz);
    let sinr_ok = sinr.iter().all(|&x| x >= t.gamma * (1.0 - SINR_TOL));
    let budget_ok = total_power <= s.p_ap_u_max * (1.0 + 1e-9);
    UnetDesign { bf, sinr, sum_rate, total_power, ee, sinr_ok, budget_ok }
}

/// Scale minimum-power beams by the EE-maximizing common factor within the
/// budget. Beams that already exceed the budget are left as they are.
pub fn unet_power_policy(s: &Scenario, f: &CMat, base: &BeamformingSolution) -> UnetDesign {
    let t = unet_targets(s);
    let p0 = base.total_power();
    let alpha_max = s.p_ap_u_max / p0;
    if !(alpha_max > 1.0) {
        return unet_report(s, f, base.clone());
    }
    let g = metrics::gain_table(f, &base.w);
    let sig: Vec<f64> = (0..g.len()).map(|k| g[k][k]).collect();
    let itf: Vec<f64> = (0..g.len()).map(|k| g[k].iter().sum::<f64>() - g[k][k]).collect();
    let ee_at = |ln_a: f64| {
        let a = ln_a.exp();
        let rate: f64 = (0..sig.len()).map(|k| metrics::rate(a * sig[k] / (a * itf[k] + t.sigma2))).sum();
        metrics::energy_efficiency(rate, a * p0, s.amp_efficiency, s.unet_circuit_power(), s.bandwidth_hz)
    };
    let (lo, hi) = (0.0, alpha_max.ln());
    let x = golden_max(ee_at, lo, hi, 1e-10);
    let mut best = (lo, ee_at(lo));
    for c in [x, hi] {
        let v = ee_at(c);
        if v > best.1 {
            best = (c, v);
        }
    }
    unet_report(s, f, base.scaled(best.0.exp().min(alpha_max), f, t))
}

fn golden_max<F: Fn(f64) -> f64>(h: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const R: f64 = 0.618_033_988_749_894_8;
    let mut c = b - R * (b - a);
    let mut d = a + R * (b - a);
    let (mut fc, mut fd) = (h(c), h(d));
    while (b - a).abs() > tol * (1.0 + a.abs() + b.abs()) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - R * (b - a);
            fc = h(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + R * (b - a);
            fd = h(d);
        }
    }
    0.5 * (a + b)
}

/// Ranking used by the MMSE search: feasible points by EE, infeasible ones
/// after every feasible point, by lower power.
fn score(feasible: bool, ee: f64, power: f64) -> f64 {
    if feasible {
        ee
    } else {
        -power
    }
}

/// Minimum-power beams of the ZF or Lagrangian scheme on `f`.
fn base_beams(f: &CMat, scheme: BfScheme, t: Targets, budget: f64) -> Result<BeamformingSolution> {
    match scheme {
        BfScheme::Zf => {
            let dirs = zf_directions(f)?;
            let p = min_power_allocation(f, &dirs, t)?;
            Ok(BeamformingSolution::from_directions(f, &dirs, p, Vec::new(), BfScheme::Zf, t))
        }
        BfScheme::Lagrangian | BfScheme::Mmse => {
            let lambda = solve_dual_fixed_point(f, t.gamma, t.sigma2, budget)?;
            beamform_lagrangian(f, &lambda, t.gamma, t.sigma2)
        }
    }
}

/// User-network beamformers for effective channels `f`.
pub fn design_unet(s: &Scenario, f: &CMat, scheme: BfScheme) -> Result<UnetDesign> {
    let t = unet_targets(s);
    match scheme {
        BfScheme::Mmse => {
            let found = mmse_line_search(f, s.p_ap_u_max, t.sigma2, s.solver.line_search_step, |lambda, dirs| {
                let p = min_power_allocation(f, dirs, t).ok()?;
                let base = BeamformingSolution::from_directions(f, dirs, p, alloc::vec![lambda], BfScheme::Mmse, t);
                let d = unet_power_policy(s, f, &base);
                let sc = score(d.feasible(), d.ee, d.total_power);
                Some((d.bf, sc))
            });
            let (_, bf, _) = found.ok_or(Error::InfeasibleTargets)?;
            Ok(unet_report(s, f, bf))
        }
        other => Ok(unet_power_policy(s, f, &base_beams(f, other, t, s.p_ap_u_max)?)),
    }
}

/// IoT-network beamformers and splitting ratios for effective channels `f`.
pub fn design_inet(s: &Scenario, f: &CMat, scheme: BfScheme) -> Result<InetDesign> {
    let params = swipt_params(s);
    let t = params.targets;
    let build = |base: BeamformingSolution| {
        let (bf, report) = scale_for_harvesting(f, &base, &params);
        InetDesign { bf, report }
    };
    match scheme {
        BfScheme::Mmse => {
            let found = mmse_line_search(f, s.p_ap_i_max, t.sigma2, s.solver.line_search_step, |lambda, dirs| {
                let p = min_power_allocation(f, dirs, t).ok()?;
                let base = BeamformingSolution::from_directions(f, dirs, p, alloc::vec![lambda], BfScheme::Mmse, t);
                let d = build(base);
                let sc = score(d.report.feasible(), d.report.ee, d.report.total_power);
                Some((d.bf, sc))
            });
            let (_, bf, _) = found.ok_or(Error::InfeasibleTargets)?;
            let report = crate::swipt::evaluate(f, &bf.w, &params);
            Ok(InetDesign { bf, report })
        }
        other => Ok(build(base_beams(f, other, t, s.p_ap_i_max)?)),
    }
}

fn relative_change(prev: f64, cur: f64) -> f64 {
    if cur == prev {
        0.0
    } else {
        ((cur - prev) / cur.abs().max(prev.abs())).abs()
    }
}

/// Alternating optimization of user-network phases and beamformers with the
/// relaxed phase step. A randomized phase update is kept only if it raises
/// the EE, so the trace is non-decreasing.
pub fn run_ao<R: Rng + ?Sized>(s: &Scenario, users: &NetworkLinks, bf: BfScheme, rng: &mut R) -> Result<PhaseDesign> {
    let t = unet_targets(s);
    let mut phases = PhaseShifts::ones(users.elements());
    let mut design = design_unet(s, &users.effective(&phases)?, bf).map_err(|e| at(0, e))?;
    let mut trace = alloc::vec![design.ee];
    let mut converged = false;
    let mut relaxed = false;
    let mut iterations = 0;
    for r in 1..=s.solver.max_outer {
        iterations = r;
        let mut step = || -> Result<Option<(PhaseShifts, UnetDesign, bool)>> {
            let inst = lift(users, &design.bf, t.gamma, t.sigma2)?;
            let sol = solve_sdp_with_hint(&inst, Some(&phases))?;
            let cand = gaussian_randomize(&sol, &inst, s.solver.randomizations, rng);
            let next = design_unet(s, &users.effective(&cand.phases)?, bf)?;
            let better = next.ee > design.ee && (next.feasible() || !design.feasible());
            Ok(better.then_some((cand.phases, next, !sol.at_target)))
        };
        if let Some((p, d, rel)) = step().map_err(|e| at(r, e))? {
            phases = p;
            design = d;
            relaxed |= rel;
        }
        trace.push(design.ee);
        if relative_change(trace[r - 1], trace[r]) < s.solver.xi {
            converged = true;
            break;
        }
    }
    Ok(PhaseDesign { phases, unet: design, convergence: Convergence { iterations, converged, trace }, sdr_relaxed: relaxed })
}

/// Low-complexity alternative: phases from element-wise coordinate descent
/// on the decoupled channel-gain objective, then beamformers, repeated until
/// the EE settles.
pub fn run_lcas(s: &Scenario, users: &NetworkLinks, bf: BfScheme) -> Result<PhaseDesign> {
    let inst = build_instance(users);
    let mut phases = PhaseShifts::ones(users.elements());
    let mut design = design_unet(s, &users.effective(&phases)?, bf).map_err(|e| at(0, e))?;
    let mut trace = alloc::vec![design.ee];
    let mut converged = false;
    let mut iterations = 0;
    for r in 1..=s.solver.max_outer {
        iterations = r;
        let ebcd = run_ebcd(&inst, &phases, s.solver.xi, s.solver.max_sweeps);
        phases = ebcd.phases;
        design = design_unet(s, &users.effective(&phases)?, bf).map_err(|e| at(r, e))?;
        trace.push(design.ee);
        if relative_change(trace[r - 1], trace[r]) < s.solver.xi {
            converged = true;
            break;
        }
    }
    Ok(PhaseDesign { phases, unet: design, convergence: Convergence { iterations, converged, trace }, sdr_relaxed: false })
}

fn at(iteration: usize, source: Error) -> Error {
    Error::AtIteration { iteration, source: alloc::boxed::Box::new(source) }
}

/// Reuse `phases` in the IoT network and re-solve its beamformers and
/// splitting ratios.
pub fn phase_cooperation(s: &Scenario, devices: &NetworkLinks, phases: &PhaseShifts, bf: BfScheme) -> Result<InetDesign> {
    design_inet(s, &devices.effective(phases)?, bf)
}

fn assemble(scheme: SchemeId, phases: PhaseShifts, unet: UnetDesign, inet: InetDesign, conv: &Convergence, relaxed: bool) -> SchemeOutcome {
    let r = &inet.report;
    let report = EEReport {
        scheme,
        unet_ee: unet.ee,
        inet_ee: r.ee,
        unet_sum_rate: unet.sum_rate,
        inet_sum_rate: r.sum_rate,
        unet_power: unet.total_power,
        inet_power: r.total_power,
        iterations_outer: conv.iterations,
        converged: conv.converged,
        trace: conv.trace.clone(),
        flags: Flags {
            unet_sinr_ok: unet.sinr_ok,
            unet_budget_ok: unet.budget_ok,
            inet_sinr_ok: r.sinr_ok.iter().all(|&b| b),
            inet_eh_ok: r.eh_ok.iter().all(|&b| b),
            inet_budget_ok: r.budget_ok,
            sdr_relaxed: relaxed,
        },
    };
    SchemeOutcome { report, phases, unet, inet }
}

fn fixed_phases(s: &Scenario, real: &ChannelRealization, scheme: SchemeId, phases: PhaseShifts) -> Result<SchemeOutcome> {
    let unet = design_unet(s, &real.users.effective(&phases)?, scheme.bf)?;
    let inet = phase_cooperation(s, &real.devices, &phases, scheme.bf)?;
    let conv = Convergence { iterations: 0, converged: true, trace: alloc::vec![unet.ee] };
    Ok(assemble(scheme, phases, unet, inet, &conv, false))
}

/// Run one continuous phase optimizer and cooperate with the IoT network.
pub fn run_continuous(s: &Scenario, real: &ChannelRealization, method: PhaseMethod, bf: BfScheme, streams: &TrialStreams) -> Result<SchemeOutcome> {
    let pd = match method {
        PhaseMethod::AoSdr => run_ao(s, &real.users, bf, &mut streams.rng(Stream::Randomization))?,
        PhaseMethod::LcasEbcd => run_lcas(s, &real.users, bf)?,
    };
    let inet = phase_cooperation(s, &real.devices, &pd.phases, bf)?;
    let kind = match method {
        PhaseMethod::AoSdr => SchemeKind::AoSdr,
        PhaseMethod::LcasEbcd => SchemeKind::LcasEbcd,
    };
    Ok(assemble(SchemeId { kind, bf }, pd.phases, pd.unet, inet, &pd.convergence, pd.sdr_relaxed))
}

/// Quantize the phases of a continuous outcome and re-solve both networks.
pub fn quantized(s: &Scenario, real: &ChannelRealization, continuous: &SchemeOutcome, bits: u32) -> Result<SchemeOutcome> {
    let source = match continuous.report.scheme.kind {
        SchemeKind::LcasEbcd => PhaseMethod::LcasEbcd,
        _ => PhaseMethod::AoSdr,
    };
    let scheme = SchemeId { kind: SchemeKind::Dps { bits, source }, bf: continuous.report.scheme.bf };
    let phases = continuous.phases.quantize(bits);
    let mut out = fixed_phases(s, real, scheme, phases)?;
    out.report.iterations_outer = continuous.report.iterations_outer;
    out.report.converged = continuous.report.converged;
    out.report.flags.sdr_relaxed = continuous.report.flags.sdr_relaxed;
    Ok(out)
}

/// Run a single scheme on one realization.
pub fn apply_baseline(s: &Scenario, real: &ChannelRealization, scheme: SchemeId, streams: &TrialStreams) -> Result<SchemeOutcome> {
    let mut cache = Vec::new();
    evaluate_one(s, real, scheme, streams, &mut cache)
}

type Cache = Vec<((PhaseMethod, BfScheme), Result<SchemeOutcome>)>;

fn evaluate_one(s: &Scenario, real: &ChannelRealization, scheme: SchemeId, streams: &TrialStreams, cache: &mut Cache) -> Result<SchemeOutcome> {
    let mut continuous = |method: PhaseMethod| -> Result<SchemeOutcome> {
        let key = (method, scheme.bf);
        if let Some((_, v)) = cache.iter().find(|(k, _)| *k == key) {
            return v.clone();
        }
        let v = run_continuous(s, real, method, scheme.bf, streams);
        cache.push((key, v.clone()));
        v
    };
    match scheme.kind {
        SchemeKind::AoSdr => continuous(PhaseMethod::AoSdr),
        SchemeKind::LcasEbcd => continuous(PhaseMethod::LcasEbcd),
        SchemeKind::Dps { bits, source } => quantized(s, real, &continuous(source)?, bits),
        SchemeKind::Rps => {
            let phases = PhaseShifts::random(s.n_irs, &mut streams.rng(Stream::RandomPhases));
            fixed_phases(s, real, scheme, phases)
        }
        SchemeKind::NoIrs => {
            let bare = real.without_irs();
            fixed_phases(s, &bare, scheme, PhaseShifts::ones(s.n_irs))
        }
    }
}

/// Placement and channels of trial `trial`.
pub fn realization(s: &Scenario, trial: u64) -> (TrialStreams, ChannelRealization) {
    let streams = s.trial(trial);
    let placement = s.place(&streams);
    let real = crate::channel::draw_channels(s, &placement, &streams);
    (streams, real)
}

/// Run several schemes on one realization, sharing continuous phase
/// solutions between a scheme and its quantized variants.
pub fn evaluate_schemes(s: &Scenario, real: &ChannelRealization, schemes: &[SchemeId], streams: &TrialStreams) -> Vec<Result<SchemeOutcome>> {
    let mut cache = Vec::new();
    schemes.iter().map(|&id| evaluate_one(s, real, id, streams, &mut cache)).collect()
}
