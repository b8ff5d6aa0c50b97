//! Phase update by semidefinite relaxation.
//!
//! For fixed beamformers, user `k`'s useful and interfering terms are
//! `vᴴa_{i,k} + b_{i,k}` with `v = conj(ν)`, `a_{i,k} = diag(h_kᴴ)G w_i` and
//! `b_{i,k} = g_kᴴ w_i`. Lifting `v̄ = [v; 1]` and `V = v̄v̄ᴴ` makes each
//! term `Tr(V X_{i,k}) + |b_{i,k}|²` with
//! `X_{i,k} = [[a aᴴ, a b*], [b aᴴ, 0]]`. Dropping `rank(V) = 1` gives
//!
//! ```text
//! maximize  Σ_k β_k
//! s.t.      Tr(V X_kk) + |b_kk|² ≥ Γ(Σ_{i≠k} Tr(V X_ik) + |b_ik|² + σ²) + β_k
//!           diag(V) = 1,  V ⪰ 0,  β ≥ 0
//! ```
//!
//! All quantities are divided by σ², so the slacks `β_k` are SINR-margin
//! units. Since `diag(V) = 1`, `Tr(V X_ik) + |b_ik|² = u_ikᴴ V u_ik` with
//! `u_ik = [a_ik; b_ik]`, so each constraint is a weighted sum of rank-one
//! terms, which [`ipm`] exploits.

mod ipm;

#[allow(unused_imports)] // idle when std is linked
use num_traits::Float;
use alloc::vec::Vec;

use rand::Rng;

use crate::beamforming::BeamformingSolution;
use crate::channel::{NetworkLinks, PhaseShifts};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{complex_normal, gemm, hermitian_eigen, CMat, CVec, Op, RMat, C64};

/// Lifted SINR constraints of one network for fixed beamformers.
#[derive(Clone, Debug)]
pub struct LiftedInstance {
    n: usize,
    k: usize,
    /// `u_{i,k} = [a_{i,k}; b_{i,k}]` as column `k·K + i`.
    u: CMat,
    pub gamma: f64,
    pub sigma2: f64,
}

/// Result of the relaxed problem.
#[derive(Clone, Debug)]
pub struct SdpSolution {
    /// `(N+1) × (N+1)`, unit diagonal, PSD.
    pub v: CMat,
    /// Slacks `β_k ≥ 0` in units of σ².
    pub slack: Vec<f64>,
    /// `Σ_k β_k`.
    pub objective: f64,
    /// SINR target the solution was computed for. Lower than the
    /// instance target when that was infeasible.
    pub gamma_used: f64,
    /// `false` when the target had to be relaxed.
    pub at_target: bool,
    pub iterations: usize,
    /// Worst KKT residual of the interior-point solve, relative.
    pub residual: f64,
}

/// Result of Gaussian randomization.
#[derive(Clone, Debug)]
pub struct Randomized {
    pub phases: PhaseShifts,
    /// `Σ_k β_k` of the returned phases at the instance target.
    pub objective: f64,
    /// Every `β_k ≥ 0`.
    pub feasible: bool,
}

/// Build the lifted instance for `links` and beamformers `w`.
pub fn lift(links: &NetworkLinks, w: &BeamformingSolution, gamma: f64, sigma2: f64) -> Result<LiftedInstance> {
    let k = links.receivers();
    check_dim("lift: beams", k, w.w.ncols())?;
    check_dim("lift: antennas", links.antennas(), w.w.nrows())?;
    let a: Vec<CMat> = (0..k).map(|kk| links.cascade(kk) * &w.w).collect();
    let b: Vec<Vec<C64>> =
        (0..k).map(|kk| (0..k).map(|i| links.direct[kk].dotc(&w.w.column(i))).collect()).collect();
    Ok(LiftedInstance::from_terms(
        links.elements(),
        |i, kk| (a[kk].column(i).into_owned(), b[kk][i]),
        k,
        gamma,
        sigma2,
    ))
}

impl LiftedInstance {
    /// Build from a term generator `(i, k) ↦ (a_{i,k}, b_{i,k})`.
    pub fn from_terms(
        n: usize,
        mut term: impl FnMut(usize, usize) -> (CVec, C64),
        k: usize,
        gamma: f64,
        sigma2: f64,
    ) -> Self {
        let mut u = CMat::zeros(n + 1, k * k);
        for kk in 0..k {
            for i in 0..k {
                let (a, b) = term(i, kk);
                let c = kk * k + i;
                for r in 0..n {
                    u[(r, c)] = a[r];
                }
                u[(n, c)] = b;
            }
        }
        Self { n, k, u, gamma, sigma2 }
    }

    pub fn elements(&self) -> usize {
        self.n
    }

    pub fn users(&self) -> usize {
        self.k
    }

    /// `a_{i,k}`.
    pub fn a(&self, i: usize, k: usize) -> CVec {
        self.u.column(k * self.k + i).rows(0, self.n).into_owned()
    }

    /// `b_{i,k}`.
    pub fn b(&self, i: usize, k: usize) -> C64 {
        self.u[(self.n, k * self.k + i)]
    }

    /// `|b_{i,k}|²`.
    pub fn b_abs2(&self, i: usize, k: usize) -> f64 {
        self.b(i, k).norm_sqr()
    }

    /// The Hermitian `(N+1) × (N+1)` matrix `X_{i,k}`.
    pub fn x_mat(&self, i: usize, k: usize) -> CMat {
        let u = self.u.column(k * self.k + i).into_owned();
        let mut x = &u * u.adjoint();
        x[(self.n, self.n)] = C64::new(0.0, 0.0);
        x
    }

    /// Slacks `β_k` of unit-modulus phases at target `gamma`, σ² units.
    pub fn slacks_at(&self, nu: &PhaseShifts, gamma: f64) -> Vec<f64> {
        let vbar = CVec::from_iterator(
            self.n + 1,
            nu.as_slice().iter().map(|z| z.conj()).chain(core::iter::once(C64::new(1.0, 0.0))),
        );
        let y = self.u.ad_mul(&vbar);
        (0..self.k).map(|k| self.slack_from_products(|i| y[k * self.k + i].norm_sqr(), k, gamma)).collect()
    }

    /// Slacks at the instance target.
    pub fn slacks(&self, nu: &PhaseShifts) -> Vec<f64> {
        self.slacks_at(nu, self.gamma)
    }

    /// `Σ_k β_k` of unit-modulus phases.
    pub fn objective(&self, nu: &PhaseShifts) -> f64 {
        self.slacks(nu).iter().sum()
    }

    fn slack_from_products(&self, power: impl Fn(usize) -> f64, k: usize, gamma: f64) -> f64 {
        let signal = power(k);
        let interference: f64 = (0..self.k).filter(|&i| i != k).map(&power).sum();
        (signal - gamma * (interference + self.sigma2)) / self.sigma2
    }

    /// Relaxed problem: variables `V` and slacks `β`.
    fn main_problem(&self, gamma: f64) -> ipm::Problem {
        let k = self.k;
        let s2 = self.sigma2;
        let rows = (0..k)
            .map(|kk| (0..k).map(|i| (kk * k + i, if i == kk { 1.0 / s2 } else { -gamma / s2 })).collect())
            .collect();
        let mut g = RMat::zeros(k, k);
        for kk in 0..k {
            g[(kk, kk)] = -1.0;
        }
        ipm::Problem { n: self.n + 1, basis: self.u.clone(), rows, g, rhs: alloc::vec![gamma; k], cost: alloc::vec![1.0; k] }
    }

    /// Max-min margin problem, `t = t_lo + u`:
    /// `Tr(V C_k) + c_k − s_k − u = t_lo`, `s, u ≥ 0`, maximize `u`.
    fn phase_one(&self, gamma: f64) -> (ipm::Problem, f64) {
        let k = self.k;
        let mut main = self.main_problem(gamma);
        // Margin at V = I: Σ_c w_c ‖u_c‖² − Γ.
        let at_identity: Vec<f64> = main
            .rows
            .iter()
            .map(|row| row.iter().map(|&(c, w)| w * self.u.column(c).norm_squared()).sum::<f64>() - gamma)
            .collect();
        let t_lo = at_identity.iter().copied().fold(f64::INFINITY, f64::min) - 2.0;
        let mut g = RMat::zeros(k, k + 1);
        for kk in 0..k {
            g[(kk, kk)] = -1.0;
            g[(kk, k)] = -1.0;
        }
        main.g = g;
        main.rhs = alloc::vec![t_lo + gamma; k];
        let mut cost = alloc::vec![0.0; k + 1];
        cost[k] = 1.0;
        main.cost = cost;
        (main, t_lo)
    }

    /// Largest achievable minimum margin at `gamma`, σ² units.
    fn max_min_margin(&self, gamma: f64) -> Result<f64> {
        let (p, t_lo) = self.phase_one(gamma);
        let sol = ipm::solve(&p, ipm::Options::default())?;
        Ok(t_lo + sol.objective)
    }
}

fn finish_solution(sol: ipm::Solution, gamma: f64, at_target: bool) -> SdpSolution {
    let mut v = sol.x;
    // Rescale to an exactly unit diagonal; a congruence keeps V PSD.
    let d: Vec<f64> = (0..v.nrows()).map(|i| 1.0 / v[(i, i)].re.max(1e-300).sqrt()).collect();
    for j in 0..v.ncols() {
        for i in 0..v.nrows() {
            v[(i, j)] *= d[i] * d[j];
        }
        v[(j, j)] = C64::new(1.0, 0.0);
    }
    let slack: Vec<f64> = sol.lp.iter().map(|b| b.max(0.0)).collect();
    let objective = slack.iter().sum();
    SdpSolution { v, slack, objective, gamma_used: gamma, at_target, iterations: sol.iterations, residual: sol.residual }
}

/// Solve the relaxed phase problem.
pub fn solve_sdp(inst: &LiftedInstance) -> Result<SdpSolution> {
    solve_sdp_with_hint(inst, None)
}

/// Solve the relaxed phase problem, skipping the feasibility stage when
/// `hint` already meets every target.
///
/// If the target is infeasible, the largest feasible target is located by
/// bisection and the solution is marked `at_target = false`.
pub fn solve_sdp_with_hint(inst: &LiftedInstance, hint: Option<&PhaseShifts>) -> Result<SdpSolution> {
    let opts = ipm::Options::default();
    let feasible_hint = hint.is_some_and(|h| inst.slacks(h).iter().all(|&b| b >= -1e-9 * (1.0 + inst.gamma)));
    if feasible_hint || inst.max_min_margin(inst.gamma)? >= 0.0 {
        let sol = ipm::solve(&inst.main_problem(inst.gamma), opts)?;
        return Ok(finish_solution(sol, inst.gamma, true));
    }
    let (mut lo, mut hi) = (0.0, inst.gamma);
    if inst.max_min_margin(lo)? < 0.0 {
        return Err(Error::InfeasibleTargets);
    }
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if inst.max_min_margin(mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-4 * inst.gamma {
            break;
        }
    }
    let sol = ipm::solve(&inst.main_problem(lo), opts)?;
    Ok(finish_solution(sol, lo, false))
}

/// Recover unit-modulus phases from `sol` by Gaussian randomization.
///
/// Draws `v̄ = U Σ^{1/2} r` with `r ~ CN(0, I)` over the numerically
/// nonzero spectrum, projects `v = exp(j·arg(v̄_{1:N}/v̄_{N+1}))`, and keeps
/// the best draw: feasible draws (every `β_k ≥ 0`) beat infeasible ones,
/// feasible draws are ranked by `Σβ`, infeasible ones by `min β`. Ties keep
/// the earliest draw.
pub fn gaussian_randomize<R: Rng + ?Sized>(
    sol: &SdpSolution,
    inst: &LiftedInstance,
    count: usize,
    rng: &mut R,
) -> Randomized {
    const BATCH: usize = 256;
    let n = inst.n;
    let k = inst.k;
    let (vals, vecs) = hermitian_eigen(&sol.v);
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 1e-9 * top).collect();
    let rank = keep.len().max(1);
    let mut factor = CMat::zeros(n + 1, rank);
    if keep.is_empty() {
        factor.set_column(0, &vecs.column(vals.len() - 1));
    }
    for (j, &i) in keep.iter().enumerate() {
        let s = vals[i].sqrt();
        factor.set_column(j, &(vecs.column(i) * C64::new(s, 0.0)));
    }

    let mut best: Option<(Key, Vec<C64>, f64, bool)> = None;
    let mut done = 0;
    while done < count {
        let b = BATCH.min(count - done);
        let r = CMat::from_fn(rank, b, |_, _| complex_normal(rng));
        let draws = gemm(&factor, Op::N, &r, Op::N);
        let mut proj = CMat::zeros(n + 1, b);
        for j in 0..b {
            let anchor = draws[(n, j)];
            for i in 0..n {
                let z = draws[(i, j)] * anchor.conj();
                let m = z.norm();
                proj[(i, j)] = if m > 0.0 { z / m } else { C64::new(1.0, 0.0) };
            }
            proj[(n, j)] = C64::new(1.0, 0.0);
        }
        // y[(k·K + i, j)] = u_{i,k}ᴴ v̄_j
        let y = gemm(&inst.u, Op::H, &proj, Op::N);
        for j in 0..b {
            let slacks: Vec<f64> = (0..k)
                .map(|kk| inst.slack_from_products(|i| y[(kk * k + i, j)].norm_sqr(), kk, inst.gamma))
                .collect();
            let feasible = slacks.iter().all(|&s| s >= 0.0);
            let sum: f64 = slacks.iter().sum();
            let key = if feasible {
                Key { feasible: true, score: sum }
            } else {
                Key { feasible: false, score: slacks.iter().copied().fold(f64::INFINITY, f64::min) }
            };
            if best.as_ref().is_none_or(|(bk, ..)| key.beats(bk)) {
                let v: Vec<C64> = (0..n).map(|i| proj[(i, j)]).collect();
                best = Some((key, v, sum, feasible));
            }
        }
        done += b;
    }
    let (_, v, objective, feasible) = best.expect("count >= 1");
    // v = conj(ν)
    let phases = PhaseShifts::project(v.iter().map(|z| z.conj()));
    Randomized { phases, objective, feasible }
}

#[derive(Clone, Copy, Debug)]
struct Key {
    feasible: bool,
    score: f64,
}

impl Key {
    fn beats(&self, other: &Key) -> bool {
        match (self.feasible, other.feasible) {
            (true, false) => true,
            (false, true) => false,
            _ => self.score > other.score,
        }
    }
}

/// Eigenvalues of `V`, descending, for rank inspection.
pub fn spectrum(sol: &SdpSolution) -> Vec<f64> {
    let mut v = crate::linalg::hermitian_eigenvalues(&sol.v);
    v.reverse();
    v
}
