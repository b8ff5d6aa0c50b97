//! Element-wise block coordinate descent on the sum of effective channel
//! gains.
//!
//! With `v = conj(ν)`, `B = [B_1 … B_K]` (`B_k = diag(h_kᴴ)G`, `N × KM`)
//! and `d = [g_1; …; g_K]`, the objective is
//!
//! ```text
//! f(ν) = Σ_k ‖vᴴB_k + g_kᴴ‖² = ‖Bᴴv + d‖² = vᴴQv + 2·Re(vᴴϑ̃) + S
//! ```
//!
//! with `Q = BBᴴ`, `ϑ̃ = Bd`, `S = ‖d‖²`. Holding all but element `n` fixed,
//! `f = const + 2·Re(v_n* c_n)` where `c_n = Σ_{m≠n} Q_nm v_m + ϑ̃_n`, so the
//! exact block maximizer is `v_n = c_n/|c_n|` (any phase when `c_n = 0`;
//! we pick 1). The solver keeps `s = Bᴴv + d` up to date, which gives
//! `c_n = (Bs)_n − Q_nn v_n` in `O(KM)` per element and never forms `Q`.

use alloc::vec::Vec;

use crate::channel::{NetworkLinks, PhaseShifts};
use crate::error::{check_dim, Result};
use crate::linalg::{CMat, CVec, C64};

/// Precomputed data of one EBCD problem.
#[derive(Clone, Debug)]
pub struct EbcdInstance {
    /// `Bᵀ`, `KM × N`: column `n` is row `n` of `B`, stored contiguously.
    bt: CMat,
    /// `d`, length `KM`.
    offset: CVec,
    /// `Q_nn = ‖row n of B‖²`.
    q_diag: Vec<f64>,
    /// `ϑ̃ = B d`.
    vartheta_tilde: CVec,
    /// `S = ‖d‖²`.
    const_s: f64,
}

/// Outcome of [`run_ebcd`].
#[derive(Clone, Debug)]
pub struct EbcdResult {
    pub phases: PhaseShifts,
    pub objective: f64,
    /// Objective before the first sweep and after every sweep.
    pub trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Assemble the instance for a network's channels.
pub fn build_instance(links: &NetworkLinks) -> EbcdInstance {
    let couplings: Vec<CMat> = (0..links.receivers()).map(|k| links.cascade(k)).collect();
    EbcdInstance::from_parts(&couplings, &links.direct).expect("network links have consistent shapes")
}

impl EbcdInstance {
    /// Build from per-receiver couplings `B_k` (`N × M`) and offsets `d_k`.
    pub fn from_parts(couplings: &[CMat], offsets: &[CVec]) -> Result<Self> {
        check_dim("ebcd: offsets per coupling", couplings.len(), offsets.len())?;
        let n = couplings.first().map_or(0, |b| b.nrows());
        let mut len = 0;
        for (b, d) in couplings.iter().zip(offsets) {
            check_dim("ebcd: coupling rows", n, b.nrows())?;
            check_dim("ebcd: offset length", b.ncols(), d.len())?;
            len += b.ncols();
        }
        let mut bt = CMat::zeros(len, n);
        let mut offset = CVec::zeros(len);
        let mut row = 0;
        for (b, d) in couplings.iter().zip(offsets) {
            for j in 0..b.ncols() {
                for i in 0..n {
                    bt[(row + j, i)] = b[(i, j)];
                }
                offset[row + j] = d[j];
            }
            row += b.ncols();
        }
        let q_diag = (0..n).map(|i| bt.column(i).norm_squared()).collect();
        // ϑ̃_n = Σ_j B[n, j] d_j
        let vartheta_tilde = bt.tr_mul(&offset);
        let const_s = offset.norm_squared();
        Ok(Self { bt, offset, q_diag, vartheta_tilde, const_s })
    }

    pub fn elements(&self) -> usize {
        self.bt.ncols()
    }

    /// `Q = BBᴴ`, formed on request only.
    pub fn q(&self) -> CMat {
        self.bt.transpose() * self.bt.conjugate()
    }

    pub fn vartheta_tilde(&self) -> &CVec {
        &self.vartheta_tilde
    }

    pub fn const_s(&self) -> f64 {
        self.const_s
    }

    /// `s = Bᴴv + d` for `v = conj(ν)`.
    fn stacked(&self, nu: &PhaseShifts) -> CVec {
        let v = CVec::from_iterator(nu.len(), nu.as_slice().iter().map(|z| z.conj()));
        // Bᴴv = conj(Bᵀ) v
        self.bt.conjugate() * v + &self.offset
    }

    /// `Σ_k ‖vᴴB_k + d_kᴴ‖²` evaluated directly.
    pub fn objective(&self, nu: &PhaseShifts) -> f64 {
        self.stacked(nu).norm_squared()
    }

    /// The same objective through the quadratic decomposition.
    pub fn decomposed_objective(&self, nu: &PhaseShifts) -> f64 {
        let v = CVec::from_iterator(nu.len(), nu.as_slice().iter().map(|z| z.conj()));
        let quad = v.dotc(&(self.q() * &v)).re;
        quad + 2.0 * v.dotc(&self.vartheta_tilde).re + self.const_s
    }

    /// `c_n = Σ_{m≠n} Q_nm v_m + ϑ̃_n` given the current `s`.
    fn coupling(&self, s: &CVec, v_n: C64, n: usize) -> C64 {
        let b = self.bt.column(n);
        let mut acc = C64::new(0.0, 0.0);
        for (x, y) in b.iter().zip(s.iter()) {
            acc += x * y;
        }
        acc - v_n * self.q_diag[n]
    }

    /// Apply the closed-form update to element `n`, keeping `s` current.
    fn update_in_place(&self, s: &mut CVec, v: &mut [C64], n: usize) {
        let c = self.coupling(s, v[n], n);
        let r = c.norm();
        let new = if r == 0.0 { C64::new(1.0, 0.0) } else { c / r };
        let delta = new - v[n];
        if delta != C64::new(0.0, 0.0) {
            for (sj, bj) in s.iter_mut().zip(self.bt.column(n).iter()) {
                *sj += bj.conj() * delta;
            }
            v[n] = new;
        }
    }
}

/// Optimize element `n` with every other element held fixed.
pub fn update_element(inst: &EbcdInstance, nu: &PhaseShifts, n: usize) -> PhaseShifts {
    let mut s = inst.stacked(nu);
    let mut v: Vec<C64> = nu.as_slice().iter().map(|z| z.conj()).collect();
    inst.update_in_place(&mut s, &mut v, n);
    PhaseShifts::project(v.iter().map(|z| z.conj()))
}

/// Sweep elements in ascending order until the relative objective change
/// of a sweep drops below `xi`, or `max_sweeps` sweeps have run.
pub fn run_ebcd(inst: &EbcdInstance, nu0: &PhaseShifts, xi: f64, max_sweeps: usize) -> EbcdResult {
    let n = inst.elements();
    let mut v: Vec<C64> = nu0.as_slice().iter().map(|z| z.conj()).collect();
    let mut prev = inst.objective(nu0);
    let mut trace = alloc::vec![prev];
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        // Rebuilding s once per sweep costs the same as the sweep itself and
        // stops rounding drift from accumulating.
        let current = PhaseShifts::project(v.iter().map(|z| z.conj()));
        let mut s = inst.stacked(&current);
        for i in 0..n {
            inst.update_in_place(&mut s, &mut v, i);
        }
        sweeps += 1;
        let f = s.norm_squared();
        trace.push(f);
        let change = if f > 0.0 { (f - prev).abs() / f } else { 0.0 };
        prev = f;
        if change < xi {
            converged = true;
            break;
        }
    }
    let phases = PhaseShifts::project(v.iter().map(|z| z.conj()));
    let objective = inst.objective(&phases);
    EbcdResult { phases, objective, trace, sweeps, converged }
}
