//! Power-splitting SWIPT receivers of the IoT network.
//!
//! Device `k` routes a fraction `φ_k` of its received power to the
//! harvester and `1 − φ_k` to the decoder. Its decoding SINR is
//! `(1−φ)|f_kᴴw_k|² / ((1−φ)Σ_{j≠k}|f_kᴴw_j|² + σ²)` and it harvests
//! `φ μ Σ_j |f_kᴴw_j|²`. The largest `φ` that still meets the SINR target is
//! `1 − Γσ²/(S_k − Γ I_k)`; backing off by a slack `ε` keeps the target met
//! strictly.

use alloc::vec::Vec;

use crate::beamforming::{BeamformingSolution, Targets, SINR_TOL};
use crate::linalg::CMat;
use crate::metrics;

/// Splitting ratios; `None` marks a device that cannot meet its target.
#[derive(Clone, Debug, PartialEq)]
pub struct PsCoefficients {
    pub phi: Vec<Option<f64>>,
}

impl PsCoefficients {
    /// Ratios with infeasible devices mapped to `0` (decode everything).
    pub fn values(&self) -> Vec<f64> {
        self.phi.iter().map(|p| p.unwrap_or(0.0)).collect()
    }

    pub fn all_feasible(&self) -> bool {
        self.phi.iter().all(Option::is_some)
    }
}

/// Everything the IoT-network objective and constraints need.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwiptParams {
    pub targets: Targets,
    /// Splitting slack ε.
    pub slack: f64,
    /// Harvesting efficiency μ.
    pub eh_efficiency: f64,
    /// Minimum harvested power, W.
    pub eh_min: f64,
    /// Amplifier efficiency η.
    pub amp_efficiency: f64,
    /// Circuit power, W.
    pub circuit: f64,
    /// Transmit budget, W.
    pub budget: f64,
    pub bandwidth_hz: f64,
}

/// Evaluation of one IoT-network operating point.
#[derive(Clone, Debug, PartialEq)]
pub struct SwiptReport {
    pub phi: PsCoefficients,
    /// Decoding SINR per device.
    pub sinr_id: Vec<f64>,
    /// `log2(1 + SINR)` per device, zero for infeasible devices.
    pub rates: Vec<f64>,
    pub sum_rate: f64,
    /// Harvested power per device, W.
    pub harvested: Vec<f64>,
    pub total_power: f64,
    /// Bits per joule.
    pub ee: f64,
    /// Decoding target met, per device.
    pub sinr_ok: Vec<bool>,
    /// Harvesting requirement met, per device.
    pub eh_ok: Vec<bool>,
    pub budget_ok: bool,
}

impl SwiptReport {
    pub fn feasible(&self) -> bool {
        self.budget_ok && self.sinr_ok.iter().all(|&b| b) && self.eh_ok.iter().all(|&b| b)
    }
}

fn signal_interference(f: &CMat, w: &CMat) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let g = metrics::gain_table(f, w);
    let k = g.len();
    let s: Vec<f64> = (0..k).map(|u| g[u][u]).collect();
    let i: Vec<f64> = (0..k).map(|u| g[u].iter().sum::<f64>() - g[u][u]).collect();
    let total: Vec<f64> = g.iter().map(|r| r.iter().sum()).collect();
    (s, i, total)
}

/// Decoding SINR with splitting ratios `phi`.
pub fn swipt_sinr(f: &CMat, w: &CMat, phi: &[f64], sigma2: f64) -> Vec<f64> {
    let (s, i, _) = signal_interference(f, w);
    (0..s.len()).map(|k| (1.0 - phi[k]) * s[k] / ((1.0 - phi[k]) * i[k] + sigma2)).collect()
}

/// Closed-form splitting ratio `φ_k = 1 − Γσ²/(S_k − Γ I_k) − ε`.
pub fn optimize_ps(f: &CMat, w: &CMat, gamma: f64, sigma2: f64, eps: f64) -> PsCoefficients {
    let (s, i, _) = signal_interference(f, w);
    let phi = (0..s.len())
        .map(|k| {
            let margin = s[k] - gamma * i[k];
            if margin <= gamma * sigma2 {
                return None;
            }
            let p = 1.0 - gamma * sigma2 / margin - eps;
            (p > 0.0 && p < 1.0).then_some(p)
        })
        .collect();
    PsCoefficients { phi }
}

/// Harvested power `φ_k μ Σ_j |f_kᴴ w_j|²`.
pub fn harvested_energy(f: &CMat, w: &CMat, phi: &[f64], mu: f64) -> Vec<f64> {
    let (_, _, total) = signal_interference(f, w);
    total.iter().zip(phi).map(|(t, p)| p * mu * t).collect()
}

/// `B·R / (P/η + P_C)`.
pub fn inet_ee(sum_rate: f64, radiated: f64, circuit: f64, eta: f64, bandwidth_hz: f64) -> f64 {
    metrics::energy_efficiency(sum_rate, radiated, eta, circuit, bandwidth_hz)
}

/// Evaluate beamformers `w` with the closed-form splitting ratios.
pub fn evaluate(f: &CMat, w: &CMat, params: &SwiptParams) -> SwiptReport {
    let t = params.targets;
    let phi = optimize_ps(f, w, t.gamma, t.sigma2, params.slack);
    let values = phi.values();
    let sinr_id = swipt_sinr(f, w, &values, t.sigma2);
    let harvested = harvested_energy(f, w, &values, params.eh_efficiency);
    let sinr_ok: Vec<bool> =
        phi.phi.iter().zip(&sinr_id).map(|(p, s)| p.is_some() && *s >= t.gamma * (1.0 - SINR_TOL)).collect();
    let eh_ok: Vec<bool> = harvested.iter().map(|&e| e >= params.eh_min * (1.0 - 1e-9)).collect();
    let rates: Vec<f64> = sinr_id.iter().zip(&sinr_ok).map(|(s, ok)| if *ok { metrics::rate(*s) } else { 0.0 }).collect();
    let sum_rate = rates.iter().sum();
    let total_power = metrics::radiated_power(w);
    let ee = inet_ee(sum_rate, total_power, params.circuit, params.amp_efficiency, params.bandwidth_hz);
    SwiptReport {
        phi,
        sinr_id,
        rates,
        sum_rate,
        harvested,
        total_power,
        ee,
        sinr_ok,
        eh_ok,
        budget_ok: total_power <= params.budget * (1.0 + 1e-9),
    }
}

/// Scale minimum-power beamformers `base` (every target met with equality
/// at noise σ²) by the smallest common factor that lets every device meet
/// its harvesting requirement after splitting, capped by the budget.
///
/// Scaling by `α` turns the splitting ratio into `φ_k = 1 − D_k/α − ε` with
/// `D_k = Γσ²/(S_k − Γ I_k)` at `α = 1`, so the harvesting requirement
/// `φ_k μ α R_k ≥ Ē` reads `α ≥ (Ē/(μ R_k) + D_k)/(1 − ε)`. The rate is
/// pinned near the target by the splitting rule, so the smallest such `α`
/// is also the most energy-efficient one.
pub fn scale_for_harvesting(f: &CMat, base: &BeamformingSolution, params: &SwiptParams) -> (BeamformingSolution, SwiptReport) {
    let t = params.targets;
    let (s, i, total) = signal_interference(f, &base.w);
    let eps = params.slack;
    let mut alpha: f64 = 1.0;
    for k in 0..s.len() {
        let margin = s[k] - t.gamma * i[k];
        let d = if margin > 0.0 { t.gamma * t.sigma2 / margin } else { f64::INFINITY };
        // Keep φ ≥ ε so the harvesting branch is never degenerate.
        let for_phi = d / (1.0 - 2.0 * eps);
        let for_eh = (params.eh_min / (params.eh_efficiency * total[k]) + d) / (1.0 - eps);
        alpha = alpha.max(for_phi).max(for_eh);
    }
    let p0 = base.total_power();
    let cap = params.budget / p0;
    if !(alpha <= cap) {
        alpha = cap.max(0.0);
    }
    let sol = base.scaled(alpha, f, t);
    let report = evaluate(f, &sol.w, params);
    (sol, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::{min_power_allocation, zf_directions, BfScheme};
    use crate::linalg::{complex_normal, C64};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(v: f64) -> CMat {
        CMat::from_element(1, 1, C64::new(v, 0.0))
    }

    #[test]
    fn closed_form_by_hand() {
        // |fᴴw|² = 2, Γ = 1, σ² = 0.5, ε = 1e-5
        let f = scalar(1.0);
        let w = scalar(2f64.sqrt());
        let p = optimize_ps(&f, &w, 1.0, 0.5, 1e-5);
        assert!((p.phi[0].unwrap() - 0.74999).abs() < 1e-12);
    }

    #[test]
    fn sinr_by_hand_and_limits() {
        let f = scalar(1.0);
        let w = scalar(2f64.sqrt());
        assert!((swipt_sinr(&f, &w, &[0.5], 1.0)[0] - 1.0).abs() < 1e-12);
        assert!(swipt_sinr(&f, &w, &[1.0 - 1e-15], 1.0)[0] < 1e-14);
    }

    #[test]
    fn infeasible_margin_rejected() {
        let f = scalar(1.0);
        let w = scalar(1.0);
        assert_eq!(optimize_ps(&f, &w, 2.0, 0.5, 1e-5).phi[0], None);
    }

    #[test]
    fn harvest_limits() {
        let f = scalar(1.0);
        let w = scalar(3.0);
        assert_eq!(harvested_energy(&f, &w, &[0.0], 0.8)[0], 0.0);
        assert!((harvested_energy(&f, &w, &[1.0], 1.0)[0] - 9.0).abs() < 1e-12);
    }

    #[test]
    fn ee_strictly_decreasing_in_circuit_power() {
        let a = inet_ee(5.0, 0.1, 0.01, 0.8, 1e6);
        let b = inet_ee(5.0, 0.1, 0.02, 0.8, 1e6);
        assert!(b < a);
        assert_eq!(inet_ee(0.0, 0.1, 0.01, 0.8, 1e6), 0.0);
    }

    #[test]
    fn harvesting_scale_meets_requirements() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = CMat::from_fn(6, 3, |_, _| complex_normal(&mut rng) * 1e-3);
        let t = Targets { gamma: 2.5, sigma2: 1e-11 };
        let d = zf_directions(&f).unwrap();
        let p = min_power_allocation(&f, &d, t).unwrap();
        let base = BeamformingSolution::from_directions(&f, &d, p, Vec::new(), BfScheme::Zf, t);
        let params = SwiptParams {
            targets: t,
            slack: 1e-5,
            eh_efficiency: 0.8,
            eh_min: 1e-9,
            amp_efficiency: 0.8,
            circuit: 3e-3,
            budget: 0.1,
            bandwidth_hz: 1e6,
        };
        let (sol, rep) = scale_for_harvesting(&f, &base, &params);
        assert!(rep.feasible(), "{rep:?}");
        // The binding device harvests exactly the requirement.
        let tightest = rep.harvested.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((tightest / params.eh_min - 1.0).abs() < 1e-6);
        assert!(sol.total_power() <= params.budget);
    }
}
