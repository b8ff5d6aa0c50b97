//! Heuristic transmit beamforming.
//!
//! Every scheme first fixes unit-norm beam directions `w̄_k` and then
//! assigns powers. The minimum powers that meet all SINR targets with
//! equality solve the `K × K` system `A p = σ²·1` with
//! `A_kk = |f_kᴴ w̄_k|²/Γ` and `A_ki = −|f_kᴴ w̄_i|²`.
//!
//! Direction families:
//! * Lagrangian: `(I + Σ_i λ_i/σ² f_i f_iᴴ)⁻¹ f_k` with `λ` from the dual
//!   fixed point, which is the minimum-power optimum.
//! * ZF: columns of `F (Fᴴ F)⁻¹`.
//! * MMSE: columns of `F (I + λ/σ² Fᴴ F)⁻¹` for a scalar `λ`.

#[allow(unused_imports)] // idle when std is linked
use num_traits::Float;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{col, gemm, hermitize, hpd_inverse, singular_values, solve_real, CMat, Op, RMat, C64};
use crate::metrics;

/// Relative tolerance for declaring an SINR target met.
pub const SINR_TOL: f64 = 1e-6;
/// Singular-value ratio below which `F` is treated as rank deficient.
pub const RANK_TOL: f64 = 1e-7;

/// Beam-direction family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BfScheme {
    Mmse,
    Zf,
    Lagrangian,
}

impl BfScheme {
    pub fn label(self) -> &'static str {
        match self {
            BfScheme::Mmse => "mmse",
            BfScheme::Zf => "zf",
            BfScheme::Lagrangian => "lagrangian",
        }
    }
}

/// SINR target and noise power of one network.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Targets {
    /// Linear SINR target Γ.
    pub gamma: f64,
    /// Noise power σ².
    pub sigma2: f64,
}

/// Beamformers with the quantities that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamformingSolution {
    /// `M × K`, column `k` is `w_k`.
    pub w: CMat,
    /// Dual variables of the Lagrangian scheme. Empty for ZF; for MMSE it
    /// holds the scalar regularization `λ` once.
    pub lambda: Vec<f64>,
    /// Power of each beam, `‖w_k‖²`.
    pub powers: Vec<f64>,
    pub scheme: BfScheme,
    /// Every SINR target is met within [`SINR_TOL`].
    pub feasible: bool,
}

impl BeamformingSolution {
    /// Scale unit directions by `√p_k` and evaluate feasibility.
    pub fn from_directions(
        f: &CMat,
        dirs: &CMat,
        powers: Vec<f64>,
        lambda: Vec<f64>,
        scheme: BfScheme,
        targets: Targets,
    ) -> Self {
        let w = scale_columns(dirs, &powers);
        let feasible = metrics::sinr(f, &w, targets.sigma2).iter().all(|&s| s >= targets.gamma * (1.0 - SINR_TOL));
        Self { w, lambda, powers, scheme, feasible }
    }

    /// Total radiated power.
    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    /// Copy with every beam power multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64, f: &CMat, targets: Targets) -> Self {
        let powers: Vec<f64> = self.powers.iter().map(|p| p * alpha).collect();
        let mut w = self.w.clone();
        w *= C64::new(alpha.sqrt(), 0.0);
        let feasible = metrics::sinr(f, &w, targets.sigma2).iter().all(|&s| s >= targets.gamma * (1.0 - SINR_TOL));
        Self { w, lambda: self.lambda.clone(), powers, scheme: self.scheme, feasible }
    }
}

fn scale_columns(dirs: &CMat, powers: &[f64]) -> CMat {
    let mut w = dirs.clone();
    for (k, mut c) in w.column_iter_mut().enumerate() {
        c *= C64::new(powers[k].max(0.0).sqrt(), 0.0);
    }
    w
}

fn normalize_columns(mut m: CMat) -> CMat {
    for mut c in m.column_iter_mut() {
        let n = c.norm();
        if n > 0.0 {
            c /= C64::new(n, 0.0);
        }
    }
    m
}

/// Check each user's SINR constraint in its second-order-cone form:
/// `Re(f_kᴴ w_k)/√(Γσ²) ≥ √(Σ_{i≠k} |f_kᴴ w_i|²/σ² + 1)`, after rotating
/// `w_k` so that `f_kᴴ w_k` is real and nonnegative.
pub fn socp_reform_check(f: &CMat, w: &CMat, gamma: f64, sigma2: f64) -> Vec<bool> {
    let p = gemm(f, Op::H, w, Op::N);
    let k = p.nrows();
    (0..k)
        .map(|u| {
            // Rotating w_u by e^{-j arg} makes the inner product |f_uᴴ w_u|.
            let lhs = p[(u, u)].norm() / (gamma * sigma2).sqrt();
            let interference: f64 = (0..k).filter(|&i| i != u).map(|i| p[(u, i)].norm_sqr()).sum();
            let rhs = (interference / sigma2 + 1.0).sqrt();
            lhs >= rhs * (1.0 - 1e-12)
        })
        .collect()
}

/// Minimum powers meeting every target with equality for fixed directions.
///
/// Fails if the system is singular or any power comes out nonpositive,
/// which means the targets are unreachable with these directions.
pub fn min_power_allocation(f: &CMat, dirs: &CMat, targets: Targets) -> Result<Vec<f64>> {
    let g = metrics::gain_table(f, dirs);
    let k = g.len();
    let a = RMat::from_fn(k, k, |r, c| if r == c { g[r][r] / targets.gamma } else { -g[r][c] });
    let rhs = alloc::vec![targets.sigma2; k];
    let p = solve_real(a, &rhs).ok_or(Error::Singular("power allocation"))?;
    if p.iter().all(|&v| v > 0.0 && v.is_finite()) {
        Ok(p)
    } else {
        Err(Error::InfeasibleTargets)
    }
}

fn regularized(f: &CMat, weights: &[f64], sigma2: f64) -> CMat {
    // I + Σ_i (λ_i/σ²) f_i f_iᴴ
    let m = f.nrows();
    let mut fw = f.clone();
    for (i, mut c) in fw.column_iter_mut().enumerate() {
        c *= C64::new(weights[i] / sigma2, 0.0);
    }
    let mut s = gemm(&fw, Op::N, f, Op::H);
    for d in 0..m {
        s[(d, d)] += C64::new(1.0, 0.0);
    }
    hermitize(&mut s);
    s
}

/// Dual variables of the minimum-power problem by fixed-point iteration
/// `λ_k ← σ² / ((1 + 1/Γ) f_kᴴ S⁻¹ f_k)`, `S = I + Σ_i λ_i/σ² f_i f_iᴴ`.
///
/// `budget` only bounds divergence: if `Σλ` exceeds it by six orders of
/// magnitude the targets are declared infeasible.
pub fn solve_dual_fixed_point(f: &CMat, gamma: f64, sigma2: f64, budget: f64) -> Result<Vec<f64>> {
    const MAX_ITER: usize = 500;
    const TOL: f64 = 1e-8;
    let k = f.ncols();
    if k > f.nrows() {
        return Err(Error::DimensionMismatch { context: "dual fixed point: K <= M", expected: f.nrows(), found: k });
    }
    let mut lambda: Vec<f64> = (0..k).map(|u| gamma * sigma2 / col(f, u).norm_squared()).collect();
    if lambda.iter().any(|l| !l.is_finite()) {
        return Err(Error::Singular("dual fixed point: zero channel"));
    }
    for _ in 0..MAX_ITER {
        let s_inv = hpd_inverse(&regularized(f, &lambda, sigma2)).ok_or(Error::Singular("dual fixed point"))?;
        let sf = &s_inv * f;
        let mut change: f64 = 0.0;
        let next: Vec<f64> = (0..k)
            .map(|u| {
                let q = col(f, u).dotc(&sf.column(u)).re;
                let v = sigma2 / ((1.0 + 1.0 / gamma) * q);
                change = change.max(((v - lambda[u]) / v).abs());
                v
            })
            .collect();
        lambda = next;
        if !lambda.iter().all(|v| v.is_finite() && *v > 0.0) || lambda.iter().sum::<f64>() > budget * 1e6 {
            return Err(Error::InfeasibleTargets);
        }
        if change < TOL {
            return Ok(lambda);
        }
    }
    Err(Error::NotConverged { method: "dual fixed point", iterations: MAX_ITER })
}

/// Minimum-power beamformers for the given duals.
pub fn beamform_lagrangian(f: &CMat, lambda: &[f64], gamma: f64, sigma2: f64) -> Result<BeamformingSolution> {
    check_dim("beamform_lagrangian: lambda", f.ncols(), lambda.len())?;
    let s_inv = hpd_inverse(&regularized(f, lambda, sigma2)).ok_or(Error::Singular("lagrangian directions"))?;
    let dirs = normalize_columns(&s_inv * f);
    let targets = Targets { gamma, sigma2 };
    let p = min_power_allocation(f, &dirs, targets)?;
    Ok(BeamformingSolution::from_directions(f, &dirs, p, lambda.to_vec(), BfScheme::Lagrangian, targets))
}

/// Unit-norm zero-forcing directions, the normalized columns of `F(FᴴF)⁻¹`.
pub fn zf_directions(f: &CMat) -> Result<CMat> {
    let (m, k) = f.shape();
    if k > m {
        return Err(Error::DimensionMismatch { context: "zero forcing: K <= M", expected: m, found: k });
    }
    let sv = singular_values(f);
    let (hi, lo) = (sv[0], sv[k - 1]);
    if !(lo > RANK_TOL * hi) {
        return Err(Error::RankDeficient { condition: hi / lo });
    }
    let gram = gemm(f, Op::H, f, Op::N);
    let inv = hpd_inverse(&gram).ok_or(Error::RankDeficient { condition: hi / lo })?;
    Ok(normalize_columns(f * inv))
}

/// Unit-norm MMSE directions, the normalized columns of `F(I + λ/σ² FᴴF)⁻¹`.
pub fn mmse_directions(f: &CMat, lambda: f64, sigma2: f64) -> Result<CMat> {
    let k = f.ncols();
    let mut a = gemm(f, Op::H, f, Op::N) * C64::new(lambda / sigma2, 0.0);
    for d in 0..k {
        a[(d, d)] += C64::new(1.0, 0.0);
    }
    hermitize(&mut a);
    let inv = hpd_inverse(&a).ok_or(Error::Singular("mmse directions"))?;
    Ok(normalize_columns(f * inv))
}

/// ZF beamformers with the given per-beam powers.
pub fn beamform_zf(f: &CMat, powers: &[f64], targets: Targets) -> Result<BeamformingSolution> {
    check_dim("beamform_zf: powers", f.ncols(), powers.len())?;
    let dirs = zf_directions(f)?;
    Ok(BeamformingSolution::from_directions(f, &dirs, powers.to_vec(), Vec::new(), BfScheme::Zf, targets))
}

/// MMSE beamformers with regularization `lambda` and per-beam powers.
pub fn beamform_mmse(f: &CMat, lambda: f64, powers: &[f64], targets: Targets) -> Result<BeamformingSolution> {
    check_dim("beamform_mmse: powers", f.ncols(), powers.len())?;
    if !(lambda > 0.0) {
        return Err(Error::Singular("mmse: lambda must be positive"));
    }
    let dirs = mmse_directions(f, lambda, targets.sigma2)?;
    Ok(BeamformingSolution::from_directions(f, &dirs, powers.to_vec(), alloc::vec![lambda], BfScheme::Mmse, targets))
}

/// Search the MMSE regularization on a log grid centred at `budget/K`.
///
/// A coarse pass spans ±6 decades in one-decade steps; the best coarse
/// point is refined over its neighbouring decades with step `step`
/// (in decades). `evaluate(λ, directions)` returns a finished solution and
/// its EE, or `None` when `λ` gives no usable solution. Among equal EE
/// values the smallest `λ` wins. Returns `None` when nothing was usable.
pub fn mmse_line_search<E>(
    f: &CMat,
    budget: f64,
    sigma2: f64,
    step: f64,
    mut evaluate: E,
) -> Option<(f64, BeamformingSolution, f64)>
where
    E: FnMut(f64, &CMat) -> Option<(BeamformingSolution, f64)>,
{
    let center = (budget / f.ncols() as f64).log10();
    let mut evaluated: Vec<(f64, Option<(BeamformingSolution, f64)>)> = Vec::new();
    let mut run = |e: f64, evaluated: &mut Vec<(f64, Option<(BeamformingSolution, f64)>)>| {
        if evaluated.iter().any(|(x, _)| (*x - e).abs() < 1e-12) {
            return;
        }
        let lambda = 10f64.powf(e);
        let out = mmse_directions(f, lambda, sigma2).ok().and_then(|d| evaluate(lambda, &d));
        evaluated.push((e, out));
    };
    for j in -6..=6 {
        run(center + j as f64, &mut evaluated);
    }
    let best_coarse = best_index(&evaluated)?;
    let e0 = evaluated[best_coarse].0;
    let half = (1.0 / step).round() as i64;
    for j in -half..=half {
        run(e0 + j as f64 * step, &mut evaluated);
    }
    let best = best_index(&evaluated)?;
    let (e, out) = evaluated.swap_remove(best);
    let (sol, ee) = out?;
    Some((10f64.powf(e), sol, ee))
}

fn best_index(v: &[(f64, Option<(BeamformingSolution, f64)>)]) -> Option<usize> {
    let mut best: Option<(usize, f64, f64)> = None;
    for (i, (e, out)) in v.iter().enumerate() {
        if let Some((_, ee)) = out {
            let better = match best {
                None => true,
                Some((_, be, bee)) => *ee > bee || (*ee == bee && *e < be),
            };
            if better {
                best = Some((i, *e, *ee));
            }
        }
    }
    best.map(|b| b.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_normal, CVec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(m: usize, k: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(m, k, |_, _| complex_normal(&mut rng))
    }

    const T: Targets = Targets { gamma: 2.0, sigma2: 0.1 };

    #[test]
    fn single_user_closed_form() {
        let f = random(4, 1, 1);
        let nf = f.norm_squared();
        let lam = solve_dual_fixed_point(&f, T.gamma, T.sigma2, 1.0).unwrap();
        assert!((lam[0] - T.gamma * T.sigma2 / nf).abs() < 1e-12);
        let sol = beamform_lagrangian(&f, &lam, T.gamma, T.sigma2).unwrap();
        assert!((sol.powers[0] - T.gamma * T.sigma2 / nf).abs() < 1e-12);
        // MRT direction
        let mrt = &f / C64::new(nf.sqrt(), 0.0);
        let w = &sol.w / C64::new(sol.powers[0].sqrt(), 0.0);
        assert!((w.dotc(&mrt).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_users_decouple() {
        let mut f = CMat::zeros(3, 2);
        f[(0, 0)] = C64::new(2.0, 0.0);
        f[(1, 1)] = C64::new(0.0, 0.5);
        let lam = solve_dual_fixed_point(&f, T.gamma, T.sigma2, 1.0).unwrap();
        let sol = beamform_lagrangian(&f, &lam, T.gamma, T.sigma2).unwrap();
        assert!((sol.powers[0] - T.gamma * T.sigma2 / 4.0).abs() < 1e-10);
        assert!((sol.powers[1] - T.gamma * T.sigma2 / 0.25).abs() < 1e-10);
    }

    #[test]
    fn lagrangian_meets_targets_with_equality_and_duality() {
        for seed in 0..20 {
            let f = random(4, 2, 100 + seed);
            let lam = solve_dual_fixed_point(&f, T.gamma, T.sigma2, 10.0).unwrap();
            let sol = beamform_lagrangian(&f, &lam, T.gamma, T.sigma2).unwrap();
            for s in metrics::sinr(&f, &sol.w, T.sigma2) {
                assert!((s / T.gamma - 1.0).abs() < 1e-6);
            }
            let sl: f64 = lam.iter().sum();
            assert!((sl / sol.total_power() - 1.0).abs() < 1e-4, "{sl} vs {}", sol.total_power());
            assert!(sol.feasible);
        }
    }

    #[test]
    fn zf_nulls_interference() {
        let f = random(6, 3, 7);
        let sol = beamform_zf(&f, &[1.0, 2.0, 3.0], T).unwrap();
        let p = f.adjoint() * &sol.w;
        for i in 0..3 {
            for k in 0..3 {
                if i != k {
                    assert!(p[(i, k)].norm() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn zf_on_orthonormal_is_matched_filter() {
        let f = CMat::identity(3, 2);
        let d = zf_directions(&f).unwrap();
        assert!((d - f).norm() < 1e-14);
    }

    #[test]
    fn zf_rejects_ill_conditioned() {
        let mut f = random(3, 3, 9);
        let c0 = f.column(0).into_owned();
        let c1 = f.column(1).into_owned();
        f.set_column(2, &(c0 + c1 * C64::new(1.0, 0.0) + CVec::from_element(3, C64::new(1e-9, 0.0))));
        assert!(matches!(zf_directions(&f), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn mmse_limits() {
        let f = random(6, 3, 11);
        let zf = zf_directions(&f).unwrap();
        let mm = mmse_directions(&f, 1e8, 1.0).unwrap();
        for k in 0..3 {
            let c = zf.column(k).dotc(&mm.column(k)).norm().min(1.0);
            assert!(c.acos() < 1e-4);
        }
        let mf = mmse_directions(&f, 1e-12, 1.0).unwrap();
        let mrt = normalize_columns(f.clone());
        assert!((mf - mrt).norm() < 1e-9);
        let f1 = random(4, 1, 12);
        let a = mmse_directions(&f1, 3.0, 1.0).unwrap();
        let b = mmse_directions(&f1, 3e5, 1.0).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn min_power_matches_targets_for_zf() {
        let f = random(6, 3, 13);
        let d = zf_directions(&f).unwrap();
        let p = min_power_allocation(&f, &d, T).unwrap();
        let sol = BeamformingSolution::from_directions(&f, &d, p, Vec::new(), BfScheme::Zf, T);
        assert!(sol.feasible);
        for s in metrics::sinr(&f, &sol.w, T.sigma2) {
            assert!((s / T.gamma - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn socp_check_boundary_and_zero() {
        let f = CMat::from_element(2, 1, C64::new(1.0, 0.0));
        // ‖f‖²‖w‖² = Γσ² with w aligned
        let p = T.gamma * T.sigma2 / 2.0;
        let w = &f / C64::new(2f64.sqrt(), 0.0) * C64::new(p.sqrt(), 0.0);
        assert_eq!(socp_reform_check(&f, &w, T.gamma, T.sigma2), alloc::vec![true]);
        assert_eq!(socp_reform_check(&f, &CMat::zeros(2, 1), T.gamma, T.sigma2), alloc::vec![false]);
    }

    #[test]
    fn line_search_finds_unimodal_peak() {
        let f = random(4, 2, 14);
        let target = 0.37f64; // log10 of the optimum
        let (lam, _, _) = mmse_line_search(&f, 2.0, 1.0, 0.1, |l, d| {
            let e = -(l.log10() - target).powi(2);
            Some((BeamformingSolution::from_directions(&f, d, alloc::vec![1.0; 2], alloc::vec![l], BfScheme::Mmse, T), e))
        })
        .unwrap();
        assert!((lam.log10() - target).abs() <= 0.1 + 1e-12);
    }

    #[test]
    fn line_search_includes_default_lambda() {
        let f = random(4, 2, 15);
        let mut seen = Vec::new();
        let _ = mmse_line_search(&f, 3.0, 1.0, 0.1, |l, _| {
            seen.push(l);
            None
        });
        assert!(seen.iter().any(|&l| (l / 1.5 - 1.0).abs() < 1e-12));
    }
}
