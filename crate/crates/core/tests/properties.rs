use phasecoop_core::beamforming::{beamform_lagrangian, beamform_zf, solve_dual_fixed_point, Targets};
use phasecoop_core::channel::{effective_channel, PhaseShifts};
use phasecoop_core::linalg::{cis, complex_normal, CMat, CVec, C64};
use phasecoop_core::metrics;
use phasecoop_core::phase_ebcd::{run_ebcd, update_element, EbcdInstance};
use phasecoop_core::swipt::{optimize_ps, swipt_sinr};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn gaussian(rows: usize, cols: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CMat::from_fn(rows, cols, |_, _| complex_normal(&mut rng))
}

fn gaussian_vec(len: usize, seed: u64) -> CVec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CVec::from_fn(len, |_, _| complex_normal(&mut rng))
}

fn ebcd_instance(n: usize, k: usize, m: usize, seed: u64) -> EbcdInstance {
    let couplings: Vec<CMat> = (0..k as u64).map(|u| gaussian(n, m, seed * 31 + u)).collect();
    let offsets: Vec<CVec> = (0..k as u64).map(|u| gaussian_vec(m, seed * 37 + 1000 + u) * C64::new(0.5, 0.0)).collect();
    EbcdInstance::from_parts(&couplings, &offsets).unwrap()
}

fn wrap(a: f64) -> f64 {
    let t = core::f64::consts::TAU;
    let r = a.rem_euclid(t);
    if r > t / 2.0 { r - t } else { r }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phases_stay_unit_modulus(angles in prop::collection::vec(-20.0f64..20.0, 1..40), bits in 1u32..8) {
        let nu = PhaseShifts::from_angles(&angles);
        let q = nu.quantize(bits);
        for z in nu.as_slice().iter().chain(q.as_slice()) {
            prop_assert!((z.norm() - 1.0).abs() < 1e-12);
        }
        let step = core::f64::consts::TAU / f64::from(1u32 << bits);
        for (a, b) in nu.angles().iter().zip(q.angles()) {
            prop_assert!(wrap(a - b).abs() <= step / 2.0 + 1e-9);
        }
        prop_assert_eq!(q.quantize(bits), q.clone());
        let again = PhaseShifts::project(nu.as_slice().iter().copied());
        for (a, b) in again.as_slice().iter().zip(nu.as_slice()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn effective_channel_decomposes_over_elements(n in 1usize..12, m in 1usize..6, seed in any::<u64>()) {
        let g = gaussian(n, m, seed);
        let h = gaussian_vec(n, seed ^ 0x55);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xaa);
        let nu = PhaseShifts::random(n, &mut rng);
        let zero = CVec::zeros(m);
        let whole = effective_channel(&h, &nu, &g, &zero).unwrap();
        let mut sum = CVec::zeros(m);
        for e in 0..n {
            let mut single = CVec::zeros(n);
            single[e] = h[e];
            sum += effective_channel(&single, &nu, &g, &zero).unwrap();
        }
        prop_assert!((whole - sum).norm() < 1e-10 * (1.0 + h.norm() * g.norm()));
    }

    #[test]
    fn global_phase_rotation_keeps_gain(n in 1usize..12, m in 1usize..6, phi in -3.2f64..3.2, seed in any::<u64>()) {
        let g = gaussian(n, m, seed);
        let h = gaussian_vec(n, seed ^ 0x55);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xaa);
        let nu = PhaseShifts::random(n, &mut rng);
        let rotated = PhaseShifts::project(nu.as_slice().iter().map(|z| z * cis(phi)));
        let zero = CVec::zeros(m);
        let a = effective_channel(&h, &nu, &g, &zero).unwrap().norm();
        let b = effective_channel(&h, &rotated, &g, &zero).unwrap().norm();
        prop_assert!((a - b).abs() < 1e-10 * (1.0 + a));
    }

    #[test]
    fn ebcd_updates_and_sweeps_never_decrease(n in 1usize..10, k in 1usize..4, m in 1usize..4, seed in 0u64..1_000_000, order in prop::collection::vec(0usize..64, 1..20)) {
        let inst = ebcd_instance(n, k, m, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut nu = PhaseShifts::random(n, &mut rng);
        for idx in order {
            let before = inst.objective(&nu);
            nu = update_element(&inst, &nu, idx % n);
            prop_assert!(inst.objective(&nu) >= before * (1.0 - 1e-12) - 1e-12);
        }
        let r = run_ebcd(&inst, &nu, 1e-3, 3000);
        prop_assert!(r.converged);
        prop_assert!(r.trace.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)));
        prop_assert!(r.phases.as_slice().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn minimum_power_beams_meet_targets_with_equality(k in 1usize..5, extra in 0usize..4, gamma_db in -3.0f64..8.0, seed in any::<u64>()) {
        let f = gaussian(k + extra, k, seed);
        let gamma = 10f64.powf(gamma_db / 10.0);
        let sigma2 = 0.1;
        let Ok(lam) = solve_dual_fixed_point(&f, gamma, sigma2, 1e3) else {
            // Tight targets on a nearly singular draw may be infeasible.
            return Ok(());
        };
        let sol = beamform_lagrangian(&f, &lam, gamma, sigma2).unwrap();
        for s in metrics::sinr(&f, &sol.w, sigma2) {
            prop_assert!((s / gamma - 1.0).abs() < 1e-6);
        }
        let dual: f64 = lam.iter().sum();
        prop_assert!((dual / sol.total_power() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn zero_forcing_nulls_interference(k in 1usize..5, extra in 0usize..4, seed in any::<u64>()) {
        let f = gaussian(k + extra, k, seed);
        let powers: Vec<f64> = (0..k).map(|i| 1.0 + i as f64).collect();
        let Ok(sol) = beamform_zf(&f, &powers, Targets { gamma: 1.0, sigma2: 1.0 }) else {
            return Ok(());
        };
        let p = f.adjoint() * &sol.w;
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    prop_assert!(p[(i, j)].norm() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn sinr_ignores_per_receiver_phase(k in 1usize..5, seed in any::<u64>(), phis in prop::collection::vec(-3.2f64..3.2, 5)) {
        let f = gaussian(k + 1, k, seed);
        let w = gaussian(k + 1, k, seed ^ 1);
        let mut rotated = f.clone();
        for (u, mut c) in rotated.column_iter_mut().enumerate() {
            c *= cis(phis[u]);
        }
        let a = metrics::sinr(&f, &w, 0.3);
        let b = metrics::sinr(&rotated, &w, 0.3);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10 * (1.0 + x));
        }
    }

    #[test]
    fn splitting_ratio_meets_target_and_is_tight(k in 1usize..4, gamma_db in -3.0f64..6.0, seed in any::<u64>()) {
        let f = gaussian(k + 2, k, seed);
        let w = gaussian(k + 2, k, seed ^ 7) * C64::new(3.0, 0.0);
        let gamma = 10f64.powf(gamma_db / 10.0);
        let (sigma2, eps) = (0.05, 1e-5);
        let ps = optimize_ps(&f, &w, gamma, sigma2, eps);
        for (u, p) in ps.phi.iter().enumerate() {
            let Some(p) = *p else { continue };
            prop_assert!(p > 0.0 && p < 1.0);
            let mut phi = ps.values();
            let at = swipt_sinr(&f, &w, &phi, sigma2)[u];
            prop_assert!(at >= gamma * (1.0 - 1e-9));
            phi[u] = p + 2.0 * eps;
            if phi[u] < 1.0 {
                let past = swipt_sinr(&f, &w, &phi, sigma2)[u];
                prop_assert!(past < gamma);
            }
        }
    }
}
