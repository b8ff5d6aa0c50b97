use phasecoop_core::channel::{draw_channels, path_loss};
use phasecoop_core::scenario::{Placement, Scenario};

const DRAWS: u64 = 10_000;

fn fixed_placement() -> Placement {
    Placement { users: vec![[12.0, 3.0, 0.0]], devices: vec![[7.0, -2.0, 0.0]] }
}

fn scenario(kappa_db: f64) -> Scenario {
    Scenario {
        m_u: 2,
        m_i: 2,
        k_i: 1,
        k_ei: 1,
        n_irs: 3,
        rician_k_db: kappa_db,
        rician_k_irs_rx_db: kappa_db,
        ..Scenario::default()
    }
}

/// Mean of `|entry|²` per entry over independent trials, for the AP-IRS
/// matrix, the IRS-user vector and the direct AP-user vector.
fn entry_powers(s: &Scenario) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let place = fixed_placement();
    let (n, m) = (s.n_irs, s.m_u);
    let mut g = vec![0.0; n * m];
    let mut h = vec![0.0; n];
    let mut d = vec![0.0; m];
    for t in 0..DRAWS {
        let real = draw_channels(s, &place, &s.trial(t));
        let u = &real.users;
        for (acc, z) in g.iter_mut().zip(u.ap_irs.iter()) {
            *acc += z.norm_sqr();
        }
        for (acc, z) in h.iter_mut().zip(u.irs_rx[0].iter()) {
            *acc += z.norm_sqr();
        }
        for (acc, z) in d.iter_mut().zip(u.direct[0].iter()) {
            *acc += z.norm_sqr();
        }
    }
    let scale = |v: Vec<f64>| v.into_iter().map(|x| x / DRAWS as f64).collect();
    (scale(g), scale(h), scale(d))
}

fn expected(s: &Scenario) -> (f64, f64, f64) {
    let dist = |a: &[f64; 3], b: &[f64; 3]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    let user = fixed_placement().users[0];
    let pl = |d: f64, a: f64| path_loss(d, a, s.c0(), s.d0).unwrap();
    (
        pl(dist(&s.ap_pos, &s.irs_pos), s.pathloss.ap_irs),
        pl(dist(&s.irs_pos, &user), s.pathloss.irs_rx),
        pl(dist(&s.ap_pos, &user), s.pathloss.ap_rx),
    )
}

fn assert_within(label: &str, got: &[f64], want: f64, tol: f64) {
    for (i, g) in got.iter().enumerate() {
        let rel = (g / want - 1.0).abs();
        assert!(rel < tol, "{label}[{i}]: mean power {g:e} vs path loss {want:e} ({:.2}% off)", rel * 100.0);
    }
}

#[test]
fn rayleigh_entry_variance_matches_path_loss() {
    let s = scenario(f64::NEG_INFINITY);
    let (g, h, d) = entry_powers(&s);
    let (pg, ph, pd) = expected(&s);
    assert_within("ap_irs", &g, pg, 0.03);
    assert_within("irs_rx", &h, ph, 0.03);
    assert_within("direct", &d, pd, 0.03);
}

#[test]
fn rician_power_is_normalized_for_every_factor() {
    for kappa_db in [-3.0, 5.0, 20.0] {
        let s = scenario(kappa_db);
        let (g, h, d) = entry_powers(&s);
        let (pg, ph, pd) = expected(&s);
        assert_within("ap_irs", &g, pg, 0.03);
        assert_within("irs_rx", &h, ph, 0.03);
        assert_within("direct", &d, pd, 0.03);
    }
}

#[test]
fn reference_path_loss_value() {
    let v = path_loss(10.0, 3.5, 1e-3, 1.0).unwrap();
    assert!((v - 3.162_277_660e-7).abs() < 1e-15);
}

#[test]
fn same_trial_same_channels_different_trial_different_channels() {
    let s = scenario(5.0);
    let place = fixed_placement();
    let a = draw_channels(&s, &place, &s.trial(7));
    let b = draw_channels(&s, &place, &s.trial(7));
    let c = draw_channels(&s, &place, &s.trial(8));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn direct_links_do_not_depend_on_irs_size() {
    let small = Scenario { n_irs: 4, ..Scenario::default() };
    let large = Scenario { n_irs: 64, ..Scenario::default() };
    let st = small.trial(3);
    let place = small.place(&st);
    assert_eq!(place, large.place(&st));
    let a = draw_channels(&small, &place, &st);
    let b = draw_channels(&large, &place, &st);
    assert_eq!(a.users.direct, b.users.direct);
    assert_eq!(a.devices.direct, b.devices.direct);
}
