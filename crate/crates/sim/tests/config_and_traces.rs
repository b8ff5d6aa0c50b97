use phasecoop::config::Config;
use phasecoop::output::emit_trace;
use phasecoop_core::beamforming::BfScheme;
use phasecoop_core::pipeline::{realization, run_continuous, PhaseMethod};
use phasecoop_core::scenario::{Disc, Scenario};

#[test]
fn scenario_document_scenario_round_trip() {
    let s = Scenario {
        n_irs: 48,
        m_u: 8,
        k_i: 3,
        irs_pos: [-2.5, 4.0, 1.5],
        device_region: Disc { center: [7.0, -1.0, 0.0], radius: 2.5 },
        rician_k_irs_rx_db: f64::NEG_INFINITY,
        noise_variance: 3.3e-12,
        eh_min: 4.2e-8,
        seed: 77,
        ..Scenario::default()
    };
    let text = Config::from_scenario(&s).to_toml();
    let back = Config::parse(&text).unwrap().to_scenario().unwrap();
    // Decibel keys pass through a log and an exponential; everything else
    // is carried exactly.
    let close = |a: f64, b: f64| (a / b - 1.0).abs() < 1e-12;
    assert!(close(back.noise_variance, s.noise_variance));
    assert!(close(back.eh_min, s.eh_min));
    assert!(close(back.p_ap_u_max, s.p_ap_u_max));
    assert!(close(back.circuit.ap_static, s.circuit.ap_static));
    let exact = Scenario {
        noise_variance: s.noise_variance,
        eh_min: s.eh_min,
        p_ap_u_max: s.p_ap_u_max,
        p_ap_i_max: s.p_ap_i_max,
        circuit: s.circuit,
        ..back.clone()
    };
    assert_eq!(exact, s);
    // And the document itself is a fixed point.
    assert_eq!(Config::parse(&text).unwrap().to_toml(), text);
}

#[test]
fn emitted_trace_echoes_the_stopping_rule() {
    let s = Scenario { n_irs: 8, ..Scenario::default() };
    let (streams, real) = realization(&s, 0);
    let dir = tempfile::tempdir().unwrap();
    for method in [PhaseMethod::AoSdr, PhaseMethod::LcasEbcd] {
        let report = run_continuous(&s, &real, method, BfScheme::Mmse, &streams).unwrap().report;
        let path = dir.path().join(format!("{}.csv", method.label()));
        emit_trace(&report, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let ee: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
        assert!(report.converged);
        assert!(ee.len() <= s.solver.max_outer + 1);
        let n = ee.len();
        assert!((ee[n - 1] - ee[n - 2]).abs() / ee[n - 1] < s.solver.xi);
    }
}

#[test]
fn larger_surface_wins_on_most_matched_seeds() {
    let mut wins = 0;
    for trial in 0..20 {
        let mut ee = [0.0; 2];
        for (slot, n) in [32, 64].into_iter().enumerate() {
            let s = Scenario { n_irs: n, ..Scenario::default() };
            let (streams, real) = realization(&s, trial);
            let report = run_continuous(&s, &real, PhaseMethod::AoSdr, BfScheme::Mmse, &streams).unwrap().report;
            assert!(report.converged);
            ee[slot] = report.unet_ee;
        }
        wins += usize::from(ee[1] >= ee[0]);
    }
    assert!(wins > 10, "N=64 won on {wins} of 20 seeds");
}
