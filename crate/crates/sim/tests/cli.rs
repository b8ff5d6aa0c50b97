use std::path::Path;
use std::process::Command;

use phasecoop::config::Config;

const TRIALS_HEADER: &str = "seed,variable,value,trial,scheme,bf,n_irs,m_u,m_i,p_ap_u_dbm,p_ap_i_dbm,p_c_dbm,\
unet_sum_rate,unet_ee,unet_power_w,inet_sum_rate,inet_ee,inet_power_w,iterations,converged,\
unet_sinr_ok,unet_budget_ok,inet_sinr_ok,inet_eh_ok,inet_budget_ok,sdr_relaxed,error";

const AGGREGATE_HEADER: &str = "variable,value,scheme,bf,trials_ok,trials_failed,trials_feasible,\
unet_ee_mean,unet_ee_se,inet_ee_mean,inet_ee_se,unet_sum_rate_mean,unet_sum_rate_se,\
inet_sum_rate_mean,inet_sum_rate_se,iterations_mean";

const TRACES_HEADER: &str = "variable,value,trial,scheme,bf,iteration,unet_ee";

fn phasecoop(args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_phasecoop")).args(args).output().expect("binary runs");
    out.status.code().expect("exited normally")
}

fn small_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("small.toml");
    std::fs::write(&path, format!("[geometry]\nn_irs = 4\n[solver]\nrandomizations = 200\n{extra}")).unwrap();
    path.to_str().unwrap().to_owned()
}

fn first_line(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap_or_default().to_owned()
}

#[test]
fn successful_run_writes_every_file_with_stable_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let out = dir.path().join("out");
    let code = phasecoop(&[
        "--config", &cfg, "--sweep", "p_c=0,10", "--schemes", "lcas_ebcd,dps1,no_irs", "--trials", "2", "--trace",
        "--dump-trial", "1", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(first_line(&out.join("trials.csv")), TRIALS_HEADER);
    assert_eq!(first_line(&out.join("aggregate.csv")), AGGREGATE_HEADER);
    assert_eq!(first_line(&out.join("traces.csv")), TRACES_HEADER);
    assert_eq!(std::fs::read_to_string(out.join("trials.csv")).unwrap().lines().count(), 1 + 2 * 2 * 3);
    assert_eq!(std::fs::read_to_string(out.join("aggregate.csv")).unwrap().lines().count(), 1 + 2 * 3);
    assert_eq!(first_line(&out.join("sdr_spectrum_trial1.csv")), "index,eigenvalue,share");
    let real = phasecoop::dump::read_realization(&out.join("channels_trial1.bin")).unwrap();
    assert_eq!(real.users.elements(), 4);
    // The echoed configuration reproduces the scenario that was run.
    let echoed = Config::load(&out.join("config.toml")).unwrap().to_scenario().unwrap();
    assert_eq!(echoed.n_irs, 4);
    assert_eq!(echoed.solver.randomizations, 200);
}

#[test]
fn config_and_usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let bad_key = small_config(dir.path(), "[power]\nwatts = 3\n");
    assert_eq!(phasecoop(&["--config", &bad_key, "--out", out]), 1);
    let bad_value = small_config(dir.path(), "[unet]\nantennas = 2\n");
    assert_eq!(phasecoop(&["--config", &bad_value, "--out", out]), 1);
    let missing = dir.path().join("missing.toml");
    assert_eq!(phasecoop(&["--config", missing.to_str().unwrap(), "--out", out]), 1);
    let cfg = small_config(dir.path(), "");
    assert_eq!(phasecoop(&["--config", &cfg, "--sweep", "n_irs=8,4,16", "--out", out]), 1);
    assert_eq!(phasecoop(&["--config", &cfg, "--sweep", "a_exponents=1.5", "--out", out]), 1);
    assert_eq!(phasecoop(&["--config", &cfg, "--schemes", "best", "--out", out]), 1);
    assert_eq!(phasecoop(&["--config", &cfg, "--bf", "mrt", "--out", out]), 1);
    assert_eq!(phasecoop(&["--config", &cfg, "--trials", "0", "--out", out]), 1);
    assert_eq!(phasecoop(&["--no-such-flag"]), 1);
    assert_eq!(phasecoop(&["--help"]), 0);
}

#[test]
fn failed_trials_exit_with_two_and_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    // Every channel vanishes, so no beamformer can meet the targets.
    let cfg = small_config(dir.path(), "[propagation]\nc0_db = -4000.0\n");
    let out = dir.path().join("out");
    assert_eq!(phasecoop(&["--config", &cfg, "--schemes", "no_irs", "--trials", "2", "--out", out.to_str().unwrap()]), 2);
    let text = std::fs::read_to_string(out.join("trials.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.ends_with("SINR targets infeasible for these directions")));
    let agg = std::fs::read_to_string(out.join("aggregate.csv")).unwrap();
    assert!(agg.lines().nth(1).unwrap().contains(",0,2,0,"), "{agg}");
}

#[test]
fn same_seed_gives_identical_bytes_and_seed_matters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let code = phasecoop(&[
            "--config", &cfg, "--sweep", "n_irs=2,4", "--schemes", "ao_sdr,lcas_ebcd,rps", "--trials", "3", "--seed", seed,
            "--trace", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        ["trials.csv", "aggregate.csv", "traces.csv"].map(|f| std::fs::read(out.join(f)).unwrap())
    };
    let a = run("a", "5");
    let b = run("b", "5");
    let c = run("c", "6");
    assert_eq!(a, b);
    assert_ne!(a[0], c[0]);
}
