use std::path::PathBuf;

use clap::Parser;
use phasecoop_core::beamforming::BfScheme;
use phasecoop_core::channel::PhaseShifts;
use phasecoop_core::phase_sdr::{lift, solve_sdp, spectrum};
use phasecoop_core::pipeline::{design_unet, realization};
use phasecoop_core::scenario::Scenario;

use crate::config::Config;
use crate::error::HarnessError;
use crate::output::{self, AGGREGATE_FILE, TRACES_FILE, TRIALS_FILE};
use crate::sweep::{parse_schemes, run_sweep, SweepSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

/// Energy-efficiency Monte Carlo sweeps for IRS phase cooperation.
#[derive(Debug, Parser)]
#[command(name = "phasecoop", version)]
pub struct Args {
    /// TOML configuration; every key is optional.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sweep one variable, e.g. `n_irs=16,32,64`. Without it a single
    /// point at the configured scenario is run.
    #[arg(long, value_name = "VAR=v1,v2,...")]
    pub sweep: Option<String>,
    /// Comma-separated schemes: ao_sdr, lcas_ebcd, dps<b>[_ao|_lcas], rps, no_irs.
    #[arg(long, default_value = "ao_sdr,lcas_ebcd,dps2,rps,no_irs")]
    pub schemes: String,
    /// Beamformer family, or a comma-separated list of both.
    #[arg(long, default_value = "mmse")]
    pub bf: String,
    #[arg(long, default_value_t = 10)]
    pub trials: u64,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Also write per-iteration EE traces.
    #[arg(long)]
    pub trace: bool,
    /// Also dump trial T's channels and the eigenvalues of its first
    /// relaxed phase problem.
    #[arg(long, value_name = "T")]
    pub dump_trial: Option<u64>,
}

/// Outcome of a completed run.
#[derive(Debug)]
pub struct Summary {
    pub records: usize,
    pub failures: usize,
}

fn scenario(args: &Args) -> Result<Scenario, HarnessError> {
    let mut config = match &args.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.to_scenario()
}

/// Eigenvalues of the first relaxed phase problem of `trial`.
pub fn sdr_spectrum(s: &Scenario, trial: u64) -> Result<Vec<f64>, HarnessError> {
    let (_, real) = realization(s, trial);
    let f = real.users.effective(&PhaseShifts::ones(s.n_irs))?;
    let design = design_unet(s, &f, BfScheme::Mmse)?;
    let inst = lift(&real.users, &design.bf, s.sinr_min(), s.noise_variance)?;
    Ok(spectrum(&solve_sdp(&inst)?))
}

pub fn run(args: &Args) -> Result<Summary, HarnessError> {
    let base = scenario(args)?;
    let schemes = parse_schemes(&args.schemes, &args.bf)?;
    let spec = match &args.sweep {
        Some(text) => {
            let (var, values) = SweepSpec::parse_assignment(text)?;
            SweepSpec::new(var, values, args.trials, schemes)?
        }
        None => SweepSpec::single(&base, args.trials, schemes)?,
    };
    let result = run_sweep(&spec, &base)?;
    output::write_trials(&output::output_path(&args.out, TRIALS_FILE)?, &result)?;
    output::write_aggregate(&output::output_path(&args.out, AGGREGATE_FILE)?, &result)?;
    if args.trace {
        output::write_traces(&output::output_path(&args.out, TRACES_FILE)?, &result)?;
    }
    let config_path = output::output_path(&args.out, "config.toml")?;
    std::fs::write(&config_path, Config::from_scenario(&base).to_toml())
        .map_err(|source| HarnessError::Io { path: config_path, source })?;
    if let Some(t) = args.dump_trial {
        let (_, real) = realization(&base, t);
        crate::dump::write_realization(&output::output_path(&args.out, &format!("channels_trial{t}.bin"))?, &real)?;
        match sdr_spectrum(&base, t) {
            Ok(ev) => output::write_spectrum(&output::output_path(&args.out, &format!("sdr_spectrum_trial{t}.csv"))?, &ev)?,
            Err(e) => eprintln!("warning: no spectrum for trial {t}: {e}"),
        }
    }
    Ok(Summary { records: result.records.len(), failures: result.failures() })
}

/// Parse `argv`, run, and map the outcome to an exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&args) {
        Ok(s) if s.failures == 0 => {
            println!("{} records written to {}", s.records, args.out.display());
            EXIT_OK
        }
        Ok(s) => {
            eprintln!("{} of {} records failed; see the error column of {}", s.failures, s.records, TRIALS_FILE);
            EXIT_PARTIAL
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}
