//! Experiment configuration, node geometry and deterministic RNG streams.
//!
//! A [`Scenario`] is an immutable value shared by every stage of a trial.
//! Quantities that users naturally think of in decibels (`c0_db`,
//! `rician_k_db`, `sinr_min_db`) are stored as given and exposed through
//! linear accessors, so a scenario written back out is identical to the one
//! read in. Powers are stored in watts.

#[allow(unused_imports)] // idle when std is linked
use num_traits::Float;
use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Point in metres.
pub type Point3 = [f64; 3];

/// `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `10·log10(x)`.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Power in dBm to watts.
pub fn dbm_to_watt(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// Power in watts to dBm.
pub fn watt_to_dbm(w: f64) -> f64 {
    linear_to_db(w) + 30.0
}

/// Euclidean distance between two points.
pub fn distance(a: &Point3, b: &Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Horizontal disc in which receivers are dropped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disc {
    pub center: Point3,
    pub radius: f64,
}

/// Path-loss exponents of the three link types.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathLossExponents {
    /// AP to IRS.
    pub ap_irs: f64,
    /// IRS to receiver.
    pub irs_rx: f64,
    /// AP to receiver (direct link).
    pub ap_rx: f64,
}

/// Static circuit power components in watts.
///
/// The user network pays `ap_static + N·per_element + K·per_terminal`; the
/// IoT network pays `ap_static + K·per_terminal` (the IRS is owned by the
/// user network).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircuitPower {
    pub ap_static: f64,
    pub per_element: f64,
    pub per_terminal: f64,
}

/// Iteration limits and tolerances for the optimizers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    /// Relative-change stopping threshold of the outer loops and EBCD.
    pub xi: f64,
    /// Outer iteration cap for AO and LCAS.
    pub max_outer: usize,
    /// Sweep cap for EBCD.
    pub max_sweeps: usize,
    /// Gaussian randomization draws per SDR phase update.
    pub randomizations: usize,
    /// Refinement step of the MMSE regularization search, in decades.
    pub line_search_step: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { xi: 1e-3, max_outer: 30, max_sweeps: 3000, randomizations: 10_000, line_search_step: 0.1 }
    }
}

/// Full description of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    /// Antennas at the user-network AP.
    pub m_u: usize,
    /// Antennas at the IoT-network AP.
    pub m_i: usize,
    /// Number of users served by the user network.
    pub k_i: usize,
    /// Number of SWIPT devices served by the IoT network.
    pub k_ei: usize,
    /// Number of IRS elements.
    pub n_irs: usize,
    pub ap_pos: Point3,
    pub irs_pos: Point3,
    pub user_region: Disc,
    pub device_region: Disc,
    pub pathloss: PathLossExponents,
    /// Path loss at the reference distance, dB.
    pub c0_db: f64,
    /// Reference distance, m.
    pub d0: f64,
    /// Rician factor of the AP-IRS links, dB.
    pub rician_k_db: f64,
    /// Rician factor of the IRS-receiver links, dB. `-inf` gives Rayleigh.
    pub rician_k_irs_rx_db: f64,
    /// Receiver noise power σ², W.
    pub noise_variance: f64,
    /// User-network transmit budget, W.
    pub p_ap_u_max: f64,
    /// IoT-network transmit budget, W.
    pub p_ap_i_max: f64,
    /// Per-receiver SINR target, dB.
    pub sinr_min_db: f64,
    /// Power-amplifier efficiency η.
    pub amp_efficiency: f64,
    pub circuit: CircuitPower,
    /// Energy-harvesting efficiency μ.
    pub eh_efficiency: f64,
    /// Minimum harvested power per device, W.
    pub eh_min: f64,
    /// Power-splitting slack ε.
    pub ps_slack: f64,
    /// System bandwidth in Hz; EE is reported in bits per joule.
    pub bandwidth_hz: f64,
    pub solver: SolverSettings,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            m_u: 10,
            m_i: 10,
            k_i: 6,
            k_ei: 6,
            n_irs: 32,
            ap_pos: [0.0, 0.0, 0.0],
            irs_pos: [6.0, 8.0, 0.0],
            user_region: Disc { center: [10.0, 0.0, 0.0], radius: 6.0 },
            device_region: Disc { center: [10.0, 0.0, 0.0], radius: 6.0 },
            pathloss: PathLossExponents { ap_irs: 2.0, irs_rx: 2.5, ap_rx: 3.5 },
            c0_db: -30.0,
            d0: 1.0,
            rician_k_db: 5.0,
            rician_k_irs_rx_db: 5.0,
            noise_variance: dbm_to_watt(-80.0),
            p_ap_u_max: dbm_to_watt(20.0),
            p_ap_i_max: dbm_to_watt(20.0),
            sinr_min_db: 4.0,
            amp_efficiency: 0.8,
            circuit: CircuitPower { ap_static: dbm_to_watt(5.0), per_element: 0.0, per_terminal: 0.0 },
            eh_efficiency: 0.8,
            eh_min: dbm_to_watt(-60.0),
            ps_slack: 1e-5,
            bandwidth_hz: 1e6,
            solver: SolverSettings::default(),
            seed: 1,
        }
    }
}

fn invalid(key: &'static str, reason: impl Into<alloc::string::String>) -> Error {
    Error::InvalidScenario { key, reason: reason.into() }
}

fn positive(key: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("must be finite and > 0, got {v}")))
    }
}

fn finite_point(key: &'static str, p: &Point3) -> Result<()> {
    if p.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid(key, "coordinates must be finite"))
    }
}

impl Scenario {
    /// Check every invariant, naming the first offending key.
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [("m_u", self.m_u), ("m_i", self.m_i), ("k_i", self.k_i), ("k_ei", self.k_ei), ("n_irs", self.n_irs)] {
            if v == 0 {
                return Err(invalid(key, "must be at least 1"));
            }
        }
        if self.m_u < self.k_i {
            return Err(invalid("m_u", format!("multiplexing infeasible: {} antennas for {} users", self.m_u, self.k_i)));
        }
        if self.m_i < self.k_ei {
            return Err(invalid(
                "m_i",
                format!("multiplexing infeasible: {} antennas for {} devices", self.m_i, self.k_ei),
            ));
        }
        finite_point("ap_pos", &self.ap_pos)?;
        finite_point("irs_pos", &self.irs_pos)?;
        finite_point("user_region.center", &self.user_region.center)?;
        finite_point("device_region.center", &self.device_region.center)?;
        positive("user_region.radius", self.user_region.radius)?;
        positive("device_region.radius", self.device_region.radius)?;
        for (key, a) in [
            ("pathloss.ap_irs", self.pathloss.ap_irs),
            ("pathloss.irs_rx", self.pathloss.irs_rx),
            ("pathloss.ap_rx", self.pathloss.ap_rx),
        ] {
            if !(2.0..=6.0).contains(&a) {
                return Err(invalid(key, format!("exponent must lie in [2, 6], got {a}")));
            }
        }
        if !self.c0_db.is_finite() {
            return Err(invalid("c0_db", "must be finite"));
        }
        positive("d0", self.d0)?;
        if self.rician_k_db.is_nan() || self.rician_k_db == f64::INFINITY {
            return Err(invalid("rician_k_db", "must be a number below +inf"));
        }
        if self.rician_k_irs_rx_db.is_nan() || self.rician_k_irs_rx_db == f64::INFINITY {
            return Err(invalid("rician_k_irs_rx_db", "must be a number below +inf"));
        }
        positive("noise_variance", self.noise_variance)?;
        positive("p_ap_u_max", self.p_ap_u_max)?;
        positive("p_ap_i_max", self.p_ap_i_max)?;
        if !self.sinr_min_db.is_finite() {
            return Err(invalid("sinr_min_db", "must be finite"));
        }
        if !(self.amp_efficiency > 0.0 && self.amp_efficiency <= 1.0) {
            return Err(invalid("amp_efficiency", "must lie in (0, 1]"));
        }
        for (key, v) in [
            ("circuit.ap_static", self.circuit.ap_static),
            ("circuit.per_element", self.circuit.per_element),
            ("circuit.per_terminal", self.circuit.per_terminal),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(key, "must be finite and >= 0"));
            }
        }
        if self.unet_circuit_power() <= 0.0 || self.inet_circuit_power() <= 0.0 {
            return Err(invalid("circuit.ap_static", "total circuit power must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.eh_efficiency) {
            return Err(invalid("eh_efficiency", "must lie in [0, 1]"));
        }
        if !(self.eh_min.is_finite() && self.eh_min >= 0.0) {
            return Err(invalid("eh_min", "must be finite and >= 0"));
        }
        if !(self.ps_slack > 0.0 && self.ps_slack < 0.1) {
            return Err(invalid("ps_slack", "must lie in (0, 0.1)"));
        }
        positive("bandwidth_hz", self.bandwidth_hz)?;
        positive("solver.xi", self.solver.xi)?;
        positive("solver.line_search_step", self.solver.line_search_step)?;
        if self.solver.max_outer == 0 {
            return Err(invalid("solver.max_outer", "must be at least 1"));
        }
        if self.solver.max_sweeps == 0 {
            return Err(invalid("solver.max_sweeps", "must be at least 1"));
        }
        if self.solver.randomizations == 0 {
            return Err(invalid("solver.randomizations", "must be at least 1"));
        }
        Ok(())
    }

    pub fn c0(&self) -> f64 {
        db_to_linear(self.c0_db)
    }

    pub fn rician_k(&self) -> f64 {
        db_to_linear(self.rician_k_db)
    }

    pub fn rician_k_irs_rx(&self) -> f64 {
        db_to_linear(self.rician_k_irs_rx_db)
    }

    /// Linear SINR target Γ_min.
    pub fn sinr_min(&self) -> f64 {
        db_to_linear(self.sinr_min_db)
    }

    /// Circuit power charged to the user network.
    pub fn unet_circuit_power(&self) -> f64 {
        self.circuit.ap_static + self.n_irs as f64 * self.circuit.per_element + self.k_i as f64 * self.circuit.per_terminal
    }

    /// Circuit power charged to the IoT network.
    pub fn inet_circuit_power(&self) -> f64 {
        self.circuit.ap_static + self.k_ei as f64 * self.circuit.per_terminal
    }

    /// RNG streams for trial `trial`.
    pub fn trial(&self, trial: u64) -> TrialStreams {
        TrialStreams { seed: self.seed, trial }
    }

    /// Drop users and devices for one trial.
    pub fn place(&self, streams: &TrialStreams) -> Placement {
        let mut rng = streams.rng(Stream::Placement);
        let users = place_receivers(&self.user_region, self.k_i, &mut rng);
        let devices = place_receivers(&self.device_region, self.k_ei, &mut rng);
        Placement { users, devices }
    }
}

/// Receiver positions for one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct Placement {
    pub users: Vec<Point3>,
    pub devices: Vec<Point3>,
}

/// Independent random purposes within a trial.
///
/// Each purpose gets its own ChaCha stream so that, for instance, the direct
/// links of a trial do not depend on how many IRS elements were drawn first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Placement = 0,
    Direct = 1,
    ApIrs = 2,
    IrsRx = 3,
    Randomization = 4,
    RandomPhases = 5,
}

/// Seed plus trial index; hands out per-purpose generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialStreams {
    pub seed: u64,
    pub trial: u64,
}

impl TrialStreams {
    pub fn rng(&self, purpose: Stream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.trial.wrapping_mul(8).wrapping_add(purpose as u64));
        rng
    }
}

/// Draw `count` points uniformly over the disc.
pub fn place_receivers<R: Rng + ?Sized>(region: &Disc, count: usize, rng: &mut R) -> Vec<Point3> {
    (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            let t: f64 = rng.random::<f64>() * core::f64::consts::TAU;
            let r = region.radius * u.sqrt();
            [region.center[0] + r * t.cos(), region.center[1] + r * t.sin(), region.center[2]]
        })
        .collect()
}
