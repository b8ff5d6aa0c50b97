//! TOML experiment configuration.
//!
//! Every key is optional and falls back to the reference setup. Decibel
//! keys (`*_db`, `*_dbm`) are converted to linear units exactly once, in
//! [`Config::to_scenario`].

use std::path::Path;

use phasecoop_core::scenario::{
    dbm_to_watt, watt_to_dbm, CircuitPower, Disc, PathLossExponents, Point3, Scenario, SolverSettings,
};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub geometry: Geometry,
    pub propagation: Propagation,
    pub unet: Unet,
    pub inet: Inet,
    pub power: Power,
    pub solver: Solver,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Geometry {
    pub n_irs: usize,
    pub ap_pos: Point3,
    pub irs_pos: Point3,
    pub user_center: Point3,
    pub user_radius: f64,
    pub device_center: Point3,
    pub device_radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Propagation {
    pub c0_db: f64,
    pub d0: f64,
    pub a_ap_irs: f64,
    pub a_irs_rx: f64,
    pub a_ap_rx: f64,
    pub rician_k_db: f64,
    /// `-inf` selects Rayleigh fading on the IRS-receiver links.
    pub rician_k_irs_rx_db: f64,
    pub noise_dbm: f64,
    pub bandwidth_hz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Unet {
    pub antennas: usize,
    pub users: usize,
    pub p_ap_max_dbm: f64,
    /// SINR target shared by users and devices.
    pub sinr_min_db: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inet {
    pub antennas: usize,
    pub devices: usize,
    pub p_ap_max_dbm: f64,
    pub eh_min_dbm: f64,
    pub eh_efficiency: f64,
    pub ps_slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Power {
    pub amp_efficiency: f64,
    /// Static AP circuit power, the lumped `P_C` of the sweeps.
    pub p_c_dbm: f64,
    pub per_element_w: f64,
    pub per_terminal_w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Solver {
    pub xi: f64,
    pub max_outer: usize,
    pub max_sweeps: usize,
    pub randomizations: usize,
    pub line_search_step: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config::from_scenario(&Scenario::default())
    }
}

macro_rules! default_from_config {
    ($($ty:ident => $field:ident),*) => {
        $(impl Default for $ty {
            fn default() -> Self {
                Config::default().$field
            }
        })*
    };
}

default_from_config!(Geometry => geometry, Propagation => propagation, Unet => unet, Inet => inet, Power => power, Solver => solver);

impl Config {
    pub fn from_scenario(s: &Scenario) -> Self {
        Config {
            seed: s.seed,
            geometry: Geometry {
                n_irs: s.n_irs,
                ap_pos: s.ap_pos,
                irs_pos: s.irs_pos,
                user_center: s.user_region.center,
                user_radius: s.user_region.radius,
                device_center: s.device_region.center,
                device_radius: s.device_region.radius,
            },
            propagation: Propagation {
                c0_db: s.c0_db,
                d0: s.d0,
                a_ap_irs: s.pathloss.ap_irs,
                a_irs_rx: s.pathloss.irs_rx,
                a_ap_rx: s.pathloss.ap_rx,
                rician_k_db: s.rician_k_db,
                rician_k_irs_rx_db: s.rician_k_irs_rx_db,
                noise_dbm: watt_to_dbm(s.noise_variance),
                bandwidth_hz: s.bandwidth_hz,
            },
            unet: Unet { antennas: s.m_u, users: s.k_i, p_ap_max_dbm: watt_to_dbm(s.p_ap_u_max), sinr_min_db: s.sinr_min_db },
            inet: Inet {
                antennas: s.m_i,
                devices: s.k_ei,
                p_ap_max_dbm: watt_to_dbm(s.p_ap_i_max),
                eh_min_dbm: watt_to_dbm(s.eh_min),
                eh_efficiency: s.eh_efficiency,
                ps_slack: s.ps_slack,
            },
            power: Power {
                amp_efficiency: s.amp_efficiency,
                p_c_dbm: watt_to_dbm(s.circuit.ap_static),
                per_element_w: s.circuit.per_element,
                per_terminal_w: s.circuit.per_terminal,
            },
            solver: Solver {
                xi: s.solver.xi,
                max_outer: s.solver.max_outer,
                max_sweeps: s.solver.max_sweeps,
                randomizations: s.solver.randomizations,
                line_search_step: s.solver.line_search_step,
            },
        }
    }

    /// Convert to a validated scenario.
    pub fn to_scenario(&self) -> Result<Scenario, HarnessError> {
        let (g, p, u, i, w, v) = (&self.geometry, &self.propagation, &self.unet, &self.inet, &self.power, &self.solver);
        let s = Scenario {
            m_u: u.antennas,
            m_i: i.antennas,
            k_i: u.users,
            k_ei: i.devices,
            n_irs: g.n_irs,
            ap_pos: g.ap_pos,
            irs_pos: g.irs_pos,
            user_region: Disc { center: g.user_center, radius: g.user_radius },
            device_region: Disc { center: g.device_center, radius: g.device_radius },
            pathloss: PathLossExponents { ap_irs: p.a_ap_irs, irs_rx: p.a_irs_rx, ap_rx: p.a_ap_rx },
            c0_db: p.c0_db,
            d0: p.d0,
            rician_k_db: p.rician_k_db,
            rician_k_irs_rx_db: p.rician_k_irs_rx_db,
            noise_variance: dbm_to_watt(p.noise_dbm),
            p_ap_u_max: dbm_to_watt(u.p_ap_max_dbm),
            p_ap_i_max: dbm_to_watt(i.p_ap_max_dbm),
            sinr_min_db: u.sinr_min_db,
            amp_efficiency: w.amp_efficiency,
            circuit: CircuitPower {
                ap_static: dbm_to_watt(w.p_c_dbm),
                per_element: w.per_element_w,
                per_terminal: w.per_terminal_w,
            },
            eh_efficiency: i.eh_efficiency,
            eh_min: dbm_to_watt(i.eh_min_dbm),
            ps_slack: i.ps_slack,
            bandwidth_hz: p.bandwidth_hz,
            solver: SolverSettings {
                xi: v.xi,
                max_outer: v.max_outer,
                max_sweeps: v.max_sweeps,
                randomizations: v.randomizations,
                line_search_step: v.line_search_step,
            },
            seed: self.seed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable as TOML")
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_owned(), source })?;
        Self::parse(&text)
    }
}
