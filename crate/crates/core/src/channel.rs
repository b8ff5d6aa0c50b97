//! Channel synthesis and effective-channel composition.
//!
//! Large-scale fading is `C0·(d/d0)^(-a)`. The AP-IRS and IRS-receiver hops
//! are Rician with a half-wavelength ULA line-of-sight component; direct
//! AP-receiver links are Rayleigh. With reflection vector `ν` (the diagonal
//! of Θ) the effective channel of receiver `k` is
//! `f_kᴴ = h_kᴴ·diag(ν)·G + g_kᴴ`.

#[allow(unused_imports)] // idle when std is linked
use num_traits::Float;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{cis, complex_normal, CMat, CVec, C64};
use crate::scenario::{distance, Placement, Point3, Scenario, Stream, TrialStreams};

/// Axis of the AP arrays.
pub const AP_ARRAY_AXIS: Point3 = [0.0, 1.0, 0.0];
/// Axis of the IRS element row.
pub const IRS_ARRAY_AXIS: Point3 = [1.0, 0.0, 0.0];

/// Large-scale power gain `C0·(d/d0)^(-a)`.
pub fn path_loss(distance: f64, exponent: f64, c0: f64, d0: f64) -> Result<f64> {
    if distance.is_nan() || distance <= 0.0 {
        return Err(Error::NonPositiveDistance(distance));
    }
    Ok(c0 * (distance / d0).powf(-exponent))
}

/// Unit-modulus IRS reflection coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseShifts {
    nu: Vec<C64>,
}

impl PhaseShifts {
    /// All elements at phase zero.
    pub fn ones(n: usize) -> Self {
        Self { nu: alloc::vec![C64::new(1.0, 0.0); n] }
    }

    pub fn from_angles(theta: &[f64]) -> Self {
        Self { nu: theta.iter().map(|&t| cis(t)).collect() }
    }

    /// Project arbitrary complex values onto the unit circle; zero maps to 1.
    pub fn project(values: impl IntoIterator<Item = C64>) -> Self {
        Self {
            nu: values
                .into_iter()
                .map(|z| {
                    let r = z.norm();
                    if r > 0.0 && r.is_finite() {
                        z / r
                    } else {
                        C64::new(1.0, 0.0)
                    }
                })
                .collect(),
        }
    }

    /// Uniform random phases.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self { nu: (0..n).map(|_| cis(rng.random::<f64>() * core::f64::consts::TAU)).collect() }
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.nu
    }

    /// Angles in `[0, 2π)`.
    pub fn angles(&self) -> Vec<f64> {
        self.nu
            .iter()
            .map(|z| {
                let a = z.arg();
                if a < 0.0 {
                    a + core::f64::consts::TAU
                } else {
                    a
                }
            })
            .collect()
    }

    /// Round every phase to the nearest of `2^bits` uniform levels.
    pub fn quantize(&self, bits: u32) -> Self {
        let levels = (1u64 << bits.min(62)) as f64;
        let step = core::f64::consts::TAU / levels;
        let theta: Vec<f64> = self.angles().iter().map(|&a| ((a / step).round() % levels) * step).collect();
        Self::from_angles(&theta)
    }
}

/// Links of one network (user or IoT) for one realization.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkLinks {
    /// AP → IRS, `N × M`.
    pub ap_irs: CMat,
    /// IRS → receiver `k`, length `N` each.
    pub irs_rx: Vec<CVec>,
    /// AP → receiver `k`, length `M` each.
    pub direct: Vec<CVec>,
}

impl NetworkLinks {
    pub fn antennas(&self) -> usize {
        self.ap_irs.ncols()
    }

    pub fn elements(&self) -> usize {
        self.ap_irs.nrows()
    }

    pub fn receivers(&self) -> usize {
        self.direct.len()
    }

    /// Effective channels as columns of an `M × K` matrix.
    pub fn effective(&self, nu: &PhaseShifts) -> Result<CMat> {
        let m = self.antennas();
        let mut f = CMat::zeros(m, self.receivers());
        for k in 0..self.receivers() {
            let fk = effective_channel(&self.irs_rx[k], nu, &self.ap_irs, &self.direct[k])?;
            f.set_column(k, &fk);
        }
        Ok(f)
    }

    /// Direct links only, as an `M × K` matrix.
    pub fn direct_only(&self) -> CMat {
        crate::linalg::columns_to_matrix(&self.direct, self.antennas())
    }

    /// Cascaded coupling `diag(h_kᴴ)·G` of receiver `k`, `N × M`.
    pub fn cascade(&self, k: usize) -> CMat {
        let h = &self.irs_rx[k];
        let mut b = self.ap_irs.clone();
        for (n, mut row) in b.row_iter_mut().enumerate() {
            let c = h[n].conj();
            for z in row.iter_mut() {
                *z *= c;
            }
        }
        b
    }

    /// Copy with every reflected path removed.
    pub fn without_irs(&self) -> Self {
        Self {
            ap_irs: CMat::zeros(self.ap_irs.nrows(), self.ap_irs.ncols()),
            irs_rx: self.irs_rx.iter().map(|h| CVec::zeros(h.len())).collect(),
            direct: self.direct.clone(),
        }
    }
}

/// One draw of every channel in both networks.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub users: NetworkLinks,
    pub devices: NetworkLinks,
}

impl ChannelRealization {
    /// Copy with every reflected path removed.
    pub fn without_irs(&self) -> Self {
        Self { users: self.users.without_irs(), devices: self.devices.without_irs() }
    }
}

/// `f` with `fᴴ = h_rᴴ·diag(ν)·G + g_dirᴴ`.
pub fn effective_channel(h_r: &CVec, nu: &PhaseShifts, g_mat: &CMat, g_dir: &CVec) -> Result<CVec> {
    let n = g_mat.nrows();
    check_dim("effective_channel: h_r", n, h_r.len())?;
    check_dim("effective_channel: nu", n, nu.len())?;
    check_dim("effective_channel: g_dir", g_mat.ncols(), g_dir.len())?;
    let t = CVec::from_iterator(n, h_r.iter().zip(nu.as_slice()).map(|(h, v)| h * v.conj()));
    Ok(g_mat.ad_mul(&t) + g_dir)
}

/// Half-wavelength ULA response toward unit direction `dir`.
pub fn ula_response(count: usize, axis: &Point3, dir: &Point3) -> CVec {
    let c = axis[0] * dir[0] + axis[1] * dir[1] + axis[2] * dir[2];
    CVec::from_fn(count, |m, _| cis(core::f64::consts::PI * m as f64 * c))
}

fn unit(from: &Point3, to: &Point3) -> Point3 {
    let d = distance(from, to);
    if d == 0.0 {
        return [0.0; 3];
    }
    [(to[0] - from[0]) / d, (to[1] - from[1]) / d, (to[2] - from[2]) / d]
}

/// `(√(κ/(1+κ)), √(1/(1+κ)))`, with `κ = ∞` handled.
fn rician_weights(kappa: f64) -> (f64, f64) {
    if kappa.is_infinite() {
        (1.0, 0.0)
    } else {
        ((kappa / (1.0 + kappa)).sqrt(), (1.0 / (1.0 + kappa)).sqrt())
    }
}

fn link_gain(s: &Scenario, a: &Point3, b: &Point3, exponent: f64) -> f64 {
    // Receivers can land arbitrarily close to a node; clamp to the
    // reference distance so the far-field model is never extrapolated.
    let d = distance(a, b).max(s.d0);
    s.c0() * (d / s.d0).powf(-exponent)
}

fn draw_ap_irs<R: Rng + ?Sized>(s: &Scenario, m: usize, rng: &mut R) -> CMat {
    let n = s.n_irs;
    let pl = link_gain(s, &s.ap_pos, &s.irs_pos, s.pathloss.ap_irs).sqrt();
    let (wl, wn) = rician_weights(s.rician_k());
    let a_irs = ula_response(n, &IRS_ARRAY_AXIS, &unit(&s.irs_pos, &s.ap_pos));
    let a_ap = ula_response(m, &AP_ARRAY_AXIS, &unit(&s.ap_pos, &s.irs_pos));
    let mut g = CMat::zeros(n, m);
    // Column-major fill keeps the draw order independent of storage details.
    for j in 0..m {
        for i in 0..n {
            let los = a_irs[i] * a_ap[j].conj();
            g[(i, j)] = (los * wl + complex_normal(rng) * wn) * pl;
        }
    }
    g
}

fn draw_irs_rx<R: Rng + ?Sized>(s: &Scenario, rx: &Point3, rng: &mut R) -> CVec {
    let pl = link_gain(s, &s.irs_pos, rx, s.pathloss.irs_rx).sqrt();
    let (wl, wn) = rician_weights(s.rician_k_irs_rx());
    let a = ula_response(s.n_irs, &IRS_ARRAY_AXIS, &unit(&s.irs_pos, rx));
    CVec::from_fn(s.n_irs, |i, _| (a[i] * wl + complex_normal(rng) * wn) * pl)
}

fn draw_direct<R: Rng + ?Sized>(s: &Scenario, m: usize, rx: &Point3, rng: &mut R) -> CVec {
    let pl = link_gain(s, &s.ap_pos, rx, s.pathloss.ap_rx).sqrt();
    CVec::from_fn(m, |_, _| complex_normal(rng) * pl)
}

/// Draw every channel of one trial.
///
/// Each link family uses its own stream of `streams`, so direct links are
/// identical across IRS sizes for the same seed and trial.
pub fn draw_channels(s: &Scenario, placement: &Placement, streams: &TrialStreams) -> ChannelRealization {
    let mut r_direct = streams.rng(Stream::Direct);
    let mut r_ap_irs = streams.rng(Stream::ApIrs);
    let mut r_irs_rx = streams.rng(Stream::IrsRx);

    let users_direct = placement.users.iter().map(|p| draw_direct(s, s.m_u, p, &mut r_direct)).collect();
    let devices_direct = placement.devices.iter().map(|p| draw_direct(s, s.m_i, p, &mut r_direct)).collect();
    let g_r = draw_ap_irs(s, s.m_u, &mut r_ap_irs);
    let g_d = draw_ap_irs(s, s.m_i, &mut r_ap_irs);
    let h_users = placement.users.iter().map(|p| draw_irs_rx(s, p, &mut r_irs_rx)).collect();
    let h_devices = placement.devices.iter().map(|p| draw_irs_rx(s, p, &mut r_irs_rx)).collect();

    ChannelRealization {
        users: NetworkLinks { ap_irs: g_r, irs_rx: h_users, direct: users_direct },
        devices: NetworkLinks { ap_irs: g_d, irs_rx: h_devices, direct: devices_direct },
    }
}
