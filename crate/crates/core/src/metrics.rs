//! SINR, rate and energy-efficiency arithmetic shared by both networks.

#[allow(unused_imports)] // idle when std is linked
use num_traits::Float;
use alloc::vec::Vec;

use crate::linalg::{gemm, CMat, Op};

/// `|f_kᴴ w_i|²` as a `K × K` row-major table indexed `[k][i]`.
pub fn gain_table(f: &CMat, w: &CMat) -> Vec<Vec<f64>> {
    let p = gemm(f, Op::H, w, Op::N);
    (0..p.nrows()).map(|k| (0..p.ncols()).map(|i| p[(k, i)].norm_sqr()).collect()).collect()
}

/// Downlink SINR of every receiver:
/// `|f_kᴴ w_k|² / (Σ_{i≠k} |f_kᴴ w_i|² + σ²)`.
pub fn sinr(f: &CMat, w: &CMat, sigma2: f64) -> Vec<f64> {
    sinr_from_gains(&gain_table(f, w), sigma2)
}

pub fn sinr_from_gains(g: &[Vec<f64>], sigma2: f64) -> Vec<f64> {
    g.iter()
        .enumerate()
        .map(|(k, row)| {
            let interference: f64 = row.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, v)| v).sum();
            row[k] / (interference + sigma2)
        })
        .collect()
}

/// Spectral efficiency `log2(1 + SINR)` in bit/s/Hz.
pub fn rate(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// Radiated power `Σ_k ‖w_k‖²`.
pub fn radiated_power(w: &CMat) -> f64 {
    w.iter().map(|z| z.norm_sqr()).sum()
}

/// Energy efficiency in bits per joule:
/// `B·R / (P_radiated/η + P_C)`.
pub fn energy_efficiency(sum_rate: f64, radiated: f64, eta: f64, circuit: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * sum_rate / (radiated / eta + circuit)
}
