//! Observables: photon-number statistics, blockade fidelity, Wigner function
//! and oscillation-frequency estimates.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::Write;

use log::warn;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{displacement_block, DensityOperator, C64};

pub fn photon_probabilities(rho: &DensityOperator) -> Vec<f64> {
    rho.probabilities()
}

/// `Σ_{n ∈ manifold} p_n`.
pub fn blockade_fidelity(rho: &DensityOperator, manifold: &[usize]) -> Result<f64> {
    let d = rho.space().dim();
    let m = rho.matrix();
    let mut seen = vec![false; d];
    let mut total = 0.0;
    for &n in manifold {
        if n >= d {
            return Err(Error::OutOfRange { n, dim: d });
        }
        if !seen[n] {
            seen[n] = true;
            total += m[(n, n)].re;
        }
    }
    Ok(total)
}

/// `Tr(n̂ρ)`.
pub fn mean_photon(rho: &DensityOperator) -> f64 {
    rho.probabilities().iter().enumerate().map(|(n, p)| n as f64 * p).sum::<f64>().max(0.0)
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn uniform_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Wigner function on a rectangular grid; `values[(i, j)] = W(q_i, p_j)`.
#[derive(Clone, Debug, Serialize)]
pub struct WignerGrid {
    pub q_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    #[serde(skip)]
    pub values: DMatrix<f64>,
    /// Largest imaginary residue met while summing (should be round-off).
    pub max_imag: f64,
}

impl WignerGrid {
    pub fn min(&self) -> f64 {
        self.values.min()
    }

    pub fn max(&self) -> f64 {
        self.values.max()
    }

    /// Riemann sum `Σ W Δq Δp`.
    pub fn integral(&self) -> f64 {
        let dq = spacing(&self.q_axis);
        let dp = spacing(&self.p_axis);
        self.values.sum() * dq * dp
    }

    /// CSV with header `q,p,W`, `q` varying slowest.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "q,p,W")?;
        for (i, q) in self.q_axis.iter().enumerate() {
            for (j, p) in self.p_axis.iter().enumerate() {
                writeln!(out, "{},{},{}", fmt17(*q), fmt17(*p), fmt17(self.values[(i, j)]))?;
            }
        }
        Ok(())
    }
}

fn spacing(axis: &[f64]) -> f64 {
    if axis.len() < 2 { 1.0 } else { (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64 }
}

/// Fixed 17-significant-digit formatting used for every numeric output.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    format!("{:.16e}", x)
}

/// Highest populated level + 1.
fn support(rho: &DensityOperator) -> usize {
    let m = rho.matrix();
    let d = m.nrows();
    (0..d).rev().find(|&n| (0..d).any(|k| m[(n, k)].norm() > 1e-15)).map_or(1, |n| n + 1)
}

fn wigner_at(rho: &DensityOperator, k: usize, q: f64, p: f64) -> C64 {
    // W = (1/π) Tr[ρ D(2α) P] with α = (q + ip)/√2
    let beta = C64::new(q, p) * (2.0 * FRAC_1_SQRT_2);
    let disp = displacement_block(k, k, beta);
    let m = rho.matrix();
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..k {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        for kk in 0..k {
            acc += m[(j, kk)] * disp[(kk, j)] * sign;
        }
    }
    acc / PI
}

/// `W(q, p)` at a single point. Quadrature convention: the vacuum peaks at
/// `1/π` and the function integrates to one over `dq dp`.
pub fn wigner_point(rho: &DensityOperator, q: f64, p: f64) -> f64 {
    wigner_at(rho, support(rho), q, p).re
}

/// Displaced-parity evaluation of the Wigner function, parallel over rows.
pub fn wigner(rho: &DensityOperator, q_axis: &[f64], p_axis: &[f64]) -> WignerGrid {
    let k = support(rho);
    let reach = (2.0 * mean_photon(rho) + 1.0).sqrt() + 2.0;
    let extent = |a: &[f64]| a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if extent(q_axis) < reach || extent(p_axis) < reach {
        warn!("Wigner grid may not cover the state (needs about ±{reach:.2})");
    }
    let rows: Vec<(Vec<f64>, f64)> = q_axis
        .par_iter()
        .map(|&q| {
            let mut imag: f64 = 0.0;
            let row = p_axis
                .iter()
                .map(|&p| {
                    let w = wigner_at(rho, k, q, p);
                    imag = imag.max(w.im.abs());
                    w.re
                })
                .collect();
            (row, imag)
        })
        .collect();
    let mut values = DMatrix::zeros(q_axis.len(), p_axis.len());
    let mut max_imag: f64 = 0.0;
    for (i, (row, imag)) in rows.into_iter().enumerate() {
        max_imag = max_imag.max(imag);
        for (j, w) in row.into_iter().enumerate() {
            values[(i, j)] = w;
        }
    }
    WignerGrid { q_axis: q_axis.to_vec(), p_axis: p_axis.to_vec(), values, max_imag }
}

/// 101 × 101 points over `[−4, 4]²`.
pub fn default_wigner(rho: &DensityOperator) -> WignerGrid {
    let axis = uniform_axis(-4.0, 4.0, 101);
    wigner(rho, &axis, &axis)
}

/// Magnitude of the mean-removed discrete Fourier sum at angular frequency `w`.
pub fn dft_magnitude(times: &[f64], values: &[f64], w: f64) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
    let mut acc = C64::new(0.0, 0.0);
    for (t, v) in times.iter().zip(values) {
        acc += C64::from_polar(v - mean, -w * t);
    }
    acc.norm()
}

/// Dominant angular frequency of a sampled signal within `[w_lo, w_hi]`:
/// a scan on a grid four times finer than the record's resolution, then
/// golden-section refinement of the DFT magnitude.
pub fn dominant_frequency(times: &[f64], values: &[f64], w_lo: f64, w_hi: f64) -> Result<f64> {
    if times.len() != values.len() || times.len() < 4 {
        return Err(Error::Domain("need at least four matching samples".into()));
    }
    if !(w_hi > w_lo) || w_lo < 0.0 {
        return Err(Error::Domain(format!("bad frequency window [{w_lo}, {w_hi}]")));
    }
    let span = times[times.len() - 1] - times[0];
    let dw = 2.0 * PI / span / 4.0;
    let n = ((w_hi - w_lo) / dw).ceil() as usize + 1;
    let (mut best_w, mut best) = (w_lo, f64::NEG_INFINITY);
    for i in 0..n {
        let w = (w_lo + i as f64 * dw).min(w_hi);
        let m = dft_magnitude(times, values, w);
        if m > best {
            best = m;
            best_w = w;
        }
    }
    let (mut a, mut b) = ((best_w - dw).max(w_lo), (best_w + dw).min(w_hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = dft_magnitude(times, values, x1);
    let mut f2 = dft_magnitude(times, values, x2);
    for _ in 0..80 {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = dft_magnitude(times, values, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = dft_magnitude(times, values, x2);
        }
        if b - a < 1e-12 * b.abs().max(1.0) {
            break;
        }
    }
    Ok(0.5 * (a + b))
}
