//! Stationary Gaussian fields on Z² by midpoint spectral synthesis.
//!
//! With cell midpoints x_k = (k − ½)/K and independent standard normals ξ, η,
//!
//! G(i,j) = Σ_{k,l} (√g(x_k, x_l)/K)·[ξ_kl cos 2π(i x_k + j x_l) + η_kl sin 2π(i x_k + j x_l)],
//!
//! whose covariance at lag (m,n) is Σ_{k,l} (g(x_k,x_l)/K²) cos 2π(m x_k + n x_l),
//! a midpoint approximation of ∫∫ e^{2πι(mx+ny)} g. The field equals
//! Re(E C Eᵀ) with E(i,k) = e^{2πι i x_k} and C_kl = (√g/K)(ξ_kl − ι η_kl),
//! which is evaluated with four real N×K×N products instead of N²K² terms.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::profile::SpectralDensity;
use crate::rng::StreamKey;

pub const MIN_SPECTRAL_GRID: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianField {
    values: Array2<f64>,
    k: usize,
    key: StreamKey,
}

impl GaussianField {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// `values()[[i-1, j-1]]` is G(i,j).
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn spectral_grid(&self) -> usize {
        self.k
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }
}

fn midpoint(k: usize, kk: usize) -> f64 {
    (k as f64 + 0.5) / kk as f64
}

/// cos and sin of 2π·i·x_k for i = 1..=n, with the phase reduced exactly in
/// integers: i·x_k = i(2k+1)/(2K) for 0-based k.
fn phases(n: usize, kk: usize) -> (Array2<f64>, Array2<f64>) {
    let period = 2 * kk;
    let mut c = Array2::zeros((n, kk));
    let mut s = Array2::zeros((n, kk));
    for i in 0..n {
        for k in 0..kk {
            let r = ((i + 1) * (2 * k + 1)) % period;
            let theta = 2.0 * PI * r as f64 / period as f64;
            c[[i, k]] = theta.cos();
            s[[i, k]] = theta.sin();
        }
    }
    (c, s)
}

/// Coefficient amplitudes √g(x_k, x_l)/K.
fn amplitudes(g: &SpectralDensity, kk: usize) -> Result<Array2<f64>> {
    let mut a = Array2::zeros((kk, kk));
    for k in 0..kk {
        for l in 0..kk {
            let v = g.eval(midpoint(k, kk), midpoint(l, kk))?;
            a[[k, l]] = v.sqrt() / kk as f64;
        }
    }
    Ok(a)
}

/// Synthesizes G(i,j), 1 ≤ i,j ≤ n, drawing (ξ_kl, η_kl) cell by cell in
/// row-major order from the stream `key`.
pub fn synth_gaussian_field(g: &SpectralDensity, n: usize, k: usize, key: StreamKey) -> Result<GaussianField> {
    if k < MIN_SPECTRAL_GRID {
        return Err(Error::Domain(format!("spectral grid K must be at least {MIN_SPECTRAL_GRID}, got {k}")));
    }
    if n == 0 {
        return Err(Error::Domain("field size must be positive".into()));
    }
    let amp = amplitudes(g, k)?;
    let mut rng = key.rng();
    let mut cr = Array2::zeros((k, k));
    let mut ci = Array2::zeros((k, k));
    for a in 0..k {
        for b in 0..k {
            let xi: f64 = rng.sample(StandardNormal);
            let eta: f64 = rng.sample(StandardNormal);
            cr[[a, b]] = amp[[a, b]] * xi;
            ci[[a, b]] = -amp[[a, b]] * eta;
        }
    }
    let (ec, es) = phases(n, k);
    let pr = ec.dot(&cr) - es.dot(&ci);
    let pi = ec.dot(&ci) + es.dot(&cr);
    let values = pr.dot(&ec.t()) - pi.dot(&es.t());
    Ok(GaussianField { values, k, key })
}

/// Exact covariance of the synthesized field at lag (m, n).
pub fn midpoint_covariance(g: &SpectralDensity, k: usize, m: i64, n: i64) -> Result<f64> {
    let mut sum = 0.0;
    for a in 0..k {
        for b in 0..k {
            let v = g.eval(midpoint(a, k), midpoint(b, k))?;
            let theta = 2.0 * PI * (m as f64 * midpoint(a, k) + n as f64 * midpoint(b, k));
            sum += v * theta.cos();
        }
    }
    Ok(sum / (k * k) as f64)
}
