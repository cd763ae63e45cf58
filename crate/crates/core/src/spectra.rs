//! Spectra of symmetric matrices and statistics of empirical spectral distributions.

use std::io::Write;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;

/// Eigenvalues of one matrix, ascending, with the accuracy of the solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSample {
    eigenvalues: Vec<f64>,
    /// |Σλ − Tr M| / max(Σ|λ|, 1e-300).
    pub trace_error: f64,
    /// |Σλ² − ‖M‖²_F| / max(‖M‖²_F, 1e-300).
    pub frobenius_error: f64,
}

impl SpectralSample {
    /// Wraps precomputed eigenvalues (sorted here); the error fields are zero.
    pub fn from_values(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() || eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::Malformed("a spectral sample needs finite eigenvalues".into()));
        }
        eigenvalues.sort_by(f64::total_cmp);
        Ok(Self {
            eigenvalues,
            trace_error: 0.0,
            frobenius_error: 0.0,
        })
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// (1/N) Σ λᵢᵏ for k = 1..=n_max.
    pub fn moments(&self, n_max: usize) -> Vec<f64> {
        let n = self.n() as f64;
        (1..=n_max as i32)
            .map(|k| self.eigenvalues.iter().map(|l| l.powi(k)).sum::<f64>() / n)
            .collect()
    }

    pub fn empirical(&self) -> EmpiricalDistribution {
        EmpiricalDistribution {
            sorted: self.eigenvalues.clone(),
        }
    }

    /// Number of eigenvalues that are exactly zero.
    pub fn exact_zeros(&self) -> usize {
        self.eigenvalues.iter().filter(|v| **v == 0.0).count()
    }

    /// One eigenvalue per line.
    pub fn write_values<W: Write>(&self, mut out: W) -> Result<()> {
        for v in &self.eigenvalues {
            writeln!(out, "{v}")?;
        }
        Ok(())
    }
}

/// All eigenvalues of `m`.
///
/// Rows that are identically zero split off exact zero eigenvalues; the rest
/// is handed to faer's dense self-adjoint solver. The solve is rejected when
/// the trace or Frobenius identity is off by more than 1e-8 relative.
pub fn eigenvalues(m: &SymmetricMatrix) -> Result<SpectralSample> {
    let n = m.n();
    let zero = m.zero_rows();
    let mut is_zero = vec![false; n];
    for &i in &zero {
        is_zero[i] = true;
    }
    let keep: Vec<usize> = (0..n).filter(|i| !is_zero[*i]).collect();
    let mut values = vec![0.0; zero.len()];
    if !keep.is_empty() {
        // Sequential inside the solver; replicates are parallelized outside,
        // and this keeps results independent of the thread count.
        faer::set_global_parallelism(faer::Par::Seq);
        let a = m.data();
        let sub = faer::Mat::<f64>::from_fn(keep.len(), keep.len(), |i, j| a[[keep[i], keep[j]]]);
        let ev = sub
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| Error::Numeric(format!("eigensolver did not converge: {e:?}")))?;
        values.extend(ev);
    }
    values.sort_by(f64::total_cmp);
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("eigensolver returned {v}")));
    }
    let sum: f64 = values.iter().sum();
    let abs_sum: f64 = values.iter().map(|v| v.abs()).sum();
    let sq: f64 = values.iter().map(|v| v * v).sum();
    let fro = m.frobenius_sq();
    let trace_error = (sum - m.trace()).abs() / abs_sum.max(1e-300);
    let frobenius_error = (sq - fro).abs() / fro.max(1e-300);
    if trace_error > 1e-8 || frobenius_error > 1e-8 {
        return Err(Error::Numeric(format!(
            "eigenvalues fail the trace identities (relative errors {trace_error:e}, {frobenius_error:e})"
        )));
    }
    Ok(SpectralSample {
        eigenvalues: values,
        trace_error,
        frobenius_error,
    })
}

/// A distribution function on the real line.
pub trait Cdf {
    fn cdf(&self, x: f64) -> f64;
}

/// Step function F̂(x) = #{λ ≤ x}/N of a finite sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    sorted: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| v.is_nan()) {
            return Err(Error::Malformed("an empirical distribution needs a nonempty sample without NaN".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { sorted: values })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sample(&self) -> &[f64] {
        &self.sorted
    }

    fn count_le(&self, x: f64) -> usize {
        self.sorted.partition_point(|v| *v <= x)
    }

    fn count_lt(&self, x: f64) -> usize {
        self.sorted.partition_point(|v| *v < x)
    }
}

impl Cdf for EmpiricalDistribution {
    fn cdf(&self, x: f64) -> f64 {
        self.count_le(x) as f64 / self.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Semicircle {
    pub alpha: f64,
}

impl Cdf for Semicircle {
    fn cdf(&self, x: f64) -> f64 {
        semicircle_cdf(self.alpha, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardNormalCdf;

impl Cdf for StandardNormalCdf {
    fn cdf(&self, x: f64) -> f64 {
        Normal::standard().cdf(x)
    }
}

/// Distribution function of the semicircle law on [−2α, 2α]:
/// F(x) = 1/2 + (t√(1−t²) + asin t)/π with t = x/(2α).
pub fn semicircle_cdf(alpha: f64, x: f64) -> f64 {
    let t = (x / (2.0 * alpha)).clamp(-1.0, 1.0);
    if t == -1.0 {
        return 0.0;
    }
    if t == 1.0 {
        return 1.0;
    }
    0.5 + (t * (1.0 - t * t).sqrt() + t.asin()) / std::f64::consts::PI
}

/// sup_x |F̂_a(x) − F̂_b(x)|, evaluated at every jump of either sample.
pub fn ks_distance(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut sup = 0.0f64;
    for &x in a.sorted.iter().chain(&b.sorted) {
        let d = (a.count_le(x) as f64 / na - b.count_le(x) as f64 / nb).abs();
        sup = sup.max(d);
    }
    sup
}

/// sup_x |F̂(x) − F(x)| for a continuous F, using both one-sided limits at each jump.
pub fn ks_to_cdf(a: &EmpiricalDistribution, f: &impl Cdf) -> f64 {
    let n = a.len() as f64;
    let mut sup = 0.0f64;
    let mut i = 0;
    while i < a.sorted.len() {
        let x = a.sorted[i];
        let below = a.count_lt(x) as f64 / n;
        let through = a.count_le(x) as f64 / n;
        let fx = f.cdf(x);
        sup = sup.max((below - fx).abs()).max((through - fx).abs());
        i = a.count_le(x);
    }
    sup
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
    pub underflow: usize,
    pub overflow: usize,
    pub total: usize,
}

impl Histogram {
    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    /// CSV columns bin_left, bin_right, count, density_estimate.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin_left", "bin_right", "count", "density_estimate"])?;
        let width = self.width();
        for (k, c) in self.counts.iter().enumerate() {
            let left = self.lo + width * k as f64;
            let right = if k + 1 == self.counts.len() { self.hi } else { left + width };
            let density = *c as f64 / (self.total as f64 * width);
            w.write_record([left.to_string(), right.to_string(), c.to_string(), density.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fixed-width bins over [lo, hi]; the last bin is closed on the right.
pub fn histogram(s: &SpectralSample, bins: usize, lo: f64, hi: f64) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::Domain("histogram needs at least one bin".into()));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Domain(format!("invalid histogram range [{lo}, {hi}]")));
    }
    let mut counts = vec![0; bins];
    let (mut underflow, mut overflow) = (0, 0);
    let width = (hi - lo) / bins as f64;
    for &v in &s.eigenvalues {
        if v < lo {
            underflow += 1;
        } else if v > hi {
            overflow += 1;
        } else {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
    }
    Ok(Histogram {
        lo,
        hi,
        counts,
        underflow,
        overflow,
        total: s.n(),
    })
}

/// Fraction of eigenvalues in (−eps, eps).
pub fn near_zero_mass(s: &SpectralSample, eps: f64) -> f64 {
    s.eigenvalues.iter().filter(|v| v.abs() < eps).count() as f64 / s.n() as f64
}
