//! Moment sequences, the limiting-moment formula, and moment-level free convolutions.

mod cumulants;
mod integrate;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use cumulants::{
    block_type_counts, boxplus, boxtimes_positive_semicircle, cumulants_to_moments, moments_to_cumulants,
    CumulantSequence,
};
pub use integrate::{eval_l, limiting_moments, IntegrationConfig};

use crate::error::{Error, Result};
use crate::nc::catalan;
use crate::profile::MeasureSpec;

/// Relative tolerance on the smallest Hankel eigenvalue.
pub const HANKEL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    /// Odd moments vanish identically.
    Symmetric,
    General,
}

/// Moments m_1..m_{n_max} with per-entry error estimates.
///
/// For symmetric sequences the odd entries are stored as exact zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence {
    values: Vec<f64>,
    std_errors: Vec<f64>,
    parity: Parity,
}

impl MomentSequence {
    pub fn new(values: Vec<f64>, std_errors: Vec<f64>, parity: Parity) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Malformed("a moment sequence needs at least one entry".into()));
        }
        if values.len() != std_errors.len() {
            return Err(Error::Malformed(format!(
                "{} moments but {} standard errors",
                values.len(),
                std_errors.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite moment {v}")));
        }
        if let Some(s) = std_errors.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::Malformed(format!("invalid standard error {s}")));
        }
        if parity == Parity::Symmetric {
            for (k, (v, s)) in values.iter().zip(&std_errors).enumerate().filter(|(k, _)| k % 2 == 0) {
                if *v != 0.0 || *s != 0.0 {
                    return Err(Error::Malformed(format!(
                        "symmetric sequence has nonzero odd moment m_{} = {v}",
                        k + 1
                    )));
                }
            }
        }
        Ok(Self {
            values,
            std_errors,
            parity,
        })
    }

    pub fn exact(values: Vec<f64>, parity: Parity) -> Result<Self> {
        let zeros = vec![0.0; values.len()];
        Self::new(values, zeros, parity)
    }

    /// Builds a symmetric sequence of length `n_max` from m_2, m_4, … .
    pub fn symmetric_from_even(even: &[f64], even_errors: &[f64], n_max: usize) -> Result<Self> {
        if even.len() < n_max / 2 || even_errors.len() < n_max / 2 {
            return Err(Error::Malformed(format!("need {} even moments for order {n_max}", n_max / 2)));
        }
        let mut values = vec![0.0; n_max];
        let mut errors = vec![0.0; n_max];
        for k in 1..=n_max / 2 {
            values[2 * k - 1] = even[k - 1];
            errors[2 * k - 1] = even_errors[k - 1];
        }
        Self::new(values, errors, Parity::Symmetric)
    }

    pub fn n_max(&self) -> usize {
        self.values.len()
    }

    /// m_n, with m_0 = 1.
    pub fn get(&self, n: usize) -> f64 {
        if n == 0 {
            1.0
        } else {
            self.values[n - 1]
        }
    }

    pub fn std_error(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.std_errors[n - 1]
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn std_errors(&self) -> &[f64] {
        &self.std_errors
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn is_exact(&self) -> bool {
        self.std_errors.iter().all(|s| *s == 0.0)
    }

    /// The first `n` entries.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n_max() {
            return Err(Error::Malformed(format!("cannot take {n} of {} moments", self.n_max())));
        }
        Self::new(self.values[..n].to_vec(), self.std_errors[..n].to_vec(), self.parity)
    }

    /// Smallest eigenvalue of [m_{i+j}] over max(1, largest eigenvalue), for
    /// 0 ≤ i, j ≤ ⌊n_max/2⌋. Nonnegative for a valid moment sequence.
    pub fn hankel_min_ratio(&self) -> f64 {
        let d = self.n_max() / 2 + 1;
        let h = faer::Mat::<f64>::from_fn(d, d, |i, j| self.get(i + j));
        match h.self_adjoint_eigenvalues(faer::Side::Lower) {
            Ok(ev) => {
                let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = ev.iter().copied().fold(0.0f64, f64::max);
                lo / hi.max(1.0)
            }
            Err(_) => f64::NEG_INFINITY,
        }
    }

    pub fn hankel_positive(&self) -> bool {
        self.hankel_min_ratio() >= -HANKEL_TOL
    }

    /// CSV with columns order, value, std_error. Symmetric sequences list even orders only.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["order", "value", "std_error"])?;
        for n in 1..=self.n_max() {
            if self.parity == Parity::Symmetric && n % 2 == 1 {
                continue;
            }
            w.write_record([n.to_string(), self.get(n).to_string(), self.std_error(n).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Moments of the semicircle law of standard deviation `alpha`: m_{2n} = alpha^{2n} C_n.
pub fn semicircle_moments(alpha: f64, n_max: usize) -> Result<MomentSequence> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("semicircle scale must be positive, got {alpha}")));
    }
    let even = (1..=n_max / 2)
        .map(|n| Ok(alpha.powi(2 * n as i32) * catalan(n)? as f64))
        .collect::<Result<Vec<_>>>()?;
    MomentSequence::symmetric_from_even(&even, &vec![0.0; even.len()], n_max.max(1))
}

pub fn measure_moments(nu: &MeasureSpec, n_max: usize) -> Result<MomentSequence> {
    let values = (1..=n_max).map(|n| nu.moment(n as u32)).collect();
    MomentSequence::exact(values, Parity::General)
}

/// Checks m_{2n} ≤ M^{2n}·C_n for every stored even order, allowing rounding
/// and three standard errors of slack.
pub fn moment_growth_check(ms: &MomentSequence, bound: f64) -> bool {
    (1..=ms.n_max() / 2).all(|n| {
        let cap = bound.powi(2 * n as i32) * catalan(n).map(|c| c as f64).unwrap_or(f64::INFINITY);
        ms.get(2 * n) <= cap * (1.0 + 1e-9) + 3.0 * ms.std_error(2 * n)
    })
}
