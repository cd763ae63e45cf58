//! Profiles outside the admissible class whose ESDs depend on the arithmetic
//! of N+1, so no single limit exists. These bypass profile validation and are
//! built directly on the lattice.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::ExperimentReport;
use crate::error::{Error, Result};
use crate::matrix::{hadamard, wigner, SymmetricMatrix};
use crate::rng::{Role, StreamKey};
use crate::spectra::{eigenvalues, ks_to_cdf, Semicircle, StandardNormalCdf};

pub const MAX_DEMO_SIZE: usize = 2003;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pathology {
    /// f(x,x) = √q when x = p/q in lowest terms with q prime, zero elsewhere.
    Prime,
    /// f = 1 where both coordinates are dyadic rationals, zero elsewhere.
    Dyadic,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

/// Denominator of i/(n+1) in lowest terms.
fn denominator(i: usize, n: usize) -> usize {
    (n + 1) / gcd(i, n + 1)
}

fn lattice_matrix(which: Pathology, n: usize) -> Result<SymmetricMatrix> {
    let q: Vec<usize> = (1..=n).map(|i| denominator(i, n)).collect();
    let data = Array2::from_shape_fn((n, n), |(i, j)| match which {
        Pathology::Prime if i == j && is_prime(q[i]) => (q[i] as f64).sqrt(),
        Pathology::Prime => 0.0,
        Pathology::Dyadic if q[i].is_power_of_two() && q[j].is_power_of_two() => 1.0,
        Pathology::Dyadic => 0.0,
    });
    SymmetricMatrix::new(data)
}

/// Largest value of `base^m − 1` not exceeding `size` (m ≥ 1).
fn power_minus_one(base: usize, size: usize) -> usize {
    let mut p = base;
    while p * base - 1 <= size {
        p *= base;
    }
    p - 1
}

/// Reports the ESD of A ∘ W along the two subsequences for each size:
/// for the prime profile N = p−1 (p the largest prime ≤ size+1) and N = 2^m−1;
/// for the dyadic profile N = 2^m−1 and N = 3^m−1. All checks are informational.
pub fn demo_counterexamples(which: Pathology, sizes: &[usize], seed: u64) -> Result<ExperimentReport> {
    if sizes.is_empty() {
        return Err(Error::Config("demo needs at least one size".into()));
    }
    for &s in sizes {
        if s > MAX_DEMO_SIZE {
            return Err(Error::SizeLimit {
                what: "demo size",
                requested: s,
                limit: MAX_DEMO_SIZE,
            });
        }
        if s < 2 {
            return Err(Error::Domain(format!("demo sizes must be at least 2, got {s}")));
        }
    }
    let name = match which {
        Pathology::Prime => "demo-prime",
        Pathology::Dyadic => "demo-dyadic",
    };
    let mut report = ExperimentReport::new(name, json!({"which": which, "sizes": sizes, "seed": seed}));
    for &s in sizes {
        let (converging, collapsing) = match which {
            Pathology::Prime => {
                let p = (2..=s + 1).rev().find(|p| is_prime(*p)).expect("2 is prime");
                (p - 1, power_minus_one(2, s))
            }
            Pathology::Dyadic => (power_minus_one(2, s), power_minus_one(3, s)),
        };
        for (n, target) in [(converging, true), (collapsing, false)] {
            let z = hadamard(&lattice_matrix(which, n)?, &wigner(n, StreamKey::new(seed, Role::Wigner, 0))?)?;
            let ev = eigenvalues(&z)?;
            let zeros = ev.exact_zeros() as f64 / n as f64;
            if target {
                let (law, ks) = match which {
                    Pathology::Prime => ("N(0,1)", ks_to_cdf(&ev.empirical(), &StandardNormalCdf)),
                    Pathology::Dyadic => ("semicircle", ks_to_cdf(&ev.empirical(), &Semicircle { alpha: 1.0 })),
                };
                report.info(format!("N={n}: KS(ESD, {law})"), 0.0, ks);
                report.info(format!("N={n}: fraction of exactly zero eigenvalues"), 0.0, zeros);
            } else {
                report.info(format!("N={n}: fraction of exactly zero eigenvalues"), 1.0, zeros);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_structure() {
        // N+1 = 7: every i/7 has prime denominator, so the profile is √7 on the diagonal
        let a = lattice_matrix(Pathology::Prime, 6).unwrap();
        for i in 0..6 {
            assert_eq!(a.get(i, i), 7f64.sqrt());
        }
        assert!((a.frobenius_sq() - 42.0).abs() < 1e-12);
        // N+1 = 8: only 4/8 = 1/2 has a prime denominator
        let a = lattice_matrix(Pathology::Prime, 7).unwrap();
        assert!((a.frobenius_sq() - 2.0).abs() < 1e-15);
        // no i/9 is dyadic, every i/8 is
        assert_eq!(lattice_matrix(Pathology::Dyadic, 8).unwrap().frobenius_sq(), 0.0);
        assert_eq!(lattice_matrix(Pathology::Dyadic, 7).unwrap().frobenius_sq(), 49.0);
    }

    #[test]
    fn subsequence_sizes() {
        assert_eq!(power_minus_one(2, 1000), 511);
        assert_eq!(power_minus_one(2, 1023), 1023);
        assert_eq!(power_minus_one(3, 1000), 728);
    }
}
