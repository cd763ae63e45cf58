//! Free moment–cumulant relations and the convolutions built on them.
//!
//! m_n = Σ_{π ∈ NC(n)} Π_{B ∈ π} κ_{|B|} depends on π only through its block
//! sizes, so each order is a sum over integer partitions of n weighted by the
//! number of non-crossing partitions of that type. That number is
//! n! / ((n − b + 1)! · Π_i r_i!) for a type with b blocks, r_i of size i.

use rayon::prelude::*;

use super::{MomentSequence, Parity};
use crate::error::{Error, Result};
use crate::nc::{enumerate_nc2, kreweras};

/// Highest order supported by the transforms (24! still fits in u128).
pub const MAX_TRANSFORM_ORDER: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct CumulantSequence {
    values: Vec<f64>,
    parity: Parity,
}

impl CumulantSequence {
    pub fn new(values: Vec<f64>, parity: Parity) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Malformed("a cumulant sequence needs at least one entry".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite cumulant {v}")));
        }
        Ok(Self { values, parity })
    }

    /// κ_1, …, κ_{n_max}.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, n: usize) -> f64 {
        self.values[n - 1]
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }
}

/// Block-size types of NC(n) with their multiplicities. Each type is listed
/// with nonincreasing block sizes; types come in reverse lexicographic order,
/// so the one-block type `[n]` is first.
pub fn block_type_counts(n: usize) -> Result<Vec<(Vec<usize>, u128)>> {
    if n == 0 || n > MAX_TRANSFORM_ORDER {
        return Err(Error::SizeLimit {
            what: "moment-cumulant order",
            requested: n,
            limit: MAX_TRANSFORM_ORDER,
        });
    }
    let mut out = Vec::new();
    let mut parts = Vec::new();
    integer_partitions(n, n, &mut parts, &mut out);
    Ok(out
        .into_iter()
        .map(|p| {
            let count = type_count(n, &p);
            (p, count)
        })
        .collect())
}

fn integer_partitions(rest: usize, max: usize, parts: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if rest == 0 {
        out.push(parts.clone());
        return;
    }
    for p in (1..=rest.min(max)).rev() {
        parts.push(p);
        integer_partitions(rest - p, p, parts, out);
        parts.pop();
    }
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

fn type_count(n: usize, parts: &[usize]) -> u128 {
    let b = parts.len();
    let mut denom = factorial(n - b + 1);
    let mut i = 0;
    while i < parts.len() {
        let j = parts[i..].iter().take_while(|&&p| p == parts[i]).count();
        denom *= factorial(j);
        i += j;
    }
    factorial(n) / denom
}

fn weighted_sum(types: &[(Vec<usize>, u128)], kappa: &[f64], skip_first: bool) -> f64 {
    types
        .iter()
        .skip(usize::from(skip_first))
        .map(|(parts, count)| *count as f64 * parts.iter().map(|&p| kappa[p - 1]).product::<f64>())
        .sum()
}

fn to_cumulants(m: &[f64]) -> Result<Vec<f64>> {
    let mut kappa = vec![0.0; m.len()];
    for n in 1..=m.len() {
        let types = block_type_counts(n)?;
        kappa[n - 1] = m[n - 1] - weighted_sum(&types, &kappa, true);
    }
    Ok(kappa)
}

fn to_moments(kappa: &[f64]) -> Result<Vec<f64>> {
    (1..=kappa.len())
        .map(|n| Ok(weighted_sum(&block_type_counts(n)?, kappa, false)))
        .collect()
}

pub fn moments_to_cumulants(ms: &MomentSequence) -> Result<CumulantSequence> {
    CumulantSequence::new(to_cumulants(ms.values())?, ms.parity())
}

pub fn cumulants_to_moments(cs: &CumulantSequence) -> Result<MomentSequence> {
    let mut m = to_moments(cs.values())?;
    if cs.parity() == Parity::Symmetric {
        for v in m.iter_mut().step_by(2) {
            *v = 0.0;
        }
    }
    MomentSequence::exact(m, cs.parity())
}

/// First-order error propagation through `f` by central differences.
fn propagate(inputs: &[f64], errors: &[f64], f: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    let base = f(inputs)?;
    let mut var = vec![0.0; base.len()];
    let mut x = inputs.to_vec();
    for k in 0..inputs.len() {
        if errors[k] == 0.0 {
            continue;
        }
        let h = 1e-6 * inputs[k].abs().max(1.0);
        x[k] = inputs[k] + h;
        let up = f(&x)?;
        x[k] = inputs[k] - h;
        let down = f(&x)?;
        x[k] = inputs[k];
        for (v, (u, d)) in var.iter_mut().zip(up.iter().zip(&down)) {
            let deriv = (u - d) / (2.0 * h);
            *v += (deriv * errors[k]).powi(2);
        }
    }
    Ok(var.into_iter().map(f64::sqrt).collect())
}

fn finish(values: Vec<f64>, errors: Vec<f64>, parity: Parity) -> Result<MomentSequence> {
    let (mut values, mut errors) = (values, errors);
    if parity == Parity::Symmetric {
        for k in (0..values.len()).step_by(2) {
            values[k] = 0.0;
            errors[k] = 0.0;
        }
    }
    MomentSequence::new(values, errors, parity)
}

/// Free additive convolution: cumulants add. Standard errors of the inputs are
/// propagated to first order.
pub fn boxplus(a: &MomentSequence, b: &MomentSequence) -> Result<MomentSequence> {
    let n = a.n_max();
    if b.n_max() != n {
        return Err(Error::Malformed(format!(
            "cannot convolve sequences of lengths {n} and {}",
            b.n_max()
        )));
    }
    let combine = |x: &[f64]| -> Result<Vec<f64>> {
        let ka = to_cumulants(&x[..n])?;
        let kb = to_cumulants(&x[n..])?;
        let k: Vec<f64> = ka.iter().zip(&kb).map(|(p, q)| p + q).collect();
        to_moments(&k)
    };
    let inputs: Vec<f64> = a.values().iter().chain(b.values()).copied().collect();
    let errors: Vec<f64> = a.std_errors().iter().chain(b.std_errors()).copied().collect();
    let values = combine(&inputs)?;
    let se = propagate(&inputs, &errors, combine)?;
    let parity = if a.parity() == Parity::Symmetric && b.parity() == Parity::Symmetric {
        Parity::Symmetric
    } else {
        Parity::General
    };
    finish(values, se, parity)
}

/// Moments of ν ⊠ μ_1 for a law ν on [0, ∞), from the moments of ν:
/// m_{2n} = Σ_{σ ∈ NC₂(2n)} Π_i m_{|V_i|}(ν) over the Kreweras blocks of σ.
/// Blocks have at most n elements, so ν is needed up to order ⌊n_max/2⌋.
pub fn boxtimes_positive_semicircle(nu: &MomentSequence, n_max: usize) -> Result<MomentSequence> {
    let half = n_max / 2;
    if nu.n_max() < half {
        return Err(Error::Malformed(format!(
            "order {n_max} needs moments of nu up to {half}, only {} given",
            nu.n_max()
        )));
    }
    // Block-size multisets of the Kreweras complements, per order.
    let shapes: Vec<Vec<Vec<usize>>> = (1..=half)
        .map(|n| {
            let sigmas = enumerate_nc2(n)?;
            Ok(sigmas.par_iter().map(|s| kreweras(s).block_sizes()).collect())
        })
        .collect::<Result<_>>()?;
    let eval = |m: &[f64]| -> Result<Vec<f64>> {
        let get = |k: usize| if k == 0 { 1.0 } else { m[k - 1] };
        Ok(shapes
            .iter()
            .map(|per_sigma| {
                per_sigma
                    .iter()
                    .map(|sizes| sizes.iter().map(|&s| get(s)).product::<f64>())
                    .sum()
            })
            .collect())
    };
    let inputs = &nu.values()[..half];
    let even = eval(inputs)?;
    let even_se = propagate(inputs, &nu.std_errors()[..half], eval)?;
    MomentSequence::symmetric_from_even(&even, &even_se, n_max.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{measure_moments, semicircle_moments};
    use crate::nc::enumerate_nc;
    use crate::profile::MeasureSpec;
    use std::collections::BTreeMap;

    #[test]
    fn type_counts_match_enumeration() {
        for n in 1..=9 {
            let mut seen: BTreeMap<Vec<usize>, u128> = BTreeMap::new();
            for p in enumerate_nc(n).unwrap() {
                let mut sizes = p.block_sizes();
                sizes.sort_unstable_by(|a, b| b.cmp(a));
                *seen.entry(sizes).or_default() += 1;
            }
            let table: BTreeMap<Vec<usize>, u128> = block_type_counts(n).unwrap().into_iter().collect();
            assert_eq!(seen, table, "n = {n}");
        }
    }

    #[test]
    fn semicircle_cumulants() {
        let k = moments_to_cumulants(&semicircle_moments(1.0, 16).unwrap()).unwrap();
        for n in 1..=16 {
            let want = if n == 2 { 1.0 } else { 0.0 };
            assert!((k.get(n) - want).abs() < 1e-9, "kappa_{n} = {}", k.get(n));
        }
    }

    #[test]
    fn point_mass_cumulants() {
        let k = moments_to_cumulants(&measure_moments(&MeasureSpec::delta(1.7).unwrap(), 6).unwrap()).unwrap();
        assert!((k.get(1) - 1.7).abs() < 1e-14);
        for n in 2..=6 {
            assert!(k.get(n).abs() < 1e-12, "kappa_{n} = {}", k.get(n));
        }
    }

    #[test]
    fn third_moment_expansion() {
        let (k1, k2, k3) = (0.3, 1.1, -0.4);
        let cs = CumulantSequence::new(vec![k1, k2, k3], Parity::General).unwrap();
        let m = cumulants_to_moments(&cs).unwrap();
        assert!((m.get(3) - (k3 + 3.0 * k2 * k1 + k1.powi(3))).abs() < 1e-15);
    }

    #[test]
    fn semicircles_add_in_quadrature() {
        let s = boxplus(&semicircle_moments(0.6, 12).unwrap(), &semicircle_moments(0.8, 12).unwrap()).unwrap();
        let want = semicircle_moments(1.0, 12).unwrap();
        for n in 1..=12 {
            assert!((s.get(n) - want.get(n)).abs() <= 1e-12 * want.get(n).max(1.0));
        }
        assert_eq!(s.parity(), Parity::Symmetric);
    }

    #[test]
    fn boxtimes_examples() {
        let nu = measure_moments(&"uniform:1:2".parse().unwrap(), 4).unwrap();
        let m = boxtimes_positive_semicircle(&nu, 4).unwrap();
        assert!((m.get(2) - 2.25).abs() < 1e-14);
        assert!((m.get(4) - 10.5).abs() < 1e-13);
        let one = measure_moments(&MeasureSpec::delta(1.0).unwrap(), 8).unwrap();
        let m = boxtimes_positive_semicircle(&one, 16).unwrap();
        assert_eq!(m.values(), semicircle_moments(1.0, 16).unwrap().values());
        assert!(boxtimes_positive_semicircle(&nu, 10).is_err());
    }

    #[test]
    fn error_propagation_is_linear() {
        let a = MomentSequence::new(vec![0.0, 2.0], vec![0.0, 0.1], Parity::Symmetric).unwrap();
        let b = semicircle_moments(1.0, 2).unwrap();
        let s = boxplus(&a, &b).unwrap();
        assert!((s.get(2) - 3.0).abs() < 1e-14);
        assert!((s.std_error(2) - 0.1).abs() < 1e-8);
    }
}
