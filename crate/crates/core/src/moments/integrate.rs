//! The limiting even moments m_{2n} = Σ_{σ ∈ NC₂(2n)} ∫_{(0,1)^{n+1}} L_{σ,f}.
//!
//! L_{σ,f}(x) = Π_{(u,v) ∈ σ} f²(x_{T(u)}, x_{T(v)}) couples the n+1 variables
//! along the edges of the Kreweras graph of σ, which is a tree. The midpoint
//! rule on a G^{n+1} tensor grid therefore factorizes: integrating the leaves
//! first turns the (n+1)-dimensional sum into n matrix–vector products with
//! the G×G kernel f²(x_i, x_j), so the tensor rule is evaluated exactly at
//! cost n·G² per partition for every order.

use ndarray::{Array1, Array2};
use rand::distributions::Open01;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MomentSequence;
use crate::error::{Error, Result};
use crate::nc::{enumerate_nc2, kreweras, KrewerasLabeling, PairPartition, DEFAULT_NC2_LIMIT};
use crate::profile::Profile;
use crate::rng::{Role, StreamKey};

pub const DEFAULT_GRID: usize = 256;
const DEFAULT_MC_BUDGET: usize = 1 << 24;

fn default_budget() -> usize {
    DEFAULT_MC_BUDGET
}

/// How the partition integrals are evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntegrationConfig {
    /// Tensor midpoint rule with `grid` points per axis. The reported error of
    /// each entry is |I_G − I_{G/2}| / 3, the usual estimate for a rule of
    /// order two; it is zero whenever halving the grid changes nothing (for
    /// instance for constant profiles).
    Midpoint { grid: usize },
    /// Plain Monte Carlo with `samples` uniform points per partition. With a
    /// `tolerance`, the sample count doubles until every entry's standard
    /// error is at most `tolerance` times its value, failing once `budget`
    /// samples per partition would be exceeded.
    MonteCarlo {
        samples: usize,
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
        #[serde(default = "default_budget")]
        budget: usize,
    },
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig::Midpoint { grid: DEFAULT_GRID }
    }
}

impl IntegrationConfig {
    pub fn midpoint(grid: usize) -> Self {
        IntegrationConfig::Midpoint { grid }
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        IntegrationConfig::MonteCarlo {
            samples,
            seed,
            tolerance: None,
            budget: DEFAULT_MC_BUDGET,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            IntegrationConfig::Midpoint { grid } => {
                if grid < 4 || grid % 2 == 1 {
                    return Err(Error::Config(format!("midpoint grid must be even and at least 4, got {grid}")));
                }
            }
            IntegrationConfig::MonteCarlo {
                samples,
                tolerance,
                budget,
                ..
            } => {
                if samples < 2 {
                    return Err(Error::Config(format!("need at least 2 Monte Carlo samples, got {samples}")));
                }
                if budget < samples {
                    return Err(Error::Config(format!("sample budget {budget} is below the sample count {samples}")));
                }
                if let Some(t) = tolerance {
                    if !(t > 0.0 && t.is_finite()) {
                        return Err(Error::Config(format!("tolerance must be positive, got {t}")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// L_{σ,f}(x) = Π_{(u,v) ∈ σ} f²(x_{T(u)}, x_{T(v)}), with `x` holding the m+1 block variables.
pub fn eval_l(sigma: &PairPartition, labeling: &KrewerasLabeling, f: &Profile, x: &[f64]) -> Result<f64> {
    if labeling.source() != sigma {
        return Err(Error::Malformed(format!("labeling belongs to {}, not {sigma}", labeling.source())));
    }
    if x.len() != sigma.m() + 1 {
        return Err(Error::Malformed(format!(
            "expected {} block variables, got {}",
            sigma.m() + 1,
            x.len()
        )));
    }
    let mut prod = 1.0;
    for (a, b) in labeling.edges() {
        let v = f.eval(x[a], x[b])?;
        prod *= v * v;
    }
    Ok(prod)
}

/// Limiting moments m_1..m_{n_max} of the spectral law of the profile `f`.
/// Odd moments are zero. `f` must carry a finite bound.
pub fn limiting_moments(f: &Profile, n_max: usize, cfg: &IntegrationConfig) -> Result<MomentSequence> {
    f.require_bound()?;
    cfg.validate()?;
    if n_max == 0 || n_max / 2 > DEFAULT_NC2_LIMIT {
        return Err(Error::SizeLimit {
            what: "moment order",
            requested: n_max,
            limit: 2 * DEFAULT_NC2_LIMIT,
        });
    }
    let orders: Vec<Vec<Vec<(usize, usize)>>> = (1..=n_max / 2)
        .map(|n| Ok(enumerate_nc2(n)?.iter().map(|s| kreweras(s).edges()).collect()))
        .collect::<Result<_>>()?;

    let (even, se) = match *cfg {
        IntegrationConfig::Midpoint { grid } => midpoint(f, &orders, grid)?,
        IntegrationConfig::MonteCarlo {
            samples,
            seed,
            tolerance,
            budget,
        } => {
            let mut s = samples;
            loop {
                let (even, se) = monte_carlo(f, &orders, s, seed)?;
                let Some(tol) = tolerance else { break (even, se) };
                if even.iter().zip(&se).all(|(v, e)| *e <= tol * v.abs()) {
                    break (even, se);
                }
                if s.saturating_mul(2) > budget {
                    return Err(Error::Resource(format!(
                        "relative standard error {tol} not reached within {budget} samples per partition"
                    )));
                }
                s *= 2;
            }
        }
    };
    MomentSequence::symmetric_from_even(&even, &se, n_max)
}

fn kernel(f: &Profile, grid: usize) -> Result<Array2<f64>> {
    let pts: Vec<f64> = (0..grid).map(|i| (i as f64 + 0.5) / grid as f64).collect();
    let mut k = Array2::zeros((grid, grid));
    for i in 0..grid {
        for j in 0..=i {
            let v = f.value(pts[i], pts[j]);
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::ProfileValidity(format!("f({}, {}) = {v} is not a nonnegative number", pts[i], pts[j])));
            }
            k[[i, j]] = v * v;
            k[[j, i]] = v * v;
        }
    }
    Ok(k)
}

/// Rooted at block 0: vertices in breadth-first order and each vertex's parent.
fn rooted(edges: &[(usize, usize)]) -> (Vec<usize>, Vec<usize>) {
    let nv = edges.len() + 1;
    let mut adj = vec![Vec::new(); nv];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut parent = vec![usize::MAX; nv];
    let mut order = vec![0];
    parent[0] = 0;
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        for &w in &adj[v] {
            if parent[w] == usize::MAX {
                parent[w] = v;
                order.push(w);
            }
        }
    }
    debug_assert_eq!(order.len(), nv, "Kreweras graph must be connected");
    (order, parent)
}

fn tree_integral(edges: &[(usize, usize)], k: &Array2<f64>) -> f64 {
    let g = k.nrows();
    let (order, parent) = rooted(edges);
    let mut prod: Vec<Array1<f64>> = vec![Array1::ones(g); edges.len() + 1];
    for &v in order.iter().skip(1).rev() {
        let msg = k.dot(&prod[v]) / g as f64;
        prod[parent[v]] *= &msg;
    }
    prod[0].sum() / g as f64
}

fn midpoint(f: &Profile, orders: &[Vec<Vec<(usize, usize)>>], grid: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let fine = kernel(f, grid)?;
    let coarse = kernel(f, grid / 2)?;
    let mut even = Vec::with_capacity(orders.len());
    let mut se = Vec::with_capacity(orders.len());
    for trees in orders {
        let parts: Vec<(f64, f64)> = trees
            .par_iter()
            .map(|e| (tree_integral(e, &fine), tree_integral(e, &coarse)))
            .collect();
        let a: f64 = parts.iter().map(|p| p.0).sum();
        let b: f64 = parts.iter().map(|p| p.1).sum();
        even.push(a);
        se.push((a - b).abs() / 3.0);
    }
    Ok((even, se))
}

fn monte_carlo(
    f: &Profile,
    orders: &[Vec<Vec<(usize, usize)>>],
    samples: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut even = Vec::with_capacity(orders.len());
    let mut se = Vec::with_capacity(orders.len());
    for (n, trees) in orders.iter().enumerate() {
        let parts = trees
            .par_iter()
            .enumerate()
            .map(|(idx, edges)| {
                let key = StreamKey::new(seed, Role::MonteCarlo, (((n + 1) as u64) << 32) | idx as u64);
                mc_partition(f, edges, samples, key)
            })
            .collect::<Result<Vec<_>>>()?;
        even.push(parts.iter().map(|p| p.0).sum());
        se.push(parts.iter().map(|p| p.1 * p.1).sum::<f64>().sqrt());
    }
    Ok((even, se))
}

fn mc_partition(f: &Profile, edges: &[(usize, usize)], samples: usize, key: StreamKey) -> Result<(f64, f64)> {
    let mut rng = key.rng();
    let mut x = vec![0.0; edges.len() + 1];
    let (mut mean, mut m2) = (0.0, 0.0);
    for s in 0..samples {
        for v in x.iter_mut() {
            *v = rng.sample(Open01);
        }
        let mut prod = 1.0;
        for &(a, b) in edges {
            let v = f.value(x[a], x[b]);
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::ProfileValidity(format!("f({}, {}) = {v} is not a nonnegative number", x[a], x[b])));
            }
            prod *= v * v;
        }
        let delta = prod - mean;
        mean += delta / (s + 1) as f64;
        m2 += delta * (prod - mean);
    }
    let var = m2 / (samples - 1) as f64;
    Ok((mean, (var / samples as f64).sqrt()))
}
