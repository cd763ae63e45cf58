//! Variance profiles f on (0,1)² and the objects they are built from.
//!
//! Every [`Profile`] is symmetric and nonnegative. Constant, rank-one and grid
//! profiles are symmetric by construction; expressions are checked on 256
//! quasi-random points and rejected when asymmetric. Profiles may be unbounded
//! near the edges of the square; anything that needs a finite supremum asks for
//! [`Profile::require_bound`], which succeeds for truncated profiles and for
//! profiles carrying a declared bound.

pub mod density;
pub mod expr;
pub mod measure;
pub mod radial;

use std::fmt;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use density::{DensityKind, SpectralDensity};
pub use measure::{Component, MeasureSpec};
pub use radial::{quantile_radial, quantile_radial_above, RadialFunction};

use crate::error::{Error, Result};
use crate::rng::r2_points;
use expr::{Expr, Variables};
use radial::{check_declared_bound, check_unit};

const SYMMETRY_TOL: f64 = 1e-12;
const SUP_SAMPLES: usize = 257;

/// Samples on a K×K grid of cells; a point is mapped to the cell containing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    values: Array2<f64>,
}

impl Grid {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (r, c) = values.dim();
        if r == 0 || r != c {
            return Err(Error::Malformed(format!("grid must be square and nonempty, got {r}x{c}")));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::ProfileValidity(format!("grid entry {v} is not a nonnegative number")));
        }
        Ok(Self { values })
    }

    /// Reads K rows of K comma-separated numbers, without a header.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for record in reader.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::Malformed(format!("{}: `{s}` is not a number", path.display())))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::Malformed(format!("{}: expected {k} columns in every row", path.display())));
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let values = Array2::from_shape_vec((k, k), flat).map_err(|e| Error::Malformed(e.to_string()))?;
        Self::new(values)
    }

    pub fn k(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    fn cell(&self, t: f64) -> usize {
        let k = self.k();
        ((t * k as f64) as usize).min(k - 1)
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.values[[self.cell(x), self.cell(y)]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    Constant(f64),
    /// r(x)·r(y).
    RankOne(RadialFunction),
    Grid(Grid),
    Expression { expr: Expr, text: String },
    /// f·1 on [1/k, 1−1/k]².
    Truncated { inner: Box<Profile>, k: u32 },
    /// f + alpha; alpha may be negative when f ≥ −alpha.
    Shifted { inner: Box<Profile>, alpha: f64 },
    /// sqrt(f² + 2·alpha·f).
    Remainder { inner: Box<Profile>, alpha: f64 },
    /// sqrt(g(x,1−y) + g(1−y,x)).
    FromDensity(SpectralDensity),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    kind: ProfileKind,
    bound: Option<f64>,
}

impl Profile {
    pub fn constant(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::ProfileValidity(format!("constant profile must be finite and nonnegative, got {alpha}")));
        }
        Ok(Self {
            kind: ProfileKind::Constant(alpha),
            bound: Some(alpha),
        })
    }

    pub fn rank_one(r: RadialFunction) -> Self {
        let bound = r.bound().map(|b| b * b);
        Self {
            kind: ProfileKind::RankOne(r),
            bound,
        }
    }

    pub fn grid(grid: Grid) -> Result<Self> {
        let v = grid.values();
        let k = grid.k();
        for i in 0..k {
            for j in 0..i {
                if v[[i, j]] != v[[j, i]] {
                    return Err(Error::ProfileValidity(format!(
                        "grid is not symmetric at cell ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let bound = Some(grid.max());
        Ok(Self {
            kind: ProfileKind::Grid(grid),
            bound,
        })
    }

    pub fn from_density(g: SpectralDensity) -> Self {
        let bound = g.bound().map(|b| (2.0 * b).sqrt());
        Self {
            kind: ProfileKind::FromDensity(g),
            bound,
        }
    }

    /// Attaches a declared essential bound M ≥ sup f, spot-checked on sample points.
    pub fn with_bound(mut self, m: f64) -> Result<Self> {
        check_declared_bound(m)?;
        for (x, y) in r2_points(256) {
            let v = self.value(x, y);
            if v > m {
                return Err(Error::ProfileValidity(format!("f({x}, {y}) = {v} exceeds the declared bound {m}")));
            }
        }
        self.bound = Some(m);
        Ok(self)
    }

    /// f·1 on [1/k, 1−1/k]². The result is always bounded.
    pub fn truncate(&self, k: u32) -> Result<Self> {
        if k < 2 {
            return Err(Error::Domain(format!("truncation level k must be at least 2, got {k}")));
        }
        let bound = match self.bound {
            Some(b) => b,
            None => {
                let sup = sup_on_square(self, 1.0 / f64::from(k));
                if !sup.is_finite() {
                    return Err(Error::ProfileValidity(format!("profile is not finite on [1/{k}, 1-1/{k}]^2")));
                }
                sup
            }
        };
        Ok(Self {
            kind: ProfileKind::Truncated {
                inner: Box::new(self.clone()),
                k,
            },
            bound: Some(bound),
        })
    }

    /// f + alpha. Negative alpha is allowed provided f ≥ −alpha.
    pub fn shifted(&self, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::Domain(format!("shift must be finite, got {alpha}")));
        }
        let bound = self.bound.map(|b| (b + alpha).max(0.0));
        Ok(Self {
            kind: ProfileKind::Shifted {
                inner: Box::new(self.clone()),
                alpha,
            },
            bound,
        })
    }

    /// sqrt(f² + 2·alpha·f) for alpha ≥ 0.
    pub fn remainder(&self, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::Domain(format!("alpha must be nonnegative, got {alpha}")));
        }
        let bound = self.bound.map(|b| (b * b + 2.0 * alpha * b).sqrt());
        Ok(Self {
            kind: ProfileKind::Remainder {
                inner: Box::new(self.clone()),
                alpha,
            },
            bound,
        })
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn require_bound(&self) -> Result<f64> {
        self.bound.ok_or_else(|| {
            Error::Hypothesis(format!(
                "profile `{self}` has no finite bound; truncate it or declare a bound"
            ))
        })
    }

    /// Value without domain or validity checks, for hot loops over points
    /// already known to lie in (0,1)².
    pub fn value(&self, x: f64, y: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant(c) => *c,
            ProfileKind::RankOne(r) => r.value(x) * r.value(y),
            ProfileKind::Grid(g) => g.value(x, y),
            ProfileKind::Expression { expr, .. } => expr.eval(x, y),
            ProfileKind::Truncated { inner, k } => {
                let lo = 1.0 / f64::from(*k);
                let inside = |t: f64| t >= lo && t <= 1.0 - lo;
                if inside(x) && inside(y) {
                    inner.value(x, y)
                } else {
                    0.0
                }
            }
            ProfileKind::Shifted { inner, alpha } => {
                let v = inner.value(x, y) + alpha;
                // rounding slack when f sits exactly at −alpha
                if v < 0.0 && v >= -1e-12 * alpha.abs().max(1.0) {
                    0.0
                } else {
                    v
                }
            }
            ProfileKind::Remainder { inner, alpha } => {
                let f = inner.value(x, y);
                (f * f + 2.0 * alpha * f).sqrt()
            }
            ProfileKind::FromDensity(g) => {
                // Averaging both orderings makes the value exactly symmetric in
                // floating point; under g(1−x,1−y) = g(x,y) it equals
                // g(x,1−y) + g(1−y,x).
                let s1 = g.value(x, 1.0 - y) + g.value(1.0 - y, x);
                let s2 = g.value(y, 1.0 - x) + g.value(1.0 - x, y);
                (0.5 * (s1 + s2)).sqrt()
            }
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        check_unit(x)?;
        check_unit(y)?;
        let v = self.value(x, y);
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::ProfileValidity(format!("f({x}, {y}) = {v} is not a nonnegative number")));
        }
        Ok(v)
    }
}

/// Parses an expression profile in `x, y` and validates symmetry and sign on
/// 256 quasi-random points. Variable-free expressions give constant profiles.
pub fn parse_profile(text: &str) -> Result<Profile> {
    let expr = expr::parse(text, Variables::XY)?;
    if !expr.uses_variables() {
        return Profile::constant(expr.eval(0.5, 0.5));
    }
    for (x, y) in r2_points(256) {
        let a = expr.eval(x, y);
        let b = expr.eval(y, x);
        // written so that NaN counts as asymmetric
        let close = (a - b).abs() <= SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0);
        if !close {
            return Err(Error::ProfileValidity(format!(
                "`{}` is not symmetric: f({x}, {y}) = {a} but f({y}, {x}) = {b}",
                text.trim()
            )));
        }
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::ProfileValidity(format!("`{}` gives f({x}, {y}) = {a}", text.trim())));
        }
    }
    Ok(Profile {
        kind: ProfileKind::Expression {
            expr,
            text: text.trim().to_string(),
        },
        bound: None,
    })
}

pub fn profile_from_density(g: &SpectralDensity) -> Profile {
    Profile::from_density(g.clone())
}

// Largest value on a (SUP_SAMPLES)² lattice covering [lo, 1−lo]², corners included.
fn sup_on_square(f: &Profile, lo: f64) -> f64 {
    let hi = 1.0 - lo;
    let step = (hi - lo) / (SUP_SAMPLES - 1) as f64;
    let mut sup = 0.0f64;
    for i in 0..SUP_SAMPLES {
        let x = if i + 1 == SUP_SAMPLES { hi } else { lo + step * i as f64 };
        for j in 0..=i {
            let y = if j + 1 == SUP_SAMPLES { hi } else { lo + step * j as f64 };
            let v = f.value(x, y);
            if !v.is_finite() {
                return f64::INFINITY;
            }
            sup = sup.max(v);
        }
    }
    sup
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ProfileKind::Constant(c) => write!(f, "{c}"),
            ProfileKind::RankOne(r) => write!(f, "rank_one({r})"),
            ProfileKind::Grid(g) => write!(f, "grid({}x{})", g.k(), g.k()),
            ProfileKind::Expression { text, .. } => write!(f, "{text}"),
            ProfileKind::Truncated { inner, k } => write!(f, "truncate({inner}, k={k})"),
            ProfileKind::Shifted { inner, alpha } => write!(f, "({inner})+({alpha})"),
            ProfileKind::Remainder { inner, alpha } => {
                write!(f, "sqrt(({inner})^2+2*{alpha}*({inner}))")
            }
            ProfileKind::FromDensity(g) => write!(f, "from_density({g})"),
        }
    }
}

/// Serializable description of a profile, as stored in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant {
        value: f64,
    },
    Expression {
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bound: Option<f64>,
    },
    RankOne {
        radial: RadialSpec,
    },
    Grid {
        path: PathBuf,
    },
    Truncated {
        inner: Box<ProfileSpec>,
        k: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialSpec {
    Constant {
        value: f64,
    },
    Expression {
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bound: Option<f64>,
    },
    Quantile {
        measure: MeasureSpec,
    },
}

impl RadialSpec {
    pub fn build(&self) -> Result<RadialFunction> {
        match self {
            RadialSpec::Constant { value } => RadialFunction::constant(*value),
            RadialSpec::Expression { text, bound } => {
                let r = RadialFunction::parse(text)?;
                match bound {
                    Some(m) => r.with_bound(*m),
                    None => Ok(r),
                }
            }
            RadialSpec::Quantile { measure } => quantile_radial(measure),
        }
    }
}

impl ProfileSpec {
    /// Reads `EXPR` or `@FILE`. A file ending in `.csv` is a grid; any other file
    /// holds an expression.
    pub fn from_cli(text: &str, bound: Option<f64>) -> Result<Self> {
        match text.strip_prefix('@') {
            Some(path) if path.to_ascii_lowercase().ends_with(".csv") => Ok(ProfileSpec::Grid { path: path.into() }),
            Some(path) => {
                let body = std::fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("{path}: {e}")))?;
                Ok(ProfileSpec::Expression {
                    text: body.trim().to_string(),
                    bound,
                })
            }
            None => Ok(ProfileSpec::Expression {
                text: text.to_string(),
                bound,
            }),
        }
    }

    pub fn build(&self) -> Result<Profile> {
        match self {
            ProfileSpec::Constant { value } => Profile::constant(*value),
            ProfileSpec::Expression { text, bound } => {
                let p = parse_profile(text)?;
                match bound {
                    Some(m) => p.with_bound(*m),
                    None => Ok(p),
                }
            }
            ProfileSpec::RankOne { radial } => Ok(Profile::rank_one(radial.build()?)),
            ProfileSpec::Grid { path } => Profile::grid(Grid::from_csv(path)?),
            ProfileSpec::Truncated { inner, k } => inner.build()?.truncate(*k),
        }
    }
}
