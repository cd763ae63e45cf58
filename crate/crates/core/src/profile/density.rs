use std::fmt;

use super::expr::{self, Expr, Variables};
use super::radial::{check_declared_bound, check_unit};
use super::Grid;
use crate::error::{Error, Result};
use crate::rng::r2_points;

const REFLECTION_TOL: f64 = 1e-12;

/// A spectral density g on (0,1)² with g(1−x, 1−y) = g(x, y) ≥ 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    kind: DensityKind,
    bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DensityKind {
    Constant(f64),
    Expression { expr: Expr, text: String },
    Grid(Grid),
    /// g·1 on [eps, 1−eps]².
    Truncated { inner: Box<SpectralDensity>, eps: f64 },
}

impl SpectralDensity {
    pub fn constant(c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::ProfileValidity(format!("density constant must be finite and nonnegative, got {c}")));
        }
        Ok(Self {
            kind: DensityKind::Constant(c),
            bound: Some(c),
        })
    }

    /// Parses an expression in `x, y`; rejects it unless it is reflection symmetric.
    pub fn parse(text: &str) -> Result<Self> {
        let expr = expr::parse(text, Variables::XY)?;
        Self::from_expr(expr, text.trim().to_string())
    }

    /// Parses an expression e and uses (e(x,y) + e(1−x,1−y))/2, which is always
    /// reflection symmetric.
    pub fn parse_symmetrized(text: &str) -> Result<Self> {
        let e = expr::parse(text, Variables::XY)?;
        let one = || Box::new(Expr::Num(1.0));
        let flipped = e.substitute(&Expr::Sub(one(), Box::new(Expr::X)), &Expr::Sub(one(), Box::new(Expr::Y)));
        let sym = Expr::Div(Box::new(Expr::Add(Box::new(e), Box::new(flipped))), Box::new(Expr::Num(2.0)));
        let text = format!("({})/2 reflected", text.trim());
        Self::from_expr(sym, text)
    }

    fn from_expr(expr: Expr, text: String) -> Result<Self> {
        if !expr.uses_variables() {
            let c = expr.eval(0.5, 0.5);
            return Self::constant(c);
        }
        for (x, y) in r2_points(256) {
            let a = expr.eval(x, y);
            let b = expr.eval(1.0 - x, 1.0 - y);
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::ProfileValidity(format!("g({x}, {y}) = {a} is not a nonnegative number")));
            }
            if (a - b).abs() > REFLECTION_TOL * a.abs().max(1.0) {
                return Err(Error::Hypothesis(format!(
                    "density `{text}` is not reflection symmetric: g({x}, {y}) = {a} but g({}, {}) = {b}",
                    1.0 - x,
                    1.0 - y
                )));
            }
        }
        Ok(Self {
            kind: DensityKind::Expression { expr, text },
            bound: None,
        })
    }

    pub fn grid(grid: Grid) -> Result<Self> {
        let k = grid.k();
        let v = grid.values();
        for i in 0..k {
            for j in 0..k {
                if v[[i, j]] != v[[k - 1 - i, k - 1 - j]] {
                    return Err(Error::Hypothesis(format!(
                        "density grid is not reflection symmetric at cell ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let bound = Some(grid.max());
        Ok(Self {
            kind: DensityKind::Grid(grid),
            bound,
        })
    }

    pub fn with_bound(mut self, m: f64) -> Result<Self> {
        check_declared_bound(m)?;
        self.bound = Some(m);
        Ok(self)
    }

    /// g·1 on [eps, 1−eps]²; preserves reflection symmetry.
    pub fn truncate(self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::Domain(format!("truncation level must lie in (0, 1/2), got {eps}")));
        }
        let bound = self.bound;
        Ok(Self {
            kind: DensityKind::Truncated {
                inner: Box::new(self),
                eps,
            },
            bound,
        })
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        match &self.kind {
            DensityKind::Constant(c) => *c,
            DensityKind::Expression { expr, .. } => expr.eval(x, y),
            DensityKind::Grid(g) => g.value(x, y),
            DensityKind::Truncated { inner, eps } => {
                let inside = |t: f64| t >= *eps && t <= 1.0 - *eps;
                if inside(x) && inside(y) {
                    inner.value(x, y)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        check_unit(x)?;
        check_unit(y)?;
        let v = self.value(x, y);
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::ProfileValidity(format!("g({x}, {y}) = {v} is not a nonnegative number")));
        }
        Ok(v)
    }
}

impl fmt::Display for SpectralDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            DensityKind::Constant(c) => write!(f, "{c}"),
            DensityKind::Expression { text, .. } => write!(f, "{text}"),
            DensityKind::Grid(g) => write!(f, "grid({}x{})", g.k(), g.k()),
            DensityKind::Truncated { inner, eps } => write!(f, "truncate({inner}, eps={eps})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_is_enforced() {
        assert!(matches!(SpectralDensity::parse("x*y"), Err(Error::Hypothesis(_))));
        let g = SpectralDensity::parse("x*(1-x)+y*(1-y)").unwrap();
        assert!((g.eval(0.2, 0.3).unwrap() - (0.16 + 0.21)).abs() < 1e-15);
        let c = SpectralDensity::parse("0.5").unwrap();
        assert_eq!(c, SpectralDensity::constant(0.5).unwrap());
    }

    #[test]
    fn symmetrized_product() {
        let g = SpectralDensity::parse_symmetrized("x*y").unwrap();
        let want = (0.2 * 0.7 + 0.8 * 0.3) / 2.0;
        assert!((g.eval(0.2, 0.7).unwrap() - want).abs() < 1e-15);
        assert!((g.eval(0.2, 0.7).unwrap() - g.eval(0.8, 0.3).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn truncation_zeroes_the_border() {
        let g = SpectralDensity::constant(2.0).unwrap().truncate(0.1).unwrap();
        assert_eq!(g.eval(0.05, 0.5).unwrap(), 0.0);
        assert_eq!(g.eval(0.5, 0.5).unwrap(), 2.0);
        assert!(SpectralDensity::constant(2.0).unwrap().truncate(0.5).is_err());
    }
}
