use std::fmt;

use super::expr::{self, Expr, Variables};
use super::measure::MeasureSpec;
use crate::error::{Error, Result};
use crate::rng::r2_points;

/// A nonnegative function r on (0,1), the factor of a rank-one profile r(x)r(y).
#[derive(Debug, Clone, PartialEq)]
pub enum RadialFunction {
    Constant(f64),
    Expression { expr: Expr, text: String, bound: Option<f64> },
    /// r(x) = sqrt(Q_ν(x)) with Q_ν the generalized inverse CDF of ν.
    Quantile(MeasureSpec),
}

impl RadialFunction {
    pub fn constant(c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::ProfileValidity(format!("radial constant must be finite and nonnegative, got {c}")));
        }
        Ok(RadialFunction::Constant(c))
    }

    /// Parses a one-variable expression in `x`.
    pub fn parse(text: &str) -> Result<Self> {
        let expr = expr::parse(text, Variables::X)?;
        for (x, _) in r2_points(256) {
            let v = expr.eval(x, 0.0);
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::ProfileValidity(format!("r({x}) = {v} is not a nonnegative number")));
            }
        }
        Ok(RadialFunction::Expression {
            expr,
            text: text.trim().to_string(),
            bound: None,
        })
    }

    pub fn with_bound(self, m: f64) -> Result<Self> {
        match self {
            RadialFunction::Expression { expr, text, .. } => {
                check_declared_bound(m)?;
                Ok(RadialFunction::Expression {
                    expr,
                    text,
                    bound: Some(m),
                })
            }
            other => Ok(other),
        }
    }

    /// Value at `x ∈ (0,1)`; no domain checks.
    pub fn value(&self, x: f64) -> f64 {
        match self {
            RadialFunction::Constant(c) => *c,
            RadialFunction::Expression { expr, .. } => expr.eval(x, 0.0),
            RadialFunction::Quantile(nu) => nu.quantile(x).max(0.0).sqrt(),
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        check_unit(x)?;
        let v = self.value(x);
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::ProfileValidity(format!("r({x}) = {v} is not a nonnegative number")));
        }
        Ok(v)
    }

    /// Supremum of r, when known.
    pub fn bound(&self) -> Option<f64> {
        match self {
            RadialFunction::Constant(c) => Some(*c),
            RadialFunction::Expression { bound, .. } => *bound,
            RadialFunction::Quantile(nu) => Some(nu.support_max().max(0.0).sqrt()),
        }
    }
}

impl fmt::Display for RadialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialFunction::Constant(c) => write!(f, "{c}"),
            RadialFunction::Expression { text, .. } => write!(f, "{text}"),
            RadialFunction::Quantile(nu) => write!(f, "sqrt(quantile({nu}))"),
        }
    }
}

/// The radial function whose square pushes the uniform law on (0,1) forward to `nu`.
/// `nu` must live on `[0, ∞)`.
pub fn quantile_radial(nu: &MeasureSpec) -> Result<RadialFunction> {
    nu.require_lower_bound(0.0)?;
    Ok(RadialFunction::Quantile(nu.clone()))
}

/// As [`quantile_radial`], additionally requiring `nu([alpha, ∞)) = 1` with `alpha > 0`.
pub fn quantile_radial_above(nu: &MeasureSpec, alpha: f64) -> Result<RadialFunction> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    nu.require_lower_bound(alpha)?;
    Ok(RadialFunction::Quantile(nu.clone()))
}

pub(crate) fn check_unit(x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("evaluation point {x} is outside (0, 1)")))
    }
}

pub(crate) fn check_declared_bound(m: f64) -> Result<()> {
    if m.is_finite() && m >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("declared bound must be finite and nonnegative, got {m}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_examples() {
        let r = quantile_radial(&MeasureSpec::delta(3.0).unwrap()).unwrap();
        assert_eq!(r.eval(0.1).unwrap(), 3f64.sqrt());
        assert_eq!(r.eval(0.9).unwrap(), 3f64.sqrt());

        let r = quantile_radial(&"uniform:1:2".parse().unwrap()).unwrap();
        for x in [0.1, 0.37, 0.8] {
            assert!((r.eval(x).unwrap() - (1.0 + x).sqrt()).abs() < 1e-15);
        }

        let r = quantile_radial(&"0.5*delta:1+0.5*delta:4".parse().unwrap()).unwrap();
        assert_eq!(r.eval(0.25).unwrap(), 1.0);
        assert_eq!(r.eval(0.5).unwrap(), 1.0);
        assert_eq!(r.eval(0.51).unwrap(), 2.0);
    }

    #[test]
    fn quantile_requires_alpha() {
        let nu: MeasureSpec = "uniform:0.5:2".parse().unwrap();
        let err = quantile_radial_above(&nu, 1.0).unwrap_err();
        assert!(matches!(err, Error::Hypothesis(ref m) if m.contains("alpha = 1")));
        assert!(quantile_radial_above(&"uniform:1:2".parse().unwrap(), 1.0).is_ok());
    }

    #[test]
    fn expressions() {
        let r = RadialFunction::parse("sqrt(x)").unwrap();
        assert_eq!(r.eval(0.25).unwrap(), 0.5);
        assert!(r.bound().is_none());
        assert_eq!(r.with_bound(1.0).unwrap().bound(), Some(1.0));
        assert!(RadialFunction::parse("x-1").is_err());
        assert!(matches!(RadialFunction::parse("x*y"), Err(Error::UnknownIdentifier { .. })));
        assert!(matches!(RadialFunction::constant(1.0).unwrap().eval(1.0), Err(Error::Domain(_))));
    }
}
