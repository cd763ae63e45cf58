//! Finite mixtures of point masses and uniform laws.
//!
//! Literal syntax: `delta:c`, `uniform:a:b`, and weighted mixtures such as
//! `0.5*delta:0+0.5*uniform:1:2`. A component without a weight has weight 1.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    PointMass { at: f64, weight: f64 },
    Uniform { lo: f64, hi: f64, weight: f64 },
}

impl Component {
    fn weight(&self) -> f64 {
        match *self {
            Component::PointMass { weight, .. } | Component::Uniform { weight, .. } => weight,
        }
    }

    fn cdf(&self, y: f64) -> f64 {
        match *self {
            Component::PointMass { at, .. } => f64::from(u8::from(y >= at)),
            Component::Uniform { lo, hi, .. } => ((y - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    fn cdf_left(&self, y: f64) -> f64 {
        match *self {
            Component::PointMass { at, .. } => f64::from(u8::from(y > at)),
            Component::Uniform { .. } => self.cdf(y),
        }
    }

    fn moment(&self, n: u32) -> f64 {
        match *self {
            Component::PointMass { at, .. } => at.powi(n as i32),
            Component::Uniform { lo, hi, .. } => {
                let k = n as i32 + 1;
                (hi.powi(k) - lo.powi(k)) / (f64::from(k) * (hi - lo))
            }
        }
    }
}

/// A probability measure given as a finite mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MeasureSpec {
    components: Vec<Component>,
}

impl MeasureSpec {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Malformed("a measure needs at least one component".into()));
        }
        let mut total = 0.0;
        for c in &components {
            let w = c.weight();
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Malformed(format!("invalid component weight {w}")));
            }
            match *c {
                Component::PointMass { at, .. } if !at.is_finite() => {
                    return Err(Error::Malformed("point mass location must be finite".into()))
                }
                Component::Uniform { lo, hi, .. } if !(lo.is_finite() && hi.is_finite() && lo < hi) => {
                    return Err(Error::Malformed(format!("uniform component needs lo < hi, got [{lo}, {hi}]")))
                }
                _ => {}
            }
            total += w;
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::Malformed(format!("component weights sum to {total}, not 1")));
        }
        Ok(Self { components })
    }

    pub fn delta(at: f64) -> Result<Self> {
        Self::new(vec![Component::PointMass { at, weight: 1.0 }])
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![Component::Uniform { lo, hi, weight: 1.0 }])
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    fn charged(&self) -> impl Iterator<Item = &Component> {
        self.components.iter().filter(|c| c.weight() > 0.0)
    }

    pub fn support_min(&self) -> f64 {
        self.charged()
            .map(|c| match *c {
                Component::PointMass { at, .. } => at,
                Component::Uniform { lo, .. } => lo,
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn support_max(&self) -> f64 {
        self.charged()
            .map(|c| match *c {
                Component::PointMass { at, .. } => at,
                Component::Uniform { hi, .. } => hi,
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Fails unless the measure gives full mass to `[alpha, ∞)`.
    pub fn require_lower_bound(&self, alpha: f64) -> Result<()> {
        let lo = self.support_min();
        if lo < alpha {
            return Err(Error::Hypothesis(format!(
                "measure {self} charges values below alpha = {alpha} (support starts at {lo})"
            )));
        }
        Ok(())
    }

    /// Mass at exactly zero.
    pub fn atom_at_zero(&self) -> f64 {
        self.charged()
            .filter_map(|c| match *c {
                Component::PointMass { at: 0.0, weight } => Some(weight),
                _ => None,
            })
            .sum()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        self.components.iter().map(|c| c.weight() * c.cdf(y)).sum::<f64>().min(1.0)
    }

    pub fn cdf_left(&self, y: f64) -> f64 {
        self.components.iter().map(|c| c.weight() * c.cdf_left(y)).sum::<f64>().min(1.0)
    }

    /// Raw moment of order `n`.
    pub fn moment(&self, n: u32) -> f64 {
        self.components.iter().map(|c| c.weight() * c.moment(n)).sum()
    }

    /// Generalized inverse `inf{y : F(y) ≥ p}` for `p ∈ (0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        // Between consecutive breakpoints the CDF is affine.
        let mut cuts: Vec<f64> = self
            .charged()
            .flat_map(|c| match *c {
                Component::PointMass { at, .. } => vec![at],
                Component::Uniform { lo, hi, .. } => vec![lo, hi],
            })
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut prev: Option<f64> = None;
        for &b in &cuts {
            if let Some(a) = prev {
                let (fa, fb) = (self.cdf(a), self.cdf_left(b));
                if p > fa && p <= fb {
                    return a + (p - fa) / (fb - fa) * (b - a);
                }
            }
            if p <= self.cdf(b) {
                return b;
            }
            prev = Some(b);
        }
        *cuts.last().unwrap()
    }
}

impl fmt::Display for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let single = self.components.len() == 1;
        for (k, c) in self.components.iter().enumerate() {
            if k > 0 {
                write!(f, "+")?;
            }
            if !single {
                write!(f, "{}*", c.weight())?;
            }
            match *c {
                Component::PointMass { at, .. } => write!(f, "delta:{at}")?,
                Component::Uniform { lo, hi, .. } => write!(f, "uniform:{lo}:{hi}")?,
            }
        }
        Ok(())
    }
}

impl FromStr for MeasureSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let text: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut components = Vec::new();
        for term in split_terms(&text) {
            components.push(parse_component(term)?);
        }
        Self::new(components)
    }
}

impl TryFrom<String> for MeasureSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MeasureSpec> for String {
    fn from(m: MeasureSpec) -> String {
        m.to_string()
    }
}

// Split on '+' except inside exponents such as 1e+3.
fn split_terms(text: &str) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    for i in 0..bytes.len() {
        if bytes[i] == b'+' && i > 0 && !matches!(bytes[i - 1], b'e' | b'E' | b':' | b'*') {
            out.push(&text[start..i]);
            start = i + 1;
        }
    }
    out.push(&text[start..]);
    out
}

fn parse_component(term: &str) -> Result<Component> {
    let bad = || Error::Config(format!("cannot parse measure component `{term}`"));
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
    let (weight, body) = match term.split_once('*') {
        Some((w, rest)) => (num(w)?, rest),
        None => (1.0, term),
    };
    let parts: Vec<&str> = body.split(':').collect();
    match parts.as_slice() {
        ["delta", c] => Ok(Component::PointMass { at: num(c)?, weight }),
        ["uniform", a, b] => Ok(Component::Uniform {
            lo: num(a)?,
            hi: num(b)?,
            weight,
        }),
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_parse() {
        let m: MeasureSpec = "0.5*delta:1+0.5*delta:4".parse().unwrap();
        assert_eq!(m.components().len(), 2);
        assert_eq!(m.moment(1), 2.5);
        assert_eq!(m.moment(2), 8.5);
        let u: MeasureSpec = "uniform:1:2".parse().unwrap();
        assert_eq!(u.moment(1), 1.5);
        assert!((u.moment(2) - 7.0 / 3.0).abs() < 1e-15);
        let d: MeasureSpec = "delta:-1e+0".parse().unwrap();
        assert_eq!(d.support_min(), -1.0);
        assert!("0.3*delta:1+0.3*delta:2".parse::<MeasureSpec>().is_err());
        assert!("gamma:1".parse::<MeasureSpec>().is_err());
        assert!("uniform:2:1".parse::<MeasureSpec>().is_err());
    }

    #[test]
    fn display_round_trips() {
        for text in ["delta:3", "uniform:1:2", "0.25*delta:0+0.75*uniform:1:2.5"] {
            let m: MeasureSpec = text.parse().unwrap();
            assert_eq!(m.to_string().parse::<MeasureSpec>().unwrap(), m);
        }
    }

    #[test]
    fn quantiles() {
        let d = MeasureSpec::delta(2.0).unwrap();
        assert_eq!(d.quantile(0.01), 2.0);
        assert_eq!(d.quantile(0.99), 2.0);
        let u = MeasureSpec::uniform(1.0, 2.0).unwrap();
        assert!((u.quantile(0.3) - 1.3).abs() < 1e-15);
        let two: MeasureSpec = "0.5*delta:1+0.5*delta:4".parse().unwrap();
        assert_eq!(two.quantile(0.5), 1.0);
        assert_eq!(two.quantile(0.5000001), 4.0);
        let mixed: MeasureSpec = "0.5*delta:0+0.5*uniform:1:3".parse().unwrap();
        assert_eq!(mixed.quantile(0.5), 0.0);
        assert!((mixed.quantile(0.75) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn lower_bound_check() {
        let u = MeasureSpec::uniform(0.5, 2.0).unwrap();
        assert!(matches!(u.require_lower_bound(1.0), Err(Error::Hypothesis(_))));
        assert!(u.require_lower_bound(0.5).is_ok());
    }

    #[test]
    fn serde_uses_literal() {
        let m: MeasureSpec = "0.5*delta:0+0.5*delta:1".parse().unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, "\"0.5*delta:0+0.5*delta:1\"");
        assert_eq!(serde_json::from_str::<MeasureSpec>(&json).unwrap(), m);
    }
}
