//! Named inputs addressable as `gallery:<name>?key=value&...`.

use std::collections::BTreeMap;

use expotrans::exptransform::{a_to_b, ExpMoments};
use expotrans::heleshaw::confocal_ellipse;
use expotrans::operators::{b_from_operator, required_size, toeplitz_ellipse, toeplitz_power, trifoil, two_diagonal, BandedOperator};
use expotrans::quad::QuadOptions;
use expotrans::shapes::{moments_with, MomentMatrix};
use expotrans::{Error, Result, Shape, C64};
use serde::Serialize;

pub const PREFIX: &str = "gallery:";

/// Entries listed by `expotrans gallery`.
pub const ENTRIES: &[(&str, &str)] = &[
    ("disk", "r=1 x=0 y=0"),
    ("annulus", "r=0.5 R=1"),
    ("tdisk", "t=0.5 r=1"),
    ("ellipse-shape", "p=1.5 q=0.5 phi=0"),
    ("confocal", "c=1 s=0.7"),
    ("ellipse", "u=2 (operator uS + S*)"),
    ("trifoil", "(operator S² + S*)"),
    ("power", "alpha=1 beta=1 d=3 (operator αS^{d+1} + βS*^d)"),
    ("twodiag", "a1=1 b1=1 (two-diagonal operator)"),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "operator", rename_all = "lowercase")]
pub enum OperatorSpec {
    Ellipse { u: f64 },
    Trifoil,
    Power { alpha: f64, beta: f64, d: usize },
    Twodiag { a1: f64, b1: f64 },
}

impl OperatorSpec {
    fn with_size(&self, m: usize) -> Result<BandedOperator> {
        match *self {
            OperatorSpec::Ellipse { u } => toeplitz_ellipse(C64::from(u), m),
            OperatorSpec::Trifoil => trifoil(m),
            OperatorSpec::Power { alpha, beta, d } => toeplitz_power(C64::from(alpha), C64::from(beta), d, m),
            OperatorSpec::Twodiag { a1, b1 } => two_diagonal(a1, b1, m).map(|(op, _)| op),
        }
    }

    /// Truncation large enough for exact moments of order `n`.
    pub fn build(&self, n: usize) -> Result<BandedOperator> {
        let min = match *self {
            OperatorSpec::Power { d, .. } => 4 * (d + 1),
            OperatorSpec::Trifoil => 8,
            _ => 4,
        };
        let probe = self.with_size(min)?;
        self.with_size(required_size(&probe, n).max(min))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Shape(Shape),
    Operator(OperatorSpec),
}

impl Source {
    pub fn exp_moments(&self, n: usize, opts: &QuadOptions) -> Result<ExpMoments> {
        match self {
            Source::Shape(s) => a_to_b(&moments_with(s, n, opts)?),
            Source::Operator(spec) => b_from_operator(&spec.build(n)?, n),
        }
    }

    pub fn moments(&self, n: usize, opts: &QuadOptions) -> Result<MomentMatrix> {
        match self {
            Source::Shape(s) => moments_with(s, n, opts),
            Source::Operator(_) => expotrans::exptransform::b_to_a(&self.exp_moments(n, opts)?),
        }
    }
}

fn bad(msg: String) -> Error {
    Error::InvalidArgument(msg)
}

struct Params(BTreeMap<String, String>);

impl Params {
    fn parse(query: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for pair in query.split('&').filter(|p| !p.is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| bad(format!("gallery parameter {pair:?} is not key=value")))?;
            map.insert(k.to_string(), v.to_string());
        }
        Ok(Self(map))
    }

    fn num(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.0.remove(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| bad(format!("gallery parameter {key}={v:?} is not a number"))),
        }
    }

    fn int(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.0.remove(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| bad(format!("gallery parameter {key}={v:?} is not an integer"))),
        }
    }

    fn finish(self, name: &str) -> Result<()> {
        match self.0.keys().next() {
            None => Ok(()),
            Some(k) => Err(bad(format!("unknown parameter {k:?} for gallery:{name}"))),
        }
    }
}

/// Parses `gallery:<name>?k=v&...`.
pub fn parse(spec: &str) -> Result<Source> {
    let body = spec
        .strip_prefix(PREFIX)
        .ok_or_else(|| bad(format!("{spec:?} does not start with {PREFIX}")))?;
    let (name, query) = body.split_once('?').unwrap_or((body, ""));
    let mut p = Params::parse(query)?;
    let source = match name {
        "disk" => {
            let r = p.num("r", 1.0)?;
            let c = C64::new(p.num("x", 0.0)?, p.num("y", 0.0)?);
            Source::Shape(Shape::disk(r).translated(c))
        }
        "annulus" => Source::Shape(Shape::annulus(p.num("r", 0.5)?, p.num("R", 1.0)?)),
        "tdisk" => {
            let t = p.num("t", 0.5)?;
            Source::Shape(Shape::weighted(Shape::disk(p.num("r", 1.0)?), t))
        }
        "ellipse-shape" => {
            let (a, b, phi) = (p.num("p", 1.5)?, p.num("q", 0.5)?, p.num("phi", 0.0)?);
            Source::Shape(Shape::Ellipse {
                center: C64::new(0.0, 0.0),
                p: a,
                q: b,
                phi,
            })
        }
        "confocal" => Source::Shape(confocal_ellipse(p.num("c", 1.0)?, p.num("s", 0.7)?)?),
        "ellipse" => Source::Operator(OperatorSpec::Ellipse { u: p.num("u", 2.0)? }),
        "trifoil" => Source::Operator(OperatorSpec::Trifoil),
        "power" => Source::Operator(OperatorSpec::Power {
            alpha: p.num("alpha", 1.0)?,
            beta: p.num("beta", 1.0)?,
            d: p.int("d", 3)?,
        }),
        "twodiag" => Source::Operator(OperatorSpec::Twodiag {
            a1: p.num("a1", 1.0)?,
            b1: p.num("b1", 1.0)?,
        }),
        other => return Err(bad(format!("unknown gallery entry {other:?}"))),
    };
    p.finish(name)?;
    if let Source::Shape(s) = &source {
        s.validate()?;
    }
    Ok(source)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_parameters() {
        assert_eq!(parse("gallery:annulus?r=0.25&R=2").unwrap(), Source::Shape(Shape::annulus(0.25, 2.0)));
        assert_eq!(
            parse("gallery:ellipse?u=3").unwrap(),
            Source::Operator(OperatorSpec::Ellipse { u: 3.0 })
        );
        assert_eq!(parse("gallery:trifoil").unwrap(), Source::Operator(OperatorSpec::Trifoil));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse("gallery:nope").is_err());
        assert!(parse("gallery:disk?r=abc").is_err());
        assert!(parse("gallery:disk?radius=1").is_err());
        assert!(parse("gallery:tdisk?t=1.5").is_err());
        assert!(parse("disk").is_err());
    }

    #[test]
    fn operators_are_sized_for_the_order() {
        let b = parse("gallery:ellipse").unwrap().exp_moments(8, &QuadOptions::default()).unwrap();
        assert!((b.b00() - 3.0).abs() < 1e-15);
        let b = parse("gallery:power?d=2").unwrap().exp_moments(6, &QuadOptions::default()).unwrap();
        assert_eq!(b.order(), 6);
    }
}
