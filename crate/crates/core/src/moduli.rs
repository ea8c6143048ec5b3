//! Conformal classes of flat tori and the integer data `(p, q, r)` of an
//! equivariant map, with the feasibility classification that selects which
//! closed-form branch applies.

use crate::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// A reduced fraction with positive denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    num: i64,
    den: i64,
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Parse("zero denominator".into()));
        }
        let g = gcd(num, den).max(1);
        let s = den.signum();
        Ok(Rational { num: s * num / g, den: s * den / g })
    }

    pub fn integer(n: i64) -> Self {
        Rational { num: n, den: 1 }
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts `n`, `n/d` and finite decimals such as `-0.25`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("not a rational or decimal number: {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            return Rational::new(n, d);
        }
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty() && frac.is_empty()
            || !int.chars().all(|c| c.is_ascii_digit())
            || !frac.chars().all(|c| c.is_ascii_digit())
            || frac.len() > 17
        {
            return Err(bad());
        }
        let den = 10i64.pow(frac.len() as u32);
        let int: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let num = int.checked_mul(den).and_then(|v| v.checked_add(frac)).ok_or_else(bad)?;
        Rational::new(if neg { -num } else { num }, den)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Whether the shear `a` is exactly 0, exactly ½, or neither.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AClass {
    Zero,
    Half,
    Generic,
}

/// The flat torus `R² / (Z(1,0) + Z(a,b))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModuliPoint {
    pub a: f64,
    pub b: f64,
    a_exact: Option<Rational>,
}

impl ModuliPoint {
    /// A point with a floating-point shear; limit cases are then detected with
    /// a 1e-12 tolerance.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !(b > 0.0) || !b.is_finite() {
            return Err(Error::Domain(format!("need finite a and b > 0, got a = {a}, b = {b}")));
        }
        Ok(ModuliPoint { a, b, a_exact: None })
    }

    /// A point with an exactly known rational shear.
    pub fn with_rational(a: Rational, b: f64) -> Result<Self> {
        let mut pt = ModuliPoint::new(a.to_f64(), b)?;
        pt.a_exact = Some(a);
        Ok(pt)
    }

    /// Parses the shear as a rational (`1/4`) or finite decimal (`0.25`).
    pub fn parse(a: &str, b: f64) -> Result<Self> {
        ModuliPoint::with_rational(a.parse()?, b)
    }

    pub fn a_exact(&self) -> Option<Rational> {
        self.a_exact
    }

    pub fn a_class(&self) -> AClass {
        match self.a_exact {
            Some(r) if r.num == 0 => AClass::Zero,
            Some(r) if 2 * r.num == r.den => AClass::Half,
            Some(_) => AClass::Generic,
            None if self.a == 0.0 => AClass::Zero,
            None if self.a == 0.5 => AClass::Half,
            None => AClass::Generic,
        }
    }

    /// Copy with a different `b` (keeps the exact shear).
    pub fn with_b(&self, b: f64) -> Result<Self> {
        let mut pt = *self;
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::Domain(format!("need b > 0, got {b}")));
        }
        pt.b = b;
        Ok(pt)
    }
}

/// Which closed-form branch of the profile formulas applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Nonlimit,
    /// `p/q = ½`: τ₁ = 0, the first component vanishes on curves.
    FirstLimit,
    /// `|r + a|/q = ½`: τ₂ = 1.
    SecondLimit,
    /// Both of the above.
    HybridLimit,
    /// `(r + a)² + b² = p²`: the homogeneous circle maps.
    CircleFamily,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Nonlimit => "nonlimit",
            Regime::FirstLimit => "first_limit",
            Regime::SecondLimit => "second_limit",
            Regime::HybridLimit => "hybrid_limit",
            Regime::CircleFamily => "circle_family",
        }
    }

    pub fn is_first_limit(&self) -> bool {
        matches!(self, Regime::FirstLimit | Regime::HybridLimit)
    }

    pub fn is_second_limit(&self) -> bool {
        matches!(self, Regime::SecondLimit | Regime::HybridLimit)
    }
}

/// Integers `(p, q, r)` of the map together with their classification
/// relative to a lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapParams {
    pub p: u32,
    pub q: u32,
    pub r: i32,
    regime: Regime,
    r_plus_a: f64,
    /// `|r + a| = 0` exactly.
    shift_zero: bool,
}

/// Relative tolerance for limit-case detection when the shear is not exact.
const FLOAT_CLASS_TOL: f64 = 1e-12;

impl MapParams {
    /// Checks `p/q ≥ ½`, `|r + a|/q ≤ ½` and `(r + a)² + b² > p²`, classifying
    /// the boundary cases. The circle family `(r + a)² + b² = p²` is accepted
    /// whatever the other two inequalities say.
    pub fn classify(point: &ModuliPoint, p: u32, q: u32, r: i32) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::Infeasible(format!("p and q must be positive, got p = {p}, q = {q}")));
        }
        let r_plus_a = r as f64 + point.a;
        let (p_i, q_i) = (p as i128, q as i128);
        // Exact comparison of 2|r + a| against q, when the shear is rational.
        let (shift_zero, shift_cmp) = match point.a_exact() {
            Some(a) => {
                let num = r as i128 * a.den() as i128 + a.num() as i128;
                let lhs = 2 * num.abs();
                let rhs = q_i * a.den() as i128;
                (num == 0, lhs.cmp(&rhs))
            }
            None => {
                let x = 2.0 * r_plus_a.abs();
                let cmp = if (x - q as f64).abs() <= FLOAT_CLASS_TOL * q as f64 {
                    log::warn!("|r + a|/q = 1/2 decided with float tolerance; pass a rational shear for exact classification");
                    std::cmp::Ordering::Equal
                } else {
                    x.total_cmp(&(q as f64))
                };
                (r_plus_a == 0.0, cmp)
            }
        };
        let gap = r_plus_a * r_plus_a + point.b * point.b - (p * p) as f64;
        let scale = (p * p) as f64;
        let circle = gap.abs() <= FLOAT_CLASS_TOL * scale;
        let params = |regime| MapParams { p, q, r, regime, r_plus_a, shift_zero };
        if circle {
            return Ok(params(Regime::CircleFamily));
        }
        if 2 * p_i < q_i {
            return Err(Error::Infeasible(format!("p/q >= 1/2 violated: p/q = {p}/{q}")));
        }
        if shift_cmp == std::cmp::Ordering::Greater {
            return Err(Error::Infeasible(format!("|r+a|/q <= 1/2 violated: |r+a| = {}, q = {q}", r_plus_a.abs())));
        }
        if gap < 0.0 {
            return Err(Error::Infeasible(format!(
                "(r+a)^2+b^2 > p^2 violated: (r+a)^2+b^2 = {}, p^2 = {}",
                gap + scale,
                p * p
            )));
        }
        let first = 2 * p_i == q_i;
        let second = shift_cmp == std::cmp::Ordering::Equal;
        let regime = match (first, second) {
            (false, false) => Regime::Nonlimit,
            (true, false) => Regime::FirstLimit,
            (false, true) => Regime::SecondLimit,
            (true, true) => Regime::HybridLimit,
        };
        Ok(params(regime))
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn r_plus_a(&self) -> f64 {
        self.r_plus_a
    }

    /// True when `r + a = 0` exactly.
    pub fn shift_is_zero(&self) -> bool {
        self.shift_zero
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(a: &str, b: f64) -> ModuliPoint {
        ModuliPoint::parse(a, b).unwrap()
    }

    #[test]
    fn parses_rationals_and_decimals() {
        assert_eq!("1/4".parse::<Rational>().unwrap(), Rational::new(1, 4).unwrap());
        assert_eq!("0.25".parse::<Rational>().unwrap(), Rational::new(1, 4).unwrap());
        assert_eq!("-2/-4".parse::<Rational>().unwrap(), Rational::new(1, 2).unwrap());
        assert_eq!("-.5".parse::<Rational>().unwrap(), Rational::new(-1, 2).unwrap());
        assert_eq!("3".parse::<Rational>().unwrap(), Rational::integer(3));
        for bad in ["", "a", "1/0", "1.2.3", "1e-3", "."] {
            assert!(bad.parse::<Rational>().is_err(), "{bad}");
        }
    }

    #[test]
    fn shear_classes() {
        assert_eq!(point("0", 1.0).a_class(), AClass::Zero);
        assert_eq!(point("1/2", 1.0).a_class(), AClass::Half);
        assert_eq!(point("0.5", 1.0).a_class(), AClass::Half);
        assert_eq!(point("1/3", 1.0).a_class(), AClass::Generic);
        assert!(ModuliPoint::new(0.1, 0.0).is_err());
    }

    #[test]
    fn figure_parameter_sets_classify() {
        let c = |a, b, p, q, r| MapParams::classify(&point(a, b), p, q, r).map(|m| m.regime());
        assert_eq!(c("1/4", 2.1, 2, 3, 0), Ok(Regime::Nonlimit));
        assert_eq!(c("1/4", 1.25, 1, 2, 0), Ok(Regime::FirstLimit));
        assert_eq!(c("1/2", 2.0, 2, 3, 1), Ok(Regime::SecondLimit));
        assert_eq!(c("0", 2.0, 1, 2, 1), Ok(Regime::HybridLimit));
        assert_eq!(c("0", 1.0, 1, 1, 0), Ok(Regime::CircleFamily));
    }

    #[test]
    fn infeasible_inputs_name_the_inequality() {
        let e = MapParams::classify(&point("0", 0.5), 1, 1, 0).unwrap_err();
        assert!(e.to_string().contains("(r+a)^2+b^2 > p^2"));
        let e = MapParams::classify(&point("0", 5.0), 1, 3, 0).unwrap_err();
        assert!(e.to_string().contains("p/q >= 1/2"));
        let e = MapParams::classify(&point("0", 5.0), 1, 1, 1).unwrap_err();
        assert!(e.to_string().contains("|r+a|/q <= 1/2"));
    }

    #[test]
    fn float_shear_uses_tolerance() {
        let pt = ModuliPoint::new(0.5 + 1e-14, 2.0).unwrap();
        assert_eq!(MapParams::classify(&pt, 2, 3, 1).unwrap().regime(), Regime::SecondLimit);
    }
}
