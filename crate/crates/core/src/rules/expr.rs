//! Affine color expressions in the parameters `a`, `b`, `k`, `l`.
//!
//! `k` is always `(p-1)/2`. `l` only has a value once a modulus class
//! `p = m*l + r` is fixed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("cannot parse expression {0:?}")]
pub struct ExprError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct AffineExpr {
    pub a: i64,
    pub b: i64,
    pub k: i64,
    pub l: i64,
    pub c: i64,
}

/// A modulus class `p = m*l + r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct Class {
    pub m: u32,
    pub r: u32,
}

impl From<[u32; 2]> for Class {
    fn from([m, r]: [u32; 2]) -> Self {
        Class { m, r }
    }
}

impl From<Class> for [u32; 2] {
    fn from(c: Class) -> Self {
        [c.m, c.r]
    }
}

impl Class {
    /// `l` for `p`, if `p` lies in the class.
    pub fn l(self, p: u32) -> Option<i64> {
        (p % self.m == self.r && p >= self.r).then(|| ((p - self.r) / self.m) as i64)
    }

    pub fn p_of(self, l: i64) -> i64 {
        self.m as i64 * l + self.r as i64
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}l+{}", self.m, self.r)
    }
}

/// Concrete parameter values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Env {
    pub p: u32,
    pub a: i64,
    pub b: i64,
    pub l: Option<i64>,
}

impl Env {
    pub fn new(p: u32, a: i64, b: i64, l: Option<i64>) -> Self {
        Env { p, a, b, l }
    }
}

impl AffineExpr {
    pub const ZERO: AffineExpr = AffineExpr { a: 0, b: 0, k: 0, l: 0, c: 0 };

    pub fn constant(c: i64) -> Self {
        AffineExpr { c, ..Self::ZERO }
    }

    pub fn uses_b(&self) -> bool {
        self.b != 0
    }

    pub fn uses_l(&self) -> bool {
        self.l != 0
    }

    pub fn is_numeric(&self) -> bool {
        self.a == 0 && self.b == 0 && self.k == 0 && self.l == 0
    }

    /// Residue in `0..p`, or `None` if `l` is needed but unknown.
    pub fn eval(&self, env: Env) -> Option<i64> {
        let p = env.p as i64;
        let k = (p - 1) / 2;
        let l = if self.l != 0 { env.l? } else { 0 };
        let v = self.a * env.a + self.b * env.b + self.k * k + self.l * l + self.c;
        Some(v.rem_euclid(p))
    }

    /// Integer value with `k` written in `l` through the class. Only for
    /// expressions free of `a` and `b`; `None` if `k` is not integral in `l`.
    pub fn int_in_l(&self, class: Class, l: i64) -> Option<i64> {
        if self.a != 0 || self.b != 0 {
            return None;
        }
        let twice_k = class.p_of(l) - 1;
        if self.k % 2 != 0 && twice_k % 2 != 0 {
            return None;
        }
        Some(self.l * l + self.c + self.k * twice_k / 2)
    }

    /// `(coefficient of l, constant)` times two, with `k` eliminated.
    fn doubled_in_l(&self, class: Class) -> (i64, i64) {
        (2 * self.l + self.k * class.m as i64, 2 * self.c + self.k * (class.r as i64 - 1))
    }

    /// Is the expression zero modulo every prime `p`, as a polynomial
    /// identity? Without a class, `k` stays symbolic and `l` must not occur.
    pub fn is_identically_zero(&self, class: Option<Class>) -> bool {
        if self.a != 0 || self.b != 0 {
            return false;
        }
        match class {
            None => self.l == 0 && self.k % 2 == 0 && self.c == self.k / 2,
            Some(cl) => {
                let (dl, dc) = self.doubled_in_l(cl);
                // dl*l + dc = 2j(m*l + r) for an integer j
                let m = cl.m as i64;
                dl % (2 * m) == 0 && dc == dl / m * cl.r as i64
            }
        }
    }
}

impl std::ops::Add for AffineExpr {
    type Output = AffineExpr;
    fn add(self, o: AffineExpr) -> AffineExpr {
        AffineExpr { a: self.a + o.a, b: self.b + o.b, k: self.k + o.k, l: self.l + o.l, c: self.c + o.c }
    }
}

impl std::ops::Sub for AffineExpr {
    type Output = AffineExpr;
    fn sub(self, o: AffineExpr) -> AffineExpr {
        self + o * -1
    }
}

impl std::ops::Mul<i64> for AffineExpr {
    type Output = AffineExpr;
    fn mul(self, s: i64) -> AffineExpr {
        AffineExpr { a: self.a * s, b: self.b * s, k: self.k * s, l: self.l * s, c: self.c * s }
    }
}

impl FromStr for AffineExpr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ExprError(s.to_string());
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() {
            return Err(err());
        }
        let mut e = AffineExpr::ZERO;
        let bytes = t.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let mut sign = 1;
            if bytes[i] == b'+' || bytes[i] == b'-' {
                if bytes[i] == b'-' {
                    sign = -1;
                }
                i += 1;
            } else if i != 0 {
                return Err(err());
            }
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let coef = if i > start { t[start..i].parse::<i64>().map_err(|_| err())? } else { 1 };
            let slot = match bytes.get(i) {
                Some(b'a') => Some(&mut e.a),
                Some(b'b') => Some(&mut e.b),
                Some(b'k') => Some(&mut e.k),
                Some(b'l') => Some(&mut e.l),
                _ => None,
            };
            match slot {
                Some(v) => {
                    *v += sign * coef;
                    i += 1;
                }
                None if i > start => e.c += sign * coef,
                None => return Err(err()),
            }
        }
        Ok(e)
    }
}

impl fmt::Display for AffineExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (coef, name) in [(self.a, "a"), (self.b, "b"), (self.k, "k"), (self.l, "l"), (self.c, "")] {
            if coef == 0 {
                continue;
            }
            let sign = if coef < 0 { "-" } else if first { "" } else { "+" };
            let mag = coef.abs();
            if mag == 1 && !name.is_empty() {
                write!(f, "{sign}{name}")?;
            } else {
                write!(f, "{sign}{mag}{name}")?;
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl Serialize for AffineExpr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AffineExpr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `lhs = rhs`, held as the difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Equation {
    pub lhs: AffineExpr,
    pub rhs: AffineExpr,
}

impl Equation {
    pub fn diff(&self) -> AffineExpr {
        self.lhs - self.rhs
    }

    pub fn holds(&self, env: Env) -> Option<bool> {
        Some(self.diff().eval(env)? == 0)
    }
}

impl FromStr for Equation {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (l, r) = s.split_once('=').ok_or_else(|| ExprError(s.to_string()))?;
        Ok(Equation { lhs: l.parse()?, rhs: r.parse()? })
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.lhs, self.rhs)
    }
}

impl Serialize for Equation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Equation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> AffineExpr {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_print() {
        for s in ["2a+1", "-2-a", "2a-2b-1", "a+k", "3l-5", "-8-3a", "4a+k+2", "0", "-1"] {
            let x = e(s);
            assert_eq!(e(&x.to_string()), x, "{s}");
        }
        assert_eq!(e("2a-2b+k"), AffineExpr { a: 2, b: -2, k: 1, l: 0, c: 0 });
        assert!("2a+".parse::<AffineExpr>().is_err());
        assert!("x".parse::<AffineExpr>().is_err());
        assert!("2a 3".parse::<AffineExpr>().is_err());
        assert_eq!(e(" 2a + 3 "), e("2a+3"));
    }

    #[test]
    fn evaluation_mod_p() {
        let env = Env::new(11, 3, 0, None);
        assert_eq!(e("2a+1").eval(env), Some(7));
        assert_eq!(e("-2-a").eval(env), Some(6));
        assert_eq!(e("3a+2").eval(env), Some(0));
        assert_eq!(e("2k").eval(env), Some(10));
        assert_eq!(e("l").eval(env), None);
    }

    #[test]
    fn identities() {
        // 2k + 1 = p
        assert!(e("2k+1").is_identically_zero(None));
        assert!(!e("k+1").is_identically_zero(None));
        let c = Class { m: 4, r: 1 };
        // k = 2l in class 4l+1, so k - 2l = 0 and 4l + 1 = 0
        assert!(e("k-2l").is_identically_zero(Some(c)));
        assert!(e("4l+1").is_identically_zero(Some(c)));
        assert!(e("8l+2").is_identically_zero(Some(c)));
        assert!(!e("2l").is_identically_zero(Some(c)));
        assert_eq!(c.l(13), Some(3));
        assert_eq!(c.l(11), None);
    }

    #[test]
    fn integers_in_l() {
        let c = Class { m: 4, r: 3 };
        assert_eq!(e("k").int_in_l(c, 2), Some(5));
        assert_eq!(e("3l+4").int_in_l(c, 2), Some(10));
    }
}
