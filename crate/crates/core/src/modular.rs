//! Residues modulo an odd prime `p = 2k + 1`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModulusError {
    #[error("{0} is not an odd prime")]
    NotOddPrime(u32),
    #[error("modulus {0} is too small: elimination needs a prime p > 7")]
    TooSmall(u32),
}

/// Deterministic trial division; moduli here are desk-scale.
pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// The pair `(p, k)` with `p = 2k + 1` prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "ModulusRepr", into = "ModulusRepr")]
pub struct Modulus {
    p: u32,
}

#[derive(Serialize, Deserialize)]
struct ModulusRepr {
    p: u32,
    k: u32,
}

impl TryFrom<ModulusRepr> for Modulus {
    type Error = ModulusError;

    fn try_from(r: ModulusRepr) -> Result<Self, Self::Error> {
        let m = Modulus::new(r.p)?;
        if m.k() != r.k {
            return Err(ModulusError::NotOddPrime(r.p));
        }
        Ok(m)
    }
}

impl From<Modulus> for ModulusRepr {
    fn from(m: Modulus) -> Self {
        ModulusRepr { p: m.p, k: m.k() }
    }
}

impl Modulus {
    pub fn new(p: u32) -> Result<Self, ModulusError> {
        if p == 2 || !is_prime(p) {
            return Err(ModulusError::NotOddPrime(p));
        }
        Ok(Modulus { p })
    }

    /// A modulus accepted by the elimination procedure (prime `p > 7`).
    pub fn for_elimination(p: u32) -> Result<Self, ModulusError> {
        let m = Self::new(p)?;
        if p <= 7 {
            return Err(ModulusError::TooSmall(p));
        }
        Ok(m)
    }

    pub fn p(self) -> u32 {
        self.p
    }

    pub fn k(self) -> u32 {
        (self.p - 1) / 2
    }

    pub fn color(self, value: i64) -> Color {
        Color(value.rem_euclid(self.p as i64) as u32)
    }

    pub fn add(self, x: Color, y: Color) -> Color {
        Color((x.0 + y.0) % self.p)
    }

    pub fn sub(self, x: Color, y: Color) -> Color {
        Color((x.0 + self.p - y.0) % self.p)
    }

    pub fn mul(self, x: Color, y: Color) -> Color {
        Color(((x.0 as u64 * y.0 as u64) % self.p as u64) as u32)
    }

    /// `2o - u`: the color an arc `u` takes after passing under `o`.
    pub fn reflect(self, over: Color, under: Color) -> Color {
        self.sub(self.add(over, over), under)
    }

    pub fn inv(self, x: Color) -> Option<Color> {
        if x.0 == 0 {
            return None;
        }
        // Fermat: x^(p-2)
        let mut base = x.0 as u64;
        let mut exp = self.p - 2;
        let m = self.p as u64;
        let mut acc = 1u64;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % m;
            }
            base = base * base % m;
            exp >>= 1;
        }
        Some(Color(acc as u32))
    }

    /// The colors `[2k, 2k-1, k]` in removal order.
    pub fn forbidden(self) -> [Color; 3] {
        let k = self.k();
        [Color(2 * k), Color(2 * k - 1), Color(k)]
    }

    pub fn colors(self) -> impl Iterator<Item = Color> {
        (0..self.p).map(Color)
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={} (k={})", self.p, self.k())
    }
}

/// A residue in `0..p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Color(pub u32);

impl Color {
    pub fn value(self) -> u32 {
        self.0
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes() {
        let small: Vec<u32> = (0..30).filter(|&n| is_prime(n)).collect();
        assert_eq!(small, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
    }

    #[test]
    fn modulus_rejects_composites_and_two() {
        assert_eq!(Modulus::new(9), Err(ModulusError::NotOddPrime(9)));
        assert_eq!(Modulus::new(2), Err(ModulusError::NotOddPrime(2)));
        assert_eq!(Modulus::for_elimination(7), Err(ModulusError::TooSmall(7)));
        assert!(Modulus::for_elimination(11).is_ok());
    }

    #[test]
    fn forbidden_colors() {
        let m = Modulus::new(11).unwrap();
        assert_eq!(m.forbidden(), [Color(10), Color(9), Color(5)]);
        let m = Modulus::new(13).unwrap();
        assert_eq!(m.forbidden(), [Color(12), Color(11), Color(6)]);
    }

    #[test]
    fn reflection_and_inverse() {
        let m = Modulus::new(11).unwrap();
        assert_eq!(m.reflect(Color(7), Color(3)), Color(0));
        for x in 1..11 {
            let inv = m.inv(Color(x)).unwrap();
            assert_eq!(m.mul(Color(x), inv), Color(1));
        }
        assert_eq!(m.inv(Color(0)), None);
    }

    #[test]
    fn serde_carries_k() {
        let m = Modulus::new(13).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"p":13,"k":6}"#);
        let back: Modulus = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<Modulus>(r#"{"p":13,"k":5}"#).is_err());
    }
}
