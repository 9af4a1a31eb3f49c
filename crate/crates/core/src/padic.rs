//! Integer p-adic arithmetic and lattice helpers.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on the number of points a box enumeration may produce.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

/// A fixed prime `p`. Primality is checked when the context is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct PadicContext {
    p: u64,
}

impl PadicContext {
    pub fn new(p: u64) -> Result<Self> {
        if is_prime(p) {
            Ok(PadicContext { p })
        } else {
            Err(Error::NotPrime(p))
        }
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    /// Largest `v` with `p^v | n`.
    pub fn valuation(&self, n: u64) -> Result<u32> {
        if n == 0 {
            return Err(Error::ZeroValuation);
        }
        let mut m = n;
        let mut v = 0;
        while m.is_multiple_of(self.p) {
            m /= self.p;
            v += 1;
        }
        Ok(v)
    }

    /// `|n|_p` as an exact rational; `|0|_p = 0`.
    pub fn norm(&self, n: u64) -> Ratio<u64> {
        match self.valuation(n) {
            Err(_) => Ratio::from_integer(0),
            // p^v divides n, so it fits
            Ok(v) => Ratio::new_raw(1, self.p.pow(v)),
        }
    }

    /// `|n|_p^exponent` as a float.
    pub fn norm_pow(&self, n: u64, exponent: f64) -> f64 {
        match self.valuation(n) {
            Err(_) => 0.0,
            Ok(v) => (self.p as f64).powf(-(v as f64) * exponent),
        }
    }

    /// `p^k`, failing instead of wrapping.
    pub fn pow(&self, k: u32) -> Result<u64> {
        self.p
            .checked_pow(k)
            .ok_or(Error::PowerOverflow { p: self.p, exponent: k })
    }

    /// Least residue of `n` modulo `p^k`.
    pub fn least_residue(&self, n: u64, k: u32) -> Result<u64> {
        Ok(n % self.pow(k)?)
    }
}

impl TryFrom<u64> for PadicContext {
    type Error = Error;

    fn try_from(p: u64) -> Result<Self> {
        PadicContext::new(p)
    }
}

impl From<PadicContext> for u64 {
    fn from(ctx: PadicContext) -> u64 {
        ctx.p
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// A point of `N_0^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticePoint(Vec<u64>);

impl LatticePoint {
    pub fn new(coords: Vec<u64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::param("coords", "a lattice point needs d >= 1 coordinates"));
        }
        Ok(LatticePoint(coords))
    }

    pub fn origin(d: usize) -> Result<Self> {
        LatticePoint::new(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[u64] {
        &self.0
    }
}

impl From<u64> for LatticePoint {
    fn from(n: u64) -> Self {
        LatticePoint(vec![n])
    }
}

/// Number of points in `{0,…,side}^d`, or an error above `cap`.
pub fn box_len(d: usize, side: u64, cap: u64) -> Result<usize> {
    let requested = (side as u128 + 1)
        .checked_pow(d as u32)
        .unwrap_or(u128::MAX);
    if requested > cap as u128 {
        return Err(Error::EnumerationCap { requested, cap });
    }
    Ok(requested as usize)
}

/// Enumerates `a + {0,…,side}^d` in lexicographic order.
pub fn box_points(a: &LatticePoint, side: u64) -> Result<Vec<LatticePoint>> {
    box_points_capped(a, side, DEFAULT_ENUMERATION_CAP)
}

pub fn box_points_capped(a: &LatticePoint, side: u64, cap: u64) -> Result<Vec<LatticePoint>> {
    let d = a.dim();
    let len = box_len(d, side, cap)?;
    let mut out = Vec::with_capacity(len);
    let mut offset = vec![0u64; d];
    for _ in 0..len {
        let coords = a
            .coords()
            .iter()
            .zip(&offset)
            .map(|(&x, &o)| {
                x.checked_add(o)
                    .ok_or_else(|| Error::param("a", "box leaves the u64 lattice"))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(LatticePoint(coords));
        // odometer, last coordinate fastest
        for i in (0..d).rev() {
            if offset[i] < side {
                offset[i] += 1;
                break;
            }
            offset[i] = 0;
        }
    }
    Ok(out)
}
