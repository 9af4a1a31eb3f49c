//! Increment laws for the tree noise and the counter-based streams that feed them.
//!
//! Every noise variable is addressed by a tag `(seed, k, r…)`. A tag is hashed
//! into the starting state of a SplitMix64 sequence, so any single variable can
//! be drawn without generating the ones before it.

use rand::distr::{Distribution, OpenClosed01};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::LawError;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashed position in the tag tree. Children are derived, never advanced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn root(master_seed: u64) -> Self {
        StreamKey(mix64(master_seed ^ 0x5053_5349_5f52_4f4f))
    }

    pub fn child(self, tag: u64) -> Self {
        StreamKey(mix64(self.0.wrapping_add(GOLDEN) ^ mix64(tag.wrapping_mul(GOLDEN) ^ 0xA076_1D64_78BD_642F)))
    }

    pub fn path(master_seed: u64, tag: &[u64]) -> Self {
        tag.iter().fold(StreamKey::root(master_seed), |k, &t| k.child(t))
    }

    pub fn stream(self) -> RngStream {
        RngStream { state: self.0 }
    }
}

/// Deterministic generator for one tag. Cloning forks an identical copy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    state: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, tag: &[u64]) -> Self {
        StreamKey::path(master_seed, tag).stream()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

/// Law of the noise variables `ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum IncrementLaw {
    /// Symmetric law with `P(|ξ| > t) = t^{-alpha}` for `t >= 1`.
    #[serde(rename = "pareto")]
    SymmetricPareto { alpha: f64 },
    Gaussian { sigma: f64 },
    Rademacher,
}

/// Which constraints `validate` enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ValidationContext {
    /// Require `E|ξ| < ∞`, as the tree series needs.
    pub for_tree: bool,
}

impl IncrementLaw {
    pub fn validate(&self, ctx: ValidationContext) -> Result<(), LawError> {
        match *self {
            IncrementLaw::SymmetricPareto { alpha } => {
                if !(alpha.is_finite() && alpha > 0.0) {
                    return Err(LawError::NonPositiveAlpha(alpha));
                }
                if ctx.for_tree && alpha <= 1.0 {
                    return Err(LawError::InfiniteMean(alpha));
                }
                Ok(())
            }
            IncrementLaw::Gaussian { sigma } => {
                if sigma.is_finite() && sigma > 0.0 {
                    Ok(())
                } else {
                    Err(LawError::NonPositiveSigma(sigma))
                }
            }
            IncrementLaw::Rademacher => Ok(()),
        }
    }

    /// Checks `alpha ∈ ((H + 1/q)^{-1}, H^{-1})`, the heavy-tail window in which
    /// the tree is Weyl almost periodic yet not sample bounded. Independent of
    /// the integrability gate in [`validate`](Self::validate).
    pub fn check_window(&self, hurst: f64, q: f64) -> Result<(), LawError> {
        let IncrementLaw::SymmetricPareto { alpha } = *self else {
            return Err(LawError::NotPareto);
        };
        let (lower, upper) = heavy_tail_window(hurst, q);
        if alpha > lower && alpha < upper {
            Ok(())
        } else {
            Err(LawError::OutsideWindow {
                alpha,
                lower,
                upper,
                hurst,
                q,
            })
        }
    }

    /// `E|ξ|` in closed form.
    pub fn mean_abs(&self) -> Result<f64, LawError> {
        match *self {
            IncrementLaw::SymmetricPareto { alpha } => {
                self.validate(ValidationContext { for_tree: true })?;
                Ok(alpha / (alpha - 1.0))
            }
            IncrementLaw::Gaussian { sigma } => {
                self.validate(ValidationContext::default())?;
                Ok(sigma * (2.0 / std::f64::consts::PI).sqrt())
            }
            IncrementLaw::Rademacher => Ok(1.0),
        }
    }
}

/// Open interval `((H + 1/q)^{-1}, H^{-1})`.
pub fn heavy_tail_window(hurst: f64, q: f64) -> (f64, f64) {
    (1.0 / (hurst + 1.0 / q), 1.0 / hurst)
}

/// Inverse transform for the Pareto magnitude: `u^{-1/alpha}` with `u ∈ (0, 1]`.
#[inline]
pub fn pareto_magnitude(alpha: f64, u: f64) -> f64 {
    u.powf(-1.0 / alpha)
}

impl Distribution<f64> for IncrementLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            IncrementLaw::SymmetricPareto { alpha } => {
                let u: f64 = rng.sample(OpenClosed01);
                let m = pareto_magnitude(alpha, u);
                if rng.random::<bool>() {
                    m
                } else {
                    -m
                }
            }
            IncrementLaw::Gaussian { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                sigma * z
            }
            IncrementLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TREE: ValidationContext = ValidationContext { for_tree: true };

    #[test]
    fn inverse_transform_examples() {
        assert_eq!(pareto_magnitude(0.5, 1.0 / 16.0), 256.0);
        for alpha in [0.3, 1.0, 2.5] {
            assert_eq!(pareto_magnitude(alpha, 1.0), 1.0);
        }
    }

    #[test]
    fn rademacher_values_and_mean() {
        let mut rng = RngStream::new(7, &[1]);
        let law = IncrementLaw::Rademacher;
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let x = law.sample(&mut rng);
            assert!(x == 1.0 || x == -1.0);
            sum += x;
        }
        assert!((sum / n as f64).abs() < 0.02);
    }

    #[test]
    fn mean_abs_closed_forms() {
        assert_relative_eq!(IncrementLaw::SymmetricPareto { alpha: 2.0 }.mean_abs().unwrap(), 2.0);
        assert_relative_eq!(
            IncrementLaw::Gaussian { sigma: 1.0 }.mean_abs().unwrap(),
            0.797_884_560_802_865_4,
            epsilon = 1e-15
        );
        assert_eq!(IncrementLaw::Rademacher.mean_abs().unwrap(), 1.0);
        assert_eq!(
            IncrementLaw::SymmetricPareto { alpha: 1.0 }.mean_abs(),
            Err(LawError::InfiniteMean(1.0))
        );
    }

    #[test]
    fn validation_examples() {
        let e = IncrementLaw::SymmetricPareto { alpha: 0.75 }.validate(TREE).unwrap_err();
        assert_eq!(e, LawError::InfiniteMean(0.75));
        assert!(e.to_string().contains("E|xi| infinite"));
        assert!(IncrementLaw::SymmetricPareto { alpha: 0.75 }
            .validate(ValidationContext::default())
            .is_ok());
        assert!(IncrementLaw::Gaussian { sigma: 0.0 }.validate(TREE).is_err());
        assert!(IncrementLaw::Gaussian { sigma: f64::NAN }.validate(TREE).is_err());
        assert!(IncrementLaw::SymmetricPareto { alpha: 1.5 }.validate(TREE).is_ok());
        assert!(IncrementLaw::SymmetricPareto { alpha: -1.0 }
            .validate(ValidationContext::default())
            .is_err());
    }

    #[test]
    fn window_check() {
        // H = 1, q = 1: window (0.5, 1)
        assert!(IncrementLaw::SymmetricPareto { alpha: 0.75 }.check_window(1.0, 1.0).is_ok());
        // H = 0.7, q = 1: window (0.588…, 1.428…)
        assert!(IncrementLaw::SymmetricPareto { alpha: 1.25 }.check_window(0.7, 1.0).is_ok());
        assert!(matches!(
            IncrementLaw::SymmetricPareto { alpha: 1.5 }.check_window(0.7, 1.0),
            Err(LawError::OutsideWindow { .. })
        ));
        assert_eq!(IncrementLaw::Rademacher.check_window(1.0, 1.0), Err(LawError::NotPareto));
    }

    #[test]
    fn json_shape() {
        let law: IncrementLaw = serde_json::from_str(r#"{"variant":"pareto","alpha":1.5}"#).unwrap();
        assert_eq!(law, IncrementLaw::SymmetricPareto { alpha: 1.5 });
        let law: IncrementLaw = serde_json::from_str(r#"{"variant":"gaussian","sigma":2}"#).unwrap();
        assert_eq!(law, IncrementLaw::Gaussian { sigma: 2.0 });
        let law: IncrementLaw = serde_json::from_str(r#"{"variant":"rademacher"}"#).unwrap();
        assert_eq!(law, IncrementLaw::Rademacher);
        assert_eq!(
            serde_json::to_string(&IncrementLaw::SymmetricPareto { alpha: 2.0 }).unwrap(),
            r#"{"variant":"pareto","alpha":2.0}"#
        );
    }

    #[test]
    fn keys_are_order_sensitive() {
        assert_ne!(StreamKey::path(1, &[2, 3]), StreamKey::path(1, &[3, 2]));
        assert_ne!(StreamKey::path(1, &[0]), StreamKey::path(1, &[]));
        assert_eq!(StreamKey::path(9, &[4, 5]), StreamKey::root(9).child(4).child(5));
    }
}
