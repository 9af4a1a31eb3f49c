//! Truncated tree-series processes and fields.
//!
//! Level `k` carries i.i.d. noise `ξ_{k,r}` indexed by residues `r` modulo
//! `p^{k+1}` (componentwise in dimension `d`), extended periodically. The
//! process is
//!
//! ```text
//! X_n = Σ_{k=0}^{Kmax} p^{-kH} (ξ_{k,n} − ξ_{k,0})
//! ```
//!
//! and is evaluated from `k = Kmax` down to `k = 0`.

use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::increments::{IncrementLaw, StreamKey, ValidationContext};
use crate::padic::{box_len, LatticePoint, PadicContext, DEFAULT_ENUMERATION_CAP};

/// Default cap on the number of stored noise values in a dense build.
pub const DEFAULT_MEMORY_CAP: u64 = 1 << 26;

/// Everything needed to reproduce one simulated process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSpec {
    pub p: PadicContext,
    pub hurst: f64,
    pub kmax: usize,
    pub law: IncrementLaw,
    pub seed: u64,
    #[serde(default = "one")]
    pub dim: usize,
}

fn one() -> usize {
    1
}

impl TreeSpec {
    pub fn new(p: u64, hurst: f64, kmax: usize, law: IncrementLaw, seed: u64) -> Result<Self> {
        let spec = TreeSpec {
            p: PadicContext::new(p)?,
            hurst,
            kmax,
            law,
            seed,
            dim: 1,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        self.dim = dim;
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        TreeSpec { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        self.law.validate(ValidationContext { for_tree: true })?;
        if !(self.hurst.is_finite() && self.hurst > 0.0) {
            return Err(Error::param("hurst", format!("must be positive, got {}", self.hurst)));
        }
        if self.dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        self.p.pow(self.kmax as u32 + 1)?;
        Ok(())
    }

    /// Period `p^{k+1}` of level `k`.
    pub fn period(&self, k: usize) -> u64 {
        self.p.prime().pow(k as u32 + 1)
    }

    /// Level weight `p^{-kH}`.
    pub fn weight(&self, k: usize) -> f64 {
        (self.p.prime() as f64).powf(-(k as f64) * self.hurst)
    }

    fn weights(&self) -> Vec<f64> {
        (0..=self.kmax).map(|k| self.weight(k)).collect()
    }

    fn check_level(&self, k: usize) -> Result<()> {
        if k > self.kmax {
            Err(Error::LevelOutOfRange { k, kmax: self.kmax })
        } else {
            Ok(())
        }
    }
}

/// Read access to the noise variables of a tree.
pub trait NoiseSource: Sync {
    fn spec(&self) -> &TreeSpec;

    /// `ξ_{k,r}` for a residue tuple already reduced modulo `p^{k+1}`.
    fn xi_residue(&self, k: usize, r: &[u64]) -> f64;

    /// `ξ_{k,0}`.
    fn xi_origin(&self, k: usize) -> f64;
}

fn draw(law: &IncrementLaw, level_key: StreamKey, r: &[u64]) -> f64 {
    let key = r.iter().fold(level_key, |key, &c| key.child(c));
    law.sample(&mut key.stream())
}

fn level_key(seed: u64, k: usize) -> StreamKey {
    StreamKey::root(seed).child(k as u64)
}

/// Dense storage of all levels up to `Kmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeLevels {
    spec: TreeSpec,
    levels: Vec<Vec<f64>>,
}

impl TreeLevels {
    pub fn build(spec: &TreeSpec) -> Result<Self> {
        Self::build_capped(spec, DEFAULT_MEMORY_CAP)
    }

    pub fn build_capped(spec: &TreeSpec, cap: u64) -> Result<Self> {
        spec.validate()?;
        let mut total: u128 = 0;
        let mut sizes = Vec::with_capacity(spec.kmax + 1);
        for k in 0..=spec.kmax {
            let size = (spec.period(k) as u128)
                .checked_pow(spec.dim as u32)
                .unwrap_or(u128::MAX);
            total = total.saturating_add(size);
            if total > cap as u128 {
                return Err(Error::MemoryCap {
                    level: k,
                    requested: total,
                    cap,
                });
            }
            sizes.push(size as usize);
        }
        let d = spec.dim;
        let levels = sizes
            .par_iter()
            .enumerate()
            .map(|(k, &size)| {
                let m = spec.period(k);
                let key = level_key(spec.seed, k);
                (0..size)
                    .into_par_iter()
                    .map_init(
                        || vec![0u64; d],
                        |r, flat| {
                            unflatten(flat as u64, m, r);
                            draw(&spec.law, key, r)
                        },
                    )
                    .collect()
            })
            .collect();
        Ok(TreeLevels {
            spec: spec.clone(),
            levels,
        })
    }

    pub fn level(&self, k: usize) -> Result<&[f64]> {
        self.spec.check_level(k)?;
        Ok(&self.levels[k])
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }
}

/// Row-major index to residue tuple.
fn unflatten(mut flat: u64, m: u64, out: &mut [u64]) {
    for c in out.iter_mut().rev() {
        *c = flat % m;
        flat /= m;
    }
}

fn flatten(r: &[u64], m: u64) -> usize {
    r.iter().fold(0u64, |acc, &c| acc * m + c) as usize
}

impl NoiseSource for TreeLevels {
    fn spec(&self) -> &TreeSpec {
        &self.spec
    }

    #[inline]
    fn xi_residue(&self, k: usize, r: &[u64]) -> f64 {
        self.levels[k][flatten(r, self.spec.period(k))]
    }

    fn xi_origin(&self, k: usize) -> f64 {
        self.levels[k][0]
    }
}

/// Computes each `ξ_{k,r}` on demand from `(seed, k, r)`; nothing is stored
/// beyond one key and the origin value per level.
#[derive(Debug, Clone)]
pub struct LazyLevels {
    spec: TreeSpec,
    keys: Vec<StreamKey>,
    origin: Vec<f64>,
}

impl LazyLevels {
    pub fn new(spec: &TreeSpec) -> Result<Self> {
        spec.validate()?;
        let keys: Vec<_> = (0..=spec.kmax).map(|k| level_key(spec.seed, k)).collect();
        let zeros = vec![0u64; spec.dim];
        let origin = keys.iter().map(|&key| draw(&spec.law, key, &zeros)).collect();
        Ok(LazyLevels {
            spec: spec.clone(),
            keys,
            origin,
        })
    }
}

impl NoiseSource for LazyLevels {
    fn spec(&self) -> &TreeSpec {
        &self.spec
    }

    #[inline]
    fn xi_residue(&self, k: usize, r: &[u64]) -> f64 {
        draw(&self.spec.law, self.keys[k], r)
    }

    fn xi_origin(&self, k: usize) -> f64 {
        self.origin[k]
    }
}

/// `ξ_{k, n mod p^{k+1}}`.
pub fn xi_at<S: NoiseSource + ?Sized>(src: &S, k: usize, n: &LatticePoint) -> Result<f64> {
    let spec = src.spec();
    spec.check_level(k)?;
    if n.dim() != spec.dim {
        return Err(Error::Dimension {
            expected: spec.dim,
            got: n.dim(),
        });
    }
    let m = spec.period(k);
    let r: Vec<u64> = n.coords().iter().map(|&c| c % m).collect();
    Ok(src.xi_residue(k, &r))
}

/// A simulated one-dimensional path `X_0..X_{N-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub spec: TreeSpec,
    pub values: Vec<f64>,
}

impl SamplePath {
    pub fn horizon(&self) -> usize {
        self.values.len()
    }
}

/// A simulated field over the box `{0,…,side}^d`, values in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleField {
    pub spec: TreeSpec,
    pub side: u64,
    pub values: Vec<f64>,
}

impl SampleField {
    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn index_of(&self, n: &[u64]) -> Option<usize> {
        if n.len() != self.dim() || n.iter().any(|&c| c > self.side) {
            return None;
        }
        Some(flatten(n, self.side + 1))
    }

    pub fn get(&self, n: &[u64]) -> Option<f64> {
        self.index_of(n).map(|i| self.values[i])
    }
}

fn require_dim(spec: &TreeSpec, d: usize) -> Result<()> {
    if spec.dim != d {
        return Err(Error::Dimension {
            expected: d,
            got: spec.dim,
        });
    }
    Ok(())
}

/// Single value `X_n` of a one-dimensional tree.
pub fn value_at<S: NoiseSource + ?Sized>(src: &S, n: u64) -> f64 {
    tail_difference(src, 0, n, 0)
}

/// `Σ_{k=K}^{Kmax} p^{-kH} (ξ_{k,b} − ξ_{k,a})`, summed from `Kmax` down.
fn tail_difference<S: NoiseSource + ?Sized>(src: &S, a: u64, b: u64, from_level: usize) -> f64 {
    let spec = src.spec();
    let mut acc = 0.0;
    for k in (from_level..=spec.kmax).rev() {
        let m = spec.period(k);
        let (ra, rb) = (a % m, b % m);
        if ra == rb {
            continue;
        }
        let xa = if ra == 0 { src.xi_origin(k) } else { src.xi_residue(k, &[ra]) };
        let xb = if rb == 0 { src.xi_origin(k) } else { src.xi_residue(k, &[rb]) };
        acc += spec.weight(k) * (xb - xa);
    }
    acc
}

/// `X_b − X_a` for lattice points of a `d`-dimensional tree.
pub fn field_increment<S: NoiseSource + ?Sized>(src: &S, a: &[u64], b: &[u64]) -> Result<f64> {
    let spec = src.spec();
    for n in [a, b] {
        require_dim(spec, n.len())?;
    }
    let d = spec.dim;
    let mut ra = vec![0u64; d];
    let mut rb = vec![0u64; d];
    let mut acc = 0.0;
    for k in (0..=spec.kmax).rev() {
        let m = spec.period(k);
        for i in 0..d {
            ra[i] = a[i] % m;
            rb[i] = b[i] % m;
        }
        if ra != rb {
            acc += spec.weight(k) * (src.xi_residue(k, &rb) - src.xi_residue(k, &ra));
        }
    }
    Ok(acc)
}

/// `X_0..X_{N-1}` for a one-dimensional tree.
pub fn path<S: NoiseSource + ?Sized>(src: &S, horizon: usize) -> Result<SamplePath> {
    let spec = src.spec();
    require_dim(spec, 1)?;
    if horizon == 0 {
        return Err(Error::param("horizon", "must be at least 1"));
    }
    let weights = spec.weights();
    let periods: Vec<u64> = (0..=spec.kmax).map(|k| spec.period(k)).collect();
    let origin: Vec<f64> = (0..=spec.kmax).map(|k| src.xi_origin(k)).collect();
    let values = (0..horizon as u64)
        .into_par_iter()
        .map(|n| {
            let mut acc = 0.0;
            for k in (0..=spec.kmax).rev() {
                let r = n % periods[k];
                if r != 0 {
                    acc += weights[k] * (src.xi_residue(k, &[r]) - origin[k]);
                }
            }
            acc
        })
        .collect();
    Ok(SamplePath {
        spec: spec.clone(),
        values,
    })
}

/// `X_n` over the box `{0,…,side}^d`.
pub fn field<S: NoiseSource + ?Sized>(src: &S, side: u64) -> Result<SampleField> {
    field_capped(src, side, DEFAULT_ENUMERATION_CAP)
}

pub fn field_capped<S: NoiseSource + ?Sized>(src: &S, side: u64, cap: u64) -> Result<SampleField> {
    let spec = src.spec();
    let d = spec.dim;
    let len = box_len(d, side, cap)?;
    let weights = spec.weights();
    let origin: Vec<f64> = (0..=spec.kmax).map(|k| src.xi_origin(k)).collect();
    let values = (0..len as u64)
        .into_par_iter()
        .map_init(
            || (vec![0u64; d], vec![0u64; d]),
            |(n, r), flat| {
                unflatten(flat, side + 1, n);
                let mut acc = 0.0;
                for k in (0..=spec.kmax).rev() {
                    let m = spec.period(k);
                    for (ri, &ni) in r.iter_mut().zip(n.iter()) {
                        *ri = ni % m;
                    }
                    if r.iter().any(|&c| c != 0) {
                        acc += weights[k] * (src.xi_residue(k, r) - origin[k]);
                    }
                }
                acc
            },
        )
        .collect();
    Ok(SampleField {
        spec: spec.clone(),
        side,
        values,
    })
}

/// `(X_{r + p^K u} − X_r)_{u < U}` from levels `K..=Kmax` only; lower levels
/// cancel exactly.
pub fn sublattice_path<S: NoiseSource + ?Sized>(
    src: &S,
    base: u64,
    scale: usize,
    len: usize,
) -> Result<Vec<f64>> {
    let spec = src.spec();
    require_dim(spec, 1)?;
    spec.check_level(scale)?;
    let stride = spec.p.pow(scale as u32)?;
    (0..len as u64)
        .into_par_iter()
        .map(|u| {
            let target = u
                .checked_mul(stride)
                .and_then(|x| x.checked_add(base))
                .ok_or_else(|| Error::param("len", "sublattice index overflows u64"))?;
            Ok(tail_difference(src, base, target, scale))
        })
        .collect()
}

/// Single entry `X_{r + p^K u} − X_r` of [`sublattice_path`].
pub fn sublattice_value<S: NoiseSource + ?Sized>(src: &S, base: u64, scale: usize, u: u64) -> Result<f64> {
    let spec = src.spec();
    require_dim(spec, 1)?;
    spec.check_level(scale)?;
    let target = spec
        .p
        .pow(scale as u32)?
        .checked_mul(u)
        .and_then(|x| x.checked_add(base))
        .ok_or_else(|| Error::param("u", "sublattice index overflows u64"))?;
    Ok(tail_difference(src, base, target, scale))
}

/// `d`-dimensional sublattice map `m ↦ X_{r + p^K m} − X_r` over `{0,…,side}^d`.
pub fn sublattice_field<S: NoiseSource + ?Sized>(
    src: &S,
    base: &LatticePoint,
    scale: usize,
    side: u64,
) -> Result<Vec<f64>> {
    let spec = src.spec();
    require_dim(spec, base.dim())?;
    spec.check_level(scale)?;
    let stride = spec.p.pow(scale as u32)?;
    let d = spec.dim;
    let len = box_len(d, side, DEFAULT_ENUMERATION_CAP)?;
    let mut out = Vec::with_capacity(len);
    let mut m = vec![0u64; d];
    let mut ra = vec![0u64; d];
    let mut rb = vec![0u64; d];
    for flat in 0..len as u64 {
        unflatten(flat, side + 1, &mut m);
        let mut acc = 0.0;
        for k in (scale..=spec.kmax).rev() {
            let per = spec.period(k);
            for i in 0..d {
                let a = base.coords()[i];
                let b = m[i]
                    .checked_mul(stride)
                    .and_then(|x| x.checked_add(a))
                    .ok_or_else(|| Error::param("side", "sublattice index overflows u64"))?;
                ra[i] = a % per;
                rb[i] = b % per;
            }
            if ra != rb {
                acc += spec.weight(k) * (src.xi_residue(k, &rb) - src.xi_residue(k, &ra));
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// `2 E|ξ| p^{-(Kmax+1)H} / (1 − p^{-H})`, a bound on the expected absolute
/// truncation error at any fixed index.
pub fn truncation_tail_bound(spec: &TreeSpec) -> Result<f64> {
    let mean = spec.law.mean_abs()?;
    let ratio = (spec.p.prime() as f64).powf(-spec.hurst);
    Ok(2.0 * mean * ratio.powi(spec.kmax as i32 + 1) / (1.0 - ratio))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(kmax: usize) -> TreeSpec {
        TreeSpec::new(2, 0.5, kmax, IncrementLaw::Gaussian { sigma: 1.0 }, 11).unwrap()
    }

    #[test]
    fn level_sizes() {
        let levels = TreeLevels::build(&gaussian(3)).unwrap();
        assert_eq!(levels.level_sizes(), vec![2, 4, 8, 16]);
        let spec = gaussian(2).with_dim(2).unwrap();
        assert_eq!(TreeLevels::build(&spec).unwrap().level_sizes(), vec![4, 16, 64]);
    }

    #[test]
    fn deterministic_and_extension_stable() {
        let a = TreeLevels::build(&gaussian(3)).unwrap();
        let b = TreeLevels::build(&gaussian(3)).unwrap();
        assert_eq!(a, b);
        let c = TreeLevels::build(&gaussian(5)).unwrap();
        for k in 0..=3 {
            assert_eq!(a.level(k).unwrap(), c.level(k).unwrap());
        }
        assert_ne!(a.level(0).unwrap(), TreeLevels::build(&gaussian(3).with_seed(12)).unwrap().level(0).unwrap());
    }

    #[test]
    fn lazy_matches_dense() {
        let spec = gaussian(4).with_dim(2).unwrap();
        let dense = TreeLevels::build(&spec).unwrap();
        let lazy = LazyLevels::new(&spec).unwrap();
        for k in 0..=4 {
            let m = spec.period(k);
            for r0 in 0..m {
                for r1 in [0, m - 1] {
                    assert_eq!(dense.xi_residue(k, &[r0, r1]), lazy.xi_residue(k, &[r0, r1]));
                }
            }
            assert_eq!(dense.xi_origin(k), lazy.xi_origin(k));
        }
    }

    #[test]
    fn memory_cap_names_level() {
        match TreeLevels::build_capped(&gaussian(10), 100) {
            Err(Error::MemoryCap { level, .. }) => assert_eq!(level, 5),
            other => panic!("expected memory cap, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(TreeSpec::new(4, 0.5, 3, IncrementLaw::Rademacher, 0).is_err());
        assert!(TreeSpec::new(2, 0.0, 3, IncrementLaw::Rademacher, 0).is_err());
        assert!(TreeSpec::new(2, 0.5, 63, IncrementLaw::Rademacher, 0).is_err());
        assert!(TreeSpec::new(2, 0.5, 62, IncrementLaw::Rademacher, 0).is_ok());
        assert!(matches!(
            TreeSpec::new(2, 0.5, 3, IncrementLaw::SymmetricPareto { alpha: 0.75 }, 0),
            Err(Error::Law(_))
        ));
    }

    #[test]
    fn xi_at_examples() {
        let levels = TreeLevels::build(&gaussian(3)).unwrap();
        assert_eq!(xi_at(&levels, 1, &7.into()).unwrap(), levels.level(1).unwrap()[3]);
        assert_eq!(xi_at(&levels, 0, &0.into()).unwrap(), levels.level(0).unwrap()[0]);
        for k in 0..=3 {
            let m = 2u64.pow(k as u32 + 1);
            for n in 0..20 {
                assert_eq!(xi_at(&levels, k, &n.into()).unwrap(), xi_at(&levels, k, &(n + m).into()).unwrap());
            }
        }
        assert!(matches!(xi_at(&levels, 4, &0.into()), Err(Error::LevelOutOfRange { k: 4, kmax: 3 })));

        let spec2 = gaussian(2).with_dim(2).unwrap();
        let l2 = TreeLevels::build(&spec2).unwrap();
        let n = LatticePoint::new(vec![3, 5]).unwrap();
        let shifted = LatticePoint::new(vec![3, 5 + 8]).unwrap();
        assert_eq!(xi_at(&l2, 2, &n).unwrap(), xi_at(&l2, 2, &shifted).unwrap());
    }

    #[test]
    fn path_origin_and_rademacher_values() {
        let levels = TreeLevels::build(&gaussian(6)).unwrap();
        assert_eq!(path(&levels, 50).unwrap().values[0], 0.0);

        for seed in 0..20 {
            let spec = TreeSpec::new(2, 1.0, 0, IncrementLaw::Rademacher, seed).unwrap();
            let levels = TreeLevels::build(&spec).unwrap();
            let x1 = path(&levels, 2).unwrap().values[1];
            assert!([-2.0, 0.0, 2.0].contains(&x1));
            let lvl = levels.level(0).unwrap();
            assert_eq!(x1, lvl[1] - lvl[0]);
        }
    }

    #[test]
    fn field_agrees_with_path_in_one_dimension() {
        let levels = TreeLevels::build(&gaussian(6)).unwrap();
        let p = path(&levels, 40).unwrap();
        let f = field(&levels, 39).unwrap();
        assert_eq!(p.values, f.values);
        for n in [0u64, 1, 7, 33] {
            assert_eq!(value_at(&levels, n), p.values[n as usize]);
        }
    }

    #[test]
    fn field_vanishes_on_full_period_lattice() {
        let spec = gaussian(2).with_dim(2).unwrap();
        let levels = TreeLevels::build(&spec).unwrap();
        let f = field(&levels, 16).unwrap();
        assert_eq!(f.get(&[0, 0]), Some(0.0));
        for a in [0u64, 8, 16] {
            for b in [0u64, 8, 16] {
                assert_eq!(f.get(&[a, b]), Some(0.0));
            }
        }
        assert_ne!(f.get(&[8, 4]), Some(0.0));
    }

    #[test]
    fn sublattice_examples() {
        let levels = TreeLevels::build(&gaussian(8)).unwrap();
        let x = path(&levels, 64).unwrap();
        assert_eq!(sublattice_path(&levels, 0, 0, 64).unwrap(), x.values);
        for (r, k) in [(3u64, 2usize), (5, 0), (0, 8)] {
            let s = sublattice_path(&levels, r, k, 10).unwrap();
            assert_eq!(s[0], 0.0);
            let long = path(&levels, (r + 2u64.pow(k as u32) * 10) as usize).unwrap();
            for (u, v) in s.iter().enumerate() {
                let direct = long.values[(r + 2u64.pow(k as u32) * u as u64) as usize] - long.values[r as usize];
                assert!((direct - v).abs() <= 1e-9);
            }
        }
        assert!(sublattice_path(&levels, 0, 9, 4).is_err());
    }

    #[test]
    fn sublattice_field_matches_direct_differences() {
        let spec = gaussian(3).with_dim(2).unwrap();
        let levels = TreeLevels::build(&spec).unwrap();
        let f = field(&levels, 20).unwrap();
        let base = LatticePoint::new(vec![1, 3]).unwrap();
        let s = sublattice_field(&levels, &base, 2, 4).unwrap();
        let mut i = 0;
        for a in 0..=4u64 {
            for b in 0..=4u64 {
                let direct = f.get(&[1 + 4 * a, 3 + 4 * b]).unwrap() - f.get(&[1, 3]).unwrap();
                assert!((direct - s[i]).abs() <= 1e-9);
                i += 1;
            }
        }
    }

    #[test]
    fn tail_bound_examples() {
        let spec = TreeSpec::new(2, 1.0, 3, IncrementLaw::Rademacher, 0).unwrap();
        assert!((truncation_tail_bound(&spec).unwrap() - 0.25).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for kmax in 0..30 {
            let s = TreeSpec { kmax, ..spec.clone() };
            let b = truncation_tail_bound(&s).unwrap();
            assert!(b < prev);
            if kmax > 0 {
                assert!((b - prev / 2.0).abs() <= 1e-15 * prev);
            }
            prev = b;
        }
    }
}
