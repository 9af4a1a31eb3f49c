//! Monte Carlo checks of the distributional identities of the tree process and
//! the level averages that bound its Weyl seminorm.
//!
//! Every two-sample comparison draws its two sides from disjoint replicate
//! seed sets derived from `spec.seed`.

use std::collections::BTreeMap;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::increments::{IncrementLaw, StreamKey};
use crate::padic::LatticePoint;
use crate::tree::{self, LazyLevels, NoiseSource, TreeSpec};

/// Large-sample two-sided Kolmogorov–Smirnov coefficient at the 1% level.
pub const KS_COEFFICIENT_1PCT: f64 = 1.628;

/// Two-sample Kolmogorov–Smirnov statistic `sup_t |F_xs(t) − F_ys(t)|`.
pub fn ks_statistic(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::EmptySample);
    }
    if xs.iter().chain(ys).any(|x| x.is_nan()) {
        return Err(Error::param("sample", "contains NaN"));
    }
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (m, n) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        // step past every copy of the smallest remaining value in both samples
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / m - j as f64 / n).abs());
    }
    Ok(d)
}

/// `1.628 · sqrt((m + n) / (m n))`.
pub fn ks_threshold(m: usize, n: usize) -> f64 {
    KS_COEFFICIENT_1PCT * ((m + n) as f64 / (m as f64 * n as f64)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityTestReport {
    pub identity: String,
    pub params: BTreeMap<String, f64>,
    pub m: usize,
    pub n: usize,
    pub statistic: f64,
    pub threshold: f64,
    pub passed: bool,
    pub spec: TreeSpec,
    pub seeds: usize,
}

impl IdentityTestReport {
    fn new(identity: &str, params: &[(&str, f64)], spec: &TreeSpec, xs: &[f64], ys: &[f64]) -> Result<Self> {
        let statistic = ks_statistic(xs, ys)?;
        let threshold = ks_threshold(xs.len(), ys.len());
        Ok(IdentityTestReport {
            identity: identity.to_string(),
            params: params.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            m: xs.len(),
            n: ys.len(),
            statistic,
            threshold,
            passed: statistic < threshold,
            spec: spec.clone(),
            seeds: xs.len(),
        })
    }
}

/// How the scaled side of an identity handles truncation at `Kmax`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Truncation {
    /// Drop the top levels of the scaled side so both sides carry the same
    /// number of levels; the compared laws are then equal exactly.
    #[default]
    Matched,
    /// Keep all `Kmax + 1` levels on both sides.
    Unmatched,
}

const LEFT: u64 = 0x4c;
const RIGHT: u64 = 0x52;

/// Seed of replicate `i` on side `side` of an experiment rooted at `master`.
pub fn replicate_seed(master: u64, side: u64, i: u64) -> u64 {
    StreamKey::path(master, &[side, i]).stream().next_u64()
}

fn replicate<F>(spec: &TreeSpec, side: u64, seeds: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(&LazyLevels) -> Result<f64> + Sync,
{
    if seeds == 0 {
        return Err(Error::param("seeds", "must be positive"));
    }
    spec.validate()?;
    (0..seeds as u64)
        .into_par_iter()
        .map(|i| {
            let levels = LazyLevels::new(&spec.with_seed(replicate_seed(spec.seed, side, i)))?;
            f(&levels)
        })
        .collect()
}

fn require_1d(spec: &TreeSpec) -> Result<()> {
    if spec.dim != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: spec.dim,
        });
    }
    Ok(())
}

fn truncated(spec: &TreeSpec, drop: usize, mode: Truncation) -> Result<TreeSpec> {
    if drop > spec.kmax {
        return Err(Error::param("Kmax", format!("needs at least {drop} levels, has {}", spec.kmax)));
    }
    Ok(match mode {
        Truncation::Matched => TreeSpec {
            kmax: spec.kmax - drop,
            ..spec.clone()
        },
        Truncation::Unmatched => spec.clone(),
    })
}

/// `X_{an}` against `|a|_p^H X_n`.
pub fn scaling_identity_test(spec: &TreeSpec, a: u64, n: u64, seeds: usize, mode: Truncation) -> Result<IdentityTestReport> {
    require_1d(spec)?;
    if a == 0 {
        return Err(Error::param("a", "must be positive"));
    }
    let an = a.checked_mul(n).ok_or_else(|| Error::param("n", "a·n overflows"))?;
    let va = spec.p.valuation(a)? as usize;
    let right_spec = truncated(spec, va, mode)?;
    let factor = spec.p.norm_pow(a, spec.hurst);
    let xs = replicate(spec, LEFT, seeds, |lv| Ok(tree::value_at(lv, an)))?;
    let ys = replicate(&right_spec, RIGHT, seeds, |lv| Ok(factor * tree::value_at(lv, n)))?;
    IdentityTestReport::new("scaling", &[("a", a as f64), ("n", n as f64)], spec, &xs, &ys)
}

/// `X_{n+ℓ} − X_ℓ` against `X_n`.
pub fn increment_stationarity_test(spec: &TreeSpec, shift: u64, n: u64, seeds: usize) -> Result<IdentityTestReport> {
    require_1d(spec)?;
    n.checked_add(shift).ok_or_else(|| Error::param("shift", "n + shift overflows"))?;
    let xs = replicate(spec, LEFT, seeds, |lv| tree::sublattice_value(lv, shift, 0, n))?;
    let ys = replicate(spec, RIGHT, seeds, |lv| Ok(tree::value_at(lv, n)))?;
    IdentityTestReport::new("stationarity", &[("shift", shift as f64), ("n", n as f64)], spec, &xs, &ys)
}

/// `X_{r + p^K u} − X_r` against `p^{-KH} X_u`.
pub fn sublattice_law_test(
    spec: &TreeSpec,
    base: u64,
    scale: usize,
    u: u64,
    seeds: usize,
    mode: Truncation,
) -> Result<IdentityTestReport> {
    require_1d(spec)?;
    let right_spec = truncated(spec, scale, mode)?;
    let factor = spec.weight(scale);
    let xs = replicate(spec, LEFT, seeds, |lv| tree::sublattice_value(lv, base, scale, u))?;
    let ys = replicate(&right_spec, RIGHT, seeds, |lv| Ok(factor * tree::value_at(lv, u)))?;
    IdentityTestReport::new(
        "sublattice",
        &[("r", base as f64), ("K", scale as f64), ("u", u as f64)],
        spec,
        &xs,
        &ys,
    )
}

/// Joint-law probe: `Σ c_i (X_{n_i+ℓ} − X_ℓ)` against `Σ c_i X_{n_i}`.
pub fn increment_projection_test(spec: &TreeSpec, shift: u64, probe: &[(u64, f64)], seeds: usize) -> Result<IdentityTestReport> {
    require_1d(spec)?;
    if probe.is_empty() {
        return Err(Error::param("probe", "must not be empty"));
    }
    let xs = replicate(spec, LEFT, seeds, |lv| {
        probe
            .iter()
            .map(|&(n, c)| tree::sublattice_value(lv, shift, 0, n).map(|x| c * x))
            .sum()
    })?;
    let ys = replicate(spec, RIGHT, seeds, |lv| Ok(probe.iter().map(|&(n, c)| c * tree::value_at(lv, n)).sum()))?;
    let mut params = vec![("shift", shift as f64)];
    params.push(("probe_len", probe.len() as f64));
    IdentityTestReport::new("projection", &params, spec, &xs, &ys)
}

/// Field version of [`scaling_identity_test`]: `X_{an}` against `|a|_p^H X_n`.
pub fn field_scaling_test(
    spec: &TreeSpec,
    a: u64,
    n: &LatticePoint,
    seeds: usize,
    mode: Truncation,
) -> Result<IdentityTestReport> {
    if a == 0 {
        return Err(Error::param("a", "must be positive"));
    }
    let origin = vec![0u64; spec.dim];
    let an = n
        .coords()
        .iter()
        .map(|&c| c.checked_mul(a).ok_or_else(|| Error::param("n", "a·n overflows")))
        .collect::<Result<Vec<_>>>()?;
    let right_spec = truncated(spec, spec.p.valuation(a)? as usize, mode)?;
    let factor = spec.p.norm_pow(a, spec.hurst);
    let xs = replicate(spec, LEFT, seeds, |lv| tree::field_increment(lv, &origin, &an))?;
    let ys = replicate(&right_spec, RIGHT, seeds, |lv| {
        tree::field_increment(lv, &origin, n.coords()).map(|x| factor * x)
    })?;
    let mut params = vec![("a", a as f64)];
    let names = ["n0", "n1", "n2", "n3"];
    for (i, &c) in n.coords().iter().enumerate().take(names.len()) {
        params.push((names[i], c as f64));
    }
    IdentityTestReport::new("field-scaling", &params, spec, &xs, &ys)
}

/// Field version of [`increment_stationarity_test`]: `X_{n+ℓ} − X_ℓ` against `X_n`.
pub fn field_stationarity_test(spec: &TreeSpec, shift: &LatticePoint, n: &LatticePoint, seeds: usize) -> Result<IdentityTestReport> {
    let origin = vec![0u64; spec.dim];
    let moved = n
        .coords()
        .iter()
        .zip(shift.coords())
        .map(|(&c, &s)| c.checked_add(s).ok_or_else(|| Error::param("shift", "n + shift overflows")))
        .collect::<Result<Vec<_>>>()?;
    let xs = replicate(spec, LEFT, seeds, |lv| tree::field_increment(lv, shift.coords(), &moved))?;
    let ys = replicate(spec, RIGHT, seeds, |lv| tree::field_increment(lv, &origin, n.coords()))?;
    let mut params = Vec::new();
    let names = [("l0", "n0"), ("l1", "n1"), ("l2", "n2"), ("l3", "n3")];
    for (i, (&l, &c)) in shift.coords().iter().zip(n.coords()).enumerate().take(names.len()) {
        params.push((names[i].0, l as f64));
        params.push((names[i].1, c as f64));
    }
    IdentityTestReport::new("field-stationarity", &params, spec, &xs, &ys)
}

fn check_avg_args<S: NoiseSource + ?Sized>(src: &S, k: usize, q: f64) -> Result<()> {
    let spec = src.spec();
    require_1d(spec)?;
    if k > spec.kmax {
        return Err(Error::LevelOutOfRange { k, kmax: spec.kmax });
    }
    if !(q.is_finite() && q >= 1.0) {
        return Err(Error::param("q", format!("must be >= 1, got {q}")));
    }
    Ok(())
}

fn q_mean(sum: f64, count: u64, q: f64) -> f64 {
    (sum / count as f64).powf(1.0 / q)
}

/// `A_{k,q}(τ)`: `q`-mean over one period of `|ξ_{k,r+τ} − ξ_{k,r}|`.
pub fn period_average_a<S: NoiseSource + ?Sized>(src: &S, k: usize, q: f64, tau: u64) -> Result<f64> {
    check_avg_args(src, k, q)?;
    let m = src.spec().period(k);
    let shift = tau % m;
    let sum: f64 = (0..m)
        .map(|r| (src.xi_residue(k, &[(r + shift) % m]) - src.xi_residue(k, &[r])).abs().powf(q))
        .sum();
    Ok(q_mean(sum, m, q))
}

/// `B_{k,q}`: `q`-mean of `|ξ_{k,r}|` over one period.
pub fn level_average_b<S: NoiseSource + ?Sized>(src: &S, k: usize, q: f64) -> Result<f64> {
    check_avg_args(src, k, q)?;
    let m = src.spec().period(k);
    let sum: f64 = (0..m).map(|r| src.xi_residue(k, &[r]).abs().powf(q)).sum();
    Ok(q_mean(sum, m, q))
}

/// `2 Σ_{k=K}^{Kmax} p^{-kH} B_{k,q}`.
pub fn weyl_tail_bound<S: NoiseSource + ?Sized>(src: &S, from_level: usize, q: f64) -> Result<f64> {
    check_avg_args(src, from_level, q)?;
    let spec = src.spec();
    let mut acc = 0.0;
    for k in (from_level..=spec.kmax).rev() {
        acc += spec.weight(k) * level_average_b(src, k, q)?;
    }
    Ok(2.0 * acc)
}

/// `Σ_{k=K}^{Kmax} p^{-kH} A_{k,q}(τ)`.
pub fn weighted_period_average<S: NoiseSource + ?Sized>(src: &S, from_level: usize, q: f64, tau: u64) -> Result<f64> {
    check_avg_args(src, from_level, q)?;
    let spec = src.spec();
    let mut acc = 0.0;
    for k in (from_level..=spec.kmax).rev() {
        acc += spec.weight(k) * period_average_a(src, k, q, tau)?;
    }
    Ok(acc)
}

/// Exact variance of the truncated `X_n` under Gaussian noise:
/// `2σ² Σ_{k=j}^{Kmax} p^{-2kH}` with `j = min(v_p(n), Kmax + 1)`.
pub fn gaussian_variance_oracle(spec: &TreeSpec, n: u64) -> Result<f64> {
    let IncrementLaw::Gaussian { sigma } = spec.law else {
        return Err(Error::param("law", "variance oracle needs the gaussian law"));
    };
    if n == 0 {
        return Ok(0.0);
    }
    let j = (spec.p.valuation(n)? as usize).min(spec.kmax + 1);
    let sum: f64 = (j..=spec.kmax).rev().map(|k| spec.weight(k).powi(2)).sum();
    Ok(2.0 * sigma * sigma * sum)
}

/// `X_n` for `n` in `indices`, over `seeds` independent replicates.
pub fn sample_values(spec: &TreeSpec, indices: &[u64], seeds: usize) -> Result<Vec<Vec<f64>>> {
    require_1d(spec)?;
    let rows = (0..seeds as u64)
        .into_par_iter()
        .map(|i| {
            let levels = LazyLevels::new(&spec.with_seed(replicate_seed(spec.seed, LEFT, i)))?;
            Ok(indices.iter().map(|&n| tree::value_at(&levels, n)).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..indices.len()).map(|j| rows.iter().map(|r| r[j]).collect()).collect())
}
