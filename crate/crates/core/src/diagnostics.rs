//! Finite-horizon almost-periodicity and p-adic continuity diagnostics.
//!
//! All functions are deterministic functions of the input slice. Suprema over
//! the infinite index set are replaced by maxima over the indices available in
//! the horizon, and every report records the horizon it was computed on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{box_len, PadicContext, DEFAULT_ENUMERATION_CAP};
use crate::tree::SampleField;

fn check_tau(len: usize, tau: usize) -> Result<()> {
    if tau == 0 {
        return Err(Error::param("tau", "must be positive"));
    }
    if tau >= len {
        return Err(Error::param("tau", format!("{tau} must be below the horizon {len}")));
    }
    Ok(())
}

fn check_epsilon(name: &'static str, eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive, got {eps}")))
    }
}

/// `u(n) = f(n + τ) − f(n)` for `n = 0..N−1−τ`.
pub fn translate_diff(f: &[f64], tau: usize) -> Result<Vec<f64>> {
    check_tau(f.len(), tau)?;
    Ok(f.iter().zip(&f[tau..]).map(|(a, b)| b - a).collect())
}

/// `max_n |f(n + τ) − f(n)|` over the horizon.
pub fn sup_translate_distance(f: &[f64], tau: usize) -> Result<f64> {
    check_tau(f.len(), tau)?;
    Ok(sup_distance_unchecked(f, tau))
}

fn sup_distance_unchecked(f: &[f64], tau: usize) -> f64 {
    f.iter()
        .zip(&f[tau..])
        .fold(0.0, |m, (a, b)| f64::max(m, (b - a).abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationReport {
    pub epsilon: f64,
    pub tau_max: usize,
    pub horizon: usize,
    /// Accepted `τ`, increasing.
    pub taus: Vec<usize>,
    /// Largest difference between consecutive elements of
    /// `{0} ∪ taus ∪ {tau_max + 1}`.
    pub max_gap: usize,
}

/// Bohr `ε`-translation numbers `τ ≤ tau_max` (strict inequality).
pub fn bohr_translation_set(f: &[f64], epsilon: f64, tau_max: usize) -> Result<TranslationReport> {
    check_epsilon("epsilon", epsilon)?;
    check_tau(f.len(), tau_max)?;
    let taus: Vec<usize> = (1..=tau_max)
        .filter(|&tau| f.iter().zip(&f[tau..]).all(|(a, b)| (b - a).abs() < epsilon))
        .collect();
    let max_gap = max_gap(&taus, tau_max);
    Ok(TranslationReport {
        epsilon,
        tau_max,
        horizon: f.len(),
        taus,
        max_gap,
    })
}

fn max_gap(taus: &[usize], tau_max: usize) -> usize {
    let mut prev = 0;
    let mut gap = 0;
    for &t in taus.iter().chain(std::iter::once(&(tau_max + 1))) {
        gap = gap.max(t - prev);
        prev = t;
    }
    gap
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeminormKind {
    Weyl,
    Besicovitch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormProfile {
    pub kind: SeminormKind,
    pub q: f64,
    pub horizon: usize,
    pub l_grid: Vec<usize>,
    pub values: Vec<f64>,
    /// Value at the largest window length.
    pub headline: f64,
}

fn check_grid(grid: &[usize], len: usize) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param("l_grid", "must not be empty"));
    }
    if grid[0] == 0 {
        return Err(Error::param("l_grid", "window lengths must be positive"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("l_grid", "must be strictly increasing"));
    }
    if *grid.last().unwrap() > len {
        return Err(Error::param(
            "l_grid",
            format!("largest window {} exceeds length {len}", grid.last().unwrap()),
        ));
    }
    Ok(())
}

fn power_prefix(u: &[f64], q: f64) -> Result<Vec<f64>> {
    if !(q.is_finite() && q >= 1.0) {
        return Err(Error::param("q", format!("must be >= 1, got {q}")));
    }
    let mut prefix = Vec::with_capacity(u.len() + 1);
    let mut acc = 0.0;
    prefix.push(acc);
    for &x in u {
        acc += if q == 1.0 { x.abs() } else { x.abs().powf(q) };
        prefix.push(acc);
    }
    Ok(prefix)
}

fn window_mean(prefix: &[f64], start: usize, len: usize, q: f64) -> f64 {
    // rounding can push a difference of prefix sums slightly below zero
    let mean = ((prefix[start + len] - prefix[start]) / len as f64).max(0.0);
    if q == 1.0 {
        mean
    } else {
        mean.powf(1.0 / q)
    }
}

fn profile(
    kind: SeminormKind,
    u: &[f64],
    q: f64,
    grid: &[usize],
    eval: impl Fn(&[f64], usize) -> f64,
) -> Result<SeminormProfile> {
    check_grid(grid, u.len())?;
    let prefix = power_prefix(u, q)?;
    let values: Vec<f64> = grid.iter().map(|&l| eval(&prefix, l)).collect();
    Ok(SeminormProfile {
        kind,
        q,
        horizon: u.len(),
        l_grid: grid.to_vec(),
        headline: *values.last().unwrap(),
        values,
    })
}

/// Worst windowed `q`-mean of `|u|` for each window length.
pub fn weyl_profile(u: &[f64], q: f64, grid: &[usize]) -> Result<SeminormProfile> {
    profile(SeminormKind::Weyl, u, q, grid, |prefix, l| {
        (0..=u.len() - l).fold(0.0, |m, s| f64::max(m, window_mean(prefix, s, l, q)))
    })
}

/// Prefix `q`-mean of `|u|` for each window length.
pub fn besicovitch_profile(u: &[f64], q: f64, grid: &[usize]) -> Result<SeminormProfile> {
    profile(SeminormKind::Besicovitch, u, q, grid, |prefix, l| window_mean(prefix, 0, l, q))
}

/// Dyadic grid `1, 2, 4, …` up to and including `max`.
pub fn dyadic_grid(max: usize) -> Vec<usize> {
    std::iter::successors(Some(1usize), |&l| l.checked_mul(2))
        .take_while(|&l| l <= max)
        .collect()
}

/// `ω̂(K)`: largest `|f(n + p^K u) − f(n)|` inside the horizon, computed as the
/// largest range of `f` over a residue class modulo `p^K`.
pub fn padic_modulus(f: &[f64], ctx: &PadicContext, k: u32) -> Result<f64> {
    let m = ctx.pow(k)?;
    if m >= f.len() as u64 {
        return Err(Error::param("K", format!("p^K = {m} must be below the horizon {}", f.len())));
    }
    let m = m as usize;
    let mut lo = f[..m].to_vec();
    let mut hi = lo.clone();
    for (n, &x) in f.iter().enumerate().skip(m) {
        let c = n % m;
        lo[c] = lo[c].min(x);
        hi[c] = hi[c].max(x);
    }
    Ok(lo.iter().zip(&hi).fold(0.0, |w, (a, b)| f64::max(w, b - a)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusCurve {
    pub p: u64,
    pub horizon: usize,
    pub ks: Vec<u32>,
    pub values: Vec<f64>,
}

/// `ω̂(K)` for every `K` with `p^K` below the horizon.
pub fn modulus_curve(f: &[f64], ctx: &PadicContext) -> ModulusCurve {
    let mut ks = Vec::new();
    let mut values = Vec::new();
    for k in 0.. {
        match padic_modulus(f, ctx, k) {
            Ok(w) => {
                ks.push(k);
                values.push(w);
            }
            Err(_) => break,
        }
    }
    ModulusCurve {
        p: ctx.prime(),
        horizon: f.len(),
        ks,
        values,
    }
}

/// Borrowed view of values on the box `{0,…,side}^d` in lexicographic order.
#[derive(Debug, Clone, Copy)]
pub struct GridView<'a> {
    pub dim: usize,
    pub side: u64,
    pub values: &'a [f64],
}

impl<'a> GridView<'a> {
    pub fn new(dim: usize, side: u64, values: &'a [f64]) -> Result<Self> {
        let len = box_len(dim, side, u64::MAX)?;
        if dim == 0 || values.len() != len {
            return Err(Error::param("values", format!("expected {len} values for d = {dim}, side = {side}")));
        }
        Ok(GridView { dim, side, values })
    }

    fn points(&self) -> impl Iterator<Item = Vec<u64>> + '_ {
        self.points_of(self.values.len())
    }

    fn index(&self, n: &[u64]) -> usize {
        n.iter().fold(0u64, |acc, &c| acc * (self.side + 1) + c) as usize
    }
}

impl SampleField {
    pub fn view(&self) -> GridView<'_> {
        GridView {
            dim: self.dim(),
            side: self.side,
            values: &self.values,
        }
    }
}

/// Field analogue of [`padic_modulus`]: ranges over classes of the box under
/// componentwise reduction modulo `p^K`.
pub fn padic_modulus_field(f: GridView<'_>, ctx: &PadicContext, k: u32) -> Result<f64> {
    let m = ctx.pow(k)?;
    if m > f.side {
        return Err(Error::param("K", format!("p^K = {m} exceeds the box side {}", f.side)));
    }
    let classes = box_len(f.dim, m - 1, DEFAULT_ENUMERATION_CAP)?;
    let mut lo = vec![f64::INFINITY; classes];
    let mut hi = vec![f64::NEG_INFINITY; classes];
    for (n, &x) in f.points().zip(f.values) {
        let c = n.iter().fold(0u64, |acc, &ci| acc * m + ci % m) as usize;
        lo[c] = lo[c].min(x);
        hi[c] = hi[c].max(x);
    }
    Ok(lo.iter().zip(&hi).fold(0.0, |w, (a, b)| f64::max(w, b - a)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldTranslationReport {
    pub epsilon: f64,
    /// Tested vectors are `{0,…,reach}^d`; the zero vector is always accepted.
    pub reach: u64,
    pub side: u64,
    pub accepted: Vec<Vec<u64>>,
    /// Side of the largest box inside the tested region with no accepted vector.
    pub worst_empty_side: Option<u64>,
    /// Smallest `L` such that every box `a + {0,…,L}^d` in the tested region
    /// contains an accepted vector. Equals `max_gap − 1` in one dimension.
    pub density_side: u64,
}

/// Translation vectors `h ∈ {0,…,reach}^d` with `max |f(n+h) − f(n)| < ε` over
/// pairs inside the box, plus the relative-density statistic of the set.
pub fn translation_vectors_field(f: GridView<'_>, epsilon: f64, reach: u64) -> Result<FieldTranslationReport> {
    check_epsilon("epsilon", epsilon)?;
    if reach > f.side {
        return Err(Error::param("reach", format!("{reach} exceeds the box side {}", f.side)));
    }
    let region = GridView {
        dim: f.dim,
        side: reach,
        values: &[],
    };
    let region_len = box_len(f.dim, reach, DEFAULT_ENUMERATION_CAP)?;
    let pairs = (region_len as u128) * (f.values.len() as u128);
    if pairs > 1u128 << 34 {
        return Err(Error::EnumerationCap {
            requested: pairs,
            cap: 1 << 34,
        });
    }

    let mut accepted_mask = vec![false; region_len];
    let mut accepted = Vec::new();
    let mut shifted = vec![0u64; f.dim];
    for (idx, h) in region.points_of(region_len).enumerate() {
        let mut sup: f64 = 0.0;
        for (n, &x) in f.points().zip(f.values) {
            let mut inside = true;
            for i in 0..f.dim {
                shifted[i] = n[i] + h[i];
                inside &= shifted[i] <= f.side;
            }
            if inside {
                sup = sup.max((f.values[f.index(&shifted)] - x).abs());
                if sup >= epsilon {
                    break;
                }
            }
        }
        if sup < epsilon {
            accepted_mask[idx] = true;
            accepted.push(h);
        }
    }

    // largest empty cube ending at each point
    let w = reach + 1;
    let mut run = vec![0u64; region_len];
    let mut best = 0u64;
    let subsets = (1u32 << f.dim) - 1;
    for (idx, x) in (0..region_len).zip(region.points_of(region_len)) {
        if accepted_mask[idx] {
            continue;
        }
        let mut shortest = u64::MAX;
        for s in 1..=subsets {
            let mut flat = 0u64;
            let mut outside = false;
            for (i, &c) in x.iter().enumerate() {
                let step = (s >> (f.dim - 1 - i)) & 1;
                if c < step as u64 {
                    outside = true;
                    break;
                }
                flat = flat * w + c - step as u64;
            }
            let prev = if outside { 0 } else { run[flat as usize] };
            shortest = shortest.min(prev);
        }
        run[idx] = shortest + 1;
        best = best.max(run[idx]);
    }
    Ok(FieldTranslationReport {
        epsilon,
        reach,
        side: f.side,
        accepted,
        worst_empty_side: best.checked_sub(1),
        density_side: best,
    })
}

impl GridView<'_> {
    fn points_of(&self, len: usize) -> impl Iterator<Item = Vec<u64>> + '_ {
        let w = self.side + 1;
        (0..len as u64).map(move |mut flat| {
            let mut n = vec![0u64; self.dim];
            for c in n.iter_mut().rev() {
                *c = flat % w;
                flat /= w;
            }
            n
        })
    }
}

/// `g(n) = f(n mod p^K)` and `max_n |f(n) − g(n)|`. When `p^K ≥ N` the
/// approximation is `f` itself.
pub fn limit_periodic_approx(f: &[f64], ctx: &PadicContext, k: u32) -> Result<(Vec<f64>, f64)> {
    let m = ctx.pow(k)?.min(f.len().max(1) as u64) as usize;
    let g: Vec<f64> = (0..f.len()).map(|n| f[n % m]).collect();
    let err = f.iter().zip(&g).fold(0.0, |e, (a, b)| f64::max(e, (a - b).abs()));
    Ok((g, err))
}

/// Smallest `L` in the grid such that every sampled `h` has a representative
/// `r ≤ L` whose recentred translate is within `η` of the one at `h`.
/// `None` when no grid value suffices.
pub fn finite_reduction_radius(f: &[f64], eta: f64, grid: &[usize], h_samples: &[usize]) -> Result<Option<usize>> {
    check_epsilon("eta", eta)?;
    if grid.is_empty() {
        return Err(Error::param("l_grid", "must not be empty"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("l_grid", "must be strictly increasing"));
    }
    let n = f.len();
    if let Some(&h) = h_samples.iter().find(|&&h| h >= n) {
        return Err(Error::param("h_samples", format!("{h} lies outside the horizon {n}")));
    }
    let limit = (*grid.last().unwrap()).min(n - 1);
    let close = |h: usize, r: usize| {
        let span = n - h.max(r);
        (0..span).all(|m| ((f[m + h] - f[h]) - (f[m + r] - f[r])).abs() < eta)
    };
    let mut needed = 0;
    for &h in h_samples {
        match (0..=limit).find(|&r| close(h, r)) {
            Some(r) => needed = needed.max(r),
            None => return Ok(None),
        }
    }
    Ok(grid.iter().copied().find(|&l| l >= needed))
}

pub fn sup_norm(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
}

/// `(N', max_{n < N'} |f(n)|)` for `N' = 1, 2, 4, …` up to the horizon.
pub fn running_max(f: &[f64]) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    let mut best: f64 = 0.0;
    let mut next = 1;
    for (i, x) in f.iter().enumerate() {
        best = best.max(x.abs());
        if i + 1 == next {
            out.push((next, best));
            next *= 2;
        }
    }
    out
}
