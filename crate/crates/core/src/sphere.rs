//! Gram matrices of independent uniform unit vectors.
//!
//! For `v_1..v_k` uniform on the unit sphere of ℝⁿ, the Gram matrix has
//! density `det(M)^{(n−k−1)/2} Γ(n/2)^k / Γ_k(n/2)` on the elliptope (unit
//! diagonal PSD matrices) with respect to Lebesgue measure on the
//! off-diagonal entries. This module evaluates that density and its
//! relatives in the log domain, samples Gram matrices reproducibly,
//! estimates probabilities of edge-interval events and their exponential
//! rates, and computes exact homomorphism densities by enumeration.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::graphs::Graph;
use crate::linalg::{Cholesky, SymMatrix};
use crate::maxdet;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SphereError {
    #[error("need n >= k >= 1, got k = {k}, n = {n}")]
    Dimension { k: usize, n: usize },
    #[error("matrix has size {got}, expected {want}")]
    Size { got: usize, want: usize },
    #[error("invalid interval [{0}, {1}]")]
    Interval(f64, f64),
    #[error("weighted graph: {0}")]
    Weights(String),
}

/// Samples per work unit in the parallel Monte Carlo loops.
const CHUNK: u64 = 4096;

/// `ln Γ_k(a) = k(k−1)/4 ln π + Σ_{j=1..k} ln Γ(a + (1−j)/2)`.
pub fn ln_multivariate_gamma(k: usize, a: f64) -> f64 {
    let kf = k as f64;
    kf * (kf - 1.0) / 4.0 * PI.ln() + (1..=k).map(|j| ln_gamma(a + (1.0 - j as f64) / 2.0)).sum::<f64>()
}

/// `ln(Γ(n/2)^k / Γ_k(n/2))`, the log normalizing constant of the Gram density.
pub fn ln_normalizer(k: usize, n: usize) -> f64 {
    let half = n as f64 / 2.0;
    k as f64 * ln_gamma(half) - ln_multivariate_gamma(k, half)
}

/// `ln c_r` with `c_r = π^{−1/2} Γ(r/2) / Γ((r−1)/2)`.
pub fn ln_c_factor(r: usize) -> f64 {
    let r = r as f64;
    -0.5 * PI.ln() + ln_gamma(r / 2.0) - ln_gamma((r - 1.0) / 2.0)
}

/// The normalizer rebuilt as `c_n^{k−1} c_{n−1}^{k−2} ⋯ c_{n−k+2}`.
pub fn ln_normalizer_factorized(k: usize, n: usize) -> f64 {
    (0..k.saturating_sub(1))
        .map(|j| (k - 1 - j) as f64 * ln_c_factor(n - j))
        .sum()
}

/// `Γ(n/2)^k Γ_k(n/2)⁻¹ / (n/(2π))^{k(k−1)/4}`; tends to 1 as n grows.
pub fn asym_ratio(k: usize, n: usize) -> f64 {
    if k <= 1 {
        return 1.0;
    }
    let kf = k as f64;
    (ln_normalizer(k, n) - kf * (kf - 1.0) / 4.0 * (n as f64 / (2.0 * PI)).ln()).exp()
}

/// Log volume of the k×k elliptope in off-diagonal coordinates,
/// `ln(Γ((k+1)/2)^{−k} Γ_k((k+1)/2))`.
pub fn elliptope_log_volume(k: usize) -> f64 {
    let a = (k as f64 + 1.0) / 2.0;
    ln_multivariate_gamma(k, a) - k as f64 * ln_gamma(a)
}

/// Membership in the elliptope: symmetric by construction, unit diagonal
/// within `tol`, and `M + tol·I` positive definite.
pub fn in_elliptope(m: &SymMatrix, tol: f64) -> bool {
    if (0..m.dim()).any(|i| (m.get(i, i) - 1.0).abs() > tol) {
        return false;
    }
    let mut shifted = m.clone();
    for i in 0..m.dim() {
        shifted.set(i, i, m.get(i, i) + tol);
    }
    Cholesky::new(&shifted, 0.0).is_ok()
}

fn check_dims(k: usize, n: usize, m: Option<&SymMatrix>) -> Result<(), SphereError> {
    if k < 1 || n < k {
        return Err(SphereError::Dimension { k, n });
    }
    if let Some(m) = m {
        if m.dim() != k {
            return Err(SphereError::Size { got: m.dim(), want: k });
        }
    }
    Ok(())
}

/// Log of the Gram density at `m`; `−∞` off the elliptope.
///
/// With `n = k + 1` the density is constant on the whole (closed)
/// elliptope, including singular boundary points.
pub fn ln_density_f(k: usize, n: usize, m: &SymMatrix) -> Result<f64, SphereError> {
    check_dims(k, n, Some(m))?;
    if k < 2 {
        return Err(SphereError::Dimension { k, n });
    }
    if !in_elliptope(m, 1e-12) {
        return Ok(f64::NEG_INFINITY);
    }
    let c = ln_normalizer(k, n);
    let power = (n as f64 - k as f64 - 1.0) / 2.0;
    if power == 0.0 {
        return Ok(c);
    }
    match m.cholesky() {
        Ok(ch) => Ok(power * ch.logdet() + c),
        // on the boundary, det = 0
        Err(_) => Ok(if power > 0.0 { f64::NEG_INFINITY } else { f64::INFINITY }),
    }
}

pub fn density_f(k: usize, n: usize, m: &SymMatrix) -> Result<f64, SphereError> {
    Ok(ln_density_f(k, n, m)?.exp())
}

/// Log density of the Wishart(n, I_k) law at a positive definite `m`;
/// `−∞` if `m` is not positive definite.
pub fn wishart_identity_log_density(k: usize, n: usize, m: &SymMatrix) -> Result<f64, SphereError> {
    check_dims(k, n, Some(m))?;
    let Ok(ch) = m.cholesky() else {
        return Ok(f64::NEG_INFINITY);
    };
    let (kf, nf) = (k as f64, n as f64);
    Ok((nf - kf - 1.0) / 2.0 * ch.logdet()
        - m.trace() / 2.0
        - kf * nf / 2.0 * std::f64::consts::LN_2
        - ln_multivariate_gamma(k, nf / 2.0))
}

/// `ln g_n(1)` for the χ²_n density `g_n(x) = x^{n/2−1} e^{−x/2} 2^{−n/2} / Γ(n/2)`.
pub fn ln_chi2_density_at_one(n: usize) -> f64 {
    let nf = n as f64;
    -0.5 - nf / 2.0 * std::f64::consts::LN_2 - ln_gamma(nf / 2.0)
}

/// Gram matrix number `index` of the stream identified by `seed`.
///
/// Stream contract: sample `i` is drawn from a ChaCha8 generator seeded
/// with `seed` and positioned on stream `i`; it consumes `k·n` standard
/// normals, vector by vector, each vector then normalized. A sample depends
/// only on `(seed, i)`, so any split of the index range across workers
/// reproduces the serial batch.
pub fn gram_sample(k: usize, n: usize, seed: u64, index: u64) -> SymMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut vecs = vec![0.0f64; k * n];
    for v in vecs.chunks_mut(n) {
        let mut norm2 = 0.0;
        for c in v.iter_mut() {
            *c = rng.sample(StandardNormal);
            norm2 += *c * *c;
        }
        let inv = norm2.sqrt().recip();
        for c in v.iter_mut() {
            *c *= inv;
        }
    }
    SymMatrix::from_fn(k, |i, j| {
        if i == j {
            1.0
        } else {
            vecs[i * n..(i + 1) * n]
                .iter()
                .zip(&vecs[j * n..(j + 1) * n])
                .map(|(a, b)| a * b)
                .sum()
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramSampleBatch {
    pub k: usize,
    pub n: usize,
    pub count: usize,
    pub seed: u64,
    pub samples: Vec<SymMatrix>,
}

/// `count` Gram samples, indices `0..count` of the `seed` stream.
pub fn sample_gram(k: usize, n: usize, count: usize, seed: u64) -> Result<GramSampleBatch, SphereError> {
    check_dims(k, n, None)?;
    let samples = (0..count as u64)
        .into_par_iter()
        .map(|i| gram_sample(k, n, seed, i))
        .collect();
    Ok(GramSampleBatch {
        k,
        n,
        count,
        seed,
        samples,
    })
}

/// An event on k×k Gram matrices.
pub trait GramPredicate: Sync {
    fn contains(&self, m: &SymMatrix) -> bool;
    fn describe(&self) -> String;
}

/// The whole elliptope; every sample qualifies.
pub struct FullElliptope;

impl GramPredicate for FullElliptope {
    fn contains(&self, _: &SymMatrix) -> bool {
        true
    }
    fn describe(&self) -> String {
        "full elliptope".into()
    }
}

/// All edge entries of the sample lie in `[lo, hi]`. Samples are already
/// PSD with unit diagonal, so this is the event `Ψ(G, [lo, hi])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiSetPredicate {
    pub label: String,
    pub edges: Vec<(usize, usize)>,
    pub lo: f64,
    pub hi: f64,
}

impl GramPredicate for PsiSetPredicate {
    fn contains(&self, m: &SymMatrix) -> bool {
        self.edges.iter().all(|&(u, v)| {
            let t = m.get(u, v);
            t >= self.lo && t <= self.hi
        })
    }
    fn describe(&self) -> String {
        format!("Psi({}, [{}, {}])", self.label, self.lo, self.hi)
    }
}

pub fn psi_set_predicate(g: &Graph, lo: f64, hi: f64) -> Result<PsiSetPredicate, SphereError> {
    if !(lo <= hi) || lo < -1.0 || hi > 1.0 {
        return Err(SphereError::Interval(lo, hi));
    }
    Ok(PsiSetPredicate {
        label: g.label(),
        edges: g.edges().collect(),
        lo,
        hi,
    })
}

/// Two-sided 95% Wilson score interval.
pub fn wilson_interval(hits: u64, count: u64) -> (f64, f64) {
    if count == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let nf = count as f64;
    let p = hits as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let center = (p + z * z / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if hits == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if hits == count { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Monte Carlo estimate of μ_{k,n}(A). Field names follow the report schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuEstimate {
    pub k: usize,
    pub n: usize,
    pub count: u64,
    pub seed: u64,
    pub predicate: String,
    pub hits: u64,
    pub p_hat: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `ln(p_hat)/n`; `None` when no sample hit.
    pub log_rate: Option<f64>,
    pub target_rate: Option<f64>,
}

pub fn count_hits(k: usize, n: usize, pred: &dyn GramPredicate, count: u64, seed: u64) -> u64 {
    let chunks = count.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * CHUNK).min(count);
            (c * CHUNK..end)
                .filter(|&i| pred.contains(&gram_sample(k, n, seed, i)))
                .count() as u64
        })
        .sum()
}

pub fn estimate_mu(
    k: usize,
    n: usize,
    pred: &dyn GramPredicate,
    count: u64,
    seed: u64,
) -> Result<MuEstimate, SphereError> {
    check_dims(k, n, None)?;
    let hits = count_hits(k, n, pred, count, seed);
    let p_hat = if count == 0 { 0.0 } else { hits as f64 / count as f64 };
    let (ci_low, ci_high) = wilson_interval(hits, count);
    Ok(MuEstimate {
        k,
        n,
        count,
        seed,
        predicate: pred.describe(),
        hits,
        p_hat,
        std_error: (p_hat * (1.0 - p_hat) / count.max(1) as f64).sqrt(),
        ci_low,
        ci_high,
        log_rate: (hits > 0).then(|| p_hat.ln() / n as f64),
        target_rate: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdpRow {
    #[serde(flatten)]
    pub estimate: MuEstimate,
    /// `n⁻¹ ln μ` from quadrature, available for k = 2 interval events.
    pub quadrature_rate: Option<f64>,
}

/// Empirical `n⁻¹ ln μ_{k,n}(A)` for each n, next to the limit
/// `½·sup_log_det`. Reporting only; nothing is asserted about convergence.
pub fn ldp_rate(
    k: usize,
    n_list: &[usize],
    pred: &dyn GramPredicate,
    sup_log_det: f64,
    count: u64,
    seed: u64,
) -> Result<Vec<LdpRow>, SphereError> {
    n_list
        .iter()
        .map(|&n| {
            let mut estimate = estimate_mu(k, n, pred, count, seed)?;
            estimate.target_rate = Some(0.5 * sup_log_det);
            Ok(LdpRow {
                estimate,
                quadrature_rate: None,
            })
        })
        .collect()
}

/// Grid maximum of `ln τ(G, x')` over `x' ∈ [lo, hi]` with spacing `step`
/// (both endpoints included), the stand-in for `ln‖1_{Ψ(G,[lo,hi])} det‖_∞`.
/// Infeasible or non-converged grid points are skipped.
pub fn grid_sup_log_tau(g: &Graph, lo: f64, hi: f64, step: f64) -> Option<f64> {
    let steps = ((hi - lo) / step).round().max(0.0) as usize;
    (0..=steps)
        .map(|i| if i == steps { hi } else { lo + i as f64 * step })
        .filter_map(|x| maxdet::sigma(g, x).ok().map(|c| c.logdet))
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
}

// Gauss–Kronrod 7/15 nodes and weights on [−1, 1].
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = GK_WEIGHTS[7] * fc;
    let mut gauss = G_WEIGHTS[3] * fc;
    for i in 0..7 {
        let (f1, f2) = (f(c - h * GK_NODES[i]), f(c + h * GK_NODES[i]));
        kron += GK_WEIGHTS[i] * (f1 + f2);
        if i % 2 == 1 {
            gauss += G_WEIGHTS[i / 2] * (f1 + f2);
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

fn adaptive_gk(f: &dyn Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64, depth: usize) -> f64 {
    let (val, err) = gk15(f, a, b);
    if depth == 0 || err <= abs_tol || err <= 1e-15 * val.abs() {
        return val;
    }
    let m = 0.5 * (a + b);
    adaptive_gk(f, a, m, 0.5 * abs_tol, depth - 1) + adaptive_gk(f, m, b, 0.5 * abs_tol, depth - 1)
}

/// Relative tolerance `rel_tol` against a first estimate of the whole integral.
fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let (rough, _) = gk15(f, a, b);
    adaptive_gk(f, a, b, rel_tol * rough.abs().max(f64::MIN_POSITIVE), 50)
}

/// `ln P(lo ≤ M₁₂ ≤ hi)` for k = 2 by adaptive Gauss–Kronrod quadrature of
/// `c_n (1−t²)^{(n−3)/2}`. The integrand is scaled by its maximum over the
/// interval so large n does not underflow.
pub fn ln_quadrature_mu_k2(n: usize, lo: f64, hi: f64) -> Result<f64, SphereError> {
    check_dims(2, n, None)?;
    if !(lo < hi) || lo < -1.0 || hi > 1.0 {
        return Err(SphereError::Interval(lo, hi));
    }
    let power = (n as f64 - 3.0) / 2.0;
    let ln_kernel = |t: f64| power * (-t * t).ln_1p();
    let peak = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { lo.abs().min(hi.abs()) };
    let ln_peak = if power == 0.0 { 0.0 } else { ln_kernel(peak) };
    let f = |t: f64| {
        if power == 0.0 {
            1.0
        } else {
            (ln_kernel(t) - ln_peak).exp()
        }
    };
    // split at 0 so the peak sits on a panel boundary
    let integral = if lo < 0.0 && hi > 0.0 {
        integrate(&f, lo, 0.0, 1e-13) + integrate(&f, 0.0, hi, 1e-13)
    } else {
        integrate(&f, lo, hi, 1e-13)
    };
    Ok(ln_normalizer(2, n) + ln_peak + integral.ln())
}

pub fn quadrature_mu_k2(n: usize, lo: f64, hi: f64) -> Result<f64, SphereError> {
    Ok(ln_quadrature_mu_k2(n, lo, hi)?.exp())
}

/// Kolmogorov–Smirnov distance between the empirical law of the
/// off-diagonal entry of `count` k = 2 Gram samples and its exact law.
pub fn ks_statistic_k2(n: usize, count: usize, seed: u64) -> Result<f64, SphereError> {
    let batch = sample_gram(2, n, count, seed)?;
    let mut t: Vec<f64> = batch.samples.iter().map(|m| m.get(0, 1)).collect();
    t.sort_by(f64::total_cmp);
    let cdf: Vec<f64> = t
        .par_iter()
        .map(|&ti| {
            // (1 + t)/2 ~ Beta((n−1)/2, (n−1)/2)
            let a = (n as f64 - 1.0) / 2.0;
            beta_reg(a, a, ((1.0 + ti) / 2.0).clamp(0.0, 1.0))
        })
        .collect();
    let m = t.len() as f64;
    Ok(cdf
        .iter()
        .enumerate()
        .map(|(i, &f)| (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs()))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McIntegral {
    pub estimate: f64,
    pub std_error: f64,
    pub count: u64,
}

/// Uniform point of the cube `[−1,1]^{k(k−1)/2}` as a unit-diagonal matrix.
fn cube_sample(k: usize, seed: u64, index: u64) -> SymMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    SymMatrix::from_fn(k, |i, j| if i == j { 1.0 } else { rng.gen_range(-1.0..1.0) })
}

fn cube_mc(k: usize, count: u64, seed: u64, f: &(dyn Fn(&SymMatrix) -> f64 + Sync)) -> McIntegral {
    let chunks = count.div_ceil(CHUNK);
    let (s1, s2) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * CHUNK).min(count);
            (c * CHUNK..end).fold((0.0, 0.0), |(a, b), i| {
                let v = f(&cube_sample(k, seed, i));
                (a + v, b + v * v)
            })
        })
        .reduce(|| (0.0, 0.0), |x, y| (x.0 + y.0, x.1 + y.1));
    let nf = count as f64;
    let vol = 2f64.powi((k * (k - 1) / 2) as i32);
    let mean = s1 / nf;
    let var = (s2 / nf - mean * mean).max(0.0);
    McIntegral {
        estimate: vol * mean,
        std_error: vol * (var / nf).sqrt(),
        count,
    }
}

/// ∫ f_{k,n} over the elliptope by uniform sampling of the off-diagonal cube.
pub fn normalization_mc(k: usize, n: usize, count: u64, seed: u64) -> Result<McIntegral, SphereError> {
    check_dims(k, n, None)?;
    Ok(cube_mc(k, count, seed, &|m| density_f(k, n, m).unwrap_or(0.0)))
}

/// Elliptope volume by rejection from the off-diagonal cube.
pub fn volume_mc(k: usize, count: u64, seed: u64) -> McIntegral {
    cube_mc(k, count, seed, &|m| if Cholesky::new(m, 0.0).is_ok() { 1.0 } else { 0.0 })
}

/// Symmetric weight matrix on `n` vertices with entries in [0, 1]; the
/// diagonal carries loop weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGraph {
    n: usize,
    w: Vec<f64>,
}

impl WeightedGraph {
    pub fn new(n: usize) -> Self {
        WeightedGraph { n, w: vec![0.0; n * n] }
    }

    pub fn from_graph(g: &Graph) -> Self {
        let mut h = Self::new(g.vertex_count());
        for (u, v) in g.edges() {
            h.set(u, v, 1.0).expect("unit weight");
        }
        h
    }

    /// Edges with weights; a missing pair has weight 0.
    pub fn from_weighted_edges(n: usize, edges: &[((usize, usize), f64)]) -> Result<Self, SphereError> {
        let mut h = Self::new(n);
        for &((u, v), w) in edges {
            if u >= n || v >= n {
                return Err(SphereError::Weights(format!("vertex out of range in ({u},{v})")));
            }
            h.set(u, v, w)?;
        }
        Ok(h)
    }

    pub fn set(&mut self, u: usize, v: usize, w: f64) -> Result<(), SphereError> {
        if !(0.0..=1.0).contains(&w) {
            return Err(SphereError::Weights(format!("weight {w} outside [0,1]")));
        }
        self.w[u * self.n + v] = w;
        self.w[v * self.n + u] = w;
        Ok(())
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.w[u * self.n + v]
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }
}

/// Largest target graph accepted by [`hom_density`].
pub const HOM_MAX_TARGET: usize = 8;

/// `t(G, H)`: the average over all maps `V(G) → V(H)` of the product of
/// `H`-weights over the images of `G`'s edges, by full enumeration.
pub fn hom_density(g: &Graph, h: &WeightedGraph) -> Result<f64, SphereError> {
    let (p, q) = (g.vertex_count(), h.vertex_count());
    if q == 0 || q > HOM_MAX_TARGET {
        return Err(SphereError::Weights(format!("target must have 1..={HOM_MAX_TARGET} vertices")));
    }
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let total = (q as u64).checked_pow(p as u32).filter(|&t| t <= 1 << 32).ok_or_else(|| {
        SphereError::Weights(format!("{q}^{p} maps is too many to enumerate"))
    })?;
    let mut map = vec![0usize; p];
    let mut sum = 0.0;
    for _ in 0..total {
        sum += edges.iter().map(|&(u, v)| h.weight(map[u], map[v])).product::<f64>();
        for slot in map.iter_mut() {
            *slot += 1;
            if *slot < q {
                break;
            }
            *slot = 0;
        }
    }
    Ok(sum / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidorenkoCheck {
    pub t_g: f64,
    pub t_edge: f64,
    pub edges: usize,
    /// `ln t(G,H) − |E(G)| ln t(e,H)`; `None` when `t(e,H) = 0`.
    pub log_margin: Option<f64>,
    pub holds: bool,
}

/// Compares `t(G,H)` with `t(e,H)^{|E(G)|}`.
pub fn sidorenko_check(g: &Graph, h: &WeightedGraph) -> Result<SidorenkoCheck, SphereError> {
    let t_g = hom_density(g, h)?;
    let edge = Graph::from_edges(2, [(0, 1)]).expect("edge");
    let t_edge = hom_density(&edge, h)?;
    let m = g.edge_count();
    let bound = t_edge.powi(m as i32);
    Ok(SidorenkoCheck {
        t_g,
        t_edge,
        edges: m,
        log_margin: (t_edge > 0.0 && t_g > 0.0).then(|| t_g.ln() - m as f64 * t_edge.ln()),
        holds: t_g >= bound * (1.0 - 1e-12),
    })
}
