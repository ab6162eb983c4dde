//! Exact truncated power series and the formal version of recoupling.
//!
//! Coefficients are arbitrary-precision rationals. Running the recoupling
//! sweeps with the symbolic edge value `x` (entries kept modulo `x^{N+1}`)
//! yields the power series of τ(G, x) around 0; integrality of the result
//! is checked, not assumed.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::graphs::Graph;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeriesError {
    #[error("series has zero constant term")]
    ZeroConstantTerm,
    #[error("logarithm needs constant term 1, found {0}")]
    LogConstantTerm(String),
    #[error("denominator with constant term {0} (expected 1)")]
    NonUnitDenominator(String),
    #[error("no stabilization after {sweeps} sweeps at order {order}")]
    NoStabilization { sweeps: usize, order: usize },
    #[error("coefficient {index} of the tau series is not an integer: {value}")]
    NonInteger { index: usize, value: String },
    #[error("truncation order must be at least 2, got {0}")]
    OrderTooSmall(usize),
}

/// Power series truncated after the `x^order` term.
#[derive(Clone, PartialEq, Eq)]
pub struct TruncSeries {
    coeffs: Vec<BigRational>,
}

impl fmt::Debug for TruncSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        write!(f, "[{}]", terms.join(", "))
    }
}

impl TruncSeries {
    pub fn zero(order: usize) -> Self {
        TruncSeries {
            coeffs: vec![BigRational::zero(); order + 1],
        }
    }

    pub fn one(order: usize) -> Self {
        Self::constant(order, BigRational::one())
    }

    pub fn constant(order: usize, c: BigRational) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    /// The series `x`.
    pub fn var(order: usize) -> Self {
        let mut s = Self::zero(order);
        if order >= 1 {
            s.coeffs[1] = BigRational::one();
        }
        s
    }

    /// Integer coefficients, padded or truncated to `order`.
    pub fn from_ints(order: usize, ints: &[i64]) -> Self {
        let mut s = Self::zero(order);
        for (c, &v) in s.coeffs.iter_mut().zip(ints) {
            *c = BigRational::from_integer(BigInt::from(v));
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> &BigRational {
        &self.coeffs[i]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Index of the first nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        TruncSeries {
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    /// Multiplicative inverse; needs a nonzero constant term.
    pub fn inverse(&self) -> Result<Self, SeriesError> {
        let c0 = &self.coeffs[0];
        if c0.is_zero() {
            return Err(SeriesError::ZeroConstantTerm);
        }
        let inv0 = c0.recip();
        let n = self.order();
        let mut out = Self::zero(n);
        out.coeffs[0] = inv0.clone();
        for k in 1..=n {
            let mut s = BigRational::zero();
            for j in 1..=k {
                if !self.coeffs[j].is_zero() {
                    s += &self.coeffs[j] * &out.coeffs[k - j];
                }
            }
            out.coeffs[k] = -(s * &inv0);
        }
        Ok(out)
    }

    pub fn derivative(&self) -> Self {
        let n = self.order();
        let mut out = Self::zero(n);
        for k in 1..=n {
            out.coeffs[k - 1] = &self.coeffs[k] * BigRational::from_integer(BigInt::from(k));
        }
        out
    }

    /// Antiderivative with zero constant term; the top coefficient of the
    /// input is dropped.
    pub fn integral(&self) -> Self {
        let n = self.order();
        let mut out = Self::zero(n);
        for k in 0..n {
            out.coeffs[k + 1] = &self.coeffs[k] / BigRational::from_integer(BigInt::from(k + 1));
        }
        out
    }

    /// `ln s` for constant term 1, via `∫ s'/s`.
    pub fn log(&self) -> Result<Self, SeriesError> {
        if !self.coeffs[0].is_one() {
            return Err(SeriesError::LogConstantTerm(self.coeffs[0].to_string()));
        }
        Ok((&self.derivative() * &self.inverse()?).integral())
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        use num_traits::ToPrimitive;
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c.to_f64().unwrap_or(f64::NAN))
    }

    /// Coefficients as integers, if every denominator is 1.
    pub fn to_integers(&self) -> Option<Vec<BigInt>> {
        self.coeffs
            .iter()
            .map(|c| c.is_integer().then(|| c.to_integer()))
            .collect()
    }
}

impl Add for &TruncSeries {
    type Output = TruncSeries;
    fn add(self, rhs: &TruncSeries) -> TruncSeries {
        debug_assert_eq!(self.order(), rhs.order());
        TruncSeries {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &TruncSeries {
    type Output = TruncSeries;
    fn sub(self, rhs: &TruncSeries) -> TruncSeries {
        debug_assert_eq!(self.order(), rhs.order());
        TruncSeries {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &TruncSeries {
    type Output = TruncSeries;
    fn neg(self) -> TruncSeries {
        TruncSeries {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Mul for &TruncSeries {
    type Output = TruncSeries;
    fn mul(self, rhs: &TruncSeries) -> TruncSeries {
        debug_assert_eq!(self.order(), rhs.order());
        let n = self.order();
        let mut out = TruncSeries::zero(n);
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs[..=n - i].iter().enumerate() {
                if !b.is_zero() {
                    out.coeffs[i + j] += a * b;
                }
            }
        }
        out
    }
}

/// Symmetric matrix of truncated series, packed lower triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesMatrix {
    dim: usize,
    order: usize,
    data: Vec<TruncSeries>,
}

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

impl SeriesMatrix {
    pub fn from_fn(dim: usize, order: usize, mut f: impl FnMut(usize, usize) -> TruncSeries) -> Self {
        let mut data = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in 0..=i {
                data.push(f(i, j));
            }
        }
        SeriesMatrix { dim, order, data }
    }

    pub fn identity(dim: usize, order: usize) -> Self {
        Self::from_fn(dim, order, |i, j| {
            if i == j {
                TruncSeries::one(order)
            } else {
                TruncSeries::zero(order)
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> &TruncSeries {
        &self.data[packed(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, s: TruncSeries) {
        self.data[packed(i, j)] = s;
    }

    fn dense(&self) -> Vec<Vec<TruncSeries>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j).clone()).collect())
            .collect()
    }

    /// Product of two symmetric series matrices, returned dense.
    pub fn mul_dense(&self, other: &SeriesMatrix) -> Vec<Vec<TruncSeries>> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (0..n).fold(TruncSeries::zero(self.order), |acc, k| {
                            &acc + &(self.get(i, k) * other.get(k, j))
                        })
                    })
                    .collect()
            })
            .collect()
    }

    /// Gauss–Jordan inverse over the series ring, pivoting on the diagonal.
    /// Every pivot must have a nonzero constant term, which holds when the
    /// constant-term matrix is positive definite.
    pub fn inverse(&self) -> Result<SeriesMatrix, SeriesError> {
        let n = self.dim;
        let order = self.order;
        let mut a = self.dense();
        let mut inv: Vec<Vec<TruncSeries>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { TruncSeries::one(order) } else { TruncSeries::zero(order) })
                    .collect()
            })
            .collect();
        for c in 0..n {
            let pinv = a[c][c].inverse()?;
            for j in 0..n {
                a[c][j] = &a[c][j] * &pinv;
                inv[c][j] = &inv[c][j] * &pinv;
            }
            for r in 0..n {
                if r == c || a[r][c].is_zero() {
                    continue;
                }
                let f = a[r][c].clone();
                for j in 0..n {
                    let t = &f * &a[c][j];
                    a[r][j] = &a[r][j] - &t;
                    let t = &f * &inv[c][j];
                    inv[r][j] = &inv[r][j] - &t;
                }
            }
        }
        Ok(SeriesMatrix::from_fn(n, order, |i, j| inv[i][j].clone()))
    }

    /// Determinant as the product of elimination pivots.
    pub fn det(&self) -> Result<TruncSeries, SeriesError> {
        let n = self.dim;
        let mut a = self.dense();
        let mut det = TruncSeries::one(self.order);
        for c in 0..n {
            det = &det * &a[c][c];
            let pinv = a[c][c].inverse()?;
            for r in (c + 1)..n {
                if a[r][c].is_zero() {
                    continue;
                }
                let f = &a[r][c] * &pinv;
                for j in c..n {
                    let t = &f * &a[c][j];
                    a[r][j] = &a[r][j] - &t;
                }
            }
        }
        Ok(det)
    }
}

/// Inverse of a matrix over the series ring (see [`SeriesMatrix::inverse`]).
pub fn series_matrix_inverse(m: &SeriesMatrix) -> Result<SeriesMatrix, SeriesError> {
    m.inverse()
}

fn require_unit_constant(s: &TruncSeries) -> Result<(), SeriesError> {
    if s.coeff(0).is_one() {
        Ok(())
    } else {
        Err(SeriesError::NonUnitDenominator(s.coeff(0).to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauSeries {
    pub coefficients: Vec<BigInt>,
    pub sweeps: usize,
    pub sigma: SeriesMatrix,
}

impl TauSeries {
    pub fn as_series(&self) -> TruncSeries {
        let mut s = TruncSeries::zero(self.coefficients.len() - 1);
        for (c, v) in s.coeffs.iter_mut().zip(&self.coefficients) {
            *c = BigRational::from_integer(v.clone());
        }
        s
    }

    /// Coefficients as decimal strings, for lossless JSON.
    pub fn decimal_strings(&self) -> Vec<String> {
        self.coefficients.iter().map(|c| c.to_string()).collect()
    }
}

/// Default sweep cap: `4 · (#non-edges) · order`, at least one sweep.
pub fn default_sweep_cap(g: &Graph, order: usize) -> usize {
    (4 * g.non_edges().len() * order).max(1)
}

/// Power series of τ(G, x) up to `x^order`.
pub fn tau_series(g: &Graph, order: usize) -> Result<TauSeries, SeriesError> {
    tau_series_with_cap(g, order, default_sweep_cap(g, order))
}

pub fn tau_series_with_cap(g: &Graph, order: usize, max_sweeps: usize) -> Result<TauSeries, SeriesError> {
    if order < 2 {
        return Err(SeriesError::OrderTooSmall(order));
    }
    let n = g.vertex_count();
    let x = TruncSeries::var(order);
    let mut m = SeriesMatrix::from_fn(n, order, |i, j| {
        if i == j {
            TruncSeries::one(order)
        } else {
            x.clone()
        }
    });
    let non_edges = g.non_edges();
    let mut p = m.inverse()?;
    let mut sweeps = 0;
    loop {
        if non_edges.iter().all(|&(v, w)| p.get(v, w).is_zero()) {
            break;
        }
        if sweeps >= max_sweeps {
            return Err(SeriesError::NoStabilization { sweeps, order });
        }
        let mut changed = false;
        for &(v, w) in &non_edges {
            changed |= formal_step(&mut m, &mut p, v, w)?;
        }
        sweeps += 1;
        if !changed {
            break;
        }
    }
    let det = m.det()?;
    let coefficients = det
        .coeffs()
        .iter()
        .enumerate()
        .map(|(index, c)| {
            if c.is_integer() {
                Ok(c.to_integer())
            } else {
                Err(SeriesError::NonInteger {
                    index,
                    value: c.to_string(),
                })
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TauSeries {
        coefficients,
        sweeps,
        sigma: m,
    })
}

/// Series version of the rank-two recoupling step. Returns whether the
/// entry changed.
fn formal_step(m: &mut SeriesMatrix, p: &mut SeriesMatrix, v: usize, w: usize) -> Result<bool, SeriesError> {
    let (pvv, pww, pvw) = (p.get(v, v).clone(), p.get(w, w).clone(), p.get(v, w).clone());
    if pvw.is_zero() {
        return Ok(false);
    }
    let schur = &(&pvv * &pww) - &(&pvw * &pvw);
    require_unit_constant(&schur)?;
    let delta = &pvw * &schur.inverse()?;
    if delta.is_zero() {
        return Ok(false);
    }
    let updated = m.get(v, w) + &delta;
    m.set(v, w, updated);

    let one = TruncSeries::one(m.order());
    let k00 = &one + &(&delta * &pvw);
    let k01 = &delta * &pww;
    let k10 = &delta * &pvv;
    let kdet = &(&k00 * &k00) - &(&k01 * &k10);
    require_unit_constant(&kdet)?;
    let kdet_inv = kdet.inverse()?;
    // K⁻¹ = adj(K)/det(K); G = K⁻¹ δJ
    let kinv00 = &k00 * &kdet_inv;
    let kinv01 = -&(&k01 * &kdet_inv);
    let kinv10 = -&(&k10 * &kdet_inv);
    let kinv11 = kinv00.clone();
    let g00 = &delta * &kinv01;
    let g01 = &delta * &kinv00;
    let g10 = &delta * &kinv11;
    let g11 = &delta * &kinv10;

    let n = m.dim();
    let col_v: Vec<TruncSeries> = (0..n).map(|i| p.get(i, v).clone()).collect();
    let col_w: Vec<TruncSeries> = (0..n).map(|i| p.get(i, w).clone()).collect();
    for i in 0..n {
        let left0 = &(&col_v[i] * &g00) + &(&col_w[i] * &g10);
        let left1 = &(&col_v[i] * &g01) + &(&col_w[i] * &g11);
        for j in 0..=i {
            let upd = &(&left0 * &col_v[j]) + &(&left1 * &col_w[j]);
            if !upd.is_zero() {
                let cur = p.get(i, j) - &upd;
                p.set(i, j, cur);
            }
        }
    }
    Ok(true)
}

/// First nonzero coefficient of `ln τ(G,x) − |E|·ln(1−x²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstNonzero {
    pub index: usize,
    /// Exact value as `p/q` or `p`.
    pub value: String,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalMargin {
    pub coefficients: Vec<BigRational>,
    pub first_nonzero: Option<FirstNonzero>,
    pub tau: TauSeries,
}

impl LocalMargin {
    /// The first nonzero coefficient exists and is positive.
    pub fn locally_verified(&self) -> bool {
        self.first_nonzero.as_ref().is_some_and(|f| f.positive)
    }
}

/// Exact local margin series and the sign of its first nonzero coefficient.
pub fn local_margin_series(g: &Graph, order: usize) -> Result<LocalMargin, SeriesError> {
    let tau = tau_series(g, order)?;
    let log_tau = tau.as_series().log()?;
    let edge = TruncSeries::from_ints(order, &[1, 0, -1]).log()?;
    let m = BigRational::from_integer(BigInt::from(g.edge_count()));
    let margin = &log_tau - &edge.scale(&m);
    let first_nonzero = margin.valuation().map(|index| {
        let c = margin.coeff(index);
        FirstNonzero {
            index,
            value: c.to_string(),
            positive: c.is_positive(),
        }
    });
    Ok(LocalMargin {
        coefficients: margin.coeffs().to_vec(),
        first_nonzero,
        tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::make_family;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    fn ints(s: &TauSeries) -> Vec<i64> {
        s.coefficients.iter().map(|c| c.to_string().parse().unwrap()).collect()
    }

    #[test]
    fn geometric_series() {
        let s = TruncSeries::from_ints(6, &[1, -1]).inverse().unwrap();
        assert_eq!(s, TruncSeries::from_ints(6, &[1; 7]));
    }

    #[test]
    fn mercator_series() {
        let s = TruncSeries::from_ints(8, &[1, 0, -1]).log().unwrap();
        let want = [rat(0, 1), rat(0, 1), rat(-1, 1), rat(0, 1), rat(-1, 2), rat(0, 1), rat(-1, 3), rat(0, 1), rat(-1, 4)];
        assert_eq!(s.coeffs(), &want);
    }

    #[test]
    fn inverse_cancels() {
        let s = TruncSeries::from_ints(9, &[1, 1]);
        assert_eq!(&s * &s.inverse().unwrap(), TruncSeries::one(9));
        assert_eq!(TruncSeries::zero(3).inverse(), Err(SeriesError::ZeroConstantTerm));
        assert!(matches!(TruncSeries::from_ints(3, &[2, 1]).log(), Err(SeriesError::LogConstantTerm(_))));
    }

    #[test]
    fn derivative_and_integral() {
        let s = TruncSeries::from_ints(4, &[5, 3, 2, 7, 1]);
        assert_eq!(s.derivative(), TruncSeries::from_ints(4, &[3, 4, 21, 4]));
        assert_eq!(s.derivative().integral(), TruncSeries::from_ints(4, &[0, 3, 2, 7, 1]));
    }

    #[test]
    fn matrix_inverse_identity() {
        let order = 6;
        let x = TruncSeries::var(order);
        let m = SeriesMatrix::from_fn(4, order, |i, j| {
            if i == j {
                TruncSeries::one(order)
            } else {
                x.scale(&rat((i + j) as i64, 1))
            }
        });
        let inv = series_matrix_inverse(&m).unwrap();
        let prod = m.mul_dense(&inv);
        for (i, row) in prod.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                let want = if i == j { TruncSeries::one(order) } else { TruncSeries::zero(order) };
                assert_eq!(e, &want);
            }
        }
    }

    #[test]
    fn tree_series_is_binomial() {
        let g = make_family("tree-random:6:4").unwrap();
        let s = tau_series(&g, 10).unwrap();
        // (1 − x²)^5
        assert_eq!(ints(&s), vec![1, 0, -5, 0, 10, 0, -10, 0, 5, 0, -1]);
    }

    #[test]
    fn complete_series_closed_form() {
        let g = make_family("complete:4").unwrap();
        let s = tau_series(&g, 6).unwrap();
        assert_eq!(s.sweeps, 0);
        // (1+3x)(1−x)³ = 1 − 6x² + 8x³ − 3x⁴
        assert_eq!(ints(&s), vec![1, 0, -6, 8, -3, 0, 0]);
    }

    #[test]
    fn order_must_be_at_least_two() {
        let g = make_family("cycle:4").unwrap();
        assert_eq!(tau_series(&g, 1).unwrap_err(), SeriesError::OrderTooSmall(1));
    }

    #[test]
    fn complete3_local_margin() {
        let g = make_family("complete:3").unwrap();
        let lm = local_margin_series(&g, 6).unwrap();
        let first = lm.first_nonzero.unwrap();
        assert_eq!(first.index, 3);
        assert_eq!(first.value, "2");
        assert!(first.positive);
    }

    #[test]
    fn tree_local_margin_vanishes() {
        let g = make_family("path:4").unwrap();
        let lm = local_margin_series(&g, 10).unwrap();
        assert!(lm.first_nonzero.is_none());
        assert!(lm.coefficients.iter().all(Zero::is_zero));
    }

    #[test]
    fn too_few_sweeps_reported() {
        let g = make_family("cycle:5").unwrap();
        assert!(matches!(
            tau_series_with_cap(&g, 8, 1),
            Err(SeriesError::NoStabilization { sweeps: 1, order: 8 })
        ));
    }
}
