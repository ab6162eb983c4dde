//! Dense symmetric matrices, Cholesky, and the conditionally independent
//! coupling of two overlapping positive definite matrices.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graphs::Graph;

/// Pivots at or below this value make a matrix "not positive definite".
pub const PD_TOLERANCE: f64 = 1e-12;

/// Maximum entrywise disagreement tolerated between the two coupling routes.
pub const COUPLE_CROSS_CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite: pivot {index} = {pivot:e}")]
    NotPd { index: usize, pivot: f64 },
    #[error("overlap blocks disagree by {max_diff:e} (tolerance {tol:e})")]
    OverlapMismatch { max_diff: f64, tol: f64 },
    #[error("coupled matrices share no index")]
    EmptyOverlap,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("coupling cross-check failed: routes differ by {0:e}")]
    CrossCheck(f64),
}

/// Symmetric matrix with packed lower-triangular storage, so entry (i,j)
/// and (j,i) are one value. Rows are labelled by `index_set`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
    index_set: Vec<usize>,
}

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * (dim + 1) / 2],
            index_set: (0..dim).collect(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    /// `f` is only called for `j <= i`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                m.data[packed(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Unit diagonal, `value` everywhere else.
    pub fn constant_off_diagonal(dim: usize, value: f64) -> Self {
        Self::from_fn(dim, |i, j| if i == j { 1.0 } else { value })
    }

    /// Reads the lower triangle of a square row-major matrix. Returns an
    /// error if the rows are ragged or the matrix is not symmetric to 1e-12.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(LinalgError::Dimension("rows are not square".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if (rows[i][j] - rows[j][i]).abs() > 1e-12 {
                    return Err(LinalgError::Dimension(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j]))
    }

    pub fn with_index_set(mut self, index_set: Vec<usize>) -> Self {
        assert_eq!(index_set.len(), self.dim, "index set length");
        self.index_set = index_set;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn index_set(&self) -> &[usize] {
        &self.index_set
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[packed(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[packed(i, j)] = v;
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Principal submatrix at the given positions (not labels); labels follow.
    pub fn principal(&self, positions: &[usize]) -> SymMatrix {
        let mut m = SymMatrix::from_fn(positions.len(), |a, b| self.get(positions[a], positions[b]));
        m.index_set = positions.iter().map(|&p| self.index_set[p]).collect();
        m
    }

    /// Principal submatrix selected by labels.
    pub fn block_by_labels(&self, labels: &[usize]) -> Option<SymMatrix> {
        let pos: BTreeMap<usize, usize> = self.index_set.iter().enumerate().map(|(p, &l)| (l, p)).collect();
        let positions: Option<Vec<usize>> = labels.iter().map(|l| pos.get(l).copied()).collect();
        positions.map(|p| self.principal(&p))
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Conjugation `D M D` by a diagonal sign vector.
    pub fn conjugate_signs(&self, signs: &[f64]) -> SymMatrix {
        let mut m = SymMatrix::from_fn(self.dim, |i, j| signs[i] * signs[j] * self.get(i, j));
        m.index_set = self.index_set.clone();
        m
    }

    /// Dense product `self * other` as rows.
    pub fn mul_dense(&self, other: &SymMatrix) -> Vec<Vec<f64>> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| self.get(i, k) * other.get(k, j)).sum())
                    .collect()
            })
            .collect()
    }

    pub fn cholesky(&self) -> Result<Cholesky, LinalgError> {
        Cholesky::new(self, PD_TOLERANCE)
    }

    pub fn logdet(&self) -> Result<f64, LinalgError> {
        Ok(self.cholesky()?.logdet())
    }

    pub fn inverse(&self) -> Result<SymMatrix, LinalgError> {
        let mut inv = self.cholesky()?.inverse();
        inv.index_set = self.index_set.clone();
        Ok(inv)
    }

    /// Gaussian differential entropy `dim/2·ln(2πe) + ½·logdet`.
    pub fn differential_entropy(&self) -> Result<f64, LinalgError> {
        Ok(gaussian_entropy(self.dim, self.logdet()?))
    }
}

pub fn gaussian_entropy(dim: usize, logdet: f64) -> f64 {
    let two_pi_e = 2.0 * std::f64::consts::PI * std::f64::consts::E;
    dim as f64 / 2.0 * two_pi_e.ln() + 0.5 * logdet
}

/// Lower-triangular factor `L` with `L Lᵀ = M`, stored dense row-major.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn new(m: &SymMatrix, tol: f64) -> Result<Self, LinalgError> {
        let n = m.dim();
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = m.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > tol) {
                return Err(LinalgError::NotPd { index: j, pivot: d });
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let mut s = m.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Cholesky { n, l })
    }

    pub fn factor(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.n + j]
    }

    pub fn logdet(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.l[i * self.n + i].ln()).sum::<f64>()
    }

    /// Squared ratio of the largest to smallest diagonal factor, a cheap
    /// lower bound on the 2-norm condition number.
    pub fn condition_estimate(&self) -> f64 {
        let diag = (0..self.n).map(|i| self.l[i * self.n + i]);
        let (lo, hi) = diag.fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        (hi / lo).powi(2)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[i * n + k] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] -= self.l[k * n + i] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        y
    }

    pub fn inverse(&self) -> SymMatrix {
        let n = self.n;
        // L⁻¹ column by column, then (L⁻¹)ᵀ L⁻¹
        let mut linv = vec![0.0; n * n];
        for c in 0..n {
            linv[c * n + c] = 1.0 / self.l[c * n + c];
            for i in (c + 1)..n {
                let mut s = 0.0;
                for k in c..i {
                    s -= self.l[i * n + k] * linv[k * n + c];
                }
                linv[i * n + c] = s / self.l[i * n + i];
            }
        }
        SymMatrix::from_fn(n, |i, j| {
            (i.max(j)..n).map(|k| linv[k * n + i] * linv[k * n + j]).sum()
        })
    }
}

/// Result of testing a matrix for membership in Ψ(G, x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiReport {
    pub positive_definite: bool,
    pub failing_pivot: Option<(usize, f64)>,
    pub max_diagonal_deviation: f64,
    pub max_edge_deviation: f64,
    /// Edge attaining `max_edge_deviation`, if any edge exceeds `tol`.
    pub worst_edge: Option<(usize, usize)>,
    pub member: bool,
}

/// Positive definite, unit diagonal and `x` on every edge, all within `tol`.
pub fn is_in_psi(m: &SymMatrix, g: &Graph, x: f64, tol: f64) -> PsiReport {
    assert_eq!(m.dim(), g.vertex_count(), "matrix and graph sizes differ");
    let failing_pivot = match m.cholesky() {
        Ok(_) => None,
        Err(LinalgError::NotPd { index, pivot }) => Some((index, pivot)),
        Err(_) => unreachable!("cholesky only reports NotPd"),
    };
    let max_diagonal_deviation = (0..m.dim())
        .map(|i| (m.get(i, i) - 1.0).abs())
        .fold(0.0, f64::max);
    let mut max_edge_deviation = 0.0;
    let mut worst = None;
    for (u, v) in g.edges() {
        let d = (m.get(u, v) - x).abs();
        if d > max_edge_deviation {
            max_edge_deviation = d;
            worst = Some((u, v));
        }
    }
    let edges_ok = max_edge_deviation <= tol;
    PsiReport {
        positive_definite: failing_pivot.is_none(),
        failing_pivot,
        max_diagonal_deviation,
        max_edge_deviation,
        worst_edge: if edges_ok { None } else { worst },
        member: failing_pivot.is_none() && max_diagonal_deviation <= tol && edges_ok,
    }
}

/// Conditionally independent coupling of `a` (over labels X) and `b` (over
/// labels Y) along their shared labels Z = X ∩ Y.
///
/// The result is indexed by the sorted union of labels. It is built from
/// the block formula (cross block `A_{X∖Z,Z} C⁻¹ B_{Z,Y∖Z}`) and checked
/// against `(Ã + B̃ − C̃)⁻¹`, the padded-inverse form.
pub fn couple(a: &SymMatrix, b: &SymMatrix, overlap_tol: f64) -> Result<SymMatrix, LinalgError> {
    let plan = CouplePlan::new(a, b)?;
    let c = a.block_by_labels(&plan.shared).expect("shared labels are in A");
    let cb = b.block_by_labels(&plan.shared).expect("shared labels are in B");
    let mismatch = c.max_abs_diff(&cb);
    if mismatch > overlap_tol {
        return Err(LinalgError::OverlapMismatch {
            max_diff: mismatch,
            tol: overlap_tol,
        });
    }
    let via_blocks = plan.block_route(a, b, &c)?;
    let via_inverse = plan.padded_inverse_route(a, b, &c)?;
    let diff = via_blocks.max_abs_diff(&via_inverse);
    if !(diff <= COUPLE_CROSS_CHECK_TOL) {
        return Err(LinalgError::CrossCheck(diff));
    }
    Ok(via_blocks)
}

struct CouplePlan {
    union: Vec<usize>,
    shared: Vec<usize>,
    only_a: Vec<usize>,
    only_b: Vec<usize>,
}

impl CouplePlan {
    fn new(a: &SymMatrix, b: &SymMatrix) -> Result<Self, LinalgError> {
        let xa: std::collections::BTreeSet<usize> = a.index_set().iter().copied().collect();
        let yb: std::collections::BTreeSet<usize> = b.index_set().iter().copied().collect();
        if xa.len() != a.dim() || yb.len() != b.dim() {
            return Err(LinalgError::Dimension("duplicate labels in index set".into()));
        }
        let shared: Vec<usize> = xa.intersection(&yb).copied().collect();
        if shared.is_empty() {
            return Err(LinalgError::EmptyOverlap);
        }
        Ok(CouplePlan {
            union: xa.union(&yb).copied().collect(),
            only_a: xa.difference(&yb).copied().collect(),
            only_b: yb.difference(&xa).copied().collect(),
            shared,
        })
    }

    fn position(&self, label: usize) -> usize {
        self.union.binary_search(&label).expect("label in union")
    }

    fn block_route(&self, a: &SymMatrix, b: &SymMatrix, c: &SymMatrix) -> Result<SymMatrix, LinalgError> {
        let chol_c = c.cholesky()?;
        a.cholesky()?;
        b.cholesky()?;
        let mut d = SymMatrix::zeros(self.union.len()).with_index_set(self.union.clone());
        let copy_block = |d: &mut SymMatrix, m: &SymMatrix| {
            for (i, &li) in m.index_set().iter().enumerate() {
                for (j, &lj) in m.index_set().iter().enumerate().take(i + 1) {
                    d.set(self.position(li), self.position(lj), m.get(i, j));
                }
            }
        };
        copy_block(&mut d, b);
        copy_block(&mut d, a);
        // cross block: A_{u,Z} C⁻¹ B_{Z,w}
        let pos_a = label_positions(a);
        let pos_b = label_positions(b);
        for &w in &self.only_b {
            let bzw: Vec<f64> = self.shared.iter().map(|z| b.get(pos_b[z], pos_b[&w])).collect();
            let y = chol_c.solve(&bzw);
            for &u in &self.only_a {
                let v: f64 = self
                    .shared
                    .iter()
                    .zip(&y)
                    .map(|(z, yz)| a.get(pos_a[&u], pos_a[z]) * yz)
                    .sum();
                d.set(self.position(u), self.position(w), v);
            }
        }
        Ok(d)
    }

    fn padded_inverse_route(&self, a: &SymMatrix, b: &SymMatrix, c: &SymMatrix) -> Result<SymMatrix, LinalgError> {
        let mut precision = SymMatrix::zeros(self.union.len()).with_index_set(self.union.clone());
        let mut accumulate = |m: &SymMatrix, sign: f64| -> Result<(), LinalgError> {
            let inv = m.inverse()?;
            for (i, &li) in m.index_set().iter().enumerate() {
                for (j, &lj) in m.index_set().iter().enumerate().take(i + 1) {
                    let (pi, pj) = (self.position(li), self.position(lj));
                    let cur = precision.get(pi, pj);
                    precision.set(pi, pj, cur + sign * inv.get(i, j));
                }
            }
            Ok(())
        };
        accumulate(a, 1.0)?;
        accumulate(b, 1.0)?;
        accumulate(c, -1.0)?;
        precision.inverse()
    }
}

fn label_positions(m: &SymMatrix) -> BTreeMap<usize, usize> {
    m.index_set().iter().enumerate().map(|(p, &l)| (l, p)).collect()
}

/// JSON dump used by `--dump-matrix`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDump {
    pub index_set: Vec<usize>,
    pub matrix: Vec<Vec<f64>>,
}

impl From<&SymMatrix> for MatrixDump {
    fn from(m: &SymMatrix) -> Self {
        MatrixDump {
            index_set: m.index_set().to_vec(),
            matrix: m.to_rows(),
        }
    }
}

impl TryFrom<&MatrixDump> for SymMatrix {
    type Error = LinalgError;
    fn try_from(d: &MatrixDump) -> Result<Self, LinalgError> {
        if d.index_set.len() != d.matrix.len() {
            return Err(LinalgError::Dimension("index_set length".into()));
        }
        Ok(SymMatrix::from_rows(&d.matrix)?.with_index_set(d.index_set.clone()))
    }
}
