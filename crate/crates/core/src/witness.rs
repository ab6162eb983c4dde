//! Explicit members of Ψ(G, x) for bipartite G, glued together from an
//! equicorrelated base block on one color class and one star block per
//! vertex of the other class.
//!
//! The base block has 1 on the diagonal and x² elsewhere; the star block
//! of v has x between v and its neighbours and x² among the neighbours.
//! Coupling the stars onto the base one at a time keeps every edge entry
//! at x and multiplies the determinant by
//! `det(star) / det(star restricted to N(v))` each time, giving the
//! closed form
//!
//! ```text
//! (1−x²)^{a+b−1} (1+(a−1)x²) Π_i (1+(d_i−1)x²)⁻¹
//! ```

use serde::{Deserialize, Serialize};

use crate::graphs::{thm2_condition, Bipartition, Graph, GraphError, Orientation};
use crate::linalg::{couple, is_in_psi, LinalgError, SymMatrix};

#[derive(Debug, Clone, thiserror::Error)]
pub enum WitnessError {
    #[error("graph is not bipartite")]
    NotBipartite,
    #[error("edge value {0} outside (-1, 1)")]
    Boundary(f64),
    #[error("constructed matrix left Ψ(G,x): edge deviation {0:e}")]
    NotInPsi(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl From<GraphError> for WitnessError {
    fn from(_: GraphError) -> Self {
        WitnessError::NotBipartite
    }
}

/// Which class is the base, the degrees of the star centers and the order
/// in which the stars are glued on.
///
/// Isolated vertices are kept aside in `isolated` and contribute
/// independent unit-variance coordinates, so `a` counts only base vertices
/// with at least one neighbour and every star has `d ≥ 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessPlan {
    pub orientation: Orientation,
    pub base: Vec<usize>,
    pub centers: Vec<usize>,
    pub degrees: Vec<usize>,
    pub isolated: Vec<usize>,
}

impl WitnessPlan {
    pub fn new(g: &Graph, bip: &Bipartition, orientation: Orientation) -> Self {
        let deg = g.degrees();
        let (v1, v2) = bip.oriented(orientation);
        let base: Vec<usize> = v1.iter().copied().filter(|&v| deg[v] > 0).collect();
        let centers: Vec<usize> = v2.iter().copied().filter(|&v| deg[v] > 0).collect();
        let degrees = centers.iter().map(|&v| deg[v]).collect();
        let mut isolated: Vec<usize> = (0..g.vertex_count()).filter(|&v| deg[v] == 0).collect();
        isolated.sort_unstable();
        WitnessPlan {
            orientation,
            base,
            centers,
            degrees,
            isolated,
        }
    }

    /// Plan in the orientation preferred by the degree condition.
    pub fn best(g: &Graph) -> Result<Self, WitnessError> {
        let verdict = thm2_condition(g)?;
        let bip = g.bipartition().ok_or(WitnessError::NotBipartite)?;
        Ok(Self::new(g, &bip, verdict.best_orientation))
    }

    pub fn a(&self) -> usize {
        self.base.len()
    }

    pub fn b(&self) -> usize {
        self.centers.len()
    }

    /// Log of the closed-form determinant.
    pub fn log_bound(&self, x: f64) -> f64 {
        let y = x * x;
        if self.base.is_empty() {
            return 0.0;
        }
        let a = self.a() as f64;
        let b = self.b() as f64;
        let mut s = (a + b - 1.0) * (-y).ln_1p() + ((a - 1.0) * y).ln_1p();
        for &d in &self.degrees {
            s -= ((d as f64 - 1.0) * y).ln_1p();
        }
        s
    }
}

/// `V₁ × V₁` block, 1 on the diagonal and x² elsewhere.
pub fn base_matrix(v1: &[usize], x: f64) -> SymMatrix {
    SymMatrix::constant_off_diagonal(v1.len(), x * x).with_index_set(v1.to_vec())
}

/// Star block on `{v} ∪ N(v)`, labelled `[v, N(v)...]`.
pub fn star_matrix(v: usize, neighbors: &[usize], x: f64) -> SymMatrix {
    let mut labels = vec![v];
    labels.extend_from_slice(neighbors);
    SymMatrix::from_fn(labels.len(), |i, j| {
        if i == j {
            1.0
        } else if j == 0 {
            x
        } else {
            x * x
        }
    })
    .with_index_set(labels)
}

/// Witness matrix in the best orientation, indexed by vertex.
pub fn witness_matrix(g: &Graph, x: f64) -> Result<SymMatrix, WitnessError> {
    let plan = WitnessPlan::best(g)?;
    build(g, x, &plan)
}

/// Glues the stars onto the base in `plan.centers` order and checks the
/// result is in Ψ(G, x).
pub fn build(g: &Graph, x: f64, plan: &WitnessPlan) -> Result<SymMatrix, WitnessError> {
    if !(x.is_finite() && x.abs() < 1.0) {
        return Err(WitnessError::Boundary(x));
    }
    let n = g.vertex_count();
    let mut out = SymMatrix::identity(n);
    if !plan.base.is_empty() {
        let adj = g.adjacency();
        let mut core = base_matrix(&plan.base, x);
        for &v in &plan.centers {
            core = couple(&core, &star_matrix(v, &adj[v], x), 1e-14)?;
        }
        for (i, &li) in core.index_set().iter().enumerate() {
            for (j, &lj) in core.index_set().iter().enumerate().take(i + 1) {
                out.set(li, lj, core.get(i, j));
            }
        }
    }
    let report = is_in_psi(&out, g, x, 1e-12);
    if !report.member {
        if let Some((index, pivot)) = report.failing_pivot {
            return Err(LinalgError::NotPd { index, pivot }.into());
        }
        return Err(WitnessError::NotInPsi(report.max_edge_deviation.max(report.max_diagonal_deviation)));
    }
    Ok(out)
}

/// Closed-form log determinant of the witness in the best orientation.
pub fn witness_bound(g: &Graph, x: f64) -> Result<f64, WitnessError> {
    Ok(WitnessPlan::best(g)?.log_bound(x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    /// Whether `Σ d(d−1) ≥ a(a−1)` holds for the plan's degrees.
    pub degree_condition: bool,
    /// `a(a−1)/(1+(a−1)y) ≤ Σ d(d−1)/(1+(d−1)y)` at every grid point.
    pub derivative_inequality: bool,
    /// `log_bound ≥ |E| ln(1−y) − 1e−12` at every grid point (y = x²).
    pub bound_dominates: bool,
    /// Smallest value of `log_bound − |E| ln(1−y)` over the grid.
    pub min_gap: f64,
}

impl LemmaCheck {
    /// True when the checks agree with the degree inequality: if the degree condition
    /// holds, both inequalities must hold on the grid.
    pub fn consistent(&self) -> bool {
        !self.degree_condition || (self.derivative_inequality && self.bound_dominates)
    }
}

/// Evaluates the log-derivative inequality and the bound comparison on a
/// grid of `y = x²` values in (0, 1).
pub fn lemma_check(a: usize, degrees: &[usize], y_grid: &[f64]) -> LemmaCheck {
    let af = a as f64;
    let edges: usize = degrees.iter().sum();
    let lhs_cond = degrees.iter().map(|&d| d * d.saturating_sub(1)).sum::<usize>();
    let plan = WitnessPlan {
        orientation: Orientation::LeftIsV1,
        base: (0..a).collect(),
        centers: (0..degrees.len()).collect(),
        degrees: degrees.to_vec(),
        isolated: Vec::new(),
    };
    let mut derivative_inequality = true;
    let mut min_gap = f64::INFINITY;
    for &y in y_grid {
        let lhs = af * (af - 1.0) / (1.0 + (af - 1.0) * y);
        let rhs: f64 = degrees
            .iter()
            .map(|&d| {
                let d = d as f64;
                d * (d - 1.0) / (1.0 + (d - 1.0) * y)
            })
            .sum();
        if lhs > rhs * (1.0 + 1e-15) + 1e-15 {
            derivative_inequality = false;
        }
        let gap = plan.log_bound(y.sqrt()) - edges as f64 * (-y).ln_1p();
        min_gap = min_gap.min(gap);
    }
    LemmaCheck {
        degree_condition: lhs_cond >= a * a.saturating_sub(1),
        derivative_inequality,
        bound_dominates: min_gap >= -1e-12,
        min_gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::make_family;

    fn det(m: &SymMatrix) -> f64 {
        m.logdet().unwrap().exp()
    }

    #[test]
    fn base_matrix_examples() {
        assert_eq!(det(&base_matrix(&[7], 0.5)), 1.0);
        assert!((det(&base_matrix(&[0, 1], 0.5)) - 0.9375).abs() < 1e-14);
        assert!((det(&base_matrix(&[0, 1, 2], 0.5)) - 0.84375).abs() < 1e-14);
        for a in 1..7usize {
            for x in [0.1, 0.5, 0.9] {
                let y: f64 = x * x;
                let want = (1.0 - y).powi(a as i32 - 1) * (1.0 + (a as f64 - 1.0) * y);
                let got = det(&base_matrix(&(0..a).collect::<Vec<_>>(), x));
                assert!((got / want - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn star_matrix_examples() {
        assert!((det(&star_matrix(0, &[1], 0.5)) - 0.75).abs() < 1e-15);
        let s = star_matrix(0, &[1, 2], 0.5);
        assert!((det(&s) - 0.5625).abs() < 1e-14);
        assert!((det(&s.block_by_labels(&[1, 2]).unwrap()) - 0.9375).abs() < 1e-14);
    }

    #[test]
    fn single_edge_witness() {
        let g = make_family("path:1").unwrap();
        let m = witness_matrix(&g, 0.6).unwrap();
        assert!((det(&m) - 0.64).abs() < 1e-14);
        assert!((witness_bound(&g, 0.6).unwrap() - 0.64f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn star_with_center_in_v2_meets_tree_formula() {
        let g = make_family("star:5").unwrap();
        let bip = g.bipartition().unwrap();
        // center 0 is on the left; put leaves in V₁
        let plan = WitnessPlan::new(&g, &bip, Orientation::RightIsV1);
        assert_eq!((plan.a(), plan.b(), plan.degrees.clone()), (5, 1, vec![5]));
        let x: f64 = 0.45;
        let m = build(&g, x, &plan).unwrap();
        let want = (1.0 - x * x).powi(5);
        assert!((det(&m) / want - 1.0).abs() < 1e-12);
        assert!((plan.log_bound(x) - want.ln()).abs() < 1e-12);
    }

    #[test]
    fn moebius_ladder_closed_form() {
        let g = make_family("moebius-ladder").unwrap();
        let m = witness_matrix(&g, 0.5).unwrap();
        // a = b = 5, every d = 3: exponent a + b − 1 = 9
        let want = 0.75f64.powi(9) * 2.0 / 1.5f64.powi(5);
        assert!((det(&m) / want - 1.0).abs() < 1e-10);
    }

    #[test]
    fn order_independent_determinant() {
        let k34 = make_family("complete-bipartite:3,4").unwrap();
        let g = Graph::from_edges(7, k34.edges().filter(|&(u, v)| (u + v) % 4 != 0)).unwrap();
        let mut plan = WitnessPlan::best(&g).unwrap();
        let d1 = det(&build(&g, 0.7, &plan).unwrap());
        plan.centers.reverse();
        plan.degrees.reverse();
        let d2 = det(&build(&g, 0.7, &plan).unwrap());
        assert!((d1 / d2 - 1.0).abs() < 1e-12);
        assert!((d1.ln() - plan.log_bound(0.7)).abs() < 1e-10);
    }

    #[test]
    fn lemma_examples() {
        // moebius ladder at y = 0.25: LHS 10, RHS 20
        let c = lemma_check(5, &[3; 5], &[0.25]);
        assert!(c.degree_condition && c.derivative_inequality && c.bound_dominates);

        let c = lemma_check(3, &[1, 1, 1], &[0.3, 0.6]);
        assert!(!c.degree_condition);

        let c = lemma_check(2, &[1, 1], &[0.5]);
        assert!(!c.degree_condition);
        let c = lemma_check(1, &[1], &[0.5]);
        assert!(c.degree_condition && c.derivative_inequality);

        let grid: Vec<f64> = (1..100).map(|i| (i as f64 / 100.0).powi(2)).collect();
        let c = lemma_check(3, &[3, 3, 3, 3], &grid);
        assert!(c.degree_condition && c.consistent());
    }

    #[test]
    fn rejects_non_bipartite_and_boundary() {
        assert!(matches!(
            witness_matrix(&make_family("cycle:5").unwrap(), 0.3),
            Err(WitnessError::NotBipartite)
        ));
        assert!(matches!(
            witness_matrix(&make_family("cycle:4").unwrap(), 1.0),
            Err(WitnessError::Boundary(_))
        ));
    }

    #[test]
    fn isolated_vertices_are_independent() {
        let g = make_family("path:2").unwrap().disjoint_union(&Graph::empty(2));
        let m = witness_matrix(&g, 0.5).unwrap();
        assert_eq!(m.get(3, 3), 1.0);
        assert_eq!(m.get(0, 4), 0.0);
        let plan = WitnessPlan::best(&g).unwrap();
        assert_eq!(plan.isolated, vec![3, 4]);
        assert!((m.logdet().unwrap() - plan.log_bound(0.5)).abs() < 1e-12);
    }
}
