//! Determinant-maximizing completion Σ(G, x) by recoupling.
//!
//! Each step picks a non-edge (v, w) and replaces the entry with the value
//! that makes v and w conditionally independent given the other
//! coordinates, i.e. the coupling of the two principal blocks that omit v
//! and w respectively. The determinant never decreases. A sweep visits
//! every non-edge once; iteration stops when the inverse vanishes on all
//! non-edges, which is the optimality condition for the max-det completion.

use serde::{Deserialize, Serialize};

use crate::graphs::Graph;
use crate::linalg::{gaussian_entropy, LinalgError, SymMatrix};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_PASSES: usize = 10_000;

#[derive(Debug, Clone, thiserror::Error)]
pub enum MaxdetError {
    #[error("edge value {0} outside (-1, 1)")]
    OutOfRange(f64),
    #[error("no positive definite starting matrix found: {}", summarize(.0))]
    Infeasible(Vec<StrategyFailure>),
    #[error("no convergence after {} passes (residual {:e})", .0.state.passes, .0.state.residual)]
    NoConvergence(Box<Completion>),
    #[error("({0},{1}) is an edge")]
    NotANonEdge(usize, usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn summarize(failures: &[StrategyFailure]) -> String {
    failures
        .iter()
        .map(|f| format!("{:?} pivot {} = {:e}", f.strategy, f.index, f.pivot))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    /// All off-diagonal entries equal to x.
    AllX,
    /// Identity plus x times the adjacency matrix.
    Adjacency,
    /// x raised to the graph distance, 0 across components.
    DistancePower,
}

impl InitStrategy {
    pub const LADDER: [InitStrategy; 3] = [InitStrategy::AllX, InitStrategy::Adjacency, InitStrategy::DistancePower];

    pub fn build(self, g: &Graph, x: f64) -> SymMatrix {
        let n = g.vertex_count();
        match self {
            InitStrategy::AllX => SymMatrix::constant_off_diagonal(n, x),
            InitStrategy::Adjacency => SymMatrix::from_fn(n, |i, j| {
                if i == j {
                    1.0
                } else if g.has_edge(i, j) {
                    x
                } else {
                    0.0
                }
            }),
            InitStrategy::DistancePower => {
                let dist: Vec<Vec<Option<usize>>> = (0..n).map(|v| g.distances_from(v)).collect();
                SymMatrix::from_fn(n, |i, j| match dist[i][j] {
                    Some(d) => x.powi(d as i32),
                    None => 0.0,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyFailure {
    pub strategy: InitStrategy,
    pub index: usize,
    pub pivot: f64,
}

/// A positive definite member of Ψ(G, x) to start recoupling from, plus
/// the strategy that produced it.
///
/// For bipartite graphs and negative x the matrix is built at |x| and
/// conjugated by the ±1 diagonal of the bipartition.
pub fn init_matrix(g: &Graph, x: f64) -> Result<(SymMatrix, InitStrategy), MaxdetError> {
    check_range(x)?;
    if x < 0.0 {
        if let Some(bip) = g.bipartition() {
            let (m, s) = init_matrix(g, -x)?;
            return Ok((m.conjugate_signs(&bip.signs(g.vertex_count())), s));
        }
    }
    let mut failures = Vec::new();
    for strategy in InitStrategy::LADDER {
        let m = strategy.build(g, x);
        match m.cholesky() {
            Ok(_) => return Ok((m, strategy)),
            Err(LinalgError::NotPd { index, pivot }) => failures.push(StrategyFailure { strategy, index, pivot }),
            Err(e) => return Err(e.into()),
        }
    }
    Err(MaxdetError::Infeasible(failures))
}

fn check_range(x: f64) -> Result<(), MaxdetError> {
    if x.is_finite() && x > -1.0 && x < 1.0 {
        Ok(())
    } else {
        Err(MaxdetError::OutOfRange(x))
    }
}

/// One recoupling step on the non-edge (v, w), computed directly from
/// `M_{v,Z} M_{Z,Z}⁻¹ M_{Z,w}` with Z = V ∖ {v, w}.
pub fn recouple_step(m: &SymMatrix, v: usize, w: usize, g: &Graph) -> Result<SymMatrix, MaxdetError> {
    if v == w || g.has_edge(v, w) {
        return Err(MaxdetError::NotANonEdge(v, w));
    }
    let rest: Vec<usize> = (0..m.dim()).filter(|&u| u != v && u != w).collect();
    let value = if rest.is_empty() {
        0.0
    } else {
        let chol = m.principal(&rest).cholesky()?;
        let mzw: Vec<f64> = rest.iter().map(|&z| m.get(z, w)).collect();
        let y = chol.solve(&mzw);
        rest.iter().zip(&y).map(|(&z, yz)| m.get(v, z) * yz).sum()
    };
    let mut out = m.clone();
    out.set(v, w, value);
    Ok(out)
}

/// Order in which each sweep visits the non-edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepOrder {
    #[default]
    Canonical,
    Reversed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_passes: usize,
    pub order: SweepOrder,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: DEFAULT_TOL,
            max_passes: DEFAULT_MAX_PASSES,
            order: SweepOrder::Canonical,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecouplingState {
    pub passes: usize,
    /// max over non-edges of |(M⁻¹)_{vw}|, from a fresh factorization.
    pub residual: f64,
    /// logdet after initialization and after every pass.
    pub det_history: Vec<f64>,
    pub init: InitStrategy,
    /// Set when the problem was solved at |x| and sign-conjugated.
    pub sign_reduced: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub sigma: SymMatrix,
    pub logdet: f64,
    pub state: RecouplingState,
}

impl Completion {
    pub fn tau(&self) -> f64 {
        self.logdet.exp()
    }
}

/// Max-det completion with default tolerance and pass cap.
pub fn sigma(g: &Graph, x: f64) -> Result<Completion, MaxdetError> {
    sigma_with(g, x, &SolveOptions::default())
}

pub fn sigma_with(g: &Graph, x: f64, opts: &SolveOptions) -> Result<Completion, MaxdetError> {
    check_range(x)?;
    if x < 0.0 {
        if let Some(bip) = g.bipartition() {
            let signs = bip.signs(g.vertex_count());
            let conj = |mut c: Completion| {
                c.sigma = c.sigma.conjugate_signs(&signs);
                c.state.sign_reduced = true;
                c
            };
            return match sigma_with(g, -x, opts) {
                Ok(c) => Ok(conj(c)),
                Err(MaxdetError::NoConvergence(c)) => Err(MaxdetError::NoConvergence(Box::new(conj(*c)))),
                Err(e) => Err(e),
            };
        }
    }
    let components = g.components();
    if components.len() > 1 {
        return solve_by_components(g, x, opts, &components);
    }
    let (start, init) = init_matrix(g, x)?;
    let mut non_edges = g.non_edges();
    if opts.order == SweepOrder::Reversed {
        non_edges.reverse();
    }
    let mut m = start;
    let mut state = RecouplingState {
        passes: 0,
        residual: 0.0,
        det_history: Vec::new(),
        init,
        sign_reduced: false,
    };
    loop {
        let chol = m.cholesky()?;
        state.det_history.push(chol.logdet());
        let mut inv = chol.inverse();
        state.residual = non_edges.iter().map(|&(v, w)| inv.get(v, w).abs()).fold(0.0, f64::max);
        if state.residual < opts.tol {
            break;
        }
        if state.passes >= opts.max_passes {
            let logdet = *state.det_history.last().unwrap();
            return Err(MaxdetError::NoConvergence(Box::new(Completion { sigma: m, logdet, state })));
        }
        for &(v, w) in &non_edges {
            rank_two_step(&mut m, &mut inv, v, w);
        }
        state.passes += 1;
    }
    let logdet = *state.det_history.last().unwrap();
    Ok(Completion { sigma: m, logdet, state })
}

/// The maximizer is block diagonal over connected components (zero
/// entries between components already satisfy the inverse-support
/// condition), so each component is recoupled on its own.
fn solve_by_components(g: &Graph, x: f64, opts: &SolveOptions, components: &[Vec<usize>]) -> Result<Completion, MaxdetError> {
    let mut sigma = SymMatrix::identity(g.vertex_count());
    let mut logdet = 0.0;
    let mut state = RecouplingState {
        passes: 0,
        residual: 0.0,
        det_history: Vec::new(),
        init: InitStrategy::AllX,
        sign_reduced: false,
    };
    let mut converged = true;
    let mut histories = Vec::new();
    for comp in components {
        let part = match sigma_with(&g.induced(comp), x, opts) {
            Ok(c) => c,
            Err(MaxdetError::NoConvergence(c)) => {
                converged = false;
                *c
            }
            Err(e) => return Err(e),
        };
        for (i, &u) in comp.iter().enumerate() {
            for (j, &v) in comp.iter().enumerate().take(i) {
                sigma.set(u, v, part.sigma.get(i, j));
            }
        }
        logdet += part.logdet;
        state.passes = state.passes.max(part.state.passes);
        state.residual = state.residual.max(part.state.residual);
        state.sign_reduced |= part.state.sign_reduced;
        let rung = |s: InitStrategy| InitStrategy::LADDER.iter().position(|&l| l == s);
        if rung(part.state.init) > rung(state.init) {
            state.init = part.state.init;
        }
        histories.push(part.state.det_history);
    }
    // total logdet after each pass; finished components hold their last value
    let len = histories.iter().map(Vec::len).max().unwrap_or(0);
    state.det_history = (0..len)
        .map(|k| histories.iter().map(|h| h[k.min(h.len() - 1)]).sum())
        .collect();
    let c = Completion { sigma, logdet, state };
    if converged {
        Ok(c)
    } else {
        Err(MaxdetError::NoConvergence(Box::new(c)))
    }
}

/// In-place recoupling on (v, w) using the current inverse `p`, followed by
/// a Woodbury update of `p`. Returns the logdet increase
/// `−ln(1 − p_vw² / (p_vv p_ww))`.
fn rank_two_step(m: &mut SymMatrix, p: &mut SymMatrix, v: usize, w: usize) -> f64 {
    let (pvv, pww, pvw) = (p.get(v, v), p.get(w, w), p.get(v, w));
    let schur = pvv * pww - pvw * pvw;
    let delta = pvw / schur;
    if delta == 0.0 {
        return 0.0;
    }
    m.set(v, w, m.get(v, w) + delta);
    // M' = M + δ(e_v e_wᵀ + e_w e_vᵀ) = M + U C Uᵀ with U = [e_v e_w], C = δJ.
    // p' = p − p U (I + C Uᵀ p U)⁻¹ C Uᵀ p
    let k = [[1.0 + delta * pvw, delta * pww], [delta * pvv, 1.0 + delta * pvw]];
    let kdet = k[0][0] * k[1][1] - k[0][1] * k[1][0];
    let kinv = [[k[1][1] / kdet, -k[0][1] / kdet], [-k[1][0] / kdet, k[0][0] / kdet]];
    // G = K⁻¹ C = K⁻¹ δJ
    let gm = [
        [delta * kinv[0][1], delta * kinv[0][0]],
        [delta * kinv[1][1], delta * kinv[1][0]],
    ];
    let n = m.dim();
    let col_v: Vec<f64> = (0..n).map(|i| p.get(i, v)).collect();
    let col_w: Vec<f64> = (0..n).map(|i| p.get(i, w)).collect();
    for i in 0..n {
        let (ai, bi) = (col_v[i], col_w[i]);
        let left = [ai * gm[0][0] + bi * gm[1][0], ai * gm[0][1] + bi * gm[1][1]];
        for j in 0..=i {
            let upd = left[0] * col_v[j] + left[1] * col_w[j];
            p.set(i, j, p.get(i, j) - upd);
        }
    }
    -(1.0 - pvw * pvw / (pvv * pww)).ln()
}

/// τ(G, x) = det Σ(G, x).
pub fn tau(g: &Graph, x: f64) -> Result<f64, MaxdetError> {
    Ok(sigma(g, x)?.tau())
}

/// `ln τ(G,x) − |E|·ln(1 − x²)`, evaluated in the log domain.
pub fn conjecture_margin(g: &Graph, x: f64) -> Result<f64, MaxdetError> {
    let c = sigma(g, x)?;
    Ok(margin_from_logdet(g, x, c.logdet))
}

pub fn edge_bound_log(g: &Graph, x: f64) -> f64 {
    g.edge_count() as f64 * (-x * x).ln_1p()
}

pub fn margin_from_logdet(g: &Graph, x: f64, logdet: f64) -> f64 {
    logdet - edge_bound_log(g, x)
}

/// Gaussian differential entropy of a covariance matrix.
pub fn differential_entropy(m: &SymMatrix) -> Result<f64, LinalgError> {
    m.differential_entropy()
}

/// `D(X_V) − Σ_{edges} D(X_i, X_j) + Σ_v (deg v − 1)·D(X_v)` for the Gaussian
/// field with covariance `m`.
///
/// For a homogeneous field with edge correlation x this equals
/// `½(logdet M − |E| ln(1 − x²))`.
pub fn entropy_lhs(m: &SymMatrix, g: &Graph) -> Result<f64, LinalgError> {
    let mut total = m.differential_entropy()?;
    for (u, v) in g.edges() {
        total -= m.principal(&[u, v]).differential_entropy()?;
    }
    for (v, d) in g.degrees().into_iter().enumerate() {
        let var = m.get(v, v);
        if !(var > 0.0) {
            return Err(LinalgError::NotPd { index: v, pivot: var });
        }
        total += (d as f64 - 1.0) * gaussian_entropy(1, var.ln());
    }
    Ok(total)
}

/// Common edge value of `m` over `g`, if all edge entries agree within `tol`.
pub fn homogeneous_edge_value(m: &SymMatrix, g: &Graph, tol: f64) -> Option<f64> {
    let mut edges = g.edges();
    let (u0, v0) = edges.next()?;
    let x = m.get(u0, v0);
    edges.all(|(u, v)| (m.get(u, v) - x).abs() <= tol).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::make_family;
    use crate::linalg::{couple, is_in_psi};

    #[test]
    fn complete_graph_needs_no_passes() {
        let g = make_family("complete:5").unwrap();
        let c = sigma(&g, 0.4).unwrap();
        assert_eq!(c.state.passes, 0);
        assert_eq!(c.sigma, SymMatrix::constant_off_diagonal(5, 0.4));
        assert_eq!(c.state.init, InitStrategy::AllX);
    }

    #[test]
    fn triangle_infeasible_at_minus_point_nine() {
        let g = make_family("cycle:3").unwrap();
        match init_matrix(&g, -0.9) {
            Err(MaxdetError::Infeasible(f)) => assert_eq!(f.len(), 3),
            other => panic!("expected Infeasible, got {other:?}"),
        }
        assert!(matches!(sigma(&g, -0.9), Err(MaxdetError::Infeasible(_))));
    }

    #[test]
    fn bipartite_negative_uses_sign_reduction() {
        let g = make_family("cycle:4").unwrap();
        let (m, _) = init_matrix(&g, -0.5).unwrap();
        assert!(is_in_psi(&m, &g, -0.5, 1e-15).member);
        let c = sigma(&g, -0.5).unwrap();
        assert!(c.state.sign_reduced);
        let pos = sigma(&g, 0.5).unwrap();
        assert!((c.logdet - pos.logdet).abs() < 1e-14);
        assert!(is_in_psi(&c.sigma, &g, -0.5, 1e-12).member);
    }

    #[test]
    fn out_of_range_rejected() {
        let g = make_family("path:1").unwrap();
        assert!(matches!(sigma(&g, 1.0), Err(MaxdetError::OutOfRange(_))));
        assert!(matches!(sigma(&g, f64::NAN), Err(MaxdetError::OutOfRange(_))));
    }

    #[test]
    fn path2_single_step() {
        let g = make_family("path:2").unwrap();
        let m = SymMatrix::constant_off_diagonal(3, 0.5);
        let d0 = m.logdet().unwrap().exp();
        assert!((d0 - 0.5).abs() < 1e-14);
        let m1 = recouple_step(&m, 0, 2, &g).unwrap();
        assert!((m1.get(0, 2) - 0.25).abs() < 1e-15);
        assert!((m1.logdet().unwrap().exp() - 0.5625).abs() < 1e-14);
        // fixed point
        let m2 = recouple_step(&m1, 0, 2, &g).unwrap();
        assert!(m2.max_abs_diff(&m1) < 1e-15);
        assert!(matches!(recouple_step(&m, 0, 1, &g), Err(MaxdetError::NotANonEdge(0, 1))));
    }

    #[test]
    fn step_matches_couple_and_rank_two_update() {
        let g = make_family("cycle:5").unwrap();
        let m = InitStrategy::AllX.build(&g, 0.3);
        let (v, w) = (0, 2);
        let direct = recouple_step(&m, v, w, &g).unwrap();

        let a_pos: Vec<usize> = (0..5).filter(|&u| u != v).collect();
        let b_pos: Vec<usize> = (0..5).filter(|&u| u != w).collect();
        let coupled = couple(&m.principal(&a_pos), &m.principal(&b_pos), 1e-12).unwrap();
        assert!(coupled.max_abs_diff(&direct) < 1e-12);

        let mut fast = m.clone();
        let mut p = m.inverse().unwrap();
        let gain = rank_two_step(&mut fast, &mut p, v, w);
        assert!(fast.max_abs_diff(&direct) < 1e-12);
        assert!(p.max_abs_diff(&direct.inverse().unwrap()) < 1e-10);
        let want = direct.logdet().unwrap() - m.logdet().unwrap();
        assert!((gain - want).abs() < 1e-12);

        // logdet(M') = logdet(A) + logdet(B) − logdet(Z)
        let z: Vec<usize> = (0..5).filter(|&u| u != v && u != w).collect();
        let rhs = m.principal(&a_pos).logdet().unwrap() + m.principal(&b_pos).logdet().unwrap()
            - m.principal(&z).logdet().unwrap();
        assert!((direct.logdet().unwrap() - rhs).abs() < 1e-12);
    }

    #[test]
    fn tree_completion_is_distance_power() {
        let g = make_family("tree-random:8:3").unwrap();
        let x: f64 = 0.7;
        let c = sigma(&g, x).unwrap();
        let dist: Vec<_> = (0..8).map(|v| g.distances_from(v)).collect();
        for i in 0..8 {
            for j in 0..8 {
                let want = x.powi(dist[i][j].unwrap() as i32);
                assert!((c.sigma.get(i, j) - want).abs() < 1e-9);
            }
        }
        assert!((margin_from_logdet(&g, x, c.logdet)).abs() < 1e-9);
    }

    #[test]
    fn complete3_margin() {
        let g = make_family("complete:3").unwrap();
        let c = sigma(&g, 0.5).unwrap();
        assert!((c.tau() - 0.5).abs() < 1e-14);
        let m = conjecture_margin(&g, 0.5).unwrap();
        assert!((m - (0.5f64 / 0.421875).ln()).abs() < 1e-13);
    }

    #[test]
    fn single_edge_margin_zero() {
        let g = make_family("path:1").unwrap();
        for x in [-0.9, -0.3, 0.0, 0.4, 0.95] {
            assert!(conjecture_margin(&g, x).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn entropy_lhs_examples() {
        let g = make_family("cycle:5").unwrap();
        assert!(entropy_lhs(&SymMatrix::identity(5), &g).unwrap().abs() < 1e-12);

        let t = make_family("tree-random:7:11").unwrap();
        let c = sigma(&t, 0.6).unwrap();
        assert!(entropy_lhs(&c.sigma, &t).unwrap().abs() < 1e-9);

        let c4 = make_family("cycle:4").unwrap();
        let x: f64 = 0.3;
        let y = (x * x / 2.0 + x / 2.0).sqrt();
        let c = sigma(&c4, y).unwrap();
        let quartic = 1.0 - 2.0 * x + 2.0 * x.powi(3) - x.powi(4);
        let want = 0.5 * (quartic / (1.0 - y * y).powi(4)).ln();
        assert!((entropy_lhs(&c.sigma, &c4).unwrap() - want).abs() < 1e-9);
        assert_eq!(homogeneous_edge_value(&c.sigma, &c4, 1e-12), Some(y));
    }

    #[test]
    fn det_history_monotone() {
        let g = make_family("gnp:9:0.4:5").unwrap();
        let c = sigma(&g, 0.8).unwrap();
        for w in c.state.det_history.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn no_convergence_carries_best_iterate() {
        let g = make_family("cycle:6").unwrap();
        let opts = SolveOptions {
            tol: 1e-14,
            max_passes: 1,
            order: SweepOrder::Canonical,
        };
        match sigma_with(&g, 0.9, &opts) {
            Err(MaxdetError::NoConvergence(c)) => {
                assert_eq!(c.state.passes, 1);
                assert!(c.state.residual > 0.0);
                assert!(is_in_psi(&c.sigma, &g, 0.9, 1e-12).member);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }
}
