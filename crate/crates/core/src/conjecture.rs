//! Sweeps of `ln τ(G,x) − |E| ln(1−x²)` over graphs and x-grids.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graphs::{thm2_condition, Graph};
use crate::linalg::LinalgError;
use crate::maxdet::{self, edge_bound_log, entropy_lhs, MaxdetError, SolveOptions, SweepOrder};
use crate::witness::{self, WitnessError};

/// Margins below this are treated as genuine violations, above it as noise.
pub const VIOLATION_THRESHOLD: f64 = -1e-8;
/// Tolerance for the confirmation re-run of a suspected violation.
pub const RERUN_TOL: f64 = 1e-13;
/// Slack allowed in `witness_bound ≤ ln τ`.
pub const WITNESS_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    Ok,
    Infeasible,
    NoConvergence,
    /// Negative margin that survived the tight re-run.
    ConjectureViolation,
    /// Witness determinant exceeded the computed maximum.
    CrossCheckFailure,
}

/// One (graph, x) evaluation. Column order here is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub graph: String,
    pub vertices: usize,
    pub edges: usize,
    pub x: f64,
    pub tau_log: Option<f64>,
    pub bound_log: f64,
    pub margin: Option<f64>,
    pub witness_bound_log: Option<f64>,
    pub thm2_holds: Option<bool>,
    pub status: RowStatus,
    pub residual: Option<f64>,
    pub passes: Option<usize>,
    /// Milliseconds; only serialized when timings are requested.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub solve: SolveOptions,
    /// Record wall time per row. Off by default so reports are byte-stable.
    pub timings: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            solve: SolveOptions::default(),
            timings: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn violations(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.status == RowStatus::ConjectureViolation)
    }

    pub fn count(&self, status: RowStatus) -> usize {
        self.rows.iter().filter(|r| r.status == status).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(CsvRow::from(row))?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}

// csv cannot serialize enums inside structs with serde's rename, so status
// becomes a plain string column
#[derive(Serialize)]
struct CsvRow<'a> {
    graph: &'a str,
    vertices: usize,
    edges: usize,
    x: f64,
    tau_log: Option<f64>,
    bound_log: f64,
    margin: Option<f64>,
    witness_bound_log: Option<f64>,
    thm2_holds: Option<bool>,
    status: String,
    residual: Option<f64>,
    passes: Option<usize>,
    wall_ms: Option<f64>,
}

impl<'a> From<&'a SweepRow> for CsvRow<'a> {
    fn from(r: &'a SweepRow) -> Self {
        CsvRow {
            graph: &r.graph,
            vertices: r.vertices,
            edges: r.edges,
            x: r.x,
            tau_log: r.tau_log,
            bound_log: r.bound_log,
            margin: r.margin,
            witness_bound_log: r.witness_bound_log,
            thm2_holds: r.thm2_holds,
            status: serde_json::to_value(r.status)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default(),
            residual: r.residual,
            passes: r.passes,
            wall_ms: r.wall_ms,
        }
    }
}

/// Evaluates every (graph, x) pair, in parallel, and returns rows ordered
/// by graph (input order) then x (input order). Per-row failures are
/// recorded in the row and never abort the sweep.
pub fn sweep(graphs: &[Graph], x_grid: &[f64], opts: &SweepOptions) -> SweepReport {
    let jobs: Vec<(usize, usize)> = (0..graphs.len())
        .flat_map(|gi| (0..x_grid.len()).map(move |xi| (gi, xi)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(gi, xi)| evaluate(&graphs[gi], x_grid[xi], opts))
        .collect();
    SweepReport { rows }
}

/// One row of a sweep.
pub fn evaluate(g: &Graph, x: f64, opts: &SweepOptions) -> SweepRow {
    let start = Instant::now();
    let bound_log = edge_bound_log(g, x);
    let mut row = SweepRow {
        graph: g.label(),
        vertices: g.vertex_count(),
        edges: g.edge_count(),
        x,
        tau_log: None,
        bound_log,
        margin: None,
        witness_bound_log: None,
        thm2_holds: None,
        status: RowStatus::Ok,
        residual: None,
        passes: None,
        wall_ms: None,
    };
    if let Ok(verdict) = thm2_condition(g) {
        row.thm2_holds = Some(verdict.holds);
        row.witness_bound_log = witness::witness_bound(g, x).ok();
    }
    match maxdet::sigma_with(g, x, &opts.solve) {
        Ok(c) => {
            let mut logdet = c.logdet;
            row.residual = Some(c.state.residual);
            row.passes = Some(c.state.passes);
            if logdet - bound_log < VIOLATION_THRESHOLD {
                let tight = SolveOptions {
                    tol: RERUN_TOL,
                    max_passes: opts.solve.max_passes.saturating_mul(10),
                    order: SweepOrder::Canonical,
                };
                let rerun = match maxdet::sigma_with(g, x, &tight) {
                    Ok(c) => Some(c),
                    Err(MaxdetError::NoConvergence(c)) => Some(*c),
                    Err(_) => None,
                };
                if let Some(c) = rerun {
                    logdet = logdet.max(c.logdet);
                    row.residual = Some(c.state.residual);
                    row.passes = Some(c.state.passes);
                }
                if logdet - bound_log < VIOLATION_THRESHOLD {
                    row.status = RowStatus::ConjectureViolation;
                }
            }
            row.tau_log = Some(logdet);
            row.margin = Some(logdet - bound_log);
            if let Some(w) = row.witness_bound_log {
                if w > logdet + WITNESS_SLACK && row.status == RowStatus::Ok {
                    row.status = RowStatus::CrossCheckFailure;
                }
            }
        }
        Err(MaxdetError::Infeasible(_)) => row.status = RowStatus::Infeasible,
        Err(MaxdetError::NoConvergence(c)) => {
            row.status = RowStatus::NoConvergence;
            row.tau_log = Some(c.logdet);
            row.margin = Some(c.logdet - bound_log);
            row.residual = Some(c.state.residual);
            row.passes = Some(c.state.passes);
        }
        Err(_) => row.status = RowStatus::Infeasible,
    }
    if opts.timings {
        row.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    row
}

/// Evenly spaced grid `lo, lo+step, …` up to `hi` inclusive (within half a step).
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 0.5).floor().max(0.0) as usize;
    // round to 12 decimals so 0.1*3 prints as 0.3
    (0..=count)
        .map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12)
        .collect()
}

/// The default scan grid {0.02, 0.04, …, 0.98}.
pub fn default_grid() -> Vec<f64> {
    grid(0.02, 0.98, 0.02)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub graph: String,
    pub x: f64,
    pub margin: f64,
    pub lhs_sigma: f64,
    pub lhs_witness: Option<f64>,
    /// `lhs_sigma == margin / 2` within 1e-9.
    pub half_margin_identity: bool,
    /// Both left sides ≥ −1e−9 (only meaningful when `margin ≥ 0`).
    pub nonnegative: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum EntropyError {
    #[error(transparent)]
    Maxdet(#[from] MaxdetError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Entropy-inequality left side at Σ(G,x) and, for bipartite G, at the
/// witness matrix.
pub fn entropy_report(g: &Graph, x: f64) -> Result<EntropyReport, EntropyError> {
    let c = maxdet::sigma(g, x)?;
    let margin = c.logdet - edge_bound_log(g, x);
    let lhs_sigma = entropy_lhs(&c.sigma, g)?;
    let lhs_witness = match witness::witness_matrix(g, x) {
        Ok(m) => Some(entropy_lhs(&m, g)?),
        Err(WitnessError::NotBipartite) => None,
        Err(WitnessError::Linalg(e)) => return Err(e.into()),
        Err(_) => None,
    };
    Ok(EntropyReport {
        graph: g.label(),
        x,
        margin,
        lhs_sigma,
        lhs_witness,
        half_margin_identity: (lhs_sigma - margin / 2.0).abs() < 1e-9,
        nonnegative: lhs_sigma >= -1e-9 && lhs_witness.map_or(true, |w| w >= -1e-9),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::make_family;

    #[test]
    fn grid_has_49_points() {
        let g = default_grid();
        assert_eq!(g.len(), 49);
        assert_eq!(g[0], 0.02);
        assert_eq!(g[48], 0.98);
        assert_eq!(grid(0.1, 0.9, 0.1).len(), 9);
    }

    #[test]
    fn triangle_negative_row_is_infeasible() {
        let g = make_family("cycle:3").unwrap();
        let r = evaluate(&g, -0.9, &SweepOptions::default());
        assert_eq!(r.status, RowStatus::Infeasible);
        assert!(r.margin.is_none());
    }

    #[test]
    fn trees_have_zero_margin() {
        let graphs: Vec<Graph> = (0..4).map(|s| make_family(&format!("tree-random:{}:{s}", 3 + s)).unwrap()).collect();
        let report = sweep(&graphs, &grid(0.1, 0.9, 0.1), &SweepOptions::default());
        assert_eq!(report.rows.len(), 36);
        for r in &report.rows {
            assert!(r.margin.unwrap().abs() < 1e-9, "{r:?}");
            assert_eq!(r.status, RowStatus::Ok);
        }
    }

    #[test]
    fn report_is_deterministic_and_ordered() {
        let graphs = vec![make_family("cycle:5").unwrap(), make_family("cycle:4").unwrap()];
        let xs = [0.7, 0.3];
        let a = sweep(&graphs, &xs, &SweepOptions::default());
        let b = sweep(&graphs, &xs, &SweepOptions::default());
        assert_eq!(a.to_json(), b.to_json());
        let order: Vec<(String, f64)> = a.rows.iter().map(|r| (r.graph.clone(), r.x)).collect();
        assert_eq!(
            order,
            vec![
                ("cycle:5".into(), 0.7),
                ("cycle:5".into(), 0.3),
                ("cycle:4".into(), 0.7),
                ("cycle:4".into(), 0.3)
            ]
        );
        let csv = a.to_csv().unwrap();
        let header = csv.lines().next().unwrap();
        assert_eq!(
            header,
            "graph,vertices,edges,x,tau_log,bound_log,margin,witness_bound_log,thm2_holds,status,residual,passes,wall_ms"
        );
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn entropy_report_for_even_cycle() {
        let g = make_family("cycle:6").unwrap();
        let r = entropy_report(&g, 0.6).unwrap();
        assert!(r.half_margin_identity);
        assert!(r.nonnegative);
        assert!(r.lhs_witness.unwrap() <= r.lhs_sigma + 1e-9);
    }
}
