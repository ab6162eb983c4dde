use std::fs;
use std::path::Path;
use std::process::ExitCode;

use recouple_core::conjecture::{self, RowStatus, SweepOptions};
use recouple_core::graphs::{make_family, parse_edge_list, thm2_condition, Graph};
use recouple_core::linalg::{is_in_psi, MatrixDump};
use recouple_core::maxdet::{self, MaxdetError, SolveOptions, SweepOrder};
use recouple_core::series::{self, SeriesError};
use recouple_core::sphere::{self, WeightedGraph};
use recouple_core::witness::{self, WitnessError, WitnessPlan};
use serde_json::{json, Value};

use crate::{Cli, Command, GraphSource, SphereCommand};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Infeasible,
    NoConvergence,
    CrossCheck,
}

impl ErrorKind {
    fn code(self) -> u8 {
        match self {
            ErrorKind::Usage => 2,
            ErrorKind::Infeasible => 3,
            ErrorKind::NoConvergence => 4,
            ErrorKind::CrossCheck => 5,
        }
    }

    fn name(self) -> &'static str {
        match self {
            ErrorKind::Usage => "usage",
            ErrorKind::Infeasible => "infeasible",
            ErrorKind::NoConvergence => "no-convergence",
            ErrorKind::CrossCheck => "cross-check",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    kind: ErrorKind,
    message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Usage,
            message: message.into(),
        }
    }

    fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
        }
    }
}

impl From<MaxdetError> for CliError {
    fn from(e: MaxdetError) -> Self {
        let kind = match &e {
            MaxdetError::Infeasible(_) => ErrorKind::Infeasible,
            MaxdetError::NoConvergence(_) => ErrorKind::NoConvergence,
            MaxdetError::Linalg(recouple_core::linalg::LinalgError::CrossCheck(_)) => ErrorKind::CrossCheck,
            MaxdetError::Linalg(_) => ErrorKind::Infeasible,
            _ => ErrorKind::Usage,
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<WitnessError> for CliError {
    fn from(e: WitnessError) -> Self {
        let kind = match &e {
            WitnessError::NotInPsi(_) | WitnessError::Linalg(_) => ErrorKind::CrossCheck,
            _ => ErrorKind::Usage,
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<SeriesError> for CliError {
    fn from(e: SeriesError) -> Self {
        let kind = match &e {
            SeriesError::NoStabilization { .. } => ErrorKind::NoConvergence,
            SeriesError::NonInteger { .. } | SeriesError::NonUnitDenominator(_) => ErrorKind::CrossCheck,
            _ => ErrorKind::Usage,
        };
        CliError::new(kind, e.to_string())
    }
}

macro_rules! usage_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::usage(e.to_string())
            }
        }
    )*};
}
usage_from!(
    std::io::Error,
    serde_json::Error,
    recouple_core::graphs::GraphError,
    recouple_core::sphere::SphereError,
    csv::Error
);

pub fn fail(e: &CliError) -> ExitCode {
    let line = json!({ "error": e.kind.name(), "code": e.kind.code(), "message": e.message });
    eprintln!("{line}");
    ExitCode::from(e.kind.code())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Tau(a) => tau(a),
        Command::Sweep(a) => sweep(a),
        Command::Witness(a) => witness_cmd(a),
        Command::Series(a) => series_cmd(a),
        Command::Sphere(SphereCommand::DensityCheck(a)) => density_check(a),
        Command::Sphere(SphereCommand::Volume(a)) => volume(a),
        Command::Sphere(SphereCommand::Ldp(a)) => ldp(a),
        Command::Homdensity(a) => homdensity(a),
    }
}

struct Loaded {
    graph: Graph,
    source: Value,
    labels: Option<Vec<u64>>,
}

fn load_graph(src: &GraphSource) -> Result<Loaded, CliError> {
    match (&src.graph, &src.edges) {
        (Some(spec), None) => Ok(Loaded {
            graph: make_family(spec)?,
            source: json!({ "family": spec }),
            labels: None,
        }),
        (None, Some(path)) => {
            let text = fs::read_to_string(path)?;
            let parsed = parse_edge_list(&text)?;
            let name = path.display().to_string();
            Ok(Loaded {
                graph: parsed.graph.with_name(name.clone()),
                source: json!({ "edges_file": name }),
                labels: Some(parsed.labels),
            })
        }
        _ => Err(CliError::usage("exactly one of --graph or --edges is required")),
    }
}

fn graph_info(l: &Loaded) -> Value {
    let mut v = json!({
        "source": l.source,
        "vertices": l.graph.vertex_count(),
        "edges": l.graph.edge_count(),
    });
    if let Some(labels) = &l.labels {
        v["labels"] = json!(labels);
    }
    v
}

fn emit(config: Value, result: Value) -> Result<(), CliError> {
    let doc = json!({ "config": config, "result": result });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn tau(a: &crate::TauArgs) -> Result<(), CliError> {
    let loaded = load_graph(&a.source)?;
    let g = &loaded.graph;
    let opts = SolveOptions {
        tol: a.tol,
        max_passes: a.max_passes,
        order: if a.reversed { SweepOrder::Reversed } else { SweepOrder::Canonical },
    };
    let config = json!({
        "command": "tau",
        "graph": graph_info(&loaded),
        "x": a.x,
        "tol": a.tol,
        "max_passes": a.max_passes,
        "order": opts.order,
        "dump_matrix": a.dump_matrix.as_ref().map(|p| p.display().to_string()),
    });
    let (completion, failure) = match maxdet::sigma_with(g, a.x, &opts) {
        Ok(c) => (c, None),
        Err(MaxdetError::NoConvergence(c)) => {
            let e = CliError::new(
                ErrorKind::NoConvergence,
                format!("no convergence after {} passes (residual {:e})", c.state.passes, c.state.residual),
            );
            (*c, Some(e))
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(path) = &a.dump_matrix {
        write_file(path, &serde_json::to_string_pretty(&MatrixDump::from(&completion.sigma))?)?;
    }
    let bound = maxdet::edge_bound_log(g, a.x);
    eprintln!(
        "{}: tau = {:.12e}, margin = {:.6e}, passes = {}",
        g.label(),
        completion.tau(),
        completion.logdet - bound,
        completion.state.passes
    );
    emit(
        config,
        json!({
            "converged": failure.is_none(),
            "tau": completion.tau(),
            "log_tau": completion.logdet,
            "bound_log": bound,
            "margin": completion.logdet - bound,
            "residual": completion.state.residual,
            "passes": completion.state.passes,
            "init": completion.state.init,
            "sign_reduced": completion.state.sign_reduced,
        }),
    )?;
    failure.map_or(Ok(()), Err)
}

/// Splits comma-separated descriptors, keeping `complete-bipartite:3,4`
/// together (a purely numeric token continues the previous descriptor).
pub fn split_graph_list(items: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for item in items {
        for tok in item.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let numeric = tok.chars().all(|c| c.is_ascii_digit());
            match out.last_mut() {
                Some(prev) if numeric && prev.starts_with("complete-bipartite:") && !prev.contains(',') => {
                    prev.push(',');
                    prev.push_str(tok);
                }
                _ => out.push(tok.to_string()),
            }
        }
    }
    out
}

fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::usage(format!("bad grid `{s}` (expected lo:hi:step)")))?;
    match parts[..] {
        [lo, hi, step] if step > 0.0 && hi >= lo && lo > -1.0 && hi < 1.0 => Ok(conjecture::grid(lo, hi, step)),
        [x] if x > -1.0 && x < 1.0 => Ok(vec![x]),
        _ => Err(CliError::usage(format!("bad grid `{s}` (values must lie in (-1,1))"))),
    }
}

fn sweep(a: &crate::SweepArgs) -> Result<(), CliError> {
    let specs = split_graph_list(&a.graphs);
    let graphs: Vec<Graph> = specs.iter().map(|s| make_family(s)).collect::<Result<_, _>>()?;
    let xs = parse_grid(&a.grid)?;
    let opts = SweepOptions {
        solve: SolveOptions {
            tol: a.tol,
            max_passes: a.max_passes,
            order: SweepOrder::Canonical,
        },
        timings: a.timings,
    };
    let mut report = conjecture::sweep(&graphs, &xs, &opts);
    if a.negative {
        let bip: Vec<Graph> = graphs.iter().filter(|g| g.is_bipartite()).cloned().collect();
        let neg: Vec<f64> = xs.iter().filter(|&&x| x > 0.0).map(|&x| -x).collect();
        report.rows.extend(conjecture::sweep(&bip, &neg, &opts).rows);
    }
    let violations = report.count(RowStatus::ConjectureViolation);
    let cross = report.count(RowStatus::CrossCheckFailure);
    eprintln!(
        "{} rows, {} violations, {} infeasible, {} not converged, {} cross-check failures",
        report.rows.len(),
        violations,
        report.count(RowStatus::Infeasible),
        report.count(RowStatus::NoConvergence),
        cross
    );
    let body = if a.csv {
        report.to_csv()?
    } else {
        let doc = json!({
            "config": {
                "command": "sweep",
                "graphs": specs,
                "grid": xs,
                "negative": a.negative,
                "tol": a.tol,
                "max_passes": a.max_passes,
                "violation_threshold": conjecture::VIOLATION_THRESHOLD,
            },
            "result": report,
        });
        serde_json::to_string_pretty(&doc)? + "\n"
    };
    match &a.out {
        Some(path) => write_file(path, &body)?,
        None => print!("{body}"),
    }
    if cross > 0 {
        return Err(CliError::new(ErrorKind::CrossCheck, format!("{cross} rows failed witness <= tau")));
    }
    Ok(())
}

fn witness_cmd(a: &crate::WitnessArgs) -> Result<(), CliError> {
    let loaded = load_graph(&a.source)?;
    let g = &loaded.graph;
    let verdict = thm2_condition(g).map_err(|_| CliError::usage("graph is not bipartite"))?;
    let plan = WitnessPlan::best(g)?;
    let m = witness::build(g, a.x, &plan)?;
    let cholesky_log = m.logdet().map_err(|e| CliError::new(ErrorKind::CrossCheck, e.to_string()))?;
    let closed_log = plan.log_bound(a.x);
    let bound = maxdet::edge_bound_log(g, a.x);
    let config = json!({ "command": "witness", "graph": graph_info(&loaded), "x": a.x, "compare": a.compare });
    let mut result = json!({
        "witness_det": cholesky_log.exp(),
        "witness_log_det": cholesky_log,
        "closed_form_log": closed_log,
        "bound_log": bound,
        "witness_margin": closed_log - bound,
        "thm2": verdict,
        "plan": plan,
        "in_psi": is_in_psi(&m, g, a.x, 1e-12).member,
        "bound_below_conjecture": closed_log < bound - 1e-12,
    });
    if a.compare {
        let c = maxdet::sigma(g, a.x)?;
        result["log_tau"] = json!(c.logdet);
        result["witness_le_tau"] = json!(closed_log <= c.logdet + conjecture::WITNESS_SLACK);
    }
    eprintln!("{}: witness det = {:.12e}, thm2 holds = {}", g.label(), cholesky_log.exp(), verdict.holds);
    let agree = (cholesky_log - closed_log).abs() <= 1e-10 * closed_log.abs().max(1.0);
    emit(config, result)?;
    if !agree {
        return Err(CliError::new(
            ErrorKind::CrossCheck,
            format!("witness determinant {cholesky_log} disagrees with closed form {closed_log}"),
        ));
    }
    Ok(())
}

fn series_cmd(a: &crate::SeriesArgs) -> Result<(), CliError> {
    let loaded = load_graph(&a.source)?;
    let g = &loaded.graph;
    let lm = series::local_margin_series(g, a.order)?;
    let coeffs = lm.tau.decimal_strings();
    if let Some(path) = &a.out {
        write_file(path, &(serde_json::to_string(&coeffs)? + "\n"))?;
    }
    eprintln!(
        "{}: {} sweeps, first nonzero margin coefficient {:?}",
        g.label(),
        lm.tau.sweeps,
        lm.first_nonzero.as_ref().map(|f| (f.index, f.value.clone()))
    );
    emit(
        json!({
            "command": "series",
            "graph": graph_info(&loaded),
            "order": a.order,
            "out": a.out.as_ref().map(|p| p.display().to_string()),
        }),
        json!({
            "tau_coefficients": coeffs,
            "sweeps": lm.tau.sweeps,
            "margin_coefficients": lm.coefficients.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "first_nonzero": lm.first_nonzero,
            "local_conjecture_verified": lm.locally_verified(),
        }),
    )
}

fn density_check(a: &crate::DensityCheckArgs) -> Result<(), CliError> {
    let config = json!({ "command": "sphere density-check", "k": a.k, "n": a.n, "samples": a.samples, "seed": a.seed });
    if a.k == 2 {
        let ks = sphere::ks_statistic_k2(a.n, a.samples as usize, a.seed)?;
        eprintln!("KS statistic {ks:.5}");
        emit(config, json!({ "test": "ks-offdiagonal", "ks_statistic": ks }))
    } else if a.k >= 3 && a.n > a.k {
        let mc = sphere::normalization_mc(a.k, a.n, a.samples, a.seed)?;
        let z = (mc.estimate - 1.0) / mc.std_error;
        eprintln!("integral {:.5} ± {:.5}", mc.estimate, mc.std_error);
        emit(
            config,
            json!({
                "test": "normalization",
                "integral": mc.estimate,
                "std_error": mc.std_error,
                "z_score": z,
                "within_3_sigma": z.abs() <= 3.0,
            }),
        )
    } else {
        Err(CliError::usage("density-check needs k = 2, or k >= 3 with n > k"))
    }
}

fn volume(a: &crate::VolumeArgs) -> Result<(), CliError> {
    let log_vol = sphere::elliptope_log_volume(a.k);
    let mut result = json!({ "k": a.k, "log_volume": log_vol, "volume": log_vol.exp() });
    if a.mc_samples > 0 {
        if a.k < 2 {
            return Err(CliError::usage("Monte Carlo cross-check needs k >= 2"));
        }
        let mc = sphere::volume_mc(a.k, a.mc_samples, a.seed);
        result["mc_volume"] = json!(mc.estimate);
        result["mc_std_error"] = json!(mc.std_error);
        result["mc_relative_difference"] = json!(mc.estimate / log_vol.exp() - 1.0);
    }
    emit(
        json!({ "command": "sphere volume", "k": a.k, "mc_samples": a.mc_samples, "seed": a.seed }),
        result,
    )
}

fn ldp(a: &crate::LdpArgs) -> Result<(), CliError> {
    let g = make_family(&a.graph)?;
    let k = a.k.unwrap_or(g.vertex_count());
    if k != g.vertex_count() {
        return Err(CliError::usage(format!("--k {k} does not match {} vertices of {}", g.vertex_count(), a.graph)));
    }
    if a.n_list.iter().any(|&n| n < k) {
        return Err(CliError::usage("every n must be at least k"));
    }
    let lo = (a.x - a.eps).max(-1.0 + 1e-12);
    let hi = (a.x + a.eps).min(1.0 - 1e-12);
    let pred = sphere::psi_set_predicate(&g, lo, hi)?;
    let sup = sphere::grid_sup_log_tau(&g, lo, hi, a.grid_step)
        .ok_or_else(|| CliError::new(ErrorKind::Infeasible, "no feasible edge value in the interval"))?;
    let mut rows = sphere::ldp_rate(k, &a.n_list, &pred, sup, a.samples, a.seed)?;
    if k == 2 {
        for row in &mut rows {
            row.quadrature_rate = Some(sphere::ln_quadrature_mu_k2(row.estimate.n, lo, hi)? / row.estimate.n as f64);
        }
    }
    emit(
        json!({
            "command": "sphere ldp",
            "k": k,
            "graph": a.graph,
            "x": a.x,
            "eps": a.eps,
            "interval": [lo, hi],
            "n_list": a.n_list,
            "samples": a.samples,
            "seed": a.seed,
            "grid_step": a.grid_step,
        }),
        json!({ "sup_log_det": sup, "target_rate": 0.5 * sup, "rows": rows }),
    )
}

fn homdensity(a: &crate::HomArgs) -> Result<(), CliError> {
    let g = make_family(&a.g)?;
    let text = fs::read_to_string(&a.h)?;
    let parsed = parse_edge_list(&text)?;
    let h = WeightedGraph::from_weighted_edges(parsed.graph.vertex_count(), &parsed.weights)?;
    let check = sphere::sidorenko_check(&g, &h)?;
    emit(
        json!({
            "command": "homdensity",
            "g": a.g,
            "h": a.h.display().to_string(),
            "h_vertices": h.vertex_count(),
            "h_labels": parsed.labels,
        }),
        json!(check),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_list_keeps_bipartite_sizes_together() {
        let got = split_graph_list(&["cycle:4,complete-bipartite:3,4,petersen".to_string(), "path:2".to_string()]);
        assert_eq!(got, vec!["cycle:4", "complete-bipartite:3,4", "petersen", "path:2"]);
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0.1:0.3:0.1").unwrap(), vec![0.1, 0.2, 0.3]);
        assert_eq!(parse_grid("0.5").unwrap(), vec![0.5]);
        assert!(parse_grid("0:1:0.1").is_err());
        assert!(parse_grid("a:b:c").is_err());
    }
}
