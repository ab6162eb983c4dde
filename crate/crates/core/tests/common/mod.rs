#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recouple_core::graphs::{complete_minus, make_family, Graph};
use recouple_core::linalg::SymMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 50 graphs on 4..=10 vertices: 40 G(n,p) draws and 10 complete graphs
/// with at most three edges removed.
pub fn random_graphs() -> Vec<Graph> {
    let mut r = rng(2024);
    let mut out = Vec::new();
    for i in 0..40u64 {
        let n = r.gen_range(4..=10);
        let p = [0.3, 0.45, 0.6, 0.75][(i % 4) as usize];
        out.push(make_family(&format!("gnp:{n}:{p}:{}", 1000 + i)).unwrap());
    }
    for i in 0..10u64 {
        let n = r.gen_range(4..=7);
        out.push(complete_minus(n, 1 + (i as usize % 3), 500 + i));
    }
    out
}

pub fn random_trees(count: usize) -> Vec<Graph> {
    let mut r = rng(7);
    (0..count)
        .map(|i| make_family(&format!("tree-random:{}:{}", r.gen_range(2..=10), 300 + i)).unwrap())
        .collect()
}

/// Random bipartite graph with sides of size 1..=5, at least one edge.
pub fn random_bipartite(seed: u64) -> Graph {
    let mut r = rng(seed);
    loop {
        let a = r.gen_range(1..=5);
        let b = r.gen_range(1..=5);
        let p = r.gen_range(0.3..0.9);
        let edges: Vec<(usize, usize)> = (0..a)
            .flat_map(|i| (0..b).map(move |j| (i, a + j)))
            .filter(|_| r.gen_bool(p))
            .collect();
        if !edges.is_empty() {
            return Graph::from_edges(a + b, edges).unwrap().with_name(format!("bipartite-random:{seed}"));
        }
    }
}

pub type Dense = Vec<Vec<f64>>;

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let (n, m, p) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| (0..p).map(|j| (0..m).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

pub fn transpose(a: &Dense) -> Dense {
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

pub fn random_dense(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Dense {
    (0..rows).map(|_| (0..cols).map(|_| r.gen_range(-1.0..1.0)).collect()).collect()
}

/// `R Rᵀ + ridge·I`, well conditioned for small sizes.
pub fn random_pd(r: &mut ChaCha8Rng, n: usize) -> Dense {
    let g = random_dense(r, n, n + 2);
    let mut m = matmul(&g, &transpose(&g));
    for (i, row) in m.iter_mut().enumerate() {
        row[i] += 0.5;
    }
    m
}

/// Two PD matrices agreeing on a shared block. Returns `(A, B)` labelled by
/// global indices: A on `0..a+c`, B on `a..a+c+b` (shared labels `a..a+c`).
pub fn overlapping_pair(r: &mut ChaCha8Rng, max_size: usize) -> (SymMatrix, SymMatrix) {
    let c = r.gen_range(1..max_size.min(6));
    let a = r.gen_range(1..=(max_size - c).max(1));
    let b = r.gen_range(1..=(max_size - c).max(1));
    // A = full PD on the A side; B shares the C block and is otherwise fresh
    let full_a = random_pd(r, a + c);
    let cc: Dense = (a..a + c).map(|i| full_a[i][a..a + c].to_vec()).collect();
    let rr = random_dense(r, c, b);
    let x = matmul(&cc, &rr);
    let y0 = matmul(&transpose(&rr), &x);
    let s = random_pd(r, b);
    let n = c + b;
    let bm = SymMatrix::from_fn(n, |i, j| match (i < c, j < c) {
        (true, true) => cc[i][j],
        (true, false) => x[i][j - c],
        (false, true) => x[j][i - c],
        (false, false) => y0[i - c][j - c] + s[i - c][j - c],
    })
    .with_index_set((a..a + c + b).collect());
    let am = SymMatrix::from_fn(a + c, |i, j| full_a[i][j]).with_index_set((0..a + c).collect());
    (am, bm)
}

/// Completes `g` at `x` with the given non-edge values and returns logdet,
/// or `None` when the matrix is not positive definite.
pub fn logdet_with(g: &Graph, x: f64, non_edges: &[(usize, usize)], vals: &[f64]) -> Option<f64> {
    let n = g.vertex_count();
    let mut m = SymMatrix::from_fn(n, |i, j| if i == j { 1.0 } else if g.has_edge(i, j) { x } else { 0.0 });
    for (&(v, w), &t) in non_edges.iter().zip(vals) {
        m.set(v, w, t);
    }
    m.logdet().ok()
}

/// Grid search followed by shrinking pattern search over the (at most three)
/// non-edge entries. Independent of the recoupling code.
pub fn brute_force_maxdet(g: &Graph, x: f64) -> (Vec<f64>, f64) {
    let ne = g.non_edges();
    let d = ne.len();
    assert!(d <= 3, "brute force is only for tiny searches");
    let steps: Vec<f64> = (1..40).map(|i| -1.0 + i as f64 * 0.05).collect();
    let mut best = (vec![0.0; d], f64::NEG_INFINITY);
    let mut idx = vec![0usize; d];
    loop {
        let vals: Vec<f64> = idx.iter().map(|&i| steps[i]).collect();
        if let Some(ld) = logdet_with(g, x, &ne, &vals) {
            if ld > best.1 {
                best = (vals, ld);
            }
        }
        let mut k = 0;
        while k < d {
            idx[k] += 1;
            if idx[k] < steps.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == d {
            break;
        }
    }
    let mut h = 0.025;
    while h > 1e-12 {
        let mut improved = false;
        for k in 0..d {
            for s in [-h, h] {
                let mut trial = best.0.clone();
                trial[k] += s;
                if let Some(ld) = logdet_with(g, x, &ne, &trial) {
                    if ld > best.1 {
                        best = (trial, ld);
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    best
}
