#![allow(dead_code)]

use std::path::PathBuf;

use frs_equity::NoirGraph;
use rand::seq::index::sample;
use rand::Rng;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

pub fn read_scenario(name: &str) -> String {
    std::fs::read_to_string(scenario_path(name)).unwrap()
}

/// Exhaustive active-set oracle for `min ½‖q‖²` s.t. `Σq = 1`, `lo ≤ q ≤ up`.
///
/// Every coordinate is placed at its lower bound, its upper bound, or left
/// free; free coordinates share the value that closes the sum. The best
/// feasible candidate over all 3^n assignments is the global minimizer.
pub fn enumerate_box_simplex(lo: &[f64], up: &[f64]) -> Option<Vec<f64>> {
    let n = lo.len();
    let up: Vec<f64> = up.iter().map(|&u| u.min(1.0 + 1e-12)).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut state = vec![0u8; n];
    loop {
        let mut fixed = 0.0;
        let mut free = 0usize;
        for i in 0..n {
            match state[i] {
                0 => fixed += lo[i],
                1 => fixed += up[i],
                _ => free += 1,
            }
        }
        let candidate = if free == 0 {
            ((fixed - 1.0).abs() <= 1e-9).then(|| {
                (0..n)
                    .map(|i| if state[i] == 0 { lo[i] } else { up[i] })
                    .collect::<Vec<f64>>()
            })
        } else {
            let level = (1.0 - fixed) / free as f64;
            let q: Vec<f64> = (0..n)
                .map(|i| match state[i] {
                    0 => lo[i],
                    1 => up[i],
                    _ => level,
                })
                .collect();
            let inside = (0..n).all(|i| q[i] >= lo[i] - 1e-12 && q[i] <= up[i] + 1e-12);
            inside.then_some(q)
        };
        if let Some(q) = candidate {
            let obj: f64 = q.iter().map(|v| v * v).sum();
            if best.as_ref().map_or(true, |(b, _)| obj < *b - 1e-15) {
                best = Some((obj, q));
            }
        }
        // next assignment in base 3
        let mut pos = 0;
        loop {
            if pos == n {
                return best.map(|(_, q)| q);
            }
            state[pos] += 1;
            if state[pos] < 3 {
                break;
            }
            state[pos] = 0;
            pos += 1;
        }
    }
}

/// Random point on the probability simplex.
pub fn simplex_point<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

/// Random bounds that contain a known simplex point.
pub fn feasible_bounds<R: Rng>(rng: &mut R, n: usize) -> (Vec<f64>, Vec<f64>) {
    let w = simplex_point(rng, n);
    let lo = w
        .iter()
        .map(|&v| {
            if rng.random_bool(0.3) {
                0.0
            } else {
                v * rng.random::<f64>()
            }
        })
        .collect();
    let up = w
        .iter()
        .map(|&v| {
            if rng.random_bool(0.2) {
                f64::INFINITY
            } else {
                v + rng.random::<f64>() * 0.5
            }
        })
        .collect();
    (lo, up)
}

/// Random graph with `n` roads and 1..=3 out-neighbors per road.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize) -> NoirGraph {
    assert!(n >= 2);
    let mut edges = Vec::new();
    for j in 0..n {
        let width = rng.random_range(1..=3.min(n - 1));
        for pick in sample(rng, n - 1, width) {
            let i = if pick >= j { pick + 1 } else { pick };
            edges.push((j as u32 + 1, i as u32 + 1));
        }
    }
    let perm = sample(rng, n, n).into_vec();
    let n_in = rng.random_range(0..=n / 2);
    let n_out = rng.random_range(0..=(n - n_in));
    let inlets: Vec<u32> = perm[..n_in].iter().map(|&i| i as u32 + 1).collect();
    let outlets: Vec<u32> = perm[n_in..n_in + n_out]
        .iter()
        .map(|&i| i as u32 + 1)
        .collect();
    NoirGraph::build(n, &edges, &inlets, &outlets).unwrap()
}

pub fn uniform_vec<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}
