//! Exit criteria. Run with `cargo test -p frs-equity --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion.

mod common;

use std::time::{Duration, Instant};

use frs_equity::model::sample_tendencies;
use frs_equity::optimizer::solve_column;
use frs_equity::output::{write_trajectory, STEPS_FILE, SUMMARY_FILE};
use frs_equity::scenario::advance;
use frs_equity::{
    assemble_bounds, assemble_dissensus_matrix, compute_flows, load_scenario, project_box_simplex,
    run, step_all_cars, EquityFloor, Infeasibility, OutflowProfile, ProjectionError, TrafficState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

const REFERENCE: &str = "reference_32.json";
const TWO_ROAD: &str = "two_road.json";

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

/// 1. Column sums of every A_k and Â_k within 1e-12 over 1,000 steps; < 5 s.
fn column_stochasticity() -> Verdict {
    let start = Instant::now();
    let mut s = load_scenario(&read_scenario(REFERENCE)).unwrap();
    s.horizon = 1000;
    let p = s.outflow_profile().unwrap();
    let mut state = s.initial_state();
    let mut worst = 0.0f64;
    for _ in 0..s.horizon {
        let t = advance(&s, &p, &state).unwrap();
        for m in [&t.a, &t.a_hat] {
            for j in 0..m.dim() {
                worst = worst.max((m.column_sum(j) - 1.0).abs());
            }
            assert!(m.min_entry() >= 0.0);
        }
        state = t.next;
    }
    let elapsed = start.elapsed();
    verdict(
        worst <= 1e-12 && elapsed < Duration::from_secs(5),
        format!("max |col sum - 1| = {worst:e}, {elapsed:.2?}"),
    )
}

/// 2. Σ x̂ drifts < 1e-6 over 10,000 steps on both shipped scenarios.
fn frs_conservation() -> Verdict {
    let mut worst = 0.0f64;
    for name in [TWO_ROAD, REFERENCE] {
        let mut s = load_scenario(&read_scenario(name)).unwrap();
        s.horizon = 10_000;
        let t = run(&s).unwrap();
        let total0: f64 = t.states[0].x_hat.iter().sum();
        for st in &t.states {
            worst = worst.max((st.x_hat.iter().sum::<f64>() - total0).abs());
        }
    }
    verdict(worst < 1e-6, format!("max drift {worst:e}"))
}

/// 3. |Σ x_{k+1} - Σ x_k - Σ d_k| < 1e-9 at every step.
fn mass_balance() -> Verdict {
    let mut worst = 0.0f64;
    let mut steps = 0usize;
    let mut scenarios = vec![
        load_scenario(&read_scenario(TWO_ROAD)).unwrap(),
        load_scenario(&read_scenario(REFERENCE)).unwrap(),
    ];
    for seed in 100..105 {
        let mut s = scenarios[1].clone();
        s.seed = seed;
        s.horizon = 300;
        scenarios.push(s);
    }
    for s in &scenarios {
        let t = run(s).unwrap();
        for (k, rec) in t.steps.iter().enumerate() {
            let before: f64 = t.states[k].x.iter().sum();
            let after: f64 = t.states[k + 1].x.iter().sum();
            let input: f64 = rec.input.d.iter().sum();
            worst = worst.max((after - before - input).abs());
            steps += 1;
        }
    }
    verdict(
        worst < 1e-9,
        format!("{steps} steps, max residual {worst:e}"),
    )
}

/// 4. After every all-tier-0 step x̂ ≥ 2 (tol 1e-9); tier-0 step fraction > 95%.
fn equity_claim() -> Verdict {
    let s = load_scenario(&read_scenario(REFERENCE)).unwrap();
    assert!(s.floor.as_slice().iter().all(|&v| v == 2.0));
    assert_eq!(s.u_max, 5);
    let t = run(&s).unwrap();
    let mut full = 0usize;
    let mut worst = f64::INFINITY;
    for (k, rec) in t.steps.iter().enumerate() {
        if rec.all_full_tier() {
            full += 1;
            let m = t.states[k + 1]
                .x_hat
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            worst = worst.min(m);
        }
    }
    let fraction = full as f64 / t.steps.len() as f64;
    verdict(
        worst >= 2.0 - 1e-9 && fraction > 0.95,
        format!(
            "{} steps, tier-0 fraction {fraction:.4}, min x_hat after tier-0 steps {worst:.6}",
            t.steps.len()
        ),
    )
}

/// 5. Exact solver vs exhaustive oracle (1e-6) on 1,000 feasible instances;
/// 100 infeasible instances certified with the right condition; < 10 s.
fn solver_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=8);
        let (lo, up) = feasible_bounds(&mut rng, n);
        let q = project_box_simplex(&lo, &up).unwrap();
        let oracle = enumerate_box_simplex(&lo, &up).unwrap();
        for (a, b) in q.iter().zip(&oracle) {
            worst = worst.max((a - b).abs());
        }
    }

    let mut certified = 0;
    for case in 0..100 {
        let n = rng.random_range(2..=8);
        let (lo, up, expect): (Vec<f64>, Vec<f64>, fn(&Infeasibility) -> bool) = match case % 3 {
            0 => {
                let w = simplex_point(&mut rng, n);
                let mass = 1.0 + rng.random_range(0.01..0.5);
                (
                    w.iter().map(|v| v * mass).collect(),
                    vec![f64::INFINITY; n],
                    |i| matches!(i, Infeasibility::LowerSumExceedsOne { .. }),
                )
            }
            1 => {
                let w = simplex_point(&mut rng, n);
                let lo: Vec<f64> = w.iter().map(|v| v * 0.9).collect();
                let mut up = vec![f64::INFINITY; n];
                let at = (0..n).max_by(|&a, &b| lo[a].total_cmp(&lo[b])).unwrap();
                up[at] = lo[at] * 0.5;
                (lo, up, |i| matches!(i, Infeasibility::BoundsCrossed { .. }))
            }
            _ => {
                let w = simplex_point(&mut rng, n);
                let mass = 1.0 - rng.random_range(0.01..0.5);
                (vec![0.0; n], w.iter().map(|v| v * mass).collect(), |i| {
                    matches!(i, Infeasibility::UpperSumBelowOne { .. })
                })
            }
        };
        if let Err(ProjectionError::Infeasible(why)) = project_box_simplex(&lo, &up) {
            if expect(&why) && enumerate_box_simplex(&lo, &up).is_none() {
                certified += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst <= 1e-6 && certified == 100 && elapsed < Duration::from_secs(10),
        format!("max deviation {worst:e}, {certified}/100 infeasible certified, {elapsed:.2?}"),
    )
}

/// 6. Matrix step and flow step agree within 1e-12 on 100 random instances.
fn equation_forms() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(2..=10);
        let g = random_graph(&mut rng, n);
        let x = uniform_vec(&mut rng, n, 0.0, 100.0);
        let p = OutflowProfile::new((0..n).map(|_| 1.0 - rng.random::<f64>()).collect()).unwrap();
        let q = sample_tendencies(&g, &mut rng);
        let d = uniform_vec(&mut rng, n, -5.0, 5.0);

        let a = assemble_dissensus_matrix(&q, &p).unwrap();
        let state = TrafficState::new(x.clone(), vec![0.0; n]).unwrap();
        let by_matrix = step_all_cars(&state, &a, &d).unwrap().next;
        let flows = compute_flows(&x, &p, &q).unwrap();
        for i in 0..n {
            let by_flow = x[i] + flows.y[i] - flows.z[i] + d[i];
            worst = worst.max((by_matrix[i] - by_flow).abs());
        }
    }
    verdict(worst <= 1e-12, format!("max elementwise gap {worst:e}"))
}

/// 7. Two runs of the same scenario write byte-identical files.
fn determinism() -> Verdict {
    let s = load_scenario(&read_scenario(REFERENCE)).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_trajectory(&run(&s).unwrap(), a.path()).unwrap();
    write_trajectory(&run(&s).unwrap(), b.path()).unwrap();
    let same = [STEPS_FILE, SUMMARY_FILE].iter().all(|f| {
        std::fs::read(a.path().join(f)).unwrap() == std::fs::read(b.path().join(f)).unwrap()
    });
    verdict(
        same,
        "steps.csv and summary.json compared byte for byte".to_string(),
    )
}

/// 8. Scaling x, x̂, x̂_min, d by 3.7 leaves every solved column within 1e-9.
fn scale_invariance() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0008);
    let mut worst = 0.0f64;
    let mut tiers_match = true;
    for _ in 0..50 {
        let n = rng.random_range(2..=10);
        let g = random_graph(&mut rng, n);
        let x_hat = uniform_vec(&mut rng, n, 0.5, 8.0);
        let x: Vec<f64> = x_hat
            .iter()
            .map(|v| v + rng.random_range(0.0..40.0))
            .collect();
        let floor = uniform_vec(&mut rng, n, 0.0, 3.0);
        let d = uniform_vec(&mut rng, n, -5.0, 5.0);
        let p = OutflowProfile::new(uniform_vec(&mut rng, n, 0.1, 1.0)).unwrap();
        let q = sample_tendencies(&g, &mut rng);

        let solve = |factor: f64| {
            let scale = |v: &[f64]| v.iter().map(|a| a * factor).collect::<Vec<f64>>();
            let state = TrafficState::new(scale(&x), scale(&x_hat)).unwrap();
            let floor = EquityFloor::new(scale(&floor)).unwrap();
            assemble_bounds(&g, &state, &p, &q, &scale(&d), &floor)
                .unwrap()
                .iter()
                .map(solve_column)
                .collect::<Vec<_>>()
        };
        for (a, b) in solve(1.0).iter().zip(solve(3.7)) {
            tiers_match &= a.tier == b.tier;
            for (u, v) in a.q_hat.iter().zip(&b.q_hat) {
                worst = worst.max((u - v).abs());
            }
        }
    }
    verdict(
        worst <= 1e-9 && tiers_match,
        format!("max column change {worst:e}, tiers identical: {tiers_match}"),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("AC1 column stochasticity", column_stochasticity),
        ("AC2 FRS conservation", frs_conservation),
        ("AC3 all-car mass balance", mass_balance),
        ("AC4 equity floor after tier-0 steps", equity_claim),
        ("AC5 solver oracle equivalence", solver_oracle),
        ("AC6 matrix/flow step equivalence", equation_forms),
        ("AC7 run determinism", determinism),
        ("AC8 scale invariance", scale_invariance),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let v = check();
        println!(
            "[{}] {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        if !v.pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
