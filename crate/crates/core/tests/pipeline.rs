mod common;

use frs_equity::graph::BoundaryKind;
use frs_equity::output::{read_steps, read_summary, write_trajectory};
use frs_equity::plot::{render_svg, Series};
use frs_equity::{load_scenario, run};

use common::*;

#[test]
fn reference_scenario_shape() {
    let s = load_scenario(&read_scenario("reference_32.json")).unwrap();
    assert_eq!(s.graph.len(), 32);
    assert_eq!(s.graph.inlets(), (0..8).collect::<Vec<_>>());
    assert_eq!(s.graph.outlets(), (8..16).collect::<Vec<_>>());
    assert!((0..32).all(|i| !s.graph.in_of(i).is_empty()));
    assert!(s.floor.as_slice().iter().all(|&v| v == 2.0));
}

#[test]
fn boundary_structure_and_nonnegativity() {
    let mut s = load_scenario(&read_scenario("reference_32.json")).unwrap();
    s.horizon = 300;
    let t = run(&s).unwrap();
    for rec in &t.steps {
        for i in 0..32 {
            let d = rec.input.d[i];
            match s.graph.boundary_kind(i) {
                BoundaryKind::Interior => assert_eq!(d, 0.0),
                BoundaryKind::Inlet => assert!((0.0..=5.0).contains(&d)),
                BoundaryKind::Outlet => assert!((-5.0..=0.0).contains(&d)),
            }
        }
    }
    assert!(t.states.iter().all(|st| st.x.iter().all(|&v| v >= 0.0)));
}

#[test]
fn hundred_step_equity() {
    let mut s = load_scenario(&read_scenario("reference_32.json")).unwrap();
    s.horizon = 100;
    let t = run(&s).unwrap();
    for (k, rec) in t.steps.iter().enumerate() {
        if rec.all_full_tier() {
            assert!(t.states[k + 1].x_hat.iter().all(|&v| v >= 2.0 - 1e-9));
        }
    }
    assert_eq!(t.summary().violation_counts.floor_after_full_tier, 0);
}

#[test]
fn summary_round_trip_and_frs_chart() {
    let mut s = load_scenario(&read_scenario("reference_32.json")).unwrap();
    s.horizon = 100;
    let t = run(&s).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = write_trajectory(&t, dir.path()).unwrap();
    let reread = read_summary(dir.path()).unwrap();
    assert_eq!(written, reread);
    assert_eq!(reread.total_x_per_step.len(), 101);

    let rows = read_steps(dir.path()).unwrap();
    assert_eq!(rows.len(), 101 * 32);
    let chart = render_svg(&rows, None, Series::XHat).unwrap();
    let floor_px = chart.frame.px_y(2.0);
    let lines: Vec<&str> = chart
        .svg
        .lines()
        .filter(|l| l.starts_with("<polyline"))
        .collect();
    assert_eq!(lines.len(), 32);
    for line in lines {
        let start = line.find("points=\"").unwrap() + 8;
        let end = start + line[start..].find('"').unwrap();
        for (k, pt) in line[start..end].split(' ').enumerate() {
            let y: f64 = pt.split_once(',').unwrap().1.parse().unwrap();
            let after_full = k == 0 || t.steps[k - 1].all_full_tier();
            if after_full {
                // svg y grows downwards; points are rounded to 0.01 px
                assert!(
                    y <= floor_px + 0.01,
                    "k = {k}: {y} below floor line {floor_px}"
                );
            }
        }
    }
}
