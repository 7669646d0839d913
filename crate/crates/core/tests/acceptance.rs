//! End-to-end acceptance: every validation check at its stated tolerance, with
//! one PASS/FAIL line per check, plus cross-checks computed here without the
//! library's reference code.

use std::process::Command;

use graphot::export::GeodesicReport;
use graphot::oracles::TwoNodeExact;
use graphot::validate::{self, Suite, ValidateOptions};
use graphot::{builtins, solve_geodesic, BoundaryPair, MeanKind, SolverConfig, TimeGrid};

/// `½√2 ∫ θ(1 − r, 1 + r)^{-1/2} dr` over `[−1, 1]` with `r = tanh u`, which
/// removes the end point singularities; composite Simpson on `[−18, 18]`.
fn two_node_distance(theta: impl Fn(f64, f64) -> f64) -> f64 {
    let f = |u: f64| {
        let r = u.tanh();
        theta(1.0 - r, 1.0 + r).sqrt().recip() / u.cosh().powi(2)
    };
    let (a, b, n) = (-18.0, 18.0, 100_000);
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for k in 1..n {
        sum += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    0.5 * 2f64.sqrt() * sum * h / 3.0
}

#[test]
fn two_node_reference_values() {
    let log = two_node_distance(|s, t| if (s - t).abs() < 1e-12 { s } else { (s - t) / (s.ln() - t.ln()) });
    let geo = two_node_distance(|s, t| (s * t).sqrt());
    let exact_log = TwoNodeExact::new(1.0, 1.0, MeanKind::Logarithmic).unwrap().distance(-1.0, 1.0).unwrap();
    let exact_geo = TwoNodeExact::new(1.0, 1.0, MeanKind::Geometric).unwrap().distance(-1.0, 1.0).unwrap();
    assert!((log - exact_log).abs() < 1e-9, "{log} vs {exact_log}");
    assert!((geo - exact_geo).abs() < 1e-9, "{geo} vs {exact_geo}");
    // B(1/2, 3/4)/√2 for the geometric mean.
    assert!((geo - 2.396280469471184 / 2f64.sqrt()).abs() < 1e-9);
}

#[test]
fn all_criteria() {
    let results = validate::run(Suite::All, &ValidateOptions::default()).expect("validation runs");
    println!();
    for r in &results {
        println!("{r}");
    }
    let ids: Vec<u32> = results.iter().map(|r| r.id).collect();
    assert_eq!(ids, (1..=14).collect::<Vec<_>>());
    let failed: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| r.to_string()).collect();
    assert!(failed.is_empty(), "failed checks:\n{}", failed.join("\n"));
}

#[test]
fn cube_geodesic_is_symmetric_under_reflection() {
    // Independent of the validation module: opposite corners of the cube, coarse grid.
    let g = builtins::cube();
    let bc = BoundaryPair::new(&g, g.dirac(0).unwrap(), g.dirac(7).unwrap()).unwrap();
    let sol = solve_geodesic(&g, TimeGrid::new(20).unwrap(), &bc, &SolverConfig { tol: 1e-13, ..Default::default() }).unwrap();
    assert!(sol.converged);
    for i in 0..=20 {
        for x in 0..8 {
            let a = sol.rho.row(i)[x];
            let b = sol.rho.row(20 - i)[x ^ 7];
            assert!((a - b).abs() < 1e-6, "t_{i}, vertex {x}: {a} vs {b}");
        }
        let mass: f64 = sol.rho.row(i).iter().map(|v| v / 8.0).sum();
        assert!((mass - 1.0).abs() < 1e-10);
    }
}

fn graphot() -> Command {
    Command::new(env!("CARGO_BIN_EXE_graphot"))
}

#[test]
fn cli_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("geo.json");
    let status = graphot()
        .args(["geodesic", "--builtin", "two-node", "--rho-a", "[2,0]", "--rho-b", "[0,2]", "--n", "50", "--out"])
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let report = GeodesicReport::from_json(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(report.rho.len(), 51);
    assert_eq!(report.rho[0], vec![2.0, 0.0]);

    let g = graphot::MarkovGraph::two_node(1.0, 1.0).unwrap();
    let bc = BoundaryPair::new(&g, vec![2.0, 0.0], vec![0.0, 2.0]).unwrap();
    let sol = solve_geodesic(&g, TimeGrid::new(50).unwrap(), &bc, &SolverConfig::default()).unwrap();
    assert_eq!(report.distance, sol.distance);
    assert_eq!(report.rho, sol.rho.to_rows());

    let csv = dir.path().join("geo.csv");
    let status = graphot()
        .args(["geodesic", "--builtin", "two-node", "--rho-a", "[2,0]", "--rho-b", "[0,2]", "--n", "50", "--format", "csv", "--out"])
        .arg(&csv)
        .status()
        .unwrap();
    assert!(status.success());
    let rows = graphot::export::read_geodesic_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(rows, report.rho);
}

#[test]
fn cli_exit_codes() {
    let bad_mass = graphot().args(["distance", "--builtin", "triangle", "--rho-a", "[2,0,0]", "--rho-b", "uniform"]).output().unwrap();
    assert_eq!(bad_mass.status.code(), Some(2));
    let unknown = graphot().args(["distance", "--builtin", "petersen", "--rho-a", "uniform", "--rho-b", "uniform"]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(2));
    let bad_steps = graphot()
        .args(["distance", "--builtin", "cube", "--rho-a", "uniform", "--rho-b", "dirac:1", "--sigma", "2", "--tau", "2"])
        .output()
        .unwrap();
    assert_eq!(bad_steps.status.code(), Some(2));
    let capped = graphot()
        .args(["distance", "--builtin", "cube", "--rho-a", "dirac:0", "--rho-b", "dirac:7", "--max-iters", "10"])
        .output()
        .unwrap();
    assert_eq!(capped.status.code(), Some(3));
    let ok = graphot().args(["distance", "--builtin", "triangle", "--rho-a", "uniform", "--rho-b", "uniform", "--format", "csv"]).output().unwrap();
    assert!(ok.status.success());
    let text = String::from_utf8(ok.stdout).unwrap();
    assert!(text.starts_with("distance,clamped_distance,iterations,converged\n0.0000000000000000e0,"), "{text}");
}
