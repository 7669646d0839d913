use graphot::builtins;
use graphot::means::{Mean, MeanKind};
use graphot::prox::ce::{CEProjector, CeMode};
use graphot::prox::cones::{project_k, project_parabola_b};
use graphot::prox::entropy::{prox_scalar, EntropyKind};
use graphot::time_grid::{antisymmetrize, ce_residual, discrete_action, masses};
use graphot::{BoundaryPair, DensityPath, IntervalEdgeField, TimeGrid};
use proptest::prelude::*;
use rand::SeedableRng;

fn mean_kind() -> impl Strategy<Value = MeanKind> {
    prop_oneof![Just(MeanKind::Logarithmic), Just(MeanKind::Geometric)]
}

fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn mean_symmetric_homogeneous_bounded(mean in mean_kind(), s in 1e-3..1e3f64, t in 1e-3..1e3f64, lam in 1e-3..1e3f64) {
        let v = mean.theta(s, t);
        prop_assert!((v - mean.theta(t, s)).abs() <= 1e-14 * v);
        prop_assert!((mean.theta(lam * s, lam * t) - lam * v).abs() <= 1e-12 * lam * v);
        prop_assert!(v >= s.min(t) * (1.0 - 1e-14) && v <= s.max(t) * (1.0 + 1e-14));
        let (d1, d2) = mean.partials(s, t);
        prop_assert!((s * d1 + t * d2 - v).abs() <= 1e-10 * v);
    }

    #[test]
    fn log_mean_between_geometric_and_arithmetic(s in 1e-3..1e3f64, t in 1e-3..1e3f64) {
        let log = MeanKind::Logarithmic.theta(s, t);
        prop_assert!(log >= (s * t).sqrt() * (1.0 - 1e-13));
        prop_assert!(log <= 0.5 * (s + t) * (1.0 + 1e-13));
    }

    #[test]
    fn parabola_projection_is_firm(p in -20.0..20.0f64, q in -20.0..20.0f64, p2 in -20.0..20.0f64, q2 in -20.0..20.0f64) {
        let x = project_parabola_b(p, q);
        prop_assert!(x.0 + 0.25 * x.1 * x.1 <= 1e-12 * (1.0 + x.0.abs()));
        prop_assert_eq!(project_parabola_b(x.0, x.1), x);
        let y = project_parabola_b(p2, q2);
        let lhs = (x.0 - y.0).powi(2) + (x.1 - y.1).powi(2);
        let rhs = (x.0 - y.0) * (p - p2) + (x.1 - y.1) * (q - q2);
        prop_assert!(lhs <= rhs + 1e-10);
    }

    #[test]
    fn k_projection_is_firm(mean in mean_kind(), u in prop::array::uniform3(-10.0..10.0f64), v in prop::array::uniform3(-10.0..10.0f64)) {
        let pu = project_k(&mean, u).unwrap();
        let pv = project_k(&mean, v).unwrap();
        prop_assert!(pu[0] >= 0.0 && pu[1] >= 0.0 && pu[2] >= 0.0);
        prop_assert!(pu[2] <= mean.theta(pu[0], pu[1]) * (1.0 + 1e-12) + 1e-15);
        prop_assert!(dist3(project_k(&mean, pu).unwrap(), pu) <= 1e-12);
        let d = [pu[0] - pv[0], pu[1] - pv[1], pu[2] - pv[2]];
        let lhs = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        let rhs = d[0] * (u[0] - v[0]) + d[1] * (u[1] - v[1]) + d[2] * (u[2] - v[2]);
        prop_assert!(lhs <= rhs + 1e-10);
    }

    #[test]
    fn entropy_prox_is_stationary(a in -5.0..5.0f64, c in 1e-4..10.0f64, renyi in any::<bool>()) {
        let kind = if renyi { EntropyKind::Renyi { m: 0.5 } } else { EntropyKind::Shannon };
        let y = prox_scalar(kind, a, c).unwrap();
        prop_assert!(y > 0.0);
        prop_assert!((y - a + c * kind.derivative(y)).abs() <= 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn calculus_on_random_graphs(seed in any::<u64>(), n in 2usize..10) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = builtins::random_reversible(n, 0.4, &mut rng).unwrap();
        let phi: Vec<f64> = (0..n).map(|k| ((k as f64 + 1.3) * (seed % 97) as f64).sin()).collect();
        let field: Vec<f64> = (0..g.edge_count()).map(|e| ((e as f64 + 0.7) * 1.9).cos()).collect();
        let div = g.divergence(&field).unwrap();
        let lhs = g.inner_node(&phi, &div).unwrap();
        let rhs = -g.inner_edge(&g.gradient(&phi).unwrap(), &field).unwrap();
        let scale: f64 = g.edge_weights().iter().sum::<f64>().max(1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        prop_assert!(g.mass(&div).abs() <= 1e-12 * scale);
        let lap = g.laplacian(&phi).unwrap();
        let composed = g.divergence(&g.gradient(&phi).unwrap()).unwrap();
        for (a, b) in lap.iter().zip(&composed) {
            prop_assert!((a - b).abs() <= 1e-13 * scale);
        }
        let u = g.laplacian(&g.uniform_density()).unwrap();
        prop_assert!(u.iter().all(|v| v.abs() <= 1e-13 * scale));
    }

    #[test]
    fn ce_projection_lands_in_the_set(values in prop::collection::vec(-3.0..3.0f64, 4 * 3 + 3 * 6), n_free in any::<bool>()) {
        let g = builtins::triangle();
        let grid = TimeGrid::new(3).unwrap();
        let rho = DensityPath::from_flat(grid, 3, values[..12].to_vec()).unwrap();
        let m = IntervalEdgeField::from_flat(grid, 6, values[12..].to_vec()).unwrap();
        let bc = BoundaryPair::new(&g, vec![3.0, 0.0, 0.0], vec![1.0, 1.0, 1.0]).unwrap();
        if n_free {
            let p = CEProjector::new(&g, grid, CeMode::Free).unwrap();
            let (r, mm, rb) = p.project_free(&rho, &m, &[0.5, 2.0, -1.0], &bc.rho_a).unwrap();
            let free_bc = BoundaryPair { rho_a: bc.rho_a.clone(), rho_b: rb };
            let (res, viol) = ce_residual(&g, &r, &mm, &free_bc).unwrap();
            prop_assert!(res.sup_norm() <= 1e-10 && viol <= 1e-12);
            prop_assert!(masses(&g, &r).iter().all(|v| (v - 1.0).abs() <= 1e-10));
        } else {
            let p = CEProjector::new(&g, grid, CeMode::Fixed).unwrap();
            let (r, mm) = p.project_fixed(&rho, &m, &bc).unwrap();
            let (res, viol) = ce_residual(&g, &r, &mm, &bc).unwrap();
            prop_assert!(res.sup_norm() <= 1e-10 && viol <= 1e-12);
            let (r2, m2) = p.project_fixed(&r, &mm, &bc).unwrap();
            prop_assert!(r2.as_slice().iter().zip(r.as_slice()).all(|(a, b)| (a - b).abs() <= 1e-12));
            prop_assert!(m2.as_slice().iter().zip(mm.as_slice()).all(|(a, b)| (a - b).abs() <= 1e-12));
        }
    }

    #[test]
    fn antisymmetric_momentum_never_costs_more(mean in mean_kind(), rho_vals in prop::collection::vec(0.01..3.0f64, 9), m_vals in prop::collection::vec(-2.0..2.0f64, 12)) {
        let g = builtins::triangle();
        let grid = TimeGrid::new(2).unwrap();
        let rho = DensityPath::from_flat(grid, 3, rho_vals).unwrap();
        let m = IntervalEdgeField::from_flat(grid, 6, m_vals).unwrap();
        let bar = antisymmetrize(&g, &m).unwrap();
        let a = discrete_action(&g, &rho, &m, &mean).unwrap();
        let b = discrete_action(&g, &rho, &bar, &mean).unwrap();
        prop_assert!(b <= a + 1e-12);
        prop_assert!(g.divergence(bar.row(0)).unwrap().iter().zip(g.divergence(m.row(0)).unwrap()).all(|(x, y)| (x - y).abs() <= 1e-13));
    }
}
