//! Geodesics between the two Dirac masses of the two-point space, for both
//! means, against the exact curves.

use graphot::oracles::TwoNodeExact;
use graphot::{solve_geodesic, BoundaryPair, MeanKind, SolverConfig, TimeGrid};

fn main() -> graphot::Result<()> {
    let n = 400;
    for mean in [MeanKind::Logarithmic, MeanKind::Geometric] {
        let exact = TwoNodeExact::new(1.0, 1.0, mean)?;
        let g = exact.graph()?;
        let bc = BoundaryPair::new(&g, exact.density(-1.0).to_vec(), exact.density(1.0).to_vec())?;
        let sol = solve_geodesic(&g, TimeGrid::new(n)?, &bc, &SolverConfig::with_mean(mean))?;
        let ode = exact.geodesic_ode(-1.0, 1.0, n)?.node_b_density(&exact);
        println!(
            "{mean}: W = {:.6} (exact {:.6}), {} iterations, {:.2} s",
            sol.distance,
            exact.distance(-1.0, 1.0)?,
            sol.iterations,
            sol.wall_time_s
        );
        println!("    t   rho_b   exact");
        for i in (0..=n).step_by(n / 8) {
            println!("  {:.3}  {:.4}  {:.4}", i as f64 / n as f64, sol.rho.row(i)[1], ode[i]);
        }
    }
    Ok(())
}
