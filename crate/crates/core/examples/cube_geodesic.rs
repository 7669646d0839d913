//! Mass at one corner of the cube moved to the opposite corner. Halfway the
//! density is nearly uniform. Writes the path as CSV when given a file name.

use graphot::export::GeodesicReport;
use graphot::{builtins, solve_geodesic, BoundaryPair, MeanKind, SolverConfig, TimeGrid};

fn main() -> graphot::Result<()> {
    let g = builtins::cube();
    let bc = BoundaryPair::new(&g, g.dirac(0)?, g.dirac(7)?)?;
    let cfg = SolverConfig { tol: 1e-12, ..Default::default() };
    let sol = solve_geodesic(&g, TimeGrid::new(50)?, &bc, &cfg)?;
    println!("W = {:.6} after {} iterations", sol.distance, sol.iterations);
    for i in [0, 10, 25, 40, 50] {
        println!("t = {:.1}: {:.3?}", i as f64 / 50.0, sol.rho.row(i));
    }
    if let Some(path) = std::env::args().nth(1) {
        GeodesicReport::new(&g, MeanKind::Logarithmic, &sol).to_csv(std::fs::File::create(&path)?)?;
        println!("wrote {path}");
    }
    Ok(())
}
