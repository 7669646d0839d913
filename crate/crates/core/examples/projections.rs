//! Pointwise projections and the continuity equation projection.

use graphot::means::MeanKind;
use graphot::prox::ce::{CEProjector, CeMode};
use graphot::prox::cones::{project_k, project_parabola_b};
use graphot::time_grid::ce_residual;
use graphot::{BoundaryPair, DensityPath, IntervalEdgeField, MarkovGraph, TimeGrid};

fn main() -> graphot::Result<()> {
    println!("proj_B(0, 2)       = {:?}", project_parabola_b(0.0, 2.0));
    println!("proj_B(-1, 0)      = {:?}", project_parabola_b(-1.0, 0.0));
    for mean in [MeanKind::Logarithmic, MeanKind::Geometric] {
        println!("proj_K[{mean}](2, 1, 3) = {:?}", project_k(&mean, [2.0, 1.0, 3.0])?);
        println!("proj_K[{mean}](-1, -1, 0.1) = {:?}", project_k(&mean, [-1.0, -1.0, 0.1])?);
    }

    // Project the zero path onto paths from (2, 0) to (0, 2).
    let g = MarkovGraph::two_node(1.0, 1.0)?;
    let grid = TimeGrid::new(4)?;
    let bc = BoundaryPair::new(&g, vec![2.0, 0.0], vec![0.0, 2.0])?;
    let ce = CEProjector::new(&g, grid, CeMode::Fixed)?;
    let (rho, m) = ce.project_fixed(&DensityPath::zeros(grid, 2), &IntervalEdgeField::zeros(grid, 2), &bc)?;
    let (res, viol) = ce_residual(&g, &rho, &m, &bc)?;
    for (i, row) in rho.iter_rows().enumerate() {
        println!("t = {:.2}  rho = {row:.6?}", grid.node_time(i));
    }
    println!("continuity residual {:.1e}, boundary violation {viol:.1e}", res.sup_norm());
    Ok(())
}
