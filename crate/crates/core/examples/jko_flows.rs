//! JKO steps for the Shannon and Renyi entropies on a five state line, next to
//! explicit Euler steps of the heat and porous medium equations.

use graphot::flow::{euler_heat_flow, euler_porous_flow, jko_flow, JkoOptions};
use graphot::prox::entropy::EntropyKind;
use graphot::{builtins, MeanKind, SolverConfig, TimeGrid};

fn main() -> graphot::Result<()> {
    let g = builtins::line5();
    let rho0 = builtins::line5_initial_density();
    let (tau, steps) = (1e-3, 50);
    for (entropy, mean) in [(EntropyKind::Shannon, MeanKind::Logarithmic), (EntropyKind::Renyi { m: 0.5 }, MeanKind::Geometric)] {
        let opts = JkoOptions {
            tau,
            n_steps: steps,
            grid: TimeGrid::new(100)?,
            entropy,
            solver: SolverConfig::with_mean(mean),
            warm_start: true,
        };
        let jko = jko_flow(&g, &rho0, &opts)?;
        let euler = match entropy {
            EntropyKind::Renyi { m } => euler_porous_flow(&g, &rho0, tau, steps, m)?,
            _ => euler_heat_flow(&g, &rho0, tau, steps)?,
        };
        let tr = &jko.trajectory;
        println!("{entropy:?} with the {mean} mean");
        println!("  final JKO   {:.5?}", tr.last().unwrap_or_default());
        println!("  final Euler {:.5?}", euler.last().unwrap_or_default());
        println!("  entropy {:.6} -> {:.6}, sup difference {:.2e}", tr.entropy_values[0], tr.entropy_values[tr.len() - 1], tr.sup_distance(&euler));
    }
    Ok(())
}
