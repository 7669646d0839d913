//! Entropic gradient flows: the JKO scheme built on free end point transport
//! problems, and explicit Euler references for the heat and porous medium
//! equations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MarkovGraph;
use crate::means::MeanKind;
use crate::prox::entropy::EntropyKind;
use crate::solver::{solve_free_endpoint, GeodesicSolution, SolverConfig, NEGATIVE_CLAMP};
use crate::time_grid::TimeGrid;

/// `Σ_x φ(ρ(x)) π(x)`.
pub fn entropy(kind: EntropyKind, rho: &[f64], pi: &[f64]) -> Result<f64> {
    kind.validate()?;
    crate::error::check_len("density", pi.len(), rho.len())?;
    if let Some(x) = rho.iter().position(|r| !(*r >= 0.0)) {
        return Err(Error::InvalidDensity(format!("entropy of negative density rho({x}) = {}", rho[x])));
    }
    Ok(rho.iter().zip(pi).map(|(r, p)| kind.density(*r) * p).sum())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub entropy_values: Vec<f64>,
}

impl FlowTrajectory {
    fn push(&mut self, t: f64, rho: Vec<f64>, entropy: f64) {
        self.times.push(t);
        self.states.push(rho);
        self.entropy_values.push(entropy);
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    /// Largest pointwise difference between two trajectories over their common steps.
    pub fn sup_distance(&self, other: &FlowTrajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// The mean whose transport distance makes `kind` generate a known flow:
/// Shannon entropy with the logarithmic mean gives the heat equation and the
/// Rényi entropy with `m = ½` with the geometric mean gives `∂_t ρ = Δ ρ^{1/2}`.
pub fn check_pairing(kind: EntropyKind, mean: MeanKind) -> Result<()> {
    match (kind, mean) {
        (EntropyKind::Shannon, MeanKind::Logarithmic) => Ok(()),
        (EntropyKind::Renyi { m: 0.5 }, MeanKind::Geometric) => Ok(()),
        _ => Err(Error::InvalidConfig(format!(
            "{kind:?} entropy cannot be paired with the {mean} mean; use shannon with log or renyi m = 0.5 with geo"
        ))),
    }
}

#[derive(Clone, Debug)]
pub struct JkoOptions {
    pub tau: f64,
    pub n_steps: usize,
    /// Time grid of every inner transport problem.
    pub grid: TimeGrid,
    pub entropy: EntropyKind,
    pub solver: SolverConfig,
    pub warm_start: bool,
}

#[derive(Clone, Debug)]
pub struct JkoFlow {
    pub trajectory: FlowTrajectory,
    /// Inner iteration counts per completed step.
    pub inner_iterations: Vec<usize>,
    /// False if an inner solve failed to converge; the trajectory then stops at the last good step.
    pub completed: bool,
}

/// Iterates `ρ_{k+1} = argmin ½ 𝒲_h(ρ_k, ρ)² + τ ℋ(ρ)`.
pub fn jko_flow(graph: &MarkovGraph, rho0: &[f64], opts: &JkoOptions) -> Result<JkoFlow> {
    check_pairing(opts.entropy, opts.solver.mean)?;
    graph.validate_density(rho0)?;
    if !(opts.tau > 0.0) {
        return Err(Error::InvalidConfig(format!("JKO time step {} must be positive", opts.tau)));
    }
    let pi = graph.pi();
    let mut trajectory = FlowTrajectory::default();
    trajectory.push(0.0, rho0.to_vec(), entropy(opts.entropy, rho0, pi)?);
    let mut inner_iterations = Vec::with_capacity(opts.n_steps);
    let mut previous: Option<GeodesicSolution> = None;
    let mut rho = rho0.to_vec();
    for k in 1..=opts.n_steps {
        let warm = if opts.warm_start { previous.as_ref() } else { None };
        let sol = solve_free_endpoint(graph, opts.grid, &rho, opts.tau, opts.entropy, &opts.solver, warm)?;
        if !sol.converged {
            log::warn!("JKO step {k} did not converge after {} iterations", sol.iterations);
            return Ok(JkoFlow { trajectory, inner_iterations, completed: false });
        }
        let mut next = sol.rho_b.clone().expect("free end point solution");
        if let Some(x) = next.iter().position(|v| *v < -NEGATIVE_CLAMP) {
            return Err(Error::InvalidDensity(format!("JKO step {k} produced rho({x}) = {}", next[x])));
        }
        next.iter_mut().for_each(|v| *v = v.max(0.0));
        let h = entropy(opts.entropy, &next, pi)?;
        log::info!("JKO step {k}: entropy {h:.12e}, {} inner iterations", sol.iterations);
        inner_iterations.push(sol.iterations);
        trajectory.push(k as f64 * opts.tau, next.clone(), h);
        rho = next;
        previous = Some(sol);
    }
    Ok(JkoFlow { trajectory, inner_iterations, completed: true })
}

fn euler_flow<F: Fn(&[f64]) -> Vec<f64>>(
    graph: &MarkovGraph,
    rho0: &[f64],
    dt: f64,
    n_steps: usize,
    kind: EntropyKind,
    nonlinearity: F,
) -> Result<FlowTrajectory> {
    graph.validate_density(rho0)?;
    let max_rate = graph.total_rates().iter().copied().fold(0.0, f64::max);
    if !(dt > 0.0) || dt * max_rate >= 1.0 {
        return Err(Error::InvalidConfig(format!("explicit Euler step {dt} is unstable for total rate {max_rate}")));
    }
    let pi = graph.pi();
    let mut out = FlowTrajectory::default();
    let mut rho = rho0.to_vec();
    out.push(0.0, rho.clone(), entropy(kind, &rho, pi)?);
    for k in 1..=n_steps {
        let lap = graph.laplacian(&nonlinearity(&rho))?;
        for (r, l) in rho.iter_mut().zip(&lap) {
            *r += dt * l;
        }
        if let Some(x) = rho.iter().position(|v| *v < -NEGATIVE_CLAMP) {
            return Err(Error::InvalidDensity(format!("explicit Euler lost positivity at step {k}, rho({x}) = {}", rho[x])));
        }
        rho.iter_mut().for_each(|v| *v = v.max(0.0));
        out.push(k as f64 * dt, rho.clone(), entropy(kind, &rho, pi)?);
    }
    Ok(out)
}

/// `ρ_{k+1} = ρ_k + dt Δ ρ_k`, with Shannon entropy values.
pub fn euler_heat_flow(graph: &MarkovGraph, rho0: &[f64], dt: f64, n_steps: usize) -> Result<FlowTrajectory> {
    euler_flow(graph, rho0, dt, n_steps, EntropyKind::Shannon, <[f64]>::to_vec)
}

/// `ρ_{k+1} = ρ_k + dt Δ(ρ_k^m)`, with Rényi entropy values.
pub fn euler_porous_flow(graph: &MarkovGraph, rho0: &[f64], dt: f64, n_steps: usize, m: f64) -> Result<FlowTrajectory> {
    let kind = EntropyKind::Renyi { m };
    kind.validate()?;
    euler_flow(graph, rho0, dt, n_steps, kind, |r| r.iter().map(|v| v.powf(m)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;

    #[test]
    fn entropy_examples() {
        let g = MarkovGraph::two_node(1.0, 1.0).unwrap();
        assert_eq!(entropy(EntropyKind::Shannon, &[1.0, 1.0], g.pi()).unwrap(), 0.0);
        let h = entropy(EntropyKind::Shannon, &[2.0, 0.0], g.pi()).unwrap();
        assert!((h - 2f64.ln()).abs() < 1e-15);
        let r = entropy(EntropyKind::Renyi { m: 0.5 }, &[1.0, 1.0], g.pi()).unwrap();
        assert!((r + 2.0).abs() < 1e-15);
        assert!(entropy(EntropyKind::Shannon, &[-1.0, 3.0], g.pi()).is_err());
    }

    #[test]
    fn euler_single_steps() {
        let g = MarkovGraph::two_node(1.0, 1.0).unwrap();
        let heat = euler_heat_flow(&g, &[2.0, 0.0], 0.1, 1).unwrap();
        assert!((heat.states[1][0] - 1.8).abs() < 1e-15 && (heat.states[1][1] - 0.2).abs() < 1e-15);
        let dt = 1e-3;
        let pm = euler_porous_flow(&g, &[2.0, 0.0], dt, 1, 0.5).unwrap();
        let s = dt * 2f64.sqrt();
        assert!((pm.states[1][0] - (2.0 - s)).abs() < 1e-15 && (pm.states[1][1] - s).abs() < 1e-15);
        assert!(euler_heat_flow(&g, &[2.0, 0.0], 1.0, 1).is_err());
    }

    #[test]
    fn euler_conserves_mass_and_fixes_uniform() {
        let g = builtins::line5();
        let heat = euler_heat_flow(&g, &builtins::line5_initial_density(), 1e-3, 200).unwrap();
        for s in &heat.states {
            assert!((g.mass(s) - 1.0).abs() < 1e-12);
        }
        let u = euler_porous_flow(&g, &[1.0; 5], 1e-3, 20, 0.5).unwrap();
        assert!(u.states.iter().flatten().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn pairing_is_enforced() {
        assert!(check_pairing(EntropyKind::Shannon, MeanKind::Geometric).is_err());
        assert!(check_pairing(EntropyKind::Renyi { m: 0.3 }, MeanKind::Geometric).is_err());
        assert!(check_pairing(EntropyKind::Renyi { m: 0.5 }, MeanKind::Geometric).is_ok());
    }
}
