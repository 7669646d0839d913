//! Chambolle–Pock iteration for the slack-variable formulation of the
//! discrete transport problem.
//!
//! The primal variable is `a = (ρ, m, ϑ, θ⁻, θ⁺, ρ̄, q[, ρ_B])` and
//!
//! ```text
//! F(a) = Â(ϑ, m) + I_{J±}(q, θ⁻, θ⁺) + I_{Ĵavg}(ρ, ρ̄) [+ 2τ ℋ(ρ_B)]
//! G(a) = I_{CE}(ρ, m[, ρ_B]) + I_K(θ⁻, θ⁺, ϑ) + I_{J=}(ρ̄, q)
//! ```
//!
//! are minimized jointly with
//!
//! ```text
//! b ← prox_{σF*}(b + σ ā),   a' ← prox_{τG}(a − τ b),   ā ← a' + λ (a' − a).
//! ```

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::graph::MarkovGraph;
use crate::means::{Mean, MeanKind};
use crate::prox::cones::{project_k_hinted, project_parabola_b};
use crate::prox::entropy::{prox_dual_entropy, EntropyKind};
use crate::prox::splitting::{project_jeq, prox_dual_jpm_interval, JavgProjector, Pins};
use crate::prox::{CEProjector, CeMode};
use crate::time_grid::{
    antisymmetrize, avg_h, ce_residual, clamped_action, discrete_action, BoundaryPair, DensityPath, IntervalEdgeField,
    IntervalNodeField, TimeGrid,
};

/// Densities in `[−NEGATIVE_CLAMP, 0)` are reported as zero.
pub const NEGATIVE_CLAMP: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub sigma: f64,
    pub tau: f64,
    pub lambda: f64,
    pub max_iters: usize,
    /// Threshold on `h Σ_i ‖ρ^{k+1}(t_i) − ρ^k(t_i)‖²_π`.
    pub tol: f64,
    pub mean: MeanKind,
    /// Iterations between evaluations of the stopping functional.
    pub check_every: usize,
    /// Iterations between retained history records.
    pub history_stride: usize,
    /// Run the pointwise projections on the rayon thread pool.
    pub parallel: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            sigma: 10.0,
            tau: 0.099,
            lambda: 1.0,
            max_iters: 500_000,
            tol: 1e-10,
            mean: MeanKind::Logarithmic,
            check_every: 10,
            history_stride: 100,
            parallel: false,
        }
    }
}

impl SolverConfig {
    pub fn with_mean(mean: MeanKind) -> Self {
        SolverConfig { mean, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.tau > 0.0 && self.sigma * self.tau < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "step sizes need sigma, tau > 0 and sigma * tau < 1, got {} and {}",
                self.sigma, self.tau
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidConfig(format!("lambda = {} outside [0, 1]", self.lambda)));
        }
        if !(self.tol > 0.0) || self.max_iters == 0 || self.check_every == 0 || self.history_stride == 0 {
            return Err(Error::InvalidConfig("tol, max_iters, check_every and history_stride must be positive".into()));
        }
        Ok(())
    }
}

/// Iterate of the splitting; the dual iterate has the same shape.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimalState {
    pub rho: DensityPath,
    pub m: IntervalEdgeField,
    pub vartheta: IntervalEdgeField,
    pub theta_minus: IntervalEdgeField,
    pub theta_plus: IntervalEdgeField,
    pub rho_bar: IntervalNodeField,
    pub q: IntervalNodeField,
    /// Free end point, present only for the JKO problem.
    pub rho_b: Option<Vec<f64>>,
}

pub type DualState = PrimalState;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Weight {
    Node,
    Edge,
}

impl PrimalState {
    pub fn zeros(graph: &MarkovGraph, grid: TimeGrid, free_end: bool) -> Self {
        let n = graph.vertex_count();
        let ne = graph.edge_count();
        PrimalState {
            rho: DensityPath::zeros(grid, n),
            m: IntervalEdgeField::zeros(grid, ne),
            vartheta: IntervalEdgeField::zeros(grid, ne),
            theta_minus: IntervalEdgeField::zeros(grid, ne),
            theta_plus: IntervalEdgeField::zeros(grid, ne),
            rho_bar: IntervalNodeField::zeros(grid, n),
            q: IntervalNodeField::zeros(grid, n),
            rho_b: free_end.then(|| vec![0.0; n]),
        }
    }

    /// Linear interpolation start: `m = 0`, `ρ̄ = q = avg_h ρ`, `θ∓` copied from
    /// `q`, `ϑ = θ(θ⁻, θ⁺)`.
    pub fn initial<M: Mean + ?Sized>(graph: &MarkovGraph, grid: TimeGrid, rho_a: &[f64], rho_b: &[f64], free_end: bool, mean: &M) -> Result<Self> {
        let mut s = PrimalState::zeros(graph, grid, free_end);
        s.rho = DensityPath::linear(grid, rho_a, rho_b)?;
        s.rho_bar = avg_h(&s.rho);
        s.q = s.rho_bar.clone();
        s.sync_slack_from_q(graph, mean);
        if free_end {
            s.rho_b = Some(rho_b.to_vec());
        }
        Ok(s)
    }

    fn sync_slack_from_q<M: Mean + ?Sized>(&mut self, graph: &MarkovGraph, mean: &M) {
        for i in 0..self.q.rows() {
            let q = self.q.row(i).to_vec();
            let tm = self.theta_minus.row_mut(i);
            for (e, edge) in graph.edges().iter().enumerate() {
                tm[e] = q[edge.from];
            }
            let tp = self.theta_plus.row_mut(i);
            for (e, edge) in graph.edges().iter().enumerate() {
                tp[e] = q[edge.to];
            }
            let (tm, tp) = (self.theta_minus.row(i).to_vec(), self.theta_plus.row(i).to_vec());
            for (e, v) in self.vartheta.row_mut(i).iter_mut().enumerate() {
                *v = mean.theta(tm[e], tp[e]).max(0.0);
            }
        }
    }

    fn parts(&self) -> Vec<(&[f64], Weight)> {
        let mut v = vec![
            (self.rho.as_slice(), Weight::Node),
            (self.m.as_slice(), Weight::Edge),
            (self.vartheta.as_slice(), Weight::Edge),
            (self.theta_minus.as_slice(), Weight::Edge),
            (self.theta_plus.as_slice(), Weight::Edge),
            (self.rho_bar.as_slice(), Weight::Node),
            (self.q.as_slice(), Weight::Node),
        ];
        if let Some(rb) = &self.rho_b {
            v.push((rb.as_slice(), Weight::Node));
        }
        v
    }

    fn parts_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = vec![
            self.rho.as_mut_slice(),
            self.m.as_mut_slice(),
            self.vartheta.as_mut_slice(),
            self.theta_minus.as_mut_slice(),
            self.theta_plus.as_mut_slice(),
            self.rho_bar.as_mut_slice(),
            self.q.as_mut_slice(),
        ];
        if let Some(rb) = &mut self.rho_b {
            v.push(rb.as_mut_slice());
        }
        v
    }

    fn check_shape(&self, other: &PrimalState) -> Result<()> {
        let a = self.parts();
        let b = other.parts();
        check_len("state components", a.len(), b.len())?;
        for ((x, _), (y, _)) in a.iter().zip(&b) {
            check_len("state component", x.len(), y.len())?;
        }
        Ok(())
    }

    /// `self ← self + alpha · other`.
    fn axpy(&mut self, alpha: f64, other: &PrimalState) {
        let src = other.parts();
        for (dst, (s, _)) in self.parts_mut().into_iter().zip(src) {
            for (d, v) in dst.iter_mut().zip(s) {
                *d += alpha * v;
            }
        }
    }

    /// `self ← x + alpha · y`.
    fn assign_combination(&mut self, x: &PrimalState, alpha: f64, y: &PrimalState) {
        let xs = x.parts();
        let ys = y.parts();
        for ((dst, (xv, _)), (yv, _)) in self.parts_mut().into_iter().zip(xs).zip(ys) {
            for ((d, a), b) in dst.iter_mut().zip(xv).zip(yv) {
                *d = a + alpha * b;
            }
        }
    }

    fn copy_from(&mut self, other: &PrimalState) {
        let src = other.parts();
        for (dst, (s, _)) in self.parts_mut().into_iter().zip(src) {
            dst.copy_from_slice(s);
        }
    }
}

/// The weighted scalar product of the splitting space: `h⟨·,·⟩_π` on every
/// node-valued time slice (nodal densities, `ρ̄`, `q`, `ρ_B`) and `h⟨·,·⟩_Q`
/// on every edge-valued interval field.
pub fn h_inner(graph: &MarkovGraph, a1: &PrimalState, a2: &PrimalState) -> Result<f64> {
    a1.check_shape(a2)?;
    let n = graph.vertex_count();
    let ne = graph.edge_count();
    check_len("density width", n, a1.rho.width())?;
    check_len("momentum width", ne, a1.m.width())?;
    let h = 1.0 / a1.m.rows() as f64;
    Ok(h * weighted_sum(graph, a1, a2, |x, y| x * y))
}

fn weighted_sum<F: Fn(f64, f64) -> f64>(graph: &MarkovGraph, a1: &PrimalState, a2: &PrimalState, f: F) -> f64 {
    let pi = graph.pi();
    let w = graph.edge_weights();
    let mut total = 0.0;
    for ((x, kind), (y, _)) in a1.parts().into_iter().zip(a2.parts()) {
        match kind {
            Weight::Node => {
                for (k, (a, b)) in x.iter().zip(y).enumerate() {
                    total += f(*a, *b) * pi[k % pi.len()];
                }
            }
            Weight::Edge => {
                for (k, (a, b)) in x.iter().zip(y).enumerate() {
                    total += 0.5 * f(*a, *b) * w[k % w.len()];
                }
            }
        }
    }
    total
}

/// Boundary conditions of one solve.
#[derive(Clone, Debug)]
pub enum Mode {
    /// Both end points fixed.
    Geodesic(BoundaryPair),
    /// Start fixed, end point penalized by `2 τ ℋ`.
    FreeEndpoint { rho_a: Vec<f64>, tau_jko: f64, entropy: EntropyKind },
}

impl Mode {
    fn rho_a(&self) -> &[f64] {
        match self {
            Mode::Geodesic(bc) => &bc.rho_a,
            Mode::FreeEndpoint { rho_a, .. } => rho_a,
        }
    }

    fn is_free(&self) -> bool {
        matches!(self, Mode::FreeEndpoint { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `h Σ_i ‖ρ^{k+1}(t_i) − ρ^k(t_i)‖²_π`.
    pub stopping_value: f64,
    /// `‖a^{k+1} − a^k‖²_H`.
    pub fixed_point_residual: f64,
    /// Action of the current `(ρ, m)`, possibly `+∞` before convergence.
    pub action: f64,
    /// Sup norm of the continuity residual of the current `(ρ, m)`.
    pub ce_residual: f64,
}

#[derive(Clone, Debug)]
pub struct GeodesicSolution {
    /// Final primal iterate as produced by the iteration.
    pub raw: PrimalState,
    pub dual: DualState,
    /// Projected onto the continuity equation, with antisymmetric momentum.
    pub rho: DensityPath,
    pub m: IntervalEdgeField,
    /// Free end point (JKO mode); equals the last row of `rho`.
    pub rho_b: Option<Vec<f64>>,
    /// `√𝒜_h` of the projected path; `+∞` when small negative densities make it inadmissible.
    pub distance: f64,
    pub action: f64,
    /// `√` of the action with averages clamped at zero and inadmissible entries skipped.
    pub clamped_distance: f64,
    /// Entries skipped by `clamped_distance`; zero when it equals `distance`.
    pub skipped_entries: usize,
    pub iterations: usize,
    pub converged: bool,
    pub stopping_value: f64,
    pub fixed_point_residual: f64,
    pub ce_residual: f64,
    pub min_density: f64,
    /// Some density fell below `−NEGATIVE_CLAMP`.
    pub negative_density: bool,
    pub history: Vec<IterationRecord>,
    pub wall_time_s: f64,
}

/// Prox operators and caches for one `(graph, N, mode)`.
pub struct PrimalDualSolver<'g> {
    graph: &'g MarkovGraph,
    grid: TimeGrid,
    config: SolverConfig,
    mode: Mode,
    ce: CEProjector,
    javg: JavgProjector,
    hints: Vec<f64>,
}

impl<'g> PrimalDualSolver<'g> {
    pub fn new(graph: &'g MarkovGraph, grid: TimeGrid, mode: Mode, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        match &mode {
            Mode::Geodesic(bc) => {
                check_len("rho_a", graph.vertex_count(), bc.rho_a.len())?;
                check_len("rho_b", graph.vertex_count(), bc.rho_b.len())?;
            }
            Mode::FreeEndpoint { rho_a, tau_jko, entropy } => {
                check_len("rho_a", graph.vertex_count(), rho_a.len())?;
                entropy.validate()?;
                if !(*tau_jko >= 0.0) {
                    return Err(Error::InvalidConfig(format!("time step {tau_jko} must be nonnegative")));
                }
            }
        }
        let (ce_mode, pins) = if mode.is_free() { (CeMode::Free, Pins::Start) } else { (CeMode::Fixed, Pins::Both) };
        Ok(PrimalDualSolver {
            graph,
            grid,
            config,
            ce: CEProjector::new(graph, grid, ce_mode)?,
            javg: JavgProjector::new(grid.n_intervals(), pins),
            hints: vec![f64::NAN; grid.n_intervals() * graph.edge_count()],
            mode,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn initial_state(&self) -> Result<PrimalState> {
        let rho_a = self.mode.rho_a();
        let rho_b = match &self.mode {
            Mode::Geodesic(bc) => bc.rho_b.as_slice(),
            Mode::FreeEndpoint { rho_a, .. } => rho_a.as_slice(),
        };
        PrimalState::initial(self.graph, self.grid, rho_a, rho_b, self.mode.is_free(), &self.config.mean)
    }

    /// `prox_{σF*}` applied in place.
    pub fn apply_prox_f_star(&self, sigma: f64, b: &mut DualState) -> Result<()> {
        for (vt, mv) in b.vartheta.as_mut_slice().iter_mut().zip(b.m.as_mut_slice()) {
            let (p, q) = project_parabola_b(*vt, *mv);
            *vt = p;
            *mv = q;
        }
        let n = self.graph.vertex_count();
        for i in 0..self.grid.n_intervals() {
            prox_dual_jpm_interval(self.graph, b.q.row_mut(i), b.theta_minus.row_mut(i), b.theta_plus.row_mut(i));
        }
        let rho_b_pin = match &self.mode {
            Mode::Geodesic(bc) => Some(bc.rho_b.as_slice()),
            Mode::FreeEndpoint { .. } => None,
        };
        self.javg.prox_dual(sigma, b.rho.as_mut_slice(), b.rho_bar.as_mut_slice(), n, self.mode.rho_a(), rho_b_pin)?;
        if let Mode::FreeEndpoint { tau_jko, entropy, .. } = &self.mode {
            let rb = b.rho_b.as_mut().ok_or_else(|| Error::InvalidConfig("state lacks the free end point".into()))?;
            prox_dual_entropy(*entropy, rb, sigma, *tau_jko, self.grid.h())?;
        }
        Ok(())
    }

    /// `prox_{τG}` applied in place; every component is a projection.
    pub fn apply_prox_g(&mut self, a: &mut PrimalState) -> Result<()> {
        let mut fixed_b;
        let rho_b: &mut [f64] = match (&self.mode, a.rho_b.as_mut()) {
            (Mode::Geodesic(bc), _) => {
                fixed_b = bc.rho_b.clone();
                &mut fixed_b
            }
            (Mode::FreeEndpoint { .. }, Some(rb)) => rb,
            (Mode::FreeEndpoint { .. }, None) => {
                return Err(Error::InvalidConfig("state lacks the free end point".into()))
            }
        };
        self.ce.project_slices(a.rho.as_mut_slice(), a.m.as_mut_slice(), self.mode.rho_a(), rho_b)?;

        let mean = self.config.mean;
        let ne = self.graph.edge_count();
        let project_row = |tm: &mut [f64], tp: &mut [f64], vt: &mut [f64], hints: &mut [f64]| -> Result<()> {
            for e in 0..tm.len() {
                let r = project_k_hinted(&mean, [tm[e], tp[e], vt[e]], &mut hints[e])?;
                tm[e] = r[0];
                tp[e] = r[1];
                vt[e] = r[2];
            }
            Ok(())
        };
        if self.config.parallel {
            a.theta_minus
                .as_mut_slice()
                .par_chunks_mut(ne)
                .zip(a.theta_plus.as_mut_slice().par_chunks_mut(ne))
                .zip(a.vartheta.as_mut_slice().par_chunks_mut(ne))
                .zip(self.hints.par_chunks_mut(ne))
                .try_for_each(|(((tm, tp), vt), h)| project_row(tm, tp, vt, h))?;
        } else {
            project_row(
                a.theta_minus.as_mut_slice(),
                a.theta_plus.as_mut_slice(),
                a.vartheta.as_mut_slice(),
                &mut self.hints,
            )?;
        }
        project_jeq(a.rho_bar.as_mut_slice(), a.q.as_mut_slice());
        Ok(())
    }

    fn stopping_value(&self, a: &PrimalState, prev: &PrimalState) -> f64 {
        let pi = self.graph.pi();
        let n = pi.len();
        let sum: f64 = a
            .rho
            .as_slice()
            .iter()
            .zip(prev.rho.as_slice())
            .enumerate()
            .map(|(k, (x, y))| (x - y) * (x - y) * pi[k % n])
            .sum();
        self.grid.h() * sum
    }

    fn fixed_point_residual(&self, a: &PrimalState, prev: &PrimalState) -> f64 {
        self.grid.h() * weighted_sum(self.graph, a, prev, |x, y| (x - y) * (x - y))
    }

    /// Runs the iteration from `(a, b)`.
    pub fn run(&mut self, mut a: PrimalState, mut b: DualState) -> Result<GeodesicSolution> {
        let start = Instant::now();
        let template = PrimalState::zeros(self.graph, self.grid, self.mode.is_free());
        template.check_shape(&a)?;
        template.check_shape(&b)?;
        let (sigma, tau, lambda) = (self.config.sigma, self.config.tau, self.config.lambda);

        let mut a_bar = a.clone();
        let mut prev = a.clone();
        let mut history = Vec::new();
        let mut converged = false;
        let mut iterations = 0;
        let mut stopping = f64::INFINITY;
        let mut fp_residual = f64::INFINITY;

        while iterations < self.config.max_iters {
            iterations += 1;
            b.axpy(sigma, &a_bar);
            self.apply_prox_f_star(sigma, &mut b)?;

            prev.copy_from(&a);
            a.axpy(-tau, &b);
            self.apply_prox_g(&mut a)?;

            a_bar.assign_combination(&a, lambda, &a);
            a_bar.axpy(-lambda, &prev);

            let record = iterations % self.config.history_stride == 0;
            if iterations % self.config.check_every == 0 || record {
                stopping = self.stopping_value(&a, &prev);
                fp_residual = self.fixed_point_residual(&a, &prev);
                if record {
                    history.push(self.record(iterations, &a, stopping, fp_residual));
                    log::debug!("iteration {iterations}: stop {stopping:.3e}, fixed point {fp_residual:.3e}");
                }
                // The fixed-point residual guards against ρ stalling while the slack variables still move.
                let settled = fp_residual < 1e3 * self.config.tol;
                if iterations % self.config.check_every == 0 && stopping < self.config.tol && settled {
                    converged = true;
                    break;
                }
            }
        }
        if !converged {
            log::warn!("no convergence after {iterations} iterations (stopping value {stopping:.3e})");
        }
        self.finish(a, b, iterations, converged, stopping, fp_residual, history, start)
    }

    fn record(&self, iteration: usize, a: &PrimalState, stopping: f64, fp: f64) -> IterationRecord {
        let action = discrete_action(self.graph, &a.rho, &a.m, &self.config.mean).unwrap_or(f64::INFINITY);
        let ce = self.ce_sup(&a.rho, &a.m, a.rho_b.as_deref());
        IterationRecord { iteration, stopping_value: stopping, fixed_point_residual: fp, action, ce_residual: ce }
    }

    fn ce_sup(&self, rho: &DensityPath, m: &IntervalEdgeField, rho_b: Option<&[f64]>) -> f64 {
        let bc = match (&self.mode, rho_b) {
            (Mode::Geodesic(bc), _) => bc.clone(),
            (Mode::FreeEndpoint { rho_a, .. }, Some(rb)) => BoundaryPair { rho_a: rho_a.clone(), rho_b: rb.to_vec() },
            (Mode::FreeEndpoint { rho_a, .. }, None) => BoundaryPair { rho_a: rho_a.clone(), rho_b: rho_a.clone() },
        };
        ce_residual(self.graph, rho, m, &bc)
            .map(|(r, v)| r.sup_norm().max(v))
            .unwrap_or(f64::INFINITY)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        a: PrimalState,
        b: DualState,
        iterations: usize,
        converged: bool,
        stopping: f64,
        fp_residual: f64,
        history: Vec<IterationRecord>,
        start: Instant,
    ) -> Result<GeodesicSolution> {
        let mut rho = a.rho.clone();
        let mut m = a.m.clone();
        let mut rho_b = match (&self.mode, &a.rho_b) {
            (Mode::Geodesic(bc), _) => bc.rho_b.clone(),
            (_, Some(rb)) => rb.clone(),
            _ => unreachable!("free mode state carries rho_b"),
        };
        self.ce.project_slices(rho.as_mut_slice(), m.as_mut_slice(), self.mode.rho_a(), &mut rho_b)?;
        let m = antisymmetrize(self.graph, &m)?;

        let min_density = rho.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
        let negative_density = min_density < -NEGATIVE_CLAMP;
        if negative_density {
            log::warn!("density reaches {min_density:.3e} on the final path");
        }
        for v in rho.as_mut_slice() {
            if *v < 0.0 && *v >= -NEGATIVE_CLAMP {
                *v = 0.0;
            }
        }
        let free = self.mode.is_free();
        if free {
            let last = rho.rows() - 1;
            rho_b = rho.row(last).to_vec();
        }
        let action = discrete_action(self.graph, &rho, &m, &self.config.mean)?;
        let (clamped, skipped_entries) = clamped_action(self.graph, &rho, &m, &self.config.mean)?;
        if skipped_entries > 0 {
            log::warn!("action is infinite on {skipped_entries} entries with vanishing mean; clamped distance {:.6e}", clamped.sqrt());
        }
        let ce = self.ce_sup(&rho, &m, free.then_some(rho_b.as_slice()));
        Ok(GeodesicSolution {
            raw: a,
            dual: b,
            rho,
            m,
            rho_b: free.then_some(rho_b),
            distance: action.max(0.0).sqrt(),
            action,
            clamped_distance: clamped.max(0.0).sqrt(),
            skipped_entries,
            iterations,
            converged,
            stopping_value: stopping,
            fixed_point_residual: fp_residual,
            ce_residual: ce,
            min_density,
            negative_density,
            history,
            wall_time_s: start.elapsed().as_secs_f64(),
        })
    }
}

/// Discrete geodesic and distance `𝒲_h(ρ_A, ρ_B)`.
pub fn solve_geodesic(graph: &MarkovGraph, grid: TimeGrid, bc: &BoundaryPair, config: &SolverConfig) -> Result<GeodesicSolution> {
    let mut solver = PrimalDualSolver::new(graph, grid, Mode::Geodesic(bc.clone()), config.clone())?;
    let a = solver.initial_state()?;
    let b = PrimalState::zeros(graph, grid, false);
    solver.run(a, b)
}

/// One JKO step: minimizes `½ 𝒲_h(ρ_A, ρ_B)² + τ ℋ(ρ_B)` over `ρ_B`.
///
/// `warm` is a previous step's solution; its path is shifted by the change of
/// the initial density and used as the starting iterate.
pub fn solve_free_endpoint(
    graph: &MarkovGraph,
    grid: TimeGrid,
    rho_a: &[f64],
    tau_jko: f64,
    entropy: EntropyKind,
    config: &SolverConfig,
    warm: Option<&GeodesicSolution>,
) -> Result<GeodesicSolution> {
    let mode = Mode::FreeEndpoint { rho_a: rho_a.to_vec(), tau_jko, entropy };
    let mut solver = PrimalDualSolver::new(graph, grid, mode, config.clone())?;
    let (a, b) = match warm {
        Some(prev) if prev.raw.rho_b.is_some() && prev.raw.m.rows() == grid.n_intervals() => {
            let mut a = prev.raw.clone();
            let delta: Vec<f64> = rho_a.iter().zip(prev.rho.row(0)).map(|(x, y)| x - y).collect();
            shift_state(graph, &mut a, &delta);
            (a, prev.dual.clone())
        }
        _ => (solver.initial_state()?, PrimalState::zeros(graph, grid, true)),
    };
    solver.run(a, b)
}

fn shift_state(graph: &MarkovGraph, a: &mut PrimalState, delta: &[f64]) {
    for row in a.rho.as_mut_slice().chunks_mut(delta.len()) {
        row.iter_mut().zip(delta).for_each(|(v, d)| *v += d);
    }
    for field in [&mut a.rho_bar, &mut a.q] {
        for row in field.as_mut_slice().chunks_mut(delta.len()) {
            row.iter_mut().zip(delta).for_each(|(v, d)| *v += d);
        }
    }
    let ne = graph.edge_count();
    for i in 0..a.m.rows() {
        let tm = &mut a.theta_minus.as_mut_slice()[i * ne..(i + 1) * ne];
        for (e, edge) in graph.edges().iter().enumerate() {
            tm[e] += delta[edge.from];
        }
        let tp = &mut a.theta_plus.as_mut_slice()[i * ne..(i + 1) * ne];
        for (e, edge) in graph.edges().iter().enumerate() {
            tp[e] += delta[edge.to];
        }
    }
    if let Some(rb) = &mut a.rho_b {
        rb.iter_mut().zip(delta).for_each(|(v, d)| *v += d);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_inner_reduces_to_rho_bar_term() {
        let g = MarkovGraph::two_node(1.0, 1.0).unwrap();
        let grid = TimeGrid::new(2).unwrap();
        let mut a = PrimalState::zeros(&g, grid, false);
        a.rho_bar.as_mut_slice().copy_from_slice(&[1.0, 2.0, 3.0, 4.0]);
        let expected = 0.5 * (0.5 * (1.0 + 4.0) + 0.5 * (9.0 + 16.0));
        assert!((h_inner(&g, &a, &a).unwrap() - expected).abs() < 1e-15);
        let z = PrimalState::zeros(&g, grid, false);
        assert_eq!(h_inner(&g, &z, &z).unwrap(), 0.0);
    }

    #[test]
    fn identical_end_points_give_zero_distance() {
        let g = crate::builtins::triangle();
        let grid = TimeGrid::new(10).unwrap();
        let rho = vec![0.5, 1.0, 1.5];
        let bc = BoundaryPair::new(&g, rho.clone(), rho).unwrap();
        let sol = solve_geodesic(&g, grid, &bc, &SolverConfig::default()).unwrap();
        assert!(sol.converged);
        assert!(sol.distance < 1e-6, "{}", sol.distance);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig { sigma: 1.0, tau: 1.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { lambda: 1.5, ..Default::default() }.validate().is_err());
        assert!(SolverConfig::default().validate().is_ok());
    }
}
