//! Projection onto the discrete continuity equation.
//!
//! The nearest point of `{(ρ, m) : (ρ(t_{i+1}) − ρ(t_i))/h + div m(t_i) = 0}`
//! (with end point constraints) is `m + ∇φ`, `ρ(t_i) + (φ(t_i) − φ(t_{i−1}))/h`
//! where the multiplier `φ`, one node vector per interval, solves the
//! space-time elliptic system
//!
//! ```text
//! (T/h² ⊗ Π + I ⊗ Π(D − Q)) φ = Π r,    r_i = (ρ̂(t_{i+1}) − ρ̂(t_i))/h + div m(t_i).
//! ```
//!
//! `T` is the Neumann second difference in time (`1, 2, …, 2, 1` on the
//! diagonal, `−1` off it). With a free end point the last diagonal entry gains
//! `½` and the system is definite. With both end points fixed the kernel is
//! the constants; the first unknown is pinned to zero and `φ` is shifted to
//! zero mean afterwards.
//!
//! Unknowns are ordered time-major, so the matrix is banded with half
//! bandwidth `card 𝒳` and is factored once by a banded Cholesky decomposition.

use crate::error::{check_len, Error, Result};
use crate::graph::MarkovGraph;
use crate::time_grid::{BoundaryPair, DensityPath, IntervalEdgeField, TimeGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CeMode {
    /// `ρ(t_0) = ρ_A` and `ρ(t_N) = ρ_B` prescribed.
    Fixed,
    /// `ρ(t_0) = ρ_A` prescribed; `ρ(t_N)` coupled to a free variable `ρ_B`.
    Free,
}

#[derive(Clone, Debug)]
enum Factor {
    Banded { bw: usize, lower: Vec<f64> },
    Cg,
}

/// Cached solver for the continuity equation projection on one `(graph, N, mode)`.
#[derive(Clone, Debug)]
pub struct CEProjector {
    graph: MarkovGraph,
    grid: TimeGrid,
    mode: CeMode,
    factor: Factor,
}

impl CEProjector {
    pub fn new(graph: &MarkovGraph, grid: TimeGrid, mode: CeMode) -> Result<Self> {
        let mut p = CEProjector { graph: graph.clone(), grid, mode, factor: Factor::Cg };
        p.factor = p.factorize()?;
        Ok(p)
    }

    /// Same projection, solved by conjugate gradients instead of a factorization.
    pub fn new_cg(graph: &MarkovGraph, grid: TimeGrid, mode: CeMode) -> Self {
        CEProjector { graph: graph.clone(), grid, mode, factor: Factor::Cg }
    }

    pub fn mode(&self) -> CeMode {
        self.mode
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    fn time_diag(&self, i: usize) -> f64 {
        let n = self.grid.n_intervals();
        let mut d = 0.0;
        if i > 0 {
            d += 1.0;
        }
        if i + 1 < n {
            d += 1.0;
        }
        if i + 1 == n && self.mode == CeMode::Free {
            d += 0.5;
        }
        d
    }

    fn pinned(&self) -> bool {
        self.mode == CeMode::Fixed
    }

    fn factorize(&self) -> Result<Factor> {
        let n = self.graph.vertex_count();
        let big_n = self.grid.n_intervals();
        let size = n * big_n;
        let bw = n;
        let stride = bw + 1;
        let inv_h2 = (big_n * big_n) as f64;
        let pi = self.graph.pi();
        let d = self.graph.total_rates();

        // band[k * stride + j] = A(k, k − j)
        let mut band = vec![0.0; size * stride];
        for i in 0..big_n {
            let td = self.time_diag(i) * inv_h2;
            for x in 0..n {
                let k = i * n + x;
                band[k * stride] = td * pi[x] + pi[x] * d[x];
                if i > 0 {
                    band[k * stride + n] = -inv_h2 * pi[x];
                }
                for e in self.graph.out_edges(x) {
                    let y = self.graph.edges()[e].to;
                    if y < x {
                        band[k * stride + (x - y)] = -self.graph.edge_weights()[e];
                    }
                }
            }
        }
        if self.pinned() {
            for j in 1..stride.min(size) {
                band[j * stride + j] = 0.0;
            }
            band[0] = 1.0;
        }

        for k in 0..size {
            let jmin = k.saturating_sub(bw);
            for j in jmin..=k {
                let mut s = band[k * stride + (k - j)];
                let lmin = jmin.max(j.saturating_sub(bw));
                for l in lmin..j {
                    s -= band[k * stride + (k - l)] * band[j * stride + (j - l)];
                }
                if j == k {
                    if !(s > 0.0) {
                        return Err(Error::LinearSolve(format!(
                            "continuity system not positive definite at row {k} (pivot {s})"
                        )));
                    }
                    band[k * stride] = s.sqrt();
                } else {
                    band[k * stride + (k - j)] = s / band[j * stride];
                }
            }
        }
        Ok(Factor::Banded { bw, lower: band })
    }

    fn apply(&self, phi: &[f64], out: &mut [f64]) {
        let n = self.graph.vertex_count();
        let big_n = self.grid.n_intervals();
        let inv_h2 = (big_n * big_n) as f64;
        let pi = self.graph.pi();
        let mut lap = vec![0.0; n];
        for i in 0..big_n {
            let row = &phi[i * n..(i + 1) * n];
            self.graph.laplacian_into(row, &mut lap);
            for x in 0..n {
                let mut t = self.time_diag(i) * row[x];
                if i > 0 {
                    t -= phi[(i - 1) * n + x];
                }
                if i + 1 < big_n {
                    t -= phi[(i + 1) * n + x];
                }
                out[i * n + x] = pi[x] * (inv_h2 * t - lap[x]);
            }
        }
    }

    fn solve(&self, rhs: &mut [f64]) -> Result<()> {
        match &self.factor {
            Factor::Banded { bw, lower } => {
                if self.pinned() {
                    rhs[0] = 0.0;
                }
                let stride = bw + 1;
                let size = rhs.len();
                for k in 0..size {
                    let mut s = rhs[k];
                    for j in k.saturating_sub(*bw)..k {
                        s -= lower[k * stride + (k - j)] * rhs[j];
                    }
                    rhs[k] = s / lower[k * stride];
                }
                for k in (0..size).rev() {
                    let mut s = rhs[k];
                    for j in k + 1..(k + bw + 1).min(size) {
                        s -= lower[j * stride + (j - k)] * rhs[j];
                    }
                    rhs[k] = s / lower[k * stride];
                }
                Ok(())
            }
            Factor::Cg => self.solve_cg(rhs),
        }
    }

    fn solve_cg(&self, rhs: &mut [f64]) -> Result<()> {
        let size = rhs.len();
        let b = rhs.to_vec();
        let project_mean = |v: &mut [f64]| {
            if self.pinned() {
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                v.iter_mut().for_each(|x| *x -= mean);
            }
        };
        let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut x = vec![0.0; size];
        if b_norm == 0.0 {
            rhs.copy_from_slice(&x);
            return Ok(());
        }
        let mut r = b.clone();
        let mut p = r.clone();
        let mut ap = vec![0.0; size];
        let mut rr: f64 = r.iter().map(|v| v * v).sum();
        let max_iter = 10 * size.max(10);
        for _ in 0..max_iter {
            self.apply(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if pap <= 0.0 {
                break;
            }
            let alpha = rr / pap;
            for k in 0..size {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            let rr_new: f64 = r.iter().map(|v| v * v).sum();
            if rr_new.sqrt() <= 1e-12 * b_norm {
                project_mean(&mut x);
                rhs.copy_from_slice(&x);
                return Ok(());
            }
            let beta = rr_new / rr;
            rr = rr_new;
            for k in 0..size {
                p[k] = r[k] + beta * p[k];
            }
        }
        Err(Error::LinearSolve(format!(
            "conjugate gradients did not reach 1e-12 relative residual in {max_iter} iterations"
        )))
    }

    /// Core projection on flat buffers. `rho` has `N + 1` rows, `m` has `N`
    /// rows. In free mode `rho_b` is the free variable and is updated; in fixed
    /// mode it is the prescribed end point and is left untouched.
    /// Returns the multiplier `φ`.
    pub fn project_slices(&self, rho: &mut [f64], m: &mut [f64], rho_a: &[f64], rho_b: &mut [f64]) -> Result<Vec<f64>> {
        let n = self.graph.vertex_count();
        let ne = self.graph.edge_count();
        let big_n = self.grid.n_intervals();
        check_len("density path", (big_n + 1) * n, rho.len())?;
        check_len("momentum", big_n * ne, m.len())?;
        check_len("initial density", n, rho_a.len())?;
        check_len("final density", n, rho_b.len())?;
        let h = self.grid.h();
        let inv_h = big_n as f64;
        let pi = self.graph.pi();

        let hat = |i: usize, x: usize| -> f64 {
            if i == 0 {
                rho_a[x]
            } else if i == big_n {
                match self.mode {
                    CeMode::Fixed => rho_b[x],
                    CeMode::Free => 0.5 * (rho[i * n + x] + rho_b[x]),
                }
            } else {
                rho[i * n + x]
            }
        };

        let mut phi = vec![0.0; big_n * n];
        let mut div = vec![0.0; n];
        for i in 0..big_n {
            self.graph.divergence_into(&m[i * ne..(i + 1) * ne], &mut div);
            for x in 0..n {
                phi[i * n + x] = pi[x] * ((hat(i + 1, x) - hat(i, x)) * inv_h + div[x]);
            }
        }
        self.solve(&mut phi)?;
        if self.pinned() {
            let mean = phi.iter().sum::<f64>() / phi.len() as f64;
            phi.iter_mut().for_each(|v| *v -= mean);
        }

        let mut grad = vec![0.0; ne];
        for i in 0..big_n {
            self.graph.gradient_into(&phi[i * n..(i + 1) * n], &mut grad);
            for (mv, g) in m[i * ne..(i + 1) * ne].iter_mut().zip(&grad) {
                *mv += g;
            }
        }
        for j in 1..big_n {
            for x in 0..n {
                rho[j * n + x] += (phi[j * n + x] - phi[(j - 1) * n + x]) * inv_h;
            }
        }
        rho[..n].copy_from_slice(rho_a);
        match self.mode {
            CeMode::Fixed => rho[big_n * n..].copy_from_slice(rho_b),
            CeMode::Free => {
                for x in 0..n {
                    let z = 0.5 * (rho[big_n * n + x] + rho_b[x] - phi[(big_n - 1) * n + x] / h);
                    rho[big_n * n + x] = z;
                    rho_b[x] = z;
                }
            }
        }
        Ok(phi)
    }

    /// Nearest point of `CE_h(ρ_A, ρ_B)` to `(ρ, m)`.
    pub fn project_fixed(&self, rho: &DensityPath, m: &IntervalEdgeField, bc: &BoundaryPair) -> Result<(DensityPath, IntervalEdgeField)> {
        if self.mode != CeMode::Fixed {
            return Err(Error::InvalidConfig("projector was built for a free end point".into()));
        }
        let (ma, mb) = (self.graph.mass(&bc.rho_a), self.graph.mass(&bc.rho_b));
        if (ma - mb).abs() > 1e-12 * ma.abs().max(mb.abs()).max(1.0) {
            return Err(Error::InvalidDensity(format!("boundary masses differ: {ma} vs {mb}")));
        }
        let mut r = rho.clone();
        let mut mm = m.clone();
        let mut rb = bc.rho_b.clone();
        self.project_slices(r.as_mut_slice(), mm.as_mut_slice(), &bc.rho_a, &mut rb)?;
        Ok((r, mm))
    }

    /// Nearest point of `CE_h(ρ_A)` to `(ρ, m, ρ_B)`, the norm including `h‖ρ_B‖²_π`.
    pub fn project_free(
        &self,
        rho: &DensityPath,
        m: &IntervalEdgeField,
        rho_b: &[f64],
        rho_a: &[f64],
    ) -> Result<(DensityPath, IntervalEdgeField, Vec<f64>)> {
        if self.mode != CeMode::Free {
            return Err(Error::InvalidConfig("projector was built for fixed end points".into()));
        }
        let mut r = rho.clone();
        let mut mm = m.clone();
        let mut rb = rho_b.to_vec();
        self.project_slices(r.as_mut_slice(), mm.as_mut_slice(), rho_a, &mut rb)?;
        Ok((r, mm, rb))
    }
}
