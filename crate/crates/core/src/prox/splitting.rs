//! Projections onto the linear coupling sets of the splitting:
//!
//! * `J±`: `θ⁻(x, y) = q(x)` and `θ⁺(x, y) = q(y)` on every edge,
//! * `Ĵavg`: `ρ̄(t_i) = ½(ρ(t_i) + ρ(t_{i+1}))` with pinned end points,
//! * `J=`: `ρ̄ = q`.
//!
//! Norms are the weighted ones of the product space; the closed forms below
//! already account for the weights `π(x)` and `½ Q(x, y) π(x)`.

use crate::error::{check_len, Result};
use crate::graph::MarkovGraph;

/// In-place projection onto `J±` for one time interval.
///
/// With `d(x) = Σ_y Q(x, y)`,
/// `r(x) = (q(x) + ½ Σ_y Q(x, y)(θ⁻(x, y) + θ⁺(y, x))) / (1 + d(x))`.
pub fn project_jpm_interval(graph: &MarkovGraph, q: &mut [f64], theta_minus: &mut [f64], theta_plus: &mut [f64]) {
    let d = graph.total_rates();
    for x in 0..graph.vertex_count() {
        let mut acc = q[x];
        for e in graph.out_edges(x) {
            let rate = graph.edges()[e].rate;
            acc += 0.5 * rate * (theta_minus[e] + theta_plus[graph.reverse(e)]);
        }
        q[x] = acc / (1.0 + d[x]);
    }
    for (e, edge) in graph.edges().iter().enumerate() {
        theta_minus[e] = q[edge.from];
        theta_plus[e] = q[edge.to];
    }
}

/// `v − proj_{J±}(v)` for one time interval, in place. `J±` is a subspace, so
/// this is the dual prox for every step size.
pub fn prox_dual_jpm_interval(graph: &MarkovGraph, q: &mut [f64], theta_minus: &mut [f64], theta_plus: &mut [f64]) {
    let d = graph.total_rates();
    let r: Vec<f64> = (0..graph.vertex_count())
        .map(|x| {
            let mut acc = q[x];
            for e in graph.out_edges(x) {
                acc += 0.5 * graph.edges()[e].rate * (theta_minus[e] + theta_plus[graph.reverse(e)]);
            }
            acc / (1.0 + d[x])
        })
        .collect();
    for (v, rx) in q.iter_mut().zip(&r) {
        *v -= rx;
    }
    for (e, edge) in graph.edges().iter().enumerate() {
        theta_minus[e] -= r[edge.from];
        theta_plus[e] -= r[edge.to];
    }
}

/// In-place projection onto `J=`: both fields become their average.
pub fn project_jeq(rho_bar: &mut [f64], q: &mut [f64]) {
    for (a, b) in rho_bar.iter_mut().zip(q.iter_mut()) {
        let m = 0.5 * (*a + *b);
        *a = m;
        *b = m;
    }
}

/// Which nodal densities are pinned in `Ĵavg`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pins {
    /// `ρ(t_0)` and `ρ(t_N)` fixed.
    Both,
    /// Only `ρ(t_0)` fixed.
    Start,
}

/// Prefactored projection onto `Ĵavg`.
///
/// Per vertex the multipliers `λ ∈ ℝ^N` solve a tridiagonal system with
/// diagonal `1 + ¼[t_i free] + ¼[t_{i+1} free]` and off-diagonal `¼[t_{i+1} free]`,
/// i.e. `¼ (5, 6, …, 6, 5)` and `¼` when both end points are pinned. Then
/// `ρ(t_i) += ½(λ_{i−1} + λ_i)` at free nodes and `ρ̄ −= λ`.
#[derive(Clone, Debug)]
pub struct JavgProjector {
    n_intervals: usize,
    pins: Pins,
    off: Vec<f64>,
    // Thomas algorithm: modified super-diagonal and inverse pivots.
    c_mod: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl JavgProjector {
    pub fn new(n_intervals: usize, pins: Pins) -> Self {
        let n = n_intervals;
        let free = |i: usize| -> f64 {
            let pinned = i == 0 || (i == n && pins == Pins::Both);
            if pinned {
                0.0
            } else {
                1.0
            }
        };
        let diag: Vec<f64> = (0..n).map(|i| 1.0 + 0.25 * free(i) + 0.25 * free(i + 1)).collect();
        let off: Vec<f64> = (0..n.saturating_sub(1)).map(|i| 0.25 * free(i + 1)).collect();
        let mut c_mod = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        for i in 0..n {
            let sub = if i > 0 { off[i - 1] } else { 0.0 };
            let prev = if i > 0 { c_mod[i - 1] } else { 0.0 };
            let pivot = diag[i] - sub * prev;
            inv_pivot[i] = 1.0 / pivot;
            c_mod[i] = if i + 1 < n { off[i] * inv_pivot[i] } else { 0.0 };
        }
        JavgProjector { n_intervals, pins, off, c_mod, inv_pivot }
    }

    pub fn pins(&self) -> Pins {
        self.pins
    }

    /// Dense system matrix, for inspection and testing.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let n = self.n_intervals;
        let mut a = vec![vec![0.0; n]; n];
        let free = |i: usize| !(i == 0 || (i == n && self.pins == Pins::Both));
        for i in 0..n {
            a[i][i] = 1.0 + 0.25 * (free(i) as u8 as f64) + 0.25 * (free(i + 1) as u8 as f64);
            if i + 1 < n {
                a[i][i + 1] = self.off[i];
                a[i + 1][i] = self.off[i];
            }
        }
        a
    }

    fn solve(&self, rhs: &mut [f64]) {
        let n = self.n_intervals;
        for i in 0..n {
            let sub = if i > 0 { self.off[i - 1] } else { 0.0 };
            let prev = if i > 0 { rhs[i - 1] } else { 0.0 };
            rhs[i] = (rhs[i] - sub * prev) * self.inv_pivot[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            rhs[i] -= self.c_mod[i] * rhs[i + 1];
        }
    }

    /// Projects `(ρ, ρ̄)` in place. `rho` has `N + 1` rows of width `n`, `rho_bar`
    /// has `N` rows; `rho_b` is required for [`Pins::Both`].
    pub fn project(&self, rho: &mut [f64], rho_bar: &mut [f64], n: usize, rho_a: &[f64], rho_b: Option<&[f64]>) -> Result<()> {
        let big_n = self.n_intervals;
        check_len("density path", (big_n + 1) * n, rho.len())?;
        check_len("interval densities", big_n * n, rho_bar.len())?;
        check_len("initial density", n, rho_a.len())?;
        rho[..n].copy_from_slice(rho_a);
        if self.pins == Pins::Both {
            let rb = rho_b.expect("both end points pinned");
            check_len("final density", n, rb.len())?;
            rho[big_n * n..].copy_from_slice(rb);
        }
        let last_free = self.pins == Pins::Start;
        let mut lambda = vec![0.0; big_n];
        for x in 0..n {
            for i in 0..big_n {
                lambda[i] = rho_bar[i * n + x] - 0.5 * (rho[i * n + x] + rho[(i + 1) * n + x]);
            }
            self.solve(&mut lambda);
            for i in 1..=big_n {
                if i == big_n && !last_free {
                    break;
                }
                let next = if i < big_n { lambda[i] } else { 0.0 };
                rho[i * n + x] += 0.5 * (lambda[i - 1] + next);
            }
            for i in 0..big_n {
                rho_bar[i * n + x] -= lambda[i];
            }
        }
        Ok(())
    }

    /// `v − σ proj(v/σ)` in place: the prox of `σ I*` for the affine set `Ĵavg`.
    pub fn prox_dual(
        &self,
        sigma: f64,
        rho: &mut [f64],
        rho_bar: &mut [f64],
        n: usize,
        rho_a: &[f64],
        rho_b: Option<&[f64]>,
    ) -> Result<()> {
        let mut pr: Vec<f64> = rho.iter().map(|v| v / sigma).collect();
        let mut pb: Vec<f64> = rho_bar.iter().map(|v| v / sigma).collect();
        self.project(&mut pr, &mut pb, n, rho_a, rho_b)?;
        for (v, p) in rho.iter_mut().zip(&pr) {
            *v -= sigma * p;
        }
        for (v, p) in rho_bar.iter_mut().zip(&pb) {
            *v -= sigma * p;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jpm_two_node_example() {
        let g = MarkovGraph::two_node(1.0, 1.0).unwrap();
        let mut q = vec![1.0, 1.0];
        let mut tm = vec![0.0; 2];
        let mut tp = vec![0.0; 2];
        prox_dual_jpm_interval(&g, &mut q, &mut tm, &mut tp);
        assert_eq!(q, vec![0.5, 0.5]);
        assert_eq!(tm, vec![-0.5, -0.5]);
        assert_eq!(tp, vec![-0.5, -0.5]);
    }

    #[test]
    fn jpm_member_maps_to_zero() {
        let g = crate::builtins::triangle();
        let mut q = vec![0.3, 1.2, 0.7];
        let mut tm: Vec<f64> = g.edges().iter().map(|e| q[e.from]).collect();
        let mut tp: Vec<f64> = g.edges().iter().map(|e| q[e.to]).collect();
        prox_dual_jpm_interval(&g, &mut q, &mut tm, &mut tp);
        assert!(q.iter().chain(&tm).chain(&tp).all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn jeq_examples() {
        let mut a = vec![0.0];
        let mut b = vec![2.0];
        project_jeq(&mut a, &mut b);
        assert_eq!((a[0], b[0]), (1.0, 1.0));
    }

    #[test]
    fn javg_matrix_shapes() {
        let p = JavgProjector::new(3, Pins::Both);
        let m = p.matrix();
        assert_eq!(m[0], vec![1.25, 0.25, 0.0]);
        assert_eq!(m[1], vec![0.25, 1.5, 0.25]);
        assert_eq!(m[2], vec![0.0, 0.25, 1.25]);
        assert_eq!(JavgProjector::new(1, Pins::Both).matrix(), vec![vec![1.0]]);
        assert_eq!(JavgProjector::new(3, Pins::Start).matrix()[2][2], 1.5);
    }

    #[test]
    fn javg_projection_lands_in_set() {
        let n = 2;
        let big_n = 4;
        let p = JavgProjector::new(big_n, Pins::Both);
        let mut rho: Vec<f64> = (0..(big_n + 1) * n).map(|k| (k as f64 * 0.37).sin()).collect();
        let mut bar: Vec<f64> = (0..big_n * n).map(|k| (k as f64 * 0.91).cos()).collect();
        let (ra, rb) = (vec![2.0, 0.0], vec![0.0, 2.0]);
        p.project(&mut rho, &mut bar, n, &ra, Some(&rb)).unwrap();
        assert_eq!(&rho[..n], ra.as_slice());
        assert_eq!(&rho[big_n * n..], rb.as_slice());
        for i in 0..big_n {
            for x in 0..n {
                let avg = 0.5 * (rho[i * n + x] + rho[(i + 1) * n + x]);
                assert!((bar[i * n + x] - avg).abs() < 1e-14);
            }
        }
        let (r0, b0) = (rho.clone(), bar.clone());
        p.project(&mut rho, &mut bar, n, &ra, Some(&rb)).unwrap();
        assert!(rho.iter().zip(&r0).chain(bar.iter().zip(&b0)).all(|(a, b)| (a - b).abs() < 1e-14));
    }
}
