//! Uniform time grids on `[0, 1]` and the fields living on them.
//!
//! Densities are continuous and piecewise affine in time, stored by their
//! `N + 1` nodal values. Momenta and the auxiliary variables are piecewise
//! constant, stored by one value per interval `[t_i, t_{i+1})`. All fields are
//! flat, time-major buffers: row `i` holds the vector at time index `i`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::graph::MarkovGraph;
use crate::means::Mean;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeGrid {
    n_intervals: usize,
}

impl TimeGrid {
    pub fn new(n_intervals: usize) -> Result<Self> {
        if n_intervals == 0 {
            return Err(Error::InvalidConfig("time grid needs at least one interval".into()));
        }
        Ok(TimeGrid { n_intervals })
    }

    pub fn n_intervals(&self) -> usize {
        self.n_intervals
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n_intervals as f64
    }

    /// `t_i = i/N`.
    pub fn node_time(&self, i: usize) -> f64 {
        i as f64 / self.n_intervals as f64
    }

    pub fn node_times(&self) -> Vec<f64> {
        (0..=self.n_intervals).map(|i| self.node_time(i)).collect()
    }
}

macro_rules! time_field {
    ($(#[$meta:meta])* $name:ident, $rows:expr) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name {
            width: usize,
            data: Vec<f64>,
        }

        impl $name {
            pub fn zeros(grid: TimeGrid, width: usize) -> Self {
                let rows: fn(usize) -> usize = $rows;
                $name { width, data: vec![0.0; rows(grid.n_intervals()) * width] }
            }

            pub fn constant(grid: TimeGrid, values: &[f64]) -> Self {
                let rows: fn(usize) -> usize = $rows;
                let mut data = Vec::with_capacity(rows(grid.n_intervals()) * values.len());
                for _ in 0..rows(grid.n_intervals()) {
                    data.extend_from_slice(values);
                }
                $name { width: values.len(), data }
            }

            pub fn from_flat(grid: TimeGrid, width: usize, data: Vec<f64>) -> Result<Self> {
                let rows: fn(usize) -> usize = $rows;
                check_len(stringify!($name), rows(grid.n_intervals()) * width, data.len())?;
                Ok($name { width, data })
            }

            pub fn from_rows(grid: TimeGrid, rows_in: &[Vec<f64>]) -> Result<Self> {
                let rows: fn(usize) -> usize = $rows;
                check_len(stringify!($name), rows(grid.n_intervals()), rows_in.len())?;
                let width = rows_in.first().map_or(0, Vec::len);
                let mut data = Vec::with_capacity(rows_in.len() * width);
                for r in rows_in {
                    check_len(stringify!($name), width, r.len())?;
                    data.extend_from_slice(r);
                }
                Ok($name { width, data })
            }

            pub fn rows(&self) -> usize {
                if self.width == 0 { 0 } else { self.data.len() / self.width }
            }

            pub fn width(&self) -> usize {
                self.width
            }

            pub fn row(&self, i: usize) -> &[f64] {
                &self.data[i * self.width..(i + 1) * self.width]
            }

            pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
                &mut self.data[i * self.width..(i + 1) * self.width]
            }

            pub fn iter_rows(&self) -> std::slice::Chunks<'_, f64> {
                self.data.chunks(self.width.max(1))
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.data
            }

            pub fn as_mut_slice(&mut self) -> &mut [f64] {
                &mut self.data
            }

            pub fn into_vec(self) -> Vec<f64> {
                self.data
            }

            pub fn to_rows(&self) -> Vec<Vec<f64>> {
                self.iter_rows().map(<[f64]>::to_vec).collect()
            }

            /// Largest absolute entry.
            pub fn sup_norm(&self) -> f64 {
                self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
            }
        }
    };
}

time_field!(
    /// Nodal values `ρ(t_0), …, ρ(t_N)` of a piecewise affine density path.
    DensityPath,
    |n| n + 1
);
time_field!(
    /// One node vector per time interval.
    IntervalNodeField,
    |n| n
);
time_field!(
    /// One edge vector per time interval.
    IntervalEdgeField,
    |n| n
);

impl DensityPath {
    pub fn grid(&self) -> TimeGrid {
        TimeGrid { n_intervals: self.rows().saturating_sub(1).max(1) }
    }

    /// Linear interpolation in time between two densities.
    pub fn linear(grid: TimeGrid, start: &[f64], end: &[f64]) -> Result<Self> {
        check_len("path end point", start.len(), end.len())?;
        let rows: Vec<Vec<f64>> = (0..=grid.n_intervals())
            .map(|i| {
                let t = grid.node_time(i);
                start.iter().zip(end).map(|(a, b)| (1.0 - t) * a + t * b).collect()
            })
            .collect();
        DensityPath::from_rows(grid, &rows)
    }

    /// Path traversed backwards in time.
    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        let n = self.rows();
        for i in 0..n {
            out.row_mut(i).copy_from_slice(self.row(n - 1 - i));
        }
        out
    }
}

impl IntervalNodeField {
    pub fn grid(&self) -> TimeGrid {
        TimeGrid { n_intervals: self.rows().max(1) }
    }
}

impl IntervalEdgeField {
    pub fn grid(&self) -> TimeGrid {
        TimeGrid { n_intervals: self.rows().max(1) }
    }
}

/// End point densities of a transport problem.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPair {
    pub rho_a: Vec<f64>,
    pub rho_b: Vec<f64>,
}

impl BoundaryPair {
    /// Validates both densities as probability densities with respect to `π`.
    pub fn new(graph: &MarkovGraph, rho_a: Vec<f64>, rho_b: Vec<f64>) -> Result<Self> {
        graph.validate_density(&rho_a)?;
        graph.validate_density(&rho_b)?;
        Ok(BoundaryPair { rho_a, rho_b })
    }

    pub fn swapped(&self) -> Self {
        BoundaryPair { rho_a: self.rho_b.clone(), rho_b: self.rho_a.clone() }
    }
}

/// `(avg_h ρ)(t_i) = ½(ρ(t_i) + ρ(t_{i+1}))`.
pub fn avg_h(rho: &DensityPath) -> IntervalNodeField {
    let n = rho.rows() - 1;
    let mut data = Vec::with_capacity(n * rho.width());
    for i in 0..n {
        data.extend(rho.row(i).iter().zip(rho.row(i + 1)).map(|(a, b)| 0.5 * (a + b)));
    }
    IntervalNodeField { width: rho.width(), data }
}

/// `(∂_t ρ)(t_i) = (ρ(t_{i+1}) − ρ(t_i))/h`.
pub fn time_derivative(rho: &DensityPath) -> IntervalNodeField {
    let n = rho.rows() - 1;
    let inv_h = n as f64;
    let mut data = Vec::with_capacity(n * rho.width());
    for i in 0..n {
        data.extend(rho.row(i).iter().zip(rho.row(i + 1)).map(|(a, b)| (b - a) * inv_h));
    }
    IntervalNodeField { width: rho.width(), data }
}

/// The piecewise affine path through the given samples at `t_0, …, t_N`.
pub fn lagrange_interpolate(grid: TimeGrid, samples: &[Vec<f64>]) -> Result<DensityPath> {
    DensityPath::from_rows(grid, samples)
}

/// Samples a continuous path `t ↦ f(t)` at the grid nodes.
pub fn lagrange_interpolate_fn<F>(grid: TimeGrid, f: F) -> DensityPath
where
    F: Fn(f64) -> Vec<f64>,
{
    let rows: Vec<Vec<f64>> = grid.node_times().into_iter().map(f).collect();
    DensityPath::from_rows(grid, &rows).expect("sampler returns equal lengths")
}

fn check_shapes(graph: &MarkovGraph, rho: &DensityPath, m: &IntervalEdgeField) -> Result<()> {
    check_len("density path width", graph.vertex_count(), rho.width())?;
    check_len("momentum width", graph.edge_count(), m.width())?;
    check_len("momentum intervals", rho.rows().saturating_sub(1), m.rows())
}

/// Residual `∂_t ρ + div m` per interval and the largest deviation of the path
/// end points from the boundary data.
pub fn ce_residual(
    graph: &MarkovGraph,
    rho: &DensityPath,
    m: &IntervalEdgeField,
    bc: &BoundaryPair,
) -> Result<(IntervalNodeField, f64)> {
    check_shapes(graph, rho, m)?;
    let mut residual = time_derivative(rho);
    let mut div = vec![0.0; graph.vertex_count()];
    for i in 0..m.rows() {
        graph.divergence_into(m.row(i), &mut div);
        for (r, d) in residual.row_mut(i).iter_mut().zip(&div) {
            *r += d;
        }
    }
    let last = rho.rows() - 1;
    let violation = rho
        .row(0)
        .iter()
        .zip(&bc.rho_a)
        .chain(rho.row(last).iter().zip(&bc.rho_b))
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    Ok((residual, violation))
}

/// Benamou–Brenier integrand `Φ(ϑ, m) = m²/ϑ`, with `Φ(0, 0) = 0` and `+∞` otherwise.
pub fn edge_action_phi(vartheta: f64, m: f64) -> f64 {
    if vartheta > 0.0 {
        m * m / vartheta
    } else if vartheta == 0.0 && m == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// `α(s, t, m) = Φ(θ(s, t), m)`; `+∞` whenever `s` or `t` is negative and `m ≠ 0`.
pub fn alpha<M: Mean + ?Sized>(s: f64, t: f64, m: f64, mean: &M) -> f64 {
    let theta = mean.theta(s, t);
    if theta.is_nan() || theta < 0.0 {
        return if m == 0.0 && s.min(t) >= 0.0 { 0.0 } else { f64::INFINITY };
    }
    edge_action_phi(theta, m)
}

/// `𝒜_h(ρ, m) = (h/2) Σ_i Σ_(x,y) α(ρ̄_i(x), ρ̄_i(y), m_i(x,y)) Q(x,y) π(x)` with
/// `ρ̄ = avg_h ρ`. Saturates at `+∞`.
pub fn discrete_action<M: Mean + ?Sized>(
    graph: &MarkovGraph,
    rho: &DensityPath,
    m: &IntervalEdgeField,
    mean: &M,
) -> Result<f64> {
    check_shapes(graph, rho, m)?;
    let avg = avg_h(rho);
    let weights = graph.edge_weights();
    let mut total = 0.0;
    for i in 0..m.rows() {
        let r = avg.row(i);
        for ((edge, &mi), &w) in graph.edges().iter().zip(m.row(i)).zip(weights) {
            let a = alpha(r[edge.from], r[edge.to], mi, mean);
            if a == f64::INFINITY {
                return Ok(f64::INFINITY);
            }
            total += a * w;
        }
    }
    Ok(0.5 * total / m.rows() as f64)
}

/// [`discrete_action`] with averages clamped at zero and inadmissible entries
/// (vanishing mean, nonzero momentum) skipped. Returns the action and the
/// number of skipped directed edge entries; equals the exact action when none are skipped.
pub fn clamped_action<M: Mean + ?Sized>(
    graph: &MarkovGraph,
    rho: &DensityPath,
    m: &IntervalEdgeField,
    mean: &M,
) -> Result<(f64, usize)> {
    check_shapes(graph, rho, m)?;
    let avg = avg_h(rho);
    let weights = graph.edge_weights();
    let (mut total, mut skipped) = (0.0, 0);
    for i in 0..m.rows() {
        let r = avg.row(i);
        for ((edge, &mi), &w) in graph.edges().iter().zip(m.row(i)).zip(weights) {
            let a = alpha(r[edge.from].max(0.0), r[edge.to].max(0.0), mi, mean);
            if a.is_finite() {
                total += a * w;
            } else {
                skipped += 1;
            }
        }
    }
    Ok((0.5 * total / m.rows() as f64, skipped))
}

/// `m̄(x, y) = ½(m(x, y) − m(y, x))`.
pub fn antisymmetrize(graph: &MarkovGraph, m: &IntervalEdgeField) -> Result<IntervalEdgeField> {
    check_len("momentum width", graph.edge_count(), m.width())?;
    let mut out = m.clone();
    for i in 0..m.rows() {
        let src = m.row(i);
        for (e, o) in out.row_mut(i).iter_mut().enumerate() {
            *o = 0.5 * (src[e] - src[graph.reverse(e)]);
        }
    }
    Ok(out)
}

/// `Σ_x ρ(t_i, x) π(x)` for every node time.
pub fn masses(graph: &MarkovGraph, rho: &DensityPath) -> Vec<f64> {
    rho.iter_rows().map(|r| graph.mass(r)).collect()
}

/// Doubles the number of intervals: inserts nodal midpoints and repeats each
/// interval value in both halves.
pub fn refine(rho: &DensityPath, m: &IntervalEdgeField) -> (DensityPath, IntervalEdgeField) {
    let n = m.rows();
    let mut rho_data = Vec::with_capacity((2 * n + 1) * rho.width());
    let mut m_data = Vec::with_capacity(2 * n * m.width());
    for i in 0..n {
        rho_data.extend_from_slice(rho.row(i));
        rho_data.extend(rho.row(i).iter().zip(rho.row(i + 1)).map(|(a, b)| 0.5 * (a + b)));
        m_data.extend_from_slice(m.row(i));
        m_data.extend_from_slice(m.row(i));
    }
    rho_data.extend_from_slice(rho.row(n));
    (
        DensityPath { width: rho.width(), data: rho_data },
        IntervalEdgeField { width: m.width(), data: m_data },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::means::MeanKind;
    use std::f64::consts::E;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(n).unwrap()
    }

    #[test]
    fn averaging_and_derivatives() {
        let g = grid(1);
        let rho = DensityPath::from_rows(g, &[vec![1.0], vec![3.0]]).unwrap();
        assert_eq!(avg_h(&rho).as_slice(), &[2.0]);

        let g4 = grid(4);
        let lin = lagrange_interpolate_fn(g4, |t| vec![t]);
        let mid: Vec<f64> = (0..4).map(|i| (i as f64 + 0.5) * 0.25).collect();
        assert_eq!(avg_h(&lin).as_slice(), mid.as_slice());

        let c = DensityPath::constant(g4, &[2.0, 5.0]);
        assert_eq!(avg_h(&c), IntervalNodeField::constant(g4, &[2.0, 5.0]));
        assert!(time_derivative(&c).sup_norm() == 0.0);

        let hat = DensityPath::from_rows(grid(2), &[vec![0.0], vec![1.0], vec![0.0]]).unwrap();
        assert_eq!(time_derivative(&hat).as_slice(), &[2.0, -2.0]);

        let quad = lagrange_interpolate_fn(grid(2), |t| vec![t * t]);
        assert_eq!(quad.as_slice(), &[0.0, 0.25, 1.0]);
        assert!(lagrange_interpolate(grid(2), &[vec![0.0], vec![1.0]]).is_err());
    }

    #[test]
    fn continuity_residual_examples() {
        let g = MarkovGraph::two_node(1.0, 1.0).unwrap();
        let tg = grid(3);
        let bc = BoundaryPair::new(&g, vec![2.0, 0.0], vec![0.0, 2.0]).unwrap();
        let rho = DensityPath::linear(tg, &bc.rho_a, &bc.rho_b).unwrap();
        let ab = g.edge_index(0, 1).unwrap();
        let mut row = vec![0.0; 2];
        row[ab] = -2.0;
        row[g.reverse(ab)] = 2.0;
        let m = IntervalEdgeField::constant(tg, &row);
        let (res, viol) = ce_residual(&g, &rho, &m, &bc).unwrap();
        assert!(res.sup_norm() < 1e-14);
        assert_eq!(viol, 0.0);

        let zero = IntervalEdgeField::zeros(tg, 2);
        let (res, _) = ce_residual(&g, &rho, &zero, &bc).unwrap();
        assert!(res.sup_norm() > 1.0);

        let same = BoundaryPair::new(&g, vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        let flat = DensityPath::constant(tg, &[1.0, 1.0]);
        let (res, viol) = ce_residual(&g, &flat, &zero, &same).unwrap();
        assert_eq!((res.sup_norm(), viol), (0.0, 0.0));
    }

    #[test]
    fn alpha_and_phi() {
        let log = MeanKind::Logarithmic;
        assert_eq!(alpha(1.0, 1.0, 2.0, &log), 4.0);
        assert_eq!(alpha(0.0, 1.0, 0.0, &log), 0.0);
        assert_eq!(alpha(0.0, 1.0, 1.0, &log), f64::INFINITY);
        assert_eq!(alpha(-1.0, 1.0, 0.0, &log), f64::INFINITY);
        let c: f64 = 0.3;
        assert!((alpha(1.0, E, c, &log) - c * c / (E - 1.0)).abs() < 1e-15);
        assert_eq!(edge_action_phi(1.0, 2.0), 4.0);
        assert_eq!(edge_action_phi(0.0, 0.0), 0.0);
        assert_eq!(edge_action_phi(0.0, 1.0), f64::INFINITY);
    }

    #[test]
    fn action_examples() {
        let g = MarkovGraph::two_node(1.0, 1.0).unwrap();
        let tg = grid(5);
        let rho = DensityPath::constant(tg, &[1.0, 1.0]);
        let c = 0.7;
        let ab = g.edge_index(0, 1).unwrap();
        let mut row = vec![0.0; 2];
        row[ab] = c;
        row[g.reverse(ab)] = -c;
        let m = IntervalEdgeField::constant(tg, &row);
        let log = MeanKind::Logarithmic;
        assert!((discrete_action(&g, &rho, &m, &log).unwrap() - 0.5 * c * c).abs() < 1e-15);
        let zero = IntervalEdgeField::zeros(tg, 2);
        assert_eq!(discrete_action(&g, &rho, &zero, &log).unwrap(), 0.0);
        let neg = DensityPath::constant(tg, &[-1.0, 1.0]);
        assert_eq!(discrete_action(&g, &neg, &m, &log).unwrap(), f64::INFINITY);
    }

    #[test]
    fn antisymmetrize_examples() {
        let g = MarkovGraph::two_node(1.0, 1.0).unwrap();
        let tg = grid(2);
        let anti = IntervalEdgeField::from_flat(tg, 2, vec![1.0, -1.0, 2.0, -2.0]).unwrap();
        assert_eq!(antisymmetrize(&g, &anti).unwrap(), anti);
        let sym = IntervalEdgeField::from_flat(tg, 2, vec![1.0, 1.0, 3.0, 3.0]).unwrap();
        assert_eq!(antisymmetrize(&g, &sym).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn refinement_keeps_shapes() {
        let tg = grid(3);
        let rho = DensityPath::linear(tg, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        let m = IntervalEdgeField::constant(tg, &[1.0, -1.0]);
        let (r2, m2) = refine(&rho, &m);
        assert_eq!(r2.rows(), 7);
        assert_eq!(m2.rows(), 6);
        assert_eq!(r2.row(1), &[5.0 / 6.0, 1.0 / 6.0]);
        assert_eq!(rho.reversed().row(0), rho.row(3));
    }
}
