//! Independent reference computations used to validate the solver: the exact
//! two-node geodesics, brute-force projections and finite differences.
//!
//! Nothing here shares code with the projections in [`crate::prox`] beyond the
//! evaluation of `θ` itself.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MarkovGraph;
use crate::means::{Mean, MeanKind};
use crate::roots::{newton_bisect, RootOptions};
use crate::time_grid::TimeGrid;

/// Closed-form geodesics on the two-point space with rates `Q(a, b) = p`, `Q(b, a) = q`.
///
/// Probability densities are parametrized by `r ∈ [−1, 1]` through
/// `ρ(r) = ((p + q)/q · (1 − r)/2, (p + q)/p · (1 + r)/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoNodeExact {
    pub p: f64,
    pub q: f64,
    pub mean: MeanKind,
}

/// Explicit Euler approximation of the geodesic parameter `γ(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeTrajectory {
    pub times: Vec<f64>,
    pub gamma: Vec<f64>,
    /// `|γ(1) − β|`.
    pub terminal_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
}

impl TwoNodeExact {
    pub fn new(p: f64, q: f64, mean: MeanKind) -> Result<Self> {
        if !(p > 0.0 && q > 0.0 && p.is_finite() && q.is_finite()) {
            return Err(Error::Domain(format!("two-node rates must be positive, got p = {p}, q = {q}")));
        }
        Ok(TwoNodeExact { p, q, mean })
    }

    pub fn graph(&self) -> Result<MarkovGraph> {
        MarkovGraph::two_node(self.p, self.q)
    }

    pub fn density(&self, r: f64) -> [f64; 2] {
        let s = self.p + self.q;
        [s / self.q * (1.0 - r) / 2.0, s / self.p * (1.0 + r) / 2.0]
    }

    /// Inverse of [`Self::density`] read off the second coordinate.
    pub fn parameter(&self, rho: &[f64]) -> f64 {
        2.0 * self.p * rho[1] / (self.p + self.q) - 1.0
    }

    fn theta_at(&self, r: f64) -> f64 {
        let [a, b] = self.density(r.clamp(-1.0, 1.0));
        self.mean.theta(a, b).max(0.0)
    }

    fn prefactor(&self) -> f64 {
        0.5 * (1.0 / self.p + 1.0 / self.q).sqrt()
    }

    /// `½ √(1/p + 1/q) ∫_α^β θ(ρ(r))^{−1/2} dr`, with the error estimate of the quadrature.
    pub fn distance_with_error(&self, alpha: f64, beta: f64, abs_tol: f64) -> Result<Quadrature> {
        if !(-1.0..=1.0).contains(&alpha) || !(-1.0..=1.0).contains(&beta) {
            return Err(Error::Domain(format!("parameters {alpha}, {beta} outside [-1, 1]")));
        }
        let (lo, hi) = if alpha <= beta { (alpha, beta) } else { (beta, alpha) };
        if lo == hi {
            return Ok(Quadrature { value: 0.0, error_estimate: 0.0 });
        }
        let mut value = 0.0;
        let mut err = 0.0;
        // Near r = ±1 the integrand blows up like (1 ∓ r)^{−1/2} up to logarithms;
        // r = ±(1 − s²) turns that into a bounded integrand.
        if lo < 0.0 {
            let top = hi.min(0.0);
            let f = |s: f64| {
                let th = self.theta_at(-1.0 + s * s);
                if th > 0.0 { 2.0 * s / th.sqrt() } else { 0.0 }
            };
            let out = quadrature::double_exponential::integrate(f, (1.0 + lo).sqrt(), (1.0 + top).sqrt(), abs_tol);
            value += out.integral;
            err += out.error_estimate;
        }
        if hi > 0.0 {
            let bottom = lo.max(0.0);
            let f = |s: f64| {
                let th = self.theta_at(1.0 - s * s);
                if th > 0.0 { 2.0 * s / th.sqrt() } else { 0.0 }
            };
            let out = quadrature::double_exponential::integrate(f, (1.0 - hi).sqrt(), (1.0 - bottom).sqrt(), abs_tol);
            value += out.integral;
            err += out.error_estimate;
        }
        if !value.is_finite() || err > 1e3 * abs_tol.max(1e-15) {
            return Err(Error::NotConverged(format!("distance quadrature error estimate {err:.3e}")));
        }
        let c = self.prefactor();
        Ok(Quadrature { value: c * value, error_estimate: c * err })
    }

    /// `𝒲(ρ(α), ρ(β))` to about `1e-10` absolute.
    pub fn distance(&self, alpha: f64, beta: f64) -> Result<f64> {
        Ok(self.distance_with_error(alpha, beta, 1e-11)?.value)
    }

    /// Right-hand side of the geodesic equation for `γ`, moving from `α` towards `β` at unit time.
    fn speed(&self, w: f64, gamma: f64) -> f64 {
        let pq = self.p * self.q / (self.p + self.q);
        2.0 * w * (pq * self.theta_at(gamma)).sqrt()
    }

    /// Euler scheme for `γ' = ±2 𝒲 √(pq/(p+q) · θ(ρ(γ)))` with `γ(0) = α`.
    ///
    /// Where `θ` vanishes (the Dirac end points) the explicit step would never
    /// leave `α`, so that step is taken implicitly.
    pub fn geodesic_ode(&self, alpha: f64, beta: f64, n_steps: usize) -> Result<OdeTrajectory> {
        if n_steps == 0 {
            return Err(Error::InvalidConfig("the ODE needs at least one step".into()));
        }
        let w = self.distance(alpha, beta)?;
        let dir = (beta - alpha).signum();
        let dt = 1.0 / n_steps as f64;
        let mut gamma = vec![alpha];
        let mut g = alpha;
        for _ in 0..n_steps {
            let v = self.speed(w, g);
            g = if v == 0.0 && alpha != beta {
                self.implicit_step(w, g, dir, dt)?
            } else {
                g + dir * dt * v
            };
            gamma.push(g);
        }
        let times = (0..=n_steps).map(|i| i as f64 * dt).collect();
        Ok(OdeTrajectory { times, gamma, terminal_error: (g - beta).abs() })
    }

    fn implicit_step(&self, w: f64, g0: f64, dir: f64, dt: f64) -> Result<f64> {
        // Nontrivial root of x − g0 − dir·dt·v(x) = 0 on the side of g0 facing β.
        let f = |x: f64| {
            let eps = 1e-7;
            let val = dir * (x - g0) - dt * self.speed(w, x);
            let slope = dir - dt * (self.speed(w, x + eps) - self.speed(w, x - eps)) / (2.0 * eps);
            (val, slope)
        };
        let mut near = g0 + dir * 1e-14;
        while f(near).0 >= 0.0 && (near - g0).abs() > 1e-300 {
            near = g0 + (near - g0) * 1e-3;
        }
        let far = if dir > 0.0 { 1.0 } else { -1.0 };
        let (lo, hi) = if dir > 0.0 { (near, far) } else { (far, near) };
        let opts = RootOptions { f_tol: 1e-15, x_tol: 1e-16, max_iter: 200 };
        newton_bisect(f, lo, hi, 0.5 * (lo + hi), opts)
    }
}

impl OdeTrajectory {
    /// Density at node `b` along the trajectory.
    pub fn node_b_density(&self, exact: &TwoNodeExact) -> Vec<f64> {
        self.gamma.iter().map(|g| exact.density(g.clamp(-1.0, 1.0))[1]).collect()
    }

    /// Linear interpolation of `γ` at time `t`.
    pub fn at(&self, t: f64) -> f64 {
        let n = self.gamma.len() - 1;
        let x = (t.clamp(0.0, 1.0) * n as f64).min(n as f64);
        let i = (x.floor() as usize).min(n.saturating_sub(1));
        let frac = x - i as f64;
        if n == 0 {
            return self.gamma[0];
        }
        (1.0 - frac) * self.gamma[i] + frac * self.gamma[i + 1]
    }
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Nearest point of `B = {(p, q) : p + q²/4 ≤ 0}` by search along the boundary parabola.
pub fn dense_project_b(p: f64, q: f64) -> (f64, f64) {
    if p + 0.25 * q * q <= 0.0 {
        return (p, q);
    }
    let dist = |s: f64| (p + 0.25 * s * s).powi(2) + (q - s).powi(2);
    let r = 2.0 * (p.abs() + q.abs()) + 2.0;
    let samples = 4000;
    let best = (0..=samples)
        .map(|k| -r + 2.0 * r * k as f64 / samples as f64)
        .min_by(|a, b| dist(*a).total_cmp(&dist(*b)))
        .unwrap_or(0.0);
    let step = 2.0 * r / samples as f64;
    let s = golden_min(dist, best - step, best + step, 200);
    (-0.25 * s * s, s)
}

/// Nearest point of `K = {(s, t, v) : s, t ≥ 0, 0 ≤ v ≤ θ(s, t)}`.
///
/// The boundary of `K` consists of the bottom face and the graph of `θ`. The
/// graph is a cone, so its nearest point lies on a ray `τ w(φ)` with
/// `w(φ) = (cos φ, sin φ, θ(cos φ, sin φ))` and `τ = max(0, ⟨p, w⟩)/‖w‖²`; the
/// angle is found by a grid of `resolution` points refined by golden section.
pub fn dense_project_k<M: Mean + ?Sized>(mean: &M, p: [f64; 3], resolution: usize) -> [f64; 3] {
    let inside = p[0] >= 0.0 && p[1] >= 0.0 && p[2] >= 0.0 && p[2] <= mean.theta(p[0], p[1]);
    if inside {
        return p;
    }
    let d2 = |x: [f64; 3]| (x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2) + (x[2] - p[2]).powi(2);
    let bottom = [p[0].max(0.0), p[1].max(0.0), 0.0];
    let on_ray = |phi: f64| {
        let (s, c) = phi.sin_cos();
        let (c, s) = (c.max(0.0), s.max(0.0));
        let w = [c, s, mean.theta(c, s).max(0.0)];
        let tau = (p[0] * w[0] + p[1] * w[1] + p[2] * w[2]).max(0.0) / (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
        [tau * w[0], tau * w[1], tau * w[2]]
    };
    let obj = |phi: f64| d2(on_ray(phi));
    let half_pi = std::f64::consts::FRAC_PI_2;
    let k = resolution.max(2);
    let step = half_pi / k as f64;
    let best = (0..=k).map(|i| i as f64 * step).min_by(|a, b| obj(*a).total_cmp(&obj(*b))).unwrap_or(0.0);
    let phi = golden_min(obj, (best - step).max(0.0), (best + step).min(half_pi), 200);
    let surface = [on_ray(phi), on_ray(best)]
        .into_iter()
        .min_by(|a, b| d2(*a).total_cmp(&d2(*b)))
        .expect("two candidates");
    if d2(bottom) <= d2(surface) {
        bottom
    } else {
        surface
    }
}

/// `min_{p ≥ 0, |p| = 1} ⟨z, p⟩ − θ(p)`, by a grid in angle refined by golden section.
/// `z` lies in the superdifferential of `θ` at the origin iff this is nonnegative.
pub fn superdifferential_margin<M: Mean + ?Sized>(mean: &M, z: [f64; 2], resolution: usize) -> f64 {
    let f = |phi: f64| {
        let (s, c) = phi.sin_cos();
        let (s, c) = (s.max(0.0), c.max(0.0));
        z[0] * c + z[1] * s - mean.theta(c, s).max(0.0)
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let k = resolution.max(2);
    let step = half_pi / k as f64;
    let mut best = (0.0, f64::INFINITY);
    for i in 0..=k {
        let phi = i as f64 * step;
        let v = f(phi);
        if v < best.1 {
            best = (phi, v);
        }
    }
    let phi = golden_min(f, (best.0 - step).max(0.0), (best.0 + step).min(half_pi), 200);
    best.1.min(f(phi)).min(f(0.0)).min(f(half_pi))
}

/// Distance from `y` to the closed convex cone in the plane spanned by `g1` and `g2`
/// (which must not point in opposite directions), by Moreau: `dist(y, C°) = ‖P_C(y)‖`.
fn planar_cone_projection_norm(y: [f64; 2], g1: [f64; 2], g2: [f64; 2]) -> f64 {
    let cross = |a: [f64; 2], b: [f64; 2]| a[0] * b[1] - a[1] * b[0];
    let orient = cross(g1, g2).signum();
    let inside = cross(g1, y) * orient >= 0.0 && cross(y, g2) * orient >= 0.0;
    let on_ray = |g: [f64; 2]| {
        let len = (g[0] * g[0] + g[1] * g[1]).sqrt();
        ((y[0] * g[0] + y[1] * g[1]) / len).max(0.0)
    };
    if inside {
        (y[0] * y[0] + y[1] * y[1]).sqrt()
    } else {
        on_ray(g1).max(on_ray(g2))
    }
}

/// How far `v − x` is from the normal cone of `B` at `x ∈ B`; zero iff `x` is
/// the projection of `v`.
pub fn normal_cone_residual_b(v: (f64, f64), x: (f64, f64)) -> f64 {
    let d = [v.0 - x.0, v.1 - x.1];
    let g = x.0 + 0.25 * x.1 * x.1;
    let scale = 1.0 + x.0.abs() + x.1 * x.1;
    if g < -1e-13 * scale {
        return d[0].hypot(d[1]);
    }
    let n = [1.0, 0.5 * x.1];
    let len = n[0].hypot(n[1]);
    let mu = ((d[0] * n[0] + d[1] * n[1]) / len).max(0.0);
    (d[0] - mu * n[0] / len).hypot(d[1] - mu * n[1] / len)
}

/// How far `v − x` is from the normal cone of `K` at `x ∈ K`, from the active
/// constraints `s ≥ 0`, `t ≥ 0`, `ϑ ≥ 0` and `ϑ ≤ θ(s, t)`. At the apex the
/// normal cone is the polar of `K`, tested through the superdifferential margin.
pub fn normal_cone_residual_k<M: Mean + ?Sized>(mean: &M, v: [f64; 3], x: [f64; 3]) -> f64 {
    let d = [v[0] - x[0], v[1] - x[1], v[2] - x[2]];
    let norm3 = |a: [f64; 3]| (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    let [s, t, w] = x;
    let scale = 1.0 + s.abs() + t.abs() + w.abs();
    let zero = |a: f64| a.abs() <= 1e-14 * scale;
    if zero(s) && zero(t) && zero(w) {
        if d[2] <= 0.0 {
            return d[0].max(0.0).hypot(d[1].max(0.0));
        }
        let margin = superdifferential_margin(mean, [-d[0] / d[2], -d[1] / d[2]], 2000);
        return (-margin * d[2]).max(0.0);
    }
    if zero(t) || zero(s) {
        // Edge of the bottom face on an axis; the along-edge component must vanish.
        let (along, across) = if zero(t) { (d[0], [d[1], d[2]]) } else { (d[1], [d[0], d[2]]) };
        let base = if zero(t) { s } else { t };
        let slope = mean.boundary_partial_limit(base.max(f64::MIN_POSITIVE));
        let g2 = if slope.is_finite() { [1.0, slope] } else { [0.0, 1.0] };
        return along.hypot(planar_cone_projection_norm(across, [1.0, 0.0], g2));
    }
    let theta = mean.theta(s, t);
    let top = (w - theta).abs() <= 1e-12 * scale;
    if zero(w) {
        return norm3([d[0], d[1], d[2].max(0.0)]);
    }
    if !top {
        return norm3(d);
    }
    let (d1, d2) = mean.partials(s, t);
    let n = [-d1, -d2, 1.0];
    let len = norm3(n);
    let mu = ((d[0] * n[0] + d[1] * n[1] + d[2] * n[2]) / len).max(0.0);
    norm3([d[0] - mu * n[0] / len, d[1] - mu * n[1] / len, d[2] - mu * n[2] / len])
}

/// `(ρ, m, ρ_B)` from [`dense_project_ce`].
pub type DenseProjection = (Vec<f64>, Vec<f64>, Option<Vec<f64>>);

/// Nearest point of the continuity equation constraint set by dense weighted
/// least squares. Returns `(ρ, m)` as flat time-major buffers and, with a free
/// end point, the projected `ρ_B`.
///
/// Unknowns are the nodal densities `ρ(t_1), …, ρ(t_N)` (without `ρ(t_N)` when it
/// is fixed), the momenta and the free end point. The norm weights node rows by
/// `h π` and edge entries by `½ h Q π`.
pub fn dense_project_ce(
    graph: &MarkovGraph,
    grid: TimeGrid,
    rho: &[f64],
    m: &[f64],
    rho_a: &[f64],
    rho_b: &[f64],
    free_end: bool,
) -> Result<DenseProjection> {
    let n = graph.vertex_count();
    let ne = graph.edge_count();
    let big_n = grid.n_intervals();
    let h = grid.h();
    let pi = graph.pi();
    let w_edge = graph.edge_weights();

    let free_rows = if free_end { big_n } else { big_n - 1 };
    let rho_var = |i: usize, x: usize| -> Option<usize> { (i >= 1 && i <= free_rows).then(|| (i - 1) * n + x) };
    let m_off = free_rows * n;
    let b_off = m_off + big_n * ne;
    let nvar = b_off + if free_end { n } else { 0 };

    let mut weights = vec![0.0; nvar];
    let mut x0 = vec![0.0; nvar];
    for i in 1..=free_rows {
        for x in 0..n {
            let k = rho_var(i, x).expect("free row");
            weights[k] = h * pi[x];
            x0[k] = rho[i * n + x];
        }
    }
    for i in 0..big_n {
        for e in 0..ne {
            weights[m_off + i * ne + e] = 0.5 * h * w_edge[e];
            x0[m_off + i * ne + e] = m[i * ne + e];
        }
    }
    if free_end {
        for x in 0..n {
            weights[b_off + x] = h * pi[x];
            x0[b_off + x] = rho_b[x];
        }
    }

    let ncon = big_n * n + if free_end { n } else { 0 };
    let mut a = DMatrix::<f64>::zeros(ncon, nvar);
    let mut c = DVector::<f64>::zeros(ncon);
    let inv_h = 1.0 / h;
    for i in 0..big_n {
        for x in 0..n {
            let row = i * n + x;
            // (ρ(t_{i+1}) − ρ(t_i))/h, with known values moved to the right-hand side.
            for (j, sign) in [(i + 1, 1.0), (i, -1.0)] {
                match rho_var(j, x) {
                    Some(k) => a[(row, k)] += sign * inv_h,
                    None => {
                        let known = if j == 0 { rho_a[x] } else { rho_b[x] };
                        c[row] -= sign * inv_h * known;
                    }
                }
            }
            // div m(x) = ½ Σ_y Q(x, y)(m(y, x) − m(x, y)).
            for e in graph.out_edges(x) {
                let rate = graph.edges()[e].rate;
                a[(row, m_off + i * ne + e)] -= 0.5 * rate;
                a[(row, m_off + i * ne + graph.reverse(e))] += 0.5 * rate;
            }
        }
    }
    if free_end {
        for x in 0..n {
            let row = big_n * n + x;
            a[(row, rho_var(big_n, x).expect("free last row"))] = 1.0;
            a[(row, b_off + x)] = -1.0;
        }
    }

    // With y = W^{1/2} x the problem is an unweighted projection onto {B y = c}.
    let sq: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let mut bm = a.clone();
    for j in 0..nvar {
        for i in 0..ncon {
            bm[(i, j)] /= sq[j];
        }
    }
    let y0 = DVector::from_iterator(nvar, x0.iter().zip(&sq).map(|(x, s)| x * s));
    let pinv = bm.clone().pseudo_inverse(1e-12).map_err(|e| Error::LinearSolve(e.to_string()))?;
    let y = &y0 - &pinv * (&bm * &y0 - &c);
    let x: Vec<f64> = y.iter().zip(&sq).map(|(v, s)| v / s).collect();

    let mut rho_out = rho.to_vec();
    rho_out[..n].copy_from_slice(rho_a);
    if !free_end {
        rho_out[big_n * n..].copy_from_slice(rho_b);
    }
    for i in 1..=free_rows {
        for xx in 0..n {
            rho_out[i * n + xx] = x[rho_var(i, xx).expect("free row")];
        }
    }
    let m_out = x[m_off..b_off].to_vec();
    let b_out = free_end.then(|| x[b_off..].to_vec());
    Ok((rho_out, m_out, b_out))
}

/// `|∇f(x)·d − D_h f(x)[d]| / max(|∇f(x)·d|, 1)` with a Richardson-extrapolated central difference.
pub fn finite_difference_check<F: Fn(&[f64]) -> f64>(f: F, gradient: &[f64], x: &[f64], direction: &[f64]) -> f64 {
    let analytic: f64 = gradient.iter().zip(direction).map(|(g, d)| g * d).sum();
    let scale_x = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let central = |step: f64| {
        let plus: Vec<f64> = x.iter().zip(direction).map(|(a, d)| a + step * d).collect();
        let minus: Vec<f64> = x.iter().zip(direction).map(|(a, d)| a - step * d).collect();
        (f(&plus) - f(&minus)) / (2.0 * step)
    };
    let step = 1e-3 * scale_x;
    let numeric = (4.0 * central(0.5 * step) - central(step)) / 3.0;
    (analytic - numeric).abs() / analytic.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_log() -> TwoNodeExact {
        TwoNodeExact::new(1.0, 1.0, MeanKind::Logarithmic).unwrap()
    }

    #[test]
    fn density_parametrization() {
        let e = TwoNodeExact::new(2.0, 3.0, MeanKind::Geometric).unwrap();
        let g = e.graph().unwrap();
        for r in [-1.0, -0.3, 0.0, 0.8, 1.0] {
            let rho = e.density(r);
            assert!((g.mass(&rho) - 1.0).abs() < 1e-14);
            assert!((e.parameter(&rho) - r).abs() < 1e-14);
        }
    }

    #[test]
    fn distance_additivity_and_zero() {
        let e = unit_log();
        assert_eq!(e.distance(0.3, 0.3).unwrap(), 0.0);
        let whole = e.distance(-1.0, 1.0).unwrap();
        let parts = e.distance(-1.0, 0.0).unwrap() + e.distance(0.0, 1.0).unwrap();
        assert!((whole - parts).abs() < 1e-8);
        let split = e.distance(-1.0, 0.4).unwrap() + e.distance(0.4, 1.0).unwrap();
        assert!((whole - split).abs() < 1e-8);
    }

    #[test]
    fn distance_tolerance_self_consistency() {
        let e = unit_log();
        let coarse = e.distance_with_error(-1.0, 1.0, 1e-8).unwrap();
        let fine = e.distance_with_error(-1.0, 1.0, 1e-12).unwrap();
        assert!((coarse.value - fine.value).abs() <= coarse.error_estimate.max(1e-8));
    }

    #[test]
    fn geometric_two_node_closed_form() {
        // θ_geo(1 − r, 1 + r) = √(1 − r²), so 𝒲 = (1/√2) ∫ (1 − r²)^{−1/4} dr.
        let e = TwoNodeExact::new(1.0, 1.0, MeanKind::Geometric).unwrap();
        let beta_quarter = 2.396_280_469_471_184; // B(1/2, 3/4)
        let expected = beta_quarter / 2f64.sqrt();
        assert!((e.distance(-1.0, 1.0).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn ode_reaches_the_target() {
        let e = unit_log();
        let coarse = e.geodesic_ode(-1.0, 1.0, 500).unwrap();
        let fine = e.geodesic_ode(-1.0, 1.0, 2000).unwrap();
        assert!(fine.terminal_error < coarse.terminal_error);
        assert!(fine.terminal_error < 1e-2);
        let still = e.geodesic_ode(0.2, 0.2, 10).unwrap();
        assert!(still.gamma.iter().all(|g| *g == 0.2));
        // constant speed: half the distance at t = ½
        let half = e.distance(-1.0, fine.at(0.5)).unwrap();
        assert!((half - 0.5 * e.distance(-1.0, 1.0).unwrap()).abs() < 1e-2);
    }

    #[test]
    fn dense_b_and_k_examples() {
        assert_eq!(dense_project_b(-1.0, 0.0), (-1.0, 0.0));
        let (p, q) = dense_project_b(0.0, 2.0);
        assert!((q - 1.541_833_994).abs() < 1e-6 && (p + 0.25 * q * q).abs() < 1e-12);
        let k = dense_project_k(&MeanKind::Logarithmic, [1.0, 1.0, -2.0], 50);
        assert_eq!(k, [1.0, 1.0, 0.0]);
    }

    #[test]
    fn superdifferential_margin_signs() {
        let geo = MeanKind::Geometric;
        assert!(superdifferential_margin(&geo, [1.0, 1.0], 1000) > 0.0);
        assert!(superdifferential_margin(&geo, [0.2, 0.2], 1000) < 0.0);
        assert!(superdifferential_margin(&MeanKind::Logarithmic, [0.4, 10.0], 1000) > 0.0);
    }

    #[test]
    fn finite_differences() {
        let lin = |x: &[f64]| 3.0 * x[0] - 2.0 * x[1];
        assert!(finite_difference_check(lin, &[3.0, -2.0], &[0.4, 1.0], &[1.0, 1.0]) < 1e-12);
        let m = MeanKind::Logarithmic;
        let (d1, d2) = m.partials(1.0, 2.0);
        let f = |x: &[f64]| m.theta(x[0], x[1]);
        assert!(finite_difference_check(f, &[d1, d2], &[1.0, 2.0], &[0.6, 0.8]) < 1e-6);
        let g = MeanKind::Geometric;
        let (d1, d2) = g.partials(4.0, 9.0);
        let f = |x: &[f64]| g.theta(x[0], x[1]);
        assert!(finite_difference_check(f, &[d1, d2], &[4.0, 9.0], &[1.0, 0.0]) < 1e-8);
    }

    #[test]
    fn dense_ce_satisfies_constraints() {
        let g = MarkovGraph::two_node(1.0, 1.0).unwrap();
        let grid = TimeGrid::new(2).unwrap();
        let rho = vec![0.0; 6];
        let m = vec![0.0; 4];
        let (r, mm, _) = dense_project_ce(&g, grid, &rho, &m, &[2.0, 0.0], &[0.0, 2.0], false).unwrap();
        let path = crate::time_grid::DensityPath::from_flat(grid, 2, r).unwrap();
        let mom = crate::time_grid::IntervalEdgeField::from_flat(grid, 2, mm).unwrap();
        let bc = crate::time_grid::BoundaryPair { rho_a: vec![2.0, 0.0], rho_b: vec![0.0, 2.0] };
        let (res, viol) = crate::time_grid::ce_residual(&g, &path, &mom, &bc).unwrap();
        assert!(res.sup_norm() < 1e-10 && viol < 1e-12);
    }
}
