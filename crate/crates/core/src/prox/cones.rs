//! Pointwise Euclidean projections onto the parabola region
//! `B = {(p, q) : p + q²/4 ≤ 0}` and the mean subgraph `K = {0 ≤ ϑ ≤ θ(s, t)}`.

use crate::error::{Error, Result};
use crate::means::{Mean, RayPoint, RAY_LIMIT};
use crate::roots::{newton_bisect, RootOptions};

/// Euclidean projection onto `B`. Boundary points are `(−t²/4, t)` where `t`
/// solves `t³/4 + (p + 2) t − 2q = 0`.
pub fn project_parabola_b(p: f64, q: f64) -> (f64, f64) {
    if p + 0.25 * q * q <= 0.0 {
        return (p, q);
    }
    if q == 0.0 {
        return (0.0, 0.0);
    }
    let aq = q.abs();
    // g(t) = t³/4 + (p + 2)t − 2|q| is convex on t > 0 and positive at |q|
    // (the point is outside B), so Newton from |q| decreases monotonically to the root.
    let mut t = aq;
    for _ in 0..100 {
        let g = 0.25 * t * t * t + (p + 2.0) * t - 2.0 * aq;
        let dg = 0.75 * t * t + p + 2.0;
        let next = t - g / dg;
        if !(next < t) || !next.is_finite() {
            break;
        }
        t = next;
    }
    (-0.25 * t * t, t.copysign(q))
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Value and `u`-derivative of `f(u) = ⟨p, w(u) × n(u)⟩`, plus a scale for
/// relative tolerances.
fn surface_residual<M: Mean + ?Sized>(mean: &M, p: [f64; 3], u: f64) -> (f64, f64, f64) {
    surface_residual_at(p, &mean.ray(u))
}

fn surface_residual_at(p: [f64; 3], r: &RayPoint) -> (f64, f64, f64) {
    let w = [r.a, r.b, r.theta];
    let n = [-r.d1, -r.d2, 1.0];
    let dw = [0.5 * r.a, -0.5 * r.b, 0.5 * (r.a * r.d1 - r.b * r.d2)];
    let dn = [-r.d1_du, -r.d2_du, 0.0];
    let wn = cross(w, n);
    let dwn = cross(dw, n);
    let wdn = cross(w, dn);
    let value = dot(p, wn);
    let deriv = dot(p, [dwn[0] + wdn[0], dwn[1] + wdn[1], dwn[2] + wdn[2]]);
    (value, deriv, norm(p) * norm(w) * norm(n))
}

fn surface_projection<M: Mean + ?Sized>(mean: &M, p: [f64; 3], u: f64) -> [f64; 3] {
    surface_projection_at(p, &mean.ray(u))
}

fn surface_projection_at(p: [f64; 3], r: &RayPoint) -> [f64; 3] {
    let w = [r.a, r.b, r.theta];
    let tau = dot(p, w) / dot(w, w);
    [tau * w[0], tau * w[1], tau * w[2]]
}

const TOP_TOL: f64 = 1e-13;

/// Projection onto the smooth upper surface of `K`, for inputs the case
/// analysis in [`project_k`] has routed there.
///
/// Solves `⟨p, w(u) × n(u)⟩ = 0` in `u = ln q` and returns `τ w(u)` with
/// `τ = ⟨p, w⟩/‖w‖²`.
pub fn project_k_top<M: Mean + ?Sized>(mean: &M, p: [f64; 3]) -> Result<[f64; 3]> {
    let mut hint = f64::NAN;
    project_k_top_hinted(mean, p, &mut hint)
}

/// As [`project_k_top`], starting Newton from `*hint` when it is finite and
/// storing the root back into it.
pub fn project_k_top_hinted<M: Mean + ?Sized>(mean: &M, p: [f64; 3], hint: &mut f64) -> Result<[f64; 3]> {
    if hint.is_finite() {
        let mut u = *hint;
        for _ in 0..8 {
            let ray = mean.ray(u);
            let (f, df, scale) = surface_residual_at(p, &ray);
            if f.abs() <= TOP_TOL * scale {
                *hint = u;
                return Ok(surface_projection_at(p, &ray));
            }
            let next = u - f / df;
            if !next.is_finite() || (next - u).abs() > 2.0 {
                break;
            }
            u = next;
        }
    }
    let u = bracketed_root(mean, p)?;
    *hint = u;
    Ok(surface_projection(mean, p, u))
}

fn bracketed_root<M: Mean + ?Sized>(mean: &M, p: [f64; 3]) -> Result<f64> {
    let u0 = if p[0] > 0.0 && p[1] > 0.0 {
        (p[0].ln() - p[1].ln()).clamp(-0.5 * RAY_LIMIT, 0.5 * RAY_LIMIT)
    } else {
        0.0
    };
    let f = |u: f64| surface_residual(mean, p, u).0;
    let f0 = f(u0);
    let scale0 = surface_residual(mean, p, u0).2;
    if f0.abs() <= TOP_TOL * scale0 {
        return Ok(u0);
    }
    let mut delta = 0.5;
    let (lo, hi) = loop {
        let lo = (u0 - delta).max(-RAY_LIMIT);
        let hi = (u0 + delta).min(RAY_LIMIT);
        let (flo, fhi) = (f(lo), f(hi));
        if flo.signum() != f0.signum() {
            break (lo, u0);
        }
        if fhi.signum() != f0.signum() {
            break (u0, hi);
        }
        if lo <= -RAY_LIMIT && hi >= RAY_LIMIT {
            return Err(Error::RootFinding(format!(
                "no sign change of the surface residual for p = {p:?}"
            )));
        }
        delta *= 2.0;
    };
    let residual = |u: f64| {
        let (v, d, s) = surface_residual(mean, p, u);
        (v / s, d / s)
    };
    let opts = RootOptions { f_tol: TOP_TOL, x_tol: 1e-15, max_iter: 200 };
    newton_bisect(residual, lo, hi, 0.5 * (lo + hi), opts)
        .map_err(|e| Error::RootFinding(format!("surface projection for p = {p:?}: {e}")))
}

/// Euclidean projection of `p = (θ⁻, θ⁺, ϑ)` onto `K = {0 ≤ ϑ ≤ θ(θ⁻, θ⁺)}`.
pub fn project_k<M: Mean + ?Sized>(mean: &M, p: [f64; 3]) -> Result<[f64; 3]> {
    let mut hint = f64::NAN;
    project_k_hinted(mean, p, &mut hint)
}

/// [`project_k`] with a warm start for the surface root, see [`project_k_top_hinted`].
pub fn project_k_hinted<M: Mean + ?Sized>(mean: &M, p: [f64; 3], hint: &mut f64) -> Result<[f64; 3]> {
    let [p1, p2, p3] = p;
    if p1 >= 0.0 && p2 >= 0.0 && p3 >= 0.0 && p3 <= mean.theta(p1, p2) {
        return Ok(p);
    }
    if p3 <= 0.0 {
        return Ok([p1.max(0.0), p2.max(0.0), 0.0]);
    }
    let limit = mean.boundary_partial_limit(1.0);
    if limit.is_finite() {
        if p1 > 0.0 && p2 + limit * p3 <= 0.0 {
            return Ok([p1, 0.0, 0.0]);
        }
        if p2 > 0.0 && p1 + limit * p3 <= 0.0 {
            return Ok([0.0, p2, 0.0]);
        }
    }
    if mean.in_superdifferential_at_origin([-p1 / p3, -p2 / p3]) {
        return Ok([0.0; 3]);
    }
    project_k_top_hinted(mean, p, hint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::means::MeanKind;

    #[test]
    fn parabola_examples() {
        assert_eq!(project_parabola_b(-1.0, 0.0), (-1.0, 0.0));
        assert_eq!(project_parabola_b(1.0, 0.0), (0.0, 0.0));
        let (p, q) = project_parabola_b(0.0, 2.0);
        assert!((q - 1.5418339940).abs() < 1e-9);
        assert!((p + q * q / 4.0).abs() < 1e-15);
        let (pn, qn) = project_parabola_b(0.0, -2.0);
        assert_eq!((pn, qn), (p, -q));
    }

    #[test]
    fn k_examples() {
        let log = MeanKind::Logarithmic;
        let geo = MeanKind::Geometric;
        assert_eq!(project_k(&log, [0.3, 0.5, 0.2]).unwrap(), [0.3, 0.5, 0.2]);
        assert_eq!(project_k(&log, [1.0, 1.0, -2.0]).unwrap(), [1.0, 1.0, 0.0]);
        assert_eq!(project_k(&log, [-1.0, -1.0, 1.0]).unwrap(), [0.0; 3]);
        assert_eq!(project_k(&geo, [-1.0, -1.0, 1.0]).unwrap(), [0.0; 3]);
        for mean in [log, geo] {
            let r = project_k(&mean, [1.0, 1.0, 1.3]).unwrap();
            for v in r {
                assert!((v - 1.1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hint_does_not_change_result() {
        let log = MeanKind::Logarithmic;
        let p = [3.0, 0.2, 2.5];
        let cold = project_k(&log, p).unwrap();
        let mut hint = 0.0;
        let warm = project_k_hinted(&log, p, &mut hint).unwrap();
        let mut bad_hint = 50.0;
        let far = project_k_hinted(&log, p, &mut bad_hint).unwrap();
        for i in 0..3 {
            assert!((cold[i] - warm[i]).abs() < 1e-12);
            assert!((cold[i] - far[i]).abs() < 1e-12);
        }
    }

    /// `2st/(s+t)`: its boundary partial stays finite, unlike the two built in means.
    struct Harmonic;

    impl Mean for Harmonic {
        fn theta(&self, s: f64, t: f64) -> f64 {
            if s < 0.0 || t < 0.0 {
                f64::NEG_INFINITY
            } else if s + t == 0.0 {
                0.0
            } else {
                2.0 * s * t / (s + t)
            }
        }
        fn partials(&self, s: f64, t: f64) -> (f64, f64) {
            let d = (s + t) * (s + t);
            (2.0 * t * t / d, 2.0 * s * s / d)
        }
        fn boundary_partial_limit(&self, _s: f64) -> f64 {
            2.0
        }
        fn in_superdifferential_at_origin(&self, z: [f64; 2]) -> bool {
            (0..=4000).all(|k| {
                let a = std::f64::consts::FRAC_PI_2 * k as f64 / 4000.0;
                let (s, t) = (a.cos(), a.sin());
                self.theta(s, t) <= z[0] * s + z[1] * t + 1e-12
            })
        }
    }

    #[test]
    fn finite_boundary_partial() {
        assert_eq!(project_k(&Harmonic, [1.0, -3.0, 1.0]).unwrap(), [1.0, 0.0, 0.0]);
        let mut rng = 0x2545_f491_4f6c_dd1du64;
        let mut next = || {
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            (rng >> 11) as f64 / (1u64 << 53) as f64 * 6.0 - 3.0
        };
        for _ in 0..200 {
            let p = [next(), next(), next()];
            let x = project_k(&Harmonic, p).unwrap();
            let dense = crate::oracles::dense_project_k(&Harmonic, p, 2000);
            let gap = (0..3).map(|i| (x[i] - dense[i]).abs()).fold(0.0, f64::max);
            assert!(gap < 1e-6, "{p:?}: {x:?} vs {dense:?}");
            let res = crate::oracles::normal_cone_residual_k(&Harmonic, p, x);
            assert!(res < 1e-8 * (1.0 + p.iter().map(|c| c.abs()).sum::<f64>()), "{p:?} -> {x:?}: residual {res}");
        }
    }
}
