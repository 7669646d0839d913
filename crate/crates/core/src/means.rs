//! Averaging functions `θ(s, t)` used to interpolate densities onto edges.
//!
//! A mean must be continuous, concave, symmetric, 1-homogeneous, monotone, with
//! `θ(0, s) = 0` and `θ(s, s) = s`. Adding a mean means implementing [`Mean`];
//! the projection onto the subgraph `K = {0 ≤ ϑ ≤ θ(s, t)}` only talks to that trait.
//!
//! Along the ray `(s, t) = (e^{u/2}, e^{-u/2})` the curve
//! `w(u) = (s, t, θ(s, t))` sweeps the upper surface of `K` modulo scaling.

use serde::{Deserialize, Serialize};

use crate::roots::{newton_bisect, RootOptions};

/// Below this `|ln(s/t)|` the logarithmic mean and its partials use a Taylor expansion.
pub const DIAGONAL_GUARD: f64 = 1e-4;

/// Largest `|u|` explored along the ray; `e^{u/2}` stays far from overflow.
pub const RAY_LIMIT: f64 = 700.0;

/// A point of the upper surface of `K` on the ray through `(√q, 1/√q)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub q: f64,
    /// `(√q, 1/√q, θ(√q, 1/√q))`.
    pub w: [f64; 3],
    /// Outward normal `(−∂₁θ, −∂₂θ, 1)`.
    pub n: [f64; 3],
}

/// `θ` and its partials at `(e^{u/2}, e^{-u/2})`, with `u`-derivatives of the partials.
#[derive(Clone, Copy, Debug)]
pub struct RayPoint {
    pub a: f64,
    pub b: f64,
    pub theta: f64,
    pub d1: f64,
    pub d2: f64,
    pub d1_du: f64,
    pub d2_du: f64,
}

pub trait Mean: Sync {
    /// `θ(s, t)`, or `−∞` if either argument is negative.
    fn theta(&self, s: f64, t: f64) -> f64;

    /// `(∂₁θ, ∂₂θ)` for `s, t > 0`.
    fn partials(&self, s: f64, t: f64) -> (f64, f64);

    /// `lim_{t↘0} ∂₂θ(s, t)`, possibly `+∞`. By homogeneity it does not depend on `s > 0`.
    fn boundary_partial_limit(&self, s: f64) -> f64;

    /// Whether `θ(p) ≤ ⟨z, p⟩` for all `p ≥ 0`.
    fn in_superdifferential_at_origin(&self, z: [f64; 2]) -> bool;

    fn surface_point(&self, q: f64) -> SurfacePoint {
        let (a, b) = (q.sqrt(), 1.0 / q.sqrt());
        let (d1, d2) = self.partials(a, b);
        SurfacePoint { q, w: [a, b, self.theta(a, b)], n: [-d1, -d2, 1.0] }
    }

    fn ray(&self, u: f64) -> RayPoint {
        let (a, b) = ((0.5 * u).exp(), (-0.5 * u).exp());
        let (d1, d2) = self.partials(a, b);
        let step = 1e-6 * (1.0 + u.abs());
        let (p1, p2) = self.partials((0.5 * (u + step)).exp(), (-0.5 * (u + step)).exp());
        let (m1, m2) = self.partials((0.5 * (u - step)).exp(), (-0.5 * (u - step)).exp());
        RayPoint {
            a,
            b,
            theta: self.theta(a, b),
            d1,
            d2,
            d1_du: (p1 - m1) / (2.0 * step),
            d2_du: (p2 - m2) / (2.0 * step),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanKind {
    #[default]
    #[serde(alias = "log")]
    Logarithmic,
    #[serde(alias = "geo")]
    Geometric,
}

impl MeanKind {
    pub fn short_name(self) -> &'static str {
        match self {
            MeanKind::Logarithmic => "log",
            MeanKind::Geometric => "geo",
        }
    }
}

impl std::str::FromStr for MeanKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "log" | "logarithmic" => Ok(MeanKind::Logarithmic),
            "geo" | "geometric" => Ok(MeanKind::Geometric),
            _ => Err(format!("unknown mean {s:?}, expected log or geo")),
        }
    }
}

impl std::fmt::Display for MeanKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.short_name())
    }
}

impl Mean for MeanKind {
    fn theta(&self, s: f64, t: f64) -> f64 {
        match self {
            MeanKind::Logarithmic => log_mean(s, t),
            MeanKind::Geometric => geo_mean(s, t),
        }
    }

    fn partials(&self, s: f64, t: f64) -> (f64, f64) {
        match self {
            MeanKind::Logarithmic => {
                let u = s.ln() - t.ln();
                (log_partial(u), log_partial(-u))
            }
            MeanKind::Geometric => (0.5 * (t / s).sqrt(), 0.5 * (s / t).sqrt()),
        }
    }

    fn boundary_partial_limit(&self, _s: f64) -> f64 {
        f64::INFINITY
    }

    fn in_superdifferential_at_origin(&self, z: [f64; 2]) -> bool {
        match self {
            MeanKind::Logarithmic => log_superdifferential(z),
            MeanKind::Geometric => z[0].min(z[1]) > 0.0 && z[0] * z[1] >= 0.25,
        }
    }

    fn ray(&self, u: f64) -> RayPoint {
        let a = (0.5 * u).exp();
        let b = 1.0 / a;
        match self {
            MeanKind::Logarithmic if u.abs() < 1e-2 => RayPoint {
                a,
                b,
                theta: log_mean_on_ray(u),
                d1: log_partial(u),
                d2: log_partial(-u),
                d1_du: log_partial_derivative(u),
                d2_du: -log_partial_derivative(-u),
            },
            MeanKind::Logarithmic => {
                // One expm1 serves both signs: e^{−u} − 1 = −(e^u − 1)/e^u.
                let (em, ep) = if u.abs() >= 1.0 {
                    (b * b - 1.0, a * a - 1.0)
                } else if u >= 0.0 {
                    let ep = u.exp_m1();
                    (-ep / (1.0 + ep), ep)
                } else {
                    let em = (-u).exp_m1();
                    (em, -em / (1.0 + em))
                };
                let (u2, u3) = (u * u, u * u * u);
                RayPoint {
                    a,
                    b,
                    theta: b * ep / u,
                    d1: (u + em) / u2,
                    d2: (ep - u) / u2,
                    d1_du: -em / u2 - 2.0 * (u + em) / u3,
                    d2_du: ep / u2 - 2.0 * (ep - u) / u3,
                }
            }
            MeanKind::Geometric => RayPoint {
                a,
                b,
                theta: 1.0,
                d1: 0.5 * b,
                d2: 0.5 * a,
                d1_du: -0.25 * b,
                d2_du: 0.25 * a,
            },
        }
    }
}

pub fn geo_mean(s: f64, t: f64) -> f64 {
    if s < 0.0 || t < 0.0 {
        f64::NEG_INFINITY
    } else {
        (s * t).sqrt()
    }
}

/// `(s − t)/(ln s − ln t)` with `θ(s, s) = s` and `θ(0, t) = 0`.
pub fn log_mean(s: f64, t: f64) -> f64 {
    if s < 0.0 || t < 0.0 {
        return f64::NEG_INFINITY;
    }
    if s == 0.0 || t == 0.0 {
        return 0.0;
    }
    let u = s.ln() - t.ln();
    if u.abs() < DIAGONAL_GUARD {
        let u2 = u * u;
        (s * t).sqrt() * (1.0 + u2 / 24.0 + u2 * u2 / 1920.0)
    } else {
        (s - t) / u
    }
}

fn log_mean_on_ray(u: f64) -> f64 {
    let half = 0.5 * u;
    if u.abs() < DIAGONAL_GUARD {
        let u2 = u * u;
        1.0 + u2 / 24.0 + u2 * u2 / 1920.0
    } else {
        half.sinh() / half
    }
}

/// `∂₁θ_log(s, t)` as a function of `u = ln(s/t)`: `(u − 1 + e^{−u})/u²`.
pub fn log_partial(u: f64) -> f64 {
    if u.abs() < DIAGONAL_GUARD {
        let u2 = u * u;
        0.5 - u / 6.0 + u2 / 24.0 - u2 * u / 120.0 + u2 * u2 / 720.0
    } else {
        (u + (-u).exp_m1()) / (u * u)
    }
}

/// Derivative of [`log_partial`].
pub fn log_partial_derivative(u: f64) -> f64 {
    if u.abs() < 1e-2 {
        // Σ_{k≥1} k (−1)^k u^{k−1} / (k+2)!
        let mut sum = 0.0;
        let mut fact = 6.0;
        let mut power = 1.0;
        for k in 1..12 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * k as f64 * power / fact;
            power *= u;
            fact *= (k + 3) as f64;
        }
        sum
    } else {
        let em = (-u).exp_m1();
        -em / (u * u) - 2.0 * (u + em) / (u * u * u)
    }
}

fn log_superdifferential(z: [f64; 2]) -> bool {
    // θ_geo ≤ θ_log ≤ θ_arith settles most points without root finding.
    if z[0].min(z[1]) <= 0.0 || z[0].max(z[1]) < 0.5 || z[0] * z[1] < 0.25 {
        return false;
    }
    if z[0].min(z[1]) >= 0.5 {
        return true;
    }
    let (z1, z2) = if z[0] >= z[1] { (z[0], z[1]) } else { (z[1], z[0]) };
    // ∂₁θ at (q^{-1/2}, q^{1/2}) equals log_partial(−L) with L = ln q ≥ 0, increasing in L.
    let slope = |l: f64| (log_partial(-l) - z1, -log_partial_derivative(-l));
    let mut hi = 1.0;
    while slope(hi).0 < 0.0 && hi < RAY_LIMIT {
        hi = (2.0 * hi).min(RAY_LIMIT);
    }
    let l = if slope(hi).0 < 0.0 {
        RAY_LIMIT
    } else if slope(0.0).0 >= 0.0 {
        0.0
    } else {
        let opts = RootOptions { f_tol: 1e-12 * z1.max(1.0), x_tol: 1e-15, max_iter: 100 };
        newton_bisect(slope, 0.0, hi, 0.0, opts).unwrap_or(hi)
    };
    z2 >= log_partial(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    const LOG: MeanKind = MeanKind::Logarithmic;
    const GEO: MeanKind = MeanKind::Geometric;

    #[test]
    fn theta_values() {
        assert!((LOG.theta(0.7, 0.7) - 0.7).abs() < 1e-15);
        assert_eq!(LOG.theta(0.0, 5.0), 0.0);
        assert!((LOG.theta(1.0, E) - (E - 1.0)).abs() < 1e-14);
        assert_eq!(GEO.theta(4.0, 9.0), 6.0);
        assert_eq!(LOG.theta(-1.0, 1.0), f64::NEG_INFINITY);
        assert_eq!(GEO.theta(1.0, -1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn partial_values() {
        assert_eq!(LOG.partials(2.0, 2.0), (0.5, 0.5));
        assert_eq!(GEO.partials(1.0, 4.0), (1.0, 0.25));
        let (d1, _) = LOG.partials((-0.5f64).exp(), 0.5f64.exp());
        assert!((d1 - (E - 2.0)).abs() < 1e-14);
    }

    #[test]
    fn boundary_limits() {
        assert_eq!(LOG.boundary_partial_limit(1.0), f64::INFINITY);
        assert_eq!(GEO.boundary_partial_limit(2.0), f64::INFINITY);
        assert_eq!(LOG.boundary_partial_limit(10.0), f64::INFINITY);
    }

    #[test]
    fn superdifferential_values() {
        assert!(GEO.in_superdifferential_at_origin([1.0, 1.0]));
        assert!(!GEO.in_superdifferential_at_origin([0.4, 0.4]));
        assert!(LOG.in_superdifferential_at_origin([1.0, 1.0]));
        assert!(LOG.in_superdifferential_at_origin([0.4, 10.0]));
        assert!(!LOG.in_superdifferential_at_origin([0.4, 0.6]));
        assert!(!LOG.in_superdifferential_at_origin([0.49, 0.49]));
        assert!(LOG.in_superdifferential_at_origin([0.5, 0.5]));
        assert!(!LOG.in_superdifferential_at_origin([1e300, -1.0]));
        assert!(LOG.in_superdifferential_at_origin([1e300, 1e-2]));
    }

    #[test]
    fn surface_points() {
        for kind in [LOG, GEO] {
            let p = kind.surface_point(1.0);
            assert_eq!(p.w, [1.0, 1.0, 1.0]);
            assert_eq!(p.n, [-0.5, -0.5, 1.0]);
        }
        let p = GEO.surface_point(4.0);
        assert_eq!(p.w, [2.0, 0.5, 1.0]);
        assert_eq!(p.n, [-0.25, -1.0, 1.0]);
    }

    #[test]
    fn guard_band_is_continuous() {
        for &u in &[0.99e-4f64, 1.01e-4, -0.99e-4, -1.01e-4, 0.99e-2, 1.01e-2] {
            let s = (0.5 * u).exp();
            let t = (-0.5 * u).exp();
            let exact = 2.0 * (0.5 * u).sinh() / u;
            assert!((LOG.theta(s, t) - exact).abs() < 1e-15);
            let d = log_partial(u);
            let fd = (log_partial(u + 1e-6) - log_partial(u - 1e-6)) / 2e-6;
            assert!((log_partial_derivative(u) - fd).abs() < 1e-6);
            assert!((d - 0.5 + u / 6.0).abs() < 1e-4);
        }
    }

    #[test]
    fn ray_matches_generic_default() {
        struct Wrap(MeanKind);
        impl Mean for Wrap {
            fn theta(&self, s: f64, t: f64) -> f64 {
                self.0.theta(s, t)
            }
            fn partials(&self, s: f64, t: f64) -> (f64, f64) {
                self.0.partials(s, t)
            }
            fn boundary_partial_limit(&self, s: f64) -> f64 {
                self.0.boundary_partial_limit(s)
            }
            fn in_superdifferential_at_origin(&self, z: [f64; 2]) -> bool {
                self.0.in_superdifferential_at_origin(z)
            }
        }
        for kind in [LOG, GEO] {
            for &u in &[-5.0, -0.3, 0.0, 1e-3, 2.0, 9.0] {
                let exact = kind.ray(u);
                let fd = Wrap(kind).ray(u);
                assert!((exact.theta - fd.theta).abs() < 1e-12 * exact.theta);
                assert!((exact.d1_du - fd.d1_du).abs() < 1e-6 * (1.0 + exact.d1_du.abs()));
                assert!((exact.d2_du - fd.d2_du).abs() < 1e-6 * (1.0 + exact.d2_du.abs()));
            }
        }
        for &u in &[-600.0, -40.0, -0.05, 0.02, 3.0, 650.0] {
            let r = LOG.ray(u);
            assert!((r.d1 - log_partial(u)).abs() < 1e-12 * log_partial(u), "{u}");
            assert!((r.d2 - log_partial(-u)).abs() < 1e-12 * log_partial(-u), "{u}");
            assert!((r.d1_du - log_partial_derivative(u)).abs() < 1e-10 * log_partial_derivative(u).abs(), "{u}");
            assert!((r.theta - log_mean(r.a, r.b)).abs() < 1e-14 * r.theta);
        }
    }
}
