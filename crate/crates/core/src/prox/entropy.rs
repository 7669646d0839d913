//! Proximal maps of entropy functionals `Σ_x φ(ρ(x)) π(x)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::{newton_bisect, RootOptions};

/// Smallest density the Newton iterates may reach.
pub const DENSITY_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EntropyKind {
    /// `φ(y) = y ln y` with `0 ln 0 = 0`.
    Shannon,
    /// `φ(y) = y^m/(m − 1)` with `m ∈ (0, 1)`.
    Renyi { m: f64 },
}

impl EntropyKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EntropyKind::Shannon => Ok(()),
            EntropyKind::Renyi { m } if m > 0.0 && m < 1.0 => Ok(()),
            EntropyKind::Renyi { m } => Err(Error::InvalidConfig(format!("Renyi exponent {m} outside (0, 1)"))),
        }
    }

    /// Integrand `φ(y)` for `y ≥ 0`.
    pub fn density(&self, y: f64) -> f64 {
        match *self {
            EntropyKind::Shannon => {
                if y == 0.0 {
                    0.0
                } else {
                    y * y.ln()
                }
            }
            EntropyKind::Renyi { m } => y.powf(m) / (m - 1.0),
        }
    }

    /// `φ'(y)` for `y > 0`.
    pub fn derivative(&self, y: f64) -> f64 {
        match *self {
            EntropyKind::Shannon => y.ln() + 1.0,
            EntropyKind::Renyi { m } => m / (m - 1.0) * y.powf(m - 1.0),
        }
    }

    /// `φ''(y)` for `y > 0`.
    pub fn second_derivative(&self, y: f64) -> f64 {
        match *self {
            EntropyKind::Shannon => 1.0 / y,
            EntropyKind::Renyi { m } => m * y.powf(m - 2.0),
        }
    }
}

/// Solves `y − a + c φ'(y) = 0` for `y > 0`, i.e. the minimizer of
/// `½(y − a)² + c φ(y)`. Newton runs in `v = ln y`, where the equation is monotone.
pub fn prox_scalar(kind: EntropyKind, a: f64, c: f64) -> Result<f64> {
    if c == 0.0 {
        return Ok(a);
    }
    let g = |v: f64| {
        let y = v.exp().max(DENSITY_FLOOR);
        let value = y - a + c * kind.derivative(y);
        let slope = y + c * kind.second_derivative(y) * y;
        (value, slope)
    };
    let v_floor = DENSITY_FLOOR.ln();
    if g(v_floor).0 >= 0.0 {
        return Ok(DENSITY_FLOOR);
    }
    let v0 = a.max(1e-12).ln();
    let mut hi = v0.max(0.0) + 1.0;
    while g(hi).0 <= 0.0 {
        hi = 2.0 * hi + 1.0;
        if hi > 700.0 {
            return Err(Error::RootFinding(format!("entropy prox diverges for a = {a}, c = {c}")));
        }
    }
    let scale = a.abs().max(1.0);
    let opts = RootOptions { f_tol: 1e-14 * scale, x_tol: 1e-16, max_iter: 200 };
    let v = newton_bisect(g, v_floor, hi, v0, opts)?;
    Ok(v.exp().max(DENSITY_FLOOR))
}

/// Dual prox of `2 τ ℋ` on the free end point, in place.
///
/// With respect to `h‖·‖²_π` and step `σ`, Moreau's identity gives
/// `v − σ y` where `y` solves `y − v/σ + c φ'(y) = 0` with `c = 2τ/(σ h)`.
pub fn prox_dual_entropy(kind: EntropyKind, v: &mut [f64], sigma: f64, tau_jko: f64, h: f64) -> Result<()> {
    if tau_jko == 0.0 {
        v.iter_mut().for_each(|x| *x = 0.0);
        return Ok(());
    }
    let c = 2.0 * tau_jko / (sigma * h);
    for x in v.iter_mut() {
        let y = prox_scalar(kind, *x / sigma, c)?;
        *x -= sigma * y;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_constant() {
        let y = prox_scalar(EntropyKind::Shannon, 1.0, 1.0).unwrap();
        assert!((y - 0.567_143_290_409_783_8).abs() < 1e-14);
        assert!((y - 1.0 + (y.ln() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn small_weight_is_near_identity() {
        let y = prox_scalar(EntropyKind::Shannon, 1.0, 1e-9).unwrap();
        assert!((y - 1.0).abs() < 1e-8);
        assert_eq!(prox_scalar(EntropyKind::Shannon, -3.0, 0.0).unwrap(), -3.0);
    }

    #[test]
    fn renyi_stationarity() {
        let kind = EntropyKind::Renyi { m: 0.5 };
        for &(a, c) in &[(1.0, 0.3), (0.01, 2.0), (-0.5, 0.1), (40.0, 5.0)] {
            let y = prox_scalar(kind, a, c).unwrap();
            assert!((y - a + c * kind.derivative(y)).abs() < 1e-10 * a.abs().max(1.0));
        }
    }

    #[test]
    fn negative_input_stays_positive() {
        let y = prox_scalar(EntropyKind::Shannon, -5.0, 0.01).unwrap();
        assert!(y > 0.0 && y < 1e-100);
    }

    #[test]
    fn zero_step_gives_zero_dual() {
        let mut v = vec![1.0, -2.0];
        prox_dual_entropy(EntropyKind::Shannon, &mut v, 0.9, 0.0, 0.01).unwrap();
        assert_eq!(v, vec![0.0, 0.0]);
    }
}
