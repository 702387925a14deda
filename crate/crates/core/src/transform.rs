//! Position-space fields by direct quadrature over the momentum grid.
//!
//! For a state `psi(p)` and a momentum weight `w(p)`, the field is
//!
//! ```text
//! f(x, t) = int dmu(p) w(p) psi(p) K(p, x) exp(-i E t)
//! ```
//!
//! with `K = exp(i p x)` in d=1 and `K = sin(p r) / (p r)` in d=3 (the
//! angular integral done in closed form). The spatial gradient and the time
//! derivative differentiate the kernel under the integral, so they carry the
//! same quadrature accuracy as the value.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{Dim, MomentumState};

/// Which momentum weight multiplies `psi(p)` before the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldKind {
    /// `w = 1`: the configuration-space wavefunction.
    Plain,
    /// `w = E^-1/2`: the field whose energy-density form is the POVM density.
    Tilde,
    /// `w = sqrt(2E)`: the Newton-Wigner wavefunction.
    NewtonWigner,
}

impl FieldKind {
    pub const ALL: [FieldKind; 3] = [FieldKind::Plain, FieldKind::Tilde, FieldKind::NewtonWigner];

    /// Momentum weight at energy `e`.
    #[inline]
    pub fn weight(self, e: f64) -> f64 {
        match self {
            FieldKind::Plain => 1.0,
            FieldKind::Tilde => e.sqrt().recip(),
            FieldKind::NewtonWigner => (2.0 * e).sqrt(),
        }
    }
}

/// Relative deviation of `tilde(p) * sqrt(2) * E(p)` from `nw(p)` at energy `e`.
pub fn tilde_nw_identity_error(e: f64) -> f64 {
    let tilde = FieldKind::Tilde.weight(e);
    let nw = FieldKind::NewtonWigner.weight(e);
    ((tilde * SQRT_2 * e - nw) / nw).abs()
}

/// Field samples with exact first derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionField {
    pub kind: FieldKind,
    pub dim: Dim,
    pub t: f64,
    /// `x` in d=1, `r >= 0` in d=3.
    pub points: Vec<f64>,
    pub value: Vec<Complex64>,
    /// `d/dx` in d=1, `d/dr` in d=3.
    pub grad: Vec<Complex64>,
    pub dt: Vec<Complex64>,
}

/// Below this `p r` the radial kernel uses its Taylor series.
pub const SINC_SERIES_THRESHOLD: f64 = 1e-4;

/// `sin(z) / z`.
#[inline]
pub fn sinc(z: f64) -> f64 {
    if z.abs() < SINC_SERIES_THRESHOLD {
        sinc_series(z)
    } else {
        z.sin() / z
    }
}

/// `d/dz [sin(z) / z] = (z cos z - sin z) / z^2`.
#[inline]
pub fn sinc_prime(z: f64) -> f64 {
    if z.abs() < SINC_SERIES_THRESHOLD {
        sinc_prime_series(z)
    } else {
        let (s, c) = z.sin_cos();
        (z * c - s) / (z * z)
    }
}

#[inline]
pub(crate) fn sinc_series(z: f64) -> f64 {
    let z2 = z * z;
    1.0 - z2 / 6.0 * (1.0 - z2 / 20.0 * (1.0 - z2 / 42.0))
}

#[inline]
pub(crate) fn sinc_prime_series(z: f64) -> f64 {
    let z2 = z * z;
    -z / 3.0 * (1.0 - z2 / 10.0 * (1.0 - z2 / 28.0))
}

/// Per-node coefficients `dmu * w(p) * psi(p) * exp(-i E t)`.
fn coefficients(s: &MomentumState, kind: FieldKind, t: f64) -> Vec<Complex64> {
    s.measure()
        .iter()
        .zip(s.values())
        .zip(s.energies())
        .map(|((&m, &v), &e)| v * (m * kind.weight(e)) * Complex64::from_polar(1.0, -e * t))
        .collect()
}

/// Evaluates `value`, `grad` and `dt` of the `kind` field at `points`.
pub fn evaluate_field(s: &MomentumState, kind: FieldKind, points: &[f64], t: f64) -> Result<PositionField> {
    if !s.is_normalized() {
        return Err(Error::Precondition("evaluate_field requires a normalized state".into()));
    }
    if let Some(x) = points.iter().find(|x| !x.is_finite()) {
        return Err(Error::Precondition(format!("evaluation point {x} is not finite")));
    }
    if !t.is_finite() {
        return Err(Error::Precondition(format!("time {t} is not finite")));
    }
    s.check_massless_suppression()?;
    let dim = s.params().dim;
    if dim == Dim::Three && points.iter().any(|&r| r < 0.0) {
        return Err(Error::Precondition("radial points must be >= 0".into()));
    }

    let coeffs = coefficients(s, kind, t);
    let nodes = s.grid().nodes();
    let energies = s.energies();

    let samples: Vec<(Complex64, Complex64, Complex64)> = points
        .par_iter()
        .map(|&x| {
            let mut value = Complex64::new(0.0, 0.0);
            let mut grad = Complex64::new(0.0, 0.0);
            let mut dt = Complex64::new(0.0, 0.0);
            match dim {
                Dim::One => {
                    for ((&c, &p), &e) in coeffs.iter().zip(nodes).zip(energies) {
                        let (sn, cs) = (p * x).sin_cos();
                        let term = c * Complex64::new(cs, sn);
                        value += term;
                        grad += term * Complex64::new(0.0, p);
                        dt += term * Complex64::new(0.0, -e);
                    }
                }
                Dim::Three => {
                    for ((&c, &p), &e) in coeffs.iter().zip(nodes).zip(energies) {
                        let z = p * x;
                        let k = sinc(z);
                        let term = c * k;
                        value += term;
                        grad += c * (p * sinc_prime(z));
                        dt += term * Complex64::new(0.0, -e);
                    }
                }
            }
            (value, grad, dt)
        })
        .collect();

    let mut value = Vec::with_capacity(points.len());
    let mut grad = Vec::with_capacity(points.len());
    let mut dt = Vec::with_capacity(points.len());
    for (v, g, d) in samples {
        value.push(v);
        grad.push(g);
        dt.push(d);
    }
    Ok(PositionField { kind, dim, t, points: points.to_vec(), value, grad, dt })
}

/// Analytic derivatives against central differences at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeReport {
    pub h: f64,
    /// `|grad_analytic - grad_fd| / max(|grad_analytic|, scale)`.
    pub grad_deviation: f64,
    pub dt_deviation: f64,
}

impl DerivativeReport {
    pub fn max_deviation(&self) -> f64 {
        self.grad_deviation.max(self.dt_deviation)
    }
}

/// Compares the analytic `grad` and `dt` at `(x, t)` with central
/// differences of step `h` taken on the field value.
///
/// Deviations are relative to the larger of the derivative magnitude and the
/// field magnitude, so a derivative that vanishes by symmetry does not
/// inflate the ratio.
pub fn check_derivatives(s: &MomentumState, kind: FieldKind, x: f64, t: f64, h: f64) -> Result<DerivativeReport> {
    if !(1e-6..=1e-2).contains(&h) {
        return Err(Error::Precondition(format!("step h = {h} must lie in [1e-6, 1e-2]")));
    }
    let centre = evaluate_field(s, kind, &[x], t)?;
    let (xm, xp) = match s.params().dim {
        Dim::One => (x - h, x + h),
        // One-sided points would leave the radial domain; mirror instead.
        Dim::Three if x < h => (h - x, x + h),
        Dim::Three => (x - h, x + h),
    };
    let space = evaluate_field(s, kind, &[xm, xp], t)?;
    let before = evaluate_field(s, kind, &[x], t - h)?;
    let after = evaluate_field(s, kind, &[x], t + h)?;

    let scale = centre.value[0].norm();
    let grad_fd = (space.value[1] - space.value[0]) / (xp - xm);
    let dt_fd = (after.value[0] - before.value[0]) / (2.0 * h);
    let grad_deviation = (centre.grad[0] - grad_fd).norm() / centre.grad[0].norm().max(scale);
    let dt_deviation = (centre.dt[0] - dt_fd).norm() / centre.dt[0].norm().max(scale);
    Ok(DerivativeReport { h, grad_deviation, dt_deviation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{make_gaussian, GridSpec, ModelParams};

    fn gaussian(p0: f64, sigma: f64) -> MomentumState {
        make_gaussian(ModelParams::new(1.0, Dim::One).unwrap(), p0, sigma, GridSpec::default()).unwrap()
    }

    #[test]
    fn weight_identity_holds_pointwise() {
        for p in [0.1f64, 1.0, 10.0] {
            let e = 1f64.hypot(p);
            assert!(tilde_nw_identity_error(e) <= 1e-15, "p={p}");
        }
    }

    #[test]
    fn even_state_at_t0_has_real_value_and_imaginary_dt() {
        let s = gaussian(0.0, 0.25);
        let pts = [-3.0, -0.7, 0.0, 1.1, 4.0];
        for kind in FieldKind::ALL {
            let f = evaluate_field(&s, kind, &pts, 0.0).unwrap();
            for i in 0..pts.len() {
                assert!(f.value[i].im.abs() < 1e-10);
                assert!(f.dt[i].re.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn parity_of_even_state() {
        let s = gaussian(0.0, 0.25);
        for kind in FieldKind::ALL {
            let f = evaluate_field(&s, kind, &[-5.0, 5.0], 0.0).unwrap();
            assert!((f.value[0].norm() - f.value[1].norm()).abs() < 1e-10);
        }
    }

    #[test]
    fn series_branch_matches_direct_formula_at_threshold() {
        let z = SINC_SERIES_THRESHOLD;
        assert!((sinc_series(z) - z.sin() / z).abs() < 1e-12);
        let (sn, cs) = z.sin_cos();
        assert!((sinc_prime_series(z) - (z * cs - sn) / (z * z)).abs() < 1e-12);
    }

    #[test]
    fn unnormalized_state_is_rejected() {
        let p = ModelParams::new(1.0, Dim::One).unwrap();
        let g = crate::state::MomentumGrid::new(-3.0, 3.0, GridSpec::default()).unwrap();
        let s = MomentumState::from_fn(p, g, |q| Complex64::new((-q * q).exp(), 0.0), false).unwrap();
        assert!(evaluate_field(&s, FieldKind::Plain, &[0.0], 0.0).is_err());
    }

    #[test]
    fn step_outside_range_is_rejected() {
        let s = gaussian(1.0, 0.25);
        assert!(check_derivatives(&s, FieldKind::Plain, 0.5, 0.3, 0.1).is_err());
        assert!(check_derivatives(&s, FieldKind::Plain, 0.5, 0.3, 1e-7).is_err());
    }
}
