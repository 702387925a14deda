//! Position-space integration of densities.
//!
//! Densities are only ever available as "evaluate at these points"
//! callbacks, so this module works on [`DensityFn`] closures. Infinite
//! domains are cut where the integrand has fallen below [`TAIL_RATIO`] of its
//! peak; finite intervals are integrated with composite Gauss-Legendre
//! panels, doubling the panel count until two successive estimates agree.

use crate::error::{Error, Result};
use crate::quadrature::{GaussLegendre, PanelMesh};
use crate::state::Dim;

/// A real density sampled at arbitrary points.
pub type DensityFn<'a> = dyn Fn(&[f64]) -> Result<Vec<f64>> + Sync + 'a;

/// Integrand/peak ratio at which an infinite domain is truncated.
pub const TAIL_RATIO: f64 = 1e-14;
/// Relative agreement required between successive panel refinements.
pub const REFINE_TOLERANCE: f64 = 1e-10;
const PANEL_ORDER: usize = 16;
const MAX_PANELS: usize = 1 << 15;
const MAX_EXTENT: f64 = 1e5;
const SCAN_POINTS: usize = 401;

/// Settings shared by the integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialOptions {
    /// Largest panel width to start refining from. Should resolve the
    /// fastest oscillation the density can carry.
    pub initial_panel: f64,
    /// Extent to start the domain search from.
    pub initial_extent: f64,
    /// Absolute floor added to the relative convergence test.
    pub abs_tolerance: f64,
}

impl Default for SpatialOptions {
    fn default() -> Self {
        Self { initial_panel: 0.25, initial_extent: 4.0, abs_tolerance: 1e-15 }
    }
}

/// Multiplies the density by the radial volume element in d=3.
pub fn volume_weighted<'a>(f: &'a DensityFn<'a>, dim: Dim) -> impl Fn(&[f64]) -> Result<Vec<f64>> + Sync + 'a {
    move |xs: &[f64]| {
        let mut v = f(xs)?;
        if dim == Dim::Three {
            for (y, &r) in v.iter_mut().zip(xs) {
                *y *= 4.0 * std::f64::consts::PI * r * r;
            }
        }
        Ok(v)
    }
}

/// Smallest extent `X` (grown geometrically) such that the integrand on the
/// outer 15% of `[-X, X]` (d=1) or `[0, X]` (d=3) is below
/// `TAIL_RATIO * peak`.
pub fn find_extent(integrand: &DensityFn, dim: Dim, opts: &SpatialOptions) -> Result<f64> {
    let mut extent = opts.initial_extent.max(1e-3);
    while extent <= MAX_EXTENT {
        let lo = if dim == Dim::One { -extent } else { 0.0 };
        let xs: Vec<f64> = (0..SCAN_POINTS)
            .map(|i| lo + (extent - lo) * i as f64 / (SCAN_POINTS - 1) as f64)
            .collect();
        let ys = integrand(&xs)?;
        let peak = ys.iter().copied().fold(0.0, f64::max);
        if peak <= 0.0 {
            return Err(Error::DomainExtension("density vanishes on the scan grid".into()));
        }
        let tail = xs
            .iter()
            .zip(&ys)
            .filter(|(x, _)| x.abs() >= 0.85 * extent)
            .map(|(_, y)| y.abs())
            .fold(0.0, f64::max);
        if tail <= TAIL_RATIO * peak {
            return Ok(extent);
        }
        extent *= 1.5;
    }
    Err(Error::DomainExtension(format!(
        "density still above {TAIL_RATIO:.0e} x peak at |x| = {MAX_EXTENT:.0e}"
    )))
}

/// A converged composite rule over `[a, b]` together with the integrand
/// samples on it.
#[derive(Debug, Clone)]
pub struct Converged {
    pub mesh: PanelMesh,
    pub samples: Vec<f64>,
    pub value: f64,
}

/// Integrates over `[a, b]`, doubling the panel count until successive
/// estimates agree to `REFINE_TOLERANCE` relative (plus the absolute floor).
pub fn integrate_interval(integrand: &DensityFn, a: f64, b: f64, opts: &SpatialOptions) -> Result<Converged> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::Precondition(format!("cannot integrate over [{a}, {b}]")));
    }
    let rule = GaussLegendre::new(PANEL_ORDER);
    if b == a {
        let mesh = PanelMesh { nodes: vec![], weights: vec![], edges: vec![a, a], order: PANEL_ORDER };
        return Ok(Converged { mesh, samples: vec![], value: 0.0 });
    }
    let mut panels = (((b - a) / opts.initial_panel).ceil() as usize).clamp(2, MAX_PANELS / 2);
    let mut prev: Option<f64> = None;
    loop {
        let mesh = PanelMesh::new(a, b, panels, &[], &rule);
        let samples = integrand(&mesh.nodes)?;
        let value = mesh.integrate_samples(&samples);
        if let Some(p) = prev {
            let scale = value.abs().max(samples.iter().map(|s| s.abs()).fold(0.0, f64::max) * (b - a) * 1e-6);
            if (value - p).abs() <= REFINE_TOLERANCE * scale + opts.abs_tolerance {
                return Ok(Converged { mesh, samples, value });
            }
        }
        if panels >= MAX_PANELS {
            return Err(Error::NotConverged(format!(
                "integral over [{a}, {b}] still changing at {panels} panels (last {value:.6e}, previous {:?})",
                prev
            )));
        }
        prev = Some(value);
        panels *= 2;
    }
}

/// Integrates over the whole space: `(-inf, inf)` in d=1, `[0, inf)` in
/// d=3. The integrand must already include any volume element.
pub fn integrate_all(integrand: &DensityFn, dim: Dim, opts: &SpatialOptions) -> Result<Converged> {
    let extent = find_extent(integrand, dim, opts)?;
    let lo = if dim == Dim::One { -extent } else { 0.0 };
    integrate_interval(integrand, lo, extent, opts)
}

/// `int |f - g|` over `[a, b]`.
///
/// Sign changes of `f - g` are located by bisection and become panel
/// edges, so each piece is smooth and converges like an ordinary integral.
pub fn l1_distance(f: &DensityFn, g: &DensityFn, a: f64, b: f64, opts: &SpatialOptions) -> Result<f64> {
    let diff = |xs: &[f64]| -> Result<Vec<f64>> {
        let fv = f(xs)?;
        let gv = g(xs)?;
        Ok(fv.iter().zip(&gv).map(|(x, y)| x - y).collect())
    };
    let envelope = |xs: &[f64]| -> Result<Vec<f64>> {
        let fv = f(xs)?;
        let gv = g(xs)?;
        Ok(fv.iter().zip(&gv).map(|(x, y)| x.abs() + y.abs()).collect())
    };
    let coarse = integrate_interval(&envelope, a, b, opts)?;
    let xs = coarse.mesh.nodes.clone();
    let ds = diff(&xs)?;
    let peak = ds.iter().map(|d| d.abs()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(0.0);
    }
    let floor = peak * 1e-13;

    let mut cuts = vec![a];
    for i in 1..xs.len() {
        let (d0, d1) = (ds[i - 1], ds[i]);
        if d0.abs() < floor && d1.abs() < floor {
            continue;
        }
        if d0 * d1 < 0.0 {
            cuts.push(bisect_root(&diff, xs[i - 1], xs[i], d0)?);
        }
    }
    cuts.push(b);

    let abs_diff = |xs: &[f64]| -> Result<Vec<f64>> { Ok(diff(xs)?.into_iter().map(f64::abs).collect()) };
    let mut total = 0.0;
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            let piece_opts = SpatialOptions { initial_panel: opts.initial_panel.min(w[1] - w[0]), ..*opts };
            total += integrate_interval(&abs_diff, w[0], w[1], &piece_opts)?.value;
        }
    }
    Ok(total)
}

fn bisect_root(diff: &DensityFn, mut lo: f64, mut hi: f64, mut f_lo: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = diff(&[mid])?[0];
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid * f_lo < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solves `int_0^R F(r) dr = target` for nondecreasing cumulative
/// integrals of a nonnegative `F`, given a converged mesh on `[0, X]`.
pub fn invert_cumulative(integrand: &DensityFn, conv: &Converged, target: f64) -> Result<f64> {
    let sums = conv.mesh.panel_sums(&conv.samples);
    let total: f64 = sums.iter().sum();
    if target > total {
        return Err(Error::DomainExtension(format!(
            "cumulative probability {total:.12} on the computed domain never reaches {target:.12}"
        )));
    }
    let rule = GaussLegendre::new(PANEL_ORDER);
    let mut acc = 0.0;
    for (k, &s) in sums.iter().enumerate() {
        if acc + s >= target || k + 1 == sums.len() {
            let (a, b) = (conv.mesh.edges[k], conv.mesh.edges[k + 1]);
            let partial = |r: f64| -> Result<f64> {
                let half = 0.5 * (r - a);
                let mid = 0.5 * (r + a);
                let xs: Vec<f64> = rule.nodes().iter().map(|u| mid + half * u).collect();
                let ys = integrand(&xs)?;
                Ok(acc + half * rule.weights().iter().zip(&ys).map(|(w, y)| w * y).sum::<f64>())
            };
            let (mut lo, mut hi) = (a, b);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if partial(mid)? < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        acc += s;
    }
    unreachable!("panel sums are nonempty")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(xs: &[f64]) -> Result<Vec<f64>> {
        Ok(xs.iter().map(|x| (-x * x).exp() / std::f64::consts::PI.sqrt()).collect())
    }

    #[test]
    fn whole_line_gaussian_integrates_to_one() {
        let c = integrate_all(&gaussian, Dim::One, &SpatialOptions::default()).unwrap();
        assert!((c.value - 1.0).abs() < 1e-13, "{}", c.value);
    }

    #[test]
    fn extent_grows_for_shifted_mass() {
        let shifted = |xs: &[f64]| gaussian(&xs.iter().map(|x| x - 30.0).collect::<Vec<_>>());
        let ext = find_extent(&shifted, Dim::One, &SpatialOptions::default()).unwrap();
        assert!(ext > 35.0);
    }

    #[test]
    fn l1_of_sign_changing_difference() {
        // |sin x| over [0, 2 pi] = 4.
        let f = |xs: &[f64]| -> Result<Vec<f64>> { Ok(xs.iter().map(|x| x.sin()).collect()) };
        let zero = |xs: &[f64]| -> Result<Vec<f64>> { Ok(vec![0.0; xs.len()]) };
        let l1 = l1_distance(&f, &zero, 0.0, 2.0 * std::f64::consts::PI, &SpatialOptions::default()).unwrap();
        assert!((l1 - 4.0).abs() < 1e-12, "{l1}");
        assert_eq!(l1_distance(&f, &f, 0.0, 1.0, &SpatialOptions::default()).unwrap(), 0.0);
    }

    #[test]
    fn cumulative_inversion_finds_quantile() {
        // Exponential density on [0, inf): median at ln 2.
        let f = |xs: &[f64]| -> Result<Vec<f64>> { Ok(xs.iter().map(|x| (-x).exp()).collect()) };
        let c = integrate_all(&f, Dim::Three, &SpatialOptions::default()).unwrap();
        let r = invert_cumulative(&f, &c, 0.5).unwrap();
        assert!((r - 2f64.ln()).abs() < 1e-12, "{r}");
    }
}
