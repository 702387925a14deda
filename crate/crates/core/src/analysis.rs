//! Numerical studies built on the densities: exponential tail fits,
//! quantile-front spreading speeds, narrow-energy agreement between the
//! naive and POVM densities, the width-times-energy localization scan and
//! the convexity gap on mixtures.

use crate::density::{
    convex_combination_values, density_values, l1_between, source_values, spatial_options_for, DensityProfile,
    Prescription, Source,
};
use crate::error::{Error, Result};
use crate::spatial;
use crate::state::{energy_moment, relative_energy_spread, Dim, MixedState, MomentumState};

/// Minimum samples a tail fit accepts.
pub const MIN_FIT_POINTS: usize = 8;

/// Straight-line fit of `ln p(r)` against `r` on a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    pub window: (f64, f64),
    pub samples: usize,
    /// `d ln p / dr`.
    pub slope: f64,
    pub intercept: f64,
    /// Density `~ exp(-2 gamma r)`, so `gamma = -slope / 2`.
    pub gamma_hat: f64,
    /// Standard error of `gamma_hat` from the fit residuals.
    pub gamma_std_error: f64,
    /// RMS residual of the fit in log space.
    pub residual: f64,
}

impl TailFit {
    /// `gamma_hat <= mass + 3 * std_error`.
    pub fn within_mass_bound(&self, mass: f64) -> bool {
        self.gamma_hat <= mass + 3.0 * self.gamma_std_error
    }
}

/// Least-squares fit of `ln(values)` on the profile points inside `window`.
pub fn fit_tail(profile: &DensityProfile, window: (f64, f64)) -> Result<TailFit> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::Precondition(format!("fit window [{lo}, {hi}] is empty")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&r, &v) in profile.points.iter().zip(&profile.values) {
        if r < lo || r > hi {
            continue;
        }
        if !(v > 0.0) {
            return Err(Error::NonpositiveDensity { r, value: v });
        }
        xs.push(r);
        ys.push(v.ln());
    }
    let n = xs.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::Precondition(format!(
            "fit window [{lo}, {hi}] holds {n} samples, need at least {MIN_FIT_POINTS}"
        )));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_se = (ssr / (nf - 2.0) / sxx).sqrt();
    Ok(TailFit {
        window,
        samples: n,
        slope,
        intercept,
        gamma_hat: -slope / 2.0,
        gamma_std_error: slope_se / 2.0,
        residual: (ssr / nf).sqrt(),
    })
}

/// Radii `R_q(t)` holding probability `1 - q` inside `|x| <= R` (d=1) or
/// `r <= R` (d=3).
#[derive(Debug, Clone, PartialEq)]
pub struct FrontRadius {
    pub q: f64,
    pub times: Vec<f64>,
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontSpeed {
    pub front: FrontRadius,
    /// `(R_q(t_i) - R_q(0)) / t_i` for each `t_i > 0`, paired with `t_i`.
    pub speeds: Vec<(f64, f64)>,
}

impl FrontSpeed {
    pub fn max_speed(&self) -> f64 {
        self.speeds.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Smallest centred radius holding probability `mass` at time `t`.
pub fn radius_containing(s: &MomentumState, prescription: Prescription, t: f64, mass: f64) -> Result<f64> {
    if !prescription.is_probability() {
        return Err(Error::Precondition(format!("`{prescription}` is not a probability density")));
    }
    if !(0.0 < mass && mass < 1.0) {
        return Err(Error::Precondition(format!("probability mass {mass} must lie in (0, 1)")));
    }
    let dim = s.params().dim;
    let folded = |rs: &[f64]| -> Result<Vec<f64>> {
        match dim {
            Dim::One => {
                let mut both: Vec<f64> = rs.to_vec();
                both.extend(rs.iter().map(|r| -r));
                let v = density_values(s, prescription, &both, t)?;
                let (pos, neg) = v.split_at(rs.len());
                Ok(pos.iter().zip(neg).map(|(a, b)| a + b).collect())
            }
            Dim::Three => {
                let v = density_values(s, prescription, rs, t)?;
                Ok(v.iter().zip(rs).map(|(y, r)| 4.0 * std::f64::consts::PI * r * r * y).collect())
            }
        }
    };
    let opts = spatial_options_for(s, t);
    let extent = spatial::find_extent(&folded, Dim::Three, &opts)?;
    let conv = spatial::integrate_interval(&folded, 0.0, extent, &opts)?;
    spatial::invert_cumulative(&folded, &conv, mass)
}

/// Quantile-front radii and their average growth speeds.
pub fn front_speed(s: &MomentumState, prescription: Prescription, q: f64, times: &[f64]) -> Result<FrontSpeed> {
    if !(1e-6..=0.5).contains(&q) {
        return Err(Error::Precondition(format!("quantile q = {q} must lie in [1e-6, 0.5]")));
    }
    if times.first() != Some(&0.0) {
        return Err(Error::Precondition("times must start at t = 0".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("times must be strictly increasing".into()));
    }
    let radii = times
        .iter()
        .map(|&t| radius_containing(s, prescription, t, 1.0 - q))
        .collect::<Result<Vec<_>>>()?;
    let speeds = times.iter().zip(&radii).skip(1).map(|(&t, &r)| (t, (r - radii[0]) / t)).collect();
    Ok(FrontSpeed { front: FrontRadius { q, times: times.to_vec(), radii }, speeds })
}

/// Relative energy spread against the naive/POVM L1 distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NarrowEnergyRow {
    pub relative_spread: f64,
    pub mean_energy: f64,
    pub l1: f64,
}

/// `int |p_a - p_b|` over all space at time `t`.
pub fn prescription_l1(s: &MomentumState, a: Prescription, b: Prescription, t: f64) -> Result<f64> {
    let f = |xs: &[f64]| density_values(s, a, xs, t);
    if a == b {
        return l1_between(Source::Pure(s), t, &f, &f);
    }
    let g = |xs: &[f64]| density_values(s, b, xs, t);
    l1_between(Source::Pure(s), t, &f, &g)
}

/// L1 distance between the naive and POVM densities along a family of
/// states ordered by decreasing `Delta E / <E>`.
pub fn narrow_energy_study(family: &[MomentumState], t: f64) -> Result<Vec<NarrowEnergyRow>> {
    let rows = family
        .iter()
        .map(|s| {
            Ok(NarrowEnergyRow {
                relative_spread: relative_energy_spread(s)?,
                mean_energy: energy_moment(s, 1)?,
                l1: prescription_l1(s, Prescription::NaiveNormalized, Prescription::Povm, t)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if rows.windows(2).any(|w| w[1].relative_spread > w[0].relative_spread) {
        return Err(Error::Precondition("family must be sorted by decreasing relative energy spread".into()));
    }
    Ok(rows)
}

/// True when each value is at most `(1 + jitter)` times its predecessor.
pub fn nonincreasing_within(values: &[f64], jitter: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] * (1.0 + jitter))
}

/// Width of the smallest centred region holding a fraction of the POVM
/// density, with the mean energy and their product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRow {
    /// Length in d=1, cube root of the ball volume in d=3.
    pub width: f64,
    pub mean_energy: f64,
    pub product: f64,
}

/// Default probability fraction for [`localization_bound_scan`].
pub const DEFAULT_BOUND_FRACTION: f64 = 0.9;

/// Width times mean energy for each state, at `t = 0`.
pub fn localization_bound_scan(family: &[MomentumState], fraction: f64) -> Result<Vec<BoundRow>> {
    family
        .iter()
        .map(|s| {
            let r = radius_containing(s, Prescription::Povm, 0.0, fraction)?;
            let width = match s.params().dim {
                Dim::One => 2.0 * r,
                Dim::Three => (4.0 / 3.0 * std::f64::consts::PI).cbrt() * r,
            };
            let mean_energy = energy_moment(s, 1)?;
            Ok(BoundRow { width, mean_energy, product: width * mean_energy })
        })
        .collect()
}

/// L1 distance between the mixture density and the convex combination of
/// component densities under `prescription`.
///
/// Zero for the linear prescriptions; positive for the naive one whenever
/// the components have different `<H>` and non-proportional energy
/// densities.
pub fn convexity_gap(mix: &MixedState, t: f64, prescription: Prescription) -> Result<f64> {
    if mix.len() < 2 {
        return Err(Error::Precondition("convexity gap needs a mixture of at least two states".into()));
    }
    let f = |xs: &[f64]| source_values(Source::Mixed(mix), prescription, xs, t);
    let g = |xs: &[f64]| convex_combination_values(mix, prescription, xs, t);
    l1_between(Source::Mixed(mix), t, &f, &g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(points: Vec<f64>, values: Vec<f64>) -> DensityProfile {
        DensityProfile {
            dim: Dim::One,
            t: 0.0,
            points,
            values,
            prescription: Prescription::Povm,
            total_mass_hint: f64::NAN,
        }
    }

    #[test]
    fn exact_exponential_gives_exact_gamma() {
        let pts: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
        let vals = pts.iter().map(|r| (-2.0 * r).exp()).collect();
        let fit = fit_tail(&profile(pts, vals), (2.0, 8.0)).unwrap();
        assert!((fit.gamma_hat - 1.0).abs() < 1e-6);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn fit_rejects_nonpositive_samples_and_short_windows() {
        let pts: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let mut vals: Vec<f64> = pts.iter().map(|r| (-r).exp()).collect();
        vals[10] = -1e-30;
        let err = fit_tail(&profile(pts.clone(), vals), (5.0, 15.0)).unwrap_err();
        assert!(matches!(err, Error::NonpositiveDensity { .. }));
        assert!(err.to_string().contains("shrink the window"));
        let vals = pts.iter().map(|r| (-r).exp()).collect();
        assert!(fit_tail(&profile(pts, vals), (0.0, 3.0)).is_err());
    }

    #[test]
    fn monotonicity_with_jitter() {
        assert!(nonincreasing_within(&[1.0, 0.5, 0.52, 0.1], 0.05));
        assert!(!nonincreasing_within(&[1.0, 0.5, 0.6], 0.05));
    }
}
