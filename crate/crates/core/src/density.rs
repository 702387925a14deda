//! Localization densities and region probabilities.
//!
//! Four prescriptions share one quadratic form. For a field `f` built from
//! `psi(p)` by [`evaluate_field`],
//!
//! ```text
//! Q[f](x, t) = |grad f|^2 + |d_t f|^2 + m^2 |f|^2
//! ```
//!
//! * [`Prescription::EnergyDensityRaw`]: `Q` of the plain field, the energy density.
//! * [`Prescription::NaiveNormalized`]: the energy density divided by `<H>`.
//! * [`Prescription::Povm`]: `Q` of the `E^-1/2`-weighted field; this is
//!   `<Psi| H^-1/2 T00(x,t) H^-1/2 |Psi>` and integrates to one.
//! * [`Prescription::NewtonWigner`]: `|psi_NW(x, t)|^2`.
//!
//! On mixtures the Povm and Newton-Wigner densities are linear in the
//! density operator. The naive prescription divides the mixed energy
//! density by the mixed `<H>`, which is not the convex combination of the
//! component densities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::{self, DensityFn, SpatialOptions};
use crate::state::{energy_moment, Dim, MixedState, MomentumState};
use crate::transform::{evaluate_field, FieldKind, PositionField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Prescription {
    #[serde(rename = "energy_raw")]
    EnergyDensityRaw,
    #[serde(rename = "naive")]
    NaiveNormalized,
    #[serde(rename = "povm")]
    Povm,
    #[serde(rename = "nw")]
    NewtonWigner,
}

impl Prescription {
    pub const ALL: [Prescription; 4] = [
        Prescription::EnergyDensityRaw,
        Prescription::NaiveNormalized,
        Prescription::Povm,
        Prescription::NewtonWigner,
    ];

    /// Short column name used in tables.
    pub fn label(self) -> &'static str {
        match self {
            Prescription::EnergyDensityRaw => "energy_raw",
            Prescription::NaiveNormalized => "naive",
            Prescription::Povm => "povm",
            Prescription::NewtonWigner => "nw",
        }
    }

    pub fn is_probability(self) -> bool {
        self != Prescription::EnergyDensityRaw
    }
}

impl std::fmt::Display for Prescription {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Prescription {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Prescription::ALL
            .into_iter()
            .find(|p| p.label() == s)
            .ok_or_else(|| Error::Precondition(format!("unknown prescription `{s}` (expected povm, naive, nw or energy_raw)")))
    }
}

/// Density samples at fixed `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    pub dim: Dim,
    pub t: f64,
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    pub prescription: Prescription,
    /// Trapezoid-rule integral over the sample points (with `4 pi r^2` in
    /// d=3). Accurate only when the points are fine and cover the tails.
    pub total_mass_hint: f64,
}

impl DensityProfile {
    fn new(dim: Dim, t: f64, points: &[f64], values: Vec<f64>, prescription: Prescription) -> Self {
        let total_mass_hint = trapezoid(dim, points, &values);
        Self { dim, t, points: points.to_vec(), values, prescription, total_mass_hint }
    }
}

fn trapezoid(dim: Dim, points: &[f64], values: &[f64]) -> f64 {
    let weight = |x: f64| match dim {
        Dim::One => 1.0,
        Dim::Three => 4.0 * std::f64::consts::PI * x * x,
    };
    points
        .windows(2)
        .zip(values.windows(2))
        .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] * weight(x[0]) + v[1] * weight(x[1])))
        .sum()
}

fn quadratic_form(field: &PositionField, mass: f64) -> Vec<f64> {
    let m2 = mass * mass;
    field
        .value
        .iter()
        .zip(&field.grad)
        .zip(&field.dt)
        .map(|((v, g), d)| g.norm_sqr() + d.norm_sqr() + m2 * v.norm_sqr())
        .collect()
}

/// Raw density values for a pure state.
pub fn density_values(s: &MomentumState, prescription: Prescription, points: &[f64], t: f64) -> Result<Vec<f64>> {
    let mass = s.params().mass;
    match prescription {
        Prescription::EnergyDensityRaw => Ok(quadratic_form(&evaluate_field(s, FieldKind::Plain, points, t)?, mass)),
        Prescription::NaiveNormalized => {
            let h = energy_moment(s, 1)?;
            let mut v = quadratic_form(&evaluate_field(s, FieldKind::Plain, points, t)?, mass);
            v.iter_mut().for_each(|y| *y /= h);
            Ok(v)
        }
        Prescription::Povm => Ok(quadratic_form(&evaluate_field(s, FieldKind::Tilde, points, t)?, mass)),
        Prescription::NewtonWigner => {
            let f = evaluate_field(s, FieldKind::NewtonWigner, points, t)?;
            Ok(f.value.iter().map(|v| v.norm_sqr()).collect())
        }
    }
}

/// Density profile of a pure state under any prescription.
pub fn density(s: &MomentumState, prescription: Prescription, points: &[f64], t: f64) -> Result<DensityProfile> {
    let values = density_values(s, prescription, points, t)?;
    Ok(DensityProfile::new(s.params().dim, t, points, values, prescription))
}

/// `|grad psi|^2 + |d_t psi|^2 + m^2 |psi|^2`; integrates to `<H>`.
pub fn energy_density(s: &MomentumState, points: &[f64], t: f64) -> Result<DensityProfile> {
    density(s, Prescription::EnergyDensityRaw, points, t)
}

/// Energy density divided by `<H>`.
pub fn naive_probability_density(s: &MomentumState, points: &[f64], t: f64) -> Result<DensityProfile> {
    density(s, Prescription::NaiveNormalized, points, t)
}

/// `<Psi|A(x,t)|Psi>` with `A = H^-1/2 T00 H^-1/2`.
pub fn povm_density(s: &MomentumState, points: &[f64], t: f64) -> Result<DensityProfile> {
    density(s, Prescription::Povm, points, t)
}

/// `|psi_NW(x, t)|^2`.
pub fn nw_density(s: &MomentumState, points: &[f64], t: f64) -> Result<DensityProfile> {
    density(s, Prescription::NewtonWigner, points, t)
}

/// Pure or mixed input to the region and mixture operations.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    Pure(&'a MomentumState),
    Mixed(&'a MixedState),
}

impl<'a> From<&'a MomentumState> for Source<'a> {
    fn from(s: &'a MomentumState) -> Self {
        Source::Pure(s)
    }
}

impl<'a> From<&'a MixedState> for Source<'a> {
    fn from(m: &'a MixedState) -> Self {
        Source::Mixed(m)
    }
}

impl Source<'_> {
    pub fn dim(&self) -> Dim {
        match self {
            Source::Pure(s) => s.params().dim,
            Source::Mixed(m) => m.params().dim,
        }
    }

    /// `(weight, state)` pairs; a pure state is a single unit-weight component.
    pub fn components(&self) -> Vec<(f64, &MomentumState)> {
        match self {
            Source::Pure(s) => vec![(1.0, *s)],
            Source::Mixed(m) => m.components().iter().map(|(w, s)| (*w, s)).collect(),
        }
    }

    /// `tr(rho H) = sum_i alpha_i <H>_i`.
    pub fn mean_energy(&self) -> Result<f64> {
        self.components().iter().map(|(w, s)| Ok(w * energy_moment(s, 1)?)).sum()
    }
}

/// Mixture densities.
///
/// Povm, Newton-Wigner and raw energy densities are expectation values of
/// operators and combine linearly. The naive prescription is
/// `(sum_i alpha_i E_i(x,t)) / (sum_i alpha_i <H>_i)`.
pub fn mixture_density(mix: &MixedState, points: &[f64], t: f64, prescription: Prescription) -> Result<DensityProfile> {
    let values = source_values(Source::Mixed(mix), prescription, points, t)?;
    Ok(DensityProfile::new(mix.params().dim, t, points, values, prescription))
}

/// Density values for a pure or mixed source.
pub fn source_values(src: Source<'_>, prescription: Prescription, points: &[f64], t: f64) -> Result<Vec<f64>> {
    let components = src.components();
    let (linear_as, scale) = match prescription {
        Prescription::NaiveNormalized => (Prescription::EnergyDensityRaw, src.mean_energy()?.recip()),
        other => (other, 1.0),
    };
    let mut acc = vec![0.0; points.len()];
    for (w, s) in components {
        let v = density_values(s, linear_as, points, t)?;
        for (a, y) in acc.iter_mut().zip(v) {
            *a += w * y;
        }
    }
    if scale != 1.0 {
        acc.iter_mut().for_each(|a| *a *= scale);
    }
    Ok(acc)
}

/// Convex combination of the component densities, `sum_i alpha_i p_i(x,t)`,
/// each `p_i` computed as for a pure state.
pub fn convex_combination_values(mix: &MixedState, prescription: Prescription, points: &[f64], t: f64) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; points.len()];
    for (w, s) in mix.components() {
        let v = density_values(s, prescription, points, t)?;
        for (a, y) in acc.iter_mut().zip(v) {
            *a += w * y;
        }
    }
    Ok(acc)
}

/// Integration settings tuned to a state's momentum content: the initial
/// panel resolves the fastest beat `exp(i (p - p') x)` on its grid.
pub fn spatial_options_for(s: &MomentumState, t: f64) -> SpatialOptions {
    let (lo, hi) = s.grid().domain();
    let span = match s.params().dim {
        Dim::One => hi - lo,
        Dim::Three => 2.0 * hi,
    };
    let mut opts = SpatialOptions::default();
    opts.initial_panel = 12.0 / span;
    opts.initial_extent = opts.initial_extent.max(1.5 * t.abs());
    opts
}

fn options_for_source(src: &Source<'_>, t: f64) -> SpatialOptions {
    src.components()
        .iter()
        .map(|(_, s)| spatial_options_for(s, t))
        .reduce(|a, b| SpatialOptions {
            initial_panel: a.initial_panel.min(b.initial_panel),
            initial_extent: a.initial_extent.max(b.initial_extent),
            abs_tolerance: a.abs_tolerance.min(b.abs_tolerance),
        })
        .expect("sources have at least one component")
}

/// Extent beyond which the density is below the tail threshold.
pub fn density_extent(s: &MomentumState, prescription: Prescription, t: f64) -> Result<f64> {
    let f = |xs: &[f64]| density_values(s, prescription, xs, t);
    let dim = s.params().dim;
    let g = spatial::volume_weighted(&f, dim);
    spatial::find_extent(&g, dim, &spatial_options_for(s, t))
}

/// Integral of a pure-state density over all space. For
/// [`Prescription::EnergyDensityRaw`] this is `<H>`; for the others it is
/// one up to quadrature error.
pub fn total_integral(s: &MomentumState, prescription: Prescription, t: f64) -> Result<f64> {
    let f = |xs: &[f64]| density_values(s, prescription, xs, t);
    let dim = s.params().dim;
    let g = spatial::volume_weighted(&f, dim);
    Ok(spatial::integrate_all(&g, dim, &spatial_options_for(s, t))?.value)
}

/// Root-mean-square spread of a pure-state density about its mean
/// (d=1) or about the origin (d=3, `sqrt(<r^2>)`).
pub fn density_width(s: &MomentumState, prescription: Prescription, t: f64) -> Result<f64> {
    let dim = s.params().dim;
    let f = |xs: &[f64]| density_values(s, prescription, xs, t);
    let g = spatial::volume_weighted(&f, dim);
    let opts = spatial_options_for(s, t);
    let conv = spatial::integrate_all(&g, dim, &opts)?;
    let total = conv.value;
    let moment = |k: i32| conv.mesh.nodes.iter().zip(&conv.samples).zip(&conv.mesh.weights).map(|((x, y), w)| w * y * x.powi(k)).sum::<f64>() / total;
    Ok(match dim {
        Dim::One => {
            let mean = moment(1);
            (moment(2) - mean * mean).max(0.0).sqrt()
        }
        Dim::Three => moment(2).sqrt(),
    })
}

/// Union of disjoint intervals (d=1) or radial shells (d=3). Endpoints may
/// be infinite; infinite ends are cut where the density is negligible.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    dim: Dim,
    parts: Vec<(f64, f64)>,
}

impl Region {
    pub fn new(dim: Dim, mut parts: Vec<(f64, f64)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Region("a region needs at least one part".into()));
        }
        for &(a, b) in &parts {
            if a.is_nan() || b.is_nan() || b <= a {
                return Err(Error::Region(format!("[{a}, {b}] has no positive measure")));
            }
            if dim == Dim::Three && a < 0.0 {
                return Err(Error::Region(format!("shell [{a}, {b}] has a negative radius")));
            }
        }
        parts.sort_by(|x, y| x.0.total_cmp(&y.0));
        for w in parts.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(Error::Region(format!(
                    "parts [{}, {}] and [{}, {}] overlap",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(Self { dim, parts })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(Dim::One, vec![(a, b)])
    }

    pub fn shell(r1: f64, r2: f64) -> Result<Self> {
        Self::new(Dim::Three, vec![(r1, r2)])
    }

    pub fn whole_space(dim: Dim) -> Self {
        let lo = if dim == Dim::One { f64::NEG_INFINITY } else { 0.0 };
        Self { dim, parts: vec![(lo, f64::INFINITY)] }
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn parts(&self) -> &[(f64, f64)] {
        &self.parts
    }

    /// Union with another region of the same dimension; fails on overlap.
    pub fn union(&self, other: &Region) -> Result<Region> {
        if self.dim != other.dim {
            return Err(Error::Region("cannot join regions of different dimension".into()));
        }
        let mut parts = self.parts.clone();
        parts.extend_from_slice(&other.parts);
        Region::new(self.dim, parts)
    }
}

/// Slack allowed outside `[0, 1]` for a region probability.
pub const PROBABILITY_SLACK: f64 = 1e-9;

/// Integral of `prescription`'s density of a pure state over `region`.
fn pure_region_integral(s: &MomentumState, region: &Region, t: f64, prescription: Prescription) -> Result<f64> {
    let dim = s.params().dim;
    if region.dim != dim {
        return Err(Error::Region(format!(
            "region is {}-dimensional but the state is {}-dimensional",
            region.dim.as_u8(),
            dim.as_u8()
        )));
    }
    let f = |xs: &[f64]| density_values(s, prescription, xs, t);
    let g = spatial::volume_weighted(&f, dim);
    let opts = spatial_options_for(s, t);
    let needs_extent = region.parts.iter().any(|(a, b)| a.is_infinite() || b.is_infinite());
    let extent = if needs_extent { spatial::find_extent(&g, dim, &opts)? } else { f64::INFINITY };
    let mut total = 0.0;
    for &(a, b) in &region.parts {
        let a = a.max(-extent);
        let b = b.min(extent);
        if b > a {
            total += spatial::integrate_interval(&g, a, b, &opts)?.value;
        }
    }
    Ok(total)
}

/// Probability that the particle is found in `region` at time `t`.
///
/// For mixtures, Povm and Newton-Wigner use the linear rule
/// `sum_i alpha_i P_i(region)`; the naive prescription uses
/// `(sum_i alpha_i int_region E_i) / (sum_i alpha_i <H>_i)`.
pub fn region_probability<'a>(
    src: impl Into<Source<'a>>,
    region: &Region,
    t: f64,
    prescription: Prescription,
) -> Result<f64> {
    let src = src.into();
    if !prescription.is_probability() {
        return Err(Error::Precondition(format!(
            "`{prescription}` is not a probability prescription; use povm, naive or nw"
        )));
    }
    let p = match prescription {
        Prescription::NaiveNormalized => {
            let mut numerator = 0.0;
            for (w, s) in src.components() {
                numerator += w * pure_region_integral(s, region, t, Prescription::EnergyDensityRaw)?;
            }
            numerator / src.mean_energy()?
        }
        linear => {
            let mut acc = 0.0;
            for (w, s) in src.components() {
                acc += w * pure_region_integral(s, region, t, linear)?;
            }
            acc
        }
    };
    if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p) {
        return Err(Error::NotConverged(format!("region probability {p} lies outside [0, 1]")));
    }
    Ok(p)
}

/// Full-space L1 distance between two density callbacks of the same source.
pub fn l1_between(
    src: Source<'_>,
    t: f64,
    f: &DensityFn,
    g: &DensityFn,
) -> Result<f64> {
    let dim = src.dim();
    let opts = options_for_source(&src, t);
    let fw = spatial::volume_weighted(f, dim);
    let gw = spatial::volume_weighted(g, dim);
    let envelope = |xs: &[f64]| -> Result<Vec<f64>> {
        let a = fw(xs)?;
        let b = gw(xs)?;
        Ok(a.iter().zip(&b).map(|(x, y)| x.abs().max(y.abs())).collect())
    };
    let extent = spatial::find_extent(&envelope, dim, &opts)?;
    let lo = if dim == Dim::One { -extent } else { 0.0 };
    spatial::l1_distance(&fw, &gw, lo, extent, &opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{make_gaussian, mix, GridSpec, ModelParams};

    fn g(p0: f64, sigma: f64) -> MomentumState {
        make_gaussian(ModelParams::new(1.0, Dim::One).unwrap(), p0, sigma, GridSpec::default()).unwrap()
    }

    #[test]
    fn prescriptions_are_nonnegative() {
        let s = g(1.0, 0.25);
        let pts: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.5).collect();
        for p in Prescription::ALL {
            let prof = density(&s, p, &pts, 0.7).unwrap();
            assert!(prof.values.iter().all(|&v| v >= -1e-12), "{p}");
        }
    }

    #[test]
    fn naive_is_energy_density_over_mean_energy() {
        let s = g(1.0, 0.25);
        let h = energy_moment(&s, 1).unwrap();
        let pts = [-2.0, 0.0, 0.3, 4.0];
        let e = energy_density(&s, &pts, 0.5).unwrap();
        let n = naive_probability_density(&s, &pts, 0.5).unwrap();
        for (a, b) in e.values.iter().zip(&n.values) {
            assert!((a - h * b).abs() <= 1e-14 * a.abs().max(1e-300));
        }
    }

    #[test]
    fn massless_energy_density_has_no_mass_term() {
        let m0 = ModelParams::new(0.0, Dim::One).unwrap();
        let s = make_gaussian(m0, 2.0, 0.25, GridSpec::default()).unwrap();
        let f = evaluate_field(&s, FieldKind::Plain, &[0.0, 1.0], 0.0).unwrap();
        let e = energy_density(&s, &[0.0, 1.0], 0.0).unwrap();
        for i in 0..2 {
            let kinetic = f.grad[i].norm_sqr() + f.dt[i].norm_sqr();
            assert_eq!(e.values[i], kinetic);
        }
    }

    #[test]
    fn region_validation() {
        assert!(Region::interval(1.0, 1.0).is_err());
        assert!(Region::new(Dim::One, vec![(0.0, 2.0), (1.0, 3.0)]).is_err());
        assert!(Region::shell(-1.0, 2.0).is_err());
        assert!(Region::new(Dim::One, vec![(1.0, 2.0), (-1.0, 0.0)]).is_ok());
        let a = Region::interval(0.0, 1.0).unwrap();
        assert!(a.union(&Region::interval(0.5, 2.0).unwrap()).is_err());
    }

    #[test]
    fn raw_energy_is_not_a_region_probability() {
        let s = g(0.0, 0.25);
        let r = Region::interval(-1.0, 1.0).unwrap();
        assert!(region_probability(&s, &r, 0.0, Prescription::EnergyDensityRaw).is_err());
        assert!("bogus".parse::<Prescription>().is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let s = g(0.0, 0.25);
        let r = Region::shell(0.0, 1.0).unwrap();
        assert!(matches!(region_probability(&s, &r, 0.0, Prescription::Povm), Err(Error::Region(_))));
    }

    #[test]
    fn singleton_mixture_matches_pure_state() {
        let s = g(1.0, 0.25);
        let m = mix(vec![(1.0, s.clone())]).unwrap();
        let pts = [-1.0, 0.0, 2.5];
        for p in Prescription::ALL {
            let a = density(&s, p, &pts, 0.4).unwrap();
            let b = mixture_density(&m, &pts, 0.4, p).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() <= 1e-15 * x.abs().max(1e-300), "{p}");
            }
        }
    }
}
