//! Built-in invariant suite run by `locdens selftest`.

use std::fmt;

use crate::analysis::convexity_gap;
use crate::density::{region_probability, total_integral, Prescription, Region};
use crate::error::{Error, Result};
use crate::state::{energy_moment, inner_product, make_gaussian, mix, Dim, GridSpec, ModelParams, MomentumState};
use crate::transform::{check_derivatives, tilde_nw_identity_error, FieldKind};

use super::commands::num;

/// Knobs for exercising the suite itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelftestOptions {
    /// Multiplies every fixture's measure weights after normalization.
    /// Anything but 1 is a deliberately broken build.
    pub measure_scale: f64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self { measure_scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    /// `measured <= tolerance`, or `>=` for lower-bound checks.
    pub lower_bound: bool,
    pub passed: bool,
    pub error: Option<String>,
}

impl Check {
    fn upper(name: &'static str, measured: Result<f64>, tolerance: f64) -> Self {
        Self::from_result(name, measured, tolerance, false)
    }

    fn lower(name: &'static str, measured: Result<f64>, tolerance: f64) -> Self {
        Self::from_result(name, measured, tolerance, true)
    }

    fn from_result(name: &'static str, measured: Result<f64>, tolerance: f64, lower_bound: bool) -> Self {
        match measured {
            Ok(m) => {
                let passed = if lower_bound { m >= tolerance } else { m <= tolerance };
                Self { name, measured: m, tolerance, lower_bound, passed, error: None }
            }
            Err(e) => Self {
                name,
                measured: f64::NAN,
                tolerance,
                lower_bound,
                passed: false,
                error: Some(e.to_string()),
            },
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let key = if self.lower_bound { "minimum" } else { "tolerance" };
        write!(f, "{status} {} measured={} {key}={}", self.name, num(self.measured), num(self.tolerance))?;
        if let Some(e) = &self.error {
            write!(f, " error=\"{e}\"")?;
        }
        Ok(())
    }
}

fn gaussian(mass: f64, dim: Dim, p0: f64, sigma: f64, opts: &SelftestOptions) -> Result<MomentumState> {
    let s = make_gaussian(ModelParams::new(mass, dim)?, p0, sigma, GridSpec::default())?;
    Ok(if opts.measure_scale == 1.0 { s } else { s.with_measure_scaled(opts.measure_scale) })
}

fn normalization(s: Result<MomentumState>, p: Prescription, t: f64) -> Result<f64> {
    Ok((total_integral(&s?, p, t)? - 1.0).abs())
}

/// Runs every check; never panics on a failing check.
pub fn run_selftest(opts: &SelftestOptions) -> Vec<Check> {
    let g1 = || gaussian(1.0, Dim::One, 1.0, 0.25, opts);
    let g3 = || gaussian(1.0, Dim::Three, 0.5, 0.5, opts);
    let mut checks = vec![
        Check::upper("normalization_povm_d1", normalization(g1(), Prescription::Povm, 1.0), 1e-6),
        Check::upper("normalization_naive_d1", normalization(g1(), Prescription::NaiveNormalized, 1.0), 1e-6),
        Check::upper("normalization_nw_d1", normalization(g1(), Prescription::NewtonWigner, 1.0), 1e-6),
        Check::upper("normalization_povm_d3", normalization(g3(), Prescription::Povm, 0.5), 1e-6),
        Check::upper("normalization_nw_d3", normalization(g3(), Prescription::NewtonWigner, 0.5), 1e-6),
    ];

    checks.push(Check::upper(
        "energy_consistency_d1",
        (|| {
            let s = g1()?;
            let h = energy_moment(&s, 1)?;
            Ok((total_integral(&s, Prescription::EnergyDensityRaw, 0.0)? - h).abs() / h)
        })(),
        1e-6,
    ));

    let pair = || -> Result<_> {
        let a = gaussian(1.0, Dim::One, 0.0, 0.25, opts)?;
        let b = gaussian(1.0, Dim::One, 2.0, 0.25, opts)?;
        Ok((a.clone(), b.clone(), mix(vec![(0.5, a), (0.5, b)])?))
    };
    checks.push(Check::upper(
        "povm_linearity",
        (|| {
            let (a, b, m) = pair()?;
            let region = Region::interval(-1.0, 1.0)?;
            let mixed = region_probability(&m, &region, 0.0, Prescription::Povm)?;
            let combined = 0.5 * region_probability(&a, &region, 0.0, Prescription::Povm)?
                + 0.5 * region_probability(&b, &region, 0.0, Prescription::Povm)?;
            Ok((mixed - combined).abs())
        })(),
        1e-12,
    ));
    checks.push(Check::lower(
        "naive_nonlinearity",
        (|| {
            let (_, _, m) = pair()?;
            convexity_gap(&m, 0.0, Prescription::NaiveNormalized)
        })(),
        1e-3,
    ));

    checks.push(Check::upper(
        "tilde_nw_identity",
        (|| {
            let s = g1()?;
            Ok(s.energies().iter().map(|&e| tilde_nw_identity_error(e)).fold(0.0, f64::max))
        })(),
        1e-14,
    ));

    checks.push(Check::upper(
        "hermitian_symmetry",
        (|| {
            let a = make_gaussian(ModelParams::new(1.0, Dim::One)?, 0.0, 0.25, GridSpec::default().fixed(6.0))?;
            let b = make_gaussian(ModelParams::new(1.0, Dim::One)?, 0.5, 0.25, GridSpec::default().fixed(6.0))?;
            Ok((inner_product(&a, &b)? - inner_product(&b, &a)?.conj()).norm())
        })(),
        1e-14,
    ));

    for (name, dim, kind) in [
        ("derivatives_plain_d1", Dim::One, FieldKind::Plain),
        ("derivatives_tilde_d1", Dim::One, FieldKind::Tilde),
        ("derivatives_nw_d1", Dim::One, FieldKind::NewtonWigner),
        ("derivatives_tilde_d3", Dim::Three, FieldKind::Tilde),
    ] {
        checks.push(Check::upper(
            name,
            (|| {
                let s = match dim {
                    Dim::One => g1()?,
                    Dim::Three => g3()?,
                };
                let mut worst: f64 = 0.0;
                for x in [0.3, 1.7] {
                    worst = worst.max(check_derivatives(&s, kind, x, 0.4, 1e-4)?.max_deviation());
                }
                Ok(worst)
            })(),
            1e-6,
        ));
    }

    checks.push(Check::upper(
        "massless_singular_weight_rejected",
        (|| match make_gaussian(ModelParams::new(0.0, Dim::One)?, 0.0, 0.25, GridSpec::default()) {
            Err(Error::SingularWeight { .. }) => Ok(0.0),
            Err(e) => Err(e),
            Ok(_) => Ok(1.0),
        })(),
        0.0,
    ));
    checks
}
