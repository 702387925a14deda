use locdens::analysis::{
    fit_tail, front_speed, localization_bound_scan, narrow_energy_study, prescription_l1,
    radius_containing,
};
use locdens::density::{
    density, density_values, energy_density, mixture_density, naive_probability_density, povm_density,
    region_probability, source_values, total_integral, Prescription, Region, Source,
};
use locdens::state::{
    energy_moment, inner_product, make_gaussian, mix, Dim, GridSpec, ModelParams, MomentumGrid, MomentumState,
};
use locdens::transform::{check_derivatives, evaluate_field, tilde_nw_identity_error, FieldKind};
use locdens::Error;
use num_complex::Complex64;

fn params(mass: f64, dim: Dim) -> ModelParams {
    ModelParams::new(mass, dim).unwrap()
}

fn gaussian(p0: f64, sigma: f64) -> MomentumState {
    make_gaussian(params(1.0, Dim::One), p0, sigma, GridSpec::default()).unwrap()
}

#[test]
fn invalid_model_parameters_are_rejected() {
    assert!(ModelParams::new(-1.0, Dim::One).is_err());
    assert!(ModelParams::new(f64::NAN, Dim::Three).is_err());
    let p = params(1.0, Dim::One);
    for (p0, sigma) in [(0.0, 0.0), (0.0, -1.0), (f64::INFINITY, 1.0)] {
        assert!(matches!(make_gaussian(p, p0, sigma, GridSpec::default()), Err(Error::Config { .. })));
    }
}

#[test]
fn unsatisfiable_cutoff_names_the_bound() {
    let err = make_gaussian(params(1.0, Dim::One), 0.0, 1.0, GridSpec::default().fixed(3.0)).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("grid.cutoff") && msg.contains("1e-12"), "{msg}");
}

#[test]
fn too_coarse_momentum_panels_are_rejected() {
    let spec = GridSpec { panels: 1, ..GridSpec::default() }.fixed(40.0).with_reach(1.0);
    let err = make_gaussian(params(1.0, Dim::One), 0.0, 0.25, spec).unwrap_err();
    assert!(err.to_string().contains("grid.panels"), "{err}");
}

#[test]
fn massless_states_need_a_vanishing_amplitude_at_rest() {
    let massless = params(0.0, Dim::One);
    let err = make_gaussian(massless, 0.5, 0.25, GridSpec::default()).unwrap_err();
    assert!(matches!(err, Error::SingularWeight { .. }), "{err}");
    let s = make_gaussian(massless, 2.0, 0.25, GridSpec::default()).unwrap();
    assert!((s.norm_squared() - 1.0).abs() < 1e-12);
    assert!((total_integral(&s, Prescription::Povm, 1.0).unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn massless_energy_density_has_no_mass_term() {
    let s = make_gaussian(params(0.0, Dim::One), 2.0, 0.25, GridSpec::default()).unwrap();
    let xs = [-1.0, 0.0, 0.7, 3.0];
    let e = energy_density(&s, &xs, 0.4).unwrap();
    let f = evaluate_field(&s, FieldKind::Plain, &xs, 0.4).unwrap();
    for i in 0..xs.len() {
        let kinetic = f.grad[i].norm_sqr() + f.dt[i].norm_sqr();
        assert_eq!(e.values[i], kinetic);
    }
}

#[test]
fn inner_product_examples() {
    let spec = GridSpec::default().fixed(6.0);
    let p = params(1.0, Dim::One);
    let a = make_gaussian(p, 3.0, 0.25, spec).unwrap();
    let b = make_gaussian(p, -3.0, 0.25, spec).unwrap();
    assert!(inner_product(&a, &b).unwrap().norm() < 1e-10);
    assert!((inner_product(&a, &a).unwrap().re - 1.0).abs() < 1e-10);

    let other = make_gaussian(params(2.0, Dim::One), 3.0, 0.25, spec).unwrap();
    assert!(matches!(inner_product(&a, &other), Err(Error::Incompatible(_))));
    let auto = gaussian(0.0, 0.25);
    assert!(matches!(inner_product(&a, &auto), Err(Error::Incompatible(_))));
}

#[test]
fn energy_moments() {
    for (p0, sigma) in [(0.0, 0.25), (5.0, 1.0), (-1.0, 0.1)] {
        let s = gaussian(p0, sigma);
        assert!((energy_moment(&s, 0).unwrap() - 1.0).abs() < 1e-10);
        assert!(energy_moment(&s, 1).unwrap() >= 1.0);
    }
    let h = energy_moment(&gaussian(0.0, 0.25), 1).unwrap();
    assert!(h > 1.0 && h < 1.05);
}

#[test]
fn mixture_preconditions() {
    let a = gaussian(0.0, 0.25);
    let b = gaussian(2.0, 0.25);
    assert!(matches!(mix(vec![(0.7, a.clone()), (0.4, b.clone())]), Err(Error::Mixture(_))));
    assert!(matches!(mix(vec![]), Err(Error::Mixture(_))));
    assert!(mix(vec![(-0.5, a.clone()), (1.5, b.clone())]).is_err());
    let heavy = make_gaussian(params(2.0, Dim::One), 0.0, 0.25, GridSpec::default()).unwrap();
    assert!(mix(vec![(0.5, a), (0.5, heavy)]).is_err());
}

#[test]
fn singleton_mixture_matches_the_pure_state() {
    let s = gaussian(1.0, 0.25);
    let m = mix(vec![(1.0, s.clone())]).unwrap();
    let xs = [-2.0, 0.0, 1.5, 6.0];
    for p in Prescription::ALL {
        let a = density_values(&s, p, &xs, 1.0).unwrap();
        let b = mixture_density(&m, &xs, 1.0, p).unwrap().values;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-15 * x, "{p}: {x} vs {y}");
        }
    }
    let region = Region::interval(-1.0, 2.0).unwrap();
    for p in [Prescription::Povm, Prescription::NaiveNormalized] {
        let a = region_probability(&s, &region, 0.5, p).unwrap();
        let b = region_probability(&m, &region, 0.5, p).unwrap();
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn naive_forms_coincide_for_equal_energies_and_differ_otherwise() {
    let xs: Vec<f64> = (0..=200).map(|i| -10.0 + 0.1 * i as f64).collect();
    let gap = |m: &locdens::state::MixedState| {
        let mixed = source_values(Source::Mixed(m), Prescription::NaiveNormalized, &xs, 0.0).unwrap();
        let convex =
            locdens::density::convex_combination_values(m, Prescription::NaiveNormalized, &xs, 0.0).unwrap();
        mixed.iter().zip(&convex).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let equal = mix(vec![(0.5, gaussian(2.0, 0.25)), (0.5, gaussian(-2.0, 0.25))]).unwrap();
    assert!(gap(&equal) < 1e-10);
    let unequal = mix(vec![(0.5, gaussian(0.0, 0.25)), (0.5, gaussian(2.0, 0.25))]).unwrap();
    assert!(gap(&unequal) > 1e-3, "{}", gap(&unequal));
}

#[test]
fn naive_density_is_energy_density_over_mean_energy() {
    let s = gaussian(1.0, 0.25);
    let h = energy_moment(&s, 1).unwrap();
    let xs = [-3.0, 0.0, 0.25, 4.0];
    let e = energy_density(&s, &xs, 2.0).unwrap();
    let n = naive_probability_density(&s, &xs, 2.0).unwrap();
    for (a, b) in e.values.iter().zip(&n.values) {
        assert!((b * h / a - 1.0).abs() < 1e-14);
    }
}

#[test]
fn povm_profile_is_time_reversal_symmetric_for_even_states() {
    let s = gaussian(0.0, 0.25);
    let xs = [-4.0, -1.0, 0.5, 3.0];
    let mirrored: Vec<f64> = xs.iter().map(|x| -x).collect();
    let forward = povm_density(&s, &xs, 2.5).unwrap();
    let backward = povm_density(&s, &mirrored, -2.5).unwrap();
    for (a, b) in forward.values.iter().zip(&backward.values) {
        assert!((a - b).abs() <= 1e-14 * a.max(1e-3));
    }
}

#[test]
fn even_state_field_is_parity_symmetric() {
    let s = gaussian(0.0, 0.25);
    for kind in FieldKind::ALL {
        let f = evaluate_field(&s, kind, &[5.0, -5.0], 1.3).unwrap();
        assert!((f.value[0].norm() - f.value[1].norm()).abs() < 1e-10);
    }
    let f = evaluate_field(&s, FieldKind::Plain, &[0.0], 0.0).unwrap();
    assert!(f.value[0].re > 0.0 && f.value[0].im.abs() < 1e-16);
}

#[test]
fn weight_identity_at_sample_momenta() {
    for p in [0.1f64, 1.0, 10.0] {
        let e = 1f64.hypot(p);
        let tilde = FieldKind::Tilde.weight(e);
        let nw = FieldKind::NewtonWigner.weight(e);
        assert!((tilde * 2f64.sqrt() * e - nw).abs() <= 1e-14 * nw);
        assert!(tilde_nw_identity_error(e) <= 1e-14);
    }
}

#[test]
fn derivative_examples() {
    let s = gaussian(1.0, 0.25);
    let r = check_derivatives(&s, FieldKind::Plain, 0.5, 0.3, 1e-4).unwrap();
    assert!(r.max_deviation() < 1e-6, "{r:?}");
    let r = check_derivatives(&s, FieldKind::Plain, 0.5, 0.0, 1e-4).unwrap();
    assert!(r.dt_deviation < 1e-6, "{r:?}");
    let even = gaussian(0.0, 0.25);
    let left = check_derivatives(&even, FieldKind::Tilde, -1.2, 0.0, 1e-3).unwrap();
    let right = check_derivatives(&even, FieldKind::Tilde, 1.2, 0.0, 1e-3).unwrap();
    assert!((left.grad_deviation - right.grad_deviation).abs() < 1e-9);
    assert!(check_derivatives(&s, FieldKind::Plain, 0.0, 0.0, 1e-1).is_err());
    assert!(check_derivatives(&s, FieldKind::Plain, 0.0, 0.0, 1e-8).is_err());
}

#[test]
fn radial_field_is_regular_at_the_origin() {
    let s = make_gaussian(params(1.0, Dim::Three), 0.0, 0.5, GridSpec::default()).unwrap();
    let rs = [0.0, 1e-9, 1e-6, 5e-5, 2e-4];
    for kind in FieldKind::ALL {
        let f = evaluate_field(&s, kind, &rs, 0.7).unwrap();
        for i in 1..rs.len() {
            assert!((f.value[i] - f.value[0]).norm() <= 1e-6 * f.value[0].norm(), "{kind:?} r={}", rs[i]);
        }
        assert!(f.grad[0].norm() < 1e-14);
        let r = check_derivatives(&s, kind, 1e-5, 0.7, 1e-4).unwrap();
        assert!(r.dt_deviation < 1e-6);
    }
    assert!(evaluate_field(&s, FieldKind::Plain, &[-1.0], 0.0).is_err());
}

#[test]
fn field_inputs_are_validated() {
    let s = gaussian(0.0, 0.25);
    assert!(evaluate_field(&s, FieldKind::Plain, &[f64::NAN], 0.0).is_err());
    assert!(evaluate_field(&s, FieldKind::Plain, &[0.0], f64::INFINITY).is_err());
    let grid = MomentumGrid::new(-4.0, 4.0, GridSpec::default()).unwrap();
    let raw = MomentumState::from_fn(params(1.0, Dim::One), grid, |p| Complex64::new((-p * p).exp(), 0.0), false)
        .unwrap();
    assert!(matches!(evaluate_field(&raw, FieldKind::Plain, &[0.0], 0.0), Err(Error::Precondition(_))));
}

#[test]
fn region_validation_and_whole_space() {
    assert!(Region::interval(1.0, 1.0).is_err());
    assert!(Region::interval(2.0, 1.0).is_err());
    assert!(Region::shell(-1.0, 1.0).is_err());
    assert!(Region::new(Dim::One, vec![(0.0, 2.0), (1.0, 3.0)]).is_err());
    assert!(Region::new(Dim::One, vec![]).is_err());

    let s = gaussian(1.0, 0.25);
    for p in [Prescription::Povm, Prescription::NaiveNormalized, Prescription::NewtonWigner] {
        let whole = region_probability(&s, &Region::whole_space(Dim::One), 3.0, p).unwrap();
        assert!((whole - 1.0).abs() < 1e-6, "{p}: {whole}");
    }
    let whole = Region::whole_space(Dim::One);
    assert!(matches!(
        region_probability(&s, &whole, 0.0, Prescription::EnergyDensityRaw),
        Err(Error::Precondition(_))
    ));
    assert!(region_probability(&s, &Region::shell(0.0, 1.0).unwrap(), 0.0, Prescription::Povm).is_err());
    assert!("bogus".parse::<Prescription>().is_err());
    assert_eq!("nw".parse::<Prescription>().unwrap(), Prescription::NewtonWigner);
}

#[test]
fn radial_region_probabilities_add_up() {
    let s = make_gaussian(params(1.0, Dim::Three), 0.0, 0.5, GridSpec::default()).unwrap();
    let inner = region_probability(&s, &Region::shell(0.0, 2.0).unwrap(), 0.0, Prescription::Povm).unwrap();
    let outer =
        region_probability(&s, &Region::shell(2.0, f64::INFINITY).unwrap(), 0.0, Prescription::Povm).unwrap();
    assert!((inner + outer - 1.0).abs() < 1e-10);
}

#[test]
fn narrow_state_prescriptions_are_close() {
    let s = gaussian(1.0, 0.01);
    let naive = prescription_l1(&s, Prescription::NaiveNormalized, Prescription::Povm, 0.0).unwrap();
    let nw = prescription_l1(&s, Prescription::NewtonWigner, Prescription::Povm, 0.0).unwrap();
    assert!(naive < 1e-3, "{naive}");
    assert!(nw < 1e-3, "{nw}");
    assert!(prescription_l1(&s, Prescription::Povm, Prescription::Povm, 0.0).unwrap() < 1e-10);
}

#[test]
fn tail_fit_preconditions() {
    let s = gaussian(0.0, 0.25);
    let xs: Vec<f64> = (0..=400).map(|i| 4.0 + 0.01 * i as f64).collect();
    let fit = fit_tail(&povm_density(&s, &xs, 0.0).unwrap(), (4.0, 8.0)).unwrap();
    assert!(fit.gamma_hat <= 1.1 && fit.within_mass_bound(1.0), "{fit:?}");
    let naive = fit_tail(&density(&s, Prescription::NaiveNormalized, &xs, 0.0).unwrap(), (4.0, 8.0)).unwrap();
    assert!(naive.gamma_hat <= 1.1);
    assert!(fit_tail(&povm_density(&s, &xs, 0.0).unwrap(), (8.0, 4.0)).is_err());
    assert!(fit_tail(&povm_density(&s, &xs, 0.0).unwrap(), (4.0, 4.05)).is_err());
}

#[test]
fn front_speed_preconditions_and_quantile_order() {
    let s = gaussian(0.0, 0.25);
    assert!(front_speed(&s, Prescription::Povm, 0.6, &[0.0, 1.0]).is_err());
    assert!(front_speed(&s, Prescription::Povm, 0.1, &[1.0, 2.0]).is_err());
    assert!(front_speed(&s, Prescription::Povm, 0.1, &[0.0, 2.0, 1.0]).is_err());
    assert!(front_speed(&s, Prescription::EnergyDensityRaw, 0.1, &[0.0, 1.0]).is_err());
    let loose = front_speed(&s, Prescription::Povm, 0.1, &[0.0, 1.0, 2.0]).unwrap();
    let tight = front_speed(&s, Prescription::Povm, 0.01, &[0.0, 1.0, 2.0]).unwrap();
    for (a, b) in loose.front.radii.iter().zip(&tight.front.radii) {
        assert!(b >= a);
    }
    let median = radius_containing(&s, Prescription::Povm, 0.0, 0.5).unwrap();
    let p = region_probability(&s, &Region::interval(-median, median).unwrap(), 0.0, Prescription::Povm).unwrap();
    assert!((p - 0.5).abs() < 1e-9);
}

#[test]
fn narrow_study_requires_sorted_family() {
    let fam = vec![gaussian(5.0, 0.25), gaussian(5.0, 1.0)];
    assert!(matches!(narrow_energy_study(&fam, 0.0), Err(Error::Precondition(_))));
}

#[test]
fn wide_packets_are_far_from_the_bound() {
    let rows = localization_bound_scan(&[gaussian(0.0, 0.05), gaussian(0.0, 0.1)], 0.9).unwrap();
    assert!(rows[0].mean_energy < rows[1].mean_energy);
    assert!(rows[0].width > rows[1].width);
    assert!(rows[0].product > rows[1].product);
}

#[test]
fn radial_bound_scan_uses_ball_volume() {
    let s = make_gaussian(params(1.0, Dim::Three), 0.0, 1.0, GridSpec::default()).unwrap();
    let row = localization_bound_scan(std::slice::from_ref(&s), 0.9).unwrap()[0];
    let r = radius_containing(&s, Prescription::Povm, 0.0, 0.9).unwrap();
    let volume = 4.0 / 3.0 * std::f64::consts::PI * r.powi(3);
    assert!((row.width - volume.cbrt()).abs() < 1e-12);
    assert!(row.product > 1.0);
}
