use tiltlab_core::experiments::*;
use tiltlab_core::maps::growth_coefficient;
use tiltlab_core::spaces::SampleDomain;
use tiltlab_core::{
    Error, FeasibleSet, GenericBifunctional, MapSpec, Matrix, NormSpec, OptimizeConfig,
    TiltedFunctional,
};

fn quarter(n: usize, norm: NormSpec) -> TiltedFunctional {
    TiltedFunctional::new(norm, FeasibleSet::full_space(n).unwrap(), MapSpec::scalar(n, 0.25)).unwrap()
}

fn growth(f: &TiltedFunctional) -> tiltlab_core::GrowthEstimate {
    growth_coefficient(f.map(), f.norm(), f.set(), &[1e2, 1e3, 1e4], 32, 0).unwrap()
}

#[test]
fn linear_contraction_is_minimized_at_the_origin() {
    // J(x, y) ≥ (1 − 2θ)‖x‖ − ‖y‖ = J(0, y) + (1 − 2θ)‖x‖
    let f = quarter(2, NormSpec::linf(2));
    let ys = default_y_samples(&f, 5.0, 25, 1).unwrap();
    let rep = certify_uniqueness(&f, &ys, &growth(&f), &OptimizeConfig::default(), &CertifyOptions::default())
        .unwrap();
    assert_eq!(rep.verdict, UniquenessVerdict::UniqueOnSamples);
    for e in &rep.entries {
        assert_eq!(e.radius_source, RadiusSource::Coercivity);
        assert!(f.norm().eval(&e.result.best().point) <= 1e-5);
    }
}

#[test]
fn constant_map_is_minimized_at_its_value() {
    let c = vec![1.5, -0.5];
    let f = TiltedFunctional::new(NormSpec::l1(2), FeasibleSet::full_space(2).unwrap(), MapSpec::constant(c.clone()).unwrap())
        .unwrap();
    let ys = default_y_samples(&f, 5.0, 25, 2).unwrap();
    let rep = certify_uniqueness(&f, &ys, &growth(&f), &OptimizeConfig::default(), &CertifyOptions::default())
        .unwrap();
    assert_eq!(rep.verdict, UniquenessVerdict::UniqueOnSamples);
    for e in &rep.entries {
        assert!(f.norm().distance(&e.result.best().point, &c) <= 1e-5);
    }
}

#[test]
fn planted_double_well_is_flagged() {
    let f = quarter(2, NormSpec::l2(2));
    let plant = PlantedObjective::DoubleWell { axis: 0, offset: 1.0 };
    let options = CertifyOptions { plant: Some(plant.clone()), ..Default::default() };
    let rep = certify_uniqueness(&f, &[vec![0.0, 0.0]], &growth(&f), &OptimizeConfig::default(), &options).unwrap();
    assert_eq!(rep.verdict, UniquenessVerdict::MultipleFound);
    let clusters = &rep.entries[0].result.clusters;
    assert_eq!(clusters.len(), 2);
    for m in plant.minimizers(2) {
        assert!(clusters.iter().any(|c| f.norm().distance(&c.point, &m) <= 1e-5));
    }
}

#[test]
fn unmet_growth_caps_the_verdict() {
    let f = quarter(1, NormSpec::l2(1));
    let wide = TiltedFunctional::new(NormSpec::l2(1), FeasibleSet::full_space(1).unwrap(), MapSpec::scalar(1, 0.75)).unwrap();
    let g = growth(&wide);
    assert!(!g.satisfied);
    let rep = certify_uniqueness(&f, &[vec![1.0]], &g, &OptimizeConfig::default(), &CertifyOptions::default()).unwrap();
    assert!(rep.capped);
    assert_eq!(rep.verdict, UniquenessVerdict::Inconclusive);
    assert_eq!(rep.entries[0].radius_source, RadiusSource::Fallback);
}

#[test]
fn fixed_point_refuses_unmet_growth() {
    let f = TiltedFunctional::new(NormSpec::l2(1), FeasibleSet::full_space(1).unwrap(), MapSpec::scalar(1, 0.75)).unwrap();
    let err = find_fixed_point(&f, &growth(&f), &OptimizeConfig::default(), &FixedPointOptions::default(), 0)
        .unwrap_err();
    assert!(matches!(err, Error::GrowthBoundUnmet { .. }));
}

#[test]
fn minimax_equality_for_quarter_map() {
    let j = GenericBifunctional::from_tilted(quarter(1, NormSpec::l2(1)));
    let g = minimax_gap(&j, 5.0, 41, &MinimaxOptions::default()).unwrap();
    assert!(g.gap.abs() <= 1e-4 && g.upper.abs() <= 1e-4);
    assert!(g.lower <= g.upper);
    assert!(g.witnesses_coincide);
}

#[test]
fn minimax_on_rotated_contraction() {
    let f = TiltedFunctional::new(
        NormSpec::linf(2),
        FeasibleSet::full_space(2).unwrap(),
        MapSpec::affine(Matrix::rotation_scale(0.3, 1.1), vec![0.5, -0.3]).unwrap(),
    )
    .unwrap();
    let j = GenericBifunctional::from_tilted(f);
    let g = minimax_gap(&j, 4.0, 15, &MinimaxOptions::default()).unwrap();
    assert!(g.gap.abs() <= 1e-4 && g.upper.abs() <= 1e-4, "{g:?}");
}

#[test]
fn saddle_check_on_quarter_map() {
    let f = quarter(2, NormSpec::l2(2));
    let set = f.set().clone();
    let norm = f.norm().clone();
    let j = GenericBifunctional::from_tilted(f);
    let domain = SampleDomain::new(&set, &norm, 5.0, 1).unwrap();
    let ys = domain.random_points(1000, 3).unwrap();
    let xs = domain.random_points(1000, 4).unwrap();
    let check = verify_saddle(&j, &[0.0, 0.0], &ys, &xs, 1e-6, 1e-3).unwrap();
    assert!(check.passed(), "{check:?}");
    // a point that is not the fixed point fails the upper inequality
    let off = verify_saddle(&j, &[1.0, 0.0], &ys, &xs, 1e-6, 1e-3).unwrap();
    assert!(!off.upper_pass);
}

#[test]
fn saddle_check_requires_zero_diagonal() {
    let set = FeasibleSet::full_space(1).unwrap();
    let j = GenericBifunctional::new("shifted", set, NormSpec::l2(1), false, true, |x, y| Ok(x[0] - y[0] + 1.0)).unwrap();
    let err = verify_saddle(&j, &[0.0], &[vec![0.0]], &[vec![1.0]], 1e-6, 1e-3).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)));
}

#[test]
fn planted_sweep_cell_yields_one_candidate() {
    let family = FamilyTemplate::ScalarAffine { dimension: 2, theta: ParamRange::List(vec![0.1, 0.25]), b: None };
    let config = OptimizeConfig { grid_resolution: 17, multistart: 8, random_starts: 2, ..Default::default() };
    let sweep = SweepConfig {
        y_per_axis: 3,
        plant: Some(PlantInjection {
            cell: 1,
            y_index: 4,
            objective: PlantedObjective::DoubleWell { axis: 1, offset: 2.0 },
        }),
        ..Default::default()
    };
    let norms = [NormSpec::l2(2)];
    let rep = search_counterexample(&family, &norms, &FeasibleSet::full_space(2).unwrap(), &sweep, &config).unwrap();
    assert_eq!(rep.cells.len(), 2);
    assert_eq!(rep.candidates.len(), 1);
    let c = &rep.candidates[0];
    assert!(c.planted && c.verification.survived);
    assert_eq!((c.cell, c.y_index), (1, 4));
    assert!((c.separation - 4.0).abs() < 1e-4);
}

#[test]
fn sweep_skips_cells_that_fail_the_growth_screen() {
    let family = FamilyTemplate::RotationScale {
        theta: ParamRange::List(vec![0.2, 0.8]),
        angle: ParamRange::Linear { start: 0.0, stop: 1.0, count: 2 },
        b: None,
    };
    let config = OptimizeConfig { grid_resolution: 9, multistart: 4, random_starts: 0, ..Default::default() };
    let sweep = SweepConfig { y_per_axis: 2, ..Default::default() };
    let rep = search_counterexample(&family, &[NormSpec::l2(2)], &FeasibleSet::full_space(2).unwrap(), &sweep, &config)
        .unwrap();
    assert_eq!(rep.skipped_growth, 2);
    assert!(rep.candidates.is_empty());
}

#[test]
fn certification_is_deterministic_across_thread_counts() {
    let f = TiltedFunctional::new(
        NormSpec::l1(2),
        FeasibleSet::orthant(vec![0.0, 0.0]).unwrap(),
        MapSpec::affine(Matrix::from_rows(&[vec![0.1, 0.2], vec![0.05, 0.1]]).unwrap(), vec![1.0, 0.5]).unwrap(),
    )
    .unwrap();
    let ys = default_y_samples(&f, 4.0, 8, 9).unwrap();
    let g = growth(&f);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
            certify_uniqueness(&f, &ys, &g, &OptimizeConfig::default(), &CertifyOptions::default()).unwrap()
        })
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(format!("{one:?}"), format!("{four:?}"));
}
