use fluxlambda::device::{
    classify_levels, flux_matrix_element, potential, potential_extrema, stationary_states,
    ExtremumKind, FluxGrid, SquidParams, Well,
};
use fluxlambda::Error;

fn reference_with_points(n: usize) -> SquidParams {
    let mut p = SquidParams::reference();
    p.grid.n_points = n;
    p
}

#[test]
fn reference_potential_is_a_double_well() {
    let p = SquidParams::reference();
    let ext = potential_extrema(&p, -1.0, 0.0, 20001);
    let kinds: Vec<ExtremumKind> = ext.iter().map(|e| e.kind).collect();
    assert_eq!(
        kinds,
        [
            ExtremumKind::Minimum,
            ExtremumKind::Maximum,
            ExtremumKind::Minimum
        ]
    );
    assert!(ext[1].energy > ext[0].energy && ext[1].energy > ext[2].energy);
    assert!(p.screening_parameter() > 1.0);
}

#[test]
fn lc_limit_has_harmonic_spacing() {
    let p = SquidParams::with_default_grid(100.0, 40.0, 0.0, -0.501);
    let w = p.plasma_frequency();
    assert!((w - 500.0).abs() < 1e-9);
    let spec = stationary_states(&p, 7).unwrap();
    for (n, e) in spec.energies.iter().enumerate().take(6) {
        let expect = w * (n as f64 + 0.5);
        assert!(
            (e - expect).abs() <= 1e-3 * expect,
            "n={n}: {e} vs {expect}"
        );
    }
    for pair in spec.energies.windows(2).take(5) {
        assert!((pair[1] - pair[0] - w).abs() <= 1e-3 * w);
    }
}

#[test]
fn parity_in_centered_lc_well() {
    let p = SquidParams::with_default_grid(100.0, 40.0, 0.0, 0.0);
    let spec = stationary_states(&p, 4).unwrap();
    for i in 0..4 {
        assert!(flux_matrix_element(&spec, i, i).unwrap().abs() < 1e-12);
    }
}

#[test]
fn reference_levels_and_couplings() {
    let spec = stationary_states(&SquidParams::reference(), 6).unwrap();
    let barrier = spec.barrier.expect("double well");
    assert!((spec.mean_flux[0] - barrier.flux) * (spec.mean_flux[1] - barrier.flux) < 0.0);
    assert_ne!(spec.well_assignments[0], spec.well_assignments[1]);

    let c = classify_levels(&spec).unwrap();
    assert_eq!((c.idx0, c.idx1, c.idx_e), (0, 1, 4));
    assert!(c.warnings.is_empty());
    assert_eq!(spec.well_assignments[4], Well::AboveBarrier);
    assert!(spec.energies[3] < barrier.energy && spec.energies[4] > barrier.energy);

    let el = |i, j| flux_matrix_element(&spec, i, j).unwrap();
    let d01 = el(0, 1).abs();
    assert!(el(0, 4).abs() > d01);
    assert!(el(1, 4).abs() > d01);
    for i in 0..6 {
        for j in 0..6 {
            assert!((el(i, j) - el(j, i)).abs() <= 1e-12);
        }
    }
}

#[test]
fn wavefunctions_are_orthonormal() {
    let spec = stationary_states(&SquidParams::reference(), 6).unwrap();
    for i in 0..6 {
        for j in 0..6 {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((spec.overlap(i, j) - expect).abs() <= 1e-8, "({i},{j})");
        }
    }
}

#[test]
fn grid_refinement_converges_at_second_order() {
    let e: Vec<f64> = [501, 1001, 2001]
        .iter()
        .map(|&n| {
            stationary_states(&reference_with_points(n), 1)
                .unwrap()
                .energies[0]
        })
        .collect();
    let d1 = e[1] - e[0];
    let d2 = e[2] - e[1];
    // the three-point stencil underestimates kinetic energy, so levels approach from below
    assert!(d1 > 0.0 && d2 > 0.0);
    let ratio = d1 / d2;
    assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
}

#[test]
fn symmetric_bias_reports_degenerate_wells() {
    let spec =
        stationary_states(&SquidParams::with_default_grid(100.0, 40.0, 3.95, -0.5), 6).unwrap();
    assert!((spec.mean_flux[0] + 0.5).abs() < 1e-6);
    assert!((spec.mean_flux[1] + 0.5).abs() < 1e-6);
    // one even, one odd about the bias point
    let n = spec.grid.n_points;
    let w0 = &spec.wavefunctions[0];
    let w1 = &spec.wavefunctions[1];
    for k in 0..n / 2 {
        assert!((w0[k] - w0[n - 1 - k]).abs() < 1e-6);
        assert!((w1[k] + w1[n - 1 - k]).abs() < 1e-6);
    }
    let c = classify_levels(&spec).unwrap();
    assert_eq!((c.idx0, c.idx1), (0, 1));
    assert!(c.warnings.iter().any(|w| w.contains("degenerate")));
}

#[test]
fn single_well_has_no_qubit_levels() {
    let p = SquidParams::with_default_grid(100.0, 40.0, 2.0, -0.501);
    assert!(p.screening_parameter() < 1.0);
    let spec = stationary_states(&p, 6).unwrap();
    assert!(matches!(classify_levels(&spec), Err(Error::NoDoubleWell)));
}

#[test]
fn narrow_grid_is_rejected() {
    let mut p = SquidParams::reference();
    p.grid = FluxGrid {
        phi_min: -0.6,
        phi_max: -0.4,
        n_points: 201,
    };
    assert!(matches!(
        stationary_states(&p, 3),
        Err(Error::BoundaryLeakage { .. })
    ));
}

#[test]
fn lc_potential_vanishes_at_bias() {
    let p = SquidParams::with_default_grid(100.0, 40.0, 0.0, 0.2);
    assert_eq!(potential(&p, 0.2), 0.0);
}
