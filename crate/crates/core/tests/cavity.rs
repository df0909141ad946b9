mod common;

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

use common::{c, propagate_piecewise};
use fluxlambda::cavity::*;
use fluxlambda::{Pulse, C64, DEFAULT_DT};
use nalgebra::{DMatrix, DVector};

fn fig4(omega: f64, g: f64, tau_p: f64, space: Space) -> CavitySystemParams {
    CavitySystemParams {
        g,
        delta_prime: 0.0,
        pulse_a: Pulse::gaussian(c(omega, 0.0), 23.0, tau_p).unwrap(),
        pulse_b: Pulse::gaussian(c(omega, 0.0), 17.0, tau_p).unwrap(),
        t_start: 0.0,
        t_end: 40.0,
        space,
    }
}

fn fig4_ref() -> CavitySystemParams {
    fig4(-2.0, 3.0, 6.5, Space::Closed5)
}

fn fig5(theta: f64, xi: f64) -> CavitySystemParams {
    let (a, b) = fractional_stirap_pulses(-2.0, 38.5, 25.0, 10.0, theta, xi).unwrap();
    CavitySystemParams {
        g: 3.0,
        delta_prime: 0.0,
        pulse_a: a,
        pulse_b: b,
        t_start: 0.0,
        t_end: 60.0,
        space: Space::Closed5,
    }
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Five-state Hamiltonian written out from the coupling rules, labels
/// ordered as 010, e10, 111, 1e0, 100.
#[rustfmt::skip]
fn oracle_h5(a: C64, b: C64, g: f64, dp: f64) -> DMatrix<C64> {
    let z = c(0.0, 0.0);
    let h = c(g / 2.0, 0.0);
    let d = c(dp, 0.0);
    DMatrix::from_row_slice(
        5,
        5,
        &[
            z, a / 2.0, z, z, z,
            a.conj() / 2.0, d, h, z, z,
            z, h, z, h, z,
            z, z, h, d, b.conj() / 2.0,
            z, z, z, b / 2.0, z,
        ],
    )
}

#[test]
fn fig4_transfer() {
    let p = fig4_ref();
    let r = run_transfer(&p, c(1.0, 0.0), c(0.0, 0.0), DEFAULT_DT).unwrap();
    assert!(r.final_population("100").unwrap() >= 0.99);
    assert!(r.fidelity_target >= 0.99);
    assert!(r.warnings.is_empty(), "{:?}", r.warnings);
    let tm = transfer_timing(&p, &r.trajectory, "100").unwrap();
    let d = tm.duration.unwrap();
    assert!((10.0..=30.0).contains(&d), "{d}");
    let pe: Vec<f64> = (0..r.trajectory.len())
        .map(|k| {
            let v = r.trajectory.populations(k);
            v[1] + v[3]
        })
        .collect();
    assert!(max_of(&pe) <= 0.05);
    assert!(r.trajectory.norm_drift() <= 1e-9);
}

#[test]
fn closed_space_matches_piecewise_exponential() {
    let p = fig4_ref();
    let r = run_transfer(&p, c(1.0, 0.0), c(0.0, 0.0), DEFAULT_DT).unwrap();
    let mut psi = DVector::zeros(5);
    psi[0] = c(1.0, 0.0);
    let exact = propagate_piecewise(
        |t| {
            let (a, b) = p.couplings(t);
            oracle_h5(a, b, p.g, p.delta_prime)
        },
        &psi,
        p.t_start,
        p.t_end,
        8000,
    );
    let f = r.trajectory.final_state();
    for (i, l) in CLOSED5_LABELS.iter().enumerate() {
        assert!((f.amplitude(l).unwrap() - exact[i]).norm() <= 1e-5, "{l}");
    }
}

#[test]
fn library_hamiltonian_matches_coupling_rules() {
    let (a, b) = (c(0.3, -1.1), c(-0.8, 0.4));
    let m = closed5_matrix(a, b, 2.5, 0.7);
    assert!((m - oracle_h5(a, b, 2.5, 0.7)).norm() <= 1e-15);
}

#[test]
fn qubit_b_in_one_is_stationary() {
    let r = run_transfer(&fig4_ref(), c(0.0, 0.0), c(1.0, 0.0), DEFAULT_DT).unwrap();
    assert!(r.final_population("110").unwrap() >= 1.0 - 1e-12);
    assert!(r.fidelity_target >= 1.0 - 1e-12);
}

#[test]
fn superposition_is_transferred_coherently() {
    let h = c(FRAC_1_SQRT_2, 0.0);
    let r = run_transfer(&fig4_ref(), h, h, DEFAULT_DT).unwrap();
    assert!(r.fidelity_target >= 0.95);
    assert!(r.overlap.arg().abs() < 0.05);
}

#[test]
fn full_space_agrees_with_closed_space() {
    let closed = run_transfer(&fig4_ref(), c(1.0, 0.0), c(0.0, 0.0), DEFAULT_DT).unwrap();
    for n_max in [1, 2] {
        let full = run_transfer(
            &fig4(-2.0, 3.0, 6.5, Space::Full { n_max }),
            c(1.0, 0.0),
            c(0.0, 0.0),
            DEFAULT_DT,
        )
        .unwrap();
        assert!(full.leakage_max <= 1e-10);
        for ((l, a), (_, b)) in closed.final_populations.iter().zip(&full.final_populations) {
            assert!((a - b).abs() <= 1e-8, "{l}");
        }
    }
}

#[test]
fn robust_to_ten_percent_changes() {
    let base = run_transfer(&fig4_ref(), c(1.0, 0.0), c(0.0, 0.0), DEFAULT_DT)
        .unwrap()
        .final_population("100")
        .unwrap();
    for s in [0.9, 1.1] {
        for p in [
            fig4(-2.0 * s, 3.0, 6.5, Space::Closed5),
            fig4(-2.0, 3.0 * s, 6.5, Space::Closed5),
            fig4(-2.0, 3.0, 6.5 * s, Space::Closed5),
        ] {
            let v = run_transfer(&p, c(1.0, 0.0), c(0.0, 0.0), DEFAULT_DT)
                .unwrap()
                .final_population("100")
                .unwrap();
            assert!((v - base).abs() <= 0.05, "{v} vs {base}");
        }
    }
}

#[test]
fn stronger_cavity_suppresses_photon_state() {
    let peak = |g| {
        let r = run_transfer(
            &fig4(-2.0, g, 6.5, Space::Closed5),
            c(1.0, 0.0),
            c(0.0, 0.0),
            DEFAULT_DT,
        )
        .unwrap();
        max_of(&r.trajectory.population_series("111").unwrap())
    };
    assert!(peak(6.0) < peak(3.0));
}

#[test]
fn dark_state_is_null_along_the_path() {
    let p = fig4_ref();
    let mut t = p.t_start;
    while t <= p.t_end {
        let (a, b) = p.couplings(t);
        let h = oracle_h5(a, b, p.g, p.delta_prime);
        let d = dark_states(a, b, p.g).unwrap();
        let norm = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((&h * d.psi_i.amplitudes()).norm() <= 1e-12 * norm.max(1.0));
        t += 0.5;
    }
}

#[test]
fn dark_overlap_stays_high_inside_the_pulses() {
    let p = fig4_ref();
    let r = run_transfer(&p, c(1.0, 0.0), c(0.0, 0.0), DEFAULT_DT).unwrap();
    for (t, o) in r.trajectory.times().iter().zip(&r.dark_overlap) {
        if (10.0..=30.0).contains(t) {
            assert!(*o >= 0.95, "t={t} overlap {o}");
        }
    }
}

#[test]
fn adiabaticity_scales_inversely_with_duration() {
    let p = fig4_ref();
    let s = 2.0;
    let slow = CavitySystemParams {
        pulse_a: p.pulse_a.time_scaled(s),
        pulse_b: p.pulse_b.time_scaled(s),
        t_start: p.t_start * s,
        t_end: p.t_end * s,
        ..p.clone()
    };
    for t in [12.0, 17.0, 20.0, 23.0, 28.0] {
        let a = adiabaticity_metric(&p, t).unwrap().value;
        let b = adiabaticity_metric(&slow, s * t).unwrap().value;
        assert!((b - a / s).abs() <= 1e-6 * a.max(1.0), "t={t}");
    }
}

#[test]
fn fig5_maximal_entanglement() {
    let r = run_fractional_stirap(&fig5(FRAC_PI_4, 0.0), FRAC_PI_4, 0.0, DEFAULT_DT).unwrap();
    assert!(r.fidelity_target >= 0.99);
    assert!(r.concurrence.unwrap() >= 0.98);
    assert!(r.warnings.is_empty(), "{:?}", r.warnings);
}

#[test]
fn fig5_limiting_angles() {
    let r0 = run_fractional_stirap(&fig5(0.0, 0.0), 0.0, 0.0, DEFAULT_DT).unwrap();
    assert!(r0.fidelity_target >= 0.99);
    assert!(r0.concurrence.unwrap() <= 0.05);
    let r1 = run_fractional_stirap(&fig5(FRAC_PI_2, 0.0), FRAC_PI_2, 0.0, DEFAULT_DT).unwrap();
    assert!(r1.final_population("010").unwrap() >= 0.99);
}

#[test]
fn entangled_target_survives_post_selection() {
    let t = entangled_target(0.4, 1.1);
    let (two, p) = post_select_vacuum(&t).unwrap();
    assert!((p - 1.0).abs() < 1e-15);
    assert!((concurrence(&two).unwrap() - (0.8f64).sin()).abs() < 1e-14);
}

#[test]
fn qubit_flip_maps_between_target_forms() {
    let x = nalgebra::Matrix2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0));
    let flipped = apply_qubit_a(&x, &entangled_target(0.7, -0.3)).unwrap();
    let f = fluxlambda::fidelity(&flipped, &flipped_entangled_target(0.7, -0.3)).unwrap();
    assert!((f - 1.0).abs() < 1e-14);
}

#[test]
fn eigensystem_identities_hold() {
    for (a, b, g, dp) in [
        (1.0, 0.5, 3.0, 0.0),
        (2.0, 2.0, 3.0, 0.0),
        (0.7, 1.3, 2.0, 0.5),
    ] {
        let rep = analytic_eigensystem(c(a, 0.0), c(b, 0.0), g, dp).unwrap();
        assert!(rep.numerical_residual <= 1e-10);
        assert!(rep.trace_defect <= 1e-10);
        assert!(rep
            .vector_residuals_at_numerical
            .iter()
            .all(|r| *r <= 1e-10));
    }
}

#[test]
fn bad_inputs_are_rejected() {
    let mut p = fig4_ref();
    p.t_end = p.t_start;
    assert!(run_transfer(&p, c(1.0, 0.0), c(0.0, 0.0), DEFAULT_DT).is_err());
    assert!(run_transfer(&fig4_ref(), c(1.0, 0.0), c(1.0, 0.0), DEFAULT_DT).is_err());
    assert!(dark_states(c(0.0, 0.0), c(0.0, 0.0), 3.0).is_err());
    let rect = CavitySystemParams {
        pulse_a: Pulse::rectangular(c(1.0, 0.0), 20.0, 10.0).unwrap(),
        ..fig4_ref()
    };
    assert!(adiabaticity_metric(&rect, 20.0).is_err());
    let _ = DVector::<C64>::zeros(1);
}
