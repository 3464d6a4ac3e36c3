mod common;

use std::f64::consts::PI;

use common::{rel, rk4_surface_q, transfer_matrix, Ramps, Slabs};
use gpr_strip::forward::{
    solve_bvp, surface_impedance, synthesize_traces, Discretization, SourcePulse,
};
use gpr_strip::inversion::detect_impulses;
use gpr_strip::medium::{light_speed, ComplexFrequency, LayerSpec, MediumProfile};
use num_complex::Complex64;

const FC: f64 = 2e8;

fn pulse() -> SourcePulse {
    SourcePulse::ricker(FC, -0.5).unwrap()
}

#[test]
fn single_interface_matches_fresnel_composition() {
    let slabs = Slabs { thickness: vec![1.3], eps: vec![4.0], sigma: vec![0.0], eps_sub: 9.0, mu: 1.0 };
    let profile = slabs.profile();
    for f in [0.6, 1.0, 1.4] {
        let omega = ComplexFrequency::real(2.0 * PI * FC * f).unwrap();
        let w = omega.as_complex();
        let c = light_speed();
        let k1 = -w * 2.0 / c;
        let k2 = -w * 3.0 / c;
        let r = (k1 - k2) / (k1 + k2);
        let i = Complex64::i();
        let d = 1.3;
        // e^{ik₁z} + r' e^{−ik₁z} in the layer, matched to e^{ik₂z} at z = d
        let rp = r * (2.0 * i * k1 * d).exp();
        let q_closed = i * k1 * (1.0 - rp) / (1.0 + rp);
        let q = surface_impedance(&profile, omega, &Discretization::default()).unwrap();
        assert!(rel(q, q_closed) < 1e-10, "f = {f}: {q} vs {q_closed}");

        let sol = solve_bvp(&profile, omega, &pulse(), &Discretization::default()).unwrap();
        let oracle = transfer_matrix(&slabs, w, FC, pulse().delay, pulse().z0);
        assert!(rel(sol.surface().0, oracle[0].0) < 1e-8);
    }
}

#[test]
fn field_and_sweep_are_consistent() {
    let profile = MediumProfile::new(
        1.0,
        6.0,
        &[LayerSpec::linear(0.7, 3.0, 1.5, 1e-3, 0.0), LayerSpec::constant(0.4, 8.0, 1e-4)],
    )
    .unwrap();
    let omega = ComplexFrequency::new(2.0 * PI * FC, -0.9 * 2.0 * PI * FC).unwrap();
    let sol = solve_bvp(&profile, omega, &pulse(), &Discretization::default()).unwrap();
    for ((e, ez), q) in sol.e.iter().zip(&sol.e_z).zip(&sol.q) {
        assert!(rel(ez / e, *q) < 1e-8);
    }
}

#[test]
fn fine_sweep_agrees_with_shooting() {
    let ramps = Ramps {
        thickness: vec![0.8, 0.5],
        eps_top: vec![2.0, 7.0],
        eps_slope: vec![3.0, -2.0],
        sigma_top: vec![0.0, 2e-3],
        sigma_slope: vec![1e-4, 0.0],
        eps_sub: 5.0,
        mu: 1.0,
    };
    let disc = Discretization { cells_per_layer: 64, max_cell_m: Some(2e-4) };
    for ratio in [0.0, -0.9] {
        let omega = ComplexFrequency::new(2.0 * PI * FC, ratio * 2.0 * PI * FC).unwrap();
        let q = surface_impedance(&ramps.profile(), omega, &disc).unwrap();
        let q_ode = rk4_surface_q(&ramps, omega.as_complex(), 4000);
        assert!(rel(q, q_ode) < 1e-6, "ratio {ratio}: {q} vs {q_ode}");
    }
}

#[test]
fn refinement_converges_for_linear_layers() {
    let profile = MediumProfile::new(1.0, 4.0, &[LayerSpec::linear(1.0, 2.0, 4.0, 0.0, 0.0)]).unwrap();
    let omega = ComplexFrequency::new(2.0 * PI * FC, -0.5 * 2.0 * PI * FC).unwrap();
    let at = |cells| surface_impedance(&profile, omega, &Discretization::uniform(cells)).unwrap();
    let reference = at(8192);
    let errs: Vec<f64> = [32, 64, 128].iter().map(|&n| rel(at(n), reference)).collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    // second order in the cell size
    assert!(errs[1] / errs[2] > 3.0, "{errs:?}");
}

#[test]
fn vacuum_trace_is_one_direct_pulse() {
    let profile = MediumProfile::half_space(1.0, 1.0).unwrap();
    let p = pulse();
    let trace = synthesize_traces(&profile, &p, 1 << 12, 3e-10, &Discretization::default()).unwrap();
    let arrivals = detect_impulses(&trace, 0.05, 2.0 / FC).unwrap();
    assert_eq!(arrivals.len(), 1, "{arrivals:?}");
    let expected = p.z0.abs() / light_speed() + p.delay;
    assert!((arrivals[0] - expected).abs() <= 2.0 * trace.dt, "{} vs {expected}", arrivals[0]);
}

#[test]
fn second_impulse_after_two_way_time() {
    let d = 3.0;
    let eps: f64 = 4.0;
    let profile = MediumProfile::new(1.0, 9.0, &[LayerSpec::constant(d, eps, 0.0)]).unwrap();
    let trace = synthesize_traces(&profile, &pulse(), 1 << 12, 3e-10, &Discretization::default()).unwrap();
    let arrivals = detect_impulses(&trace, 0.05, 2.0 / FC).unwrap();
    assert!(arrivals.len() >= 2, "{arrivals:?}");
    let two_way = 2.0 * d * eps.sqrt() / light_speed();
    assert!((arrivals[1] - arrivals[0] - two_way).abs() <= 2.0 * trace.dt, "{arrivals:?} vs {two_way}");
}

#[test]
fn surface_trace_is_causal() {
    let profile = MediumProfile::new(1.0, 9.0, &[LayerSpec::constant(2.0, 4.0, 1e-4)]).unwrap();
    let p = pulse();
    let trace = synthesize_traces(&profile, &p, 1 << 12, 3e-10, &Discretization::default()).unwrap();
    let peak = trace.e.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    // the source wavelet is negligible before a third of its delay
    let quiet_until = p.z0.abs() / light_speed() + p.delay / 3.0;
    for n in 0..trace.len() {
        if trace.time(n) < quiet_until {
            assert!(trace.e[n].abs() <= 1e-8 * peak, "t = {}: {}", trace.time(n), trace.e[n]);
        }
    }
}

#[test]
fn impedance_stays_lossy_through_a_stack() {
    let profile = MediumProfile::new(
        1.0,
        12.0,
        &[
            LayerSpec::linear(1.0, 3.0, 2.0, 1e-2, -5e-3),
            LayerSpec::constant(0.3, 15.0, 0.0),
            LayerSpec::linear(2.0, 6.0, -1.0, 0.0, 1e-3),
        ],
    )
    .unwrap();
    for ratio in [-0.1, -0.5, -0.9, -1.0] {
        let omega = ComplexFrequency::new(2.0 * PI * FC, ratio * 2.0 * PI * FC).unwrap();
        let sol = solve_bvp(&profile, omega, &pulse(), &Discretization::default()).unwrap();
        assert!(sol.q.iter().all(|q| q.im <= 1e-9), "ratio {ratio}");
    }
}
