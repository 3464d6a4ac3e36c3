//! Simulate an 84 m four-layer medium, strip it, and print per-layer errors.
//!
//! `cargo run --release --example layered_scenario [sigma]`

use gpr_strip::forward::{synthesize_traces, Discretization, SourcePulse};
use gpr_strip::inversion::{invert_profile, StripOptions};
use gpr_strip::medium::{LayerSpec, MediumProfile};

fn main() -> gpr_strip::Result<()> {
    let sigma: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1e-8);
    // (thickness, eps at top, eps slope)
    let layers = [(21.0, 4.0, 0.03), (20.0, 6.5, 0.02), (23.0, 5.5, 0.03), (20.0, 8.0, 0.0)];
    let specs: Vec<LayerSpec> = layers.iter().map(|&(d, e, s)| LayerSpec::linear(d, e, s, sigma, 0.0)).collect();
    let profile = MediumProfile::new(1.0, 9.0, &specs)?;

    let pulse = SourcePulse::ricker(2e8, -0.5)?;
    let disc = Discretization { cells_per_layer: 64, max_cell_m: Some(0.02) };
    let trace = synthesize_traces(&profile, &pulse, 1 << 18, 3e-10, &disc)?;

    let mut report = invert_profile(&trace, 6, &StripOptions::default())?;
    report.score(&profile)?;
    let errors = report.per_layer_errors.as_ref().expect("scored above");
    println!("layer  z_top      eps_hat   eps_rel     thickness");
    for (e, err) in report.estimates.iter().zip(errors) {
        println!(
            "{:<6} {:<10.3} {:<9.4} {:<11.3e} {}",
            e.layer,
            e.z_top,
            e.eps_hat,
            err.eps_rel,
            e.thickness_hat.map_or("-".to_string(), |d| format!("{d:.3}"))
        );
    }
    Ok(())
}
