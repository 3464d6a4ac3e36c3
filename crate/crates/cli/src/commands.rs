use std::f64::consts::{PI, SQRT_2};
use std::fs;

use gpr_strip::forward::{synthesize_traces, Discretization, SourcePulse};
use gpr_strip::inversion::{invert_profile, score_estimates, StripOptions};
use gpr_strip::io::{
    estimates_from_records, fmt_f64, read_profile, read_report, read_trace, write_bound_rows, write_report,
    write_staircase, write_trace, BoundRow,
};
use gpr_strip::spectral::choose_omega2;
use gpr_strip::verify::{check_theorem1, BoundStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{CompareArgs, Failure, InvertArgs, SimulateArgs, VerifyArgs};

type Outcome = std::result::Result<(), Failure>;

pub fn simulate(a: &SimulateArgs) -> Outcome {
    let profile = read_profile(&a.profile)?;
    let pulse = match a.delay {
        Some(delay) => SourcePulse::ricker_with_delay(a.fc, delay, a.z0)?,
        None => SourcePulse::ricker(a.fc, a.z0)?,
    };
    let n = if a.paper_scale { 1 << 24 } else { a.samples };
    let disc = Discretization { cells_per_layer: a.cells_per_layer, max_cell_m: Some(a.max_cell) };
    eprintln!(
        "grid: n = {n}, dt = {:e} s, domega = {:e} rad/s, nyquist = {:e} rad/s",
        a.dt,
        2.0 * PI / (n as f64 * a.dt),
        PI / a.dt
    );
    let trace = synthesize_traces(&profile, &pulse, n, a.dt, &disc)?;
    fs::create_dir_all(&a.out).map_err(gpr_strip::Error::from)?;
    let path = a.out.join("traceE.csv");
    write_trace(&path, &trace, Some(&pulse))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub fn invert(a: &InvertArgs) -> Outcome {
    let (trace, _) = read_trace(&a.trace)?;
    let opts = StripOptions { omega2_ratio: a.omega2_ratio, threshold_ratio: a.threshold, ..StripOptions::with_mu(a.mu) };
    // reject a bad ratio before any work
    choose_omega2(1.0, a.omega2_ratio)?;
    let report = invert_profile(&trace, a.max_layers, &opts)?;
    fs::create_dir_all(&a.out).map_err(gpr_strip::Error::from)?;
    write_report(&a.out.join("report.json"), &report)?;
    write_staircase(&a.out.join("staircase.csv"), &report)?;
    for e in &report.estimates {
        eprintln!(
            "layer {}: z_top = {:.3} m, eps = {:.5}, sigma = {:.3e} S/m, thickness = {}{}",
            e.layer,
            e.z_top,
            e.eps_hat,
            e.sigma_hat,
            e.thickness_hat.map_or("-".to_string(), |d| format!("{d:.3} m")),
            if e.flags.is_empty() { String::new() } else { format!(" {:?}", e.flags) }
        );
    }
    Ok(())
}

pub fn verify(a: &VerifyArgs) -> Outcome {
    let profile = read_profile(&a.profile)?;
    let disc = Discretization::default();
    let omega1 = a.omega1.unwrap_or(2.0 * PI * a.fc);
    let omega = choose_omega2(omega1, a.omega2_ratio)?;
    let report = check_theorem1(&profile, omega, a.delta, &disc)?;
    let json = serde_json::to_string_pretty(&report).map_err(gpr_strip::Error::from)? + "\n";
    match &a.out {
        Some(path) => fs::write(path, json).map_err(gpr_strip::Error::from)?,
        None => print!("{json}"),
    }
    let mut violated = report.status == BoundStatus::Violated;

    if let Some(path) = &a.sweep {
        let mut cases: Vec<(f64, f64, f64)> = Vec::new();
        for f in [0.5, 1.0, 1.5, 2.0] {
            for ratio in [-1.0, -0.9, -0.6, 1.0 - SQRT_2] {
                for delta in [0.05, 0.1, 0.2, SQRT_2 - 1.0] {
                    cases.push((f * omega1, ratio, delta));
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        for _ in 0..a.cases {
            let w1 = omega1 * (rng.gen_range(0.25_f64.ln()..4.0_f64.ln())).exp();
            cases.push((w1, rng.gen_range(-1.0..=1.0 - SQRT_2), rng.gen_range(0.01..=SQRT_2 - 1.0)));
        }
        let mut rows = Vec::new();
        for (i, &(w1, ratio, delta)) in cases.iter().enumerate() {
            let r = check_theorem1(&profile, choose_omega2(w1, ratio)?, delta, &disc)?;
            violated |= r.status == BoundStatus::Violated;
            rows.extend(BoundRow::from_report(i, &r));
        }
        write_bound_rows(path, &rows)?;
        eprintln!("wrote {} rows for {} cases to {}", rows.len(), cases.len(), path.display());
    }
    eprintln!("status: {}", serde_json::to_string(&report.status).unwrap_or_default().trim_matches('"'));
    if violated {
        return Err(Failure::BoundViolated);
    }
    Ok(())
}

pub fn compare(a: &CompareArgs) -> Outcome {
    let profile = read_profile(&a.profile)?;
    let records = read_report(&a.report)?;
    let estimates = estimates_from_records(&records, a.mu)?;
    let errors = score_estimates(&estimates, &profile)?;
    let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.6e}"));
    println!("layer  matched  eps_rel        sigma_rel      thickness_rel  note");
    for e in &errors {
        let note = match (e.excluded, e.extra) {
            (true, _) => "excluded",
            (false, true) => "extra",
            _ => "",
        };
        println!(
            "{:<6} {:<8} {:<14.6e} {:<14} {:<14} {note}",
            e.layer,
            e.matched_layer.map_or("sub".to_string(), |m| (m + 1).to_string()),
            e.eps_rel,
            opt(e.sigma_rel),
            opt(e.thickness_rel)
        );
    }
    match errors.first() {
        Some(first) => println!("first-layer eps relative error: {:.6e}", first.eps_rel),
        None => println!("first-layer eps relative error: none (empty report)"),
    }
    if let Some(path) = &a.out {
        let mut w = csv::Writer::from_path(path).map_err(gpr_strip::Error::from)?;
        let row = |w: &mut csv::Writer<fs::File>, r: [String; 7]| w.write_record(r).map_err(gpr_strip::Error::from);
        row(&mut w, ["layer", "matched_layer", "eps_rel", "sigma_rel", "thickness_rel", "extra", "excluded"].map(String::from))?;
        for e in &errors {
            let cell = |x: Option<f64>| x.map_or(String::new(), fmt_f64);
            row(
                &mut w,
                [
                    e.layer.to_string(),
                    e.matched_layer.map_or(String::new(), |m| (m + 1).to_string()),
                    fmt_f64(e.eps_rel),
                    cell(e.sigma_rel),
                    cell(e.thickness_rel),
                    e.extra.to_string(),
                    e.excluded.to_string(),
                ],
            )?;
        }
        w.flush().map_err(gpr_strip::Error::from)?;
    }
    Ok(())
}
