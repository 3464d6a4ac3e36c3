//! Layer stripping.
//!
//! Each strip reads the traces at the top of the current layer, continues
//! them to a complex frequency `ω = ω₁ + iω₂` where reflections from below
//! are exponentially damped, reads the local wavenumber off the impedance
//! `k ≈ −iÊ_z/Ê`, and turns it into `(ε, σ)`. The layer thickness comes from
//! the two-way time between the first two impulses. The traces are then
//! carried to the layer bottom with the recovered constant coefficients and
//! the time origin is moved to the first arrival there.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{propagate_slab_field, TimeTrace, ENERGY_FLOOR};
use crate::medium::{kappa_bound, light_speed, wavenumber, ComplexFrequency, MediumProfile, MU0};
use crate::spectral::{
    choose_omega2, continue_to_complex, envelope, forward_transform, inverse_transform, rescale_time,
    select_omega1, Spectrum, DEFAULT_CUTOFF_FRACTION, DEFAULT_OMEGA2_RATIO,
};

/// Smallest `|Ê|` accepted as a divisor.
pub const DIVISION_FLOOR: f64 = 1e-280;

/// Negative σ̂ down to this value is treated as rounding noise.
pub const SIGMA_CLIP: f64 = 1e-6;

/// Accepted range of ε̂; outside it stripping stops.
pub const EPS_RANGE: (f64, f64) = (1.0, 100.0);

/// Stripping stops when the remaining trace energy drops below this fraction
/// of the surface energy.
pub const ENERGY_STOP: f64 = 1e-6;

/// Samples kept ahead of the first arrival after each time shift.
pub const GUARD_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateFlag {
    /// σ̂ was slightly negative and set to 0.
    SigmaClipped,
    /// σ̂ was clearly negative; the estimate is unreliable.
    SigmaNegative,
    /// ε̂ left [`EPS_RANGE`]; the estimate is unreliable and stripping stopped.
    EpsOutOfRange,
    /// Only one impulse was found: the layer is the last one resolved.
    Terminal,
    /// A second impulse may be merged into the first (thin layer).
    NoSeparation,
}

impl EstimateFlag {
    pub fn marks_unreliable(self) -> bool {
        matches!(self, Self::SigmaNegative | Self::EpsOutOfRange)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerEstimate {
    /// 1-based layer number.
    pub layer: usize,
    /// Estimated depth of the layer top, m.
    pub z_top: f64,
    pub eps_hat: f64,
    /// S/m, after clipping.
    pub sigma_hat: f64,
    pub speed_hat: f64,
    /// `None` for the terminal layer.
    pub thickness_hat: Option<f64>,
    pub omega_used: ComplexFrequency,
    pub q_top: Complex64,
    pub kappa_bound_used: f64,
    pub flags: Vec<EstimateFlag>,
}

impl LayerEstimate {
    pub fn is_reliable(&self) -> bool {
        !self.flags.iter().any(|f| f.marks_unreliable())
    }

    pub fn is_terminal(&self) -> bool {
        self.flags.contains(&EstimateFlag::Terminal)
    }
}

/// Relative errors of one estimate against the true medium.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerError {
    pub layer: usize,
    /// Index of the true layer the estimate was matched to (`None`: substrate).
    pub matched_layer: Option<usize>,
    pub eps_rel: f64,
    /// `None` when the true σ vanishes.
    pub sigma_rel: Option<f64>,
    pub thickness_rel: Option<f64>,
    /// Another estimate was already matched to the same true layer.
    pub extra: bool,
    /// The estimate carries an unreliable flag and is left out of summaries.
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReconstructionReport {
    pub estimates: Vec<LayerEstimate>,
    pub true_profile: Option<MediumProfile>,
    pub per_layer_errors: Option<Vec<LayerError>>,
}

impl ReconstructionReport {
    /// Score the estimates against `profile`. Each estimate is matched to the
    /// true layer containing the middle of its estimated extent.
    pub fn score(&mut self, profile: &MediumProfile) -> Result<()> {
        self.per_layer_errors = Some(score_estimates(&self.estimates, profile)?);
        self.true_profile = Some(profile.clone());
        Ok(())
    }

    /// Relative ε error of the first layer, if scored.
    pub fn first_layer_eps_error(&self) -> Option<f64> {
        self.per_layer_errors.as_ref()?.first().map(|e| e.eps_rel)
    }

    /// Estimated depths of the layer bottoms.
    pub fn interface_depths(&self) -> Vec<f64> {
        self.estimates
            .iter()
            .filter_map(|e| e.thickness_hat.map(|d| e.z_top + d))
            .collect()
    }
}

pub fn score_estimates(estimates: &[LayerEstimate], profile: &MediumProfile) -> Result<Vec<LayerError>> {
    let mut seen = vec![false; profile.layers().len() + 1];
    estimates
        .iter()
        .map(|est| {
            let probe = est.z_top + est.thickness_hat.unwrap_or(0.0) / 2.0;
            let idx = profile.sample(probe.max(0.0))?.layer_index;
            let extra = std::mem::replace(&mut seen[idx], true);
            let (eps_true, sigma_true, thickness_true, matched) = match profile.layers().get(idx) {
                Some(l) => (l.eps_top, l.sigma_top, Some(l.thickness()), Some(idx)),
                None => (profile.eps_substrate(), 0.0, None, None),
            };
            Ok(LayerError {
                layer: est.layer,
                matched_layer: matched,
                eps_rel: (est.eps_hat - eps_true).abs() / eps_true,
                sigma_rel: (sigma_true > 0.0).then(|| (est.sigma_hat - sigma_true).abs() / sigma_true),
                thickness_rel: match (est.thickness_hat, thickness_true) {
                    (Some(d), Some(t)) => Some((d - t).abs() / t),
                    _ => None,
                },
                extra,
                excluded: !est.is_reliable(),
            })
        })
        .collect()
}

/// `k = −iÊ_z/Ê`.
pub fn estimate_k_top(e_hat: Complex64, ez_hat: Complex64) -> Result<Complex64> {
    if !(e_hat.norm() > DIVISION_FLOOR) {
        return Err(Error::DivisionDegenerate(e_hat.norm()));
    }
    Ok(-Complex64::i() * ez_hat / e_hat)
}

/// Invert `k² = μεω²/c² − iμ₀μσω` for `(ε, σ)`.
pub fn recover_eps_sigma(k_squared: Complex64, omega: ComplexFrequency, mu: f64) -> Result<(f64, f64)> {
    let (w1, w2) = (omega.omega1, omega.omega2);
    if !(w1 > 0.0) {
        return Err(Error::Precondition(format!("omega1 must be positive, got {w1}")));
    }
    if !(mu > 0.0) {
        return Err(Error::Precondition(format!("mu must be positive, got {mu}")));
    }
    let c = light_speed();
    let wn2 = omega.norm_sqr();
    let eps = c * c / (mu * wn2) * (k_squared.re + w2 / w1 * k_squared.im);
    let sigma = if w2 == 0.0 {
        -k_squared.im / (MU0 * mu * w1)
    } else {
        w2 / (MU0 * mu * wn2) * (2.0 * k_squared.re + (w2 / w1 - w1 / w2) * k_squared.im)
    };
    Ok((eps, sigma))
}

/// Arrival times found by [`detect_impulses_detailed`].
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseDetection {
    /// Ascending peak times of the envelope, s.
    pub arrivals: Vec<f64>,
    /// Local maxima above threshold that were merged into a stronger
    /// neighbour.
    pub merged: Vec<f64>,
}

/// Envelope peaks above `threshold_ratio` of the global maximum, with maxima
/// closer than `min_separation` merged into the strongest one.
pub fn detect_impulses(trace: &TimeTrace, threshold_ratio: f64, min_separation: f64) -> Result<Vec<f64>> {
    Ok(detect_impulses_detailed(trace, threshold_ratio, min_separation)?.arrivals)
}

pub fn detect_impulses_detailed(trace: &TimeTrace, threshold_ratio: f64, min_separation: f64) -> Result<ImpulseDetection> {
    if !(threshold_ratio > 0.0 && threshold_ratio < 1.0) {
        return Err(Error::Precondition(format!(
            "threshold ratio must lie in (0, 1), got {threshold_ratio}"
        )));
    }
    let env = envelope(&trace.e)?;
    let top = env.iter().cloned().fold(0.0, f64::max);
    if !(top > 0.0 && top.is_finite()) {
        return Err(Error::NoArrival);
    }
    let (kept, merged) = envelope_peaks(&env, threshold_ratio * top, min_separation / trace.dt);
    if kept.is_empty() {
        return Err(Error::NoArrival);
    }
    Ok(ImpulseDetection {
        arrivals: kept.into_iter().map(|i| refine_peak(&env, i, trace)).collect(),
        merged: merged.into_iter().map(|i| refine_peak(&env, i, trace)).collect(),
    })
}

/// Local maxima of `env` at or above `level`, strongest first; a peak survives
/// if no stronger survivor lies within `reach` samples. Both lists ascend.
fn envelope_peaks(env: &[f64], level: f64, reach: f64) -> (Vec<usize>, Vec<usize>) {
    let mut peaks: Vec<(usize, f64)> = (1..env.len().saturating_sub(1))
        .filter(|&i| env[i] >= level && env[i] > env[i - 1] && env[i] >= env[i + 1])
        .map(|i| (i, env[i]))
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut kept: Vec<usize> = Vec::new();
    let mut merged = Vec::new();
    for (i, _) in peaks {
        if kept.iter().any(|&k| (k as f64 - i as f64).abs() < reach) {
            merged.push(i);
        } else {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    merged.sort_unstable();
    (kept, merged)
}

fn refine_peak(env: &[f64], i: usize, trace: &TimeTrace) -> f64 {
    let (a, b, c) = (env[i - 1], env[i], env[i + 1]);
    let den = a - 2.0 * b + c;
    let offset = if den < 0.0 { 0.5 * (a - c) / den } else { 0.0 };
    trace.time(i) + offset.clamp(-0.5, 0.5) * trace.dt
}

/// Thickness from the two-way time between the first two arrivals; `None`
/// when there is only one arrival (terminal layer).
pub fn thickness_from_arrivals(arrivals: &[f64], speed: f64) -> Result<Option<f64>> {
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(Error::Precondition(format!("speed must be positive, got {speed}")));
    }
    match arrivals {
        [] => Err(Error::NoArrival),
        [_] => Ok(None),
        [a, b, ..] => Ok(Some(speed * (b - a) / 2.0)),
    }
}

/// Tunables of the stripping loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripOptions {
    pub mu: f64,
    pub omega2_ratio: f64,
    /// Impulse detection threshold as a fraction of the envelope maximum.
    pub threshold_ratio: f64,
    /// Low-frequency exclusion for the choice of `ω₁`, fraction of Nyquist.
    pub cutoff_fraction: f64,
    pub guard_samples: usize,
}

impl Default for StripOptions {
    fn default() -> Self {
        Self {
            mu: 1.0,
            omega2_ratio: DEFAULT_OMEGA2_RATIO,
            threshold_ratio: 0.05,
            cutoff_fraction: DEFAULT_CUTOFF_FRACTION,
            guard_samples: GUARD_SAMPLES,
        }
    }
}

impl StripOptions {
    pub fn with_mu(mu: f64) -> Self {
        Self { mu, ..Self::default() }
    }
}

/// Result of one strip: the estimate and, unless stripping has to stop, the
/// traces at the top of the next layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Strip {
    pub estimate: LayerEstimate,
    pub next: Option<TimeTrace>,
}

/// Wavenumber error bound for a constant layer of thickness `d` recovered at
/// `omega`: `δ = e^{−C d/2}` with `C` the Condition-B decay rate, capped at
/// `√2 − 1`.
pub fn constant_layer_kappa_bound(eps: f64, mu: f64, omega: ComplexFrequency, d: f64) -> f64 {
    let decay = 4.0 / light_speed() * (mu * eps * omega.omega1 * omega.omega2.abs() / (SQRT_2 + 1.0)).sqrt();
    let delta = (-decay * d / 2.0).exp().clamp(f64::MIN_POSITIVE, SQRT_2 - 1.0);
    kappa_bound(delta).unwrap_or(f64::INFINITY)
}

/// One pass of the stripping algorithm on traces at depth `trace.depth`.
/// `layer` numbers the estimate.
pub fn strip_layer(trace: &TimeTrace, layer: usize, opts: &StripOptions) -> Result<Strip> {
    if trace.e.len() != trace.e_z.len() {
        return Err(Error::Format("E and E_z traces are not synchronized".into()));
    }
    let (spec_e, spec_ez) = forward_transform(trace)?;
    let omega1 = select_omega1(&spec_e, opts.cutoff_fraction * spec_e.nyquist())?;
    let omega = choose_omega2(omega1.omega1, opts.omega2_ratio)?;
    let (e_hat, ez_hat) = continue_to_complex(trace, omega)?;
    let k = estimate_k_top(e_hat, ez_hat)?;
    let (eps, sigma_raw) = recover_eps_sigma(k * k, omega, opts.mu)?;

    let mut flags = Vec::new();
    let sigma = if sigma_raw >= 0.0 {
        sigma_raw
    } else if sigma_raw >= -SIGMA_CLIP {
        flags.push(EstimateFlag::SigmaClipped);
        0.0
    } else {
        flags.push(EstimateFlag::SigmaNegative);
        sigma_raw
    };
    let mut estimate = LayerEstimate {
        layer,
        z_top: trace.depth,
        eps_hat: eps,
        sigma_hat: sigma,
        speed_hat: f64::NAN,
        thickness_hat: None,
        omega_used: omega,
        q_top: Complex64::i() * k,
        kappa_bound_used: 0.0,
        flags,
    };
    if !(EPS_RANGE.0..=EPS_RANGE.1).contains(&eps) {
        estimate.flags.push(EstimateFlag::EpsOutOfRange);
        return Ok(Strip { estimate, next: None });
    }
    let speed = light_speed() / (opts.mu * eps).sqrt();
    estimate.speed_hat = speed;

    let f_est = omega.omega1 / (2.0 * PI);
    let sigma_prop = sigma.max(0.0);
    let detection = detect_impulses_detailed(trace, opts.threshold_ratio, 3.0 / f_est)?;
    let first = detection.arrivals[0];
    let echo = upgoing_arrival(trace, &spec_e, &spec_ez, (eps, sigma_prop, opts.mu), &detection.arrivals[1..], first)?;
    let Some(d) = echo.map(|t| thickness_from_arrivals(&[first, t], speed)).transpose()?.flatten() else {
        estimate.flags.push(EstimateFlag::Terminal);
        if !detection.merged.is_empty() {
            estimate.flags.push(EstimateFlag::NoSeparation);
        }
        return Ok(Strip { estimate, next: None });
    };
    estimate.thickness_hat = Some(d);
    estimate.kappa_bound_used = constant_layer_kappa_bound(eps, opts.mu, omega, d);

    let bottom_e = propagate_spectra(&spec_e, &spec_ez, eps, sigma_prop, opts.mu, d)?;
    let mut bottom = inverse_transform(&bottom_e.0, &bottom_e.1, trace.len(), trace.dt)?;
    bottom.depth = trace.depth + d;

    // t = 0 at the first arrival at the new top, guard samples ahead of it
    let arrival = first + d / speed;
    let guard = opts.guard_samples as f64 * trace.dt;
    let mut next = rescale_time(&bottom, arrival - bottom.t0 - guard)?;
    next.t0 -= bottom.t0 + guard;
    // causality: nothing reaches the new top more than half a pulse width
    // before the arrival; what is there is stripping noise the damping would
    // amplify
    let cut = -1.5 / f_est;
    for i in 0..next.len() {
        if next.time(i) >= cut {
            break;
        }
        next.e[i] = 0.0;
        next.e_z[i] = 0.0;
    }
    Ok(Strip {
        estimate,
        next: Some(next),
    })
}

/// First of `candidates` (ascending) at or after `not_before` where the
/// upgoing part of the field dominates. The split uses `k(ε̂, σ̂)` of the
/// layer, `U = (Ê − Ê_z/(ik))/2` and `D = (Ê + Ê_z/(ik))/2`, so multiples
/// travelling down from above are not taken for the echo of the layer bottom.
fn upgoing_arrival(
    trace: &TimeTrace,
    spec_e: &Spectrum,
    spec_ez: &Spectrum,
    (eps, sigma, mu): (f64, f64, f64),
    candidates: &[f64],
    not_before: f64,
) -> Result<Option<f64>> {
    let peak = spec_e.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let split: Vec<(Complex64, Complex64)> = (0..spec_e.n_bins())
        .into_par_iter()
        .map(|j| {
            let (e, ez) = (spec_e.values[j], spec_ez.values[j]);
            let zero = Complex64::new(0.0, 0.0);
            if j == 0 || e.norm_sqr() < ENERGY_FLOOR * peak {
                return Ok((zero, zero));
            }
            let k = wavenumber(eps, sigma, mu, ComplexFrequency::real(spec_e.omega(j))?)?;
            let r = ez / (Complex64::i() * k);
            Ok(((e + r) * 0.5, (e - r) * 0.5))
        })
        .collect::<Result<_>>()?;
    let (down, up): (Vec<_>, Vec<_>) = split.into_iter().unzip();
    let mk = |values| Spectrum::new(spec_e.domega, spec_e.t0, spec_e.depth, values, spec_e.kind);
    // the E slot carries the downgoing part, the E_z slot the upgoing part
    let parts = inverse_transform(&mk(down), &mk(up), trace.len(), trace.dt)?;
    let (env_down, env_up) = (envelope(&parts.e)?, envelope(&parts.e_z)?);
    Ok(candidates.iter().copied().filter(|&t| t >= not_before).find(|&t| {
        let i = (((t - parts.t0) / parts.dt).round().max(0.0) as usize).min(parts.len() - 1);
        env_up[i] >= env_down[i]
    }))
}

/// Carry every energetic bin across a constant slab `(ε, σ)` of thickness
/// `d`; other bins are zeroed.
fn propagate_spectra(
    spec_e: &Spectrum,
    spec_ez: &Spectrum,
    eps: f64,
    sigma: f64,
    mu: f64,
    d: f64,
) -> Result<(Spectrum, Spectrum)> {
    let peak = spec_e.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let out: Vec<(Complex64, Complex64)> = (0..spec_e.n_bins())
        .into_par_iter()
        .map(|j| {
            let (e, ez) = (spec_e.values[j], spec_ez.values[j]);
            let zero = Complex64::new(0.0, 0.0);
            if j == 0 || e.norm_sqr() < ENERGY_FLOOR * peak {
                return Ok((zero, zero));
            }
            let k = wavenumber(eps, sigma, mu, ComplexFrequency::real(spec_e.omega(j))?)?;
            Ok(propagate_slab_field(e, ez, k, d))
        })
        .collect::<Result<_>>()?;
    let (e, ez): (Vec<_>, Vec<_>) = out.into_iter().unzip();
    let mk = |s: &Spectrum, values| Spectrum::new(s.domega, s.t0, s.depth + d, values, s.kind);
    Ok((mk(spec_e, e), mk(spec_ez, ez)))
}

/// Strip layers until the terminal signal, `max_layers`, an ε̂ outside
/// [`EPS_RANGE`], or until the remaining energy falls below [`ENERGY_STOP`].
pub fn invert_profile(trace: &TimeTrace, max_layers: usize, opts: &StripOptions) -> Result<ReconstructionReport> {
    let mut report = ReconstructionReport::default();
    let start_energy = trace.energy();
    let mut current = trace.clone();
    for layer in 1..=max_layers {
        let strip = strip_layer(&current, layer, opts)?;
        report.estimates.push(strip.estimate);
        match strip.next {
            Some(next) if next.energy() >= ENERGY_STOP * start_energy => current = next,
            _ => break,
        }
    }
    Ok(report)
}
