//! Discrete transforms of traces and their continuation to complex frequency.
//!
//! The continuous transform pair is
//!
//! ```text
//! Ê(ω) = (1/2π) ∫ e^{−iωt} E(t) dt,      E(t) = ∫ e^{iωt} Ê(ω) dω,
//! ```
//!
//! discretized on `t_n = t0 + n·dt` and `ω_j = j·Δω`, `Δω = 2π/(N·dt)`. Only
//! the nonnegative bins of a real trace are stored.
//!
//! Continuation to `ω = ω₁ + iω₂` with `ω₂ < 0` is the damped sum
//! `(dt/2π) Σ e^{−iω₁t_n} e^{ω₂t_n} E(t_n)`: the weight decays for `t > 0`,
//! which is what makes the continuation exist for causal records.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use realfft::RealFftPlanner;

use crate::error::{Error, Result};
use crate::forward::TimeTrace;
use crate::medium::ComplexFrequency;

/// Default `ω₂/ω₁`.
pub const DEFAULT_OMEGA2_RATIO: f64 = -0.9;

/// Default low-frequency exclusion for [`select_omega1`], as a fraction of the
/// Nyquist frequency.
pub const DEFAULT_CUTOFF_FRACTION: f64 = 0.05;

/// Damping weights below this are dropped from the continuation sum.
pub const WEIGHT_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    Field,
    Derivative,
}

/// Nonnegative-frequency bins of a transformed trace. Bin `j` is `ω₁ = j·Δω`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub domega: f64,
    /// Time of the first sample of the source trace; bins carry the phase
    /// `e^{−iω t0}`.
    pub t0: f64,
    pub depth: f64,
    pub values: Vec<Complex64>,
    pub kind: SpectrumKind,
}

impl Spectrum {
    pub fn new(domega: f64, t0: f64, depth: f64, values: Vec<Complex64>, kind: SpectrumKind) -> Self {
        Self {
            domega,
            t0,
            depth,
            values,
            kind,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.values.len()
    }

    pub fn omega(&self, bin: usize) -> f64 {
        bin as f64 * self.domega
    }

    /// Highest stored frequency.
    pub fn nyquist(&self) -> f64 {
        self.omega(self.n_bins().saturating_sub(1))
    }
}

fn check_len(n: usize) -> Result<()> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Format(format!("trace length {n} is not a power of two")));
    }
    Ok(())
}

fn rfft(samples: &[f64]) -> Vec<Complex64> {
    let n = samples.len();
    let fft = RealFftPlanner::<f64>::new().plan_fft_forward(n);
    let mut input = samples.to_vec();
    let mut output = fft.make_output_vec();
    fft.process(&mut input, &mut output).expect("buffer sizes come from the plan");
    output
}

fn irfft(mut bins: Vec<Complex64>, n: usize) -> Vec<f64> {
    let fft = RealFftPlanner::<f64>::new().plan_fft_inverse(n);
    let last = bins.len() - 1;
    bins[0].im = 0.0;
    bins[last].im = 0.0;
    let mut output = fft.make_output_vec();
    fft.process(&mut bins, &mut output).expect("buffer sizes come from the plan");
    output
}

/// Transform both channels of a trace: the DFT scaled by `dt/2π`, with the
/// absolute sample times `t0 + n·dt`.
pub fn forward_transform(trace: &TimeTrace) -> Result<(Spectrum, Spectrum)> {
    let n = trace.len();
    check_len(n)?;
    if trace.e_z.len() != n {
        return Err(Error::Format("E and E_z have different lengths".into()));
    }
    let domega = 2.0 * PI / (n as f64 * trace.dt);
    let scale = trace.dt / (2.0 * PI);
    let finish = |raw: Vec<Complex64>, kind| {
        let values = raw
            .into_iter()
            .enumerate()
            .map(|(j, x)| x * scale * Complex64::from_polar(1.0, -(j as f64) * domega * trace.t0))
            .collect();
        Spectrum::new(domega, trace.t0, trace.depth, values, kind)
    };
    Ok((
        finish(rfft(&trace.e), SpectrumKind::Field),
        finish(rfft(&trace.e_z), SpectrumKind::Derivative),
    ))
}

/// Rebuild real traces from nonnegative-frequency spectra (Hermitian
/// extension). Exact inverse of [`forward_transform`].
pub fn inverse_transform(spec_e: &Spectrum, spec_ez: &Spectrum, n_samples: usize, dt: f64) -> Result<TimeTrace> {
    check_len(n_samples)?;
    let n_bins = n_samples / 2 + 1;
    let domega = 2.0 * PI / (n_samples as f64 * dt);
    for s in [spec_e, spec_ez] {
        if s.n_bins() != n_bins {
            return Err(Error::Format(format!(
                "spectrum has {} bins, expected {n_bins} for {n_samples} samples",
                s.n_bins()
            )));
        }
        if (s.domega - domega).abs() > 1e-12 * domega {
            return Err(Error::Format(format!(
                "bin width {} does not match 2π/(n·dt) = {domega}",
                s.domega
            )));
        }
    }
    if spec_e.t0 != spec_ez.t0 {
        return Err(Error::Format("spectra refer to different time origins".into()));
    }
    let t0 = spec_e.t0;
    let prepare = |s: &Spectrum| {
        s.values
            .iter()
            .enumerate()
            .map(|(j, x)| x * domega * Complex64::from_polar(1.0, j as f64 * domega * t0))
            .collect::<Vec<_>>()
    };
    Ok(TimeTrace {
        dt,
        t0,
        e: irfft(prepare(spec_e), n_samples),
        e_z: irfft(prepare(spec_ez), n_samples),
        depth: spec_e.depth,
    })
}

/// The bin frequency above `cutoff` with the largest `|Ê|`; ties go to the
/// lower bin.
pub fn select_omega1(spectrum: &Spectrum, cutoff: f64) -> Result<ComplexFrequency> {
    let mut best: Option<(usize, f64)> = None;
    for (j, v) in spectrum.values.iter().enumerate().skip(1) {
        if spectrum.omega(j) < cutoff {
            continue;
        }
        let m = v.norm();
        if m > 0.0 && best.is_none_or(|(_, b)| m > b) {
            best = Some((j, m));
        }
    }
    let (j, _) = best.ok_or(Error::NoSignal)?;
    ComplexFrequency::real(spectrum.omega(j))
}

/// [`select_omega1`] with the default cutoff of 5% of the Nyquist frequency.
pub fn select_omega1_default(spectrum: &Spectrum) -> Result<ComplexFrequency> {
    select_omega1(spectrum, DEFAULT_CUTOFF_FRACTION * spectrum.nyquist())
}

/// `ω = ω₁ + i·ratio·ω₁` with `ratio ∈ [−1, 1 − √2]`.
pub fn choose_omega2(omega1: f64, ratio: f64) -> Result<ComplexFrequency> {
    if !(-1.0..=1.0 - SQRT_2).contains(&ratio) {
        return Err(Error::Precondition(format!(
            "omega2 ratio {ratio} is outside [-1, 1 - sqrt(2)]"
        )));
    }
    ComplexFrequency::new(omega1, ratio * omega1)
}

fn pairwise_sum(terms: &[Complex64]) -> Complex64 {
    if terms.len() <= 32 {
        terms.iter().sum()
    } else {
        let (a, b) = terms.split_at(terms.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Damped transform of one channel at a complex frequency.
///
/// When `ω₁` is a DFT frequency of the record (to rounding), the oscillating
/// phase is reduced with integer arithmetic, as FFT twiddles are; otherwise
/// `ω₁t` is evaluated directly.
pub fn continue_channel(samples: &[f64], t0: f64, dt: f64, omega: ComplexFrequency) -> Result<Complex64> {
    let len = samples.len();
    let cycles = omega.omega1 * dt * len as f64 / (2.0 * PI);
    let grid_bin = cycles.round();
    let on_grid = len > 0 && grid_bin < 1e15 && (cycles - grid_bin).abs() <= 64.0 * f64::EPSILON * cycles.max(1.0);
    let phase = |n: usize| {
        if on_grid {
            let turns = (grid_bin as u128 * n as u128 % len as u128) as f64 / len as f64;
            -2.0 * PI * turns
        } else {
            -omega.omega1 * n as f64 * dt
        }
    };

    let mut terms = Vec::with_capacity(len);
    let mut any_signal = false;
    let mut retained_signal = false;
    for (n, &x) in samples.iter().enumerate() {
        if x != 0.0 {
            any_signal = true;
        }
        let t = t0 + n as f64 * dt;
        let weight = (omega.omega2 * t).exp();
        if weight < WEIGHT_FLOOR {
            // weights only shrink from here on
            if omega.omega2 < 0.0 {
                break;
            }
            continue;
        }
        if x != 0.0 {
            retained_signal = true;
        }
        terms.push(Complex64::from_polar(weight * x, phase(n)));
    }
    if any_signal && !retained_signal {
        return Err(Error::ContinuationUnstable(format!(
            "damping at {omega} removes every nonzero sample"
        )));
    }
    Ok(pairwise_sum(&terms) * Complex64::from_polar(dt / (2.0 * PI), -omega.omega1 * t0))
}

/// Analytic continuation of `Ê` and `Ê_z` to `omega`.
pub fn continue_to_complex(trace: &TimeTrace, omega: ComplexFrequency) -> Result<(Complex64, Complex64)> {
    Ok((
        continue_channel(&trace.e, trace.t0, trace.dt, omega)?,
        continue_channel(&trace.e_z, trace.t0, trace.dt, omega)?,
    ))
}

/// Move the time origin `dt_shift` later: samples are shifted by
/// `round(dt_shift/dt)` (dropping the head, zero-padding the tail) and the
/// fractional remainder goes into `t0`. Negative shifts pad the head instead.
pub fn rescale_time(trace: &TimeTrace, dt_shift: f64) -> Result<TimeTrace> {
    let len = trace.len();
    let steps = (dt_shift / trace.dt).round();
    let shift = steps.abs() as usize;
    if shift >= len {
        return Err(Error::EmptyTrace { shift, len });
    }
    let move_channel = |x: &[f64]| {
        let mut out = vec![0.0; len];
        if steps >= 0.0 {
            out[..len - shift].copy_from_slice(&x[shift..]);
        } else {
            out[shift..].copy_from_slice(&x[..len - shift]);
        }
        out
    };
    Ok(TimeTrace {
        dt: trace.dt,
        t0: trace.t0 + steps * trace.dt - dt_shift,
        e: move_channel(&trace.e),
        e_z: move_channel(&trace.e_z),
        depth: trace.depth,
    })
}

/// Magnitude of the analytic signal, via the Hilbert transform computed on
/// the one-sided spectrum.
pub fn envelope(samples: &[f64]) -> Result<Vec<f64>> {
    let n = samples.len();
    check_len(n)?;
    let spec = rfft(samples);
    let last = spec.len() - 1;
    let hilbert_bins: Vec<Complex64> = spec
        .iter()
        .enumerate()
        .map(|(j, x)| {
            if j == 0 || j == last {
                Complex64::new(0.0, 0.0)
            } else {
                x * Complex64::new(0.0, -1.0) / n as f64
            }
        })
        .collect();
    let h = irfft(hilbert_bins, n);
    Ok(samples.iter().zip(&h).map(|(x, y)| x.hypot(*y)).collect())
}
