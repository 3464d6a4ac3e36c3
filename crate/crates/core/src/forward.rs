//! Frequency-domain direct solver and synthetic surface traces.
//!
//! The field `Ê(z, ω)` obeys `Ê'' + k²(z) Ê = 0` on `[0, L]` with the Robin
//! conditions `Ê' + ik⁰Ê = h(ω) e^{−ik⁰z₀}` at the surface and
//! `Ê' − ik(L)Ê = 0` at the substrate. Instead of shooting (which grows like
//! `e^{Im k · L}` at complex frequencies) the solver sweeps the impedance
//! `q = Ê'/Ê` upward from the substrate through its Riccati equation
//! `q' + q² + k² = 0`, then rebuilds `Ê` downward from the surface value by
//! accumulating `log Ê`.
//!
//! Each layer is cut into constant-coefficient cells sampled at the cell
//! midpoint; every cell is propagated exactly, so piecewise-constant media are
//! solved exactly for any cell count.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::{light_speed, wavenumber, ComplexFrequency, Layer, MediumProfile, MU0};
use crate::spectral::{inverse_transform, Spectrum, SpectrumKind};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Relative source energy below which a frequency bin is not solved. The
/// amplitude floor is 1e-16: continuation weights early samples up to
/// `e^{|ω₂| t}` times more than the arrival, so spectral truncation noise must
/// sit at rounding level.
pub const ENERGY_FLOOR: f64 = 1e-32;

/// Largest fraction of pulse energy allowed above the Nyquist frequency.
pub const ALIASING_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseKind {
    Ricker,
}

/// Source wavelet `f(t)` emitted at height `z0 < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourcePulse {
    pub kind: PulseKind,
    /// Central frequency, Hz.
    pub central_frequency: f64,
    /// Time of the wavelet peak, s.
    pub delay: f64,
    /// Source height, m (negative: above the surface).
    pub z0: f64,
    /// Support `[0, T]`, s.
    pub duration: f64,
}

impl SourcePulse {
    /// Ricker wavelet with the default delay `3/f_c` and support `[0, 6/f_c]`.
    pub fn ricker(central_frequency: f64, z0: f64) -> Result<Self> {
        let delay = 3.0 / central_frequency;
        Self::ricker_with_delay(central_frequency, delay, z0)
    }

    pub fn ricker_with_delay(central_frequency: f64, delay: f64, z0: f64) -> Result<Self> {
        if !(central_frequency > 0.0 && central_frequency.is_finite()) {
            return Err(Error::Precondition(format!(
                "central frequency must be positive, got {central_frequency}"
            )));
        }
        if !(delay > 0.0 && delay.is_finite()) {
            return Err(Error::Precondition(format!("pulse delay must be positive, got {delay}")));
        }
        if !(z0 < 0.0 && z0.is_finite()) {
            return Err(Error::Precondition(format!("source height z0 must be negative, got {z0}")));
        }
        Ok(Self {
            kind: PulseKind::Ricker,
            central_frequency,
            delay,
            z0,
            duration: 2.0 * delay,
        })
    }

    /// Effective width of the main lobe, `3/f_c`.
    pub fn width(&self) -> f64 {
        3.0 / self.central_frequency
    }
}

/// Standard zero-mean Ricker wavelet centered at `pulse.delay`.
pub fn ricker(t: f64, pulse: &SourcePulse) -> f64 {
    let a = (PI * pulse.central_frequency).powi(2);
    let tau = t - pulse.delay;
    (1.0 - 2.0 * a * tau * tau) * (-a * tau * tau).exp()
}

/// `f̃(ω) = (2π)^{-1/2} ∫ e^{−iωt} f(t) dt` in closed form. The Ricker
/// transform is entire, so this is valid at complex ω.
pub fn pulse_transform(pulse: &SourcePulse, omega: Complex64) -> Complex64 {
    match pulse.kind {
        PulseKind::Ricker => {
            let a = (PI * pulse.central_frequency).powi(2);
            let w2 = omega * omega;
            let gauss = (-w2 / (4.0 * a)).exp();
            let shift = (-I * omega * pulse.delay).exp();
            w2 / (2.0 * a) * gauss * shift * ((PI / a).sqrt() / (2.0 * PI).sqrt())
        }
    }
}

/// `h(ω) = iμ₀ω f̃(ω)` (the source sits in air, μ = 1).
pub fn source_spectrum(pulse: &SourcePulse, omega: ComplexFrequency) -> Complex64 {
    let w = omega.as_complex();
    I * MU0 * w * pulse_transform(pulse, w)
}

/// Fraction of the pulse energy `∫|f̃|²` above `omega_max`.
pub fn energy_above(pulse: &SourcePulse, omega_max: f64) -> f64 {
    // |f̃|² ∝ ω⁴ e^{−ω²/(2a)}; integrate on a dense grid out to where it vanishes
    let a = (PI * pulse.central_frequency).powi(2);
    let density = |w: f64| w.powi(4) * (-w * w / (2.0 * a)).exp();
    let top = 40.0 * a.sqrt();
    let n = 200_000;
    let h = top / n as f64;
    let (mut total, mut above) = (0.0, 0.0);
    for i in 0..=n {
        let w = i as f64 * h;
        let weight = if i == 0 || i == n { 0.5 } else { 1.0 };
        let v = weight * density(w);
        total += v;
        if w > omega_max {
            above += v;
        }
    }
    if omega_max >= top {
        0.0
    } else {
        above / total
    }
}

/// How layers are cut into constant-coefficient cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    /// Cells per layer.
    pub cells_per_layer: usize,
    /// Optional cap on the cell size of layers with in-layer variation, m.
    pub max_cell_m: Option<f64>,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            cells_per_layer: 64,
            max_cell_m: None,
        }
    }
}

impl Discretization {
    pub fn uniform(cells_per_layer: usize) -> Self {
        Self {
            cells_per_layer,
            max_cell_m: None,
        }
    }

    pub fn cells_for(&self, layer: &Layer) -> usize {
        let base = self.cells_per_layer.max(1);
        match self.max_cell_m {
            Some(h) if h > 0.0 && !layer.is_constant() => base.max((layer.thickness() / h).ceil() as usize),
            _ => base,
        }
    }
}

/// A constant-coefficient cell `[z_top, z_top + h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    z_top: f64,
    h: f64,
    k: Complex64,
}

fn cells(profile: &MediumProfile, omega: ComplexFrequency, disc: &Discretization, collapse_constant: bool) -> Result<Vec<Cell>> {
    let mut out = Vec::new();
    for layer in profile.layers() {
        let n = if collapse_constant && layer.is_constant() {
            1
        } else {
            disc.cells_for(layer)
        };
        let h = layer.thickness() / n as f64;
        for i in 0..n {
            let z_top = layer.z_top + h * i as f64;
            let zm = z_top + 0.5 * h;
            let k = wavenumber(layer.eps_at(zm), layer.sigma_at(zm), profile.mu(), omega)?;
            out.push(Cell { z_top, h, k });
        }
    }
    Ok(out)
}

/// Möbius image of `q` across a constant slab given `t = e^{2ik s}`, where
/// `s` is the signed distance travelled upward.
#[inline]
fn mobius_q(q: Complex64, k: Complex64, t: Complex64) -> Option<Complex64> {
    let ik = I * k;
    let num = ik * (q * (1.0 + t) + ik * (1.0 - t));
    let den = ik * (1.0 + t) + q * (1.0 - t);
    let scale = (ik * (1.0 + t)).norm() + (q * (1.0 - t)).norm();
    if den.norm() <= 1e-300 || den.norm() <= 1e-15 * scale {
        None
    } else {
        Some(num / den)
    }
}

/// Carry `q` from the bottom of a constant slab of thickness `dz` to its top
/// (the backward-sweep direction).
pub fn propagate_slab_q(q_in: Complex64, k: Complex64, dz: f64) -> Result<Complex64> {
    propagate_q_signed(q_in, k, dz)
}

/// Carry `q` from the top of a constant slab of thickness `dz` to its bottom.
pub fn propagate_slab_q_down(q_in: Complex64, k: Complex64, dz: f64) -> Result<Complex64> {
    propagate_q_signed(q_in, k, -dz)
}

fn propagate_q_signed(q_in: Complex64, k: Complex64, up: f64) -> Result<Complex64> {
    if k == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroWavenumber);
    }
    let t = (2.0 * I * k * up).exp();
    mobius_q(q_in, k, t).ok_or(Error::SlabPole { dz: up.abs() })
}

/// Exact propagation of `(E, E_z)` across a constant slab of thickness `dz`
/// (downward for `dz > 0`).
pub fn propagate_slab_field(e: Complex64, e_z: Complex64, k: Complex64, dz: f64) -> (Complex64, Complex64) {
    let x = k * dz;
    let cos = x.cos();
    let (sin_over_k, k_sin) = if x.norm() < 1e-4 {
        let x2 = x * x;
        let sinc = 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
        (sinc * dz, k * x * sinc)
    } else {
        let s = x.sin();
        (s / k, k * s)
    };
    (e * cos + e_z * sin_over_k, -e * k_sin + e_z * cos)
}

/// `Ê`, `Ê_z` and the swept impedance on the cell grid of one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSolution {
    pub z_grid: Vec<f64>,
    pub e: Vec<Complex64>,
    pub e_z: Vec<Complex64>,
    /// `log Ê`, finite even where `Ê` itself underflows.
    pub log_e: Vec<Complex64>,
    /// Impedance `q` from the backward sweep.
    pub q: Vec<Complex64>,
    pub omega: ComplexFrequency,
}

impl FieldSolution {
    pub fn surface(&self) -> (Complex64, Complex64) {
        (self.e[0], self.e_z[0])
    }
}

/// Impedance `q(z)` on the node grid `0 = z_0 < … < z_M = L`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceSweep {
    pub z_grid: Vec<f64>,
    pub q: Vec<Complex64>,
    cells: Vec<Cell>,
}

/// Backward Riccati sweep from `q(L) = ik(L)` to the surface.
pub fn sweep_impedance(profile: &MediumProfile, omega: ComplexFrequency, disc: &Discretization) -> Result<ImpedanceSweep> {
    let cells = cells(profile, omega, disc, false)?;
    let mut q = vec![Complex64::new(0.0, 0.0); cells.len() + 1];
    q[cells.len()] = I * profile.substrate_wavenumber(omega)?;
    for (i, cell) in cells.iter().enumerate().rev() {
        let t = (2.0 * I * cell.k * cell.h).exp();
        q[i] = mobius_q(q[i + 1], cell.k, t).ok_or(Error::PoleCrossing { z: cell.z_top, omega })?;
    }
    let mut z_grid: Vec<f64> = cells.iter().map(|c| c.z_top).collect();
    z_grid.push(profile.depth());
    Ok(ImpedanceSweep { z_grid, q, cells })
}

/// Surface impedance `q(0, ω)`. Constant layers are propagated as a single
/// cell, which is exact.
pub fn surface_impedance(profile: &MediumProfile, omega: ComplexFrequency, disc: &Discretization) -> Result<Complex64> {
    let mut q = I * profile.substrate_wavenumber(omega)?;
    for cell in cells(profile, omega, disc, true)?.iter().rev() {
        let t = (2.0 * I * cell.k * cell.h).exp();
        q = mobius_q(q, cell.k, t).ok_or(Error::PoleCrossing { z: cell.z_top, omega })?;
    }
    Ok(q)
}

/// Surface field `Ê(0)` from the Robin condition `Ê'(0) + ik⁰Ê(0) = h e^{−ik⁰z₀}`.
pub fn surface_field(q0: Complex64, pulse: &SourcePulse, omega: ComplexFrequency) -> Result<Complex64> {
    let w = omega.as_complex();
    let k0 = -w / light_speed();
    let rhs = source_spectrum(pulse, omega) * (-I * k0 * pulse.z0).exp();
    let den = q0 + I * k0;
    if den.norm() <= 1e-14 * (q0.norm() + k0.norm()) {
        return Err(Error::Resonance { omega });
    }
    Ok(rhs / den)
}

/// Solve the two-point boundary value problem at one frequency.
pub fn solve_bvp(
    profile: &MediumProfile,
    omega: ComplexFrequency,
    pulse: &SourcePulse,
    disc: &Discretization,
) -> Result<FieldSolution> {
    let sweep = sweep_impedance(profile, omega, disc)?;
    let e0 = surface_field(sweep.q[0], pulse, omega)?;
    if !(e0.re.is_finite() && e0.im.is_finite()) {
        return Err(Error::NumericalOverflow(format!("surface field at {omega}")));
    }

    let n = sweep.q.len();
    let mut log_e = Vec::with_capacity(n);
    log_e.push(e0.ln());
    for (i, cell) in sweep.cells.iter().enumerate() {
        let (qa, qb) = (sweep.q[i], sweep.q[i + 1]);
        let ik = I * cell.k;
        let plus = (ik + qa).norm().min((ik + qb).norm());
        let minus = (ik - qa).norm().min((ik - qb).norm());
        let step = if plus >= minus {
            ik * cell.h + (ik + qa).ln() - (ik + qb).ln()
        } else {
            -ik * cell.h + (ik - qa).ln() - (ik - qb).ln()
        };
        let next = log_e[i] + step;
        if !(next.re.is_finite() && next.im.is_finite()) {
            return Err(Error::NumericalOverflow(format!("log field at z = {} m", cell.z_top + cell.h)));
        }
        log_e.push(next);
    }
    let e: Vec<Complex64> = log_e.iter().map(|l| l.exp()).collect();
    let e_z = e.iter().zip(&sweep.q).map(|(e, q)| e * q).collect();
    Ok(FieldSolution {
        z_grid: sweep.z_grid,
        e,
        e_z,
        log_e,
        q: sweep.q,
        omega,
    })
}

/// Uniformly sampled `E(t)` and `E_z(t)` at one depth. Sample `n` sits at
/// `t0 + n·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTrace {
    pub dt: f64,
    pub t0: f64,
    pub e: Vec<f64>,
    pub e_z: Vec<f64>,
    pub depth: f64,
}

impl TimeTrace {
    pub fn len(&self) -> usize {
        self.e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.e.len() as f64
    }

    /// `Σ E²` over the record.
    pub fn energy(&self) -> f64 {
        self.e.iter().map(|v| v * v).sum()
    }

    /// Both channels multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            e: self.e.iter().map(|v| v * factor).collect(),
            e_z: self.e_z.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    /// The first `n` samples.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            e: self.e[..n].to_vec(),
            e_z: self.e_z[..n].to_vec(),
            ..self.clone()
        }
    }
}

/// Synthesize the surface traces `E(0, t)`, `E_z(0, t)` for a source pulse.
///
/// Every positive bin of the FFT grid implied by `(n_samples, dt)` whose
/// source energy exceeds [`ENERGY_FLOOR`] of the peak is solved (in parallel);
/// the remaining bins and DC are zero.
pub fn synthesize_traces(
    profile: &MediumProfile,
    pulse: &SourcePulse,
    n_samples: usize,
    dt: f64,
    disc: &Discretization,
) -> Result<TimeTrace> {
    if n_samples < 2 || !n_samples.is_power_of_two() {
        return Err(Error::Sampling(format!("sample count {n_samples} is not a power of two")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Sampling(format!("dt must be positive, got {dt}")));
    }
    let nyquist = PI / dt;
    let aliased = energy_above(pulse, nyquist);
    if aliased > ALIASING_LIMIT {
        return Err(Error::Aliasing { fraction: aliased, nyquist });
    }

    let n_bins = n_samples / 2 + 1;
    let domega = 2.0 * PI / (n_samples as f64 * dt);
    let peak = pulse_transform(pulse, Complex64::new(2.0 * PI * pulse.central_frequency, 0.0)).norm_sqr();

    let solved: Vec<(Complex64, Complex64)> = (0..n_bins)
        .into_par_iter()
        .map(|j| {
            if j == 0 {
                return Ok((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)));
            }
            let w = j as f64 * domega;
            if pulse_transform(pulse, Complex64::new(w, 0.0)).norm_sqr() < ENERGY_FLOOR * peak {
                return Ok((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)));
            }
            let omega = ComplexFrequency::real(w)?;
            let q0 = surface_impedance(profile, omega, disc)?;
            let e0 = surface_field(q0, pulse, omega)?;
            Ok((e0, q0 * e0))
        })
        .collect::<Result<_>>()?;

    let (mut e, mut e_z): (Vec<_>, Vec<_>) = solved.into_iter().unzip();
    // a real trace needs real DC and Nyquist bins
    for v in [&mut e, &mut e_z] {
        v[0].im = 0.0;
        v[n_bins - 1].im = 0.0;
    }
    let spec_e = Spectrum::new(domega, 0.0, 0.0, e, SpectrumKind::Field);
    let spec_ez = Spectrum::new(domega, 0.0, 0.0, e_z, SpectrumKind::Derivative);
    inverse_transform(&spec_e, &spec_ez, n_samples, dt)
}
