//! Independent reference solvers and random medium generators shared by the
//! integration tests and the acceptance run. Nothing here calls the library's
//! solvers; only plain data types cross the boundary.

#![allow(dead_code)]

use std::f64::consts::PI;

use gpr_strip::medium::{LayerSpec, MediumProfile};
use num_complex::Complex64;
use rand::Rng;

pub const EPS0: f64 = 8.854e-12;
pub const MU0: f64 = 1.257e-6;

pub fn c() -> f64 {
    1.0 / (EPS0 * MU0).sqrt()
}

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Physical root of `k² = μεω²/c² − iμ₀μσω`, restated from scratch.
pub fn k_of(eps: f64, sigma: f64, mu: f64, w: Complex64) -> Complex64 {
    let k2 = mu * eps * w * w / (c() * c()) - I * MU0 * mu * sigma * w;
    let r = k2.sqrt();
    if r.im > 0.0 || (r.im == 0.0 && r.re < 0.0) {
        r
    } else {
        -r
    }
}

/// Closed-form `h(ω) = iμ₀ω f̃(ω)` for a Ricker source.
pub fn ricker_h(fc: f64, delay: f64, w: Complex64) -> Complex64 {
    let a = (PI * fc).powi(2);
    let f = (w * w / (2.0 * a)) * (-w * w / (4.0 * a)).exp() * (-I * w * delay).exp() * (PI / a).sqrt()
        / (2.0 * PI).sqrt();
    I * MU0 * w * f
}

/// Piecewise-constant medium as plain arrays.
#[derive(Debug, Clone)]
pub struct Slabs {
    pub thickness: Vec<f64>,
    pub eps: Vec<f64>,
    pub sigma: Vec<f64>,
    pub eps_sub: f64,
    pub mu: f64,
}

impl Slabs {
    pub fn profile(&self) -> MediumProfile {
        let specs: Vec<LayerSpec> = (0..self.eps.len())
            .map(|j| LayerSpec::constant(self.thickness[j], self.eps[j], self.sigma[j]))
            .collect();
        MediumProfile::new(self.mu, self.eps_sub, &specs).unwrap()
    }

    pub fn interfaces(&self) -> Vec<f64> {
        let mut z = vec![0.0];
        for d in &self.thickness {
            z.push(z.last().unwrap() + d);
        }
        z
    }
}

/// Transfer-matrix solution of the surface problem for piecewise-constant
/// media: returns `(E, E_z)` at every interface `z_0 = 0, …, z_N = L`.
///
/// The state `(E, E_z)` is carried upward from `(1, ik_sub)` at `L` by the
/// constant-coefficient matrix of each slab, then scaled by the surface
/// Robin condition.
pub fn transfer_matrix(s: &Slabs, w: Complex64, fc: f64, delay: f64, z0: f64) -> Vec<(Complex64, Complex64)> {
    let n = s.eps.len();
    let k_sub = k_of(s.eps_sub, 0.0, s.mu, w);
    let mut states = vec![(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)); n + 1];
    states[n] = (Complex64::new(1.0, 0.0), I * k_sub);
    for j in (0..n).rev() {
        let k = k_of(s.eps[j], s.sigma[j], s.mu, w);
        let d = s.thickness[j];
        let (e, ez) = states[j + 1];
        // upward by d: [cos(kd), -sin(kd)/k; k sin(kd), cos(kd)]
        let (cs, sn) = ((k * d).cos(), (k * d).sin());
        states[j] = (e * cs - ez * sn / k, e * k * sn + ez * cs);
    }
    let k0 = -w / c();
    let (e0, ez0) = states[0];
    let target = ricker_h(fc, delay, w) * (-I * k0 * z0).exp() / (ez0 / e0 + I * k0);
    let scale = target / e0;
    states.into_iter().map(|(e, ez)| (e * scale, ez * scale)).collect()
}

/// Piecewise-linear medium as plain arrays.
#[derive(Debug, Clone)]
pub struct Ramps {
    pub thickness: Vec<f64>,
    pub eps_top: Vec<f64>,
    pub eps_slope: Vec<f64>,
    pub sigma_top: Vec<f64>,
    pub sigma_slope: Vec<f64>,
    pub eps_sub: f64,
    pub mu: f64,
}

impl Ramps {
    pub fn profile(&self) -> MediumProfile {
        let specs: Vec<LayerSpec> = (0..self.eps_top.len())
            .map(|j| {
                LayerSpec::linear(
                    self.thickness[j],
                    self.eps_top[j],
                    self.eps_slope[j],
                    self.sigma_top[j],
                    self.sigma_slope[j],
                )
            })
            .collect();
        MediumProfile::new(self.mu, self.eps_sub, &specs).unwrap()
    }
}

/// Shoot `E'' = −k²(z)E` upward from `(1, ik_sub)` at `L` with classical RK4
/// on `steps` steps per layer; returns `E_z/E` at the surface. Upward
/// integration follows the growing (downgoing) mode, so it is stable at
/// complex frequencies.
pub fn rk4_surface_q(r: &Ramps, w: Complex64, steps: usize) -> Complex64 {
    let n = r.eps_top.len();
    let k_sub = k_of(r.eps_sub, 0.0, r.mu, w);
    let (mut e, mut ez) = (Complex64::new(1.0, 0.0), I * k_sub);
    let k2 = |j: usize, s: f64| {
        // s: distance below the layer top
        let eps = r.eps_top[j] + r.eps_slope[j] * s;
        let sig = r.sigma_top[j] + r.sigma_slope[j] * s;
        r.mu * eps * w * w / (c() * c()) - I * MU0 * r.mu * sig * w
    };
    for j in (0..n).rev() {
        let d = r.thickness[j];
        let h = -d / steps as f64;
        let mut s = d;
        for _ in 0..steps {
            let f = |s: f64, e: Complex64, ez: Complex64| (ez, -k2(j, s) * e);
            let (a1, b1) = f(s, e, ez);
            let (a2, b2) = f(s + h / 2.0, e + a1 * (h / 2.0), ez + b1 * (h / 2.0));
            let (a3, b3) = f(s + h / 2.0, e + a2 * (h / 2.0), ez + b2 * (h / 2.0));
            let (a4, b4) = f(s + h, e + a3 * h, ez + b3 * h);
            e += (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0);
            ez += (b1 + b2 * 2.0 + b3 * 2.0 + b4) * (h / 6.0);
            s += h;
            // renormalize; only the ratio matters
            let m = e.norm();
            e /= m;
            ez /= m;
        }
    }
    ez / e
}

pub fn random_slabs<R: Rng>(rng: &mut R) -> Slabs {
    let n = rng.gen_range(1..=5);
    let sigmas = [0.0, 1e-8, 1e-4];
    Slabs {
        thickness: (0..n).map(|_| rng.gen_range(0.05..2.0)).collect(),
        eps: (0..n).map(|_| rng.gen_range(1.0..16.0)).collect(),
        sigma: (0..n).map(|_| sigmas[rng.gen_range(0..3)]).collect(),
        eps_sub: rng.gen_range(1.0..16.0),
        mu: 1.0,
    }
}

pub fn random_ramps<R: Rng>(rng: &mut R) -> Ramps {
    let n = rng.gen_range(1..=4);
    let thickness: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let eps_top: Vec<f64> = (0..n).map(|_| rng.gen_range(1.5..12.0)).collect();
    // keep ε ≥ 1 at the bottom
    let eps_slope = (0..n)
        .map(|j| {
            let lo = ((1.0 - eps_top[j]) / thickness[j]).max(-4.0);
            rng.gen_range(lo..4.0)
        })
        .collect();
    let sigma_top: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(1e-5..1e-2) }).collect();
    let sigma_slope = (0..n)
        .map(|j| if sigma_top[j] == 0.0 { rng.gen_range(0.0..1e-3) } else { rng.gen_range(-sigma_top[j] / thickness[j]..1e-3) })
        .collect();
    Ramps {
        thickness,
        eps_top,
        eps_slope,
        sigma_top,
        sigma_slope,
        eps_sub: rng.gen_range(1.0..12.0),
        mu: 1.0,
    }
}

/// Relative distance `|a − b| / |b|`.
pub fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}
