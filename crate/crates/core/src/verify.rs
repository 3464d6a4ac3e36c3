//! Numerical witnesses for the accuracy estimates behind layer stripping.
//!
//! In layer `j` the impedance is normalized by the layer's own wavenumber,
//! `u_j = −iq/k_j`, and mapped to `w_j = (u_j − 1)/(u_j + 1)`. A purely
//! downgoing wave has `w_j = 0`; `|w_j|` measures contamination by waves
//! coming back up. Under Conditions A and B:
//!
//! * `|w_{j+1}(z_j)| ≤ δ` at every layer top,
//! * `max_{I_j} |w_j| ≤ 1 + λ_j/C_j`,
//! * `|w_j(z_j − 0)| ≤ 1` at every layer bottom,
//!
//! and consequently `k_j(z_{j−1}) = −iq(z_{j−1})(1 − κ_j)` with
//! `|κ_j| ≤ 2δ/(1 − δ)`. Everything here evaluates these quantities on the
//! same exact-slab sweep used by the forward solver.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forward::{sweep_impedance, Discretization};
use crate::medium::{
    c0_constant, check_condition_b_grid, light_speed, wavenumber, wavenumber_squared, ComplexFrequency,
    ConditionReport, MediumProfile, ARG_K2_RANGE, ARG_K_RANGE, DEFAULT_CONDITION_GRID, MU0,
};

/// Angular slack at the ends of the argument windows.
pub const ARG_SLACK: f64 = 1e-12;

/// Solver-consistency floor used in the inequality checks.
pub const SOLVER_FLOOR: f64 = 1e-9;

/// `q(z)` on the node grid, with each layer's node range.
#[derive(Debug, Clone, PartialEq)]
pub struct QSweep {
    pub z: Vec<f64>,
    pub q: Vec<Complex64>,
    /// Inclusive node range `(top, bottom)` of each layer.
    pub layer_nodes: Vec<(usize, usize)>,
    pub omega: ComplexFrequency,
}

/// Backward Riccati sweep exposed on the full grid.
pub fn sweep_q(profile: &MediumProfile, omega: ComplexFrequency, disc: &Discretization) -> Result<QSweep> {
    let sweep = sweep_impedance(profile, omega, disc)?;
    let mut layer_nodes = Vec::with_capacity(profile.layers().len());
    let mut start = 0;
    for layer in profile.layers() {
        let n = disc.cells_for(layer);
        layer_nodes.push((start, start + n));
        start += n;
    }
    Ok(QSweep {
        z: sweep.z_grid,
        q: sweep.q,
        layer_nodes,
        omega,
    })
}

/// `w_j` on the nodes of one layer (index `layers().len()` is the substrate).
#[derive(Debug, Clone, PartialEq)]
pub struct LayerW {
    pub layer: usize,
    pub z: Vec<f64>,
    pub w: Vec<Complex64>,
}

fn w_of(q: Complex64, k: Complex64, z: f64) -> Result<Complex64> {
    let u = -Complex64::i() * q / k;
    let den = u + 1.0;
    if den.norm() <= 1e-14 * (u.norm() + 1.0) {
        return Err(Error::WPole { z });
    }
    Ok((u - 1.0) / den)
}

/// Per-layer `w_j`. Interface nodes are evaluated with each layer's own
/// one-sided wavenumber limit, so the first and last entries of a layer are
/// `w_j(z_{j−1} + 0)` and `w_j(z_j − 0)`. The last entry of the result is the
/// substrate at `z = L`.
pub fn compute_w(sweep: &QSweep, profile: &MediumProfile) -> Result<Vec<LayerW>> {
    let mu = profile.mu();
    let omega = sweep.omega;
    let mut out = Vec::with_capacity(profile.layers().len() + 1);
    for (j, (layer, &(a, b))) in profile.layers().iter().zip(&sweep.layer_nodes).enumerate() {
        let mut z = Vec::with_capacity(b - a + 1);
        let mut w = Vec::with_capacity(b - a + 1);
        for i in a..=b {
            // the bottom node is the layer's own limit, not the next layer's
            let zi = if i == b { layer.z_bottom } else { sweep.z[i] };
            let k = wavenumber(layer.eps_at(zi), layer.sigma_at(zi), mu, omega)?;
            z.push(zi);
            w.push(w_of(sweep.q[i], k, zi)?);
        }
        out.push(LayerW { layer: j, z, w });
    }
    let last = sweep.q.len() - 1;
    let k_sub = profile.substrate_wavenumber(omega)?;
    out.push(LayerW {
        layer: profile.layers().len(),
        z: vec![sweep.z[last]],
        w: vec![w_of(sweep.q[last], k_sub, sweep.z[last])?],
    });
    Ok(out)
}

/// `κ = 2w/(1 + w)`, so that `k = −iq(1 − κ)`.
pub fn kappa_from_w(w: Complex64) -> Complex64 {
    2.0 * w / (1.0 + w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundStatus {
    Passed,
    Violated,
    /// Conditions A or B fail, so the estimates do not apply.
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerBound {
    /// 1-based layer number.
    pub layer: usize,
    /// `w_j(z_{j−1})`.
    #[serde(serialize_with = "serialize_complex")]
    pub w_at_top: Complex64,
    pub w_top_abs: f64,
    /// `β_j = max_{I_j} |w_j|`.
    pub w_max: f64,
    /// `|w_j(z_j − 0)|`.
    pub w_bottom_abs: f64,
    pub kappa_actual: f64,
    pub kappa_bound: f64,
    /// `1 + λ_j/C_j` (∞ when Condition B gives no constants).
    pub beta_bound: f64,
    pub top_ok: bool,
    pub beta_ok: bool,
    pub bottom_ok: bool,
    /// `β_j ≤ c₀`, which needs only Condition A.
    pub beta_c0_ok: bool,
    /// `|w_j(z_{j−1})| ≤ δ` and `κ_j ≤ 2δ/(1 − δ)`.
    pub passed: bool,
}

impl LayerBound {
    /// All three interface/interior inequalities and the κ bound.
    pub fn all_hold(&self) -> bool {
        self.passed && self.beta_ok && self.bottom_ok
    }
}

fn serialize_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheckReport {
    pub status: BoundStatus,
    pub omega: ComplexFrequency,
    pub delta: f64,
    pub conditions: ConditionReport,
    pub per_layer: Vec<LayerBound>,
    /// `|w_{N+1}(L)|`, zero up to rounding.
    pub substrate_w_abs: f64,
    /// `min_z (−Im q)`; nonnegative up to solver error for `ω₂ < 0`.
    pub lemma31_min_margin: f64,
    pub lemma2_arg_ok: bool,
}

impl BoundCheckReport {
    pub fn applicable(&self) -> bool {
        self.status != BoundStatus::NotApplicable
    }

    /// Every layer satisfies every estimate, regardless of applicability.
    pub fn all_estimates_hold(&self) -> bool {
        self.per_layer.iter().all(LayerBound::all_hold) && self.substrate_w_abs <= SOLVER_FLOOR
    }
}

/// Evaluate the reflection, ratio and wavenumber estimates at `(profile, omega, delta)`. When
/// Condition A or B fails the report is marked not-applicable; the measured
/// quantities are still filled in.
pub fn check_theorem1(
    profile: &MediumProfile,
    omega: ComplexFrequency,
    delta: f64,
    disc: &Discretization,
) -> Result<BoundCheckReport> {
    check_theorem1_grid(profile, omega, delta, disc, DEFAULT_CONDITION_GRID)
}

pub fn check_theorem1_grid(
    profile: &MediumProfile,
    omega: ComplexFrequency,
    delta: f64,
    disc: &Discretization,
    condition_grid: usize,
) -> Result<BoundCheckReport> {
    let conditions = check_condition_b_grid(profile, omega, delta, condition_grid)?;
    let kappa_max = conditions.kappa_bound;
    let sweep = sweep_q(profile, omega, disc)?;
    let ws = compute_w(&sweep, profile)?;
    let c0 = c0_constant();

    let per_layer = ws[..profile.layers().len()]
        .iter()
        .zip(&conditions.per_layer)
        .map(|(lw, cond)| {
            let w_top = lw.w[0];
            let w_top_abs = w_top.norm();
            let w_max = lw.w.iter().map(|w| w.norm()).fold(0.0, f64::max);
            let w_bottom_abs = lw.w[lw.w.len() - 1].norm();
            let kappa_actual = kappa_from_w(w_top).norm();
            let beta_bound = if cond.c_j > 0.0 && cond.lambda.is_finite() {
                1.0 + cond.lambda / cond.c_j
            } else {
                f64::INFINITY
            };
            let top_ok = w_top_abs <= delta * (1.0 + 1e-12);
            let kappa_ok = kappa_actual <= kappa_max * (1.0 + 1e-12);
            LayerBound {
                layer: lw.layer + 1,
                w_at_top: w_top,
                w_top_abs,
                w_max,
                w_bottom_abs,
                kappa_actual,
                kappa_bound: kappa_max,
                beta_bound,
                top_ok,
                beta_ok: w_max <= beta_bound + SOLVER_FLOOR,
                bottom_ok: w_bottom_abs <= 1.0 + SOLVER_FLOOR,
                beta_c0_ok: w_max <= c0 + SOLVER_FLOOR,
                passed: top_ok && kappa_ok,
            }
        })
        .collect::<Vec<_>>();

    let substrate_w_abs = ws[ws.len() - 1].w[0].norm();
    let lemma31_min_margin = sweep.q.iter().map(|q| -q.im).fold(f64::INFINITY, f64::min);

    let c = conditions.c;
    let mu = profile.mu();
    let mut lemma2_arg_ok = check_lemma2(profile.eps_substrate(), 0.0, mu, omega, c);
    for (layer, lw) in profile.layers().iter().zip(&ws) {
        for &z in &lw.z {
            lemma2_arg_ok &= check_lemma2(layer.eps_at(z), layer.sigma_at(z), mu, omega, c);
        }
    }

    let mut report = BoundCheckReport {
        status: BoundStatus::NotApplicable,
        omega,
        delta,
        conditions,
        per_layer,
        substrate_w_abs,
        lemma31_min_margin,
        lemma2_arg_ok,
    };
    if report.conditions.valid() {
        report.status = if report.all_estimates_hold() {
            BoundStatus::Passed
        } else {
            BoundStatus::Violated
        };
    }
    Ok(report)
}

/// Argument windows `arg k² ∈ [−3π/4, −π/4]`, `arg k ∈ [5π/8, 7π/8]` and the
/// lower bound `Im k ≥ √((−2μεω₁ω₂/c² + μμ₀σω₁)/(2(√2+1)))`. Meaningful when
/// Condition A holds for `(ε, σ, ω, c)`; `c` itself enters only through that
/// hypothesis.
pub fn check_lemma2(eps: f64, sigma: f64, mu: f64, omega: ComplexFrequency, c: f64) -> bool {
    let _ = c;
    let k2 = wavenumber_squared(eps, sigma, mu, omega);
    let Ok(k) = wavenumber(eps, sigma, mu, omega) else {
        return false;
    };
    let in_window = |x: f64, (lo, hi): (f64, f64)| x >= lo - ARG_SLACK && x <= hi + ARG_SLACK;
    let light = light_speed();
    let (w1, w2) = (omega.omega1, omega.omega2);
    let floor = ((-2.0 * mu * eps * w1 * w2 / (light * light) + mu * MU0 * sigma * w1) / (2.0 * (SQRT_2 + 1.0))).sqrt();
    in_window(k2.arg(), ARG_K2_RANGE) && in_window(k.arg(), ARG_K_RANGE) && k.im >= floor * (1.0 - 1e-12)
}
