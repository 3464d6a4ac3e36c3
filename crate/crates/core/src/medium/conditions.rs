//! Admissibility conditions on the medium and the probing frequency, and the
//! constants they produce.
//!
//! Condition A bounds σ/ε and places `ω₂/ω₁` in a window that keeps
//! `arg k²` inside `[−3π/4, −π/4]`. Condition B asks each layer to vary slowly
//! (rate `λ_j`), to damp fast enough (rate `C_j`), and to be thick enough that
//! reflections from below are suppressed to `δ` at the layer top. All the
//! existential constants are constructed here on a dense depth grid.

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;

use super::{light_speed, ComplexFrequency, Layer, MediumProfile, MU0};
use crate::error::{Error, Result};

/// Samples per layer used when minimizing or maximizing over depth.
pub const DEFAULT_CONDITION_GRID: usize = 10_000;

/// `φ(C) = √(2 + C²) − C`.
pub fn phi(c: f64) -> f64 {
    // same value as 2 / (√(2 + C²) + C), which does not cancel for large C
    2.0 / ((2.0 + c * c).sqrt() + c)
}

/// `c₀ = tan(3π/8) + sec(3π/8) = 1 + √2 + √(4 + 2√2)`.
pub fn c0_constant() -> f64 {
    1.0 + SQRT_2 + (4.0 + 2.0 * SQRT_2).sqrt()
}

/// `2δ / (1 − δ)`, the bound on the relative wavenumber error at a layer top.
pub fn kappa_bound(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Precondition(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(2.0 * delta / (1.0 - delta))
}

fn layer_grid(layer: &Layer, n: usize) -> impl Iterator<Item = f64> + '_ {
    let n = n.max(2);
    let h = layer.thickness() / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { layer.z_bottom } else { layer.z_top + h * i as f64 })
}

/// Outcome of [`check_condition_a`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionAReport {
    pub holds: bool,
    /// The constant `C` the inequalities were tested with.
    pub c_used: f64,
    /// Smallest `C` for which the σ/ε inequality holds.
    pub c_min: f64,
    /// Largest σ/ε over the medium and where it occurs.
    pub max_sigma_over_eps: f64,
    pub worst_z: f64,
    /// `2Cω₁/(μ₀c²) − max σ/ε` (negative when violated).
    pub ratio_margin: f64,
    /// Admissible window for `ω₂`: `[−(1+φ(C))ω₁, (1−√2)ω₁]`.
    pub omega2_min: f64,
    pub omega2_max: f64,
}

/// Test Condition A. With `c = None` the smallest admissible `C` is used,
/// which gives the widest `ω₂` window.
pub fn check_condition_a(
    profile: &MediumProfile,
    omega: ComplexFrequency,
    c: Option<f64>,
) -> Result<ConditionAReport> {
    check_condition_a_grid(profile, omega, c, DEFAULT_CONDITION_GRID)
}

pub(crate) fn check_condition_a_grid(
    profile: &MediumProfile,
    omega: ComplexFrequency,
    c: Option<f64>,
    grid: usize,
) -> Result<ConditionAReport> {
    if let Some(c) = c {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Precondition(format!("C must be positive, got {c}")));
        }
    }
    let light = light_speed();
    let scale = MU0 * light * light / (2.0 * omega.omega1);

    let mut max_ratio = 0.0_f64;
    let mut worst_z = profile.depth();
    for layer in profile.layers() {
        for z in layer_grid(layer, grid) {
            let r = layer.sigma_at(z) / layer.eps_at(z);
            if r > max_ratio {
                max_ratio = r;
                worst_z = z;
            }
        }
    }
    let c_min = max_ratio * scale;
    let c_used = c.unwrap_or(c_min);
    let bound = c_used / scale;
    let omega2_min = -(1.0 + phi(c_used)) * omega.omega1;
    let omega2_max = (1.0 - SQRT_2) * omega.omega1;
    let slack = 1e-12 * omega.omega1;
    let window_ok = omega.omega2 >= omega2_min - slack && omega.omega2 <= omega2_max + slack;
    let ratio_ok = max_ratio <= bound * (1.0 + 1e-12);
    Ok(ConditionAReport {
        holds: window_ok && ratio_ok,
        c_used,
        c_min,
        max_sigma_over_eps: max_ratio,
        worst_z,
        ratio_margin: bound - max_ratio,
        omega2_min,
        omega2_max,
    })
}

/// Condition A at a single point `(ε, σ)` with constant `c`.
pub fn condition_a_at(eps: f64, sigma: f64, omega: ComplexFrequency, c: f64) -> bool {
    let light = light_speed();
    let bound = 2.0 * c * omega.omega1 / (MU0 * light * light);
    let w1 = omega.omega1;
    sigma / eps <= bound * (1.0 + 1e-12)
        && omega.omega2 >= -(1.0 + phi(c)) * w1 - 1e-12 * w1
        && omega.omega2 <= (1.0 - SQRT_2) * w1 + 1e-12 * w1
}

/// Condition-B constants of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayerCondition {
    /// Minimal admissible smoothness rate `λ_j`, 1/m (∞ when none exists).
    pub lambda: f64,
    /// Maximal admissible decay rate `C_j`, 1/m (may be ≤ 0).
    pub c_j: f64,
    /// `e^{−C_j Δz_j} + (λ_j/C_j)(1 + λ_j/C_j)`, to be compared with `δ²`.
    pub delta_contribution: f64,
    pub satisfied: bool,
}

/// Outcome of [`check_condition_b`], with the Condition-A status folded in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition_a_holds: bool,
    /// Condition-A constant `C` (the minimal admissible one).
    pub c: f64,
    pub per_layer: Vec<LayerCondition>,
    pub delta: f64,
    pub kappa_bound: f64,
}

impl ConditionReport {
    pub fn condition_b_holds(&self) -> bool {
        self.per_layer.iter().all(|l| l.satisfied)
    }

    /// Both conditions hold, so the reflection and wavenumber estimates apply.
    pub fn valid(&self) -> bool {
        self.condition_a_holds && self.condition_b_holds()
    }
}

/// Test Condition B for every layer at `delta ∈ (0, √2 − 1]`.
pub fn check_condition_b(profile: &MediumProfile, omega: ComplexFrequency, delta: f64) -> Result<ConditionReport> {
    check_condition_b_grid(profile, omega, delta, DEFAULT_CONDITION_GRID)
}

pub fn check_condition_b_grid(
    profile: &MediumProfile,
    omega: ComplexFrequency,
    delta: f64,
    grid: usize,
) -> Result<ConditionReport> {
    if !(delta > 0.0 && delta <= SQRT_2 - 1.0 + 1e-15) {
        return Err(Error::Precondition(format!("delta must lie in (0, sqrt(2)-1], got {delta}")));
    }
    let a = check_condition_a_grid(profile, omega, None, grid)?;
    let per_layer = profile
        .layers()
        .iter()
        .map(|layer| layer_condition(layer, profile.mu(), omega, delta, grid))
        .collect();
    Ok(ConditionReport {
        condition_a_holds: a.holds,
        c: a.c_used,
        per_layer,
        delta,
        kappa_bound: kappa_bound(delta)?,
    })
}

fn layer_condition(layer: &Layer, mu: f64, omega: ComplexFrequency, delta: f64, grid: usize) -> LayerCondition {
    let (w1, w2) = (omega.omega1, omega.omega2.abs());
    let wn2 = omega.norm_sqr();
    let sigma_vanishes = layer.sigma_top == 0.0 && layer.sigma_slope == 0.0;

    let mut lambda = 0.0_f64;
    let mut min_eps = f64::INFINITY;
    for z in layer_grid(layer, grid) {
        let eps = layer.eps_at(z);
        min_eps = min_eps.min(eps);
        if layer.eps_slope != 0.0 {
            let need = if w2 == 0.0 {
                f64::INFINITY
            } else {
                layer.eps_slope.abs() / eps * wn2 / (4.0 * w1 * w2)
            };
            lambda = lambda.max(need);
        }
        if !sigma_vanishes && layer.sigma_slope != 0.0 {
            let sigma = layer.sigma_at(z);
            let need = if sigma <= 0.0 {
                f64::INFINITY
            } else {
                layer.sigma_slope.abs() / sigma * wn2.sqrt() / (2.0 * w1)
            };
            lambda = lambda.max(need);
        }
    }

    let c = light_speed();
    let decay = 4.0 / c * (mu * min_eps * w1 * w2 / (SQRT_2 + 1.0)).sqrt();
    let c_j = decay - c0_constant() * lambda;
    let (delta_contribution, satisfied) = if lambda.is_finite() && c_j > 0.0 {
        let ratio = lambda / c_j;
        let lhs = (-c_j * layer.thickness()).exp() + ratio * (1.0 + ratio);
        (lhs, lhs <= delta * delta)
    } else {
        (f64::INFINITY, false)
    };
    LayerCondition {
        lambda,
        c_j: if lambda.is_finite() { c_j } else { f64::NEG_INFINITY },
        delta_contribution,
        satisfied,
    }
}

/// `arg(k²)` window `[−3π/4, −π/4]` and `arg(k)` window `[5π/8, 7π/8]`.
pub const ARG_K2_RANGE: (f64, f64) = (-3.0 * PI / 4.0, -PI / 4.0);
pub const ARG_K_RANGE: (f64, f64) = (5.0 * PI / 8.0, 7.0 * PI / 8.0);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::LayerSpec;

    fn w(ratio: f64) -> ComplexFrequency {
        let w1 = 2.0 * PI * 2e8;
        ComplexFrequency::new(w1, ratio * w1).unwrap()
    }

    #[test]
    fn phi_values() {
        assert!((phi(0.0) - SQRT_2).abs() < 1e-15);
        assert!((phi(1.0) - 0.732_050_807_568_877_3).abs() < 1e-15);
        assert!(phi(100.0) < 0.011);
        assert!((phi(100.0) - 0.009_999_500_049_993_751).abs() < 1e-16);
        let mut prev = phi(0.0);
        for i in 1..100 {
            let v = phi(i as f64 * 0.37);
            assert!(v < prev && v > 0.0);
            prev = v;
        }
    }

    #[test]
    fn c0_closed_forms_agree() {
        let c0 = c0_constant();
        let t = 3.0 * PI / 8.0;
        assert!((c0 - (t.tan() + 1.0 / t.cos())).abs() < 1e-12);
        assert!((c0 - 5.027_339_492_125_848).abs() < 1e-14);
        assert!((c0 - 5.0).abs() < 0.03);
    }

    #[test]
    fn kappa_bound_values() {
        assert!((kappa_bound(0.1).unwrap() - 2.0 / 9.0).abs() < 1e-15);
        assert!(kappa_bound(1e-9).unwrap() < 3e-9);
        assert!((kappa_bound(SQRT_2 - 1.0).unwrap() - SQRT_2).abs() < 1e-14);
        assert!(kappa_bound(1.0).is_err());
        assert!(kappa_bound(0.0).is_err());
    }

    #[test]
    fn condition_a_lossless() {
        let p = MediumProfile::new(1.0, 5.0, &[LayerSpec::constant(3.0, 4.0, 0.0)]).unwrap();
        let r = check_condition_a(&p, w(-0.9), Some(0.5)).unwrap();
        assert!(r.holds);
        let r = check_condition_a(&p, w(-0.9), None).unwrap();
        assert!(r.holds);
        assert_eq!(r.c_min, 0.0);
        let r = check_condition_a(&p, w(-0.2), None).unwrap();
        assert!(!r.holds);
        assert!(check_condition_a(&p, w(-0.9), Some(0.0)).is_err());
    }

    #[test]
    fn condition_a_conductivity_bound() {
        let p = MediumProfile::new(1.0, 5.0, &[LayerSpec::constant(3.0, 4.0, 1e-4)]).unwrap();
        let r = check_condition_a(&p, w(-0.9), Some(1.0)).unwrap();
        // 1e-4 / 4 against 2 C w1 / (mu0 c^2) = 0.022252529083907223
        assert!(r.holds);
        assert!((r.ratio_margin - (0.022_252_529_083_907_223 - 2.5e-5)).abs() < 1e-15);
        // A conductivity that exceeds the bound for C = 1
        let p = MediumProfile::new(1.0, 5.0, &[LayerSpec::constant(3.0, 4.0, 0.1)]).unwrap();
        assert!(!check_condition_a(&p, w(-0.9), Some(1.0)).unwrap().holds);
    }

    #[test]
    fn condition_b_piecewise_constant() {
        let omega = w(-0.9);
        let p = MediumProfile::new(1.0, 9.0, &[LayerSpec::constant(2.0, 4.0, 0.0)]).unwrap();
        let r = check_condition_b(&p, omega, 0.1).unwrap();
        let l = r.per_layer[0];
        assert_eq!(l.lambda, 0.0);
        let c = light_speed();
        let expect = 4.0 / c * (4.0 * omega.omega1 * omega.omega2.abs() / (SQRT_2 + 1.0)).sqrt();
        assert!((l.c_j - expect).abs() < 1e-12 * expect);
        assert!((l.delta_contribution - (-expect * 2.0).exp()).abs() < 1e-15);
        assert!(l.satisfied && r.valid());
        assert!((r.kappa_bound - 2.0 / 9.0).abs() < 1e-15);

        // thinner than ln(1/δ²)/C_j
        let thin = 0.9 * (1.0 / 0.01_f64).ln() / expect;
        let p = MediumProfile::new(1.0, 9.0, &[LayerSpec::constant(thin, 4.0, 0.0)]).unwrap();
        let r = check_condition_b(&p, omega, 0.1).unwrap();
        assert!(!r.per_layer[0].satisfied && !r.valid());
    }

    #[test]
    fn condition_b_linear_layer_matches_closed_form() {
        // For a linear eps the grid extremes sit at the layer ends.
        let omega = w(-0.9);
        let p = MediumProfile::new(1.0, 9.0, &[LayerSpec::linear(5.0, 4.0, 0.02, 1e-4, 1e-6)]).unwrap();
        let r = check_condition_b(&p, omega, 0.2).unwrap();
        let l = r.per_layer[0];
        let wn2 = omega.norm_sqr();
        let lam_eps = 0.02 / 4.0 * wn2 / (4.0 * omega.omega1 * omega.omega2.abs());
        let lam_sig = 1e-6 / 1e-4 * wn2.sqrt() / (2.0 * omega.omega1);
        assert!((l.lambda - lam_eps.max(lam_sig)).abs() < 1e-15);
        let c = light_speed();
        let decay = 4.0 / c * (4.0 * omega.omega1 * omega.omega2.abs() / (SQRT_2 + 1.0)).sqrt();
        assert!((l.c_j - (decay - c0_constant() * l.lambda)).abs() < 1e-12);
    }

    #[test]
    fn condition_b_vanishing_conductivity() {
        let omega = w(-0.9);
        // sigma reaches zero at the layer bottom with nonzero slope
        let p = MediumProfile::new(1.0, 9.0, &[LayerSpec::linear(5.0, 4.0, 0.0, 1e-4, -2e-5)]).unwrap();
        let r = check_condition_b(&p, omega, 0.2).unwrap();
        assert!(r.per_layer[0].lambda.is_infinite());
        assert!(!r.per_layer[0].satisfied);
        // identically zero is vacuous
        let p = MediumProfile::new(1.0, 9.0, &[LayerSpec::linear(5.0, 4.0, 0.0, 0.0, 0.0)]).unwrap();
        assert!(check_condition_b(&p, omega, 0.2).unwrap().per_layer[0].satisfied);
    }

    #[test]
    fn condition_b_delta_precondition() {
        let p = MediumProfile::half_space(1.0, 4.0).unwrap();
        assert!(check_condition_b(&p, w(-0.9), 0.5).is_err());
        assert!(check_condition_b(&p, w(-0.9), 0.0).is_err());
        assert!(check_condition_b(&p, w(-0.9), SQRT_2 - 1.0).is_ok());
    }
}
