//! Layered medium model.
//!
//! A [`MediumProfile`] is a stack of layers over a homogeneous lossless
//! substrate. Inside each layer the relative permittivity and the
//! conductivity vary linearly with depth; both may jump at interfaces.
//! Layers are semi-closed intervals `[z_top, z_bottom)`, so a depth that sits
//! exactly on an interface belongs to the layer below it.
//!
//! The time convention is `e^{+iωt}` for harmonics (the forward transform
//! kernel is `e^{-iωt}`), which makes the physical half-plane `Im ω ≤ 0` and
//! puts the downgoing wave at `e^{ik z}` with `Im k > 0`.

mod conditions;

pub use conditions::{
    c0_constant, check_condition_a, check_condition_b, check_condition_b_grid, condition_a_at,
    kappa_bound, phi, ConditionAReport, ARG_K2_RANGE, ARG_K_RANGE,
    ConditionReport, LayerCondition, DEFAULT_CONDITION_GRID,
};

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum permittivity, F/m.
pub const EPS0: f64 = 8.854e-12;
/// Vacuum permeability, H/m.
pub const MU0: f64 = 1.257e-6;

/// The vacuum constants used throughout the crate.
///
/// The light speed is derived from `eps0` and `mu0` rather than stored, so the
/// identity `c² μ₀ ε₀ = 1` holds to rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub eps0: f64,
    pub mu0: f64,
}

impl PhysicalConstants {
    pub const VACUUM: PhysicalConstants = PhysicalConstants {
        eps0: EPS0,
        mu0: MU0,
    };

    pub fn c(&self) -> f64 {
        1.0 / (self.eps0 * self.mu0).sqrt()
    }
}

/// Speed of light in vacuum derived from [`EPS0`] and [`MU0`], m/s.
#[inline]
pub fn light_speed() -> f64 {
    PhysicalConstants::VACUUM.c()
}

/// Probing frequency `ω = ω₁ + iω₂` with `ω₁ > 0` and `ω₂ ≤ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexFrequency {
    pub omega1: f64,
    pub omega2: f64,
}

impl ComplexFrequency {
    pub fn new(omega1: f64, omega2: f64) -> Result<Self> {
        if !(omega1 > 0.0 && omega1.is_finite()) {
            return Err(Error::Precondition(format!(
                "omega1 must be positive and finite, got {omega1}"
            )));
        }
        if !(omega2 <= 0.0 && omega2.is_finite()) {
            return Err(Error::Precondition(format!(
                "omega2 must be non-positive and finite, got {omega2}"
            )));
        }
        Ok(Self { omega1, omega2 })
    }

    /// A real frequency (`ω₂ = 0`).
    pub fn real(omega1: f64) -> Result<Self> {
        Self::new(omega1, 0.0)
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.omega1, self.omega2)
    }

    /// `|ω|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.omega1 * self.omega1 + self.omega2 * self.omega2
    }
}

impl fmt::Display for ComplexFrequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}{:+e}i rad/s", self.omega1, self.omega2)
    }
}

/// `k² = μεω²/c² − iμ₀μσω` for a point of the medium (normal incidence).
pub fn wavenumber_squared(eps: f64, sigma: f64, mu: f64, omega: ComplexFrequency) -> Complex64 {
    let c = light_speed();
    let w = omega.as_complex();
    w * w * (mu * eps / (c * c)) - Complex64::i() * w * (MU0 * mu * sigma)
}

/// The physical square root of `k²`: the negative root when `k` is real and
/// the root with positive imaginary part otherwise.
pub fn branch_root(k_squared: Complex64) -> Result<Complex64> {
    if k_squared == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroWavenumber);
    }
    let s = k_squared.sqrt();
    Ok(if s.im > 0.0 { s } else { -s })
}

/// Physical wavenumber `k` at a point, combining [`wavenumber_squared`] and
/// [`branch_root`].
pub fn wavenumber(eps: f64, sigma: f64, mu: f64, omega: ComplexFrequency) -> Result<Complex64> {
    branch_root(wavenumber_squared(eps, sigma, mu, omega))
}

/// One layer `[z_top, z_bottom)` with linear in-layer laws for ε and σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    pub z_top: f64,
    pub z_bottom: f64,
    pub eps_top: f64,
    pub eps_slope: f64,
    pub sigma_top: f64,
    pub sigma_slope: f64,
}

impl Layer {
    pub fn thickness(&self) -> f64 {
        self.z_bottom - self.z_top
    }

    pub fn eps_at(&self, z: f64) -> f64 {
        self.eps_top + self.eps_slope * (z - self.z_top)
    }

    pub fn sigma_at(&self, z: f64) -> f64 {
        self.sigma_top + self.sigma_slope * (z - self.z_top)
    }

    /// Permittivity and conductivity in the limit `z → z_bottom − 0`.
    pub fn bottom_values(&self) -> (f64, f64) {
        (self.eps_at(self.z_bottom), self.sigma_at(self.z_bottom))
    }

    pub fn is_constant(&self) -> bool {
        self.eps_slope == 0.0 && self.sigma_slope == 0.0
    }
}

/// Serialized form of one layer, positioned by thickness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub thickness_m: f64,
    pub eps_top: f64,
    #[serde(default)]
    pub eps_slope_per_m: f64,
    #[serde(rename = "sigma_top_S_per_m", default)]
    pub sigma_top: f64,
    #[serde(rename = "sigma_slope_per_m", default)]
    pub sigma_slope_per_m: f64,
}

impl LayerSpec {
    pub fn constant(thickness_m: f64, eps: f64, sigma: f64) -> Self {
        Self {
            thickness_m,
            eps_top: eps,
            eps_slope_per_m: 0.0,
            sigma_top: sigma,
            sigma_slope_per_m: 0.0,
        }
    }

    pub fn linear(thickness_m: f64, eps_top: f64, eps_slope: f64, sigma_top: f64, sigma_slope: f64) -> Self {
        Self {
            thickness_m,
            eps_top,
            eps_slope_per_m: eps_slope,
            sigma_top,
            sigma_slope_per_m: sigma_slope,
        }
    }
}

/// Serialized form of a whole profile (the profile JSON file).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub mu: f64,
    pub eps_substrate: f64,
    pub layers: Vec<LayerSpec>,
}

/// A validated stack of contiguous layers starting at `z = 0`, over a
/// substrate with constant ε and zero conductivity.
#[derive(Debug, Clone, PartialEq)]
pub struct MediumProfile {
    mu: f64,
    layers: Vec<Layer>,
    eps_substrate: f64,
}

/// Pointwise medium values returned by [`MediumProfile::sample`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub eps: f64,
    pub sigma: f64,
    /// Index into [`MediumProfile::layers`]; equal to the layer count in the
    /// substrate.
    pub layer_index: usize,
}

impl MediumProfile {
    pub fn new(mu: f64, eps_substrate: f64, specs: &[LayerSpec]) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidProfile(msg));
        if !(mu > 0.0 && mu.is_finite()) {
            return bad(format!("mu must be positive, got {mu}"));
        }
        if !(eps_substrate >= 1.0 && eps_substrate.is_finite()) {
            return bad(format!("eps_substrate must be >= 1, got {eps_substrate}"));
        }
        let mut layers = Vec::with_capacity(specs.len());
        let mut z = 0.0;
        for (j, s) in specs.iter().enumerate() {
            let finite = [s.thickness_m, s.eps_top, s.eps_slope_per_m, s.sigma_top, s.sigma_slope_per_m]
                .iter()
                .all(|v| v.is_finite());
            if !finite {
                return bad(format!("layer {j}: non-finite coefficient"));
            }
            if s.thickness_m <= 0.0 {
                return bad(format!("layer {j}: thickness must be positive, got {}", s.thickness_m));
            }
            let layer = Layer {
                z_top: z,
                z_bottom: z + s.thickness_m,
                eps_top: s.eps_top,
                eps_slope: s.eps_slope_per_m,
                sigma_top: s.sigma_top,
                sigma_slope: s.sigma_slope_per_m,
            };
            let (eps_bot, sigma_bot) = layer.bottom_values();
            if layer.eps_top < 1.0 || eps_bot < 1.0 {
                return bad(format!("layer {j}: permittivity drops below 1"));
            }
            if layer.sigma_top < 0.0 || sigma_bot < 0.0 {
                return bad(format!("layer {j}: conductivity becomes negative"));
            }
            z = layer.z_bottom;
            layers.push(layer);
        }
        Ok(Self {
            mu,
            layers,
            eps_substrate,
        })
    }

    /// A profile with no layers: the substrate fills `z ≥ 0`.
    pub fn half_space(mu: f64, eps: f64) -> Result<Self> {
        Self::new(mu, eps, &[])
    }

    pub fn from_spec(spec: &ProfileSpec) -> Result<Self> {
        Self::new(spec.mu, spec.eps_substrate, &spec.layers)
    }

    pub fn to_spec(&self) -> ProfileSpec {
        ProfileSpec {
            mu: self.mu,
            eps_substrate: self.eps_substrate,
            layers: self
                .layers
                .iter()
                .map(|l| LayerSpec::linear(l.thickness(), l.eps_top, l.eps_slope, l.sigma_top, l.sigma_slope))
                .collect(),
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn eps_substrate(&self) -> f64 {
        self.eps_substrate
    }

    /// Total layered depth `L`.
    pub fn depth(&self) -> f64 {
        self.layers.last().map_or(0.0, |l| l.z_bottom)
    }

    /// Interface depths `z_1 … z_N`.
    pub fn interfaces(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.z_bottom).collect()
    }

    /// ε(z), σ(z) and the owning layer. Interfaces belong to the layer below;
    /// `z ≥ L` is the substrate.
    pub fn sample(&self, z: f64) -> Result<ProfileSample> {
        if !(z >= 0.0) {
            return Err(Error::Domain { z });
        }
        let idx = self.layers.partition_point(|l| l.z_bottom <= z);
        Ok(match self.layers.get(idx) {
            Some(l) => ProfileSample {
                eps: l.eps_at(z),
                sigma: l.sigma_at(z),
                layer_index: idx,
            },
            None => ProfileSample {
                eps: self.eps_substrate,
                sigma: 0.0,
                layer_index: self.layers.len(),
            },
        })
    }

    /// Substrate wavenumber `k_z(L)`.
    pub fn substrate_wavenumber(&self, omega: ComplexFrequency) -> Result<Complex64> {
        wavenumber(self.eps_substrate, 0.0, self.mu, omega)
    }
}

/// Free-function form of [`MediumProfile::sample`].
pub fn sample_profile(profile: &MediumProfile, z: f64) -> Result<ProfileSample> {
    profile.sample(z)
}
