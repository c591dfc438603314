//! Single-fiber elastic law.
//!
//! A wire carries no developed tension until its elongation past the natural
//! length exceeds the dead band; beyond that the tension grows exponentially
//! with the excess strain `s = max(0, (l - l0) - ld)`:
//!
//! ```text
//! Normalized: T(s) = exp(K s) - 1
//! RawEq1:     T(s) = exp(K s)
//! ```
//!
//! Lengths are in millimetres, `K` in 1/mm, tension is dimensionless.

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Which tension baseline a wire uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum BaselineMode {
    /// `exp(K s) - 1`: zero tension inside the dead band.
    #[default]
    Normalized,
    /// `exp(K s)`: the bare exponential, tension 1 at zero strain.
    RawEq1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WireParams {
    stiffness: f64,
    natural_length: f64,
    dead_band: f64,
    baseline: BaselineMode,
}

impl WireParams {
    /// Builds a parameter set in [`BaselineMode::Normalized`].
    pub fn new(stiffness: f64, natural_length: f64, dead_band: f64) -> Result<Self> {
        Self::with_baseline(stiffness, natural_length, dead_band, BaselineMode::Normalized)
    }

    pub fn with_baseline(
        stiffness: f64,
        natural_length: f64,
        dead_band: f64,
        baseline: BaselineMode,
    ) -> Result<Self> {
        if !(stiffness.is_finite() && stiffness > 0.0) {
            return Err(Error::config(format!("stiffness must be > 0, got {stiffness}")));
        }
        if !(natural_length.is_finite() && natural_length > 0.0) {
            return Err(Error::config(format!(
                "natural length must be > 0, got {natural_length}"
            )));
        }
        if !(dead_band.is_finite() && dead_band >= 0.0) {
            return Err(Error::config(format!("dead band must be >= 0, got {dead_band}")));
        }
        Ok(Self {
            stiffness,
            natural_length,
            dead_band,
            baseline,
        })
    }

    pub fn stiffness(&self) -> f64 {
        self.stiffness
    }

    pub fn natural_length(&self) -> f64 {
        self.natural_length
    }

    pub fn dead_band(&self) -> f64 {
        self.dead_band
    }

    pub fn baseline(&self) -> BaselineMode {
        self.baseline
    }

    /// Same stiffness and dead band, different natural length.
    pub fn with_natural_length(&self, natural_length: f64) -> Result<Self> {
        Self::with_baseline(self.stiffness, natural_length, self.dead_band, self.baseline)
    }

    /// The normalized variant. Equilibrium searches always run on this one.
    pub fn normalized(&self) -> Self {
        Self {
            baseline: BaselineMode::Normalized,
            ..*self
        }
    }

    /// Elongation past the dead band, clamped at zero.
    pub fn excess_strain(&self, length: f64) -> f64 {
        ((length - self.natural_length) - self.dead_band).max(0.0)
    }

    /// Length at which tension starts to develop.
    pub fn engagement_length(&self) -> f64 {
        self.natural_length + self.dead_band
    }

    // Unchecked versions used on hot paths where the caller has already
    // validated the length.

    pub(crate) fn tension_unchecked(&self, length: f64) -> f64 {
        let developed = (self.stiffness * self.excess_strain(length)).exp_m1();
        match self.baseline {
            BaselineMode::Normalized => developed,
            BaselineMode::RawEq1 => developed + 1.0,
        }
    }

    pub(crate) fn energy_unchecked(&self, length: f64) -> f64 {
        let s = self.excess_strain(length);
        let k = self.stiffness;
        let developed = exp_m1_minus_x(k * s) / k;
        match self.baseline {
            BaselineMode::Normalized => developed,
            // unit tension everywhere plus the developed part, referenced to l0
            BaselineMode::RawEq1 => developed + (length - self.natural_length),
        }
    }

    /// Rounding scale of the energy in ulps: the energy itself plus the
    /// tension times the length, since the length carries a relative
    /// rounding error of about one ulp.
    pub(crate) fn energy_noise_unchecked(&self, length: f64) -> f64 {
        self.energy_unchecked(length).abs() + self.tension_unchecked(length) * length
    }
}

/// `exp(x) - 1 - x` without the cancellation of the naive form near zero.
fn exp_m1_minus_x(x: f64) -> f64 {
    if x.abs() >= 0.5 {
        return x.exp_m1() - x;
    }
    // Taylor tail x^2/2! + x^3/3! + ...; at |x| < 0.5 twenty terms is far past ulp
    let mut term = x * x / 2.0;
    let mut sum = 0.0;
    for n in 3..24 {
        sum += term;
        term *= x / n as f64;
    }
    sum
}

fn check_length(length: f64) -> Result<()> {
    if length.is_finite() && length > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("wire length must be > 0, got {length}")))
    }
}

/// Tension of a wire of the given current length.
pub fn tension(params: &WireParams, length: f64) -> Result<f64> {
    check_length(length)?;
    Ok(params.tension_unchecked(length))
}

/// Strain energy whose derivative with respect to length is [`tension`].
///
/// Normalized mode: `(exp(K s) - 1) / K - s`, zero inside the dead band.
/// RawEq1 mode adds the unit-tension ramp `l - l0`; it is meant for reporting.
pub fn strain_energy(params: &WireParams, length: f64) -> Result<f64> {
    check_length(length)?;
    Ok(params.energy_unchecked(length))
}

/// A wire embedded between two anchor points (mm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wire {
    pub params: WireParams,
    pub anchor_a: Vector3<f64>,
    pub anchor_b: Vector3<f64>,
}

impl Wire {
    pub fn new(params: WireParams, anchor_a: Vector3<f64>, anchor_b: Vector3<f64>) -> Result<Self> {
        let wire = Self {
            params,
            anchor_a,
            anchor_b,
        };
        wire.length()?;
        Ok(wire)
    }

    pub fn length(&self) -> Result<f64> {
        let length = (self.anchor_b - self.anchor_a).norm();
        if length > 0.0 && length.is_finite() {
            Ok(length)
        } else {
            Err(Error::degenerate(format!(
                "wire anchors coincide at {:?}",
                self.anchor_a.as_slice()
            )))
        }
    }
}

/// Forces the wire exerts on `(anchor_a, anchor_b)`; each points toward the other anchor.
pub fn wire_force(wire: &Wire) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let length = wire.length()?;
    let dir_ab = (wire.anchor_b - wire.anchor_a) / length;
    let t = wire.params.tension_unchecked(length);
    Ok((dir_ab * t, -dir_ab * t))
}
