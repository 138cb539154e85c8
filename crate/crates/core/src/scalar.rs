//! Sums of three unimodular scalars and the homogeneity certificate that
//! upgrades `T`-homogeneity of an additive map to full complex linearity.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AlgebraError, LinearMap, WeightedNorm};
use crate::linalg::{Scalar, Vector};

/// Largest modulus accepted by [`three_unimodular`].
pub const MAX_MODULUS: f64 = 3.0;
const RANGE_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ScalarError {
    #[error("|w| = {0} exceeds 3")]
    Range(f64),
    #[error("non-finite scalar")]
    NonFinite,
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnimodularTriple {
    #[serde(with = "crate::io::complex_scalar")]
    pub theta1: Scalar,
    #[serde(with = "crate::io::complex_scalar")]
    pub theta2: Scalar,
    #[serde(with = "crate::io::complex_scalar")]
    pub theta3: Scalar,
}

impl UnimodularTriple {
    pub fn sum(&self) -> Scalar {
        self.theta1 + self.theta2 + self.theta3
    }

    pub fn as_array(&self) -> [Scalar; 3] {
        [self.theta1, self.theta2, self.theta3]
    }

    /// `max | |θᵢ| − 1 |`.
    pub fn modulus_defect(&self) -> f64 {
        self.as_array().iter().map(|t| (t.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Writes `w` with `|w| ≤ 3` as `θ₁ + θ₂ + θ₃`, `|θᵢ| = 1`.
///
/// `θ₃` is the phase of `w` when `|w| ≥ 1` and `1` otherwise. Then
/// `u = (w − θ₃)/2` lies in the closed unit disk and
/// `θ₁,₂ = exp(i(arg u ± arccos|u|))` sum to `2u`.
pub fn three_unimodular(w: Scalar) -> Result<UnimodularTriple, ScalarError> {
    if !w.re.is_finite() || !w.im.is_finite() {
        return Err(ScalarError::NonFinite);
    }
    let r = w.norm();
    if r > MAX_MODULUS + RANGE_SLACK {
        return Err(ScalarError::Range(r));
    }
    let theta3 = if r >= 1.0 { w / r } else { Complex64::new(1.0, 0.0) };
    let u = (w - theta3) / 2.0;
    let (theta1, theta2) = if u == Complex64::new(0.0, 0.0) {
        (Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0))
    } else {
        let arg = u.arg();
        let spread = u.norm().min(1.0).acos();
        (Complex64::from_polar(1.0, arg + spread), Complex64::from_polar(1.0, arg - spread))
    };
    Ok(UnimodularTriple { theta1, theta2, theta3 })
}

/// `M = ⌊4|γ|⌋ + 1`, so that `|3γ/M| < 3/4`.
pub fn certificate_multiplier(gamma: Scalar) -> f64 {
    (4.0 * gamma.norm()).floor() + 1.0
}

/// Distance between `(M/3)·(d(θ₁a) + d(θ₂a) + d(θ₃a))` and `γ·d(a)`, where
/// `θ₁ + θ₂ + θ₃ = 3γ/M`.
pub fn scalar_homogeneity_certificate(
    d: &LinearMap,
    gamma: Scalar,
    a: &Vector,
    codomain: &WeightedNorm,
) -> Result<f64, ScalarError> {
    let target = d.apply(a)? * gamma;
    if gamma == Complex64::new(0.0, 0.0) {
        return Ok(codomain.norm(&target));
    }
    let m = certificate_multiplier(gamma);
    let triple = three_unimodular(gamma * (3.0 / m))?;
    let mut chain = Vector::zeros(d.codomain_dim());
    for theta in triple.as_array() {
        chain += d.apply(&(a * theta))?;
    }
    chain *= Complex64::new(m / 3.0, 0.0);
    Ok(codomain.norm(&(chain - target)))
}
