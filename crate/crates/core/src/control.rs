//! Control functions `φ(a, b)` and the summed control
//! `φ̃(a, b) = ½ Σ_{n≥0} 2^{-n} φ(2ⁿa, 2ⁿb)`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::WeightedNorm;
use crate::linalg::Vector;

/// Number of explicitly summed terms for tabulated controls.
pub const DEFAULT_TERMS: usize = 64;

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("invalid control parameter: {0}")]
    Parameter(String),
    #[error("growth exponent {0} >= 1: the doubling series diverges")]
    Divergent(f64),
    #[error("control returned {0}, expected a finite nonnegative value")]
    BadValue(f64),
}

type ControlCallback = dyn Fn(&Vector, &Vector) -> f64 + Send + Sync;

/// A user-supplied control with an asserted growth exponent `q < 1`, i.e.
/// `φ(2ᵏa, 2ᵏb) = O(2^{kq})`.
#[derive(Clone)]
pub struct Tabulated {
    func: Arc<ControlCallback>,
    growth: f64,
    terms: usize,
}

impl fmt::Debug for Tabulated {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tabulated").field("growth", &self.growth).field("terms", &self.terms).finish()
    }
}

#[derive(Clone, Debug)]
pub enum ControlFunction {
    /// `α + β(‖a‖ᵖ + ‖b‖ᵖ)` with `p < 1`; `‖0‖ᵖ` is taken as 0.
    PNorm {
        alpha: f64,
        beta: f64,
        p: f64,
    },
    Constant {
        alpha: f64,
    },
    Tabulated(Tabulated),
}

/// Serializable form, `{"kind":"pnorm","alpha":..,"beta":..,"p":..}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ControlSpec {
    Pnorm { alpha: f64, beta: f64, p: f64 },
    Constant { alpha: f64 },
}

/// A value of `φ̃`. `truncation_n` is `None` for closed forms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSum {
    pub value: f64,
    pub truncation_n: Option<usize>,
    pub tail_bound: f64,
}

impl ControlSum {
    /// `value + tail_bound`, a certified upper bound on the exact series.
    pub fn upper(&self) -> f64 {
        self.value + self.tail_bound
    }
}

fn check_nonneg(name: &str, x: f64) -> Result<(), ControlError> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(ControlError::Parameter(format!("{name} must be finite and >= 0, got {x}")))
    }
}

fn pow_or_zero(r: f64, p: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        r.powf(p)
    }
}

fn scaled(v: &Vector, k: i32) -> Vector {
    v * Complex64::new(2f64.powi(k), 0.0)
}

impl ControlFunction {
    pub fn pnorm(alpha: f64, beta: f64, p: f64) -> Result<Self, ControlError> {
        check_nonneg("alpha", alpha)?;
        check_nonneg("beta", beta)?;
        if !(p.is_finite() && p < 1.0) {
            return Err(ControlError::Parameter(format!("p must be finite and < 1, got {p}")));
        }
        Ok(Self::PNorm { alpha, beta, p })
    }

    pub fn constant(alpha: f64) -> Result<Self, ControlError> {
        check_nonneg("alpha", alpha)?;
        Ok(Self::Constant { alpha })
    }

    pub fn tabulated<F>(func: F, growth: f64) -> Result<Self, ControlError>
    where
        F: Fn(&Vector, &Vector) -> f64 + Send + Sync + 'static,
    {
        if !growth.is_finite() {
            return Err(ControlError::Parameter("growth exponent must be finite".into()));
        }
        if growth >= 1.0 {
            return Err(ControlError::Divergent(growth));
        }
        Ok(Self::Tabulated(Tabulated { func: Arc::new(func), growth, terms: DEFAULT_TERMS }))
    }

    pub fn from_spec(spec: &ControlSpec) -> Result<Self, ControlError> {
        match *spec {
            ControlSpec::Pnorm { alpha, beta, p } => Self::pnorm(alpha, beta, p),
            ControlSpec::Constant { alpha } => Self::constant(alpha),
        }
    }

    pub fn to_spec(&self) -> Option<ControlSpec> {
        match *self {
            Self::PNorm { alpha, beta, p } => Some(ControlSpec::Pnorm { alpha, beta, p }),
            Self::Constant { alpha } => Some(ControlSpec::Constant { alpha }),
            Self::Tabulated(_) => None,
        }
    }

    /// Only meaningful for the norm-based variants.
    fn norm_terms(&self) -> Option<(f64, f64, f64)> {
        match *self {
            Self::PNorm { alpha, beta, p } => Some((alpha, beta, p)),
            Self::Constant { alpha } => Some((alpha, 0.0, 0.0)),
            Self::Tabulated(_) => None,
        }
    }

    /// `φ(a, b)`.
    pub fn eval(&self, norm: &WeightedNorm, a: &Vector, b: &Vector) -> Result<f64, ControlError> {
        match self {
            Self::Tabulated(t) => {
                let v = (t.func)(a, b);
                if v.is_finite() && v >= 0.0 {
                    Ok(v)
                } else {
                    Err(ControlError::BadValue(v))
                }
            }
            _ => {
                let (alpha, beta, p) = self.norm_terms().unwrap();
                if beta == 0.0 {
                    return Ok(alpha);
                }
                Ok(alpha + beta * (pow_or_zero(norm.norm(a), p) + pow_or_zero(norm.norm(b), p)))
            }
        }
    }

    /// `φ̃(a, b)`: closed form for the norm-based variants, truncated series
    /// plus a geometric tail bound otherwise.
    pub fn tilde(&self, norm: &WeightedNorm, a: &Vector, b: &Vector) -> Result<ControlSum, ControlError> {
        self.tail_from(norm, a, b, 0)
    }

    /// `½ Σ_{k≥n} 2^{-k} φ(2ᵏa, 2ᵏb)`, the part of `φ̃` not yet consumed
    /// after `n` doubling steps.
    pub fn tail_from(&self, norm: &WeightedNorm, a: &Vector, b: &Vector, n: usize) -> Result<ControlSum, ControlError> {
        match self {
            Self::Tabulated(t) => self.truncated(t, norm, a, b, n),
            _ => {
                let (alpha, beta, p) = self.norm_terms().unwrap();
                let n = n as i32;
                let mut value = alpha * 2f64.powi(-n);
                if beta != 0.0 {
                    let s = pow_or_zero(norm.norm(a), p) + pow_or_zero(norm.norm(b), p);
                    value += beta * s * 2f64.powf(-(n as f64) * (1.0 - p)) / (2.0 - 2f64.powf(p));
                }
                Ok(ControlSum { value, truncation_n: None, tail_bound: 0.0 })
            }
        }
    }

    fn truncated(
        &self,
        t: &Tabulated,
        norm: &WeightedNorm,
        a: &Vector,
        b: &Vector,
        start: usize,
    ) -> Result<ControlSum, ControlError> {
        let q = t.growth;
        let mut value = 0.0;
        let mut scale = 0.0f64;
        for k in start..start + t.terms {
            let phi = self.eval(norm, &scaled(a, k as i32), &scaled(b, k as i32))?;
            value += 0.5 * 2f64.powi(-(k as i32)) * phi;
            scale = scale.max(phi * 2f64.powf(-(k as f64) * q));
        }
        let end = (start + t.terms) as f64;
        let tail_bound = 0.5 * scale * 2f64.powf(-end * (1.0 - q)) / (1.0 - 2f64.powf(q - 1.0));
        Ok(ControlSum { value, truncation_n: Some(t.terms), tail_bound })
    }

    /// `½ Σ_{k=0}^{n-1} 2^{-k} φ(2ᵏa, 2ᵏa)`.
    pub fn partial_sum_bound(&self, norm: &WeightedNorm, a: &Vector, n: usize) -> Result<f64, ControlError> {
        let mut sum = 0.0;
        for k in 0..n {
            let ak = scaled(a, k as i32);
            sum += 0.5 * 2f64.powi(-(k as i32)) * self.eval(norm, &ak, &ak)?;
        }
        Ok(sum)
    }

    /// `ψ(a) = φ̃(a, a)` as a certified upper bound.
    pub fn psi(&self, norm: &WeightedNorm, a: &Vector) -> Result<f64, ControlError> {
        Ok(self.tilde(norm, a, a)?.upper())
    }
}

/// Closed form `α + β(‖a‖ᵖ + ‖b‖ᵖ)/(2 − 2ᵖ)` from norms alone.
pub fn pnorm_closed_form(alpha: f64, beta: f64, p: f64, norm_a: f64, norm_b: f64) -> f64 {
    alpha + beta * (pow_or_zero(norm_a, p) + pow_or_zero(norm_b, p)) / (2.0 - 2f64.powf(p))
}
