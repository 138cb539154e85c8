//! The direct method: exact additive limits `d(a) = lim f(2ⁿa)/2ⁿ` of
//! approximately additive maps, with convergence certificates and a sampled
//! check of the stability bound `‖f(a) − d(a)‖ ≤ φ̃(a, a)`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AlgebraError, Bimodule, FiniteAlgebra, LinearMap, SpaceTag, WeightedNorm};
use crate::control::{ControlError, ControlFunction};
use crate::derivation::{leibniz_residual, DerivationTriple};
use crate::linalg::{Matrix, Vector};
use crate::sampling::SampleRng;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_N: usize = 48;
/// Consecutive small deltas required before the delta rule stops.
pub const DELTA_RUN: usize = 3;
/// Slack allowed on the sampled stability bound.
pub const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum HyersError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("no convergence at basis element {basis} after {iterations} doublings: last delta {last_delta:e}, certified tail {tail:e}")]
    NoConvergence { basis: usize, iterations: usize, last_delta: f64, tail: f64 },
    #[error("limit is not additive: defect {defect:e} exceeds {allowed:e}")]
    NotAdditive { defect: f64, allowed: f64 },
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

type Evaluator = dyn Fn(&Vector) -> Vector + Send + Sync;

/// A black-box map with `f(0) = 0`, evaluated deterministically.
#[derive(Clone)]
pub struct PointMap {
    domain_dim: usize,
    codomain_dim: usize,
    eval: Arc<Evaluator>,
}

impl fmt::Debug for PointMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PointMap({} -> {})", self.domain_dim, self.codomain_dim)
    }
}

impl PointMap {
    /// Wraps `eval`; fails unless `eval(0)` is exactly zero.
    pub fn new<F>(domain_dim: usize, codomain_dim: usize, eval: F) -> Result<Self, HyersError>
    where
        F: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        let map = Self { domain_dim, codomain_dim, eval: Arc::new(eval) };
        let at_zero = map.eval(&Vector::zeros(domain_dim))?;
        if at_zero.iter().any(|z| *z != Complex64::new(0.0, 0.0)) {
            return Err(HyersError::Precondition("f(0) != 0".into()));
        }
        Ok(map)
    }

    pub fn linear(matrix: Matrix) -> Self {
        let (rows, cols) = matrix.shape();
        Self::new(cols, rows, move |a| &matrix * a).expect("linear maps fix 0")
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain_dim
    }

    pub fn eval(&self, a: &Vector) -> Result<Vector, HyersError> {
        if a.len() != self.domain_dim {
            return Err(AlgebraError::Dimension { expected: self.domain_dim, found: a.len() }.into());
        }
        let out = (self.eval)(a);
        if out.len() != self.codomain_dim {
            return Err(AlgebraError::Dimension { expected: self.codomain_dim, found: out.len() }.into());
        }
        Ok(out)
    }
}

/// Which `λ ∈ T` hypothesis checks range over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaMode {
    /// The 64th roots of unity.
    #[default]
    Full,
    /// Only `λ ∈ {1, i}`; extraction is unaffected.
    OneI,
}

impl LambdaMode {
    pub fn restricted(flag: bool) -> Self {
        if flag {
            Self::OneI
        } else {
            Self::Full
        }
    }

    pub fn lambdas(&self) -> Vec<Complex64> {
        match self {
            Self::Full => {
                (0..64).map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 64.0)).collect()
            }
            Self::OneI => vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)],
        }
    }
}

/// `‖d(λa) − λ d(a)‖` in the codomain norm.
pub fn homogeneity_defect(
    d: &LinearMap,
    lambda: Complex64,
    a: &Vector,
    codomain: &WeightedNorm,
) -> Result<f64, AlgebraError> {
    let lhs = d.apply(&(a * lambda))?;
    let rhs = d.apply(a)? * lambda;
    Ok(codomain.norm(&(lhs - rhs)))
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ExtractOptions {
    pub max_n: usize,
    pub tol: f64,
    /// Seeded points for the stability-bound check in the report.
    pub bound_samples: usize,
    /// Random pairs for the post-hoc additivity check.
    pub additivity_pairs: usize,
    pub seed: u64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self { max_n: DEFAULT_MAX_N, tol: DEFAULT_TOL, bound_samples: 64, additivity_pairs: 4, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopRule {
    /// `‖sₙ − sₙ₋₁‖` is exactly 0, or at most `tol` for `DELTA_RUN` consecutive steps.
    Delta,
    /// The certified remaining error `½ Σ_{k≥n} 2^{-k} φ(2ᵏa, 2ᵏa)` is below `tol`.
    Tail,
}

/// The iterates `sₙ = f(2ⁿa)/2ⁿ` at one point.
#[derive(Clone, Debug)]
pub struct PointLimit {
    pub value: Vector,
    pub iterations: usize,
    pub final_delta: f64,
    /// Certified bound on the distance from `value` to the exact limit.
    pub tail: f64,
    pub rule: StopRule,
}

pub fn pointwise_limit(
    f: &PointMap,
    a: &Vector,
    domain: &WeightedNorm,
    codomain: &WeightedNorm,
    phi: &ControlFunction,
    max_n: usize,
    tol: f64,
) -> Result<PointLimit, HyersError> {
    let mut current = f.eval(a)?;
    let mut n = 0usize;
    let mut delta = 0.0f64;
    let mut small_run = 0usize;
    loop {
        let tail = phi.tail_from(domain, a, a, n)?.upper();
        if tail <= tol {
            return Ok(PointLimit { value: current, iterations: n, final_delta: delta, tail, rule: StopRule::Tail });
        }
        if n >= max_n {
            return Err(HyersError::NoConvergence { basis: usize::MAX, iterations: n, last_delta: delta, tail });
        }
        n += 1;
        let scale = 2f64.powi(n as i32);
        let next = f.eval(&(a * Complex64::new(scale, 0.0)))? / Complex64::new(scale, 0.0);
        delta = codomain.norm(&(&next - &current));
        current = next;
        small_run = if delta <= tol { small_run + 1 } else { 0 };
        if delta == 0.0 || small_run >= DELTA_RUN {
            let tail = phi.tail_from(domain, a, a, n)?.upper();
            return Ok(PointLimit { value: current, iterations: n, final_delta: delta, tail, rule: StopRule::Delta });
        }
    }
}

/// One sampled instance of `‖f(a) − d(a)‖ ≤ φ̃(a, a)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundSample {
    #[serde(with = "crate::io::complex_vector")]
    pub point: Vector,
    pub realized: f64,
    pub envelope: f64,
}

impl BoundSample {
    pub fn violation(&self) -> f64 {
        self.realized - self.envelope
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityReport {
    pub samples: usize,
    pub violations: usize,
    /// `max(realized − envelope)`; nonpositive when the bound holds.
    pub max_violation: f64,
    pub max_realized: f64,
    pub min_envelope: f64,
    pub worst: Option<BoundSample>,
}

impl StabilityReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub limit: LinearMap,
    pub per_basis_iterations: Vec<usize>,
    pub per_basis_final_delta: Vec<f64>,
    pub per_basis_tail: Vec<f64>,
    pub per_basis_rule: Vec<StopRule>,
    pub additivity_defect: f64,
    pub bound_check: Vec<BoundSample>,
}

impl ExtractionReport {
    pub fn matrix(&self) -> &Matrix {
        self.limit.matrix()
    }
}

/// Extracts the additive limit of `f : A → Y` on the basis of `A` and
/// assembles it into a matrix. `codomain` is the norm of `Y`.
pub fn extract_additive(
    algebra: &FiniteAlgebra,
    codomain: &WeightedNorm,
    codomain_tag: SpaceTag,
    f: &PointMap,
    phi: &ControlFunction,
    opts: &ExtractOptions,
) -> Result<ExtractionReport, HyersError> {
    let n = algebra.dim();
    if f.domain_dim() != n || f.codomain_dim() != codomain.dim() {
        return Err(HyersError::Precondition(format!(
            "map is {} -> {}, spaces are {} -> {}",
            f.domain_dim(),
            f.codomain_dim(),
            n,
            codomain.dim()
        )));
    }
    let domain = algebra.norm();
    let limits: Vec<PointLimit> = (0..n)
        .into_par_iter()
        .map(|i| {
            pointwise_limit(f, &algebra.basis(i), domain, codomain, phi, opts.max_n, opts.tol).map_err(|e| match e {
                HyersError::NoConvergence { iterations, last_delta, tail, .. } => {
                    HyersError::NoConvergence { basis: i, iterations, last_delta, tail }
                }
                other => other,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut m = Matrix::zeros(codomain.dim(), n);
    for (i, l) in limits.iter().enumerate() {
        m.set_column(i, &l.value);
    }
    let limit = LinearMap::new(m, SpaceTag::Algebra, codomain_tag)?;

    let additivity_defect = check_additivity(f, &limit, domain, codomain, phi, opts)?;
    let stability = sample_stability(f, &limit, domain, codomain, phi, opts.bound_samples, opts.seed)?;

    Ok(ExtractionReport {
        limit,
        per_basis_iterations: limits.iter().map(|l| l.iterations).collect(),
        per_basis_final_delta: limits.iter().map(|l| l.final_delta).collect(),
        per_basis_tail: limits.iter().map(|l| l.tail).collect(),
        per_basis_rule: limits.iter().map(|l| l.rule).collect(),
        additivity_defect,
        bound_check: stability,
    })
}

/// Compares pointwise limits at random `a`, `b`, `a + b` with each other and
/// with the assembled matrix.
fn check_additivity(
    f: &PointMap,
    d: &LinearMap,
    domain: &WeightedNorm,
    codomain: &WeightedNorm,
    phi: &ControlFunction,
    opts: &ExtractOptions,
) -> Result<f64, HyersError> {
    let mut rng = SampleRng::new(opts.seed ^ 0xadd1_7100);
    let mut worst = 0.0f64;
    let limit = |p: &Vector| pointwise_limit(f, p, domain, codomain, phi, opts.max_n, opts.tol).map(|l| l.value);
    for _ in 0..opts.additivity_pairs {
        let a = rng.ball_point(domain, 1.0);
        let b = rng.ball_point(domain, 1.0);
        let sum = &a + &b;
        let (la, lb, lsum) = (limit(&a)?, limit(&b)?, limit(&sum)?);
        let pair_defect = codomain.norm(&(&lsum - &la - &lb));
        let scale = 1.0 + sum.iter().map(|z| z.norm()).sum::<f64>();
        let matrix_defect = codomain.norm(&(&lsum - d.apply(&sum)?)) / scale;
        let defect = pair_defect.max(matrix_defect);
        let allowed = 10.0 * opts.tol;
        if defect > allowed {
            return Err(HyersError::NotAdditive { defect, allowed });
        }
        worst = worst.max(defect);
    }
    Ok(worst)
}

fn sample_stability(
    f: &PointMap,
    d: &LinearMap,
    domain: &WeightedNorm,
    codomain: &WeightedNorm,
    phi: &ControlFunction,
    samples: usize,
    seed: u64,
) -> Result<Vec<BoundSample>, HyersError> {
    let mut rng = SampleRng::new(seed);
    let points: Vec<Vector> = (0..samples).map(|k| rng.ladder_point(domain, k)).collect();
    stability_at(f, d, domain, codomain, phi, &points)
}

/// Evaluates both sides of the stability bound at the given points.
pub fn stability_at(
    f: &PointMap,
    d: &LinearMap,
    domain: &WeightedNorm,
    codomain: &WeightedNorm,
    phi: &ControlFunction,
    points: &[Vector],
) -> Result<Vec<BoundSample>, HyersError> {
    points
        .iter()
        .map(|a| {
            let realized = codomain.norm(&(f.eval(a)? - d.apply(a)?));
            let envelope = phi.psi(domain, a)?;
            Ok(BoundSample { point: a.clone(), realized, envelope })
        })
        .collect()
}

pub fn summarize(samples: &[BoundSample]) -> StabilityReport {
    let mut report = StabilityReport {
        samples: samples.len(),
        violations: 0,
        max_violation: f64::NEG_INFINITY,
        max_realized: 0.0,
        min_envelope: f64::INFINITY,
        worst: None,
    };
    for s in samples {
        let v = s.violation();
        if v > BOUND_SLACK {
            report.violations += 1;
        }
        if v > report.max_violation {
            report.max_violation = v;
            report.worst = Some(s.clone());
        }
        report.max_realized = report.max_realized.max(s.realized);
        report.min_envelope = report.min_envelope.min(s.envelope);
    }
    if samples.is_empty() {
        report.max_violation = 0.0;
        report.min_envelope = 0.0;
    }
    report
}

/// Samples `‖f(a) − d(a)‖ ≤ φ̃(a, a)` on seeded points drawn from the unit
/// ball scaled by ¼, 1, 4 and 16.
pub fn verify_stability_bound(
    algebra: &FiniteAlgebra,
    codomain: &WeightedNorm,
    f: &PointMap,
    d: &LinearMap,
    phi: &ControlFunction,
    samples: usize,
    seed: u64,
) -> Result<StabilityReport, HyersError> {
    let pts = sample_stability(f, d, algebra.norm(), codomain, phi, samples, seed)?;
    Ok(summarize(&pts))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TripleReport {
    pub d: ExtractionReport,
    pub sigma: ExtractionReport,
    pub tau: ExtractionReport,
    pub leibniz_samples: usize,
    pub leibniz_max: f64,
    pub leibniz_tol: f64,
}

impl TripleReport {
    pub fn leibniz_ok(&self) -> bool {
        self.leibniz_max <= self.leibniz_tol
    }

    pub fn triple(&self) -> DerivationTriple {
        DerivationTriple { d: self.d.limit.clone(), sigma: self.sigma.limit.clone(), tau: self.tau.limit.clone() }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LeibnizCheck {
    pub samples: usize,
    pub tol: f64,
}

impl Default for LeibnizCheck {
    fn default() -> Self {
        Self { samples: 500, tol: 1e-9 }
    }
}

/// Extracts `d`, `σ`, `τ` from `f : A → X` and `g₁, g₂ : A → A` and checks
/// the Leibniz rule of the limits on seeded unit-ball pairs.
pub fn extract_triple(
    module: &Bimodule,
    f: &PointMap,
    g1: &PointMap,
    g2: &PointMap,
    phi: &ControlFunction,
    opts: &ExtractOptions,
    leibniz: &LeibnizCheck,
) -> Result<TripleReport, HyersError> {
    let alg = module.algebra();
    let d = extract_additive(alg, module.norm(), SpaceTag::Module, f, phi, opts)?;
    let sigma = extract_additive(alg, alg.norm(), SpaceTag::Algebra, g1, phi, opts)?;
    let tau = extract_additive(alg, alg.norm(), SpaceTag::Algebra, g2, phi, opts)?;
    let triple = DerivationTriple { d: d.limit.clone(), sigma: sigma.limit.clone(), tau: tau.limit.clone() };
    let mut rng = SampleRng::new(opts.seed ^ 0x1e1b_2172);
    let mut worst = 0.0f64;
    for _ in 0..leibniz.samples {
        let a = rng.ball_point(alg.norm(), 1.0);
        let b = rng.ball_point(alg.norm(), 1.0);
        let r = leibniz_residual(module, &triple, &a, &b).map_err(|e| HyersError::Precondition(e.to_string()))?;
        worst = worst.max(r);
    }
    Ok(TripleReport { d, sigma, tau, leibniz_samples: leibniz.samples, leibniz_max: worst, leibniz_tol: leibniz.tol })
}
