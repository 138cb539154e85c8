//! (σ, τ)-derivations: Leibniz and multiplicativity residuals, the spaces of
//! derivations and inner derivations, the inner-derivation solver and the
//! contractibility / amenability decisions.
//!
//! A linear `D : A → X` is a derivation iff for all basis pairs
//! `D(e_i e_j) = D(e_i)·σ(e_j) + τ(e_i)·D(e_j)`, a linear system in `vec(D)`.
//! Inner derivations `d_x(a) = x·σ(a) − τ(a)·x` form the image of a linear map
//! `x ↦ vec(d_x)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{dual_bimodule, AlgebraError, Bimodule, FiniteAlgebra, LinearMap, SpaceTag};
use crate::control::ControlFunction;
use crate::hyers::{self, ExtractOptions, HyersError, LambdaMode, PointMap};
use crate::linalg::{self, Matrix, NullspaceTracker, SubspaceBasis, Vector, RANK_RTOL};
use crate::perturb;
use crate::sampling::SampleRng;

/// Projection residual above which a vector is outside a subspace.
pub const INCLUSION_TOL: f64 = 1e-9;
/// Basis-pair multiplicativity tolerance for σ and τ.
pub const ENDO_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum DerivationError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Hyers(#[from] HyersError),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DerivationTriple {
    pub d: LinearMap,
    pub sigma: LinearMap,
    pub tau: LinearMap,
}

impl DerivationTriple {
    pub fn check_shapes(&self, module: &Bimodule) -> Result<(), DerivationError> {
        let n = module.algebra().dim();
        let m = module.dim();
        let ok = self.d.matrix().shape() == (m, n)
            && self.sigma.matrix().shape() == (n, n)
            && self.tau.matrix().shape() == (n, n);
        if ok {
            Ok(())
        } else {
            Err(AlgebraError::Shape(format!(
                "triple shapes d {:?}, σ {:?}, τ {:?} incompatible with A (dim {n}) and X (dim {m})",
                self.d.matrix().shape(),
                self.sigma.matrix().shape(),
                self.tau.matrix().shape()
            ))
            .into())
        }
    }
}

/// `‖d(ab) − d(a)·σ(b) − τ(a)·d(b)‖`.
pub fn leibniz_residual(
    module: &Bimodule,
    t: &DerivationTriple,
    a: &Vector,
    b: &Vector,
) -> Result<f64, DerivationError> {
    t.check_shapes(module)?;
    let alg = module.algebra();
    let ab = alg.mul(a, b)?;
    let lhs = t.d.apply(&ab)?;
    let first = module.act_right(&t.d.apply(a)?, &t.sigma.apply(b)?)?;
    let second = module.act_left(&t.tau.apply(a)?, &t.d.apply(b)?)?;
    Ok(module.element_norm(&(lhs - first - second)))
}

/// Largest Leibniz residual over all basis pairs.
pub fn basis_leibniz_residual(module: &Bimodule, t: &DerivationTriple) -> Result<f64, DerivationError> {
    let alg = module.algebra();
    let mut worst = 0.0f64;
    for i in 0..alg.dim() {
        for j in 0..alg.dim() {
            worst = worst.max(leibniz_residual(module, t, &alg.basis(i), &alg.basis(j))?);
        }
    }
    Ok(worst)
}

/// `‖s(ab) − s(a)s(b)‖`.
pub fn endomorphism_residual(
    algebra: &FiniteAlgebra,
    s: &LinearMap,
    a: &Vector,
    b: &Vector,
) -> Result<f64, DerivationError> {
    let lhs = s.apply(&algebra.mul(a, b)?)?;
    let rhs = algebra.mul(&s.apply(a)?, &s.apply(b)?)?;
    Ok(algebra.element_norm(&(lhs - rhs)))
}

pub fn basis_endomorphism_residual(algebra: &FiniteAlgebra, s: &LinearMap) -> Result<f64, DerivationError> {
    if s.matrix().shape() != (algebra.dim(), algebra.dim()) {
        return Err(AlgebraError::Shape("endomorphism has the wrong shape".into()).into());
    }
    let mut worst = 0.0f64;
    for i in 0..algebra.dim() {
        for j in 0..algebra.dim() {
            worst = worst.max(endomorphism_residual(algebra, s, &algebra.basis(i), &algebra.basis(j))?);
        }
    }
    Ok(worst)
}

/// Evidence for "either `d = 0` or σ is multiplicative".
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SigmaCertificate {
    pub samples: usize,
    /// `max ‖d(c)·(σ(ab) − σ(a)σ(b))‖` over sampled triples.
    pub certificate_max: f64,
    pub tau_residual_max: f64,
    pub sigma_residual_max: f64,
    pub d_is_zero: bool,
    /// `ran A = {0}`.
    pub right_annihilator_trivial: bool,
    pub d_row_rank: usize,
    /// Row rank of `d` equals `dim X`.
    pub d_surjective: bool,
    /// Both side conditions hold, so a vanishing certificate forces σ to be
    /// multiplicative.
    pub side_conditions_hold: bool,
}

pub fn sigma_endo_certificate(
    module: &Bimodule,
    t: &DerivationTriple,
    samples: usize,
    seed: u64,
) -> Result<SigmaCertificate, DerivationError> {
    t.check_shapes(module)?;
    let alg = module.algebra();
    let mut rng = SampleRng::new(seed);
    let (mut cert, mut tau_r, mut sigma_r) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let a = rng.ball_point(alg.norm(), 1.0);
        let b = rng.ball_point(alg.norm(), 1.0);
        let c = rng.ball_point(alg.norm(), 1.0);
        let defect = t.sigma.apply(&alg.mul(&a, &b)?)? - alg.mul(&t.sigma.apply(&a)?, &t.sigma.apply(&b)?)?;
        let dc = t.d.apply(&c)?;
        cert = cert.max(module.element_norm(&module.act_right(&dc, &defect)?));
        tau_r = tau_r.max(endomorphism_residual(alg, &t.tau, &a, &b)?);
        sigma_r = sigma_r.max(alg.element_norm(&defect));
    }
    let ran_trivial = alg.right_annihilator().is_trivial();
    let row_rank = linalg::rank(t.d.matrix(), RANK_RTOL);
    let surjective = row_rank == module.dim();
    Ok(SigmaCertificate {
        samples,
        certificate_max: cert,
        tau_residual_max: tau_r,
        sigma_residual_max: sigma_r,
        d_is_zero: linalg::max_abs(t.d.matrix()) == 0.0,
        right_annihilator_trivial: ran_trivial,
        d_row_rank: row_rank,
        d_surjective: surjective,
        side_conditions_hold: ran_trivial && surjective,
    })
}

fn check_endo_shapes(module: &Bimodule, sigma: &LinearMap, tau: &LinearMap) -> Result<(), DerivationError> {
    let n = module.algebra().dim();
    for (name, s) in [("sigma", sigma), ("tau", tau)] {
        if s.matrix().shape() != (n, n) {
            return Err(AlgebraError::Shape(format!("{name} must be {n}x{n}")).into());
        }
    }
    Ok(())
}

/// Orthonormal basis (in `vec(D)` coordinates, column-major `m × n`) of all
/// linear `D : A → X` satisfying the (σ, τ)-Leibniz rule.
#[allow(clippy::needless_range_loop)]
pub fn derivation_space(
    module: &Bimodule,
    sigma: &LinearMap,
    tau: &LinearMap,
) -> Result<SubspaceBasis, DerivationError> {
    check_endo_shapes(module, sigma, tau)?;
    let alg = module.algebra();
    let (n, m) = (alg.dim(), module.dim());
    if m == 0 {
        return Ok(SubspaceBasis::empty(0));
    }
    let right_sigma: Vec<Matrix> =
        (0..n).map(|j| module.right_action_matrix(&sigma.matrix().column(j).into_owned())).collect::<Result<_, _>>()?;
    let left_tau: Vec<Matrix> =
        (0..n).map(|i| module.left_action_matrix(&tau.matrix().column(i).into_owned())).collect::<Result<_, _>>()?;
    let spectral = |a: &Matrix| a.singular_values().iter().cloned().fold(0.0, f64::max);
    let (r_norms, l_norms): (Vec<f64>, Vec<f64>) =
        (right_sigma.iter().map(spectral).collect(), left_tau.iter().map(spectral).collect());
    let mut scale = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let c: f64 = (0..n).map(|k| alg.structure_constant(i, j, k).norm()).sum();
            scale = scale.max(c + r_norms[j] + l_norms[i]);
        }
    }
    let mut tracker = NullspaceTracker::new(n * m);
    for i in 0..n {
        for j in 0..n {
            let r = tracker.dim();
            if r == 0 {
                break;
            }
            let basis = tracker.basis();
            let mut image = Matrix::zeros(m, r);
            for k in 0..n {
                let c = alg.structure_constant(i, j, k);
                if c != Complex64::new(0.0, 0.0) {
                    image += basis.rows(k * m, m) * c;
                }
            }
            image -= &right_sigma[j] * basis.rows(i * m, m);
            image -= &left_tau[i] * basis.rows(j * m, m);
            tracker.restrict(&image, RANK_RTOL * scale);
        }
    }
    Ok(tracker.finish())
}

/// Matrix of `x ↦ vec(d_x)`, `d_x(a) = x·σ(a) − τ(a)·x`.
pub fn inner_map_matrix(module: &Bimodule, sigma: &LinearMap, tau: &LinearMap) -> Result<Matrix, DerivationError> {
    check_endo_shapes(module, sigma, tau)?;
    let n = module.algebra().dim();
    let m = module.dim();
    let mut out = Matrix::zeros(n * m, m);
    for i in 0..n {
        let r = module.right_action_matrix(&sigma.matrix().column(i).into_owned())?;
        let l = module.left_action_matrix(&tau.matrix().column(i).into_owned())?;
        out.view_mut((i * m, 0), (m, m)).copy_from(&(r - l));
    }
    Ok(out)
}

/// The inner derivation `d_x` as a matrix.
pub fn inner_derivation(
    module: &Bimodule,
    sigma: &LinearMap,
    tau: &LinearMap,
    x: &Vector,
) -> Result<LinearMap, DerivationError> {
    let v = inner_map_matrix(module, sigma, tau)? * x;
    Ok(LinearMap::to_module(linalg::unvectorize(&v, module.dim(), module.algebra().dim()))?)
}

/// Orthonormal basis of `{vec(d_x) : x ∈ X}`.
pub fn inner_space(module: &Bimodule, sigma: &LinearMap, tau: &LinearMap) -> Result<SubspaceBasis, DerivationError> {
    let n = module.algebra().dim();
    let m = module.dim();
    if m == 0 {
        return Ok(SubspaceBasis::empty(0));
    }
    let mut basis = linalg::range(&inner_map_matrix(module, sigma, tau)?, RANK_RTOL);
    basis.ambient_dim = n * m;
    Ok(basis)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum InnerSolution {
    Inner {
        #[serde(with = "crate::io::complex_vector")]
        x: Vector,
        residual: f64,
    },
    Infeasible {
        residual: f64,
        #[serde(with = "crate::io::complex_vector")]
        best_x: Vector,
    },
}

/// Least-squares solution of `x·σ(e_i) − τ(e_i)·x = d(e_i)` for all `i`.
/// The residual is the operator norm of `d_x − d`.
pub fn inner_solve(module: &Bimodule, t: &DerivationTriple, tol: f64) -> Result<InnerSolution, DerivationError> {
    t.check_shapes(module)?;
    let alg = module.algebra();
    let d_norm = t.d.operator_norm(alg.norm(), module.norm());
    let scale = tol * (1.0 + d_norm);
    let leibniz = basis_leibniz_residual(module, t)?;
    if leibniz > scale {
        return Err(DerivationError::Precondition(format!(
            "d violates the Leibniz rule on basis pairs (residual {leibniz:e})"
        )));
    }
    let m = module.dim();
    if m == 0 {
        return Ok(InnerSolution::Inner { x: Vector::zeros(0), residual: 0.0 });
    }
    let system = inner_map_matrix(module, &t.sigma, &t.tau)?;
    let rhs = linalg::vectorize(t.d.matrix());
    let x = linalg::least_squares(&system, &rhs, RANK_RTOL);
    let dx = linalg::unvectorize(&(&system * &x), m, alg.dim());
    let residual = crate::algebra::operator_norm(&(dx - t.d.matrix()), alg.norm(), module.norm());
    if residual <= scale {
        Ok(InnerSolution::Inner { x, residual })
    } else {
        Ok(InnerSolution::Infeasible { residual, best_x: x })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Contractible,
    NotContractible,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContractibilityReport {
    pub derivation_dim: usize,
    pub inner_dim: usize,
    /// `dim(derivations ∩ inner derivations)`.
    pub intersection_dim: usize,
    pub verdict: Verdict,
    /// A derivation orthogonal to the inner ones, when not contractible.
    pub witness: Option<LinearMap>,
    /// Largest projection residual of a derivation basis vector onto the inner space.
    pub max_projection_residual: f64,
}

fn check_endomorphisms(alg: &FiniteAlgebra, sigma: &LinearMap, tau: &LinearMap) -> Result<(), DerivationError> {
    for (name, s) in [("sigma", sigma), ("tau", tau)] {
        let r = basis_endomorphism_residual(alg, s)?;
        if r > ENDO_TOL {
            return Err(DerivationError::Precondition(format!("{name} is not multiplicative (basis residual {r:e})")));
        }
    }
    Ok(())
}

/// Scales `v` so its largest-modulus entry is exactly 1.
fn normalize_phase(v: &Vector) -> Vector {
    if v.is_empty() {
        return v.clone();
    }
    let k = (0..v.len()).fold(0, |best, i| if v[i].norm() > v[best].norm() { i } else { best });
    if v[k] == Complex64::new(0.0, 0.0) {
        return v.clone();
    }
    v / v[k]
}

pub fn is_contractible(
    module: &Bimodule,
    sigma: &LinearMap,
    tau: &LinearMap,
) -> Result<ContractibilityReport, DerivationError> {
    check_endo_shapes(module, sigma, tau)?;
    check_endomorphisms(module.algebra(), sigma, tau)?;
    let ders = derivation_space(module, sigma, tau)?;
    let inner = inner_space(module, sigma, tau)?;
    let mut witness = None;
    let mut worst = 0.0f64;
    for v in &ders.vectors {
        let r = inner.residual(v);
        worst = worst.max(r);
        if r > INCLUSION_TOL && witness.is_none() {
            let outside = normalize_phase(&(v - inner.project(v)));
            let mat = linalg::unvectorize(&outside, module.dim(), module.algebra().dim());
            witness = Some(LinearMap::new(mat, SpaceTag::Algebra, SpaceTag::Module)?);
        }
    }
    let intersection_dim = intersection_dim(&ders, &inner);
    let verdict = if witness.is_none() { Verdict::Contractible } else { Verdict::NotContractible };
    Ok(ContractibilityReport {
        derivation_dim: ders.dim(),
        inner_dim: inner.dim(),
        intersection_dim,
        verdict,
        witness,
        max_projection_residual: worst,
    })
}

fn intersection_dim(a: &SubspaceBasis, b: &SubspaceBasis) -> usize {
    if a.dim() == 0 || b.dim() == 0 {
        return 0;
    }
    let mut joint = Matrix::zeros(a.ambient_dim, a.dim() + b.dim());
    for (k, v) in a.vectors.iter().chain(&b.vectors).enumerate() {
        joint.set_column(k, v);
    }
    a.dim() + b.dim() - linalg::rank(&joint, RANK_RTOL)
}

/// Contractibility with coefficients in the dual module `X*`.
pub fn is_amenable(
    module: &Bimodule,
    sigma: &LinearMap,
    tau: &LinearMap,
) -> Result<ContractibilityReport, DerivationError> {
    is_contractible(&dual_bimodule(module)?, sigma, tau)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoundtripOptions {
    pub tol: f64,
    pub samples: usize,
    pub seed: u64,
    pub lambda_mode: LambdaMode,
    pub extract: ExtractOptions,
}

impl Default for RoundtripOptions {
    fn default() -> Self {
        Self { tol: 1e-9, samples: 1000, seed: 0, lambda_mode: LambdaMode::Full, extract: ExtractOptions::default() }
    }
}

/// Scaling exponent of the converse check.
pub const CONVERSE_EXPONENT: i32 = 40;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RoundtripOutcome {
    /// `f` is uniformly close to the inner derivation `d_x`.
    Inner {
        #[serde(with = "crate::io::complex_vector")]
        x: Vector,
        inner_residual: f64,
        /// `max ‖x·σ(a) − τ(a)·x − f(a)‖` over the samples.
        beta: f64,
        /// `max φ̃(a, a)` over the samples.
        alpha: f64,
        within_bound: bool,
        /// `max ‖d_x(2⁴⁰u) − f(2⁴⁰u)‖ / 2⁴⁰` over unit-norm `u`.
        converse_scaled_residual: f64,
    },
    /// The limit derivation is not inner: no `x` is even approximately inner,
    /// since a uniform bound would survive `a ↦ 2ⁿa` only if the defect is 0.
    NotInner { witness: LinearMap, residual: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoundtripReport {
    pub hypotheses: perturb::HypothesisReport,
    pub extraction: hyers::ExtractionReport,
    #[serde(flatten)]
    pub outcome: RoundtripOutcome,
}

/// From an approximate (σ, τ)-derivation `f`, either produces `x` with
/// `‖x·σ(a) − τ(a)·x − f(a)‖ ≤ β` or certifies that the exact limit of `f`
/// is not inner.
pub fn approx_contractibility_roundtrip(
    module: &Bimodule,
    f: &PointMap,
    phi: &ControlFunction,
    sigma: &LinearMap,
    tau: &LinearMap,
    opts: &RoundtripOptions,
) -> Result<RoundtripReport, DerivationError> {
    check_endo_shapes(module, sigma, tau)?;
    let alg = module.algebra();
    let g1 = PointMap::linear(sigma.matrix().clone());
    let g2 = PointMap::linear(tau.matrix().clone());
    let hypotheses = perturb::verify_hypotheses(
        module,
        f,
        &g1,
        &g2,
        phi,
        &perturb::VerifyOptions {
            lambda_mode: opts.lambda_mode,
            samples: opts.samples,
            seed: opts.seed,
            check_multiplicativity: false,
            radius: None,
        },
    )?;
    if !hypotheses.satisfied() {
        return Err(DerivationError::Precondition(format!(
            "f is not an approximate derivation for this control: {}",
            hypotheses.summary()
        )));
    }
    let extraction = hyers::extract_additive(alg, module.norm(), SpaceTag::Module, f, phi, &opts.extract)?;
    let triple = DerivationTriple { d: extraction.limit.clone(), sigma: sigma.clone(), tau: tau.clone() };
    let outcome = match inner_solve(module, &triple, opts.tol)? {
        InnerSolution::Inner { x, residual } => {
            let dx = inner_derivation(module, sigma, tau, &x)?;
            let mut rng = SampleRng::new(opts.seed ^ 0x5eed_0b5e);
            let (mut beta, mut alpha, mut converse) = (0.0f64, 0.0f64, 0.0f64);
            let big = Complex64::new(2f64.powi(CONVERSE_EXPONENT), 0.0);
            for k in 0..opts.samples {
                let a = rng.ladder_point(alg.norm(), k);
                beta = beta.max(module.element_norm(&(dx.apply(&a)? - f.eval(&a)?)));
                alpha = alpha.max(phi.psi(alg.norm(), &a).map_err(HyersError::from)?);
                let u = rng.sphere_point(alg.norm(), 1.0);
                let scaled = &u * big;
                let defect = (dx.apply(&scaled)? - f.eval(&scaled)?) / big;
                converse = converse.max(module.element_norm(&defect));
            }
            let within_bound = beta <= alpha + residual * 16.0 + opts.tol;
            RoundtripOutcome::Inner {
                x,
                inner_residual: residual,
                beta,
                alpha,
                within_bound,
                converse_scaled_residual: converse,
            }
        }
        InnerSolution::Infeasible { residual, .. } => RoundtripOutcome::NotInner { witness: triple.d, residual },
    };
    Ok(RoundtripReport { hypotheses, extraction, outcome })
}
