//! Manufactured approximate derivations, and sampled verification of the
//! additivity, Leibniz and multiplicativity hypotheses of arbitrary maps.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{Bimodule, LinearMap};
use crate::control::{ControlError, ControlFunction, ControlSpec};
use crate::derivation::{basis_leibniz_residual, DerivationError, DerivationTriple};
use crate::hyers::{HyersError, LambdaMode, PointMap};
use crate::linalg::{SubspaceBasis, Vector};
use crate::sampling::{keyed_rng, SampleRng, SCALE_LADDER};

/// Absolute slack added to `φ` when forming residual ratios.
pub const RATIO_SLACK: f64 = 1e-12;
/// Largest Leibniz residual tolerated in the unperturbed triple.
pub const BASE_TRIPLE_TOL: f64 = 1e-9;

const NOISE_STREAM: u64 = 0x6e_6f69_7365;
const DIRECTION_STREAM: u64 = 0x6469_7265_6374;

#[derive(Debug, Error)]
pub enum PerturbError {
    #[error("invalid perturbation: {0}")]
    Spec(String),
    #[error("the annihilator subspace is trivial; extend the module with a trivial-action summand before perturbing with epsilon > 0")]
    TrivialAnnihilator,
    #[error("perturbation direction is not annihilated by the module actions (residual {0:e})")]
    NotAnnihilated(f64),
    #[error(transparent)]
    Derivation(#[from] DerivationError),
    #[error(transparent)]
    Hyers(#[from] HyersError),
    #[error(transparent)]
    Control(#[from] ControlError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PerturbationSpec {
    /// `f = d + η` with `η` valued in the two-sided annihilator and `‖η‖ ≤ ε`.
    Annihilator { epsilon: f64, seed: u64 },
    /// `f = d + η` with `‖η(a)‖` budgeted against `control`, cut off smoothly
    /// between `region_radius` and twice that.
    Clamped {
        control: ControlSpec,
        region_radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cap: Option<f64>,
        seed: u64,
    },
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<(), PerturbError> {
        match self {
            Self::Annihilator { epsilon, .. } => {
                if !(epsilon.is_finite() && *epsilon >= 0.0) {
                    return Err(PerturbError::Spec(format!("epsilon must be finite and >= 0, got {epsilon}")));
                }
            }
            Self::Clamped { control, region_radius, cap, .. } => {
                ControlFunction::from_spec(control)?;
                if !(region_radius.is_finite() && *region_radius > 0.0) {
                    return Err(PerturbError::Spec(format!(
                        "region_radius must be finite and > 0, got {region_radius}"
                    )));
                }
                if let Some(c) = cap {
                    if !(c.is_finite() && *c >= 0.0) {
                        return Err(PerturbError::Spec(format!("cap must be finite and >= 0, got {c}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        match self {
            Self::Annihilator { seed, .. } | Self::Clamped { seed, .. } => *seed,
        }
    }
}

/// Which hypothesis a residual belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    /// `‖f(λa + λb) − λf(a) − λf(b)‖ ≤ φ(a, b)`.
    Additivity,
    /// The same for `g₁` and `g₂`.
    TwistAdditivity,
    /// `‖f(ab) − f(a)g₁(b) − g₂(a)f(b)‖ ≤ φ(a, b)`.
    Leibniz,
    /// `‖g₂(ab) − g₂(a)g₂(b)‖ ≤ φ(a, b)`.
    Multiplicativity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub hypothesis: Hypothesis,
    #[serde(with = "crate::io::complex_vector")]
    pub a: Vector,
    #[serde(with = "crate::io::complex_vector")]
    pub b: Vector,
    #[serde(with = "crate::io::complex_scalar")]
    pub lambda: Complex64,
    pub residual: f64,
    pub control: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum HypothesisVerdict {
    Satisfied,
    Violated { witness: Witness },
}

/// Worst sampled ratios `residual / (φ + RATIO_SLACK)`; a verdict is
/// satisfied iff all are at most 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub eq2_max: f64,
    pub eq3_max: f64,
    pub eq4_max: f64,
    pub eq6_max: f64,
    pub eq6_checked: bool,
    pub samples: usize,
    pub verdict: HypothesisVerdict,
}

impl HypothesisReport {
    pub fn satisfied(&self) -> bool {
        matches!(self.verdict, HypothesisVerdict::Satisfied)
    }

    pub fn worst_ratio(&self) -> f64 {
        self.eq2_max.max(self.eq3_max).max(self.eq4_max).max(self.eq6_max)
    }

    pub fn summary(&self) -> String {
        format!(
            "ratios eq2 {:.3e}, eq3 {:.3e}, eq4 {:.3e}, eq6 {:.3e} over {} samples",
            self.eq2_max, self.eq3_max, self.eq4_max, self.eq6_max, self.samples
        )
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub lambda_mode: LambdaMode,
    pub samples: usize,
    pub seed: u64,
    /// Also check approximate multiplicativity of `g₂`.
    pub check_multiplicativity: bool,
    /// Largest sampling radius; the scale ladder is shrunk to fit.
    pub radius: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { lambda_mode: LambdaMode::Full, samples: 1000, seed: 0, check_multiplicativity: true, radius: None }
    }
}

struct Tracker {
    worst: [f64; 4],
    witness: Option<Witness>,
    witness_ratio: f64,
}

impl Tracker {
    fn record(&mut self, h: Hypothesis, ratio: f64, make: impl FnOnce() -> Witness) {
        let slot = match h {
            Hypothesis::Additivity => 0,
            Hypothesis::TwistAdditivity => 1,
            Hypothesis::Leibniz => 2,
            Hypothesis::Multiplicativity => 3,
        };
        self.worst[slot] = self.worst[slot].max(ratio);
        if ratio > 1.0 && ratio > self.witness_ratio {
            self.witness_ratio = ratio;
            self.witness = Some(make());
        }
    }
}

/// Samples seeded pairs `(a, b)` across the scale ladder and records the
/// worst residual ratio of each hypothesis. In `Full` mode `λ` cycles
/// through the 64th roots of unity by sample index; in `OneI` mode both
/// `λ = 1` and `λ = i` are checked on every pair.
pub fn verify_hypotheses(
    module: &Bimodule,
    f: &PointMap,
    g1: &PointMap,
    g2: &PointMap,
    phi: &ControlFunction,
    opts: &VerifyOptions,
) -> Result<HypothesisReport, HyersError> {
    let alg = module.algebra();
    let (n, m) = (alg.dim(), module.dim());
    if f.domain_dim() != n || f.codomain_dim() != m {
        return Err(HyersError::Precondition(format!("f must map C^{n} to C^{m}")));
    }
    for g in [g1, g2] {
        if g.domain_dim() != n || g.codomain_dim() != n {
            return Err(HyersError::Precondition(format!("g must map C^{n} to C^{n}")));
        }
    }
    let ladder_top = SCALE_LADDER[SCALE_LADDER.len() - 1];
    let shrink = opts.radius.map_or(1.0, |r| r / ladder_top);
    let lambdas = opts.lambda_mode.lambdas();
    let mut rng = SampleRng::new(opts.seed);
    let mut t = Tracker { worst: [0.0; 4], witness: None, witness_ratio: 1.0 };
    let ratio = |r: f64, c: f64| r / (c + RATIO_SLACK);

    for k in 0..opts.samples {
        let radius = SCALE_LADDER[k % SCALE_LADDER.len()] * shrink;
        let a = rng.ball_point(alg.norm(), radius);
        let b = rng.ball_point(alg.norm(), radius);
        let control = phi.eval(alg.norm(), &a, &b)?;
        let lams: Vec<Complex64> = match opts.lambda_mode {
            LambdaMode::Full => vec![lambdas[k % lambdas.len()]],
            LambdaMode::OneI => lambdas.clone(),
        };
        for lam in lams {
            let sum = (&a + &b) * lam;
            let r = module.element_norm(&(f.eval(&sum)? - f.eval(&a)? * lam - f.eval(&b)? * lam));
            t.record(Hypothesis::Additivity, ratio(r, control), || {
                witness(Hypothesis::Additivity, &a, &b, lam, r, control)
            });
            for g in [g1, g2] {
                let r = alg.element_norm(&(g.eval(&sum)? - g.eval(&a)? * lam - g.eval(&b)? * lam));
                t.record(Hypothesis::TwistAdditivity, ratio(r, control), || {
                    witness(Hypothesis::TwistAdditivity, &a, &b, lam, r, control)
                });
            }
        }
        let one = Complex64::new(1.0, 0.0);
        let ab = alg.mul(&a, &b)?;
        let fa = f.eval(&a)?;
        let fb = f.eval(&b)?;
        let g2a = g2.eval(&a)?;
        let leib = f.eval(&ab)? - module.act_right(&fa, &g1.eval(&b)?)? - module.act_left(&g2a, &fb)?;
        let r = module.element_norm(&leib);
        t.record(Hypothesis::Leibniz, ratio(r, control), || witness(Hypothesis::Leibniz, &a, &b, one, r, control));
        if opts.check_multiplicativity {
            let r = alg.element_norm(&(g2.eval(&ab)? - alg.mul(&g2a, &g2.eval(&b)?)?));
            t.record(Hypothesis::Multiplicativity, ratio(r, control), || {
                witness(Hypothesis::Multiplicativity, &a, &b, one, r, control)
            });
        }
    }
    let verdict = match t.witness {
        Some(w) => HypothesisVerdict::Violated { witness: w },
        None => HypothesisVerdict::Satisfied,
    };
    Ok(HypothesisReport {
        eq2_max: t.worst[0],
        eq3_max: t.worst[1],
        eq4_max: t.worst[2],
        eq6_max: t.worst[3],
        eq6_checked: opts.check_multiplicativity,
        samples: opts.samples,
        verdict,
    })
}

fn witness(h: Hypothesis, a: &Vector, b: &Vector, lambda: Complex64, residual: f64, control: f64) -> Witness {
    Witness { hypothesis: h, a: a.clone(), b: b.clone(), lambda, residual, control }
}

fn twists(t: &DerivationTriple) -> (PointMap, PointMap) {
    (PointMap::linear(t.sigma.matrix().clone()), PointMap::linear(t.tau.matrix().clone()))
}

fn check_base_triple(module: &Bimodule, t: &DerivationTriple) -> Result<(), PerturbError> {
    t.check_shapes(module)?;
    let r = basis_leibniz_residual(module, t)?;
    if r > BASE_TRIPLE_TOL {
        return Err(PerturbError::Derivation(DerivationError::Precondition(format!(
            "unperturbed map is not a derivation (basis Leibniz residual {r:e})"
        ))));
    }
    Ok(())
}

fn is_origin(a: &Vector) -> bool {
    a.iter().all(|z| *z == Complex64::new(0.0, 0.0))
}

pub struct AnnihilatorPerturbation {
    pub f: PointMap,
    pub g1: PointMap,
    pub g2: PointMap,
    /// `Constant(3ε)`, valid for every pair, not only sampled ones.
    pub certified_control: ControlFunction,
}

/// `f(a) = d(a) + ε·c(a)·z` with `z ∈ Z` of norm 1 and `c(a)` a point of the
/// unit disk keyed by `(seed, a)`. Since `X·z`-type cross terms vanish, the
/// Leibniz defect of `f` is exactly `η(ab)`.
pub fn make_annihilator_perturbation(
    module: &Bimodule,
    d0: &DerivationTriple,
    spec: &PerturbationSpec,
    z_space: &SubspaceBasis,
) -> Result<AnnihilatorPerturbation, PerturbError> {
    spec.validate()?;
    let PerturbationSpec::Annihilator { epsilon, seed } = *spec else {
        return Err(PerturbError::Spec("expected an annihilator perturbation".into()));
    };
    check_base_triple(module, d0)?;
    let (g1, g2) = twists(d0);
    let dmat = d0.d.matrix().clone();
    let (n, m) = (module.algebra().dim(), module.dim());
    let certified_control = ControlFunction::constant(3.0 * epsilon)?;
    if epsilon == 0.0 {
        let f = PointMap::linear(dmat);
        return Ok(AnnihilatorPerturbation { f, g1, g2, certified_control });
    }
    if z_space.is_trivial() {
        return Err(PerturbError::TrivialAnnihilator);
    }
    if z_space.ambient_dim != m {
        return Err(PerturbError::Spec(format!(
            "annihilator basis lives in C^{}, module is C^{m}",
            z_space.ambient_dim
        )));
    }
    let z0 = &z_space.vectors[0];
    let z = z0 / Complex64::new(module.element_norm(z0), 0.0);
    let mut leak = 0.0f64;
    for i in 0..n {
        leak = leak.max(module.element_norm(&(module.left_matrix(i) * &z)));
        leak = leak.max(module.element_norm(&(module.right_matrix(i) * &z)));
    }
    if leak > 1e-12 {
        return Err(PerturbError::NotAnnihilated(leak));
    }
    let f = PointMap::new(n, m, move |a| {
        let base = &dmat * a;
        if is_origin(a) {
            return base;
        }
        let c = keyed_rng(seed, NOISE_STREAM, a).unit_disk();
        base + &z * (c * epsilon)
    })?;
    Ok(AnnihilatorPerturbation { f, g1, g2, certified_control })
}

pub struct ClampedPerturbation {
    pub f: PointMap,
    pub g1: PointMap,
    pub g2: PointMap,
    pub report: HypothesisReport,
}

/// `1` on `[0, R]`, smoothstep down to `0` at `2R`.
pub fn cutoff(r: f64, radius: f64) -> f64 {
    if r <= radius {
        1.0
    } else if r >= 2.0 * radius {
        0.0
    } else {
        let t = (2.0 * radius - r) / radius;
        t * t * (3.0 - 2.0 * t)
    }
}

/// Budget divisor `6 + 4·C·max(‖σ‖, ‖τ‖)`, with `C` the action bound.
pub fn clamped_divisor(module: &Bimodule, sigma: &LinearMap, tau: &LinearMap) -> f64 {
    let alg = module.algebra();
    let s = sigma.operator_norm(alg.norm(), alg.norm()).max(tau.operator_norm(alg.norm(), alg.norm()));
    6.0 + 4.0 * module.action_bound() * s
}

/// `f(a) = d(a) + χ(‖a‖)·h(a)·c(a)·u(a)` with `u(a)` a keyed unit direction,
/// `c(a)` a keyed point of the unit disk and `h(a) = min(φ(a,a)/D, cap)`.
/// Not globally certified: the cross terms `η(a)·σ(b)` grow with `‖b‖`, so
/// the hypotheses are checked by sampling inside the region.
pub fn make_clamped_perturbation(
    module: &Bimodule,
    d0: &DerivationTriple,
    spec: &PerturbationSpec,
    samples: usize,
) -> Result<ClampedPerturbation, PerturbError> {
    spec.validate()?;
    let PerturbationSpec::Clamped { control, region_radius, cap, seed } = spec.clone() else {
        return Err(PerturbError::Spec("expected a clamped perturbation".into()));
    };
    check_base_triple(module, d0)?;
    let phi = ControlFunction::from_spec(&control)?;
    let (g1, g2) = twists(d0);
    let divisor = clamped_divisor(module, &d0.sigma, &d0.tau);
    let cap = cap.unwrap_or(f64::INFINITY);
    let dmat = d0.d.matrix().clone();
    let alg_norm = module.algebra().norm().clone();
    let mod_norm = module.norm().clone();
    let (n, m) = (module.algebra().dim(), module.dim());
    let budget_phi = phi.clone();
    let f = PointMap::new(n, m, move |a| {
        let base = &dmat * a;
        if is_origin(a) || m == 0 {
            return base;
        }
        let chi = cutoff(alg_norm.norm(a), region_radius);
        if chi == 0.0 {
            return base;
        }
        let budget = budget_phi.eval(&alg_norm, a, a).unwrap_or(0.0) / divisor;
        let h = budget.min(cap) * chi;
        if h == 0.0 {
            return base;
        }
        let c = keyed_rng(seed, NOISE_STREAM, a).unit_disk();
        let dir = keyed_rng(seed, DIRECTION_STREAM, a).sphere_point(&mod_norm, 1.0);
        base + dir * (c * h)
    })?;
    let report = verify_hypotheses(
        module,
        &f,
        &g1,
        &g2,
        &phi,
        &VerifyOptions {
            lambda_mode: LambdaMode::Full,
            samples,
            seed: seed ^ 0x7e57,
            check_multiplicativity: true,
            radius: Some(region_radius),
        },
    )?;
    Ok(ClampedPerturbation { f, g1, g2, report })
}
