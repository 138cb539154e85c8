//! Experiment configuration documents and their resolution into algebras,
//! modules, endomorphisms and base derivations.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::{
    dual_bimodule, dual_numbers, make_matrix_algebra, upper_triangular, zero_product, Bimodule, FiniteAlgebra,
    LinearMap,
};
use crate::control::ControlSpec;
use crate::derivation::{inner_derivation, is_contractible, DerivationTriple};
use crate::hyers::LambdaMode;
use crate::io::{matrix_from_doc, AlgebraDoc, BimoduleDoc, ComplexPair};
use crate::linalg::Vector;
use crate::perturb::PerturbationSpec;
use crate::sampling::SampleRng;
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Extract,
    Contractibility,
    Amenability,
    Roundtrip,
    Hypotheses,
}

impl Pipeline {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Extract => "extract",
            Self::Contractibility => "contractibility",
            Self::Amenability => "amenability",
            Self::Roundtrip => "roundtrip",
            Self::Hypotheses => "hypotheses",
        }
    }

    /// Trivial-action summand added to the module unless configured.
    pub fn default_annihilator_dim(&self) -> usize {
        match self {
            Self::Contractibility | Self::Amenability => 0,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModuleKind {
    #[default]
    Regular,
    Dual,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureDoc {
    pub algebra: AlgebraDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bimodule: Option<BimoduleDoc>,
}

/// A builtin name such as `"matrix:2"` or an inline document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FixtureSpec {
    Builtin(String),
    Document(Box<FixtureDoc>),
}

/// `"id"`, `"zero"`, `"conjugation:k"` (by `1 + e_k`) or a matrix literal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EndoSpec {
    Named(String),
    Matrix(Vec<Vec<ComplexPair>>),
}

impl Default for EndoSpec {
    fn default() -> Self {
        Self::Named("id".into())
    }
}

/// The exact derivation that perturbations are built around.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaseSpec {
    /// `"inner"` (by a seeded `x`), `"outer"` (a derivation outside the inner
    /// ones) or `"zero"`.
    Named(String),
    /// `d_x` for the given `x`.
    InnerAt {
        x: Vec<ComplexPair>,
    },
    Matrix(Vec<Vec<ComplexPair>>),
}

impl Default for BaseSpec {
    fn default() -> Self {
        Self::Named("inner".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub path: Option<String>,
    #[serde(default)]
    pub format: OutputFormat,
}

fn default_samples() -> usize {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub fixture: FixtureSpec,
    #[serde(default)]
    pub module: ModuleKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annihilator_dim: Option<usize>,
    pub pipeline: Pipeline,
    #[serde(default)]
    pub sigma: EndoSpec,
    #[serde(default)]
    pub tau: EndoSpec,
    #[serde(default)]
    pub base: BaseSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub lambda_mode: LambdaMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

impl ExperimentConfig {
    pub fn new(fixture: &str, pipeline: Pipeline) -> Self {
        Self {
            fixture: FixtureSpec::Builtin(fixture.into()),
            module: ModuleKind::Regular,
            annihilator_dim: None,
            pipeline,
            sigma: EndoSpec::default(),
            tau: EndoSpec::default(),
            base: BaseSpec::default(),
            control: None,
            perturbation: None,
            seed: 0,
            samples: default_samples(),
            lambda_mode: LambdaMode::Full,
            output: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// SHA-256 of the canonical JSON form, output location excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn annihilator_dim(&self) -> usize {
        self.annihilator_dim.unwrap_or_else(|| self.pipeline.default_annihilator_dim())
    }

    pub fn perturbation(&self) -> PerturbationSpec {
        self.perturbation.clone().unwrap_or(PerturbationSpec::Annihilator { epsilon: 0.0, seed: self.seed })
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.samples == 0 {
            return Err(Error::Config("samples must be positive".into()));
        }
        if let Some(c) = &self.control {
            crate::control::ControlFunction::from_spec(c)?;
        }
        if let Some(p) = &self.perturbation {
            p.validate()?;
        }
        Ok(())
    }
}

/// Resolved algebra and module.
pub struct Setting {
    pub algebra: Arc<FiniteAlgebra>,
    pub module: Bimodule,
}

fn parse_size(name: &str, arg: &str) -> Result<usize, Error> {
    arg.parse().map_err(|_| Error::Config(format!("fixture {name}: '{arg}' is not a size")))
}

pub fn builtin_algebra(name: &str) -> Result<FiniteAlgebra, Error> {
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    let sized = |f: fn(usize) -> Result<FiniteAlgebra, crate::AlgebraError>| -> Result<FiniteAlgebra, Error> {
        let a = arg.ok_or_else(|| Error::Config(format!("fixture {head} needs a size, e.g. {head}:2")))?;
        Ok(f(parse_size(head, a)?)?)
    };
    match head {
        "matrix" => sized(make_matrix_algebra),
        "upper-triangular" => sized(upper_triangular),
        "zero-product" => sized(zero_product),
        "dual-numbers" if arg.is_none() => Ok(dual_numbers()),
        _ => Err(Error::Config(format!(
            "unknown fixture '{name}' (expected matrix:n, dual-numbers, upper-triangular:n or zero-product:n)"
        ))),
    }
}

pub fn resolve_setting(cfg: &ExperimentConfig) -> Result<Setting, Error> {
    let (algebra, given) = match &cfg.fixture {
        FixtureSpec::Builtin(name) => (Arc::new(builtin_algebra(name)?), None),
        FixtureSpec::Document(doc) => {
            let a = Arc::new(doc.algebra.load()?);
            let m = match &doc.bimodule {
                Some(b) => Some(b.load(a.clone())?),
                None => None,
            };
            (a, m)
        }
    };
    let base = given.unwrap_or_else(|| Bimodule::regular(algebra.clone()));
    let module = match cfg.module {
        ModuleKind::Regular => base,
        ModuleKind::Dual => dual_bimodule(&base)?,
    };
    let module = match cfg.annihilator_dim() {
        0 => module,
        k => module.extend_with_annihilator(k),
    };
    Ok(Setting { algebra, module })
}

pub fn resolve_endo(spec: &EndoSpec, algebra: &FiniteAlgebra) -> Result<LinearMap, Error> {
    let n = algebra.dim();
    match spec {
        EndoSpec::Matrix(rows) => {
            if rows.len() != n {
                return Err(Error::Config(format!("endomorphism literal has {} rows, expected {n}", rows.len())));
            }
            Ok(LinearMap::endo(matrix_from_doc(rows, n)?)?)
        }
        EndoSpec::Named(name) => match name.as_str() {
            "id" => Ok(LinearMap::identity(n)),
            "zero" => Ok(LinearMap::endo(crate::linalg::Matrix::zeros(n, n))?),
            other => {
                let k = other.strip_prefix("conjugation:").and_then(|k| k.parse::<usize>().ok()).ok_or_else(|| {
                    Error::Config(format!(
                        "unknown endomorphism '{other}' (expected id, zero, conjugation:k or a matrix)"
                    ))
                })?;
                if k >= n {
                    return Err(Error::Config(format!("conjugation index {k} out of range for dimension {n}")));
                }
                let unit = algebra.unit().ok_or(crate::AlgebraError::NoUnit)?;
                let u = unit + algebra.basis(k);
                Ok(LinearMap::endo(algebra.conjugation(&u)?)?)
            }
        },
    }
}

/// Parses a flag value as a JSON endomorphism literal or a name.
pub fn parse_endo_flag(text: &str) -> Result<EndoSpec, Error> {
    if text.trim_start().starts_with('[') {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("endomorphism literal: {e}")))
    } else {
        Ok(EndoSpec::Named(text.to_string()))
    }
}

pub fn parse_base_flag(text: &str) -> Result<BaseSpec, Error> {
    let t = text.trim_start();
    if t.starts_with('[') || t.starts_with('{') {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("base derivation: {e}")))
    } else {
        Ok(BaseSpec::Named(text.to_string()))
    }
}

/// Accepts JSON or the shorthands `constant:α` and `pnorm:α,β,p`.
pub fn parse_control_flag(text: &str) -> Result<ControlSpec, Error> {
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(text).map_err(|e| Error::Config(format!("control: {e}")));
    }
    let bad = || Error::Config(format!("control '{text}' (expected constant:α, pnorm:α,β,p or JSON)"));
    let (kind, args) = text.split_once(':').ok_or_else(bad)?;
    let nums: Vec<f64> =
        args.split(',').map(|s| s.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    match (kind, nums.as_slice()) {
        ("constant", [alpha]) => Ok(ControlSpec::Constant { alpha: *alpha }),
        ("pnorm", [alpha, beta, p]) => Ok(ControlSpec::Pnorm { alpha: *alpha, beta: *beta, p: *p }),
        _ => Err(bad()),
    }
}

/// Accepts JSON or the shorthand `annihilator:ε`; the seed comes from `seed`.
pub fn parse_perturb_flag(text: &str, seed: u64) -> Result<PerturbationSpec, Error> {
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(text).map_err(|e| Error::Config(format!("perturbation: {e}")));
    }
    let eps = text
        .strip_prefix("annihilator:")
        .and_then(|e| e.parse::<f64>().ok())
        .ok_or_else(|| Error::Config(format!("perturbation '{text}' (expected annihilator:ε or JSON)")))?;
    Ok(PerturbationSpec::Annihilator { epsilon: eps, seed })
}

pub fn resolve_base(
    cfg: &ExperimentConfig,
    setting: &Setting,
    sigma: &LinearMap,
    tau: &LinearMap,
) -> Result<DerivationTriple, Error> {
    let module = &setting.module;
    let (n, m) = (setting.algebra.dim(), module.dim());
    let d = match &cfg.base {
        BaseSpec::Matrix(rows) => {
            if rows.len() != m {
                return Err(Error::Config(format!("base derivation has {} rows, expected {m}", rows.len())));
            }
            LinearMap::to_module(matrix_from_doc(rows, n)?)?
        }
        BaseSpec::InnerAt { x } => {
            if x.len() != m {
                return Err(Error::Config(format!("base x has {} entries, expected {m}", x.len())));
            }
            inner_derivation(module, sigma, tau, &crate::io::vector_from_doc(x))?
        }
        BaseSpec::Named(name) => match name.as_str() {
            "inner" => {
                let mut rng = SampleRng::new(cfg.seed ^ 0xba5e);
                let x: Vector = rng.complex_vector(m);
                inner_derivation(module, sigma, tau, &x)?
            }
            "zero" => LinearMap::to_module(crate::linalg::Matrix::zeros(m, n))?,
            "outer" => {
                let report = is_contractible(module, sigma, tau)?;
                report.witness.ok_or_else(|| {
                    Error::Config("base 'outer' requested but every derivation is inner for this setting".into())
                })?
            }
            other => {
                return Err(Error::Config(format!("unknown base derivation '{other}' (expected inner, outer, zero)")))
            }
        },
    };
    Ok(DerivationTriple { d, sigma: sigma.clone(), tau: tau.clone() })
}
