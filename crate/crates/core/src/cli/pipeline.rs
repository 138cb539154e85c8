//! Pipeline execution: fixture → perturbation → extraction / decision →
//! report.

use serde::{Deserialize, Serialize};

use super::config::{resolve_base, resolve_endo, resolve_setting, ExperimentConfig, Pipeline, Setting};
use crate::control::{ControlFunction, ControlSpec};
use crate::derivation::{
    approx_contractibility_roundtrip, basis_endomorphism_residual, is_amenable, is_contractible,
    sigma_endo_certificate, ContractibilityReport, DerivationTriple, RoundtripOptions, RoundtripOutcome,
    RoundtripReport, SigmaCertificate, Verdict,
};
use crate::hyers::{
    extract_triple, verify_stability_bound, ExtractOptions, LeibnizCheck, PointMap, StabilityReport, TripleReport,
};
use crate::linalg;
use crate::perturb::{
    make_annihilator_perturbation, make_clamped_perturbation, verify_hypotheses, HypothesisReport, PerturbationSpec,
    VerifyOptions,
};
use crate::Error;

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Samples in the Leibniz check of extracted triples.
pub const LEIBNIZ_SAMPLES: usize = 500;
/// Inner-solve tolerance of the round-trip pipeline.
pub const ROUNDTRIP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtractOutput {
    pub perturbation: PerturbationSpec,
    pub control: Option<ControlSpec>,
    pub triple: TripleReport,
    pub stability: StabilityReport,
    /// `max |d − d₀|` over matrix entries.
    pub d_error_max: f64,
    pub tau_endomorphism_residual: f64,
    pub sigma_certificate: SigmaCertificate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HypothesesOutput {
    pub perturbation: PerturbationSpec,
    pub control: Option<ControlSpec>,
    pub report: HypothesisReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineOutput {
    Extract(Box<ExtractOutput>),
    Contractibility(ContractibilityReport),
    Amenability(ContractibilityReport),
    Roundtrip(Box<RoundtripReport>),
    Hypotheses(HypothesesOutput),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub pipeline: Pipeline,
    pub verdict: String,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
    pub config: ExperimentConfig,
    pub output: PipelineOutput,
}

/// A perturbed triple `(f, g₁, g₂)` with the control used to extract it.
pub struct Perturbed {
    pub f: PointMap,
    pub g1: PointMap,
    pub g2: PointMap,
    pub control: ControlFunction,
    pub clamped_report: Option<HypothesisReport>,
}

/// Builds the perturbation named in `cfg` around `base`. The extraction
/// control is the configured one if present, else the certified `Constant(3ε)`
/// (annihilator mode) or the clamped budget control.
pub fn perturb(cfg: &ExperimentConfig, setting: &Setting, base: &DerivationTriple) -> Result<Perturbed, Error> {
    let spec = cfg.perturbation();
    let configured = cfg.control.as_ref().map(ControlFunction::from_spec).transpose()?;
    match &spec {
        PerturbationSpec::Annihilator { .. } => {
            let z = setting.module.two_sided_annihilator();
            let p = make_annihilator_perturbation(&setting.module, base, &spec, &z)?;
            Ok(Perturbed {
                f: p.f,
                g1: p.g1,
                g2: p.g2,
                control: configured.unwrap_or(p.certified_control),
                clamped_report: None,
            })
        }
        PerturbationSpec::Clamped { control, .. } => {
            let p = make_clamped_perturbation(&setting.module, base, &spec, cfg.samples)?;
            let own = ControlFunction::from_spec(control)?;
            Ok(Perturbed {
                f: p.f,
                g1: p.g1,
                g2: p.g2,
                control: configured.unwrap_or(own),
                clamped_report: Some(p.report),
            })
        }
    }
}

pub fn extract_options(cfg: &ExperimentConfig) -> ExtractOptions {
    ExtractOptions { seed: cfg.seed, ..ExtractOptions::default() }
}

fn verdict_code(ok: bool, good: &str, bad: &str) -> (String, i32) {
    if ok {
        (good.to_string(), 0)
    } else {
        (bad.to_string(), 2)
    }
}

/// Executes the configured pipeline. Timing is recorded only on request so
/// that reports are reproducible byte for byte.
pub fn run(cfg: &ExperimentConfig, record_timing: bool) -> Result<RunRecord, Error> {
    let start = std::time::Instant::now();
    cfg.validate()?;
    let setting = resolve_setting(cfg)?;
    let sigma = resolve_endo(&cfg.sigma, &setting.algebra)?;
    let tau = resolve_endo(&cfg.tau, &setting.algebra)?;
    let module = &setting.module;

    let (output, (verdict, exit_code)) = match cfg.pipeline {
        Pipeline::Contractibility | Pipeline::Amenability => {
            let report = if cfg.pipeline == Pipeline::Contractibility {
                is_contractible(module, &sigma, &tau)?
            } else {
                is_amenable(module, &sigma, &tau)?
            };
            let v = verdict_code(report.verdict == Verdict::Contractible, "contractible", "not_contractible");
            let out = if cfg.pipeline == Pipeline::Contractibility {
                PipelineOutput::Contractibility(report)
            } else {
                PipelineOutput::Amenability(report)
            };
            (out, v)
        }
        Pipeline::Extract => {
            let base = resolve_base(cfg, &setting, &sigma, &tau)?;
            let p = perturb(cfg, &setting, &base)?;
            let opts = extract_options(cfg);
            let leibniz = LeibnizCheck { samples: LEIBNIZ_SAMPLES, ..LeibnizCheck::default() };
            let triple = extract_triple(module, &p.f, &p.g1, &p.g2, &p.control, &opts, &leibniz)?;
            let stability = verify_stability_bound(
                &setting.algebra,
                module.norm(),
                &p.f,
                &triple.d.limit,
                &p.control,
                cfg.samples,
                cfg.seed ^ 0x57ab,
            )?;
            let extracted = triple.triple();
            let d_error_max = linalg::max_abs(&(extracted.d.matrix() - base.d.matrix()));
            let tau_res = basis_endomorphism_residual(&setting.algebra, &extracted.tau)?;
            let cert = sigma_endo_certificate(module, &extracted, LEIBNIZ_SAMPLES, cfg.seed ^ 0xce27)?;
            let v = verdict_code(stability.holds() && triple.leibniz_ok(), "satisfied", "violated");
            let out = ExtractOutput {
                perturbation: cfg.perturbation(),
                control: p.control.to_spec(),
                triple,
                stability,
                d_error_max,
                tau_endomorphism_residual: tau_res,
                sigma_certificate: cert,
            };
            (PipelineOutput::Extract(Box::new(out)), v)
        }
        Pipeline::Hypotheses => {
            let base = resolve_base(cfg, &setting, &sigma, &tau)?;
            let p = perturb(cfg, &setting, &base)?;
            let report = match p.clamped_report {
                Some(r) if cfg.control.is_none() => r,
                _ => verify_hypotheses(
                    module,
                    &p.f,
                    &p.g1,
                    &p.g2,
                    &p.control,
                    &VerifyOptions {
                        lambda_mode: cfg.lambda_mode,
                        samples: cfg.samples,
                        seed: cfg.seed,
                        check_multiplicativity: true,
                        radius: None,
                    },
                )?,
            };
            let v = verdict_code(report.satisfied(), "satisfied", "violated");
            let out = HypothesesOutput { perturbation: cfg.perturbation(), control: p.control.to_spec(), report };
            (PipelineOutput::Hypotheses(out), v)
        }
        Pipeline::Roundtrip => {
            let base = resolve_base(cfg, &setting, &sigma, &tau)?;
            let p = perturb(cfg, &setting, &base)?;
            let opts = RoundtripOptions {
                tol: ROUNDTRIP_TOL,
                samples: cfg.samples,
                seed: cfg.seed,
                lambda_mode: cfg.lambda_mode,
                extract: extract_options(cfg),
            };
            let report = approx_contractibility_roundtrip(module, &p.f, &p.control, &sigma, &tau, &opts)?;
            let v = match &report.outcome {
                RoundtripOutcome::Inner { within_bound: true, .. } => ("inner".to_string(), 0),
                RoundtripOutcome::Inner { .. } => ("violated".to_string(), 2),
                RoundtripOutcome::NotInner { .. } => ("infeasible".to_string(), 2),
            };
            (PipelineOutput::Roundtrip(Box::new(report)), v)
        }
    };

    Ok(RunRecord {
        tool: TOOL_NAME.to_string(),
        version: TOOL_VERSION.to_string(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        pipeline: cfg.pipeline,
        verdict,
        exit_code,
        wall_time_ms: record_timing.then(|| start.elapsed().as_secs_f64() * 1e3),
        config: cfg.clone(),
        output,
    })
}

impl RunRecord {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }

    /// One-row summary table.
    pub fn to_csv(&self) -> Result<String, Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Config(format!("csv: {e}"));
        w.write_record(["tool", "version", "pipeline", "seed", "config_hash", "verdict", "exit_code"]).map_err(io)?;
        w.write_record([
            self.tool.as_str(),
            self.version.as_str(),
            self.pipeline.name(),
            &self.seed.to_string(),
            &self.config_hash,
            &self.verdict,
            &self.exit_code.to_string(),
        ])
        .map_err(io)?;
        let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}
