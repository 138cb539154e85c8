//! Acceptance criteria, one PASS/FAIL line each.

mod common;

use std::process::Command;
use std::sync::Arc;

use num_complex::Complex64;
use sigtau::algebra::{dual_numbers, make_matrix_algebra};
use sigtau::cli::config::{BaseSpec, EndoSpec, ExperimentConfig, Pipeline};
use sigtau::cli::pipeline;
use sigtau::control::{ControlFunction, ControlSpec};
use sigtau::derivation::{
    approx_contractibility_roundtrip, basis_endomorphism_residual, inner_derivation, sigma_endo_certificate,
    RoundtripOptions, RoundtripOutcome,
};
use sigtau::hyers::{extract_triple, verify_stability_bound, ExtractOptions, LeibnizCheck};
use sigtau::linalg::Matrix;
use sigtau::perturb::{make_annihilator_perturbation, make_clamped_perturbation, HypothesisVerdict, PerturbationSpec};
use sigtau::sampling::SampleRng;
use sigtau::{
    derivation_space, extract_additive, inner_space, is_amenable, is_contractible, scalar_homogeneity_certificate,
    three_unimodular, Bimodule, DerivationTriple, LinearMap, SpaceTag, Verdict,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn extended_matrix(n: usize) -> Bimodule {
    Bimodule::regular(Arc::new(make_matrix_algebra(n).unwrap())).extend_with_annihilator(1)
}

fn inner_triple(x: &Bimodule, sigma: LinearMap, tau: LinearMap, seed: u64) -> DerivationTriple {
    let xv = SampleRng::new(seed).complex_vector(x.dim());
    let d = inner_derivation(x, &sigma, &tau, &xv).unwrap();
    DerivationTriple { d, sigma, tau }
}

fn closed_form_vs_series() -> Outcome {
    let mut rng = SampleRng::new(1);
    let alg = make_matrix_algebra(2).unwrap();
    let points: Vec<_> = (0..100).map(|k| rng.ball_point(alg.norm(), 1.0 + (k % 10) as f64)).collect();
    let mut worst = 0.0f64;
    for alpha in [0.0, 1.0] {
        for beta in [1.0, 2.0] {
            for p in [0.0, 0.25, 0.5, 0.75] {
                let c = ControlFunction::pnorm(alpha, beta, p).unwrap();
                for a in &points {
                    let closed = c.tilde(alg.norm(), a, a).unwrap().upper();
                    let series: f64 = (0..200)
                        .map(|k| {
                            let s = 2f64.powi(k);
                            let v = a * Complex64::new(s, 0.0);
                            0.5 / s * c.eval(alg.norm(), &v, &v).unwrap()
                        })
                        .sum();
                    worst = worst.max((closed - series).abs());
                }
            }
        }
    }
    check(worst <= 1e-12, format!("max deviation {worst:.3e}"))
}

fn stability_bound() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for n in [2, 3] {
        let x = extended_matrix(n);
        let id = LinearMap::identity(n * n);
        let t = inner_triple(&x, id.clone(), id, 10 + n as u64);
        for eps in [1e-1, 1e-2, 1e-3] {
            let spec = PerturbationSpec::Annihilator { epsilon: eps, seed: 7 };
            let p = make_annihilator_perturbation(&x, &t, &spec, &x.two_sided_annihilator()).unwrap();
            let phi = ControlFunction::constant(3.0 * eps).unwrap();
            let r = extract_additive(x.algebra(), x.norm(), SpaceTag::Module, &p.f, &phi, &ExtractOptions::default())
                .map_err(|e| e.to_string())?;
            let s = verify_stability_bound(x.algebra(), x.norm(), &p.f, &r.limit, &phi, 1000, 3)
                .map_err(|e| e.to_string())?;
            let err = (r.matrix() - t.d.matrix()).camax();
            ok &= s.holds() && s.violations == 0 && s.samples == 1000 && err <= 1e-9;
            notes.push(format!("M{n} eps={eps:e}: violations {} d_err {err:.1e}", s.violations));
        }
    }
    check(ok, notes.join("; "))
}

fn leibniz_recovery() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for n in [2, 3] {
        let x = extended_matrix(n);
        let alg = x.algebra().clone();
        let u = alg.unit().unwrap() + alg.basis(1) * Complex64::new(0.5, -0.25);
        let sigma = LinearMap::endo(alg.conjugation(&u).unwrap()).unwrap();
        let t = inner_triple(&x, sigma, LinearMap::identity(n * n), 20 + n as u64);
        let spec = PerturbationSpec::Annihilator { epsilon: 1e-3, seed: 5 };
        let p = make_annihilator_perturbation(&x, &t, &spec, &x.two_sided_annihilator()).unwrap();
        let check = LeibnizCheck { samples: 500, tol: 1e-9 };
        let r = extract_triple(&x, &p.f, &p.g1, &p.g2, &p.certified_control, &ExtractOptions::default(), &check)
            .map_err(|e| e.to_string())?;
        let tau_res = basis_endomorphism_residual(&alg, &r.tau.limit).map_err(|e| e.to_string())?;
        let cert = sigma_endo_certificate(&x, &r.triple(), 500, 4).map_err(|e| e.to_string())?;
        ok &= r.leibniz_samples == 500 && r.leibniz_max <= 1e-9 && tau_res <= 1e-9 && cert.certificate_max <= 1e-9;
        notes.push(format!(
            "M{n}: leibniz {:.1e} tau {tau_res:.1e} sigma cert {:.1e}",
            r.leibniz_max, cert.certificate_max
        ));
    }
    check(ok, notes.join("; "))
}

fn subspace_oracle() -> Outcome {
    let cases = [
        ("matrix:2", make_matrix_algebra(2).unwrap(), common::matrix_table(2), (3, 3), Verdict::Contractible),
        ("dual-numbers", dual_numbers(), common::dual_numbers_table(), (1, 0), Verdict::NotContractible),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, alg, table, expected, verdict) in cases {
        let x = Bimodule::regular(Arc::new(alg));
        let id = LinearMap::identity(x.algebra().dim());
        let got = (derivation_space(&x, &id, &id).unwrap().dim(), inner_space(&x, &id, &id).unwrap().dim());
        let oracle = common::dims(&table, &common::regular(&table));
        let r = is_contractible(&x, &id, &id).map_err(|e| e.to_string())?;
        ok &= got == expected && oracle == expected && r.verdict == verdict;
        notes.push(format!("{name}: {got:?} oracle {oracle:?} {:?}", r.verdict));
    }
    check(ok, notes.join("; "))
}

fn roundtrip() -> Outcome {
    let x = extended_matrix(2);
    let id = LinearMap::identity(4);
    let t = inner_triple(&x, id.clone(), id, 30);
    let spec = PerturbationSpec::Annihilator { epsilon: 1e-3, seed: 9 };
    let p = make_annihilator_perturbation(&x, &t, &spec, &x.two_sided_annihilator()).unwrap();
    let opts = RoundtripOptions { samples: 1000, ..RoundtripOptions::default() };
    let r = approx_contractibility_roundtrip(&x, &p.f, &p.certified_control, &t.sigma, &t.tau, &opts)
        .map_err(|e| e.to_string())?;
    match r.outcome {
        RoundtripOutcome::Inner { beta, converse_scaled_residual, .. } => {
            let limit = 3e-3 * (1.0 + x.action_bound()) + 1e-9;
            check(
                beta <= limit && converse_scaled_residual <= 1e-10,
                format!("beta {beta:.3e} (limit {limit:.3e}) converse {converse_scaled_residual:.1e}"),
            )
        }
        other => Err(format!("{other:?}")),
    }
}

fn amenability() -> Outcome {
    let x = Bimodule::regular(Arc::new(make_matrix_algebra(2).unwrap()));
    let id = LinearMap::identity(4);
    let r = is_amenable(&x, &id, &id).map_err(|e| e.to_string())?;
    let table = common::matrix_table(2);
    let oracle = common::dims(&table, &common::dual(&common::regular(&table)));
    let got = (r.derivation_dim, r.inner_dim);
    check(r.verdict == Verdict::Contractible && got == oracle, format!("{got:?} oracle {oracle:?} {:?}", r.verdict))
}

fn scalar_machinery() -> Outcome {
    let mut rng = SampleRng::new(77);
    let (mut modulus, mut sum) = (0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let w = rng.unit_disk() * 3.0;
        let t = three_unimodular(w).map_err(|e| e.to_string())?;
        modulus = modulus.max(t.modulus_defect());
        sum = sum.max((t.sum() - w).norm());
    }
    let x = Bimodule::regular(Arc::new(make_matrix_algebra(2).unwrap()));
    let id = LinearMap::identity(4);
    let d = inner_triple(&x, id.clone(), id, 40).d;
    let dn = d.operator_norm(x.algebra().norm(), x.norm());
    let mut ratio = 0.0f64;
    for _ in 0..100 {
        let gamma = rng.complex() * 10.0;
        let a = rng.complex_vector(4);
        let c = scalar_homogeneity_certificate(&d, gamma, &a, x.norm()).map_err(|e| e.to_string())?;
        ratio = ratio.max(c / (1e-10 * (1.0 + gamma.norm()) * dn * x.algebra().element_norm(&a)));
    }
    check(
        modulus <= 1e-14 && sum <= 1e-13 && ratio <= 1.0,
        format!("modulus {modulus:.1e} sum {sum:.1e} certificate ratio {ratio:.1e}"),
    )
}

fn configs() -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    for pipeline in
        [Pipeline::Contractibility, Pipeline::Amenability, Pipeline::Extract, Pipeline::Roundtrip, Pipeline::Hypotheses]
    {
        let mut c = ExperimentConfig::new("matrix:2", pipeline);
        c.seed = 2024;
        c.perturbation = Some(PerturbationSpec::Annihilator { epsilon: 1e-3, seed: 2024 });
        out.push(c);
    }
    let mut twisted = ExperimentConfig::new("matrix:3", Pipeline::Extract);
    twisted.sigma = EndoSpec::Named("conjugation:1".into());
    twisted.seed = 5;
    out.push(twisted);
    let mut outer = ExperimentConfig::new("dual-numbers", Pipeline::Roundtrip);
    outer.base = BaseSpec::Named("outer".into());
    out.push(outer);
    out
}

fn determinism() -> Outcome {
    let render = || -> Result<Vec<String>, String> {
        configs().iter().map(|c| pipeline::run(c, false).map(|r| r.to_json()).map_err(|e| e.to_string())).collect()
    };
    let (a, b) = (render()?, render()?);
    let in_process = a == b;
    let dir = std::env::temp_dir().join(format!("sigtau-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut binary = true;
    for (i, c) in configs().iter().enumerate() {
        let path = dir.join(format!("{i}.json"));
        std::fs::write(&path, serde_json::to_string(c).unwrap()).map_err(|e| e.to_string())?;
        let run = || {
            Command::new(env!("CARGO_BIN_EXE_sigtau"))
                .args(["run", "--config", path.to_str().unwrap()])
                .env_remove("SIGTAU_SEED")
                .output()
                .map(|o| o.stdout)
                .map_err(|e| e.to_string())
        };
        let (x, y) = (run()?, run()?);
        binary &= !x.is_empty() && x == y && x == a[i].as_bytes();
    }
    std::fs::remove_dir_all(&dir).ok();
    check(in_process && binary, format!("{} reports, in-process {in_process}, binary {binary}", a.len()))
}

fn negative_controls() -> Outcome {
    let x = extended_matrix(2);
    let id = LinearMap::identity(4);
    let t = inner_triple(&x, id.clone(), id, 50);
    let spec = PerturbationSpec::Clamped {
        control: ControlSpec::Constant { alpha: 1e-2 },
        region_radius: 1e4,
        cap: None,
        seed: 3,
    };
    let p = make_clamped_perturbation(&x, &t, &spec, 2000).map_err(|e| e.to_string())?;
    let clamped = match &p.report.verdict {
        HypothesisVerdict::Violated { witness } => witness.residual > witness.control,
        HypothesisVerdict::Satisfied => false,
    };

    let y = Bimodule::regular(Arc::new(dual_numbers())).extend_with_annihilator(1);
    let id2 = LinearMap::identity(2);
    let mut d = Matrix::zeros(3, 2);
    d[(1, 1)] = Complex64::new(1.0, 0.0);
    let t2 = DerivationTriple { d: LinearMap::to_module(d.clone()).unwrap(), sigma: id2.clone(), tau: id2 };
    let spec = PerturbationSpec::Annihilator { epsilon: 1e-3, seed: 1 };
    let p2 = make_annihilator_perturbation(&y, &t2, &spec, &y.two_sided_annihilator()).unwrap();
    let r = approx_contractibility_roundtrip(
        &y,
        &p2.f,
        &p2.certified_control,
        &t2.sigma,
        &t2.tau,
        &RoundtripOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let dual = match &r.outcome {
        RoundtripOutcome::NotInner { witness, .. } => (witness.matrix() - &d).camax() <= 1e-9,
        RoundtripOutcome::Inner { .. } => false,
    };
    check(clamped && dual, format!("clamped violated {clamped}; dual-numbers infeasible with d(e)=e {dual}"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("closed form vs truncated series", closed_form_vs_series),
        ("stability bound and recovery of d0", stability_bound),
        ("Leibniz, endomorphism and sigma certificates", leibniz_recovery),
        ("subspace dimensions vs exact oracle", subspace_oracle),
        ("approximate contractibility roundtrip", roundtrip),
        ("amenability on the dual module", amenability),
        ("unimodular decomposition and homogeneity certificate", scalar_machinery),
        ("byte-identical reports", determinism),
        ("negative controls", negative_controls),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {}: {name} ({d}) [{secs:.1}s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {}: {name} ({d}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
