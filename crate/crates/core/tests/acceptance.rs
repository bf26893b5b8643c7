//! Acceptance criteria, one PASS/FAIL line each.

use sublab::classify::{classify, SamplerConfig, Tolerances, Verdict};
use sublab::config::RunConfig;
use sublab::report::{run_check, run_model, SuiteStatus};
use sublab::submersion::SignVariant;
use sublab::validate::{self_validate, validation_models};
use sublab::zoo::{build_model, BuiltModel, ModelSpec, ParamValue};

const SEED: u64 = 20240601;
const POINTS: usize = 100;

struct Outcome {
    id: u32,
    passed: bool,
    detail: String,
}

fn spec(id: &str, params: &[(&str, ParamValue)]) -> ModelSpec {
    ModelSpec { id: id.into(), params: params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect() }
}

fn model(id: &str, params: &[(&str, ParamValue)]) -> BuiltModel {
    build_model(&spec(id, params)).unwrap_or_else(|e| panic!("{id}: {e}"))
}

fn num(v: f64) -> ParamValue {
    ParamValue::Num(v)
}

fn sampler() -> SamplerConfig {
    SamplerConfig { points: POINTS, seed: SEED }
}

fn config_for(spec: ModelSpec) -> RunConfig {
    let mut c = RunConfig::for_model(spec);
    c.sampling.points = POINTS;
    c.sampling.seed = SEED;
    c.output.timestamp = false;
    c
}

fn criterion_1() -> Outcome {
    let report = run_check(&config_for(spec("inversion", &[("n", num(4.0))]))).unwrap();
    let reference = report.suites.iter().find(|s| s.name == "reference_tension").unwrap();
    let tau2 = report.summary.max_tau2;
    Outcome {
        id: 1,
        passed: reference.worst <= 1e-7 && tau2 <= 1e-6,
        detail: format!("inversion n=4: max ‖τ + 4x/|x|⁴‖ = {:.3e} (tol 1e-7), max ‖τ₂‖ = {tau2:.3e} (tol 1e-6)", reference.worst),
    }
}

fn criterion_2() -> Outcome {
    let m = model("inversion", &[("n", num(3.0))]);
    let c = classify(&m, &sampler(), &Tolerances::default()).unwrap();
    let big = c.records.iter().filter(|r| r.tau2 > 1e-3).count();
    let frac = big as f64 / c.records.len() as f64;
    Outcome {
        id: 2,
        passed: frac >= 0.9,
        detail: format!("inversion n=3: ‖τ₂‖ > 1e-3 at {big}/{} points ({:.0}%, need 90%)", c.records.len(), frac * 100.0),
    }
}

fn criterion_3() -> Outcome {
    let m = model("loubeau_ou", &[("c1", num(1.0)), ("c2", num(1.0))]);
    let c = classify(&m, &sampler(), &Tolerances::default()).unwrap();
    let passed = c.verdict == Some(Verdict::ProperBiharmonic) && c.max_tau2 <= 1e-6 && c.min_tau_norm >= 1e-2;
    Outcome {
        id: 3,
        passed,
        detail: format!(
            "loubeau_ou(1,1): verdict {:?}, max ‖τ₂‖ = {:.3e} (tol 1e-6), min ‖τ‖ = {:.3e} (need 1e-2)",
            c.verdict, c.max_tau2, c.min_tau_norm
        ),
    }
}

fn criterion_4() -> Outcome {
    let hopf = classify(&model("hopf", &[]), &sampler(), &Tolerances::default()).unwrap();
    let max_tau = hopf.records.iter().map(|r| r.tau_norm).fold(0.0, f64::max);
    let mut max_kappa: f64 = 0.0;
    for l in [0.0, 1.0] {
        let c = classify(&model("flag_local", &[("l", num(l))]), &sampler(), &Tolerances::default()).unwrap();
        for r in &c.records {
            for k in &r.submersion.as_ref().unwrap().kappa {
                max_kappa = max_kappa.max(k.abs());
            }
        }
    }
    Outcome {
        id: 4,
        passed: max_tau <= 1e-7 && max_kappa <= 1e-9,
        detail: format!("hopf max ‖τ‖ = {max_tau:.3e} (tol 1e-7); flag_local l∈{{0,1}} max |κ| = {max_kappa:.3e} (tol 1e-9)"),
    }
}

fn criterion_5_and_6() -> (Outcome, Outcome) {
    let mut tension_gap: f64 = 0.0;
    let mut tally = sublab::classify::SignTally::default();
    let mut per_model = Vec::new();
    let mut curvature: f64 = 0.0;
    let mut curved = Vec::new();
    let mut with_fiber: f64 = 0.0;
    for (label, m) in validation_models().unwrap() {
        let Some(sub) = m.submersion() else { continue };
        let c = classify(&m, &sampler(), &Tolerances::default()).unwrap();
        let mut local = [0.0f64; 2];
        for r in &c.records {
            let s = r.submersion.as_ref().unwrap();
            tension_gap = tension_gap.max(s.tension_gap);
            local[0] = local[0].max(s.plus_gap);
            local[1] = local[1].max(s.minus_gap);
        }
        tally.merge(c.sign_tally.as_ref().unwrap());
        per_model.push(format!("{label}: plus {:.1e} / minus {:.1e}", local[0], local[1]));
        for r in c.records.iter().take(10) {
            let sp = sub.at(&r.point).unwrap();
            let b = sp.mp.bitension().unwrap();
            let red = sp.bitension_reduced().unwrap();
            let d: Vec<f64> = (0..b.value.len()).map(|k| red.minus[k] + red.fiber_term[k] - b.value[k]).collect();
            let gap = sp.mp.norm_f64(&d) / (1.0 + b.constituents + red.constituents);
            with_fiber = with_fiber.max(gap);
        }
        // base curvature at the first sample decides whether the model counts as curved
        let base_point = sub.map.eval_f64(&c.records[0].point).unwrap();
        let geo = sub.base().at(&base_point).unwrap();
        let flat = (0..geo.dim()).all(|i| (0..geo.dim()).all(|j| geo.ricci(i, j).value().abs() <= 1e-12));
        if !flat {
            curved.push(label.clone());
            for r in &c.records {
                curvature = curvature.max(r.submersion.as_ref().unwrap().curvature_gap);
            }
        }
    }
    let variant = tally.resolved();
    let c5 = Outcome {
        id: 5,
        passed: tension_gap <= 1e-8 && variant.is_some(),
        detail: format!(
            "max ‖τ_reduced − τ‖ = {tension_gap:.3e} (tol 1e-8); variant {} (plus-only {}, minus-only {}, both {}, neither {}); worst gaps: {}; minus + Σ(e₃e₃κⱼ)εⱼ vs τ₂: {with_fiber:.1e}",
            match variant {
                Some(SignVariant::Plus) => "plus",
                Some(SignVariant::Minus) => "minus",
                None => "unresolved",
            },
            tally.plus_only,
            tally.minus_only,
            tally.both,
            tally.neither,
            per_model.join("; ")
        ),
    };
    let c6 = Outcome {
        id: 6,
        passed: !curved.is_empty() && curvature <= 1e-7,
        detail: format!("max ‖ℛ(τ) − Ricʰ(τ)‖ = {curvature:.3e} (tol 1e-7) over {}", curved.join(", ")),
    };
    (c5, c6)
}

fn criterion_7() -> Outcome {
    let report = run_check(&config_for(spec("cp1_round", &[]))).unwrap();
    let get = |n: &str| report.suites.iter().find(|s| s.name == n).unwrap().worst;
    let (ric, eig) = (get("einstein_constant"), get("eigenfunction"));
    Outcome {
        id: 7,
        passed: ric <= 1e-8 && eig <= 1e-8,
        detail: format!("CP¹: max ‖Ric − ½g‖ = {ric:.3e}, max |Δf − f| = {eig:.3e} (tol 1e-8)"),
    }
}

fn criterion_8() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut findings = Vec::new();
    for l in [2.0, 3.0] {
        let c = classify(&model("flag_local", &[("l", num(l))]), &sampler(), &Tolerances::default()).unwrap();
        for r in &c.records {
            let s = r.submersion.as_ref().unwrap();
            worst = worst.max(s.div_x.abs()).max(s.sum_e_kappa.abs());
        }
        let cfg = config_for(spec("flag_local", &[("l", num(l)), ("base", ParamValue::Text("cp1".into()))]));
        let m = cfg.build().unwrap();
        let report = run_model(&cfg, &m).unwrap();
        let e = report.suites.iter().find(|s| s.name == "einstein_residuals").unwrap();
        findings.push(format!("l={l} (c = ½): {}", e.detail));
    }
    Outcome {
        id: 8,
        passed: worst <= 1e-9,
        detail: format!("flag_local l∈{{2,3}}: max |div X|, |e₁κ₁ + e₂κ₂| = {worst:.3e} (tol 1e-9); reported {}", findings.join("; ")),
    }
}

fn criterion_9() -> Outcome {
    let summary = self_validate().unwrap();
    let gated = [
        "jet_vs_fd",
        "metric_compatibility",
        "bianchi",
        "ricci_symmetry",
        "frame_independence",
        "laplacian_split",
        "harmonic_implies_biharmonic",
    ];
    let mut parts = Vec::new();
    let mut passed = true;
    for name in gated {
        match summary.suite(name) {
            Some(s) => {
                passed &= s.status == SuiteStatus::Pass;
                parts.push(format!("{name} {:.1e}", s.worst));
            }
            None => {
                passed = false;
                parts.push(format!("{name} missing"));
            }
        }
    }
    let failing: Vec<&str> =
        summary.suites.iter().filter(|s| s.status == SuiteStatus::Fail).map(|s| s.name.as_str()).collect();
    Outcome {
        id: 9,
        passed,
        detail: format!("{}; failing suites: [{}]", parts.join(", "), failing.join(", ")),
    }
}

fn criterion_10() -> Outcome {
    let cfg = config_for(spec("loubeau_ou", &[]));
    let a = run_check(&cfg).unwrap().to_json().unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| run_check(&cfg).unwrap().to_json().unwrap());
    let c = run_check(&config_for(spec("hopf", &[]))).unwrap().to_json().unwrap();
    let d = run_check(&config_for(spec("hopf", &[]))).unwrap().to_json().unwrap();
    Outcome {
        id: 10,
        passed: a == b && c == d,
        detail: format!("loubeau_ou {} bytes, hopf {} bytes, byte-identical across runs and thread counts: {}", a.len(), c.len(), a == b && c == d),
    }
}

#[test]
fn acceptance() {
    let (c5, c6) = criterion_5_and_6();
    let outcomes = vec![criterion_1(), criterion_2(), criterion_3(), criterion_4(), c5, c6, criterion_7(), criterion_8(), criterion_9(), criterion_10()];
    for o in &outcomes {
        println!("criterion {:>2}: {} | {}", o.id, if o.passed { "PASS" } else { "FAIL" }, o.detail);
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
