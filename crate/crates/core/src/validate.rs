//! Release-gate invariant suites over the model zoo.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classify::{classify, oracle_map, SamplerConfig, SignTally, Tolerances};
use crate::error::Result;
use crate::expr::{fd_check, fd_default_step, parse_expr, ScalarExpr};
use crate::geometry::{Manifold, PointGeometry};
use crate::jet::lift_all;
use crate::map::{normalized, sub_vectors};
use crate::report::{model_suites, SuiteResult, SuiteStatus};
use crate::submersion::SignVariant;
use crate::zoo::{build_model, BuiltModel, ModelSpec, ParamValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidateOptions {
    pub points: usize,
    pub seed: u64,
    /// Negate the Christoffel symbols before the connection checks; a
    /// negative control for the metric-compatibility suite.
    pub corrupt_christoffel: bool,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions { points: 10, seed: 1, corrupt_christoffel: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub suites: Vec<SuiteResult>,
    /// Sign-variant tally over every zoo submersion and point.
    pub sign_tally: SignTally,
    pub sign_variant: Option<SignVariant>,
    /// Per-model sign tallies.
    pub sign_by_model: BTreeMap<String, SignTally>,
}

impl ValidationSummary {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.name == name)
    }
}

/// The model instances the validation suites run on, labelled.
pub fn validation_models() -> Result<Vec<(String, BuiltModel)>> {
    let num = |k: &str, v: f64| (k.to_string(), ParamValue::Num(v));
    let mut specs: Vec<(String, ModelSpec)> = Vec::new();
    let mut add = |label: String, id: &str, params: Vec<(String, ParamValue)>| {
        specs.push((label, ModelSpec { id: id.into(), params: params.into_iter().collect() }));
    };
    for id in ["product", "loubeau_ou", "warped_custom", "hopf", "berger", "cp1_round", "s2_round", "su2_round"] {
        add(id.to_string(), id, Vec::new());
    }
    for n in [2.0, 3.0, 4.0] {
        add(format!("inversion(n={n})"), "inversion", vec![num("n", n)]);
    }
    for l in [0.0, 1.0, 2.0, 3.0] {
        add(format!("flag_local(l={l})"), "flag_local", vec![num("l", l)]);
    }
    add(
        "flag_local(l=2, base=cp1)".into(),
        "flag_local",
        vec![num("l", 2.0), ("base".into(), ParamValue::Text("cp1".into()))],
    );
    specs.into_iter().map(|(label, s)| Ok((label, build_model(&s)?))).collect()
}

fn multi_indices(dim: usize, max_order: u8) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = vec![0u8; dim];
    fn rec(i: usize, left: u8, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if i == cur.len() {
            if cur.iter().any(|&e| e > 0) {
                out.push(cur.clone());
            }
            return;
        }
        for e in 0..=left {
            cur[i] = e;
            rec(i + 1, left - e, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, max_order, &mut cur, &mut out);
    out
}

/// Worst relative gap between jet partials and finite differences, orders 1..=3.
pub fn jet_fd_gap(e: &ScalarExpr, p: &[f64], consts: &crate::expr::Consts) -> Result<f64> {
    let jet = e.eval_jet(&lift_all(p).map_err(|err| crate::Error::from_jet(err, p))?, consts)?;
    let mut worst: f64 = 0.0;
    for exps in multi_indices(p.len(), 3) {
        let order: usize = exps.iter().map(|&o| o as usize).sum();
        let exact = jet.partial(&exps).map_err(|err| crate::Error::from_jet(err, p))?;
        let fd = fd_check(e, p, &exps, fd_default_step(order), consts)?;
        worst = worst.max((exact - fd).abs() / exact.abs().max(1.0));
    }
    Ok(worst)
}

fn manifolds(model: &BuiltModel) -> Vec<&Manifold> {
    match &model.kind {
        crate::zoo::ModelKind::Map(m) => vec![&m.domain, &m.codomain],
        crate::zoo::ModelKind::Submersion(s) => vec![&s.map.domain, s.base()],
        crate::zoo::ModelKind::Manifold(m) => vec![m],
    }
}

struct Worst {
    name: &'static str,
    tol: f64,
    value: f64,
    at: String,
}

impl Worst {
    fn new(name: &'static str, tol: f64) -> Self {
        Worst { name, tol, value: 0.0, at: String::new() }
    }

    fn see(&mut self, v: f64, label: &str, p: &[f64]) {
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v > self.value || self.at.is_empty() {
            self.value = self.value.max(v);
            self.at = format!("worst on {label} at {p:?}");
        }
    }

    fn result(self) -> SuiteResult {
        SuiteResult::check(self.name, self.value, self.tol, self.at)
    }
}

fn merge(into: &mut Vec<SuiteResult>, label: &str, s: SuiteResult) {
    let detail = format!("{label}: {}", s.detail);
    match into.iter_mut().find(|t| t.name == s.name) {
        Some(t) => {
            let newly_failed = s.status == SuiteStatus::Fail && t.status != SuiteStatus::Fail;
            let same_status_worse = s.status == t.status && !(s.worst <= t.worst);
            if newly_failed || same_status_worse {
                t.detail = detail;
                t.status = s.status;
            }
            t.worst = t.worst.max(s.worst);
        }
        None => into.push(SuiteResult { detail, ..s }),
    }
}

pub fn self_validate() -> Result<ValidationSummary> {
    self_validate_with(&ValidateOptions::default())
}

pub fn self_validate_with(opts: &ValidateOptions) -> Result<ValidationSummary> {
    let models = validation_models()?;
    let sampler = SamplerConfig { points: opts.points, seed: opts.seed };
    let tol = Tolerances::default();
    let mut fd = Worst::new("jet_vs_fd", 1e-6);
    let mut compat = Worst::new("metric_compatibility", 1e-9);
    let mut bianchi = Worst::new("bianchi", 1e-9);
    let mut ricci = Worst::new("ricci_symmetry", 1e-9);
    let mut frame = Worst::new("frame_independence", 1e-9);
    let mut split = Worst::new("laplacian_split", 1e-8);
    let mut vertical = Worst::new("vertical_derivative", 1e-9);
    let mut merged: Vec<SuiteResult> = Vec::new();
    let mut tally = SignTally::default();
    let mut by_model = BTreeMap::new();

    for (label, model) in &models {
        let map = oracle_map(model)?;
        let c = classify(model, &sampler, &tol)?;
        let pts: Vec<Vec<f64>> = c.records.iter().map(|r| r.point.clone()).collect();
        // derivative and curvature identities on every chart of the model
        for (mi, m) in manifolds(model).into_iter().enumerate() {
            let local: Vec<Vec<f64>> = if mi == 0 {
                pts.clone()
            } else {
                pts.iter().map(|p| map.eval_f64(p)).collect::<Result<_>>()?
            };
            for p in local.iter().take(3) {
                for i in 0..m.dim() {
                    for j in i..m.dim() {
                        fd.see(jet_fd_gap(m.metric.entry(i, j), p, m.metric.consts())?, label, p);
                    }
                }
            }
            for p in &local {
                let mut geo = PointGeometry::new(&m.metric, p)?;
                if opts.corrupt_christoffel {
                    geo.corrupt_christoffel_sign();
                }
                compat.see(geo.metric_compatibility_residual()?, label, p);
                bianchi.see(geo.bianchi_residual(), label, p);
                ricci.see(geo.ricci_symmetry_residual(), label, p);
            }
        }
        for p in pts.iter().take(3) {
            for comp in map.components() {
                fd.see(jet_fd_gap(comp, p, map.consts())?, label, p);
            }
        }
        for p in &pts {
            let mp = map.at(p)?;
            let t = mp.tension()?;
            let cands: Vec<_> = (0..mp.dom.dim()).rev().map(|i| mp.dom.coordinate_field(i)).collect();
            let alt = mp.dom.tensors.gram_schmidt(&cands, mp.dom.dim(), p)?;
            let t2 = mp.tension_with_frame(&alt)?;
            let gap = mp.norm(&sub_vectors(&t.value, &t2.value));
            frame.see(normalized(gap, t.constituents + t2.constituents), label, p);
        }
        if let Some(sub) = model.submersion() {
            let base_names = sub.base().chart.names().to_vec();
            let sections: Vec<Vec<ScalarExpr>> = [
                vec!["1".to_string(), "0".to_string()],
                vec![format!("sin({})", base_names[0]), format!("{} * {}", base_names[0], base_names[1])],
            ]
            .iter()
            .map(|s| s.iter().map(|e| parse_expr(e, &base_names, &model.consts)).collect())
            .collect::<std::result::Result<_, _>>()?;
            for p in &pts {
                let sp = sub.at(p)?;
                let b = sp.mp.bitension()?;
                let tau = &b.tension.value;
                let full = sp.mp.rough_laplacian_terms(tau, sp.mp.frame())?;
                let (h, v) = sp.laplacian_split(tau)?;
                let parts = crate::map::sum_vectors(&[h, v]);
                let gap = sp.mp.norm(&sub_vectors(&full.total(), &parts));
                split.see(normalized(gap, full.constituents), label, p);
                for s in &sections {
                    let w = sp.pulled_back(s, &model.consts)?;
                    vertical.see(sp.mp.norm(&sp.vertical_derivative(&w)?), label, p);
                }
            }
        }
        if let Some(t) = &c.sign_tally {
            tally.merge(t);
            by_model.insert(label.clone(), *t);
        }
        for s in model_suites(model, &c)? {
            merge(&mut merged, label, s);
        }
    }

    let mut suites: Vec<SuiteResult> =
        vec![fd.result(), compat.result(), bianchi.result(), ricci.result(), frame.result(), split.result(), vertical.result()];
    merged.retain(|s| s.name != "sign_resolution");
    suites.extend(merged);
    let variant = tally.resolved();
    let unresolved: Vec<&str> =
        by_model.iter().filter(|(_, t)| t.neither > 0).map(|(k, _)| k.as_str()).collect();
    let detail = format!(
        "{}; plus-only {}, minus-only {}, both {}, neither {}{}",
        match variant {
            Some(v) => format!("resolved: {v:?}"),
            None => "no single variant matches everywhere".into(),
        },
        tally.plus_only,
        tally.minus_only,
        tally.both,
        tally.neither,
        if unresolved.is_empty() { String::new() } else { format!("; neither variant matches on {}", unresolved.join(", ")) },
    );
    // points the better of the two variants fails to match
    let mismatched = (tally.total() - tally.both - tally.plus_only.max(tally.minus_only)) as f64;
    suites.push(SuiteResult::finding("sign_resolution", mismatched, detail));
    Ok(ValidationSummary { suites, sign_tally: tally, sign_variant: variant, sign_by_model: by_model })
}
