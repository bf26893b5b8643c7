//! Run orchestration and JSON / CSV reports.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classify::{classify, oracle_map, Classification, PointRecord, SignTally, Tolerances, Verdict};
use crate::config::{InlineModel, RunConfig};
use crate::error::{Error, Result};
use crate::geometry::Manifold;
use crate::map::{normalized, sub_vectors, MapPoint, SmoothMap};
use crate::submersion::{einstein_defect, field_residuals, obata_residual, SignVariant};
use crate::zoo::{BuiltModel, ModelKind, Params};

pub const REPORT_FORMAT: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteStatus {
    Pass,
    Fail,
    /// Computed and reported without a pass criterion.
    Finding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub status: SuiteStatus,
    pub worst: f64,
    pub tolerance: Option<f64>,
    pub detail: String,
}

impl SuiteResult {
    pub fn check(name: &str, worst: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        let status = if worst <= tolerance { SuiteStatus::Pass } else { SuiteStatus::Fail };
        SuiteResult { name: name.into(), status, worst, tolerance: Some(tolerance), detail: detail.into() }
    }

    pub fn finding(name: &str, worst: f64, detail: impl Into<String>) -> Self {
        SuiteResult { name: name.into(), status: SuiteStatus::Finding, worst, tolerance: None, detail: detail.into() }
    }

    pub fn passed(&self) -> bool {
        self.status != SuiteStatus::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub model: String,
    pub params: Params,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub inline: Option<InlineModel>,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub points: usize,
    /// Reduced bitension variant that alone matched the definitional one at
    /// every point.
    pub sign_variant: Option<SignVariant>,
    pub sign_tally: Option<SignTally>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub max_tau: f64,
    pub max_tau2: f64,
    pub min_tau_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format: u32,
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch; absent when suppressed.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timestamp: Option<u64>,
    pub header: ReportHeader,
    pub verdict: Option<Verdict>,
    pub summary: ReportSummary,
    pub suites: Vec<SuiteResult>,
    pub records: Vec<PointRecord>,
}

impl Report {
    pub fn from_classification(header: ReportHeader, c: Classification, suites: Vec<SuiteResult>, timestamp: bool) -> Self {
        let timestamp = timestamp.then(|| {
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs())
        });
        let summary = ReportSummary {
            max_tau: c.max_tau,
            max_tau2: c.max_tau2,
            min_tau_norm: if c.records.is_empty() { 0.0 } else { c.min_tau_norm },
        };
        Report {
            format: REPORT_FORMAT,
            tool: "sublab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp,
            header,
            verdict: c.verdict,
            summary,
            suites,
            records: c.records,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("report does not parse: {e}")))
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// One row per record; empty cells where a quantity does not apply.
    pub fn to_csv(&self, coord_names: &[String]) -> String {
        let mut out = String::from("index");
        for c in coord_names {
            out.push(',');
            out.push_str(c);
        }
        out.push_str(",tau,tau2_general,tau2_reduced_plus,tau2_reduced_minus,div_x,r1,r2\n");
        let num = |v: f64| format!("{v:.16e}");
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        for r in &self.records {
            let _ = write!(out, "{}", r.index);
            for x in &r.point {
                let _ = write!(out, ",{}", num(*x));
            }
            let s = r.submersion.as_ref();
            let e = s.and_then(|s| s.einstein);
            let _ = writeln!(
                out,
                ",{},{},{},{},{},{},{}",
                num(r.tau_norm),
                num(r.tau2_norm),
                opt(s.map(|s| s.tau2_plus)),
                opt(s.map(|s| s.tau2_minus)),
                opt(s.map(|s| s.div_x)),
                opt(e.map(|e| e.r1)),
                opt(e.map(|e| e.r2)),
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Write `contents` next to `path` and rename it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path.file_name().ok_or_else(|| Error::Io(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn render(report: &Report, format: ReportFormat, coord_names: &[String]) -> Result<String> {
    match format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Csv => Ok(report.to_csv(coord_names)),
    }
}

pub fn emit_report(report: &Report, format: ReportFormat, coord_names: &[String], path: &Path) -> Result<()> {
    write_atomic(path, &render(report, format, coord_names)?)
}

fn worst_by<'a>(records: &'a [PointRecord], f: impl Fn(&PointRecord) -> Option<f64>) -> Option<(f64, &'a PointRecord)> {
    let mut best: Option<(f64, &PointRecord)> = None;
    for r in records {
        if let Some(v) = f(r) {
            let v = if v.is_nan() { f64::INFINITY } else { v };
            if best.is_none_or(|(b, _)| v > b) {
                best = Some((v, r));
            }
        }
    }
    best
}

fn at_point(r: &PointRecord) -> String {
    format!("worst at sample {} {:?}", r.index, r.point)
}

fn tally_text(t: &SignTally) -> String {
    format!("plus-only {}, minus-only {}, both {}, neither {}", t.plus_only, t.minus_only, t.both, t.neither)
}

/// Einstein / eigenfunction / Killing / Obata suites on a manifold at the
/// given points.
pub fn einstein_suites(model: &BuiltModel, manifold: &Manifold, points: &[Vec<f64>]) -> Result<Vec<SuiteResult>> {
    let Some(data) = model.einstein else {
        return Ok(Vec::new());
    };
    let id = SmoothMap::identity(manifold.clone())?;
    let mut defect: f64 = 0.0;
    let mut eig: f64 = 0.0;
    let mut bochner: f64 = 0.0;
    let mut killing_r2: f64 = 0.0;
    let mut ob = [0.0f64; 5];
    for p in points {
        let mp = id.at(p)?;
        defect = defect.max(einstein_defect(&mp.dom.ricci_endomorphism(), data.c));
        if defect > crate::submersion::EINSTEIN_TOL {
            continue;
        }
        if let (Some(f), Some(l1)) = (&model.eigenfunction, data.lambda1) {
            let fj = f.eval_jet(mp.dom.coords(), &model.consts)?;
            eig = eig.max((mp.dom.laplacian(&fj)?.value() - l1 * fj.value()).abs());
            let o = obata_residual(&mp, f, &model.consts, &data)?;
            for (w, v) in ob.iter_mut().zip([o.eigres, o.jres, o.jres_ricci, o.r1, o.r2]) {
                *w = w.max(v);
            }
        }
        for k in &model.killing {
            let refs: Vec<&str> = k.iter().map(String::as_str).collect();
            let field = crate::geometry::VectorField::parse(manifold.chart.names(), &refs, &model.consts)?;
            let x = field.eval(mp.dom.coords())?;
            let res = field_residuals(&mp, &x, &data)?;
            bochner = bochner.max(res.r1);
            killing_r2 = killing_r2.max(res.r2);
        }
    }
    let mut out = vec![SuiteResult::check(
        "einstein_constant",
        defect,
        crate::submersion::EINSTEIN_TOL,
        format!("Ric - c Id with c = {}", data.c),
    )];
    if defect > crate::submersion::EINSTEIN_TOL {
        return Ok(out);
    }
    if model.eigenfunction.is_some() && data.lambda1.is_some() {
        let l1 = data.lambda1.unwrap_or_default();
        out.push(SuiteResult::check("eigenfunction", eig, 1e-8, format!("|Δf - λ₁f| with λ₁ = {l1}")));
        out.push(SuiteResult::finding(
            "obata",
            ob[0].max(ob[3]),
            format!(
                "X = grad f: max |Δf - 2cf| = {:e}, ‖Δ̄X - 2Ric X‖ = {:e}, ‖Δ̄X - Ric X‖ = {:e}, ‖Δ̄X - cX‖ = {:e}, ‖∇_X X‖ = {:e}",
                ob[0], ob[1], ob[2], ob[3], ob[4]
            ),
        ));
    }
    if !model.killing.is_empty() {
        out.push(SuiteResult::check("killing_bochner", bochner, 1e-6, "‖Δ̄X - cX‖ for Killing fields"));
        out.push(SuiteResult::finding("killing_geodesic", killing_r2, "‖∇_X X‖ for Killing fields"));
    }
    Ok(out)
}

fn reference_suite(model: &BuiltModel, map: &SmoothMap, records: &[PointRecord]) -> Result<Option<SuiteResult>> {
    let Some(reference) = &model.reference_tension else {
        return Ok(None);
    };
    let mut worst: f64 = 0.0;
    for r in records {
        let mp: MapPoint = map.at(&r.point)?;
        let t = mp.tension()?;
        let want = reference
            .iter()
            .map(|e| e.eval_jet(mp.dom.coords(), &model.consts))
            .collect::<Result<Vec<_>>>()?;
        let gap = normalized(mp.norm(&sub_vectors(&t.value, &want)), t.constituents + mp.norm(&want));
        worst = worst.max(gap);
    }
    Ok(Some(SuiteResult::check("reference_tension", worst, 1e-7, "τ against its closed form")))
}

/// Residual suites that apply to a model, from its classification records.
pub fn model_suites(model: &BuiltModel, c: &Classification) -> Result<Vec<SuiteResult>> {
    let mut out = Vec::new();
    let records = &c.records;
    if c.verdict == Some(Verdict::Harmonic) {
        out.push(SuiteResult::check(
            "harmonic_implies_biharmonic",
            c.max_tau2,
            c.tolerances.tol_b,
            "max normalized ‖τ₂‖ on a HARMONIC sample",
        ));
    }
    let map = oracle_map(model)?;
    if let Some(s) = reference_suite(model, &map, records)? {
        out.push(s);
    }
    if let Some(sub) = model.submersion() {
        let frame = worst_by(records, |r| r.submersion.as_ref().map(|s| s.orthonormality.max(s.isometry)));
        if let Some((w, r)) = frame {
            out.push(SuiteResult::check("adapted_frame", w, 1e-10, at_point(r)));
        }
        if let Some((w, r)) = worst_by(records, |r| r.submersion.as_ref().map(|s| s.tension_gap)) {
            out.push(SuiteResult::check("tension_reduced", w, 1e-8, at_point(r)));
        }
        if let Some(t) = &c.sign_tally {
            let best = worst_by(records, |r| r.submersion.as_ref().map(|s| s.plus_gap.min(s.minus_gap)));
            let resolved = match t.resolved() {
                Some(v) => format!("resolved: {v:?}"),
                None => "unresolved".to_string(),
            };
            out.push(SuiteResult::finding(
                "sign_resolution",
                best.map_or(0.0, |b| b.0),
                format!("{resolved}; {}", tally_text(t)),
            ));
        }
        if let Some((w, r)) = worst_by(records, |r| r.submersion.as_ref().map(|s| s.curvature_gap)) {
            out.push(SuiteResult::check("curvature_term", w, 1e-7, at_point(r)));
        }
        let div = worst_by(records, |r| {
            r.submersion.as_ref().map(|s| (s.div_x - (s.sum_e_kappa - s.div_correction)).abs())
        });
        if let Some((w, r)) = div {
            out.push(SuiteResult::check("divergence_identity", w, 1e-8, at_point(r)));
        }
        let r1 = worst_by(records, |r| r.submersion.as_ref().and_then(|s| s.einstein).map(|e| e.r1));
        let r2 = worst_by(records, |r| r.submersion.as_ref().and_then(|s| s.einstein).map(|e| e.r2));
        if let (Some((w1, _)), Some((w2, _))) = (r1, r2) {
            out.push(SuiteResult::finding(
                "einstein_residuals",
                w1.max(w2),
                format!("max r1 = ‖Δ̄ʰX - cX‖ = {w1:e}, max r2 = ‖∇ʰ_X X‖ = {w2:e}"),
            ));
        }
        let images: Vec<Vec<f64>> = records.iter().map(|r| sub.map.eval_f64(&r.point)).collect::<Result<_>>()?;
        out.extend(einstein_suites(model, sub.base(), &images)?);
    } else if let ModelKind::Manifold(m) = &model.kind {
        let pts: Vec<Vec<f64>> = records.iter().map(|r| r.point.clone()).collect();
        out.extend(einstein_suites(model, m, &pts)?);
    }
    Ok(out)
}

/// Build, classify and assemble a report.
pub fn run_check(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    let model = config.build()?;
    run_model(config, &model)
}

/// Classify an already built model under `config`'s sampling and tolerances.
pub fn run_model(config: &RunConfig, model: &BuiltModel) -> Result<Report> {
    let c = classify(model, &config.sampler(), &config.tolerances)?;
    let suites = model_suites(model, &c)?;
    let (name, _) = config.model_label();
    let header = ReportHeader {
        model: name,
        params: model.params.clone(),
        inline: config.inline.clone(),
        tolerances: config.tolerances,
        seed: config.sampling.seed,
        points: config.sampling.points,
        sign_variant: c.resolved_variant,
        sign_tally: c.sign_tally,
    };
    Ok(Report::from_classification(header, c, suites, config.output.timestamp))
}
