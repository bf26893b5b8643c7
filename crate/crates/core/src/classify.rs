//! Seeded sampling and harmonic / biharmonic classification of a model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_positive_definite, Manifold};
use crate::jet::values;
use crate::map::{normalized, sub_vectors, MapPoint, SmoothMap};
use crate::submersion::{EinsteinResiduals, SignVariant};
use crate::zoo::{BuiltModel, ModelKind};

/// Residual below which a reduced bitension variant counts as matching.
pub const SIGN_MATCH_TOL: f64 = 1e-6;

/// Attempts allowed per requested point before sampling gives up.
pub const ATTEMPTS_PER_POINT: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub tol_h: f64,
    pub tol_b: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { tol_h: 1e-7, tol_b: 1e-7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub points: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Harmonic,
    ProperBiharmonic,
    Neither,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Harmonic => "HARMONIC",
            Verdict::ProperBiharmonic => "PROPER_BIHARMONIC",
            Verdict::Neither => "NEITHER",
        })
    }
}

/// Which reduced bitension variants agree with the definitional one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignMatch {
    PlusOnly,
    MinusOnly,
    Both,
    Neither,
}

impl SignMatch {
    pub fn from_gaps(plus: f64, minus: f64) -> Self {
        match (plus <= SIGN_MATCH_TOL, minus <= SIGN_MATCH_TOL) {
            (true, false) => SignMatch::PlusOnly,
            (false, true) => SignMatch::MinusOnly,
            (true, true) => SignMatch::Both,
            (false, false) => SignMatch::Neither,
        }
    }
}

/// Submersion-specific residuals at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmersionRecord {
    pub kappa: Vec<f64>,
    pub horizontal_remainder: f64,
    pub orthonormality: f64,
    pub isometry: f64,
    /// Normalized `‖τ_reduced − τ‖`.
    pub tension_gap: f64,
    /// Raw norms of the two reduced bitension variants.
    pub tau2_plus: f64,
    pub tau2_minus: f64,
    /// Normalized distance of each variant from the definitional bitension.
    pub plus_gap: f64,
    pub minus_gap: f64,
    pub sign_match: SignMatch,
    /// Normalized distance of `ℛ(τ)` from `Ricʰ(τ)`.
    pub curvature_gap: f64,
    pub div_x: f64,
    pub sum_e_kappa: f64,
    pub div_correction: f64,
    pub einstein: Option<EinsteinResiduals>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub index: usize,
    pub point: Vec<f64>,
    /// Raw `‖τ‖`.
    pub tau_norm: f64,
    /// Normalized `‖τ‖`, compared with `tol_h`.
    pub tau: f64,
    /// Raw `‖τ₂‖`.
    pub tau2_norm: f64,
    /// Normalized `‖τ₂‖`, compared with `tol_b`.
    pub tau2: f64,
    pub submersion: Option<SubmersionRecord>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignTally {
    pub plus_only: usize,
    pub minus_only: usize,
    pub both: usize,
    pub neither: usize,
}

impl SignTally {
    pub fn add(&mut self, m: SignMatch) {
        match m {
            SignMatch::PlusOnly => self.plus_only += 1,
            SignMatch::MinusOnly => self.minus_only += 1,
            SignMatch::Both => self.both += 1,
            SignMatch::Neither => self.neither += 1,
        }
    }

    pub fn merge(&mut self, other: &SignTally) {
        self.plus_only += other.plus_only;
        self.minus_only += other.minus_only;
        self.both += other.both;
        self.neither += other.neither;
    }

    pub fn total(&self) -> usize {
        self.plus_only + self.minus_only + self.both + self.neither
    }

    /// The one variant that matched at every counted point, if exactly one
    /// did. Points where both match (for instance `X = 0`) do not decide.
    pub fn resolved(&self) -> Option<SignVariant> {
        let t = self.total();
        let plus = t > 0 && self.plus_only + self.both == t;
        let minus = t > 0 && self.minus_only + self.both == t;
        match (plus, minus) {
            (true, false) => Some(SignVariant::Plus),
            (false, true) => Some(SignVariant::Minus),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Option<Verdict>,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub max_tau: f64,
    pub max_tau2: f64,
    pub min_tau_norm: f64,
    pub sign_tally: Option<SignTally>,
    pub resolved_variant: Option<SignVariant>,
    pub records: Vec<PointRecord>,
}

/// Verdict from normalized residuals alone; `None` without records.
pub fn verdict(records: &[PointRecord], tol: &Tolerances) -> Option<Verdict> {
    if records.is_empty() {
        return None;
    }
    let max_tau = records.iter().map(|r| r.tau).fold(0.0, f64::max);
    let max_tau2 = records.iter().map(|r| r.tau2).fold(0.0, f64::max);
    // NaN residuals never pass a tolerance
    let finite = records.iter().all(|r| r.tau.is_finite() && r.tau2.is_finite());
    Some(if finite && max_tau <= tol.tol_h {
        Verdict::Harmonic
    } else if finite && max_tau2 <= tol.tol_b {
        Verdict::ProperBiharmonic
    } else {
        Verdict::Neither
    })
}

/// Definitional oracle of a model: its map, or the identity of a manifold.
pub fn oracle_map(model: &BuiltModel) -> Result<SmoothMap> {
    match &model.kind {
        ModelKind::Map(m) => Ok(m.clone()),
        ModelKind::Submersion(s) => Ok(s.map.clone()),
        ModelKind::Manifold(m) => SmoothMap::identity(m.clone()),
    }
}

fn metric_ok(m: &Manifold, p: &[f64]) -> bool {
    match m.metric.eval_f64(p) {
        Ok(g) => g.iter().all(|v| v.is_finite()) && check_positive_definite(&g, m.dim(), p).is_ok(),
        Err(_) => false,
    }
}

fn admissible(map: &SmoothMap, p: &[f64]) -> bool {
    if !map.domain.chart.contains(p) || !metric_ok(&map.domain, p) {
        return false;
    }
    match map.eval_f64(p) {
        Ok(img) => img.iter().all(|v| v.is_finite()) && metric_ok(&map.codomain, &img),
        Err(_) => false,
    }
}

/// Uniform rejection sampling over the domain box.
pub fn sample_points(map: &SmoothMap, cfg: &SamplerConfig) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let budget = cfg.points.saturating_mul(ATTEMPTS_PER_POINT);
    let mut out = Vec::with_capacity(cfg.points);
    let mut attempts = 0;
    while out.len() < cfg.points {
        if attempts == budget {
            return Err(Error::SamplingExhausted { found: out.len(), wanted: cfg.points, attempts });
        }
        attempts += 1;
        let p = map.domain.chart.sample_box(&mut rng);
        if admissible(map, &p) {
            out.push(p);
        }
    }
    Ok(out)
}

/// Run `f` on a pool capped by `SUBLAB_THREADS` when that is set.
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let cap = std::env::var("SUBLAB_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()).filter(|&n| n > 0);
    match cap.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

fn map_record(index: usize, mp: &MapPoint) -> Result<PointRecord> {
    let b = mp.bitension()?;
    let tau_norm = mp.norm(&b.tension.value);
    let tau2_norm = mp.norm_f64(&b.value);
    Ok(PointRecord {
        index,
        point: mp.point().to_vec(),
        tau_norm,
        tau: normalized(tau_norm, b.tension.constituents),
        tau2_norm,
        tau2: normalized(tau2_norm, b.constituents),
        submersion: None,
    })
}

/// All residuals at one sample point.
pub fn evaluate_point(model: &BuiltModel, map: &SmoothMap, index: usize, p: &[f64]) -> Result<PointRecord> {
    let Some(sub) = model.submersion() else {
        return map_record(index, &map.at(p)?);
    };
    let sp = sub.at(p)?;
    let mp = &sp.mp;
    let b = mp.bitension()?;
    let tau = &b.tension.value;
    let tau_norm = mp.norm(tau);
    let tau2_norm = mp.norm_f64(&b.value);
    let reduced_tau = sp.tension_reduced();
    let tension_gap = normalized(mp.norm(&sub_vectors(&reduced_tau, tau)), b.tension.constituents + mp.norm(&reduced_tau));
    let red = sp.bitension_reduced()?;
    let scale = b.constituents + red.constituents;
    let gap = |v: &[f64]| {
        let d: Vec<f64> = v.iter().zip(&b.value).map(|(a, c)| a - c).collect();
        normalized(mp.norm_f64(&d), scale)
    };
    let (plus_gap, minus_gap) = (gap(&red.plus), gap(&red.minus));
    let curv = values(&mp.curvature_term(tau));
    let ric = values(&sp.base_ricci().mul_vec(tau));
    let cd: Vec<f64> = curv.iter().zip(&ric).map(|(a, c)| a - c).collect();
    let curvature_gap = normalized(mp.norm_f64(&cd), mp.norm_f64(&curv) + mp.norm_f64(&ric));
    let div = sp.divergence_tension()?;
    let einstein = match &model.einstein {
        Some(data) => Some(sp.einstein_residuals(data)?),
        None => None,
    };
    Ok(PointRecord {
        index,
        point: p.to_vec(),
        tau_norm,
        tau: normalized(tau_norm, b.tension.constituents),
        tau2_norm,
        tau2: normalized(tau2_norm, b.constituents),
        submersion: Some(SubmersionRecord {
            kappa: values(&sp.coeffs.kappa),
            horizontal_remainder: sp.coeffs.horizontal_remainder,
            orthonormality: sp.orthonormality_residual(),
            isometry: sp.isometry_residual,
            tension_gap,
            tau2_plus: mp.norm_f64(&red.plus),
            tau2_minus: mp.norm_f64(&red.minus),
            plus_gap,
            minus_gap,
            sign_match: SignMatch::from_gaps(plus_gap, minus_gap),
            curvature_gap,
            div_x: div.div,
            sum_e_kappa: div.sum_e_kappa,
            div_correction: div.correction,
            einstein,
        }),
    })
}

/// Sample, evaluate in parallel, and classify.
pub fn classify(model: &BuiltModel, sampler: &SamplerConfig, tol: &Tolerances) -> Result<Classification> {
    let map = oracle_map(model)?;
    let points = sample_points(&map, sampler)?;
    let records: Vec<PointRecord> = with_thread_cap(|| {
        points.par_iter().enumerate().map(|(i, p)| evaluate_point(model, &map, i, p)).collect::<Result<Vec<_>>>()
    })?;
    Ok(summarize(records, tol, sampler.seed))
}

/// Aggregate records; order-independent since records are sorted by index.
pub fn summarize(mut records: Vec<PointRecord>, tol: &Tolerances, seed: u64) -> Classification {
    records.sort_by_key(|r| r.index);
    let mut tally: Option<SignTally> = None;
    for r in &records {
        if let Some(s) = &r.submersion {
            tally.get_or_insert_with(SignTally::default).add(s.sign_match);
        }
    }
    let max_of = |f: fn(&PointRecord) -> f64| records.iter().map(f).fold(0.0, f64::max);
    Classification {
        verdict: verdict(&records, tol),
        tolerances: *tol,
        seed,
        max_tau: max_of(|r| r.tau),
        max_tau2: max_of(|r| r.tau2),
        min_tau_norm: records.iter().map(|r| r.tau_norm).fold(f64::INFINITY, f64::min),
        resolved_variant: tally.as_ref().and_then(SignTally::resolved),
        sign_tally: tally,
        records,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{build_model, ModelSpec, ParamValue};

    fn model(id: &str) -> BuiltModel {
        build_model(&ModelSpec { id: id.into(), params: Default::default() }).unwrap()
    }

    fn run(id: &str, n: usize) -> Classification {
        classify(&model(id), &SamplerConfig { points: n, seed: 7 }, &Tolerances::default()).unwrap()
    }

    #[test]
    fn product_is_harmonic() {
        assert_eq!(run("product", 10).verdict, Some(Verdict::Harmonic));
    }

    #[test]
    fn loubeau_ou_is_proper_biharmonic() {
        let c = run("loubeau_ou", 10);
        assert_eq!(c.verdict, Some(Verdict::ProperBiharmonic));
        assert_eq!(c.resolved_variant, Some(SignVariant::Minus));
    }

    #[test]
    fn gaussian_warp_is_neither() {
        assert_eq!(run("warped_custom", 10).verdict, Some(Verdict::Neither));
    }

    #[test]
    fn sampling_is_deterministic_and_in_domain() {
        let m = model("inversion");
        let map = oracle_map(&m).unwrap();
        let cfg = SamplerConfig { points: 50, seed: 3 };
        let a = sample_points(&map, &cfg).unwrap();
        assert_eq!(a, sample_points(&map, &cfg).unwrap());
        for p in &a {
            let r2: f64 = p.iter().map(|x| x * x).sum();
            assert!((0.25..=4.0).contains(&r2));
        }
    }

    #[test]
    fn impossible_domain_exhausts_sampling() {
        let mut m = model("product");
        if let ModelKind::Submersion(s) = &mut m.kind {
            s.map.domain.chart = s.map.domain.chart.clone().with_constraint("-1").unwrap();
        }
        let err = classify(&m, &SamplerConfig { points: 3, seed: 1 }, &Tolerances::default()).unwrap_err();
        assert_eq!(err, Error::SamplingExhausted { found: 0, wanted: 3, attempts: 300 });
    }

    #[test]
    fn verdict_is_a_function_of_records() {
        let c = run("loubeau_ou", 5);
        assert_eq!(verdict(&c.records, &c.tolerances), c.verdict);
        assert_eq!(verdict(&[], &c.tolerances), None);
        let strict = Tolerances { tol_h: 1e-7, tol_b: 0.0 };
        assert_eq!(verdict(&c.records, &strict), Some(Verdict::Neither));
    }

    #[test]
    fn thread_cap_does_not_change_results() {
        let m = build_model(&ModelSpec {
            id: "loubeau_ou".into(),
            params: [("c1".to_string(), ParamValue::Num(0.5))].into_iter().collect(),
        })
        .unwrap();
        let cfg = SamplerConfig { points: 8, seed: 11 };
        let a = classify(&m, &cfg, &Tolerances::default()).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| classify(&m, &cfg, &Tolerances::default()).unwrap());
        assert_eq!(a, b);
    }
}
