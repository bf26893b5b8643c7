//! Built-in, parameterized example models.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse_expr, Consts, ScalarExpr};
use crate::geometry::{Chart, Manifold, MetricField};
use crate::map::SmoothMap;
use crate::submersion::{EinsteinData, RiemannianSubmersion};

/// Model parameter: a number or an expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Num(f64),
    Text(String),
}

impl ParamValue {
    /// Numbers parse as numbers, anything else is kept as text.
    pub fn from_cli(s: &str) -> Self {
        match s.trim().parse::<f64>() {
            Ok(v) => ParamValue::Num(v),
            Err(_) => ParamValue::Text(s.trim().to_string()),
        }
    }
}

pub type Params = BTreeMap<String, ParamValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub id: String,
    #[serde(default)]
    pub params: Params,
}

/// What a model builds to.
#[derive(Debug, Clone)]
pub enum ModelKind {
    Map(SmoothMap),
    Submersion(RiemannianSubmersion),
    Manifold(Manifold),
}

/// A built model with the reference data the checks use.
#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub id: String,
    /// Parameters after defaults are applied.
    pub params: Params,
    pub kind: ModelKind,
    /// Einstein data of the base (submersions) or of the manifold itself.
    pub einstein: Option<EinsteinData>,
    /// Eigenfunction on the (base) manifold for Obata checks.
    pub eigenfunction: Option<ScalarExpr>,
    /// Killing fields on the (base) manifold, as component expressions.
    pub killing: Vec<Vec<String>>,
    /// Closed-form tension in codomain coordinates, when known.
    pub reference_tension: Option<Vec<ScalarExpr>>,
    pub consts: Consts,
}

impl BuiltModel {
    /// Chart whose points are sampled.
    pub fn sample_chart(&self) -> &Chart {
        match &self.kind {
            ModelKind::Map(m) => &m.domain.chart,
            ModelKind::Submersion(s) => &s.map.domain.chart,
            ModelKind::Manifold(m) => &m.chart,
        }
    }

    pub fn submersion(&self) -> Option<&RiemannianSubmersion> {
        match &self.kind {
            ModelKind::Submersion(s) => Some(s),
            _ => None,
        }
    }

    /// The manifold Einstein data and eigenfunctions refer to.
    pub fn einstein_manifold(&self) -> &Manifold {
        match &self.kind {
            ModelKind::Map(m) => &m.codomain,
            ModelKind::Submersion(s) => s.base(),
            ModelKind::Manifold(m) => m,
        }
    }
}

pub const MODEL_IDS: &[&str] =
    &["product", "inversion", "loubeau_ou", "warped_custom", "hopf", "berger", "flag_local", "cp1_round", "s2_round", "su2_round"];

struct ParamReader<'a> {
    id: &'a str,
    given: &'a Params,
    used: Vec<&'static str>,
    resolved: Params,
}

impl<'a> ParamReader<'a> {
    fn new(spec: &'a ModelSpec) -> Self {
        ParamReader { id: &spec.id, given: &spec.params, used: Vec::new(), resolved: Params::new() }
    }

    fn num(&mut self, name: &'static str, default: f64) -> Result<f64> {
        self.used.push(name);
        let v = match self.given.get(name) {
            None => default,
            Some(ParamValue::Num(v)) => *v,
            Some(ParamValue::Text(t)) => {
                return Err(Error::InvalidModel(format!("{}: parameter `{name}` must be a number, got `{t}`", self.id)))
            }
        };
        if !v.is_finite() {
            return Err(Error::InvalidModel(format!("{}: parameter `{name}` must be finite", self.id)));
        }
        self.resolved.insert(name.to_string(), ParamValue::Num(v));
        Ok(v)
    }

    fn text(&mut self, name: &'static str, default: &str) -> Result<String> {
        self.used.push(name);
        let v = match self.given.get(name) {
            None => default.to_string(),
            Some(ParamValue::Text(t)) => t.clone(),
            Some(ParamValue::Num(v)) => format!("{v:?}"),
        };
        self.resolved.insert(name.to_string(), ParamValue::Text(v.clone()));
        Ok(v)
    }

    fn finish(self) -> Result<Params> {
        for k in self.given.keys() {
            if !self.used.contains(&k.as_str()) {
                return Err(Error::InvalidModel(format!(
                    "{}: unknown parameter `{k}` (accepted: {})",
                    self.id,
                    self.used.join(", ")
                )));
            }
        }
        Ok(self.resolved)
    }
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn flat(coords: &[&str], bounds: &[(f64, f64)]) -> Result<Manifold> {
    Manifold::new(Chart::new(coords, bounds)?, MetricField::euclidean(&names(coords))?)
}

fn plain(id: &str, params: Params, kind: ModelKind, consts: Consts) -> BuiltModel {
    BuiltModel {
        id: id.to_string(),
        params,
        kind,
        einstein: None,
        eigenfunction: None,
        killing: Vec::new(),
        reference_tension: None,
        consts,
    }
}

/// Round 2-sphere of radius `r` in a polar chart.
fn sphere2(r: f64, coords: [&str; 2], theta_margin: f64, phi_range: (f64, f64)) -> Result<Manifold> {
    let mut k = Consts::new();
    k.insert("rr".into(), r * r);
    let c = names(&coords);
    let geo = MetricField::diagonal(&c, &["rr", &format!("rr*sin({})^2", coords[0])], &k)?;
    let chart = Chart::from_parts(c, vec![(theta_margin, PI - theta_margin), phi_range], k)?;
    Manifold::new(chart, geo)
}

fn sphere_killing() -> Vec<Vec<String>> {
    vec![names(&["0", "1"]), names(&["-sin(ph)", "-cos(th)/sin(th)*cos(ph)"])]
}

fn warped_product(id: &str, beta: &str, consts: &Consts, x_range: (f64, f64)) -> Result<RiemannianSubmersion> {
    let c = names(&["x", "y", "t"]);
    let chart = Chart::from_parts(c.clone(), vec![x_range, (-1.0, 1.0), (-1.0, 1.0)], consts.clone())?;
    let metric = MetricField::diagonal(&c, &["1", "1", &format!("({beta})^2")], consts)
        .map_err(|e| Error::InvalidModel(format!("{id}: {e}")))?;
    let total = Manifold::new(chart, metric)?;
    let base = flat(&["x", "y"], &[(-1e3, 1e3), (-1e3, 1e3)])?;
    RiemannianSubmersion::new(SmoothMap::new(total, base, &["x", "y"], consts)?)
}

pub fn build_model(spec: &ModelSpec) -> Result<BuiltModel> {
    let mut r = ParamReader::new(spec);
    let id = spec.id.as_str();
    match id {
        "product" => {
            let total = flat(&["x", "y", "t"], &[(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)])?;
            let base = flat(&["u", "v"], &[(-1.0, 1.0), (-1.0, 1.0)])?;
            let sub = RiemannianSubmersion::new(SmoothMap::new(total, base, &["x", "y"], &Consts::new())?)?;
            let mut m = plain(id, r.finish()?, ModelKind::Submersion(sub), Consts::new());
            m.einstein = Some(EinsteinData { c: 0.0, lambda1: None });
            Ok(m)
        }
        "inversion" => {
            let n = r.num("n", 4.0)?;
            if n.fract() != 0.0 || !(2.0..=4.0).contains(&n) {
                return Err(Error::InvalidModel(format!("inversion: n must be 2, 3 or 4, got {n}")));
            }
            let n = n as usize;
            let coords: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
            let r2 = coords.iter().map(|c| format!("{c}^2")).collect::<Vec<_>>().join(" + ");
            let chart = Chart::from_parts(coords.clone(), vec![(-2.0, 2.0); n], Consts::new())?
                .with_constraint(&format!("{r2} - 0.25"))?
                .with_constraint(&format!("4 - ({r2})"))?;
            let domain = Manifold::new(chart, MetricField::euclidean(&coords)?)?;
            let ynames: Vec<String> = (1..=n).map(|i| format!("y{i}")).collect();
            let codomain = Manifold::new(
                Chart::from_parts(ynames.clone(), vec![(-4.0, 4.0); n], Consts::new())?,
                MetricField::euclidean(&ynames)?,
            )?;
            let comps: Vec<String> = coords.iter().map(|c| format!("{c} / ({r2})")).collect();
            let refs: Vec<&str> = comps.iter().map(String::as_str).collect();
            let map = SmoothMap::new(domain, codomain, &refs, &Consts::new())?;
            // τ = (4 − 2n) x / |x|⁴, written over the domain chart
            let reference = coords
                .iter()
                .map(|c| parse_expr(&format!("{} * {c} / ({r2})^2", 4.0 - 2.0 * n as f64), &coords, &Consts::new()))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let mut m = plain(id, r.finish()?, ModelKind::Map(map), Consts::new());
            m.reference_tension = Some(reference);
            Ok(m)
        }
        "loubeau_ou" => {
            let c1 = r.num("c1", 1.0)?;
            let c2 = r.num("c2", 1.0)?;
            let xmin = r.num("x_min", 0.1)?;
            let xmax = r.num("x_max", 2.0)?;
            let params = r.finish()?;
            if c1 == 0.0 || c2 == 0.0 {
                return Err(Error::InvalidModel("loubeau_ou: c1 and c2 must be nonzero".into()));
            }
            if !(xmin < xmax) || (xmin <= 0.0 && xmax >= 0.0) {
                return Err(Error::InvalidModel("loubeau_ou: the x-range must exclude x = 0".into()));
            }
            let mut k = Consts::new();
            k.insert("c1".into(), c1);
            k.insert("c2".into(), c2);
            let beta = "c2*exp(-c1*x)*(1-exp(c1*x))^2";
            verify_loubeau_ou_profile(beta, &k, (xmin, xmax))?;
            let sub = warped_product(id, beta, &k, (xmin, xmax))?;
            let mut m = plain(id, params, ModelKind::Submersion(sub), k);
            m.einstein = Some(EinsteinData { c: 0.0, lambda1: None });
            Ok(m)
        }
        "warped_custom" => {
            let beta = r.text("beta", "exp(x^2/2)")?;
            let xmin = r.num("x_min", 0.1)?;
            let xmax = r.num("x_max", 2.0)?;
            let params = r.finish()?;
            if !(xmin < xmax) {
                return Err(Error::InvalidModel("warped_custom: x_min must be below x_max".into()));
            }
            parse_expr(&beta, &names(&["x"]), &Consts::new())
                .map_err(|e| Error::InvalidModel(format!("warped_custom: beta must be an expression in x: {e}")))?;
            let sub = warped_product(id, &beta, &Consts::new(), (xmin, xmax))?;
            let mut m = plain(id, params, ModelKind::Submersion(sub), Consts::new());
            m.einstein = Some(EinsteinData { c: 0.0, lambda1: None });
            Ok(m)
        }
        "hopf" | "berger" => {
            let eps = if id == "berger" { r.num("epsilon", 0.5)? } else { 1.0 };
            let radius = r.num("radius", 1.0)?;
            let params = r.finish()?;
            if !(eps > 0.0 && radius > 0.0) {
                return Err(Error::InvalidModel(format!("{id}: epsilon and radius must be positive")));
            }
            let mut k = Consts::new();
            k.insert("rr".into(), radius * radius);
            k.insert("q".into(), eps * eps - 1.0);
            let c = names(&["eta", "xi1", "xi2"]);
            let rows: &[&[&str]] = &[
                &["rr", "0", "0"],
                &["0", "rr*cos(eta)^2 + q*rr*cos(eta)^4", "q*rr*cos(eta)^2*sin(eta)^2"],
                &["0", "q*rr*cos(eta)^2*sin(eta)^2", "rr*sin(eta)^2 + q*rr*sin(eta)^4"],
            ];
            let metric = MetricField::from_strs(&c, rows, &k)?;
            let chart = Chart::from_parts(c, vec![(0.1, FRAC_PI_2 - 0.1), (-PI, PI), (-PI, PI)], k.clone())?;
            let total = Manifold::new(chart, metric)?;
            let base = sphere2(radius / 2.0, ["th", "ph"], 0.01, (-2.0 * PI - 0.1, 2.0 * PI + 0.1))?;
            let sub = RiemannianSubmersion::new(SmoothMap::new(total, base, &["2*eta", "xi1 - xi2"], &k)?)?;
            let mut m = plain(id, params, ModelKind::Submersion(sub), k);
            let c_base = 4.0 / (radius * radius);
            m.einstein = Some(EinsteinData { c: c_base, lambda1: Some(2.0 * c_base) });
            m.killing = sphere_killing();
            Ok(m)
        }
        "flag_local" => build_flag_local(r),
        "cp1_round" => {
            let params = r.finish()?;
            let m = sphere2(2f64.sqrt(), ["th", "ph"], 0.2, (-PI, PI))?;
            let mut b = plain(id, params, ModelKind::Manifold(m), Consts::new());
            b.einstein = Some(EinsteinData { c: 0.5, lambda1: Some(1.0) });
            b.eigenfunction = Some(parse_expr("sqrt(2)*cos(th)", &names(&["th", "ph"]), &Consts::new())?);
            b.killing = sphere_killing();
            Ok(b)
        }
        "s2_round" => {
            let rad = r.num("r", 1.0)?;
            let params = r.finish()?;
            if !(rad > 0.0) {
                return Err(Error::InvalidModel("s2_round: r must be positive".into()));
            }
            let m = sphere2(rad, ["th", "ph"], 0.2, (-PI, PI))?;
            let mut k = Consts::new();
            k.insert("r".into(), rad);
            let mut b = plain(id, params, ModelKind::Manifold(m), k.clone());
            let c = 1.0 / (rad * rad);
            b.einstein = Some(EinsteinData { c, lambda1: Some(2.0 * c) });
            b.eigenfunction = Some(parse_expr("r*cos(th)", &names(&["th", "ph"]), &k)?);
            b.killing = sphere_killing();
            Ok(b)
        }
        "su2_round" => {
            let params = r.finish()?;
            let c = names(&["eta", "xi1", "xi2"]);
            let metric = MetricField::diagonal(&c, &["1", "cos(eta)^2", "sin(eta)^2"], &Consts::new())?;
            let chart = Chart::from_parts(c.clone(), vec![(0.1, FRAC_PI_2 - 0.1), (-PI, PI), (-PI, PI)], Consts::new())?;
            let mut b = plain(id, params, ModelKind::Manifold(Manifold::new(chart, metric)?), Consts::new());
            b.einstein = Some(EinsteinData { c: 2.0, lambda1: Some(3.0) });
            // restriction of the ambient coordinate x₁ = cos η cos ξ₁
            b.eigenfunction = Some(parse_expr("cos(eta)*cos(xi1)", &c, &Consts::new())?);
            b.killing = vec![names(&["0", "1", "0"]), names(&["0", "0", "1"])];
            Ok(b)
        }
        other => Err(Error::InvalidModel(format!("unknown model `{other}` (known: {})", MODEL_IDS.join(", ")))),
    }
}

fn build_flag_local(mut r: ParamReader<'_>) -> Result<BuiltModel> {
    let ell = r.num("l", 2.0)?;
    let a = r.num("a", 1.0)?;
    let b = r.num("b", 0.0)?;
    let c = r.num("c", 0.0)?;
    let d = r.num("d", 1.0)?;
    let big_a = r.num("A", 1.0)?;
    let big_b = r.num("B", 1.0)?;
    let big_c = r.num("C", 1.0)?;
    let base_kind = r.text("base", "flat")?;
    let params = r.finish()?;
    let det = a * d - b * c;
    if det.abs() < 1e-12 {
        return Err(Error::InvalidModel("flag_local: ad - bc = 0 makes e1 and e2 dependent".into()));
    }
    let mut k = Consts::new();
    for (name, v) in [("a", a), ("b", b), ("c", c), ("d", d), ("A", big_a), ("B", big_b), ("C", big_c), ("l", ell)] {
        k.insert(name.into(), v);
    }
    k.insert("k".into(), big_c * ell * (ell - 1.0));
    k.insert("det".into(), det);
    let coords = names(&["s", "t", "u"]);
    let guu = "exp(-2*k*u*(A*s + B*t))";
    let (metric, base, s_range) = match base_kind.as_str() {
        "flat" => {
            let gss = "(d^2 + b^2)/det^2";
            let gtt = "(c^2 + a^2)/det^2";
            let gst = "-(d*c + a*b)/det^2";
            let rows: &[&[&str]] = &[&[gss, gst, "0"], &[gst, gtt, "0"], &["0", "0", guu]];
            let metric = MetricField::from_strs(&coords, rows, &k)?;
            let bc = names(&["s", "t"]);
            let brows: &[&[&str]] = &[&[gss, gst], &[gst, gtt]];
            let hm = MetricField::from_strs(&bc, brows, &k)?;
            let base = Manifold::new(Chart::from_parts(bc, vec![(-1e3, 1e3), (-1e3, 1e3)], k.clone())?, hm)?;
            (metric, base, (-0.5, 0.5))
        }
        "cp1" => {
            let rows: &[&[&str]] = &[&["2", "0", "0"], &["0", "2*sin(s)^2", "0"], &["0", "0", guu]];
            let metric = MetricField::from_strs(&coords, rows, &k)?;
            let base = sphere2(2f64.sqrt(), ["s", "t"], 0.01, (-1e3, 1e3))?;
            (metric, base, (0.4, 1.2))
        }
        other => return Err(Error::InvalidModel(format!("flag_local: base must be `flat` or `cp1`, got `{other}`"))),
    };
    let chart = Chart::from_parts(coords, vec![s_range, (-0.5, 0.5), (-0.5, 0.5)], k.clone())?;
    let total = Manifold::new(chart, metric)?;
    let sub = RiemannianSubmersion::new(SmoothMap::new(total, base, &["s", "t"], &k)?)?;
    let mut m = plain("flag_local", params, ModelKind::Submersion(sub), k);
    m.einstein = Some(if base_kind == "cp1" {
        EinsteinData { c: 0.5, lambda1: Some(1.0) }
    } else {
        EinsteinData { c: 0.0, lambda1: None }
    });
    Ok(m)
}

/// Check `β′/β = f` with `f = −c₁(1+e^{c₁x})/(1−e^{c₁x})` at 20 points.
fn verify_loubeau_ou_profile(beta: &str, k: &Consts, range: (f64, f64)) -> Result<()> {
    let x = names(&["x"]);
    let b = parse_expr(beta, &x, k)?;
    let f = parse_expr("-c1*(1+exp(c1*x))/(1-exp(c1*x))", &x, k)?;
    for i in 0..20 {
        let xv = range.0 + (range.1 - range.0) * (i as f64 + 0.5) / 20.0;
        let jet = crate::jet::lift_all(&[xv]).map_err(|e| Error::from_jet(e, &[xv]))?;
        let bj = b.eval_jet(&jet, k)?;
        let ratio = bj.d(0).map_err(|e| Error::from_jet(e, &[xv]))?.value() / bj.value();
        let fv = f.eval_f64(&[xv], k)?;
        if (ratio - fv).abs() > 1e-9 * (1.0 + fv.abs()) {
            return Err(Error::InvalidModel(format!("loubeau_ou: beta'/beta differs from f at x = {xv}")));
        }
    }
    Ok(())
}
