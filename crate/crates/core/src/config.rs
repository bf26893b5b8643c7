//! TOML run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::{SamplerConfig, Tolerances};
use crate::error::{Error, Result};
use crate::expr::{parse_expr, Consts};
use crate::geometry::{Chart, Manifold, MetricField};
use crate::map::SmoothMap;
use crate::submersion::{EinsteinData, RiemannianSubmersion};
use crate::zoo::{build_model, BuiltModel, ModelKind, ModelSpec, Params};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Zoo model selection.
    pub model: Option<ModelSpec>,
    /// Inline model definition.
    pub inline: Option<InlineModel>,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sampling {
    pub points: usize,
    pub seed: u64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { points: 100, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub timestamp: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { json: None, csv: None, timestamp: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InlineKind {
    Map,
    #[default]
    Submersion,
    Manifold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineManifold {
    pub coords: Vec<String>,
    pub bounds: Vec<[f64; 2]>,
    /// Rows of the metric matrix; empty strings below the diagonal mirror the
    /// upper triangle.
    pub metric: Vec<Vec<String>>,
    /// Expressions required to be positive inside the domain.
    #[serde(default)]
    pub constraints: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineModel {
    #[serde(default)]
    pub kind: InlineKind,
    #[serde(default)]
    pub consts: BTreeMap<String, f64>,
    pub domain: InlineManifold,
    pub codomain: Option<InlineManifold>,
    /// Map components in domain coordinates.
    pub components: Option<Vec<String>>,
    pub einstein: Option<EinsteinData>,
    /// Eigenfunction on the codomain (or the manifold itself).
    pub eigenfunction: Option<String>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().trim().to_string();
            match e.span() {
                Some(span) => {
                    let (l, c) = line_col(text, span.start);
                    Error::Config(format!("line {l}, column {c}: {msg}"))
                }
                None => Error::Config(msg),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Config for a zoo model with default sampling and tolerances.
    pub fn for_model(spec: ModelSpec) -> Self {
        RunConfig {
            model: Some(spec),
            inline: None,
            sampling: Sampling::default(),
            tolerances: Tolerances::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.model, &self.inline) {
            (Some(_), Some(_)) => return Err(Error::Config("give either [model] or [inline], not both".into())),
            (None, None) => return Err(Error::Config("a [model] or [inline] section is required".into())),
            _ => {}
        }
        if self.sampling.points == 0 {
            return Err(Error::Config("sampling.points must be at least 1".into()));
        }
        let t = &self.tolerances;
        if !(t.tol_h >= 0.0 && t.tol_b >= 0.0) {
            return Err(Error::Config("tolerances must be nonnegative numbers".into()));
        }
        Ok(())
    }

    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig { points: self.sampling.points, seed: self.sampling.seed }
    }

    /// Model name and parameters as shown in a report header.
    pub fn model_label(&self) -> (String, Params) {
        match &self.model {
            Some(spec) => (spec.id.clone(), spec.params.clone()),
            None => ("inline".to_string(), Params::new()),
        }
    }

    pub fn build(&self) -> Result<BuiltModel> {
        match (&self.model, &self.inline) {
            (Some(spec), _) => build_model(spec),
            (None, Some(inline)) => inline.build(),
            (None, None) => Err(Error::Config("no model given".into())),
        }
    }
}

impl InlineManifold {
    fn build(&self, consts: &Consts) -> Result<Manifold> {
        let bounds = self.bounds.iter().map(|b| (b[0], b[1])).collect();
        let mut chart = Chart::from_parts(self.coords.clone(), bounds, consts.clone())?;
        for c in &self.constraints {
            chart = chart.with_constraint(c)?;
        }
        Manifold::new(chart, MetricField::parse(&self.coords, &self.metric, consts)?)
    }
}

impl InlineModel {
    pub fn build(&self) -> Result<BuiltModel> {
        let consts: Consts = self.consts.clone();
        let domain = self.domain.build(&consts)?;
        let comps = || -> Result<Vec<&str>> {
            self.components
                .as_ref()
                .map(|c| c.iter().map(String::as_str).collect())
                .ok_or_else(|| Error::InvalidModel("inline maps need `components`".into()))
        };
        let codomain = || self.codomain.as_ref().ok_or_else(|| Error::InvalidModel("inline maps need a codomain".into()));
        let kind = match self.kind {
            InlineKind::Manifold => ModelKind::Manifold(domain),
            InlineKind::Map => {
                ModelKind::Map(SmoothMap::new(domain, codomain()?.build(&consts)?, &comps()?, &consts)?)
            }
            InlineKind::Submersion => {
                let map = SmoothMap::new(domain, codomain()?.build(&consts)?, &comps()?, &consts)?;
                ModelKind::Submersion(RiemannianSubmersion::new(map)?)
            }
        };
        let eigen_coords = match self.kind {
            InlineKind::Manifold => &self.domain.coords,
            _ => &self.codomain.as_ref().expect("checked above").coords,
        };
        let eigenfunction = match &self.eigenfunction {
            Some(f) => Some(parse_expr(f, eigen_coords, &consts)?),
            None => None,
        };
        Ok(BuiltModel {
            id: "inline".into(),
            params: Params::new(),
            kind,
            einstein: self.einstein,
            eigenfunction,
            killing: Vec::new(),
            reference_tension: None,
            consts,
        })
    }
}
