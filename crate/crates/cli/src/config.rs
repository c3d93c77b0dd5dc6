use std::path::Path;

use serde::{Deserialize, Serialize};
use tiltlab_core::experiments::{
    CertifyOptions, FamilyTemplate, FixedPointOptions, MinimaxOptions, SweepConfig,
};
use tiltlab_core::{FeasibleSet, MapSpec, NormSpec, OptimizeConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExperimentKind {
    CertifyUniqueness,
    FindFixedPoint,
    MinimaxGap,
    SearchCounterexample,
    VerifySaddle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleScheme {
    Halton,
    Random,
    Grid,
    Sphere,
}

/// A seeded point set in `X ∩ {‖·‖ ≤ radius}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSample {
    pub scheme: SampleScheme,
    /// Point count (ignored by `grid`).
    #[serde(default)]
    pub count: usize,
    pub radius: f64,
    /// Nodes per axis for `grid`.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    /// Offset added to the run seed.
    #[serde(default)]
    pub seed_offset: u64,
}

fn default_resolution() -> usize {
    11
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    pub y: PointSample,
    pub x: PointSample,
}

impl Default for Sampling {
    fn default() -> Self {
        Self {
            y: PointSample { scheme: SampleScheme::Halton, count: 25, radius: 5.0, resolution: 11, seed_offset: 0 },
            x: PointSample { scheme: SampleScheme::Random, count: 1000, radius: 5.0, resolution: 11, seed_offset: 1 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthSettings {
    pub radii: Vec<f64>,
    pub directions_per_radius: usize,
}

impl Default for GrowthSettings {
    fn default() -> Self {
        Self { radii: vec![1e2, 1e3, 1e4], directions_per_radius: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimaxSettings {
    pub radius: f64,
    pub resolution: usize,
    pub options: MinimaxOptions,
}

impl Default for MinimaxSettings {
    fn default() -> Self {
        Self { radius: 5.0, resolution: 21, options: MinimaxOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaddleSettings {
    /// Candidate saddle point. When absent: the closed-form fixed point if
    /// one exists, else the located one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_star: Option<Vec<f64>>,
    pub tol: f64,
    pub separation: f64,
}

impl Default for SaddleSettings {
    fn default() -> Self {
        Self { x_star: None, tol: 1e-6, separation: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    pub dir: String,
    pub report: String,
}

impl Default for Output {
    fn default() -> Self {
        Self { dir: "out".into(), report: "report.json".into() }
    }
}

/// A complete experiment description. Every field that influences results
/// is explicit here or has a fixed default; the top-level `seed` drives all
/// randomness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub space: NormSpec,
    pub set: FeasibleSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyTemplate>,
    /// Norms swept by `SEARCH_COUNTEREXAMPLE`; `[space]` when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub norms: Vec<NormSpec>,
    #[serde(default)]
    pub optimizer: OptimizeConfig,
    #[serde(default)]
    pub growth: GrowthSettings,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub certify: CertifyOptions,
    #[serde(default)]
    pub fixed_point: FixedPointOptions,
    #[serde(default)]
    pub minimax: MinimaxSettings,
    #[serde(default)]
    pub saddle: SaddleSettings,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: Output,
}

impl ExperimentConfig {
    pub fn dimension(&self) -> usize {
        self.space.dimension()
    }

    pub fn sweep_norms(&self) -> Vec<NormSpec> {
        if self.norms.is_empty() {
            vec![self.space.clone()]
        } else {
            self.norms.clone()
        }
    }

    /// Cross-field checks that parsing alone cannot express.
    pub fn validate(&self) -> Result<(), CliError> {
        let n = self.dimension();
        let field = |f: &str, m: String| Err(CliError::Invalid { field: f.into(), message: m });
        if self.set.dimension() != n {
            return field("set", format!("dimension {} does not match space dimension {n}", self.set.dimension()));
        }
        if let Some(map) = &self.map {
            let d = map.dimension().map_err(|e| CliError::Invalid { field: "map".into(), message: e.to_string() })?;
            if d != n {
                return field("map", format!("dimension {d} does not match space dimension {n}"));
            }
        }
        for (i, norm) in self.norms.iter().enumerate() {
            if norm.dimension() != n {
                return field(&format!("norms[{i}]"), format!("dimension {} does not match {n}", norm.dimension()));
            }
        }
        self.optimizer
            .validate()
            .map_err(|e| CliError::Invalid { field: "optimizer".into(), message: e.to_string() })?;
        for (name, s) in [("sampling.y", &self.sampling.y), ("sampling.x", &self.sampling.x)] {
            if !(s.radius > 0.0) {
                return field(name, "radius must be positive".into());
            }
            if s.scheme == SampleScheme::Grid && s.resolution == 0 {
                return field(name, "resolution must be positive".into());
            }
            if s.scheme != SampleScheme::Grid && s.count == 0 {
                return field(name, "count must be positive".into());
            }
        }
        if let Some(x) = &self.saddle.x_star {
            if x.len() != n {
                return field("saddle.x_star", format!("length {} does not match dimension {n}", x.len()));
            }
        }
        match self.experiment {
            ExperimentKind::SearchCounterexample => match &self.family {
                None => return field("family", "SEARCH_COUNTEREXAMPLE needs a family".into()),
                Some(f) if f.dimension() != n => {
                    return field("family", format!("dimension {} does not match {n}", f.dimension()))
                }
                Some(_) => {}
            },
            _ if self.map.is_none() => return field("map", format!("{:?} needs a map", self.experiment)),
            _ => {}
        }
        if self.output.dir.is_empty() || self.output.report.is_empty() {
            return field("output", "paths must be non-empty".into());
        }
        Ok(())
    }
}

/// Sets `path` (dotted) in `table` to `raw`, parsed as a TOML value when
/// possible and as a bare string otherwise.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Override(format!("`{spec}` is not key=value")))?;
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Override(format!("bad key path `{path}`")));
    }
    let mut cur = table;
    for k in &keys[..keys.len() - 1] {
        let entry = cur
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Override(format!("`{k}` in `{path}` is not a table")))?;
    }
    cur.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

/// Parses and validates a config document, applying overrides and the
/// optional seed. The run seed is copied into the optimizer.
pub fn parse_config(
    text: &str,
    source: &str,
    overrides: &[String],
    seed: Option<u64>,
) -> Result<ExperimentConfig, CliError> {
    // parse once untouched so diagnostics carry file line numbers
    let mut config: ExperimentConfig = toml::from_str(text)
        .map_err(|e| CliError::Parse { origin: source.into(), message: e.to_string() })?;
    if !overrides.is_empty() {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Parse { origin: source.into(), message: e.to_string() })?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let merged = toml::to_string(&table).map_err(|e| CliError::Override(e.to_string()))?;
        config = toml::from_str(&merged).map_err(|e| CliError::Parse {
            origin: format!("{source} (after overrides)"),
            message: e.to_string(),
        })?;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    config.optimizer.seed = config.seed;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path, overrides: &[String], seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_config(&text, &path.display().to_string(), overrides, seed)
}
