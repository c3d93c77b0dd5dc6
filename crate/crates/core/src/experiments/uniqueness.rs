use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PlantedObjective;
use crate::error::{Error, Result};
use crate::functional::TiltedFunctional;
use crate::maps::{GrowthEstimate, INPUT_TOL};
use crate::optimize::{global_minimize, MinimizationResult, MinimizationStatus, OptimizeConfig};
use crate::spaces::SampleDomain;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyOptions {
    /// Headroom added to the incumbent in the coercivity radius.
    pub margin: f64,
    /// Skips the coercivity argument and truncates at this radius.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius_override: Option<f64>,
    /// Radius used when the growth bound is unmet and no override is given.
    pub fallback_radius: f64,
    /// Replaces `J(·, y)` by a planted objective.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plant: Option<PlantedObjective>,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { margin: 1.0, radius_override: None, fallback_radius: 10.0, plant: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RadiusSource {
    /// Derived from the growth bound; conditional on its estimate.
    Coercivity,
    Override,
    /// No guarantee: the growth bound is unmet or a plant is active.
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EntryVerdict {
    Unique,
    Multiple,
    Vacuous,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum UniquenessVerdict {
    /// One cluster for every sampled `y`. Evidence, never proof.
    UniqueOnSamples,
    MultipleFound,
    Inconclusive,
    /// Some `J(·, y)` appears not to attain its infimum.
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessEntry {
    pub y: Vec<f64>,
    pub incumbent: f64,
    pub radius: f64,
    pub radius_source: RadiusSource,
    pub result: MinimizationResult,
    pub verdict: EntryVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub entries: Vec<UniquenessEntry>,
    pub verdict: UniquenessVerdict,
    pub value_tol: f64,
    pub separation: f64,
    pub margin: f64,
    pub growth: GrowthEstimate,
    /// Set when the growth bound was unmet and no override was given; the
    /// verdict can then be no better than inconclusive.
    pub capped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plant: Option<PlantedObjective>,
}

impl UniquenessReport {
    pub fn max_clusters(&self) -> usize {
        self.entries.iter().map(|e| e.result.cluster_count()).max().unwrap_or(0)
    }
}

fn entry_verdict(result: &MinimizationResult) -> EntryVerdict {
    if result.cluster_count() >= 2 {
        return EntryVerdict::Multiple;
    }
    match result.status {
        MinimizationStatus::Ok => EntryVerdict::Unique,
        MinimizationStatus::NoMinimumSuspected => EntryVerdict::Vacuous,
        MinimizationStatus::BudgetExhausted => EntryVerdict::Inconclusive,
    }
}

/// Per-`y` step: incumbent from a short pre-scan, truncation radius, global
/// minimization of `J(·, y)` (or the planted objective) and a verdict.
pub fn certify_point(
    f: &TiltedFunctional,
    y: &[f64],
    growth: &GrowthEstimate,
    config: &OptimizeConfig,
    options: &CertifyOptions,
) -> Result<UniquenessEntry> {
    let violation = f.set().violation(y);
    if y.len() != f.dimension() {
        return Err(Error::DimensionMismatch { expected: f.dimension(), got: y.len() });
    }
    if violation > INPUT_TOL {
        return Err(Error::Infeasible { violation });
    }
    if let Some(plant) = &options.plant {
        plant.validate(f.dimension())?;
    }

    let fy = f.image(y)?;
    let prescan = [
        y.to_vec(),
        f.set().project(&vec![0.0; f.dimension()])?,
        fy,
        f.set().witness().base.clone(),
    ];
    let objective = |x: &[f64]| match &options.plant {
        Some(p) => Ok(p.value(x)),
        None => f.tilted_value(x, y),
    };
    let incumbent = prescan
        .iter()
        .try_fold(f64::INFINITY, |m, p| objective(p).map(|v| m.min(v)))?;

    let (radius, radius_source) = match (options.radius_override, &options.plant, growth.linear_bound()) {
        (Some(r), _, _) => (r, RadiusSource::Override),
        (None, Some(_), _) | (None, None, None) => (options.fallback_radius, RadiusSource::Fallback),
        (None, None, Some((kappa, r0))) => (
            f.coercivity_radius(y, kappa, r0, incumbent, options.margin)?,
            RadiusSource::Coercivity,
        ),
    };

    let result = global_minimize(&objective, f.set(), f.norm(), radius, config)?;
    Ok(UniquenessEntry {
        y: y.to_vec(),
        incumbent,
        radius,
        radius_source,
        verdict: entry_verdict(&result),
        result,
    })
}

/// Sample-relative uniqueness certificate for `J(·, y)` over `y_samples`.
pub fn certify_uniqueness(
    f: &TiltedFunctional,
    y_samples: &[Vec<f64>],
    growth: &GrowthEstimate,
    config: &OptimizeConfig,
    options: &CertifyOptions,
) -> Result<UniquenessReport> {
    if y_samples.is_empty() {
        return Err(Error::InvalidInput("certification needs at least one y sample".into()));
    }
    config.validate()?;
    let entries: Vec<Result<UniquenessEntry>> = y_samples
        .par_iter()
        .map(|y| certify_point(f, y, growth, config, options))
        .collect();
    let entries = entries.into_iter().collect::<Result<Vec<_>>>()?;

    let capped = options.radius_override.is_none() && options.plant.is_none() && !growth.satisfied;
    let any = |v: EntryVerdict| entries.iter().any(|e| e.verdict == v);
    let verdict = if any(EntryVerdict::Multiple) {
        UniquenessVerdict::MultipleFound
    } else if any(EntryVerdict::Vacuous) {
        UniquenessVerdict::Vacuous
    } else if capped || any(EntryVerdict::Inconclusive) {
        UniquenessVerdict::Inconclusive
    } else {
        UniquenessVerdict::UniqueOnSamples
    };

    Ok(UniquenessReport {
        entries,
        verdict,
        value_tol: config.value_tol,
        separation: config.separation,
        margin: options.margin,
        growth: growth.clone(),
        capped,
        plant: options.plant.clone(),
    })
}

/// Seeded low-discrepancy `y` samples in `X ∩ {‖y‖ ≤ radius}`.
pub fn default_y_samples(
    f: &TiltedFunctional,
    radius: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let domain = SampleDomain::new(f.set(), f.norm(), radius, 1)?;
    domain.halton_points(count, seed)
}
