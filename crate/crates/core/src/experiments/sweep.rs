use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::uniqueness::{certify_point, CertifyOptions, UniquenessEntry};
use super::PlantedObjective;
use crate::error::{Error, Result};
use crate::functional::TiltedFunctional;
use crate::linalg::Matrix;
use crate::maps::{check_range, growth_coefficient, GrowthMethod, MapSpec, Perturbation};
use crate::optimize::{Cluster, OptimizeConfig};
use crate::spaces::{bit_key, FeasibleSet, NormSpec};

/// Parameter values: an explicit list or an inclusive linear range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamRange {
    List(Vec<f64>),
    Linear { start: f64, stop: f64, count: usize },
}

impl ParamRange {
    pub fn values(&self) -> Vec<f64> {
        match self {
            ParamRange::List(v) => v.clone(),
            ParamRange::Linear { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![*start],
                c => (0..*c)
                    .map(|i| start + (stop - start) * i as f64 / (c - 1) as f64)
                    .collect(),
            },
        }
    }
}

/// Map families swept for counterexamples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyTemplate {
    /// `A = θ·I`
    ScalarAffine {
        dimension: usize,
        theta: ParamRange,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<Vec<f64>>,
    },
    /// `A = θ·R(φ)` in the plane.
    RotationScale {
        theta: ParamRange,
        angle: ParamRange,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<Vec<f64>>,
    },
    /// `A = θ·I` plus a bounded perturbation of amplitude `ρ`.
    BoundedPerturbation {
        dimension: usize,
        theta: ParamRange,
        amplitude: ParamRange,
        perturbation: Perturbation,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub value: f64,
}

impl FamilyTemplate {
    pub fn dimension(&self) -> usize {
        match self {
            FamilyTemplate::ScalarAffine { dimension, .. }
            | FamilyTemplate::BoundedPerturbation { dimension, .. } => *dimension,
            FamilyTemplate::RotationScale { .. } => 2,
        }
    }

    fn offset(&self) -> Result<Vec<f64>> {
        let n = self.dimension();
        let b = match self {
            FamilyTemplate::ScalarAffine { b, .. }
            | FamilyTemplate::RotationScale { b, .. }
            | FamilyTemplate::BoundedPerturbation { b, .. } => b.clone(),
        };
        let b = b.unwrap_or_else(|| vec![0.0; n]);
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.len() });
        }
        Ok(b)
    }

    /// Parameter points in grid order (first parameter slowest) with their maps.
    pub fn instances(&self) -> Result<Vec<(Vec<Param>, MapSpec)>> {
        let n = self.dimension();
        if n == 0 {
            return Err(Error::InvalidInput("family dimension must be positive".into()));
        }
        let b = self.offset()?;
        let p = |name: &str, value: f64| Param { name: name.into(), value };
        let mut out = Vec::new();
        match self {
            FamilyTemplate::ScalarAffine { theta, .. } => {
                for t in theta.values() {
                    out.push((vec![p("theta", t)], MapSpec::Affine { a: Matrix::scalar(n, t), b: b.clone() }));
                }
            }
            FamilyTemplate::RotationScale { theta, angle, .. } => {
                for t in theta.values() {
                    for phi in angle.values() {
                        out.push((
                            vec![p("theta", t), p("angle", phi)],
                            MapSpec::Affine { a: Matrix::rotation_scale(t, phi), b: b.clone() },
                        ));
                    }
                }
            }
            FamilyTemplate::BoundedPerturbation { theta, amplitude, perturbation, .. } => {
                for t in theta.values() {
                    for rho in amplitude.values() {
                        out.push((
                            vec![p("theta", t), p("amplitude", rho)],
                            MapSpec::AffinePlusBounded {
                                a: Matrix::scalar(n, t),
                                b: b.clone(),
                                perturbation: *perturbation,
                                amplitude: rho,
                            },
                        ));
                    }
                }
            }
        }
        for (_, m) in &out {
            m.dimension()?;
        }
        Ok(out)
    }
}

/// Replaces `J(·, y)` by a planted objective in exactly one `(cell, y)` slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantInjection {
    pub cell: usize,
    pub y_index: usize,
    pub objective: PlantedObjective,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Half-width of the box the `y` grid spans.
    pub y_radius: f64,
    /// `y` grid nodes per axis.
    pub y_per_axis: usize,
    pub growth_radii: Vec<f64>,
    pub directions_per_radius: usize,
    /// Grid refinement factor for the re-verification run.
    pub refine_factor: usize,
    pub margin: f64,
    pub fallback_radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plant: Option<PlantInjection>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            y_radius: 10.0,
            y_per_axis: 5,
            growth_radii: vec![1e2, 1e3, 1e4],
            directions_per_radius: 64,
            refine_factor: 4,
            margin: 1.0,
            fallback_radius: 10.0,
            plant: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateVerification {
    pub grid_resolution: usize,
    pub value_tol: f64,
    pub clusters: usize,
    pub survived: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleCandidate {
    pub cell: usize,
    pub params: Vec<Param>,
    pub norm: NormSpec,
    pub y_index: usize,
    pub y: Vec<f64>,
    /// Clusters from the re-verification run.
    pub clusters: Vec<Cluster>,
    /// Spread of the cluster values.
    pub value_gap: f64,
    /// Smallest distance between two representatives.
    pub separation: f64,
    pub score: f64,
    pub kappa_hat: f64,
    pub kappa_method: GrowthMethod,
    pub planted: bool,
    pub verification: CandidateVerification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CellStatus {
    Evaluated,
    SkippedGrowth,
    SkippedRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: usize,
    pub params: Vec<Param>,
    pub norm: NormSpec,
    pub status: CellStatus,
    pub kappa_hat: f64,
    pub kappa_method: GrowthMethod,
    pub max_clusters: usize,
    pub y_evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    /// Surviving candidates, best score first.
    pub candidates: Vec<CounterexampleCandidate>,
    pub cells: Vec<CellSummary>,
    pub skipped_growth: usize,
    pub skipped_range: usize,
    /// Coarse findings that did not survive re-verification.
    pub discarded: usize,
    pub y_grid: Vec<Vec<f64>>,
    pub value_tol: f64,
    pub separation: f64,
    pub seed: u64,
}

fn y_grid(set: &FeasibleSet, radius: f64, per_axis: usize) -> Result<Vec<Vec<f64>>> {
    let n = set.dimension();
    let coord = |k: usize| {
        if per_axis == 1 {
            0.0
        } else {
            -radius + 2.0 * radius * k as f64 / (per_axis - 1) as f64
        }
    };
    let total = per_axis.pow(n as u32);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for code in 0..total {
        let mut c = code;
        let mut z = vec![0.0; n];
        for i in (0..n).rev() {
            z[i] = coord(c % per_axis);
            c /= per_axis;
        }
        let p = set.project(&z)?;
        if seen.insert(bit_key(&p)) {
            out.push(p);
        }
    }
    Ok(out)
}

fn min_pairwise(clusters: &[Cluster], norm: &NormSpec) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in clusters.iter().enumerate() {
        for b in &clusters[i + 1..] {
            best = best.min(norm.distance(&a.point, &b.point));
        }
    }
    best
}

struct CellOutcome {
    summary: CellSummary,
    candidates: Vec<CounterexampleCandidate>,
    discarded: usize,
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    cell: usize,
    params: &[Param],
    map: &MapSpec,
    norm: &NormSpec,
    set: &FeasibleSet,
    ys: &[Vec<f64>],
    sweep: &SweepConfig,
    config: &OptimizeConfig,
) -> Result<CellOutcome> {
    let mut summary = CellSummary {
        cell,
        params: params.to_vec(),
        norm: norm.clone(),
        status: CellStatus::Evaluated,
        kappa_hat: f64::NAN,
        kappa_method: GrowthMethod::Analytic,
        max_clusters: 0,
        y_evaluated: 0,
    };
    let done = |summary| Ok(CellOutcome { summary, candidates: Vec::new(), discarded: 0 });

    if check_range(map, set, ys).is_err() {
        summary.status = CellStatus::SkippedRange;
        return done(summary);
    }
    let growth = match growth_coefficient(
        map,
        norm,
        set,
        &sweep.growth_radii,
        sweep.directions_per_radius,
        config.seed ^ (cell as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
    ) {
        Ok(g) => g,
        Err(Error::RangeViolation { .. }) => {
            summary.status = CellStatus::SkippedRange;
            return done(summary);
        }
        Err(e) => return Err(e),
    };
    summary.kappa_hat = growth.kappa_hat;
    summary.kappa_method = growth.method;
    if !growth.satisfied {
        summary.status = CellStatus::SkippedGrowth;
        return done(summary);
    }

    let f = TiltedFunctional::new(norm.clone(), set.clone(), map.clone())?;
    let refined = OptimizeConfig {
        grid_resolution: config.grid_resolution * sweep.refine_factor,
        value_tol: config.value_tol / 2.0,
        ..config.clone()
    };
    let mut candidates = Vec::new();
    let mut discarded = 0;
    for (y_index, y) in ys.iter().enumerate() {
        let plant = sweep
            .plant
            .as_ref()
            .filter(|p| p.cell == cell && p.y_index == y_index)
            .map(|p| p.objective.clone());
        let options = CertifyOptions {
            margin: sweep.margin,
            radius_override: None,
            fallback_radius: sweep.fallback_radius,
            plant: plant.clone(),
        };
        let entry: UniquenessEntry = certify_point(&f, y, &growth, config, &options)?;
        summary.y_evaluated += 1;
        summary.max_clusters = summary.max_clusters.max(entry.result.cluster_count());
        if entry.result.cluster_count() < 2 {
            continue;
        }
        let again = certify_point(&f, y, &growth, &refined, &options)?;
        let verification = CandidateVerification {
            grid_resolution: again.result.grid_resolution,
            value_tol: refined.value_tol,
            clusters: again.result.cluster_count(),
            survived: again.result.cluster_count() >= 2,
        };
        if !verification.survived {
            discarded += 1;
            continue;
        }
        let clusters = again.result.clusters;
        let value_gap = clusters.last().expect("two clusters").value - clusters[0].value;
        let separation = min_pairwise(&clusters, norm);
        candidates.push(CounterexampleCandidate {
            cell,
            params: params.to_vec(),
            norm: norm.clone(),
            y_index,
            y: y.clone(),
            score: separation / (value_gap + 1e-12),
            clusters,
            value_gap,
            separation,
            kappa_hat: growth.kappa_hat,
            kappa_method: growth.method,
            planted: plant.is_some(),
            verification,
        });
    }
    Ok(CellOutcome { summary, candidates, discarded })
}

/// Sweeps a map family over parameter points and norms, hunting `y` for which
/// `J(·, y)` shows two or more separated global-minimum clusters. Findings
/// are re-run on a finer grid with a tighter value window before ranking.
pub fn search_counterexample(
    family: &FamilyTemplate,
    norms: &[NormSpec],
    set: &FeasibleSet,
    sweep: &SweepConfig,
    config: &OptimizeConfig,
) -> Result<SweepReport> {
    config.validate()?;
    if norms.is_empty() {
        return Err(Error::InvalidInput("sweep needs at least one norm".into()));
    }
    let n = family.dimension();
    if set.dimension() != n {
        return Err(Error::DimensionMismatch { expected: n, got: set.dimension() });
    }
    for norm in norms {
        if norm.dimension() != n {
            return Err(Error::DimensionMismatch { expected: n, got: norm.dimension() });
        }
    }
    if sweep.y_per_axis == 0 || !(sweep.y_radius > 0.0) || sweep.refine_factor == 0 {
        return Err(Error::InvalidInput("sweep: y grid and refine factor must be positive".into()));
    }
    if let Some(p) = &sweep.plant {
        p.objective.validate(n)?;
    }

    let ys = y_grid(set, sweep.y_radius, sweep.y_per_axis)?;
    let instances = family.instances()?;
    let cells: Vec<(usize, &Vec<Param>, &MapSpec, &NormSpec)> = instances
        .iter()
        .flat_map(|(params, map)| norms.iter().map(move |norm| (params, map, norm)))
        .enumerate()
        .map(|(i, (p, m, nm))| (i, p, m, nm))
        .collect();

    let outcomes: Vec<Result<CellOutcome>> = cells
        .par_iter()
        .map(|(cell, params, map, norm)| run_cell(*cell, params, map, norm, set, &ys, sweep, config))
        .collect();

    let mut report = SweepReport {
        candidates: Vec::new(),
        cells: Vec::with_capacity(cells.len()),
        skipped_growth: 0,
        skipped_range: 0,
        discarded: 0,
        y_grid: ys,
        value_tol: config.value_tol,
        separation: config.separation,
        seed: config.seed,
    };
    for outcome in outcomes {
        let outcome = outcome?;
        match outcome.summary.status {
            CellStatus::SkippedGrowth => report.skipped_growth += 1,
            CellStatus::SkippedRange => report.skipped_range += 1,
            CellStatus::Evaluated => {}
        }
        report.discarded += outcome.discarded;
        report.candidates.extend(outcome.candidates);
        report.cells.push(outcome.summary);
    }
    report.candidates.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.cell.cmp(&b.cell))
            .then(a.y_index.cmp(&b.y_index))
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_range_is_inclusive() {
        let r = ParamRange::Linear { start: 0.1, stop: 0.45, count: 8 };
        let v = r.values();
        assert_eq!(v.len(), 8);
        assert_eq!(v[0], 0.1);
        assert!((v[7] - 0.45).abs() < 1e-15);
    }

    #[test]
    fn rotation_family_enumerates_grid() {
        let fam = FamilyTemplate::RotationScale {
            theta: ParamRange::List(vec![0.1, 0.2]),
            angle: ParamRange::Linear { start: 0.0, stop: 1.0, count: 3 },
            b: None,
        };
        let inst = fam.instances().unwrap();
        assert_eq!(inst.len(), 6);
        assert_eq!(inst[4].0[0].value, 0.2);
        assert_eq!(inst[4].0[1].value, 0.5);
    }

    #[test]
    fn y_grid_covers_box() {
        let set = FeasibleSet::full_space(2).unwrap();
        let g = y_grid(&set, 10.0, 5).unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(g[0], vec![-10.0, -10.0]);
        assert_eq!(g[12], vec![0.0, 0.0]);
        let orth = FeasibleSet::orthant(vec![0.0, 0.0]).unwrap();
        assert_eq!(y_grid(&orth, 10.0, 5).unwrap().len(), 9);
    }
}
