//! Deterministic derivative-free global minimization on `X ∩ {‖x‖ ≤ R}`.
//!
//! A coarse feasible grid scan seeds a set of compass (pattern) searches; the
//! refined endpoints are then clustered. A cluster is a representative whose
//! value is within `value_tol` of the best value found, at least `separation`
//! away (ambient norm) from every other representative. That is the numeric
//! stand-in for "a global minimum".

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{FeasibleSet, NormSpec, SampleDomain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeConfig {
    /// Coarse grid nodes per axis.
    pub grid_resolution: usize,
    /// Number of best-scoring grid points refined.
    pub multistart: usize,
    /// Additional seeded uniform starts.
    pub random_starts: usize,
    /// Initial compass step; `R/10` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_step: Option<f64>,
    pub shrink: f64,
    pub termination_step: f64,
    pub value_tol: f64,
    pub separation: f64,
    /// Maximum objective evaluations for one minimization.
    pub budget: u64,
    pub seed: u64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            grid_resolution: 33,
            multistart: 32,
            random_starts: 8,
            initial_step: None,
            shrink: 0.5,
            termination_step: 1e-9,
            value_tol: 1e-6,
            separation: 1e-3,
            budget: 1_000_000,
            seed: 0,
        }
    }
}

impl OptimizeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(format!("optimizer: {m}")));
        if self.grid_resolution == 0 {
            return bad("grid_resolution must be positive");
        }
        if self.multistart == 0 {
            return bad("multistart must be positive");
        }
        if let Some(s) = self.initial_step {
            if !(s > 0.0) {
                return bad("initial_step must be positive");
            }
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad("shrink must lie in (0, 1)");
        }
        if !(self.termination_step > 0.0) {
            return bad("termination_step must be positive");
        }
        if !(self.value_tol > 0.0) {
            return bad("value_tol must be positive");
        }
        if !(self.separation > self.termination_step) {
            return bad("separation must exceed termination_step");
        }
        if self.budget == 0 {
            return bad("budget must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MinimizationStatus {
    Ok,
    BudgetExhausted,
    /// The best point sits on the truncation sphere: the radius is too small
    /// or the objective is unbounded below.
    NoMinimumSuspected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub point: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizationResult {
    /// Sorted by value ascending.
    pub clusters: Vec<Cluster>,
    pub global_value: f64,
    pub status: MinimizationStatus,
    pub evaluations: u64,
    pub radius: f64,
    pub value_tol: f64,
    pub separation: f64,
    pub grid_resolution: usize,
}

impl MinimizationResult {
    pub fn best(&self) -> &Cluster {
        &self.clusters[0]
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }
}

/// Compass search parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternParams {
    pub initial_step: f64,
    pub shrink: f64,
    pub termination_step: f64,
}

impl PatternParams {
    pub fn from_config(config: &OptimizeConfig, radius: f64) -> Self {
        Self {
            initial_step: config.initial_step.unwrap_or(radius / 10.0),
            shrink: config.shrink,
            termination_step: config.termination_step,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub point: Vec<f64>,
    pub value: f64,
    pub evaluations: u64,
    pub exhausted: bool,
}

/// Poll directions: the 2n coordinate directions first, then a second ring
/// used only when no coordinate move improves.
#[derive(Debug, Clone)]
pub struct Stencil {
    axis: Vec<Vec<f64>>,
    extended: Vec<Vec<f64>>,
}

impl Stencil {
    pub fn new(n: usize) -> Self {
        let mut axis = Vec::with_capacity(2 * n);
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut d = vec![0.0; n];
                d[i] = s;
                axis.push(d);
            }
        }
        let mut extended = Vec::new();
        if n <= 4 {
            // every {-1,0,1}ⁿ vector with at least two non-zeros
            let total = 3usize.pow(n as u32);
            for code in 0..total {
                let mut c = code;
                let d: Vec<f64> = (0..n)
                    .map(|_| {
                        let digit = c % 3;
                        c /= 3;
                        [0.0, 1.0, -1.0][digit]
                    })
                    .collect();
                if d.iter().filter(|v| **v != 0.0).count() >= 2 {
                    extended.push(d);
                }
            }
        } else {
            for i in 0..n {
                for j in (i + 1)..n {
                    for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                        let mut d = vec![0.0; n];
                        d[i] = si;
                        d[j] = sj;
                        extended.push(d);
                    }
                }
            }
        }
        Self { axis, extended }
    }
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Compass search from `start`. Every trial point is projected onto the set
/// and discarded when it leaves the ball. The returned value never exceeds
/// `start_value`.
pub fn pattern_search<F>(
    objective: &F,
    start: &[f64],
    start_value: f64,
    domain: &SampleDomain<'_>,
    stencil: &Stencil,
    params: &PatternParams,
    max_evals: u64,
) -> Result<Refinement>
where
    F: Fn(&[f64]) -> Result<f64> + Sync + ?Sized,
{
    let mut x = start.to_vec();
    let mut fx = finite_or_inf(start_value);
    let mut step = params.initial_step;
    let mut evals = 0u64;
    let mut trial = vec![0.0; x.len()];
    while step >= params.termination_step {
        let mut moved = false;
        for ring in [&stencil.axis, &stencil.extended] {
            let mut best: Option<(Vec<f64>, f64)> = None;
            for d in ring.iter() {
                if evals >= max_evals {
                    return Ok(Refinement { point: x, value: fx, evaluations: evals, exhausted: true });
                }
                for ((t, xi), di) in trial.iter_mut().zip(&x).zip(d) {
                    *t = xi + step * di;
                }
                let p = domain.set.project(&trial)?;
                if p == x || domain.norm.eval(&p) > domain.radius {
                    continue;
                }
                let v = finite_or_inf(objective(&p)?);
                evals += 1;
                if v < fx && best.as_ref().is_none_or(|b| v < b.1) {
                    best = Some((p, v));
                }
            }
            if let Some((p, v)) = best {
                x = p;
                fx = v;
                moved = true;
                break;
            }
        }
        if !moved {
            step *= params.shrink;
        }
    }
    Ok(Refinement { point: x, value: fx, evaluations: evals, exhausted: false })
}

/// Greedy clustering: candidates within `value_tol` of the best value, in
/// order of value then input index, merge into an existing representative
/// closer than `separation`.
pub fn cluster_minima(
    points: &[(Vec<f64>, f64)],
    norm: &NormSpec,
    value_tol: f64,
    separation: f64,
) -> Vec<Cluster> {
    let best = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Vec::new();
    }
    let mut candidates: Vec<usize> =
        (0..points.len()).filter(|&i| points[i].1 <= best + value_tol).collect();
    candidates.sort_by(|&a, &b| points[a].1.total_cmp(&points[b].1).then(a.cmp(&b)));
    let mut reps: Vec<Cluster> = Vec::new();
    for i in candidates {
        let (p, v) = &points[i];
        if reps.iter().all(|r| norm.distance(&r.point, p) >= separation) {
            reps.push(Cluster { point: p.clone(), value: *v });
        }
    }
    reps
}

fn boundary_status(clusters: &[Cluster], norm: &NormSpec, radius: f64, separation: f64) -> MinimizationStatus {
    match clusters.first() {
        Some(best) if norm.eval(&best.point) >= radius - separation => {
            MinimizationStatus::NoMinimumSuspected
        }
        _ => MinimizationStatus::Ok,
    }
}

fn evaluate_all<F>(objective: &F, points: &[Vec<f64>]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync + ?Sized,
{
    let raw: Vec<Result<f64>> = points.par_iter().map(|p| objective(p)).collect();
    // first error in input order, independent of scheduling
    raw.into_iter().map(|r| r.map(finite_or_inf)).collect()
}

fn grid_resolution_within_budget(requested: usize, n: usize, budget: u64) -> usize {
    let cap = (budget / 2).max(1) as f64;
    let mut g = requested;
    while g > 2 && (g as f64).powi(n as i32) > cap {
        g -= 1;
    }
    g
}

/// Multistart compass minimization of `objective` over `X ∩ {‖x‖ ≤ radius}`.
/// Deterministic in `(config, seed)` whatever the thread count.
pub fn global_minimize<F>(
    objective: &F,
    set: &FeasibleSet,
    norm: &NormSpec,
    radius: f64,
    config: &OptimizeConfig,
) -> Result<MinimizationResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync + ?Sized,
{
    config.validate()?;
    let n = set.dimension();
    let resolution = grid_resolution_within_budget(config.grid_resolution, n, config.budget);
    let domain = SampleDomain::new(set, norm, radius, resolution)?;
    let grid = domain.grid_points()?;
    if grid.is_empty() {
        return Err(Error::EmptyDomain(format!(
            "no grid point of the feasible set lies within radius {radius}"
        )));
    }
    let values = evaluate_all(objective, &grid)?;
    let mut evaluations = grid.len() as u64;

    // best-scoring grid starts, suppressing immediate grid neighbours of an
    // already chosen start so that separate basins each get a start
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let spacing = (0..n)
        .map(|i| 2.0 * norm.coordinate_bound(i, radius) / (resolution.max(2) - 1) as f64)
        .fold(f64::INFINITY, f64::min);
    let near = |a: &[f64], b: &[f64]| {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1.5 * spacing)
    };
    let mut chosen: Vec<usize> = Vec::with_capacity(config.multistart);
    for &i in &order {
        if chosen.len() == config.multistart {
            break;
        }
        if chosen.iter().all(|&c| !near(&grid[c], &grid[i])) {
            chosen.push(i);
        }
    }
    for &i in &order {
        if chosen.len() >= config.multistart.min(grid.len()) {
            break;
        }
        if !chosen.contains(&i) {
            chosen.push(i);
        }
    }
    let mut starts: Vec<(Vec<f64>, f64)> =
        chosen.iter().map(|&i| (grid[i].clone(), values[i])).collect();

    let random = domain.random_points(config.random_starts, config.seed)?;
    let random_values = evaluate_all(objective, &random)?;
    evaluations += random.len() as u64;
    starts.extend(random.into_iter().zip(random_values));

    let remaining = config.budget.saturating_sub(evaluations);
    let per_start = remaining / starts.len() as u64;
    let params = PatternParams::from_config(config, radius);
    let stencil = Stencil::new(n);

    let refined: Vec<Result<Refinement>> = starts
        .par_iter()
        .map(|(x, v)| pattern_search(objective, x, *v, &domain, &stencil, &params, per_start))
        .collect();
    let mut endpoints = Vec::with_capacity(starts.len());
    let mut exhausted = evaluations >= config.budget;
    for r in refined {
        let r = r?;
        evaluations += r.evaluations;
        exhausted |= r.exhausted;
        endpoints.push((r.point, r.value));
    }

    let clusters = cluster_minima(&endpoints, norm, config.value_tol, config.separation);
    let global_value = clusters.first().map_or(f64::INFINITY, |c| c.value);
    let status = if exhausted {
        MinimizationStatus::BudgetExhausted
    } else {
        boundary_status(&clusters, norm, radius, config.separation)
    };
    Ok(MinimizationResult {
        clusters,
        global_value,
        status,
        evaluations,
        radius,
        value_tol: config.value_tol,
        separation: config.separation,
        grid_resolution: resolution,
    })
}

/// Exhaustive scan of the feasible grid with the same clustering rule as
/// [`global_minimize`] and no local refinement.
///
/// Grid nodes one cell apart cannot resolve distinct minima, so the
/// separation used (and reported) is at least the norm of one grid cell.
pub fn brute_force_minima<F>(
    objective: &F,
    set: &FeasibleSet,
    norm: &NormSpec,
    radius: f64,
    resolution: usize,
    value_tol: f64,
    separation: f64,
) -> Result<MinimizationResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync + ?Sized,
{
    let domain = SampleDomain::new(set, norm, radius, resolution)?;
    let grid = domain.grid_points()?;
    if grid.is_empty() {
        return Err(Error::EmptyDomain(format!(
            "no grid point of the feasible set lies within radius {radius}"
        )));
    }
    let values = evaluate_all(objective, &grid)?;
    let evaluations = grid.len() as u64;
    let points: Vec<(Vec<f64>, f64)> = grid.into_iter().zip(values).collect();
    let cell: Vec<f64> = (0..set.dimension())
        .map(|i| 2.0 * norm.coordinate_bound(i, radius) / (resolution.max(2) - 1) as f64)
        .collect();
    let separation = separation.max(1.01 * norm.eval(&cell));
    let clusters = cluster_minima(&points, norm, value_tol, separation);
    let global_value = clusters.first().map_or(f64::INFINITY, |c| c.value);
    Ok(MinimizationResult {
        status: boundary_status(&clusters, norm, radius, separation),
        clusters,
        global_value,
        evaluations,
        radius,
        value_tol,
        separation,
        grid_resolution: resolution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn double_well(x: &[f64]) -> Result<f64> {
        Ok((x[0] * x[0] - 1.0).powi(2))
    }

    #[test]
    fn config_validation() {
        assert!(OptimizeConfig::default().validate().is_ok());
        let c = OptimizeConfig { shrink: 1.0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = OptimizeConfig { separation: 1e-10, ..Default::default() };
        assert!(c.validate().is_err());
        let c = OptimizeConfig { initial_step: Some(0.0), ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn stencil_sizes() {
        let s = Stencil::new(2);
        assert_eq!(s.axis.len(), 4);
        assert_eq!(s.extended.len(), 4);
        let s = Stencil::new(3);
        assert_eq!(s.axis.len() + s.extended.len(), 26);
        let s = Stencil::new(5);
        assert_eq!(s.extended.len(), 4 * 10);
    }

    #[test]
    fn double_well_has_two_clusters() {
        let set = FeasibleSet::full_space(1).unwrap();
        let norm = NormSpec::l2(1);
        let r = global_minimize(&double_well, &set, &norm, 2.0, &OptimizeConfig::default()).unwrap();
        assert_eq!(r.status, MinimizationStatus::Ok);
        assert_eq!(r.cluster_count(), 2, "{r:?}");
        let mut xs: Vec<f64> = r.clusters.iter().map(|c| c.point[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert!((xs[0] + 1.0).abs() < 1e-6 && (xs[1] - 1.0).abs() < 1e-6, "{xs:?}");
        assert!(r.global_value < 1e-10);
    }

    #[test]
    fn pattern_search_is_monotone_and_respects_ball() {
        let set = FeasibleSet::full_space(2).unwrap();
        let norm = NormSpec::l2(2);
        let dom = SampleDomain::new(&set, &norm, 1.0, 3).unwrap();
        let obj = |x: &[f64]| Ok((x[0] - 3.0).powi(2) + x[1] * x[1]);
        let params = PatternParams { initial_step: 0.1, shrink: 0.5, termination_step: 1e-9 };
        let start = [0.0, 0.5];
        let f0 = obj(&start).unwrap();
        let r = pattern_search(&obj, &start, f0, &dom, &Stencil::new(2), &params, 100_000).unwrap();
        assert!(r.value <= f0);
        assert!(norm.eval(&r.point) <= 1.0);
        assert!((r.point[0] - 1.0).abs() < 1e-6, "{:?}", r.point);
    }

    #[test]
    fn minimum_on_truncation_sphere_is_flagged() {
        let set = FeasibleSet::full_space(1).unwrap();
        let norm = NormSpec::l2(1);
        let slope = |x: &[f64]| Ok(x[0]);
        let r = global_minimize(&slope, &set, &norm, 5.0, &OptimizeConfig::default()).unwrap();
        assert_eq!(r.status, MinimizationStatus::NoMinimumSuspected);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let set = FeasibleSet::full_space(1).unwrap();
        let norm = NormSpec::l2(1);
        let cfg = OptimizeConfig { budget: 60, ..Default::default() };
        let r = global_minimize(&double_well, &set, &norm, 2.0, &cfg).unwrap();
        assert_eq!(r.status, MinimizationStatus::BudgetExhausted);
        assert!(r.evaluations <= 60);
    }

    #[test]
    fn empty_truncation_is_a_domain_error() {
        let set = FeasibleSet::orthant(vec![5.0]).unwrap();
        let norm = NormSpec::l2(1);
        let err = global_minimize(&double_well, &set, &norm, 1.0, &OptimizeConfig::default());
        assert!(matches!(err, Err(Error::EmptyDomain(_))));
    }

    #[test]
    fn brute_force_examples() {
        let line = FeasibleSet::full_space(1).unwrap();
        let r = brute_force_minima(&double_well, &line, &NormSpec::l2(1), 2.0, 4001, 1e-6, 1e-3).unwrap();
        assert_eq!(r.cluster_count(), 2);
        for c in &r.clusters {
            assert!((c.point[0].abs() - 1.0).abs() < 1e-3);
        }

        let orth = FeasibleSet::orthant(vec![0.0, 0.0]).unwrap();
        let l1 = NormSpec::l1(2);
        let obj = |x: &[f64]| Ok(x[0].abs() + x[1].abs());
        let r = brute_force_minima(&obj, &orth, &l1, 1.0, 101, 1e-6, 1e-3).unwrap();
        assert_eq!(r.cluster_count(), 1);
        assert_eq!(r.best().point, vec![0.0, 0.0]);
        assert_eq!(r.global_value, 0.0);
    }

    #[test]
    fn brute_force_guard() {
        let set = FeasibleSet::full_space(3).unwrap();
        let r = brute_force_minima(&double_well, &set, &NormSpec::l2(3), 1.0, 1000, 1e-6, 1e-3);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn objective_errors_propagate() {
        let set = FeasibleSet::full_space(1).unwrap();
        let bad = |x: &[f64]| {
            if x[0] > 0.5 {
                Err(Error::InvalidInput("boom".into()))
            } else {
                Ok(x[0] * x[0])
            }
        };
        assert!(global_minimize(&bad, &set, &NormSpec::l2(1), 2.0, &OptimizeConfig::default()).is_err());
    }

    #[test]
    fn clustering_rules() {
        let norm = NormSpec::l2(1);
        let pts = vec![
            (vec![0.0], 1.0),
            (vec![0.0005], 1.0 + 1e-7),
            (vec![2.0], 1.0 + 5e-7),
            (vec![3.0], 1.1),
        ];
        let c = cluster_minima(&pts, &norm, 1e-6, 1e-3);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].point, vec![0.0]);
        assert_eq!(c[1].point, vec![2.0]);
    }

    #[test]
    fn brute_force_merges_nodes_straddling_a_kink() {
        // minimum at x = 1/1.3, bracketed by two grid nodes with equal values
        let set = FeasibleSet::full_space(1).unwrap();
        let norm = NormSpec::l2(1);
        let kink = |x: &[f64]| Ok((1.3 * x[0] - 1.0).abs() - (0.3 * x[0] - 0.5).abs());
        let r = brute_force_minima(&kink, &set, &norm, 4.0, 4001, 1e-6, 1e-3).unwrap();
        assert_eq!(r.cluster_count(), 1);
        assert!(r.separation > 2e-3);
    }
}
