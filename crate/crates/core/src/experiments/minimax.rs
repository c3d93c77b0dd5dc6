use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::GenericBifunctional;
use crate::optimize::{pattern_search, PatternParams, Stencil};
use crate::spaces::SampleDomain;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimaxOptions {
    pub shrink: f64,
    pub termination_step: f64,
    /// Evaluation cap for each inner refinement.
    pub inner_budget: u64,
    /// Evaluation cap (in envelope evaluations) for each outer refinement.
    pub outer_budget: u64,
    /// Distance to the truncation sphere that raises a boundary flag, and
    /// the proximity under which the two witnesses count as one point.
    pub separation: f64,
}

impl Default for MinimaxOptions {
    fn default() -> Self {
        Self {
            shrink: 0.5,
            termination_step: 1e-9,
            inner_budget: 5_000,
            outer_budget: 5_000,
            separation: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxGap {
    /// `sup_y inf_x J`
    pub lower: f64,
    /// `inf_x sup_y J`
    pub upper: f64,
    pub gap: f64,
    /// Minimizer of the upper envelope `x ↦ sup_y J(x, y)`.
    pub x_witness: Vec<f64>,
    /// Maximizer of the lower envelope `y ↦ inf_x J(x, y)`.
    pub y_witness: Vec<f64>,
    pub witness_distance: f64,
    pub witnesses_coincide: bool,
    pub x_on_boundary: bool,
    pub y_on_boundary: bool,
    pub radius: f64,
    pub resolution: usize,
    pub grid_points: usize,
    /// Envelope values at the grid nodes: `(point, sup_y J(point, ·), inf_x J(·, point))`.
    #[serde(skip)]
    pub envelopes: Vec<(Vec<f64>, f64, f64)>,
}

/// Both envelopes of `J` over `X ∩ {‖·‖ ≤ radius}` by nested grid search,
/// each inner and outer optimum polished by compass search.
///
/// The outer witnesses are cross-evaluated (`J(x̂, ŷ)` enters both inner
/// problems), which keeps `lower ≤ upper` exact.
pub fn minimax_gap(
    j: &GenericBifunctional,
    radius: f64,
    resolution: usize,
    options: &MinimaxOptions,
) -> Result<MinimaxGap> {
    if !(options.shrink > 0.0 && options.shrink < 1.0) || !(options.termination_step > 0.0) {
        return Err(Error::InvalidInput("minimax: bad pattern-search parameters".into()));
    }
    let domain = SampleDomain::new(j.domain(), j.norm(), radius, resolution)?;
    let grid = domain.grid_points()?;
    if grid.is_empty() {
        return Err(Error::EmptyDomain(format!(
            "no grid point of the feasible set lies within radius {radius}"
        )));
    }
    let n = domain.dimension();
    let spacing = (0..n)
        .map(|i| 2.0 * j.norm().coordinate_bound(i, radius) / (resolution.max(2) - 1) as f64)
        .fold(f64::INFINITY, f64::min);
    let params = PatternParams {
        initial_step: spacing,
        shrink: options.shrink,
        termination_step: options.termination_step,
    };
    let stencil = Stencil::new(n);

    // table[i][k] = J(grid[i], grid[k])
    let table: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|x| grid.iter().map(|y| j.eval(x, y)).collect::<Result<Vec<f64>>>())
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_>>()?;

    let sup_from = |x: &[f64], row: Option<&[f64]>| -> Result<f64> {
        let values: Vec<f64> = match row {
            Some(r) => r.to_vec(),
            None => grid.iter().map(|y| j.eval(x, y)).collect::<Result<_>>()?,
        };
        let (k, v) = argbest(&values, |a, b| a > b);
        let neg = |y: &[f64]| j.eval(x, y).map(|v| -v);
        let r = pattern_search(&neg, &grid[k], -v, &domain, &stencil, &params, options.inner_budget)?;
        Ok(-r.value)
    };
    let inf_from = |y: &[f64], column: Option<Vec<f64>>| -> Result<f64> {
        let values: Vec<f64> = match column {
            Some(c) => c,
            None => grid.iter().map(|x| j.eval(x, y)).collect::<Result<_>>()?,
        };
        let (k, v) = argbest(&values, |a, b| a < b);
        let obj = |x: &[f64]| j.eval(x, y);
        let r = pattern_search(&obj, &grid[k], v, &domain, &stencil, &params, options.inner_budget)?;
        Ok(r.value)
    };

    let upper_env: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| sup_from(&grid[i], Some(&table[i])))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_>>()?;
    let lower_env: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|k| inf_from(&grid[k], Some(table.iter().map(|row| row[k]).collect())))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_>>()?;

    let (ix, upper0) = argbest(&upper_env, |a, b| a < b);
    let upper_obj = |x: &[f64]| sup_from(x, None);
    let outer_x = pattern_search(&upper_obj, &grid[ix], upper0, &domain, &stencil, &params, options.outer_budget)?;

    let (iy, lower0) = argbest(&lower_env, |a, b| a > b);
    let lower_obj = |y: &[f64]| inf_from(y, None).map(|v| -v);
    let outer_y = pattern_search(&lower_obj, &grid[iy], -lower0, &domain, &stencil, &params, options.outer_budget)?;

    let cross = j.eval(&outer_x.point, &outer_y.point)?;
    let upper = outer_x.value.max(cross);
    let lower = (-outer_y.value).min(cross);

    let witness_distance = j.norm().distance(&outer_x.point, &outer_y.point);
    let on_boundary = |p: &[f64]| j.norm().eval(p) >= radius - options.separation;
    Ok(MinimaxGap {
        lower,
        upper,
        gap: upper - lower,
        witnesses_coincide: witness_distance <= options.separation,
        x_on_boundary: on_boundary(&outer_x.point),
        y_on_boundary: on_boundary(&outer_y.point),
        witness_distance,
        x_witness: outer_x.point,
        y_witness: outer_y.point,
        radius,
        resolution,
        grid_points: grid.len(),
        envelopes: grid
            .into_iter()
            .zip(upper_env.into_iter().zip(lower_env))
            .map(|(p, (u, l))| (p, u, l))
            .collect(),
    })
}

/// Index and value of the best entry under `better`, first index on ties.
fn argbest(values: &[f64], better: impl Fn(f64, f64) -> bool) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if better(v, best.1) {
            best = (i, v);
        }
    }
    best
}
