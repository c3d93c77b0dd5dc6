use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::functional::{GenericBifunctional, TiltedFunctional, DIAGONAL_TOL};
use crate::maps::{GrowthEstimate, INPUT_TOL};
use crate::optimize::{global_minimize, MinimizationResult, OptimizeConfig};
use crate::spaces::SampleDomain;

/// Residual above which the fixed point counts as not located.
pub const LOCATE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaddleTolerances {
    /// `Φ(x*) ≤ residual`
    pub residual: f64,
    /// `max_y J(x*, y) ≤ min_check`
    pub min_check: f64,
    /// `J(f(x), x) − Φ(x) ≤ criterion`
    pub criterion: f64,
}

impl Default for SaddleTolerances {
    fn default() -> Self {
        Self { residual: 1e-6, min_check: 1e-6, criterion: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaddlePasses {
    pub residual: bool,
    pub min_check: bool,
    pub strict_check: bool,
    pub comparison_check: bool,
    pub criterion_check: bool,
}

impl SaddlePasses {
    pub fn all(&self) -> bool {
        self.residual && self.min_check && self.strict_check && self.comparison_check && self.criterion_check
    }
}

/// Per-sample values behind the strict and comparison checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleSample {
    pub x: Vec<f64>,
    /// `J(x, x*)`
    pub tilt_at_star: f64,
    /// `‖x − f(x)‖ − ‖x* − f(x)‖`
    pub displacement_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleReport {
    pub x_star: Vec<f64>,
    /// `Φ(x*)`
    pub residual: f64,
    /// `max_y J(x*, y)` over the sampled `y`.
    pub min_check: f64,
    pub min_check_witness: Vec<f64>,
    /// `min J(x, x*)` over sampled `x` at least `separation` from `x*`.
    pub strict_check: f64,
    pub strict_check_witness: Vec<f64>,
    /// `min (‖x − f(x)‖ − ‖x* − f(x)‖)` over the same samples.
    pub comparison_check: f64,
    /// `max (J(f(x), x) − Φ(x))` over sampled `x`.
    pub criterion_check: f64,
    pub passes: SaddlePasses,
    pub tolerances: SaddleTolerances,
    pub separation: f64,
    pub radius: f64,
    pub y_samples: usize,
    pub x_samples: usize,
    pub growth: GrowthEstimate,
    pub minimization: MinimizationResult,
    #[serde(skip)]
    pub samples: Vec<SaddleSample>,
}

impl SaddleReport {
    /// Pass flags recomputed from the stored numbers.
    pub fn recompute_passes(&self) -> SaddlePasses {
        passes_from(
            &self.tolerances,
            self.residual,
            self.min_check,
            self.strict_check,
            self.comparison_check,
            self.criterion_check,
        )
    }
}

fn passes_from(
    tol: &SaddleTolerances,
    residual: f64,
    min_check: f64,
    strict_check: f64,
    comparison_check: f64,
    criterion_check: f64,
) -> SaddlePasses {
    SaddlePasses {
        residual: residual <= tol.residual,
        min_check: min_check <= tol.min_check,
        strict_check: strict_check > 0.0,
        comparison_check: comparison_check > 0.0,
        criterion_check: criterion_check <= tol.criterion,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedPointOptions {
    pub check_samples: usize,
    pub margin: f64,
    pub tolerances: SaddleTolerances,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self { check_samples: 200, margin: 1.0, tolerances: SaddleTolerances::default() }
    }
}

/// Locates the fixed point as the minimizer of `Φ = sup_y J(·, y)` on a
/// coercivity-truncated domain, then checks the saddle inequalities, the
/// strict comparison `‖x* − f(x)‖ < ‖x − f(x)‖`, and the criterion
/// `J(f(x), x) ≤ Φ(x)` on seeded samples.
pub fn find_fixed_point(
    f: &TiltedFunctional,
    growth: &GrowthEstimate,
    config: &OptimizeConfig,
    options: &FixedPointOptions,
    seed: u64,
) -> Result<SaddleReport> {
    let (kappa, r0) = growth
        .linear_bound()
        .ok_or(Error::GrowthBoundUnmet { kappa: growth.kappa_hat })?;
    if options.check_samples == 0 {
        return Err(Error::InvalidInput("check_samples must be positive".into()));
    }
    let base = f.set().witness().base.clone();
    let incumbent = f.displacement(&base)?;
    // Φ(x) ≥ J(x, base) > incumbent outside this radius
    let radius = f.coercivity_radius(&base, kappa, r0, incumbent, options.margin)?;

    let phi = |x: &[f64]| f.displacement(x);
    let minimization = global_minimize(&phi, f.set(), f.norm(), radius, config)?;
    let x_star = minimization.best().point.clone();
    let fx_star = f.image(&x_star)?;
    let residual = f.norm().distance(&x_star, &fx_star);

    let domain = SampleDomain::new(f.set(), f.norm(), radius, 1)?;
    let mut ys = domain.random_points(options.check_samples, seed)?;
    // the maximizer of J(x*, ·) is f(x*)
    ys.push(fx_star.clone());
    let (min_check, min_check_witness) = ys
        .iter()
        .map(|y| (f.tilted_with_image(&x_star, &fx_star, y), y))
        .fold((f64::NEG_INFINITY, Vec::new()), |acc, (v, y)| {
            if v > acc.0 {
                (v, y.clone())
            } else {
                acc
            }
        });

    let candidates = domain.random_points(options.check_samples * 8, seed.wrapping_add(1))?;
    let xs: Vec<Vec<f64>> = candidates
        .into_iter()
        .filter(|x| f.norm().distance(x, &x_star) >= config.separation)
        .take(options.check_samples)
        .collect();
    if xs.is_empty() {
        return Err(Error::EmptyDomain("no comparison points away from x*".into()));
    }

    let evaluated: Vec<Result<(SaddleSample, f64)>> = xs
        .par_iter()
        .map(|x| {
            let fx = f.image(x)?;
            let tilt_at_star = f.tilted_with_image(x, &fx, &x_star);
            let displacement_gap = f.norm().distance(x, &fx) - f.norm().distance(&x_star, &fx);
            let ffx = f.image(&fx)?;
            let criterion = f.tilted_with_image(&fx, &ffx, x) - f.norm().distance(x, &fx);
            Ok((SaddleSample { x: x.clone(), tilt_at_star, displacement_gap }, criterion))
        })
        .collect();
    let mut samples = Vec::with_capacity(xs.len());
    let mut criterion_check = f64::NEG_INFINITY;
    for r in evaluated {
        let (s, c) = r?;
        criterion_check = criterion_check.max(c);
        samples.push(s);
    }
    let strict = samples
        .iter()
        .min_by(|a, b| a.tilt_at_star.total_cmp(&b.tilt_at_star))
        .expect("non-empty");
    let strict_check = strict.tilt_at_star;
    let strict_check_witness = strict.x.clone();
    let comparison_check = samples.iter().map(|s| s.displacement_gap).fold(f64::INFINITY, f64::min);

    let tolerances = options.tolerances;
    let passes = passes_from(&tolerances, residual, min_check, strict_check, comparison_check, criterion_check);
    let report = SaddleReport {
        x_star,
        residual,
        min_check,
        min_check_witness,
        strict_check,
        strict_check_witness,
        comparison_check,
        criterion_check,
        passes,
        tolerances,
        separation: config.separation,
        radius,
        y_samples: ys.len(),
        x_samples: samples.len(),
        growth: growth.clone(),
        minimization,
        samples,
    };
    if report.residual > LOCATE_TOL {
        return Err(Error::FixedPointNotLocated(Box::new(report)));
    }
    Ok(report)
}

/// Outcome of [`verify_saddle`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleCheck {
    /// `max_y J(x*, y)`
    pub max_value: f64,
    pub max_witness: Vec<f64>,
    /// `max_value ≤ tol`
    pub upper_pass: bool,
    /// `min_x J(x, x*)` over every sampled `x`.
    pub min_value: f64,
    pub min_witness: Vec<f64>,
    /// `min_value > −tol`
    pub lower_pass: bool,
    /// `min J(x, x*)` over sampled `x` at least `separation` from `x*`.
    pub strict_value: Option<f64>,
    pub strict_witness: Option<Vec<f64>>,
    /// `strict_value > 0`
    pub strict_pass: bool,
    pub diagonal_defect: f64,
    pub tol: f64,
    pub separation: f64,
}

impl SaddleCheck {
    pub fn passed(&self) -> bool {
        self.upper_pass && self.lower_pass && self.strict_pass
    }
}

/// Checks `J(x*, y) ≤ tol` for every `y` and `J(x, x*) > −tol` for every
/// `x`, with strict positivity once `‖x − x*‖ ≥ separation`.
pub fn verify_saddle(
    j: &GenericBifunctional,
    x_star: &[f64],
    y_grid: &[Vec<f64>],
    x_grid: &[Vec<f64>],
    tol: f64,
    separation: f64,
) -> Result<SaddleCheck> {
    if !j.zero_diagonal() {
        return Err(Error::Precondition("saddle check needs a zero-diagonal bifunctional".into()));
    }
    check_dim(j.domain().dimension(), x_star.len())?;
    let violation = j.domain().violation(x_star);
    if violation > INPUT_TOL {
        return Err(Error::Infeasible { violation });
    }
    if y_grid.is_empty() || x_grid.is_empty() {
        return Err(Error::InvalidInput("saddle check needs non-empty x and y samples".into()));
    }
    if !(tol >= 0.0) || !(separation > 0.0) {
        return Err(Error::InvalidInput("tol must be >= 0 and separation > 0".into()));
    }

    let diagonal_defect = j.diagonal_defect(x_grid)?.max(j.eval(x_star, x_star)?.abs());
    if diagonal_defect > DIAGONAL_TOL {
        return Err(Error::Precondition(format!(
            "declared zero diagonal fails: |J(x,x)| reaches {diagonal_defect:.3e}"
        )));
    }

    let upper: Vec<Result<f64>> = y_grid.par_iter().map(|y| j.eval(x_star, y)).collect();
    let mut max_value = f64::NEG_INFINITY;
    let mut max_witness = Vec::new();
    for (y, v) in y_grid.iter().zip(upper) {
        let v = v?;
        if v > max_value || max_witness.is_empty() {
            max_value = v;
            max_witness = y.clone();
        }
    }

    let lower: Vec<Result<f64>> = x_grid.par_iter().map(|x| j.eval(x, x_star)).collect();
    let mut min_value = f64::INFINITY;
    let mut min_witness = Vec::new();
    let mut strict_value: Option<f64> = None;
    let mut strict_witness = None;
    for (x, v) in x_grid.iter().zip(lower) {
        let v = v?;
        if v < min_value || min_witness.is_empty() {
            min_value = v;
            min_witness = x.clone();
        }
        if j.norm().distance(x, x_star) >= separation && strict_value.is_none_or(|s| v < s) {
            strict_value = Some(v);
            strict_witness = Some(x.clone());
        }
    }

    Ok(SaddleCheck {
        upper_pass: max_value <= tol,
        lower_pass: min_value > -tol,
        strict_pass: strict_value.is_some_and(|s| s > 0.0),
        max_value,
        max_witness,
        min_value,
        min_witness,
        strict_value,
        strict_witness,
        diagonal_defect,
        tol,
        separation,
    })
}
