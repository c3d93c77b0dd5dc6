//! Catalog of parameterized self-maps `f: X → X`, growth estimation and
//! closed-form fixed points.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Matrix, Solve};
use crate::spaces::{seeded_rng, Exponent, FeasibleSet, NormSpec};

/// Tolerance for "x ∈ X" on inputs to [`evaluate`].
pub const INPUT_TOL: f64 = 1e-9;
/// Tolerance for "f(x) ∈ X" on outputs of [`evaluate`].
pub const RANGE_TOL: f64 = 1e-9;
/// Smallest largest-radius accepted by the sampled growth estimate.
pub const MIN_SAMPLED_RADIUS: f64 = 1e2;

/// Bounded smooth vector fields added to an affine map, scaled by an
/// amplitude `ρ`. Every coordinate stays within `[-ρ, ρ]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    /// `ρ sin(x_i)`
    Sine,
    /// `ρ tanh(x_i)`
    Tanh,
    /// `ρ exp(-x_i²)`
    Bump,
    /// `ρ sin(x_{i+1 mod n})`
    CrossSine,
}

impl Perturbation {
    fn apply(self, amplitude: f64, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            out[i] += amplitude
                * match self {
                    Perturbation::Sine => x[i].sin(),
                    Perturbation::Tanh => x[i].tanh(),
                    Perturbation::Bump => (-x[i] * x[i]).exp(),
                    Perturbation::CrossSine => x[(i + 1) % n].sin(),
                };
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    /// `x ↦ A x + b`
    Affine { a: Matrix, b: Vec<f64> },
    /// `x ↦ c`
    Constant { c: Vec<f64> },
    /// `x ↦ A x + b + ρ·g(x)` with `g` from the bounded catalog.
    AffinePlusBounded { a: Matrix, b: Vec<f64>, perturbation: Perturbation, amplitude: f64 },
    /// `x ↦ P_X(inner(x))`, ranged into `X` by construction.
    ComposedWithProjection { inner: Box<MapSpec> },
}

impl MapSpec {
    pub fn affine(a: Matrix, b: Vec<f64>) -> Result<Self> {
        let m = MapSpec::Affine { a, b };
        m.dimension()?;
        Ok(m)
    }

    pub fn constant(c: Vec<f64>) -> Result<Self> {
        let m = MapSpec::Constant { c };
        m.dimension()?;
        Ok(m)
    }

    /// `x ↦ s·x` on ℝⁿ.
    pub fn scalar(n: usize, s: f64) -> Self {
        MapSpec::Affine { a: Matrix::scalar(n, s), b: vec![0.0; n] }
    }

    pub fn projected(self) -> Self {
        MapSpec::ComposedWithProjection { inner: Box::new(self) }
    }

    /// Validates the shapes and returns the dimension.
    pub fn dimension(&self) -> Result<usize> {
        match self {
            MapSpec::Affine { a, b } | MapSpec::AffinePlusBounded { a, b, .. } => {
                a.validate()?;
                if !a.is_square() {
                    return Err(Error::InvalidInput("map matrix must be square".into()));
                }
                check_dim(a.rows, b.len())?;
                if b.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput("map offset must be finite".into()));
                }
                if let MapSpec::AffinePlusBounded { amplitude, .. } = self {
                    if !(*amplitude >= 0.0) || !amplitude.is_finite() {
                        return Err(Error::InvalidInput(
                            "perturbation amplitude must be finite and >= 0".into(),
                        ));
                    }
                }
                Ok(a.rows)
            }
            MapSpec::Constant { c } => {
                if c.is_empty() || c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput("constant map needs a finite vector".into()));
                }
                Ok(c.len())
            }
            MapSpec::ComposedWithProjection { inner } => inner.dimension(),
        }
    }

    /// Image of `x` without any membership checks. Only the projection family
    /// consults `set`.
    pub fn raw_image(&self, x: &[f64], set: &FeasibleSet) -> Result<Vec<f64>> {
        match self {
            MapSpec::Affine { a, b } => Ok(linalg::add(&a.mul_vec(x), b)),
            MapSpec::Constant { c } => Ok(c.clone()),
            MapSpec::AffinePlusBounded { a, b, perturbation, amplitude } => {
                let mut out = linalg::add(&a.mul_vec(x), b);
                perturbation.apply(*amplitude, x, &mut out);
                Ok(out)
            }
            MapSpec::ComposedWithProjection { inner } => set.project(&inner.raw_image(x, set)?),
        }
    }
}

/// `f(x)` for `x ∈ X`, with the range of `f` checked against `X`.
pub fn evaluate(map: &MapSpec, x: &[f64], set: &FeasibleSet) -> Result<Vec<f64>> {
    check_dim(set.dimension(), x.len())?;
    let violation = set.violation(x);
    if violation > INPUT_TOL {
        return Err(Error::Infeasible { violation });
    }
    let image = map.raw_image(x, set)?;
    check_dim(set.dimension(), image.len())?;
    if !matches!(map, MapSpec::ComposedWithProjection { .. }) {
        let violation = set.violation(&image);
        if violation > RANGE_TOL {
            return Err(Error::RangeViolation { violation, image });
        }
    }
    Ok(image)
}

/// Spot-checks `f(X) ⊆ X` on the given points.
pub fn check_range(map: &MapSpec, set: &FeasibleSet, samples: &[Vec<f64>]) -> Result<()> {
    samples.iter().try_for_each(|x| evaluate(map, x, set).map(drop))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GrowthMethod {
    Analytic,
    Sampled,
}

/// Estimate of `limsup_{‖x‖→∞} ‖f(x)‖/‖x‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    pub kappa_hat: f64,
    pub method: GrowthMethod,
    pub radii: Vec<f64>,
    pub satisfied: bool,
    /// Additive term `β` in `‖f(x)‖ ≤ κ̂‖x‖ + β`: exact for the analytic
    /// families, a sampled maximum otherwise.
    pub offset: f64,
    /// Largest sampled ratio per radius (empty for analytic estimates).
    pub shell_maxima: Vec<f64>,
}

impl GrowthEstimate {
    pub fn analytic(kappa_hat: f64, offset: f64) -> Self {
        Self {
            kappa_hat,
            method: GrowthMethod::Analytic,
            radii: Vec::new(),
            satisfied: kappa_hat < 0.5,
            offset,
            shell_maxima: Vec::new(),
        }
    }

    /// A pair `(κ, r0)` with `κ < 1/2` such that `‖f(x)‖ ≤ κ‖x‖` whenever
    /// `‖x‖ ≥ r0`, derived from `κ̂` and the offset. `None` when the growth
    /// bound is not met.
    pub fn linear_bound(&self) -> Option<(f64, f64)> {
        if !self.satisfied {
            return None;
        }
        if self.offset <= 0.0 {
            return Some((self.kappa_hat, 0.0));
        }
        let kappa = 0.5 * (self.kappa_hat + 0.5);
        Some((kappa, self.offset / (kappa - self.kappa_hat)))
    }
}

/// Induced operator norm of `a` in `norm` when a closed form (or power
/// iteration) exists: ℓ1, ℓ2 and ℓ∞, weighted or not.
pub fn operator_norm(a: &Matrix, norm: &NormSpec) -> Option<f64> {
    let scaled;
    let m = match norm.weights() {
        None => a,
        Some(w) => {
            let inv: Vec<f64> = w.iter().map(|v| 1.0 / v).collect();
            scaled = a.diag_scaled(w, &inv);
            &scaled
        }
    };
    match norm.exponent() {
        Exponent::Infinity => Some(m.norm_inf()),
        Exponent::Finite(1.0) => Some(m.norm_one()),
        Exponent::Finite(2.0) => Some(m.spectral_norm()),
        Exponent::Finite(_) => None,
    }
}

/// Estimates the growth coefficient of `map`. Affine and constant maps get
/// closed forms when the norm allows; everything else is sampled on shells
/// of the given radii, with points projected into `set`.
pub fn growth_coefficient(
    map: &MapSpec,
    norm: &NormSpec,
    set: &FeasibleSet,
    radii: &[f64],
    directions_per_radius: usize,
    seed: u64,
) -> Result<GrowthEstimate> {
    let n = map.dimension()?;
    check_dim(n, norm.dimension())?;
    check_dim(n, set.dimension())?;
    if radii.is_empty() {
        return Err(Error::InvalidInput("growth estimate needs at least one radius".into()));
    }
    if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("radii must be positive and increasing".into()));
    }

    match map {
        MapSpec::Constant { c } => {
            let mut g = GrowthEstimate::analytic(0.0, norm.eval(c));
            g.radii = radii.to_vec();
            return Ok(g);
        }
        MapSpec::Affine { a, b } => {
            if let Some(k) = operator_norm(a, norm) {
                let mut g = GrowthEstimate::analytic(k, norm.eval(b));
                g.radii = radii.to_vec();
                return Ok(g);
            }
        }
        _ => {}
    }

    let largest = *radii.last().expect("non-empty");
    if largest < MIN_SAMPLED_RADIUS {
        return Err(Error::InvalidInput(format!(
            "sampled growth estimate needs a largest radius >= {MIN_SAMPLED_RADIUS}, got {largest}"
        )));
    }
    if directions_per_radius == 0 {
        return Err(Error::InvalidInput("directions_per_radius must be positive".into()));
    }

    let mut rng = seeded_rng(seed);
    let witness = set.witness();
    let mut samples: Vec<(usize, f64, f64)> = Vec::new(); // (radius index, ‖x‖, ‖f(x)‖)
    for (ri, &r) in radii.iter().enumerate() {
        let mut points = Vec::with_capacity(directions_per_radius + 1);
        // one probe along the recession ray
        let dir_norm = norm.eval(&witness.direction);
        if dir_norm > 0.0 {
            points.push(witness.point(r / dir_norm));
        }
        for _ in 0..directions_per_radius {
            let u: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let nu = norm.eval(&u);
            if nu == 0.0 {
                continue;
            }
            let x: Vec<f64> = u.iter().map(|v| v * r / nu).collect();
            points.push(set.project(&x)?);
        }
        for p in points {
            let np = norm.eval(&p);
            if np == 0.0 {
                continue;
            }
            let fp = evaluate(map, &p, set)?;
            samples.push((ri, np, norm.eval(&fp)));
        }
    }
    let shell_maxima: Vec<f64> = (0..radii.len())
        .map(|ri| {
            samples
                .iter()
                .filter(|s| s.0 == ri)
                .fold(0.0_f64, |m, s| m.max(s.2 / s.1))
        })
        .collect();
    let kappa_hat = *shell_maxima.last().expect("non-empty");

    // offset: also probe near the origin where the additive part dominates
    let mut offset = samples.iter().fold(0.0_f64, |m, s| m.max(s.2 - kappa_hat * s.1));
    for t in [0.0, 1.0, 10.0] {
        let p = set.project(&witness.point(t))?;
        let fp = evaluate(map, &p, set)?;
        offset = offset.max(norm.eval(&fp) - kappa_hat * norm.eval(&p));
    }

    Ok(GrowthEstimate {
        kappa_hat,
        method: GrowthMethod::Sampled,
        radii: radii.to_vec(),
        satisfied: kappa_hat < 0.5,
        offset,
        shell_maxima,
    })
}

/// Ground-truth fixed point when one is available in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FixedPointOracle {
    Point { x: Vec<f64> },
    /// `I − A` is singular to machine tolerance.
    Singular { note: String },
    Unavailable,
}

impl FixedPointOracle {
    pub fn point(&self) -> Option<&[f64]> {
        match self {
            FixedPointOracle::Point { x } => Some(x),
            _ => None,
        }
    }
}

pub fn analytic_fixed_point(map: &MapSpec) -> Result<FixedPointOracle> {
    let n = map.dimension()?;
    match map {
        MapSpec::Constant { c } => Ok(FixedPointOracle::Point { x: c.clone() }),
        MapSpec::Affine { a, b } => {
            let mut m = Matrix::identity(n);
            for (mij, aij) in m.data.iter_mut().zip(&a.data) {
                *mij -= aij;
            }
            Ok(match linalg::solve(&m, b)? {
                Solve::Solution(x) => FixedPointOracle::Point { x },
                Solve::Singular { column, pivot } => FixedPointOracle::Singular {
                    note: format!("I - A is singular (column {column}, pivot {pivot:.3e})"),
                },
            })
        }
        _ => Ok(FixedPointOracle::Unavailable),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_map() -> MapSpec {
        MapSpec::affine(
            Matrix::from_rows(&[vec![0.3, 0.0], vec![0.0, 0.2]]).unwrap(),
            vec![1.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let line = FeasibleSet::full_space(1).unwrap();
        assert_eq!(evaluate(&MapSpec::scalar(1, 0.25), &[8.0], &line).unwrap(), vec![2.0]);

        let plane = FeasibleSet::full_space(2).unwrap();
        let c = MapSpec::constant(vec![1.0, 1.0]).unwrap();
        assert_eq!(evaluate(&c, &[-3.0, 7.0], &plane).unwrap(), vec![1.0, 1.0]);
        assert_eq!(evaluate(&diag_map(), &[0.0, 0.0], &plane).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn evaluate_rejects_infeasible_input_and_range_violations() {
        let orth = FeasibleSet::orthant(vec![0.0]).unwrap();
        let neg = MapSpec::scalar(1, -0.5);
        assert!(matches!(evaluate(&neg, &[-1.0], &orth), Err(Error::Infeasible { .. })));
        assert!(matches!(evaluate(&neg, &[2.0], &orth), Err(Error::RangeViolation { .. })));
        // composing with the projection repairs the range
        let fixed = neg.projected();
        assert_eq!(evaluate(&fixed, &[2.0], &orth).unwrap(), vec![0.0]);
    }

    #[test]
    fn growth_examples() {
        let plane = FeasibleSet::full_space(2).unwrap();
        let l2 = NormSpec::l2(2);
        let g = growth_coefficient(&MapSpec::scalar(2, 0.25), &l2, &plane, &[1.0], 4, 0).unwrap();
        assert_eq!(g.method, GrowthMethod::Analytic);
        assert!((g.kappa_hat - 0.25).abs() < 1e-14 && g.satisfied);

        let c = MapSpec::constant(vec![3.0, 4.0]).unwrap();
        for norm in [NormSpec::l1(2), NormSpec::l2(2), NormSpec::linf(2)] {
            let g = growth_coefficient(&c, &norm, &plane, &[1.0], 4, 0).unwrap();
            assert_eq!(g.kappa_hat, 0.0);
            assert!(g.satisfied);
        }
    }

    #[test]
    fn growth_rejects_bad_radii() {
        let plane = FeasibleSet::full_space(2).unwrap();
        let l2 = NormSpec::l2(2);
        let m = MapSpec::scalar(2, 0.25);
        assert!(growth_coefficient(&m, &l2, &plane, &[], 4, 0).is_err());
        assert!(growth_coefficient(&m, &l2, &plane, &[2.0, 1.0], 4, 0).is_err());
        let bounded = MapSpec::AffinePlusBounded {
            a: Matrix::scalar(2, 0.4),
            b: vec![0.0; 2],
            perturbation: Perturbation::Sine,
            amplitude: 1.0,
        };
        assert!(growth_coefficient(&bounded, &l2, &plane, &[1.0, 10.0], 4, 0).is_err());
    }

    #[test]
    fn weighted_operator_norm_uses_similarity() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let w = NormSpec::weighted(Exponent::ONE, vec![1.0, 4.0]).unwrap();
        // ‖W A W⁻¹‖₁ with W = diag(1, 4): entry (0,1) becomes 1/4
        assert_eq!(operator_norm(&a, &w), Some(0.25));
        assert_eq!(operator_norm(&a, &NormSpec::lp(Exponent::Finite(3.0), 2).unwrap()), None);
    }

    #[test]
    fn analytic_fixed_point_examples() {
        assert_eq!(
            analytic_fixed_point(&MapSpec::scalar(1, 0.25)).unwrap().point().unwrap(),
            &[0.0]
        );
        let x = analytic_fixed_point(&diag_map()).unwrap();
        let x = x.point().unwrap();
        assert!((x[0] - 1.0 / 0.7).abs() < 1e-14);
        assert!((x[1] - 1.25).abs() < 1e-14);
        assert_eq!(
            analytic_fixed_point(&MapSpec::constant(vec![1.0, 1.0]).unwrap()).unwrap().point().unwrap(),
            &[1.0, 1.0]
        );
        assert!(matches!(
            analytic_fixed_point(&MapSpec::scalar(2, 1.0)).unwrap(),
            FixedPointOracle::Singular { .. }
        ));
        assert_eq!(
            analytic_fixed_point(&MapSpec::scalar(2, 0.1).projected()).unwrap(),
            FixedPointOracle::Unavailable
        );
    }

    #[test]
    fn linear_bound_absorbs_offset() {
        let g = GrowthEstimate::analytic(0.3, 2.0);
        let (k, r0) = g.linear_bound().unwrap();
        assert!(k < 0.5 && k > 0.3);
        // ‖Ax + b‖ ≤ 0.3‖x‖ + 2 ≤ k‖x‖ once ‖x‖ ≥ r0
        assert!((0.3 * r0 + 2.0 - k * r0).abs() < 1e-12);
        assert_eq!(GrowthEstimate::analytic(0.25, 0.0).linear_bound(), Some((0.25, 0.0)));
        assert_eq!(GrowthEstimate::analytic(0.6, 0.0).linear_bound(), None);
    }
}
