//! Finite-dimensional normed spaces, closed convex unbounded feasible sets and
//! truncated sampling domains.
//!
//! Norms are ℓp (or diagonally weighted ℓp, `‖v‖ = ‖diag(w) v‖_p`). Feasible
//! sets carry a ray witness `base + t·direction ∈ X` for all `t ≥ 0`, computed or
//! validated when the set is built, so every set handed to the rest of the
//! crate is known to be unbounded. Projection is always Euclidean.

use std::collections::HashSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{axpy, dot, euclidean};

/// Residual accepted by [`FeasibleSet::project`] for intersections of half-spaces.
pub const PROJECTION_RESIDUAL: f64 = 1e-12;
/// Cycle cap for the half-space intersection projection.
pub const PROJECTION_MAX_CYCLES: usize = 10_000;
/// Largest grid a [`SampleDomain`] will enumerate.
pub const MAX_GRID_POINTS: u64 = 100_000_000;

// ---------------------------------------------------------------------------
// Norms

/// The exponent `p` of an ℓp norm. `p = ∞` is its own variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub const ONE: Exponent = Exponent::Finite(1.0);
    pub const TWO: Exponent = Exponent::Finite(2.0);

    fn validate(self) -> Result<()> {
        match self {
            Exponent::Finite(p) if !(p >= 1.0) || !p.is_finite() => Err(Error::InvalidInput(
                format!("norm exponent must satisfy p >= 1, got {p}"),
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => s.serialize_f64(*p),
            Exponent::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(p) => Ok(Exponent::Finite(p as f64)),
            Raw::Num(p) => Ok(Exponent::Finite(p)),
            Raw::Text(t) if matches!(t.as_str(), "inf" | "infinity" | "Infinity") => {
                Ok(Exponent::Infinity)
            }
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "norm exponent must be a number >= 1 or \"inf\", got {t:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NormKind {
    Lp { p: Exponent },
    WeightedLp { p: Exponent, weights: Vec<f64> },
}

/// Norm carried by the ambient space ℝⁿ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNormSpec", into = "RawNormSpec")]
pub struct NormSpec {
    kind: NormKind,
    dimension: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawNormSpec {
    Lp { p: Exponent, dimension: usize },
    WeightedLp { p: Exponent, weights: Vec<f64>, dimension: usize },
}

impl TryFrom<RawNormSpec> for NormSpec {
    type Error = Error;
    fn try_from(raw: RawNormSpec) -> Result<Self> {
        match raw {
            RawNormSpec::Lp { p, dimension } => NormSpec::new(NormKind::Lp { p }, dimension),
            RawNormSpec::WeightedLp { p, weights, dimension } => {
                NormSpec::new(NormKind::WeightedLp { p, weights }, dimension)
            }
        }
    }
}

impl From<NormSpec> for RawNormSpec {
    fn from(n: NormSpec) -> Self {
        let dimension = n.dimension;
        match n.kind {
            NormKind::Lp { p } => RawNormSpec::Lp { p, dimension },
            NormKind::WeightedLp { p, weights } => RawNormSpec::WeightedLp { p, weights, dimension },
        }
    }
}

impl NormSpec {
    pub fn new(kind: NormKind, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        match &kind {
            NormKind::Lp { p } => p.validate()?,
            NormKind::WeightedLp { p, weights } => {
                p.validate()?;
                check_dim(dimension, weights.len())?;
                if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
                    return Err(Error::InvalidInput("norm weights must be positive".into()));
                }
            }
        }
        Ok(Self { kind, dimension })
    }

    pub fn lp(p: Exponent, dimension: usize) -> Result<Self> {
        Self::new(NormKind::Lp { p }, dimension)
    }

    pub fn l1(dimension: usize) -> Self {
        Self::lp(Exponent::ONE, dimension).expect("valid norm")
    }

    pub fn l2(dimension: usize) -> Self {
        Self::lp(Exponent::TWO, dimension).expect("valid norm")
    }

    pub fn linf(dimension: usize) -> Self {
        Self::lp(Exponent::Infinity, dimension).expect("valid norm")
    }

    pub fn weighted(p: Exponent, weights: Vec<f64>) -> Result<Self> {
        let n = weights.len();
        Self::new(NormKind::WeightedLp { p, weights }, n)
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn exponent(&self) -> Exponent {
        match &self.kind {
            NormKind::Lp { p } | NormKind::WeightedLp { p, .. } => *p,
        }
    }

    pub fn weights(&self) -> Option<&[f64]> {
        match &self.kind {
            NormKind::Lp { .. } => None,
            NormKind::WeightedLp { weights, .. } => Some(weights),
        }
    }

    /// Same norm in a different dimension; weights are not transferable.
    pub fn with_dimension(&self, dimension: usize) -> Result<Self> {
        match &self.kind {
            NormKind::Lp { p } => Self::lp(*p, dimension),
            NormKind::WeightedLp { .. } if dimension == self.dimension => Ok(self.clone()),
            NormKind::WeightedLp { .. } => Err(Error::InvalidInput(
                "weighted norm cannot change dimension".into(),
            )),
        }
    }

    /// Checked norm evaluation.
    pub fn norm(&self, v: &[f64]) -> Result<f64> {
        check_dim(self.dimension, v.len())?;
        Ok(self.eval(v))
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self.weights() {
            None => lp_kernel(self.exponent(), a.iter().zip(b).map(|(x, y)| x - y)),
            Some(w) => lp_kernel(
                self.exponent(),
                a.iter().zip(b).zip(w).map(|((x, y), w)| w * (x - y)),
            ),
        }
    }

    /// Unchecked norm; callers guarantee the dimension.
    #[inline]
    pub fn eval(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dimension);
        match self.weights() {
            None => lp_kernel(self.exponent(), v.iter().copied()),
            Some(w) => lp_kernel(self.exponent(), v.iter().zip(w).map(|(x, w)| w * x)),
        }
    }

    /// Half-width of the axis-aligned box containing the ball of radius `r`
    /// along coordinate `i`.
    pub fn coordinate_bound(&self, i: usize, r: f64) -> f64 {
        match self.weights() {
            None => r,
            Some(w) => r / w[i],
        }
    }
}

fn lp_kernel<I>(p: Exponent, coords: I) -> f64
where
    I: Iterator<Item = f64> + Clone,
{
    match p {
        Exponent::Infinity => coords.fold(0.0, |m, x| m.max(x.abs())),
        Exponent::Finite(1.0) => coords.map(f64::abs).sum(),
        Exponent::Finite(p) => {
            let m = coords.clone().fold(0.0_f64, |m, x: f64| m.max(x.abs()));
            if m == 0.0 {
                return 0.0;
            }
            let s: f64 = if p == 2.0 {
                coords.map(|x| (x / m) * (x / m)).sum()
            } else {
                coords.map(|x| (x.abs() / m).powf(p)).sum()
            };
            if p == 2.0 {
                m * s.sqrt()
            } else {
                m * s.powf(1.0 / p)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Feasible sets

/// `{ x : normal · x ≥ offset }`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let h = Self { normal, offset };
        h.validate()?;
        Ok(h)
    }

    fn validate(&self) -> Result<()> {
        if !self.offset.is_finite() || self.normal.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput("half-space data must be finite".into()));
        }
        if euclidean(&self.normal) == 0.0 {
            return Err(Error::InvalidInput("half-space normal must be non-zero".into()));
        }
        Ok(())
    }

    /// Signed Euclidean distance to the boundary hyperplane, positive inside.
    #[inline]
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        (dot(&self.normal, x) - self.offset) / euclidean(&self.normal)
    }

    fn project(&self, z: &[f64]) -> Vec<f64> {
        let gap = self.offset - dot(&self.normal, z);
        if gap <= 0.0 {
            return z.to_vec();
        }
        axpy(z, gap / dot(&self.normal, &self.normal), &self.normal)
    }
}

/// A point and a direction such that the whole ray lies in the set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RayWitness {
    pub base: Vec<f64>,
    pub direction: Vec<f64>,
}

impl RayWitness {
    pub fn point(&self, t: f64) -> Vec<f64> {
        axpy(&self.base, t, &self.direction)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SetKind {
    FullSpace,
    /// `x_i ≥ lower_i`, no upper bounds.
    Orthant { lower: Vec<f64> },
    HalfSpace(HalfSpace),
    ConeIntersection { constraints: Vec<HalfSpace> },
}

/// A non-empty closed convex unbounded subset of ℝⁿ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSet", into = "RawSet")]
pub struct FeasibleSet {
    kind: SetKind,
    dimension: usize,
    witness: RayWitness,
}

/// Serialized form of a feasible set. `box` is accepted by the parser only so
/// that it can be rejected with a precise diagnostic.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawSet {
    FullSpace {
        dimension: usize,
    },
    Orthant {
        lower: Vec<f64>,
    },
    HalfSpace {
        normal: Vec<f64>,
        offset: f64,
    },
    ConeIntersection {
        constraints: Vec<HalfSpace>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ray: Option<RayWitness>,
    },
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

impl TryFrom<RawSet> for FeasibleSet {
    type Error = Error;
    fn try_from(raw: RawSet) -> Result<Self> {
        match raw {
            RawSet::FullSpace { dimension } => FeasibleSet::full_space(dimension),
            RawSet::Orthant { lower } => FeasibleSet::orthant(lower),
            RawSet::HalfSpace { normal, offset } => FeasibleSet::half_space(normal, offset),
            RawSet::ConeIntersection { constraints, ray } => {
                FeasibleSet::cone_intersection(constraints, ray)
            }
            RawSet::Box { .. } => Err(Error::InvalidInput(
                "set must be unbounded (a box is bounded)".into(),
            )),
        }
    }
}

impl From<FeasibleSet> for RawSet {
    fn from(s: FeasibleSet) -> Self {
        match s.kind {
            SetKind::FullSpace => RawSet::FullSpace { dimension: s.dimension },
            SetKind::Orthant { lower } => RawSet::Orthant { lower },
            SetKind::HalfSpace(h) => RawSet::HalfSpace { normal: h.normal, offset: h.offset },
            SetKind::ConeIntersection { constraints } => {
                RawSet::ConeIntersection { constraints, ray: Some(s.witness) }
            }
        }
    }
}

impl FeasibleSet {
    pub fn full_space(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        let mut direction = vec![0.0; dimension];
        direction[0] = 1.0;
        Ok(Self {
            kind: SetKind::FullSpace,
            dimension,
            witness: RayWitness { base: vec![0.0; dimension], direction },
        })
    }

    pub fn orthant(lower: Vec<f64>) -> Result<Self> {
        let dimension = lower.len();
        if dimension == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if lower.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidInput("orthant bounds must be finite".into()));
        }
        let witness = RayWitness { base: lower.clone(), direction: vec![1.0; dimension] };
        Ok(Self { kind: SetKind::Orthant { lower }, dimension, witness })
    }

    pub fn half_space(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let h = HalfSpace::new(normal, offset)?;
        let dimension = h.normal.len();
        let base = h.normal.iter().map(|a| a * h.offset / dot(&h.normal, &h.normal)).collect();
        let witness = RayWitness { base, direction: h.normal.clone() };
        Ok(Self { kind: SetKind::HalfSpace(h), dimension, witness })
    }

    /// Intersection of half-spaces. Unboundedness must be demonstrable: either
    /// the caller supplies a ray witness or one is found among simple candidate
    /// recession directions.
    pub fn cone_intersection(constraints: Vec<HalfSpace>, ray: Option<RayWitness>) -> Result<Self> {
        let first = constraints
            .first()
            .ok_or_else(|| Error::InvalidInput("cone intersection needs constraints".into()))?;
        let dimension = first.normal.len();
        if dimension == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        for c in &constraints {
            c.validate()?;
            check_dim(dimension, c.normal.len())?;
        }
        let recedes = |r: &[f64]| {
            let nr = euclidean(r);
            nr > 0.0
                && constraints
                    .iter()
                    .all(|c| dot(&c.normal, r) >= -1e-12 * euclidean(&c.normal) * nr)
        };
        let provisional = Self {
            kind: SetKind::ConeIntersection { constraints: constraints.clone() },
            dimension,
            witness: RayWitness { base: vec![0.0; dimension], direction: vec![0.0; dimension] },
        };

        let witness = match ray {
            Some(w) => {
                check_dim(dimension, w.base.len())?;
                check_dim(dimension, w.direction.len())?;
                if !recedes(&w.direction) {
                    return Err(Error::InvalidInput(
                        "set must be unbounded: ray direction leaves the set".into(),
                    ));
                }
                if provisional.violation(&w.base) > 1e-9 {
                    return Err(Error::InvalidInput("ray base lies outside the set".into()));
                }
                w
            }
            None => {
                let direction = candidate_directions(&constraints, dimension)
                    .into_iter()
                    .find(|r| recedes(r))
                    .ok_or_else(|| {
                        Error::InvalidInput(
                            "set must be unbounded: no recession direction found".into(),
                        )
                    })?;
                let base = provisional.project(&vec![0.0; dimension]).map_err(|e| match e {
                    Error::NonConvergence { .. } => {
                        Error::InvalidInput("set appears to be empty".into())
                    }
                    other => other,
                })?;
                RayWitness { base, direction }
            }
        };
        Ok(Self { witness, ..provisional })
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn witness(&self) -> &RayWitness {
        &self.witness
    }

    /// Largest constraint violation (Euclidean units for half-spaces); zero
    /// inside the set.
    pub fn violation(&self, x: &[f64]) -> f64 {
        match &self.kind {
            SetKind::FullSpace => 0.0,
            SetKind::Orthant { lower } => {
                lower.iter().zip(x).fold(0.0, |m, (l, xi)| m.max(l - xi))
            }
            SetKind::HalfSpace(h) => (-h.signed_distance(x)).max(0.0),
            SetKind::ConeIntersection { constraints } => constraints
                .iter()
                .fold(0.0, |m, h| m.max(-h.signed_distance(x))),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        check_dim(self.dimension, x.len())?;
        Ok(self.violation(x) <= tol)
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dimension, z.len())?;
        match &self.kind {
            SetKind::FullSpace => Ok(z.to_vec()),
            SetKind::Orthant { lower } => {
                Ok(z.iter().zip(lower).map(|(zi, l)| zi.max(*l)).collect())
            }
            SetKind::HalfSpace(h) => Ok(h.project(z)),
            SetKind::ConeIntersection { constraints } => dykstra(constraints, z, |x| self.violation(x)),
        }
    }
}

fn candidate_directions(constraints: &[HalfSpace], n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut sum = vec![0.0; n];
    for c in constraints {
        let nc = euclidean(&c.normal);
        for (s, a) in sum.iter_mut().zip(&c.normal) {
            *s += a / nc;
        }
    }
    out.push(sum);
    out.extend(constraints.iter().map(|c| c.normal.clone()));
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = sign;
            out.push(e);
        }
    }
    out
}

/// Dykstra's alternating projection: a cyclic sweep over the half-spaces with
/// correction terms, which converges to the Euclidean projection onto the
/// intersection rather than to an arbitrary feasible point.
fn dykstra(constraints: &[HalfSpace], z: &[f64], violation: impl Fn(&[f64]) -> f64) -> Result<Vec<f64>> {
    if violation(z) <= 0.0 {
        return Ok(z.to_vec());
    }
    let n = z.len();
    let mut x = z.to_vec();
    let mut corrections = vec![vec![0.0; n]; constraints.len()];
    let mut residual = f64::INFINITY;
    for _ in 0..PROJECTION_MAX_CYCLES {
        let prev = x.clone();
        for (h, p) in constraints.iter().zip(corrections.iter_mut()) {
            let y: Vec<f64> = x.iter().zip(p.iter()).map(|(a, b)| a + b).collect();
            x = h.project(&y);
            for ((pi, yi), xi) in p.iter_mut().zip(&y).zip(&x) {
                *pi = yi - xi;
            }
        }
        residual = violation(&x);
        let scale = 1.0 + x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let change = x.iter().zip(&prev).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        if residual <= PROJECTION_RESIDUAL && change <= 1e-14 * scale {
            return Ok(x);
        }
    }
    if residual <= PROJECTION_RESIDUAL {
        // feasible but the correction terms are still drifting; accept
        return Ok(x);
    }
    Err(Error::NonConvergence { iterations: PROJECTION_MAX_CYCLES, residual, last_iterate: x })
}

// ---------------------------------------------------------------------------
// Sampling

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `X ∩ {‖x‖ ≤ R}` with a per-axis grid resolution.
#[derive(Debug, Clone, Copy)]
pub struct SampleDomain<'a> {
    pub set: &'a FeasibleSet,
    pub norm: &'a NormSpec,
    pub radius: f64,
    pub resolution: usize,
}

impl<'a> SampleDomain<'a> {
    pub fn new(set: &'a FeasibleSet, norm: &'a NormSpec, radius: f64, resolution: usize) -> Result<Self> {
        check_dim(set.dimension(), norm.dimension())?;
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
        }
        if resolution == 0 {
            return Err(Error::InvalidInput("grid resolution must be positive".into()));
        }
        Ok(Self { set, norm, radius, resolution })
    }

    pub fn dimension(&self) -> usize {
        self.set.dimension()
    }

    pub fn admits(&self, x: &[f64], tol: f64) -> bool {
        self.set.violation(x) <= tol && self.norm.eval(x) <= self.radius * (1.0 + tol) + tol
    }

    pub fn grid_size(&self) -> u64 {
        (self.resolution as u64).saturating_pow(self.dimension() as u32)
    }

    /// Grid coordinate `k` of `resolution` along axis `i`. Odd resolutions put
    /// a node exactly at 0.
    pub fn axis_coordinate(&self, i: usize, k: usize) -> f64 {
        if self.resolution == 1 {
            return 0.0;
        }
        let b = self.norm.coordinate_bound(i, self.radius);
        let g = (self.resolution - 1) as f64;
        -b + 2.0 * b * (k as f64) / g
    }

    /// Box grid points projected into `X`, kept when inside the ball and
    /// deduplicated. Order follows the lexicographic order of grid indices
    /// (first axis slowest).
    pub fn grid_points(&self) -> Result<Vec<Vec<f64>>> {
        let total = self.grid_size();
        if total > MAX_GRID_POINTS {
            return Err(Error::InvalidInput(format!(
                "grid of {total} points exceeds the limit of {MAX_GRID_POINTS}"
            )));
        }
        let n = self.dimension();
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut idx = vec![0usize; n];
        let mut z = vec![0.0; n];
        for _ in 0..total {
            for (i, k) in idx.iter().enumerate() {
                z[i] = self.axis_coordinate(i, *k);
            }
            let p = self.set.project(&z)?;
            if self.norm.eval(&p) <= self.radius && seen.insert(bit_key(&p)) {
                out.push(p);
            }
            // odometer increment, last axis fastest
            for i in (0..n).rev() {
                idx[i] += 1;
                if idx[i] < self.resolution {
                    break;
                }
                idx[i] = 0;
            }
        }
        Ok(out)
    }

    /// Uniform box samples projected into `X`, kept when inside the ball.
    pub fn random_points(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let mut rng = seeded_rng(seed);
        let n = self.dimension();
        let mut out = Vec::with_capacity(count);
        let max_tries = count.saturating_mul(200).max(1000);
        for _ in 0..max_tries {
            if out.len() == count {
                break;
            }
            let z: Vec<f64> = (0..n)
                .map(|i| {
                    let b = self.norm.coordinate_bound(i, self.radius);
                    rng.random_range(-b..=b)
                })
                .collect();
            let p = self.set.project(&z)?;
            if self.norm.eval(&p) <= self.radius {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// Seeded low-discrepancy points: a Halton sequence with a random
    /// Cranley–Patterson shift, mapped to the box, projected into `X` and kept
    /// when inside the ball.
    pub fn halton_points(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
        let n = self.dimension();
        if n > PRIMES.len() {
            return Err(Error::InvalidInput("halton sampling supports n <= 12".into()));
        }
        let mut rng = seeded_rng(seed);
        let shift: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let mut out = Vec::with_capacity(count);
        let max_index = (count as u64).saturating_mul(200).max(1000);
        let mut index = 1u64;
        while out.len() < count && index <= max_index {
            let z: Vec<f64> = (0..n)
                .map(|i| {
                    let u = (radical_inverse(index, PRIMES[i]) + shift[i]).fract();
                    let b = self.norm.coordinate_bound(i, self.radius);
                    -b + 2.0 * b * u
                })
                .collect();
            index += 1;
            let p = self.set.project(&z)?;
            if self.norm.eval(&p) <= self.radius {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// Seeded points on the sphere `‖x‖ = R` that already lie in `X`; points
    /// outside `X` are discarded rather than projected.
    pub fn sphere_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = seeded_rng(seed);
        let n = self.dimension();
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let u: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let nu = self.norm.eval(&u);
            if nu == 0.0 {
                continue;
            }
            let x: Vec<f64> = u.iter().map(|v| v * self.radius / nu).collect();
            if self.set.violation(&x) <= 0.0 {
                out.push(x);
            }
        }
        out
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

pub(crate) fn bit_key(p: &[f64]) -> Vec<u64> {
    // -0.0 and 0.0 collapse to the same key
    p.iter().map(|v| (v + 0.0).to_bits()).collect()
}
