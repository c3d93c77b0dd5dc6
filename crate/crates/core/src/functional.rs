//! The tilted functional `J(x, y) = ‖x − f(x)‖ − ‖y − f(x)‖`, the displacement
//! `Φ(x) = ‖x − f(x)‖ = sup_y J(x, y)`, and coercivity radii.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::maps::{evaluate, MapSpec, INPUT_TOL};
use crate::spaces::{FeasibleSet, NormSpec};

/// Tolerance used when checking a declared zero diagonal.
pub const DIAGONAL_TOL: f64 = 1e-12;

/// Norm, feasible set and map bundled into one functional.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedFunctional {
    norm: NormSpec,
    set: FeasibleSet,
    map: MapSpec,
}

impl TiltedFunctional {
    pub fn new(norm: NormSpec, set: FeasibleSet, map: MapSpec) -> Result<Self> {
        let n = map.dimension()?;
        check_dim(n, norm.dimension())?;
        check_dim(n, set.dimension())?;
        Ok(Self { norm, set, map })
    }

    pub fn norm(&self) -> &NormSpec {
        &self.norm
    }

    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn map(&self) -> &MapSpec {
        &self.map
    }

    pub fn dimension(&self) -> usize {
        self.norm.dimension()
    }

    /// `f(x)`, range-checked against the set.
    pub fn image(&self, x: &[f64]) -> Result<Vec<f64>> {
        evaluate(&self.map, x, &self.set)
    }

    fn check_point(&self, y: &[f64]) -> Result<()> {
        check_dim(self.dimension(), y.len())?;
        let violation = self.set.violation(y);
        if violation > INPUT_TOL {
            return Err(Error::Infeasible { violation });
        }
        Ok(())
    }

    /// `J(x, y)`.
    pub fn tilted_value(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_point(y)?;
        let fx = self.image(x)?;
        Ok(self.tilted_with_image(x, &fx, y))
    }

    /// `J(x, y)` given a precomputed `f(x)`. Both norms are the same
    /// expression, so `J(x, x)` is exactly zero.
    #[inline]
    pub fn tilted_with_image(&self, x: &[f64], fx: &[f64], y: &[f64]) -> f64 {
        self.norm.distance(x, fx) - self.norm.distance(y, fx)
    }

    /// `Φ(x) = ‖x − f(x)‖`.
    pub fn displacement(&self, x: &[f64]) -> Result<f64> {
        let fx = self.image(x)?;
        Ok(self.norm.distance(x, &fx))
    }

    /// Radius beyond which `J(·, y)` provably exceeds `best_known_value`,
    /// given that `‖f(x)‖ ≤ kappa‖x‖` for all `‖x‖ ≥ r0`.
    ///
    /// From `J(x,y) ≥ ‖x‖(1 − 2κ) − ‖y‖`, any `‖x‖ ≥ R` with
    /// `R = max(r0, (‖y‖ + best + margin)/(1 − 2κ))` gives
    /// `J(x, y) ≥ best + margin`.
    pub fn coercivity_radius(
        &self,
        y: &[f64],
        kappa: f64,
        r0: f64,
        best_known_value: f64,
        margin: f64,
    ) -> Result<f64> {
        check_dim(self.dimension(), y.len())?;
        if !(kappa >= 0.0) {
            return Err(Error::InvalidInput(format!("kappa must be >= 0, got {kappa}")));
        }
        if kappa >= 0.5 {
            return Err(Error::Precondition(format!(
                "coercivity needs kappa < 1/2, got {kappa}"
            )));
        }
        if !(margin > 0.0) {
            return Err(Error::InvalidInput(format!("margin must be positive, got {margin}")));
        }
        if !(r0 >= 0.0) || !best_known_value.is_finite() {
            return Err(Error::InvalidInput("r0 must be >= 0 and the incumbent finite".into()));
        }
        let r = (self.norm.eval(y) + best_known_value + margin) / (1.0 - 2.0 * kappa);
        Ok(r0.max(r))
    }
}

pub type BifunctionalFn = dyn Fn(&[f64], &[f64]) -> Result<f64> + Send + Sync;

/// An arbitrary real function of `(x, y)` on a feasible set, with declared
/// structural flags.
#[derive(Clone)]
pub struct GenericBifunctional {
    label: String,
    evaluator: Arc<BifunctionalFn>,
    domain: FeasibleSet,
    norm: NormSpec,
    zero_diagonal: bool,
    concave_in_y: bool,
}

impl fmt::Debug for GenericBifunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenericBifunctional")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("norm", &self.norm)
            .field("zero_diagonal", &self.zero_diagonal)
            .field("concave_in_y", &self.concave_in_y)
            .finish_non_exhaustive()
    }
}

impl GenericBifunctional {
    pub fn new<F>(
        label: impl Into<String>,
        domain: FeasibleSet,
        norm: NormSpec,
        zero_diagonal: bool,
        concave_in_y: bool,
        evaluator: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64], &[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        check_dim(domain.dimension(), norm.dimension())?;
        Ok(Self {
            label: label.into(),
            evaluator: Arc::new(evaluator),
            domain,
            norm,
            zero_diagonal,
            concave_in_y,
        })
    }

    /// The tilted functional as a bifunctional: zero on the diagonal and
    /// concave in `y`.
    pub fn from_tilted(f: TiltedFunctional) -> Self {
        let domain = f.set().clone();
        let norm = f.norm().clone();
        let f = Arc::new(f);
        Self {
            label: "tilted".into(),
            evaluator: Arc::new(move |x, y| f.tilted_value(x, y)),
            domain,
            norm,
            zero_diagonal: true,
            concave_in_y: true,
        }
    }

    /// `J ≡ 0`.
    pub fn zero(domain: FeasibleSet, norm: NormSpec) -> Result<Self> {
        Self::new("zero", domain, norm, true, true, |_, _| Ok(0.0))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> &FeasibleSet {
        &self.domain
    }

    pub fn norm(&self) -> &NormSpec {
        &self.norm
    }

    pub fn zero_diagonal(&self) -> bool {
        self.zero_diagonal
    }

    pub fn concave_in_y(&self) -> bool {
        self.concave_in_y
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        (self.evaluator)(x, y)
    }

    /// Largest `|J(x, x)|` over the given points.
    pub fn diagonal_defect(&self, points: &[Vec<f64>]) -> Result<f64> {
        points
            .iter()
            .try_fold(0.0_f64, |m, x| Ok(m.max(self.eval(x, x)?.abs())))
    }
}
