//! Experiment drivers: uniqueness certification, fixed-point location with
//! saddle checks, minimax gaps and counterexample sweeps.

mod minimax;
mod saddle;
mod sweep;
mod uniqueness;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use minimax::{minimax_gap, MinimaxGap, MinimaxOptions};
pub use saddle::{
    find_fixed_point, verify_saddle, FixedPointOptions, SaddleCheck, SaddlePasses, SaddleReport,
    SaddleSample, SaddleTolerances,
};
pub use sweep::{
    search_counterexample, CandidateVerification, CellStatus, CellSummary,
    CounterexampleCandidate, FamilyTemplate, Param, ParamRange, PlantInjection, SweepConfig,
    SweepReport,
};
pub use uniqueness::{
    certify_point, certify_uniqueness, default_y_samples, CertifyOptions, EntryVerdict,
    RadiusSource, UniquenessEntry, UniquenessReport, UniquenessVerdict,
};

/// Objectives with known minima that can stand in for `J(·, y)` to validate
/// the detectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantedObjective {
    /// `(x_axis² − offset²)² + Σ_{j≠axis} x_j²`: two minima at `±offset·e_axis`
    /// with exactly tied values.
    DoubleWell { axis: usize, offset: f64 },
}

impl PlantedObjective {
    pub fn validate(&self, dimension: usize) -> Result<()> {
        match self {
            PlantedObjective::DoubleWell { axis, offset } => {
                if *axis >= dimension {
                    return Err(Error::InvalidInput(format!(
                        "planted axis {axis} out of range for dimension {dimension}"
                    )));
                }
                if !(*offset > 0.0) || !offset.is_finite() {
                    return Err(Error::InvalidInput("planted offset must be positive".into()));
                }
                Ok(())
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            PlantedObjective::DoubleWell { axis, offset } => {
                let well = (x[*axis] * x[*axis] - offset * offset).powi(2);
                let rest: f64 = x
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| j != axis)
                    .map(|(_, v)| v * v)
                    .sum();
                well + rest
            }
        }
    }

    /// The planted minimizers.
    pub fn minimizers(&self, dimension: usize) -> Vec<Vec<f64>> {
        match self {
            PlantedObjective::DoubleWell { axis, offset } => [-offset, *offset]
                .iter()
                .map(|s| {
                    let mut p = vec![0.0; dimension];
                    p[*axis] = *s;
                    p
                })
                .collect(),
        }
    }
}
