use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use tiltlab_core::experiments::{
    certify_uniqueness, find_fixed_point, minimax_gap, search_counterexample, verify_saddle,
    CellStatus, UniquenessVerdict,
};
use tiltlab_core::maps::{analytic_fixed_point, growth_coefficient};
use tiltlab_core::spaces::{Exponent, NormKind, SampleDomain};
use tiltlab_core::{Error, FeasibleSet, GenericBifunctional, NormSpec, TiltedFunctional};

use crate::config::{ExperimentConfig, ExperimentKind, PointSample, SampleScheme};
use crate::error::CliError;
use crate::report::{coords, nums, to_json_string, Cell, Table};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_FINDING: u8 = 2;

/// Report plus plot tables of one run, not yet written anywhere.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: u8,
    pub status: &'static str,
    pub report: Value,
    pub tables: Vec<Table>,
}

struct Finished {
    status: &'static str,
    exit_code: u8,
    result: Value,
    tables: Vec<Table>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

pub fn norm_label(norm: &NormSpec) -> String {
    let p = match norm.exponent() {
        Exponent::Infinity => "inf".to_string(),
        Exponent::Finite(p) => p.to_string(),
    };
    match norm.kind() {
        NormKind::Lp { .. } => format!("lp{p}"),
        NormKind::WeightedLp { .. } => format!("weighted_lp{p}"),
    }
}

pub fn sample_points(
    spec: &PointSample,
    set: &FeasibleSet,
    norm: &NormSpec,
    seed: u64,
) -> Result<Vec<Vec<f64>>, CliError> {
    let seed = seed.wrapping_add(spec.seed_offset);
    let resolution = if spec.scheme == SampleScheme::Grid { spec.resolution } else { 1 };
    let domain = SampleDomain::new(set, norm, spec.radius, resolution)?;
    let points = match spec.scheme {
        SampleScheme::Halton => domain.halton_points(spec.count, seed)?,
        SampleScheme::Random => domain.random_points(spec.count, seed)?,
        SampleScheme::Grid => domain.grid_points()?,
        SampleScheme::Sphere => domain.sphere_points(spec.count, seed),
    };
    if points.is_empty() {
        return Err(Error::EmptyDomain("sample set is empty".into()).into());
    }
    Ok(points)
}

fn functional(config: &ExperimentConfig) -> Result<TiltedFunctional, CliError> {
    let map = config.map.clone().expect("validated: map present");
    Ok(TiltedFunctional::new(config.space.clone(), config.set.clone(), map)?)
}

fn growth(config: &ExperimentConfig, f: &TiltedFunctional) -> Result<tiltlab_core::GrowthEstimate, CliError> {
    Ok(growth_coefficient(
        f.map(),
        f.norm(),
        f.set(),
        &config.growth.radii,
        config.growth.directions_per_radius,
        config.seed,
    )?)
}

fn certify(config: &ExperimentConfig) -> Result<Finished, CliError> {
    let f = functional(config)?;
    let g = growth(config, &f)?;
    let ys = sample_points(&config.sampling.y, f.set(), f.norm(), config.seed)?;
    let rep = certify_uniqueness(&f, &ys, &g, &config.optimizer, &config.certify)?;
    let n = f.dimension();
    let mut header = vec!["y_index".to_string()];
    header.extend(coords("y", n));
    header.push("cluster".into());
    header.extend(coords("x", n));
    header.extend(["value".into(), "radius".into(), "entry_verdict".into()]);
    let mut table = Table::new("minimizers.csv", header);
    for (i, e) in rep.entries.iter().enumerate() {
        for (k, c) in e.result.clusters.iter().enumerate() {
            let mut row = vec![Cell::Int(i as u64)];
            row.extend(nums(&e.y));
            row.push(Cell::Int(k as u64));
            row.extend(nums(&c.point));
            row.push(Cell::Num(c.value));
            row.push(Cell::Num(e.radius));
            row.push(Cell::Text(to_value(&e.verdict).as_str().unwrap_or_default().to_string()));
            table.push(row);
        }
    }
    let multiple = rep.verdict == UniquenessVerdict::MultipleFound;
    Ok(Finished {
        status: if multiple { "MULTIPLE_FOUND" } else { "OK" },
        exit_code: if multiple { EXIT_FINDING } else { EXIT_OK },
        result: to_value(&rep),
        tables: vec![table],
    })
}

fn fixed_point(config: &ExperimentConfig) -> Result<Finished, CliError> {
    let f = functional(config)?;
    let g = growth(config, &f)?;
    let rep = find_fixed_point(&f, &g, &config.optimizer, &config.fixed_point, config.seed)?;
    let oracle = analytic_fixed_point(f.map())?;
    let oracle_distance = oracle.point().map(|p| f.norm().distance(p, &rep.x_star));
    let n = f.dimension();
    let mut header = coords("x", n);
    header.extend(["tilt_at_star".into(), "displacement_gap".into()]);
    let mut table = Table::new("comparison_samples.csv", header);
    for s in &rep.samples {
        let mut row: Vec<Cell> = nums(&s.x).collect();
        row.push(Cell::Num(s.tilt_at_star));
        row.push(Cell::Num(s.displacement_gap));
        table.push(row);
    }
    let mut result = to_value(&rep);
    result["oracle"] = to_value(&oracle);
    result["oracle_distance"] = to_value(&oracle_distance);
    Ok(Finished { status: "OK", exit_code: EXIT_OK, result, tables: vec![table] })
}

fn minimax(config: &ExperimentConfig) -> Result<Finished, CliError> {
    let j = GenericBifunctional::from_tilted(functional(config)?);
    let m = &config.minimax;
    let gap = minimax_gap(&j, m.radius, m.resolution, &m.options)?;
    let n = config.dimension();
    let mut header = coords("p", n);
    header.extend(["upper_envelope".into(), "lower_envelope".into()]);
    let mut table = Table::new("envelopes.csv", header);
    for (p, u, l) in &gap.envelopes {
        let mut row: Vec<Cell> = nums(p).collect();
        row.push(Cell::Num(*u));
        row.push(Cell::Num(*l));
        table.push(row);
    }
    Ok(Finished { status: "OK", exit_code: EXIT_OK, result: to_value(&gap), tables: vec![table] })
}

fn saddle(config: &ExperimentConfig) -> Result<Finished, CliError> {
    let f = functional(config)?;
    let oracle = analytic_fixed_point(f.map())?;
    let (x_star, source) = match (&config.saddle.x_star, oracle.point()) {
        (Some(x), _) => (x.clone(), "CONFIG"),
        (None, Some(x)) => (x.to_vec(), "ANALYTIC"),
        (None, None) => {
            let g = growth(config, &f)?;
            let located = find_fixed_point(&f, &g, &config.optimizer, &config.fixed_point, config.seed)?;
            (located.x_star, "LOCATED")
        }
    };
    let ys = sample_points(&config.sampling.y, f.set(), f.norm(), config.seed)?;
    let xs = sample_points(&config.sampling.x, f.set(), f.norm(), config.seed)?;
    let n = f.dimension();
    let j = GenericBifunctional::from_tilted(f);
    let check = verify_saddle(&j, &x_star, &ys, &xs, config.saddle.tol, config.saddle.separation)?;
    let mut header = vec!["role".to_string()];
    header.extend(coords("p", n));
    header.push("value".into());
    let mut table = Table::new("saddle_values.csv", header);
    for (role, points) in [("y", &ys), ("x", &xs)] {
        for p in points.iter() {
            let v = if role == "y" { j.eval(&x_star, p)? } else { j.eval(p, &x_star)? };
            let mut row = vec![Cell::Text(role.into())];
            row.extend(nums(p));
            row.push(Cell::Num(v));
            table.push(row);
        }
    }
    let mut result = to_value(&check);
    result["passed"] = Value::Bool(check.passed());
    result["x_star"] = to_value(&x_star);
    result["x_star_source"] = Value::String(source.into());
    Ok(Finished { status: "OK", exit_code: EXIT_OK, result, tables: vec![table] })
}

fn sweep(config: &ExperimentConfig) -> Result<Finished, CliError> {
    let family = config.family.as_ref().expect("validated: family present");
    let norms = config.sweep_norms();
    let rep = search_counterexample(family, &norms, &config.set, &config.sweep, &config.optimizer)?;
    let names: Vec<String> = family
        .instances()?
        .first()
        .map(|(params, _)| params.iter().map(|p| p.name.clone()).collect())
        .unwrap_or_default();

    let mut header = vec!["cell".to_string()];
    header.extend(names.iter().cloned());
    header.extend(["norm", "status", "kappa_hat", "max_clusters"].map(String::from));
    let mut cells = Table::new("cells.csv", header);
    for c in &rep.cells {
        let mut row = vec![Cell::Int(c.cell as u64)];
        row.extend(c.params.iter().map(|p| Cell::Num(p.value)));
        row.push(Cell::Text(norm_label(&c.norm)));
        row.push(Cell::Text(
            match c.status {
                CellStatus::Evaluated => "EVALUATED",
                CellStatus::SkippedGrowth => "SKIPPED_GROWTH",
                CellStatus::SkippedRange => "SKIPPED_RANGE",
            }
            .into(),
        ));
        row.push(Cell::Num(c.kappa_hat));
        row.push(Cell::Int(c.max_clusters as u64));
        cells.push(row);
    }

    let n = config.dimension();
    let mut header = vec!["rank".to_string(), "cell".into(), "y_index".into()];
    header.extend(coords("y", n));
    header.extend(["clusters", "separation", "value_gap", "score", "planted"].map(String::from));
    let mut cands = Table::new("candidates.csv", header);
    for (rank, c) in rep.candidates.iter().enumerate() {
        let mut row = vec![Cell::Int(rank as u64), Cell::Int(c.cell as u64), Cell::Int(c.y_index as u64)];
        row.extend(nums(&c.y));
        row.push(Cell::Int(c.clusters.len() as u64));
        row.push(Cell::Num(c.separation));
        row.push(Cell::Num(c.value_gap));
        row.push(Cell::Num(c.score));
        row.push(Cell::Text(c.planted.to_string()));
        cands.push(row);
    }
    let found = !rep.candidates.is_empty();
    Ok(Finished {
        status: if found { "MULTIPLE_FOUND" } else { "OK" },
        exit_code: if found { EXIT_FINDING } else { EXIT_OK },
        result: to_value(&rep),
        tables: vec![cells, cands],
    })
}

fn error_payload(err: &CliError) -> Value {
    let (kind, details) = match err {
        CliError::Experiment(e) => match e {
            Error::DimensionMismatch { .. } => ("DIMENSION_MISMATCH", Value::Null),
            Error::InvalidInput(_) => ("INVALID_INPUT", Value::Null),
            Error::Infeasible { violation } => ("INFEASIBLE", json!({ "violation": violation })),
            Error::RangeViolation { violation, image } => {
                ("RANGE_VIOLATION", json!({ "violation": violation, "image": image }))
            }
            Error::NonConvergence { iterations, residual, last_iterate } => (
                "NON_CONVERGENCE",
                json!({ "iterations": iterations, "residual": residual, "last_iterate": last_iterate }),
            ),
            Error::Precondition(_) => ("PRECONDITION", Value::Null),
            Error::EmptyDomain(_) => ("EMPTY_DOMAIN", Value::Null),
            Error::GrowthBoundUnmet { kappa } => ("GROWTH_BOUND_UNMET", json!({ "kappa_hat": kappa })),
            Error::FixedPointNotLocated(report) => ("FIXED_POINT_NOT_LOCATED", to_value(report)),
        },
        CliError::Invalid { field, .. } => ("INVALID_CONFIG", json!({ "field": field })),
        CliError::Parse { .. } | CliError::Override(_) => ("PARSE", Value::Null),
        CliError::Io { .. } => ("IO", Value::Null),
    };
    json!({ "kind": kind, "message": err.to_string(), "details": details })
}

/// Runs the configured experiment. Experiment errors are folded into a
/// partial report with exit code 1.
pub fn execute(config: &ExperimentConfig) -> RunOutcome {
    let outcome = match config.experiment {
        ExperimentKind::CertifyUniqueness => certify(config),
        ExperimentKind::FindFixedPoint => fixed_point(config),
        ExperimentKind::MinimaxGap => minimax(config),
        ExperimentKind::SearchCounterexample => sweep(config),
        ExperimentKind::VerifySaddle => saddle(config),
    };
    let (status, exit_code, result, error, tables) = match outcome {
        Ok(f) => (f.status, f.exit_code, f.result, Value::Null, f.tables),
        Err(e) => ("ERROR", EXIT_ERROR, Value::Null, error_payload(&e), Vec::new()),
    };
    let report = json!({
        "tool": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        "experiment": config.experiment,
        "status": status,
        "exit_code": exit_code,
        "config": to_value(config),
        "result": result,
        "error": error,
        "tables": tables.iter().map(|t| t.name.clone()).collect::<Vec<_>>(),
        "provenance": {
            "seed": config.seed,
            "norm": norm_label(&config.space),
            "float_format": "17 significant digits",
        },
    });
    RunOutcome { exit_code, status, report, tables }
}

/// Writes the report and tables under `dir`; returns the report path.
pub fn write_outcome(outcome: &RunOutcome, dir: &Path, report_name: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Io { path: dir.display().to_string(), message: e.to_string() })?;
    let path = dir.join(report_name);
    std::fs::write(&path, to_json_string(&outcome.report)?)
        .map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })?;
    for t in &outcome.tables {
        t.write(dir)?;
    }
    Ok(path)
}
