//! Monte-Carlo saddle-avoidance study: seed trials in a small metric ball
//! around each catalogued strict saddle, run the accelerated update, and
//! classify where each trial lands.

use amwu::algorithms::{multi_agent_amwu_step, AmwuMode, OptimizerState};
use amwu::geometry::{product_exp, ProductPoint, ProductTangent, TangentVector};
use amwu::objectives::{
    find_critical_points, simplex_grid_seeds, Classification, CriticalPointEntry, Objective,
};
use amwu::schedule::ScheduleParams;
use amwu::spectral::product_tangent_basis;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::config::ExperimentConfig;

/// Where one trial ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrialOutcome {
    ConvergedToSaddle,
    ConvergedToMin,
    Nonconverged,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    /// Index of the saddle the trial was seeded near.
    pub saddle_index: usize,
    pub outcome: TrialOutcome,
    pub final_point: Vec<f64>,
    pub final_grad_norm: f64,
    /// Distance to the nearest catalogued critical point.
    pub nearest_distance: f64,
    /// Smallest tangent Hessian eigenvalue of that nearest point.
    pub nearest_lambda_min: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AvoidanceReport {
    pub trials: usize,
    pub converged_to_saddle: usize,
    pub converged_to_min: usize,
    pub nonconverged: usize,
    pub records: Vec<TrialRecord>,
}

impl AvoidanceReport {
    fn from_records(records: Vec<TrialRecord>) -> Self {
        let mut report = Self {
            trials: records.len(),
            converged_to_saddle: 0,
            converged_to_min: 0,
            nonconverged: 0,
            records,
        };
        for r in &report.records {
            match r.outcome {
                TrialOutcome::ConvergedToSaddle => report.converged_to_saddle += 1,
                TrialOutcome::ConvergedToMin => report.converged_to_min += 1,
                TrialOutcome::Nonconverged => report.nonconverged += 1,
            }
        }
        report
    }
}

/// Uniform draw from the metric ball of `radius` around `center`, through
/// the orthonormal tangent chart with rejection to the stated radius.
fn sample_near(
    center: &ProductPoint,
    radius: f64,
    rng: &mut ChaCha8Rng,
) -> ProductPoint {
    let basis = product_tangent_basis(center);
    let m = basis.ncols();
    let dims = center.block_dims();
    loop {
        // uniform in the m-ball of radius 1.2 * radius, then reject on the
        // actual geodesic distance
        let mut w: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm: f64 = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = 1.2 * radius * rng.gen::<f64>().powf(1.0 / m as f64) / norm.max(1e-300);
        w.iter_mut().for_each(|v| *v *= scale);

        let ambient = &basis * nalgebra_vector(&w);
        let mut blocks = Vec::with_capacity(dims.len());
        let mut offset = 0;
        for &d in &dims {
            blocks.push(TangentVector::from_centered(
                &ambient.as_slice()[offset..offset + d],
            ));
            offset += d;
        }
        let Ok(candidate) = product_exp(center, &ProductTangent::new(blocks)) else {
            continue;
        };
        if candidate.fisher_rao_distance(center) <= radius {
            return candidate;
        }
    }
}

fn nalgebra_vector(v: &[f64]) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_column_slice(v)
}

fn classify_endpoint(
    endpoint: &ProductPoint,
    catalog: &[CriticalPointEntry],
    classify_radius: f64,
) -> (TrialOutcome, f64, f64) {
    let (mut best_dist, mut best_idx) = (f64::INFINITY, 0);
    for (i, entry) in catalog.iter().enumerate() {
        let d = endpoint.euclidean_distance(&entry.point);
        if d < best_dist {
            best_dist = d;
            best_idx = i;
        }
    }
    let nearest = &catalog[best_idx];
    let outcome = if best_dist <= classify_radius {
        match nearest.classification {
            // a local max is also an unstable critical point: landing there
            // counts against avoidance
            Classification::StrictSaddle | Classification::Max => TrialOutcome::ConvergedToSaddle,
            Classification::Min => TrialOutcome::ConvergedToMin,
            Classification::Degenerate => TrialOutcome::Nonconverged,
        }
    } else {
        TrialOutcome::Nonconverged
    };
    (outcome, best_dist, nearest.lambda_min())
}

fn run_trial(
    trial: usize,
    obj: &Objective,
    catalog: &[CriticalPointEntry],
    saddle_indices: &[usize],
    params: ScheduleParams,
    mode: AmwuMode,
    config: &ExperimentConfig,
) -> Result<TrialRecord, String> {
    // independent per-trial stream derived from the seed and trial index
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(trial as u64 + 1);

    let saddle_index = saddle_indices[trial % saddle_indices.len()];
    let start = sample_near(&catalog[saddle_index].point, config.radius, &mut rng);

    let shared = vec![params; start.num_blocks()];
    let mut state =
        OptimizerState::init(start, None, &shared).map_err(|e| e.to_string())?;
    for t in 0..config.max_iters {
        state = multi_agent_amwu_step(&state, obj, &shared, mode)
            .map_err(|e| format!("trial {trial}, iteration {t}: {e}"))?;
    }
    let final_grad_norm = obj.riemannian_grad_norm(&state.x).map_err(|e| e.to_string())?;
    let (outcome, nearest_distance, nearest_lambda_min) =
        classify_endpoint(&state.x, catalog, config.classify_radius);
    Ok(TrialRecord {
        trial,
        saddle_index,
        outcome,
        final_point: state.x.flatten(),
        final_grad_norm,
        nearest_distance,
        nearest_lambda_min,
    })
}

/// Catalogs the objective's critical points and runs the avoidance study.
/// Errors if no strict saddle is found.
pub fn cli_avoidance(config: &ExperimentConfig) -> Result<AvoidanceReport, String> {
    let obj = config.objective()?;
    let params = config.schedule_params()?;
    let mode = config.mode()?;

    let seeds = simplex_grid_seeds(obj.block_dims(), grid_per_axis(obj.block_dims()));
    let catalog = find_critical_points(&obj, &seeds, 1e-12)
        .map_err(|e| e.to_string())?
        .entries;
    let saddle_indices: Vec<usize> = catalog
        .iter()
        .enumerate()
        .filter(|(_, e)| e.classification == Classification::StrictSaddle)
        .map(|(i, _)| i)
        .collect();
    if saddle_indices.is_empty() {
        return Err(format!(
            "no strict saddle found for objective {:?}",
            config.objective
        ));
    }
    if config.trials == 0 {
        return Ok(AvoidanceReport::from_records(Vec::new()));
    }

    let threads = config.threads.max(1).min(config.trials);
    let mut records: Vec<Option<TrialRecord>> = vec![None; config.trials];
    if threads == 1 {
        for (trial, slot) in records.iter_mut().enumerate() {
            *slot = Some(run_trial(
                trial,
                &obj,
                &catalog,
                &saddle_indices,
                params,
                mode,
                config,
            )?);
        }
    } else {
        let chunks: Vec<Vec<usize>> = (0..threads)
            .map(|k| (k..config.trials).step_by(threads).collect())
            .collect();
        let results = std::thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .iter()
                .map(|chunk| {
                    let obj = &obj;
                    let catalog = &catalog;
                    let saddle_indices = &saddle_indices;
                    scope.spawn(move || {
                        chunk
                            .iter()
                            .map(|&trial| {
                                run_trial(
                                    trial,
                                    obj,
                                    catalog,
                                    saddle_indices,
                                    params,
                                    mode,
                                    config,
                                )
                                .map(|r| (trial, r))
                            })
                            .collect::<Result<Vec<_>, String>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("trial thread panicked"))
                .collect::<Result<Vec<_>, String>>()
        })?;
        for chunk in results {
            for (trial, record) in chunk {
                records[trial] = Some(record);
            }
        }
    }
    Ok(AvoidanceReport::from_records(
        records.into_iter().map(|r| r.expect("all trials ran")).collect(),
    ))
}

/// Seed-grid density per free coordinate, denser for low-dimensional blocks.
pub fn grid_per_axis(block_dims: &[usize]) -> usize {
    let free: usize = block_dims.iter().map(|d| d - 1).sum();
    match free {
        1 => 48,
        2 => 22,
        _ => 8,
    }
}
