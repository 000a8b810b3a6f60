//! The `run` and `compare` entry points: execute each requested algorithm
//! from the shared initial point, write CSV traces, the metadata sidecar,
//! and optional SVG figures.

use std::fs;
use std::path::Path;

use amwu::algorithms::{run, RunConfig, TraceRecord};

use crate::config::ExperimentConfig;
use crate::output::{self, Sidecar};
use crate::svg;

pub struct RunOutcome {
    /// `(algorithm label, trace)` in request order.
    pub traces: Vec<(String, Vec<TraceRecord>)>,
    pub warnings: Vec<String>,
    /// Paths written, relative to the output directory.
    pub files: Vec<String>,
}

/// Executes every algorithm in the config and writes one CSV per algorithm
/// plus a JSON sidecar; with `emit_svg`, also a convergence chart and a
/// trajectory figure when the shape supports one.
pub fn cli_run(config: &ExperimentConfig, out_dir: &Path, emit_svg: bool) -> Result<RunOutcome, String> {
    let warnings = config.validate()?;
    let obj = config.objective()?;
    let x0 = config.initial_point()?;
    let v0 = config.momentum_point()?;
    let run_cfg = RunConfig::new(config.max_iters, config.grad_tol, config.trace_every);

    output::ensure_dir(out_dir).map_err(|e| format!("cannot create {out_dir:?}: {e}"))?;
    let mut sidecar = Sidecar::new(config);
    let mut traces = Vec::new();
    let mut files = Vec::new();

    for choice in &config.algorithms {
        let spec = config.algorithm_spec(choice)?;
        let label = choice.label();
        let trace = run(&spec, &obj, &x0, v0.as_ref(), &run_cfg)
            .map_err(|e| format!("{label}: {e}"))?;

        let csv = output::trace_csv(config, &obj.block_dims().to_vec(), &trace);
        let csv_name = format!("{}_{}.csv", config.objective, label);
        fs::write(out_dir.join(&csv_name), csv).map_err(|e| e.to_string())?;
        files.push(csv_name);

        let rows = output::schedule_rows(&trace);
        if !rows.is_empty() {
            sidecar.schedule_trace.insert(label.clone(), rows);
        }
        traces.push((label, trace));
    }

    if emit_svg {
        let curves: Vec<(String, Vec<(f64, f64)>)> = traces
            .iter()
            .map(|(label, t)| {
                (
                    label.clone(),
                    t.iter().map(|r| (r.t as f64, r.f_value)).collect(),
                )
            })
            .collect();
        let chart = svg::convergence_chart(&curves, &format!("{} convergence", config.objective));
        let name = format!("{}_convergence.svg", config.objective);
        fs::write(out_dir.join(&name), chart).map_err(|e| e.to_string())?;
        files.push(name);

        if let Some(fig) = svg::trajectory_chart(
            &traces,
            &obj.block_dims().to_vec(),
            &format!("{} trajectories", config.objective),
        ) {
            let name = format!("{}_trajectories.svg", config.objective);
            fs::write(out_dir.join(&name), fig).map_err(|e| e.to_string())?;
            files.push(name);
        }
    }

    sidecar.outputs = files.clone();
    let sidecar_name = format!("{}_run.json", config.objective);
    sidecar
        .write(&out_dir.join(&sidecar_name))
        .map_err(|e| e.to_string())?;
    files.push(sidecar_name);

    Ok(RunOutcome {
        traces,
        warnings,
        files,
    })
}

/// One row of the comparison table.
#[derive(Debug, Clone)]
pub struct CompareRow {
    pub algorithm: String,
    pub final_f: f64,
    /// First iteration at which f dips to the common threshold (the worst
    /// final value across algorithms); None if never.
    pub iters_to_threshold: Option<usize>,
    /// Mean squared successive f-difference; lower is smoother.
    pub smoothness: f64,
}

pub struct CompareOutcome {
    pub rows: Vec<CompareRow>,
    pub threshold: f64,
    pub warnings: Vec<String>,
}

/// Runs all requested algorithms from the same initial point and tabulates
/// final values, time-to-threshold, and curve smoothness.
pub fn cli_compare(config: &ExperimentConfig, out_dir: &Path) -> Result<CompareOutcome, String> {
    let outcome = cli_run(config, out_dir, false)?;
    let finals: Vec<f64> = outcome
        .traces
        .iter()
        .map(|(_, t)| t.last().expect("trace nonempty").f_value)
        .collect();
    let threshold = finals.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let rows = outcome
        .traces
        .iter()
        .zip(&finals)
        .map(|((label, trace), &final_f)| {
            let iters_to_threshold = trace
                .iter()
                .find(|r| r.f_value <= threshold)
                .map(|r| r.t);
            let fs: Vec<f64> = trace.iter().map(|r| r.f_value).collect();
            let smoothness = if fs.len() > 1 {
                fs.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / (fs.len() - 1) as f64
            } else {
                0.0
            };
            CompareRow {
                algorithm: label.clone(),
                final_f,
                iters_to_threshold,
                smoothness,
            }
        })
        .collect();

    Ok(CompareOutcome {
        rows,
        threshold,
        warnings: outcome.warnings,
    })
}

pub fn render_compare_table(outcome: &CompareOutcome) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14} {:>16} {:>12} {:>14}\n",
        "algorithm", "final_f", "t<=thresh", "smoothness"
    ));
    for row in &outcome.rows {
        let reach = row
            .iters_to_threshold
            .map(|t| t.to_string())
            .unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{:<14} {:>16.9} {:>12} {:>14.3e}\n",
            row.algorithm, row.final_f, reach, row.smoothness
        ));
    }
    out.push_str(&format!("threshold (worst final f): {:.9}\n", outcome.threshold));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::preset;

    #[test]
    fn rosenbrock_preset_writes_three_csvs() {
        let mut cfg = preset("rosenbrock").unwrap();
        cfg.max_iters = 50;
        let dir = tempfile::tempdir().unwrap();
        let outcome = cli_run(&cfg, dir.path(), false).unwrap();
        let csvs: Vec<&String> = outcome.files.iter().filter(|f| f.ends_with(".csv")).collect();
        assert_eq!(csvs.len(), 3);
        for f in csvs {
            let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
            let mut lines = text.lines();
            assert!(lines.next().unwrap().starts_with("# amwu sha256="));
            assert_eq!(lines.next().unwrap(), "t,f,grad_norm,x0_0,x0_1,x0_2");
            // 50 iterations at trace_every=1 plus the initial record
            assert_eq!(lines.count(), 51);
        }
    }

    #[test]
    fn two_agent_preset_has_four_coordinate_columns() {
        let mut cfg = preset("two_agent").unwrap();
        cfg.max_iters = 5;
        let dir = tempfile::tempdir().unwrap();
        cli_run(&cfg, dir.path(), false).unwrap();
        let text =
            std::fs::read_to_string(dir.path().join("two_agent_amwu_ragd.csv")).unwrap();
        let header = text.lines().nth(1).unwrap();
        assert_eq!(header, "t,f,grad_norm,x0_0,x0_1,x1_0,x1_1");
    }

    #[test]
    fn rerun_from_sidecar_is_byte_identical() {
        let mut cfg = preset("trig1").unwrap();
        cfg.max_iters = 30;
        let dir1 = tempfile::tempdir().unwrap();
        cli_run(&cfg, dir1.path(), false).unwrap();
        let loaded = crate::output::load_config(&dir1.path().join("trig1_run.json")).unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        cli_run(&loaded, dir2.path(), false).unwrap();
        for name in ["trig1_amwu_ragd.csv", "trig1_mwu.csv", "trig1_run.json"] {
            let a = std::fs::read(dir1.path().join(name)).unwrap();
            let b = std::fs::read(dir2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs across reruns");
        }
    }

    #[test]
    fn svg_outputs_written_when_requested() {
        let mut cfg = preset("rosenbrock").unwrap();
        cfg.max_iters = 20;
        let dir = tempfile::tempdir().unwrap();
        let outcome = cli_run(&cfg, dir.path(), true).unwrap();
        assert!(outcome.files.iter().any(|f| f == "rosenbrock_convergence.svg"));
        assert!(outcome.files.iter().any(|f| f == "rosenbrock_trajectories.svg"));
    }

    #[test]
    fn compare_emits_one_row_per_algorithm() {
        let mut cfg = preset("rosenbrock").unwrap();
        cfg.max_iters = 100;
        let dir = tempfile::tempdir().unwrap();
        let outcome = cli_compare(&cfg, dir.path()).unwrap();
        assert_eq!(outcome.rows.len(), 3);
        // every algorithm reaches the worst final value by construction
        assert!(outcome.rows.iter().any(|r| r.iters_to_threshold.is_some()));
        let table = render_compare_table(&outcome);
        assert!(table.contains("amwu_ragd"));
    }
}
