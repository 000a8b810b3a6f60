//! Built-in experiment presets: the five benchmark setups with their
//! published parameters and iteration budgets sized so every curve flattens.

use crate::config::{AlgoChoice, ExperimentConfig};

pub const PRESET_NAMES: [&str; 5] = ["rosenbrock", "bohachevsky", "trig1", "trig2", "two_agent"];

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let standard_algos = vec![
        AlgoChoice::AmwuRagd,
        AlgoChoice::Mwu,
        AlgoChoice::Amd { r: Some(3.0) },
    ];
    let base = |objective: &str,
                alpha: f64,
                beta: f64,
                mu: f64,
                x0: Vec<Vec<f64>>,
                max_iters: usize| ExperimentConfig {
        objective: objective.into(),
        algorithms: standard_algos.clone(),
        alpha,
        beta,
        mu,
        r: 3.0,
        x0,
        v0: None,
        max_iters,
        grad_tol: 0.0,
        seed: 42,
        trace_every: 1,
        mode: "ragd".into(),
        trials: 500,
        radius: 0.05,
        classify_radius: 1e-3,
        threads: 1,
    };
    match name {
        "rosenbrock" => Some(base(
            "rosenbrock",
            0.01,
            0.001,
            1.0,
            vec![vec![0.2, 0.4, 0.4]],
            2000,
        )),
        "bohachevsky" => Some(base(
            "bohachevsky",
            0.001,
            0.1,
            1.0,
            vec![vec![0.35, 0.3, 0.35]],
            5000,
        )),
        // the published initial point sums to 0.99; it is normalized on load
        "trig1" => Some(base(
            "trig1",
            0.005,
            0.1,
            0.2,
            vec![vec![0.42, 0.24, 0.33]],
            2000,
        )),
        // step size 0.01 from the figure caption; the prose says 0.05
        "trig2" => Some(base(
            "trig2",
            0.01,
            0.001,
            0.001,
            vec![vec![0.6, 0.2, 0.2]],
            2000,
        )),
        "two_agent" => {
            let mut cfg = base(
                "two_agent",
                0.001,
                0.1,
                0.5,
                vec![vec![0.6, 0.4], vec![0.4, 0.6]],
                5000,
            );
            cfg.algorithms = vec![AlgoChoice::AmwuRagd, AlgoChoice::Mwu];
            Some(cfg)
        }
        _ => None,
    }
}

/// One-line description per preset for the `presets` subcommand.
pub fn describe(name: &str) -> Option<String> {
    let cfg = preset(name)?;
    Some(format!(
        "{:<12} alpha={:<7} beta={:<7} mu={:<7} iters={:<6} x0={:?}",
        name, cfg.alpha, cfg.beta, cfg.mu, cfg.max_iters, cfg.x0
    ))
}
