//! Experiment configuration: a single JSON document, round-trippable so a
//! run can be reproduced from its metadata sidecar.

use amwu::algorithms::{AlgorithmSpec, AmwuMode};
use amwu::geometry::{ProductPoint, SimplexPoint};
use amwu::objectives;
use amwu::schedule::{admissible_step_bound, ScheduleParams};
use serde::{Deserialize, Serialize};

/// Which optimizer to run, as named on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AlgoChoice {
    Mwu,
    AmwuLiteral,
    AmwuRagd,
    /// Accelerated mirror descent; `r` of `None` takes the config default.
    Amd { r: Option<f64> },
}

impl AlgoChoice {
    pub fn parse(s: &str) -> Result<Self, String> {
        let s = s.trim();
        match s {
            "mwu" => Ok(AlgoChoice::Mwu),
            "amwu_literal" => Ok(AlgoChoice::AmwuLiteral),
            "amwu_ragd" => Ok(AlgoChoice::AmwuRagd),
            "amwu" => Err("write amwu_ragd or amwu_literal (or pass --mode to resolve amwu)".into()),
            "amd" => Ok(AlgoChoice::Amd { r: None }),
            _ => {
                // amd(r=N)
                if let Some(inner) = s.strip_prefix("amd(").and_then(|t| t.strip_suffix(')')) {
                    let value = inner
                        .strip_prefix("r=")
                        .ok_or_else(|| format!("expected amd(r=N), got {s}"))?;
                    let r: f64 = value
                        .parse()
                        .map_err(|_| format!("bad r value in {s}"))?;
                    return Ok(AlgoChoice::Amd { r: Some(r) });
                }
                Err(format!(
                    "unknown algorithm {s}; expected mwu | amwu_literal | amwu_ragd | amd | amd(r=N)"
                ))
            }
        }
    }

    /// File-name friendly label.
    pub fn label(&self) -> String {
        match self {
            AlgoChoice::Mwu => "mwu".into(),
            AlgoChoice::AmwuLiteral => "amwu_literal".into(),
            AlgoChoice::AmwuRagd => "amwu_ragd".into(),
            AlgoChoice::Amd { r: None } => "amd".into(),
            AlgoChoice::Amd { r: Some(r) } => format!("amd_r{r}"),
        }
    }
}

impl TryFrom<String> for AlgoChoice {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        AlgoChoice::parse(&s)
    }
}

impl From<AlgoChoice> for String {
    fn from(a: AlgoChoice) -> String {
        match a {
            AlgoChoice::Amd { r: Some(r) } => format!("amd(r={r})"),
            AlgoChoice::Amd { r: None } => "amd".into(),
            AlgoChoice::Mwu => "mwu".into(),
            AlgoChoice::AmwuLiteral => "amwu_literal".into(),
            AlgoChoice::AmwuRagd => "amwu_ragd".into(),
        }
    }
}

fn default_r() -> f64 {
    3.0
}
fn default_trace_every() -> usize {
    1
}
fn default_trials() -> usize {
    500
}
fn default_radius() -> f64 {
    0.05
}
fn default_classify_radius() -> f64 {
    1e-3
}
fn default_threads() -> usize {
    1
}
fn default_mode() -> String {
    "ragd".into()
}

/// One experiment, fully resolved. Serialized into every metadata sidecar.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Corpus objective name.
    pub objective: String,
    pub algorithms: Vec<AlgoChoice>,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    /// Default averaging parameter for `amd` entries without an explicit r.
    #[serde(default = "default_r")]
    pub r: f64,
    /// Initial point, one weight vector per block.
    pub x0: Vec<Vec<f64>>,
    /// Optional momentum seed; defaults to `x0`.
    #[serde(default)]
    pub v0: Option<Vec<Vec<f64>>>,
    pub max_iters: usize,
    #[serde(default)]
    pub grad_tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trace_every")]
    pub trace_every: usize,
    /// Accelerated-update arithmetic: "ragd" or "literal".
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_classify_radius")]
    pub classify_radius: f64,
    #[serde(default = "default_threads")]
    pub threads: usize,
}

impl ExperimentConfig {
    pub fn objective(&self) -> Result<amwu::objectives::Objective, String> {
        objectives::by_name(&self.objective)
            .ok_or_else(|| format!("unknown objective {:?}", self.objective))
    }

    pub fn mode(&self) -> Result<AmwuMode, String> {
        match self.mode.as_str() {
            "ragd" => Ok(AmwuMode::Ragd),
            "literal" => Ok(AmwuMode::Literal),
            other => Err(format!("unknown mode {other:?}; expected ragd | literal")),
        }
    }

    pub fn schedule_params(&self) -> Result<ScheduleParams, String> {
        ScheduleParams::new(self.alpha, self.beta, self.mu).map_err(|e| e.to_string())
    }

    pub fn initial_point(&self) -> Result<ProductPoint, String> {
        point_from_blocks(&self.x0)
    }

    pub fn momentum_point(&self) -> Result<Option<ProductPoint>, String> {
        self.v0.as_ref().map(|b| point_from_blocks(b)).transpose()
    }

    pub fn algorithm_spec(&self, choice: &AlgoChoice) -> Result<AlgorithmSpec, String> {
        Ok(match choice {
            AlgoChoice::Mwu => AlgorithmSpec::Mwu { alpha: self.alpha },
            AlgoChoice::AmwuRagd => AlgorithmSpec::Amwu {
                params: self.schedule_params()?,
                mode: AmwuMode::Ragd,
            },
            AlgoChoice::AmwuLiteral => AlgorithmSpec::Amwu {
                params: self.schedule_params()?,
                mode: AmwuMode::Literal,
            },
            AlgoChoice::Amd { r } => AlgorithmSpec::Amd {
                r: r.unwrap_or(self.r),
                step: self.alpha,
            },
        })
    }

    /// Validates shape and references; returns human-readable warnings for
    /// conditions the runs tolerate (admissibility violations, small r).
    pub fn validate(&self) -> Result<Vec<String>, String> {
        let obj = self.objective()?;
        let x0 = self.initial_point()?;
        if x0.block_dims() != obj.block_dims() {
            return Err(format!(
                "x0 shape {:?} does not match objective {:?} with dims {:?}",
                x0.block_dims(),
                self.objective,
                obj.block_dims()
            ));
        }
        if let Some(v0) = self.momentum_point()? {
            if v0.block_dims() != obj.block_dims() {
                return Err("v0 shape does not match objective".into());
            }
        }
        if self.algorithms.is_empty() {
            return Err("no algorithms requested".into());
        }
        self.mode()?;
        self.schedule_params()?;

        let mut warnings = Vec::new();
        let bound = admissible_step_bound(self.beta, self.mu, f64::INFINITY);
        if bound.mu_warning {
            warnings.push(format!(
                "mu = {} is not below 1; the admissible step bound was derived for mu < 1",
                self.mu
            ));
        }
        if self.alpha >= bound.value {
            warnings.push(format!(
                "alpha = {} exceeds the admissible step bound {:.6}",
                self.alpha, bound.value
            ));
        }
        for a in &self.algorithms {
            if let AlgoChoice::Amd { r } = a {
                let r = r.unwrap_or(self.r);
                if r < 3.0 {
                    warnings.push(format!(
                        "amd r = {r} is below 3, the usual lower bound for the averaging scheme"
                    ));
                }
            }
        }
        Ok(warnings)
    }
}

pub fn point_from_blocks(blocks: &[Vec<f64>]) -> Result<ProductPoint, String> {
    let parsed = blocks
        .iter()
        .map(|w| SimplexPoint::normalized(w.clone()).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, String>>()?;
    ProductPoint::new(parsed).map_err(|e| e.to_string())
}
