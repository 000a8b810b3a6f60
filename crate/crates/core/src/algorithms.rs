//! The optimizers: classic multiplicative weights, the accelerated update in
//! both its literal pseudocode form and the exp/log-composed form, the
//! multi-agent variant with per-agent schedules, and an entropic accelerated
//! mirror descent baseline. Each exposes a single-step function and a run
//! loop with trace recording.

use crate::error::{AmwuError, Result};
use crate::geometry::{
    exp_map, log_map, mwu_displacement, mwu_retract, ProductPoint, SimplexPoint, TangentVector,
};
use crate::objectives::Objective;
use crate::schedule::{advance, DerivedCoefficients, ScheduleParams, ScheduleState};

/// Which arithmetic the accelerated step uses.
///
/// `Ragd` composes the exponential/logarithmic maps directly; `Literal`
/// follows the pseudocode line by line (multiplicative x-update, additive
/// u-vector for the v-update). The two produce the same y, agree on x to
/// first order in the step size, and differ in the v-update's gradient
/// coefficient (`s/gamma_bar` vs. the alpha-scaled multiplicative
/// displacement).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmwuMode {
    Literal,
    Ragd,
}

/// Corrections applied to the literal pseudocode. Defaults to both fixes on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiteralOptions {
    /// Weight the x-update denominator by the current point
    /// (`1 - alpha sum_j y_j g_j`). The unweighted printed form is run
    /// without renormalization, so it fails the sum-to-one invariant at the
    /// first generic step; renormalizing it would reproduce the weighted
    /// form identically, since the two denominators are scalars.
    pub weighted_denominator: bool,
    /// Compute the log-map normalizer from the points actually being mapped
    /// rather than from the previous intermediate. The normalizer is an
    /// additive constant inside a softmax, so this cannot change the
    /// iterates; the toggle exists to run the pseudocode as printed.
    pub corrected_normalizer: bool,
}

impl Default for LiteralOptions {
    fn default() -> Self {
        Self {
            weighted_denominator: true,
            corrected_normalizer: true,
        }
    }
}

/// Iterate bundle for the accelerated update on a product of simplices.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub x: ProductPoint,
    pub v: ProductPoint,
    /// Intermediate point of the most recent step; equals `x` before the
    /// first step.
    pub y: ProductPoint,
    /// One schedule per agent.
    pub schedules: Vec<ScheduleState>,
    pub t: usize,
}

impl OptimizerState {
    /// Initial state; `v0` defaults to `x0`, making critical points exact
    /// fixed points of the update map.
    pub fn init(
        x0: ProductPoint,
        v0: Option<ProductPoint>,
        params: &[ScheduleParams],
    ) -> Result<Self> {
        if params.len() != x0.num_blocks() {
            return Err(AmwuError::ShapeMismatch {
                expected: x0.block_dims(),
                got: vec![params.len()],
            });
        }
        let v = match v0 {
            Some(v) => {
                x0.same_shape(&v)?;
                v
            }
            None => x0.clone(),
        };
        let schedules = params
            .iter()
            .map(ScheduleState::default_init)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            y: x0.clone(),
            x: x0,
            v,
            schedules,
            t: 0,
        })
    }

    /// Single-agent-style init: one parameter set shared by every block.
    pub fn init_shared(
        x0: ProductPoint,
        v0: Option<ProductPoint>,
        params: &ScheduleParams,
    ) -> Result<Self> {
        let n = x0.num_blocks();
        Self::init(x0, v0, &vec![*params; n])
    }
}

/// One multiplicative weights step on every block, using the gradient of the
/// full point.
pub fn mwu_step(x: &ProductPoint, obj: &Objective, alpha: f64) -> Result<ProductPoint> {
    obj.matches_shape(x)?;
    let grads = obj.euclidean_grad(x);
    let blocks = x
        .blocks()
        .iter()
        .zip(&grads)
        .map(|(xb, gb)| mwu_retract(xb, gb, alpha))
        .collect::<Result<Vec<_>>>()?;
    ProductPoint::new(blocks)
}

/// The y-interpolation shared by both modes:
/// `y_i = Exp_{x_i}(theta_i Log_{x_i}(v_i))` blockwise.
fn intermediate_point(
    x: &ProductPoint,
    v: &ProductPoint,
    thetas: &[f64],
) -> Result<ProductPoint> {
    let blocks = x
        .blocks()
        .iter()
        .zip(v.blocks())
        .zip(thetas)
        .map(|((xb, vb), theta)| exp_map(xb, &log_map(xb, vb)?.scale(*theta)))
        .collect::<Result<Vec<_>>>()?;
    ProductPoint::new(blocks)
}

/// One exp/log-composed accelerated step with frozen coefficients, one set
/// per agent. Returns `(y, x_next, v_next)`. The one gradient evaluation
/// happens at the joint intermediate point.
pub fn ragd_update(
    x: &ProductPoint,
    v: &ProductPoint,
    obj: &Objective,
    coeffs: &[DerivedCoefficients],
) -> Result<(ProductPoint, ProductPoint, ProductPoint)> {
    let thetas: Vec<f64> = coeffs.iter().map(|c| c.theta).collect();
    let y = intermediate_point(x, v, &thetas)?;
    let grads = obj.euclidean_grad(&y);

    let mut x_blocks = Vec::with_capacity(x.num_blocks());
    let mut v_blocks = Vec::with_capacity(x.num_blocks());
    for (((yb, vb), gb), c) in y.blocks().iter().zip(v.blocks()).zip(&grads).zip(coeffs) {
        // the gradient enters the exponential map in the chart's own
        // coordinates: centered partial derivatives
        let g_chart = TangentVector::from_centered(gb);
        x_blocks.push(exp_map(yb, &g_chart.scale(-c.alpha))?);
        let u = log_map(yb, vb)?
            .scale(c.zeta)
            .add_scaled(&g_chart, -c.s / c.gamma_bar)?;
        v_blocks.push(exp_map(yb, &u)?);
    }
    Ok((
        y,
        ProductPoint::new(x_blocks)?,
        ProductPoint::new(v_blocks)?,
    ))
}

/// One literal pseudocode step with frozen coefficients. `y_prev` feeds the
/// uncorrected normalizer variant; it is unused under the default options.
fn literal_update(
    x: &ProductPoint,
    v: &ProductPoint,
    y_prev: &ProductPoint,
    obj: &Objective,
    coeffs: &[DerivedCoefficients],
    options: LiteralOptions,
) -> Result<(ProductPoint, ProductPoint, ProductPoint)> {
    // y-update: softmax of theta * ln(S v / x). With the corrected
    // normalizer S from (x, v) this is exactly Exp_x(theta Log_x(v)); the
    // printed normalizer from (x, y_prev) only shifts the softmax argument
    // by a constant, which cancels.
    let y = if options.corrected_normalizer {
        let thetas: Vec<f64> = coeffs.iter().map(|c| c.theta).collect();
        intermediate_point(x, v, &thetas)?
    } else {
        let blocks = x
            .blocks()
            .iter()
            .zip(v.blocks())
            .zip(y_prev.blocks())
            .zip(coeffs)
            .map(|(((xb, vb), ypb), c)| {
                let ln_s = log_normalizer(xb, ypb);
                let arg: Vec<f64> = vb
                    .weights()
                    .iter()
                    .zip(xb.weights())
                    .map(|(vi, xi)| c.theta * (ln_s + (vi / xi).ln()))
                    .collect();
                softmax_reweight(xb, &arg)
            })
            .collect::<Result<Vec<_>>>()?;
        ProductPoint::new(blocks)?
    };

    let grads = obj.euclidean_grad(&y);
    let mut x_blocks = Vec::with_capacity(x.num_blocks());
    let mut v_blocks = Vec::with_capacity(x.num_blocks());
    for (((yb, vb), gb), c) in y.blocks().iter().zip(v.blocks()).zip(&grads).zip(coeffs) {
        x_blocks.push(multiplicative_update(yb, gb, c.alpha, options)?);

        // u_i = zeta ln(S' v_i / y_i) + (MWU_alpha(y)_i - y_i)
        let log_term = if options.corrected_normalizer {
            log_map(yb, vb)?.scale(c.zeta).components().to_vec()
        } else {
            let ln_s = log_normalizer(yb, vb);
            vb.weights()
                .iter()
                .zip(yb.weights())
                .map(|(vi, yi)| c.zeta * (ln_s + (vi / yi).ln()))
                .collect()
        };
        // the pseudocode's own u-formula already weights this denominator
        let disp = mwu_displacement(yb, gb, c.alpha)?;
        let u: Vec<f64> = log_term
            .iter()
            .zip(disp.components())
            .map(|(a, b)| a + b)
            .collect();
        v_blocks.push(softmax_reweight(yb, &u)?);
    }
    Ok((
        y,
        ProductPoint::new(x_blocks)?,
        ProductPoint::new(v_blocks)?,
    ))
}

/// `ln S = mean_i ln(x_i / y_i)`, the printed normalizer.
fn log_normalizer(x: &SimplexPoint, y: &SimplexPoint) -> f64 {
    let d = x.dim() as f64;
    x.weights()
        .iter()
        .zip(y.weights())
        .map(|(xi, yi)| (xi / yi).ln())
        .sum::<f64>()
        / d
}

/// `x_i e^{u_i} / sum_j x_j e^{u_j}` with the max shift; accepts arbitrary
/// (not necessarily sum-zero) arguments since the constant cancels.
fn softmax_reweight(x: &SimplexPoint, u: &[f64]) -> Result<SimplexPoint> {
    let shift = u.iter().fold(f64::NEG_INFINITY, |m, c| m.max(*c));
    SimplexPoint::normalized(
        x.weights()
            .iter()
            .zip(u)
            .map(|(xi, ui)| xi * (ui - shift).exp())
            .collect(),
    )
}

fn multiplicative_update(
    y: &SimplexPoint,
    grad: &[f64],
    alpha: f64,
    options: LiteralOptions,
) -> Result<SimplexPoint> {
    if options.weighted_denominator {
        mwu_retract(y, grad, alpha)
    } else {
        // the unweighted denominator as printed; the result generally sums
        // away from 1, which the constructor reports
        let den = 1.0 - alpha * grad.iter().sum::<f64>();
        if den <= 0.0 {
            return Err(AmwuError::StepTooLarge(format!(
                "unweighted denominator {den} <= 0"
            )));
        }
        for g in grad {
            if 1.0 - alpha * g <= 0.0 {
                return Err(AmwuError::StepTooLarge(format!(
                    "1 - alpha * g = {} <= 0",
                    1.0 - alpha * g
                )));
            }
        }
        SimplexPoint::new(
            y.weights()
                .iter()
                .zip(grad)
                .map(|(yi, gi)| yi * (1.0 - alpha * gi) / den)
                .collect(),
        )
    }
}

/// One accelerated step with per-agent parameters. All intermediate points
/// are computed before the single joint gradient evaluation; schedules
/// advance independently.
pub fn multi_agent_amwu_step(
    state: &OptimizerState,
    obj: &Objective,
    per_agent_params: &[ScheduleParams],
    mode: AmwuMode,
) -> Result<OptimizerState> {
    multi_agent_amwu_step_with_options(state, obj, per_agent_params, mode, LiteralOptions::default())
}

pub fn multi_agent_amwu_step_with_options(
    state: &OptimizerState,
    obj: &Objective,
    per_agent_params: &[ScheduleParams],
    mode: AmwuMode,
    options: LiteralOptions,
) -> Result<OptimizerState> {
    obj.matches_shape(&state.x)?;
    if per_agent_params.len() != state.schedules.len() {
        return Err(AmwuError::ShapeMismatch {
            expected: vec![state.schedules.len()],
            got: vec![per_agent_params.len()],
        });
    }
    let coeffs: Vec<DerivedCoefficients> = per_agent_params
        .iter()
        .zip(&state.schedules)
        .map(|(p, s)| DerivedCoefficients::new(p, s))
        .collect();

    let (y, x_next, v_next) = match mode {
        AmwuMode::Ragd => ragd_update(&state.x, &state.v, obj, &coeffs)?,
        AmwuMode::Literal => literal_update(&state.x, &state.v, &state.y, obj, &coeffs, options)?,
    };

    let schedules = per_agent_params
        .iter()
        .zip(&state.schedules)
        .map(|(p, s)| advance(p, s))
        .collect::<Result<Vec<_>>>()?;

    Ok(OptimizerState {
        x: x_next,
        v: v_next,
        y,
        schedules,
        t: state.t + 1,
    })
}

/// Single-agent accelerated step: one parameter set shared by every block.
pub fn amwu_step(
    state: &OptimizerState,
    obj: &Objective,
    params: &ScheduleParams,
    mode: AmwuMode,
) -> Result<OptimizerState> {
    let shared = vec![*params; state.schedules.len()];
    multi_agent_amwu_step(state, obj, &shared, mode)
}

/// Iterate bundle for the accelerated mirror descent baseline.
#[derive(Debug, Clone)]
pub struct AmdState {
    pub x: ProductPoint,
    pub z: ProductPoint,
    pub x_tilde: ProductPoint,
    pub k: usize,
}

impl AmdState {
    pub fn init(x0: ProductPoint) -> Self {
        Self {
            z: x0.clone(),
            x_tilde: x0.clone(),
            x: x0,
            k: 0,
        }
    }
}

/// One accelerated mirror descent step with averaging parameter `r`:
/// `x_{k+1} = lambda_k z_k + (1 - lambda_k) x~_k` with `lambda_k = r/(r+k)`,
/// an entropic mirror step on `z` with rate `k * step / r`, and a
/// multiplicative update for `x~`.
pub fn amd_step(state: &AmdState, obj: &Objective, r: f64, step: f64) -> Result<AmdState> {
    if r < 1.0 {
        return Err(AmwuError::InvalidParams(format!("amd r = {r} must be >= 1")));
    }
    obj.matches_shape(&state.x)?;
    let lambda = r / (r + state.k as f64);
    let x_blocks = state
        .z
        .blocks()
        .iter()
        .zip(state.x_tilde.blocks())
        .map(|(zb, tb)| {
            SimplexPoint::normalized(
                zb.weights()
                    .iter()
                    .zip(tb.weights())
                    .map(|(zi, ti)| lambda * zi + (1.0 - lambda) * ti)
                    .collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let x = ProductPoint::new(x_blocks)?;

    let grads = obj.euclidean_grad(&x);
    let eta = state.k as f64 * step / r;
    let z_blocks = state
        .z
        .blocks()
        .iter()
        .zip(&grads)
        .map(|(zb, gb)| exp_map(zb, &TangentVector::from_centered(gb).scale(-eta)))
        .collect::<Result<Vec<_>>>()?;
    let z = ProductPoint::new(z_blocks)?;

    let x_tilde = mwu_step(&x, obj, step)?;

    Ok(AmdState {
        x,
        z,
        x_tilde,
        k: state.k + 1,
    })
}

/// Which optimizer a run executes.
#[derive(Debug, Clone)]
pub enum AlgorithmSpec {
    Mwu { alpha: f64 },
    Amwu { params: ScheduleParams, mode: AmwuMode },
    MultiAgentAmwu { params: Vec<ScheduleParams>, mode: AmwuMode },
    Amd { r: f64, step: f64 },
}

/// Run-loop controls.
#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub max_iters: usize,
    /// Stop when the Shahshahani gradient norm at the evaluation point drops
    /// to this value.
    pub grad_tol: f64,
    /// Record every this many iterations (plus the initial and final ones).
    pub trace_every: usize,
}

impl RunConfig {
    pub fn new(max_iters: usize, grad_tol: f64, trace_every: usize) -> Self {
        Self {
            max_iters,
            grad_tol,
            trace_every: trace_every.max(1),
        }
    }
}

/// One recorded point of a run. The function value and gradient norm are
/// taken at the algorithm's own evaluation point: the intermediate point for
/// the accelerated update, the iterate itself otherwise.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub t: usize,
    pub f_value: f64,
    pub grad_norm: f64,
    pub x: ProductPoint,
    pub y: Option<ProductPoint>,
    pub v: Option<ProductPoint>,
    /// Per-agent `(s, gamma, defining-equation residual)` of the schedule
    /// that produced this step.
    pub schedule: Option<Vec<(f64, f64, f64)>>,
}

enum RunnerState {
    Mwu(ProductPoint),
    Amwu(OptimizerState),
    Amd(AmdState),
}

/// Runs `algorithm` from `x0` (and `v0`, accelerated variants only),
/// recording the trace until the gradient tolerance or iteration budget is
/// reached. Deterministic given inputs.
pub fn run(
    algorithm: &AlgorithmSpec,
    obj: &Objective,
    x0: &ProductPoint,
    v0: Option<&ProductPoint>,
    config: &RunConfig,
) -> Result<Vec<TraceRecord>> {
    obj.matches_shape(x0)?;
    let per_agent: Vec<ScheduleParams> = match algorithm {
        AlgorithmSpec::Amwu { params, .. } => vec![*params; x0.num_blocks()],
        AlgorithmSpec::MultiAgentAmwu { params, .. } => params.clone(),
        _ => Vec::new(),
    };
    let mut state = match algorithm {
        AlgorithmSpec::Mwu { .. } => RunnerState::Mwu(x0.clone()),
        AlgorithmSpec::Amwu { .. } | AlgorithmSpec::MultiAgentAmwu { .. } => RunnerState::Amwu(
            OptimizerState::init(x0.clone(), v0.cloned(), &per_agent)
                .map_err(|e| e.at_iteration(0))?,
        ),
        AlgorithmSpec::Amd { .. } => RunnerState::Amd(AmdState::init(x0.clone())),
    };

    let mut trace = Vec::new();
    let record = |state: &RunnerState, t: usize, params: &[ScheduleParams]| -> TraceRecord {
        let (eval_point, x, y, v, schedule) = match state {
            RunnerState::Mwu(x) => (x.clone(), x.clone(), None, None, None),
            RunnerState::Amwu(s) => {
                let sched: Vec<(f64, f64, f64)> = s
                    .schedules
                    .iter()
                    .zip(params)
                    .map(|(st, p)| (st.s, st.gamma, st.residual(p)))
                    .collect();
                let eval = if t == 0 { s.x.clone() } else { s.y.clone() };
                (eval, s.x.clone(), Some(s.y.clone()), Some(s.v.clone()), Some(sched))
            }
            RunnerState::Amd(s) => (s.x.clone(), s.x.clone(), None, None, None),
        };
        let f_value = obj.eval(&eval_point);
        let grad_norm = obj
            .riemannian_grad_norm(&eval_point)
            .expect("shape already checked");
        TraceRecord {
            t,
            f_value,
            grad_norm,
            x,
            y,
            v,
            schedule,
        }
    };

    let first = record(&state, 0, &per_agent);
    let mut last_grad = first.grad_norm;
    trace.push(first);
    if last_grad <= config.grad_tol || config.max_iters == 0 {
        return Ok(trace);
    }

    for t in 1..=config.max_iters {
        state = match (&state, algorithm) {
            (RunnerState::Mwu(x), AlgorithmSpec::Mwu { alpha }) => {
                RunnerState::Mwu(mwu_step(x, obj, *alpha).map_err(|e| e.at_iteration(t))?)
            }
            (RunnerState::Amwu(s), AlgorithmSpec::Amwu { mode, .. })
            | (RunnerState::Amwu(s), AlgorithmSpec::MultiAgentAmwu { mode, .. }) => {
                RunnerState::Amwu(
                    multi_agent_amwu_step(s, obj, &per_agent, *mode)
                        .map_err(|e| e.at_iteration(t))?,
                )
            }
            (RunnerState::Amd(s), AlgorithmSpec::Amd { r, step }) => {
                RunnerState::Amd(amd_step(s, obj, *r, *step).map_err(|e| e.at_iteration(t))?)
            }
            _ => unreachable!("state kind matches algorithm"),
        };
        let rec = record(&state, t, &per_agent);
        last_grad = rec.grad_norm;
        let due = t % config.trace_every == 0 || t == config.max_iters;
        let stopping = last_grad <= config.grad_tol;
        if due || stopping {
            trace.push(rec);
        }
        if stopping {
            break;
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{self, find_critical_points, simplex_grid_seeds};
    use approx::assert_abs_diff_eq;

    fn point3(w: [f64; 3]) -> ProductPoint {
        ProductPoint::single(SimplexPoint::normalized(w.to_vec()).unwrap())
    }

    fn rosenbrock_params() -> ScheduleParams {
        ScheduleParams::new(0.01, 0.001, 1.0).unwrap()
    }

    #[test]
    fn mwu_step_matches_single_simplex_oracle() {
        let obj = Objective::new(
            "linear-x",
            vec![2],
            |p| p[0],
            |_| vec![1.0, 0.0],
        );
        let x = ProductPoint::single(SimplexPoint::new(vec![0.5, 0.5]).unwrap());
        let next = mwu_step(&x, &obj, 0.1).unwrap();
        assert_abs_diff_eq!(next.blocks()[0].weights()[0], 0.45 / 0.95, epsilon = 1e-12);
        assert_abs_diff_eq!(next.blocks()[0].weights()[1], 0.50 / 0.95, epsilon = 1e-12);
    }

    #[test]
    fn mwu_step_blocks_are_independent() {
        let obj = Objective::new(
            "split",
            vec![2, 2],
            |p| p[0] + p[2],
            |_| vec![1.0, 0.0, 1.0, 0.0],
        );
        let x = ProductPoint::new(vec![
            SimplexPoint::new(vec![0.5, 0.5]).unwrap(),
            SimplexPoint::new(vec![0.5, 0.5]).unwrap(),
        ])
        .unwrap();
        let next = mwu_step(&x, &obj, 0.1).unwrap();
        assert!(next.blocks()[0].max_abs_diff(&next.blocks()[1]) < 1e-16);
    }

    #[test]
    fn critical_point_is_fixed_in_both_modes() {
        let obj = objectives::trig1();
        let seeds = simplex_grid_seeds(&[3], 14);
        let catalog = find_critical_points(&obj, &seeds, 1e-13).unwrap();
        assert!(!catalog.entries.is_empty());
        let params = ScheduleParams::new(0.005, 0.1, 0.2).unwrap();
        for entry in &catalog.entries {
            for mode in [AmwuMode::Ragd, AmwuMode::Literal] {
                let state =
                    OptimizerState::init_shared(entry.point.clone(), None, &params).unwrap();
                let next = amwu_step(&state, &obj, &params, mode).unwrap();
                assert!(
                    next.x.max_abs_diff(&entry.point) < 1e-12,
                    "{mode:?}: x moved {}",
                    next.x.max_abs_diff(&entry.point)
                );
                assert!(next.v.max_abs_diff(&entry.point) < 1e-12);
                assert!(next.y.max_abs_diff(&entry.point) < 1e-12);
            }
        }
    }

    #[test]
    fn ragd_decreases_rosenbrock_within_five_steps() {
        let obj = objectives::rosenbrock();
        let params = rosenbrock_params();
        let x0 = point3([0.2, 0.4, 0.4]);
        let f0 = obj.eval(&x0);
        let mut state = OptimizerState::init_shared(x0, None, &params).unwrap();
        for _ in 0..5 {
            state = amwu_step(&state, &obj, &params, AmwuMode::Ragd).unwrap();
            for b in state.x.blocks() {
                assert!(b.weights().iter().all(|w| w.is_finite()));
            }
        }
        assert!(obj.eval(&state.x) < f0);
    }

    #[test]
    fn ragd_step_matches_independent_transcription() {
        // straight-line transcription of the three update equations,
        // written against the raw formulas rather than the geometry helpers
        let obj = objectives::rosenbrock();
        let params = rosenbrock_params();
        let x0 = point3([0.2, 0.4, 0.4]);
        let v0 = point3([0.3, 0.45, 0.25]);
        let state = OptimizerState::init_shared(x0.clone(), Some(v0.clone()), &params).unwrap();
        let next = amwu_step(&state, &obj, &params, AmwuMode::Ragd).unwrap();

        let sch = &state.schedules[0];
        let c = DerivedCoefficients::new(&params, sch);
        let xw = x0.blocks()[0].weights();
        let vw = v0.blocks()[0].weights();
        // Log_x(v), then y = Exp_x(theta u)
        let ln_s: f64 = xw.iter().zip(vw).map(|(x, v)| (x / v).ln()).sum::<f64>() / 3.0;
        let u: Vec<f64> = xw
            .iter()
            .zip(vw)
            .map(|(x, v)| (ln_s + (v / x).ln()) * c.theta)
            .collect();
        let mut y: Vec<f64> = xw.iter().zip(&u).map(|(x, ui)| x * ui.exp()).collect();
        let ysum: f64 = y.iter().sum();
        y.iter_mut().for_each(|w| *w /= ysum);

        let g = obj.grad_flat(&[y[0], y[1], y[2]]);
        let gmean = (g[0] + g[1] + g[2]) / 3.0;
        let mut xn: Vec<f64> = y
            .iter()
            .zip(&g)
            .map(|(yi, gi)| yi * (-c.alpha * (gi - gmean)).exp())
            .collect();
        let xsum: f64 = xn.iter().sum();
        xn.iter_mut().for_each(|w| *w /= xsum);

        for (a, b) in next.x.blocks()[0].weights().iter().zip(&xn) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-13);
        }
        for (a, b) in next.y.blocks()[0].weights().iter().zip(&y) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-13);
        }
    }

    #[test]
    fn literal_and_ragd_agree_to_first_order_on_x() {
        let obj = objectives::trig1();
        let x0 = point3([0.3, 0.45, 0.25]);
        let v0 = point3([0.25, 0.35, 0.40]);
        let diff_at = |alpha: f64| {
            let params = ScheduleParams::new(alpha, 0.1, 0.2).unwrap();
            let state = OptimizerState::init_shared(x0.clone(), Some(v0.clone()), &params).unwrap();
            let a = amwu_step(&state, &obj, &params, AmwuMode::Ragd).unwrap();
            let b = amwu_step(&state, &obj, &params, AmwuMode::Literal).unwrap();
            assert!(a.y.max_abs_diff(&b.y) < 1e-14, "y-updates must coincide");
            a.x.max_abs_diff(&b.x)
        };
        let d1 = diff_at(1e-3);
        let d2 = diff_at(1e-4);
        assert!(d1 / d2 >= 50.0, "ratio {} too small", d1 / d2);
    }

    #[test]
    fn legacy_normalizer_cannot_change_iterates() {
        // the normalizer is an additive constant inside a softmax
        let obj = objectives::trig2();
        let params = ScheduleParams::new(0.01, 0.001, 0.001).unwrap();
        let x0 = point3([0.6, 0.2, 0.2]);
        let v0 = point3([0.5, 0.3, 0.2]);
        let mut a = OptimizerState::init_shared(x0.clone(), Some(v0.clone()), &params).unwrap();
        let mut b = a.clone();
        for _ in 0..20 {
            a = multi_agent_amwu_step_with_options(
                &a,
                &obj,
                &[params],
                AmwuMode::Literal,
                LiteralOptions::default(),
            )
            .unwrap();
            b = multi_agent_amwu_step_with_options(
                &b,
                &obj,
                &[params],
                AmwuMode::Literal,
                LiteralOptions {
                    corrected_normalizer: false,
                    ..LiteralOptions::default()
                },
            )
            .unwrap();
        }
        assert!(a.x.max_abs_diff(&b.x) < 1e-13);
        assert!(a.v.max_abs_diff(&b.v) < 1e-13);
    }

    #[test]
    fn unweighted_denominator_violates_sum_invariant() {
        // run the pseudocode as printed: the x-update's unweighted
        // denominator drives the weights off the simplex
        let obj = objectives::trig1();
        let params = ScheduleParams::new(0.005, 0.1, 0.2).unwrap();
        let x0 = point3([0.42, 0.24, 0.33]);
        let state = OptimizerState::init_shared(x0, None, &params).unwrap();
        let err = multi_agent_amwu_step_with_options(
            &state,
            &obj,
            &[params],
            AmwuMode::Literal,
            LiteralOptions {
                weighted_denominator: false,
                ..LiteralOptions::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, AmwuError::InvalidSimplexPoint(_)), "{err}");

        // the corrected form from the same state steps cleanly
        let state = OptimizerState::init_shared(point3([0.42, 0.24, 0.33]), None, &params).unwrap();
        assert!(amwu_step(&state, &obj, &params, AmwuMode::Literal).is_ok());
    }

    #[test]
    fn single_agent_is_multi_agent_with_one_block() {
        let obj = objectives::rosenbrock();
        let params = rosenbrock_params();
        let x0 = point3([0.2, 0.4, 0.4]);
        let state = OptimizerState::init_shared(x0, None, &params).unwrap();
        let a = amwu_step(&state, &obj, &params, AmwuMode::Ragd).unwrap();
        let b = multi_agent_amwu_step(&state, &obj, &[params], AmwuMode::Ragd).unwrap();
        assert_eq!(a.x.flatten(), b.x.flatten());
        assert_eq!(a.v.flatten(), b.v.flatten());
    }

    #[test]
    fn separable_objective_blocks_match_single_agent_runs() {
        // f(x) + g(y) over two 2-simplices: each block's trajectory equals
        // its own single-agent run
        let joint = Objective::new(
            "separable",
            vec![3, 3],
            |p| {
                ((0.5 - p[0]).powi(2) + 0.25 * (p[1] - p[0] * p[0]).powi(2))
                    + ((8.5 * p[3]).cos() * (8.5 * (p[4] - 0.4)).sin() + (8.5 * p[5]).sin())
            },
            |p| {
                vec![
                    -2.0 * (0.5 - p[0]) - p[0] * (p[1] - p[0] * p[0]),
                    0.5 * (p[1] - p[0] * p[0]),
                    0.0,
                    -8.5 * (8.5 * p[3]).sin() * (8.5 * (p[4] - 0.4)).sin(),
                    8.5 * (8.5 * p[3]).cos() * (8.5 * (p[4] - 0.4)).cos(),
                    8.5 * (8.5 * p[5]).cos(),
                ]
            },
        );
        let f1 = Objective::new(
            "part1",
            vec![3],
            |p| (0.5 - p[0]).powi(2) + 0.25 * (p[1] - p[0] * p[0]).powi(2),
            |p| {
                vec![
                    -2.0 * (0.5 - p[0]) - p[0] * (p[1] - p[0] * p[0]),
                    0.5 * (p[1] - p[0] * p[0]),
                    0.0,
                ]
            },
        );
        let f2 = Objective::new(
            "part2",
            vec![3],
            |p| (8.5 * p[0]).cos() * (8.5 * (p[1] - 0.4)).sin() + (8.5 * p[2]).sin(),
            |p| {
                vec![
                    -8.5 * (8.5 * p[0]).sin() * (8.5 * (p[1] - 0.4)).sin(),
                    8.5 * (8.5 * p[0]).cos() * (8.5 * (p[1] - 0.4)).cos(),
                    8.5 * (8.5 * p[2]).cos(),
                ]
            },
        );

        let pa = ScheduleParams::new(0.005, 0.1, 0.5).unwrap();
        let pb = ScheduleParams::new(0.002, 0.05, 0.3).unwrap();
        let x0a = SimplexPoint::normalized(vec![0.2, 0.4, 0.4]).unwrap();
        let x0b = SimplexPoint::normalized(vec![0.42, 0.25, 0.33]).unwrap();

        let mut joint_state = OptimizerState::init(
            ProductPoint::new(vec![x0a.clone(), x0b.clone()]).unwrap(),
            None,
            &[pa, pb],
        )
        .unwrap();
        let mut s1 =
            OptimizerState::init(ProductPoint::single(x0a), None, &[pa]).unwrap();
        let mut s2 =
            OptimizerState::init(ProductPoint::single(x0b), None, &[pb]).unwrap();

        for _ in 0..1000 {
            joint_state =
                multi_agent_amwu_step(&joint_state, &joint, &[pa, pb], AmwuMode::Ragd).unwrap();
            s1 = multi_agent_amwu_step(&s1, &f1, &[pa], AmwuMode::Ragd).unwrap();
            s2 = multi_agent_amwu_step(&s2, &f2, &[pb], AmwuMode::Ragd).unwrap();
        }
        assert!(joint_state.x.blocks()[0].max_abs_diff(&s1.x.blocks()[0]) < 1e-12);
        assert!(joint_state.x.blocks()[1].max_abs_diff(&s2.x.blocks()[0]) < 1e-12);
    }

    #[test]
    fn amd_first_step_lands_on_z0() {
        let obj = objectives::rosenbrock();
        let x0 = point3([0.2, 0.4, 0.4]);
        let state = AmdState::init(x0.clone());
        let next = amd_step(&state, &obj, 3.0, 0.01).unwrap();
        // lambda_0 = 1, so x_1 = z_0 = x_0
        assert!(next.x.max_abs_diff(&x0) < 1e-15);
    }

    #[test]
    fn amd_fixed_under_zero_gradient() {
        let obj = Objective::new("const", vec![3], |_| 1.0, |_| vec![0.0, 0.0, 0.0]);
        let x0 = point3([0.2, 0.4, 0.4]);
        let mut state = AmdState::init(x0.clone());
        for _ in 0..100 {
            state = amd_step(&state, &obj, 3.0, 0.01).unwrap();
            assert!(state.z.max_abs_diff(&x0) < 1e-14);
            assert!(state.x_tilde.max_abs_diff(&x0) < 1e-14);
        }
        assert!(state.x.max_abs_diff(&x0) < 1e-13);
    }

    #[test]
    fn amd_rejects_r_below_one() {
        let obj = objectives::rosenbrock();
        let state = AmdState::init(point3([0.2, 0.4, 0.4]));
        assert!(amd_step(&state, &obj, 0.5, 0.01).is_err());
    }

    #[test]
    fn amd_larger_r_is_smoother_on_rosenbrock() {
        let obj = objectives::rosenbrock();
        let x0 = point3([0.2, 0.4, 0.4]);
        let roughness = |r: f64| {
            let trace = run(
                &AlgorithmSpec::Amd { r, step: 0.01 },
                &obj,
                &x0,
                None,
                &RunConfig::new(2000, 0.0, 1),
            )
            .unwrap();
            let fs: Vec<f64> = trace.iter().map(|t| t.f_value).collect();
            fs.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / (fs.len() - 1) as f64
        };
        assert!(roughness(9.0) <= roughness(3.0));
    }

    #[test]
    fn run_with_zero_budget_gives_single_record() {
        let obj = objectives::rosenbrock();
        let trace = run(
            &AlgorithmSpec::Mwu { alpha: 0.01 },
            &obj,
            &point3([0.2, 0.4, 0.4]),
            None,
            &RunConfig::new(0, 0.0, 1),
        )
        .unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(trace[0].t, 0);
    }

    #[test]
    fn run_with_infinite_tolerance_stops_immediately() {
        let obj = objectives::rosenbrock();
        let trace = run(
            &AlgorithmSpec::Mwu { alpha: 0.01 },
            &obj,
            &point3([0.2, 0.4, 0.4]),
            None,
            &RunConfig::new(100, f64::INFINITY, 1),
        )
        .unwrap();
        assert_eq!(trace.len(), 1);
    }

    #[test]
    fn mwu_descends_on_rosenbrock() {
        let obj = objectives::rosenbrock();
        let trace = run(
            &AlgorithmSpec::Mwu { alpha: 0.01 },
            &obj,
            &point3([0.2, 0.4, 0.4]),
            None,
            &RunConfig::new(2000, 0.0, 1),
        )
        .unwrap();
        let fs: Vec<f64> = trace.iter().map(|t| t.f_value).collect();
        let descending = fs
            .windows(2)
            .skip(10)
            .filter(|w| w[1] <= w[0] + 1e-12)
            .count();
        let total = fs.len() - 11;
        assert!(descending == total, "{descending}/{total} steps descend");
    }

    #[test]
    fn run_is_deterministic() {
        let obj = objectives::trig1();
        let params = ScheduleParams::new(0.005, 0.1, 0.2).unwrap();
        let spec = AlgorithmSpec::Amwu {
            params,
            mode: AmwuMode::Ragd,
        };
        let x0 = point3([0.42, 0.24, 0.33]);
        let a = run(&obj_spec(&spec), &obj, &x0, None, &RunConfig::new(500, 0.0, 1)).unwrap();
        let b = run(&obj_spec(&spec), &obj, &x0, None, &RunConfig::new(500, 0.0, 1)).unwrap();
        for (ra, rb) in a.iter().zip(&b) {
            assert_eq!(ra.f_value.to_bits(), rb.f_value.to_bits());
            assert_eq!(ra.x.flatten(), rb.x.flatten());
        }
    }

    fn obj_spec(spec: &AlgorithmSpec) -> AlgorithmSpec {
        spec.clone()
    }

    #[test]
    fn runtime_errors_carry_iteration_index() {
        // gradient of 2000 with alpha 0.01 violates positivity at once
        let obj = Objective::new("steep", vec![2], |p| 2000.0 * p[0], |_| vec![2000.0, 0.0]);
        let x0 = ProductPoint::single(SimplexPoint::new(vec![0.5, 0.5]).unwrap());
        let err = run(
            &AlgorithmSpec::Mwu { alpha: 0.01 },
            &obj,
            &x0,
            None,
            &RunConfig::new(10, 0.0, 1),
        )
        .unwrap_err();
        assert!(matches!(err, AmwuError::AtIteration { iteration: 1, .. }));
    }
}
