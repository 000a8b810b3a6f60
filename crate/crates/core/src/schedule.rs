//! Acceleration schedule: the per-step root `s_t`, the `gamma_t` recursion,
//! stationary closed forms, and admissibility bounds on the step size.

use crate::error::{AmwuError, Result};

/// Residual tolerance on the defining equation `s^2 = alpha ((1-s) gamma + s mu)`.
pub const RESIDUAL_TOL: f64 = 1e-12;

/// Constant parameters of the accelerated schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleParams {
    /// Step size, must satisfy `0 < alpha < 1/L` when `L` is finite.
    pub alpha: f64,
    /// Momentum damping, `beta >= 0`.
    pub beta: f64,
    /// Geodesic-convexity modulus, `mu > 0`.
    pub mu: f64,
    /// Smoothness constant; `INFINITY` when unknown.
    pub lipschitz: f64,
}

impl ScheduleParams {
    pub fn new(alpha: f64, beta: f64, mu: f64) -> Result<Self> {
        Self::with_lipschitz(alpha, beta, mu, f64::INFINITY)
    }

    pub fn with_lipschitz(alpha: f64, beta: f64, mu: f64, lipschitz: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(AmwuError::InvalidParams(format!("alpha = {alpha} must be > 0")));
        }
        if !(beta >= 0.0) {
            return Err(AmwuError::InvalidParams(format!("beta = {beta} must be >= 0")));
        }
        if !(mu > 0.0) {
            return Err(AmwuError::InvalidParams(format!("mu = {mu} must be > 0")));
        }
        if !(lipschitz > 0.0) {
            return Err(AmwuError::InvalidParams(format!(
                "lipschitz = {lipschitz} must be > 0"
            )));
        }
        if lipschitz.is_finite() && alpha >= 1.0 / lipschitz {
            return Err(AmwuError::InvalidParams(format!(
                "alpha = {alpha} must be below 1/L = {}",
                1.0 / lipschitz
            )));
        }
        Ok(Self {
            alpha,
            beta,
            mu,
            lipschitz,
        })
    }
}

/// The evolving schedule state at iteration `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleState {
    /// Root of the defining quadratic, in (0, 1).
    pub s: f64,
    /// Current gamma.
    pub gamma: f64,
    /// `(1 - s) gamma + s mu`, the value the recursion divides by `1 + beta`.
    pub gamma_bar: f64,
    /// Iteration index.
    pub t: usize,
}

impl ScheduleState {
    /// Initial state with the given `gamma_0`; solves `s_0` against it.
    pub fn init(params: &ScheduleParams, gamma0: f64) -> Result<Self> {
        if !(gamma0 > 0.0) {
            return Err(AmwuError::InvalidParams(format!("gamma0 = {gamma0} must be > 0")));
        }
        let s = solve_s(params, gamma0)?;
        Ok(Self {
            s,
            gamma: gamma0,
            gamma_bar: (1.0 - s) * gamma0 + s * params.mu,
            t: 0,
        })
    }

    /// Initial state with the default `gamma_0 = mu`.
    pub fn default_init(params: &ScheduleParams) -> Result<Self> {
        Self::init(params, params.mu)
    }

    /// Residual of the defining equation at the current state.
    pub fn residual(&self, params: &ScheduleParams) -> f64 {
        (self.s * self.s - params.alpha * ((1.0 - self.s) * self.gamma + self.s * params.mu)).abs()
    }
}

/// Mixing coefficients derived from one schedule step, as used by the
/// update maps and the fixed-point Jacobian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCoefficients {
    /// `s gamma / (gamma + s mu)`, the y-interpolation weight.
    pub theta: f64,
    /// `(1 - s) / (1 + beta)`, the v-interpolation weight.
    pub zeta: f64,
    pub s: f64,
    /// `(1 + beta) gamma`, the bar-value the current gamma was derived from;
    /// the v-update scales the gradient by `s / gamma_bar`.
    pub gamma_bar: f64,
    pub alpha: f64,
}

impl DerivedCoefficients {
    pub fn new(params: &ScheduleParams, state: &ScheduleState) -> Self {
        Self::from_raw(params, state.s, state.gamma)
    }

    pub fn from_raw(params: &ScheduleParams, s: f64, gamma: f64) -> Self {
        Self {
            theta: s * gamma / (gamma + s * params.mu),
            zeta: (1.0 - s) / (1.0 + params.beta),
            s,
            gamma_bar: (1.0 + params.beta) * gamma,
            alpha: params.alpha,
        }
    }

    /// Coefficients at the stationary schedule of `params`.
    pub fn stationary(params: &ScheduleParams) -> Self {
        let (s, gamma) = stationary_values(params);
        Self::from_raw(params, s, gamma)
    }
}

/// Solves `s^2 = alpha ((1-s) gamma + s mu)` for the unique positive root of
/// `s^2 + alpha (gamma - mu) s - alpha gamma = 0`, reporting an error if it
/// falls outside (0, 1).
///
/// The quadratic has one positive and one negative root since the constant
/// term is negative; the positive one is computed cancellation-free.
pub fn solve_s(params: &ScheduleParams, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(AmwuError::InvalidParams(format!("gamma = {gamma} must be > 0")));
    }
    let b = params.alpha * (gamma - params.mu);
    let c = -params.alpha * gamma;
    let disc = b * b - 4.0 * c;
    let root = if b <= 0.0 {
        (-b + disc.sqrt()) / 2.0
    } else {
        // q-form avoids cancellation when b > 0
        let q = -(b + disc.sqrt()) / 2.0;
        c / q
    };
    if !(root > 0.0 && root < 1.0) {
        return Err(AmwuError::NoRootInUnitInterval {
            root,
            alpha: params.alpha,
            gamma,
            mu: params.mu,
        });
    }
    Ok(root)
}

/// One step of the schedule recursion:
/// `gamma_{t+1} = ((1 - s_t) gamma_t + s_t mu) / (1 + beta)`, then a fresh
/// `s_{t+1}` solved against `gamma_{t+1}`.
pub fn advance(params: &ScheduleParams, state: &ScheduleState) -> Result<ScheduleState> {
    let gamma_next = state.gamma_bar / (1.0 + params.beta);
    let s = solve_s(params, gamma_next)?;
    Ok(ScheduleState {
        s,
        gamma: gamma_next,
        gamma_bar: (1.0 - s) * gamma_next + s * params.mu,
        t: state.t + 1,
    })
}

/// Stationary closed forms
/// `s* = (sqrt(beta^2 + 4 (1+beta) mu alpha) - beta) / 2` and
/// `gamma* = (sqrt(...) - beta) / (sqrt(...) + beta)`.
///
/// `gamma*` is stationary for the recursion in units of `mu`: the fixed
/// point of the raw `gamma` recursion is `mu * gamma*` (see
/// [`stationary_gamma_fixed_point`]); the two coincide at `mu = 1`.
pub fn stationary_values(params: &ScheduleParams) -> (f64, f64) {
    let d = (params.beta * params.beta + 4.0 * (1.0 + params.beta) * params.mu * params.alpha).sqrt();
    let s = (d - params.beta) / 2.0;
    let gamma = (d - params.beta) / (d + params.beta);
    (s, gamma)
}

/// The fixed point of the raw `gamma` recursion, `mu * gamma*`. Solving `s`
/// against it returns `s*`, and `advance` maps it to itself.
pub fn stationary_gamma_fixed_point(params: &ScheduleParams) -> f64 {
    let (_, gamma) = stationary_values(params);
    params.mu * gamma
}

/// Admissible step bound `min(1/L, (1 + (mu+1) beta) / ((1+beta) mu))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepBound {
    pub value: f64,
    /// Set when `mu >= 1`; the bound derivation assumed `mu < 1`.
    pub mu_warning: bool,
}

pub fn admissible_step_bound(beta: f64, mu: f64, lipschitz: f64) -> StepBound {
    let second = (1.0 + (mu + 1.0) * beta) / ((1.0 + beta) * mu);
    let value = if lipschitz.is_finite() {
        (1.0 / lipschitz).min(second)
    } else {
        second
    };
    StepBound {
        value,
        mu_warning: mu >= 1.0,
    }
}

/// Heuristic momentum damping `beta = 0.2 sqrt(mu / L)` for fast local
/// convergence.
pub fn recommended_beta(mu: f64, lipschitz: f64) -> f64 {
    0.2 * (mu / lipschitz).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(alpha: f64, beta: f64, mu: f64) -> ScheduleParams {
        ScheduleParams::new(alpha, beta, mu).unwrap()
    }

    /// Bisection oracle for the defining quadratic, independent of the
    /// closed-form solver.
    fn bisect_s(alpha: f64, gamma: f64, mu: f64) -> f64 {
        let f = |s: f64| s * s - alpha * ((1.0 - s) * gamma + s * mu);
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        assert!(f(lo) < 0.0 && f(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn solve_s_degenerate_case_mu_equals_gamma() {
        let p = params(0.01, 0.1, 0.7);
        let s = solve_s(&p, 0.7).unwrap();
        assert_abs_diff_eq!(s, (0.01_f64 * 0.7).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn solve_s_matches_bisection_oracle() {
        let p = params(0.01, 0.1, 1.0);
        let s = solve_s(&p, 0.398276).unwrap();
        assert_abs_diff_eq!(s, bisect_s(0.01, 0.398276, 1.0), epsilon = 1e-12);
        assert_abs_diff_eq!(s, 0.0661895, epsilon = 1e-6);
    }

    #[test]
    fn solve_s_residual_on_random_triples() {
        let mut state = 0x9e3779b97f4a7c15_u64;
        let mut rand01 = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            let alpha = 1e-4 + 0.2 * rand01();
            let gamma = 1e-3 + 5.0 * rand01();
            let mu = 1e-3 + 5.0 * rand01();
            let p = params(alpha, 0.1, mu);
            if let Ok(s) = solve_s(&p, gamma) {
                let residual = (s * s - alpha * ((1.0 - s) * gamma + s * mu)).abs();
                assert!(residual < RESIDUAL_TOL, "residual {residual} too large");
            }
        }
    }

    #[test]
    fn solve_s_reports_root_outside_unit_interval() {
        // huge alpha pushes the root past 1
        let p = ScheduleParams {
            alpha: 5.0,
            beta: 0.1,
            mu: 1.0,
            lipschitz: f64::INFINITY,
        };
        assert!(matches!(
            solve_s(&p, 1.0),
            Err(AmwuError::NoRootInUnitInterval { .. })
        ));
    }

    #[test]
    fn stationary_values_match_closed_forms() {
        let p = params(0.01, 0.1, 1.0);
        let (s, gamma) = stationary_values(&p);
        assert_abs_diff_eq!(s, 0.0661895, epsilon = 1e-6);
        assert_abs_diff_eq!(gamma, 0.3982772692, epsilon = 1e-9);
        // gamma* collapses to s* / (s* + beta)
        assert_abs_diff_eq!(gamma, s / (s + 0.1), epsilon = 1e-14);

        let p = params(0.01, 0.1, 0.2);
        let (s, gamma) = stationary_values(&p);
        assert_abs_diff_eq!(s, 0.0185566, epsilon = 1e-6);
        assert_abs_diff_eq!(gamma, 0.1565208, epsilon = 1e-6);
    }

    #[test]
    fn stationary_s_decreases_in_beta() {
        let s1 = stationary_values(&params(0.01, 1.0, 1.0)).0;
        let s100 = stationary_values(&params(0.01, 100.0, 1.0)).0;
        assert!(s100 < s1);
    }

    #[test]
    fn gamma_fixed_point_is_invariant_under_advance() {
        for (alpha, beta, mu) in [(0.01, 0.1, 1.0), (0.01, 0.1, 0.2), (0.001, 0.001, 0.5)] {
            let p = params(alpha, beta, mu);
            let (s_star, _) = stationary_values(&p);
            let gamma_fp = stationary_gamma_fixed_point(&p);
            let state = ScheduleState::init(&p, gamma_fp).unwrap();
            assert_abs_diff_eq!(state.s, s_star, epsilon = 1e-10);
            let next = advance(&p, &state).unwrap();
            assert_abs_diff_eq!(next.gamma, gamma_fp, epsilon = 1e-10);
            assert_abs_diff_eq!(next.s, s_star, epsilon = 1e-10);
        }
    }

    #[test]
    fn closed_form_gamma_is_the_fixed_point_at_mu_one() {
        let p = params(0.01, 0.1, 1.0);
        let (s_star, gamma_star) = stationary_values(&p);
        let state = ScheduleState::init(&p, gamma_star).unwrap();
        assert_abs_diff_eq!(state.s, s_star, epsilon = 1e-10);
        let next = advance(&p, &state).unwrap();
        assert_abs_diff_eq!(next.gamma, gamma_star, epsilon = 1e-10);
    }

    #[test]
    fn schedule_constant_when_beta_zero_and_gamma_equals_mu() {
        let p = params(0.01, 0.0, 0.7);
        let mut state = ScheduleState::default_init(&p).unwrap();
        assert_abs_diff_eq!(state.s, (0.01_f64 * 0.7).sqrt(), epsilon = 1e-14);
        for _ in 0..50 {
            state = advance(&p, &state).unwrap();
            assert_abs_diff_eq!(state.gamma, 0.7, epsilon = 1e-13);
            assert_abs_diff_eq!(state.s, (0.01_f64 * 0.7).sqrt(), epsilon = 1e-13);
        }
    }

    #[test]
    fn gamma_converges_monotonically_from_one() {
        let p = params(0.01, 0.1, 1.0);
        let (_, gamma_star) = stationary_values(&p);
        let mut state = ScheduleState::init(&p, 1.0).unwrap();
        let mut prev = state.gamma;
        for _ in 0..200 {
            state = advance(&p, &state).unwrap();
            assert!(state.gamma <= prev + 1e-15, "gamma not monotone");
            assert!(state.gamma > 0.0);
            prev = state.gamma;
        }
        assert_abs_diff_eq!(state.gamma, gamma_star, epsilon = 1e-10);
    }

    #[test]
    fn derived_coefficients_in_unit_interval() {
        for (alpha, beta, mu) in [
            (0.01, 0.1, 0.5),
            (0.001, 0.001, 0.001),
            (0.005, 0.1, 0.2),
            (0.04, 2.0, 0.9),
        ] {
            let p = params(alpha, beta, mu);
            let c = DerivedCoefficients::stationary(&p);
            assert!(c.theta > 0.0 && c.theta < 1.0, "theta = {}", c.theta);
            assert!(c.zeta > 0.0 && c.zeta < 1.0, "zeta = {}", c.zeta);
        }
    }

    #[test]
    fn admissible_step_bound_arithmetic() {
        let b = admissible_step_bound(0.1, 0.5, 10.0);
        assert_abs_diff_eq!(b.value, 0.1, epsilon = 1e-15);
        assert!(!b.mu_warning);

        let b = admissible_step_bound(0.1, 0.5, f64::INFINITY);
        assert_abs_diff_eq!(b.value, 1.15 / 0.55, epsilon = 1e-12);

        let b = admissible_step_bound(0.1, 1.0, 10.0);
        assert!(b.mu_warning);
    }

    #[test]
    fn recommended_beta_arithmetic() {
        assert_abs_diff_eq!(recommended_beta(1.0, 25.0), 0.04, epsilon = 1e-15);
        assert_abs_diff_eq!(recommended_beta(1.0, 1.0), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(recommended_beta(0.2, 0.2), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn admissible_alpha_yields_theta_below_one() {
        // grid check over (alpha, beta, mu): the appendix bound implies theta < 1
        for i in 1..=10 {
            for j in 1..=10 {
                for k in 1..=10 {
                    let beta = 1e-3 * 10f64.powf(4.0 * (i as f64 - 1.0) / 9.0);
                    let mu = 0.02 + 0.96 * (j as f64 - 1.0) / 9.0;
                    let bound = admissible_step_bound(beta, mu, f64::INFINITY).value;
                    let alpha = bound * (0.05 + 0.9 * (k as f64 - 1.0) / 9.0);
                    let p = params(alpha, beta, mu);
                    let c = DerivedCoefficients::stationary(&p);
                    assert!(c.theta < 1.0, "theta = {} at ({alpha},{beta},{mu})", c.theta);
                }
            }
        }
    }
}
