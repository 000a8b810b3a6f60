//! Fixed-point stability analysis of the accelerated update at critical
//! points: the tangent-restricted Hessian spectrum, the block Jacobian of
//! the update map, its quadratic characteristic factors, the instability
//! certificate for strict saddles, and a finite-difference validation of
//! the analytic Jacobian against the actual step function.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{AmwuError, Result};
use crate::geometry::{product_exp, product_log, ProductPoint, ProductTangent, SimplexPoint, TangentVector};
use crate::objectives::{CriticalPointEntry, Objective};
use crate::schedule::DerivedCoefficients;

/// Gradient-norm threshold below which a point counts as critical.
pub const CRITICAL_TOL: f64 = 1e-9;

/// Margin by which the larger root must exceed 1 to certify instability.
pub const INSTABILITY_MARGIN: f64 = 1e-12;

/// Orthonormal tangent basis at `x` under the Shahshahani metric: a
/// `d x (d-1)` matrix `B` with sum-zero columns and `B^T G B = I`,
/// `G = diag(1/x_i)`.
pub fn tangent_basis(x: &SimplexPoint) -> DMatrix<f64> {
    let d = x.dim();
    // columns e_k - e_d span the tangent space
    let mut t = DMatrix::zeros(d, d - 1);
    for k in 0..d - 1 {
        t[(k, k)] = 1.0;
        t[(d - 1, k)] = -1.0;
    }
    let g = DMatrix::from_diagonal(&DVector::from_iterator(
        d,
        x.weights().iter().map(|w| 1.0 / w),
    ));
    let w = t.transpose() * &g * &t;
    let chol = w.cholesky().expect("Gram matrix of a basis is positive definite");
    let l_inv_t = chol
        .l()
        .transpose()
        .try_inverse()
        .expect("triangular factor is invertible");
    t * l_inv_t
}

/// Block-diagonal tangent basis on a product of simplices: `D x m` with
/// `m = sum (d_i - 1)`.
pub fn product_tangent_basis(x: &ProductPoint) -> DMatrix<f64> {
    let total = x.total_dim();
    let m: usize = x.blocks().iter().map(|b| b.dim() - 1).sum();
    let mut out = DMatrix::zeros(total, m);
    let (mut row, mut col) = (0, 0);
    for block in x.blocks() {
        let b = tangent_basis(block);
        out.view_mut((row, col), (block.dim(), block.dim() - 1))
            .copy_from(&b);
        row += block.dim();
        col += block.dim() - 1;
    }
    out
}

/// Maps orthonormal tangent-chart coordinates to a point:
/// `Exp_x(B delta)` with `B` from [`product_tangent_basis`].
pub fn chart_point(x: &ProductPoint, basis: &DMatrix<f64>, delta: &[f64]) -> Result<ProductPoint> {
    let ambient = basis * DVector::from_column_slice(delta);
    let mut blocks = Vec::with_capacity(x.num_blocks());
    let mut offset = 0;
    for &d in &x.block_dims() {
        blocks.push(TangentVector::from_centered(
            &ambient.as_slice()[offset..offset + d],
        ));
        offset += d;
    }
    product_exp(x, &ProductTangent::new(blocks))
}

fn require_critical(obj: &Objective, x_star: &ProductPoint) -> Result<()> {
    let grad_norm = obj.riemannian_grad_norm(x_star)?;
    if grad_norm >= CRITICAL_TOL {
        return Err(AmwuError::NotCritical {
            grad_norm,
            tol: CRITICAL_TOL,
        });
    }
    Ok(())
}

/// Eigenvalues of the Hessian restricted to the tangent space, computed in
/// the metric-orthonormal basis: `eig(B^T H B)`, ascending. One value per
/// tangent dimension.
pub fn riemannian_hessian_eigs(obj: &Objective, x_star: &ProductPoint) -> Result<Vec<f64>> {
    require_critical(obj, x_star)?;
    let b = product_tangent_basis(x_star);
    let h = obj.euclidean_hess(x_star);
    let mut m = b.transpose() * h * &b;
    // symmetrize away rounding before the symmetric eigensolver
    let mt = m.transpose();
    m = (m + mt) * 0.5;
    let mut eigs: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(eigs)
}

/// The `2d x 2d` Jacobian of the update map at a fixed point, assembled
/// over `H = diag(lambda_i)` from the mixing coefficients:
///
/// ```text
/// [ (1-theta)(I - alpha H)                     theta (I - alpha H)                  ]
/// [ (1-theta)((1-zeta) I - (s/gbar) H)         ((1-zeta) theta + zeta) I - (s theta / gbar) H ]
/// ```
pub fn assemble_jacobian(eigs: &[f64], coeffs: &DerivedCoefficients) -> DMatrix<f64> {
    let d = eigs.len();
    let h = DMatrix::from_diagonal(&DVector::from_column_slice(eigs));
    assemble_jacobian_over(&h, coeffs, d)
}

fn assemble_jacobian_over(h: &DMatrix<f64>, c: &DerivedCoefficients, d: usize) -> DMatrix<f64> {
    let eye = DMatrix::identity(d, d);
    let a11 = (&eye - h * c.alpha) * (1.0 - c.theta);
    let a12 = (&eye - h * c.alpha) * c.theta;
    let a21 = (&eye * (1.0 - c.zeta) - h * (c.s / c.gamma_bar)) * (1.0 - c.theta);
    let a22 = &eye * ((1.0 - c.zeta) * c.theta + c.zeta) - h * (c.s * c.theta / c.gamma_bar);
    let mut j = DMatrix::zeros(2 * d, 2 * d);
    j.view_mut((0, 0), (d, d)).copy_from(&a11);
    j.view_mut((0, d), (d, d)).copy_from(&a12);
    j.view_mut((d, 0), (d, d)).copy_from(&a21);
    j.view_mut((d, d), (d, d)).copy_from(&a22);
    j
}

/// Roots of one quadratic characteristic factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FactorRoots {
    /// Two real roots, smaller first.
    Real(f64, f64),
    /// Complex conjugate pair `re +/- i im`.
    Complex { re: f64, im: f64 },
}

/// One factor `g_i(x) = x^2 + b_i x + c_i` of the Jacobian's characteristic
/// polynomial, for Hessian eigenvalue `lambda_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFactor {
    pub lambda: f64,
    pub b: f64,
    pub c: f64,
    pub discriminant: f64,
    pub roots: FactorRoots,
}

impl QuadraticFactor {
    /// The larger real root, if the roots are real.
    pub fn larger_root(&self) -> Option<f64> {
        match self.roots {
            FactorRoots::Real(_, hi) => Some(hi),
            FactorRoots::Complex { .. } => None,
        }
    }

    /// Largest root modulus.
    pub fn spectral_radius(&self) -> f64 {
        match self.roots {
            FactorRoots::Real(lo, hi) => lo.abs().max(hi.abs()),
            FactorRoots::Complex { re, im } => (re * re + im * im).sqrt(),
        }
    }

    pub fn roots_complex(&self) -> [Complex<f64>; 2] {
        match self.roots {
            FactorRoots::Real(lo, hi) => [Complex::new(lo, 0.0), Complex::new(hi, 0.0)],
            FactorRoots::Complex { re, im } => [Complex::new(re, -im), Complex::new(re, im)],
        }
    }
}

/// Coefficients and roots of the factor for eigenvalue `lambda`:
/// `b = (alpha (1-theta) + s theta / gbar) lambda - zeta (1-theta) - 1`,
/// `c = zeta (1-theta) (1 - alpha lambda)`.
pub fn quadratic_factor(lambda: f64, coeffs: &DerivedCoefficients) -> QuadraticFactor {
    let c = coeffs;
    let b_i = (c.alpha * (1.0 - c.theta) + c.s * c.theta / c.gamma_bar) * lambda
        - c.zeta * (1.0 - c.theta)
        - 1.0;
    let c_i = c.zeta * (1.0 - c.theta) * (1.0 - c.alpha * lambda);
    let disc = b_i * b_i - 4.0 * c_i;
    let roots = if disc >= 0.0 {
        let sq = disc.sqrt();
        // larger-magnitude root first via the q-form, partner from c/q
        let q = -0.5 * (b_i + b_i.signum() * sq);
        let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q, c_i / q) };
        FactorRoots::Real(r1.min(r2), r1.max(r2))
    } else {
        FactorRoots::Complex {
            re: -b_i / 2.0,
            im: (-disc).sqrt() / 2.0,
        }
    };
    QuadraticFactor {
        lambda,
        b: b_i,
        c: c_i,
        discriminant: disc,
        roots,
    }
}

/// Instability certificate for a strict saddle under a given schedule.
#[derive(Debug, Clone, Copy)]
pub struct InstabilityReport {
    /// True when the larger root of the factor for `lambda_min` exceeds
    /// `1 + 1e-12`.
    pub unstable: bool,
    /// The larger root (or root modulus if complex).
    pub max_eig: f64,
    pub factor: QuadraticFactor,
    /// The sufficient inequality `-b(c+1) + (c+1)^2 > -b^2 c`.
    pub ineq_step_holds: bool,
    /// The equivalent sufficient condition `c > 0`.
    pub c_positive: bool,
}

/// Certifies that the update map is unstable at a strict saddle: the factor
/// for the most negative Hessian eigenvalue has a real root above 1.
pub fn certify_unstable(
    entry: &CriticalPointEntry,
    coeffs: &DerivedCoefficients,
) -> Result<InstabilityReport> {
    let lambda_min = entry.lambda_min();
    if lambda_min >= 0.0 {
        return Err(AmwuError::NotSaddle { lambda_min });
    }
    let factor = quadratic_factor(lambda_min, coeffs);
    let (b, c) = (factor.b, factor.c);
    let ineq_step_holds = -b * (c + 1.0) + (c + 1.0) * (c + 1.0) > -b * b * c;
    let unstable = factor
        .larger_root()
        .is_some_and(|r| r > 1.0 + INSTABILITY_MARGIN);
    Ok(InstabilityReport {
        unstable,
        max_eig: factor.larger_root().unwrap_or_else(|| factor.spectral_radius()),
        factor,
        ineq_step_holds,
        c_positive: c > 0.0,
    })
}

/// Jacobian of the chart-represented gradient field at a critical point:
/// `B^T G P0 H (X - x x^T) B`, the matrix the actual step linearizes over
/// in tangent coordinates. Similar to `B^T H B`, so the spectra coincide.
pub fn gradient_field_jacobian(obj: &Objective, x_star: &ProductPoint) -> Result<DMatrix<f64>> {
    require_critical(obj, x_star)?;
    let total = x_star.total_dim();
    let hess = obj.euclidean_hess(x_star);
    let b = product_tangent_basis(x_star);

    // blockwise J = X - x x^T and centering P0
    let mut j = DMatrix::zeros(total, total);
    let mut p0 = DMatrix::zeros(total, total);
    let mut offset = 0;
    for block in x_star.blocks() {
        let d = block.dim();
        for i in 0..d {
            for k in 0..d {
                let xi = block.weights()[i];
                let xk = block.weights()[k];
                j[(offset + i, offset + k)] = if i == k { xi - xi * xk } else { -xi * xk };
                p0[(offset + i, offset + k)] =
                    if i == k { 1.0 - 1.0 / d as f64 } else { -1.0 / d as f64 };
            }
        }
        offset += d;
    }
    let g = DMatrix::from_diagonal(&DVector::from_iterator(
        total,
        x_star.flatten().iter().map(|w| 1.0 / w),
    ));
    Ok(b.transpose() * g * p0 * hess * j * b)
}

/// Validates the analytic block Jacobian against central finite differences
/// of one frozen-schedule exp/log step around `(x*, x*)`, both expressed in
/// the metric-orthonormal tangent chart. Returns the max absolute entrywise
/// deviation.
pub fn numerical_jacobian_check(
    obj: &Objective,
    x_star: &ProductPoint,
    coeffs: &DerivedCoefficients,
    h: f64,
) -> Result<f64> {
    require_critical(obj, x_star)?;
    let basis = product_tangent_basis(x_star);
    let m = basis.ncols();

    let field = gradient_field_jacobian(obj, x_star)?;
    let analytic = assemble_jacobian_over(&field, coeffs, m);

    let block_dims = x_star.block_dims();
    let chart = |delta: &[f64]| -> Result<ProductPoint> {
        let ambient = &basis * DVector::from_column_slice(delta);
        let mut blocks = Vec::with_capacity(block_dims.len());
        let mut offset = 0;
        for &d in &block_dims {
            blocks.push(TangentVector::from_centered(
                &ambient.as_slice()[offset..offset + d],
            ));
            offset += d;
        }
        product_exp(x_star, &ProductTangent::new(blocks))
    };
    let readback = |p: &ProductPoint| -> Result<Vec<f64>> {
        let logv = product_log(x_star, p)?;
        let flat: Vec<f64> = logv
            .blocks()
            .iter()
            .flat_map(|b| b.components().iter().copied())
            .collect();
        let weighted: Vec<f64> = flat
            .iter()
            .zip(x_star.flatten())
            .map(|(u, x)| u / x)
            .collect();
        let delta = basis.transpose() * DVector::from_column_slice(&weighted);
        Ok(delta.as_slice().to_vec())
    };

    let shared = vec![*coeffs; x_star.num_blocks()];
    let step = |delta: &[f64]| -> Result<Vec<f64>> {
        let x = chart(&delta[..m])?;
        let v = chart(&delta[m..])?;
        let (_, x_next, v_next) = crate::algorithms::ragd_update(&x, &v, obj, &shared)?;
        let mut out = readback(&x_next)?;
        out.extend(readback(&v_next)?);
        Ok(out)
    };

    let mut worst = 0.0_f64;
    let mut delta = vec![0.0; 2 * m];
    for j in 0..2 * m {
        delta[j] = h;
        let plus = step(&delta)?;
        delta[j] = -h;
        let minus = step(&delta)?;
        delta[j] = 0.0;
        for i in 0..2 * m {
            let fd = (plus[i] - minus[i]) / (2.0 * h);
            worst = worst.max((fd - analytic[(i, j)]).abs());
        }
    }
    Ok(worst)
}
