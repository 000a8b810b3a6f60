//! Shahshahani geometry of the positive simplex.
//!
//! Points are strictly positive weight vectors summing to one. Tangent
//! vectors sum to zero. The exponential map is a softmax reweighting of the
//! base point, the logarithmic map its inverse, and the multiplicative
//! weights update is the retraction of the projected gradient step.

use crate::error::{AmwuError, Result};

/// Tolerance on the sum-to-one / sum-to-zero invariants.
pub const SUM_TOL: f64 = 1e-12;

/// A point on the open probability simplex: strictly positive weights
/// summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    weights: Vec<f64>,
}

impl SimplexPoint {
    /// Validates positivity and the sum-to-one invariant.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(AmwuError::InvalidSimplexPoint(format!(
                "need at least 2 components, got {}",
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w <= 0.0) {
            return Err(AmwuError::InvalidSimplexPoint(format!(
                "component {w} is not strictly positive"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(AmwuError::InvalidSimplexPoint(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(Self { weights })
    }

    /// Divides by the exact sum, then validates. Accepts any strictly
    /// positive vector.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !sum.is_finite() || sum <= 0.0 {
            return Err(AmwuError::InvalidSimplexPoint(format!(
                "cannot normalize: sum is {sum}"
            )));
        }
        for w in &mut weights {
            *w /= sum;
        }
        Self::new(weights)
    }

    /// The barycenter (1/d, ..., 1/d).
    pub fn uniform(dim: usize) -> Self {
        Self {
            weights: vec![1.0 / dim as f64; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Max absolute componentwise difference.
    pub fn max_abs_diff(&self, other: &SimplexPoint) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// A tangent vector to the simplex: components sum to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    components: Vec<f64>,
}

impl TangentVector {
    /// Validates the sum-to-zero invariant.
    pub fn new(components: Vec<f64>) -> Result<Self> {
        let sum: f64 = components.iter().sum();
        if !sum.is_finite() || sum.abs() > SUM_TOL {
            return Err(AmwuError::InvalidTangentVector(format!(
                "components sum to {sum}, not 0"
            )));
        }
        Ok(Self { components })
    }

    /// Projects an arbitrary vector onto the tangent space by subtracting the
    /// componentwise mean. This is also how a Euclidean gradient is expressed
    /// in the chart `exp_map` operates in.
    pub fn from_centered(values: &[f64]) -> Self {
        let mean: f64 = values.iter().sum::<f64>() / values.len() as f64;
        Self {
            components: values.iter().map(|v| v - mean).collect(),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            components: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            components: self.components.iter().map(|c| c * factor).collect(),
        }
    }

    /// Componentwise `self + factor * other`.
    pub fn add_scaled(&self, other: &TangentVector, factor: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(AmwuError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(Self {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a + factor * b)
                .collect(),
        })
    }

    /// Shahshahani norm at the base point: sqrt(sum u_i^2 / x_i).
    pub fn shahshahani_norm(&self, base: &SimplexPoint) -> f64 {
        self.components
            .iter()
            .zip(base.weights())
            .map(|(u, x)| u * u / x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn euclidean_norm(&self) -> f64 {
        self.components.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

fn check_dim(x: &SimplexPoint, len: usize) -> Result<()> {
    if x.dim() != len {
        return Err(AmwuError::DimensionMismatch {
            expected: x.dim(),
            got: len,
        });
    }
    Ok(())
}

/// Riemannian gradient under the Shahshahani metric, in displacement form:
/// component i is `x_i (g_i - sum_j x_j g_j)`. Sums to zero by construction.
pub fn shahshahani_gradient(x: &SimplexPoint, euclidean_grad: &[f64]) -> Result<TangentVector> {
    check_dim(x, euclidean_grad.len())?;
    let weighted: f64 = x
        .weights()
        .iter()
        .zip(euclidean_grad)
        .map(|(xi, gi)| xi * gi)
        .sum();
    TangentVector::new(
        x.weights()
            .iter()
            .zip(euclidean_grad)
            .map(|(xi, gi)| xi * (gi - weighted))
            .collect(),
    )
}

/// Shahshahani norm of the Riemannian gradient at `x`.
pub fn gradient_norm(x: &SimplexPoint, euclidean_grad: &[f64]) -> Result<f64> {
    Ok(shahshahani_gradient(x, euclidean_grad)?.shahshahani_norm(x))
}

/// Exponential map: `Exp_x(u)_i = x_i e^{u_i} / sum_j x_j e^{u_j}`.
///
/// Evaluated with the max-component shift so the exponentials cannot
/// overflow; the output is strictly positive by construction.
pub fn exp_map(x: &SimplexPoint, u: &TangentVector) -> Result<SimplexPoint> {
    check_dim(x, u.dim())?;
    let shift = u.components().iter().fold(f64::NEG_INFINITY, |m, c| m.max(*c));
    let reweighted: Vec<f64> = x
        .weights()
        .iter()
        .zip(u.components())
        // floor at the smallest normal float so extreme reweightings stay
        // strictly positive instead of underflowing to the boundary
        .map(|(xi, ui)| (xi * (ui - shift).exp()).max(f64::MIN_POSITIVE))
        .collect();
    SimplexPoint::normalized(reweighted)
}

/// Logarithmic map, the inverse of `exp_map`: `u_i = ln(S y_i / x_i)` with
/// `S = (prod_i x_i / y_i)^{1/d}`. Computed as centered log-ratios, which is
/// the same formula with the normalizer folded into the mean.
pub fn log_map(x: &SimplexPoint, y: &SimplexPoint) -> Result<TangentVector> {
    check_dim(x, y.dim())?;
    let ratios: Vec<f64> = x
        .weights()
        .iter()
        .zip(y.weights())
        .map(|(xi, yi)| (yi / xi).ln())
        .collect();
    Ok(TangentVector::from_centered(&ratios))
}

/// The projected Riemannian gradient step as a displacement: the difference
/// between the multiplicative update of `x` and `x` itself,
/// `d_i = x_i (c - alpha g_i) / (1 - c)` with `c = alpha <x, g>`.
pub fn mwu_displacement(x: &SimplexPoint, euclidean_grad: &[f64], alpha: f64) -> Result<TangentVector> {
    check_dim(x, euclidean_grad.len())?;
    for g in euclidean_grad {
        if 1.0 - alpha * g <= 0.0 {
            return Err(AmwuError::StepTooLarge(format!(
                "1 - alpha * g = {} <= 0 for alpha = {alpha}, g = {g}",
                1.0 - alpha * g
            )));
        }
    }
    let c: f64 = alpha
        * x.weights()
            .iter()
            .zip(euclidean_grad)
            .map(|(xi, gi)| xi * gi)
            .sum::<f64>();
    let den = 1.0 - c;
    if den <= 0.0 {
        return Err(AmwuError::StepTooLarge(format!(
            "weighted denominator {den} <= 0 for alpha = {alpha}"
        )));
    }
    TangentVector::new(
        x.weights()
            .iter()
            .zip(euclidean_grad)
            .map(|(xi, gi)| xi * (c - alpha * gi) / den)
            .collect(),
    )
}

/// Multiplicative weights update:
/// `x_i (1 - alpha g_i) / (1 - alpha sum_j x_j g_j)`.
///
/// Implemented as `x + mwu_displacement(x, g, alpha)` so the update and the
/// projected Riemannian step share one code path, then renormalized by the
/// exact sum.
pub fn mwu_retract(x: &SimplexPoint, euclidean_grad: &[f64], alpha: f64) -> Result<SimplexPoint> {
    let d = mwu_displacement(x, euclidean_grad, alpha)?;
    let updated: Vec<f64> = x
        .weights()
        .iter()
        .zip(d.components())
        .map(|(xi, di)| xi + di)
        .collect();
    SimplexPoint::normalized(updated)
}

/// Fisher-Rao geodesic distance between simplex points:
/// `2 arccos(sum_i sqrt(x_i y_i))`.
pub fn fisher_rao_distance(x: &SimplexPoint, y: &SimplexPoint) -> f64 {
    let dot: f64 = x
        .weights()
        .iter()
        .zip(y.weights())
        .map(|(a, b)| (a * b).sqrt())
        .sum();
    2.0 * dot.clamp(-1.0, 1.0).acos()
}

/// A point on a product of simplices, one block per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductPoint {
    blocks: Vec<SimplexPoint>,
}

impl ProductPoint {
    pub fn new(blocks: Vec<SimplexPoint>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(AmwuError::InvalidSimplexPoint(
                "product point needs at least one block".into(),
            ));
        }
        Ok(Self { blocks })
    }

    pub fn single(point: SimplexPoint) -> Self {
        Self {
            blocks: vec![point],
        }
    }

    pub fn blocks(&self) -> &[SimplexPoint] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.dim()).collect()
    }

    /// Total ambient dimension, summed over blocks.
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum()
    }

    /// Concatenated coordinates in block order.
    pub fn flatten(&self) -> Vec<f64> {
        self.blocks
            .iter()
            .flat_map(|b| b.weights().iter().copied())
            .collect()
    }

    pub fn same_shape(&self, other: &ProductPoint) -> Result<()> {
        if self.block_dims() != other.block_dims() {
            return Err(AmwuError::ShapeMismatch {
                expected: self.block_dims(),
                got: other.block_dims(),
            });
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &ProductPoint) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn euclidean_distance(&self, other: &ProductPoint) -> f64 {
        self.flatten()
            .iter()
            .zip(other.flatten())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Product-metric Fisher-Rao distance: blockwise distances in quadrature.
    pub fn fisher_rao_distance(&self, other: &ProductPoint) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| {
                let d = fisher_rao_distance(a, b);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Tangent vector on a product of simplices, matching a `ProductPoint` shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductTangent {
    blocks: Vec<TangentVector>,
}

impl ProductTangent {
    pub fn new(blocks: Vec<TangentVector>) -> Self {
        Self { blocks }
    }

    pub fn zero_like(point: &ProductPoint) -> Self {
        Self {
            blocks: point.blocks().iter().map(|b| TangentVector::zero(b.dim())).collect(),
        }
    }

    pub fn blocks(&self) -> &[TangentVector] {
        &self.blocks
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            blocks: self.blocks.iter().map(|b| b.scale(factor)).collect(),
        }
    }

    /// Shahshahani norm under the product metric.
    pub fn shahshahani_norm(&self, base: &ProductPoint) -> f64 {
        self.blocks
            .iter()
            .zip(base.blocks())
            .map(|(u, x)| {
                let n = u.shahshahani_norm(x);
                n * n
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(|b| b.max_abs()).fold(0.0, f64::max)
    }
}

fn check_blocks(x: &ProductPoint, n: usize) -> Result<()> {
    if x.num_blocks() != n {
        return Err(AmwuError::ShapeMismatch {
            expected: x.block_dims(),
            got: vec![n],
        });
    }
    Ok(())
}

/// Blockwise exponential map on the product manifold.
pub fn product_exp(x: &ProductPoint, u: &ProductTangent) -> Result<ProductPoint> {
    check_blocks(x, u.blocks.len())?;
    let blocks = x
        .blocks()
        .iter()
        .zip(&u.blocks)
        .map(|(xb, ub)| exp_map(xb, ub))
        .collect::<Result<Vec<_>>>()?;
    ProductPoint::new(blocks)
}

/// Blockwise logarithmic map on the product manifold.
pub fn product_log(x: &ProductPoint, y: &ProductPoint) -> Result<ProductTangent> {
    x.same_shape(y)?;
    let blocks = x
        .blocks()
        .iter()
        .zip(y.blocks())
        .map(|(xb, yb)| log_map(xb, yb))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProductTangent::new(blocks))
}

/// Blockwise Shahshahani gradient; `euclidean_grads` holds one gradient
/// vector per block.
pub fn product_gradient(x: &ProductPoint, euclidean_grads: &[Vec<f64>]) -> Result<ProductTangent> {
    check_blocks(x, euclidean_grads.len())?;
    let blocks = x
        .blocks()
        .iter()
        .zip(euclidean_grads)
        .map(|(xb, gb)| shahshahani_gradient(xb, gb))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProductTangent::new(blocks))
}

/// Shahshahani norm of the Riemannian gradient on the product manifold.
pub fn product_gradient_norm(x: &ProductPoint, euclidean_grads: &[Vec<f64>]) -> Result<f64> {
    Ok(product_gradient(x, euclidean_grads)?.shahshahani_norm(x))
}
