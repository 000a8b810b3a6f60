//! Benchmark objectives on products of simplices, with analytic gradients
//! and Hessians, a finite-difference checker, and a critical-point search.
//!
//! The three-variable functions carry an `x + y + z - 1` term so they are
//! defined on all of R^3; on the simplex the term vanishes and the functions
//! reduce to their usual two-variable forms.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{AmwuError, Result};
use crate::geometry::{product_gradient_norm, ProductPoint, SimplexPoint};
use crate::spectral;

type EvalFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type HessFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// A smooth objective on a product of simplices. Evaluation takes flattened
/// ambient coordinates so finite differences can step off the simplex.
#[derive(Clone)]
pub struct Objective {
    name: String,
    block_dims: Vec<usize>,
    eval: Arc<EvalFn>,
    grad: Arc<GradFn>,
    hess: Option<Arc<HessFn>>,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("name", &self.name)
            .field("block_dims", &self.block_dims)
            .field("has_hessian", &self.hess.is_some())
            .finish()
    }
}

impl Objective {
    pub fn new(
        name: impl Into<String>,
        block_dims: Vec<usize>,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            block_dims,
            eval: Arc::new(eval),
            grad: Arc::new(grad),
            hess: None,
        }
    }

    pub fn with_hessian(
        mut self,
        hess: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.hess = Some(Arc::new(hess));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn total_dim(&self) -> usize {
        self.block_dims.iter().sum()
    }

    pub fn matches_shape(&self, point: &ProductPoint) -> Result<()> {
        if point.block_dims() != self.block_dims {
            return Err(AmwuError::ShapeMismatch {
                expected: self.block_dims.clone(),
                got: point.block_dims(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, point: &ProductPoint) -> f64 {
        (self.eval)(&point.flatten())
    }

    pub fn eval_flat(&self, coords: &[f64]) -> f64 {
        (self.eval)(coords)
    }

    pub fn grad_flat(&self, coords: &[f64]) -> Vec<f64> {
        (self.grad)(coords)
    }

    /// Euclidean gradient split per block.
    pub fn euclidean_grad(&self, point: &ProductPoint) -> Vec<Vec<f64>> {
        let flat = self.grad_flat(&point.flatten());
        let mut out = Vec::with_capacity(self.block_dims.len());
        let mut offset = 0;
        for &d in &self.block_dims {
            out.push(flat[offset..offset + d].to_vec());
            offset += d;
        }
        out
    }

    /// Analytic Hessian when available, otherwise central finite differences
    /// of the analytic gradient.
    pub fn euclidean_hess(&self, point: &ProductPoint) -> DMatrix<f64> {
        let coords = point.flatten();
        match &self.hess {
            Some(h) => h(&coords),
            None => self.fd_hessian(&coords, 1e-6),
        }
    }

    pub fn has_analytic_hessian(&self) -> bool {
        self.hess.is_some()
    }

    /// Central finite differences of the analytic gradient.
    pub fn fd_hessian(&self, coords: &[f64], h: f64) -> DMatrix<f64> {
        let n = coords.len();
        let mut m = DMatrix::zeros(n, n);
        let mut work = coords.to_vec();
        for j in 0..n {
            work[j] = coords[j] + h;
            let gp = self.grad_flat(&work);
            work[j] = coords[j] - h;
            let gm = self.grad_flat(&work);
            work[j] = coords[j];
            for i in 0..n {
                m[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        // symmetrize: FD noise breaks exact symmetry
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        m
    }

    /// Shahshahani norm of the Riemannian gradient at `point`.
    pub fn riemannian_grad_norm(&self, point: &ProductPoint) -> Result<f64> {
        product_gradient_norm(point, &self.euclidean_grad(point))
    }
}

/// Max relative error between the analytic gradient and central finite
/// differences with step `h`, over all coordinates; the denominator is
/// `max(1, |analytic|)` so near-zero components are compared absolutely.
pub fn check_gradient(obj: &Objective, point: &ProductPoint, h: f64) -> f64 {
    let coords = point.flatten();
    let analytic = obj.grad_flat(&coords);
    let mut work = coords.clone();
    let mut worst = 0.0_f64;
    for j in 0..coords.len() {
        work[j] = coords[j] + h;
        let fp = obj.eval_flat(&work);
        work[j] = coords[j] - h;
        let fm = obj.eval_flat(&work);
        work[j] = coords[j];
        let fd = (fp - fm) / (2.0 * h);
        let err = (analytic[j] - fd).abs() / analytic[j].abs().max(1.0);
        worst = worst.max(err);
    }
    worst
}

/// How a catalogued critical point classifies by the sign pattern of its
/// tangent-restricted Hessian eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Min,
    StrictSaddle,
    Max,
    Degenerate,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Classification::Min => "min",
            Classification::StrictSaddle => "strict_saddle",
            Classification::Max => "max",
            Classification::Degenerate => "degenerate",
        };
        f.write_str(s)
    }
}

/// Eigenvalue threshold separating signed from degenerate directions.
pub const CLASSIFY_EIG_TOL: f64 = 1e-9;

pub fn classify_eigs(eigs: &[f64]) -> Classification {
    if eigs.iter().any(|e| e.abs() <= CLASSIFY_EIG_TOL) {
        Classification::Degenerate
    } else if eigs.iter().all(|e| *e > 0.0) {
        Classification::Min
    } else if eigs.iter().all(|e| *e < 0.0) {
        Classification::Max
    } else {
        Classification::StrictSaddle
    }
}

/// A refined critical point with its tangent Hessian spectrum.
#[derive(Debug, Clone)]
pub struct CriticalPointEntry {
    pub point: ProductPoint,
    /// Eigenvalues of the tangent-restricted Hessian, ascending.
    pub hessian_eigs: Vec<f64>,
    pub classification: Classification,
}

impl CriticalPointEntry {
    pub fn lambda_min(&self) -> f64 {
        self.hessian_eigs[0]
    }
}

/// Result of a critical-point search: refined entries plus the indices of
/// seeds whose refinement did not converge.
#[derive(Debug, Clone, Default)]
pub struct CriticalPointSearch {
    pub entries: Vec<CriticalPointEntry>,
    pub nonconverged_seeds: Vec<usize>,
}

impl CriticalPointSearch {
    pub fn strict_saddles(&self) -> impl Iterator<Item = &CriticalPointEntry> {
        self.entries
            .iter()
            .filter(|e| e.classification == Classification::StrictSaddle)
    }
}

const INTERIOR_FLOOR: f64 = 1e-9;
const DEDUP_TOL: f64 = 1e-6;

/// Reduced coordinates: drop the last coordinate of each block. Returns the
/// flattened indices that remain free and the per-block last indices.
fn reduced_indexing(block_dims: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut free = Vec::new();
    let mut last = Vec::new();
    let mut offset = 0;
    for &d in block_dims {
        for k in 0..d - 1 {
            free.push(offset + k);
        }
        last.push(offset + d - 1);
        offset += d;
    }
    (free, last)
}

fn block_of(flat_index: usize, block_dims: &[usize]) -> usize {
    let mut offset = 0;
    for (b, &d) in block_dims.iter().enumerate() {
        if flat_index < offset + d {
            return b;
        }
        offset += d;
    }
    unreachable!("index out of range")
}

/// Gradient and Hessian of f in the reduced parameterization where the last
/// coordinate of each block is eliminated via the sum-to-one constraint.
fn reduced_system(
    obj: &Objective,
    coords: &[f64],
    free: &[usize],
    last: &[usize],
) -> (Vec<f64>, DMatrix<f64>) {
    let g = obj.grad_flat(coords);
    let h = match &obj.hess {
        Some(hf) => hf(coords),
        None => obj.fd_hessian(coords, 1e-6),
    };
    let dims = obj.block_dims();
    let m = free.len();
    let mut rg = vec![0.0; m];
    let mut rh = DMatrix::zeros(m, m);
    for (a, &ia) in free.iter().enumerate() {
        let la = last[block_of(ia, dims)];
        rg[a] = g[ia] - g[la];
        for (b, &ib) in free.iter().enumerate() {
            let lb = last[block_of(ib, dims)];
            rh[(a, b)] = h[(ia, ib)] - h[(ia, lb)] - h[(la, ib)] + h[(la, lb)];
        }
    }
    (rg, rh)
}

fn coords_to_point(coords: &[f64], block_dims: &[usize]) -> Result<ProductPoint> {
    let mut blocks = Vec::with_capacity(block_dims.len());
    let mut offset = 0;
    for &d in block_dims {
        blocks.push(SimplexPoint::normalized(coords[offset..offset + d].to_vec())?);
        offset += d;
    }
    ProductPoint::new(blocks)
}

/// Damped Newton refinement of one seed in reduced coordinates. Converged
/// when the Shahshahani gradient norm drops below `tol`.
fn refine_seed(obj: &Objective, seed: &ProductPoint, tol: f64) -> Option<ProductPoint> {
    let dims = obj.block_dims().to_vec();
    let (free, last) = reduced_indexing(&dims);
    let mut coords = seed.flatten();
    let mut stalled = 0;

    for _ in 0..100 {
        let point = coords_to_point(&coords, &dims).ok()?;
        if obj.riemannian_grad_norm(&point).ok()? < tol {
            return Some(point);
        }
        let (rg, rh) = reduced_system(obj, &coords, &free, &last);
        let rhs = nalgebra::DVector::from_vec(rg.clone());
        let delta = rh.lu().solve(&rhs)?;
        if delta.iter().any(|d| !d.is_finite()) {
            return None;
        }
        let grad_norm: f64 = rg.iter().map(|v| v * v).sum::<f64>().sqrt();

        // backtrack to stay interior and decrease the reduced gradient
        let mut step = 1.0_f64;
        let mut accepted = false;
        for _ in 0..50 {
            let mut cand = coords.clone();
            for (a, &ia) in free.iter().enumerate() {
                cand[ia] = coords[ia] - step * delta[a];
            }
            for (&la, &db) in last.iter().zip(&dims) {
                let start = la + 1 - db;
                let head: f64 = cand[start..la].iter().sum();
                cand[la] = 1.0 - head;
            }
            let interior = cand.iter().all(|c| *c > INTERIOR_FLOOR);
            if interior {
                let (cg, _) = reduced_system(obj, &cand, &free, &last);
                let cand_norm: f64 = cg.iter().map(|v| v * v).sum::<f64>().sqrt();
                if cand_norm < grad_norm || step < 1e-8 {
                    stalled = if cand_norm < 0.5 * grad_norm { 0 } else { stalled + 1 };
                    coords = cand;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted || stalled > 8 {
            break;
        }
    }
    let point = coords_to_point(&coords, &dims).ok()?;
    (obj.riemannian_grad_norm(&point).ok()? < tol).then_some(point)
}

/// Refines each seed to a critical point, de-duplicates, and classifies by
/// the tangent-restricted Hessian spectrum.
pub fn find_critical_points(
    obj: &Objective,
    seeds: &[ProductPoint],
    tol: f64,
) -> Result<CriticalPointSearch> {
    let mut search = CriticalPointSearch::default();
    for (idx, seed) in seeds.iter().enumerate() {
        obj.matches_shape(seed)?;
        let Some(point) = refine_seed(obj, seed, tol) else {
            search.nonconverged_seeds.push(idx);
            continue;
        };
        let flat = point.flatten();
        let duplicate = search.entries.iter().any(|e| {
            e.point
                .flatten()
                .iter()
                .zip(&flat)
                .all(|(a, b)| (a - b).abs() < DEDUP_TOL)
        });
        if duplicate {
            continue;
        }
        let eigs = spectral::riemannian_hessian_eigs(obj, &point)?;
        let classification = classify_eigs(&eigs);
        search.entries.push(CriticalPointEntry {
            point,
            hessian_eigs: eigs,
            classification,
        });
    }
    Ok(search)
}

/// Uniform interior seed grid on a product of simplices: `per_axis` points
/// per free coordinate of each block, cartesian across blocks.
pub fn simplex_grid_seeds(block_dims: &[usize], per_axis: usize) -> Vec<ProductPoint> {
    fn block_grid(d: usize, per_axis: usize) -> Vec<SimplexPoint> {
        let ticks: Vec<f64> = (1..=per_axis)
            .map(|i| 0.04 + 0.92 * (i as f64 - 1.0) / (per_axis as f64 - 1.0).max(1.0))
            .collect();
        let mut out = Vec::new();
        let mut idx = vec![0usize; d - 1];
        loop {
            let head: Vec<f64> = idx.iter().map(|&i| ticks[i]).collect();
            let head_sum: f64 = head.iter().sum();
            if head_sum < 0.96 + 1e-9 {
                let mut w = head;
                w.push(1.0 - head_sum);
                if let Ok(p) = SimplexPoint::new(w) {
                    out.push(p);
                }
            }
            // odometer over the (d-1) free coordinates
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] < per_axis {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == d - 1 {
                    return out;
                }
            }
        }
    }

    let grids: Vec<Vec<SimplexPoint>> = block_dims
        .iter()
        .map(|&d| block_grid(d, per_axis))
        .collect();
    let mut out: Vec<Vec<SimplexPoint>> = vec![Vec::new()];
    for grid in &grids {
        let mut next = Vec::with_capacity(out.len() * grid.len());
        for partial in &out {
            for p in grid {
                let mut with = partial.clone();
                with.push(p.clone());
                next.push(with);
            }
        }
        out = next;
    }
    out.into_iter()
        .map(|blocks| ProductPoint::new(blocks).expect("grid blocks are valid"))
        .collect()
}

/// The five benchmark objectives: a Rosenbrock variant, a Bohachevsky
/// variant, two trigonometric functions rich in saddle points, and a
/// separately-oscillating two-agent function on a product of 1-simplices.
pub fn make_corpus() -> Vec<Objective> {
    vec![rosenbrock(), bohachevsky(), trig1(), trig2(), two_agent()]
}

/// Corpus lookup by name.
pub fn by_name(name: &str) -> Option<Objective> {
    match name {
        "rosenbrock" => Some(rosenbrock()),
        "bohachevsky" => Some(bohachevsky()),
        "trig1" => Some(trig1()),
        "trig2" => Some(trig2()),
        "two_agent" => Some(two_agent()),
        _ => None,
    }
}

/// `(0.5 - x)^2 + 0.25 (y - x^2)^2 + x + y + z - 1` on the 2-simplex.
pub fn rosenbrock() -> Objective {
    Objective::new(
        "rosenbrock",
        vec![3],
        |p| (0.5 - p[0]).powi(2) + 0.25 * (p[1] - p[0] * p[0]).powi(2) + p[0] + p[1] + p[2] - 1.0,
        |p| {
            vec![
                -2.0 * (0.5 - p[0]) - p[0] * (p[1] - p[0] * p[0]) + 1.0,
                0.5 * (p[1] - p[0] * p[0]) + 1.0,
                1.0,
            ]
        },
    )
    .with_hessian(|p| {
        let mut h = DMatrix::zeros(3, 3);
        h[(0, 0)] = 2.0 - p[1] + 3.0 * p[0] * p[0];
        h[(0, 1)] = -p[0];
        h[(1, 0)] = -p[0];
        h[(1, 1)] = 0.5;
        h
    })
}

/// `x^2 + 2y^2 - 0.3 cos(3 pi x) - 0.4 cos(4 pi y) + x + y + z - 1` on the
/// 2-simplex.
pub fn bohachevsky() -> Objective {
    Objective::new(
        "bohachevsky",
        vec![3],
        |p| {
            p[0] * p[0] + 2.0 * p[1] * p[1]
                - 0.3 * (3.0 * PI * p[0]).cos()
                - 0.4 * (4.0 * PI * p[1]).cos()
                + p[0] + p[1] + p[2] - 1.0
        },
        |p| {
            vec![
                2.0 * p[0] + 0.9 * PI * (3.0 * PI * p[0]).sin() + 1.0,
                4.0 * p[1] + 1.6 * PI * (4.0 * PI * p[1]).sin() + 1.0,
                1.0,
            ]
        },
    )
    .with_hessian(|p| {
        let mut h = DMatrix::zeros(3, 3);
        h[(0, 0)] = 2.0 + 2.7 * PI * PI * (3.0 * PI * p[0]).cos();
        h[(1, 1)] = 4.0 + 6.4 * PI * PI * (4.0 * PI * p[1]).cos();
        h
    })
}

/// `cos(8.5 x) sin(8.5 (y - 0.4)) + sin(8.5 z)` on the 2-simplex.
pub fn trig1() -> Objective {
    const A: f64 = 8.5;
    Objective::new(
        "trig1",
        vec![3],
        |p| (A * p[0]).cos() * (A * (p[1] - 0.4)).sin() + (A * p[2]).sin(),
        |p| {
            vec![
                -A * (A * p[0]).sin() * (A * (p[1] - 0.4)).sin(),
                A * (A * p[0]).cos() * (A * (p[1] - 0.4)).cos(),
                A * (A * p[2]).cos(),
            ]
        },
    )
    .with_hessian(|p| {
        let a2 = A * A;
        let mut h = DMatrix::zeros(3, 3);
        h[(0, 0)] = -a2 * (A * p[0]).cos() * (A * (p[1] - 0.4)).sin();
        h[(0, 1)] = -a2 * (A * p[0]).sin() * (A * (p[1] - 0.4)).cos();
        h[(1, 0)] = h[(0, 1)];
        h[(1, 1)] = -a2 * (A * p[0]).cos() * (A * (p[1] - 0.4)).sin();
        h[(2, 2)] = -a2 * (A * p[2]).sin();
        h
    })
}

/// `cos(0.7 x) sin(y) sin(0.9 z) + x^2` on the 2-simplex.
pub fn trig2() -> Objective {
    Objective::new(
        "trig2",
        vec![3],
        |p| (0.7 * p[0]).cos() * p[1].sin() * (0.9 * p[2]).sin() + p[0] * p[0],
        |p| {
            vec![
                -0.7 * (0.7 * p[0]).sin() * p[1].sin() * (0.9 * p[2]).sin() + 2.0 * p[0],
                (0.7 * p[0]).cos() * p[1].cos() * (0.9 * p[2]).sin(),
                0.9 * (0.7 * p[0]).cos() * p[1].sin() * (0.9 * p[2]).cos(),
            ]
        },
    )
    .with_hessian(|p| {
        let (cx, sx) = ((0.7 * p[0]).cos(), (0.7 * p[0]).sin());
        let (cy, sy) = (p[1].cos(), p[1].sin());
        let (cz, sz) = ((0.9 * p[2]).cos(), (0.9 * p[2]).sin());
        let mut h = DMatrix::zeros(3, 3);
        h[(0, 0)] = -0.49 * cx * sy * sz + 2.0;
        h[(0, 1)] = -0.7 * sx * cy * sz;
        h[(0, 2)] = -0.63 * sx * sy * cz;
        h[(1, 1)] = -cx * sy * sz;
        h[(1, 2)] = 0.9 * cx * cy * cz;
        h[(2, 2)] = -0.81 * cx * sy * sz;
        h[(1, 0)] = h[(0, 1)];
        h[(2, 0)] = h[(0, 2)];
        h[(2, 1)] = h[(1, 2)];
        h
    })
}

/// `cos(10 x1) sin(x2) + sin(10 y1) cos(y2)` on a product of two 1-simplices;
/// coordinates are flattened as `(x1, x2, y1, y2)`.
pub fn two_agent() -> Objective {
    Objective::new(
        "two_agent",
        vec![2, 2],
        |p| (10.0 * p[0]).cos() * p[1].sin() + (10.0 * p[2]).sin() * p[3].cos(),
        |p| {
            vec![
                -10.0 * (10.0 * p[0]).sin() * p[1].sin(),
                (10.0 * p[0]).cos() * p[1].cos(),
                10.0 * (10.0 * p[2]).cos() * p[3].cos(),
                -(10.0 * p[2]).sin() * p[3].sin(),
            ]
        },
    )
    .with_hessian(|p| {
        let mut h = DMatrix::zeros(4, 4);
        h[(0, 0)] = -100.0 * (10.0 * p[0]).cos() * p[1].sin();
        h[(0, 1)] = -10.0 * (10.0 * p[0]).sin() * p[1].cos();
        h[(1, 0)] = h[(0, 1)];
        h[(1, 1)] = -(10.0 * p[0]).cos() * p[1].sin();
        h[(2, 2)] = -100.0 * (10.0 * p[2]).sin() * p[3].cos();
        h[(2, 3)] = -10.0 * (10.0 * p[2]).cos() * p[3].sin();
        h[(3, 2)] = h[(2, 3)];
        h[(3, 3)] = -(10.0 * p[2]).sin() * p[3].cos();
        h
    })
}
