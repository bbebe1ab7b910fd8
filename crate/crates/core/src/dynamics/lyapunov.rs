use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::map1d::Map1D;
use crate::cubic::CubicMatrix;
use crate::error::{Error, Result};
use crate::operator::{step, SimplexPoint};

const MIN_ITERS: usize = 1000;
const BATCHES: usize = 32;

/// Largest Lyapunov exponent, natural log per iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub value: f64,
    pub iterations: usize,
    pub transient_discarded: usize,
    /// Batch-means standard error over 32 equal batches.
    pub stderr: f64,
    /// Iterations skipped because the derivative (or tangent vector) vanished.
    pub zero_derivative_hits: usize,
}

struct BatchMeans {
    sums: Vec<f64>,
    counts: Vec<usize>,
    total: f64,
    n: usize,
    iters: usize,
}

impl BatchMeans {
    fn new(iters: usize) -> Self {
        Self {
            sums: vec![0.0; BATCHES],
            counts: vec![0; BATCHES],
            total: 0.0,
            n: 0,
            iters,
        }
    }

    fn push(&mut self, index: usize, v: f64) {
        let b = index * BATCHES / self.iters;
        self.sums[b] += v;
        self.counts[b] += 1;
        self.total += v;
        self.n += 1;
    }

    fn finish(self, transient: usize, zero_hits: usize) -> LyapunovEstimate {
        let value = self.total / self.n.max(1) as f64;
        let means: Vec<f64> = self
            .sums
            .iter()
            .zip(&self.counts)
            .filter(|(_, c)| **c > 0)
            .map(|(s, c)| s / *c as f64)
            .collect();
        let k = means.len() as f64;
        let stderr = if means.len() > 1 {
            let mean = means.iter().sum::<f64>() / k;
            let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        } else {
            f64::NAN
        };
        LyapunovEstimate {
            value,
            iterations: self.iters,
            transient_discarded: transient,
            stderr,
            zero_derivative_hits: zero_hits,
        }
    }
}

fn check_iters(iters: usize) -> Result<()> {
    if iters < MIN_ITERS {
        return Err(Error::InvalidInput(format!("need at least {MIN_ITERS} iterations, got {iters}")));
    }
    Ok(())
}

/// Orbit average of `ln |g'(x_n)|` after discarding `transient` iterates.
pub fn lyapunov_1d<M: Map1D + ?Sized>(map: &M, x0: f64, iters: usize, transient: usize) -> Result<LyapunovEstimate> {
    check_iters(iters)?;
    if !(0.0..=1.0).contains(&x0) {
        return Err(Error::InvalidInput(format!("initial point {x0} outside [0, 1]")));
    }
    let mut x = x0;
    for _ in 0..transient {
        x = map.eval(x);
    }
    let mut acc = BatchMeans::new(iters);
    let mut zero_hits = 0;
    for n in 0..iters {
        let d = map.derivative(x).abs();
        if d == 0.0 {
            zero_hits += 1;
        } else {
            acc.push(n, d.ln());
        }
        x = map.eval(x);
    }
    Ok(acc.finish(transient, zero_hits))
}

/// Top exponent of the operator on the simplex by tangent-vector iteration
/// (renormalized every step) in the chart that drops the last coordinate.
///
/// Tangent vectors live in the simplex's tangent space, so the transverse
/// direction, along which the operator squares total mass, does not
/// contaminate the estimate.
pub fn lyapunov_operator(p: &CubicMatrix, x0: &SimplexPoint, iters: usize, transient: usize) -> Result<LyapunovEstimate> {
    check_iters(iters)?;
    let n = p.dim() - 1;
    let initial = DVector::from_fn(n, |i, _| 1.0 / (i + 1) as f64).normalize();
    let mut v = initial.clone();
    let mut x = x0.clone();
    let mut zero_hits = 0;
    let mut acc = BatchMeans::new(iters);
    for k in 0..transient + iters {
        let jac = p.reduced_jacobian(&x)?;
        let w = jac * &v;
        let stretch = w.norm();
        if stretch == 0.0 || !stretch.is_finite() {
            if k >= transient {
                zero_hits += 1;
            }
            v = initial.clone();
        } else {
            if k >= transient {
                acc.push(k - transient, stretch.ln());
            }
            v = w / stretch;
        }
        x = step(p, &x, k + 1)?;
    }
    Ok(acc.finish(transient, zero_hits))
}
