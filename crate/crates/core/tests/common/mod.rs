#![allow(dead_code)]

use qnso::operator::sampling::uniform_simplex;
use qnso::CubicMatrix;
use rand::Rng;

/// A symmetric matrix satisfying the row-sum, diagonal and sufficient
/// off-diagonal bounds by construction.
///
/// Diagonal rows are random probability vectors. Each mixed row starts from
/// a fraction `u_k` of its lower bound `-sqrt(P_ii,k P_jj,k) / (m - 1)` and
/// puts the remaining mass on a random probability vector, so row sums are
/// exactly one and every entry is at or above its bound. With probability
/// 1/4 the fraction is 1, landing exactly on the bound.
pub fn random_sufficient<R: Rng>(rng: &mut R, m: usize) -> CubicMatrix {
    let mut p = CubicMatrix::zeros(m).unwrap();
    let diag: Vec<Vec<f64>> = (0..m).map(|_| sparse_probability(rng, m)).collect();
    for (i, row) in diag.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            p.set(i, i, k, *v).unwrap();
        }
    }
    for i in 0..m {
        for j in (i + 1)..m {
            let lower: Vec<f64> = (0..m)
                .map(|k| -(diag[i][k] * diag[j][k]).sqrt() / (m as f64 - 1.0))
                .collect();
            let base: Vec<f64> = lower
                .iter()
                .map(|l| {
                    let u = if rng.random_bool(0.25) { 1.0 } else { rng.random::<f64>() };
                    l * u
                })
                .collect();
            let rest = 1.0 - base.iter().sum::<f64>();
            let w = sparse_probability(rng, m);
            for k in 0..m {
                p.set_sym(i, j, k, base[k] + rest * w[k]).unwrap();
            }
        }
    }
    p
}

/// Uniform on the simplex, or a vertex with probability 1/5 so that
/// zero diagonal entries (and hence zero lower bounds) also occur.
fn sparse_probability<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    if rng.random_bool(0.2) {
        let mut v = vec![0.0; m];
        v[rng.random_range(0..m)] = 1.0;
        v
    } else {
        uniform_simplex(rng, m)
    }
}

/// Symmetric matrix with diagonal rows in `[0, 1]` and mixed rows drawn
/// around the necessary bounds, without any row-sum constraint.
pub fn random_around_bounds<R: Rng>(rng: &mut R, m: usize) -> CubicMatrix {
    let mut p = CubicMatrix::zeros(m).unwrap();
    for i in 0..m {
        for k in 0..m {
            let v = if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() };
            p.set(i, i, k, v).unwrap();
        }
    }
    for i in 0..m {
        for j in (i + 1)..m {
            for k in 0..m {
                let (a, c) = (p.get(i, i, k), p.get(j, j, k));
                let lo = -(a * c).sqrt();
                let hi = 1.0 + ((1.0 - a) * (1.0 - c)).sqrt();
                let width = hi - lo;
                let v = rng.random_range(lo - 0.2 * width..=hi + 0.2 * width);
                p.set_sym(i, j, k, v).unwrap();
            }
        }
    }
    p
}
