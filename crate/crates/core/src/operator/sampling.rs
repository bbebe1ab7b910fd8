//! Sampling on the simplex.

use rand::Rng;
use rand_distr::Exp1;

/// Uniform (flat Dirichlet) point on the simplex: normalized i.i.d.
/// exponentials.
pub fn uniform_simplex<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let sum: f64 = v.iter().sum();
        if sum > 0.0 {
            v.iter_mut().for_each(|x| *x /= sum);
            return v;
        }
    }
}

/// Euclidean projection onto the simplex (sort-and-threshold).
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (idx, u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (idx + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Barycentric grid of resolution `r` on the face spanned by `vertices`.
pub(crate) fn face_grid(m: usize, vertices: &[usize], r: usize, mut visit: impl FnMut(&[f64])) {
    let mut x = vec![0.0; m];
    match vertices {
        [i, j] => {
            for s in 0..=r {
                let t = s as f64 / r as f64;
                x[*i] = t;
                x[*j] = 1.0 - t;
                visit(&x);
            }
        }
        [i, j, l] => {
            for p in 0..=r {
                for q in 0..=(r - p) {
                    x[*i] = p as f64 / r as f64;
                    x[*j] = q as f64 / r as f64;
                    x[*l] = (r - p - q) as f64 / r as f64;
                    visit(&x);
                }
            }
        }
        _ => unreachable!("faces have two or three vertices"),
    }
}
