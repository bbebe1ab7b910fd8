use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenvalues with multiplicity, sorted by decreasing modulus.
///
/// Up to 3x3 the characteristic polynomial is solved in closed form; larger
/// matrices go through a real Schur decomposition.
pub fn eigenvalues_small(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if !a.is_square() {
        return Err(Error::InvalidInput(format!("matrix is {}x{}, not square", a.nrows(), a.ncols())));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let mut roots = match a.nrows() {
        0 => Vec::new(),
        1 => vec![Complex64::new(a[(0, 0)], 0.0)],
        2 => {
            let trace = a[(0, 0)] + a[(1, 1)];
            let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
            quadratic_roots(trace, det).to_vec()
        }
        3 => {
            let trace = a[(0, 0)] + a[(1, 1)] + a[(2, 2)];
            let minors = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)] + a[(0, 0)] * a[(2, 2)]
                - a[(0, 2)] * a[(2, 0)]
                + a[(1, 1)] * a[(2, 2)]
                - a[(1, 2)] * a[(2, 1)];
            let det = a.determinant();
            cubic_roots(-trace, minors, -det).to_vec()
        }
        _ => a.clone().complex_eigenvalues().iter().copied().collect(),
    };
    roots.sort_by(|x, y| {
        y.norm()
            .total_cmp(&x.norm())
            .then(y.re.total_cmp(&x.re))
            .then(y.im.total_cmp(&x.im))
    });
    Ok(roots)
}

/// Roots of `l^2 - trace l + det`.
fn quadratic_roots(trace: f64, det: f64) -> [Complex64; 2] {
    let disc = trace * trace - 4.0 * det;
    if disc >= 0.0 {
        let q = 0.5 * (trace + trace.signum() * disc.sqrt());
        if q == 0.0 {
            return [Complex64::new(0.0, 0.0); 2];
        }
        [Complex64::new(q, 0.0), Complex64::new(det / q, 0.0)]
    } else {
        let re = 0.5 * trace;
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

/// Roots of `l^3 + a l^2 + b l + c`, each polished by two Newton steps.
fn cubic_roots(a: f64, b: f64, c: f64) -> [Complex64; 3] {
    let q = (a * a - 3.0 * b) / 9.0;
    let r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
    let shift = a / 3.0;
    let q3 = q * q * q;
    let roots = if r * r < q3 {
        let theta = (r / q3.sqrt()).clamp(-1.0, 1.0).acos();
        let s = -2.0 * q.sqrt();
        let tau = std::f64::consts::TAU;
        [
            Complex64::new(s * (theta / 3.0).cos() - shift, 0.0),
            Complex64::new(s * ((theta + tau) / 3.0).cos() - shift, 0.0),
            Complex64::new(s * ((theta - tau) / 3.0).cos() - shift, 0.0),
        ]
    } else {
        let big = -r.signum() * (r.abs() + (r * r - q3).sqrt()).cbrt();
        let small = if big == 0.0 { 0.0 } else { q / big };
        let re = -0.5 * (big + small) - shift;
        let im = 0.5 * 3f64.sqrt() * (big - small);
        [
            Complex64::new(big + small - shift, 0.0),
            Complex64::new(re, im),
            Complex64::new(re, -im),
        ]
    };
    roots.map(|mut z| {
        for _ in 0..2 {
            let f = ((z + a) * z + b) * z + c;
            let df = (3.0 * z + 2.0 * a) * z + b;
            if df.norm() > 1e-300 {
                let next = z - f / df;
                if next.is_finite() && poly_abs(next, a, b, c) < poly_abs(z, a, b, c) {
                    z = next;
                }
            }
        }
        z
    })
}

fn poly_abs(z: Complex64, a: f64, b: f64, c: f64) -> f64 {
    (((z + a) * z + b) * z + c).norm()
}
