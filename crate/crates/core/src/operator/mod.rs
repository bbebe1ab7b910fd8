//! Evaluation of the quadratic operator, its derivative, and trajectories.

mod oracle;
pub mod sampling;

pub use oracle::{preservation_oracle, Counterexample, OracleConfig, PreservationVerdict, Strategy};

use std::io::{self, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cubic::CubicMatrix;
use crate::error::{Error, Result};

/// Slack accepted when constructing a point or checking an iterate.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// A probability vector on the standard simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexPoint {
    coords: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(coords, SIMPLEX_TOL)
    }

    /// Accepts coordinates `>= -eps` whose sum is within `eps` of one.
    pub fn with_tolerance(coords: Vec<f64>, eps: f64) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "simplex point needs at least 2 coordinates, got {}",
                coords.len()
            )));
        }
        if let Some((i, v)) = coords.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < -eps) {
            return Err(Error::InvalidInput(format!("coordinate {i} = {v} is not a probability")));
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > eps {
            return Err(Error::InvalidInput(format!("coordinates sum to {sum}, not 1")));
        }
        Ok(Self { coords })
    }

    /// The vertex `e_i` of the simplex in dimension `m`.
    pub fn vertex(m: usize, i: usize) -> Result<Self> {
        if i >= m {
            return Err(Error::InvalidInput(format!("vertex index {i} out of range for m = {m}")));
        }
        let mut coords = vec![0.0; m];
        coords[i] = 1.0;
        Self::new(coords)
    }

    /// The barycenter `(1/m, ..., 1/m)`.
    pub fn barycenter(m: usize) -> Result<Self> {
        Self::new(vec![1.0 / m as f64; m])
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn distance_inf(&self, other: &[f64]) -> f64 {
        max_abs_diff(&self.coords, other)
    }
}

impl TryFrom<Vec<f64>> for SimplexPoint {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Self::new(coords)
    }
}

impl From<SimplexPoint> for Vec<f64> {
    fn from(p: SimplexPoint) -> Self {
        p.coords
    }
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

impl CubicMatrix {
    /// `x'_k = sum_{i,j} P[i][j][k] x_i x_j`.
    ///
    /// The image is not required to lie on the simplex; whether it does is
    /// the business of [`preservation_oracle`] and the condition checks.
    pub fn apply(&self, x: &SimplexPoint) -> Result<Vec<f64>> {
        self.check_dim(x.dim())?;
        Ok(self.apply_slice(x.coords()))
    }

    /// [`apply`](Self::apply) on an arbitrary vector of length `m`.
    pub fn apply_slice(&self, x: &[f64]) -> Vec<f64> {
        let m = self.dim();
        debug_assert_eq!(x.len(), m);
        let mut out = vec![0.0; m];
        for i in 0..m {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..m {
                let w = x[i] * x[j];
                if w == 0.0 {
                    continue;
                }
                for (o, p) in out.iter_mut().zip(self.row(i, j)) {
                    *o += p * w;
                }
            }
        }
        out
    }

    /// Full `m x m` Jacobian: `J[k][i] = 2 sum_j P[i][j][k] x_j`.
    ///
    /// Assumes the matrix is symmetric in its first two indices.
    pub fn jacobian(&self, x: &SimplexPoint) -> Result<DMatrix<f64>> {
        self.check_dim(x.dim())?;
        Ok(self.jacobian_slice(x.coords()))
    }

    pub fn jacobian_slice(&self, x: &[f64]) -> DMatrix<f64> {
        let m = self.dim();
        let mut jac = DMatrix::zeros(m, m);
        for i in 0..m {
            for (j, &xj) in x.iter().enumerate() {
                if xj == 0.0 {
                    continue;
                }
                for k in 0..m {
                    jac[(k, i)] += 2.0 * self.get(i, j, k) * xj;
                }
            }
        }
        jac
    }

    /// Jacobian of the operator in the chart `(x_1, ..., x_{m-1})`, with the
    /// last coordinate eliminated through `x_m = 1 - sum x_i`.
    ///
    /// Its eigenvalues are those of the derivative restricted to the tangent
    /// space of the simplex, independent of which coordinate is dropped.
    pub fn reduced_jacobian_slice(&self, x: &[f64]) -> DMatrix<f64> {
        let full = self.jacobian_slice(x);
        let n = self.dim() - 1;
        DMatrix::from_fn(n, n, |k, i| full[(k, i)] - full[(k, n)])
    }

    pub fn reduced_jacobian(&self, x: &SimplexPoint) -> Result<DMatrix<f64>> {
        self.check_dim(x.dim())?;
        Ok(self.reduced_jacobian_slice(x.coords()))
    }

    fn check_dim(&self, actual: usize) -> Result<()> {
        if actual != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual,
            });
        }
        Ok(())
    }
}

/// One iteration step with the simplex membership check.
///
/// The raw image must lie within [`SIMPLEX_TOL`] of the simplex; it is then
/// clamped at zero and rescaled to unit mass. Without the rescaling, rounding
/// drift off the hyperplane `sum x = 1` doubles every step (the operator
/// squares the total mass) and destroys long orbits.
pub fn step(p: &CubicMatrix, x: &SimplexPoint, step_index: usize) -> Result<SimplexPoint> {
    let image = p.apply(x)?;
    settle(image, step_index).map(|coords| SimplexPoint { coords })
}

pub(crate) fn settle(mut image: Vec<f64>, step_index: usize) -> Result<Vec<f64>> {
    let sum: f64 = image.iter().sum();
    let (coordinate, value) = image
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    if !value.is_finite() || value < -SIMPLEX_TOL || !sum.is_finite() || (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::DomainEscape {
            step: step_index,
            coordinate,
            value,
            sum,
        });
    }
    for v in image.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let total: f64 = image.iter().sum();
    for v in image.iter_mut() {
        *v /= total;
    }
    Ok(image)
}

/// An orbit `x_0, x_1 = V(x_0), ..., x_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub operator_id: String,
    pub points: Vec<SimplexPoint>,
}

impl Trajectory {
    /// Number of steps taken (one less than the number of points).
    pub fn steps(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    pub fn last(&self) -> &SimplexPoint {
        self.points.last().expect("trajectory holds its initial point")
    }

    /// Writes `n,x1,...,xm` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let m = self.points.first().map_or(0, SimplexPoint::dim);
        write!(out, "n")?;
        for i in 1..=m {
            write!(out, ",x{i}")?;
        }
        writeln!(out)?;
        for (n, p) in self.points.iter().enumerate() {
            write!(out, "{n}")?;
            for v in p.coords() {
                write!(out, ",{}", format_g17(*v))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Formats a double with 17 significant digits, round-trip exact.
pub fn format_g17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Iterates the operator `steps` times from `x0`.
///
/// Every iterate is checked against the simplex; the first escape aborts with
/// [`Error::DomainEscape`] carrying the step index (1-based: step 1 is the
/// first image).
pub fn iterate(p: &CubicMatrix, x0: &SimplexPoint, steps: usize, operator_id: impl Into<String>) -> Result<Trajectory> {
    if x0.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            actual: x0.dim(),
        });
    }
    let mut points = Vec::with_capacity(steps + 1);
    points.push(x0.clone());
    for n in 1..=steps {
        let next = step(p, &points[n - 1], n)?;
        points.push(next);
    }
    Ok(Trajectory {
        operator_id: operator_id.into(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{necessary_not_sufficient, ModelSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(v: &[f64]) -> SimplexPoint {
        SimplexPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn simplex_point_validation() {
        assert!(SimplexPoint::new(vec![0.5, 0.5]).is_ok());
        assert!(SimplexPoint::new(vec![-1e-10, 1.0 + 1e-10]).is_ok());
        assert!(SimplexPoint::new(vec![-1e-6, 1.0 + 1e-6]).is_err());
        assert!(SimplexPoint::new(vec![0.5, 0.6]).is_err());
        assert!(SimplexPoint::new(vec![1.0]).is_err());
        assert!(SimplexPoint::new(vec![f64::NAN, 1.0]).is_err());
        assert!(serde_json::from_str::<SimplexPoint>("[0.2, 0.2]").is_err());
    }

    #[test]
    fn vertex_image_is_the_diagonal_row() {
        let p = ModelSpec::v3(1.3).unwrap().build();
        for i in 0..3 {
            let img = p.apply(&SimplexPoint::vertex(3, i).unwrap()).unwrap();
            let expected: Vec<f64> = (0..3).map(|k| p.get(i, i, k)).collect();
            assert_eq!(img, expected);
        }
    }

    #[test]
    fn named_points() {
        let v3 = ModelSpec::v3(1.0).unwrap().build();
        let s4 = [1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0];
        assert!(max_abs_diff(&v3.apply(&pt(&s4)).unwrap(), &s4) < 1e-15);

        let va = ModelSpec::va(-1.0).unwrap().build();
        assert_eq!(va.apply(&pt(&[0.5, 0.5])).unwrap(), vec![0.0, 1.0]);

        let r = necessary_not_sufficient(3).unwrap();
        let img = r.apply(&pt(&[0.5, 0.25, 0.25])).unwrap();
        assert!((img[0] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let p = ModelSpec::v2(1.0).unwrap().build();
        assert!(matches!(
            p.apply(&pt(&[0.5, 0.5])),
            Err(Error::DimensionMismatch { expected: 3, actual: 2 })
        ));
        assert!(p.jacobian(&pt(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn jacobian_at_vertex_is_twice_the_coefficient() {
        let p = ModelSpec::v2(1.4).unwrap().build();
        for j in 0..3 {
            let jac = p.jacobian(&SimplexPoint::vertex(3, j).unwrap()).unwrap();
            for k in 0..3 {
                for i in 0..3 {
                    assert_eq!(jac[(k, i)], 2.0 * p.get(i, j, k));
                }
            }
        }
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let m = rng.random_range(2..6);
            let p = CubicMatrix::from_fn(m, |_, _, _| rng.random_range(-1.0..1.0))
                .unwrap()
                .symmetrize()
                .unwrap();
            let x = sampling::uniform_simplex(&mut rng, m);
            let jac = p.jacobian_slice(&x);
            let h = 1e-6;
            for i in 0..m {
                let mut plus = x.clone();
                let mut minus = x.clone();
                plus[i] += h;
                minus[i] -= h;
                let fp = p.apply_slice(&plus);
                let fm = p.apply_slice(&minus);
                for k in 0..m {
                    let fd = (fp[k] - fm[k]) / (2.0 * h);
                    let scale = jac[(k, i)].abs().max(1.0);
                    assert!((fd - jac[(k, i)]).abs() <= 1e-6 * scale, "k={k} i={i}: {fd} vs {}", jac[(k, i)]);
                }
            }
        }
    }

    #[test]
    fn mass_is_conserved_under_row_sum_condition() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = ModelSpec::v2(2.0).unwrap().build();
        for _ in 0..1000 {
            let x = sampling::uniform_simplex(&mut rng, 3);
            let s: f64 = p.apply_slice(&x).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_point_trajectory_is_constant() {
        let p = ModelSpec::v3(1.0).unwrap().build();
        let s2 = pt(&[1.0 / 3.0, 0.0, 2.0 / 3.0]);
        let t = iterate(&p, &s2, 50, "v3").unwrap();
        assert_eq!(t.steps(), 50);
        for q in &t.points {
            assert!(q.distance_inf(s2.coords()) < 1e-15);
        }
    }

    #[test]
    fn long_v2_orbit_stays_on_simplex_and_reconstructs() {
        let p = ModelSpec::v2(2.0).unwrap().build();
        let t = iterate(&p, &pt(&[0.9, 0.05, 0.05]), 10_000, "v2").unwrap();
        assert_eq!(t.points.len(), 10_001);
        for (n, w) in t.points.windows(2).enumerate() {
            let raw = p.apply(&w[0]).unwrap();
            assert!(w[1].distance_inf(&raw) < 1e-12, "step {n}");
            assert_eq!(step(&p, &w[0], n + 1).unwrap(), w[1]);
        }
    }

    #[test]
    fn counterexample_escapes_at_first_step() {
        let p = necessary_not_sufficient(3).unwrap();
        let err = iterate(&p, &pt(&[0.5, 0.25, 0.25]), 10, "counterexample").unwrap_err();
        match err {
            Error::DomainEscape { step, coordinate, value, .. } => {
                assert_eq!(step, 1);
                assert_eq!(coordinate, 0);
                assert!((value + 0.25).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_layout() {
        let p = ModelSpec::va(-1.0).unwrap().build();
        let t = iterate(&p, &pt(&[0.3, 0.7]), 2, "va").unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,x1,x2");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "0,2.9999999999999999e-1,6.9999999999999996e-1");
        let back: f64 = lines[2].split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(back, t.points[1].coords()[1]);
    }
}
