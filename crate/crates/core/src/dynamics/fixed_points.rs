use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::eigen::eigenvalues_small;
use crate::cubic::CubicMatrix;
use crate::error::{Error, Result};
use crate::operator::{max_abs_diff, sampling::face_grid, SimplexPoint};

const MAX_NEWTON_STEPS: usize = 100;
const MAX_HALVINGS: usize = 30;
/// Smallest singular value of `J - I` below which a fixed point is taken to
/// sit on a continuum.
const RANK_THRESHOLD: f64 = 1e-8;
/// Candidates farther than this outside the simplex are discarded.
const MEMBERSHIP_SLACK: f64 = 1e-9;
/// Eigenvalues with modulus in `[1 - band, 1 + band]` count as on the unit circle.
pub const UNIT_CIRCLE_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Attracting,
    Repelling,
    Saddle,
    NonHyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Annotation {
    /// Every eigenvalue off the unit circle lies inside it.
    SemiAttracting,
    /// Every eigenvalue off the unit circle lies outside it.
    SemiRepelling,
}

/// A fixed point with the spectrum of the reduced Jacobian (dimension `m - 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointRecord {
    pub point: SimplexPoint,
    pub eigenvalues: Vec<Complex64>,
    pub classification: Classification,
    pub annotation: Option<Annotation>,
    /// False when `J - I` is rank-deficient, i.e. the point lies on a
    /// continuum of fixed points.
    pub isolated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointConfig {
    /// Grid resolution on each 2-face (or edge when `m = 2`).
    pub seeds_per_face: usize,
    /// Residual bound `||V(x) - x||_inf < tol`.
    pub tol: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            seeds_per_face: 8,
            tol: 1e-10,
        }
    }
}

/// Affine hull of a set of fixed points: `base + span(directions)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineHull {
    pub base: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
}

impl AffineHull {
    pub fn dimension(&self) -> usize {
        self.directions.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSearch {
    pub records: Vec<FixedPointRecord>,
    /// Hull of the non-isolated records, if any.
    pub continuum: Option<AffineHull>,
    pub seeds_tried: usize,
    pub diagnostic: Option<String>,
}

/// Residual `R(u) - u` of the operator in the chart that drops the last coordinate.
fn reduced_residual(p: &CubicMatrix, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let x = lift(u);
    let image = p.apply_slice(&x);
    let r = image[..u.len()].iter().zip(u).map(|(a, b)| a - b).collect();
    (x, r)
}

fn lift(u: &[f64]) -> Vec<f64> {
    let mut x = u.to_vec();
    x.push(1.0 - u.iter().sum::<f64>());
    x
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Damped Newton on the reduced fixed-point equation. Steps use the SVD
/// pseudo-inverse so that a fixed-point continuum (singular `J - I`) is
/// approached along its normal directions.
fn newton(p: &CubicMatrix, seed: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = seed.len() - 1;
    let mut u = seed[..n].to_vec();
    let (_, mut r) = reduced_residual(p, &u);
    let mut res = norm_inf(&r);
    for _ in 0..MAX_NEWTON_STEPS {
        if res < tol * 1e-3 {
            break;
        }
        let x = lift(&u);
        let jac = p.reduced_jacobian_slice(&x) - DMatrix::identity(n, n);
        let svd = jac.svd(true, true);
        let cutoff = svd.singular_values.max() * 1e-12;
        let rhs = DVector::from_iterator(n, r.iter().map(|v| -v));
        let delta = svd.solve(&rhs, cutoff).ok()?;
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = u.iter().zip(delta.iter()).map(|(a, d)| a + scale * d).collect();
            let (_, tr) = reduced_residual(p, &trial);
            let tres = norm_inf(&tr);
            if tres < res {
                u = trial;
                r = tr;
                res = tres;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let x = lift(&u);
    let full = p.apply_slice(&x);
    if max_abs_diff(&full, &x) < tol {
        Some(x)
    } else {
        None
    }
}

fn seeds(m: usize, per_face: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..m {
        let mut v = vec![0.0; m];
        v[i] = 1.0;
        out.push(v);
    }
    out.push(vec![1.0 / m as f64; m]);
    let r = per_face.max(1);
    let bary = 1.0 / m as f64;
    if m == 2 {
        face_grid(2, &[0, 1], r, |x| out.push(x.to_vec()));
        return out;
    }
    for i in 0..m {
        for j in (i + 1)..m {
            for l in (j + 1)..m {
                face_grid(m, &[i, j, l], r, |x| {
                    out.push(x.to_vec());
                    if m > 3 {
                        // pull toward the barycenter to reach the interior
                        out.push(x.iter().map(|v| 0.5 * v + 0.5 * bary).collect());
                    }
                });
            }
        }
    }
    out
}

/// Finds fixed points on the simplex from a deterministic grid of Newton seeds.
///
/// Converged points are deduplicated within `10 * tol` and returned in
/// descending lexicographic order, each classified by [`classify_fixed_point`].
pub fn find_fixed_points(p: &CubicMatrix, config: &FixedPointConfig) -> Result<FixedPointSearch> {
    let tol = config.tol;
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let m = p.dim();
    let seeds = seeds(m, config.seeds_per_face);
    let mut found: Vec<Vec<f64>> = Vec::new();
    for seed in &seeds {
        let Some(x) = newton(p, seed, tol) else { continue };
        if x.iter().any(|v| *v < -MEMBERSHIP_SLACK) {
            continue;
        }
        if found.iter().any(|y| max_abs_diff(y, &x) < 10.0 * tol) {
            continue;
        }
        found.push(x);
    }
    // descending lexicographic on a 1e-8 grid, so rounding noise cannot
    // reorder points that share a coordinate
    found.sort_by_cached_key(|x| std::cmp::Reverse(x.iter().map(|v| (v * 1e8).round() as i64).collect::<Vec<_>>()));

    let mut records = Vec::with_capacity(found.len());
    for x in found {
        let point = SimplexPoint::with_tolerance(x, MEMBERSHIP_SLACK)?;
        records.push(classify_fixed_point(p, &point, tol)?);
    }
    let continuum_points: Vec<&[f64]> = records
        .iter()
        .filter(|r| !r.isolated)
        .map(|r| r.point.coords())
        .collect();
    let continuum = (continuum_points.len() >= 2).then(|| affine_hull(&continuum_points, 1e-6));
    let diagnostic = records.is_empty().then(|| {
        format!(
            "Newton did not converge to a fixed point on the simplex from any of {} seeds",
            seeds.len()
        )
    });
    Ok(FixedPointSearch {
        records,
        continuum,
        seeds_tried: seeds.len(),
        diagnostic,
    })
}

/// Eigenvalues of the reduced Jacobian at `x` and the resulting stability type.
///
/// `tol` bounds the fixed-point residual; the unit circle is widened to
/// [`UNIT_CIRCLE_BAND`].
pub fn classify_fixed_point(p: &CubicMatrix, x: &SimplexPoint, tol: f64) -> Result<FixedPointRecord> {
    let image = p.apply(x)?;
    let residual = x.distance_inf(&image);
    if !(residual < tol) {
        return Err(Error::NotAFixedPoint { residual, tol });
    }
    let reduced = p.reduced_jacobian_slice(x.coords());
    let eigenvalues = eigenvalues_small(&reduced)?;
    let (classification, annotation) = classify_spectrum(&eigenvalues, UNIT_CIRCLE_BAND);
    let n = reduced.nrows();
    let shifted = reduced - DMatrix::identity(n, n);
    let smallest = shifted.singular_values().min();
    Ok(FixedPointRecord {
        point: x.clone(),
        eigenvalues,
        classification,
        annotation,
        isolated: smallest > RANK_THRESHOLD,
    })
}

pub(crate) fn classify_spectrum(eigenvalues: &[Complex64], tol: f64) -> (Classification, Option<Annotation>) {
    let moduli: Vec<f64> = eigenvalues.iter().map(|l| l.norm()).collect();
    let on_circle = |r: f64| (1.0 - tol..=1.0 + tol).contains(&r);
    if moduli.iter().any(|r| on_circle(*r)) {
        let off: Vec<f64> = moduli.iter().copied().filter(|r| !on_circle(*r)).collect();
        let annotation = if off.is_empty() {
            None
        } else if off.iter().all(|r| *r < 1.0) {
            Some(Annotation::SemiAttracting)
        } else if off.iter().all(|r| *r > 1.0) {
            Some(Annotation::SemiRepelling)
        } else {
            None
        };
        return (Classification::NonHyperbolic, annotation);
    }
    if moduli.iter().all(|r| *r < 1.0) {
        (Classification::Attracting, None)
    } else if moduli.iter().all(|r| *r > 1.0) {
        (Classification::Repelling, None)
    } else {
        (Classification::Saddle, None)
    }
}

/// Affine hull of `points`: directions are the right singular vectors of the
/// centred point cloud whose singular value exceeds `rel_tol` times the largest.
pub fn affine_hull(points: &[&[f64]], rel_tol: f64) -> AffineHull {
    let n = points.len();
    let m = points.first().map_or(0, |p| p.len());
    let base: Vec<f64> = (0..m).map(|i| points.iter().map(|p| p[i]).sum::<f64>() / n as f64).collect();
    if n < 2 {
        return AffineHull { base, directions: Vec::new() };
    }
    let centred = DMatrix::from_fn(n, m, |r, c| points[r][c] - base[c]);
    let svd = centred.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let top = svd.singular_values.max();
    let directions = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| top > 0.0 && **s > rel_tol * top)
        .map(|(i, _)| v_t.row(i).iter().copied().collect())
        .collect();
    AffineHull { base, directions }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelSpec;

    fn close(a: Complex64, re: f64, im: f64, tol: f64) -> bool {
        (a.re - re).abs() < tol && (a.im - im).abs() < tol
    }

    fn has_pair(e: &[Complex64], a: f64, b: f64) -> bool {
        (close(e[0], a, 0.0, 1e-9) && close(e[1], b, 0.0, 1e-9))
            || (close(e[0], b, 0.0, 1e-9) && close(e[1], a, 0.0, 1e-9))
    }

    #[test]
    fn v3_fixed_points_and_types() {
        let p = ModelSpec::v3(1.0).unwrap().build();
        let s = find_fixed_points(&p, &FixedPointConfig::default()).unwrap();
        let expected = [
            ([1.0, 0.0, 0.0], (3.0, 3.0), Classification::Repelling, None),
            ([1.0 / 3.0, 2.0 / 3.0, 0.0], (-1.0, 7.0 / 3.0), Classification::NonHyperbolic, Some(Annotation::SemiRepelling)),
            ([1.0 / 3.0, 0.0, 2.0 / 3.0], (5.0 / 3.0, -1.0), Classification::NonHyperbolic, Some(Annotation::SemiRepelling)),
            ([1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0], (3.0 / 7.0, -1.0), Classification::NonHyperbolic, Some(Annotation::SemiAttracting)),
        ];
        assert_eq!(s.records.len(), 4, "{:?}", s.records);
        for (point, (l1, l2), class, ann) in expected {
            let r = s
                .records
                .iter()
                .find(|r| r.point.distance_inf(&point) < 1e-10)
                .unwrap_or_else(|| panic!("missing {point:?}"));
            assert!(has_pair(&r.eigenvalues, l1, l2), "{point:?}: {:?}", r.eigenvalues);
            assert_eq!(r.classification, class);
            assert_eq!(r.annotation, ann);
            assert!(r.isolated);
        }
        assert!(s.continuum.is_none());
    }

    #[test]
    fn v3_s2_at_one_and_a_half() {
        let a = 1.5;
        let p = ModelSpec::v3(a).unwrap().build();
        let s2 = SimplexPoint::new(vec![1.0 / 3.0, 0.0, 2.0 / 3.0]).unwrap();
        let r = classify_fixed_point(&p, &s2, 1e-9).unwrap();
        assert!(has_pair(&r.eigenvalues, 2.0, -1.0));
        assert_eq!(r.classification, Classification::NonHyperbolic);
        assert_eq!(r.annotation, Some(Annotation::SemiRepelling));
    }

    #[test]
    fn classification_rejects_non_fixed_points() {
        let p = ModelSpec::v3(1.0).unwrap().build();
        let x = SimplexPoint::barycenter(3).unwrap();
        assert!(matches!(classify_fixed_point(&p, &x, 1e-9), Err(Error::NotAFixedPoint { .. })));
    }

    #[test]
    fn v2_has_a_line_of_fixed_points() {
        let a = 2.0;
        let p = ModelSpec::v2(a).unwrap().build();
        let s = find_fixed_points(&p, &FixedPointConfig::default()).unwrap();
        let origin = s
            .records
            .iter()
            .find(|r| r.point.distance_inf(&[1.0, 0.0, 0.0]) < 1e-10)
            .expect("(1,0,0) is fixed");
        assert!(origin.isolated);
        let line: Vec<_> = s.records.iter().filter(|r| !r.isolated).collect();
        assert!(line.len() >= 3, "{:?}", s.records);
        for r in &line {
            assert!((r.point.coords()[0] - 1.0 / (2.0 + a)).abs() < 1e-8);
            assert_eq!(r.classification, Classification::NonHyperbolic);
        }
        let hull = s.continuum.expect("continuum detected");
        assert_eq!(hull.dimension(), 1);
        let d = &hull.directions[0];
        // the line x = 1/4 runs along (0, 1, -1)
        assert!(d[0].abs() < 1e-8 && (d[1] + d[2]).abs() < 1e-8);
    }

    #[test]
    fn logistic_model_fixed_points() {
        let p = ModelSpec::logistic(3.0).unwrap().build();
        let s = find_fixed_points(&p, &FixedPointConfig::default()).unwrap();
        let mut ys: Vec<f64> = s.records.iter().map(|r| r.point.coords()[1]).collect();
        ys.sort_by(f64::total_cmp);
        assert_eq!(ys.len(), 2);
        assert!(ys[0].abs() < 1e-12 && (ys[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn classification_is_independent_of_seed_density() {
        let p = ModelSpec::v3(2.2).unwrap().build();
        let coarse = find_fixed_points(&p, &FixedPointConfig { seeds_per_face: 3, tol: 1e-10 }).unwrap();
        let fine = find_fixed_points(&p, &FixedPointConfig { seeds_per_face: 12, tol: 1e-10 }).unwrap();
        assert_eq!(coarse.records.len(), fine.records.len());
        for (a, b) in coarse.records.iter().zip(&fine.records) {
            assert!(a.point.distance_inf(b.point.coords()) < 1e-9);
            assert_eq!(a.classification, b.classification);
            assert_eq!(a.annotation, b.annotation);
        }
    }

    #[test]
    fn spectrum_classes() {
        let c = |v: &[f64]| classify_spectrum(&v.iter().map(|r| Complex64::new(*r, 0.0)).collect::<Vec<_>>(), 1e-9);
        assert_eq!(c(&[0.5, -0.2]), (Classification::Attracting, None));
        assert_eq!(c(&[1.5, -2.0]), (Classification::Repelling, None));
        assert_eq!(c(&[1.5, 0.2]), (Classification::Saddle, None));
        assert_eq!(c(&[-1.0, 0.2]), (Classification::NonHyperbolic, Some(Annotation::SemiAttracting)));
        assert_eq!(c(&[1.0 + 1e-12, 3.0]), (Classification::NonHyperbolic, Some(Annotation::SemiRepelling)));
        assert_eq!(c(&[1.0, 3.0, 0.5]), (Classification::NonHyperbolic, None));
        assert_eq!(c(&[1.0, -1.0]), (Classification::NonHyperbolic, None));
    }
}
