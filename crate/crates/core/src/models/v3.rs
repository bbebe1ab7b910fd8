//! Structure of the `v3` operator.
//!
//! Dropping `x = 1 - y - z` gives the planar map
//! `W(y, z) = (y (3 - 3y + (a - 3) z), z (3 - a y - 3z))` on the triangle
//! `T = {y, z >= 0, y + z <= 1}`. The line `z = ((3 - a) / a) y` is invariant
//! and the signed distance `d = (3 - a) y - a z` obeys the exact recurrence
//! `d' = 3 x d`, so the two open sides of the line are invariant as well.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ModelSpec;
use crate::error::{Error, Result};
use crate::operator::sampling::uniform_simplex;
use crate::operator::{step, SimplexPoint};

/// Half-width of the band around the invariant line that counts as `M3`.
pub const M3_BAND: f64 = 1e-9;

/// Invariant pieces of `T` under the reduced map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum V3Set {
    /// `y = 0`.
    M1,
    /// `z = 0`.
    M2,
    /// `z = ((3 - a) / a) y`.
    M3,
    /// `z < ((3 - a) / a) y`.
    M4,
    /// `z > ((3 - a) / a) y`.
    M5,
}

fn check_a(a: f64) -> Result<()> {
    ModelSpec::v3(a).map(|_| ())
}

/// Signed distance `(3 - a) y - a z` to the invariant line.
pub fn line_offset(a: f64, y: f64, z: f64) -> f64 {
    (3.0 - a) * y - a * z
}

/// Label of `(y, z)` with priority `M1`, `M2`, `M3` (band `tol` on the
/// offset), then `M4` or `M5` by sign. Every point of `T` gets one label.
pub fn classify_v3_reduced(a: f64, y: f64, z: f64, tol: f64) -> V3Set {
    let d = line_offset(a, y, z);
    if y.abs() <= tol {
        V3Set::M1
    } else if z.abs() <= tol {
        V3Set::M2
    } else if d.abs() <= tol.max(0.0) {
        V3Set::M3
    } else if d > 0.0 {
        V3Set::M4
    } else {
        V3Set::M5
    }
}

pub fn classify_v3(a: f64, x: &SimplexPoint, tol: f64) -> Result<V3Set> {
    check_a(a)?;
    let (y, z) = reduce_v3_to_w(x)?;
    Ok(classify_v3_reduced(a, y, z, tol))
}

impl V3Set {
    /// Membership of `(y, z)`; equalities are tested with slack `tol`, the
    /// open sides by strict sign.
    pub fn contains(&self, a: f64, y: f64, z: f64, tol: f64) -> bool {
        let d = line_offset(a, y, z);
        match self {
            V3Set::M1 => y.abs() <= tol,
            V3Set::M2 => z.abs() <= tol,
            V3Set::M3 => d.abs() <= tol,
            V3Set::M4 => d > 0.0,
            V3Set::M5 => d < 0.0,
        }
    }
}

/// `(y, z)`.
pub fn reduce_v3_to_w(x: &SimplexPoint) -> Result<(f64, f64)> {
    if x.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            actual: x.dim(),
        });
    }
    let c = x.coords();
    Ok((c[1], c[2]))
}

pub fn w_step(a: f64, y: f64, z: f64) -> (f64, f64) {
    (y * (3.0 - 3.0 * y + (a - 3.0) * z), z * (3.0 - a * y - 3.0 * z))
}

pub fn w_jacobian(a: f64, y: f64, z: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        2,
        2,
        &[
            3.0 - 6.0 * y + (a - 3.0) * z,
            (a - 3.0) * y,
            -a * z,
            3.0 - a * y - 6.0 * z,
        ],
    )
}

/// The four fixed points `s_1 .. s_4`.
pub fn v3_fixed_points(a: f64) -> Result<[[f64; 3]; 4]> {
    check_a(a)?;
    let den = a * a - 3.0 * a + 9.0;
    Ok([
        [1.0, 0.0, 0.0],
        [1.0 / 3.0, 0.0, 2.0 / 3.0],
        [1.0 / 3.0, 2.0 / 3.0, 0.0],
        [(a * a - 3.0 * a + 3.0) / den, 2.0 * a / den, 2.0 * (3.0 - a) / den],
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    Constant,
    Violated,
}

/// `P_n = z_n / y_n` along an orbit, with the distance to its limit
/// `(3 - a) / a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSequence {
    pub a: f64,
    pub set: V3Set,
    pub bound: f64,
    pub ratios: Vec<f64>,
    /// `bound - P_n`, computed from the offset recurrence so that it keeps
    /// full relative precision after `P_n` itself has rounded to the bound.
    pub gaps: Vec<f64>,
    pub monotonicity: Monotonicity,
    /// No ratio crosses the bound.
    pub bounded: bool,
    pub final_gap: f64,
    /// Set when the orbit was cut short.
    pub diagnostic: Option<String>,
}

/// Ratios `P_0 .. P_n` from a start with `y > 0` in `M3`, `M4` or `M5`.
pub fn ratio_sequence(a: f64, x0: &SimplexPoint, n: usize) -> Result<RatioSequence> {
    check_a(a)?;
    let (mut y, z0) = reduce_v3_to_w(x0)?;
    let set = classify_v3_reduced(a, y, z0, M3_BAND);
    if y <= 0.0 || !matches!(set, V3Set::M3 | V3Set::M4 | V3Set::M5) {
        return Err(Error::InvalidInput(format!(
            "ratio sequence needs y > 0 and a start in M3, M4 or M5; got {set:?} with y = {y}"
        )));
    }
    let bound = (3.0 - a) / a;
    let mut d = if set == V3Set::M3 { 0.0 } else { line_offset(a, y, z0) };
    let mut gaps = Vec::with_capacity(n + 1);
    let mut diagnostic = None;
    gaps.push(d / (a * y));
    for i in 1..=n {
        let z = ((3.0 - a) * y - d) / a;
        let x = 1.0 - y - z;
        let y_next = y * (3.0 - 3.0 * y + (a - 3.0) * z);
        let d_next = 3.0 * x * d;
        if y_next <= f64::MIN_POSITIVE || !y_next.is_finite() {
            diagnostic = Some(format!("y underflowed at step {i}"));
            break;
        }
        if d != 0.0 && d_next.abs() < f64::MIN_POSITIVE {
            diagnostic = Some(format!("line offset underflowed at step {i}"));
            break;
        }
        y = y_next;
        d = d_next;
        gaps.push(d / (a * y));
    }
    let ratios: Vec<f64> = gaps.iter().map(|g| bound - g).collect();
    let monotonicity = match set {
        V3Set::M3 => Monotonicity::Constant,
        _ => {
            let strictly_shrinking = gaps.windows(2).all(|w| w[1].abs() < w[0].abs() && w[1].signum() == w[0].signum());
            match (strictly_shrinking, set) {
                (true, V3Set::M4) => Monotonicity::Increasing,
                (true, _) => Monotonicity::Decreasing,
                (false, _) => Monotonicity::Violated,
            }
        }
    };
    let bounded = match set {
        V3Set::M4 => gaps.iter().all(|g| *g > 0.0),
        V3Set::M5 => gaps.iter().all(|g| *g < 0.0),
        _ => gaps.iter().all(|g| *g == 0.0),
    };
    Ok(RatioSequence {
        a,
        set,
        bound,
        final_gap: *gaps.last().expect("non-empty"),
        ratios,
        gaps,
        monotonicity,
        bounded,
        diagnostic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitCase {
    S1,
    S2,
    S3,
    S4,
    /// The orbit accumulates on the invariant line, at a point not
    /// determined by the case table.
    SubsetOfM3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitPrediction {
    pub case: LimitCase,
    /// The predicted limit point, when it is a single point.
    pub limit: Option<[f64; 3]>,
    pub source: V3Set,
}

/// Case table for the limit of an orbit: the vertex `x = 1` is fixed, `M1`
/// and `M2` starts go to `s_2` and `s_3`, `M3` starts go to `s_4`, and
/// starts off the line accumulate on it.
pub fn predict_limit(a: f64, x0: &SimplexPoint, tol: f64) -> Result<LimitPrediction> {
    let s = v3_fixed_points(a)?;
    let (y, z) = reduce_v3_to_w(x0)?;
    let source = classify_v3_reduced(a, y, z, tol);
    let case = if (x0.coords()[0] - 1.0).abs() <= tol {
        LimitCase::S1
    } else {
        match source {
            V3Set::M1 => LimitCase::S2,
            V3Set::M2 => LimitCase::S3,
            V3Set::M3 => LimitCase::S4,
            V3Set::M4 | V3Set::M5 => LimitCase::SubsetOfM3,
        }
    };
    let limit = match case {
        LimitCase::S1 => Some(s[0]),
        LimitCase::S2 => Some(s[1]),
        LimitCase::S3 => Some(s[2]),
        LimitCase::S4 => Some(s[3]),
        LimitCase::SubsetOfM3 => None,
    };
    Ok(LimitPrediction { case, limit, source })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjectureConfig {
    pub trials: usize,
    pub steps: usize,
    pub seed: u64,
    pub tol: f64,
}

/// Window at the end of each orbit over which the distance trend is measured.
pub const TAIL: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureTrial {
    pub start: Vec<f64>,
    pub start_set: V3Set,
    pub final_distance: f64,
    /// Mean distance over the first and second halves of the tail window.
    pub tail_early_mean: f64,
    pub tail_late_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureReport {
    pub label: String,
    pub a: f64,
    pub trials: usize,
    pub steps: usize,
    pub tol: f64,
    pub seed: u64,
    pub fraction_converged: f64,
    pub max_final_distance: f64,
    pub s4: [f64; 3],
    pub per_trial: Vec<ConjectureTrial>,
}

fn sample_off_line<R: Rng>(rng: &mut R, a: f64) -> (Vec<f64>, V3Set) {
    loop {
        let x = uniform_simplex(rng, 3);
        let set = classify_v3_reduced(a, x[1], x[2], M3_BAND);
        if matches!(set, V3Set::M4 | V3Set::M5) {
            return (x, set);
        }
    }
}

/// Iterates `steps` times from `trials` uniform starts off the invariant
/// line and measures the sup-distance to `s_4`. Numerical evidence only.
pub fn conjecture_experiment(a: f64, config: &ConjectureConfig) -> Result<ConjectureReport> {
    let s4 = v3_fixed_points(a)?[3];
    if config.trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    let p = ModelSpec::v3(a)?.build();
    let per_trial = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(trial as u64);
            let (start, start_set) = sample_off_line(&mut rng, a);
            let mut x = SimplexPoint::new(start.clone())?;
            let mut tail = Vec::with_capacity(TAIL);
            let tail_from = config.steps.saturating_sub(TAIL);
            for n in 0..config.steps {
                x = step(&p, &x, n + 1)?;
                if n + 1 > tail_from {
                    tail.push(x.distance_inf(&s4));
                }
            }
            let final_distance = x.distance_inf(&s4);
            if tail.is_empty() {
                tail.push(final_distance);
            }
            let half = tail.len() / 2;
            let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
            let (early, late) = if half == 0 { (&tail[..], &tail[..]) } else { tail.split_at(half) };
            Ok(ConjectureTrial {
                start,
                start_set,
                final_distance,
                tail_early_mean: mean(early),
                tail_late_mean: mean(late),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let converged = per_trial.iter().filter(|t| t.final_distance <= config.tol).count();
    Ok(ConjectureReport {
        label: "conjecture support".into(),
        a,
        trials: config.trials,
        steps: config.steps,
        tol: config.tol,
        seed: config.seed,
        fraction_converged: converged as f64 / config.trials as f64,
        max_final_distance: per_trial.iter().map(|t| t.final_distance).fold(0.0, f64::max),
        s4,
        per_trial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::eigenvalues_small;

    fn pt(v: [f64; 3]) -> SimplexPoint {
        SimplexPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn reduction_commutes_with_a_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for a in [0.5, 1.5, 2.5] {
            let p = ModelSpec::v3(a).unwrap().build();
            for _ in 0..100 {
                let x = pt(uniform_simplex(&mut rng, 3).try_into().unwrap());
                let img = p.apply_slice(x.coords());
                let (y, z) = reduce_v3_to_w(&x).unwrap();
                let (yw, zw) = w_step(a, y, z);
                assert!((img[1] - yw).abs() < 1e-12 && (img[2] - zw).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn planar_jacobian_agrees_with_the_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = 1.5;
        let p = ModelSpec::v3(a).unwrap().build();
        for _ in 0..50 {
            let x = uniform_simplex(&mut rng, 3);
            let j = p.jacobian_slice(&x);
            let jw = w_jacobian(a, x[1], x[2]);
            // chart (y, z): d/dy = e_y - e_x, d/dz = e_z - e_x
            for r in 0..2 {
                for c in 0..2 {
                    let generic = j[(r + 1, c + 1)] - j[(r + 1, 0)];
                    assert!((generic - jw[(r, c)]).abs() < 1e-12);
                }
            }
        }
        assert_eq!(w_jacobian(a, 0.0, 0.0), DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 3.0]));
        let (y, z) = (0.2, 0.3);
        assert_eq!(w_jacobian(a, y, z)[(0, 0)], 3.0 - 6.0 * y + (a - 3.0) * z);
    }

    #[test]
    fn eigenvalues_at_the_fixed_points() {
        for a in [0.5, 1.0, 1.5, 2.5] {
            let s = v3_fixed_points(a).unwrap();
            let p = ModelSpec::v3(a).unwrap().build();
            for f in &s {
                let img = p.apply_slice(f);
                assert!(img.iter().zip(f).all(|(u, v)| (u - v).abs() < 1e-15));
            }
            let ev = eigenvalues_small(&w_jacobian(a, 0.0, 2.0 / 3.0)).unwrap();
            let mut re: Vec<f64> = ev.iter().map(|c| c.re).collect();
            re.sort_by(f64::total_cmp);
            assert!((re[0] + 1.0).abs() < 1e-12 && (re[1] - (1.0 + 2.0 * a / 3.0)).abs() < 1e-12);
        }
        let ev = eigenvalues_small(&w_jacobian(1.0, 2.0 / 7.0, 4.0 / 7.0)).unwrap();
        let mut re: Vec<f64> = ev.iter().map(|c| c.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 1.0).abs() < 1e-12 && (re[1] - 3.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn offset_recurrence() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for a in [0.5, 1.5, 2.5] {
            for _ in 0..100 {
                let x = uniform_simplex(&mut rng, 3);
                let (y2, z2) = w_step(a, x[1], x[2]);
                let lhs = line_offset(a, y2, z2);
                assert!((lhs - 3.0 * x[0] * line_offset(a, x[1], x[2])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn restrictions_to_the_edges_and_the_line() {
        for a in [0.5, 1.0, 2.5] {
            let k = (9.0 - 3.0 * a + a * a) / (3.0 * a);
            let r = (3.0 - a) / a;
            for i in 1..50 {
                let z = i as f64 / 50.0;
                let (y2, z2) = w_step(a, 0.0, z);
                assert_eq!(y2, 0.0);
                assert!((z2 - 3.0 * z * (1.0 - z)).abs() < 1e-12);

                let y = (i as f64 / 50.0) * a / 3.0;
                let (y2, _) = w_step(a, y, r * y);
                let t = k * y;
                assert!((k * y2 - 3.0 * t * (1.0 - t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn labels() {
        assert_eq!(classify_v3_reduced(1.0, 0.2, 0.4, M3_BAND), V3Set::M3);
        assert_eq!(classify_v3_reduced(1.0, 0.3, 0.1, M3_BAND), V3Set::M4);
        assert_eq!(classify_v3_reduced(1.0, 0.1, 0.6, M3_BAND), V3Set::M5);
        assert_eq!(classify_v3_reduced(1.0, 0.0, 0.6, M3_BAND), V3Set::M1);
        assert_eq!(classify_v3_reduced(1.0, 0.6, 0.0, M3_BAND), V3Set::M2);
        assert_eq!(classify_v3(1.0, &pt([0.4, 0.2, 0.4]), M3_BAND).unwrap(), V3Set::M3);
    }

    #[test]
    fn ratios_increase_from_below() {
        let r = ratio_sequence(1.0, &pt([0.5, 0.4, 0.1]), 200).unwrap();
        assert_eq!(r.set, V3Set::M4);
        assert_eq!(r.monotonicity, Monotonicity::Increasing);
        assert!(r.bounded);
        assert!(r.final_gap > 0.0 && r.final_gap < 1e-6);
        assert_eq!(r.ratios.len(), 201);
        assert!((r.ratios[0] - 0.25).abs() < 1e-15);
        assert!(r.diagnostic.is_none());
    }

    #[test]
    fn ratios_decrease_from_above() {
        let r = ratio_sequence(1.0, &pt([0.3, 0.1, 0.6]), 200).unwrap();
        assert_eq!(r.monotonicity, Monotonicity::Decreasing);
        assert!(r.bounded);
        assert!((r.ratios.last().unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn ratios_on_the_line_are_constant() {
        let r = ratio_sequence(1.0, &pt([0.4, 0.2, 0.4]), 50).unwrap();
        assert_eq!(r.monotonicity, Monotonicity::Constant);
        assert!(r.ratios.iter().all(|p| *p == 2.0));
        assert!(ratio_sequence(1.0, &pt([0.4, 0.0, 0.6]), 5).is_err());
    }

    #[test]
    fn underflow_truncates() {
        let r = ratio_sequence(1.0, &pt([0.5, 0.4, 0.1]), 2000).unwrap();
        assert!(r.ratios.len() < 2001);
        assert!(r.diagnostic.as_deref().unwrap().contains("underflow"));
        assert_eq!(r.monotonicity, Monotonicity::Increasing);
    }

    #[test]
    fn limit_table() {
        let s = v3_fixed_points(1.0).unwrap();
        let p = predict_limit(1.0, &pt([1.0, 0.0, 0.0]), 1e-12).unwrap();
        assert_eq!(p.case, LimitCase::S1);
        let p = predict_limit(1.0, &pt([0.5, 0.0, 0.5]), 1e-12).unwrap();
        assert_eq!((p.case, p.limit), (LimitCase::S2, Some(s[1])));
        let p = predict_limit(1.0, &pt([0.5, 0.5, 0.0]), 1e-12).unwrap();
        assert_eq!(p.case, LimitCase::S3);
        let p = predict_limit(1.0, &pt([4.0 / 7.0, 1.0 / 7.0, 2.0 / 7.0]), 1e-12).unwrap();
        assert_eq!((p.case, p.limit), (LimitCase::S4, Some([1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0])));
        let p = predict_limit(1.0, &pt([0.5, 0.4, 0.1]), 1e-12).unwrap();
        assert_eq!((p.case, p.limit, p.source), (LimitCase::SubsetOfM3, None, V3Set::M4));
    }

    #[test]
    fn conjecture_runs_are_deterministic() {
        let cfg = ConjectureConfig {
            trials: 8,
            steps: 500,
            seed: 3,
            tol: 1e-2,
        };
        let a = conjecture_experiment(1.0, &cfg).unwrap();
        assert_eq!(a, conjecture_experiment(1.0, &cfg).unwrap());
        assert_eq!(a.label, "conjecture support");
        assert!(a.per_trial.iter().all(|t| t.final_distance.is_finite()));
        assert!(a.per_trial.iter().all(|t| matches!(t.start_set, V3Set::M4 | V3Set::M5)));
    }

    #[test]
    fn no_steps_means_no_convergence() {
        let cfg = ConjectureConfig {
            trials: 10,
            steps: 0,
            seed: 0,
            tol: 1e-3,
        };
        assert_eq!(conjecture_experiment(1.0, &cfg).unwrap().fraction_converged, 0.0);
    }
}
