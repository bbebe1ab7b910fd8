use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::v2::{classify_v2, V2Set};
use super::v3::{classify_v3, line_offset, V3Set, M3_BAND};
use super::{ModelKind, ModelSpec};
use crate::error::{Error, Result};
use crate::operator::sampling::uniform_simplex;
use crate::operator::SimplexPoint;

/// Residual allowed in the invariance identities.
const IDENTITY_TOL: f64 = 1e-12;
/// Samples off the invariant line keep `x` above this so that one step
/// cannot push the offset `3 x d` into rounding noise.
const MIN_X: f64 = 1e-3;
const BOUNDARY_TRIALS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "set", rename_all = "lowercase")]
pub enum InvariantSetLabel {
    V2(V2Set),
    V3(V3Set),
}

/// The unique invariant-set label of `x` under `v2` or `v3`.
pub fn classify_invariant_set(model: &ModelSpec, x: &SimplexPoint, tol: f64) -> Result<InvariantSetLabel> {
    match model.kind() {
        ModelKind::V2 { a } => classify_v2(a, x, tol).map(InvariantSetLabel::V2),
        ModelKind::V3 { a } => classify_v3(a, x, tol).map(InvariantSetLabel::V3),
        _ => Err(Error::InvalidInput(format!(
            "invariant sets are defined for v2 and v3, not {}",
            model.label()
        ))),
    }
}

/// A sampled point whose image left the set or broke the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceWitness {
    pub trial: usize,
    pub point: Vec<f64>,
    pub image: Vec<f64>,
    pub residual: f64,
    pub reason: String,
}

/// Points with `x = 0` must land on the invariant line of `v3` in one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCheck {
    pub trials: usize,
    pub passed: bool,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub label: InvariantSetLabel,
    pub trials: usize,
    pub seed: u64,
    pub passed: bool,
    pub failures: usize,
    /// Largest residual of the set's defining identity after one step.
    pub max_identity_residual: f64,
    pub witness: Option<InvarianceWitness>,
    pub boundary: Option<BoundaryCheck>,
}

struct Outcome {
    point: Vec<f64>,
    image: Vec<f64>,
    residual: f64,
    failure: Option<String>,
}

fn sample_v2<R: Rng>(rng: &mut R, a: f64, set: V2Set) -> Vec<f64> {
    match set {
        V2Set::M0 => {
            let x = rng.random::<f64>();
            vec![x, 0.0, 1.0 - x]
        }
        V2Set::M1 => {
            let x = rng.random::<f64>();
            vec![x, 1.0 - x, 0.0]
        }
        V2Set::MOmega { omega } => {
            let z = rng.random::<f64>() / (1.0 + omega);
            vec![1.0 - (1.0 + omega) * z, omega * z, z]
        }
        V2Set::X => {
            let x = 1.0 / (2.0 + a);
            let y = rng.random::<f64>() * (1.0 - x);
            vec![x, y, 1.0 - x - y]
        }
    }
}

fn sample_v3<R: Rng>(rng: &mut R, a: f64, set: V3Set) -> Vec<f64> {
    match set {
        V3Set::M1 => {
            let z = rng.random::<f64>();
            vec![1.0 - z, 0.0, z]
        }
        V3Set::M2 => {
            let y = rng.random::<f64>();
            vec![1.0 - y, y, 0.0]
        }
        V3Set::M3 => {
            let y = rng.random::<f64>() * a / 3.0;
            let z = (3.0 - a) / a * y;
            vec![(1.0 - y - z).max(0.0), y, z]
        }
        V3Set::M4 | V3Set::M5 => loop {
            let x = uniform_simplex(rng, 3);
            let d = line_offset(a, x[1], x[2]);
            let side = if set == V3Set::M4 { d > M3_BAND } else { d < -M3_BAND };
            if side && x[0] > MIN_X {
                return x;
            }
        },
    }
}

fn check_v2(a: f64, set: V2Set, x: &[f64], img: &[f64]) -> (f64, bool) {
    let residual = match set {
        V2Set::M0 => img[1].abs(),
        V2Set::M1 => img[2].abs(),
        V2Set::MOmega { omega } => {
            // y' - omega z' = (2 + a) x (y - omega z)
            (img[1] - omega * img[2] - (2.0 + a) * x[0] * (x[1] - omega * x[2])).abs()
        }
        V2Set::X => img.iter().zip(x).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max),
    };
    (residual, set.contains(a, img, IDENTITY_TOL))
}

fn check_v3(a: f64, set: V3Set, x: &[f64], img: &[f64]) -> (f64, bool) {
    let residual = (line_offset(a, img[1], img[2]) - 3.0 * x[0] * line_offset(a, x[1], x[2])).abs();
    (residual, set.contains(a, img[1], img[2], IDENTITY_TOL))
}

/// Samples `trials` points of the labelled set, applies one step, and
/// checks that the image stays in the set and satisfies the set's defining
/// identity to `1e-12`. For `v3` it also checks that the edge `x = 0` maps
/// onto the invariant line.
pub fn verify_invariance(model: &ModelSpec, label: InvariantSetLabel, trials: usize, seed: u64) -> Result<InvarianceReport> {
    let p = model.build();
    let (a, is_v3) = match (model.kind(), label) {
        (ModelKind::V2 { a }, InvariantSetLabel::V2(set)) => {
            if let V2Set::MOmega { omega } = set {
                if !(omega.is_finite() && omega > 0.0) {
                    return Err(Error::ParameterOutOfRange {
                        name: "omega",
                        value: omega,
                        range: "(0, inf)".into(),
                    });
                }
            }
            (a, false)
        }
        (ModelKind::V3 { a }, InvariantSetLabel::V3(_)) => (a, true),
        _ => {
            return Err(Error::InvalidInput(format!(
                "label {label:?} does not belong to {}",
                model.label()
            )))
        }
    };

    let outcomes: Vec<Outcome> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let point = match label {
                InvariantSetLabel::V2(set) => sample_v2(&mut rng, a, set),
                InvariantSetLabel::V3(set) => sample_v3(&mut rng, a, set),
            };
            let image = p.apply_slice(&point);
            let (residual, inside) = match label {
                InvariantSetLabel::V2(set) => check_v2(a, set, &point, &image),
                InvariantSetLabel::V3(set) => check_v3(a, set, &point, &image),
            };
            let failure = if !(residual < IDENTITY_TOL) {
                Some(format!("identity residual {residual:e}"))
            } else if !inside {
                Some("image left the set".to_string())
            } else {
                None
            };
            Outcome {
                point,
                image,
                residual,
                failure,
            }
        })
        .collect();

    let failures = outcomes.iter().filter(|o| o.failure.is_some()).count();
    let witness = outcomes
        .iter()
        .enumerate()
        .find_map(|(trial, o)| {
            o.failure.as_ref().map(|reason| InvarianceWitness {
                trial,
                point: o.point.clone(),
                image: o.image.clone(),
                residual: o.residual,
                reason: reason.clone(),
            })
        });
    let max_identity_residual = outcomes.iter().map(|o| o.residual).fold(0.0, f64::max);

    let boundary = is_v3.then(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX);
        let max_residual = (0..BOUNDARY_TRIALS)
            .map(|_| {
                let y = rng.random::<f64>();
                let img = p.apply_slice(&[0.0, y, 1.0 - y]);
                line_offset(a, img[1], img[2]).abs()
            })
            .fold(0.0, f64::max);
        BoundaryCheck {
            trials: BOUNDARY_TRIALS,
            passed: max_residual < IDENTITY_TOL,
            max_residual,
        }
    });

    let passed = failures == 0 && boundary.as_ref().is_none_or(|b| b.passed);
    Ok(InvarianceReport {
        label,
        trials,
        seed,
        passed,
        failures,
        max_identity_residual,
        witness,
        boundary,
    })
}
