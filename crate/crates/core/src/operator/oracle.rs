//! Sampling falsifier for simplex preservation.
//!
//! No finite sample proves that a quadratic operator preserves the simplex;
//! the oracle searches for a point whose image leaves it. A "preserved"
//! verdict means no counterexample was found.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::{face_grid, project_to_simplex, uniform_simplex};
use crate::cubic::CubicMatrix;

/// Random samples are drawn in batches with independent streams so the
/// outcome does not depend on thread scheduling.
const BATCH: usize = 1024;
const DESCENT_STEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 0,
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Vertex,
    Grid,
    Random,
    LocalMinRefinement,
}

/// A point whose image has a coordinate below `-tol` or a mass defect above `tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub point: Vec<f64>,
    pub image: Vec<f64>,
    /// Index of the most negative image coordinate.
    pub coordinate: usize,
    pub value: f64,
    pub mass_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreservationVerdict {
    pub preserved: bool,
    pub counterexample: Option<Counterexample>,
    pub samples_used: usize,
    /// Strategy that produced the most negative image coordinate.
    pub strategy: Strategy,
    /// Smallest image coordinate seen anywhere.
    pub min_image_coordinate: f64,
    pub max_mass_defect: f64,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub note: String,
}

#[derive(Debug, Clone)]
struct Probe {
    point: Vec<f64>,
    coordinate: usize,
    value: f64,
    mass_defect: f64,
    strategy: Strategy,
    order: usize,
}

impl Probe {
    fn evaluate(p: &CubicMatrix, x: &[f64], strategy: Strategy, order: usize) -> Self {
        let image = p.apply_slice(x);
        let (coordinate, value) = image
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
        let mass_defect = (image.iter().sum::<f64>() - 1.0).abs();
        Self {
            point: x.to_vec(),
            coordinate,
            value,
            mass_defect,
            strategy,
            order,
        }
    }

    /// Keeps the lower image coordinate; ties go to the earlier probe.
    fn worse(self, other: Self) -> Self {
        match self.value.total_cmp(&other.value) {
            std::cmp::Ordering::Less => self,
            std::cmp::Ordering::Greater => other,
            std::cmp::Ordering::Equal if self.order <= other.order => self,
            std::cmp::Ordering::Equal => other,
        }
    }
}

#[derive(Debug, Clone)]
struct Scan {
    worst: Probe,
    first_mass_violation: Option<Probe>,
    max_mass_defect: f64,
    count: usize,
}

impl Scan {
    fn single(probe: Probe, tol: f64) -> Self {
        Self {
            max_mass_defect: probe.mass_defect,
            first_mass_violation: (probe.mass_defect > tol).then(|| probe.clone()),
            worst: probe,
            count: 1,
        }
    }

    fn merge(self, other: Self) -> Self {
        let first_mass_violation = match (self.first_mass_violation, other.first_mass_violation) {
            (Some(a), Some(b)) => Some(if a.order <= b.order { a } else { b }),
            (a, b) => a.or(b),
        };
        Self {
            worst: self.worst.worse(other.worst),
            first_mass_violation,
            max_mass_defect: self.max_mass_defect.max(other.max_mass_defect),
            count: self.count + other.count,
        }
    }
}

/// Searches vertices, edge and 2-face grids, uniform random points and a
/// projected-gradient refinement for a point mapped outside the simplex.
///
/// Grid resolution is `ceil(sqrt(samples))`. The result is deterministic for
/// a given `seed`.
pub fn preservation_oracle(p: &CubicMatrix, config: &OracleConfig) -> PreservationVerdict {
    let m = p.dim();
    let tol = config.tol;
    let samples = config.samples.max(1);
    let resolution = (samples as f64).sqrt().ceil() as usize;

    let mut scan: Option<Scan> = None;
    let push = |scan: &mut Option<Scan>, probe: Probe| {
        let s = Scan::single(probe, tol);
        *scan = Some(match scan.take() {
            Some(acc) => acc.merge(s),
            None => s,
        });
    };

    for i in 0..m {
        let mut x = vec![0.0; m];
        x[i] = 1.0;
        push(&mut scan, Probe::evaluate(p, &x, Strategy::Vertex, i));
    }

    let faces = faces(m);
    let grid_scans: Vec<Scan> = faces
        .par_iter()
        .enumerate()
        .filter_map(|(f, face)| {
            let mut local: Option<Scan> = None;
            let base = (f + 1) << 32;
            let mut idx = 0;
            face_grid(m, face, resolution, |x| {
                let s = Scan::single(Probe::evaluate(p, x, Strategy::Grid, base + idx), tol);
                idx += 1;
                local = Some(match local.take() {
                    Some(acc) => acc.merge(s),
                    None => s,
                });
            });
            local
        })
        .collect();
    for s in grid_scans {
        scan = Some(scan.take().expect("vertices scanned").merge(s));
    }

    let batches = samples.div_ceil(BATCH);
    let random_base = (faces.len() + 1) << 32;
    let random_scan = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(b as u64);
            let count = BATCH.min(samples - b * BATCH);
            (0..count)
                .map(|s| {
                    let x = uniform_simplex(&mut rng, m);
                    Scan::single(Probe::evaluate(p, &x, Strategy::Random, random_base + b * BATCH + s), tol)
                })
                .reduce(Scan::merge)
                .expect("batch is non-empty")
        })
        .reduce_with(Scan::merge)
        .expect("at least one batch");
    let mut scan = scan.expect("vertices scanned").merge(random_scan);

    let (refined, refinement_evals) = refine(p, &scan.worst, usize::MAX);
    if refined.value < scan.worst.value {
        scan.worst = refined;
    }

    let worst = &scan.worst;
    let negative = worst.value < -tol;
    let counterexample = if negative {
        Some(worst)
    } else {
        scan.first_mass_violation.as_ref()
    }
    .map(|probe| Counterexample {
        image: p.apply_slice(&probe.point),
        point: probe.point.clone(),
        coordinate: probe.coordinate,
        value: probe.value,
        mass_defect: probe.mass_defect,
    });

    PreservationVerdict {
        preserved: counterexample.is_none(),
        counterexample,
        samples_used: scan.count + refinement_evals,
        strategy: worst.strategy,
        min_image_coordinate: worst.value,
        max_mass_defect: scan.max_mass_defect,
        samples,
        seed: config.seed,
        tol,
        note: "sampling falsifier: a counterexample is conclusive, a pass is evidence only".into(),
    }
}

fn faces(m: usize) -> Vec<Vec<usize>> {
    if m == 2 {
        return vec![vec![0, 1]];
    }
    let mut out = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            for l in (j + 1)..m {
                out.push(vec![i, j, l]);
            }
        }
    }
    out
}

/// Projected gradient descent of the worst image coordinate over the simplex.
fn refine(p: &CubicMatrix, start: &Probe, order: usize) -> (Probe, usize) {
    let m = p.dim();
    let k = start.coordinate;
    let objective = |x: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                acc += p.get(i, j, k) * x[i] * x[j];
            }
        }
        acc
    };
    let scale = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| p.get(i, j, k).abs())
        .fold(0.0, f64::max)
        .max(1e-12);

    let mut x = start.point.clone();
    let mut value = objective(&x);
    let mut evals = 1;
    let mut rate = 0.5 / scale;
    for _ in 0..DESCENT_STEPS {
        let grad: Vec<f64> = (0..m)
            .map(|i| 2.0 * (0..m).map(|j| p.get(i, j, k) * x[j]).sum::<f64>())
            .collect();
        let mut improved = false;
        for _ in 0..20 {
            let trial: Vec<f64> = x.iter().zip(&grad).map(|(xi, g)| xi - rate * g).collect();
            let trial = project_to_simplex(&trial);
            let v = objective(&trial);
            evals += 1;
            if v < value {
                x = trial;
                value = v;
                improved = true;
                rate *= 1.5;
                break;
            }
            rate *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (Probe::evaluate(p, &x, Strategy::LocalMinRefinement, order), evals)
}
