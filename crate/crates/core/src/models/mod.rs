//! The named operators: the general two-state operator, its logistic special
//! case, and two three-state operators with non-stochastic coefficients.
//!
//! | kind       | coordinates  | admissible parameters                               |
//! |------------|--------------|-----------------------------------------------------|
//! | `logistic` | `(x, y)`     | `mu in (2, 4]`                                      |
//! | `v1`       | `(x, y)`     | `a, c in [0, 1]`, `b in [-sqrt(ac), 1 + sqrt((1-a)(1-c))]` |
//! | `va`       | `(x, y)`     | `b in [-1, 0)`                                      |
//! | `v2`       | `(x, y, z)`  | `a in [0, 2]`                                       |
//! | `v3`       | `(x, y, z)`  | `a in (0, 3)`                                       |

mod invariance;
pub mod v2;
pub mod v3;

pub use invariance::{
    classify_invariant_set, verify_invariance, BoundaryCheck, InvarianceReport, InvariantSetLabel,
};
pub use v2::V2Set;
pub use v3::V3Set;

use serde::{Deserialize, Serialize};

use crate::cubic::CubicMatrix;
use crate::dynamics::{lyapunov_1d, lyapunov_operator, Logistic, LyapunovEstimate, Map1D, QuadraticMap};
use crate::error::{Error, Result};
use crate::operator::SimplexPoint;

/// Logistic parameter beyond which the period-doubling cascade has
/// accumulated and chaotic parameters appear.
pub const ACCUMULATION_POINT: f64 = 3.56995;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelKind {
    Logistic { mu: f64 },
    V1 { a: f64, b: f64, c: f64 },
    Va { b: f64 },
    V2 { a: f64 },
    V3 { a: f64 },
}

/// A named operator with validated parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ModelSpec(ModelKind);

fn out_of_range(name: &'static str, value: f64, range: &str) -> Error {
    Error::ParameterOutOfRange {
        name,
        value,
        range: range.to_string(),
    }
}

fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(out_of_range(name, value, "finite reals"))
    }
}

impl ModelSpec {
    /// The two-state form of `y' = mu y (1 - y)`.
    pub fn logistic(mu: f64) -> Result<Self> {
        let mu = finite("mu", mu)?;
        if !(mu > 2.0 && mu <= 4.0) {
            return Err(out_of_range("mu", mu, "(2, 4]"));
        }
        Ok(Self(ModelKind::Logistic { mu }))
    }

    /// `x' = a x^2 + 2 b x y + c y^2`, `y' = 1 - x'` on the 1-simplex.
    pub fn v1(a: f64, b: f64, c: f64) -> Result<Self> {
        let (a, b, c) = (finite("a", a)?, finite("b", b)?, finite("c", c)?);
        if !(0.0..=1.0).contains(&a) {
            return Err(out_of_range("a", a, "[0, 1]"));
        }
        if !(0.0..=1.0).contains(&c) {
            return Err(out_of_range("c", c, "[0, 1]"));
        }
        let lo = -(a * c).sqrt();
        let hi = 1.0 + ((1.0 - a) * (1.0 - c)).sqrt();
        if !(lo..=hi).contains(&b) {
            return Err(out_of_range("b", b, &format!("[{lo}, {hi}]")));
        }
        Ok(Self(ModelKind::V1 { a, b, c }))
    }

    /// `v1` with `a = c = 1`; non-stochastic for `b < 0`.
    pub fn va(b: f64) -> Result<Self> {
        let b = finite("b", b)?;
        if !(-1.0..0.0).contains(&b) {
            return Err(out_of_range("b", b, "[-1, 0)"));
        }
        Ok(Self(ModelKind::Va { b }))
    }

    pub fn v2(a: f64) -> Result<Self> {
        let a = finite("a", a)?;
        if !(0.0..=2.0).contains(&a) {
            return Err(out_of_range("a", a, "[0, 2]"));
        }
        Ok(Self(ModelKind::V2 { a }))
    }

    /// The endpoints `a = 0` and `a = 3` are excluded: there one coordinate
    /// decouples and the invariant-set analysis below does not apply.
    pub fn v3(a: f64) -> Result<Self> {
        let a = finite("a", a)?;
        if !(a > 0.0 && a < 3.0) {
            return Err(out_of_range(
                "a",
                a,
                "(0, 3); a = 0 and a = 3 decouple a coordinate and are excluded",
            ));
        }
        Ok(Self(ModelKind::V3 { a }))
    }

    pub fn from_kind(kind: ModelKind) -> Result<Self> {
        match kind {
            ModelKind::Logistic { mu } => Self::logistic(mu),
            ModelKind::V1 { a, b, c } => Self::v1(a, b, c),
            ModelKind::Va { b } => Self::va(b),
            ModelKind::V2 { a } => Self::v2(a),
            ModelKind::V3 { a } => Self::v3(a),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.0
    }

    pub fn dim(&self) -> usize {
        match self.0 {
            ModelKind::Logistic { .. } | ModelKind::V1 { .. } | ModelKind::Va { .. } => 2,
            ModelKind::V2 { .. } | ModelKind::V3 { .. } => 3,
        }
    }

    /// Short identifier such as `v3(a=1)`.
    pub fn label(&self) -> String {
        match self.0 {
            ModelKind::Logistic { mu } => format!("logistic(mu={mu})"),
            ModelKind::V1 { a, b, c } => format!("v1(a={a},b={b},c={c})"),
            ModelKind::Va { b } => format!("va(b={b})"),
            ModelKind::V2 { a } => format!("v2(a={a})"),
            ModelKind::V3 { a } => format!("v3(a={a})"),
        }
    }

    /// The symmetric cubic matrix of the operator.
    pub fn build(&self) -> CubicMatrix {
        match self.0 {
            ModelKind::Logistic { mu } => two_state(1.0, 1.0 - mu / 2.0, 1.0),
            ModelKind::V1 { a, b, c } => two_state(a, b, c),
            ModelKind::Va { b } => two_state(1.0, b, 1.0),
            ModelKind::V2 { a } => {
                let mut p = CubicMatrix::zeros(3).expect("m = 3");
                for i in 0..3 {
                    p.set(i, i, 0, 1.0).expect("finite");
                }
                p.set_sym(0, 1, 0, -a / 2.0).expect("finite");
                p.set_sym(0, 2, 0, -a / 2.0).expect("finite");
                p.set_sym(1, 2, 0, 1.0).expect("finite");
                p.set_sym(0, 1, 1, (2.0 + a) / 2.0).expect("finite");
                p.set_sym(0, 2, 2, (2.0 + a) / 2.0).expect("finite");
                p
            }
            ModelKind::V3 { a } => {
                let mut p = CubicMatrix::zeros(3).expect("m = 3");
                for i in 0..3 {
                    p.set(i, i, 0, 1.0).expect("finite");
                }
                for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                    p.set_sym(i, j, 0, -0.5).expect("finite");
                }
                p.set_sym(0, 1, 1, 1.5).expect("finite");
                p.set_sym(1, 2, 1, a / 2.0).expect("finite");
                p.set_sym(0, 2, 2, 1.5).expect("finite");
                p.set_sym(1, 2, 2, (3.0 - a) / 2.0).expect("finite");
                p
            }
        }
    }

    /// Parameter of the logistic map the model reduces to, if any.
    pub fn logistic_parameter(&self) -> Option<f64> {
        match self.0 {
            ModelKind::Logistic { mu } => Some(mu),
            ModelKind::Va { b } => Some(2.0 * (1.0 - b)),
            ModelKind::V2 { a } => Some(2.0 + a),
            ModelKind::V1 { .. } | ModelKind::V3 { .. } => None,
        }
    }

    /// One-dimensional map driving the model: `y -> mu y (1 - y)` for the
    /// logistic forms, `x -> f(x)` for `v1`, and `t = y + z -> (2 + a) t (1 - t)`
    /// for `v2`.
    pub fn reduction(&self) -> Option<ReducedMap> {
        match self.0 {
            ModelKind::V1 { a, b, c } => Some(ReducedMap::Quadratic(QuadraticMap { a, b, c })),
            ModelKind::V3 { .. } => None,
            _ => Some(ReducedMap::Logistic(
                Logistic::new(self.logistic_parameter().expect("logistic form")).expect("mu in (2, 4]"),
            )),
        }
    }

    /// The coordinate on which [`reduction`](Self::reduction) acts.
    pub fn reduced_coordinate(&self, x: &SimplexPoint) -> Result<Option<f64>> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.dim(),
            });
        }
        let c = x.coords();
        Ok(match self.0 {
            ModelKind::Logistic { .. } | ModelKind::Va { .. } => Some(c[1]),
            ModelKind::V1 { .. } => Some(c[0]),
            ModelKind::V2 { .. } => Some(c[1] + c[2]),
            ModelKind::V3 { .. } => None,
        })
    }

    /// Lift a value of the reduced coordinate back to a simplex point, for the
    /// two-state models.
    pub fn lift_reduced(&self, value: f64) -> Result<Option<SimplexPoint>> {
        Ok(match self.0 {
            ModelKind::Logistic { .. } | ModelKind::Va { .. } => Some(SimplexPoint::new(vec![1.0 - value, value])?),
            ModelKind::V1 { .. } => Some(SimplexPoint::new(vec![value, 1.0 - value])?),
            _ => None,
        })
    }

    /// Chaos indicator for the models conjugate to a logistic map: whether
    /// the logistic parameter exceeds [`ACCUMULATION_POINT`], plus a measured
    /// Lyapunov exponent. For `v2` the exponent comes from tangent iteration of
    /// the full operator.
    pub fn chaos_verdict(&self, x0: &SimplexPoint, iters: usize, transient: usize) -> Result<Option<ChaosVerdict>> {
        let Some(mu) = self.logistic_parameter() else {
            return Ok(None);
        };
        let lyapunov = match self.0 {
            ModelKind::V2 { .. } => lyapunov_operator(&self.build(), x0, iters, transient)?,
            _ => {
                let map = self.reduction().expect("logistic form");
                let start = self.reduced_coordinate(x0)?.expect("two-state");
                lyapunov_1d(&map, start, iters, transient)?
            }
        };
        Ok(Some(ChaosVerdict {
            logistic_parameter: mu,
            beyond_accumulation_point: mu > ACCUMULATION_POINT,
            lyapunov,
        }))
    }
}

impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let kind = ModelKind::deserialize(d)?;
        Self::from_kind(kind).map_err(serde::de::Error::custom)
    }
}

fn two_state(a: f64, b: f64, c: f64) -> CubicMatrix {
    let mut p = CubicMatrix::zeros(2).expect("m = 2");
    p.set(0, 0, 0, a).expect("finite");
    p.set(0, 0, 1, 1.0 - a).expect("finite");
    p.set(1, 1, 0, c).expect("finite");
    p.set(1, 1, 1, 1.0 - c).expect("finite");
    p.set_sym(0, 1, 0, b).expect("finite");
    p.set_sym(0, 1, 1, 1.0 - b).expect("finite");
    p
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReducedMap {
    Logistic(Logistic),
    Quadratic(QuadraticMap),
}

impl Map1D for ReducedMap {
    fn eval(&self, x: f64) -> f64 {
        match self {
            ReducedMap::Logistic(g) => g.eval(x),
            ReducedMap::Quadratic(f) => f.eval(x),
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        match self {
            ReducedMap::Logistic(g) => g.derivative(x),
            ReducedMap::Quadratic(f) => f.derivative(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosVerdict {
    pub logistic_parameter: f64,
    pub beyond_accumulation_point: bool,
    pub lyapunov: LyapunovEstimate,
}

/// An `m`-state operator meeting the necessary coefficient conditions but
/// mapping interior points outside the simplex (for `m >= 3`):
/// `P_ii,1 = 1`, `P_ij,1 = -1` for `i != j`, and the mass 2 of every mixed
/// pair spread evenly over the remaining outputs.
pub fn necessary_not_sufficient(m: usize) -> Result<CubicMatrix> {
    if m < 3 {
        return Err(Error::InvalidInput(format!("the construction needs m >= 3, got {m}")));
    }
    let share = 2.0 / (m as f64 - 1.0);
    CubicMatrix::from_fn(m, |i, j, k| match (i == j, k == 0) {
        (true, true) => 1.0,
        (true, false) => 0.0,
        (false, true) => -1.0,
        (false, false) => share,
    })
}
