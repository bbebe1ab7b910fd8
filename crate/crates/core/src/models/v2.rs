//! Structure of the `v2` operator.
//!
//! With `t = y + z` the operator collapses to `x' = x^2 + t^2 - a x t`,
//! `t' = (2 + a) x t`, which on the simplex is the logistic map with
//! parameter `2 + a`. Each ray `y = omega z` through the vertex `(1, 0, 0)` is
//! invariant, and on it `z' = (2 + a)(1 - (1 + omega) z) z`; the substitution
//! `zeta = (1 + omega) z` turns every one of these fibers into the same
//! logistic map.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Logistic, Map1D};
use crate::error::{Error, Result};
use crate::operator::SimplexPoint;

/// Invariant pieces of the simplex under `v2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "set", rename_all = "snake_case")]
pub enum V2Set {
    /// `y = 0`.
    M0,
    /// `z = 0`.
    M1,
    /// `y = omega z` with `omega > 0`.
    MOmega { omega: f64 },
    /// `x = 1 / (2 + a)`; every point of this segment is fixed.
    X,
}

impl V2Set {
    /// Membership of `point` (coordinates `(x, y, z)`) with slack `tol`.
    pub fn contains(&self, a: f64, point: &[f64], tol: f64) -> bool {
        let (x, y, z) = (point[0], point[1], point[2]);
        match *self {
            V2Set::M0 => y.abs() <= tol,
            V2Set::M1 => z.abs() <= tol,
            V2Set::MOmega { omega } => (y - omega * z).abs() <= tol * (1.0 + omega),
            V2Set::X => (x - 1.0 / (2.0 + a)).abs() <= tol,
        }
    }
}

fn check_a(a: f64) -> Result<()> {
    if (0.0..=2.0).contains(&a) {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange {
            name: "a",
            value: a,
            range: "[0, 2]".into(),
        })
    }
}

fn check_m3(x: &SimplexPoint) -> Result<()> {
    if x.dim() == 3 {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: 3,
            actual: x.dim(),
        })
    }
}

/// `(x, t)` with `t = y + z`.
pub fn reduce_v2(x: &SimplexPoint) -> Result<(f64, f64)> {
    check_m3(x)?;
    let c = x.coords();
    Ok((c[0], c[1] + c[2]))
}

/// One step of the reduced two-variable map.
pub fn vd_step(a: f64, (x, t): (f64, f64)) -> (f64, f64) {
    (x * x + t * t - a * x * t, (2.0 + a) * x * t)
}

/// The fiber map on `y = omega z`, together with the conjugated coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberStep {
    pub z: f64,
    pub z_next: f64,
    /// `zeta = (1 + omega) z`.
    pub zeta: f64,
    /// `(2 + a) zeta (1 - zeta)`; equals `(1 + omega) z_next`.
    pub zeta_next: f64,
}

/// `z' = (2 + a)(1 - (1 + omega) z) z` for `z` in `[0, 1 / (1 + omega)]`.
pub fn restrict_v2_to_momega(omega: f64, a: f64, z: f64) -> Result<FiberStep> {
    check_a(a)?;
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::ParameterOutOfRange {
            name: "omega",
            value: omega,
            range: "(0, inf)".into(),
        });
    }
    let top = 1.0 / (1.0 + omega);
    if !(0.0..=top).contains(&z) {
        return Err(Error::ParameterOutOfRange {
            name: "z",
            value: z,
            range: format!("[0, {top}]"),
        });
    }
    let z_next = (2.0 + a) * (1.0 - (omega + 1.0) * z) * z;
    let zeta = (1.0 + omega) * z;
    let g = Logistic::new(2.0 + a)?;
    Ok(FiberStep {
        z,
        z_next,
        zeta,
        zeta_next: g.eval(zeta),
    })
}

/// Label with priority `M0`, `M1`, `X`, then the fiber `M_omega`.
pub fn classify_v2(a: f64, x: &SimplexPoint, tol: f64) -> Result<V2Set> {
    check_m3(x)?;
    check_a(a)?;
    let c = x.coords();
    Ok(if V2Set::M0.contains(a, c, tol) {
        V2Set::M0
    } else if V2Set::M1.contains(a, c, tol) {
        V2Set::M1
    } else if V2Set::X.contains(a, c, tol) {
        V2Set::X
    } else {
        V2Set::MOmega { omega: c[1] / c[2] }
    })
}
