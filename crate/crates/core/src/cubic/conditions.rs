use serde::{Deserialize, Serialize};

use super::CubicMatrix;
use crate::error::{Error, Result};

/// Row-sum condition: `sum_k P[i][j][k] = 1` for every pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumCondition {
    pub holds: bool,
    pub worst_residual: f64,
    pub worst_pair: (usize, usize),
}

/// A diagonal coefficient `P[i][i][k]` outside `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalViolation {
    pub i: usize,
    pub k: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    BelowLowerBound,
    AboveUpperBound,
    /// The bound involves the square root of a negative product; only
    /// possible when the diagonal condition already fails.
    NotEvaluable,
}

/// An off-diagonal coefficient `P[i][j][k]` (`i < j`) outside its bound.
///
/// `margin` is the signed slack of the violated inequality (negative when
/// violated); it is `None` for [`ViolationKind::NotEvaluable`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairViolation {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub value: f64,
    pub margin: Option<f64>,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCondition {
    pub holds: bool,
    pub violations: Vec<PairViolation>,
}

/// Exact range of the operator restricted to the edge `[e_i, e_j]`, coordinate `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeVerdict {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub range: UnitRange,
    pub contained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCheck {
    pub holds: bool,
    /// Only the failing edges; empty when `holds`.
    pub failures: Vec<EdgeVerdict>,
    pub edges_checked: usize,
}

/// Verdicts for every coefficient condition, with witnesses.
///
/// Indices in witnesses are zero-based. `cond_iii` is the sufficient lower
/// bound `P_ij,k >= -sqrt(P_ii,k P_jj,k) / (m - 1)`; `cond_iii_prime` is the
/// necessary two-sided bound
/// `-sqrt(P_ii,k P_jj,k) <= P_ij,k <= 1 + sqrt((1 - P_ii,k)(1 - P_jj,k))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub m: usize,
    pub tol: f64,
    pub cond_i: SumCondition,
    pub cond_ii: DiagonalCondition,
    pub cond_iii: PairCondition,
    pub cond_iii_prime: PairCondition,
    pub cond_iv_volterra: bool,
    pub is_3_stochastic: bool,
    pub has_negative_offdiagonal: bool,
    pub edge_necessity: EdgeCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalCondition {
    pub holds: bool,
    pub violations: Vec<DiagonalViolation>,
}

impl ConditionReport {
    /// Conditions i), ii) and iii): enough to guarantee preservation.
    pub fn sufficient(&self) -> bool {
        self.cond_i.holds && self.cond_ii.holds && self.cond_iii.holds
    }

    /// Conditions i), ii) and iii'): required of any preserving operator.
    pub fn necessary(&self) -> bool {
        self.cond_i.holds && self.cond_ii.holds && self.cond_iii_prime.holds
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitRange {
    pub lo: f64,
    pub hi: f64,
}

/// Exact range of `f(t) = (a - 2b + c) t^2 + 2 (b - c) t + c` over `t in [0, 1]`.
///
/// `f` is the restriction of one output coordinate to an edge of the simplex,
/// with `a`, `c` the two diagonal coefficients and `b` the mixed one.
pub fn quadratic_range_on_unit_interval(a: f64, b: f64, c: f64) -> UnitRange {
    let curvature = a - 2.0 * b + c;
    let (mut lo, mut hi) = (a.min(c), a.max(c));
    if curvature != 0.0 {
        let vertex = (c - b) / curvature;
        if vertex > 0.0 && vertex < 1.0 {
            let f = (curvature * vertex + 2.0 * (b - c)) * vertex + c;
            lo = lo.min(f);
            hi = hi.max(f);
        }
    }
    UnitRange { lo, hi }
}

/// Checks that every edge restriction `t e_i + (1 - t) e_j -> x'_k` stays in
/// `[0, 1]` (up to `tol`), using the exact range of the quadratic.
pub fn check_edge_necessity(p: &CubicMatrix, tol: f64) -> EdgeCheck {
    let m = p.dim();
    let mut failures = Vec::new();
    let mut edges_checked = 0;
    for i in 0..m {
        for j in (i + 1)..m {
            for k in 0..m {
                edges_checked += 1;
                let range = quadratic_range_on_unit_interval(p.get(i, i, k), p.get(i, j, k), p.get(j, j, k));
                let contained = range.lo >= -tol && range.hi <= 1.0 + tol;
                if !contained {
                    failures.push(EdgeVerdict { i, j, k, range, contained });
                }
            }
        }
    }
    EdgeCheck {
        holds: failures.is_empty(),
        failures,
        edges_checked,
    }
}

/// Evaluates all coefficient conditions on a symmetrized matrix.
///
/// Equalities are tested to within `tol`; inequalities are non-strict and
/// allow `tol` of slack.
pub fn check_conditions(p: &CubicMatrix, tol: f64) -> Result<ConditionReport> {
    if !(tol >= 0.0) || !tol.is_finite() {
        return Err(Error::InvalidInput(format!("tolerance must be a finite nonnegative number, got {tol}")));
    }
    let m = p.dim();

    let mut cond_i = SumCondition {
        holds: true,
        worst_residual: 0.0,
        worst_pair: (0, 0),
    };
    for i in 0..m {
        for j in i..m {
            let residual = (p.row(i, j).iter().sum::<f64>() - 1.0).abs();
            if residual > cond_i.worst_residual {
                cond_i.worst_residual = residual;
                cond_i.worst_pair = (i, j);
            }
        }
    }
    cond_i.holds = cond_i.worst_residual <= tol;

    let mut diagonal = Vec::new();
    for i in 0..m {
        for k in 0..m {
            let v = p.get(i, i, k);
            if v < -tol || v > 1.0 + tol {
                diagonal.push(DiagonalViolation { i, k, value: v });
            }
        }
    }

    let lower_scale = 1.0 / (m as f64 - 1.0);
    let mut sufficient = Vec::new();
    let mut necessary = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            for k in 0..m {
                let (a, b, c) = (p.get(i, i, k), p.get(i, j, k), p.get(j, j, k));
                let witness = |margin, kind| PairViolation { i, j, k, value: b, margin, kind };
                let product = a * c;
                if product < 0.0 {
                    sufficient.push(witness(None, ViolationKind::NotEvaluable));
                    necessary.push(witness(None, ViolationKind::NotEvaluable));
                    continue;
                }
                let root = product.sqrt();
                let margin = b + lower_scale * root;
                if margin < -tol {
                    sufficient.push(witness(Some(margin), ViolationKind::BelowLowerBound));
                }
                let lower = b + root;
                if lower < -tol {
                    necessary.push(witness(Some(lower), ViolationKind::BelowLowerBound));
                }
                let complement = (1.0 - a) * (1.0 - c);
                if complement < 0.0 {
                    necessary.push(witness(None, ViolationKind::NotEvaluable));
                } else {
                    let upper = 1.0 + complement.sqrt() - b;
                    if upper < -tol {
                        necessary.push(witness(Some(upper), ViolationKind::AboveUpperBound));
                    }
                }
            }
        }
    }

    let mut volterra = true;
    let mut nonnegative = true;
    let mut negative_offdiagonal = false;
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let v = p.get(i, j, k);
                if k != i && k != j && v.abs() > tol {
                    volterra = false;
                }
                if v < -tol {
                    nonnegative = false;
                    if i != j {
                        negative_offdiagonal = true;
                    }
                }
            }
        }
    }

    Ok(ConditionReport {
        m,
        tol,
        is_3_stochastic: nonnegative && cond_i.holds,
        cond_i,
        cond_ii: DiagonalCondition {
            holds: diagonal.is_empty(),
            violations: diagonal,
        },
        cond_iii: PairCondition {
            holds: sufficient.is_empty(),
            violations: sufficient,
        },
        cond_iii_prime: PairCondition {
            holds: necessary.is_empty(),
            violations: necessary,
        },
        cond_iv_volterra: volterra,
        has_negative_offdiagonal: negative_offdiagonal,
        edge_necessity: check_edge_necessity(p, tol),
    })
}
