//! Deterministic level inequalities on a single path, the exact crossing
//! gap, and the trading (hedge) reading of the transform terms.
//!
//! For a path `x_0..x_n` and any real level `lambda`, with `m_k` the
//! running maximum:
//!
//! eq1:  `lambda·1{m_n >= lambda} <= x_0 ∧ lambda
//!         + Σ_{k=1..n} 1{m_{k-1} < lambda}·Δx_k  -  x_n·1{m_n < lambda}`
//!
//! eq2:  `lambda·1{m_n >= lambda} <= -(x_0 - lambda)·1{x_0 >= lambda}
//!         - Σ_{k=1..n} 1{m_{k-1} >= lambda}·Δx_k  +  x_n·1{m_n >= lambda}`
//!
//! Both hold with the same gap: zero when the path never reaches the level
//! or starts at/above it, and exactly `x_j - lambda` when the path first
//! crosses at step `j`. `gap_oracle` computes that case formula directly
//! and is the independent check against the summed evaluations.
//!
//! The L^p form (eq5, nonnegative paths, `p > 1`, `q = p/(p-1)`):
//!
//! eq5:  `m_n^p <= q^p·x_n^p - q·x_0^p - q·p·Σ m_{k-1}^{p-1}·Δx_k`
//!
//! and the two algebraically identical L log L forms (eq6/eq7, `x_0 > 0`):
//!
//! eq6:  `m_n <= e/(e-1)·[x_0 + x_n·log(x_n/x_0) - Σ log(m_{k-1}/x_0)·Δx_k]`
//! eq7:  `m_n <= e/(e-1)·[x_0·(1 - log x_0) + x_n·log x_n - Σ log m_{k-1}·Δx_k]`

use std::fmt;

use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::num::{blended_tol, e_ratio, xlogx, xlogy};
use crate::path::{NonnegPath, Path, PositiveStartPath};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Errors from inequality evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum IneqError {
    /// The L^p exponent must satisfy `p > 1`.
    ExponentOutOfRange { exponent: f64 },
    /// An argument left the operation's domain.
    Domain { what: &'static str, value: f64 },
}

impl fmt::Display for IneqError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ExponentOutOfRange { exponent } => {
                write!(f, "exponent must be > 1, got {exponent}")
            }
            Self::Domain { what, value } => write!(f, "{what} out of domain: {value}"),
        }
    }
}

impl std::error::Error for IneqError {}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Which of the three proof cases a `(path, level)` pair falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProofCase {
    /// `m_n < lambda`: the path never reaches the level. Equality.
    BelowLevel,
    /// `x_0 >= lambda`: the path starts at or above the level. Equality.
    StartAbove,
    /// `x_0 < lambda <= m_n`: first crossing at step `j >= 1`;
    /// gap `= x_j - lambda`.
    Crossing(usize),
}

impl ProofCase {
    pub fn name(&self) -> &'static str {
        match self {
            Self::BelowLevel => "BelowLevel",
            Self::StartAbove => "StartAbove",
            Self::Crossing(_) => "Crossing",
        }
    }

    pub fn crossing_index(&self) -> Option<usize> {
        match self {
            Self::Crossing(j) => Some(*j),
            _ => None,
        }
    }
}

impl fmt::Display for ProofCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Crossing(j) => write!(f, "Crossing({j})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Both sides of one inequality evaluation, their gap `rhs - lhs`, and the
/// proof-case classification when a level is involved.
///
/// Serializes to a flat JSON object with keys `lhs`, `rhs`, `gap`, `case`,
/// `crossing_index` (nullable), `level` (nullable), `exponent` (nullable).
#[derive(Debug, Clone, PartialEq)]
pub struct IneqReport {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    /// Present for the level inequalities (eq1/eq2), absent for eq5/eq6/eq7.
    pub case: Option<ProofCase>,
    /// The level `lambda`, when one is involved.
    pub level: Option<f64>,
    /// The L^p exponent, present only for eq5.
    pub exponent: Option<f64>,
}

impl IneqReport {
    /// `gap >= -tol` at the default blended tolerance.
    pub fn holds(&self) -> bool {
        self.holds_at(crate::num::Tol::default())
    }

    pub fn holds_at(&self, tol: crate::num::Tol) -> bool {
        self.gap >= -tol.for_pair(self.lhs, self.rhs)
    }
}

impl Serialize for IneqReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("IneqReport", 7)?;
        s.serialize_field("lhs", &self.lhs)?;
        s.serialize_field("rhs", &self.rhs)?;
        s.serialize_field("gap", &self.gap)?;
        s.serialize_field("case", &self.case.map(|c| c.name()))?;
        s.serialize_field(
            "crossing_index",
            &self.case.and_then(|c| c.crossing_index()),
        )?;
        s.serialize_field("level", &self.level)?;
        s.serialize_field("exponent", &self.exponent)?;
        s.end()
    }
}

/// Which of the two level inequalities a transform refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WhichIneq {
    /// eq1: hold one unit until the level is first reached, then stop.
    Eq1,
    /// eq2: short one unit from the first time at/above the level onward.
    Eq2,
}

impl WhichIneq {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Eq1 => "eq1",
            Self::Eq2 => "eq2",
        }
    }
}

/// The hedging reading of a level inequality: start with `initial_capital`,
/// hold `positions[k-1]` units of the underlying over `(k-1, k]`, collect
/// `gains = Σ H_k·Δx_k`, add the `terminal_term`, and cover the digital
/// `payoff = lambda·1{m_n >= lambda}`. What is left over is exactly the
/// inequality's gap.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct HedgeDecomposition {
    pub initial_capital: f64,
    /// Predictable positions `H_1..H_n`.
    pub positions: Vec<f64>,
    /// `Σ H_k·Δx_k`.
    pub gains: f64,
    pub terminal_term: f64,
    /// `lambda·1{m_n >= lambda}`, the LHS being superhedged.
    pub payoff: f64,
}

impl HedgeDecomposition {
    /// `initial_capital + gains + terminal_term - payoff`; equals the gap
    /// of the corresponding report up to rounding.
    pub fn surplus(&self) -> f64 {
        self.initial_capital + self.gains + self.terminal_term - self.payoff
    }
}

// ---------------------------------------------------------------------------
// Level inequalities (eq1, eq2)
// ---------------------------------------------------------------------------

/// Classify `(path, level)` into the three proof cases.
pub fn proof_case(path: &Path, level: f64) -> ProofCase {
    if path.start() >= level {
        ProofCase::StartAbove
    } else {
        match path.first_crossing(level) {
            None => ProofCase::BelowLevel,
            Some(j) => ProofCase::Crossing(j),
        }
    }
}

/// Exact gap of both level inequalities, from the case formula: `0` unless
/// the path starts below and later crosses, in which case `x_j - level`
/// at the first crossing `j`. Serves as the independent oracle for the
/// summed evaluations in [`eval_ineq1`] / [`eval_ineq2`].
pub fn gap_oracle(path: &Path, level: f64) -> f64 {
    match proof_case(path, level) {
        ProofCase::BelowLevel | ProofCase::StartAbove => 0.0,
        ProofCase::Crossing(j) => path.values()[j] - level,
    }
}

/// Evaluate eq1 at `level`.
pub fn eval_ineq1(path: &Path, level: f64) -> IneqReport {
    let values = path.values();
    let rm = path.running_max();
    let n = path.steps();
    let reached = rm[n] >= level;

    let lhs = if reached { level } else { 0.0 };
    let mut transform = 0.0;
    for k in 1..=n {
        if rm[k - 1] < level {
            transform += values[k] - values[k - 1];
        }
    }
    let terminal = if reached { 0.0 } else { -path.terminal() };
    let rhs = path.start().min(level) + transform + terminal;

    IneqReport {
        lhs,
        rhs,
        gap: rhs - lhs,
        case: Some(proof_case(path, level)),
        level: Some(level),
        exponent: None,
    }
}

/// Evaluate eq2 at `level`.
pub fn eval_ineq2(path: &Path, level: f64) -> IneqReport {
    let values = path.values();
    let rm = path.running_max();
    let n = path.steps();
    let reached = rm[n] >= level;

    let lhs = if reached { level } else { 0.0 };
    let mut transform = 0.0;
    for k in 1..=n {
        if rm[k - 1] >= level {
            transform += values[k] - values[k - 1];
        }
    }
    let capital = if path.start() >= level {
        -(path.start() - level)
    } else {
        0.0
    };
    let terminal = if reached { path.terminal() } else { 0.0 };
    let rhs = capital - transform + terminal;

    IneqReport {
        lhs,
        rhs,
        gap: rhs - lhs,
        case: Some(proof_case(path, level)),
        level: Some(level),
        exponent: None,
    }
}

/// Decompose a level inequality into its hedging parts.
pub fn hedge_decompose(path: &Path, level: f64, which: WhichIneq) -> HedgeDecomposition {
    let values = path.values();
    let rm = path.running_max();
    let n = path.steps();
    let reached = rm[n] >= level;
    let payoff = if reached { level } else { 0.0 };

    let positions: Vec<f64> = (1..=n)
        .map(|k| match which {
            WhichIneq::Eq1 => {
                if rm[k - 1] < level {
                    1.0
                } else {
                    0.0
                }
            }
            WhichIneq::Eq2 => {
                if rm[k - 1] >= level {
                    -1.0
                } else {
                    0.0
                }
            }
        })
        .collect();
    let gains: f64 = positions
        .iter()
        .enumerate()
        .map(|(i, h)| h * (values[i + 1] - values[i]))
        .sum();

    let (initial_capital, terminal_term) = match which {
        WhichIneq::Eq1 => (
            path.start().min(level),
            if reached { 0.0 } else { -path.terminal() },
        ),
        WhichIneq::Eq2 => (
            if path.start() >= level {
                -(path.start() - level)
            } else {
                0.0
            },
            if reached { path.terminal() } else { 0.0 },
        ),
    };

    HedgeDecomposition {
        initial_capital,
        positions,
        gains,
        terminal_term,
        payoff,
    }
}

// ---------------------------------------------------------------------------
// L^p form (eq5)
// ---------------------------------------------------------------------------

/// Conjugate exponent `q = p/(p-1)`; always derived from `p`, never
/// supplied independently.
pub fn conjugate(exponent: f64) -> Result<f64, IneqError> {
    if !exponent.is_finite() || exponent <= 1.0 {
        return Err(IneqError::ExponentOutOfRange { exponent });
    }
    Ok(exponent / (exponent - 1.0))
}

/// Evaluate eq5 on a nonnegative path.
pub fn eval_lp(path: &NonnegPath, exponent: f64) -> Result<IneqReport, IneqError> {
    let q = conjugate(exponent)?;
    let p = exponent;
    let values = path.values();
    let rm = path.running_max();
    let n = path.steps();

    let lhs = rm[n].powf(p);
    let mut transform = 0.0;
    for k in 1..=n {
        transform += rm[k - 1].powf(p - 1.0) * (values[k] - values[k - 1]);
    }
    let rhs = q.powf(p) * path.terminal().powf(p) - q * path.start().powf(p) - q * p * transform;

    Ok(IneqReport {
        lhs,
        rhs,
        gap: rhs - lhs,
        case: None,
        level: None,
        exponent: Some(p),
    })
}

// ---------------------------------------------------------------------------
// L log L forms (eq6, eq7)
// ---------------------------------------------------------------------------

/// Evaluate the two algebraically identical L log L forms.
///
/// Both reports share `lhs = m_n`; the rhs values differ only by rounding
/// since `Σ Δx_k = x_n - x_0`. The `0·log 0 = 0` convention applies to the
/// `x_n·log(x_n/x_0)` and `x_n·log x_n` terms.
pub fn eval_llogl(path: &PositiveStartPath) -> (IneqReport, IneqReport) {
    let values = path.values();
    let rm = path.running_max();
    let n = path.steps();
    let x0 = path.start();
    let xn = path.terminal();
    let lhs = rm[n];

    let mut sum6 = 0.0; // Σ log(m_{k-1}/x_0)·Δx_k
    let mut sum7 = 0.0; // Σ log(m_{k-1})·Δx_k
    for k in 1..=n {
        let d = values[k] - values[k - 1];
        sum6 += (rm[k - 1] / x0).ln() * d;
        sum7 += rm[k - 1].ln() * d;
    }

    let rhs6 = e_ratio() * (x0 + xlogy(xn, xn / x0) - sum6);
    let rhs7 = e_ratio() * (x0 * (1.0 - x0.ln()) + xlogx(xn) - sum7);

    let report = |rhs: f64| IneqReport {
        lhs,
        rhs,
        gap: rhs - lhs,
        case: None,
        level: None,
        exponent: None,
    };
    (report(rhs6), report(rhs7))
}

/// Blended tolerance for a report's LHS/RHS pair at the default scale.
pub fn report_tol(report: &IneqReport) -> f64 {
    blended_tol(report.lhs, report.rhs)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
