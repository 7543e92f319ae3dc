//! Shared numeric conventions: the `e/(e-1)` constant, `0·log 0 = 0`
//! extensions, and the blended absolute/relative tolerance used when
//! comparing left- and right-hand sides of inequalities.

/// Default tolerance scale for LHS/RHS comparisons.
///
/// The blended tolerance is `scale · (1 + |lhs| + |rhs|)`, sized for path
/// sums of up to ~10^4 terms at double precision. Indicators are never
/// fuzzed; tolerance applies only to aggregate comparisons.
pub const DEFAULT_TOL_SCALE: f64 = 1e-9;

/// Tolerance scale used when classifying a tree process as
/// martingale/sub/super. Distinct from the inequality tolerance.
pub const CLASSIFY_TOL_SCALE: f64 = 1e-10;

/// `e/(e-1)`, the sharp constant of the L log L bounds. Always derived from
/// the floating-point exponential constant, never a decimal literal.
#[inline]
pub fn e_ratio() -> f64 {
    std::f64::consts::E / (std::f64::consts::E - 1.0)
}

/// `x·log x` with the continuous extension `0·log 0 = 0`.
#[inline]
pub fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `a·log b` with the convention that `a = 0` kills the term even when
/// `log b` would diverge (used for `x_n·log(x_n/x_0)` at `x_n = 0`).
#[inline]
pub fn xlogy(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * b.ln()
    }
}

/// `x·(1 - log x)` with the continuous extension to `0` at `x = 0`.
#[inline]
pub fn entropy_term(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (1.0 - x.ln())
    }
}

/// Blended absolute/relative tolerance scale.
///
/// `Tol(s)` compares aggregates as `gap >= -s·(1 + |lhs| + |rhs|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tol(pub f64);

impl Default for Tol {
    fn default() -> Self {
        Tol(DEFAULT_TOL_SCALE)
    }
}

impl Tol {
    /// Absolute tolerance for comparing the pair `(lhs, rhs)`.
    #[inline]
    pub fn for_pair(&self, lhs: f64, rhs: f64) -> f64 {
        self.0 * (1.0 + lhs.abs() + rhs.abs())
    }

    /// `lhs <= rhs` up to the blended tolerance.
    #[inline]
    pub fn le(&self, lhs: f64, rhs: f64) -> bool {
        rhs - lhs >= -self.for_pair(lhs, rhs)
    }

    /// `a == b` up to the blended tolerance.
    #[inline]
    pub fn eq(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.for_pair(a, b)
    }
}

/// Blended tolerance at the default scale.
#[inline]
pub fn blended_tol(lhs: f64, rhs: f64) -> f64 {
    Tol::default().for_pair(lhs, rhs)
}
