//! Finite real paths `x_0..x_n` and the elementary functionals everything
//! else is built from: running maximum, increments, first crossing of a
//! level.
//!
//! Indicator conventions are fixed once here and never fuzzed:
//! `{max_{k-1} < lambda}` is strict, `{max_n >= lambda}` is non-strict.
//! Ties `lambda = x_k` follow these comparisons exactly on the stored
//! doubles; this is what makes the crossing-gap formula exact.

use std::fmt;
use std::ops::Deref;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Errors from path construction and parsing.
#[derive(Debug, Clone, PartialEq)]
pub enum PathError {
    /// No entries at all.
    Empty,
    /// An entry is NaN or infinite.
    NonFinite { index: usize, value: f64 },
    /// A token in a path text file did not parse as a real number.
    Parse { token: String, position: usize },
    /// A nonnegative path was requested but an entry is negative.
    NegativeEntry { index: usize, value: f64 },
    /// A positive-start path was requested but `x_0 <= 0`.
    NonPositiveStart { value: f64 },
}

impl fmt::Display for PathError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Empty => write!(f, "path is empty"),
            Self::NonFinite { index, value } => {
                write!(f, "entry {index} is not finite: {value}")
            }
            Self::Parse { token, position } => {
                write!(f, "token {position} is not a real number: {token:?}")
            }
            Self::NegativeEntry { index, value } => {
                write!(
                    f,
                    "entry {index} is negative ({value}) in a nonnegative path"
                )
            }
            Self::NonPositiveStart { value } => {
                write!(f, "x_0 = {value} but a positive start is required")
            }
        }
    }
}

impl std::error::Error for PathError {}

// ---------------------------------------------------------------------------
// Path types
// ---------------------------------------------------------------------------

/// A finite real path `x_0..x_n`. Non-empty, every entry finite. A single
/// point (`n = 0`) is legal: all sums over `k = 1..n` are empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    values: Vec<f64>,
}

impl Path {
    pub fn new(values: impl Into<Vec<f64>>) -> Result<Self, PathError> {
        let values = values.into();
        if values.is_empty() {
            return Err(PathError::Empty);
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(PathError::NonFinite { index, value });
            }
        }
        Ok(Path { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of steps `n` (= length - 1).
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    /// `x_0`.
    pub fn start(&self) -> f64 {
        self.values[0]
    }

    /// `x_n`.
    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("non-empty by invariant")
    }

    /// Running maximum: `out[k] = max(x_0..x_k)`. Nondecreasing, starts at `x_0`.
    pub fn running_max(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.values.len());
        let mut m = f64::NEG_INFINITY;
        for &x in &self.values {
            m = m.max(x);
            out.push(m);
        }
        out
    }

    /// `max(x_0..x_n)`.
    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x))
    }

    /// Increments `out[k-1] = x_k - x_{k-1}` for `k = 1..n`; empty for a
    /// single point.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Smallest `k` with `x_k >= level`, or `None` if the path never
    /// reaches the level.
    pub fn first_crossing(&self, level: f64) -> Option<usize> {
        self.values.iter().position(|&x| x >= level)
    }

    /// Elementwise affine image `a·x + c`.
    pub fn affine(&self, a: f64, c: f64) -> Result<Path, PathError> {
        Path::new(self.values.iter().map(|&x| a * x + c).collect::<Vec<_>>())
    }
}

/// A path with all entries `>= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonnegPath(Path);

impl NonnegPath {
    pub fn new(values: impl Into<Vec<f64>>) -> Result<Self, PathError> {
        Path::new(values).and_then(Self::from_path)
    }

    pub fn from_path(path: Path) -> Result<Self, PathError> {
        for (index, &value) in path.values().iter().enumerate() {
            if value < 0.0 {
                return Err(PathError::NegativeEntry { index, value });
            }
        }
        Ok(NonnegPath(path))
    }

    pub fn as_path(&self) -> &Path {
        &self.0
    }
}

impl Deref for NonnegPath {
    type Target = Path;
    fn deref(&self) -> &Path {
        &self.0
    }
}

/// A nonnegative path with `x_0 > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveStartPath(NonnegPath);

impl PositiveStartPath {
    pub fn new(values: impl Into<Vec<f64>>) -> Result<Self, PathError> {
        NonnegPath::new(values).and_then(Self::from_nonneg)
    }

    pub fn from_nonneg(path: NonnegPath) -> Result<Self, PathError> {
        if path.start() <= 0.0 {
            return Err(PathError::NonPositiveStart {
                value: path.start(),
            });
        }
        Ok(PositiveStartPath(path))
    }

    pub fn as_nonneg(&self) -> &NonnegPath {
        &self.0
    }
}

impl Deref for PositiveStartPath {
    type Target = NonnegPath;
    fn deref(&self) -> &NonnegPath {
        &self.0
    }
}

// ---------------------------------------------------------------------------
// Validation / classification
// ---------------------------------------------------------------------------

/// A raw sequence classified as the strongest path type it satisfies.
#[derive(Debug, Clone, PartialEq)]
pub enum ValidatedPath {
    /// Some entry is negative.
    General(Path),
    /// All entries `>= 0` but `x_0 = 0`.
    Nonneg(NonnegPath),
    /// All entries `>= 0` and `x_0 > 0`.
    PositiveStart(PositiveStartPath),
}

impl ValidatedPath {
    pub fn as_path(&self) -> &Path {
        match self {
            Self::General(p) => p,
            Self::Nonneg(p) => p,
            Self::PositiveStart(p) => p,
        }
    }

    pub fn as_nonneg(&self) -> Option<&NonnegPath> {
        match self {
            Self::General(_) => None,
            Self::Nonneg(p) => Some(p),
            Self::PositiveStart(p) => Some(p),
        }
    }

    pub fn as_positive_start(&self) -> Option<&PositiveStartPath> {
        match self {
            Self::PositiveStart(p) => Some(p),
            _ => None,
        }
    }

    /// Human-readable name of the strongest class.
    pub fn class_name(&self) -> &'static str {
        match self {
            Self::General(_) => "general",
            Self::Nonneg(_) => "nonnegative",
            Self::PositiveStart(_) => "positive-start",
        }
    }
}

/// Validate a raw sequence and report the strongest applicable path type.
pub fn validate(values: impl Into<Vec<f64>>) -> Result<ValidatedPath, PathError> {
    let path = Path::new(values)?;
    match NonnegPath::from_path(path.clone()) {
        Err(_) => Ok(ValidatedPath::General(path)),
        Ok(nonneg) => match PositiveStartPath::from_nonneg(nonneg.clone()) {
            Err(_) => Ok(ValidatedPath::Nonneg(nonneg)),
            Ok(pos) => Ok(ValidatedPath::PositiveStart(pos)),
        },
    }
}

/// Parse the path text format: one real per line, or a single
/// comma-separated line. Leading/trailing whitespace is ignored, blank
/// lines are skipped.
pub fn parse_path_text(text: &str) -> Result<ValidatedPath, PathError> {
    let trimmed = text.trim();
    let tokens: Vec<&str> = if trimmed.contains('\n') {
        trimmed
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect()
    } else if trimmed.contains(',') {
        trimmed.split(',').map(str::trim).collect()
    } else if trimmed.is_empty() {
        Vec::new()
    } else {
        vec![trimmed]
    };
    if tokens.is_empty() {
        return Err(PathError::Empty);
    }
    let mut values = Vec::with_capacity(tokens.len());
    for (position, token) in tokens.iter().enumerate() {
        let v: f64 = token.parse().map_err(|_| PathError::Parse {
            token: (*token).to_string(),
            position,
        })?;
        if !v.is_finite() {
            return Err(PathError::NonFinite {
                index: position,
                value: v,
            });
        }
        values.push(v);
    }
    validate(values)
}
