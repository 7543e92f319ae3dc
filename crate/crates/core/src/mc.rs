//! Seeded path generators with known martingale class, and statistical
//! verification of the expectation inequalities at scales where exact
//! tree enumeration is infeasible.
//!
//! Randomness is counter-based: `(seed, trial, step)` maps through a
//! SplitMix64-style scramble straight to a uniform, so a trial's path is a
//! pure function of `(seed, trial)` independent of execution order or
//! worker count. Aggregation uses a fixed-shape pairwise reduction, which
//! makes every estimate bitwise reproducible across thread counts.
//!
//! All step distributions are two-point, so every generator can be
//! replicated exactly as a small tree model for cross-validation.

use serde::{Deserialize, Serialize};

use crate::ineq::WhichIneq;
use crate::num::{e_ratio, entropy_term, xlogx};
use crate::path::Path;
use crate::tree::ProcessKind;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Errors from generator specs and estimators.
#[derive(Debug, Clone, PartialEq)]
pub enum McError {
    /// The generator spec's parameters are unusable.
    InvalidSpec { what: String },
    /// Sample statistics need at least two trials.
    TooFewTrials { trials: u64 },
    /// The generator's process class does not satisfy the inequality's
    /// hypothesis.
    ClassMismatch {
        needed: &'static str,
        found: ProcessKind,
    },
}

impl std::fmt::Display for McError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::InvalidSpec { what } => write!(f, "invalid generator spec: {what}"),
            Self::TooFewTrials { trials } => {
                write!(
                    f,
                    "need at least 2 trials for a standard error, got {trials}"
                )
            }
            Self::ClassMismatch { needed, found } => {
                write!(
                    f,
                    "inequality needs {needed}, but the generator produces a {found}"
                )
            }
        }
    }
}

impl std::error::Error for McError {}

// ---------------------------------------------------------------------------
// Counter-based uniforms
// ---------------------------------------------------------------------------

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The fixed RNG contract: `(seed, trial, step) -> uniform in [0, 1)`,
/// via three chained SplitMix64 scrambles. Steps are indexed `1..=n`.
pub fn unit_uniform(seed: u64, trial: u64, step: u64) -> f64 {
    let h = mix(mix(mix(seed) ^ trial) ^ step);
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// Step distribution families. All are two-point per step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GeneratorKind {
    /// `±step_scale` with probability 1/2 each. Martingale.
    SymmetricWalk,
    /// `±step_scale` with up-probability `(1 + mu/step_scale)/2`, so the
    /// mean step is `mu`. Martingale iff `mu = 0`, supermartingale for
    /// `mu < 0`, submartingale for `mu > 0`.
    DriftWalk { mu: f64 },
    /// Multiplicative two-point factors `{M·e^s, M·e^-s}` with the
    /// up-probability chosen so the factor mean is `M = exp(log_mean)`.
    /// Strictly positive paths; martingale iff `log_mean = 0`.
    MultiplicativePositive { log_mean: f64 },
    /// Absolute value of a symmetric walk started at `x0`. Nonnegative
    /// submartingale.
    AbsWalk,
}

/// A reproducible path generator: kind, horizon, start, scale, seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    /// Number of steps `n`; paths have `n + 1` values.
    pub n: usize,
    pub x0: f64,
    pub step_scale: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<(), McError> {
        let err = |what: String| Err(McError::InvalidSpec { what });
        if !self.step_scale.is_finite() || self.step_scale <= 0.0 {
            return err(format!(
                "step_scale must be positive and finite, got {}",
                self.step_scale
            ));
        }
        if !self.x0.is_finite() {
            return err(format!("x0 must be finite, got {}", self.x0));
        }
        match self.kind {
            GeneratorKind::SymmetricWalk => {}
            GeneratorKind::DriftWalk { mu } => {
                if !mu.is_finite() || mu.abs() > self.step_scale {
                    return err(format!(
                        "drift walk needs |mu| <= step_scale, got mu = {mu}, step_scale = {}",
                        self.step_scale
                    ));
                }
            }
            GeneratorKind::MultiplicativePositive { log_mean } => {
                if self.x0 <= 0.0 {
                    return err(format!(
                        "multiplicative generator needs x0 > 0, got {}",
                        self.x0
                    ));
                }
                if !log_mean.is_finite()
                    || (self.n as f64) * (log_mean.abs() + self.step_scale) > 600.0
                {
                    return err(format!(
                        "multiplicative horizon overflows: n·(|log_mean| + step_scale) = {}",
                        (self.n as f64) * (log_mean.abs() + self.step_scale)
                    ));
                }
            }
            GeneratorKind::AbsWalk => {
                if self.x0 < 0.0 {
                    return err(format!("abs walk needs x0 >= 0, got {}", self.x0));
                }
            }
        }
        if (self.n as f64) * self.step_scale > 1e300 {
            return err("additive horizon overflows".into());
        }
        Ok(())
    }

    /// The process class this generator produces by construction.
    pub fn class(&self) -> ProcessKind {
        match self.kind {
            GeneratorKind::SymmetricWalk => ProcessKind::Martingale,
            GeneratorKind::DriftWalk { mu } => {
                if mu == 0.0 {
                    ProcessKind::Martingale
                } else if mu < 0.0 {
                    ProcessKind::Supermartingale
                } else {
                    ProcessKind::Submartingale
                }
            }
            GeneratorKind::MultiplicativePositive { log_mean } => {
                if log_mean == 0.0 {
                    ProcessKind::Martingale
                } else if log_mean < 0.0 {
                    ProcessKind::Supermartingale
                } else {
                    ProcessKind::Submartingale
                }
            }
            GeneratorKind::AbsWalk => ProcessKind::Submartingale,
        }
    }

    /// Paths are nonnegative by construction.
    pub fn nonnegative(&self) -> bool {
        matches!(
            self.kind,
            GeneratorKind::MultiplicativePositive { .. } | GeneratorKind::AbsWalk
        )
    }

    /// `x_0 > 0` by construction.
    pub fn positive_start(&self) -> bool {
        matches!(self.kind, GeneratorKind::MultiplicativePositive { .. }) && self.x0 > 0.0
    }

    /// Generate the path of a trial: a pure function of `(seed, trial)`.
    pub fn generate(&self, trial: u64) -> Path {
        let mut values = Vec::with_capacity(self.n + 1);
        values.push(match self.kind {
            GeneratorKind::AbsWalk => self.x0.abs(),
            _ => self.x0,
        });
        match self.kind {
            GeneratorKind::SymmetricWalk | GeneratorKind::DriftWalk { .. } => {
                let mu = match self.kind {
                    GeneratorKind::DriftWalk { mu } => mu,
                    _ => 0.0,
                };
                let p_up = 0.5 * (1.0 + mu / self.step_scale);
                let mut x = self.x0;
                for k in 1..=self.n {
                    let u = unit_uniform(self.seed, trial, k as u64);
                    x += if u < p_up {
                        self.step_scale
                    } else {
                        -self.step_scale
                    };
                    values.push(x);
                }
            }
            GeneratorKind::MultiplicativePositive { log_mean } => {
                let mean = log_mean.exp();
                let up = mean * self.step_scale.exp();
                let down = mean * (-self.step_scale).exp();
                let p_up = (mean - down) / (up - down);
                let mut x = self.x0;
                for k in 1..=self.n {
                    let u = unit_uniform(self.seed, trial, k as u64);
                    x *= if u < p_up { up } else { down };
                    values.push(x);
                }
            }
            GeneratorKind::AbsWalk => {
                let mut s = self.x0;
                for k in 1..=self.n {
                    let u = unit_uniform(self.seed, trial, k as u64);
                    s += if u < 0.5 {
                        self.step_scale
                    } else {
                        -self.step_scale
                    };
                    values.push(s.abs());
                }
            }
        }
        Path::new(values).expect("a validated spec generates finite paths")
    }
}

// ---------------------------------------------------------------------------
// Estimates
// ---------------------------------------------------------------------------

/// A Monte Carlo estimate: sample mean, standard error, trial count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation divided by `sqrt(trials)`.
    pub std_err: f64,
    pub trials: u64,
    /// The sample had exactly zero variance (degenerate standard error).
    pub zero_variance: bool,
}

impl McEstimate {
    fn from_sums(sum: f64, sum_sq: f64, trials: u64) -> Self {
        let n = trials as f64;
        let mean = sum / n;
        let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        McEstimate {
            mean,
            std_err: (var / n).sqrt(),
            trials,
            zero_variance: var == 0.0,
        }
    }

    /// The 3-sigma interval contains 0.
    pub fn consistent_with_zero(&self) -> bool {
        self.mean.abs() <= 3.0 * self.std_err
    }

    /// The 3-sigma interval intersects `(-inf, 0]`.
    pub fn compatible_with_nonpositive(&self) -> bool {
        self.mean - 3.0 * self.std_err <= 0.0
    }
}

/// Two correlated per-trial channels accumulated with a fixed-shape
/// pairwise tree, so sums are bitwise identical for any worker count.
#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    sum_a: f64,
    sq_a: f64,
    sum_b: f64,
    sq_b: f64,
}

impl Accumulator {
    fn merge(x: Accumulator, y: Accumulator) -> Accumulator {
        Accumulator {
            sum_a: x.sum_a + y.sum_a,
            sq_a: x.sq_a + y.sq_a,
            sum_b: x.sum_b + y.sum_b,
            sq_b: x.sq_b + y.sq_b,
        }
    }
}

const PAIRWISE_LEAF: u64 = 1024;

fn pairwise<F>(lo: u64, hi: u64, eval: &F) -> Accumulator
where
    F: Fn(u64) -> (f64, f64) + Sync,
{
    if hi - lo <= PAIRWISE_LEAF {
        let mut acc = Accumulator::default();
        for trial in lo..hi {
            let (a, b) = eval(trial);
            acc.sum_a += a;
            acc.sq_a += a * a;
            acc.sum_b += b;
            acc.sq_b += b * b;
        }
        acc
    } else {
        let mid = lo + (hi - lo) / 2;
        let (left, right) = rayon::join(|| pairwise(lo, mid, eval), || pairwise(mid, hi, eval));
        Accumulator::merge(left, right)
    }
}

// ---------------------------------------------------------------------------
// Side estimation
// ---------------------------------------------------------------------------

/// The four expectation inequalities that can be sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectationIneq {
    Eq3,
    Eq4,
    Eq8,
    Eq9,
}

impl ExpectationIneq {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Eq3 => "eq3",
            Self::Eq4 => "eq4",
            Self::Eq8 => "eq8",
            Self::Eq9 => "eq9",
        }
    }

    /// The level parameter is meaningful only for eq3/eq4.
    pub fn uses_level(&self) -> bool {
        matches!(self, Self::Eq3 | Self::Eq4)
    }

    /// Whether the generator's class satisfies this inequality's hypothesis.
    pub fn admits(&self, spec: &GeneratorSpec) -> bool {
        self.check_spec(spec).is_ok()
    }

    fn check_spec(&self, spec: &GeneratorSpec) -> Result<(), McError> {
        let class = spec.class();
        match self {
            Self::Eq3 if !class.admits_supermartingale() => Err(McError::ClassMismatch {
                needed: "a supermartingale (or martingale)",
                found: class,
            }),
            Self::Eq4 if !class.admits_submartingale() => Err(McError::ClassMismatch {
                needed: "a submartingale (or martingale)",
                found: class,
            }),
            Self::Eq8
                if !(class.is_martingale() && spec.nonnegative() && spec.positive_start()) =>
            {
                Err(McError::ClassMismatch {
                    needed: "a nonnegative martingale with positive start",
                    found: class,
                })
            }
            Self::Eq9 if !(class.admits_submartingale() && spec.nonnegative()) => {
                Err(McError::ClassMismatch {
                    needed: "a nonnegative submartingale (or martingale)",
                    found: class,
                })
            }
            _ => Ok(()),
        }
    }

    /// Both sides of the inequality as functionals of one path.
    fn sides(&self, path: &Path, level: f64) -> (f64, f64) {
        let x0 = path.start();
        let xn = path.terminal();
        let max = path.max();
        match self {
            Self::Eq3 => {
                let lhs = if max >= level { level } else { 0.0 };
                let rhs = x0.min(level) - if max < level { xn } else { 0.0 };
                (lhs, rhs)
            }
            Self::Eq4 => {
                let lhs = if max >= level { level } else { 0.0 };
                let capital = if x0 >= level { -(x0 - level) } else { 0.0 };
                let rhs = capital + if max >= level { xn } else { 0.0 };
                (lhs, rhs)
            }
            Self::Eq8 => (max, e_ratio() * (entropy_term(x0) + xlogx(xn))),
            Self::Eq9 => (max, e_ratio() * (1.0 + xlogx(xn))),
        }
    }
}

/// Sampled sides of an expectation inequality and the 3-sigma verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SidesEstimate {
    pub lhs: McEstimate,
    pub rhs: McEstimate,
    pub pass: bool,
    /// A failed first run was re-run once at 4x the trials.
    pub retried: bool,
}

impl SidesEstimate {
    pub fn combined_std_err(&self) -> f64 {
        (self.lhs.std_err * self.lhs.std_err + self.rhs.std_err * self.rhs.std_err).sqrt()
    }
}

fn run_sides(
    spec: &GeneratorSpec,
    ineq: ExpectationIneq,
    level: f64,
    trials: u64,
) -> (McEstimate, McEstimate) {
    let acc = pairwise(0, trials, &|trial| {
        let path = spec.generate(trial);
        ineq.sides(&path, level)
    });
    (
        McEstimate::from_sums(acc.sum_a, acc.sq_a, trials),
        McEstimate::from_sums(acc.sum_b, acc.sq_b, trials),
    )
}

/// Estimate both sides of an expectation inequality over `trials`
/// independent paths. Passes when `lhs.mean <= rhs.mean + 3·combined
/// standard error`; a borderline failure is re-run once at 4x the trials.
pub fn estimate_sides(
    spec: &GeneratorSpec,
    ineq: ExpectationIneq,
    level: f64,
    trials: u64,
) -> Result<SidesEstimate, McError> {
    spec.validate()?;
    ineq.check_spec(spec)?;
    if trials < 2 {
        return Err(McError::TooFewTrials { trials });
    }

    let verdict = |lhs: &McEstimate, rhs: &McEstimate| {
        let combined = (lhs.std_err * lhs.std_err + rhs.std_err * rhs.std_err).sqrt();
        lhs.mean <= rhs.mean + 3.0 * combined
    };

    let (lhs, rhs) = run_sides(spec, ineq, level, trials);
    if verdict(&lhs, &rhs) {
        return Ok(SidesEstimate {
            lhs,
            rhs,
            pass: true,
            retried: false,
        });
    }
    let (lhs, rhs) = run_sides(spec, ineq, level, trials * 4);
    let pass = verdict(&lhs, &rhs);
    Ok(SidesEstimate {
        lhs,
        rhs,
        pass,
        retried: true,
    })
}

/// Estimate `E[Σ H_k·ΔX_k]` with the predictable positions of the given
/// level inequality. For a martingale spec the 3-sigma interval must
/// contain 0; for a supermartingale under eq1 (and a submartingale under
/// eq2) the mean is nonpositive up to noise.
pub fn estimate_transform(
    spec: &GeneratorSpec,
    level: f64,
    which: WhichIneq,
    trials: u64,
) -> Result<McEstimate, McError> {
    spec.validate()?;
    if trials < 2 {
        return Err(McError::TooFewTrials { trials });
    }
    let acc = pairwise(0, trials, &|trial| {
        let path = spec.generate(trial);
        let values = path.values();
        let mut running = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for k in 1..values.len() {
            running = running.max(values[k - 1]);
            let held = match which {
                WhichIneq::Eq1 => {
                    if running < level {
                        1.0
                    } else {
                        0.0
                    }
                }
                WhichIneq::Eq2 => {
                    if running >= level {
                        -1.0
                    } else {
                        0.0
                    }
                }
            };
            sum += held * (values[k] - values[k - 1]);
        }
        (sum, 0.0)
    });
    Ok(McEstimate::from_sums(acc.sum_a, acc.sq_a, trials))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
