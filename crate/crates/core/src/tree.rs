//! Finite filtered probability spaces as uniform-depth rooted trees.
//!
//! A node at depth `k` carries the process value `X_k` on that atom; edges
//! carry one-step transition probabilities. Expectations are exact leaf
//! sums computed in a single depth-first pass that carries the
//! path-probability and the running maximum. On top of that sit the
//! expectation forms of the level inequalities (eq3/eq4), the martingale
//! L log L bound (eq8) with its submartingale counterexample, and the
//! submartingale variant (eq9) verified through the terminal-conditional
//! closure.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ineq::{eval_ineq1, eval_ineq2, WhichIneq};
use crate::num::{e_ratio, entropy_term, xlogx, Tol, CLASSIFY_TOL_SCALE};
use crate::path::Path;

/// Default cap on the number of nodes a model may hold.
pub const DEFAULT_NODE_BOUND: usize = 1_000_000;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Errors from tree construction, loading, and verification.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeError {
    /// The JSON document did not parse.
    Json { message: String },
    /// A node value is NaN or infinite. `at` is the JSON path of the node.
    NonFiniteValue { at: String, value: f64 },
    /// An edge probability is outside `(0, 1]`.
    ProbOutOfRange { at: String, prob: f64 },
    /// Child probabilities at an internal node do not sum to 1 within 1e-12.
    ProbSum { at: String, sum: f64 },
    /// A leaf sits at a different depth than the first leaf encountered.
    RaggedDepth {
        at: String,
        expected: usize,
        found: usize,
    },
    /// The model exceeds the node bound.
    TooManyNodes { count: usize, bound: usize },
    /// The process does not satisfy the hypothesis of the requested
    /// inequality.
    Classification {
        required: &'static str,
        found: ProcessKind,
        max_defect: f64,
    },
    /// Values leave the domain of the requested functional.
    Domain { what: String },
    /// An internal consistency check of a verification route failed.
    Internal { what: String },
}

impl fmt::Display for TreeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Json { message } => write!(f, "tree JSON parse error: {message}"),
            Self::NonFiniteValue { at, value } => {
                write!(f, "node value is not finite ({value}) at {at}")
            }
            Self::ProbOutOfRange { at, prob } => {
                write!(f, "edge probability {prob} outside (0, 1] at {at}")
            }
            Self::ProbSum { at, sum } => {
                write!(f, "child probabilities sum to {sum} (must be 1 within 1e-12) at {at}")
            }
            Self::RaggedDepth { at, expected, found } => {
                write!(f, "leaf at depth {found}, expected uniform depth {expected}, at {at}")
            }
            Self::TooManyNodes { count, bound } => {
                write!(f, "tree has at least {count} nodes, exceeding the bound {bound}")
            }
            Self::Classification { required, found, max_defect } => write!(
                f,
                "process classifies as {found} (max defect {max_defect:e}) but {required} is required"
            ),
            Self::Domain { what } => write!(f, "domain error: {what}"),
            Self::Internal { what } => write!(f, "internal verification failure: {what}"),
        }
    }
}

impl std::error::Error for TreeError {}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

/// One node: the process value on this atom plus weighted children.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<TreeEdge>,
}

/// A weighted edge to a child node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEdge {
    #[serde(rename = "p")]
    pub prob: f64,
    #[serde(rename = "node")]
    pub child: TreeNode,
}

/// A validated uniform-depth tree model.
///
/// Immutable after construction; all operations are read-only.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    root: TreeNode,
    depth: usize,
    node_count: usize,
    min_value: f64,
}

/// Render the JSON path of the node reached through the given edge-index
/// trail, e.g. `$.children[1].node.children[0].node`.
fn json_path(trail: &[usize]) -> String {
    let mut out = String::from("$");
    for idx in trail {
        out.push_str(&format!(".children[{idx}].node"));
    }
    out
}

impl TreeModel {
    pub fn new(root: TreeNode) -> Result<Self, TreeError> {
        Self::with_node_bound(root, DEFAULT_NODE_BOUND)
    }

    pub fn with_node_bound(root: TreeNode, bound: usize) -> Result<Self, TreeError> {
        let mut node_count = 0usize;
        let mut min_value = f64::INFINITY;
        let mut leaf_depth: Option<usize> = None;

        // Iterative DFS; `frames` holds (node, next child index) and
        // `trail` the edge indices leading to the current node.
        let mut frames: Vec<(&TreeNode, usize)> = vec![(&root, 0)];
        let mut trail: Vec<usize> = Vec::new();
        let mut entered = true;
        while let Some(frame) = frames.last_mut() {
            let node = frame.0;
            if entered {
                node_count += 1;
                if node_count > bound {
                    return Err(TreeError::TooManyNodes {
                        count: node_count,
                        bound,
                    });
                }
                if !node.value.is_finite() {
                    return Err(TreeError::NonFiniteValue {
                        at: json_path(&trail),
                        value: node.value,
                    });
                }
                min_value = min_value.min(node.value);
                if node.children.is_empty() {
                    let depth = trail.len();
                    match leaf_depth {
                        None => leaf_depth = Some(depth),
                        Some(expected) if expected != depth => {
                            return Err(TreeError::RaggedDepth {
                                at: json_path(&trail),
                                expected,
                                found: depth,
                            });
                        }
                        Some(_) => {}
                    }
                } else {
                    let mut sum = 0.0;
                    for (i, edge) in node.children.iter().enumerate() {
                        let prob_ok = edge.prob > 0.0 && edge.prob <= 1.0;
                        if !prob_ok {
                            let mut at = json_path(&trail);
                            at.push_str(&format!(".children[{i}]"));
                            return Err(TreeError::ProbOutOfRange {
                                at,
                                prob: edge.prob,
                            });
                        }
                        sum += edge.prob;
                    }
                    if (sum - 1.0).abs() > 1e-12 {
                        return Err(TreeError::ProbSum {
                            at: json_path(&trail),
                            sum,
                        });
                    }
                }
            }
            let next = frame.1;
            if next < node.children.len() {
                frame.1 += 1;
                trail.push(next);
                let child = &node.children[next].child;
                frames.push((child, 0));
                entered = true;
            } else {
                frames.pop();
                trail.pop();
                entered = false;
            }
        }

        Ok(TreeModel {
            depth: leaf_depth.expect("at least the root exists"),
            node_count,
            min_value,
            root,
        })
    }

    /// Deterministic chain: the path realized with probability 1.
    pub fn chain(values: &[f64]) -> Result<Self, TreeError> {
        if values.is_empty() {
            return Err(TreeError::Domain {
                what: "chain needs at least one value".into(),
            });
        }
        let mut node = TreeNode {
            value: *values.last().unwrap(),
            children: Vec::new(),
        };
        for &value in values.iter().rev().skip(1) {
            node = TreeNode {
                value,
                children: vec![TreeEdge {
                    prob: 1.0,
                    child: node,
                }],
            };
        }
        Self::new(node)
    }

    /// Load from the JSON format
    /// `{"value": number, "children": [{"p": number, "node": {...}}]}`.
    pub fn from_json_str(text: &str) -> Result<Self, TreeError> {
        let root: TreeNode = serde_json::from_str(text).map_err(|e| TreeError::Json {
            message: e.to_string(),
        })?;
        Self::new(root)
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    /// Uniform leaf depth `n`.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn min_value(&self) -> f64 {
        self.min_value
    }

    /// `X_0`.
    pub fn root_value(&self) -> f64 {
        self.root.value
    }

    /// Visit every leaf with its path probability and the full value path
    /// `x_0..x_n`, in deterministic left-to-right order.
    pub fn for_each_leaf<F: FnMut(f64, &[f64])>(&self, mut f: F) {
        let mut frames: Vec<(&TreeNode, usize)> = Vec::with_capacity(self.depth + 1);
        let mut values: Vec<f64> = Vec::with_capacity(self.depth + 1);
        let mut probs: Vec<f64> = Vec::with_capacity(self.depth + 1);
        frames.push((&self.root, 0));
        values.push(self.root.value);
        probs.push(1.0);
        while let Some(frame) = frames.last_mut() {
            let (node, next) = (frame.0, frame.1);
            if node.children.is_empty() || next >= node.children.len() {
                if node.children.is_empty() {
                    f(*probs.last().unwrap(), &values);
                }
                frames.pop();
                values.pop();
                probs.pop();
            } else {
                frame.1 += 1;
                let edge = &node.children[next];
                let p = probs.last().unwrap() * edge.prob;
                frames.push((&edge.child, 0));
                values.push(edge.child.value);
                probs.push(p);
            }
        }
    }

    /// Exact expectation of an arbitrary functional of the value path.
    pub fn expect_with<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        let mut sum = 0.0;
        self.for_each_leaf(|prob, path| sum += prob * f(path));
        sum
    }
}

// ---------------------------------------------------------------------------
// Process classification
// ---------------------------------------------------------------------------

/// How a tree process relates to the martingale property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProcessKind {
    /// Conditional means equal node values exactly.
    Martingale,
    /// `X_k <= E[X_{k+1} | node]` everywhere, strictly somewhere.
    Submartingale,
    /// `X_k >= E[X_{k+1} | node]` everywhere, strictly somewhere.
    Supermartingale,
    /// Both one-sided conditions hold within the classification tolerance
    /// but conditional means are not exactly equal to node values.
    Both,
    /// Neither condition holds everywhere.
    None,
}

impl ProcessKind {
    /// Acceptable where a supermartingale is required (martingales are
    /// supermartingales).
    pub fn admits_supermartingale(&self) -> bool {
        matches!(self, Self::Supermartingale | Self::Martingale | Self::Both)
    }

    /// Acceptable where a submartingale is required.
    pub fn admits_submartingale(&self) -> bool {
        matches!(self, Self::Submartingale | Self::Martingale | Self::Both)
    }

    pub fn is_martingale(&self) -> bool {
        matches!(self, Self::Martingale | Self::Both)
    }
}

impl fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::Martingale => "Martingale",
            Self::Submartingale => "Submartingale",
            Self::Supermartingale => "Supermartingale",
            Self::Both => "Both",
            Self::None => "None",
        };
        f.write_str(name)
    }
}

/// Classification result: the kind plus the largest conditional-mean
/// deviation in the violated direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProcessClass {
    pub kind: ProcessKind,
    pub max_defect: f64,
}

/// Compare `X(node)` with `Σ p_c·X(child)` at every internal node, per-node
/// tolerance `1e-10·(1 + |X(node)|)`.
pub fn classify(tree: &TreeModel) -> ProcessClass {
    let mut sub_ok = true; // X <= mean everywhere (within tolerance)
    let mut super_ok = true; // X >= mean everywhere (within tolerance)
    let mut up = 0.0_f64; // max (mean - X)+  : violates the super side
    let mut down = 0.0_f64; // max (X - mean)+ : violates the sub side

    fn walk(node: &TreeNode, sub_ok: &mut bool, super_ok: &mut bool, up: &mut f64, down: &mut f64) {
        if node.children.is_empty() {
            return;
        }
        let mean: f64 = node.children.iter().map(|e| e.prob * e.child.value).sum();
        let tol = CLASSIFY_TOL_SCALE * (1.0 + node.value.abs());
        let dev = mean - node.value;
        *up = up.max(dev);
        *down = down.max(-dev);
        if dev < -tol {
            *sub_ok = false;
        }
        if dev > tol {
            *super_ok = false;
        }
        for edge in &node.children {
            walk(&edge.child, sub_ok, super_ok, up, down);
        }
    }
    walk(tree.root(), &mut sub_ok, &mut super_ok, &mut up, &mut down);

    let (kind, max_defect) = match (sub_ok, super_ok) {
        (true, true) => {
            if up.max(down) == 0.0 {
                (ProcessKind::Martingale, 0.0)
            } else {
                (ProcessKind::Both, up.max(down))
            }
        }
        (true, false) => (ProcessKind::Submartingale, up),
        (false, true) => (ProcessKind::Supermartingale, down),
        (false, false) => (ProcessKind::None, up.max(down)),
    };
    ProcessClass { kind, max_defect }
}

// ---------------------------------------------------------------------------
// Path functionals and expectations
// ---------------------------------------------------------------------------

/// The catalogue of path functionals with exact tree expectations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathFunctional {
    /// `X_0`
    Start,
    /// `X_n`
    Terminal,
    /// running maximum of the whole path
    RunningMax,
    /// `1{max >= level}`
    CrossingIndicator { level: f64 },
    /// `X_n·1{max < level}`
    TerminalBelowLevel { level: f64 },
    /// `X_n·1{max >= level}`
    TerminalAboveLevel { level: f64 },
    /// `X_0 ∧ level`
    StartCappedAt { level: f64 },
    /// `(X_0 - level)·1{X_0 >= level}`
    StartExcessOver { level: f64 },
    /// `X_0·(1 - log X_0)`, with `0·(1 - log 0) = 0`
    StartEntropy,
    /// `X_n·log X_n`, with `0·log 0 = 0`
    TerminalXLogX,
    /// `X_n·log⁺ X_n`
    TerminalXLogPlusX,
    /// the transform sum `Σ H_k·ΔX_k` of the given level inequality
    TransformSum { level: f64, which: WhichIneq },
    /// the full pathwise right-hand side of the given level inequality
    LevelRhs { level: f64, which: WhichIneq },
}

impl PathFunctional {
    fn needs_nonnegative_values(&self) -> bool {
        matches!(
            self,
            Self::StartEntropy | Self::TerminalXLogX | Self::TerminalXLogPlusX
        )
    }

    fn eval(&self, path: &[f64]) -> f64 {
        let x0 = path[0];
        let xn = *path.last().unwrap();
        let max = path.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        match *self {
            Self::Start => x0,
            Self::Terminal => xn,
            Self::RunningMax => max,
            Self::CrossingIndicator { level } => {
                if max >= level {
                    1.0
                } else {
                    0.0
                }
            }
            Self::TerminalBelowLevel { level } => {
                if max < level {
                    xn
                } else {
                    0.0
                }
            }
            Self::TerminalAboveLevel { level } => {
                if max >= level {
                    xn
                } else {
                    0.0
                }
            }
            Self::StartCappedAt { level } => x0.min(level),
            Self::StartExcessOver { level } => {
                if x0 >= level {
                    x0 - level
                } else {
                    0.0
                }
            }
            Self::StartEntropy => entropy_term(x0),
            Self::TerminalXLogX => xlogx(xn),
            Self::TerminalXLogPlusX => {
                if xn >= 1.0 {
                    xlogx(xn)
                } else {
                    0.0
                }
            }
            Self::TransformSum { level, which } => {
                let mut running = f64::NEG_INFINITY;
                let mut sum = 0.0;
                for k in 1..path.len() {
                    running = running.max(path[k - 1]);
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
                    sum += held * (path[k] - path[k - 1]);
                }
                sum
            }
            Self::LevelRhs { level, which } => {
                let p = Path::new(path.to_vec()).expect("tree values are finite");
                match which {
                    WhichIneq::Eq1 => eval_ineq1(&p, level).rhs,
                    WhichIneq::Eq2 => eval_ineq2(&p, level).rhs,
                }
            }
        }
    }
}

/// Exact expectation of a catalogue functional: the sum over leaves of
/// path-probability times functional value.
pub fn expect_functional(tree: &TreeModel, f: &PathFunctional) -> Result<f64, TreeError> {
    if f.needs_nonnegative_values() && tree.min_value() < 0.0 {
        return Err(TreeError::Domain {
            what: format!(
                "log functional {f:?} on a tree with negative values (min {})",
                tree.min_value()
            ),
        });
    }
    Ok(tree.expect_with(|path| f.eval(path)))
}

/// `E[Σ H_k·ΔX_k]` with the predictable positions of the given level
/// inequality. Nonpositive in expectation for supermartingales under eq1
/// and for submartingales under eq2; zero for martingales.
pub fn transform_expectation(tree: &TreeModel, level: f64, which: WhichIneq) -> f64 {
    tree.expect_with(|path| PathFunctional::TransformSum { level, which }.eval(path))
}

// ---------------------------------------------------------------------------
// Expectation inequalities (eq3, eq4, eq8, eq9)
// ---------------------------------------------------------------------------

/// Both sides of an expectation inequality, the bound it improves on, and
/// the slacks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectationReport {
    pub lhs: f64,
    pub rhs: f64,
    /// The classical bound the improved right-hand side is compared with.
    pub rhs_classical: f64,
    /// `rhs - lhs`.
    pub slack: f64,
    /// `rhs_classical - rhs`.
    pub improvement: f64,
}

impl ExpectationReport {
    fn new(lhs: f64, rhs: f64, rhs_classical: f64) -> Self {
        ExpectationReport {
            lhs,
            rhs,
            rhs_classical,
            slack: rhs - lhs,
            improvement: rhs_classical - rhs,
        }
    }

    pub fn holds(&self) -> bool {
        self.holds_at(Tol::default())
    }

    pub fn holds_at(&self, tol: Tol) -> bool {
        self.slack >= -tol.for_pair(self.lhs, self.rhs)
    }
}

/// eq3 for supermartingales:
/// `level·P(max >= level) <= E[X_0 ∧ level] - E[X_n·1{max < level}]`.
/// The classical bound replaces `E[X_0 ∧ level]` with `E[X_0]`.
pub fn verify_ineq3(tree: &TreeModel, level: f64) -> Result<ExpectationReport, TreeError> {
    let class = classify(tree);
    if !class.kind.admits_supermartingale() {
        return Err(TreeError::Classification {
            required: "a supermartingale (or martingale)",
            found: class.kind,
            max_defect: class.max_defect,
        });
    }
    let crossing = expect_functional(tree, &PathFunctional::CrossingIndicator { level })?;
    let capped_start = expect_functional(tree, &PathFunctional::StartCappedAt { level })?;
    let terminal_below = expect_functional(tree, &PathFunctional::TerminalBelowLevel { level })?;
    let start = expect_functional(tree, &PathFunctional::Start)?;
    Ok(ExpectationReport::new(
        level * crossing,
        capped_start - terminal_below,
        start - terminal_below,
    ))
}

/// eq4 for submartingales: `level·P(max >= level)
/// <= -E[(X_0 - level)·1{X_0 >= level}] + E[X_n·1{max >= level}]`.
/// The classical bound drops the first term.
pub fn verify_ineq4(tree: &TreeModel, level: f64) -> Result<ExpectationReport, TreeError> {
    let class = classify(tree);
    if !class.kind.admits_submartingale() {
        return Err(TreeError::Classification {
            required: "a submartingale (or martingale)",
            found: class.kind,
            max_defect: class.max_defect,
        });
    }
    let crossing = expect_functional(tree, &PathFunctional::CrossingIndicator { level })?;
    let start_excess = expect_functional(tree, &PathFunctional::StartExcessOver { level })?;
    let terminal_above = expect_functional(tree, &PathFunctional::TerminalAboveLevel { level })?;
    Ok(ExpectationReport::new(
        level * crossing,
        -start_excess + terminal_above,
        terminal_above,
    ))
}

/// Backward-induction closure `Y_k = E[X_n | node]`: same shape and
/// probabilities, node values replaced by conditional expectations of the
/// leaf values; leaves unchanged. The result always classifies as a
/// martingale.
pub fn doob_closure(tree: &TreeModel) -> TreeModel {
    fn closed(node: &TreeNode) -> TreeNode {
        if node.children.is_empty() {
            return node.clone();
        }
        let children: Vec<TreeEdge> = node
            .children
            .iter()
            .map(|e| TreeEdge {
                prob: e.prob,
                child: closed(&e.child),
            })
            .collect();
        let value = children.iter().map(|e| e.prob * e.child.value).sum();
        TreeNode { value, children }
    }
    TreeModel::new(closed(tree.root())).expect("closure preserves validity")
}

/// eq8 for nonnegative martingales with `X_0 > 0`:
/// `E[max] <= e/(e-1)·(E[X_0·(1 - log X_0)] + E[X_n·log X_n])`.
///
/// Refuses non-martingales: the bound is false for general submartingales
/// (see [`counterexample_eq8`]), so reporting it there would be bogus.
/// There is no distinct classical bound; `rhs_classical = rhs`.
pub fn verify_ineq8(tree: &TreeModel) -> Result<ExpectationReport, TreeError> {
    let class = classify(tree);
    if !class.kind.is_martingale() {
        return Err(TreeError::Classification {
            required: "a martingale (eq8 fails for general submartingales)",
            found: class.kind,
            max_defect: class.max_defect,
        });
    }
    if tree.min_value() < 0.0 {
        return Err(TreeError::Domain {
            what: format!("eq8 needs nonnegative values, min is {}", tree.min_value()),
        });
    }
    if tree.root_value() <= 0.0 {
        return Err(TreeError::Domain {
            what: format!("eq8 needs X_0 > 0, root value is {}", tree.root_value()),
        });
    }
    let lhs = expect_functional(tree, &PathFunctional::RunningMax)?;
    let rhs = e_ratio()
        * (expect_functional(tree, &PathFunctional::StartEntropy)?
            + expect_functional(tree, &PathFunctional::TerminalXLogX)?);
    Ok(ExpectationReport::new(lhs, rhs, rhs))
}

/// The eq8-form bound evaluated on the deterministic submartingale chain
/// `(epsilon, 1)`, where it fails for small `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub epsilon: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub violated: bool,
}

/// Evaluate both sides of the eq8 form on the chain `(epsilon, 1)` for
/// `epsilon` in `(0, 1)`. The chain is a strictly positive submartingale;
/// `rhs = e/(e-1)·epsilon·(1 - log epsilon)` drops below `lhs = 1` for
/// small `epsilon`.
pub fn counterexample_eq8(epsilon: f64) -> Result<CounterexampleReport, TreeError> {
    let in_unit_interval = epsilon > 0.0 && epsilon < 1.0;
    if !in_unit_interval {
        return Err(TreeError::Domain {
            what: format!("counterexample epsilon must lie in (0, 1), got {epsilon}"),
        });
    }
    let chain = TreeModel::chain(&[epsilon, 1.0])?;
    debug_assert_eq!(classify(&chain).kind, ProcessKind::Submartingale);
    let lhs = expect_functional(&chain, &PathFunctional::RunningMax)?;
    let rhs = e_ratio()
        * (expect_functional(&chain, &PathFunctional::StartEntropy)?
            + expect_functional(&chain, &PathFunctional::TerminalXLogX)?);
    Ok(CounterexampleReport {
        epsilon,
        lhs,
        rhs,
        violated: rhs < lhs,
    })
}

/// The unique `epsilon*` in `(0, 1)` where the eq8-form right-hand side on
/// the chain `(epsilon, 1)` equals its left-hand side 1, found by
/// bisection to 1e-12. `epsilon·(1 - log epsilon)` is increasing on
/// `(0, 1)`, so the counterexample violates exactly for `epsilon < epsilon*`.
pub fn counterexample_threshold() -> f64 {
    let g = |eps: f64| e_ratio() * entropy_term(eps) - 1.0;
    let mut lo = 1e-9;
    let mut hi = 1.0;
    debug_assert!(g(lo) < 0.0 && g(hi) > 0.0);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// eq9 for nonnegative submartingales:
/// `E[max] <= e/(e-1)·(1 + E[X_n·log X_n])`.
///
/// The verification route goes through the closure: build
/// `Y_k = E[X_n | node]`, confirm `E[max X] <= E[max Y]`, and check the
/// eq8 bound for the closed martingale (whose start-entropy term is at
/// most 1). The classical bound uses `log⁺` in place of `log`.
pub fn verify_ineq9(tree: &TreeModel) -> Result<ExpectationReport, TreeError> {
    let class = classify(tree);
    if !class.kind.admits_submartingale() {
        return Err(TreeError::Classification {
            required: "a submartingale (or martingale)",
            found: class.kind,
            max_defect: class.max_defect,
        });
    }
    if tree.min_value() < 0.0 {
        return Err(TreeError::Domain {
            what: format!("eq9 needs nonnegative values, min is {}", tree.min_value()),
        });
    }

    let lhs = expect_functional(tree, &PathFunctional::RunningMax)?;
    let terminal_xlogx = expect_functional(tree, &PathFunctional::TerminalXLogX)?;
    let rhs = e_ratio() * (1.0 + terminal_xlogx);
    let rhs_classical =
        e_ratio() * (1.0 + expect_functional(tree, &PathFunctional::TerminalXLogPlusX)?);

    let closed = doob_closure(tree);
    let closed_class = classify(&closed);
    if !closed_class.kind.is_martingale() {
        return Err(TreeError::Internal {
            what: format!("closure classified as {}", closed_class.kind),
        });
    }
    let tol = Tol::default();
    let closed_max = expect_functional(&closed, &PathFunctional::RunningMax)?;
    if !tol.le(lhs, closed_max) {
        return Err(TreeError::Internal {
            what: format!("E[max X] = {lhs} exceeds E[max Y] = {closed_max} after closure"),
        });
    }
    let closed_entropy = expect_functional(&closed, &PathFunctional::StartEntropy)?;
    let closed_eq8_rhs =
        e_ratio() * (closed_entropy + expect_functional(&closed, &PathFunctional::TerminalXLogX)?);
    if !tol.le(closed_max, closed_eq8_rhs) {
        return Err(TreeError::Internal {
            what: format!(
                "eq8 bound {closed_eq8_rhs} fails for the closed martingale ({closed_max})"
            ),
        });
    }
    if !tol.le(closed_eq8_rhs, rhs) {
        return Err(TreeError::Internal {
            what: format!("start entropy {closed_entropy} of the closure exceeds 1"),
        });
    }

    Ok(ExpectationReport {
        lhs,
        rhs,
        rhs_classical,
        slack: rhs - lhs,
        improvement: rhs_classical - rhs,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn node(value: f64, children: Vec<(f64, TreeNode)>) -> TreeNode {
        TreeNode {
            value,
            children: children
                .into_iter()
                .map(|(prob, child)| TreeEdge { prob, child })
                .collect(),
        }
    }

    fn leaf(value: f64) -> TreeNode {
        node(value, Vec::new())
    }

    /// root 1 with children {2 @ 0.5, 0 @ 0.5}
    fn two_leaf_martingale() -> TreeModel {
        TreeModel::new(node(1.0, vec![(0.5, leaf(2.0)), (0.5, leaf(0.0))])).unwrap()
    }

    /// root 1 with children {3 @ 0.5, 1 @ 0.5}
    fn two_leaf_submartingale() -> TreeModel {
        TreeModel::new(node(1.0, vec![(0.5, leaf(3.0)), (0.5, leaf(1.0))])).unwrap()
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            classify(&two_leaf_martingale()).kind,
            ProcessKind::Martingale
        );
        assert_eq!(classify(&two_leaf_martingale()).max_defect, 0.0);

        let sub = classify(&two_leaf_submartingale());
        assert_eq!(sub.kind, ProcessKind::Submartingale);
        assert_eq!(sub.max_defect, 1.0);

        let sup = TreeModel::new(node(1.0, vec![(1.0, leaf(0.5))])).unwrap();
        let c = classify(&sup);
        assert_eq!(c.kind, ProcessKind::Supermartingale);
        assert_eq!(c.max_defect, 0.5);

        let single = TreeModel::new(leaf(3.0)).unwrap();
        assert_eq!(classify(&single).kind, ProcessKind::Martingale);

        let neither =
            TreeModel::new(node(1.0, vec![(1.0, node(2.0, vec![(1.0, leaf(1.0))]))])).unwrap();
        assert_eq!(classify(&neither).kind, ProcessKind::None);

        // conditional mean off by 5e-12: inside the 1e-10 classification
        // tolerance both ways, but not an exact martingale
        let both = TreeModel::new(node(
            1.0,
            vec![(0.5, leaf(2.0 + 1e-11)), (0.5, leaf(0.0))],
        ))
        .unwrap();
        let c = classify(&both);
        assert_eq!(c.kind, ProcessKind::Both);
        assert!(c.max_defect > 0.0 && c.max_defect < 1e-11);
        assert!(c.kind.is_martingale());
        assert!(c.kind.admits_submartingale() && c.kind.admits_supermartingale());
    }

    #[test]
    fn expect_functional_examples() {
        let t = two_leaf_martingale();
        assert_eq!(
            expect_functional(&t, &PathFunctional::RunningMax).unwrap(),
            1.5
        );
        assert_eq!(
            expect_functional(&t, &PathFunctional::CrossingIndicator { level: -1e300 }).unwrap(),
            1.0
        );
        assert_abs_diff_eq!(
            expect_functional(&t, &PathFunctional::TerminalXLogX).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
    }

    #[test]
    fn expect_functional_rejects_logs_on_negative_trees() {
        let t = TreeModel::new(node(1.0, vec![(0.5, leaf(3.0)), (0.5, leaf(-1.0))])).unwrap();
        assert!(matches!(
            expect_functional(&t, &PathFunctional::TerminalXLogX),
            Err(TreeError::Domain { .. })
        ));
        assert!(expect_functional(&t, &PathFunctional::Terminal).is_ok());
    }

    #[test]
    fn verify_ineq3_examples() {
        let t = two_leaf_martingale();
        let r = verify_ineq3(&t, 1.5).unwrap();
        assert_eq!((r.lhs, r.rhs, r.rhs_classical), (0.75, 1.0, 1.0));

        let r = verify_ineq3(&t, 0.5).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.5, 0.5)); // equality
        assert_eq!(r.rhs_classical, 1.0);
        assert_eq!(r.improvement, 0.5);

        let single = TreeModel::new(leaf(3.0)).unwrap();
        let r = verify_ineq3(&single, 5.0).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));

        assert!(matches!(
            verify_ineq3(&two_leaf_submartingale(), 1.0),
            Err(TreeError::Classification { .. })
        ));
    }

    #[test]
    fn verify_ineq4_examples() {
        let t = two_leaf_martingale();
        let r = verify_ineq4(&t, 1.5).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.75, 1.0));

        let r = verify_ineq4(&t, 0.5).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.5, 0.5)); // equality
        assert_eq!(r.rhs_classical, 1.0);

        let chain = TreeModel::chain(&[0.25, 1.0]).unwrap();
        let r = verify_ineq4(&chain, 1.0).unwrap();
        assert_eq!((r.lhs, r.rhs), (1.0, 1.0));

        let sup = TreeModel::new(node(1.0, vec![(1.0, leaf(0.5))])).unwrap();
        assert!(matches!(
            verify_ineq4(&sup, 1.0),
            Err(TreeError::Classification { .. })
        ));
    }

    #[test]
    fn doob_closure_examples() {
        let closed = doob_closure(&two_leaf_submartingale());
        assert_eq!(closed.root_value(), 2.0);
        assert_eq!(classify(&closed).kind, ProcessKind::Martingale);
        // leaves unchanged
        assert_eq!(closed.root().children[0].child.value, 3.0);
        assert_eq!(closed.root().children[1].child.value, 1.0);

        let mart = two_leaf_martingale();
        assert_eq!(doob_closure(&mart), mart);

        let sup = TreeModel::new(node(5.0, vec![(1.0, leaf(1.0))])).unwrap();
        let closed = doob_closure(&sup);
        assert_eq!(closed.root_value(), 1.0); // closure lowers a supermartingale root
    }

    #[test]
    fn verify_ineq8_examples() {
        let e = std::f64::consts::E;
        let er = e / (e - 1.0);

        let r = verify_ineq8(&two_leaf_martingale()).unwrap();
        assert_eq!(r.lhs, 1.5);
        assert_abs_diff_eq!(r.rhs, er * (1.0 + 2.0_f64.ln()), epsilon = 1e-12);
        assert_abs_diff_eq!(r.rhs, 2.6785194009473074, epsilon = 1e-12);
        assert_eq!(r.improvement, 0.0);

        let one = TreeModel::new(leaf(1.0)).unwrap();
        let r = verify_ineq8(&one).unwrap();
        assert_eq!(r.lhs, 1.0);
        assert_abs_diff_eq!(r.rhs, er, epsilon = 1e-15);

        let at_e = TreeModel::new(leaf(e)).unwrap();
        let r = verify_ineq8(&at_e).unwrap();
        assert_eq!(r.lhs, e);
        assert_abs_diff_eq!(r.rhs, e * e / (e - 1.0), epsilon = 1e-12);
        assert_abs_diff_eq!(r.rhs, 4.300258535328371, epsilon = 1e-12);

        // refuses submartingales rather than reporting a bogus bound
        assert!(matches!(
            verify_ineq8(&two_leaf_submartingale()),
            Err(TreeError::Classification { .. })
        ));
        // refuses zero start
        let zero_start = TreeModel::chain(&[0.0, 0.0]).unwrap();
        assert!(matches!(
            verify_ineq8(&zero_start),
            Err(TreeError::Domain { .. })
        ));
    }

    #[test]
    fn counterexample_examples() {
        let r = counterexample_eq8(0.01).unwrap();
        assert_eq!(r.lhs, 1.0);
        assert_abs_diff_eq!(r.rhs, 0.0886724867227157, epsilon = 1e-12);
        assert!(r.violated);

        let r = counterexample_eq8(0.9).unwrap();
        assert_abs_diff_eq!(r.rhs, 1.5737891296173738, epsilon = 1e-12);
        assert!(!r.violated);

        // near 1 the bound tends to e/(e-1) > 1: no violation
        let r = counterexample_eq8(1.0 - 1e-9).unwrap();
        assert!(!r.violated);
        assert_abs_diff_eq!(r.rhs, e_ratio(), epsilon = 1e-7);

        assert!(counterexample_eq8(0.0).is_err());
        assert!(counterexample_eq8(1.0).is_err());
        assert!(counterexample_eq8(-0.5).is_err());
    }

    #[test]
    fn counterexample_threshold_bracketed() {
        // bracketing oracle: sign change of rhs - 1 between 0.27 and 0.28
        let lo = counterexample_eq8(0.27).unwrap();
        let hi = counterexample_eq8(0.28).unwrap();
        assert!(lo.rhs < 1.0 && lo.violated);
        assert!(hi.rhs > 1.0 && !hi.violated);

        let star = counterexample_threshold();
        assert!(star > 0.27 && star < 0.28, "threshold {star}");
        assert_abs_diff_eq!(e_ratio() * entropy_term(star), 1.0, epsilon = 1e-11);

        // monotone violation pattern around the threshold
        assert!(counterexample_eq8(star / 2.0).unwrap().violated);
        assert!(!counterexample_eq8((1.0 + star) / 2.0).unwrap().violated);
    }

    #[test]
    fn verify_ineq9_examples() {
        let er = e_ratio();

        let r = verify_ineq9(&two_leaf_submartingale()).unwrap();
        assert_eq!(r.lhs, 2.0);
        assert_abs_diff_eq!(
            r.rhs,
            er * (1.0 + 0.5 * 3.0 * 3.0_f64.ln()),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(r.rhs, 4.188945282699351, epsilon = 1e-12);
        assert!(r.holds());
        // log⁺ and log agree here (values >= 1), so no improvement
        assert_eq!(r.improvement, 0.0);

        // eq9 still holds on the chain that violates the eq8 form
        let chain = TreeModel::chain(&[0.01, 1.0]).unwrap();
        let r = verify_ineq9(&chain).unwrap();
        assert_eq!(r.lhs, 1.0);
        assert_abs_diff_eq!(r.rhs, er, epsilon = 1e-15);
        assert!(r.holds());
        // ... and log⁺ vs log differ below 1: improvement strictly positive
        let small_chain = TreeModel::chain(&[0.25, 0.5]).unwrap();
        let r = verify_ineq9(&small_chain).unwrap();
        assert!(r.improvement > 0.0);

        let one = TreeModel::new(leaf(1.0)).unwrap();
        let r = verify_ineq9(&one).unwrap();
        assert_eq!(r.lhs, 1.0);
        assert_abs_diff_eq!(r.rhs, er, epsilon = 1e-15);

        let sup = TreeModel::new(node(1.0, vec![(1.0, leaf(0.5))])).unwrap();
        assert!(matches!(
            verify_ineq9(&sup),
            Err(TreeError::Classification { .. })
        ));
    }

    #[test]
    fn transform_expectation_examples() {
        let t = two_leaf_martingale();
        assert_eq!(transform_expectation(&t, 1.5, WhichIneq::Eq1), 0.0);

        let sup = TreeModel::new(node(1.0, vec![(0.5, leaf(1.5)), (0.5, leaf(0.0))])).unwrap();
        assert_eq!(classify(&sup).kind, ProcessKind::Supermartingale);
        assert_eq!(transform_expectation(&sup, 2.0, WhichIneq::Eq1), -0.25);

        let sub = two_leaf_submartingale();
        assert_eq!(transform_expectation(&sub, 0.5, WhichIneq::Eq2), -1.0);
    }

    #[test]
    fn expectation_bridge_identity() {
        // E[pathwise eq1 rhs] = eq3 rhs + E[transform]; same for eq2/eq4.
        let trees = [
            two_leaf_martingale(),
            two_leaf_submartingale(),
            TreeModel::new(node(
                1.0,
                vec![
                    (0.25, node(2.0, vec![(0.5, leaf(3.0)), (0.5, leaf(1.0))])),
                    (0.75, node(0.5, vec![(1.0, leaf(0.25))])),
                ],
            ))
            .unwrap(),
        ];
        for t in &trees {
            for level in [-1.0, 0.5, 1.0, 1.5, 2.5] {
                let rhs1 = t.expect_with(|p| {
                    PathFunctional::LevelRhs {
                        level,
                        which: WhichIneq::Eq1,
                    }
                    .eval(p)
                });
                let capped =
                    expect_functional(t, &PathFunctional::StartCappedAt { level }).unwrap();
                let below =
                    expect_functional(t, &PathFunctional::TerminalBelowLevel { level }).unwrap();
                let tr1 = transform_expectation(t, level, WhichIneq::Eq1);
                assert_abs_diff_eq!(rhs1, capped - below + tr1, epsilon = 1e-12);

                let rhs2 = t.expect_with(|p| {
                    PathFunctional::LevelRhs {
                        level,
                        which: WhichIneq::Eq2,
                    }
                    .eval(p)
                });
                let excess =
                    expect_functional(t, &PathFunctional::StartExcessOver { level }).unwrap();
                let above =
                    expect_functional(t, &PathFunctional::TerminalAboveLevel { level }).unwrap();
                let tr2 = transform_expectation(t, level, WhichIneq::Eq2);
                assert_abs_diff_eq!(rhs2, -excess + above + tr2, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn json_round_trip_and_validation_errors() {
        let json = r#"{
            "value": 1.0,
            "children": [
                {"p": 0.5, "node": {"value": 2.0}},
                {"p": 0.5, "node": {"value": 0.0, "children": []}}
            ]
        }"#;
        let t = TreeModel::from_json_str(json).unwrap();
        assert_eq!(t.depth(), 1);
        assert_eq!(t.node_count(), 3);
        assert_eq!(classify(&t).kind, ProcessKind::Martingale);

        let bad_sum = r#"{"value": 1, "children": [
            {"p": 0.6, "node": {"value": 2}},
            {"p": 0.3, "node": {"value": 0}}
        ]}"#;
        match TreeModel::from_json_str(bad_sum).unwrap_err() {
            TreeError::ProbSum { at, sum } => {
                assert_eq!(at, "$");
                assert!((sum - 0.9).abs() < 1e-12);
            }
            other => panic!("expected ProbSum, got {other:?}"),
        }

        let bad_prob = r#"{"value": 1, "children": [
            {"p": 1.0, "node": {"value": 2, "children": [
                {"p": 0.0, "node": {"value": 1}},
                {"p": 1.0, "node": {"value": 3}}
            ]}}
        ]}"#;
        match TreeModel::from_json_str(bad_prob).unwrap_err() {
            TreeError::ProbOutOfRange { at, prob } => {
                assert_eq!(at, "$.children[0].node.children[0]");
                assert_eq!(prob, 0.0);
            }
            other => panic!("expected ProbOutOfRange, got {other:?}"),
        }

        let ragged = r#"{"value": 1, "children": [
            {"p": 0.5, "node": {"value": 2}},
            {"p": 0.5, "node": {"value": 0, "children": [{"p": 1.0, "node": {"value": 1}}]}}
        ]}"#;
        match TreeModel::from_json_str(ragged).unwrap_err() {
            TreeError::RaggedDepth {
                at,
                expected,
                found,
            } => {
                assert_eq!(at, "$.children[1].node.children[0].node");
                assert_eq!((expected, found), (1, 2));
            }
            other => panic!("expected RaggedDepth, got {other:?}"),
        }

        assert!(matches!(
            TreeModel::from_json_str("{notjson"),
            Err(TreeError::Json { .. })
        ));
    }

    #[test]
    fn node_bound_enforced() {
        let t = node(1.0, vec![(0.5, leaf(2.0)), (0.5, leaf(0.0))]);
        assert!(matches!(
            TreeModel::with_node_bound(t, 2),
            Err(TreeError::TooManyNodes { bound: 2, .. })
        ));
    }

    #[test]
    fn chain_is_deterministic_path() {
        let chain = TreeModel::chain(&[1.0, 2.0, 0.5]).unwrap();
        assert_eq!(chain.depth(), 2);
        let mut seen = Vec::new();
        chain.for_each_leaf(|prob, path| seen.push((prob, path.to_vec())));
        assert_eq!(seen, vec![(1.0, vec![1.0, 2.0, 0.5])]);
    }
}
