//! Pathwise counterparts of the Doob maximal inequalities, verified
//! exactly on discrete paths and finite probability trees, and
//! statistically by Monte Carlo.
//!
//! The crate numbers the inequality family it works with:
//!
//! - **eq1/eq2** — the two pathwise level inequalities: a digital payoff
//!   `lambda·1{max >= lambda}` is superhedged by an initial capital, a
//!   predictable transform `Σ H_k·Δx_k`, and a terminal term. Their common
//!   gap is `0` off crossings and exactly `x_j - lambda` at the first
//!   crossing `j` ([`ineq`]).
//! - **eq3/eq4** — their expectation forms for supermartingales and
//!   submartingales on finite trees, which sharpen the classical Doob
//!   level bounds ([`tree`]).
//! - **eq5** — the pathwise `L^p` maximal bound obtained by integrating
//!   eq2 against a power weight in the level ([`derivation`], [`ineq`]).
//! - **eq6/eq7** — two algebraically identical forms of the pathwise
//!   `L log L` bound with constant `e/(e-1)` ([`derivation`], [`ineq`]).
//! - **eq8** — the expectation `L log L` bound for nonnegative
//!   martingales, together with the submartingale counterexample that
//!   shows its hypothesis cannot be weakened ([`tree`]).
//! - **eq9** — the `L log L` bound `E[max] <= e/(e-1)·(1 + E[X_n log X_n])`
//!   valid for all nonnegative submartingales via the terminal-conditional
//!   closure ([`tree`]).
//!
//! [`mc`] adds reproducible counter-based generators and 3-sigma
//! statistical checks of the expectation inequalities.

pub mod derivation;
pub mod ineq;
pub mod mc;
pub mod num;
pub mod path;
pub mod tree;

pub use derivation::{
    chain_llogl, chain_lp, layer_cake_log, layer_cake_power, log_young_step, young_step,
    ChainReport, ChainStage, YoungBound,
};
pub use ineq::{
    eval_ineq1, eval_ineq2, eval_llogl, eval_lp, gap_oracle, hedge_decompose, proof_case,
    HedgeDecomposition, IneqError, IneqReport, ProofCase, WhichIneq,
};
pub use mc::{
    estimate_sides, estimate_transform, unit_uniform, ExpectationIneq, GeneratorKind,
    GeneratorSpec, McError, McEstimate, SidesEstimate,
};
pub use num::{blended_tol, e_ratio, Tol};
pub use path::{
    parse_path_text, validate, NonnegPath, Path, PathError, PositiveStartPath, ValidatedPath,
};
pub use tree::{
    classify, counterexample_eq8, counterexample_threshold, doob_closure, expect_functional,
    transform_expectation, verify_ineq3, verify_ineq4, verify_ineq8, verify_ineq9,
    CounterexampleReport, ExpectationReport, PathFunctional, ProcessClass, ProcessKind, TreeError,
    TreeModel, TreeNode,
};
