//! Cross-module invariants that are too heavy for unit tests: a
//! million-path fuzz of the pathwise gap identity over every generator
//! kind, and exact tree replicas of the two-point generators
//! cross-validating the Monte Carlo estimators.

use rayon::prelude::*;

use doob_pathwise::ineq::{eval_ineq1, eval_ineq2, eval_llogl, eval_lp, gap_oracle, WhichIneq};
use doob_pathwise::mc::{
    estimate_sides, estimate_transform, unit_uniform, ExpectationIneq, GeneratorKind, GeneratorSpec,
};
use doob_pathwise::num::blended_tol;
use doob_pathwise::path::{NonnegPath, PositiveStartPath};
use doob_pathwise::tree::{
    expect_functional, transform_expectation, PathFunctional, TreeEdge, TreeModel, TreeNode,
};

const FUZZ_SEED: u64 = 0xF0CC_5EED;

fn fuzz_spec(trial: u64) -> GeneratorSpec {
    let u = |k: u64| unit_uniform(FUZZ_SEED, trial, k);
    let n = (u(1) * 21.0) as usize;
    let step_scale = 0.1 + 2.0 * u(2);
    let kind = match trial % 4 {
        0 => GeneratorKind::SymmetricWalk,
        1 => GeneratorKind::DriftWalk {
            mu: step_scale * (2.0 * u(3) - 1.0),
        },
        2 => GeneratorKind::MultiplicativePositive {
            log_mean: 0.3 * (2.0 * u(3) - 1.0),
        },
        _ => GeneratorKind::AbsWalk,
    };
    let x0 = match kind {
        GeneratorKind::MultiplicativePositive { .. } => 0.1 + 5.0 * u(4),
        GeneratorKind::AbsWalk => 5.0 * u(4),
        _ => 10.0 * u(4) - 5.0,
    };
    GeneratorSpec {
        kind,
        n,
        x0,
        step_scale,
        seed: FUZZ_SEED ^ trial.rotate_left(17),
    }
}

fn check_one(trial: u64) -> Option<String> {
    let spec = fuzz_spec(trial);
    spec.validate().expect("fuzz specs are in range");
    let path = spec.generate(trial);
    let u = |k: u64| unit_uniform(FUZZ_SEED ^ 0xA5A5, trial, k);

    let lo = path.values().iter().cloned().fold(f64::INFINITY, f64::min);
    let span = path.max() - lo + 2.0;
    for k in 0..2u64 {
        let level = lo - 1.0 + span * u(k + 1);
        let oracle = gap_oracle(&path, level);
        if oracle < 0.0 {
            return Some(format!(
                "negative oracle gap {oracle} on {:?}",
                path.values()
            ));
        }
        let r1 = eval_ineq1(&path, level);
        let r2 = eval_ineq2(&path, level);
        let tol = blended_tol(r1.lhs, r1.rhs).max(blended_tol(r2.lhs, r2.rhs));
        if (r1.gap - oracle).abs() > tol || (r2.gap - oracle).abs() > tol {
            return Some(format!(
                "gap identity broken at level {level} on {:?}: eq1 {} eq2 {} oracle {oracle}",
                path.values(),
                r1.gap,
                r2.gap
            ));
        }
    }

    if let Ok(nonneg) = NonnegPath::new(path.values().to_vec()) {
        let p = 1.1 + 3.0 * u(10);
        let r = eval_lp(&nonneg, p).expect("p > 1");
        if !r.holds() {
            return Some(format!("eq5 violated at p={p} on {:?}", path.values()));
        }
        if let Ok(positive) = PositiveStartPath::from_nonneg(nonneg) {
            let (f6, f7) = eval_llogl(&positive);
            if !f6.holds() || !f7.holds() {
                return Some(format!("eq6/eq7 violated on {:?}", path.values()));
            }
        }
    }
    None
}

#[test]
fn million_path_fuzz_has_no_pathwise_violations() {
    // trial % 4 picks the kind, so this is one million paths of each kind
    let violation = (0..4_000_000u64).into_par_iter().find_map_first(check_one);
    assert!(violation.is_none(), "{}", violation.unwrap());
}

// ---------------------------------------------------------------------------
// Exact tree replicas of the generators
// ---------------------------------------------------------------------------

/// Rebuild a two-point generator as the exact tree of all step outcomes.
/// The recursion state is the signed walk position (only AbsWalk maps it
/// through |.| for the node value).
fn generator_tree(spec: &GeneratorSpec) -> TreeModel {
    fn node_value(kind: &GeneratorKind, state: f64) -> f64 {
        match kind {
            GeneratorKind::AbsWalk => state.abs(),
            _ => state,
        }
    }

    fn build(spec: &GeneratorSpec, state: f64, remaining: usize) -> TreeNode {
        let value = node_value(&spec.kind, state);
        if remaining == 0 {
            return TreeNode {
                value,
                children: Vec::new(),
            };
        }
        let (p_up, up, down) = match spec.kind {
            GeneratorKind::SymmetricWalk | GeneratorKind::AbsWalk => {
                (0.5, state + spec.step_scale, state - spec.step_scale)
            }
            GeneratorKind::DriftWalk { mu } => (
                0.5 * (1.0 + mu / spec.step_scale),
                state + spec.step_scale,
                state - spec.step_scale,
            ),
            GeneratorKind::MultiplicativePositive { log_mean } => {
                let mean = log_mean.exp();
                let up = mean * spec.step_scale.exp();
                let down = mean * (-spec.step_scale).exp();
                ((mean - down) / (up - down), state * up, state * down)
            }
        };
        let mut children = Vec::with_capacity(2);
        if p_up > 0.0 {
            children.push(TreeEdge {
                prob: p_up,
                child: build(spec, up, remaining - 1),
            });
        }
        if 1.0 - p_up > 0.0 {
            children.push(TreeEdge {
                prob: 1.0 - p_up,
                child: build(spec, down, remaining - 1),
            });
        }
        TreeNode { value, children }
    }

    TreeModel::new(build(spec, spec.x0, spec.n)).expect("generator trees are valid")
}

fn assert_sampled_matches_exact(label: &str, exact: f64, mean: f64, std_err: f64) {
    let band = 5.0 * std_err + 1e-12;
    assert!(
        (mean - exact).abs() <= band,
        "{label}: sampled {mean} vs exact {exact} (band {band})"
    );
}

#[test]
fn generators_match_their_exact_tree_replicas() {
    let trials = 200_000u64;
    let specs = [
        GeneratorSpec {
            kind: GeneratorKind::SymmetricWalk,
            n: 6,
            x0: 0.0,
            step_scale: 1.0,
            seed: 71,
        },
        GeneratorSpec {
            kind: GeneratorKind::DriftWalk { mu: -0.25 },
            n: 6,
            x0: 0.0,
            step_scale: 1.0,
            seed: 72,
        },
        GeneratorSpec {
            kind: GeneratorKind::MultiplicativePositive { log_mean: 0.0 },
            n: 6,
            x0: 1.0,
            step_scale: 0.2,
            seed: 73,
        },
        GeneratorSpec {
            kind: GeneratorKind::AbsWalk,
            n: 6,
            x0: 1.0,
            step_scale: 1.0,
            seed: 74,
        },
    ];

    for spec in &specs {
        let tree = generator_tree(spec);
        let level = match spec.kind {
            GeneratorKind::MultiplicativePositive { .. } => 1.3,
            _ => 2.0,
        };

        // the transform mean
        let exact = transform_expectation(&tree, level, WhichIneq::Eq1);
        let sampled = estimate_transform(spec, level, WhichIneq::Eq1, trials).unwrap();
        assert_sampled_matches_exact(
            &format!("{:?} transform", spec.kind),
            exact,
            sampled.mean,
            sampled.std_err,
        );

        // both sides of an applicable expectation inequality
        let (ineq, exact_lhs, exact_rhs) = match spec.kind {
            GeneratorKind::DriftWalk { .. } => {
                let cross =
                    expect_functional(&tree, &PathFunctional::CrossingIndicator { level }).unwrap();
                let capped =
                    expect_functional(&tree, &PathFunctional::StartCappedAt { level }).unwrap();
                let below = expect_functional(&tree, &PathFunctional::TerminalBelowLevel { level })
                    .unwrap();
                (ExpectationIneq::Eq3, level * cross, capped - below)
            }
            _ => {
                let cross =
                    expect_functional(&tree, &PathFunctional::CrossingIndicator { level }).unwrap();
                let excess =
                    expect_functional(&tree, &PathFunctional::StartExcessOver { level }).unwrap();
                let above = expect_functional(&tree, &PathFunctional::TerminalAboveLevel { level })
                    .unwrap();
                (ExpectationIneq::Eq4, level * cross, -excess + above)
            }
        };
        let est = estimate_sides(spec, ineq, level, trials).unwrap();
        assert!(est.pass, "{} failed on {:?}", ineq.tag(), spec.kind);
        assert_sampled_matches_exact(
            &format!("{:?} {} lhs", spec.kind, ineq.tag()),
            exact_lhs,
            est.lhs.mean,
            est.lhs.std_err,
        );
        assert_sampled_matches_exact(
            &format!("{:?} {} rhs", spec.kind, ineq.tag()),
            exact_rhs,
            est.rhs.mean,
            est.rhs.std_err,
        );
    }
}

#[test]
fn closure_route_is_consistent_on_generator_trees() {
    // eq9 through the closure on exact replicas of the nonnegative kinds
    for spec in [
        GeneratorSpec {
            kind: GeneratorKind::MultiplicativePositive { log_mean: 0.1 },
            n: 5,
            x0: 0.5,
            step_scale: 0.3,
            seed: 75,
        },
        GeneratorSpec {
            kind: GeneratorKind::AbsWalk,
            n: 5,
            x0: 0.0,
            step_scale: 1.0,
            seed: 76,
        },
    ] {
        let tree = generator_tree(&spec);
        let report = doob_pathwise::tree::verify_ineq9(&tree).unwrap();
        assert!(report.holds(), "eq9 failed on {:?}: {report:?}", spec.kind);
    }
}
