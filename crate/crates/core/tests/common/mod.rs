//! Shared helpers for the integration suites: a deterministic counter-based
//! RNG and randomized tree models with a forced process class.

use doob_pathwise::mc::unit_uniform;
use doob_pathwise::tree::{TreeEdge, TreeModel, TreeNode};

/// Deterministic uniform stream derived from the library's counter-based
/// generator.
pub struct DetRng {
    seed: u64,
    counter: u64,
}

impl DetRng {
    pub fn new(seed: u64) -> Self {
        DetRng { seed, counter: 0 }
    }

    /// Next uniform in [0, 1).
    pub fn next(&mut self) -> f64 {
        self.counter += 1;
        unit_uniform(self.seed, u64::MAX, self.counter)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.next() * ((hi - lo + 1) as f64)) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcedClass {
    Martingale,
    Submartingale,
    Supermartingale,
}

/// Value domain for generated trees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueDomain {
    /// leaves in [-10, 10]
    Real,
    /// leaves in {0} ∪ [0.05, 10], occasional exact zeros
    Nonneg,
    /// leaves in [0.05, 10]
    Positive,
}

fn leaf_value(rng: &mut DetRng, domain: ValueDomain) -> f64 {
    match domain {
        ValueDomain::Real => rng.range(-10.0, 10.0),
        ValueDomain::Nonneg => {
            if rng.next() < 0.08 {
                0.0
            } else {
                rng.range(0.05, 10.0)
            }
        }
        ValueDomain::Positive => rng.range(0.05, 10.0),
    }
}

fn build(
    rng: &mut DetRng,
    remaining: usize,
    branching: usize,
    class: ForcedClass,
    domain: ValueDomain,
) -> TreeNode {
    if remaining == 0 {
        return TreeNode {
            value: leaf_value(rng, domain),
            children: Vec::new(),
        };
    }
    let fanout = rng.int(1, branching);
    let weights: Vec<f64> = (0..fanout).map(|_| rng.range(0.05, 1.0)).collect();
    let total: f64 = weights.iter().sum();
    let children: Vec<TreeEdge> = weights
        .into_iter()
        .map(|w| TreeEdge {
            prob: w / total,
            child: build(rng, remaining - 1, branching, class, domain),
        })
        .collect();
    let mean: f64 = children.iter().map(|e| e.prob * e.child.value).sum();
    let value = match class {
        // exactly the conditional mean, so classification is exact
        ForcedClass::Martingale => mean,
        ForcedClass::Submartingale => {
            if domain == ValueDomain::Real {
                mean - rng.range(0.0, 2.0)
            } else {
                // shrink multiplicatively to stay nonnegative
                mean * (1.0 - 0.9 * rng.next())
            }
        }
        ForcedClass::Supermartingale => mean + rng.range(0.0, 2.0),
    };
    TreeNode { value, children }
}

/// Random uniform-depth tree (depth `0..=max_depth`, branching
/// `1..=branching`) whose values force the given class.
pub fn random_tree(
    rng: &mut DetRng,
    class: ForcedClass,
    max_depth: usize,
    branching: usize,
    domain: ValueDomain,
) -> TreeModel {
    let depth = rng.int(0, max_depth);
    TreeModel::new(build(rng, depth, branching, class, domain)).expect("generated trees are valid")
}
