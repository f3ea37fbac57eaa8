//! Ready-made example networks used throughout the test suites and the CLI
//! documentation. All constructors are deterministic; `seeded_net` derives
//! every choice from a ChaCha stream so fixture nets are reproducible across
//! platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bayesnet::{BayesianNetwork, NodeSpec};

fn node(name: &str, parents: Vec<usize>, cpt: Vec<Vec<f64>>) -> NodeSpec {
    NodeSpec {
        name: name.into(),
        cardinality: cpt[0].len(),
        parents,
        cpt,
    }
}

/// One binary node with P(x = 1) = p.
pub fn single_node(p: f64) -> BayesianNetwork {
    BayesianNetwork::new(vec![node("x0", vec![], vec![vec![1.0 - p, p]])]).unwrap()
}

/// Two dependent binary nodes: P(x0=1) = 0.3, P(x1=1 | x0) = (0.2, 0.7).
pub fn two_node() -> BayesianNetwork {
    BayesianNetwork::new(vec![
        node("x0", vec![], vec![vec![0.7, 0.3]]),
        node("x1", vec![0], vec![vec![0.8, 0.2], vec![0.3, 0.7]]),
    ])
    .unwrap()
}

/// Two independent binary nodes with distinct marginals.
pub fn independent_pair() -> BayesianNetwork {
    BayesianNetwork::new(vec![
        node("x0", vec![], vec![vec![0.7, 0.3]]),
        node("x1", vec![], vec![vec![0.2, 0.8]]),
    ])
    .unwrap()
}

/// Three independent uniform binary nodes (pi uniform over 8 states).
pub fn uniform3() -> BayesianNetwork {
    BayesianNetwork::new(vec![
        node("x0", vec![], vec![vec![0.5, 0.5]]),
        node("x1", vec![], vec![vec![0.5, 0.5]]),
        node("x2", vec![], vec![vec![0.5, 0.5]]),
    ])
    .unwrap()
}

/// Chain x0 -> x1 -> x2 with non-degenerate tables.
pub fn chain3() -> BayesianNetwork {
    BayesianNetwork::new(vec![
        node("x0", vec![], vec![vec![0.7, 0.3]]),
        node("x1", vec![0], vec![vec![0.8, 0.2], vec![0.3, 0.7]]),
        node("x2", vec![1], vec![vec![0.6, 0.4], vec![0.1, 0.9]]),
    ])
    .unwrap()
}

/// Collider x0 -> x2 <- x1.
pub fn collider3() -> BayesianNetwork {
    BayesianNetwork::new(vec![
        node("x0", vec![], vec![vec![0.6, 0.4]]),
        node("x1", vec![], vec![vec![0.25, 0.75]]),
        node(
            "x2",
            vec![0, 1],
            vec![
                vec![0.9, 0.1],
                vec![0.5, 0.5],
                vec![0.3, 0.7],
                vec![0.2, 0.8],
            ],
        ),
    ])
    .unwrap()
}

/// x1 deterministically copies a uniform x0.
pub fn deterministic_copy_pair() -> BayesianNetwork {
    BayesianNetwork::new(vec![
        node("x0", vec![], vec![vec![0.5, 0.5]]),
        node("x1", vec![0], vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
    ])
    .unwrap()
}

/// x1 copies x0 and x2 negates it; conditioning on (x1, x2) equal is
/// impossible — used to exercise the zero-conditioning error path.
pub fn conflicting_children() -> BayesianNetwork {
    BayesianNetwork::new(vec![
        node("x0", vec![], vec![vec![0.5, 0.5]]),
        node("x1", vec![0], vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
        node("x2", vec![0], vec![vec![0.0, 1.0], vec![1.0, 0.0]]),
    ])
    .unwrap()
}

/// A single four-state node (two qubits).
pub fn quad_node() -> BayesianNetwork {
    BayesianNetwork::new(vec![node("x0", vec![], vec![vec![0.1, 0.2, 0.3, 0.4]])]).unwrap()
}

/// Uniform root plus a symmetric binary channel: x1 equals x0 with
/// probability q. The sweep kernel's second eigenvalue is (2q-1)^2, so the
/// spectral gap is 4q(1-q).
pub fn coupled_pair(q: f64) -> BayesianNetwork {
    BayesianNetwork::new(vec![
        node("x0", vec![], vec![vec![0.5, 0.5]]),
        node("x1", vec![0], vec![vec![q, 1.0 - q], vec![1.0 - q, q]]),
    ])
    .unwrap()
}

/// Coupled pair parameterized by the sweep kernel's second eigenvalue
/// `lambda` in (0, 1): q = (1 + sqrt(lambda)) / 2, so the gap is exactly
/// 1 - lambda. Used for mixing-cost scaling sweeps.
pub fn slow_pair(lambda: f64) -> BayesianNetwork {
    coupled_pair((1.0 + lambda.sqrt()) / 2.0)
}

/// Reproducible random net: `n` binary nodes, random edges from earlier
/// nodes, CPT probabilities drawn from [0.05, 0.95] so every joint state has
/// positive probability.
pub fn seeded_net(seed: u64, n: usize) -> BayesianNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let mut parents = Vec::new();
        for p in 0..i {
            if parents.len() < 3 && rng.gen_bool(0.5) {
                parents.push(p);
            }
        }
        let rows = 1usize << parents.len();
        let cpt = (0..rows)
            .map(|_| {
                let p = rng.gen_range(0.05..0.95);
                vec![1.0 - p, p]
            })
            .collect();
        nodes.push(node(&format!("x{i}"), parents, cpt));
    }
    BayesianNetwork::new(nodes).unwrap()
}

/// The generic (non-reversible) three-node fixture used by the reflection
/// and sampler suites.
pub fn seeded3() -> BayesianNetwork {
    seeded_net(7, 3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_net_is_deterministic() {
        let a = seeded_net(42, 5);
        let b = seeded_net(42, 5);
        assert_eq!(a.nodes(), b.nodes());
        assert_eq!(a.n_states(), 32);
    }

    #[test]
    fn seeded_net_has_positive_joint() {
        for seed in 0..10 {
            let net = seeded_net(seed, 4);
            let pi = net.stationary_distribution();
            assert!(pi.iter().all(|&p| p > 0.0), "seed {seed}");
        }
    }

    #[test]
    fn slow_pair_hits_requested_eigenvalue_parameter() {
        let net = slow_pair(0.81);
        // q = (1 + 0.9) / 2
        assert!((net.node(1).cpt[0][0] - 0.95).abs() < 1e-12);
    }
}
