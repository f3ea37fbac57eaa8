//! Discrete Bayesian networks: joint distribution, Markov blankets, full
//! conditionals, and support-point selection.
//!
//! A network is an ordered list of nodes (the order is topological: parents
//! precede children). Every node carries a conditional probability table
//! indexed by the packed configuration of its parents. All cardinalities are
//! powers of two so that states map onto qubit groups; node 0 occupies the
//! most significant bit group of the packed state index.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for CPT row normalization checks.
const ROW_SUM_TOL: f64 = 1e-12;

/// One node of the network: cardinality, parent list, and the conditional
/// probability table. `cpt[row][v]` is P(node = v | parents = row) where
/// `row` packs the parent values with the first listed parent most
/// significant.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub name: String,
    pub cardinality: usize,
    pub parents: Vec<usize>,
    pub cpt: Vec<Vec<f64>>,
}

/// A full assignment of values to nodes, `x[i]` in `[0, cardinality_i)`.
pub type Assignment = Vec<usize>;

/// Immutable validated network. All operations are pure; the struct is safe
/// to share across threads.
#[derive(Debug, Clone)]
pub struct BayesianNetwork {
    nodes: Vec<NodeSpec>,
    children: Vec<Vec<usize>>,
    /// Mixed-radix weight of node i in the packed state index.
    weights: Vec<usize>,
    n_states: usize,
    n_bits: usize,
}

/// Serialized form of a network file: `{"nodes": [{name, cardinality,
/// parents (names), cpt}]}`. CPT rows are indexed by the packed parent
/// configuration, first listed parent most significant.
#[derive(Debug, Serialize, Deserialize)]
struct NetworkFile {
    nodes: Vec<NodeFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeFile {
    name: String,
    cardinality: usize,
    #[serde(default)]
    parents: Vec<String>,
    cpt: Vec<Vec<f64>>,
}

impl BayesianNetwork {
    /// Validate and freeze a node list. Parents must precede children,
    /// cardinalities must be powers of two, and every CPT row must be a
    /// probability vector.
    pub fn new(nodes: Vec<NodeSpec>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidNetwork("network has no nodes".into()));
        }
        for (i, node) in nodes.iter().enumerate() {
            if node.cardinality < 2 || !node.cardinality.is_power_of_two() {
                return Err(Error::InvalidNetwork(format!(
                    "node {} ({}) has cardinality {}; must be a power of two >= 2",
                    i, node.name, node.cardinality
                )));
            }
            for &p in &node.parents {
                if p >= i {
                    return Err(Error::InvalidNetwork(format!(
                        "node {} ({}) lists parent {} which does not precede it",
                        i, node.name, p
                    )));
                }
            }
            let rows: usize = node.parents.iter().map(|&p| nodes[p].cardinality).product();
            if node.cpt.len() != rows {
                return Err(Error::InvalidNetwork(format!(
                    "node {} ({}) has {} CPT rows; expected {}",
                    i,
                    node.name,
                    node.cpt.len(),
                    rows
                )));
            }
            for (r, row) in node.cpt.iter().enumerate() {
                if row.len() != node.cardinality {
                    return Err(Error::InvalidNetwork(format!(
                        "node {} ({}) CPT row {} has length {}; expected {}",
                        i,
                        node.name,
                        r,
                        row.len(),
                        node.cardinality
                    )));
                }
                if row.iter().any(|&p| p < 0.0) {
                    return Err(Error::InvalidNetwork(format!(
                        "node {} ({}) CPT row {} has a negative entry",
                        i, node.name, r
                    )));
                }
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidNetwork(format!(
                        "node {} ({}) CPT row {} sums to {}; expected 1",
                        i, node.name, r, s
                    )));
                }
            }
        }

        let n = nodes.len();
        let mut children = vec![Vec::new(); n];
        for (i, node) in nodes.iter().enumerate() {
            for &p in &node.parents {
                children[p].push(i);
            }
        }
        let mut weights = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            weights[i] = weights[i + 1] * nodes[i + 1].cardinality;
        }
        let n_states = weights[0] * nodes[0].cardinality;
        let n_bits = n_states.trailing_zeros() as usize;
        Ok(Self {
            nodes,
            children,
            weights,
            n_states,
            n_bits,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Total joint state count N_S (a power of two).
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// log2(N_S): qubits per register.
    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn node(&self, i: usize) -> &NodeSpec {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// Qubits occupied by node i inside one register, counted from the least
    /// significant bit of the packed index.
    pub fn node_bits(&self, i: usize) -> usize {
        self.nodes[i].cardinality.trailing_zeros() as usize
    }

    /// Least-significant bit position of node i's group in the packed index.
    /// Node 0 sits at the top of the register.
    pub fn bit_offset(&self, i: usize) -> usize {
        self.weights[i].trailing_zeros() as usize
    }

    /// Packed state index of an assignment; node 0 is most significant.
    pub fn pack(&self, x: &[usize]) -> usize {
        debug_assert_eq!(x.len(), self.nodes.len());
        x.iter().zip(&self.weights).map(|(&v, &w)| v * w).sum()
    }

    /// Inverse of [`pack`](Self::pack).
    pub fn unpack(&self, mut idx: usize) -> Assignment {
        let mut x = vec![0; self.nodes.len()];
        for (i, &w) in self.weights.iter().enumerate() {
            x[i] = idx / w;
            idx %= w;
        }
        x
    }

    /// CPT row index for node i under the assignment: packed parent values,
    /// first listed parent most significant.
    pub fn parent_row(&self, i: usize, x: &[usize]) -> usize {
        let mut row = 0;
        for &p in &self.nodes[i].parents {
            row = row * self.nodes[p].cardinality + x[p];
        }
        row
    }

    /// Joint probability of a full assignment: the product of one CPT entry
    /// per node.
    pub fn joint_probability(&self, x: &[usize]) -> f64 {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, node)| node.cpt[self.parent_row(i, x)][x[i]])
            .product()
    }

    /// The stationary (joint) distribution as a dense vector over packed
    /// state indices.
    pub fn stationary_distribution(&self) -> Vec<f64> {
        (0..self.n_states)
            .map(|idx| self.joint_probability(&self.unpack(idx)))
            .collect()
    }

    /// Markov blanket of node i: parents, children, and parents of children,
    /// excluding i itself. Sorted for reproducibility.
    pub fn markov_blanket(&self, i: usize) -> BTreeSet<usize> {
        let mut blanket = BTreeSet::new();
        blanket.extend(self.nodes[i].parents.iter().copied());
        for &c in &self.children[i] {
            blanket.insert(c);
            blanket.extend(self.nodes[c].parents.iter().copied());
        }
        blanket.remove(&i);
        blanket
    }

    /// Full conditional P(x_i | rest). Only the Markov-blanket entries of
    /// `rest` influence the result; the entry at position i is ignored.
    ///
    /// Computed from the local factors that mention node i (its own CPT row
    /// and each child's), not by enumerating the joint.
    pub fn full_conditional(&self, i: usize, rest: &[usize]) -> Result<Vec<f64>> {
        let card = self.nodes[i].cardinality;
        let mut x = rest.to_vec();
        let mut probs = vec![0.0; card];
        for (v, out) in probs.iter_mut().enumerate() {
            x[i] = v;
            let mut p = self.nodes[i].cpt[self.parent_row(i, &x)][v];
            for &c in &self.children[i] {
                p *= self.nodes[c].cpt[self.parent_row(c, &x)][x[c]];
            }
            *out = p;
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroConditioningEvent {
                node: i,
                config: self.pack(rest),
            });
        }
        for p in &mut probs {
            *p /= total;
        }
        Ok(probs)
    }

    /// A support point x0 with pi(x0) > 0: sweep nodes in order, picking the
    /// most probable value given the choices made so far (ties resolve to
    /// the lowest state index).
    pub fn find_support_point(&self) -> Assignment {
        let mut x = vec![0; self.nodes.len()];
        for i in 0..self.nodes.len() {
            let row = &self.nodes[i].cpt[self.parent_row(i, &x)];
            let mut best = 0;
            for (v, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = v;
                }
            }
            x[i] = best;
        }
        x
    }

    /// Parse the JSON network format. Parent references are by node name and
    /// must point at earlier nodes.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(text)?;
        let mut specs = Vec::with_capacity(file.nodes.len());
        for (i, node) in file.nodes.iter().enumerate() {
            let mut parents = Vec::with_capacity(node.parents.len());
            for pname in &node.parents {
                let idx = file.nodes[..i].iter().position(|n| &n.name == pname);
                match idx {
                    Some(p) => parents.push(p),
                    None => {
                        return Err(Error::InvalidNetwork(format!(
                            "node {} ({}) references unknown or later parent '{}'",
                            i, node.name, pname
                        )))
                    }
                }
            }
            specs.push(NodeSpec {
                name: node.name.clone(),
                cardinality: node.cardinality,
                parents,
                cpt: node.cpt.clone(),
            });
        }
        Self::new(specs)
    }

    /// Serialize back to the JSON network format.
    pub fn to_json(&self) -> String {
        let file = NetworkFile {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeFile {
                    name: n.name.clone(),
                    cardinality: n.cardinality,
                    parents: n
                        .parents
                        .iter()
                        .map(|&p| self.nodes[p].name.clone())
                        .collect(),
                    cpt: n.cpt.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("network serialization cannot fail")
    }
}
