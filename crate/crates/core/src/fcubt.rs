//! Clustering of functional data with unsupervised binary trees.
//!
//! Growing: each node fits an MFPCA on its members, projects them to
//! scores, selects the mixture order by BIC and, when more than one
//! component wins, splits the node with the two-component model's hard
//! assignment. Nodes stop when they are too small, when one component wins,
//! or when a split would create an undersized child.
//!
//! Joining: terminal nodes (not necessarily siblings) are merged greedily.
//! A pair is mergeable when the BIC-selected order on the union's scores is
//! one; among mergeable pairs the union with the highest one-component BIC
//! merges first, until no pair is mergeable or one class remains.
//!
//! Prediction routes an observation from the root through each split's
//! two-component posterior and returns the reached leaf's (possibly merged)
//! class.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::MultivariateFD;
use crate::error::{FdError, Result};
use crate::gmm::{gmm_select_k, GmmModel};
use crate::moments::MomentOptions;
use crate::pca::{
    mfpca_fit, mfpca_transform, FcptpaConfig, MfpcaModel, MfpcaOptions, NComp, ScoreMethod,
};

#[derive(Debug, Clone)]
pub struct FcubtConfig {
    /// Univariate retention used by every node-level MFPCA.
    pub n_comp: NComp,
    /// Nodes below this size are terminal, and splits may not create a
    /// child below it.
    pub min_size: usize,
    /// Largest mixture order scanned by the BIC selection.
    pub k_max: usize,
    pub seed: u64,
    /// Independent EM starts per mixture fit.
    pub restarts: usize,
    pub method: ScoreMethod,
    /// Moment estimation for node-level MFPCA fits; raw moments by default,
    /// since tiny nodes do not support surface smoothing.
    pub moments: MomentOptions,
    pub fcptpa: FcptpaConfig,
}

impl Default for FcubtConfig {
    fn default() -> Self {
        FcubtConfig {
            n_comp: NComp::Frac(0.95),
            min_size: 5,
            k_max: 5,
            seed: 0,
            restarts: 3,
            method: ScoreMethod::NumInt,
            moments: MomentOptions::raw(),
            fcptpa: FcptpaConfig::default(),
        }
    }
}

/// One node of the grown tree; children of (depth, index) sit at
/// (depth + 1, 2 index) and (depth + 1, 2 index + 1).
#[derive(Debug)]
pub struct FcubtNode {
    pub depth: u32,
    pub index: u64,
    /// Indices into the root sample, ascending.
    pub members: Vec<usize>,
    /// BIC-selected mixture order of this node's scores (absent when the
    /// node was never scored, e.g. a size stop).
    pub k_hat: Option<usize>,
    /// Dense leaf id, left to right; internal nodes carry none.
    pub leaf_label: Option<usize>,
    /// Node-level MFPCA, kept on internal nodes for prediction.
    pub mfpca: Option<MfpcaModel>,
    /// Two-component split model; component 0 routes left.
    pub split: Option<GmmModel>,
    pub children: Option<Box<(FcubtNode, FcubtNode)>>,
}

impl FcubtNode {
    pub fn is_terminal(&self) -> bool {
        self.children.is_none()
    }
}

/// A grown (and possibly joined) tree.
#[derive(Debug)]
pub struct FcubtTree {
    pub root: FcubtNode,
    pub config: FcubtConfig,
    pub n_obs: usize,
    pub n_leaves: usize,
    /// Leaf label -> final class label; identity until `join` runs.
    pub final_of_leaf: Vec<usize>,
    pub n_classes: usize,
    /// Non-fatal events recorded during growth and joining.
    pub warnings: Vec<String>,
}

fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ b.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Node-level expansion: MFPCA on the members and the matching score matrix.
fn node_scores(
    sample: &MultivariateFD,
    members: &[usize],
    config: &FcubtConfig,
) -> Result<(MfpcaModel, Array2<f64>)> {
    let data = sample.select_obs(members)?;
    let opts = MfpcaOptions {
        n_comp: vec![config.n_comp; sample.len()],
        method: config.method,
        moments: config.moments.clone(),
        fcptpa: config.fcptpa.clone(),
    };
    let model = mfpca_fit(&data, &opts)?;
    let scores = model.training_scores.clone();
    Ok((model, scores))
}

fn grow_node(
    sample: &MultivariateFD,
    members: Vec<usize>,
    depth: u32,
    index: u64,
    config: &FcubtConfig,
    warnings: &mut Vec<String>,
) -> FcubtNode {
    let mut node = FcubtNode {
        depth,
        index,
        members,
        k_hat: None,
        leaf_label: None,
        mfpca: None,
        split: None,
        children: None,
    };
    // size stop (MFPCA additionally needs two observations)
    if node.members.len() < config.min_size.max(2) {
        return node;
    }
    let (model, scores) = match node_scores(sample, &node.members, config) {
        Ok(ok) => ok,
        Err(e) => {
            warnings.push(format!("node ({depth}, {index}) forced terminal: {e}"));
            return node;
        }
    };
    let node_seed = mix_seed(config.seed, depth as u64, index);
    let k_cap = config.k_max.min(node.members.len());
    let (k_hat, models) = match gmm_select_k(scores.view(), k_cap, node_seed, config.restarts) {
        Ok(ok) => ok,
        Err(e) => {
            warnings.push(format!("node ({depth}, {index}) forced terminal: {e}"));
            return node;
        }
    };
    node.k_hat = Some(k_hat);
    if k_hat <= 1 || models.len() < 2 {
        return node;
    }

    // split by the two-component model, component 0 to the left child
    let m2 = models.into_iter().nth(1).expect("two-component model");
    let resp = match m2.posterior(scores.view()) {
        Ok(r) => r,
        Err(e) => {
            warnings.push(format!("node ({depth}, {index}) forced terminal: {e}"));
            return node;
        }
    };
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (row, &obs) in node.members.iter().enumerate() {
        // ties resolve to the lower-indexed component
        if resp[(row, 0)] >= resp[(row, 1)] {
            left.push(obs);
        } else {
            right.push(obs);
        }
    }
    if left.len() < config.min_size || right.len() < config.min_size {
        // reject splits that create an undersized child
        return node;
    }
    let left_node = grow_node(sample, left, depth + 1, 2 * index, config, warnings);
    let right_node = grow_node(sample, right, depth + 1, 2 * index + 1, config, warnings);
    node.mfpca = Some(model);
    node.split = Some(m2);
    node.children = Some(Box::new((left_node, right_node)));
    node
}

fn label_leaves(node: &mut FcubtNode, next: &mut usize) {
    match node.children.as_mut() {
        None => {
            node.leaf_label = Some(*next);
            *next += 1;
        }
        Some(kids) => {
            label_leaves(&mut kids.0, next);
            label_leaves(&mut kids.1, next);
        }
    }
}

/// Grow the maximal tree on `sample`.
pub fn grow(sample: &MultivariateFD, config: FcubtConfig) -> Result<FcubtTree> {
    if config.min_size == 0 {
        return Err(FdError::InvalidParameter("min_size must be at least 1".into()));
    }
    if config.k_max < 2 {
        return Err(FdError::InvalidParameter("K_max must be at least 2".into()));
    }
    let n = sample.n_obs();
    let mut warnings = Vec::new();
    let mut root = grow_node(sample, (0..n).collect(), 0, 0, &config, &mut warnings);
    let mut next = 0usize;
    label_leaves(&mut root, &mut next);
    Ok(FcubtTree {
        root,
        config,
        n_obs: n,
        n_leaves: next,
        final_of_leaf: (0..next).collect(),
        n_classes: next,
        warnings,
    })
}

fn collect_leaves<'a>(node: &'a FcubtNode, out: &mut Vec<&'a FcubtNode>) {
    match node.children.as_ref() {
        None => out.push(node),
        Some(kids) => {
            collect_leaves(&kids.0, out);
            collect_leaves(&kids.1, out);
        }
    }
}

impl FcubtTree {
    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&FcubtNode> {
        let mut out = Vec::new();
        collect_leaves(&self.root, &mut out);
        out
    }

    /// Final class label per training observation.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![0usize; self.n_obs];
        for leaf in self.leaves() {
            let class = self.final_of_leaf[leaf.leaf_label.expect("labeled leaf")];
            for &obs in &leaf.members {
                labels[obs] = class;
            }
        }
        labels
    }

    /// Route observations to final class labels.
    pub fn predict(&self, obs: &MultivariateFD) -> Result<Vec<usize>> {
        let proba = self.predict_proba(obs)?;
        Ok((0..proba.nrows())
            .map(|i| {
                let row = proba.row(i);
                let mut best = 0;
                for (c, v) in row.iter().enumerate() {
                    if *v > row[best] {
                        best = c;
                    }
                }
                best
            })
            .collect())
    }

    /// Class membership probabilities: products of the per-split posteriors
    /// along every root-to-leaf path, accumulated over final classes.
    pub fn predict_proba(&self, obs: &MultivariateFD) -> Result<Array2<f64>> {
        let n = obs.n_obs();
        let mut proba = Array2::zeros((n, self.n_classes));
        for i in 0..n {
            let single = obs.select_obs(&[i])?;
            let mut stack = vec![(1.0f64, &self.root)];
            while let Some((weight, node)) = stack.pop() {
                match node.children.as_ref() {
                    None => {
                        let class = self.final_of_leaf[node.leaf_label.expect("labeled leaf")];
                        proba[(i, class)] += weight;
                    }
                    Some(kids) => {
                        let model = node.mfpca.as_ref().expect("internal node model");
                        let split = node.split.as_ref().expect("internal node split");
                        let scores = mfpca_transform(model, &single)?;
                        let resp = split.posterior(scores.view())?;
                        stack.push((weight * resp[(0, 0)], &kids.0));
                        stack.push((weight * resp[(0, 1)], &kids.1));
                    }
                }
            }
        }
        Ok(proba)
    }

    /// Merge terminal nodes whose unions look one-component, relabeling the
    /// final classes; returns the per-observation labels.
    pub fn join(&mut self, sample: &MultivariateFD, n_comp: NComp) -> Result<Vec<usize>> {
        struct Vertex {
            leaf_labels: Vec<usize>,
            /// (depth, index) ids of the constituent leaves, sorted.
            ids: Vec<(u32, u64)>,
            members: Vec<usize>,
        }
        let mut vertices: Vec<Vertex> = self
            .leaves()
            .iter()
            .map(|leaf| Vertex {
                leaf_labels: vec![leaf.leaf_label.expect("labeled leaf")],
                ids: vec![(leaf.depth, leaf.index)],
                members: leaf.members.clone(),
            })
            .collect();

        let mut config = self.config.clone();
        config.n_comp = n_comp;
        let base_seed = self.config.seed;

        // one-component BIC of a union; None when the union's selected order
        // is not one (or the union cannot be scored at all)
        let mut warnings: Vec<String> = Vec::new();
        let mut union_bic = |members: &mut Vec<usize>, seed: u64| -> Option<f64> {
            members.sort_unstable();
            let (_, scores) = match node_scores(sample, members, &config) {
                Ok(ok) => ok,
                Err(e) => {
                    warnings.push(format!("join: union skipped: {e}"));
                    return None;
                }
            };
            let cap = config.k_max.min(members.len());
            match gmm_select_k(scores.view(), cap, seed, config.restarts) {
                Ok((1, models)) => Some(models[0].bic),
                Ok(_) => None,
                Err(e) => {
                    warnings.push(format!("join: union skipped: {e}"));
                    None
                }
            }
        };
        let pair_seed = |a: &Vertex, b: &Vertex| -> u64 {
            let mut acc = base_seed ^ 0xA076_1D64_78BD_642F;
            for &(d, i) in a.ids.iter().chain(b.ids.iter()) {
                acc = mix_seed(acc, d as u64, i);
            }
            acc
        };

        while vertices.len() > 1 {
            let mut best: Option<(f64, usize, usize, Vec<(u32, u64)>)> = None;
            for a in 0..vertices.len() {
                for b in a + 1..vertices.len() {
                    let seed = pair_seed(&vertices[a], &vertices[b]);
                    let mut union: Vec<usize> = vertices[a]
                        .members
                        .iter()
                        .chain(vertices[b].members.iter())
                        .copied()
                        .collect();
                    if let Some(bic) = union_bic(&mut union, seed) {
                        let mut pair_ids: Vec<(u32, u64)> = vertices[a]
                            .ids
                            .iter()
                            .chain(vertices[b].ids.iter())
                            .copied()
                            .collect();
                        pair_ids.sort_unstable();
                        let replace = match &best {
                            None => true,
                            Some((bb, _, _, bids)) => bic > *bb || (bic == *bb && pair_ids < *bids),
                        };
                        if replace {
                            best = Some((bic, a, b, pair_ids));
                        }
                    }
                }
            }
            let Some((_, a, b, ids)) = best else {
                break; // no mergeable pair left
            };
            let vb = vertices.remove(b);
            let va = &mut vertices[a];
            va.members.extend(vb.members);
            va.members.sort_unstable();
            va.leaf_labels.extend(vb.leaf_labels);
            va.leaf_labels.sort_unstable();
            va.ids = ids;
        }
        self.warnings.extend(warnings);

        // relabel classes by their smallest leaf label
        vertices.sort_by_key(|v| v.leaf_labels[0]);
        let mut final_of_leaf = vec![0usize; self.n_leaves];
        for (class, v) in vertices.iter().enumerate() {
            for &leaf in &v.leaf_labels {
                final_of_leaf[leaf] = class;
            }
        }
        self.n_classes = vertices.len();
        self.final_of_leaf = final_of_leaf;
        Ok(self.labels())
    }
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

/// Round-trippable structural description of a tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStructure {
    pub nodes: Vec<NodeInfo>,
    /// Parent-child edges as (depth, index) pairs.
    pub edges: Vec<((u32, u64), (u32, u64))>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeInfo {
    pub depth: u32,
    pub index: u64,
    pub n_members: usize,
    pub k_hat: Option<usize>,
    pub terminal: bool,
    pub leaf_label: Option<usize>,
    pub final_label: Option<usize>,
}

fn collect_structure(node: &FcubtNode, tree: &FcubtTree, out: &mut TreeStructure) {
    out.nodes.push(NodeInfo {
        depth: node.depth,
        index: node.index,
        n_members: node.members.len(),
        k_hat: node.k_hat,
        terminal: node.is_terminal(),
        leaf_label: node.leaf_label,
        final_label: node.leaf_label.map(|l| tree.final_of_leaf[l]),
    });
    if let Some(kids) = node.children.as_ref() {
        out.edges
            .push(((node.depth, node.index), (kids.0.depth, kids.0.index)));
        out.edges
            .push(((node.depth, node.index), (kids.1.depth, kids.1.index)));
        collect_structure(&kids.0, tree, out);
        collect_structure(&kids.1, tree, out);
    }
}

impl FcubtTree {
    pub fn structure(&self) -> TreeStructure {
        let mut out = TreeStructure {
            nodes: Vec::new(),
            edges: Vec::new(),
        };
        collect_structure(&self.root, self, &mut out);
        out
    }

    /// JSON export of the tree structure.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.structure()).expect("serializable structure")
    }

    /// Graphviz dot export.
    pub fn to_dot(&self) -> String {
        let s = self.structure();
        let mut out = String::from("digraph fcubt {\n  node [shape=box];\n");
        for n in &s.nodes {
            let mut label = format!("({}, {})\\nn = {}", n.depth, n.index, n.n_members);
            if let Some(k) = n.k_hat {
                label.push_str(&format!("\\nK = {k}"));
            }
            if let Some(l) = n.final_label {
                label.push_str(&format!("\\nclass {l}"));
            }
            out.push_str(&format!(
                "  \"{}_{}\" [label=\"{label}\"];\n",
                n.depth, n.index
            ));
        }
        for ((pd, pi), (cd, ci)) in &s.edges {
            out.push_str(&format!("  \"{pd}_{pi}\" -> \"{cd}_{ci}\";\n"));
        }
        out.push_str("}\n");
        out
    }
}

/// Parse a JSON tree structure written by [`FcubtTree::to_json`].
pub fn structure_from_json(text: &str) -> Result<TreeStructure> {
    serde_json::from_str(text).map_err(|e| FdError::Parse(format!("tree structure: {e}")))
}

/// Adjusted Rand index between two labelings of the same observations.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must cover the same sample");
    let n = a.len();
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0usize; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let choose2 = |x: usize| (x * x.saturating_sub(1)) as f64 / 2.0;
    let sum_ij: f64 = table.iter().flatten().map(|&c| choose2(c)).sum();
    let sum_a: f64 = table.iter().map(|row| choose2(row.iter().sum())).sum();
    let sum_b: f64 = (0..kb)
        .map(|j| choose2(table.iter().map(|row| row[j]).sum()))
        .sum();
    let total = choose2(n);
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    if (max - expected).abs() < 1e-12 {
        return 1.0; // both partitions trivial
    }
    (sum_ij - expected) / (max - expected)
}
