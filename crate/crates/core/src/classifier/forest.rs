//! Bagged CART trees with Gini impurity and majority voting.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ClassifierError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means `ceil(sqrt(k))`.
    pub max_features: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_features: None,
            max_depth: None,
            min_samples_split: 2,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A single tree stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    fn max_feature_index(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    classes: Vec<String>,
    n_features: usize,
    trees: Vec<DecisionTree>,
    params: ForestParams,
    seed: u64,
    /// Trained on a single class; always predicts `classes[0]`.
    degenerate: bool,
}

impl ForestModel {
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Number of trees voting for each class, indexed like `classes()`.
    pub fn votes(&self, x: &[f64]) -> Vec<usize> {
        let mut votes = vec![0; self.classes.len()];
        if self.degenerate {
            votes[0] = 1;
            return votes;
        }
        for tree in &self.trees {
            votes[tree.predict(x)] += 1;
        }
        votes
    }

    /// Majority class and its vote fraction. Ties go to the lowest class index.
    pub fn predict(&self, x: &[f64]) -> (usize, f64) {
        let votes = self.votes(x);
        let total: usize = votes.iter().sum();
        let (best, count) =
            votes
                .iter()
                .enumerate()
                .fold((0, 0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        (best, count as f64 / total.max(1) as f64)
    }

    pub fn predict_label(&self, x: &[f64]) -> &str {
        &self.classes[self.predict(x).0]
    }

    /// Checks that every split refers to a feature below `k`.
    pub fn check_features(&self, k: usize) -> Result<(), ClassifierError> {
        match self
            .trees
            .iter()
            .filter_map(DecisionTree::max_feature_index)
            .max()
        {
            Some(f) if f >= k => Err(ClassifierError::FeatureOutOfRange { feature: f, k }),
            _ if self.n_features != k => Err(ClassifierError::FeatureOutOfRange {
                feature: self.n_features,
                k,
            }),
            _ => Ok(()),
        }
    }
}

/// Train a forest. Deterministic for a given `seed`.
pub fn train_forest<L: AsRef<str>>(
    x: &[Vec<f64>],
    y: &[L],
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel, ClassifierError> {
    if x.is_empty() {
        return Err(ClassifierError::EmptyCorpus);
    }
    if x.len() != y.len() {
        return Err(ClassifierError::LengthMismatch {
            rows: x.len(),
            labels: y.len(),
        });
    }
    let n_features = x[0].len();
    if let Some(row) = x.iter().position(|r| r.len() != n_features) {
        return Err(ClassifierError::RaggedRow {
            row,
            expected: n_features,
            found: x[row].len(),
        });
    }
    let classes: Vec<String> = y
        .iter()
        .map(|l| l.as_ref().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if classes.len() == 1 {
        log::warn!("single training class {:?}; model is constant", classes[0]);
        return Ok(ForestModel {
            classes,
            n_features,
            trees: Vec::new(),
            params: params.clone(),
            seed,
            degenerate: true,
        });
    }
    let targets: Vec<usize> = y
        .iter()
        .map(|l| {
            classes
                .binary_search_by(|c| c.as_str().cmp(l.as_ref()))
                .unwrap()
        })
        .collect();

    let max_features = params
        .max_features
        .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize)
        .clamp(1, n_features.max(1));

    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let n_trees = params.n_trees.max(1);
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        let mut rng = ChaCha8Rng::seed_from_u64(master.gen());
        let sample: Vec<usize> = if params.bootstrap {
            (0..x.len()).map(|_| rng.gen_range(0..x.len())).collect()
        } else {
            (0..x.len()).collect()
        };
        let mut builder = TreeBuilder {
            x,
            y: &targets,
            n_classes: classes.len(),
            max_features,
            max_depth: params.max_depth,
            min_samples_split: params.min_samples_split.max(2),
            rng: &mut rng,
            nodes: Vec::new(),
        };
        builder.grow(sample, 0);
        trees.push(DecisionTree {
            nodes: builder.nodes,
        });
    }
    Ok(ForestModel {
        classes,
        n_features,
        trees,
        params: params.clone(),
        seed,
        degenerate: false,
    })
}

struct TreeBuilder<'a, R: Rng> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    max_features: usize,
    max_depth: Option<usize>,
    min_samples_split: usize,
    rng: &'a mut R,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

impl<R: Rng> TreeBuilder<'_, R> {
    fn counts(&self, sample: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &i in sample {
            counts[self.y[i]] += 1;
        }
        counts
    }

    /// Returns the index of the node created for `sample`.
    fn grow(&mut self, sample: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&sample);
        let majority = counts
            .iter()
            .enumerate()
            .fold((0, 0), |acc, (c, &n)| if n > acc.1 { (c, n) } else { acc })
            .0;
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let at_depth = self.max_depth.is_some_and(|d| depth >= d);
        if pure || at_depth || sample.len() < self.min_samples_split {
            return self.leaf(majority);
        }
        let parent = gini(&counts, sample.len());
        let Some(split) = self.find_split(&sample, parent) else {
            return self.leaf(majority);
        };
        let (left, right): (Vec<usize>, Vec<usize>) = sample
            .into_iter()
            .partition(|&i| self.x[i][split.feature] <= split.threshold);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { class: majority });
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: l,
            right: r,
        };
        id
    }

    fn leaf(&mut self, class: usize) -> usize {
        self.nodes.push(Node::Leaf { class });
        self.nodes.len() - 1
    }

    /// Tries `max_features` random features; if none of them improves on the
    /// parent impurity, keeps drawing from the remaining features.
    fn find_split(&mut self, sample: &[usize], parent: f64) -> Option<BestSplit> {
        let n_features = self.x[0].len();
        let mut order: Vec<usize> = (0..n_features).collect();
        order.shuffle(self.rng);
        let mut best: Option<BestSplit> = None;
        for (tried, &f) in order.iter().enumerate() {
            if tried >= self.max_features && best.is_some() {
                break;
            }
            if let Some(s) = self.best_on_feature(sample, f) {
                if s.impurity < parent - 1e-12
                    && best.as_ref().is_none_or(|b| s.impurity < b.impurity)
                {
                    best = Some(s);
                }
            }
        }
        best
    }

    fn best_on_feature(&self, sample: &[usize], feature: usize) -> Option<BestSplit> {
        let mut sorted: Vec<usize> = sample.to_vec();
        sorted.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]));
        let total = sorted.len();
        let mut left = vec![0; self.n_classes];
        let mut right = self.counts(&sorted);
        let mut best: Option<BestSplit> = None;
        for i in 0..total - 1 {
            let c = self.y[sorted[i]];
            left[c] += 1;
            right[c] -= 1;
            let here = self.x[sorted[i]][feature];
            let next = self.x[sorted[i + 1]][feature];
            if here == next {
                continue;
            }
            let nl = i + 1;
            let nr = total - nl;
            let impurity =
                (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / total as f64;
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                best = Some(BestSplit {
                    feature,
                    threshold: here + (next - here) / 2.0,
                    impurity,
                });
            }
        }
        best
    }
}
