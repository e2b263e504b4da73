//! Binary decision trees: Gini-split classification trees for the forest
//! and squared-error regression trees for boosting.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::matrix::FeatureMatrix;
use crate::rng::Rng;

/// A tree node; rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        leaf: Vec<f64>,
    },
}

impl Node {
    pub fn evaluate(&self, x: &[f64]) -> &[f64] {
        let mut node = self;
        loop {
            match node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
                Node::Leaf { leaf } => return leaf,
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
            Node::Leaf { .. } => 0,
        }
    }

    /// Largest feature index used by any split.
    pub fn max_feature(&self) -> Option<usize> {
        match self {
            Node::Split { feature, left, right, .. } => {
                Some((*feature).max(left.max_feature().unwrap_or(0)).max(right.max_feature().unwrap_or(0)))
            }
            Node::Leaf { .. } => None,
        }
    }
}

pub(crate) struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features examined per node; `None` examines all of them.
    pub max_features: Option<usize>,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let mid = a + (b - a) / 2.0;
    if mid < b {
        mid
    } else {
        a
    }
}

fn gini(counts: &[f64], n: f64) -> f64 {
    1.0 - counts.iter().map(|c| (c / n).powi(2)).sum::<f64>()
}

struct Candidate {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn candidate_features(dim: usize, params: &GrowParams, rng: &mut Rng) -> Vec<usize> {
    match params.max_features {
        Some(m) if m < dim => {
            let mut picked = index::sample(rng, dim, m).into_vec();
            picked.sort_unstable();
            picked
        }
        _ => (0..dim).collect(),
    }
}

fn sorted_by_feature(data: &FeatureMatrix, rows: &[usize], f: usize) -> Vec<usize> {
    let mut order = rows.to_vec();
    order.sort_by(|&a, &b| data.row(a)[f].total_cmp(&data.row(b)[f]));
    order
}

fn partition(data: &FeatureMatrix, rows: &[usize], feature: usize, threshold: f64) -> (Vec<usize>, Vec<usize>) {
    rows.iter().partition(|&&i| data.row(i)[feature] <= threshold)
}

/// Grow a classification tree on `rows` (repeats allowed, for bootstrap
/// samples). Leaves hold class proportions.
pub(crate) fn grow_classifier(
    data: &FeatureMatrix,
    rows: &[usize],
    depth: usize,
    params: &GrowParams,
    rng: &mut Rng,
) -> Node {
    let k = data.n_classes();
    let mut counts = vec![0.0; k];
    for &i in rows {
        counts[data.labels()[i]] += 1.0;
    }
    let n = rows.len() as f64;
    let leaf = || Node::Leaf {
        leaf: counts.iter().map(|c| c / n).collect(),
    };
    let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
    if pure || params.max_depth.is_some_and(|d| depth >= d) || rows.len() < 2 * params.min_leaf {
        return leaf();
    }

    let mut best: Option<Candidate> = None;
    for f in candidate_features(data.dim(), params, rng) {
        let order = sorted_by_feature(data, rows, f);
        let mut left = vec![0.0; k];
        let mut right = counts.clone();
        for split in 1..order.len() {
            let y = data.labels()[order[split - 1]];
            left[y] += 1.0;
            right[y] -= 1.0;
            let (a, b) = (data.row(order[split - 1])[f], data.row(order[split])[f]);
            if a == b || split < params.min_leaf || order.len() - split < params.min_leaf {
                continue;
            }
            let (nl, nr) = (split as f64, (order.len() - split) as f64);
            let impurity = (nl * gini(&left, nl) + nr * gini(&right, nr)) / n;
            if best.as_ref().is_none_or(|c| impurity < c.impurity) {
                best = Some(Candidate {
                    feature: f,
                    threshold: midpoint(a, b),
                    impurity,
                });
            }
        }
    }
    let Some(best) = best else {
        return leaf();
    };
    let (l, r) = partition(data, rows, best.feature, best.threshold);
    Node::Split {
        feature: best.feature,
        threshold: best.threshold,
        left: Box::new(grow_classifier(data, &l, depth + 1, params, rng)),
        right: Box::new(grow_classifier(data, &r, depth + 1, params, rng)),
    }
}

/// Grow a least-squares regression tree fitting `targets` (indexed like the
/// rows of `data`). Leaves hold the mean target as a one-element vector.
pub(crate) fn grow_regressor(
    data: &FeatureMatrix,
    targets: &[f64],
    rows: &[usize],
    depth: usize,
    max_depth: usize,
) -> Node {
    let n = rows.len() as f64;
    let sum: f64 = rows.iter().map(|&i| targets[i]).sum();
    let sum_sq: f64 = rows.iter().map(|&i| targets[i] * targets[i]).sum();
    let leaf = Node::Leaf { leaf: vec![sum / n] };
    let sse = sum_sq - sum * sum / n;
    if depth >= max_depth || rows.len() < 2 || sse <= 1e-12 {
        return leaf;
    }

    let mut best: Option<Candidate> = None;
    for f in 0..data.dim() {
        let order = sorted_by_feature(data, rows, f);
        let (mut ls, mut lq) = (0.0, 0.0);
        for split in 1..order.len() {
            let t = targets[order[split - 1]];
            ls += t;
            lq += t * t;
            let (a, b) = (data.row(order[split - 1])[f], data.row(order[split])[f]);
            if a == b {
                continue;
            }
            let (nl, nr) = (split as f64, n - split as f64);
            let (rs, rq) = (sum - ls, sum_sq - lq);
            let impurity = (lq - ls * ls / nl) + (rq - rs * rs / nr);
            if best.as_ref().is_none_or(|c| impurity < c.impurity) {
                best = Some(Candidate {
                    feature: f,
                    threshold: midpoint(a, b),
                    impurity,
                });
            }
        }
    }
    match best {
        Some(best) if best.impurity < sse - 1e-12 => {
            let (l, r) = partition(data, rows, best.feature, best.threshold);
            Node::Split {
                feature: best.feature,
                threshold: best.threshold,
                left: Box::new(grow_regressor(data, targets, &l, depth + 1, max_depth)),
                right: Box::new(grow_regressor(data, targets, &r, depth + 1, max_depth)),
            }
        }
        _ => leaf,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn xor() -> FeatureMatrix {
        FeatureMatrix::new(
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
            vec![0, 1, 1, 0],
            vec!["a".into(), "b".into()],
        )
        .unwrap()
    }

    #[test]
    fn classifier_memorizes_xor() {
        let data = xor();
        let params = GrowParams {
            max_depth: None,
            min_leaf: 1,
            max_features: None,
        };
        let tree = grow_classifier(&data, &[0, 1, 2, 3], 0, &params, &mut seeded(0));
        for i in 0..4 {
            let p = tree.evaluate(data.row(i));
            assert_eq!(p[data.labels()[i]], 1.0);
        }
        assert_eq!(tree.depth(), 2);
    }

    #[test]
    fn depth_limit_yields_proportions() {
        let data = xor();
        let params = GrowParams {
            max_depth: Some(0),
            min_leaf: 1,
            max_features: None,
        };
        let tree = grow_classifier(&data, &[0, 1, 2, 3], 0, &params, &mut seeded(0));
        assert_eq!(tree, Node::Leaf { leaf: vec![0.5, 0.5] });
    }

    #[test]
    fn regressor_fits_step() {
        let data = FeatureMatrix::new(
            (0..6).map(|i| vec![i as f64]).collect(),
            vec![0; 6],
            vec!["a".into()],
        )
        .unwrap();
        let targets = [1.0, 1.0, 1.0, -2.0, -2.0, -2.0];
        let tree = grow_regressor(&data, &targets, &[0, 1, 2, 3, 4, 5], 0, 3);
        assert_eq!(tree.depth(), 1);
        assert_eq!(tree.evaluate(&[0.5]), [1.0]);
        assert_eq!(tree.evaluate(&[4.0]), [-2.0]);
    }

    #[test]
    fn nodes_serialize_as_nested_objects() {
        let node = Node::Split {
            feature: 1,
            threshold: 0.5,
            left: Box::new(Node::Leaf { leaf: vec![1.0, 0.0] }),
            right: Box::new(Node::Leaf { leaf: vec![0.0, 1.0] }),
        };
        let json = serde_json::to_string(&node).unwrap();
        assert_eq!(
            json,
            r#"{"feature":1,"threshold":0.5,"left":{"leaf":[1.0,0.0]},"right":{"leaf":[0.0,1.0]}}"#
        );
        assert_eq!(serde_json::from_str::<Node>(&json).unwrap(), node);
    }
}
