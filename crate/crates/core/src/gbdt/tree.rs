use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitRule {
    /// `x < threshold` goes left.
    Numeric { threshold: f64 },
    /// Members of `left_levels` go left; any other level goes right.
    Categorical { left_levels: Vec<u32> },
}

impl SplitRule {
    /// `None` for a missing value.
    pub fn goes_left(&self, x: f64) -> Option<bool> {
        if x.is_nan() {
            return None;
        }
        Some(match self {
            SplitRule::Numeric { threshold } => x < *threshold,
            SplitRule::Categorical { left_levels } => left_levels.binary_search(&(x as u32)).is_ok(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        rule: SplitRule,
        missing_left: bool,
        left: usize,
        right: usize,
        /// Second-order deviance reduction achieved by this split.
        gain: f64,
        cover: usize,
    },
    Leaf {
        value: f64,
    },
}

/// A regression tree stored as a flat arena; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    rule,
                    missing_left,
                    left,
                    right,
                    ..
                } => {
                    let go_left = rule.goes_left(row[*feature]).unwrap_or(*missing_left);
                    i = if go_left { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump() -> Tree {
        Tree {
            nodes: vec![
                Node::Split {
                    feature: 0,
                    rule: SplitRule::Numeric { threshold: 0.5 },
                    missing_left: false,
                    left: 1,
                    right: 2,
                    gain: 1.0,
                    cover: 2,
                },
                Node::Leaf { value: -1.0 },
                Node::Leaf { value: 1.0 },
            ],
        }
    }

    #[test]
    fn routes_numeric_and_missing() {
        let t = stump();
        assert_eq!(t.predict(&[0.0]), -1.0);
        assert_eq!(t.predict(&[0.5]), 1.0);
        assert_eq!(t.predict(&[f64::NAN]), 1.0);
        assert_eq!(t.depth(), 1);
        assert_eq!(t.n_leaves(), 2);
    }

    #[test]
    fn categorical_membership() {
        let rule = SplitRule::Categorical {
            left_levels: vec![0, 2],
        };
        assert_eq!(rule.goes_left(2.0), Some(true));
        assert_eq!(rule.goes_left(1.0), Some(false));
        assert_eq!(rule.goes_left(7.0), Some(false));
        assert_eq!(rule.goes_left(f64::NAN), None);
    }
}
