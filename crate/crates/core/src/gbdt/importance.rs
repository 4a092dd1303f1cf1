use super::boost::BoostedModel;
use super::tree::Node;

/// Per-feature share of the total split gain across the ensemble, ranked
/// high to low (ties by feature index). Empty when no split was ever made.
pub fn feature_importance(model: &BoostedModel) -> Vec<(String, f64)> {
    let mut gain = vec![0.0; model.feature_names.len()];
    for tree in &model.trees {
        for node in &tree.nodes {
            if let Node::Split { feature, gain: g, .. } = node {
                gain[*feature] += g;
            }
        }
    }
    let total: f64 = gain.iter().sum();
    if total <= 0.0 {
        return Vec::new();
    }
    let mut ranked: Vec<(usize, f64)> = gain.into_iter().map(|g| g / total).enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
        .into_iter()
        .map(|(i, v)| (model.feature_names[i].clone(), v))
        .collect()
}
