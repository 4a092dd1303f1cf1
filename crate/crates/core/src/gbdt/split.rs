//! Exact split search over numeric thresholds and categorical level subsets.
//!
//! Candidates are ranked by the second-order deviance reduction
//! `½ (G_L²/H_L + G_R²/H_R − G²/H)`, where `G` sums the pseudo-residuals and
//! `H` the Hessian weights of the rows on each side. Every sum is taken over
//! rows in a canonical order (sorted by value, then residual, then weight) so
//! the result depends only on the multiset of rows, not on their order.

use super::dataset::{Dataset, FeatureKind};
use super::tree::SplitRule;

#[derive(Debug, Clone, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub rule: SplitRule,
    pub missing_left: bool,
    pub gain: f64,
    pub n_left: usize,
    pub n_right: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Totals {
    pub g: f64,
    pub h: f64,
    pub n: usize,
}

pub(crate) struct SplitContext<'a> {
    pub data: &'a Dataset,
    pub grad: &'a [f64],
    pub hess: &'a [f64],
    pub min_leaf: usize,
    /// Per-feature candidate thresholds when histogram search is enabled.
    pub edges: Option<&'a [Vec<f64>]>,
}

#[inline]
fn score(g: f64, h: f64) -> f64 {
    if h > 0.0 {
        g * g / h
    } else {
        0.0
    }
}

/// Order-independent sums of residuals and weights over `rows`.
pub(crate) fn canonical_totals(grad: &[f64], hess: &[f64], rows: &[usize]) -> Totals {
    let mut pairs: Vec<(f64, f64)> = rows.iter().map(|&r| (grad[r], hess[r])).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let (g, h) = pairs.iter().fold((0.0, 0.0), |(g, h), p| (g + p.0, h + p.1));
    Totals { g, h, n: rows.len() }
}

/// A threshold strictly above `a` and at most `b`, as close to the midpoint
/// as floating point allows.
pub fn midpoint(a: f64, b: f64) -> f64 {
    let m = (a + b) / 2.0;
    let m = if m.is_finite() { m } else { a / 2.0 + b / 2.0 };
    if m <= a || m > b {
        b
    } else {
        m
    }
}

struct Best {
    gain: f64,
    rule: Option<SplitRule>,
    missing_left: bool,
    n_left: usize,
}

impl Best {
    fn new() -> Self {
        Self {
            gain: 0.0,
            rule: None,
            missing_left: true,
            n_left: 0,
        }
    }

    fn offer(&mut self, gain: f64, rule: impl FnOnce() -> SplitRule, missing_left: bool, n_left: usize) {
        if gain > self.gain {
            self.gain = gain;
            self.rule = Some(rule());
            self.missing_left = missing_left;
            self.n_left = n_left;
        }
    }
}

impl SplitContext<'_> {
    fn gain(&self, parent: Totals, gl: f64, hl: f64) -> f64 {
        let gr = parent.g - gl;
        let hr = parent.h - hl;
        0.5 * (score(gl, hl) + score(gr, hr) - score(parent.g, parent.h))
    }

    fn leaf_ok(&self, nl: usize, n: usize) -> bool {
        nl >= self.min_leaf.max(1) && n - nl >= self.min_leaf.max(1)
    }

    /// Tries both routings for missing rows; with none present, missing
    /// values are sent to the larger child.
    #[allow(clippy::too_many_arguments)]
    fn offer_both(
        &self,
        best: &mut Best,
        parent: Totals,
        miss: (f64, f64, usize),
        gl: f64,
        hl: f64,
        nl: usize,
        rule: &dyn Fn() -> SplitRule,
    ) {
        let (gm, hm, nm) = miss;
        if nm == 0 {
            if self.leaf_ok(nl, parent.n) {
                let g = self.gain(parent, gl, hl);
                best.offer(g, rule, 2 * nl >= parent.n, nl);
            }
            return;
        }
        for missing_left in [true, false] {
            let (gl, hl, nl) = if missing_left {
                (gl + gm, hl + hm, nl + nm)
            } else {
                (gl, hl, nl)
            };
            if self.leaf_ok(nl, parent.n) {
                let g = self.gain(parent, gl, hl);
                best.offer(g, rule, missing_left, nl);
            }
        }
    }

    fn missing_sums(&self, rows: &[usize], feature: usize) -> (f64, f64, usize) {
        let col = self.data.column(feature);
        let miss: Vec<usize> = rows.iter().copied().filter(|&r| col[r].is_nan()).collect();
        let t = canonical_totals(self.grad, self.hess, &miss);
        (t.g, t.h, t.n)
    }

    fn numeric(&self, rows: &[usize], feature: usize, parent: Totals) -> Best {
        let col = self.data.column(feature);
        let mut entries: Vec<(f64, f64, f64)> = rows
            .iter()
            .filter(|&&r| !col[r].is_nan())
            .map(|&r| (col[r], self.grad[r], self.hess[r]))
            .collect();
        entries.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(a.1.total_cmp(&b.1))
                .then(a.2.total_cmp(&b.2))
        });
        let miss = self.missing_sums(rows, feature);
        let edges = self.edges.map(|e| e[feature].as_slice());
        let mut edge_pos = 0;
        let mut best = Best::new();
        let (mut gl, mut hl) = (0.0, 0.0);
        for i in 0..entries.len().saturating_sub(1) {
            gl += entries[i].1;
            hl += entries[i].2;
            let (lo, hi) = (entries[i].0, entries[i + 1].0);
            if lo == hi {
                continue;
            }
            let threshold = match edges {
                None => midpoint(lo, hi),
                Some(edges) => {
                    while edge_pos < edges.len() && edges[edge_pos] <= lo {
                        edge_pos += 1;
                    }
                    match edges.get(edge_pos) {
                        Some(&e) if e <= hi => e,
                        _ => continue,
                    }
                }
            };
            let rule = move || SplitRule::Numeric { threshold };
            self.offer_both(&mut best, parent, miss, gl, hl, i + 1, &rule);
        }
        best
    }

    fn categorical(&self, rows: &[usize], feature: usize, levels: u32, parent: Totals) -> Best {
        let col = self.data.column(feature);
        let mut entries: Vec<(u32, f64, f64)> = rows
            .iter()
            .filter(|&&r| !col[r].is_nan())
            .map(|&r| (col[r] as u32, self.grad[r], self.hess[r]))
            .collect();
        entries.sort_by(|a, b| {
            a.0.cmp(&b.0)
                .then(a.1.total_cmp(&b.1))
                .then(a.2.total_cmp(&b.2))
        });
        let mut sums = vec![(0.0f64, 0.0f64, 0usize); levels as usize];
        for (code, g, h) in entries {
            let s = &mut sums[code as usize];
            s.0 += g;
            s.1 += h;
            s.2 += 1;
        }
        let mut present: Vec<u32> = (0..levels).filter(|&l| sums[l as usize].2 > 0).collect();
        let ratio = |l: u32| {
            let (g, h, _) = sums[l as usize];
            g / h
        };
        present.sort_by(|&a, &b| ratio(a).total_cmp(&ratio(b)).then(a.cmp(&b)));

        let miss = self.missing_sums(rows, feature);
        let mut best = Best::new();
        let (mut gl, mut hl, mut nl) = (0.0, 0.0, 0usize);
        for k in 1..present.len() {
            let (g, h, n) = sums[present[k - 1] as usize];
            gl += g;
            hl += h;
            nl += n;
            let prefix = &present[..k];
            let rule = || {
                let mut left_levels = prefix.to_vec();
                left_levels.sort_unstable();
                SplitRule::Categorical { left_levels }
            };
            self.offer_both(&mut best, parent, miss, gl, hl, nl, &rule);
        }
        best
    }

    fn best_for_feature(&self, rows: &[usize], feature: usize, parent: Totals) -> Option<SplitCandidate> {
        let best = match self.data.kinds()[feature] {
            FeatureKind::Numeric => self.numeric(rows, feature, parent),
            FeatureKind::Categorical { levels } => self.categorical(rows, feature, levels, parent),
        };
        best.rule.map(|rule| SplitCandidate {
            feature,
            rule,
            missing_left: best.missing_left,
            gain: best.gain,
            n_left: best.n_left,
            n_right: parent.n - best.n_left,
        })
    }

    /// Best split of `rows`, or `None` when no candidate has positive gain
    /// while leaving `min_leaf` rows on each side. Ties go to the lower
    /// feature index, then the lower threshold.
    pub fn best_split(&self, rows: &[usize], parent: Totals) -> Option<SplitCandidate> {
        let per_feature = self.per_feature(rows, parent);
        let mut best: Option<SplitCandidate> = None;
        for c in per_feature.into_iter().flatten() {
            if best.as_ref().is_none_or(|b| c.gain > b.gain) {
                best = Some(c);
            }
        }
        best
    }

    #[cfg(feature = "parallel")]
    fn per_feature(&self, rows: &[usize], parent: Totals) -> Vec<Option<SplitCandidate>> {
        use rayon::prelude::*;
        (0..self.data.n_features())
            .into_par_iter()
            .map(|f| self.best_for_feature(rows, f, parent))
            .collect()
    }

    #[cfg(not(feature = "parallel"))]
    fn per_feature(&self, rows: &[usize], parent: Totals) -> Vec<Option<SplitCandidate>> {
        (0..self.data.n_features())
            .map(|f| self.best_for_feature(rows, f, parent))
            .collect()
    }
}

/// Equal-frequency candidate thresholds for one numeric column, at most
/// `max_bins - 1` of them.
pub(crate) fn histogram_edges(column: &[f64], rows: &[usize], max_bins: usize) -> Vec<f64> {
    let mut v: Vec<f64> = rows.iter().map(|&r| column[r]).filter(|x| !x.is_nan()).collect();
    v.sort_by(f64::total_cmp);
    let mut edges = Vec::new();
    if v.len() < 2 || max_bins < 2 {
        return edges;
    }
    for k in 1..max_bins {
        let mut j = (k * v.len() / max_bins).max(1);
        while j < v.len() && v[j] == v[j - 1] {
            j += 1;
        }
        if j >= v.len() {
            break;
        }
        let e = midpoint(v[j - 1], v[j]);
        if edges.last().is_none_or(|&last| e > last) {
            edges.push(e);
        }
    }
    edges
}
