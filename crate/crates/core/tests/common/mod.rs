//! Reference implementations used as test oracles. They are written for
//! clarity and independence from the library, not speed.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random numeric dataset: a mix of continuous columns and low-cardinality
/// integer columns so repeated values occur.
pub fn random_dataset(seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_rows = rng.random_range(20..=200);
    let n_features = rng.random_range(1..=5);
    let discrete: Vec<Option<u32>> = (0..n_features)
        .map(|_| rng.random_bool(0.4).then(|| rng.random_range(2..8)))
        .collect();
    let weights: Vec<f64> = (0..n_features).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut rows = Vec::with_capacity(n_rows);
    let mut labels = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let row: Vec<f64> = discrete
            .iter()
            .map(|d| match d {
                Some(k) => rng.random_range(0..*k) as f64,
                None => rng.random_range(-10.0..10.0),
            })
            .collect();
        let z: f64 = row.iter().zip(&weights).map(|(x, w)| x * w / 5.0).sum();
        let p = 1.0 / (1.0 + (-z).exp());
        labels.push(rng.random_bool(p.clamp(0.05, 0.95)));
        rows.push(row);
    }
    if labels.iter().all(|&y| y) || labels.iter().all(|&y| !y) {
        labels[0] = !labels[0];
    }
    (rows, labels)
}

/// Second-order gain of a root split, up to a positive constant, as an exact
/// fraction `num / den`.
///
/// At the root every row has the same Hessian weight and the residuals are
/// `y − P/n`, so with `n·G_L = n·P_L − n_L·P` the gain is proportional to
/// `(n·P_L − n_L·P)² / n_L + (n·P_R − n_R·P)² / n_R`.
fn exact_gain(n: i128, pos: i128, n_left: i128, pos_left: i128) -> (i128, i128) {
    let n_right = n - n_left;
    let pos_right = pos - pos_left;
    let a = (n * pos_left - n_left * pos).pow(2);
    let b = (n * pos_right - n_right * pos).pow(2);
    (a * n_right + b * n_left, n_left * n_right)
}

fn cmp_frac(x: (i128, i128), y: (i128, i128)) -> std::cmp::Ordering {
    (x.0 * y.1).cmp(&(y.0 * x.1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSplit {
    pub feature: usize,
    /// Rows with `x < threshold` go left.
    pub threshold: f64,
    pub n_left: usize,
}

/// Every (feature, threshold) pair that attains the largest root gain, found
/// by partitioning the rows afresh for each midpoint candidate.
pub fn exhaustive_root_splits(rows: &[Vec<f64>], labels: &[bool], min_leaf: usize) -> Vec<OracleSplit> {
    let n = rows.len() as i128;
    let pos = labels.iter().filter(|&&y| y).count() as i128;
    let mut best: Option<(i128, i128)> = None;
    let mut winners = Vec::new();
    for f in 0..rows[0].len() {
        let mut values: Vec<f64> = rows.iter().map(|r| r[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let threshold = (w[0] + w[1]) / 2.0;
            let left: Vec<usize> = (0..rows.len()).filter(|&i| rows[i][f] < threshold).collect();
            let n_left = left.len();
            if n_left < min_leaf || rows.len() - n_left < min_leaf {
                continue;
            }
            let pos_left = left.iter().filter(|&&i| labels[i]).count() as i128;
            let g = exact_gain(n, pos, n_left as i128, pos_left);
            if g.0 == 0 {
                continue;
            }
            let split = OracleSplit {
                feature: f,
                threshold,
                n_left,
            };
            match best.map(|b| cmp_frac(g, b)) {
                None | Some(std::cmp::Ordering::Greater) => {
                    best = Some(g);
                    winners = vec![split];
                }
                Some(std::cmp::Ordering::Equal) => winners.push(split),
                Some(std::cmp::Ordering::Less) => {}
            }
        }
    }
    winners
}

/// Adaptive Simpson quadrature to absolute tolerance `eps`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    ) -> f64 {
        let m = (a + b) / 2.0;
        let (lm, rm) = ((a + m) / 2.0, (m + b) / 2.0);
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f((a + b) / 2.0));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), eps, 50)
}

/// Two-sided Student-t tail probability `P(|T| ≥ |t|)`.
///
/// With `x = √ν tan θ` the density becomes proportional to `cos^(ν−1) θ` on
/// `(−π/2, π/2)`, so the tail is a ratio of two integrals over a finite
/// interval with a smooth integrand.
pub fn t_two_sided_quadrature(t: f64, df: f64) -> f64 {
    let theta = (t.abs() / df.sqrt()).atan();
    let half_pi = std::f64::consts::FRAC_PI_2;
    let g = move |x: f64| x.cos().powf(df - 1.0);
    let tail = adaptive_simpson(&g, theta, half_pi, 1e-15);
    let total = adaptive_simpson(&g, 0.0, half_pi, 1e-15);
    tail / total
}

/// Welch statistic and Welch–Satterthwaite degrees of freedom from the
/// textbook formulas, with two-pass variances.
pub fn welch_closed_form(a: &[f64], b: &[f64]) -> (f64, f64) {
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
        (n, m, v)
    };
    let (na, ma, va) = stats(a);
    let (nb, mb, vb) = stats(b);
    let (qa, qb) = (va / na, vb / nb);
    let t = (ma - mb) / (qa + qb).sqrt();
    let df = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    (t, df)
}

/// 4-connected components of the `true` cells of a row-major grid, by
/// union-find. Each component is returned as its sorted `(col, row)` cells,
/// and the list is sorted.
pub fn union_find_components(selected: &[bool], n_cols: usize, n_rows: usize) -> Vec<Vec<(usize, usize)>> {
    let mut parent: Vec<usize> = (0..selected.len()).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for r in 0..n_rows {
        for c in 0..n_cols {
            let i = r * n_cols + c;
            if !selected[i] {
                continue;
            }
            for j in [(c + 1 < n_cols).then(|| i + 1), (r + 1 < n_rows).then(|| i + n_cols)]
                .into_iter()
                .flatten()
            {
                if selected[j] {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<(usize, usize)>> = Default::default();
    for i in (0..selected.len()).filter(|&i| selected[i]) {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push((i % n_cols, i / n_cols));
    }
    let mut out: Vec<Vec<(usize, usize)>> = groups
        .into_values()
        .map(|mut g| {
            g.sort_unstable();
            g
        })
        .collect();
    out.sort();
    out
}
