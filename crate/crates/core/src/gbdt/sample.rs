use rand::seq::index;

use crate::error::{Error, Result};
use crate::rng::{SeedStreams, SAMPLING};

/// Keeps every minority-class index and a uniform sample (without
/// replacement) of `⌈ratio × n_minority⌉` majority-class indices.
///
/// Returned indices are sorted. When both classes have the same size the
/// positives are treated as the minority.
pub fn undersample_majority(labels: &[bool], ratio: f64, seed: u64) -> Result<Vec<usize>> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidParameter(format!("ratio {ratio} must be positive")));
    }
    let (pos, neg): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| labels[i]);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::DegenerateLabels(format!(
            "{} positive and {} negative labels",
            pos.len(),
            neg.len()
        )));
    }
    let (minority, majority) = if pos.len() <= neg.len() { (pos, neg) } else { (neg, pos) };
    let want = ((ratio * minority.len() as f64).ceil() as usize).min(majority.len());
    let mut rng = SeedStreams::new(seed).rng(SAMPLING);
    let picked = index::sample(&mut rng, majority.len(), want);
    let mut out = minority;
    out.extend(picked.into_iter().map(|k| majority[k]));
    out.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(neg: usize, pos: usize) -> Vec<bool> {
        // Interleave so positives are not a contiguous block.
        let mut v = vec![false; neg + pos];
        let step = (neg + pos) / pos.max(1);
        let mut placed = 0;
        let mut i = 0;
        while placed < pos {
            let n = v.len();
            if !v[i % n] {
                v[i % n] = true;
                placed += 1;
            }
            i += step.max(1);
        }
        v
    }

    #[test]
    fn paper_imbalance_regime_balances() {
        let y = labels(1000, 52);
        let idx = undersample_majority(&y, 1.0, 3).unwrap();
        let pos = idx.iter().filter(|&&i| y[i]).count();
        assert_eq!((pos, idx.len() - pos), (52, 52));
    }

    #[test]
    fn balanced_input_is_kept_whole() {
        let y = labels(10, 10);
        let idx = undersample_majority(&y, 1.0, 0).unwrap();
        assert_eq!(idx, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn deterministic_per_seed() {
        let y = labels(500, 40);
        let a = undersample_majority(&y, 1.5, 11).unwrap();
        assert_eq!(a, undersample_majority(&y, 1.5, 11).unwrap());
        assert_ne!(a, undersample_majority(&y, 1.5, 12).unwrap());
    }

    #[test]
    fn single_class_is_degenerate() {
        assert!(matches!(
            undersample_majority(&[true, true], 1.0, 0),
            Err(Error::DegenerateLabels(_))
        ));
        assert!(undersample_majority(&[true, false], 0.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn ratio_within_one_example(neg in 1usize..400, pos in 1usize..60, ratio in 0.1f64..5.0, seed: u64) {
            let y = labels(neg, pos);
            let idx = undersample_majority(&y, ratio, seed).unwrap();
            let n_min = pos.min(neg);
            let n_maj = idx.len() - n_min;
            let target = (ratio * n_min as f64).min(pos.max(neg) as f64);
            prop_assert!((n_maj as f64 - target).abs() <= 1.0);
            prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
