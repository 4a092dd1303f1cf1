use crate::error::{Error, Result};

/// Simpson diversity `1 − Σ p²`: the chance that two residents drawn at
/// random belong to different groups.
pub fn race_diversity(shares: &[f64]) -> Result<f64> {
    if shares.is_empty() {
        return Err(Error::InvalidShares("no shares given".into()));
    }
    if let Some(bad) = shares.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidShares(format!("share {bad} is not a non-negative number")));
    }
    let total: f64 = shares.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidShares(format!("shares sum to {total}, not 1")));
    }
    Ok(1.0 - shares.iter().map(|p| p * p).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_examples() {
        assert_eq!(race_diversity(&[1.0]).unwrap(), 0.0);
        assert_eq!(race_diversity(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(race_diversity(&[0.5, 0.5]).unwrap(), 0.5);
        assert_eq!(race_diversity(&[0.25; 4]).unwrap(), 0.75);
    }

    #[test]
    fn invalid_shares() {
        assert!(race_diversity(&[0.5, 0.4]).is_err());
        assert!(race_diversity(&[1.2, -0.2]).is_err());
        assert!(race_diversity(&[]).is_err());
    }
}
