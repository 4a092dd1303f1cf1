use serde::{Deserialize, Serialize};

use super::special::student_t_two_sided;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub feature: String,
    pub t_value: f64,
    pub degrees_of_freedom: f64,
    pub p_value: f64,
    pub mean_under: f64,
    pub mean_over: f64,
    pub n_under: usize,
    pub n_over: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TTestVariant {
    #[default]
    Welch,
    Pooled,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - 1.0))
}

fn check_sample(x: &[f64], which: &str) -> Result<()> {
    if x.len() < 2 {
        return Err(Error::UndersizedSample(format!(
            "sample {which} has {} values, need at least 2",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("sample {which} has non-finite values")));
    }
    Ok(())
}

/// Welch's unequal-variance two-sample t-test, two-sided. The statistic is
/// signed as `mean(a) − mean(b)`; `a` fills the `*_under` fields.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    t_test(a, b, TTestVariant::Welch)
}

pub fn t_test(a: &[f64], b: &[f64], variant: TTestVariant) -> Result<TTestResult> {
    check_sample(a, "a")?;
    check_sample(b, "b")?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let diff = ma - mb;

    let (se2, df) = match variant {
        TTestVariant::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            let se2 = qa + qb;
            let denom = qa * qa / (na - 1.0) + qb * qb / (nb - 1.0);
            let df = if denom > 0.0 { se2 * se2 / denom } else { na + nb - 2.0 };
            (se2, df)
        }
        TTestVariant::Pooled => {
            let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
            (pooled * (1.0 / na + 1.0 / nb), na + nb - 2.0)
        }
    };

    let (t, p) = if se2 > 0.0 {
        let t = diff / se2.sqrt();
        (t, student_t_two_sided(t, df))
    } else if diff == 0.0 {
        (0.0, 1.0)
    } else {
        (diff.signum() * f64::INFINITY, 0.0)
    };

    Ok(TTestResult {
        feature: String::new(),
        t_value: t,
        degrees_of_freedom: df,
        p_value: p,
        mean_under: ma,
        mean_over: mb,
        n_under: a.len(),
        n_over: b.len(),
    })
}
