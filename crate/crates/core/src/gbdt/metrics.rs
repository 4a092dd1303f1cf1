use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ConfusionMatrix {
    /// Scores at or above `threshold` count as positive predictions.
    pub fn from_scores(scores: &[f64], labels: &[bool], threshold: f64) -> Self {
        let mut m = Self::default();
        for (&s, &y) in scores.iter().zip(labels) {
            match (s >= threshold, y) {
                (true, true) => m.tp += 1,
                (true, false) => m.fp += 1,
                (false, false) => m.tn += 1,
                (false, true) => m.fn_ += 1,
            }
        }
        m
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn tpr(&self) -> f64 {
        self.recall()
    }

    pub fn fpr(&self) -> f64 {
        ratio(self.fp, self.fp + self.tn)
    }

    pub fn tnr(&self) -> f64 {
        ratio(self.tn, self.fp + self.tn)
    }

    pub fn balanced_accuracy(&self) -> f64 {
        0.5 * (self.tpr() + self.tnr())
    }

    pub fn f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }

    pub fn youden_j(&self) -> f64 {
        self.tpr() - self.fpr()
    }

    pub fn metrics(&self) -> Metrics {
        Metrics {
            confusion: *self,
            accuracy: self.accuracy(),
            precision: self.precision(),
            recall: self.recall(),
            tpr: self.tpr(),
            fpr: self.fpr(),
            balanced_accuracy: self.balanced_accuracy(),
            f1: self.f1(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub balanced_accuracy: f64,
    pub f1: f64,
}

pub fn evaluate_scores(scores: &[f64], labels: &[bool], threshold: f64) -> Result<Metrics> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("evaluation set is empty".into()));
    }
    if scores.len() != labels.len() {
        return Err(Error::InvalidParameter(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    Ok(ConfusionMatrix::from_scores(scores, labels, threshold).metrics())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdObjective {
    /// Youden's J = TPR − FPR.
    #[default]
    Youden,
    F1,
    /// (TPR + TNR) / 2.
    Balanced,
}

impl ThresholdObjective {
    pub fn score(self, m: &ConfusionMatrix) -> f64 {
        match self {
            ThresholdObjective::Youden => m.youden_j(),
            ThresholdObjective::F1 => m.f1(),
            ThresholdObjective::Balanced => m.balanced_accuracy(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ThresholdObjective::Youden => "youden",
            ThresholdObjective::F1 => "f1",
            ThresholdObjective::Balanced => "balanced",
        }
    }
}

impl std::str::FromStr for ThresholdObjective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "youden" => Ok(Self::Youden),
            "f1" => Ok(Self::F1),
            "balanced" => Ok(Self::Balanced),
            other => Err(Error::InvalidParameter(format!(
                "unknown threshold objective `{other}` (youden, f1, balanced)"
            ))),
        }
    }
}

/// One point of the threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub threshold: f64,
    pub confusion: ConfusionMatrix,
    pub objective: f64,
}

/// Confusion matrices at every candidate threshold, in ascending order.
///
/// Candidates are the midpoints between consecutive distinct scores; when all
/// scores are equal the single candidate is that score.
pub fn threshold_sweep(
    scores: &[f64],
    labels: &[bool],
    objective: ThresholdObjective,
) -> Result<Vec<ThresholdPoint>> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidParameter(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateLabels(format!(
            "{n_pos} positive and {n_neg} negative evaluation rows"
        )));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite score {bad}")));
    }
    let mut order: Vec<(f64, bool)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut points = Vec::new();
    let point = |threshold: f64, below_pos: u64, below_neg: u64| {
        let confusion = ConfusionMatrix {
            tp: n_pos - below_pos,
            fn_: below_pos,
            fp: n_neg - below_neg,
            tn: below_neg,
        };
        ThresholdPoint {
            threshold,
            confusion,
            objective: objective.score(&confusion),
        }
    };
    let (mut below_pos, mut below_neg) = (0u64, 0u64);
    for i in 0..order.len() {
        if order[i].1 {
            below_pos += 1;
        } else {
            below_neg += 1;
        }
        if i + 1 < order.len() && order[i].0 < order[i + 1].0 {
            let t = super::split::midpoint(order[i].0, order[i + 1].0);
            points.push(point(t, below_pos, below_neg));
        }
    }
    if points.is_empty() {
        points.push(point(order[0].0, 0, 0));
    }
    Ok(points)
}

/// Threshold maximising `objective` over the sweep; ties go to the smaller
/// threshold.
pub fn tune_threshold(scores: &[f64], labels: &[bool], objective: ThresholdObjective) -> Result<f64> {
    let sweep = threshold_sweep(scores, labels, objective)?;
    let mut best = sweep[0];
    for p in &sweep[1..] {
        if p.objective > best.objective {
            best = *p;
        }
    }
    Ok(best.threshold)
}
