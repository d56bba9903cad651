//! Calibration and classification metrics.
//!
//! ECE uses quantile binning: predictions are stably sorted by confidence
//! and split into m contiguous bins whose sizes differ by at most one, with
//! the larger bins at the low-confidence end. The two-sample K-S test uses
//! the asymptotic Kolmogorov series with the standard small-sample
//! correction.

use serde::{Deserialize, Serialize};

use crate::consistency::ConfidenceScore;
use crate::dataset::{score_to_binary, score_to_sixpoint, Record};
use crate::elicitation::ParsedResponse;
use crate::error::{Error, Result};

/// One prediction with its confidence and correctness outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPrediction {
    pub record_id: String,
    pub confidence: ConfidenceScore,
    pub correct: bool,
}

/// One quantile bin of a reliability table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub index: usize,
    pub count: usize,
    pub mean_confidence: f64,
    pub accuracy: f64,
    pub conf_low: f64,
    pub conf_high: f64,
}

/// Split predictions into `m` quantile bins: stable sort by confidence
/// (ties keep input order), then contiguous groups of size n div m or
/// n div m + 1, larger groups first.
pub fn quantile_bins(preds: &[LabeledPrediction], m: usize) -> Result<Vec<CalibrationBin>> {
    let n = preds.len();
    if m == 0 {
        return Err(Error::Invalid {
            what: "bin count",
            reason: "m must be positive".into(),
        });
    }
    if n < m {
        return Err(Error::TooFewForBins {
            needed: m,
            got: n,
            bins: m,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        preds[a]
            .confidence
            .value()
            .partial_cmp(&preds[b].confidence.value())
            .unwrap()
    });

    let base = n / m;
    let remainder = n % m;
    let mut bins = Vec::with_capacity(m);
    let mut start = 0;
    for index in 0..m {
        let size = base + usize::from(index < remainder);
        let slice = &order[start..start + size];
        let confs: Vec<f64> = slice.iter().map(|&i| preds[i].confidence.value()).collect();
        let correct = slice.iter().filter(|&&i| preds[i].correct).count();
        bins.push(CalibrationBin {
            index,
            count: size,
            mean_confidence: confs.iter().sum::<f64>() / size as f64,
            accuracy: correct as f64 / size as f64,
            conf_low: confs.iter().copied().fold(f64::MAX, f64::min),
            conf_high: confs.iter().copied().fold(f64::MIN, f64::max),
        });
        start += size;
    }
    Ok(bins)
}

/// Expected calibration error over `m` quantile bins: the bin-size-weighted
/// mean absolute gap between per-bin accuracy and per-bin mean confidence.
/// Lower is better.
pub fn ece(preds: &[LabeledPrediction], m: usize) -> Result<f64> {
    let bins = quantile_bins(preds, m)?;
    let n = preds.len() as f64;
    Ok(bins
        .iter()
        .map(|b| (b.count as f64 / n) * (b.accuracy - b.mean_confidence).abs())
        .sum())
}

/// Brier score: mean squared difference between confidence and the 0/1
/// correctness indicator. Lower is better.
pub fn brier(preds: &[LabeledPrediction]) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::EmptyInput("predictions"));
    }
    let sum: f64 = preds
        .iter()
        .map(|p| {
            let outcome = if p.correct { 1.0 } else { 0.0 };
            (p.confidence.value() - outcome).powi(2)
        })
        .sum();
    Ok(sum / preds.len() as f64)
}

/// Area under the ROC curve via the Mann-Whitney statistic with average
/// ranks for ties: P(score of positive > score of negative) + 0.5 P(tie).
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Misaligned(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // average 1-based ranks within tie groups, summed over positives
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }

    let n_pos_f = n_pos as f64;
    Ok((rank_sum_pos - n_pos_f * (n_pos_f + 1.0) / 2.0) / (n_pos_f * n_neg as f64))
}

/// Two-sample Kolmogorov-Smirnov test. Returns (D, p) where D is the
/// supremum distance between the empirical CDFs and p comes from the
/// asymptotic Kolmogorov distribution with the standard small-sample
/// correction, clamped to [0, 1].
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("k-s sample"));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|u, v| u.partial_cmp(v).unwrap());
    ys.sort_by(|u, v| u.partial_cmp(v).unwrap());

    let n = xs.len();
    let m = ys.len();
    let mut i = 0;
    let mut j = 0;
    let mut d: f64 = 0.0;
    while i < n && j < m {
        // advance through duplicates so each distinct value is evaluated once
        let x = xs[i];
        let y = ys[j];
        let current = x.min(y);
        while i < n && xs[i] == current {
            i += 1;
        }
        while j < m && ys[j] == current {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    // the remaining tail only shrinks the gap monotonically

    let en = ((n as f64 * m as f64) / (n as f64 + m as f64)).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    Ok((d, kolmogorov_survival(lambda)))
}

/// Q_KS(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2), truncated
/// once a term falls below 1e-10.
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100_000u64 {
        let term = (-2.0 * (j as f64 * lambda).powi(2)).exp();
        sum += sign * term;
        if term < 1e-10 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Binary/6-point accuracy and Not-a-Number reporting for one batch of
/// parsed truthfulness replies. Replies without a truthfulness score count
/// as N.Ns and are excluded from the accuracy denominators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationSummary {
    pub binary_accuracy: Option<f64>,
    pub sixpoint_accuracy: Option<f64>,
    pub nn_rate: f64,
    pub n: usize,
}

pub fn classification_summary(
    parsed: &[ParsedResponse],
    records: &[Record],
) -> Result<ClassificationSummary> {
    if parsed.len() != records.len() {
        return Err(Error::Misaligned(format!(
            "{} parsed replies vs {} records",
            parsed.len(),
            records.len()
        )));
    }
    if records.is_empty() {
        return Err(Error::EmptyInput("records"));
    }

    let mut scored = 0usize;
    let mut binary_hits = 0usize;
    let mut sixpoint_hits = 0usize;
    for (p, r) in parsed.iter().zip(records) {
        let Some(score) = p.truth_score() else {
            continue;
        };
        scored += 1;
        if score_to_binary(score)? == r.label_binary {
            binary_hits += 1;
        }
        if score_to_sixpoint(score)? == r.label6 {
            sixpoint_hits += 1;
        }
    }

    let n = records.len();
    let nn = n - scored;
    let frac = |hits: usize| {
        if scored == 0 {
            None
        } else {
            Some(hits as f64 / scored as f64)
        }
    };
    Ok(ClassificationSummary {
        binary_accuracy: frac(binary_hits),
        sixpoint_accuracy: frac(sixpoint_hits),
        nn_rate: nn as f64 / n as f64,
        n,
    })
}

/// Per-condition metric bundle: calibration metrics, accuracies, N.N rate
/// and the reliability bin table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub ece: f64,
    pub brier: f64,
    pub auc: Option<f64>,
    pub binary_accuracy: Option<f64>,
    pub sixpoint_accuracy: Option<f64>,
    pub nn_rate: f64,
    pub bins: Vec<CalibrationBin>,
    pub n: usize,
}

impl MetricReport {
    /// Calibration metrics of a prediction list; AUC is confidence-vs-
    /// correctness and absent when only one class is present. Accuracy and
    /// N.N fields start empty and are filled from a classification summary.
    pub fn from_predictions(preds: &[LabeledPrediction], m: usize) -> Result<MetricReport> {
        let confidences: Vec<f64> = preds.iter().map(|p| p.confidence.value()).collect();
        let correct: Vec<bool> = preds.iter().map(|p| p.correct).collect();
        Ok(MetricReport {
            ece: ece(preds, m)?,
            brier: brier(preds)?,
            auc: auc(&confidences, &correct).ok(),
            binary_accuracy: None,
            sixpoint_accuracy: None,
            nn_rate: 0.0,
            bins: quantile_bins(preds, m)?,
            n: preds.len(),
        })
    }

    pub fn with_classification(mut self, summary: &ClassificationSummary) -> MetricReport {
        self.binary_accuracy = summary.binary_accuracy;
        self.sixpoint_accuracy = summary.sixpoint_accuracy;
        self.nn_rate = summary.nn_rate;
        self
    }
}

/// Reliability-curve points as CSV for external plotting. The `ideal`
/// column repeats the mean confidence, i.e. the identity line.
pub fn calibration_curve_csv(bins: &[CalibrationBin]) -> String {
    let mut out =
        String::from("bin_index,count,mean_confidence,accuracy,conf_low,conf_high,ideal\n");
    for b in bins {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            b.index,
            b.count,
            b.mean_confidence,
            b.accuracy,
            b.conf_low,
            b.conf_high,
            b.mean_confidence
        ));
    }
    out
}
