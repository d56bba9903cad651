//! Sample-based consistency estimators.
//!
//! Each estimator maps the k stochastic truthfulness scores for one
//! statement to a raw value; raw values are min-max normalized over the
//! dataset being scored and then oriented so that higher always means more
//! confident the prediction is correct. Equality-based estimators compare
//! scores rounded to integers, since 0-100 model outputs only support a
//! meaningful mode after discretization.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The k stochastic truthfulness scores (plus optional non-stochastic
/// reference) for one statement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub record_id: String,
    pub samples: Vec<f64>,
    pub reference: Option<f64>,
    pub temperature: f64,
}

impl SampleSet {
    pub fn new(
        record_id: impl Into<String>,
        samples: Vec<f64>,
        reference: Option<f64>,
        temperature: f64,
    ) -> Result<SampleSet> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("sample set"));
        }
        for &s in samples.iter().chain(reference.iter()) {
            if !(0.0..=100.0).contains(&s) {
                return Err(Error::OutOfRange {
                    what: "sample score",
                    value: s,
                    low: 0.0,
                    high: 100.0,
                });
            }
        }
        Ok(SampleSet {
            record_id: record_id.into(),
            samples,
            reference,
            temperature,
        })
    }

    fn k(&self) -> usize {
        self.samples.len()
    }
}

/// The six consistency estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SelfConsistency,
    SelfCheckGpt,
    SampleAvgDev,
    NormStd,
    DeviationSum,
    PredClassMargin,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::SelfConsistency,
        Method::SelfCheckGpt,
        Method::SampleAvgDev,
        Method::NormStd,
        Method::DeviationSum,
        Method::PredClassMargin,
    ];

    pub fn as_token(self) -> &'static str {
        match self {
            Method::SelfConsistency => "self_consistency",
            Method::SelfCheckGpt => "selfcheck_gpt",
            Method::SampleAvgDev => "sample_avg_dev",
            Method::NormStd => "norm_std",
            Method::DeviationSum => "deviation_sum",
            Method::PredClassMargin => "pred_class_margin",
        }
    }

    /// Whether a larger raw value means more agreement/extremity (identity
    /// orientation) rather than more spread (inverted orientation).
    fn raw_tracks_confidence(self) -> bool {
        matches!(
            self,
            Method::SelfConsistency | Method::SelfCheckGpt | Method::SampleAvgDev
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_token())
    }
}

/// Which reading of the PredClassMargin estimator to use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginMode {
    /// Margin between the largest and the smallest sampled score.
    #[default]
    ValueRange,
    /// (count of the most frequent score - count of the least frequent
    /// score) / k, over rounded scores.
    FrequencyMargin,
}

/// Un-normalized estimator output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawScore {
    pub method: Method,
    pub value: f64,
}

/// A [0,1] score oriented so that higher = more confident the prediction is
/// correct; the common currency of scorers and metrics.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfidenceScore(f64);

impl ConfidenceScore {
    pub fn new(value: f64) -> Result<ConfidenceScore> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfRange {
                what: "confidence",
                value,
                low: 0.0,
                high: 1.0,
            });
        }
        Ok(ConfidenceScore(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<ConfidenceScore> for f64 {
    fn from(c: ConfidenceScore) -> f64 {
        c.0
    }
}

fn rounded_counts(samples: &[f64]) -> HashMap<i64, usize> {
    let mut counts = HashMap::new();
    for &s in samples {
        *counts.entry(s.round() as i64).or_insert(0) += 1;
    }
    counts
}

/// Frequency of the most common (rounded) answer, weighted by 1/k.
/// Range [1/k, 1].
pub fn self_consistency(s: &SampleSet) -> Result<RawScore> {
    if s.samples.is_empty() {
        return Err(Error::EmptyInput("sample set"));
    }
    let max_count = rounded_counts(&s.samples).values().copied().max().unwrap();
    Ok(RawScore {
        method: Method::SelfConsistency,
        value: max_count as f64 / s.k() as f64,
    })
}

/// Fraction of (rounded) stochastic answers that match the non-stochastic
/// reference answer. Range [0, 1].
pub fn self_check_gpt(s: &SampleSet) -> Result<RawScore> {
    let reference = s.reference.ok_or(Error::MissingReference)?;
    let target = reference.round() as i64;
    let matches = s
        .samples
        .iter()
        .filter(|a| a.round() as i64 == target)
        .count();
    Ok(RawScore {
        method: Method::SelfCheckGpt,
        value: matches as f64 / s.k() as f64,
    })
}

/// Mean absolute deviation of the samples from the classification halfpoint
/// (50). Range [0, 50].
pub fn sample_avg_dev(s: &SampleSet) -> Result<RawScore> {
    if s.samples.is_empty() {
        return Err(Error::EmptyInput("sample set"));
    }
    let value = s.samples.iter().map(|a| (a - 50.0).abs()).sum::<f64>() / s.k() as f64;
    Ok(RawScore {
        method: Method::SampleAvgDev,
        value,
    })
}

/// Population standard deviation of the samples. Range [0, 50].
/// Requires k >= 2.
pub fn norm_std(s: &SampleSet) -> Result<RawScore> {
    if s.k() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: s.k(),
        });
    }
    let mean = s.samples.iter().sum::<f64>() / s.k() as f64;
    let var = s.samples.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / s.k() as f64;
    Ok(RawScore {
        method: Method::NormStd,
        value: var.sqrt(),
    })
}

/// Total absolute spread of the samples around their own mean.
/// Range [0, 50k].
pub fn deviation_sum(s: &SampleSet) -> Result<RawScore> {
    if s.samples.is_empty() {
        return Err(Error::EmptyInput("sample set"));
    }
    let mean = s.samples.iter().sum::<f64>() / s.k() as f64;
    let value = s.samples.iter().map(|a| (mean - a).abs()).sum::<f64>();
    Ok(RawScore {
        method: Method::DeviationSum,
        value,
    })
}

/// Margin between the sampled answers. The default value-range reading is
/// max - min (range [0, 100]); the frequency reading is the mode/antimode
/// count gap over k (range [0, 1)).
pub fn pred_class_margin(s: &SampleSet, mode: MarginMode) -> Result<RawScore> {
    if s.samples.is_empty() {
        return Err(Error::EmptyInput("sample set"));
    }
    let value = match mode {
        MarginMode::ValueRange => {
            let max = s.samples.iter().copied().fold(f64::MIN, f64::max);
            let min = s.samples.iter().copied().fold(f64::MAX, f64::min);
            max - min
        }
        MarginMode::FrequencyMargin => {
            let counts = rounded_counts(&s.samples);
            let most = counts.values().copied().max().unwrap();
            let least = counts.values().copied().min().unwrap();
            (most - least) as f64 / s.k() as f64
        }
    };
    Ok(RawScore {
        method: Method::PredClassMargin,
        value,
    })
}

/// Options shared by the method dispatcher.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyConfig {
    pub margin_mode: MarginMode,
}

/// Run one estimator on one sample set.
pub fn score(method: Method, s: &SampleSet, cfg: &ConsistencyConfig) -> Result<RawScore> {
    match method {
        Method::SelfConsistency => self_consistency(s),
        Method::SelfCheckGpt => self_check_gpt(s),
        Method::SampleAvgDev => sample_avg_dev(s),
        Method::NormStd => norm_std(s),
        Method::DeviationSum => deviation_sum(s),
        Method::PredClassMargin => pred_class_margin(s, cfg.margin_mode),
    }
}

/// Min-max normalize raw scores of a single method over one dataset onto
/// [0,1]. When all raws are equal the method carries no discriminative
/// information and every output is the neutral 0.5.
pub fn min_max_normalize(raws: &[RawScore]) -> Result<Vec<f64>> {
    let first = raws.first().ok_or(Error::EmptyInput("raw scores"))?;
    if let Some(other) = raws.iter().find(|r| r.method != first.method) {
        return Err(Error::MixedMethods(
            first.method.to_string(),
            other.method.to_string(),
        ));
    }
    let min = raws.iter().map(|r| r.value).fold(f64::MAX, f64::min);
    let max = raws.iter().map(|r| r.value).fold(f64::MIN, f64::max);
    if max == min {
        return Ok(vec![0.5; raws.len()]);
    }
    Ok(raws
        .iter()
        .map(|r| ((r.value - min) / (max - min)).clamp(0.0, 1.0))
        .collect())
}

/// Orient a normalized value into a confidence: identity for the
/// agreement/extremity estimators, inversion for the spread estimators
/// (more spread = more uncertain).
pub fn orient_to_confidence(method: Method, normalized: f64) -> Result<ConfidenceScore> {
    if !(0.0..=1.0).contains(&normalized) {
        return Err(Error::OutOfRange {
            what: "normalized score",
            value: normalized,
            low: 0.0,
            high: 1.0,
        });
    }
    let value = if method.raw_tracks_confidence() {
        normalized
    } else {
        1.0 - normalized
    };
    ConfidenceScore::new(value)
}

/// Normalize and orient a full raw-score column in one step.
pub fn to_confidences(raws: &[RawScore]) -> Result<Vec<ConfidenceScore>> {
    let method = raws.first().ok_or(Error::EmptyInput("raw scores"))?.method;
    min_max_normalize(raws)?
        .into_iter()
        .map(|v| orient_to_confidence(method, v))
        .collect()
}

/// One exported score row: record, method, and the three score stages.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreRow {
    pub record_id: String,
    pub method: Method,
    pub raw: f64,
    pub normalized: f64,
    pub confidence: f64,
}

/// Render score rows as CSV (`record_id,method,raw,normalized,confidence`).
pub fn scores_csv(rows: &[ScoreRow]) -> String {
    let mut out = String::from("record_id,method,raw,normalized,confidence\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.record_id, row.method, row.raw, row.normalized, row.confidence
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(samples: &[f64]) -> SampleSet {
        SampleSet::new("r", samples.to_vec(), None, 1.0).unwrap()
    }

    fn set_with_ref(samples: &[f64], reference: f64) -> SampleSet {
        SampleSet::new("r", samples.to_vec(), Some(reference), 1.0).unwrap()
    }

    const EPS: f64 = 1e-9;

    #[test]
    fn self_consistency_examples() {
        assert!((self_consistency(&set(&[70.0, 70.0, 70.0])).unwrap().value - 1.0).abs() < EPS);
        assert!(
            (self_consistency(&set(&[70.0, 70.0, 30.0])).unwrap().value - 2.0 / 3.0).abs() < EPS
        );
        assert!(
            (self_consistency(&set(&[10.0, 20.0, 30.0, 40.0]))
                .unwrap()
                .value
                - 0.25)
                .abs()
                < EPS
        );
    }

    #[test]
    fn self_consistency_rounds_before_matching() {
        // 69.6 and 70.4 both round to 70
        assert!(
            (self_consistency(&set(&[69.6, 70.4, 10.0])).unwrap().value - 2.0 / 3.0).abs() < EPS
        );
    }

    #[test]
    fn self_check_gpt_examples() {
        assert!(
            (self_check_gpt(&set_with_ref(&[80.0, 80.0], 80.0))
                .unwrap()
                .value
                - 1.0)
                .abs()
                < EPS
        );
        assert!(
            (self_check_gpt(&set_with_ref(&[10.0, 20.0], 80.0))
                .unwrap()
                .value
                - 0.0)
                .abs()
                < EPS
        );
        assert!(
            (self_check_gpt(&set_with_ref(&[80.0, 80.0, 20.0, 20.0], 80.0))
                .unwrap()
                .value
                - 0.5)
                .abs()
                < EPS
        );
        assert!(matches!(
            self_check_gpt(&set(&[1.0])),
            Err(Error::MissingReference)
        ));
    }

    #[test]
    fn sample_avg_dev_examples() {
        assert!((sample_avg_dev(&set(&[50.0, 50.0, 50.0])).unwrap().value - 0.0).abs() < EPS);
        assert!((sample_avg_dev(&set(&[0.0, 100.0])).unwrap().value - 50.0).abs() < EPS);
        let v = sample_avg_dev(&set(&[30.0, 70.0, 90.0])).unwrap().value;
        assert!((v - (20.0 + 20.0 + 40.0) / 3.0).abs() < EPS);
    }

    #[test]
    fn norm_std_examples() {
        assert!((norm_std(&set(&[60.0, 60.0, 60.0])).unwrap().value - 0.0).abs() < EPS);
        assert!((norm_std(&set(&[0.0, 100.0])).unwrap().value - 50.0).abs() < EPS);
        assert!((norm_std(&set(&[40.0, 60.0])).unwrap().value - 10.0).abs() < EPS);
        assert!(matches!(
            norm_std(&set(&[42.0])),
            Err(Error::InsufficientSamples { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn deviation_sum_examples() {
        assert!((deviation_sum(&set(&[33.0, 33.0, 33.0])).unwrap().value - 0.0).abs() < EPS);
        assert!((deviation_sum(&set(&[0.0, 100.0])).unwrap().value - 100.0).abs() < EPS);
        assert!((deviation_sum(&set(&[10.0, 20.0, 60.0])).unwrap().value - 60.0).abs() < EPS);
    }

    #[test]
    fn pred_class_margin_examples() {
        let value_range =
            |s: &SampleSet| pred_class_margin(s, MarginMode::ValueRange).unwrap().value;
        assert!((value_range(&set(&[42.0, 42.0])) - 0.0).abs() < EPS);
        assert!((value_range(&set(&[10.0, 90.0])) - 80.0).abs() < EPS);
        let freq = pred_class_margin(&set(&[70.0, 70.0, 30.0]), MarginMode::FrequencyMargin)
            .unwrap()
            .value;
        assert!((freq - 1.0 / 3.0).abs() < EPS);
    }

    #[test]
    fn min_max_examples() {
        let raws: Vec<RawScore> = [0.0, 25.0, 50.0]
            .iter()
            .map(|&value| RawScore {
                method: Method::NormStd,
                value,
            })
            .collect();
        assert_eq!(min_max_normalize(&raws).unwrap(), vec![0.0, 0.5, 1.0]);

        let degenerate: Vec<RawScore> = [7.0, 7.0, 7.0]
            .iter()
            .map(|&value| RawScore {
                method: Method::NormStd,
                value,
            })
            .collect();
        assert_eq!(min_max_normalize(&degenerate).unwrap(), vec![0.5, 0.5, 0.5]);

        let singleton = vec![RawScore {
            method: Method::NormStd,
            value: 3.0,
        }];
        assert_eq!(min_max_normalize(&singleton).unwrap(), vec![0.5]);
    }

    #[test]
    fn min_max_rejects_mixed_methods() {
        let raws = vec![
            RawScore {
                method: Method::NormStd,
                value: 1.0,
            },
            RawScore {
                method: Method::SampleAvgDev,
                value: 2.0,
            },
        ];
        assert!(matches!(
            min_max_normalize(&raws),
            Err(Error::MixedMethods(..))
        ));
    }

    #[test]
    fn orientation() {
        assert_eq!(
            orient_to_confidence(Method::SampleAvgDev, 1.0)
                .unwrap()
                .value(),
            1.0
        );
        assert_eq!(
            orient_to_confidence(Method::NormStd, 1.0).unwrap().value(),
            0.0
        );
        assert_eq!(
            orient_to_confidence(Method::SelfCheckGpt, 0.0)
                .unwrap()
                .value(),
            0.0
        );
        assert_eq!(
            orient_to_confidence(Method::DeviationSum, 0.25)
                .unwrap()
                .value(),
            0.75
        );
        assert!(orient_to_confidence(Method::NormStd, 1.5).is_err());
    }

    #[test]
    fn sample_set_validates_range() {
        assert!(SampleSet::new("r", vec![101.0], None, 1.0).is_err());
        assert!(SampleSet::new("r", vec![], None, 1.0).is_err());
        assert!(SampleSet::new("r", vec![50.0], Some(-1.0), 1.0).is_err());
    }

    #[test]
    fn deviation_sum_is_k_times_mad() {
        // cross-check the two computations on a few fixed sets
        for samples in [
            vec![10.0, 20.0, 60.0],
            vec![0.0, 0.0, 100.0, 100.0, 55.0],
            vec![42.5, 17.25, 99.0],
        ] {
            let s = set(&samples);
            let k = samples.len() as f64;
            let mean = samples.iter().sum::<f64>() / k;
            let mad = samples.iter().map(|a| (a - mean).abs()).sum::<f64>() / k;
            let ds = deviation_sum(&s).unwrap().value;
            assert!((ds - k * mad).abs() < 1e-9);
        }
    }

    #[test]
    fn self_consistency_bounds_self_check_at_mode() {
        // when the reference equals the sample mode the two agree
        let s = set_with_ref(&[70.0, 70.0, 30.0, 20.0], 70.0);
        let sc = self_consistency(&s).unwrap().value;
        let scg = self_check_gpt(&s).unwrap().value;
        assert!(sc >= scg);
        assert!((sc - scg).abs() < EPS);
        // with an off-mode reference, self-consistency strictly dominates
        let s2 = set_with_ref(&[70.0, 70.0, 30.0, 20.0], 30.0);
        assert!(self_consistency(&s2).unwrap().value > self_check_gpt(&s2).unwrap().value);
    }

    #[test]
    fn duplicate_sample_never_decreases_weighted_count() {
        let base = set(&[70.0, 30.0, 30.0]);
        let raw_base = self_consistency(&base).unwrap().value * 3.0;
        for dup in [70.0, 30.0] {
            let mut samples = base.samples.clone();
            samples.push(dup);
            let grown = set(&samples);
            let raw_grown = self_consistency(&grown).unwrap().value * 4.0;
            assert!(raw_grown >= raw_base - EPS);
        }
    }

    #[test]
    fn min_max_preserves_ranks() {
        let values = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0];
        let raws: Vec<RawScore> = values
            .iter()
            .map(|&value| RawScore {
                method: Method::SampleAvgDev,
                value,
            })
            .collect();
        let normalized = min_max_normalize(&raws).unwrap();
        for i in 0..values.len() {
            for j in 0..values.len() {
                assert_eq!(
                    values[i].partial_cmp(&values[j]),
                    normalized[i].partial_cmp(&normalized[j])
                );
            }
        }
    }

    #[test]
    fn csv_export_shape() {
        let rows = vec![ScoreRow {
            record_id: "abc".into(),
            method: Method::SampleAvgDev,
            raw: 12.5,
            normalized: 0.25,
            confidence: 0.25,
        }];
        let csv = scores_csv(&rows);
        assert_eq!(
            csv,
            "record_id,method,raw,normalized,confidence\nabc,sample_avg_dev,12.5,0.25,0.25\n"
        );
    }
}
