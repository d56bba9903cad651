//! Experiment runners behind the CLI subcommands.
//!
//! Every runner loads the dataset, drives the configured backend through
//! the shared sampling passes (cache-backed, so reruns and interrupted runs
//! replay instead of re-calling), analyzes the cached replies, and emits
//! CSV/JSON outputs plus a manifest into `<out_dir>/<command>/`.
//!
//! Single-condition runs (`methods`, `bsdetector`, `distributions`) sample
//! k = max(k_values) replies per record at T = max(temperatures); the
//! ablations vary one axis while holding the other at its maximum.

pub mod config;
pub mod manifest;
mod pipeline;

pub use config::{BackendConfig, DatasetSource, ExperimentConfig};
pub use manifest::{RunManifest, SkipAccounting};
pub use pipeline::Harness;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::consistency::{ConsistencyConfig, Method};
use crate::dataset::{dichotomize, politifact_to_sixpoint, score_to_binary, Record};
use crate::elicitation::{
    parse_categorical, parse_cot, parse_explain_score, Category, TemplateName,
};
use crate::error::{Error, Result};
use crate::hybrid::{
    combine, out_of_fold_confidences, search_alpha, AlphaSearchResult, HybridInput,
};
use crate::metrics::{
    auc, brier, calibration_curve_csv, classification_summary, ece, ks_two_sample, quantile_bins,
    LabeledPrediction,
};
use manifest::{OutputWriter, StageTimer};
use pipeline::{
    eligible_records, method_predictions, parallel_map, reference_pass, single_step_pass,
    stochastic_pass, two_step_pass,
};

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Everything a finished run hands to the manifest writer.
struct RunContext<'a> {
    config: &'a ExperimentConfig,
    command: &'a str,
    harness: &'a Harness,
    record_count: usize,
    skipped: SkipAccounting,
    timer: StageTimer,
}

/// Write all of a run's files plus its manifest.
fn emit<R: Serialize>(
    ctx: RunContext<'_>,
    files: Vec<(String, String)>,
    report: &R,
) -> Result<RunManifest> {
    let mut writer = OutputWriter::create(ctx.config.out_dir.join(ctx.command))?;
    for (name, content) in files {
        writer.write(&name, &content)?;
    }
    writer.write("report.json", &serde_json::to_string_pretty(report)?)?;
    writer.finish(RunManifest {
        command: ctx.command.to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        backend: ctx.config.backend.kind().to_string(),
        config: serde_json::to_value(ctx.config)?,
        record_count: ctx.record_count,
        skipped: ctx.skipped,
        cache_hits: ctx.harness.client.cache().map(|c| c.hits()).unwrap_or(0),
        cache_entries: ctx.harness.client.cache().map(|c| c.len()).unwrap_or(0),
        stage_timings_ms: ctx.timer.into_timings(),
        outputs: BTreeMap::new(),
    })
}

// ---------------------------------------------------------------------------
// methods

#[derive(Debug, Clone, Serialize)]
pub struct MethodRow {
    pub method: Method,
    pub ece: f64,
    pub brier: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodComparisonReport {
    pub k: usize,
    pub temperature: f64,
    pub rows: Vec<MethodRow>,
    pub skipped: SkipAccounting,
}

/// Compare the consistency estimators' calibration at the largest
/// configured sample size and temperature.
pub fn run_method_comparison(
    config: &ExperimentConfig,
) -> Result<(MethodComparisonReport, RunManifest)> {
    let (harness, records) = Harness::from_config(config)?;
    let model_id = harness.model_id.clone();
    let mut skips = SkipAccounting::default();
    let mut timer = StageTimer::default();
    let (k, temperature) = (config.k_max(), config.t_max());

    let references = timer.time("reference", || {
        reference_pass(&harness, &model_id, &records, &mut skips)
    })?;
    let samples = timer.time("sampling", || {
        stochastic_pass(&harness, &model_id, &records, k, temperature, &mut skips)
    })?;

    let rows = timer.time("analysis", || {
        let scored = eligible_records(&records, &references, &samples, k, temperature, &mut skips)?;
        let cfg = ConsistencyConfig {
            margin_mode: config.margin_mode,
        };
        config
            .methods
            .iter()
            .map(|&method| {
                let preds = method_predictions(&scored, method, &cfg)?;
                Ok(MethodRow {
                    method,
                    ece: ece(&preds, config.m_bins)?,
                    brier: brier(&preds)?,
                    n: preds.len(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut csv = String::from("method,ece,brier,n\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.method, row.ece, row.brier, row.n
        ));
    }

    let report = MethodComparisonReport {
        k,
        temperature,
        rows,
        skipped: skips.clone(),
    };
    let manifest = emit(
        RunContext {
            config,
            command: "methods",
            harness: &harness,
            record_count: records.len(),
            skipped: skips,
            timer,
        },
        vec![("table.csv".into(), csv)],
        &report,
    )?;
    Ok((report, manifest))
}

// ---------------------------------------------------------------------------
// ablate-k

#[derive(Debug, Clone, Serialize)]
pub struct KAblationRow {
    pub method: Method,
    pub k: usize,
    pub ece: f64,
    pub brier: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct KAblationReport {
    pub temperature: f64,
    pub rows: Vec<KAblationRow>,
    pub skipped: SkipAccounting,
}

/// Sample-size ablation. One sampling pass at k = max(k_values); smaller k
/// reuse prefixes of the cached samples, so the k = 2 scores equal those
/// computed from the first two samples of the full pass.
pub fn run_sample_size_ablation(
    config: &ExperimentConfig,
) -> Result<(KAblationReport, RunManifest)> {
    let (harness, records) = Harness::from_config(config)?;
    let model_id = harness.model_id.clone();
    let mut skips = SkipAccounting::default();
    let mut timer = StageTimer::default();
    let temperature = config.t_max();
    let k_max = config.k_max();

    let references = timer.time("reference", || {
        reference_pass(&harness, &model_id, &records, &mut skips)
    })?;
    let samples = timer.time("sampling", || {
        stochastic_pass(
            &harness,
            &model_id,
            &records,
            k_max,
            temperature,
            &mut skips,
        )
    })?;

    let mut k_values = config.k_values.clone();
    k_values.sort_unstable();
    k_values.dedup();

    let rows = timer.time("analysis", || {
        let cfg = ConsistencyConfig {
            margin_mode: config.margin_mode,
        };
        let mut rows = Vec::new();
        for &k in &k_values {
            let scored =
                eligible_records(&records, &references, &samples, k, temperature, &mut skips)?;
            for &method in &config.methods {
                let preds = method_predictions(&scored, method, &cfg)?;
                rows.push(KAblationRow {
                    method,
                    k,
                    ece: ece(&preds, config.m_bins)?,
                    brier: brier(&preds)?,
                    n: preds.len(),
                });
            }
        }
        Ok::<_, Error>(rows)
    })?;

    let mut csv = String::from("method,k,ece,brier,n\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            row.method, row.k, row.ece, row.brier, row.n
        ));
    }

    let report = KAblationReport {
        temperature,
        rows,
        skipped: skips.clone(),
    };
    let manifest = emit(
        RunContext {
            config,
            command: "ablate-k",
            harness: &harness,
            record_count: records.len(),
            skipped: skips,
            timer,
        },
        vec![("table.csv".into(), csv)],
        &report,
    )?;
    Ok((report, manifest))
}

// ---------------------------------------------------------------------------
// ablate-temp

#[derive(Debug, Clone, Serialize)]
pub struct TempAblationRow {
    pub method: Method,
    pub temperature: f64,
    pub ece: f64,
    pub brier: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TempAblationReport {
    pub k: usize,
    pub rows: Vec<TempAblationRow>,
    pub skipped: SkipAccounting,
}

/// Temperature ablation: an independent sampling pass per temperature at
/// k = max(k_values).
pub fn run_temperature_ablation(
    config: &ExperimentConfig,
) -> Result<(TempAblationReport, RunManifest)> {
    let (harness, records) = Harness::from_config(config)?;
    let model_id = harness.model_id.clone();
    let mut skips = SkipAccounting::default();
    let mut timer = StageTimer::default();
    let k = config.k_max();

    let references = timer.time("reference", || {
        reference_pass(&harness, &model_id, &records, &mut skips)
    })?;

    let mut temperatures = config.temperatures.clone();
    temperatures.sort_by(|a, b| a.partial_cmp(b).unwrap());
    temperatures.dedup();

    let mut per_temp = Vec::new();
    for &temperature in &temperatures {
        let samples = timer.time(&format!("sampling_t{temperature}"), || {
            stochastic_pass(&harness, &model_id, &records, k, temperature, &mut skips)
        })?;
        per_temp.push((temperature, samples));
    }

    let rows = timer.time("analysis", || {
        let cfg = ConsistencyConfig {
            margin_mode: config.margin_mode,
        };
        let mut rows = Vec::new();
        for (temperature, samples) in &per_temp {
            let scored =
                eligible_records(&records, &references, samples, k, *temperature, &mut skips)?;
            for &method in &config.methods {
                let preds = method_predictions(&scored, method, &cfg)?;
                rows.push(TempAblationRow {
                    method,
                    temperature: *temperature,
                    ece: ece(&preds, config.m_bins)?,
                    brier: brier(&preds)?,
                    n: preds.len(),
                });
            }
        }
        Ok::<_, Error>(rows)
    })?;

    let mut csv = String::from("method,temperature,ece,brier,n\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            row.method, row.temperature, row.ece, row.brier, row.n
        ));
    }

    let report = TempAblationReport {
        k,
        rows,
        skipped: skips.clone(),
    };
    let manifest = emit(
        RunContext {
            config,
            command: "ablate-temp",
            harness: &harness,
            record_count: records.len(),
            skipped: skips,
            timer,
        },
        vec![("table.csv".into(), csv)],
        &report,
    )?;
    Ok((report, manifest))
}

// ---------------------------------------------------------------------------
// elicit

#[derive(Debug, Clone, Serialize)]
pub struct ElicitationModeRow {
    pub mode: String,
    pub binary_accuracy: Option<f64>,
    pub ece: Option<f64>,
    pub brier: Option<f64>,
    pub nn_rate: f64,
    pub n_scored: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct KsSummary {
    pub d: f64,
    pub p_value: f64,
    pub significant_at_0_05: bool,
}

/// Accuracy split by whether the verbalized certainty exceeds 50.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionalSplitRow {
    pub mode: String,
    pub above_50_count: usize,
    pub above_50_accuracy: Option<f64>,
    pub at_or_below_50_count: usize,
    pub at_or_below_50_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ElicitationReport {
    pub modes: Vec<ElicitationModeRow>,
    pub ks: Option<KsSummary>,
    pub conditional: Vec<ConditionalSplitRow>,
    pub skipped: SkipAccounting,
}

struct ModeOutcome {
    name: &'static str,
    /// (truth score, certainty 0-100, correct) per scored record.
    scored: Vec<(f64, f64, bool)>,
    n: usize,
}

fn mode_row(outcome: &ModeOutcome, m_bins: usize) -> ElicitationModeRow {
    let n_scored = outcome.scored.len();
    let preds: Vec<LabeledPrediction> = outcome
        .scored
        .iter()
        .map(|&(_, certainty, correct)| LabeledPrediction {
            record_id: String::new(),
            confidence: crate::consistency::ConfidenceScore::new(certainty / 100.0).unwrap(),
            correct,
        })
        .collect();
    let binary_accuracy = if n_scored == 0 {
        None
    } else {
        Some(outcome.scored.iter().filter(|(_, _, c)| *c).count() as f64 / n_scored as f64)
    };
    ElicitationModeRow {
        mode: outcome.name.to_string(),
        binary_accuracy,
        ece: ece(&preds, m_bins).ok(),
        brier: brier(&preds).ok(),
        nn_rate: (outcome.n - n_scored) as f64 / outcome.n as f64,
        n_scored,
    }
}

fn conditional_row(outcome: &ModeOutcome) -> ConditionalSplitRow {
    let split = |above: bool| {
        let group: Vec<bool> = outcome
            .scored
            .iter()
            .filter(|&&(_, certainty, _)| (certainty > 50.0) == above)
            .map(|&(_, _, correct)| correct)
            .collect();
        let accuracy = if group.is_empty() {
            None
        } else {
            Some(group.iter().filter(|&&c| c).count() as f64 / group.len() as f64)
        };
        (group.len(), accuracy)
    };
    let (above_count, above_acc) = split(true);
    let (below_count, below_acc) = split(false);
    ConditionalSplitRow {
        mode: outcome.name.to_string(),
        above_50_count: above_count,
        above_50_accuracy: above_acc,
        at_or_below_50_count: below_count,
        at_or_below_50_accuracy: below_acc,
    }
}

/// Single- vs two-step verbalized confidence: calibration of the certainty
/// scores, distributional shift (two-sample K-S), and the conditional
/// accuracy split at certainty 50.
pub fn run_elicitation_comparison(
    config: &ExperimentConfig,
) -> Result<(ElicitationReport, RunManifest)> {
    let (harness, records) = Harness::from_config(config)?;
    let model_id = harness.model_id.clone();
    let mut skips = SkipAccounting::default();
    let mut timer = StageTimer::default();
    let n = records.len();

    let single = timer.time("single_step", || {
        single_step_pass(&harness, &model_id, &records, &mut skips)
    })?;
    let references = timer.time("reference", || {
        reference_pass(&harness, &model_id, &records, &mut skips)
    })?;
    let certainties = timer.time("two_step", || {
        two_step_pass(&harness, &model_id, &records, &references, &mut skips)
    })?;

    let single_outcome = ModeOutcome {
        name: "single_step",
        scored: records
            .iter()
            .zip(&single)
            .filter_map(|(record, outcome)| {
                outcome.map(|(truth, certainty)| {
                    let correct = score_to_binary(truth).map(|b| b == record.label_binary);
                    (truth, certainty, correct.unwrap_or(false))
                })
            })
            .collect(),
        n,
    };
    let two_step_outcome = ModeOutcome {
        name: "two_step",
        scored: records
            .iter()
            .zip(references.iter().zip(&certainties))
            .filter_map(
                |(record, (reference, certainty))| match (reference.score, certainty) {
                    (Some(truth), Some(certainty)) => {
                        let correct = score_to_binary(truth).map(|b| b == record.label_binary);
                        Some((truth, *certainty, correct.unwrap_or(false)))
                    }
                    _ => None,
                },
            )
            .collect(),
        n,
    };

    let single_certs: Vec<f64> = single_outcome.scored.iter().map(|s| s.1 / 100.0).collect();
    let two_certs: Vec<f64> = two_step_outcome
        .scored
        .iter()
        .map(|s| s.1 / 100.0)
        .collect();
    let ks = ks_two_sample(&single_certs, &two_certs)
        .ok()
        .map(|(d, p_value)| KsSummary {
            d,
            p_value,
            significant_at_0_05: p_value < 0.05,
        });

    let modes = vec![
        mode_row(&single_outcome, config.m_bins),
        mode_row(&two_step_outcome, config.m_bins),
    ];
    let conditional = vec![
        conditional_row(&single_outcome),
        conditional_row(&two_step_outcome),
    ];

    let mut csv = String::from("mode,binary_accuracy,ece,brier,nn_rate,n_scored\n");
    for row in &modes {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.mode,
            fmt_opt(row.binary_accuracy),
            fmt_opt(row.ece),
            fmt_opt(row.brier),
            row.nn_rate,
            row.n_scored
        ));
    }

    let report = ElicitationReport {
        modes,
        ks,
        conditional,
        skipped: skips.clone(),
    };
    let manifest = emit(
        RunContext {
            config,
            command: "elicit",
            harness: &harness,
            record_count: n,
            skipped: skips,
            timer,
        },
        vec![("table.csv".into(), csv)],
        &report,
    )?;
    Ok((report, manifest))
}

// ---------------------------------------------------------------------------
// bsdetector

#[derive(Debug, Clone, Serialize)]
pub struct BsDetectorRow {
    pub method: Method,
    pub alpha_star: f64,
    pub ece: f64,
    pub brier: f64,
    pub oof_ece: f64,
    pub oof_brier: f64,
    pub pure_obs_ece: f64,
    pub pure_obs_brier: f64,
    pub pure_verb_ece: f64,
    pub pure_verb_brier: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BsDetectorReport {
    pub k: usize,
    pub temperature: f64,
    pub rows: Vec<BsDetectorRow>,
    pub searches: BTreeMap<Method, AlphaSearchResult>,
    pub skipped: SkipAccounting,
}

/// The full hybrid pipeline: T = 0 reference answer, k stochastic samples,
/// consistency confidence, two-step verbalized certainty, cross-validated
/// alpha search, and hybrid evaluation per method. Emits the paper-style
/// global-alpha metrics, the strict out-of-fold metrics, and a reliability
/// curve per method.
pub fn run_bsdetector(config: &ExperimentConfig) -> Result<(BsDetectorReport, RunManifest)> {
    let (harness, records) = Harness::from_config(config)?;
    let model_id = harness.model_id.clone();
    let mut skips = SkipAccounting::default();
    let mut timer = StageTimer::default();
    let (k, temperature) = (config.k_max(), config.t_max());

    let references = timer.time("reference", || {
        reference_pass(&harness, &model_id, &records, &mut skips)
    })?;
    let samples = timer.time("sampling", || {
        stochastic_pass(&harness, &model_id, &records, k, temperature, &mut skips)
    })?;
    let certainties = timer.time("two_step", || {
        two_step_pass(&harness, &model_id, &records, &references, &mut skips)
    })?;

    let mut rows = Vec::new();
    let mut searches = BTreeMap::new();
    let mut curves: Vec<(String, String)> = Vec::new();

    timer.time("analysis", || {
        let scored = eligible_records(&records, &references, &samples, k, temperature, &mut skips)?;
        // hybrid additionally needs a verbalized certainty per record
        let with_verb: Vec<(usize, f64)> = scored
            .iter()
            .enumerate()
            .filter_map(|(pos, r)| certainties[r.record_index].map(|c| (pos, c / 100.0)))
            .collect();
        let cfg = ConsistencyConfig {
            margin_mode: config.margin_mode,
        };

        for &method in &config.methods {
            let all_preds = method_predictions(&scored, method, &cfg)?;
            let inputs: Vec<HybridInput> = with_verb
                .iter()
                .map(|&(pos, verb)| {
                    Ok(HybridInput {
                        record_id: scored[pos].record_id.clone(),
                        u_obs: all_preds[pos].confidence,
                        u_verb: crate::consistency::ConfidenceScore::new(verb)?,
                        correct: scored[pos].correct,
                    })
                })
                .collect::<Result<_>>()?;

            let search = search_alpha(
                &inputs,
                &config.alpha_grid,
                4,
                config.seed,
                config.alpha_objective,
                config.m_bins,
            )?;

            let fused_at = |alpha: f64| -> Result<Vec<LabeledPrediction>> {
                inputs
                    .iter()
                    .map(|input| {
                        Ok(LabeledPrediction {
                            record_id: input.record_id.clone(),
                            confidence: combine(input.u_obs, input.u_verb, alpha)?,
                            correct: input.correct,
                        })
                    })
                    .collect()
            };

            let global = fused_at(search.alpha_star)?;
            let pure_obs = fused_at(1.0)?;
            let pure_verb = fused_at(0.0)?;

            let (oof_scores, _) = out_of_fold_confidences(
                &inputs,
                &config.alpha_grid,
                4,
                config.seed,
                config.alpha_objective,
                config.m_bins,
            )?;
            let oof_preds: Vec<LabeledPrediction> = inputs
                .iter()
                .zip(oof_scores)
                .map(|(input, confidence)| LabeledPrediction {
                    record_id: input.record_id.clone(),
                    confidence,
                    correct: input.correct,
                })
                .collect();

            curves.push((
                format!("curve_{method}.csv"),
                calibration_curve_csv(&quantile_bins(&global, config.m_bins)?),
            ));
            rows.push(BsDetectorRow {
                method,
                alpha_star: search.alpha_star,
                ece: ece(&global, config.m_bins)?,
                brier: brier(&global)?,
                oof_ece: ece(&oof_preds, config.m_bins)?,
                oof_brier: brier(&oof_preds)?,
                pure_obs_ece: ece(&pure_obs, config.m_bins)?,
                pure_obs_brier: brier(&pure_obs)?,
                pure_verb_ece: ece(&pure_verb, config.m_bins)?,
                pure_verb_brier: brier(&pure_verb)?,
                n: inputs.len(),
            });
            searches.insert(method, search);
        }
        Ok::<_, Error>(())
    })?;

    let mut csv = String::from(
        "method,alpha,ece,brier,oof_ece,oof_brier,pure_obs_ece,pure_obs_brier,pure_verb_ece,pure_verb_brier,n\n",
    );
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            row.method,
            row.alpha_star,
            row.ece,
            row.brier,
            row.oof_ece,
            row.oof_brier,
            row.pure_obs_ece,
            row.pure_obs_brier,
            row.pure_verb_ece,
            row.pure_verb_brier,
            row.n
        ));
    }

    let mut files = vec![("table.csv".to_string(), csv)];
    files.extend(curves);

    let report = BsDetectorReport {
        k,
        temperature,
        rows,
        searches,
        skipped: skips.clone(),
    };
    let manifest = emit(
        RunContext {
            config,
            command: "bsdetector",
            harness: &harness,
            record_count: records.len(),
            skipped: skips,
            timer,
        },
        files,
        &report,
    )?;
    Ok((report, manifest))
}

// ---------------------------------------------------------------------------
// scales

#[derive(Debug, Clone, Serialize)]
pub struct ScaleRow {
    pub scale: String,
    pub binary_accuracy: Option<f64>,
    pub auc: Option<f64>,
    pub nn_rate: f64,
    /// Absent for the categorical scale, where it is undefined.
    pub sixpoint_accuracy: Option<f64>,
    /// Categorical C answers: no binary reading, excluded from accuracy.
    pub abstained: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VersionRow {
    pub model: String,
    pub prompt: String,
    pub binary_accuracy: Option<f64>,
    pub auc: Option<f64>,
    pub sixpoint_accuracy: Option<f64>,
    pub nn_rate: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalesReport {
    pub scales: Vec<ScaleRow>,
    pub versions: Vec<VersionRow>,
    pub skipped: SkipAccounting,
}

fn elicit_raw_replies(
    harness: &Harness,
    model_id: &str,
    records: &[Record],
    template: TemplateName,
    skips: &mut SkipAccounting,
) -> Vec<Option<String>> {
    let results = parallel_map(records, harness.concurrency, |_, record| {
        let prompt = harness
            .templates
            .render(template, &record.statement, None)?;
        let request = crate::client::ChatRequest::new(model_id, prompt, 0.0, harness.max_tokens)?;
        Ok::<_, Error>(harness.client.complete(&request)?.text)
    });
    results
        .into_iter()
        .map(|r| match r {
            Ok(text) => Some(text),
            Err(_) => {
                skips.backend_failures += 1;
                None
            }
        })
        .collect()
}

fn explain_score_row(
    scale: &str,
    replies: &[Option<String>],
    records: &[Record],
    parse: fn(&str) -> crate::elicitation::ParsedResponse,
) -> Result<ScaleRow> {
    let parsed: Vec<_> = replies
        .iter()
        .map(|r| parse(r.as_deref().unwrap_or("")))
        .collect();
    let summary = classification_summary(&parsed, records)?;
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (p, record) in parsed.iter().zip(records) {
        if let Some(s) = p.truth_score() {
            scores.push(s);
            labels.push(record.label_binary.as_bool());
        }
    }
    Ok(ScaleRow {
        scale: scale.to_string(),
        binary_accuracy: summary.binary_accuracy,
        auc: auc(&scores, &labels).ok(),
        nn_rate: summary.nn_rate,
        sixpoint_accuracy: summary.sixpoint_accuracy,
        abstained: 0,
        n: records.len(),
    })
}

fn politifact_row(replies: &[Option<String>], records: &[Record]) -> ScaleRow {
    let mut scored = 0usize;
    let mut binary_hits = 0usize;
    let mut sixpoint_hits = 0usize;
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (reply, record) in replies.iter().zip(records) {
        let parsed = parse_explain_score(reply.as_deref().unwrap_or(""));
        // the Politifact prompt answers on 0-5; anything else is an N.N
        let value = parsed
            .truth_score()
            .filter(|v| v.fract() == 0.0 && (0.0..=5.0).contains(v));
        let Some(v) = value else { continue };
        scored += 1;
        let label6 = politifact_to_sixpoint(v as u8).expect("validated range");
        if label6 == record.label6 {
            sixpoint_hits += 1;
        }
        if dichotomize(label6) == record.label_binary {
            binary_hits += 1;
        }
        // invert so larger means more true, matching the AUC orientation
        scores.push(5.0 - v);
        labels.push(record.label_binary.as_bool());
    }
    let frac = |hits: usize| {
        if scored == 0 {
            None
        } else {
            Some(hits as f64 / scored as f64)
        }
    };
    ScaleRow {
        scale: "politifact".to_string(),
        binary_accuracy: frac(binary_hits),
        auc: auc(&scores, &labels).ok(),
        nn_rate: (records.len() - scored) as f64 / records.len() as f64,
        sixpoint_accuracy: frac(sixpoint_hits),
        abstained: 0,
        n: records.len(),
    }
}

fn categorical_row(replies: &[Option<String>], records: &[Record]) -> ScaleRow {
    let mut decided = 0usize;
    let mut hits = 0usize;
    let mut abstained = 0usize;
    let mut parsed_count = 0usize;
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (reply, record) in replies.iter().zip(records) {
        let parsed = parse_categorical(reply.as_deref().unwrap_or(""));
        let Some(category) = parsed.category() else {
            continue;
        };
        parsed_count += 1;
        let score = match category {
            Category::A => 1.0,
            Category::C => 0.5,
            Category::B => 0.0,
        };
        scores.push(score);
        labels.push(record.label_binary.as_bool());
        match category {
            Category::A | Category::B => {
                decided += 1;
                let predicted = category == Category::A;
                if predicted == record.label_binary.as_bool() {
                    hits += 1;
                }
            }
            // "somewhat true / somewhat false" has no binary reading
            Category::C => abstained += 1,
        }
    }
    ScaleRow {
        scale: "three_way_categorical".to_string(),
        binary_accuracy: if decided == 0 {
            None
        } else {
            Some(hits as f64 / decided as f64)
        },
        auc: auc(&scores, &labels).ok(),
        nn_rate: (records.len() - parsed_count) as f64 / records.len() as f64,
        sixpoint_accuracy: None,
        abstained,
        n: records.len(),
    }
}

/// Truth-scale comparison (Explain-Score vs Politifact vs 3-way
/// categorical) plus the model-version comparison (Explain-Score and CoT
/// per configured model id); all at T = 0.
pub fn run_scale_and_version_comparison(
    config: &ExperimentConfig,
) -> Result<(ScalesReport, RunManifest)> {
    let (harness, records) = Harness::from_config(config)?;
    let model_id = harness.model_id.clone();
    let mut skips = SkipAccounting::default();
    let mut timer = StageTimer::default();

    let explain = timer.time("explain_score", || {
        elicit_raw_replies(
            &harness,
            &model_id,
            &records,
            TemplateName::ExplainScore,
            &mut skips,
        )
    });
    let politifact = timer.time("politifact", || {
        elicit_raw_replies(
            &harness,
            &model_id,
            &records,
            TemplateName::Politifact,
            &mut skips,
        )
    });
    let categorical = timer.time("categorical", || {
        elicit_raw_replies(
            &harness,
            &model_id,
            &records,
            TemplateName::ThreeWayCategorical,
            &mut skips,
        )
    });

    let scales = vec![
        explain_score_row("explain_score", &explain, &records, parse_explain_score)?,
        politifact_row(&politifact, &records),
        categorical_row(&categorical, &records),
    ];

    let mut versions = Vec::new();
    for model in config.model_versions() {
        for (template, parse, prompt_name) in [
            (
                TemplateName::ExplainScore,
                parse_explain_score as fn(&str) -> crate::elicitation::ParsedResponse,
                "explain_score",
            ),
            (
                TemplateName::CoTExplainScore,
                parse_cot,
                "cot_explain_score",
            ),
        ] {
            let replies = timer.time(&format!("{prompt_name}_{model}"), || {
                elicit_raw_replies(&harness, &model, &records, template, &mut skips)
            });
            let row = explain_score_row(prompt_name, &replies, &records, parse)?;
            versions.push(VersionRow {
                model: model.clone(),
                prompt: prompt_name.to_string(),
                binary_accuracy: row.binary_accuracy,
                auc: row.auc,
                sixpoint_accuracy: row.sixpoint_accuracy,
                nn_rate: row.nn_rate,
                n: row.n,
            });
        }
    }

    let mut scales_csv =
        String::from("scale,binary_accuracy,auc,nn_rate,sixpoint_accuracy,abstained,n\n");
    for row in &scales {
        scales_csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.scale,
            fmt_opt(row.binary_accuracy),
            fmt_opt(row.auc),
            row.nn_rate,
            fmt_opt(row.sixpoint_accuracy),
            row.abstained,
            row.n
        ));
    }
    let mut versions_csv =
        String::from("model,prompt,binary_accuracy,auc,sixpoint_accuracy,nn_rate,n\n");
    for row in &versions {
        versions_csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.model,
            row.prompt,
            fmt_opt(row.binary_accuracy),
            fmt_opt(row.auc),
            fmt_opt(row.sixpoint_accuracy),
            row.nn_rate,
            row.n
        ));
    }

    let report = ScalesReport {
        scales,
        versions,
        skipped: skips.clone(),
    };
    let manifest = emit(
        RunContext {
            config,
            command: "scales",
            harness: &harness,
            record_count: records.len(),
            skipped: skips,
            timer,
        },
        vec![
            ("scales.csv".into(), scales_csv),
            ("versions.csv".into(), versions_csv),
        ],
        &report,
    )?;
    Ok((report, manifest))
}

// ---------------------------------------------------------------------------
// distributions

#[derive(Debug, Clone, Serialize)]
pub struct HistogramSummary {
    pub n: usize,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistributionsReport {
    pub histograms: BTreeMap<String, HistogramSummary>,
    pub skipped: SkipAccounting,
}

const HISTOGRAM_BUCKETS: usize = 20;

fn histogram(values: &[f64]) -> Vec<usize> {
    let mut counts = vec![0usize; HISTOGRAM_BUCKETS];
    for &v in values {
        let index = ((v * HISTOGRAM_BUCKETS as f64) as usize).min(HISTOGRAM_BUCKETS - 1);
        counts[index] += 1;
    }
    counts
}

fn histogram_csv(counts: &[usize]) -> String {
    let width = 1.0 / HISTOGRAM_BUCKETS as f64;
    let mut out = String::from("bucket_index,low,high,count\n");
    for (i, count) in counts.iter().enumerate() {
        out.push_str(&format!(
            "{},{:.2},{:.2},{}\n",
            i,
            i as f64 * width,
            (i + 1) as f64 * width,
            count
        ));
    }
    out
}

/// 20-bucket histograms of the confidence scores per consistency method and
/// of the verbalized certainty per elicitation mode, as plot-ready CSV.
pub fn emit_distributions(config: &ExperimentConfig) -> Result<(DistributionsReport, RunManifest)> {
    let (harness, records) = Harness::from_config(config)?;
    let model_id = harness.model_id.clone();
    let mut skips = SkipAccounting::default();
    let mut timer = StageTimer::default();
    let (k, temperature) = (config.k_max(), config.t_max());

    let references = timer.time("reference", || {
        reference_pass(&harness, &model_id, &records, &mut skips)
    })?;
    let samples = timer.time("sampling", || {
        stochastic_pass(&harness, &model_id, &records, k, temperature, &mut skips)
    })?;
    let single = timer.time("single_step", || {
        single_step_pass(&harness, &model_id, &records, &mut skips)
    })?;
    let two_step = timer.time("two_step", || {
        two_step_pass(&harness, &model_id, &records, &references, &mut skips)
    })?;

    let mut histograms = BTreeMap::new();
    let mut files = Vec::new();

    timer.time("analysis", || {
        let scored = eligible_records(&records, &references, &samples, k, temperature, &mut skips)?;
        let cfg = ConsistencyConfig {
            margin_mode: config.margin_mode,
        };
        for &method in &config.methods {
            let preds = method_predictions(&scored, method, &cfg)?;
            let values: Vec<f64> = preds.iter().map(|p| p.confidence.value()).collect();
            let counts = histogram(&values);
            files.push((format!("hist_{method}.csv"), histogram_csv(&counts)));
            histograms.insert(
                method.to_string(),
                HistogramSummary {
                    n: values.len(),
                    counts,
                },
            );
        }
        for (name, values) in [
            (
                "single_step",
                single
                    .iter()
                    .filter_map(|o| o.map(|(_, c)| c / 100.0))
                    .collect::<Vec<f64>>(),
            ),
            (
                "two_step",
                two_step
                    .iter()
                    .filter_map(|c| c.map(|v| v / 100.0))
                    .collect(),
            ),
        ] {
            let counts = histogram(&values);
            files.push((format!("hist_{name}.csv"), histogram_csv(&counts)));
            histograms.insert(
                name.to_string(),
                HistogramSummary {
                    n: values.len(),
                    counts,
                },
            );
        }
        Ok::<_, Error>(())
    })?;

    let report = DistributionsReport {
        histograms,
        skipped: skips.clone(),
    };
    let manifest = emit(
        RunContext {
            config,
            command: "distributions",
            harness: &harness,
            record_count: records.len(),
            skipped: skips,
            timer,
        },
        files,
        &report,
    )?;
    Ok((report, manifest))
}
