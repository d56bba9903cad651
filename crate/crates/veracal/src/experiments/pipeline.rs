//! Shared machinery behind the experiment runners: backend construction,
//! the bounded worker pool, and the sampling passes. Sampling and analysis
//! are separate stages with the response cache as the interface, so every
//! table is re-derivable from cached raw responses alone.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::client::{
    Backend, ChatRequest, HttpBackend, ModelClient, ResponseCache, SimulatorBackend,
};
use crate::consistency::{score, to_confidences, ConsistencyConfig, Method, RawScore, SampleSet};
use crate::dataset::{load_liar, score_to_binary, Record};
use crate::elicitation::{
    parse_explain_score, parse_single_step, parse_two_step, ParsedResponse, TemplateName,
    TemplateSet,
};
use crate::error::{Error, Result};
use crate::experiments::config::{BackendConfig, ExperimentConfig};
use crate::experiments::manifest::SkipAccounting;
use crate::metrics::LabeledPrediction;

/// Run `f` over `items` on a bounded worker pool; results keep item order.
pub(crate) fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    let workers = workers.clamp(1, items.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let result = f(i, &items[i]);
                *slots[i].lock().unwrap() = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().unwrap())
        .collect()
}

/// Backend, templates and request defaults for one run.
pub struct Harness {
    pub client: ModelClient,
    pub templates: TemplateSet,
    pub model_id: String,
    pub max_tokens: u32,
    pub concurrency: usize,
}

impl Harness {
    /// Load the dataset and build the configured backend around it.
    /// Performed before any output is created so an empty dataset fails
    /// cleanly with no partial files.
    pub fn from_config(config: &ExperimentConfig) -> Result<(Harness, Vec<Record>)> {
        config.validate()?;
        let mut records = load_liar(&config.dataset.path, config.dataset.split)?;
        if let Some(limit) = config.dataset.limit {
            records.truncate(limit);
        }
        if records.is_empty() {
            return Err(Error::EmptyInput("dataset"));
        }

        let backend: Box<dyn Backend> = match &config.backend {
            BackendConfig::Simulator { profile } => {
                Box::new(SimulatorBackend::new(*profile, &records))
            }
            BackendConfig::Http { settings } => Box::new(HttpBackend::new(settings.clone())?),
        };
        let cache = ResponseCache::open(config.cache_path())?;
        let templates = match &config.template_dir {
            Some(dir) => TemplateSet::with_overrides(dir)?,
            None => TemplateSet::builtin(),
        };
        Ok((
            Harness {
                client: ModelClient::with_cache(backend, cache),
                templates: templates.clone(),
                model_id: config.backend.model_id(),
                max_tokens: config.max_tokens,
                concurrency: config.concurrency,
            },
            records,
        ))
    }

    fn request(&self, model_id: &str, prompt: String, temperature: f64) -> Result<ChatRequest> {
        ChatRequest::new(model_id, prompt, temperature, self.max_tokens)
    }

    /// One completion of `template` for `record`; parse with `parse`.
    fn elicit_one(
        &self,
        model_id: &str,
        record: &Record,
        template: TemplateName,
        temperature: f64,
        proposed_answer: Option<&str>,
        parse: fn(&str) -> ParsedResponse,
    ) -> Result<ParsedResponse> {
        let prompt = self
            .templates
            .render(template, &record.statement, proposed_answer)?;
        let request = self.request(model_id, prompt, temperature)?;
        let response = self.client.complete(&request)?;
        Ok(parse(&response.text))
    }
}

/// Outcome of the deterministic reference pass for one record.
#[derive(Debug, Clone)]
pub struct ReferenceOutcome {
    /// Raw reply text; `None` when the backend call failed.
    pub reply: Option<String>,
    /// Parsed truthfulness score; `None` on failure or N.N.
    pub score: Option<f64>,
}

/// Explain-Score at T = 0, one deterministic reference answer per record.
pub fn reference_pass(
    harness: &Harness,
    model_id: &str,
    records: &[Record],
    skips: &mut SkipAccounting,
) -> Result<Vec<ReferenceOutcome>> {
    let results = parallel_map(records, harness.concurrency, |_, record| {
        let prompt =
            harness
                .templates
                .render(TemplateName::ExplainScore, &record.statement, None)?;
        let request = harness.request(model_id, prompt, 0.0)?;
        let response = harness.client.complete(&request)?;
        Ok::<_, Error>(response.text)
    });
    let mut outcomes = Vec::with_capacity(records.len());
    for result in results {
        match result {
            Ok(reply) => {
                let score = parse_explain_score(&reply).truth_score();
                if score.is_none() {
                    skips.reference_nn += 1;
                }
                outcomes.push(ReferenceOutcome {
                    reply: Some(reply),
                    score,
                });
            }
            Err(_) => {
                skips.backend_failures += 1;
                outcomes.push(ReferenceOutcome {
                    reply: None,
                    score: None,
                });
            }
        }
    }
    Ok(outcomes)
}

/// k stochastic Explain-Score draws per record at `temperature`. Each entry
/// is `None` when any backend call for the record failed, otherwise the
/// per-index parsed scores (`None` entries are sample-level N.Ns).
pub fn stochastic_pass(
    harness: &Harness,
    model_id: &str,
    records: &[Record],
    k: usize,
    temperature: f64,
    skips: &mut SkipAccounting,
) -> Result<Vec<Option<Vec<Option<f64>>>>> {
    let results = parallel_map(records, harness.concurrency, |_, record| {
        let prompt =
            harness
                .templates
                .render(TemplateName::ExplainScore, &record.statement, None)?;
        let request = harness.request(model_id, prompt, temperature)?;
        harness.client.sample_k(&request, k)
    });
    let mut outcomes = Vec::with_capacity(records.len());
    for result in results {
        match result {
            Ok(responses) => {
                let scores: Vec<Option<f64>> = responses
                    .iter()
                    .map(|r| parse_explain_score(&r.text).truth_score())
                    .collect();
                skips.sample_nn += scores.iter().filter(|s| s.is_none()).count();
                outcomes.push(Some(scores));
            }
            Err(_) => {
                skips.backend_failures += 1;
                outcomes.push(None);
            }
        }
    }
    Ok(outcomes)
}

/// Two-step verbalized certainty for each record whose reference reply is
/// available: the reference answer is fed back as the proposed answer at
/// T = 0. Entries are 0-100 certainties.
pub fn two_step_pass(
    harness: &Harness,
    model_id: &str,
    records: &[Record],
    references: &[ReferenceOutcome],
    skips: &mut SkipAccounting,
) -> Result<Vec<Option<f64>>> {
    let paired: Vec<(&Record, &ReferenceOutcome)> = records.iter().zip(references).collect();
    let results = parallel_map(&paired, harness.concurrency, |_, (record, reference)| {
        let Some(reply) = &reference.reply else {
            return Ok::<_, Error>(None);
        };
        let parsed = harness.elicit_one(
            model_id,
            record,
            TemplateName::TwoStepUncertainty,
            0.0,
            Some(reply),
            parse_two_step,
        )?;
        Ok(Some(parsed))
    });
    let mut outcomes = Vec::with_capacity(records.len());
    for result in results {
        match result {
            Ok(Some(parsed)) => {
                let certainty = parsed.certainty_score();
                if certainty.is_none() {
                    skips.verbalized_nn += 1;
                }
                outcomes.push(certainty);
            }
            Ok(None) => outcomes.push(None),
            Err(_) => {
                skips.backend_failures += 1;
                outcomes.push(None);
            }
        }
    }
    Ok(outcomes)
}

/// Single-step elicitation at T = 0: truthfulness and certainty in one
/// reply.
pub fn single_step_pass(
    harness: &Harness,
    model_id: &str,
    records: &[Record],
    skips: &mut SkipAccounting,
) -> Result<Vec<Option<(f64, f64)>>> {
    let results = parallel_map(records, harness.concurrency, |_, record| {
        harness.elicit_one(
            model_id,
            record,
            TemplateName::SingleStepUncertainty,
            0.0,
            None,
            parse_single_step,
        )
    });
    let mut outcomes = Vec::with_capacity(records.len());
    for result in results {
        match result {
            Ok(parsed) => {
                let pair = parsed.truth_score().zip(parsed.certainty_score());
                if pair.is_none() {
                    skips.verbalized_nn += 1;
                }
                outcomes.push(pair);
            }
            Err(_) => {
                skips.backend_failures += 1;
                outcomes.push(None);
            }
        }
    }
    Ok(outcomes)
}

/// One record that survived eligibility for consistency scoring: a usable
/// reference, at least two usable samples in the first `k`, and the
/// correctness of the reference's binary prediction.
pub struct ScoredRecord {
    pub record_index: usize,
    pub record_id: String,
    pub sample_set: SampleSet,
    pub correct: bool,
}

/// Assemble the eligible records for one (k, temperature) condition,
/// taking sample prefixes of length `k`. Records with a missing reference,
/// a failed sampling pass, or fewer than two usable samples are dropped
/// (the latter counted in `skips.too_few_samples`).
pub fn eligible_records(
    records: &[Record],
    references: &[ReferenceOutcome],
    samples: &[Option<Vec<Option<f64>>>],
    k: usize,
    temperature: f64,
    skips: &mut SkipAccounting,
) -> Result<Vec<ScoredRecord>> {
    let mut out = Vec::new();
    for (i, record) in records.iter().enumerate() {
        let Some(reference_score) = references[i].score else {
            continue;
        };
        let Some(all_scores) = &samples[i] else {
            continue;
        };
        let usable: Vec<f64> = all_scores.iter().take(k).filter_map(|s| *s).collect();
        if usable.len() < 2 {
            skips.too_few_samples += 1;
            continue;
        }
        let sample_set = SampleSet::new(
            record.id.clone(),
            usable,
            Some(reference_score),
            temperature,
        )?;
        let correct = score_to_binary(reference_score)? == record.label_binary;
        out.push(ScoredRecord {
            record_index: i,
            record_id: record.id.clone(),
            sample_set,
            correct,
        });
    }
    Ok(out)
}

/// Raw scores for one method over the eligible records.
pub fn method_raws(
    scored: &[ScoredRecord],
    method: Method,
    cfg: &ConsistencyConfig,
) -> Result<Vec<RawScore>> {
    scored
        .iter()
        .map(|r| score(method, &r.sample_set, cfg))
        .collect()
}

/// Normalized, oriented confidences paired with correctness for one method.
pub fn method_predictions(
    scored: &[ScoredRecord],
    method: Method,
    cfg: &ConsistencyConfig,
) -> Result<Vec<LabeledPrediction>> {
    let raws = method_raws(scored, method, cfg)?;
    let confidences = to_confidences(&raws)?;
    Ok(scored
        .iter()
        .zip(confidences)
        .map(|(r, confidence)| LabeledPrediction {
            record_id: r.record_id.clone(),
            confidence,
            correct: r.correct,
        })
        .collect())
}
