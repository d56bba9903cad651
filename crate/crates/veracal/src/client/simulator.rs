//! Seeded parametric simulator backend.
//!
//! Emits replies shaped like each prompt's expected output. Truthfulness
//! scores are drawn from Normal(mean for the record's binary label,
//! base_sigma + sigma_per_temperature * T), clamped to [0,100] and rounded
//! to integers. At T = 0 the draw stream ignores the sample index, so all
//! draws for a record coincide (the deterministic reference answer). Every
//! draw is fully determined by (seed, record id, temperature, sample index).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::client::{Backend, ChatRequest, ChatResponse};
use crate::dataset::{BinaryLabel, Record};
use crate::error::{Error, Result};

/// How the simulator verbalizes certainty scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum CertaintyLaw {
    /// Certainty equals the closed-form probability that the rounded draw
    /// classifies to the record's label, on a 0-100 scale.
    Calibrated,
    /// Calibrated certainty shifted up by `offset` (0-100 scale), clamped.
    Overconfident { offset: f64 },
    /// Certainty uniform on [0, 100], independent of the record.
    Noise,
}

/// Parameters of the simulated classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatorProfile {
    /// Mean truthfulness score emitted for binary-true statements.
    pub mean_true: f64,
    /// Mean truthfulness score emitted for binary-false statements.
    pub mean_false: f64,
    pub base_sigma: f64,
    pub sigma_per_temperature: f64,
    /// Per-record difficulty: each record gets a fixed multiplicative sigma
    /// factor drawn uniformly from [1 - spread, 1 + spread], so some
    /// statements are inherently noisier (and more often misclassified)
    /// than others. 0 disables the effect.
    #[serde(default)]
    pub sigma_spread: f64,
    /// Per-record mean jitter: each record's generating mean is shifted by
    /// a fixed offset drawn uniformly from [-mean_spread, +mean_spread]
    /// (clamped into [0, 100]), so statements vary in how decisively the
    /// simulated classifier scores them. 0 disables the effect.
    #[serde(default)]
    pub mean_spread: f64,
    pub verbalized_certainty_law: CertaintyLaw,
    /// Optional distinct law for the single-step prompt's certainty,
    /// letting one profile produce a distribution shift between the two
    /// elicitation modes. Defaults to `verbalized_certainty_law`.
    #[serde(default)]
    pub single_step_law: Option<CertaintyLaw>,
    pub seed: u64,
}

impl Default for SimulatorProfile {
    fn default() -> Self {
        // means straddle the decision threshold so the simulated classifier
        // is imperfect and calibration numbers carry information
        SimulatorProfile {
            mean_true: 62.0,
            mean_false: 45.0,
            base_sigma: 12.0,
            sigma_per_temperature: 8.0,
            sigma_spread: 0.0,
            mean_spread: 0.0,
            verbalized_certainty_law: CertaintyLaw::Calibrated,
            single_step_law: None,
            seed: 7,
        }
    }
}

impl SimulatorProfile {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("mean_true", self.mean_true),
            ("mean_false", self.mean_false),
        ] {
            if !(0.0..=100.0).contains(&v) {
                return Err(Error::OutOfRange {
                    what: if what == "mean_true" {
                        "simulator mean_true"
                    } else {
                        "simulator mean_false"
                    },
                    value: v,
                    low: 0.0,
                    high: 100.0,
                });
            }
        }
        if self.base_sigma < 0.0 || self.sigma_per_temperature < 0.0 {
            return Err(Error::Invalid {
                what: "simulator profile",
                reason: "sigmas must be non-negative".into(),
            });
        }
        if !(0.0..1.0).contains(&self.sigma_spread) {
            return Err(Error::Invalid {
                what: "simulator profile",
                reason: "sigma_spread must lie in [0, 1)".into(),
            });
        }
        if !(0.0..=50.0).contains(&self.mean_spread) {
            return Err(Error::Invalid {
                what: "simulator profile",
                reason: "mean_spread must lie in [0, 50]".into(),
            });
        }
        Ok(())
    }

    pub fn effective_sigma(&self, temperature: f64) -> f64 {
        self.base_sigma + self.sigma_per_temperature * temperature
    }

    fn mean_for(&self, label: BinaryLabel) -> f64 {
        if label.as_bool() {
            self.mean_true
        } else {
            self.mean_false
        }
    }

    /// Closed-form probability that a rounded, clamped draw from
    /// Normal(mean, sigma) classifies to `label`. The emitted integer is
    /// at least 50 exactly when the raw draw is at least 49.5, so this is
    /// a Normal tail probability at 49.5.
    pub fn calibrated_probability_mean_sigma(
        &self,
        label: BinaryLabel,
        mean: f64,
        sigma: f64,
    ) -> f64 {
        let p_true = if sigma == 0.0 {
            if mean >= 49.5 {
                1.0
            } else {
                0.0
            }
        } else {
            1.0 - standard_normal_cdf((49.5 - mean) / sigma)
        };
        if label.as_bool() {
            p_true
        } else {
            1.0 - p_true
        }
    }

    /// [`SimulatorProfile::calibrated_probability_mean_sigma`] at the class
    /// mean and the effective sigma for `temperature`, with no per-record
    /// variation.
    pub fn calibrated_probability(&self, label: BinaryLabel, temperature: f64) -> f64 {
        self.calibrated_probability_mean_sigma(
            label,
            self.mean_for(label),
            self.effective_sigma(temperature),
        )
    }
}

/// Standard normal CDF via the Abramowitz-Stegun 26.2.17 polynomial
/// (absolute error below 7.5e-8).
pub fn standard_normal_cdf(x: f64) -> f64 {
    let t = 1.0 / (1.0 + 0.2316419 * x.abs());
    let poly = t
        * (0.319381530
            + t * (-0.356563782 + t * (1.781477937 + t * (-1.821255978 + t * 1.330274429))));
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let upper = 1.0 - pdf * poly;
    if x >= 0.0 {
        upper
    } else {
        1.0 - upper
    }
}

/// Which reply shape to emit; detected from the rendered prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PromptShape {
    ExplainScore,
    Politifact,
    ThreeWayCategorical,
    SingleStepUncertainty,
    TwoStepUncertainty,
    CoTExplainScore,
}

/// Simulator backend: resolves the record behind each prompt and emits a
/// reply matching the prompt's expected output shape.
pub struct SimulatorBackend {
    profile: SimulatorProfile,
    /// (statement, record id, binary label), longest statements first so
    /// substring resolution prefers the most specific match.
    records: Vec<(String, String, BinaryLabel)>,
}

impl SimulatorBackend {
    pub fn new(profile: SimulatorProfile, records: &[Record]) -> SimulatorBackend {
        let mut entries: Vec<(String, String, BinaryLabel)> = records
            .iter()
            .map(|r| (r.statement.clone(), r.id.clone(), r.label_binary))
            .collect();
        entries.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.1.cmp(&b.1)));
        SimulatorBackend {
            profile,
            records: entries,
        }
    }

    pub fn profile(&self) -> &SimulatorProfile {
        &self.profile
    }

    fn resolve(&self, prompt: &str) -> Result<(&str, BinaryLabel)> {
        self.records
            .iter()
            .find(|(statement, _, _)| prompt.contains(statement.as_str()))
            .map(|(_, id, label)| (id.as_str(), *label))
            .ok_or(Error::UnknownStatement)
    }

    fn detect_shape(prompt: &str) -> PromptShape {
        if prompt.contains("Proposed answer:") {
            PromptShape::TwoStepUncertainty
        } else if prompt.contains("enclosed by vertical lines") {
            PromptShape::SingleStepUncertainty
        } else if prompt.contains("Chain of Thoughts") {
            PromptShape::CoTExplainScore
        } else if prompt.contains("PANTS ON FIRE") {
            PromptShape::Politifact
        } else if prompt.contains("A) Correct") {
            PromptShape::ThreeWayCategorical
        } else {
            PromptShape::ExplainScore
        }
    }

    /// Independent RNG substream per (seed, record id, temperature, stream
    /// tag, sample index). At T = 0 the sample index is left out, making
    /// every draw for a record identical.
    fn stream(
        &self,
        record_id: &str,
        temperature: f64,
        tag: &str,
        sample_index: u32,
    ) -> ChaCha8Rng {
        let mut hasher = Sha256::new();
        hasher.update(self.profile.seed.to_le_bytes());
        hasher.update(record_id.as_bytes());
        hasher.update([0]);
        hasher.update(temperature.to_bits().to_le_bytes());
        hasher.update(tag.as_bytes());
        hasher.update([0]);
        if temperature > 0.0 {
            hasher.update(sample_index.to_le_bytes());
        }
        let digest = hasher.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(seed)
    }

    /// Fixed per-record sigma factor in [1 - spread, 1 + spread], drawn
    /// from a stream keyed only by (seed, record id).
    fn difficulty(&self, record_id: &str) -> f64 {
        if self.profile.sigma_spread == 0.0 {
            return 1.0;
        }
        let mut rng = self.stream(record_id, 0.0, "difficulty", 0);
        let u: f64 = rng.random_range(-1.0..=1.0);
        1.0 + self.profile.sigma_spread * u
    }

    fn record_sigma(&self, record_id: &str, temperature: f64) -> f64 {
        self.difficulty(record_id) * self.profile.effective_sigma(temperature)
    }

    /// Fixed per-record generating mean: the class mean plus this record's
    /// jitter, clamped into the score range.
    fn record_mean(&self, record_id: &str, label: BinaryLabel) -> f64 {
        let base = self.profile.mean_for(label);
        if self.profile.mean_spread == 0.0 {
            return base;
        }
        let mut rng = self.stream(record_id, 0.0, "mean-jitter", 0);
        let u: f64 = rng.random_range(-1.0..=1.0);
        (base + self.profile.mean_spread * u).clamp(0.0, 100.0)
    }

    fn draw_score(
        &self,
        record_id: &str,
        label: BinaryLabel,
        temperature: f64,
        sample_index: u32,
    ) -> i64 {
        let sigma = self.record_sigma(record_id, temperature);
        let mean = self.record_mean(record_id, label);
        let raw = if sigma == 0.0 {
            mean
        } else {
            let mut rng = self.stream(record_id, temperature, "truth", sample_index);
            let z: f64 = StandardNormal.sample(&mut rng);
            mean + sigma * z
        };
        raw.clamp(0.0, 100.0).round() as i64
    }

    fn certainty(
        &self,
        law: CertaintyLaw,
        record_id: &str,
        label: BinaryLabel,
        temperature: f64,
        sample_index: u32,
    ) -> i64 {
        let sigma = self.record_sigma(record_id, temperature);
        let mean = self.record_mean(record_id, label);
        match law {
            CertaintyLaw::Calibrated => (self
                .profile
                .calibrated_probability_mean_sigma(label, mean, sigma)
                * 100.0)
                .round() as i64,
            CertaintyLaw::Overconfident { offset } => {
                let p = self
                    .profile
                    .calibrated_probability_mean_sigma(label, mean, sigma)
                    * 100.0;
                (p + offset).clamp(0.0, 100.0).round() as i64
            }
            CertaintyLaw::Noise => {
                let mut rng = self.stream(record_id, temperature, "certainty", sample_index);
                let value: f64 = rng.random_range(0.0..=100.0);
                value.round() as i64
            }
        }
    }

    /// Render the reply the simulated model gives for `record` under the
    /// named prompt shape.
    pub fn simulate_reply(
        &self,
        record: &Record,
        temperature: f64,
        template: crate::elicitation::TemplateName,
        sample_index: u32,
    ) -> Result<String> {
        use crate::elicitation::TemplateName as T;
        let shape = match template {
            T::ExplainScore => PromptShape::ExplainScore,
            T::Politifact => PromptShape::Politifact,
            T::ThreeWayCategorical => PromptShape::ThreeWayCategorical,
            T::SingleStepUncertainty => PromptShape::SingleStepUncertainty,
            T::TwoStepUncertainty => PromptShape::TwoStepUncertainty,
            T::CoTExplainScore => PromptShape::CoTExplainScore,
        };
        self.reply_for(
            &record.id,
            record.label_binary,
            temperature,
            shape,
            sample_index,
        )
    }

    fn reply_for(
        &self,
        record_id: &str,
        label: BinaryLabel,
        temperature: f64,
        shape: PromptShape,
        sample_index: u32,
    ) -> Result<String> {
        self.profile.validate()?;
        let reply = match shape {
            PromptShape::ExplainScore => {
                let s = self.draw_score(record_id, label, temperature, sample_index);
                format!("Synthetic analysis of statement {record_id}. | {s}")
            }
            PromptShape::Politifact => {
                let s = self.draw_score(record_id, label, temperature, sample_index);
                let sixpoint = crate::dataset::score_to_sixpoint(s as f64)?;
                let politifact = 5 - sixpoint.index();
                format!("Synthetic analysis of statement {record_id}. | {politifact}")
            }
            PromptShape::ThreeWayCategorical => {
                let s = self.draw_score(record_id, label, temperature, sample_index);
                let letter = match crate::dataset::score_to_sixpoint(s as f64)?.index() {
                    0 | 1 => "B",
                    2 | 3 => "C",
                    _ => "A",
                };
                format!("Synthetic analysis of statement {record_id}. | {letter}")
            }
            PromptShape::SingleStepUncertainty => {
                let s = self.draw_score(record_id, label, temperature, sample_index);
                let law = self
                    .profile
                    .single_step_law
                    .unwrap_or(self.profile.verbalized_certainty_law);
                let c = self.certainty(law, record_id, label, temperature, sample_index);
                format!("Synthetic analysis of statement {record_id}. [{s}] |{c}|")
            }
            PromptShape::TwoStepUncertainty => {
                let law = self.profile.verbalized_certainty_law;
                let c = self.certainty(law, record_id, label, temperature, sample_index);
                format!("{c}")
            }
            PromptShape::CoTExplainScore => {
                let s = self.draw_score(record_id, label, temperature, sample_index);
                format!(
                    "Thought 1: synthetic premise for {record_id}. Thought 2: synthetic conclusion. [{s}]"
                )
            }
        };
        Ok(reply)
    }
}

impl Backend for SimulatorBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse> {
        let shape = Self::detect_shape(&request.prompt);
        let (record_id, label) = self.resolve(&request.prompt)?;
        let text = self.reply_for(
            record_id,
            label,
            request.temperature,
            shape,
            request.sample_index,
        )?;
        Ok(ChatResponse {
            text,
            model_id: request.model_id.clone(),
            usage: None,
            cached: false,
        })
    }

    fn id(&self) -> &str {
        "simulator"
    }
}
