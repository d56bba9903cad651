//! Drive the seeded simulator backend through the cached client: repeated
//! stochastic draws, temperature-controlled spread, and cache replay.
//!
//! ```bash
//! cargo run -p veracal --example simulator_sampling
//! ```

use std::collections::BTreeMap;

use veracal::client::{
    ChatRequest, ModelClient, ResponseCache, SimulatorBackend, SimulatorProfile,
};
use veracal::dataset::{Label6, Record};
use veracal::elicitation::{parse_explain_score, TemplateName, TemplateSet};

fn main() -> anyhow::Result<()> {
    let records = vec![
        Record::new(
            "t1",
            "The reservoir is at record capacity.",
            Label6::True,
            BTreeMap::new(),
        )?,
        Record::new(
            "f1",
            "The tax was abolished in 1999.",
            Label6::False,
            BTreeMap::new(),
        )?,
    ];
    let profile = SimulatorProfile::default();
    println!(
        "profile: means {}/{}, sigma(T) = {} + {}*T",
        profile.mean_true, profile.mean_false, profile.base_sigma, profile.sigma_per_temperature
    );

    let dir = tempfile::tempdir()?;
    let cache = ResponseCache::open(dir.path().join("cache.jsonl"))?;
    let client = ModelClient::with_cache(Box::new(SimulatorBackend::new(profile, &records)), cache);

    let templates = TemplateSet::builtin();
    let prompt = templates.render(TemplateName::ExplainScore, &records[0].statement, None)?;

    for temperature in [0.0, 0.5, 1.0] {
        let request = ChatRequest::new("simulated-classifier", prompt.clone(), temperature, 256)?;
        let responses = client.sample_k(&request, 8)?;
        let scores: Vec<f64> = responses
            .iter()
            .map(|r| parse_explain_score(&r.text).truth_score().unwrap())
            .collect();
        println!("T = {temperature}: scores {scores:?}");
    }

    // a warm cache replays every reply without touching the backend
    let request = ChatRequest::new("simulated-classifier", prompt, 1.0, 256)?;
    let replayed = client.sample_k(&request, 8)?;
    println!(
        "replayed from cache: {} (cache hits so far: {})",
        replayed.iter().all(|r| r.cached),
        client.cache().unwrap().hits()
    );
    Ok(())
}
