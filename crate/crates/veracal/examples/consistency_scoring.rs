//! Score sample sets with the six consistency estimators, normalize over
//! the dataset, and orient into confidences.
//!
//! ```bash
//! cargo run -p veracal --example consistency_scoring
//! ```

use veracal::consistency::{
    min_max_normalize, orient_to_confidence, score, scores_csv, ConsistencyConfig, Method,
    SampleSet, ScoreRow,
};

fn main() -> anyhow::Result<()> {
    // three statements with very different agreement profiles
    let sets = [
        SampleSet::new(
            "unanimous",
            vec![80.0, 80.0, 80.0, 80.0, 80.0],
            Some(80.0),
            1.0,
        )?,
        SampleSet::new("split", vec![20.0, 80.0, 20.0, 80.0, 20.0], Some(80.0), 1.0)?,
        SampleSet::new(
            "hedging",
            vec![45.0, 52.0, 48.0, 55.0, 50.0],
            Some(50.0),
            1.0,
        )?,
    ];

    let cfg = ConsistencyConfig::default();
    let mut rows = Vec::new();
    for method in Method::ALL {
        let raws: Vec<_> = sets
            .iter()
            .map(|s| score(method, s, &cfg))
            .collect::<Result<_, _>>()?;
        let normalized = min_max_normalize(&raws)?;
        for ((set, raw), norm) in sets.iter().zip(&raws).zip(normalized) {
            let confidence = orient_to_confidence(method, norm)?;
            rows.push(ScoreRow {
                record_id: set.record_id.clone(),
                method,
                raw: raw.value,
                normalized: norm,
                confidence: confidence.value(),
            });
        }
    }

    print!("{}", scores_csv(&rows));
    println!();
    println!("note the orientation: spread estimators (norm_std, deviation_sum,");
    println!("pred_class_margin) invert, so the unanimous set always gets the");
    println!("highest confidence.");
    Ok(())
}
