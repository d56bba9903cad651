//! Calibration metrics on synthetic predictions: quantile-binned ECE,
//! Brier, AUC, the reliability table, and the two-sample K-S test.
//!
//! ```bash
//! cargo run -p veracal --example calibration_metrics
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use veracal::consistency::ConfidenceScore;
use veracal::metrics::{
    auc, brier, calibration_curve_csv, ece, ks_two_sample, quantile_bins, LabeledPrediction,
};

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 5000;

    // a perfectly calibrated predictor: correctness ~ Bernoulli(confidence)
    let calibrated: Vec<LabeledPrediction> = (0..n)
        .map(|i| {
            let c: f64 = rng.random_range(0.0..=1.0);
            LabeledPrediction {
                record_id: format!("r{i}"),
                confidence: ConfidenceScore::new(c).unwrap(),
                correct: rng.random_range(0.0..1.0) < c,
            }
        })
        .collect();

    // the same predictor shifted up by 0.2: systematically overconfident
    let overconfident: Vec<LabeledPrediction> = calibrated
        .iter()
        .map(|p| LabeledPrediction {
            record_id: p.record_id.clone(),
            confidence: ConfidenceScore::new((p.confidence.value() + 0.2).min(1.0)).unwrap(),
            correct: p.correct,
        })
        .collect();

    for (name, preds) in [
        ("calibrated", &calibrated),
        ("overconfident", &overconfident),
    ] {
        let scores: Vec<f64> = preds.iter().map(|p| p.confidence.value()).collect();
        let labels: Vec<bool> = preds.iter().map(|p| p.correct).collect();
        println!(
            "{name:<14} ece {:.4}  brier {:.4}  auc {:.4}",
            ece(preds, 10)?,
            brier(preds)?,
            auc(&scores, &labels)?
        );
    }

    println!("\nreliability table of the calibrated predictor:");
    print!(
        "{}",
        calibration_curve_csv(&quantile_bins(&calibrated, 10)?)
    );

    let a: Vec<f64> = calibrated.iter().map(|p| p.confidence.value()).collect();
    let b: Vec<f64> = overconfident.iter().map(|p| p.confidence.value()).collect();
    let (d, p) = ks_two_sample(&a, &b)?;
    println!("\nk-s test between the two confidence distributions: D = {d:.4}, p = {p:.2e}");
    Ok(())
}
