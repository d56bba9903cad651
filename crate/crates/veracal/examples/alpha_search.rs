//! Fuse an observed and a verbalized confidence and grid-search the
//! trade-off weight by 4-fold cross-validation.
//!
//! ```bash
//! cargo run -p veracal --example alpha_search
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use veracal::consistency::ConfidenceScore;
use veracal::hybrid::{combine, default_alpha_grid, search_alpha, HybridInput, SearchObjective};

fn main() -> anyhow::Result<()> {
    // observed side: perfectly calibrated with a spread-out marginal;
    // verbalized side: pure uniform noise
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let marginal = Beta::new(0.4, 0.4).unwrap();
    let inputs: Vec<HybridInput> = (0..2000)
        .map(|i| {
            let observed: f64 = marginal.sample(&mut rng);
            let noise: f64 = rng.random_range(0.0..=1.0);
            HybridInput {
                record_id: format!("r{i}"),
                u_obs: ConfidenceScore::new(observed).unwrap(),
                u_verb: ConfidenceScore::new(noise).unwrap(),
                correct: rng.random_range(0.0..1.0) < observed,
            }
        })
        .collect();

    let result = search_alpha(
        &inputs,
        &default_alpha_grid(),
        4,
        7,
        SearchObjective::Ece,
        10,
    )?;
    println!("alpha  mean validation ece");
    for point in &result.grid {
        let marker = if point.alpha == result.alpha_star {
            "  <- alpha*"
        } else {
            ""
        };
        println!("{:>5.1}  {:.4}{marker}", point.alpha, point.mean_ece);
    }
    println!("\nper-fold score at alpha*: {:?}", result.per_fold_ece);

    // the endpoints reproduce the pure scores bit-exactly
    let item = &inputs[0];
    assert_eq!(combine(item.u_obs, item.u_verb, 1.0)?, item.u_obs);
    assert_eq!(combine(item.u_obs, item.u_verb, 0.0)?, item.u_verb);
    println!("endpoints reproduce the pure confidences exactly");
    Ok(())
}
