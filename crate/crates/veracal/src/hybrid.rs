//! Hybrid confidence fusion and trade-off search.
//!
//! The hybrid score is the convex combination
//! `alpha * u_obs + (1 - alpha) * u_verb` of a consistency-derived
//! confidence and a verbalized one. The trade-off `alpha` is grid-searched
//! by k-fold cross-validation on the validation-fold calibration error,
//! with ties broken toward larger `alpha` (favoring the observed signal).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::consistency::ConfidenceScore;
use crate::error::{Error, Result};
use crate::metrics::{brier, ece, LabeledPrediction};

/// Per-record inputs to the fusion: both confidences plus the correctness
/// outcome the search optimizes against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridInput {
    pub record_id: String,
    pub u_obs: ConfidenceScore,
    pub u_verb: ConfidenceScore,
    pub correct: bool,
}

/// Score two fused scores within 1e-12 as equal for tie-breaking.
const TIE_EPS: f64 = 1e-12;

/// Convex combination of the observed and verbalized confidences. The
/// endpoints reproduce the pure scores bit-exactly.
pub fn combine(
    u_obs: ConfidenceScore,
    u_verb: ConfidenceScore,
    alpha: f64,
) -> Result<ConfidenceScore> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::OutOfRange {
            what: "alpha",
            value: alpha,
            low: 0.0,
            high: 1.0,
        });
    }
    if alpha == 0.0 {
        return Ok(u_verb);
    }
    if alpha == 1.0 {
        return Ok(u_obs);
    }
    let value = alpha * u_obs.value() + (1.0 - alpha) * u_verb.value();
    ConfidenceScore::new(value.clamp(0.0, 1.0))
}

/// Partition `0..n` into `k` disjoint folds of sizes differing by at most
/// one, after a seeded shuffle. Deterministic per seed.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 {
        return Err(Error::Invalid {
            what: "fold count",
            reason: "k must be positive".into(),
        });
    }
    if n < k {
        return Err(Error::InsufficientData(format!(
            "cannot split {n} items into {k} folds"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);

    let base = n / k;
    let remainder = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < remainder);
        folds.push(indices[start..start + size].to_vec());
        start += size;
    }
    Ok(folds)
}

/// What the cross-validated search minimizes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchObjective {
    #[default]
    Ece,
    Brier,
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub alpha: f64,
    pub mean_ece: f64,
}

/// Result of the cross-validated alpha search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSearchResult {
    pub alpha_star: f64,
    /// Validation score per fold at `alpha_star`, under the objective.
    pub per_fold_ece: Vec<f64>,
    /// Mean validation score per evaluated alpha.
    pub grid: Vec<GridPoint>,
    pub objective: SearchObjective,
}

/// Evenly spaced alphas 0.0, 0.1, .., 1.0.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("alpha grid"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid {
            what: "alpha grid",
            reason: "must be strictly ascending".into(),
        });
    }
    if grid[0] != 0.0 || *grid.last().unwrap() != 1.0 {
        return Err(Error::Invalid {
            what: "alpha grid",
            reason: "must cover [0, 1] including both endpoints".into(),
        });
    }
    Ok(())
}

fn objective_score(
    inputs: &[HybridInput],
    idx: &[usize],
    alpha: f64,
    objective: SearchObjective,
    m_bins: usize,
) -> Result<f64> {
    let preds: Vec<LabeledPrediction> = idx
        .iter()
        .map(|&i| {
            let item = &inputs[i];
            Ok(LabeledPrediction {
                record_id: item.record_id.clone(),
                confidence: combine(item.u_obs, item.u_verb, alpha)?,
                correct: item.correct,
            })
        })
        .collect::<Result<_>>()?;
    match objective {
        SearchObjective::Ece => ece(&preds, m_bins),
        SearchObjective::Brier => brier(&preds),
    }
}

/// Grid-search `alpha` by k-fold cross-validation: every grid point is
/// scored as the mean validation-fold objective; the argmin wins, with ties
/// (within 1e-12) resolved toward larger alpha. Requires every fold to
/// support `m_bins` quantile bins.
pub fn search_alpha(
    inputs: &[HybridInput],
    grid: &[f64],
    k: usize,
    seed: u64,
    objective: SearchObjective,
    m_bins: usize,
) -> Result<AlphaSearchResult> {
    validate_grid(grid)?;
    let n = inputs.len();
    if k == 0 || n < k * m_bins {
        return Err(Error::InsufficientData(format!(
            "alpha search needs at least k*m = {} items for {k}-fold validation with {m_bins} bins, got {n}",
            k * m_bins
        )));
    }
    let folds = kfold_split(n, k, seed)?;

    let mut best: Option<(f64, f64)> = None; // (alpha, mean score)
    let mut curve = Vec::with_capacity(grid.len());
    for &alpha in grid {
        let mut total = 0.0;
        for fold in &folds {
            total += objective_score(inputs, fold, alpha, objective, m_bins)?;
        }
        let mean = total / k as f64;
        curve.push(GridPoint {
            alpha,
            mean_ece: mean,
        });
        best = match best {
            None => Some((alpha, mean)),
            Some((_, best_score)) if mean <= best_score + TIE_EPS => {
                Some((alpha, mean.min(best_score)))
            }
            keep => keep,
        };
    }

    let (alpha_star, _) = best.unwrap();
    let per_fold: Vec<f64> = folds
        .iter()
        .map(|fold| objective_score(inputs, fold, alpha_star, objective, m_bins))
        .collect::<Result<_>>()?;

    Ok(AlphaSearchResult {
        alpha_star,
        per_fold_ece: per_fold,
        grid: curve,
        objective,
    })
}

/// Strict out-of-fold protocol: each fold's items get the alpha selected on
/// the other folds' pooled data. Returns the fused confidence per input
/// (input order) and the alpha chosen for each fold.
pub fn out_of_fold_confidences(
    inputs: &[HybridInput],
    grid: &[f64],
    k: usize,
    seed: u64,
    objective: SearchObjective,
    m_bins: usize,
) -> Result<(Vec<ConfidenceScore>, Vec<f64>)> {
    validate_grid(grid)?;
    let n = inputs.len();
    if k == 0 || n < k * m_bins {
        return Err(Error::InsufficientData(format!(
            "out-of-fold protocol needs at least {} items, got {n}",
            k * m_bins
        )));
    }
    let folds = kfold_split(n, k, seed)?;
    let mut fused: Vec<Option<ConfidenceScore>> = vec![None; n];
    let mut fold_alphas = Vec::with_capacity(k);

    for fold in &folds {
        let train: Vec<usize> = folds
            .iter()
            .filter(|other| !std::ptr::eq(*other, fold))
            .flatten()
            .copied()
            .collect();
        let mut best: Option<(f64, f64)> = None;
        for &alpha in grid {
            let score = objective_score(inputs, &train, alpha, objective, m_bins)?;
            best = match best {
                None => Some((alpha, score)),
                Some((_, best_score)) if score <= best_score + TIE_EPS => {
                    Some((alpha, score.min(best_score)))
                }
                keep => keep,
            };
        }
        let (alpha, _) = best.unwrap();
        fold_alphas.push(alpha);
        for &i in fold {
            let item = &inputs[i];
            fused[i] = Some(combine(item.u_obs, item.u_verb, alpha)?);
        }
    }

    Ok((fused.into_iter().map(|c| c.unwrap()).collect(), fold_alphas))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn conf(v: f64) -> ConfidenceScore {
        ConfidenceScore::new(v).unwrap()
    }

    #[test]
    fn combine_endpoints_bit_exact() {
        let obs = conf(0.873_214_650_001);
        let verb = conf(0.112_998_231);
        assert_eq!(
            combine(obs, verb, 1.0).unwrap().value().to_bits(),
            obs.value().to_bits()
        );
        assert_eq!(
            combine(obs, verb, 0.0).unwrap().value().to_bits(),
            verb.value().to_bits()
        );
    }

    #[test]
    fn combine_midpoint() {
        let fused = combine(conf(0.8), conf(0.4), 0.5).unwrap();
        assert!((fused.value() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn combine_rejects_bad_alpha() {
        assert!(combine(conf(0.5), conf(0.5), 1.5).is_err());
        assert!(combine(conf(0.5), conf(0.5), -0.1).is_err());
    }

    #[test]
    fn combine_linear_in_alpha() {
        let (a, b) = (conf(0.9), conf(0.2));
        let f = |alpha: f64| combine(a, b, alpha).unwrap().value();
        // midpoint of two alphas equals mean of the two fused values
        for (a1, a2) in [(0.1, 0.5), (0.2, 0.8), (0.0, 1.0)] {
            let mid = f((a1 + a2) / 2.0);
            assert!((mid - (f(a1) + f(a2)) / 2.0).abs() < 1e-12);
        }
        // monotone in each argument
        assert!(
            combine(conf(0.9), b, 0.3).unwrap().value()
                >= combine(conf(0.1), b, 0.3).unwrap().value()
        );
        assert!(
            combine(a, conf(0.9), 0.3).unwrap().value()
                >= combine(a, conf(0.1), 0.3).unwrap().value()
        );
    }

    #[test]
    fn kfold_partitions() {
        let folds = kfold_split(8, 4, 1).unwrap();
        assert_eq!(folds.len(), 4);
        assert!(folds.iter().all(|f| f.len() == 2));
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn kfold_uneven_sizes() {
        let folds = kfold_split(10, 4, 1).unwrap();
        let mut sizes: Vec<usize> = folds.iter().map(|f| f.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 3, 3]);
    }

    #[test]
    fn kfold_deterministic_per_seed() {
        assert_eq!(
            kfold_split(20, 4, 9).unwrap(),
            kfold_split(20, 4, 9).unwrap()
        );
        assert_ne!(
            kfold_split(20, 4, 9).unwrap(),
            kfold_split(20, 4, 10).unwrap()
        );
    }

    #[test]
    fn kfold_rejects_n_below_k() {
        assert!(kfold_split(3, 4, 0).is_err());
    }

    /// Synthetic construction: u_obs perfectly calibrated (correctness is
    /// Bernoulli(u_obs)) with a U-shaped marginal so the signal carries real
    /// spread, u_verb independent uniform noise.
    fn calibrated_vs_noise(n: usize, seed: u64, swap: bool) -> Vec<HybridInput> {
        use rand_distr::Distribution;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let marginal = rand_distr::Beta::new(0.4, 0.4).unwrap();
        (0..n)
            .map(|i| {
                let calibrated: f64 = marginal.sample(&mut rng);
                let noise: f64 = rng.random_range(0.0..=1.0);
                let correct = rng.random_range(0.0..1.0) < calibrated;
                let (u_obs, u_verb) = if swap {
                    (noise, calibrated)
                } else {
                    (calibrated, noise)
                };
                HybridInput {
                    record_id: format!("r{i}"),
                    u_obs: conf(u_obs),
                    u_verb: conf(u_verb),
                    correct,
                }
            })
            .collect()
    }

    #[test]
    fn search_prefers_calibrated_side() {
        let inputs = calibrated_vs_noise(2000, 42, false);
        let result = search_alpha(
            &inputs,
            &default_alpha_grid(),
            4,
            7,
            SearchObjective::Ece,
            10,
        )
        .unwrap();
        assert!(
            result.alpha_star >= 0.8,
            "alpha_star = {}",
            result.alpha_star
        );

        let swapped = calibrated_vs_noise(2000, 42, true);
        let result = search_alpha(
            &swapped,
            &default_alpha_grid(),
            4,
            7,
            SearchObjective::Ece,
            10,
        )
        .unwrap();
        assert!(
            result.alpha_star <= 0.2,
            "alpha_star = {}",
            result.alpha_star
        );
    }

    #[test]
    fn degenerate_identity_ties_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let inputs: Vec<HybridInput> = (0..200)
            .map(|i| {
                let v: f64 = rng.random_range(0.0..=1.0);
                HybridInput {
                    record_id: format!("r{i}"),
                    u_obs: conf(v),
                    u_verb: conf(v),
                    correct: rng.random_range(0.0..1.0) < v,
                }
            })
            .collect();
        let result = search_alpha(
            &inputs,
            &default_alpha_grid(),
            4,
            3,
            SearchObjective::Ece,
            10,
        )
        .unwrap();
        assert_eq!(result.alpha_star, 1.0);
    }

    #[test]
    fn search_never_loses_to_endpoints() {
        for seed in 0..5 {
            let inputs = calibrated_vs_noise(400, seed, seed % 2 == 0);
            let result = search_alpha(
                &inputs,
                &default_alpha_grid(),
                4,
                11,
                SearchObjective::Ece,
                10,
            )
            .unwrap();
            let best = result
                .grid
                .iter()
                .map(|p| p.mean_ece)
                .fold(f64::MAX, f64::min);
            let at_zero = result.grid.first().unwrap().mean_ece;
            let at_one = result.grid.last().unwrap().mean_ece;
            assert!(best <= at_zero + 1e-12);
            assert!(best <= at_one + 1e-12);
        }
    }

    #[test]
    fn search_rerun_bit_identical() {
        let inputs = calibrated_vs_noise(200, 8, false);
        let a = search_alpha(
            &inputs,
            &default_alpha_grid(),
            4,
            13,
            SearchObjective::Ece,
            10,
        )
        .unwrap();
        let b = search_alpha(
            &inputs,
            &default_alpha_grid(),
            4,
            13,
            SearchObjective::Ece,
            10,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn search_requires_enough_data() {
        let inputs = calibrated_vs_noise(30, 1, false);
        assert!(matches!(
            search_alpha(
                &inputs,
                &default_alpha_grid(),
                4,
                1,
                SearchObjective::Ece,
                10
            ),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn grid_validation() {
        let inputs = calibrated_vs_noise(100, 2, false);
        for grid in [
            vec![],
            vec![0.0, 0.5],
            vec![0.5, 1.0],
            vec![0.0, 0.5, 0.5, 1.0],
        ] {
            assert!(search_alpha(&inputs, &grid, 4, 1, SearchObjective::Ece, 10).is_err());
        }
    }

    #[test]
    fn out_of_fold_covers_every_item() {
        let inputs = calibrated_vs_noise(400, 3, false);
        let (fused, fold_alphas) = out_of_fold_confidences(
            &inputs,
            &default_alpha_grid(),
            4,
            17,
            SearchObjective::Ece,
            10,
        )
        .unwrap();
        assert_eq!(fused.len(), inputs.len());
        assert_eq!(fold_alphas.len(), 4);
        // noise on the verbalized side: folds lean observed (allow one
        // noisy fold at this n)
        let high = fold_alphas.iter().filter(|&&a| a >= 0.5).count();
        assert!(high >= 3, "fold alphas {fold_alphas:?}");
    }

    #[test]
    fn brier_objective_available() {
        let inputs = calibrated_vs_noise(400, 4, false);
        let result = search_alpha(
            &inputs,
            &default_alpha_grid(),
            4,
            19,
            SearchObjective::Brier,
            10,
        )
        .unwrap();
        assert!(result.alpha_star >= 0.8);
        assert_eq!(result.objective, SearchObjective::Brier);
    }
}
