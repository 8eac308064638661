//! Synthetic four-arm treatment data with a known outcome model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::treatment::{Dataset, PropensityMode, Sample, TreatmentError};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] TreatmentError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum OutcomeBoundRule {
    MaxObserved,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub covariates: usize,
    pub arms: usize,
    pub distinct: usize,
    pub samples: usize,
    pub seed: u64,
    pub noise_mu: f64,
    pub noise_sigma: f64,
    pub outcome_bound: OutcomeBoundRule,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            covariates: 30,
            arms: 4,
            distinct: 25,
            samples: 1000,
            seed: 0,
            noise_mu: 0.0,
            noise_sigma: 0.001,
            outcome_bound: OutcomeBoundRule::MaxObserved,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Config(m));
        if self.arms != 4 {
            return bad(format!("the outcome model has 4 arms, got {}", self.arms));
        }
        if self.covariates < 6 {
            return bad(format!("the outcome model reads x_5, need at least 6 covariates, got {}", self.covariates));
        }
        if self.distinct == 0 || self.samples == 0 {
            return bad("distinct and samples must be positive".into());
        }
        if self.samples % self.distinct != 0 {
            return bad(format!(
                "samples ({}) must be divisible by distinct covariates ({})",
                self.samples, self.distinct
            ));
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite() && self.noise_mu.is_finite()) {
            return bad("noise parameters must be finite with positive scale".into());
        }
        if let OutcomeBoundRule::Fixed(m) = self.outcome_bound {
            if !(m > 0.0 && m.is_finite()) {
                return bad("fixed outcome bound must be positive".into());
            }
        }
        Ok(())
    }
}

/// Noise-free outcome for covariates `x` under zero-based arm `arm`.
pub fn outcome_mean(x: &[f64], arm: usize) -> f64 {
    let base = x[5] + (2.0 + 0.2 * x[0] - 0.1 * x[1] + 2.0 * x[0] * x[1]).exp();
    let effect = match arm {
        0 => -0.8 + 1.8 * x[1] - 0.2 * x[2],
        1 => -1.0 + 2.1 * x[1] - 1.2 * x[0],
        2 => -0.8 + 1.3 * x[0] * x[2],
        3 => -0.4 + 1.8 * x[0] - 1.2 * x[1] * x[2],
        _ => panic!("arm {arm} out of range"),
    };
    base + effect
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: SynthConfig,
    pub samples_per_covariate: usize,
    pub arm_counts: Vec<usize>,
    pub max_outcome: f64,
    /// M to use downstream, if the config fixes one.
    pub outcome_bound: Option<f64>,
    pub clamped_outcomes: usize,
}

pub fn generate(config: &SynthConfig) -> Result<(Dataset, Manifest), SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = LogNormal::new(config.noise_mu, config.noise_sigma)
        .map_err(|e| SynthError::Config(format!("noise: {e}")))?;
    let table: Vec<Vec<f64>> = (0..config.distinct)
        .map(|_| (0..config.covariates).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let per = config.samples / config.distinct;
    let mut samples = Vec::with_capacity(config.samples);
    let mut arm_counts = vec![0; config.arms];
    let mut clamped = 0;
    for (c, x) in table.iter().enumerate() {
        for _ in 0..per {
            let arm = rng.gen_range(0..config.arms);
            let mut y = outcome_mean(x, arm) + noise.sample(&mut rng);
            if y < 0.0 {
                clamped += 1;
                y = 0.0;
            }
            arm_counts[arm] += 1;
            samples.push(Sample { covariate_id: c, x: x.clone(), treatment: arm, outcome: y });
        }
    }
    if clamped > 0 {
        log::warn!("{clamped} negative outcomes clamped to 0 (seed {})", config.seed);
    }
    let mut data = Dataset::new(samples, config.arms)?;
    data.set_propensities(&PropensityMode::Uniform)?;
    let max_outcome = data.max_outcome();
    let outcome_bound = match config.outcome_bound {
        OutcomeBoundRule::MaxObserved => None,
        OutcomeBoundRule::Fixed(m) => {
            if m < max_outcome {
                return Err(SynthError::Config(format!("fixed bound {m} below max outcome {max_outcome}")));
            }
            Some(m)
        }
    };
    let manifest = Manifest {
        config: config.clone(),
        samples_per_covariate: per,
        arm_counts,
        max_outcome,
        outcome_bound,
        clamped_outcomes: clamped,
    };
    Ok((data, manifest))
}
