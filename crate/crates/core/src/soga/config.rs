use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the marginal-distribution term of the IM objective is formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalMode {
    /// Maximize the entropy of the mean prediction.
    #[default]
    Entropy,
    /// Minimize `KL(prior || mean prediction)`.
    #[serde(alias = "kl")]
    KlToPrior,
}

/// Ablation variants: both objectives, IM only, SC only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Full,
    Im,
    Sc,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::Full => "SOGA",
            Variant::Im => "SOGA-IM",
            Variant::Sc => "SOGA-SC",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SogaConfig {
    /// Weight of the local (edge) pairs.
    pub lambda1: f64,
    /// Weight of the structural-role pairs.
    pub lambda2: f64,
    /// Negatives per positive pair.
    pub neg: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub marginal: MarginalMode,
    pub prior: Option<Vec<f64>>,
    /// Weight of the conditional-entropy term (0 disables it).
    pub conditional_weight: f64,
    /// Weight of the marginal term (0 disables it).
    pub marginal_weight: f64,
    /// Divide each pair-family sum by its pair count.
    pub normalize_pairs: bool,
}

impl Default for SogaConfig {
    fn default() -> Self {
        SogaConfig {
            lambda1: 1.0,
            lambda2: 1.0,
            neg: 5,
            lr: 1e-3,
            epochs: 100,
            seed: 1,
            marginal: MarginalMode::Entropy,
            prior: None,
            conditional_weight: 1.0,
            marginal_weight: 1.0,
            normalize_pairs: true,
        }
    }
}

impl SogaConfig {
    pub fn validate(&self) -> Result<()> {
        let weights = [
            self.lambda1,
            self.lambda2,
            self.conditional_weight,
            self.marginal_weight,
        ];
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::config("objective weights must be finite and non-negative"));
        }
        if self.neg == 0 {
            return Err(Error::config("at least one negative sample per pair is required"));
        }
        if !(self.lr > 0.0) {
            return Err(Error::config("adaptation learning rate must be positive"));
        }
        match (self.marginal, &self.prior) {
            (MarginalMode::KlToPrior, None) => {
                return Err(Error::config("KL marginal mode needs a label prior"))
            }
            (_, Some(p)) => {
                let s: f64 = p.iter().sum();
                if (s - 1.0).abs() > 1e-9 || p.iter().any(|&v| !(v > 0.0)) {
                    return Err(Error::config("label prior must be strictly positive and sum to 1"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// This configuration restricted to one ablation variant.
    pub fn for_variant(&self, variant: Variant) -> SogaConfig {
        let mut cfg = self.clone();
        match variant {
            Variant::Full => {}
            Variant::Im => {
                cfg.lambda1 = 0.0;
                cfg.lambda2 = 0.0;
            }
            Variant::Sc => {
                cfg.conditional_weight = 0.0;
                cfg.marginal_weight = 0.0;
            }
        }
        cfg
    }
}
