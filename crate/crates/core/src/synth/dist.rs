use rand::Rng;
use rand_distr::{Distribution as _, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_ATTEMPTS: usize = 1000;

/// Non-negative sampling distributions used by workload and noise profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution {
    Constant {
        value: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Normal restricted to `[lo, hi]` by rejection.
    TruncatedNormal {
        mean: f64,
        std: f64,
        lo: f64,
        hi: f64,
    },
    /// `exp(N(mu, sigma^2))`.
    LogNormal {
        mu: f64,
        sigma: f64,
    },
    /// `first` with probability `weight`, otherwise `second`.
    Mixture {
        weight: f64,
        first: Box<Distribution>,
        second: Box<Distribution>,
    },
}

impl Distribution {
    pub fn validate(&self) -> std::result::Result<(), String> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            Distribution::Constant { value } if finite(&[*value]) && *value >= 0.0 => Ok(()),
            Distribution::Uniform { lo, hi } if finite(&[*lo, *hi]) && 0.0 <= *lo && lo <= hi => {
                Ok(())
            }
            Distribution::TruncatedNormal { mean, std, lo, hi }
                if finite(&[*mean, *std, *lo, *hi]) && *std >= 0.0 && 0.0 <= *lo && lo <= hi =>
            {
                Ok(())
            }
            Distribution::LogNormal { mu, sigma } if finite(&[*mu, *sigma]) && *sigma >= 0.0 => {
                Ok(())
            }
            Distribution::Mixture {
                weight,
                first,
                second,
            } if (0.0..=1.0).contains(weight) => {
                first.validate()?;
                second.validate()
            }
            other => Err(format!("{other:?} can produce invalid or negative samples")),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match self {
            Distribution::Constant { value } => Ok(*value),
            Distribution::Uniform { lo, hi } => Ok(if lo == hi {
                *lo
            } else {
                rng.random_range(*lo..*hi)
            }),
            Distribution::TruncatedNormal { mean, std, lo, hi } => {
                let normal = Normal::new(*mean, *std).map_err(|e| self.degenerate(e))?;
                for _ in 0..MAX_ATTEMPTS {
                    let x = normal.sample(rng);
                    if (*lo..=*hi).contains(&x) {
                        return Ok(x);
                    }
                }
                Err(Error::DegenerateProfile(format!("{self:?}")))
            }
            Distribution::LogNormal { mu, sigma } => {
                let d = LogNormal::new(*mu, *sigma).map_err(|e| self.degenerate(e))?;
                Ok(d.sample(rng))
            }
            Distribution::Mixture {
                weight,
                first,
                second,
            } => {
                if rng.random::<f64>() < *weight {
                    first.sample(rng)
                } else {
                    second.sample(rng)
                }
            }
        }
    }

    fn degenerate(&self, e: impl std::fmt::Display) -> Error {
        Error::DegenerateProfile(format!("{self:?}: {e}"))
    }
}
