use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

pub const DEFAULT_PRIOR_DRAWS: usize = 200_000;

/// One coordinate of an independent-marginal prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum Marginal {
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, sd: f64 },
    Gamma { shape: f64, scale: f64 },
    Point { value: f64 },
}

enum Sampler {
    Uniform(Uniform<f64>),
    Normal(Normal<f64>),
    Gamma(Gamma<f64>),
    Point(f64),
}

impl Marginal {
    fn sampler(&self) -> Result<Sampler> {
        let valid = match *self {
            Marginal::Uniform { low, high } => low < high,
            Marginal::Normal { sd, .. } => sd > 0.0,
            Marginal::Gamma { shape, scale } => shape > 0.0 && scale > 0.0,
            Marginal::Point { value } => value.is_finite(),
        };
        if !valid {
            return Err(Error::Invalid(format!("invalid prior marginal {self:?}")));
        }
        let bad = |e: &dyn std::fmt::Display| Error::Invalid(format!("{self:?}: {e}"));
        Ok(match *self {
            Marginal::Uniform { low, high } => {
                Sampler::Uniform(Uniform::new(low, high).map_err(|e| bad(&e))?)
            }
            Marginal::Normal { mean, sd } => {
                Sampler::Normal(Normal::new(mean, sd).map_err(|e| bad(&e))?)
            }
            Marginal::Gamma { shape, scale } => {
                Sampler::Gamma(Gamma::new(shape, scale).map_err(|e| bad(&e))?)
            }
            Marginal::Point { value } => Sampler::Point(value),
        })
    }
}

impl Sampler {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Sampler::Uniform(d) => d.sample(rng),
            Sampler::Normal(d) => d.sample(rng),
            Sampler::Gamma(d) => d.sample(rng),
            Sampler::Point(v) => *v,
        }
    }
}

fn default_draws() -> usize {
    DEFAULT_PRIOR_DRAWS
}

/// Prior on θ used for EW atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorSpec {
    /// Equally weighted θ samples.
    Samples(Vec<Vec<f64>>),
    /// Independent marginals integrated by fixed-seed Monte Carlo.
    Product {
        marginals: Vec<Marginal>,
        #[serde(default = "default_draws")]
        draws: usize,
        #[serde(default)]
        seed: u64,
    },
}

impl PriorSpec {
    /// Calls `f` on every θ draw in a deterministic order.
    pub fn for_each_draw<F>(&self, p: usize, mut f: F) -> Result<()>
    where
        F: FnMut(&[f64]) -> Result<()>,
    {
        match self {
            PriorSpec::Samples(samples) => {
                if samples.is_empty() {
                    return Err(Error::Invalid("prior sample list is empty".into()));
                }
                for theta in samples {
                    check_len(p, theta.len(), "prior sample length")?;
                    f(theta)?;
                }
            }
            PriorSpec::Product {
                marginals,
                draws,
                seed,
            } => {
                check_len(p, marginals.len(), "prior marginal count")?;
                let samplers: Vec<Sampler> = marginals
                    .iter()
                    .map(Marginal::sampler)
                    .collect::<Result<_>>()?;
                if samplers.iter().all(|s| matches!(s, Sampler::Point(_))) {
                    let theta: Vec<f64> = marginals
                        .iter()
                        .map(|m| match m {
                            Marginal::Point { value } => *value,
                            _ => unreachable!(),
                        })
                        .collect();
                    return f(&theta);
                }
                if *draws == 0 {
                    return Err(Error::Invalid("prior draw count must be positive".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut theta = vec![0.0; p];
                for _ in 0..*draws {
                    for (t, s) in theta.iter_mut().zip(&samplers) {
                        *t = s.draw(&mut rng);
                    }
                    f(&theta)?;
                }
            }
        }
        Ok(())
    }

    /// Materialized θ draws.
    pub fn draws(&self, p: usize) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::new();
        self.for_each_draw(p, |t| {
            out.push(t.to_vec());
            Ok(())
        })?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_reproducible() {
        let prior = PriorSpec::Product {
            marginals: vec![
                Marginal::Normal { mean: 0.0, sd: 1.0 },
                Marginal::Gamma {
                    shape: 1.0,
                    scale: 2.0,
                },
            ],
            draws: 10,
            seed: 3,
        };
        assert_eq!(prior.draws(2).unwrap(), prior.draws(2).unwrap());
        assert!(prior.draws(2).unwrap().iter().all(|t| t[1] > 0.0));
    }

    #[test]
    fn moments_are_close() {
        let prior = PriorSpec::Product {
            marginals: vec![
                Marginal::Uniform {
                    low: -1.0,
                    high: 5.0,
                },
                Marginal::Gamma {
                    shape: 1.0,
                    scale: 2.0,
                },
            ],
            draws: 100_000,
            seed: 0,
        };
        let d = prior.draws(2).unwrap();
        let mean = |k: usize| d.iter().map(|t| t[k]).sum::<f64>() / d.len() as f64;
        assert!((mean(0) - 2.0).abs() < 0.03);
        assert!((mean(1) - 2.0).abs() < 0.03);
    }

    #[test]
    fn wrong_marginal_count_errors() {
        let prior = PriorSpec::Product {
            marginals: vec![Marginal::Point { value: 1.0 }],
            draws: 5,
            seed: 0,
        };
        assert!(prior.draws(2).is_err());
    }

    #[test]
    fn invalid_parameters_error() {
        let prior = PriorSpec::Product {
            marginals: vec![Marginal::Normal {
                mean: 0.0,
                sd: -1.0,
            }],
            draws: 5,
            seed: 0,
        };
        assert!(prior.draws(1).is_err());
    }

    #[test]
    fn json_defaults_and_unknown_names() {
        let p: PriorSpec = serde_json::from_str(
            r#"{"product":{"marginals":[{"dist":"uniform","low":-2,"high":2}]}}"#,
        )
        .unwrap();
        assert!(matches!(
            p,
            PriorSpec::Product {
                draws: DEFAULT_PRIOR_DRAWS,
                seed: 0,
                ..
            }
        ));
        assert!(serde_json::from_str::<PriorSpec>(
            r#"{"product":{"marginals":[{"dist":"cauchy","loc":0}]}}"#
        )
        .is_err());
    }
}
