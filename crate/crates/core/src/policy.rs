//! Exploration policies and coalition-size densities.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PocfError, Result};
use crate::expect::{stream_rng, ExpectationMode, Estimate};
use crate::game::{GameSpec, JointAction, MixedProfile};
use crate::stats::mean_and_std_error;

const PROB_TOLERANCE: f64 = 1e-9;

/// Distribution over joint actions used to collect an offline dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExplorationPolicy {
    /// Every joint action equally likely.
    UniformRandom,
    /// Agent 1 uniform; every other agent fixed to the second action inserted into its set
    /// (the first when the set is a singleton).
    OneRand,
    /// Finite support with explicit probabilities.
    Explicit {
        label: String,
        support: Vec<(JointAction, f64)>,
    },
}

impl ExplorationPolicy {
    /// Short name used in dataset metadata and result rows.
    pub fn descriptor(&self) -> String {
        match self {
            Self::UniformRandom => "rand".into(),
            Self::OneRand => "one_rand".into(),
            Self::Explicit { label, .. } => label.clone(),
        }
    }

    /// Uniform distribution over the listed joint actions.
    pub fn uniform_over(label: impl Into<String>, actions: Vec<JointAction>) -> Self {
        let p = 1.0 / actions.len().max(1) as f64;
        Self::Explicit {
            label: label.into(),
            support: actions.into_iter().map(|a| (a, p)).collect(),
        }
    }

    pub fn validate(&self, game: &GameSpec) -> Result<()> {
        if let Self::Explicit { support, .. } = self {
            if support.is_empty() {
                return Err(PocfError::InvalidPolicy("empty support".into()));
            }
            let mut total = 0.0;
            for (a, p) in support {
                game.validate_action(a)
                    .map_err(|e| PocfError::InvalidPolicy(format!("support action {a:?}: {e}")))?;
                if !p.is_finite() || *p < 0.0 {
                    return Err(PocfError::InvalidPolicy(format!("probability {p} for {a:?}")));
                }
                total += p;
            }
            if (total - 1.0).abs() > PROB_TOLERANCE {
                return Err(PocfError::InvalidPolicy(format!("probabilities sum to {total}")));
            }
        }
        Ok(())
    }

    /// The policy as a product profile, when it is one.
    pub fn as_product(&self, game: &GameSpec) -> Option<MixedProfile> {
        match self {
            Self::UniformRandom => Some(MixedProfile::uniform(game)),
            Self::OneRand => {
                let idx: Vec<usize> = (0..game.n())
                    .map(|i| if game.action_set(i).len() > 1 { 1 } else { 0 })
                    .collect();
                let mut probs = MixedProfile::from_indices(game, &idx).probabilities().to_vec();
                let m = game.action_set(0).len();
                probs[0] = vec![1.0 / m as f64; m];
                Some(MixedProfile::new(game, probs).expect("uniform first agent"))
            }
            Self::Explicit { .. } => None,
        }
    }

    /// Probability of one joint action.
    pub fn probability(&self, game: &GameSpec, a: &JointAction) -> Result<f64> {
        match self {
            Self::Explicit { support, .. } => {
                Ok(support.iter().filter(|(b, _)| b == a).map(|(_, p)| p).sum())
            }
            _ => {
                let phi = self.as_product(game).expect("product policy");
                let idx = game.indices_of(a)?;
                Ok(idx.iter().enumerate().map(|(i, &t)| phi.agent(i)[t]).product())
            }
        }
    }

    /// Reusable sampler; validates the policy once.
    pub fn sampler(&self, game: &GameSpec) -> Result<PolicySampler> {
        self.validate(game)?;
        Ok(match self {
            Self::Explicit { support, .. } => PolicySampler::Support {
                actions: support.iter().map(|(a, _)| a.clone()).collect(),
                index: WeightedIndex::new(support.iter().map(|(_, p)| *p))
                    .map_err(|e| PocfError::InvalidPolicy(e.to_string()))?,
            },
            _ => {
                let phi = self.as_product(game).expect("product policy");
                PolicySampler::Product {
                    sets: game.action_sets().to_vec(),
                    agents: phi.samplers(),
                }
            }
        })
    }
}

/// Draws joint actions from an [`ExplorationPolicy`].
#[derive(Clone, Debug)]
pub enum PolicySampler {
    Product {
        sets: Vec<Vec<crate::coalition::CoalitionSet>>,
        agents: Vec<WeightedIndex<f64>>,
    },
    Support {
        actions: Vec<JointAction>,
        index: WeightedIndex<f64>,
    },
}

impl PolicySampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> JointAction {
        match self {
            Self::Product { sets, agents } => JointAction::new(
                agents
                    .iter()
                    .zip(sets)
                    .map(|(w, set)| set[w.sample(rng)])
                    .collect(),
            ),
            Self::Support { actions, index } => actions[index.sample(rng)].clone(),
        }
    }
}

/// Something that induces a distribution over joint actions.
#[derive(Clone, Copy, Debug)]
pub enum SizeSource<'a> {
    Policy(&'a ExplorationPolicy),
    Profile(&'a MixedProfile),
}

/// Poisson-binomial size law of coalition `l` under a product profile.
fn product_size_law(game: &GameSpec, phi: &MixedProfile, l: usize) -> Vec<f64> {
    let mut dist = vec![0.0; game.n() + 1];
    dist[0] = 1.0;
    for j in 0..game.n() {
        let p: f64 = game
            .action_set(j)
            .iter()
            .zip(phi.agent(j))
            .filter(|(s, _)| s.contains(l))
            .map(|(_, &q)| q)
            .sum();
        for s in (0..=j + 1).rev() {
            let stay = dist[s] * (1.0 - p);
            let join = if s > 0 { dist[s - 1] * p } else { 0.0 };
            dist[s] = stay + join;
        }
    }
    dist
}

/// Exact densities `d_l(alpha)` for every coalition `l` and size `alpha` in `0..=n`.
pub fn coalition_size_densities(game: &GameSpec, src: SizeSource<'_>) -> Result<Vec<Vec<f64>>> {
    let product = match src {
        SizeSource::Profile(phi) => {
            phi.validate(game)?;
            Some(phi.clone())
        }
        SizeSource::Policy(policy) => {
            policy.validate(game)?;
            policy.as_product(game)
        }
    };
    if let Some(phi) = product {
        return Ok((0..game.k()).map(|l| product_size_law(game, &phi, l)).collect());
    }
    let SizeSource::Policy(ExplorationPolicy::Explicit { support, .. }) = src else {
        unreachable!("non-product sources are explicit policies");
    };
    let mut dens = vec![vec![0.0; game.n() + 1]; game.k()];
    for (a, p) in support {
        for (l, s) in a.coalition_sizes(game.k()).into_iter().enumerate() {
            dens[l][s] += p;
        }
    }
    Ok(dens)
}

/// Density `d_l(alpha)`, exact or estimated by sampling.
pub fn coalition_size_density(
    game: &GameSpec,
    src: SizeSource<'_>,
    l: usize,
    alpha: usize,
    mode: ExpectationMode,
) -> Result<Estimate> {
    if l >= game.k() || alpha > game.n() {
        return Err(PocfError::Shape(format!(
            "coalition {} / size {alpha} outside the game",
            l + 1
        )));
    }
    match mode {
        ExpectationMode::Exact => Ok(Estimate {
            value: coalition_size_densities(game, src)?[l][alpha],
            std_error: 0.0,
        }),
        ExpectationMode::MonteCarlo { samples, seed } => {
            let sampler = match src {
                SizeSource::Policy(p) => p.sampler(game)?,
                SizeSource::Profile(phi) => {
                    phi.validate(game)?;
                    PolicySampler::Product {
                        sets: game.action_sets().to_vec(),
                        agents: phi.samplers(),
                    }
                }
            };
            let mut rng = stream_rng(seed, 0);
            let hits: Vec<f64> = (0..samples.max(1))
                .map(|_| {
                    let a = sampler.sample(&mut rng);
                    f64::from(u8::from(a.coalition_sizes(game.k())[l] == alpha))
                })
                .collect();
            let (value, std_error) = mean_and_std_error(&hits);
            Ok(Estimate { value, std_error })
        }
    }
}
