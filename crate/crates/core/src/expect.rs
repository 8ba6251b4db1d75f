//! Expectations under product mixed profiles and the exact duality gap.

use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coalition::CoalitionSet;
use crate::error::Result;
use crate::game::{GameSpec, MixedProfile, ENUMERATION_BUDGET};
use crate::serde_util::one_based;
use crate::stats::mean_and_std_error;

/// How expectations over a mixed profile are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ExpectationMode {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

impl ExpectationMode {
    pub fn is_exact(self) -> bool {
        matches!(self, Self::Exact)
    }
}

/// A value with its Monte Carlo standard error (zero when exact).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// RNG for the `stream`-th independent substream of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Deterministic seed derived from `seed` and a sequence of labels (splitmix64 chaining).
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    parts.iter().fold(splitmix(seed), |acc, &p| splitmix(acc ^ splitmix(p)))
}

/// Weighted joint actions representing a product distribution, exactly or by sampling.
///
/// When built for a deviating agent, that agent's slot holds a placeholder.
#[derive(Clone, Debug)]
pub struct ProfileDraws {
    pub actions: Vec<Vec<CoalitionSet>>,
    pub weights: Vec<f64>,
    pub exact: bool,
}

impl ProfileDraws {
    pub fn new(
        game: &GameSpec,
        phi: &MixedProfile,
        skip: Option<usize>,
        mode: ExpectationMode,
        budget: u128,
    ) -> Result<Self> {
        match mode {
            ExpectationMode::Exact => Self::enumerate(game, phi, skip, budget),
            ExpectationMode::MonteCarlo { samples, seed } => {
                let stream = skip.map_or(0, |i| i as u64 + 1);
                Ok(Self::sample(game, phi, skip, samples, &mut stream_rng(seed, stream)))
            }
        }
    }

    /// Support enumeration, refused when the full joint-action space exceeds `budget`.
    pub fn enumerate(game: &GameSpec, phi: &MixedProfile, skip: Option<usize>, budget: u128) -> Result<Self> {
        game.check_budget(budget)?;
        let n = game.n();
        let supports: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                if Some(i) == skip {
                    vec![(0, 1.0)]
                } else {
                    phi.agent(i)
                        .iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0.0)
                        .map(|(t, &p)| (t, p))
                        .collect()
                }
            })
            .collect();
        let mut actions = Vec::new();
        let mut weights = Vec::new();
        let mut pos = vec![0usize; n];
        loop {
            let mut w = 1.0;
            let mut a = Vec::with_capacity(n);
            for i in 0..n {
                let (t, p) = supports[i][pos[i]];
                w *= p;
                a.push(game.action_set(i)[t]);
            }
            actions.push(a);
            weights.push(w);
            let mut i = n;
            loop {
                if i == 0 {
                    return Ok(Self {
                        actions,
                        weights,
                        exact: true,
                    });
                }
                i -= 1;
                pos[i] += 1;
                if pos[i] < supports[i].len() {
                    break;
                }
                pos[i] = 0;
            }
        }
    }

    pub fn sample(
        game: &GameSpec,
        phi: &MixedProfile,
        skip: Option<usize>,
        samples: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let samples = samples.max(1);
        let samplers = phi.samplers();
        let actions = (0..samples)
            .map(|_| {
                (0..game.n())
                    .map(|i| {
                        let t = if Some(i) == skip { 0 } else { samplers[i].sample(rng) };
                        game.action_set(i)[t]
                    })
                    .collect()
            })
            .collect();
        Self {
            actions,
            weights: vec![1.0 / samples as f64; samples],
            exact: false,
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Values of two functionals at every pure deviation of one agent, per draw of the others.
#[derive(Clone, Debug)]
pub struct DeviationSweep {
    weights: Vec<f64>,
    values: Vec<[f64; 2]>,
    width: usize,
    exact: bool,
}

impl DeviationSweep {
    /// Evaluates `f(joint, t)` with agent `i` switched to its `t`-th action for every draw.
    pub fn run<F>(game: &GameSpec, draws: &ProfileDraws, i: usize, mut f: F) -> Self
    where
        F: FnMut(&[CoalitionSet], usize) -> [f64; 2],
    {
        let set = game.action_set(i);
        let width = set.len();
        let mut values = Vec::with_capacity(draws.len() * width);
        let mut buf: Vec<CoalitionSet> = Vec::with_capacity(game.n());
        for a in &draws.actions {
            buf.clear();
            buf.extend_from_slice(a);
            for (t, &s) in set.iter().enumerate() {
                buf[i] = s;
                values.push(f(&buf, t));
            }
        }
        Self {
            weights: draws.weights.clone(),
            values,
            width,
            exact: draws.exact,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Expectation of channel `ch` at deviation `t`.
    pub fn mean(&self, t: usize, ch: usize) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(d, w)| w * self.values[d * self.width + t][ch])
            .sum()
    }

    pub fn means(&self, ch: usize) -> Vec<f64> {
        (0..self.width).map(|t| self.mean(t, ch)).collect()
    }

    /// Expectation of channel `ch` when the agent mixes with `probs`.
    pub fn mixed_mean(&self, probs: &[f64], ch: usize) -> f64 {
        probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(t, &p)| p * self.mean(t, ch))
            .sum()
    }

    /// Standard error of `X[t][dev] - Σ_s probs[s] X[s][cur]` across draws; zero when exact.
    pub fn difference_std_error(&self, t: usize, dev: usize, probs: &[f64], cur: usize) -> f64 {
        if self.exact {
            return 0.0;
        }
        let ys: Vec<f64> = (0..self.weights.len())
            .map(|d| {
                let row = &self.values[d * self.width..(d + 1) * self.width];
                row[t][dev] - probs.iter().zip(row).map(|(p, v)| p * v[cur]).sum::<f64>()
            })
            .collect();
        mean_and_std_error(&ys).1
    }
}

/// Index of the largest value, lowest index on ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (t, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = t;
        }
    }
    best
}

/// `V_i(phi)`.
pub fn expected_utility(game: &GameSpec, phi: &MixedProfile, i: usize, mode: ExpectationMode) -> Result<Estimate> {
    phi.validate(game)?;
    let draws = ProfileDraws::new(game, phi, None, mode, ENUMERATION_BUDGET)?;
    let xs: Vec<f64> = draws
        .actions
        .iter()
        .map(|a| game.utility_unchecked(a, i))
        .collect();
    if draws.exact {
        let value = xs.iter().zip(&draws.weights).map(|(x, w)| x * w).sum();
        Ok(Estimate { value, std_error: 0.0 })
    } else {
        let (value, std_error) = mean_and_std_error(&xs);
        Ok(Estimate { value, std_error })
    }
}

/// `V_i(phi_{-i}, a_i')` for every pure deviation of agent `i`.
pub fn deviation_values(game: &GameSpec, phi: &MixedProfile, i: usize, mode: ExpectationMode) -> Result<Vec<f64>> {
    phi.validate(game)?;
    Ok(game_sweep(game, phi, i, mode)?.means(0))
}

fn game_sweep(game: &GameSpec, phi: &MixedProfile, i: usize, mode: ExpectationMode) -> Result<DeviationSweep> {
    let draws = ProfileDraws::new(game, phi, Some(i), mode, ENUMERATION_BUDGET)?;
    let mut others = vec![0usize; game.k()];
    Ok(DeviationSweep::run(game, &draws, i, |a, t| {
        if t == 0 {
            others = game.sizes_without(a, i);
        }
        let d = game.utility_with(a, i, a[i], &others);
        [d, d]
    }))
}

/// Exact potential of a mixed profile, `½ Σ_i V_i(phi)`.
pub fn expected_potential(game: &GameSpec, phi: &MixedProfile) -> Result<f64> {
    phi.validate(game)?;
    let draws = ProfileDraws::enumerate(game, phi, None, ENUMERATION_BUDGET)?;
    Ok(draws
        .actions
        .iter()
        .zip(&draws.weights)
        .map(|(a, w)| w * 0.5 * (0..game.n()).map(|i| game.utility_unchecked(a, i)).sum::<f64>())
        .sum())
}

/// One agent's term of the duality gap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentGap {
    #[serde(with = "one_based")]
    pub agent: usize,
    pub best_response: CoalitionSet,
    pub best_value: f64,
    pub current_value: f64,
    pub gap: f64,
}

/// `max_i [max_{a_i'} V_i(phi_{-i}, a_i') - V_i(phi)]` with the maximizing agent and deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityGap {
    pub gap: f64,
    #[serde(with = "one_based")]
    pub agent: usize,
    pub deviation: CoalitionSet,
    pub std_error: f64,
    pub exact: bool,
    pub per_agent: Vec<AgentGap>,
}

pub fn exact_duality_gap(game: &GameSpec, phi: &MixedProfile, mode: ExpectationMode) -> Result<DualityGap> {
    phi.validate(game)?;
    let mut per_agent = Vec::with_capacity(game.n());
    let mut errors = Vec::with_capacity(game.n());
    for i in 0..game.n() {
        let sweep = game_sweep(game, phi, i, mode)?;
        let dev = sweep.means(0);
        let t = argmax(&dev);
        let current = sweep.mixed_mean(phi.agent(i), 0);
        errors.push(sweep.difference_std_error(t, 0, phi.agent(i), 0));
        per_agent.push(AgentGap {
            agent: i,
            best_response: game.action_set(i)[t],
            best_value: dev[t],
            current_value: current,
            gap: (dev[t] - current).max(0.0),
        });
    }
    let worst = argmax(&per_agent.iter().map(|g| g.gap).collect::<Vec<_>>());
    Ok(DualityGap {
        gap: per_agent[worst].gap,
        agent: worst,
        deviation: per_agent[worst].best_response,
        std_error: errors[worst],
        exact: mode.is_exact(),
        per_agent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{JointAction, MeanTable, UtilityModel};

    fn sets(v: &[&[usize]]) -> Vec<CoalitionSet> {
        v.iter().map(|s| CoalitionSet::from_one_based(s).unwrap()).collect()
    }

    fn pair_game() -> GameSpec {
        let one = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        GameSpec::with_shared_actions(
            2,
            2,
            sets(&[&[1], &[2]]),
            UtilityModel::Deterministic {
                table: MeanTable::Pairwise(vec![one.clone(), one]),
            },
        )
        .unwrap()
    }

    fn g1() -> GameSpec {
        let c1 = vec![0.0, 0.0, 1.0, -1.0, 1.0, 1.0, 1.0];
        let c2 = vec![0.0, 0.0, -0.5, -0.25, -1.0 / 6.0, -0.125, -0.1];
        GameSpec::with_shared_actions(
            6,
            2,
            sets(&[&[1], &[2]]),
            UtilityModel::Deterministic {
                table: MeanTable::BySize(vec![c1, c2]),
            },
        )
        .unwrap()
    }

    #[test]
    fn uniform_pair_value_is_half() {
        let game = pair_game();
        let phi = MixedProfile::uniform(&game);
        let v = expected_utility(&game, &phi, 0, ExpectationMode::Exact).unwrap();
        assert_eq!(v.value, 0.5);
        assert_eq!(v.std_error, 0.0);
    }

    #[test]
    fn point_mass_value_is_mean_utility() {
        let game = g1();
        let a = JointAction::new(sets(&[&[1], &[1], &[2], &[2], &[2], &[2]]));
        let phi = MixedProfile::point_mass(&game, &a).unwrap();
        for i in 0..6 {
            let v = expected_utility(&game, &phi, i, ExpectationMode::Exact).unwrap();
            assert_eq!(v.value, game.mean_utility(&a, i).unwrap());
        }
    }

    #[test]
    fn g1_five_in_first_coalition_has_gap_five() {
        let game = g1();
        let a = JointAction::new(sets(&[&[1], &[1], &[1], &[1], &[1], &[2]]));
        let phi = MixedProfile::point_mass(&game, &a).unwrap();
        let gap = exact_duality_gap(&game, &phi, ExpectationMode::Exact).unwrap();
        assert_eq!(gap.gap, 5.0);
        assert_eq!(gap.agent, 5);
        assert_eq!(gap.deviation, CoalitionSet::singleton(0));
    }

    #[test]
    fn uniform_over_singletons_with_zero_means_is_stable() {
        let game = GameSpec::with_shared_actions(
            3,
            3,
            sets(&[&[1], &[2], &[3]]),
            UtilityModel::Uniform { size_scaled: false },
        )
        .unwrap();
        let phi = MixedProfile::uniform(&game);
        let gap = exact_duality_gap(&game, &phi, ExpectationMode::Exact).unwrap();
        assert_eq!(gap.gap, 0.0);
    }

    #[test]
    fn monte_carlo_within_three_standard_errors() {
        let game = g1();
        let phi = MixedProfile::uniform(&game);
        let exact = expected_utility(&game, &phi, 2, ExpectationMode::Exact).unwrap();
        let mc = expected_utility(
            &game,
            &phi,
            2,
            ExpectationMode::MonteCarlo {
                samples: 4000,
                seed: 11,
            },
        )
        .unwrap();
        assert!((mc.value - exact.value).abs() <= 3.0 * mc.std_error);
    }

    #[test]
    fn mixed_potential_tracks_unilateral_changes() {
        let t = vec![vec![0.0, 0.3, -0.6], vec![0.3, 0.0, 0.9], vec![-0.6, 0.9, 0.0]];
        let game = GameSpec::with_shared_actions(
            3,
            2,
            sets(&[&[1], &[2], &[1, 2]]),
            UtilityModel::Deterministic {
                table: MeanTable::Pairwise(vec![t.clone(), t]),
            },
        )
        .unwrap();
        let phi = MixedProfile::new(&game, vec![vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3], vec![0.1, 0.1, 0.8]]).unwrap();
        let psi = phi.with_agent(&game, 1, vec![0.0, 0.7, 0.3]).unwrap();
        let lhs = expected_potential(&game, &phi).unwrap() - expected_potential(&game, &psi).unwrap();
        let rhs = expected_utility(&game, &phi, 1, ExpectationMode::Exact).unwrap().value
            - expected_utility(&game, &psi, 1, ExpectationMode::Exact).unwrap().value;
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn budget_refusal() {
        let game = GameSpec::with_shared_actions(
            17,
            2,
            sets(&[&[1], &[2]]),
            UtilityModel::Uniform { size_scaled: false },
        )
        .unwrap();
        let phi = MixedProfile::uniform(&game);
        assert!(matches!(
            expected_utility(&game, &phi, 0, ExpectationMode::Exact),
            Err(crate::error::PocfError::BudgetExceeded { .. })
        ));
        assert!(expected_utility(
            &game,
            &phi,
            0,
            ExpectationMode::MonteCarlo { samples: 10, seed: 0 }
        )
        .is_ok());
    }
}
