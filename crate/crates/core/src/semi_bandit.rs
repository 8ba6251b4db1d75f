//! Empirical-mean estimator with Hoeffding bonuses, coalition-size coverage and its bound.

use serde::{Deserialize, Serialize};

use crate::coalition::CoalitionSet;
use crate::dataset::{Dataset, Feedback, FeedbackKind};
use crate::error::{PocfError, Result};
use crate::game::{GameSpec, JointAction, MixedProfile};
use crate::policy::{coalition_size_densities, ExplorationPolicy, SizeSource};
use crate::serde_util::one_based;

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(PocfError::Config(format!("delta = {delta} outside (0, 1]")))
    }
}

/// Fitted co-membership counts and empirical means.
///
/// `counts` and `means` are flat `k x n x n` arrays indexed by `(l * n + i) * n + j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiBanditEstimator {
    n: usize,
    k: usize,
    delta: f64,
    counts: Vec<u64>,
    means: Vec<f64>,
}

impl SemiBanditEstimator {
    pub fn fit(ds: &Dataset, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        if ds.meta.feedback != FeedbackKind::Semi {
            return Err(PocfError::FeedbackMismatch {
                expected: "semi",
                found: ds.meta.feedback.as_str(),
            });
        }
        let (n, k) = (ds.meta.n, ds.meta.k);
        let mut counts = vec![0u64; k * n * n];
        let mut sums = vec![0.0f64; k * n * n];
        for rec in &ds.records {
            let Feedback::Semi(obs) = &rec.feedback else {
                return Err(PocfError::FeedbackMismatch {
                    expected: "semi",
                    found: "bandit",
                });
            };
            for o in obs {
                for (a, b) in [(o.i, o.j), (o.j, o.i)] {
                    let idx = (o.l * n + a) * n + b;
                    counts[idx] += 1;
                    sums[idx] += o.v;
                }
            }
        }
        let means = sums
            .iter()
            .zip(&counts)
            .map(|(&s, &c)| if c == 0 { 0.0 } else { (s / c as f64).clamp(-1.0, 1.0) })
            .collect();
        Ok(Self {
            n,
            k,
            delta,
            counts,
            means,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn count(&self, i: usize, j: usize, l: usize) -> u64 {
        self.counts[(l * self.n + i) * self.n + j]
    }

    pub fn mean(&self, i: usize, j: usize, l: usize) -> f64 {
        self.means[(l * self.n + i) * self.n + j]
    }

    /// `sqrt(2 ln(4(n+1)k/delta))`, the bonus of a pair seen at most once.
    pub fn unit_width(&self) -> f64 {
        (2.0 * (4.0 * (self.n as f64 + 1.0) * self.k as f64 / self.delta).ln()).sqrt()
    }

    /// Estimate and bonus of agent `i` at `a`.
    pub(crate) fn evaluate(&self, a: &[CoalitionSet], i: usize) -> (f64, f64) {
        let width = self.unit_width();
        let (mut est, mut bonus) = (0.0, 0.0);
        for l in a[i].iter() {
            for (j, sj) in a.iter().enumerate() {
                if j != i && sj.contains(l) {
                    let idx = (l * self.n + i) * self.n + j;
                    est += self.means[idx];
                    bonus += width / (self.counts[idx].max(1) as f64).sqrt();
                }
            }
        }
        (est, bonus)
    }

    fn check_shape(&self, a: &JointAction) -> Result<()> {
        if a.n() != self.n || a.actions().iter().any(|s| s.is_empty() || !s.within(self.k)) {
            return Err(PocfError::Shape(format!(
                "joint action does not fit an estimator with n={}, k={}",
                self.n, self.k
            )));
        }
        Ok(())
    }

    /// `v̂_i(a)` for every agent.
    pub fn estimate(&self, a: &JointAction) -> Result<Vec<f64>> {
        self.check_shape(a)?;
        Ok((0..self.n).map(|i| self.evaluate(a.actions(), i).0).collect())
    }

    /// `b_i(a)` for every agent.
    pub fn bonus(&self, a: &JointAction) -> Result<Vec<f64>> {
        self.check_shape(a)?;
        Ok((0..self.n).map(|i| self.evaluate(a.actions(), i).1).collect())
    }

    /// `(v̂ + b, v̂ - b)` for every agent.
    pub fn ucb_lcb(&self, a: &JointAction) -> Result<Vec<(f64, f64)>> {
        self.check_shape(a)?;
        Ok((0..self.n)
            .map(|i| {
                let (e, b) = self.evaluate(a.actions(), i);
                (e + b, e - b)
            })
            .collect())
    }
}

/// A deviation that reaches a coalition size the policy never produces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageWitness {
    #[serde(with = "one_based")]
    pub agent: usize,
    #[serde(with = "one_based")]
    pub coalition: usize,
    pub deviation: CoalitionSet,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assumption1Check {
    pub holds: bool,
    pub witness: Option<CoverageWitness>,
    /// Coalition size coefficient; infinite when the check fails.
    #[serde(with = "crate::serde_util::lossy_f64")]
    pub coefficient: f64,
}

/// Walks every pure one-agent deviation from `ns_profile` and compares size densities with the policy's.
pub fn check_assumption1(game: &GameSpec, policy: &ExplorationPolicy, ns_profile: &MixedProfile) -> Result<Assumption1Check> {
    ns_profile.validate(game)?;
    let base = coalition_size_densities(game, SizeSource::Policy(policy))?;
    let mut coefficient = 0.0f64;
    let mut witness = None;
    for i in 0..game.n() {
        for (t, &dev) in game.action_set(i).iter().enumerate() {
            let mut probs = vec![0.0; game.action_set(i).len()];
            probs[t] = 1.0;
            let deviated = ns_profile.with_agent(game, i, probs)?;
            let dens = coalition_size_densities(game, SizeSource::Profile(&deviated))?;
            for l in 0..game.k() {
                for alpha in 0..=game.n() {
                    let (num, den) = (dens[l][alpha], base[l][alpha]);
                    if den > 0.0 {
                        coefficient = coefficient.max(num / den);
                    } else if num > 0.0 && witness.is_none() {
                        witness = Some(CoverageWitness {
                            agent: i,
                            coalition: l,
                            deviation: dev,
                            size: alpha,
                        });
                    }
                }
            }
        }
    }
    let holds = witness.is_none();
    Ok(Assumption1Check {
        holds,
        witness,
        coefficient: if holds { coefficient } else { f64::INFINITY },
    })
}

/// Coalition size coefficient; `+inf` when some deviation reaches an uncovered size.
pub fn coalition_size_coefficient(game: &GameSpec, policy: &ExplorationPolicy, ns_profile: &MixedProfile) -> Result<f64> {
    Ok(check_assumption1(game, policy, ns_profile)?.coefficient)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVariant {
    Mixed,
    Pure,
}

/// Sample-complexity constant `f^delta` of the semi-bandit guarantee.
pub fn semi_bandit_constant(n: usize, k: usize, c_size: f64, delta: f64, variant: BoundVariant) -> f64 {
    let nf = n as f64;
    if n <= 1 {
        return 0.0;
    }
    let lead = match variant {
        BoundVariant::Mixed => 8.0 * k as f64 * nf * (nf + 1.0),
        BoundVariant::Pure => 24.0 * k as f64 * nf,
    };
    let log = (4.0 * (nf + 1.0) * k as f64 / delta).ln();
    lead * c_size * log * (2.0 * (nf - 1.0)).sqrt() * ((nf - 1.0) / 2.0 + (nf / 2.0).sqrt())
}

/// `f^delta / sqrt(M) + eps_opt`.
pub fn theoretical_bound_semibandit(
    n: usize,
    k: usize,
    c_size: f64,
    delta: f64,
    m: usize,
    eps_opt: f64,
    variant: BoundVariant,
) -> f64 {
    let f = semi_bandit_constant(n, k, c_size, delta, variant);
    if f == 0.0 {
        return eps_opt;
    }
    f / (m as f64).sqrt() + eps_opt
}

/// Smallest `M` with `f^delta / sqrt(M) <= eps - eps_opt`; infinite when `eps <= eps_opt`.
pub fn required_samples_semibandit(
    n: usize,
    k: usize,
    c_size: f64,
    delta: f64,
    eps: f64,
    eps_opt: f64,
    variant: BoundVariant,
) -> f64 {
    if eps <= eps_opt {
        return f64::INFINITY;
    }
    let f = semi_bandit_constant(n, k, c_size, delta, variant);
    (f / (eps - eps_opt)).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DatasetMeta, PairObservation, Record};
    use crate::game::UtilityModel;

    fn meta(n: usize, k: usize, m: usize) -> DatasetMeta {
        DatasetMeta {
            game_hash: String::new(),
            policy: "test".into(),
            seed: 0,
            feedback: FeedbackKind::Semi,
            n,
            k,
            m,
            reduced_from_semi: false,
        }
    }

    fn together(n: usize) -> JointAction {
        JointAction::new(vec![CoalitionSet::singleton(0); n])
    }

    fn record(v: f64) -> Record {
        Record {
            action: together(2),
            feedback: Feedback::Semi(vec![PairObservation { i: 0, j: 1, l: 0, v }]),
        }
    }

    #[test]
    fn single_observation() {
        let ds = Dataset {
            meta: meta(2, 1, 1),
            records: vec![record(0.5)],
        };
        let est = SemiBanditEstimator::fit(&ds, 0.05).unwrap();
        assert_eq!(est.count(0, 1, 0), 1);
        assert_eq!(est.count(1, 0, 0), 1);
        assert_eq!(est.mean(1, 0, 0), 0.5);
        assert_eq!(est.estimate(&together(2)).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn two_point_mean() {
        let ds = Dataset {
            meta: meta(2, 1, 2),
            records: vec![record(0.2), record(0.6)],
        };
        let est = SemiBanditEstimator::fit(&ds, 0.05).unwrap();
        assert!((est.mean(0, 1, 0) - 0.4).abs() < 1e-15);
        let t = est.unit_width() / 2f64.sqrt();
        let (u, l) = est.ucb_lcb(&together(2)).unwrap()[0];
        assert!((u - (0.4 + t)).abs() < 1e-12 && (l - (0.4 - t)).abs() < 1e-12);
    }

    #[test]
    fn empty_dataset_gives_unit_bonus() {
        let ds = Dataset {
            meta: meta(3, 2, 0),
            records: vec![],
        };
        let est = SemiBanditEstimator::fit(&ds, 0.05).unwrap();
        // 2 ln(4 * 4 * 2 / 0.05) = 2 ln 640
        assert!((est.unit_width() - 3.594_848_585_505_019).abs() < 1e-12);
        let a = JointAction::new(vec![
            CoalitionSet::singleton(0),
            CoalitionSet::singleton(0),
            CoalitionSet::singleton(1),
        ]);
        assert_eq!(est.estimate(&a).unwrap(), vec![0.0; 3]);
        let b = est.bonus(&a).unwrap();
        assert!((b[0] - est.unit_width()).abs() < 1e-15);
        assert_eq!(b[2], 0.0);
        let ul = est.ucb_lcb(&a).unwrap();
        assert_eq!(ul[0], (b[0], -b[0]));
    }

    #[test]
    fn quadrupled_count_halves_term() {
        let one = Dataset {
            meta: meta(2, 1, 1),
            records: vec![record(0.1)],
        };
        let four = Dataset {
            meta: meta(2, 1, 4),
            records: vec![record(0.1); 4],
        };
        let b1 = SemiBanditEstimator::fit(&one, 0.05).unwrap().bonus(&together(2)).unwrap()[0];
        let b4 = SemiBanditEstimator::fit(&four, 0.05).unwrap().bonus(&together(2)).unwrap()[0];
        assert!((b4 - b1 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bandit_dataset() {
        let mut m = meta(2, 1, 0);
        m.feedback = FeedbackKind::Bandit;
        let ds = Dataset { meta: m, records: vec![] };
        assert!(matches!(
            SemiBanditEstimator::fit(&ds, 0.05),
            Err(PocfError::FeedbackMismatch { .. })
        ));
    }

    fn singleton_game() -> GameSpec {
        GameSpec::with_shared_actions(
            2,
            2,
            vec![CoalitionSet::singleton(0), CoalitionSet::singleton(1)],
            UtilityModel::Uniform { size_scaled: false },
        )
        .unwrap()
    }

    #[test]
    fn coefficient_of_two_agent_uniform_policy_is_four() {
        let game = singleton_game();
        let ns = MixedProfile::from_indices(&game, &[0, 0]);
        let c = coalition_size_coefficient(&game, &ExplorationPolicy::UniformRandom, &ns).unwrap();
        assert_eq!(c, 4.0);
    }

    #[test]
    fn point_mass_policy_leaves_deviation_uncovered() {
        let game = singleton_game();
        let a = JointAction::new(vec![CoalitionSet::singleton(0); 2]);
        let policy = ExplorationPolicy::uniform_over("point", vec![a.clone()]);
        let ns = MixedProfile::point_mass(&game, &a).unwrap();
        let check = check_assumption1(&game, &policy, &ns).unwrap();
        assert!(!check.holds);
        assert!(check.coefficient.is_infinite());
        assert!(check.witness.is_some());
    }

    #[test]
    fn bound_constant_by_hand() {
        // 8*2*6*7 * 3 * ln(4*7*2/0.05) * sqrt(10) * (2.5 + sqrt(3))
        let want = 672.0 * 3.0 * (1120f64).ln() * 10f64.sqrt() * (2.5 + 3f64.sqrt());
        let got = semi_bandit_constant(6, 2, 3.0, 0.05, BoundVariant::Mixed);
        assert!((got - want).abs() / want < 1e-14);
        let b = theoretical_bound_semibandit(6, 2, 3.0, 0.05, 10_000, 0.0, BoundVariant::Mixed);
        assert!((b - want / 100.0).abs() / b < 1e-14);
        let pure = semi_bandit_constant(6, 2, 3.0, 0.05, BoundVariant::Pure);
        assert!((pure / got - 24.0 / 56.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_and_scaling() {
        assert_eq!(semi_bandit_constant(1, 3, 2.0, 0.1, BoundVariant::Mixed), 0.0);
        let b1 = theoretical_bound_semibandit(4, 2, 1.0, 0.1, 100, 0.0, BoundVariant::Mixed);
        let b2 = theoretical_bound_semibandit(4, 2, 1.0, 0.1, 200, 0.0, BoundVariant::Mixed);
        assert!((b1 / b2 - 2f64.sqrt()).abs() < 1e-12);
        assert!(required_samples_semibandit(4, 2, 1.0, 0.1, 0.5, 0.5, BoundVariant::Mixed).is_infinite());
        let m = required_samples_semibandit(4, 2, 1.0, 0.1, 0.5, 0.0, BoundVariant::Mixed);
        let at = theoretical_bound_semibandit(4, 2, 1.0, 0.1, m.ceil() as usize, 0.0, BoundVariant::Mixed);
        assert!(at <= 0.5 + 1e-12);
    }
}
