//! Surrogate duality-gap minimization over fitted estimators.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandit::RidgeEstimator;
use crate::coalition::CoalitionSet;
use crate::error::{PocfError, Result};
use crate::expect::{argmax, derive_seed, exact_duality_gap, stream_rng, DeviationSweep, ExpectationMode, ProfileDraws};
use crate::game::{GameSpec, MixedProfile, ENUMERATION_BUDGET};
use crate::semi_bandit::SemiBanditEstimator;
use crate::serde_util::one_based;

/// Anything that yields a per-agent utility estimate and confidence bonus at a pure joint action.
pub trait UtilityEstimator: Sync {
    fn n(&self) -> usize;
    fn k(&self) -> usize;
    /// `(v̂_i(a), b_i(a))`.
    fn evaluate(&self, a: &[CoalitionSet], i: usize) -> (f64, f64);
    fn misspecified_for(&self, _game: &GameSpec) -> bool {
        false
    }
}

impl UtilityEstimator for SemiBanditEstimator {
    fn n(&self) -> usize {
        SemiBanditEstimator::n(self)
    }
    fn k(&self) -> usize {
        SemiBanditEstimator::k(self)
    }
    fn evaluate(&self, a: &[CoalitionSet], i: usize) -> (f64, f64) {
        SemiBanditEstimator::evaluate(self, a, i)
    }
}

impl UtilityEstimator for RidgeEstimator {
    fn n(&self) -> usize {
        RidgeEstimator::n(self)
    }
    fn k(&self) -> usize {
        RidgeEstimator::k(self)
    }
    fn evaluate(&self, a: &[CoalitionSet], i: usize) -> (f64, f64) {
        RidgeEstimator::evaluate(self, a, i)
    }
    fn misspecified_for(&self, game: &GameSpec) -> bool {
        !game.is_size_independent()
    }
}

/// The game's true means with zero bonuses.
#[derive(Clone, Copy, Debug)]
pub struct TrueMeans<'a>(pub &'a GameSpec);

impl UtilityEstimator for TrueMeans<'_> {
    fn n(&self) -> usize {
        self.0.n()
    }
    fn k(&self) -> usize {
        self.0.k()
    }
    fn evaluate(&self, a: &[CoalitionSet], i: usize) -> (f64, f64) {
        (self.0.utility_unchecked(a, i), 0.0)
    }
}

/// An estimator as stored on disk.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnyEstimator {
    Semi(SemiBanditEstimator),
    Bandit(RidgeEstimator),
}

impl AnyEstimator {
    pub fn as_dyn(&self) -> &dyn UtilityEstimator {
        match self {
            Self::Semi(e) => e,
            Self::Bandit(e) => e,
        }
    }
}

impl UtilityEstimator for AnyEstimator {
    fn n(&self) -> usize {
        self.as_dyn().n()
    }
    fn k(&self) -> usize {
        self.as_dyn().k()
    }
    fn evaluate(&self, a: &[CoalitionSet], i: usize) -> (f64, f64) {
        self.as_dyn().evaluate(a, i)
    }
    fn misspecified_for(&self, game: &GameSpec) -> bool {
        self.as_dyn().misspecified_for(game)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    Mixed,
    Pure,
}

impl std::str::FromStr for SolverMode {
    type Err = PocfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mixed" => Ok(Self::Mixed),
            "pure" => Ok(Self::Pure),
            other => Err(PocfError::Config(format!("unknown solver mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MixingSchedule {
    /// `eta_t = 2 / (t + 2)`.
    Diminishing,
    Fixed { eta: f64 },
}

impl MixingSchedule {
    pub fn eta(self, t: usize) -> f64 {
        match self {
            Self::Diminishing => 2.0 / (t as f64 + 2.0),
            Self::Fixed { eta } => eta,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOrder {
    /// Agents update in index order, each seeing the others' latest strategies.
    GaussSeidel,
    /// Agents update in a seeded random order each round.
    Shuffled,
    /// Every agent responds to the previous round's profile.
    Jacobi,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub mode: SolverMode,
    pub mc_samples: usize,
    pub stop_threshold: f64,
    pub max_rounds: usize,
    pub mixing_schedule: MixingSchedule,
    pub sweep: SweepOrder,
    pub enumeration_budget: u128,
    pub seed: u64,
    pub restarts: usize,
    /// Use Monte Carlo even when exact enumeration fits the budget.
    pub force_monte_carlo: bool,
    /// Attach the true duality gap of the returned profile when enumerable.
    pub compute_exact_gap: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode: SolverMode::Mixed,
            mc_samples: 100,
            stop_threshold: 1e-3,
            max_rounds: 500,
            mixing_schedule: MixingSchedule::Diminishing,
            sweep: SweepOrder::GaussSeidel,
            enumeration_budget: ENUMERATION_BUDGET,
            seed: 0,
            restarts: 8,
            force_monte_carlo: false,
            compute_exact_gap: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(PocfError::Config(m.into()));
        if self.mc_samples == 0 {
            return bad("mc_samples must be at least 1");
        }
        if self.stop_threshold.is_nan() || self.stop_threshold <= 0.0 {
            return bad("stop_threshold must be positive");
        }
        if self.max_rounds == 0 {
            return bad("max_rounds must be at least 1");
        }
        if let MixingSchedule::Fixed { eta } = self.mixing_schedule {
            if !(eta > 0.0 && eta <= 1.0) {
                return bad("fixed eta must lie in (0, 1]");
            }
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        Ok(())
    }

    fn expectation_mode(&self, game: &GameSpec, salt: &[u64]) -> ExpectationMode {
        if !self.force_monte_carlo && game.joint_action_count() <= self.enumeration_budget {
            ExpectationMode::Exact
        } else {
            ExpectationMode::MonteCarlo {
                samples: self.mc_samples,
                seed: derive_seed(self.seed, salt),
            }
        }
    }
}

const SALT_RESPONSE: u64 = 1;
const SALT_EVALUATE: u64 = 2;
const SALT_RESTART: u64 = 3;
const SALT_ORDER: u64 = 4;

/// One agent's surrogate term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateTerm {
    #[serde(with = "one_based")]
    pub agent: usize,
    pub best_response: CoalitionSet,
    /// `max_{a_i'} E[UCB_i(phi_{-i}, a_i')]`.
    pub ucb_value: f64,
    /// `E_{a ~ phi}[LCB_i(a)]`.
    pub lcb_value: f64,
    pub gap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverRegime {
    Evaluation,
    MixedDynamics,
    Exhaustive,
    LocalSearch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub profile: MixedProfile,
    pub surrogate_gap: f64,
    pub std_error: f64,
    pub per_agent: Vec<SurrogateTerm>,
    pub exact_gap: Option<f64>,
    pub bound: Option<f64>,
    /// Surrogate gap of the returned profile, or zero after exhaustive search.
    pub eps_opt: f64,
    pub rounds: usize,
    pub exact: bool,
    pub hit_max_rounds: bool,
    pub regime: SolverRegime,
    pub misspecified: bool,
    /// Surrogate gap after each round, starting with the initial profile.
    pub history: Vec<f64>,
}

fn check_estimator(est: &dyn UtilityEstimator, game: &GameSpec) -> Result<()> {
    if est.n() != game.n() || est.k() != game.k() {
        return Err(PocfError::Shape(format!(
            "estimator has n={}, k={} but the game has n={}, k={}",
            est.n(),
            est.k(),
            game.n(),
            game.k()
        )));
    }
    Ok(())
}

fn sweep(est: &dyn UtilityEstimator, game: &GameSpec, phi: &MixedProfile, i: usize, mode: ExpectationMode, budget: u128) -> Result<DeviationSweep> {
    let draws = ProfileDraws::new(game, phi, Some(i), mode, budget)?;
    Ok(DeviationSweep::run(game, &draws, i, |a, _| {
        let (e, b) = est.evaluate(a, i);
        [e + b, e - b]
    }))
}

fn best_response_in(
    est: &dyn UtilityEstimator,
    game: &GameSpec,
    phi: &MixedProfile,
    i: usize,
    mode: ExpectationMode,
    budget: u128,
) -> Result<(usize, f64)> {
    let ucb = sweep(est, game, phi, i, mode, budget)?.means(0);
    let t = argmax(&ucb);
    Ok((t, ucb[t]))
}

/// Agent `i`'s optimistic best response against `phi_{-i}`, lowest index on ties.
pub fn optimistic_best_response(
    est: &dyn UtilityEstimator,
    game: &GameSpec,
    phi: &MixedProfile,
    i: usize,
    cfg: &SolverConfig,
) -> Result<(CoalitionSet, f64)> {
    check_estimator(est, game)?;
    phi.validate(game)?;
    let mode = cfg.expectation_mode(game, &[SALT_RESPONSE, 0]);
    let (t, v) = best_response_in(est, game, phi, i, mode, cfg.enumeration_budget)?;
    Ok((game.action_set(i)[t], v))
}

struct Evaluation {
    gap: f64,
    std_error: f64,
    per_agent: Vec<SurrogateTerm>,
    exact: bool,
}

fn evaluate_surrogate(
    est: &dyn UtilityEstimator,
    game: &GameSpec,
    phi: &MixedProfile,
    mode: ExpectationMode,
    budget: u128,
) -> Result<Evaluation> {
    let mut per_agent = Vec::with_capacity(game.n());
    let mut errors = Vec::with_capacity(game.n());
    for i in 0..game.n() {
        let sw = sweep(est, game, phi, i, mode, budget)?;
        let ucb = sw.means(0);
        let t = argmax(&ucb);
        let lcb = sw.mixed_mean(phi.agent(i), 1);
        errors.push(sw.difference_std_error(t, 0, phi.agent(i), 1));
        per_agent.push(SurrogateTerm {
            agent: i,
            best_response: game.action_set(i)[t],
            ucb_value: ucb[t],
            lcb_value: lcb,
            gap: ucb[t] - lcb,
        });
    }
    let worst = argmax(&per_agent.iter().map(|g| g.gap).collect::<Vec<_>>());
    Ok(Evaluation {
        gap: per_agent[worst].gap,
        std_error: errors[worst],
        per_agent,
        exact: mode.is_exact(),
    })
}

fn exact_gap_of(game: &GameSpec, phi: &MixedProfile, cfg: &SolverConfig) -> Option<f64> {
    if cfg.compute_exact_gap && game.joint_action_count() <= cfg.enumeration_budget.min(ENUMERATION_BUDGET) {
        exact_duality_gap(game, phi, ExpectationMode::Exact).ok().map(|g| g.gap)
    } else {
        None
    }
}

fn report(
    est: &dyn UtilityEstimator,
    game: &GameSpec,
    phi: MixedProfile,
    ev: Evaluation,
    cfg: &SolverConfig,
    regime: SolverRegime,
) -> GapReport {
    GapReport {
        exact_gap: exact_gap_of(game, &phi, cfg),
        profile: phi,
        surrogate_gap: ev.gap,
        std_error: ev.std_error,
        per_agent: ev.per_agent,
        bound: None,
        eps_opt: ev.gap,
        rounds: 0,
        exact: ev.exact,
        hit_max_rounds: false,
        regime,
        misspecified: est.misspecified_for(game),
        history: vec![ev.gap],
    }
}

/// `max_i [max_{a_i'} E UCB_i(phi_{-i}, a_i') - E_phi LCB_i]`.
pub fn surrogate_gap(est: &dyn UtilityEstimator, game: &GameSpec, phi: &MixedProfile, cfg: &SolverConfig) -> Result<GapReport> {
    check_estimator(est, game)?;
    phi.validate(game)?;
    let mode = cfg.expectation_mode(game, &[SALT_EVALUATE, 0]);
    let ev = evaluate_surrogate(est, game, phi, mode, cfg.enumeration_budget)?;
    Ok(report(est, game, phi.clone(), ev, cfg, SolverRegime::Evaluation))
}

/// Smoothed optimistic best-response dynamics from the uniform profile; returns the best profile seen.
pub fn solve_mixed(est: &dyn UtilityEstimator, game: &GameSpec, cfg: &SolverConfig) -> Result<GapReport> {
    cfg.validate()?;
    check_estimator(est, game)?;
    let budget = cfg.enumeration_budget;
    let mut phi = MixedProfile::uniform(game);
    let first = evaluate_surrogate(est, game, &phi, cfg.expectation_mode(game, &[SALT_EVALUATE, 0]), budget)?;
    let mut history = vec![first.gap];
    let mut prev = first.gap;
    let mut best = (phi.clone(), first);
    let mut rounds = 0;
    let mut converged = false;
    let mut order: Vec<usize> = (0..game.n()).collect();
    let mut order_rng = stream_rng(derive_seed(cfg.seed, &[SALT_ORDER]), 0);
    for t in 1..=cfg.max_rounds {
        rounds = t;
        let eta = cfg.mixing_schedule.eta(t);
        let mode = cfg.expectation_mode(game, &[SALT_RESPONSE, t as u64]);
        match cfg.sweep {
            SweepOrder::Jacobi => {
                let snapshot = phi.clone();
                let responses = (0..game.n())
                    .into_par_iter()
                    .map(|i| best_response_in(est, game, &snapshot, i, mode, budget).map(|r| r.0))
                    .collect::<Result<Vec<_>>>()?;
                for (i, br) in responses.into_iter().enumerate() {
                    phi.mix_towards(i, br, eta);
                }
            }
            SweepOrder::GaussSeidel | SweepOrder::Shuffled => {
                if cfg.sweep == SweepOrder::Shuffled {
                    order.shuffle(&mut order_rng);
                }
                for &i in &order {
                    let (br, _) = best_response_in(est, game, &phi, i, mode, budget)?;
                    phi.mix_towards(i, br, eta);
                }
            }
        }
        let ev = evaluate_surrogate(est, game, &phi, cfg.expectation_mode(game, &[SALT_EVALUATE, t as u64]), budget)?;
        let gap = ev.gap;
        history.push(gap);
        if gap < best.1.gap {
            best = (phi.clone(), ev);
        }
        if (gap - prev).abs() < cfg.stop_threshold {
            converged = true;
            break;
        }
        prev = gap;
    }
    let (profile, ev) = best;
    let mut out = report(est, game, profile, ev, cfg, SolverRegime::MixedDynamics);
    out.rounds = rounds;
    out.hit_max_rounds = !converged;
    out.history = history;
    Ok(out)
}

/// Surrogate gap of a pure profile given by action indices.
fn pure_gap(est: &dyn UtilityEstimator, game: &GameSpec, idx: &[usize], buf: &mut Vec<CoalitionSet>) -> f64 {
    buf.clear();
    buf.extend(idx.iter().enumerate().map(|(i, &t)| game.action_set(i)[t]));
    let mut worst = f64::NEG_INFINITY;
    for i in 0..game.n() {
        let own = buf[i];
        let (e, b) = est.evaluate(buf, i);
        let lcb = e - b;
        let mut ucb = f64::NEG_INFINITY;
        for &s in game.action_set(i) {
            buf[i] = s;
            let (e, b) = est.evaluate(buf, i);
            ucb = ucb.max(e + b);
        }
        buf[i] = own;
        worst = worst.max(ucb - lcb);
    }
    worst
}

/// Minimizes the surrogate gap over pure profiles: exhaustive within budget, else steepest-descent local search.
pub fn solve_pure(est: &dyn UtilityEstimator, game: &GameSpec, cfg: &SolverConfig) -> Result<GapReport> {
    cfg.validate()?;
    check_estimator(est, game)?;
    let mut buf = Vec::with_capacity(game.n());
    let exhaustive = game.joint_action_count() <= cfg.enumeration_budget;
    let (best_idx, rounds, hit_max, history) = if exhaustive {
        let mut best: Option<(Vec<usize>, f64)> = None;
        for idx in game.joint_indices() {
            let g = pure_gap(est, game, &idx, &mut buf);
            if best.as_ref().is_none_or(|b| g < b.1) {
                best = Some((idx, g));
            }
        }
        let (idx, g) = best.expect("nonempty joint action space");
        (idx, 1, false, vec![g])
    } else {
        local_search(est, game, cfg, &mut buf)
    };
    let phi = MixedProfile::from_indices(game, &best_idx);
    // A point mass has a single support point, so exact evaluation is always cheap.
    let ev = evaluate_surrogate(est, game, &phi, ExpectationMode::Exact, u128::MAX)?;
    let regime = if exhaustive {
        SolverRegime::Exhaustive
    } else {
        SolverRegime::LocalSearch
    };
    let mut out = report(est, game, phi, ev, cfg, regime);
    if exhaustive {
        out.eps_opt = 0.0;
    }
    out.rounds = rounds;
    out.hit_max_rounds = hit_max;
    out.history = history;
    Ok(out)
}

fn local_search(
    est: &dyn UtilityEstimator,
    game: &GameSpec,
    cfg: &SolverConfig,
    buf: &mut Vec<CoalitionSet>,
) -> (Vec<usize>, usize, bool, Vec<f64>) {
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut steps_total = 0;
    let mut hit_max = false;
    let mut history = Vec::new();
    for r in 0..cfg.restarts {
        let mut rng = stream_rng(derive_seed(cfg.seed, &[SALT_RESTART, r as u64]), 0);
        let mut idx: Vec<usize> = (0..game.n())
            .map(|i| rng.random_range(0..game.action_set(i).len()))
            .collect();
        let mut g = pure_gap(est, game, &idx, buf);
        let mut steps = 0;
        loop {
            if steps >= cfg.max_rounds {
                hit_max = true;
                break;
            }
            let mut step: Option<(usize, usize, f64)> = None;
            for i in 0..game.n() {
                let own = idx[i];
                for t in 0..game.action_set(i).len() {
                    if t == own {
                        continue;
                    }
                    idx[i] = t;
                    let cand = pure_gap(est, game, &idx, buf);
                    if cand < step.map_or(g, |s| s.2) {
                        step = Some((i, t, cand));
                    }
                }
                idx[i] = own;
            }
            let Some((i, t, cand)) = step else { break };
            idx[i] = t;
            g = cand;
            steps += 1;
        }
        steps_total += steps;
        history.push(g);
        if best.as_ref().is_none_or(|b| g < b.1) {
            best = Some((idx, g));
        }
    }
    let (idx, _) = best.expect("at least one restart");
    (idx, steps_total, hit_max, history)
}

/// Runs the solver selected by `cfg.mode`.
pub fn solve(est: &dyn UtilityEstimator, game: &GameSpec, cfg: &SolverConfig) -> Result<GapReport> {
    match cfg.mode {
        SolverMode::Mixed => solve_mixed(est, game, cfg),
        SolverMode::Pure => solve_pure(est, game, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{JointAction, MeanTable, UtilityModel};

    /// Zero estimates with a constant bonus per agent.
    struct ConstBonus {
        n: usize,
        k: usize,
        b: f64,
    }

    impl UtilityEstimator for ConstBonus {
        fn n(&self) -> usize {
            self.n
        }
        fn k(&self) -> usize {
            self.k
        }
        fn evaluate(&self, _: &[CoalitionSet], _: usize) -> (f64, f64) {
            (0.0, self.b)
        }
    }

    fn sets(v: &[&[usize]]) -> Vec<CoalitionSet> {
        v.iter().map(|s| CoalitionSet::from_one_based(s).unwrap()).collect()
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

    fn zero_game(n: usize) -> GameSpec {
        GameSpec::with_shared_actions(n, 2, sets(&[&[1], &[2], &[1, 2]]), UtilityModel::Uniform { size_scaled: false }).unwrap()
    }

    #[test]
    fn best_response_on_g1() {
        let game = g1();
        let a = JointAction::new(sets(&[&[1], &[1], &[1], &[1], &[1], &[2]]));
        let phi = MixedProfile::point_mass(&game, &a).unwrap();
        let (br, v) = optimistic_best_response(&TrueMeans(&game), &game, &phi, 5, &SolverConfig::default()).unwrap();
        assert_eq!(br, CoalitionSet::singleton(0));
        assert_eq!(v, 5.0);
    }

    #[test]
    fn ties_pick_lowest_index() {
        let game = zero_game(3);
        let phi = MixedProfile::uniform(&game);
        let (br, v) = optimistic_best_response(&TrueMeans(&game), &game, &phi, 1, &SolverConfig::default()).unwrap();
        assert_eq!(br, game.action_set(1)[0]);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn constant_bonus_gives_twice_bonus() {
        let game = zero_game(3);
        let est = ConstBonus { n: 3, k: 2, b: 0.7 };
        let r = surrogate_gap(&est, &game, &MixedProfile::uniform(&game), &SolverConfig::default()).unwrap();
        assert!((r.surrogate_gap - 1.4).abs() < 1e-15);
    }

    #[test]
    fn zero_bonus_surrogate_equals_exact_gap() {
        let game = g1();
        let phi = MixedProfile::uniform(&game);
        let r = surrogate_gap(&TrueMeans(&game), &game, &phi, &SolverConfig::default()).unwrap();
        let exact = exact_duality_gap(&game, &phi, ExpectationMode::Exact).unwrap();
        assert!((r.surrogate_gap - exact.gap).abs() < 1e-12);
        assert_eq!(r.exact_gap, Some(exact.gap));
    }

    #[test]
    fn zero_means_stop_after_first_round_with_uniform() {
        let game = zero_game(3);
        let r = solve_mixed(&TrueMeans(&game), &game, &SolverConfig::default()).unwrap();
        assert_eq!(r.surrogate_gap, 0.0);
        assert_eq!(r.rounds, 1);
        assert_eq!(r.profile, MixedProfile::uniform(&game));
        assert!(!r.hit_max_rounds);
    }

    #[test]
    fn pure_exhaustive_on_g1_finds_ns() {
        let game = g1();
        let cfg = SolverConfig {
            mode: SolverMode::Pure,
            ..SolverConfig::default()
        };
        let r = solve_pure(&TrueMeans(&game), &game, &cfg).unwrap();
        assert_eq!(r.regime, SolverRegime::Exhaustive);
        assert_eq!(r.surrogate_gap, 0.0);
        assert_eq!(r.eps_opt, 0.0);
        let idx = r.profile.pure_indices().unwrap();
        let c1 = idx.iter().filter(|&&t| t == 0).count();
        assert!(c1 == 2 || c1 == 6, "{c1}");
    }

    #[test]
    fn pure_on_zero_means_returns_first_profile() {
        let game = zero_game(3);
        let cfg = SolverConfig {
            mode: SolverMode::Pure,
            ..SolverConfig::default()
        };
        let r = solve_pure(&TrueMeans(&game), &game, &cfg).unwrap();
        assert_eq!(r.profile.pure_indices().unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn local_search_respects_step_budget() {
        let game = zero_game(10);
        let cfg = SolverConfig {
            mode: SolverMode::Pure,
            enumeration_budget: 10,
            max_rounds: 5,
            ..SolverConfig::default()
        };
        let r = solve_pure(&TrueMeans(&game), &game, &cfg).unwrap();
        assert_eq!(r.regime, SolverRegime::LocalSearch);
        assert!(r.rounds <= cfg.max_rounds * cfg.restarts);
        assert_eq!(r.surrogate_gap, 0.0);
    }

    #[test]
    fn fixed_seed_is_deterministic_under_monte_carlo() {
        let game = g1();
        let cfg = SolverConfig {
            force_monte_carlo: true,
            max_rounds: 20,
            seed: 11,
            ..SolverConfig::default()
        };
        let a = solve_mixed(&TrueMeans(&game), &game, &cfg).unwrap();
        let b = solve_mixed(&TrueMeans(&game), &game, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(!a.exact);
    }

    #[test]
    fn best_seen_is_monotone() {
        let game = g1();
        let cfg = SolverConfig {
            stop_threshold: 1e-12,
            max_rounds: 30,
            ..SolverConfig::default()
        };
        let r = solve_mixed(&TrueMeans(&game), &game, &cfg).unwrap();
        let min = r.history.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(r.surrogate_gap, min);
    }

    #[test]
    fn jacobi_runs() {
        let game = g1();
        let cfg = SolverConfig {
            sweep: SweepOrder::Jacobi,
            max_rounds: 10,
            ..SolverConfig::default()
        };
        let r = solve_mixed(&TrueMeans(&game), &game, &cfg).unwrap();
        assert!(r.surrogate_gap.is_finite());
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = SolverConfig {
            mixing_schedule: MixingSchedule::Fixed { eta: 1.5 },
            ..SolverConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
