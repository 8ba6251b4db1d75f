//! Games, joint actions, partitions, mixed profiles and mean utilities.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coalition::{CoalitionSet, MAX_COALITIONS};
use crate::error::{PocfError, Result};
use crate::stats::clamped_normal_mean;

/// Strict-improvement threshold used by every stability test.
pub const NS_TOLERANCE: f64 = 1e-9;

/// Largest joint-action space that exact enumeration will walk.
pub const ENUMERATION_BUDGET: u128 = 100_000;

const PROB_TOLERANCE: f64 = 1e-9;

/// Sampling distribution of realized pairwise utilities around their means.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Deterministic,
    BoundedUniform,
    ClampedGaussian,
}

/// Explicit deterministic mean tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanTable {
    /// `pairwise[l][i][j]`, independent of coalition size.
    Pairwise(Vec<Vec<Vec<f64>>>),
    /// `by_size[l][s]`: the utility every pair inside coalition `l` receives when it has `s` members.
    BySize(Vec<Vec<f64>>),
}

/// Law generating pairwise utilities.
///
/// `size_scaled` multiplies a realization by `|C_l|/(n+1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilityModel {
    Deterministic { table: MeanTable },
    /// Realizations uniform on `[-1, 1]`.
    Uniform { size_scaled: bool },
    /// Realizations `clamp(N(mu_ij, 1 - |mu_ij|))` with a per-pair center shared across coalitions.
    Gaussian { mu: Vec<Vec<f64>>, size_scaled: bool },
    /// Five coalitions with record-level normal effects:
    /// overcrowding penalty on the first, costly second and fourth, neutral third, crowd bonus on the fifth.
    MixedEffects,
}

#[derive(Clone, Debug)]
enum MeanCache {
    Zero,
    Pairwise(Vec<f64>),
    Pair { table: Vec<f64>, scaled: bool },
    BySize(Vec<f64>),
}

/// Offset of coalition `l` in the mixed-effects law at coalition size `s`.
fn mixed_effect_offset(l: usize, s: usize, n: usize) -> f64 {
    let r = s as f64 / (n + 1) as f64;
    match l {
        0 => -r,
        1 | 3 => -1.0,
        2 => 0.0,
        _ => r,
    }
}

fn check_unit(x: f64, what: &str) -> Result<()> {
    if x.is_finite() && (-1.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(PocfError::InvalidGame(format!("{what} = {x} outside [-1, 1]")))
    }
}

/// A symmetric POCF game.
#[derive(Clone, Debug)]
pub struct GameSpec {
    n: usize,
    k: usize,
    action_sets: Vec<Vec<CoalitionSet>>,
    model: UtilityModel,
    cache: MeanCache,
}

#[derive(Serialize)]
struct Fingerprint<'a> {
    n: usize,
    k: usize,
    action_sets: &'a [Vec<CoalitionSet>],
    model: &'a UtilityModel,
}

impl GameSpec {
    pub fn new(
        n: usize,
        k: usize,
        action_sets: Vec<Vec<CoalitionSet>>,
        model: UtilityModel,
    ) -> Result<Self> {
        if n == 0 {
            return Err(PocfError::InvalidGame("n must be at least 1".into()));
        }
        if k == 0 || k > MAX_COALITIONS {
            return Err(PocfError::InvalidGame(format!(
                "k = {k} outside 1..={MAX_COALITIONS}"
            )));
        }
        if action_sets.len() != n {
            return Err(PocfError::InvalidGame(format!(
                "{} action sets for {n} agents",
                action_sets.len()
            )));
        }
        for (i, set) in action_sets.iter().enumerate() {
            if set.is_empty() {
                return Err(PocfError::InvalidAction {
                    agent: i + 1,
                    reason: "empty action set".into(),
                });
            }
            for (t, a) in set.iter().enumerate() {
                if a.is_empty() || !a.within(k) {
                    return Err(PocfError::InvalidAction {
                        agent: i + 1,
                        reason: format!("action {a} is not a nonempty subset of 1..={k}"),
                    });
                }
                if set[..t].contains(a) {
                    return Err(PocfError::InvalidAction {
                        agent: i + 1,
                        reason: format!("duplicate action {a}"),
                    });
                }
            }
        }
        let cache = Self::build_cache(n, k, &model)?;
        Ok(Self {
            n,
            k,
            action_sets,
            model,
            cache,
        })
    }

    /// Game where every agent shares the same action set.
    pub fn with_shared_actions(
        n: usize,
        k: usize,
        actions: Vec<CoalitionSet>,
        model: UtilityModel,
    ) -> Result<Self> {
        Self::new(n, k, vec![actions; n], model)
    }

    fn build_cache(n: usize, k: usize, model: &UtilityModel) -> Result<MeanCache> {
        Ok(match model {
            UtilityModel::Uniform { .. } => MeanCache::Zero,
            UtilityModel::Deterministic {
                table: MeanTable::Pairwise(t),
            } => {
                if t.len() != k || t.iter().any(|m| m.len() != n || m.iter().any(|r| r.len() != n)) {
                    return Err(PocfError::InvalidGame(format!(
                        "pairwise mean table must be {k} x {n} x {n}"
                    )));
                }
                let mut flat = vec![0.0; k * n * n];
                for l in 0..k {
                    for i in 0..n {
                        if t[l][i][i] != 0.0 {
                            return Err(PocfError::InvalidGame(format!(
                                "self utility of agent {} in coalition {} must be 0",
                                i + 1,
                                l + 1
                            )));
                        }
                        for j in 0..n {
                            check_unit(t[l][i][j], "mean utility")?;
                            if t[l][i][j] != t[l][j][i] {
                                return Err(PocfError::InvalidGame(format!(
                                    "asymmetric means for agents {} and {} in coalition {}",
                                    i + 1,
                                    j + 1,
                                    l + 1
                                )));
                            }
                            flat[(l * n + i) * n + j] = t[l][i][j];
                        }
                    }
                }
                MeanCache::Pairwise(flat)
            }
            UtilityModel::Deterministic {
                table: MeanTable::BySize(t),
            } => {
                if t.len() != k || t.iter().any(|r| r.len() != n + 1) {
                    return Err(PocfError::InvalidGame(format!(
                        "size mean table must be {k} x {}",
                        n + 1
                    )));
                }
                for row in t {
                    for &x in row {
                        check_unit(x, "mean utility")?;
                    }
                }
                MeanCache::BySize(t.concat())
            }
            UtilityModel::Gaussian { mu, size_scaled } => {
                if mu.len() != n || mu.iter().any(|r| r.len() != n) {
                    return Err(PocfError::InvalidGame(format!("mu must be {n} x {n}")));
                }
                let mut table = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        check_unit(mu[i][j], "gaussian center")?;
                        if mu[i][j] != mu[j][i] {
                            return Err(PocfError::InvalidGame(format!(
                                "asymmetric gaussian centers for agents {} and {}",
                                i + 1,
                                j + 1
                            )));
                        }
                        if i != j {
                            table[i * n + j] = clamped_normal_mean(mu[i][j], 1.0 - mu[i][j].abs());
                        }
                    }
                }
                MeanCache::Pair {
                    table,
                    scaled: *size_scaled,
                }
            }
            UtilityModel::MixedEffects => {
                if k != 5 {
                    return Err(PocfError::InvalidGame(
                        "the mixed-effects law is defined for k = 5".into(),
                    ));
                }
                let mut table = vec![0.0; k * (n + 1)];
                for l in 0..k {
                    for s in 0..=n {
                        table[l * (n + 1) + s] = clamped_normal_mean(mixed_effect_offset(l, s, n), 1.0);
                    }
                }
                MeanCache::BySize(table)
            }
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn action_sets(&self) -> &[Vec<CoalitionSet>] {
        &self.action_sets
    }

    pub fn action_set(&self, i: usize) -> &[CoalitionSet] {
        &self.action_sets[i]
    }

    pub fn model(&self) -> &UtilityModel {
        &self.model
    }

    pub fn noise_kind(&self) -> NoiseKind {
        match self.model {
            UtilityModel::Deterministic { .. } => NoiseKind::Deterministic,
            UtilityModel::Uniform { .. } => NoiseKind::BoundedUniform,
            UtilityModel::Gaussian { .. } | UtilityModel::MixedEffects => NoiseKind::ClampedGaussian,
        }
    }

    /// True when no mean depends on coalition size.
    pub fn is_size_independent(&self) -> bool {
        match &self.cache {
            MeanCache::Zero | MeanCache::Pairwise(_) => true,
            MeanCache::Pair { scaled, .. } => !scaled,
            MeanCache::BySize(t) => {
                let w = self.n + 1;
                t.chunks(w).all(|row| row[2.min(self.n)..].windows(2).all(|p| p[0] == p[1]))
            }
        }
    }

    /// SHA-256 over the canonical JSON description of the game.
    pub fn fingerprint(&self) -> String {
        let repr = Fingerprint {
            n: self.n,
            k: self.k,
            action_sets: &self.action_sets,
            model: &self.model,
        };
        let bytes = serde_json::to_vec(&repr).expect("game description serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Mean utility agent `i` gets from `j` inside coalition `l` of size `s`.
    pub fn mean(&self, i: usize, j: usize, l: usize, s: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let n = self.n;
        match &self.cache {
            MeanCache::Zero => 0.0,
            MeanCache::Pairwise(t) => t[(l * n + i) * n + j],
            MeanCache::Pair { table, scaled } => {
                let m = table[i * n + j];
                if *scaled {
                    m * s as f64 / (n + 1) as f64
                } else {
                    m
                }
            }
            MeanCache::BySize(t) => t[l * (n + 1) + s.min(n)],
        }
    }

    /// Product of action-set sizes, saturating.
    pub fn joint_action_count(&self) -> u128 {
        self.action_sets
            .iter()
            .fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128))
    }

    pub fn check_budget(&self, budget: u128) -> Result<()> {
        let size = self.joint_action_count();
        if size > budget {
            Err(PocfError::BudgetExceeded { size, budget })
        } else {
            Ok(())
        }
    }

    pub fn validate_action(&self, a: &JointAction) -> Result<()> {
        if a.0.len() != self.n {
            return Err(PocfError::Shape(format!(
                "joint action has {} entries for {} agents",
                a.0.len(),
                self.n
            )));
        }
        for (i, s) in a.0.iter().enumerate() {
            if !self.action_sets[i].contains(s) {
                return Err(PocfError::InvalidAction {
                    agent: i + 1,
                    reason: format!("{s} is not in the action set"),
                });
            }
        }
        Ok(())
    }

    /// Position of `s` in agent `i`'s action set.
    pub fn action_index(&self, i: usize, s: CoalitionSet) -> Option<usize> {
        self.action_sets[i].iter().position(|&x| x == s)
    }

    pub fn indices_of(&self, a: &JointAction) -> Result<Vec<usize>> {
        self.validate_action(a)?;
        Ok(a.0
            .iter()
            .enumerate()
            .map(|(i, &s)| self.action_index(i, s).expect("validated"))
            .collect())
    }

    pub fn joint_action_from_indices(&self, idx: &[usize]) -> Result<JointAction> {
        if idx.len() != self.n {
            return Err(PocfError::Shape(format!(
                "{} indices for {} agents",
                idx.len(),
                self.n
            )));
        }
        idx.iter()
            .enumerate()
            .map(|(i, &t)| {
                self.action_sets[i]
                    .get(t)
                    .copied()
                    .ok_or_else(|| PocfError::InvalidAction {
                        agent: i + 1,
                        reason: format!("action index {t} out of range"),
                    })
            })
            .collect::<Result<Vec<_>>>()
            .map(JointAction)
    }

    /// All joint actions as index tuples in lexicographic order.
    pub fn joint_indices(&self) -> JointIndexIter {
        JointIndexIter {
            radices: self.action_sets.iter().map(Vec::len).collect(),
            next: Some(vec![0; self.n]),
        }
    }

    pub fn induce_partition(&self, a: &JointAction) -> Result<Partition> {
        self.validate_action(a)?;
        let mut coalitions = vec![Vec::new(); self.k];
        for (i, s) in a.0.iter().enumerate() {
            for l in s.iter() {
                coalitions[l].push(i);
            }
        }
        Ok(Partition { coalitions })
    }

    /// Number of agents other than `i` inside each coalition.
    pub(crate) fn sizes_without(&self, a: &[CoalitionSet], i: usize) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for (j, s) in a.iter().enumerate() {
            if j != i {
                for l in s.iter() {
                    sizes[l] += 1;
                }
            }
        }
        sizes
    }

    /// `d_i` when agent `i` plays `own` and the rest follow `a`; `others` comes from [`Self::sizes_without`].
    pub(crate) fn utility_with(
        &self,
        a: &[CoalitionSet],
        i: usize,
        own: CoalitionSet,
        others: &[usize],
    ) -> f64 {
        let mut total = 0.0;
        for l in own.iter() {
            if others[l] == 0 {
                continue;
            }
            let s = others[l] + 1;
            for (j, sj) in a.iter().enumerate() {
                if j != i && sj.contains(l) {
                    total += self.mean(i, j, l, s);
                }
            }
        }
        total
    }

    pub(crate) fn utility_unchecked(&self, a: &[CoalitionSet], i: usize) -> f64 {
        let others = self.sizes_without(a, i);
        self.utility_with(a, i, a[i], &others)
    }

    /// Mean utility `d_i(a)`.
    pub fn mean_utility(&self, a: &JointAction, i: usize) -> Result<f64> {
        self.validate_action(a)?;
        self.check_agent(i)?;
        Ok(self.utility_unchecked(&a.0, i))
    }

    pub fn mean_utilities(&self, a: &JointAction) -> Result<Vec<f64>> {
        self.validate_action(a)?;
        Ok((0..self.n).map(|i| self.utility_unchecked(&a.0, i)).collect())
    }

    /// `d_i(a_{-i}, a_i')` for every `a_i'` in agent `i`'s action set.
    pub fn deviation_utilities(&self, a: &JointAction, i: usize) -> Result<Vec<f64>> {
        self.validate_action(a)?;
        self.check_agent(i)?;
        Ok(self.deviation_utilities_unchecked(&a.0, i))
    }

    pub(crate) fn deviation_utilities_unchecked(&self, a: &[CoalitionSet], i: usize) -> Vec<f64> {
        let others = self.sizes_without(a, i);
        self.action_sets[i]
            .iter()
            .map(|&own| self.utility_with(a, i, own, &others))
            .collect()
    }

    /// Potential `½ Σ_i d_i(a)` on means.
    pub fn potential(&self, a: &JointAction) -> Result<f64> {
        Ok(0.5 * self.mean_utilities(a)?.iter().sum::<f64>())
    }

    /// True when no agent gains more than [`NS_TOLERANCE`] by a pure deviation.
    pub fn is_nash_stable(&self, a: &JointAction) -> Result<bool> {
        self.validate_action(a)?;
        Ok(self.is_nash_stable_unchecked(&a.0))
    }

    pub(crate) fn is_nash_stable_unchecked(&self, a: &[CoalitionSet]) -> bool {
        (0..self.n).all(|i| {
            let others = self.sizes_without(a, i);
            let current = self.utility_with(a, i, a[i], &others);
            self.action_sets[i]
                .iter()
                .all(|&own| self.utility_with(a, i, own, &others) <= current + NS_TOLERANCE)
        })
    }

    /// Draws one realization of every pairwise utility induced by `a`.
    pub fn sample_utilities<R: Rng + ?Sized>(&self, a: &JointAction, rng: &mut R) -> Result<UtilityTable> {
        self.validate_action(a)?;
        Ok(self.sample_utilities_unchecked(&a.0, rng))
    }

    pub(crate) fn sample_utilities_unchecked<R: Rng + ?Sized>(
        &self,
        a: &[CoalitionSet],
        rng: &mut R,
    ) -> UtilityTable {
        let (n, k) = (self.n, self.k);
        let mut table = UtilityTable::zeros(n, k);
        let effects: [f64; 5] = match self.model {
            UtilityModel::MixedEffects => std::array::from_fn(|_| rng.sample(StandardNormal)),
            _ => [0.0; 5],
        };
        let mut members = Vec::with_capacity(n);
        for l in 0..k {
            members.clear();
            members.extend((0..n).filter(|&j| a[j].contains(l)));
            let s = members.len();
            if s < 2 {
                continue;
            }
            let scale = s as f64 / (n + 1) as f64;
            for (p, &i) in members.iter().enumerate() {
                for &j in &members[p + 1..] {
                    let v = match &self.model {
                        UtilityModel::Deterministic { .. } => self.mean(i, j, l, s),
                        UtilityModel::Uniform { size_scaled } => {
                            let u = rng.random_range(-1.0..=1.0);
                            if *size_scaled {
                                u * scale
                            } else {
                                u
                            }
                        }
                        UtilityModel::Gaussian { mu, size_scaled } => {
                            let c = mu[i][j];
                            let z: f64 = rng.sample(StandardNormal);
                            let v = (c + (1.0 - c.abs()) * z).clamp(-1.0, 1.0);
                            if *size_scaled {
                                v * scale
                            } else {
                                v
                            }
                        }
                        UtilityModel::MixedEffects => {
                            (mixed_effect_offset(l, s, n) + effects[l]).clamp(-1.0, 1.0)
                        }
                    };
                    table.set(i, j, l, v);
                }
            }
        }
        table
    }

    fn check_agent(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(PocfError::Shape(format!("agent {} out of range", i + 1)))
        }
    }
}

/// Lexicographic odometer over joint-action index tuples; the last agent varies fastest.
#[derive(Clone, Debug)]
pub struct JointIndexIter {
    radices: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl Iterator for JointIndexIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut pos = succ.len();
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            succ[pos] += 1;
            if succ[pos] < self.radices[pos] {
                self.next = Some(succ);
                break;
            }
            succ[pos] = 0;
        }
        Some(current)
    }
}

/// One chosen action per agent.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointAction(Vec<CoalitionSet>);

impl JointAction {
    pub fn new(actions: Vec<CoalitionSet>) -> Self {
        Self(actions)
    }

    pub fn actions(&self) -> &[CoalitionSet] {
        &self.0
    }

    pub fn action(&self, i: usize) -> CoalitionSet {
        self.0[i]
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    /// Copy with agent `i` switched to `s`.
    pub fn with_action(&self, i: usize, s: CoalitionSet) -> Self {
        let mut v = self.0.clone();
        v[i] = s;
        Self(v)
    }

    /// `|C_l|` for every coalition `l < k`.
    pub fn coalition_sizes(&self, k: usize) -> Vec<usize> {
        let mut sizes = vec![0; k];
        for s in &self.0 {
            for l in s.iter().filter(|&l| l < k) {
                sizes[l] += 1;
            }
        }
        sizes
    }
}

impl std::fmt::Display for JointAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str(")")
    }
}

/// Members of every candidate coalition under a joint action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    coalitions: Vec<Vec<usize>>,
}

impl Partition {
    pub fn members(&self, l: usize) -> &[usize] {
        &self.coalitions[l]
    }

    pub fn size(&self, l: usize) -> usize {
        self.coalitions[l].len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.coalitions.iter().map(Vec::len).collect()
    }

    /// Number of nonempty coalitions.
    pub fn nonempty_count(&self) -> usize {
        self.coalitions.iter().filter(|c| !c.is_empty()).count()
    }

    /// Coalitions agent `i` belongs to.
    pub fn coalitions_of(&self, i: usize) -> CoalitionSet {
        CoalitionSet::from_indices(
            self.coalitions
                .iter()
                .enumerate()
                .filter(|(_, c)| c.contains(&i))
                .map(|(l, _)| l),
        )
    }
}

/// Dense realization `v[l][i][j]` of pairwise utilities.
#[derive(Clone, Debug, PartialEq)]
pub struct UtilityTable {
    n: usize,
    k: usize,
    values: Vec<f64>,
}

impl UtilityTable {
    pub fn zeros(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            values: vec![0.0; n * n * k],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize, l: usize) -> f64 {
        self.values[(l * self.n + i) * self.n + j]
    }

    /// Writes both `v[l][i][j]` and its mirror.
    pub fn set(&mut self, i: usize, j: usize, l: usize, v: f64) {
        let n = self.n;
        self.values[(l * n + i) * n + j] = v;
        self.values[(l * n + j) * n + i] = v;
    }

    /// Bandit total `Σ_{l∈a_i} Σ_{j∈C_l, j≠i} v[l][i][j]`.
    pub fn total(&self, a: &JointAction, i: usize) -> f64 {
        let ai = a.action(i);
        let mut sum = 0.0;
        for l in ai.iter() {
            for (j, sj) in a.actions().iter().enumerate() {
                if j != i && sj.contains(l) {
                    sum += self.get(i, j, l);
                }
            }
        }
        sum
    }
}

/// Product mixed strategy: one distribution per agent over its action set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MixedProfile(Vec<Vec<f64>>);

impl MixedProfile {
    pub fn new(game: &GameSpec, probs: Vec<Vec<f64>>) -> Result<Self> {
        let p = Self(probs);
        p.validate(game)?;
        Ok(p)
    }

    pub fn uniform(game: &GameSpec) -> Self {
        Self(
            game.action_sets
                .iter()
                .map(|s| vec![1.0 / s.len() as f64; s.len()])
                .collect(),
        )
    }

    pub fn point_mass(game: &GameSpec, a: &JointAction) -> Result<Self> {
        let idx = game.indices_of(a)?;
        Ok(Self::from_indices(game, &idx))
    }

    /// Point mass on the given action indices; indices must be in range.
    pub fn from_indices(game: &GameSpec, idx: &[usize]) -> Self {
        Self(
            game.action_sets
                .iter()
                .zip(idx)
                .map(|(s, &t)| {
                    let mut v = vec![0.0; s.len()];
                    v[t] = 1.0;
                    v
                })
                .collect(),
        )
    }

    pub fn validate(&self, game: &GameSpec) -> Result<()> {
        if self.0.len() != game.n {
            return Err(PocfError::Shape(format!(
                "profile covers {} agents, game has {}",
                self.0.len(),
                game.n
            )));
        }
        for (i, (p, set)) in self.0.iter().zip(&game.action_sets).enumerate() {
            let bad = |reason: String| PocfError::InvalidProfile {
                agent: i + 1,
                reason,
            };
            if p.len() != set.len() {
                return Err(bad(format!("{} probabilities for {} actions", p.len(), set.len())));
            }
            if p.iter().any(|&x| !x.is_finite() || x < 0.0) {
                return Err(bad("negative or non-finite probability".into()));
            }
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > PROB_TOLERANCE {
                return Err(bad(format!("probabilities sum to {total}")));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn agent(&self, i: usize) -> &[f64] {
        &self.0[i]
    }

    pub fn probabilities(&self) -> &[Vec<f64>] {
        &self.0
    }

    /// Copy with agent `i`'s distribution replaced.
    pub fn with_agent(&self, game: &GameSpec, i: usize, probs: Vec<f64>) -> Result<Self> {
        let mut v = self.0.clone();
        v[i] = probs;
        Self::new(game, v)
    }

    /// `phi_i <- (1 - eta) phi_i + eta * e_t`.
    pub fn mix_towards(&mut self, i: usize, t: usize, eta: f64) {
        for (s, p) in self.0[i].iter_mut().enumerate() {
            *p *= 1.0 - eta;
            if s == t {
                *p += eta;
            }
        }
    }

    /// Action indices when every agent plays a point mass.
    pub fn pure_indices(&self) -> Option<Vec<usize>> {
        self.0
            .iter()
            .map(|p| p.iter().position(|&x| x >= 1.0 - PROB_TOLERANCE))
            .collect()
    }

    pub(crate) fn samplers(&self) -> Vec<WeightedIndex<f64>> {
        self.0
            .iter()
            .map(|p| WeightedIndex::new(p).expect("validated profile"))
            .collect()
    }

    /// Draws one joint action's indices.
    pub fn sample_indices<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        self.samplers().iter().map(|w| w.sample(rng)).collect()
    }
}
