//! Random game generators and the game file format.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::builtins::{builtin, h_mixed_actions, BuiltinId};
use crate::coalition::CoalitionSet;
use crate::error::{PocfError, Result};
use crate::expect::stream_rng;
use crate::game::{GameSpec, MeanTable, UtilityModel};
use crate::policy::ExplorationPolicy;

pub const DEFAULT_ACTIONS_PER_AGENT: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Uniform,
    Gaussian,
    SizeUniform,
    SizeGaussian,
    MixedEffects,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 5] = [
        Self::Uniform,
        Self::Gaussian,
        Self::SizeUniform,
        Self::SizeGaussian,
        Self::MixedEffects,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::Gaussian => "gaussian",
            Self::SizeUniform => "size_uniform",
            Self::SizeGaussian => "size_gaussian",
            Self::MixedEffects => "mixed_effects",
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GeneratorKind {
    type Err = PocfError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| PocfError::Config(format!("unknown generator `{s}`")))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorParams {
    /// Actions drawn per agent, capped at `2^k - 1`.
    pub actions_per_agent: Option<usize>,
}

/// Per-agent action sets of distinct random nonempty subsets, in draw order.
pub fn random_action_sets<R: Rng + ?Sized>(n: usize, k: usize, per_agent: usize, rng: &mut R) -> Vec<Vec<CoalitionSet>> {
    let total = if k >= 64 { u64::MAX } else { (1u64 << k) - 1 };
    let size = (per_agent.max(1) as u64).min(total) as usize;
    (0..n)
        .map(|_| {
            let mut set: Vec<CoalitionSet> = Vec::with_capacity(size);
            while set.len() < size {
                let s = CoalitionSet::from_bits(rng.random_range(1..=total));
                if !set.contains(&s) {
                    set.push(s);
                }
            }
            set
        })
        .collect()
}

/// Symmetric centers drawn uniformly from `[-1, 1]` with a zero diagonal.
fn random_centers<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut mu = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let c = rng.random_range(-1.0..=1.0);
            mu[i][j] = c;
            mu[j][i] = c;
        }
    }
    mu
}

fn model_for<R: Rng + ?Sized>(kind: GeneratorKind, n: usize, rng: &mut R) -> UtilityModel {
    match kind {
        GeneratorKind::Uniform => UtilityModel::Uniform { size_scaled: false },
        GeneratorKind::SizeUniform => UtilityModel::Uniform { size_scaled: true },
        GeneratorKind::Gaussian => UtilityModel::Gaussian {
            mu: random_centers(n, rng),
            size_scaled: false,
        },
        GeneratorKind::SizeGaussian => UtilityModel::Gaussian {
            mu: random_centers(n, rng),
            size_scaled: true,
        },
        GeneratorKind::MixedEffects => UtilityModel::MixedEffects,
    }
}

/// Draws a game. Action sets and utility parameters use independent substreams of `seed`;
/// `action_sets` overrides the drawn sets when given.
pub fn generate_game_with(
    kind: GeneratorKind,
    n: usize,
    k: usize,
    params: &GeneratorParams,
    seed: u64,
    action_sets: Option<Vec<Vec<CoalitionSet>>>,
) -> Result<GameSpec> {
    if kind == GeneratorKind::MixedEffects && k != 5 {
        return Err(PocfError::Config(format!("mixed_effects requires k = 5, got k = {k}")));
    }
    let sets = match action_sets {
        Some(s) => s,
        None if kind == GeneratorKind::MixedEffects => vec![h_mixed_actions(); n],
        None => random_action_sets(
            n,
            k,
            params.actions_per_agent.unwrap_or(DEFAULT_ACTIONS_PER_AGENT),
            &mut stream_rng(seed, 0),
        ),
    };
    let model = model_for(kind, n, &mut stream_rng(seed, 1));
    GameSpec::new(n, k, sets, model)
}

pub fn generate_game(kind: GeneratorKind, n: usize, k: usize, seed: u64) -> Result<GameSpec> {
    generate_game_with(kind, n, k, &GeneratorParams::default(), seed, None)
}

/// Deterministic game with symmetric pairwise means drawn uniformly from `[-1, 1]`, independent of coalition size.
pub fn random_pairwise_game(n: usize, k: usize, actions_per_agent: usize, seed: u64) -> Result<GameSpec> {
    let sets = random_action_sets(n, k, actions_per_agent, &mut stream_rng(seed, 0));
    let mut rng = stream_rng(seed, 1);
    let table = (0..k).map(|_| random_centers(n, &mut rng)).collect();
    GameSpec::new(
        n,
        k,
        sets,
        UtilityModel::Deterministic {
            table: MeanTable::Pairwise(table),
        },
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    #[serde(default)]
    pub params: GeneratorParams,
    pub seed: u64,
}

/// On-disk game: exactly one of `generator`, `mean_table` or `model` describes utilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub n: usize,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_sets: Option<Vec<Vec<CoalitionSet>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_table: Option<MeanTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<UtilityModel>,
}

impl GameFile {
    pub fn from_game(game: &GameSpec) -> Self {
        Self {
            n: game.n(),
            k: game.k(),
            action_sets: Some(game.action_sets().to_vec()),
            generator: None,
            mean_table: None,
            model: Some(game.model().clone()),
        }
    }

    pub fn build(&self) -> Result<GameSpec> {
        let sources = [self.generator.is_some(), self.mean_table.is_some(), self.model.is_some()];
        if sources.iter().filter(|&&b| b).count() != 1 {
            return Err(PocfError::InvalidGame(
                "a game file needs exactly one of `generator`, `mean_table` or `model`".into(),
            ));
        }
        if let Some(g) = &self.generator {
            return generate_game_with(g.kind, self.n, self.k, &g.params, g.seed, self.action_sets.clone());
        }
        let sets = self
            .action_sets
            .clone()
            .ok_or_else(|| PocfError::InvalidGame("`action_sets` is required without a generator".into()))?;
        let model = match &self.mean_table {
            Some(t) => UtilityModel::Deterministic { table: t.clone() },
            None => self.model.clone().expect("checked above"),
        };
        GameSpec::new(self.n, self.k, sets, model)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// A builtin name or a path to a game file; builtins also carry their exploration policy.
pub fn load_game(spec: &str) -> Result<(GameSpec, Option<ExplorationPolicy>)> {
    if let Ok(id) = spec.parse::<BuiltinId>() {
        let b = builtin(id);
        return Ok((b.game, Some(b.policy)));
    }
    if !Path::new(spec).exists() {
        return Err(PocfError::UnknownBuiltin(format!("{spec} (no such builtin or file)")));
    }
    Ok((GameFile::read(spec)?.build()?, None))
}
