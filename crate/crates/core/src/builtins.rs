//! Hand-built games: the two indistinguishable pairs and the mixed-effects testbed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coalition::CoalitionSet;
use crate::error::{PocfError, Result};
use crate::game::{GameSpec, JointAction, MeanTable, UtilityModel};
use crate::policy::ExplorationPolicy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BuiltinId {
    DG1,
    DG2,
    FG1,
    FG2,
    HMixed(usize),
}

impl BuiltinId {
    pub const PAIRS: [BuiltinId; 4] = [Self::DG1, Self::DG2, Self::FG1, Self::FG2];
}

impl fmt::Display for BuiltinId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DG1 => f.write_str("D-G1"),
            Self::DG2 => f.write_str("D-G2"),
            Self::FG1 => f.write_str("F-G1"),
            Self::FG2 => f.write_str("F-G2"),
            Self::HMixed(n) => write!(f, "H-mixed({n})"),
        }
    }
}

impl FromStr for BuiltinId {
    type Err = PocfError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t {
            "D-G1" => return Ok(Self::DG1),
            "D-G2" => return Ok(Self::DG2),
            "F-G1" => return Ok(Self::FG1),
            "F-G2" => return Ok(Self::FG2),
            _ => {}
        }
        let n = t
            .strip_prefix("H-mixed(")
            .and_then(|r| r.strip_suffix(')'))
            .and_then(|r| r.trim().parse::<usize>().ok())
            .ok_or_else(|| PocfError::UnknownBuiltin(s.to_string()))?;
        if n < 2 {
            return Err(PocfError::UnknownBuiltin(format!("{s}: needs at least 2 agents")));
        }
        Ok(Self::HMixed(n))
    }
}

impl TryFrom<String> for BuiltinId {
    type Error = PocfError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BuiltinId> for String {
    fn from(b: BuiltinId) -> Self {
        b.to_string()
    }
}

#[derive(Clone, Debug)]
pub struct Builtin {
    pub id: BuiltinId,
    pub game: GameSpec,
    pub policy: ExplorationPolicy,
}

fn cs(v: &[usize]) -> CoalitionSet {
    CoalitionSet::from_indices(v.iter().map(|x| x - 1))
}

fn by_size(n: usize, k: usize, actions: Vec<CoalitionSet>, table: Vec<Vec<f64>>) -> GameSpec {
    GameSpec::with_shared_actions(
        n,
        k,
        actions,
        UtilityModel::Deterministic {
            table: MeanTable::BySize(table),
        },
    )
    .expect("builtin tables are valid")
}

const D_SECOND: [f64; 7] = [0.0, 0.0, -0.5, -0.25, -1.0 / 6.0, -0.125, -0.1];

fn d_actions() -> Vec<CoalitionSet> {
    vec![cs(&[1]), cs(&[2])]
}

fn f_actions() -> Vec<CoalitionSet> {
    vec![cs(&[1]), cs(&[2]), cs(&[3]), cs(&[1, 2])]
}

/// Uniform over joint actions whose first coalition has 2, 4 or 5 members.
fn d_policy() -> ExplorationPolicy {
    let support = (0u32..64)
        .filter(|m| matches!(m.count_ones(), 2 | 4 | 5))
        .map(|m| {
            JointAction::new(
                (0..6)
                    .map(|i| if m >> (5 - i) & 1 == 1 { cs(&[1]) } else { cs(&[2]) })
                    .collect(),
            )
        })
        .collect();
    ExplorationPolicy::uniform_over("builtin:D", support)
}

fn f_policy() -> ExplorationPolicy {
    let both = cs(&[1, 2]);
    let third = cs(&[3]);
    let mut support = vec![JointAction::new(vec![both; 3])];
    for odd in 0..3 {
        let mut a = vec![both; 3];
        a[odd] = third;
        support.push(JointAction::new(a));
    }
    for odd in 0..3 {
        for alone in [cs(&[1]), cs(&[2])] {
            let mut a = vec![third; 3];
            a[odd] = alone;
            support.push(JointAction::new(a));
        }
    }
    ExplorationPolicy::uniform_over("builtin:F", support)
}

/// Action set shared by every agent of the mixed-effects testbed.
pub fn h_mixed_actions() -> Vec<CoalitionSet> {
    vec![cs(&[1, 2]), cs(&[1, 3, 5]), cs(&[4, 5])]
}

pub fn builtin(id: BuiltinId) -> Builtin {
    let (game, policy) = match id {
        BuiltinId::DG1 => (
            by_size(6, 2, d_actions(), vec![vec![0.0, 0.0, 1.0, -1.0, 1.0, 1.0, 1.0], D_SECOND.to_vec()]),
            d_policy(),
        ),
        BuiltinId::DG2 => (
            by_size(6, 2, d_actions(), vec![vec![0.0, 0.0, 1.0, 1.0, 1.0, 1.0, -1.0], D_SECOND.to_vec()]),
            d_policy(),
        ),
        BuiltinId::FG1 => (
            by_size(
                3,
                3,
                f_actions(),
                vec![vec![0.0, 0.0, 1.0, 0.5], vec![0.0, 0.0, 1.0, -1.0], vec![0.0, 0.0, -0.5, -0.25]],
            ),
            f_policy(),
        ),
        BuiltinId::FG2 => (
            by_size(
                3,
                3,
                f_actions(),
                vec![vec![0.0, 0.0, 1.0, -0.25], vec![0.0, 0.0, 1.0, -0.25], vec![0.0, 0.0, -0.5, -0.25]],
            ),
            f_policy(),
        ),
        BuiltinId::HMixed(n) => (
            GameSpec::with_shared_actions(n, 5, h_mixed_actions(), UtilityModel::MixedEffects)
                .expect("mixed-effects game is valid"),
            ExplorationPolicy::UniformRandom,
        ),
    };
    Builtin { id, game, policy }
}

pub fn builtin_by_name(name: &str) -> Result<Builtin> {
    Ok(builtin(name.parse()?))
}
