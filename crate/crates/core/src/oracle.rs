//! Brute-force ground truth: pure Nash-stable enumeration, better-response dynamics and builtin certification.

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::builtins::{builtin, h_mixed_actions, BuiltinId};
use crate::coalition::CoalitionSet;
use crate::error::{PocfError, Result};
use crate::expect::argmax;
use crate::game::{GameSpec, JointAction, ENUMERATION_BUDGET, NS_TOLERANCE};
use crate::serde_util::one_based;

/// Every pure Nash-stable joint action, in lexicographic order of action indices.
pub fn enumerate_pure_ns(game: &GameSpec) -> Result<Vec<JointAction>> {
    game.check_budget(ENUMERATION_BUDGET)?;
    let all: Vec<Vec<usize>> = game.joint_indices().collect();
    Ok(all
        .par_iter()
        .filter_map(|idx| {
            let a = game.joint_action_from_indices(idx).expect("indices in range");
            game.is_nash_stable_unchecked(a.actions()).then_some(a)
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsStep {
    #[serde(with = "one_based")]
    pub agent: usize,
    pub from: CoalitionSet,
    pub to: CoalitionSet,
    /// Deviator's utility improvement.
    pub gain: f64,
    /// Change of the potential over the step.
    pub potential_change: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsTrace {
    pub start: JointAction,
    pub terminal: JointAction,
    pub steps: Vec<DynamicsStep>,
}

/// `prod |A_i| * n * 1000`, saturating.
pub fn dynamics_step_guard(game: &GameSpec) -> u64 {
    let joint = u64::try_from(game.joint_action_count()).unwrap_or(u64::MAX);
    joint.saturating_mul(game.n() as u64).saturating_mul(1000)
}

/// Repeatedly lets a uniformly chosen improving agent switch to its best response until none can improve.
pub fn better_response_dynamics<R: Rng + ?Sized>(game: &GameSpec, start: &JointAction, rng: &mut R) -> Result<DynamicsTrace> {
    game.validate_action(start)?;
    let guard = dynamics_step_guard(game);
    let mut a = start.actions().to_vec();
    let mut steps = Vec::new();
    let mut potential = game.potential(start)?;
    loop {
        let mut improving = Vec::new();
        for i in 0..game.n() {
            let current = game.utility_unchecked(&a, i);
            let devs = game.deviation_utilities_unchecked(&a, i);
            let t = argmax(&devs);
            if devs[t] > current + NS_TOLERANCE {
                improving.push((i, t, devs[t] - current));
            }
        }
        let Some(&(i, t, gain)) = improving.choose(rng) else {
            break;
        };
        if steps.len() as u64 >= guard {
            return Err(PocfError::StepGuard(guard));
        }
        let from = a[i];
        a[i] = game.action_set(i)[t];
        let next = 0.5 * (0..game.n()).map(|j| game.utility_unchecked(&a, j)).sum::<f64>();
        steps.push(DynamicsStep {
            agent: i,
            from,
            to: a[i],
            gain,
            potential_change: next - potential,
        });
        potential = next;
    }
    Ok(DynamicsTrace {
        start: start.clone(),
        terminal: JointAction::new(a),
        steps,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClauseResult {
    pub clause: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub builtin: BuiltinId,
    pub pass: bool,
    pub ns_count: usize,
    pub clauses: Vec<ClauseResult>,
}

type Family = (&'static str, Box<dyn Fn(&JointAction) -> bool>);

fn first_coalition_size(a: &JointAction) -> usize {
    a.actions().iter().filter(|s| s.contains(0)).count()
}

fn count_of(a: &JointAction, s: CoalitionSet) -> usize {
    a.actions().iter().filter(|&&x| x == s).count()
}

fn one(v: &[usize]) -> CoalitionSet {
    CoalitionSet::from_indices(v.iter().map(|x| x - 1))
}

fn families(id: BuiltinId) -> Vec<Family> {
    match id {
        BuiltinId::DG1 => vec![
            ("first coalition has exactly 2 members", Box::new(|a| first_coalition_size(a) == 2)),
            ("grand coalition in the first coalition", Box::new(|a| first_coalition_size(a) == 6)),
        ],
        BuiltinId::DG2 => vec![("first coalition has exactly 5 members", Box::new(|a| first_coalition_size(a) == 5))],
        BuiltinId::FG1 => vec![
            (
                "two agents on {1,2}, the third on {1}",
                Box::new(|a| count_of(a, one(&[1, 2])) == 2 && count_of(a, one(&[1])) == 1),
            ),
            (
                "two agents on {2}, the third on {3}",
                Box::new(|a| count_of(a, one(&[2])) == 2 && count_of(a, one(&[3])) == 1),
            ),
        ],
        BuiltinId::FG2 => vec![
            (
                "first and second coalitions both have 2 members",
                Box::new(|a| {
                    let sizes = a.coalition_sizes(3);
                    sizes[0] == 2 && sizes[1] == 2
                }),
            ),
            (
                "two agents share {1} or {2}, the third on {3}",
                Box::new(|a| {
                    count_of(a, one(&[3])) == 1 && (count_of(a, one(&[1])) == 2 || count_of(a, one(&[2])) == 2)
                }),
            ),
        ],
        BuiltinId::HMixed(_) => vec![(
            "every agent on {1,3,5}",
            Box::new(|a| a.actions().iter().all(|&s| s == h_mixed_actions()[1])),
        )],
    }
}

/// Re-derives the pure NS set of a builtin and compares it with its closed-form families.
pub fn verify_builtin(id: BuiltinId) -> Result<Certification> {
    let game = builtin(id).game;
    let ns = enumerate_pure_ns(&game)?;
    let all: Vec<JointAction> = game
        .joint_indices()
        .map(|idx| game.joint_action_from_indices(&idx))
        .collect::<Result<_>>()?;
    let fams = families(id);
    let mut clauses = Vec::new();
    for (name, member) in &fams {
        let members: Vec<&JointAction> = all.iter().filter(|a| member(a)).collect();
        let unstable: Vec<&&JointAction> = members.iter().filter(|a| !ns.contains(a)).collect();
        let pass = !members.is_empty() && unstable.is_empty();
        let detail = if members.is_empty() {
            "family is empty".to_string()
        } else if let Some(a) = unstable.first() {
            format!("{} of {} members are not Nash stable, e.g. {a}", unstable.len(), members.len())
        } else {
            format!("all {} members are Nash stable", members.len())
        };
        clauses.push(ClauseResult {
            clause: format!("Nash stable: {name}"),
            pass,
            detail,
        });
    }
    let extra: Vec<&JointAction> = ns.iter().filter(|a| !fams.iter().any(|(_, m)| m(a))).collect();
    clauses.push(ClauseResult {
        clause: "no other pure profile is Nash stable".into(),
        pass: extra.is_empty(),
        detail: match extra.first() {
            Some(a) => format!("{} further Nash-stable profiles, e.g. {a}", extra.len()),
            None => format!("{} Nash-stable profiles, all characterized", ns.len()),
        },
    });
    Ok(Certification {
        builtin: id,
        pass: clauses.iter().all(|c| c.pass),
        ns_count: ns.len(),
        clauses,
    })
}
