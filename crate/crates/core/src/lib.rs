//! Offline learning of Nash-stable outcomes in possibly-overlapping coalition formation games.
//!
//! Agents each pick a nonempty subset of `k` candidate coalitions. Utilities are
//! additively separable and symmetric. The crate covers the game model, brute-force
//! oracles, dataset generation under semi-bandit and bandit feedback, the two
//! confidence-bound estimators, the surrogate-gap solver and an experiment runner.

pub mod bandit;
pub mod builtins;
pub mod coalition;
pub mod dataset;
pub mod error;
pub mod expect;
pub mod experiment;
pub mod game;
pub mod generators;
pub mod oracle;
pub mod policy;
pub mod semi_bandit;
pub mod serde_util;
pub mod solver;
pub mod stats;

pub use coalition::CoalitionSet;
pub use error::{PocfError, Result};
pub use expect::{exact_duality_gap, expected_utility, DualityGap, Estimate, ExpectationMode};
pub use game::{GameSpec, JointAction, MeanTable, MixedProfile, NoiseKind, Partition, UtilityModel};
