//! Grid experiments: generate, sample, fit, solve, and tabulate surrogate gaps as CSV.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandit::{check_assumption2, power_set_coverage_constant, RidgeEstimator};
use crate::builtins::{builtin, BuiltinId};
use crate::dataset::{sample_dataset, FeedbackKind};
use crate::error::{PocfError, Result};
use crate::expect::derive_seed;
use crate::game::{GameSpec, MixedProfile, ENUMERATION_BUDGET};
use crate::generators::{generate_game_with, GeneratorKind, GeneratorParams};
use crate::oracle::enumerate_pure_ns;
use crate::policy::ExplorationPolicy;
use crate::semi_bandit::{check_assumption1, SemiBanditEstimator};
use crate::solver::{solve, GapReport, SolverConfig};

/// Largest `n` for which rows carry the exact duality gap.
pub const EXACT_GAP_MAX_AGENTS: usize = 6;

pub const CSV_HEADER: [&str; 13] = [
    "generator",
    "policy",
    "feedback",
    "n",
    "k",
    "M",
    "seed",
    "surrogate_gap",
    "exact_gap",
    "rounds",
    "assumption_ok",
    "wall_time_ms",
    "error",
];

fn default_delta() -> f64 {
    0.01
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub generator: GeneratorKind,
    #[serde(default)]
    pub generator_params: GeneratorParams,
    pub n_grid: Vec<usize>,
    pub k_grid: Vec<usize>,
    #[serde(rename = "M_grid")]
    pub m_grid: Vec<usize>,
    /// `rand`, `one_rand` (alias `coalition_size`) or `builtin:NAME`.
    pub policy: String,
    pub feedback: FeedbackKind,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = if text.trim_start().starts_with('{') {
            serde_json::from_str(text)?
        } else {
            toml::from_str(text).map_err(|e| PocfError::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PocfError::Config(m));
        for (name, empty) in [
            ("n_grid", self.n_grid.is_empty()),
            ("k_grid", self.k_grid.is_empty()),
            ("M_grid", self.m_grid.is_empty()),
            ("seeds", self.seeds.is_empty()),
        ] {
            if empty {
                return bad(format!("{name} must not be empty"));
            }
        }
        if self.n_grid.contains(&0) || self.k_grid.contains(&0) {
            return bad("n and k must be positive".into());
        }
        if self.generator == GeneratorKind::MixedEffects && self.k_grid.iter().any(|&k| k != 5) {
            return bad("mixed_effects requires k_grid = [5]".into());
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return bad(format!("delta = {} outside (0, 1]", self.delta));
        }
        PolicyChoice::parse(&self.policy)?;
        self.solver.validate()
    }

    pub fn cell_count(&self) -> usize {
        self.n_grid.len() * self.k_grid.len() * self.m_grid.len() * self.seeds.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolicyChoice {
    Rand,
    OneRand,
    Builtin(BuiltinId),
}

impl PolicyChoice {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rand" => Ok(Self::Rand),
            "one_rand" | "coalition_size" => Ok(Self::OneRand),
            _ => s
                .strip_prefix("builtin:")
                .map(|name| name.parse().map(Self::Builtin))
                .unwrap_or_else(|| Err(PocfError::Config(format!("unknown policy `{s}`")))),
        }
    }

    pub fn resolve(&self, game: &GameSpec) -> Result<ExplorationPolicy> {
        let policy = match self {
            Self::Rand => ExplorationPolicy::UniformRandom,
            Self::OneRand => ExplorationPolicy::OneRand,
            Self::Builtin(id) => builtin(*id).policy,
        };
        policy.validate(game)?;
        Ok(policy)
    }

    pub fn label(&self) -> String {
        match self {
            Self::Rand => "rand".into(),
            Self::OneRand => "one_rand".into(),
            Self::Builtin(id) => format!("builtin:{id}"),
        }
    }
}

/// One CSV line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub generator: String,
    pub policy: String,
    pub feedback: String,
    pub n: usize,
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub seed: u64,
    pub surrogate_gap: Option<f64>,
    pub exact_gap: Option<f64>,
    pub rounds: Option<usize>,
    pub assumption_ok: Option<bool>,
    pub wall_time_ms: u64,
    pub error: Option<String>,
}

impl ResultRow {
    /// Row with the wall time cleared, for determinism comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time_ms: 0,
            ..self.clone()
        }
    }
}

/// A finished cell: its CSV row plus the solver report when the pipeline succeeded.
#[derive(Clone, Debug)]
pub struct CellOutcome {
    pub row: ResultRow,
    pub game: Option<GameSpec>,
    pub report: Option<GapReport>,
}

pub fn cell_game(cfg: &ExperimentConfig, n: usize, k: usize, seed: u64) -> Result<GameSpec> {
    generate_game_with(
        cfg.generator,
        n,
        k,
        &cfg.generator_params,
        derive_seed(seed, &[n as u64, k as u64]),
        None,
    )
}

fn assumption_holds(
    game: &GameSpec,
    policy: &ExplorationPolicy,
    feedback: FeedbackKind,
    ridge: Option<&RidgeEstimator>,
    m: usize,
) -> Option<bool> {
    if game.joint_action_count() > ENUMERATION_BUDGET {
        return None;
    }
    let ns = enumerate_pure_ns(game).ok()?;
    let star = MixedProfile::point_mass(game, ns.first()?).ok()?;
    match feedback {
        FeedbackKind::Semi => check_assumption1(game, policy, &star).ok().map(|c| c.holds),
        FeedbackKind::Bandit => {
            let c_act = power_set_coverage_constant(game.n(), game.k());
            check_assumption2(ridge?, game, &star, c_act, m).ok().map(|c| c.holds)
        }
    }
}

fn run_pipeline(cfg: &ExperimentConfig, n: usize, k: usize, m: usize, seed: u64, row: &mut ResultRow) -> Result<(GameSpec, GapReport)> {
    let game = cell_game(cfg, n, k, seed)?;
    let policy = PolicyChoice::parse(&cfg.policy)?.resolve(&game)?;
    let ds = sample_dataset(&game, &policy, m, cfg.feedback, seed)?;
    let solver_cfg = SolverConfig {
        seed: derive_seed(cfg.solver.seed, &[seed]),
        compute_exact_gap: cfg.solver.compute_exact_gap && n <= EXACT_GAP_MAX_AGENTS,
        ..cfg.solver.clone()
    };
    let (report, ridge) = match cfg.feedback {
        FeedbackKind::Semi => {
            let est = SemiBanditEstimator::fit(&ds, cfg.delta)?;
            (solve(&est, &game, &solver_cfg)?, None)
        }
        FeedbackKind::Bandit => {
            let est = RidgeEstimator::fit(&ds, cfg.delta)?;
            (solve(&est, &game, &solver_cfg)?, Some(est))
        }
    };
    row.surrogate_gap = Some(report.surrogate_gap);
    row.exact_gap = report.exact_gap;
    row.rounds = Some(report.rounds);
    row.assumption_ok = assumption_holds(&game, &policy, cfg.feedback, ridge.as_ref(), m);
    Ok((game, report))
}

/// Runs one grid point; failures land in the row's error column.
pub fn run_cell(cfg: &ExperimentConfig, n: usize, k: usize, m: usize, seed: u64) -> CellOutcome {
    let start = Instant::now();
    let mut row = ResultRow {
        generator: cfg.generator.to_string(),
        policy: PolicyChoice::parse(&cfg.policy).map_or_else(|_| cfg.policy.clone(), |p| p.label()),
        feedback: cfg.feedback.to_string(),
        n,
        k,
        m,
        seed,
        surrogate_gap: None,
        exact_gap: None,
        rounds: None,
        assumption_ok: None,
        wall_time_ms: 0,
        error: None,
    };
    let result = run_pipeline(cfg, n, k, m, seed, &mut row);
    row.wall_time_ms = start.elapsed().as_millis() as u64;
    match result {
        Ok((game, report)) => CellOutcome {
            row,
            game: Some(game),
            report: Some(report),
        },
        Err(e) => {
            row.error = Some(e.to_string());
            CellOutcome {
                row,
                game: None,
                report: None,
            }
        }
    }
}

/// Worker count from `POCF_THREADS`, if set to a positive integer.
pub fn thread_limit() -> Option<usize> {
    std::env::var("POCF_THREADS").ok()?.trim().parse().ok().filter(|&t| t > 0)
}

/// Every cell of the grid, sorted by `(n, k, M, seed)`.
pub fn run_experiment_cells(cfg: &ExperimentConfig) -> Result<Vec<CellOutcome>> {
    cfg.validate()?;
    let mut tasks = Vec::with_capacity(cfg.cell_count());
    for &n in &cfg.n_grid {
        for &k in &cfg.k_grid {
            for &m in &cfg.m_grid {
                for &seed in &cfg.seeds {
                    tasks.push((n, k, m, seed));
                }
            }
        }
    }
    let work = || -> Vec<CellOutcome> {
        tasks
            .par_iter()
            .map(|&(n, k, m, seed)| run_cell(cfg, n, k, m, seed))
            .collect()
    };
    let mut out = match thread_limit() {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| PocfError::Config(e.to_string()))?
            .install(work),
        None => work(),
    };
    out.sort_by_key(|c| (c.row.n, c.row.k, c.row.m, c.row.seed));
    Ok(out)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    Ok(run_experiment_cells(cfg)?.into_iter().map(|c| c.row).collect())
}

pub fn write_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_csv_file(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    write_csv(rows, std::fs::File::create(path)?)
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers()?.clone();
    if headers.iter().ne(CSV_HEADER) {
        return Err(PocfError::Parse {
            line: 1,
            reason: format!("expected header `{}`", CSV_HEADER.join(",")),
        });
    }
    rd.deserialize().map(|r| r.map_err(PocfError::from)).collect()
}

pub fn read_csv_file(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    read_csv(std::fs::File::open(path)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendStatus {
    Pass,
    Fail,
    /// No decrease under a policy that may violate coverage.
    ExpectedFail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendLine {
    pub n: usize,
    pub k: usize,
    pub m_small: usize,
    pub m_large: usize,
    pub mean_small: f64,
    pub mean_large: f64,
    pub status: TrendStatus,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub status: TrendStatus,
    pub lines: Vec<TrendLine>,
}

/// Per `(n, k)`: is the mean surrogate gap at the largest `M` strictly below the one at the smallest `M`?
///
/// Rows are filtered by `generator` and `policy` when given. Under `one_rand` a missing decrease is
/// reported as an expected failure.
pub fn gap_trend_check(rows: &[ResultRow], generator: Option<&str>, policy: Option<&str>) -> Result<TrendReport> {
    let selected: Vec<&ResultRow> = rows
        .iter()
        .filter(|r| generator.is_none_or(|g| r.generator == g))
        .filter(|r| policy.is_none_or(|p| r.policy == p))
        .collect();
    if selected.is_empty() {
        return Err(PocfError::Config("no rows match the requested generator and policy".into()));
    }
    let policies: BTreeSet<&str> = selected.iter().map(|r| r.policy.as_str()).collect();
    let one_rand = policies.len() == 1 && policies.contains("one_rand");
    let ms: BTreeSet<usize> = selected.iter().map(|r| r.m).collect();
    if ms.len() < 2 {
        return Err(PocfError::TrendUndefined(format!(
            "only one dataset size ({}) in the grid",
            ms.first().copied().unwrap_or(0)
        )));
    }
    let (m_small, m_large) = (*ms.first().unwrap(), *ms.last().unwrap());
    let mut groups: BTreeMap<(usize, usize), BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in &selected {
        let entry = groups.entry((r.n, r.k)).or_default().entry(r.m).or_default();
        if let (None, Some(g)) = (&r.error, r.surrogate_gap) {
            if g.is_finite() {
                entry.push(g);
            }
        }
    }
    let mut lines = Vec::new();
    for ((n, k), by_m) in &groups {
        let mean_at = |m: usize| -> Result<f64> {
            match by_m.get(&m) {
                Some(v) if !v.is_empty() => Ok(v.iter().sum::<f64>() / v.len() as f64),
                _ => Err(PocfError::Config(format!("missing grid point n={n}, k={k}, M={m}"))),
            }
        };
        for &m in &ms {
            mean_at(m)?;
        }
        let (small, large) = (mean_at(m_small)?, mean_at(m_large)?);
        let (status, note) = if large < small {
            (TrendStatus::Pass, "gap decreases with M".to_string())
        } else if one_rand {
            (TrendStatus::ExpectedFail, "consistent with Assumption 1 violation".to_string())
        } else {
            (TrendStatus::Fail, "gap does not decrease with M".to_string())
        };
        lines.push(TrendLine {
            n: *n,
            k: *k,
            m_small,
            m_large,
            mean_small: small,
            mean_large: large,
            status,
            note,
        });
    }
    let status = if lines.iter().all(|l| l.status == TrendStatus::Pass) {
        TrendStatus::Pass
    } else if one_rand {
        TrendStatus::ExpectedFail
    } else {
        TrendStatus::Fail
    };
    Ok(TrendReport { status, lines })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            generator: GeneratorKind::Uniform,
            generator_params: GeneratorParams::default(),
            n_grid: vec![2, 3],
            k_grid: vec![2],
            m_grid: vec![10, 50, 200],
            policy: "rand".into(),
            feedback: FeedbackKind::Semi,
            delta: 0.05,
            seeds: vec![1, 2, 3, 4, 5],
            solver: SolverConfig {
                max_rounds: 50,
                ..SolverConfig::default()
            },
            output: None,
        }
    }

    #[test]
    fn grid_count_and_order() {
        let rows = run_experiment(&small_cfg()).unwrap();
        assert_eq!(rows.len(), 30);
        let keys: Vec<_> = rows.iter().map(|r| (r.n, r.k, r.m, r.seed)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(rows.iter().all(|r| r.error.is_none()));
    }

    #[test]
    fn reruns_are_identical_apart_from_timing() {
        let cfg = small_cfg();
        let a: Vec<_> = run_experiment(&cfg).unwrap().iter().map(ResultRow::without_timing).collect();
        let b: Vec<_> = run_experiment(&cfg).unwrap().iter().map(ResultRow::without_timing).collect();
        assert_eq!(a, b);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        write_csv(&a, &mut x).unwrap();
        write_csv(&b, &mut y).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn csv_roundtrip_and_header() {
        let rows = run_experiment(&small_cfg()).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn config_parsing() {
        let toml = r#"
            generator = "size_uniform"
            n_grid = [3]
            k_grid = [2]
            M_grid = [100, 1000]
            policy = "coalition_size"
            feedback = "bandit"
            seeds = [1, 2]
            [solver]
            max_rounds = 20
            enumeration_budget = 1000
        "#;
        let cfg = ExperimentConfig::parse(toml).unwrap();
        assert_eq!(cfg.delta, 0.01);
        assert_eq!(cfg.solver.max_rounds, 20);
        assert_eq!(cfg.solver.enumeration_budget, 1000);
        assert_eq!(PolicyChoice::parse(&cfg.policy).unwrap(), PolicyChoice::OneRand);
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::parse(&json).unwrap(), cfg);

        let bad = toml.replace("size_uniform", "mixed_effects");
        assert!(matches!(ExperimentConfig::parse(&bad), Err(PocfError::Config(_))));
        let bad = toml.replace("coalition_size", "sometimes");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    fn row(n: usize, m: usize, seed: u64, gap: f64, policy: &str) -> ResultRow {
        ResultRow {
            generator: "uniform".into(),
            policy: policy.into(),
            feedback: "semi".into(),
            n,
            k: 2,
            m,
            seed,
            surrogate_gap: Some(gap),
            exact_gap: None,
            rounds: Some(1),
            assumption_ok: None,
            wall_time_ms: 0,
            error: None,
        }
    }

    #[test]
    fn trend_logic() {
        let rows = vec![row(3, 100, 1, 2.0, "rand"), row(3, 1000, 1, 1.0, "rand")];
        assert_eq!(gap_trend_check(&rows, None, None).unwrap().status, TrendStatus::Pass);

        let flat = vec![row(3, 100, 1, 2.0, "one_rand"), row(3, 1000, 1, 2.0, "one_rand")];
        let rep = gap_trend_check(&flat, None, None).unwrap();
        assert_eq!(rep.status, TrendStatus::ExpectedFail);
        assert_eq!(rep.lines[0].note, "consistent with Assumption 1 violation");

        let flat_rand = vec![row(3, 100, 1, 2.0, "rand"), row(3, 1000, 1, 2.5, "rand")];
        assert_eq!(gap_trend_check(&flat_rand, None, None).unwrap().status, TrendStatus::Fail);

        let single = vec![row(3, 100, 1, 2.0, "rand")];
        assert!(matches!(gap_trend_check(&single, None, None), Err(PocfError::TrendUndefined(_))));

        let missing = vec![row(3, 100, 1, 2.0, "rand"), row(3, 1000, 1, 1.0, "rand"), row(4, 100, 1, 1.0, "rand")];
        assert!(matches!(gap_trend_check(&missing, None, None), Err(PocfError::Config(_))));
    }
}
