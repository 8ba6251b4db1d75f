//! Offline datasets under semi-bandit or bandit feedback, and their JSONL form.
//!
//! The first line of a file is `{"meta": {...}}`. Every following line is one record
//! `{"a": [[l, ...], ...], "fb": {"semi": [[i, j, l, v], ...]}}` or `{"fb": {"bandit": [v_1, ...]}}`
//! with 1-based indices. Semi-bandit records store each unordered pair once per shared coalition.

use std::fmt;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coalition::CoalitionSet;
use crate::error::{PocfError, Result};
use crate::expect::stream_rng;
use crate::game::{GameSpec, JointAction};
use crate::policy::ExplorationPolicy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    Semi,
    Bandit,
}

impl FeedbackKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Semi => "semi",
            Self::Bandit => "bandit",
        }
    }
}

impl fmt::Display for FeedbackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FeedbackKind {
    type Err = PocfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semi" | "semi-bandit" | "semi_bandit" => Ok(Self::Semi),
            "bandit" => Ok(Self::Bandit),
            other => Err(PocfError::Config(format!("unknown feedback kind `{other}`"))),
        }
    }
}

/// One observed pairwise utility; zero-based with `i < j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairObservation {
    pub i: usize,
    pub j: usize,
    pub l: usize,
    pub v: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Feedback {
    Semi(Vec<PairObservation>),
    Bandit(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub action: JointAction,
    pub feedback: Feedback,
}

impl Record {
    /// Per-agent totals, summing pairwise observations when needed.
    pub fn bandit_totals(&self, n: usize) -> Vec<f64> {
        match &self.feedback {
            Feedback::Bandit(v) => v.clone(),
            Feedback::Semi(obs) => {
                let mut totals = vec![0.0; n];
                for o in obs {
                    totals[o.i] += o.v;
                    totals[o.j] += o.v;
                }
                totals
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub game_hash: String,
    pub policy: String,
    pub seed: u64,
    pub feedback: FeedbackKind,
    pub n: usize,
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    /// Bandit totals derived from semi-bandit observations.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reduced_from_semi: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub records: Vec<Record>,
}

/// Draws `m` i.i.d. records; record `r` uses the substream `(seed, r)`.
pub fn sample_dataset(
    game: &GameSpec,
    policy: &ExplorationPolicy,
    m: usize,
    feedback: FeedbackKind,
    seed: u64,
) -> Result<Dataset> {
    let sampler = policy.sampler(game)?;
    let records = (0..m)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            let action = sampler.sample(&mut rng);
            let table = game.sample_utilities_unchecked(action.actions(), &mut rng);
            let feedback = match feedback {
                FeedbackKind::Semi => Feedback::Semi(pair_observations(&action, |i, j, l| table.get(i, j, l))),
                FeedbackKind::Bandit => {
                    Feedback::Bandit((0..game.n()).map(|i| table.total(&action, i)).collect())
                }
            };
            Record { action, feedback }
        })
        .collect();
    Ok(Dataset {
        meta: DatasetMeta {
            game_hash: game.fingerprint(),
            policy: policy.descriptor(),
            seed,
            feedback,
            n: game.n(),
            k: game.k(),
            m,
            reduced_from_semi: false,
        },
        records,
    })
}

/// Co-member pairs of `a` in canonical order: `i < j`, then ascending coalition.
pub(crate) fn pair_observations(a: &JointAction, mut value: impl FnMut(usize, usize, usize) -> f64) -> Vec<PairObservation> {
    let acts = a.actions();
    let mut out = Vec::new();
    for i in 0..acts.len() {
        for j in i + 1..acts.len() {
            for l in acts[i].intersection(acts[j]).iter() {
                out.push(PairObservation { i, j, l, v: value(i, j, l) });
            }
        }
    }
    out
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Bandit view of a semi-bandit dataset, flagged in the metadata.
    pub fn to_bandit(&self) -> Dataset {
        if self.meta.feedback == FeedbackKind::Bandit {
            return self.clone();
        }
        let n = self.meta.n;
        Dataset {
            meta: DatasetMeta {
                feedback: FeedbackKind::Bandit,
                reduced_from_semi: true,
                ..self.meta.clone()
            },
            records: self
                .records
                .iter()
                .map(|r| Record {
                    action: r.action.clone(),
                    feedback: Feedback::Bandit(r.bandit_totals(n)),
                })
                .collect(),
        }
    }

    /// Checks every record against the game's action sets.
    pub fn validate_against(&self, game: &GameSpec) -> Result<()> {
        if self.meta.n != game.n() || self.meta.k != game.k() {
            return Err(PocfError::Shape(format!(
                "dataset is for n={}, k={} but the game has n={}, k={}",
                self.meta.n,
                self.meta.k,
                game.n(),
                game.k()
            )));
        }
        for (r, rec) in self.records.iter().enumerate() {
            game.validate_action(&rec.action).map_err(|e| PocfError::Parse {
                line: r + 2,
                reason: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        serde_json::to_writer(&mut *w, &MetaLine { meta: &self.meta })?;
        w.write_all(b"\n")?;
        let mut line = String::new();
        for rec in &self.records {
            line.clear();
            encode_record(rec, &mut line);
            w.write_all(line.as_bytes())?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Dataset> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Dataset> {
        let mut lines = reader.lines();
        let header = lines.next().ok_or(PocfError::Parse {
            line: 1,
            reason: "missing metadata line".into(),
        })??;
        let meta = serde_json::from_str::<MetaOwned>(&header)
            .map_err(|e| PocfError::Parse {
                line: 1,
                reason: format!("metadata: {e}"),
            })?
            .meta;
        let mut records = Vec::with_capacity(meta.m);
        for (pos, line) in lines.enumerate() {
            let lineno = pos + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec = decode_record(&line, &meta).map_err(|reason| PocfError::Parse { line: lineno, reason })?;
            records.push(rec);
        }
        if records.len() != meta.m {
            return Err(PocfError::Parse {
                line: records.len() + 2,
                reason: format!("expected {} records, found {}", meta.m, records.len()),
            });
        }
        Ok(Dataset { meta, records })
    }
}

#[derive(Serialize)]
struct MetaLine<'a> {
    meta: &'a DatasetMeta,
}

#[derive(Deserialize)]
struct MetaOwned {
    meta: DatasetMeta,
}

/// Seventeen significant digits, which round-trips every `f64`.
fn push_f64(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("writing to a String");
}

fn encode_record(rec: &Record, out: &mut String) {
    out.push_str("{\"a\":[");
    for (i, s) in rec.action.actions().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push('[');
        for (p, l) in s.iter().enumerate() {
            if p > 0 {
                out.push(',');
            }
            write!(out, "{}", l + 1).expect("writing to a String");
        }
        out.push(']');
    }
    out.push_str("],\"fb\":{");
    match &rec.feedback {
        Feedback::Semi(obs) => {
            out.push_str("\"semi\":[");
            for (p, o) in obs.iter().enumerate() {
                if p > 0 {
                    out.push(',');
                }
                write!(out, "[{},{},{},", o.i + 1, o.j + 1, o.l + 1).expect("writing to a String");
                push_f64(out, o.v);
                out.push(']');
            }
        }
        Feedback::Bandit(v) => {
            out.push_str("\"bandit\":[");
            for (p, x) in v.iter().enumerate() {
                if p > 0 {
                    out.push(',');
                }
                push_f64(out, *x);
            }
        }
    }
    out.push_str("]}}");
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordRepr {
    a: Vec<Vec<usize>>,
    fb: FeedbackRepr,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum FeedbackRepr {
    Semi(Vec<(usize, usize, usize, f64)>),
    Bandit(Vec<f64>),
}

fn decode_record(line: &str, meta: &DatasetMeta) -> std::result::Result<Record, String> {
    let repr: RecordRepr = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let (n, k) = (meta.n, meta.k);
    if repr.a.len() != n {
        return Err(format!("joint action has {} entries for {n} agents", repr.a.len()));
    }
    let mut acts = Vec::with_capacity(n);
    for (i, s) in repr.a.iter().enumerate() {
        let set = CoalitionSet::from_one_based(s).map_err(|e| format!("agent {}: {e}", i + 1))?;
        if set.is_empty() || !set.within(k) {
            return Err(format!("agent {}: action {set} is not a nonempty subset of 1..={k}", i + 1));
        }
        acts.push(set);
    }
    let action = JointAction::new(acts);
    let feedback = match repr.fb {
        FeedbackRepr::Semi(entries) => {
            if meta.feedback != FeedbackKind::Semi {
                return Err("semi-bandit record in a bandit dataset".into());
            }
            let obs: Vec<PairObservation> = entries
                .into_iter()
                .map(|(i, j, l, v)| {
                    if i == 0 || j == 0 || l == 0 || i > n || j > n || l > k || i >= j {
                        return Err(format!("bad pair entry ({i},{j},{l})"));
                    }
                    if !(-1.0..=1.0).contains(&v) {
                        return Err(format!("pair utility {v} outside [-1, 1]"));
                    }
                    Ok(PairObservation { i: i - 1, j: j - 1, l: l - 1, v })
                })
                .collect::<std::result::Result<_, _>>()?;
            let expected = pair_observations(&action, |_, _, _| 0.0);
            let keys = |o: &PairObservation| (o.i, o.j, o.l);
            if obs.len() != expected.len() || obs.iter().zip(&expected).any(|(a, b)| keys(a) != keys(b)) {
                return Err("semi-bandit entries do not match the co-member pairs of the joint action".into());
            }
            Feedback::Semi(obs)
        }
        FeedbackRepr::Bandit(v) => {
            if meta.feedback != FeedbackKind::Bandit {
                return Err("bandit record in a semi-bandit dataset".into());
            }
            if v.len() != n {
                return Err(format!("{} bandit totals for {n} agents", v.len()));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err("non-finite bandit total".into());
            }
            Feedback::Bandit(v)
        }
    };
    Ok(Record { action, feedback })
}
