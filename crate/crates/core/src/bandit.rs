//! Linear features, ridge-regression utility estimates with elliptical bonuses, and action coverage.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::coalition::CoalitionSet;
use crate::dataset::{Dataset, FeedbackKind};
use crate::error::{PocfError, Result};
use crate::expect::ProfileDraws;
use crate::game::{GameSpec, JointAction, MixedProfile};
use crate::semi_bandit::check_delta;
use crate::serde_util::one_based;

/// Positions of the nonzero entries of `y_i(a)`, each `l * n + j`.
fn local_support(a: &[CoalitionSet], i: usize) -> Vec<usize> {
    let n = a.len();
    let mut nz = Vec::new();
    for l in a[i].iter() {
        for (j, sj) in a.iter().enumerate() {
            if sj.contains(l) {
                nz.push(l * n + j);
            }
        }
    }
    nz
}

/// `y_i(a)` of length `n k`: entry `l * n + j` is one iff `l` lies in both `a_i` and `a_j`.
pub fn local_features(a: &JointAction, k: usize, i: usize) -> Vec<f64> {
    let n = a.n();
    let mut y = vec![0.0; n * k];
    for p in local_support(a.actions(), i) {
        y[p] = 1.0;
    }
    y
}

/// `z_i(a)` of length `n^2 k`, holding `y_i(a)` in block `i`.
pub fn features(game: &GameSpec, a: &JointAction, i: usize) -> Result<Vec<f64>> {
    game.validate_action(a)?;
    let (n, k) = (game.n(), game.k());
    let mut z = vec![0.0; n * n * k];
    for p in local_support(a.actions(), i) {
        z[i * n * k + p] = 1.0;
    }
    Ok(z)
}

/// Stacked true means in the layout of `z`; diagonal entries are zero.
pub fn true_parameter(game: &GameSpec) -> Vec<f64> {
    let (n, k) = (game.n(), game.k());
    let mut theta = vec![0.0; n * n * k];
    for i in 0..n {
        for l in 0..k {
            for j in 0..n {
                if j != i {
                    theta[i * n * k + l * n + j] = game.mean(i, j, l, 2);
                }
            }
        }
    }
    theta
}

/// `beta` with `sqrt(beta) = 2 sqrt(n^2 k) + sqrt(n^2 k ln(1 + M/n) + 2 ln(4(n+1)k/delta))`.
pub fn confidence_radius_sq(n: usize, k: usize, m: usize, delta: f64) -> f64 {
    let d = (n * n * k) as f64;
    let iota = 2.0 * (4.0 * (n as f64 + 1.0) * k as f64 / delta).ln();
    let root = 2.0 * d.sqrt() + (d * (1.0 + m as f64 / n as f64).ln() + iota).sqrt();
    root * root
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RidgeOptions {
    /// Accept semi-bandit data by summing each record's pairwise values.
    pub reduce_semi: bool,
    /// Average `theta[i][l][j]` with `theta[j][l][i]` after fitting.
    pub symmetrize: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "RidgeFile", try_from = "RidgeFile")]
pub struct RidgeEstimator {
    n: usize,
    k: usize,
    delta: f64,
    m: usize,
    beta: f64,
    reduced_from_semi: bool,
    symmetrized: bool,
    gram: Vec<DMatrix<f64>>,
    inverse: Vec<DMatrix<f64>>,
    theta: Vec<DVector<f64>>,
}

impl RidgeEstimator {
    pub fn fit(ds: &Dataset, delta: f64) -> Result<Self> {
        Self::fit_with(ds, delta, RidgeOptions::default())
    }

    pub fn fit_with(ds: &Dataset, delta: f64, opts: RidgeOptions) -> Result<Self> {
        check_delta(delta)?;
        let reduced;
        let ds = match ds.meta.feedback {
            FeedbackKind::Bandit => ds,
            FeedbackKind::Semi if opts.reduce_semi => {
                reduced = ds.to_bandit();
                &reduced
            }
            FeedbackKind::Semi => {
                return Err(PocfError::FeedbackMismatch {
                    expected: "bandit",
                    found: "semi",
                })
            }
        };
        let (n, k) = (ds.meta.n, ds.meta.k);
        let dim = n * k;
        let mut gram = vec![DMatrix::<f64>::identity(dim, dim); n];
        let mut rhs = vec![DVector::<f64>::zeros(dim); n];
        for rec in &ds.records {
            let totals = rec.bandit_totals(n);
            for i in 0..n {
                let nz = local_support(rec.action.actions(), i);
                for &p in &nz {
                    rhs[i][p] += totals[i];
                    for &q in &nz {
                        gram[i][(p, q)] += 1.0;
                    }
                }
            }
        }
        let mut theta = Vec::with_capacity(n);
        let mut inverse = Vec::with_capacity(n);
        for (g, r) in gram.iter().zip(&rhs) {
            let chol = g
                .clone()
                .cholesky()
                .ok_or_else(|| PocfError::Shape("gram block is not positive definite".into()))?;
            theta.push(chol.solve(r));
            inverse.push(chol.inverse());
        }
        let mut est = Self {
            n,
            k,
            delta,
            m: ds.records.len(),
            beta: confidence_radius_sq(n, k, ds.records.len(), delta),
            reduced_from_semi: ds.meta.reduced_from_semi,
            symmetrized: false,
            gram,
            inverse,
            theta,
        };
        if opts.symmetrize {
            est.symmetrize();
        }
        Ok(est)
    }

    fn symmetrize(&mut self) {
        let n = self.n;
        for l in 0..self.k {
            for i in 0..n {
                for j in i + 1..n {
                    let avg = 0.5 * (self.theta[i][l * n + j] + self.theta[j][l * n + i]);
                    self.theta[i][l * n + j] = avg;
                    self.theta[j][l * n + i] = avg;
                }
            }
        }
        self.symmetrized = true;
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

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn reduced_from_semi(&self) -> bool {
        self.reduced_from_semi
    }

    /// Block `i` of `V`.
    pub fn gram_block(&self, i: usize) -> &DMatrix<f64> {
        &self.gram[i]
    }

    pub fn theta_block(&self, i: usize) -> &DVector<f64> {
        &self.theta[i]
    }

    /// `V` as a dense `n^2 k` square matrix.
    pub fn dense_gram(&self) -> DMatrix<f64> {
        let dim = self.n * self.k;
        let mut v = DMatrix::zeros(self.n * dim, self.n * dim);
        for (i, g) in self.gram.iter().enumerate() {
            v.view_mut((i * dim, i * dim), (dim, dim)).copy_from(g);
        }
        v
    }

    pub fn dense_theta(&self) -> Vec<f64> {
        self.theta.iter().flat_map(|t| t.iter().copied()).collect()
    }

    /// Replaces `theta` with `c * theta`.
    pub fn scale_theta(&mut self, c: f64) {
        for t in &mut self.theta {
            *t *= c;
        }
    }

    pub(crate) fn evaluate(&self, a: &[CoalitionSet], i: usize) -> (f64, f64) {
        let nz = local_support(a, i);
        let est: f64 = nz.iter().map(|&p| self.theta[i][p]).sum();
        let inv = &self.inverse[i];
        let mut quad = 0.0;
        for &p in &nz {
            for &q in &nz {
                quad += inv[(p, q)];
            }
        }
        (est, (quad.max(0.0) * self.beta).sqrt())
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

    pub fn estimate(&self, a: &JointAction) -> Result<Vec<f64>> {
        self.check_shape(a)?;
        Ok((0..self.n).map(|i| self.evaluate(a.actions(), i).0).collect())
    }

    pub fn bonus(&self, a: &JointAction) -> Result<Vec<f64>> {
        self.check_shape(a)?;
        Ok((0..self.n).map(|i| self.evaluate(a.actions(), i).1).collect())
    }

    /// `sqrt(z^T V^-1 z * beta)` for an arbitrary vector of length `n^2 k`.
    pub fn bonus_of_vector(&self, z: &[f64]) -> Result<f64> {
        let dim = self.n * self.k;
        if z.len() != self.n * dim {
            return Err(PocfError::Shape(format!("expected length {}, got {}", self.n * dim, z.len())));
        }
        let mut quad = 0.0;
        for (i, inv) in self.inverse.iter().enumerate() {
            let y = DVector::from_column_slice(&z[i * dim..(i + 1) * dim]);
            quad += (y.transpose() * inv * &y)[(0, 0)];
        }
        Ok((quad.max(0.0) * self.beta).sqrt())
    }

    /// Estimator with an identity gram and zero `theta`.
    pub fn empty(n: usize, k: usize, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        let dim = n * k;
        Ok(Self {
            n,
            k,
            delta,
            m: 0,
            beta: confidence_radius_sq(n, k, 0, delta),
            reduced_from_semi: false,
            symmetrized: false,
            gram: vec![DMatrix::identity(dim, dim); n],
            inverse: vec![DMatrix::identity(dim, dim); n],
            theta: vec![DVector::zeros(dim); n],
        })
    }
}

#[derive(Serialize, Deserialize)]
struct RidgeFile {
    n: usize,
    k: usize,
    delta: f64,
    #[serde(rename = "M")]
    m: usize,
    beta: f64,
    #[serde(default)]
    reduced_from_semi: bool,
    #[serde(default)]
    symmetrized: bool,
    /// Row-major dense `V`.
    v: Vec<f64>,
    theta: Vec<f64>,
}

impl From<RidgeEstimator> for RidgeFile {
    fn from(e: RidgeEstimator) -> Self {
        let dense = e.dense_gram();
        let v = dense.transpose().as_slice().to_vec();
        RidgeFile {
            n: e.n,
            k: e.k,
            delta: e.delta,
            m: e.m,
            beta: e.beta,
            reduced_from_semi: e.reduced_from_semi,
            symmetrized: e.symmetrized,
            theta: e.dense_theta(),
            v,
        }
    }
}

impl TryFrom<RidgeFile> for RidgeEstimator {
    type Error = PocfError;

    fn try_from(f: RidgeFile) -> Result<Self> {
        let dim = f.n * f.k;
        let full = f.n * dim;
        if f.v.len() != full * full || f.theta.len() != full {
            return Err(PocfError::Shape("ridge file has inconsistent dimensions".into()));
        }
        let dense = DMatrix::from_row_slice(full, full, &f.v);
        let mut gram = Vec::with_capacity(f.n);
        let mut inverse = Vec::with_capacity(f.n);
        for i in 0..f.n {
            let g = dense.view((i * dim, i * dim), (dim, dim)).into_owned();
            let chol = g
                .clone()
                .cholesky()
                .ok_or_else(|| PocfError::Shape(format!("block {} of V is not positive definite", i + 1)))?;
            inverse.push(chol.inverse());
            gram.push(g);
        }
        let theta = (0..f.n)
            .map(|i| DVector::from_column_slice(&f.theta[i * dim..(i + 1) * dim]))
            .collect();
        Ok(Self {
            n: f.n,
            k: f.k,
            delta: f.delta,
            m: f.m,
            beta: f.beta,
            reduced_from_semi: f.reduced_from_semi,
            symmetrized: f.symmetrized,
            gram,
            inverse,
            theta,
        })
    }
}

/// Deviation whose feature covariance is not dominated by the dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenWitness {
    #[serde(with = "one_based")]
    pub agent: usize,
    pub deviation: CoalitionSet,
    pub min_eigenvalue: f64,
    /// Unit eigenvector of block `agent`, length `n k`.
    pub direction: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assumption2Check {
    pub holds: bool,
    /// Smallest eigenvalue seen over every agent and deviation.
    pub min_eigenvalue: f64,
    pub witness: Option<EigenWitness>,
}

pub const PSD_TOLERANCE: f64 = 1e-8;

/// `E[y_i y_i^T]` under `(phi_{-i}, dev)` for every pure deviation of agent `i`.
fn deviation_second_moments(game: &GameSpec, phi: &MixedProfile, i: usize, budget: u128) -> Result<Vec<DMatrix<f64>>> {
    let dim = game.n() * game.k();
    let mut draws = ProfileDraws::enumerate(game, phi, Some(i), budget)?;
    game.action_set(i)
        .iter()
        .map(|&dev| {
            let mut s = DMatrix::<f64>::zeros(dim, dim);
            for (a, &w) in draws.actions.iter_mut().zip(&draws.weights) {
                a[i] = dev;
                let nz = local_support(a, i);
                for &p in &nz {
                    for &q in &nz {
                        s[(p, q)] += w;
                    }
                }
            }
            Ok(s)
        })
        .collect()
}

/// `V >= I + M c_act E[z_i z_i^T]` for every agent and pure deviation from `ns_profile`.
pub fn check_assumption2(
    est: &RidgeEstimator,
    game: &GameSpec,
    ns_profile: &MixedProfile,
    c_act: f64,
    m: usize,
) -> Result<Assumption2Check> {
    let moments = all_moments(est, game, ns_profile)?;
    Ok(check_with_moments(est, game, &moments, c_act, m))
}

fn all_moments(est: &RidgeEstimator, game: &GameSpec, ns_profile: &MixedProfile) -> Result<Vec<Vec<DMatrix<f64>>>> {
    if est.n != game.n() || est.k != game.k() {
        return Err(PocfError::Shape("estimator and game disagree on n or k".into()));
    }
    ns_profile.validate(game)?;
    (0..game.n())
        .map(|i| deviation_second_moments(game, ns_profile, i, crate::game::ENUMERATION_BUDGET))
        .collect()
}

fn check_with_moments(
    est: &RidgeEstimator,
    game: &GameSpec,
    moments: &[Vec<DMatrix<f64>>],
    c_act: f64,
    m: usize,
) -> Assumption2Check {
    let dim = game.n() * game.k();
    let scale = m as f64 * c_act;
    let mut min_eigenvalue = f64::INFINITY;
    let mut witness: Option<EigenWitness> = None;
    for (i, per_dev) in moments.iter().enumerate() {
        let base = &est.gram[i] - DMatrix::<f64>::identity(dim, dim);
        for (t, s) in per_dev.iter().enumerate() {
            let diff = &base - s * scale;
            let eig = diff.symmetric_eigen();
            let (idx, &lam) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .min_by(|x, y| x.1.total_cmp(y.1))
                .expect("nonempty block");
            min_eigenvalue = min_eigenvalue.min(lam);
            if lam < -PSD_TOLERANCE && witness.as_ref().is_none_or(|w| lam < w.min_eigenvalue) {
                witness = Some(EigenWitness {
                    agent: i,
                    deviation: game.action_set(i)[t],
                    min_eigenvalue: lam,
                    direction: eig.eigenvectors.column(idx).iter().copied().collect(),
                });
            }
        }
    }
    Assumption2Check {
        holds: witness.is_none(),
        min_eigenvalue,
        witness,
    }
}

/// Largest `c_act` for which the coverage check passes, found by bisection to relative precision `1e-9`.
pub fn max_action_coverage(est: &RidgeEstimator, game: &GameSpec, ns_profile: &MixedProfile, m: usize) -> Result<f64> {
    let moments = all_moments(est, game, ns_profile)?;
    let passes = |c: f64| check_with_moments(est, game, &moments, c, m).holds;
    if m == 0 {
        return Ok(f64::INFINITY);
    }
    let mut hi = 1.0;
    while passes(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return Ok(f64::INFINITY);
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if passes(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// `4 sqrt(n^2 k beta / (c_act M)) + eps_opt`.
pub fn theoretical_bound_bandit(n: usize, k: usize, beta: f64, c_act: f64, m: usize, eps_opt: f64) -> f64 {
    if m == 0 || c_act <= 0.0 {
        return f64::INFINITY;
    }
    4.0 * ((n * n * k) as f64 * beta / (c_act * m as f64)).sqrt() + eps_opt
}

/// `16 n^2 k beta / (c_act (eps - eps_opt)^2)`; infinite when `eps <= eps_opt`.
pub fn required_samples_bandit(n: usize, k: usize, beta: f64, c_act: f64, eps: f64, eps_opt: f64) -> f64 {
    if eps <= eps_opt || c_act <= 0.0 {
        return f64::INFINITY;
    }
    16.0 * (n * n * k) as f64 * beta / (c_act * (eps - eps_opt).powi(2))
}

/// `1 / (2 n k^4)`.
pub fn power_set_coverage_constant(n: usize, k: usize) -> f64 {
    1.0 / (2.0 * n as f64 * (k as f64).powi(4))
}

/// `8 (n k + 1) ln((n k + 1) / delta)`, rounded up.
pub fn power_set_sample_size(n: usize, k: usize, delta: f64) -> usize {
    let d = (n * k + 1) as f64;
    (8.0 * d * (d / delta).ln()).ceil() as usize
}

/// Uniform policy over `a_star` and every joint action where one agent joins or leaves one coalition.
pub fn single_toggle_policy(game: &GameSpec, a_star: &JointAction) -> Result<crate::policy::ExplorationPolicy> {
    game.validate_action(a_star)?;
    let mut support = vec![a_star.clone()];
    for i in 0..game.n() {
        for l in 0..game.k() {
            let s = a_star.action(i).toggle(l);
            if !s.is_empty() && game.action_index(i, s).is_some() {
                support.push(a_star.with_action(i, s));
            }
        }
    }
    Ok(crate::policy::ExplorationPolicy::uniform_over("single_toggle", support))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{sample_dataset, DatasetMeta, Feedback, Record};
    use crate::game::UtilityModel;
    use crate::policy::ExplorationPolicy;

    fn cs(v: &[usize]) -> CoalitionSet {
        CoalitionSet::from_indices(v.iter().map(|x| x - 1))
    }

    fn power_set_game(n: usize, k: usize, model: UtilityModel) -> GameSpec {
        let all: Vec<CoalitionSet> = (1..(1u64 << k)).map(CoalitionSet::from_bits).collect();
        GameSpec::with_shared_actions(n, k, all, model).unwrap()
    }

    fn bandit_ds(n: usize, k: usize, recs: Vec<(JointAction, Vec<f64>)>) -> Dataset {
        Dataset {
            meta: DatasetMeta {
                game_hash: String::new(),
                policy: "test".into(),
                seed: 0,
                feedback: FeedbackKind::Bandit,
                n,
                k,
                m: recs.len(),
                reduced_from_semi: false,
            },
            records: recs
                .into_iter()
                .map(|(action, v)| Record {
                    action,
                    feedback: Feedback::Bandit(v),
                })
                .collect(),
        }
    }

    #[test]
    fn features_two_agents_one_coalition() {
        let game = power_set_game(2, 1, UtilityModel::Uniform { size_scaled: false });
        let a = JointAction::new(vec![cs(&[1]), cs(&[1])]);
        assert_eq!(features(&game, &a, 0).unwrap(), vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(features(&game, &a, 1).unwrap(), vec![0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn lone_agent_has_own_bits_only() {
        let game = power_set_game(3, 3, UtilityModel::Uniform { size_scaled: false });
        let a = JointAction::new(vec![cs(&[1, 2]), cs(&[3]), cs(&[3])]);
        let z = features(&game, &a, 0).unwrap();
        assert_eq!(z.iter().filter(|&&x| x == 1.0).count(), 2);
    }

    #[test]
    fn empty_fit_is_identity() {
        let est = RidgeEstimator::fit(&bandit_ds(2, 1, vec![]), 0.05).unwrap();
        assert_eq!(est.dense_gram(), DMatrix::identity(4, 4));
        assert!(est.dense_theta().iter().all(|&x| x == 0.0));
        assert!((est.beta().sqrt() - (4.0 + (2.0 * 240f64.ln()).sqrt())).abs() < 1e-12);
        assert!((est.beta().sqrt() - 7.3108).abs() < 1e-4);
        let a = JointAction::new(vec![cs(&[1]), cs(&[1])]);
        let b = est.bonus(&a).unwrap();
        assert!((b[0] - 2f64.sqrt() * est.beta().sqrt()).abs() < 1e-12);
        assert_eq!(est.estimate(&a).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn one_record_rank_update() {
        let a = JointAction::new(vec![cs(&[1, 2]), cs(&[2]), cs(&[1])]);
        let est = RidgeEstimator::fit(&bandit_ds(3, 2, vec![(a.clone(), vec![0.3, -0.2, 0.1])]), 0.05).unwrap();
        let game = power_set_game(3, 2, UtilityModel::Uniform { size_scaled: false });
        let mut want = DMatrix::<f64>::identity(18, 18);
        for i in 0..3 {
            let z = DVector::from_vec(features(&game, &a, i).unwrap());
            want += &z * z.transpose();
        }
        assert_eq!(est.dense_gram(), want);
    }

    #[test]
    fn semi_dataset_rejected_unless_reduced() {
        let game = power_set_game(2, 2, UtilityModel::Uniform { size_scaled: false });
        let ds = sample_dataset(&game, &ExplorationPolicy::UniformRandom, 20, FeedbackKind::Semi, 3).unwrap();
        assert!(matches!(
            RidgeEstimator::fit(&ds, 0.05),
            Err(PocfError::FeedbackMismatch { .. })
        ));
        let opts = RidgeOptions {
            reduce_semi: true,
            symmetrize: false,
        };
        let est = RidgeEstimator::fit_with(&ds, 0.05, opts).unwrap();
        assert!(est.reduced_from_semi());
        let direct = RidgeEstimator::fit(&ds.to_bandit(), 0.05).unwrap();
        assert_eq!(est.dense_theta(), direct.dense_theta());
    }

    #[test]
    fn serde_roundtrip() {
        let game = power_set_game(3, 2, UtilityModel::Uniform { size_scaled: false });
        let ds = sample_dataset(&game, &ExplorationPolicy::UniformRandom, 50, FeedbackKind::Bandit, 9).unwrap();
        let est = RidgeEstimator::fit(&ds, 0.05).unwrap();
        let json = serde_json::to_string(&est).unwrap();
        let back: RidgeEstimator = serde_json::from_str(&json).unwrap();
        assert_eq!(back.dense_gram(), est.dense_gram());
        assert_eq!(back.dense_theta(), est.dense_theta());
        let a = JointAction::new(vec![cs(&[1]), cs(&[1, 2]), cs(&[2])]);
        assert_eq!(back.bonus(&a).unwrap(), est.bonus(&a).unwrap());
    }

    #[test]
    fn theta_scaling_scales_estimates() {
        let game = power_set_game(3, 2, UtilityModel::Uniform { size_scaled: false });
        let ds = sample_dataset(&game, &ExplorationPolicy::UniformRandom, 50, FeedbackKind::Bandit, 2).unwrap();
        let est = RidgeEstimator::fit(&ds, 0.05).unwrap();
        let mut scaled = est.clone();
        scaled.scale_theta(-2.5);
        let a = JointAction::new(vec![cs(&[1, 2]), cs(&[1, 2]), cs(&[2])]);
        for (x, y) in est.estimate(&a).unwrap().iter().zip(scaled.estimate(&a).unwrap()) {
            assert!((y + 2.5 * x).abs() < 1e-12);
        }
        assert_eq!(est.bonus_of_vector(&[0.0; 18]).unwrap(), 0.0);
    }

    #[test]
    fn repeated_action_bonus_shrinks_like_inverse_sqrt() {
        let a = JointAction::new(vec![cs(&[1]), cs(&[1]), cs(&[2])]);
        let fit = |m: usize| {
            let ds = bandit_ds(3, 2, vec![(a.clone(), vec![0.0; 3]); m]);
            let mut est = RidgeEstimator::fit(&ds, 0.05).unwrap();
            est.beta = 1.0;
            est.bonus(&a).unwrap()[0]
        };
        let ratio = fit(400) / fit(100);
        assert!((0.4..=0.6).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn coverage_holds_for_repeated_deviation() {
        let game = GameSpec::with_shared_actions(
            2,
            2,
            vec![cs(&[1]), cs(&[2])],
            UtilityModel::Uniform { size_scaled: false },
        )
        .unwrap();
        let ns = MixedProfile::from_indices(&game, &[0, 0]);
        let dev = JointAction::new(vec![cs(&[2]), cs(&[1])]);
        let base = JointAction::new(vec![cs(&[1]), cs(&[1])]);
        let mut recs = vec![(dev.clone(), vec![0.0; 2]); 10];
        recs.extend(vec![(base.clone(), vec![0.0; 2]); 10]);
        let flipped = JointAction::new(vec![cs(&[1]), cs(&[2])]);
        recs.extend(vec![(flipped, vec![0.0; 2]); 10]);
        let est = RidgeEstimator::fit(&bandit_ds(2, 2, recs), 0.05).unwrap();
        let check = check_assumption2(&est, &game, &ns, 1.0, 10).unwrap();
        assert!(check.holds, "{check:?}");
        let fail = check_assumption2(&est, &game, &ns, 50.0, 10).unwrap();
        assert!(!fail.holds);
        let w = fail.witness.unwrap();
        assert!(w.min_eigenvalue < -PSD_TOLERANCE);
        let c = max_action_coverage(&est, &game, &ns, 10).unwrap();
        assert!((c - 1.0).abs() < 1e-6, "{c}");
    }

    #[test]
    fn bound_formulas() {
        let beta = confidence_radius_sq(3, 3, 10_000, 0.05);
        let c = power_set_coverage_constant(3, 3);
        assert_eq!(c, 1.0 / 486.0);
        let want = 4.0 * (27.0 * beta * 486.0 / 1e4).sqrt();
        assert!((theoretical_bound_bandit(3, 3, beta, c, 10_000, 0.0) - want).abs() < 1e-9);
        let b1 = theoretical_bound_bandit(3, 3, 2.0, c, 100, 0.0);
        let b4 = theoretical_bound_bandit(3, 3, 2.0, c, 400, 0.0);
        assert!((b4 - b1 / 2.0).abs() < 1e-12);
        assert!(required_samples_bandit(3, 3, 2.0, c, 0.1, 0.1).is_infinite());
        let m = required_samples_bandit(3, 3, 2.0, c, 0.5, 0.0);
        assert!((theoretical_bound_bandit(3, 3, 2.0, c, m.ceil() as usize, 0.0) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn true_parameter_reproduces_means() {
        let game = GameSpec::with_shared_actions(
            3,
            2,
            (1..4).map(CoalitionSet::from_bits).collect(),
            UtilityModel::Gaussian {
                mu: vec![vec![0.0, 0.4, -0.3], vec![0.4, 0.0, 0.9], vec![-0.3, 0.9, 0.0]],
                size_scaled: false,
            },
        )
        .unwrap();
        let theta = true_parameter(&game);
        for idx in game.joint_indices() {
            let a = game.joint_action_from_indices(&idx).unwrap();
            for i in 0..3 {
                let z = features(&game, &a, i).unwrap();
                let dot: f64 = z.iter().zip(&theta).map(|(x, y)| x * y).sum();
                assert!((dot - game.mean_utility(&a, i).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn toggle_policy_support() {
        let game = power_set_game(2, 2, UtilityModel::Uniform { size_scaled: false });
        let a = JointAction::new(vec![cs(&[1]), cs(&[1, 2])]);
        let ExplorationPolicy::Explicit { support, .. } = single_toggle_policy(&game, &a).unwrap() else {
            panic!()
        };
        // agent 1: {1} -> {1,2} only; agent 2: {2}, {1}
        assert_eq!(support.len(), 4);
    }
}
