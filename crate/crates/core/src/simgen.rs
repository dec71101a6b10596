//! Simulation generators and Monte Carlo power / Type-I error studies.
//!
//! Settings:
//!
//! * `Nonlin5`: five independent standard normal features,
//!   `y = -b x1 + b x2^2 - b x3^3 + b sin(2 x4) - b |x5| + e`, `b = 0.2`,
//!   noise scale 0.2. Used for the nonlinearity test.
//! * `Linear`, `Smooth`, `Nonsmooth`: four standard normal features with
//!   per-dataset coefficients `beta_j ~ N(mean, 0.01^2)`; under the null
//!   `beta_4 = 0` and the other means are 0.3 (0.18 for nonsmooth), under
//!   the alternative all four means equal `m`. Noise scale 0.3.
//! * `Correlated`: eight multivariate normal features with a given
//!   correlation matrix, `y = b x2^2 + b cos x3 + b sin 2x4 + b (x5 + .. + x8) + e`,
//!   `b ~ N(0.1, 0.01^2)`, noise scale 0.1. Feature 1 carries no signal.
//!
//! Noise scales are standard deviations unless [`NoiseScale::Variance`] is
//! selected.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg;
use crate::nn::{self, NetworkConfig};
use crate::parallel;
use crate::permtest::{self, TestConfig};
use crate::seed::{self, domain, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SimKind {
    Nonlin5,
    Linear,
    Smooth,
    Nonsmooth,
    Correlated,
}

impl SimKind {
    pub fn n_features(self) -> usize {
        match self {
            SimKind::Nonlin5 => 5,
            SimKind::Linear | SimKind::Smooth | SimKind::Nonsmooth => 4,
            SimKind::Correlated => 8,
        }
    }

    /// Noise scale used when none is given.
    pub fn default_noise(self) -> f64 {
        match self {
            SimKind::Nonlin5 => 0.2,
            SimKind::Linear | SimKind::Smooth | SimKind::Nonsmooth => 0.3,
            SimKind::Correlated => 0.1,
        }
    }

    /// Signal levels `m` of the published power curves.
    pub fn paper_signal_levels(self) -> &'static [f64] {
        match self {
            SimKind::Linear | SimKind::Smooth => &[0.24, 0.27, 0.30, 0.33, 0.36],
            SimKind::Nonsmooth => &[0.12, 0.24, 0.36, 0.48, 0.60],
            SimKind::Nonlin5 | SimKind::Correlated => &[],
        }
    }

    /// Feature tested by default (zero-based).
    pub fn default_feature(self) -> usize {
        match self {
            SimKind::Nonlin5 => 1,
            SimKind::Linear | SimKind::Smooth | SimKind::Nonsmooth => 3,
            SimKind::Correlated => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Hypothesis {
    Null,
    Alternative,
}

/// How the second argument of `N(0, s)` is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum NoiseScale {
    #[default]
    #[value(name = "sd")]
    StdDev,
    Variance,
}

impl NoiseScale {
    pub fn sd(self, s: f64) -> f64 {
        match self {
            NoiseScale::StdDev => s,
            NoiseScale::Variance => s.sqrt(),
        }
    }
}

/// Row-major `p x p` correlation matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub dim: usize,
    pub values: Vec<f64>,
}

/// Built-in correlation structures for the correlated setting.
///
/// `Low` and `High` are synthetic stand-ins built by [`Correlation::factor_stand_in`]:
/// one-factor matrices whose mean absolute off-diagonal correlation is 0.13
/// and 0.60 respectively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationPreset {
    Identity,
    Low,
    High,
}

impl CorrelationPreset {
    /// Target mean |r| and leading loading of the stand-in.
    fn recipe(self) -> Option<(f64, f64)> {
        match self {
            CorrelationPreset::Identity => None,
            CorrelationPreset::Low => Some((0.13, 0.5)),
            CorrelationPreset::High => Some((0.60, 0.95)),
        }
    }
}

impl Correlation {
    pub fn identity(dim: usize) -> Self {
        Self::equicorrelated(dim, 0.0)
    }

    /// Every off-diagonal entry equals `rho`.
    pub fn equicorrelated(dim: usize, rho: f64) -> Self {
        let values = (0..dim * dim).map(|k| if k / dim == k % dim { 1.0 } else { rho }).collect();
        Self { dim, values }
    }

    /// One-factor correlation: `r_ab = l_a l_b` off the diagonal.
    pub fn one_factor(loadings: &[f64]) -> Result<Self> {
        if loadings.iter().any(|l| !(l.abs() < 1.0)) {
            return Err(Error::InvalidConfig("factor loadings must lie in (-1, 1)".into()));
        }
        let d = loadings.len();
        let values = (0..d * d)
            .map(|k| if k / d == k % d { 1.0 } else { loadings[k / d] * loadings[k % d] })
            .collect();
        Ok(Self { dim: d, values })
    }

    /// One-factor stand-in with loadings falling linearly from `lead` (first
    /// feature) to `lead * (1 - slope)` (last feature), `slope` found by
    /// bisection so the mean |r| equals `target`.
    pub fn factor_stand_in(dim: usize, target: f64, lead: f64) -> Result<Self> {
        let build = |slope: f64| {
            let l: Vec<f64> =
                (0..dim).map(|i| lead * (1.0 - slope * i as f64 / (dim - 1) as f64)).collect();
            Self::one_factor(&l)
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        if build(lo)?.mean_abs_offdiagonal() < target || build(hi)?.mean_abs_offdiagonal() > target {
            return Err(Error::InvalidConfig(format!(
                "mean correlation {target} is unreachable with leading loading {lead}"
            )));
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if build(mid)?.mean_abs_offdiagonal() > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        build(0.5 * (lo + hi))
    }

    pub fn preset(preset: CorrelationPreset, dim: usize) -> Self {
        match preset.recipe() {
            None => Self::identity(dim),
            Some((target, lead)) => {
                Self::factor_stand_in(dim, target, lead).expect("preset recipes are reachable")
            }
        }
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.dim + b]
    }

    pub fn mean_abs_offdiagonal(&self) -> f64 {
        let d = self.dim;
        let mut sum = 0.0;
        for a in 0..d {
            for b in 0..d {
                if a != b {
                    sum += self.get(a, b).abs();
                }
            }
        }
        sum / (d * (d - 1)) as f64
    }

    /// Checks symmetry and unit diagonal. Definiteness is checked when the
    /// square root is taken.
    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.dim * self.dim {
            return Err(Error::Shape("correlation matrix is not square".into()));
        }
        for a in 0..self.dim {
            if (self.get(a, a) - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidConfig("correlation matrix needs a unit diagonal".into()));
            }
            for b in 0..a {
                if (self.get(a, b) - self.get(b, a)).abs() > 1e-12 {
                    return Err(Error::InvalidConfig("correlation matrix is not symmetric".into()));
                }
            }
        }
        Ok(())
    }

    /// Symmetric square root `S` with `S S = Sigma`, via the eigendecomposition.
    pub fn symmetric_sqrt(&self) -> Result<DMatrix<f64>> {
        self.validate()?;
        let m = DMatrix::from_row_slice(self.dim, self.dim, &self.values);
        let eig = m.symmetric_eigen();
        let max = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        if min < -1e-10 * max.max(1.0) {
            return Err(Error::Decomposition(format!(
                "correlation matrix is not positive semidefinite (smallest eigenvalue {min:.3e})"
            )));
        }
        let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSetting {
    pub kind: SimKind,
    pub n: usize,
    /// Coefficient mean `m` under the alternative (association settings).
    pub beta_mean: f64,
    pub hypothesis: Hypothesis,
    /// Feature correlation for the correlated setting; identity when absent.
    pub correlation: Option<Correlation>,
    pub noise: f64,
    pub noise_scale: NoiseScale,
    /// Replaces the fixed `b` of the nonlinear settings (0.2 and the
    /// mean 0.1 of the correlated setting).
    pub beta_override: Option<f64>,
    pub seed: u64,
}

impl SimSetting {
    pub fn new(kind: SimKind, n: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            beta_mean: 0.3,
            hypothesis: Hypothesis::Null,
            correlation: None,
            noise: kind.default_noise(),
            noise_scale: NoiseScale::StdDev,
            beta_override: None,
            seed,
        }
    }

    pub fn alternative(mut self, m: f64) -> Self {
        self.hypothesis = Hypothesis::Alternative;
        self.beta_mean = m;
        self
    }

    pub fn with_correlation(mut self, c: Correlation) -> Self {
        self.correlation = Some(c);
        self
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    /// True when `beta_mean` is one of the published signal levels (only
    /// meaningful under the alternative of the association settings).
    pub fn is_paper_signal_level(&self) -> bool {
        let levels = self.kind.paper_signal_levels();
        levels.is_empty()
            || self.hypothesis == Hypothesis::Null
            || levels.iter().any(|m| (m - self.beta_mean).abs() < 1e-12)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig("simulated datasets need at least 2 rows".into()));
        }
        if !(self.noise >= 0.0) {
            return Err(Error::InvalidConfig("noise scale must be nonnegative".into()));
        }
        if let Some(c) = &self.correlation {
            if self.kind != SimKind::Correlated {
                return Err(Error::InvalidConfig("a correlation matrix only applies to the correlated setting".into()));
            }
            if c.dim != self.kind.n_features() {
                return Err(Error::InvalidConfig(format!(
                    "correlated setting needs an {0}x{0} correlation matrix",
                    self.kind.n_features()
                )));
            }
            c.validate()?;
        }
        Ok(())
    }

    /// Draws one dataset.
    pub fn generate(&self) -> Result<Dataset> {
        self.validate()?;
        match self.kind {
            SimKind::Nonlin5 => gen_nonlin5_with(self),
            SimKind::Linear | SimKind::Smooth | SimKind::Nonsmooth => gen_assoc_with(self),
            SimKind::Correlated => {
                let c = self.correlation.clone().unwrap_or_else(|| Correlation::identity(8));
                gen_correlated_with(self, &c)
            }
        }
    }
}

fn normal_matrix(rng: &mut StreamRng, n: usize, p: usize) -> Vec<f64> {
    (0..n * p).map(|_| rng.sample(StandardNormal)).collect()
}

fn noise(rng: &mut StreamRng, setting: &SimSetting, n: usize) -> Vec<f64> {
    let sd = setting.noise_scale.sd(setting.noise);
    (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn jitter(rng: &mut StreamRng, mean: f64) -> f64 {
    Normal::new(mean, 0.01).expect("valid normal").sample(rng)
}

/// Nonlinearity-study generator with `b = 0.2` and noise scale 0.2.
pub fn gen_nonlin5(n: usize, seed_value: u64) -> Result<Dataset> {
    SimSetting::new(SimKind::Nonlin5, n, seed_value).generate()
}

fn gen_nonlin5_with(s: &SimSetting) -> Result<Dataset> {
    let mut rng = seed::rng(s.seed);
    let x = normal_matrix(&mut rng, s.n, 5);
    let b = s.beta_override.unwrap_or(0.2);
    let e = noise(&mut rng, s, s.n);
    let y = x
        .chunks_exact(5)
        .zip(&e)
        .map(|(r, e)| -b * r[0] + b * r[1].powi(2) - b * r[2].powi(3) + b * (2.0 * r[3]).sin() - b * r[4].abs() + e)
        .collect();
    Dataset::new(x, 5, y, names(5))
}

/// Association-study generator (`Linear`, `Smooth` or `Nonsmooth`).
pub fn gen_assoc(kind: SimKind, n: usize, m: f64, hypothesis: Hypothesis, seed_value: u64) -> Result<Dataset> {
    let mut s = SimSetting::new(kind, n, seed_value);
    s.beta_mean = m;
    s.hypothesis = hypothesis;
    gen_assoc_with(&s)
}

/// The nonsmooth transforms `z` of one row of four features.
pub fn nonsmooth_z(r: &[f64]) -> [f64; 4] {
    let neg = |v: f64| if v < 0.0 { v } else { 0.0 };
    let pos = |v: f64| if v > 0.0 { v } else { 0.0 };
    [neg(r[0] * r[1]), pos(r[1] * r[2]), neg(r[2] * r[3]), pos(r[3] * r[0])]
}

fn gen_assoc_with(s: &SimSetting) -> Result<Dataset> {
    if !matches!(s.kind, SimKind::Linear | SimKind::Smooth | SimKind::Nonsmooth) {
        return Err(Error::InvalidConfig(format!("{:?} is not an association setting", s.kind)));
    }
    let mut rng = seed::rng(s.seed);
    let x = normal_matrix(&mut rng, s.n, 4);
    let null_mean = if s.kind == SimKind::Nonsmooth { 0.18 } else { 0.3 };
    let beta: Vec<f64> = (0..4)
        .map(|j| match s.hypothesis {
            Hypothesis::Null if j == 3 => 0.0,
            Hypothesis::Null => jitter(&mut rng, null_mean),
            Hypothesis::Alternative => jitter(&mut rng, s.beta_mean),
        })
        .collect();
    let e = noise(&mut rng, s, s.n);
    let y = x
        .chunks_exact(4)
        .zip(&e)
        .map(|(r, e)| {
            let terms = match s.kind {
                SimKind::Linear => [r[0], r[1], r[2], r[3]],
                SimKind::Smooth => [r[0].powi(3), r[1].cos(), r[2].tanh(), (3.0 * r[3]).sin()],
                _ => nonsmooth_z(r),
            };
            terms.iter().zip(&beta).map(|(t, b)| t * b).sum::<f64>() + e
        })
        .collect();
    Dataset::new(x, 4, y, names(4))
}

/// Correlated-feature generator (eight features, feature 1 unassociated).
pub fn gen_correlated(n: usize, sigma: &Correlation, seed_value: u64) -> Result<Dataset> {
    let s = SimSetting::new(SimKind::Correlated, n, seed_value).with_correlation(sigma.clone());
    s.validate()?;
    gen_correlated_with(&s, sigma)
}

fn gen_correlated_with(s: &SimSetting, sigma: &Correlation) -> Result<Dataset> {
    let root = sigma.symmetric_sqrt()?;
    let p = sigma.dim;
    if p != 8 {
        return Err(Error::InvalidConfig("correlated setting uses eight features".into()));
    }
    let mut rng = seed::rng(s.seed);
    let z = normal_matrix(&mut rng, s.n, p);
    let mut x = vec![0.0; s.n * p];
    for (i, zr) in z.chunks_exact(p).enumerate() {
        for a in 0..p {
            x[i * p + a] = (0..p).map(|c| root[(a, c)] * zr[c]).sum();
        }
    }
    let b = jitter(&mut rng, s.beta_override.unwrap_or(0.1));
    let e = noise(&mut rng, s, s.n);
    let y = x
        .chunks_exact(p)
        .zip(&e)
        .map(|(r, e)| {
            b * (r[1].powi(2) + r[2].cos() + (2.0 * r[3]).sin() + r[4] + r[5] + r[6] + r[7]) + e
        })
        .collect();
    Dataset::new(x, p, y, names(p))
}

fn names(p: usize) -> Vec<String> {
    (1..=p).map(|k| format!("X{k}")).collect()
}

/// Two-sided t-test p-value for coefficient `j` in the OLS fit of `y` on
/// all features plus an intercept.
pub fn lm_t_test(data: &Dataset, j: usize) -> Result<f64> {
    data.check_feature(j)?;
    let p = data.n_features();
    if data.n_rows() <= p + 1 {
        return Err(Error::Rank(format!("t-test needs more than {} rows", p + 1)));
    }
    let design = linalg::design_with_intercept(data.x(), p);
    let y = nalgebra::DVector::from_column_slice(data.y());
    let fit = linalg::ols(&design, &y)?;
    let coef = fit.coefficients[j + 1];
    let se = fit.std_errors[j + 1];
    Ok(t_p_value(coef, se, fit.df_residual))
}

pub(crate) fn t_p_value(coef: f64, se: f64, df: usize) -> f64 {
    if se == 0.0 {
        return if coef == 0.0 { 1.0 } else { 0.0 };
    }
    let t = (coef / se).abs();
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("positive degrees of freedom");
    (2.0 * dist.sf(t)).min(1.0)
}

/// Test applied to every simulated dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StudyTest {
    /// OLS t-test baseline.
    Lm,
    /// Network association test.
    Assoc,
    /// Network nonlinearity test.
    Nonlin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyPlan {
    pub test: StudyTest,
    /// Zero-based features tested on every dataset.
    pub features: Vec<usize>,
    pub n_sims: usize,
    pub alpha: f64,
    /// Permutations, network and smoothing settings; `master_seed` is
    /// replaced per simulation.
    pub test_config: TestConfig,
    #[serde(skip)]
    pub workers: Option<usize>,
}

/// Outcome of one simulated dataset for one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub sim: usize,
    pub data_seed: u64,
    pub feature: usize,
    pub p_value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub setting: SimSetting,
    pub test: StudyTest,
    pub feature: usize,
    pub n_sims: usize,
    pub alpha: f64,
    #[serde(rename = "B")]
    pub permutations: usize,
    /// Share of successful simulations with `p <= alpha`.
    pub rejection_rate: f64,
    /// p-values of the successful simulations, in simulation order.
    pub p_values: Vec<f64>,
    pub failed_sims: usize,
    pub records: Vec<SimRecord>,
    /// Not serialized, so reports stay byte-identical across reruns.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

impl StudyReport {
    /// Rejection rate recomputed from the stored p-values.
    pub fn recomputed_rate(&self) -> f64 {
        rejection_rate(&self.p_values, self.alpha)
    }

    /// Normal-approximation 95% interval for the rejection rate.
    pub fn binomial_band(&self) -> (f64, f64) {
        let n = self.p_values.len() as f64;
        let r = self.rejection_rate;
        let half = 1.96 * (r * (1.0 - r) / n).sqrt();
        ((r - half).max(0.0), (r + half).min(1.0))
    }
}

pub fn rejection_rate(p_values: &[f64], alpha: f64) -> f64 {
    if p_values.is_empty() {
        return f64::NAN;
    }
    p_values.iter().filter(|&&p| p <= alpha).count() as f64 / p_values.len() as f64
}

/// Seeds of simulation `sim`: (dataset, test master seed).
pub fn sim_seeds(master: u64, sim: usize) -> (u64, u64) {
    (
        seed::derive(master, domain::SIMULATION, sim as u64),
        seed::derive(master, domain::SIM_TEST, sim as u64),
    )
}

/// Runs one study per feature in `plan.features`, all on the same simulated
/// datasets. Network tests share one observed-data fit per dataset.
pub fn run_study(setting: &SimSetting, plan: &StudyPlan) -> Result<Vec<StudyReport>> {
    setting.validate()?;
    if plan.n_sims == 0 {
        return Err(Error::InvalidConfig("a study needs at least one simulation".into()));
    }
    if plan.features.is_empty() {
        return Err(Error::InvalidConfig("a study needs at least one tested feature".into()));
    }
    for &f in &plan.features {
        if f >= setting.kind.n_features() {
            return Err(Error::InvalidConfig(format!("feature {} does not exist in this setting", f + 1)));
        }
    }
    if plan.test != StudyTest::Lm {
        plan.test_config.validate()?;
    }
    let start = Instant::now();
    let per_sim: Vec<Vec<SimRecord>> = parallel::with_workers(plan.workers, || {
        parallel::map_indexed(0..plan.n_sims, |sim| run_one(setting, plan, sim))
    })?;
    let elapsed = start.elapsed().as_secs_f64();

    Ok(plan
        .features
        .iter()
        .enumerate()
        .map(|(slot, &feature)| {
            let records: Vec<SimRecord> = per_sim.iter().map(|r| r[slot].clone()).collect();
            let p_values: Vec<f64> = records.iter().filter_map(|r| r.p_value).collect();
            let failed_sims = records.len() - p_values.len();
            StudyReport {
                setting: setting.clone(),
                test: plan.test,
                feature,
                n_sims: plan.n_sims,
                alpha: plan.alpha,
                permutations: plan.test_config.permutations,
                rejection_rate: rejection_rate(&p_values, plan.alpha),
                p_values,
                failed_sims,
                records,
                wall_time_secs: elapsed,
            }
        })
        .collect())
}

fn run_one(setting: &SimSetting, plan: &StudyPlan, sim: usize) -> Vec<SimRecord> {
    let (data_seed, test_seed) = sim_seeds(setting.seed, sim);
    let record = |feature: usize, outcome: Result<f64>| match outcome {
        Ok(p) => SimRecord { sim, data_seed, feature, p_value: Some(p), error: None },
        Err(e) => SimRecord { sim, data_seed, feature, p_value: None, error: Some(e.to_string()) },
    };
    let data = match setting.with_seed(data_seed).generate() {
        Ok(d) => d,
        Err(e) => return plan.features.iter().map(|&f| record(f, Err(clone_err(&e)))).collect(),
    };
    let cfg = TestConfig { master_seed: test_seed, workers: None, ..plan.test_config.clone() };
    let observed = match plan.test {
        StudyTest::Lm => None,
        _ => Some(permtest::fit_observed(&data, &cfg)),
    };
    plan.features
        .iter()
        .map(|&f| {
            let outcome = match (&plan.test, &observed) {
                (StudyTest::Lm, _) => lm_t_test(&data, f),
                (_, Some(Err(e))) => Err(clone_err(e)),
                (StudyTest::Assoc, Some(Ok(obs))) => {
                    permtest::association_test_with_observed(&data, f, &cfg, obs).map(|r| r.p_value)
                }
                (StudyTest::Nonlin, Some(Ok(obs))) => {
                    permtest::nonlinearity_test_with_observed(&data, f, &cfg, obs).map(|r| r.p_value)
                }
                _ => unreachable!("observed fit exists for network tests"),
            };
            record(f, outcome)
        })
        .collect()
}

fn clone_err(e: &Error) -> Error {
    match e {
        Error::Divergence { epoch } => Error::Divergence { epoch: *epoch },
        other => Error::InvalidInput(other.to_string()),
    }
}

/// Study size presets: `Desk` is small enough for a workstation while its
/// binomial error bars still separate the published effect tiers; `Paper`
/// matches the published studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Desk,
    Paper,
}

impl Scale {
    pub fn n(self, _kind: SimKind) -> usize {
        match self {
            Scale::Desk => 200,
            Scale::Paper => 500,
        }
    }

    pub fn permutations(self) -> usize {
        match self {
            Scale::Desk => 199,
            Scale::Paper => 500,
        }
    }

    pub fn n_sims(self, kind: SimKind) -> usize {
        match (self, kind) {
            (Scale::Desk, _) => 100,
            (Scale::Paper, SimKind::Nonlin5 | SimKind::Correlated) => 300,
            (Scale::Paper, _) => 500,
        }
    }

    /// Network used for a setting. Desk scale uses one configuration (20
    /// hidden units, per-sample SGD) that did well on holdout loss across
    /// all settings; paper scale uses the published hidden-layer widths.
    pub fn network(self, kind: SimKind) -> NetworkConfig {
        let hidden = match (self, kind) {
            (Scale::Paper, SimKind::Nonlin5) => 40,
            (Scale::Paper, SimKind::Correlated) => 30,
            _ => 20,
        };
        NetworkConfig { hidden_sizes: vec![hidden], ..NetworkConfig::default() }
    }
}

/// Mean holdout loss of `config` on a split of `data`; pass several
/// candidates through [`select_network`] to tune hyperparameters.
pub fn holdout_loss(data: &Dataset, config: &NetworkConfig, holdout_fraction: f64, split_seed: u64) -> Result<f64> {
    let (train, hold) = data.holdout_split(holdout_fraction, split_seed)?;
    let trained = nn::fit(&train, config)?;
    let pred = trained.network.predict(&hold)?;
    Ok(pred.iter().zip(hold.y()).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / hold.n_rows() as f64)
}

/// Picks the candidate with the smallest holdout loss.
pub fn select_network(
    data: &Dataset,
    candidates: &[NetworkConfig],
    holdout_fraction: f64,
    split_seed: u64,
) -> Result<(usize, Vec<f64>)> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("no candidate configurations".into()));
    }
    let losses: Vec<f64> = candidates
        .iter()
        .map(|c| holdout_loss(data, c, holdout_fraction, split_seed).unwrap_or(f64::INFINITY))
        .collect();
    let best = losses
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nonempty");
    Ok((best, losses))
}
