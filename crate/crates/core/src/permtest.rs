//! Permutation tests built on input gradients of a trained network.
//!
//! * Association: is feature `j` associated with the outcome at all? The
//!   statistic is the mean squared gradient `d mu_i / d x_ij`; the null is
//!   generated by permuting column `j` and retraining.
//! * Nonlinearity: is the association linear? The statistic is the mean
//!   squared coefficient of a spline fitted to the centered gradients as a
//!   function of `x_j`; the null is generated by permuting the residuals of
//!   an additive model in which `x_j` enters linearly, then retraining.
//!
//! Every replicate trains a freshly initialized network from its own seed,
//! so results do not depend on scheduling or worker count.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::additive::fit_additive_with_policy;
use crate::data::{mean, Dataset};
use crate::error::{Error, Result};
use crate::nn::{self, NetworkConfig, OutputActivation, Trained};
use crate::parallel;
use crate::seed::{self, domain};
use crate::spline::{self, SmoothFit, Smoothing, SplineBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Association,
    Nonlinearity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PValueRule {
    /// `#{T_b >= T} / B`; can be exactly zero.
    #[default]
    Proportion,
    /// `(1 + #{T_b >= T}) / (B + 1)`.
    AddOne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    /// Number of permutation replicates `B`.
    pub permutations: usize,
    pub network: NetworkConfig,
    /// Spline dimension for the nonlinearity statistic.
    pub q: usize,
    /// Penalty for the gradient smooth. Under GCV every replicate selects
    /// its own penalty, exactly as the observed statistic does.
    pub smoothing: Smoothing,
    /// Penalty for the additive model behind the residual permutations.
    pub additive_smoothing: Smoothing,
    pub master_seed: u64,
    /// Worker threads; `None` uses the ambient pool.
    #[serde(skip)]
    pub workers: Option<usize>,
    pub p_value_rule: PValueRule,
    /// Significance level used by [`combined_protocol`].
    pub level: f64,
    /// Reuse one observed-data network for both tests in [`combined_protocol`].
    pub share_observed_fit: bool,
    /// Warn when the tested feature correlates with another beyond this.
    pub correlation_warning: f64,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            permutations: 500,
            network: NetworkConfig::default(),
            q: 10,
            smoothing: Smoothing::Gcv,
            additive_smoothing: Smoothing::Gcv,
            master_seed: 0,
            workers: None,
            p_value_rule: PValueRule::Proportion,
            level: 0.05,
            share_observed_fit: true,
            correlation_warning: 0.3,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.permutations == 0 {
            return Err(Error::InvalidConfig("at least one permutation is required".into()));
        }
        if self.q < 3 {
            return Err(Error::InvalidConfig("spline dimension q must be at least 3".into()));
        }
        if !(self.level > 0.0 && self.level <= 1.0) {
            return Err(Error::InvalidConfig("level must lie in (0, 1]".into()));
        }
        if let Smoothing::Fixed(l) = self.smoothing {
            if !(l >= 0.0) {
                return Err(Error::InvalidConfig("smoothing lambda must be nonnegative".into()));
            }
        }
        self.network.validate()
    }

    /// Network seed of the observed-data fit.
    pub fn observed_seed(&self, which: u64) -> u64 {
        seed::derive(self.master_seed, domain::OBSERVED, which)
    }

    /// Network seed of replicate `b` (1-based) for a test kind.
    pub fn replicate_seed(&self, kind: TestKind, b: usize) -> u64 {
        let d = match kind {
            TestKind::Association => domain::ASSOC_REPLICATE,
            TestKind::Nonlinearity => domain::NONLIN_REPLICATE,
        };
        seed::derive(self.master_seed, d, b as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRef {
    pub index: usize,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Gradient of the observed-data network at every row.
    pub observed_gradients: Vec<f64>,
    pub observed_final_loss: Option<f64>,
    /// Final training loss per replicate; `None` for diverged replicates.
    pub replicate_final_losses: Vec<Option<f64>>,
    pub failed_replicates: usize,
    /// Penalty used for the gradient smooth (nonlinearity test).
    pub smoothing_lambda: Option<f64>,
    /// Penalty used for the additive model (nonlinearity test).
    pub additive_lambda: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub kind: TestKind,
    pub feature: FeatureRef,
    #[serde(rename = "T_observed")]
    pub t_observed: f64,
    /// Null statistics of the successful replicates, in replicate order.
    #[serde(rename = "null_statistics")]
    pub t_null: Vec<f64>,
    pub p_value: f64,
    /// Requested number of permutations.
    #[serde(rename = "B")]
    pub permutations: usize,
    pub diagnostics: Diagnostics,
    pub settings: TestConfig,
}

/// Mean of squared gradients.
pub fn assoc_statistic(grads: &[f64]) -> Result<f64> {
    if grads.is_empty() {
        return Err(Error::InvalidInput("association statistic of an empty gradient vector".into()));
    }
    Ok(grads.iter().map(|g| g * g).sum::<f64>() / grads.len() as f64)
}

/// Mean of squared spline coefficients (the intercept is not a coefficient).
pub fn nonlin_statistic(fit: &SmoothFit) -> f64 {
    mean_square(&fit.theta)
}

fn mean_square(theta: &[f64]) -> f64 {
    if theta.is_empty() {
        return 0.0;
    }
    theta.iter().map(|t| t * t).sum::<f64>() / theta.len() as f64
}

/// Copy of `data` with column `j` uniformly permuted.
pub fn permute_column(data: &Dataset, j: usize, seed_value: u64) -> Result<Dataset> {
    let mut col = data.column(j);
    col.shuffle(&mut seed::rng(seed_value));
    data.with_column(j, &col)
}

/// `fitted + permutation(residuals)`.
pub fn permute_residual_response(fitted: &[f64], residuals: &[f64], seed_value: u64) -> Result<Vec<f64>> {
    if fitted.len() != residuals.len() {
        return Err(Error::Shape(format!(
            "{} fitted values but {} residuals",
            fitted.len(),
            residuals.len()
        )));
    }
    let mut r = residuals.to_vec();
    r.shuffle(&mut seed::rng(seed_value));
    Ok(fitted.iter().zip(&r).map(|(f, e)| f + e).collect())
}

/// Proportion of null statistics at least as large as the observed one.
pub fn p_value(t_observed: f64, t_null: &[f64]) -> f64 {
    if t_null.is_empty() {
        return f64::NAN;
    }
    exceedances(t_observed, t_null) as f64 / t_null.len() as f64
}

/// `(1 + #{T_b >= T}) / (B + 1)`.
pub fn p_value_add_one(t_observed: f64, t_null: &[f64]) -> f64 {
    (1 + exceedances(t_observed, t_null)) as f64 / (t_null.len() + 1) as f64
}

fn exceedances(t: f64, nulls: &[f64]) -> usize {
    nulls.iter().filter(|&&v| v >= t).count()
}

fn finish_p_value(rule: PValueRule, t: f64, nulls: &[f64]) -> f64 {
    match rule {
        PValueRule::Proportion => p_value(t, nulls),
        PValueRule::AddOne => p_value_add_one(t, nulls),
    }
}

/// Trains the observed-data network used by either test.
pub fn fit_observed(data: &Dataset, cfg: &TestConfig) -> Result<Trained> {
    cfg.validate()?;
    nn::fit(data, &cfg.network.with_seed(cfg.observed_seed(0)))
}

fn correlation_warnings(data: &Dataset, j: usize, limit: f64) -> Vec<String> {
    data.correlations_with(j)
        .into_iter()
        .filter(|(_, r)| r.abs() > limit)
        .map(|(k, r)| {
            format!(
                "'{}' correlates with '{}' (r = {r:.2}); permutation tests assume the tested \
                 feature is independent of the others and Type-I error inflates with correlation",
                data.feature_names()[j],
                data.feature_names()[k]
            )
        })
        .collect()
}

struct Replicates {
    stats: Vec<f64>,
    losses: Vec<Option<f64>>,
    failed: usize,
}

/// Runs `B` replicates; divergent replicates are counted, anything else aborts.
fn run_replicates<F>(cfg: &TestConfig, replicate: F) -> Result<Replicates>
where
    F: Fn(usize) -> Result<(f64, Option<f64>)> + Sync + Send,
{
    let b = cfg.permutations;
    let outcomes = parallel::with_workers(cfg.workers, || parallel::map_indexed(1..b + 1, &replicate))?;
    let mut stats = Vec::with_capacity(b);
    let mut losses = Vec::with_capacity(b);
    let mut failed = 0;
    for outcome in outcomes {
        match outcome {
            Ok((t, loss)) => {
                stats.push(t);
                losses.push(loss);
            }
            Err(Error::Divergence { .. }) => {
                failed += 1;
                losses.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    if failed * 20 > b {
        return Err(Error::TooManyFailures { failed, total: b });
    }
    Ok(Replicates { stats, losses, failed })
}

/// Association test for feature `j`.
pub fn association_test(data: &Dataset, j: usize, cfg: &TestConfig) -> Result<TestResult> {
    data.check_feature(j)?;
    let observed = fit_observed(data, cfg)?;
    association_test_with_observed(data, j, cfg, &observed)
}

/// Association test reusing an already trained observed-data network.
pub fn association_test_with_observed(
    data: &Dataset,
    j: usize,
    cfg: &TestConfig,
    observed: &Trained,
) -> Result<TestResult> {
    cfg.validate()?;
    data.check_feature(j)?;
    let grads = nn::feature_gradients(&observed.network, data, j)?;
    let t_observed = assoc_statistic(&grads)?;

    let reps = run_replicates(cfg, |b| {
        let net_seed = cfg.replicate_seed(TestKind::Association, b);
        let permuted = permute_column(data, j, seed::derive(net_seed, domain::PERMUTATION, 0))?;
        let trained = nn::fit(&permuted, &cfg.network.with_seed(net_seed))?;
        let g = nn::feature_gradients(&trained.network, &permuted, j)?;
        Ok((assoc_statistic(&g)?, trained.final_loss()))
    })?;

    Ok(TestResult {
        kind: TestKind::Association,
        feature: FeatureRef { index: j, name: data.feature_names()[j].clone() },
        t_observed,
        p_value: finish_p_value(cfg.p_value_rule, t_observed, &reps.stats),
        t_null: reps.stats,
        permutations: cfg.permutations,
        diagnostics: Diagnostics {
            observed_gradients: grads,
            observed_final_loss: observed.final_loss(),
            replicate_final_losses: reps.losses,
            failed_replicates: reps.failed,
            smoothing_lambda: None,
            additive_lambda: None,
            warnings: correlation_warnings(data, j, cfg.correlation_warning),
        },
        settings: TestConfig { workers: None, ..cfg.clone() },
    })
}

fn centered(v: &[f64]) -> Vec<f64> {
    let m = mean(v);
    v.iter().map(|g| g - m).collect()
}

fn check_continuous(data: &Dataset, cfg: &TestConfig) -> Result<()> {
    if cfg.network.output_activation != OutputActivation::Identity {
        return Err(Error::UnsupportedOutcome(
            "the nonlinearity test needs a continuous outcome (identity output activation)".into(),
        ));
    }
    if data.has_binary_outcome() {
        return Err(Error::UnsupportedOutcome("the nonlinearity test is undefined for binary outcomes".into()));
    }
    Ok(())
}

/// Nonlinearity test for feature `j` (continuous outcomes only).
pub fn nonlinearity_test(data: &Dataset, j: usize, cfg: &TestConfig) -> Result<TestResult> {
    data.check_feature(j)?;
    check_continuous(data, cfg)?;
    let observed = fit_observed(data, cfg)?;
    nonlinearity_test_with_observed(data, j, cfg, &observed)
}

/// Nonlinearity test reusing an already trained observed-data network.
pub fn nonlinearity_test_with_observed(
    data: &Dataset,
    j: usize,
    cfg: &TestConfig,
    observed: &Trained,
) -> Result<TestResult> {
    cfg.validate()?;
    data.check_feature(j)?;
    check_continuous(data, cfg)?;
    let xj = data.column(j);
    let basis: SplineBasis = spline::make_basis(&xj, cfg.q)?.centered_on(&xj);

    let grads = nn::feature_gradients(&observed.network, data, j)?;
    let obs_fit = spline::fit_smooth_with_policy(&basis, &xj, &centered(&grads), cfg.smoothing)?;
    let t_observed = nonlin_statistic(&obs_fit);

    let additive = fit_additive_with_policy(data, j, cfg.q, cfg.additive_smoothing)?;

    let reps = run_replicates(cfg, |b| {
        let net_seed = cfg.replicate_seed(TestKind::Nonlinearity, b);
        let y_b = permute_residual_response(
            &additive.fitted,
            &additive.residuals,
            seed::derive(net_seed, domain::PERMUTATION, 0),
        )?;
        let permuted = data.with_outcome(y_b)?;
        let trained = nn::fit(&permuted, &cfg.network.with_seed(net_seed))?;
        let g = nn::feature_gradients(&trained.network, &permuted, j)?;
        let fit = spline::fit_smooth_with_policy(&basis, &xj, &centered(&g), cfg.smoothing)?;
        Ok((nonlin_statistic(&fit), trained.final_loss()))
    })?;

    Ok(TestResult {
        kind: TestKind::Nonlinearity,
        feature: FeatureRef { index: j, name: data.feature_names()[j].clone() },
        t_observed,
        p_value: finish_p_value(cfg.p_value_rule, t_observed, &reps.stats),
        t_null: reps.stats,
        permutations: cfg.permutations,
        diagnostics: Diagnostics {
            observed_gradients: grads,
            observed_final_loss: observed.final_loss(),
            replicate_final_losses: reps.losses,
            failed_replicates: reps.failed,
            smoothing_lambda: Some(obs_fit.penalty_lambda),
            additive_lambda: Some(additive.penalty_lambda),
            warnings: correlation_warnings(data, j, cfg.correlation_warning),
        },
        settings: TestConfig { workers: None, ..cfg.clone() },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// No evidence of association.
    None,
    Linear,
    Nonlinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedResult {
    pub verdict: Verdict,
    pub association: TestResult,
    /// Skipped when the association test does not reject.
    pub nonlinearity: Option<TestResult>,
}

/// Association test first; the nonlinearity test only runs when the
/// association is significant (`p < cfg.level`).
pub fn combined_protocol(data: &Dataset, j: usize, cfg: &TestConfig) -> Result<CombinedResult> {
    data.check_feature(j)?;
    let observed = fit_observed(data, cfg)?;
    combined_protocol_with_observed(data, j, cfg, &observed)
}

/// [`combined_protocol`] reusing an already trained observed-data network.
pub fn combined_protocol_with_observed(
    data: &Dataset,
    j: usize,
    cfg: &TestConfig,
    observed: &Trained,
) -> Result<CombinedResult> {
    let association = association_test_with_observed(data, j, cfg, observed)?;
    if association.p_value >= cfg.level {
        return Ok(CombinedResult { verdict: Verdict::None, association, nonlinearity: None });
    }
    check_continuous(data, cfg)?;
    let nonlinearity = if cfg.share_observed_fit {
        nonlinearity_test_with_observed(data, j, cfg, observed)?
    } else {
        let second = nn::fit(data, &cfg.network.with_seed(cfg.observed_seed(1)))?;
        nonlinearity_test_with_observed(data, j, cfg, &second)?
    };
    let verdict = if nonlinearity.p_value < cfg.level { Verdict::Nonlinear } else { Verdict::Linear };
    Ok(CombinedResult { verdict, association, nonlinearity: Some(nonlinearity) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assoc_statistic_examples() {
        assert_eq!(assoc_statistic(&[1.0, 2.0, 3.0]).unwrap(), 14.0 / 3.0);
        assert_eq!(assoc_statistic(&[0.0; 5]).unwrap(), 0.0);
        assert_eq!(
            assoc_statistic(&[-1.5, 2.0, -0.25]).unwrap(),
            assoc_statistic(&[1.5, -2.0, 0.25]).unwrap()
        );
        assert!(assoc_statistic(&[]).is_err());
    }

    #[test]
    fn nonlin_statistic_examples() {
        assert_eq!(mean_square(&[3.0, 4.0]), 12.5);
        assert_eq!(mean_square(&[0.0; 10]), 0.0);
        let theta = [0.3, -1.2, 0.7];
        let doubled: Vec<f64> = theta.iter().map(|t| 2.0 * t).collect();
        assert!((mean_square(&doubled) - 4.0 * mean_square(&theta)).abs() < 1e-15);
    }

    #[test]
    fn p_value_examples() {
        assert_eq!(p_value(5.0, &[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(p_value(0.0, &[0.0, 1.0, 0.0]), 1.0);
        assert_eq!(p_value(2.0, &[1.0, 2.0, 3.0, 4.0]), 0.75);
        assert_eq!(p_value_add_one(5.0, &[1.0, 2.0, 3.0]), 0.25);
    }

    #[test]
    fn permute_column_contract() {
        let data = Dataset::from_columns(
            &[vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![10.0, 20.0, 30.0, 40.0, 50.0]],
            vec![0.0; 5],
        )
        .unwrap();
        let out = permute_column(&data, 1, 99).unwrap();
        assert_eq!(out.column(0), data.column(0));
        let mut c = out.column(1);
        c.sort_by(f64::total_cmp);
        assert_eq!(c, data.column(1));
        assert_eq!(out.y(), data.y());
    }

    #[test]
    fn permute_residuals_contract() {
        let fitted = [1.0, 2.0, 3.0];
        assert_eq!(permute_residual_response(&fitted, &[0.0; 3], 5).unwrap(), fitted.to_vec());
        let resid = [0.5, -1.0, 0.25];
        let s1: f64 = permute_residual_response(&fitted, &resid, 1).unwrap().iter().sum();
        let s2: f64 = permute_residual_response(&fitted, &resid, 2).unwrap().iter().sum();
        assert!((s1 - s2).abs() < 1e-12);
        assert_eq!(permute_residual_response(&[2.0], &[0.5], 3).unwrap(), vec![2.5]);
        assert!(permute_residual_response(&[1.0], &[1.0, 2.0], 3).is_err());
    }

    #[test]
    fn zero_permutations_rejected() {
        let cfg = TestConfig { permutations: 0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn nonlinearity_rejects_sigmoid_networks() {
        let data = Dataset::from_columns(&[vec![0.0, 1.0, 2.0, 3.0]], vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let mut cfg = TestConfig { permutations: 3, ..Default::default() };
        cfg.network.output_activation = OutputActivation::Sigmoid;
        assert!(matches!(nonlinearity_test(&data, 0, &cfg), Err(Error::UnsupportedOutcome(_))));
    }
}
