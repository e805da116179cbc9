//! Conjugate models whose score statistics have closed forms: normal
//! location with a normal prior, binomial with a beta prior expanded toward
//! a reference beta by geometric mixing, and the normal model with a
//! normal-inverse-gamma prior.

use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::engine::{hierarchical_check, mc_p_value, CheckResult, McConfig, PriorExpansionSpec, Tail};
use crate::error::{Error, Result};
use crate::rng::{sample_beta, sample_binomial, sample_normal, InverseGamma, SeededStream};
use crate::special::{lbeta, lgamma, psi, std_normal_cdf};

fn check_positive(op: &'static str, name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(op, format!("{name} must be positive and finite, got {v}")))
    }
}

/// y ~ N(θ, σ²), θ ~ N(μ0, τ0²); expanded in the prior variance τ².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalLocationModel {
    pub mu0: f64,
    pub tau0_sq: f64,
    pub sigma_sq: f64,
}

impl NormalLocationModel {
    pub fn new(mu0: f64, tau0_sq: f64, sigma_sq: f64) -> Result<Self> {
        check_positive("normal_model", "tau0_sq", tau0_sq)?;
        check_positive("normal_model", "sigma_sq", sigma_sq)?;
        if !mu0.is_finite() {
            return Err(Error::domain("normal_model", "mu0 must be finite"));
        }
        Ok(Self { mu0, tau0_sq, sigma_sq })
    }

    /// Reduce n observations to their mean, whose variance is σ²/n.
    pub fn reduce(&self, ys: &[f64]) -> Result<(Self, f64)> {
        if ys.is_empty() {
            return Err(Error::domain("normal_model", "no observations"));
        }
        let n = ys.len() as f64;
        let ybar = ys.iter().sum::<f64>() / n;
        Ok((Self::new(self.mu0, self.tau0_sq, self.sigma_sq / n)?, ybar))
    }

    pub fn predictive_var(&self) -> f64 {
        self.sigma_sq + self.tau0_sq
    }

    /// log p(y | τ²) = log N(y; μ0, σ² + τ²).
    pub fn log_marginal(&self, y: f64, tau_sq: f64) -> f64 {
        let v = self.sigma_sq + tau_sq;
        let d = y - self.mu0;
        -0.5 * (2.0 * std::f64::consts::PI * v).ln() - d * d / (2.0 * v)
    }

    pub fn expansion(&self) -> PriorExpansionSpec {
        PriorExpansionSpec::new("normal_prior_variance", self.tau0_sq)
            .with("mu0", self.mu0)
            .with("sigma_sq", self.sigma_sq)
    }
}

/// d/dτ² log p(y | τ²) at τ0².
pub fn normal_score(model: &NormalLocationModel, y: f64) -> f64 {
    let v = model.predictive_var();
    let d = y - model.mu0;
    d * d / (2.0 * v * v) - 1.0 / (2.0 * v)
}

/// The same score as the posterior expectation of d/dτ² log g(θ | τ²).
pub fn normal_score_posterior(model: &NormalLocationModel, y: f64) -> f64 {
    let t = model.tau0_sq;
    let v = 1.0 / (1.0 / model.sigma_sq + 1.0 / t);
    let m = v * (y / model.sigma_sq + model.mu0 / t);
    let d = m - model.mu0;
    -1.0 / (2.0 * t) + (v + d * d) / (2.0 * t * t)
}

/// 2(1 − Φ(|y − μ0| / √(σ² + τ0²))).
pub fn normal_p_value(model: &NormalLocationModel, y_obs: f64) -> f64 {
    let z = (y_obs - model.mu0).abs() / model.predictive_var().sqrt();
    (2.0 * std_normal_cdf(-z)).min(1.0)
}

/// Monte-Carlo version of [`normal_p_value`]: upper tail of [`normal_score`].
pub fn normal_check(model: &NormalLocationModel, y_obs: f64, cfg: &McConfig) -> Result<CheckResult> {
    let cfg = cfg.clone().with_tail(Tail::Upper);
    let sd_prior = model.tau0_sq.sqrt();
    let sd = model.sigma_sq.sqrt();
    let res = mc_p_value(
        |y: &f64| normal_score(model, *y),
        &y_obs,
        |s: &mut SeededStream| {
            let theta = sample_normal(s, model.mu0, sd_prior);
            Ok(sample_normal(s, theta, sd))
        },
        &cfg,
    )?;
    Ok(res.with_expansion(model.expansion()))
}

/// Component toward which the beta prior is geometrically mixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixtureTarget {
    /// Beta(½, ½).
    Jeffreys,
    /// Beta(1, 1).
    Uniform,
}

impl MixtureTarget {
    pub fn shape(self) -> f64 {
        match self {
            MixtureTarget::Jeffreys => 0.5,
            MixtureTarget::Uniform => 1.0,
        }
    }
}

/// y ~ Bin(n, θ), θ ~ Beta(a, b); expanded as g(θ|γ) ∝ Beta(a,b)^γ · target^(1−γ),
/// so the analysis prior sits at γ = 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinomialBetaModel {
    pub n: u64,
    pub a: f64,
    pub b: f64,
    pub target: MixtureTarget,
}

impl BinomialBetaModel {
    pub fn new(n: u64, a: f64, b: f64, target: MixtureTarget) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("binomial_model", "n must be at least 1"));
        }
        check_positive("binomial_model", "a", a)?;
        check_positive("binomial_model", "b", b)?;
        Ok(Self { n, a, b, target })
    }

    /// Weights on log θ and log(1 − θ) in the score.
    pub fn coefficients(&self) -> (f64, f64) {
        let t = self.target.shape();
        (self.a - t, self.b - t)
    }

    /// Beta parameters of the expanded prior at γ.
    pub fn prior_at(&self, gamma: f64) -> (f64, f64) {
        let t = self.target.shape();
        (t + gamma * (self.a - t), t + gamma * (self.b - t))
    }

    fn check_y(&self, y: u64) -> Result<()> {
        if y > self.n {
            return Err(Error::domain("binomial_model", format!("y = {y} exceeds n = {}", self.n)));
        }
        Ok(())
    }

    /// Beta-binomial log marginal at γ.
    pub fn log_marginal(&self, y: u64, gamma: f64) -> Result<f64> {
        self.check_y(y)?;
        let (a, b) = self.prior_at(gamma);
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::domain("binomial_model", format!("gamma = {gamma} gives a non-positive beta parameter")));
        }
        let (n, yf) = (self.n as f64, y as f64);
        let log_choose = lgamma(n + 1.0) - lgamma(yf + 1.0) - lgamma(n - yf + 1.0);
        Ok(log_choose + lbeta(yf + a, n - yf + b) - lbeta(a, b))
    }

    pub fn expansion(&self) -> PriorExpansionSpec {
        let family = match self.target {
            MixtureTarget::Jeffreys => "beta_geometric_mix_jeffreys",
            MixtureTarget::Uniform => "beta_geometric_mix_uniform",
        };
        PriorExpansionSpec::new(family, 1.0)
            .with("n", self.n as f64)
            .with("a", self.a)
            .with("b", self.b)
    }
}

/// Exact d/dγ log p(y | γ) at γ = 1.
pub fn binomial_score_exact(model: &BinomialBetaModel, y: u64) -> Result<f64> {
    model.check_y(y)?;
    let (ca, cb) = model.coefficients();
    let (a, b) = (model.a, model.b);
    let (n, yf) = (model.n as f64, y as f64);
    let total = psi(n + a + b);
    let prior = psi(a + b);
    let mut s = 0.0;
    if ca != 0.0 {
        s += ca * (psi(yf + a) - total - psi(a) + prior);
    }
    if cb != 0.0 {
        s += cb * (psi(n - yf + b) - total - psi(b) + prior);
    }
    Ok(s)
}

/// Leading term (a−t) log θ̃ + (b−t) log(1−θ̃), θ̃ = (y+a)/(n+a+b).
pub fn binomial_score_asymptotic(model: &BinomialBetaModel, y: u64) -> Result<f64> {
    model.check_y(y)?;
    let (ca, cb) = model.coefficients();
    let theta = (y as f64 + model.a) / (model.n as f64 + model.a + model.b);
    let mut s = 0.0;
    if ca != 0.0 {
        s += ca * theta.ln();
    }
    if cb != 0.0 {
        s += cb * (1.0 - theta).ln();
    }
    Ok(s)
}

/// Prior-predictive check on the exact score. Conflict shows as a small
/// score (the data prefer a flatter prior), so the lower tail is used.
pub fn binomial_check(model: &BinomialBetaModel, y_obs: u64, cfg: &McConfig) -> Result<CheckResult> {
    model.check_y(y_obs)?;
    let cfg = cfg.clone().with_tail(Tail::Lower);
    // the score is a function of y alone, so tabulate it
    let table: Vec<f64> = (0..=model.n)
        .map(|y| binomial_score_exact(model, y))
        .collect::<Result<_>>()?;
    let res = mc_p_value(
        |y: &u64| table[*y as usize],
        &y_obs,
        |s: &mut SeededStream| {
            let theta = sample_beta(s, model.a, model.b)?;
            sample_binomial(s, model.n, theta)
        },
        &cfg,
    )?;
    Ok(res.with_expansion(model.expansion()))
}

/// y_i ~ N(μ, σ²), μ | σ² ~ N(μ0, σ²/λ0), σ² ~ IG(a, b); the conditional
/// prior of μ is expanded in λ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NigModel {
    pub mu0: f64,
    pub lambda0: f64,
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl NigModel {
    pub fn new(mu0: f64, lambda0: f64, a: f64, b: f64, n: usize) -> Result<Self> {
        check_positive("nig_model", "lambda0", lambda0)?;
        check_positive("nig_model", "a", a)?;
        check_positive("nig_model", "b", b)?;
        if n == 0 {
            return Err(Error::domain("nig_model", "n must be at least 1"));
        }
        if !mu0.is_finite() {
            return Err(Error::domain("nig_model", "mu0 must be finite"));
        }
        Ok(Self { mu0, lambda0, a, b, n })
    }

    fn check_data(&self, y: &[f64]) -> Result<()> {
        if y.is_empty() {
            return Err(Error::domain("nig_model", "empty data"));
        }
        if y.len() != self.n {
            return Err(Error::domain("nig_model", format!("expected {} observations, got {}", self.n, y.len())));
        }
        Ok(())
    }

    /// Posterior IG(a_n, b_n) of σ² under the conjugate update:
    /// a_n = a + n/2, b_n = b + ½Σ(y−ȳ)² + λ0 n (ȳ−μ0)² / (2(λ0+n)).
    pub fn sigma_sq_posterior(&self, y: &[f64]) -> Result<(f64, f64)> {
        self.check_data(y)?;
        let n = y.len() as f64;
        let ybar = y.iter().sum::<f64>() / n;
        let ss: f64 = y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
        let d = ybar - self.mu0;
        let a_n = self.a + 0.5 * n;
        let b_n = self.b + 0.5 * ss + self.lambda0 * n * d * d / (2.0 * (self.lambda0 + n));
        Ok((a_n, b_n))
    }

    pub fn expansion(&self) -> PriorExpansionSpec {
        PriorExpansionSpec::new("nig_conditional_precision", self.lambda0)
            .with("mu0", self.mu0)
            .with("a", self.a)
            .with("b", self.b)
            .with("n", self.n as f64)
    }
}

fn mean(y: &[f64]) -> f64 {
    y.iter().sum::<f64>() / y.len() as f64
}

/// (ȳ − μ0)², the check statistic for the conditional prior of μ.
pub fn nig_s1_statistic(model: &NigModel, y: &[f64]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::domain("nig_s1_statistic", "empty data"));
    }
    let d = mean(y) - model.mu0;
    Ok(d * d)
}

/// d/dλ log p(y | σ², λ) at λ0:
/// n / (2λ0(λ0+n)) − n²(ȳ−μ0)² / (2σ²(λ0+n)²).
pub fn nig_lambda_score(model: &NigModel, y: &[f64], sigma_sq: f64) -> f64 {
    let n = y.len() as f64;
    let l = model.lambda0;
    let d = mean(y) - model.mu0;
    n / (2.0 * l * (l + n)) - n * n * d * d / (2.0 * sigma_sq * (l + n) * (l + n))
}

#[allow(clippy::type_complexity)]
fn nig_reference_pieces(
    model: &NigModel,
    y_obs: &[f64],
) -> Result<(InverseGamma, impl Fn(&f64, &mut SeededStream) -> Result<f64> + Sync, impl Fn(&f64, &f64, &mut SeededStream) -> Result<Vec<f64>> + Sync)> {
    let (a_n, b_n) = model.sigma_sq_posterior(y_obs)?;
    let post = InverseGamma::new(a_n, b_n)?;
    let mu0 = model.mu0;
    let l0 = model.lambda0;
    let n = model.n;
    let cond_prior = move |s2: &f64, s: &mut SeededStream| Ok(sample_normal(s, mu0, (s2 / l0).sqrt()));
    let lik = move |s2: &f64, mu: &f64, s: &mut SeededStream| {
        let sd = s2.sqrt();
        Ok((0..n).map(|_| sample_normal(s, *mu, sd)).collect::<Vec<f64>>())
    };
    Ok((post, cond_prior, lik))
}

/// Check of the conditional prior g(μ | σ²): upper tail of (ȳ−μ0)² against
/// replicates drawn with σ² from its posterior given `y_obs`.
pub fn nig_s1_check(model: &NigModel, y_obs: &[f64], cfg: &McConfig) -> Result<CheckResult> {
    model.check_data(y_obs)?;
    let cfg = cfg.clone().with_tail(Tail::Upper);
    let (post, cond_prior, lik) = nig_reference_pieces(model, y_obs)?;
    let mu0 = model.mu0;
    let res = hierarchical_check(
        |y: &Vec<f64>, _s2: &f64| {
            let d = mean(y) - mu0;
            d * d
        },
        |s: &mut SeededStream| Ok(post.sample(s)),
        cond_prior,
        lik,
        &y_obs.to_vec(),
        1,
        &cfg,
    )?;
    Ok(res.with_expansion(model.expansion()))
}

/// The same check built from the exact λ-score averaged over
/// `n_posterior` posterior draws of σ²; small values indicate conflict.
pub fn nig_lambda_check(model: &NigModel, y_obs: &[f64], n_posterior: usize, cfg: &McConfig) -> Result<CheckResult> {
    model.check_data(y_obs)?;
    let cfg = cfg.clone().with_tail(Tail::Lower);
    let (post, cond_prior, lik) = nig_reference_pieces(model, y_obs)?;
    let res = hierarchical_check(
        |y: &Vec<f64>, s2: &f64| nig_lambda_score(model, y, *s2),
        |s: &mut SeededStream| Ok(post.sample(s)),
        cond_prior,
        lik,
        &y_obs.to_vec(),
        n_posterior,
        &cfg,
    )?;
    Ok(res.with_expansion(model.expansion()))
}

/// Check from expanding the prior mean instead: two-sided on ȳ − μ0.
pub fn nig_mean_shift_check(model: &NigModel, y_obs: &[f64], cfg: &McConfig) -> Result<CheckResult> {
    model.check_data(y_obs)?;
    let cfg = cfg.clone().with_tail(Tail::TwoSided);
    let (post, cond_prior, lik) = nig_reference_pieces(model, y_obs)?;
    let mu0 = model.mu0;
    let res = hierarchical_check(
        |y: &Vec<f64>, _s2: &f64| mean(y) - mu0,
        |s: &mut SeededStream| Ok(post.sample(s)),
        cond_prior,
        lik,
        &y_obs.to_vec(),
        1,
        &cfg,
    )?;
    Ok(res.with_expansion(PriorExpansionSpec::new("nig_conditional_mean", mu0).with("lambda0", model.lambda0)))
}
