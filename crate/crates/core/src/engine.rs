//! Monte-Carlo calibration engine: reference distributions, rank-based
//! p-values, power curves and the hierarchical check.
//!
//! Simulation work is cut into chunks of [`CHUNK`] draws and chunk `i` of a
//! task with stream id `s` draws from `SeededStream::new(seed,
//! derive_stream_id(s, i))`. Results are collected in chunk order, so the
//! output never depends on how many workers ran the chunks.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_stream_id, SeededStream, DEFAULT_SEED};

pub const CHUNK: usize = 256;

/// Stream-id roots for the independent random tasks inside one check.
pub const REFERENCE_STREAM: u64 = 0;
pub const POSTERIOR_STREAM: u64 = 1;
pub const POWER_STREAM: u64 = 2;

/// Simulated statistics may be non-finite on at most this fraction of draws;
/// such draws are dropped.
pub const MAX_NON_FINITE_FRACTION: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    Upper,
    Lower,
    TwoSided,
}

impl fmt::Display for Tail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tail::Upper => "upper",
            Tail::Lower => "lower",
            Tail::TwoSided => "two_sided",
        })
    }
}

impl FromStr for Tail {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upper" => Ok(Tail::Upper),
            "lower" => Ok(Tail::Lower),
            "two_sided" | "two-sided" | "two" => Ok(Tail::TwoSided),
            other => Err(Error::domain("tail", format!("unknown tail mode '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_draws: usize,
    /// 0 means the rayon default (one worker per core).
    pub n_workers: usize,
    pub base_seed: u64,
    pub tail: Tail,
    pub alpha: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_draws: 10_000,
            n_workers: 0,
            base_seed: DEFAULT_SEED,
            tail: Tail::Upper,
            alpha: 0.05,
        }
    }
}

impl McConfig {
    pub fn new(n_draws: usize, base_seed: u64) -> Self {
        Self {
            n_draws,
            base_seed,
            ..Self::default()
        }
    }

    pub fn with_tail(mut self, tail: Tail) -> Self {
        self.tail = tail;
        self
    }

    pub fn with_workers(mut self, n_workers: usize) -> Self {
        self.n_workers = n_workers;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_draws(mut self, n_draws: usize) -> Self {
        self.n_draws = n_draws;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_draws < 100 {
            return Err(Error::domain("mc_config", format!("n_draws must be at least 100, got {}", self.n_draws)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain("mc_config", format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }

    /// Run `f` on a pool of `n_workers` threads. Nested calls from inside a
    /// pool run on the caller's pool.
    pub fn install<R, F>(&self, f: F) -> Result<R>
    where
        R: Send,
        F: FnOnce() -> R + Send,
    {
        if self.n_workers == 0 || rayon::current_thread_index().is_some() {
            return Ok(f());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.n_workers)
            .build()
            .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))?;
        Ok(pool.install(f))
    }
}

/// Identifies the prior expansion a check was built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorExpansionSpec {
    pub family: String,
    pub gamma0: f64,
    #[serde(default)]
    pub hyperparameters: BTreeMap<String, f64>,
}

impl PriorExpansionSpec {
    pub fn new(family: impl Into<String>, gamma0: f64) -> Self {
        Self {
            family: family.into(),
            gamma0,
            hyperparameters: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.hyperparameters.insert(key.to_string(), value);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrawsSummary {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub statistic_obs: f64,
    pub p_value: f64,
    pub n_draws: usize,
    pub tail: Tail,
    pub base_seed: u64,
    pub p_upper: f64,
    pub p_lower: f64,
    pub draws_summary: DrawsSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expansion: Option<PriorExpansionSpec>,
}

impl CheckResult {
    pub fn with_expansion(mut self, spec: PriorExpansionSpec) -> Self {
        self.expansion = Some(spec);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("CheckResult serializes")
    }

    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value <= alpha
    }
}

/// Sorted sample of simulated statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceDistribution {
    sorted: Vec<f64>,
}

impl ReferenceDistribution {
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("reference_distribution", "no reference draws"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("reference_distribution", "reference draws must be finite"));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { sorted: values })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// (1 + #{S ≥ s}) / (n + 1).
    pub fn p_upper(&self, s: f64) -> f64 {
        let below = self.sorted.partition_point(|&x| x < s);
        (1 + self.sorted.len() - below) as f64 / (self.sorted.len() + 1) as f64
    }

    /// (1 + #{S ≤ s}) / (n + 1).
    pub fn p_lower(&self, s: f64) -> f64 {
        let at_or_below = self.sorted.partition_point(|&x| x <= s);
        (1 + at_or_below) as f64 / (self.sorted.len() + 1) as f64
    }

    pub fn p_value(&self, s: f64, tail: Tail) -> f64 {
        match tail {
            Tail::Upper => self.p_upper(s),
            Tail::Lower => self.p_lower(s),
            Tail::TwoSided => (2.0 * self.p_upper(s).min(self.p_lower(s))).min(1.0),
        }
    }

    /// Empirical quantile with linear interpolation between order statistics.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        let h = p.clamp(0.0, 1.0) * (n - 1) as f64;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        self.sorted[lo] + (h - lo as f64) * (self.sorted[hi] - self.sorted[lo])
    }

    pub fn summary(&self) -> DrawsSummary {
        let n = self.sorted.len() as f64;
        let mean = self.sorted.iter().sum::<f64>() / n;
        let var = if self.sorted.len() > 1 {
            self.sorted.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        DrawsSummary {
            mean,
            sd: var.sqrt(),
            min: self.sorted[0],
            max: self.sorted[self.sorted.len() - 1],
        }
    }

    pub fn check_result(&self, statistic_obs: f64, tail: Tail, base_seed: u64) -> CheckResult {
        CheckResult {
            statistic_obs,
            p_value: self.p_value(statistic_obs, tail),
            n_draws: self.len(),
            tail,
            base_seed,
            p_upper: self.p_upper(statistic_obs),
            p_lower: self.p_lower(statistic_obs),
            draws_summary: self.summary(),
            expansion: None,
        }
    }
}

/// Evaluate `f` on `n` draws split into stream-bound chunks rooted at
/// `stream_id`, returning the finite values in draw order. Non-finite values
/// are dropped if they are rare and reported otherwise.
pub fn simulate<F>(cfg: &McConfig, stream_id: u64, n: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(&mut SeededStream) -> Result<f64> + Sync,
{
    let mut cols = simulate_columns(cfg, stream_id, n, 1, |s| Ok(vec![f(s)?]))?;
    Ok(cols.remove(0))
}

/// Like [`simulate`] for `k` statistics computed from the same draw; a draw
/// is dropped when any of its statistics is non-finite.
pub fn simulate_columns<F>(cfg: &McConfig, stream_id: u64, n: usize, k: usize, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&mut SeededStream) -> Result<Vec<f64>> + Sync,
{
    let n_chunks = n.div_ceil(CHUNK);
    let seed = cfg.base_seed;
    let chunks: Vec<(Vec<Vec<f64>>, usize, Option<u64>)> = cfg.install(|| {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let sid = derive_stream_id(stream_id, c as u64);
                let mut stream = SeededStream::new(seed, sid);
                let len = CHUNK.min(n - c * CHUNK);
                let mut out = vec![Vec::with_capacity(len); k];
                let mut bad = 0;
                for _ in 0..len {
                    let v = f(&mut stream)?;
                    if v.len() != k {
                        return Err(Error::Numerical(format!("expected {k} statistics, got {}", v.len())));
                    }
                    if v.iter().all(|x| x.is_finite()) {
                        for (o, x) in out.iter_mut().zip(v) {
                            o.push(x);
                        }
                    } else {
                        bad += 1;
                    }
                }
                Ok((out, bad, (bad > 0).then_some(sid)))
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let bad: usize = chunks.iter().map(|c| c.1).sum();
    if bad > 0 && bad as f64 > MAX_NON_FINITE_FRACTION * n as f64 {
        let first = chunks.iter().find_map(|c| c.2).unwrap_or(stream_id);
        return Err(Error::NonFinite {
            count: bad,
            total: n,
            seed,
            stream_id: first,
        });
    }
    let mut cols = vec![Vec::with_capacity(n - bad); k];
    for (chunk, _, _) in chunks {
        for (c, v) in cols.iter_mut().zip(chunk) {
            c.extend(v);
        }
    }
    Ok(cols)
}

/// Reference distributions of `k` statistics from `cfg.n_draws` shared draws.
pub fn reference_distributions<F>(cfg: &McConfig, stream_id: u64, k: usize, f: F) -> Result<Vec<ReferenceDistribution>>
where
    F: Fn(&mut SeededStream) -> Result<Vec<f64>> + Sync,
{
    cfg.validate()?;
    simulate_columns(cfg, stream_id, cfg.n_draws, k, f)?
        .into_iter()
        .map(ReferenceDistribution::from_values)
        .collect()
}

/// Simulate `cfg.n_draws` statistics and sort them.
pub fn reference_distribution<F>(cfg: &McConfig, stream_id: u64, f: F) -> Result<ReferenceDistribution>
where
    F: Fn(&mut SeededStream) -> Result<f64> + Sync,
{
    cfg.validate()?;
    ReferenceDistribution::from_values(simulate(cfg, stream_id, cfg.n_draws, f)?)
}

/// Prior-predictive p-value of `statistic` at `obs`, calibrated with
/// `cfg.n_draws` replicates from `sampler`.
pub fn mc_p_value<D, S, P>(statistic: S, obs: &D, sampler: P, cfg: &McConfig) -> Result<CheckResult>
where
    S: Fn(&D) -> f64 + Sync,
    P: Fn(&mut SeededStream) -> Result<D> + Sync,
{
    let s_obs = statistic(obs);
    if !s_obs.is_finite() {
        return Err(Error::Numerical(format!("observed statistic is {s_obs}")));
    }
    let reference = reference_distribution(cfg, REFERENCE_STREAM, |s| Ok(statistic(&sampler(s)?)))?;
    Ok(reference.check_result(s_obs, cfg.tail, cfg.base_seed))
}

/// Score for the arithmetic mixture (1−γ)g + γq at γ = 0:
/// E[q(θ)/g(θ) | y] − 1 over posterior draws.
pub fn mixture_score<T, F>(log_density_ratio: F, posterior_draws: &[T]) -> Result<f64>
where
    F: Fn(&T) -> f64,
{
    if posterior_draws.is_empty() {
        return Err(Error::domain("mixture_score", "no posterior draws"));
    }
    let mut total = 0.0;
    for (i, t) in posterior_draws.iter().enumerate() {
        let r = log_density_ratio(t).exp();
        if !r.is_finite() {
            return Err(Error::domain(
                "mixture_score",
                format!("density ratio is not finite on draw {i}; q and g supports differ"),
            ));
        }
        total += r;
    }
    Ok(total / posterior_draws.len() as f64 - 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub label: String,
    pub gamma_grid: Vec<f64>,
    pub power: Vec<f64>,
    pub n_reps: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl PowerCurve {
    pub const CSV_HEADER: &'static str = "gamma,power,n_reps,alpha,seed";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for (g, p) in self.gamma_grid.iter().zip(&self.power) {
            s.push_str(&format!("{g},{p},{},{},{}\n", self.n_reps, self.alpha, self.seed));
        }
        s
    }

    /// Monte-Carlo standard error of `power[i]`.
    pub fn standard_error(&self, i: usize) -> f64 {
        let p = self.power[i];
        (p * (1.0 - p) / self.n_reps as f64).sqrt()
    }
}

/// Estimate rejection rates for several checks at once. For every grid value
/// γ and replicate r, `replicate(γ, stream)` simulates one dataset under γ and
/// returns one p-value per label; a check rejects when p ≤ `cfg.alpha`.
pub fn power_study<F>(
    labels: &[&str],
    gamma_grid: &[f64],
    n_reps: usize,
    cfg: &McConfig,
    replicate: F,
) -> Result<Vec<PowerCurve>>
where
    F: Fn(f64, &mut SeededStream) -> Result<Vec<f64>> + Sync,
{
    if n_reps == 0 {
        return Err(Error::domain("power_study", "n_reps must be positive"));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::domain("power_study", format!("alpha must lie in (0, 1), got {}", cfg.alpha)));
    }
    let k = labels.len();
    let seed = cfg.base_seed;
    let jobs: Vec<(usize, usize)> = (0..gamma_grid.len())
        .flat_map(|i| (0..n_reps).map(move |r| (i, r)))
        .collect();
    let pvals: Vec<Vec<f64>> = cfg.install(|| {
        jobs.par_iter()
            .map(|&(i, r)| {
                let gamma = gamma_grid[i];
                let sid = derive_stream_id(derive_stream_id(POWER_STREAM, i as u64), r as u64);
                let mut stream = SeededStream::new(seed, sid);
                let wrap = |e: Error| Error::Replicate {
                    gamma,
                    replicate: r,
                    source: Box::new(e),
                };
                let p = replicate(gamma, &mut stream).map_err(wrap)?;
                if p.len() != k {
                    return Err(wrap(Error::Numerical(format!("expected {k} p-values, got {}", p.len()))));
                }
                Ok(p)
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let mut curves: Vec<PowerCurve> = labels
        .iter()
        .map(|l| PowerCurve {
            label: l.to_string(),
            gamma_grid: gamma_grid.to_vec(),
            power: vec![0.0; gamma_grid.len()],
            n_reps,
            alpha: cfg.alpha,
            seed,
        })
        .collect();
    for (&(i, _), p) in jobs.iter().zip(&pvals) {
        for (c, pc) in curves.iter_mut().zip(p) {
            if *pc <= cfg.alpha {
                c.power[i] += 1.0;
            }
        }
    }
    for c in &mut curves {
        for v in &mut c.power {
            *v /= n_reps as f64;
        }
    }
    Ok(curves)
}

/// Single-check form of [`power_study`].
pub fn power_curve<F>(gamma_grid: &[f64], n_reps: usize, cfg: &McConfig, replicate: F) -> Result<PowerCurve>
where
    F: Fn(f64, &mut SeededStream) -> Result<f64> + Sync,
{
    let mut v = power_study(&["check"], gamma_grid, n_reps, cfg, |g, s| Ok(vec![replicate(g, s)?]))?;
    Ok(v.remove(0))
}

/// Check of a conditional prior g(θ2|θ1). The statistic averages
/// `cond_score(y, θ1)` over a common set of `n_posterior` draws of θ1 from
/// its posterior given the observed data; reference replicates draw
/// θ1 from that posterior, θ2 from the conditional prior and y from the
/// likelihood.
#[allow(clippy::too_many_arguments)]
pub fn hierarchical_check<D, T1, T2, C, P1, P2, L>(
    cond_score: C,
    theta1_posterior: P1,
    cond_prior: P2,
    likelihood: L,
    obs: &D,
    n_posterior: usize,
    cfg: &McConfig,
) -> Result<CheckResult>
where
    T1: Send + Sync,
    C: Fn(&D, &T1) -> f64 + Sync,
    P1: Fn(&mut SeededStream) -> Result<T1> + Sync,
    P2: Fn(&T1, &mut SeededStream) -> Result<T2> + Sync,
    L: Fn(&T1, &T2, &mut SeededStream) -> Result<D> + Sync,
{
    if n_posterior == 0 {
        return Err(Error::domain("hierarchical_check", "n_posterior must be positive"));
    }
    let mut ps = SeededStream::new(cfg.base_seed, POSTERIOR_STREAM);
    let theta1: Vec<T1> = (0..n_posterior)
        .map(|_| theta1_posterior(&mut ps))
        .collect::<Result<_>>()?;
    let statistic = |y: &D| theta1.iter().map(|t| cond_score(y, t)).sum::<f64>() / n_posterior as f64;
    mc_p_value(
        statistic,
        obs,
        |s| {
            let t1 = theta1_posterior(s)?;
            let t2 = cond_prior(&t1, s)?;
            likelihood(&t1, &t2, s)
        },
        cfg,
    )
}
