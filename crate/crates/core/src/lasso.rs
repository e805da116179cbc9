//! Checks for a Laplace (LASSO) prior embedded in the exponential power
//! family with shape q, q0 = 1 being the Laplace case.
//!
//! Two statistics are compared: the kurtosis Σx⁴/(Σx²)² and the plug-in
//! approximation to the score in q at q = 1,
//! A(1) + Σ [B(1)|u_i| + C(1)|u_i| log|u_i|] with u_i = μ̂_i/τ.

use nalgebra::{DMatrix, DVector};
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::engine::{power_study, reference_distribution, reference_distributions, McConfig, PowerCurve, ReferenceDistribution, Tail, REFERENCE_STREAM};
use crate::error::{Error, Result};
use crate::rng::{fill_standard_normal, ExpPower, SeededStream};
use crate::special::psi;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManyMeansSetup {
    /// Number of means.
    pub n: usize,
    /// Replicates per mean; x̄_i has variance 1/m.
    pub m: usize,
    pub tau: f64,
    pub q0: f64,
}

impl ManyMeansSetup {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        Self::with_prior(n, m, 1.0, 1.0)
    }

    pub fn with_prior(n: usize, m: usize, tau: f64, q0: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain("many_means", format!("n must be at least 2, got {n}")));
        }
        if m < 1 {
            return Err(Error::domain("many_means", "m must be at least 1"));
        }
        if !(tau > 0.0) || !(q0 > 0.0) {
            return Err(Error::domain("many_means", "tau and q0 must be positive"));
        }
        Ok(Self { n, m, tau, q0 })
    }

    /// x̄ = μ + N(0, I/m) with μ_i i.i.d. exponential power (τ, q).
    pub fn sample_means(&self, q: f64, rng: &mut SeededStream, out: &mut [f64]) -> Result<()> {
        let prior = ExpPower::new(self.tau, q)?;
        let sd = 1.0 / (self.m as f64).sqrt();
        fill_standard_normal(rng, out);
        for x in out.iter_mut() {
            *x = prior.sample(rng) + sd * *x;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionSetup {
    pub n: usize,
    pub p: usize,
    pub tau: f64,
    pub q0: f64,
    pub standardize: bool,
}

impl RegressionSetup {
    pub fn new(n: usize, p: usize) -> Result<Self> {
        if n < 2 || p < 1 {
            return Err(Error::domain("regression", format!("need n >= 2 and p >= 1, got ({n}, {p})")));
        }
        Ok(Self {
            n,
            p,
            tau: 1.0,
            q0: 1.0,
            standardize: false,
        })
    }

    pub fn standardized(mut self, on: bool) -> Self {
        self.standardize = on;
        self
    }
}

/// Coefficients of the score approximation at q = 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreConstants {
    pub a1: f64,
    pub b1: f64,
    pub c1: f64,
}

impl ScoreConstants {
    pub fn at_laplace() -> Self {
        let (p1, p3) = (psi(1.0), psi(3.0));
        Self {
            a1: 1.0 + 1.5 * (p1 - p3),
            b1: -std::f64::consts::SQRT_2 * (std::f64::consts::LN_2 + p1 - 3.0 * p3) / 2.0,
            c1: -std::f64::consts::SQRT_2,
        }
    }
}

/// How the constant and the per-coordinate terms are combined. Every
/// convention is a positive affine map of the others for fixed n, so
/// rank-based p-values are identical.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreConvention {
    /// A(1) + Σ t_i.
    Display,
    /// n·A(1) + Σ t_i, the derivative of the summed log prior.
    Sum,
    /// A(1) + mean t_i.
    PerCoordinate,
    /// (1 + ψ(1) − ψ(3)) + mean t_i; the per-coordinate scale on which
    /// the standard critical-value tables are stated.
    Tabulated,
}

fn xlogx_terms(estimates: &[f64], tau: f64, k: &ScoreConstants) -> f64 {
    estimates
        .iter()
        .map(|e| {
            let u = (e / tau).abs();
            if u == 0.0 {
                0.0
            } else {
                k.b1 * u + k.c1 * u * u.ln()
            }
        })
        .sum()
}

pub fn approx_score_stat_with(estimates: &[f64], tau: f64, convention: ScoreConvention) -> Result<f64> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::domain("approx_score_stat", format!("tau must be positive, got {tau}")));
    }
    let k = ScoreConstants::at_laplace();
    let t = xlogx_terms(estimates, tau, &k);
    let n = estimates.len() as f64;
    Ok(match convention {
        ScoreConvention::Display => k.a1 + t,
        ScoreConvention::Sum => n * k.a1 + t,
        ScoreConvention::PerCoordinate => k.a1 + t / n,
        ScoreConvention::Tabulated => 1.0 + psi(1.0) - psi(3.0) + t / n,
    })
}

/// Plug-in score approximation A(1) + Σ [B(1)|u| + C(1)|u| log|u|].
pub fn approx_score_stat(estimates: &[f64], tau: f64) -> Result<f64> {
    approx_score_stat_with(estimates, tau, ScoreConvention::Display)
}

/// Σx⁴ / (Σx²)².
pub fn kurtosis_stat(xbar: &[f64]) -> Result<f64> {
    let s2: f64 = xbar.iter().map(|x| x * x).sum();
    if !(s2 > 0.0) {
        return Err(Error::domain("kurtosis_stat", "all entries are zero"));
    }
    let s4: f64 = xbar.iter().map(|x| x.powi(4)).sum();
    Ok(s4 / (s2 * s2))
}

/// n · Σx⁴ / (Σx²)², the scale on which critical values are reported.
pub fn kurtosis_scaled(xbar: &[f64]) -> Result<f64> {
    Ok(xbar.len() as f64 * kurtosis_stat(xbar)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LassoStatistic {
    /// Reported as n·k.
    Kurtosis,
    Score(ScoreConvention),
}

impl LassoStatistic {
    pub fn evaluate(self, estimates: &[f64], tau: f64) -> Result<f64> {
        match self {
            LassoStatistic::Kurtosis => kurtosis_scaled(estimates),
            LassoStatistic::Score(c) => approx_score_stat_with(estimates, tau, c),
        }
    }
}

/// Reference distribution of `statistic` under the q0 prior predictive.
pub fn many_means_reference(
    statistic: LassoStatistic,
    setup: &ManyMeansSetup,
    cfg: &McConfig,
) -> Result<ReferenceDistribution> {
    let n = setup.n;
    reference_distribution(cfg, REFERENCE_STREAM, |s| {
        let mut x = vec![0.0; n];
        setup.sample_means(setup.q0, s, &mut x)?;
        statistic.evaluate(&x, setup.tau)
    })
}

/// 2.5% and 97.5% points of the reference distribution.
pub fn critical_values(statistic: LassoStatistic, setup: &ManyMeansSetup, cfg: &McConfig) -> Result<(f64, f64)> {
    if cfg.n_draws < 10_000 {
        return Err(Error::domain("critical_values", format!("need at least 10000 draws, got {}", cfg.n_draws)));
    }
    let r = many_means_reference(statistic, setup, cfg)?;
    Ok((r.quantile(0.025), r.quantile(0.975)))
}

/// Powers of the kurtosis and score checks over a grid of shapes q.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoPowerTable {
    pub q: Vec<f64>,
    pub power_kurtosis: Vec<f64>,
    pub power_score: Vec<f64>,
    pub n: usize,
    pub p: usize,
    pub m: usize,
    pub tau: f64,
    pub n_reps: usize,
    pub seed: u64,
}

impl LassoPowerTable {
    pub const CSV_HEADER: &'static str = "q,power_kurtosis,power_score,n,p,m,tau,n_reps,seed";

    fn from_curves(curves: &[PowerCurve], n: usize, p: usize, m: usize, tau: f64) -> Self {
        Self {
            q: curves[0].gamma_grid.clone(),
            power_kurtosis: curves[0].power.clone(),
            power_score: curves[1].power.clone(),
            n,
            p,
            m,
            tau,
            n_reps: curves[0].n_reps,
            seed: curves[0].seed,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for i in 0..self.q.len() {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                self.q[i], self.power_kurtosis[i], self.power_score[i], self.n, self.p, self.m, self.tau, self.n_reps, self.seed
            ));
        }
        s
    }

    pub fn index_of(&self, q: f64) -> Option<usize> {
        self.q.iter().position(|v| (v - q).abs() < 1e-12)
    }

    /// Binomial standard error of a power estimate.
    pub fn standard_error(&self, power: f64) -> f64 {
        (power * (1.0 - power) / self.n_reps as f64).sqrt()
    }
}

fn validate_grid(q_grid: &[f64]) -> Result<()> {
    if q_grid.is_empty() || q_grid.iter().any(|q| !(*q > 0.0)) {
        return Err(Error::domain("q_grid", "shape grid must be non-empty and positive"));
    }
    Ok(())
}

/// Many-means power study: data drawn with shape q, two-sided p-values
/// against the q0 reference for both statistics.
pub fn many_means_power(setup: &ManyMeansSetup, q_grid: &[f64], n_reps: usize, cfg: &McConfig) -> Result<LassoPowerTable> {
    validate_grid(q_grid)?;
    let n = setup.n;
    let refs = reference_distributions(cfg, REFERENCE_STREAM, 2, |s| {
        let mut x = vec![0.0; n];
        setup.sample_means(setup.q0, s, &mut x)?;
        Ok(vec![kurtosis_scaled(&x)?, approx_score_stat(&x, setup.tau)?])
    })?;
    let (kref, sref) = (&refs[0], &refs[1]);
    let curves = power_study(&["kurtosis", "score"], q_grid, n_reps, cfg, |q, s| {
        let mut x = vec![0.0; n];
        setup.sample_means(q, s, &mut x)?;
        let k = kurtosis_scaled(&x)?;
        let sc = approx_score_stat(&x, setup.tau)?;
        Ok(vec![kref.p_value(k, Tail::TwoSided), sref.p_value(sc, Tail::TwoSided)])
    })?;
    Ok(LassoPowerTable::from_curves(&curves, setup.n, setup.n, setup.m, setup.tau))
}

/// Minimum-norm least-squares solution X⁺y.
pub fn regression_estimates(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    if x.nrows() != y.len() {
        return Err(Error::domain("regression_estimates", "X and y have different row counts"));
    }
    Ok(pseudo_inverse(x)? * y)
}

/// Moore–Penrose inverse by SVD; singular values below 1e-10·σ_max are
/// treated as zero.
pub fn pseudo_inverse(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if !(smax > 0.0) {
        return Ok(DMatrix::zeros(x.ncols(), x.nrows()));
    }
    svd.pseudo_inverse(1e-10 * smax)
        .map_err(|e| Error::Numerical(format!("pseudo-inverse failed: {e}")))
}

/// Center each column and scale it to unit Euclidean length.
pub fn standardize_columns(x: &mut DMatrix<f64>) {
    let n = x.nrows() as f64;
    for mut col in x.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
}

fn random_matrix(rows: usize, cols: usize, rng: &mut SeededStream) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    fill_standard_normal(rng, m.as_mut_slice());
    m
}

/// Regression power study. Each replicate draws a fresh design X, then the
/// reference distribution is simulated conditional on that X with β from the
/// q0 prior: β̂ = X⁺Xβ + X⁺z.
pub fn regression_power_study(setup: &RegressionSetup, q_grid: &[f64], n_reps: usize, cfg: &McConfig) -> Result<LassoPowerTable> {
    validate_grid(q_grid)?;
    cfg.validate()?;
    let (n, p, tau) = (setup.n, setup.p, setup.tau);
    let n_ref = cfg.n_draws;
    let null = ExpPower::new(tau, setup.q0)?;
    let curves = power_study(&["kurtosis", "score"], q_grid, n_reps, cfg, |q, s| {
        let mut x = random_matrix(n, p, s);
        if setup.standardize {
            standardize_columns(&mut x);
        }
        let xp = pseudo_inverse(&x)?;
        let hat = &xp * &x;

        let prior = ExpPower::new(tau, q)?;
        let beta = DVector::from_fn(p, |_, _| prior.sample(s));
        let mut z = DVector::zeros(n);
        fill_standard_normal(s, z.as_mut_slice());
        let bhat = &xp * (&x * beta + z);

        let mut rs = s.child(REFERENCE_STREAM);
        let b_ref = DMatrix::from_fn(p, n_ref, |_, _| null.sample(&mut rs));
        let z_ref = random_matrix(n, n_ref, &mut rs);
        let bhat_ref = &hat * b_ref + &xp * z_ref;
        let mut k_ref = Vec::with_capacity(n_ref);
        let mut s_ref = Vec::with_capacity(n_ref);
        for col in bhat_ref.column_iter() {
            let v: Vec<f64> = col.iter().copied().collect();
            k_ref.push(kurtosis_scaled(&v)?);
            s_ref.push(approx_score_stat(&v, tau)?);
        }
        let k_ref = ReferenceDistribution::from_values(k_ref)?;
        let s_ref = ReferenceDistribution::from_values(s_ref)?;
        let est = bhat.as_slice();
        Ok(vec![
            k_ref.p_value(kurtosis_scaled(est)?, Tail::TwoSided),
            s_ref.p_value(approx_score_stat(est, tau)?, Tail::TwoSided),
        ])
    })?;
    Ok(LassoPowerTable::from_curves(&curves, n, p, 1, tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constants() {
        let k = ScoreConstants::at_laplace();
        assert!((k.a1 + 1.25).abs() < 1e-15);
        assert_eq!(k.c1, -std::f64::consts::SQRT_2);
        assert!((k.b1 - 1.875_545_221_887_239).abs() < 1e-12);
    }

    #[test]
    fn kurtosis_examples() {
        assert!((kurtosis_stat(&[2.5; 10]).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(kurtosis_stat(&[0.0, 0.0, -3.0]).unwrap(), 1.0);
        assert!((kurtosis_stat(&[1.0, 2.0]).unwrap() - 0.68).abs() < 1e-15);
        assert!(kurtosis_stat(&[0.0; 4]).is_err());
        assert!((kurtosis_scaled(&[1.0, 2.0]).unwrap() - 1.36).abs() < 1e-15);
    }

    #[test]
    fn score_examples() {
        assert!((approx_score_stat(&[0.0; 10], 1.0).unwrap() + 1.25).abs() < 1e-15);
        let k = ScoreConstants::at_laplace();
        assert!((approx_score_stat(&[-2.0], 2.0).unwrap() - (k.a1 + k.b1)).abs() < 1e-15);
        assert!(approx_score_stat(&[1.0], 0.0).is_err());
        let e = [0.3, -1.2, 2.0];
        let d = approx_score_stat_with(&e, 1.0, ScoreConvention::Display).unwrap();
        let sum = approx_score_stat_with(&e, 1.0, ScoreConvention::Sum).unwrap();
        let per = approx_score_stat_with(&e, 1.0, ScoreConvention::PerCoordinate).unwrap();
        let tab = approx_score_stat_with(&e, 1.0, ScoreConvention::Tabulated).unwrap();
        assert!((sum - d - 2.0 * k.a1).abs() < 1e-14);
        assert!((tab - per - 0.75).abs() < 1e-14);
    }

    #[test]
    fn pinv_identity_and_duplicates() {
        let x = DMatrix::<f64>::identity(4, 4);
        let y = DVector::from_vec(vec![1.0, -2.0, 3.0, 0.5]);
        assert!((regression_estimates(&x, &y).unwrap() - &y).norm() < 1e-14);
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let y = DVector::from_vec(vec![2.0, 4.0, 6.0]);
        let b = regression_estimates(&x, &y).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-12 && (b[1] - 1.0).abs() < 1e-12);
        assert_eq!(pseudo_inverse(&DMatrix::zeros(2, 3)).unwrap().shape(), (3, 2));
    }

    #[test]
    fn standardized_columns() {
        let mut s = SeededStream::new(1, 1);
        let mut x = random_matrix(10, 3, &mut s);
        standardize_columns(&mut x);
        for c in x.column_iter() {
            assert!(c.sum().abs() < 1e-13);
            assert!((c.norm() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn setup_validation() {
        assert!(ManyMeansSetup::new(1, 20).is_err());
        assert!(ManyMeansSetup::new(10, 0).is_err());
        assert!(RegressionSetup::new(1, 3).is_err());
        let cfg = McConfig::new(1000, 1);
        let setup = ManyMeansSetup::new(10, 20).unwrap();
        assert!(critical_values(LassoStatistic::Kurtosis, &setup, &cfg).is_err());
        assert!(many_means_power(&setup, &[0.0], 10, &cfg).is_err());
    }

    proptest! {
        #[test]
        fn score_depends_on_absolute_scaled_values(
            v in prop::collection::vec(-5.0f64..5.0, 1..20),
            tau in 0.1f64..4.0,
            flips in prop::collection::vec(any::<bool>(), 20),
            rot in 0usize..20,
        ) {
            let base = approx_score_stat(&v, tau).unwrap();
            let mut w: Vec<f64> = v.iter().zip(&flips).map(|(x, f)| if *f { -x } else { *x }).collect();
            let k = rot % w.len();
            w.rotate_left(k);
            let other = approx_score_stat(&w, tau).unwrap();
            prop_assert!((base - other).abs() <= 1e-12 * (1.0 + base.abs()));
            let scaled: Vec<f64> = v.iter().map(|x| x * 3.0).collect();
            let s3 = approx_score_stat(&scaled, tau * 3.0).unwrap();
            prop_assert!((base - s3).abs() <= 1e-12 * (1.0 + base.abs()));
        }

        #[test]
        fn kurtosis_is_scale_free_and_bounded(
            v in prop::collection::vec(-5.0f64..5.0, 2..30),
            c in 0.01f64..100.0,
        ) {
            prop_assume!(v.iter().any(|x| x.abs() > 1e-6));
            let k = kurtosis_stat(&v).unwrap();
            let w: Vec<f64> = v.iter().map(|x| x * c).collect();
            prop_assert!((k - kurtosis_stat(&w).unwrap()).abs() < 1e-12);
            prop_assert!(k >= 1.0 / v.len() as f64 - 1e-12 && k <= 1.0 + 1e-12);
        }
    }
}
