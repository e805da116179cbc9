//! Expansions of a truncated Dirichlet(α0 q) prior and their score checks.
//!
//! g1 mixes the prior geometrically with the Jeffreys prior,
//! δ_k = (1−γ)α0 q_k + γ/2; g2 shifts the base measure toward the first
//! outcome at fixed precision, q1' = q1 + γ, q_k' = q_k − γ/(K−1).

use serde::{Deserialize, Serialize};

use crate::engine::{
    power_study, reference_distributions, CheckResult, McConfig, PowerCurve, PriorExpansionSpec, ReferenceDistribution, Tail,
    REFERENCE_STREAM,
};
use crate::error::{Error, Result};
use crate::quadrature::DiskGrid;
use crate::quantum::geometry::{clean_probabilities, TrineGeometry};
use crate::quantum::posterior::{posterior_mean_log_theta, LogThetaGrid};
use crate::quantum::sampling::ConstrainedDirichlet;
use crate::rng::{multinomial_into, SeededStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionKind {
    G1JeffreysMix,
    G2LocationShift,
    PhysicalGamma,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFamily {
    pub kind: ExpansionKind,
    pub alpha0: f64,
    pub q: [f64; 3],
    pub gamma0: f64,
}

fn validate_q(q: &[f64; 3]) -> Result<()> {
    if q.iter().any(|v| !(*v > 0.0)) || (q.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::domain("expansion_family", format!("q must be a positive probability vector, got {q:?}")));
    }
    Ok(())
}

impl ExpansionFamily {
    pub fn g1(alpha0: f64, q: [f64; 3]) -> Result<Self> {
        Self::build(ExpansionKind::G1JeffreysMix, alpha0, q)
    }

    pub fn g2(alpha0: f64, q: [f64; 3]) -> Result<Self> {
        Self::build(ExpansionKind::G2LocationShift, alpha0, q)
    }

    pub fn of_kind(kind: ExpansionKind, alpha0: f64, q: [f64; 3]) -> Result<Self> {
        if kind == ExpansionKind::PhysicalGamma {
            return Err(Error::domain("expansion_family", "the physical family is built from a trine geometry"));
        }
        Self::build(kind, alpha0, q)
    }

    fn build(kind: ExpansionKind, alpha0: f64, q: [f64; 3]) -> Result<Self> {
        if !(alpha0 > 0.0) {
            return Err(Error::domain("expansion_family", format!("alpha0 must be positive, got {alpha0}")));
        }
        validate_q(&q)?;
        Ok(Self {
            kind,
            alpha0,
            q,
            gamma0: 0.0,
        })
    }

    /// Flat prior on Θ_γ expanded in the trine angle itself.
    pub fn physical(geometry: &TrineGeometry) -> Self {
        Self {
            kind: ExpansionKind::PhysicalGamma,
            alpha0: 3.0,
            q: [1.0 / 3.0; 3],
            gamma0: geometry.gamma(),
        }
    }

    pub fn baseline_params(&self) -> [f64; 3] {
        [self.alpha0 * self.q[0], self.alpha0 * self.q[1], self.alpha0 * self.q[2]]
    }

    /// Dirichlet parameters of the expanded prior at γ.
    pub fn dirichlet_params(&self, gamma: f64) -> Result<[f64; 3]> {
        let a = self.alpha0;
        let p = match self.kind {
            ExpansionKind::G1JeffreysMix => {
                if !(0.0..=1.0).contains(&gamma) {
                    return Err(Error::domain("g1", format!("gamma must lie in [0, 1], got {gamma}")));
                }
                self.q.map(|qk| (1.0 - gamma) * a * qk + 0.5 * gamma)
            }
            ExpansionKind::G2LocationShift => [
                a * (self.q[0] + gamma),
                a * (self.q[1] - 0.5 * gamma),
                a * (self.q[2] - 0.5 * gamma),
            ],
            ExpansionKind::PhysicalGamma => self.baseline_params(),
        };
        if p.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::domain("expansion_family", format!("gamma = {gamma} leaves the family's valid range")));
        }
        Ok(p)
    }

    /// Weights w_k of the statistic Σ w_k E(log θ_k | y).
    pub fn score_weights(&self) -> [f64; 3] {
        match self.kind {
            ExpansionKind::G1JeffreysMix => self.baseline_params().map(|d| d - 0.5),
            ExpansionKind::G2LocationShift => [1.0, -0.5, -0.5],
            ExpansionKind::PhysicalGamma => [0.0; 3],
        }
    }

    /// Tail of the weighted statistic that signals conflict. For g1 the
    /// weighted sum is the negative of the score up to a constant, so
    /// conflict shows in the lower tail.
    pub fn conflict_tail(&self) -> Tail {
        match self.kind {
            ExpansionKind::G1JeffreysMix => Tail::Lower,
            ExpansionKind::G2LocationShift | ExpansionKind::PhysicalGamma => Tail::Upper,
        }
    }

    pub fn statistic(&self, mean_log_theta: &[f64; 3]) -> f64 {
        let w = self.score_weights();
        w[0] * mean_log_theta[0] + w[1] * mean_log_theta[1] + w[2] * mean_log_theta[2]
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            ExpansionKind::G1JeffreysMix => "g1",
            ExpansionKind::G2LocationShift => "g2",
            ExpansionKind::PhysicalGamma => "physical",
        }
    }

    pub fn spec(&self) -> PriorExpansionSpec {
        PriorExpansionSpec::new(self.label(), self.gamma0)
            .with("alpha0", self.alpha0)
            .with("q1", self.q[0])
            .with("q2", self.q[1])
            .with("q3", self.q[2])
    }

    /// d/dγ log Π θ_k^{δ_k(γ)−1}: the weights on log θ_k of the log-prior
    /// derivative (before normalization).
    pub fn log_prior_gradient(&self) -> [f64; 3] {
        match self.kind {
            ExpansionKind::G1JeffreysMix => self.baseline_params().map(|d| 0.5 - d),
            ExpansionKind::G2LocationShift => [self.alpha0, -0.5 * self.alpha0, -0.5 * self.alpha0],
            ExpansionKind::PhysicalGamma => [0.0; 3],
        }
    }
}

/// Σ(α0 q_k − ½) E(log θ_k | y) with Monte-Carlo posterior moments.
pub fn score_g1(y: &[u64; 3], alpha0: f64, q: [f64; 3], geometry: &TrineGeometry, cfg: &McConfig) -> Result<f64> {
    let f = ExpansionFamily::g1(alpha0, q)?;
    let m = posterior_mean_log_theta(y, &f.baseline_params(), geometry, cfg)?;
    Ok(f.statistic(&m.mean))
}

/// E(log θ1 | y) − Σ_{k≥2} E(log θ_k | y)/(K−1) with Monte-Carlo posterior moments.
pub fn score_g2(y: &[u64; 3], alpha0: f64, q: [f64; 3], geometry: &TrineGeometry, cfg: &McConfig) -> Result<f64> {
    let f = ExpansionFamily::g2(alpha0, q)?;
    let m = posterior_mean_log_theta(y, &f.baseline_params(), geometry, cfg)?;
    Ok(f.statistic(&m.mean))
}

/// log p(y | γ) up to a γ-free constant, by quadrature on the disk.
pub fn log_marginal_quadrature(family: &ExpansionFamily, y: &[u64; 3], gamma: f64, grid: &LogThetaGrid) -> Result<f64> {
    let d = family.dirichlet_params(gamma)?;
    let post = [y[0] as f64 + d[0] - 1.0, y[1] as f64 + d[1] - 1.0, y[2] as f64 + d[2] - 1.0];
    let prior = [d[0] - 1.0, d[1] - 1.0, d[2] - 1.0];
    Ok(grid.log_integral(&post) - grid.log_integral(&prior))
}

fn draw_counts(prior: &ConstrainedDirichlet, n_trials: u64, s: &mut SeededStream) -> Result<[u64; 3]> {
    let mut theta = prior.sample_one(s)?;
    clean_probabilities(&mut theta);
    let mut y = [0u64; 3];
    multinomial_into(s, n_trials, &theta, &mut y)?;
    Ok(y)
}

/// Both family statistics, computed from shared quadrature posterior moments
/// at the baseline prior.
struct FamilyStatistics {
    g1: ExpansionFamily,
    g2: ExpansionFamily,
    grid: LogThetaGrid,
}

impl FamilyStatistics {
    fn new(alpha0: f64, q: [f64; 3], geometry: &TrineGeometry, grid: &DiskGrid) -> Result<Self> {
        Ok(Self {
            g1: ExpansionFamily::g1(alpha0, q)?,
            g2: ExpansionFamily::g2(alpha0, q)?,
            grid: LogThetaGrid::new(*geometry, grid),
        })
    }

    fn evaluate(&self, y: &[u64; 3]) -> [f64; 2] {
        let m = self.grid.posterior_mean_log_theta(y, &self.g1.baseline_params());
        [self.g1.statistic(&m), self.g2.statistic(&m)]
    }

    fn references(&self, n_trials: u64, cfg: &McConfig) -> Result<Vec<ReferenceDistribution>> {
        let prior = ConstrainedDirichlet::new(&self.g1.baseline_params(), self.grid.geometry())?;
        reference_distributions(cfg, REFERENCE_STREAM, 2, |s| {
            let y = draw_counts(&prior, n_trials, s)?;
            Ok(self.evaluate(&y).to_vec())
        })
    }
}

/// Prior-predictive checks from the g1 and g2 expansions for one dataset.
/// Posterior moments are computed by quadrature on `grid` so that observed
/// and reference statistics are evaluated identically.
pub fn family_checks(
    y_obs: &[u64; 3],
    alpha0: f64,
    q: [f64; 3],
    geometry: &TrineGeometry,
    grid: &DiskGrid,
    cfg: &McConfig,
) -> Result<[CheckResult; 2]> {
    let stats = FamilyStatistics::new(alpha0, q, geometry, grid)?;
    let n_trials = y_obs.iter().sum();
    let refs = stats.references(n_trials, cfg)?;
    let obs = stats.evaluate(y_obs);
    let families = [stats.g1, stats.g2];
    let mut out = Vec::with_capacity(2);
    for i in 0..2 {
        let f = &families[i];
        out.push(refs[i].check_result(obs[i], f.conflict_tail(), cfg.base_seed).with_expansion(f.spec()));
    }
    Ok([out[0].clone(), out[1].clone()])
}

/// Power of the g1 and g2 checks when data come from `data_family` at each
/// γ on `gamma_grid`, with `n_trials` multinomial trials per dataset.
#[allow(clippy::too_many_arguments)]
pub fn g1_g2_power_study(
    alpha0: f64,
    q: [f64; 3],
    geometry: &TrineGeometry,
    data_family: ExpansionKind,
    gamma_grid: &[f64],
    n_trials: u64,
    n_reps: usize,
    grid: &DiskGrid,
    cfg: &McConfig,
) -> Result<Vec<PowerCurve>> {
    let stats = FamilyStatistics::new(alpha0, q, geometry, grid)?;
    let generator = ExpansionFamily::of_kind(data_family, alpha0, q)?;
    let priors: Vec<ConstrainedDirichlet> = gamma_grid
        .iter()
        .map(|g| ConstrainedDirichlet::new(&generator.dirichlet_params(*g)?, *geometry))
        .collect::<Result<_>>()?;
    let refs = stats.references(n_trials, cfg)?;
    let tails = [stats.g1.conflict_tail(), stats.g2.conflict_tail()];
    power_study(&["g1_check", "g2_check"], gamma_grid, n_reps, cfg, |gamma, s| {
        let i = gamma_grid.iter().position(|g| *g == gamma).expect("gamma from grid");
        let y = draw_counts(&priors[i], n_trials, s)?;
        let v = stats.evaluate(&y);
        Ok(vec![refs[0].p_value(v[0], tails[0]), refs[1].p_value(v[1], tails[1])])
    })
}

/// γ = i/20, i = 0..=20.
pub fn g1_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

/// γ = i/60, i = 0..=20.
pub fn g2_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 60.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const Q: [f64; 3] = [1.0 / 3.0; 3];

    #[test]
    fn family_parameters() {
        let g1 = ExpansionFamily::g1(30.0, Q).unwrap();
        assert_eq!(g1.dirichlet_params(0.0).unwrap(), [10.0; 3]);
        assert_eq!(g1.dirichlet_params(1.0).unwrap(), [0.5; 3]);
        assert!(g1.dirichlet_params(1.5).is_err());
        let g2 = ExpansionFamily::g2(30.0, Q).unwrap();
        let p = g2.dirichlet_params(1.0 / 3.0).unwrap();
        assert!((p[0] - 20.0).abs() < 1e-12 && (p[1] - 5.0).abs() < 1e-12);
        assert!(g2.dirichlet_params(2.0 / 3.0).is_err());
        assert!(ExpansionFamily::g1(30.0, [0.5, 0.5, 0.1]).is_err());
        assert_eq!(g1_grid().len(), 21);
        assert!((g2_grid()[20] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn jeffreys_prior_gives_zero_g1_score() {
        let cfg = McConfig::new(500, 1);
        let s = score_g1(&[4, 9, 2], 1.5, Q, &TrineGeometry::ideal(), &cfg).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn g1_score_drops_for_extreme_counts() {
        let cfg = McConfig::new(10_000, 3);
        let g = TrineGeometry::ideal();
        let extreme = score_g1(&[40, 5, 5], 30.0, Q, &g, &cfg).unwrap();
        let central = score_g1(&[17, 17, 16], 30.0, Q, &g, &cfg).unwrap();
        assert!(extreme < central);
    }

    #[test]
    fn g2_score_orders_and_symmetries() {
        let cfg = McConfig::new(10_000, 4);
        let g = TrineGeometry::ideal();
        let a = score_g2(&[40, 5, 5], 30.0, Q, &g, &cfg).unwrap();
        let b = score_g2(&[5, 40, 5], 30.0, Q, &g, &cfg).unwrap();
        assert!(a > b);
        let grid = LogThetaGrid::new(g, &DiskGrid::default());
        let f = ExpansionFamily::g2(30.0, Q).unwrap();
        let s1 = f.statistic(&grid.posterior_mean_log_theta(&[8, 3, 11], &[10.0; 3]));
        let s2 = f.statistic(&grid.posterior_mean_log_theta(&[8, 11, 3], &[10.0; 3]));
        assert!((s1 - s2).abs() < 1e-12);
        let sym = f.statistic(&grid.posterior_mean_log_theta(&[6, 6, 6], &[10.0; 3]));
        assert!(sym.abs() < 1e-12);
    }

    #[test]
    fn fisher_identity_on_fixed_support() {
        // score = Σ ∇_k (E_post − E_prior) log θ_k, against a finite difference
        // of the quadrature log marginal
        let geom = TrineGeometry::from_cos_sq(0.3).unwrap();
        let grid = LogThetaGrid::new(geom, &DiskGrid::default());
        let y = [3, 1, 2];
        for (f, g0) in [
            (ExpansionFamily::g1(30.0, Q).unwrap(), 0.2),
            (ExpansionFamily::g2(30.0, Q).unwrap(), 0.1),
        ] {
            let d = f.dirichlet_params(g0).unwrap();
            let grad = f.log_prior_gradient();
            let post = grid.posterior_mean_log_theta(&y, &d);
            let prior = grid.mean_log_theta(&[d[0] - 1.0, d[1] - 1.0, d[2] - 1.0]);
            // the g1 gradient is γ-free; the g2 gradient is too
            let score: f64 = (0..3).map(|k| grad[k] * (post[k] - prior[k])).sum();
            let h = 1e-5;
            let fd = (log_marginal_quadrature(&f, &y, g0 + h, &grid).unwrap()
                - log_marginal_quadrature(&f, &y, g0 - h, &grid).unwrap())
                / (2.0 * h);
            assert!(((fd - score) / score).abs() < 1e-6, "{}: {fd} vs {score}", f.label());
        }
    }
}
