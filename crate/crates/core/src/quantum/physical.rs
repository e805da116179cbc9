//! Score check for the trine distortion angle itself. The support Θ_γ moves
//! with γ, so the score is a finite difference of disk-quadrature marginals.

use serde::{Deserialize, Serialize};

use crate::engine::{
    power_study, reference_distribution, CheckResult, McConfig, PowerCurve, PriorExpansionSpec, ReferenceDistribution, Tail,
    REFERENCE_STREAM,
};
use crate::error::{Error, Result};
use crate::quadrature::DiskGrid;
use crate::quantum::geometry::{clean_probabilities, TrineGeometry};
use crate::quantum::posterior::LogThetaGrid;
use crate::quantum::sampling::ConstrainedDirichlet;
use crate::rng::{multinomial_into, SeededStream};

/// log H1 = log ∫ Π θ_k^{n_k+α−1} r dr dφ and log H2, its no-data analogue.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HIntegrals {
    pub log_h1: f64,
    pub log_h2: f64,
    /// α < 1 with a zero count: the integrand is singular on the boundary.
    pub reduced_accuracy: bool,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::domain("h_integrals", format!("alpha must be positive, got {alpha}")));
    }
    Ok(())
}

fn exponents(y: &[u64; 3], alpha: f64) -> [f64; 3] {
    [y[0] as f64 + alpha - 1.0, y[1] as f64 + alpha - 1.0, y[2] as f64 + alpha - 1.0]
}

pub fn h_integrals(y: &[u64; 3], alpha: f64, geometry: &TrineGeometry, grid: &DiskGrid) -> Result<HIntegrals> {
    check_alpha(alpha)?;
    let g = LogThetaGrid::new(*geometry, grid);
    Ok(h_integrals_on(&g, y, alpha))
}

fn h_integrals_on(g: &LogThetaGrid, y: &[u64; 3], alpha: f64) -> HIntegrals {
    let log_h1 = g.log_integral(&exponents(y, alpha));
    let log_h2 = g.log_integral(&exponents(&[0; 3], alpha));
    HIntegrals {
        log_h1,
        log_h2,
        reduced_accuracy: alpha < 1.0 && y.contains(&0),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalOptions {
    /// Central-difference step in γ (radians).
    pub h: f64,
    pub n_radial: usize,
    pub n_angular: usize,
}

impl Default for PhysicalOptions {
    fn default() -> Self {
        Self {
            h: 1e-3,
            n_radial: DiskGrid::DEFAULT_RADIAL,
            n_angular: DiskGrid::DEFAULT_ANGULAR,
        }
    }
}

impl PhysicalOptions {
    pub fn with_step(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn with_grid(mut self, n_radial: usize, n_angular: usize) -> Self {
        self.n_radial = n_radial;
        self.n_angular = n_angular;
        self
    }
}

/// d/dγ log(H1/H2) at γ0 with log θ tables and log H2 precomputed at γ0 ± h.
#[derive(Clone, Debug)]
pub struct PhysicalScorer {
    geometry: TrineGeometry,
    alpha: f64,
    h: f64,
    plus: LogThetaGrid,
    minus: LogThetaGrid,
    log_h2_plus: f64,
    log_h2_minus: f64,
}

impl PhysicalScorer {
    pub fn new(alpha: f64, geometry: &TrineGeometry, opts: &PhysicalOptions) -> Result<Self> {
        check_alpha(alpha)?;
        let g0 = geometry.gamma();
        if !(opts.h > 0.0) {
            return Err(Error::domain("physical_score", format!("step must be positive, got {}", opts.h)));
        }
        let gp = TrineGeometry::new(g0 + opts.h)?;
        let gm = TrineGeometry::new(g0 - opts.h)?;
        let grid = DiskGrid::new(opts.n_radial, opts.n_angular)?;
        let plus = LogThetaGrid::new(gp, &grid);
        let minus = LogThetaGrid::new(gm, &grid);
        let e0 = exponents(&[0; 3], alpha);
        Ok(Self {
            geometry: *geometry,
            alpha,
            h: opts.h,
            log_h2_plus: plus.log_integral(&e0),
            log_h2_minus: minus.log_integral(&e0),
            plus,
            minus,
        })
    }

    pub fn geometry(&self) -> TrineGeometry {
        self.geometry
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn score(&self, y: &[u64; 3]) -> f64 {
        let e = exponents(y, self.alpha);
        let up = self.plus.log_integral(&e) - self.log_h2_plus;
        let down = self.minus.log_integral(&e) - self.log_h2_minus;
        (up - down) / (2.0 * self.h)
    }

    pub fn expansion(&self) -> PriorExpansionSpec {
        PriorExpansionSpec::new("physical", self.geometry.gamma())
            .with("alpha", self.alpha)
            .with("cos_sq_gamma0", self.geometry.cos_sq())
            .with("h", self.h)
    }
}

/// Score at γ0 with the default step and grid.
pub fn physical_score(y: &[u64; 3], alpha: f64, geometry: &TrineGeometry) -> Result<f64> {
    Ok(PhysicalScorer::new(alpha, geometry, &PhysicalOptions::default())?.score(y))
}

fn predictive_counts(prior: &ConstrainedDirichlet, n_trials: u64, s: &mut SeededStream) -> Result<[u64; 3]> {
    let mut theta = prior.sample_one(s)?;
    clean_probabilities(&mut theta);
    let mut y = [0u64; 3];
    multinomial_into(s, n_trials, &theta, &mut y)?;
    Ok(y)
}

/// Reference distribution of the score under the prior predictive at γ0.
pub fn physical_reference(scorer: &PhysicalScorer, n_trials: u64, cfg: &McConfig) -> Result<ReferenceDistribution> {
    let a = scorer.alpha();
    let prior = ConstrainedDirichlet::new(&[a, a, a], scorer.geometry())?;
    reference_distribution(cfg, REFERENCE_STREAM, |s| Ok(scorer.score(&predictive_counts(&prior, n_trials, s)?)))
}

/// Check of `y_obs` against a Dirichlet(α, α, α) prior on Θ_γ0. The result
/// carries both one-sided p-values; `p_value` follows `cfg.tail`.
pub fn physical_check(
    y_obs: &[u64; 3],
    alpha: f64,
    geometry: &TrineGeometry,
    opts: &PhysicalOptions,
    cfg: &McConfig,
) -> Result<CheckResult> {
    let scorer = PhysicalScorer::new(alpha, geometry, opts)?;
    let reference = physical_reference(&scorer, y_obs.iter().sum(), cfg)?;
    Ok(reference
        .check_result(scorer.score(y_obs), cfg.tail, cfg.base_seed)
        .with_expansion(scorer.expansion()))
}

/// γ0 + i/20 for i = −8..=8, dropping points outside (0, π/2).
pub fn physical_grid(geometry: &TrineGeometry) -> Vec<f64> {
    (-8..=8)
        .map(|i| geometry.gamma() + i as f64 / 20.0)
        .filter(|g| *g > 0.0 && *g < std::f64::consts::FRAC_PI_2)
        .collect()
}

/// Power of the two one-sided physical checks, each at level `cfg.alpha`,
/// for data from the prior predictive at each γ on `gamma_grid`.
pub fn physical_power_study(
    alpha: f64,
    geometry: &TrineGeometry,
    gamma_grid: &[f64],
    n_trials: u64,
    n_reps: usize,
    opts: &PhysicalOptions,
    cfg: &McConfig,
) -> Result<Vec<PowerCurve>> {
    let scorer = PhysicalScorer::new(alpha, geometry, opts)?;
    let priors: Vec<ConstrainedDirichlet> = gamma_grid
        .iter()
        .map(|g| ConstrainedDirichlet::new(&[alpha; 3], TrineGeometry::new(*g)?))
        .collect::<Result<_>>()?;
    let reference = physical_reference(&scorer, n_trials, cfg)?;
    power_study(&["increasing", "decreasing"], gamma_grid, n_reps, cfg, |gamma, s| {
        let i = gamma_grid.iter().position(|g| *g == gamma).expect("gamma from grid");
        let v = scorer.score(&predictive_counts(&priors[i], n_trials, s)?);
        Ok(vec![reference.p_value(v, Tail::Upper), reference.p_value(v, Tail::Lower)])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn flat_no_data_integrals_equal_disk_area() {
        let grid = DiskGrid::default();
        let h = h_integrals(&[0, 0, 0], 1.0, &TrineGeometry::ideal(), &grid).unwrap();
        assert!((h.log_h1.exp() - PI).abs() < 1e-10);
        assert_eq!(h.log_h1, h.log_h2);
        let h = h_integrals(&[0, 0, 0], 2.5, &TrineGeometry::from_cos_sq(0.2).unwrap(), &grid).unwrap();
        assert_eq!(h.log_h1, h.log_h2);
        assert!(h_integrals(&[0, 2, 0], 0.5, &TrineGeometry::ideal(), &grid).unwrap().reduced_accuracy);
        assert!(h_integrals(&[1, 1, 1], 0.0, &TrineGeometry::ideal(), &grid).is_err());
    }

    #[test]
    fn small_counts_stable_under_refinement() {
        let g = TrineGeometry::ideal();
        let mut prev = h_integrals(&[2, 1, 1], 1.0, &g, &DiskGrid::new(4, 8).unwrap()).unwrap().log_h1;
        let mut n = 8;
        loop {
            let cur = h_integrals(&[2, 1, 1], 1.0, &g, &DiskGrid::new(n, 2 * n).unwrap()).unwrap().log_h1;
            if (cur - prev).abs() < 1e-8 * prev.abs().max(1.0) {
                let d = h_integrals(&[2, 1, 1], 1.0, &g, &DiskGrid::default()).unwrap().log_h1;
                assert!((d - cur).abs() < 1e-8 * cur.abs().max(1.0));
                break;
            }
            prev = cur;
            n *= 2;
            assert!(n <= 256);
        }
    }

    #[test]
    fn empty_data_scores_zero() {
        let s = physical_score(&[0, 0, 0], 1.0, &TrineGeometry::ideal()).unwrap();
        assert!(s.abs() < 1e-9, "{s}");
    }

    #[test]
    fn score_follows_distortion() {
        // a larger γ raises θ1 on average, so many first outcomes push the score up
        let g = TrineGeometry::ideal();
        let hi = physical_score(&[40, 5, 5], 1.0, &g).unwrap();
        let lo = physical_score(&[5, 22, 23], 1.0, &g).unwrap();
        assert!(hi > 0.0 && lo < 0.0, "{hi} {lo}");
    }

    #[test]
    fn grid_stays_in_range() {
        let g = physical_grid(&TrineGeometry::ideal());
        assert_eq!(g.len(), 17);
        assert!(physical_grid(&TrineGeometry::new(0.2).unwrap()).iter().all(|x| *x > 0.0));
    }
}
