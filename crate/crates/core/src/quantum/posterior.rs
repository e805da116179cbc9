//! Posterior log-moments E(log θ_k | y) under a Dirichlet prior truncated
//! to Θ_γ, by Monte Carlo or by quadrature over the disk.

use serde::{Deserialize, Serialize};

use crate::engine::{McConfig, POSTERIOR_STREAM};
use crate::error::{Error, Result};
use crate::quadrature::DiskGrid;
use crate::quantum::geometry::TrineGeometry;
use crate::quantum::sampling::ConstrainedDirichlet;
use crate::rng::SeededStream;
use crate::special::psi;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogThetaMoments {
    pub mean: [f64; 3],
    pub std_error: [f64; 3],
    pub n_draws: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PosteriorMethod {
    MonteCarlo { n_draws: usize },
    Quadrature { n_radial: usize, n_angular: usize },
}

impl Default for PosteriorMethod {
    fn default() -> Self {
        PosteriorMethod::Quadrature {
            n_radial: DiskGrid::DEFAULT_RADIAL,
            n_angular: DiskGrid::DEFAULT_ANGULAR,
        }
    }
}

fn posterior_params(y: &[u64; 3], alpha: &[f64; 3]) -> [f64; 3] {
    [y[0] as f64 + alpha[0], y[1] as f64 + alpha[1], y[2] as f64 + alpha[2]]
}

/// Monte-Carlo E(log θ_k | y) from `cfg.n_draws` accepted draws on the
/// posterior stream of `cfg.base_seed`.
pub fn posterior_mean_log_theta(
    y: &[u64; 3],
    alpha: &[f64; 3],
    geometry: &TrineGeometry,
    cfg: &McConfig,
) -> Result<LogThetaMoments> {
    let mut s = SeededStream::new(cfg.base_seed, POSTERIOR_STREAM);
    let d = ConstrainedDirichlet::new(&posterior_params(y, alpha), *geometry)?;
    mc_moments(&d, cfg.n_draws, &mut s)
}

/// Monte-Carlo log-moments of draws from `d`.
pub fn mc_moments(d: &ConstrainedDirichlet, n_draws: usize, rng: &mut SeededStream) -> Result<LogThetaMoments> {
    if n_draws < 2 {
        return Err(Error::domain("posterior_mean_log_theta", "need at least two draws"));
    }
    let mut draws = vec![[0.0; 3]; n_draws];
    d.sample_into(rng, &mut draws)?;
    let n = n_draws as f64;
    let mut sum = [0.0; 3];
    let mut sum_sq = [0.0; 3];
    for t in &draws {
        for k in 0..3 {
            let l = t[k].ln();
            sum[k] += l;
            sum_sq[k] += l * l;
        }
    }
    let mut mean = [0.0; 3];
    let mut std_error = [0.0; 3];
    for k in 0..3 {
        mean[k] = sum[k] / n;
        let var = (sum_sq[k] - n * mean[k] * mean[k]) / (n - 1.0);
        std_error[k] = (var.max(0.0) / n).sqrt();
    }
    if mean.iter().any(|m| !m.is_finite()) {
        return Err(Error::Numerical("posterior draw on the simplex boundary".into()));
    }
    Ok(LogThetaMoments {
        mean,
        std_error,
        n_draws,
    })
}

/// E(log θ_k) = ψ(α_k) − ψ(Σα) for an untruncated Dirichlet.
pub fn dirichlet_mean_log_theta(params: &[f64; 3]) -> [f64; 3] {
    let total = psi(params.iter().sum());
    [psi(params[0]) - total, psi(params[1]) - total, psi(params[2]) - total]
}

/// log θ_k tabulated on a disk grid for one geometry. Grid nodes are
/// interior, so every entry is finite.
#[derive(Clone, Debug)]
pub struct LogThetaGrid {
    geometry: TrineGeometry,
    log_w: Vec<f64>,
    log_theta: [Vec<f64>; 3],
}

impl LogThetaGrid {
    pub fn new(geometry: TrineGeometry, grid: &DiskGrid) -> Self {
        let m = grid.len();
        let mut log_theta = [Vec::with_capacity(m), Vec::with_capacity(m), Vec::with_capacity(m)];
        for i in 0..m {
            let t = geometry.theta(grid.s1()[i], grid.s2()[i]);
            for k in 0..3 {
                log_theta[k].push(t[k].ln());
            }
        }
        Self {
            geometry,
            log_w: grid.log_weights().to_vec(),
            log_theta,
        }
    }

    pub fn geometry(&self) -> TrineGeometry {
        self.geometry
    }

    fn log_integrand(&self, exponents: &[f64; 3], out: &mut Vec<f64>) {
        out.clear();
        let [l1, l2, l3] = &self.log_theta;
        out.extend(
            self.log_w
                .iter()
                .zip(l1.iter().zip(l2.iter().zip(l3)))
                .map(|(w, (a, (b, c)))| w + exponents[0] * a + exponents[1] * b + exponents[2] * c),
        );
    }

    /// log ∫_disk Π θ_k^{e_k} r dr dφ.
    pub fn log_integral(&self, exponents: &[f64; 3]) -> f64 {
        let mut e = Vec::with_capacity(self.log_w.len());
        self.log_integrand(exponents, &mut e);
        crate::quadrature::log_sum_exp(&e)
    }

    /// Mean of log θ_k under the density ∝ Π θ_k^{e_k} on Θ_γ.
    pub fn mean_log_theta(&self, exponents: &[f64; 3]) -> [f64; 3] {
        let mut e = Vec::with_capacity(self.log_w.len());
        self.log_integrand(exponents, &mut e);
        let m = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        let mut acc = [0.0; 3];
        for (i, v) in e.iter().enumerate() {
            let w = (v - m).exp();
            z += w;
            for k in 0..3 {
                acc[k] += w * self.log_theta[k][i];
            }
        }
        [acc[0] / z, acc[1] / z, acc[2] / z]
    }

    /// Posterior E(log θ_k | y) for a Dirichlet(α) prior truncated to Θ_γ.
    pub fn posterior_mean_log_theta(&self, y: &[u64; 3], alpha: &[f64; 3]) -> [f64; 3] {
        let p = posterior_params(y, alpha);
        self.mean_log_theta(&[p[0] - 1.0, p[1] - 1.0, p[2] - 1.0])
    }
}

/// E(log θ_k | y) by the chosen method. Monte-Carlo draws come from `rng`.
pub fn mean_log_theta_with(
    method: PosteriorMethod,
    y: &[u64; 3],
    alpha: &[f64; 3],
    geometry: &TrineGeometry,
    rng: &mut SeededStream,
) -> Result<LogThetaMoments> {
    match method {
        PosteriorMethod::MonteCarlo { n_draws } => {
            let d = ConstrainedDirichlet::new(&posterior_params(y, alpha), *geometry)?;
            mc_moments(&d, n_draws, rng)
        }
        PosteriorMethod::Quadrature { n_radial, n_angular } => {
            let g = LogThetaGrid::new(*geometry, &DiskGrid::new(n_radial, n_angular)?);
            Ok(LogThetaMoments {
                mean: g.posterior_mean_log_theta(y, alpha),
                std_error: [0.0; 3],
                n_draws: 0,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_mc_matches_digamma_identity() {
        let y = [7, 2, 4];
        let alpha = [1.5, 2.0, 0.8];
        let d = ConstrainedDirichlet::unconstrained(&posterior_params(&y, &alpha)).unwrap();
        let mut s = SeededStream::new(21, 0);
        let m = mc_moments(&d, 20_000, &mut s).unwrap();
        let exact = dirichlet_mean_log_theta(&posterior_params(&y, &alpha));
        for k in 0..3 {
            assert!((m.mean[k] - exact[k]).abs() < 3.0 * m.std_error[k] + 1e-12, "k={k}");
        }
    }

    #[test]
    fn symmetric_inputs_give_equal_components() {
        // components are negatively correlated, so use the paired-difference SE
        let d = ConstrainedDirichlet::new(&[15.0; 3], TrineGeometry::ideal()).unwrap();
        let mut draws = vec![[0.0; 3]; 10_000];
        d.sample_into(&mut SeededStream::new(3, POSTERIOR_STREAM), &mut draws).unwrap();
        let n = draws.len() as f64;
        for k in 1..3 {
            let diffs: Vec<f64> = draws.iter().map(|t| t[0].ln() - t[k].ln()).collect();
            let mean = diffs.iter().sum::<f64>() / n;
            let var = diffs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            assert!(mean.abs() < 3.0 * (var / n).sqrt(), "k={k} {mean} {}", (var / n).sqrt());
        }
        let q = LogThetaGrid::new(TrineGeometry::ideal(), &DiskGrid::default()).posterior_mean_log_theta(&[5, 5, 5], &[10.0; 3]);
        assert!((q[1] - q[2]).abs() < 1e-12);
    }

    #[test]
    fn quadrature_agrees_with_monte_carlo() {
        let g = TrineGeometry::from_cos_sq(0.25).unwrap();
        let y = [12, 3, 9];
        let alpha = [2.0, 1.0, 1.5];
        let q = LogThetaGrid::new(g, &DiskGrid::default()).posterior_mean_log_theta(&y, &alpha);
        let cfg = McConfig::new(40_000, 2);
        let m = posterior_mean_log_theta(&y, &alpha, &g, &cfg).unwrap();
        for k in 0..3 {
            assert!((m.mean[k] - q[k]).abs() < 4.0 * m.std_error[k], "k={k}: {} vs {}", m.mean[k], q[k]);
        }
    }

    #[test]
    fn no_data_gives_prior_moments() {
        let grid = LogThetaGrid::new(TrineGeometry::ideal(), &DiskGrid::default());
        let a = grid.posterior_mean_log_theta(&[0, 0, 0], &[3.0, 2.0, 2.0]);
        let b = grid.mean_log_theta(&[2.0, 1.0, 1.0]);
        assert_eq!(a, b);
    }
}
