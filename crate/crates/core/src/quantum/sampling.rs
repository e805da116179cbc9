//! Dirichlet draws truncated to Θ_γ, by rejection from the unconstrained law.

use rand::Rng;

use crate::error::{Error, Result};
use crate::quantum::geometry::TrineGeometry;
use crate::rng::{Dirichlet, SeededStream};

/// Proposals after which the acceptance-rate guard is evaluated.
pub const PILOT_PROPOSALS: usize = 100_000;
/// Minimum acceptance rate tolerated by the guard.
pub const MIN_ACCEPTANCE: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct ConstrainedDirichlet {
    dirichlet: Dirichlet,
    geometry: Option<TrineGeometry>,
}

impl ConstrainedDirichlet {
    pub fn new(alpha: &[f64; 3], geometry: TrineGeometry) -> Result<Self> {
        Ok(Self {
            dirichlet: Dirichlet::new(alpha)?,
            geometry: Some(geometry),
        })
    }

    /// The plain Dirichlet, for comparisons against the truncated law.
    pub fn unconstrained(alpha: &[f64; 3]) -> Result<Self> {
        Ok(Self {
            dirichlet: Dirichlet::new(alpha)?,
            geometry: None,
        })
    }

    pub fn alpha(&self) -> &[f64] {
        self.dirichlet.alpha()
    }

    pub fn geometry(&self) -> Option<TrineGeometry> {
        self.geometry
    }

    fn accepts(&self, theta: &[f64; 3]) -> bool {
        self.geometry.is_none_or(|g| g.constraint_satisfied(theta))
    }

    /// Fill `out` with accepted draws. Fails once `PILOT_PROPOSALS`
    /// proposals have been made with acceptance below `MIN_ACCEPTANCE`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [[f64; 3]]) -> Result<()> {
        let mut proposed = 0usize;
        let mut accepted = 0usize;
        let mut buf = [0.0; 3];
        while accepted < out.len() {
            self.dirichlet.sample_into(rng, &mut buf);
            proposed += 1;
            if self.accepts(&buf) {
                out[accepted] = buf;
                accepted += 1;
            }
            if proposed >= PILOT_PROPOSALS && (accepted as f64) < MIN_ACCEPTANCE * proposed as f64 {
                return Err(Error::LowAcceptance { accepted, proposed });
            }
        }
        Ok(())
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<[f64; 3]> {
        let mut out = [[0.0; 3]];
        self.sample_into(rng, &mut out)?;
        Ok(out[0])
    }

    /// Fraction of `n` unconstrained proposals that land in Θ_γ.
    pub fn acceptance_rate<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> f64 {
        let mut buf = [0.0; 3];
        let mut hits = 0usize;
        for _ in 0..n {
            self.dirichlet.sample_into(rng, &mut buf);
            if self.accepts(&buf) {
                hits += 1;
            }
        }
        hits as f64 / n as f64
    }
}

pub fn sample_constrained_dirichlet(
    stream: &mut SeededStream,
    alpha: &[f64; 3],
    geometry: TrineGeometry,
    n: usize,
) -> Result<Vec<[f64; 3]>> {
    let d = ConstrainedDirichlet::new(alpha, geometry)?;
    let mut out = vec![[0.0; 3]; n];
    d.sample_into(stream, &mut out)?;
    Ok(out)
}

/// θ uniform on Θ_γ drawn through a uniform point of the disk.
pub fn sample_uniform_on_trine<R: Rng + ?Sized>(rng: &mut R, geometry: &TrineGeometry) -> [f64; 3] {
    let r = rng.random::<f64>().sqrt();
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    geometry.theta(r * phi.cos(), r * phi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn flat_acceptance_matches_area_ratio() {
        let d = ConstrainedDirichlet::new(&[1.0; 3], TrineGeometry::ideal()).unwrap();
        let mut s = SeededStream::new(4, 0);
        let rate = d.acceptance_rate(&mut s, 400_000);
        assert!((rate - PI / (3.0 * 3f64.sqrt())).abs() < 0.005, "{rate}");
    }

    #[test]
    fn concentrated_prior_mostly_accepted() {
        let d = ConstrainedDirichlet::new(&[10.0; 3], TrineGeometry::ideal()).unwrap();
        let mut s = SeededStream::new(4, 1);
        assert!(d.acceptance_rate(&mut s, 50_000) > 0.9);
    }

    #[test]
    fn accepted_draws_satisfy_constraint() {
        let g = TrineGeometry::from_cos_sq(0.2).unwrap();
        let mut s = SeededStream::new(4, 2);
        let draws = sample_constrained_dirichlet(&mut s, &[2.0, 0.5, 1.0], g, 5_000).unwrap();
        assert!(draws.iter().all(|t| g.constraint_satisfied(t)));
    }

    #[test]
    fn guard_trips_on_hopeless_truncation() {
        // mass piled near a vertex, which lies outside Θ_γ
        let d = ConstrainedDirichlet::new(&[2000.0, 1.0, 1.0], TrineGeometry::ideal()).unwrap();
        let mut s = SeededStream::new(4, 3);
        match d.sample_one(&mut s) {
            Err(Error::LowAcceptance { proposed, .. }) => assert_eq!(proposed, PILOT_PROPOSALS),
            other => panic!("expected low-acceptance error, got {other:?}"),
        }
    }
}
