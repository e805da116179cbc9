//! Symmetrically distorted trine: the affine map from the unit disk of
//! state parameters (s1, s2) onto the set Θ_γ of attainable outcome
//! probabilities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on the unit-disk and Θ_γ boundaries for rounding.
pub const BOUNDARY_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrineGeometry {
    gamma: f64,
}

impl TrineGeometry {
    /// Geometry at distortion angle `gamma` (radians), 0 < γ < π/2.
    pub fn new(gamma: f64) -> Result<Self> {
        let c2 = gamma.cos().powi(2);
        if !(gamma > 0.0 && gamma < std::f64::consts::FRAC_PI_2) || !(c2 > 0.0 && c2 < 1.0) {
            return Err(Error::domain("trine_geometry", format!("gamma must lie in (0, pi/2), got {gamma}")));
        }
        Ok(Self { gamma })
    }

    pub fn from_cos_sq(cos_sq: f64) -> Result<Self> {
        if !(cos_sq > 0.0 && cos_sq < 1.0) {
            return Err(Error::domain("trine_geometry", format!("cos^2 gamma must lie in (0, 1), got {cos_sq}")));
        }
        Self::new(cos_sq.sqrt().acos())
    }

    /// The undistorted trine, cos²γ = 1/3.
    pub fn ideal() -> Self {
        Self {
            gamma: (1.0f64 / 3.0).sqrt().acos(),
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn cos_sq(&self) -> f64 {
        self.gamma.cos().powi(2)
    }

    /// θ1 = ½ sin²γ (1 + s1), θ2,3 = ¼ [1 + cos²γ − s1 sin²γ ± 2 s2 cos γ].
    pub fn theta(&self, s1: f64, s2: f64) -> [f64; 3] {
        let (sn, c) = self.gamma.sin_cos();
        let s = sn * sn;
        let base = 0.25 * (1.0 + c * c - s1 * s);
        let split = 0.5 * s2 * c;
        [0.5 * s * (1.0 + s1), base + split, base - split]
    }

    pub fn theta_from_disk(&self, s1: f64, s2: f64) -> Result<[f64; 3]> {
        if !(s1 * s1 + s2 * s2 <= 1.0 + BOUNDARY_SLACK) {
            return Err(Error::domain("theta_from_disk", format!("({s1}, {s2}) lies outside the unit disk")));
        }
        Ok(self.theta(s1, s2))
    }

    /// Inverse map: s1 = 2θ1/sin²γ − 1, s2 = (θ2 − θ3)/cos γ.
    pub fn disk_from_theta(&self, theta: &[f64; 3]) -> (f64, f64) {
        let (sn, c) = self.gamma.sin_cos();
        (2.0 * theta[0] / (sn * sn) - 1.0, (theta[1] - theta[2]) / c)
    }

    /// θ ∈ Θ_γ: (2θ1/sin²γ − 1)² + ((θ2 − θ3)/cos γ)² ≤ 1.
    pub fn constraint_satisfied(&self, theta: &[f64; 3]) -> bool {
        let (s1, s2) = self.disk_from_theta(theta);
        s1 * s1 + s2 * s2 <= 1.0 + BOUNDARY_SLACK
    }
}

pub fn theta_from_disk(geom: &TrineGeometry, s1: f64, s2: f64) -> Result<[f64; 3]> {
    geom.theta_from_disk(s1, s2)
}

pub fn constraint_satisfied(geom: &TrineGeometry, theta: &[f64; 3]) -> bool {
    geom.constraint_satisfied(theta)
}

/// The symmetric form of the ideal-trine constraint, Σθ² ≤ ½.
pub fn ideal_trine_sum_of_squares(theta: &[f64; 3]) -> bool {
    theta.iter().map(|t| t * t).sum::<f64>() <= 0.5
}

/// Clamp tiny negative components from rounding at the boundary and
/// renormalize, so the vector can feed a multinomial sampler.
pub fn clean_probabilities(theta: &mut [f64; 3]) {
    for t in theta.iter_mut() {
        if *t < 0.0 {
            *t = 0.0;
        }
    }
    let s: f64 = theta.iter().sum();
    for t in theta.iter_mut() {
        *t /= s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ideal_trine_points() {
        let g = TrineGeometry::ideal();
        assert!((g.cos_sq() - 1.0 / 3.0).abs() < 1e-15);
        let c = g.theta_from_disk(0.0, 0.0).unwrap();
        for t in c {
            assert!((t - 1.0 / 3.0).abs() < 1e-15);
        }
        let e = g.theta_from_disk(1.0, 0.0).unwrap();
        for (t, w) in e.iter().zip([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0]) {
            assert!((t - w).abs() < 1e-15);
        }
        assert!(g.theta_from_disk(0.9, 0.5).is_err());
    }

    #[test]
    fn constraint_examples() {
        let g = TrineGeometry::ideal();
        assert!(g.constraint_satisfied(&[1.0 / 3.0; 3]));
        assert!(!g.constraint_satisfied(&[1.0, 0.0, 0.0]));
        assert!(!ideal_trine_sum_of_squares(&[1.0, 0.0, 0.0]));
    }

    #[test]
    fn geometry_validation() {
        assert!(TrineGeometry::from_cos_sq(0.0).is_err());
        assert!(TrineGeometry::from_cos_sq(1.0).is_err());
        assert!(TrineGeometry::new(2.0).is_err());
        let g = TrineGeometry::from_cos_sq(0.1327).unwrap();
        assert!((g.cos_sq() - 0.1327).abs() < 1e-14);
        assert!((g.gamma() - 1.197_94).abs() < 1e-4);
    }

    #[test]
    fn disk_touches_every_simplex_edge() {
        // the image of the unit circle is tangent to the three edges
        for c2 in [0.1, 1.0 / 3.0, 0.7] {
            let g = TrineGeometry::from_cos_sq(c2).unwrap();
            let min_t1 = g.theta(-1.0, 0.0)[0];
            assert!(min_t1.abs() < 1e-15);
            let (sn, c) = g.gamma().sin_cos();
            let norm = (sn.powi(4) + 4.0 * c * c).sqrt();
            let t = g.theta(sn * sn / norm, -2.0 * c / norm);
            assert!(t[1].abs() < 1e-14, "{t:?}");
        }
    }

    proptest! {
        #[test]
        fn map_sums_to_one_and_round_trips(
            r in 0.0f64..0.999_999,
            phi in 0.0f64..std::f64::consts::TAU,
            c2 in 0.02f64..0.98,
        ) {
            let g = TrineGeometry::from_cos_sq(c2).unwrap();
            let (s1, s2) = (r * phi.cos(), r * phi.sin());
            let t = g.theta_from_disk(s1, s2).unwrap();
            prop_assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            prop_assert!(g.constraint_satisfied(&t));
            let (b1, b2) = g.disk_from_theta(&t);
            prop_assert!((b1 - s1).abs() < 1e-12 && (b2 - s2).abs() < 1e-12);
        }
    }
}
