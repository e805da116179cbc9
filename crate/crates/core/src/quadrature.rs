//! Gauss–Legendre rules and the tensor polar grid over the unit disk.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// n-point Gauss–Legendre rule on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are found by Newton iteration on P_n from the Chebyshev-like
    /// initial guesses; weights are 2 / ((1 − x²) P_n'(x)²).
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("gauss_legendre", "need at least one node"));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_and_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped affinely onto [a, b].
    pub fn on_interval(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let x = self.nodes.iter().map(|t| mid + half * t).collect();
        let w = self.weights.iter().map(|w| half * w).collect();
        (x, w)
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * f(mid + half * t))
            .sum::<f64>()
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

/// Tensor Gauss–Legendre grid in polar coordinates over the unit disk,
/// with the Jacobian r folded into the (log) weights.
#[derive(Clone, Debug)]
pub struct DiskGrid {
    n_radial: usize,
    n_angular: usize,
    s1: Vec<f64>,
    s2: Vec<f64>,
    log_w: Vec<f64>,
}

impl DiskGrid {
    pub const DEFAULT_RADIAL: usize = 64;
    pub const DEFAULT_ANGULAR: usize = 128;

    pub fn new(n_radial: usize, n_angular: usize) -> Result<Self> {
        let gr = GaussLegendre::new(n_radial)?;
        let ga = GaussLegendre::new(n_angular)?;
        let (r, wr) = gr.on_interval(0.0, 1.0);
        let (phi, wp) = ga.on_interval(0.0, 2.0 * PI);
        let m = n_radial * n_angular;
        let mut s1 = Vec::with_capacity(m);
        let mut s2 = Vec::with_capacity(m);
        let mut log_w = Vec::with_capacity(m);
        for (ri, wri) in r.iter().zip(&wr) {
            for (pj, wpj) in phi.iter().zip(&wp) {
                s1.push(ri * pj.cos());
                s2.push(ri * pj.sin());
                log_w.push((wri * wpj * ri).ln());
            }
        }
        Ok(Self {
            n_radial,
            n_angular,
            s1,
            s2,
            log_w,
        })
    }

    pub fn len(&self) -> usize {
        self.s1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s1.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_radial, self.n_angular)
    }

    pub fn s1(&self) -> &[f64] {
        &self.s1
    }

    pub fn s2(&self) -> &[f64] {
        &self.s2
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_w
    }

    /// ∫∫_disk f(s1, s2) ds1 ds2.
    pub fn integrate<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        (0..self.len())
            .map(|i| self.log_w[i].exp() * f(self.s1[i], self.s2[i]))
            .sum()
    }
}

impl Default for DiskGrid {
    fn default() -> Self {
        Self::new(Self::DEFAULT_RADIAL, Self::DEFAULT_ANGULAR).expect("default grid sizes are valid")
    }
}

/// log Σ exp(v_i).
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_rules_match_closed_forms() {
        let g = GaussLegendre::new(2).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert!((g.nodes()[0] + r).abs() < 1e-15 && (g.nodes()[1] - r).abs() < 1e-15);
        assert!((g.weights()[0] - 1.0).abs() < 1e-15);
        let g = GaussLegendre::new(3).unwrap();
        assert_eq!(g.nodes()[1], 0.0);
        assert!((g.weights()[1] - 8.0 / 9.0).abs() < 1e-15);
        assert!((g.nodes()[2] - 0.6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_two_and_polynomials_are_exact() {
        for n in [1, 5, 16, 64, 128, 512] {
            let g = GaussLegendre::new(n).unwrap();
            let s: f64 = g.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}: {s}");
            // exact up to degree 2n-1
            let deg = (2 * n - 1).min(40) as i32;
            let got = g.integrate(|x| x.powi(deg - deg % 2), -1.0, 1.0);
            let want = 2.0 / ((deg - deg % 2) as f64 + 1.0);
            assert!((got - want).abs() < 1e-13, "n={n}");
        }
        assert!(GaussLegendre::new(0).is_err());
    }

    #[test]
    fn disk_grid_area_and_moments() {
        let g = DiskGrid::default();
        assert_eq!(g.len(), 64 * 128);
        assert!((g.integrate(|_, _| 1.0) - PI).abs() < 1e-12);
        // ∫ s1² over the disk = π/4
        assert!((g.integrate(|x, _| x * x) - PI / 4.0).abs() < 1e-12);
        assert!(g.integrate(|x, y| x * y).abs() < 1e-13);
    }

    #[test]
    fn log_sum_exp_is_stable() {
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }
}
