//! Composite Gauss rules on 1D grids, with Gauss–Jacobi cells where a weight vanishes.

use nalgebra::{DMatrix, SymmetricEigen};

use super::fd::{point_row, StencilRow};
use super::Field1D;

/// Gauss rule for `∫_0^1 x^gamma f(x) dx` with `n` points (`gamma > -1`).
pub fn gauss_jacobi01(n: usize, gamma: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(gamma > -1.0, "Jacobi exponent must exceed -1");
    // Monic Jacobi recurrence for weight (1+t)^gamma on [-1, 1] (a = 0, b = gamma).
    let a = 0.0f64;
    let b = gamma;
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        alpha[k] = if k == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
        if k >= 1 {
            beta[k] = if k == 1 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b).powi(2) * (3.0 + a + b))
            } else {
                4.0 * kf * (kf + a) * (kf + b) * (kf + a + b) / (s * s * (s + 1.0) * (s - 1.0))
            };
        }
    }
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        jm[(k, k)] = alpha[k];
        if k + 1 < n {
            let off = beta[k + 1].sqrt();
            jm[(k, k + 1)] = off;
            jm[(k + 1, k)] = off;
        }
    }
    let mu0 = 2f64.powf(b + 1.0) / (b + 1.0);
    let eig = SymmetricEigen::new(jm);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    // Map t ∈ [-1,1] to x = (1+t)/2: ∫_0^1 x^γ f dx = 2^{-γ-1} ∫ (1+t)^γ f dt.
    let scale = 2f64.powf(-gamma - 1.0);
    let xs = pairs.iter().map(|p| 0.5 * (1.0 + p.0)).collect();
    let ws = pairs.iter().map(|p| p.1 * scale).collect();
    (xs, ws)
}

/// Gauss–Legendre rule on `[0, 1]`.
pub fn gauss_legendre01(n: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_jacobi01(n, 0.0)
}

/// Points and weights on a grid, with the weight function already folded in.
#[derive(Clone, Debug)]
pub struct QuadRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    rows: Vec<StencilRow>,
}

/// Points per cell.
pub const CELL_POINTS: usize = 5;
/// Lagrange nodes used to carry nodal data to quadrature points.
pub const INTERP_LEN: usize = 8;

impl QuadRule {
    /// Rule for `∫ w(x)^gamma g(x) dx` over the hull of the weight's grid.
    ///
    /// Where `w` vanishes at an endpoint, the end cell uses a Gauss–Jacobi rule in the
    /// distance to that endpoint and only the smooth quotient `w/dist` is sampled.
    pub fn weighted(weight: &Field1D, gamma: f64) -> QuadRule {
        let nodes = weight.grid().nodes();
        let vals = weight.values();
        let n = nodes.len();
        let wmax = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let zero_tol = 1e-12 * wmax.max(f64::MIN_POSITIVE);
        let left_zero = vals[0].abs() <= zero_tol;
        let right_zero = vals[n - 1].abs() <= zero_tol;
        let (gl_x, gl_w) = gauss_legendre01(CELL_POINTS);
        let jac = if gamma != 0.0 && (left_zero || right_zero) {
            Some(gauss_jacobi01(CELL_POINTS, gamma))
        } else {
            None
        };
        let mut points = Vec::with_capacity((n - 1) * CELL_POINTS);
        let mut weights = Vec::with_capacity((n - 1) * CELL_POINTS);
        for c in 0..n - 1 {
            let (a, b) = (nodes[c], nodes[c + 1]);
            let h = b - a;
            if c == 0 && left_zero && jac.is_some() {
                let (jx, jw) = jac.as_ref().unwrap();
                for (t, wt) in jx.iter().zip(jw) {
                    let x = a + h * t;
                    let q = weight.eval(x) / (x - a);
                    points.push(x);
                    weights.push(wt * h.powf(gamma + 1.0) * q.abs().powf(gamma));
                }
            } else if c == n - 2 && right_zero && jac.is_some() {
                let (jx, jw) = jac.as_ref().unwrap();
                for (t, wt) in jx.iter().zip(jw) {
                    let x = b - h * t;
                    let q = weight.eval(x) / (b - x);
                    points.push(x);
                    weights.push(wt * h.powf(gamma + 1.0) * q.abs().powf(gamma));
                }
            } else {
                for (t, wt) in gl_x.iter().zip(&gl_w) {
                    let x = a + h * t;
                    let wv = if gamma == 0.0 { 1.0 } else { weight.eval(x).max(0.0).powf(gamma) };
                    points.push(x);
                    weights.push(wt * h * wv);
                }
            }
        }
        let rows = points.iter().map(|&x| point_row(nodes, x, 0, INTERP_LEN)).collect();
        QuadRule { points, weights, rows }
    }

    /// Plain Gauss–Legendre rule on the grid of `f`.
    pub fn plain(f: &Field1D) -> QuadRule {
        QuadRule::weighted(f, 0.0)
    }

    /// Nodal values carried to the quadrature points.
    pub fn sample(&self, nodal: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.apply(nodal)).collect()
    }

    /// `Σ w_q g(x_q)` for values already at the quadrature points.
    pub fn sum(&self, at_points: &[f64]) -> f64 {
        self.weights.iter().zip(at_points).map(|(w, g)| w * g).sum()
    }

    /// `∫ w^γ · f²` from nodal values of `f`.
    pub fn norm2(&self, nodal: &[f64]) -> f64 {
        let s = self.sample(nodal);
        self.weights.iter().zip(&s).map(|(w, g)| w * g * g).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_rule_integrates_weighted_polynomials() {
        for &g in &[-0.5, 0.0, 0.3, 1.0, 2.5] {
            let (x, w) = gauss_jacobi01(5, g);
            for p in 0..10 {
                let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(p)).sum();
                let exact = 1.0 / (p as f64 + g + 1.0);
                assert!((approx - exact).abs() < 1e-13, "g={g} p={p}");
            }
        }
    }
}
