//! Finite-difference and interpolation weights on arbitrary node sets.

/// Fornberg's recursion: weights `c[k][j]` such that
/// `f^{(k)}(z) ≈ Σ_j c[k][j] f(x[j])` for every `k ≤ m`.
pub fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Weights of the single derivative order `k` at `z`.
pub fn derivative_weights(z: f64, x: &[f64], k: usize) -> Vec<f64> {
    fornberg_weights(z, x, k).swap_remove(k)
}

/// Index window of `len` consecutive nodes around position `z`, clamped to `[0, n)`.
pub fn window_around(nodes: &[f64], z: f64, len: usize) -> usize {
    let n = nodes.len();
    let len = len.min(n);
    let i = nodes.partition_point(|&x| x < z);
    let start = i.saturating_sub(len / 2);
    start.min(n - len)
}

/// Interior accuracy of derivative stencils.
pub const P_INTERIOR: usize = 6;
/// Accuracy of stencils that had to be shifted against an endpoint.
pub const P_ONE_SIDED: usize = 4;

/// Stencil `(start, weights)` for the `order`-th derivative at node `i`.
pub fn node_stencil(nodes: &[f64], i: usize, order: usize) -> (usize, Vec<f64>) {
    let n = nodes.len();
    let mut len = order + P_INTERIOR;
    if len % 2 == 0 {
        len += 1;
    }
    let half = len / 2;
    let (start, len) = if i >= half && i + half < n {
        (i - half, len)
    } else {
        let len1 = (order + P_ONE_SIDED).min(n);
        if i < half {
            (0, len1)
        } else {
            (n - len1, len1)
        }
    };
    let w = derivative_weights(nodes[i], &nodes[start..start + len], order);
    (start, w)
}

/// Sparse row representation: start index plus dense weights.
#[derive(Clone, Debug)]
pub struct StencilRow {
    pub start: usize,
    pub weights: Vec<f64>,
}

impl StencilRow {
    pub fn apply(&self, values: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(&values[self.start..self.start + self.weights.len()])
            .map(|(w, v)| w * v)
            .sum()
    }
}

/// Interpolation (derivative `k`) row at an arbitrary point using `len` nodes.
pub fn point_row(nodes: &[f64], z: f64, k: usize, len: usize) -> StencilRow {
    let start = window_around(nodes, z, len);
    let len = len.min(nodes.len());
    StencilRow {
        start,
        weights: derivative_weights(z, &nodes[start..start + len], k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_reproduces_monomials() {
        let x: Vec<f64> = (0..7).map(|i| 0.3 * i as f64 + 0.01 * (i * i) as f64).collect();
        let z = 0.77;
        let c = fornberg_weights(z, &x, 4);
        for p in 0..7u32 {
            for k in 0..=4usize {
                let approx: f64 = c[k].iter().zip(&x).map(|(w, xi)| w * xi.powi(p as i32)).sum();
                let exact = if (k as u32) > p {
                    0.0
                } else {
                    let mut f = 1.0;
                    for q in 0..k as u32 {
                        f *= (p - q) as f64;
                    }
                    f * z.powi((p - k as u32) as i32)
                };
                assert!((approx - exact).abs() < 1e-9 * (1.0 + exact.abs()), "p={p} k={k}");
            }
        }
    }

    #[test]
    fn window_is_clamped() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        assert_eq!(window_around(&x, -3.0, 7), 0);
        assert_eq!(window_around(&x, 50.0, 7), 13);
        assert_eq!(window_around(&x, 10.2, 7), 8);
    }
}
