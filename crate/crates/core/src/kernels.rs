//! Boundary-layer regularization operators `Ψ^h`.
//!
//! Two realizations are provided. The bump family follows the layered mollifier
//! construction: a moment-corrected bump at each dyadic layer, shifted inward near the
//! free boundary, glued with a partition of unity in `log₂ r`. The projection family
//! replaces convolution by partition-of-unity weighted local least-squares fits; it has
//! the same support scale and polynomial reproduction but is a contraction, which the
//! time stepper needs.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::Serialize;

use crate::error::{FbeError, Result};
use crate::grid::{make_state, Field1D, Grid1D, State, DEFAULT_THETA};
use crate::wspace::h2k_norm;

/// Enlargement of `Ω` in units of `2^{-2h}`.
pub const ENLARGEMENT: f64 = 0.125;
/// Default moment order of the bump family.
pub const DEFAULT_MOMENT_ORDER: usize = 4;
/// Default support radius of the shifted bump.
pub const DEFAULT_DELTA: f64 = 0.5;

/// `C^∞` step: 0 for `u ≤ 0`, 1 for `u ≥ 1`.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let f = |t: f64| (-1.0 / t).exp();
    let a = f(u);
    a / (a + f(1.0 - u))
}

fn bump0(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

fn legendre_all(t: f64, deg: usize) -> Vec<f64> {
    let mut p = vec![1.0; deg + 1];
    if deg >= 1 {
        p[1] = t;
    }
    for k in 1..deg {
        p[k + 1] = ((2 * k + 1) as f64 * t * p[k] - k as f64 * p[k - 1]) / (k + 1) as f64;
    }
    p
}

/// `φ(z) = δ⁻¹ φ₀((z-e)/δ) q((z-e)/δ)`, `φ₀(t) = exp(-1/(1-t²))`, with `q` of degree `2M`
/// chosen so that `∫φ = 1` and `∫ z^α φ = 0` for `1 ≤ α ≤ 2M`.
#[derive(Clone, Debug, Serialize)]
pub struct BumpFunction {
    pub order: usize,
    pub delta: f64,
    pub shift: f64,
    /// Legendre coefficients of `q` in `t = (z-e)/δ`.
    pub coeffs: Vec<f64>,
    pub condition: f64,
    #[serde(skip)]
    z_nodes: Vec<f64>,
    #[serde(skip)]
    z_weights: Vec<f64>,
}

/// Double-exponential (tanh-sinh) rule on `[-1, 1]`; the bump's essential zeros at
/// `±1` make composite Gauss rules converge slowly there.
pub(crate) fn tanh_sinh(step: f64) -> (Vec<f64>, Vec<f64>) {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut ts = Vec::new();
    let mut ws = Vec::new();
    let kmax = (4.0 / step).ceil() as i64;
    for k in -kmax..=kmax {
        let u = k as f64 * step;
        let a = half_pi * u.sinh();
        let t = a.tanh();
        let w = step * half_pi * u.cosh() / a.cosh().powi(2);
        if t.abs() < 1.0 && w > 1e-300 {
            ts.push(t);
            ws.push(w);
        }
    }
    (ts, ws)
}

const BUMP_STEP: f64 = 1.0 / 32.0;

/// Shifted bump with support `B(1, δ)`; `M ≤ 6`, `δ ≤ 1/2`.
pub fn make_bump(order: usize, delta: f64) -> Result<BumpFunction> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(FbeError::Invalid(format!("bump radius δ = {delta} must lie in (0, 1/2]")));
    }
    make_bump_at(order, delta, 1.0)
}

/// Centered bump with support `[-1, 1]`.
pub fn make_centered_bump(order: usize) -> Result<BumpFunction> {
    make_bump_at(order, 1.0, 0.0)
}

fn make_bump_at(order: usize, delta: f64, shift: f64) -> Result<BumpFunction> {
    if order > 6 {
        return Err(FbeError::Invalid(format!("moment order {order} exceeds 6")));
    }
    let deg = 2 * order;
    let (ts, ws) = tanh_sinh(BUMP_STEP);
    let mut g = DMatrix::<f64>::zeros(deg + 1, deg + 1);
    let polys: Vec<Vec<f64>> = ts.iter().map(|&t| legendre_all(t, deg)).collect();
    for (q, (&t, &w)) in ts.iter().zip(&ws).enumerate() {
        let wt = w * bump0(t);
        for a in 0..=deg {
            for b in 0..=deg {
                g[(a, b)] += wt * polys[q][a] * polys[q][b];
            }
        }
    }
    let sv = g.clone().singular_values();
    let cond = sv.max() / sv.min();
    if !(cond <= 1e12) {
        return Err(FbeError::IllConditionedMoments(cond));
    }
    // ∫ P_α(t) φ₀ q dt = P_α(-e/δ): reproduces every polynomial of degree ≤ 2M at z = 0.
    let rhs = DVector::from_vec(legendre_all(-shift / delta, deg));
    let chol = Cholesky::new(g.clone()).ok_or(FbeError::IllConditionedMoments(cond))?;
    let mut c = chol.solve(&rhs);
    for _ in 0..3 {
        let res = &rhs - &g * &c;
        c += chol.solve(&res);
    }
    let resid = (&g * &c - &rhs).norm() / rhs.norm();
    if resid > 1e-10 {
        return Err(FbeError::IllConditionedMoments(cond));
    }
    let coeffs: Vec<f64> = c.iter().copied().collect();
    let z_nodes = ts.iter().map(|t| shift + delta * t).collect();
    let z_weights = ts
        .iter()
        .zip(&ws)
        .zip(&polys)
        .map(|((&t, &w), p)| w * bump0(t) * p.iter().zip(&coeffs).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    Ok(BumpFunction { order, delta, shift, coeffs, condition: cond, z_nodes, z_weights })
}

impl BumpFunction {
    pub fn value(&self, z: f64) -> f64 {
        let t = (z - self.shift) / self.delta;
        if t.abs() >= 1.0 {
            return 0.0;
        }
        let p = legendre_all(t, 2 * self.order);
        bump0(t) * p.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum::<f64>() / self.delta
    }

    /// Quadrature samples `(z_q, ω_q)` with `Σ ω_q g(z_q) ≈ ∫ φ g`.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.z_nodes.iter().copied().zip(self.z_weights.iter().copied())
    }

    /// `Σ ω_q z_q^α`: the moment seen by every kernel application.
    pub fn moment(&self, alpha: u32) -> f64 {
        self.samples().map(|(z, w)| w * z.powi(alpha as i32)).sum()
    }

    /// `∫ z^α φ` by an independent, finer quadrature of `φ`.
    pub fn moment_independent(&self, alpha: u32) -> f64 {
        let (ts, ws) = tanh_sinh(BUMP_STEP / 1.5);
        ts.iter()
            .zip(&ws)
            .map(|(&t, &w)| {
                let z = self.shift + self.delta * t;
                w * self.delta * self.value(z) * z.powi(alpha as i32)
            })
            .sum()
    }

    pub fn support(&self) -> (f64, f64) {
        (self.shift - self.delta, self.shift + self.delta)
    }
}

/// Partition of unity `1 = χ_{>h} + Σ_{m≤h} χ_m` built on `u = -½ log₂ r`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LayerPartition {
    pub h: usize,
}

impl LayerPartition {
    /// Nonzero `(layer, weight)` pairs at a point with defining-function value `r`;
    /// layer `h + 1` stands for `χ_{>h}`.
    pub fn weights(&self, r: f64) -> Vec<(usize, f64)> {
        let u = if r > 0.0 { -0.5 * r.log2() } else { f64::INFINITY };
        let f = |m: usize| smooth_step(u - m as f64);
        let mut out = Vec::with_capacity(2);
        let mut prev = 1.0;
        for m in 0..=self.h {
            let next = f(m);
            let w = prev - next;
            if w > 0.0 {
                out.push((m, w));
            }
            prev = next;
        }
        if prev > 0.0 {
            out.push((self.h + 1, prev));
        }
        out
    }

    /// Kernel length scale on a layer: `2^{-(h+m)}` on layer `m`, `2^{-2h}` on the top layer.
    pub fn scale(&self, layer: usize) -> f64 {
        let m = layer.min(self.h);
        2f64.powi(-((self.h + m) as i32))
    }
}

fn check_scale(grid: &Grid1D, h: usize) -> Result<()> {
    let ell = 2f64.powi(-2 * h as i32);
    if ell < 4.0 * grid.min_cell() {
        return Err(FbeError::ScaleTooFine(format!(
            "2^(-2h) = {ell:.3e} is below four cells ({:.3e}) at h = {h}",
            4.0 * grid.min_cell()
        )));
    }
    Ok(())
}

/// The assembled layered bump kernel `K^h(x, y)` for a state with defining function `r`.
#[derive(Clone, Debug)]
pub struct GoodKernel {
    pub h: usize,
    pub partition: LayerPartition,
    pub centered: BumpFunction,
    pub shifted: BumpFunction,
    r: Field1D,
    gamma: (f64, f64),
}

impl GoodKernel {
    pub fn new(r: &Field1D, h: usize, order: usize, delta: f64) -> Result<GoodKernel> {
        if h < 1 {
            return Err(FbeError::Invalid("regularization scale h must be ≥ 1".into()));
        }
        check_scale(r.grid(), h)?;
        let g = r.grid();
        Ok(GoodKernel {
            h,
            partition: LayerPartition { h },
            centered: make_centered_bump(order)?,
            shifted: make_bump(order, delta)?,
            r: r.clone(),
            gamma: (g.a(), g.b()),
        })
    }

    pub fn r(&self) -> &Field1D {
        &self.r
    }

    fn r_at(&self, x: f64) -> f64 {
        if x <= self.gamma.0 || x >= self.gamma.1 {
            0.0
        } else {
            self.r.eval(x).max(0.0)
        }
    }

    /// Discrete kernel row: points `y` and weights with `Ψf(x) = Σ w f(y)`.
    pub fn row(&self, x: f64) -> Vec<(f64, f64)> {
        let (gm, gp) = self.gamma;
        let (d, outward) = if x - gm <= gp - x { (x - gm, -1.0) } else { (gp - x, 1.0) };
        let mut out = Vec::new();
        for (layer, chi) in self.partition.weights(self.r_at(x)) {
            let ell = self.partition.scale(layer);
            let eta = smooth_step(d / ell - 2.0);
            if eta > 0.0 {
                for (z, w) in self.centered.samples() {
                    out.push((x - ell * z, chi * eta * w));
                }
            }
            if eta < 1.0 {
                for (z, w) in self.shifted.samples() {
                    out.push((x - ell * outward * z, chi * (1.0 - eta) * w));
                }
            }
        }
        out
    }

    /// `Ψ^h f(x)` with `(2M+2)`-point interpolation of the input.
    pub fn apply_at(&self, f: &Field1D, x: f64) -> Result<f64> {
        let len = 2 * self.centered.order + 2;
        let (a, b) = (f.grid().a(), f.grid().b());
        let mut s = 0.0;
        for (y, w) in self.row(x) {
            if y < a || y > b {
                return Err(FbeError::OutOfHull(y));
            }
            s += w * f.eval_with(y, 0, len.max(2));
        }
        Ok(s)
    }

    /// CSV triplets `(x, y, K)` over the given evaluation points.
    pub fn dump_csv(&self, xs: &[f64]) -> String {
        let mut s = String::from("x,y,k\n");
        for &x in xs {
            for (y, w) in self.row(x) {
                s.push_str(&format!("{x:.12e},{y:.12e},{w:.12e}\n"));
            }
        }
        s
    }

    /// Support bound `C(2^{-2h} + 2^{-h} r(y)^{1/2})` checked over every row entry; returns
    /// the largest ratio `|x-y| / (2^{-2h} + 2^{-h} r(y)^{1/2})`.
    pub fn support_ratio(&self, xs: &[f64]) -> f64 {
        let e2 = 2f64.powi(-2 * self.h as i32);
        let e1 = 2f64.powi(-(self.h as i32));
        let mut worst = 0.0f64;
        for &x in xs {
            for (y, w) in self.row(x) {
                if w != 0.0 {
                    let bound = e2 + e1 * self.r_at(y).sqrt();
                    worst = worst.max((x - y).abs() / bound);
                }
            }
        }
        worst
    }

    /// Largest `|Σ_y K(x,y)(x-y)^α - δ_{α0}|` over the sample points, `α ≤ 2M`.
    pub fn moment_residual(&self, xs: &[f64]) -> f64 {
        let deg = 2 * self.centered.order;
        let mut worst = 0.0f64;
        for &x in xs {
            let row = self.row(x);
            let scale = row.iter().fold(0.0f64, |m, (y, _)| m.max((x - y).abs())).max(1e-300);
            for a in 0..=deg {
                let m: f64 = row.iter().map(|(y, w)| w * ((x - y) / scale).powi(a as i32)).sum();
                let target = if a == 0 { 1.0 } else { 0.0 };
                worst = worst.max((m - target).abs());
            }
        }
        worst
    }
}

/// Partition-of-unity weighted local least-squares smoother `Tf = Σ_W ψ_W P_W f`.
#[derive(Clone, Debug)]
pub struct ProjectionSmoother {
    pub h: f64,
    pub degree: usize,
    grid: Arc<Grid1D>,
    s_field: Field1D,
    s_total: f64,
    windows: Vec<Window>,
}

#[derive(Clone, Debug)]
struct Window {
    js: Vec<i64>,
    clamp: Clamp,
    lo: usize,
    hi: usize,
    center: f64,
    half: f64,
    coef: DMatrix<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Clamp {
    None,
    Left,
    Right,
    Both,
}

fn cubic_bspline(s: f64) -> f64 {
    let a = s.abs();
    if a >= 2.0 {
        0.0
    } else if a >= 1.0 {
        (2.0 - a).powi(3) / 6.0
    } else {
        (4.0 - 6.0 * a * a + 3.0 * a * a * a) / 6.0
    }
}

impl Window {
    fn psi(&self, s: f64, s_total: f64) -> f64 {
        let s = match self.clamp {
            Clamp::None => s,
            Clamp::Left => s.max(0.0),
            Clamp::Right => s.min(s_total),
            Clamp::Both => return 1.0,
        };
        self.js.iter().map(|&j| cubic_bspline(s - j as f64)).sum()
    }
}

/// Length scale of the smoother: `2^{-2h} + 2^{-h}√r`, floored by the local resolution.
pub fn projection_scale(h: f64, r: f64, cell: f64, degree: usize) -> f64 {
    let phys = 2f64.powf(-2.0 * h) + 2f64.powf(-h) * r.max(0.0).sqrt();
    let floor = 0.5 * (degree as f64 + 2.0) * cell;
    (phys * phys + floor * floor).sqrt()
}

impl ProjectionSmoother {
    /// Smoother on the grid of `r` at scale `h` reproducing polynomials up to `degree`.
    pub fn new(r: &Field1D, h: f64, degree: usize) -> Result<ProjectionSmoother> {
        let grid = r.grid_arc().clone();
        let nodes = grid.nodes();
        let n = nodes.len();
        if n < 2 * degree + 4 {
            return Err(FbeError::InsufficientResolution(format!("{n} nodes cannot carry degree-{degree} fits")));
        }
        let inv_ell: Vec<f64> = (0..n)
            .map(|i| 1.0 / projection_scale(h, r.values()[i], grid.local_cell(i), degree))
            .collect();
        let mut s = vec![0.0; n];
        for i in 1..n {
            s[i] = s[i - 1] + 0.5 * (inv_ell[i] + inv_ell[i - 1]) * (nodes[i] - nodes[i - 1]);
        }
        let raw_total = s[n - 1];
        let total = raw_total.round().max(1.0);
        for v in s.iter_mut() {
            *v *= total / raw_total;
        }
        let s_field = Field1D::new(grid.clone(), s)?;
        let big_s = total as i64;
        let mut specs: Vec<(Vec<i64>, Clamp)> = Vec::new();
        if big_s < 3 {
            specs.push((vec![0], Clamp::Both));
        } else {
            specs.push(((-1..=1).collect(), Clamp::Left));
            for j in 2..=big_s - 2 {
                specs.push((vec![j], Clamp::None));
            }
            specs.push(((big_s - 1..=big_s + 1).collect(), Clamp::Right));
        }
        let trap: Vec<f64> = (0..n)
            .map(|i| {
                let l = if i > 0 { nodes[i] - nodes[i - 1] } else { 0.0 };
                let rr = if i + 1 < n { nodes[i + 1] - nodes[i] } else { 0.0 };
                0.5 * (l + rr)
            })
            .collect();
        let mut windows = Vec::with_capacity(specs.len());
        for (js, clamp) in specs {
            let mut w = Window { js, clamp, lo: 0, hi: 0, center: 0.0, half: 1.0, coef: DMatrix::zeros(0, 0) };
            let psi: Vec<f64> = s_field.values().iter().map(|&si| w.psi(si, total)).collect();
            let lo = psi.iter().position(|&p| p > 1e-15).unwrap_or(0);
            let hi = psi.iter().rposition(|&p| p > 1e-15).unwrap_or(n - 1);
            if hi + 1 - lo < degree + 1 {
                return Err(FbeError::InsufficientResolution("smoother window holds too few nodes".into()));
            }
            w.lo = lo;
            w.hi = hi;
            w.center = 0.5 * (nodes[lo] + nodes[hi]);
            w.half = 0.5 * (nodes[hi] - nodes[lo]);
            let m = hi + 1 - lo;
            let mut phi = DMatrix::<f64>::zeros(m, degree + 1);
            let mut wphi = DMatrix::<f64>::zeros(m, degree + 1);
            for (k, i) in (lo..=hi).enumerate() {
                let p = legendre_all((nodes[i] - w.center) / w.half, degree);
                let wt = trap[i] * psi[i];
                for (d, pv) in p.iter().enumerate() {
                    phi[(k, d)] = *pv;
                    wphi[(k, d)] = pv * wt;
                }
            }
            let gram = phi.transpose() * &wphi;
            let chol = Cholesky::new(gram)
                .ok_or_else(|| FbeError::InsufficientResolution("singular local fit in smoother".into()))?;
            w.coef = chol.solve(&wphi.transpose());
            windows.push(w);
        }
        Ok(ProjectionSmoother { h, degree, grid, s_field, s_total: total, windows })
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    fn s_of(&self, x: f64) -> f64 {
        let g = &self.grid;
        let nodes = g.nodes();
        let n = nodes.len();
        if x <= nodes[0] {
            let slope = (self.s_field.values()[1] - self.s_field.values()[0]) / (nodes[1] - nodes[0]);
            return (x - nodes[0]) * slope;
        }
        if x >= nodes[n - 1] {
            let sv = self.s_field.values();
            let slope = (sv[n - 1] - sv[n - 2]) / (nodes[n - 1] - nodes[n - 2]);
            return sv[n - 1] + (x - nodes[n - 1]) * slope;
        }
        self.s_field.eval(x)
    }

    /// Local polynomial coefficients of every window for the field values `f`.
    pub fn fit(&self, f: &[f64]) -> Vec<Vec<f64>> {
        self.windows
            .iter()
            .map(|w| {
                let v = DVector::from_column_slice(&f[w.lo..=w.hi]);
                (&w.coef * v).iter().copied().collect()
            })
            .collect()
    }

    /// `Tf(x)` from fitted coefficients; defined for every real `x`.
    pub fn eval_fitted(&self, coeffs: &[Vec<f64>], x: f64, deriv: usize) -> f64 {
        let s = self.s_of(x);
        let mut total = 0.0;
        for (w, c) in self.windows.iter().zip(coeffs) {
            let psi = w.psi(s, self.s_total);
            if psi == 0.0 {
                continue;
            }
            let xi = (x - w.center) / w.half;
            let val = if deriv == 0 {
                legendre_all(xi, self.degree).iter().zip(c).map(|(a, b)| a * b).sum::<f64>()
            } else {
                legendre_derivative(xi, c) / w.half
            };
            total += psi * val;
        }
        total
    }

    /// `Tf` at arbitrary points.
    pub fn apply_at(&self, f: &Field1D, xs: &[f64]) -> Vec<f64> {
        let c = self.fit(f.values());
        xs.iter().map(|&x| self.eval_fitted(&c, x, 0)).collect()
    }

    /// `Tf` on the smoother's own grid.
    pub fn apply(&self, f: &Field1D) -> Result<Field1D> {
        let v = self.apply_at(f, self.grid.nodes());
        f.with_values(v)
    }

    /// Kernel row `T(x, x_j)` with respect to the nodal values.
    pub fn row(&self, x: f64) -> Vec<(usize, f64)> {
        let s = self.s_of(x);
        let mut acc = vec![0.0; self.grid.len()];
        for w in &self.windows {
            let psi = w.psi(s, self.s_total);
            if psi == 0.0 {
                continue;
            }
            let p = legendre_all((x - w.center) / w.half, self.degree);
            for (k, i) in (w.lo..=w.hi).enumerate() {
                let mut v = 0.0;
                for d in 0..=self.degree {
                    v += p[d] * w.coef[(d, k)];
                }
                acc[i] += psi * v;
            }
        }
        acc.into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect()
    }
}

/// Derivative of `Σ c_k P_k(ξ)` in `ξ`.
fn legendre_derivative(xi: f64, c: &[f64]) -> f64 {
    // P_k' = k (ξ P_k - P_{k-1}) / (ξ² - 1) is singular at the ends; use the recurrence
    // P_{k+1}' = (2k+1) P_k + P_{k-1}'.
    let deg = c.len().saturating_sub(1);
    let p = legendre_all(xi, deg);
    let mut dp = vec![0.0; deg + 1];
    for k in 1..=deg {
        dp[k] = (2 * k - 1) as f64 * p[k - 1] + if k >= 2 { dp[k - 2] } else { 0.0 };
    }
    dp.iter().zip(c).map(|(a, b)| a * b).sum()
}

/// Which realization of `Ψ^h` to use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum KernelFamily {
    Bump { order: usize, delta: f64 },
    Projection { degree: usize },
}

impl Default for KernelFamily {
    fn default() -> Self {
        KernelFamily::Bump { order: DEFAULT_MOMENT_ORDER, delta: DEFAULT_DELTA }
    }
}

/// `Ω̃^{[h]}`: the hull of `r`'s grid enlarged by `c·2^{-2h}` on both sides.
pub fn enlarged_grid(grid: &Grid1D, h: f64) -> Result<Arc<Grid1D>> {
    let pad = ENLARGEMENT * 2f64.powf(-2.0 * h);
    Ok(Arc::new(Grid1D::graded(grid.a() - pad, grid.b() + pad, grid.cells(), DEFAULT_THETA)?))
}

/// A ready-to-apply `Ψ^h` for one defining function.
#[derive(Clone, Debug)]
pub enum Regularizer {
    Bump(GoodKernel),
    Projection(ProjectionSmoother),
}

impl Regularizer {
    pub fn new(r: &Field1D, h: usize, family: KernelFamily) -> Result<Regularizer> {
        match family {
            KernelFamily::Bump { order, delta } => Ok(Regularizer::Bump(GoodKernel::new(r, h, order, delta)?)),
            KernelFamily::Projection { degree } => {
                if h < 1 {
                    return Err(FbeError::Invalid("regularization scale h must be ≥ 1".into()));
                }
                check_scale(r.grid(), h)?;
                Ok(Regularizer::Projection(ProjectionSmoother::new(r, h as f64, degree)?))
            }
        }
    }

    pub fn apply_at(&self, f: &Field1D, xs: &[f64]) -> Result<Vec<f64>> {
        match self {
            Regularizer::Bump(k) => xs.iter().map(|&x| k.apply_at(f, x)).collect(),
            Regularizer::Projection(p) => Ok(p.apply_at(f, xs)),
        }
    }
}

/// `Ψ^h` applied to each field, sampled on the enlarged domain `Ω̃^{[h]}`.
pub fn regularize(fields: &[&Field1D], r: &Field1D, h: usize, family: KernelFamily) -> Result<Vec<Field1D>> {
    let reg = Regularizer::new(r, h, family)?;
    let out_grid = enlarged_grid(r.grid(), h as f64)?;
    fields
        .iter()
        .map(|f| {
            let v = reg.apply_at(f, out_grid.nodes())?;
            Field1D::new(out_grid.clone(), v)
        })
        .collect()
}

/// `(r^h, v^h) = Ψ^h(r, v)` restricted to `Ω_h = {r^h > 0}`.
pub fn regularize_state(state: &State, h: usize, family: KernelFamily) -> Result<State> {
    let out = regularize(&[&state.r, &state.v], &state.r, h, family)?;
    let rv = out[0].values();
    let n = rv.len();
    if !(rv[0] < 0.0 && rv[n - 1] < 0.0) {
        return Err(FbeError::BoundaryLost(format!(
            "regularized r does not change sign inside the enlarged domain (ends {:.3e}, {:.3e})",
            rv[0],
            rv[n - 1]
        )));
    }
    make_state(out[0].values().to_vec(), out[1].values().to_vec(), state.kappa, out[0].grid_arc().clone())
        .map_err(|e| FbeError::BoundaryLost(e.to_string()))
}

/// Measured ratios for the regularization, difference and error bounds.
#[derive(Clone, Debug, Serialize)]
pub struct RegBoundReport {
    pub h: usize,
    pub j: i32,
    pub k: usize,
    pub reg_plus: Option<f64>,
    pub reg_minus: Option<f64>,
    pub reg_err: Option<f64>,
}

/// `LHS / (2^{2jh} RHS)` for each bound whose admissible range contains `j`, all measured
/// in `ℋ^{2k+2j}` against `‖(r,v)‖_{ℋ^{2k}}` on the original domain.
pub fn audit_reg_bounds(state: &State, h: usize, j: i32, k: usize, family: KernelFamily) -> Result<RegBoundReport> {
    let kk = k as i32 + j;
    if kk < 0 {
        return Err(FbeError::ParameterMismatch(format!("k + j = {kk} must be nonnegative")));
    }
    let g = state.grid_arc().clone();
    let rhs = h2k_norm(&state.r, &state.v, &state.r, state.kappa, k)?.norm;
    let scale = 2f64.powi(2 * j * h as i32);
    let norm_of = |s: &[f64], w: &[f64]| -> Result<f64> {
        let s = Field1D::new(g.clone(), s.to_vec())?;
        let w = Field1D::new(g.clone(), w.to_vec())?;
        Ok(h2k_norm(&s, &w, &state.r, state.kappa, kk as usize)?.norm)
    };
    let psi = |hh: usize| -> Result<(Vec<f64>, Vec<f64>)> {
        let reg = Regularizer::new(&state.r, hh, family)?;
        Ok((reg.apply_at(&state.r, g.nodes())?, reg.apply_at(&state.v, g.nodes())?))
    };
    let ratio = |lhs: f64| if rhs == 0.0 { 0.0 } else { lhs / (scale * rhs) };
    let (sh, wh) = psi(h)?;
    let reg_plus = if j >= 0 { Some(ratio(norm_of(&sh, &wh)?)) } else { None };
    let (reg_minus, reg_err) = if j <= 0 {
        let minus = match psi(h + 1) {
            Ok((s1, w1)) => {
                let ds: Vec<f64> = s1.iter().zip(&sh).map(|(a, b)| a - b).collect();
                let dw: Vec<f64> = w1.iter().zip(&wh).map(|(a, b)| a - b).collect();
                Some(ratio(norm_of(&ds, &dw)?))
            }
            Err(FbeError::ScaleTooFine(_)) => None,
            Err(e) => return Err(e),
        };
        let es: Vec<f64> = state.r.values().iter().zip(&sh).map(|(a, b)| a - b).collect();
        let ew: Vec<f64> = state.v.values().iter().zip(&wh).map(|(a, b)| a - b).collect();
        (minus, Some(ratio(norm_of(&es, &ew)?)))
    } else {
        (None, None)
    };
    Ok(RegBoundReport { h, j, k, reg_plus, reg_minus, reg_err })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_moments_vanish() {
        for m in [0usize, 2, 4] {
            let b = make_bump(m, 0.5).unwrap();
            assert!((b.moment(0) - 1.0).abs() < 1e-8);
            for a in 1..=2 * m as u32 {
                assert!(b.moment(a).abs() < 1e-8, "M={m} α={a}: {}", b.moment(a));
                assert!(b.moment_independent(a).abs() < 1e-8);
            }
        }
        let b = make_bump(2, 0.25).unwrap();
        assert!((1..=4).all(|a| b.moment(a).abs() < 1e-10));
        assert!(make_bump(2, 0.6).is_err());
    }

    #[test]
    fn partition_sums_to_one() {
        let p = LayerPartition { h: 4 };
        for r in [2.0, 0.7, 0.2, 0.03, 1e-3, 1e-6, 0.0] {
            let s: f64 = p.weights(r).iter().map(|x| x.1).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn projection_reproduces_polynomials_and_contracts() {
        let g = Arc::new(Grid1D::graded(-1.0, 1.0, 256, 0.5).unwrap());
        let r = Field1D::from_fn(g.clone(), |x| 1.0 - x * x).unwrap();
        let t = ProjectionSmoother::new(&r, 3.0, 4).unwrap();
        let f = Field1D::from_fn(g.clone(), |x| 1.0 - 2.0 * x + 0.5 * x.powi(4)).unwrap();
        let xs = [-1.05, -1.0, -0.3, 0.0, 0.77, 1.0, 1.04];
        for (x, v) in xs.iter().zip(t.apply_at(&f, &xs)) {
            let exact = 1.0 - 2.0 * x + 0.5 * x.powi(4);
            assert!((v - exact).abs() < 1e-10, "x={x}: {v} vs {exact}");
        }
        let noise = Field1D::from_fn(g.clone(), |x| (97.0 * x).sin()).unwrap();
        let out = t.apply(&noise).unwrap();
        let interior = g.nodes().iter().zip(out.values()).filter(|(x, _)| x.abs() < 0.8);
        assert!(interior.fold(0.0f64, |m, (_, v)| m.max(v.abs())) < 0.1);
        let l2 = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
        assert!(l2(out.values()) < l2(noise.values()));
    }

    #[test]
    fn good_kernel_axioms_on_three_scales() {
        let g = Arc::new(Grid1D::graded(-1.0, 1.0, 512, 0.5).unwrap());
        let r = Field1D::from_fn(g.clone(), |x| 1.0 - x * x).unwrap();
        for h in 1..=3 {
            let pad = ENLARGEMENT * 2f64.powi(-2 * h as i32);
            let xs: Vec<f64> = (0..=60).map(|i| -1.0 - pad + (2.0 + 2.0 * pad) * i as f64 / 60.0).collect();
            let k = GoodKernel::new(&r, h, 4, DEFAULT_DELTA).unwrap();
            assert!(k.moment_residual(&xs) < 1e-8, "h={h}");
            assert!(k.support_ratio(&xs) < 4.0, "h={h}: {}", k.support_ratio(&xs));
            let f = Field1D::from_fn(g.clone(), |x| 2.0 + x - 3.0 * x.powi(5)).unwrap();
            for &x in &xs {
                let exact = 2.0 + x - 3.0 * x.powi(5);
                assert!((k.apply_at(&f, x).unwrap() - exact).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn regularized_state_keeps_boundary() {
        let s = State::from_fns(1.0, -1.0, 1.0, 512, |x| 1.0 - x * x, |_| 0.0).unwrap();
        let out = regularize_state(&s, 3, KernelFamily::default()).unwrap();
        assert!((out.gamma_minus + 1.0).abs() < 1e-8 && (out.gamma_plus - 1.0).abs() < 1e-8);
        assert!(out.v.max_abs() == 0.0);
    }
}
