//! Discretized 1D fluid domains, sampled fields, differentiation and resampling.

pub mod fd;
pub mod quadrature;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FbeError, Result};
use fd::{node_stencil, point_row, StencilRow};

/// Default blend between uniform and `dist^{-1/2}` node density.
pub const DEFAULT_THETA: f64 = 0.5;
/// Nodes used for point evaluation of fields.
pub const EVAL_LEN: usize = 8;
/// Default number of trusted derivatives of a freshly sampled field.
pub const DEFAULT_BUDGET: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Grading {
    Uniform,
    /// `x = a + L[(1-θ)ξ + θ(3ξ² - 2ξ³)]`; θ = 1 is the pure `dist^{-1/2}` density.
    Graded { theta: f64 },
    /// Nodes supplied by the caller.
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid1D {
    nodes: Vec<f64>,
    grading: Grading,
}

impl Grid1D {
    pub fn from_nodes(nodes: Vec<f64>, grading: Grading) -> Result<Self> {
        if nodes.len() < 17 {
            return Err(FbeError::InsufficientResolution(format!(
                "grid needs at least 16 cells, got {}",
                nodes.len().saturating_sub(1)
            )));
        }
        if nodes.iter().any(|x| !x.is_finite()) || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(FbeError::Invalid("grid nodes must be finite and strictly increasing".into()));
        }
        Ok(Grid1D { nodes, grading })
    }

    pub fn uniform(a: f64, b: f64, cells: usize) -> Result<Self> {
        Self::with_grading(a, b, cells, Grading::Uniform)
    }

    pub fn graded(a: f64, b: f64, cells: usize, theta: f64) -> Result<Self> {
        Self::with_grading(a, b, cells, Grading::Graded { theta })
    }

    pub fn with_grading(a: f64, b: f64, cells: usize, grading: Grading) -> Result<Self> {
        if !(b > a) {
            return Err(FbeError::Invalid(format!("empty interval [{a}, {b}]")));
        }
        let len = b - a;
        let theta = match grading {
            Grading::Uniform | Grading::Custom => 0.0,
            Grading::Graded { theta } => {
                if !(0.0..=1.0).contains(&theta) {
                    return Err(FbeError::Invalid(format!("grading theta {theta} outside [0,1]")));
                }
                theta
            }
        };
        let mut nodes: Vec<f64> = (0..=cells)
            .map(|i| {
                let xi = i as f64 / cells as f64;
                a + len * ((1.0 - theta) * xi + theta * xi * xi * (3.0 - 2.0 * xi))
            })
            .collect();
        nodes[0] = a;
        nodes[cells] = b;
        Self::from_nodes(nodes, grading)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn grading(&self) -> Grading {
        self.grading
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }
    pub fn a(&self) -> f64 {
        self.nodes[0]
    }
    pub fn b(&self) -> f64 {
        *self.nodes.last().unwrap()
    }
    pub fn min_cell(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
    pub fn max_cell(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
    /// Larger of the two cells adjacent to node `i`.
    pub fn local_cell(&self, i: usize) -> f64 {
        let n = self.nodes.len();
        let l = if i > 0 { self.nodes[i] - self.nodes[i - 1] } else { 0.0 };
        let r = if i + 1 < n { self.nodes[i + 1] - self.nodes[i] } else { 0.0 };
        l.max(r)
    }
    /// Same grid translated by `dx`.
    pub fn translated(&self, dx: f64) -> Grid1D {
        Grid1D { nodes: self.nodes.iter().map(|x| x + dx).collect(), grading: self.grading }
    }
}

/// Samples on a grid together with the number of derivatives the data supports.
#[derive(Clone, Debug)]
pub struct Field1D {
    grid: Arc<Grid1D>,
    values: Vec<f64>,
    budget: usize,
}

impl Field1D {
    pub fn new(grid: Arc<Grid1D>, values: Vec<f64>) -> Result<Self> {
        Self::with_budget(grid, values, DEFAULT_BUDGET)
    }

    pub fn with_budget(grid: Arc<Grid1D>, values: Vec<f64>, budget: usize) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(FbeError::Invalid(format!(
                "field has {} samples for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FbeError::Invalid(format!("non-finite sample at node {i}")));
        }
        Ok(Field1D { grid, values, budget })
    }

    pub fn from_fn(grid: Arc<Grid1D>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Arc<Grid1D>) -> Self {
        let n = grid.len();
        Field1D { grid, values: vec![0.0; n], budget: DEFAULT_BUDGET }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }
    pub fn grid_arc(&self) -> &Arc<Grid1D> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn budget(&self) -> usize {
        self.budget
    }
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Same grid, new samples.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Field1D> {
        Field1D::with_budget(self.grid.clone(), values, self.budget)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field1D {
        Field1D { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect(), budget: self.budget }
    }

    pub fn zip_map(&self, other: &Field1D, f: impl Fn(f64, f64) -> f64) -> Field1D {
        debug_assert_eq!(self.values.len(), other.values.len());
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Field1D { grid: self.grid.clone(), values, budget: self.budget.min(other.budget) }
    }

    /// Local Lagrange interpolation at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with(x, 0, EVAL_LEN)
    }

    /// `k`-th derivative of the local interpolant at `x`.
    pub fn eval_deriv(&self, x: f64, k: usize) -> f64 {
        self.eval_with(x, k, (EVAL_LEN).max(k + fd::P_INTERIOR))
    }

    /// Interpolation with an explicit stencil length.
    pub fn eval_with(&self, x: f64, k: usize, len: usize) -> f64 {
        point_row(self.grid.nodes(), x, k, len).apply(&self.values)
    }

    /// Finite-difference derivative of the given order.
    pub fn derivative(&self, order: usize) -> Result<Field1D> {
        if order == 0 {
            return Ok(self.clone());
        }
        if order > self.budget {
            return Err(FbeError::InsufficientResolution(format!(
                "derivative order {order} exceeds smoothness budget {}",
                self.budget
            )));
        }
        let nodes = self.grid.nodes();
        if nodes.len() < 4 * order || nodes.len() < order + fd::P_INTERIOR + 1 {
            return Err(FbeError::InsufficientResolution(format!(
                "{} nodes cannot support derivative order {order}",
                nodes.len()
            )));
        }
        let values = (0..nodes.len())
            .map(|i| {
                let (start, w) = node_stencil(nodes, i, order);
                StencilRow { start, weights: w }.apply(&self.values)
            })
            .collect();
        Ok(Field1D { grid: self.grid.clone(), values, budget: self.budget - order })
    }

    /// Local polynomial interpolation onto another grid.
    pub fn resample(&self, target: &Arc<Grid1D>) -> Result<Field1D> {
        if Arc::ptr_eq(target, &self.grid) || **target == *self.grid {
            return Ok(Field1D { grid: target.clone(), values: self.values.clone(), budget: self.budget });
        }
        let nodes = self.grid.nodes();
        let n = nodes.len();
        let lo_reach = nodes[EVAL_LEN.min(n - 1)] - nodes[0];
        let hi_reach = nodes[n - 1] - nodes[n - 1 - EVAL_LEN.min(n - 1)];
        let (a, b) = (nodes[0], nodes[n - 1]);
        let mut values = Vec::with_capacity(target.len());
        for &x in target.nodes() {
            if x < a - lo_reach || x > b + hi_reach {
                return Err(FbeError::OutOfHull(x));
            }
            values.push(self.eval(x));
        }
        Ok(Field1D { grid: target.clone(), values, budget: self.budget })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Conversion {
    RhoToR,
    RToRho,
}

/// `r = ((κ+1)/κ) ρ^κ` and its inverse; negative inputs are clamped to 0.
pub fn rho_r_convert(value: f64, kappa: f64, direction: Conversion) -> f64 {
    let v = value.max(0.0);
    let c = (kappa + 1.0) / kappa;
    match direction {
        Conversion::RhoToR => c * v.powf(kappa),
        Conversion::RToRho => (v / c).powf(1.0 / kappa),
    }
}

/// Screening parameters for [`make_state`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateOptions {
    /// Collar = region next to a boundary where `r ≤ collar_fraction · max r`.
    pub collar_fraction: f64,
    /// `c₀ = c0_relative · sup|∂ₓr|`.
    pub c0_relative: f64,
    /// Grading used when the state has to be moved onto a grid ending at its roots.
    pub theta: f64,
}

impl Default for StateOptions {
    fn default() -> Self {
        StateOptions { collar_fraction: 0.1, c0_relative: 1e-3, theta: DEFAULT_THETA }
    }
}

/// The pair `(r, v)` on the fluid domain `(Γ₋, Γ₊)`.
#[derive(Clone, Debug)]
pub struct State {
    pub r: Field1D,
    pub v: Field1D,
    pub kappa: f64,
    pub gamma_minus: f64,
    pub gamma_plus: f64,
}

impl State {
    pub fn grid(&self) -> &Grid1D {
        self.r.grid()
    }
    pub fn grid_arc(&self) -> &Arc<Grid1D> {
        self.r.grid_arc()
    }
    pub fn length(&self) -> f64 {
        self.gamma_plus - self.gamma_minus
    }

    /// Sample closures on a graded grid over `[a, b]` and validate.
    pub fn from_fns(
        kappa: f64,
        a: f64,
        b: f64,
        cells: usize,
        r: impl Fn(f64) -> f64,
        v: impl Fn(f64) -> f64,
    ) -> Result<State> {
        let grid = Arc::new(Grid1D::graded(a, b, cells, DEFAULT_THETA)?);
        let rv = grid.nodes().iter().map(|&x| r(x)).collect();
        let vv = grid.nodes().iter().map(|&x| v(x)).collect();
        make_state(rv, vv, kappa, grid)
    }

    /// Move to a fresh graded grid over the same domain.
    pub fn regrid(&self, cells: usize, theta: f64) -> Result<State> {
        let grid = Arc::new(Grid1D::graded(self.gamma_minus, self.gamma_plus, cells, theta)?);
        let mut r = self.r.resample(&grid)?.into_values();
        let v = self.v.resample(&grid)?.into_values();
        r[0] = 0.0;
        *r.last_mut().unwrap() = 0.0;
        make_state(r, v, self.kappa, grid)
    }

    /// Rows `x, r, v`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,r,v\n");
        for ((x, r), v) in self.grid().nodes().iter().zip(self.r.values()).zip(self.v.values()) {
            s.push_str(&format!("{x:.17e},{r:.17e},{v:.17e}\n"));
        }
        s
    }

    /// Full serialization: nodes, samples, κ and the boundary points.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "kappa": self.kappa,
            "gamma_minus": self.gamma_minus,
            "gamma_plus": self.gamma_plus,
            "x": self.grid().nodes(),
            "r": self.r.values(),
            "v": self.v.values(),
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<State> {
        let num = |k: &str| {
            value[k].as_f64().ok_or_else(|| FbeError::Invalid(format!("state JSON lacks numeric field `{k}`")))
        };
        let arr = |k: &str| -> Result<Vec<f64>> {
            value[k]
                .as_array()
                .ok_or_else(|| FbeError::Invalid(format!("state JSON lacks array `{k}`")))?
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| FbeError::Invalid(format!("non-numeric entry in `{k}`"))))
                .collect()
        };
        let grid = Arc::new(Grid1D::from_nodes(arr("x")?, Grading::Custom)?);
        let s = make_state(arr("r")?, arr("v")?, num("kappa")?, grid)?;
        Ok(State { gamma_minus: num("gamma_minus")?, gamma_plus: num("gamma_plus")?, ..s })
    }

    /// Spatial translation by `dx`.
    pub fn translated(&self, dx: f64) -> State {
        let g = Arc::new(self.grid().translated(dx));
        State {
            r: Field1D { grid: g.clone(), values: self.r.values.clone(), budget: self.r.budget },
            v: Field1D { grid: g, values: self.v.values.clone(), budget: self.v.budget },
            kappa: self.kappa,
            gamma_minus: self.gamma_minus + dx,
            gamma_plus: self.gamma_plus + dx,
        }
    }
}

/// Build and validate a state from nodal samples.
pub fn make_state(r_values: Vec<f64>, v_values: Vec<f64>, kappa: f64, grid: Arc<Grid1D>) -> Result<State> {
    make_state_with(r_values, v_values, kappa, grid, &StateOptions::default())
}

pub fn make_state_with(
    r_values: Vec<f64>,
    v_values: Vec<f64>,
    kappa: f64,
    grid: Arc<Grid1D>,
    opts: &StateOptions,
) -> Result<State> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(FbeError::Invalid(format!("kappa must be positive, got {kappa}")));
    }
    let r = Field1D::new(grid.clone(), r_values)?;
    let v = Field1D::new(grid.clone(), v_values)?;
    let nodes = grid.nodes();
    let n = nodes.len();
    let rv = r.values();
    let rmax = rv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(rmax > 0.0) {
        return Err(FbeError::DegenerateBoundary("r has no positive region".into()));
    }
    let tol = 1e-12 * rmax;
    let i0 = rv.iter().position(|&x| x > tol).unwrap();
    let i1 = rv.iter().rposition(|&x| x > tol).unwrap();
    for i in i0..=i1 {
        if rv[i] < -tol {
            return Err(FbeError::NegativeInterior(nodes[i]));
        }
        if rv[i] <= tol {
            return Err(FbeError::DegenerateBoundary(format!("r vanishes inside the domain at x = {}", nodes[i])));
        }
    }
    if i0 == 0 {
        return Err(FbeError::NoVacuumBoundary(format!("r > 0 at the left grid end x = {}", nodes[0])));
    }
    if i1 == n - 1 {
        return Err(FbeError::NoVacuumBoundary(format!("r > 0 at the right grid end x = {}", nodes[n - 1])));
    }
    let gm = bracket_root(&r, nodes[i0 - 1], nodes[i0], tol);
    let gp = bracket_root(&r, nodes[i1 + 1], nodes[i1], tol);

    // Nondegeneracy screen on the located roots and on each collar.
    let dr = r.derivative(1)?;
    let sup_dr = (i0..=i1).map(|i| dr.values()[i].abs()).fold(0.0, f64::max);
    let c0 = opts.c0_relative * sup_dr;
    for (g, label) in [(gm, "left"), (gp, "right")] {
        let slope = r.eval_deriv(g, 1).abs();
        if !(slope >= c0) || slope == 0.0 {
            return Err(FbeError::DegenerateBoundary(format!(
                "|r'| = {slope:.3e} below c0 = {c0:.3e} at the {label} root x = {g}"
            )));
        }
    }
    let collar_cut = opts.collar_fraction * rmax;
    let mut i = i0;
    while i <= i1 && rv[i] <= collar_cut {
        if dr.values()[i].abs() < c0 {
            return Err(FbeError::DegenerateBoundary(format!("|r'| below c0 in the left collar at x = {}", nodes[i])));
        }
        i += 1;
    }
    let mut i = i1;
    while i >= i0 && rv[i] <= collar_cut {
        if dr.values()[i].abs() < c0 {
            return Err(FbeError::DegenerateBoundary(format!("|r'| below c0 in the right collar at x = {}", nodes[i])));
        }
        i -= 1;
    }

    let len = nodes[n - 1] - nodes[0];
    let ends_are_roots = (gm - nodes[0]).abs() <= 1e-12 * len && (gp - nodes[n - 1]).abs() <= 1e-12 * len;
    if ends_are_roots {
        let mut rvals = r.into_values();
        rvals[0] = 0.0;
        rvals[n - 1] = 0.0;
        let r = Field1D::new(grid.clone(), rvals)?;
        return Ok(State { r, v, kappa, gamma_minus: nodes[0], gamma_plus: nodes[n - 1] });
    }
    let target = Arc::new(Grid1D::graded(gm, gp, n - 1, opts.theta)?);
    let mut rvals = r.resample(&target)?.into_values();
    rvals[0] = 0.0;
    rvals[n - 1] = 0.0;
    let vvals = v.resample(&target)?.into_values();
    if let Some(k) = rvals[1..n - 1].iter().position(|&x| x <= 0.0) {
        return Err(FbeError::DegenerateBoundary(format!(
            "r not positive after moving onto the root grid at x = {}",
            target.nodes()[k + 1]
        )));
    }
    Ok(State {
        r: Field1D::new(target.clone(), rvals)?,
        v: Field1D::new(target, vvals)?,
        kappa,
        gamma_minus: gm,
        gamma_plus: gp,
    })
}

/// Bisection on the local interpolant between `outside` (r ≤ tol) and `inside` (r > tol).
fn bracket_root(r: &Field1D, outside: f64, inside: f64, tol: f64) -> f64 {
    if r.eval(outside).abs() <= tol {
        return outside;
    }
    let (mut a, mut b) = (outside, inside);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if r.eval(m) > 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

/// Locate a root of `f` inside `[a, b]` given a sign change.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> Option<f64> {
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(a: f64, b: f64, n: usize) -> Arc<Grid1D> {
        Arc::new(Grid1D::graded(a, b, n, DEFAULT_THETA).unwrap())
    }

    #[test]
    fn quadratic_state_boundaries() {
        let grid = g(-1.0, 1.0, 64);
        let r: Vec<f64> = grid.nodes().iter().map(|x| 1.0 - x * x).collect();
        let s = make_state(r, vec![0.0; 65], 1.0, grid).unwrap();
        assert_eq!(s.gamma_minus, -1.0);
        assert_eq!(s.gamma_plus, 1.0);
    }

    #[test]
    fn interior_roots_are_located_and_regridded() {
        let grid = g(-1.2, 1.3, 80);
        let r: Vec<f64> = grid.nodes().iter().map(|x| (1.0 - x * x).max(-0.5)).collect();
        let s = make_state(r, vec![0.0; 81], 1.0, grid).unwrap();
        assert!((s.gamma_minus + 1.0).abs() < 1e-9);
        assert!((s.gamma_plus - 1.0).abs() < 1e-9);
        assert_eq!(s.grid().a(), s.gamma_minus);
    }

    #[test]
    fn zero_plateau_is_degenerate() {
        let grid = g(-1.0, 1.0, 64);
        let r: Vec<f64> = grid.nodes().iter().map(|x| if x.abs() < 0.2 { 0.0 } else { 1.0 - x * x }).collect();
        assert!(matches!(make_state(r, vec![0.0; 65], 1.0, grid), Err(FbeError::DegenerateBoundary(_))));
    }

    #[test]
    fn negative_interior_is_rejected() {
        let grid = g(-1.0, 1.0, 64);
        let r: Vec<f64> =
            grid.nodes().iter().map(|x| if (x - 0.1).abs() < 0.05 { -0.1 } else { 1.0 - x * x }).collect();
        assert!(matches!(make_state(r, vec![0.0; 65], 1.0, grid), Err(FbeError::NegativeInterior(_))));
    }

    #[test]
    fn double_root_is_degenerate() {
        let grid = g(-1.0, 1.0, 64);
        let r: Vec<f64> = grid.nodes().iter().map(|x| (1.0 - x * x).powi(2)).collect();
        assert!(matches!(make_state(r, vec![0.0; 65], 1.0, grid), Err(FbeError::DegenerateBoundary(_))));
    }

    #[test]
    fn rho_r_round_trip() {
        assert_eq!(rho_r_convert(1.0, 1.0, Conversion::RhoToR), 2.0);
        assert_eq!(rho_r_convert(0.0, 0.7, Conversion::RhoToR), 0.0);
        for &k in &[0.5, 1.0, 2.0, 3.3] {
            let r = 0.37;
            let back = rho_r_convert(rho_r_convert(r, k, Conversion::RToRho), k, Conversion::RhoToR);
            assert!((back - r).abs() < 1e-14);
        }
    }
}
