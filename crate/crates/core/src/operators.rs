//! Transition operators `L₁ᵇ`, `L₂ (+L₃)`, `L̃₂ᵇ` discretized through their weighted bilinear
//! forms with continuous P1 elements and a lumped mass matrix, so that `L = -M⁻¹K` is
//! self-adjoint and nonpositive in the discrete weighted inner product `⟨f,g⟩ = fᵀMg`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{FbeError, Result};
use crate::grid::quadrature::{QuadRule, CELL_POINTS};
use crate::grid::{Field1D, Grid1D};
use crate::wspace::{weighted_norm, WeightedNormSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum OperatorKind {
    /// `κ r ∂² + (1+bκ) ∂r ∂`.
    L1 { b: f64 },
    /// `κ ∂(r ∂·) + ∂(∂r ·)`; the curl part vanishes in one dimension.
    L2L3,
    /// `κ ∂(r ∂·) + (1+bκ) ∂r ∂`.
    L2Tilde { b: f64 },
}

impl OperatorKind {
    /// Exponent `e` of the mass weight `r^e`.
    pub fn mass_exponent(&self, kappa: f64) -> f64 {
        match *self {
            OperatorKind::L1 { b } => b + 1.0 / kappa - 1.0,
            OperatorKind::L2L3 => 1.0 / kappa,
            OperatorKind::L2Tilde { b } => b + 1.0 / kappa,
        }
    }
}

#[derive(Clone, Debug)]
pub struct WeightedOperator {
    pub kind: OperatorKind,
    pub kappa: f64,
    /// Mass weight `r^{2τ}`.
    pub tau: f64,
    grid: Arc<Grid1D>,
    /// Lumped mass.
    pub mass: Vec<f64>,
    /// Symmetric tridiagonal stiffness: diagonal and first off-diagonal.
    pub k_diag: Vec<f64>,
    pub k_off: Vec<f64>,
}

/// Coefficients of `∫ a u'ũ' + b (uũ' + u'ũ) + c uũ`, each as `r^exp · mult(x)`.
struct FormTerm {
    exp: f64,
    kind: TermKind,
    mult: Box<dyn Fn(&QuadRule) -> Vec<f64>>,
}

#[derive(Clone, Copy, PartialEq)]
enum TermKind {
    Grad,
    Mixed,
    Zeroth,
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(FbeError::WeightFailure(format!("κ must be positive, got {kappa}")));
    }
    Ok(())
}

fn p1_basis(nodes: &[f64], c: usize, x: f64) -> ([f64; 2], [f64; 2]) {
    let h = nodes[c + 1] - nodes[c];
    ([(nodes[c + 1] - x) / h, (x - nodes[c]) / h], [-1.0 / h, 1.0 / h])
}

fn lumped_mass(r: &Field1D, exp: f64) -> Result<Vec<f64>> {
    let rule = QuadRule::weighted(r, exp);
    let nodes = r.grid().nodes();
    let mut m = vec![0.0; nodes.len()];
    for (q, (&x, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let c = q / CELL_POINTS;
        let (phi, _) = p1_basis(nodes, c, x);
        m[c] += w * phi[0];
        m[c + 1] += w * phi[1];
    }
    if m.iter().any(|v| !(*v > 0.0)) {
        return Err(FbeError::WeightFailure("nonpositive lumped mass".into()));
    }
    Ok(m)
}

fn assemble_terms(r: &Field1D, terms: &[FormTerm]) -> (Vec<f64>, Vec<f64>) {
    let nodes = r.grid().nodes();
    let n = nodes.len();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n - 1];
    for t in terms {
        let rule = QuadRule::weighted(r, t.exp);
        let mult = (t.mult)(&rule);
        for (q, (&x, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let c = q / CELL_POINTS;
            let (phi, dphi) = p1_basis(nodes, c, x);
            let wm = w * mult[q];
            let local = |i: usize, j: usize| match t.kind {
                TermKind::Grad => dphi[i] * dphi[j],
                TermKind::Mixed => phi[i] * dphi[j] + dphi[i] * phi[j],
                TermKind::Zeroth => phi[i] * phi[j],
            };
            diag[c] += wm * local(0, 0);
            diag[c + 1] += wm * local(1, 1);
            off[c] += wm * local(0, 1);
        }
    }
    (diag, off)
}

fn slope_at_points(r: &Field1D) -> Result<Vec<f64>> {
    Ok(r.derivative(1)?.into_values())
}

/// `L₁ᵇ = κ r^{1-γ} ∂(r^γ ∂·)`, `γ = b + 1/κ`, in `L²(r^{γ-1})`.
pub fn assemble_l1(r: &Field1D, kappa: f64, b: f64) -> Result<WeightedOperator> {
    check_kappa(kappa)?;
    divergence_form(r, kappa, b + 1.0 / kappa, OperatorKind::L1 { b })
}

/// `L̃₂ᵇ = κ r^{1-γ} ∂(r^γ ∂·)`, `γ = 1 + b + 1/κ`, in `L²(r^{γ-1})`.
pub fn assemble_l2_tilde(r: &Field1D, kappa: f64, b: f64) -> Result<WeightedOperator> {
    check_kappa(kappa)?;
    divergence_form(r, kappa, 1.0 + b + 1.0 / kappa, OperatorKind::L2Tilde { b })
}

fn divergence_form(r: &Field1D, kappa: f64, gamma: f64, kind: OperatorKind) -> Result<WeightedOperator> {
    if !(gamma - 1.0 > -1.0) {
        return Err(FbeError::WeightFailure(format!("mass weight r^{} is not integrable", gamma - 1.0)));
    }
    let terms = [FormTerm {
        exp: gamma,
        kind: TermKind::Grad,
        mult: Box::new(move |rule: &QuadRule| vec![kappa; rule.points.len()]),
    }];
    let (k_diag, k_off) = assemble_terms(r, &terms);
    let mass = lumped_mass(r, gamma - 1.0)?;
    Ok(WeightedOperator {
        kind,
        kappa,
        tau: 0.5 * (gamma - 1.0),
        grid: r.grid_arc().clone(),
        mass,
        k_diag,
        k_off,
    })
}

/// `L₂ w = ∂(κ r ∂w + ∂r w)` in `L²(r^{1/κ})`, stiffness `κ⁻¹∫ r^{1/κ-1} G G̃`, `G = κ r w' + r' w`.
pub fn assemble_l2l3(r: &Field1D, kappa: f64) -> Result<WeightedOperator> {
    check_kappa(kappa)?;
    let slope = slope_at_points(r)?;
    let s1 = slope.clone();
    let s2 = slope;
    let terms = [
        FormTerm {
            exp: 1.0 / kappa + 1.0,
            kind: TermKind::Grad,
            mult: Box::new(move |rule: &QuadRule| vec![kappa; rule.points.len()]),
        },
        FormTerm { exp: 1.0 / kappa, kind: TermKind::Mixed, mult: Box::new(move |rule: &QuadRule| rule.sample(&s1)) },
        FormTerm {
            exp: 1.0 / kappa - 1.0,
            kind: TermKind::Zeroth,
            mult: Box::new(move |rule: &QuadRule| rule.sample(&s2).into_iter().map(|d| d * d / kappa).collect()),
        },
    ];
    let (k_diag, k_off) = assemble_terms(r, &terms);
    let mass = lumped_mass(r, 1.0 / kappa)?;
    Ok(WeightedOperator {
        kind: OperatorKind::L2L3,
        kappa,
        tau: 0.5 / kappa,
        grid: r.grid_arc().clone(),
        mass,
        k_diag,
        k_off,
    })
}

/// Plain-matrix tridiagonal solve (Thomas), `sub[i]` couples `i+1 → i`, `sup[i]` couples `i → i+1`.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    c[0] = if n > 1 { sup[0] / denom } else { 0.0 };
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - sub[i - 1] * c[i - 1];
        if i + 1 < n {
            c[i] = sup[i] / denom;
        }
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

impl WeightedOperator {
    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// `K f`.
    pub fn stiffness_apply(&self, f: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.k_diag[i] * f[i];
                if i > 0 {
                    s += self.k_off[i - 1] * f[i - 1];
                }
                if i + 1 < n {
                    s += self.k_off[i] * f[i + 1];
                }
                s
            })
            .collect()
    }

    /// `L f = -M⁻¹ K f`.
    pub fn apply_values(&self, f: &[f64]) -> Vec<f64> {
        self.stiffness_apply(f).into_iter().zip(&self.mass).map(|(k, m)| -k / m).collect()
    }

    pub fn apply(&self, f: &Field1D) -> Result<Field1D> {
        f.with_values(self.apply_values(f.values()))
    }

    /// `⟨f, g⟩ = Σ M_i f_i g_i`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.mass.iter().zip(f).zip(g).map(|((m, a), b)| m * a * b).sum()
    }

    pub fn norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).sqrt()
    }

    /// `|⟨Lf,g⟩ - ⟨f,Lg⟩|` relative to `‖Lf‖‖g‖ + ‖f‖‖Lg‖`.
    pub fn self_adjoint_defect(&self, f: &[f64], g: &[f64]) -> f64 {
        let lf = self.apply_values(f);
        let lg = self.apply_values(g);
        let d = (self.inner(&lf, g) - self.inner(f, &lg)).abs();
        let scale = self.norm(&lf) * self.norm(g) + self.norm(f) * self.norm(&lg);
        if scale == 0.0 {
            0.0
        } else {
            d / scale
        }
    }

    /// `(M + εK)⁻¹ M f`, i.e. `(1 - εL)⁻¹ f`.
    pub fn resolvent(&self, eps: f64, f: &[f64]) -> Vec<f64> {
        let diag: Vec<f64> = self.mass.iter().zip(&self.k_diag).map(|(m, k)| m + eps * k).collect();
        let off: Vec<f64> = self.k_off.iter().map(|k| eps * k).collect();
        let rhs: Vec<f64> = self.mass.iter().zip(f).map(|(m, v)| m * v).collect();
        solve_tridiagonal(&off, &diag, &off, &rhs)
    }

    /// Generalized eigenproblem `K u = λ M u` through `M^{-1/2} K M^{-1/2}`.
    pub fn eigen(&self) -> Result<SpectralDecomposition> {
        let n = self.len();
        let inv_sqrt: Vec<f64> = self.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = self.k_diag[i] * inv_sqrt[i] * inv_sqrt[i];
            if i + 1 < n {
                let v = self.k_off[i] * inv_sqrt[i] * inv_sqrt[i + 1];
                a[(i, i + 1)] = v;
                a[(i + 1, i)] = v;
            }
        }
        let eig = SymmetricEigen::try_new(a, f64::EPSILON, 0)
            .ok_or_else(|| FbeError::SpectralFailure("symmetric eigensolver did not converge".into()))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
        let mut values = Vec::with_capacity(n);
        let mut vectors = DMatrix::<f64>::zeros(n, n);
        for (col, &i) in order.iter().enumerate() {
            values.push(eig.eigenvalues[i]);
            for p in 0..n {
                vectors[(p, col)] = eig.eigenvectors[(p, i)] * inv_sqrt[p];
            }
        }
        let lmax = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-8 * lmax.max(1.0);
        for (col, &lam) in values.iter().enumerate() {
            let u: Vec<f64> = vectors.column(col).iter().copied().collect();
            let lu = self.apply_values(&u);
            let res: Vec<f64> = lu.iter().zip(&u).map(|(a, b)| a + lam * b).collect();
            if self.norm(&res) > tol * (1.0 + lam.abs()) {
                return Err(FbeError::SpectralFailure(format!("eigenpair {col} residual too large")));
            }
        }
        Ok(SpectralDecomposition { eigenvalues: values, vectors, mass: self.mass.clone() })
    }
}

/// Eigenpairs of `-L`, ascending, with `M`-orthonormal eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub vectors: DMatrix<f64>,
    mass: Vec<f64>,
}

impl SpectralDecomposition {
    pub fn coefficients(&self, f: &[f64]) -> Vec<f64> {
        let mf = DVector::from_iterator(f.len(), f.iter().zip(&self.mass).map(|(a, m)| a * m));
        (self.vectors.transpose() * mf).iter().copied().collect()
    }

    /// `Σ φ(λ_i) ⟨f,u_i⟩ u_i`.
    pub fn apply_multiplier(&self, phi: impl Fn(f64) -> f64, f: &[f64]) -> Vec<f64> {
        let c = self.coefficients(f);
        let scaled = DVector::from_iterator(c.len(), c.iter().zip(&self.eigenvalues).map(|(a, l)| a * phi(*l)));
        (&self.vectors * scaled).iter().copied().collect()
    }

    pub fn spectrum_csv(&self) -> String {
        let mut s = String::from("i,lambda\n");
        for (i, l) in self.eigenvalues.iter().enumerate() {
            s.push_str(&format!("{i},{l:.12e}\n"));
        }
        s
    }
}

/// The multiplier `χ` with `χ(0) = 1`, `χ ≈ 1 - λ` near 0 and `χ ≈ 1/λ` at infinity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum Multiplier {
    /// `χ(λ) = 1/(1+λ)`.
    #[default]
    Resolvent,
    /// `χ(λ) = (1 + λ + λ²/2)^{-1}·(1 + λ/2)`; same asymptotics, flatter near 0.
    Pade,
}

impl Multiplier {
    pub fn eval(&self, lam: f64) -> f64 {
        match self {
            Multiplier::Resolvent => 1.0 / (1.0 + lam),
            Multiplier::Pade => (1.0 + 0.5 * lam) / (1.0 + lam + 0.5 * lam * lam),
        }
    }
}

/// `χ_ε(L) f = χ(-εL) f`; the resolvent goes through a tridiagonal solve, other multipliers
/// through the spectral decomposition.
pub fn functional_calculus(op: &WeightedOperator, chi: Multiplier, eps: f64, f: &[f64]) -> Result<Vec<f64>> {
    match chi {
        Multiplier::Resolvent => Ok(op.resolvent(eps, f)),
        _ => {
            let sd = op.eigen()?;
            Ok(sd.apply_multiplier(|l| chi.eval(eps * l.max(0.0)), f))
        }
    }
}

/// Strong-form action with finite-difference derivatives.
pub fn strong_apply(kind: OperatorKind, r: &Field1D, kappa: f64, f: &Field1D) -> Result<Field1D> {
    let r1 = r.derivative(1)?;
    let f1 = f.derivative(1)?;
    let f2 = f.derivative(2)?;
    let n = f.values().len();
    let rv = r.values();
    let vals: Vec<f64> = match kind {
        OperatorKind::L1 { b } => {
            (0..n).map(|i| kappa * rv[i] * f2.values()[i] + (1.0 + b * kappa) * r1.values()[i] * f1.values()[i]).collect()
        }
        OperatorKind::L2Tilde { b } => (0..n)
            .map(|i| kappa * rv[i] * f2.values()[i] + (kappa + 1.0 + b * kappa) * r1.values()[i] * f1.values()[i])
            .collect(),
        OperatorKind::L2L3 => {
            let r2 = r.derivative(2)?;
            (0..n)
                .map(|i| {
                    kappa * rv[i] * f2.values()[i]
                        + (kappa + 1.0) * r1.values()[i] * f1.values()[i]
                        + r2.values()[i] * f.values()[i]
                })
                .collect()
        }
    };
    f.with_values(vals)
}

#[derive(Clone, Debug, Serialize)]
pub struct CoercivityReport {
    pub kind: OperatorKind,
    pub sigma: f64,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

/// Elliptic ratio `‖f‖_{H^{2,σ+a}} / (‖P f‖_{H^{0,σ+a-1}} + ‖f‖_{H^{0,σ+a}})`, `σ = 1/(2κ)`,
/// with `a = 1/2` for `L₁ᵇ` and `a = 1` for the velocity operators.
pub fn audit_coercivity(kind: OperatorKind, r: &Field1D, kappa: f64, ensemble: &[Field1D]) -> Result<CoercivityReport> {
    let sigma = 0.5 / kappa;
    let a = match kind {
        OperatorKind::L1 { .. } => 0.5,
        _ => 1.0,
    };
    let mut ratios = Vec::with_capacity(ensemble.len());
    for f in ensemble {
        let lf = strong_apply(kind, r, kappa, f)?;
        let num = weighted_norm(f, r, WeightedNormSpec { j: 2, sigma: sigma + a })?;
        let den = weighted_norm(&lf, r, WeightedNormSpec { j: 0, sigma: sigma + a - 1.0 })?
            + weighted_norm(f, r, WeightedNormSpec { j: 0, sigma: sigma + a })?;
        ratios.push(if den > 0.0 { num / den } else { 0.0 });
    }
    let max_ratio = ratios.iter().fold(0.0f64, |m, v| m.max(*v));
    Ok(CoercivityReport { kind, sigma, ratios, max_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;

    fn setup(n: usize) -> (Arc<Grid1D>, Field1D) {
        let g = Arc::new(Grid1D::graded(0.0, 1.0, n, 0.5).unwrap());
        let r = Field1D::from_fn(g.clone(), |x| x * (1.0 - x)).unwrap();
        (g, r)
    }

    #[test]
    fn l1_on_linear_function_matches_divergence_form() {
        let (g, r) = setup(200);
        let op = assemble_l1(&r, 1.0, 0.0).unwrap();
        let s: Vec<f64> = g.nodes().to_vec();
        let ls = op.apply_values(&s);
        let nodes = g.nodes();
        for i in 10..nodes.len() - 10 {
            assert!((ls[i] - (1.0 - 2.0 * nodes[i])).abs() < 1e-3, "i={i}");
        }
        let c = vec![1.0; nodes.len()];
        assert!(op.apply_values(&c).iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn l2_on_constant_matches_second_derivative_of_r() {
        let (g, r) = setup(200);
        let op = assemble_l2l3(&r, 1.0).unwrap();
        let w = vec![1.0; g.len()];
        let lw = op.apply_values(&w);
        for i in 10..g.len() - 10 {
            assert!((lw[i] + 2.0).abs() < 1e-2, "i={i} got {}", lw[i]);
        }
    }

    #[test]
    fn self_adjoint_and_nonnegative() {
        let (g, r) = setup(120);
        for op in [assemble_l1(&r, 1.0, 0.0).unwrap(), assemble_l2l3(&r, 2.0).unwrap(), assemble_l2_tilde(&r, 0.5, 0.3).unwrap()] {
            let f: Vec<f64> = g.nodes().iter().map(|x| (3.0 * x).sin()).collect();
            let h: Vec<f64> = g.nodes().iter().map(|x| x.exp() - x * x).collect();
            assert!(op.self_adjoint_defect(&f, &h) < 1e-12);
            let sd = op.eigen().unwrap();
            let lmax = *sd.eigenvalues.last().unwrap();
            assert!(sd.eigenvalues[0] >= -1e-8 * lmax);
        }
    }

    #[test]
    fn resolvent_matches_spectral_calculus() {
        let (g, r) = setup(80);
        let op = assemble_l1(&r, 1.0, 0.0).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|x| (5.0 * x).cos()).collect();
        let fast = op.resolvent(0.01, &f);
        let sd = op.eigen().unwrap();
        let slow = sd.apply_multiplier(|l| 1.0 / (1.0 + 0.01 * l), &f);
        let d: f64 = fast.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(d < 1e-10);
        assert!(op.norm(&fast) <= op.norm(&f));
    }
}
