//! Symbolic material-derivative algebra on multilinear expressions in `r`, `v` and their
//! spatial derivatives, with coefficients that are exact polynomials in κ.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_rational::Ratio;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{FbeError, Result};
use crate::grid::{Field1D, State};

pub type Q = Ratio<i64>;

/// Largest good-variable index the engine generates.
pub const MAX_J: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Sym {
    R,
    V,
}

/// `∂^order sym`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Factor {
    pub sym: Sym,
    pub order: u32,
}

impl Factor {
    pub fn new(sym: Sym, order: u32) -> Self {
        Factor { sym, order }
    }

    /// `r ↦ -1`, `v ↦ -1/2`, each derivative `+1`.
    pub fn scaling_order(&self) -> Q {
        let base = match self.sym {
            Sym::R => Q::from_integer(-1),
            Sym::V => Q::new(-1, 2),
        };
        base + Q::from_integer(self.order as i64)
    }

    /// `∂^{≥2} r` or `∂^{≥1} v`.
    pub fn is_high(&self) -> bool {
        match self.sym {
            Sym::R => self.order >= 2,
            Sym::V => self.order >= 1,
        }
    }
}

/// Polynomial in κ, `Σ c_i κ^i`, trimmed of trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct KPoly(Vec<Q>);

impl KPoly {
    pub fn zero() -> Self {
        KPoly(Vec::new())
    }
    pub fn constant(c: Q) -> Self {
        let mut p = KPoly(vec![c]);
        p.trim();
        p
    }
    pub fn int(c: i64) -> Self {
        Self::constant(Q::from_integer(c))
    }
    pub fn kappa() -> Self {
        KPoly(vec![Q::zero(), Q::one()])
    }
    pub fn coeffs(&self) -> &[Q] {
        &self.0
    }
    fn trim(&mut self) {
        while self.0.last().map_or(false, |c| c.is_zero()) {
            self.0.pop();
        }
    }
    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }
    pub fn add(&self, o: &KPoly) -> KPoly {
        let n = self.0.len().max(o.0.len());
        let mut c = vec![Q::zero(); n];
        for (i, v) in self.0.iter().enumerate() {
            c[i] += *v;
        }
        for (i, v) in o.0.iter().enumerate() {
            c[i] += *v;
        }
        let mut p = KPoly(c);
        p.trim();
        p
    }
    pub fn neg(&self) -> KPoly {
        KPoly(self.0.iter().map(|c| -*c).collect())
    }
    pub fn mul(&self, o: &KPoly) -> KPoly {
        if self.is_zero() || o.is_zero() {
            return KPoly::zero();
        }
        let mut c = vec![Q::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                c[i + j] += *a * *b;
            }
        }
        let mut p = KPoly(c);
        p.trim();
        p
    }
    pub fn scale(&self, q: Q) -> KPoly {
        let mut p = KPoly(self.0.iter().map(|c| *c * q).collect());
        p.trim();
        p
    }
    pub fn eval(&self, kappa: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * kappa + c.to_f64().unwrap())
    }
}

impl fmt::Display for KPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.0.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            let show_c = !(a.is_one() && i > 0);
            if show_c {
                write!(f, "{a}")?;
            }
            match i {
                0 => {}
                1 => write!(f, "{}κ", if show_c { "·" } else { "" })?,
                _ => write!(f, "{}κ^{i}", if show_c { "·" } else { "" })?,
            }
        }
        Ok(())
    }
}

impl Serialize for KPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        v.serialize(s)
    }
}

/// A canonical sum of monomials; factor lists are sorted and zero terms are dropped.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Expr {
    terms: BTreeMap<Vec<Factor>, KPoly>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TermView {
    pub coefficient: KPoly,
    pub factors: Vec<Factor>,
}

impl Expr {
    pub fn zero() -> Self {
        Expr::default()
    }
    pub fn one() -> Self {
        Self::constant(KPoly::int(1))
    }
    pub fn constant(c: KPoly) -> Self {
        let mut e = Expr::zero();
        e.push(Vec::new(), c);
        e
    }
    pub fn sym(s: Sym, order: u32) -> Self {
        let mut e = Expr::zero();
        e.push(vec![Factor::new(s, order)], KPoly::int(1));
        e
    }
    pub fn r(order: u32) -> Self {
        Self::sym(Sym::R, order)
    }
    pub fn v(order: u32) -> Self {
        Self::sym(Sym::V, order)
    }

    /// Build from raw terms and normalize.
    pub fn from_terms(terms: impl IntoIterator<Item = (KPoly, Vec<Factor>)>) -> Self {
        let mut e = Expr::zero();
        for (c, f) in terms {
            e.push(f, c);
        }
        e
    }

    fn push(&mut self, mut factors: Vec<Factor>, c: KPoly) {
        if c.is_zero() {
            return;
        }
        factors.sort();
        let entry = self.terms.entry(factors).or_insert_with(KPoly::zero);
        *entry = entry.add(&c);
        if entry.is_zero() {
            let key: Vec<Vec<Factor>> =
                self.terms.iter().filter(|(_, v)| v.is_zero()).map(|(k, _)| k.clone()).collect();
            for k in key {
                self.terms.remove(&k);
            }
        }
    }

    /// Re-run canonicalization; idempotent.
    pub fn normalize(&self) -> Expr {
        Expr::from_terms(self.terms.iter().map(|(f, c)| (c.clone(), f.clone())))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn len(&self) -> usize {
        self.terms.len()
    }
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn terms(&self) -> impl Iterator<Item = (&Vec<Factor>, &KPoly)> {
        self.terms.iter()
    }
    pub fn term_views(&self) -> Vec<TermView> {
        self.terms.iter().map(|(f, c)| TermView { coefficient: c.clone(), factors: f.clone() }).collect()
    }

    pub fn add(&self, o: &Expr) -> Expr {
        let mut e = self.clone();
        for (f, c) in &o.terms {
            e.push(f.clone(), c.clone());
        }
        e
    }
    pub fn sub(&self, o: &Expr) -> Expr {
        self.add(&o.scale(&KPoly::int(-1)))
    }
    pub fn scale(&self, c: &KPoly) -> Expr {
        Expr::from_terms(self.terms.iter().map(|(f, k)| (k.mul(c), f.clone())))
    }
    pub fn scale_q(&self, q: Q) -> Expr {
        self.scale(&KPoly::constant(q))
    }
    pub fn mul(&self, o: &Expr) -> Expr {
        let mut e = Expr::zero();
        for (f1, c1) in &self.terms {
            for (f2, c2) in &o.terms {
                let mut f = f1.clone();
                f.extend_from_slice(f2);
                e.push(f, c1.mul(c2));
            }
        }
        e
    }

    /// Spatial derivative (Leibniz over factors).
    pub fn dx(&self) -> Expr {
        let mut e = Expr::zero();
        for (f, c) in &self.terms {
            for i in 0..f.len() {
                let mut g = f.clone();
                g[i].order += 1;
                e.push(g, c.clone());
            }
        }
        e
    }

    pub fn dx_n(&self, n: usize) -> Expr {
        (0..n).fold(self.clone(), |e, _| e.dx())
    }

    /// Material derivative with `D_t r = -κ r ∂v`, `D_t v = -∂r`, `D_t ∂ = ∂ D_t - (∂v) ∂`.
    pub fn dt(&self) -> Expr {
        DT_CACHE.with(|cache| {
            let mut cache = cache.borrow_mut();
            let mut e = Expr::zero();
            for (f, c) in &self.terms {
                for i in 0..f.len() {
                    let d = dt_factor(f[i], &mut cache);
                    let mut rest = f.clone();
                    rest.remove(i);
                    let rest_e = Expr::from_terms([(c.clone(), rest)]);
                    e = e.add(&rest_e.mul(&d));
                }
            }
            e
        })
    }

    pub fn dt_n(&self, n: usize) -> Expr {
        (0..n).fold(self.clone(), |e, _| e.dt())
    }

    /// Common scaling order of all terms, or `None` for the zero expression.
    pub fn scaling_order(&self) -> Option<Q> {
        self.terms.keys().next().map(|f| term_order(f))
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut orders = self.terms.keys().map(|f| term_order(f));
        match orders.next() {
            None => true,
            Some(o) => orders.all(|p| p == o),
        }
    }

    /// Total number of spatial derivatives of each term.
    pub fn derivative_counts(&self) -> Vec<u32> {
        self.terms.keys().map(|f| f.iter().map(|x| x.order).sum()).collect()
    }

    pub fn max_order(&self, s: Sym) -> u32 {
        self.terms.keys().flat_map(|f| f.iter().filter(|x| x.sym == s).map(|x| x.order)).max().unwrap_or(0)
    }

    /// Terms with fewer than two factors of type `∂^{≥2} r` or `∂^{≥1} v`.
    pub fn unbalanced_terms(&self) -> Vec<TermView> {
        self.terms
            .iter()
            .filter(|(f, _)| f.iter().filter(|x| x.is_high()).count() < 2)
            .map(|(f, c)| TermView { coefficient: c.clone(), factors: f.clone() })
            .collect()
    }

    pub fn is_balanced(&self) -> bool {
        self.unbalanced_terms().is_empty()
    }

    /// Coefficients evaluated at a numeric κ.
    pub fn numeric_terms(&self, kappa: f64) -> Vec<(f64, Vec<Factor>)> {
        self.terms.iter().map(|(f, c)| (c.eval(kappa), f.clone())).collect()
    }

    /// Evaluate given derivative tables `jr[a][p] = ∂^a r(x_p)`, `jv[a][p] = ∂^a v(x_p)`.
    pub fn eval_jets(&self, kappa: f64, jr: &[Vec<f64>], jv: &[Vec<f64>]) -> Vec<f64> {
        let npts = jr.first().map_or(0, |v| v.len());
        let mut out = vec![0.0; npts];
        for (c, f) in self.numeric_terms(kappa) {
            for (p, o) in out.iter_mut().enumerate() {
                let mut t = c;
                for x in &f {
                    t *= match x.sym {
                        Sym::R => jr[x.order as usize][p],
                        Sym::V => jv[x.order as usize][p],
                    };
                }
                *o += t;
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.term_views()).unwrap()
    }
}

fn term_order(f: &[Factor]) -> Q {
    f.iter().fold(Q::zero(), |acc, x| acc + x.scaling_order())
}

thread_local! {
    static DT_CACHE: std::cell::RefCell<HashMap<Factor, Expr>> = std::cell::RefCell::new(HashMap::new());
}

fn dt_factor(x: Factor, cache: &mut HashMap<Factor, Expr>) -> Expr {
    if let Some(e) = cache.get(&x) {
        return e.clone();
    }
    let e = if x.order == 0 {
        match x.sym {
            Sym::R => Expr::r(0).mul(&Expr::v(1)).scale(&KPoly::kappa().neg()),
            Sym::V => Expr::r(1).scale(&KPoly::int(-1)),
        }
    } else {
        let lower = dt_factor(Factor::new(x.sym, x.order - 1), cache);
        lower.dx().sub(&Expr::v(1).mul(&Expr::sym(x.sym, x.order)))
    };
    cache.insert(x, e.clone());
    e
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (fs, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            let mut i = 0;
            while i < fs.len() {
                let mut p = 1;
                while i + p < fs.len() && fs[i + p] == fs[i] {
                    p += 1;
                }
                let name = match fs[i].sym {
                    Sym::R => "r",
                    Sym::V => "v",
                };
                let base = if fs[i].order == 0 { name.to_string() } else { format!("{name}[{}]", fs[i].order) };
                if p > 1 {
                    write!(f, " {base}^{p}")?;
                } else {
                    write!(f, " {base}")?;
                }
                i += p;
            }
        }
        Ok(())
    }
}

/// `D_t^j r`.
pub fn r_j(j: usize) -> Expr {
    Expr::r(0).dt_n(j)
}

/// `D_t^j v`.
pub fn v_j(j: usize) -> Expr {
    Expr::v(0).dt_n(j)
}

/// Good variables `(s_j, w_j)`.
pub fn good_variable(j: usize) -> Result<(Expr, Expr)> {
    if j > MAX_J {
        return Err(FbeError::Invalid(format!("good variables are generated up to j = {MAX_J}")));
    }
    Ok(match j {
        0 => (Expr::r(0), Expr::v(0)),
        1 => (
            r_j(1).sub(&Expr::v(0).mul(&Expr::r(1))),
            v_j(1).sub(&Expr::v(0).mul(&Expr::v(1))),
        ),
        2 => (r_j(2).add(&Expr::r(1).mul(&Expr::r(1)).scale_q(Q::new(1, 2))), v_j(2)),
        _ => {
            let w_prev = v_j(j - 1);
            (r_j(j).sub(&Expr::r(1).mul(&w_prev)), v_j(j))
        }
    })
}

/// `f_{2k} = D_t s_{2k} + w_{2k} ∂r + κ r ∂w_{2k}`, `g_{2k} = D_t w_{2k} + ∂s_{2k}`.
pub fn source_terms(k: usize) -> Result<(Expr, Expr)> {
    if k == 0 {
        return Err(FbeError::Invalid("source terms need k ≥ 1".into()));
    }
    let (s, w) = good_variable(2 * k)?;
    let f = s.dt().add(&w.mul(&Expr::r(1))).add(&Expr::r(0).mul(&w.dx()).scale(&KPoly::kappa()));
    let g = w.dt().add(&s.dx());
    Ok((f, g))
}

/// `L₁ e = κ r ∂²e + ∂r ∂e`.
pub fn apply_l1(e: &Expr) -> Expr {
    Expr::r(0).mul(&e.dx_n(2)).scale(&KPoly::kappa()).add(&Expr::r(1).mul(&e.dx()))
}

/// `L₂ e = κ ∂(r ∂e) + ∂(∂r e)`.
pub fn apply_l2(e: &Expr) -> Expr {
    Expr::r(0).mul(&e.dx()).dx().scale(&KPoly::kappa()).add(&Expr::r(1).mul(e).dx())
}

/// Residuals `s_{2j} - L₁ s_{2j-2}` and `w_{2j} - L₂ w_{2j-2}`; every term must be balanced.
pub fn recurrence_check(j: usize) -> Result<(Expr, Expr)> {
    if j < 2 {
        return Err(FbeError::Invalid("recurrence is stated for j ≥ 2".into()));
    }
    let (s_hi, w_hi) = good_variable(2 * j)?;
    let (s_lo, w_lo) = good_variable(2 * j - 2)?;
    let rs = s_hi.sub(&apply_l1(&s_lo));
    let rw = w_hi.sub(&apply_l2(&w_lo));
    for (name, e) in [("s", &rs), ("w", &rw)] {
        if let Some(t) = e.unbalanced_terms().first() {
            return Err(FbeError::UnbalancedResidual(format!(
                "{name}-residual term ({}) {:?}",
                t.coefficient, t.factors
            )));
        }
    }
    Ok((rs, rw))
}

/// Pointwise evaluation on a state using finite-difference derivatives.
pub fn evaluate(e: &Expr, state: &State) -> Result<Field1D> {
    let kr = e.max_order(Sym::R) as usize;
    let kv = e.max_order(Sym::V) as usize;
    let jr = jets(&state.r, kr)?;
    let jv = jets(&state.v, kv)?;
    state.r.with_values(e.eval_jets(state.kappa, &jr, &jv))
}

/// Nodal derivative tables `[f, ∂f, …, ∂^n f]`.
pub fn jets(f: &Field1D, n: usize) -> Result<Vec<Vec<f64>>> {
    (0..=n).map(|a| f.derivative(a).map(|d| d.into_values())).collect()
}

/// Spectral derivatives `[f, ∂f, …, ∂^n f]` of periodic samples on `[0, length)`.
///
/// The Nyquist mode of even-length samples is dropped from odd derivatives.
pub fn periodic_jets(values: &[f64], length: f64, n: usize) -> Result<Vec<Vec<f64>>> {
    let m = values.len();
    if m < 8 {
        return Err(FbeError::InsufficientResolution(format!("spectral derivatives need ≥ 8 samples, got {m}")));
    }
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let mut hat: Vec<Complex<f64>> = values.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fwd.process(&mut hat);
    let wave = |i: usize| {
        let k = if i <= m / 2 { i as f64 } else { i as f64 - m as f64 };
        2.0 * std::f64::consts::PI * k / length
    };
    let mut out = vec![values.to_vec()];
    for order in 1..=n {
        let mut d: Vec<Complex<f64>> = hat
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if m % 2 == 0 && i == m / 2 && order % 2 == 1 {
                    Complex::new(0.0, 0.0)
                } else {
                    c * Complex::new(0.0, wave(i)).powu(order as u32)
                }
            })
            .collect();
        inv.process(&mut d);
        out.push(d.iter().map(|c| c.re / m as f64).collect());
    }
    Ok(out)
}

/// Evaluate `e` on periodic samples of `(r, v)` with spectral derivatives.
pub fn evaluate_periodic(e: &Expr, kappa: f64, r: &[f64], v: &[f64], length: f64) -> Result<Vec<f64>> {
    if r.len() != v.len() {
        return Err(FbeError::ParameterMismatch(format!("{} samples of r, {} of v", r.len(), v.len())));
    }
    let jr = periodic_jets(r, length, e.max_order(Sym::R) as usize)?;
    let jv = periodic_jets(v, length, e.max_order(Sym::V) as usize)?;
    Ok(e.eval_jets(kappa, &jr, &jv))
}

/// Relative sup gaps of the numeric recurrence on periodic data:
/// `s_{2j} - L₁S - ρ_s` with `S = s_{2j-2}` evaluated first and `L₁` applied to the
/// samples, and likewise `w_{2j} - L₂W - ρ_w`, where `(ρ_s, ρ_w)` are the symbolic residuals.
pub fn recurrence_gap_periodic(j: usize, kappa: f64, r: &[f64], v: &[f64], length: f64) -> Result<(f64, f64)> {
    let (rs, rw) = recurrence_check(j)?;
    let (s_hi, w_hi) = good_variable(2 * j)?;
    let (s_lo, w_lo) = good_variable(2 * j - 2)?;
    let s_hi = evaluate_periodic(&s_hi, kappa, r, v, length)?;
    let w_hi = evaluate_periodic(&w_hi, kappa, r, v, length)?;
    let ds = periodic_jets(&evaluate_periodic(&s_lo, kappa, r, v, length)?, length, 2)?;
    let dw = periodic_jets(&evaluate_periodic(&w_lo, kappa, r, v, length)?, length, 2)?;
    let rs = evaluate_periodic(&rs, kappa, r, v, length)?;
    let rw = evaluate_periodic(&rw, kappa, r, v, length)?;
    let jr = periodic_jets(r, length, 2)?;
    let sup = |x: &[f64]| x.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let mut gs = Vec::with_capacity(r.len());
    let mut gw = Vec::with_capacity(r.len());
    for i in 0..r.len() {
        let (r0, r1, r2) = (jr[0][i], jr[1][i], jr[2][i]);
        let l1 = kappa * r0 * ds[2][i] + r1 * ds[1][i];
        // κ∂(r∂W) + ∂(∂r W) expanded.
        let l2 = kappa * (r1 * dw[1][i] + r0 * dw[2][i]) + r2 * dw[0][i] + r1 * dw[1][i];
        gs.push(s_hi[i] - l1 - rs[i]);
        gw.push(w_hi[i] - l2 - rw[i]);
    }
    Ok((sup(&gs) / sup(&s_hi).max(f64::MIN_POSITIVE), sup(&gw) / sup(&w_hi).max(f64::MIN_POSITIVE)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> KPoly {
        KPoly::kappa()
    }

    #[test]
    fn dt_of_r_and_v() {
        assert_eq!(Expr::r(0).dt(), Expr::r(0).mul(&Expr::v(1)).scale(&k().neg()));
        assert_eq!(Expr::v(0).dt(), Expr::r(1).scale(&KPoly::int(-1)));
    }

    #[test]
    fn second_material_derivative_of_r() {
        let expect = Expr::r(0)
            .mul(&Expr::r(2))
            .scale(&k())
            .add(&Expr::r(0).mul(&Expr::v(1)).mul(&Expr::v(1)).scale(&k().mul(&k().add(&KPoly::int(1)))));
        assert_eq!(r_j(2), expect);
    }

    #[test]
    fn s2_at_kappa_one() {
        let (s2, _) = good_variable(2).unwrap();
        let at1: Vec<(f64, Vec<Factor>)> = s2.numeric_terms(1.0);
        let expect = vec![
            (1.0, vec![Factor::new(Sym::R, 0), Factor::new(Sym::R, 2)]),
            (2.0, vec![Factor::new(Sym::R, 0), Factor::new(Sym::V, 1), Factor::new(Sym::V, 1)]),
            (0.5, vec![Factor::new(Sym::R, 1), Factor::new(Sym::R, 1)]),
        ];
        for e in expect {
            assert!(at1.iter().any(|t| t.1 == e.1 && (t.0 - e.0).abs() < 1e-15), "missing {:?}", e);
        }
        assert_eq!(at1.len(), 3);
    }

    #[test]
    fn scaling_order_increments_by_half() {
        for j in 0..6 {
            let e = r_j(j);
            assert!(e.is_homogeneous());
            assert_eq!(e.scaling_order().unwrap(), Q::new(-2 + j as i64, 2));
        }
    }

    #[test]
    fn source_terms_are_balanced_with_expected_order() {
        for kk in 1..=2 {
            let (f, g) = source_terms(kk).unwrap();
            assert!(f.is_balanced() && g.is_balanced());
            assert_eq!(f.scaling_order().unwrap(), Q::new(2 * kk as i64 - 1, 2));
            assert_eq!(g.scaling_order().unwrap(), Q::from_integer(kk as i64));
        }
    }

    #[test]
    fn recurrence_residuals_are_balanced() {
        for j in 2..=3 {
            let (rs, rw) = recurrence_check(j).unwrap();
            assert!(rs.derivative_counts().iter().all(|&c| c == 2 * j as u32));
            assert!(rw.is_balanced());
        }
        let (rs, _) = recurrence_check(2).unwrap();
        let has = rs.terms().any(|(f, _)| {
            *f == vec![Factor::new(Sym::R, 0), Factor::new(Sym::R, 2), Factor::new(Sym::R, 2)]
        });
        assert!(has);
    }

    #[test]
    fn normalize_is_idempotent() {
        let e = good_variable(4).unwrap().0;
        assert_eq!(e.normalize(), e);
        assert_eq!(e.normalize().normalize(), e.normalize());
    }
}
