//! Weighted Sobolev norms, the energy space ℋ and its scale ℋ^{2k}, the control
//! parameters A and B, embedding and interpolation audits, frequency envelopes.

use serde::{Deserialize, Serialize};

use crate::error::{FbeError, Result};
use crate::grid::quadrature::QuadRule;
use crate::grid::{Field1D, State};

/// `H^{j,σ}`: `Σ_{α≤j} ∫ r^{2σ} |∂^α f|²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormSpec {
    pub j: usize,
    pub sigma: f64,
}

fn same_grid(a: &Field1D, b: &Field1D) -> Result<()> {
    if a.values().len() != b.values().len() || a.grid().nodes() != b.grid().nodes() {
        return Err(FbeError::Invalid("fields live on different grids".into()));
    }
    Ok(())
}

/// `‖f‖_{H^{j,σ}}` with Gauss–Jacobi treatment of the boundary cells.
pub fn weighted_norm(f: &Field1D, r: &Field1D, spec: WeightedNormSpec) -> Result<f64> {
    if !(spec.sigma > -0.5) {
        return Err(FbeError::WeightNotIntegrable(spec.sigma));
    }
    same_grid(f, r)?;
    let rule = QuadRule::weighted(r, 2.0 * spec.sigma);
    let mut total = 0.0;
    for a in 0..=spec.j {
        let d = f.derivative(a)?;
        total += rule.norm2(d.values());
    }
    Ok(total.sqrt())
}

/// `‖(s,w)‖_ℋ² = ∫ r^{(1-κ)/κ}(s² + κ r w²)`.
pub fn h_norm2(s: &Field1D, w: &Field1D, r: &Field1D, kappa: f64) -> Result<f64> {
    same_grid(s, r)?;
    same_grid(w, r)?;
    let rs = QuadRule::weighted(r, (1.0 - kappa) / kappa);
    let rw = QuadRule::weighted(r, 1.0 / kappa);
    Ok(rs.norm2(s.values()) + kappa * rw.norm2(w.values()))
}

pub fn h_norm(s: &Field1D, w: &Field1D, r: &Field1D, kappa: f64) -> Result<f64> {
    Ok(h_norm2(s, w, r, kappa)?.sqrt())
}

/// Exponents of the ℋ^{2k} scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct H2kSpec {
    pub k: usize,
    pub kappa: f64,
}

impl H2kSpec {
    pub fn wave_weight(&self) -> f64 {
        (1.0 - self.kappa) / (2.0 * self.kappa)
    }
    pub fn velocity_weight(&self) -> f64 {
        1.0 / (2.0 * self.kappa)
    }
    /// Admissible `(α, β)` pairs: `β ≤ 2k`, `β - α ≤ k`, `α ≤ k`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let k = self.k;
        let mut out = Vec::new();
        for alpha in 0..=k {
            for beta in 0..=(2 * k).min(alpha + k) {
                out.push((alpha, beta));
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct H2kComponent {
    pub alpha: usize,
    pub beta: usize,
    /// `‖r^α ∂^β (s,w)‖²_ℋ`.
    pub value2: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct H2kReport {
    pub k: usize,
    pub norm: f64,
    pub components: Vec<H2kComponent>,
}

/// `‖(s,w)‖_{ℋ^{2k}}` and its component table.
pub fn h2k_norm(s: &Field1D, w: &Field1D, r: &Field1D, kappa: f64, k: usize) -> Result<H2kReport> {
    same_grid(s, r)?;
    same_grid(w, r)?;
    let spec = H2kSpec { k, kappa };
    let ds: Vec<Field1D> = (0..=2 * k).map(|b| s.derivative(b)).collect::<Result<_>>()?;
    let dw: Vec<Field1D> = (0..=2 * k).map(|b| w.derivative(b)).collect::<Result<_>>()?;
    let mut comps = Vec::new();
    let mut total = 0.0;
    let mut rules: Vec<(QuadRule, QuadRule)> = Vec::new();
    for alpha in 0..=k {
        // r^{2α} folded into the weight exponent.
        let a = alpha as f64;
        rules.push((
            QuadRule::weighted(r, (1.0 - kappa) / kappa + 2.0 * a),
            QuadRule::weighted(r, 1.0 / kappa + 2.0 * a),
        ));
    }
    for (alpha, beta) in spec.pairs() {
        let (rs, rw) = &rules[alpha];
        let v = rs.norm2(ds[beta].values()) + kappa * rw.norm2(dw[beta].values());
        total += v;
        comps.push(H2kComponent { alpha, beta, value2: v });
    }
    Ok(H2kReport { k, norm: total.sqrt(), components: comps })
}

/// Indices of the nodes in each boundary collar (`r ≤ fraction · max r` next to a root).
pub fn collars(r: &Field1D, fraction: f64) -> Vec<Vec<usize>> {
    let v = r.values();
    let n = v.len();
    let rmax = v.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-12 * rmax;
    let cut = fraction * rmax;
    let mut out = Vec::new();
    if v[0].abs() <= tol {
        let mut c = Vec::new();
        let mut i = 0;
        while i < n && v[i] <= cut {
            c.push(i);
            i += 1;
        }
        out.push(c);
    }
    if v[n - 1].abs() <= tol {
        let mut c = Vec::new();
        let mut i = n - 1;
        loop {
            if v[i] > cut {
                break;
            }
            c.push(i);
            if i == 0 {
                break;
            }
            i -= 1;
        }
        out.push(c);
    }
    out
}

/// `sup_{x≠y} |f(x)-f(y)| / |x-y|^{1/2}` over node pairs.
pub fn holder_half(f: &Field1D) -> f64 {
    let x = f.grid().nodes();
    let v = f.values();
    let n = x.len();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let q = (v[i] - v[j]).abs() / (x[j] - x[i]).sqrt();
            best = best.max(q);
        }
    }
    best
}

/// `sup |f(x)-f(y)| / (r(x)^{1/2} + r(y)^{1/2} + |x-y|^{1/2})` over node pairs.
pub fn holder_tilde(f: &Field1D, r: &Field1D) -> f64 {
    let x = f.grid().nodes();
    let v = f.values();
    let sr: Vec<f64> = r.values().iter().map(|q| q.max(0.0).sqrt()).collect();
    let n = x.len();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let q = (v[i] - v[j]).abs() / (sr[i] + sr[j] + (x[j] - x[i]).sqrt());
            best = best.max(q);
        }
    }
    best
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ControlParams {
    pub a: f64,
    pub b: f64,
    /// Reference slope per collar.
    pub n: Vec<f64>,
    pub collar_fraction: f64,
    /// `max_collars ‖∂r - N‖_{L∞(collar)}`.
    pub a_slope: f64,
    /// `[v]_{Ċ^{1/2}}`.
    pub a_holder: f64,
    /// `[∂r]_{C̃^{0,1/2}}`.
    pub b_tilde: f64,
    /// `‖∂v‖_{L∞}`.
    pub b_dv: f64,
}

pub const DEFAULT_COLLAR: f64 = 0.1;

/// Control parameter A. With `n = None` each collar uses the slope that minimizes the sup.
pub fn control_a_fields(r: &Field1D, v: &Field1D, n: Option<&[f64]>, fraction: f64) -> Result<(f64, Vec<f64>, f64, f64)> {
    let dr = r.derivative(1)?;
    let cols = collars(r, fraction);
    let mut slopes = Vec::new();
    let mut a_slope = 0.0f64;
    for (ci, c) in cols.iter().enumerate() {
        if c.is_empty() {
            continue;
        }
        let vals: Vec<f64> = c.iter().map(|&i| dr.values()[i]).collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let nref = match n {
            Some(ns) => ns.get(ci).or(ns.last()).copied().unwrap_or(0.5 * (lo + hi)),
            None => 0.5 * (lo + hi),
        };
        let dev = vals.iter().map(|d| (d - nref).abs()).fold(0.0, f64::max);
        a_slope = a_slope.max(dev);
        slopes.push(nref);
    }
    let hv = holder_half(v);
    Ok((a_slope + hv, slopes, a_slope, hv))
}

pub fn control_a(state: &State, n: Option<&[f64]>) -> Result<f64> {
    Ok(control_a_fields(&state.r, &state.v, n, DEFAULT_COLLAR)?.0)
}

pub fn control_b_fields(r: &Field1D, v: &Field1D) -> Result<(f64, f64, f64)> {
    let dr = r.derivative(1)?;
    let dv = v.derivative(1)?;
    let bt = holder_tilde(&dr, r);
    let bd = dv.max_abs();
    Ok((bt + bd, bt, bd))
}

pub fn control_b(state: &State) -> Result<f64> {
    Ok(control_b_fields(&state.r, &state.v)?.0)
}

pub fn control_params(state: &State) -> Result<ControlParams> {
    let (a, n, a_slope, a_holder) = control_a_fields(&state.r, &state.v, None, DEFAULT_COLLAR)?;
    let (b, b_tilde, b_dv) = control_b_fields(&state.r, &state.v)?;
    Ok(ControlParams { a, b, n, collar_fraction: DEFAULT_COLLAR, a_slope, a_holder, b_tilde, b_dv })
}

/// `‖f‖_{H^{s2,σ2}} / ‖f‖_{H^{s1,σ1}}` for a Hardy-admissible trade.
pub fn audit_hardy(f: &Field1D, r: &Field1D, s1: usize, sigma1: f64, s2: usize, sigma2: f64) -> Result<f64> {
    let ds = s1 as f64 - s2 as f64;
    if !(ds > 0.0) || (ds - (sigma1 - sigma2)).abs() > 1e-12 || !(sigma2 > -0.5) {
        return Err(FbeError::ParameterMismatch(format!(
            "need s1-s2 = σ1-σ2 > 0 and σ2 > -1/2, got s=({s1},{s2}) σ=({sigma1},{sigma2})"
        )));
    }
    let num = weighted_norm(f, r, WeightedNormSpec { j: s2, sigma: sigma2 })?;
    let den = weighted_norm(f, r, WeightedNormSpec { j: s1, sigma: sigma1 })?;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(num / den)
}

/// Which endpoint the interpolation inequality uses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum InterpVariant {
    /// Weighted `L^{p0}` – `L^{pm}` endpoints.
    G { p0: f64, pm: f64, sigma0: f64, sigma_m: f64 },
    /// `Ċ^{1/2}` lower endpoint.
    C { sigma_m: f64 },
    /// `C̃^{0,1/2}` lower endpoint.
    D { sigma_m: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InterpAudit {
    pub theta: f64,
    pub sigma_j: f64,
    pub p_j: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// 0/0: both sides vanish.
    pub vacuous: bool,
}

/// `‖r^σ g‖_{L^p}`; `p = ∞` is the nodal sup.
pub fn weighted_lp(g: &Field1D, r: &Field1D, sigma: f64, p: f64) -> Result<f64> {
    if p.is_infinite() {
        if sigma < 0.0 {
            return Err(FbeError::InadmissibleExponents("negative weight with p = ∞".into()));
        }
        return Ok(g
            .values()
            .iter()
            .zip(r.values())
            .map(|(a, b)| a.abs() * b.max(0.0).powf(sigma))
            .fold(0.0, f64::max));
    }
    if !(sigma * p > -1.0) {
        return Err(FbeError::InadmissibleExponents(format!("σp = {} ≤ -1 is not integrable", sigma * p)));
    }
    let rule = QuadRule::weighted(r, sigma * p);
    let s = rule.sample(g.values());
    let v: Vec<f64> = s.iter().map(|x| x.abs().powf(p)).collect();
    Ok(rule.sum(&v).powf(1.0 / p))
}

fn inv(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

/// Interpolation audit `‖r^{σ_j}∂^j f‖_{L^{p_j}} / (X^{1-θ}(Y + X)^θ)` with `X` the lower
/// endpoint norm and `Y` the top-order norm.
pub fn audit_interpolation(f: &Field1D, r: &Field1D, variant: InterpVariant, m: usize, j: usize) -> Result<InterpAudit> {
    if !(0 < j && j < m) {
        return Err(FbeError::InadmissibleExponents(format!("need 0 < j < m, got j={j}, m={m}")));
    }
    let (mf, jf) = (m as f64, j as f64);
    let (theta, sigma_j, pj_inv, lower, top) = match variant {
        InterpVariant::G { p0, pm, sigma0, sigma_m } => {
            let th = jf / mf;
            let pji = (1.0 - th) * inv(p0) + th * inv(pm);
            let sj = sigma0 * (1.0 - th) + sigma_m * th;
            if !(mf - sigma_m - (inv(pm) - inv(p0)) > -sigma0) {
                return Err(FbeError::InadmissibleExponents("m - σm - (1/pm - 1/p0) > -σ0 fails".into()));
            }
            let lower = weighted_lp(f, r, sigma0, p0)?;
            let top = weighted_lp(&f.derivative(m)?, r, sigma_m, pm)?;
            (th, sj, pji, lower, top)
        }
        InterpVariant::C { sigma_m } => {
            if !(sigma_m > -0.5) || !(mf - 1.0 - sigma_m > 0.0) {
                return Err(FbeError::InadmissibleExponents("need σm > -1/2 and m - 1 - σm > 0".into()));
            }
            let th = (2.0 * jf - 1.0) / (2.0 * mf - 1.0);
            let lower = holder_half(f);
            let top = weighted_lp(&f.derivative(m)?, r, sigma_m, 2.0)?;
            (th, sigma_m * th, th / 2.0, lower, top)
        }
        InterpVariant::D { sigma_m } => {
            if !(sigma_m > (mf - 2.0) / 2.0) || !(mf - 1.0 - sigma_m > 0.0) {
                return Err(FbeError::InadmissibleExponents("need σm > (m-2)/2 and m - 1 - σm > 0".into()));
            }
            let th = jf / mf;
            let lower = holder_tilde(f, r);
            let top = weighted_lp(&f.derivative(m)?, r, sigma_m, 2.0)?;
            (th, sigma_m * th - 0.5 * (1.0 - th), th / 2.0, lower, top)
        }
    };
    if !(sigma_j > -pj_inv) {
        return Err(FbeError::InadmissibleExponents(format!("σ_j = {sigma_j} ≤ -1/p_j = {}", -pj_inv)));
    }
    let pj = if pj_inv == 0.0 { f64::INFINITY } else { 1.0 / pj_inv };
    let lhs = weighted_lp(&f.derivative(j)?, r, sigma_j, pj)?;
    let rhs = lower.powf(1.0 - theta) * (top + lower).powf(theta);
    let scale = f.max_abs().max(1e-300);
    let (ratio, vacuous) = if rhs <= 1e-13 * scale {
        if lhs <= 1e-10 * scale {
            (0.0, true)
        } else {
            (f64::INFINITY, false)
        }
    } else {
        (lhs / rhs, false)
    };
    Ok(InterpAudit { theta, sigma_j, p_j: pj, lhs, rhs, ratio, vacuous })
}

/// Slowly varying envelope of dyadic pieces.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrequencyEnvelope {
    pub c: Vec<f64>,
    pub raw: Vec<f64>,
    pub delta: f64,
}

impl FrequencyEnvelope {
    pub fn l2_sum(&self) -> f64 {
        self.c.iter().map(|c| c * c).sum()
    }
}

/// `c_l = max_m 2^{-δ|l-m|} raw_m^{1/2}` with
/// `raw_l = 2^{2kl}‖piece_l‖²_ℋ + 2^{2l(k-N)}‖piece_l‖²_{ℋ^{2N}}`.
pub fn frequency_envelope(
    pieces: &[(Field1D, Field1D)],
    k: f64,
    big_n: usize,
    r: &Field1D,
    kappa: f64,
    delta: f64,
) -> Result<FrequencyEnvelope> {
    if pieces.is_empty() {
        return Err(FbeError::EmptyDecomposition);
    }
    if !(big_n as f64 > k) {
        return Err(FbeError::ParameterMismatch(format!("need N > k, got N={big_n}, k={k}")));
    }
    let mut raw = Vec::with_capacity(pieces.len());
    for (l, (s, w)) in pieces.iter().enumerate() {
        let lf = l as f64;
        let h0 = h_norm2(s, w, r, kappa)?;
        let hn = h2k_norm(s, w, r, kappa, big_n)?.norm.powi(2);
        raw.push(2f64.powf(2.0 * k * lf) * h0 + 2f64.powf(2.0 * lf * (k - big_n as f64)) * hn);
    }
    Ok(envelope_from_raw(&raw, delta))
}

/// Max-regularization of squared dyadic sizes.
pub fn envelope_from_raw(raw: &[f64], delta: f64) -> FrequencyEnvelope {
    let c = (0..raw.len())
        .map(|l| {
            raw.iter()
                .enumerate()
                .map(|(m, v)| 2f64.powf(-delta * (l as f64 - m as f64).abs()) * v.max(0.0).sqrt())
                .fold(0.0, f64::max)
        })
        .collect();
    FrequencyEnvelope { c, raw: raw.to_vec(), delta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use std::sync::Arc;

    fn setup(n: usize) -> (Arc<Grid1D>, Field1D) {
        let g = Arc::new(Grid1D::graded(0.0, 1.0, n, 0.5).unwrap());
        let r = Field1D::from_fn(g.clone(), |x| x * (1.0 - x)).unwrap();
        (g, r)
    }

    #[test]
    fn weighted_norm_examples() {
        let (g, r) = setup(128);
        let one = Field1D::from_fn(g, |_| 1.0).unwrap();
        let a = weighted_norm(&one, &r, WeightedNormSpec { j: 0, sigma: 0.0 }).unwrap();
        assert!((a - 1.0).abs() < 1e-12);
        let b = weighted_norm(&one, &r, WeightedNormSpec { j: 0, sigma: 0.5 }).unwrap();
        assert!((b - (1.0f64 / 6.0).sqrt()).abs() < 1e-12);
        let c = weighted_norm(&one, &r, WeightedNormSpec { j: 1, sigma: 0.5 }).unwrap();
        assert!((c - b).abs() < 1e-12);
        assert!(matches!(
            weighted_norm(&one, &r, WeightedNormSpec { j: 0, sigma: -0.5 }),
            Err(FbeError::WeightNotIntegrable(_))
        ));
    }

    #[test]
    fn singular_weight_is_integrated_exactly() {
        let (g, r) = setup(64);
        let one = Field1D::from_fn(g, |_| 1.0).unwrap();
        // ∫ (x(1-x))^{-0.6} dx = B(0.4, 0.4)
        let v = weighted_norm(&one, &r, WeightedNormSpec { j: 0, sigma: -0.3 }).unwrap().powi(2);
        let beta = 4.226169203171729; // B(0.4,0.4)
        assert!((v - beta).abs() < 1e-6 * beta, "{v}");
    }

    #[test]
    fn h_norm_examples() {
        let (g, r) = setup(128);
        let one = Field1D::from_fn(g.clone(), |_| 1.0).unwrap();
        let zero = Field1D::zeros(g);
        assert!((h_norm(&one, &zero, &r, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((h_norm(&zero, &one, &r, 1.0).unwrap() - (1.0f64 / 6.0).sqrt()).abs() < 1e-12);
        assert!((h_norm(&one, &zero, &r, 0.5).unwrap() - (1.0f64 / 6.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn envelope_examples() {
        let e = envelope_from_raw(&[4.0, 0.0, 0.0], 0.5);
        assert!((e.c[0] - 2.0).abs() < 1e-15);
        assert!((e.c[2] - 2.0 * 0.5).abs() < 1e-15);
        let e = envelope_from_raw(&[1.0, 0.0, 0.0, 1.0], 0.5);
        assert!((e.c[1] - 2f64.powf(-0.5) * e.c[0]).abs() < 1e-15);
    }

    #[test]
    fn holder_of_identity_is_one() {
        let g = Arc::new(Grid1D::uniform(0.0, 1.0, 50).unwrap());
        let v = Field1D::from_fn(g, |x| x).unwrap();
        assert!((holder_half(&v) - 1.0).abs() < 1e-12);
    }
}
