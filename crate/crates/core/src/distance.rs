//! Distances between two states on possibly different domains: the nondegenerate `D_ℋ`,
//! the degenerate `D̃_ℋ` built from the homogeneous weights `(a, b)`, and the boundary
//! term that measures how far apart the free boundaries are.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FbeError, Result};
use crate::grid::quadrature::{gauss_legendre01, QuadRule};
use crate::grid::{Field1D, Grid1D, State, DEFAULT_THETA};
use crate::kernels::{smooth_step, tanh_sinh};

/// Relative size of `D̃_ℋ` below which the equivalence ratio is not formed.
pub const DEGENERATE_TOL: f64 = 1e-14;
/// Largest boundary offset, relative to the shorter domain, for which states are compared.
pub const LIPSCHITZ_GATE: f64 = 0.2;

fn smooth_step_deriv(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        return 0.0;
    }
    let f = |t: f64| (-1.0 / t).exp();
    let df = |t: f64| f(t) / (t * t);
    let (a, b) = (f(u), f(1.0 - u));
    (df(u) * b + a * df(1.0 - u)) / ((a + b) * (a + b))
}

fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

fn bump_deriv(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        return 0.0;
    }
    let q = 1.0 - t * t;
    bump(t) * (-2.0 * t / (q * q))
}

/// `A(θ) = a₀(θ) + C a₁(θ)` with `a(μ,ν) = A(ν/μ)` and `b = μa/2`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct WeightProfile {
    pub kappa: f64,
    pub sigma: f64,
    pub c: f64,
    /// `∫₀^{1/2} θ^{-σ} a₀'` and `∫₀^{1/2} θ^{-σ} a₁'`.
    pub i0: f64,
    pub i1: f64,
}

impl WeightProfile {
    /// Plateau: 1 on `|θ| ≤ 1/4`, 0 from `|θ| = 1/2` on.
    pub fn a0(&self, theta: f64) -> f64 {
        1.0 - smooth_step(4.0 * (theta.abs() - 0.25))
    }
    /// Correction bump on `1/4 < |θ| < 1/2`.
    pub fn a1(&self, theta: f64) -> f64 {
        bump(8.0 * (theta.abs() - 0.375))
    }
    pub fn profile(&self, theta: f64) -> f64 {
        self.a0(theta) + self.c * self.a1(theta)
    }
    /// `dA/dθ`.
    pub fn profile_deriv(&self, theta: f64) -> f64 {
        let sg = theta.signum();
        let u = theta.abs();
        sg * (-4.0 * smooth_step_deriv(4.0 * (u - 0.25)) + self.c * 8.0 * bump_deriv(8.0 * (u - 0.375)))
    }
    pub fn a(&self, mu: f64, nu: f64) -> f64 {
        if mu <= 0.0 {
            return 0.0;
        }
        self.profile(nu / mu)
    }
    pub fn b(&self, mu: f64, nu: f64) -> f64 {
        0.5 * mu * self.a(mu, nu)
    }
    /// `∂a/∂μ` at fixed `ν`.
    pub fn a_mu(&self, mu: f64, nu: f64) -> f64 {
        self.profile_deriv(nu / mu) * (-nu / (mu * mu))
    }
    pub fn max_profile(&self) -> f64 {
        (0..=2000).map(|i| self.profile(0.5 * i as f64 / 2000.0)).fold(0.0, f64::max)
    }

    /// `∫ μ^σ ∂_μ a(μ,ν) dμ` by composite Gauss–Legendre in `log μ` over
    /// `[2ν(1+10⁻⁶), 10³ν]`, independent of the `θ`-reduction used to fix `C`.
    pub fn moment_direct(&self, nu: f64) -> f64 {
        let (lo, hi) = ((2.0 * nu * (1.0 + 1e-6)).ln(), (1e3 * nu).ln());
        let panels = 4000;
        let (gx, gw) = gauss_legendre01(8);
        let h = (hi - lo) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let a = lo + p as f64 * h;
            for (t, w) in gx.iter().zip(&gw) {
                let s = a + h * t;
                let mu = s.exp();
                total += w * h * mu * mu.powf(self.sigma) * self.a_mu(mu, nu);
            }
        }
        total
    }

    /// `∫ μ^σ |∂_μ a| dμ`, the natural scale for [`moment_direct`](Self::moment_direct).
    pub fn moment_scale(&self, nu: f64) -> f64 {
        nu.powf(self.sigma) * (self.i0.abs() + self.c * self.i1.abs())
    }
}

/// `∫_{1/4}^{1/2} θ^{-σ} g(θ) dθ` by tanh-sinh.
fn theta_integral(sigma: f64, g: impl Fn(f64) -> f64) -> f64 {
    let (ts, ws) = tanh_sinh(1.0 / 64.0);
    ts.iter()
        .zip(&ws)
        .map(|(t, w)| {
            let th = 0.375 + 0.125 * t;
            w * 0.125 * th.powf(-sigma) * g(th)
        })
        .sum()
}

/// Solve for `C` so that `∫ μ^σ a_μ dμ = 0` at fixed `ν`.
///
/// With `θ = ν/μ` the μ-integral equals `-ν^σ ∫₀^{1/2} θ^{-σ} A'(θ) dθ`, so the condition
/// is linear in `C`; the root is still located by bisection on a bracket.
pub fn make_weight_profile(kappa: f64) -> Result<WeightProfile> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(FbeError::Invalid(format!("kappa must be positive, got {kappa}")));
    }
    let sigma = 1.0 / kappa;
    let mut wp = WeightProfile { kappa, sigma, c: 0.0, i0: 0.0, i1: 0.0 };
    wp.i0 = theta_integral(sigma, |th| -4.0 * smooth_step_deriv(4.0 * (th - 0.25)));
    wp.i1 = theta_integral(sigma, |th| 8.0 * bump_deriv(8.0 * (th - 0.375)));
    let moment = |c: f64| wp.i0 + c * wp.i1;
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut tries = 0;
    while moment(lo).signum() == moment(hi).signum() {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err(FbeError::NoRoot(format!(
                "moment condition has no sign change on C ∈ [0, {hi:.3e}] (I0 = {:.3e}, I1 = {:.3e})",
                wp.i0, wp.i1
            )));
        }
    }
    let f_lo = moment(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if moment(mid).signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    wp.c = 0.5 * (lo + hi);
    Ok(wp)
}

/// Both states sampled on a merged graded grid over `Ω₁ ∩ Ω₂`.
#[derive(Clone, Debug)]
pub struct CommonDomain {
    pub grid: Arc<Grid1D>,
    pub r1: Field1D,
    pub r2: Field1D,
    pub v1: Field1D,
    pub v2: Field1D,
    pub kappa: f64,
}

impl CommonDomain {
    pub fn new(s1: &State, s2: &State) -> Result<CommonDomain> {
        if s1.kappa != s2.kappa {
            return Err(FbeError::KappaMismatch(s1.kappa, s2.kappa));
        }
        let lo = s1.gamma_minus.max(s2.gamma_minus);
        let hi = s1.gamma_plus.min(s2.gamma_plus);
        let min_len = s1.length().min(s2.length());
        let gap = (s1.gamma_minus - s2.gamma_minus).abs().max((s1.gamma_plus - s2.gamma_plus).abs());
        if !(hi > lo) || gap > LIPSCHITZ_GATE * min_len {
            return Err(FbeError::DomainsDisjoint(format!(
                "boundary offset {gap:.3e} exceeds {LIPSCHITZ_GATE}·{min_len:.3e} or the overlap is empty"
            )));
        }
        let cells = s1.grid().cells().max(s2.grid().cells());
        let grid = Arc::new(Grid1D::graded(lo, hi, cells, DEFAULT_THETA)?);
        let res = |f: &Field1D, zero_left: bool, zero_right: bool| -> Result<Field1D> {
            let mut v = f.resample(&grid)?.into_values();
            let n = v.len();
            if zero_left {
                v[0] = 0.0;
            }
            if zero_right {
                v[n - 1] = 0.0;
            }
            Field1D::new(grid.clone(), v)
        };
        let r1 = res(&s1.r, s1.gamma_minus >= s2.gamma_minus, s1.gamma_plus <= s2.gamma_plus)?;
        let r2 = res(&s2.r, s2.gamma_minus >= s1.gamma_minus, s2.gamma_plus <= s1.gamma_plus)?;
        let v1 = s1.v.resample(&grid)?;
        let v2 = s2.v.resample(&grid)?;
        Ok(CommonDomain { grid, r1, r2, v1, v2, kappa: s1.kappa })
    }

    fn mu(&self) -> Field1D {
        self.r1.zip_map(&self.r2, |a, b| (a + b).max(0.0))
    }

    /// `D_ℋ`.
    pub fn d_h(&self) -> f64 {
        let sigma = 1.0 / self.kappa;
        let mu = self.mu();
        let nu = self.r1.zip_map(&self.r2, |a, b| a - b);
        let dv = self.v1.zip_map(&self.v2, |a, b| a - b);
        QuadRule::weighted(&mu, sigma - 1.0).norm2(nu.values())
            + self.kappa * QuadRule::weighted(&mu, sigma).norm2(dv.values())
    }

    /// `D̃_ℋ`.
    pub fn d_h_tilde(&self, wp: &WeightProfile) -> f64 {
        let sigma = 1.0 / self.kappa;
        let mu = self.mu();
        let rule = QuadRule::weighted(&mu, sigma - 1.0);
        let r1 = rule.sample(self.r1.values());
        let r2 = rule.sample(self.r2.values());
        let v1 = rule.sample(self.v1.values());
        let v2 = rule.sample(self.v2.values());
        let mut total = 0.0;
        for q in 0..rule.points.len() {
            let (m, n) = (r1[q] + r2[q], r1[q] - r2[q]);
            let dv = v1[q] - v2[q];
            total += rule.weights[q] * (wp.a(m, n) * n * n + self.kappa * wp.b(m, n) * dv * dv);
        }
        total
    }

    /// `Σ_{x ∈ Γ} |r₁+r₂|^{σ+2}` over the two endpoints of the common domain.
    pub fn boundary_gap(&self) -> f64 {
        let sigma = 1.0 / self.kappa;
        let n = self.grid.len();
        [0, n - 1]
            .iter()
            .map(|&i| (self.r1.values()[i] + self.r2.values()[i]).abs().powf(sigma + 2.0))
            .sum()
    }
}

/// `D_ℋ((r₁,v₁),(r₂,v₂))` on `Ω₁ ∩ Ω₂`.
pub fn distance_dh(s1: &State, s2: &State) -> Result<f64> {
    Ok(CommonDomain::new(s1, s2)?.d_h())
}

/// `D̃_ℋ` with the weights of `profile`.
pub fn distance_dh_tilde(s1: &State, s2: &State, profile: &WeightProfile) -> Result<f64> {
    check_profile(s1, profile)?;
    Ok(CommonDomain::new(s1, s2)?.d_h_tilde(profile))
}

pub fn boundary_gap(s1: &State, s2: &State) -> Result<f64> {
    Ok(CommonDomain::new(s1, s2)?.boundary_gap())
}

fn check_profile(s: &State, profile: &WeightProfile) -> Result<()> {
    if profile.kappa != s.kappa {
        return Err(FbeError::KappaMismatch(profile.kappa, s.kappa));
    }
    Ok(())
}

/// All distance quantities of one pair.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DistanceRecord {
    pub pair: usize,
    pub d_h: f64,
    pub d_h_tilde: f64,
    pub gap: f64,
    pub ratio: f64,
}

fn ratio_of(d: f64, gap: f64, dt: f64, cd: &CommonDomain) -> Result<f64> {
    let mu = cd.mu();
    let scale = QuadRule::weighted(&mu, 1.0 / cd.kappa + 1.0).norm2(&vec![1.0; mu.values().len()]);
    if !(dt >= DEGENERATE_TOL * scale) {
        return Err(FbeError::DegenerateDenominator(dt));
    }
    Ok((d + gap) / dt)
}

/// `(D_ℋ + boundary gap) / D̃_ℋ`.
pub fn equivalence_ratio(s1: &State, s2: &State, profile: &WeightProfile) -> Result<f64> {
    Ok(distance_record(0, s1, s2, profile)?.ratio)
}

pub fn distance_record(pair: usize, s1: &State, s2: &State, profile: &WeightProfile) -> Result<DistanceRecord> {
    check_profile(s1, profile)?;
    let cd = CommonDomain::new(s1, s2)?;
    let d = cd.d_h();
    let dt = cd.d_h_tilde(profile);
    let gap = cd.boundary_gap();
    let ratio = ratio_of(d, gap, dt, &cd)?;
    Ok(DistanceRecord { pair, d_h: d, d_h_tilde: dt, gap, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(kappa: f64, a: f64, b: f64, r: impl Fn(f64) -> f64, v: impl Fn(f64) -> f64) -> State {
        State::from_fns(kappa, a, b, 160, r, v).unwrap()
    }

    #[test]
    fn profile_shape() {
        for kappa in [0.5, 1.0, 2.0] {
            let wp = make_weight_profile(kappa).unwrap();
            assert!(wp.c > 0.0);
            assert_eq!(wp.a(3.0, 0.0), 1.0);
            assert_eq!(wp.a(2.0, 0.49), 1.0);
            assert_eq!(wp.a(2.0, 1.0), 0.0);
            assert_eq!(wp.a(2.0, -1.3), 0.0);
            assert_eq!(wp.a(2.0, 0.7), wp.a(2.0, -0.7));
            assert_eq!(wp.b(2.0, 0.7), 0.5 * 2.0 * wp.a(2.0, 0.7));
            assert!((wp.a(5.0, 1.7) - wp.a(10.0, 3.4)).abs() < 1e-15);
        }
    }

    #[test]
    fn moment_condition_by_direct_quadrature() {
        for kappa in [0.5, 1.0, 2.0] {
            let wp = make_weight_profile(kappa).unwrap();
            for nu in [0.1, 1.0, 3.0] {
                let m = wp.moment_direct(nu);
                assert!(m.abs() <= 1e-8, "κ={kappa} ν={nu} moment={m:e}");
            }
        }
    }

    #[test]
    fn profile_derivative_matches_difference_quotient() {
        let wp = make_weight_profile(1.0).unwrap();
        for th in [0.27, 0.33, 0.41, 0.47, -0.3] {
            let h = 1e-6;
            let fd = (wp.profile(th + h) - wp.profile(th - h)) / (2.0 * h);
            assert!((fd - wp.profile_deriv(th)).abs() < 1e-5 * (1.0 + fd.abs()), "θ={th}");
        }
    }

    #[test]
    fn closed_form_distance() {
        let s1 = st(1.0, 0.0, 1.0, |x| x * (1.0 - x), |_| 0.0);
        let s2 = st(1.0, 0.0, 1.0, |x| 2.0 * x * (1.0 - x), |_| 0.0);
        let d = distance_dh(&s1, &s2).unwrap();
        assert!((d - 1.0 / 30.0).abs() < 1e-10, "{d}");
        assert!((distance_dh(&s2, &s1).unwrap() - d).abs() < 1e-15);
        assert_eq!(distance_dh(&s1, &s1).unwrap(), 0.0);
        assert_eq!(boundary_gap(&s1, &s2).unwrap(), 0.0);
    }

    #[test]
    fn plateau_region_uses_unit_weights() {
        let wp = make_weight_profile(1.0).unwrap();
        let s1 = st(1.0, -1.0, 1.0, |x| 1.0 - x * x, |x| 0.1 * x);
        let s2 = st(1.0, -1.0, 1.0, |x| 1.1 * (1.0 - x * x), |x| 0.12 * x);
        let cd = CommonDomain::new(&s1, &s2).unwrap();
        let mu = cd.mu();
        let nu = cd.r1.zip_map(&cd.r2, |a, b| a - b);
        let dv = cd.v1.zip_map(&cd.v2, |a, b| a - b);
        let expect = QuadRule::weighted(&mu, 0.0).norm2(nu.values()) + 0.5 * QuadRule::weighted(&mu, 1.0).norm2(dv.values());
        let got = cd.d_h_tilde(&wp);
        assert!((got - expect).abs() < 1e-12 * expect, "{got} vs {expect}");
        assert!(got <= cd.d_h());
    }

    #[test]
    fn shifted_boundary_gap() {
        // r₂ = r₁ - δ: Γ₂ sits inside Γ₁ and r₁ + r₂ = δ at both common endpoints.
        let d = 0.01;
        let s1 = st(1.0, -1.0, 1.0, |x| 1.0 - x * x, |_| 0.0);
        let b = (1.0f64 - d).sqrt();
        let s2 = st(1.0, -b, b, |x| 1.0 - d - x * x, |_| 0.0);
        let gap = boundary_gap(&s1, &s2).unwrap();
        let expect = 2.0 * d.powf(3.0);
        assert!((gap - expect).abs() < 1e-6 * expect, "{gap} vs {expect}");
        let wp = make_weight_profile(1.0).unwrap();
        let rec = distance_record(0, &s1, &s2, &wp).unwrap();
        assert!(rec.ratio.is_finite() && rec.ratio >= 1.0, "{rec:?}");
    }

    #[test]
    fn guards() {
        let wp = make_weight_profile(1.0).unwrap();
        let s1 = st(1.0, -1.0, 1.0, |x| 1.0 - x * x, |_| 0.0);
        let s2 = st(2.0, -1.0, 1.0, |x| 1.0 - x * x, |_| 0.0);
        assert!(matches!(distance_dh(&s1, &s2), Err(FbeError::KappaMismatch(..))));
        let far = st(1.0, 0.5, 2.5, |x| (x - 0.5) * (2.5 - x), |_| 0.0);
        assert!(matches!(distance_dh(&s1, &far), Err(FbeError::DomainsDisjoint(_))));
        assert!(matches!(equivalence_ratio(&s1, &s1, &wp), Err(FbeError::DegenerateDenominator(_))));
    }

    #[test]
    fn distance_scales_homogeneously() {
        // Both states rescaled by r ↦ λ⁻² r(λ²x), v ↦ λ⁻¹ v(λ²x): D_ℋ picks up λ^{-2σ-4}.
        let lam: f64 = 2.0;
        let l2 = lam * lam;
        for kappa in [1.0, 2.0] {
            let r1 = |x: f64| 1.0 - x * x;
            let r2 = |x: f64| (1.0 - x * x) * (1.05 + 0.02 * x);
            let v1 = |x: f64| 0.1 * x;
            let v2 = |x: f64| 0.1 * x + 0.03;
            let d0 = distance_dh(&st(kappa, -1.0, 1.0, r1, v1), &st(kappa, -1.0, 1.0, r2, v2)).unwrap();
            let a = st(kappa, -1.0 / l2, 1.0 / l2, |x| r1(l2 * x) / l2, |x| v1(l2 * x) / lam);
            let b = st(kappa, -1.0 / l2, 1.0 / l2, |x| r2(l2 * x) / l2, |x| v2(l2 * x) / lam);
            let d1 = distance_dh(&a, &b).unwrap();
            let p = -2.0 / kappa - 4.0;
            assert!((d1 / (d0 * lam.powf(p)) - 1.0).abs() < 1e-2);
        }
    }
}
