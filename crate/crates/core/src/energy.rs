//! Higher-order energies `E^{2k}`, the conserved physical energy, coercivity ratios and
//! the Gronwall growth monitor.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::calculus::{evaluate, good_variable};
use crate::error::{FbeError, Result};
use crate::grid::quadrature::QuadRule;
use crate::grid::State;
use crate::wspace::{control_params, h2k_norm, h_norm2};

/// Largest energy index supported by the symbolic engine (`s_{2k}` needs `j = 2k ≤ 8`).
pub const MAX_K: usize = 4;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EnergyReport {
    pub k: usize,
    /// `‖(s_{2j}, w_{2j})‖²_ℋ` for `j = 0..=k`.
    pub wave_components: Vec<f64>,
    /// The transport part of the energy. It controls the curl of `v`, which vanishes in 1D.
    pub transport: f64,
    pub total: f64,
    pub a: f64,
    pub b: f64,
    pub physical: f64,
    /// `‖(r,v)‖²_{ℋ^{2k}}`.
    pub h2k_norm2: f64,
}

impl EnergyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("energy report serializes")
    }
}

fn transport_energy(_state: &State) -> f64 {
    0.0
}

/// `‖(s_{2j}, w_{2j})‖²_ℋ` for `j = 0..=k`.
pub fn wave_components(state: &State, k: usize) -> Result<Vec<f64>> {
    if k > MAX_K {
        return Err(FbeError::InsufficientResolution(format!(
            "energy index k = {k} exceeds the supported k ≤ {MAX_K}"
        )));
    }
    let mut out = Vec::with_capacity(k + 1);
    for j in 0..=k {
        if j == 0 {
            out.push(h_norm2(&state.r, &state.v, &state.r, state.kappa)?);
            continue;
        }
        let (se, we) = good_variable(2 * j)?;
        let s = evaluate(&se, state)?;
        let w = evaluate(&we, state)?;
        out.push(h_norm2(&s, &w, &state.r, state.kappa)?);
    }
    Ok(out)
}

/// `E^{2k}` with its components, the control parameters and the physical energy.
pub fn wave_energy(state: &State, k: usize) -> Result<EnergyReport> {
    let wave = wave_components(state, k)?;
    let transport = transport_energy(state);
    let total = wave.iter().sum::<f64>() + transport;
    let cp = control_params(state)?;
    let h2k = h2k_norm(&state.r, &state.v, &state.r, state.kappa, k)?.norm;
    Ok(EnergyReport {
        k,
        wave_components: wave,
        transport,
        total,
        a: cp.a,
        b: cp.b,
        physical: physical_energy(state),
        h2k_norm2: h2k * h2k,
    })
}

/// `∫ r^{(1-κ)/κ} (r² + ((κ+1)/2) r v²) dx`.
pub fn physical_energy(state: &State) -> f64 {
    let kappa = state.kappa;
    let g = (1.0 - kappa) / kappa;
    let ones = vec![1.0; state.r.values().len()];
    let pot = QuadRule::weighted(&state.r, g + 2.0).norm2(&ones);
    let kin = QuadRule::weighted(&state.r, g + 1.0).norm2(state.v.values());
    pot + 0.5 * (kappa + 1.0) * kin
}

/// `E^{2k} / ‖(r,v)‖²_{ℋ^{2k}}`.
pub fn coercivity_ratio(state: &State, k: usize) -> Result<f64> {
    if k == 0 {
        return Ok(1.0);
    }
    let e: f64 = wave_components(state, k)?.iter().sum();
    let n = h2k_norm(&state.r, &state.v, &state.r, state.kappa, k)?.norm;
    Ok(e / (n * n))
}

/// One time sample fed to [`gronwall_monitor`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct GronwallSample {
    pub t: f64,
    pub energy: f64,
    pub b: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GronwallFit {
    /// Least-squares slope of `log E(t)/E(0)` against `∫₀ᵗ B`.
    pub c_lsq: f64,
    /// Smallest `C ≥ 0` with `log E(t)/E(0) ≤ C ∫₀ᵗ B` at every sample.
    pub c_fit: f64,
    /// `max_t (log E(t)/E(0) - c_lsq ∫₀ᵗ B)`.
    pub max_violation: f64,
    pub samples: usize,
}

/// Fit the growth constant in `log E(t) - log E(0) ≤ C ∫₀ᵗ B ds`.
pub fn gronwall_monitor(traj: &[GronwallSample]) -> Result<GronwallFit> {
    if traj.len() < 10 {
        return Err(FbeError::Invalid(format!("Gronwall fit needs at least 10 samples, got {}", traj.len())));
    }
    let e0 = traj[0].energy;
    if !(e0 > 0.0) {
        return Err(FbeError::Invalid("initial energy must be positive".into()));
    }
    let mut int_b = vec![0.0; traj.len()];
    for i in 1..traj.len() {
        int_b[i] = int_b[i - 1] + 0.5 * (traj[i].b + traj[i - 1].b) * (traj[i].t - traj[i - 1].t);
    }
    let y: Vec<f64> = traj.iter().map(|s| (s.energy / e0).ln()).collect();
    let sxx: f64 = int_b.iter().map(|x| x * x).sum();
    let sxy: f64 = int_b.iter().zip(&y).map(|(x, y)| x * y).sum();
    let c_lsq = if sxx > 0.0 { (sxy / sxx).max(0.0) } else { 0.0 };
    let mut c_fit = 0.0f64;
    let mut max_violation = 0.0f64;
    for (x, y) in int_b.iter().zip(&y) {
        if *x > 0.0 {
            c_fit = c_fit.max(y / x);
        } else if *y > 0.0 {
            c_fit = f64::INFINITY;
        }
        max_violation = max_violation.max(y - c_lsq * x);
    }
    Ok(GronwallFit { c_lsq, c_fit, max_violation, samples: traj.len() })
}

/// Rows `t, E2k, A, B, E_phys`.
pub fn trajectory_csv(rows: &[(f64, EnergyReport)]) -> String {
    let mut s = String::from("t,E2k,A,B,E_phys\n");
    for (t, r) in rows {
        let _ = writeln!(s, "{t:.12e},{:.12e},{:.12e},{:.12e},{:.12e}", r.total, r.a, r.b, r.physical);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parabola(c: f64, cells: usize) -> State {
        State::from_fns(1.0, -1.0, 1.0, cells, |x| c * (1.0 - x * x), |_| 0.0).unwrap()
    }

    #[test]
    fn physical_energy_of_parabola() {
        let e = physical_energy(&parabola(1.0, 128));
        assert!((e - 16.0 / 15.0).abs() < 1e-10, "{e}");
    }

    #[test]
    fn boost_changes_only_kinetic_part() {
        let s = State::from_fns(2.0, -1.0, 1.0, 128, |x| 1.0 - x * x, |x| 0.3 * x).unwrap();
        let c = 0.7;
        let boosted = State { v: s.v.map(|v| v + c), ..s.clone() };
        let g = (1.0 - s.kappa) / s.kappa;
        let rule = QuadRule::weighted(&s.r, g + 1.0);
        let extra: Vec<f64> = rule.sample(s.v.values()).iter().map(|v| 2.0 * v * c + c * c).collect();
        let expect = 0.5 * (s.kappa + 1.0) * rule.sum(&extra);
        let got = physical_energy(&boosted) - physical_energy(&s);
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
    }

    #[test]
    fn k0_energy_is_h_norm() {
        let s = parabola(0.8, 96);
        let rep = wave_energy(&s, 0).unwrap();
        assert_eq!(rep.wave_components.len(), 1);
        assert_eq!(coercivity_ratio(&s, 0).unwrap(), 1.0);
        assert!((rep.total - rep.h2k_norm2).abs() <= 1e-14 * rep.total);
    }

    #[test]
    fn static_parabola_second_component() {
        // v = 0: s₂ = κ r r'' + ½ r'² = c²(4x² - 2), w₂ = 0.
        let c = 0.6;
        let s = parabola(c, 160);
        let comps = wave_components(&s, 1).unwrap();
        let expect = 56.0 / 15.0 * c.powi(4);
        assert!((comps[1] - expect).abs() < 1e-8, "{} vs {expect}", comps[1]);
    }

    #[test]
    fn components_follow_parabolic_scaling() {
        // r_λ = λ⁻² r(λ²x), v_λ = λ⁻¹ v(λ²x): the j-th component scales like λ^{4j-4-2/κ}.
        let kappa = 1.0;
        let lam: f64 = 2.0;
        let r = |x: f64| (1.0 - x * x) * (1.0 + 0.1 * x);
        let v = |x: f64| 0.2 * x + 0.05 * x * x;
        let base = State::from_fns(kappa, -1.0, 1.0, 200, r, v).unwrap();
        let l2 = lam * lam;
        let scaled =
            State::from_fns(kappa, -1.0 / l2, 1.0 / l2, 200, |x| r(l2 * x) / l2, |x| v(l2 * x) / lam).unwrap();
        let c0 = wave_components(&base, 2).unwrap();
        let c1 = wave_components(&scaled, 2).unwrap();
        for j in 0..=2 {
            let p = 4.0 * j as f64 - 4.0 - 2.0 / kappa;
            let ratio = c1[j] / (c0[j] * lam.powf(p));
            assert!((ratio - 1.0).abs() < 1e-2, "j={j} ratio={ratio}");
        }
    }

    #[test]
    fn energy_is_translation_invariant() {
        let s = State::from_fns(1.0, -1.0, 1.0, 128, |x| 1.0 - x * x, |x| 0.1 * x * x).unwrap();
        let a = wave_energy(&s, 1).unwrap().total;
        let b = wave_energy(&s.translated(0.37), 1).unwrap().total;
        assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn identical_reports_give_zero_growth() {
        let traj: Vec<GronwallSample> =
            (0..12).map(|i| GronwallSample { t: i as f64 * 0.1, energy: 2.0, b: 1.5 }).collect();
        let fit = gronwall_monitor(&traj).unwrap();
        assert_eq!(fit.c_lsq, 0.0);
        assert_eq!(fit.c_fit, 0.0);
    }

    #[test]
    fn exponential_growth_recovers_rate() {
        let traj: Vec<GronwallSample> = (0..20)
            .map(|i| {
                let t = i as f64 * 0.05;
                GronwallSample { t, energy: (0.8 * 2.0 * t).exp(), b: 2.0 }
            })
            .collect();
        let fit = gronwall_monitor(&traj).unwrap();
        assert!((fit.c_lsq - 0.8).abs() < 1e-12);
        assert!((fit.c_fit - 0.8).abs() < 1e-12);
    }

    #[test]
    fn rejects_large_k() {
        assert!(matches!(wave_energy(&parabola(1.0, 64), 5), Err(FbeError::InsufficientResolution(_))));
    }
}
