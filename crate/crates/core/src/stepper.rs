//! The constructive time step: regularization, then the fused flow transport and Newton
//! update, plus full evolution and the linearized flow on a stored background.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distance::CommonDomain;
use crate::energy::{gronwall_monitor, wave_energy, EnergyReport, GronwallFit, GronwallSample, MAX_K};
use crate::error::{FbeError, Result};
use crate::grid::{make_state, Field1D, Grading, Grid1D, State, DEFAULT_THETA};
use crate::kernels::ProjectionSmoother;
use crate::operators::{assemble_l1, assemble_l2l3, functional_calculus, Multiplier, WeightedOperator};
use crate::wspace::{control_b, h_norm2, holder_half};

/// Moment order of the stepper's regularization; the smoother reproduces degree `2M`.
pub const STEP_MOMENT_ORDER: usize = 2;
/// Energy index of per-step reports unless overridden; the energy itself is defined for `k ≤ 4`.
pub const DEFAULT_REPORT_K: usize = 2;
/// `T ≤ HORIZON_CONSTANT / B(state0)`.
pub const HORIZON_CONSTANT: f64 = 2.0;
/// Evolution stops once `B` exceeds this multiple of its initial value.
pub const BOOTSTRAP_FACTOR: f64 = 4.0;

/// `k₀ = (d + 1 + 1/κ)/2` with `d = 1`.
pub fn critical_index(kappa: f64) -> f64 {
    (2.0 + 1.0 / kappa) / 2.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalePolicy {
    /// Every scale inequality must hold.
    Strict,
    /// Same scales as `Strict`, but violated inequalities are recorded instead of rejected.
    /// Runs with `k` below the validated bound are experimental.
    Desk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubtractionRule {
    /// `c = ε⁴`.
    EpsFourth,
    /// `c = 2^{-2(k-k₀)h⁻}`.
    Scale,
    /// The larger of `ε⁴` and twice the largest boundary value of `r̃`.
    Adaptive,
}

/// One named inequality between the scales.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleCheck {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

/// The scale inequalities for `(h, h⁻, h⁺, k)`.
pub fn scale_constraints(h: f64, h_minus: f64, h_plus: f64, k: usize, kappa: f64) -> Vec<ScaleCheck> {
    let k0 = critical_index(kappa);
    let kk = k as f64 - k0;
    let mk = |name: &str, holds: bool, detail: String| ScaleCheck { name: name.into(), holds, detail };
    vec![
        mk("h- < (k-1)/k h", h_minus < (k as f64 - 1.0) / (k as f64) * h, format!("{h_minus} vs {}", (k as f64 - 1.0) / k as f64 * h)),
        mk("h+ > 4h", h_plus > 4.0 * h, format!("{h_plus} vs {}", 4.0 * h)),
        mk("h-(k-k0) > h(1+1/kappa)", h_minus * kk > h * (1.0 + 1.0 / kappa), format!("{} vs {}", h_minus * kk, h * (1.0 + 1.0 / kappa))),
        mk("h-(k-k0) < h+", h_minus * kk < h_plus, format!("{} vs {h_plus}", h_minus * kk)),
        mk("h+ < h-(k-k0+1)", h_plus < h_minus * (kk + 1.0), format!("{h_plus} vs {}", h_minus * (kk + 1.0))),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub eps: f64,
    pub k: usize,
    pub kappa: f64,
    /// `2^{-2h} = ε`.
    pub h: f64,
    pub h_minus: f64,
    pub h_plus: f64,
    pub policy: ScalePolicy,
    pub chi: Multiplier,
    pub subtraction: SubtractionRule,
    /// Cells of the graded grid every step regrids onto.
    pub cells: usize,
    pub theta: f64,
    /// Degree reproduced by the smoother.
    pub degree: usize,
    /// Energy index of the per-step reports (`≤ 4`).
    pub report_k: usize,
    pub record_energy: bool,
    /// Failed scale inequalities (empty under the strict policy).
    pub violations: Vec<String>,
    pub checkpoint_every: Option<usize>,
    pub checkpoint_dir: Option<PathBuf>,
}

impl StepConfig {
    pub fn new(eps: f64, k: usize, kappa: f64, cells: usize, policy: ScalePolicy) -> Result<StepConfig> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(FbeError::Config(format!("time step ε = {eps} must lie in (0, 1)")));
        }
        if !(kappa > 0.0) {
            return Err(FbeError::Config(format!("κ = {kappa} must be positive")));
        }
        if k == 0 {
            return Err(FbeError::Config("energy index k must be at least 1".into()));
        }
        let h = 0.5 * (1.0 / eps).log2();
        let h_minus = 0.5 * h;
        let kk = k as f64 - critical_index(kappa);
        let lower = (4.0 * h).max(h_minus * kk);
        let upper = h_minus * (kk + 1.0);
        let h_plus = if lower < upper { 0.5 * (lower + upper) } else { lower + 0.5 };
        let checks = scale_constraints(h, h_minus, h_plus, k, kappa);
        let violations: Vec<String> =
            checks.iter().filter(|c| !c.holds).map(|c| format!("{} ({})", c.name, c.detail)).collect();
        if policy == ScalePolicy::Strict && !violations.is_empty() {
            return Err(FbeError::ScaleConstraint(format!(
                "k = {k}, κ = {kappa}, ε = {eps}: {}",
                violations.join("; ")
            )));
        }
        Ok(StepConfig {
            eps,
            k,
            kappa,
            h,
            h_minus,
            h_plus,
            policy,
            chi: Multiplier::Resolvent,
            subtraction: SubtractionRule::EpsFourth,
            cells,
            theta: DEFAULT_THETA,
            degree: 2 * STEP_MOMENT_ORDER,
            report_k: k.min(DEFAULT_REPORT_K),
            record_energy: true,
            violations,
            checkpoint_every: None,
            checkpoint_dir: None,
        })
    }

    pub fn with_report_k(mut self, k: usize) -> Result<StepConfig> {
        if k > MAX_K {
            return Err(FbeError::Config(format!("report index {k} exceeds {MAX_K}")));
        }
        self.report_k = k;
        Ok(self)
    }

    pub fn with_subtraction(mut self, rule: SubtractionRule) -> StepConfig {
        self.subtraction = rule;
        self
    }

    /// Subtraction constant for `r̃` with boundary values `ends`.
    pub fn subtraction_constant(&self, ends: [f64; 2]) -> f64 {
        let e4 = self.eps.powi(4);
        match self.subtraction {
            SubtractionRule::EpsFourth => e4,
            SubtractionRule::Scale => 2f64.powf(-2.0 * (self.k as f64 - critical_index(self.kappa)) * self.h_minus),
            SubtractionRule::Adaptive => e4.max(2.0 * ends[0].max(ends[1]).max(0.0)),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    /// `‖(r,v) - (r_reg, v_reg)‖_{C¹ × C^{1/2}}`.
    pub reg_residual: f64,
    pub subtraction: f64,
    /// `r̃` at the two ends of `Ω⁻`.
    pub tilde_ends: [f64; 2],
    /// `min (1 + ε∂v)`.
    pub min_jacobian: f64,
    /// Boundary points after the step.
    pub gamma: [f64; 2],
}

fn fitted_at(sm: &ProjectionSmoother, coeffs: &[Vec<f64>], xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|&x| sm.eval_fitted(coeffs, x, 0)).collect()
}

/// Outermost sign change of `f` on each side of `x_in`, searched over `[lo, hi]`.
fn outer_roots(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, x_in: f64, samples: usize) -> Result<(f64, f64)> {
    let find = |a: f64, b: f64| -> Option<f64> {
        // Walk from the interior point `a` toward `b` to the first sign change.
        let mut prev = a;
        for i in 1..=samples {
            let x = a + (b - a) * i as f64 / samples as f64;
            if f(x) <= 0.0 {
                return crate::grid::bisect(f, prev, x);
            }
            prev = x;
        }
        None
    };
    let left = find(x_in, lo).ok_or_else(|| FbeError::BoundaryLost("regularized r has no left root".into()))?;
    let right = find(x_in, hi).ok_or_else(|| FbeError::BoundaryLost("regularized r has no right root".into()))?;
    Ok((left, right))
}

fn c1_half_residual(a: &State, b: &State) -> Result<f64> {
    let cd = CommonDomain::new(a, b)?;
    let dr = cd.r1.zip_map(&cd.r2, |x, y| x - y);
    let dv = cd.v1.zip_map(&cd.v2, |x, y| x - y);
    let ddr = dr.derivative(1)?;
    Ok(dr.max_abs() + ddr.max_abs() + dv.max_abs() + holder_half(&dv))
}

/// `(r, v) ↦ (r̃ - c, ṽ)` restricted to `{r̃ - c > 0}`.
pub fn regularization_step(state: &State, cfg: &StepConfig) -> Result<(State, StepDiagnostics)> {
    let g = state.grid();
    let two_h = 2f64.powf(-2.0 * cfg.h);
    if two_h < 4.0 * g.min_cell() {
        return Err(FbeError::ScaleTooFine(format!(
            "2^(-2h) = {two_h:.3e} is below four cells ({:.3e})",
            4.0 * g.min_cell()
        )));
    }
    let sm_minus = ProjectionSmoother::new(&state.r, cfg.h_minus, cfg.degree)?;
    let sm_plus = ProjectionSmoother::new(&state.r, cfg.h_plus, cfg.degree)?;
    let cr_minus = sm_minus.fit(state.r.values());
    let cv_minus = sm_minus.fit(state.v.values());
    let cr_plus = sm_plus.fit(state.r.values());
    let cv_plus = sm_plus.fit(state.v.values());

    // Ω⁻ = {r⁻ > 0}, searched from the interior maximum outward into a collar of width 2^{-2h⁻}.
    let imax = (0..state.r.values().len())
        .max_by(|&i, &j| state.r.values()[i].partial_cmp(&state.r.values()[j]).unwrap())
        .unwrap();
    let x_in = g.nodes()[imax];
    let pad = state.length() * 0.25 + 2f64.powf(-2.0 * cfg.h_minus);
    let r_minus_fn = |x: f64| sm_minus.eval_fitted(&cr_minus, x, 0);
    let (gm, gp) = outer_roots(&r_minus_fn, g.a() - pad, g.b() + pad, x_in, 4 * cfg.cells)?;
    let grid = Arc::new(Grid1D::graded(gm, gp, cfg.cells, cfg.theta)?);
    let nodes = grid.nodes();
    let n = nodes.len();

    let mut r_minus = fitted_at(&sm_minus, &cr_minus, nodes);
    r_minus[0] = 0.0;
    r_minus[n - 1] = 0.0;
    if r_minus[1..n - 1].iter().any(|&x| !(x > 0.0)) {
        return Err(FbeError::BoundaryLost("r⁻ is not positive inside Ω⁻".into()));
    }
    let r_plus = fitted_at(&sm_plus, &cr_plus, nodes);
    let v_minus = fitted_at(&sm_minus, &cv_minus, nodes);
    let v_plus = fitted_at(&sm_plus, &cv_plus, nodes);
    let r_minus_field = Field1D::new(grid.clone(), r_minus.clone())?;

    let l1 = assemble_l1(&r_minus_field, cfg.kappa, 0.0)?;
    let l23 = assemble_l2l3(&r_minus_field, cfg.kappa)?;
    let blend = |op: &WeightedOperator, lo: &[f64], hi: &[f64]| -> Result<Vec<f64>> {
        let diff: Vec<f64> = hi.iter().zip(lo).map(|(a, b)| a - b).collect();
        let sm = functional_calculus(op, cfg.chi, cfg.eps, &diff)?;
        Ok(lo.iter().zip(&sm).map(|(a, b)| a + b).collect())
    };
    let r_tilde = blend(&l1, &r_minus, &r_plus)?;
    let v_tilde = blend(&l23, &v_minus, &v_plus)?;

    let ends = [r_tilde[0], r_tilde[n - 1]];
    let c = cfg.subtraction_constant(ends);
    let shifted: Vec<f64> = r_tilde.iter().map(|x| x - c).collect();
    if !(shifted[0] < 0.0 && shifted[n - 1] < 0.0) {
        return Err(FbeError::BoundaryLost(format!(
            "r̃ - c does not vanish inside Ω⁻ (ends {:.3e}, {:.3e}, c = {c:.3e})",
            shifted[0],
            shifted[n - 1]
        )));
    }
    let out = make_state(shifted, v_tilde, cfg.kappa, grid).map_err(|e| FbeError::BoundaryLost(e.to_string()))?;
    let diag = StepDiagnostics {
        reg_residual: c1_half_residual(state, &out)?,
        subtraction: c,
        tilde_ends: ends,
        min_jacobian: 1.0,
        gamma: [out.gamma_minus, out.gamma_plus],
    };
    Ok((out, diag))
}

/// `x₁ = x + εv`, `r₁(x₁) = r - εκ r ∂v`, `v₁(x₁) = v - ε∂r`, then a fresh graded grid.
pub fn transport_newton_step(state: &State, eps: f64, cells: usize, theta: f64) -> Result<(State, f64)> {
    let nodes = state.grid().nodes();
    let n = nodes.len();
    let dr = state.r.derivative(1)?;
    let dv = state.v.derivative(1)?;
    let (r, v) = (state.r.values(), state.v.values());
    let mut x1 = Vec::with_capacity(n);
    let mut r1 = Vec::with_capacity(n);
    let mut v1 = Vec::with_capacity(n);
    let mut min_jac = f64::INFINITY;
    for i in 0..n {
        let jac = 1.0 + eps * dv.values()[i];
        if !(jac > 0.0) {
            return Err(FbeError::MeshTangled(jac, nodes[i]));
        }
        min_jac = min_jac.min(jac);
        x1.push(nodes[i] + eps * v[i]);
        r1.push(r[i] - eps * state.kappa * r[i] * dv.values()[i]);
        v1.push(v[i] - eps * dr.values()[i]);
    }
    if let Some(i) = x1.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(FbeError::MeshTangled(min_jac, nodes[i]));
    }
    r1[0] = 0.0;
    r1[n - 1] = 0.0;
    let moved = Arc::new(Grid1D::from_nodes(x1, Grading::Custom)?);
    let s = make_state(r1, v1, state.kappa, moved)?;
    Ok((s.regrid(cells, theta)?, min_jac))
}

/// Regularization followed by the transport/Newton update.
pub fn euler_step(state: &State, cfg: &StepConfig) -> Result<(State, StepDiagnostics)> {
    let (reg, mut diag) = regularization_step(state, cfg)?;
    let (next, jac) = transport_newton_step(&reg, cfg.eps, cfg.cells, cfg.theta)?;
    diag.min_jacobian = jac;
    diag.gamma = [next.gamma_minus, next.gamma_plus];
    Ok((next, diag))
}

#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub eps: f64,
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub energies: Vec<EnergyReport>,
    pub diagnostics: Vec<StepDiagnostics>,
    /// `D_ℋ` to a reference trajectory, when one was supplied.
    pub distances: Option<Vec<f64>>,
    pub b0: f64,
}

impl TrajectoryRecord {
    pub fn last(&self) -> &State {
        self.states.last().unwrap()
    }

    pub fn gronwall_samples(&self) -> Vec<GronwallSample> {
        self.times
            .iter()
            .zip(&self.energies)
            .map(|(&t, e)| GronwallSample { t, energy: e.total, b: e.b })
            .collect()
    }

    pub fn gronwall(&self) -> Result<GronwallFit> {
        gronwall_monitor(&self.gronwall_samples())
    }

    /// Per-step growth constant `max_n log(E_{n+1}/E_n) / (ε B_n)`.
    pub fn growth_constant(&self) -> Option<f64> {
        self.energies
            .windows(2)
            .map(|w| (w[1].total / w[0].total).ln() / (self.eps * w[0].b))
            .reduce(f64::max)
    }

    /// Relative drift `max_t |E(t) - E(0)| / E(0)` of the physical energy.
    pub fn physical_drift(&self) -> f64 {
        let e0 = crate::energy::physical_energy(&self.states[0]);
        self.states.iter().map(|s| (crate::energy::physical_energy(s) - e0).abs() / e0).fold(0.0, f64::max)
    }

    /// Rows `t, E2k, A, B, E_phys`.
    pub fn energy_csv(&self) -> String {
        let rows: Vec<(f64, EnergyReport)> = self.times.iter().copied().zip(self.energies.iter().cloned()).collect();
        crate::energy::trajectory_csv(&rows)
    }
}

fn write_checkpoint(dir: &Path, step: usize, t: f64, s: &State) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut v = s.to_json();
    v["t"] = serde_json::json!(t);
    v["step"] = serde_json::json!(step);
    std::fs::write(dir.join(format!("checkpoint_{step:06}.json")), serde_json::to_string(&v).unwrap())?;
    Ok(())
}

/// `⌈T/ε⌉` Euler steps from `state0`.
pub fn evolve(state0: &State, t_end: f64, cfg: &StepConfig) -> Result<TrajectoryRecord> {
    let b0 = control_b(state0)?;
    let guard = HORIZON_CONSTANT / b0;
    if t_end > guard {
        return Err(FbeError::HorizonTooLong(t_end, guard));
    }
    let steps = ((t_end / cfg.eps) - 1e-9).ceil().max(0.0) as usize;
    let start = state0.regrid(cfg.cells, cfg.theta)?;
    let mut rec = TrajectoryRecord {
        eps: cfg.eps,
        times: vec![0.0],
        states: vec![start.clone()],
        energies: Vec::new(),
        diagnostics: Vec::new(),
        distances: None,
        b0,
    };
    if cfg.record_energy {
        rec.energies.push(wave_energy(&start, cfg.report_k)?);
    }
    let mut cur = start;
    for step in 1..=steps {
        let (next, diag) = euler_step(&cur, cfg)?;
        let b = control_b(&next)?;
        if b > BOOTSTRAP_FACTOR * b0 {
            return Err(FbeError::BootstrapBreach(b, BOOTSTRAP_FACTOR * b0));
        }
        let t = step as f64 * cfg.eps;
        if cfg.record_energy {
            rec.energies.push(wave_energy(&next, cfg.report_k)?);
        }
        if let (Some(every), Some(dir)) = (cfg.checkpoint_every, cfg.checkpoint_dir.as_ref()) {
            if every > 0 && step % every == 0 {
                write_checkpoint(dir, step, t, &next)?;
            }
        }
        rec.times.push(t);
        rec.diagnostics.push(diag);
        rec.states.push(next.clone());
        cur = next;
    }
    Ok(rec)
}

/// Solution of the linearized equations along a stored background.
#[derive(Clone, Debug)]
pub struct LinearizedTrajectory {
    pub times: Vec<f64>,
    pub s: Vec<Field1D>,
    pub w: Vec<Field1D>,
    /// `‖(s,w)‖²_ℋ` with the background weights.
    pub norms2: Vec<f64>,
    /// `|d/dt ‖(s,w)‖²_ℋ| / (‖∂v‖_∞ ‖(s,w)‖²_ℋ)` per step.
    pub growth_ratio: Vec<f64>,
}

impl LinearizedTrajectory {
    pub fn gronwall(&self, background: &TrajectoryRecord) -> Result<GronwallFit> {
        let samples: Vec<GronwallSample> = self
            .times
            .iter()
            .zip(&self.norms2)
            .zip(&background.states)
            .map(|((&t, &e), st)| {
                let b = st.v.derivative(1).map(|d| d.max_abs()).unwrap_or(0.0);
                GronwallSample { t, energy: e, b }
            })
            .collect();
        gronwall_monitor(&samples)
    }
}

fn smooth_pair(r: &Field1D, s: &Field1D, op: &WeightedOperator, cfg: &StepConfig) -> Result<Vec<f64>> {
    let lo = ProjectionSmoother::new(r, cfg.h_minus, cfg.degree)?.apply(s)?;
    let hi = ProjectionSmoother::new(r, cfg.h_plus, cfg.degree)?.apply(s)?;
    let diff: Vec<f64> = hi.values().iter().zip(lo.values()).map(|(a, b)| a - b).collect();
    let sm = functional_calculus(op, cfg.chi, cfg.eps, &diff)?;
    Ok(lo.values().iter().zip(&sm).map(|(a, b)| a + b).collect())
}

/// Integrate `D_t s + w∂r + κ(s∂v + r∂w) = 0`, `D_t w + w∂v + ∂s = 0` on the background's
/// moving grids with the same regularize-then-transport step.
pub fn evolve_linearized(
    background: &TrajectoryRecord,
    s0: &Field1D,
    w0: &Field1D,
    cfg: &StepConfig,
) -> Result<LinearizedTrajectory> {
    let states = &background.states;
    if states.len() < 2 || states.len() != background.times.len() {
        return Err(FbeError::BackgroundTooCoarse("background must store every step".into()));
    }
    for w in background.times.windows(2) {
        if ((w[1] - w[0]) - background.eps).abs() > 1e-9 * background.eps {
            return Err(FbeError::BackgroundTooCoarse(format!(
                "background spacing {:.3e} differs from its step {:.3e}",
                w[1] - w[0],
                background.eps
            )));
        }
    }
    let eps = background.eps;
    let g0 = states[0].grid_arc();
    let mut s = s0.resample(g0)?;
    let mut w = w0.resample(g0)?;
    let kappa = states[0].kappa;
    let mut out = LinearizedTrajectory {
        times: vec![0.0],
        norms2: vec![h_norm2(&s, &w, &states[0].r, kappa)?],
        s: vec![s.clone()],
        w: vec![w.clone()],
        growth_ratio: Vec::new(),
    };
    for n in 0..states.len() - 1 {
        let b = &states[n];
        let l1 = assemble_l1(&b.r, kappa, 0.0)?;
        let l23 = assemble_l2l3(&b.r, kappa)?;
        let s_reg = s.with_values(smooth_pair(&b.r, &s, &l1, cfg)?)?;
        let w_reg = w.with_values(smooth_pair(&b.r, &w, &l23, cfg)?)?;
        let dr = b.r.derivative(1)?;
        let dv = b.v.derivative(1)?;
        let ds = s_reg.derivative(1)?;
        let dw = w_reg.derivative(1)?;
        let nodes = b.grid().nodes();
        let m = nodes.len();
        let mut x1 = Vec::with_capacity(m);
        let mut s1 = Vec::with_capacity(m);
        let mut w1 = Vec::with_capacity(m);
        for i in 0..m {
            let (si, wi) = (s_reg.values()[i], w_reg.values()[i]);
            let (rp, vp, r) = (dr.values()[i], dv.values()[i], b.r.values()[i]);
            x1.push(nodes[i] + eps * b.v.values()[i]);
            s1.push(si - eps * (wi * rp + kappa * (si * vp + r * dw.values()[i])));
            w1.push(wi - eps * (wi * vp + ds.values()[i]));
        }
        if x1.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(FbeError::MeshTangled(0.0, nodes[0]));
        }
        let moved = Arc::new(Grid1D::from_nodes(x1, Grading::Custom)?);
        let target = states[n + 1].grid_arc();
        s = Field1D::new(moved.clone(), s1)?.resample(target)?;
        w = Field1D::new(moved, w1)?.resample(target)?;
        let nrm = h_norm2(&s, &w, &states[n + 1].r, kappa)?;
        let prev = *out.norms2.last().unwrap();
        let vmax = dv.max_abs();
        let ratio = if prev > 0.0 && vmax > 0.0 { ((nrm - prev) / eps).abs() / (vmax * prev) } else { 0.0 };
        out.growth_ratio.push(ratio);
        out.norms2.push(nrm);
        out.times.push(background.times[n + 1]);
        out.s.push(s.clone());
        out.w.push(w.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::AffineParams;

    fn affine(beta: f64) -> AffineParams {
        AffineParams::new(1.0, beta, 1.0, 1.0).unwrap()
    }

    #[test]
    fn strict_policy_names_the_failed_inequality() {
        let err = StepConfig::new(1.0 / 64.0, 2, 1.0, 256, ScalePolicy::Strict).unwrap_err();
        match err {
            FbeError::ScaleConstraint(msg) => assert!(msg.contains("h-(k-k0) > h(1+1/kappa)"), "{msg}"),
            e => panic!("unexpected {e:?}"),
        }
        assert!(StepConfig::new(1.0 / 64.0, 9, 1.0, 256, ScalePolicy::Strict).is_ok());
        let desk = StepConfig::new(1.0 / 64.0, 2, 1.0, 256, ScalePolicy::Desk).unwrap();
        assert!(!desk.violations.is_empty());
        assert!(desk.h_minus < desk.h && desk.h < desk.h_plus);
    }

    #[test]
    fn static_data_transport() {
        let s = State::from_fns(1.0, -1.0, 1.0, 200, |x| 1.0 - x * x, |_| 0.0).unwrap();
        let eps = 0.01;
        let (t, _) = transport_newton_step(&s, eps, 200, DEFAULT_THETA).unwrap();
        assert_eq!(t.gamma_minus, -1.0);
        for &x in &[-0.5, 0.0, 0.7] {
            assert!((t.r.eval(x) - (1.0 - x * x)).abs() < 1e-12);
            assert!((t.v.eval(x) - eps * 2.0 * x).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobian_guard() {
        let eps = 0.1;
        let s = State::from_fns(1.0, -1.0, 1.0, 64, |x| 1.0 - x * x, |x| -x / eps).unwrap();
        assert!(matches!(transport_newton_step(&s, eps, 64, DEFAULT_THETA), Err(FbeError::MeshTangled(..))));
    }

    #[test]
    fn smooth_state_survives_regularization() {
        let cfg = StepConfig::new(1.0 / 64.0, 9, 1.0, 512, ScalePolicy::Strict).unwrap();
        let s = affine(-0.3).state(512).unwrap();
        let (out, diag) = regularization_step(&s, &cfg).unwrap();
        for &x in &[-0.9, -0.3, 0.2, 0.8] {
            assert!((out.r.eval(x) - s.r.eval(x)).abs() < 1e-6);
            assert!((out.v.eval(x) - s.v.eval(x)).abs() < 1e-6);
        }
        assert!(diag.reg_residual < 1e-5, "{diag:?}");
    }

    #[test]
    fn one_step_is_deterministic_and_consistent() {
        let p = affine(-0.4);
        let s0 = p.state(512).unwrap();
        let mut errs = Vec::new();
        for eps in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
            let cfg = StepConfig::new(eps, 9, 1.0, 512, ScalePolicy::Strict).unwrap();
            let (a, _) = euler_step(&s0, &cfg).unwrap();
            let (b, _) = euler_step(&s0, &cfg).unwrap();
            assert_eq!(a.r.values(), b.r.values());
            let exact = p.state_at(eps, 512).unwrap();
            errs.push(crate::oracle::compare(&a, &exact).unwrap().sup_gap);
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 1.8, "{errs:?}");
        }
    }

    #[test]
    fn linearized_flow_of_gradients() {
        let eps = 1.0 / 32.0;
        let cfg = StepConfig::new(eps, 9, 1.0, 384, ScalePolicy::Strict).unwrap();
        let bg = evolve(&affine(-0.5).state(384).unwrap(), 0.25, &cfg).unwrap();
        let s0 = &bg.states[0];
        let zero = Field1D::zeros(s0.grid_arc().clone());
        let z = evolve_linearized(&bg, &zero, &zero, &cfg).unwrap();
        assert!(z.norms2.iter().all(|&n| n == 0.0));

        let lin = evolve_linearized(&bg, &s0.r.derivative(1).unwrap(), &s0.v.derivative(1).unwrap(), &cfg).unwrap();
        for (n, st) in bg.states.iter().enumerate() {
            let dr = st.r.derivative(1).unwrap();
            let dv = st.v.derivative(1).unwrap();
            let es = lin.s[n].zip_map(&dr, |a, b| a - b).max_abs();
            let ew = lin.w[n].zip_map(&dv, |a, b| a - b).max_abs();
            assert!(es < 4.0 * eps && ew < 4.0 * eps, "step {n}: {es:.3e} {ew:.3e}");
        }
        assert_eq!(lin.growth_ratio.len(), bg.states.len() - 1);
    }

    #[test]
    fn two_half_steps_match_one_step() {
        let p = affine(-0.4);
        let s0 = p.state(1024).unwrap();
        let mut gaps = Vec::new();
        for eps in [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0] {
            let full = StepConfig::new(eps, 9, 1.0, 1024, ScalePolicy::Strict).unwrap();
            let half = StepConfig::new(eps / 2.0, 9, 1.0, 1024, ScalePolicy::Strict).unwrap();
            let (one, _) = euler_step(&s0, &full).unwrap();
            let (mid, _) = euler_step(&s0, &half).unwrap();
            let (two, _) = euler_step(&mid, &half).unwrap();
            gaps.push(crate::oracle::compare(&one, &two).unwrap().sup_gap);
        }
        assert!((gaps[0] / gaps[2]).log2() / 2.0 > 1.8, "{gaps:?}");
    }

    #[test]
    fn horizon_guard() {
        let cfg = StepConfig::new(1.0 / 16.0, 9, 1.0, 256, ScalePolicy::Strict).unwrap();
        let s0 = affine(0.0).state(256).unwrap();
        assert!(matches!(evolve(&s0, 5.0, &cfg), Err(FbeError::HorizonTooLong(..))));
    }
}
