//! The experiment drivers behind `fbe --experiment NAME`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use super::config::{Experiment, Profile, RunConfig};
use super::ensemble::{state_ensemble, TrigDraw};
use super::report::{Curve, Report, Table};
use crate::distance::{distance_record, make_weight_profile, CommonDomain};
use crate::energy::coercivity_ratio;
use crate::error::{FbeError, Result};
use crate::grid::{make_state, Field1D, State, DEFAULT_THETA};
use crate::kernels::{make_bump, GoodKernel, ProjectionSmoother, DEFAULT_DELTA, ENLARGEMENT};
use crate::oracle::{compare, cross_validate, AffineParams};
use crate::stepper::{euler_step, evolve, evolve_linearized, TrajectoryRecord};
use crate::wspace::{audit_interpolation, control_a, control_b, frequency_envelope, h2k_norm, h_norm2, InterpVariant};

/// Least-squares slope of `log y` against `log x`.
pub fn fitted_order(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Pairwise orders `log(e_i/e_{i+1}) / log(x_i/x_{i+1})`.
pub fn pairwise_orders(x: &[f64], e: &[f64]) -> Vec<f64> {
    x.windows(2).zip(e.windows(2)).map(|(x, e)| (e[0] / e[1]).ln() / (x[0] / x[1]).ln()).collect()
}

/// `max |c_i / c_ref - 1|`.
pub fn relative_spread(values: &[f64], reference: f64) -> f64 {
    values.iter().map(|v| (v / reference - 1.0).abs()).fold(0.0, f64::max)
}

pub fn affine_params(cfg: &RunConfig) -> Result<AffineParams> {
    let p = &cfg.physics;
    AffineParams::new(p.alpha, p.beta, p.radius, p.kappa)
}

/// Initial data of the configured profile.
pub fn initial_state(cfg: &RunConfig) -> Result<State> {
    let p = cfg.physics.clone();
    let cells = cfg.cells();
    match p.profile {
        Profile::Affine => affine_params(cfg)?.state(cells),
        Profile::Smooth | Profile::Rough => {
            let rough = p.profile == Profile::Rough;
            State::from_fns(
                p.kappa,
                -1.0,
                1.0,
                cells,
                |x| p.alpha * (1.0 - x * x) * (1.0 + p.tilt * x),
                |x| {
                    let mut v = p.beta * x + p.v_amp * (p.v_freq * x).sin();
                    if rough {
                        v += p.rough_amp * (x - p.rough_center).abs().powf(p.rough_power);
                    }
                    v
                },
            )
        }
    }
}

pub fn run_experiment(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let mut report = match cfg.experiment {
        Experiment::Run => run(cfg)?,
        Experiment::Converge => converge(cfg)?,
        Experiment::EnergyAudit => energy_audit(cfg)?,
        Experiment::DistanceAudit => distance_audit(cfg)?,
        Experiment::KernelAudit => kernel_audit(cfg)?,
        Experiment::InterpAudit => interp_audit(cfg)?,
        Experiment::Linearized => linearized(cfg)?,
        Experiment::RoughData => rough_data(cfg)?,
    };
    report.note("config", json!(cfg.to_text()));
    report.files.push(("config.txt".into(), cfg.to_text()));
    Ok(report)
}

fn trajectory_table(rec: &TrajectoryRecord) -> Table {
    let mut t = Table::new("trajectory", &["t", "E2k", "A", "B", "E_phys"]);
    for (time, e) in rec.times.iter().zip(&rec.energies) {
        t.push(vec![*time, e.total, e.a, e.b, e.physical]);
    }
    t
}

fn run(cfg: &RunConfig) -> Result<Report> {
    let mut rep = Report::new("run");
    let s0 = initial_state(cfg)?;
    let eps = cfg.numerics.eps[0];
    let step = cfg.step_config(eps)?;
    let rec = evolve(&s0, cfg.numerics.t_end, &step)?;
    rep.tables.push(trajectory_table(&rec));
    let mut diag = Table::new(
        "diagnostics",
        &["step", "reg_residual", "subtraction", "min_jacobian", "gamma_minus", "gamma_plus"],
    );
    for (i, d) in rec.diagnostics.iter().enumerate() {
        diag.push(vec![(i + 1) as f64, d.reg_residual, d.subtraction, d.min_jacobian, d.gamma[0], d.gamma[1]]);
    }
    rep.tables.push(diag);
    rep.curves.push(Curve {
        name: "energy".into(),
        x_label: "t".into(),
        y_label: "E2k".into(),
        points: rec.times.iter().zip(&rec.energies).map(|(t, e)| (*t, e.total)).collect(),
    });
    let last = rec.last();
    rep.files.push(("final_state.csv".into(), last.to_csv()));
    rep.files.push(("final_state.json".into(), serde_json::to_string(&last.to_json()).unwrap()));
    let drift = rec.physical_drift();
    rep.check(
        "physical-energy drift",
        drift <= cfg.audit.drift_tol,
        format!("max relative drift {drift:.3e} (tolerance {})", cfg.audit.drift_tol),
    );
    rep.note("eps", json!(eps));
    rep.note("steps", json!(rec.diagnostics.len()));
    rep.note("scale_violations", json!(step.violations));
    rep.note("gamma_final", json!([last.gamma_minus, last.gamma_plus]));
    if cfg.physics.profile == Profile::Affine {
        let exact = affine_params(cfg)?.state_at(cfg.numerics.t_end, cfg.cells())?;
        rep.note("oracle_sup_error", json!(compare(last, &exact)?.sup_gap));
    }
    Ok(rep)
}

/// One rung of the convergence ladder.
struct Rung {
    eps: f64,
    error: f64,
    one_step: f64,
    drift: f64,
    growth: f64,
    gronwall: f64,
}

fn converge(cfg: &RunConfig) -> Result<Report> {
    if cfg.physics.profile != Profile::Affine {
        return Err(FbeError::Config("converge needs physics.profile = affine".into()));
    }
    let mut rep = Report::new("converge");
    let p = affine_params(cfg)?;
    let t_end = cfg.numerics.t_end;
    let cells = cfg.cells();

    let gate = cross_validate(&p, t_end, &cfg.audit.gate_cells, cfg.audit.gate_order)?;
    let mut gt = Table::new("oracle_gate", &["cells", "error", "order"]);
    for (i, (&c, &e)) in gate.cells.iter().zip(&gate.errors).enumerate() {
        gt.push(vec![c as f64, e, if i == 0 { f64::NAN } else { gate.orders[i - 1] }]);
    }
    rep.tables.push(gt);
    rep.check(
        "oracle cross-validation",
        gate.passed,
        format!("orders {:?} (required ≥ {})", gate.orders, cfg.audit.gate_order),
    );
    if !gate.passed {
        rep.check("stepper verdict issued", false, "withheld: the two oracles disagree".into());
        return Ok(rep);
    }

    let s0 = p.state(cells)?;
    let exact = p.state_at(t_end, cells)?;
    let rungs: Vec<Rung> = cfg
        .numerics
        .eps
        .par_iter()
        .map(|&eps| -> Result<Rung> {
            let step = cfg.step_config(eps)?;
            let rec = evolve(&s0, t_end, &step)?;
            let (one, _) = euler_step(&s0, &step)?;
            let one_exact = p.state_at(eps, cells)?;
            Ok(Rung {
                eps,
                error: compare(rec.last(), &exact)?.sup_gap,
                one_step: compare(&one, &one_exact)?.sup_gap,
                drift: rec.physical_drift(),
                growth: rec.growth_constant().unwrap_or(f64::NAN),
                gronwall: rec.gronwall().map(|g| g.c_fit).unwrap_or(f64::NAN),
            })
        })
        .collect::<Result<_>>()?;

    let eps: Vec<f64> = rungs.iter().map(|r| r.eps).collect();
    let errors: Vec<f64> = rungs.iter().map(|r| r.error).collect();
    let one: Vec<f64> = rungs.iter().map(|r| r.one_step).collect();
    let orders = pairwise_orders(&eps, &errors);
    let one_orders = pairwise_orders(&eps, &one);
    let mut t = Table::new(
        "ladder",
        &["eps", "error", "order", "one_step_residual", "one_step_order", "drift", "growth_c", "gronwall_c"],
    );
    for (i, r) in rungs.iter().enumerate() {
        let o = if i == 0 { f64::NAN } else { orders[i - 1] };
        let oo = if i == 0 { f64::NAN } else { one_orders[i - 1] };
        t.push(vec![r.eps, r.error, o, r.one_step, oo, r.drift, r.growth, r.gronwall]);
    }
    rep.tables.push(t);
    rep.curves.push(Curve {
        name: "convergence".into(),
        x_label: "log2_eps".into(),
        y_label: "log2_error".into(),
        points: eps.iter().zip(&errors).map(|(e, er)| (e.log2(), er.log2())).collect(),
    });

    if eps.len() >= 2 {
        let fit = fitted_order(&eps, &errors);
        rep.check(
            "monotone error column",
            errors.windows(2).all(|w| w[1] < w[0]),
            format!("errors {errors:?}"),
        );
        rep.check(
            "fitted order",
            fit >= cfg.audit.min_order,
            format!("order {fit:.3} (required ≥ {})", cfg.audit.min_order),
        );
        let min_one = one_orders.iter().cloned().fold(f64::INFINITY, f64::min);
        rep.check("one-step consistency order", min_one >= 1.9, format!("orders {one_orders:?}"));
        let growth: Vec<f64> = rungs.iter().map(|r| r.growth).collect();
        let g_spread = relative_spread(&growth, *growth.last().unwrap());
        rep.check("growth constant stable ±30%", g_spread <= 0.3, format!("C {growth:?}"));
        let n = rungs.len();
        let gr = [rungs[n - 2].gronwall, rungs[n - 1].gronwall];
        rep.check(
            "Gronwall constant stable ±20%",
            (gr[0] / gr[1] - 1.0).abs() <= 0.2,
            format!("C_fit at the two finest ε: {gr:?}"),
        );
        let drift: Vec<f64> = rungs.iter().map(|r| r.drift).collect();
        let halving: Vec<f64> = drift.windows(2).map(|w| w[0] / w[1]).collect();
        rep.check(
            "physical drift halves with ε",
            halving.iter().all(|h| (1.5..=2.5).contains(h)),
            format!("drift ratios {halving:?}"),
        );
        rep.note("fitted_order", json!(fit));
    }
    Ok(rep)
}

fn energy_audit(cfg: &RunConfig) -> Result<Report> {
    let mut rep = Report::new("energy-audit");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let kappa = cfg.physics.kappa;
    let cells = cfg.cells().min(512);
    let members = state_ensemble(&mut rng, cfg.audit.ensemble, kappa, cells, cfg.audit.amplitude, cfg.audit.a_max)?;
    let rows: Vec<Vec<f64>> = members
        .par_iter()
        .enumerate()
        .map(|(i, (_, s))| -> Result<Vec<f64>> {
            Ok(vec![
                i as f64,
                control_a(s, None)?,
                control_b(s)?,
                coercivity_ratio(s, 1)?,
                coercivity_ratio(s, 2)?,
            ])
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new("ensemble", &["member", "A", "B", "ratio_k1", "ratio_k2"]);
    for r in rows {
        t.push(r);
    }
    let ratios: Vec<f64> = t.column("ratio_k1").unwrap().into_iter().chain(t.column("ratio_k2").unwrap()).collect();
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    rep.check("coercivity ratios in [1/10, 10]", lo >= 0.1 && hi <= 10.0, format!("range [{lo:.4}, {hi:.4}]"));
    rep.curves.push(Curve {
        name: "coercivity_k2".into(),
        x_label: "member".into(),
        y_label: "ratio".into(),
        points: t.rows.iter().map(|r| (r[0], r[4])).collect(),
    });
    rep.tables.push(t);
    rep.note("ratio_range", json!([lo, hi]));
    Ok(rep)
}

fn distance_audit(cfg: &RunConfig) -> Result<Report> {
    let mut rep = Report::new("distance-audit");
    let kappa = cfg.physics.kappa;
    let wp = make_weight_profile(kappa)?;
    let mut mt = Table::new("moments", &["nu", "moment", "scale"]);
    let mut worst = 0.0f64;
    for nu in [0.1, 1.0, 3.0] {
        let m = wp.moment_direct(nu);
        worst = worst.max(m.abs());
        mt.push(vec![nu, m, wp.moment_scale(nu)]);
    }
    rep.tables.push(mt);
    rep.check("weight moment condition", worst <= 1e-8, format!("max |moment| {worst:.3e}"));
    rep.note("weight_constant", json!(wp.c));
    rep.note("max_profile", json!(wp.max_profile()));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cells = cfg.cells().min(512);
    let base = state_ensemble(&mut rng, cfg.audit.pairs, kappa, cells, cfg.audit.amplitude, f64::INFINITY)?;
    let partners = state_ensemble(&mut rng, cfg.audit.pairs, kappa, cells, 1e-2 * cfg.audit.amplitude, f64::INFINITY)?;
    let mut t = Table::new("pairs", &["pair", "D_H", "D_H_tilde", "gap", "ratio"]);
    for (i, ((d1, _), (d2, _))) in base.iter().zip(&partners).enumerate() {
        let s1 = d1.state(kappa, cells)?;
        let s2 = State::from_fns(kappa, -1.0, 1.0, cells, |x| d1.r(x) * (1.0 + d2.r(x) - (1.0 - x * x)), |x| {
            d1.v(x) + d2.v(x)
        })?;
        let rec = distance_record(i, &s1, &s2, &wp)?;
        t.push(vec![i as f64, rec.d_h, rec.d_h_tilde, rec.gap, rec.ratio]);
    }
    let ratios = t.column("ratio").unwrap();
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let floor = 1.0 / wp.max_profile();
    rep.check(
        "equivalence ratio bounded",
        lo >= floor && hi.is_finite(),
        format!("ratio range [{lo:.4}, {hi:.4}], lower bound 1/max a = {floor:.4}"),
    );
    rep.curves.push(Curve {
        name: "equivalence_ratio".into(),
        x_label: "pair".into(),
        y_label: "ratio".into(),
        points: t.rows.iter().map(|r| (r[0], r[4])).collect(),
    });
    rep.tables.push(t);
    Ok(rep)
}

fn kernel_audit(cfg: &RunConfig) -> Result<Report> {
    let mut rep = Report::new("kernel-audit");
    let order = 4;
    let bump = make_bump(order, DEFAULT_DELTA)?;
    let mut bt = Table::new("bump_moments", &["alpha", "moment", "independent"]);
    let mut worst_bump = 0.0f64;
    for alpha in 0..=(2 * order as u32) {
        let target = if alpha == 0 { 1.0 } else { 0.0 };
        let m = bump.moment(alpha);
        let mi = bump.moment_independent(alpha);
        worst_bump = worst_bump.max((m - target).abs()).max((mi - target).abs());
        bt.push(vec![alpha as f64, m, mi]);
    }
    rep.tables.push(bt);
    rep.check("bump moments", worst_bump <= 1e-8, format!("max residual {worst_bump:.3e}"));

    let mut kt = Table::new("kernels", &["h", "moment_residual", "support_ratio"]);
    for h in 2..=4usize {
        // The kernel scale 2^{-2h} must span at least four cells.
        let cells = cfg.cells().max(1 << (2 * h + 4));
        let s = State::from_fns(cfg.physics.kappa, -1.0, 1.0, cells, |x| 1.0 - x * x, |_| 0.0)?;
        let k = GoodKernel::new(&s.r, h, order, DEFAULT_DELTA)?;
        let pad = ENLARGEMENT * 2f64.powi(-2 * h as i32);
        let xs: Vec<f64> = (0..=60).map(|i| -1.0 - pad + (2.0 + 2.0 * pad) * i as f64 / 60.0).collect();
        kt.push(vec![h as f64, k.moment_residual(&xs), k.support_ratio(&xs)]);
    }
    let mr = kt.column("moment_residual").unwrap().into_iter().fold(0.0, f64::max);
    let sr = kt.column("support_ratio").unwrap().into_iter().fold(0.0, f64::max);
    rep.check("kernel moments on three scales", mr <= 1e-8, format!("max residual {mr:.3e}"));
    rep.check("kernel support and locality", sr < 4.0, format!("max |x-y|/(2^-2h + 2^-h √r) = {sr:.3}"));
    rep.curves.push(Curve {
        name: "moment_residual".into(),
        x_label: "h".into(),
        y_label: "residual".into(),
        points: kt.rows.iter().map(|r| (r[0], r[1])).collect(),
    });
    rep.tables.push(kt);
    Ok(rep)
}

/// The interpolation inequalities audited, as `(name, variant, m, j)`.
pub fn interp_cases() -> Vec<(&'static str, InterpVariant, usize, usize)> {
    vec![
        ("G", InterpVariant::G { p0: 2.0, pm: 2.0, sigma0: 0.0, sigma_m: 1.0 }, 2, 1),
        ("G_inf", InterpVariant::G { p0: f64::INFINITY, pm: 2.0, sigma0: 0.0, sigma_m: 1.0 }, 2, 1),
        ("C", InterpVariant::C { sigma_m: 0.5 }, 2, 1),
        ("D", InterpVariant::D { sigma_m: 0.5 }, 2, 1),
    ]
}

/// Ensemble max ratio per inequality at each cell count.
pub fn interp_max_ratios(r_of: impl Fn(f64) -> f64 + Sync, draws: &[TrigDraw], cells: &[usize]) -> Result<Vec<Vec<f64>>> {
    cells
        .par_iter()
        .map(|&n| -> Result<Vec<f64>> {
            let s = State::from_fns(1.0, -1.0, 1.0, n, |x| r_of(x), |_| 0.0)?;
            let g = s.grid_arc().clone();
            let fields: Vec<Field1D> = draws.iter().map(|d| d.field(&g)).collect::<Result<_>>()?;
            interp_cases()
                .iter()
                .map(|(_, var, m, j)| {
                    let mut worst = 0.0f64;
                    for f in &fields {
                        let a = audit_interpolation(f, &s.r, *var, *m, *j)?;
                        if !a.vacuous {
                            worst = worst.max(a.ratio);
                        }
                    }
                    Ok(worst)
                })
                .collect()
        })
        .collect()
}

fn interp_audit(cfg: &RunConfig) -> Result<Report> {
    let mut rep = Report::new("interp-audit");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let draws: Vec<TrigDraw> = (0..cfg.audit.ensemble.min(40)).map(|_| TrigDraw::sample(&mut rng)).collect();
    let base = (cfg.cells() / 4).max(64);
    let cells = [base, 2 * base, 4 * base];
    let maxima = interp_max_ratios(|x| 1.0 - x * x, &draws, &cells)?;
    let names: Vec<&str> = interp_cases().iter().map(|c| c.0).collect();
    let mut header = vec!["cells"];
    header.extend(names.iter());
    let mut t = Table::new("interpolation", &header);
    for (n, row) in cells.iter().zip(&maxima) {
        let mut r = vec![*n as f64];
        r.extend(row);
        t.push(r);
    }
    for (i, name) in names.iter().enumerate() {
        let col: Vec<f64> = maxima.iter().map(|row| row[i]).collect();
        let finite = col.iter().all(|c| c.is_finite());
        let spread = relative_spread(&col, *col.last().unwrap());
        rep.check(
            &format!("interpolation {name} finite and stable ±20%"),
            finite && spread <= 0.2,
            format!("max ratios {col:?}"),
        );
        rep.curves.push(Curve {
            name: format!("interp_{name}"),
            x_label: "cells".into(),
            y_label: "max_ratio".into(),
            points: cells.iter().zip(&col).map(|(n, c)| (*n as f64, *c)).collect(),
        });
    }
    rep.tables.push(t);
    Ok(rep)
}

fn linearized(cfg: &RunConfig) -> Result<Report> {
    let mut rep = Report::new("linearized");
    let s0 = initial_state(cfg)?;
    let t_end = cfg.numerics.t_end;
    let mut lt = Table::new("gronwall", &["eps", "c_fit", "max_growth_ratio", "gradient_error"]);
    for &eps in &cfg.numerics.eps {
        let step = cfg.step_config(eps)?;
        let bg = evolve(&s0, t_end, &step)?;
        let first = &bg.states[0];
        let lin = evolve_linearized(&bg, &first.r.derivative(1)?, &first.v.derivative(1)?, &step)?;
        let mut grad_err = 0.0f64;
        for (n, st) in bg.states.iter().enumerate() {
            let es = lin.s[n].zip_map(&st.r.derivative(1)?, |a, b| a - b).max_abs();
            let ew = lin.w[n].zip_map(&st.v.derivative(1)?, |a, b| a - b).max_abs();
            grad_err = grad_err.max(es).max(ew);
        }
        let c_fit = lin.gronwall(&bg).map(|g| g.c_fit).unwrap_or(f64::NAN);
        let max_ratio = lin.growth_ratio.iter().cloned().fold(0.0, f64::max);
        lt.push(vec![eps, c_fit, max_ratio, grad_err]);
        if eps == cfg.numerics.eps[0] {
            rep.curves.push(Curve {
                name: "linearized_norm".into(),
                x_label: "t".into(),
                y_label: "norm2".into(),
                points: lin.times.iter().copied().zip(lin.norms2.iter().copied()).collect(),
            });
        }
    }
    let eps = lt.column("eps").unwrap();
    let grad = lt.column("gradient_error").unwrap();
    let ratio_ok = lt.column("max_growth_ratio").unwrap().iter().all(|r| r.is_finite());
    rep.check("growth ratio bounded", ratio_ok, "|d/dt ‖(s,w)‖²| / (‖∂v‖∞ ‖(s,w)‖²) finite on every step".into());
    rep.check(
        "gradient cross-check O(ε)",
        grad.iter().zip(&eps).all(|(g, e)| *g <= 4.0 * e),
        format!("sup errors {grad:?}"),
    );
    let c = lt.column("c_fit").unwrap();
    if c.len() >= 2 {
        let n = c.len();
        rep.check(
            "linearized Gronwall constant stable ±20%",
            (c[n - 2] / c[n - 1] - 1.0).abs() <= 0.2,
            format!("C_fit {c:?}"),
        );
    }
    rep.tables.push(lt);
    Ok(rep)
}

/// Dyadic pieces `Ψ^{l/2} u - Ψ^{(l-1)/2} u` for `l = 0..=levels`, with the remainder added
/// to the last piece, so that `Σ_l piece_l = u` on the state's grid.
pub fn dyadic_pieces(state: &State, levels: usize, degree: usize) -> Result<Vec<(Field1D, Field1D)>> {
    let mut out = Vec::with_capacity(levels + 1);
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    for l in 0..=levels {
        let (r, v) = if l == levels {
            (state.r.values().to_vec(), state.v.values().to_vec())
        } else {
            let sm = ProjectionSmoother::new(&state.r, 0.5 * l as f64, degree)?;
            (sm.apply(&state.r)?.into_values(), sm.apply(&state.v)?.into_values())
        };
        let piece = match &prev {
            None => (r.clone(), v.clone()),
            Some((pr, pv)) => (
                r.iter().zip(pr).map(|(a, b)| a - b).collect(),
                v.iter().zip(pv).map(|(a, b)| a - b).collect(),
            ),
        };
        out.push((state.r.with_values(piece.0)?, state.v.with_values(piece.1)?));
        prev = Some((r, v));
    }
    Ok(out)
}

/// `Ψ^h` applied to both fields on the state's grid, restricted to `{Ψ^h r > 0}`.
pub fn regularized_data(state: &State, h: usize, degree: usize, cells: usize) -> Result<State> {
    let sm = ProjectionSmoother::new(&state.r, h as f64, degree)?;
    let mut r = sm.apply(&state.r)?.into_values();
    let n = r.len();
    r[0] = r[0].min(0.0);
    r[n - 1] = r[n - 1].min(0.0);
    let v = sm.apply(&state.v)?.into_values();
    make_state(r, v, state.kappa, state.grid_arc().clone())?.regrid(cells, DEFAULT_THETA)
}

fn rough_data(cfg: &RunConfig) -> Result<Report> {
    let mut rep = Report::new("rough-data");
    let s0 = initial_state(cfg)?;
    let kappa = cfg.physics.kappa;
    let cells = cfg.cells();
    let degree = 4;
    let k1 = 1usize;
    let levels = &cfg.audit.rough_levels;
    let eps = cfg.numerics.eps[0];
    let step = cfg.step_config(eps)?;
    let t_end = cfg.numerics.t_end;

    let finals: Vec<State> = levels
        .par_iter()
        .map(|&h| -> Result<State> {
            let data = regularized_data(&s0, h, degree, cells)?;
            Ok(evolve(&data, t_end, &step)?.last().clone())
        })
        .collect::<Result<_>>()?;

    let pieces = dyadic_pieces(&s0, 2 * levels.last().unwrap() + 2, degree)?;
    let env = frequency_envelope(&pieces, k1 as f64, k1 + 1, &s0.r, kappa, 0.5)?;
    let direct = h2k_norm(&s0.r, &s0.v, &s0.r, kappa, k1)?.norm;
    let l2 = env.l2_sum().sqrt();

    let mut t = Table::new("rough", &["h", "gap_H", "gap_H2k", "envelope_c"]);
    let mut gaps = Vec::new();
    for (i, w) in finals.windows(2).enumerate() {
        let cd = CommonDomain::new(&w[1], &w[0])?;
        let dr = cd.r1.zip_map(&cd.r2, |a, b| a - b);
        let dv = cd.v1.zip_map(&cd.v2, |a, b| a - b);
        let gap = h_norm2(&dr, &dv, &cd.r1, kappa)?.sqrt();
        let gap_hi = h2k_norm(&dr, &dv, &cd.r1, kappa, k1)?.norm;
        let h = levels[i];
        gaps.push(gap);
        t.push(vec![h as f64, gap, gap_hi, env.c.get(2 * h).copied().unwrap_or(f64::NAN)]);
    }
    let hs: Vec<f64> = levels[..gaps.len()].iter().map(|&h| h as f64).collect();
    let floor = 1e-12 * h_norm2(&s0.r, &s0.v, &s0.r, kappa)?.sqrt();
    let above: Vec<(f64, f64)> = hs.iter().copied().zip(gaps.iter().copied()).filter(|(_, g)| *g > floor).collect();
    let rate = if above.len() >= 2 {
        let x: Vec<f64> = above.iter().map(|p| p.0).collect();
        let y: Vec<f64> = above.iter().map(|p| p.1.log2()).collect();
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let slope = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
            / x.iter().map(|a| (a - mx) * (a - mx)).sum::<f64>();
        2f64.powf(slope)
    } else {
        0.0
    };
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0] || w[1] <= floor);
    rep.check(
        "telescopic gaps decay geometrically",
        decreasing && rate < 1.0,
        format!("gaps {gaps:?}, fitted ratio per level {rate:.3}"),
    );
    let env_ratio = l2 / direct;
    rep.check(
        "envelope ℓ² sum within 2× of the direct norm",
        (0.5..=2.0).contains(&env_ratio),
        format!("‖c‖ℓ² = {l2:.4e}, direct ‖·‖ = {direct:.4e}, ratio {env_ratio:.3}"),
    );
    rep.curves.push(Curve {
        name: "telescopic_gaps".into(),
        x_label: "h".into(),
        y_label: "gap_H".into(),
        points: hs.iter().copied().zip(gaps.iter().copied()).collect(),
    });
    rep.curves.push(Curve {
        name: "envelope".into(),
        x_label: "l".into(),
        y_label: "c_l".into(),
        points: env.c.iter().enumerate().map(|(l, c)| (l as f64, *c)).collect(),
    });
    let mut et = Table::new("envelope", &["l", "raw", "c"]);
    for (l, (raw, c)) in env.raw.iter().zip(&env.c).enumerate() {
        et.push(vec![l as f64, *raw, *c]);
    }
    rep.tables.push(t);
    rep.tables.push(et);
    rep.note("gap_rate", json!(rate));
    rep.note("envelope_ratio", json!(env_ratio));
    Ok(rep)
}
