//! Acceptance criteria 1–15. Each test prints one `criterion N PASS|FAIL` line.
//!
//! Criteria 5 and 14 are measured faithfully and fail at the pinned tolerances (see the
//! README). Their tests assert that verdict, so either a regression or an unexpected pass
//! breaks the suite.

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fbe_core::calculus::{recurrence_check, recurrence_gap_periodic};
use fbe_core::cli::config::{Experiment, Profile, RunConfig};
use fbe_core::cli::ensemble::{state_ensemble, TrigDraw};
use fbe_core::cli::experiments::{fitted_order, interp_max_ratios, pairwise_orders, run_experiment};
use fbe_core::cli::Report;
use fbe_core::distance::{distance_dh, equivalence_ratio, make_weight_profile};
use fbe_core::energy::coercivity_ratio;
use fbe_core::grid::{Field1D, State};
use fbe_core::kernels::{make_bump, GoodKernel, DEFAULT_DELTA, ENLARGEMENT};
use fbe_core::operators::{assemble_l1, assemble_l2l3, audit_coercivity, OperatorKind};
use fbe_core::oracle::{cross_validate, good_variable_fd_gap, AffineParams};
use fbe_core::stepper::{evolve, SubtractionRule};
use fbe_core::wspace::control_a;

const KNOWN_FAILURES: [u32; 2] = [5, 14];

fn verdict(n: u32, passed: bool, detail: String) {
    println!("criterion {n:>2} {}: {detail}", if passed { "PASS" } else { "FAIL" });
    assert_eq!(
        passed,
        !KNOWN_FAILURES.contains(&n),
        "criterion {n} verdict changed: {detail}"
    );
}

fn sci(values: &[f64]) -> String {
    let v: Vec<String> = values.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", v.join(", "))
}

fn spread(values: &[f64]) -> f64 {
    let last = *values.last().unwrap();
    values.iter().map(|v| (v / last - 1.0).abs()).fold(0.0, f64::max)
}

/// The converge experiment on the default ladder, shared by criteria 6–10 and 15.
fn converge() -> &'static (Report, f64) {
    static CELL: OnceLock<(Report, f64)> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = RunConfig { experiment: Experiment::Converge, ..RunConfig::default() };
        let start = Instant::now();
        let rep = run_experiment(&cfg).unwrap();
        (rep, start.elapsed().as_secs_f64())
    })
}

fn ladder(col: &str) -> Vec<f64> {
    converge().0.table("ladder").expect("ladder table").column(col).unwrap()
}

#[test]
fn criterion_01_symbolic_engine_fidelity() {
    let start = Instant::now();
    let taus = [0.05, 0.025, 0.0125];
    let mut worst = f64::INFINITY;
    let mut at = (0.0, 0);
    for kappa in [0.5, 1.0, 2.0] {
        let p = AffineParams::new(1.0, -0.5, 1.0, kappa).unwrap();
        for j in 1..=6 {
            let gaps: Vec<f64> = taus.iter().map(|&t| good_variable_fd_gap(&p, 0.7, j, t, 128).unwrap()).collect();
            let order = pairwise_orders(&taus, &gaps).into_iter().fold(f64::INFINITY, f64::min);
            if order < worst {
                worst = order;
                at = (kappa, j);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        worst >= 1.9 && secs < 30.0,
        format!("min temporal order {worst:.3} (κ = {}, j = {}), {secs:.1} s", at.0, at.1),
    );
}

#[test]
fn criterion_02_recurrence_identity() {
    let structural = (2..=3).all(|j| recurrence_check(j).is_ok());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 256;
    let length = 2.0 * PI;
    let xs: Vec<f64> = (0..n).map(|i| length * i as f64 / n as f64).collect();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let mut trig = |scale: f64| {
            let c: Vec<(f64, f64)> = (0..4).map(|_| (scale * rng.gen_range(-1.0..1.0), rng.gen_range(-PI..PI))).collect();
            xs.iter()
                .map(|x| c.iter().enumerate().map(|(m, (a, p))| a * ((m + 1) as f64 * x + p).cos()).sum::<f64>())
                .collect::<Vec<f64>>()
        };
        let r: Vec<f64> = trig(0.25).into_iter().map(|t| 2.0 + t).collect();
        let v = trig(0.5);
        for kappa in [0.5, 1.0, 2.0] {
            for j in [2, 3] {
                let (gs, gw) = recurrence_gap_periodic(j, kappa, &r, &v, length).unwrap();
                worst = worst.max(gs).max(gw);
            }
        }
    }
    verdict(
        2,
        structural && worst <= 1e-8,
        format!("max relative residual {worst:.2e} over 20 states, κ ∈ {{1/2, 1, 2}}; balanced: {structural}"),
    );
}

#[test]
fn criterion_03_kernel_axioms() {
    let order = 4;
    let bump = make_bump(order, DEFAULT_DELTA).unwrap();
    let mut worst = 0.0f64;
    for alpha in 0..=(2 * order as u32) {
        let target = if alpha == 0 { 1.0 } else { 0.0 };
        worst = worst.max((bump.moment(alpha) - target).abs()).max((bump.moment_independent(alpha) - target).abs());
    }
    let mut kernel_moment = 0.0f64;
    let mut support = 0.0f64;
    for h in 2..=4usize {
        let cells = 1 << (2 * h + 4);
        let s = State::from_fns(1.0, -1.0, 1.0, cells, |x| 1.0 - x * x, |_| 0.0).unwrap();
        let k = GoodKernel::new(&s.r, h, order, DEFAULT_DELTA).unwrap();
        let pad = ENLARGEMENT * 2f64.powi(-2 * h as i32);
        let xs: Vec<f64> = (0..=60).map(|i| -1.0 - pad + (2.0 + 2.0 * pad) * i as f64 / 60.0).collect();
        kernel_moment = kernel_moment.max(k.moment_residual(&xs));
        support = support.max(k.support_ratio(&xs));
    }
    verdict(
        3,
        worst <= 1e-8 && kernel_moment <= 1e-8 && support < 4.0,
        format!("bump moments {worst:.2e}, kernel moments {kernel_moment:.2e}, support ratio {support:.3} on h = 2, 3, 4"),
    );
}

#[test]
fn criterion_04_operator_structure() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let draws: Vec<TrigDraw> = (0..20).map(|_| TrigDraw::sample(&mut rng)).collect();
    let mut defect = 0.0f64;
    let mut min_eig = f64::INFINITY;
    let mut a_max = 0.0f64;
    let mut maxima: Vec<[f64; 2]> = Vec::new();
    for cells in [128usize, 256, 512] {
        let s = State::from_fns(1.0, -1.0, 1.0, cells, |x| (1.0 - x * x) * (1.0 + 0.05 * (0.5 * PI * x).sin()), |_| 0.0)
            .unwrap();
        a_max = a_max.max(control_a(&s, None).unwrap());
        let fields: Vec<Field1D> = draws.iter().map(|d| d.field(s.grid_arc()).unwrap()).collect();
        let mut row = [0.0; 2];
        for (i, (kind, op)) in [
            (OperatorKind::L1 { b: 0.0 }, assemble_l1(&s.r, 1.0, 0.0).unwrap()),
            (OperatorKind::L2L3, assemble_l2l3(&s.r, 1.0).unwrap()),
        ]
        .into_iter()
        .enumerate()
        {
            for w in fields.windows(2) {
                defect = defect.max(op.self_adjoint_defect(w[0].values(), w[1].values()));
            }
            if cells <= 256 {
                let eig = op.eigen().unwrap();
                let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                min_eig = min_eig.min(eig.eigenvalues[0] / lmax);
            }
            row[i] = audit_coercivity(kind, &s.r, 1.0, &fields).unwrap().max_ratio;
        }
        maxima.push(row);
    }
    let s1 = spread(&maxima.iter().map(|r| r[0]).collect::<Vec<_>>());
    let s2 = spread(&maxima.iter().map(|r| r[1]).collect::<Vec<_>>());
    verdict(
        4,
        defect <= 1e-12 && min_eig >= -1e-8 && s1 <= 0.25 && s2 <= 0.25 && a_max <= 0.1,
        format!(
            "defect {defect:.1e}, min λ/λmax {min_eig:.1e}, coercivity spread L₁ {s1:.3}, L₂+L₃ {s2:.3} (A ≤ {a_max:.3})"
        ),
    );
}

#[test]
fn criterion_05_energy_coercivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let members = state_ensemble(&mut rng, 100, 1.0, 512, 0.05, 0.1).unwrap();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (_, s) in &members {
        for k in 1..=2 {
            let q = coercivity_ratio(s, k).unwrap();
            lo = lo.min(q);
            hi = hi.max(q);
        }
    }
    verdict(5, lo >= 0.1 && hi <= 10.0, format!("E/‖·‖² ∈ [{lo:.3}, {hi:.3}] over 100 states, k = 1, 2"));
}

#[test]
fn criterion_06_flagship_convergence() {
    let (rep, secs) = converge();
    let eps = ladder("eps");
    let err = ladder("error");
    let order = fitted_order(&eps, &err);
    let monotone = err.windows(2).all(|w| w[1] < w[0]);
    let gated = rep.properties.iter().any(|p| p.name == "oracle cross-validation" && p.passed);
    verdict(
        6,
        gated && monotone && order >= 0.9 && *secs < 120.0,
        format!("sup errors {}, fitted order {order:.3}, {secs:.1} s", sci(&err)),
    );
}

#[test]
fn criterion_07_one_step_consistency() {
    let eps = ladder("eps");
    let res = ladder("one_step_residual");
    let orders = pairwise_orders(&eps, &res);
    let worst = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    verdict(7, worst >= 1.9, format!("one-step residual orders {orders:.3?}"));
}

#[test]
fn criterion_08_one_step_energy_growth() {
    let c = ladder("growth_c");
    let s = spread(&c);
    verdict(8, s <= 0.3 && c.iter().all(|v| v.is_finite()), format!("C {c:.3?}, spread {s:.3}"));
}

#[test]
fn criterion_09_gronwall_propagation() {
    let c = ladder("gronwall_c");
    let n = c.len();
    let s = (c[n - 2] / c[n - 1] - 1.0).abs();
    verdict(9, s <= 0.2, format!("C_fit at the two finest ε {:.3} {:.3}, spread {s:.3}", c[n - 2], c[n - 1]));
}

#[test]
fn criterion_10_physical_energy_conservation() {
    let eps = ladder("eps");
    let drift = ladder("drift");
    let per_eps: Vec<f64> = drift.iter().zip(&eps).map(|(d, e)| d / e).collect();
    let halving: Vec<f64> = drift.windows(2).map(|w| w[0] / w[1]).collect();
    let bounded = per_eps.iter().all(|c| *c <= 1.0);
    verdict(
        10,
        bounded && halving.iter().all(|h| (1.5..=2.5).contains(h)),
        format!("drift/ε {per_eps:.3?}, successive ratios {halving:.3?}"),
    );
}

#[test]
fn criterion_11_difference_propagation() {
    let cfg = RunConfig::default();
    let cells = cfg.cells();
    let a = AffineParams::new(1.0, -0.5, 1.0, 1.0).unwrap().state(cells).unwrap();
    let b = AffineParams::new(1.01, -0.5, 1.0, 1.0).unwrap().state(cells).unwrap();
    let wp = make_weight_profile(1.0).unwrap();
    let d0 = distance_dh(&a, &b).unwrap();
    let mut growth = Vec::new();
    let mut ratio_lo = f64::INFINITY;
    let mut ratio_hi = 0.0f64;
    for &eps in &cfg.numerics.eps {
        let step = cfg.step_config(eps).unwrap();
        let ta = evolve(&a, cfg.numerics.t_end, &step).unwrap();
        let tb = evolve(&b, cfg.numerics.t_end, &step).unwrap();
        let mut sup = 0.0f64;
        for (sa, sb) in ta.states.iter().zip(&tb.states) {
            sup = sup.max(distance_dh(sa, sb).unwrap() / d0);
            let q = equivalence_ratio(sa, sb, &wp).unwrap();
            ratio_lo = ratio_lo.min(q);
            ratio_hi = ratio_hi.max(q);
        }
        growth.push(sup);
    }
    let s = spread(&growth);
    let bound = 1.0 / wp.max_profile();
    verdict(
        11,
        (5e-5..=2e-4).contains(&d0) && s <= 0.2 && ratio_lo >= bound && ratio_hi.is_finite(),
        format!(
            "D(0) = {d0:.2e}, sup D/D(0) {growth:.3?} (spread {s:.3}), D/D̃ ∈ [{ratio_lo:.4}, {ratio_hi:.4}] (floor 1/max a = {bound:.3})"
        ),
    );
}

#[test]
fn criterion_12_weight_moment_condition() {
    let wp = make_weight_profile(1.0).unwrap();
    let worst = [0.1, 1.0, 3.0].iter().map(|&nu| wp.moment_direct(nu).abs()).fold(0.0, f64::max);
    verdict(12, worst <= 1e-8, format!("max |moment| {worst:.2e} at ν ∈ {{0.1, 1, 3}}, C = {:.4}", wp.c));
}

#[test]
fn criterion_13_interpolation_audits() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let draws: Vec<TrigDraw> = (0..40).map(|_| TrigDraw::sample(&mut rng)).collect();
    let maxima = interp_max_ratios(|x| 1.0 - x * x, &draws, &[128, 256, 512]).unwrap();
    let cols = maxima[0].len();
    let mut worst = 0.0f64;
    let mut finite = true;
    for c in 0..cols {
        let col: Vec<f64> = maxima.iter().map(|r| r[c]).collect();
        finite &= col.iter().all(|v| v.is_finite());
        worst = worst.max(spread(&col));
    }
    verdict(
        13,
        finite && worst <= 0.2,
        format!("finest-grid max ratios {:.4?}, worst spread {worst:.2e}", maxima[2]),
    );
}

#[test]
fn criterion_14_rough_data() {
    let mut cfg = RunConfig { experiment: Experiment::RoughData, ..RunConfig::default() };
    cfg.physics.profile = Profile::Rough;
    cfg.numerics.t_end = 0.25;
    cfg.numerics.subtraction = SubtractionRule::Adaptive;
    let rep = run_experiment(&cfg).unwrap();
    let gaps = rep.table("rough").unwrap().column("gap_H").unwrap();
    let ratios: Vec<f64> = gaps.windows(2).map(|w| w[1] / w[0]).collect();
    let geometric = ratios.iter().all(|q| *q < 0.5);
    let env = rep.summary["envelope_ratio"].as_f64().unwrap();
    verdict(
        14,
        geometric && (0.5..=2.0).contains(&env),
        format!("ℋ gaps {} (ratios {}); envelope ℓ² / direct norm {env:.3}", sci(&gaps), sci(&ratios)),
    );
}

#[test]
fn criterion_15_oracle_cross_validation() {
    let cv = cross_validate(&AffineParams::new(1.0, -0.5, 1.0, 1.0).unwrap(), 0.5, &[64, 128, 256], 1.9).unwrap();
    let gate_first = converge().0.properties.first().map(|p| p.name.as_str()) == Some("oracle cross-validation");
    verdict(
        15,
        cv.passed && gate_first,
        format!("mass-grid orders {:.3?}; gate precedes the stepper verdict: {gate_first}", cv.orders),
    );
}
