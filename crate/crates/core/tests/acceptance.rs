//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use flexquad::adaptive::ReferenceKind;
use flexquad::config::Config;
use flexquad::delay::{rightmost_root, stability_map, DelaySystem, RootOptions};
use flexquad::dynamics::{
    linearize_hover, rigid_derivatives, Mixer, QuadrotorParams, RigidState, RIGID_STATES,
};
use flexquad::integrate::rk4_step;
use flexquad::linalg;
use flexquad::modal::{
    frequency_residual, normalization_integral, orthogonality_gram, solve_frequency_roots,
};
use flexquad::output;
use flexquad::scenario::{
    run_linear_bench, run_scenario, tip_rms, tracking_metric, Anomaly, Profile, ReferenceSchedule,
};
use nalgebra::{Complex, DMatrix, DVector, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within_budget(elapsed: Duration, budget_s: f64) -> bool {
    elapsed.as_secs_f64() < budget_s
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let roots = solve_frequency_roots(0.0, 3).unwrap();
    let oracle: Vec<f64> = (1..=3).map(common::clamped_free_root).collect();
    let tabulated = [1.87510, 4.69409, 7.85476];
    let root_err = roots
        .iter()
        .zip(&oracle)
        .zip(&tabulated)
        .map(|((r, o), p)| (r - o).abs().max((r - p).abs()))
        .fold(0.0, f64::max);
    let mut worst_residual: f64 = 0.0;
    for mr in [0.0, 0.05, 0.2, 0.5, 1.0] {
        for b in solve_frequency_roots(mr, 3).unwrap() {
            worst_residual = worst_residual.max(frequency_residual(b, mr).abs());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        root_err < 1e-4 && worst_residual < 1e-10 && within_budget(elapsed, 1.0),
        format!("root error {root_err:.2e}, max residual {worst_residual:.2e}, {elapsed:.2?}"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let cfg = Config::default_config();
    let basis = cfg.modal_basis().unwrap();
    let length = basis.beam.length;
    let mut gamma_err: f64 = 0.0;
    for m in &basis.modes {
        let closed = normalization_integral(m.beta_bar, length);
        let quad = common::simpson(|x| common::raw_shape(m.beta_bar, length, x).powi(2), 0.0, length, 20_000);
        gamma_err = gamma_err.max(((closed - quad) / quad).abs());
    }
    let gram = orthogonality_gram(&basis);
    let n = gram.nrows();
    let mut diag: f64 = 0.0;
    let mut off: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            let e = (gram[(i, j)] - target).abs();
            if i == j {
                diag = diag.max(e);
            } else {
                off = off.max(e);
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        gamma_err < 1e-8 && diag < 1e-8 && off < 1e-6 && within_budget(elapsed, 5.0),
        format!("normalization rel. error {gamma_err:.2e}, Gram diag {diag:.2e}, off-diag {off:.2e}, {elapsed:.2?}"),
    )
}

fn criterion_3() -> Outcome {
    let basis = Config::default_config().modal_basis().unwrap();
    let w1 = basis.modes[0].omega;
    let ratio = basis.modes[1].omega / w1;
    outcome(
        (w1 - 131.0).abs() <= 0.01 * 131.0 && (3.24..=6.27).contains(&ratio),
        format!("omega_1 = {w1:.4} rad/s, omega_2/omega_1 = {ratio:.4}"),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let params = QuadrotorParams::default();
    let u = params.hover_input();
    let dt = 1e-3;
    let mut y = DVector::zeros(RIGID_STATES);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        y = rk4_step(&y, dt, |_, s| {
            let d = rigid_derivatives(&RigidState::from_slice(s.as_slice()), &u, 0.0, &params);
            DVector::from_column_slice(d.to_vector().as_slice())
        });
        worst = worst.max(y.amax());
    }

    // Same check through the full closed loop with zero references.
    let mut cfg = Config::default_config();
    cfg.scenario.anomaly = None;
    cfg.scenario.duration = 10.0;
    cfg.scenario.reference = Default::default();
    cfg.controller.reference_amplitude = Some(1.0);
    let res = cfg.pipeline().unwrap().run().unwrap();
    let loop_worst = res.rigid.iter().flat_map(|r| r.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
    let elapsed = start.elapsed();
    outcome(
        worst < 1e-9 && loop_worst < 1e-9 && within_budget(elapsed, 10.0),
        format!("open loop max deviation {worst:.2e}, closed loop {loop_worst:.2e}, {elapsed:.2?}"),
    )
}

fn criterion_5() -> Outcome {
    let params = QuadrotorParams::default();
    let mixer = Mixer::new(&params).unwrap();
    let lin = linearize_hover(&params);
    let trim = params.hover_input();
    let f = |x: &DVector<f64>, du: &Vector4<f64>| {
        let u = trim + du;
        let alloc = mixer.allocate(&u);
        let d = rigid_derivatives(&RigidState::from_slice(x.as_slice()), &alloc.applied, alloc.gyro_speed, &params);
        DVector::from_column_slice(d.to_vector().as_slice())
    };
    let h = 1e-6;
    let x0 = DVector::zeros(RIGID_STATES);
    let mut worst: f64 = 0.0;
    for j in 0..RIGID_STATES {
        let mut xp = x0.clone();
        let mut xm = x0.clone();
        xp[j] += h;
        xm[j] -= h;
        let col = (f(&xp, &Vector4::zeros()) - f(&xm, &Vector4::zeros())) / (2.0 * h);
        for i in 0..RIGID_STATES {
            let a = lin.a_p[(i, j)];
            worst = worst.max((col[i] - a).abs() / a.abs().max(1.0));
        }
    }
    for j in 0..4 {
        let mut dp = Vector4::zeros();
        dp[j] = h;
        let col = (f(&x0, &dp) - f(&x0, &(-dp))) / (2.0 * h);
        for i in 0..RIGID_STATES {
            let b = lin.b_p[(i, j)];
            worst = worst.max((col[i] - b).abs() / b.abs().max(1.0));
        }
    }
    outcome(worst < 1e-6, format!("max entrywise relative error {worst:.2e}"))
}

fn criterion_6() -> Outcome {
    let cfg = Config::default_config();
    let params = cfg.params().unwrap();
    let controller = cfg.controller(&params).unwrap();
    let m = &controller.reference.a_m + &controller.reference.l;
    let residual = linalg::lyapunov_residual(&m, &controller.p, &controller.q);

    // Lyapunov function along a 20 s anomaly run of the linear plant.
    let plant_a = {
        let lin = linearize_hover(&params);
        let n = controller.n_states();
        let mut a = DMatrix::zeros(n, n);
        a.view_mut((0, 0), (12, 12)).copy_from(&lin.a_p);
        a.view_mut((12, 0), (4, 12)).copy_from(&lin.c_p);
        a
    };
    let anomaly = Anomaly { time: 5.0, effectiveness: Vector4::new(1.0, 0.25, 0.5, 1.0) };
    // A held offset keeps the tracking error alive after the anomaly.
    let held = |v: [f64; 4]| ReferenceSchedule { channels: v.map(Profile::constant) };
    let reference = held([1.0, -0.5, 1.0, 0.3]);
    let trace = run_linear_bench(&controller, &plant_a, Some(anomaly), &reference, 20.0, 1e-3).unwrap();
    let jump = trace.anomaly_index.unwrap();
    let mut worst_rise = f64::NEG_INFINITY;
    for k in 1..trace.lyapunov.len() {
        if k == jump {
            continue;
        }
        worst_rise = worst_rise.max(trace.lyapunov[k] - trace.lyapunov[k - 1]);
    }

    let peak = trace.lyapunov.iter().cloned().fold(0.0, f64::max);

    // Projection containment over randomized runs with tight bounds.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_ratio: f64 = 0.0;
    let mut active = 0;
    for _ in 0..100 {
        let mut c = cfg.clone();
        let bound: f64 = rng.random_range(0.05..0.5);
        c.controller.theta_max = vec![bound; 4];
        c.controller.projection_tolerance = rng.random_range(0.05..0.3);
        c.controller.gamma_scale = rng.random_range(1.0..50.0);
        c.controller.mode = if rng.random_bool(0.5) { ReferenceKind::Crm } else { ReferenceKind::Mrac };
        let ctrl = c.controller(&params).unwrap();
        let lam = Vector4::new(1.0, rng.random_range(0.2..1.0), rng.random_range(0.2..1.0), 1.0);
        let an = Anomaly { time: rng.random_range(0.0..1.0), effectiveness: lam };
        let r = held(std::array::from_fn(|_| rng.random_range(-2.0..2.0)));
        let tr = run_linear_bench(&ctrl, &plant_a, Some(an), &r, 2.0, 1e-3);
        let tr = match tr {
            Ok(tr) => tr,
            Err(e) => return outcome(false, format!("randomized bench run failed: {e}")),
        };
        let limit = bound * (1.0 + c.controller.projection_tolerance);
        for norms in &tr.theta_norms {
            for &v in norms {
                worst_ratio = worst_ratio.max(v / limit);
                if v > bound / (1.0 + c.controller.projection_tolerance).sqrt() {
                    active += 1;
                }
            }
        }
    }
    outcome(
        residual < 1e-9 && worst_rise <= 1e-6 && peak > 0.0 && worst_ratio <= 1.0,
        format!(
            "Lyapunov residual {residual:.2e}, V peak {peak:.3e}, largest V increase {worst_rise:.2e}, \
             max |theta_j|/(theta_max(1+eps)) {worst_ratio:.4} ({active} samples in the boundary layer)"
        ),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let opts = RootOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut zero_delay_err: f64 = 0.0;
    for _ in 0..20 {
        let a_n = DMatrix::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0));
        let a_d = DMatrix::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0));
        let sys = DelaySystem::new(a_n.clone(), a_d.clone(), 0.0).unwrap();
        let root = rightmost_root(&sys, &opts).unwrap().root;
        let dense = linalg::spectral_abscissa(&(&a_n + &a_d));
        zero_delay_err = zero_delay_err.max((root.re - dense).abs());
    }
    let scalar = |a: f64, b: f64, tau: f64| {
        DelaySystem::new(DMatrix::from_element(1, 1, a), DMatrix::from_element(1, 1, b), tau).unwrap()
    };
    let lambert = common::lambert_w(Complex::new(-1.0, 0.0), Complex::new(-0.3, 1.3));
    let bench = rightmost_root(&scalar(0.0, -1.0, 1.0), &opts).unwrap().root;
    let bench_err = (bench - lambert).norm();
    let hayes = rightmost_root(&scalar(0.0, -1.0, std::f64::consts::FRAC_PI_2), &opts).unwrap().root;
    let elapsed = start.elapsed();
    outcome(
        zero_delay_err < 1e-8 && bench_err < 1e-3 && hayes.re.abs() < 1e-6 && within_budget(elapsed, 5.0),
        format!(
            "tau=0 error {zero_delay_err:.2e}, s=-exp(-s) root {:.4}{:+.4}i (error {bench_err:.2e}), \
             boundary Re {:.2e}, {elapsed:.2?}",
            bench.re, bench.im, hayes.re
        ),
    )
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let cfg = Config::default_config();
    let problem = cfg.stability_problem().unwrap();
    let opts = cfg.root_options();
    let (kp, tp) = cfg.sweep_ranges().unwrap();
    let map = stability_map(&problem, &kp, &tp, &opts).unwrap();
    let map_time = start.elapsed();
    let mixed = map.stable_count() > 0 && map.unstable_count() > 0 && map.failed_count() == 0;

    // Time-domain growth or decay at cells with a clear sign.
    let mut agree = 0;
    let mut checked = 0;
    let picks = [(0, 0), (39, 0), (39, 39), (10, 20), (30, 5), (25, 35), (39, 20)];
    for (i, j) in picks {
        let cell = map.cell(i, j);
        if cell.re.abs() < 0.03 {
            continue;
        }
        checked += 1;
        let op = flexquad::operator::realize_operator(cell.kp, cell.tp, problem.delay).unwrap();
        let sys = flexquad::delay::build_closed_loop_dde(&problem.a_m, &problem.b_m, &op, &problem.e_h).unwrap();
        let mu0 = DVector::from_fn(sys.dim(), |k, _| 0.1 + 0.01 * k as f64);
        let trace = common::simulate_dde(&sys.a_n, &sys.a_d, sys.tau, &mu0, 0.01, 150.0);
        let rate = common::growth_rate(&trace, (90.0, 110.0), (130.0, 150.0));
        if (rate < 0.0) == (cell.re < 0.0) {
            agree += 1;
        }
    }

    // Nominal operator gains: root sign against a closed-loop run.
    let point = problem.root_at(0.59, 0.41, &opts).unwrap();
    let mut hcfg = cfg.clone();
    hcfg.operator.enabled = true;
    hcfg.operator.kp = 0.59;
    hcfg.operator.tp = 0.41;
    hcfg.controller.mode = ReferenceKind::Crm;
    let bounded = match hcfg.pipeline().unwrap().run() {
        Ok(res) => {
            let tail: Vec<f64> = res
                .times
                .iter()
                .zip(&res.rigid)
                .zip(&res.references)
                .filter(|((t, _), _)| **t >= 60.0)
                .map(|((_, x), r)| (x[2] - r[2]).abs())
                .collect();
            tail.iter().all(|v| *v < 1.0)
        }
        Err(_) => false,
    };
    let elapsed = start.elapsed();
    outcome(
        mixed && checked >= 5 && agree == checked && (bounded == (point.root.re < 0.0)) && within_budget(elapsed, 300.0),
        format!(
            "{} stable / {} unstable / {} failed cells (map {map_time:.2?}); time-domain agreement {agree}/{checked}; \
             (0.59, 0.41) root {:.4}{:+.4}i, simulation bounded: {bounded}; {elapsed:.2?}",
            map.stable_count(),
            map.unstable_count(),
            map.failed_count(),
            point.root.re,
            point.root.im
        ),
    )
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let mut cfg = Config::default_config();
    let mut run = |kind| {
        cfg.controller.mode = kind;
        let res = cfg.pipeline().unwrap().run().unwrap();
        let (a, b) = (res.window_start(), res.end_time());
        (tracking_metric(&res, a, b).unwrap(), tip_rms(&res, a, b).unwrap(), res.anomaly_time)
    };
    let (mrac, mrac_tip, ta) = run(ReferenceKind::Mrac);
    let (crm, crm_tip, _) = run(ReferenceKind::Crm);
    let axes_ok = (0..4).all(|i| crm[i] < mrac[i]);
    let elapsed = start.elapsed();
    outcome(
        axes_ok && crm_tip < mrac_tip && ta == Some(16.0) && within_budget(elapsed, 120.0),
        format!(
            "M_e MRAC [{:.3e}, {:.3e}, {:.3e}, {:.3e}] vs CRM [{:.3e}, {:.3e}, {:.3e}, {:.3e}]; \
             tip RMS {mrac_tip:.6e} vs {crm_tip:.6e}; {elapsed:.2?}",
            mrac[0], mrac[1], mrac[2], mrac[3], crm[0], crm[1], crm[2], crm[3]
        ),
    )
}

fn criterion_10() -> Outcome {
    let cfg = Config::default_config();
    let render = || {
        let res = cfg.pipeline().unwrap().run().unwrap();
        [
            output::trajectory_csv(&res, 1),
            output::control_csv(&res, 1),
            output::tips_csv(&res, 1),
            output::theta_csv(&res),
        ]
    };
    let identical = render() == render();

    // Smooth run: seeded initial offset, no anomaly, no reference changes.
    let mut smooth = cfg.clone();
    smooth.scenario.anomaly = None;
    smooth.scenario.reference = Default::default();
    smooth.scenario.initial_perturbation = 0.05;
    smooth.scenario.seed = 5;
    smooth.scenario.duration = 2.0;
    smooth.controller.reference_amplitude = Some(1.0);
    let pipeline = smooth.pipeline().unwrap();
    let final_state = |dt: f64| {
        let mut sc = pipeline.scenario.clone();
        sc.dt = dt;
        run_scenario(&sc, &pipeline.vehicle, &pipeline.controller, None).unwrap().final_state
    };
    // The stiffest arm mode is in the asymptotic RK4 regime only once dt*omega < ~0.25.
    let dt = 1e-4;
    let reference = final_state(dt / 8.0);
    let e1 = (final_state(dt) - &reference).norm();
    let e2 = (final_state(dt / 2.0) - &reference).norm();
    let ratio = e1 / e2;
    outcome(
        identical && (8.0..=32.0).contains(&ratio),
        format!("bit-identical repeat: {identical}; step-halving error ratio {ratio:.2} ({e1:.3e} -> {e2:.3e})"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("modal correctness", criterion_1),
        ("normalization and orthogonality", criterion_2),
        ("first-mode calibration", criterion_3),
        ("hover equilibrium", criterion_4),
        ("hover linearization", criterion_5),
        ("Lyapunov machinery", criterion_6),
        ("delay root solver", criterion_7),
        ("stability map", criterion_8),
        ("controller comparison", criterion_9),
        ("determinism and convergence", criterion_10),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failures += 1;
        }
        println!("criterion {:>2} {:<32} {}  {}", i + 1, name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
