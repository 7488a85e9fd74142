//! Acceptance gate. Runs every criterion, prints one line each and exits
//! non-zero if any fails. Each check uses its own oracle rather than the
//! library code path it is checking.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use wingload::allocator::{allocate_qp, ActiveSetOptions, AllocStatus, AllocationProblem, QpAllocator};
use wingload::constraints::{assemble, InputLimits};
use wingload::harness::{
    batch, compare_controllers, count_inversions, simulate, sweep, Condition, ControllerKind, ScenarioConfig,
};
use wingload::indi::{certify_log, lyapunov_certificate};
use wingload::numerics::{integrate_step, pseudo_inverse, solve_care};
use wingload::plant::{synthesize_wing_model, BacklashParams, PlantOptions, TwinParams, WingPlant};
use wingload::shapes::build_basis;

type Mat = DMatrix<f64>;
type Vector = DVector<f64>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("allocator matches brute-force KKT enumeration", c1_allocator_oracle),
        ("constraint assembly matches direct limits", c2_constraint_membership),
        ("pseudo-inverse right identity", c3_pseudo_inverse),
        ("shape functions give one quartic", c4_shape_smoothness),
        ("allocator diagnostics on +35 % maneuver", c5_allocator_diagnostics),
        ("+30 % maneuver tracking", c6_mla),
        ("gust sweep trend", c7_gla_trend),
        ("controller comparison orderings", c8_comparison),
        ("bound certificates", c9_certificates),
        ("backlash hysteresis", c10_backlash),
        ("numerics kernels", c11_numerics),
        ("determinism", c12_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict}: {name} [{:.2} s] {}", i + 1, start.elapsed().as_secs_f64(), o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}

// 1 ------------------------------------------------------------------------

struct BoxAndPairs {
    lo: Vec<f64>,
    hi: Vec<f64>,
    pair_lo: Vec<f64>,
    pair_hi: Vec<f64>,
}

/// Bounds on `Δu` read straight off the physical limits.
fn physical_bounds(l: &InputLimits, u0: &Vector) -> BoxAndPairs {
    let m = u0.len();
    let lo = (0..m).map(|i| (l.u_min[i] - u0[i]).max(l.rate_min[i] * l.dt)).collect();
    let hi = (0..m).map(|i| (l.u_max[i] - u0[i]).min(l.rate_max[i] * l.dt)).collect();
    let pair_lo = (0..m - 1).map(|i| -l.u_adj[i] - (u0[i] - u0[i + 1])).collect();
    let pair_hi = (0..m - 1).map(|i| l.u_adj[i] - (u0[i] - u0[i + 1])).collect();
    BoxAndPairs { lo, hi, pair_lo, pair_hi }
}

fn feasible(bounds: &BoxAndPairs, du: &Vector, tol: f64) -> bool {
    let m = du.len();
    (0..m).all(|i| du[i] >= bounds.lo[i] - tol && du[i] <= bounds.hi[i] + tol)
        && (0..m - 1).all(|i| {
            let d = du[i] - du[i + 1];
            d >= bounds.pair_lo[i] - tol && d <= bounds.pair_hi[i] + tol
        })
}

/// Global minimizer by enumerating every linearly independent set of
/// binding bounds and solving each equality-constrained problem.
fn brute_force(h: &Mat, f: &Vector, bounds: &BoxAndPairs) -> Option<(Vector, f64)> {
    let m = f.len();
    let families = 2 * m - 1;
    let mut state = vec![0u8; families];
    let mut best: Option<(Vector, f64)> = None;
    let objective = |x: &Vector| 0.5 * x.dot(&(h * x)) + f.dot(x);

    fn visit(
        j: usize,
        active: usize,
        state: &mut Vec<u8>,
        m: usize,
        eval: &mut dyn FnMut(&[u8]),
    ) {
        if j == state.len() {
            eval(state);
            return;
        }
        state[j] = 0;
        visit(j + 1, active, state, m, eval);
        if active < m {
            for s in [1u8, 2] {
                state[j] = s;
                visit(j + 1, active + 1, state, m, eval);
            }
            state[j] = 0;
        }
    }

    let mut eval = |state: &[u8]| {
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for (j, &s) in state.iter().enumerate() {
            if s == 0 {
                continue;
            }
            let mut a = vec![0.0; m];
            let rhs;
            if j < m {
                a[j] = 1.0;
                rhs = if s == 1 { bounds.lo[j] } else { bounds.hi[j] };
            } else {
                let i = j - m;
                a[i] = 1.0;
                a[i + 1] = -1.0;
                rhs = if s == 1 { bounds.pair_lo[i] } else { bounds.pair_hi[i] };
            }
            rows.push((a, rhs));
        }
        let k = rows.len();
        let e = Mat::from_fn(k, m, |r, c| rows[r].0[c]);
        if k > 0 && e.rank(1e-9) < k {
            return;
        }
        let mut kkt = Mat::zeros(m + k, m + k);
        kkt.view_mut((0, 0), (m, m)).copy_from(h);
        kkt.view_mut((m, 0), (k, m)).copy_from(&e);
        kkt.view_mut((0, m), (m, k)).copy_from(&e.transpose());
        let mut rhs = Vector::zeros(m + k);
        rhs.rows_mut(0, m).copy_from(&(-f));
        for (r, row) in rows.iter().enumerate() {
            rhs[m + r] = row.1;
        }
        let Some(sol) = kkt.lu().solve(&rhs) else { return };
        let x = sol.rows(0, m).into_owned();
        if !feasible(bounds, &x, 1e-8) {
            return;
        }
        let v = objective(&x);
        if best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((x, v));
        }
    };
    visit(0, 0, &mut state, m, &mut eval);
    best
}

fn random_instance(rng: &mut ChaCha8Rng) -> (InputLimits, AllocationProblem) {
    let m = rng.random_range(2..=6);
    loop {
        let u_min: Vec<f64> = (0..m).map(|_| -rng.random_range(5.0..40.0)).collect();
        let u_max: Vec<f64> = (0..m).map(|_| rng.random_range(5.0..40.0)).collect();
        let rate: Vec<f64> = (0..m).map(|_| rng.random_range(20.0..120.0)).collect();
        let adj: Vec<f64> = (0..m - 1).map(|_| rng.random_range(2.0..60.0)).collect();
        let limits = InputLimits::new(u_min.clone(), u_max.clone(), rate.iter().map(|r| -r).collect(), rate, adj, 0.015)
            .expect("valid random limits");
        let u0 = Vector::from_fn(m, |i, _| rng.random_range(u_min[i]..u_max[i]));
        let Ok(ineq) = assemble(&limits, &u0) else { continue };
        let b_eff = Mat::from_fn(2, m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let push = Vector::from_fn(m, |_, _| rng.random_range(-4.0..4.0));
        let target = &b_eff * push;
        let w1 = Mat::from_diagonal(&Vector::from_fn(2, |_, _| rng.random_range(0.5..2.0)));
        let sigma = [1e-3, 1e-2, 1e-1][rng.random_range(0..3)];
        let problem = AllocationProblem {
            b_eff,
            target,
            w1,
            w2: Mat::identity(m, m),
            sigma,
            u0,
            u_star: Vector::zeros(m),
            ineq,
        };
        return (limits, problem);
    }
}

fn c1_allocator_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11C);
    let mut instances = Vec::with_capacity(500);
    while instances.len() < 500 {
        instances.push(random_instance(&mut rng));
    }

    let start = Instant::now();
    let mut warm: Vec<QpAllocator> = (0..=6).map(|_| QpAllocator::new(ActiveSetOptions::default())).collect();
    let mut solved = Vec::with_capacity(instances.len());
    for (_, p) in &instances {
        let cold = allocate_qp(p);
        let hot = warm[p.m()].allocate_qp(p);
        solved.push((cold, hot));
    }
    let solver_time = start.elapsed().as_secs_f64();

    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_violation = 0.0f64;
    let mut bad = 0;
    for ((limits, p), (cold, hot)) in instances.iter().zip(&solved) {
        let bounds = physical_bounds(limits, &p.u0);
        let h = p.b_eff.transpose() * &p.w1 * &p.b_eff + &p.w2 * p.sigma;
        let f = -(p.b_eff.transpose() * (&p.w1 * &p.target)) + &p.w2 * (&p.u0 - &p.u_star) * p.sigma;
        let Some((_, oracle_obj)) = brute_force(&h, &f, &bounds) else {
            bad += 1;
            continue;
        };
        // The brute-force objective drops the constant term; put it back.
        let d0 = &p.u0 - &p.u_star;
        let constant = 0.5 * p.target.dot(&(&p.w1 * &p.target)) + 0.5 * p.sigma * d0.dot(&(&p.w2 * &d0));
        let oracle_obj = oracle_obj + constant;
        for r in [cold, hot] {
            match r {
                Ok(r) if r.status == AllocStatus::Optimal => {
                    let gap = p.objective(&r.delta_u) - oracle_obj;
                    worst_gap = worst_gap.max(gap);
                    let v = violation(&bounds, &r.delta_u);
                    worst_violation = worst_violation.max(v);
                    if gap > 1e-6 || v > 1e-9 {
                        bad += 1;
                    }
                }
                _ => bad += 1,
            }
        }
    }
    outcome(
        bad == 0 && solver_time < 30.0,
        format!(
            "500 instances cold and warm, {bad} mismatches, worst objective gap {worst_gap:.2e}, worst violation {worst_violation:.2e}, solver {solver_time:.3} s"
        ),
    )
}

fn violation(bounds: &BoxAndPairs, du: &Vector) -> f64 {
    let m = du.len();
    let mut v = 0.0f64;
    for i in 0..m {
        v = v.max(bounds.lo[i] - du[i]).max(du[i] - bounds.hi[i]);
    }
    for i in 0..m - 1 {
        let d = du[i] - du[i + 1];
        v = v.max(bounds.pair_lo[i] - d).max(d - bounds.pair_hi[i]);
    }
    v
}

// 2 ------------------------------------------------------------------------

/// Draw from a 1/64 grid so every sum and product below is exact and
/// boundary cases occur often.
fn grid(rng: &mut ChaCha8Rng, lo: i32, hi: i32) -> f64 {
    rng.random_range(lo..=hi) as f64 / 64.0
}

fn c2_constraint_membership() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0_57);
    let dt = 1.0 / 64.0;
    let mut checks = 0;
    let mut disagreements = 0;
    let mut on_boundary = 0;
    while checks < 10_000 {
        let m = rng.random_range(2..=12);
        let u_min: Vec<f64> = (0..m).map(|_| grid(&mut rng, -2560, -64)).collect();
        let u_max: Vec<f64> = (0..m).map(|_| grid(&mut rng, 64, 2560)).collect();
        let rate_min: Vec<f64> = (0..m).map(|_| grid(&mut rng, -8192, -640)).collect();
        let rate_max: Vec<f64> = (0..m).map(|_| grid(&mut rng, 640, 8192)).collect();
        let adj: Vec<f64> = (0..m - 1).map(|_| grid(&mut rng, 64, 3840)).collect();
        let limits = InputLimits::new(u_min.clone(), u_max.clone(), rate_min.clone(), rate_max.clone(), adj.clone(), dt)
            .expect("valid limits");
        let u0 = Vector::from_fn(m, |i, _| grid(&mut rng, (u_min[i] * 64.0) as i32, (u_max[i] * 64.0) as i32));
        let Ok(ineq) = assemble(&limits, &u0) else { continue };
        for _ in 0..10 {
            let u = Vector::from_fn(m, |i, _| {
                if rng.random_bool(0.2) {
                    // Land exactly on a limit.
                    [u_min[i], u_max[i], u0[i] + rate_min[i] * dt, u0[i] + rate_max[i] * dt][rng.random_range(0..4)]
                } else {
                    u0[i] + grid(&mut rng, (rate_min[i] * dt * 80.0) as i32, (rate_max[i] * dt * 80.0) as i32)
                }
            });
            let du = &u - &u0;
            let direct = (0..m).all(|i| u[i] >= u_min[i] && u[i] <= u_max[i])
                && (0..m - 1).all(|i| (u[i] - u[i + 1]).abs() <= adj[i])
                && (0..m).all(|i| du[i] >= rate_min[i] * dt && du[i] <= rate_max[i] * dt);
            let assembled = ineq.is_satisfied(&du, 0.0);
            on_boundary += usize::from(ineq.max_violation(&du) == 0.0);
            disagreements += usize::from(direct != assembled);
            checks += 1;
        }
    }
    outcome(
        disagreements == 0,
        format!("{checks} checks, {disagreements} disagreements, {on_boundary} exactly on a boundary"),
    )
}

// 3 ------------------------------------------------------------------------

fn c3_pseudo_inverse() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9_1B);
    let mut worst = 0.0f64;
    let mut worst_formula = 0.0f64;
    for _ in 0..100 {
        let b = Mat::from_fn(2, 12, |_, _| rng.sample::<f64, _>(StandardNormal));
        let pinv = match pseudo_inverse(&b) {
            Ok(p) => p,
            Err(e) => return outcome(false, format!("pseudo-inverse failed: {e}")),
        };
        worst = worst.max((&b * &pinv - Mat::identity(2, 2)).amax());
        let gram = (&b * b.transpose()).try_inverse().expect("full row rank");
        worst_formula = worst_formula.max((&pinv - b.transpose() * gram).amax());
    }
    outcome(
        worst <= 1e-10,
        format!("100 random 2x12, max |B B+ - I| = {worst:.2e}, max |B+ - Bt(B Bt)^-1| = {worst_formula:.2e}"),
    )
}

// 4 ------------------------------------------------------------------------

fn c4_shape_smoothness() -> Outcome {
    let twin = TwinParams::default();
    let basis = build_basis(&twin.locations, twin.half_span, 5).expect("default basis");
    // Monomials in a centred, scaled coordinate keep the fit well conditioned.
    let xs: Vec<f64> = twin.locations.iter().map(|x| 2.0 * x / twin.half_span - 1.0).collect();
    let vander = Mat::from_fn(xs.len(), 5, |i, j| xs[i].powi(j as i32));
    let svd = vander.clone().svd(true, true);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5_4A9E);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let uv = Vector::from_fn(5, |_, _| rng.random_range(-10.0..10.0));
        let u = basis.to_servo_space(&uv).expect("q = 5");
        let coef = svd.solve(&u, 1e-14).expect("full column rank");
        worst = worst.max((&vander * coef - &u).amax());
    }
    outcome(worst < 1e-10, format!("100 commands, max quartic fit residual {worst:.2e}"))
}

// 5 ------------------------------------------------------------------------

fn c5_allocator_diagnostics() -> Outcome {
    let cfg = ScenarioConfig::mla(35);
    let out = match simulate(&cfg) {
        Ok(o) => o,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let a = &out.allocation;
    let pass = a.max_iterations <= 10
        && a.iteration_cap_ticks == 0
        && a.infeasible_ticks == 0
        && a.max_eps_ca_unconstrained <= 1e-3
        && a.max_eps_ca_constrained <= 0.2;
    outcome(
        pass,
        format!(
            "max iterations {}, |eps_ca| unconstrained {:.2e} / constrained {:.2e} over {} constrained ticks, {} saturated ticks",
            a.max_iterations, a.max_eps_ca_unconstrained, a.max_eps_ca_constrained, a.constrained_ticks, out.saturated_ticks
        ),
    )
}

// 6 ------------------------------------------------------------------------

fn c6_mla() -> Outcome {
    let cfg = ScenarioConfig::mla(30);
    let start = Instant::now();
    let out = match simulate(&cfg) {
        Ok(o) => o,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let wall = start.elapsed().as_secs_f64();
    let tr = &out.trace;
    let target = 0.30 * cfg.twin.fy_nominal;
    // Steady value: mean over the final second.
    let tail: Vec<usize> = (0..tr.t.len()).filter(|&i| tr.t[i] > cfg.duration - 1.0).collect();
    let fy_end = tail.iter().map(|&i| tr.truth[i][0]).sum::<f64>() / tail.len() as f64;
    let fy_err = (fy_end - target) / target;
    let mx_dev = tr.truth.iter().zip(&tr.reference).map(|(y, r)| (y[1] - r[1]).abs()).fold(0.0, f64::max);
    let mx_frac = mx_dev / cfg.twin.mx_nominal;
    let violations = out.violations.total();
    let pass = fy_err.abs() <= 0.02 && mx_frac <= 0.05 && violations == 0 && wall < 10.0;
    outcome(
        pass,
        format!(
            "F_y steady {fy_end:.1} vs {target:.1} ({:+.2} %), max |M_x - M_x*| {:.2} % of nominal, {violations} violations, {wall:.2} s wall",
            100.0 * fy_err,
            100.0 * mx_frac
        ),
    )
}

// 7 ------------------------------------------------------------------------

const SWEEP: [f64; 9] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5];

fn c7_gla_trend() -> Outcome {
    let points = match sweep(&ScenarioConfig::gla(0.5), &SWEEP) {
        Ok(p) => p,
        Err(e) => return outcome(false, format!("sweep failed: {e}")),
    };
    let columns: Vec<Vec<f64>> =
        (0..4).map(|c| points.iter().map(|p| p.metrics.reduction.as_array()[c]).collect()).collect();
    let first_ok = columns.iter().all(|c| c[0] >= 60.0);
    let inversions: Vec<usize> = columns.iter().map(|c| count_inversions(c)).collect();
    let trend_ok = inversions.iter().all(|&n| n <= 1);
    let names = ["fy_max", "fy_rms", "mx_max", "mx_rms"];
    let table = names
        .iter()
        .zip(&columns)
        .zip(&inversions)
        .map(|((n, c), i)| {
            let vals: Vec<String> = c.iter().map(|v| format!("{v:.1}")).collect();
            format!("{n} [{}] inv {i}", vals.join(" "))
        })
        .collect::<Vec<_>>()
        .join("; ");
    outcome(first_ok && trend_ok, table)
}

// 8 ------------------------------------------------------------------------

fn c8_comparison() -> Outcome {
    let controllers = [ControllerKind::IndiQpV, ControllerKind::Lqg];
    let start = Instant::now();
    let rows = match compare_controllers(&ScenarioConfig::gmla(), &controllers, &Condition::ALL) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("comparison failed: {e}")),
    };
    let wall = start.elapsed().as_secs_f64();
    let red = |row: usize, c: ControllerKind| rows[row].get(c).expect("controller present").reduction.as_array();
    let (i0, l0) = (red(0, ControllerKind::IndiQpV), red(0, ControllerKind::Lqg));
    let (i1, l1) = (red(1, ControllerKind::IndiQpV), red(1, ControllerKind::Lqg));
    let (i2, l2) = (red(2, ControllerKind::IndiQpV), red(2, ControllerKind::Lqg));

    let a = (0..4).all(|k| i0[k] > l0[k] && i0[k] > 50.0 && l0[k] > 50.0);
    let b = i1.iter().all(|&v| v > 0.0) && (0..4).all(|k| l1[k] < l0[k]);
    let c = i2.iter().all(|&v| v > 0.0) && i2[1] >= 40.0 && l2.iter().any(|&v| v < 0.0);
    let simulated_ok = ScenarioConfig::gmla().duration <= 60.0;
    let fmt = |v: [f64; 4]| format!("[{:.1} {:.1} {:.1} {:.1}]", v[0], v[1], v[2], v[3]);
    outcome(
        a && b && c && simulated_ok && wall <= 30.0,
        format!(
            "(a) {} indi {} lqg {}; (b) {} indi {} lqg {}; (c) {} indi {} lqg {}; {wall:.2} s wall for all runs",
            if a { "ok" } else { "FAILED" },
            fmt(i0),
            fmt(l0),
            if b { "ok" } else { "FAILED" },
            fmt(i1),
            fmt(l1),
            if c { "ok" } else { "FAILED" },
            fmt(i2),
            fmt(l2)
        ),
    )
}

// 9 ------------------------------------------------------------------------

fn c9_certificates() -> Outcome {
    let mut jobs = vec![ScenarioConfig::mla(30)];
    jobs.extend(SWEEP.iter().map(|&f| ScenarioConfig::gla(f)));
    jobs.extend(Condition::ALL.iter().map(|c| c.apply(&ScenarioConfig::gmla())));
    let outputs = batch::map(&jobs, simulate);

    let mut checked = 0;
    let mut linear = 0;
    let mut failures = Vec::new();
    let mut worst_residual = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for (cfg, out) in jobs.iter().zip(outputs) {
        let out = match out {
            Ok(o) => o,
            Err(e) => {
                failures.push(format!("{}: {e}", cfg.name));
                continue;
            }
        };
        let Some(log) = &out.certificate else {
            failures.push(format!("{}: no certificate log", cfg.name));
            continue;
        };
        let cert = match certify_log(log) {
            Ok(c) => c,
            Err(e) => {
                failures.push(format!("{}: {e}", cfg.name));
                continue;
            }
        };
        if cert.b_bar >= 1.0 {
            continue;
        }
        checked += 1;
        worst_ratio = worst_ratio
            .max(cert.max_eps_indi_tail / cert.recursion_bound)
            .max(cert.max_e_tail / cert.ultimate_bound);
        if !(cert.eps_indi_within_bound && cert.e_within_bound) {
            failures.push(format!("{}: bound exceeded", cfg.name));
        }
        if !cfg.backlash {
            linear += 1;
            worst_residual = worst_residual.max(cert.recursion_residual);
            if cert.recursion_residual > 1e-8 {
                failures.push(format!("{}: recursion residual {:.2e}", cfg.name, cert.recursion_residual));
            }
        }
    }
    outcome(
        failures.is_empty() && checked > 0,
        format!(
            "{checked} runs certified, worst tail/bound ratio {worst_ratio:.3}, recursion residual {worst_residual:.2e} over {linear} linear runs{}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join(", ")) }
        ),
    )
}

// 10 -----------------------------------------------------------------------

/// Settled root shear at each level of a slow staircase triangle through
/// the full plant. Returns `(level, upstroke, downstroke)` at the levels the
/// two strokes share.
fn staircase(deadband: f64) -> Vec<(f64, f64, f64)> {
    let model = synthesize_wing_model(&TwinParams::default()).expect("default twin");
    let m = model.m();
    let mut opts = PlantOptions::nominal(m);
    opts.backlash = Some(BacklashParams { k1: 1.0, k2: 1.0, u_f_plus: deadband, u_f_minus: -deadband });
    let mut plant = WingPlant::new(model, opts, 0).expect("plant");
    let settle = 3000;
    let hold = |plant: &mut WingPlant, level: f64| {
        let cmd = Vector::from_element(m, level);
        for _ in 0..settle {
            plant.step(&cmd, 0.0).expect("bounded");
        }
        plant.sample().truth[0]
    };
    let levels: Vec<f64> = (-4..=4).map(|k| 2.0 * k as f64).collect();
    for &l in levels.iter().rev() {
        hold(&mut plant, l);
    }
    let up: Vec<f64> = levels.iter().map(|&l| hold(&mut plant, l)).collect();
    let down: Vec<f64> = levels.iter().rev().map(|&l| hold(&mut plant, l)).collect();
    levels.iter().enumerate().map(|(i, &l)| (l, up[i], down[levels.len() - 1 - i])).collect()
}

fn c10_backlash() -> Outcome {
    let deadbands = [0.6, 0.3, 0.1, 0.0];
    let mut gaps = Vec::new();
    let mut span = 0.0f64;
    for &d in &deadbands {
        let s = staircase(d);
        span = span.max(s.iter().map(|x| x.1.abs()).fold(0.0, f64::max));
        // Mid-range: the interior levels, away from the turning points.
        let mid: Vec<f64> = s.iter().filter(|x| x.0.abs() <= 4.0).map(|x| (x.2 - x.1).abs()).collect();
        gaps.push(mid.iter().copied().fold(f64::INFINITY, f64::min));
    }
    let positive = gaps[..3].iter().all(|&g| g > 0.0);
    let shrinking = gaps.windows(2).all(|w| w[1] < w[0]);
    let vanishes = gaps[3] <= 1e-9 * span;
    let detail = deadbands
        .iter()
        .zip(&gaps)
        .map(|(d, g)| format!("deadband {d} -> gap {g:.3e}"))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(positive && shrinking && vanishes, format!("{detail} (load span {span:.0})"))
}

// 11 -----------------------------------------------------------------------

fn c11_numerics() -> Outcome {
    let k = Mat::from_diagonal(&Vector::from_vec(vec![0.1, 0.1]));
    let lyap_err = match lyapunov_certificate(&k) {
        Ok((p, _, _)) => (p - Mat::identity(2, 2) * 5.0).amax(),
        Err(_) => f64::INFINITY,
    };
    let one = Mat::from_element(1, 1, 1.0);
    let care_err = match solve_care(&Mat::from_element(1, 1, -1.0), &one, &one, &one) {
        Ok(s) => (s[(0, 0)] - (2f64.sqrt() - 1.0)).abs(),
        Err(_) => f64::INFINITY,
    };
    // x' = cos(t)·x through an augmented clock state; exact x(1) = e^{sin 1}.
    let f = |x: &Vector, _: &Vector| Vector::from_vec(vec![x[1].cos() * x[0], 1.0]);
    let rk4_error = |n: usize| {
        let h = 1.0 / n as f64;
        let mut x = Vector::from_vec(vec![1.0, 0.0]);
        let u = Vector::zeros(0);
        for _ in 0..n {
            x = integrate_step(f, &x, &u, h).expect("finite");
        }
        (x[0] - 1f64.sin().exp()).abs()
    };
    let errors: Vec<f64> = [10, 20, 40, 80].iter().map(|&n| rk4_error(n)).collect();
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let order_ok = orders.iter().all(|&o| (o - 4.0).abs() < 0.3);
    outcome(
        lyap_err <= 1e-12 && care_err <= 1e-10 && order_ok,
        format!(
            "|P - 5I| {lyap_err:.1e}, |S - (sqrt2 - 1)| {care_err:.1e}, RK4 observed orders {}",
            orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>().join(" ")
        ),
    )
}

// 12 -----------------------------------------------------------------------

fn c12_determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut cfgs = vec![
        Condition::NoiseFaultBacklash.apply(&ScenarioConfig::gmla()),
        Condition::Noise.apply(&ScenarioConfig::gmla()).with_controller(ControllerKind::Lqg),
        ScenarioConfig::mla(35).with_controller(ControllerKind::IndiQp),
        ScenarioConfig::gla(2.0).with_controller(ControllerKind::IndiPi),
    ];
    for c in &mut cfgs {
        c.duration = c.duration.min(20.0);
    }
    let mut identical = 0;
    for (i, cfg) in cfgs.iter().enumerate() {
        let mut bytes = Vec::new();
        for run in 0..2 {
            let path = dir.path().join(format!("run{i}_{run}.csv"));
            let ok = simulate(cfg).map_err(|e| e.to_string()).and_then(|o| o.log.emit_csv(&path).map_err(|e| e.to_string()));
            if let Err(e) = ok {
                return outcome(false, format!("{}: {e}", cfg.name));
            }
            bytes.push(std::fs::read(&path).expect("written csv"));
        }
        identical += usize::from(!bytes[0].is_empty() && bytes[0] == bytes[1]);
    }
    outcome(identical == cfgs.len(), format!("{identical}/{} configurations byte-identical across two runs", cfgs.len()))
}
