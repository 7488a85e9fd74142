//! Closed-loop simulation of one scenario and the paired open-loop run.

use crate::constraints::InputLimits;
use crate::indi::{mat_to_rows, Allocation, CertTick, CertificateLog, IndiController, IndiSettings};
use crate::allocator::AllocStatus;
use crate::lqg::{design_kalman, design_lqr, kalman_noise_wiring, perturb_model, Estimator, LqgController};
use crate::numerics::{Mat, Vector};
use crate::plant::{fault_scales, gust_angle, synthesize_wing_model, PlantOptions, WingModel, WingPlant};
use crate::shapes::{build_basis, ShapeBasis};

use super::config::{ControllerKind, EstimatorChoice, ScenarioConfig};
use super::csv::{LogRow, RunLog};
use super::metrics::{AllocStats, ChannelAccumulator, LoadStats, MetricsReport, Reduction, ViolationCounts};
use super::HarnessError;

/// Loads beyond this magnitude are treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e6;
/// Distance to a position limit that counts as saturated (deg).
pub const SATURATION_TOL: f64 = 1e-6;
/// Tolerance of the per-tick constraint audit.
pub const VIOLATION_TOL: f64 = 1e-9;

/// Plant-rate noise-free loads and references.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlantTrace {
    pub t: Vec<f64>,
    pub truth: Vec<[f64; 2]>,
    pub reference: Vec<[f64; 2]>,
}

/// One simulated run.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub controller: ControllerKind,
    pub log: RunLog,
    pub trace: PlantTrace,
    pub stats: LoadStats,
    pub allocation: AllocStats,
    pub violations: ViolationCounts,
    pub saturated_ticks: usize,
    /// Present for the incremental controllers.
    pub certificate: Option<CertificateLog>,
}

/// Closed-loop run, its open-loop partner and the metrics comparing them.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub closed: SimOutput,
    pub open: SimOutput,
    pub metrics: MetricsReport,
}

enum Loop {
    Open,
    Indi(Box<IndiController>),
    Lqg(Box<LqgController>),
}

/// Model, basis and plant options shared by every controller.
pub struct Setup {
    pub model: WingModel,
    pub basis: ShapeBasis,
    pub options: PlantOptions,
}

pub fn setup(cfg: &ScenarioConfig) -> Result<Setup, HarnessError> {
    cfg.validate()?;
    let model = synthesize_wing_model(&cfg.twin).map_err(|e| HarnessError::Config(e.to_string()))?;
    let basis = build_basis(&cfg.twin.locations, cfg.twin.half_span, cfg.q).map_err(|e| HarnessError::Config(e.to_string()))?;
    let m = model.m();
    let options = PlantOptions {
        dt: cfg.plant.dt,
        delay: cfg.plant.delay,
        servo: cfg.plant.servo,
        u_min: cfg.limits.u_min.clone(),
        u_max: cfg.limits.u_max.clone(),
        backlash: cfg.backlash.then_some(cfg.plant.backlash),
        effectiveness_scale: fault_scales(m, cfg.fault),
        noise: cfg.noise.then(|| cfg.plant.noise.clone()),
        measurement_filter: cfg.measurement_filter_active().then_some(cfg.plant.measurement_filter),
    };
    Ok(Setup { model, basis, options })
}

pub fn indi_settings(cfg: &ScenarioConfig, m: usize) -> IndiSettings {
    let w = &cfg.weights;
    IndiSettings {
        k: Mat::from_diagonal(&Vector::from_column_slice(&w.k)),
        w1: Mat::from_diagonal(&Vector::from_column_slice(&w.w1)),
        w2: Mat::identity(m, m) * w.w2,
        sigma: w.sigma,
        preferred: w.preferred,
        inflight_compensation: w.inflight_compensation,
    }
}

fn build_loop(cfg: &ScenarioConfig, s: &Setup) -> Result<Loop, HarnessError> {
    let design = |e: String| HarnessError::Config(format!("controller design failed: {e}"));
    let m = s.model.m();
    let allocation = match cfg.controller {
        ControllerKind::OpenLoop => return Ok(Loop::Open),
        ControllerKind::Lqg => return build_lqg(cfg, s).map(|c| Loop::Lqg(Box::new(c))),
        ControllerKind::IndiPi => Allocation::PseudoInverse,
        ControllerKind::IndiQp => Allocation::Qp,
        ControllerKind::IndiQpV => Allocation::QpVirtual,
    };
    let ctrl = IndiController::new(
        allocation,
        s.model.static_gain(),
        cfg.limits.clone(),
        Some(s.basis.clone()),
        indi_settings(cfg, m),
    )
    .map_err(|e| design(e.to_string()))?;
    Ok(Loop::Indi(Box::new(ctrl)))
}

fn build_lqg(cfg: &ScenarioConfig, s: &Setup) -> Result<LqgController, HarnessError> {
    let design = |e: String| HarnessError::Config(format!("controller design failed: {e}"));
    let model = perturb_model(&s.model, cfg.lqg.model_error, cfg.lqg.model_seed);
    let phi = s.basis.phi();
    let (n, p, q) = (model.n(), model.c.nrows(), s.basis.q());
    let mut q_w = Mat::zeros(n + p, n + p);
    q_w.view_mut((0, 0), (n, n)).copy_from(&(model.c.transpose() * &model.c));
    q_w.view_mut((n, n), (p, p)).copy_from(&(Mat::identity(p, p) * cfg.weights.lqr_integral));
    let r_w = Mat::identity(q, q) * cfg.weights.lqr_input;
    let lqr = design_lqr(&model, phi, &q_w, &r_w).map_err(|e| design(e.to_string()))?;
    let use_kalman = match cfg.lqg.estimator {
        EstimatorChoice::Kalman => true,
        EstimatorChoice::FullState => false,
        EstimatorChoice::Auto => cfg.noise,
    };
    let estimator = if use_kalman {
        let std = if cfg.noise { cfg.plant.noise.std.to_vec() } else { vec![cfg.lqg.quiet_sensor_std; p] };
        let (qk, rk, nk) = kalman_noise_wiring(cfg.weights.q_k, &cfg.weights.n_k, &std);
        let g = Mat::from_column_slice(n, 1, model.b_g.as_slice());
        Estimator::Kalman(design_kalman(&model.a, &g, &model.c, &qk, &rk, &nk).map_err(|e| design(e.to_string()))?)
    } else {
        Estimator::FullState
    };
    Ok(LqgController::new(
        lqr,
        estimator,
        model,
        phi.clone(),
        cfg.limits.u_min.clone(),
        cfg.limits.u_max.clone(),
        cfg.limits.dt,
        cfg.steps_per_tick(),
    ))
}

fn saturation_flags(limits: &InputLimits, u: &Vector) -> u32 {
    let mut flags = 0u32;
    for i in 0..u.len().min(32) {
        if u[i] >= limits.u_max[i] - SATURATION_TOL || u[i] <= limits.u_min[i] + SATURATION_TOL {
            flags |= 1 << i;
        }
    }
    flags
}

/// Simulate one run with the configured controller.
///
/// On divergence the rows logged so far travel with the error.
pub fn simulate(cfg: &ScenarioConfig) -> Result<SimOutput, HarnessError> {
    let s = setup(cfg)?;
    let mut ctrl = build_loop(cfg, &s)?;
    let m = s.model.m();
    let q = s.basis.q();
    let dt = cfg.plant.dt;
    let steps_per_tick = cfg.steps_per_tick();
    let (fy_nom, mx_nom) = (cfg.twin.fy_nominal, cfg.twin.mx_nominal);
    let reference = |t: f64| cfg.command.reference(t, fy_nom, mx_nom);
    let alpha = |t: f64| cfg.gust.as_ref().map_or(0.0, |g| gust_angle(g, t));

    let mut plant = WingPlant::new(s.model.clone(), s.options.clone(), cfg.seed).map_err(|e| HarnessError::Config(e.to_string()))?;
    let b_true = plant.true_effectiveness();
    let mut log = RunLog::new(m, q);
    let mut trace = PlantTrace::default();
    let (mut acc_fy, mut acc_mx) = (ChannelAccumulator::default(), ChannelAccumulator::default());
    let mut alloc = AllocStats::default();
    let mut violations = ViolationCounts::default();
    let mut saturated_ticks = 0;

    let k_gain = Mat::from_diagonal(&Vector::from_column_slice(&cfg.weights.k));
    let mut cert = match &ctrl {
        Loop::Indi(c) => Some(CertificateLog {
            k: mat_to_rows(&k_gain),
            b_true: mat_to_rows(&b_true),
            b_model: mat_to_rows(c.b_model()),
            ticks: Vec::new(),
            eps_cont: Vec::new(),
            e_norm: Vec::new(),
        }),
        _ => None,
    };
    let mut e_true = Vector::zeros(2);

    let mut command = Vector::zeros(m);
    let total = cfg.total_steps();
    for step in 0..total {
        let t = step as f64 * dt;
        let a_g = alpha(t);
        if step % steps_per_tick == 0 {
            let sample = plant.sample().clone();
            let r = reference(t);
            let y_ref = Vector::from_column_slice(&r);
            let (u, uv, eps_norm, iters) = match &mut ctrl {
                Loop::Open => (Vector::zeros(m), Vector::zeros(q), 0.0, 0u32),
                Loop::Indi(c) => {
                    let tick = c
                        .step(&sample.filtered, &y_ref, Some(&sample.servo_measured))
                        .map_err(|e| HarnessError::Controller(e.to_string()))?;
                    let eps = tick.eps_ca.norm();
                    alloc.ticks += 1;
                    alloc.max_eps_ca = alloc.max_eps_ca.max(eps);
                    alloc.max_iterations = alloc.max_iterations.max(tick.iterations);
                    if tick.constrained {
                        alloc.constrained_ticks += 1;
                        alloc.max_eps_ca_constrained = alloc.max_eps_ca_constrained.max(eps);
                    } else {
                        alloc.max_eps_ca_unconstrained = alloc.max_eps_ca_unconstrained.max(eps);
                    }
                    match tick.status {
                        Some(AllocStatus::IterationCap) => alloc.iteration_cap_ticks += 1,
                        Some(AllocStatus::Infeasible) => alloc.infeasible_ticks += 1,
                        _ => {}
                    }
                    if let Some(log) = &mut cert {
                        let v = |x: &Vector| x.iter().copied().collect::<Vec<f64>>();
                        log.ticks.push(CertTick {
                            t,
                            y_true: v(&sample.truth),
                            y_meas: v(&sample.filtered),
                            nu_c: v(&tick.nu_c),
                            eps_ca: v(&tick.eps_ca),
                            delta_u: v(&tick.delta_u),
                            compensation: v(&tick.compensation),
                        });
                    }
                    let uv = if c.allocation() == Allocation::QpVirtual {
                        tick.uv.clone()
                    } else {
                        s.basis.fit(&tick.u).map_err(|e| HarnessError::Controller(e.to_string()))?
                    };
                    (tick.u, uv, eps, tick.iterations as u32)
                }
                Loop::Lqg(c) => {
                    let tick = c.step(&sample.raw, &y_ref, Some(plant.state()));
                    (tick.u, tick.uv, 0.0, 0)
                }
            };
            let (pos, rel, rate) = cfg.limits.violations(&command, &u, VIOLATION_TOL);
            violations.position += usize::from(pos > 0);
            violations.relative += usize::from(rel > 0);
            violations.rate += usize::from(rate > 0);
            let sat_flags = saturation_flags(&cfg.limits, &u);
            saturated_ticks += usize::from(sat_flags != 0);
            log.rows.push(LogRow {
                t,
                u: u.iter().copied().collect(),
                uv: uv.iter().copied().collect(),
                fy_raw: sample.raw[0],
                fy_filt: sample.filtered[0],
                mx_raw: sample.raw[1],
                mx_filt: sample.filtered[1],
                fy_ref: r[0],
                mx_ref: r[1],
                alpha_g: a_g,
                eps_ca_norm: eps_norm,
                iters,
                sat_flags,
            });
            command = u;
        }

        let sample = match plant.step(&command, a_g) {
            Ok(s) => s,
            Err(_) => return Err(HarnessError::Divergence { t: t + dt, partial: Box::new(log) }),
        };
        let t_next = sample.t;
        let truth = [sample.truth[0], sample.truth[1]];
        if truth.iter().any(|v| v.abs() > DIVERGENCE_LIMIT) {
            return Err(HarnessError::Divergence { t: t_next, partial: Box::new(log) });
        }
        let r = reference(t_next);
        acc_fy.push(truth[0] - r[0]);
        acc_mx.push(truth[1] - r[1]);
        trace.t.push(t_next);
        trace.truth.push(truth);
        trace.reference.push(r);
        if let Some(log) = &mut cert {
            let dev = Vector::from_column_slice(&[truth[0] - r[0], truth[1] - r[1]]);
            e_true += &dev * dt;
            log.eps_cont.push((&dev + &k_gain * &e_true).norm());
            log.e_norm.push(e_true.norm());
        }
    }

    Ok(SimOutput {
        controller: cfg.controller,
        log,
        trace,
        stats: LoadStats { fy: acc_fy.finish(), mx: acc_mx.finish() },
        allocation: alloc,
        violations,
        saturated_ticks,
        certificate: cert,
    })
}

/// Metrics of `closed` against its open-loop partner.
pub fn metrics(cfg: &ScenarioConfig, closed: &SimOutput, open: &SimOutput) -> MetricsReport {
    MetricsReport {
        scenario: cfg.name.clone(),
        controller: closed.controller,
        closed_loop: closed.stats,
        open_loop: open.stats,
        reduction: Reduction::between(&open.stats, &closed.stats),
        allocation: closed.allocation,
        violations: closed.violations,
        saturated_ticks: closed.saturated_ticks,
    }
}

/// Run the scenario together with an open-loop run sharing seed, gust,
/// fault, backlash and noise settings.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun, HarnessError> {
    let (closed, open) = if cfg.controller == ControllerKind::OpenLoop {
        let out = simulate(cfg)?;
        (out.clone(), out)
    } else {
        let open_cfg = cfg.with_controller(ControllerKind::OpenLoop);
        let (closed, open) = super::batch::join(|| simulate(cfg), || simulate(&open_cfg));
        (closed?, open?)
    };
    let metrics = metrics(cfg, &closed, &open);
    Ok(ScenarioRun { closed, open, metrics })
}
