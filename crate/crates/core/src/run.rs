//! Command orchestration for the batch front-end, plus the seeded invariant
//! suites behind `verify`. Everything here is deterministic given a config
//! and a seed; the only wall-clock data goes into the run_meta sidecar.

use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::comparison::{
    build_subsolution, build_supersolution, plan_expand, plan_shrink,
    select_subsolution_params, select_supersolution_params, ComparisonFamily,
};
use crate::config::{Mode, RunConfig};
use crate::error::{Error, Result};
use crate::front::{envelope_check, estimate_speed, front_trace, Classification, EnvelopeReport};
use crate::model::{a_crit, c_crit, tail_to_mass_coefficient, MassData, ModelParams, TailDirection};
use crate::profiles::{
    borderline_alpha, calibrate_plateau, check_initial_bound, make_profile, transform_to_w,
    uniform_grid, BoundSide, GridFunction,
};
use crate::report::{
    config_meta, emit_plots, fmt, write_csv, write_envelope_report, write_front_trace,
    write_run_meta, write_snapshots, write_verdicts, VerdictRow,
};
use crate::residual::{certify_sign, p_eps_discrete, OperatorInput, Region, SamplePlan, SignRequirement};
use crate::solver::{cfl_dt, integrate, integrate_pme_baseline, step, SolverOptions, SolverState, Trajectory};

fn check_mode(cfg: &RunConfig, expected: Mode) -> Result<()> {
    match cfg.mode {
        Some(m) if m != expected => Err(Error::config(format!(
            "config declares mode {m} but the {expected} command was invoked"
        ))),
        _ => Ok(()),
    }
}

fn solver_opts(cfg: &RunConfig) -> SolverOptions {
    SolverOptions {
        safety: cfg.safety,
        ..SolverOptions::default()
    }
}

/// The tail-to-mass mapping and the comparison constructions assume the
/// borderline tail exponent; steeper or flatter tails run fine but carry no
/// certificate.
fn borderline(cfg: &RunConfig) -> bool {
    !cfg.constant && (cfg.alpha - borderline_alpha(&cfg.p)).abs() <= 1e-12 * cfg.alpha.max(1.0)
}

fn build_initial(cfg: &RunConfig, a: f64, plateau: f64) -> Result<GridFunction> {
    let s = uniform_grid(&cfg.p, cfg.grid_cells);
    if cfg.constant {
        let values = s.iter().map(|&x| cfg.md.mu * x).collect();
        return GridFunction::new(s, values, cfg.md.mu * cfg.p.rn());
    }
    let profile = make_profile(&cfg.p, plateau, cfg.r_plateau, a, cfg.alpha, cfg.r0, cfg.r1)?;
    Ok(transform_to_w(&cfg.p, &profile, &s))
}

fn run_id(ratio: f64, eps: f64) -> String {
    format!("ratio{}_eps{}", fmt(ratio), fmt(eps))
}

fn sim_run_id(cfg: &RunConfig, eps: f64) -> String {
    if cfg.constant {
        format!("constant_eps{}", fmt(eps))
    } else {
        run_id(cfg.a_ratio, eps)
    }
}

/// Regularized runs never saturate exactly; the deficit left of the edge
/// scales like eps * kappa * (R^n - r1^n). Every saturation band must sit
/// strictly below that relative scale or the front read-off is meaningless.
fn tau_deficit_cap(cfg: &RunConfig, a: f64, eps: f64) -> Result<Option<f64>> {
    if !borderline(cfg) || !(cfg.md.mu > 0.0) {
        return Ok(None);
    }
    let c = tail_to_mass_coefficient(&cfg.p, a, cfg.r0, cfg.r1, TailDirection::Shrink)?;
    let sel = match select_subsolution_params(&cfg.p, cfg.md.mu, cfg.r1, c) {
        Ok(sel) => sel,
        Err(Error::Threshold(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let rn = cfg.p.rn();
    let r1n = cfg.r1.powi(cfg.p.n as i32);
    Ok(Some(eps * sel.kappa * (rn - r1n) / (cfg.md.mu * rn)))
}

fn tau_guard(cfg: &RunConfig) -> Result<()> {
    let Some(cap) = tau_deficit_cap(cfg, cfg.a_coef, cfg.smallest_eps())? else {
        return Ok(());
    };
    for &tau in cfg.tau.iter().chain([&cfg.tau_verdict]) {
        if tau >= cap {
            return Err(Error::config(format!(
                "saturation band tau = {tau} is not below the regularization \
                 deficit scale {cap} at eps = {}; lower tau or raise eps",
                cfg.smallest_eps()
            )));
        }
    }
    Ok(())
}

fn selection_meta(cfg: &RunConfig) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    if !borderline(cfg) || cfg.a_ratio == 1.0 {
        return Ok(out);
    }
    let mu = cfg.md.mu;
    if cfg.a_ratio < 1.0 {
        let c = tail_to_mass_coefficient(&cfg.p, cfg.a_coef, cfg.r0, cfg.r1, TailDirection::Shrink)?;
        let plan = plan_shrink(&cfg.p, mu, cfg.r1, c, cfg.r0)?;
        let sel = &plan.selection;
        out.extend([
            ("plan_kind".into(), "shrink".into()),
            ("plan_c_env".into(), fmt(plan.c_env)),
            ("plan_a_sub".into(), fmt(sel.a_sub)),
            ("plan_kappa".into(), fmt(sel.kappa)),
            ("plan_lambda".into(), fmt(sel.lambda)),
            ("plan_eps0".into(), fmt(sel.eps0)),
            ("plan_theta".into(), fmt(plan.theta)),
            ("plan_t_cap".into(), fmt(plan.t_cap)),
            ("plan_r_star".into(), fmt(plan.r_star)),
            ("plan_r2".into(), fmt(sel.r2)),
        ]);
    } else {
        let c = tail_to_mass_coefficient(&cfg.p, cfg.a_coef, cfg.r0, cfg.r1, TailDirection::Expand)?;
        let plan = plan_expand(&cfg.p, mu, cfg.r1, c, cfg.r0)?;
        let sel = &plan.selection;
        out.extend([
            ("plan_kind".into(), "expand".into()),
            ("plan_c_env".into(), fmt(plan.c_env)),
            ("plan_a_sup".into(), fmt(sel.a_sup)),
            ("plan_theta".into(), fmt(sel.theta)),
            ("plan_eps0".into(), fmt(sel.eps0)),
            ("plan_t_bar".into(), fmt(sel.t_bar)),
            ("plan_t_cap".into(), fmt(plan.t_cap)),
            ("plan_r_star".into(), fmt(plan.r_star)),
        ]);
    }
    Ok(out)
}

/// Limit-envelope comparison for the smallest-eps trajectory; empty when the
/// run is critical or off the borderline exponent.
pub fn envelope_reports(cfg: &RunConfig, traj: &Trajectory) -> Result<Vec<(String, EnvelopeReport)>> {
    if !borderline(cfg) || cfg.a_ratio == 1.0 {
        return Ok(Vec::new());
    }
    let mu = cfg.md.mu;
    let ni = cfg.p.n as i32;
    let mut out = Vec::new();
    // Ordering against the certificate families is only claimed on the window
    // the verdict is fitted from; past it the left-boundary hypothesis expires.
    let t_hi = cfg.fit_times().1;
    if cfg.a_ratio < 1.0 {
        let c = tail_to_mass_coefficient(&cfg.p, cfg.a_coef, cfg.r0, cfg.r1, TailDirection::Shrink)?;
        let plan = plan_shrink(&cfg.p, mu, cfg.r1, c, cfg.r0)?;
        let report = envelope_check(
            traj,
            &plan.envelope(),
            BoundSide::Lower,
            plan.r_star.powi(ni),
            plan.selection.r2.powi(ni),
            plan.t_cap.min(t_hi),
        );
        out.push(("shrink_lower".to_string(), report));
    } else {
        let c = tail_to_mass_coefficient(&cfg.p, cfg.a_coef, cfg.r0, cfg.r1, TailDirection::Expand)?;
        let plan = plan_expand(&cfg.p, mu, cfg.r1, c, cfg.r0)?;
        let report = envelope_check(
            traj,
            &plan.envelope(),
            BoundSide::Upper,
            plan.r_star.powi(ni),
            cfg.p.rn(),
            plan.t_cap.min(t_hi),
        );
        out.push(("expand_upper".to_string(), report));
    }
    Ok(out)
}

/// Band-halving stability notes for the verdict metadata: flips involving
/// Inconclusive are recorded, direct shrink/expand flips are flagged.
fn tau_notes(rows: &[VerdictRow]) -> Vec<(String, String)> {
    let mut notes = Vec::new();
    let mut by_run: Vec<&VerdictRow> = rows.iter().filter(|r| r.verdict.is_some()).collect();
    by_run.sort_by(|a, b| {
        (a.run_id.as_str(), b.tau)
            .partial_cmp(&(b.run_id.as_str(), a.tau))
            .unwrap()
    });
    for pair in by_run.windows(2) {
        if pair[0].run_id != pair[1].run_id {
            continue;
        }
        let (c0, c1) = (
            pair[0].verdict.as_ref().unwrap().classification,
            pair[1].verdict.as_ref().unwrap().classification,
        );
        if c0 == c1 {
            continue;
        }
        let key = format!("tau_flip_{}", pair[0].run_id);
        let val = format!(
            "tau {} -> {}: {} -> {}",
            fmt(pair[0].tau),
            fmt(pair[1].tau),
            c0,
            c1
        );
        if c0 != Classification::Inconclusive && c1 != Classification::Inconclusive {
            notes.push((format!("{key}_UNSTABLE"), val));
        } else {
            notes.push((key, val));
        }
    }
    notes
}

/// What `simulate` computed, returned so callers can assert on verdicts
/// without re-reading the CSV artifacts.
pub struct SimulateOutcome {
    pub rows: Vec<VerdictRow>,
    pub envelopes: Vec<(String, EnvelopeReport)>,
}

pub fn cmd_simulate(cfg: &RunConfig, seed: u64) -> Result<SimulateOutcome> {
    check_mode(cfg, Mode::Simulate)?;
    let started = Instant::now();
    tau_guard(cfg)?;
    let w0 = build_initial(cfg, cfg.a_coef, cfg.plateau)?;
    let opts = solver_opts(cfg);
    let dir = &cfg.out_dir;
    let common = [
        ("command".to_string(), "simulate".to_string()),
        ("seed".to_string(), seed.to_string()),
    ];

    let trajs: Vec<Trajectory> = cfg
        .eps
        .par_iter()
        .map(|&eps| integrate(&cfg.p, w0.clone(), eps, cfg.horizon, &cfg.output_times, &opts))
        .collect::<Result<_>>()?;

    let mut snapshot_paths = Vec::new();
    let mut trace_paths = Vec::new();
    let mut rows: Vec<VerdictRow> = Vec::new();
    let mut taus = cfg.tau.clone();
    if !taus.contains(&cfg.tau_verdict) {
        taus.push(cfg.tau_verdict);
    }
    for (traj, &eps) in trajs.iter().zip(&cfg.eps) {
        let id = sim_run_id(cfg, eps);
        let mut extra = common.to_vec();
        extra.push(("run_id".into(), id.clone()));
        extra.push(("run_eps".into(), fmt(eps)));
        let meta = config_meta(cfg, &extra);
        let snap_path = dir.join(format!("snapshots_{id}.csv"));
        write_snapshots(&snap_path, &meta, traj)?;
        snapshot_paths.push(snap_path);
        for &tau in &taus {
            let trace = front_trace(traj, tau, &id);
            let trace_path = dir.join(format!("front_{id}_tau{}.csv", fmt(tau)));
            write_front_trace(&trace_path, &meta, &trace)?;
            trace_paths.push(trace_path);
            let verdict = estimate_speed(&trace, cfg.fit_times(), cfg.min_cells)?;
            rows.push(VerdictRow {
                run_id: id.clone(),
                a_ratio: cfg.a_ratio,
                eps,
                tau,
                verdict: Some(verdict),
                status: "ok".into(),
            });
        }
    }

    let smallest = cfg.smallest_eps();
    let idx = cfg.eps.iter().position(|&e| e == smallest).unwrap();
    let env = envelope_reports(cfg, &trajs[idx])?;
    if !env.is_empty() {
        let mut extra = common.to_vec();
        extra.push(("envelope_eps".into(), fmt(smallest)));
        extra.extend(selection_meta(cfg)?);
        write_envelope_report(&dir.join("envelope.csv"), &config_meta(cfg, &extra), &env)?;
    }

    let mut extra = common.to_vec();
    extra.extend(tau_notes(&rows));
    let verdicts_path = dir.join("verdicts.csv");
    write_verdicts(&verdicts_path, &config_meta(cfg, &extra), &rows)?;
    if cfg.gnuplot {
        emit_plots(dir, &snapshot_paths, &trace_paths, Some(&verdicts_path))?;
    }
    write_run_meta(dir, "simulate", seed, started.elapsed())?;
    Ok(SimulateOutcome {
        rows,
        envelopes: env,
    })
}

fn sweep_row(
    cfg: &RunConfig,
    ratio: f64,
    eps: f64,
    opts: &SolverOptions,
    seed: u64,
) -> Result<(VerdictRow, PathBuf)> {
    let a = ratio * cfg.a_crit;
    let plateau = calibrate_plateau(
        &cfg.p,
        cfg.md.total_mass,
        a,
        cfg.alpha,
        cfg.r_plateau,
        cfg.r0,
        cfg.r1,
    )?;
    if borderline(cfg) && ratio < 1.0 {
        if let Some(cap) = tau_deficit_cap(cfg, a, eps)? {
            if cfg.tau_verdict >= cap {
                return Err(Error::Infeasible(format!(
                    "tau_verdict = {} is not below the deficit scale {cap}",
                    cfg.tau_verdict
                )));
            }
        }
    }
    let w0 = build_initial(cfg, a, plateau)?;
    let traj = integrate(&cfg.p, w0, eps, cfg.horizon, &cfg.output_times, opts)?;
    let id = run_id(ratio, eps);
    let trace = front_trace(&traj, cfg.tau_verdict, &id);
    let extra = [
        ("command".to_string(), "sweep".to_string()),
        ("seed".to_string(), seed.to_string()),
        ("row_ratio".to_string(), fmt(ratio)),
        ("row_eps".to_string(), fmt(eps)),
        ("row_a_coef".to_string(), fmt(a)),
        ("row_plateau".to_string(), fmt(plateau)),
    ];
    let path = cfg.out_dir.join(format!("sweep_front_{id}.csv"));
    write_front_trace(&path, &config_meta(cfg, &extra), &trace)?;
    let verdict = estimate_speed(&trace, cfg.fit_times(), cfg.min_cells)?;
    Ok((
        VerdictRow {
            run_id: id,
            a_ratio: ratio,
            eps,
            tau: cfg.tau_verdict,
            verdict: Some(verdict),
            status: "ok".into(),
        },
        path,
    ))
}

/// Largest shrinking ratio and smallest expanding ratio at the smallest eps.
pub fn sweep_bracket(rows: &[VerdictRow], eps: f64) -> (Option<f64>, Option<f64>) {
    let mut lo: Option<f64> = None;
    let mut hi: Option<f64> = None;
    for row in rows.iter().filter(|r| r.eps == eps) {
        let Some(v) = &row.verdict else { continue };
        match v.classification {
            Classification::Shrinking => {
                lo = Some(lo.map_or(row.a_ratio, |x: f64| x.max(row.a_ratio)))
            }
            Classification::Expanding => {
                hi = Some(hi.map_or(row.a_ratio, |x: f64| x.min(row.a_ratio)))
            }
            Classification::Inconclusive => {}
        }
    }
    (lo, hi)
}

pub fn cmd_sweep(cfg: &RunConfig, seed: u64) -> Result<Vec<VerdictRow>> {
    check_mode(cfg, Mode::Sweep)?;
    if cfg.constant {
        return Err(Error::config("sweep needs a tailed profile"));
    }
    if cfg.sweep_ratios.is_empty() {
        return Err(Error::config("sweep requires [experiment] ratios"));
    }
    let started = Instant::now();
    let opts = solver_opts(cfg);
    let pairs: Vec<(f64, f64)> = cfg
        .sweep_ratios
        .iter()
        .flat_map(|&r| cfg.eps.iter().map(move |&e| (r, e)))
        .collect();
    let outcomes: Vec<Result<(VerdictRow, PathBuf)>> = pairs
        .par_iter()
        .map(|&(ratio, eps)| sweep_row(cfg, ratio, eps, &opts, seed))
        .collect();

    let mut rows = Vec::with_capacity(pairs.len());
    let mut trace_paths = Vec::new();
    for ((ratio, eps), outcome) in pairs.into_iter().zip(outcomes) {
        match outcome {
            Ok((row, path)) => {
                rows.push(row);
                trace_paths.push(path);
            }
            // A ratio whose profile cannot hold the target mass is a row
            // result, not a command failure.
            Err(Error::Infeasible(msg)) => rows.push(VerdictRow {
                run_id: run_id(ratio, eps),
                a_ratio: ratio,
                eps,
                tau: cfg.tau_verdict,
                verdict: None,
                status: msg,
            }),
            Err(e) => return Err(e),
        }
    }
    rows.sort_by(|a, b| {
        (a.a_ratio, a.eps)
            .partial_cmp(&(b.a_ratio, b.eps))
            .unwrap()
    });
    trace_paths.sort();

    let (lo, hi) = sweep_bracket(&rows, cfg.smallest_eps());
    let to_meta = |v: Option<f64>| v.map(fmt).unwrap_or_else(|| "none".into());
    let extra = [
        ("command".to_string(), "sweep".to_string()),
        ("seed".to_string(), seed.to_string()),
        ("bracket_eps".to_string(), fmt(cfg.smallest_eps())),
        ("bracket_last_shrinking".to_string(), to_meta(lo)),
        ("bracket_first_expanding".to_string(), to_meta(hi)),
    ];
    let verdicts_path = cfg.out_dir.join("sweep_verdicts.csv");
    write_verdicts(&verdicts_path, &config_meta(cfg, &extra), &rows)?;
    if cfg.gnuplot {
        emit_plots(&cfg.out_dir, &[], &trace_paths, Some(&verdicts_path))?;
    }
    write_run_meta(&cfg.out_dir, "sweep", seed, started.elapsed())?;
    Ok(rows)
}

pub fn cmd_baseline(cfg: &RunConfig, seed: u64) -> Result<Vec<VerdictRow>> {
    check_mode(cfg, Mode::Baseline)?;
    let started = Instant::now();
    tau_guard(cfg)?;
    let w0 = build_initial(cfg, cfg.a_coef, cfg.plateau)?;
    let eps = cfg.smallest_eps();
    let opts = solver_opts(cfg);
    let (t_on, t_off) = rayon::join(
        || integrate(&cfg.p, w0.clone(), eps, cfg.horizon, &cfg.output_times, &opts),
        || integrate_pme_baseline(&cfg.p, w0.clone(), eps, cfg.horizon, &cfg.output_times, &opts),
    );
    let pairs = [("taxis_on", t_on?), ("taxis_off", t_off?)];
    let dir = &cfg.out_dir;
    let mut rows = Vec::new();
    let mut contrast: Vec<Vec<String>> = Vec::new();
    let mut snapshot_paths = Vec::new();
    let mut trace_paths = Vec::new();
    for (label, traj) in &pairs {
        let extra = [
            ("command".to_string(), "baseline".to_string()),
            ("seed".to_string(), seed.to_string()),
            ("run_id".to_string(), label.to_string()),
            ("run_eps".to_string(), fmt(eps)),
            ("taxis".to_string(), traj.taxis.to_string()),
        ];
        let meta = config_meta(cfg, &extra);
        let snap_path = dir.join(format!("snapshots_{label}.csv"));
        write_snapshots(&snap_path, &meta, traj)?;
        snapshot_paths.push(snap_path);
        let trace = front_trace(traj, cfg.tau_verdict, label);
        let trace_path = dir.join(format!("front_{label}.csv"));
        write_front_trace(&trace_path, &meta, &trace)?;
        trace_paths.push(trace_path);
        let verdict = estimate_speed(&trace, cfg.fit_times(), cfg.min_cells)?;
        let first = trace.entries.first().map(|e| e.s_front).unwrap_or(f64::NAN);
        let last = trace.entries.last().map(|e| e.s_front).unwrap_or(f64::NAN);
        let sign = match &verdict.classification {
            Classification::Shrinking => "-",
            Classification::Expanding => "+",
            Classification::Inconclusive => "0",
        };
        contrast.push(vec![
            label.to_string(),
            verdict.classification.to_string(),
            fmt(verdict.zeta),
            fmt(first),
            fmt(last),
            fmt(verdict.displacement_cells),
            sign.to_string(),
        ]);
        rows.push(VerdictRow {
            run_id: label.to_string(),
            a_ratio: cfg.a_ratio,
            eps,
            tau: cfg.tau_verdict,
            verdict: Some(verdict),
            status: "ok".into(),
        });
    }
    let extra = [
        ("command".to_string(), "baseline".to_string()),
        ("seed".to_string(), seed.to_string()),
    ];
    let meta = config_meta(cfg, &extra);
    write_verdicts(&dir.join("baseline_verdicts.csv"), &meta, &rows)?;
    write_csv(
        &dir.join("baseline_contrast.csv"),
        &meta,
        &[
            "run_id",
            "classification",
            "zeta",
            "s_front_start",
            "s_front_end",
            "displacement_cells",
            "displacement_sign",
        ],
        &contrast,
    )?;
    if cfg.gnuplot {
        emit_plots(dir, &snapshot_paths, &trace_paths, None)?;
    }
    write_run_meta(dir, "baseline", seed, started.elapsed())?;
    Ok(rows)
}

pub fn cmd_verify(cfg: &RunConfig, seed: u64) -> Result<bool> {
    check_mode(cfg, Mode::Verify)?;
    let started = Instant::now();
    let suites = verify_suites(seed);
    let rows: Vec<Vec<String>> = suites
        .iter()
        .map(|s| {
            vec![
                s.name.to_string(),
                s.draws.to_string(),
                if s.pass { "pass" } else { "fail" }.to_string(),
                s.detail.clone(),
            ]
        })
        .collect();
    let extra = [
        ("command".to_string(), "verify".to_string()),
        ("seed".to_string(), seed.to_string()),
    ];
    write_csv(
        &cfg.out_dir.join("verify_suites.csv"),
        &config_meta(cfg, &extra),
        &["suite", "draws", "result", "detail"],
        &rows,
    )?;
    write_run_meta(&cfg.out_dir, "verify", seed, started.elapsed())?;
    Ok(suites.iter().all(|s| s.pass))
}

#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub name: &'static str,
    pub draws: usize,
    pub pass: bool,
    pub detail: String,
}

/// Decorrelates per-suite seeds without hiding the user's seed.
fn suite_seed(seed: u64, index: u64) -> u64 {
    seed.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn verify_suites(seed: u64) -> Vec<SuiteResult> {
    vec![
        suite_threshold_identity(suite_seed(seed, 1), 100),
        suite_worked_values(),
        suite_subsolution_certification(suite_seed(seed, 2), 20),
        suite_supersolution_certification(suite_seed(seed, 3), 20),
        suite_tail_bound_soundness(suite_seed(seed, 4), 50),
        suite_injected_fault(),
        suite_steady_fixed_point(),
        suite_repair_corpus(suite_seed(seed, 5)),
        suite_discrete_residual(),
        suite_self_convergence(),
    ]
}

pub fn suite_threshold_identity(seed: u64, draws: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let n = rng.gen_range(1u32..=3);
        let m = rng.gen_range(1.1..4.0);
        let r1 = rng.gen_range(0.2..0.8);
        let mass = rng.gen_range(0.5..5.0);
        let p = ModelParams::new(n, 1.0, m).unwrap();
        let md = MassData::new(&p, mass).unwrap();
        let a = a_crit(&p, &md, r1).unwrap();
        let direct = c_crit(&p, md.mu, r1).unwrap();
        for dir in [TailDirection::Shrink, TailDirection::Expand] {
            let mapped = tail_to_mass_coefficient(&p, a, r1, r1, dir).unwrap();
            worst = worst.max((mapped - direct).abs() / direct);
        }
    }
    SuiteResult {
        name: "threshold_identity",
        draws,
        pass: worst <= 1e-12,
        detail: format!("max relative deviation {worst:.3e}"),
    }
}

pub fn suite_worked_values() -> SuiteResult {
    let p1 = ModelParams::new(1, 1.0, 2.0).unwrap();
    let md1 = MassData::new(&p1, 2.0).unwrap();
    let a1 = a_crit(&p1, &md1, 0.5).unwrap();
    let c1 = c_crit(&p1, md1.mu, 0.5).unwrap();
    let p2 = ModelParams::new(2, 1.0, 3.0).unwrap();
    let md2 = MassData::new(&p2, std::f64::consts::PI).unwrap();
    let a2 = a_crit(&p2, &md2, 0.5).unwrap();
    let worst = [
        (a1 - 0.5).abs() / 0.5,
        (c1 - 0.25).abs() / 0.25,
        (a2 - 1.5f64.sqrt()).abs() / 1.5f64.sqrt(),
    ]
    .into_iter()
    .fold(0.0f64, f64::max);
    SuiteResult {
        name: "worked_threshold_values",
        draws: 3,
        pass: worst <= 1e-15,
        detail: format!("max relative deviation {worst:.3e}"),
    }
}

fn kink_matches(fam: &ComparisonFamily, times: &[f64], mu_rn: f64) -> bool {
    times.iter().all(|&t| {
        let (dv, dslope) = fam.kink_gap(t);
        dv.abs() <= 1e-12 * mu_rn.max(1.0) && dslope.abs() <= 1e-12
    })
}

pub fn suite_subsolution_certification(seed: u64, draws: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut worst_slack = f64::INFINITY;
    for draw in 0..draws {
        let n = rng.gen_range(1u32..=3);
        let m = rng.gen_range(1.5..3.5);
        let p = ModelParams::new(n, 1.0, m).unwrap();
        let mu = rng.gen_range(0.5..2.0);
        let r1 = rng.gen_range(0.35..0.65);
        let cc = c_crit(&p, mu, r1).unwrap();
        let sel = select_subsolution_params(&p, mu, r1, rng.gen_range(0.1..0.9) * cc).unwrap();
        let eps = rng.gen_range(0.1..0.9) * sel.eps0;
        let theta = rng.gen_range(0.0..1.0) * sel.theta_max.min(sel.theta_cap());
        let r0 = sel.r_min + rng.gen_range(0.0..0.5) * (sel.r1 - sel.r_min);
        let fam = build_subsolution(&sel, eps, r0, theta, 0.0).unwrap();
        let horizon = if theta > 0.0 {
            (sel.r1n() - r0.powi(n as i32)) / theta
        } else {
            1.0
        };
        let inp = OperatorInput::new(&p, mu, eps).unwrap();
        let region = Region {
            s_lo: fam.s_lo,
            s_hi: sel.r2n(),
            t_lo: 0.0,
            t_hi: horizon,
        };
        let report = certify_sign(
            &inp,
            &fam,
            &region,
            &SamplePlan::default(),
            SignRequirement::BelowSlopeMargin {
                coef: sel.margin_coef(eps),
            },
        )
        .unwrap();
        worst_slack = worst_slack.min(report.worst_slack / report.scale.max(1e-300));
        if !report.pass {
            failures.push(format!("draw {draw}: residual margin violated"));
        }
        if !kink_matches(&fam, &[0.0, 0.3 * horizon, 0.9 * horizon], mu * p.rn()) {
            failures.push(format!("draw {draw}: kink mismatch"));
        }
    }
    SuiteResult {
        name: "subsolution_certification",
        draws,
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("worst relative slack {worst_slack:.3e}")
        } else {
            failures.join("; ")
        },
    }
}

pub fn suite_supersolution_certification(seed: u64, draws: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut worst_slack = f64::INFINITY;
    for draw in 0..draws {
        let n = rng.gen_range(1u32..=3);
        let m = rng.gen_range(1.5..3.5);
        let p = ModelParams::new(n, 1.0, m).unwrap();
        let mu = rng.gen_range(0.5..2.0);
        let r1 = rng.gen_range(0.35..0.65);
        let cc = c_crit(&p, mu, r1).unwrap();
        let sel =
            select_supersolution_params(&p, mu, r1, rng.gen_range(1.2..3.0) * cc).unwrap();
        let eps = rng.gen_range(0.1..0.9) * sel.eps0;
        let r0 = sel.r_min + rng.gen_range(0.0..0.5) * (sel.r1 - sel.r_min);
        let fam = build_supersolution(&sel, eps, r0).unwrap();
        let inp = OperatorInput::new(&p, mu, eps).unwrap();
        let region = Region {
            s_lo: fam.s_lo,
            s_hi: p.rn(),
            t_lo: 0.0,
            t_hi: sel.t_bar,
        };
        let report = certify_sign(
            &inp,
            &fam,
            &region,
            &SamplePlan::default(),
            SignRequirement::NonNegative,
        )
        .unwrap();
        worst_slack = worst_slack.min(report.worst_slack / report.scale.max(1e-300));
        if !report.pass {
            failures.push(format!("draw {draw}: residual sign violated"));
        }
        if !kink_matches(&fam, &[0.0, 0.35 * sel.t_bar, 0.9 * sel.t_bar], mu * p.rn()) {
            failures.push(format!("draw {draw}: kink mismatch"));
        }
    }
    SuiteResult {
        name: "supersolution_certification",
        draws,
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("worst relative slack {worst_slack:.3e}")
        } else {
            failures.join("; ")
        },
    }
}

pub fn suite_tail_bound_soundness(seed: u64, draws: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    for draw in 0..draws {
        let n = rng.gen_range(1u32..=3);
        let m = rng.gen_range(2.0..4.0);
        let p = ModelParams::new(n, 1.0, m).unwrap();
        let alpha = borderline_alpha(&p);
        let r1: f64 = rng.gen_range(0.4..0.7);
        let r0 = r1 * rng.gen_range(0.99..0.997);
        let a: f64 = rng.gen_range(0.5..2.0);
        let edge_value = a * (r1 - r0).powf(alpha);
        let profile = make_profile(&p, edge_value, 0.5 * r0, a, alpha, r0, r1).unwrap();
        let w0 = transform_to_w(&p, &profile, &uniform_grid(&p, 32_768));
        let c_lo = tail_to_mass_coefficient(&p, a, r0, r1, TailDirection::Shrink).unwrap();
        let c_hi = tail_to_mass_coefficient(&p, a, r0, r1, TailDirection::Expand).unwrap();
        let cases = [
            (c_lo, BoundSide::Lower, true, "lower"),
            (0.95 * c_lo, BoundSide::Lower, false, "tightened lower"),
            (c_hi, BoundSide::Upper, true, "upper"),
            (1.05 * c_hi, BoundSide::Upper, false, "tightened upper"),
        ];
        for (c, side, expect, label) in cases {
            let report = check_initial_bound(&p, &w0, c, r0, r1, side).unwrap();
            if report.holds != expect {
                failures.push(format!(
                    "draw {draw}: {label} bound expected holds={expect}, got {} \
                     (violation {:.3e})",
                    report.holds, report.worst_violation
                ));
            }
        }
    }
    SuiteResult {
        name: "tail_bound_soundness",
        draws,
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            "both directions hold; 5% perturbations detected".into()
        } else {
            failures.join("; ")
        },
    }
}

pub fn suite_injected_fault() -> SuiteResult {
    let p = ModelParams::new(1, 1.0, 2.0).unwrap();
    let cc = c_crit(&p, 1.0, 0.5).unwrap();
    let (pass, detail) = match select_subsolution_params(&p, 1.0, 0.5, 1.05 * cc) {
        Err(Error::Threshold(msg)) => (true, format!("selector rejected it: {msg}")),
        Err(e) => (false, format!("wrong error class: {e}")),
        Ok(_) => (false, "selector accepted a supercritical coefficient".into()),
    };
    SuiteResult {
        name: "injected_fault_supercritical_subsolution",
        draws: 1,
        pass,
        detail,
    }
}

pub fn suite_steady_fixed_point() -> SuiteResult {
    let mut worst = 0.0f64;
    for (n, m, cells, steps) in [(1u32, 2.0, 512usize, 10_000u32), (2, 3.0, 256, 2_000)] {
        let p = ModelParams::new(n, 1.0, m).unwrap();
        let s = uniform_grid(&p, cells);
        let values = s.clone();
        let w0 = GridFunction::new(s, values, p.rn()).unwrap();
        let mut state = SolverState::new(&p, w0, 1e-3, true).unwrap();
        let reference = state.grid.values.clone();
        for _ in 0..steps {
            let dt = cfl_dt(&state, 0.4).unwrap();
            step(&mut state, dt).unwrap();
        }
        let drift = state
            .grid
            .values
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max)
            / p.rn();
        worst = worst.max(drift);
    }
    SuiteResult {
        name: "steady_fixed_point",
        draws: 2,
        pass: worst <= 1e-13,
        detail: format!("max relative drift {worst:.3e}"),
    }
}

/// Smooth strictly monotone data the repair sweep should never touch.
pub fn corpus_state(seed: u64, p: &ModelParams, n_cells: usize) -> SolverState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu = rng.gen_range(0.5..2.0);
    let s = uniform_grid(p, n_cells);
    let rn = p.rn();
    let amp = rng.gen_range(0.1..0.45);
    let waves = rng.gen_range(1..4) as f64;
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut values: Vec<f64> = s
        .iter()
        .map(|&x| {
            let base = x / rn;
            let warped = base
                - amp / std::f64::consts::TAU
                    * ((std::f64::consts::TAU * waves * base + phase).sin() - phase.sin())
                    / waves;
            mu * rn * warped.clamp(0.0, 1.0)
        })
        .collect();
    values[0] = 0.0;
    let last = values.len() - 1;
    values[last] = mu * rn;
    let w0 = GridFunction::new(s, values, mu * rn).unwrap();
    SolverState::new(p, w0, rng.gen_range(1e-3..1e-1), true).unwrap()
}

pub fn suite_repair_corpus(seed: u64) -> SuiteResult {
    let mut worst = 0.0f64;
    let mut bounded = true;
    for k in 0..8u64 {
        let p = ModelParams::new(1 + (k % 3) as u32, 1.0, 1.6 + 0.4 * (k % 4) as f64).unwrap();
        let mut state = corpus_state(seed.wrapping_add(k), &p, 200);
        let mu_rn = state.grid.mu_rn;
        for _ in 0..80 {
            let dt = cfl_dt(&state, 0.4).unwrap();
            step(&mut state, dt).unwrap();
        }
        bounded &= state
            .grid
            .values
            .iter()
            .all(|&v| v >= -1e-12 * mu_rn && v <= mu_rn * (1.0 + 1e-12));
        worst = worst.max(state.stats.clamp_total / mu_rn);
    }
    SuiteResult {
        name: "monotonicity_repair_corpus",
        draws: 8,
        pass: worst <= 1e-12 && bounded,
        detail: format!("max cumulative repair {worst:.3e} of mu R^n"),
    }
}

pub fn suite_discrete_residual() -> SuiteResult {
    let p = ModelParams::new(1, 1.0, 2.0).unwrap();
    let s = uniform_grid(&p, 64);
    let values = s.clone();
    let w = GridFunction::new(s, values, 1.0).unwrap();
    let inp = OperatorInput::new(&p, 1.0, 0.1).unwrap();
    let residual = p_eps_discrete(&inp, &w, &w, 1e-4).unwrap();
    let pass = residual.iter().all(|&r| r == 0.0);
    SuiteResult {
        name: "discrete_steady_residual",
        draws: 1,
        pass,
        detail: format!(
            "max |residual| {:.3e}",
            residual.iter().fold(0.0f64, |acc, r| acc.max(r.abs()))
        ),
    }
}

/// First-order scheme: the gap between successive grid halvings should
/// itself halve.
pub fn suite_self_convergence() -> SuiteResult {
    let p = ModelParams::new(1, 1.0, 2.0).unwrap();
    let horizon = 2e-3;
    let smooth = |x: f64| x - 0.3 / std::f64::consts::TAU * (std::f64::consts::TAU * x).sin();
    let run = |cells: usize| -> GridFunction {
        let s = uniform_grid(&p, cells);
        let mut values: Vec<f64> = s.iter().map(|&x| smooth(x)).collect();
        values[0] = 0.0;
        let last = values.len() - 1;
        values[last] = 1.0;
        let w0 = GridFunction::new(s, values, 1.0).unwrap();
        let traj = integrate(
            &p,
            w0,
            1e-2,
            horizon,
            &[horizon],
            &SolverOptions::default(),
        )
        .unwrap();
        traj.snapshots.into_iter().next().unwrap().1
    };
    let (coarse, mid, fine) = (run(256), run(512), run(1024));
    let gap = |a: &GridFunction, b: &GridFunction| -> f64 {
        a.values
            .iter()
            .enumerate()
            .map(|(i, &v)| (v - b.values[2 * i]).abs())
            .fold(0.0f64, f64::max)
    };
    let e1 = gap(&coarse, &mid);
    let e2 = gap(&mid, &fine);
    let factor = e1 / e2;
    SuiteResult {
        name: "self_convergence",
        draws: 3,
        pass: (1.5..=3.0).contains(&factor),
        detail: format!("error factor {factor:.3} (e1 {e1:.3e}, e2 {e2:.3e})"),
    }
}
