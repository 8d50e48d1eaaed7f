//! Explicit time integration of the regularized mass-accumulation equation
//! with pinned boundary values. First order, deliberately plain: frozen
//! central-slope coefficient on the diffusion term, upwind transport, and a
//! counted monotonicity repair sweep after every step.

use crate::error::{Error, Result};
use crate::model::{geometry_weight, pow_m1, ModelParams};
use crate::profiles::GridFunction;

/// Knobs for a single integration.
#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// CFL safety factor in (0, 1]. Values above 1/2 can break the convex
    /// combination that keeps updates monotone; the repair counter will show
    /// it.
    pub safety: f64,
    /// Step budget before an integration is declared stuck.
    pub max_steps: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            safety: 0.4,
            max_steps: 10_000_000,
        }
    }
}

/// Counters accumulated across an integration.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepStats {
    pub steps: u64,
    pub last_dt: f64,
    pub max_cfl_ratio: f64,
    /// Nodes lowered by the monotonicity repair sweep.
    pub clamp_events: u64,
    /// Total mass of those corrections, summed over all steps.
    pub clamp_total: f64,
}

#[derive(Clone, Debug)]
pub struct SolverState {
    pub p: ModelParams,
    pub mu: f64,
    pub eps: f64,
    /// Advection term on (full model) or off (pure diffusion baseline).
    pub taxis: bool,
    pub t: f64,
    pub grid: GridFunction,
    pub stats: StepStats,
    scratch: Vec<f64>,
}

impl SolverState {
    pub fn new(p: &ModelParams, w0: GridFunction, eps: f64, taxis: bool) -> Result<Self> {
        w0.validate()?;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::domain(format!(
                "regularization parameter must lie in (0,1), got {eps}"
            )));
        }
        let rn = p.rn();
        let last = *w0.s.last().unwrap();
        if (last - rn).abs() > 1e-12 * rn {
            return Err(Error::domain(format!(
                "grid ends at {last}, expected R^n = {rn}"
            )));
        }
        if w0.n_cells() < 2 {
            return Err(Error::domain("need at least two cells to integrate"));
        }
        let mu = w0.mu_rn / rn;
        let scratch = vec![0.0; w0.s.len()];
        Ok(SolverState {
            p: p.clone(),
            mu,
            eps,
            taxis,
            t: 0.0,
            grid: w0,
            stats: StepStats::default(),
            scratch,
        })
    }
}

/// Largest stable step: safety times the minimum over interior nodes of the
/// diffusion cap ds^2 / (2 n^2 s^{2-2/n} (slope + eps)^{m-1}) and the
/// transport cap ds / |w - mu s|, with the steeper one-sided slope standing
/// in for the frozen coefficient.
pub fn cfl_dt(state: &SolverState, safety: f64) -> Result<f64> {
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::domain(format!(
            "safety factor must lie in (0,1], got {safety}"
        )));
    }
    let s = &state.grid.s;
    let w = &state.grid.values;
    let ds = state.grid.ds();
    let mut dt = f64::INFINITY;
    for i in 1..s.len() - 1 {
        let fwd = (w[i + 1] - w[i]) / ds;
        let bwd = (w[i] - w[i - 1]) / ds;
        let d = fwd.max(bwd).max(0.0) + state.eps;
        let coef = geometry_weight(&state.p, s[i]) * pow_m1(d, state.p.m);
        if coef > 0.0 {
            dt = dt.min(ds * ds / (2.0 * coef));
        }
        let c = (w[i] - state.mu * s[i]).abs();
        dt = dt.min(ds / (c + 1e-300));
    }
    Ok(safety * dt)
}

/// One explicit step. The update at each interior node is a convex
/// combination of the old stencil values whenever dt is at most half the
/// unit-safety CFL step, which is what keeps monotone states monotone.
pub fn step(state: &mut SolverState, dt: f64) -> Result<()> {
    let cap = cfl_dt(state, 1.0)?;
    if !(dt > 0.0) || dt > cap * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "step dt = {dt} rejected: stability cap is {cap}"
        )));
    }
    let n_nodes = state.grid.s.len();
    let s = &state.grid.s;
    let w = &state.grid.values;
    let ds = state.grid.ds();
    let inv_ds = 1.0 / ds;
    let inv_ds2 = inv_ds * inv_ds;
    let next = &mut state.scratch;
    next[0] = 0.0;
    next[n_nodes - 1] = state.grid.mu_rn;
    for i in 1..n_nodes - 1 {
        let (wm, wc, wp) = (w[i - 1], w[i], w[i + 1]);
        let slope = 0.5 * (wp - wm) * inv_ds;
        let mut rhs = geometry_weight(&state.p, s[i])
            * pow_m1(slope + state.eps, state.p.m)
            * (wp - 2.0 * wc + wm)
            * inv_ds2;
        if state.taxis {
            let c = wc - state.mu * s[i];
            let grad = if c > 0.0 { wp - wc } else { wc - wm };
            rhs += c * grad * inv_ds;
        }
        next[i] = wc + dt * rhs;
    }
    if let Some(i) = next.iter().position(|v| !v.is_finite()) {
        return Err(Error::numerical(format!(
            "non-finite update at node {i} (s = {}), t = {}, step {}",
            state.grid.s[i], state.t, state.stats.steps
        )));
    }
    let mut clamped = 0.0;
    let mut events = 0u64;
    for i in (1..n_nodes - 1).rev() {
        if next[i] > next[i + 1] {
            clamped += next[i] - next[i + 1];
            next[i] = next[i + 1];
            events += 1;
        }
    }
    std::mem::swap(&mut state.grid.values, next);
    state.t += dt;
    state.stats.steps += 1;
    state.stats.last_dt = dt;
    state.stats.max_cfl_ratio = state.stats.max_cfl_ratio.max(dt / cap);
    state.stats.clamp_events += events;
    state.stats.clamp_total += clamped;
    Ok(())
}

/// A completed integration: snapshots at the requested times plus the
/// parameters needed to reproduce it.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub p: ModelParams,
    pub mu: f64,
    pub eps: f64,
    pub taxis: bool,
    pub safety: f64,
    pub snapshots: Vec<(f64, GridFunction)>,
    pub stats: StepStats,
}

/// Integrates the full model (diffusion plus transport).
pub fn integrate(
    p: &ModelParams,
    w0: GridFunction,
    eps: f64,
    horizon: f64,
    output_times: &[f64],
    opts: &SolverOptions,
) -> Result<Trajectory> {
    integrate_impl(p, w0, eps, horizon, output_times, opts, true)
}

/// Same scheme with the transport term removed: the porous-medium baseline
/// used to isolate what aggregation contributes to front motion.
pub fn integrate_pme_baseline(
    p: &ModelParams,
    w0: GridFunction,
    eps: f64,
    horizon: f64,
    output_times: &[f64],
    opts: &SolverOptions,
) -> Result<Trajectory> {
    integrate_impl(p, w0, eps, horizon, output_times, opts, false)
}

fn integrate_impl(
    p: &ModelParams,
    w0: GridFunction,
    eps: f64,
    horizon: f64,
    output_times: &[f64],
    opts: &SolverOptions,
    taxis: bool,
) -> Result<Trajectory> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::domain(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let slop = 1e-12 * horizon;
    for pair in output_times.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::domain(
                "output times must be strictly increasing",
            ));
        }
    }
    if output_times
        .iter()
        .any(|&t| t < 0.0 || t > horizon + slop)
    {
        return Err(Error::domain("output times must lie within [0, horizon]"));
    }
    let mut state = SolverState::new(p, w0, eps, taxis)?;
    let mut snapshots = Vec::with_capacity(output_times.len());
    let mut idx = 0;
    if idx < output_times.len() && output_times[idx] == 0.0 {
        snapshots.push((0.0, state.grid.clone()));
        idx += 1;
    }
    let mut prev_values: Vec<f64> = Vec::new();
    while idx < output_times.len() {
        if state.stats.steps >= opts.max_steps {
            return Err(Error::Budget {
                steps: state.stats.steps,
                t: state.t,
            });
        }
        let dt = cfl_dt(&state, opts.safety)?;
        let t_before = state.t;
        if output_times[idx] <= t_before + dt {
            prev_values.clear();
            prev_values.extend_from_slice(&state.grid.values);
        }
        step(&mut state, dt)?;
        while idx < output_times.len() && output_times[idx] <= state.t {
            let tk = output_times[idx];
            let frac = ((tk - t_before) / (state.t - t_before)).clamp(0.0, 1.0);
            let values: Vec<f64> = prev_values
                .iter()
                .zip(&state.grid.values)
                .map(|(&a, &b)| a + (b - a) * frac)
                .collect();
            let snap = GridFunction {
                s: state.grid.s.clone(),
                values,
                mu_rn: state.grid.mu_rn,
            };
            snap.validate()?;
            snapshots.push((tk, snap));
            idx += 1;
        }
    }
    Ok(Trajectory {
        p: p.clone(),
        mu: state.mu,
        eps,
        taxis,
        safety: opts.safety,
        snapshots,
        stats: state.stats,
    })
}
