//! The regularized operator applied to analytic families (closed-form
//! derivatives) and to discrete trajectories (difference quotients), plus
//! sampling-based sign certificates for the comparison constructions.

use crate::comparison::ComparisonFamily;
use crate::error::{Error, Result};
use crate::model::{geometry_weight, pow_m1, ModelParams};
use crate::profiles::GridFunction;

/// Context for evaluating the operator at one regularization level.
#[derive(Clone, Debug)]
pub struct OperatorInput {
    pub p: ModelParams,
    pub mu: f64,
    pub eps: f64,
}

impl OperatorInput {
    pub fn new(p: &ModelParams, mu: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::domain(format!(
                "regularization parameter must lie in (0,1), got {eps}"
            )));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::domain(format!("mu must be positive, got {mu}")));
        }
        Ok(OperatorInput {
            p: p.clone(),
            mu,
            eps,
        })
    }
}

/// w_t - n^2 s^{2-2/n} (w_s + eps)^{m-1} w_ss - w w_s + mu s w_s.
pub fn p_eps_pointwise(
    inp: &OperatorInput,
    w: f64,
    w_s: f64,
    w_ss: f64,
    w_t: f64,
    s: f64,
) -> Result<f64> {
    let slope = w_s + inp.eps;
    if !(slope > 0.0) {
        return Err(Error::domain(format!(
            "regularized slope w_s + eps = {slope} not positive at s = {s}"
        )));
    }
    let rn = inp.p.rn();
    if !(-1e-12 * rn..=rn * (1.0 + 1e-12)).contains(&s) {
        return Err(Error::domain(format!("s = {s} outside [0, {rn}]")));
    }
    let diffusion = geometry_weight(&inp.p, s) * pow_m1(slope, inp.p.m);
    Ok(w_t - diffusion * w_ss - w * w_s + inp.mu * s * w_s)
}

/// Evaluates the operator on a comparison family via its closed-form
/// derivatives. The operator context must match the family's parameters;
/// a mismatch is a caller bug, not a meaningful evaluation.
pub fn p_eps_analytic(inp: &OperatorInput, fam: &ComparisonFamily, s: f64, t: f64) -> Result<f64> {
    if inp.eps != fam.eps || inp.mu != fam.mu || inp.p.n != fam.p.n || inp.p.m != fam.p.m
        || inp.p.r_domain != fam.p.r_domain
    {
        return Err(Error::domain(
            "operator context differs from the family's parameters",
        ));
    }
    let e = fam.eval(s, t)?;
    p_eps_pointwise(inp, e.value, e.ds, e.dss, e.dt, s)
}

/// Rectangle in (s, t) on which a sign certificate is requested.
#[derive(Clone, Copy, Debug)]
pub struct Region {
    pub s_lo: f64,
    pub s_hi: f64,
    pub t_lo: f64,
    pub t_hi: f64,
}

/// Sampling resolution: a tensor grid plus quasi-random fill.
#[derive(Clone, Copy, Debug)]
pub struct SamplePlan {
    pub s_count: usize,
    pub t_count: usize,
    pub quasi: usize,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan {
            s_count: 512,
            t_count: 64,
            quasi: 10_000,
        }
    }
}

/// The inequality a certificate has to establish at every sample.
#[derive(Clone, Copy, Debug)]
pub enum SignRequirement {
    /// residual >= 0.
    NonNegative,
    /// residual <= -coef * (ds of the family at the sample).
    BelowSlopeMargin { coef: f64 },
}

/// One evaluated sample; bound is the value the residual is compared against.
#[derive(Clone, Copy, Debug)]
pub struct CertSample {
    pub s: f64,
    pub t: f64,
    pub residual: f64,
    pub bound: f64,
}

#[derive(Clone, Debug)]
pub struct CertificationReport {
    pub pass: bool,
    pub requirement: SignRequirement,
    pub samples_checked: usize,
    pub skipped_kink: usize,
    pub violations: usize,
    /// max |residual| over the region; the slack tolerance scales with it.
    pub scale: f64,
    /// Most negative slack seen (slack >= 0 means the inequality held).
    pub worst_slack: f64,
    pub worst_s: f64,
    pub worst_t: f64,
    /// Tensor-grid samples, retained for serialization.
    pub tensor: Vec<CertSample>,
}

const SLACK_REL_TOL: f64 = 1e-10;

/// Samples the residual over the region and checks the requirement with a
/// relative slack tolerance. Sampling skips the kink curve; failures are
/// reported in the result, never thrown.
pub fn certify_sign(
    inp: &OperatorInput,
    fam: &ComparisonFamily,
    region: &Region,
    plan: &SamplePlan,
    requirement: SignRequirement,
) -> Result<CertificationReport> {
    let mut report = CertificationReport {
        pass: true,
        requirement,
        samples_checked: 0,
        skipped_kink: 0,
        violations: 0,
        scale: 0.0,
        worst_slack: f64::INFINITY,
        worst_s: f64::NAN,
        worst_t: f64::NAN,
        tensor: Vec::new(),
    };
    if region.s_lo >= region.s_hi || region.t_lo > region.t_hi {
        return Ok(report);
    }

    // Kink samples yield None; everything else is evaluated.
    let eval_sample = |s: f64, t: f64| -> Result<Option<CertSample>> {
        match fam.eval(s, t) {
            Err(Error::Kink { .. }) => Ok(None),
            Err(e) => Err(e),
            Ok(e) => {
                let residual = p_eps_pointwise(inp, e.value, e.ds, e.dss, e.dt, s)?;
                let bound = match requirement {
                    SignRequirement::NonNegative => 0.0,
                    SignRequirement::BelowSlopeMargin { coef } => -coef * e.ds,
                };
                Ok(Some(CertSample {
                    s,
                    t,
                    residual,
                    bound,
                }))
            }
        }
    };
    let place = |lo: f64, hi: f64, i: usize, count: usize| -> f64 {
        if count <= 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (count - 1) as f64
        }
    };

    let mut samples: Vec<CertSample> = Vec::new();
    for i in 0..plan.s_count {
        let s = place(region.s_lo, region.s_hi, i, plan.s_count);
        for j in 0..plan.t_count {
            let t = place(region.t_lo, region.t_hi, j, plan.t_count);
            match eval_sample(s, t)? {
                Some(smp) => samples.push(smp),
                None => report.skipped_kink += 1,
            }
        }
    }
    let tensor_len = samples.len();
    for i in 1..=plan.quasi as u64 {
        let s = region.s_lo + (region.s_hi - region.s_lo) * halton(i, 2);
        let t = region.t_lo + (region.t_hi - region.t_lo) * halton(i, 3);
        match eval_sample(s, t)? {
            Some(smp) => samples.push(smp),
            None => report.skipped_kink += 1,
        }
    }

    for smp in &samples {
        report.scale = report.scale.max(smp.residual.abs());
    }
    for smp in &samples {
        let slack = match requirement {
            SignRequirement::NonNegative => smp.residual - smp.bound,
            SignRequirement::BelowSlopeMargin { .. } => smp.bound - smp.residual,
        };
        if slack < report.worst_slack {
            report.worst_slack = slack;
            report.worst_s = smp.s;
            report.worst_t = smp.t;
        }
        if slack < -SLACK_REL_TOL * report.scale {
            report.violations += 1;
        }
    }
    report.samples_checked = samples.len();
    report.pass = report.violations == 0;
    samples.truncate(tensor_len);
    report.tensor = samples;
    Ok(report)
}

/// Radical-inverse sequence value in (0, 1).
fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Difference-quotient residual at the interior nodes: central in space on
/// w_prev, forward in time toward w_next.
pub fn p_eps_discrete(
    inp: &OperatorInput,
    w_prev: &GridFunction,
    w_next: &GridFunction,
    dt: f64,
) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::domain(format!("dt must be positive, got {dt}")));
    }
    if w_prev.s.len() != w_next.s.len()
        || w_prev.s.iter().zip(&w_next.s).any(|(a, b)| a != b)
    {
        return Err(Error::domain("difference quotients need matching grids"));
    }
    let s = &w_prev.s;
    let n_nodes = s.len();
    let mut out = Vec::with_capacity(n_nodes.saturating_sub(2));
    for i in 1..n_nodes - 1 {
        let span = s[i + 1] - s[i - 1];
        let h = 0.5 * span;
        let w_s = (w_prev.values[i + 1] - w_prev.values[i - 1]) / span;
        let w_ss =
            (w_prev.values[i + 1] - 2.0 * w_prev.values[i] + w_prev.values[i - 1]) / (h * h);
        let w_t = (w_next.values[i] - w_prev.values[i]) / dt;
        out.push(p_eps_pointwise(
            inp,
            w_prev.values[i],
            w_s,
            w_ss,
            w_t,
            s[i],
        )?);
    }
    Ok(out)
}
