//! Piecewise comparison families for the transformed equation and the
//! parameter selection recipes that make their residual signs certifiable.
//!
//! Shrinking support is certified in two stages: a stationary family pins the
//! boundary value at an interior point r2, then a moving family with a
//! vertical shift runs on the truncated interval. Expanding support needs a
//! single moving family. The selectors only promise parameters that pass
//! every inequality the constructions rely on; the recipes themselves are a
//! convention and are re-verified before anything is returned.

use crate::error::{Error, Result};
use crate::model::{self, pow_recip_m1, ModelParams};

/// Half-width of the excluded band around the kink curve, where the families
/// are C^1 but not C^2.
pub const KINK_RADIUS: f64 = 1e-12;

/// Floor for the slope parameter kappa; degenerate slopes otherwise appear
/// as the leading coefficient tends to zero.
pub const KAPPA_FLOOR: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    /// Lies below the solution; its front edge moves left, rho(t) = r1^n - theta t.
    Subsolution,
    /// Lies above the solution; its front edge moves right, rho(t) = r1^n + theta t.
    Supersolution,
}

/// Pointwise evaluation of a family: value and the derivatives entering the
/// operator.
#[derive(Clone, Copy, Debug)]
pub struct FamilyEval {
    pub value: f64,
    pub ds: f64,
    pub dss: f64,
    pub dt: f64,
}

/// One member of a comparison family, frozen at a concrete epsilon.
///
/// The mid piece is mu R^n - eta - A (rho(t) - s)^{m/(m-1)} (plus, for the
/// supersolution, + eps (rho(t) - s) and eta = 0); past the kink at
/// rho(t) - delta the subsolution continues linearly with slope eps kappa
/// and the supersolution continues as the constant mu R^n + delta eps / m.
#[derive(Clone, Debug)]
pub struct ComparisonFamily {
    pub kind: FamilyKind,
    pub p: ModelParams,
    pub mu: f64,
    /// Leading coefficient of the power-law piece (A_sub or A_sup).
    pub a_coef: f64,
    /// Front speed in s-units per time, >= 0.
    pub theta: f64,
    /// Support edge radius at t = 0.
    pub r1: f64,
    pub eps: f64,
    /// Kink offset delta(eps).
    pub delta: f64,
    /// Vertical shift eta(eps) >= 0; zero for supersolutions.
    pub eta: f64,
    /// Out-piece slope parameter; zero (unused) for supersolutions.
    pub kappa: f64,
    /// Extra constant shift, used by the second shrink stage.
    pub vertical_shift: f64,
    /// Left end of the s-domain, r0^n.
    pub s_lo: f64,
    /// Right end of the s-domain, R^n.
    pub s_hi: f64,
    /// Time horizon; infinite for subsolutions, T_bar for supersolutions.
    pub t_hi: f64,
}

impl ComparisonFamily {
    pub fn mu_rn(&self) -> f64 {
        self.mu * self.p.rn()
    }

    pub fn r1n(&self) -> f64 {
        self.r1.powi(self.p.n as i32)
    }

    /// Position of the power-law edge at time t.
    pub fn rho(&self, t: f64) -> f64 {
        match self.kind {
            FamilyKind::Subsolution => self.r1n() - self.theta * t,
            FamilyKind::Supersolution => self.r1n() + self.theta * t,
        }
    }

    /// Position of the kink separating the mid and out pieces.
    pub fn kink(&self, t: f64) -> f64 {
        self.rho(t) - self.delta
    }

    /// Evaluates the family at (s, t). Points within KINK_RADIUS of the kink
    /// are rejected; there the second derivative does not exist.
    pub fn eval(&self, s: f64, t: f64) -> Result<FamilyEval> {
        let slop = 1e-12 * self.s_hi.max(1.0);
        if !(self.s_lo - slop..=self.s_hi + slop).contains(&s) {
            return Err(Error::domain(format!(
                "s = {s} outside family domain [{}, {}]",
                self.s_lo, self.s_hi
            )));
        }
        if t < 0.0 || t > self.t_hi * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "t = {t} outside family horizon [0, {}]",
                self.t_hi
            )));
        }
        let kink = self.kink(t);
        if (s - kink).abs() <= KINK_RADIUS {
            return Err(Error::Kink { s, t });
        }

        let m = self.p.m;
        let mu_rn = self.mu_rn();
        if s < kink {
            let dist = self.rho(t) - s;
            let root = pow_recip_m1(dist, m);
            let slope_factor = self.a_coef * m / (m - 1.0);
            match self.kind {
                FamilyKind::Subsolution => {
                    let ds = slope_factor * root;
                    Ok(FamilyEval {
                        value: mu_rn - self.eta - self.a_coef * dist * root
                            + self.vertical_shift,
                        ds,
                        dss: -slope_factor / (m - 1.0) * root / dist,
                        dt: self.theta * ds,
                    })
                }
                FamilyKind::Supersolution => {
                    let ds = slope_factor * root - self.eps;
                    Ok(FamilyEval {
                        value: mu_rn - self.a_coef * dist * root + self.eps * dist
                            + self.vertical_shift,
                        ds,
                        dss: -slope_factor / (m - 1.0) * root / dist,
                        dt: -self.theta * ds,
                    })
                }
            }
        } else {
            match self.kind {
                FamilyKind::Subsolution => {
                    let slope = self.eps * self.kappa;
                    Ok(FamilyEval {
                        value: mu_rn - slope * (self.p.rn() - self.theta * t - s)
                            + self.vertical_shift,
                        ds: slope,
                        dss: 0.0,
                        dt: slope * self.theta,
                    })
                }
                FamilyKind::Supersolution => Ok(FamilyEval {
                    value: mu_rn + self.delta * self.eps / m + self.vertical_shift,
                    ds: 0.0,
                    dss: 0.0,
                    dt: 0.0,
                }),
            }
        }
    }

    /// One-sided value and slope mismatch across the kink at time t, as
    /// (value gap, slope gap). Both vanish up to rounding.
    pub fn kink_gap(&self, t: f64) -> (f64, f64) {
        let m = self.p.m;
        let mu_rn = self.mu_rn();
        let kink = self.kink(t);
        let root = pow_recip_m1(self.delta, m);
        let slope_factor = self.a_coef * m / (m - 1.0);
        match self.kind {
            FamilyKind::Subsolution => {
                let v_mid = mu_rn - self.eta - self.a_coef * self.delta * root;
                let v_out =
                    mu_rn - self.eps * self.kappa * (self.p.rn() - self.theta * t - kink);
                (v_mid - v_out, slope_factor * root - self.eps * self.kappa)
            }
            FamilyKind::Supersolution => {
                let v_mid = mu_rn - self.a_coef * self.delta * root + self.eps * self.delta;
                let v_out = mu_rn + self.delta * self.eps / m;
                (v_mid - v_out, slope_factor * root - self.eps)
            }
        }
    }
}

/// Parameters backing the subsolution construction, together with the model
/// context they were selected for.
#[derive(Clone, Debug)]
pub struct SubsolutionSelection {
    pub p: ModelParams,
    pub mu: f64,
    pub r1: f64,
    pub a_sub: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub eps0: f64,
    pub theta_max: f64,
    pub r_min: f64,
    pub r2: f64,
}

impl SubsolutionSelection {
    /// Kink offset at a given epsilon.
    pub fn delta(&self, eps: f64) -> f64 {
        (eps * self.kappa * (self.p.m - 1.0) / (self.a_sub * self.p.m)).powf(self.p.m - 1.0)
    }

    /// Vertical shift at a given epsilon, evaluated from its defining
    /// expression (not the simplified identity).
    pub fn eta(&self, eps: f64) -> f64 {
        let delta = self.delta(eps);
        -self.a_sub * delta * pow_recip_m1(delta, self.p.m)
            + eps * self.kappa * (self.p.rn() - self.r1n() + delta)
    }

    pub fn r1n(&self) -> f64 {
        self.r1.powi(self.p.n as i32)
    }

    pub fn r2n(&self) -> f64 {
        self.r2.powi(self.p.n as i32)
    }

    /// Residual margin coefficient eps kappa (R^n - r2^n): the subsolution
    /// residual stays below -margin * slope on [r0^n, r2^n].
    pub fn margin_coef(&self, eps: f64) -> f64 {
        eps * self.kappa * (self.p.rn() - self.r2n())
    }

    /// Largest theta admissible for the chosen r2.
    pub fn theta_cap(&self) -> f64 {
        (self.mu - 2.0 * self.eps0 * self.kappa) * (self.p.rn() - self.r2n())
    }

    /// Re-evaluates every inequality the construction depends on.
    pub fn verify(&self) -> Result<()> {
        let p = &self.p;
        let (m, rn, r1n) = (p.m, p.rn(), self.r1n());
        let fail = |what: &str| {
            Err(Error::Internal(format!(
                "subsolution selection violates {what}: {self:?}"
            )))
        };
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return fail("lambda in (0,1)");
        }
        if !(self.kappa > 0.0) {
            return fail("kappa > 0");
        }
        if !(self.eps0 > 0.0 && self.eps0 < 1.0) {
            return fail("eps0 in (0,1)");
        }
        if !(2.0 * self.eps0 * self.kappa < self.lambda * self.mu
            && self.lambda * self.mu < self.mu)
        {
            return fail("slope cap 2 eps0 kappa < lambda mu < mu");
        }
        if !(self.theta_max > 0.0) {
            return fail("theta_max > 0");
        }
        if !(self.r_min > 0.0 && self.r_min < self.r1) {
            return fail("r_min in (0, r1)");
        }
        if !(self.r2 > self.r1 && self.r2 <= p.r_domain) {
            return fail("r2 in (r1, R]");
        }
        // Coefficient inequality tying a_sub to kappa and lambda.
        let base = (1.0 - self.lambda) * self.mu * (rn - r1n) * (m - 1.0)
            / (self.r1.powi(2 * p.n as i32 - 2) * (p.n * p.n) as f64);
        let cap = (m - 1.0) * self.kappa / (m * (self.kappa + 1.0)) * pow_recip_m1(base, m);
        if !(self.a_sub <= cap) {
            return fail("coefficient cap");
        }
        // Left-radius inequality; its bracket must stay positive.
        let bracket = 0.5 * self.lambda * self.mu * (rn - r1n)
            - self.theta_max
            - self.eps0 * self.kappa * (rn - r1n);
        if !(bracket > 0.0) {
            return fail("positive slack bracket");
        }
        let gap_cap = (bracket / self.a_sub).powf((m - 1.0) / m);
        if !(r1n - self.r_min.powi(p.n as i32) <= gap_cap) {
            return fail("left-radius gap");
        }
        // Vertical shift bounds; eta is increasing in eps so the closure of
        // the eps interval is the worst case.
        let eta0 = self.eta(self.eps0);
        if !(eta0 >= 0.0 && eta0 <= 0.5 * self.lambda * self.mu * (rn - r1n)) {
            return fail("vertical shift window");
        }
        if !(self.eta(0.5 * self.eps0) >= 0.0 && self.eta(1e-6 * self.eps0) >= 0.0) {
            return fail("vertical shift nonnegativity");
        }
        if !(self.theta_cap() > 0.0) {
            return fail("admissible theta interval");
        }
        Ok(())
    }
}

/// Parameters backing the supersolution construction.
#[derive(Clone, Debug)]
pub struct SupersolutionSelection {
    pub p: ModelParams,
    pub mu: f64,
    pub r1: f64,
    pub a_sup: f64,
    pub r_min: f64,
    pub theta: f64,
    pub eps0: f64,
    pub t_bar: f64,
}

impl SupersolutionSelection {
    pub fn delta(&self, eps: f64) -> f64 {
        (eps * (self.p.m - 1.0) / (self.a_sup * self.p.m)).powf(self.p.m - 1.0)
    }

    pub fn r1n(&self) -> f64 {
        self.r1.powi(self.p.n as i32)
    }

    /// The coefficient floor at a given left radius: the residual sign needs
    /// a_sup at least this large for every r0 down to r_min.
    pub fn coefficient_floor(&self, r0: f64) -> f64 {
        let p = &self.p;
        let base = (self.mu * p.rn() - self.mu * r0.powi(p.n as i32) + 2.0 * self.theta)
            * (p.m - 1.0)
            / (r0.powi(2 * p.n as i32 - 2) * (p.n * p.n) as f64);
        (p.m - 1.0) / p.m * pow_recip_m1(base, p.m)
    }

    pub fn verify(&self) -> Result<()> {
        let fail = |what: &str| {
            Err(Error::Internal(format!(
                "supersolution selection violates {what}: {self:?}"
            )))
        };
        if !(self.r_min > 0.0 && self.r_min < self.r1) {
            return fail("r_min in (0, r1)");
        }
        if !(self.theta > 0.0) {
            return fail("theta > 0");
        }
        // The floor is nonincreasing in r0, so r_min is the binding case.
        if !(self.a_sup >= self.coefficient_floor(self.r_min)) {
            return fail("coefficient floor at r_min");
        }
        if self.eps0 != (0.5f64).min(self.theta / self.p.rn()) {
            return fail("eps0 formula");
        }
        if self.theta * self.t_bar != self.p.rn() - self.r1n() {
            return fail("horizon identity theta * t_bar = R^n - r1^n");
        }
        Ok(())
    }
}

/// Selects subsolution parameters for a leading coefficient strictly below
/// the critical one. The recipe fixes the free constants from the gap ratio
/// q = a_sub / c_crit and then halves every cap it solves with equality, so
/// each inequality holds with definite slack.
pub fn select_subsolution_params(
    p: &ModelParams,
    mu: f64,
    r1: f64,
    a_sub: f64,
) -> Result<SubsolutionSelection> {
    let c_crit = model::c_crit(p, mu, r1)?;
    if !(a_sub > 0.0) || !a_sub.is_finite() {
        return Err(Error::domain(format!("coefficient must be positive, got {a_sub}")));
    }
    if a_sub >= c_crit {
        return Err(Error::Threshold(format!(
            "coefficient {a_sub} not below the critical value {c_crit}; no shrinking certificate exists there"
        )));
    }
    let m = p.m;
    let (rn, r1n) = (p.rn(), r1.powi(p.n as i32));
    let q = a_sub / c_crit;
    let sqrt_q = q.sqrt();
    let lambda = 1.0 - q.powf(0.5 * (m - 1.0));
    let kappa = (2.0 * sqrt_q / (1.0 - sqrt_q)).max(KAPPA_FLOOR);
    let theta_max = lambda * mu * (rn - r1n) / 8.0;

    // eps0: each cap solved with equality, then halved.
    let eta_target = 0.5 * lambda * mu * (rn - r1n);
    let cap_slope = lambda * mu / (2.0 * kappa);
    let cap_eta = {
        // eta(eps) = c1 eps + c2 eps^m, increasing; bisect to the target.
        let c1 = kappa * (rn - r1n);
        let c2 = kappa.powf(m) * ((m - 1.0) / (a_sub * m)).powf(m - 1.0) / m;
        let mut lo = 0.0;
        let mut hi = eta_target / c1;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if c1 * mid + c2 * mid.powf(m) > eta_target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    };
    let eps0 = (0.5 * cap_slope).min(0.5 * cap_eta).min(0.5);

    let bracket = eta_target - theta_max - eps0 * kappa * (rn - r1n);
    let gap = (bracket / a_sub).powf((m - 1.0) / m).min(1.5 * r1n);
    let r_min = (r1n - 0.5 * gap).powf(1.0 / p.n as f64);
    let r2 = (0.5 * (r1n + rn)).powf(1.0 / p.n as f64);

    let sel = SubsolutionSelection {
        p: p.clone(),
        mu,
        r1,
        a_sub,
        kappa,
        lambda,
        eps0,
        theta_max,
        r_min,
        r2,
    };
    sel.verify()?;
    Ok(sel)
}

/// Selects supersolution parameters for a leading coefficient strictly above
/// the critical one. Shrinks theta and the r_min gap geometrically until the
/// coefficient floor clears with slack; the accepted theta is then snapped
/// down to a power of two so that theta * t_bar reproduces R^n - r1^n
/// exactly.
pub fn select_supersolution_params(
    p: &ModelParams,
    mu: f64,
    r1: f64,
    a_sup: f64,
) -> Result<SupersolutionSelection> {
    let c_crit = model::c_crit(p, mu, r1)?;
    if !a_sup.is_finite() || a_sup <= c_crit {
        return Err(Error::Threshold(format!(
            "coefficient {a_sup} not above the critical value {c_crit}; no expansion certificate exists there"
        )));
    }
    let (rn, r1n) = (p.rn(), r1.powi(p.n as i32));
    let theta0 = 0.25 * mu * (rn - r1n);
    let gap0 = 0.5 * r1n;

    for slack in [1.1, 1.05, 1.02, 1.01, 1.001, 1.0 + 1e-6, 1.0 + 1e-9] {
        let mut theta = theta0;
        let mut gap = gap0;
        for _ in 0..60 {
            let r_min = (r1n - gap).powf(1.0 / p.n as f64);
            let mut sel = SupersolutionSelection {
                p: p.clone(),
                mu,
                r1,
                a_sup,
                r_min,
                theta,
                eps0: 0.0,
                t_bar: 0.0,
            };
            if a_sup >= slack * sel.coefficient_floor(r_min) {
                // Snapping theta downward only relaxes the floor.
                sel.theta = exp2_floor(theta);
                sel.eps0 = (0.5f64).min(sel.theta / rn);
                sel.t_bar = (rn - r1n) / sel.theta;
                sel.verify()?;
                return Ok(sel);
            }
            theta *= 0.5;
            gap *= 0.5;
        }
    }
    Err(Error::Threshold(format!(
        "coefficient {a_sup} exceeds the critical value {c_crit} by too little to select certified parameters"
    )))
}

/// Largest power of two not exceeding x. Multiplying and dividing by the
/// result is exact, which downstream horizon identities rely on.
fn exp2_floor(x: f64) -> f64 {
    debug_assert!(x > 0.0 && x.is_finite());
    (2.0f64).powi(x.log2().floor() as i32)
}

/// Builds one subsolution family member. theta = 0 with no shift gives the
/// stationary first-stage family; the second stage passes its own negative
/// shift.
pub fn build_subsolution(
    sel: &SubsolutionSelection,
    eps: f64,
    r0: f64,
    theta: f64,
    vertical_shift: f64,
) -> Result<ComparisonFamily> {
    if !(eps > 0.0 && eps < sel.eps0) {
        return Err(Error::domain(format!(
            "eps = {eps} outside (0, {})",
            sel.eps0
        )));
    }
    if !(r0 >= sel.r_min && r0 < sel.r1) {
        return Err(Error::domain(format!(
            "r0 = {r0} outside [{}, {})",
            sel.r_min, sel.r1
        )));
    }
    if !(0.0..=sel.theta_max).contains(&theta) {
        return Err(Error::domain(format!(
            "theta = {theta} outside [0, {}]",
            sel.theta_max
        )));
    }
    if theta > 0.0 && theta > sel.theta_cap() {
        return Err(Error::domain(format!(
            "theta = {theta} exceeds the admissible cap {}",
            sel.theta_cap()
        )));
    }
    if !vertical_shift.is_finite() {
        return Err(Error::domain("vertical shift must be finite"));
    }
    Ok(ComparisonFamily {
        kind: FamilyKind::Subsolution,
        p: sel.p.clone(),
        mu: sel.mu,
        a_coef: sel.a_sub,
        theta,
        r1: sel.r1,
        eps,
        delta: sel.delta(eps),
        eta: sel.eta(eps),
        kappa: sel.kappa,
        vertical_shift,
        s_lo: r0.powi(sel.p.n as i32),
        s_hi: sel.p.rn(),
        t_hi: f64::INFINITY,
    })
}

/// Builds one supersolution family member, defined up to the time its edge
/// reaches the outer boundary.
pub fn build_supersolution(
    sel: &SupersolutionSelection,
    eps: f64,
    r0: f64,
) -> Result<ComparisonFamily> {
    if !(eps > 0.0 && eps < sel.eps0) {
        return Err(Error::domain(format!(
            "eps = {eps} outside (0, {})",
            sel.eps0
        )));
    }
    if !(r0 >= sel.r_min && r0 < sel.r1) {
        return Err(Error::domain(format!(
            "r0 = {r0} outside [{}, {})",
            sel.r_min, sel.r1
        )));
    }
    Ok(ComparisonFamily {
        kind: FamilyKind::Supersolution,
        p: sel.p.clone(),
        mu: sel.mu,
        a_coef: sel.a_sup,
        theta: sel.theta,
        r1: sel.r1,
        eps,
        delta: sel.delta(eps),
        eta: 0.0,
        kappa: 0.0,
        vertical_shift: 0.0,
        s_lo: r0.powi(sel.p.n as i32),
        s_hi: sel.p.rn(),
        t_hi: sel.t_bar,
    })
}

/// The vanishing-viscosity envelope mu R^n - coef (r1^n -+ theta t - s)_+^{m/(m-1)}.
///
/// Subsolution kind moves the edge left (shrink lower bound), supersolution
/// kind moves it right (expand upper bound). Values are capped at mu R^n.
pub fn limit_envelope(
    p: &ModelParams,
    mu: f64,
    kind: FamilyKind,
    coef: f64,
    r1: f64,
    theta: f64,
    t: f64,
    s: f64,
) -> f64 {
    let r1n = r1.powi(p.n as i32);
    let rho = match kind {
        FamilyKind::Subsolution => r1n - theta * t,
        FamilyKind::Supersolution => r1n + theta * t,
    };
    let mu_rn = mu * p.rn();
    let dist = rho - s;
    if dist <= 0.0 {
        mu_rn
    } else {
        mu_rn - coef * dist * pow_recip_m1(dist, p.m)
    }
}

/// Envelope parameters bundled for trajectory checks.
#[derive(Clone, Copy, Debug)]
pub struct EnvelopeSpec {
    pub kind: FamilyKind,
    pub coef: f64,
    pub r1: f64,
    pub theta: f64,
}

impl EnvelopeSpec {
    pub fn value(&self, p: &ModelParams, mu: f64, s: f64, t: f64) -> f64 {
        limit_envelope(p, mu, self.kind, self.coef, self.r1, self.theta, t, s)
    }
}

/// Everything needed to run and check the two-stage shrink comparison for an
/// initial datum lying below mu R^n - c (r1^n - s)^{m/(m-1)} near the edge.
#[derive(Clone, Debug)]
pub struct ShrinkPlan {
    pub selection: SubsolutionSelection,
    /// Initial-bound coefficient the plan certifies against.
    pub c_env: f64,
    /// Envelope gain: a_sub = lambda_env * c_env with lambda_env > 1.
    pub lambda_env: f64,
    /// Speed of the second-stage family.
    pub theta: f64,
    /// Horizon cap under which the second-stage ordering argument is valid.
    pub t_cap: f64,
    /// Effective left radius, max(r_min, requested r0).
    pub r_star: f64,
}

impl ShrinkPlan {
    pub fn stage_one(&self, eps: f64) -> Result<ComparisonFamily> {
        build_subsolution(&self.selection, eps, self.r_star, 0.0, 0.0)
    }

    /// Second-stage family, shifted down by eps kappa (R^n - r2^n) and run on
    /// [r_star^n, r2^n]. Requires the kink offset to fit in half the gap to
    /// r1, which bounds eps.
    pub fn stage_two(&self, eps: f64) -> Result<ComparisonFamily> {
        let sel = &self.selection;
        let gap = sel.r1n() - self.r_star.powi(sel.p.n as i32);
        if !(sel.delta(eps) < 0.5 * gap) {
            return Err(Error::domain(format!(
                "kink offset {} does not fit below half the edge gap {gap}",
                sel.delta(eps)
            )));
        }
        let shift = -eps * sel.kappa * (sel.p.rn() - sel.r2n());
        build_subsolution(sel, eps, self.r_star, self.theta, shift)
    }

    /// Limit envelope certified on [r_star^n, r2^n] x [0, t_cap].
    pub fn envelope(&self) -> EnvelopeSpec {
        EnvelopeSpec {
            kind: FamilyKind::Subsolution,
            coef: self.selection.a_sub,
            r1: self.selection.r1,
            theta: self.theta,
        }
    }
}

/// Single-stage expand comparison for an initial datum lying above
/// mu R^n - c (r1^n - s)^{m/(m-1)}.
#[derive(Clone, Debug)]
pub struct ExpandPlan {
    pub selection: SupersolutionSelection,
    pub c_env: f64,
    /// Envelope gain: a_sup = c_env / lambda_env with lambda_env > 1.
    pub lambda_env: f64,
    /// Horizon cap under which the ordering argument is valid.
    pub t_cap: f64,
    pub r_star: f64,
}

impl ExpandPlan {
    /// The comparison family; the kink offset must fit in the full gap to r1.
    pub fn family(&self, eps: f64) -> Result<ComparisonFamily> {
        let sel = &self.selection;
        let gap = sel.r1n() - self.r_star.powi(sel.p.n as i32);
        if !(sel.delta(eps) < gap) {
            return Err(Error::domain(format!(
                "kink offset {} does not fit below the edge gap {gap}",
                sel.delta(eps)
            )));
        }
        build_supersolution(sel, eps, self.r_star)
    }

    /// Limit envelope certified on [r_star^n, R^n] x [0, t_cap].
    pub fn envelope(&self) -> EnvelopeSpec {
        EnvelopeSpec {
            kind: FamilyKind::Supersolution,
            coef: self.selection.a_sup,
            r1: self.selection.r1,
            theta: self.selection.theta,
        }
    }
}

/// Plans the two-stage shrink comparison for a tail coefficient c strictly
/// below critical. r0 is the left end of the region where the initial bound
/// is known to hold; the plan may retreat to r_min if that lies further
/// right.
pub fn plan_shrink(
    p: &ModelParams,
    mu: f64,
    r1: f64,
    c: f64,
    r0: f64,
) -> Result<ShrinkPlan> {
    let c_crit = model::c_crit(p, mu, r1)?;
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::domain(format!("tail coefficient must be positive, got {c}")));
    }
    if c >= c_crit {
        return Err(Error::Threshold(format!(
            "tail coefficient {c} not below the critical value {c_crit}"
        )));
    }
    if !(r0 > 0.0 && r0 < r1) {
        return Err(Error::domain(format!("r0 = {r0} outside (0, {r1})")));
    }
    // Midpoint gain keeps a_sub strictly between c and the critical value.
    let lambda_env = 0.5 * (1.0 + c_crit / c);
    let a_sub = lambda_env * c;
    let selection = select_subsolution_params(p, mu, r1, a_sub)?;
    let theta = 0.5 * selection.theta_max.min(selection.theta_cap());
    let r_star = r0.max(selection.r_min);
    let gap = selection.r1n() - r_star.powi(p.n as i32);
    let shape = 2.0 * lambda_env / (lambda_env + 1.0);
    let t_cap = (gap / selection.theta_max
        * (1.0 - shape.powf(-(p.m - 1.0) / p.m)))
    .min(0.5 * gap / selection.theta_max)
    .min(0.5 * (p.rn() - selection.r1n()) / selection.theta_max);
    Ok(ShrinkPlan {
        selection,
        c_env: c,
        lambda_env,
        theta,
        t_cap,
        r_star,
    })
}

/// Plans the expand comparison for a tail coefficient c strictly above
/// critical.
pub fn plan_expand(
    p: &ModelParams,
    mu: f64,
    r1: f64,
    c: f64,
    r0: f64,
) -> Result<ExpandPlan> {
    let c_crit = model::c_crit(p, mu, r1)?;
    if !c.is_finite() || c <= c_crit {
        return Err(Error::Threshold(format!(
            "tail coefficient {c} not above the critical value {c_crit}"
        )));
    }
    if !(r0 > 0.0 && r0 < r1) {
        return Err(Error::domain(format!("r0 = {r0} outside (0, {r1})")));
    }
    let lambda_env = 0.5 * (1.0 + c / c_crit);
    let a_sup = c / lambda_env;
    let selection = select_supersolution_params(p, mu, r1, a_sup)?;
    let r_star = r0.max(selection.r_min);
    let gap = selection.r1n() - r_star.powi(p.n as i32);
    let shape = 2.0 * lambda_env / (lambda_env + 1.0);
    let t_cap = (gap / selection.theta * (shape.powf((p.m - 1.0) / p.m) - 1.0))
        .min(selection.t_bar);
    Ok(ExpandPlan {
        selection,
        c_env: c,
        lambda_env,
        t_cap,
        r_star,
    })
}
