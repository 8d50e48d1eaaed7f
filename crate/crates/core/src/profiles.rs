//! Radial initial densities and their mass-accumulation transforms.
//!
//! Profiles are piecewise analytic (plateau, linear ramp, power tail,
//! zero), so masses and transforms come from closed-form antiderivatives
//! per segment instead of quadrature. The transform is
//!
//!     w0(s) = n * integral of rho^(n-1) u0(rho) over (0, s^(1/n))
//!
//! evaluated segment-exactly; for plateau pieces the partial integral is
//! formed directly in the s variable, which keeps constant-density data
//! exact to round-off at every node.

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Analytic form of one radial segment.
#[derive(Debug, Clone, PartialEq)]
pub enum SegmentKind {
    /// Constant density.
    Plateau { value: f64 },
    /// Linear in radius between the segment endpoints.
    Ramp { left: f64, right: f64 },
    /// a * (edge - r)^alpha, vanishing at r = edge.
    PowerTail { a: f64, alpha: f64, edge: f64 },
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub r_lo: f64,
    pub r_hi: f64,
    pub kind: SegmentKind,
}

impl Segment {
    fn value_at(&self, r: f64) -> f64 {
        match &self.kind {
            SegmentKind::Plateau { value } => *value,
            SegmentKind::Ramp { left, right } => {
                let t = (r - self.r_lo) / (self.r_hi - self.r_lo);
                left + (right - left) * t
            }
            SegmentKind::PowerTail { a, alpha, edge } => {
                let dist = (edge - r).max(0.0);
                a * dist.powf(*alpha)
            }
            SegmentKind::Zero => 0.0,
        }
    }
}

/// Radially symmetric initial density on [0, R].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub pieces: Vec<Segment>,
    /// Supremum of the essential support when the tail is nontrivial.
    pub r1: f64,
    /// Optional sampled (r, u0(r)) table, filled on demand for emission.
    pub tabulation: Option<Vec<(f64, f64)>>,
}

/// Monotone discretization of a mass accumulation function on [0, R^n].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub s: Vec<f64>,
    pub values: Vec<f64>,
    /// Pinned right boundary value mu * R^n.
    pub mu_rn: f64,
}

impl GridFunction {
    pub fn new(s: Vec<f64>, values: Vec<f64>, mu_rn: f64) -> Result<Self> {
        let g = GridFunction { s, values, mu_rn };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s.len() != self.values.len() || self.s.len() < 2 {
            return Err(Error::domain(
                "grid function needs matching s/value arrays with at least two nodes",
            ));
        }
        if !self.s.windows(2).all(|p| p[1] > p[0]) {
            return Err(Error::domain("grid nodes must be strictly increasing"));
        }
        if self.s[0] != 0.0 {
            return Err(Error::domain("grid must start at s = 0"));
        }
        let tol = 32.0 * f64::EPSILON * self.mu_rn.abs().max(1.0);
        if self.values[0].abs() > tol {
            return Err(Error::domain(format!(
                "w(0) must vanish, got {}",
                self.values[0]
            )));
        }
        if (self.values[self.values.len() - 1] - self.mu_rn).abs() > tol {
            return Err(Error::domain(format!(
                "w(R^n) must equal mu R^n = {}, got {}",
                self.mu_rn,
                self.values[self.values.len() - 1]
            )));
        }
        if !self.values.windows(2).all(|p| p[1] >= p[0] - tol) {
            return Err(Error::domain("w must be nondecreasing in s"));
        }
        if self.values.iter().any(|v| *v > self.mu_rn + tol) {
            return Err(Error::domain("w exceeds the pinned boundary value"));
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.s.len() - 1
    }

    /// Spacing of the first cell; grids in this crate are uniform.
    pub fn ds(&self) -> f64 {
        self.s[1] - self.s[0]
    }
}

/// Uniform grid of `n_cells` cells on [0, R^n], endpoints exact.
pub fn uniform_grid(p: &ModelParams, n_cells: usize) -> Vec<f64> {
    let rn = p.rn();
    let ds = rn / n_cells as f64;
    let mut s: Vec<f64> = (0..=n_cells).map(|j| j as f64 * ds).collect();
    s[n_cells] = rn;
    s
}

/// Plateau of height B out to r_plateau, linear ramp to the tail start,
/// power tail A (r1 - r)^alpha on (r0, r1), zero beyond.
pub fn make_profile(
    p: &ModelParams,
    plateau: f64,
    r_plateau: f64,
    a: f64,
    alpha: f64,
    r0: f64,
    r1: f64,
) -> Result<RadialProfile> {
    if !(0.0 < r_plateau && r_plateau <= r0 && r0 < r1 && r1 < p.r_domain) {
        return Err(Error::domain(format!(
            "radii must satisfy 0 < r_plateau <= r0 < r1 < R, got \
             r_plateau = {r_plateau}, r0 = {r0}, r1 = {r1}, R = {}",
            p.r_domain
        )));
    }
    if !(plateau >= 0.0) || !(a >= 0.0) {
        return Err(Error::domain("plateau and tail coefficients must be nonnegative"));
    }
    if !(alpha > 0.0) {
        return Err(Error::domain(format!("tail exponent must be positive, got {alpha}")));
    }

    let mut pieces = vec![Segment {
        r_lo: 0.0,
        r_hi: r_plateau,
        kind: SegmentKind::Plateau { value: plateau },
    }];
    if r_plateau < r0 {
        let tail_start = a * (r1 - r0).powf(alpha);
        pieces.push(Segment {
            r_lo: r_plateau,
            r_hi: r0,
            kind: SegmentKind::Ramp {
                left: plateau,
                right: tail_start,
            },
        });
    }
    pieces.push(Segment {
        r_lo: r0,
        r_hi: r1,
        kind: SegmentKind::PowerTail { a, alpha, edge: r1 },
    });
    pieces.push(Segment {
        r_lo: r1,
        r_hi: p.r_domain,
        kind: SegmentKind::Zero,
    });
    Ok(RadialProfile {
        pieces,
        r1,
        tabulation: None,
    })
}

impl RadialProfile {
    /// Pointwise density value; segments are half-open on the right.
    pub fn value_at(&self, r: f64) -> f64 {
        for seg in &self.pieces {
            if r < seg.r_hi || (r == seg.r_hi && seg.r_hi == self.pieces.last().unwrap().r_hi) {
                return seg.value_at(r);
            }
        }
        0.0
    }

    /// Whether consecutive segments agree at their junctions. Recorded in
    /// run metadata; nothing downstream branches on it.
    pub fn is_continuous(&self) -> bool {
        self.pieces.windows(2).all(|pair| {
            let left = pair[0].value_at(pair[0].r_hi);
            let right = pair[1].value_at(pair[1].r_lo);
            (left - right).abs() <= 1e-12 * left.abs().max(right.abs()).max(1.0)
        })
    }

    pub fn tabulate(&mut self, radii: &[f64]) {
        self.tabulation = Some(radii.iter().map(|&r| (r, self.value_at(r))).collect());
    }
}

/// Binomial coefficient as f64; arguments stay small (k <= n-1).
fn binom(n: u32, k: u32) -> f64 {
    let mut out = 1.0;
    for i in 0..k {
        out *= (n - i) as f64 / (i + 1) as f64;
    }
    out
}

/// n * integral of rho^(n-1) * segment(rho) from seg.r_lo up to radius x,
/// where s = x^n is also supplied so plateau pieces can work in s directly.
/// Requires seg.r_lo <= x <= seg.r_hi.
fn segment_partial(p: &ModelParams, seg: &Segment, x: f64, s: f64) -> f64 {
    let n = p.n as f64;
    let ni = p.n as i32;
    match &seg.kind {
        SegmentKind::Zero => 0.0,
        SegmentKind::Plateau { value } => value * (s - seg.r_lo.powi(ni)),
        SegmentKind::Ramp { left, right } => {
            let c1 = (right - left) / (seg.r_hi - seg.r_lo);
            let c0 = left - c1 * seg.r_lo;
            // n∫rho^{n-1}(c0 + c1 rho) = c0 (x^n - lo^n) + c1 n/(n+1) (x^{n+1} - lo^{n+1})
            c0 * (s - seg.r_lo.powi(ni))
                + c1 * n / (n + 1.0) * (s * x - seg.r_lo.powi(ni + 1))
        }
        SegmentKind::PowerTail { a, alpha, edge } => {
            // substitute y = edge - rho and expand (edge - y)^(n-1)
            let y_hi = (edge - seg.r_lo).max(0.0);
            let y_lo = (edge - x).max(0.0);
            let mut acc = 0.0;
            for k in 0..p.n {
                let pw = alpha + k as f64 + 1.0;
                let term = binom(p.n - 1, k) * edge.powi((p.n - 1 - k) as i32)
                    * (y_hi.powf(pw) - y_lo.powf(pw))
                    / pw;
                acc += if k % 2 == 0 { term } else { -term };
            }
            n * a * acc
        }
    }
}

fn segment_full(p: &ModelParams, seg: &Segment) -> f64 {
    segment_partial(p, seg, seg.r_hi, seg.r_hi.powi(p.n as i32))
}

/// Total mass of the profile over the ball, omega_n * n * ∫ rho^(n-1) u0.
pub fn mass(p: &ModelParams, profile: &RadialProfile) -> f64 {
    p.omega_n
        * profile
            .pieces
            .iter()
            .map(|seg| segment_full(p, seg))
            .sum::<f64>()
}

/// Plateau height that hits `target_mass` with the given tail; the mass is
/// affine in the plateau height, so this is a single closed-form solve.
pub fn calibrate_plateau(
    p: &ModelParams,
    target_mass: f64,
    a: f64,
    alpha: f64,
    r_plateau: f64,
    r0: f64,
    r1: f64,
) -> Result<f64> {
    if !(target_mass >= 0.0) || !target_mass.is_finite() {
        return Err(Error::domain(format!(
            "target mass must be nonnegative and finite, got {target_mass}"
        )));
    }
    let at0 = mass(p, &make_profile(p, 0.0, r_plateau, a, alpha, r0, r1)?);
    let at1 = mass(p, &make_profile(p, 1.0, r_plateau, a, alpha, r0, r1)?);
    let slope = at1 - at0;
    if target_mass < at0 * (1.0 - 1e-12) {
        return Err(Error::Infeasible(format!(
            "target mass {target_mass} is below the tail-only mass {at0}; \
             shrink the tail coefficient or the tail region"
        )));
    }
    Ok(((target_mass - at0) / slope).max(0.0))
}

/// Mass accumulation transform of the profile on the given s grid.
pub fn transform_to_w(p: &ModelParams, profile: &RadialProfile, s_grid: &[f64]) -> GridFunction {
    let prefix: Vec<f64> = profile
        .pieces
        .iter()
        .scan(0.0, |acc, seg| {
            let before = *acc;
            *acc += segment_full(p, seg);
            Some(before)
        })
        .collect();
    let total: f64 = profile.pieces.iter().map(|seg| segment_full(p, seg)).sum();

    let inv_n = 1.0 / p.n as f64;
    let mut seg_idx = 0usize;
    let values: Vec<f64> = s_grid
        .iter()
        .map(|&s| {
            let x = if p.n == 1 { s } else { s.powf(inv_n) };
            while seg_idx + 1 < profile.pieces.len() && x >= profile.pieces[seg_idx].r_hi {
                seg_idx += 1;
            }
            let seg = &profile.pieces[seg_idx];
            let xc = x.min(seg.r_hi).max(seg.r_lo);
            let w = prefix[seg_idx] + segment_partial(p, seg, xc, s.min(p.rn()));
            w.min(total)
        })
        .collect();

    let mut g = GridFunction {
        s: s_grid.to_vec(),
        values,
        mu_rn: total,
    };
    let last = g.values.len() - 1;
    g.values[last] = total;
    g.values[0] = 0.0;
    g
}

/// One-sided difference quotients of w per cell, mapped back to radius:
/// u(s_i^(1/n)) ~ (w_{i+1} - w_i) / (s_{i+1} - s_i).
pub fn derivative_to_u(p: &ModelParams, w: &GridFunction) -> Vec<(f64, f64)> {
    let inv_n = 1.0 / p.n as f64;
    (0..w.s.len() - 1)
        .map(|i| {
            let slope = (w.values[i + 1] - w.values[i]) / (w.s[i + 1] - w.s[i]);
            let r = if p.n == 1 { w.s[i] } else { w.s[i].powf(inv_n) };
            (r, slope)
        })
        .collect()
}

/// Which side of the accumulation bound is being checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    Lower,
    Upper,
}

/// Outcome of a nodewise initial-bound check on (r0^n, r1^n).
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub holds: bool,
    pub side: BoundSide,
    pub coefficient: f64,
    /// Largest violation beyond tolerance, zero when the bound holds.
    pub worst_violation: f64,
    /// Node where the worst violation (or smallest margin) occurs.
    pub worst_s: f64,
    pub nodes_checked: usize,
    pub tol: f64,
}

/// Nodewise check of w0(s) >= mu R^n - C (r1^n - s)^(m/(m-1)) (lower) or
/// the reversed inequality (upper) strictly inside (r0^n, r1^n).
pub fn check_initial_bound(
    p: &ModelParams,
    w0: &GridFunction,
    c: f64,
    r0: f64,
    r1: f64,
    side: BoundSide,
) -> Result<BoundReport> {
    if !(0.0 < r0 && r0 <= r1 && r1 < p.r_domain) {
        return Err(Error::domain(format!(
            "bound radii must satisfy 0 < r0 <= r1 < R, got r0 = {r0}, r1 = {r1}"
        )));
    }
    if !(c >= 0.0) {
        return Err(Error::domain("bound coefficient must be nonnegative"));
    }
    let s_lo = r0.powi(p.n as i32);
    let s_hi = r1.powi(p.n as i32);
    let expo = p.m / (p.m - 1.0);
    let tol = 1e-12 * w0.mu_rn.abs();

    let mut worst = f64::NEG_INFINITY;
    let mut worst_s = s_lo;
    let mut checked = 0usize;
    for (&s, &w) in w0.s.iter().zip(&w0.values) {
        if s <= s_lo || s >= s_hi {
            continue;
        }
        checked += 1;
        let bound = w0.mu_rn - c * (s_hi - s).powf(expo);
        let violation = match side {
            BoundSide::Lower => bound - w,
            BoundSide::Upper => w - bound,
        };
        if violation > worst {
            worst = violation;
            worst_s = s;
        }
    }
    if checked == 0 {
        return Err(Error::domain(
            "no grid nodes fall strictly inside (r0^n, r1^n); refine the grid",
        ));
    }
    let holds = worst <= tol;
    Ok(BoundReport {
        holds,
        side,
        coefficient: c,
        worst_violation: if holds { 0.0 } else { worst },
        worst_s,
        nodes_checked: checked,
        tol,
    })
}

/// Tail exponent exactly 1/(m-1), the borderline shape of the dichotomy.
pub fn borderline_alpha(p: &ModelParams) -> f64 {
    1.0 / (p.m - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{tail_to_mass_coefficient, MassData, TailDirection};
    use proptest::prelude::*;

    fn interval() -> ModelParams {
        ModelParams::new(1, 1.0, 2.0).unwrap()
    }

    #[test]
    fn zero_profile_is_zero() {
        let p = interval();
        let prof = make_profile(&p, 0.0, 0.3, 0.0, 1.0, 0.3, 0.5).unwrap();
        assert_eq!(mass(&p, &prof), 0.0);
        for r in [0.0, 0.2, 0.4, 0.7, 1.0] {
            assert_eq!(prof.value_at(r), 0.0);
        }
    }

    #[test]
    fn tail_evaluation() {
        let p = interval();
        let prof = make_profile(&p, 1.0, 0.3, 1.0, 1.0, 0.3, 0.5).unwrap();
        assert!((prof.value_at(0.4) - 0.1).abs() < 1e-15);
        assert_eq!(prof.value_at(0.6), 0.0);
        assert_eq!(prof.value_at(0.1), 1.0);
    }

    #[test]
    fn interval_mass_worked_value() {
        let p = interval();
        let prof = make_profile(&p, 1.0, 0.3, 1.0, 1.0, 0.3, 0.5).unwrap();
        let m = mass(&p, &prof);
        assert!((m - 0.64).abs() <= 1e-15, "mass = {m}");
    }

    #[test]
    fn constant_profile_mass() {
        let p = ModelParams::new(3, 1.5, 2.0).unwrap();
        let prof = RadialProfile {
            pieces: vec![Segment {
                r_lo: 0.0,
                r_hi: 1.5,
                kind: SegmentKind::Plateau { value: 2.0 },
            }],
            r1: 1.5,
            tabulation: None,
        };
        let m = mass(&p, &prof);
        let expected = 2.0 * p.omega_n * p.rn();
        assert!((m - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn calibrate_plateau_worked_value() {
        let p = interval();
        let b = calibrate_plateau(&p, 2.0, 1.0, 1.0, 0.3, 0.3, 0.5).unwrap();
        assert!((b - 49.0 / 15.0).abs() <= 1e-12, "B = {b}");
        let prof = make_profile(&p, b, 0.3, 1.0, 1.0, 0.3, 0.5).unwrap();
        assert!((mass(&p, &prof) - 2.0).abs() <= 1e-10 * 2.0);
    }

    #[test]
    fn calibrate_plateau_edge_cases() {
        let p = interval();
        // pure plateau: B = target / measure of the plateau region
        let b = calibrate_plateau(&p, 1.2, 0.0, 1.0, 0.3, 0.3, 0.5).unwrap();
        assert!((b - 1.2 / 0.6).abs() < 1e-14);
        // target exactly the tail mass
        let b0 = calibrate_plateau(&p, 0.04, 1.0, 1.0, 0.3, 0.3, 0.5).unwrap();
        assert!(b0.abs() < 1e-12, "B = {b0}");
        assert!(matches!(
            calibrate_plateau(&p, 0.02, 1.0, 1.0, 0.3, 0.3, 0.5),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn transform_constant_density_is_linear_and_exact() {
        for n in [1u32, 2, 3] {
            let p = ModelParams::new(n, 1.0, 2.0).unwrap();
            let prof = RadialProfile {
                pieces: vec![Segment {
                    r_lo: 0.0,
                    r_hi: 1.0,
                    kind: SegmentKind::Plateau { value: 1.5 },
                }],
                r1: 1.0,
                tabulation: None,
            };
            let grid = uniform_grid(&p, 64);
            let w = transform_to_w(&p, &prof, &grid);
            for (s, v) in w.s.iter().zip(&w.values) {
                assert_eq!(*v, 1.5 * s, "n = {n}, s = {s}");
            }
        }
    }

    #[test]
    fn transform_truncated_plateau() {
        let p = interval();
        let prof = RadialProfile {
            pieces: vec![
                Segment {
                    r_lo: 0.0,
                    r_hi: 0.5,
                    kind: SegmentKind::Plateau { value: 1.0 },
                },
                Segment {
                    r_lo: 0.5,
                    r_hi: 1.0,
                    kind: SegmentKind::Zero,
                },
            ],
            r1: 0.5,
            tabulation: None,
        };
        let grid = uniform_grid(&p, 100);
        let w = transform_to_w(&p, &prof, &grid);
        for (s, v) in w.s.iter().zip(&w.values) {
            assert!((v - s.min(0.5)).abs() <= 1e-15, "s = {s}, w = {v}");
        }
    }

    #[test]
    fn transform_pins_boundary_mass() {
        let p = ModelParams::new(2, 1.0, 3.0).unwrap();
        let prof = make_profile(&p, 2.0, 0.2, 1.3, 0.5, 0.4, 0.7).unwrap();
        let total = mass(&p, &prof);
        let md = MassData::new(&p, total).unwrap();
        let grid = uniform_grid(&p, 512);
        let w = transform_to_w(&p, &prof, &grid);
        assert!((w.mu_rn - md.mu * p.rn()).abs() <= 1e-10 * w.mu_rn);
        assert_eq!(w.values[w.values.len() - 1], w.mu_rn);
        w.validate().unwrap();
    }

    #[test]
    fn derivative_round_trip() {
        let p = interval();
        let prof = make_profile(&p, 1.0, 0.3, 1.0, 1.0, 0.3, 0.5).unwrap();
        let grid = uniform_grid(&p, 1000);
        let w = transform_to_w(&p, &prof, &grid);
        let u = derivative_to_u(&p, &w);
        let ds = grid[1] - grid[0];
        for (r, val) in u {
            // skip cells containing a breakpoint; centered data elsewhere
            if [0.3, 0.5].iter().any(|b| (r - b).abs() <= ds) {
                continue;
            }
            let expect = prof.value_at(r);
            assert!(
                (val - expect).abs() <= 2.0 * ds,
                "r = {r}, got {val}, expected {expect}"
            );
        }
    }

    #[test]
    fn initial_bound_saturated_plateau_trivially_holds() {
        let p = interval();
        let s = uniform_grid(&p, 50);
        let mut values = vec![1.0; s.len()];
        values[0] = 0.0;
        let w = GridFunction {
            s,
            values,
            mu_rn: 1.0,
        };
        for c in [0.0, 0.3, 5.0] {
            let rep = check_initial_bound(&p, &w, c, 0.2, 0.9, BoundSide::Lower).unwrap();
            assert!(rep.holds);
            assert_eq!(rep.worst_violation, 0.0);
        }
    }

    #[test]
    fn initial_bound_exact_tail_interval() {
        let p = interval();
        let prof = make_profile(&p, 3.0, 0.25, 1.0, 1.0, 0.3, 0.5).unwrap();
        let grid = uniform_grid(&p, 2048);
        let w = transform_to_w(&p, &prof, &grid);
        let ok = check_initial_bound(&p, &w, 0.5, 0.3, 0.5, BoundSide::Lower).unwrap();
        assert!(ok.holds, "worst violation {}", ok.worst_violation);
        let bad = check_initial_bound(&p, &w, 0.4, 0.3, 0.5, BoundSide::Lower).unwrap();
        assert!(!bad.holds);
        // worst violation of the weakened bound sits at the tail start
        assert!(
            (bad.worst_s - 0.3).abs() < 0.01,
            "worst at s = {}",
            bad.worst_s
        );
    }

    proptest! {
        #[test]
        fn transform_is_monotone_and_pinned(
            n in 1u32..=3,
            m in 1.3f64..4.0,
            b in 0.0f64..4.0,
            a in 0.0f64..3.0,
            alpha in 0.3f64..3.0,
            cuts in (0.05f64..0.9, 0.0f64..1.0, 0.0f64..1.0),
        ) {
            let p = ModelParams::new(n, 1.0, m).unwrap();
            let (c0, c1, c2) = cuts;
            let r_plateau = c0;
            let r0 = r_plateau + c1 * (0.95 - r_plateau);
            let r1 = r0 + (c2 + 0.01) / 1.02 * (0.98 - r0);
            prop_assume!(r_plateau <= r0 && r0 < r1 && r1 < 1.0);
            let prof = make_profile(&p, b, r_plateau, a, alpha, r0, r1).unwrap();
            let grid = uniform_grid(&p, 256);
            let w = transform_to_w(&p, &prof, &grid);
            prop_assert!(w.values.windows(2).all(|q| q[1] >= q[0] - 1e-14));
            let total = mass(&p, &prof);
            prop_assert!((w.mu_rn * p.omega_n - total).abs() <= 1e-10 * total.max(1e-30));
            w.validate().unwrap();
        }

        /// Exact borderline tails satisfy both mapped accumulation bounds.
        #[test]
        fn mapped_bounds_sound_for_borderline_tails(
            n in 1u32..=3,
            m in 2.0f64..4.0,
            a in 0.2f64..2.0,
            r1 in 0.3f64..0.7,
            gap in 0.9f64..0.97,
        ) {
            let p = ModelParams::new(n, 1.0, m).unwrap();
            let alpha = borderline_alpha(&p);
            let r0 = r1 * gap;
            let prof = make_profile(&p, 1.0, r0 * 0.9, a, alpha, r0, r1).unwrap();
            let grid = uniform_grid(&p, 2048);
            let w = transform_to_w(&p, &prof, &grid);
            let c_lo = tail_to_mass_coefficient(&p, a, r0, r1, TailDirection::Shrink).unwrap();
            let c_hi = tail_to_mass_coefficient(&p, a, r0, r1, TailDirection::Expand).unwrap();
            let lo = check_initial_bound(&p, &w, c_lo, r0, r1, BoundSide::Lower).unwrap();
            let hi = check_initial_bound(&p, &w, c_hi, r0, r1, BoundSide::Upper).unwrap();
            prop_assert!(lo.holds, "lower failed by {} at s = {}", lo.worst_violation, lo.worst_s);
            prop_assert!(hi.holds, "upper failed by {} at s = {}", hi.worst_violation, hi.worst_s);
        }
    }
}
