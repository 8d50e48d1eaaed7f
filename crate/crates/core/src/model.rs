//! Problem constants and the critical tail thresholds.
//!
//! Everything downstream works on the mass accumulation scale, where an
//! initial density tail `A (r1 - r)^{1/(m-1)}` turns into a bound
//! `mu R^n - C (r1^n - s)^{m/(m-1)}` on the accumulation function. This
//! module owns the constants of that correspondence: the critical density
//! coefficient `a_crit`, the critical accumulation coefficient `c_crit`,
//! and the map between the two scales. Support shrinks for tails below
//! `a_crit` and expands for tails above it; behaviour exactly at the
//! threshold is not classified.

use crate::error::{Error, Result};

use std::f64::consts::PI;

/// Fixed problem constants: dimension, domain radius, diffusion exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub n: u32,
    pub r_domain: f64,
    pub m: f64,
    /// Volume of the n-dimensional unit ball, pi^(n/2) / Gamma(n/2 + 1).
    pub omega_n: f64,
}

impl ModelParams {
    pub fn new(n: u32, r_domain: f64, m: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::domain("dimension n must be >= 1"));
        }
        if !(r_domain > 0.0) || !r_domain.is_finite() {
            return Err(Error::domain(format!(
                "domain radius must be positive and finite, got {r_domain}"
            )));
        }
        if !(m > 1.0) || !m.is_finite() {
            return Err(Error::domain(format!(
                "diffusion exponent must satisfy m > 1, got {m}"
            )));
        }
        Ok(ModelParams {
            n,
            r_domain,
            m,
            omega_n: omega_n(n),
        })
    }

    /// R^n, the right end of the mass-accumulation domain [0, R^n].
    pub fn rn(&self) -> f64 {
        self.r_domain.powi(self.n as i32)
    }

    /// |Omega| = omega_n R^n.
    pub fn volume(&self) -> f64 {
        self.omega_n * self.rn()
    }
}

/// Total mass of the initial density and the induced mean density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassData {
    pub total_mass: f64,
    pub mu: f64,
}

impl MassData {
    pub fn new(p: &ModelParams, total_mass: f64) -> Result<Self> {
        if !(total_mass >= 0.0) || !total_mass.is_finite() {
            return Err(Error::domain(format!(
                "total mass must be nonnegative and finite, got {total_mass}"
            )));
        }
        Ok(MassData {
            total_mass,
            mu: total_mass / p.volume(),
        })
    }

    /// Inverse constructor: fix the mean density, derive the mass.
    pub fn from_mu(p: &ModelParams, mu: f64) -> Result<Self> {
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::domain(format!(
                "mean density must be nonnegative and finite, got {mu}"
            )));
        }
        Ok(MassData {
            total_mass: mu * p.volume(),
            mu,
        })
    }
}

/// Which side of the tail correspondence is requested.
///
/// `Shrink` maps a density tail upper bound into an accumulation lower
/// bound; `Expand` maps a density tail lower bound into an accumulation
/// upper bound. The two coincide when r0 = r1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailDirection {
    Shrink,
    Expand,
}

/// Volume of the unit ball in n dimensions.
///
/// Built from the Gamma recurrence starting at Gamma(1) = 1 or
/// Gamma(1/2) = sqrt(pi), so half-integer arguments carry no
/// special-function error: omega_1 = 2 and omega_2 = pi hold exactly.
pub fn omega_n(n: u32) -> f64 {
    let half = 0.5 * n as f64;
    let (mut gamma, mut x) = if n % 2 == 0 {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    while x <= half {
        gamma *= x;
        x += 1.0;
    }
    let pi_pow = PI.powi((n / 2) as i32) * if n % 2 == 1 { PI.sqrt() } else { 1.0 };
    pi_pow / gamma
}

/// base^(1/(m-1)), switching to log-domain evaluation when m - 1 < 0.1 so
/// exponents of order 10 and beyond do not lose accuracy on the power path.
pub(crate) fn pow_recip_m1(base: f64, m: f64) -> f64 {
    debug_assert!(base >= 0.0);
    if base == 0.0 {
        return 0.0;
    }
    if m - 1.0 < 0.1 {
        (base.ln() / (m - 1.0)).exp()
    } else {
        base.powf(1.0 / (m - 1.0))
    }
}

/// n^2 s^(2-2/n), the geometric weight in front of the diffusion term.
pub(crate) fn geometry_weight(p: &ModelParams, s: f64) -> f64 {
    let nsq = (p.n * p.n) as f64;
    match p.n {
        1 => nsq,
        2 => nsq * s,
        _ => nsq * s.powf(2.0 - 2.0 / p.n as f64),
    }
}

/// x^(m-1) for x > 0, with fast paths for the quadratic and cubic cases the
/// solver spends most of its time in.
pub(crate) fn pow_m1(x: f64, m: f64) -> f64 {
    if m == 2.0 {
        x
    } else if m == 3.0 {
        x * x
    } else {
        x.powf(m - 1.0)
    }
}

fn check_r1(p: &ModelParams, r1: f64) -> Result<()> {
    if !(r1 > 0.0 && r1 < p.r_domain) {
        return Err(Error::domain(format!(
            "tail edge r1 = {r1} must lie strictly inside (0, {})",
            p.r_domain
        )));
    }
    Ok(())
}

/// Critical density-tail coefficient.
///
/// A_crit = [ M (1 - r1^n/R^n) (m-1) / (omega_n r1^(n-1) n) ]^(1/(m-1))
/// where M is the total mass. Tails flatter than A_crit (r1 - r)^(1/(m-1))
/// shrink, steeper ones expand.
pub fn a_crit(p: &ModelParams, md: &MassData, r1: f64) -> Result<f64> {
    check_r1(p, r1)?;
    if md.total_mass == 0.0 {
        return Err(Error::DegenerateInput(
            "total mass is zero; the critical tail coefficient is undefined (mu = 0)".into(),
        ));
    }
    let n = p.n as f64;
    let base = md.total_mass * (1.0 - r1.powi(p.n as i32) / p.rn()) * (p.m - 1.0)
        / (p.omega_n * r1.powi(p.n as i32 - 1) * n);
    Ok(pow_recip_m1(base, p.m))
}

/// Critical mass-accumulation coefficient.
///
/// C_crit(r1) = ((m-1)/m) [ mu (R^n - r1^n)(m-1) / (r1^(2n-2) n^2) ]^(1/(m-1)).
pub fn c_crit(p: &ModelParams, mu: f64, r1: f64) -> Result<f64> {
    check_r1(p, r1)?;
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::domain(format!(
            "mean density must be nonnegative and finite, got {mu}"
        )));
    }
    let n = p.n as f64;
    let base =
        mu * (p.rn() - r1.powi(p.n as i32)) * (p.m - 1.0) / (r1.powi(2 * p.n as i32 - 2) * n * n);
    Ok((p.m - 1.0) / p.m * pow_recip_m1(base, p.m))
}

/// Coefficient of (r1^n - s)^(m/(m-1)) in the accumulation-scale bound
/// induced by a density tail with coefficient `a` supported on (r0, r1).
///
/// Shrink direction: C = a n^(-1/(m-1)) r0^(-(n-1)m/(m-1)) r1^(n-1) (m-1)/m.
/// Expand swaps the roles of r0 and r1 in the radius powers. r0 = r1 is
/// admitted as the closed-form limit, where both directions agree; fed the
/// critical coefficient there, the shrink map lands exactly on `c_crit`.
pub fn tail_to_mass_coefficient(
    p: &ModelParams,
    a: f64,
    r0: f64,
    r1: f64,
    direction: TailDirection,
) -> Result<f64> {
    check_r1(p, r1)?;
    if !(r0 > 0.0 && r0 <= r1) {
        return Err(Error::domain(format!(
            "tail radii must satisfy 0 < r0 <= r1, got r0 = {r0}, r1 = {r1}"
        )));
    }
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::domain(format!(
            "tail coefficient must be nonnegative and finite, got {a}"
        )));
    }
    let (x, y) = match direction {
        TailDirection::Shrink => (r0, r1),
        TailDirection::Expand => (r1, r0),
    };
    let n = p.n as f64;
    let m = p.m;
    // a * n^{-1/(m-1)} * x^{-(n-1)m/(m-1)} * y^{n-1} * (m-1)/m
    let radius_pow = if p.n == 1 {
        1.0
    } else {
        x.powf(-(n - 1.0) * m / (m - 1.0)) * y.powi(p.n as i32 - 1)
    };
    Ok(a * pow_recip_m1(n, m).recip() * radius_pow * (m - 1.0) / m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_ball_volumes() {
        assert_eq!(omega_n(1), 2.0);
        assert_eq!(omega_n(2), PI);
        assert!((omega_n(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((omega_n(4) - PI * PI / 2.0).abs() < 1e-15);
        assert!((omega_n(5) - 8.0 * PI * PI / 15.0).abs() < 1e-14);
    }

    #[test]
    fn a_crit_interval_worked_value() {
        let p = ModelParams::new(1, 1.0, 2.0).unwrap();
        let md = MassData::new(&p, 2.0).unwrap();
        assert_eq!(md.mu, 1.0);
        let a = a_crit(&p, &md, 0.5).unwrap();
        assert!((a - 0.5).abs() <= 1e-15, "a_crit = {a}");
    }

    #[test]
    fn a_crit_disc_worked_value() {
        let p = ModelParams::new(2, 1.0, 3.0).unwrap();
        let md = MassData::new(&p, PI).unwrap();
        let a = a_crit(&p, &md, 0.5).unwrap();
        assert!((a - 1.5f64.sqrt()).abs() <= 1e-14, "a_crit = {a}");
    }

    #[test]
    fn a_crit_vanishes_at_domain_edge() {
        let p = ModelParams::new(2, 1.0, 2.0).unwrap();
        let md = MassData::new(&p, 1.0).unwrap();
        let near_edge = a_crit(&p, &md, 1.0 - 1e-9).unwrap();
        assert!(near_edge < 1e-8, "expected vanishing threshold, got {near_edge}");
    }

    #[test]
    fn a_crit_rejects_bad_inputs() {
        let p = ModelParams::new(1, 1.0, 2.0).unwrap();
        let md = MassData::new(&p, 2.0).unwrap();
        assert!(matches!(a_crit(&p, &md, 1.0), Err(Error::Domain(_))));
        assert!(matches!(a_crit(&p, &md, 0.0), Err(Error::Domain(_))));
        let zero = MassData::new(&p, 0.0).unwrap();
        assert!(matches!(
            a_crit(&p, &zero, 0.5),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn c_crit_worked_value() {
        let p = ModelParams::new(1, 1.0, 2.0).unwrap();
        let c = c_crit(&p, 1.0, 0.5).unwrap();
        assert!((c - 0.25).abs() <= 1e-15, "c_crit = {c}");
        assert_eq!(c_crit(&p, 0.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn tail_map_dimension_one_collapses_radius_powers() {
        let p = ModelParams::new(1, 1.0, 2.0).unwrap();
        for (r0, r1) in [(0.1, 0.4), (0.3, 0.3), (0.6, 0.9)] {
            let s = tail_to_mass_coefficient(&p, 1.0, r0, r1, TailDirection::Shrink).unwrap();
            let e = tail_to_mass_coefficient(&p, 1.0, r0, r1, TailDirection::Expand).unwrap();
            assert_eq!(s, 0.5);
            assert_eq!(e, 0.5);
        }
    }

    #[test]
    fn tail_map_planar_worked_value() {
        let p = ModelParams::new(2, 2.0, 2.0).unwrap();
        let c = tail_to_mass_coefficient(&p, 1.0, 1.0, 1.0, TailDirection::Shrink).unwrap();
        assert!((c - 0.25).abs() <= 1e-15, "coefficient = {c}");
    }

    #[test]
    fn tail_map_directions_agree_at_equal_radii() {
        let p = ModelParams::new(3, 1.0, 2.5).unwrap();
        let s = tail_to_mass_coefficient(&p, 0.7, 0.6, 0.6, TailDirection::Shrink).unwrap();
        let e = tail_to_mass_coefficient(&p, 0.7, 0.6, 0.6, TailDirection::Expand).unwrap();
        assert_eq!(s, e);
    }

    #[test]
    fn tail_map_rejects_reversed_radii() {
        let p = ModelParams::new(2, 1.0, 2.0).unwrap();
        assert!(matches!(
            tail_to_mass_coefficient(&p, 1.0, 0.6, 0.5, TailDirection::Shrink),
            Err(Error::Domain(_))
        ));
    }

    /// Identity behind the main dichotomy: pushing the critical density
    /// coefficient through the shrink map at r0 = r1 lands on c_crit.
    #[test]
    fn threshold_identity_worked_case() {
        let p = ModelParams::new(1, 1.0, 2.0).unwrap();
        let md = MassData::new(&p, 2.0).unwrap();
        let a = a_crit(&p, &md, 0.5).unwrap();
        let mapped = tail_to_mass_coefficient(&p, a, 0.5, 0.5, TailDirection::Shrink).unwrap();
        let c = c_crit(&p, md.mu, 0.5).unwrap();
        assert!((mapped - c).abs() <= 1e-15 * c.abs());
    }

    fn arb_params() -> impl Strategy<Value = (u32, f64, f64, f64, f64)> {
        // (n, m, R, r1/R, mass)
        (
            1u32..=3,
            1.1f64..4.0,
            0.5f64..3.0,
            0.2f64..0.8,
            0.5f64..5.0,
        )
    }

    proptest! {
        #[test]
        fn threshold_identity_holds_everywhere((n, m, r_domain, r1_frac, mass) in arb_params()) {
            let p = ModelParams::new(n, r_domain, m).unwrap();
            let md = MassData::new(&p, mass).unwrap();
            let r1 = r1_frac * r_domain;
            let a = a_crit(&p, &md, r1).unwrap();
            let mapped = tail_to_mass_coefficient(&p, a, r1, r1, TailDirection::Shrink).unwrap();
            let c = c_crit(&p, md.mu, r1).unwrap();
            prop_assert!((mapped - c).abs() <= 1e-12 * c.abs(),
                "mapped = {mapped}, c_crit = {c}");
        }

        #[test]
        fn thresholds_decrease_in_r1((n, m, r_domain, r1_frac, mass) in arb_params(),
                                     bump in 1.05f64..1.4) {
            let p = ModelParams::new(n, r_domain, m).unwrap();
            let md = MassData::new(&p, mass).unwrap();
            let r1_lo = r1_frac * r_domain;
            let r1_hi = (r1_frac * bump).min(0.98) * r_domain;
            prop_assume!(r1_hi > r1_lo);
            prop_assert!(a_crit(&p, &md, r1_hi).unwrap() < a_crit(&p, &md, r1_lo).unwrap());
            prop_assert!(c_crit(&p, md.mu, r1_hi).unwrap() < c_crit(&p, md.mu, r1_lo).unwrap());
        }

        #[test]
        fn a_crit_mass_homogeneity((n, m, r_domain, r1_frac, mass) in arb_params(),
                                   scale in 0.1f64..10.0) {
            let p = ModelParams::new(n, r_domain, m).unwrap();
            let md = MassData::new(&p, mass).unwrap();
            let scaled = MassData::new(&p, scale * mass).unwrap();
            let r1 = r1_frac * r_domain;
            let base = a_crit(&p, &md, r1).unwrap();
            let got = a_crit(&p, &scaled, r1).unwrap();
            let expected = base * pow_recip_m1(scale, m);
            prop_assert!((got - expected).abs() <= 1e-12 * expected.abs(),
                "got {got}, expected {expected}");
        }
    }
}
