//! Free-boundary extraction and classification. The front is read off a
//! snapshot as the first entry into a relative saturation band under the
//! pinned boundary value, then a least-squares line over an early time
//! window decides whether it moved.

use crate::comparison::EnvelopeSpec;
use crate::error::{Error, Result};
use crate::profiles::{BoundSide, GridFunction};
use crate::solver::Trajectory;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrontEntry {
    pub t: f64,
    pub s_front: f64,
    pub r_front: f64,
}

#[derive(Clone, Debug)]
pub struct FrontTrace {
    pub entries: Vec<FrontEntry>,
    /// Relative saturation band the positions were read at.
    pub tau: f64,
    /// Grid spacing in s, kept for the displacement gate.
    pub ds: f64,
    pub run_id: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Shrinking,
    Expanding,
    Inconclusive,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::Shrinking => "shrinking",
            Classification::Expanding => "expanding",
            Classification::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FrontVerdict {
    pub classification: Classification,
    /// Fitted radial speed, positive when classified, zero otherwise.
    pub zeta: f64,
    /// Signed slope of the r_front fit.
    pub slope: f64,
    pub window: (f64, f64),
    /// Root-mean-square deviation of the fit.
    pub fit_residual: f64,
    /// Front displacement over the window, in grid cells of s.
    pub displacement_cells: f64,
    pub entries_used: usize,
    /// Latest time up to which the front kept moving the fitted way,
    /// with one grid cell of slack.
    pub monotone_until: f64,
}

/// First s where the deficit mu R^n - w drops to tau * mu R^n, linearly
/// interpolated inside the bracketing cell. The pinned right endpoint
/// guarantees the band is entered.
pub fn front_position(w: &GridFunction, tau: f64) -> f64 {
    assert!(tau > 0.0 && tau < 1.0, "saturation band must lie in (0,1)");
    let target = (1.0 - tau) * w.mu_rn;
    for i in 0..w.values.len() {
        if w.values[i] >= target {
            if i == 0 {
                return w.s[0];
            }
            let rise = w.values[i] - w.values[i - 1];
            if rise <= 0.0 {
                return w.s[i];
            }
            let frac = (target - w.values[i - 1]) / rise;
            return w.s[i - 1] + frac * (w.s[i] - w.s[i - 1]);
        }
    }
    *w.s.last().unwrap()
}

/// Front position of every snapshot. Empty trajectories give empty traces.
pub fn front_trace(traj: &Trajectory, tau: f64, run_id: &str) -> FrontTrace {
    let inv_n = 1.0 / traj.p.n as f64;
    let entries: Vec<FrontEntry> = traj
        .snapshots
        .iter()
        .map(|(t, snap)| {
            let s_front = front_position(snap, tau);
            let r_front = if traj.p.n == 1 {
                s_front
            } else {
                s_front.powf(inv_n)
            };
            FrontEntry {
                t: *t,
                s_front,
                r_front,
            }
        })
        .collect();
    let ds = traj
        .snapshots
        .first()
        .map(|(_, snap)| snap.ds())
        .unwrap_or(0.0);
    FrontTrace {
        entries,
        tau,
        ds,
        run_id: run_id.to_string(),
    }
}

/// Least-squares fit of r_front over [t_a, t_b]. A verdict other than
/// Inconclusive additionally needs the front to have moved at least
/// min_cells grid cells in s over the window.
pub fn estimate_speed(
    trace: &FrontTrace,
    window: (f64, f64),
    min_cells: f64,
) -> Result<FrontVerdict> {
    let (t_a, t_b) = window;
    if !(t_a < t_b) {
        return Err(Error::domain(format!(
            "fit window must be nonempty, got [{t_a}, {t_b}]"
        )));
    }
    let used: Vec<&FrontEntry> = trace
        .entries
        .iter()
        .filter(|e| e.t >= t_a && e.t <= t_b)
        .collect();
    if used.len() < 4 {
        return Err(Error::domain(format!(
            "speed fit needs at least 4 trace entries in the window, found {}",
            used.len()
        )));
    }
    let count = used.len() as f64;
    let t_mean = used.iter().map(|e| e.t).sum::<f64>() / count;
    let r_mean = used.iter().map(|e| e.r_front).sum::<f64>() / count;
    let mut cov = 0.0;
    let mut var = 0.0;
    for e in &used {
        cov += (e.t - t_mean) * (e.r_front - r_mean);
        var += (e.t - t_mean) * (e.t - t_mean);
    }
    if var == 0.0 {
        return Err(Error::domain("speed fit needs distinct entry times"));
    }
    let slope = cov / var;
    let intercept = r_mean - slope * t_mean;
    let ss = used
        .iter()
        .map(|e| {
            let d = e.r_front - (intercept + slope * e.t);
            d * d
        })
        .sum::<f64>();
    let fit_residual = (ss / count).sqrt();
    let displacement = (used.last().unwrap().s_front - used[0].s_front).abs();
    let displacement_cells = if trace.ds > 0.0 {
        displacement / trace.ds
    } else {
        0.0
    };
    let moved = displacement_cells >= min_cells;
    let classification = if moved && slope < 0.0 {
        Classification::Shrinking
    } else if moved && slope > 0.0 {
        Classification::Expanding
    } else {
        Classification::Inconclusive
    };
    let zeta = if classification == Classification::Inconclusive {
        0.0
    } else {
        slope.abs()
    };
    let monotone_until = monotone_extent(trace, used[0], slope);
    Ok(FrontVerdict {
        classification,
        zeta,
        slope,
        window,
        fit_residual,
        displacement_cells,
        entries_used: used.len(),
        monotone_until,
    })
}

/// Scans forward from `start` and reports the last time before the front
/// backtracks against the fitted direction by more than one grid cell.
fn monotone_extent(trace: &FrontTrace, start: &FrontEntry, slope: f64) -> f64 {
    let mut until = start.t;
    let mut prev = start.s_front;
    for e in trace.entries.iter().filter(|e| e.t > start.t) {
        let change = e.s_front - prev;
        if (slope < 0.0 && change > trace.ds) || (slope >= 0.0 && change < -trace.ds) {
            break;
        }
        until = e.t;
        prev = e.s_front;
    }
    until
}

#[derive(Clone, Copy, Debug)]
pub struct EnvelopeReport {
    pub pass: bool,
    /// Discretization allowance, 3 ds times the steepest observed slope.
    pub tol: f64,
    pub max_slope: f64,
    pub worst_violation: f64,
    pub worst_s: f64,
    pub worst_t: f64,
    pub nodes_checked: usize,
    pub snapshots_checked: usize,
    /// Last snapshot time at which the region's inflow edge was still
    /// ordered against the envelope.
    pub ordered_until: f64,
}

/// Nodewise comparison of trajectory snapshots against a limit envelope on
/// [s_lo, s_hi] x [0, t_hi]. Lower means the envelope must stay below the
/// run, upper the reverse; either way violations beyond the discretization
/// allowance fail the check.
///
/// Comparison against a certificate family is only claimed while the run
/// stays ordered on the lateral edge feeding the region, so the scan stops
/// at the first snapshot whose s_lo node breaks that ordering; the reported
/// window end is `ordered_until`. Interior violations inside the window
/// still fail the check.
pub fn envelope_check(
    traj: &Trajectory,
    env: &EnvelopeSpec,
    side: BoundSide,
    s_lo: f64,
    s_hi: f64,
    t_hi: f64,
) -> EnvelopeReport {
    let slop = 1e-12 * t_hi.abs().max(1.0);
    let snaps: Vec<&(f64, GridFunction)> = traj
        .snapshots
        .iter()
        .filter(|(t, _)| *t <= t_hi + slop)
        .collect();
    let mut max_slope = 0.0f64;
    for (_, snap) in &snaps {
        let ds = snap.ds();
        for i in 0..snap.values.len() - 1 {
            max_slope = max_slope.max((snap.values[i + 1] - snap.values[i]) / ds);
        }
    }
    let ds = snaps.first().map(|(_, snap)| snap.ds()).unwrap_or(0.0);
    let tol = 3.0 * ds * max_slope;
    let violation_at = |snap: &GridFunction, i: usize, t: f64| {
        let bound = env.value(&traj.p, traj.mu, snap.s[i], t);
        match side {
            BoundSide::Lower => bound - snap.values[i],
            BoundSide::Upper => snap.values[i] - bound,
        }
    };
    let mut worst_violation = f64::NEG_INFINITY;
    let mut worst_s = f64::NAN;
    let mut worst_t = f64::NAN;
    let mut nodes_checked = 0usize;
    let mut snapshots_checked = 0usize;
    let mut ordered_until = f64::NAN;
    for (t, snap) in &snaps {
        let edge = snap.s.iter().position(|&s| s >= s_lo);
        if let Some(i) = edge {
            if snap.s[i] <= s_hi {
                let v = violation_at(snap, i, *t);
                if v > tol {
                    // An edge never ordered at all is a failure, not an
                    // expired window; keep the offending node as witness.
                    if snapshots_checked == 0 {
                        worst_violation = v;
                        worst_s = snap.s[i];
                        worst_t = *t;
                    }
                    break;
                }
            }
        }
        snapshots_checked += 1;
        ordered_until = *t;
        for (i, &s) in snap.s.iter().enumerate() {
            if s < s_lo || s > s_hi {
                continue;
            }
            nodes_checked += 1;
            let violation = violation_at(snap, i, *t);
            if violation > worst_violation {
                worst_violation = violation;
                worst_s = s;
                worst_t = *t;
            }
        }
    }
    if nodes_checked == 0 && worst_violation == f64::NEG_INFINITY {
        worst_violation = f64::INFINITY;
    }
    EnvelopeReport {
        pass: worst_violation <= tol,
        tol,
        max_slope,
        worst_violation,
        worst_s,
        worst_t,
        nodes_checked,
        snapshots_checked,
        ordered_until,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comparison::FamilyKind;
    use crate::model::ModelParams;
    use crate::profiles::uniform_grid;
    use crate::solver::{StepStats, Trajectory};
    use proptest::prelude::*;

    fn grid_fn(p: &ModelParams, n_cells: usize, f: impl Fn(f64) -> f64) -> GridFunction {
        let s = uniform_grid(p, n_cells);
        let mut values: Vec<f64> = s.iter().map(|&x| f(x)).collect();
        let last = values.len() - 1;
        values[0] = 0.0;
        let mu_rn = values[last];
        GridFunction::new(s, values, mu_rn).unwrap()
    }

    fn hand_trajectory(p: &ModelParams, mu: f64, snaps: Vec<(f64, GridFunction)>) -> Trajectory {
        Trajectory {
            p: p.clone(),
            mu,
            eps: 1e-3,
            taxis: true,
            safety: 0.4,
            snapshots: snaps,
            stats: StepStats::default(),
        }
    }

    #[test]
    fn interpolates_the_saturation_band() {
        let s = vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        let w = GridFunction::new(s, vec![0.0, 0.5, 0.96, 1.0], 1.0).unwrap();
        let got = front_position(&w, 0.05);
        assert!((got - 0.6594202898550725).abs() <= 1e-15);

        // Linear profile: the band opens exactly at R^n (1 - tau).
        let p = ModelParams::new(1, 1.0, 2.0).unwrap();
        let lin = grid_fn(&p, 64, |x| x);
        for tau in [0.5, 1e-2, 1e-6] {
            assert!((front_position(&lin, tau) - (1.0 - tau)).abs() <= 1e-14);
        }
    }

    #[test]
    fn recovers_the_exact_saturation_point_as_the_band_narrows() {
        let p = ModelParams::new(1, 1.0, 2.0).unwrap();
        let (c, r1n) = (0.4, 0.25);
        let w = grid_fn(&p, 512, |x| {
            let d: f64 = r1n - x;
            1.0 - c * d.max(0.0).powi(2)
        });
        let ds = w.ds();
        let mut prev = 0.0;
        for tau in [1e-4, 1e-6, 1e-8, 1e-10] {
            let pos = front_position(&w, tau);
            // The band opens at depth sqrt(tau / c) below the edge.
            let crossing = r1n - (tau / c).sqrt();
            assert!((pos - crossing).abs() <= ds + 1e-12);
            assert!(pos <= r1n + 1e-12);
            assert!(pos >= prev);
            prev = pos;
        }
        assert!((prev - r1n).abs() <= 1e-4);
    }

    proptest! {
        #[test]
        fn front_position_is_nonincreasing_in_tau(
            incs in proptest::collection::vec(0.0f64..1.0, 8..60),
            tau1 in 1e-9f64..0.5,
            ratio in 1.0f64..100.0,
        ) {
            let mut values = vec![0.0];
            for inc in &incs {
                values.push(values.last().unwrap() + inc);
            }
            let last = *values.last().unwrap();
            prop_assume!(last > 0.0);
            let n = values.len();
            let s: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
            let w = GridFunction::new(s, values, last).unwrap();
            let tau2 = (tau1 * ratio).min(0.999);
            let (lo, hi) = (front_position(&w, tau2), front_position(&w, tau1));
            prop_assert!(lo <= hi + 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&lo));
        }
    }

    #[test]
    fn traces_keep_roots_consistent_and_times_ordered() {
        let p = ModelParams::new(3, 1.2, 2.5).unwrap();
        let mu = 0.8;
        let snaps: Vec<(f64, GridFunction)> = (0..6)
            .map(|k| {
                (
                    0.01 * k as f64,
                    grid_fn(&p, 128, |x| mu * x),
                )
            })
            .collect();
        let traj = hand_trajectory(&p, mu, snaps);
        let trace = front_trace(&traj, 1e-6, "steady");
        assert_eq!(trace.entries.len(), 6);
        for pair in trace.entries.windows(2) {
            assert!(pair[1].t > pair[0].t);
            // Constant trajectory, constant trace.
            assert_eq!(pair[1].s_front, pair[0].s_front);
        }
        for e in &trace.entries {
            let back = e.r_front.powi(3);
            assert!((back - e.s_front).abs() <= 1e-12 * e.s_front.max(1.0));
        }
        let empty = hand_trajectory(&p, mu, vec![]);
        assert!(front_trace(&empty, 1e-6, "none").entries.is_empty());
    }

    fn synthetic_trace(r1n: f64, theta: f64, n: u32, count: usize, t_max: f64) -> FrontTrace {
        let entries: Vec<FrontEntry> = (0..count)
            .map(|k| {
                let t = t_max * k as f64 / (count - 1) as f64;
                let s_front = r1n - theta * t;
                FrontEntry {
                    t,
                    s_front,
                    r_front: s_front.powf(1.0 / n as f64),
                }
            })
            .collect();
        FrontTrace {
            entries,
            tau: 1e-6,
            ds: 1.0 / 2048.0,
            run_id: "synthetic".into(),
        }
    }

    #[test]
    fn fitted_speed_matches_the_synthetic_front() {
        let trace = synthetic_trace(0.25, 0.01, 2, 51, 1.0);
        let verdict = estimate_speed(&trace, (0.1, 0.6), 3.0).unwrap();
        assert_eq!(verdict.classification, Classification::Shrinking);
        // d/dt sqrt(0.25 - 0.01 t) near t = 0 is -0.01.
        assert!((verdict.slope + 0.01).abs() <= 1e-4, "slope {}", verdict.slope);
        assert_eq!(verdict.zeta, verdict.slope.abs());
        assert!(verdict.fit_residual <= 1e-5);
        assert!(verdict.displacement_cells >= 3.0);
        assert!(verdict.monotone_until >= 0.99);

        let expanding = synthetic_trace(0.25, -0.01, 2, 51, 1.0);
        let v2 = estimate_speed(&expanding, (0.1, 0.6), 3.0).unwrap();
        assert_eq!(v2.classification, Classification::Expanding);
        assert!(v2.zeta > 0.0);
    }

    #[test]
    fn flat_and_sub_cell_traces_are_inconclusive() {
        let flat = synthetic_trace(0.25, 0.0, 2, 20, 1.0);
        let v = estimate_speed(&flat, (0.0, 1.0), 3.0).unwrap();
        assert_eq!(v.classification, Classification::Inconclusive);
        assert_eq!(v.zeta, 0.0);

        // Clear negative slope, but total drift under one coarse cell.
        let mut drifting = synthetic_trace(0.25, 1e-4, 2, 20, 1.0);
        drifting.ds = 0.05;
        let v = estimate_speed(&drifting, (0.0, 1.0), 3.0).unwrap();
        assert_eq!(v.classification, Classification::Inconclusive);
        assert_eq!(v.zeta, 0.0);
        assert!(v.slope < 0.0);
        assert!(v.displacement_cells < 3.0);
    }

    #[test]
    fn sparse_windows_are_rejected() {
        let trace = synthetic_trace(0.25, 0.01, 2, 10, 1.0);
        assert!(estimate_speed(&trace, (0.0, 0.2), 3.0).is_err());
        assert!(estimate_speed(&trace, (0.5, 0.1), 3.0).is_err());
        let empty = FrontTrace {
            entries: vec![],
            tau: 1e-6,
            ds: 0.01,
            run_id: "empty".into(),
        };
        assert!(estimate_speed(&empty, (0.0, 1.0), 3.0).is_err());
    }

    #[test]
    fn saturated_region_passes_a_lower_envelope() {
        let p = ModelParams::new(1, 1.0, 2.0).unwrap();
        let snaps: Vec<(f64, GridFunction)> = (0..4)
            .map(|k| {
                (
                    0.1 * k as f64,
                    grid_fn(&p, 256, |x| (x / 0.1).min(1.0)),
                )
            })
            .collect();
        let traj = hand_trajectory(&p, 1.0, snaps);
        let env = EnvelopeSpec {
            kind: FamilyKind::Subsolution,
            coef: 0.3,
            r1: 0.5,
            theta: 0.01,
        };
        let report = envelope_check(&traj, &env, BoundSide::Lower, 0.2, 1.0, 0.3);
        assert!(report.pass, "violation {}", report.worst_violation);
        assert!(report.nodes_checked > 0);
        assert_eq!(report.snapshots_checked, 4);
    }

    #[test]
    fn mis_ordered_envelope_fails_with_a_witness() {
        let p = ModelParams::new(1, 1.0, 2.0).unwrap();
        let snaps = vec![(0.0, grid_fn(&p, 256, |x| x))];
        let traj = hand_trajectory(&p, 1.0, snaps);
        // A lower envelope saturating at r1^n = 0.64 sits far above the
        // linear profile there.
        let env = EnvelopeSpec {
            kind: FamilyKind::Subsolution,
            coef: 0.3,
            r1: 0.8,
            theta: 0.0,
        };
        let report = envelope_check(&traj, &env, BoundSide::Lower, 0.0, 1.0, 1.0);
        assert!(!report.pass);
        // Deficit 1 - 0.3 (0.64 - s)^2 - s grows toward the origin.
        assert!(report.worst_violation > 0.8);
        assert_eq!(report.worst_s, 0.0);
        assert_eq!(report.worst_t, 0.0);
        // The same run seen as an upper bound is fine: w = mu s stays under
        // any envelope capped at mu R^n only where the envelope saturates.
        let sup = EnvelopeSpec {
            kind: FamilyKind::Supersolution,
            coef: 0.3,
            r1: 0.9,
            theta: 0.0,
        };
        let up = envelope_check(&traj, &sup, BoundSide::Upper, 0.81, 1.0, 1.0);
        assert!(up.pass);
    }

    #[test]
    fn envelope_check_with_nothing_to_compare_fails_loudly() {
        let p = ModelParams::new(1, 1.0, 2.0).unwrap();
        let traj = hand_trajectory(&p, 1.0, vec![]);
        let env = EnvelopeSpec {
            kind: FamilyKind::Subsolution,
            coef: 0.3,
            r1: 0.5,
            theta: 0.0,
        };
        // An empty trajectory certifies nothing; a vacuous pass here would
        // let a misconfigured region masquerade as a verified comparison.
        let report = envelope_check(&traj, &env, BoundSide::Lower, 0.0, 1.0, 1.0);
        assert!(!report.pass);
        assert_eq!(report.nodes_checked, 0);
        assert!(report.worst_violation.is_infinite());
    }
}
