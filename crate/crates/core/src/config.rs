//! Run configuration: a small TOML dialect with [model], [profile],
//! [numerics], [experiment] and [output] blocks. Everything downstream
//! receives the resolved form, never the raw file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{a_crit, c_crit, MassData, ModelParams};
use crate::profiles::{borderline_alpha, calibrate_plateau, make_profile};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Sweep,
    Verify,
    Baseline,
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simulate" => Ok(Mode::Simulate),
            "sweep" => Ok(Mode::Sweep),
            "verify" => Ok(Mode::Verify),
            "baseline" => Ok(Mode::Baseline),
            other => Err(Error::config(format!(
                "unknown mode {other:?}; expected simulate, sweep, verify or baseline"
            ))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Simulate => "simulate",
            Mode::Sweep => "sweep",
            Mode::Verify => "verify",
            Mode::Baseline => "baseline",
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    profile: RawProfile,
    numerics: RawNumerics,
    #[serde(default)]
    experiment: RawExperiment,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    n: u32,
    r_domain: f64,
    m: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    r_plateau: Option<f64>,
    r0: Option<f64>,
    r1: Option<f64>,
    alpha: Option<f64>,
    a_ratio: Option<f64>,
    a_coef: Option<f64>,
    target_mass: Option<f64>,
    plateau: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    grid_cells: usize,
    eps: Vec<f64>,
    safety: Option<f64>,
    horizon: f64,
    snapshots: Option<usize>,
    output_times: Option<Vec<f64>>,
    tau: Option<Vec<f64>>,
    tau_verdict: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    mode: Option<String>,
    sweep_ratios: Option<Vec<f64>>,
    fit_window: Option<[f64; 2]>,
    min_cells: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
    gnuplot: Option<bool>,
}

/// Fully resolved configuration; every field has been validated against the
/// preconditions of the module that will consume it.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub p: ModelParams,
    pub md: MassData,
    pub r_plateau: f64,
    pub r0: f64,
    pub r1: f64,
    pub alpha: f64,
    /// Tail coefficient actually used.
    pub a_coef: f64,
    /// a_coef / A_crit(r1), derived when a_coef was given directly.
    pub a_ratio: f64,
    pub plateau: f64,
    pub a_crit: f64,
    pub c_crit_r1: f64,
    pub grid_cells: usize,
    pub eps: Vec<f64>,
    pub safety: f64,
    pub horizon: f64,
    pub output_times: Vec<f64>,
    pub tau: Vec<f64>,
    /// Band used for the single verdict row per run.
    pub tau_verdict: f64,
    pub mode: Option<Mode>,
    pub sweep_ratios: Vec<f64>,
    /// Fractions of the horizon bounding the speed fit.
    pub fit_window: (f64, f64),
    pub min_cells: f64,
    pub out_dir: PathBuf,
    pub gnuplot: bool,
    /// Tail omitted entirely: density fills the ball at the mean level and
    /// the radii fields are NaN placeholders.
    pub constant: bool,
}

impl RunConfig {
    pub fn smallest_eps(&self) -> f64 {
        self.eps.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn fit_times(&self) -> (f64, f64) {
        (
            self.fit_window.0 * self.horizon,
            self.fit_window.1 * self.horizon,
        )
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let raw: RawConfig = toml::from_str(&text)
        .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    resolve(raw)
}

pub fn load_config_str(text: &str) -> Result<RunConfig> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
    resolve(raw)
}

struct ProfilePart {
    md: MassData,
    r_plateau: f64,
    r0: f64,
    r1: f64,
    alpha: f64,
    a_coef: f64,
    a_ratio: f64,
    plateau: f64,
    a_crit: f64,
    c_crit_r1: f64,
    constant: bool,
}

fn resolve_profile(p: &ModelParams, pr: RawProfile, mode: Option<Mode>) -> Result<ProfilePart> {
    match (pr.target_mass, pr.plateau) {
        (Some(_), Some(_)) => {
            return Err(Error::config(
                "[profile] target_mass and plateau are mutually exclusive",
            ))
        }
        (None, None) => {
            return Err(Error::config(
                "[profile] one of target_mass or plateau is required",
            ))
        }
        _ => {}
    }

    // No tail at all: the density fills the whole ball at its mean level.
    if pr.a_ratio.is_none() && pr.a_coef.is_none() {
        if pr.r_plateau.is_some() || pr.r0.is_some() || pr.r1.is_some() || pr.alpha.is_some() {
            return Err(Error::config(
                "[profile] tail radii given without a_ratio or a_coef; \
                 give a tail coefficient or omit the radii for constant density",
            ));
        }
        if mode == Some(Mode::Sweep) {
            return Err(Error::config(
                "[experiment] sweep scales the tail coefficient; a constant \
                 profile has none",
            ));
        }
        let md = match (pr.target_mass, pr.plateau) {
            (Some(mass), None) => {
                MassData::new(p, mass).map_err(|e| Error::config(format!("[profile] {e}")))?
            }
            (None, Some(level)) => {
                MassData::from_mu(p, level).map_err(|e| Error::config(format!("[profile] {e}")))?
            }
            _ => unreachable!(),
        };
        return Ok(ProfilePart {
            plateau: md.mu,
            md,
            r_plateau: f64::NAN,
            r0: f64::NAN,
            r1: f64::NAN,
            alpha: f64::NAN,
            a_coef: f64::NAN,
            a_ratio: f64::NAN,
            a_crit: f64::NAN,
            c_crit_r1: f64::NAN,
            constant: true,
        });
    }

    let (Some(r0), Some(r1)) = (pr.r0, pr.r1) else {
        return Err(Error::config("[profile] r0 and r1 are required with a tail"));
    };
    let r_plateau = pr.r_plateau.unwrap_or(r0);
    let alpha = pr.alpha.unwrap_or_else(|| borderline_alpha(p));
    if !(0.0 < r_plateau && r_plateau <= r0 && r0 < r1 && r1 < p.r_domain) {
        return Err(Error::config(format!(
            "[profile] radii must satisfy 0 < r_plateau <= r0 < r1 < R, got \
             r_plateau = {r_plateau}, r0 = {r0}, r1 = {r1}, R = {}",
            p.r_domain
        )));
    }
    if !(alpha > 0.0) {
        return Err(Error::config(format!(
            "[profile] alpha must be positive, got {alpha}"
        )));
    }
    if pr.a_ratio.is_some() && pr.a_coef.is_some() {
        return Err(Error::config(
            "[profile] a_ratio and a_coef are mutually exclusive",
        ));
    }

    // Resolve mass, tail coefficient and plateau height. A relative tail
    // coefficient needs A_crit, which needs the mass, so a_ratio is only
    // meaningful together with target_mass.
    let (md, a_coef, plateau);
    match pr.target_mass {
        Some(mass) => {
            md = MassData::new(p, mass).map_err(|e| Error::config(format!("[profile] {e}")))?;
            let crit = a_crit(p, &md, r1).map_err(|e| Error::config(format!("[profile] {e}")))?;
            a_coef = match (pr.a_ratio, pr.a_coef) {
                (Some(ratio), None) => {
                    if !(ratio >= 0.0) || !ratio.is_finite() {
                        return Err(Error::config(format!(
                            "[profile] a_ratio must be a finite nonnegative number, got {ratio}"
                        )));
                    }
                    ratio * crit
                }
                (None, Some(a)) => a,
                _ => unreachable!(),
            };
            // Sweep rows recalibrate per ratio and tolerate infeasible rows;
            // for single runs an infeasible base profile is fatal here.
            match calibrate_plateau(p, mass, a_coef, alpha, r_plateau, r0, r1) {
                Ok(b) => plateau = b,
                Err(_) if mode == Some(Mode::Sweep) => plateau = f64::NAN,
                Err(e) => return Err(Error::config(format!("[profile] {e}"))),
            }
        }
        None => {
            if pr.a_ratio.is_some() {
                return Err(Error::config(
                    "[profile] a_ratio requires target_mass; use a_coef with plateau",
                ));
            }
            a_coef = pr.a_coef.unwrap();
            plateau = pr.plateau.unwrap();
            let profile = make_profile(p, plateau, r_plateau, a_coef, alpha, r0, r1)
                .map_err(|e| Error::config(format!("[profile] {e}")))?;
            let mass = crate::profiles::mass(p, &profile);
            md = MassData::new(p, mass).map_err(|e| Error::config(format!("[profile] {e}")))?;
        }
    }
    let crit = a_crit(p, &md, r1).map_err(|e| Error::config(format!("[profile] {e}")))?;
    let a_ratio = if crit > 0.0 { a_coef / crit } else { f64::INFINITY };
    let c_crit_r1 = c_crit(p, md.mu, r1).map_err(|e| Error::config(format!("[profile] {e}")))?;
    Ok(ProfilePart {
        md,
        r_plateau,
        r0,
        r1,
        alpha,
        a_coef,
        a_ratio,
        plateau,
        a_crit: crit,
        c_crit_r1,
        constant: false,
    })
}

fn resolve(raw: RawConfig) -> Result<RunConfig> {
    let p = ModelParams::new(raw.model.n, raw.model.r_domain, raw.model.m)
        .map_err(|e| Error::config(format!("[model] {e}")))?;

    let mode = raw
        .experiment
        .mode
        .as_deref()
        .map(Mode::from_str)
        .transpose()?;

    let target_mass_given = raw.profile.target_mass.is_some();
    let prof = resolve_profile(&p, raw.profile, mode)?;

    let nm = raw.numerics;
    if nm.grid_cells < 16 {
        return Err(Error::config(format!(
            "[numerics] grid_cells must be at least 16, got {}",
            nm.grid_cells
        )));
    }
    if nm.eps.is_empty() || nm.eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::config(
            "[numerics] eps must be a nonempty list of values in (0,1)",
        ));
    }
    let safety = nm.safety.unwrap_or(0.4);
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::config(format!(
            "[numerics] safety must lie in (0,1], got {safety}"
        )));
    }
    let horizon = nm.horizon;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::config(format!(
            "[numerics] horizon must be positive, got {horizon}"
        )));
    }
    let output_times = match (nm.output_times, nm.snapshots) {
        (Some(_), Some(_)) => {
            return Err(Error::config(
                "[numerics] output_times and snapshots are mutually exclusive",
            ))
        }
        (Some(times), None) => {
            if times.windows(2).any(|w| w[1] <= w[0])
                || times.iter().any(|&t| t < 0.0 || t > horizon)
                || times.len() < 2
            {
                return Err(Error::config(
                    "[numerics] output_times must be at least two increasing values in [0, horizon]",
                ));
            }
            times
        }
        (None, count) => {
            let count = count.unwrap_or(33);
            if count < 2 {
                return Err(Error::config(format!(
                    "[numerics] snapshots must be at least 2, got {count}"
                )));
            }
            (0..count)
                .map(|k| horizon * k as f64 / (count - 1) as f64)
                .collect()
        }
    };
    let tau = nm.tau.unwrap_or_else(|| vec![1e-5, 1e-6, 1e-7]);
    if tau.is_empty() || tau.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::config(
            "[numerics] tau must be a nonempty list of values in (0,1)",
        ));
    }
    let tau_verdict = nm.tau_verdict.unwrap_or(1e-6);
    if !(tau_verdict > 0.0 && tau_verdict < 1.0) {
        return Err(Error::config(format!(
            "[numerics] tau_verdict must lie in (0,1), got {tau_verdict}"
        )));
    }

    let ex = raw.experiment;
    let sweep_ratios = ex.sweep_ratios.unwrap_or_default();
    if sweep_ratios
        .iter()
        .any(|&r| !(r > 0.0) || !r.is_finite())
    {
        return Err(Error::config(
            "[experiment] sweep_ratios must be positive numbers",
        ));
    }
    if mode == Some(Mode::Sweep) {
        if sweep_ratios.is_empty() {
            return Err(Error::config(
                "[experiment] sweep mode needs a sweep_ratios list",
            ));
        }
        let (lo, hi) = sweep_ratios
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
        if !(lo < 1.0 && hi > 1.0) {
            return Err(Error::config(
                "[experiment] sweep_ratios must straddle the critical ratio 1",
            ));
        }
        if !target_mass_given {
            return Err(Error::config(
                "[experiment] sweep mode holds mass fixed and needs target_mass",
            ));
        }
    }
    let [f_lo, f_hi] = ex.fit_window.unwrap_or([0.1, 0.6]);
    if !(0.0 <= f_lo && f_lo < f_hi && f_hi <= 1.0) {
        return Err(Error::config(format!(
            "[experiment] fit_window fractions must satisfy 0 <= lo < hi <= 1, got [{f_lo}, {f_hi}]"
        )));
    }
    let min_cells = ex.min_cells.unwrap_or(3.0);
    if !(min_cells >= 0.0) {
        return Err(Error::config(format!(
            "[experiment] min_cells must be nonnegative, got {min_cells}"
        )));
    }

    Ok(RunConfig {
        p,
        md: prof.md,
        r_plateau: prof.r_plateau,
        r0: prof.r0,
        r1: prof.r1,
        alpha: prof.alpha,
        a_coef: prof.a_coef,
        a_ratio: prof.a_ratio,
        plateau: prof.plateau,
        a_crit: prof.a_crit,
        c_crit_r1: prof.c_crit_r1,
        grid_cells: nm.grid_cells,
        eps: nm.eps,
        safety,
        horizon,
        output_times,
        tau,
        tau_verdict,
        mode,
        sweep_ratios,
        fit_window: (f_lo, f_hi),
        min_cells,
        out_dir: PathBuf::from(raw.output.dir.unwrap_or_else(|| "out".into())),
        gnuplot: raw.output.gnuplot.unwrap_or(true),
        constant: prof.constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        [model]
        n = 1
        r_domain = 1.0
        m = 2.0

        [profile]
        r0 = 0.3
        r1 = 0.5
        alpha = 1.0
        a_ratio = 0.5
        target_mass = 2.0

        [numerics]
        grid_cells = 128
        eps = [1e-2, 1e-3]
        horizon = 0.01
    "#;

    #[test]
    fn resolves_the_relative_tail_coefficient() {
        let cfg = load_config_str(BASE).unwrap();
        assert!((cfg.a_crit - 0.5).abs() <= 1e-15);
        assert!((cfg.a_coef - 0.25).abs() <= 1e-15);
        assert!((cfg.c_crit_r1 - 0.25).abs() <= 1e-15);
        assert!((cfg.md.mu - 1.0).abs() <= 1e-15);
        assert!(cfg.plateau > 0.0);
        assert_eq!(cfg.r_plateau, 0.3);
        assert_eq!(cfg.output_times.len(), 33);
        assert_eq!(cfg.output_times[0], 0.0);
        assert_eq!(*cfg.output_times.last().unwrap(), 0.01);
        assert_eq!(cfg.tau, vec![1e-5, 1e-6, 1e-7]);
        assert_eq!(cfg.fit_window, (0.1, 0.6));
        assert_eq!(cfg.safety, 0.4);
        assert_eq!(cfg.min_cells, 3.0);
        assert!(cfg.gnuplot);
        assert_eq!(cfg.smallest_eps(), 1e-3);
        assert_eq!(cfg.mode, None);
    }

    #[test]
    fn rejects_conflicting_or_missing_tail_settings() {
        let both = BASE.replace("a_ratio = 0.5", "a_ratio = 0.5\n        a_coef = 0.2");
        assert!(load_config_str(&both).is_err());
        let neither = BASE.replace("a_ratio = 0.5", "");
        assert!(load_config_str(&neither).is_err());
        let ratio_no_mass = BASE
            .replace("target_mass = 2.0", "plateau = 3.0");
        assert!(load_config_str(&ratio_no_mass).is_err());
        let both_mass = BASE.replace("target_mass = 2.0", "target_mass = 2.0\n        plateau = 3.0");
        assert!(load_config_str(&both_mass).is_err());
    }

    #[test]
    fn plateau_given_derives_the_mass() {
        let text = BASE
            .replace("a_ratio = 0.5", "a_coef = 0.25")
            .replace("target_mass = 2.0", "plateau = 3.31666666666666666");
        let cfg = load_config_str(&text).unwrap();
        assert!((cfg.md.total_mass - 2.0).abs() <= 1e-12);
        assert!((cfg.a_ratio - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_numerics() {
        let typo = BASE.replace("grid_cells = 128", "grid_cellz = 128");
        assert!(load_config_str(&typo).is_err());
        let bad_eps = BASE.replace("eps = [1e-2, 1e-3]", "eps = [1.5]");
        assert!(load_config_str(&bad_eps).is_err());
        let empty_eps = BASE.replace("eps = [1e-2, 1e-3]", "eps = []");
        assert!(load_config_str(&empty_eps).is_err());
        let bad_radii = BASE.replace("r1 = 0.5", "r1 = 0.2");
        assert!(load_config_str(&bad_radii).is_err());
        let bad_window = format!("{BASE}\n        [experiment]\n        fit_window = [0.7, 0.2]");
        assert!(load_config_str(&bad_window).is_err());
        let bad_mode = format!("{BASE}\n        [experiment]\n        mode = \"explode\"");
        assert!(load_config_str(&bad_mode).is_err());
    }

    #[test]
    fn sweep_mode_needs_ratios_straddling_one() {
        let no_ratios = format!("{BASE}\n        [experiment]\n        mode = \"sweep\"");
        assert!(load_config_str(&no_ratios).is_err());
        let one_sided = format!(
            "{BASE}\n        [experiment]\n        mode = \"sweep\"\n        sweep_ratios = [0.25, 0.5]"
        );
        assert!(load_config_str(&one_sided).is_err());
        let good = format!(
            "{BASE}\n        [experiment]\n        mode = \"sweep\"\n        sweep_ratios = [0.5, 2.0]"
        );
        let cfg = load_config_str(&good).unwrap();
        assert_eq!(cfg.mode, Some(Mode::Sweep));
        assert_eq!(cfg.sweep_ratios, vec![0.5, 2.0]);
    }

    #[test]
    fn omitted_tail_means_constant_density() {
        let text = r#"
            [model]
            n = 2
            r_domain = 1.0
            m = 3.0

            [profile]
            target_mass = 3.141592653589793

            [numerics]
            grid_cells = 64
            eps = [1e-3]
            horizon = 0.01
        "#;
        let cfg = load_config_str(text).unwrap();
        assert!(cfg.constant);
        assert!((cfg.md.mu - 1.0).abs() <= 1e-15);
        assert!((cfg.plateau - 1.0).abs() <= 1e-15);
        assert!(cfg.r1.is_nan() && cfg.a_crit.is_nan());

        let level = text.replace("target_mass = 3.141592653589793", "plateau = 2.0");
        let cfg = load_config_str(&level).unwrap();
        assert!((cfg.md.mu - 2.0).abs() <= 1e-15);

        let partial = text.replace("target_mass = 3.141592653589793", "target_mass = 1.0\n            r1 = 0.5");
        assert!(load_config_str(&partial).is_err());
        let swept = format!("{text}\n            [experiment]\n            mode = \"sweep\"\n            sweep_ratios = [0.5, 2.0]");
        assert!(load_config_str(&swept).is_err());
    }

    #[test]
    fn explicit_output_times_are_validated() {
        let good = BASE.replace(
            "horizon = 0.01",
            "horizon = 0.01\n        output_times = [0.0, 0.005, 0.01]",
        );
        let cfg = load_config_str(&good).unwrap();
        assert_eq!(cfg.output_times, vec![0.0, 0.005, 0.01]);
        let beyond = BASE.replace(
            "horizon = 0.01",
            "horizon = 0.01\n        output_times = [0.0, 0.02]",
        );
        assert!(load_config_str(&beyond).is_err());
        let conflict = BASE.replace(
            "horizon = 0.01",
            "horizon = 0.01\n        output_times = [0.0, 0.01]\n        snapshots = 5",
        );
        assert!(load_config_str(&conflict).is_err());
    }
}
