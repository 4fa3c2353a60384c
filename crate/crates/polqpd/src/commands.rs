//! Command implementations. Each returns the files it would write; nothing
//! touches the disk until the caller writes them all at the end.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use polqpd_core::charfn::{
    chi_highlighted_asymptotic, chi_highlighted_exact, chi_lp, chi_two_mode_coherent, smooth_char,
    CharPoint, HighlightedState, Inefficiency,
};
use polqpd_core::grid::{Axis, CoordinateSystem, QpdGrid};
use polqpd_core::measure::{
    count_pmf, sample_setting, CountSource, SamplingPlan, Tomogram, WaveplateSetting,
};
use polqpd_core::numerics::QuadratureSpec;
use polqpd_core::pqpd::{
    marginal_w23_lp, negativity_condition, negativity_volume, negativity_volume_grid,
    smoothed_pqpd_lp, w23_from_wigner_convolution, w23_highlighted_sqz0, w23_highlighted_sqz1, w_m,
    wigner, Coordinates, NegativitySource, StokesPoint, WignerGridSpec, WmRegularized,
};
use polqpd_core::reconstruct::{
    assemble_2d, assemble_3d, hermitize, invert_2d, invert_3d, AssemblySpec, FourierGrid, Ray,
};
use polqpd_core::states::{
    apply_loss, chi_s, lp_photon_probs, DetectorModel, LinearPolarizedState, SingleModeState,
};
use polqpd_core::Error as CoreError;

use crate::config::{CharFunction, Command, RunConfig, SettingsSpec, StateSpec, Surface};
use crate::error::{CliError, Result};
use crate::format::{grid_csv, grid_summary, read_tomogram, table_csv, tomogram_text, Output};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn sidecar(cfg: &RunConfig, command: Command, path: &Path, results: Value) -> Value {
    json!({
        "file": path.file_name().map(|f| f.to_string_lossy().into_owned()),
        "version": VERSION,
        "command": command,
        "config": cfg,
        "results": results,
    })
}

fn output(
    cfg: &RunConfig,
    command: Command,
    path: PathBuf,
    body: String,
    results: Value,
) -> Output {
    let sidecar = sidecar(cfg, command, &path, results);
    Output {
        path,
        body,
        sidecar,
    }
}

fn single_mode(spec: &StateSpec) -> Result<SingleModeState> {
    Ok(match *spec {
        StateSpec::Vacuum => SingleModeState::Vacuum,
        StateSpec::Fock { n } => SingleModeState::Fock(n),
        StateSpec::Coherent { alpha } => SingleModeState::Coherent(alpha),
        StateSpec::SqueezedVacuum { r } => SingleModeState::SqueezedVacuum(r),
        StateSpec::SqueezedFock1 { r } => SingleModeState::SqueezedFock1(r),
        StateSpec::Poissonian { .. } | StateSpec::Mixture { .. } => {
            return Err(CoreError::UnsupportedState(format!(
                "{spec:?} is not a pure single-mode state"
            ))
            .into())
        }
    })
}

/// Photon-number distribution before loss.
fn lp_lossless(spec: &StateSpec) -> Result<LinearPolarizedState> {
    Ok(match spec {
        StateSpec::Vacuum => LinearPolarizedState::vacuum(),
        StateSpec::Fock { n } => LinearPolarizedState::fock(*n),
        StateSpec::Coherent { alpha } => LinearPolarizedState::poissonian(alpha.norm_sqr(), None)?,
        StateSpec::Poissonian { mean, n_max } => LinearPolarizedState::poissonian(*mean, *n_max)?,
        StateSpec::Mixture { probs } => LinearPolarizedState::from_probs(probs.clone())?,
        StateSpec::SqueezedVacuum { .. } | StateSpec::SqueezedFock1 { .. } => {
            return Err(CoreError::UnsupportedState(format!(
                "{spec:?} has no photon-number description here; use the highlighted surfaces"
            ))
            .into())
        }
    })
}

/// Photon-number distribution reaching the detectors.
fn lp_detected(spec: &StateSpec, eta: f64) -> Result<LinearPolarizedState> {
    match spec {
        StateSpec::Poissonian { mean, n_max } => {
            Ok(LinearPolarizedState::poissonian(eta * mean, *n_max)?)
        }
        StateSpec::Mixture { probs } => {
            let parts: Vec<(f64, LinearPolarizedState)> = probs
                .iter()
                .enumerate()
                .map(|(n, p)| {
                    Ok((
                        *p,
                        lp_photon_probs(&SingleModeState::Fock(n as u32), eta, None)?,
                    ))
                })
                .collect::<Result<_>>()?;
            let refs: Vec<(f64, &LinearPolarizedState)> =
                parts.iter().map(|(p, s)| (*p, s)).collect();
            Ok(LinearPolarizedState::mixture(&refs)?)
        }
        other => Ok(lp_photon_probs(&single_mode(other)?, eta, None)?),
    }
}

fn detector(cfg: &RunConfig) -> Result<DetectorModel> {
    Ok(DetectorModel::new(cfg.detector.eta, cfg.detector.sigma)?)
}

fn alpha0_input(cfg: &RunConfig) -> Result<Complex64> {
    cfg.highlight
        .map(|h| h.alpha0)
        .ok_or_else(|| CliError::Config("this run needs a [highlight] section (alpha0)".into()))
}

/// Highlighting amplitude at the detectors.
fn alpha0_detected(cfg: &RunConfig) -> Result<Complex64> {
    Ok(alpha0_input(cfg)? * cfg.detector.eta.sqrt())
}

fn eps2(cfg: &RunConfig) -> Result<f64> {
    match cfg.pqpd.eps2 {
        Some(e) => Ok(e),
        None => Ok(Inefficiency::new(&detector(cfg)?, alpha0_detected(cfg)?)?.eps2()),
    }
}

fn count_source(cfg: &RunConfig) -> Result<CountSource> {
    match cfg.highlight {
        Some(h) => {
            let alpha = match cfg.state {
                StateSpec::Vacuum => Complex64::new(0.0, 0.0),
                StateSpec::Coherent { alpha } => alpha,
                ref other => {
                    return Err(CoreError::UnsupportedState(format!(
                        "highlighted counting needs a coherent or vacuum signal, got {other:?}"
                    ))
                    .into())
                }
            };
            Ok(CountSource::CoherentPair {
                alpha,
                alpha0: h.alpha0,
            })
        }
        None => Ok(CountSource::Linear(lp_lossless(&cfg.state)?)),
    }
}

fn grid_axis(cfg: &RunConfig) -> Result<Axis> {
    Ok(Axis::new(cfg.grid.min, cfg.grid.max, cfg.grid.count)?)
}

/// Evaluates `f` on every grid point, stopping at the first error.
fn fill_grid<F>(axes: Vec<Axis>, coords: CoordinateSystem, f: F) -> Result<QpdGrid>
where
    F: Fn(&[f64]) -> polqpd_core::Result<f64> + Sync,
{
    let total: usize = axes.iter().map(|a| a.count).product();
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let mut p = vec![0.0; axes.len()];
            for d in (0..axes.len()).rev() {
                p[d] = axes[d].coord(rem % axes[d].count);
                rem /= axes[d].count;
            }
            f(&p)
        })
        .collect::<polqpd_core::Result<_>>()?;
    let mut g = QpdGrid::from_fn(axes, coords, |_| 0.0);
    g.values = values;
    Ok(g)
}

pub fn cmd_charfn(cfg: &RunConfig, dir: &Path, stem: &str) -> Result<Vec<Output>> {
    let ax = grid_axis(cfg)?;
    let det = detector(cfg)?;
    let (eta, sigma, u1) = (det.eta(), det.sigma(), cfg.grid.slice);
    let spec = QuadratureSpec::gauss_hermite(cfg.charfn.tolerance);
    let transverse_only = |name: &str| -> Result<()> {
        if u1 != 0.0 {
            return Err(CliError::Config(format!(
                "{name} is defined on the u1 = 0 plane; set grid.slice = 0"
            )));
        }
        Ok(())
    };
    type Eval<'a> = Box<dyn Fn(f64, f64) -> polqpd_core::Result<Complex64> + Sync + 'a>;
    let eval: Eval = match cfg.charfn.function {
        CharFunction::Symmetric => {
            let s = single_mode(&cfg.state)?;
            Box::new(move |a, b| Ok(chi_s(&s, Complex64::new(a, b))))
        }
        CharFunction::Lp => {
            let lp = lp_detected(&cfg.state, eta)?;
            Box::new(move |a, b| {
                let p = CharPoint::new(u1, a, b);
                Ok(smooth_char(chi_lp(&lp, &p), p.lambda(), sigma))
            })
        }
        CharFunction::TwoModeCoherent => {
            let alpha = match count_source(cfg)? {
                CountSource::CoherentPair { alpha, .. } => alpha,
                CountSource::Linear(_) => {
                    return Err(CliError::Config(
                        "two-mode-coherent needs a [highlight] section".into(),
                    ))
                }
            };
            let (a, a0) = (alpha * eta.sqrt(), alpha0_detected(cfg)?);
            Box::new(move |x, y| {
                let p = CharPoint::new(u1, x, y);
                Ok(smooth_char(
                    chi_two_mode_coherent(&p, a, a0),
                    p.lambda(),
                    sigma,
                ))
            })
        }
        CharFunction::HighlightedExact => {
            transverse_only("highlighted-exact")?;
            let hs = HighlightedState::new(
                apply_loss(single_mode(&cfg.state)?, eta)?,
                alpha0_detected(cfg)?,
            )?;
            Box::new(move |a, b| {
                let w = Complex64::new(a, b);
                Ok(smooth_char(
                    chi_highlighted_exact(w, &hs, spec)?.value,
                    w.norm(),
                    sigma,
                ))
            })
        }
        CharFunction::HighlightedAsymptotic => {
            transverse_only("highlighted-asymptotic")?;
            let hs = HighlightedState::new(single_mode(&cfg.state)?, alpha0_detected(cfg)?)?;
            Box::new(move |a, b| chi_highlighted_asymptotic(Complex64::new(a, b), &hs, &det))
        }
    };
    let n = ax.count;
    let values: Vec<Complex64> = (0..n * n)
        .into_par_iter()
        .map(|flat| eval(ax.coord(flat / n), ax.coord(flat % n)))
        .collect::<polqpd_core::Result<_>>()?;
    let labels = match cfg.charfn.function {
        CharFunction::Symmetric => ["z_re[1]", "z_im[1]"],
        _ => ["u2[1/photons]", "u3[1/photons]"],
    };
    let rows: Vec<Vec<f64>> = values
        .iter()
        .enumerate()
        .map(|(flat, v)| vec![ax.coord(flat / n), ax.coord(flat % n), v.re, v.im])
        .collect();
    let path = dir.join(format!("{stem}.csv"));
    let body = table_csv(&[labels[0], labels[1], "re[1]", "im[1]"], &rows);
    let max_abs = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(vec![output(
        cfg,
        Command::Charfn,
        path,
        body,
        json!({"function": cfg.charfn.function, "u1": u1, "max_abs": max_abs}),
    )])
}

pub fn cmd_pqpd(cfg: &RunConfig, dir: &Path, stem: &str) -> Result<Vec<Output>> {
    let ax = grid_axis(cfg)?;
    let path = dir.join(format!("{stem}.csv"));
    let p = &cfg.pqpd;
    let (grid, label, mut results) = match p.surface {
        Surface::WmProfile => {
            let rows: Vec<Vec<f64>> = ax
                .iter()
                .map(|s| {
                    let v = if cfg.gamma > 0.0 {
                        Ok(WmRegularized::new(p.m, cfg.gamma)?.eval(s))
                    } else {
                        match w_m(p.m, s, 0.0) {
                            Err(CoreError::Domain(_)) => Ok(f64::NAN),
                            other => other,
                        }
                    };
                    v.map(|v| vec![s, v])
                })
                .collect::<polqpd_core::Result<_>>()?;
            let body = table_csv(&["S23[photons]", "w[photons^-2]"], &rows);
            let mass = if cfg.gamma > 0.0 {
                Some(WmRegularized::new(p.m, cfg.gamma)?.disc_mass(ax.max()))
            } else {
                None
            };
            return Ok(vec![output(
                cfg,
                Command::Pqpd,
                path,
                body,
                json!({"surface": p.surface, "m": p.m, "gamma": cfg.gamma, "disc_mass_to_max": mass}),
            )]);
        }
        Surface::WmMap => {
            let lp = lp_detected(&cfg.state, cfg.detector.eta)?;
            let g = marginal_w23_lp(&lp, ax, ax, cfg.gamma)?;
            (g, "W23[photons^-2]", json!({"gamma": cfg.gamma}))
        }
        Surface::Sqz0 | Surface::Sqz1 => {
            let e2 = eps2(cfg)?;
            let (r, sqz1) = (p.r, p.surface == Surface::Sqz1);
            let g = fill_grid(vec![ax, ax], CoordinateSystem::Normalized, |q| {
                let pt = StokesPoint::transverse(q[0], q[1]);
                if sqz1 {
                    w23_highlighted_sqz1(pt, r, e2, Coordinates::Normalized)
                } else {
                    w23_highlighted_sqz0(pt, r, e2, Coordinates::Normalized)
                }
            })?;
            let source = if sqz1 {
                NegativitySource::Sqz1 { r, eps2: e2 }
            } else {
                NegativitySource::Sqz0 { r, eps2: e2 }
            };
            let v = negativity_volume(source, cfg.negativity.tolerance)?;
            let cond = negativity_condition(e2);
            (
                g,
                "w23[1]",
                json!({"r": r, "eps2": e2, "negativity_volume": v.value, "negativity_error": v.error,
                       "negative_region_expected": sqz1 && cond.negative}),
            )
        }
        Surface::SmoothedLp => {
            let lp = lp_detected(&cfg.state, cfg.detector.eta)?;
            let (sigma, s1) = (cfg.detector.sigma, cfg.grid.slice);
            let g = fill_grid(vec![ax, ax], CoordinateSystem::RawStokes, |q| {
                smoothed_pqpd_lp(&lp, sigma, StokesPoint::new(s1, q[0], q[1]))
            })?;
            (g, "W[photons^-3]", json!({"sigma": sigma, "s1": s1}))
        }
        Surface::Highlighted => {
            let e2 = eps2(cfg)?;
            let state = single_mode(&cfg.state)?;
            let w = wigner(&state, WignerGridSpec::new(p.wigner_n, p.wigner_extent)?)?;
            let g = w23_from_wigner_convolution(&w, e2, ax, ax, None)?;
            (g, "w23[1]", json!({"eps2": e2, "wigner": grid_summary(&w)}))
        }
    };
    if grid.axes.len() == 2 && p.surface != Surface::SmoothedLp {
        results["negativity_volume_grid"] = json!(negativity_volume_grid(&grid));
    }
    results["surface"] = json!(p.surface);
    results["grid"] = grid_summary(&grid);
    let body = grid_csv(&grid, label);
    Ok(vec![output(cfg, Command::Pqpd, path, body, results)])
}

fn settings(spec: &SettingsSpec) -> Result<Vec<WaveplateSetting>> {
    Ok(spec
        .angles()
        .into_iter()
        .map(|(t, p)| WaveplateSetting::new(t, p))
        .collect::<polqpd_core::Result<_>>()?)
}

/// Exact tomograms when `shots == 0`, otherwise Monte Carlo with one RNG
/// stream family per setting index.
pub fn make_tomograms(cfg: &RunConfig) -> Result<Vec<Tomogram>> {
    let source = count_source(cfg)?;
    let settings = settings(&cfg.settings)?;
    let det = detector(cfg)?;
    if settings.len() > u32::MAX as usize {
        return Err(CliError::Config("too many settings".into()));
    }
    let tomograms = if cfg.shots == 0 {
        settings
            .par_iter()
            .map(|s| {
                count_pmf(&source, *s, det.eta(), None).map(|t| Tomogram {
                    sigma: det.sigma(),
                    ..t
                })
            })
            .collect::<polqpd_core::Result<Vec<_>>>()?
    } else {
        let plan = SamplingPlan::new(cfg.shots, det.eta(), det.sigma(), cfg.seed)?;
        settings
            .par_iter()
            .enumerate()
            .map(|(i, s)| sample_setting(&source, *s, i as u32, plan))
            .collect::<polqpd_core::Result<Vec<_>>>()?
    };
    Ok(tomograms)
}

pub fn cmd_simulate(cfg: &RunConfig, dir: &Path, stem: &str) -> Result<Vec<Output>> {
    let tomograms = make_tomograms(cfg)?;
    Ok(tomograms
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let path = dir.join(format!("{stem}_{i:03}.csv"));
            let results = json!({
                "index": i,
                "theta": t.setting.theta(),
                "phi": t.setting.phi(),
                "shots": t.shots,
                "seed": t.seed,
                "sigma": t.sigma,
                "pmf_mass": t.pmf().map(|p| p.total()),
            });
            output(cfg, Command::Simulate, path, tomogram_text(t), results)
        })
        .collect())
}

pub fn cmd_reconstruct(cfg: &RunConfig, dir: &Path, stem: &str) -> Result<Vec<Output>> {
    let inputs = &cfg.reconstruct.inputs;
    let tomograms = if inputs.is_empty() {
        make_tomograms(cfg)?
    } else {
        inputs
            .iter()
            .map(|p| read_tomogram(p))
            .collect::<Result<Vec<_>>>()?
    };
    let f = &cfg.fourier;
    let rays: Vec<Ray> = tomograms
        .par_iter()
        .map(|t| Ray::from_tomogram(t, f.lambda_max, f.lambda_count))
        .collect::<polqpd_core::Result<_>>()?;
    let planar = rays
        .iter()
        .all(|r| (r.setting.theta() - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    let grid = FourierGrid::new(f.n, f.du)?;
    let spec = AssemblySpec {
        max_angular_gap: f.max_angular_gap,
        decay_tolerance: f.decay_tolerance,
    };
    let mut cg = if planar {
        assemble_2d(&rays, grid, spec)?
    } else {
        assemble_3d(&rays, grid, spec)?
    };
    hermitize(&mut cg);
    let w = if planar {
        invert_2d(&cg)?
    } else {
        invert_3d(&cg)?
    };
    let mut results = json!({
        "dimension": if planar { 2 } else { 3 },
        "tomograms": tomograms.len(),
        "inputs": inputs,
        "grid": grid_summary(&w),
    });
    if planar {
        results["negativity_volume_grid"] = json!(negativity_volume_grid(&w));
    }
    let label = if planar {
        "W23[photons^-2]"
    } else {
        "W[photons^-3]"
    };
    let path = dir.join(format!("{stem}.csv"));
    Ok(vec![output(
        cfg,
        Command::Reconstruct,
        path,
        grid_csv(&w, label),
        results,
    )])
}

pub fn cmd_negativity(cfg: &RunConfig, dir: &Path, stem: &str) -> Result<Vec<Output>> {
    let n = &cfg.negativity;
    let db_per_r = 20.0 * std::f64::consts::LOG10_E;
    let pairs: Vec<(f64, f64)> =
        n.r.iter()
            .flat_map(|r| n.eps2.iter().map(move |e| (*r, *e)))
            .collect();
    let estimates = pairs
        .par_iter()
        .map(|&(r, eps2)| negativity_volume(NegativitySource::Sqz1 { r, eps2 }, n.tolerance))
        .collect::<polqpd_core::Result<Vec<_>>>()?;
    let rows: Vec<Vec<f64>> = pairs
        .iter()
        .zip(&estimates)
        .map(|(&(r, e), v)| vec![r, r * db_per_r, e, v.value, v.error])
        .collect();
    let entries: Vec<Value> = pairs
        .iter()
        .zip(&estimates)
        .map(|(&(r, e), v)| {
            json!({"r": r, "squeezing_db": r * db_per_r, "eps2": e, "v_minus": v.value, "error": v.error,
                   "negative": negativity_condition(e).negative})
        })
        .collect();
    let body = table_csv(
        &["r[1]", "squeezing[dB]", "eps2[1]", "v_minus[1]", "error[1]"],
        &rows,
    );
    let path = dir.join(format!("{stem}.csv"));
    Ok(vec![output(
        cfg,
        Command::Negativity,
        path,
        body,
        json!({"entries": entries}),
    )])
}

/// The four figure recipes with pinned parameters.
pub fn cmd_figures(cfg: &RunConfig, dir: &Path) -> Result<Vec<Output>> {
    let base = RunConfig {
        output_dir: cfg.output_dir.clone(),
        ..RunConfig::default()
    };
    let mut out = Vec::new();

    let mut c = base.clone();
    c.command = Some(Command::Pqpd);
    c.pqpd.surface = Surface::WmProfile;
    c.pqpd.m = 1;
    c.grid.min = 0.0;
    c.grid.max = 3.0;
    c.grid.count = 301;
    out.extend(cmd_pqpd(&c, &dir.join("fig2"), "w1_profile")?);
    c.pqpd.surface = Surface::WmMap;
    c.state = StateSpec::Fock { n: 1 };
    c.grid.min = -2.0;
    c.grid.max = 2.0;
    c.grid.count = 201;
    out.extend(cmd_pqpd(&c, &dir.join("fig2"), "w23_fock1")?);

    let mut c = base.clone();
    c.command = Some(Command::Simulate);
    c.detector.eta = 0.6;
    c.settings = SettingsSpec::Single {
        theta: std::f64::consts::FRAC_PI_2,
        phi: 0.0,
    };
    c.state = StateSpec::Fock { n: 1 };
    out.extend(cmd_simulate(&c, &dir.join("fig3"), "fock1")?);
    c.state = StateSpec::Coherent {
        alpha: Complex64::new(1.0, 0.0),
    };
    out.extend(cmd_simulate(&c, &dir.join("fig3"), "coherent")?);

    let mut c = base.clone();
    c.command = Some(Command::Pqpd);
    c.pqpd.surface = Surface::Sqz1;
    for (label, r) in [("1", 0.0), ("2", 2f64.ln())] {
        for (elabel, e2) in [("0", 0.0), ("0.7", 0.7)] {
            c.pqpd.r = r;
            c.pqpd.eps2 = Some(e2);
            out.extend(cmd_pqpd(
                &c,
                &dir.join("fig4"),
                &format!("sqz1_er{label}_eps2_{elabel}"),
            )?);
        }
    }

    let mut c = base;
    c.command = Some(Command::Negativity);
    c.negativity.r = (0..=24).map(|k| 0.05 * k as f64).collect();
    out.extend(cmd_negativity(&c, &dir.join("fig5"), "negativity")?);
    Ok(out)
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<Vec<Output>> {
    let dir = cfg.output_dir();
    match command {
        Command::Charfn => cmd_charfn(cfg, &dir, "charfn"),
        Command::Pqpd => cmd_pqpd(cfg, &dir, "pqpd"),
        Command::Simulate => cmd_simulate(cfg, &dir, "tomogram"),
        Command::Reconstruct => cmd_reconstruct(cfg, &dir, "reconstruct"),
        Command::Negativity => cmd_negativity(cfg, &dir, "negativity"),
        Command::Figures => cmd_figures(cfg, &dir),
    }
}
