//! Subcommand implementations. Each writes CSV tables, a JSON sidecar and
//! SVG plots into the output directory and returns the written paths.

use std::fs;
use std::path::{Path, PathBuf};

use keldysh_core::bath::{BathSpec, CutoffFamily};
use keldysh_core::export::{sweep_rows, write_csv_file, write_json_file, Cell, RunMetadata, SWEEP_HEADER};
use keldysh_core::greens::{FreqGrid, FreqUnits};
use keldysh_core::model::{mean_field_amplitude, BosonModel};
use keldysh_core::observables::{
    density, fit_system, least_squares, sweep_system, window_sensitivity, ExponentFit, SweepResult,
    DEFAULT_WINDOW,
};
use keldysh_core::oracle::{lindblad_steady_state, lyapunov_solution, DiscretizedBath, FockTruncation};
use keldysh_core::spectrum::{locate_transition, modes, track_branches, ModeSet, RootClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{CommandKind, RunConfig};
use crate::error::{CliError, Result};
use crate::plot::{heatmap, line_panels, Panel, Series};

/// Reference exponents with their tolerance bands, keyed by k at ω₀ = 1.
pub const REFERENCE_EXPONENTS: [(f64, f64, f64); 2] = [(0.3, 1.0, 0.3), (1.0, 1.6, 0.4)];

pub fn run(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::Io(format!("{}: {e}", cfg.out.display())))?;
    match cfg.command {
        CommandKind::Spectrum | CommandKind::Fluct => cmd_spectrum(cfg),
        CommandKind::Response | CommandKind::Correlation => cmd_response(cfg),
        CommandKind::Density => cmd_density(cfg),
        CommandKind::Teff => cmd_teff(cfg),
        CommandKind::Oracle => cmd_oracle(cfg),
        CommandKind::Validate => cmd_validate(cfg),
    }
}

fn units(cfg: &RunConfig) -> FreqUnits {
    if cfg.absolute_units {
        FreqUnits::Absolute
    } else {
        FreqUnits::Scaled
    }
}

/// Divisor taking absolute frequencies to reported ones.
fn freq_scale(cfg: &RunConfig) -> f64 {
    if cfg.absolute_units {
        1.0
    } else {
        cfg.omega_c[0]
    }
}

fn freq_name(cfg: &RunConfig, prefix: &str) -> String {
    if cfg.absolute_units {
        format!("{prefix}omega")
    } else {
        format!("{prefix}omega_tilde")
    }
}

fn write_metadata(
    cfg: &RunConfig,
    path: &Path,
    model: &BosonModel,
    bath: &BathSpec,
    gamma0: Option<f64>,
    extra: serde_json::Value,
) -> Result<()> {
    let mut meta = RunMetadata::new(cfg.command.name(), model, bath);
    meta.gamma0 = gamma0;
    meta.units = units(cfg);
    meta.extra = json!({ "config": cfg, "results": extra });
    Ok(write_json_file(path, &meta)?)
}

fn suffix(cfg: &RunConfig, k: f64) -> String {
    if cfg.k.len() > 1 {
        format!("_k{k}")
    } else {
        String::new()
    }
}

fn class_name(class: RootClass) -> &'static str {
    match class {
        RootClass::Propagating => "propagating",
        RootClass::Overdamped => "overdamped",
        RootClass::Marginal => "marginal",
        RootClass::Unstable => "unstable",
    }
}

/// Root trajectories along the coupling sweep for each k.
fn cmd_spectrum(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let fluct = cfg.fluct || cfg.command == CommandKind::Fluct;
    let name = if fluct { "fluct" } else { "spectrum" };
    let scale = freq_scale(cfg);
    let re_col = freq_name(cfg, "re_");
    let im_col = freq_name(cfg, "im_");
    let header = ["k", "gamma_over_gamma0", "branch", re_col.as_str(), im_col.as_str(), "class", "residual"];
    let mut rows = Vec::new();
    let mut panels = Vec::new();
    let mut transitions = Vec::new();
    let mut summary = Vec::new();
    let mut first = None;
    for &k in &cfg.k {
        let model = cfg.model(k)?;
        let base = cfg.system(&model, 0.0)?;
        if fluct && !base.bath().is_canonical() {
            return Err(CliError::Input(
                "the fluctuation spectrum needs the Ohmic Drude-Lorentz bath".into(),
            ));
        }
        let gamma0 = base.transition_coupling()?;
        first.get_or_insert((model, *base.bath(), gamma0));
        let ratios = cfg.gamma_ratios(gamma0);
        let sets: Vec<ModeSet> = ratios
            .par_iter()
            .map(|r| -> Result<ModeSet> {
                let sys = base.at_gamma(r * gamma0);
                let mf = if fluct {
                    Some(mean_field_amplitude(&model, r * gamma0)?)
                } else {
                    None
                };
                Ok(modes(&sys, mf.as_ref())?)
            })
            .collect::<Result<_>>()?;
        let failures: usize = sets.iter().map(|s| s.failures.len()).sum();
        if failures > 0 {
            log::warn!("k = {k}: {failures} root searches did not converge");
        }
        let branches = track_branches(&sets);
        let mut re_series = Vec::new();
        let mut im_series = Vec::new();
        for (b, branch) in branches.iter().enumerate() {
            let mut re_pts = Vec::with_capacity(ratios.len());
            let mut im_pts = Vec::with_capacity(ratios.len());
            for (i, root) in branch.iter().enumerate() {
                match root {
                    Some(z) => {
                        let mode = sets[i].modes.iter().find(|m| m.omega == *z);
                        let (class, residual) = mode.map_or(
                            (RootClass::classify(*z, base.bath().omega_c), f64::NAN),
                            |m| (m.class, m.residual),
                        );
                        rows.push(vec![
                            Cell::Num(k),
                            Cell::Num(ratios[i]),
                            Cell::Int(b as i64),
                            Cell::Num(z.re / scale),
                            Cell::Num(z.im / scale),
                            Cell::Text(class_name(class).into()),
                            Cell::Num(residual),
                        ]);
                        re_pts.push((ratios[i], z.re / scale));
                        im_pts.push((ratios[i], z.im / scale));
                    }
                    None => {
                        re_pts.push((ratios[i], f64::NAN));
                        im_pts.push((ratios[i], f64::NAN));
                    }
                }
            }
            re_series.push(Series {
                label: format!("branch {b}"),
                points: re_pts,
            });
            im_series.push(Series {
                label: String::new(),
                points: im_pts,
            });
        }
        let unit = if cfg.absolute_units { "ω" } else { "ω/Ω" };
        panels.push(Panel {
            title: format!("k = {k}: real part"),
            x_label: "γ/γ₀".into(),
            y_label: format!("Re {unit}"),
            series: re_series,
        });
        panels.push(Panel {
            title: format!("k = {k}: imaginary part"),
            x_label: "γ/γ₀".into(),
            y_label: format!("Im {unit}"),
            series: im_series,
        });
        if cfg.check_transition {
            let t = locate_transition(&base)?;
            transitions.push(vec![
                Cell::Num(k),
                Cell::Num(t.gamma),
                Cell::Num(gamma0),
                Cell::Num(t.gamma / gamma0),
                Cell::Num(t.root_modulus / scale),
                Cell::Int(t.bisections as i64),
            ]);
        }
        summary.push(json!({ "k": k, "gamma0": gamma0, "root_failures": failures }));
    }
    let dir = &cfg.out;
    let (model, bath, gamma0) = first.expect("k list is non-empty");
    let mut out = vec![dir.join(format!("{name}.csv")), dir.join(format!("{name}.json")), dir.join(format!("{name}.svg"))];
    write_csv_file(&out[0], &header, rows)?;
    write_metadata(cfg, &out[1], &model, &bath, Some(gamma0), json!(summary))?;
    line_panels(&out[2], &panels, 2)?;
    if cfg.check_transition {
        let path = dir.join("transition.csv");
        let modulus = freq_name(cfg, "root_modulus_");
        write_csv_file(
            &path,
            &["k", "gamma_star", "gamma0", "gamma_star_over_gamma0", modulus.as_str(), "bisections"],
            transitions,
        )?;
        out.push(path);
    }
    Ok(out)
}

fn peak_rows(sweep: &SweepResult, values: &[f64]) -> (Vec<Vec<Cell>>, Vec<(f64, f64)>) {
    let n = sweep.omega.len();
    let mut rows = Vec::new();
    let mut track = Vec::new();
    for (i, &r) in sweep.gamma_ratio.iter().enumerate() {
        let row = &values[i * n..(i + 1) * n];
        let best = row
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_nan())
            .max_by(|a, b| a.1.total_cmp(b.1));
        let (w, v) = best.map_or((f64::NAN, f64::NAN), |(j, v)| (sweep.omega.values()[j], *v));
        rows.push(vec![Cell::Num(r), Cell::Num(w), Cell::Num(v)]);
        track.push((w, r));
    }
    (rows, track)
}

/// Spectral response and Keldysh correlator surfaces over (ω, γ/γ₀).
fn cmd_response(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let name = cfg.command.name();
    let correlation = cfg.command == CommandKind::Correlation;
    let grid = FreqGrid::linspace(cfg.omega_grid.lo, cfg.omega_grid.hi, cfg.omega_grid.n, units(cfg))?;
    let omega_col = freq_name(cfg, "");
    let mut header = SWEEP_HEADER;
    header[1] = omega_col.as_str();
    let mut out = Vec::new();
    for &k in &cfg.k {
        let model = cfg.model(k)?;
        let base = cfg.system(&model, 0.0)?;
        let gamma0 = base.transition_coupling()?;
        let ratios = cfg.gamma_ratios(gamma0);
        let sweep = sweep_system(&base, &ratios, &grid)?;
        let values = if correlation { &sweep.correlator } else { &sweep.spectral };
        let (peaks, track) = peak_rows(&sweep, values);
        let stem = format!("{name}{}", suffix(cfg, k));
        let files = [
            cfg.out.join(format!("{stem}.csv")),
            cfg.out.join(format!("{stem}_peaks.csv")),
            cfg.out.join(format!("{stem}.json")),
            cfg.out.join(format!("{stem}.svg")),
        ];
        write_csv_file(&files[0], &header, sweep_rows(&sweep))?;
        let peak_col = freq_name(cfg, "peak_");
        let value_col = if correlation { "iGK_peak" } else { "A_peak" };
        write_csv_file(&files[1], &["gamma_over_gamma0", peak_col.as_str(), value_col], peaks)?;
        write_metadata(cfg, &files[2], &model, base.bath(), Some(gamma0), json!({ "k": k }))?;
        let unit = if cfg.absolute_units { "ω" } else { "ω/Ω" };
        let title = if correlation {
            format!("iG^K, k = {k}")
        } else {
            format!("A, k = {k}")
        };
        heatmap(&files[3], &title, (unit, "γ/γ₀"), grid.values(), &ratios, values, Some(&track))?;
        out.extend(files);
    }
    Ok(out)
}

/// `(centre, half-width)` of the reference exponent for k, if any.
pub fn reference_exponent(omega0: f64, k: f64) -> Option<(f64, f64)> {
    if omega0 != 1.0 {
        return None;
    }
    REFERENCE_EXPONENTS
        .iter()
        .find(|(rk, _, _)| (rk - k).abs() < 1e-12)
        .map(|&(_, alpha, tol)| (alpha, tol))
}

#[derive(Debug, Clone, Serialize)]
struct FitRecord {
    k: f64,
    window: &'static str,
    lo: f64,
    hi: f64,
    fit: Option<ExponentFit>,
    error: Option<String>,
    status: String,
}

impl FitRecord {
    fn new(k: f64, window: &'static str, lo: f64, hi: f64, fit: keldysh_core::Result<ExponentFit>) -> Self {
        let (fit, error) = match fit {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Self {
            k,
            window,
            lo,
            hi,
            fit,
            error,
            status: String::new(),
        }
    }

    fn row(&self) -> Vec<Cell> {
        let (alpha, se, r2) = self
            .fit
            .as_ref()
            .map_or((f64::NAN, f64::NAN, f64::NAN), |f| (f.alpha, f.std_error, f.r_squared));
        vec![
            Cell::Num(self.k),
            Cell::Text(self.window.into()),
            Cell::Num(self.lo),
            Cell::Num(self.hi),
            Cell::Num(alpha),
            Cell::Num(se),
            Cell::Num(r2),
            Cell::Text(self.status.clone()),
        ]
    }
}

/// `⟨a†a⟩` and `C = 2⟨a†a⟩ + 1` against γ/γ₀ per k, with exponent fits.
fn cmd_density(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut panels = vec![
        Panel {
            title: "C = 2⟨a†a⟩ + 1".into(),
            x_label: "γ/γ₀".into(),
            y_label: "log10 C".into(),
            series: Vec::new(),
        },
        Panel {
            title: "fitted exponent".into(),
            x_label: "log10 k".into(),
            y_label: "α".into(),
            series: Vec::new(),
        },
    ];
    let mut alpha_pts = Vec::new();
    let mut first = None;
    for &k in &cfg.k {
        let model = cfg.model(k)?;
        let base = cfg.system(&model, 0.0)?;
        let gamma0 = base.transition_coupling()?;
        first.get_or_insert((model, *base.bath(), gamma0));
        let ratios = cfg.gamma_ratios(gamma0);
        let values: Vec<f64> = ratios
            .par_iter()
            .map(|r| density(&base.at_gamma(r * gamma0)))
            .collect::<keldysh_core::Result<_>>()?;
        let mut pts = Vec::with_capacity(ratios.len());
        for (r, n) in ratios.iter().zip(&values) {
            rows.push(vec![Cell::Num(k), Cell::Num(*r), Cell::Num(*n), Cell::Num(2.0 * n + 1.0)]);
            pts.push((*r, (2.0 * n + 1.0).log10()));
        }
        panels[0].series.push(Series {
            label: format!("k = {k}"),
            points: pts,
        });

        let [lo, hi] = DEFAULT_WINDOW;
        let mut default = FitRecord::new(k, "default", lo, hi, fit_system(&base, [lo * gamma0, hi * gamma0], cfg.fit_points));
        default.status = match (&default.fit, reference_exponent(model.omega0, k)) {
            (None, _) => "failed".into(),
            (Some(_), None) => "no_reference".into(),
            (Some(f), Some((alpha, tol))) if (f.alpha - alpha).abs() <= tol => "within_reference".into(),
            (Some(_), Some(_)) => "outside_reference".into(),
        };
        if let Some(f) = &default.fit {
            alpha_pts.push((k.log10(), f.alpha));
        }
        fits.push(default);
        match window_sensitivity(&base, cfg.fit_points) {
            Ok(ws) => {
                let status = if ws.consistent { "consistent" } else { "window_sensitive" };
                for (label, fit) in [("outer", ws.outer), ("inner", ws.inner)] {
                    let (lo, hi) = (fit.gamma_lo / gamma0, fit.gamma_hi / gamma0);
                    let mut rec = FitRecord::new(k, label, lo, hi, Ok(fit));
                    rec.status = status.into();
                    fits.push(rec);
                }
            }
            Err(e) => {
                for (label, lo, hi) in [("outer", 0.9, 0.99), ("inner", 0.99, 0.999)] {
                    let mut rec = FitRecord::new(k, label, lo, hi, Err(e.clone()));
                    rec.status = "failed".into();
                    fits.push(rec);
                }
            }
        }
    }
    panels[1].series.push(Series {
        label: String::new(),
        points: alpha_pts,
    });
    let dir = &cfg.out;
    let files = vec![
        dir.join("density.csv"),
        dir.join("fits.csv"),
        dir.join("density.json"),
        dir.join("density.svg"),
    ];
    write_csv_file(&files[0], &["k", "gamma_over_gamma0", "density", "C"], rows)?;
    write_csv_file(
        &files[1],
        &["k", "window", "gamma_lo_over_gamma0", "gamma_hi_over_gamma0", "alpha", "std_error", "r_squared", "status"],
        fits.iter().map(FitRecord::row),
    )?;
    let (model, bath, gamma0) = first.expect("k list is non-empty");
    write_metadata(cfg, &files[2], &model, &bath, Some(gamma0), json!({ "fits": fits }))?;
    line_panels(&files[3], &panels, 2)?;
    Ok(files)
}

/// Effective temperature against absolute γ for each (family, Ω, k).
fn cmd_teff(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let gammas = match cfg.gamma {
        Some(g) => vec![g],
        None => cfg.gamma_grid.values(),
    };
    let mut jobs = Vec::new();
    for &family in &cfg.bath {
        for &om in &cfg.omega_c {
            for &k in &cfg.k {
                jobs.push((family, om, k));
            }
        }
    }
    let results: Vec<Vec<(f64, f64)>> = jobs
        .par_iter()
        .map(|&(family, om, k)| -> Result<Vec<(f64, f64)>> {
            let model = cfg.model(k)?;
            gammas
                .iter()
                .map(|&g| {
                    let est = cfg.system_with(&model, family, om, g)?.teff_estimate(None)?;
                    Ok((est.value, est.extrapolated))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut fit_rows = Vec::new();
    let mut fit_summary = Vec::new();
    let mut series: Vec<Series> = Vec::new();
    for (&(family, om, k), values) in jobs.iter().zip(&results) {
        for (g, (t, extrapolated)) in gammas.iter().zip(values) {
            rows.push(vec![
                Cell::Text(family.to_string()),
                Cell::Num(om),
                Cell::Num(k),
                Cell::Num(*g),
                Cell::Num(*t),
                Cell::Num(*extrapolated),
            ]);
        }
        let ts: Vec<f64> = values.iter().map(|v| v.0).collect();
        let line = least_squares(&gammas, &ts);
        let r2 = if gammas.len() > 1 && ts.iter().all(|t| *t == 0.0) { f64::NAN } else { line.r_squared };
        fit_rows.push(vec![
            Cell::Text(family.to_string()),
            Cell::Num(om),
            Cell::Num(k),
            Cell::Num(line.slope),
            Cell::Num(line.intercept),
            Cell::Num(r2),
        ]);
        fit_summary.push(json!({
            "family": family, "Omega": om, "k": k,
            "prefactor": line.slope, "intercept": line.intercept, "r_squared": r2,
        }));
        series.push(Series {
            label: format!("{family}, Ω = {om}, k = {k}"),
            points: gammas.iter().copied().zip(ts).collect(),
        });
    }
    let spread = |family: CutoffFamily| -> Option<f64> {
        let mut worst: Option<f64> = None;
        for (gi, _) in gammas.iter().enumerate().filter(|(_, g)| **g > 0.0) {
            let ts: Vec<f64> = jobs
                .iter()
                .zip(&results)
                .filter(|(j, _)| j.0 == family)
                .map(|(_, v)| v[gi].0)
                .collect();
            if ts.len() < 2 {
                continue;
            }
            let max = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = ts.iter().copied().fold(f64::INFINITY, f64::min);
            let rel = (max - min) / max.abs().max(1e-300);
            worst = Some(worst.map_or(rel, |w| w.max(rel)));
        }
        worst
    };

    let dir = &cfg.out;
    let files = vec![
        dir.join("teff.csv"),
        dir.join("teff_fits.csv"),
        dir.join("teff.json"),
        dir.join("teff.svg"),
    ];
    write_csv_file(&files[0], &["family", "Omega", "k", "gamma", "T_eff", "T_eff_extrapolated"], rows)?;
    write_csv_file(&files[1], &["family", "Omega", "k", "prefactor", "intercept", "r_squared"], fit_rows)?;
    let model = cfg.model(cfg.k[0])?;
    let bath = cfg.bath_spec(cfg.bath[0], cfg.omega_c[0], gammas[0])?;
    let extra = json!({
        "fits": fit_summary,
        "relative_spread": {
            "drude": spread(CutoffFamily::DrudeLorentz),
            "exp": spread(CutoffFamily::Exponential),
        },
    });
    write_metadata(cfg, &files[2], &model, &bath, None, extra)?;
    let panel = Panel {
        title: "effective temperature".into(),
        x_label: "γ".into(),
        y_label: "T_eff".into(),
        series,
    };
    line_panels(&files[3], &[panel], 1)?;
    Ok(files)
}

/// Quadratic-sector model used by the oracles: the configured mode with λ = 0.
fn quadratic_model(cfg: &RunConfig, k: f64) -> Result<BosonModel> {
    let m = cfg.model(k)?;
    Ok(BosonModel::new(m.omega0, 0.0, m.n, k)?)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OracleComparison {
    pub gamma_over_gamma0: f64,
    pub quadrature: f64,
    pub lyapunov: f64,
    pub lyapunov_half_modes: f64,
    pub lyapunov_coarse_epsilon: f64,
    pub relative_deviation: f64,
    pub mode_convergence: f64,
    pub epsilon_sensitivity: f64,
    pub max_drift_real: f64,
    pub residual: f64,
}

/// Lyapunov occupation at `M` and `M/2` modes and at `100ε`, against quadrature.
pub fn compare_oracle(cfg: &RunConfig, model: &BosonModel, ratio: f64) -> Result<OracleComparison> {
    let base = cfg.system(model, 0.0)?;
    let gamma0 = base.transition_coupling()?;
    let sys = base.at_gamma(ratio * gamma0);
    let quadrature = density(&sys)?;
    let spec = cfg.bath_spec(cfg.bath[0], cfg.omega_c[0], ratio * gamma0)?;
    let eps = cfg.epsilon * spec.omega_c;
    let full = DiscretizedBath::standard(&spec, cfg.modes)?;
    let half = DiscretizedBath::standard(&spec, (cfg.modes / 2).max(1))?;
    let sol = lyapunov_solution(model, &full, eps)?;
    let lyapunov_half_modes = lyapunov_solution(model, &half, eps)?.occupation;
    let lyapunov_coarse_epsilon = lyapunov_solution(model, &full, 100.0 * eps)?.occupation;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
    Ok(OracleComparison {
        gamma_over_gamma0: ratio,
        quadrature,
        lyapunov: sol.occupation,
        lyapunov_half_modes,
        lyapunov_coarse_epsilon,
        relative_deviation: rel(sol.occupation, quadrature),
        mode_convergence: rel(lyapunov_half_modes, sol.occupation),
        epsilon_sensitivity: rel(lyapunov_coarse_epsilon, sol.occupation),
        max_drift_real: sol.max_drift_real,
        residual: sol.residual,
    })
}

/// Lindblad steady state at γ = 0 and Lyapunov-vs-quadrature comparison.
fn cmd_oracle(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut lindblad_rows = Vec::new();
    let mut comparisons = Vec::new();
    let trunc = FockTruncation::new(cfg.fock_cutoff)?;
    for &k in &cfg.k {
        let full = cfg.model(k)?;
        let s = lindblad_steady_state(&full, &trunc)?;
        lindblad_rows.push(vec![
            Cell::Num(k),
            Cell::Num(full.lambda),
            Cell::Int(s.n_max as i64),
            Cell::Num(s.occupation),
            Cell::Num(s.vacuum_fidelity),
            Cell::Num(s.population_decay_rate),
            Cell::Num(s.slowest_decay_rate),
            Cell::Num(s.tail_population),
        ]);
        let model = quadratic_model(cfg, k)?;
        let gamma0 = cfg.system(&model, 0.0)?.transition_coupling()?;
        let results: Vec<OracleComparison> = cfg
            .gamma_ratios(gamma0)
            .par_iter()
            .map(|&r| compare_oracle(cfg, &model, r))
            .collect::<Result<_>>()?;
        comparisons.extend(results.into_iter().map(|c| (k, c)));
    }
    let dir = &cfg.out;
    let files = vec![dir.join("lindblad.csv"), dir.join("oracle.csv"), dir.join("oracle.json")];
    write_csv_file(
        &files[0],
        &["k", "lambda", "n_max", "occupation", "vacuum_fidelity", "population_decay_rate", "slowest_decay_rate", "tail_population"],
        lindblad_rows,
    )?;
    write_csv_file(
        &files[1],
        &[
            "k",
            "gamma_over_gamma0",
            "modes",
            "quadrature",
            "lyapunov",
            "lyapunov_half_modes",
            "lyapunov_coarse_epsilon",
            "relative_deviation",
            "mode_convergence",
            "epsilon_sensitivity",
            "max_drift_real",
        ],
        comparisons.iter().map(|(k, c)| {
            vec![
                Cell::Num(*k),
                Cell::Num(c.gamma_over_gamma0),
                Cell::Int(cfg.modes as i64),
                Cell::Num(c.quadrature),
                Cell::Num(c.lyapunov),
                Cell::Num(c.lyapunov_half_modes),
                Cell::Num(c.lyapunov_coarse_epsilon),
                Cell::Num(c.relative_deviation),
                Cell::Num(c.mode_convergence),
                Cell::Num(c.epsilon_sensitivity),
                Cell::Num(c.max_drift_real),
            ]
        }),
    )?;
    let model = quadratic_model(cfg, cfg.k[0])?;
    let bath = cfg.bath_spec(cfg.bath[0], cfg.omega_c[0], 0.0)?;
    let extra: Vec<_> = comparisons.iter().map(|(k, c)| json!({ "k": k, "comparison": c })).collect();
    write_metadata(cfg, &files[2], &model, &bath, None, json!(extra))?;
    Ok(files)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn below(name: &'static str, measured: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name,
            passed: measured.is_finite() && measured < tolerance,
            measured,
            tolerance,
            detail,
        }
    }

    fn failed(name: &'static str, tolerance: f64, err: impl std::fmt::Display) -> Self {
        Self {
            name,
            passed: false,
            measured: f64::NAN,
            tolerance,
            detail: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<Check>,
    pub teff_over_gamma: Option<f64>,
}

fn check_or_fail(name: &'static str, tolerance: f64, r: Result<Check>) -> Check {
    r.unwrap_or_else(|e| Check::failed(name, tolerance, e))
}

/// All oracle and self-consistency checks.
pub fn validation_report(cfg: &RunConfig) -> Result<ValidationReport> {
    let k = cfg.k[0];
    let ratio = cfg.gamma_ratios(cfg.system(&cfg.model(k)?, 0.0)?.transition_coupling()?)[0];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = Vec::new();

    checks.push(check_or_fail("lindblad_vacuum", 1e-8, (|| {
        let trunc = FockTruncation::new(cfg.fock_cutoff)?;
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let m = BosonModel::new(
                rng.gen_range(0.1..3.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(1..500),
                rng.gen_range(0.05..2.0),
            )?;
            let s = lindblad_steady_state(&m, &trunc)?;
            worst = worst
                .max(1.0 - s.vacuum_fidelity)
                .max(s.tail_population)
                .max((s.population_decay_rate - 2.0 * m.k).abs());
        }
        Ok(Check::below("lindblad_vacuum", worst, 1e-8, "worst of 1 - fidelity, tail, |rate - 2k| over 10 draws".into()))
    })()));

    checks.push(check_or_fail("lyapunov_equivalence", 0.02, (|| {
        let c = compare_oracle(cfg, &quadratic_model(cfg, k)?, ratio)?;
        Ok(Check::below(
            "lyapunov_equivalence",
            c.relative_deviation,
            0.02,
            format!(
                "M = {}: lyapunov {:.6e}, quadrature {:.6e}, M/2 change {:.3e}",
                cfg.modes, c.lyapunov, c.quadrature, c.mode_convergence
            ),
        ))
    })()));

    checks.push(check_or_fail("fdt_consistency", 1e-9, (|| {
        let base = cfg.system(&cfg.model(k)?, 0.0)?;
        let sys = base.at_gamma(ratio * base.transition_coupling()?);
        let om = base.bath().omega_c;
        let mut worst: f64 = 0.0;
        for i in 0..200 {
            let w = om * (-5.0 + 10.0 * (i as f64 + 0.5) / 200.0);
            let direct = sys.keldysh_matrix(w)?;
            let fdt = sys.keldysh_from_distribution(w)?;
            worst = worst.max(fdt.max_abs_diff(&direct) / direct.get(0, 0).norm().max(1.0));
        }
        Ok(Check::below("fdt_consistency", worst, 1e-9, "max |i(G^R F - F G^A) - iG^K| over 200 frequencies".into()))
    })()));

    checks.push(check_or_fail("root_pairing", 1e-9, (|| {
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let m = BosonModel::new(rng.gen_range(0.05..3.0), 0.3, 100, rng.gen_range(0.0..2.0))?;
            let om = rng.gen_range(0.2..10.0);
            let base = cfg.system_with(&m, cfg.bath[0], om, 0.0)?;
            let sys = base.at_gamma(rng.gen_range(0.0..1.5) * base.transition_coupling()?);
            let set = modes(&sys, None)?;
            let scale = set.roots().iter().map(|z| z.norm()).fold(1.0, f64::max);
            worst = worst.max(set.pairing_defect() / scale);
        }
        Ok(Check::below("root_pairing", worst, 1e-9, "max |ω + ω*| pairing defect over 100 draws".into()))
    })()));

    checks.push(check_or_fail("transition", 1e-6, (|| {
        let mut worst: f64 = 0.0;
        for &kk in &cfg.k {
            let base = cfg.system(&cfg.model(kk)?, 0.0)?;
            let t = locate_transition(&base)?;
            worst = worst.max((t.gamma / base.transition_coupling()? - 1.0).abs());
        }
        Ok(Check::below("transition", worst, 1e-6, "|γ*/γ₀ - 1| from bisection".into()))
    })()));

    checks.push(check_or_fail("sum_rule", 1e-8, (|| {
        let n = density(&cfg.system(&cfg.model(k)?, 0.0)?)?;
        Ok(Check::below("sum_rule", n.abs(), 1e-8, "⟨a†a⟩ at γ = 0".into()))
    })()));

    let teff_over_gamma = (|| -> Result<f64> {
        let base = cfg.system(&cfg.model(k)?, 0.0)?;
        let gamma = ratio * base.transition_coupling()?;
        Ok(base.at_gamma(gamma).effective_temperature(None)? / gamma)
    })()
    .ok()
    .filter(|v| v.is_finite());

    Ok(ValidationReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
        teff_over_gamma,
    })
}

fn cmd_validate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let report = validation_report(cfg)?;
    let path = cfg.out.join("validate.json");
    write_json_file(&path, &json!({ "config": cfg, "report": report }))?;
    for c in &report.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!("{verdict} {}: measured {:.3e} (tolerance {:.1e}) {}", c.name, c.measured, c.tolerance, c.detail);
    }
    if let Some(t) = report.teff_over_gamma {
        println!("T_eff/gamma = {t:.12}");
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::ChecksFailed(failed));
    }
    Ok(vec![path])
}
