//! Release criteria. Each check prints one `criterion N: PASS|FAIL` line and
//! then asserts; the harness runs all of them and exits nonzero if any failed.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use keldysh_cli::commands::{self, compare_oracle, reference_exponent};
use keldysh_cli::config::{CommandKind, RunConfig};
use keldysh_core::bath::{BathSpec, CutoffFamily};
use keldysh_core::greens::CoupledSystem;
use keldysh_core::model::{mean_field_amplitude, BosonModel, MeanField};
use keldysh_core::observables::{density, fit_divergence_exponent, least_squares, window_sensitivity};
use keldysh_core::oracle::{lindblad_steady_state, FockTruncation};
use keldysh_core::spectrum::{characteristic_roots, find_transition, fluctuation_roots, ModeSet};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn report(id: &str, passed: bool, detail: impl AsRef<str>) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    println!("criterion {id}: {verdict}: {}", detail.as_ref());
}

/// Coupling at which `det [G^R]⁻¹(0)` vanishes for the Ohmic Drude–Lorentz
/// bath, where `Σ(0) = πγ/2`.
fn gamma0_closed_form(w0: f64, k: f64) -> f64 {
    (w0 * w0 + k * k) / (PI * w0)
}

/// Uncoupled retarded propagator element: `A = iG^K = 2k((ω+ω₀)² + k²)/|D|²`.
fn lorentzian(w: f64, w0: f64, k: f64) -> f64 {
    let p = w * w - k * k - w0 * w0;
    2.0 * k * ((w + w0).powi(2) + k * k) / (p * p + 4.0 * w * w * k * k)
}

fn criterion_1_transition_location() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (w0, k) in [(1.0, 0.0), (1.0, 0.3), (1.0, 1.0), (0.4, 0.3)] {
        let m = BosonModel::new(w0, 0.3, 100, k).unwrap();
        let g = find_transition(&m, &BathSpec::ohmic(1.0, 0.0).unwrap()).unwrap();
        worst = worst.max((g / gamma0_closed_form(w0, k) - 1.0).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let passed = worst < 1e-6 && elapsed < 10.0;
    report("1", passed, format!("max |γ*/γ₀ - 1| = {worst:.3e} in {elapsed:.2} s"));
    assert!(passed);
}

fn criterion_2_decoupled_closed_forms() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut peak_err, mut pointwise_err, mut integral_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..20 {
        let (w0, k) = (rng.gen_range(0.1..3.0), rng.gen_range(0.05..2.0));
        let sys = CoupledSystem::new(&BosonModel::new(w0, 0.3, 100, k).unwrap(), &BathSpec::ohmic(1.0, 0.0).unwrap()).unwrap();
        let a0 = sys.spectral_response(w0).unwrap();
        peak_err = peak_err.max((a0 - 2.0 / k).abs() / (2.0 / k));
        for i in 0..1000 {
            let w = -10.0 + 20.0 * (i as f64 + 0.5) / 1000.0;
            let a = sys.spectral_response(w).unwrap();
            let c = sys.keldysh_correlator(w).unwrap();
            let exact = lorentzian(w, w0, k);
            pointwise_err = pointwise_err
                .max((a - c).abs() / a.abs())
                .max((a - exact).abs() / exact);
        }
        let c_total = 2.0 * density(&sys).unwrap() + 1.0;
        integral_err = integral_err.max((c_total - 1.0).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let passed = peak_err < 1e-12 && pointwise_err < 1e-12 && integral_err < 1e-8 && elapsed < 30.0;
    report(
        "2",
        passed,
        format!("A(ω₀)k/2 - 1 = {peak_err:.2e}, |C - A|/A = {pointwise_err:.2e}, |∫iG^K - 1| = {integral_err:.2e}, {elapsed:.1} s"),
    );
    assert!(passed);
}

fn criterion_3_oracle_equivalence() {
    let start = Instant::now();
    let cfg = RunConfig::defaults(CommandKind::Oracle);
    let model = BosonModel::new(1.0, 0.0, 1, 0.3).unwrap();
    let mut worst_dev: f64 = 0.0;
    let mut worst_conv: f64 = 0.0;
    let mut lines = Vec::new();
    for ratio in [0.2, 0.5, 0.8] {
        let c = compare_oracle(&cfg, &model, ratio).unwrap();
        worst_dev = worst_dev.max(c.relative_deviation);
        worst_conv = worst_conv.max(c.mode_convergence);
        lines.push(format!(
            "γ/γ₀ = {ratio}: lyapunov {:.6e}, quadrature {:.6e}, dev {:.2}%, M/2 change {:.2}%, 100ε change {:.2}%",
            c.lyapunov,
            c.quadrature,
            100.0 * c.relative_deviation,
            100.0 * c.mode_convergence,
            100.0 * c.epsilon_sensitivity
        ));
    }
    let elapsed = start.elapsed().as_secs_f64();
    for l in &lines {
        println!("  {l}");
    }
    let passed = worst_dev < 0.02 && worst_conv < 0.02 && elapsed < 300.0;
    report(
        "3",
        passed,
        format!("max deviation {:.2}%, max M-convergence {:.2}%, {elapsed:.0} s", 100.0 * worst_dev, 100.0 * worst_conv),
    );
    assert!(passed);
}

fn criterion_4_critical_exponents() {
    let bath = BathSpec::ohmic(1.0, 0.0).unwrap();
    let mut in_band = true;
    let mut reported = true;
    for k in [0.3, 1.0] {
        let m = BosonModel::new(1.0, 0.3, 100, k).unwrap();
        let g0 = gamma0_closed_form(1.0, k);
        let fit = fit_divergence_exponent(&m, &bath, [0.9 * g0, 0.999 * g0], 24).unwrap();
        let (alpha, tol) = reference_exponent(1.0, k).unwrap();
        let ok = (fit.alpha - alpha).abs() <= tol;
        in_band &= ok;
        println!("  k = {k}: α = {:.4} ± {:.4} (reference {alpha} ± {tol}) {}", fit.alpha, fit.std_error, if ok { "in band" } else { "out of band" });
        match window_sensitivity(&CoupledSystem::new(&m, &bath).unwrap(), 24) {
            Ok(ws) => println!(
                "    windows: [0.9, 0.99] α = {:.4}, [0.99, 0.999] α = {:.4}, consistent = {}",
                ws.outer.alpha, ws.inner.alpha, ws.consistent
            ),
            Err(e) => {
                reported = false;
                println!("    window study failed: {e}");
            }
        }
    }
    let mut trend = Vec::new();
    for k in [0.01, 0.03, 0.1, 0.3] {
        let m = BosonModel::new(1.0, 0.3, 100, k).unwrap();
        let g0 = gamma0_closed_form(1.0, k);
        let alpha = fit_divergence_exponent(&m, &bath, [0.9 * g0, 0.999 * g0], 24).map(|f| f.alpha);
        trend.push(format!("k={k}: {}", alpha.map_or_else(|e| e.to_string(), |a| format!("{a:.4}"))));
    }
    println!("  k → 0 sequence: {}", trend.join(", "));
    let passed = in_band || reported;
    let how = if in_band { "exponents in band" } else { "exponents out of band, window-sensitivity study reported" };
    report("4", passed, how);
    assert!(passed);
}

fn criterion_5_effective_temperature() {
    let gammas: Vec<f64> = (0..7).map(|i| 0.05 * i as f64).collect();
    let teff = |family: CutoffFamily, om: f64, k: f64, g: f64| {
        let m = BosonModel::new(1.0, 0.3, 100, k).unwrap();
        CoupledSystem::new(&m, &BathSpec::new(family, 1.0, om, g).unwrap())
            .unwrap()
            .effective_temperature(None)
            .unwrap()
    };
    let mut min_r2: f64 = 1.0;
    let mut spread: f64 = 0.0;
    let mut prefactor = f64::NAN;
    for &g in gammas.iter().skip(1) {
        let vals: Vec<f64> = [0.0, 0.3, 1.0]
            .iter()
            .flat_map(|&k| [1.0, 10.0, 100.0].map(|om| teff(CutoffFamily::DrudeLorentz, om, k, g)))
            .collect();
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        spread = spread.max((max - min) / max);
    }
    for k in [0.0, 0.3, 1.0] {
        for om in [1.0, 10.0, 100.0] {
            let ts: Vec<f64> = gammas.iter().map(|&g| teff(CutoffFamily::DrudeLorentz, om, k, g)).collect();
            let line = least_squares(&gammas, &ts);
            min_r2 = min_r2.min(line.r_squared);
            prefactor = line.slope;
        }
    }
    let exp: Vec<f64> = [1.0, 10.0, 100.0].map(|om| teff(CutoffFamily::Exponential, om, 0.3, 0.1)).to_vec();
    let exp_change = exp.windows(2).map(|w| (w[1] - w[0]).abs() / w[0]).fold(f64::INFINITY, f64::min);
    let passed = min_r2 > 1.0 - 1e-6 && spread < 1e-6 && exp_change > 0.01;
    report(
        "5",
        passed,
        format!(
            "Drude R² ≥ {min_r2:.12}, spread over (k, Ω) {spread:.2e}, exponential Ω change ≥ {:.1}%, T_eff/γ = {prefactor:.12}",
            100.0 * exp_change
        ),
    );
    assert!(passed);
}

fn random_set(rng: &mut ChaCha8Rng, ratio_hi: f64, k_lo: f64) -> (BosonModel, BathSpec, ModeSet) {
    let (w0, k, om) = (rng.gen_range(0.05..3.0), rng.gen_range(k_lo..2.0), rng.gen_range(0.2..10.0));
    let m = BosonModel::new(w0, 0.3, 100, k).unwrap();
    let b = BathSpec::ohmic(om, rng.gen_range(0.0..ratio_hi) * gamma0_closed_form(w0, k)).unwrap();
    let set = characteristic_roots(&m, &b).unwrap();
    (m, b, set)
}

fn criterion_6a_root_pairing() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (_, _, set) = random_set(&mut rng, 1.5, 0.0);
        let roots = set.roots();
        let scale = roots.iter().map(|z| z.norm()).fold(1.0, f64::max);
        // every root has its partner −ω* in the set
        for z in &roots {
            let partner = -z.conj();
            let d = roots.iter().map(|w| (w - partner).norm()).fold(f64::INFINITY, f64::min);
            worst = worst.max(d / scale);
        }
    }
    let passed = worst < 1e-9;
    report("6a", passed, format!("max pairing defect {worst:.2e} over 100 sets"));
    assert!(passed);
}

fn criterion_6b_stable_mean_field_roots() {
    let mut rng = ChaCha8Rng::seed_from_u64(62);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut example = None;
    for _ in 0..100 {
        let (m, b, set) = random_set(&mut rng, 1.0, 0.01);
        let max_im = set.max_imag();
        worst = worst.max(max_im / b.omega_c);
        if max_im > 1e-9 {
            violations += 1;
            example.get_or_insert((m, b, set.roots()));
        }
    }
    if let Some((m, b, roots)) = &example {
        let offending: Vec<Complex64> = roots.iter().copied().filter(|z| z.im > 1e-9).collect();
        println!(
            "  e.g. ω₀ = {:.3}, k = {:.3}, Ω = {:.3}, γ/γ₀ = {:.3}: upper roots {offending:?}",
            m.omega0,
            m.k,
            b.omega_c,
            b.gamma / gamma0_closed_form(m.omega0, m.k)
        );
    }
    let passed = violations == 0;
    report("6b", passed, format!("{violations}/100 sets with Im ω > 1e-9; max Im ω/Ω = {worst:.4}"));
    assert!(passed);
}

/// Largest distance from a mean-field root to the nearest fluctuation root.
fn displacement(base: &ModeSet, shifted: &ModeSet) -> f64 {
    base.roots()
        .iter()
        .map(|z| shifted.roots().iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

fn criterion_6c_fluctuation_scaling() {
    let bath = BathSpec::ohmic(1.0, 0.5 * gamma0_closed_form(0.4, 0.3)).unwrap();
    let mut disp = BTreeMap::new();
    let mut fixed = BTreeMap::new();
    let phi_ref = mean_field_amplitude(&BosonModel::new(0.4, 0.3, 100, 0.3).unwrap(), bath.gamma).unwrap();
    for n in [100u64, 200, 400] {
        let m = BosonModel::new(0.4, 0.3, n, 0.3).unwrap();
        let base = characteristic_roots(&m, &bath).unwrap();
        let mf = mean_field_amplitude(&m, bath.gamma).unwrap();
        disp.insert(n, displacement(&base, &fluctuation_roots(&m, &bath, &mf).unwrap()));
        let held = MeanField::from_phi(phi_ref.phi0, bath.gamma);
        fixed.insert(n, displacement(&base, &fluctuation_roots(&m, &bath, &held).unwrap()));
    }
    let ratios = [disp[&200] / disp[&100], disp[&400] / disp[&200]];
    let held = [fixed[&200] / fixed[&100], fixed[&400] / fixed[&200]];
    println!("  displacement at self-consistent φ₀: {disp:?}, ratios {ratios:?}");
    println!("  displacement at φ₀ held at its N = 100 value: ratios {held:?}");
    let passed = ratios.iter().all(|r| (r - 0.5).abs() <= 0.1);
    report("6c", passed, format!("doubling ratios {:.4}, {:.4} (target 0.5 ± 20%)", ratios[0], ratios[1]));
    assert!(passed);
}

fn criterion_7_lindblad_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut fid, mut rate, mut tail): (f64, f64, f64) = (1.0, 0.0, 0.0);
    for _ in 0..10 {
        let m = BosonModel::new(rng.gen_range(0.1..3.0), 0.0, rng.gen_range(1..500), rng.gen_range(0.05..2.0)).unwrap();
        let s = lindblad_steady_state(&m, &FockTruncation::default()).unwrap();
        fid = fid.min(s.vacuum_fidelity);
        rate = rate.max((s.population_decay_rate - 2.0 * m.k).abs());
        tail = tail.max(s.tail_population);
    }
    let passed = fid > 1.0 - 1e-8 && rate < 1e-6 && tail < 1e-8;
    report("7", passed, format!("min fidelity 1 - {:.1e}, max |rate - 2k| {rate:.1e}, max tail {tail:.1e}", 1.0 - fid));
    assert!(passed);
}

type Table = Vec<BTreeMap<String, String>>;

fn read_table(path: &Path) -> Table {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    reader
        .records()
        .map(|r| header.iter().cloned().zip(r.unwrap().iter().map(String::from)).collect())
        .collect()
}

fn num(row: &BTreeMap<String, String>, col: &str) -> f64 {
    row[col].parse().unwrap()
}

fn run_default(kind: CommandKind, dir: &Path) {
    let mut cfg = RunConfig::defaults(kind);
    cfg.out = dir.join(kind.name());
    commands::run(&cfg).unwrap();
}

fn criterion_8_figure_features() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    for kind in [CommandKind::Spectrum, CommandKind::Response, CommandKind::Correlation, CommandKind::Density] {
        run_default(kind, dir.path());
    }
    let mut failures = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            failures.push(what.to_string());
        }
    };

    // Fig. 1: three k panels, a zero mode at γ₀, propagating pair surviving at k > 0
    let spec = read_table(&dir.path().join("spectrum/spectrum.csv"));
    let ks: Vec<f64> = {
        let mut v: Vec<f64> = spec.iter().map(|r| num(r, "k")).collect();
        v.dedup();
        v
    };
    check(ks == vec![0.0, 0.3, 1.0], "spectrum covers k = 0, 0.3, 1");
    for &k in &ks {
        let at = |ratio: f64| -> Vec<Complex64> {
            spec.iter()
                .filter(|r| num(r, "k") == k && (num(r, "gamma_over_gamma0") - ratio).abs() < 1e-12)
                .map(|r| Complex64::new(num(r, "re_omega_tilde"), num(r, "im_omega_tilde")))
                .collect()
        };
        let zero = at(1.0).iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        check(zero < 1e-6, &format!("k = {k}: a root vanishes at γ = γ₀ (|ω| = {zero:.2e})"));
        let bare = at(0.0);
        check(
            bare.iter().any(|z| (z.re - 0.4).abs() < 1e-12 && (z.im + k).abs() < 1e-12),
            &format!("k = {k}: bare roots at ±ω₀ - ik"),
        );
        if k > 0.0 {
            let propagating = at(1.0).iter().filter(|z| z.re.abs() > 1e-3 && z.im < 0.0).count();
            let roots = at(0.5).len();
            check(propagating == 2 && roots == 4, &format!("k = {k}: hybridized pair and bath branch present"));
        }
    }

    // Figs. 2–3: peak of A migrates from ω₀ to 0; C diverges only at (ω̃, γ/γ₀) = (0, 1)
    let peaks = read_table(&dir.path().join("response/response_peaks.csv"));
    let track: Vec<f64> = peaks.iter().map(|r| num(r, "peak_omega_tilde")).collect();
    check((track[0] - 1.0).abs() < 0.011, "A peaks at ω̃ = ω₀/Ω without coupling");
    check(track.last().unwrap().abs() < 0.02, "A peak reaches ω̃ ≈ 0 at γ₀");
    check(track.windows(2).all(|w| w[1] <= w[0] + 1e-12), "A peak migrates monotonically");
    let surface = read_table(&dir.path().join("correlation/correlation.csv"));
    let bad: Vec<(f64, f64)> = surface
        .iter()
        .filter(|r| !num(r, "iGK").is_finite())
        .map(|r| (num(r, "gamma_over_gamma0"), num(r, "omega_tilde")))
        .collect();
    check(bad == vec![(1.0, 0.0)], &format!("iG^K diverges only at the origin at γ₀ ({bad:?})"));
    let corr_peaks = read_table(&dir.path().join("correlation/correlation_peaks.csv"));
    let corr_track: Vec<f64> = corr_peaks.iter().map(|r| num(r, "peak_omega_tilde").abs()).collect();
    check(corr_track.windows(2).all(|w| w[1] <= w[0] + 1e-12), "iG^K peak migrates monotonically toward ω̃ = 0");
    check(corr_track[corr_track.len() - 3..].iter().all(|w| *w < 1e-9), "iG^K maximum sits at ω̃ = 0 next to γ₀");
    let heights: Vec<f64> = corr_peaks
        .iter()
        .filter(|r| num(r, "gamma_over_gamma0") >= 0.5)
        .map(|r| num(r, "iGK_peak"))
        .collect();
    check(heights.windows(2).all(|w| w[1] > w[0]), "iG^K peak grows toward γ₀ over the upper half of the sweep");

    // Fig. 4: C grows monotonically and diverges toward γ₀ for every k
    let dens = read_table(&dir.path().join("density/density.csv"));
    for k in RunConfig::defaults(CommandKind::Density).k {
        let c: Vec<f64> = dens.iter().filter(|r| num(r, "k") == k).map(|r| num(r, "C")).collect();
        check((c[0] - 1.0).abs() < 1e-8, &format!("k = {k}: C = 1 without coupling"));
        check(c.windows(2).all(|w| w[1] >= w[0] - 1e-9), &format!("k = {k}: C monotone"));
        check(c[c.len() - 1] > 10.0 * c[c.len() / 2], &format!("k = {k}: C grows sharply near γ₀"));
    }
    let fits = read_table(&dir.path().join("density/fits.csv"));
    check(
        fits.iter().filter(|r| r["window"] == "default").all(|r| num(r, "alpha").is_finite()),
        "every k has a fitted exponent",
    );

    let elapsed = start.elapsed().as_secs_f64();
    for f in &failures {
        println!("  failed: {f}");
    }
    let passed = failures.is_empty();
    report("8", passed, format!("{} feature checks failed, {elapsed:.1} s", failures.len()));
    assert!(passed);
}

fn main() {
    let criteria: [(&str, fn()); 10] = [
        ("criterion_1_transition_location", criterion_1_transition_location),
        ("criterion_2_decoupled_closed_forms", criterion_2_decoupled_closed_forms),
        ("criterion_3_oracle_equivalence", criterion_3_oracle_equivalence),
        ("criterion_4_critical_exponents", criterion_4_critical_exponents),
        ("criterion_5_effective_temperature", criterion_5_effective_temperature),
        ("criterion_6a_root_pairing", criterion_6a_root_pairing),
        ("criterion_6b_stable_mean_field_roots", criterion_6b_stable_mean_field_roots),
        ("criterion_6c_fluctuation_scaling", criterion_6c_fluctuation_scaling),
        ("criterion_7_lindblad_oracle", criterion_7_lindblad_oracle),
        ("criterion_8_figure_features", criterion_8_figure_features),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for (name, check) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        if std::panic::catch_unwind(check).is_err() {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: {} failed: {}", failed.len(), failed.join(", "));
        std::process::exit(1);
    }
}
