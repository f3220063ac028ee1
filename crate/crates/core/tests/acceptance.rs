//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use kgfv::cli::ScenarioConfig;
use kgfv::epr::{
    apply_conjugate_operators, apply_standard_operators, build_epr_pair, commutator_residual, gaussian,
    refinement_study, EprRelation, OperatorExpr, SpacetimeInversion,
};
use kgfv::evolution::{
    build_initial_wavepacket, charge_centroid, run_simulation, CrankNicolson, PotentialProfile, SimulationConfig,
    WavepacketSpec,
};
use kgfv::fv::{charge_density, charge_density_kg, current_density, decompose, recompose, FVField, KGState};
use kgfv::scattering::{
    plane_wave_densities, relabel_transmitted, solve_step, PlaneWave, Regime, ScatteringError, WaveKind,
};
use kgfv::{Grid1D, Units};
use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

type Verdict = (bool, String);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Continuity of ψ and ψ' at x = 0 as a 2×2 linear solve for (b/a, b'/a).
fn matching_solve(p: f64, p_prime: Complex64) -> (Complex64, Complex64) {
    let m = Matrix2::new(c(1.0), c(-1.0), c(-p), -p_prime);
    let x = m.lu().solve(&Vector2::new(c(-1.0), c(-p))).expect("nonsingular");
    (x[0], x[1])
}

fn klein_golden() -> Verdict {
    let units = Units::default();
    let sol = solve_step(1.25, 3.0, &units).unwrap();
    let k = ((1.25f64 - 3.0).powi(2) - 1.0).sqrt();
    let (b, bp) = matching_solve(0.75, c(-k));
    let r_oracle = b.norm_sqr();
    let d = plane_wave_densities(&sol, c(1.0), &units);
    let ok = sol.p == 0.75
        && (sol.p_prime - c(-1.436141)).norm() <= 1e-5
        && (sol.reflectivity - 10.1515).abs() <= 1e-3
        && (sol.reflectivity - r_oracle).abs() <= 1e-10
        && (sol.bprime_over_a - bp).norm() <= 1e-10
        && (sol.transmissivity - (1.0 - sol.reflectivity)).abs() <= 1e-12
        && d.rho_t < 0.0
        && d.j_t < 0.0;
    (
        ok,
        format!(
            "p = {}, p' = {:.7}, R = {:.6} (oracle {:.6}), T + R - 1 = {:.1e}, rho_t = {:.4}, j_t = {:.4}",
            sol.p,
            sol.p_prime.re,
            sol.reflectivity,
            r_oracle,
            sol.transmissivity + sol.reflectivity - 1.0,
            d.rho_t,
            d.j_t
        ),
    )
}

fn random_cases() -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..1000)
        .map(|_| (rng.gen_range(1.0..5.0), rng.gen_range(-2.0..12.0)))
        .filter(|&(e, _)| e > 1.0)
        .collect()
}

fn regime_dichotomy() -> Verdict {
    let units = Units::default();
    let (mut counts, mut bad, mut singular) = ([0usize; 3], 0usize, 0usize);
    for (e, v0) in random_cases() {
        match solve_step(e, v0, &units) {
            Ok(sol) => {
                let ok = match sol.regime {
                    Regime::Transmission => {
                        counts[0] += 1;
                        sol.reflectivity < 1.0
                    }
                    Regime::Evanescent => {
                        counts[1] += 1;
                        (sol.reflectivity - 1.0).abs() <= 1e-12
                    }
                    Regime::KleinZone => {
                        counts[2] += 1;
                        sol.reflectivity > 1.0
                    }
                };
                bad += usize::from(!ok);
            }
            Err(ScatteringError::Singular { .. }) => singular += 1,
            Err(_) => bad += 1,
        }
    }
    (
        bad == 0 && counts.iter().all(|&n| n > 0),
        format!(
            "transmission/evanescent/klein = {}/{}/{}, violations {bad}, singular {singular}",
            counts[0], counts[1], counts[2]
        ),
    )
}

fn flux_balance() -> Verdict {
    let units = Units::default();
    let mut worst = 0.0f64;
    let mut n = 0;
    for (e, v0) in random_cases() {
        if let Ok(sol) = solve_step(e, v0, &units) {
            worst = worst.max(plane_wave_densities(&sol, c(1.0), &units).flux_residual());
            n += 1;
        }
    }
    (worst <= 1e-12, format!("max |j_i + j_r - j_t| / max|j| = {worst:.2e} over {n} samples"))
}

fn fv_round_trip() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_trip, mut worst_rho) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.gen_range(3..200);
        let units = Units::new(rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0)).unwrap();
        let mut z = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let psi: Vec<Complex64> = (0..n).map(|_| z()).collect();
        let psi_dot: Vec<Complex64> = (0..n).map(|_| z()).collect();
        let v: Vec<f64> = (0..n).map(|_| z().re * 5.0).collect();
        let grid = Grid1D::new(-1.0, 1.0, n).unwrap();
        let state = KGState::new(psi, psi_dot, grid).unwrap();
        let field = decompose(&state, &v, &units).unwrap();
        let again = decompose(&recompose(&field, &v, &units).unwrap(), &v, &units).unwrap();
        for k in 0..n {
            worst_trip = worst_trip
                .max((field.phi()[k] - again.phi()[k]).norm())
                .max((field.chi()[k] - again.chi()[k]).norm());
        }
        let via_psi = charge_density_kg(&state, &v, &units).unwrap();
        for (a, b) in charge_density(&field).iter().zip(&via_psi) {
            worst_rho = worst_rho.max((a - b).abs());
        }
    }
    (
        worst_trip <= 1e-12 && worst_rho <= 1e-12,
        format!("round trip {worst_trip:.2e}, density forms {worst_rho:.2e}"),
    )
}

/// Larger of the charge and current errors of a sampled plane wave.
fn plane_wave_errors(wave: &PlaneWave, v0: f64, n: usize, units: &Units) -> (f64, f64) {
    let grid = Grid1D::new(-5.0, 5.0, n).unwrap();
    let psi: Vec<Complex64> = grid.points().map(|x| wave.evaluate(x, 0.0, units)).collect();
    let omega = Complex64::new(0.0, -wave.label_energy() / units.hbar);
    let psi_dot = psi.iter().map(|z| omega * z).collect();
    let state = KGState::new(psi, psi_dot, grid).unwrap();
    let amp2 = wave.amplitude.norm_sqr();
    let rho_exact = (wave.energy - v0) / units.rest_energy() * amp2;
    let j_exact = wave.momentum.re / units.m * amp2;
    let rho = charge_density_kg(&state, &vec![v0; n], units).unwrap();
    let j = current_density(&state, units).unwrap();
    let e_rho = rho.iter().map(|r| (r - rho_exact).abs()).fold(0.0, f64::max);
    let e_j = j.iter().map(|x| (x - j_exact).abs()).fold(0.0, f64::max);
    (e_rho / rho_exact.abs(), e_j / j_exact.abs())
}

fn plane_wave_densities_on_grid() -> Verdict {
    let units = Units::default();
    let sol = solve_step(1.25, 3.0, &units).unwrap();
    let a = c(1.0);
    let waves = [(sol.incident_wave(a), 0.0), (sol.transmitted_wave(a), sol.v0)];
    let mut ok = true;
    let mut detail = Vec::new();
    for (label, (wave, v0)) in ["incident", "transmitted"].iter().zip(waves) {
        let errs: Vec<(f64, f64)> = [201, 401, 801].iter().map(|&n| plane_wave_errors(&wave, v0, n, &units)).collect();
        let orders: Vec<f64> = errs.windows(2).map(|w| (w[0].1 / w[1].1).log2()).collect();
        let rho_ok = errs.iter().all(|e| e.0 <= 1e-12);
        ok &= rho_ok && orders.iter().all(|&o| o >= 1.9);
        detail.push(format!(
            "{label}: rho err {:.1e}, j orders {:.3}/{:.3}",
            errs.iter().map(|e| e.0).fold(0.0, f64::max),
            orders[0],
            orders[1]
        ));
    }
    (ok, detail.join("; "))
}

/// Exact positive-energy evolution of ψ₀ on the periodic box, returned as a field.
fn fourier_exact(psi0: &[Complex64], grid: &Grid1D, t: f64, units: &Units) -> FVField {
    let n = psi0.len();
    let mut planner = FftPlanner::<f64>::new();
    let mut spec = psi0.to_vec();
    planner.plan_fft_forward(n).process(&mut spec);
    let mut dot = spec.clone();
    let period = n as f64 * grid.dx();
    for j in 0..n {
        let mode = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
        let k = 2.0 * std::f64::consts::PI * mode / period;
        let e = (units.rest_energy().powi(2) + (units.hbar * units.c * k).powi(2)).sqrt();
        let phase = Complex64::from_polar(1.0 / n as f64, -e * t / units.hbar);
        spec[j] *= phase;
        dot[j] = spec[j] * Complex64::new(0.0, -e / units.hbar);
    }
    let inverse = planner.plan_fft_inverse(n);
    inverse.process(&mut spec);
    inverse.process(&mut dot);
    decompose(&KGState::new(spec, dot, *grid).unwrap(), &vec![0.0; n], units).unwrap()
}

fn free_packet() -> Verdict {
    let units = Units::default();
    let grid = Grid1D::new(-100.0, 100.0, 4096).unwrap();
    let spec = WavepacketSpec {
        x0: -30.0,
        sigma: 10.0,
        p0: 0.75,
        amplitude: 1.0,
    };
    let free = PotentialProfile::free();
    let field = build_initial_wavepacket(&spec, &grid, &free, &units).unwrap();
    let psi0: Vec<Complex64> = field.psi();
    let t = 40.0;
    let dt = 0.05;
    let mut stepper = CrankNicolson::new(&grid, &free, dt, &units).unwrap();
    let mut f = field.clone();
    let w = grid.trapezoid_weights();
    let q = |f: &FVField| charge_density(f).iter().zip(&w).map(|(r, w)| r * w).sum::<f64>();
    let q0 = q(&field);
    let mut drift = 0.0f64;
    for _ in 0..800 {
        stepper.step(&mut f).unwrap();
        drift = drift.max((q(&f) - q0).abs() / q0);
    }
    let x0 = charge_centroid(&field);
    let v = (charge_centroid(&f) - x0) / t;
    let oracle = fourier_exact(&psi0, &grid, t, &units);
    let v_oracle = (charge_centroid(&oracle) - charge_centroid(&fourier_exact(&psi0, &grid, 0.0, &units))) / t;
    (
        (v - 0.600).abs() <= 0.006 && (v - v_oracle).abs() <= 0.006 && drift < 1e-6,
        format!("v = {v:.5}, Fourier-exact v = {v_oracle:.5}, charge drift {drift:.1e}"),
    )
}

fn step_run(v0: f64) -> SimulationConfig {
    SimulationConfig {
        packet: WavepacketSpec {
            x0: -60.0,
            sigma: 10.0,
            p0: 0.75,
            amplitude: 1.0,
        },
        potential: PotentialProfile::smooth(v0, 0.1, 0.0),
        grid: Grid1D::new(-200.0, 200.0, 8001).unwrap(),
        units: Units::default(),
        t_final: 190.0,
        dt: 0.05,
        record_every: 50,
        snapshot_every: None,
        absorbing: false,
    }
}

fn klein_packet() -> Verdict {
    let rec = run_simulation(&step_run(3.0)).unwrap();
    let q0 = rec.q_total[0];
    let (ql, qr) = (*rec.q_left.last().unwrap(), *rec.q_right.last().unwrap());
    let drift = rec.charge_drift();
    (
        qr < -0.05 * q0 && ql > 1.02 * q0 && drift < 1e-6,
        format!("Q_left/Q0 = {:.4}, Q_right/Q0 = {:.4}, drift {drift:.1e}", ql / q0, qr / q0),
    )
}

fn evanescent_packet() -> Verdict {
    let rec = run_simulation(&step_run(1.0)).unwrap();
    let q0 = rec.q_total[0];
    let qr = *rec.q_right.last().unwrap();
    (qr < 1e-3 * q0, format!("Q_right/Q0 = {:.2e}", qr / q0))
}

fn epr_checks() -> Verdict {
    let units = Units::default();
    let g = gaussian(0.0, 0.0, 1.0);
    let fns: [&dyn Fn(f64, f64) -> Complex64; 1] = [&g];
    let pairs = [
        ("[x1-x2, p1+p2]", OperatorExpr::separation(), OperatorExpr::total_momentum()),
        ("[x1+x2, p1-p2]", OperatorExpr::position_sum(), OperatorExpr::relative_momentum()),
    ];
    let grid = Grid1D::new(-8.0, 8.0, 2048).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for (label, a, b) in &pairs {
        let r = commutator_residual(a, b, &grid, &fns, &units).unwrap();
        let study = refinement_study(a, b, 8.0, 129, 4, &fns, &units).unwrap();
        let ratios: Vec<f64> = study.windows(2).map(|w| w[0].residual / w[1].residual).collect();
        let converging = ratios.iter().all(|r| (3.5..=4.5).contains(r));
        ok &= r < 1e-6 && converging;
        detail.push(format!(
            "{label} residual {r:.3e} at n = 2048 (needs < 1e-6), refinement ratios {}",
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join("/")
        ));
    }

    let pair = build_epr_pair(0.75, &units, EprRelation::OppositeMomentaFixedSeparation).unwrap();
    let observed = apply_standard_operators(&pair.wave1).unwrap() == apply_conjugate_operators(&pair.wave2).unwrap();
    let inverted = pair.wave1.spacetime_inversion().unwrap();
    let maps = inverted.kind == WaveKind::Antiparticle
        && apply_conjugate_operators(&inverted).unwrap() == apply_standard_operators(&pair.wave1).unwrap()
        && inverted.spacetime_inversion().unwrap() == pair.wave1;

    let sym = Grid1D::new(-100.0, 100.0, 4001).unwrap();
    let spec = WavepacketSpec {
        x0: -10.0,
        sigma: 10.0,
        p0: 0.75,
        amplitude: 1.0,
    };
    let field = build_initial_wavepacket(&spec, &sym, &PotentialProfile::free(), &units).unwrap();
    let back = field.spacetime_inversion().unwrap().spacetime_inversion().unwrap();
    let involution = field
        .phi()
        .iter()
        .zip(back.phi())
        .chain(field.chi().iter().zip(back.chi()))
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    ok &= observed && maps && involution <= 1e-12;
    detail.push(format!(
        "partner (p, E) equal: {observed}, particle -> antiparticle: {maps}, field involution error {involution:.1e}"
    ));
    (ok, detail.join("; "))
}

fn relabeling() -> Verdict {
    let sol = solve_step(1.25, 3.0, &Units::default()).unwrap();
    let (p, e) = apply_conjugate_operators(&relabel_transmitted(&sol, c(1.0)).unwrap()).unwrap();
    (
        (p - 1.43614).abs() <= 1e-5 && (e - 1.75).abs() <= 1e-5 && p > 0.0 && e > 0.0,
        format!("observed (p, E) = ({p:.6}, {e:.6})"),
    )
}

fn run_into(config: &Path, command: &str, out: &Path) -> Vec<u8> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kgfv"));
    cmd.args([command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    if command == "evolve" {
        cmd.args(["--snapshots", "1000"]);
    }
    let output = cmd.output().unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    output.stdout
}

fn manifest_without_clock(dir: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("wall_clock_seconds");
    v
}

fn cli_determinism() -> Verdict {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut paths: Vec<PathBuf> = fs::read_dir(&configs)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    paths.sort();
    let tmp = tempfile::tempdir().unwrap();
    let mut mismatches = Vec::new();
    for path in &paths {
        let config = ScenarioConfig::parse(&fs::read_to_string(path).unwrap()).unwrap();
        let command = config.command.name();
        let stem = path.file_stem().unwrap().to_string_lossy().to_string();
        let (a, b) = (tmp.path().join(format!("{stem}_a")), tmp.path().join(format!("{stem}_b")));
        let same_stdout = run_into(path, command, &a) == run_into(path, command, &b);
        let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        let same_files = names
            .iter()
            .filter(|n| *n != "manifest.json")
            .all(|n| fs::read(a.join(n)).unwrap() == fs::read(b.join(n)).unwrap());
        if !(same_stdout && same_files && manifest_without_clock(&a) == manifest_without_clock(&b)) {
            mismatches.push(stem);
        }
    }
    (
        mismatches.is_empty() && !paths.is_empty(),
        format!("{} benchmark configs, mismatches: {:?}", paths.len(), mismatches),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 11] = [
        ("Klein-zone golden case", klein_golden),
        ("regime dichotomy", regime_dichotomy),
        ("flux balance", flux_balance),
        ("FV round trip", fv_round_trip),
        ("plane-wave densities on grid", plane_wave_densities_on_grid),
        ("free packet", free_packet),
        ("Klein packet", klein_packet),
        ("evanescent packet", evanescent_packet),
        ("EPR operator checks", epr_checks),
        ("antiparticle relabeling", relabeling),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (passed, detail) = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        });
        failed += usize::from(!passed);
        println!(
            "{} {:>2} {name}: {detail} [{:.2}s]",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
