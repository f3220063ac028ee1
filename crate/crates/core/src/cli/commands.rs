use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Command, ScenarioConfig};
use super::output::{num, snapshot_table, Record};
use super::CliError;
use crate::epr::{
    self, apply_conjugate_operators, apply_standard_operators, build_epr_pair, commutator_residual,
    refinement_study, EprError, EprRelation, LinearOperator1D, OperatorExpr, SpacetimeInversion,
};
use crate::evolution::{self, EvolutionError, SimulationConfig};
use crate::fv::{self, KGState};
use crate::grid::Grid1D;
use crate::scattering::{self, Regime, ScatteringError, ScatteringSolution};
use crate::units::Units;

/// One invariant evaluated during a run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Check {
            name: name.to_string(),
            passed: value <= threshold,
            value,
            threshold,
        }
    }

    fn holds(name: &str, passed: bool) -> Self {
        Check {
            name: name.to_string(),
            passed,
            value: if passed { 1.0 } else { 0.0 },
            threshold: 1.0,
        }
    }
}

/// Everything a command produces, before anything touches the filesystem.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub stdout: String,
    /// (file name, contents) in write order.
    pub files: Vec<(String, String)>,
    pub checks: Vec<Check>,
    pub summary: Record,
}

impl Outcome {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Command-line overrides applied on top of the scenario file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub snapshots: Option<usize>,
    pub refine: Option<usize>,
}

pub fn execute(config: &ScenarioConfig, overrides: Overrides) -> Result<Outcome, CliError> {
    match config.command {
        Command::Scatter => run_scatter(config),
        Command::Sweep => run_sweep(config),
        Command::Evolve => run_evolve(config, overrides.snapshots),
        Command::Decompose => run_decompose(config),
        Command::EprDemo => run_epr_demo(config, overrides.refine),
    }
}

fn scattering_error(e: ScatteringError) -> CliError {
    match e {
        ScatteringError::BelowRestEnergy { .. } | ScatteringError::NotKleinZone(_) => {
            CliError::Precondition(e.to_string())
        }
        ScatteringError::Singular { .. } => CliError::Numerical(e.to_string()),
        ScatteringError::NonFinite { .. } => CliError::Config(e.to_string()),
    }
}

fn evolution_error(e: EvolutionError) -> CliError {
    match e {
        EvolutionError::NonFinite { .. } | EvolutionError::Field(_) => CliError::Numerical(e.to_string()),
        _ => CliError::Precondition(e.to_string()),
    }
}

fn epr_error(e: EprError) -> CliError {
    CliError::Precondition(e.to_string())
}

fn regime_invariants_hold(sol: &ScatteringSolution) -> bool {
    match sol.regime {
        Regime::KleinZone => sol.p_prime.re < 0.0 && sol.reflectivity > 1.0 && sol.transmissivity < 0.0,
        Regime::Evanescent => sol.p_prime.re == 0.0 && sol.p_prime.im >= 0.0 && (sol.reflectivity - 1.0).abs() <= 1e-12,
        Regime::Transmission => sol.p_prime.re > 0.0 && sol.p_prime.im == 0.0 && sol.reflectivity < 1.0,
    }
}

pub fn run_scatter(config: &ScenarioConfig) -> Result<Outcome, CliError> {
    let params = config.scatter.expect("validated");
    let units = config.units;
    let sol = scattering::solve_step(params.energy, params.v0, &units).map_err(scattering_error)?;
    let a = Complex64::new(params.amplitude, 0.0);
    let d = scattering::plane_wave_densities(&sol, a, &units);

    let mut record = Record::new();
    record
        .number("E", sol.energy)
        .number("V0", sol.v0)
        .number("p", sol.p)
        .number("p_prime_re", sol.p_prime.re)
        .number("p_prime_im", sol.p_prime.im)
        .number("b_over_a_re", sol.b_over_a.re)
        .number("b_over_a_im", sol.b_over_a.im)
        .number("bprime_over_a_re", sol.bprime_over_a.re)
        .number("bprime_over_a_im", sol.bprime_over_a.im)
        .number("R", sol.reflectivity)
        .number("T", sol.transmissivity)
        .text("regime", &sol.regime.to_string())
        .number("rho_i", d.rho_i)
        .number("j_i", d.j_i)
        .number("rho_r", d.rho_r)
        .number("j_r", d.j_r)
        .number("rho_t", d.rho_t)
        .number("j_t", d.j_t)
        .number("flux_residual", d.flux_residual());
    let rendered = record.render();

    let checks = vec![
        Check::at_most(
            "reflectivity_plus_transmissivity",
            (sol.reflectivity + sol.transmissivity - 1.0).abs(),
            1e-12,
        ),
        Check::at_most("flux_balance", d.flux_residual(), 1e-12),
        Check::holds("regime_invariants", regime_invariants_hold(&sol)),
    ];
    Ok(Outcome {
        stdout: rendered.clone(),
        files: vec![("scatter.json".into(), rendered)],
        checks,
        summary: record,
    })
}

pub fn run_sweep(config: &ScenarioConfig) -> Result<Outcome, CliError> {
    let params = config.sweep.expect("validated");
    let units = config.units;
    let v0_values = params.v0_values();
    let entries = scattering::sweep_reflectivity(params.energy, &v0_values, &units).map_err(scattering_error)?;

    let mut table = String::from("V0,R,T,regime,error\n");
    let mut worst_sum = 0.0f64;
    let mut worst_flux = 0.0f64;
    let mut invariants = true;
    let mut failures = 0usize;
    for entry in &entries {
        match &entry.outcome {
            Ok(sol) => {
                let d = scattering::plane_wave_densities(sol, Complex64::new(1.0, 0.0), &units);
                worst_sum = worst_sum.max((sol.reflectivity + sol.transmissivity - 1.0).abs());
                worst_flux = worst_flux.max(d.flux_residual());
                invariants &= regime_invariants_hold(sol);
                let _ = writeln!(
                    table,
                    "{},{},{},{},",
                    num(entry.v0),
                    num(sol.reflectivity),
                    num(sol.transmissivity),
                    sol.regime
                );
            }
            Err(e) => {
                failures += 1;
                let regime = scattering::classify_regime(params.energy, entry.v0, &units)
                    .map(|r| r.to_string())
                    .unwrap_or_default();
                let _ = writeln!(
                    table,
                    "{},,,{},{}",
                    num(entry.v0),
                    regime,
                    e.to_string().replace(',', ";")
                );
            }
        }
    }
    let mut summary = Record::new();
    summary
        .number("E", params.energy)
        .number("rows", entries.len() as f64)
        .number("failed_rows", failures as f64);
    Ok(Outcome {
        stdout: table.clone(),
        files: vec![("sweep.csv".into(), table)],
        checks: vec![
            Check::at_most("reflectivity_plus_transmissivity", worst_sum, 1e-12),
            Check::at_most("flux_balance", worst_flux, 1e-12),
            Check::holds("regime_invariants", invariants),
        ],
        summary,
    })
}

pub fn run_evolve(config: &ScenarioConfig, snapshots: Option<usize>) -> Result<Outcome, CliError> {
    let params = config.evolve.expect("validated");
    let sim = SimulationConfig {
        packet: config.wavepacket.expect("validated"),
        potential: config.potential_or_free(),
        grid: config.grid.expect("validated"),
        units: config.units,
        t_final: params.t_final,
        dt: params.dt,
        record_every: params.record_every,
        snapshot_every: snapshots.or(params.snapshot_every),
        absorbing: params.absorbing,
    };
    if sim.snapshot_every == Some(0) {
        return Err(CliError::Config("--snapshots must be at least 1".into()));
    }
    let (steps, dt_effective) = evolution::step_schedule(sim.t_final, sim.dt).map_err(evolution_error)?;
    let record = evolution::run_simulation(&sim).map_err(evolution_error)?;

    let mut series = String::from("t,Q_total,Q_left,Q_right,max_abs_psi\n");
    for k in 0..record.len() {
        let _ = writeln!(
            series,
            "{},{},{},{},{}",
            num(record.times[k]),
            num(record.q_total[k]),
            num(record.q_left[k]),
            num(record.q_right[k]),
            num(record.max_abs_psi[k])
        );
    }
    let mut files = vec![("timeseries.csv".to_string(), series)];
    if !record.snapshots.is_empty() {
        let mut index = String::from("file,t\n");
        for (i, snap) in record.snapshots.iter().enumerate() {
            let name = format!("snapshot_{i:05}.csv");
            let _ = writeln!(index, "{name},{}", num(snap.time));
            files.push((name, snapshot_table(&snap.field)));
        }
        files.push(("snapshot_index.csv".into(), index));
    }

    let q0 = record.q_total[0];
    let last = record.len() - 1;
    let split = (0..record.len())
        .map(|k| (record.q_total[k] - record.q_left[k] - record.q_right[k]).abs() / q0.abs())
        .fold(0.0, f64::max);
    let drift = record.charge_drift();
    let mut summary = Record::new();
    summary
        .number("steps", steps as f64)
        .number("dt_effective", dt_effective)
        .number("Q_total_initial", q0)
        .number("Q_total_final", record.q_total[last])
        .number("Q_left_final", record.q_left[last])
        .number("Q_right_final", record.q_right[last])
        .number("charge_drift", drift);
    Ok(Outcome {
        stdout: summary.render(),
        files,
        checks: vec![
            Check::at_most("charge_drift", drift, 1e-6),
            Check::at_most("charge_split", split, 1e-12),
        ],
        summary,
    })
}

pub fn run_decompose(config: &ScenarioConfig) -> Result<Outcome, CliError> {
    let grid = config.grid.expect("validated");
    let units = config.units;
    let packet = config.wavepacket.expect("validated");
    let field = evolution::build_initial_wavepacket(&packet, &grid, &config.potential_or_free(), &units)
        .map_err(evolution_error)?;
    let zeros = vec![0.0; grid.n_points];
    let numerical = |e: fv::FvError| CliError::Numerical(e.to_string());
    let state = fv::recompose(&field, &zeros, &units).map_err(numerical)?;
    let again = fv::decompose(&state, &zeros, &units).map_err(numerical)?;
    let scale = field.phi().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let roundtrip = field
        .phi()
        .iter()
        .zip(again.phi())
        .chain(field.chi().iter().zip(again.chi()))
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
        / scale;

    let rho = fv::charge_density(&field);
    let charge = fv::total_charge(&rho, &grid);
    let ratio = fv::chi_phi_ratio(&field).map_err(numerical)?;
    let mut record = Record::new();
    record
        .number("total_charge", charge)
        .number("chi_phi_ratio", ratio)
        .number("roundtrip_error", roundtrip);
    Ok(Outcome {
        stdout: record.render(),
        files: vec![
            ("decompose.csv".into(), snapshot_table(&field)),
            ("decompose.json".into(), record.render()),
        ],
        checks: vec![
            Check::holds("positive_charge", charge > 0.0),
            Check::at_most("chi_phi_ratio_below_one", ratio, 1.0 - f64::EPSILON),
            Check::at_most("roundtrip", roundtrip, 1e-12),
        ],
        summary: record,
    })
}

type TestFunction = Box<dyn Fn(f64, f64) -> Complex64>;

fn epr_test_functions(sigma: f64, count: usize, seed: u64) -> Vec<TestFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<TestFunction> = vec![Box::new(epr::gaussian(0.0, 0.0, sigma))];
    for _ in 1..count {
        let c1 = rng.gen_range(-0.5..0.5) * sigma;
        let c2 = rng.gen_range(-0.5..0.5) * sigma;
        let width = sigma * rng.gen_range(0.8..1.2);
        out.push(Box::new(epr::gaussian(c1, c2, width)));
    }
    out
}

fn sampled_particle_field(wave: &scattering::PlaneWave, grid: &Grid1D, units: &Units) -> Result<fv::FVField, CliError> {
    let psi: Vec<Complex64> = grid.points().map(|x| wave.evaluate(x, 0.0, units)).collect();
    let factor = Complex64::new(0.0, -wave.label_energy() / units.hbar);
    let psi_dot = psi.iter().map(|z| factor * z).collect();
    let numerical = |e: fv::FvError| CliError::Numerical(e.to_string());
    let state = KGState::new(psi, psi_dot, *grid).map_err(numerical)?;
    fv::decompose(&state, &vec![0.0; grid.n_points], units).map_err(numerical)
}

pub fn run_epr_demo(config: &ScenarioConfig, refine: Option<usize>) -> Result<Outcome, CliError> {
    let params = config.epr.clone().expect("validated");
    let units = config.units;
    let pair = build_epr_pair(params.p1, &units, params.relation).map_err(epr_error)?;
    let grid = Grid1D::new(-params.half_width, params.half_width, params.n_points)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let functions = epr_test_functions(params.sigma, params.test_functions, params.seed);
    let refs: Vec<&dyn Fn(f64, f64) -> Complex64> = functions.iter().map(|f| f.as_ref()).collect();

    let separation_pair = (OperatorExpr::separation(), OperatorExpr::total_momentum());
    let opposite_pair = (OperatorExpr::position_sum(), OperatorExpr::relative_momentum());
    let control_pair = (
        OperatorExpr::new().plus(LinearOperator1D::position(1)),
        OperatorExpr::new().plus(LinearOperator1D::momentum(1)),
    );
    let residual = |(a, b): &(OperatorExpr, OperatorExpr)| commutator_residual(a, b, &grid, &refs, &units);
    let r_sep = residual(&separation_pair).map_err(epr_error)?;
    let r_opp = residual(&opposite_pair).map_err(epr_error)?;
    let r_ctl = residual(&control_pair).map_err(epr_error)?;

    let (p1_std, e1_std) = apply_standard_operators(&pair.wave1).map_err(epr_error)?;
    let (p2_obs, e2_obs) = apply_conjugate_operators(&pair.wave2).map_err(epr_error)?;
    let expected_p2 = match params.relation {
        EprRelation::OppositeMomentaFixedSeparation => p1_std,
        EprRelation::OppositePositionsFixedTotalMomentum => -p1_std,
    };
    let joint = pair.joint_momentum_eigenvalue();

    let inverted = pair.wave1.spacetime_inversion().map_err(epr_error)?;
    let plane_involution = inverted.spacetime_inversion().map_err(epr_error)? == pair.wave1;
    let field = sampled_particle_field(&pair.wave1, &grid, &units)?;
    let field_c = field.spacetime_inversion().map_err(epr_error)?;
    let field_back = field_c.spacetime_inversion().map_err(epr_error)?;
    let field_involution = field_back
        .phi()
        .iter()
        .zip(field.phi())
        .chain(field_back.chi().iter().zip(field.chi()))
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let master_before = field.phi().iter().zip(field.chi()).all(|(p, c)| p.norm() > c.norm());
    let master_after = field_c.phi().iter().zip(field_c.chi()).all(|(p, c)| c.norm() > p.norm());

    let mut text = String::new();
    let _ = writeln!(text, "EPR pair ({:?}), p1 = {}", params.relation, params.p1);
    let _ = writeln!(text, "  member        label p      label E      observed p   observed E");
    let _ = writeln!(
        text,
        "  particle      {:>11.6}  {:>11.6}  {:>11.6}  {:>11.6}",
        pair.wave1.label_momentum().re,
        pair.wave1.label_energy(),
        p1_std,
        e1_std
    );
    let _ = writeln!(
        text,
        "  antiparticle  {:>11.6}  {:>11.6}  {:>11.6}  {:>11.6}",
        pair.wave2.label_momentum().re,
        pair.wave2.label_energy(),
        p2_obs,
        e2_obs
    );
    let _ = writeln!(text, "  joint momentum eigenvalue: {joint}");
    let _ = writeln!(text, "Commutator residuals on {n}x{n} grid (dx = {:.6e})", grid.dx(), n = grid.n_points);
    let _ = writeln!(text, "  [x1 - x2, p1 + p2] = {r_sep:.6e}");
    let _ = writeln!(text, "  [x1 + x2, p1 - p2] = {r_opp:.6e}");
    let _ = writeln!(text, "  [x1, p1] (control) = {r_ctl:.6e}  (hbar = {})", units.hbar);
    let _ = writeln!(
        text,
        "Space-time inversion: plane wave involution {}, field involution max error {:.3e}, master swap {}",
        plane_involution,
        field_involution,
        master_before && master_after
    );

    let mut record = Record::new();
    record
        .number("p1", params.p1)
        .number("particle_label_p", pair.wave1.label_momentum().re)
        .number("particle_label_E", pair.wave1.label_energy())
        .number("particle_observed_p", p1_std)
        .number("particle_observed_E", e1_std)
        .number("antiparticle_label_p", pair.wave2.label_momentum().re)
        .number("antiparticle_label_E", pair.wave2.label_energy())
        .number("antiparticle_observed_p", p2_obs)
        .number("antiparticle_observed_E", e2_obs)
        .number("joint_momentum_eigenvalue", joint)
        .number("n_points", grid.n_points as f64)
        .number("dx", grid.dx())
        .number("residual_separation_total_momentum", r_sep)
        .number("residual_sum_relative_momentum", r_opp)
        .number("residual_control", r_ctl)
        .boolean("plane_wave_involution", plane_involution)
        .number("field_involution_error", field_involution)
        .boolean("master_swap", master_before && master_after);

    let mut checks = vec![
        Check::holds("observed_values_match", p2_obs == expected_p2 && e2_obs == e1_std),
        Check::at_most("joint_momentum_eigenvalue", joint.abs(), 0.0),
        Check::at_most("control_residual_is_hbar", (r_ctl / units.hbar - 1.0).abs(), 0.05),
        Check::holds("plane_wave_involution", plane_involution),
        Check::at_most("field_involution", field_involution, 1e-12),
        Check::holds("master_swap", master_before && master_after),
    ];

    let levels = refine.or(params.refine).unwrap_or(0);
    if levels > 0 {
        let _ = writeln!(text, "Refinement (dx halved per level)");
        for (label, (a, b)) in [("separation", &separation_pair), ("opposite", &opposite_pair)] {
            let study = refinement_study(a, b, params.half_width, params.n_points, levels, &refs, &units)
                .map_err(epr_error)?;
            for (k, level) in study.iter().enumerate() {
                let ratio = if k == 0 {
                    f64::NAN
                } else {
                    study[k - 1].residual / level.residual
                };
                let shown = if k == 0 { "-".to_string() } else { format!("{ratio:.3}") };
                let _ = writeln!(
                    text,
                    "  {label:<10} n = {:>5}  dx = {:.4e}  residual = {:.6e}  ratio = {shown}",
                    level.n_points, level.dx, level.residual
                );
                record.number(&format!("refine_{label}_{k}_residual"), level.residual);
                if k > 0 {
                    checks.push(Check::at_most(
                        &format!("refine_{label}_{k}_second_order"),
                        (ratio - 4.0).abs(),
                        0.5,
                    ));
                }
            }
        }
    }

    let machine = record.render();
    let stdout = format!("{text}\n{machine}");
    Ok(Outcome {
        stdout,
        files: vec![("epr_report.txt".into(), text), ("epr_report.json".into(), machine)],
        checks,
        summary: record,
    })
}
