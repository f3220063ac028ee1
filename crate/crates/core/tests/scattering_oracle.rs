use kgfv::epr::apply_conjugate_operators;
use kgfv::scattering::{
    classify_regime, plane_wave_densities, relabel_transmitted, solve_step, sweep_reflectivity, Regime,
    ScatteringError, WaveKind,
};
use kgfv::Units;
use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Transmitted momentum chosen from the sign of the transmitted current.
fn oracle_p_prime(energy: f64, v0: f64, u: &Units) -> Complex64 {
    let mc2 = u.rest_energy();
    let arg = ((energy - v0).powi(2) - mc2 * mc2) / (u.c * u.c);
    if arg > 0.0 {
        let k = arg.sqrt();
        if v0 > energy + mc2 {
            Complex64::new(-k, 0.0)
        } else {
            Complex64::new(k, 0.0)
        }
    } else {
        Complex64::new(0.0, (-arg).sqrt())
    }
}

/// Continuity of ψ and ψ' at the step, solved as a 2×2 linear system in (b, b').
fn oracle_amplitudes(p: f64, p_prime: Complex64) -> Option<(Complex64, Complex64)> {
    let one = Complex64::new(1.0, 0.0);
    let pc = Complex64::new(p, 0.0);
    let m = Matrix2::new(one, -one, -pc, -p_prime);
    let rhs = Vector2::new(-one, -pc);
    let x = m.lu().solve(&rhs)?;
    Some((x[0], x[1]))
}

#[test]
fn matches_independent_boundary_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 100 {
        let units = Units::new(rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0)).unwrap();
        let mc2 = units.rest_energy();
        let energy = mc2 * rng.gen_range(1.01..5.0);
        let v0 = mc2 * rng.gen_range(-2.0..12.0);
        let sol = match solve_step(energy, v0, &units) {
            Ok(s) => s,
            Err(ScatteringError::Singular { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        let pp = oracle_p_prime(energy, v0, &units);
        assert!((sol.p_prime - pp).norm() <= 1e-10 * (1.0 + pp.norm()));
        let p = (energy * energy - mc2 * mc2).sqrt() / units.c;
        assert!((sol.p - p).abs() <= 1e-12 * p);
        let (b, bp) = oracle_amplitudes(p, pp).unwrap();
        assert!((sol.b_over_a - b).norm() <= 1e-10 * (1.0 + b.norm()), "{sol:?} vs {b}");
        assert!((sol.bprime_over_a - bp).norm() <= 1e-10 * (1.0 + bp.norm()));
        checked += 1;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn regimes_and_flux(e_ratio in 1.0001f64..5.0, v_ratio in -3.0f64..15.0) {
        let units = Units::default();
        let energy = e_ratio;
        let v0 = v_ratio;
        let sol = match solve_step(energy, v0, &units) {
            Ok(s) => s,
            Err(ScatteringError::Singular { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert!((sol.reflectivity + sol.transmissivity - 1.0).abs() <= 1e-12 * sol.reflectivity.max(1.0));
        match sol.regime {
            Regime::Transmission => prop_assert!(sol.reflectivity < 1.0),
            Regime::KleinZone => prop_assert!(sol.reflectivity > 1.0),
            Regime::Evanescent => prop_assert!((sol.reflectivity - 1.0).abs() <= 1e-12),
        }
        let d = plane_wave_densities(&sol, Complex64::new(1.0, 0.0), &units);
        prop_assert!(d.flux_residual() <= 1e-12);
        // transmitted charge and flux carry the same sign
        if sol.regime != Regime::Evanescent {
            prop_assert!(d.rho_t * d.j_t > 0.0);
        }
    }
}

#[test]
fn relabeled_wave_is_the_transmitted_wave_in_the_step_frame() {
    let units = Units::default();
    let sol = solve_step(1.25, 3.0, &units).unwrap();
    let a = Complex64::new(0.7, -0.2);
    let transmitted = sol.transmitted_wave(a);
    let relabeled = relabel_transmitted(&sol, a).unwrap();
    assert_eq!(relabeled.kind, WaveKind::Antiparticle);
    for &(x, t) in &[(0.0, 0.0), (1.3, 0.0), (-2.0, 4.5), (7.1, -3.3)] {
        // energy measured from the step top adds the gauge phase e^{iV0 t/ħ}
        let gauge = Complex64::from_polar(1.0, sol.v0 * t / units.hbar);
        let lhs = relabeled.evaluate(x, t, &units);
        let rhs = transmitted.evaluate(x, t, &units) * gauge;
        assert!((lhs - rhs).norm() < 1e-12, "{lhs} vs {rhs}");
    }
    let (p, e) = apply_conjugate_operators(&relabeled).unwrap();
    assert!(p > 0.0 && e > 0.0);
}

#[test]
fn relabel_refuses_other_regimes() {
    let units = Units::default();
    let sol = solve_step(1.25, 0.1, &units).unwrap();
    assert!(matches!(
        relabel_transmitted(&sol, Complex64::new(1.0, 0.0)),
        Err(ScatteringError::NotKleinZone(Regime::Transmission))
    ));
}

#[test]
fn sweep_regimes_come_in_order() {
    let units = Units::default();
    let v0: Vec<f64> = (0..9).map(|k| 0.5 * k as f64).collect();
    let rows = sweep_reflectivity(1.25, &v0, &units).unwrap();
    assert_eq!(rows.len(), 9);
    let regimes: Vec<Regime> = v0.iter().map(|&v| classify_regime(1.25, v, &units).unwrap()).collect();
    let rank = |r: &Regime| match r {
        Regime::Transmission => 0,
        Regime::Evanescent => 1,
        Regime::KleinZone => 2,
    };
    assert!(regimes.windows(2).all(|w| rank(&w[0]) <= rank(&w[1])));
    assert_eq!(regimes[0], Regime::Transmission);
    assert_eq!(regimes[8], Regime::KleinZone);
    for (row, regime) in rows.iter().zip(&regimes) {
        if let Ok(sol) = &row.outcome {
            assert_eq!(sol.regime, *regime);
        }
    }
}
