//! Plane-wave scattering off the potential step V(x) = V0·Θ(x).
//!
//! An incident wave a·e^{i(px−Et)/ħ} arrives from the left. Matching ψ and ψ′
//! at x = 0 gives b/a = (p − p′)/(p + p′) and b′/a = 2p/(p + p′). Above the
//! step the transmitted momentum p′ takes the branch whose current has the
//! same sign as the local charge: in the Klein zone V0 > E + mc² that forces
//! p′ < 0, so the reflected flux exceeds the incident flux (R > 1) and the
//! transmitted charge is negative.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{momentum_from_energy, Units};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScatteringError {
    #[error("E below rest energy: E = {energy} must exceed mc² = {rest_energy}")]
    BelowRestEnergy { energy: f64, rest_energy: f64 },
    #[error("degenerate matching: p + p' = 0 at E = {energy}, V0 = {v0}")]
    Singular { energy: f64, v0: f64 },
    #[error("transmitted wave can only be relabeled in the Klein zone (regime is {0})")]
    NotKleinZone(Regime),
    #[error("non-finite input: E = {energy}, V0 = {v0}")]
    NonFinite { energy: f64, v0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WaveKind {
    Particle,
    Antiparticle,
}

/// A plane wave.
///
/// A `Particle` reads `a·exp[+i(px − Et)/ħ]`. An `Antiparticle` reads
/// `a·exp[−i(px − Et)/ħ]`, with `momentum` and `energy` holding the observed
/// values; the exponent labels are then (−p, −E).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWave {
    pub amplitude: Complex64,
    pub momentum: Complex64,
    pub energy: f64,
    pub kind: WaveKind,
}

impl PlaneWave {
    pub fn particle(amplitude: Complex64, momentum: f64, energy: f64) -> Self {
        PlaneWave {
            amplitude,
            momentum: Complex64::new(momentum, 0.0),
            energy,
            kind: WaveKind::Particle,
        }
    }

    pub fn antiparticle(amplitude: Complex64, momentum: f64, energy: f64) -> Self {
        PlaneWave {
            amplitude,
            momentum: Complex64::new(momentum, 0.0),
            energy,
            kind: WaveKind::Antiparticle,
        }
    }

    fn sign(&self) -> f64 {
        match self.kind {
            WaveKind::Particle => 1.0,
            WaveKind::Antiparticle => -1.0,
        }
    }

    /// Momentum as it appears in the exponent `exp[i(k x − ω t)/ħ]`.
    pub fn label_momentum(&self) -> Complex64 {
        self.sign() * self.momentum
    }

    /// Energy as it appears in the exponent `exp[i(k x − ω t)/ħ]`.
    pub fn label_energy(&self) -> f64 {
        self.sign() * self.energy
    }

    pub fn evaluate(&self, x: f64, t: f64, units: &Units) -> Complex64 {
        let i = Complex64::new(0.0, 1.0);
        let exponent = i * (self.label_momentum() * x - self.label_energy() * t) / units.hbar;
        self.amplitude * exponent.exp()
    }

    pub fn is_finite(&self) -> bool {
        [self.amplitude.re, self.amplitude.im, self.momentum.re, self.momentum.im, self.energy]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Step height V0 for x > 0; zero for x < 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPotential {
    pub v0: f64,
}

impl StepPotential {
    pub fn at(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            self.v0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// V0 < E − mc²: propagating transmitted particle.
    Transmission,
    /// E − mc² ≤ V0 ≤ E + mc²: decaying transmitted wave, total reflection.
    Evanescent,
    /// V0 > E + mc²: oscillating transmitted wave with negative charge.
    KleinZone,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Regime::Transmission => "Transmission",
            Regime::Evanescent => "Evanescent",
            Regime::KleinZone => "KleinZone",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringSolution {
    pub energy: f64,
    pub v0: f64,
    pub p: f64,
    pub p_prime: Complex64,
    pub b_over_a: Complex64,
    pub bprime_over_a: Complex64,
    /// |b/a|².
    pub reflectivity: f64,
    /// Flux ratio Re(j_t)/j_i. Negative in the Klein zone.
    pub transmissivity: f64,
    pub regime: Regime,
}

impl ScatteringSolution {
    /// Reflected wave b·e^{i(−px − Et)/ħ} for incident amplitude `a`.
    pub fn reflected_wave(&self, a: Complex64) -> PlaneWave {
        PlaneWave::particle(a * self.b_over_a, -self.p, self.energy)
    }

    pub fn incident_wave(&self, a: Complex64) -> PlaneWave {
        PlaneWave::particle(a, self.p, self.energy)
    }

    /// Transmitted wave b′·e^{i(p′x − E t)/ħ} at global energy E.
    pub fn transmitted_wave(&self, a: Complex64) -> PlaneWave {
        PlaneWave {
            amplitude: a * self.bprime_over_a,
            momentum: self.p_prime,
            energy: self.energy,
            kind: WaveKind::Particle,
        }
    }
}

fn check_incident(energy: f64, v0: f64, units: &Units) -> Result<(), ScatteringError> {
    if !(energy.is_finite() && v0.is_finite()) {
        return Err(ScatteringError::NonFinite { energy, v0 });
    }
    let rest_energy = units.rest_energy();
    if energy <= rest_energy {
        return Err(ScatteringError::BelowRestEnergy {
            energy,
            rest_energy,
        });
    }
    Ok(())
}

pub fn classify_regime(energy: f64, v0: f64, units: &Units) -> Result<Regime, ScatteringError> {
    check_incident(energy, v0, units)?;
    let mc2 = units.rest_energy();
    Ok(if v0 < energy - mc2 {
        Regime::Transmission
    } else if v0 > energy + mc2 {
        Regime::KleinZone
    } else {
        Regime::Evanescent
    })
}

/// Transmitted momentum on the physical branch for each regime.
pub fn select_branch(energy: f64, v0: f64, units: &Units) -> Result<Complex64, ScatteringError> {
    let regime = classify_regime(energy, v0, units)?;
    let principal = momentum_from_energy(energy, v0, units);
    Ok(match regime {
        Regime::Transmission | Regime::Evanescent => principal,
        Regime::KleinZone => -principal,
    })
}

pub fn solve_step(energy: f64, v0: f64, units: &Units) -> Result<ScatteringSolution, ScatteringError> {
    let regime = classify_regime(energy, v0, units)?;
    let p_prime = select_branch(energy, v0, units)?;
    let p = momentum_from_energy(energy, 0.0, units).re;
    let denom = p + p_prime;
    if denom.norm() <= 1e-12 * p {
        return Err(ScatteringError::Singular { energy, v0 });
    }
    let b_over_a = (p - p_prime) / denom;
    let bprime_over_a = 2.0 * p / denom;
    Ok(ScatteringSolution {
        energy,
        v0,
        p,
        p_prime,
        b_over_a,
        bprime_over_a,
        reflectivity: b_over_a.norm_sqr(),
        transmissivity: p_prime.re * bprime_over_a.norm_sqr() / p,
        regime,
    })
}

/// Charge densities and currents of the incident, reflected and transmitted waves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWaveDensities {
    pub rho_i: f64,
    pub j_i: f64,
    pub rho_r: f64,
    pub j_r: f64,
    pub rho_t: f64,
    pub j_t: f64,
}

impl PlaneWaveDensities {
    /// |j_i + j_r − j_t|, relative to the largest flux involved.
    pub fn flux_residual(&self) -> f64 {
        let scale = self.j_i.abs().max(self.j_r.abs()).max(self.j_t.abs());
        if scale == 0.0 {
            return 0.0;
        }
        (self.j_i + self.j_r - self.j_t).abs() / scale
    }
}

pub fn plane_wave_densities(sol: &ScatteringSolution, a: Complex64, units: &Units) -> PlaneWaveDensities {
    let mc2 = units.rest_energy();
    let a2 = a.norm_sqr();
    let b2 = (a * sol.b_over_a).norm_sqr();
    let bp2 = (a * sol.bprime_over_a).norm_sqr();
    PlaneWaveDensities {
        rho_i: sol.energy / mc2 * a2,
        j_i: sol.p / units.m * a2,
        rho_r: sol.energy / mc2 * b2,
        j_r: -sol.p / units.m * b2,
        rho_t: (sol.energy - sol.v0) / mc2 * bp2,
        j_t: sol.p_prime.re / units.m * bp2,
    }
}

/// Rewrites the Klein-zone transmitted wave as an antiparticle with local
/// energy |E − V0| and momentum |p′|, both measured from the step's potential.
pub fn relabel_transmitted(sol: &ScatteringSolution, a: Complex64) -> Result<PlaneWave, ScatteringError> {
    if sol.regime != Regime::KleinZone {
        return Err(ScatteringError::NotKleinZone(sol.regime));
    }
    Ok(PlaneWave::antiparticle(
        a * sol.bprime_over_a,
        sol.p_prime.re.abs(),
        sol.v0 - sol.energy,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub v0: f64,
    pub outcome: Result<ScatteringSolution, ScatteringError>,
}

/// Solves every step height independently; failures stay in their own entry.
pub fn sweep_reflectivity(energy: f64, v0_list: &[f64], units: &Units) -> Result<Vec<SweepEntry>, ScatteringError> {
    check_incident(energy, 0.0, units)?;
    Ok(v0_list
        .iter()
        .map(|&v0| SweepEntry {
            v0,
            outcome: solve_step(energy, v0, units),
        })
        .collect())
}
