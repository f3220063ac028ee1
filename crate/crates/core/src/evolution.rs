//! Time evolution of the coupled (φ, χ) system
//!
//! ```text
//! iħ ∂φ/∂t = (mc² + V)φ − (ħ²/2m)∇²(φ + χ)
//! iħ ∂χ/∂t = −(mc² − V)χ + (ħ²/2m)∇²(φ + χ)
//! ```
//!
//! discretized with three-point differences and Crank-Nicolson in time, with
//! φ = χ = 0 on the two end nodes. The Hamiltonian is self-adjoint in the
//! indefinite metric diag(1, −1), so its Cayley transform conserves the
//! discrete charge Σ(|φ|² − |χ|²)dx exactly, up to round-off in the solve.
//!
//! In the variables ψ = φ + χ and ξ = φ − χ the implicit step eliminates down
//! to a single complex tridiagonal system for ψ.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fv::{self, FVField, FvError, KGState};
use crate::grid::Grid1D;
use crate::units::Units;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error("invalid wavepacket: {0}")]
    InvalidPacket(String),
    #[error("grid under-resolves the packet: dx = {dx} must be below {limit} ({reason})")]
    Underresolved {
        dx: f64,
        limit: f64,
        reason: &'static str,
    },
    #[error("packet at x0 = {x0} overlaps the step at {center} (need x0 < center − 5σ = {limit})")]
    PacketOverlapsStep { x0: f64, center: f64, limit: f64 },
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("time step dt = {dt} exceeds the stability bound {max_dt}")]
    Unstable { dt: f64, max_dt: f64 },
    #[error("invalid time parameters: {0}")]
    InvalidTime(String),
    #[error("non-finite field after step {step} (t = {time})")]
    NonFinite { step: usize, time: f64 },
    #[error(transparent)]
    Field(#[from] FvError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    SharpStep,
    SmoothStep,
}

/// Step-shaped potential centred at `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialProfile {
    pub kind: PotentialKind,
    #[serde(rename = "V0")]
    pub v0: f64,
    /// Logistic width; ignored by `SharpStep`.
    #[serde(default)]
    pub width: f64,
    #[serde(default)]
    pub center: f64,
}

impl PotentialProfile {
    pub fn free() -> Self {
        PotentialProfile::sharp(0.0, 0.0)
    }

    pub fn sharp(v0: f64, center: f64) -> Self {
        PotentialProfile {
            kind: PotentialKind::SharpStep,
            v0,
            width: 0.0,
            center,
        }
    }

    pub fn smooth(v0: f64, width: f64, center: f64) -> Self {
        PotentialProfile {
            kind: PotentialKind::SmoothStep,
            v0,
            width,
            center,
        }
    }

    pub fn validate(&self) -> Result<(), EvolutionError> {
        if !(self.v0.is_finite() && self.center.is_finite()) {
            return Err(EvolutionError::InvalidPotential(
                "V0 and center must be finite".into(),
            ));
        }
        if self.kind == PotentialKind::SmoothStep && !(self.width.is_finite() && self.width > 0.0) {
            return Err(EvolutionError::InvalidPotential(format!(
                "smooth step width must be positive, got {}",
                self.width
            )));
        }
        Ok(())
    }

    pub fn at(&self, x: f64) -> f64 {
        match self.kind {
            PotentialKind::SharpStep => {
                if x < self.center {
                    0.0
                } else {
                    self.v0
                }
            }
            PotentialKind::SmoothStep => {
                let s = (x - self.center) / self.width;
                // logistic, evaluated without overflow on either side
                if s >= 0.0 {
                    self.v0 / (1.0 + (-s).exp())
                } else {
                    let e = s.exp();
                    self.v0 * e / (1.0 + e)
                }
            }
        }
    }

    /// The profile actually used on `grid`: a sharp step becomes a logistic
    /// step of width 2·dx.
    pub fn regularized(&self, grid: &Grid1D) -> PotentialProfile {
        match self.kind {
            PotentialKind::SharpStep if self.v0 != 0.0 => {
                PotentialProfile::smooth(self.v0, 2.0 * grid.dx(), self.center)
            }
            _ => *self,
        }
    }

    pub fn sample(&self, grid: &Grid1D) -> Vec<f64> {
        let profile = self.regularized(grid);
        grid.points().map(|x| profile.at(x)).collect()
    }
}

/// Gaussian envelope times a plane wave of momentum `p0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WavepacketSpec {
    pub x0: f64,
    pub sigma: f64,
    pub p0: f64,
    pub amplitude: f64,
}

impl WavepacketSpec {
    pub fn validate(&self, grid: &Grid1D, potential: &PotentialProfile, units: &Units) -> Result<(), EvolutionError> {
        if !(self.x0.is_finite() && self.p0.is_finite()) {
            return Err(EvolutionError::InvalidPacket("x0 and p0 must be finite".into()));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(EvolutionError::InvalidPacket(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(EvolutionError::InvalidPacket(format!(
                "amplitude must be positive, got {}",
                self.amplitude
            )));
        }
        let dx = grid.dx();
        let sigma_limit = self.sigma / 8.0;
        if dx >= sigma_limit {
            return Err(EvolutionError::Underresolved {
                dx,
                limit: sigma_limit,
                reason: "sigma/8",
            });
        }
        if self.p0 != 0.0 {
            let limit = units.hbar / (4.0 * self.p0.abs());
            if dx >= limit {
                return Err(EvolutionError::Underresolved {
                    dx,
                    limit,
                    reason: "hbar/(4|p0|)",
                });
            }
        }
        let reach = 5.0 * self.sigma;
        if self.x0 - reach <= grid.x_min || self.x0 + reach >= grid.x_max {
            return Err(EvolutionError::InvalidPacket(format!(
                "packet x0 = {} ± 5σ does not fit inside [{}, {}]",
                self.x0, grid.x_min, grid.x_max
            )));
        }
        if potential.v0 != 0.0 && self.x0 >= potential.center - reach {
            return Err(EvolutionError::PacketOverlapsStep {
                x0: self.x0,
                center: potential.center,
                limit: potential.center - reach,
            });
        }
        if self.sigma * self.p0.abs() / units.hbar < 3.0 {
            log::warn!(
                "momentum resolution sigma·p0/hbar = {:.3} is below 3; the packet has a broad energy spread",
                self.sigma * self.p0.abs() / units.hbar
            );
        }
        Ok(())
    }
}

/// Positive-energy Gaussian packet as an (φ, χ) field.
///
/// ψ̇ is obtained mode by mode in Fourier space, each mode oscillating at
/// −E(k)/ħ with the dispersion of the three-point Laplacian, so the packet
/// contains no negative-frequency admixture on the integrator's own grid.
pub fn build_initial_wavepacket(
    spec: &WavepacketSpec,
    grid: &Grid1D,
    potential: &PotentialProfile,
    units: &Units,
) -> Result<FVField, EvolutionError> {
    spec.validate(grid, potential, units)?;
    let n = grid.n_points;
    let dx = grid.dx();
    let psi: Vec<Complex64> = grid
        .points()
        .map(|x| {
            let d = x - spec.x0;
            let envelope = spec.amplitude * (-d * d / (4.0 * spec.sigma * spec.sigma)).exp();
            Complex64::from_polar(envelope, spec.p0 * x / units.hbar)
        })
        .collect();

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut spectrum = psi.clone();
    forward.process(&mut spectrum);
    let period = n as f64 * dx;
    let mc2 = units.rest_energy();
    for (j, amp) in spectrum.iter_mut().enumerate() {
        let mode = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
        let k = 2.0 * std::f64::consts::PI * mode / period;
        let kappa = 2.0 / dx * (0.5 * k * dx).sin();
        let hbar_c_kappa = units.hbar * units.c * kappa;
        let energy = (mc2 * mc2 + hbar_c_kappa * hbar_c_kappa).sqrt();
        *amp *= Complex64::new(0.0, -energy / units.hbar) / n as f64;
    }
    inverse.process(&mut spectrum);

    let state = KGState::new(psi, spectrum, *grid)?;
    Ok(fv::decompose(&state, &vec![0.0; n], units)?)
}

/// Largest admissible step: dt·(mc² + max|V|)/ħ ≤ 1. Below it the implicit
/// system is strictly diagonally dominant and hence safely solvable without
/// pivoting.
pub fn max_stable_dt(v: &[f64], units: &Units) -> f64 {
    let v_max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    units.hbar / (units.rest_energy() + v_max)
}

/// Crank-Nicolson stepper with the tridiagonal factorization cached.
#[derive(Debug, Clone)]
pub struct CrankNicolson {
    grid: Grid1D,
    units: Units,
    potential: Vec<f64>,
    dt: f64,
    tau: f64,
    /// ħ²/(2m dx²)
    kinetic: f64,
    off_diag: Complex64,
    c_prime: Vec<Complex64>,
    inv_pivot: Vec<Complex64>,
    mask: Option<Vec<f64>>,
    psi: Vec<Complex64>,
    xi: Vec<Complex64>,
    rhs: Vec<Complex64>,
}

impl CrankNicolson {
    pub fn new(grid: &Grid1D, potential: &PotentialProfile, dt: f64, units: &Units) -> Result<Self, EvolutionError> {
        potential.validate()?;
        Self::with_samples(grid, potential.sample(grid), dt, units)
    }

    pub fn with_samples(grid: &Grid1D, potential: Vec<f64>, dt: f64, units: &Units) -> Result<Self, EvolutionError> {
        if potential.len() != grid.n_points {
            return Err(FvError::GridMismatch {
                what: "potential",
                expected: grid.n_points,
                found: potential.len(),
            }
            .into());
        }
        if grid.n_points < 4 {
            return Err(FvError::GridTooSmall {
                required: 4,
                found: grid.n_points,
            }
            .into());
        }
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(EvolutionError::InvalidPotential("non-finite sample".into()));
        }
        let max_dt = max_stable_dt(&potential, units);
        if !(dt.is_finite() && dt > 0.0) || dt > max_dt {
            return Err(EvolutionError::Unstable { dt, max_dt });
        }

        let n = grid.n_points;
        let dx = grid.dx();
        let tau = dt / (2.0 * units.hbar);
        let mc2 = units.rest_energy();
        let kinetic = units.hbar * units.hbar / (2.0 * units.m * dx * dx);
        let off_diag = Complex64::new(-2.0 * kinetic * tau * tau * mc2, 0.0);

        // Thomas forward sweep over the n − 2 interior nodes
        let m = n - 2;
        let mut c_prime = vec![Complex64::new(0.0, 0.0); m];
        let mut inv_pivot = vec![Complex64::new(0.0, 0.0); m];
        for i in 0..m {
            let one_plus = Complex64::new(1.0, tau * potential[i + 1]);
            let diag = one_plus * one_plus + tau * tau * mc2 * (mc2 + 4.0 * kinetic);
            let pivot = if i == 0 {
                diag
            } else {
                diag - off_diag * c_prime[i - 1]
            };
            inv_pivot[i] = pivot.inv();
            c_prime[i] = off_diag * inv_pivot[i];
        }

        Ok(CrankNicolson {
            grid: *grid,
            units: *units,
            potential,
            dt,
            tau,
            kinetic,
            off_diag,
            c_prime,
            inv_pivot,
            mask: None,
            psi: vec![Complex64::new(0.0, 0.0); n],
            xi: vec![Complex64::new(0.0, 0.0); n],
            rhs: vec![Complex64::new(0.0, 0.0); m],
        })
    }

    /// Damps the field in the outer 10% of the grid on each side after every step.
    pub fn with_absorbing_layers(mut self) -> Self {
        let n = self.grid.n_points;
        let layer = self.grid.length() * 0.1;
        let rate = 10.0 * self.units.c / layer;
        let mask = self
            .grid
            .points()
            .map(|x| {
                let depth = ((self.grid.x_min + layer - x).max(x - (self.grid.x_max - layer)) / layer).max(0.0);
                (-rate * self.dt * depth * depth).exp()
            })
            .collect::<Vec<_>>();
        debug_assert_eq!(mask.len(), n);
        self.mask = Some(mask);
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Advances `field` by one step in place.
    pub fn step(&mut self, field: &mut FVField) -> Result<(), EvolutionError> {
        if field.grid != self.grid {
            return Err(FvError::GridMismatch {
                what: "field",
                expected: self.grid.n_points,
                found: field.grid.n_points,
            }
            .into());
        }
        let n = self.grid.n_points;
        let tau = self.tau;
        let mc2 = self.units.rest_energy();
        let i_tau = Complex64::new(0.0, tau);
        let zero = Complex64::new(0.0, 0.0);

        for k in 0..n {
            self.psi[k] = field.phi[k] + field.chi[k];
            self.xi[k] = field.phi[k] - field.chi[k];
        }
        self.psi[0] = zero;
        self.xi[0] = zero;
        self.psi[n - 1] = zero;
        self.xi[n - 1] = zero;

        // (1 + iτV) r1 − iτmc² r2 with r = (I − iτH) u
        for k in 1..n - 1 {
            let psi = self.psi[k];
            let xi = self.xi[k];
            let two_a_psi = -2.0 * self.kinetic * (self.psi[k + 1] - 2.0 * psi + self.psi[k - 1]);
            let one_minus = Complex64::new(1.0, -tau * self.potential[k]);
            let one_plus = Complex64::new(1.0, tau * self.potential[k]);
            let r1 = one_minus * psi - i_tau * mc2 * xi;
            let r2 = -i_tau * (mc2 * psi + two_a_psi) + one_minus * xi;
            // ξ⁺ needs r1 again after the solve; stash it in xi
            self.xi[k] = r1;
            self.rhs[k - 1] = one_plus * r1 - i_tau * mc2 * r2;
        }

        let m = n - 2;
        // forward substitution
        self.rhs[0] *= self.inv_pivot[0];
        for i in 1..m {
            let prev = self.rhs[i - 1];
            self.rhs[i] = (self.rhs[i] - self.off_diag * prev) * self.inv_pivot[i];
        }
        // back substitution
        for i in (0..m - 1).rev() {
            let next = self.rhs[i + 1];
            self.rhs[i] -= self.c_prime[i] * next;
        }

        let inv_coupling = (i_tau * mc2).inv();
        field.phi[0] = zero;
        field.chi[0] = zero;
        field.phi[n - 1] = zero;
        field.chi[n - 1] = zero;
        for k in 1..n - 1 {
            let psi = self.rhs[k - 1];
            let one_plus = Complex64::new(1.0, tau * self.potential[k]);
            let xi = (self.xi[k] - one_plus * psi) * inv_coupling;
            field.phi[k] = 0.5 * (psi + xi);
            field.chi[k] = 0.5 * (psi - xi);
        }
        if let Some(mask) = &self.mask {
            for ((p, c), &m) in field.phi.iter_mut().zip(field.chi.iter_mut()).zip(mask) {
                *p *= m;
                *c *= m;
            }
        }
        Ok(())
    }
}

/// Advances `field` by a single Crank-Nicolson step of length `dt`.
pub fn step_evolve(
    field: &FVField,
    potential: &PotentialProfile,
    dt: f64,
    units: &Units,
) -> Result<FVField, EvolutionError> {
    let mut stepper = CrankNicolson::new(&field.grid, potential, dt, units)?;
    let mut next = field.clone();
    stepper.step(&mut next)?;
    if !next.is_finite() {
        return Err(EvolutionError::NonFinite { step: 1, time: dt });
    }
    Ok(next)
}

/// Charge-weighted mean position ∫xρ dx / ∫ρ dx.
pub fn charge_centroid(field: &FVField) -> f64 {
    let rho = fv::charge_density(field);
    let w = field.grid.trapezoid_weights();
    let (mut num, mut den) = (0.0, 0.0);
    for (k, x) in field.grid.points().enumerate() {
        num += w[k] * x * rho[k];
        den += w[k] * rho[k];
    }
    num / den
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub packet: WavepacketSpec,
    pub potential: PotentialProfile,
    pub grid: Grid1D,
    pub units: Units,
    pub t_final: f64,
    pub dt: f64,
    /// Steps between time-series rows.
    pub record_every: usize,
    /// Steps between stored snapshots; `None` stores none.
    pub snapshot_every: Option<usize>,
    pub absorbing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub field: FVField,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulationRecord {
    pub times: Vec<f64>,
    pub q_total: Vec<f64>,
    pub q_left: Vec<f64>,
    pub q_right: Vec<f64>,
    pub max_abs_psi: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
}

impl SimulationRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// max_k |Q_total(t_k) − Q_total(0)| / |Q_total(0)|.
    pub fn charge_drift(&self) -> f64 {
        let q0 = self.q_total[0];
        self.q_total
            .iter()
            .map(|q| (q - q0).abs() / q0.abs())
            .fold(0.0, f64::max)
    }

    fn push(&mut self, time: f64, field: &FVField, weights: &[f64], left: &[bool]) {
        let rho = fv::charge_density(field);
        let (mut ql, mut qr) = (0.0, 0.0);
        for k in 0..rho.len() {
            if left[k] {
                ql += weights[k] * rho[k];
            } else {
                qr += weights[k] * rho[k];
            }
        }
        let max_psi = field
            .phi
            .iter()
            .zip(&field.chi)
            .map(|(p, c)| (p + c).norm())
            .fold(0.0, f64::max);
        self.times.push(time);
        self.q_total.push(ql + qr);
        self.q_left.push(ql);
        self.q_right.push(qr);
        self.max_abs_psi.push(max_psi);
    }
}

/// Step count and effective step for a run of length `t_final`: the
/// requested `dt` is shortened so that an integer number of steps lands
/// exactly on `t_final`.
pub fn step_schedule(t_final: f64, dt: f64) -> Result<(usize, f64), EvolutionError> {
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(EvolutionError::InvalidTime(format!(
            "t_final must be finite and non-negative, got {t_final}"
        )));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(EvolutionError::InvalidTime(format!("dt must be positive, got {dt}")));
    }
    if t_final == 0.0 {
        return Ok((0, dt));
    }
    let steps = (t_final / dt - 1e-9).ceil().max(1.0) as usize;
    Ok((steps, t_final / steps as f64))
}

pub fn run_simulation(config: &SimulationConfig) -> Result<SimulationRecord, EvolutionError> {
    config.units.validate().map_err(|e| EvolutionError::InvalidPacket(e.to_string()))?;
    config.potential.validate()?;
    if config.record_every == 0 || config.snapshot_every == Some(0) {
        return Err(EvolutionError::InvalidTime(
            "record and snapshot cadences must be at least 1".into(),
        ));
    }
    let (steps, dt) = step_schedule(config.t_final, config.dt)?;
    let grid = config.grid;
    let mut field = build_initial_wavepacket(&config.packet, &grid, &config.potential, &config.units)?;
    let mut stepper = CrankNicolson::new(&grid, &config.potential, dt, &config.units)?;
    if config.absorbing {
        stepper = stepper.with_absorbing_layers();
    }

    let weights = grid.trapezoid_weights();
    let left: Vec<bool> = grid.points().map(|x| x < config.potential.center).collect();
    let mut record = SimulationRecord::default();
    record.push(0.0, &field, &weights, &left);
    if config.snapshot_every.is_some() {
        record.snapshots.push(Snapshot {
            time: 0.0,
            field: field.clone(),
        });
    }

    for step in 1..=steps {
        stepper.step(&mut field)?;
        let time = step as f64 * dt;
        if !field.is_finite() {
            return Err(EvolutionError::NonFinite { step, time });
        }
        if step % config.record_every == 0 || step == steps {
            record.push(time, &field, &weights, &left);
        }
        if let Some(every) = config.snapshot_every {
            if step % every == 0 || step == steps {
                record.snapshots.push(Snapshot {
                    time,
                    field: field.clone(),
                });
            }
        }
    }
    Ok(record)
}
