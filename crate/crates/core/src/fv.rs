//! Feshbach-Villars split of a Klein-Gordon wavefunction.
//!
//! The scalar field ψ and its time derivative ψ̇ are traded for the pair
//!
//! ```text
//! φ = ½[(1 − V/mc²)ψ + (iħ/mc²)ψ̇]
//! χ = ½[(1 + V/mc²)ψ − (iħ/mc²)ψ̇]
//! ```
//!
//! so that ψ = φ + χ and iħψ̇ = mc²(φ − χ) + Vψ. The conserved charge density
//! is the indefinite form ρ = |φ|² − |χ|².

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::Grid1D;
use crate::units::Units;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FvError {
    #[error("{what} has {found} samples but the grid has {expected} points")]
    GridMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("operation needs at least {required} grid points, got {found}")]
    GridTooSmall { required: usize, found: usize },
    #[error("{what} contains a non-finite value at index {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("the φ component has zero norm")]
    ZeroPhiNorm,
}

fn check_len(what: &'static str, found: usize, grid: &Grid1D) -> Result<(), FvError> {
    if found != grid.n_points {
        return Err(FvError::GridMismatch {
            what,
            expected: grid.n_points,
            found,
        });
    }
    Ok(())
}

fn check_finite(what: &'static str, values: &[Complex64]) -> Result<(), FvError> {
    match values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        Some(index) => Err(FvError::NonFinite { what, index }),
        None => Ok(()),
    }
}

/// Klein-Gordon state (ψ, ψ̇) sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KGState {
    psi: Vec<Complex64>,
    psi_dot: Vec<Complex64>,
    grid: Grid1D,
}

impl KGState {
    pub fn new(
        psi: Vec<Complex64>,
        psi_dot: Vec<Complex64>,
        grid: Grid1D,
    ) -> Result<Self, FvError> {
        check_len("psi", psi.len(), &grid)?;
        check_len("psi_dot", psi_dot.len(), &grid)?;
        check_finite("psi", &psi)?;
        check_finite("psi_dot", &psi_dot)?;
        Ok(KGState {
            psi,
            psi_dot,
            grid,
        })
    }

    pub fn psi(&self) -> &[Complex64] {
        &self.psi
    }

    pub fn psi_dot(&self) -> &[Complex64] {
        &self.psi_dot
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }
}

/// The two Feshbach-Villars components on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FVField {
    pub(crate) phi: Vec<Complex64>,
    pub(crate) chi: Vec<Complex64>,
    pub(crate) grid: Grid1D,
}

impl FVField {
    pub fn new(phi: Vec<Complex64>, chi: Vec<Complex64>, grid: Grid1D) -> Result<Self, FvError> {
        check_len("phi", phi.len(), &grid)?;
        check_len("chi", chi.len(), &grid)?;
        check_finite("phi", &phi)?;
        check_finite("chi", &chi)?;
        Ok(FVField { phi, chi, grid })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        let zero = vec![Complex64::new(0.0, 0.0); grid.n_points];
        FVField {
            phi: zero.clone(),
            chi: zero,
            grid,
        }
    }

    pub fn phi(&self) -> &[Complex64] {
        &self.phi
    }

    pub fn chi(&self) -> &[Complex64] {
        &self.chi
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// ψ = φ + χ.
    pub fn psi(&self) -> Vec<Complex64> {
        self.phi.iter().zip(&self.chi).map(|(p, c)| p + c).collect()
    }

    pub fn is_finite(&self) -> bool {
        check_finite("phi", &self.phi).is_ok() && check_finite("chi", &self.chi).is_ok()
    }
}

/// Splits (ψ, ψ̇) into (φ, χ) in the presence of the potential `v`.
pub fn decompose(state: &KGState, v: &[f64], units: &Units) -> Result<FVField, FvError> {
    check_len("potential", v.len(), &state.grid)?;
    let mc2 = units.rest_energy();
    let i_hbar = Complex64::new(0.0, units.hbar / mc2);
    let mut phi = Vec::with_capacity(v.len());
    let mut chi = Vec::with_capacity(v.len());
    for ((&psi, &psi_dot), &vk) in state.psi.iter().zip(&state.psi_dot).zip(v) {
        let f = 0.5 * ((1.0 - vk / mc2) * psi + i_hbar * psi_dot);
        phi.push(f);
        // χ taken as ψ − φ so that φ + χ returns ψ up to one rounding
        chi.push(psi - f);
    }
    FVField::new(phi, chi, state.grid)
}

/// Inverse of [`decompose`]: ψ = φ + χ, iħψ̇ = mc²(φ − χ) + Vψ.
pub fn recompose(field: &FVField, v: &[f64], units: &Units) -> Result<KGState, FvError> {
    check_len("potential", v.len(), &field.grid)?;
    let mc2 = units.rest_energy();
    let minus_i_over_hbar = Complex64::new(0.0, -1.0 / units.hbar);
    let mut psi = Vec::with_capacity(v.len());
    let mut psi_dot = Vec::with_capacity(v.len());
    for ((&f, &c), &vk) in field.phi.iter().zip(&field.chi).zip(v) {
        let p = f + c;
        psi.push(p);
        psi_dot.push(minus_i_over_hbar * (mc2 * (f - c) + vk * p));
    }
    KGState::new(psi, psi_dot, field.grid)
}

/// ρ_k = |φ_k|² − |χ_k|².
pub fn charge_density(field: &FVField) -> Vec<f64> {
    field
        .phi
        .iter()
        .zip(&field.chi)
        .map(|(p, c)| p.norm_sqr() - c.norm_sqr())
        .collect()
}

/// The same density written in terms of ψ and ψ̇:
/// ρ = (iħ/2mc²)(ψ*ψ̇ − ψ̇*ψ) − (V/mc²)ψ*ψ.
pub fn charge_density_kg(state: &KGState, v: &[f64], units: &Units) -> Result<Vec<f64>, FvError> {
    check_len("potential", v.len(), &state.grid)?;
    let mc2 = units.rest_energy();
    Ok(state
        .psi
        .iter()
        .zip(&state.psi_dot)
        .zip(v)
        .map(|((psi, psi_dot), vk)| {
            // (iħ/2mc²)·2i·Im(ψ*ψ̇) = −(ħ/mc²)·Im(ψ*ψ̇)
            -(units.hbar / mc2) * (psi.conj() * psi_dot).im - (vk / mc2) * psi.norm_sqr()
        })
        .collect())
}

/// First derivative at node `k` of the samples `f(0..n)`: second-order central
/// differences in the interior, second-order one-sided stencils at the ends.
/// Requires `n >= 3`.
pub fn derivative_at<F>(f: F, n: usize, dx: f64, k: usize) -> Complex64
where
    F: Fn(usize) -> Complex64,
{
    let inv = 0.5 / dx;
    if k == 0 {
        (-3.0 * f(0) + 4.0 * f(1) - f(2)) * inv
    } else if k == n - 1 {
        (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) * inv
    } else {
        (f(k + 1) - f(k - 1)) * inv
    }
}

/// ∂f/∂x on the whole grid, using [`derivative_at`].
pub fn gradient(values: &[Complex64], dx: f64) -> Vec<Complex64> {
    let n = values.len();
    (0..n)
        .map(|k| derivative_at(|i| values[i], n, dx, k))
        .collect()
}

/// Current j = (ħ/2mi)(ψ*∇ψ − ψ∇ψ*) = (ħ/m)·Im(ψ*∇ψ).
pub fn current_density(state: &KGState, units: &Units) -> Result<Vec<f64>, FvError> {
    let n = state.grid.n_points;
    if n < 3 {
        return Err(FvError::GridTooSmall {
            required: 3,
            found: n,
        });
    }
    let grad = gradient(&state.psi, state.grid.dx());
    let scale = units.hbar / units.m;
    Ok(state
        .psi
        .iter()
        .zip(&grad)
        .map(|(psi, g)| scale * (psi.conj() * g).im)
        .collect())
}

/// Trapezoidal integral of a density over the grid.
pub fn total_charge(rho: &[f64], grid: &Grid1D) -> f64 {
    grid.integrate(rho)
}

/// ∫|χ|² dx / ∫|φ|² dx.
pub fn chi_phi_ratio(field: &FVField) -> Result<f64, FvError> {
    let phi2: Vec<f64> = field.phi.iter().map(|z| z.norm_sqr()).collect();
    let chi2: Vec<f64> = field.chi.iter().map(|z| z.norm_sqr()).collect();
    let phi_norm = field.grid.integrate(&phi2);
    if phi_norm <= 0.0 {
        return Err(FvError::ZeroPhiNorm);
    }
    Ok(field.grid.integrate(&chi2) / phi_norm)
}
