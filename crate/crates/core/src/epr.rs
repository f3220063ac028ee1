//! Two-particle operator checks and the particle ↔ antiparticle map.
//!
//! Operator conventions:
//!
//! | operator            | action      |
//! |---------------------|-------------|
//! | `Momentum`          | −iħ ∂/∂x    |
//! | `MomentumConjugate` | +iħ ∂/∂x    |
//! | `Energy`            | +iħ ∂/∂t    |
//! | `EnergyConjugate`   | −iħ ∂/∂t    |
//!
//! The conjugate pair measures an antiparticle wave a·exp[−i(px − Et)/ħ] as
//! having momentum p and energy E, the same as the particle wave
//! a·exp[+i(px − Et)/ħ] under the standard pair.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fv::{derivative_at, FVField};
use crate::grid::Grid1D;
use crate::scattering::{PlaneWave, WaveKind};
use crate::units::Units;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EprError {
    #[error("particle index must be 1 or 2, got {0}")]
    BadParticleIndex(u8),
    #[error("{0:?} acts on time and cannot be applied to a static two-particle function")]
    TimeDerivative(OperatorKind),
    #[error("two-particle grid needs at least 3 points per axis, got {0}")]
    GridTooSmall(usize),
    #[error("no test functions supplied")]
    NoTestFunctions,
    #[error("test function has zero norm on the grid")]
    ZeroNorm,
    #[error("degenerate pair: p1 = 0 gives no opposite-momentum pair")]
    DegeneratePair,
    #[error("{operators} operators apply to {expected:?} waves, got {found:?}")]
    WrongKind {
        operators: &'static str,
        expected: WaveKind,
        found: WaveKind,
    },
    #[error("space-time inversion needs a grid symmetric about x = 0, got [{x_min}, {x_max}]")]
    AsymmetricGrid { x_min: f64, x_max: f64 },
    #[error("non-finite momentum p1 = {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorKind {
    Position,
    Momentum,
    MomentumConjugate,
    Energy,
    EnergyConjugate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LinearOperator1D {
    pub kind: OperatorKind,
    particle: u8,
}

impl LinearOperator1D {
    pub fn new(kind: OperatorKind, particle: u8) -> Result<Self, EprError> {
        if particle != 1 && particle != 2 {
            return Err(EprError::BadParticleIndex(particle));
        }
        Ok(LinearOperator1D { kind, particle })
    }

    pub fn position(particle: u8) -> Self {
        Self::new(OperatorKind::Position, particle).expect("particle index")
    }

    pub fn momentum(particle: u8) -> Self {
        Self::new(OperatorKind::Momentum, particle).expect("particle index")
    }

    pub fn particle(&self) -> u8 {
        self.particle
    }
}

/// Real linear combination Σ cᵢ Oᵢ of single-particle operators.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperatorExpr {
    pub terms: Vec<(f64, LinearOperator1D)>,
}

impl OperatorExpr {
    pub fn new() -> Self {
        OperatorExpr::default()
    }

    pub fn plus(mut self, op: LinearOperator1D) -> Self {
        self.terms.push((1.0, op));
        self
    }

    pub fn minus(mut self, op: LinearOperator1D) -> Self {
        self.terms.push((-1.0, op));
        self
    }

    /// x₁ − x₂
    pub fn separation() -> Self {
        Self::new()
            .plus(LinearOperator1D::position(1))
            .minus(LinearOperator1D::position(2))
    }

    /// p̂₁ + p̂₂
    pub fn total_momentum() -> Self {
        Self::new()
            .plus(LinearOperator1D::momentum(1))
            .plus(LinearOperator1D::momentum(2))
    }

    /// x₁ + x₂
    pub fn position_sum() -> Self {
        Self::new()
            .plus(LinearOperator1D::position(1))
            .plus(LinearOperator1D::position(2))
    }

    /// p̂₁ − p̂₂
    pub fn relative_momentum() -> Self {
        Self::new()
            .plus(LinearOperator1D::momentum(1))
            .minus(LinearOperator1D::momentum(2))
    }
}

/// Samples of ψ(x₁, x₂) on the tensor grid, row-major in x₁.
struct TensorField<'a> {
    grid: &'a Grid1D,
    values: Vec<Complex64>,
}

fn apply_expr(
    expr: &OperatorExpr,
    input: &TensorField<'_>,
    out: &mut Vec<Complex64>,
    units: &Units,
) -> Result<(), EprError> {
    for (_, op) in &expr.terms {
        if matches!(op.kind, OperatorKind::Energy | OperatorKind::EnergyConjugate) {
            return Err(EprError::TimeDerivative(op.kind));
        }
    }
    let grid = input.grid;
    let n = grid.n_points;
    let dx = grid.dx();
    let f = &input.values;
    let i_hbar = Complex64::new(0.0, units.hbar);
    out.clear();
    out.reserve(n * n);
    for i in 0..n {
        let x1 = grid.x(i);
        for j in 0..n {
            let x2 = grid.x(j);
            let mut acc = Complex64::new(0.0, 0.0);
            for &(coeff, op) in &expr.terms {
                let term = match (op.kind, op.particle) {
                    (OperatorKind::Position, 1) => x1 * f[i * n + j],
                    (OperatorKind::Position, _) => x2 * f[i * n + j],
                    (kind, particle) => {
                        let d = if particle == 1 {
                            derivative_at(|ii| f[ii * n + j], n, dx, i)
                        } else {
                            derivative_at(|jj| f[i * n + jj], n, dx, j)
                        };
                        if kind == OperatorKind::Momentum {
                            -i_hbar * d
                        } else {
                            i_hbar * d
                        }
                    }
                };
                acc += coeff * term;
            }
            out.push(acc);
        }
    }
    Ok(())
}

fn l2(values: &[Complex64]) -> f64 {
    values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// max over test functions of ‖[A, B]f‖ / ‖f‖, with both axes of the
/// two-particle grid discretized like `grid` and derivatives taken with the
/// field module's difference stencils.
pub fn commutator_residual(
    a: &OperatorExpr,
    b: &OperatorExpr,
    grid: &Grid1D,
    test_functions: &[&dyn Fn(f64, f64) -> Complex64],
    units: &Units,
) -> Result<f64, EprError> {
    if grid.n_points < 3 {
        return Err(EprError::GridTooSmall(grid.n_points));
    }
    if test_functions.is_empty() {
        return Err(EprError::NoTestFunctions);
    }
    let n = grid.n_points;
    let mut worst = 0.0f64;
    let mut scratch = Vec::new();
    let mut ab = Vec::new();
    let mut ba = Vec::new();
    for f in test_functions {
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            let x1 = grid.x(i);
            for j in 0..n {
                values.push(f(x1, grid.x(j)));
            }
        }
        let norm = l2(&values);
        if norm == 0.0 {
            return Err(EprError::ZeroNorm);
        }
        let field = TensorField {
            grid,
            values,
        };
        apply_expr(b, &field, &mut scratch, units)?;
        let bf = TensorField {
            grid,
            values: std::mem::take(&mut scratch),
        };
        apply_expr(a, &bf, &mut ab, units)?;
        scratch = bf.values;

        apply_expr(a, &field, &mut scratch, units)?;
        let af = TensorField {
            grid,
            values: std::mem::take(&mut scratch),
        };
        apply_expr(b, &af, &mut ba, units)?;
        scratch = af.values;

        let diff = ab
            .iter()
            .zip(&ba)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(diff / norm);
    }
    Ok(worst)
}

/// Normalized Gaussian centred at (c1, c2) with width `sigma` on both axes.
pub fn gaussian(c1: f64, c2: f64, sigma: f64) -> impl Fn(f64, f64) -> Complex64 {
    move |x1, x2| {
        let r2 = (x1 - c1).powi(2) + (x2 - c2).powi(2);
        Complex64::new((-r2 / (4.0 * sigma * sigma)).exp(), 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementLevel {
    pub n_points: usize,
    pub dx: f64,
    pub residual: f64,
}

/// Residuals on `levels` grids over [−half_width, half_width], starting at
/// `base_points` nodes and halving dx each time.
pub fn refinement_study(
    a: &OperatorExpr,
    b: &OperatorExpr,
    half_width: f64,
    base_points: usize,
    levels: usize,
    test_functions: &[&dyn Fn(f64, f64) -> Complex64],
    units: &Units,
) -> Result<Vec<RefinementLevel>, EprError> {
    let mut out = Vec::with_capacity(levels);
    let mut n = base_points;
    for _ in 0..levels {
        let grid = Grid1D::new(-half_width, half_width, n).map_err(|_| EprError::GridTooSmall(n))?;
        out.push(RefinementLevel {
            n_points: n,
            dx: grid.dx(),
            residual: commutator_residual(a, b, &grid, test_functions, units)?,
        });
        n = 2 * (n - 1) + 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EprRelation {
    /// Common eigenstate of x₁ − x₂ and p̂₁ + p̂₂.
    OppositeMomentaFixedSeparation,
    /// Common eigenstate of x₁ + x₂ and p̂₁ − p̂₂.
    OppositePositionsFixedTotalMomentum,
}

impl EprRelation {
    /// The momentum combination whose eigenvalue the pair fixes to zero.
    pub fn momentum_combination(&self) -> OperatorExpr {
        match self {
            EprRelation::OppositeMomentaFixedSeparation => OperatorExpr::total_momentum(),
            EprRelation::OppositePositionsFixedTotalMomentum => OperatorExpr::relative_momentum(),
        }
    }

    /// The position combination held fixed.
    pub fn position_combination(&self) -> OperatorExpr {
        match self {
            EprRelation::OppositeMomentaFixedSeparation => OperatorExpr::separation(),
            EprRelation::OppositePositionsFixedTotalMomentum => OperatorExpr::position_sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EPRPair {
    pub wave1: PlaneWave,
    pub wave2: PlaneWave,
    pub relation: EprRelation,
}

impl EPRPair {
    /// Eigenvalue of the pair's momentum combination under the standard
    /// operator p̂ = −iħ∂/∂x acting on each member's exponent.
    pub fn joint_momentum_eigenvalue(&self) -> f64 {
        let p1 = self.wave1.label_momentum().re;
        let p2 = self.wave2.label_momentum().re;
        match self.relation {
            EprRelation::OppositeMomentaFixedSeparation => p1 + p2,
            EprRelation::OppositePositionsFixedTotalMomentum => p1 - p2,
        }
    }
}

/// Particle wave exp[+i(p₁x − E₁t)/ħ] paired with its antiparticle partner.
pub fn build_epr_pair(p1: f64, units: &Units, relation: EprRelation) -> Result<EPRPair, EprError> {
    if !p1.is_finite() {
        return Err(EprError::NonFinite(p1));
    }
    if p1 == 0.0 && relation == EprRelation::OppositeMomentaFixedSeparation {
        return Err(EprError::DegeneratePair);
    }
    let e1 = units.free_energy(p1);
    let one = Complex64::new(1.0, 0.0);
    let wave1 = PlaneWave::particle(one, p1, e1);
    let wave2 = match relation {
        // labels (−p₁, −E₁): observed (p₁, E₁)
        EprRelation::OppositeMomentaFixedSeparation => PlaneWave::antiparticle(one, p1, e1),
        // moving the other way: observed (−p₁, E₁)
        EprRelation::OppositePositionsFixedTotalMomentum => PlaneWave::antiparticle(one, -p1, e1),
    };
    Ok(EPRPair {
        wave1,
        wave2,
        relation,
    })
}

/// Eigenvalues of p̂ = −iħ∂/∂x and Ê = iħ∂/∂t on a particle wave.
pub fn apply_standard_operators(w: &PlaneWave) -> Result<(f64, f64), EprError> {
    if w.kind != WaveKind::Particle {
        return Err(EprError::WrongKind {
            operators: "standard",
            expected: WaveKind::Particle,
            found: w.kind,
        });
    }
    // −iħ·(ik/ħ) = k, iħ·(−iω/ħ) = ω
    Ok((w.label_momentum().re, w.label_energy()))
}

/// Eigenvalues of p̂_c = +iħ∂/∂x and Ê_c = −iħ∂/∂t on an antiparticle wave.
pub fn apply_conjugate_operators(w: &PlaneWave) -> Result<(f64, f64), EprError> {
    if w.kind != WaveKind::Antiparticle {
        return Err(EprError::WrongKind {
            operators: "conjugate",
            expected: WaveKind::Antiparticle,
            found: w.kind,
        });
    }
    // +iħ·(ik/ħ) = −k, −iħ·(−iω/ħ) = −ω
    Ok((-w.label_momentum().re, -w.label_energy()))
}

/// (x, t) → (−x, −t) together with φ ↔ χ.
pub trait SpacetimeInversion: Sized {
    fn spacetime_inversion(&self) -> Result<Self, EprError>;
}

impl SpacetimeInversion for PlaneWave {
    /// a·e^{i(px−Et)/ħ} evaluated at (−x, −t) is a·e^{−i(px−Et)/ħ}: same
    /// amplitude and observed (p, E), opposite kind.
    fn spacetime_inversion(&self) -> Result<Self, EprError> {
        let kind = match self.kind {
            WaveKind::Particle => WaveKind::Antiparticle,
            WaveKind::Antiparticle => WaveKind::Particle,
        };
        Ok(PlaneWave { kind, ..*self })
    }
}

impl SpacetimeInversion for FVField {
    /// φ_c(x) = χ(−x), χ_c(x) = φ(−x) on a grid symmetric about the origin.
    fn spacetime_inversion(&self) -> Result<Self, EprError> {
        let grid = *self.grid();
        if !grid.is_symmetric() {
            return Err(EprError::AsymmetricGrid {
                x_min: grid.x_min,
                x_max: grid.x_max,
            });
        }
        let phi = self.chi().iter().rev().copied().collect();
        let chi = self.phi().iter().rev().copied().collect();
        Ok(FVField::new(phi, chi, grid).expect("mirrored field keeps grid invariants"))
    }
}

/// Potential seen by the inverted state: V_c(x) = −V(−x).
pub fn invert_potential(v: &[f64]) -> Vec<f64> {
    v.iter().rev().map(|x| -x).collect()
}
