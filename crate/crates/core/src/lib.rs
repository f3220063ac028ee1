//! Klein-Gordon antiparticle toolkit.
//!
//! * [`fv`]: Feshbach-Villars split (ψ, ψ̇) ↔ (φ, χ), charge and current densities.
//! * [`scattering`]: closed-form step scattering, Klein-zone branch choice, antiparticle relabeling.
//! * [`evolution`]: charge-conserving Crank-Nicolson propagation of wavepackets.
//! * [`epr`]: two-particle commutators, EPR pairs, space-time inversion.
//! * [`cli`]: configuration, command execution and file output for the `kgfv` binary.

pub mod cli;
pub mod epr;
pub mod evolution;
pub mod fv;
pub mod grid;
pub mod scattering;
pub mod units;

pub use grid::{Grid1D, GridError};
pub use units::{momentum_from_energy, natural_units, ComplexAmplitude, Units, UnitsError};
