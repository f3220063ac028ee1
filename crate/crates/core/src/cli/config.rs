//! Scenario files.
//!
//! A scenario is a TOML document with a `command` key and one section per
//! parameter group. Unknown keys and sections that the command does not use
//! are rejected.
//!
//! ```toml
//! command = "scatter"
//!
//! [units]
//! hbar = 1.0
//! c = 1.0
//! m = 1.0
//!
//! [scatter]
//! E = 1.25
//! V0 = 3.0
//! ```

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::epr::EprRelation;
use crate::evolution::{PotentialProfile, WavepacketSpec};
use crate::grid::Grid1D;
use crate::units::{natural_units, Units};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Scatter,
    Sweep,
    Evolve,
    Decompose,
    EprDemo,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Scatter => "scatter",
            Command::Sweep => "sweep",
            Command::Evolve => "evolve",
            Command::Decompose => "decompose",
            Command::EprDemo => "epr-demo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterParams {
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "V0")]
    pub v0: f64,
    /// Incident amplitude |a|; 1 when omitted.
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "V0_min")]
    pub v0_min: f64,
    #[serde(rename = "V0_max")]
    pub v0_max: f64,
    /// Number of rows, endpoints included.
    pub steps: usize,
}

impl SweepParams {
    pub fn v0_values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.v0_min];
        }
        let span = self.v0_max - self.v0_min;
        (0..self.steps)
            .map(|k| self.v0_min + span * k as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveParams {
    pub t_final: f64,
    pub dt: f64,
    #[serde(default = "one_usize")]
    pub record_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub absorbing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EprParams {
    pub p1: f64,
    pub relation: EprRelation,
    /// Two-particle grid covers [−half_width, half_width] on both axes.
    pub half_width: f64,
    pub n_points: usize,
    /// Width of the Gaussian test functions.
    pub sigma: f64,
    #[serde(default = "one_usize")]
    pub test_functions: usize,
    #[serde(default)]
    pub seed: u64,
    /// Number of grid levels for the convergence study; 0 or absent skips it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub command: Command,
    #[serde(default = "natural_units")]
    pub units: Units,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scatter: Option<ScatterParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid1D>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavepacket: Option<WavepacketSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epr: Option<EprParams>,
}

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

fn one_usize() -> usize {
    1
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn require<'a, T>(section: &'a Option<T>, name: &str, command: Command) -> Result<&'a T, CliError> {
    section
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("command `{}` needs a [{name}] section", command.name())))
}

fn finite(name: &str, value: f64) -> Result<(), CliError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be finite, got {value}")))
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Structural checks: sections present for the command, none extra,
    /// numbers finite. Physics preconditions are left to the modules.
    pub fn validate(&self) -> Result<(), CliError> {
        self.units.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let used: &[&str] = match self.command {
            Command::Scatter => &["scatter"],
            Command::Sweep => &["sweep"],
            Command::Evolve => &["evolve", "grid", "wavepacket", "potential"],
            Command::Decompose => &["grid", "wavepacket", "potential"],
            Command::EprDemo => &["epr"],
        };
        let present = [
            ("scatter", self.scatter.is_some()),
            ("sweep", self.sweep.is_some()),
            ("evolve", self.evolve.is_some()),
            ("grid", self.grid.is_some()),
            ("wavepacket", self.wavepacket.is_some()),
            ("potential", self.potential.is_some()),
            ("epr", self.epr.is_some()),
        ];
        for (name, is_present) in present {
            if is_present && !used.contains(&name) {
                return Err(CliError::Config(format!(
                    "section [{name}] is not used by command `{}`",
                    self.command.name()
                )));
            }
        }
        match self.command {
            Command::Scatter => {
                let s = require(&self.scatter, "scatter", self.command)?;
                finite("E", s.energy)?;
                finite("V0", s.v0)?;
                if !(s.amplitude.is_finite() && s.amplitude > 0.0) {
                    return Err(CliError::Config("amplitude must be positive".into()));
                }
            }
            Command::Sweep => {
                let s = require(&self.sweep, "sweep", self.command)?;
                finite("E", s.energy)?;
                finite("V0_min", s.v0_min)?;
                finite("V0_max", s.v0_max)?;
                if s.v0_min > s.v0_max {
                    return Err(CliError::Config(format!(
                        "V0_min = {} exceeds V0_max = {}",
                        s.v0_min, s.v0_max
                    )));
                }
                if s.steps == 0 {
                    return Err(CliError::Config("steps must be at least 1".into()));
                }
            }
            Command::Evolve | Command::Decompose => {
                if self.command == Command::Evolve {
                    let e = require(&self.evolve, "evolve", self.command)?;
                    finite("t_final", e.t_final)?;
                    finite("dt", e.dt)?;
                    if e.record_every == 0 || e.snapshot_every == Some(0) {
                        return Err(CliError::Config(
                            "record_every and snapshot_every must be at least 1".into(),
                        ));
                    }
                }
                let grid = require(&self.grid, "grid", self.command)?;
                grid.validate().map_err(|e| CliError::Config(e.to_string()))?;
                let w = require(&self.wavepacket, "wavepacket", self.command)?;
                for (name, v) in [("x0", w.x0), ("sigma", w.sigma), ("p0", w.p0), ("amplitude", w.amplitude)] {
                    finite(name, v)?;
                }
            }
            Command::EprDemo => {
                let e = require(&self.epr, "epr", self.command)?;
                finite("p1", e.p1)?;
                if !(e.half_width.is_finite() && e.half_width > 0.0) {
                    return Err(CliError::Config("half_width must be positive".into()));
                }
                if !(e.sigma.is_finite() && e.sigma > 0.0) {
                    return Err(CliError::Config("sigma must be positive".into()));
                }
                if e.n_points < 3 {
                    return Err(CliError::Config("n_points must be at least 3".into()));
                }
                if e.test_functions == 0 {
                    return Err(CliError::Config("test_functions must be at least 1".into()));
                }
            }
        }
        Ok(())
    }

    pub fn potential_or_free(&self) -> PotentialProfile {
        self.potential.unwrap_or_else(PotentialProfile::free)
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            command: Command::Scatter,
            units: natural_units(),
            scatter: None,
            sweep: None,
            evolve: None,
            grid: None,
            wavepacket: None,
            potential: None,
            epr: None,
        }
    }
}
