//! Scenario files: one system, one task, its grids and where to write.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use wgqed::config::{Mode, SystemConfig, Wavepacket};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Either an explicit list of points or `points` equally spaced values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Linspace { start: f64, stop: f64, points: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Linspace { start, stop, points } => match points {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Grid>,
}

/// Equally spaced emitters at 0, d, 2d, ...; fills `system.positions`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lattice {
    pub n: usize,
    pub d: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

fn markov() -> Mode {
    Mode::Markov
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum Task {
    /// Single-photon reflection and transmission on the k grid.
    Spectrum {
        #[serde(default = "markov")]
        mode: Mode,
    },
    /// Two-photon correlation g²(x) on the x grid for incoming momenta k1, k2.
    G2 {
        k1: f64,
        k2: f64,
        #[serde(default = "markov")]
        mode: Mode,
    },
    /// Field emitted by an initially excited emitter, at `time`, on the x grid.
    TransientSpontaneous { time: f64 },
    /// Excitation by a Lorentzian photon starting at x0, on the t grid.
    TransientAbsorption { width_rate: f64, x0: f64 },
    StimulatedOptimum {},
    /// First emitter initially excited. Without `field_time`: amplitudes on
    /// the t grid; with it: emitted field on the x grid at that time.
    ArrayRetardation {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        field_time: Option<f64>,
    },
    /// Reflected photon pair from a mirror-backed emitter.
    MirrorEntanglement {
        width_rate: f64,
        points: usize,
        window: f64,
        #[serde(default = "markov")]
        mode: Mode,
    },
    PolaritonSingle { wavepacket: Wavepacket },
    PolaritonPair { first: Wavepacket, second: Wavepacket, time: f64 },
    GmeEvolve { wavepacket: Wavepacket, photons: usize, dt: f64 },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Spectrum { .. } => "Spectrum",
            Task::G2 { .. } => "G2",
            Task::TransientSpontaneous { .. } => "TransientSpontaneous",
            Task::TransientAbsorption { .. } => "TransientAbsorption",
            Task::StimulatedOptimum {} => "StimulatedOptimum",
            Task::ArrayRetardation { .. } => "ArrayRetardation",
            Task::MirrorEntanglement { .. } => "MirrorEntanglement",
            Task::PolaritonSingle { .. } => "PolaritonSingle",
            Task::PolaritonPair { .. } => "PolaritonPair",
            Task::GmeEvolve { .. } => "GmeEvolve",
        }
    }

    fn required_grid(&self) -> Option<&'static str> {
        match self {
            Task::Spectrum { .. } => Some("k"),
            Task::G2 { .. } | Task::TransientSpontaneous { .. } => Some("x"),
            Task::ArrayRetardation { field_time: Some(_) } => Some("x"),
            Task::TransientAbsorption { .. }
            | Task::ArrayRetardation { field_time: None }
            | Task::PolaritonSingle { .. }
            | Task::GmeEvolve { .. } => Some("t"),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub system: SystemConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<Lattice>,
    pub task: Task,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub output: OutputSpec,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    /// System with lattice positions filled in and validated.
    pub fn system(&self) -> Result<SystemConfig, CliError> {
        let mut sys = self.system.clone();
        if let Some(l) = self.lattice {
            if !sys.positions.is_empty() {
                return Err(CliError::InvalidScenario("both `lattice` and `system.positions` given".into()));
            }
            sys.positions = (0..l.n).map(|i| i as f64 * l.d).collect();
        }
        wgqed::validate(&sys).map_err(|e| CliError::Compute { scenario: self.name.clone(), source: e })
    }

    pub fn grid(&self, which: &'static str) -> Result<Vec<f64>, CliError> {
        let g = match which {
            "k" => &self.grids.k,
            "x" => &self.grids.x,
            _ => &self.grids.t,
        };
        g.as_ref()
            .map(Grid::values)
            .ok_or_else(|| CliError::InvalidScenario(format!("task {} needs a `{which}` grid", self.task.name())))
    }

    /// Structural checks that do not need any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(CliError::InvalidScenario("name must be a non-empty file stem".into()));
        }
        for (label, g) in [("k", &self.grids.k), ("x", &self.grids.x), ("t", &self.grids.t)] {
            if let Some(g) = g {
                let v = g.values();
                if v.is_empty() || v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(CliError::NonMonotoneGrid(label));
                }
            }
        }
        if let Some(g) = self.task.required_grid() {
            self.grid(g)?;
        }
        self.system()?;
        Ok(())
    }

    pub fn format(&self, overridden: Option<Format>) -> Format {
        overridden.or(self.output.format).unwrap_or(Format::Csv)
    }

    /// Output file name; the extension follows the format in use.
    pub fn output_file(&self, format: Format) -> String {
        let stem = match &self.output.path {
            Some(p) => std::path::Path::new(p)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| self.name.clone()),
            None => self.name.clone(),
        };
        format!("{stem}.{}", format.extension())
    }
}
