//! JSON experiment configuration for the command-line runner.
//!
//! Every section rejects unknown keys. Missing optional sections fall back to
//! the defaults used throughout the library.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pulse::{echo_transform, make_lemniscate, make_rectangular, Pulse};
use crate::scan::{
    linspace, AmplitudeScanSpec, LemniscateScanSpec, SolverSettings, SweepFamily, SweepGrids,
};
use crate::tdse::{
    Cutoff, SimulationConfig, DEFAULT_CUTOFF_TOLERANCE, DEFAULT_MAX_REFINEMENTS, DEFAULT_STEP_TOLERANCE,
    DEFAULT_TIME_STEPS, MIN_TIME_STEPS,
};
use crate::trajectory::lemniscate_design_point;

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub pulse: PulseConfig,
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PulseConfig {
    Rectangular {
        k: u32,
        #[serde(default)]
        delta_omega_rel: f64,
        #[serde(default = "one")]
        t_gate: f64,
    },
    EchoedRectangular {
        k: u32,
        #[serde(default)]
        delta_omega_rel: f64,
        #[serde(default = "one")]
        t_gate: f64,
    },
    Lemniscate {
        /// Shape parameter; defaults to the design value a₀.
        a: Option<f64>,
        /// Size parameter; defaults to the design value A₀.
        amplitude: Option<f64>,
        #[serde(default)]
        delta_a: f64,
        #[serde(default)]
        delta_amp_rel: f64,
        #[serde(default = "one")]
        t_gate: f64,
    },
    EchoedLemniscate {
        a: Option<f64>,
        amplitude: Option<f64>,
        #[serde(default)]
        delta_a: f64,
        #[serde(default)]
        delta_amp_rel: f64,
        #[serde(default = "one")]
        t_gate: f64,
    },
}

impl PulseConfig {
    pub fn build(&self, eta: f64) -> Result<Pulse> {
        match *self {
            PulseConfig::Rectangular { k, delta_omega_rel, t_gate } => {
                Ok(make_rectangular(k, t_gate, eta)?.with_gain(1.0 + delta_omega_rel))
            }
            PulseConfig::EchoedRectangular { k, delta_omega_rel, t_gate } => {
                Ok(echo_transform(&make_rectangular(k, t_gate, eta)?).with_gain(1.0 + delta_omega_rel))
            }
            PulseConfig::Lemniscate { a, amplitude, delta_a, delta_amp_rel, t_gate } => {
                let (a, amp) = lemniscate_shape(a, amplitude, delta_a, delta_amp_rel)?;
                make_lemniscate(a, amp, t_gate, eta)
            }
            PulseConfig::EchoedLemniscate { a, amplitude, delta_a, delta_amp_rel, t_gate } => {
                let (a, amp) = lemniscate_shape(a, amplitude, delta_a, delta_amp_rel)?;
                Ok(echo_transform(&make_lemniscate(a, amp, t_gate, eta)?))
            }
        }
    }
}

fn lemniscate_shape(a: Option<f64>, amplitude: Option<f64>, delta_a: f64, delta_amp_rel: f64) -> Result<(f64, f64)> {
    let dp = lemniscate_design_point()?;
    Ok((a.unwrap_or(dp.a) + delta_a, amplitude.unwrap_or(dp.amplitude) * (1.0 + delta_amp_rel)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub n: u32,
    pub eta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

/// `"auto"` or a fixed Fock dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CutoffSetting {
    Auto(AutoKeyword),
    Fixed(usize),
}

impl Default for CutoffSetting {
    fn default() -> Self {
        CutoffSetting::Auto(AutoKeyword::Auto)
    }
}

impl From<CutoffSetting> for Cutoff {
    fn from(c: CutoffSetting) -> Cutoff {
        match c {
            CutoffSetting::Auto(_) => Cutoff::Auto,
            CutoffSetting::Fixed(n) => Cutoff::Fixed(n),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub cutoff: CutoffSetting,
    pub time_steps: usize,
    pub step_tolerance: f64,
    pub cutoff_tolerance: f64,
    pub max_refinements: usize,
    pub check_convergence: bool,
    /// Step count for individual scan points.
    pub scan_time_steps: usize,
    pub golden_iterations: usize,
    pub verify_optimum: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let scan = SolverSettings::default();
        SolverConfig {
            cutoff: CutoffSetting::default(),
            time_steps: DEFAULT_TIME_STEPS,
            step_tolerance: DEFAULT_STEP_TOLERANCE,
            cutoff_tolerance: DEFAULT_CUTOFF_TOLERANCE,
            max_refinements: DEFAULT_MAX_REFINEMENTS,
            check_convergence: true,
            scan_time_steps: scan.time_steps,
            golden_iterations: scan.golden_iterations,
            verify_optimum: scan.verify_optimum,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        linspace(self.min, self.max, self.points)
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        if self.points == 0 || !self.min.is_finite() || !self.max.is_finite() {
            return Err(invalid(name, "grid needs at least one point and finite bounds"));
        }
        if self.points > 1 && self.max <= self.min {
            return Err(invalid(name, format!("max {} must exceed min {}", self.max, self.min)));
        }
        Ok(())
    }
}

fn amplitude_grid() -> GridSpec {
    GridSpec { min: -0.01, max: 0.02, points: 61 }
}

fn delta_a_grid() -> GridSpec {
    GridSpec { min: -0.01, max: 0.01, points: 41 }
}

fn delta_amp_grid() -> GridSpec {
    GridSpec { min: 0.0, max: 0.02, points: 41 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeAxes {
    /// Ion numbers, one curve each; defaults to `physics.n`.
    #[serde(default)]
    pub ns: Vec<u32>,
    #[serde(default = "one_circle")]
    pub k: u32,
    #[serde(default)]
    pub echoed: bool,
    #[serde(default = "amplitude_grid")]
    pub grid: GridSpec,
    #[serde(default = "yes")]
    pub refine: bool,
}

fn one_circle() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemniscateAxes {
    #[serde(default = "yes")]
    pub echoed: bool,
    #[serde(default = "delta_a_grid")]
    pub delta_a: GridSpec,
    /// ΔA/A₀ grid.
    #[serde(default = "delta_amp_grid")]
    pub delta_amp_rel: GridSpec,
    #[serde(default = "yes")]
    pub refine: bool,
}

/// Grids used to re-optimise every sweep point, given at η = 0.03.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGridConfig {
    #[serde(default = "amplitude_grid")]
    pub amplitude: GridSpec,
    #[serde(default = "delta_a_grid")]
    pub delta_a: GridSpec,
    #[serde(default = "delta_amp_grid")]
    pub delta_amp_rel: GridSpec,
    #[serde(default = "yes")]
    pub scale_with_eta: bool,
}

impl Default for SweepGridConfig {
    fn default() -> Self {
        SweepGridConfig {
            amplitude: amplitude_grid(),
            delta_a: delta_a_grid(),
            delta_amp_rel: delta_amp_grid(),
            scale_with_eta: true,
        }
    }
}

impl SweepGridConfig {
    pub fn grids(&self) -> SweepGrids {
        SweepGrids {
            amplitude: self.amplitude.values(),
            delta_a: self.delta_a.values(),
            delta_amp_rel: self.delta_amp_rel.values(),
            scale_with_eta: self.scale_with_eta,
        }
    }

    fn validate(&self) -> Result<()> {
        self.amplitude.validate("scan sweep amplitude")?;
        self.delta_a.validate("scan sweep delta_a")?;
        self.delta_amp_rel.validate("scan sweep delta_amp_rel")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaSweepAxes {
    pub etas: Vec<f64>,
    pub families: Vec<SweepFamily>,
    #[serde(default)]
    pub grids: SweepGridConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NSweepAxes {
    pub ns: Vec<u32>,
    pub families: Vec<SweepFamily>,
    #[serde(default)]
    pub grids: SweepGridConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub amplitude: Option<AmplitudeAxes>,
    pub lemniscate: Option<LemniscateAxes>,
    pub eta_sweep: Option<EtaSweepAxes>,
    pub n_sweep: Option<NSweepAxes>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: PathBuf::from("out"), formats: vec![Format::Csv, Format::Json] }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let PhysicsConfig { n, eta } = self.physics;
        if n < 2 {
            return Err(invalid("physics.n", format!("need at least two ions, got {n}")));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(invalid("physics.eta", format!("must lie in (0, 1), got {eta}")));
        }
        self.pulse.build(eta)?;
        let s = &self.solver;
        for (name, steps) in [("solver.time_steps", s.time_steps), ("solver.scan_time_steps", s.scan_time_steps)] {
            if steps < MIN_TIME_STEPS {
                return Err(invalid(name, format!("need at least {MIN_TIME_STEPS}, got {steps}")));
            }
        }
        if !(s.step_tolerance > 0.0 && s.cutoff_tolerance > 0.0) {
            return Err(invalid("solver tolerances", "must be positive"));
        }
        if self.output.formats.is_empty() {
            return Err(invalid("output.formats", "need at least one format"));
        }
        if let Some(scan) = &self.scan {
            if let Some(a) = &scan.amplitude {
                a.grid.validate("scan.amplitude.grid")?;
                if a.k == 0 {
                    return Err(invalid("scan.amplitude.k", "need at least one circle"));
                }
                if a.ns.iter().any(|&n| n < 2) {
                    return Err(invalid("scan.amplitude.ns", "every n must be at least 2"));
                }
            }
            if let Some(l) = &scan.lemniscate {
                l.delta_a.validate("scan.lemniscate.delta_a")?;
                l.delta_amp_rel.validate("scan.lemniscate.delta_amp_rel")?;
                let a0 = lemniscate_design_point()?.a;
                if a0 + l.delta_a.min <= 0.5 {
                    return Err(invalid("scan.lemniscate.delta_a", "a = a0 + delta_a must exceed 1/2"));
                }
            }
            if let Some(e) = &scan.eta_sweep {
                if e.etas.is_empty() || e.families.is_empty() {
                    return Err(invalid("scan.eta_sweep", "etas and families must be non-empty"));
                }
                if e.etas.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
                    return Err(invalid("scan.eta_sweep.etas", "every eta must lie in (0, 1)"));
                }
                e.grids.validate()?;
            }
            if let Some(s) = &scan.n_sweep {
                if s.ns.is_empty() || s.families.is_empty() {
                    return Err(invalid("scan.n_sweep", "ns and families must be non-empty"));
                }
                if s.ns.iter().any(|&n| n < 2) {
                    return Err(invalid("scan.n_sweep.ns", "every n must be at least 2"));
                }
                s.grids.validate()?;
            }
        }
        Ok(())
    }

    pub fn simulation_config(&self) -> Result<SimulationConfig> {
        let mut cfg = SimulationConfig::new(self.physics.n, self.physics.eta, self.pulse.build(self.physics.eta)?);
        cfg.cutoff = self.solver.cutoff.into();
        cfg.time_steps = self.solver.time_steps;
        cfg.step_tolerance = self.solver.step_tolerance;
        cfg.cutoff_tolerance = self.solver.cutoff_tolerance;
        cfg.max_refinements = self.solver.max_refinements;
        cfg.check_convergence = self.solver.check_convergence;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn solver_settings(&self) -> SolverSettings {
        SolverSettings {
            time_steps: self.solver.scan_time_steps,
            cutoff: self.solver.cutoff.into(),
            golden_iterations: self.solver.golden_iterations,
            verify_optimum: self.solver.verify_optimum,
        }
    }

    pub fn amplitude_specs(&self) -> Vec<AmplitudeScanSpec> {
        let Some(a) = self.scan.as_ref().and_then(|s| s.amplitude.as_ref()) else {
            return Vec::new();
        };
        let ns = if a.ns.is_empty() { vec![self.physics.n] } else { a.ns.clone() };
        ns.into_iter()
            .map(|n| AmplitudeScanSpec {
                n,
                eta: self.physics.eta,
                k: a.k,
                echoed: a.echoed,
                grid: a.grid.values(),
                refine: a.refine,
            })
            .collect()
    }

    pub fn lemniscate_spec(&self) -> Option<LemniscateScanSpec> {
        let l = self.scan.as_ref()?.lemniscate.as_ref()?;
        Some(LemniscateScanSpec {
            n: self.physics.n,
            eta: self.physics.eta,
            echoed: l.echoed,
            delta_a: l.delta_a.values(),
            delta_amp_rel: l.delta_amp_rel.values(),
            refine: l.refine,
        })
    }
}

/// True for errors caused by the configuration rather than the numerics.
pub fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::InvalidParameter { .. } | Error::NotFigureEight(_) | Error::Json(_))
}
