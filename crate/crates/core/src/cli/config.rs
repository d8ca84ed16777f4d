//! Run configuration in a versioned `section.key = value` text format.
//!
//! ```text
//! schema_version = 1
//! experiment = converge
//! seed = 7
//! physics.kappa = 1
//! numerics.eps = 0.0625, 0.03125
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown keys are rejected so that typos do not
//! silently fall back to defaults.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{FbeError, Result};
use crate::operators::Multiplier;
use crate::stepper::{ScalePolicy, StepConfig, SubtractionRule};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Experiment {
    Run,
    Converge,
    EnergyAudit,
    DistanceAudit,
    KernelAudit,
    InterpAudit,
    Linearized,
    RoughData,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Run,
        Experiment::Converge,
        Experiment::EnergyAudit,
        Experiment::DistanceAudit,
        Experiment::KernelAudit,
        Experiment::InterpAudit,
        Experiment::Linearized,
        Experiment::RoughData,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Run => "run",
            Experiment::Converge => "converge",
            Experiment::EnergyAudit => "energy-audit",
            Experiment::DistanceAudit => "distance-audit",
            Experiment::KernelAudit => "kernel-audit",
            Experiment::InterpAudit => "interp-audit",
            Experiment::Linearized => "linearized",
            Experiment::RoughData => "rough-data",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = FbeError;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .iter()
            .copied()
            .find(|e| e.name() == s)
            .ok_or_else(|| FbeError::Config(format!("unknown experiment `{s}`")))
    }
}

/// Initial data family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Profile {
    /// `r = α(1 - x²/R²)`, `v = βx`.
    Affine,
    /// `r = α(1 - x²)(1 + tilt·x)`, `v = βx + v_amp sin(v_freq x)`.
    Smooth,
    /// The smooth profile plus `rough_amp |x - rough_center|^rough_power` in `v`.
    Rough,
}

impl Profile {
    fn name(&self) -> &'static str {
        match self {
            Profile::Affine => "affine",
            Profile::Smooth => "smooth",
            Profile::Rough => "rough",
        }
    }
}

impl FromStr for Profile {
    type Err = FbeError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "affine" => Ok(Profile::Affine),
            "smooth" => Ok(Profile::Smooth),
            "rough" => Ok(Profile::Rough),
            _ => Err(FbeError::Config(format!("unknown profile `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Physics {
    pub kappa: f64,
    pub profile: Profile,
    pub alpha: f64,
    pub beta: f64,
    pub radius: f64,
    pub tilt: f64,
    pub v_amp: f64,
    pub v_freq: f64,
    pub rough_amp: f64,
    pub rough_center: f64,
    pub rough_power: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Numerics {
    /// Cells before `grid_level` refinement.
    pub cells: usize,
    /// Each level doubles the cell count.
    pub grid_level: u32,
    /// Time-step ladder; `run` and `linearized` use the first entry.
    pub eps: Vec<f64>,
    pub t_end: f64,
    pub k: usize,
    pub report_k: usize,
    pub policy: ScalePolicy,
    pub subtraction: SubtractionRule,
    pub chi: Multiplier,
    /// Zero disables checkpoints.
    pub checkpoint_every: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Audit {
    /// Ensemble size for the energy and interpolation audits.
    pub ensemble: usize,
    /// Relative amplitude of the random perturbations.
    pub amplitude: f64,
    /// Upper bound on `A` for ensemble members.
    pub a_max: f64,
    /// State pairs in the distance audit.
    pub pairs: usize,
    /// Mass-grid cell counts of the oracle cross-validation gate.
    pub gate_cells: Vec<usize>,
    pub gate_order: f64,
    pub min_order: f64,
    /// Relative physical-energy drift allowed in `run`.
    pub drift_tol: f64,
    /// Dyadic levels `h` of the rough-data experiment.
    pub rough_levels: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub experiment: Experiment,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub physics: Physics,
    pub numerics: Numerics,
    pub audit: Audit,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            experiment: Experiment::Run,
            seed: 1,
            out_dir: PathBuf::from("out"),
            physics: Physics {
                kappa: 1.0,
                profile: Profile::Affine,
                alpha: 1.0,
                beta: -0.5,
                radius: 1.0,
                tilt: 0.2,
                v_amp: 0.1,
                v_freq: 3.0,
                rough_amp: 0.1,
                rough_center: 0.3,
                rough_power: 2.5,
            },
            numerics: Numerics {
                cells: 1024,
                grid_level: 0,
                eps: vec![0.0625, 0.03125, 0.015625, 0.0078125],
                t_end: 0.5,
                k: 9,
                report_k: 2,
                policy: ScalePolicy::Strict,
                subtraction: SubtractionRule::EpsFourth,
                chi: Multiplier::Resolvent,
                checkpoint_every: 0,
            },
            audit: Audit {
                ensemble: 100,
                amplitude: 0.05,
                a_max: 0.1,
                pairs: 8,
                gate_cells: vec![64, 128, 256],
                gate_order: 1.9,
                min_order: 0.9,
                drift_tol: 0.05,
                rough_levels: vec![1, 2, 3, 4, 5],
            },
        }
    }
}

fn policy_name(p: ScalePolicy) -> &'static str {
    match p {
        ScalePolicy::Strict => "strict",
        ScalePolicy::Desk => "desk",
    }
}

fn subtraction_name(s: SubtractionRule) -> &'static str {
    match s {
        SubtractionRule::EpsFourth => "eps4",
        SubtractionRule::Scale => "scale",
        SubtractionRule::Adaptive => "adaptive",
    }
}

fn chi_name(c: Multiplier) -> &'static str {
    match c {
        Multiplier::Resolvent => "resolvent",
        Multiplier::Pade => "pade",
    }
}

fn list<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    /// Cell count after grid refinement.
    pub fn cells(&self) -> usize {
        self.numerics.cells << self.numerics.grid_level
    }

    /// Stepper configuration for one rung of the ε ladder.
    pub fn step_config(&self, eps: f64) -> Result<StepConfig> {
        let n = &self.numerics;
        let mut cfg = StepConfig::new(eps, n.k, self.physics.kappa, self.cells(), n.policy)?
            .with_report_k(n.report_k)?
            .with_subtraction(n.subtraction);
        cfg.chi = n.chi;
        if n.checkpoint_every > 0 {
            cfg.checkpoint_every = Some(n.checkpoint_every);
            cfg.checkpoint_dir = Some(self.out_dir.join("checkpoints"));
        }
        Ok(cfg)
    }

    /// Checks that hold before any experiment starts, including the stepper's scale
    /// constraints for every ε on the ladder.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(FbeError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let p = &self.physics;
        if !(p.kappa > 0.0) {
            return Err(FbeError::Config(format!("physics.kappa = {} must be positive", p.kappa)));
        }
        if !(p.alpha > 0.0 && p.radius > 0.0) {
            return Err(FbeError::Config("physics.alpha and physics.radius must be positive".into()));
        }
        if p.tilt.abs() >= 1.0 {
            return Err(FbeError::Config(format!("physics.tilt = {} must satisfy |tilt| < 1", p.tilt)));
        }
        if p.profile == Profile::Rough && !(p.rough_power > 1.0) {
            return Err(FbeError::Config(format!(
                "physics.rough_power = {} must exceed 1 so that the mode is C¹",
                p.rough_power
            )));
        }
        let n = &self.numerics;
        if self.cells() < 64 {
            return Err(FbeError::Config(format!("numerics.cells = {} is below the minimum of 64", self.cells())));
        }
        if n.eps.is_empty() {
            return Err(FbeError::Config("numerics.eps must list at least one time step".into()));
        }
        if n.eps.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(FbeError::Config("numerics.eps must be strictly decreasing".into()));
        }
        if !(n.t_end > 0.0) {
            return Err(FbeError::Config(format!("numerics.t_end = {} must be positive", n.t_end)));
        }
        for &e in &n.eps {
            self.step_config(e)?;
        }
        let a = &self.audit;
        if a.gate_cells.len() < 2 || a.gate_cells.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FbeError::Config("audit.gate_cells needs at least two increasing entries".into()));
        }
        if a.rough_levels.len() < 3 || a.rough_levels.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(FbeError::Config("audit.rough_levels needs at least three consecutive levels".into()));
        }
        if a.ensemble == 0 || a.pairs == 0 {
            return Err(FbeError::Config("audit.ensemble and audit.pairs must be positive".into()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let p = &self.physics;
        let n = &self.numerics;
        let a = &self.audit;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("schema_version", self.schema_version.to_string());
        put("experiment", self.experiment.to_string());
        put("seed", self.seed.to_string());
        put("output.dir", self.out_dir.display().to_string());
        put("physics.kappa", p.kappa.to_string());
        put("physics.profile", p.profile.name().into());
        put("physics.alpha", p.alpha.to_string());
        put("physics.beta", p.beta.to_string());
        put("physics.radius", p.radius.to_string());
        put("physics.tilt", p.tilt.to_string());
        put("physics.v_amp", p.v_amp.to_string());
        put("physics.v_freq", p.v_freq.to_string());
        put("physics.rough_amp", p.rough_amp.to_string());
        put("physics.rough_center", p.rough_center.to_string());
        put("physics.rough_power", p.rough_power.to_string());
        put("numerics.cells", n.cells.to_string());
        put("numerics.grid_level", n.grid_level.to_string());
        put("numerics.eps", list(&n.eps));
        put("numerics.t_end", n.t_end.to_string());
        put("numerics.k", n.k.to_string());
        put("numerics.report_k", n.report_k.to_string());
        put("numerics.policy", policy_name(n.policy).into());
        put("numerics.subtraction", subtraction_name(n.subtraction).into());
        put("numerics.chi", chi_name(n.chi).into());
        put("numerics.checkpoint_every", n.checkpoint_every.to_string());
        put("audit.ensemble", a.ensemble.to_string());
        put("audit.amplitude", a.amplitude.to_string());
        put("audit.a_max", a.a_max.to_string());
        put("audit.pairs", a.pairs.to_string());
        put("audit.gate_cells", list(&a.gate_cells));
        put("audit.gate_order", a.gate_order.to_string());
        put("audit.min_order", a.min_order.to_string());
        put("audit.drift_tol", a.drift_tol.to_string());
        put("audit.rough_levels", list(&a.rough_levels));
        s
    }

    /// Parse a configuration; keys absent from the text keep their defaults.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| FbeError::Config(format!("line {}: expected `key = value`", no + 1)))?;
            let key = k.trim().to_string();
            if entries.insert(key.clone(), (no + 1, v.trim().to_string())).is_some() {
                return Err(FbeError::Config(format!("line {}: duplicate key `{key}`", no + 1)));
            }
        }
        match entries.get("schema_version") {
            None => return Err(FbeError::Config("missing schema_version".into())),
            Some((line, v)) if v != &SCHEMA_VERSION.to_string() => {
                return Err(FbeError::Config(format!(
                    "line {line}: schema_version {v} is not supported (expected {SCHEMA_VERSION})"
                )))
            }
            _ => {}
        }
        let mut c = RunConfig::default();
        for (key, (line, val)) in &entries {
            let bad = |what: &str| FbeError::Config(format!("line {line}: `{key}` expects {what}, got `{val}`"));
            let f = || val.parse::<f64>().map_err(|_| bad("a number"));
            let u = || val.parse::<usize>().map_err(|_| bad("a nonnegative integer"));
            let fl = || -> Result<Vec<f64>> {
                val.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| bad("a list of numbers"))).collect()
            };
            let ul = || -> Result<Vec<usize>> {
                val.split(',').map(|x| x.trim().parse::<usize>().map_err(|_| bad("a list of integers"))).collect()
            };
            match key.as_str() {
                "schema_version" => {}
                "experiment" => c.experiment = val.parse()?,
                "seed" => c.seed = val.parse().map_err(|_| bad("an integer"))?,
                "output.dir" => c.out_dir = PathBuf::from(val),
                "physics.kappa" => c.physics.kappa = f()?,
                "physics.profile" => c.physics.profile = val.parse()?,
                "physics.alpha" => c.physics.alpha = f()?,
                "physics.beta" => c.physics.beta = f()?,
                "physics.radius" => c.physics.radius = f()?,
                "physics.tilt" => c.physics.tilt = f()?,
                "physics.v_amp" => c.physics.v_amp = f()?,
                "physics.v_freq" => c.physics.v_freq = f()?,
                "physics.rough_amp" => c.physics.rough_amp = f()?,
                "physics.rough_center" => c.physics.rough_center = f()?,
                "physics.rough_power" => c.physics.rough_power = f()?,
                "numerics.cells" => c.numerics.cells = u()?,
                "numerics.grid_level" => c.numerics.grid_level = val.parse().map_err(|_| bad("an integer"))?,
                "numerics.eps" => c.numerics.eps = fl()?,
                "numerics.t_end" => c.numerics.t_end = f()?,
                "numerics.k" => c.numerics.k = u()?,
                "numerics.report_k" => c.numerics.report_k = u()?,
                "numerics.policy" => {
                    c.numerics.policy = match val.as_str() {
                        "strict" => ScalePolicy::Strict,
                        "desk" => ScalePolicy::Desk,
                        _ => return Err(bad("`strict` or `desk`")),
                    }
                }
                "numerics.subtraction" => {
                    c.numerics.subtraction = match val.as_str() {
                        "eps4" => SubtractionRule::EpsFourth,
                        "scale" => SubtractionRule::Scale,
                        "adaptive" => SubtractionRule::Adaptive,
                        _ => return Err(bad("`eps4`, `scale` or `adaptive`")),
                    }
                }
                "numerics.chi" => {
                    c.numerics.chi = match val.as_str() {
                        "resolvent" => Multiplier::Resolvent,
                        "pade" => Multiplier::Pade,
                        _ => return Err(bad("`resolvent` or `pade`")),
                    }
                }
                "numerics.checkpoint_every" => c.numerics.checkpoint_every = u()?,
                "audit.ensemble" => c.audit.ensemble = u()?,
                "audit.amplitude" => c.audit.amplitude = f()?,
                "audit.a_max" => c.audit.a_max = f()?,
                "audit.pairs" => c.audit.pairs = u()?,
                "audit.gate_cells" => c.audit.gate_cells = ul()?,
                "audit.gate_order" => c.audit.gate_order = f()?,
                "audit.min_order" => c.audit.min_order = f()?,
                "audit.drift_tol" => c.audit.drift_tol = f()?,
                "audit.rough_levels" => c.audit.rough_levels = ul()?,
                _ => return Err(FbeError::Config(format!("line {line}: unknown key `{key}`"))),
            }
        }
        Ok(c)
    }
}
