use serde::{Deserialize, Serialize};

use crate::convergence::CascadeStart;
use crate::diagnostics::WindowSpec;
use crate::error::{Error, Result};
use crate::experiments::{build_initial_state, preset, stationary_state, Exp1Variant, ExperimentConfig, PerturbationSpec};
use crate::mesh::Grid;
use crate::operators::check_alpha;
use crate::scheme::{SchemeParams, SolverOptions, State, WallTreatment};
use crate::thermo::GasLaw;

/// A preset number, or a complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExperimentRef {
    Preset(u8),
    Full(Box<ExperimentConfig>),
}

impl Default for ExperimentRef {
    fn default() -> Self {
        ExperimentRef::Preset(2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPlan {
    /// series row every this many steps
    pub series_every: usize,
    /// time between snapshots; a multiple of dt
    pub snapshot_cadence: f64,
    /// write an ASCII VTK file next to each binary snapshot
    pub vtk: bool,
    pub checkpoint_every: usize,
}

impl Default for OutputPlan {
    fn default() -> Self {
        OutputPlan {
            series_every: 1,
            snapshot_cadence: 2.0,
            vtk: true,
            checkpoint_every: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsPlan {
    /// `T_m = m cadence`; defaults to the snapshot cadence
    pub cadence: Option<f64>,
    pub m0: usize,
    /// defaults to the last snapshot
    pub m_ref: Option<usize>,
    pub bins: usize,
    pub e3: bool,
}

impl Default for StatsPlan {
    fn default() -> Self {
        StatsPlan {
            cadence: None,
            m0: 0,
            m_ref: None,
            bins: 50,
            e3: false,
        }
    }
}

/// The user-facing run description. Everything except `experiment` is optional.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentRef,
    /// first experiment only: `theta_L = 1, g = S_theta = slope`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_low: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_high: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n2: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_over_h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// `stationary` starts from the hydrostatic state instead of the experiment's datum
    pub start: CascadeStart,
    pub wall: WallTreatment,
    pub solver: SolverOptions,
    pub output: OutputPlan,
    pub stats: StatsPlan,
}

pub const DEFAULT_ALPHA: f64 = 0.6;
pub const DEFAULT_DT_OVER_H: f64 = 0.5;
pub const DEFAULT_T_END: f64 = 10.0;

/// A validated run with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedRun {
    pub experiment: ExperimentConfig,
    pub grid: Grid,
    pub params: SchemeParams,
    pub solver: SolverOptions,
    pub t_end: f64,
    pub start: CascadeStart,
    pub output: OutputPlan,
    pub stats: StatsPlan,
    /// steps between snapshots
    pub snapshot_steps: usize,
    /// the same run as an explicit config; parsing it gives back this value
    pub config: RunConfig,
    pub warnings: Vec<String>,
}

impl ResolvedRun {
    pub fn dt(&self) -> f64 {
        self.params.dt
    }

    pub fn initial_state(&self) -> Result<State> {
        match self.start {
            CascadeStart::Initial => build_initial_state(&self.experiment, &self.grid),
            CascadeStart::Stationary => stationary_state(&self.experiment, &self.grid),
        }
    }

    pub fn steps(&self) -> usize {
        crate::scheme::step_count(0.0, self.t_end, self.params.dt)
    }

    pub fn stats_window(&self, snapshots: usize) -> Result<WindowSpec> {
        let cadence = self.stats.cadence.unwrap_or(self.output.snapshot_cadence);
        let last = (self.t_end / cadence + 1e-9).floor() as usize;
        let w = WindowSpec {
            cadence,
            m0: self.stats.m0,
            m_ref: self.stats.m_ref.unwrap_or(last.min(snapshots)),
        };
        w.validate()?;
        Ok(w)
    }
}

/// Parses a config document, or the `config` member of an archive's metadata.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::config(format!("invalid JSON: {e}")))?;
    let value = match value {
        serde_json::Value::Object(ref m) if m.get("format").and_then(|f| f.as_str()) == Some(super::METADATA_FORMAT) => {
            m.get("config").cloned().ok_or_else(|| Error::config("metadata has no config member"))?
        }
        v => v,
    };
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        Error::config(format!("at `{path}`: {}", e.into_inner()))
    })
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(format!("{name} must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn resolve(&self) -> Result<ResolvedRun> {
        let mut exp = match &self.experiment {
            ExperimentRef::Preset(1) => match self.slope {
                Some(s) => ExperimentConfig::exp1(Exp1Variant::Slope(s)),
                None => ExperimentConfig::exp1(Exp1Variant::Stable),
            },
            ExperimentRef::Preset(id) => {
                if self.slope.is_some() {
                    return Err(Error::config("`slope` applies to experiment 1 only"));
                }
                preset(*id)?
            }
            ExperimentRef::Full(cfg) => {
                if self.slope.is_some() {
                    return Err(Error::config("`slope` applies to experiment 1 presets only"));
                }
                (**cfg).clone()
            }
        };
        if let Some(v) = self.gamma {
            GasLaw::new(v)?;
            exp.gamma = v;
        }
        if let Some(v) = self.mu {
            exp.mu = v;
        }
        if let Some(v) = self.lambda {
            exp.lambda = v;
        }
        if let Some(v) = self.kappa {
            if !(v > 0.0) {
                return Err(Error::config(format!("kappa must be positive, got {v}")));
            }
            exp.kappa = v;
        }
        if let Some(v) = self.g {
            exp.g = v;
        }
        if let Some(v) = self.theta_low {
            exp.theta_low = v;
        }
        if let Some(v) = self.theta_high {
            exp.theta_high = v;
        }
        if self.seed.is_some() || self.perturbation_c.is_some() {
            let seed = self.seed.unwrap_or(exp.perturbation.seed);
            let c = self.perturbation_c.unwrap_or(exp.perturbation.c);
            exp.perturbation = PerturbationSpec::from_seed(seed, c);
        }
        if let Some(n2) = self.n2 {
            exp.n2 = n2;
        }
        exp.validate()?;
        let grid = exp.grid()?;

        let alpha = check_alpha(self.alpha.unwrap_or(DEFAULT_ALPHA))?;
        let dt = match (self.dt, self.dt_over_h) {
            (Some(_), Some(_)) => return Err(Error::config("give either `dt` or `dt_over_h`, not both")),
            (Some(dt), None) => positive("dt", dt)?,
            (None, r) => positive("dt_over_h", r.unwrap_or(DEFAULT_DT_OVER_H))? * grid.h(),
        };
        let t_end = self.t_end.unwrap_or(DEFAULT_T_END);
        if !(t_end >= 0.0) || !t_end.is_finite() {
            return Err(Error::config(format!("t_end must be nonnegative, got {t_end}")));
        }
        let mut params = exp.scheme_params(&grid, alpha, dt)?;
        params.wall = self.wall;
        let warnings = params.validate(&grid)?;
        self.solver.validate()?;

        let out = &self.output;
        if out.series_every == 0 || out.checkpoint_every == 0 {
            return Err(Error::config("series_every and checkpoint_every must be at least 1"));
        }
        positive("snapshot_cadence", out.snapshot_cadence)?;
        let ratio = out.snapshot_cadence / dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio || ratio.round() < 1.0 {
            return Err(Error::config(format!(
                "snapshot_cadence {} is not a multiple of dt = {dt}",
                out.snapshot_cadence
            )));
        }
        if let Some(c) = self.stats.cadence {
            positive("stats.cadence", c)?;
        }
        if self.stats.bins == 0 {
            return Err(Error::config("stats.bins must be at least 1"));
        }

        let config = RunConfig {
            experiment: ExperimentRef::Full(Box::new(exp.clone())),
            slope: None,
            seed: None,
            perturbation_c: None,
            gamma: None,
            mu: None,
            lambda: None,
            kappa: None,
            g: None,
            theta_low: None,
            theta_high: None,
            n2: None,
            alpha: Some(alpha),
            dt: Some(dt),
            dt_over_h: None,
            t_end: Some(t_end),
            start: self.start,
            wall: self.wall,
            solver: self.solver.clone(),
            output: self.output.clone(),
            stats: self.stats.clone(),
        };
        if self.start == CascadeStart::Stationary {
            stationary_state(&exp, &grid)?;
        }
        Ok(ResolvedRun {
            experiment: exp,
            grid,
            params,
            solver: self.solver.clone(),
            t_end,
            start: self.start,
            output: self.output.clone(),
            stats: self.stats.clone(),
            snapshot_steps: ratio.round() as usize,
            config,
            warnings,
        })
    }
}
