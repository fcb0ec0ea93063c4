//! Rayleigh-Benard problem family on `[-2, 2] x [-1, 1]`: presets, initial and wall data.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Grid;
use crate::operators::{BoundaryClosure, CellField, VectorField};
use crate::scheme::{SchemeParams, State, WallTreatment};
use crate::thermo::{rayleigh_number, GasLaw, RayleighInputs};

pub const MODES: usize = 10;

/// `P(x1) = sum_j a_j cos(b_j + 2 j pi x1)` with `sum a_j = 1`, scaled by `c` in the bulk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub a: [f64; MODES],
    pub b: [f64; MODES],
    pub c: f64,
    pub seed: u64,
}

impl PerturbationSpec {
    /// Draws `a_j` uniform in `[0, 1]` (then normalised) and `b_j` uniform in `[-pi, pi]`.
    pub fn from_seed(seed: u64, c: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = [0.0; MODES];
        let mut b = [0.0; MODES];
        for j in 0..MODES {
            a[j] = rng.random_range(0.0..=1.0);
            b[j] = rng.random_range(-PI..=PI);
        }
        let sum: f64 = a.iter().sum();
        if sum > 0.0 {
            a.iter_mut().for_each(|v| *v /= sum);
        } else {
            a = [1.0 / MODES as f64; MODES];
        }
        PerturbationSpec { a, b, c, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::config("perturbation amplitudes must lie in [0, 1]"));
        }
        if (self.a.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::config("perturbation amplitudes must sum to 1"));
        }
        if self.b.iter().any(|v| !(-PI..=PI).contains(v)) {
            return Err(Error::config("perturbation phases must lie in [-pi, pi]"));
        }
        if !self.c.is_finite() {
            return Err(Error::config("perturbation scale must be finite"));
        }
        Ok(())
    }
}

pub fn sample_perturbation(spec: &PerturbationSpec, x1: f64) -> f64 {
    (0..MODES)
        .map(|j| spec.a[j] * (spec.b[j] + 2.0 * (j + 1) as f64 * PI * x1).cos())
        .sum()
}

/// `P_hat(x2)`, the bulk temperature profile added to the initial datum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BulkProfile {
    None,
    /// `100 cos^2(pi x2)` on `[-1/2, 1/2]`.
    CentralBump,
    /// Replaces the affine profile by a thin hot bottom layer over a nearly uniform bulk.
    ThinLayer,
}

/// `P_tilde(x1)`, the perturbation of the top wall temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WallPerturbation {
    None,
    /// `P(x1) / 2`
    HalfP,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: u8,
    pub label: String,
    pub theta_low: f64,
    pub theta_high: f64,
    pub g: f64,
    pub bulk: BulkProfile,
    pub wall_perturbation: WallPerturbation,
    pub perturbation: PerturbationSpec,
    pub mu: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub gamma: f64,
    /// Cells across the layer; the grid is `2 n2 x n2`.
    pub n2: usize,
}

/// Sub-variants of the first experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exp1Variant {
    /// `theta_L = 1`, `g = S_theta`.
    Slope(f64),
    /// `g = S_theta = -0.3` with the central bump.
    Stable,
}

pub const EXP1_SLOPES: [f64; 5] = [-100.0, -10.0, -2.0, -1.1, -1.0];
pub const DEFAULT_SEED: u64 = 42;

impl ExperimentConfig {
    fn base(id: u8, label: &str, theta_low: f64, theta_high: f64, g: f64) -> Self {
        ExperimentConfig {
            id,
            label: label.to_string(),
            theta_low,
            theta_high,
            g,
            bulk: BulkProfile::None,
            wall_perturbation: WallPerturbation::None,
            perturbation: PerturbationSpec::from_seed(DEFAULT_SEED, 0.01),
            mu: 0.1,
            lambda: 0.1,
            kappa: 0.01,
            gamma: 1.4,
            n2: 80,
        }
    }

    pub fn exp1(variant: Exp1Variant) -> Self {
        match variant {
            Exp1Variant::Slope(s) => Self::base(1, &format!("slope {s}"), 1.0, 1.0 - 2.0 * s, s),
            Exp1Variant::Stable => {
                let mut c = Self::base(1, "stable", 1.0, 1.6, -0.3);
                c.bulk = BulkProfile::CentralBump;
                c
            }
        }
    }

    pub fn s_theta(&self) -> f64 {
        0.5 * (self.theta_low - self.theta_high)
    }

    pub fn theta_mean(&self) -> f64 {
        0.5 * (self.theta_low + self.theta_high)
    }

    pub fn law(&self) -> Result<GasLaw> {
        GasLaw::new(self.gamma)
    }

    pub fn rayleigh(&self) -> Result<f64> {
        rayleigh_number(&RayleighInputs::for_walls(
            self.g,
            self.theta_low,
            self.theta_high,
            self.mu,
            self.kappa,
        ))
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::rayleigh_benard(self.n2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta_low > 0.0 && self.theta_high > 0.0) {
            return Err(Error::config("wall temperatures must be positive"));
        }
        if !(self.mu > 0.0) || !(self.kappa > 0.0) {
            return Err(Error::config("mu and kappa must be positive"));
        }
        if !(2.0 * self.mu + self.lambda > 0.0) {
            return Err(Error::config("2 mu + lambda must be positive"));
        }
        if !self.g.is_finite() {
            return Err(Error::config("gravity must be finite"));
        }
        GasLaw::new(self.gamma)?;
        self.perturbation.validate()
    }

    pub fn wall_perturbation_at(&self, x1: f64) -> f64 {
        match self.wall_perturbation {
            WallPerturbation::None => 0.0,
            WallPerturbation::HalfP => 0.5 * sample_perturbation(&self.perturbation, x1),
        }
    }

    pub fn bulk_at(&self, x2: f64) -> f64 {
        match self.bulk {
            BulkProfile::None => 0.0,
            BulkProfile::CentralBump => {
                if (-0.5..=0.5).contains(&x2) {
                    100.0 * (PI * x2).cos().powi(2)
                } else {
                    0.0
                }
            }
            BulkProfile::ThinLayer => {
                let layer = if x2 <= -0.9 {
                    self.theta_high
                } else if x2 <= -0.8 {
                    0.5 + 14.5 * (5.0 * PI * (x2 + 0.9)).cos().powi(2)
                } else if x2 <= 0.8 {
                    0.5 + 0.5 * (5.0 * PI * (x2 - 0.8) / 16.0).cos().powi(2)
                } else {
                    self.theta_low
                };
                layer - (self.theta_mean() + self.s_theta() * x2)
            }
        }
    }

    /// Bottom trace `theta_H`, top trace `theta_L + P_tilde(x1)` at wall face centres.
    pub fn wall_closure(&self, grid: &Grid) -> BoundaryClosure {
        BoundaryClosure {
            theta_bottom: vec![self.theta_high; grid.n1()],
            theta_top: (0..grid.n1())
                .map(|i| self.theta_low + self.wall_perturbation_at(grid.x1(i)))
                .collect(),
        }
    }

    pub fn scheme_params(&self, grid: &Grid, alpha: f64, dt: f64) -> Result<SchemeParams> {
        let p = SchemeParams {
            mu: self.mu,
            lambda: self.lambda,
            kappa: self.kappa,
            law: self.law()?,
            alpha,
            dt,
            g: self.g,
            closure: self.wall_closure(grid),
            wall: WallTreatment::default(),
        };
        p.validate(grid)?;
        Ok(p)
    }
}

/// Presets 2 to 5; the first experiment goes through [`ExperimentConfig::exp1`].
pub fn preset(id: u8) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig::base(id, "", 1.0, 15.0, -10.0);
    match id {
        1 => return Ok(ExperimentConfig::exp1(Exp1Variant::Stable)),
        2 => c.label = "turbulent".into(),
        3 => {
            c.label = "large initial energy".into();
            c.bulk = BulkProfile::CentralBump;
        }
        4 => {
            c.label = "small initial energy".into();
            c.bulk = BulkProfile::ThinLayer;
        }
        5 => {
            c.label = "boundary perturbation".into();
            c.wall_perturbation = WallPerturbation::HalfP;
        }
        _ => return Err(Error::config(format!("unknown experiment {id}, expected 1 to 5"))),
    }
    Ok(c)
}

fn check_box(grid: &Grid) -> Result<()> {
    if (grid.half_width() - 2.0).abs() > 1e-12 || (grid.half_height() - 1.0).abs() > 1e-12 {
        return Err(Error::config("experiments live on [-2, 2] x [-1, 1]"));
    }
    Ok(())
}

/// Cell-centre samples of the initial density, velocity and temperature.
pub fn build_initial_state(cfg: &ExperimentConfig, grid: &Grid) -> Result<State> {
    check_box(grid)?;
    cfg.validate()?;
    let c = cfg.perturbation.c;
    let (tm, s) = (cfg.theta_mean(), cfg.s_theta());
    let rho = CellField::from_fn(grid, |x| 1.2 + (PI * x[1] / 2.0).sin());
    let u = VectorField::from_fn(grid, |x| [0.0, c * (2.0 * PI * x[1]).sin()]);
    let theta = CellField::from_fn(grid, |x| {
        tm + s * x[1]
            + c * sample_perturbation(&cfg.perturbation, x[0]) * (PI * x[1]).sin()
            + cfg.wall_perturbation_at(x[0]) * (PI * (x[1] + 1.0) / 4.0).sin()
            + cfg.bulk_at(x[1])
    });
    if theta.min() <= 0.0 {
        return Err(Error::config(format!(
            "initial temperature reaches {} <= 0",
            theta.min()
        )));
    }
    Ok(State {
        rho,
        u,
        theta,
        t: 0.0,
    })
}

/// `rho = 1.2, u = 0, theta = theta_M + S_theta x2`, requiring `g = S_theta` and flat walls.
pub fn stationary_state(cfg: &ExperimentConfig, grid: &Grid) -> Result<State> {
    check_box(grid)?;
    if (cfg.g - cfg.s_theta()).abs() > 1e-12 * cfg.g.abs().max(1.0) {
        return Err(Error::config(format!(
            "no hydrostatic state: g = {} differs from S_theta = {}",
            cfg.g,
            cfg.s_theta()
        )));
    }
    if cfg.wall_perturbation != WallPerturbation::None {
        return Err(Error::config("no hydrostatic state with a perturbed wall temperature"));
    }
    let (tm, s) = (cfg.theta_mean(), cfg.s_theta());
    Ok(State {
        rho: CellField::constant(grid, 1.2),
        u: VectorField::zeros(grid),
        theta: CellField::from_fn(grid, |x| tm + s * x[1]),
        t: 0.0,
    })
}
