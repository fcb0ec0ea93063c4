//! Fully implicit finite volume scheme for the Navier-Stokes-Fourier system.

mod residual;
mod stepper;
mod trajectory;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Grid;
use crate::operators::{check_alpha, BoundaryClosure, CellField, VectorField};
use crate::thermo::GasLaw;

pub use residual::Discretization;
pub use stepper::{run, step_count, StepObserver, StepReport, Stepper};
pub use trajectory::Trajectory;

/// Lower bound kept by the Newton line search on density and temperature.
pub const POSITIVITY_FLOOR: f64 = 1e-10;

/// Unknowns per cell in the packed Newton vector: `rho, u1, u2, theta`.
pub const VARS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub rho: CellField,
    pub u: VectorField,
    pub theta: CellField,
    pub t: f64,
}

impl State {
    pub fn uniform(grid: &Grid, rho: f64, u: [f64; 2], theta: f64) -> Self {
        State {
            rho: CellField::constant(grid, rho),
            u: VectorField {
                c: [CellField::constant(grid, u[0]), CellField::constant(grid, u[1])],
            },
            theta: CellField::constant(grid, theta),
            t: 0.0,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.rho.len()
    }

    /// Interleaved `[rho, u1, u2, theta]` per cell.
    pub fn pack(&self) -> Vec<f64> {
        let mut x = vec![0.0; VARS * self.n_cells()];
        self.pack_into(&mut x);
        x
    }

    pub fn pack_into(&self, x: &mut [f64]) {
        for k in 0..self.n_cells() {
            x[VARS * k] = self.rho[k];
            x[VARS * k + 1] = self.u.c[0][k];
            x[VARS * k + 2] = self.u.c[1][k];
            x[VARS * k + 3] = self.theta[k];
        }
    }

    pub fn unpack(x: &[f64], t: f64) -> Self {
        let n = x.len() / VARS;
        let pick = |v: usize| CellField::from_vec((0..n).map(|k| x[VARS * k + v]).collect());
        State {
            rho: pick(0),
            u: VectorField { c: [pick(1), pick(2)] },
            theta: pick(3),
            t,
        }
    }

    pub fn is_positive(&self) -> bool {
        self.rho.iter().chain(self.theta.iter()).all(|v| *v > 0.0)
    }

    /// Largest absolute difference over all cells and variables.
    pub fn max_abs_diff(&self, other: &State) -> f64 {
        let fields = |s: &State| [&s.rho, &s.u.c[0], &s.u.c[1], &s.theta].map(|f| f.clone());
        let (a, b) = (fields(self), fields(other));
        a.iter()
            .zip(b.iter())
            .flat_map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| (p - q).abs()))
            .fold(0.0, f64::max)
    }

    /// `a + s (b - a)` in every field, time included.
    pub fn blend(a: &State, b: &State, s: f64) -> State {
        let mix = |x: &CellField, y: &CellField| {
            CellField::from_vec(x.iter().zip(y.iter()).map(|(p, q)| p + s * (q - p)).collect())
        };
        State {
            rho: mix(&a.rho, &b.rho),
            u: VectorField {
                c: [mix(&a.u.c[0], &b.u.c[0]), mix(&a.u.c[1], &b.u.c[1])],
            },
            theta: mix(&a.theta, &b.theta),
            t: a.t + s * (b.t - a.t),
        }
    }
}

/// How the temperature wall closure enters the pressure and the `rho theta` flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WallTreatment {
    /// Wall-face pressure `rho_in theta_B` and the artificial `rho theta` diffusion taken
    /// through the wall with the temperature ghost. Keeps the hydrostatic affine state an
    /// exact discrete solution.
    #[default]
    Balanced,
    /// Interior pressure on wall faces and no artificial flux through walls.
    ZeroFlux,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub mu: f64,
    /// Second viscosity coefficient `lambda = eta - mu` (two dimensions).
    pub lambda: f64,
    pub kappa: f64,
    pub law: GasLaw,
    pub alpha: f64,
    pub dt: f64,
    /// Vertical component of `grad G`.
    pub g: f64,
    pub closure: BoundaryClosure,
    #[serde(default)]
    pub wall: WallTreatment,
}

impl SchemeParams {
    /// Parameters from the bulk viscosity `eta`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_bulk(
        mu: f64,
        eta: f64,
        kappa: f64,
        law: GasLaw,
        alpha: f64,
        dt: f64,
        g: f64,
        closure: BoundaryClosure,
    ) -> Self {
        SchemeParams {
            mu,
            lambda: eta - mu,
            kappa,
            law,
            alpha,
            dt,
            g,
            closure,
            wall: WallTreatment::default(),
        }
    }

    pub fn eta(&self) -> f64 {
        self.lambda + self.mu
    }

    /// Validates against `grid`; returns soft warnings (time step outside `[0.1 h, 2 h]`).
    pub fn validate(&self, grid: &Grid) -> Result<Vec<String>> {
        if !(self.mu > 0.0) {
            return Err(Error::config(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.eta() >= 0.0) {
            return Err(Error::config(format!("bulk viscosity must be nonnegative, got {}", self.eta())));
        }
        if !(2.0 * self.mu + self.lambda > 0.0) {
            return Err(Error::config("2 mu + lambda must be positive"));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::config(format!("kappa must be positive, got {}", self.kappa)));
        }
        check_alpha(self.alpha)?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::config(format!("dt must be positive, got {}", self.dt)));
        }
        if !self.g.is_finite() {
            return Err(Error::config("gravity must be finite"));
        }
        self.closure.validate(grid)?;
        let mut warnings = Vec::new();
        let ratio = self.dt / grid.h();
        if !(0.1..=2.0).contains(&ratio) {
            warnings.push(format!("dt/h = {ratio} lies outside [0.1, 2]"));
        }
        Ok(warnings)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearSolver {
    /// Banded LU; practical up to a few thousand cells.
    Direct,
    /// Restarted GMRES with an ILU(0) preconditioner.
    #[default]
    Krylov,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Bound on `dt * max |R|` over all residual rows.
    pub newton_tol: f64,
    pub max_newton: usize,
    pub linear: LinearSolver,
    /// Backtracking factor of the line search.
    pub damping: f64,
    pub krylov_rtol: f64,
    pub krylov_restart: usize,
    pub krylov_max_iter: usize,
    /// Number of times a failing step may halve its time step.
    pub max_halvings: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            newton_tol: 1e-8,
            max_newton: 15,
            linear: LinearSolver::Krylov,
            damping: 0.5,
            krylov_rtol: 1e-6,
            krylov_restart: 40,
            krylov_max_iter: 400,
            max_halvings: 3,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) {
            return Err(Error::config("newton_tol must be positive"));
        }
        if self.max_newton < 1 {
            return Err(Error::config("max_newton must be at least 1"));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::config("damping must lie in (0, 1)"));
        }
        if !(self.krylov_rtol > 0.0 && self.krylov_rtol < 1.0) || self.krylov_restart == 0 {
            return Err(Error::config("invalid Krylov settings"));
        }
        Ok(())
    }
}
