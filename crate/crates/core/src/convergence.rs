//! Mesh cascades: the same configuration on successively halved `(h, dt)`, compared by
//! restricting fine solutions onto the coarse cells.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::compensated::Neumaier;
use crate::error::{Error, Result};
use crate::experiments::{build_initial_state, stationary_state, ExperimentConfig};
use crate::mesh::Grid;
use crate::operators::{CellField, VectorField};
use crate::scheme::{run, SolverOptions, State, Stepper};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CascadeStart {
    /// the experiment's perturbed initial datum
    #[default]
    Initial,
    /// the hydrostatic state of the configuration
    Stationary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeSpec {
    pub experiment: ExperimentConfig,
    /// `n2` of the coarsest level; level `l` uses `n2 2^l`
    pub n2_coarse: usize,
    pub levels: usize,
    pub t_end: f64,
    /// `dt = dt_over_h h`
    pub dt_over_h: f64,
    pub alpha: f64,
    /// exponent of the space-time norm
    pub q: f64,
    pub start: CascadeStart,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl CascadeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(Error::config("a cascade needs at least two levels"));
        }
        if self.n2_coarse < 2 {
            return Err(Error::config("n2_coarse must be at least 2"));
        }
        if !(self.q >= 1.0) || !self.q.is_finite() {
            return Err(Error::config(format!("q must be a finite number >= 1, got {}", self.q)));
        }
        if !(self.t_end > 0.0) || !(self.dt_over_h > 0.0) {
            return Err(Error::config("t_end and dt_over_h must be positive"));
        }
        let steps = self.t_end / (self.dt_over_h * 2.0 / self.n2_coarse as f64);
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::config(format!(
                "t_end = {} is not a whole number of coarse steps ({steps})",
                self.t_end
            )));
        }
        self.experiment.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeLevel {
    pub n2: usize,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    /// distance to the next finer level, per field `rho, u1, u2, theta`
    pub field_diff: Option<[f64; 4]>,
    /// combined distance `d_n`
    pub diff: Option<f64>,
    /// `log2(d_n / d_{n+1})`
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeResult {
    pub q: f64,
    pub t_end: f64,
    pub levels: Vec<CascadeLevel>,
    /// set when a level failed; the levels before it are still reported
    pub failure: Option<String>,
}

impl CascadeResult {
    pub fn diffs(&self) -> Vec<f64> {
        self.levels.iter().filter_map(|l| l.diff).collect()
    }

    pub fn orders(&self) -> Vec<f64> {
        self.levels.iter().filter_map(|l| l.order).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,h,dt,d_n,order,d_rho,d_u1,d_u2,d_theta\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        for (i, l) in self.levels.iter().enumerate() {
            let f = l.field_diff.map(|d| d.map(Some)).unwrap_or([None; 4]);
            let _ = writeln!(
                s,
                "{i},{:.17e},{:.17e},{},{},{},{},{},{}",
                l.h,
                l.dt,
                opt(l.diff),
                opt(l.order),
                opt(f[0]),
                opt(f[1]),
                opt(f[2]),
                opt(f[3])
            );
        }
        s
    }
}

/// Averages of 2x2 blocks of `fine` onto `coarse`.
pub fn restrict(fine_grid: &Grid, coarse_grid: &Grid, fine: &[f64]) -> Result<CellField> {
    if fine_grid.n1() != 2 * coarse_grid.n1() || fine_grid.n2() != 2 * coarse_grid.n2() {
        return Err(Error::domain(format!(
            "cannot restrict {}x{} onto {}x{}",
            fine_grid.n1(),
            fine_grid.n2(),
            coarse_grid.n1(),
            coarse_grid.n2()
        )));
    }
    let mut out = CellField::zeros(coarse_grid);
    for j in 0..coarse_grid.n2() {
        for i in 0..coarse_grid.n1() {
            let s = fine[fine_grid.idx(2 * i, 2 * j)]
                + fine[fine_grid.idx(2 * i + 1, 2 * j)]
                + fine[fine_grid.idx(2 * i, 2 * j + 1)]
                + fine[fine_grid.idx(2 * i + 1, 2 * j + 1)];
            out[coarse_grid.idx(i, j)] = 0.25 * s;
        }
    }
    Ok(out)
}

pub fn restrict_state(fine_grid: &Grid, coarse_grid: &Grid, s: &State) -> Result<State> {
    let u0 = restrict(fine_grid, coarse_grid, &s.u.c[0])?;
    let u1 = restrict(fine_grid, coarse_grid, &s.u.c[1])?;
    let mut u = VectorField::zeros(coarse_grid);
    u.c = [u0, u1];
    Ok(State {
        rho: restrict(fine_grid, coarse_grid, &s.rho)?,
        u,
        theta: restrict(fine_grid, coarse_grid, &s.theta)?,
        t: s.t,
    })
}

fn fields(s: &State) -> [&[f64]; 4] {
    [&s.rho, &s.u.c[0], &s.u.c[1], &s.theta]
}

/// `int_0^T ||U_c - R U_f||^q` per field for piecewise-constant (right endpoint) interpolants.
/// `coarse[k]` is the state at `k dt_c`, `fine[k]` at `k dt_c / 2`; index 0 is the initial state.
pub fn space_time_diff(
    coarse_grid: &Grid,
    fine_grid: &Grid,
    coarse: &[State],
    fine: &[State],
    dt_fine: f64,
    q: f64,
) -> Result<[f64; 4]> {
    if fine.len() != 2 * coarse.len() - 1 {
        return Err(Error::domain(format!(
            "{} fine states do not pair with {} coarse states",
            fine.len(),
            coarse.len()
        )));
    }
    let mut acc = [Neumaier::new(); 4];
    let area = coarse_grid.cell_area();
    for j in 1..fine.len() {
        let rf = restrict_state(fine_grid, coarse_grid, &fine[j])?;
        let c = &coarse[j.div_ceil(2)];
        for (f, (a, b)) in fields(c).into_iter().zip(fields(&rf)).enumerate() {
            let mut s = Neumaier::new();
            for (x, y) in a.iter().zip(b) {
                s.add((x - y).abs().powf(q));
            }
            acc[f].add(dt_fine * area * s.value());
        }
    }
    Ok(acc.map(|a| a.value().powf(1.0 / q)))
}

fn combine(d: &[f64; 4], q: f64) -> f64 {
    d.iter().map(|x| x.powf(q)).sum::<f64>().powf(1.0 / q)
}

/// Every state of one level, index 0 the initial one.
pub fn run_level(spec: &CascadeSpec, level: usize) -> Result<(Grid, f64, Vec<State>)> {
    let n2 = spec.n2_coarse << level;
    let grid = Grid::rayleigh_benard(n2)?;
    let dt = spec.dt_over_h * grid.h();
    let init = match spec.start {
        CascadeStart::Initial => build_initial_state(&spec.experiment, &grid)?,
        CascadeStart::Stationary => stationary_state(&spec.experiment, &grid)?,
    };
    let params = spec.experiment.scheme_params(&grid, spec.alpha, dt)?;
    let mut stepper = Stepper::new(grid.clone(), params, spec.solver.clone())?;
    let traj = run(&mut stepper, init, spec.t_end, 1, &mut |_: usize, _: &State, _: &State, _: &_| Ok(()))?;
    Ok((grid, dt, traj.states().to_vec()))
}

/// Runs the levels coarse to fine, keeping two levels in memory at a time.
pub fn run_cascade(spec: &CascadeSpec) -> Result<CascadeResult> {
    spec.validate()?;
    let mut out = CascadeResult {
        q: spec.q,
        t_end: spec.t_end,
        levels: Vec::new(),
        failure: None,
    };
    let mut prev: Option<(Grid, Vec<State>)> = None;
    for level in 0..spec.levels {
        let (grid, dt, states) = match run_level(spec, level) {
            Ok(r) => r,
            Err(e) => {
                out.failure = Some(format!("level {level}: {e}"));
                break;
            }
        };
        if let Some((cg, cs)) = prev.take() {
            let d = space_time_diff(&cg, &grid, &cs, &states, dt, spec.q)?;
            let last = out.levels.len() - 1;
            out.levels[last].field_diff = Some(d);
            out.levels[last].diff = Some(combine(&d, spec.q));
        }
        out.levels.push(CascadeLevel {
            n2: grid.n2(),
            h: grid.h(),
            dt,
            steps: states.len() - 1,
            field_diff: None,
            diff: None,
            order: None,
        });
        prev = Some((grid, states));
    }
    let diffs: Vec<Option<f64>> = out.levels.iter().map(|l| l.diff).collect();
    for i in 0..diffs.len().saturating_sub(1) {
        if let (Some(a), Some(b)) = (diffs[i], diffs[i + 1]) {
            if a > 0.0 && b > 0.0 {
                out.levels[i].order = Some((a / b).log2());
            }
        }
    }
    Ok(out)
}
