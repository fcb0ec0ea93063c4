//! Runtime witnesses of the scheme's structure: ranges, conservation, entropy sign,
//! ballistic energy, renormalised density decay and windowed a-priori bounds.

use serde::{Deserialize, Serialize};

use crate::compensated::{sum, Neumaier};
use crate::error::{Error, Result};
use crate::mesh::{CellOrGhost, FaceKind, Grid};
use crate::operators::{div_cell, Bc, BoundaryClosure, CellField};
use crate::scheme::{Discretization, SchemeParams, State, Trajectory};
use crate::thermo::{ballistic_energy, GasLaw};

/// Extrema of density, temperature and speed over a set of states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisBReport {
    pub rho_min: f64,
    pub rho_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub speed_max: f64,
    pub violation: bool,
    pub samples: usize,
}

impl Default for HypothesisBReport {
    fn default() -> Self {
        HypothesisBReport {
            rho_min: f64::INFINITY,
            rho_max: f64::NEG_INFINITY,
            theta_min: f64::INFINITY,
            theta_max: f64::NEG_INFINITY,
            speed_max: 0.0,
            violation: false,
            samples: 0,
        }
    }
}

impl HypothesisBReport {
    pub fn of_state(s: &State) -> Self {
        let mut r = Self::default();
        r.update(s);
        r
    }

    pub fn update(&mut self, s: &State) {
        for k in 0..s.n_cells() {
            let (rho, th) = (s.rho[k], s.theta[k]);
            self.rho_min = self.rho_min.min(rho);
            self.rho_max = self.rho_max.max(rho);
            self.theta_min = self.theta_min.min(th);
            self.theta_max = self.theta_max.max(th);
            self.speed_max = self.speed_max.max(s.u.c[0][k].hypot(s.u.c[1][k]));
            // NaN compares false and would hide a broken state
            if !(rho > 0.0 && th > 0.0) {
                self.violation = true;
            }
        }
        self.samples += 1;
    }

    pub fn merge(&mut self, o: &HypothesisBReport) {
        self.rho_min = self.rho_min.min(o.rho_min);
        self.rho_max = self.rho_max.max(o.rho_max);
        self.theta_min = self.theta_min.min(o.theta_min);
        self.theta_max = self.theta_max.max(o.theta_max);
        self.speed_max = self.speed_max.max(o.speed_max);
        self.violation |= o.violation;
        self.samples += o.samples;
    }
}

pub fn check_hypothesis_b(states: &[State]) -> Result<HypothesisBReport> {
    if states.is_empty() {
        return Err(Error::Range("empty window".into()));
    }
    let mut r = HypothesisBReport::default();
    for s in states {
        r.update(s);
    }
    Ok(r)
}

/// `sum rho h^2`.
pub fn mass_total(grid: &Grid, s: &State) -> f64 {
    sum(s.rho.iter().copied()) * grid.cell_area()
}

/// Internal energy identity tested with `phi = 1`, per unit area and scaled by `dt`:
/// `dt |c_v sum D_t(rho theta) h^2 + wall outflow - sum (S - pI):grad u h^2| / |Omega|`.
/// Interior convective, artificial and conductive fluxes telescope away.
pub fn energy_budget_residual(disc: &Discretization, prev: &State, cand: &State, dt: f64) -> f64 {
    let grid = disc.grid();
    let cv = disc.params().law.c_v();
    let area = grid.cell_area();
    let mut acc = Neumaier::new();
    for k in 0..grid.n_cells() {
        acc.add(cv * (cand.rho[k] * cand.theta[k] - prev.rho[k] * prev.theta[k]) / dt * area);
    }
    let x = cand.pack();
    acc.add(disc.wall_energy_outflow(&x));
    for phi in disc.dissipation_density(&x) {
        acc.add(-phi * area);
    }
    dt * acc.value().abs() / grid.area()
}

/// Entropy production
/// `sum_K (S:grad u)_K / theta_K h^2 + sum_faces kappa w ([[theta]] / h)^2 h^2`.
/// Interior faces use `w = 1 / (theta_in theta_out)`; wall faces use the wall temperature in
/// place of the ghost, `w = 1 / (theta_in theta_B)`, since the ghost can be negative.
pub fn entropy_production(disc: &Discretization, s: &State) -> f64 {
    let grid = disc.grid();
    let p = disc.params();
    let x = s.pack();
    let area = grid.cell_area();
    let mut acc = Neumaier::new();
    for k in 0..grid.n_cells() {
        let g = disc.velocity_gradient(&x, k);
        let tr = g[0][0] + g[1][1];
        let mut dd = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let d = 0.5 * (g[a][b] + g[b][a]);
                dd += d * d;
            }
        }
        acc.add((2.0 * p.mu * dd + p.lambda * tr * tr) / s.theta[k] * area);
    }
    for (t, w) in temperature_face_terms(grid, &p.closure, &s.theta) {
        acc.add(p.kappa * w * t * t * area);
    }
    acc.value()
}

/// `([[theta]] / h, weight)` for every face (periodic faces once, both walls).
fn temperature_face_terms<'a>(
    grid: &'a Grid,
    closure: &'a BoundaryClosure,
    theta: &'a [f64],
) -> impl Iterator<Item = (f64, f64)> + 'a {
    let h = grid.h();
    grid.faces().map(move |f| match grid.face_cells(&f) {
        (CellOrGhost::Cell(a), CellOrGhost::Cell(b)) => {
            ((theta[b] - theta[a]) / h, 1.0 / (theta[a] * theta[b]))
        }
        (CellOrGhost::Ghost(kind), CellOrGhost::Cell(k)) | (CellOrGhost::Cell(k), CellOrGhost::Ghost(kind)) => {
            let tb = closure.wall_temperature(kind, f.i);
            (2.0 * (tb - theta[k]) / h, 1.0 / (theta[k] * tb))
        }
        _ => unreachable!(),
    })
}

/// Positive reference temperature `Theta` matching the wall traces, sampled at cell centres.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaExtension {
    values: CellField,
}

impl ThetaExtension {
    /// Linear-in-`x2` blend of the bottom and top traces, column by column. Reduces to the
    /// affine profile for flat walls.
    pub fn linear_blend(grid: &Grid, closure: &BoundaryClosure) -> Result<Self> {
        closure.validate(grid)?;
        let hh = grid.half_height();
        let f = |i: usize, x2: f64| {
            let s = (x2 + hh) / (2.0 * hh);
            closure.theta_bottom[i] * (1.0 - s) + closure.theta_top[i] * s
        };
        let mut v = CellField::zeros(grid);
        for k in 0..grid.n_cells() {
            let (i, j) = grid.ij(k);
            v[k] = f(i, grid.x2(j));
        }
        Ok(ThetaExtension { values: v })
    }

    /// A user extension; its values at the wall face centres must match the traces.
    pub fn new(grid: &Grid, closure: &BoundaryClosure, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        closure.validate(grid)?;
        let hh = grid.half_height();
        for i in 0..grid.n1() {
            let x1 = grid.x1(i);
            for (x2, tb) in [(-hh, closure.theta_bottom[i]), (hh, closure.theta_top[i])] {
                let v = f([x1, x2]);
                if !((v - tb).abs() <= 1e-9 * tb.abs().max(1.0)) {
                    return Err(Error::config(format!(
                        "reference temperature {v} at ({x1}, {x2}) does not match wall value {tb}"
                    )));
                }
            }
        }
        let values = CellField::from_fn(grid, f);
        if values.min() <= 0.0 {
            return Err(Error::config("reference temperature must be positive"));
        }
        Ok(ThetaExtension { values })
    }

    pub fn values(&self) -> &CellField {
        &self.values
    }
}

/// `sum (rho |u|^2 / 2 + c_v rho theta - Theta rho s) h^2`.
pub fn ballistic_energy_total(grid: &Grid, s: &State, ext: &ThetaExtension, law: &GasLaw) -> Result<f64> {
    let mut acc = Neumaier::new();
    for k in 0..s.n_cells() {
        acc.add(ballistic_energy(s.rho[k], s.u.at(k), s.theta[k], ext.values[k], law)?);
    }
    Ok(acc.value() * grid.cell_area())
}

pub fn ballistic_energy_series(
    grid: &Grid,
    states: &[State],
    ext: &ThetaExtension,
    law: &GasLaw,
) -> Result<Vec<(f64, f64)>> {
    states
        .iter()
        .map(|s| Ok((s.t, ballistic_energy_total(grid, s, ext, law)?)))
        .collect()
}

/// `D = D_t sum rho log rho h^2 + sum rho div_h u h^2`, nonpositive up to solver tolerance.
pub fn renormalized_density_decay(grid: &Grid, prev: &State, cand: &State, dt: f64) -> f64 {
    let area = grid.cell_area();
    let div = div_cell(grid, &cand.u, Bc::NoSlip);
    let mut acc = Neumaier::new();
    for k in 0..cand.n_cells() {
        let (r, r0) = (cand.rho[k], prev.rho[k]);
        acc.add((r * r.ln() - r0 * r0.ln()) / dt * area);
        acc.add(r * div[k] * area);
    }
    acc.value()
}

/// `|Omega| max rho max |log rho| / dt`, the scale of the decay contract.
pub fn renormalized_density_scale(grid: &Grid, s: &State, dt: f64) -> f64 {
    let max_log = s.rho.iter().fold(0.0_f64, |m, r| m.max(r.ln().abs()));
    grid.area() * s.rho.max() * max_log / dt
}

/// Time-integrated a-priori quantities over a window.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundWindow {
    pub t_start: f64,
    pub t_end: f64,
    /// `||grad_E theta||_{L2 L2}` with the temperature ghost on walls.
    pub grad_theta_l2: f64,
    /// `||grad_E u||_{L2 L2}` with the no-slip ghost.
    pub grad_u_l2: f64,
    /// `dt^{1/2} ||D_t (rho, u, theta)||_{L2 L2}`.
    pub dt_weighted_dt_l2: f64,
    /// `int sum_interior faces (h^alpha + |<u>.n|) |[[(rho, u, theta)]]|^2 h dt`.
    pub jump_dissipation: f64,
}

/// Streaming accumulator for [`BoundWindow`]; each step contributes its end-point values
/// times its length.
#[derive(Debug, Clone)]
pub struct BoundAccumulator {
    t_start: f64,
    t_end: f64,
    grad_theta: Neumaier,
    grad_u: Neumaier,
    dt_sq: Neumaier,
    jumps: Neumaier,
    dt_max: f64,
}

impl BoundAccumulator {
    pub fn new(t_start: f64, t_end: f64) -> Self {
        BoundAccumulator {
            t_start,
            t_end,
            grad_theta: Neumaier::new(),
            grad_u: Neumaier::new(),
            dt_sq: Neumaier::new(),
            jumps: Neumaier::new(),
            dt_max: 0.0,
        }
    }

    /// Adds the step `prev -> next` when its end time lies in `(t_start, t_end]`.
    pub fn observe(&mut self, grid: &Grid, params: &SchemeParams, prev: &State, next: &State) {
        let tol = 1e-9 * (next.t - prev.t).abs();
        if !(next.t > self.t_start + tol && next.t <= self.t_end + tol) {
            return;
        }
        let dt = next.t - prev.t;
        self.dt_max = self.dt_max.max(dt);
        let h = grid.h();
        let area = grid.cell_area();
        let ha = h.powf(params.alpha);
        let mut gt = Neumaier::new();
        let mut gu = Neumaier::new();
        let mut jd = Neumaier::new();
        for f in grid.faces() {
            match grid.face_cells(&f) {
                (CellOrGhost::Cell(a), CellOrGhost::Cell(b)) => {
                    let dth = next.theta[b] - next.theta[a];
                    let du = [next.u.c[0][b] - next.u.c[0][a], next.u.c[1][b] - next.u.c[1][a]];
                    let drho = next.rho[b] - next.rho[a];
                    gt.add(dth * dth);
                    gu.add(du[0] * du[0] + du[1] * du[1]);
                    let ax = f.axis.index();
                    let un = 0.5 * (next.u.c[ax][a] + next.u.c[ax][b]);
                    let jump2 = drho * drho + du[0] * du[0] + du[1] * du[1] + dth * dth;
                    jd.add((ha + un.abs()) * jump2 * h);
                }
                (CellOrGhost::Ghost(kind), CellOrGhost::Cell(k)) | (CellOrGhost::Cell(k), CellOrGhost::Ghost(kind)) => {
                    debug_assert!(kind != FaceKind::Interior);
                    let tb = params.closure.wall_temperature(kind, f.i);
                    let dth = 2.0 * (tb - next.theta[k]);
                    gt.add(dth * dth);
                    let (u1, u2) = (next.u.c[0][k], next.u.c[1][k]);
                    gu.add(4.0 * (u1 * u1 + u2 * u2));
                }
                _ => unreachable!(),
            }
        }
        // |[[f]] / h|^2 h^2 = [[f]]^2 on every face
        self.grad_theta.add(dt * gt.value());
        self.grad_u.add(dt * gu.value());
        self.jumps.add(dt * jd.value());
        let mut d = Neumaier::new();
        for k in 0..next.n_cells() {
            for (a, b) in [
                (next.rho[k], prev.rho[k]),
                (next.u.c[0][k], prev.u.c[0][k]),
                (next.u.c[1][k], prev.u.c[1][k]),
                (next.theta[k], prev.theta[k]),
            ] {
                let r = (a - b) / dt;
                d.add(r * r * area);
            }
        }
        self.dt_sq.add(dt * dt * d.value());
    }

    pub fn finish(&self) -> BoundWindow {
        BoundWindow {
            t_start: self.t_start,
            t_end: self.t_end,
            grad_theta_l2: self.grad_theta.value().max(0.0).sqrt(),
            grad_u_l2: self.grad_u.value().max(0.0).sqrt(),
            dt_weighted_dt_l2: self.dt_sq.value().max(0.0).sqrt(),
            jump_dissipation: self.jumps.value(),
        }
    }
}

/// Bound quantities over `[t, t + 1]`, using consecutive trajectory states as steps.
pub fn uniform_bound_window(grid: &Grid, params: &SchemeParams, traj: &Trajectory, t: f64) -> Result<BoundWindow> {
    let tol = 1e-9 * traj.spacing();
    if t < traj.t0() - tol || t + 1.0 > traj.t_end() + tol {
        return Err(Error::Range(format!(
            "window [{t}, {}] outside trajectory span [{}, {}]",
            t + 1.0,
            traj.t0(),
            traj.t_end()
        )));
    }
    let mut acc = BoundAccumulator::new(t, t + 1.0);
    for w in traj.states().windows(2) {
        acc.observe(grid, params, &w[0], &w[1]);
    }
    Ok(acc.finish())
}

/// Per-step monitor values written to the time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMonitors {
    pub mass: f64,
    pub budget: f64,
    pub entropy_production: f64,
    pub density_decay: f64,
    pub density_decay_scale: f64,
    pub range: HypothesisBReport,
}

impl StepMonitors {
    pub fn evaluate(disc: &Discretization, prev: &State, next: &State) -> Self {
        let grid = disc.grid();
        let dt = next.t - prev.t;
        StepMonitors {
            mass: mass_total(grid, next),
            budget: energy_budget_residual(disc, prev, next, dt),
            entropy_production: entropy_production(disc, next),
            density_decay: renormalized_density_decay(grid, prev, next, dt),
            density_decay_scale: renormalized_density_scale(grid, next, dt),
            range: HypothesisBReport::of_state(next),
        }
    }

    /// Monitors over the implicit solves of one (possibly halved) step: `chain` holds the state
    /// after each solve. Worst case over the chain for the step-wise contracts.
    pub fn evaluate_chain(disc: &Discretization, prev: &State, chain: &[State]) -> Self {
        let mut out: Option<StepMonitors> = None;
        let mut from = prev;
        for s in chain {
            let m = Self::evaluate(disc, from, s);
            out = Some(match out {
                None => m,
                Some(mut o) => {
                    o.mass = m.mass;
                    o.budget = o.budget.max(m.budget);
                    o.entropy_production = o.entropy_production.min(m.entropy_production);
                    if m.density_decay / m.density_decay_scale > o.density_decay / o.density_decay_scale {
                        o.density_decay = m.density_decay;
                        o.density_decay_scale = m.density_decay_scale;
                    }
                    o.range.merge(&m.range);
                    o
                }
            });
            from = s;
        }
        out.expect("a step has at least one implicit solve")
    }

    /// Human-readable contract violations, empty when all hold.
    pub fn violations(&self, newton_tol: f64) -> Vec<String> {
        let mut v = Vec::new();
        if self.range.violation {
            v.push(format!(
                "positivity lost: rho_min {}, theta_min {}",
                self.range.rho_min, self.range.theta_min
            ));
        }
        if !(self.entropy_production >= 0.0) {
            v.push(format!("negative entropy production {}", self.entropy_production));
        }
        if !(self.budget <= 10.0 * newton_tol) {
            v.push(format!("energy budget residual {}", self.budget));
        }
        if !(self.density_decay <= 1e-10 * self.density_decay_scale) {
            v.push(format!("renormalised density growth {}", self.density_decay));
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{build_initial_state, stationary_state, ExperimentConfig, Exp1Variant};
    use crate::operators::VectorField;
    use crate::scheme::{SolverOptions, Stepper};
    use approx::assert_relative_eq;

    fn stable(n2: usize) -> (ExperimentConfig, Grid, SchemeParams) {
        let cfg = ExperimentConfig::exp1(Exp1Variant::Stable);
        let grid = Grid::rayleigh_benard(n2).unwrap();
        let p = cfg.scheme_params(&grid, 0.6, grid.h()).unwrap();
        (cfg, grid, p)
    }

    #[test]
    fn hypothesis_b_on_stationary_state() {
        let (cfg, grid, _) = stable(8);
        let s = stationary_state(&cfg, &grid).unwrap();
        let r = check_hypothesis_b(std::slice::from_ref(&s)).unwrap();
        let h = grid.h();
        assert_eq!((r.rho_min, r.rho_max), (1.2, 1.2));
        let tm = cfg.theta_mean();
        let sl = cfg.s_theta();
        assert_relative_eq!(r.theta_min, tm + sl * (1.0 - h / 2.0), epsilon = 1e-14);
        assert_relative_eq!(r.theta_max, tm + sl * (-1.0 + h / 2.0), epsilon = 1e-14);
        assert!(!r.violation);
        assert_eq!(r.speed_max, 0.0);
    }

    #[test]
    fn hypothesis_b_flags_zero_temperature() {
        let grid = Grid::new(2.0, 1.0, 4, 2).unwrap();
        let mut s = State::uniform(&grid, 1.0, [0.0, 0.0], 1.0);
        let r = HypothesisBReport::of_state(&s);
        assert_eq!(r.rho_min, r.rho_max);
        assert!(!r.violation);
        s.theta[3] = 0.0;
        assert!(HypothesisBReport::of_state(&s).violation);
        assert!(check_hypothesis_b(&[]).is_err());
    }

    #[test]
    fn budget_vanishes_for_stationary_and_uniform_states() {
        let (cfg, grid, p) = stable(8);
        let disc = Discretization::new(grid.clone(), p.clone()).unwrap();
        let s = stationary_state(&cfg, &grid).unwrap();
        assert!(energy_budget_residual(&disc, &s, &s, p.dt) < 1e-15);

        let mut q = p.clone();
        q.closure = BoundaryClosure::uniform(&grid, 1.3, 1.3);
        let disc = Discretization::new(grid.clone(), q.clone()).unwrap();
        let u = State::uniform(&grid, 0.9, [0.0, 0.0], 1.3);
        assert_eq!(energy_budget_residual(&disc, &u, &u, q.dt), 0.0);
    }

    #[test]
    fn budget_matches_energy_residual_rows() {
        let (cfg, grid, p) = stable(8);
        let disc = Discretization::new(grid.clone(), p.clone()).unwrap();
        let prev = build_initial_state(&cfg, &grid).unwrap();
        let mut cand = prev.clone();
        for k in 0..cand.n_cells() {
            cand.theta[k] *= 1.0 + 0.01 * (k as f64).sin();
            cand.u.c[0][k] += 0.02 * (0.3 * k as f64).cos();
        }
        cand.t = prev.t + p.dt;
        let mut res = vec![0.0; disc.n_unknowns()];
        assert!(disc.residual(&prev.pack(), &cand.pack(), p.dt, &mut res));
        let rows: f64 = (0..grid.n_cells()).map(|k| res[4 * k + 3]).sum::<f64>() * grid.cell_area();
        let b = energy_budget_residual(&disc, &prev, &cand, p.dt);
        assert_relative_eq!(b, p.dt * rows.abs() / grid.area(), max_relative = 1e-9);
    }

    #[test]
    fn entropy_production_of_affine_temperature() {
        let (cfg, grid, p) = stable(8);
        let disc = Discretization::new(grid.clone(), p.clone()).unwrap();
        let s = stationary_state(&cfg, &grid).unwrap();
        let sig = entropy_production(&disc, &s);
        // oracle: vertical faces only, jump S h everywhere, weight from neighbours or wall
        let (h, sl, tm) = (grid.h(), cfg.s_theta(), cfg.theta_mean());
        let t = |j: usize| tm + sl * (-1.0 + (j as f64 + 0.5) * h);
        let mut want = 0.0;
        for j in 0..grid.n2() - 1 {
            want += 1.0 / (t(j) * t(j + 1));
        }
        want += 1.0 / (t(0) * cfg.theta_high) + 1.0 / (t(grid.n2() - 1) * cfg.theta_low);
        want *= p.kappa * sl * sl * h * h * grid.n1() as f64;
        assert_relative_eq!(sig, want, max_relative = 1e-12);

        let mut q = p.clone();
        q.closure = BoundaryClosure::uniform(&grid, 1.1, 1.1);
        let disc = Discretization::new(grid.clone(), q).unwrap();
        assert_eq!(entropy_production(&disc, &State::uniform(&grid, 1.0, [0.0, 0.0], 1.1)), 0.0);
    }

    #[test]
    fn entropy_production_nonnegative_for_rough_states() {
        use rand::{Rng, SeedableRng};
        let (_, grid, mut p) = stable(6);
        p.lambda = -0.09;
        let disc = Discretization::new(grid.clone(), p).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let mut s = State::uniform(&grid, 1.0, [0.0, 0.0], 1.0);
            for k in 0..s.n_cells() {
                s.rho[k] = rng.random_range(0.1..2.0);
                s.theta[k] = rng.random_range(0.1..3.0);
                s.u.c[0][k] = rng.random_range(-3.0..3.0);
                s.u.c[1][k] = rng.random_range(-3.0..3.0);
            }
            assert!(entropy_production(&disc, &s) >= 0.0);
        }
    }

    #[test]
    fn ballistic_energy_collapses_for_equal_temperature() {
        let grid = Grid::new(2.0, 1.0, 8, 4).unwrap();
        let law = GasLaw::default();
        let c = BoundaryClosure::uniform(&grid, 1.5, 1.5);
        let ext = ThetaExtension::linear_blend(&grid, &c).unwrap();
        let s = State::uniform(&grid, 0.8, [0.0, 0.0], 1.5);
        let cv = law.c_v();
        let sp = cv * 1.5_f64.ln() - 0.8_f64.ln();
        let want = (cv * 0.8 * 1.5 - 1.5 * 0.8 * sp) * grid.area();
        assert_relative_eq!(ballistic_energy_total(&grid, &s, &ext, &law).unwrap(), want, max_relative = 1e-13);

        let mut m = s.clone();
        m.u = VectorField::from_fn(&grid, |x| [x[1], 0.5]);
        let kin1 = ballistic_energy_total(&grid, &m, &ext, &law).unwrap() - want;
        m.u = VectorField::from_fn(&grid, |x| [2.0 * x[1], 1.0]);
        let kin2 = ballistic_energy_total(&grid, &m, &ext, &law).unwrap() - want;
        assert_relative_eq!(kin2, 4.0 * kin1, max_relative = 1e-12);
    }

    #[test]
    fn theta_extension_checks_traces() {
        let grid = Grid::new(2.0, 1.0, 8, 4).unwrap();
        let c = BoundaryClosure::uniform(&grid, 2.0, 1.0);
        let ext = ThetaExtension::linear_blend(&grid, &c).unwrap();
        let affine = ThetaExtension::new(&grid, &c, |x| 1.5 - 0.5 * x[1]).unwrap();
        for k in 0..grid.n_cells() {
            assert_relative_eq!(ext.values()[k], affine.values()[k], epsilon = 1e-14);
        }
        assert!(matches!(ThetaExtension::new(&grid, &c, |_| 1.5), Err(Error::Config(_))));
    }

    #[test]
    fn density_decay_vanishes_for_constant_density() {
        let grid = Grid::new(2.0, 1.0, 8, 4).unwrap();
        let mut s = State::uniform(&grid, 1.3, [0.0, 0.0], 1.0);
        s.u = VectorField::from_fn(&grid, |x| [(x[0] * 0.7).sin(), (x[1] + x[0]).cos()]);
        let d = renormalized_density_decay(&grid, &s, &s, 0.1);
        assert!(d.abs() < 1e-13, "{d}");
    }

    #[test]
    fn stationary_run_is_quiet() {
        let (cfg, grid, p) = stable(8);
        let dt = p.dt;
        let mut st = Stepper::new(grid.clone(), p.clone(), SolverOptions::default()).unwrap();
        let s0 = stationary_state(&cfg, &grid).unwrap();
        let ext = ThetaExtension::linear_blend(&grid, &p.closure).unwrap();
        let law = p.law;
        let mut states = vec![s0.clone()];
        for _ in 0..3 {
            let (n, _) = st.step(states.last().unwrap()).unwrap();
            let m = StepMonitors::evaluate(st.discretization(), states.last().unwrap(), &n);
            assert!(m.violations(1e-8).is_empty(), "{:?}", m.violations(1e-8));
            assert!(m.density_decay.abs() < 1e-12);
            states.push(n);
        }
        let b = ballistic_energy_series(&grid, &states, &ext, &law).unwrap();
        for w in b.windows(2) {
            assert_relative_eq!(w[0].1, w[1].1, max_relative = 1e-12);
        }
        let mut traj = Trajectory::new(s0.clone(), dt);
        let n_steps = (1.0 / dt).round() as usize + 1;
        for _ in 0..n_steps {
            let (n, _) = st.step(traj.last()).unwrap();
            traj.push(n);
        }
        let w = uniform_bound_window(&grid, &p, &traj, 0.0).unwrap();
        assert!(w.dt_weighted_dt_l2 < 1e-12 && w.grad_u_l2 == 0.0);
        // affine profile: every vertical face jump equals S h
        let faces = (grid.n1() * (grid.n2() + 1)) as f64;
        let want = (faces * (cfg.s_theta() * grid.h()).powi(2)).sqrt();
        assert_relative_eq!(w.grad_theta_l2, want, max_relative = 1e-9);
        assert!(uniform_bound_window(&grid, &p, &traj, traj.t_end()).is_err());
    }
}
