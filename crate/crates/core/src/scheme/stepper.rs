use crate::compensated::sum;
use crate::error::{Error, Result, StepFailure};
use crate::linalg::{gmres, BandLu, CsrMatrix, Ilu0, MappedSink, PatternSink};
use crate::mesh::Grid;
use crate::scheme::{Discretization, LinearSolver, SchemeParams, SolverOptions, State, Trajectory, VARS};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepReport {
    pub newton_iterations: usize,
    pub linear_iterations: usize,
    /// Final `dt * max |R|`.
    pub residual: f64,
    /// Number of implicit solves used; above one when the step was halved.
    pub substeps: usize,
}

impl StepReport {
    fn merge(self, other: StepReport) -> StepReport {
        StepReport {
            newton_iterations: self.newton_iterations + other.newton_iterations,
            linear_iterations: self.linear_iterations + other.linear_iterations,
            residual: self.residual.max(other.residual),
            substeps: self.substeps + other.substeps,
        }
    }
}

/// Damped Newton solver for the implicit step, with reusable Jacobian storage.
#[derive(Debug)]
pub struct Stepper {
    disc: Discretization,
    opts: SolverOptions,
    jac: CsrMatrix,
    map: Vec<u32>,
    ilu: Option<Ilu0>,
    chain: Vec<State>,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl Stepper {
    pub fn new(grid: Grid, params: SchemeParams, opts: SolverOptions) -> Result<Self> {
        opts.validate()?;
        let disc = Discretization::new(grid.clone(), params)?;
        let probe = State::uniform(&grid, 1.0, [0.0, 0.0], 1.0).pack();
        let mut pattern = PatternSink::default();
        let mut res = vec![0.0; disc.n_unknowns()];
        disc.assemble(&probe, &probe, 1.0, &mut res, &mut pattern);
        let (jac, map) = CsrMatrix::from_pattern(disc.n_unknowns(), &pattern.entries);
        Ok(Stepper {
            disc,
            opts,
            jac,
            map,
            ilu: None,
            chain: Vec::new(),
        })
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn grid(&self) -> &Grid {
        self.disc.grid()
    }

    pub fn params(&self) -> &SchemeParams {
        self.disc.params()
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    /// `dt * max |R(prev -> cand)|`, infinite when `cand` is not admissible.
    pub fn residual_norm(&self, prev: &State, cand: &State, dt: f64) -> f64 {
        let mut res = vec![0.0; self.disc.n_unknowns()];
        if self.disc.residual(&prev.pack(), &cand.pack(), dt, &mut res) {
            dt * max_abs(&res)
        } else {
            f64::INFINITY
        }
    }

    /// One time step of size `params.dt`, halving on failure as allowed by the options.
    pub fn step(&mut self, prev: &State) -> Result<(State, StepReport)> {
        let dt = self.disc.params().dt;
        self.chain.clear();
        let (mut next, report) = self.advance(prev, dt, 0)?;
        next.t = prev.t + dt;
        if let Some(last) = self.chain.last_mut() {
            last.t = next.t;
        }
        Ok((next, report))
    }

    /// States after each implicit solve of the last [`Stepper::step`]; a single entry unless
    /// the step was halved.
    pub fn substeps(&self) -> &[State] {
        &self.chain
    }

    fn advance(&mut self, prev: &State, dt: f64, depth: usize) -> Result<(State, StepReport)> {
        match self.solve(prev, dt) {
            Ok(ok) => {
                self.chain.push(ok.0.clone());
                Ok(ok)
            }
            Err(fail) if depth < self.opts.max_halvings => {
                let _ = fail;
                let (mid, r1) = self.advance(prev, 0.5 * dt, depth + 1)?;
                let (end, r2) = self.advance(&mid, 0.5 * dt, depth + 1)?;
                Ok((end, r1.merge(r2)))
            }
            Err(fail) => Err(Error::from(fail)),
        }
    }

    fn solve(&mut self, prev: &State, dt: f64) -> std::result::Result<(State, StepReport), StepFailure> {
        let n = self.disc.n_unknowns();
        let x0 = prev.pack();
        let mut x = x0.clone();
        let mut res = vec![0.0; n];
        let mut trial_res = vec![0.0; n];
        let mut delta = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let t_new = prev.t + dt;
        let mut report = StepReport {
            substeps: 1,
            ..StepReport::default()
        };
        let fail = |x: &[f64], it: usize, r: f64, reason: &str| StepFailure {
            t: t_new,
            iterations: it,
            residual: r,
            reason: reason.to_string(),
            last_iterate: Some(State::unpack(x, t_new)),
        };

        if !self.disc.residual(&x0, &x, dt, &mut res) {
            return Err(fail(&x, 0, f64::INFINITY, "previous state is not admissible"));
        }
        let mut norm = dt * max_abs(&res);
        for it in 0..self.opts.max_newton {
            if norm <= self.opts.newton_tol {
                report.newton_iterations = it;
                report.residual = norm;
                return Ok((State::unpack(&x, t_new), report));
            }
            {
                let mut sink = MappedSink::new(&mut self.jac, &self.map);
                self.disc.assemble(&x0, &x, dt, &mut res, &mut sink);
                sink.finish();
            }
            let rhs: Vec<f64> = res.iter().map(|r| -r).collect();
            match self.opts.linear {
                LinearSolver::Direct => {
                    let lu = BandLu::new(&self.jac).map_err(|e| fail(&x, it, norm, &e))?;
                    delta.copy_from_slice(&rhs);
                    lu.solve_in_place(&mut delta);
                }
                LinearSolver::Krylov => {
                    // the preconditioner is built once per implicit solve
                    if it == 0 || self.ilu.is_none() {
                        self.ilu = Some(Ilu0::new(&self.jac).map_err(|e| fail(&x, it, norm, &e))?);
                    }
                    let ilu = self.ilu.as_ref().expect("preconditioner built above");
                    let out = gmres(
                        &self.jac,
                        ilu,
                        &rhs,
                        &mut delta,
                        self.opts.krylov_restart,
                        self.opts.krylov_rtol,
                        self.opts.krylov_max_iter,
                    );
                    report.linear_iterations += out.iterations;
                }
            }
            // Fluxes telescope, so an exact solve keeps sum rho = sum rho0. Restore that after
            // the inexact one with a uniform density shift.
            let cells = n / VARS;
            let target = -sum((0..cells).map(|k| x[VARS * k] - x0[VARS * k]));
            let shift = (target - sum((0..cells).map(|k| delta[VARS * k]))) / cells as f64;
            for k in 0..cells {
                delta[VARS * k] += shift;
            }
            if delta.iter().any(|d| !d.is_finite()) {
                return Err(fail(&x, it, norm, "linear solve produced non-finite update"));
            }

            let base = l2(&res);
            let mut lam = 1.0;
            let mut accepted = false;
            while lam >= 1.0 / 1024.0 {
                for i in 0..n {
                    trial[i] = x[i] + lam * delta[i];
                }
                if self.disc.residual(&x0, &trial, dt, &mut trial_res) {
                    let r = l2(&trial_res);
                    if r.is_finite() && r <= (1.0 - 1e-4 * lam) * base {
                        accepted = true;
                        break;
                    }
                }
                lam *= self.opts.damping;
            }
            if !accepted {
                return Err(fail(&x, it + 1, norm, "line search found no admissible decrease"));
            }
            std::mem::swap(&mut x, &mut trial);
            std::mem::swap(&mut res, &mut trial_res);
            norm = dt * max_abs(&res);
        }
        if norm <= self.opts.newton_tol {
            report.newton_iterations = self.opts.max_newton;
            report.residual = norm;
            return Ok((State::unpack(&x, t_new), report));
        }
        Err(fail(&x, self.opts.max_newton, norm, "Newton iteration limit reached"))
    }
}

/// Per-step callback of [`run`].
pub trait StepObserver {
    fn observe(&mut self, step: usize, prev: &State, next: &State, report: &StepReport) -> Result<()>;
}

impl StepObserver for () {
    fn observe(&mut self, _: usize, _: &State, _: &State, _: &StepReport) -> Result<()> {
        Ok(())
    }
}

impl<F> StepObserver for F
where
    F: FnMut(usize, &State, &State, &StepReport) -> Result<()>,
{
    fn observe(&mut self, step: usize, prev: &State, next: &State, report: &StepReport) -> Result<()> {
        self(step, prev, next, report)
    }
}

/// Advances `init` to `t_end` in uniform steps. Every step is passed to `observer`; every
/// `keep_every`-th state (and the initial one) is kept in the returned trajectory.
/// Step times are `t0 + k dt` exactly.
pub fn run(
    stepper: &mut Stepper,
    init: State,
    t_end: f64,
    keep_every: usize,
    observer: &mut dyn StepObserver,
) -> Result<Trajectory> {
    if !(t_end >= init.t) {
        return Err(Error::Range(format!("end time {t_end} precedes start time {}", init.t)));
    }
    let dt = stepper.params().dt;
    let keep_every = keep_every.max(1);
    let t0 = init.t;
    let steps = step_count(t0, t_end, dt);
    let mut traj = Trajectory::new(init, dt * keep_every as f64);
    let mut current = traj.last().clone();
    for k in 1..=steps {
        let (mut next, report) = stepper.step(&current)?;
        next.t = t0 + k as f64 * dt;
        observer.observe(k, &current, &next, &report)?;
        if k % keep_every == 0 {
            traj.push(next.clone());
        }
        current = next;
    }
    Ok(traj)
}

/// Number of steps of size `dt` from `t0` to `t_end`, rounding to the nearest integer when
/// the span is within `1e-9 dt` of a multiple.
pub fn step_count(t0: f64, t_end: f64, dt: f64) -> usize {
    let r = (t_end - t0) / dt;
    if (r - r.round()).abs() < 1e-9 {
        r.round().max(0.0) as usize
    } else {
        r.ceil().max(0.0) as usize
    }
}
