//! Plain Rust side of the browser demo, so it can be tested natively.

use rbnsf::diagnostics::moment_report;
use rbnsf::experiments::{sample_perturbation, PerturbationSpec, EXP1_SLOPES};
use rbnsf::io::parse_config;
use rbnsf::mesh::Grid;
use rbnsf::monitors::mass_total;
use rbnsf::scheme::{State, Stepper};
use rbnsf::thermo::{rayleigh_number, RayleighInputs};
use serde_json::json;

/// Largest grid the page will step interactively.
pub const MAX_N2: usize = 32;

pub struct Demo {
    stepper: Stepper,
    state: State,
    steps: u64,
    initial_mass: f64,
    failure: Option<String>,
}

impl Demo {
    pub fn new(config: &str) -> Result<Self, String> {
        let run = parse_config(config).and_then(|c| c.resolve()).map_err(|e| e.to_string())?;
        if run.grid.n2() > MAX_N2 {
            return Err(format!("n2 = {} is too large for the browser demo (at most {MAX_N2})", run.grid.n2()));
        }
        let state = run.initial_state().map_err(|e| e.to_string())?;
        let initial_mass = mass_total(&run.grid, &state);
        let stepper = Stepper::new(run.grid.clone(), run.params.clone(), run.solver.clone()).map_err(|e| e.to_string())?;
        Ok(Demo {
            stepper,
            state,
            steps: 0,
            initial_mass,
            failure: None,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.stepper.grid()
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    /// Advances up to `n` steps; stops at the first failure and keeps the last good state.
    pub fn step(&mut self, n: usize) -> Result<u64, String> {
        if let Some(f) = &self.failure {
            return Err(f.clone());
        }
        let dt = self.stepper.params().dt;
        for _ in 0..n {
            match self.stepper.step(&self.state) {
                Ok((mut next, _)) => {
                    self.steps += 1;
                    next.t = self.steps as f64 * dt;
                    self.state = next;
                }
                Err(e) => {
                    self.failure = Some(e.to_string());
                    return Err(e.to_string());
                }
            }
        }
        Ok(self.steps)
    }

    pub fn field(&self, name: &str) -> Result<Vec<f64>, String> {
        let s = &self.state;
        Ok(match name {
            "theta" => s.theta.to_vec(),
            "rho" => s.rho.to_vec(),
            "u1" => s.u.c[0].to_vec(),
            "u2" => s.u.c[1].to_vec(),
            "speed" => (0..s.n_cells())
                .map(|k| {
                    let u = s.u.at(k);
                    u[0].hypot(u[1])
                })
                .collect(),
            _ => return Err(format!("unknown field `{name}`")),
        })
    }

    /// RGBA pixels, one per cell, top row first, with the value range used.
    pub fn image(&self, name: &str) -> Result<(Vec<u8>, f64, f64), String> {
        let f = self.field(name)?;
        let g = self.grid();
        let lo = f.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let mut px = Vec::with_capacity(4 * f.len());
        for j in (0..g.n2()).rev() {
            for i in 0..g.n1() {
                let [r, gr, b] = colour((f[g.idx(i, j)] - lo) / span);
                px.extend_from_slice(&[r, gr, b, 255]);
            }
        }
        Ok((px, lo, hi))
    }

    pub fn status(&self) -> serde_json::Value {
        let s = &self.state;
        let mass = mass_total(self.grid(), s);
        let speed = self.field("speed").unwrap_or_default();
        json!({
            "t": s.t,
            "steps": self.steps,
            "mass_drift": (mass - self.initial_mass) / self.initial_mass,
            "rho_min": s.rho.min(),
            "rho_max": s.rho.max(),
            "theta_min": s.theta.min(),
            "theta_max": s.theta.max(),
            "speed_max": speed.iter().copied().fold(0.0, f64::max),
            "failure": self.failure,
        })
    }
}

/// Blue, cyan, yellow, red.
pub fn colour(x: f64) -> [u8; 3] {
    const STOPS: [[f64; 3]; 4] = [[40.0, 60.0, 190.0], [60.0, 200.0, 210.0], [245.0, 220.0, 70.0], [200.0, 40.0, 40.0]];
    let x = if x.is_finite() { x.clamp(0.0, 1.0) } else { 0.0 };
    let t = x * 3.0;
    let k = (t.floor() as usize).min(2);
    let w = t - k as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = (STOPS[k][c] * (1.0 - w) + STOPS[k + 1][c] * w).round() as u8;
    }
    out
}

pub fn rayleigh(g: f64, theta_low: f64, theta_high: f64, mu: f64, kappa: f64) -> Result<f64, String> {
    rayleigh_number(&RayleighInputs::for_walls(g, theta_low, theta_high, mu, kappa)).map_err(|e| e.to_string())
}

/// Rayleigh numbers of the first experiment's slope sweep (`theta_L = 1`, `g = S`).
pub fn slope_table(mu: f64, kappa: f64) -> Result<serde_json::Value, String> {
    let rows: Result<Vec<_>, String> = EXP1_SLOPES
        .iter()
        .map(|&s| Ok(json!({"slope": s, "ra": rayleigh(s, 1.0, 1.0 - 2.0 * s, mu, kappa)?})))
        .collect();
    rows.map(serde_json::Value::Array)
}

/// The seeded wall perturbation sampled on `[-2, 2]`, with its moments.
pub fn perturbation(seed: u64, c: f64, samples: usize) -> Result<serde_json::Value, String> {
    if samples < 8 {
        return Err("need at least 8 samples".into());
    }
    let spec = PerturbationSpec::from_seed(seed, c);
    let x: Vec<f64> = (0..samples).map(|k| -2.0 + 4.0 * (k as f64 + 0.5) / samples as f64).collect();
    let p: Vec<f64> = x.iter().map(|&x1| c * sample_perturbation(&spec, x1)).collect();
    let m = moment_report(&p).map_err(|e| e.to_string())?;
    Ok(json!({"x": x, "p": p, "a": spec.a, "b": spec.b, "moments": m}))
}
