use crate::error::{Error, Result};
use crate::operators::{CellField, VectorField};
use crate::scheme::State;

/// States at uniformly spaced times `t0 + k spacing`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    t0: f64,
    spacing: f64,
    states: Vec<State>,
}

impl Trajectory {
    pub fn new(first: State, spacing: f64) -> Self {
        Trajectory {
            t0: first.t,
            spacing,
            states: vec![first],
        }
    }

    pub fn push(&mut self, s: State) {
        self.states.push(s);
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + (self.states.len() - 1) as f64 * self.spacing
    }

    /// Index `k` of the interval `(t_{k-1}, t_k]` containing `t`; knots map to themselves.
    fn interval(&self, t: f64) -> Result<usize> {
        let r = (t - self.t0) / self.spacing;
        let last = (self.states.len() - 1) as f64;
        if !(r >= -1e-9 && r <= last + 1e-9) {
            return Err(Error::Range(format!(
                "t = {t} outside trajectory span [{}, {}]",
                self.t0,
                self.t_end()
            )));
        }
        let k = if (r - r.round()).abs() < 1e-9 { r.round() } else { r.ceil() };
        Ok((k.max(0.0) as usize).min(self.states.len() - 1))
    }

    /// Piecewise constant, right-continuous interpolant.
    pub fn interpolate_pc(&self, t: f64) -> Result<State> {
        let k = self.interval(t)?;
        let mut s = self.states[k].clone();
        s.t = t;
        Ok(s)
    }

    /// Piecewise linear interpolant.
    pub fn interpolate_pl(&self, t: f64) -> Result<State> {
        let k = self.interval(t)?;
        if k == 0 {
            return self.interpolate_pc(t);
        }
        let t_prev = self.t0 + (k - 1) as f64 * self.spacing;
        let s = ((t - t_prev) / self.spacing).clamp(0.0, 1.0);
        let mut out = State::blend(&self.states[k - 1], &self.states[k], s);
        out.t = t;
        Ok(out)
    }

    /// `(U^k - U^{k-1}) / spacing` on the interval containing `t`; the first interval is used
    /// at `t0`. The returned fields are rates, `t` is the query time.
    pub fn discrete_time_derivative(&self, t: f64) -> Result<State> {
        if self.states.len() < 2 {
            return Err(Error::Range("time derivative needs at least two states".into()));
        }
        let k = self.interval(t)?.max(1);
        let (a, b) = (&self.states[k - 1], &self.states[k]);
        let rate = |x: &CellField, y: &CellField| {
            CellField::from_vec(x.iter().zip(y.iter()).map(|(p, q)| (q - p) / self.spacing).collect())
        };
        Ok(State {
            rho: rate(&a.rho, &b.rho),
            u: VectorField {
                c: [rate(&a.u.c[0], &b.u.c[0]), rate(&a.u.c[1], &b.u.c[1])],
            },
            theta: rate(&a.theta, &b.theta),
            t,
        })
    }
}
