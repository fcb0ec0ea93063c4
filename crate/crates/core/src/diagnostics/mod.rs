//! Long-time statistics: temporal means and deviations, error families, Reynolds stress and
//! energy fluctuation, histogram measures and moment reports.

mod analysis;
mod defect;
mod measure;

use serde::{Deserialize, Serialize};

use crate::compensated::Neumaier;
use crate::error::{Error, Result};
use crate::mesh::Grid;
use crate::monitors::ThetaExtension;
use crate::operators::CellField;
use crate::scheme::State;
use crate::thermo::{ballistic_energy, specific_entropy, total_energy, GasLaw};

pub use analysis::{analyze, error_vs_exact, Analysis, ExactErrors, WindowSpec};
pub use defect::{reynolds_defect, sym_eigen, DefectFields, DefectKind};
pub use measure::{moment_report, probe_cells, probe_value, Functional, HistogramMeasure, Moments, PROBES};

/// Recorded cell fields. The last three are the entries of `m (x) m / rho + p I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantity {
    Rho,
    M1,
    M2,
    S,
    U1,
    U2,
    Theta,
    E,
    BE,
    R11,
    R12,
    R22,
}

pub const N_QUANTITIES: usize = 12;

impl Quantity {
    pub const ALL: [Quantity; N_QUANTITIES] = [
        Quantity::Rho,
        Quantity::M1,
        Quantity::M2,
        Quantity::S,
        Quantity::U1,
        Quantity::U2,
        Quantity::Theta,
        Quantity::E,
        Quantity::BE,
        Quantity::R11,
        Quantity::R12,
        Quantity::R22,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Rho => "rho",
            Quantity::M1 => "m1",
            Quantity::M2 => "m2",
            Quantity::S => "S",
            Quantity::U1 => "u1",
            Quantity::U2 => "u2",
            Quantity::Theta => "theta",
            Quantity::E => "E",
            Quantity::BE => "BE",
            Quantity::R11 => "R11",
            Quantity::R12 => "R12",
            Quantity::R22 => "R22",
        }
    }

    pub fn from_name(s: &str) -> Option<Quantity> {
        Quantity::ALL.into_iter().find(|q| q.name() == s)
    }
}

/// All recorded fields of a state, indexed by [`Quantity::index`].
pub fn derived_fields(s: &State, law: &GasLaw, ext: &ThetaExtension) -> Result<Vec<CellField>> {
    let n = s.n_cells();
    let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(n); N_QUANTITIES];
    for k in 0..n {
        let (rho, th) = (s.rho[k], s.theta[k]);
        let u = s.u.at(k);
        let m = [rho * u[0], rho * u[1]];
        let p = rho * th;
        let vals = [
            rho,
            m[0],
            m[1],
            rho * specific_entropy(rho, th, law)?,
            u[0],
            u[1],
            th,
            total_energy(rho, u, th, law)?,
            ballistic_energy(rho, u, th, ext.values()[k], law)?,
            m[0] * m[0] / rho + p,
            m[0] * m[1] / rho,
            m[1] * m[1] / rho + p,
        ];
        for (o, v) in out.iter_mut().zip(vals) {
            o.push(v);
        }
    }
    Ok(out.into_iter().map(CellField::from_vec).collect())
}

/// Ordered access to archived states, for replay passes.
pub trait SnapshotSource {
    fn len(&self) -> usize;
    fn time(&self, i: usize) -> Result<f64>;
    fn load(&self, i: usize) -> Result<State>;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl SnapshotSource for [State] {
    fn len(&self) -> usize {
        <[State]>::len(self)
    }
    fn time(&self, i: usize) -> Result<f64> {
        Ok(self[i].t)
    }
    fn load(&self, i: usize) -> Result<State> {
        Ok(self[i].clone())
    }
}

impl SnapshotSource for Vec<State> {
    fn len(&self) -> usize {
        self.as_slice().len()
    }
    fn time(&self, i: usize) -> Result<f64> {
        Ok(self[i].t)
    }
    fn load(&self, i: usize) -> Result<State> {
        Ok(self[i].clone())
    }
}

/// Running per-cell sums of the recorded fields over samples `T_m = m cadence`,
/// `m = m0 + 1, m0 + 2, ...`.
#[derive(Debug, Clone)]
pub struct RunningStats {
    cadence: f64,
    m0: usize,
    count: usize,
    sums: Vec<Vec<Neumaier>>,
}

impl RunningStats {
    pub fn new(grid: &Grid, cadence: f64, m0: usize) -> Self {
        RunningStats {
            cadence,
            m0,
            count: 0,
            sums: vec![vec![Neumaier::new(); grid.n_cells()]; N_QUANTITIES],
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Index `m` expected for the next sample.
    pub fn next_index(&self) -> usize {
        self.m0 + self.count + 1
    }

    pub fn update(&mut self, t: f64, fields: &[CellField]) -> Result<()> {
        let m = self.next_index();
        let want = m as f64 * self.cadence;
        if (t - want).abs() > 1e-9 * self.cadence.max(want.abs()) {
            return Err(Error::Range(format!(
                "snapshot at t = {t} out of cadence, expected T_{m} = {want}"
            )));
        }
        if fields.len() != N_QUANTITIES || fields.iter().any(|f| f.len() != self.sums[0].len()) {
            return Err(Error::domain("snapshot fields do not match the grid"));
        }
        for (acc, f) in self.sums.iter_mut().zip(fields) {
            for (a, v) in acc.iter_mut().zip(f.iter()) {
                a.add(*v);
            }
        }
        self.count += 1;
        Ok(())
    }

    pub fn mean(&self) -> Result<Vec<CellField>> {
        if self.count == 0 {
            return Err(Error::Range("no samples".into()));
        }
        let c = self.count as f64;
        Ok(self
            .sums
            .iter()
            .map(|acc| CellField::from_vec(acc.iter().map(|a| a.value() / c).collect()))
            .collect())
    }
}

/// `sum |f| h^2`
pub(crate) fn l1(grid: &Grid, f: &[f64]) -> f64 {
    crate::compensated::sum(f.iter().map(|v| v.abs())) * grid.cell_area()
}

pub(crate) fn l1_diff(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    crate::compensated::sum(a.iter().zip(b).map(|(x, y)| (x - y).abs())) * grid.cell_area()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{BoundaryClosure, VectorField};
    use approx::assert_relative_eq;

    fn setup() -> (Grid, GasLaw, ThetaExtension) {
        let grid = Grid::new(2.0, 1.0, 8, 4).unwrap();
        let ext = ThetaExtension::linear_blend(&grid, &BoundaryClosure::uniform(&grid, 2.0, 1.0)).unwrap();
        (grid, GasLaw::default(), ext)
    }

    fn state(grid: &Grid, v: f64, t: f64) -> State {
        let mut s = State::uniform(grid, 1.1, [0.0, 0.0], 1.5);
        s.u = VectorField::from_fn(grid, |x| [v * (1.0 + x[1]), -0.5 * v]);
        s.theta = CellField::from_fn(grid, |x| 1.5 + 0.1 * x[0] * v);
        s.t = t;
        s
    }

    #[test]
    fn fields_match_thermodynamics() {
        let (grid, law, ext) = setup();
        let s = state(&grid, 0.7, 0.0);
        let f = derived_fields(&s, &law, &ext).unwrap();
        let k = 5;
        let (rho, u, th) = (s.rho[k], s.u.at(k), s.theta[k]);
        assert_relative_eq!(f[Quantity::M2.index()][k], rho * u[1]);
        assert_relative_eq!(f[Quantity::R11.index()][k], rho * u[0] * u[0] + rho * th, max_relative = 1e-14);
        assert_relative_eq!(f[Quantity::R12.index()][k], rho * u[0] * u[1], max_relative = 1e-14);
        assert_relative_eq!(
            f[Quantity::E.index()][k] - f[Quantity::BE.index()][k],
            ext.values()[k] * f[Quantity::S.index()][k],
            max_relative = 1e-12
        );
        for q in Quantity::ALL {
            assert_eq!(Quantity::from_name(q.name()), Some(q));
        }
    }

    #[test]
    fn running_mean_and_cadence() {
        let (grid, law, ext) = setup();
        let mut acc = RunningStats::new(&grid, 2.0, 3);
        let a = derived_fields(&state(&grid, 1.0, 8.0), &law, &ext).unwrap();
        acc.update(8.0, &a).unwrap();
        assert_eq!(acc.mean().unwrap(), a);
        assert!(acc.update(9.0, &a).is_err());
        let b = derived_fields(&state(&grid, -1.0, 10.0), &law, &ext).unwrap();
        acc.update(10.0, &b).unwrap();
        let m = acc.mean().unwrap();
        for q in 0..N_QUANTITIES {
            for k in 0..grid.n_cells() {
                assert_relative_eq!(m[q][k], 0.5 * (a[q][k] + b[q][k]), max_relative = 1e-15, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn mean_is_order_independent() {
        use rand::{Rng, SeedableRng};
        let grid = Grid::new(2.0, 1.0, 4, 2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<Vec<CellField>> = (0..200)
            .map(|_| {
                (0..N_QUANTITIES)
                    .map(|_| CellField::from_vec((0..8).map(|_| rng.random_range(-1e3..1e3)).collect()))
                    .collect()
            })
            .collect();
        let run = |order: &[usize]| {
            let mut acc = RunningStats::new(&grid, 1.0, 0);
            for (m, &i) in order.iter().enumerate() {
                acc.update((m + 1) as f64, &samples[i]).unwrap();
            }
            acc.mean().unwrap()
        };
        let fwd: Vec<usize> = (0..200).collect();
        let rev: Vec<usize> = (0..200).rev().collect();
        let (a, b) = (run(&fwd), run(&rev));
        for (x, y) in a.iter().zip(&b) {
            for (p, q) in x.iter().zip(y.iter()) {
                assert!((p - q).abs() <= 1e-13 * p.abs().max(1.0));
            }
        }
    }
}
