use serde::{Deserialize, Serialize};

use crate::compensated::Neumaier;
use crate::diagnostics::{
    derived_fields, l1, l1_diff, probe_value, reynolds_defect, DefectFields, DefectKind, RunningStats,
    SnapshotSource, N_QUANTITIES, PROBES,
};
use crate::error::{Error, Result};
use crate::mesh::Grid;
use crate::monitors::ThetaExtension;
use crate::operators::CellField;
use crate::thermo::GasLaw;

/// Samples `T_m = m cadence` for `m = m0 + 1 ..= m_ref`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub cadence: f64,
    pub m0: usize,
    pub m_ref: usize,
}

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.cadence > 0.0) || !self.cadence.is_finite() {
            return Err(Error::config(format!("cadence must be positive, got {}", self.cadence)));
        }
        if self.m_ref <= self.m0 {
            return Err(Error::config(format!("need m_ref > m0, got m0 = {} m_ref = {}", self.m0, self.m_ref)));
        }
        Ok(())
    }

    pub fn samples(&self) -> usize {
        self.m_ref - self.m0
    }

    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.cadence
    }
}

/// Snapshot index for each `m` in `first..=last`.
fn locate<S: SnapshotSource + ?Sized>(source: &S, cadence: f64, first: usize, last: usize) -> Result<Vec<usize>> {
    let mut slots: Vec<Option<usize>> = vec![None; last + 1 - first];
    for i in 0..source.len() {
        let t = source.time(i)?;
        let m = (t / cadence).round();
        if m < first as f64 || m > last as f64 {
            continue;
        }
        if (t - m * cadence).abs() <= 1e-9 * cadence.max(t.abs()) {
            slots[m as usize - first] = Some(i);
        }
    }
    let missing: Vec<usize> = slots
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_none())
        .map(|(i, _)| first + i)
        .collect();
    if !missing.is_empty() {
        let shown: Vec<String> = missing.iter().take(5).map(|m| m.to_string()).collect();
        return Err(Error::Range(format!(
            "{} of {} snapshots missing from the window (m = {}{})",
            missing.len(),
            slots.len(),
            shown.join(", "),
            if missing.len() > 5 { ", ..." } else { "" }
        )));
    }
    Ok(slots.into_iter().map(|s| s.unwrap_or_default()).collect())
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Everything derived from one window of snapshots. Row `i` of each series belongs to
/// `M = m0 + 1 + i`.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub window: WindowSpec,
    pub times: Vec<f64>,
    /// `||U(T_M) - U(T_Mref)||_L1`
    pub e1: Vec<[f64; N_QUANTITIES]>,
    /// `||Ov U(T_M) - Ov U(T_Mref)||_L1`
    pub e2: Vec<[f64; N_QUANTITIES]>,
    /// `||Dev U(T_M) - Dev U(T_Mref)||_L1`, when requested
    pub e3: Option<Vec<[f64; N_QUANTITIES]>>,
    /// defect errors, columns in [`DefectKind::ALL`] order
    pub e4_l1: Vec<[f64; 7]>,
    pub e4_linf: Vec<[f64; 7]>,
    /// L1 norm of the per-cell Frobenius norm of the Reynolds stress at `T_M`
    pub reynolds_l1: Vec<f64>,
    /// energy fluctuation L1 norm at `T_M`
    pub fluctuation_l1: Vec<f64>,
    /// per sample: `||U||_L1`, `int U`, probe averages
    pub l1_series: Vec<[f64; N_QUANTITIES]>,
    pub integral_series: Vec<[f64; N_QUANTITIES]>,
    pub probe_series: Vec<[[f64; 6]; N_QUANTITIES]>,
    pub mean: Vec<CellField>,
    pub deviation: Vec<CellField>,
    pub defect: DefectFields,
}

impl Analysis {
    /// Series of `F1`/`F2`/`F3` samples for one quantity, in window order.
    pub fn functional_series(&self, f: &crate::diagnostics::Functional) -> Vec<f64> {
        use crate::diagnostics::Functional::*;
        match *f {
            L1Norm { quantity } => self.l1_series.iter().map(|r| r[quantity.index()]).collect(),
            Integral { quantity } => self.integral_series.iter().map(|r| r[quantity.index()]).collect(),
            Point { quantity, point } => match PROBES.iter().position(|p| *p == point) {
                Some(j) => self.probe_series.iter().map(|r| r[quantity.index()][j]).collect(),
                None => Vec::new(),
            },
        }
    }
}

/// Two replay passes over the window: the first for the final mean and defect, the second
/// for the running quantities and deviation. `with_e3` adds a quadratic-cost pass.
pub fn analyze<S: SnapshotSource + ?Sized>(
    grid: &Grid,
    law: &GasLaw,
    ext: &ThetaExtension,
    source: &S,
    window: WindowSpec,
    with_e3: bool,
) -> Result<Analysis> {
    window.validate()?;
    let idx = locate(source, window.cadence, window.m0 + 1, window.m_ref)?;
    let load = |j: usize| -> Result<Vec<CellField>> {
        let s = source.load(idx[j])?;
        if s.n_cells() != grid.n_cells() {
            return Err(Error::domain(format!(
                "snapshot has {} cells, grid has {}",
                s.n_cells(),
                grid.n_cells()
            )));
        }
        derived_fields(&s, law, ext)
    };
    let n = idx.len();

    // pass 1
    let mut acc = RunningStats::new(grid, window.cadence, window.m0);
    for j in 0..n {
        acc.update(window.time(window.m0 + 1 + j), &load(j)?)?;
    }
    let mean = acc.mean()?;
    let defect = reynolds_defect(&mean, law)?;
    let last = load(n - 1)?;

    // pass 2
    let mut acc = RunningStats::new(grid, window.cadence, window.m0);
    let mut dev: Vec<Vec<Neumaier>> = vec![vec![Neumaier::new(); grid.n_cells()]; N_QUANTITIES];
    let mut out = Analysis {
        window,
        times: Vec::with_capacity(n),
        e1: Vec::with_capacity(n),
        e2: Vec::with_capacity(n),
        e3: None,
        e4_l1: Vec::with_capacity(n),
        e4_linf: Vec::with_capacity(n),
        reynolds_l1: Vec::with_capacity(n),
        fluctuation_l1: Vec::with_capacity(n),
        l1_series: Vec::with_capacity(n),
        integral_series: Vec::with_capacity(n),
        probe_series: Vec::with_capacity(n),
        mean: Vec::new(),
        deviation: Vec::new(),
        defect: defect.clone(),
    };
    for j in 0..n {
        let t = window.time(window.m0 + 1 + j);
        let f = load(j)?;
        acc.update(t, &f)?;
        let running = acc.mean()?;
        let d = reynolds_defect(&running, law)?;

        let mut e1 = [0.0; N_QUANTITIES];
        let mut e2 = [0.0; N_QUANTITIES];
        let mut norms = [0.0; N_QUANTITIES];
        let mut ints = [0.0; N_QUANTITIES];
        let mut probes = [[0.0; 6]; N_QUANTITIES];
        for q in 0..N_QUANTITIES {
            e1[q] = l1_diff(grid, &f[q], &last[q]);
            e2[q] = l1_diff(grid, &running[q], &mean[q]);
            norms[q] = l1(grid, &f[q]);
            ints[q] = f[q].integral(grid);
            for (p, point) in PROBES.iter().enumerate() {
                // points outside a non-standard domain are left at NaN
                probes[q][p] = probe_value(grid, &f[q], *point).unwrap_or(f64::NAN);
            }
            for (a, (v, m)) in dev[q].iter_mut().zip(f[q].iter().zip(mean[q].iter())) {
                a.add((v - m).abs());
            }
        }
        let mut e4_l1 = [0.0; 7];
        let mut e4_linf = [0.0; 7];
        for (c, kind) in DefectKind::ALL.into_iter().enumerate() {
            e4_l1[c] = l1_diff(grid, d.get(kind), defect.get(kind));
            e4_linf[c] = sup_diff(d.get(kind), defect.get(kind));
        }
        out.times.push(t);
        out.e1.push(e1);
        out.e2.push(e2);
        out.e4_l1.push(e4_l1);
        out.e4_linf.push(e4_linf);
        out.reynolds_l1.push(l1(grid, &d.frobenius()));
        out.fluctuation_l1.push(l1(grid, &d.energy));
        out.l1_series.push(norms);
        out.integral_series.push(ints);
        out.probe_series.push(probes);
    }
    let c = n as f64;
    out.deviation = dev
        .iter()
        .map(|acc| CellField::from_vec(acc.iter().map(|a| a.value() / c).collect()))
        .collect();
    out.mean = mean;

    if with_e3 {
        // Dev(T_M) for every M needs Ov U(T_M) first, so each M replays its prefix
        let mut devs: Vec<Vec<CellField>> = Vec::with_capacity(n);
        let mut acc = RunningStats::new(grid, window.cadence, window.m0);
        for j in 0..n {
            acc.update(window.time(window.m0 + 1 + j), &load(j)?)?;
            let running = acc.mean()?;
            let mut sums = vec![vec![Neumaier::new(); grid.n_cells()]; N_QUANTITIES];
            for i in 0..=j {
                let f = load(i)?;
                for q in 0..N_QUANTITIES {
                    for (a, (v, m)) in sums[q].iter_mut().zip(f[q].iter().zip(running[q].iter())) {
                        a.add((v - m).abs());
                    }
                }
            }
            let c = (j + 1) as f64;
            devs.push(
                sums.iter()
                    .map(|s| CellField::from_vec(s.iter().map(|a| a.value() / c).collect()))
                    .collect(),
            );
        }
        let fin = &devs[n - 1];
        out.e3 = Some(
            devs.iter()
                .map(|d| {
                    let mut e = [0.0; N_QUANTITIES];
                    for q in 0..N_QUANTITIES {
                        e[q] = l1_diff(grid, &d[q], &fin[q]);
                    }
                    e
                })
                .collect(),
        );
    }
    Ok(out)
}

/// Errors against a known stationary solution over `T_m = m cadence`, `m = 1 ..= M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactErrors {
    pub times: Vec<f64>,
    /// `||U(T_M) - U_s||_L1`
    pub e1: Vec<[f64; N_QUANTITIES]>,
    /// `||Ov U(T_M) - U_s||_L1`, mean over `m = 1 ..= M`
    pub e2: Vec<[f64; N_QUANTITIES]>,
}

/// Uses every cadence sample from `m = 1` up to the last one in `source`; gaps are errors.
pub fn error_vs_exact<S: SnapshotSource + ?Sized>(
    grid: &Grid,
    law: &GasLaw,
    ext: &ThetaExtension,
    source: &S,
    exact: &crate::scheme::State,
    cadence: f64,
) -> Result<ExactErrors> {
    if !(cadence > 0.0) {
        return Err(Error::config(format!("cadence must be positive, got {cadence}")));
    }
    if exact.n_cells() != grid.n_cells() {
        return Err(Error::domain(format!(
            "exact solution has {} cells, grid has {}",
            exact.n_cells(),
            grid.n_cells()
        )));
    }
    let mut last_m = 0usize;
    for i in 0..source.len() {
        let t = source.time(i)?;
        let m = (t / cadence).round();
        if m >= 1.0 && (t - m * cadence).abs() <= 1e-9 * cadence.max(t.abs()) {
            last_m = last_m.max(m as usize);
        }
    }
    if last_m == 0 {
        return Err(Error::Range("no snapshot on the cadence grid".into()));
    }
    let idx = locate(source, cadence, 1, last_m)?;
    let ue = derived_fields(exact, law, ext)?;
    let mut acc = RunningStats::new(grid, cadence, 0);
    let mut out = ExactErrors {
        times: Vec::with_capacity(idx.len()),
        e1: Vec::with_capacity(idx.len()),
        e2: Vec::with_capacity(idx.len()),
    };
    for (j, &i) in idx.iter().enumerate() {
        let s = source.load(i)?;
        if s.n_cells() != grid.n_cells() {
            return Err(Error::domain("snapshot does not match the grid"));
        }
        let f = derived_fields(&s, law, ext)?;
        let t = (j + 1) as f64 * cadence;
        acc.update(t, &f)?;
        let mean = acc.mean()?;
        let mut e1 = [0.0; N_QUANTITIES];
        let mut e2 = [0.0; N_QUANTITIES];
        for q in 0..N_QUANTITIES {
            e1[q] = l1_diff(grid, &f[q], &ue[q]);
            e2[q] = l1_diff(grid, &mean[q], &ue[q]);
        }
        out.times.push(t);
        out.e1.push(e1);
        out.e2.push(e2);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{Functional, Quantity};
    use crate::operators::BoundaryClosure;
    use crate::scheme::State;
    use approx::assert_relative_eq;

    fn setup() -> (Grid, GasLaw, ThetaExtension) {
        let grid = Grid::new(2.0, 1.0, 4, 2).unwrap();
        let ext = ThetaExtension::linear_blend(&grid, &BoundaryClosure::uniform(&grid, 1.0, 1.0)).unwrap();
        (grid, GasLaw::default(), ext)
    }

    fn at(mut s: State, t: f64) -> State {
        s.t = t;
        s
    }

    fn alternating(grid: &Grid, v: [f64; 2], n: usize, cadence: f64) -> Vec<State> {
        let a = State::uniform(grid, 1.2, v, 2.0);
        let b = State::uniform(grid, 1.2, [-v[0], -v[1]], 2.0);
        (0..=n)
            .map(|m| at(if m % 2 == 1 { a.clone() } else { b.clone() }, m as f64 * cadence))
            .collect()
    }

    #[test]
    fn last_sample_errors_vanish() {
        let (grid, law, ext) = setup();
        let traj = alternating(&grid, [0.3, 0.1], 12, 2.0);
        let w = WindowSpec { cadence: 2.0, m0: 2, m_ref: 12 };
        let a = analyze(&grid, &law, &ext, &traj, w, true).unwrap();
        assert_eq!(a.times.len(), 10);
        assert_eq!(a.times[0], 6.0);
        let last = a.times.len() - 1;
        assert!(a.e1[last].iter().all(|e| *e == 0.0));
        assert!(a.e2[last].iter().all(|e| *e == 0.0));
        assert!(a.e3.as_ref().unwrap()[last].iter().all(|e| *e == 0.0));
        assert!(a.e4_l1[last].iter().chain(&a.e4_linf[last]).all(|e| *e == 0.0));
    }

    #[test]
    fn alternating_closed_forms() {
        // window m = 1..=4: A B A B. After M samples the mean of u1 is v/M for odd M, 0 for even.
        let (grid, law, ext) = setup();
        let v = 0.4;
        let traj = alternating(&grid, [v, 0.0], 4, 1.0);
        let w = WindowSpec { cadence: 1.0, m0: 0, m_ref: 4 };
        let a = analyze(&grid, &law, &ext, &traj, w, true).unwrap();
        let area = grid.area();
        let u1 = Quantity::U1.index();
        assert_relative_eq!(a.e2[0][u1], v * area, max_relative = 1e-14);
        assert_relative_eq!(a.e2[1][u1], 0.0);
        assert_relative_eq!(a.e2[2][u1], v / 3.0 * area, max_relative = 1e-14);
        // E1 alternates between 2v|Omega| and 0
        assert_relative_eq!(a.e1[0][u1], 2.0 * v * area, max_relative = 1e-14);
        assert_eq!(a.e1[1][u1], 0.0);
        // deviation |A - B| / 2 = v per cell
        for k in 0..grid.n_cells() {
            assert_relative_eq!(a.deviation[u1][k], v, max_relative = 1e-14);
        }
        // Dev after 3 samples: mean v/3, deviations 2v/3, 4v/3, 2v/3 -> 8v/9
        let e3 = a.e3.unwrap();
        assert_relative_eq!(e3[2][u1], (v - 8.0 * v / 9.0) * area, max_relative = 1e-12);
        // Reynolds stress at M = 2 equals the final one, rho v^2 in R11
        assert_eq!(a.e4_l1[1][0], 0.0);
        assert_relative_eq!(a.defect.r11[0], 1.2 * v * v, max_relative = 1e-12);
        // at M = 1 the defect vanishes, so E4 equals the final defect norm
        assert_relative_eq!(a.e4_l1[0][0], 1.2 * v * v * area, max_relative = 1e-12);
        assert_relative_eq!(a.e4_linf[0][0], 1.2 * v * v, max_relative = 1e-12);
        assert_eq!(a.reynolds_l1[0], 0.0);
    }

    #[test]
    fn stationary_trajectory() {
        let (grid, law, ext) = setup();
        let s = State::uniform(&grid, 1.0, [0.0, 0.0], 1.0);
        let traj: Vec<State> = (0..=6).map(|m| at(s.clone(), m as f64)).collect();
        let a = analyze(&grid, &law, &ext, &traj, WindowSpec { cadence: 1.0, m0: 1, m_ref: 6 }, false).unwrap();
        assert!(a.e1.iter().flatten().all(|e| *e == 0.0));
        assert!(a.reynolds_l1.iter().all(|e| *e < 1e-14));
        assert!(a.e3.is_none());
        let f = a.functional_series(&Functional::L1Norm { quantity: Quantity::Rho });
        assert_eq!(f.len(), 5);
        assert_relative_eq!(f[0], grid.area());
    }

    #[test]
    fn missing_snapshots_reported() {
        let (grid, law, ext) = setup();
        let mut traj = alternating(&grid, [0.1, 0.0], 8, 1.0);
        traj.remove(5);
        let err = analyze(&grid, &law, &ext, &traj, WindowSpec { cadence: 1.0, m0: 2, m_ref: 8 }, false).unwrap_err();
        assert!(err.to_string().contains("1 of 6"), "{err}");
        assert!(analyze(&grid, &law, &ext, &traj, WindowSpec { cadence: 1.0, m0: 8, m_ref: 8 }, false).is_err());
    }

    #[test]
    fn exact_errors() {
        let (grid, law, ext) = setup();
        let exact = State::uniform(&grid, 1.0, [0.0, 0.0], 1.5);
        let delta = 0.25;
        let traj: Vec<State> = (0..=3)
            .map(|m| {
                let mut s = exact.clone();
                for k in 0..s.n_cells() {
                    s.theta[k] += delta;
                }
                at(s, m as f64 * 0.5)
            })
            .collect();
        let e = error_vs_exact(&grid, &law, &ext, &traj, &exact, 0.5).unwrap();
        assert_eq!(e.times, vec![0.5, 1.0, 1.5]);
        let th = Quantity::Theta.index();
        for r in e.e1.iter().chain(&e.e2) {
            assert_relative_eq!(r[th], delta * grid.area(), max_relative = 1e-14);
        }
        let same: Vec<State> = (1..=3).map(|m| at(exact.clone(), m as f64)).collect();
        let z = error_vs_exact(&grid, &law, &ext, &same, &exact, 1.0).unwrap();
        assert!(z.e1.iter().flatten().all(|v| *v == 0.0));
        assert!(z.e2.iter().flatten().all(|v| *v < 1e-14));

        let other = Grid::new(2.0, 1.0, 8, 4).unwrap();
        let big = State::uniform(&other, 1.0, [0.0, 0.0], 1.0);
        assert!(error_vs_exact(&grid, &law, &ext, &traj, &big, 0.5).is_err());
    }
}
