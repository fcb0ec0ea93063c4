//! `stats/` output of the analysis: field means and deviations, error families, defect
//! fields, functional series, histograms and moment reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::binary::write_atomic;
use super::vtk::VtkData;
use crate::diagnostics::{
    moment_report, Analysis, DefectKind, Functional, HistogramMeasure, Moments, Quantity, PROBES,
};
use crate::error::{Error, Result};
use crate::mesh::Grid;
use crate::operators::CellField;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatsSelection {
    All,
    Means,
    Defects,
    Measures,
}

impl std::str::FromStr for StatsSelection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(StatsSelection::All),
            "means" => Ok(StatsSelection::Means),
            "defects" => Ok(StatsSelection::Defects),
            "measures" => Ok(StatsSelection::Measures),
            _ => Err(Error::config(format!("unknown stats selection `{s}`, expected all|means|defects|measures"))),
        }
    }
}

/// Quantities that get histograms.
pub const MEASURED: [Quantity; 8] = [
    Quantity::Rho,
    Quantity::M1,
    Quantity::M2,
    Quantity::U1,
    Quantity::U2,
    Quantity::Theta,
    Quantity::E,
    Quantity::S,
];

/// Horizontal lines for the profile cuts.
pub const CUT_LINES: [f64; 3] = [-0.75, 0.0, 0.75];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEntry {
    pub functional: String,
    pub moments: Option<Moments>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct StatsReport {
    pub files: Vec<PathBuf>,
    pub moments: Vec<MomentEntry>,
}

fn num(s: &mut String, v: f64) {
    let _ = write!(s, ",{v:.16e}");
}

struct Out<'a> {
    dir: &'a Path,
    report: StatsReport,
}

impl Out<'_> {
    fn put(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.dir.join(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        write_atomic(&p, text.as_bytes())?;
        self.report.files.push(p);
        Ok(())
    }

    fn vtk(&mut self, name: &str, d: &VtkData) -> Result<()> {
        self.put(name, &d.to_text())
    }
}

fn field_csv(grid: &Grid, names: &[&str], fields: &[&CellField]) -> String {
    let mut s = format!("i,j,x1,x2,{}\n", names.join(","));
    for k in 0..grid.n_cells() {
        let (i, j) = grid.ij(k);
        let x = grid.center(i, j);
        let _ = write!(s, "{i},{j},{:.16e},{:.16e}", x[0], x[1]);
        for f in fields {
            num(&mut s, f[k]);
        }
        s.push('\n');
    }
    s
}

/// Averages of the two cell rows whose centres bracket `y`, per column.
pub fn line_cut(grid: &Grid, f: &[f64], y: f64) -> Vec<f64> {
    let h = grid.h();
    let r = (y + grid.half_height()) / h - 0.5;
    let j0 = ((r + 1e-9).floor() as i64).clamp(0, grid.n2() as i64 - 2) as usize;
    let w = (r - j0 as f64).clamp(0.0, 1.0);
    (0..grid.n1())
        .map(|i| (1.0 - w) * f[grid.idx(i, j0)] + w * f[grid.idx(i, j0 + 1)])
        .collect()
}

fn write_means(out: &mut Out, grid: &Grid, a: &Analysis) -> Result<()> {
    let names: Vec<&str> = Quantity::ALL.iter().map(|q| q.name()).collect();
    for (file, fields) in [("mean", &a.mean), ("deviation", &a.deviation)] {
        let mut d = VtkData::new(grid, &format!("{file} over T_m, m = {}..{}", a.window.m0 + 1, a.window.m_ref));
        for q in Quantity::ALL {
            d.add_scalar(q.name(), &fields[q.index()]);
        }
        d.vectors.push((
            "u".into(),
            [fields[Quantity::U1.index()].to_vec(), fields[Quantity::U2.index()].to_vec()],
        ));
        out.vtk(&format!("{file}.vtk"), &d)?;
        let refs: Vec<&CellField> = fields.iter().collect();
        out.put(&format!("{file}_fields.csv"), &field_csv(grid, &names, &refs))?;
    }

    let mut s = String::from("y,x1");
    for q in Quantity::ALL {
        let _ = write!(s, ",mean_{0},dev_{0}", q.name());
    }
    s.push('\n');
    for y in CUT_LINES {
        let cuts: Vec<(Vec<f64>, Vec<f64>)> = Quantity::ALL
            .iter()
            .map(|q| (line_cut(grid, &a.mean[q.index()], y), line_cut(grid, &a.deviation[q.index()], y)))
            .collect();
        for i in 0..grid.n1() {
            let _ = write!(s, "{y:.16e},{:.16e}", grid.x1(i));
            for (m, d) in &cuts {
                num(&mut s, m[i]);
                num(&mut s, d[i]);
            }
            s.push('\n');
        }
    }
    out.put("linecuts.csv", &s)?;

    let mut s = String::from("M,T_M");
    for fam in ["e1", "e2"] {
        for q in Quantity::ALL {
            let _ = write!(s, ",{fam}_{}", q.name());
        }
    }
    if a.e3.is_some() {
        for q in Quantity::ALL {
            let _ = write!(s, ",e3_{}", q.name());
        }
    }
    s.push('\n');
    for (i, t) in a.times.iter().enumerate() {
        let _ = write!(s, "{},{t:.16e}", a.window.m0 + 1 + i);
        for v in a.e1[i].iter().chain(&a.e2[i]) {
            num(&mut s, *v);
        }
        if let Some(e3) = &a.e3 {
            for v in &e3[i] {
                num(&mut s, *v);
            }
        }
        s.push('\n');
    }
    out.put("errors.csv", &s)
}

fn write_defects(out: &mut Out, grid: &Grid, a: &Analysis) -> Result<()> {
    let names: Vec<&str> = DefectKind::ALL.iter().map(|k| k.name()).collect();
    let fields: Vec<&CellField> = DefectKind::ALL.iter().map(|k| a.defect.get(*k)).collect();
    let mut d = VtkData::new(grid, "Reynolds stress and energy fluctuation");
    for (n, f) in names.iter().zip(&fields) {
        d.add_scalar(n, f);
    }
    out.vtk("defect.vtk", &d)?;
    out.put("defect_fields.csv", &field_csv(grid, &names, &fields))?;

    let mut s = String::from("M,T_M");
    for norm in ["l1", "linf"] {
        for n in &names {
            let _ = write!(s, ",e4_{norm}_{n}");
        }
    }
    s.push_str(",reynolds_l1,fluctuation_l1\n");
    for (i, t) in a.times.iter().enumerate() {
        let _ = write!(s, "{},{t:.16e}", a.window.m0 + 1 + i);
        for v in a.e4_l1[i].iter().chain(&a.e4_linf[i]) {
            num(&mut s, *v);
        }
        num(&mut s, a.reynolds_l1[i]);
        num(&mut s, a.fluctuation_l1[i]);
        s.push('\n');
    }
    out.put("defect_errors.csv", &s)
}

/// `F1`, `F2` and `F3` at every probe for the measured quantities.
pub fn functionals() -> Vec<Functional> {
    let mut v = Vec::new();
    for q in MEASURED {
        v.push(Functional::L1Norm { quantity: q });
        v.push(Functional::Integral { quantity: q });
        for p in PROBES {
            v.push(Functional::Point { quantity: q, point: p });
        }
    }
    v
}

pub fn histogram_csv(h: &HistogramMeasure, label: &str) -> String {
    let mut s = format!(
        "# functional {label}\n# samples {} underflow {} overflow {}\nbin_lo,bin_hi,count,mass\n",
        h.samples(),
        h.underflow,
        h.overflow
    );
    for (i, (c, m)) in h.counts.iter().zip(h.mass()).enumerate() {
        let _ = writeln!(s, "{:.16e},{:.16e},{c},{m:.16e}", h.edges[i], h.edges[i + 1]);
    }
    s
}

fn write_measures(out: &mut Out, a: &Analysis, bins: usize) -> Result<()> {
    let fs = functionals();
    let series: Vec<Vec<f64>> = fs.iter().map(|f| a.functional_series(f)).collect();
    let mut s = String::from("M,T_M");
    for f in &fs {
        let _ = write!(s, ",{}", f.label());
    }
    s.push('\n');
    for (i, t) in a.times.iter().enumerate() {
        let _ = write!(s, "{},{t:.16e}", a.window.m0 + 1 + i);
        for v in &series {
            num(&mut s, v[i]);
        }
        s.push('\n');
    }
    out.put("functionals.csv", &s)?;

    for (f, v) in fs.iter().zip(&series) {
        let label = f.label();
        if v.iter().any(|x| !x.is_finite()) {
            out.report.moments.push(MomentEntry {
                functional: label,
                moments: None,
                note: Some("probe outside the domain".into()),
            });
            continue;
        }
        let mut h = HistogramMeasure::from_samples(v, bins)?;
        h.functional = Some(*f);
        out.put(&format!("histograms/{label}.csv"), &histogram_csv(&h, &label))?;
        let entry = match moment_report(v) {
            Ok(m) => MomentEntry {
                functional: label,
                moments: Some(m),
                note: None,
            },
            Err(e) => MomentEntry {
                functional: label,
                moments: None,
                note: Some(e.to_string()),
            },
        };
        out.report.moments.push(entry);
    }
    let text = serde_json::to_string_pretty(&out.report.moments).map_err(|e| Error::config(e.to_string()))?;
    out.put("moments.json", &text)
}

pub fn write_stats(dir: &Path, grid: &Grid, a: &Analysis, bins: usize, what: StatsSelection) -> Result<StatsReport> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Out {
        dir,
        report: StatsReport::default(),
    };
    let all = what == StatsSelection::All;
    if all || what == StatsSelection::Means {
        write_means(&mut out, grid, a)?;
    }
    if all || what == StatsSelection::Defects {
        write_defects(&mut out, grid, a)?;
    }
    if all || what == StatsSelection::Measures {
        write_measures(&mut out, a, bins)?;
    }
    let mut s = String::from("{\n");
    let _ = writeln!(
        s,
        "  \"m0\": {},\n  \"m_ref\": {},\n  \"cadence\": {:.16e},\n  \"samples\": {}",
        a.window.m0,
        a.window.m_ref,
        a.window.cadence,
        a.times.len()
    );
    s.push_str("}\n");
    out.put("window.json", &s)?;
    Ok(out.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{analyze, WindowSpec};
    use crate::monitors::ThetaExtension;
    use crate::operators::BoundaryClosure;
    use crate::scheme::State;
    use crate::thermo::GasLaw;

    #[test]
    fn line_cut_of_affine_profile() {
        let grid = Grid::rayleigh_benard(8).unwrap();
        let f = CellField::from_fn(&grid, |x| 2.0 + x[1]);
        for y in CUT_LINES {
            for v in line_cut(&grid, &f, y) {
                assert!((v - (2.0 + y)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn files_for_a_toy_window() {
        let grid = Grid::rayleigh_benard(4).unwrap();
        let law = GasLaw::default();
        let ext = ThetaExtension::linear_blend(&grid, &BoundaryClosure::uniform(&grid, 1.0, 1.0)).unwrap();
        let traj: Vec<State> = (0..=10)
            .map(|m| {
                let mut s = State::uniform(&grid, 1.0, [0.1 * (m as f64).sin(), 0.0], 1.0 + 0.01 * m as f64);
                s.t = m as f64;
                s
            })
            .collect();
        let a = analyze(&grid, &law, &ext, &traj, WindowSpec { cadence: 1.0, m0: 0, m_ref: 10 }, false).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let r = write_stats(dir.path(), &grid, &a, 50, StatsSelection::All).unwrap();
        for name in [
            "mean.vtk",
            "deviation_fields.csv",
            "linecuts.csv",
            "errors.csv",
            "defect.vtk",
            "defect_errors.csv",
            "functionals.csv",
            "histograms/F1_m1.csv",
            "histograms/F2_u1.csv",
            "histograms/F3_theta_P6.csv",
            "moments.json",
        ] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
        assert_eq!(r.moments.len(), functionals().len());
        let errors = fs::read_to_string(dir.path().join("errors.csv")).unwrap();
        assert_eq!(errors.lines().count(), 11);
        let mean = VtkData::read(&dir.path().join("mean.vtk")).unwrap();
        assert_eq!(mean.scalar("theta").unwrap(), &a.mean[Quantity::Theta.index()][..]);

        let only = tempfile::tempdir().unwrap();
        write_stats(only.path(), &grid, &a, 10, StatsSelection::Defects).unwrap();
        assert!(only.path().join("defect.vtk").exists());
        assert!(!only.path().join("mean.vtk").exists());
    }
}
