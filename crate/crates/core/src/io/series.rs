//! `series.csv`: one row per `series_every` steps.

use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::Quantity;
use crate::error::{Error, Result};
use crate::mesh::Grid;
use crate::monitors::{StepMonitors, ThetaExtension};
use crate::scheme::{State, StepReport};
use crate::thermo::{ballistic_energy, specific_entropy, GasLaw};

pub const SERIES_COLUMNS: [&str; 21] = [
    "step",
    "t",
    "l1_m1",
    "l1_m2",
    "l1_E",
    "l1_rho_e",
    "l1_S",
    "l1_BE",
    "entropy_production",
    "mass",
    "budget_residual",
    "density_decay",
    "density_decay_scale",
    "rho_min",
    "rho_max",
    "theta_min",
    "theta_max",
    "speed_max",
    "newton_iterations",
    "linear_iterations",
    "substeps",
];

const HEADER_COMMENT: &str = "\
# rbnsf time series, one row per recorded step\n\
# l1_X = sum_K |X_K| h^2 for X in m1 = rho u1, m2 = rho u2, E = total energy, rho_e = c_v rho theta, S = rho s, BE = ballistic energy\n\
# entropy_production = sum_K sigma_K h^2, mass = sum_K rho_K h^2, budget_residual = dt |internal energy balance| / |Omega|\n\
# density_decay <= 1e-10 density_decay_scale is the renormalized continuity contract; extrema are over the state after the step\n";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub step: u64,
    pub t: f64,
    pub l1: [f64; 6],
    pub monitors: [f64; 5],
    pub extrema: [f64; 5],
    pub counts: [u64; 3],
}

impl SeriesRow {
    pub fn new(grid: &Grid, law: &GasLaw, ext: &ThetaExtension, step: u64, s: &State, m: &StepMonitors, r: &StepReport) -> Result<Self> {
        let area = grid.cell_area();
        let mut acc = [crate::compensated::Neumaier::new(); 6];
        for k in 0..s.n_cells() {
            let (rho, th) = (s.rho[k], s.theta[k]);
            let u = s.u.at(k);
            let kin = 0.5 * rho * (u[0] * u[0] + u[1] * u[1]);
            let vals = [
                rho * u[0],
                rho * u[1],
                kin + law.c_v() * rho * th,
                law.c_v() * rho * th,
                rho * specific_entropy(rho, th, law)?,
                ballistic_energy(rho, u, th, ext.values()[k], law)?,
            ];
            for (a, v) in acc.iter_mut().zip(vals) {
                a.add(v.abs());
            }
        }
        Ok(SeriesRow {
            step,
            t: s.t,
            l1: acc.map(|a| a.value() * area),
            monitors: [m.entropy_production, m.mass, m.budget, m.density_decay, m.density_decay_scale],
            extrema: [m.range.rho_min, m.range.rho_max, m.range.theta_min, m.range.theta_max, m.range.speed_max],
            counts: [r.newton_iterations as u64, r.linear_iterations as u64, r.substeps as u64],
        })
    }

    pub fn to_line(&self) -> String {
        let mut s = format!("{},{:.16e}", self.step, self.t);
        for v in self.l1.iter().chain(&self.monitors).chain(&self.extrema) {
            let _ = write!(s, ",{v:.16e}");
        }
        for c in self.counts {
            let _ = write!(s, ",{c}");
        }
        s
    }

    pub fn parse(line: &str) -> Option<Self> {
        let w: Vec<&str> = line.trim().split(',').collect();
        if w.len() != SERIES_COLUMNS.len() {
            return None;
        }
        let f = |i: usize| w[i].parse::<f64>().ok();
        let u = |i: usize| w[i].parse::<u64>().ok();
        let mut row = SeriesRow {
            step: u(0)?,
            t: f(1)?,
            l1: [0.0; 6],
            monitors: [0.0; 5],
            extrema: [0.0; 5],
            counts: [u(18)?, u(19)?, u(20)?],
        };
        for i in 0..6 {
            row.l1[i] = f(2 + i)?;
        }
        for i in 0..5 {
            row.monitors[i] = f(8 + i)?;
            row.extrema[i] = f(13 + i)?;
        }
        Some(row)
    }

    /// Value of a named column.
    pub fn get(&self, column: &str) -> Option<f64> {
        let i = SERIES_COLUMNS.iter().position(|c| *c == column)?;
        Some(match i {
            0 => self.step as f64,
            1 => self.t,
            2..=7 => self.l1[i - 2],
            8..=12 => self.monitors[i - 8],
            13..=17 => self.extrema[i - 13],
            _ => self.counts[i - 18] as f64,
        })
    }

    /// L1 column of a recorded quantity, where one exists.
    pub fn l1_of(&self, q: Quantity) -> Option<f64> {
        match q {
            Quantity::M1 => Some(self.l1[0]),
            Quantity::M2 => Some(self.l1[1]),
            Quantity::E => Some(self.l1[2]),
            Quantity::S => Some(self.l1[4]),
            Quantity::BE => Some(self.l1[5]),
            _ => None,
        }
    }
}

pub fn header() -> String {
    format!("{HEADER_COMMENT}{}\n", SERIES_COLUMNS.join(","))
}

pub struct SeriesWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl SeriesWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        out.write_all(header().as_bytes()).map_err(|e| Error::io(path, e))?;
        Ok(SeriesWriter {
            path: path.to_path_buf(),
            out,
        })
    }

    /// Keeps the header and the rows with `step <= keep_through`, then appends.
    pub fn resume(path: &Path, keep_through: u64) -> Result<Self> {
        let rows = read_series(path)?;
        let mut text = header();
        for r in rows.iter().filter(|r| r.step <= keep_through) {
            text.push_str(&r.to_line());
            text.push('\n');
        }
        fs::write(path, text).map_err(|e| Error::io(path, e))?;
        let f = OpenOptions::new().append(true).open(path).map_err(|e| Error::io(path, e))?;
        Ok(SeriesWriter {
            path: path.to_path_buf(),
            out: BufWriter::new(f),
        })
    }

    pub fn write(&mut self, row: &SeriesRow) -> Result<()> {
        writeln!(self.out, "{}", row.to_line()).map_err(|e| Error::io(&self.path, e))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn read_series(path: &Path) -> Result<Vec<SeriesRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    let mut offset = 0;
    let mut seen_names = false;
    for line in text.split_inclusive('\n') {
        let l = line.trim();
        if l.is_empty() || l.starts_with('#') {
        } else if !seen_names {
            if l != SERIES_COLUMNS.join(",") {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    offset,
                    msg: "unexpected column names".into(),
                });
            }
            seen_names = true;
        } else {
            rows.push(SeriesRow::parse(l).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                offset,
                msg: format!("malformed row `{l}`"),
            })?);
        }
        offset += line.len();
    }
    Ok(rows)
}
