//! Legacy ASCII VTK, `STRUCTURED_POINTS` with cell data.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::Grid;
use crate::operators::CellField;
use crate::scheme::State;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VtkData {
    pub title: String,
    /// cells per direction
    pub n1: usize,
    pub n2: usize,
    pub origin: [f64; 2],
    pub spacing: [f64; 2],
    pub scalars: Vec<(String, Vec<f64>)>,
    /// stored with a zero third component
    pub vectors: Vec<(String, [Vec<f64>; 2])>,
}

impl VtkData {
    pub fn new(grid: &Grid, title: &str) -> Self {
        VtkData {
            title: title.to_string(),
            n1: grid.n1(),
            n2: grid.n2(),
            origin: [-grid.half_width(), -grid.half_height()],
            spacing: [grid.h(), grid.h()],
            scalars: Vec::new(),
            vectors: Vec::new(),
        }
    }

    /// `rho`, `u`, `theta`.
    pub fn of_state(grid: &Grid, s: &State) -> Self {
        let mut d = Self::new(grid, &format!("t = {:.16e}", s.t));
        d.scalars.push(("rho".into(), s.rho.to_vec()));
        d.vectors.push(("u".into(), [s.u.c[0].to_vec(), s.u.c[1].to_vec()]));
        d.scalars.push(("theta".into(), s.theta.to_vec()));
        d
    }

    pub fn add_scalar(&mut self, name: &str, f: &CellField) {
        self.scalars.push((name.to_string(), f.to_vec()));
    }

    pub fn scalar(&self, name: &str) -> Option<&[f64]> {
        self.scalars.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn vector(&self, name: &str) -> Option<&[Vec<f64>; 2]> {
        self.vectors.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn to_text(&self) -> String {
        let n = self.n1 * self.n2;
        let mut s = String::with_capacity(64 + 26 * n * (self.scalars.len() + 3 * self.vectors.len()));
        let title: String = self.title.chars().filter(|c| *c != '\n').take(255).collect();
        let _ = writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET STRUCTURED_POINTS");
        let _ = writeln!(s, "DIMENSIONS {} {} 1", self.n1 + 1, self.n2 + 1);
        let _ = writeln!(s, "ORIGIN {:.16e} {:.16e} 0", self.origin[0], self.origin[1]);
        let _ = writeln!(s, "SPACING {:.16e} {:.16e} 1", self.spacing[0], self.spacing[1]);
        let _ = writeln!(s, "CELL_DATA {n}");
        for (name, v) in &self.scalars {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for x in v {
                let _ = writeln!(s, "{x:.16e}");
            }
        }
        for (name, [a, b]) in &self.vectors {
            let _ = writeln!(s, "VECTORS {name} double");
            for (x, y) in a.iter().zip(b) {
                let _ = writeln!(s, "{x:.16e} {y:.16e} 0");
            }
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        super::binary::write_atomic(path, self.to_text().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut p = Parser { path, text, pos: 0 };
        let head = p.line()?;
        if !head.starts_with("# vtk DataFile") {
            return Err(p.fail_at(0, "missing vtk header"));
        }
        let title = p.line()?.to_string();
        p.expect_line("ASCII")?;
        p.expect_line("DATASET STRUCTURED_POINTS")?;
        let mut out = VtkData {
            title,
            ..Default::default()
        };
        let mut n = None;
        while let Some((at, line)) = p.next_line() {
            let words: Vec<&str> = line.split_whitespace().collect();
            match words.as_slice() {
                [] => continue,
                ["DIMENSIONS", a, b, _] => {
                    out.n1 = p.int(a, at)?.saturating_sub(1);
                    out.n2 = p.int(b, at)?.saturating_sub(1);
                }
                ["ORIGIN", a, b, _] => out.origin = [p.num(a, at)?, p.num(b, at)?],
                ["SPACING", a, b, _] => out.spacing = [p.num(a, at)?, p.num(b, at)?],
                ["CELL_DATA", c] => {
                    let c = p.int(c, at)?;
                    if c != out.n1 * out.n2 {
                        return Err(p.fail_at(at, format!("CELL_DATA {c} does not match the dimensions")));
                    }
                    n = Some(c);
                }
                ["SCALARS", name, _ty, rest @ ..] => {
                    if rest.first().is_some_and(|c| *c != "1") {
                        return Err(p.fail_at(at, "only one-component scalars are supported"));
                    }
                    let count = n.ok_or_else(|| p.fail_at(at, "SCALARS before CELL_DATA"))?;
                    let (lat, lut) = p.next_line().ok_or_else(|| p.fail_at(at, "missing LOOKUP_TABLE"))?;
                    if !lut.starts_with("LOOKUP_TABLE") {
                        return Err(p.fail_at(lat, "expected LOOKUP_TABLE"));
                    }
                    let v = p.values(count)?;
                    out.scalars.push((name.to_string(), v));
                }
                ["VECTORS", name, _ty] => {
                    let count = n.ok_or_else(|| p.fail_at(at, "VECTORS before CELL_DATA"))?;
                    let v = p.values(3 * count)?;
                    let a = v.iter().step_by(3).copied().collect();
                    let b = v.iter().skip(1).step_by(3).copied().collect();
                    out.vectors.push((name.to_string(), [a, b]));
                }
                _ => return Err(p.fail_at(at, format!("unexpected line `{line}`"))),
            }
        }
        Ok(out)
    }
}

struct Parser<'a> {
    path: &'a Path,
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn fail_at(&self, offset: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            offset,
            msg: msg.into(),
        }
    }

    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        if self.pos >= self.text.len() {
            return None;
        }
        let start = self.pos;
        let rest = &self.text[start..];
        let end = rest.find('\n').map_or(rest.len(), |i| i);
        self.pos = start + end + 1;
        Some((start, rest[..end].trim_end_matches('\r')))
    }

    fn line(&mut self) -> Result<&'a str> {
        let at = self.pos;
        self.next_line().map(|(_, l)| l).ok_or_else(|| self.fail_at(at, "unexpected end of file"))
    }

    fn expect_line(&mut self, want: &str) -> Result<()> {
        let at = self.pos;
        let l = self.line()?;
        if l.trim() != want {
            return Err(self.fail_at(at, format!("expected `{want}`, found `{l}`")));
        }
        Ok(())
    }

    fn int(&self, w: &str, at: usize) -> Result<usize> {
        w.parse().map_err(|_| self.fail_at(at, format!("bad integer `{w}`")))
    }

    fn num(&self, w: &str, at: usize) -> Result<f64> {
        w.parse().map_err(|_| self.fail_at(at, format!("bad number `{w}`")))
    }

    /// `count` whitespace separated numbers, across as many lines as needed.
    fn values(&mut self, count: usize) -> Result<Vec<f64>> {
        let mut v = Vec::with_capacity(count);
        while v.len() < count {
            let at = self.pos;
            let line = self.line()?;
            let mut off = 0;
            for w in line.split_whitespace() {
                let rel = line[off..].find(w).unwrap_or(0) + off;
                off = rel + w.len();
                v.push(self.num(w, at + rel)?);
            }
        }
        if v.len() != count {
            return Err(self.fail_at(self.pos, format!("expected {count} values, found {}", v.len())));
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::VectorField;

    #[test]
    fn round_trip_to_all_digits() {
        let grid = Grid::new(2.0, 1.0, 8, 4).unwrap();
        let s = State {
            rho: CellField::from_fn(&grid, |x| 1.0 + (x[0] * 3.1).sin() / 3.0),
            u: VectorField::from_fn(&grid, |x| [x[1] / 7.0, -x[0] * 1e-9]),
            theta: CellField::from_fn(&grid, |x| std::f64::consts::PI + x[1]),
            t: 0.3,
        };
        let mut d = VtkData::of_state(&grid, &s);
        d.add_scalar("R11", &CellField::constant(&grid, -0.0));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.vtk");
        d.write(&p).unwrap();
        let back = VtkData::read(&p).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.scalar("theta").unwrap(), &s.theta[..]);
        assert_eq!(back.vector("u").unwrap()[1], s.u.c[1].to_vec());
    }

    #[test]
    fn cell_count_of_large_grid() {
        let grid = Grid::rayleigh_benard(80).unwrap();
        let s = State::uniform(&grid, 1.0, [0.0, 0.0], 1.0);
        let text = VtkData::of_state(&grid, &s).to_text();
        assert!(text.contains("CELL_DATA 12800\n"));
        assert!(text.contains("DIMENSIONS 161 81 1\n"));
        let theta_block = text.split("SCALARS theta double 1\nLOOKUP_TABLE default\n").nth(1).unwrap();
        let theta_block = theta_block.split("VECTORS").next().unwrap();
        assert_eq!(theta_block.lines().count(), 12800);
    }

    #[test]
    fn corrupt_value_reports_offset() {
        let grid = Grid::new(2.0, 1.0, 4, 2).unwrap();
        let s = State::uniform(&grid, 1.0, [0.0, 0.0], 1.0);
        let text = VtkData::of_state(&grid, &s).to_text();
        let data = text.find("LOOKUP_TABLE default\n").unwrap() + 21;
        let bad = format!("{}{}", &text[..data], text[data..].replacen("1.0000000000000000e0", "1.0x", 1));
        let at = bad.find("1.0x").unwrap();
        match VtkData::parse(Path::new("mem"), &bad) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, at),
            other => panic!("{other:?}"),
        }
        assert!(VtkData::parse(Path::new("mem"), &text[..text.len() - 30]).is_err());
        assert!(VtkData::parse(Path::new("mem"), "hello").is_err());
    }
}
