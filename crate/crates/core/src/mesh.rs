//! Uniform structured grid over `[-L, L] x [-H, H]`, periodic in `x1`, walls at `x2 = +-H`.
//!
//! Cells are indexed row-major with `x1` fastest: `k = j * n1 + i`. Faces are kept in two
//! families mirroring the two dual grids: faces orthogonal to `e1` (`Axis::X1`, index `(i, j)`
//! is the west face of cell `(i, j)`, `i in 0..n1`) and faces orthogonal to `e2` (`Axis::X2`,
//! index `(i, j)` is the south face of cell `(i, j)`, `j in 0..=n2`). Ghost cells are never
//! stored; wall neighbours are reported as [`CellOrGhost::Ghost`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X1,
    X2,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X1 => 0,
            Axis::X2 => 1,
        }
    }
}

/// The four faces of a cell, in the fixed order used by every stencil loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    West,
    East,
    South,
    North,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::West, Side::East, Side::South, Side::North];

    pub fn axis(self) -> Axis {
        match self {
            Side::West | Side::East => Axis::X1,
            Side::South | Side::North => Axis::X2,
        }
    }

    /// Sign of the outward normal along [`Side::axis`].
    pub fn sign(self) -> f64 {
        match self {
            Side::West | Side::South => -1.0,
            Side::East | Side::North => 1.0,
        }
    }

    /// Outward unit normal as a 2-vector.
    pub fn normal(self) -> [f64; 2] {
        match self {
            Side::West => [-1.0, 0.0],
            Side::East => [1.0, 0.0],
            Side::South => [0.0, -1.0],
            Side::North => [0.0, 1.0],
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::West => Side::East,
            Side::East => Side::West,
            Side::South => Side::North,
            Side::North => Side::South,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FaceKind {
    Interior,
    WallBottom,
    WallTop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FaceRef {
    pub axis: Axis,
    pub i: usize,
    pub j: usize,
    pub kind: FaceKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellOrGhost {
    Cell(usize),
    Ghost(FaceKind),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n1: usize,
    n2: usize,
    h: f64,
    half_width: f64,
    half_height: f64,
}

impl Grid {
    /// Builds the grid for `[-half_width, half_width] x [-half_height, half_height]`.
    ///
    /// The cells must be square: `2L / n1 == 2H / n2` up to rounding.
    pub fn new(half_width: f64, half_height: f64, n1: usize, n2: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_height > 0.0) {
            return Err(Error::config(format!(
                "grid half extents must be positive, got L = {half_width}, H = {half_height}"
            )));
        }
        if n1 < 4 {
            return Err(Error::config(format!("n1 must be at least 4, got {n1}")));
        }
        if n2 < 2 {
            return Err(Error::config(format!("n2 must be at least 2, got {n2}")));
        }
        let h1 = 2.0 * half_width / n1 as f64;
        let h2 = 2.0 * half_height / n2 as f64;
        if (h1 - h2).abs() > 4.0 * f64::EPSILON * h1.max(h2) {
            return Err(Error::config(format!(
                "inconsistent aspect: 2L/n1 = {h1} differs from 2H/n2 = {h2}"
            )));
        }
        Ok(Grid {
            n1,
            n2,
            h: h1,
            half_width,
            half_height,
        })
    }

    /// The `[-2, 2] x [-1, 1]` Rayleigh-Benard box with `n2` cells across the layer.
    pub fn rayleigh_benard(n2: usize) -> Result<Self> {
        Grid::new(2.0, 1.0, 2 * n2, n2)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn half_height(&self) -> f64 {
        self.half_height
    }

    pub fn n_cells(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    /// `|Omega| = n1 * n2 * h^2`.
    pub fn area(&self) -> f64 {
        self.n_cells() as f64 * self.cell_area()
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.n1 + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.n1, k / self.n1)
    }

    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            -self.half_width + (i as f64 + 0.5) * self.h,
            -self.half_height + (j as f64 + 0.5) * self.h,
        ]
    }

    /// `x1` coordinate of column `i` (cell centres and horizontal face centres share it).
    pub fn x1(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.h
    }

    pub fn x2(&self, j: usize) -> f64 {
        -self.half_height + (j as f64 + 0.5) * self.h
    }

    /// Cell containing the point, clamped to the grid.
    pub fn locate(&self, x: [f64; 2]) -> (usize, usize) {
        let fi = ((x[0] + self.half_width) / self.h).floor();
        let fj = ((x[1] + self.half_height) / self.h).floor();
        let i = fi.clamp(0.0, (self.n1 - 1) as f64) as usize;
        let j = fj.clamp(0.0, (self.n2 - 1) as f64) as usize;
        (i, j)
    }

    #[inline]
    pub fn neighbor(&self, cell: usize, side: Side) -> CellOrGhost {
        let (i, j) = self.ij(cell);
        match side {
            Side::West => CellOrGhost::Cell(self.idx(if i == 0 { self.n1 - 1 } else { i - 1 }, j)),
            Side::East => CellOrGhost::Cell(self.idx(if i + 1 == self.n1 { 0 } else { i + 1 }, j)),
            Side::South => {
                if j == 0 {
                    CellOrGhost::Ghost(FaceKind::WallBottom)
                } else {
                    CellOrGhost::Cell(cell - self.n1)
                }
            }
            Side::North => {
                if j + 1 == self.n2 {
                    CellOrGhost::Ghost(FaceKind::WallTop)
                } else {
                    CellOrGhost::Cell(cell + self.n1)
                }
            }
        }
    }

    /// The face on `side` of `cell`.
    pub fn face_of(&self, cell: usize, side: Side) -> FaceRef {
        let (i, j) = self.ij(cell);
        match side {
            Side::West => self.face(Axis::X1, i, j),
            Side::East => self.face(Axis::X1, if i + 1 == self.n1 { 0 } else { i + 1 }, j),
            Side::South => self.face(Axis::X2, i, j),
            Side::North => self.face(Axis::X2, i, j + 1),
        }
    }

    pub fn face(&self, axis: Axis, i: usize, j: usize) -> FaceRef {
        let kind = match axis {
            Axis::X1 => FaceKind::Interior,
            Axis::X2 if j == 0 => FaceKind::WallBottom,
            Axis::X2 if j == self.n2 => FaceKind::WallTop,
            Axis::X2 => FaceKind::Interior,
        };
        FaceRef { axis, i, j, kind }
    }

    pub fn n_faces(&self, axis: Axis) -> usize {
        match axis {
            Axis::X1 => self.n1 * self.n2,
            Axis::X2 => self.n1 * (self.n2 + 1),
        }
    }

    /// Storage index of a face inside its orientation family.
    #[inline]
    pub fn face_index(&self, face: &FaceRef) -> usize {
        face.j * self.n1 + face.i
    }

    /// Every face exactly once: the `X1` family first, then `X2`.
    pub fn faces(&self) -> impl Iterator<Item = FaceRef> + '_ {
        let x1 = (0..self.n2).flat_map(move |j| (0..self.n1).map(move |i| self.face(Axis::X1, i, j)));
        let x2 =
            (0..=self.n2).flat_map(move |j| (0..self.n1).map(move |i| self.face(Axis::X2, i, j)));
        x1.chain(x2)
    }

    /// The two cells on the negative and positive side of a face along its axis.
    /// Wall faces have a ghost on the exterior side.
    pub fn face_cells(&self, face: &FaceRef) -> (CellOrGhost, CellOrGhost) {
        match (face.axis, face.kind) {
            (Axis::X1, _) => {
                let left = if face.i == 0 { self.n1 - 1 } else { face.i - 1 };
                (
                    CellOrGhost::Cell(self.idx(left, face.j)),
                    CellOrGhost::Cell(self.idx(face.i, face.j)),
                )
            }
            (Axis::X2, FaceKind::WallBottom) => (
                CellOrGhost::Ghost(FaceKind::WallBottom),
                CellOrGhost::Cell(self.idx(face.i, 0)),
            ),
            (Axis::X2, FaceKind::WallTop) => (
                CellOrGhost::Cell(self.idx(face.i, self.n2 - 1)),
                CellOrGhost::Ghost(FaceKind::WallTop),
            ),
            (Axis::X2, FaceKind::Interior) => (
                CellOrGhost::Cell(self.idx(face.i, face.j - 1)),
                CellOrGhost::Cell(self.idx(face.i, face.j)),
            ),
        }
    }
}
