//! Discrete difference operators on piecewise-constant cell fields.
//!
//! Face conventions: on an interior face the normal is `+e_axis`, `in` is the cell on the
//! negative side and `out` the one on the positive side. On a wall face the normal is the
//! outward one, `in` is the adjacent cell and `out` is the virtual ghost supplied by a
//! [`Bc`] rule, so that `<v>` on the wall equals the prescribed trace.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Axis, CellOrGhost, FaceKind, FaceRef, Grid, Side};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellField(Vec<f64>);

impl CellField {
    pub fn zeros(grid: &Grid) -> Self {
        CellField(vec![0.0; grid.n_cells()])
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        CellField(vec![value; grid.n_cells()])
    }

    /// Samples `f` at every cell centre.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let mut v = Vec::with_capacity(grid.n_cells());
        for j in 0..grid.n2() {
            for i in 0..grid.n1() {
                v.push(f(grid.center(i, j)));
            }
        }
        CellField(v)
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        CellField(values)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// `sum_K f_K h^2`.
    pub fn integral(&self, grid: &Grid) -> f64 {
        self.0.iter().sum::<f64>() * grid.cell_area()
    }

    pub fn l1_norm(&self, grid: &Grid) -> f64 {
        self.0.iter().map(|v| v.abs()).sum::<f64>() * grid.cell_area()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl Deref for CellField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for CellField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorField {
    pub c: [CellField; 2],
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        VectorField {
            c: [CellField::zeros(grid), CellField::zeros(grid)],
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        VectorField {
            c: [
                CellField::from_fn(grid, |x| f(x)[0]),
                CellField::from_fn(grid, |x| f(x)[1]),
            ],
        }
    }

    #[inline]
    pub fn at(&self, k: usize) -> [f64; 2] {
        [self.c[0][k], self.c[1][k]]
    }
}

/// Cell-wise 2x2 tensor, `c[a][b]` is the `(a, b)` entry.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub c: [[CellField; 2]; 2],
}

impl TensorField {
    pub fn zeros(grid: &Grid) -> Self {
        let z = || CellField::zeros(grid);
        TensorField {
            c: [[z(), z()], [z(), z()]],
        }
    }

    #[inline]
    pub fn at(&self, k: usize) -> [[f64; 2]; 2] {
        [
            [self.c[0][0][k], self.c[0][1][k]],
            [self.c[1][0][k], self.c[1][1][k]],
        ]
    }
}

/// Scalar per face, one array per orientation family (see [`Grid::face_index`]).
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
}

impl FaceField {
    pub fn zeros(grid: &Grid) -> Self {
        FaceField {
            x1: vec![0.0; grid.n_faces(Axis::X1)],
            x2: vec![0.0; grid.n_faces(Axis::X2)],
        }
    }

    pub fn get(&self, grid: &Grid, face: &FaceRef) -> f64 {
        match face.axis {
            Axis::X1 => self.x1[grid.face_index(face)],
            Axis::X2 => self.x2[grid.face_index(face)],
        }
    }

    pub fn set(&mut self, grid: &Grid, face: &FaceRef, v: f64) {
        match face.axis {
            Axis::X1 => self.x1[grid.face_index(face)] = v,
            Axis::X2 => self.x2[grid.face_index(face)] = v,
        }
    }
}

/// Wall temperature traces, one value per column, evaluated at wall face centres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryClosure {
    pub theta_bottom: Vec<f64>,
    pub theta_top: Vec<f64>,
}

impl BoundaryClosure {
    pub fn uniform(grid: &Grid, bottom: f64, top: f64) -> Self {
        BoundaryClosure {
            theta_bottom: vec![bottom; grid.n1()],
            theta_top: vec![top; grid.n1()],
        }
    }

    #[inline]
    pub fn wall_temperature(&self, kind: FaceKind, i: usize) -> f64 {
        match kind {
            FaceKind::WallBottom => self.theta_bottom[i],
            FaceKind::WallTop => self.theta_top[i],
            FaceKind::Interior => panic!("interior faces carry no wall temperature"),
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.theta_bottom.len() != grid.n1() || self.theta_top.len() != grid.n1() {
            return Err(Error::config("wall temperature traces must have one value per column"));
        }
        if self.theta_bottom.iter().chain(&self.theta_top).any(|t| !(*t > 0.0)) {
            return Err(Error::config("wall temperatures must be positive"));
        }
        Ok(())
    }
}

/// Ghost-value rule on wall faces.
#[derive(Debug, Clone, Copy)]
pub enum Bc<'a> {
    /// ghost = in: zero jump (density, stress tensors)
    Reflect,
    /// ghost = -in: `<v> = 0` (no-slip velocity)
    NoSlip,
    /// ghost = 2 theta_B - in: `<theta> = theta_B`
    Temperature(&'a BoundaryClosure),
}

impl Bc<'_> {
    #[inline]
    pub fn ghost(&self, kind: FaceKind, i: usize, inner: f64) -> f64 {
        match self {
            Bc::Reflect => inner,
            Bc::NoSlip => -inner,
            Bc::Temperature(c) => 2.0 * c.wall_temperature(kind, i) - inner,
        }
    }
}

/// Value of `f` across `side` of `cell`, ghost on walls.
#[inline]
fn across(grid: &Grid, f: &[f64], cell: usize, side: Side, bc: Bc) -> f64 {
    match grid.neighbor(cell, side) {
        CellOrGhost::Cell(n) => f[n],
        CellOrGhost::Ghost(kind) => bc.ghost(kind, grid.ij(cell).0, f[cell]),
    }
}

/// `(in, out)` values on a face according to the module conventions.
fn in_out(grid: &Grid, f: &[f64], face: &FaceRef, bc: Bc) -> (f64, f64) {
    match grid.face_cells(face) {
        (CellOrGhost::Cell(a), CellOrGhost::Cell(b)) => (f[a], f[b]),
        (CellOrGhost::Ghost(kind), CellOrGhost::Cell(b)) => (f[b], bc.ghost(kind, face.i, f[b])),
        (CellOrGhost::Cell(a), CellOrGhost::Ghost(kind)) => (f[a], bc.ghost(kind, face.i, f[a])),
        _ => unreachable!("a face has at least one cell"),
    }
}

/// `[[f]] = f_out - f_in`.
pub fn jump(grid: &Grid, f: &CellField, face: &FaceRef, bc: Bc) -> f64 {
    let (a, b) = in_out(grid, f, face, bc);
    b - a
}

/// `<f> = (f_out + f_in) / 2`.
pub fn average(grid: &Grid, f: &CellField, face: &FaceRef, bc: Bc) -> f64 {
    let (a, b) = in_out(grid, f, face, bc);
    0.5 * (a + b)
}

/// Face gradient `n [[f]] / h`, stored as its component along `+e_axis`.
pub fn grad_face(grid: &Grid, f: &CellField, bc: Bc) -> FaceField {
    let mut out = FaceField::zeros(grid);
    let h = grid.h();
    for face in grid.faces() {
        let (neg, pos) = match grid.face_cells(&face) {
            (CellOrGhost::Cell(a), CellOrGhost::Cell(b)) => (f[a], f[b]),
            (CellOrGhost::Ghost(kind), CellOrGhost::Cell(b)) => (bc.ghost(kind, face.i, f[b]), f[b]),
            (CellOrGhost::Cell(a), CellOrGhost::Ghost(kind)) => (f[a], bc.ghost(kind, face.i, f[a])),
            _ => unreachable!(),
        };
        out.set(grid, &face, (pos - neg) / h);
    }
    out
}

/// Cell gradient `(1/h) sum_sigma n <f>`.
pub fn grad_cell(grid: &Grid, f: &CellField, bc: Bc) -> VectorField {
    let mut out = VectorField::zeros(grid);
    let h = grid.h();
    for k in 0..grid.n_cells() {
        let mut g = [0.0; 2];
        for side in Side::ALL {
            let avg = 0.5 * (f[k] + across(grid, f, k, side, bc));
            let n = side.normal();
            g[0] += n[0] * avg;
            g[1] += n[1] * avg;
        }
        out.c[0][k] = g[0] / h;
        out.c[1][k] = g[1] / h;
    }
    out
}

/// Cell divergence `(1/h) sum_sigma n . <v>`, the same rule applied to both components.
pub fn div_cell(grid: &Grid, v: &VectorField, bc: Bc) -> CellField {
    let mut out = CellField::zeros(grid);
    let h = grid.h();
    for k in 0..grid.n_cells() {
        let mut d = 0.0;
        for side in Side::ALL {
            let a = side.axis().index();
            let f = &v.c[a];
            d += side.sign() * 0.5 * (f[k] + across(grid, f, k, side, bc));
        }
        out[k] = d / h;
    }
    out
}

/// Divergence of a face field, `(1/h) sum_sigma n . w`.
pub fn div_faces(grid: &Grid, w: &FaceField) -> CellField {
    let mut out = CellField::zeros(grid);
    let h = grid.h();
    for k in 0..grid.n_cells() {
        let mut d = 0.0;
        for side in Side::ALL {
            d += side.sign() * w.get(grid, &grid.face_of(k, side));
        }
        out[k] = d / h;
    }
    out
}

/// `(1/h^2) sum_sigma [[f]]`.
pub fn laplacian(grid: &Grid, f: &CellField, bc: Bc) -> CellField {
    let mut out = CellField::zeros(grid);
    let h2 = grid.h() * grid.h();
    for k in 0..grid.n_cells() {
        let mut s = 0.0;
        for side in Side::ALL {
            s += across(grid, f, k, side, bc) - f[k];
        }
        out[k] = s / h2;
    }
    out
}

/// `grad_h v` with `c[a][b] = d v_a / d x_b`.
pub fn grad_vector(grid: &Grid, v: &VectorField, bc: Bc) -> TensorField {
    let g0 = grad_cell(grid, &v.c[0], bc);
    let g1 = grad_cell(grid, &v.c[1], bc);
    let [g00, g01] = g0.c;
    let [g10, g11] = g1.c;
    TensorField {
        c: [[g00, g01], [g10, g11]],
    }
}

/// `D_h v = (grad_h v + grad_h v^T) / 2`.
pub fn sym_grad(grid: &Grid, v: &VectorField, bc: Bc) -> TensorField {
    let g = grad_vector(grid, v, bc);
    let mut d = TensorField::zeros(grid);
    for k in 0..grid.n_cells() {
        for a in 0..2 {
            for b in 0..2 {
                d.c[a][b][k] = 0.5 * (g.c[a][b][k] + g.c[b][a][k]);
            }
        }
    }
    d
}

/// Row-wise divergence of a cell tensor, `(div_h T)_a = (1/h) sum_sigma <T_ab> n_b`.
pub fn div_tensor(grid: &Grid, t: &TensorField, bc: Bc) -> VectorField {
    let mut out = VectorField::zeros(grid);
    let h = grid.h();
    for k in 0..grid.n_cells() {
        for a in 0..2 {
            let mut d = 0.0;
            for side in Side::ALL {
                let b = side.axis().index();
                let f = &t.c[a][b];
                d += side.sign() * 0.5 * (f[k] + across(grid, f, k, side, bc));
            }
            out.c[a][k] = d / h;
        }
    }
    out
}

pub fn check_alpha(alpha: f64) -> Result<f64> {
    if alpha > -1.0 && alpha < 1.0 {
        Ok(alpha)
    } else {
        Err(Error::config(format!("alpha must lie in (-1, 1), got {alpha}")))
    }
}

/// `r_up <u>.n` with `r_up = r_in` when `<u>.n >= 0`.
#[inline]
pub fn upwind(r_in: f64, r_out: f64, normal_velocity: f64) -> f64 {
    if normal_velocity >= 0.0 {
        r_in * normal_velocity
    } else {
        r_out * normal_velocity
    }
}

/// `Up[r, u] - h^alpha [[r]]` on an interior face.
pub fn diffusive_upwind(r_in: f64, r_out: f64, normal_velocity: f64, h: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(upwind(r_in, r_out, normal_velocity) - h.powf(alpha) * (r_out - r_in))
}

/// Outward upwind flux of `r` across `side` of `cell`; zero on walls where `<u> = 0`.
pub fn upwind_flux(grid: &Grid, r: &CellField, u: &VectorField, cell: usize, side: Side) -> f64 {
    match grid.neighbor(cell, side) {
        CellOrGhost::Ghost(_) => 0.0,
        CellOrGhost::Cell(n) => {
            let a = side.axis().index();
            let un = side.sign() * 0.5 * (u.c[a][cell] + u.c[a][n]);
            upwind(r[cell], r[n], un)
        }
    }
}

/// Outward diffusive upwind flux across `side` of `cell`; exactly zero on wall faces.
pub fn diffusive_upwind_flux(
    grid: &Grid,
    r: &CellField,
    u: &VectorField,
    cell: usize,
    side: Side,
    alpha: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(match grid.neighbor(cell, side) {
        CellOrGhost::Ghost(_) => 0.0,
        CellOrGhost::Cell(n) => {
            upwind_flux(grid, r, u, cell, side) - grid.h().powf(alpha) * (r[n] - r[cell])
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid {
        Grid::new(2.0, 1.0, 16, 8).unwrap()
    }

    fn random_field(g: &Grid, rng: &mut ChaCha8Rng) -> CellField {
        CellField::from_vec((0..g.n_cells()).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    #[test]
    fn constant_field_jump_and_average() {
        let g = grid();
        let f = CellField::constant(&g, 3.5);
        let face = g.face(Axis::X1, 3, 2);
        assert_eq!(jump(&g, &f, &face, Bc::Reflect), 0.0);
        assert_eq!(average(&g, &f, &face, Bc::Reflect), 3.5);
        assert!(grad_face(&g, &f, Bc::Reflect).x1.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn wall_ghost_rules() {
        let g = grid();
        let closure = BoundaryClosure::uniform(&g, 1.0, 1.0);
        let theta = CellField::constant(&g, 3.0);
        let wall = g.face(Axis::X2, 5, 0);
        assert_eq!(wall.kind, FaceKind::WallBottom);
        assert_eq!(jump(&g, &theta, &wall, Bc::Temperature(&closure)), -4.0);
        assert_eq!(average(&g, &theta, &wall, Bc::Temperature(&closure)), 1.0);
        let u1 = CellField::constant(&g, 2.0);
        let top = g.face(Axis::X2, 5, g.n2());
        assert_eq!(average(&g, &u1, &top, Bc::NoSlip), 0.0);
        assert_eq!(jump(&g, &u1, &top, Bc::NoSlip), -4.0);
    }

    #[test]
    fn face_gradient_of_coordinates() {
        let g = grid();
        let x1 = CellField::from_fn(&g, |x| x[0]);
        let gf = grad_face(&g, &x1, Bc::Reflect);
        // interior x1 faces away from the periodic seam
        for j in 0..g.n2() {
            for i in 1..g.n1() {
                let f = g.face(Axis::X1, i, j);
                assert_relative_eq!(gf.get(&g, &f), 1.0, max_relative = 1e-12);
            }
        }
        // x2 with matching wall traces: exact on walls too
        let closure = BoundaryClosure::uniform(&g, -1.0 + 3.0, 1.0 + 3.0);
        let x2 = CellField::from_fn(&g, |x| x[1] + 3.0);
        let gf = grad_face(&g, &x2, Bc::Temperature(&closure));
        for v in &gf.x2 {
            assert_relative_eq!(*v, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn laplacian_of_square() {
        let g = grid();
        let f = CellField::from_fn(&g, |x| x[0] * x[0]);
        let lap = laplacian(&g, &f, Bc::Reflect);
        for j in 1..g.n2() - 1 {
            for i in 1..g.n1() - 1 {
                assert_relative_eq!(lap[g.idx(i, j)], 2.0, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn affine_exactness() {
        let g = grid();
        let f = CellField::from_fn(&g, |x| 0.3 * x[0] - 1.7 * x[1] + 0.2);
        let gc = grad_cell(&g, &f, Bc::Reflect);
        for j in 1..g.n2() - 1 {
            for i in 1..g.n1() - 1 {
                let k = g.idx(i, j);
                assert_relative_eq!(gc.c[0][k], 0.3, max_relative = 1e-12);
                assert_relative_eq!(gc.c[1][k], -1.7, max_relative = 1e-12);
            }
        }
        let v = VectorField::from_fn(&g, |x| [0.5 * x[0], 2.0 * x[1]]);
        let d = div_cell(&g, &v, Bc::Reflect);
        for j in 1..g.n2() - 1 {
            for i in 1..g.n1() - 1 {
                assert_relative_eq!(d[g.idx(i, j)], 2.5, max_relative = 1e-12);
            }
        }
        let c = VectorField::from_fn(&g, |_| [1.3, -0.4]);
        let d = div_cell(&g, &c, Bc::Reflect);
        assert!(d.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn discrete_duality() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let f = random_field(&g, &mut rng);
            let v = VectorField {
                c: [random_field(&g, &mut rng), random_field(&g, &mut rng)],
            };
            let div = div_cell(&g, &v, Bc::NoSlip);
            let grad = grad_cell(&g, &f, Bc::Reflect);
            let lhs: f64 = (0..g.n_cells()).map(|k| div[k] * f[k]).sum::<f64>() * g.cell_area();
            let rhs: f64 = -(0..g.n_cells())
                .map(|k| v.c[0][k] * grad.c[0][k] + v.c[1][k] * grad.c[1][k])
                .sum::<f64>()
                * g.cell_area();
            assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn telescoping_divergence() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut w = FaceField::zeros(&g);
        for v in w.x1.iter_mut().chain(w.x2.iter_mut()) {
            *v = rng.random_range(-1.0..1.0);
        }
        let total = div_faces(&g, &w).integral(&g);
        let mut wall = 0.0;
        for i in 0..g.n1() {
            wall -= w.x2[g.face_index(&g.face(Axis::X2, i, 0))] * g.h();
            wall += w.x2[g.face_index(&g.face(Axis::X2, i, g.n2()))] * g.h();
        }
        assert!((total - wall).abs() < 1e-12);
        for i in 0..g.n1() {
            w.x2[i] = 0.0;
            w.x2[g.n2() * g.n1() + i] = 0.0;
        }
        assert!(div_faces(&g, &w).integral(&g).abs() < 1e-12);
    }

    #[test]
    fn laplacian_is_div_of_face_gradient() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let closure = BoundaryClosure::uniform(&g, 2.0, 0.5);
        let f = random_field(&g, &mut rng);
        let bc = Bc::Temperature(&closure);
        let a = laplacian(&g, &f, bc);
        let b = div_faces(&g, &grad_face(&g, &f, bc));
        let scale = g.h() * g.h();
        for k in 0..g.n_cells() {
            assert!((a[k] - b[k]).abs() * scale < 1e-14);
        }
    }

    #[test]
    fn upwind_values() {
        assert_eq!(upwind(2.0, 1.0, 0.0), 0.0);
        assert_eq!(upwind(2.0, 1.0, 0.5), 1.0);
        assert_eq!(upwind(2.0, 1.0, -0.5), -0.5);
        let f = diffusive_upwind(2.0, 1.0, 0.5, 0.1, 0.5).unwrap();
        assert_relative_eq!(f, 1.0 + 0.1f64.sqrt(), max_relative = 1e-14);
        assert!((f - 1.3162).abs() < 1e-4);
        assert_eq!(diffusive_upwind(1.0, 1.0, 0.7, 0.1, 0.5).unwrap(), 0.7);
        assert!(matches!(diffusive_upwind(1.0, 1.0, 0.7, 0.1, 1.5), Err(Error::Config(_))));
    }

    #[test]
    fn wall_fluxes_vanish() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = random_field(&g, &mut rng);
        let u = VectorField {
            c: [random_field(&g, &mut rng), random_field(&g, &mut rng)],
        };
        let k = g.idx(4, 0);
        assert_eq!(diffusive_upwind_flux(&g, &r, &u, k, Side::South, 0.6).unwrap(), 0.0);
        let k = g.idx(4, g.n2() - 1);
        assert_eq!(diffusive_upwind_flux(&g, &r, &u, k, Side::North, 0.6).unwrap(), 0.0);
    }

    #[test]
    fn upwind_consistency_for_constant_r() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r = CellField::constant(&g, 1.7);
        let u = VectorField {
            c: [random_field(&g, &mut rng), random_field(&g, &mut rng)],
        };
        let div = div_cell(&g, &u, Bc::NoSlip);
        for k in 0..g.n_cells() {
            let s: f64 = Side::ALL.iter().map(|s| upwind_flux(&g, &r, &u, k, *s) * g.h()).sum();
            assert!((s - 1.7 * div[k] * g.cell_area()).abs() < 1e-13);
        }
    }
}
