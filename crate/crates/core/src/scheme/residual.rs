use crate::error::Result;
use crate::linalg::{CsrMatrix, NoSink, Sink, TripletSink};
use crate::mesh::{CellOrGhost, FaceKind, Grid, Side};
use crate::scheme::{SchemeParams, WallTreatment, POSITIVITY_FLOOR, VARS};

/// Residual and Jacobian of one implicit step on a fixed grid.
///
/// Rows are `4 k + e` with `e` = mass, momentum 1, momentum 2, internal energy; columns
/// `4 k + v` with `v` = `rho, u1, u2, theta`. Every assembly pass emits the same sequence of
/// `(row, col)` pairs whatever the state, so a recorded pattern can be replayed.
#[derive(Debug, Clone)]
pub struct Discretization {
    grid: Grid,
    params: SchemeParams,
    h_alpha: f64,
    nb: Vec<[CellOrGhost; 4]>,
    /// `grad_h` stencils: `gst[k][b]` gives the two `(cell, weight)` pairs of `d/dx_b`.
    gst: Vec<[[(u32, f64); 2]; 2]>,
    /// `div_h S(u)` as a matrix over velocity unknowns `2 k + a`.
    viscous: CsrMatrix,
}

impl Discretization {
    pub fn new(grid: Grid, params: SchemeParams) -> Result<Self> {
        params.validate(&grid)?;
        let n = grid.n_cells();
        let h = grid.h();
        let nb: Vec<[CellOrGhost; 4]> = (0..n)
            .map(|k| Side::ALL.map(|s| grid.neighbor(k, s)))
            .collect();
        let w = 0.5 / h;
        let gst = (0..n)
            .map(|k| {
                let cell = |c: CellOrGhost| match c {
                    CellOrGhost::Cell(m) => m as u32,
                    CellOrGhost::Ghost(_) => unreachable!(),
                };
                let [west, east, south, north] = nb[k];
                let d1 = [(cell(east), w), (cell(west), -w)];
                let d2 = match (south, north) {
                    (CellOrGhost::Cell(s), CellOrGhost::Cell(m)) => [(m as u32, w), (s as u32, -w)],
                    (CellOrGhost::Ghost(_), CellOrGhost::Cell(m)) => [(m as u32, w), (k as u32, w)],
                    (CellOrGhost::Cell(s), CellOrGhost::Ghost(_)) => [(k as u32, -w), (s as u32, -w)],
                    _ => unreachable!("grids have at least two rows"),
                };
                [d1, d2]
            })
            .collect();
        let mut d = Discretization {
            h_alpha: h.powf(params.alpha),
            grid,
            params,
            nb,
            gst,
            viscous: CsrMatrix::from_triplets(0, &[]),
        };
        d.viscous = d.build_viscous();
        Ok(d)
    }

    /// Linear forms of `S_ab` per cell, then `(1/h) sum_sigma n_b <S_ab>` with the wall ghost
    /// equal to the interior tensor.
    fn build_viscous(&self) -> CsrMatrix {
        let n = self.grid.n_cells();
        let (mu, lambda) = (self.params.mu, self.params.lambda);
        let stress = |k: usize, a: usize, b: usize| -> Vec<(usize, f64)> {
            // entries (2 L + c, coefficient)
            let mut f = Vec::with_capacity(8);
            for &(l, w) in &self.gst[k][b] {
                f.push((2 * l as usize + a, mu * w));
            }
            for &(l, w) in &self.gst[k][a] {
                f.push((2 * l as usize + b, mu * w));
            }
            if a == b {
                for c in 0..2 {
                    for &(l, w) in &self.gst[k][c] {
                        f.push((2 * l as usize + c, lambda * w));
                    }
                }
            }
            f
        };
        let inv_h = 1.0 / self.grid.h();
        let mut sink = TripletSink::default();
        for k in 0..n {
            for (s, side) in Side::ALL.iter().enumerate() {
                let b = side.axis().index();
                let other = match self.nb[k][s] {
                    CellOrGhost::Cell(m) => m,
                    CellOrGhost::Ghost(_) => k,
                };
                for a in 0..2 {
                    let row = 2 * k + a;
                    for cell in [k, other] {
                        for (col, w) in stress(cell, a, b) {
                            sink.add(row, col, side.sign() * 0.5 * inv_h * w);
                        }
                    }
                }
            }
        }
        CsrMatrix::from_triplets(2 * n, &sink.entries)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn n_unknowns(&self) -> usize {
        VARS * self.grid.n_cells()
    }

    /// `true` when every density and temperature exceeds the positivity floor.
    pub fn admissible(x: &[f64]) -> bool {
        x.chunks_exact(VARS)
            .all(|c| c[0] > POSITIVITY_FLOOR && c[3] > POSITIVITY_FLOOR && c.iter().all(|v| v.is_finite()))
    }

    /// Residual of the implicit step `prev -> cand` with step `dt`. Returns `false` (leaving
    /// `res` unspecified) when `cand` violates positivity.
    pub fn residual(&self, prev: &[f64], cand: &[f64], dt: f64, res: &mut [f64]) -> bool {
        if !Self::admissible(cand) {
            return false;
        }
        self.assemble(prev, cand, dt, res, &mut NoSink);
        true
    }

    /// Residual and analytic Jacobian (upwind branches frozen at `cand`).
    pub fn assemble<S: Sink>(&self, prev: &[f64], cand: &[f64], dt: f64, res: &mut [f64], sink: &mut S) {
        let grid = &self.grid;
        let p = &self.params;
        let cv = p.law.c_v();
        let h = grid.h();
        let inv_h = 1.0 / h;
        let inv_h2 = inv_h * inv_h;
        let inv_dt = 1.0 / dt;
        let ha = self.h_alpha;
        let gvec = [0.0, p.g];
        let (mu, lambda, kappa) = (p.mu, p.lambda, p.kappa);
        let balanced = p.wall == WallTreatment::Balanced;

        for k in 0..grid.n_cells() {
            let r0 = VARS * k;
            let c = &cand[r0..r0 + VARS];
            let o = &prev[r0..r0 + VARS];
            let (rho, th) = (c[0], c[3]);
            let u = [c[1], c[2]];
            let pk = rho * th;

            // time derivatives and gravity
            res[r0] = (rho - o[0]) * inv_dt;
            sink.add(r0, r0, inv_dt);
            for a in 0..2 {
                res[r0 + 1 + a] = (rho * u[a] - o[0] * o[1 + a]) * inv_dt - rho * gvec[a];
                sink.add(r0 + 1 + a, r0, u[a] * inv_dt - gvec[a]);
                sink.add(r0 + 1 + a, r0 + 1 + a, rho * inv_dt);
            }
            res[r0 + 3] = cv * (rho * th - o[0] * o[3]) * inv_dt;
            sink.add(r0 + 3, r0, cv * th * inv_dt);
            sink.add(r0 + 3, r0 + 3, cv * rho * inv_dt);

            for (s, side) in Side::ALL.iter().enumerate() {
                let a = side.axis().index();
                let sg = side.sign();
                match self.nb[k][s] {
                    CellOrGhost::Cell(m) => {
                        let n0 = VARS * m;
                        let cn = &cand[n0..n0 + VARS];
                        let rho_n = cn[0];
                        let un = sg * 0.5 * (u[a] + cn[1 + a]);
                        let from_k = un >= 0.0;

                        // diffusive upwind fluxes of rho, rho u1, rho u2, rho theta
                        for v in 0..VARS {
                            let (qk, qn) = if v == 0 { (1.0, 1.0) } else { (c[v], cn[v]) };
                            let (rk, rn) = (rho * qk, rho_n * qn);
                            let rup = if from_k { rk } else { rn };
                            let scale = if v == 3 { cv * inv_h } else { inv_h };
                            res[r0 + v] += scale * (rup * un - ha * (rn - rk));
                            let d_rk = if from_k { un } else { 0.0 } + ha;
                            let d_rn = if from_k { 0.0 } else { un } - ha;
                            let d_u = rup * sg * 0.5;
                            let row = r0 + v;
                            sink.add(row, r0, scale * d_rk * qk);
                            sink.add(row, n0, scale * d_rn * qn);
                            if v > 0 {
                                sink.add(row, r0 + v, scale * d_rk * rho);
                                sink.add(row, n0 + v, scale * d_rn * rho_n);
                            }
                            sink.add(row, r0 + 1 + a, scale * d_u);
                            sink.add(row, n0 + 1 + a, scale * d_u);
                        }

                        // pressure part of div_h(-p I)
                        let row = r0 + 1 + a;
                        res[row] += sg * inv_h * 0.5 * (pk + rho_n * cn[3]);
                        sink.add(row, r0, sg * inv_h * 0.5 * th);
                        sink.add(row, r0 + 3, sg * inv_h * 0.5 * rho);
                        sink.add(row, n0, sg * inv_h * 0.5 * cn[3]);
                        sink.add(row, n0 + 3, sg * inv_h * 0.5 * rho_n);

                        // heat conduction
                        res[r0 + 3] -= kappa * inv_h2 * (cn[3] - th);
                        sink.add(r0 + 3, r0 + 3, kappa * inv_h2);
                        sink.add(r0 + 3, n0 + 3, -kappa * inv_h2);
                    }
                    CellOrGhost::Ghost(kind) => {
                        let (i, _) = grid.ij(k);
                        let tb = p.closure.wall_temperature(kind, i);
                        let row = r0 + 1 + a;
                        if balanced {
                            res[row] += sg * inv_h * rho * tb;
                            sink.add(row, r0, sg * inv_h * tb);
                            // the work of the wall pressure excess goes back to internal energy,
                            // otherwise kinetic energy is created at the walls
                            let w = sg * inv_h * (th - tb);
                            res[r0 + 3] += u[a] * rho * w;
                            sink.add(r0 + 3, r0, u[a] * w);
                            sink.add(r0 + 3, r0 + 1 + a, rho * w);
                            sink.add(r0 + 3, r0 + 3, u[a] * rho * sg * inv_h);
                            let f = 2.0 * ha * (th - tb);
                            res[r0 + 3] += cv * inv_h * rho * f;
                            sink.add(r0 + 3, r0, cv * inv_h * f);
                            sink.add(r0 + 3, r0 + 3, cv * inv_h * 2.0 * ha * rho);
                        } else {
                            res[row] += sg * inv_h * pk;
                            sink.add(row, r0, sg * inv_h * th);
                            sink.add(row, r0 + 3, sg * inv_h * rho);
                        }
                        res[r0 + 3] -= kappa * inv_h2 * 2.0 * (tb - th);
                        sink.add(r0 + 3, r0 + 3, 2.0 * kappa * inv_h2);
                        debug_assert!(kind != FaceKind::Interior);
                    }
                }
            }

            // viscous stress divergence
            for a in 0..2 {
                let row = r0 + 1 + a;
                let (cols, vals) = self.viscous.row(2 * k + a);
                let mut acc = 0.0;
                for (col, w) in cols.iter().zip(vals) {
                    let col = *col as usize;
                    let (l, b) = (col / 2, col % 2);
                    acc += w * cand[VARS * l + 1 + b];
                    sink.add(row, VARS * l + 1 + b, -w);
                }
                res[row] -= acc;
            }

            // (S - p I) : grad_h u
            let mut gm = [[0.0; 2]; 2];
            for b in 0..2 {
                for &(l, w) in &self.gst[k][b] {
                    let l = VARS * l as usize;
                    gm[0][b] += w * cand[l + 1];
                    gm[1][b] += w * cand[l + 2];
                }
            }
            let tr = gm[0][0] + gm[1][1];
            let mut phi = 0.0;
            let mut dphi = [[0.0; 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    let dab = 0.5 * (gm[a][b] + gm[b][a]);
                    let delta = if a == b { 1.0 } else { 0.0 };
                    let sab = 2.0 * mu * dab + lambda * tr * delta;
                    phi += (sab - pk * delta) * gm[a][b];
                    dphi[a][b] = 2.0 * sab - pk * delta;
                }
            }
            res[r0 + 3] -= phi;
            sink.add(r0 + 3, r0, th * tr);
            sink.add(r0 + 3, r0 + 3, rho * tr);
            for b in 0..2 {
                for &(l, w) in &self.gst[k][b] {
                    let l = VARS * l as usize;
                    sink.add(r0 + 3, l + 1, -dphi[0][b] * w);
                    sink.add(r0 + 3, l + 2, -dphi[1][b] * w);
                }
            }
        }
    }

    /// Net energy leaving through both walls, integrated along them, for a packed state:
    /// conduction `2 kappa (theta_in - theta_B)` per face plus, for the balanced treatment,
    /// the artificial flux `2 c_v h^alpha rho_in (theta_in - theta_B) h` and the pressure work
    /// `sign u2_in rho_in (theta_in - theta_B) h`.
    pub fn wall_energy_outflow(&self, x: &[f64]) -> f64 {
        let g = &self.grid;
        let h = g.h();
        let cv = self.params.law.c_v();
        let mut total = 0.0;
        for (j, kind, sg) in [(0, FaceKind::WallBottom, -1.0), (g.n2() - 1, FaceKind::WallTop, 1.0)] {
            for i in 0..g.n1() {
                let k = g.idx(i, j);
                let (rho, u2, th) = (x[VARS * k], x[VARS * k + 2], x[VARS * k + 3]);
                let d = th - self.params.closure.wall_temperature(kind, i);
                total += 2.0 * self.params.kappa * d;
                if self.params.wall == WallTreatment::Balanced {
                    total += 2.0 * cv * self.h_alpha * rho * d * h;
                    total += sg * u2 * rho * d * h;
                }
            }
        }
        total
    }

    /// `(S - p I) : grad_h u` per cell.
    pub fn dissipation_density(&self, x: &[f64]) -> Vec<f64> {
        let (mu, lambda) = (self.params.mu, self.params.lambda);
        (0..self.grid.n_cells())
            .map(|k| {
                let gm = self.velocity_gradient(x, k);
                let tr = gm[0][0] + gm[1][1];
                let pk = x[VARS * k] * x[VARS * k + 3];
                let mut phi = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        let delta = if a == b { 1.0 } else { 0.0 };
                        let sab = mu * (gm[a][b] + gm[b][a]) + lambda * tr * delta;
                        phi += (sab - pk * delta) * gm[a][b];
                    }
                }
                phi
            })
            .collect()
    }

    /// `grad_h u` at cell `k`, `[a][b] = d u_a / d x_b`.
    pub fn velocity_gradient(&self, x: &[f64], k: usize) -> [[f64; 2]; 2] {
        let mut gm = [[0.0; 2]; 2];
        for b in 0..2 {
            for &(l, w) in &self.gst[k][b] {
                let l = VARS * l as usize;
                gm[0][b] += w * x[l + 1];
                gm[1][b] += w * x[l + 2];
            }
        }
        gm
    }

    pub fn h_alpha(&self) -> f64 {
        self.h_alpha
    }
}
