use super::csr::CsrMatrix;
use super::ilu::Ilu0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Restarted GMRES with right preconditioning. Starts from `x = 0`; stops when
/// `|b - A x| <= rtol |b|` or after `max_iter` inner iterations in total.
pub fn gmres(
    a: &CsrMatrix,
    precond: &Ilu0,
    b: &[f64],
    x: &mut [f64],
    restart: usize,
    rtol: f64,
    max_iter: usize,
) -> GmresOutcome {
    let n = a.n();
    x.iter_mut().for_each(|v| *v = 0.0);
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return GmresOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let m = restart.max(1);
    let mut v: Vec<Vec<f64>> = (0..=m).map(|_| vec![0.0; n]).collect();
    let mut hess = vec![vec![0.0; m]; m + 1];
    let (mut cs, mut sn, mut g) = (vec![0.0; m], vec![0.0; m], vec![0.0; m + 1]);
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut r = b.to_vec();
    let mut total = 0;

    loop {
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= rtol || total >= max_iter {
            return GmresOutcome {
                iterations: total,
                relative_residual: rel,
                converged: rel <= rtol,
            };
        }
        for (vi, ri) in v[0].iter_mut().zip(&r) {
            *vi = ri / beta;
        }
        g.iter_mut().for_each(|x| *x = 0.0);
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            z.copy_from_slice(&v[k]);
            precond.solve_in_place(&mut z);
            a.mul_vec(&z, &mut w);
            for i in 0..=k {
                let hik = dot(&w, &v[i]);
                hess[i][k] = hik;
                for (wj, vj) in w.iter_mut().zip(&v[i]) {
                    *wj -= hik * vj;
                }
            }
            let hn = norm(&w);
            hess[k + 1][k] = hn;
            if hn > 0.0 {
                for (vj, wj) in v[k + 1].iter_mut().zip(&w) {
                    *vj = wj / hn;
                }
            }
            for i in 0..k {
                let t = cs[i] * hess[i][k] + sn[i] * hess[i + 1][k];
                hess[i + 1][k] = -sn[i] * hess[i][k] + cs[i] * hess[i + 1][k];
                hess[i][k] = t;
            }
            let d = hess[k][k].hypot(hess[k + 1][k]);
            cs[k] = if d == 0.0 { 1.0 } else { hess[k][k] / d };
            sn[k] = if d == 0.0 { 0.0 } else { hess[k + 1][k] / d };
            hess[k][k] = d;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            let inner = g[k + 1].abs() / bnorm;
            if inner <= rtol || total >= max_iter || hn == 0.0 {
                break;
            }
        }
        // back substitution for the least-squares coefficients
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= hess[i][j] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        w.iter_mut().for_each(|x| *x = 0.0);
        for (j, yj) in y.iter().enumerate() {
            for (wi, vi) in w.iter_mut().zip(&v[j]) {
                *wi += yj * vi;
            }
        }
        precond.solve_in_place(&mut w);
        for (xi, wi) in x.iter_mut().zip(&w) {
            *xi += wi;
        }
        a.mul_vec(x, &mut w);
        for i in 0..n {
            r[i] = b[i] - w[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_nonsymmetric_convection_diffusion() {
        let n = 60;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.5));
            t.push((i, (i + n - 1) % n, -1.4));
            t.push((i, (i + 1) % n, -0.6));
            t.push((i, (i + 7) % n, 0.2));
        }
        let a = CsrMatrix::from_triplets(n, &t);
        let ilu = Ilu0::new(&a).unwrap();
        let xs: Vec<f64> = (0..n).map(|i| (0.3 * i as f64).cos()).collect();
        let mut b = vec![0.0; n];
        a.mul_vec(&xs, &mut b);
        let mut x = vec![0.0; n];
        let out = gmres(&a, &ilu, &b, &mut x, 10, 1e-12, 500);
        assert!(out.converged, "{out:?}");
        for i in 0..n {
            assert!((x[i] - xs[i]).abs() < 1e-9);
        }
    }
}
