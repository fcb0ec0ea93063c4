use super::csr::CsrMatrix;

/// Dense banded LU factorisation without pivoting.
///
/// Used as the direct solver on small grids. The interleaved unknown ordering puts the
/// `1/dt` mass-matrix blocks on the diagonal, which is what makes skipping the pivot search
/// acceptable here; a zero or non-finite pivot is reported as an error.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    a: Vec<f64>,
}

impl BandLu {
    pub fn new(m: &CsrMatrix) -> Result<Self, String> {
        let n = m.n();
        let (kl, ku) = m.bandwidths();
        let w = kl + ku + 1;
        let mut a = vec![0.0; n * w];
        for i in 0..n {
            let (cols, vals) = m.row(i);
            for (c, v) in cols.iter().zip(vals) {
                a[i * w + (*c as usize + kl - i)] = *v;
            }
        }
        for k in 0..n {
            let piv = a[k * w + kl];
            if piv == 0.0 || !piv.is_finite() {
                return Err(format!("zero pivot at row {k}"));
            }
            let jmax = (k + ku).min(n - 1);
            for i in k + 1..=(k + kl).min(n - 1) {
                let ik = i * w + (k + kl - i);
                let l = a[ik] / piv;
                if l == 0.0 {
                    continue;
                }
                a[ik] = l;
                for j in k + 1..=jmax {
                    a[i * w + (j + kl - i)] -= l * a[k * w + (j + kl - k)];
                }
            }
        }
        Ok(BandLu { n, kl, ku, a })
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let w = kl + ku + 1;
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(kl)..i {
                s -= self.a[i * w + (k + kl - i)] * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..=(i + ku).min(n - 1) {
                s -= self.a[i * w + (j + kl - i)] * x[j];
            }
            x[i] = s / self.a[i * w + kl];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_banded_system() {
        let n = 40;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 6.0));
            for d in 1..4 {
                if i >= d {
                    t.push((i, i - d, -0.7 / d as f64));
                }
                if i + d < n {
                    t.push((i, i + d, 0.9 / d as f64));
                }
            }
        }
        let m = CsrMatrix::from_triplets(n, &t);
        let lu = BandLu::new(&m).unwrap();
        let xs: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; n];
        m.mul_vec(&xs, &mut b);
        lu.solve_in_place(&mut b);
        for i in 0..n {
            assert!((b[i] - xs[i]).abs() < 1e-13);
        }
    }
}
