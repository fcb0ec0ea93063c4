use super::csr::CsrMatrix;

/// Incomplete LU factorisation with zero fill, stored in the pattern of the source matrix.
/// `L` has an implicit unit diagonal.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self, String> {
        let n = a.n();
        let mut lu = a.clone();
        let row_ptr = lu.row_ptr().to_vec();
        let cols = lu.cols().to_vec();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for p in row_ptr[i]..row_ptr[i + 1] {
                if cols[p] as usize == i {
                    diag[i] = p;
                }
            }
            if diag[i] == usize::MAX {
                return Err(format!("row {i} has no diagonal entry"));
            }
        }
        let mut slot = vec![usize::MAX; n];
        let vals = lu.vals_mut();
        for i in 0..n {
            let row = row_ptr[i]..row_ptr[i + 1];
            for p in row.clone() {
                slot[cols[p] as usize] = p;
            }
            for p in row_ptr[i]..diag[i] {
                let k = cols[p] as usize;
                let pivot = vals[diag[k]];
                if pivot == 0.0 || !pivot.is_finite() {
                    return Err(format!("zero pivot in row {k}"));
                }
                let lik = vals[p] / pivot;
                vals[p] = lik;
                for q in diag[k] + 1..row_ptr[k + 1] {
                    let s = slot[cols[q] as usize];
                    if s != usize::MAX {
                        vals[s] -= lik * vals[q];
                    }
                }
            }
            for p in row {
                slot[cols[p] as usize] = usize::MAX;
            }
            if vals[diag[i]] == 0.0 {
                return Err(format!("zero pivot in row {i}"));
            }
        }
        Ok(Ilu0 { lu, diag })
    }

    /// Overwrites `x` with `(LU)^{-1} x`.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.lu.n();
        let rp = self.lu.row_ptr();
        let cols = self.lu.cols();
        let vals = self.lu.vals();
        for i in 0..n {
            let mut s = x[i];
            for p in rp[i]..self.diag[i] {
                s -= vals[p] * x[cols[p] as usize];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for p in self.diag[i] + 1..rp[i + 1] {
                s -= vals[p] * x[cols[p] as usize];
            }
            x[i] = s / vals[self.diag[i]];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_tridiagonal() {
        // ILU(0) of a tridiagonal matrix has no dropped fill, so it is an exact LU.
        let n = 20;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0 + i as f64 * 0.1));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.5));
            }
        }
        let a = CsrMatrix::from_triplets(n, &t);
        let ilu = Ilu0::new(&a).unwrap();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut b = vec![0.0; n];
        a.mul_vec(&x, &mut b);
        ilu.solve_in_place(&mut b);
        for i in 0..n {
            assert!((b[i] - x[i]).abs() < 1e-13);
        }
    }
}
