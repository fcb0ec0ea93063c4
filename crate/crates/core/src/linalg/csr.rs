/// Square sparse matrix in compressed sparse row form with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

/// Receives Jacobian entries. Assembly code must call `add` in a value-independent order so
/// that a recorded pattern can be replayed with [`MappedSink`].
pub trait Sink {
    fn add(&mut self, row: usize, col: usize, v: f64);
}

/// Records the `(row, col)` sequence of an assembly pass.
#[derive(Debug, Default)]
pub struct PatternSink {
    pub entries: Vec<(u32, u32)>,
}

impl Sink for PatternSink {
    #[inline]
    fn add(&mut self, row: usize, col: usize, _v: f64) {
        self.entries.push((row as u32, col as u32));
    }
}

/// Replays an assembly pass into the value array of a matrix built from its pattern.
pub struct MappedSink<'a> {
    vals: &'a mut [f64],
    map: &'a [u32],
    pos: usize,
}

impl<'a> MappedSink<'a> {
    pub fn new(matrix: &'a mut CsrMatrix, map: &'a [u32]) -> Self {
        matrix.vals.iter_mut().for_each(|v| *v = 0.0);
        MappedSink {
            vals: &mut matrix.vals,
            map,
            pos: 0,
        }
    }

    pub fn finish(self) {
        assert_eq!(self.pos, self.map.len(), "assembly pass did not replay the recorded pattern");
    }
}

impl Sink for MappedSink<'_> {
    #[inline]
    fn add(&mut self, _row: usize, _col: usize, v: f64) {
        self.vals[self.map[self.pos] as usize] += v;
        self.pos += 1;
    }
}

/// Collects explicit triplets; duplicates are summed on conversion.
#[derive(Debug, Default)]
pub struct TripletSink {
    pub entries: Vec<(usize, usize, f64)>,
}

impl Sink for TripletSink {
    fn add(&mut self, row: usize, col: usize, v: f64) {
        self.entries.push((row, col, v));
    }
}

impl CsrMatrix {
    /// Zero matrix with the union of `entries` as its pattern, plus the map from each entry
    /// (in the given order) to its storage slot.
    pub fn from_pattern(n: usize, entries: &[(u32, u32)]) -> (Self, Vec<u32>) {
        let mut sorted: Vec<(u32, u32)> = entries.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut row_ptr = vec![0usize; n + 1];
        for &(r, _) in &sorted {
            row_ptr[r as usize + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let cols: Vec<u32> = sorted.iter().map(|&(_, c)| c).collect();
        let m = CsrMatrix {
            n,
            row_ptr,
            vals: vec![0.0; cols.len()],
            cols,
        };
        let map = entries
            .iter()
            .map(|&(r, c)| m.position(r as usize, c as usize).expect("entry in pattern") as u32)
            .collect();
        (m, map)
    }

    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let pattern: Vec<(u32, u32)> = triplets.iter().map(|&(r, c, _)| (r as u32, c as u32)).collect();
        let (mut m, map) = CsrMatrix::from_pattern(n, &pattern);
        for (t, slot) in triplets.iter().zip(&map) {
            m.vals[*slot as usize] += t.2;
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn position(&self, row: usize, col: usize) -> Option<usize> {
        let r = self.row_ptr[row]..self.row_ptr[row + 1];
        self.cols[r.clone()]
            .binary_search(&(col as u32))
            .ok()
            .map(|p| r.start + p)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.position(row, col).map_or(0.0, |p| self.vals[p])
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn cols(&self) -> &[u32] {
        &self.cols
    }

    pub fn vals(&self) -> &[f64] {
        &self.vals
    }

    pub fn vals_mut(&mut self) -> &mut [f64] {
        &mut self.vals
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[p] * x[self.cols[p] as usize];
            }
            y[i] = s;
        }
    }

    /// Lower and upper bandwidth of the pattern.
    pub fn bandwidths(&self) -> (usize, usize) {
        let (mut kl, mut ku) = (0, 0);
        for i in 0..self.n {
            for &c in &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]] {
                let c = c as usize;
                if c < i {
                    kl = kl.max(i - c);
                } else {
                    ku = ku.max(c - i);
                }
            }
        }
        (kl, ku)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_replay() {
        let entries = [(0u32, 1u32), (1, 1), (0, 1), (1, 0), (0, 0)];
        let (mut m, map) = CsrMatrix::from_pattern(2, &entries);
        assert_eq!(m.nnz(), 4);
        let mut sink = MappedSink::new(&mut m, &map);
        for (k, &(r, c)) in entries.iter().enumerate() {
            sink.add(r as usize, c as usize, k as f64 + 1.0);
        }
        sink.finish();
        assert_eq!(m.get(0, 1), 1.0 + 3.0);
        assert_eq!(m.get(0, 0), 5.0);
        assert_eq!(m.get(1, 0), 4.0);
        let mut y = [0.0; 2];
        m.mul_vec(&[1.0, 2.0], &mut y);
        assert_eq!(y, [5.0 + 8.0, 4.0 + 4.0]);
        assert_eq!(m.bandwidths(), (1, 1));
    }
}
