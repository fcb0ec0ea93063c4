use serde::{Deserialize, Serialize};

use crate::compensated::sum;
use crate::diagnostics::Quantity;
use crate::error::{Error, Result};
use crate::mesh::Grid;

/// Probe points of the measure figures.
pub const PROBES: [[f64; 2]; 6] = [
    [-1.4, -0.8],
    [-1.4, 0.0],
    [-1.4, 0.8],
    [-0.8, -0.8],
    [-0.8, 0.0],
    [-0.8, 0.8],
];

/// The 2x2 block of cells whose centres surround `p`; on a grid with a vertex at `p` these
/// are the four cells of `[x1 - h, x1 + h] x [x2 - h, x2 + h]`.
pub fn probe_cells(grid: &Grid, p: [f64; 2]) -> Result<[usize; 4]> {
    let h = grid.h();
    let (lw, lh) = (grid.half_width(), grid.half_height());
    if !(p[0].abs() <= lw && p[1].abs() <= lh) {
        return Err(Error::Range(format!("probe ({}, {}) lies outside the domain", p[0], p[1])));
    }
    let n1 = grid.n1() as i64;
    let n2 = grid.n2() as i64;
    // lower-left centre index; the 1e-9 keeps exact vertices from flipping to the wrong side
    let i0 = (((p[0] + lw) / h - 0.5) + 1e-9).floor() as i64;
    let j0 = ((((p[1] + lh) / h - 0.5) + 1e-9).floor() as i64).clamp(0, n2 - 2);
    let wrap = |i: i64| i.rem_euclid(n1) as usize;
    let (j0, j1) = (j0 as usize, j0 as usize + 1);
    Ok([
        grid.idx(wrap(i0), j0),
        grid.idx(wrap(i0 + 1), j0),
        grid.idx(wrap(i0), j1),
        grid.idx(wrap(i0 + 1), j1),
    ])
}

/// Average of `f` over the four probe cells.
pub fn probe_value(grid: &Grid, f: &[f64], p: [f64; 2]) -> Result<f64> {
    let c = probe_cells(grid, p)?;
    Ok(0.25 * (f[c[0]] + f[c[1]] + f[c[2]] + f[c[3]]))
}

/// What a histogram samples from each snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    /// `||U||_{L1}`
    L1Norm { quantity: Quantity },
    /// `int U dx`
    Integral { quantity: Quantity },
    /// four-cell average at a point
    Point { quantity: Quantity, point: [f64; 2] },
}

impl Functional {
    pub fn label(&self) -> String {
        match self {
            Functional::L1Norm { quantity } => format!("F1_{}", quantity.name()),
            Functional::Integral { quantity } => format!("F2_{}", quantity.name()),
            Functional::Point { quantity, point } => {
                let idx = PROBES.iter().position(|p| p == point);
                match idx {
                    Some(i) => format!("F3_{}_P{}", quantity.name(), i + 1),
                    None => format!("F3_{}_{}_{}", quantity.name(), point[0], point[1]),
                }
            }
        }
    }
}

/// Fraction of samples per bin of a uniform partition of `[a, b]`, with out-of-range counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramMeasure {
    pub functional: Option<Functional>,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl HistogramMeasure {
    pub fn with_range(a: f64, b: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::config(format!("invalid histogram range [{a}, {b}] with {bins} bins")));
        }
        let edges = (0..=bins).map(|i| a + (b - a) * i as f64 / bins as f64).collect();
        Ok(HistogramMeasure {
            functional: None,
            edges,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        })
    }

    /// Bins over the observed range of `values`; a constant series gets a unit-width range
    /// centred on its value.
    pub fn from_samples(values: &[f64], bins: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Range("no samples".into()));
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (a, b) = if hi > lo {
            (lo, hi)
        } else {
            let w = 0.5 * lo.abs().max(1.0);
            (lo - w, lo + w)
        };
        let mut hist = Self::with_range(a, b, bins)?;
        for v in values {
            hist.add(*v);
        }
        Ok(hist)
    }

    pub fn add(&mut self, v: f64) {
        let bins = self.counts.len();
        let (a, b) = (self.edges[0], self.edges[bins]);
        if v < a || v.is_nan() {
            self.underflow += 1;
        } else if v > b {
            self.overflow += 1;
        } else {
            let i = (((v - a) / (b - a)) * bins as f64).floor() as usize;
            self.counts[i.min(bins - 1)] += 1;
        }
    }

    pub fn samples(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    /// Fraction of all samples in each bin.
    pub fn mass(&self) -> Vec<f64> {
        let n = self.samples().max(1) as f64;
        self.counts.iter().map(|c| *c as f64 / n).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    /// unbiased
    pub variance: f64,
    /// adjusted Fisher-Pearson; `None` for zero variance
    pub skewness: Option<f64>,
    /// unbiased excess kurtosis; `None` for zero variance
    pub excess_kurtosis: Option<f64>,
}

pub fn moment_report(values: &[f64]) -> Result<Moments> {
    let n = values.len();
    if n < 8 {
        return Err(Error::Range(format!("moment report needs at least 8 samples, got {n}")));
    }
    let nf = n as f64;
    let mean = sum(values.iter().copied()) / nf;
    let m2 = sum(values.iter().map(|v| (v - mean).powi(2))) / nf;
    let m3 = sum(values.iter().map(|v| (v - mean).powi(3))) / nf;
    let m4 = sum(values.iter().map(|v| (v - mean).powi(4))) / nf;
    let variance = m2 * nf / (nf - 1.0);
    let degenerate = m2 <= f64::EPSILON * f64::EPSILON * mean.abs().max(1.0).powi(2);
    let (skewness, excess_kurtosis) = if degenerate {
        (None, None)
    } else {
        let g1 = m3 / m2.powf(1.5);
        let g2 = m4 / (m2 * m2) - 3.0;
        let skew = (nf * (nf - 1.0)).sqrt() / (nf - 2.0) * g1;
        let kurt = (nf - 1.0) / ((nf - 2.0) * (nf - 3.0)) * ((nf + 1.0) * g2 + 6.0);
        (Some(skew), Some(kurt))
    };
    Ok(Moments {
        n,
        mean,
        variance,
        skewness,
        excess_kurtosis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal, Uniform};

    #[test]
    fn probe_points_on_vertices() {
        let grid = Grid::rayleigh_benard(160).unwrap();
        let c = probe_cells(&grid, PROBES[0]).unwrap();
        let h = grid.h();
        for k in c {
            let (i, j) = grid.ij(k);
            let x = grid.center(i, j);
            assert!((x[0] - PROBES[0][0]).abs() < h && (x[1] - PROBES[0][1]).abs() < h);
        }
        let f: Vec<f64> = (0..grid.n_cells()).map(|k| grid.center(grid.ij(k).0, grid.ij(k).1)[1]).collect();
        assert_relative_eq!(probe_value(&grid, &f, PROBES[5]).unwrap(), 0.8, epsilon = 1e-12);
        assert!(probe_cells(&grid, [0.0, 1.5]).is_err());
    }

    #[test]
    fn probe_block_near_walls_and_seam() {
        let grid = Grid::new(2.0, 1.0, 8, 4).unwrap();
        let c = probe_cells(&grid, [-2.0, -1.0]).unwrap();
        let ij: Vec<_> = c.iter().map(|k| grid.ij(*k)).collect();
        assert_eq!(ij, vec![(7, 0), (0, 0), (7, 1), (0, 1)]);
    }

    #[test]
    fn histogram_simple_series() {
        let h = HistogramMeasure::from_samples(&[3.0; 10], 50).unwrap();
        assert_eq!(h.counts.iter().filter(|c| **c > 0).count(), 1);
        assert_eq!(h.mass().iter().sum::<f64>(), 1.0);

        let two: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 0.0 } else { 1.0 }).collect();
        let h = HistogramMeasure::from_samples(&two, 50).unwrap();
        let m = h.mass();
        assert_eq!((m[0], m[49]), (0.5, 0.5));

        let mut h = HistogramMeasure::with_range(0.0, 1.0, 4).unwrap();
        for v in [-0.1, 0.1, 0.5, 1.0, 1.5, 2.0] {
            h.add(v);
        }
        assert_eq!((h.underflow, h.overflow), (1, 2));
        assert_eq!(h.counts, vec![1, 0, 1, 1]);
        let total: f64 = h.mass().iter().sum();
        assert_relative_eq!(total, 1.0 - 3.0 / 6.0);
    }

    #[test]
    fn histogram_uniform_chi_square() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let d = Uniform::new(-1.0, 2.0).unwrap();
        let v: Vec<f64> = (0..20_000).map(|_| d.sample(&mut rng)).collect();
        let mut h = HistogramMeasure::with_range(-1.0, 2.0, 20).unwrap();
        for x in &v {
            h.add(*x);
        }
        let e = 1000.0;
        let chi2: f64 = h.counts.iter().map(|c| (*c as f64 - e).powi(2) / e).sum();
        // 19 degrees of freedom, 0.999 quantile about 43.8
        assert!(chi2 < 43.8, "chi2 = {chi2}");
    }

    #[test]
    fn moments_examples() {
        let two: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        let m = moment_report(&two).unwrap();
        assert_relative_eq!(m.skewness.unwrap(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(m.variance, 10.0 / 9.0, max_relative = 1e-15);

        let c = moment_report(&[2.5; 9]).unwrap();
        assert_eq!((c.variance, c.skewness, c.excess_kurtosis), (0.0, None, None));
        assert!(moment_report(&[1.0; 7]).is_err());
    }

    #[test]
    fn moments_against_hand_values() {
        // 1..=8: mean 4.5, var 6, skew 0, excess kurtosis -1.2
        let v: Vec<f64> = (1..=8).map(f64::from).collect();
        let m = moment_report(&v).unwrap();
        assert_relative_eq!(m.mean, 4.5);
        assert_relative_eq!(m.variance, 6.0, max_relative = 1e-15);
        assert_relative_eq!(m.skewness.unwrap(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(m.excess_kurtosis.unwrap(), -1.2, max_relative = 1e-12);
    }

    #[test]
    fn gaussian_series_looks_gaussian() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        let d = Normal::new(3.0, 0.7).unwrap();
        let v: Vec<f64> = (0..10_000).map(|_| d.sample(&mut rng)).collect();
        let m = moment_report(&v).unwrap();
        assert!(m.skewness.unwrap().abs() < 0.1);
        assert!(m.excess_kurtosis.unwrap().abs() < 0.2);
    }
}
