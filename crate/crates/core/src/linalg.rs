//! Dense helpers: a row-major data matrix for tall panels, streaming
//! cross-product accumulation and a rank-revealing solve for the small
//! normal-equation systems.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rows per accumulation block. Fixed so reductions do not depend on the
/// number of worker threads.
pub const BLOCK_ROWS: usize = 4096;

/// Relative pivot threshold on the unit-diagonal scaled Gram matrix.
pub const RANK_TOL: f64 = 1e-10;

/// Tall row-major matrix.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RowMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl RowMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, data: vec![0.0; nrows * ncols] }
    }

    pub fn with_capacity(ncols: usize, rows: usize) -> Self {
        Self { nrows: 0, ncols, data: Vec::with_capacity(rows * ncols) }
    }

    pub fn from_row_slice(nrows: usize, ncols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), nrows * ncols, "data length does not match shape");
        Self { nrows, ncols, data: data.to_vec() }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut m = Self::with_capacity(ncols, rows.len());
        for r in rows {
            m.push_row(r);
        }
        m
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let ncols = columns.len();
        let nrows = columns.first().map_or(0, Vec::len);
        let mut m = Self::zeros(nrows, ncols);
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), nrows, "ragged columns");
            for (i, v) in c.iter().enumerate() {
                m.data[i * ncols + j] = *v;
            }
        }
        m
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.ncols, "row width mismatch");
        self.data.extend_from_slice(row);
        self.nrows += 1;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ncols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut m = Self::with_capacity(self.ncols, rows.len());
        for &r in rows {
            m.push_row(self.row(r));
        }
        m
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.nrows, self.ncols, &self.data)
    }
}

fn block_ranges(n: usize) -> Vec<(usize, usize)> {
    (0..n.div_ceil(BLOCK_ROWS))
        .map(|b| (b * BLOCK_ROWS, ((b + 1) * BLOCK_ROWS).min(n)))
        .collect()
}

fn pairwise_sum(mut parts: Vec<Vec<f64>>, len: usize) -> Vec<f64> {
    if parts.is_empty() {
        return vec![0.0; len];
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap()
}

fn upper_to_symmetric(dim: usize, upper: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in a..dim {
            let v = upper[a * dim + b];
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    m
}

/// Σᵢ vᵢ vᵢᵀ where `fill(i, v)` writes row vector `vᵢ` of length `dim`.
///
/// One pass over the rows, blocked and reduced pairwise in a fixed order so
/// the result is bit-identical for any thread count.
pub fn gram<F>(n: usize, dim: usize, fill: F) -> DMatrix<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let parts: Vec<Vec<f64>> = block_ranges(n)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut acc = vec![0.0; dim * dim];
            let mut v = vec![0.0; dim];
            for i in lo..hi {
                fill(i, &mut v);
                for a in 0..dim {
                    let va = v[a];
                    if va == 0.0 {
                        continue;
                    }
                    let row = &mut acc[a * dim..(a + 1) * dim];
                    for b in a..dim {
                        row[b] += va * v[b];
                    }
                }
            }
            acc
        })
        .collect();
    upper_to_symmetric(dim, &pairwise_sum(parts, dim * dim))
}

/// Σ_g s_g s_gᵀ with s_g = Σ_{i ∈ g} vᵢ, for rows grouped contiguously by `groups`.
pub fn cluster_gram<F>(groups: &[u32], dim: usize, fill: F) -> Result<DMatrix<f64>>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let mut starts = Vec::new();
    for i in 0..groups.len() {
        if i == 0 || groups[i] != groups[i - 1] {
            starts.push(i);
        }
    }
    let mut seen = starts.iter().map(|&s| groups[s]).collect::<Vec<_>>();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Usage("cluster ids must be contiguous".into()));
    }
    starts.push(groups.len());
    let n_groups = starts.len() - 1;
    let chunk = 512usize;
    let parts: Vec<Vec<f64>> = (0..n_groups.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; dim * dim];
            let mut v = vec![0.0; dim];
            let mut s = vec![0.0; dim];
            for g in c * chunk..((c + 1) * chunk).min(n_groups) {
                s.iter_mut().for_each(|x| *x = 0.0);
                for i in starts[g]..starts[g + 1] {
                    fill(i, &mut v);
                    for (a, b) in s.iter_mut().zip(&v) {
                        *a += b;
                    }
                }
                for a in 0..dim {
                    for b in a..dim {
                        acc[a * dim + b] += s[a] * s[b];
                    }
                }
            }
            acc
        })
        .collect();
    Ok(upper_to_symmetric(dim, &pairwise_sum(parts, dim * dim)))
}

/// Deterministic blocked sum of `f(i)` over `0..n`.
pub fn blocked_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let parts: Vec<Vec<f64>> = block_ranges(n)
        .into_par_iter()
        .map(|(lo, hi)| vec![(lo..hi).map(&f).sum::<f64>()])
        .collect();
    pairwise_sum(parts, 1)[0]
}

/// Inverse of a symmetric positive semidefinite Gram matrix, after a
/// column-pivoted QR rank check on its unit-diagonal scaling.
///
/// Returns [`Error::RankDeficient`] naming the columns that fall past the
/// numerical rank.
pub fn inverse_gram(g: &DMatrix<f64>, names: &[String]) -> Result<DMatrix<f64>> {
    let k = g.nrows();
    assert_eq!(names.len(), k, "one name per column");
    if k == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let zero: Vec<String> = (0..k)
        .filter(|&i| !g[(i, i)].is_finite() || g[(i, i)] <= 0.0)
        .map(|i| names[i].clone())
        .collect();
    if !zero.is_empty() {
        return Err(Error::RankDeficient(zero));
    }
    let scale: Vec<f64> = (0..k).map(|i| 1.0 / g[(i, i)].sqrt()).collect();
    let scaled = DMatrix::from_fn(k, k, |a, b| g[(a, b)] * scale[a] * scale[b]);

    let qr = scaled.clone().col_piv_qr();
    let r = qr.r();
    let r0 = r[(0, 0)].abs();
    let rank = (0..k).take_while(|&i| r[(i, i)].abs() > RANK_TOL * r0).count();
    if rank < k {
        let mut order = DMatrix::from_fn(1, k, |_, j| j as f64);
        qr.p().permute_columns(&mut order);
        let dependent = (rank..k).map(|j| names[order[(0, j)] as usize].clone()).collect();
        return Err(Error::RankDeficient(dependent));
    }

    let inv_scaled = match scaled.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => qr
            .try_inverse()
            .ok_or_else(|| Error::Singular("normal-equation matrix".into()))?,
    };
    let mut inv = DMatrix::from_fn(k, k, |a, b| inv_scaled[(a, b)] * scale[a] * scale[b]);
    symmetrize(&mut inv);
    Ok(inv)
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let k = m.nrows();
    for a in 0..k {
        for b in a + 1..k {
            let v = 0.5 * (m[(a, b)] + m[(b, a)]);
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_matches_naive_product() {
        let n = 10_000;
        let x = RowMatrix::from_columns(&[
            (0..n).map(|i| (i as f64).sin()).collect(),
            (0..n).map(|i| (i % 7) as f64).collect(),
            vec![1.0; n],
        ]);
        let g = gram(n, 3, |i, v| v.copy_from_slice(x.row(i)));
        let d = x.to_dmatrix();
        let naive = d.transpose() * &d;
        assert!((g - naive).abs().max() < 1e-6);
    }

    #[test]
    fn gram_is_thread_count_invariant() {
        let n = 50_000;
        let f = |i: usize, v: &mut [f64]| {
            v[0] = (i as f64 * 0.37).cos();
            v[1] = (i as f64).sqrt();
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| gram(n, 2, f));
        let b = four.install(|| gram(n, 2, f));
        assert_eq!(a, b);
    }

    #[test]
    fn collinear_columns_named() {
        let x = RowMatrix::from_columns(&[vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 2.0, 3.0, 4.0]]);
        let g = gram(4, 2, |i, v| v.copy_from_slice(x.row(i)));
        let err = inverse_gram(&g, &["x1".into(), "x2".into()]).unwrap_err();
        assert!(matches!(err, Error::RankDeficient(c) if c.len() == 1));
    }

    #[test]
    fn cluster_gram_sums_within_groups() {
        let groups = [0u32, 0, 1, 2, 2, 2];
        let vals = [1.0, 2.0, -1.0, 0.5, 0.5, 1.0];
        let g = cluster_gram(&groups, 1, |i, v| v[0] = vals[i]).unwrap();
        assert_eq!(g[(0, 0)], 9.0 + 1.0 + 4.0);
        assert!(cluster_gram(&[0, 1, 0], 1, |_, v| v[0] = 1.0).is_err());
    }
}
