//! Compressed sparse row matrices over complex numbers, just enough to
//! assemble superoperators from Kronecker products and apply them.

use ndarray::Array2;

use crate::linalg::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    /// Duplicates are summed; entries that cancel to exactly zero are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
        .pruned()
    }

    fn pruned(self) -> Self {
        if self.values.iter().all(|v| *v != C64::new(0.0, 0.0)) {
            return self;
        }
        let trip = self.triplets().filter(|t| t.2 != C64::new(0.0, 0.0)).collect();
        CsrMatrix::from_triplets(self.nrows, self.ncols, trip)
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![C64::new(1.0, 0.0); n],
        }
    }

    pub fn from_dense(a: &Array2<C64>) -> Self {
        let trip = a
            .indexed_iter()
            .filter(|(_, v)| **v != C64::new(0.0, 0.0))
            .map(|((i, j), &v)| (i, j, v))
            .collect();
        CsrMatrix::from_triplets(a.nrows(), a.ncols(), trip)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut a = Array2::zeros((self.nrows, self.ncols));
        for (r, c, v) in self.triplets() {
            a[[r, c]] += v;
        }
        a
    }

    pub fn transpose(&self) -> Self {
        let trip = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        CsrMatrix::from_triplets(self.ncols, self.nrows, trip)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let trip = self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect();
        CsrMatrix::from_triplets(self.ncols, self.nrows, trip)
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = v.conj());
        out
    }

    pub fn scaled(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out.pruned()
    }

    /// Sum of several matrices of equal shape.
    pub fn sum(parts: &[CsrMatrix]) -> Self {
        let (nrows, ncols) = (parts[0].nrows, parts[0].ncols);
        assert!(parts.iter().all(|p| p.nrows == nrows && p.ncols == ncols), "shape mismatch in sum");
        let trip = parts.iter().flat_map(|p| p.triplets()).collect();
        CsrMatrix::from_triplets(nrows, ncols, trip)
    }

    pub fn matmul(&self, other: &CsrMatrix) -> Self {
        assert_eq!(self.ncols, other.nrows, "shape mismatch in product");
        let mut trip = Vec::new();
        for r in 0..self.nrows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    trip.push((r, c, a * b));
                }
            }
        }
        CsrMatrix::from_triplets(self.nrows, other.ncols, trip)
    }

    /// `self ⊗ other` with `self` as the slow (outer) index.
    pub fn kron(&self, other: &CsrMatrix) -> Self {
        let mut trip = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, a) in self.triplets() {
            for (r2, c2, b) in other.triplets() {
                trip.push((r1 * other.nrows + r2, c1 * other.ncols + c2, a * b));
            }
        }
        CsrMatrix::from_triplets(self.nrows * other.nrows, self.ncols * other.ncols, trip)
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.ncols, "vector length mismatch");
        (0..self.nrows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// `x^T A`.
    pub fn vecmat(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.nrows, "vector length mismatch");
        let mut out = vec![C64::new(0.0, 0.0); self.ncols];
        for (r, c, v) in self.triplets() {
            out[c] += x[r] * v;
        }
        out
    }

    /// A `2^k x 2^k` matrix acting on `sites` (first site most significant)
    /// of an `n`-site register; site `s` is bit `n - 1 - s`.
    pub fn embed_local(local: &Array2<C64>, sites: &[usize], n: usize) -> Self {
        let k = sites.len();
        assert_eq!(local.nrows(), 1 << k, "local matrix does not match site count");
        let dim = 1usize << n;
        let bits: Vec<usize> = sites.iter().map(|&s| n - 1 - s).collect();
        let mask: usize = bits.iter().map(|b| 1usize << b).sum();
        let scatter = |idx: usize| -> usize {
            bits.iter()
                .enumerate()
                .map(|(q, &b)| ((idx >> (k - 1 - q)) & 1) << b)
                .sum()
        };
        let gather = |state: usize| -> usize {
            bits.iter()
                .enumerate()
                .map(|(q, &b)| ((state >> b) & 1) << (k - 1 - q))
                .sum()
        };
        let mut trip = Vec::new();
        for col in 0..dim {
            let li = gather(col);
            let rest = col & !mask;
            for lo in 0..local.nrows() {
                let v = local[[lo, li]];
                if v != C64::new(0.0, 0.0) {
                    trip.push((rest | scatter(lo), col, v));
                }
            }
        }
        CsrMatrix::from_triplets(dim, dim, trip)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, max_abs_diff, ONE, ZERO};
    use ndarray::array;

    fn sample() -> Array2<C64> {
        array![
            [ONE, ZERO, C64::new(0.0, 2.0)],
            [ZERO, C64::new(-1.5, 0.5), ZERO],
            [C64::new(3.0, 0.0), ZERO, ONE]
        ]
    }

    #[test]
    fn dense_round_trip_and_products() {
        let a = sample();
        let s = CsrMatrix::from_dense(&a);
        assert_eq!(s.nnz(), 5);
        assert_eq!(s.to_dense(), a);
        assert!(max_abs_diff(&s.matmul(&s).to_dense().view(), &a.dot(&a).view()) < 1e-15);
        assert_eq!(s.transpose().to_dense(), a.t().to_owned());
        let x = vec![ONE, C64::new(0.0, 1.0), C64::new(2.0, 0.0)];
        let y = s.matvec(&x);
        let expect = a.dot(&ndarray::Array1::from(x.clone()));
        for (u, v) in y.iter().zip(expect.iter()) {
            assert!((u - v).norm() < 1e-15);
        }
        let z = s.vecmat(&x);
        let expect = ndarray::Array1::from(x).dot(&a);
        for (u, v) in z.iter().zip(expect.iter()) {
            assert!((u - v).norm() < 1e-15);
        }
    }

    #[test]
    fn kron_matches_dense() {
        let a = sample();
        let b = array![[ZERO, ONE], [C64::new(0.0, -1.0), ZERO]];
        let s = CsrMatrix::from_dense(&a).kron(&CsrMatrix::from_dense(&b));
        assert!(max_abs_diff(&s.to_dense().view(), &kron(&a.view(), &b.view()).view()) < 1e-15);
    }

    #[test]
    fn cancellation_drops_entries() {
        let s = CsrMatrix::from_triplets(2, 2, vec![(0, 1, ONE), (0, 1, -ONE), (1, 1, ONE)]);
        assert_eq!(s.nnz(), 1);
    }

    #[test]
    fn embed_local_matches_kron() {
        let x = array![[ZERO, ONE], [ONE, ZERO]];
        let z = array![[ONE, ZERO], [ZERO, -ONE]];
        let xz = kron(&x.view(), &z.view());
        let id = crate::linalg::identity(2);
        // sites 1,2 of 3: I ⊗ x ⊗ z
        let expect = kron(&id.view(), &xz.view());
        let got = CsrMatrix::embed_local(&xz, &[1, 2], 3).to_dense();
        assert!(max_abs_diff(&got.view(), &expect.view()) < 1e-15);
        // wrapped pair (2, 0): z ⊗ I ⊗ x
        let expect = kron(&kron(&z.view(), &id.view()).view(), &x.view());
        let got = CsrMatrix::embed_local(&xz, &[2, 0], 3).to_dense();
        assert!(max_abs_diff(&got.view(), &expect.view()) < 1e-15);
    }
}
