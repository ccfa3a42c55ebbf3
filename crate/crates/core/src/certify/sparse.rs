//! Real sparse square matrices with the handful of operations the certificate checks need.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};

/// Row-major sparse matrix; each row is sorted by column with no duplicates or zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn zeros(dim: usize) -> Self {
        SparseMatrix { dim, rows: vec![Vec::new(); dim] }
    }

    pub fn identity(dim: usize) -> Self {
        SparseMatrix::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let rows = diag
            .iter()
            .enumerate()
            .map(|(i, &v)| if v == 0.0 { Vec::new() } else { vec![(i, v)] })
            .collect();
        SparseMatrix { dim: diag.len(), rows }
    }

    /// Sums duplicate entries and drops exact zeros.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); dim];
        for (i, j, v) in triplets {
            assert!(i < dim && j < dim, "entry ({i}, {j}) outside {dim}x{dim}");
            *rows[i].entry(j).or_insert(0.0) += v;
        }
        SparseMatrix {
            dim,
            rows: rows
                .into_iter()
                .map(|r| r.into_iter().filter(|&(_, v)| v != 0.0).collect())
                .collect(),
        }
    }

    /// Builds a matrix column by column; `column(j)` lists `(row, value)` pairs.
    pub fn from_columns<I>(dim: usize, column: impl Fn(usize) -> I) -> Self
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        SparseMatrix::from_triplets(
            dim,
            (0..dim).flat_map(|j| column(j).into_iter().map(move |(i, v)| (i, j, v))),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.rows[i].binary_search_by_key(&j, |&(c, _)| c) {
            Ok(pos) => self.rows[i][pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, r)| r.iter().map(move |&(j, v)| (i, j, v)))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn transpose(&self) -> Self {
        SparseMatrix::from_triplets(self.dim, self.entries().map(|(i, j, v)| (j, i, v)))
    }

    pub fn scale(&self, s: f64) -> Self {
        SparseMatrix::from_triplets(self.dim, self.entries().map(|(i, j, v)| (i, j, v * s)))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        SparseMatrix::from_triplets(self.dim, self.entries().chain(other.entries()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        SparseMatrix::from_triplets(
            self.dim,
            self.entries().chain(other.entries().map(|(i, j, v)| (i, j, -v))),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut rows = Vec::with_capacity(self.dim);
        for row in &self.rows {
            let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
            for &(k, a) in row {
                for &(j, b) in &other.rows[k] {
                    *acc.entry(j).or_insert(0.0) += a * b;
                }
            }
            rows.push(acc.into_iter().filter(|&(_, v)| v != 0.0).collect());
        }
        SparseMatrix { dim: self.dim, rows }
    }

    /// `U X U^T`.
    pub fn conjugate(&self, u: &Self) -> Self {
        u.mul(self).mul(&u.transpose())
    }

    /// `U^T X U`.
    pub fn conjugate_inverse(&self, u: &Self) -> Self {
        u.transpose().mul(self).mul(u)
    }

    /// `X (x) I_k` where the identity factor occupies the `factor` least significant index positions.
    pub fn kron_identity(&self, factor: usize) -> Self {
        SparseMatrix::from_triplets(
            self.dim * factor,
            self.entries()
                .flat_map(|(i, j, v)| (0..factor).map(move |m| (i * factor + m, j * factor + m, v))),
        )
    }

    /// Traces out the `factor` least significant index positions.
    pub fn partial_trace(&self, factor: usize) -> Self {
        assert_eq!(self.dim % factor, 0);
        SparseMatrix::from_triplets(
            self.dim / factor,
            self.entries()
                .filter(|&(i, j, _)| i % factor == j % factor)
                .map(|(i, j, v)| (i / factor, j / factor, v)),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().map(|(_, _, v)| v.abs()).fold(0.0, f64::max)
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }

    /// `max |X - X^T|` entrywise.
    pub fn asymmetry(&self) -> f64 {
        self.max_abs_diff(&self.transpose())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v;
        }
        m
    }

    /// Smallest eigenvalue of the symmetric part, computed block by block.
    pub fn min_eigenvalue(&self) -> f64 {
        BlockSystem::new(self, &[]).min_eigenvalue(0.0)
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// A symmetric matrix `M + c D` (with `D` a 0/1 diagonal mask) split into the
/// connected components of its sparsity pattern, so its spectrum is the union
/// of small dense spectra. The split does not depend on `c`.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    blocks: Vec<(DMatrix<f64>, Vec<usize>)>,
    /// Indices not touched by `M` or `D`; each contributes an eigenvalue 0.
    untouched: usize,
}

impl BlockSystem {
    /// `mask` lists the indices where `c` is added to the diagonal.
    pub fn new(base: &SparseMatrix, mask: &[usize]) -> Self {
        let dim = base.dim();
        let mut parent: Vec<usize> = (0..dim).collect();
        let mut touched = vec![false; dim];
        for (i, j, _) in base.entries() {
            touched[i] = true;
            touched[j] = true;
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri] = rj;
            }
        }
        for &i in mask {
            touched[i] = true;
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in (0..dim).filter(|&i| touched[i]) {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(i);
        }
        let mut local = vec![usize::MAX; dim];
        let mut blocks = Vec::with_capacity(groups.len());
        let mut in_mask = vec![false; dim];
        for &i in mask {
            in_mask[i] = true;
        }
        for members in groups.into_values() {
            for (p, &i) in members.iter().enumerate() {
                local[i] = p;
            }
            let size = members.len();
            let mut m = DMatrix::zeros(size, size);
            for (p, &i) in members.iter().enumerate() {
                for &(j, v) in base.row(i) {
                    let q = local[j];
                    m[(p, q)] += 0.5 * v;
                    m[(q, p)] += 0.5 * v;
                }
            }
            let masked = members.iter().enumerate().filter(|(_, &i)| in_mask[i]).map(|(p, _)| p).collect();
            blocks.push((m, masked));
        }
        let untouched = touched.iter().filter(|&&t| !t).count();
        BlockSystem { blocks, untouched }
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn largest_block(&self) -> usize {
        self.blocks.iter().map(|(m, _)| m.nrows()).max().unwrap_or(0)
    }

    pub fn min_eigenvalue(&self, c: f64) -> f64 {
        let mut min = if self.untouched > 0 { 0.0 } else { f64::INFINITY };
        for (m, masked) in &self.blocks {
            let mut m = m.clone();
            for &p in masked {
                m[(p, p)] += c;
            }
            let lambda = if m.nrows() == 1 {
                m[(0, 0)]
            } else {
                SymmetricEigen::new(m).eigenvalues.min()
            };
            min = min.min(lambda);
        }
        min
    }
}
