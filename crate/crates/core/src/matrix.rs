//! Dense rational matrices and an exact LU factorization.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_traits::Zero;

use crate::rational::{fmt_rat, int, Rat};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Rat::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = int(1);
        }
        m
    }

    /// Builds from row vectors; all rows must have `cols` entries.
    pub fn from_rows(cols: usize, rows: Vec<Vec<Rat>>) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged matrix rows");
            data.extend(row);
        }
        Self { rows: n, cols, data }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Self::from_rows(cols, rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<Rat>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn scale(&self, factor: &Rat) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * factor).collect() }
    }

    pub fn mul_vec(&self, x: &[Rat]) -> Vec<Rat> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀx`.
    pub fn tr_mul_vec(&self, x: &[Rat]) -> Vec<Rat> {
        assert_eq!(x.len(), self.rows);
        let mut out = vec![Rat::zero(); self.cols];
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                if !a.is_zero() {
                    *o += xi * a;
                }
            }
        }
        out
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = &self[(i, l)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(l, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    /// `xᵀAx`.
    pub fn quad_form(&self, x: &[Rat]) -> Rat {
        dot(x, &self.mul_vec(x))
    }

    /// Exact rank by Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut a = self.clone();
        let mut rank = 0;
        for col in 0..a.cols {
            let Some(p) = (rank..a.rows).find(|&r| !a[(r, col)].is_zero()) else {
                continue;
            };
            a.swap_rows(rank, p);
            for r in rank + 1..a.rows {
                if a[(r, col)].is_zero() {
                    continue;
                }
                let f = &a[(r, col)] / &a[(rank, col)];
                for c in col..a.cols {
                    let v = &f * &a[(rank, c)];
                    a[(r, c)] -= v;
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    /// Submatrix on the given row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                out[(a, b)] = self[(i, j)].clone();
            }
        }
        out
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = Rat;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rat {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<_> = self.row(i).iter().map(fmt_rat).collect();
            write!(f, "[{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    let mut acc = Rat::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc += x * y;
        }
    }
    acc
}

/// Exact `PA = LU` with unit-lower `L`, chosen by first nonzero pivot in
/// each column. Zero entries are skipped throughout so sparse inputs stay
/// cheap.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Matrix,
    /// `perm[i]` is the original row placed at position `i`.
    perm: Vec<usize>,
}

impl Lu {
    /// `None` if `a` is singular.
    pub fn factor(a: &Matrix) -> Option<Lu> {
        assert!(a.is_square());
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n).find(|&r| !lu[(r, k)].is_zero())?;
            lu.swap_rows(k, p);
            perm.swap(k, p);
            let pivot_row: Vec<(usize, Rat)> =
                (k + 1..n).filter(|&c| !lu[(k, c)].is_zero()).map(|c| (c, lu[(k, c)].clone())).collect();
            let pivot = lu[(k, k)].clone();
            for r in k + 1..n {
                if lu[(r, k)].is_zero() {
                    continue;
                }
                let f = &lu[(r, k)] / &pivot;
                for (c, u) in &pivot_row {
                    let v = &f * u;
                    lu[(r, *c)] -= v;
                }
                lu[(r, k)] = f;
            }
        }
        Some(Lu { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `Ax = b`.
    pub fn solve(&self, b: &[Rat]) -> Vec<Rat> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut y: Vec<Rat> = self.perm.iter().map(|&p| b[p].clone()).collect();
        for i in 0..n {
            for j in 0..i {
                let l = &self.lu[(i, j)];
                if !l.is_zero() && !y[j].is_zero() {
                    let v = l * &y[j];
                    y[i] -= v;
                }
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = &self.lu[(i, j)];
                if !u.is_zero() && !y[j].is_zero() {
                    let v = u * &y[j];
                    y[i] -= v;
                }
            }
            if !y[i].is_zero() {
                y[i] = &y[i] / &self.lu[(i, i)];
            }
        }
        y
    }

    /// Solves `Aᵀx = b`.
    pub fn solve_transpose(&self, b: &[Rat]) -> Vec<Rat> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        // Uᵀ w = b
        let mut w = b.to_vec();
        for i in 0..n {
            for j in 0..i {
                let u = &self.lu[(j, i)];
                if !u.is_zero() && !w[j].is_zero() {
                    let v = u * &w[j];
                    w[i] -= v;
                }
            }
            if !w[i].is_zero() {
                w[i] = &w[i] / &self.lu[(i, i)];
            }
        }
        // Lᵀ v = w
        for i in (0..n).rev() {
            for j in i + 1..n {
                let l = &self.lu[(j, i)];
                if !l.is_zero() && !w[j].is_zero() {
                    let v = l * &w[j];
                    w[i] -= v;
                }
            }
        }
        let mut x = vec![Rat::zero(); n];
        for (i, v) in w.into_iter().enumerate() {
            x[self.perm[i]] = v;
        }
        x
    }
}
