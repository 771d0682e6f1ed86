//! Interval matrices and the interval linear solver used for chart
//! inversion and the interval Newton operator.
//!
//! Matrix inversion is never formed explicitly: every use goes through
//! `IMatrix::solve` (interval Gauss elimination with mignitude pivoting),
//! which fails with `SingularEnclosure` as soon as no pivot interval is
//! bounded away from zero. Callers must treat that as inconclusive.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::{IBox, Interval, IntervalError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatrixError {
    #[error("matrix is not invertibly enclosed (pivot interval contains zero)")]
    SingularEnclosure,
    #[error("dimension mismatch")]
    Shape,
}

/// Row-major square interval matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IMatrix {
    n: usize,
    data: Vec<Interval>,
}

impl IMatrix {
    pub fn new(n: usize, data: Vec<Interval>) -> IMatrix {
        assert_eq!(data.len(), n * n);
        IMatrix { n, data }
    }

    pub fn zeros(n: usize) -> IMatrix {
        IMatrix {
            n,
            data: vec![Interval::ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> IMatrix {
        let mut m = IMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = Interval::ONE;
        }
        m
    }

    pub fn from_points(n: usize, rows: &[f64]) -> IMatrix {
        assert_eq!(rows.len(), n * n);
        IMatrix {
            n,
            data: rows.iter().map(|&x| Interval::point(x)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[Interval] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mid(&self) -> Vec<f64> {
        self.data.iter().map(|iv| iv.mid()).collect()
    }

    pub fn mul_mat(&self, other: &IMatrix) -> IMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = IMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Interval::ZERO;
                for k in 0..n {
                    acc = acc.add(&self[(i, k)].mul(&other[(k, j)]));
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    pub fn mul_box(&self, v: &IBox) -> IBox {
        assert_eq!(self.n, v.dim());
        let mut out = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let mut acc = Interval::ZERO;
            for k in 0..self.n {
                acc = acc.add(&self[(i, k)].mul(&v.0[k]));
            }
            out.push(acc);
        }
        IBox(out)
    }

    pub fn add_mat(&self, other: &IMatrix) -> IMatrix {
        assert_eq!(self.n, other.n);
        IMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn scale(&self, s: &Interval) -> IMatrix {
        IMatrix {
            n: self.n,
            data: self.data.iter().map(|a| a.mul(s)).collect(),
        }
    }

    pub fn hull(&self, other: &IMatrix) -> IMatrix {
        assert_eq!(self.n, other.n);
        IMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.hull(b))
                .collect(),
        }
    }

    pub fn contains_mat(&self, other: &IMatrix) -> bool {
        self.n == other.n
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.contains_interval(b))
    }

    pub fn max_width(&self) -> f64 {
        self.data.iter().map(|iv| iv.width()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|iv| iv.is_finite())
    }

    /// Column-wise maximum magnitude row sum (an upper bound for the
    /// operator infinity-norm over all representatives).
    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|iv| iv.mag()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Encloses `{ x : A0 x = b0, A0 in self, b0 in b }` by interval Gauss
    /// elimination with mignitude pivoting.
    pub fn solve(&self, b: &IBox) -> Result<IBox, MatrixError> {
        if b.dim() != self.n {
            return Err(MatrixError::Shape);
        }
        let n = self.n;
        let mut a = self.data.clone();
        let mut rhs = b.0.clone();
        let mut rows: Vec<usize> = (0..n).collect();

        for col in 0..n {
            // pivot: row with the largest mignitude in this column
            let (best, mig) = rows[col..]
                .iter()
                .map(|&r| a[r * n + col].mig())
                .enumerate()
                .fold((0, -1.0), |acc, (i, m)| if m > acc.1 { (i, m) } else { acc });
            if mig <= 0.0 {
                return Err(MatrixError::SingularEnclosure);
            }
            rows.swap(col, col + best);
            let prow = rows[col];
            let pivot = a[prow * n + col];
            for &r in &rows[col + 1..] {
                let factor = a[r * n + col]
                    .div(&pivot)
                    .map_err(|_| MatrixError::SingularEnclosure)?;
                a[r * n + col] = Interval::ZERO;
                for j in col + 1..n {
                    let t = factor.mul(&a[prow * n + j]);
                    a[r * n + j] = a[r * n + j].sub(&t);
                }
                let t = factor.mul(&rhs[prow]);
                rhs[r] = rhs[r].sub(&t);
            }
        }

        let mut x = vec![Interval::ZERO; n];
        for col in (0..n).rev() {
            let r = rows[col];
            let mut acc = rhs[r];
            for j in col + 1..n {
                acc = acc.sub(&a[r * n + j].mul(&x[j]));
            }
            x[col] = acc
                .div(&a[r * n + col])
                .map_err(|_| MatrixError::SingularEnclosure)?;
        }
        Ok(IBox(x))
    }

    /// Encloses the inverse by solving against the identity columns.
    pub fn enclose_inverse(&self) -> Result<IMatrix, MatrixError> {
        let n = self.n;
        let mut out = IMatrix::zeros(n);
        for j in 0..n {
            let mut e = IBox::zero(n);
            e.0[j] = Interval::ONE;
            let col = self.solve(&e)?;
            for i in 0..n {
                out[(i, j)] = col.0[i];
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> IMatrix {
        let n = self.n;
        let mut out = IMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn from_decimal_rows(n: usize, rows: &[&str]) -> Result<IMatrix, IntervalError> {
        assert_eq!(rows.len(), n * n);
        let mut data = Vec::with_capacity(n * n);
        for s in rows {
            data.push(Interval::from_decimal_str(s)?);
        }
        Ok(IMatrix { n, data })
    }
}

impl std::ops::Index<(usize, usize)> for IMatrix {
    type Output = Interval;
    fn index(&self, (i, j): (usize, usize)) -> &Interval {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Interval {
        &mut self.data[i * self.n + j]
    }
}

/// Dense row-major point matrix used for Lohner charts and midpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct PMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl PMatrix {
    pub fn identity(n: usize) -> PMatrix {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        PMatrix { n, data }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn to_imatrix(&self) -> IMatrix {
        IMatrix::from_points(self.n, &self.data)
    }

    /// Orthonormalizes the columns (modified Gram-Schmidt), processing them
    /// in the given order; degenerate columns fall back to unit vectors so
    /// the result is always invertible.
    pub fn orthonormalize_ordered(&self, order: &[usize]) -> PMatrix {
        let n = self.n;
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
        for &j in order {
            cols.push(self.col(j));
        }
        let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
        for mut v in cols {
            for u in &q {
                let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= d * ui;
                }
            }
            let norm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 1e-300 {
                for vi in v.iter_mut() {
                    *vi /= norm;
                }
            } else {
                // replace with a unit vector orthogonal to the span
                v = complete_basis(&q, n);
            }
            q.push(v);
        }
        // undo the permutation: column order[j] gets q[j]
        let mut out = PMatrix::identity(n);
        for (k, &j) in order.iter().enumerate() {
            for i in 0..n {
                out.set(i, j, q[k][i]);
            }
        }
        out
    }
}

fn complete_basis(q: &[Vec<f64>], n: usize) -> Vec<f64> {
    for axis in 0..n {
        let mut v = vec![0.0; n];
        v[axis] = 1.0;
        for u in q {
            let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= d * ui;
            }
        }
        let norm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for vi in v.iter_mut() {
                *vi /= norm;
            }
            return v;
        }
    }
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    v
}
