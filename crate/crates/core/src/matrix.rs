//! Square matrices over residue rings, plus a small generic layer used for
//! exterior powers over any commutative ring (residues or integers).

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::{Elem, Ring, RingKind};

/// Dense row-major `n x n` matrix of ring elements.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mat {
    n: usize,
    data: Vec<Elem>,
}

impl Mat {
    pub fn zero(n: usize) -> Self {
        Mat { n, data: vec![Elem(0, 0); n * n] }
    }

    pub fn identity(ring: &Ring, n: usize) -> Self {
        let mut m = Mat::zero(n);
        for i in 0..n {
            m.data[i * n + i] = ring.one();
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Elem) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Mat { n, data }
    }

    /// Rational matrix from integer rows.
    pub fn from_ints(ring: &Ring, rows: &[&[i64]]) -> Self {
        let n = rows.len();
        Mat::from_fn(n, |i, j| ring.from_int(rows[i][j]))
    }

    pub fn from_rows(rows: Vec<Vec<Elem>>) -> Self {
        let n = rows.len();
        let data: Vec<Elem> = rows.into_iter().flatten().collect();
        assert_eq!(data.len(), n * n, "matrix rows must be square");
        Mat { n, data }
    }

    pub fn diagonal(entries: &[Elem]) -> Self {
        let n = entries.len();
        let mut m = Mat::zero(n);
        for (i, &e) in entries.iter().enumerate() {
            m.data[i * n + i] = e;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Elem {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: Elem) {
        self.data[i * self.n + j] = x;
    }

    pub fn row(&self, i: usize) -> &[Elem] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn entries(&self) -> &[Elem] {
        &self.data
    }

    pub fn entries_mut(&mut self) -> &mut [Elem] {
        &mut self.data
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.n, |i, j| self.get(j, i))
    }

    /// Render as nested vectors of display strings.
    pub fn display(&self, ring: &Ring) -> Vec<Vec<String>> {
        (0..self.n).map(|i| self.row(i).iter().map(|&x| ring.display(x)).collect()).collect()
    }
}

impl Ring {
    pub fn mat_mul(&self, a: &Mat, b: &Mat) -> Mat {
        let n = a.n;
        let mut out = Mat::zero(n);
        for i in 0..n {
            for k in 0..n {
                let x = a.get(i, k);
                if x == Elem(0, 0) {
                    continue;
                }
                for j in 0..n {
                    let y = b.get(k, j);
                    if y != Elem(0, 0) {
                        let cur = out.get(i, j);
                        out.set(i, j, self.add(cur, self.mul(x, y)));
                    }
                }
            }
        }
        out
    }

    pub fn mat_add(&self, a: &Mat, b: &Mat) -> Mat {
        Mat::from_fn(a.n, |i, j| self.add(a.get(i, j), b.get(i, j)))
    }

    pub fn mat_sub(&self, a: &Mat, b: &Mat) -> Mat {
        Mat::from_fn(a.n, |i, j| self.sub(a.get(i, j), b.get(i, j)))
    }

    pub fn mat_scale(&self, a: &Mat, c: Elem) -> Mat {
        Mat::from_fn(a.n, |i, j| self.mul(c, a.get(i, j)))
    }

    pub fn mat_conj(&self, a: &Mat) -> Mat {
        Mat::from_fn(a.n, |i, j| self.conj(a.get(i, j)))
    }

    /// `conj(a)^T`.
    pub fn mat_adjoint(&self, a: &Mat) -> Mat {
        Mat::from_fn(a.n, |i, j| self.conj(a.get(j, i)))
    }

    pub fn mat_is_rational(&self, a: &Mat) -> bool {
        a.data.iter().all(|&x| self.is_rational_elem(x))
    }

    /// The elementary matrix `I + c * E_ij`.
    pub fn elementary(&self, n: usize, i: usize, j: usize, c: Elem) -> Mat {
        let mut m = Mat::identity(self, n);
        m.set(i, j, self.add(m.get(i, j), c));
        m
    }

    /// Coerce a matrix over the rational ring with the same `p^K` into `self`.
    pub fn embed(&self, a: &Mat) -> Mat {
        Mat::from_fn(a.n, |i, j| self.from_int(a.get(i, j).0 as i64))
    }

    /// Entry-wise reduction to a lower precision.
    pub fn mat_reduce_to(&self, a: &Mat, target: &Ring) -> Mat {
        Mat::from_fn(a.n, |i, j| self.reduce_to(a.get(i, j), target))
    }

    pub fn det(&self, a: &Mat) -> Elem {
        let rows: Vec<Vec<Elem>> = (0..a.n).map(|i| a.row(i).to_vec()).collect();
        determinant(self, &rows)
    }

    /// Inverse by Gauss-Jordan elimination with unit pivots. The split model
    /// is a product of two local rings, so it is handled componentwise.
    pub fn mat_inverse(&self, a: &Mat) -> Result<Mat> {
        if let RingKind::Split = self.kind() {
            let base = Ring::new(self.spec().base())?;
            let first = base.mat_inverse(&Mat::from_fn(a.n, |i, j| Elem(a.get(i, j).0, 0)))?;
            let second = base.mat_inverse(&Mat::from_fn(a.n, |i, j| Elem(a.get(i, j).1, 0)))?;
            return Ok(Mat::from_fn(a.n, |i, j| Elem(first.get(i, j).0, second.get(i, j).0)));
        }
        let n = a.n;
        let mut m = a.clone();
        let mut inv = Mat::identity(self, n);
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| self.is_unit(m.get(r, col)))
                .ok_or_else(|| Error::NonUnit("matrix is not invertible".into()))?;
            if pivot != col {
                for j in 0..n {
                    m.data.swap(pivot * n + j, col * n + j);
                    inv.data.swap(pivot * n + j, col * n + j);
                }
            }
            let c = self.invert(m.get(col, col))?;
            for j in 0..n {
                m.set(col, j, self.mul(c, m.get(col, j)));
                inv.set(col, j, self.mul(c, inv.get(col, j)));
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = m.get(r, col);
                if f == Elem(0, 0) {
                    continue;
                }
                for j in 0..n {
                    m.set(r, j, self.sub(m.get(r, j), self.mul(f, m.get(col, j))));
                    inv.set(r, j, self.sub(inv.get(r, j), self.mul(f, inv.get(col, j))));
                }
            }
        }
        Ok(inv)
    }

    /// Matrix of the `j`-th exterior power on lexicographically ordered
    /// `j`-subsets of the standard basis.
    pub fn exterior_power(&self, a: &Mat, j: usize) -> Mat {
        let rows: Vec<Vec<Elem>> = (0..a.n).map(|i| a.row(i).to_vec()).collect();
        Mat::from_rows(exterior_power(self, &rows, j))
    }
}

/// The operations needed by the generic determinant and exterior power.
pub trait CommRing {
    type El: Clone + PartialEq;
    fn zero(&self) -> Self::El;
    fn one(&self) -> Self::El;
    fn add(&self, a: &Self::El, b: &Self::El) -> Self::El;
    fn sub(&self, a: &Self::El, b: &Self::El) -> Self::El;
    fn mul(&self, a: &Self::El, b: &Self::El) -> Self::El;
}

impl CommRing for Ring {
    type El = Elem;
    fn zero(&self) -> Elem {
        Ring::zero(self)
    }
    fn one(&self) -> Elem {
        Ring::one(self)
    }
    fn add(&self, a: &Elem, b: &Elem) -> Elem {
        Ring::add(self, *a, *b)
    }
    fn sub(&self, a: &Elem, b: &Elem) -> Elem {
        Ring::sub(self, *a, *b)
    }
    fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        Ring::mul(self, *a, *b)
    }
}

/// The ring of integers with arbitrary-precision coefficients.
#[derive(Clone, Copy, Debug, Default)]
pub struct Integers;

impl CommRing for Integers {
    type El = BigInt;
    fn zero(&self) -> BigInt {
        BigInt::zero()
    }
    fn one(&self) -> BigInt {
        BigInt::one()
    }
    fn add(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a + b
    }
    fn sub(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a - b
    }
    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a * b
    }
}

/// Determinant by cofactor expansion along the first row; the matrices here
/// never exceed 6 x 6.
pub fn determinant<R: CommRing>(ring: &R, m: &[Vec<R::El>]) -> R::El {
    let n = m.len();
    match n {
        0 => ring.one(),
        1 => m[0][0].clone(),
        2 => ring.sub(&ring.mul(&m[0][0], &m[1][1]), &ring.mul(&m[0][1], &m[1][0])),
        _ => {
            let mut acc = ring.zero();
            for c in 0..n {
                if m[0][c] == ring.zero() {
                    continue;
                }
                let minor: Vec<Vec<R::El>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, x)| x.clone()).collect())
                    .collect();
                let term = ring.mul(&m[0][c], &determinant(ring, &minor));
                acc = if c % 2 == 0 { ring.add(&acc, &term) } else { ring.sub(&acc, &term) };
            }
            acc
        }
    }
}

/// All `j`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, j: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, j: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == j {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, j, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, j, &mut Vec::new(), &mut out);
    out
}

/// Matrix of `wedge^j m`: entry `(I, J)` is the minor on rows `I`, columns `J`.
pub fn exterior_power<R: CommRing>(ring: &R, m: &[Vec<R::El>], j: usize) -> Vec<Vec<R::El>> {
    let basis = subsets(m.len(), j);
    basis
        .iter()
        .map(|rows| {
            basis
                .iter()
                .map(|cols| {
                    let minor: Vec<Vec<R::El>> =
                        rows.iter().map(|&r| cols.iter().map(|&c| m[r][c].clone()).collect()).collect();
                    determinant(ring, &minor)
                })
                .collect()
        })
        .collect()
}

/// Product of two generic square matrices.
pub fn generic_mul<R: CommRing>(ring: &R, a: &[Vec<R::El>], b: &[Vec<R::El>]) -> Vec<Vec<R::El>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(ring.zero(), |acc, k| ring.add(&acc, &ring.mul(&a[i][k], &b[k][j]))))
                .collect()
        })
        .collect()
}
