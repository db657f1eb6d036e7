//! Dense exact matrices over ℤ and ℚ.
//!
//! Sizes in this crate stay small (a few dozen rows at most), so the
//! representation is a plain row-major `Vec` and every operation clones.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Int = BigInt;
pub type Rat = BigRational;

pub fn int(n: i64) -> Int {
    Int::from(n)
}

pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(Int::from(p), Int::from(q))
}

pub fn rat_int(n: &Int) -> Rat {
    Rat::from_integer(n.clone())
}

/// Parses `"p/q"` or `"p"`.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: Int = p.trim().parse().ok()?;
            let q: Int = q.trim().parse().ok()?;
            if q.is_zero() {
                None
            } else {
                Some(Rat::new(p, q))
            }
        }
        None => s.parse::<Int>().ok().map(Rat::from_integer),
    }
}

pub fn fmt_rat(q: &Rat) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn rat_to_f64(q: &Rat) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

/// Floor of a rational.
pub fn rat_floor(q: &Rat) -> Int {
    q.numer().div_floor(q.denom())
}

/// Representative of `q` mod 1 in `[0,1)`.
pub fn frac(q: &Rat) -> Rat {
    q - rat_int(&rat_floor(q))
}

pub fn lcm_denoms<'a>(it: impl IntoIterator<Item = &'a Rat>) -> Int {
    it.into_iter().fold(Int::one(), |acc, q| acc.lcm(q.denom()))
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).fold(Rat::zero(), |acc, (x, y)| acc + x * y)
}

pub fn vec_add(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vec_sub(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vec_scale(a: &[Rat], s: &Rat) -> Vec<Rat> {
    a.iter().map(|x| x * s).collect()
}

pub fn int_vec_to_rat(v: &[Int]) -> Vec<Rat> {
    v.iter().map(rat_int).collect()
}

pub fn rat_vec_to_int(v: &[Rat]) -> Option<Vec<Int>> {
    v.iter().map(|q| q.is_integer().then(|| q.to_integer())).collect()
}

pub trait Scalar:
    Clone
    + PartialEq
    + Zero
    + One
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Neg<Output = Self>
{
}

impl Scalar for Int {}
impl Scalar for Rat {}
impl Scalar for f64 {}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type IntMatrix = Mat<Int>;
pub type RatMatrix = Mat<Rat>;

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> Mat<T> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| T::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        Mat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    /// Builds a `len × k` matrix whose columns are the given vectors.
    pub fn from_cols(len: usize, cols: &[Vec<T>]) -> Self {
        Self::from_fn(len, cols.len(), |i, j| cols[j][i].clone())
    }

    pub fn diag(entries: &[T]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| if i == j { entries[i].clone() } else { T::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> &[T] {
        &self.data
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn col_vecs(&self) -> Vec<Vec<T>> {
        (0..self.cols).map(|j| self.col(j)).collect()
    }

    pub fn row_vecs(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "shape mismatch in product");
        Self::from_fn(self.rows, o.cols, |i, j| {
            let mut s = T::zero();
            for k in 0..self.cols {
                s = s + self[(i, k)].clone() * o[(k, j)].clone();
            }
            s
        })
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "shape mismatch in matrix-vector product");
        (0..self.rows)
            .map(|i| {
                let mut s = T::zero();
                for k in 0..self.cols {
                    s = s + self[(i, k)].clone() * v[k].clone();
                }
                s
            })
            .collect()
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)].clone() + o[(i, j)].clone())
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)].clone() - o[(i, j)].clone())
    }

    pub fn neg(&self) -> Self {
        self.map(|x| -x.clone())
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|x| x.clone() * s.clone())
    }

    pub fn map<S>(&self, f: impl Fn(&T) -> S) -> Mat<S> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn hcat(&self, o: &Self) -> Self {
        assert_eq!(self.rows, o.rows);
        Self::from_fn(self.rows, self.cols + o.cols, |i, j| {
            if j < self.cols {
                self[(i, j)].clone()
            } else {
                o[(i, j - self.cols)].clone()
            }
        })
    }

    pub fn vcat(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.cols);
        Self::from_fn(self.rows + o.rows, self.cols, |i, j| {
            if i < self.rows {
                self[(i, j)].clone()
            } else {
                o[(i - self.rows, j)].clone()
            }
        })
    }

    pub fn block_diag(&self, o: &Self) -> Self {
        Self::from_fn(self.rows + o.rows, self.cols + o.cols, |i, j| {
            if i < self.rows && j < self.cols {
                self[(i, j)].clone()
            } else if i >= self.rows && j >= self.cols {
                o[(i - self.rows, j - self.cols)].clone()
            } else {
                T::zero()
            }
        })
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])].clone())
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), self.cols, |i, j| self[(idx[i], j)].clone())
    }

    pub fn sub_block(&self, r0: usize, c0: usize, r: usize, c: usize) -> Self {
        Self::from_fn(r, c, |i, j| self[(r0 + i, c0 + j)].clone())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_skew(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| self[(i, j)].clone() + self[(j, i)].clone() == T::zero())
            })
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    /// row[a] += s · row[b]
    pub fn add_row_multiple(&mut self, a: usize, b: usize, s: &T) {
        for j in 0..self.cols {
            let v = self[(b, j)].clone() * s.clone();
            self[(a, j)] = self[(a, j)].clone() + v;
        }
    }

    /// col[a] += s · col[b]
    pub fn add_col_multiple(&mut self, a: usize, b: usize, s: &T) {
        for i in 0..self.rows {
            let v = self[(i, b)].clone() * s.clone();
            self[(i, a)] = self[(i, a)].clone() + v;
        }
    }

    pub fn neg_row(&mut self, a: usize) {
        for j in 0..self.cols {
            self[(a, j)] = -self[(a, j)].clone();
        }
    }

    pub fn neg_col(&mut self, a: usize) {
        for i in 0..self.rows {
            self[(i, a)] = -self[(i, a)].clone();
        }
    }

    /// The bilinear value `xᵀ·M·y`.
    pub fn bilinear(&self, x: &[T], y: &[T]) -> T {
        let my = self.mul_vec(y);
        x.iter().zip(&my).fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
    }
}

impl IntMatrix {
    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect())
    }

    pub fn to_rat(&self) -> RatMatrix {
        self.map(rat_int)
    }

    pub fn det(&self) -> Int {
        self.to_rat().det().to_integer()
    }

    pub fn is_unimodular(&self) -> bool {
        self.is_square() && self.det().abs().is_one()
    }
}

impl RatMatrix {
    pub fn from_i64(rows: &[&[i64]]) -> Self {
        IntMatrix::from_i64(rows).to_rat()
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|q| q.is_integer())
    }

    pub fn to_int(&self) -> Option<IntMatrix> {
        self.is_integral().then(|| self.map(|q| q.to_integer()))
    }

    pub fn common_denominator(&self) -> Int {
        lcm_denoms(self.data.iter())
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| rat_to_f64(&self[(i, j)]))
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (RatMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else { continue };
            m.swap_rows(r, p);
            let inv = m[(r, c)].recip();
            for j in 0..m.cols {
                m[(r, j)] = &m[(r, j)] * &inv;
            }
            for i in 0..m.rows {
                if i != r && !m[(i, c)].is_zero() {
                    let f = -m[(i, c)].clone();
                    m.add_row_multiple(i, r, &f);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right null space.
    pub fn kernel(&self) -> Vec<Vec<Rat>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![Rat::zero(); self.cols];
                v[f] = Rat::one();
                for (row, &p) in pivots.iter().enumerate() {
                    v[p] = -r[(row, f)].clone();
                }
                v
            })
            .collect()
    }

    /// Some solution of `M x = b`, if one exists.
    pub fn solve(&self, b: &[Rat]) -> Option<Vec<Rat>> {
        let aug = self.hcat(&RatMatrix::from_cols(self.rows, &[b.to_vec()]));
        let (r, pivots) = aug.rref();
        if pivots.contains(&self.cols) {
            return None;
        }
        let mut x = vec![Rat::zero(); self.cols];
        for (row, &p) in pivots.iter().enumerate() {
            x[p] = r[(row, self.cols)].clone();
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<RatMatrix> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        if n == 0 {
            return Some(RatMatrix::zeros(0, 0));
        }
        let (r, pivots) = self.hcat(&RatMatrix::identity(n)).rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        Some(r.sub_block(0, n, n, n))
    }

    pub fn det(&self) -> Rat {
        assert!(self.is_square());
        let mut m = self.clone();
        let n = m.rows;
        let mut det = Rat::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m[(i, c)].is_zero()) else { return Rat::zero() };
            if p != c {
                m.swap_rows(p, c);
                det = -det;
            }
            det = &det * &m[(c, c)];
            let inv = m[(c, c)].recip();
            for i in c + 1..n {
                if !m[(i, c)].is_zero() {
                    let f = -(&m[(i, c)] * &inv);
                    m.add_row_multiple(i, c, &f);
                }
            }
        }
        det
    }
}

impl<T: fmt::Display> fmt::Debug for Mat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.data[i * self.cols + j])?;
            }
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trip() {
        let m = RatMatrix::from_i64(&[&[2, 1], &[1, 1]]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), RatMatrix::identity(2));
        assert_eq!(m.det(), rat(1, 1));
    }

    #[test]
    fn kernel_is_annihilated() {
        let m = RatMatrix::from_i64(&[&[1, 2, 3], &[2, 4, 6]]);
        let k = m.kernel();
        assert_eq!(k.len(), 2);
        for v in k {
            assert!(m.mul_vec(&v).iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn parse_and_print() {
        assert_eq!(parse_rat("-3/6"), Some(rat(-1, 2)));
        assert_eq!(fmt_rat(&rat(4, 2)), "2");
        assert_eq!(parse_rat("1/0"), None);
        assert_eq!(frac(&rat(-1, 3)), rat(2, 3));
    }
}
