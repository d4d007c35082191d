//! Exact rational intersection theory on a finite-rank lattice.
//!
//! Everything here is exact: coefficients are [`BigRational`] and the only
//! matrix algorithms are fraction-free eliminations over [`BigInt`].

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};

use num::bigint::BigInt;
use num::integer::Integer;
use num::rational::BigRational;
use num::traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact rational number in canonical form (positive denominator, reduced).
pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("lattice mismatch: {left} vs {right}")]
    Mismatch { left: LatticeId, right: LatticeId },
    #[error("class has {got} coefficients but lattice rank is {rank}")]
    RankMismatch { got: usize, rank: usize },
    #[error("empty curve list")]
    Empty,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: matrix has {rows} rows, right-hand side has {rhs}")]
    DimensionMismatch { rows: usize, rhs: usize },
    #[error("singular matrix")]
    Singular,
    #[error("invalid rational literal {0:?}")]
    BadRational(String),
}

/// Shorthand for `n/d`. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"` or `"p"`; decimal and exponent notation are rejected.
pub fn parse_rational(text: &str) -> Result<Rational, LatticeError> {
    let bad = || LatticeError::BadRational(text.to_string());
    let is_int = |s: &str| {
        let digits = s.strip_prefix('-').unwrap_or(s);
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    if !is_int(num) || !is_int(den) || den.starts_with('-') {
        return Err(bad());
    }
    let n: BigInt = num.parse().map_err(|_| bad())?;
    let d: BigInt = den.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(n, d))
}

/// Identifies the lattice a class lives in: the tower level plus a
/// fingerprint of the Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeId {
    pub level: usize,
    pub fingerprint: u64,
}

impl fmt::Display for LatticeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "level{}#{:016x}", self.level, self.fingerprint)
    }
}

/// Dense row-major matrix of rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rational>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, entries: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    /// Builds a matrix from rows. Panics on ragged input.
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_cols), "ragged matrix rows");
        Matrix { rows: n_rows, cols: n_cols, entries: rows.into_iter().flatten().collect() }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Rational) {
        self.entries[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Principal submatrix on the given index set.
    pub fn principal(&self, idx: &[usize]) -> Matrix {
        Matrix::from_rows(
            idx.iter().map(|&i| idx.iter().map(|&j| self.get(i, j).clone()).collect()).collect(),
        )
    }
}

/// Symmetric bilinear form on `Q^rank`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntersectionForm {
    id: LatticeId,
    gram: Matrix,
}

impl IntersectionForm {
    /// Builds a form for tower level `level`. The Gram matrix must be symmetric.
    pub fn new(level: usize, gram: Matrix) -> Result<Self, LatticeError> {
        if !gram.is_square() {
            return Err(LatticeError::NotSquare { rows: gram.rows(), cols: gram.cols() });
        }
        if !gram.is_symmetric() {
            return Err(LatticeError::NotSymmetric);
        }
        let mut hasher = DefaultHasher::new();
        gram.rows().hash(&mut hasher);
        gram.entries.hash(&mut hasher);
        let id = LatticeId { level, fingerprint: hasher.finish() };
        Ok(IntersectionForm { id, gram })
    }

    pub fn id(&self) -> LatticeId {
        self.id
    }

    pub fn rank(&self) -> usize {
        self.gram.rows()
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn zero(&self) -> DivisorClass {
        DivisorClass { lattice: self.id, coeffs: vec![Rational::zero(); self.rank()] }
    }

    pub fn basis(&self, i: usize) -> DivisorClass {
        let mut c = self.zero();
        c.coeffs[i] = Rational::one();
        c
    }

    /// Wraps raw coordinates as a class of this lattice.
    pub fn class(&self, coeffs: Vec<Rational>) -> Result<DivisorClass, LatticeError> {
        if coeffs.len() != self.rank() {
            return Err(LatticeError::RankMismatch { got: coeffs.len(), rank: self.rank() });
        }
        Ok(DivisorClass { lattice: self.id, coeffs })
    }

    pub fn class_i64(&self, coeffs: &[i64]) -> Result<DivisorClass, LatticeError> {
        self.class(coeffs.iter().map(|&c| int(c)).collect())
    }

    pub fn intersect(&self, a: &DivisorClass, b: &DivisorClass) -> Result<Rational, LatticeError> {
        intersect(a, b, self)
    }

    pub fn square(&self, a: &DivisorClass) -> Result<Rational, LatticeError> {
        intersect(a, a, self)
    }
}

/// A divisor class: coordinates in the basis of one lattice.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DivisorClass {
    lattice: LatticeId,
    coeffs: Vec<Rational>,
}

impl DivisorClass {
    pub fn lattice(&self) -> LatticeId {
        self.lattice
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    fn same_lattice(&self, other: &DivisorClass) -> Result<(), LatticeError> {
        if self.lattice != other.lattice {
            return Err(LatticeError::Mismatch { left: self.lattice, right: other.lattice });
        }
        Ok(())
    }

    pub fn add(&self, other: &DivisorClass) -> Result<DivisorClass, LatticeError> {
        self.same_lattice(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(DivisorClass { lattice: self.lattice, coeffs })
    }

    pub fn sub(&self, other: &DivisorClass) -> Result<DivisorClass, LatticeError> {
        self.same_lattice(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(DivisorClass { lattice: self.lattice, coeffs })
    }

    pub fn scale(&self, r: &Rational) -> DivisorClass {
        DivisorClass { lattice: self.lattice, coeffs: self.coeffs.iter().map(|a| a * r).collect() }
    }

    pub fn neg(&self) -> DivisorClass {
        DivisorClass { lattice: self.lattice, coeffs: self.coeffs.iter().map(|a| -a).collect() }
    }

    /// `self + r * other`.
    pub fn add_scaled(&self, r: &Rational, other: &DivisorClass) -> Result<DivisorClass, LatticeError> {
        self.add(&other.scale(r))
    }

    /// Re-labels the class into another lattice with the given coordinates
    /// layout; used by tower pullback/pushforward.
    pub(crate) fn relabel(lattice: LatticeId, coeffs: Vec<Rational>) -> DivisorClass {
        DivisorClass { lattice, coeffs }
    }
}

impl fmt::Display for DivisorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// `aᵀ·G·b`.
pub fn intersect(a: &DivisorClass, b: &DivisorClass, form: &IntersectionForm) -> Result<Rational, LatticeError> {
    for c in [a, b] {
        if c.lattice != form.id {
            return Err(LatticeError::Mismatch { left: c.lattice, right: form.id });
        }
    }
    let gb = form.gram.mul_vec(&b.coeffs);
    Ok(a.coeffs.iter().zip(&gb).map(|(x, y)| x * y).sum())
}

pub fn gram_submatrix(curves: &[DivisorClass], form: &IntersectionForm) -> Result<Matrix, LatticeError> {
    if curves.is_empty() {
        return Err(LatticeError::Empty);
    }
    let n = curves.len();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = intersect(&curves[i], &curves[j], form)?;
            m.set(j, i, v.clone());
            m.set(i, j, v);
        }
    }
    Ok(m)
}

fn lcm_of_denominators<'a>(values: impl Iterator<Item = &'a Rational>) -> BigInt {
    values.fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Scales each row by the lcm of its denominators.
fn integer_rows(m: &Matrix, rhs: Option<&[Rational]>) -> Vec<Vec<BigInt>> {
    (0..m.rows())
        .map(|i| {
            let extra = rhs.map(|r| &r[i]);
            let l = lcm_of_denominators(m.row(i).iter().chain(extra));
            m.row(i)
                .iter()
                .chain(extra)
                .map(|v| (v * Rational::from_integer(l.clone())).to_integer())
                .collect()
        })
        .collect()
}

/// Leading principal minors `d_1, …, d_k` of a square matrix, computed by
/// Bareiss elimination without pivoting. Stops after the first zero minor.
pub fn leading_principal_minors(m: &Matrix) -> Result<Vec<Rational>, LatticeError> {
    if !m.is_square() {
        return Err(LatticeError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let n = m.rows();
    // One common scale keeps minors of L·M equal to L^k times minors of M.
    let l = lcm_of_denominators(m.entries.iter());
    let lr = Rational::from_integer(l.clone());
    let mut a: Vec<Vec<BigInt>> =
        (0..n).map(|i| m.row(i).iter().map(|v| (v * &lr).to_integer()).collect()).collect();
    let mut minors = Vec::with_capacity(n);
    let mut prev = BigInt::one();
    let mut scale = BigInt::one();
    for k in 0..n {
        let pivot = a[k][k].clone();
        scale *= &l;
        minors.push(Rational::new(pivot.clone(), scale.clone()));
        if pivot.is_zero() {
            break;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&pivot * &a[i][j] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = pivot;
    }
    Ok(minors)
}

/// Sylvester's criterion: every leading principal minor `d_k` has sign `(-1)^k`.
pub fn is_negative_definite(m: &Matrix) -> Result<bool, LatticeError> {
    if !m.is_symmetric() {
        return Err(if m.is_square() {
            LatticeError::NotSymmetric
        } else {
            LatticeError::NotSquare { rows: m.rows(), cols: m.cols() }
        });
    }
    let minors = leading_principal_minors(m)?;
    if minors.len() < m.rows() {
        return Ok(false);
    }
    Ok(minors.iter().enumerate().all(|(k, d)| if k % 2 == 0 { d.is_negative() } else { d.is_positive() }))
}

/// Solves `m·x = rhs` exactly by fraction-free elimination with row pivoting.
pub fn solve_exact(m: &Matrix, rhs: &[Rational]) -> Result<Vec<Rational>, LatticeError> {
    if !m.is_square() {
        return Err(LatticeError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    if rhs.len() != m.rows() {
        return Err(LatticeError::DimensionMismatch { rows: m.rows(), rhs: rhs.len() });
    }
    let n = m.rows();
    let mut a = integer_rows(m, Some(rhs));
    let mut prev = BigInt::one();
    for k in 0..n {
        let p = (k..n).find(|&i| !a[i][k].is_zero()).ok_or(LatticeError::Singular)?;
        a.swap(k, p);
        let pivot = a[k][k].clone();
        for i in k + 1..n {
            for j in k + 1..=n {
                a[i][j] = (&pivot * &a[i][j] - &a[i][k] * &a[k][j]) / &prev;
            }
            a[i][k] = BigInt::zero();
        }
        prev = pivot;
    }
    let mut x = vec![Rational::zero(); n];
    for i in (0..n).rev() {
        let mut acc = Rational::from_integer(a[i][n].clone());
        for j in i + 1..n {
            acc -= Rational::from_integer(a[i][j].clone()) * &x[j];
        }
        x[i] = acc / Rational::from_integer(a[i][i].clone());
    }
    Ok(x)
}

/// Counts of positive, negative and zero squares in a diagonalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

/// Sylvester inertia of a symmetric matrix by exact congruence diagonalization.
pub fn inertia(m: &Matrix) -> Result<Inertia, LatticeError> {
    if !m.is_symmetric() {
        return Err(LatticeError::NotSymmetric);
    }
    let n = m.rows();
    let mut a = m.to_rows();
    let mut out = Inertia { positive: 0, negative: 0, zero: 0 };
    let mut k = 0;
    while k < n {
        let pivot = (k..n).find(|&i| !a[i][i].is_zero());
        let pivot = match pivot {
            Some(p) => p,
            None => {
                // Zero diagonal: fold an off-diagonal entry onto the diagonal.
                let off = (k..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).find(|&(i, j)| !a[i][j].is_zero());
                match off {
                    None => {
                        out.zero += n - k;
                        break;
                    }
                    Some((i, j)) => {
                        for t in 0..n {
                            let v = a[i][t].clone() + &a[j][t];
                            a[i][t] = v;
                        }
                        for t in 0..n {
                            let v = a[t][i].clone() + &a[t][j];
                            a[t][i] = v;
                        }
                        i
                    }
                }
            }
        };
        a.swap(k, pivot);
        for row in a.iter_mut() {
            row.swap(k, pivot);
        }
        let d = a[k][k].clone();
        for i in k + 1..n {
            let f = &a[i][k] / &d;
            for j in k..n {
                let v = &a[i][j] - &f * &a[k][j];
                a[i][j] = v;
            }
        }
        for j in k + 1..n {
            a[k][j] = Rational::zero();
        }
        for i in k + 1..n {
            a[i][k] = Rational::zero();
        }
        if d.is_positive() {
            out.positive += 1;
        } else {
            out.negative += 1;
        }
        k += 1;
    }
    Ok(out)
}
