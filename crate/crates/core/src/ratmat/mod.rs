//! Exact matrices over `Q` with spectral-norm enclosures and the lattice height.

mod height;
mod json;
mod norm;
pub mod poly;
mod random;

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub use height::{height_profile, height_upper, HeightProfile};
pub use json::{format_rational, parse_rational};
pub use norm::{spectral_norm_enclosure, NormEnclosure};
pub use random::{random_unimodular, random_vector};

/// Per-entry bit budget (numerator plus denominator bits) for exact matrix arithmetic.
pub const DEFAULT_ENTRY_BIT_BUDGET: u64 = 1 << 24;

/// Largest supported dimension.
pub const MAX_DIM: usize = 6;

/// A square matrix with exact rational entries, stored row-major.
///
/// Columns are the lattice generators `g e_i` when the matrix is used as a basis.
#[derive(Clone, Debug)]
pub struct RationalMatrix {
    dim: usize,
    entries: Vec<BigRational>,
    unimodular: bool,
}

impl PartialEq for RationalMatrix {
    fn eq(&self, o: &Self) -> bool {
        self.dim == o.dim && self.entries == o.entries
    }
}

impl Eq for RationalMatrix {}

pub(crate) fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn entry_bits(x: &BigRational) -> u64 {
    x.numer().bits() + x.denom().bits()
}

impl RationalMatrix {
    fn check_dim(dim: usize) -> Result<()> {
        if dim < 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        Ok(())
    }

    /// Builds a matrix from rows; the unimodular tag is set iff the determinant is exactly 1.
    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Result<Self> {
        let dim = rows.len();
        Self::check_dim(dim)?;
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch(dim, row.len()));
            }
            entries.extend(row);
        }
        let mut m = RationalMatrix {
            dim,
            entries,
            unimodular: false,
        };
        m.unimodular = m.det().is_one();
        Ok(m)
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| {
                    r.iter()
                        .map(|&x| BigRational::from_integer(x.into()))
                        .collect()
                })
                .collect(),
        )
    }

    /// Rows of `(num, den)` pairs.
    pub fn from_ratio_rows(rows: &[&[(i64, i64)]]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&(n, d)| rat(n, d)).collect())
                .collect(),
        )
    }

    fn from_parts(dim: usize, entries: Vec<BigRational>, unimodular: bool) -> Self {
        RationalMatrix {
            dim,
            entries,
            unimodular,
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![BigRational::zero(); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = BigRational::one();
        }
        Self::from_parts(dim, entries, true)
    }

    /// `I + r E_{ij}` for `i != j` (0-based).
    pub fn elementary(dim: usize, i: usize, j: usize, r: BigRational) -> Self {
        assert!(
            i != j && i < dim && j < dim,
            "elementary matrix needs distinct indices"
        );
        let mut m = Self::identity(dim);
        m.entries[i * dim + j] = r;
        m
    }

    /// The shear `N_t = I + t E_{1,2}`.
    pub fn shear(dim: usize, t: BigRational) -> Self {
        Self::elementary(dim, 0, 1, t)
    }

    /// `diag(2^m, 2^-m, 1, ..., 1)`; `m` may be negative.
    pub fn diag_pow2(dim: usize, m: i64) -> Self {
        let p = BigInt::one() << m.unsigned_abs();
        let (a, b) = if m >= 0 {
            (
                BigRational::from_integer(p.clone()),
                BigRational::new(BigInt::one(), p),
            )
        } else {
            (
                BigRational::new(BigInt::one(), p.clone()),
                BigRational::from_integer(p),
            )
        };
        let mut e = Self::identity(dim);
        e.entries[0] = a;
        e.entries[dim + 1] = b;
        e
    }

    /// Diagonal matrix; tagged unimodular iff the product of the diagonal is 1.
    pub fn diag(values: Vec<BigRational>) -> Result<Self> {
        let dim = values.len();
        Self::check_dim(dim)?;
        let mut entries = vec![BigRational::zero(); dim * dim];
        let mut prod = BigRational::one();
        for (i, v) in values.into_iter().enumerate() {
            prod *= &v;
            entries[i * dim + i] = v;
        }
        Ok(Self::from_parts(dim, entries, prod.is_one()))
    }

    /// Signed cyclic permutation `e_i -> e_{i+1}`, `e_d -> (-1)^(d-1) e_1`, of determinant 1.
    pub fn signed_cycle(dim: usize) -> Self {
        let mut entries = vec![BigRational::zero(); dim * dim];
        for i in 0..dim - 1 {
            entries[(i + 1) * dim + i] = BigRational::one();
        }
        let s = if dim % 2 == 0 { -1 } else { 1 };
        entries[dim - 1] = BigRational::from_integer(s.into());
        Self::from_parts(dim, entries, true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_unimodular(&self) -> bool {
        self.unimodular
    }

    /// Returns `self` tagged unimodular, or an error if the determinant is not 1.
    pub fn into_unimodular(mut self) -> Result<Self> {
        if self.unimodular || self.det().is_one() {
            self.unimodular = true;
            Ok(self)
        } else {
            Err(Error::NotUnimodular)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[BigRational] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<BigRational>> {
        self.entries.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<BigRational> {
        (0..self.dim).map(|i| self.get(i, j).clone()).collect()
    }

    /// Largest numerator-plus-denominator bit size over all entries.
    pub fn max_entry_bits(&self) -> u64 {
        self.entries.iter().map(entry_bits).max().unwrap_or(0)
    }

    pub fn check_budget(&self, budget: u64) -> Result<()> {
        let needed = self.max_entry_bits();
        if needed > budget {
            Err(Error::BudgetExceeded { needed, budget })
        } else {
            Ok(())
        }
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.mul_with_budget(o, DEFAULT_ENTRY_BIT_BUDGET)
    }

    /// Exact product, failing before the multiplication when the estimated entry size
    /// would exceed `budget`.
    pub fn mul_with_budget(&self, o: &Self, budget: u64) -> Result<Self> {
        if self.dim != o.dim {
            return Err(Error::DimensionMismatch(self.dim, o.dim));
        }
        let n = self.dim;
        let estimate = self.max_entry_bits() + o.max_entry_bits();
        if estimate > budget {
            return Err(Error::BudgetExceeded {
                needed: estimate,
                budget,
            });
        }
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = BigRational::zero();
                for k in 0..n {
                    let a = &self.entries[i * n + k];
                    if a.is_zero() {
                        continue;
                    }
                    let b = &o.entries[k * n + j];
                    if b.is_zero() {
                        continue;
                    }
                    acc += a * b;
                }
                entries.push(acc);
            }
        }
        let m = Self::from_parts(n, entries, self.unimodular && o.unimodular);
        m.check_budget(budget)?;
        Ok(m)
    }

    pub fn mul_vec(&self, v: &[BigRational]) -> Vec<BigRational> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                let mut acc = BigRational::zero();
                for (k, x) in v.iter().enumerate() {
                    if !x.is_zero() {
                        acc += &self.entries[i * n + k] * x;
                    }
                }
                acc
            })
            .collect()
    }

    pub fn mul_int_vec(&self, v: &[BigInt]) -> Vec<BigRational> {
        let v: Vec<BigRational> = v
            .iter()
            .map(|x| BigRational::from_integer(x.clone()))
            .collect();
        self.mul_vec(&v)
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(self.entries[j * n + i].clone());
            }
        }
        Self::from_parts(n, entries, self.unimodular)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        if self.dim != o.dim {
            return Err(Error::DimensionMismatch(self.dim, o.dim));
        }
        let entries: Vec<BigRational> = self
            .entries
            .iter()
            .zip(&o.entries)
            .map(|(a, b)| a - b)
            .collect();
        let mut m = Self::from_parts(self.dim, entries, false);
        m.unimodular = m.det().is_one();
        Ok(m)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let entries: Vec<BigRational> = self.entries.iter().map(|a| a * c).collect();
        let mut m = Self::from_parts(self.dim, entries, false);
        m.unimodular = m.det().is_one();
        m
    }

    /// `aᵀ a`, the Gram matrix of the columns.
    pub fn gram(&self) -> Self {
        let n = self.dim;
        let mut entries = vec![BigRational::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let mut acc = BigRational::zero();
                for k in 0..n {
                    acc += &self.entries[k * n + i] * &self.entries[k * n + j];
                }
                entries[j * n + i] = acc.clone();
                entries[i * n + j] = acc;
            }
        }
        Self::from_parts(n, entries, false)
    }

    /// Exact determinant by fraction-free elimination over `Q`.
    pub fn det(&self) -> BigRational {
        let n = self.dim;
        let mut a = self.entries.clone();
        let mut det = BigRational::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&r| !a[r * n + c].is_zero()) else {
                return BigRational::zero();
            };
            if p != c {
                for k in 0..n {
                    a.swap(p * n + k, c * n + k);
                }
                det = -det;
            }
            let piv = a[c * n + c].clone();
            det *= &piv;
            for r in c + 1..n {
                if a[r * n + c].is_zero() {
                    continue;
                }
                let f = &a[r * n + c] / &piv;
                for k in c..n {
                    let t = &f * &a[c * n + k];
                    a[r * n + k] -= t;
                }
            }
        }
        det
    }

    /// Exact inverse by Gauss–Jordan elimination.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.dim;
        let mut a = self.entries.clone();
        let mut inv = Self::identity(n).entries;
        for c in 0..n {
            let p = (c..n)
                .find(|&r| !a[r * n + c].is_zero())
                .ok_or(Error::Singular)?;
            if p != c {
                for k in 0..n {
                    a.swap(p * n + k, c * n + k);
                    inv.swap(p * n + k, c * n + k);
                }
            }
            let piv = a[c * n + c].clone();
            for k in 0..n {
                a[c * n + k] /= &piv;
                inv[c * n + k] /= &piv;
            }
            for r in 0..n {
                if r == c || a[r * n + c].is_zero() {
                    continue;
                }
                let f = a[r * n + c].clone();
                for k in 0..n {
                    let t = &f * &a[c * n + k];
                    a[r * n + k] -= t;
                    let t = &f * &inv[c * n + k];
                    inv[r * n + k] -= t;
                }
            }
        }
        Ok(Self::from_parts(n, inv, self.unimodular))
    }

    /// `q(a)`: least common denominator of the entries.
    pub fn denominator_lcm(&self) -> BigUint {
        let mut l = BigInt::one();
        for e in &self.entries {
            if !e.denom().is_one() {
                l = l.lcm(e.denom());
            }
        }
        l.magnitude().clone()
    }

    pub fn max_abs_entry(&self) -> BigRational {
        self.entries
            .iter()
            .map(|e| e.abs())
            .max()
            .unwrap_or_else(BigRational::zero)
    }

    /// Squared Frobenius norm.
    pub fn frobenius_sq(&self) -> BigRational {
        self.entries.iter().map(|e| e * e).sum()
    }

    /// Largest squared column norm, a lower bound for `‖a‖²`.
    pub fn max_column_norm_sq(&self) -> BigRational {
        (0..self.dim)
            .map(|j| self.column(j).iter().map(|x| x * x).sum::<BigRational>())
            .max()
            .unwrap_or_else(BigRational::zero)
    }

    /// `true` when every entry is an integer.
    pub fn is_integral(&self) -> bool {
        self.entries.iter().all(|e| e.is_integer())
    }

    /// Matrix power by repeated squaring (negative exponents go through the inverse).
    pub fn pow(&self, k: i64) -> Result<Self> {
        let base = if k < 0 { self.inverse()? } else { self.clone() };
        let mut k = k.unsigned_abs();
        let mut acc = Self::identity(self.dim);
        let mut b = base;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&b)?;
            }
            k >>= 1;
            if k > 0 {
                b = b.mul(&b)?;
            }
        }
        Ok(acc)
    }
}

impl fmt::Display for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, row) in self.entries.chunks(self.dim).enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            for (j, e) in row.iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                f.write_str(&format_rational(e))?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}
