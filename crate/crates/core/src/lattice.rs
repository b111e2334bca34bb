//! Exact integer and rational matrices acting on frequency lattices.

use std::fmt;

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{operator_norm, ComplexMatrix};

pub type Rational = Ratio<i128>;

/// Square integer matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntMatrix {
    rows: Vec<Vec<i64>>,
}

impl IntMatrix {
    pub fn new(rows: Vec<Vec<i64>>) -> Result<Self> {
        let p = rows.len();
        if p == 0 || rows.iter().any(|r| r.len() != p) {
            return Err(Error::DimensionMismatch(
                "integer matrix must be square and nonempty".into(),
            ));
        }
        Ok(Self { rows })
    }

    /// Row-major entries of a `p×p` matrix.
    pub fn from_row_major(p: usize, entries: &[i64]) -> Result<Self> {
        if p == 0 || entries.len() != p * p {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {p}x{p} matrix",
                entries.len()
            )));
        }
        Self::new(entries.chunks(p).map(<[i64]>::to_vec).collect())
    }

    pub fn scalar(p: usize, c: i64) -> Self {
        Self {
            rows: (0..p)
                .map(|i| (0..p).map(|j| if i == j { c } else { 0 }).collect())
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    pub fn transpose(&self) -> Self {
        let p = self.dim();
        Self {
            rows: (0..p)
                .map(|i| (0..p).map(|j| self.rows[j][i]).collect())
                .collect(),
        }
    }

    /// Exact determinant (fraction-free elimination).
    pub fn det(&self) -> i128 {
        let p = self.dim();
        let mut m: Vec<Vec<i128>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&x| x as i128).collect())
            .collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..p {
            if m[k][k] == 0 {
                match (k + 1..p).find(|&i| m[i][k] != 0) {
                    Some(i) => {
                        m.swap(i, k);
                        sign = -sign;
                    }
                    None => return 0,
                }
            }
            for i in k + 1..p {
                for j in k + 1..p {
                    m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
                }
            }
            prev = m[k][k];
        }
        sign * m[p - 1][p - 1]
    }

    pub fn to_rational(&self) -> RatMatrix {
        RatMatrix {
            rows: self
                .rows
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|&x| Rational::from_integer(x as i128))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn apply(&self, v: &[i64]) -> Vec<i64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .rows
            .iter()
            .map(|r| {
                format!(
                    "[{}]",
                    r.iter().map(i64::to_string).collect::<Vec<_>>().join(",")
                )
            })
            .collect();
        write!(f, "[{}]", rows.join(","))
    }
}

/// Square matrix with exact rational entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatMatrix {
    rows: Vec<Vec<Rational>>,
}

impl RatMatrix {
    pub fn identity(p: usize) -> Self {
        Self {
            rows: (0..p)
                .map(|i| {
                    (0..p)
                        .map(|j| {
                            if i == j {
                                Rational::one()
                            } else {
                                Rational::zero()
                            }
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> Rational {
        self.rows[i][j]
    }

    pub fn transpose(&self) -> Self {
        let p = self.dim();
        Self {
            rows: (0..p)
                .map(|i| (0..p).map(|j| self.rows[j][i]).collect())
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let p = self.dim();
        Self {
            rows: (0..p)
                .map(|i| {
                    (0..p)
                        .map(|j| (0..p).map(|k| self.rows[i][k] * other.rows[k][j]).sum())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::identity(self.dim()), |acc, _| acc.mul(self))
    }

    /// Gauss-Jordan inverse.
    pub fn inverse(&self) -> Result<Self> {
        let p = self.dim();
        let mut a = self.rows.clone();
        let mut inv = Self::identity(p).rows;
        for col in 0..p {
            let pivot = (col..p)
                .find(|&r| !a[r][col].is_zero())
                .ok_or_else(|| Error::InvalidArgument("singular matrix".into()))?;
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let d = a[col][col];
            for j in 0..p {
                a[col][j] /= d;
                inv[col][j] /= d;
            }
            for r in 0..p {
                if r != col && !a[r][col].is_zero() {
                    let factor = a[r][col];
                    for j in 0..p {
                        let (ac, ic) = (a[col][j], inv[col][j]);
                        a[r][j] -= factor * ac;
                        inv[r][j] -= factor * ic;
                    }
                }
            }
        }
        Ok(Self { rows: inv })
    }

    pub fn apply(&self, v: &Frequency) -> Frequency {
        Frequency(
            self.rows
                .iter()
                .map(|r| r.iter().zip(&v.0).map(|(a, b)| a * b).sum())
                .collect(),
        )
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(rational_to_f64).collect())
            .collect()
    }

    /// Spectral norm, computed in floating point.
    pub fn spectral_norm(&self) -> f64 {
        let p = self.dim();
        let data = self
            .to_f64_rows()
            .into_iter()
            .flatten()
            .map(|x| Complex64::new(x, 0.0))
            .collect();
        operator_norm(&ComplexMatrix::from_vec(p, p, data).expect("square"))
    }
}

pub fn rational_to_f64(x: &Rational) -> f64 {
    x.numer().to_f64().unwrap() / x.denom().to_f64().unwrap()
}

/// Frequency vector with exact rational coordinates.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Frequency(pub Vec<Rational>);

impl Frequency {
    pub fn integer(k: &[i64]) -> Self {
        Self(
            k.iter()
                .map(|&x| Rational::from_integer(x as i128))
                .collect(),
        )
    }

    pub fn zero(p: usize) -> Self {
        Self(vec![Rational::zero(); p])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn is_integral(&self) -> bool {
        self.0.iter().all(Ratio::is_integer)
    }

    /// Exact squared Euclidean length.
    pub fn norm_sqr(&self) -> Rational {
        self.0.iter().map(|x| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        rational_to_f64(&self.norm_sqr()).sqrt()
    }

    pub fn max_abs(&self) -> Rational {
        self.0
            .iter()
            .map(Signed::abs)
            .max()
            .unwrap_or_else(Rational::zero)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(rational_to_f64).collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Fractional part in each coordinate, landing in `[0, 1)^p`.
    pub fn fract(&self) -> Self {
        Self(self.0.iter().map(|x| x - x.floor()).collect())
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}
