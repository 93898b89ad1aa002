//! Exact scalars, binomials, partitions, Frobenius coordinates and
//! polynomials in the row index.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::Error;

pub type Scalar = BigRational;

pub fn sc(n: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Scalar {
    Scalar::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `p` or `p/q`.
pub fn parse_scalar(s: &str) -> Option<Scalar> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(Scalar::new(p, q))
        }
        None => Some(Scalar::from_integer(s.parse().ok()?)),
    }
}

pub fn sign(e: i64) -> i64 {
    if e.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// n(n−1)…(n−k+1)/k! as an integer; n may be negative.
pub fn gbinom_int(n: i64, k: i64) -> BigInt {
    assert!(k >= 0);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for t in 0..k {
        num *= BigInt::from(n - t);
        den *= BigInt::from(t + 1);
    }
    num / den
}

pub fn gbinom(n: i64, k: i64) -> Result<Scalar, Error> {
    if k < 0 {
        return Err(Error::Domain(format!("gbinom: negative k = {k}")));
    }
    Ok(Scalar::from_integer(gbinom_int(n, k)))
}

/// Ordinary binomial, zero outside 0 ≤ k ≤ n.
pub fn binom(n: i64, k: i64) -> Scalar {
    if k < 0 || n < 0 || k > n {
        return Scalar::zero();
    }
    Scalar::from_integer(gbinom_int(n, k))
}

pub fn factorial(n: i64) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, b| a * BigInt::from(b))
}

/// n!/(n−k)! for 0 ≤ k; zero when k > n ≥ 0.
pub fn falling(n: i64, k: i64) -> Scalar {
    let mut r = BigInt::one();
    for t in 0..k {
        r *= BigInt::from(n - t);
    }
    Scalar::from_integer(r)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Partition(Vec<u32>);

impl Partition {
    pub fn new(mut parts: Vec<u32>) -> Self {
        parts.retain(|&p| p > 0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Partition(parts)
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn weight(&self) -> u32 {
        self.0.iter().sum()
    }

    /// k_j with 1-based j, zero past the last part.
    pub fn part(&self, j: usize) -> i64 {
        if j == 0 {
            return i64::MAX;
        }
        self.0.get(j - 1).map_or(0, |&p| p as i64)
    }

    /// Transposed diagram.
    pub fn dual(&self) -> Partition {
        let first = self.0.first().copied().unwrap_or(0);
        let parts = (1..=first)
            .map(|c| self.0.iter().filter(|&&p| p >= c).count() as u32)
            .collect();
        Partition(parts)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

/// All partitions of `m` in lexicographically descending order.
pub fn partitions(m: u32) -> Vec<Partition> {
    fn rec(rest: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if rest == 0 {
            out.push(Partition(cur.clone()));
            return;
        }
        for p in (1..=rest.min(max)).rev() {
            cur.push(p);
            rec(rest - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, m, &mut Vec::new(), &mut out);
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrobeniusCoords {
    pub xi: Vec<i64>,
    pub eta: Vec<i64>,
    pub bias: i64,
}

impl FrobeniusCoords {
    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty() && self.eta.is_empty()
    }

    pub fn is_valid(&self) -> bool {
        let dec = |v: &[i64]| v.windows(2).all(|w| w[0] > w[1]);
        self.eta.len() as i64 == self.xi.len() as i64 + self.bias
            && dec(&self.xi)
            && dec(&self.eta)
            && self.xi.last().map_or(true, |&x| x > 0)
            && self.eta.last().map_or(true, |&x| x >= 0)
    }
}

impl fmt::Display for FrobeniusCoords {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let j = |v: &[i64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "<({})|({})>", j(&self.xi), j(&self.eta))?;
        if self.bias != 0 {
            write!(f, "_{}", self.bias)?;
        }
        Ok(())
    }
}

pub fn frobenius(k: &Partition) -> FrobeniusCoords {
    biased_frobenius(k, 0)
}

/// Coordinates along the `i`-th diagonal.
///
/// The row count is l_i = #{j : k_j ≥ i + j}. For i ≥ 0 this is the number
/// of cells on the diagonal; for i < 0 it also counts the −i rows forced
/// above the diagonal, so η always has l_i + i ≥ 0 entries.
pub fn biased_frobenius(k: &Partition, i: i64) -> FrobeniusCoords {
    let d = k.dual();
    let mut l = 0usize;
    while k.part(l + 1) >= i + l as i64 + 1 {
        l += 1;
    }
    let xi = (1..=l).map(|j| k.part(j) - i - j as i64 + 1).collect();
    let leta = (l as i64 + i) as usize;
    let eta = (1..=leta).map(|j| d.part(j) + i - j as i64).collect();
    FrobeniusCoords { xi, eta, bias: i }
}

pub fn unfrobenius(c: &FrobeniusCoords) -> Result<Partition, Error> {
    if !c.is_valid() {
        return Err(Error::Domain(format!("invalid Frobenius coordinates {c}")));
    }
    let i = c.bias;
    let l = c.xi.len();
    let mut parts: Vec<i64> = c
        .xi
        .iter()
        .enumerate()
        .map(|(j, x)| x + i + j as i64)
        .collect();
    let cols: Vec<i64> = c
        .eta
        .iter()
        .enumerate()
        .map(|(c0, e)| e - i + c0 as i64 + 1)
        .collect();
    let mut j = l as i64 + 1;
    loop {
        let kj = cols.iter().filter(|&&h| h >= j).count() as i64;
        if kj == 0 {
            break;
        }
        parts.push(kj);
        j += 1;
    }
    let p = Partition::new(parts.iter().map(|&x| x.max(0) as u32).collect());
    if biased_frobenius(&p, i) != *c {
        return Err(Error::Domain(format!("Frobenius coordinates {c} do not come from a partition")));
    }
    Ok(p)
}

/// Polynomial in the row index with rational coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct IntPoly(Vec<Scalar>);

impl IntPoly {
    pub fn new(mut c: Vec<Scalar>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        IntPoly(c)
    }

    pub fn constant(c: Scalar) -> Self {
        IntPoly::new(vec![c])
    }

    pub fn zero() -> Self {
        IntPoly(Vec::new())
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    /// binom(i + m, m) as a polynomial in i.
    pub fn binom_shift(m: i64) -> Self {
        let mut p = IntPoly::constant(Scalar::one());
        for t in 1..=m {
            p = &p * &IntPoly::new(vec![sc(t), sc(1)]);
        }
        p.scale(&Scalar::from_integer(factorial(m)).recip())
    }

    pub fn eval(&self, i: i64) -> Scalar {
        let x = sc(i);
        self.0.iter().rev().fold(Scalar::zero(), |acc, c| acc * &x + c)
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        IntPoly::new(self.0.iter().map(|c| c * s).collect())
    }

    /// q(i + d).
    pub fn shift(&self, d: i64) -> Self {
        let lin = IntPoly::new(vec![sc(d), sc(1)]);
        let mut out = IntPoly::zero();
        for c in self.0.iter().rev() {
            out = &(&out * &lin) + &IntPoly::constant(c.clone());
        }
        out
    }
}

impl Add for &IntPoly {
    type Output = IntPoly;
    fn add(self, o: &IntPoly) -> IntPoly {
        let n = self.0.len().max(o.0.len());
        let z = Scalar::zero();
        IntPoly::new(
            (0..n)
                .map(|k| self.0.get(k).unwrap_or(&z) + o.0.get(k).unwrap_or(&z))
                .collect(),
        )
    }
}

impl Sub for &IntPoly {
    type Output = IntPoly;
    fn sub(self, o: &IntPoly) -> IntPoly {
        self + &(-o)
    }
}

impl Neg for &IntPoly {
    type Output = IntPoly;
    fn neg(self) -> IntPoly {
        IntPoly(self.0.iter().map(|c| -c).collect())
    }
}

impl Mul for &IntPoly {
    type Output = IntPoly;
    fn mul(self, o: &IntPoly) -> IntPoly {
        if self.is_zero() || o.is_zero() {
            return IntPoly::zero();
        }
        let mut c = vec![Scalar::zero(); self.0.len() + o.0.len() - 1];
        for (a, x) in self.0.iter().enumerate() {
            for (b, y) in o.0.iter().enumerate() {
                c[a + b] += x * y;
            }
        }
        IntPoly::new(c)
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.0.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let a = c.abs();
            if k == 0 || !a.is_one() {
                write!(f, "{a}")?;
            }
            match k {
                0 => {}
                1 => write!(f, "i")?,
                _ => write!(f, "i^{k}")?,
            }
        }
        Ok(())
    }
}

pub fn to_i64(s: &Scalar) -> Option<i64> {
    if s.is_integer() {
        s.to_integer().to_i64()
    } else {
        None
    }
}
