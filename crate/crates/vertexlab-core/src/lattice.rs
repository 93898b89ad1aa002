//! Integral lattices, the ε-cocycle, and the radical/quotient split.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::foundation::{sc, Scalar};
use crate::{Error, Result};

pub type Point = Vec<i64>;
pub type CoVector = Vec<Scalar>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Definiteness {
    PositiveDefinite,
    SemiPositiveDefinite,
    Indefinite,
}

#[derive(Serialize, Deserialize)]
struct LatticeFile {
    rank: usize,
    gram: Vec<Vec<i64>>,
}

#[derive(Clone, Debug)]
pub struct LatticeContext {
    gram: Vec<Vec<i64>>,
    /// c_ij mod 2 for i > j, so ε(a,b) = (−1)^{Σ_{i>j} a_i b_j c_ij}.
    eps_bits: Vec<Vec<bool>>,
    /// G·U = [H | 0] with U unimodular.
    u: Vec<Vec<i64>>,
    u_inv: Vec<Vec<i64>>,
    qrank: usize,
    quotient_gram: Vec<Vec<i64>>,
    definiteness: Definiteness,
    gram_inv: Option<Vec<Vec<Scalar>>>,
}

impl PartialEq for LatticeContext {
    fn eq(&self, o: &Self) -> bool {
        self.gram == o.gram
    }
}

impl LatticeContext {
    pub fn new(gram: Vec<Vec<i64>>) -> Result<Self> {
        let n = gram.len();
        if n == 0 {
            return Err(Error::Domain("lattice rank must be positive".into()));
        }
        for (i, row) in gram.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Domain(format!("gram row {i} has length {}, expected {n}", row.len())));
            }
            for j in 0..n {
                if gram[j].len() == n && gram[i][j] != gram[j][i] {
                    return Err(Error::Domain(format!("gram not symmetric at ({i},{j})")));
                }
            }
        }
        let eps_bits = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| i > j && (gram[i][i] * gram[j][j] + gram[i][j]).rem_euclid(2) == 1)
                    .collect()
            })
            .collect();
        let (u, qrank) = column_reduce(&gram);
        let u_inv = int_inverse(&u);
        let full = mat_mul(&transpose(&u), &mat_mul(&gram, &u));
        let quotient_gram: Vec<Vec<i64>> = full[..qrank].iter().map(|r| r[..qrank].to_vec()).collect();
        let qpos = leading_minors(&quotient_gram).iter().all(|m| m.is_positive());
        let definiteness = match (qpos, qrank == n) {
            (true, true) => Definiteness::PositiveDefinite,
            (true, false) => Definiteness::SemiPositiveDefinite,
            _ => Definiteness::Indefinite,
        };
        let gram_inv = if qrank == n { rat_inverse(&gram) } else { None };
        Ok(LatticeContext {
            gram,
            eps_bits,
            u,
            u_inv,
            qrank,
            quotient_gram,
            definiteness,
            gram_inv,
        })
    }

    pub fn diagonal(norms: &[i64]) -> Self {
        let n = norms.len();
        let g = (0..n)
            .map(|i| (0..n).map(|j| if i == j { norms[i] } else { 0 }).collect())
            .collect();
        Self::new(g).expect("diagonal gram")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: LatticeFile = serde_json::from_str(s)?;
        if f.gram.len() != f.rank {
            return Err(Error::Domain(format!("rank {} but gram has {} rows", f.rank, f.gram.len())));
        }
        Self::new(f.gram)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&LatticeFile { rank: self.rank(), gram: self.gram.clone() }).unwrap()
    }

    pub fn rank(&self) -> usize {
        self.gram.len()
    }

    pub fn gram(&self) -> &[Vec<i64>] {
        &self.gram
    }

    pub fn gram_inverse(&self) -> Option<&[Vec<Scalar>]> {
        self.gram_inv.as_deref()
    }

    pub fn definiteness(&self) -> Definiteness {
        self.definiteness
    }

    pub fn check_rank(&self, a: &[i64]) -> Result<()> {
        if a.len() != self.rank() {
            return Err(Error::LatticeMismatch(format!(
                "vector of length {} in a rank {} lattice",
                a.len(),
                self.rank()
            )));
        }
        Ok(())
    }

    pub fn basis(&self, i: usize) -> Point {
        let mut v = vec![0; self.rank()];
        v[i] = 1;
        v
    }

    /// Unchecked integer form.
    pub fn ip(&self, a: &[i64], b: &[i64]) -> i64 {
        let mut s = 0;
        for (i, ai) in a.iter().enumerate() {
            if *ai == 0 {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                s += ai * self.gram[i][j] * bj;
            }
        }
        s
    }

    pub fn inner(&self, a: &[i64], b: &[i64]) -> Result<i64> {
        self.check_rank(a)?;
        self.check_rank(b)?;
        Ok(self.ip(a, b))
    }

    pub fn inner_co(&self, a: &[Scalar], b: &[Scalar]) -> Result<Scalar> {
        if a.len() != self.rank() || b.len() != self.rank() {
            return Err(Error::LatticeMismatch("covector length".into()));
        }
        let mut s = Scalar::zero();
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                if self.gram[i][j] != 0 {
                    s += ai * bj * sc(self.gram[i][j]);
                }
            }
        }
        Ok(s)
    }

    /// (e_j | β) for the basis covector e_j.
    pub fn ip_basis(&self, j: usize, b: &[i64]) -> i64 {
        b.iter().enumerate().map(|(k, bk)| self.gram[j][k] * bk).sum()
    }

    pub fn norm(&self, a: &[i64]) -> i64 {
        self.ip(a, a)
    }

    /// ε(a, b) ∈ {±1}.
    pub fn epsilon(&self, a: &[i64], b: &[i64]) -> i64 {
        let mut par = 0i64;
        for (i, ai) in a.iter().enumerate() {
            if ai.rem_euclid(2) == 0 {
                continue;
            }
            for (j, bj) in b.iter().enumerate().take(i) {
                if self.eps_bits[i][j] && bj.rem_euclid(2) == 1 {
                    par ^= 1;
                }
            }
        }
        if par == 0 {
            1
        } else {
            -1
        }
    }

    /// A ℤ-basis of the radical {λ : (λ|Λ) = 0}.
    pub fn radical(&self) -> Vec<Point> {
        (self.qrank..self.rank()).map(|c| self.u.iter().map(|r| r[c]).collect()).collect()
    }

    pub fn quotient_rank(&self) -> usize {
        self.qrank
    }

    pub fn quotient_gram(&self) -> &[Vec<i64>] {
        &self.quotient_gram
    }

    /// Coordinates of a in the basis given by the columns of U.
    pub fn split(&self, a: &[i64]) -> Point {
        self.u_inv.iter().map(|r| r.iter().zip(a).map(|(x, y)| x * y).sum()).collect()
    }

    /// Inverse of [`split`](Self::split).
    pub fn join(&self, c: &[i64]) -> Point {
        self.u.iter().map(|r| r.iter().zip(c).map(|(x, y)| x * y).sum()).collect()
    }

    /// Image in Λ/Λ₀, in the quotient basis.
    pub fn project(&self, a: &[i64]) -> Result<Point> {
        self.check_rank(a)?;
        if self.definiteness == Definiteness::Indefinite {
            return Err(Error::Domain("projection needs a semi-positive definite form".into()));
        }
        Ok(self.split(a)[..self.qrank].to_vec())
    }

    pub fn quotient_ip(&self, a: &[i64], b: &[i64]) -> i64 {
        let mut s = 0;
        for i in 0..a.len() {
            for j in 0..b.len() {
                s += a[i] * self.quotient_gram[i][j] * b[j];
            }
        }
        s
    }
}

fn transpose(m: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = m.len();
    (0..n).map(|j| (0..n).map(|i| m[i][j]).collect()).collect()
}

fn mat_mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

/// Integer column operations bringing G to [H | 0]; returns (U, rank).
fn column_reduce(g: &[Vec<i64>]) -> (Vec<Vec<i64>>, usize) {
    let n = g.len();
    let mut m: Vec<Vec<i64>> = g.to_vec();
    let mut u: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    let col_op = |m: &mut Vec<Vec<i64>>, dst: usize, src: usize, f: i64| {
        for row in m.iter_mut() {
            row[dst] -= f * row[src];
        }
    };
    let swap = |m: &mut Vec<Vec<i64>>, a: usize, b: usize| {
        for row in m.iter_mut() {
            row.swap(a, b);
        }
    };
    let mut piv = 0;
    for r in 0..n {
        if piv == n {
            break;
        }
        loop {
            let best = (piv..n).filter(|&c| m[r][c] != 0).min_by_key(|&c| m[r][c].abs());
            let Some(b) = best else { break };
            swap(&mut m, piv, b);
            swap(&mut u, piv, b);
            let mut done = true;
            for c in piv + 1..n {
                if m[r][c] != 0 {
                    let f = m[r][c].div_euclid(m[r][piv]);
                    col_op(&mut m, c, piv, f);
                    col_op(&mut u, c, piv, f);
                    if m[r][c] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                piv += 1;
                break;
            }
        }
    }
    (u, piv)
}

fn rat_inverse(m: &[Vec<i64>]) -> Option<Vec<Vec<Scalar>>> {
    let n = m.len();
    let mut a: Vec<Vec<Scalar>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row: Vec<Scalar> = r.iter().map(|&x| sc(x)).collect();
            row.extend((0..n).map(|j| if i == j { Scalar::one() } else { Scalar::zero() }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&r| !a[r][c].is_zero())?;
        a.swap(c, p);
        let inv = a[c][c].recip();
        for x in a[c].iter_mut() {
            *x *= &inv;
        }
        for r in 0..n {
            if r != c && !a[r][c].is_zero() {
                let f = a[r][c].clone();
                let pivot_row = a[c].clone();
                for (x, y) in a[r].iter_mut().zip(pivot_row.iter()) {
                    *x -= &f * y;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

fn int_inverse(m: &[Vec<i64>]) -> Vec<Vec<i64>> {
    rat_inverse(m)
        .expect("unimodular")
        .into_iter()
        .map(|r| r.into_iter().map(|x| crate::foundation::to_i64(&x).expect("integral inverse")).collect())
        .collect()
}

fn leading_minors(m: &[Vec<i64>]) -> Vec<Scalar> {
    (1..=m.len())
        .map(|k| {
            let sub: Vec<Vec<Scalar>> = m[..k].iter().map(|r| r[..k].iter().map(|&x| sc(x)).collect()).collect();
            det(sub)
        })
        .collect()
}

pub fn det(mut a: Vec<Vec<Scalar>>) -> Scalar {
    let n = a.len();
    let mut d = Scalar::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !a[r][c].is_zero()) else {
            return Scalar::zero();
        };
        if p != c {
            a.swap(c, p);
            d = -d;
        }
        d *= &a[c][c];
        for r in c + 1..n {
            if !a[r][c].is_zero() {
                let f = &a[r][c] / &a[c][c];
                let pr = a[c].clone();
                for (x, y) in a[r].iter_mut().zip(pr.iter()) {
                    *x -= &f * y;
                }
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a2() -> LatticeContext {
        LatticeContext::new(vec![vec![2, -1], vec![-1, 2]]).unwrap()
    }

    #[test]
    fn inner_products() {
        let l = LatticeContext::new(vec![vec![2]]).unwrap();
        assert_eq!(l.inner(&[1], &[1]).unwrap(), 2);
        assert_eq!(a2().inner(&[1, 0], &[0, 1]).unwrap(), -1);
        assert!(a2().inner(&[1], &[0, 1]).is_err());
    }

    #[test]
    fn radicals() {
        assert!(a2().radical().is_empty());
        assert_eq!(a2().definiteness(), Definiteness::PositiveDefinite);
        let v = LatticeContext::new(vec![vec![2, -2], vec![-2, 2]]).unwrap();
        let r = v.radical();
        assert_eq!(r.len(), 1);
        assert!(r[0] == vec![1, 1] || r[0] == vec![-1, -1]);
        assert_eq!(v.definiteness(), Definiteness::SemiPositiveDefinite);
        let viii = LatticeContext::new(vec![vec![4, -2], vec![-2, 1]]).unwrap();
        let r = viii.radical();
        assert!(r[0] == vec![1, 2] || r[0] == vec![-1, -2]);
        let ind = LatticeContext::new(vec![vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(ind.definiteness(), Definiteness::Indefinite);
        assert!(ind.project(&[1, 0]).is_err());
    }

    #[test]
    fn a2_epsilon() {
        let l = a2();
        assert_eq!(l.epsilon(&[1, 0], &[0, 1]), 1);
        assert_eq!(l.epsilon(&[0, 1], &[1, 0]), -1);
        assert_eq!(l.epsilon(&[0, 0], &[3, -1]), 1);
    }

    #[test]
    fn projection_kills_radical() {
        let v = LatticeContext::new(vec![vec![2, -2], vec![-2, 2]]).unwrap();
        assert_eq!(v.project(&[1, 1]).unwrap(), vec![0]);
        for k in -3..=3 {
            assert_eq!(v.project(&[1 + k, k]).unwrap(), v.project(&[1, 0]).unwrap());
        }
        assert_eq!(a2().project(&[3, -2]).unwrap().len(), 2);
    }

    fn grams() -> Vec<Vec<Vec<i64>>> {
        vec![
            vec![vec![1]],
            vec![vec![3]],
            vec![vec![2, -1], vec![-1, 2]],
            vec![vec![4, -2], vec![-2, 1]],
            vec![vec![2, -1, 0], vec![-1, 2, -1], vec![0, -1, 2]],
            vec![vec![1, 0, 1, 0], vec![0, 3, -1, 2], vec![1, -1, 0, 1], vec![0, 2, 1, -3]],
        ]
    }

    proptest! {
        #[test]
        fn epsilon_laws(g in 0usize..6, seed in proptest::collection::vec(-3i64..4, 12)) {
            let l = LatticeContext::new(grams()[g].clone()).unwrap();
            let n = l.rank();
            let a = &seed[0..n];
            let b = &seed[4..4 + n];
            let c = &seed[8..8 + n];
            let e = (l.norm(a) * l.norm(b) + l.ip(a, b)).rem_euclid(2);
            let s = if e == 0 { 1 } else { -1 };
            prop_assert_eq!(l.epsilon(a, b), s * l.epsilon(b, a));
            let ab: Vec<i64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
            let bc: Vec<i64> = b.iter().zip(c).map(|(x, y)| x + y).collect();
            prop_assert_eq!(l.epsilon(&ab, c), l.epsilon(a, c) * l.epsilon(b, c));
            prop_assert_eq!(l.epsilon(a, &bc), l.epsilon(a, b) * l.epsilon(a, c));
            prop_assert_eq!(l.ip(a, b), l.ip(b, a));
        }

        #[test]
        fn quotient_form(a in proptest::collection::vec(-4i64..5, 2), b in proptest::collection::vec(-4i64..5, 2), k in -3i64..4) {
            for g in [vec![vec![2, -2], vec![-2, 2]], vec![vec![4, -2], vec![-2, 1]], vec![vec![1, 1], vec![1, 1]]] {
                let l = LatticeContext::new(g).unwrap();
                let d = &l.radical()[0];
                let pa = l.project(&a).unwrap();
                let pb = l.project(&b).unwrap();
                prop_assert_eq!(l.quotient_ip(&pa, &pb), l.ip(&a, &b));
                let ad: Vec<i64> = a.iter().zip(d).map(|(x, y)| x + k * y).collect();
                prop_assert_eq!(l.project(&ad).unwrap(), pa);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let l = LatticeContext::from_json(r#"{"rank":2,"gram":[[2,-1],[-1,2]]}"#).unwrap();
        assert_eq!(l, a2());
        assert_eq!(LatticeContext::from_json(&l.to_json()).unwrap(), l);
        assert!(LatticeContext::from_json(r#"{"rank":2,"gram":[[2,1],[0,2]]}"#).is_err());
        assert!(LatticeContext::from_json(r#"{"rank":3,"gram":[[2]]}"#).is_err());
    }

    #[test]
    fn gram_inverse() {
        let inv = a2().gram_inverse().unwrap().to_vec();
        assert_eq!(inv[0][0], crate::foundation::frac(2, 3));
        assert_eq!(inv[0][1], crate::foundation::frac(1, 3));
    }
}
