#![allow(dead_code)]

use num_traits::{One, Zero};
use vertexlab_core::fock::{FockState, Mono};
use vertexlab_core::foundation::{partitions, sc, Scalar};
use vertexlab_core::LatticeContext;

/// Commutative product of two oscillator polynomials over one label.
fn poly_mul(a: &FockState, b: &FockState) -> FockState {
    let mut out = FockState::zero();
    for (ma, ca) in a.iter() {
        for (mb, cb) in b.iter() {
            let mut modes = ma.modes.clone();
            modes.extend(mb.modes.iter().copied());
            out.add_term(Mono::new(ma.label.clone(), modes).unwrap(), ca * cb);
        }
    }
    out
}

/// v_α ∟n v_β as ε(α,β) Σ_{k ⊢ N} Π_j (α(−j)/j)^{k_j} / k_j! v_{α+β},
/// N = −(α|β) − n − 1, with each power expanded multinomially:
/// (Σ_i a_i x_i)^k / k! = Σ_{c ⊨ k} Π_i (a_i x_i)^{c_i} / c_i!.
pub fn vanvb(l: &LatticeContext, alpha: &[i64], beta: &[i64], n: i64) -> FockState {
    let big_n = -l.ip(alpha, beta) - n - 1;
    let lab: Vec<i64> = alpha.iter().zip(beta).map(|(a, b)| a + b).collect();
    let mut total = FockState::zero();
    if big_n < 0 {
        return total;
    }
    let support: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i] != 0).collect();
    for p in partitions(big_n as u32) {
        let mut mult: Vec<(i64, i64)> = Vec::new();
        for &part in p.parts() {
            match mult.last_mut() {
                Some((j, k)) if *j == part as i64 => *k += 1,
                _ => mult.push((part as i64, 1)),
            }
        }
        let mut acc: Vec<(Vec<(i64, usize)>, Scalar)> = vec![(Vec::new(), Scalar::one())];
        for &(j, k) in &mult {
            let mut next = Vec::new();
            for comp in compositions(k, support.len()) {
                let mut c = Scalar::one();
                let mut modes = Vec::new();
                for (slot, &ci) in comp.iter().enumerate() {
                    let i = support[slot];
                    let base = Scalar::new(alpha[i].into(), j.into());
                    for t in 1..=ci {
                        c *= &base;
                        c /= sc(t);
                        modes.push((-j, i));
                    }
                }
                if c.is_zero() {
                    continue;
                }
                for (m0, c0) in &acc {
                    let mut mm = m0.clone();
                    mm.extend_from_slice(&modes);
                    next.push((mm, c0 * &c));
                }
            }
            acc = next;
        }
        for (modes, c) in acc {
            total.add_term(Mono::new(lab.clone(), modes).unwrap(), c);
        }
    }
    total.scaled(&sc(l.epsilon(alpha, beta)))
}

fn compositions(k: i64, parts: usize) -> Vec<Vec<i64>> {
    if parts == 0 {
        return if k == 0 { vec![vec![]] } else { vec![] };
    }
    if parts == 1 {
        return vec![vec![k]];
    }
    let mut out = Vec::new();
    for first in 0..=k {
        for mut rest in compositions(k - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// The coefficient Π (α(−j)/j!)^{k_j}, kept to show where it
/// departs from the vertex-operator expansion.
pub fn vanvb_literal(l: &LatticeContext, alpha: &[i64], beta: &[i64], n: i64) -> FockState {
    let big_n = -l.ip(alpha, beta) - n - 1;
    let lab: Vec<i64> = alpha.iter().zip(beta).map(|(a, b)| a + b).collect();
    if big_n < 0 {
        return FockState::zero();
    }
    let mut total = FockState::zero();
    for p in partitions(big_n as u32) {
        let mut term = FockState::vac_at(lab.clone());
        for &part in p.parts() {
            let j = part as i64;
            let fact: i64 = (1..=j).product();
            let mut aj = FockState::zero();
            for (i, a) in alpha.iter().enumerate() {
                if *a != 0 {
                    aj.add_term(Mono::new(lab.clone(), vec![(-j, i)]).unwrap(), Scalar::new((*a).into(), fact.into()));
                }
            }
            term = poly_mul(&term, &aj);
        }
        total.add_scaled(&term, &Scalar::one());
    }
    if total.is_zero() {
        return total;
    }
    total.scaled(&sc(l.epsilon(alpha, beta)))
}

pub fn is_zero(s: &Scalar) -> bool {
    s.is_zero()
}
