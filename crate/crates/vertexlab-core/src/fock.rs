//! The lattice vertex superalgebra V_Λ.
//!
//! A [`Mono`] is e_{j₁}(n₁)…e_{j_k}(n_k) v_β with all n < 0, modes sorted by
//! (n, j). A [`FockState`] is a finite linear combination of monomials.
//! [`Vertex`] owns the lattice and computes every integer n-product.
//!
//! ```
//! use vertexlab_core::fock::{FockState, Vertex};
//! use vertexlab_core::LatticeContext;
//!
//! let v = Vertex::new(LatticeContext::new(vec![vec![1]]).unwrap());
//! let a = FockState::vac_at(vec![1]);
//! let b = FockState::vac_at(vec![-1]);
//! assert_eq!(v.product(&a, 0, &b).unwrap().to_string(), "e[0]");
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use dashmap::DashMap;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::foundation::{factorial, gbinom_int, parse_scalar, sc, sign, Scalar};
use crate::lattice::{CoVector, LatticeContext, Point};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mono {
    pub label: Point,
    /// (n, j) with n < 0 and j a 0-based basis index.
    pub modes: Vec<(i64, usize)>,
}

impl Mono {
    pub fn vac(label: Point) -> Self {
        Mono { label, modes: Vec::new() }
    }

    pub fn new(label: Point, mut modes: Vec<(i64, usize)>) -> Result<Self> {
        if let Some(m) = modes.iter().find(|m| m.0 >= 0) {
            return Err(Error::Domain(format!("creation mode index must be negative, got {}", m.0)));
        }
        modes.sort_unstable();
        Ok(Mono { label, modes })
    }

    /// Oscillator level Σ(−n).
    pub fn level(&self) -> i64 {
        self.modes.iter().map(|m| -m.0).sum()
    }

    /// Twice the conformal degree.
    pub fn deg2(&self, l: &LatticeContext) -> i64 {
        l.norm(&self.label) + 2 * self.level()
    }

    pub fn parity(&self, l: &LatticeContext) -> i64 {
        l.norm(&self.label).rem_euclid(2)
    }

    fn with_mode(&self, m: (i64, usize)) -> Mono {
        let mut modes = self.modes.clone();
        let pos = modes.partition_point(|x| *x < m);
        modes.insert(pos, m);
        Mono { label: self.label.clone(), modes }
    }
}

impl fmt::Display for Mono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, j) in &self.modes {
            write!(f, "b{}({}) ", j + 1, n)?;
        }
        let s: Vec<String> = self.label.iter().map(|x| x.to_string()).collect();
        write!(f, "e[{}]", s.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FockState {
    terms: BTreeMap<Mono, Scalar>,
}

impl FockState {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn mono(m: Mono) -> Self {
        Self::term(m, Scalar::one())
    }

    pub fn term(m: Mono, c: Scalar) -> Self {
        let mut s = Self::zero();
        s.add_term(m, c);
        s
    }

    pub fn vac_at(label: Point) -> Self {
        Self::mono(Mono::vac(label))
    }

    pub fn vacuum(rank: usize) -> Self {
        Self::vac_at(vec![0; rank])
    }

    /// h(−1)v₀ for a lattice vector h.
    pub fn heis_gen(h: &[i64]) -> Self {
        let mut s = Self::zero();
        for (j, c) in h.iter().enumerate() {
            if *c != 0 {
                s.add_term(Mono { label: vec![0; h.len()], modes: vec![(-1, j)] }, sc(*c));
            }
        }
        s
    }

    /// Canonical state from raw creation modes over v_β.
    pub fn normalize(modes: Vec<(i64, usize)>, label: Point) -> Result<Self> {
        Ok(Self::mono(Mono::new(label, modes)?))
    }

    pub fn add_term(&mut self, m: Mono, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    pub fn add_scaled(&mut self, o: &FockState, c: &Scalar) {
        if c.is_zero() {
            return;
        }
        for (m, x) in &o.terms {
            self.add_term(m.clone(), x * c);
        }
    }

    pub fn scaled(&self, c: &Scalar) -> FockState {
        let mut s = Self::zero();
        s.add_scaled(self, c);
        s
    }

    pub fn plus(&self, o: &FockState) -> FockState {
        let mut s = self.clone();
        s.add_scaled(o, &Scalar::one());
        s
    }

    pub fn minus(&self, o: &FockState) -> FockState {
        let mut s = self.clone();
        s.add_scaled(o, &-Scalar::one());
        s
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Mono, &Scalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Mono) -> Scalar {
        self.terms.get(m).cloned().unwrap_or_else(Scalar::zero)
    }

    /// Common label of a homogeneous state.
    pub fn label(&self) -> Option<Point> {
        let mut it = self.terms.keys();
        let first = it.next()?.label.clone();
        it.all(|m| m.label == first).then_some(first)
    }

    /// Common twice-degree of a homogeneous state.
    pub fn deg2(&self, l: &LatticeContext) -> Option<i64> {
        let mut it = self.terms.keys().map(|m| m.deg2(l));
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }

    pub fn parity(&self, l: &LatticeContext) -> Option<i64> {
        let mut it = self.terms.keys().map(|m| m.parity(l));
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }

    pub fn max_deg2(&self, l: &LatticeContext) -> i64 {
        self.terms.keys().map(|m| m.deg2(l)).max().unwrap_or(i64::MIN)
    }

    pub fn check_rank(&self, l: &LatticeContext) -> Result<()> {
        for m in self.terms.keys() {
            l.check_rank(&m.label)?;
            if let Some(x) = m.modes.iter().find(|x| x.1 >= l.rank()) {
                return Err(Error::LatticeMismatch(format!("mode index b{} exceeds rank {}", x.1 + 1, l.rank())));
            }
        }
        Ok(())
    }

    /// Splits into homogeneous (label, degree) pieces.
    pub fn components(&self, l: &LatticeContext) -> BTreeMap<(Point, i64), FockState> {
        let mut out: BTreeMap<(Point, i64), FockState> = BTreeMap::new();
        for (m, c) in &self.terms {
            out.entry((m.label.clone(), m.deg2(l))).or_default().add_term(m.clone(), c.clone());
        }
        out
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let a = c.abs();
            if !a.is_one() {
                write!(f, "{a} ")?;
            }
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for FockState {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_state(s, None)
    }
}

/// Parses the state grammar; mode indices are 1-based in the text.
/// A term consisting of a scalar alone is a multiple of the vacuum, which
/// needs `rank` when no other term fixes it.
pub fn parse_state(s: &str, rank: Option<usize>) -> Result<FockState> {
    let mut p = Parser { s: s.as_bytes(), i: 0 };
    let mut out = FockState::zero();
    let mut pending: Vec<Scalar> = Vec::new();
    let mut first = true;
    loop {
        p.ws();
        if p.eof() {
            if first {
                return Err(Error::Parse("empty state".into()));
            }
            break;
        }
        let mut neg = false;
        if p.peek() == Some(b'+') || p.peek() == Some(b'-') {
            neg = p.peek() == Some(b'-');
            p.i += 1;
            p.ws();
        } else if !first {
            return Err(p.err("expected '+' or '-'"));
        }
        first = false;
        let mut coeff = Scalar::one();
        let mut have_scalar = false;
        if p.peek().is_some_and(|c| c.is_ascii_digit()) {
            coeff = p.scalar()?;
            have_scalar = true;
            p.ws();
            if p.peek() == Some(b'*') {
                p.i += 1;
                p.ws();
            }
        }
        if neg {
            coeff = -coeff;
        }
        let mut modes = Vec::new();
        let mut label = None;
        loop {
            p.ws();
            match p.peek() {
                Some(b'b') => {
                    p.i += 1;
                    let idx = p.int()?;
                    if idx < 1 {
                        return Err(p.err("mode index is 1-based"));
                    }
                    p.expect(b'(')?;
                    let n = p.int()?;
                    p.expect(b')')?;
                    if n >= 0 {
                        return Err(p.err("mode must be negative"));
                    }
                    modes.push((n, (idx - 1) as usize));
                }
                Some(b'e') => {
                    p.i += 1;
                    p.expect(b'[')?;
                    let mut v = vec![p.int()?];
                    loop {
                        p.ws();
                        if p.peek() == Some(b',') {
                            p.i += 1;
                            v.push(p.int()?);
                        } else {
                            break;
                        }
                    }
                    p.expect(b']')?;
                    label = Some(v);
                    break;
                }
                _ => break,
            }
        }
        match label {
            Some(l) => {
                if let Some(m) = modes.iter().find(|m| m.1 >= l.len()) {
                    return Err(Error::LatticeMismatch(format!("mode b{} on a rank {} point", m.1 + 1, l.len())));
                }
                out.add_term(Mono::new(l, modes)?, coeff)
            }
            None if modes.is_empty() && have_scalar => pending.push(coeff),
            None => return Err(p.err("expected a lattice point e[...]")),
        }
    }
    if !pending.is_empty() {
        let r = out
            .terms
            .keys()
            .next()
            .map(|m| m.label.len())
            .or(rank)
            .ok_or_else(|| Error::Parse("scalar term without a lattice rank".into()))?;
        for c in pending {
            out.add_term(Mono::vac(vec![0; r]), c);
        }
    }
    if let Some(r) = rank {
        if let Some(m) = out.terms.keys().find(|m| m.label.len() != r) {
            return Err(Error::LatticeMismatch(format!("point {m} in a rank {r} lattice")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
}

impl Parser<'_> {
    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }
    fn eof(&self) -> bool {
        self.i >= self.s.len()
    }
    fn peek(&self) -> Option<u8> {
        self.s.get(self.i).copied()
    }
    fn err(&self, msg: &str) -> Error {
        Error::Parse(format!("{msg} at byte {}", self.i))
    }
    fn expect(&mut self, c: u8) -> Result<()> {
        self.ws();
        if self.peek() == Some(c) {
            self.i += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }
    fn int(&mut self) -> Result<i64> {
        self.ws();
        let st = self.i;
        if self.peek() == Some(b'-') {
            self.i += 1;
        }
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.i += 1;
        }
        std::str::from_utf8(&self.s[st..self.i])
            .unwrap()
            .parse()
            .map_err(|_| self.err("expected integer"))
    }
    fn scalar(&mut self) -> Result<Scalar> {
        let st = self.i;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.i += 1;
        }
        let save = self.i;
        self.ws();
        if self.peek() == Some(b'/') {
            self.i += 1;
            self.ws();
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.i += 1;
            }
        } else {
            self.i = save;
        }
        let txt: String = std::str::from_utf8(&self.s[st..self.i]).unwrap().split_whitespace().collect();
        parse_scalar(&txt).ok_or_else(|| self.err("bad scalar"))
    }
}

type MemoKey = (Mono, i64, Mono);

/// The vertex algebra V_Λ over a fixed lattice.
pub struct Vertex {
    lat: LatticeContext,
    memo: DashMap<MemoKey, FockState>,
    schur_memo: DashMap<(Point, i64), Arc<FockState>>,
}

impl Vertex {
    pub fn new(lat: LatticeContext) -> Self {
        Vertex { lat, memo: DashMap::new(), schur_memo: DashMap::new() }
    }

    pub fn lattice(&self) -> &LatticeContext {
        &self.lat
    }

    pub fn cache_len(&self) -> usize {
        self.memo.len()
    }

    pub fn clear_cache(&self) {
        self.memo.clear();
        self.schur_memo.clear();
    }

    pub fn vacuum(&self) -> FockState {
        FockState::vacuum(self.lat.rank())
    }

    pub fn parse(&self, s: &str) -> Result<FockState> {
        let st = parse_state(s, Some(self.lat.rank()))?;
        st.check_rank(&self.lat)?;
        Ok(st)
    }

    /// e_j(n) on a monomial.
    fn basis_act(&self, j: usize, n: i64, m: &Mono, c: &Scalar, out: &mut FockState) {
        use std::cmp::Ordering::*;
        match n.cmp(&0) {
            Less => out.add_term(m.with_mode((n, j)), c.clone()),
            Equal => {
                let ip = self.lat.ip_basis(j, &m.label);
                if ip != 0 {
                    out.add_term(m.clone(), c * sc(ip));
                }
            }
            Greater => {
                let g = &self.lat.gram()[j];
                let mut k = 0;
                while k < m.modes.len() {
                    let (mn, mj) = m.modes[k];
                    if mn > -n {
                        break;
                    }
                    if mn == -n && g[mj] != 0 {
                        let mut e = k;
                        while e < m.modes.len() && m.modes[e] == (mn, mj) {
                            e += 1;
                        }
                        let mult = (e - k) as i64;
                        let mut modes = m.modes.clone();
                        modes.remove(k);
                        out.add_term(Mono { label: m.label.clone(), modes }, c * sc(mult * n * g[mj]));
                        k = e;
                    } else {
                        k += 1;
                    }
                }
            }
        }
    }

    /// Heisenberg mode h(n) for a rational covector h.
    pub fn heis_act(&self, h: &[Scalar], n: i64, s: &FockState) -> Result<FockState> {
        if h.len() != self.lat.rank() {
            return Err(Error::LatticeMismatch("covector length".into()));
        }
        s.check_rank(&self.lat)?;
        let mut out = FockState::zero();
        for (j, hj) in h.iter().enumerate() {
            if hj.is_zero() {
                continue;
            }
            for (m, c) in s.iter() {
                self.basis_act(j, n, m, &(c * hj), &mut out);
            }
        }
        Ok(out)
    }

    pub fn basis_mode(&self, j: usize, n: i64, s: &FockState) -> FockState {
        let mut out = FockState::zero();
        for (m, c) in s.iter() {
            self.basis_act(j, n, m, c, &mut out);
        }
        out
    }

    fn lattice_mode(&self, a: &[i64], n: i64, s: &FockState) -> FockState {
        let mut out = FockState::zero();
        for (j, aj) in a.iter().enumerate() {
            if *aj == 0 {
                continue;
            }
            let sj = sc(*aj);
            for (m, c) in s.iter() {
                self.basis_act(j, n, m, &(c * &sj), &mut out);
            }
        }
        out
    }

    /// Coefficient of z^{−n−1} in Γ_α(z) w.
    pub fn vertex_act(&self, alpha: &[i64], n: i64, w: &FockState) -> Result<FockState> {
        self.lat.check_rank(alpha)?;
        w.check_rank(&self.lat)?;
        let mut out = FockState::zero();
        for (m, c) in w.iter() {
            out.add_scaled(&self.vertex_mono(alpha, n, m), c);
        }
        Ok(out)
    }

    fn vertex_mono(&self, alpha: &[i64], n: i64, w: &Mono) -> FockState {
        let l = &self.lat;
        let na = l.norm(alpha);
        let lam: Point = alpha.iter().zip(&w.label).map(|(a, b)| a + b).collect();
        if w.deg2(l) + na - 2 * n - 2 < l.norm(&lam) {
            return FockState::zero();
        }
        // E₊ on w, graded by the power of z^{-1}.
        let mut plus: BTreeMap<i64, FockState> = BTreeMap::new();
        plus.insert(0, FockState::mono(w.clone()));
        let mut term: BTreeMap<i64, FockState> = plus.clone();
        let mut k = 1;
        while !term.is_empty() {
            let mut next: BTreeMap<i64, FockState> = BTreeMap::new();
            for (d, st) in &term {
                for p in 1..=st.iter().map(|(m, _)| m.modes.iter().map(|x| -x.0).max().unwrap_or(0)).max().unwrap_or(0) {
                    let t = self.lattice_mode(alpha, p, st);
                    if !t.is_zero() {
                        next.entry(d + p).or_default().add_scaled(&t, &Scalar::new((-1).into(), (p * k).into()));
                    }
                }
            }
            next.retain(|_, s| !s.is_zero());
            for (d, st) in &next {
                plus.entry(*d).or_default().add_scaled(st, &Scalar::one());
            }
            term = next;
            k += 1;
        }
        let amu = l.ip(alpha, &w.label);
        let eps = sc(l.epsilon(alpha, &w.label));
        let mut out = FockState::zero();
        for (d, st) in &plus {
            let kk = -n - 1 - amu + d;
            if kk < 0 || st.is_zero() {
                continue;
            }
            let t = self.schur(alpha, kk, st);
            for (m, c) in t.iter() {
                out.add_term(Mono { label: lam.clone(), modes: m.modes.clone() }, c * &eps);
            }
        }
        out
    }

    /// S_k(α)·s where Σ S_k z^k = exp Σ_{j>0} α(−j) z^j / j.
    fn schur(&self, alpha: &[i64], k: i64, s: &FockState) -> FockState {
        let poly = self.schur_poly(alpha, k);
        let mut out = FockState::zero();
        for (pm, pc) in poly.iter() {
            for (m, c) in s.iter() {
                let mut modes = Vec::with_capacity(pm.modes.len() + m.modes.len());
                modes.extend_from_slice(&pm.modes);
                modes.extend_from_slice(&m.modes);
                modes.sort_unstable();
                out.add_term(Mono { label: m.label.clone(), modes }, pc * c);
            }
        }
        out
    }

    /// S_k(α) as an oscillator polynomial over v₀, cached.
    pub fn schur_poly(&self, alpha: &[i64], k: i64) -> Arc<FockState> {
        let key = (alpha.to_vec(), k);
        if let Some(r) = self.schur_memo.get(&key) {
            return r.clone();
        }
        let res = if k == 0 {
            FockState::vacuum(self.lat.rank())
        } else {
            let mut acc = FockState::zero();
            for j in 1..=k {
                let prev = self.schur_poly(alpha, k - j);
                acc.add_scaled(&self.lattice_mode(alpha, -j, &prev), &Scalar::one());
            }
            acc.scaled(&Scalar::new(1.into(), k.into()))
        };
        let res = Arc::new(res);
        self.schur_memo.insert(key, res.clone());
        res
    }

    /// u ∟n v for any integer n.
    pub fn product(&self, u: &FockState, n: i64, v: &FockState) -> Result<FockState> {
        u.check_rank(&self.lat)?;
        v.check_rank(&self.lat)?;
        Ok(self.prod(u, n, v))
    }

    pub(crate) fn prod(&self, u: &FockState, n: i64, v: &FockState) -> FockState {
        let mut out = FockState::zero();
        for (mu, cu) in u.iter() {
            for (mv, cv) in v.iter() {
                let p = self.prod_mono(mu, n, mv);
                if !p.is_zero() {
                    out.add_scaled(&p, &(cu * cv));
                }
            }
        }
        out
    }

    /// Largest p with u∟p v possibly nonzero, for monomials.
    fn pmax(&self, u: &Mono, v: &Mono) -> i64 {
        let lam: Point = u.label.iter().zip(&v.label).map(|(a, b)| a + b).collect();
        (u.deg2(&self.lat) + v.deg2(&self.lat) - 2 - self.lat.norm(&lam)).div_euclid(2)
    }

    fn prod_mono(&self, u: &Mono, n: i64, v: &Mono) -> FockState {
        if n > self.pmax(u, v) {
            return FockState::zero();
        }
        if u.modes.is_empty() && u.label.iter().all(|x| *x == 0) {
            return if n == -1 { FockState::mono(v.clone()) } else { FockState::zero() };
        }
        let key = (u.clone(), n, v.clone());
        if let Some(r) = self.memo.get(&key) {
            return r.clone();
        }
        let res = if u.modes.is_empty() {
            self.vertex_mono(&u.label, n, v)
        } else {
            self.peel(u, n, v)
        };
        self.memo.insert(key, res.clone());
        res
    }

    /// u = e_j(−k) u′, expanded by the Jacobi identity with the
    /// Heisenberg field ẽ_j as the outer factor.
    fn peel(&self, u: &Mono, m: i64, v: &Mono) -> FockState {
        let (nk, j) = u.modes[0];
        let k = -nk;
        let rest = Mono { label: u.label.clone(), modes: u.modes[1..].to_vec() };
        let mut out = FockState::zero();
        let pm = self.pmax(&rest, v);
        let s_lo = m - k - pm;
        for s in s_lo..=-k {
            let inner = self.prod_mono(&rest, m - k - s, v);
            if inner.is_zero() {
                continue;
            }
            let c = Scalar::from_integer(gbinom_int(-k, -k - s) * sign(s - k));
            let t = self.basis_mode(j, s, &inner);
            out.add_scaled(&t, &c);
        }
        let top = v.modes.first().map_or(0, |x| -x.0);
        let vs = FockState::mono(v.clone());
        for s in 0..=top {
            let a = self.basis_mode(j, s, &vs);
            if a.is_zero() {
                continue;
            }
            let c = Scalar::from_integer(-gbinom_int(-k, s) * sign(s - k));
            let t = self.prod(&FockState::mono(rest.clone()), m - k - s, &a);
            out.add_scaled(&t, &c);
        }
        out
    }

    pub fn derive(&self, u: &FockState) -> FockState {
        let mut out = FockState::zero();
        for (m, c) in u.iter() {
            for (i, &(n, j)) in m.modes.iter().enumerate() {
                let mut modes = m.modes.clone();
                modes[i] = (n - 1, j);
                modes.sort_unstable();
                out.add_term(Mono { label: m.label.clone(), modes }, c * sc(-n));
            }
            let t = self.lattice_mode(&m.label, -1, &FockState::mono(m.clone()));
            out.add_scaled(&t, c);
        }
        out
    }

    pub fn derive_n(&self, u: &FockState, k: usize) -> FockState {
        (0..k).fold(u.clone(), |s, _| self.derive(&s))
    }

    /// The conformal vector ½ Σ (G⁻¹)_{ij} e_i(−1) e_j(−1) v₀.
    pub fn omega(&self) -> Result<FockState> {
        let inv = self
            .lat
            .gram_inverse()
            .ok_or_else(|| Error::Domain("omega needs a non-degenerate form".into()))?;
        let r = self.lat.rank();
        let mut out = FockState::zero();
        let half = Scalar::new(1.into(), 2.into());
        for (i, row) in inv.iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                if !g.is_zero() {
                    let m = Mono::new(vec![0; r], vec![(-1, i), (-1, j)]).unwrap();
                    out.add_term(m, g * &half);
                }
            }
        }
        Ok(out)
    }

    /// The quasisymmetry identity for homogeneous-parity u, v.
    pub fn check_qs(&self, u: &FockState, v: &FockState, n: i64) -> bool {
        self.qs_defect(u, v, n).is_some_and(|d| d.is_zero())
    }

    pub fn qs_defect(&self, u: &FockState, v: &FockState, n: i64) -> Option<FockState> {
        let pu = u.parity(&self.lat).unwrap_or(0);
        let pv = v.parity(&self.lat).unwrap_or(0);
        if !u.is_zero() && u.parity(&self.lat).is_none() || !v.is_zero() && v.parity(&self.lat).is_none() {
            return None;
        }
        let lhs = self.prod(u, n, v);
        let top = self.pmax_states(v, u);
        let mut rhs = FockState::zero();
        let mut i = 0;
        while n + i <= top {
            let t = self.prod(v, n + i, u);
            if !t.is_zero() {
                let c = Scalar::new((-sign(pu * pv) * sign(n + i)).into(), factorial(i).into());
                rhs.add_scaled(&self.derive_n(&t, i as usize), &c);
            }
            i += 1;
        }
        Some(lhs.minus(&rhs))
    }

    fn pmax_states(&self, u: &FockState, v: &FockState) -> i64 {
        let mut best = i64::MIN;
        for (a, _) in u.iter() {
            for (b, _) in v.iter() {
                best = best.max(self.pmax(a, b));
            }
        }
        best
    }

    /// Vertex Jacobi identity for (u∟n v)∟m w.
    pub fn check_jacobi(&self, u: &FockState, v: &FockState, w: &FockState, m: i64, n: i64) -> bool {
        self.jacobi_defect(u, v, w, m, n).is_zero()
    }

    pub fn jacobi_defect(&self, u: &FockState, v: &FockState, w: &FockState, m: i64, n: i64) -> FockState {
        let pu = u.parity(&self.lat).unwrap_or(0);
        let pv = v.parity(&self.lat).unwrap_or(0);
        let lhs = self.prod(&self.prod(u, n, v), m, w);
        let mut rhs = FockState::zero();
        let s_lo = m + n - self.pmax_states(v, w);
        for s in s_lo..=n {
            let inner = self.prod(v, m + n - s, w);
            if inner.is_zero() {
                continue;
            }
            let c = Scalar::from_integer(gbinom_int(n, n - s) * sign(s + n));
            rhs.add_scaled(&self.prod(u, s, &inner), &c);
        }
        let s_hi = self.pmax_states(u, w);
        for s in 0..=s_hi {
            let inner = self.prod(u, s, w);
            if inner.is_zero() {
                continue;
            }
            let c = Scalar::from_integer(-gbinom_int(n, s) * sign(s + n) * sign(pu * pv));
            rhs.add_scaled(&self.prod(v, m + n - s, &inner), &c);
        }
        lhs.minus(&rhs)
    }

    /// Random homogeneous state of twice-degree `deg2`, with label drawn
    /// from `labels` (those of compatible norm).
    pub fn random_homogeneous<R: Rng>(&self, rng: &mut R, labels: &[Point], deg2: i64, terms: usize) -> Option<FockState> {
        let ok: Vec<&Point> = labels
            .iter()
            .filter(|b| {
                let nb = self.lat.norm(b);
                nb <= deg2 && (deg2 - nb) % 2 == 0
            })
            .collect();
        if ok.is_empty() {
            return None;
        }
        let beta = ok[rng.gen_range(0..ok.len())].clone();
        let level = (deg2 - self.lat.norm(&beta)) / 2;
        let mut s = FockState::zero();
        for _ in 0..terms.max(1) {
            let mut modes = Vec::new();
            let mut left = level;
            while left > 0 {
                let n = rng.gen_range(1..=left);
                modes.push((-n, rng.gen_range(0..self.lat.rank())));
                left -= n;
            }
            let c = sc(rng.gen_range(-3..=3));
            s.add_term(Mono::new(beta.clone(), modes).unwrap(), if c.is_zero() { Scalar::one() } else { c });
        }
        if s.is_zero() {
            s = FockState::vac_at(beta);
        }
        Some(s)
    }

    pub fn covector(&self, a: &[i64]) -> CoVector {
        a.iter().map(|x| sc(*x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foundation::frac;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn v1() -> Vertex {
        Vertex::new(LatticeContext::new(vec![vec![1]]).unwrap())
    }
    fn a2() -> Vertex {
        Vertex::new(LatticeContext::new(vec![vec![2, -1], vec![-1, 2]]).unwrap())
    }

    #[test]
    fn normalize_sorts() {
        let s = FockState::normalize(vec![(-1, 0), (-2, 0)], vec![0]).unwrap();
        assert_eq!(s.to_string(), "b1(-2) b1(-1) e[0]");
        let s = FockState::normalize(vec![(-1, 0), (-1, 0)], vec![0]).unwrap();
        assert_eq!(s.iter().next().unwrap().0.modes.len(), 2);
        assert!(FockState::normalize(vec![(0, 0)], vec![0]).is_err());
        assert_eq!(FockState::normalize(vec![], vec![3]).unwrap(), FockState::vac_at(vec![3]));
    }

    #[test]
    fn heisenberg_action() {
        let v = a2();
        let b = FockState::vac_at(vec![1, 1]);
        let h = v.covector(&[1, 0]);
        assert_eq!(v.heis_act(&h, 0, &b).unwrap(), b.scaled(&sc(1)));
        assert!(v.heis_act(&h, 2, &b).unwrap().is_zero());
        let a = FockState::heis_gen(&[1, 0]);
        assert_eq!(v.heis_act(&h, 1, &a).unwrap(), v.vacuum().scaled(&sc(2)));
    }

    #[test]
    fn vertex_examples() {
        let v = a2();
        let (al, be) = (vec![1, 0], vec![0, 1]);
        let ab = v.lattice().ip(&al, &be);
        let eps = sc(v.lattice().epsilon(&al, &be));
        let vb = FockState::vac_at(be.clone());
        assert_eq!(v.vertex_act(&al, -ab - 1, &vb).unwrap(), FockState::vac_at(vec![1, 1]).scaled(&eps));
        for n in -ab..-ab + 4 {
            assert!(v.vertex_act(&al, n, &vb).unwrap().is_zero());
        }
        let want = FockState::normalize(vec![(-1, 0)], vec![1, 1]).unwrap().scaled(&eps);
        assert_eq!(v.vertex_act(&al, -ab - 2, &vb).unwrap(), want);
    }

    #[test]
    fn vacuum_is_unit() {
        let v = a2();
        let u = v.parse("2 b1(-2) b2(-1) e[1,0] - e[0,1]").unwrap();
        for n in -4..4 {
            let p = v.product(&v.vacuum(), n, &u).unwrap();
            assert_eq!(p, if n == -1 { u.clone() } else { FockState::zero() });
        }
        assert_eq!(v.product(&u, -1, &v.vacuum()).unwrap(), u);
        assert_eq!(v.product(&u, -2, &v.vacuum()).unwrap(), v.derive(&u));
    }

    #[test]
    fn clifford_pairing() {
        let v = v1();
        let p = v.product(&FockState::vac_at(vec![1]), 0, &FockState::vac_at(vec![-1])).unwrap();
        assert_eq!(p, v.vacuum().scaled(&sc(v.lattice().epsilon(&[1], &[-1]))));
    }

    #[test]
    fn derivation_examples() {
        let v = a2();
        assert!(v.derive(&v.vacuum()).is_zero());
        let b = FockState::vac_at(vec![1, -1]);
        let om = v.omega().unwrap();
        assert_eq!(v.product(&om, 0, &b).unwrap(), v.derive(&b));
        let a = FockState::heis_gen(&[1, 0]);
        assert_eq!(v.derive(&a).to_string(), "b1(-2) e[0,0]");
        assert_eq!(v.product(&om, 0, &a).unwrap(), v.derive(&a));
    }

    #[test]
    fn omega_laws() {
        let v = v1();
        let om = v.omega().unwrap();
        assert_eq!(om.to_string(), "1/2 b1(-1) b1(-1) e[0]");
        assert_eq!(v.product(&om, 3, &om).unwrap(), v.vacuum().scaled(&frac(1, 2)));
        assert!(v.product(&om, 2, &om).unwrap().is_zero());
        let w = a2();
        let om = w.omega().unwrap();
        let b = FockState::vac_at(vec![1, 1]);
        assert_eq!(w.product(&om, 1, &b).unwrap(), b.scaled(&sc(1)));
        assert_eq!(w.product(&om, 3, &om).unwrap(), w.vacuum());
        let d = LatticeContext::new(vec![vec![2, -2], vec![-2, 2]]).unwrap();
        assert!(Vertex::new(d).omega().is_err());
    }

    #[test]
    fn grammar_round_trip() {
        let v = a2();
        let s = v.parse("1/2 * b1(-2) b1(-1) e[0,0] - 3 e[1,0]").unwrap();
        assert_eq!(s.to_string(), "1/2 b1(-2) b1(-1) e[0,0] - 3 e[1,0]");
        assert_eq!(v.parse(&s.to_string()).unwrap(), s);
        assert_eq!(v.parse("0").unwrap(), FockState::zero());
        assert_eq!(v.parse("-e[0,1] + e[0,1]").unwrap(), FockState::zero());
        assert_eq!(v.parse("5").unwrap(), v.vacuum().scaled(&sc(5)));
        assert!(v.parse("b1(1) e[0,0]").is_err());
        assert!(v.parse("b3(-1) e[0,0]").is_err());
        assert!(v.parse("e[0]").is_err());
        assert!(v.parse("e[0,0] e[1,1]").is_err());
        assert_eq!("b1(-1) b1(-2) e[0]".parse::<FockState>().unwrap().to_string(), "b1(-2) b1(-1) e[0]");
    }

    #[test]
    fn ommega_eigen_on_random() {
        let v = a2();
        let om = v.omega().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let labels = vec![vec![0, 0], vec![1, 0], vec![1, 1], vec![-1, 2]];
        for d in 0..8 {
            if let Some(s) = v.random_homogeneous(&mut rng, &labels, d, 3) {
                let deg = Scalar::new(s.deg2(v.lattice()).unwrap().into(), 2.into());
                assert_eq!(v.product(&om, 1, &s).unwrap(), s.scaled(&deg));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn heisenberg_commutator(m in -3i64..4, n in -3i64..4, i in 0usize..2, j in 0usize..2, seed in 0u64..1000) {
            let v = a2();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let s = v.random_homogeneous(&mut rng, &[vec![1, 0], vec![0, -1]], 6, 3).unwrap();
            let lhs = v.basis_mode(i, m, &v.basis_mode(j, n, &s)).minus(&v.basis_mode(j, n, &v.basis_mode(i, m, &s)));
            let want = if m == -n { s.scaled(&sc(v.lattice().gram()[i][j] * m)) } else { FockState::zero() };
            prop_assert_eq!(lhs, want);
        }

        #[test]
        fn grading_and_derivation(n in -3i64..5, seed in 0u64..1000) {
            let v = a2();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let labels = vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![-1, -1]];
            let (du, dw) = (rand::Rng::gen_range(&mut rng, 0..5), rand::Rng::gen_range(&mut rng, 0..5));
            let u = v.random_homogeneous(&mut rng, &labels, du, 2).unwrap_or(v.vacuum());
            let w = v.random_homogeneous(&mut rng, &labels, dw, 2).unwrap_or(v.vacuum());
            let p = v.prod(&u, n, &w);
            let l = v.lattice();
            if !p.is_zero() {
                let lab: Point = u.label().unwrap().iter().zip(w.label().unwrap()).map(|(a, b)| a + b).collect();
                prop_assert_eq!(p.label().unwrap(), lab);
                prop_assert_eq!(p.deg2(l).unwrap(), u.deg2(l).unwrap() + w.deg2(l).unwrap() - 2 * n - 2);
            }
            let lhs = v.derive(&p);
            let rhs = v.prod(&v.derive(&u), n, &w).plus(&v.prod(&u, n, &v.derive(&w)));
            prop_assert_eq!(lhs, rhs);
            let du = v.prod(&v.derive(&u), n, &w);
            prop_assert_eq!(du, v.prod(&u, n - 1, &w).scaled(&sc(-n)));
        }
    }
}
