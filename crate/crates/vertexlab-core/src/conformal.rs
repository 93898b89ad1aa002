//! Presented conformal superalgebras, their coefficient algebras and
//! embeddings into lattice vertex algebras.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use dashmap::DashMap;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use serde_json::Value;

use crate::exec::Exec;
use crate::fock::{FockState, Vertex};
use crate::foundation::{binom, factorial, falling, frac, gbinom_int, parse_scalar, sc, sign, Scalar};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Gen {
    pub fam: u8,
    pub idx: i64,
}

impl Gen {
    pub const fn new(fam: u8, idx: i64) -> Self {
        Gen { fam, idx }
    }
}

#[derive(Clone, Debug)]
pub struct Family {
    pub name: String,
    pub parity: u8,
    pub indexed: bool,
    /// Twice the degree is `deg2 + slope2 * idx`.
    pub deg2: i64,
    pub slope2: i64,
    pub central: bool,
}

impl Family {
    fn plain(name: &str, parity: u8, deg2: i64) -> Self {
        Family { name: name.into(), parity, indexed: false, deg2, slope2: 0, central: false }
    }
    fn indexed(name: &str, parity: u8, deg2: i64, slope2: i64) -> Self {
        Family { name: name.into(), parity, indexed: true, deg2, slope2, central: false }
    }
    fn central() -> Self {
        Family { name: "c".into(), parity: 0, indexed: false, deg2: 0, slope2: 0, central: true }
    }
}

/// Σ c · D^k g.
#[derive(Clone, Debug, PartialEq, Eq, Default, Hash)]
pub struct Elem(BTreeMap<(Gen, u32), Scalar>);

impl Elem {
    pub fn zero() -> Self {
        Elem::default()
    }

    pub fn gen(g: Gen) -> Self {
        Elem::term(g, 0, Scalar::one())
    }

    pub fn term(g: Gen, k: u32, c: Scalar) -> Self {
        let mut e = Elem::zero();
        e.add(g, k, c);
        e
    }

    pub fn add(&mut self, g: Gen, k: u32, c: Scalar) {
        if c.is_zero() {
            return;
        }
        let slot = self.0.entry((g, k)).or_insert_with(Scalar::zero);
        *slot += c;
        if slot.is_zero() {
            self.0.remove(&(g, k));
        }
    }

    pub fn add_scaled(&mut self, o: &Elem, c: &Scalar) {
        if c.is_zero() {
            return;
        }
        for ((g, k), x) in &o.0 {
            self.add(*g, *k, x * c);
        }
    }

    pub fn scaled(&self, c: &Scalar) -> Elem {
        let mut e = Elem::zero();
        e.add_scaled(self, c);
        e
    }

    pub fn plus(&self, o: &Elem) -> Elem {
        let mut e = self.clone();
        e.add_scaled(o, &Scalar::one());
        e
    }

    pub fn minus(&self, o: &Elem) -> Elem {
        let mut e = self.clone();
        e.add_scaled(o, &-Scalar::one());
        e
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Gen, u32), &Scalar)> {
        self.0.iter()
    }
}

type BaseRule = dyn Fn(Gen, i64, Gen) -> Option<Elem> + Send + Sync;
type CocycleRule = dyn Fn(Gen, i64, Gen) -> Option<Scalar> + Send + Sync;
type ReduceRule = dyn Fn(Gen) -> Option<Elem> + Send + Sync;
type GenList = dyn Fn(usize) -> Vec<Gen> + Send + Sync;

/// A conformal superalgebra given by generators over 𝕜[D] and products
/// of generators.
///
/// `base(a, n, b)` returns `None` when the ordered pair is not tabulated;
/// the product is then obtained from the reversed pair by quasisymmetry.
#[derive(Clone)]
pub struct Presentation {
    pub name: String,
    pub families: Vec<Family>,
    base: Arc<BaseRule>,
    cocycle: Option<Arc<CocycleRule>>,
    reduce: Option<Arc<ReduceRule>>,
    gens: Arc<GenList>,
    memo: Arc<DashMap<(Gen, i64, Gen), Elem>>,
}

impl fmt::Debug for Presentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Presentation").field("name", &self.name).finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub axiom: String,
    pub detail: String,
}

impl Presentation {
    fn build(
        name: &str,
        families: Vec<Family>,
        base: Arc<BaseRule>,
        cocycle: Option<Arc<CocycleRule>>,
        reduce: Option<Arc<ReduceRule>>,
        gens: Arc<GenList>,
    ) -> Self {
        Presentation { name: name.into(), families, base, cocycle, reduce, gens, memo: Arc::new(DashMap::new()) }
    }

    /// Same presentation with the central terms dropped.
    pub fn without_cocycle(&self) -> Self {
        let mut p = self.clone();
        p.cocycle = None;
        p.name = format!("{}/nocentral", self.name);
        p.memo = Arc::new(DashMap::new());
        p
    }

    pub fn has_cocycle(&self) -> bool {
        self.cocycle.is_some()
    }

    pub fn family(&self, g: Gen) -> &Family {
        &self.families[g.fam as usize]
    }

    pub fn central(&self) -> Option<Gen> {
        self.families.iter().position(|f| f.central).map(|i| Gen::new(i as u8, 0))
    }

    pub fn parity(&self, g: Gen) -> i64 {
        self.family(g).parity as i64
    }

    pub fn deg2(&self, g: Gen) -> i64 {
        let f = self.family(g);
        f.deg2 + f.slope2 * g.idx
    }

    pub fn is_central(&self, g: Gen) -> bool {
        self.family(g).central
    }

    /// Generators up to index bound `max_gen`, central element last.
    pub fn generators(&self, max_gen: usize) -> Vec<Gen> {
        (self.gens)(max_gen)
    }

    pub fn gen_name(&self, g: Gen) -> String {
        let f = self.family(g);
        if f.indexed {
            format!("{}{}", f.name, g.idx)
        } else {
            f.name.clone()
        }
    }

    pub fn parse_gen(&self, s: &str) -> Result<Gen> {
        let s = s.trim();
        for (i, f) in self.families.iter().enumerate() {
            if f.indexed {
                if let Some(rest) = s.strip_prefix(f.name.as_str()) {
                    if let Ok(idx) = rest.parse::<i64>() {
                        if idx >= 0 {
                            return Ok(Gen::new(i as u8, idx));
                        }
                    }
                }
            } else if s == f.name {
                return Ok(Gen::new(i as u8, 0));
            }
        }
        Err(Error::Parse(format!("unknown generator `{s}` in {}", self.name)))
    }

    /// Locality bound: products vanish for n ≥ deg a + deg b.
    pub fn locality(&self, a: Gen, b: Gen) -> i64 {
        (self.deg2(a) + self.deg2(b)).div_euclid(2)
    }

    pub fn show(&self, e: &Elem) -> String {
        if e.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, ((g, k), c)) in e.iter().enumerate() {
            let neg = c.is_negative();
            out.push_str(match (i, neg) {
                (0, true) => "-",
                (0, false) => "",
                (_, true) => " - ",
                (_, false) => " + ",
            });
            let a = c.abs();
            if !a.is_one() {
                out.push_str(&format!("{a} "));
            }
            match k {
                0 => {}
                1 => out.push_str("D "),
                _ => out.push_str(&format!("D^{k} ")),
            }
            out.push_str(&self.gen_name(*g));
        }
        out
    }

    /// Parses `Σ c D^k g` in the format of [`show`](Self::show).
    pub fn parse_elem(&self, s: &str) -> Result<Elem> {
        let s = s.trim();
        if s == "0" {
            return Ok(Elem::zero());
        }
        let mut e = Elem::zero();
        let mut toks: Vec<String> = Vec::new();
        let mut cur = String::new();
        for (i, ch) in s.char_indices() {
            if (ch == '+' || ch == '-') && i > 0 && s[..i].ends_with(' ') {
                toks.push(cur.trim().to_string());
                cur = String::new();
            }
            cur.push(ch);
        }
        toks.push(cur.trim().to_string());
        for t in toks {
            let (neg, body) = match t.strip_prefix('-') {
                Some(b) => (true, b.trim()),
                None => (false, t.strip_prefix('+').unwrap_or(&t).trim()),
            };
            let mut c = Scalar::one();
            let mut k = 0u32;
            let mut gen = None;
            for w in body.split_whitespace() {
                if let Some(x) = parse_scalar(w).filter(|_| w.chars().next().unwrap().is_ascii_digit()) {
                    c *= x;
                } else if w == "D" {
                    k += 1;
                } else if let Some(p) = w.strip_prefix("D^") {
                    k += p.parse::<u32>().map_err(|_| Error::Parse(format!("bad power `{w}`")))?;
                } else {
                    gen = Some(self.parse_gen(w)?);
                }
            }
            let g = gen.ok_or_else(|| Error::Parse(format!("term `{t}` has no generator")))?;
            e.add(g, k, if neg { -c } else { c });
        }
        Ok(e)
    }

    /// D^r applied to an element; D𝖼 = 0.
    pub fn derive(&self, e: &Elem, r: u32) -> Elem {
        let mut out = Elem::zero();
        for ((g, k), c) in e.iter() {
            if r > 0 && self.is_central(*g) {
                continue;
            }
            out.add(*g, k + r, c.clone());
        }
        out
    }

    /// Rewrites non-basis generators.
    pub fn normalize(&self, e: &Elem) -> Elem {
        let Some(red) = &self.reduce else { return e.clone() };
        let mut out = Elem::zero();
        for ((g, k), c) in e.iter() {
            match red(*g) {
                Some(r) => out.add_scaled(&self.derive(&self.normalize(&r), *k), c),
                None => out.add(*g, *k, c.clone()),
            }
        }
        out
    }

    fn raw(&self, a: Gen, n: i64, b: Gen) -> Option<Elem> {
        let mut e = (self.base)(a, n, b)?;
        if let Some(cc) = &self.cocycle {
            if let (Some(c), Some(z)) = (cc(a, n, b), self.central()) {
                e.add(z, 0, c);
            }
        }
        Some(self.normalize(&e))
    }

    /// a ∟n b for generators a, b and n ≥ 0.
    pub fn gen_product(&self, a: Gen, n: i64, b: Gen) -> Elem {
        if n < 0 || self.is_central(a) || self.is_central(b) {
            return Elem::zero();
        }
        if let Some(red) = &self.reduce {
            if let Some(r) = red(a) {
                return self.cproduct(&self.normalize(&r), n, &Elem::gen(b));
            }
            if let Some(r) = red(b) {
                return self.cproduct(&Elem::gen(a), n, &self.normalize(&r));
            }
        }
        if n >= self.locality(a, b) {
            return Elem::zero();
        }
        if let Some(r) = self.memo.get(&(a, n, b)) {
            return r.clone();
        }
        let res = match self.raw(a, n, b) {
            Some(e) => e,
            None => self.by_qs(a, n, b),
        };
        self.memo.insert((a, n, b), res.clone());
        res
    }

    /// a∟n b = −(−1)^{p(a)p(b)} Σ_i (−1)^{n+i} D^i/i! (b∟_{n+i} a).
    fn by_qs(&self, a: Gen, n: i64, b: Gen) -> Elem {
        let mut out = Elem::zero();
        let s = -sign(self.parity(a) * self.parity(b));
        let top = self.locality(a, b);
        for i in 0..=(top - n).max(0) {
            let Some(t) = self.raw(b, n + i, a) else { continue };
            let c = Scalar::new((s * sign(n + i)).into(), factorial(i).into());
            out.add_scaled(&self.derive(&t, i as u32), &c);
        }
        out
    }

    /// The n-product extended through D by (Da)∟n b = −n a∟_{n−1} b and
    /// a∟n Db = D(a∟n b) + n a∟_{n−1} b.
    pub fn cproduct(&self, x: &Elem, n: i64, y: &Elem) -> Elem {
        let mut out = Elem::zero();
        if n < 0 {
            return out;
        }
        for ((g, k), cx) in x.iter() {
            let k = *k as i64;
            if k > n {
                continue;
            }
            let p = n - k;
            let ck = falling(n, k) * sc(sign(k)) * cx;
            for ((h, l), cy) in y.iter() {
                let l = *l as i64;
                for i in 0..=l.min(p) {
                    let t = self.gen_product(*g, p - i, *h);
                    if t.is_zero() {
                        continue;
                    }
                    let c = binom(l, i) * falling(p, i) * &ck * cy;
                    out.add_scaled(&self.derive(&t, (l - i) as u32), &c);
                }
            }
        }
        out
    }

    pub fn elem_parity(&self, e: &Elem) -> i64 {
        e.iter().next().map_or(0, |((g, _), _)| self.parity(*g))
    }

    /// Checks C1–C5 on generators up to `max_gen` and indices up to `max_n`.
    pub fn axioms_check(&self, max_gen: usize, max_n: i64, exec: Exec) -> Vec<Violation> {
        let gens: Vec<Gen> = self.generators(max_gen).into_iter().filter(|g| !self.is_central(*g)).collect();
        let pairs: Vec<(Gen, Gen)> = gens.iter().flat_map(|a| gens.iter().map(move |b| (*a, *b))).collect();
        let mut out: Vec<Violation> = exec.flat_map(&pairs, |&(a, b)| self.check_pair(a, b, max_n));
        let triples: Vec<(Gen, Gen, Gen)> = pairs.iter().flat_map(|&(a, b)| gens.iter().map(move |c| (a, b, *c))).collect();
        out.extend(exec.flat_map(&triples, |&(a, b, c)| self.check_jacobi(a, b, c, max_n)));
        out
    }

    fn check_pair(&self, a: Gen, b: Gen, max_n: i64) -> Vec<Violation> {
        let mut v = Vec::new();
        let (na, nb) = (self.gen_name(a), self.gen_name(b));
        let loc = self.locality(a, b);
        // C1 on the raw rule, and the grading of every tabulated product.
        for n in 0..=max_n.max(loc + 2) {
            if let Some(e) = self.raw(a, n, b) {
                if n >= loc && !e.is_zero() {
                    v.push(Violation { axiom: "C1".into(), detail: format!("{na} _{n} {nb} = {} beyond locality {loc}", self.show(&e)) });
                }
                let want = self.deg2(a) + self.deg2(b) - 2 * n - 2;
                for ((g, k), _) in e.iter() {
                    if self.deg2(*g) + 2 * *k as i64 != want {
                        v.push(Violation { axiom: "grading".into(), detail: format!("{na} _{n} {nb} has term of wrong degree: {}", self.show(&e)) });
                        break;
                    }
                }
            }
        }
        let ea = Elem::gen(a);
        let eb = Elem::gen(b);
        let da = self.derive(&ea, 1);
        let db = self.derive(&eb, 1);
        for n in 0..=max_n {
            let ab = self.cproduct(&ea, n, &eb);
            // C2
            let lhs = self.cproduct(&da, n, &eb);
            let rhs = if n == 0 { Elem::zero() } else { self.cproduct(&ea, n - 1, &eb).scaled(&sc(-n)) };
            if lhs != rhs {
                v.push(Violation { axiom: "C2".into(), detail: format!("(D{na}) _{n} {nb}") });
            }
            // C3
            let lhs = self.derive(&ab, 1);
            let rhs = self.cproduct(&da, n, &eb).plus(&self.cproduct(&ea, n, &db));
            if lhs != rhs {
                v.push(Violation { axiom: "C3".into(), detail: format!("D({na} _{n} {nb})") });
            }
            // C4
            let mut q = Elem::zero();
            let s = -sign(self.parity(a) * self.parity(b));
            let mut i = 0;
            while n + i <= max_n.max(loc) {
                let t = self.cproduct(&eb, n + i, &ea);
                let c = Scalar::new((s * sign(n + i)).into(), factorial(i).into());
                q.add_scaled(&self.derive(&t, i as u32), &c);
                i += 1;
            }
            if ab != q {
                v.push(Violation {
                    axiom: "C4".into(),
                    detail: format!("{na} _{n} {nb} = {} but quasisymmetry gives {}", self.show(&ab), self.show(&q)),
                });
            }
        }
        v
    }

    /// (a∟n b)∟m c = Σ_i (−1)^i binom(n,i) (a∟_{n−i}(b∟_{m+i}c) − (−1)^{p(a)p(b)} b∟_{m+i}(a∟_{n−i}c)).
    pub fn jacobi_defect(&self, a: &Elem, b: &Elem, c: &Elem, n: i64, m: i64) -> Elem {
        let lhs = self.cproduct(&self.cproduct(a, n, b), m, c);
        let s = sign(self.elem_parity(a) * self.elem_parity(b));
        let mut rhs = Elem::zero();
        for i in 0..=n {
            let co = binom(n, i) * sc(sign(i));
            let t1 = self.cproduct(a, n - i, &self.cproduct(b, m + i, c));
            let t2 = self.cproduct(b, m + i, &self.cproduct(a, n - i, c));
            rhs.add_scaled(&t1, &co);
            rhs.add_scaled(&t2, &(-co * sc(s)));
        }
        lhs.minus(&rhs)
    }

    fn check_jacobi(&self, a: Gen, b: Gen, c: Gen, max_n: i64) -> Vec<Violation> {
        let mut v = Vec::new();
        let (ea, eb, ec) = (Elem::gen(a), Elem::gen(b), Elem::gen(c));
        for n in 0..=max_n.min(self.locality(a, b)) {
            for m in 0..=max_n {
                let d = self.jacobi_defect(&ea, &eb, &ec, n, m);
                if !d.is_zero() {
                    v.push(Violation {
                        axiom: "C5".into(),
                        detail: format!(
                            "({} _{n} {}) _{m} {}: defect {}",
                            self.gen_name(a),
                            self.gen_name(b),
                            self.gen_name(c),
                            self.show(&d)
                        ),
                    });
                }
            }
        }
        v
    }

    /// Every nonzero product of generators within the bounds.
    pub fn table(&self, max_gen: usize) -> Vec<(Gen, i64, Gen, Elem)> {
        let gens = self.generators(max_gen);
        let mut out = Vec::new();
        for &a in &gens {
            for &b in &gens {
                for n in 0..self.locality(a, b).max(0) {
                    let e = self.gen_product(a, n, b);
                    if !e.is_zero() {
                        out.push((a, n, b, e));
                    }
                }
            }
        }
        out
    }

    /// ⟦a, b⟧ in the coefficient algebra.
    pub fn coeff_bracket(&self, a: &CoeffElem, b: &CoeffElem) -> CoeffElem {
        let mut out = CoeffElem::zero();
        for ((g, m), ca) in a.iter() {
            for ((h, n), cb) in b.iter() {
                if self.is_central(*g) || self.is_central(*h) {
                    continue;
                }
                for i in 0..self.locality(*g, *h).max(0) {
                    let gi = gbinom_int(*m, i);
                    if gi.is_zero() {
                        continue;
                    }
                    let p = self.gen_product(*g, i, *h);
                    let c = Scalar::from_integer(gi) * ca * cb;
                    out.add_scaled(&self.modes_of(&p, m + n - i), &c);
                }
            }
        }
        out
    }

    /// (Σ c D^k g)(n) with (D^k g)(n) = (−1)^k n!/(n−k)! g(n−k).
    pub fn modes_of(&self, e: &Elem, n: i64) -> CoeffElem {
        let mut out = CoeffElem::zero();
        for ((g, k), c) in e.iter() {
            let k = *k as i64;
            let f = falling(n, k) * sc(sign(k)) * c;
            out.add(*g, n - k, f, self);
        }
        out
    }

    pub fn coeff_parity(&self, a: &CoeffElem) -> i64 {
        a.iter().next().map_or(0, |((g, _), _)| self.parity(*g))
    }

    pub fn show_coeff(&self, a: &CoeffElem) -> String {
        if a.is_zero() {
            return "0".into();
        }
        let parts: Vec<String> = a
            .iter()
            .map(|((g, n), c)| {
                if self.is_central(*g) {
                    format!("{c} c")
                } else {
                    format!("{c} {}({n})", self.gen_name(*g))
                }
            })
            .collect();
        parts.join(" + ")
    }
}

/// Σ c · g(n) in the coefficient algebra; only 𝖼(−1) of the central
/// modes survives.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CoeffElem(BTreeMap<(Gen, i64), Scalar>);

impl CoeffElem {
    pub fn zero() -> Self {
        CoeffElem::default()
    }

    pub fn mode(p: &Presentation, g: Gen, n: i64) -> Self {
        let mut e = CoeffElem::zero();
        e.add(g, n, Scalar::one(), p);
        e
    }

    pub fn add(&mut self, g: Gen, n: i64, c: Scalar, p: &Presentation) {
        if c.is_zero() || (p.is_central(g) && n != -1) {
            return;
        }
        let slot = self.0.entry((g, n)).or_insert_with(Scalar::zero);
        *slot += c;
        if slot.is_zero() {
            self.0.remove(&(g, n));
        }
    }

    pub fn add_scaled(&mut self, o: &CoeffElem, c: &Scalar) {
        for (k, x) in &o.0 {
            let slot = self.0.entry(*k).or_insert_with(Scalar::zero);
            *slot += x * c;
            if slot.is_zero() {
                self.0.remove(k);
            }
        }
    }

    pub fn scaled(&self, c: &Scalar) -> CoeffElem {
        let mut e = CoeffElem::zero();
        e.add_scaled(self, c);
        e
    }

    pub fn plus(&self, o: &CoeffElem) -> CoeffElem {
        let mut e = self.clone();
        e.add_scaled(o, &Scalar::one());
        e
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Gen, i64), &Scalar)> {
        self.0.iter()
    }
}

// ---- builtin presentations ----

const P: u8 = 0;
const U: u8 = 1;
const SU: u8 = 2;

fn weyl_base(m: i64, k: i64, n: i64) -> Elem {
    let mut e = Elem::zero();
    let top = m + n - k;
    if top >= 0 {
        e.add(Gen::new(P, top), 0, binom(top, m));
    }
    for s in 0..=(m - k) {
        let j = m + n - k - s;
        if j < 0 {
            continue;
        }
        // D^{(s)} = (−1)^s D^s / s!
        let c = binom(j, n) * Scalar::new((-sign(k) * sign(s)).into(), factorial(s).into());
        e.add(Gen::new(P, j), s as u32, c);
    }
    e
}

fn weyl_cocycle(m: i64, k: i64, n: i64) -> Option<Scalar> {
    (k == m + n + 1).then(|| sc(sign(m)))
}

/// Σ_{i≥0} D^{(i)} on a family.
fn dpow_div(fam: u8, top: i64, coeff: impl Fn(i64) -> Scalar) -> Elem {
    let mut e = Elem::zero();
    for i in 0..=top {
        let c = coeff(i) * Scalar::new(sign(i).into(), factorial(i).into());
        e.add(Gen::new(fam, top - i), i as u32, c);
    }
    e
}

pub fn weyl() -> Presentation {
    let families = vec![Family::indexed("p", 0, 2, 2), Family::central()];
    let base: Arc<BaseRule> = Arc::new(|a, k, b| {
        if a.fam != P || b.fam != P {
            return None;
        }
        Some(weyl_base(a.idx, k, b.idx))
    });
    let cocycle: Arc<CocycleRule> = Arc::new(|a, k, b| {
        if a.fam == P && b.fam == P {
            weyl_cocycle(a.idx, k, b.idx)
        } else {
            None
        }
    });
    let gens: Arc<GenList> = Arc::new(|mg| {
        let mut v: Vec<Gen> = (0..=mg as i64).map(|m| Gen::new(P, m)).collect();
        v.push(Gen::new(1, 0));
        v
    });
    Presentation::build("weyl", families, base, Some(cocycle), None, gens)
}

/// σ(p_m) = −(−1)^m Σ_i D^{(i)} p_{m−i}.
pub fn sigma_p(m: i64) -> Elem {
    dpow_div(P, m, |_| sc(-sign(m)))
}

/// p_m ∟k u_n.
fn tkk_pu(m: i64, k: i64, n: i64) -> Elem {
    let mut e = Elem::zero();
    if m + n - k >= 0 {
        e.add(Gen::new(U, m + n - k), 0, binom(m + n - k, m));
    }
    if k == 0 {
        e.add_scaled(&dpow_div(U, m + n, |i| binom(m + n - i, m)), &sc(-sign(n)));
    }
    e
}

/// u_m ∟k σ(u_n), finite ranges j ∈ [k, m+n], l ∈ [0, k].
fn tkk_usu(m: i64, k: i64, n: i64) -> Elem {
    let mut e = Elem::zero();
    let top = m + n - k;
    if top >= 0 {
        e.add(Gen::new(P, top), 0, binom(top, m) - sc(sign(m)) * binom(m + n, m));
    }
    for j in k..=m + n {
        for l in 0..=k {
            let c = sc(sign(l)) * binom(k, l) * (binom(j - k, m) - sc(sign(m)) * binom(j - l, m));
            if c.is_zero() {
                continue;
            }
            let s = m + n - j;
            let c = c * sc(-sign(n)) * Scalar::new(sign(s).into(), factorial(s).into());
            e.add(Gen::new(P, j - k), s as u32, c);
        }
    }
    e
}

pub fn tkk() -> Presentation {
    let families = vec![
        Family::indexed("p", 0, 2, 2),
        Family::indexed("u", 0, 2, 2),
        Family::indexed("su", 0, 2, 2),
        Family::central(),
    ];
    let base: Arc<BaseRule> = Arc::new(move |a, k, b| match (a.fam, b.fam) {
        (P, P) => Some(weyl_base(a.idx, k, b.idx)),
        (P, U) => Some(tkk_pu(a.idx, k, b.idx)),
        (P, SU) => Some(tkk_psu(a.idx, k, b.idx)),
        (U, SU) => Some(tkk_usu(a.idx, k, b.idx)),
        (U, U) | (SU, SU) => Some(Elem::zero()),
        _ => None,
    });
    // Sign fixed by the lattice realization.
    let cocycle: Arc<CocycleRule> = Arc::new(|a, k, b| match (a.fam, b.fam) {
        (P, P) => weyl_cocycle(a.idx, k, b.idx),
        (U, SU) => (k == a.idx + b.idx + 1).then(|| sc(-sign(a.idx)) * (binom(a.idx + b.idx, a.idx) - sc(1))),
        _ => None,
    });
    let reduce: Arc<ReduceRule> = Arc::new(|g| {
        if (g.fam == U || g.fam == SU) && g.idx % 2 == 0 {
            // u_m = −½ Σ_{i≥1} D^{(i)} u_{m−i}
            let mut e = Elem::zero();
            for i in 1..=g.idx {
                let c = frac(-1, 2) * Scalar::new(sign(i).into(), factorial(i).into());
                e.add(Gen::new(g.fam, g.idx - i), i as u32, c);
            }
            Some(e)
        } else {
            None
        }
    });
    let gens: Arc<GenList> = Arc::new(|mg| {
        let mut v: Vec<Gen> = (0..=mg as i64).map(|m| Gen::new(P, m)).collect();
        for m in (1..=mg as i64).step_by(2) {
            v.push(Gen::new(U, m));
            v.push(Gen::new(SU, m));
        }
        v.push(Gen::new(3, 0));
        v
    });
    Presentation::build("tkk", families, base, Some(cocycle), Some(reduce), gens)
}

/// p_m ∟k σ(u_n).
fn tkk_psu(m: i64, k: i64, n: i64) -> Elem {
    let mut e = Elem::zero();
    let top = m + n - k;
    if top >= 0 {
        e.add(Gen::new(SU, top), 0, sc(-sign(m)) * binom(m + n, m));
    }
    for i in 0..=n {
        let j = m + n - k - i;
        if j < 0 {
            continue;
        }
        let c = sc(sign(m + n)) * binom(m + n - k - i, m - k) * Scalar::new(sign(i).into(), factorial(i).into());
        e.add(Gen::new(SU, j), i as u32, c);
    }
    e
}

/// Finite presentation from an explicit table.
pub fn from_table(
    name: &str,
    families: Vec<Family>,
    table: HashMap<(Gen, i64, Gen), Elem>,
    cocycle: HashMap<(Gen, i64, Gen), Scalar>,
) -> Presentation {
    let pairs: std::collections::HashSet<(Gen, Gen)> =
        table.keys().chain(cocycle.keys()).map(|(a, _, b)| (*a, *b)).collect();
    let pairs2 = pairs.clone();
    let central_idx = families.iter().position(|f| f.central);
    let nf = families.len();
    let base: Arc<BaseRule> = Arc::new(move |a, n, b| {
        if let Some(e) = table.get(&(a, n, b)) {
            return Some(e.clone());
        }
        if pairs.contains(&(a, b)) || !pairs.contains(&(b, a)) {
            Some(Elem::zero())
        } else {
            None
        }
    });
    let cc: Arc<CocycleRule> = Arc::new(move |a, n, b| {
        if let Some(c) = cocycle.get(&(a, n, b)) {
            return Some(c.clone());
        }
        let _ = &pairs2;
        None
    });
    let gens: Arc<GenList> = Arc::new(move |_| {
        let mut v: Vec<Gen> = (0..nf).filter(|&i| Some(i) != central_idx).map(|i| Gen::new(i as u8, 0)).collect();
        if let Some(c) = central_idx {
            v.push(Gen::new(c as u8, 0));
        }
        v
    });
    Presentation::build(name, families, base, Some(cc), None, gens)
}

fn g(f: u8) -> Gen {
    Gen::new(f, 0)
}

fn el(terms: &[(u8, u32, Scalar)]) -> Elem {
    let mut e = Elem::zero();
    for (f, k, c) in terms {
        e.add(g(*f), *k, c.clone());
    }
    e
}

/// Heisenberg conformal algebra of a symmetric form: h_i ∟1 h_j = G_ij 𝖼.
pub fn heisenberg(gram: &[Vec<i64>]) -> Presentation {
    let r = gram.len();
    let mut fams: Vec<Family> = (0..r).map(|i| Family::plain(&format!("h{}", i + 1), 0, 2)).collect();
    fams.push(Family::central());
    let mut cc = HashMap::new();
    for i in 0..r {
        for j in 0..r {
            cc.insert((g(i as u8), 1, g(j as u8)), sc(gram[i][j]));
        }
    }
    from_table("heisenberg", fams, HashMap::new(), cc)
}

pub fn clifford() -> Presentation {
    let fams = vec![Family::plain("gm", 1, 1), Family::plain("gp", 1, 1), Family::central()];
    let mut cc = HashMap::new();
    cc.insert((g(0), 0, g(1)), sc(1));
    cc.insert((g(1), 0, g(0)), sc(1));
    from_table("clifford", fams, HashMap::new(), cc)
}

pub fn virasoro() -> Presentation {
    let fams = vec![Family::plain("L", 0, 4), Family::central()];
    let mut t = HashMap::new();
    t.insert((g(0), 0, g(0)), el(&[(0, 1, sc(1))]));
    t.insert((g(0), 1, g(0)), el(&[(0, 0, sc(2))]));
    let mut cc = HashMap::new();
    cc.insert((g(0), 3, g(0)), sc(-1));
    from_table("virasoro", fams, t, cc)
}

/// Affine sl₂: e ∟0 f = h, e ∟1 f = 𝖼, h ∟0 e = 2e, h ∟0 f = −2f, h ∟1 h = 2𝖼.
pub fn sl2() -> Presentation {
    let (e, f, h) = (0u8, 1u8, 2u8);
    let fams = vec![Family::plain("e", 0, 2), Family::plain("f", 0, 2), Family::plain("h", 0, 2), Family::central()];
    let mut t = HashMap::new();
    t.insert((g(e), 0, g(f)), el(&[(h, 0, sc(1))]));
    t.insert((g(h), 0, g(e)), el(&[(e, 0, sc(2))]));
    t.insert((g(h), 0, g(f)), el(&[(f, 0, sc(-2))]));
    let mut cc = HashMap::new();
    cc.insert((g(e), 1, g(f)), sc(1));
    cc.insert((g(h), 1, g(h)), sc(2));
    from_table("sl2", fams, t, cc)
}

/// N = 2 with the sign h ∟0 γ_{±1} = ∓γ_{±1} and the central terms of the
/// norm-3 lattice realization.
pub fn n2() -> Presentation {
    let (gm, gp, v, h) = (0u8, 1u8, 2u8, 3u8);
    let fams = vec![
        Family::plain("gm", 1, 3),
        Family::plain("gp", 1, 3),
        Family::plain("v", 0, 4),
        Family::plain("h", 0, 2),
        Family::central(),
    ];
    let mut t = HashMap::new();
    t.insert((g(gm), 0, g(gp)), el(&[(v, 0, sc(1)), (h, 1, frac(1, 2))]));
    t.insert((g(gm), 1, g(gp)), el(&[(h, 0, sc(1))]));
    for x in [gm, gp] {
        t.insert((g(v), 0, g(x)), el(&[(x, 1, sc(1))]));
        t.insert((g(v), 1, g(x)), el(&[(x, 0, frac(3, 2))]));
    }
    t.insert((g(h), 0, g(gm)), el(&[(gm, 0, sc(1))]));
    t.insert((g(h), 0, g(gp)), el(&[(gp, 0, sc(-1))]));
    t.insert((g(v), 0, g(v)), el(&[(v, 1, sc(1))]));
    t.insert((g(v), 1, g(v)), el(&[(v, 0, sc(2))]));
    t.insert((g(v), 0, g(h)), el(&[(h, 1, sc(1))]));
    t.insert((g(v), 1, g(h)), el(&[(h, 0, sc(1))]));
    let mut cc = HashMap::new();
    cc.insert((g(gm), 2, g(gp)), frac(1, 3));
    cc.insert((g(v), 3, g(v)), frac(1, 2));
    cc.insert((g(h), 1, g(h)), frac(1, 3));
    from_table("n2", fams, t, cc)
}

pub fn builtin(name: &str) -> Result<Presentation> {
    match name {
        "heisenberg" => Ok(heisenberg(&[vec![1]])),
        "clifford" => Ok(clifford()),
        "virasoro" => Ok(virasoro()),
        "weyl" => Ok(weyl()),
        "n2" => Ok(n2()),
        "tkk" => Ok(tkk()),
        "sl2" => Ok(sl2()),
        _ => Err(Error::UnknownAlgebra(name.into())),
    }
}

pub const BUILTINS: [&str; 7] = ["heisenberg", "clifford", "virasoro", "weyl", "n2", "tkk", "sl2"];

/// Reads a finite presentation:
/// `{"name", "generators": [{"name","parity","degree"}], "central": "c",
///   "products": [{"left","n","right","result"}], "cocycle": [{"left","n","right","value"}]}`.
/// `degree` is a number or a string such as "1/2"; `result` uses the
/// element syntax of [`Presentation::show`].
pub fn from_json(s: &str) -> Result<Presentation> {
    let v: Value = serde_json::from_str(s)?;
    let name = v.get("name").and_then(Value::as_str).unwrap_or("custom").to_string();
    let gens = v
        .get("generators")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse("missing `generators`".into()))?;
    let mut fams = Vec::new();
    for gv in gens {
        let n = gv.get("name").and_then(Value::as_str).ok_or_else(|| Error::Parse("generator without name".into()))?;
        let parity = gv.get("parity").and_then(Value::as_u64).unwrap_or(0) as u8;
        let deg = match gv.get("degree") {
            Some(Value::String(s)) => parse_scalar(s),
            Some(Value::Number(x)) => x.as_i64().map(sc).or_else(|| x.as_f64().map(|f| frac((f * 2.0).round() as i64, 2))),
            _ => None,
        }
        .ok_or_else(|| Error::Parse(format!("generator `{n}` needs a degree")))?;
        let d2 = deg * sc(2);
        if !d2.is_integer() {
            return Err(Error::Parse(format!("degree of `{n}` must be a half-integer")));
        }
        fams.push(Family::plain(n, parity, crate::foundation::to_i64(&d2).unwrap()));
    }
    let cname = v.get("central").and_then(Value::as_str).unwrap_or("c").to_string();
    let mut cfam = Family::central();
    cfam.name = cname;
    fams.push(cfam);
    let probe = from_table(&name, fams.clone(), HashMap::new(), HashMap::new());
    let mut table: HashMap<(Gen, i64, Gen), Elem> = HashMap::new();
    let mut coc: HashMap<(Gen, i64, Gen), Scalar> = HashMap::new();
    let z = probe.central().unwrap();
    for pv in v.get("products").and_then(Value::as_array).into_iter().flatten() {
        let (a, n, b) = triple(&probe, pv)?;
        let r = pv.get("result").and_then(Value::as_str).ok_or_else(|| Error::Parse("product without result".into()))?;
        let mut e = probe.parse_elem(r)?;
        let c = e.0.remove(&(z, 0));
        table.insert((a, n, b), e);
        if let Some(c) = c {
            coc.insert((a, n, b), c);
        }
    }
    for pv in v.get("cocycle").and_then(Value::as_array).into_iter().flatten() {
        let (a, n, b) = triple(&probe, pv)?;
        let val = match pv.get("value") {
            Some(Value::String(s)) => parse_scalar(s),
            Some(Value::Number(x)) => x.as_i64().map(sc),
            _ => None,
        }
        .ok_or_else(|| Error::Parse("cocycle entry needs a value".into()))?;
        coc.insert((a, n, b), val);
    }
    Ok(from_table(&name, fams, table, coc))
}

fn triple(p: &Presentation, v: &Value) -> Result<(Gen, i64, Gen)> {
    let a = p.parse_gen(v.get("left").and_then(Value::as_str).ok_or_else(|| Error::Parse("missing `left`".into()))?)?;
    let b = p.parse_gen(v.get("right").and_then(Value::as_str).ok_or_else(|| Error::Parse("missing `right`".into()))?)?;
    let n = v.get("n").and_then(Value::as_i64).ok_or_else(|| Error::Parse("missing `n`".into()))?;
    if n < 0 {
        return Err(Error::Parse("conformal products need n ≥ 0".into()));
    }
    Ok((a, n, b))
}

// ---- embeddings into lattice vertex algebras ----

/// A presentation together with images of its generators in V_Λ.
pub struct Embedding {
    pub algebra: Presentation,
    pub vertex: Vertex,
    image: Box<dyn Fn(&Vertex, Gen) -> FockState + Send + Sync>,
}

impl Embedding {
    pub fn image_gen(&self, g: Gen) -> FockState {
        (self.image)(&self.vertex, g)
    }

    pub fn image(&self, e: &Elem) -> FockState {
        let mut out = FockState::zero();
        for ((g, k), c) in e.iter() {
            let s = self.vertex.derive_n(&self.image_gen(*g), *k as usize);
            out.add_scaled(&s, c);
        }
        out
    }

    /// Checks φ(a)∟n φ(b) = φ(a∟n b) for generators up to `max_gen` and
    /// 0 ≤ n ≤ max(locality, max_n).
    pub fn verify(&self, max_gen: usize, max_n: i64, exec: Exec) -> Vec<Violation> {
        let p = &self.algebra;
        let gens: Vec<Gen> = p.generators(max_gen);
        let mut jobs = Vec::new();
        for &a in &gens {
            for &b in &gens {
                for n in 0..=max_n.max(p.locality(a, b)) {
                    jobs.push((a, n, b));
                }
            }
        }
        let imgs: HashMap<Gen, FockState> = gens.iter().map(|g| (*g, self.image_gen(*g))).collect();
        exec.flat_map(&jobs, |&(a, n, b)| {
            let lhs = self.vertex.prod(&imgs[&a], n, &imgs[&b]);
            let e = p.gen_product(a, n, b);
            let rhs = self.image(&e);
            if lhs == rhs {
                vec![]
            } else {
                vec![Violation {
                    axiom: "morphism".into(),
                    detail: format!(
                        "{} _{n} {} = {} maps to {} but the product of images is {}",
                        p.gen_name(a),
                        p.gen_name(b),
                        p.show(&e),
                        rhs,
                        lhs
                    ),
                }]
            }
        })
    }
}

fn lattice1(norm: i64) -> Vertex {
    Vertex::new(crate::LatticeContext::new(vec![vec![norm]]).unwrap())
}

/// p_m ↦ v₋₁ ∟_{−m−1} v₁ in V_ℤ.
pub fn weyl_image(v: &Vertex, m: i64) -> FockState {
    v.prod(&FockState::vac_at(vec![-1]), -m - 1, &FockState::vac_at(vec![1]))
}

pub fn embedding(name: &str) -> Result<Embedding> {
    let image: Box<dyn Fn(&Vertex, Gen) -> FockState + Send + Sync>;
    let (algebra, vertex) = match name {
        "clifford" => {
            image = Box::new(|v, g| match g.fam {
                0 => FockState::vac_at(vec![-1]),
                1 => FockState::vac_at(vec![1]),
                _ => v.vacuum(),
            });
            (clifford(), lattice1(1))
        }
        "sl2" => {
            image = Box::new(|v, g| match g.fam {
                0 => FockState::vac_at(vec![1]),
                1 => FockState::vac_at(vec![-1]),
                2 => FockState::heis_gen(&[1]),
                _ => v.vacuum(),
            });
            (sl2(), lattice1(2))
        }
        "heisenberg" => {
            image = Box::new(|v, g| match g.fam {
                0 => FockState::heis_gen(&[1]),
                _ => v.vacuum(),
            });
            (heisenberg(&[vec![1]]), lattice1(1))
        }
        "n2" => {
            image = Box::new(|v, g| match g.fam {
                0 => FockState::vac_at(vec![-1]).scaled(&frac(1, 3)),
                1 => FockState::vac_at(vec![1]),
                2 => v.omega().unwrap(),
                3 => FockState::heis_gen(&[1]).scaled(&frac(-1, 3)),
                _ => v.vacuum(),
            });
            (n2(), lattice1(3))
        }
        "virasoro" => {
            image = Box::new(|v, g| match g.fam {
                0 => weyl_image(v, 1),
                _ => v.vacuum(),
            });
            (virasoro(), lattice1(1))
        }
        "weyl" => {
            image = Box::new(|v, g| match g.fam {
                P => weyl_image(v, g.idx),
                _ => v.vacuum(),
            });
            (weyl(), lattice1(1))
        }
        "tkk" => {
            image = Box::new(|v, g| match g.fam {
                P => weyl_image(v, g.idx),
                U => v.prod(&FockState::vac_at(vec![-1]), -g.idx - 1, &FockState::vac_at(vec![-1])),
                SU => v.prod(&FockState::vac_at(vec![1]), -g.idx - 1, &FockState::vac_at(vec![1])),
                _ => v.vacuum(),
            });
            (tkk(), lattice1(1))
        }
        _ => return Err(Error::UnknownAlgebra(name.into())),
    };
    Ok(Embedding { algebra, vertex, image })
}

pub const EMBEDDINGS: [&str; 7] = ["clifford", "sl2", "heisenberg", "n2", "virasoro", "weyl", "tkk"];
