//! Boson–fermion correspondence: banded matrices and their cocycle, the
//! Clifford Fock space, and weights of the charge components.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::ser::{Serialize, SerializeMap, Serializer};

use crate::exec::Exec;
use crate::fock::{FockState, Vertex};
use crate::foundation::{biased_frobenius, partitions, sc, sign, IntPoly, Scalar};
use crate::lattice::LatticeContext;
use crate::{Error, Result};

// ---- banded matrices ----

/// Σ_d Σ_i q_d(i) E_{i,i+d} plus a central part.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BandedMatrix {
    pub diags: BTreeMap<i64, IntPoly>,
    pub central: Scalar,
}

impl BandedMatrix {
    pub fn zero() -> Self {
        BandedMatrix::default()
    }

    pub fn diagonal(d: i64, q: IntPoly) -> Self {
        let mut m = BandedMatrix::zero();
        m.add_diag(d, &q);
        m
    }

    pub fn add_diag(&mut self, d: i64, q: &IntPoly) {
        let cur = self.diags.remove(&d).unwrap_or_else(IntPoly::zero);
        let s = &cur + q;
        if !s.is_zero() {
            self.diags.insert(d, s);
        }
    }

    pub fn entry(&self, i: i64, j: i64) -> Scalar {
        self.diags.get(&(j - i)).map_or_else(Scalar::zero, |q| q.eval(i))
    }

    pub fn is_zero(&self) -> bool {
        self.diags.is_empty() && self.central.is_zero()
    }

    pub fn plus(&self, o: &BandedMatrix) -> BandedMatrix {
        let mut m = self.clone();
        for (d, q) in &o.diags {
            m.add_diag(*d, q);
        }
        m.central += &o.central;
        m
    }

    pub fn scaled(&self, c: &Scalar) -> BandedMatrix {
        let mut m = BandedMatrix::zero();
        for (d, q) in &self.diags {
            m.add_diag(*d, &q.scale(c));
        }
        m.central = &self.central * c;
        m
    }

    /// Matrix product, ignoring central parts.
    pub fn compose(&self, o: &BandedMatrix) -> BandedMatrix {
        let mut m = BandedMatrix::zero();
        for (d1, a) in &self.diags {
            for (d2, b) in &o.diags {
                m.add_diag(d1 + d2, &(a * &b.shift(*d1)));
            }
        }
        m
    }

    /// Action on Clifford Fock states through the normal-ordered ê_ij;
    /// the central part acts as a scalar.
    pub fn act(&self, s: &CliffordFockState) -> CliffordFockState {
        let mut out = s.scaled(&self.central);
        let Some(reach) = s.iter().map(|(m, _)| m.reach()).max() else { return out };
        for (d, q) in &self.diags {
            let r = reach + d.abs() + 1;
            for i in -r..=r {
                let c = q.eval(i);
                if !c.is_zero() {
                    out.add_scaled(&ehat(i, i + d, s), &c);
                }
            }
        }
        out
    }
}

impl fmt::Display for BandedMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.diags.iter().map(|(d, q)| format!("[{q}] E(i,i{d:+})")).collect();
        if !self.central.is_zero() {
            parts.push(format!("{} c", self.central));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// ⟦A, B⟧ in M̂: the commutator with φ(A, B) as its central part.
pub fn mbracket(a: &BandedMatrix, b: &BandedMatrix) -> BandedMatrix {
    let mut m = a.compose(b).plus(&b.compose(a).scaled(&-Scalar::one()));
    m.central = mcocycle(a, b);
    m
}

/// φ(A, B) = tr(⟦A, J⟧B) with J = Σ_{i<0} E_ii.
pub fn mcocycle(a: &BandedMatrix, b: &BandedMatrix) -> Scalar {
    let mut s = Scalar::zero();
    for (d, qa) in &a.diags {
        let Some(qb) = b.diags.get(&-d) else { continue };
        let (lo, hi, sg) = if *d < 0 { (0, -d - 1, 1) } else { (-d, -1, -1) };
        for i in lo..=hi {
            s += qa.eval(i) * qb.eval(i + d) * sc(sg);
        }
    }
    s
}

/// p_m(n) = (−1)^m Σ_i binom(i+m, m) E_{i,i+m−n}.
pub fn weyl_to_matrix(m: i64, n: i64) -> Result<BandedMatrix> {
    if m < 0 {
        return Err(Error::Domain(format!("p_m(n) needs m ≥ 0, got {m}")));
    }
    Ok(BandedMatrix::diagonal(m - n, IntPoly::binom_shift(m).scale(&sc(sign(m)))))
}

// ---- Clifford Fock space ----

/// γ₋₁(a₁)⋯γ₋₁(a_k) γ₁(b₁)⋯γ₁(b_l) 𝟙 with a, b strictly decreasing and negative.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CMono {
    pub minus: Vec<i64>,
    pub plus: Vec<i64>,
}

impl CMono {
    pub fn vacuum() -> Self {
        CMono::default()
    }

    pub fn new(mut minus: Vec<i64>, mut plus: Vec<i64>) -> Result<Self> {
        minus.sort_unstable_by(|a, b| b.cmp(a));
        plus.sort_unstable_by(|a, b| b.cmp(a));
        for l in [&minus, &plus] {
            if l.iter().any(|&n| n >= 0) || l.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Domain("Clifford monomial needs distinct negative modes".into()));
            }
        }
        Ok(CMono { minus, plus })
    }

    pub fn charge(&self) -> i64 {
        self.plus.len() as i64 - self.minus.len() as i64
    }

    /// Twice the degree, d(γ_ε(n)) = −n − ½.
    pub fn deg2(&self) -> i64 {
        self.minus.iter().chain(&self.plus).map(|n| -2 * n - 1).sum()
    }

    fn reach(&self) -> i64 {
        self.minus.iter().chain(&self.plus).map(|n| -n).max().unwrap_or(0)
    }

    pub fn weight(&self) -> Weight {
        let mut w = Weight::lambda_c();
        for &a in &self.minus {
            w.add(a, 1);
        }
        for &b in &self.plus {
            w.add(-b - 1, -1);
        }
        w
    }
}

impl fmt::Display for CMono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.minus.iter().map(|n| format!("gm({n})")).collect();
        parts.extend(self.plus.iter().map(|n| format!("gp({n})")));
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join(" "))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CliffordFockState(BTreeMap<CMono, Scalar>);

impl CliffordFockState {
    pub fn zero() -> Self {
        CliffordFockState::default()
    }

    pub fn vacuum() -> Self {
        CliffordFockState::mono(CMono::vacuum())
    }

    pub fn mono(m: CMono) -> Self {
        let mut s = CliffordFockState::zero();
        s.add_term(m, Scalar::one());
        s
    }

    pub fn add_term(&mut self, m: CMono, c: Scalar) {
        if c.is_zero() {
            return;
        }
        let slot = self.0.entry(m.clone()).or_insert_with(Scalar::zero);
        *slot += c;
        if slot.is_zero() {
            self.0.remove(&m);
        }
    }

    pub fn add_scaled(&mut self, o: &CliffordFockState, c: &Scalar) {
        if c.is_zero() {
            return;
        }
        for (m, x) in &o.0 {
            self.add_term(m.clone(), x * c);
        }
    }

    pub fn scaled(&self, c: &Scalar) -> Self {
        let mut s = CliffordFockState::zero();
        s.add_scaled(self, c);
        s
    }

    pub fn minus(&self, o: &CliffordFockState) -> Self {
        let mut s = self.clone();
        s.add_scaled(o, &-Scalar::one());
        s
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CMono, &Scalar)> {
        self.0.iter()
    }

    pub fn coeff(&self, m: &CMono) -> Scalar {
        self.0.get(m).cloned().unwrap_or_else(Scalar::zero)
    }

    /// The single monomial of a monomial state.
    pub fn as_mono(&self) -> Option<&CMono> {
        match self.0.len() {
            1 => self.0.keys().next(),
            _ => None,
        }
    }
}

impl fmt::Display for CliffordFockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.0.iter().map(|(m, c)| format!("{c}*{m}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

fn act_mono(eps: i64, n: i64, m: &CMono) -> Option<(i64, CMono)> {
    let k = m.minus.len() as i64;
    let mut out = m.clone();
    if n < 0 {
        let list = if eps < 0 { &mut out.minus } else { &mut out.plus };
        let pos = list.iter().take_while(|&&x| x > n).count();
        if list.get(pos) == Some(&n) {
            return None;
        }
        list.insert(pos, n);
        let s = if eps < 0 { pos as i64 } else { k + pos as i64 };
        Some((sign(s), out))
    } else {
        let target = -n - 1;
        let list = if eps > 0 { &mut out.minus } else { &mut out.plus };
        let pos = list.iter().position(|&x| x == target)?;
        list.remove(pos);
        let s = if eps > 0 { pos as i64 } else { k + pos as i64 };
        Some((sign(s), out))
    }
}

/// γ_ε(n) on the Grassmann model: multiplication for n < 0, odd
/// derivation with ⟦γ_ε(m), γ_{−ε}(n)⟧ = δ_{m+n,−1} for n ≥ 0.
pub fn clifford_act(eps: i64, n: i64, s: &CliffordFockState) -> CliffordFockState {
    let mut out = CliffordFockState::zero();
    for (m, c) in s.iter() {
        if let Some((sg, m2)) = act_mono(eps, n, m) {
            out.add_term(m2, c * sc(sg));
        }
    }
    out
}

/// ê_ij = γ₋₁(i) γ₁(−j−1), and −γ₁(−j−1) γ₋₁(i) on the diagonal i = j ≥ 0.
pub fn ehat(i: i64, j: i64, s: &CliffordFockState) -> CliffordFockState {
    if i == j && i >= 0 {
        clifford_act(1, -j - 1, &clifford_act(-1, i, s)).scaled(&-Scalar::one())
    } else {
        clifford_act(-1, i, &clifford_act(1, -j - 1, s))
    }
}

/// φ(E_ij, E_kl).
pub fn phi_elementary(i: i64, j: i64, k: i64, l: i64) -> i64 {
    if i != l || j != k {
        0
    } else if j < 0 && i >= 0 {
        1
    } else if i < 0 && j >= 0 {
        -1
    } else {
        0
    }
}

/// All Clifford monomials of twice-degree ≤ `deg2_max`.
pub fn basis(deg2_max: i64) -> Vec<CMono> {
    fn subsets(max: i64, budget: i64, from: i64, cur: &mut Vec<i64>, out: &mut Vec<(Vec<i64>, i64)>) {
        out.push((cur.iter().rev().copied().collect(), budget));
        for n in from..=max {
            let cost = 2 * n - 1;
            if cost > budget {
                break;
            }
            cur.push(-n);
            subsets(max, budget - cost, n + 1, cur, out);
            cur.pop();
        }
    }
    let mut minus = Vec::new();
    subsets(deg2_max, deg2_max, 1, &mut Vec::new(), &mut minus);
    let mut out = Vec::new();
    for (mi, left) in minus {
        let mut plus = Vec::new();
        subsets(left, left, 1, &mut Vec::new(), &mut plus);
        for (pl, _) in plus {
            out.push(CMono { minus: mi.iter().rev().copied().collect(), plus: pl.iter().rev().copied().collect() });
        }
    }
    for m in &mut out {
        m.minus.sort_unstable_by(|a, b| b.cmp(a));
        m.plus.sort_unstable_by(|a, b| b.cmp(a));
    }
    out.sort();
    out
}

/// Monomials of the given charge with degree m + charge²/2.
pub fn basis_of(charge: i64, m: i64) -> Vec<CMono> {
    let d2 = 2 * m + charge * charge;
    basis(d2).into_iter().filter(|b| b.charge() == charge && b.deg2() == d2).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct BracketViolation {
    pub ij: (i64, i64),
    pub kl: (i64, i64),
    pub state: String,
}

/// Checks ⟦ê_ij, ê_kl⟧ = δ_jk ê_il − δ_il ê_kj + φ(E_ij, E_kl) on all
/// monomials of degree ≤ `cap` and indices in `-r..r`.
pub fn ehat_bracket_check(cap: i64, r: i64, exec: Exec) -> Vec<BracketViolation> {
    let states = basis(2 * cap);
    let quads: Vec<(i64, i64, i64, i64)> = (-r..r)
        .flat_map(|i| (-r..r).flat_map(move |j| (-r..r).flat_map(move |k| (-r..r).map(move |l| (i, j, k, l)))))
        .collect();
    exec.flat_map(&quads, |&(i, j, k, l)| {
        let mut v = Vec::new();
        for m in &states {
            let s = CliffordFockState::mono(m.clone());
            let lhs = ehat(i, j, &ehat(k, l, &s)).minus(&ehat(k, l, &ehat(i, j, &s)));
            let mut rhs = s.scaled(&sc(phi_elementary(i, j, k, l)));
            if j == k {
                rhs.add_scaled(&ehat(i, l, &s), &Scalar::one());
            }
            if i == l {
                rhs.add_scaled(&ehat(k, j, &s), &-Scalar::one());
            }
            if lhs != rhs {
                v.push(BracketViolation { ij: (i, j), kl: (k, l), state: m.to_string() });
            }
        }
        v
    })
}

// ---- weights ----

/// c·λ_𝖼 + Σ_i w_i λ_i.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Weight {
    pub c: i64,
    pub coeffs: BTreeMap<i64, i64>,
}

impl Weight {
    pub fn lambda_c() -> Self {
        Weight { c: 1, coeffs: BTreeMap::new() }
    }

    pub fn add(&mut self, i: i64, x: i64) {
        let e = self.coeffs.entry(i).or_insert(0);
        *e += x;
        if *e == 0 {
            self.coeffs.remove(&i);
        }
    }

    pub fn get(&self, i: i64) -> i64 {
        self.coeffs.get(&i).copied().unwrap_or(0)
    }

    /// μ(H_ij).
    pub fn on_coroot(&self, i: i64, j: i64) -> i64 {
        self.get(i) - self.get(j) + self.c * phi_elementary(i, j, j, i)
    }

    /// Number of positive coefficients at negative indices.
    pub fn length(&self) -> usize {
        self.coeffs.iter().filter(|(i, x)| **i < 0 && **x > 0).count()
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        if self.c != 0 {
            out.push_str(&term(self.c, "c".into(), true));
        }
        for (i, x) in &self.coeffs {
            out.push_str(&term(*x, i.to_string(), out.is_empty()));
        }
        if out.is_empty() {
            out.push('0');
        }
        write!(f, "{out}")
    }
}

fn term(x: i64, idx: String, first: bool) -> String {
    let sgn = match (x < 0, first) {
        (true, true) => "-",
        (false, true) => "",
        (true, false) => " - ",
        (false, false) => " + ",
    };
    let a = x.abs();
    if a == 1 {
        format!("{sgn}λ{idx}")
    } else {
        format!("{sgn}{a}λ{idx}")
    }
}

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.coeffs.len() + 1))?;
        m.serialize_entry("c", &self.c)?;
        for (i, x) in &self.coeffs {
            m.serialize_entry(&i.to_string(), x)?;
        }
        m.end()
    }
}

pub fn weight(s: &CliffordFockState) -> Result<Weight> {
    s.as_mono()
        .map(CMono::weight)
        .ok_or_else(|| Error::Domain("weight needs a single monomial".into()))
}

/// μ_i(κ) = λ_𝖼 + Σ_j λ_{−ξ_j} − Σ_j λ_{η_j} in biased Frobenius coordinates.
pub fn weights_of_degree(charge: i64, m: u32) -> Vec<Weight> {
    partitions(m)
        .iter()
        .map(|k| {
            let f = biased_frobenius(k, charge);
            let mut w = Weight::lambda_c();
            for x in &f.xi {
                w.add(-x, 1);
            }
            for y in &f.eta {
                w.add(*y, -1);
            }
            w
        })
        .collect()
}

/// Weights of the monomials of a charge component, with multiplicities.
pub fn enumerate_weights(charge: i64, m: i64) -> BTreeMap<Weight, usize> {
    let mut out = BTreeMap::new();
    for b in basis_of(charge, m) {
        *out.entry(b.weight()).or_insert(0) += 1;
    }
    out
}

/// Weights spanned by W₊ v inside the charge component of `v`, degrees
/// m ≤ `cap` above the charge minimum.
pub fn wplus_span(v: &CliffordFockState, cap: i64) -> Result<BTreeSet<Weight>> {
    let charge = match v.iter().next() {
        Some((m, _)) => m.charge(),
        None => return Ok(BTreeSet::new()),
    };
    if v.iter().any(|(m, _)| m.charge() != charge) {
        return Err(Error::Domain("wplus_span needs a state of one charge".into()));
    }
    let d2cap = 2 * cap + charge * charge;
    let mut ops = Vec::new();
    for m in 0..=2 * cap + 2 {
        for n in 0..=m + cap {
            if (m - n).abs() <= cap {
                ops.push(weyl_to_matrix(m, n)?);
            }
        }
    }
    let trunc = |s: &CliffordFockState| {
        let mut t = CliffordFockState::zero();
        for (m, c) in s.iter() {
            if m.deg2() <= d2cap {
                t.add_term(m.clone(), c.clone());
            }
        }
        t
    };
    let mut span = Echelon::default();
    let mut queue = vec![trunc(v)];
    while let Some(s) = queue.pop() {
        if !span.insert(&s) {
            continue;
        }
        for op in &ops {
            let t = trunc(&op.act(&s));
            if !t.is_zero() {
                queue.push(t);
            }
        }
    }
    Ok(span.support().iter().map(CMono::weight).collect())
}

/// The length-filtered weight set predicted for W₊ v.
pub fn wplus_expected(charge: i64, length: usize, cap: i64) -> BTreeSet<Weight> {
    (0..=cap as u32)
        .flat_map(|m| weights_of_degree(charge, m))
        .filter(|w| w.length() <= length)
        .collect()
}

#[derive(Default)]
struct Echelon {
    rows: Vec<(CMono, CliffordFockState)>,
}

impl Echelon {
    fn reduce(&self, s: &CliffordFockState) -> CliffordFockState {
        let mut s = s.clone();
        for (p, r) in &self.rows {
            let c = s.coeff(p);
            if !c.is_zero() {
                s.add_scaled(r, &-c);
            }
        }
        s
    }

    fn insert(&mut self, s: &CliffordFockState) -> bool {
        let s = self.reduce(s);
        let Some((p, c)) = s.iter().next().map(|(m, c)| (m.clone(), c.clone())) else { return false };
        let s = s.scaled(&c.recip());
        for (_, r) in &mut self.rows {
            let c = r.coeff(&p);
            if !c.is_zero() {
                r.add_scaled(&s, &-c);
            }
        }
        self.rows.push((p, s));
        true
    }

    fn support(&self) -> BTreeSet<CMono> {
        self.rows.iter().flat_map(|(_, r)| r.iter().map(|(m, _)| m.clone())).collect()
    }
}

// ---- transport to V_ℤ ----

/// The identification V ≅ V_ℤ with γ_ε ↦ v_ε and 𝟙 ↦ v₀.
pub struct BosonFermion {
    pub vertex: Vertex,
    cache: HashMap<CMono, FockState>,
}

impl Default for BosonFermion {
    fn default() -> Self {
        Self::new()
    }
}

impl BosonFermion {
    pub fn new() -> Self {
        BosonFermion { vertex: Vertex::new(LatticeContext::new(vec![vec![1]]).unwrap()), cache: HashMap::new() }
    }

    pub fn transport_mono(&mut self, m: &CMono) -> FockState {
        if let Some(s) = self.cache.get(m) {
            return s.clone();
        }
        let res = if let Some((&a, rest)) = m.minus.split_first() {
            let tail = self.transport_mono(&CMono { minus: rest.to_vec(), plus: m.plus.clone() });
            self.vertex.prod(&FockState::vac_at(vec![-1]), a, &tail)
        } else if let Some((&b, rest)) = m.plus.split_first() {
            let tail = self.transport_mono(&CMono { minus: vec![], plus: rest.to_vec() });
            self.vertex.prod(&FockState::vac_at(vec![1]), b, &tail)
        } else {
            self.vertex.vacuum()
        };
        self.cache.insert(m.clone(), res.clone());
        res
    }

    pub fn transport(&mut self, s: &CliffordFockState) -> FockState {
        let mut out = FockState::zero();
        for (m, c) in s.iter() {
            out.add_scaled(&self.transport_mono(m), c);
        }
        out
    }

    /// γ₋₁ ∟_{−m−1} γ₁ in V_ℤ.
    pub fn weyl_field(&self, m: i64) -> FockState {
        self.vertex.prod(&FockState::vac_at(vec![-1]), -m - 1, &FockState::vac_at(vec![1]))
    }

    /// Compares the engine's (γ₋₁∟_{−m−1}γ₁)(n) with the banded action of
    /// p_m(n) on every monomial of degree ≤ `cap`; returns the failures.
    pub fn check(&mut self, m: i64, n: i64, cap: i64) -> Result<Vec<CMono>> {
        let op = weyl_to_matrix(m, n)?;
        let w = self.weyl_field(m);
        let mut bad = Vec::new();
        for b in basis(2 * cap) {
            let s = CliffordFockState::mono(b.clone());
            let tb = self.transport_mono(&b);
            let lhs = self.vertex.prod(&w, n, &tb);
            let rhs = self.transport(&op.act(&s));
            if lhs != rhs {
                bad.push(b);
            }
        }
        Ok(bad)
    }
}

pub fn bf_check(m: i64, n: i64, cap: i64) -> Result<bool> {
    Ok(BosonFermion::new().check(m, n, cap)?.is_empty())
}

/// Charge-0 contravariance: ⟨ê_ij u, v⟩ = ⟨u, ê_ji v⟩ for the monomial
/// form; returns offending (i, j, u, v).
pub fn contravariance_defects(cap: i64, r: i64) -> Vec<(i64, i64, CMono, CMono)> {
    let states: Vec<CMono> = basis(2 * cap).into_iter().filter(|b| b.charge() == 0).collect();
    let mut out = Vec::new();
    for i in -r..r {
        for j in -r..r {
            for u in &states {
                let eu = ehat(i, j, &CliffordFockState::mono(u.clone()));
                for v in &states {
                    let ev = ehat(j, i, &CliffordFockState::mono(v.clone()));
                    if eu.coeff(v) != ev.coeff(u) {
                        out.push((i, j, u.clone(), v.clone()));
                    }
                }
            }
        }
    }
    out
}

/// For a monomial u of weight μ and i ≠ j: E_ij u ≠ 0 iff μ(H_ij) < 0, and then E_ij u = ±(a monomial) of weight μ + λ_i − λ_j.
pub fn eij_rule_holds(i: i64, j: i64, u: &CMono) -> bool {
    let mu = u.weight();
    let e = ehat(i, j, &CliffordFockState::mono(u.clone()));
    let predicted = mu.on_coroot(i, j) < 0;
    if !predicted {
        return e.is_zero();
    }
    match e.as_mono() {
        Some(m) => {
            let mut want = mu.clone();
            want.add(i, 1);
            want.add(j, -1);
            m.weight() == want && e.coeff(m).abs().is_one()
        }
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foundation::gbinom;
    use proptest::prelude::*;

    fn st(minus: Vec<i64>, plus: Vec<i64>) -> CliffordFockState {
        CliffordFockState::mono(CMono::new(minus, plus).unwrap())
    }

    #[test]
    fn clifford_signs() {
        let x = st(vec![], vec![-2]);
        let s = st(vec![-1], vec![-2]);
        assert_eq!(clifford_act(1, 0, &s), x);
        assert!(clifford_act(1, 5, &CliffordFockState::vacuum()).is_zero());
        let y = clifford_act(-1, -3, &CliffordFockState::vacuum());
        assert!(clifford_act(-1, -3, &y).is_zero());
        // γ₁(−1) passes the γ₋₁ block
        let z = clifford_act(1, -1, &st(vec![-1, -2], vec![]));
        assert_eq!(z, st(vec![-1, -2], vec![-1]));
        let z = clifford_act(-1, -3, &st(vec![-1, -5], vec![-1]));
        assert_eq!(z, st(vec![-1, -3, -5], vec![-1]).scaled(&sc(-1)));
    }

    #[test]
    fn clifford_anticommutators() {
        for s in basis(6) {
            let s = CliffordFockState::mono(s);
            for e1 in [-1, 1] {
                for e2 in [-1, 1] {
                    for m in -4..4 {
                        for n in -4..4 {
                            let ab = clifford_act(e1, m, &clifford_act(e2, n, &s));
                            let ba = clifford_act(e2, n, &clifford_act(e1, m, &s));
                            let mut sum = ab;
                            sum.add_scaled(&ba, &Scalar::one());
                            let want = if e1 == -e2 && m + n == -1 { s.clone() } else { CliffordFockState::zero() };
                            assert_eq!(sum, want);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn ehat_examples() {
        let v = CliffordFockState::vacuum();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(ehat(i, j, &v).is_zero());
                }
            }
        }
        for s in basis(8) {
            let s = CliffordFockState::mono(s);
            let lhs = ehat(0, -1, &ehat(-1, 0, &s)).minus(&ehat(-1, 0, &ehat(0, -1, &s)));
            let mut rhs = ehat(0, 0, &s).minus(&ehat(-1, -1, &s));
            rhs.add_scaled(&s, &Scalar::one());
            assert_eq!(lhs, rhs);
            let lhs = ehat(0, 1, &ehat(1, 0, &s)).minus(&ehat(1, 0, &ehat(0, 1, &s)));
            assert_eq!(lhs, ehat(0, 0, &s).minus(&ehat(1, 1, &s)));
        }
    }

    #[test]
    fn bracket_relations_small() {
        assert!(ehat_bracket_check(3, 3, Exec::best()).is_empty());
    }

    #[test]
    fn weyl_matrices() {
        let t = weyl_to_matrix(0, 1).unwrap();
        assert_eq!(t, BandedMatrix::diagonal(-1, IntPoly::constant(sc(1))));
        let p = weyl_to_matrix(1, 0).unwrap();
        assert_eq!(p, BandedMatrix::diagonal(1, IntPoly::new(vec![sc(-1), sc(-1)])));
        let b = mbracket(&t, &p);
        assert_eq!(b, BandedMatrix::diagonal(0, IntPoly::constant(sc(1))));
        let tinv = weyl_to_matrix(0, -1).unwrap();
        assert_eq!(mcocycle(&t, &tinv), sc(1));
        assert!(weyl_to_matrix(-1, 0).is_err());
        assert!(mcocycle(&t, &t).is_zero());
    }

    /// tr(⟦A, J⟧ B) over the window [−w, w].
    fn dense_cocycle(a: impl Fn(i64, i64) -> Scalar, b: impl Fn(i64, i64) -> Scalar, w: i64) -> Scalar {
        let mut s = Scalar::zero();
        for i in -w..=w {
            for k in -w..=w {
                let jk = i64::from(k < 0) - i64::from(i < 0);
                if jk != 0 {
                    s += a(i, k) * b(k, i) * sc(jk);
                }
            }
        }
        s
    }

    #[test]
    fn cocycle_window_matches_dense() {
        let unit = |r: i64, c: i64| move |i: i64, k: i64| sc(i64::from(i == r && k == c));
        for i in -3..3 {
            for j in -3..3 {
                for k in -3..3 {
                    for l in -3..3 {
                        assert_eq!(dense_cocycle(unit(i, j), unit(k, l), 8), sc(phi_elementary(i, j, k, l)));
                    }
                }
            }
        }
        for m in 0..=4 {
            for n in 0..=4 {
                for k in -6..=6 {
                    for l in -6..=6 {
                        let a = weyl_to_matrix(m, k).unwrap();
                        let b = weyl_to_matrix(n, l).unwrap();
                        assert_eq!(mcocycle(&a, &b), dense_cocycle(|i, k| a.entry(i, k), |i, k| b.entry(i, k), 20));
                        let want = if m + n == k + l { sc(sign(m)) * gbinom(k, m + n + 1).unwrap() } else { sc(0) };
                        assert_eq!(mcocycle(&a, &b), want, "m={m} n={n} k={k} l={l}");
                    }
                }
            }
        }
    }

    #[test]
    fn weights() {
        assert_eq!(CliffordFockState::vacuum().iter().next().unwrap().0.weight(), Weight::lambda_c());
        let w = weight(&st(vec![-1], vec![-1])).unwrap();
        assert_eq!(w.to_string(), "λc + λ-1 - λ0");
        assert_eq!(w.length(), 1);
        assert_eq!(serde_json::to_string(&w).unwrap(), r#"{"c":1,"-1":1,"0":-1}"#);
        assert!(weight(&CliffordFockState::zero()).is_err());
        for m in 0..=6u32 {
            let pred: BTreeSet<Weight> = weights_of_degree(0, m).into_iter().collect();
            let en = enumerate_weights(0, m as i64);
            assert_eq!(pred.len(), partitions(m).len());
            assert!(en.values().all(|&c| c == 1));
            assert_eq!(pred, en.keys().cloned().collect());
        }
        let w2: BTreeSet<Weight> = weights_of_degree(1, 2).into_iter().collect();
        assert_eq!(w2, enumerate_weights(1, 2).keys().cloned().collect());
    }

    #[test]
    fn charge_degree_bound() {
        for b in basis(12) {
            assert!(b.deg2() >= b.charge() * b.charge());
        }
    }

    #[test]
    fn wplus_vacuum_and_length_one() {
        let s = wplus_span(&CliffordFockState::vacuum(), 4).unwrap();
        assert_eq!(s, [Weight::lambda_c()].into_iter().collect());
        let v = st(vec![-1], vec![-1]);
        assert_eq!(wplus_span(&v, 4).unwrap(), wplus_expected(0, 1, 4));
    }

    #[test]
    fn eij_on_weight_vectors() {
        for b in basis(8).into_iter().filter(|b| b.charge() == 0) {
            for i in -4..4 {
                for j in -4..4 {
                    if i != j {
                        assert!(eij_rule_holds(i, j, &b), "{i} {j} {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn contravariant_form() {
        assert!(contravariance_defects(4, 4).is_empty());
    }

    #[test]
    fn bf_small() {
        let mut bf = BosonFermion::new();
        for m in 0..=2 {
            for n in -2..=2 {
                assert!(bf.check(m, n, 3).unwrap().is_empty(), "m={m} n={n}");
            }
        }
    }

    fn banded() -> impl Strategy<Value = BandedMatrix> {
        prop::collection::vec((-4i64..=4, prop::collection::vec(-3i64..=3, 0..=4)), 1..3).prop_map(|ds| {
            let mut m = BandedMatrix::zero();
            for (d, c) in ds {
                m.add_diag(d, &IntPoly::new(c.into_iter().map(sc).collect()));
            }
            m
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn cocycle_identity(a in banded(), b in banded(), c in banded()) {
            let ab = mbracket(&a, &b);
            let bc = mbracket(&b, &c);
            let ca = mbracket(&c, &a);
            let s = mcocycle(&ab, &c) + mcocycle(&bc, &a) + mcocycle(&ca, &b);
            prop_assert!(s.is_zero());
            prop_assert_eq!(mcocycle(&a, &b), -mcocycle(&b, &a));
        }
    }
}
