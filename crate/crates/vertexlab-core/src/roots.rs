//! Root systems of homogeneous conformal subalgebras of V_Λ: closure under
//! partial sums, the rank-1/rank-2 tables, positive definite
//! classification, finite semi-positive reconstruction and an empirical
//! support oracle.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::exec::Exec;
use crate::fock::{FockState, Mono, Vertex};
use crate::foundation::Scalar;
use crate::lattice::{Definiteness, LatticeContext, Point};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    ClosedFinite,
    ClosedAlmostFinite,
    Diverged,
    Truncated,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::ClosedFinite => "closed-finite",
            Status::ClosedAlmostFinite => "closed-almost-finite",
            Status::Diverged => "diverged",
            Status::Truncated => "truncated",
        };
        write!(f, "{s}")
    }
}

/// Δ = explicit ∪ ((full + P) ∖ {0}) for the period lattice P ⊂ Λ₀.
#[derive(Clone, Debug)]
pub struct RootSystem {
    pub lattice: LatticeContext,
    pub explicit: BTreeSet<Point>,
    pub full: BTreeSet<Point>,
    periods: Periods,
    pub status: Status,
    pub witness: Option<String>,
}

#[derive(Serialize)]
struct RootSystemJson<'a> {
    status: Status,
    roots: Vec<&'a Point>,
    cosets: Vec<&'a Point>,
    periods: Vec<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: &'a Option<String>,
}

impl RootSystem {
    pub fn periods(&self) -> Vec<Point> {
        self.periods.basis()
    }

    pub fn is_finite(&self) -> bool {
        self.status == Status::ClosedFinite
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        if x.iter().all(|&c| c == 0) {
            return false;
        }
        self.explicit.contains(x) || self.full.contains(&self.periods.reduce(x))
    }

    /// Roots r + Σ k_i p_i with |k_i| ≤ k.
    pub fn window(&self, k: i64) -> BTreeSet<Point> {
        let mut out: BTreeSet<Point> = self.explicit.clone();
        let shifts = self.periods.window(k);
        for r in &self.full {
            for s in &shifts {
                let x: Point = r.iter().zip(s).map(|(a, b)| a + b).collect();
                if x.iter().any(|&c| c != 0) {
                    out.insert(x);
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let j = RootSystemJson {
            status: self.status,
            roots: self.explicit.iter().collect(),
            cosets: self.full.iter().collect(),
            periods: self.periods(),
            witness: &self.witness,
        };
        serde_json::to_string(&j).unwrap()
    }
}

// ---- period lattices ----

/// A sublattice of Λ₀ kept in Hermite normal form on radical coordinates.
#[derive(Clone, Debug)]
struct Periods {
    lat: LatticeContext,
    rows: Vec<Vec<i64>>,
}

impl Periods {
    fn new(lat: &LatticeContext) -> Self {
        Periods { lat: lat.clone(), rows: Vec::new() }
    }

    fn is_zero(&self) -> bool {
        self.rows.is_empty()
    }

    fn rad(&self, x: &[i64]) -> (Vec<i64>, Vec<i64>) {
        let s = self.lat.split(x);
        let q = self.lat.quotient_rank();
        (s[..q].to_vec(), s[q..].to_vec())
    }

    fn add(&mut self, x: &[i64]) -> bool {
        let (_, r) = self.rad(x);
        let before = self.rows.clone();
        let mut rows = self.rows.clone();
        rows.push(r);
        self.rows = hnf(rows);
        self.rows != before
    }

    fn reduce(&self, x: &[i64]) -> Point {
        if self.rows.is_empty() {
            return x.to_vec();
        }
        let (q, mut r) = self.rad(x);
        for row in &self.rows {
            let c = row.iter().position(|&v| v != 0).unwrap();
            let t = r[c].div_euclid(row[c]);
            for (a, b) in r.iter_mut().zip(row) {
                *a -= t * b;
            }
        }
        let mut s = q;
        s.extend(r);
        self.lat.join(&s)
    }

    fn basis(&self) -> Vec<Point> {
        let q = self.lat.quotient_rank();
        self.rows
            .iter()
            .map(|r| {
                let mut s = vec![0; q];
                s.extend(r.iter().copied());
                self.lat.join(&s)
            })
            .collect()
    }

    fn window(&self, k: i64) -> Vec<Point> {
        let b = self.basis();
        let mut out = vec![vec![0; self.lat.rank()]];
        for p in &b {
            let mut next = Vec::new();
            for x in &out {
                for t in -k..=k {
                    next.push(x.iter().zip(p).map(|(a, c)| a + t * c).collect());
                }
            }
            out = next;
        }
        out
    }
}

/// Row Hermite normal form: positive pivots, entries above pivots reduced.
fn hnf(mut rows: Vec<Vec<i64>>) -> Vec<Vec<i64>> {
    rows.retain(|r| r.iter().any(|&x| x != 0));
    let Some(n) = rows.first().map(Vec::len) else { return rows };
    let mut out: Vec<Vec<i64>> = Vec::new();
    let mut col = 0;
    while col < n && !rows.is_empty() {
        loop {
            rows.retain(|r| r.iter().any(|&x| x != 0));
            let nz: Vec<usize> = (0..rows.len()).filter(|&i| rows[i][col] != 0).collect();
            if nz.len() <= 1 {
                if let Some(&i) = nz.first() {
                    let mut r = rows.remove(i);
                    if r[col] < 0 {
                        r.iter_mut().for_each(|x| *x = -*x);
                    }
                    out.push(r);
                }
                break;
            }
            let &p = nz.iter().min_by_key(|&&i| rows[i][col].abs()).unwrap();
            let pr = rows[p].clone();
            for &i in &nz {
                if i != p {
                    let t = rows[i][col].div_euclid(pr[col]);
                    for (a, b) in rows[i].iter_mut().zip(&pr) {
                        *a -= t * b;
                    }
                }
            }
        }
        col += 1;
    }
    for i in 0..out.len() {
        let c = out[i].iter().position(|&v| v != 0).unwrap();
        for k in 0..i {
            let t = out[k][c].div_euclid(out[i][c]);
            let ri = out[i].clone();
            for (a, b) in out[k].iter_mut().zip(&ri) {
                *a -= t * b;
            }
        }
    }
    out
}

// ---- rank 1 and rank 2 tables ----

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Rank2Case {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
    VIII,
}

/// 𝕜[D]-rank, possibly infinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Rank {
    Finite(usize),
    Infinite,
}

impl Rank2Case {
    pub const ALL: [Rank2Case; 8] = [
        Rank2Case::I,
        Rank2Case::II,
        Rank2Case::III,
        Rank2Case::IV,
        Rank2Case::V,
        Rank2Case::VI,
        Rank2Case::VII,
        Rank2Case::VIII,
    ];

    /// ((α|α), (β|β), (α|β)).
    pub fn gram(self) -> (i64, i64, i64) {
        match self {
            Rank2Case::I => (2, 2, -1),
            Rank2Case::II => (2, 1, -1),
            Rank2Case::III => (4, 2, -2),
            Rank2Case::IV => (1, 1, -1),
            Rank2Case::V => (2, 2, -2),
            Rank2Case::VI => (3, 3, -3),
            Rank2Case::VII => (4, 4, -4),
            Rank2Case::VIII => (4, 1, -2),
        }
    }

    pub fn gram_matrix(self) -> Vec<Vec<i64>> {
        let (a, b, c) = self.gram();
        vec![vec![a, c], vec![c, b]]
    }

    pub fn positive_definite(self) -> bool {
        matches!(self, Rank2Case::I | Rank2Case::II | Rank2Case::III)
    }

    /// Coefficients of δ in (α, β).
    pub fn delta(self) -> Option<(i64, i64)> {
        match self {
            Rank2Case::I | Rank2Case::II | Rank2Case::III => None,
            Rank2Case::VIII => Some((1, 2)),
            _ => Some((1, 1)),
        }
    }

    /// The listed roots in (α, β) coordinates; for cases (v)–(viii) the
    /// representatives of the cosets modulo ℤδ, including 0.
    pub fn roots(self) -> Vec<Point> {
        let base = match self {
            Rank2Case::I | Rank2Case::II | Rank2Case::IV => vec![vec![1, 0], vec![0, 1], vec![1, 1]],
            Rank2Case::III => vec![vec![1, 0], vec![0, 1], vec![1, 1], vec![1, 2]],
            _ => vec![vec![1, 0], vec![0, 1]],
        };
        let mut out: Vec<Point> = base.iter().flat_map(|r| [r.clone(), r.iter().map(|x| -x).collect()]).collect();
        if self.delta().is_some() && self != Rank2Case::IV {
            out.push(vec![0, 0]);
        }
        out.sort();
        out
    }

    pub fn rank_l0(self) -> Rank {
        match self {
            Rank2Case::I => Rank::Finite(2),
            Rank2Case::II => Rank::Finite(1),
            Rank2Case::IV => Rank::Finite(0),
            Rank2Case::V => Rank::Finite(2),
            Rank2Case::VI => Rank::Finite(4),
            _ => Rank::Infinite,
        }
    }

    /// 𝕜[D]-rank of 𝔏_λ for isotropic λ ∈ Δ.
    pub fn rank_isotropic(self) -> Option<Rank> {
        match self {
            Rank2Case::IV => Some(Rank::Finite(1)),
            Rank2Case::V => Some(Rank::Finite(2)),
            Rank2Case::VI => Some(Rank::Finite(3)),
            Rank2Case::VII | Rank2Case::VIII => Some(Rank::Infinite),
            _ => None,
        }
    }
}

impl fmt::Display for Rank2Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = ["i", "ii", "iii", "iv", "v", "vi", "vii", "viii"][*self as usize];
        write!(f, "({s})")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Rank2Class {
    Case { case: Rank2Case, swapped: bool, flipped: bool },
    Orthogonal,
    Inadmissible,
}

impl fmt::Display for Rank2Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rank2Class::Case { case, .. } => write!(f, "{case}"),
            Rank2Class::Orthogonal => write!(f, "orthogonal"),
            Rank2Class::Inadmissible => write!(f, "inadmissible"),
        }
    }
}

fn match_pair(na: i64, nb: i64, ip: i64) -> Option<(Rank2Case, bool)> {
    Rank2Case::ALL.iter().find_map(|&c| {
        let (a, b, g) = c.gram();
        if g != ip {
            None
        } else if (a, b) == (na, nb) {
            Some((c, false))
        } else if (b, a) == (na, nb) {
            Some((c, true))
        } else {
            None
        }
    })
}

/// Matches a Gram matrix of (α, β) against the rank-2 table; β is
/// replaced by −β when (α|β) > 0.
pub fn classify_rank2(gram: &[Vec<i64>]) -> Result<Rank2Class> {
    if gram.len() != 2 || gram.iter().any(|r| r.len() != 2) || gram[0][1] != gram[1][0] {
        return Err(Error::Domain("classify_rank2 needs a symmetric 2×2 Gram matrix".into()));
    }
    let (na, nb, ip) = (gram[0][0], gram[1][1], gram[0][1]);
    if ip == 0 {
        return Ok(Rank2Class::Orthogonal);
    }
    Ok(match match_pair(na, nb, -ip.abs()) {
        Some((case, swapped)) => Rank2Class::Case { case, swapped, flipped: ip > 0 },
        None => Rank2Class::Inadmissible,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Rank1Info {
    pub norm: i64,
    pub label: Option<Label>,
    pub algebra: &'static str,
}

pub fn classify_rank1(norm: i64) -> Result<Rank1Info> {
    let (label, algebra) = match norm {
        n if n <= 0 => return Err(Error::Domain(format!("rank-1 classification needs a positive norm, got {n}"))),
        1 => (Some(Label::B(1)), "Clifford conformal superalgebra"),
        2 => (Some(Label::A(1)), "affine sl2"),
        3 => (Some(Label::B1Prime), "central extension of N=2"),
        4 => (Some(Label::C(1)), "TKK conformal algebra K^"),
        _ => (None, "the whole lattice vertex algebra V_Zα"),
    };
    Ok(Rank1Info { norm, label, algebra })
}

/// The finite rank-1 systems as (label, multiples of α, norm of α).
pub fn rank1_table() -> Vec<(Label, Vec<i64>, i64)> {
    vec![
        (Label::A(1), vec![1], 2),
        (Label::B(1), vec![1], 1),
        (Label::C(1), vec![1], 4),
        (Label::BC(1), vec![1, 2], 1),
        (Label::B1Prime, vec![1], 3),
    ]
}

// ---- closure ----

fn neg(x: &[i64]) -> Point {
    x.iter().map(|a| -a).collect()
}

fn add(x: &[i64], y: &[i64]) -> Point {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

fn scale(x: &[i64], k: i64) -> Point {
    x.iter().map(|a| k * a).collect()
}

fn independent(a: &[i64], b: &[i64]) -> bool {
    (0..a.len()).any(|i| (0..a.len()).any(|j| a[i] * b[j] != a[j] * b[i]))
}

fn is_zero(x: &[i64]) -> bool {
    x.iter().all(|&c| c == 0)
}

pub const DEFAULT_MAX_NORM: i64 = 8;
pub const DEFAULT_MAX_ITER: usize = 10_000;

struct Closer<'a> {
    lat: &'a LatticeContext,
    explicit: BTreeSet<Point>,
    full: BTreeSet<Point>,
    periods: Periods,
    max_norm: i64,
}

enum Stop {
    Diverged(String),
    Truncated(String),
}

impl Closer<'_> {
    fn admit(&self, x: &[i64]) -> std::result::Result<(), Stop> {
        let n = self.lat.norm(x);
        if n < 0 {
            return Err(Stop::Diverged(format!("root {x:?} has negative norm {n}")));
        }
        if n >= 5 {
            return Err(Stop::Diverged(format!("root {x:?} has norm {n} ≥ 5, so v_{{±λ}} generate V_ℤλ")));
        }
        if n > self.max_norm {
            return Err(Stop::Truncated(format!("root {x:?} exceeds the norm cap {}", self.max_norm)));
        }
        Ok(())
    }

    fn insert(&mut self, x: Point, full: bool) -> std::result::Result<bool, Stop> {
        if full {
            let r = self.periods.reduce(&x);
            if self.full.contains(&r) {
                return Ok(false);
            }
            if !is_zero(&x) {
                self.admit(&x)?;
            }
            self.full.insert(r);
            Ok(true)
        } else {
            if is_zero(&x) || self.explicit.contains(&x) || self.full.contains(&self.periods.reduce(&x)) {
                return Ok(false);
            }
            self.admit(&x)?;
            self.explicit.insert(x);
            Ok(true)
        }
    }

    fn add_period(&mut self, d: &[i64]) -> bool {
        if !self.periods.add(d) {
            return false;
        }
        let full: BTreeSet<Point> = self.full.iter().map(|r| self.periods.reduce(r)).collect();
        self.full = full;
        self.full.insert(vec![0; self.lat.rank()]);
        let ex: BTreeSet<Point> =
            self.explicit.iter().filter(|x| !self.full.contains(&self.periods.reduce(x))).cloned().collect();
        self.explicit = ex;
        true
    }

    fn classes(&self) -> Vec<(Point, bool)> {
        self.full
            .iter()
            .map(|r| (r.clone(), true))
            .chain(self.explicit.iter().map(|x| (x.clone(), false)))
            .collect()
    }

    fn step(&mut self) -> std::result::Result<bool, Stop> {
        let cls = self.classes();
        let mut changed = false;
        for (a, fa) in &cls {
            let na = self.lat.norm(a);
            for (b, fb) in &cls {
                let ip = self.lat.ip(a, b);
                if ip == 0 {
                    continue;
                }
                let nb = self.lat.norm(b);
                if na != 0 && nb != 0 && independent(a, b) && match_pair(na, nb, -ip.abs()).is_none() {
                    return Err(Stop::Diverged(format!(
                        "roots {a:?}, {b:?} have Gram (({na}, {ip}), ({ip}, {nb})), outside the rank-2 table"
                    )));
                }
                if ip > 0 {
                    continue;
                }
                let s = add(a, b);
                if na == 4 && nb == 2 && ip == -2 {
                    changed |= self.insert(add(a, &scale(b, 2)), *fa || *fb)?;
                }
                if self.lat.definiteness() == Definiteness::SemiPositiveDefinite {
                    let sat = if na == nb && (2..=4).contains(&na) && self.lat.norm(&s) == 0 && !is_zero(&s) {
                        Some(s.clone())
                    } else if na == 4 && nb == 1 && ip == -2 {
                        Some(add(a, &scale(b, 2)))
                    } else {
                        None
                    };
                    if let Some(d) = sat {
                        let mut grew = self.add_period(&d);
                        for x in [a.clone(), neg(a), b.clone(), neg(b)] {
                            grew |= self.insert(x, true)?;
                        }
                        if grew {
                            return Ok(true);
                        }
                        continue;
                    }
                }
                changed |= self.insert(s, *fa || *fb)?;
            }
        }
        Ok(changed)
    }
}

/// Smallest Δ ⊇ gens ∪ −gens closed under α, β ↦ α + β for (α|β) < 0, with
/// isotropic saturation in semi-positive lattices and divergence detection.
pub fn close(gens: &[Point], lat: &LatticeContext, max_norm: i64, max_iter: usize) -> Result<RootSystem> {
    for g in gens {
        lat.check_rank(g)?;
        if is_zero(g) {
            return Err(Error::Domain("zero generator".into()));
        }
    }
    if gens.is_empty() {
        return Err(Error::Domain("close needs at least one generator".into()));
    }
    let mut c = Closer {
        lat,
        explicit: BTreeSet::new(),
        full: BTreeSet::new(),
        periods: Periods::new(lat),
        max_norm,
    };
    let finish = |c: Closer, status: Status, witness: Option<String>| RootSystem {
        lattice: lat.clone(),
        explicit: c.explicit,
        full: c.full,
        periods: c.periods,
        status,
        witness,
    };
    let mut run = || -> std::result::Result<(), Stop> {
        for g in gens {
            c.insert(g.clone(), false)?;
            c.insert(neg(g), false)?;
        }
        let mut it = 0;
        while c.step()? {
            it += 1;
            if it > max_iter || c.explicit.len() + c.full.len() > max_iter {
                return Err(Stop::Truncated(format!("iteration cap {max_iter} reached")));
            }
        }
        Ok(())
    };
    let res = run();
    Ok(match res {
        Ok(()) => {
            let st = if c.periods.is_zero() { Status::ClosedFinite } else { Status::ClosedAlmostFinite };
            finish(c, st, None)
        }
        Err(Stop::Diverged(w)) => finish(c, Status::Diverged, Some(w)),
        Err(Stop::Truncated(w)) => finish(c, Status::Truncated, Some(w)),
    })
}

/// Checks Δ = −Δ and closure under partial sums on a finite root set.
pub fn check_root_set(roots: &BTreeSet<Point>, lat: &LatticeContext) -> Result<()> {
    for a in roots {
        lat.check_rank(a)?;
        if is_zero(a) {
            return Err(Error::Constraint("0 is not a root".into()));
        }
        if !roots.contains(&neg(a)) {
            return Err(Error::Constraint(format!("{a:?} is a root but its negative is not")));
        }
        for b in roots {
            let s = add(a, b);
            if lat.ip(a, b) < 0 && !is_zero(&s) && !roots.contains(&s) {
                return Err(Error::Constraint(format!("{a:?} + {b:?} = {s:?} is missing from the partial-sum closure")));
            }
        }
    }
    Ok(())
}

/// Connected components of the non-orthogonality graph.
pub fn components(roots: &BTreeSet<Point>, lat: &LatticeContext) -> Vec<BTreeSet<Point>> {
    let v: Vec<&Point> = roots.iter().collect();
    let mut comp = vec![usize::MAX; v.len()];
    let mut out = Vec::new();
    for s in 0..v.len() {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut set = BTreeSet::new();
        let mut stack = vec![s];
        comp[s] = id;
        while let Some(i) = stack.pop() {
            set.insert(v[i].clone());
            for j in 0..v.len() {
                if comp[j] == usize::MAX && (lat.ip(v[i], v[j]) != 0 || v[j] == &neg(v[i])) {
                    comp[j] = id;
                    stack.push(j);
                }
            }
        }
        out.push(set);
    }
    out
}

// ---- positive definite classification ----

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    A(usize),
    D(usize),
    E(usize),
    B(usize),
    C(usize),
    BC(usize),
    B0(usize),
    B1Prime,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::A(n) => write!(f, "A({n})"),
            Label::D(n) => write!(f, "D({n})"),
            Label::E(n) => write!(f, "E({n})"),
            Label::B(n) => write!(f, "B({n})"),
            Label::C(n) => write!(f, "C({n})"),
            Label::BC(n) => write!(f, "BC({n})"),
            Label::B0(n) => write!(f, "B0({n})"),
            Label::B1Prime => write!(f, "B1prime"),
        }
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentReport {
    pub roots: Vec<Point>,
    pub label: Option<Label>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejection: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub components: Vec<ComponentReport>,
}

impl Classification {
    pub fn labels(&self) -> Vec<Option<Label>> {
        self.components.iter().map(|c| c.label.clone()).collect()
    }

    pub fn accepted(&self) -> bool {
        self.components.iter().all(|c| c.label.is_some())
    }

    /// "B(2)", or "A(1) + B(1)" for several components.
    pub fn summary(&self) -> String {
        self.components
            .iter()
            .map(|c| c.label.as_ref().map_or("rejected".to_string(), |l| l.to_string()))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// Labels each indecomposable component of a finite root set in a
/// positive definite lattice.
pub fn classify_posdef(roots: &BTreeSet<Point>, lat: &LatticeContext) -> Result<Classification> {
    if lat.definiteness() != Definiteness::PositiveDefinite {
        return Err(Error::Domain("classify_posdef needs a positive definite lattice".into()));
    }
    check_root_set(roots, lat)?;
    let components = components(roots, lat)
        .into_iter()
        .map(|c| {
            let (label, rejection) = match classify_component(&c, lat) {
                Ok(l) => (Some(l), None),
                Err(e) => (None, Some(e)),
            };
            ComponentReport { roots: c.into_iter().collect(), label, rejection }
        })
        .collect();
    Ok(Classification { components })
}

fn span_rank(v: &[Point]) -> usize {
    let mut rows: Vec<Vec<Scalar>> = v.iter().map(|r| r.iter().map(|&x| Scalar::from_integer(x.into())).collect()).collect();
    let n = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..n {
        let Some(p) = (rank..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(rank, p);
        let pr = rows[rank].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && !row[c].is_zero() {
                let t = &row[c] / &pr[c];
                for (a, b) in row.iter_mut().zip(&pr) {
                    *a -= &t * b;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// W-orbit of a set of simple roots.
pub fn weyl_closure(simple: &[Point], lat: &LatticeContext) -> BTreeSet<Point> {
    let mut out: BTreeSet<Point> = simple.iter().cloned().collect();
    let mut stack: Vec<Point> = simple.to_vec();
    while let Some(x) = stack.pop() {
        for a in simple {
            let k = 2 * lat.ip(&x, a) / lat.norm(a);
            let y: Point = x.iter().zip(a).map(|(p, q)| p - k * q).collect();
            if out.insert(y.clone()) {
                stack.push(y);
            }
        }
    }
    out
}

fn classify_component(roots: &BTreeSet<Point>, lat: &LatticeContext) -> std::result::Result<Label, String> {
    let v: Vec<Point> = roots.iter().cloned().collect();
    let norms: BTreeSet<i64> = v.iter().map(|r| lat.norm(r)).collect();
    if let Some(n) = norms.iter().find(|n| !(1..=4).contains(*n)) {
        return Err(format!("root of norm {n}; allowed norms are 1, 2, 3, 4"));
    }
    for a in &v {
        for b in &v {
            if (2 * lat.ip(a, b)) % lat.norm(a) != 0 {
                return Err(format!("Cartan number 2({a:?}|{b:?})/({a:?}|{a:?}) is not an integer"));
            }
        }
    }
    let r = span_rank(&v);
    if r == 1 {
        let g = v.iter().min_by_key(|x| lat.norm(x)).unwrap();
        let n = lat.norm(g);
        let single: BTreeSet<Point> = [g.clone(), neg(g)].into();
        let double: BTreeSet<Point> = [g.clone(), neg(g), scale(g, 2), scale(g, -2)].into();
        return match (n, roots == &single, roots == &double) {
            (1, true, _) => Ok(Label::B(1)),
            (2, true, _) => Ok(Label::A(1)),
            (3, true, _) => Ok(Label::B1Prime),
            (4, true, _) => Ok(Label::C(1)),
            (1, _, true) => Ok(Label::BC(1)),
            _ => Err(format!("rank-1 system {v:?} is not in the rank-1 table")),
        };
    }
    if is_b0(&v, lat, r) {
        return Ok(Label::B0(r));
    }
    let m = 1 + 2 * v.iter().flatten().map(|x| x.abs()).max().unwrap_or(1);
    let f = |x: &Point| x.iter().rev().fold(0i128, |acc, &c| acc * m as i128 + c as i128);
    let pos: BTreeSet<&Point> = v.iter().filter(|x| f(x) > 0).collect();
    let simple: Vec<Point> = pos
        .iter()
        .filter(|a| !pos.iter().any(|b| pos.contains(&add(a, &neg(b)))))
        .map(|a| (*a).clone())
        .collect();
    if simple.len() != r {
        return Err(format!("{} indecomposable positive roots for rank {r}; not a Cartan root system", simple.len()));
    }
    let ty = dynkin_type(&simple, lat)?;
    let phi = weyl_closure(&simple, lat);
    let short: BTreeSet<Point> = phi.iter().filter(|x| lat.norm(x) == *norms.iter().next().unwrap()).cloned().collect();
    let with_doubles: BTreeSet<Point> = phi.iter().cloned().chain(short.iter().map(|x| scale(x, 2))).collect();
    let nset: Vec<i64> = norms.iter().copied().collect();
    match ty {
        Dynkin::A(n) | Dynkin::D(n) | Dynkin::E(n) => {
            if nset != [2] {
                return Err(format!("simply-laced system with norms {nset:?}; all roots must have norm 2"));
            }
            if *roots != phi {
                return Err("root set is a proper subset of its Cartan root system".into());
            }
            Ok(match ty {
                Dynkin::A(_) => Label::A(n),
                Dynkin::D(_) => Label::D(n),
                _ => Label::E(n),
            })
        }
        Dynkin::BC(n) => {
            let sn: BTreeSet<i64> = simple.iter().map(|s| lat.norm(s)).collect();
            let sn: Vec<i64> = sn.into_iter().collect();
            if sn == [1, 2] && *roots == phi {
                Ok(Label::B(n))
            } else if sn == [1, 2] && *roots == with_doubles {
                Ok(Label::BC(n))
            } else if sn == [2, 4] && *roots == phi {
                Ok(Label::C(n))
            } else {
                Err(format!("doubly laced system with simple norms {sn:?} does not match B, C, BC or B0"))
            }
        }
    }
}

/// n pairwise orthogonal short pairs ±α_i and long roots exactly
/// {s_iα_i − s_jα_j} for one choice of signs.
fn is_b0(v: &[Point], lat: &LatticeContext, r: usize) -> bool {
    let short: Vec<&Point> = v.iter().filter(|x| lat.norm(x) == 1).collect();
    let long: BTreeSet<Point> = v.iter().filter(|x| lat.norm(x) == 2).cloned().collect();
    if short.len() + long.len() != v.len() || short.len() != 2 * r || long.len() != r * (r - 1) {
        return false;
    }
    let mut basis: Vec<Point> = Vec::new();
    for s in &short {
        if !basis.iter().any(|b| b == *s || *b == neg(s)) {
            basis.push((*s).clone());
        }
    }
    if basis.len() != r || basis.iter().enumerate().any(|(i, a)| basis[..i].iter().any(|b| lat.ip(a, b) != 0)) {
        return false;
    }
    for mask in 0..(1u32 << (r - 1)) {
        let s: Vec<Point> =
            basis.iter().enumerate().map(|(i, b)| if i > 0 && mask >> (i - 1) & 1 == 1 { neg(b) } else { b.clone() }).collect();
        let want: BTreeSet<Point> =
            (0..r).flat_map(|i| (0..r).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| add(&s[i], &neg(&s[j]))).collect();
        if want == long {
            return true;
        }
    }
    false
}

enum Dynkin {
    A(usize),
    D(usize),
    E(usize),
    BC(usize),
}

fn dynkin_type(simple: &[Point], lat: &LatticeContext) -> std::result::Result<Dynkin, String> {
    let n = simple.len();
    let a = |i: usize, j: usize| 2 * lat.ip(&simple[i], &simple[j]) / lat.norm(&simple[i]);
    let mut adj = vec![Vec::new(); n];
    let mut doubles = Vec::new();
    let mut edges = 0;
    for i in 0..n {
        for j in i + 1..n {
            let m = a(i, j) * a(j, i);
            match m {
                0 => continue,
                1 => {}
                2 => doubles.push((i, j)),
                _ => return Err(format!("bond of multiplicity {m}: G2-type geometry is excluded")),
            }
            adj[i].push(j);
            adj[j].push(i);
            edges += 1;
        }
    }
    if edges != n - 1 {
        return Err("Dynkin diagram is not a tree".into());
    }
    let deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    match doubles.len() {
        0 => {
            let branch: Vec<usize> = (0..n).filter(|&i| deg[i] >= 3).collect();
            match branch.as_slice() {
                [] => Ok(Dynkin::A(n)),
                [b] if deg[*b] == 3 => {
                    let mut arms: Vec<usize> = adj[*b]
                        .iter()
                        .map(|&s| {
                            let (mut prev, mut cur, mut len) = (*b, s, 1);
                            while let Some(&nx) = adj[cur].iter().find(|&&x| x != prev) {
                                prev = cur;
                                cur = nx;
                                len += 1;
                            }
                            len
                        })
                        .collect();
                    arms.sort_unstable();
                    match arms.as_slice() {
                        [1, 1, _] => Ok(Dynkin::D(n)),
                        [1, 2, 2] | [1, 2, 3] | [1, 2, 4] => Ok(Dynkin::E(n)),
                        _ => Err(format!("branched diagram with arms {arms:?} is not of finite type")),
                    }
                }
                _ => Err("diagram with several branch points".into()),
            }
        }
        1 => {
            if deg.iter().any(|&d| d > 2) {
                return Err("doubly laced diagram with a branch point".into());
            }
            let (i, j) = doubles[0];
            if deg[i] == 2 && deg[j] == 2 {
                return Err("double bond in the middle of the diagram: F4-type geometry is excluded".into());
            }
            Ok(Dynkin::BC(n))
        }
        _ => Err("several double bonds".into()),
    }
}

// ---- finite semi-positive reconstruction ----

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct ShortShifts {
    pub root: Point,
    pub shifts: Vec<Point>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct LongShift {
    pub root: Point,
    pub shift: Point,
}

/// Input of [`reconstruct_finite`]: Δ̄ in the positive definite lattice
/// with Gram `gram`, the rank of Λ₀, the sets Σ(β) for short β (missing
/// entries mean {0}), and δ(α) for the long roots α ∈ Ω.
#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct ReconstructInput {
    pub gram: Vec<Vec<i64>>,
    pub roots: Vec<Point>,
    pub isotropic_rank: usize,
    #[serde(default)]
    pub sigma: Vec<ShortShifts>,
    #[serde(default)]
    pub delta: Vec<LongShift>,
}

pub fn reconstruct_finite(inp: &ReconstructInput) -> Result<RootSystem> {
    let bar = LatticeContext::new(inp.gram.clone())?;
    if bar.definiteness() != Definiteness::PositiveDefinite {
        return Err(Error::Domain("Δ̄ must live in a positive definite lattice".into()));
    }
    let rset: BTreeSet<Point> = inp.roots.iter().cloned().collect();
    let cl = classify_posdef(&rset, &bar)?;
    for c in &cl.components {
        match &c.label {
            Some(Label::B(_)) | Some(Label::B0(_)) => {}
            other => {
                return Err(Error::Constraint(format!(
                    "component {:?} has type {}, only B and B0 components admit finite reconstructions",
                    c.roots,
                    other.as_ref().map_or("rejected".to_string(), |l| l.to_string())
                )))
            }
        }
    }
    let r0 = inp.isotropic_rank;
    let zero0 = vec![0; r0];
    let mut sigma: BTreeMap<Point, BTreeSet<Point>> = BTreeMap::new();
    for s in &inp.sigma {
        if !rset.contains(&s.root) || bar.norm(&s.root) != 1 {
            return Err(Error::Constraint(format!("Σ given for {:?}, which is not a short root", s.root)));
        }
        for d in &s.shifts {
            if d.len() != r0 {
                return Err(Error::LatticeMismatch(format!("shift {d:?} is not in Λ₀ of rank {r0}")));
            }
        }
        sigma.insert(s.root.clone(), s.shifts.iter().cloned().collect());
    }
    for b in rset.iter().filter(|b| bar.norm(b) == 1) {
        sigma.entry(b.clone()).or_insert_with(|| [zero0.clone()].into());
    }
    for (b, s) in &sigma {
        let negs: BTreeSet<Point> = s.iter().map(|x| neg(x)).collect();
        if &negs != s || sigma.get(&neg(b)) != Some(s) {
            return Err(Error::Constraint(format!("Σ({b:?}) must satisfy Σ(β) = −Σ(β) = Σ(−β)")));
        }
    }
    let mut delta: BTreeMap<Point, Point> = BTreeMap::new();
    for d in &inp.delta {
        if !rset.contains(&d.root) || bar.norm(&d.root) != 2 {
            return Err(Error::Constraint(format!("δ given for {:?}, which is not a long root", d.root)));
        }
        if d.shift.len() != r0 {
            return Err(Error::LatticeMismatch(format!("shift {:?} is not in Λ₀ of rank {r0}", d.shift)));
        }
        delta.insert(d.root.clone(), d.shift.clone());
    }
    for (a, d) in &delta {
        if delta.get(&neg(a)) != Some(&neg(d)) {
            return Err(Error::Constraint(format!("δ({a:?}) must equal −δ(−α)")));
        }
        for (b, s) in &sigma {
            if bar.ip(a, b) != 0 && !s.contains(d) {
                return Err(Error::Constraint(format!(
                    "({a:?}|{b:?}) ≠ 0 but δ({a:?}) = {d:?} is not in Σ({b:?})"
                )));
            }
        }
    }
    let q = bar.rank();
    let mut gram = vec![vec![0; q + r0]; q + r0];
    for i in 0..q {
        gram[i][..q].copy_from_slice(&inp.gram[i]);
    }
    let lat = LatticeContext::new(gram)?;
    let glue = |x: &Point, z: &Point| -> Point { x.iter().chain(z).copied().collect() };
    let mut union: BTreeSet<Point> = BTreeSet::new();
    for (b, s) in &sigma {
        for z in s {
            union.insert(glue(b, z));
        }
    }
    for a in rset.iter().filter(|a| bar.norm(a) == 2) {
        union.insert(glue(a, delta.get(a).unwrap_or(&zero0)));
    }
    let gens: Vec<Point> = union.iter().cloned().collect();
    let rs = close(&gens, &lat, DEFAULT_MAX_NORM, DEFAULT_MAX_ITER)?;
    if rs.status != Status::ClosedFinite {
        return Err(Error::Constraint(format!(
            "reconstruction is not finite ({}): {}",
            rs.status,
            rs.witness.clone().unwrap_or_default()
        )));
    }
    if let Some(x) = rs.explicit.iter().find(|x| lat.norm(x) != 0 && !union.contains(*x)) {
        return Err(Error::Constraint(format!("partial sums force the extra real root {x:?}")));
    }
    Ok(rs)
}

// ---- EARS checks ----

#[derive(Clone, Debug, Serialize)]
pub struct EarsReport {
    pub indec: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub indec_witness: Option<Point>,
    /// No roots of norm 1, so δ + α ∈ Δ is predicted for all δ ∈ Δ₀, α ∈ Δ.
    pub spd_applicable: bool,
    /// δ + α ∈ Δ (or 0) for all window pairs.
    pub shift_closed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift_witness: Option<(Point, Point)>,
}

impl EarsReport {
    /// Indecomposability holds, and the shift property holds wherever it
    /// is predicted.
    pub fn consistent(&self) -> bool {
        self.indec && (!self.spd_applicable || self.shift_closed)
    }
}

/// Checks ∀δ ∈ Δ₀ ∃α ∈ Δ^× with δ + α ∈ Δ^×, and δ + α ∈ Δ for all
/// δ ∈ Δ₀, α ∈ Δ, over the window |k| ≤ `window`.
pub fn check_ears(rs: &RootSystem, window: i64) -> Result<EarsReport> {
    let lat = &rs.lattice;
    if lat.definiteness() == Definiteness::Indefinite {
        return Err(Error::Domain("check_ears needs a semi-positive definite lattice".into()));
    }
    let w = rs.window(window);
    let iso: Vec<&Point> = w.iter().filter(|x| lat.norm(x) == 0).collect();
    let real: Vec<&Point> = w.iter().filter(|x| lat.norm(x) != 0).collect();
    let indec_witness = iso
        .iter()
        .find(|d| {
            !real.iter().any(|a| {
                let s = add(d, a);
                lat.norm(&s) != 0 && rs.contains(&s)
            })
        })
        .map(|d| (*d).clone());
    let shift_witness = iso.iter().find_map(|d| {
        w.iter().find(|a| {
            let s = add(d, a);
            !is_zero(&s) && !rs.contains(&s)
        })
        .map(|a| ((*d).clone(), a.clone()))
    });
    Ok(EarsReport {
        indec: indec_witness.is_none(),
        indec_witness,
        spd_applicable: real.iter().all(|a| lat.norm(a) != 1),
        shift_closed: shift_witness.is_none(),
        shift_witness,
    })
}

// ---- empirical support ----

#[derive(Default)]
struct Span {
    rows: Vec<(Mono, FockState)>,
}

impl Span {
    fn reduce(&self, s: &FockState) -> FockState {
        let mut s = s.clone();
        for (p, r) in &self.rows {
            let c = s.coeff(p);
            if !c.is_zero() {
                s.add_scaled(r, &-c);
            }
        }
        s
    }

    fn insert(&mut self, s: &FockState) -> Option<FockState> {
        let s = self.reduce(s);
        let (p, c) = s.iter().next().map(|(m, c)| (m.clone(), c.clone()))?;
        let n = s.scaled(&c.recip());
        for (_, r) in &mut self.rows {
            let c = r.coeff(&p);
            if !c.is_zero() {
                r.add_scaled(&n, &-c);
            }
        }
        self.rows.push((p, n));
        Some(s)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SupportReport {
    /// Nonzero labels carrying a nonzero component.
    pub labels: BTreeSet<Point>,
    /// dim 𝔏_{λ,d} keyed by label and twice the degree.
    pub dims: BTreeMap<Point, BTreeMap<i64, usize>>,
    pub generators: usize,
    /// Set when the search stopped at the first label outside `allowed`.
    pub stopped_early: bool,
}

impl SupportReport {
    pub fn dim(&self, label: &[i64], deg2: i64) -> usize {
        self.dims.get(label).and_then(|m| m.get(&deg2)).copied().unwrap_or(0)
    }

    /// dim 𝔏_{λ,d} for d > 0, which bounds the 𝕜[D]-rank from below once
    /// all generators of degree ≤ d are present.
    pub fn rank_at(&self, label: &[i64], deg2: i64) -> usize {
        self.dim(label, deg2)
    }
}

/// Components of the conformal subalgebra generated by {v_{±γ}}, through
/// twice-degree `deg2_cap`.
pub fn support_closure(gens: &[Point], lat: &LatticeContext, deg2_cap: i64, exec: Exec) -> Result<SupportReport> {
    if lat.definiteness() != Definiteness::PositiveDefinite {
        return Err(Error::Domain(
            "isotropic labels are unbounded at fixed degree; use support_closure_windowed".into(),
        ));
    }
    support_search(gens, lat, deg2_cap, exec, None, None)
}

/// Support closure that discards components whose radical coordinates
/// exceed `window` in absolute value.
pub fn support_closure_windowed(
    gens: &[Point],
    lat: &LatticeContext,
    deg2_cap: i64,
    window: i64,
    exec: Exec,
) -> Result<SupportReport> {
    support_search(gens, lat, deg2_cap, exec, None, Some(window))
}

/// Like [`support_closure`], but returns as soon as a component appears
/// whose label is not in `allowed`.
pub fn support_witness(
    gens: &[Point],
    lat: &LatticeContext,
    deg2_cap: i64,
    exec: Exec,
    allowed: &BTreeSet<Point>,
) -> Result<SupportReport> {
    support_search(gens, lat, deg2_cap, exec, Some(allowed), None)
}

fn support_search(
    gens: &[Point],
    lat: &LatticeContext,
    deg2_cap: i64,
    exec: Exec,
    allowed: Option<&BTreeSet<Point>>,
    window: Option<i64>,
) -> Result<SupportReport> {
    if lat.definiteness() == Definiteness::Indefinite {
        return Err(Error::Domain("support closure needs a semi-positive definite lattice".into()));
    }
    let q = lat.quotient_rank();
    let in_window = |l: &Point| window.is_none_or(|w| lat.split(l)[q..].iter().all(|c| c.abs() <= w));
    let vertex = Vertex::new(lat.clone());
    for g in gens {
        lat.check_rank(g)?;
        if is_zero(g) {
            return Err(Error::Domain("zero generator".into()));
        }
        if lat.norm(g) > deg2_cap {
            return Err(Error::Domain(format!("degree cap {deg2_cap}/2 is below the degree of v_{g:?}")));
        }
    }
    let mut spaces: HashMap<(Point, i64), Span> = HashMap::new();
    let mut gen_list: Vec<(FockState, Point, i64)> = Vec::new();
    let mut queue: Vec<FockState> = gens.iter().flat_map(|g| [FockState::vac_at(g.clone()), FockState::vac_at(neg(g))]).collect();
    let min_deg2 = |l: &Point| lat.norm(l).max(0);
    let mut next = 0;
    let mut stopped_early = false;
    'search: loop {
        for s in queue.drain(..) {
            for ((label, d2), c) in s.components(lat) {
                if d2 > deg2_cap || !in_window(&label) {
                    continue;
                }
                if allowed.is_some_and(|a| !is_zero(&label) && !a.contains(&label)) {
                    spaces.entry((label.clone(), d2)).or_default().insert(&c);
                    stopped_early = true;
                    break 'search;
                }
                let sp = spaces.entry((label.clone(), d2)).or_default();
                if let Some(r) = sp.insert(&c) {
                    gen_list.push((r.clone(), label.clone(), d2));
                    let mut x = r;
                    let mut e = d2;
                    loop {
                        x = vertex.derive(&x);
                        e += 2;
                        if e > deg2_cap || x.is_zero() {
                            break;
                        }
                        spaces.entry((label.clone(), e)).or_default().insert(&x);
                    }
                }
            }
        }
        if next >= gen_list.len() {
            break;
        }
        let cur = next;
        next += 1;
        let (g, gl, gd) = gen_list[cur].clone();
        let partners: Vec<(FockState, Point, i64)> = gen_list[..=cur].to_vec();
        let products = exec.flat_map(&partners, |(h, hl, hd)| {
            let mut out = Vec::new();
            let label = add(&gl, hl);
            let top = gd + hd - 2 - min_deg2(&label);
            let lo = (gd + hd - 2 - deg2_cap).max(0);
            let (lo, top) = ((lo + 1) / 2, top.div_euclid(2));
            for n in lo..=top {
                let a = vertex.prod(&g, n, h);
                if !a.is_zero() {
                    out.push(a);
                }
                let b = vertex.prod(h, n, &g);
                if !b.is_zero() {
                    out.push(b);
                }
            }
            out
        });
        queue.extend(products);
    }
    let mut dims: BTreeMap<Point, BTreeMap<i64, usize>> = BTreeMap::new();
    for ((l, d2), sp) in &spaces {
        if !sp.rows.is_empty() {
            dims.entry(l.clone()).or_default().insert(*d2, sp.rows.len());
        }
    }
    let labels = dims.keys().filter(|l| !is_zero(l)).cloned().collect();
    Ok(SupportReport { labels, dims, generators: gen_list.len(), stopped_early })
}
