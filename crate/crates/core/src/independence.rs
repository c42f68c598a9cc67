//! Singleton-pair independence models, their bitmask form, and closure under
//! the graphoid axioms.

use std::cmp::Ordering;
use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{independence_model_of_dag, Dag};
use crate::vset::VertexSet;

/// `<i, j | s>` with `i < j` and `s` disjoint from both.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CiStatement {
    pub i: usize,
    pub j: usize,
    pub s: VertexSet,
}

impl CiStatement {
    /// Canonicalizes the pair order; rejects `i == j`, vertex 0 and overlap.
    pub fn new(i: usize, j: usize, s: VertexSet) -> Result<Self> {
        if i == j {
            return Err(Error::InvalidStatement(format!("{i} paired with itself")));
        }
        if i == 0 || j == 0 || s.contains(i) || s.contains(j) {
            return Err(Error::InvalidStatement(format!(
                "<{i},{j}|{s}>: conditioning set must avoid the pair"
            )));
        }
        Ok(Self::new_unchecked(i.min(j), i.max(j), s))
    }

    pub(crate) fn new_unchecked(i: usize, j: usize, s: VertexSet) -> Self {
        debug_assert!(i < j && !s.contains(i) && !s.contains(j));
        CiStatement { i, j, s }
    }

    pub fn check_within(&self, m: usize) -> Result<()> {
        let top = self.j.max(self.s.last().unwrap_or(0));
        if top > m {
            return Err(Error::VertexOutOfRange { vertex: top, m });
        }
        Ok(())
    }
}

impl Ord for CiStatement {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.i, self.j, self.s.len())
            .cmp(&(other.i, other.j, other.s.len()))
            .then_with(|| self.s.iter().cmp(other.s.iter()))
    }
}

impl PartialOrd for CiStatement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CiStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}|{}>", self.i, self.j, self.s)
    }
}

impl std::str::FromStr for CiStatement {
    type Err = Error;

    /// Accepts the display form `<1,3|{2}>` and the shorthand `<1,3>`.
    fn from_str(text: &str) -> Result<Self> {
        let bad = || Error::InvalidStatement(format!("cannot parse `{text}`; expected `<i,j|{{s}}>`"));
        let body = text
            .trim()
            .strip_prefix('<')
            .and_then(|t| t.strip_suffix('>'))
            .ok_or_else(bad)?;
        let (pair, cond) = body.split_once('|').unwrap_or((body, "{}"));
        let (i, j) = pair.split_once(',').ok_or_else(bad)?;
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        let cond = cond
            .trim()
            .strip_prefix('{')
            .and_then(|t| t.strip_suffix('}'))
            .ok_or_else(bad)?;
        let members: Vec<usize> = cond
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(num)
            .collect::<Result<_>>()?;
        let s: VertexSet = members.iter().collect();
        if s.len() != members.len() {
            return Err(bad());
        }
        CiStatement::new(num(i)?, num(j)?, s)
    }
}

impl fmt::Debug for CiStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A set of singleton-pair statements over variables `1..=m`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IndependenceModel {
    m: usize,
    cis: BTreeSet<CiStatement>,
}

impl IndependenceModel {
    pub fn new(m: usize) -> Self {
        IndependenceModel {
            m,
            cis: BTreeSet::new(),
        }
    }

    pub fn from_statements<I: IntoIterator<Item = CiStatement>>(m: usize, cis: I) -> Result<Self> {
        let mut model = Self::new(m);
        for ci in cis {
            model.insert(ci)?;
        }
        Ok(model)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.cis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cis.is_empty()
    }

    pub fn insert(&mut self, ci: CiStatement) -> Result<bool> {
        ci.check_within(self.m)?;
        Ok(self.cis.insert(ci))
    }

    pub(crate) fn insert_unchecked(&mut self, ci: CiStatement) {
        self.cis.insert(ci);
    }

    pub fn contains(&self, ci: &CiStatement) -> bool {
        self.cis.contains(ci)
    }

    /// Statements in canonical order: `(i, j, |s|, s)`.
    pub fn iter(&self) -> impl Iterator<Item = &CiStatement> {
        self.cis.iter()
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        check_same_m(self, other)?;
        Ok(IndependenceModel {
            m: self.m,
            cis: self.cis.union(&other.cis).copied().collect(),
        })
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        check_same_m(self, other)?;
        Ok(IndependenceModel {
            m: self.m,
            cis: self.cis.difference(&other.cis).copied().collect(),
        })
    }

    pub fn to_mask(&self, index: &CiIndex) -> CiMask {
        debug_assert_eq!(index.m(), self.m);
        let mut mask = CiMask::default();
        for ci in &self.cis {
            mask.insert(index.index_of(ci.i, ci.j, ci.s));
        }
        mask
    }

    pub fn from_mask(index: &CiIndex, mask: &CiMask) -> Self {
        IndependenceModel {
            m: index.m(),
            cis: mask.iter().map(|n| index.statement(n)).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            m: self.m,
            cis: self
                .cis
                .iter()
                .map(|c| {
                    CiInput::Entry(CiEntry {
                        i: c.i,
                        j: c.j,
                        s: c.s.to_vec(),
                    })
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("plain data serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.m == 0 {
            return Err(Error::InvalidArgument("model needs m >= 1".into()));
        }
        let mut model = Self::new(file.m);
        for c in file.cis {
            let stmt = match c {
                CiInput::Text(t) => t.parse()?,
                CiInput::Entry(c) => {
                    let s: VertexSet = c.s.iter().collect();
                    if s.len() != c.s.len() {
                        return Err(Error::InvalidStatement(format!(
                            "duplicate conditioning vertex in {:?}",
                            c.s
                        )));
                    }
                    CiStatement::new(c.i, c.j, s)?
                }
            };
            model.insert(stmt)?;
        }
        Ok(model)
    }
}

impl fmt::Debug for IndependenceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "I(m={})", self.m)?;
        f.debug_set().entries(self.cis.iter()).finish()
    }
}

impl fmt::Display for IndependenceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (n, ci) in self.cis.iter().enumerate() {
            if n > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{ci}")?;
        }
        f.write_str("}")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    m: usize,
    cis: Vec<CiInput>,
}

/// Statements are written as objects; the display form `<i,j|{..}>` is also read.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CiInput {
    Entry(CiEntry),
    Text(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CiEntry {
    i: usize,
    j: usize,
    s: Vec<usize>,
}

fn check_same_m(a: &IndependenceModel, b: &IndependenceModel) -> Result<()> {
    if a.m != b.m {
        return Err(Error::DimensionMismatch {
            expected: a.m,
            found: b.m,
        });
    }
    Ok(())
}

/// Largest `m` for which statements fit in a [`CiMask`].
pub const MASK_CEILING: usize = 6;

/// Dense numbering of all singleton-pair statements over `m <= 6` variables:
/// pair rank times `2^(m-2)` plus the conditioning set with the pair's bits
/// squeezed out.
#[derive(Debug, Clone)]
pub struct CiIndex {
    m: usize,
    statements: Vec<CiStatement>,
}

impl CiIndex {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 || m > MASK_CEILING {
            return Err(Error::Ceiling {
                what: "statement index",
                requested: m,
                ceiling: MASK_CEILING,
            });
        }
        let mut index = CiIndex {
            m,
            statements: Vec::new(),
        };
        let all = VertexSet::full(m);
        let mut stmts = Vec::new();
        for i in 1..=m {
            for j in i + 1..=m {
                for s in all.without(i).without(j).subsets() {
                    stmts.push(CiStatement::new_unchecked(i, j, s));
                }
            }
        }
        let mut slots = vec![None; stmts.len()];
        for st in stmts {
            slots[index.index_of(st.i, st.j, st.s)] = Some(st);
        }
        index.statements = slots.into_iter().map(|s| s.expect("bijective")).collect();
        Ok(index)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn index_of(&self, i: usize, j: usize, s: VertexSet) -> usize {
        debug_assert!(i < j && j <= self.m);
        let m = self.m;
        // Pairs (a, b) with a < i come first: sum_{a < i} (m - a).
        let rank = (i - 1) * m - (i - 1) * i / 2 + (j - i - 1);
        let bits = s.bits();
        let (lo, hi) = (i - 1, j - 1);
        let below = bits & ((1 << lo) - 1);
        let mid = (bits >> (lo + 1)) & ((1 << (hi - lo - 1)) - 1);
        let above = bits >> (hi + 1);
        let packed = below | (mid << lo) | (above << (hi - 1));
        (rank << (m - 2)) | packed as usize
    }

    pub fn statement(&self, n: usize) -> CiStatement {
        self.statements[n]
    }

    pub fn statements(&self) -> &[CiStatement] {
        &self.statements
    }
}

/// Fixed-width bitset over [`CiIndex`] positions (at most 256).
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, Debug)]
pub struct CiMask([u64; 4]);

impl CiMask {
    pub fn insert(&mut self, n: usize) {
        self.0[n >> 6] |= 1 << (n & 63);
    }

    pub fn contains(&self, n: usize) -> bool {
        self.0[n >> 6] & (1 << (n & 63)) != 0
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }

    pub fn is_strict_subset(&self, other: &Self) -> bool {
        self != other && self.is_subset(other)
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut out = *self;
        for (a, b) in out.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
        out
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let mut out = *self;
        for (a, b) in out.0.iter_mut().zip(&other.0) {
            *a &= b;
        }
        out
    }

    pub fn difference(&self, other: &Self) -> Self {
        let mut out = *self;
        for (a, b) in out.0.iter_mut().zip(&other.0) {
            *a &= !b;
        }
        out
    }

    pub fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|w| *w == 0)
    }

    pub fn first(&self) -> Option<usize> {
        self.iter().next()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w * 64 + b)
            })
        })
    }
}

/// Which closure rules to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxiomSet {
    pub symmetry: bool,
    pub decomposition: bool,
    pub weak_union: bool,
    pub contraction: bool,
    pub intersection: bool,
    pub composition: bool,
}

impl AxiomSet {
    pub const SEMIGRAPHOID: AxiomSet = AxiomSet {
        symmetry: true,
        decomposition: true,
        weak_union: true,
        contraction: true,
        intersection: false,
        composition: false,
    };

    pub const GRAPHOID: AxiomSet = AxiomSet {
        intersection: true,
        ..Self::SEMIGRAPHOID
    };

    pub const COMPOSITIONAL_GRAPHOID: AxiomSet = AxiomSet {
        composition: true,
        ..Self::GRAPHOID
    };
}

/// Set-valued statement `X ⊥ Y | Z` used only inside closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetStatement {
    pub x: VertexSet,
    pub y: VertexSet,
    pub z: VertexSet,
}

/// Largest `m` accepted by [`closure`]; the lattice has `4^m` slots.
pub const CLOSURE_CEILING: usize = 6;

/// Least fixed point of the selected rules, as set-valued statements.
#[derive(Debug, Clone)]
pub struct Closure {
    m: usize,
    statements: Vec<SetStatement>,
}

impl Closure {
    pub fn statements(&self) -> &[SetStatement] {
        &self.statements
    }

    pub fn contains(&self, x: VertexSet, y: VertexSet, z: VertexSet) -> bool {
        self.statements.contains(&SetStatement { x, y, z })
    }

    /// Keeps statements with singleton `X` and `Y`, canonicalized.
    pub fn project(&self) -> IndependenceModel {
        let mut model = IndependenceModel::new(self.m);
        for st in &self.statements {
            if st.x.len() == 1 && st.y.len() == 1 {
                let a = st.x.last().unwrap();
                let b = st.y.last().unwrap();
                model.insert_unchecked(CiStatement::new_unchecked(a.min(b), a.max(b), st.z));
            }
        }
        model
    }
}

struct Lattice {
    m: usize,
    present: Vec<bool>,
    order: Vec<SetStatement>,
    queue: VecDeque<SetStatement>,
}

impl Lattice {
    fn slot(&self, st: SetStatement) -> usize {
        let mut idx = 0;
        for v in (1..=self.m).rev() {
            let digit = if st.x.contains(v) {
                1
            } else if st.y.contains(v) {
                2
            } else if st.z.contains(v) {
                3
            } else {
                0
            };
            idx = idx * 4 + digit;
        }
        idx
    }

    fn has(&self, x: VertexSet, y: VertexSet, z: VertexSet) -> bool {
        self.present[self.slot(SetStatement { x, y, z })]
    }

    fn add(&mut self, x: VertexSet, y: VertexSet, z: VertexSet) {
        debug_assert!(!x.is_empty() && !y.is_empty());
        let st = SetStatement { x, y, z };
        let slot = self.slot(st);
        if !self.present[slot] {
            self.present[slot] = true;
            self.order.push(st);
            self.queue.push_back(st);
        }
    }
}

/// Closes `model` under `axioms`, working over set-valued statements.
pub fn closure(model: &IndependenceModel, axioms: AxiomSet) -> Result<Closure> {
    let m = model.m();
    if m > CLOSURE_CEILING {
        return Err(Error::Ceiling {
            what: "closure",
            requested: m,
            ceiling: CLOSURE_CEILING,
        });
    }
    let all = VertexSet::full(m);
    let mut lat = Lattice {
        m,
        present: vec![false; 1 << (2 * m)],
        order: Vec::new(),
        queue: VecDeque::new(),
    };
    for ci in model.iter() {
        lat.add(VertexSet::singleton(ci.i), VertexSet::singleton(ci.j), ci.s);
    }
    while let Some(SetStatement { x, y, z }) = lat.queue.pop_front() {
        let rest = all.difference(x.union(y).union(z));
        if axioms.symmetry {
            lat.add(y, x, z);
        }
        if axioms.decomposition || axioms.weak_union {
            for w in y.subsets().filter(|w| !w.is_empty() && *w != y) {
                if axioms.decomposition {
                    lat.add(x, y.difference(w), z);
                }
                if axioms.weak_union {
                    lat.add(x, y.difference(w), z.union(w));
                }
            }
        }
        if axioms.contraction {
            // As first premise X ⊥ Y | Z with X ⊥ W | Z∪Y.
            for w in rest.subsets().skip(1) {
                if lat.has(x, w, z.union(y)) {
                    lat.add(x, y.union(w), z);
                }
            }
            // As second premise X ⊥ Y | C, C = Z∪W, with X ⊥ W | Z.
            for w in z.subsets().skip(1) {
                if lat.has(x, w, z.difference(w)) {
                    lat.add(x, y.union(w), z.difference(w));
                }
            }
        }
        if axioms.intersection {
            // X ⊥ Y | Z∪W with X ⊥ W | Z∪Y; the rule is symmetric in Y, W.
            for w in z.subsets().skip(1) {
                let zz = z.difference(w);
                if lat.has(x, w, zz.union(y)) {
                    lat.add(x, y.union(w), zz);
                }
            }
        }
        if axioms.composition {
            for w in rest.subsets().skip(1) {
                if lat.has(x, w, z) {
                    lat.add(x, y.union(w), z);
                }
            }
        }
    }
    lat.order.sort();
    Ok(Closure {
        m,
        statements: lat.order,
    })
}

/// `I(P) \ I(G)`, refusing when `G` is not Markovian to `p_model`.
pub fn unfaithful_set(g: &Dag, p_model: &IndependenceModel) -> Result<IndependenceModel> {
    if g.m() != p_model.m() {
        return Err(Error::DimensionMismatch {
            expected: g.m(),
            found: p_model.m(),
        });
    }
    let ig = independence_model_of_dag(g);
    if let Some(v) = ig.iter().find(|ci| !p_model.contains(ci)) {
        return Err(Error::NotMarkovian { violating: *v });
    }
    p_model.difference(&ig)
}

pub fn model_subset(a: &IndependenceModel, b: &IndependenceModel) -> Result<bool> {
    check_same_m(a, b)?;
    Ok(a.cis.is_subset(&b.cis))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ci(i: usize, j: usize, s: &[usize]) -> CiStatement {
        CiStatement::new(i, j, s.iter().collect()).unwrap()
    }

    #[test]
    fn parse_display_form() {
        let c: CiStatement = "<3,1|{2,4}>".parse().unwrap();
        assert_eq!(c, ci(1, 3, &[2, 4]));
        assert_eq!(c.to_string().parse::<CiStatement>().unwrap(), c);
        assert_eq!("<1,2>".parse::<CiStatement>().unwrap(), ci(1, 2, &[]));
        assert!("<1,2|{1}>".parse::<CiStatement>().is_err());
        assert!("1,2".parse::<CiStatement>().is_err());
    }

    #[test]
    fn canonical_order() {
        let mut v = vec![ci(1, 3, &[2, 4]), ci(1, 3, &[5]), ci(1, 2, &[]), ci(1, 3, &[])];
        v.sort();
        assert_eq!(v, vec![ci(1, 2, &[]), ci(1, 3, &[]), ci(1, 3, &[5]), ci(1, 3, &[2, 4])]);
        assert_eq!(ci(3, 1, &[]), ci(1, 3, &[]));
        assert!(CiStatement::new(1, 2, VertexSet::singleton(2)).is_err());
    }

    #[test]
    fn index_is_bijective() {
        for m in 1..=MASK_CEILING {
            let index = CiIndex::new(m).unwrap();
            let expected = if m < 2 { 0 } else { m * (m - 1) / 2 * (1 << (m - 2)) };
            assert_eq!(index.len(), expected);
            for (n, st) in index.statements().iter().enumerate() {
                assert_eq!(index.index_of(st.i, st.j, st.s), n);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let model = IndependenceModel::from_statements(4, [ci(2, 4, &[1, 3]), ci(1, 3, &[])]).unwrap();
        let text = model.to_json();
        let back = IndependenceModel::from_json(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_json(), text);
        assert!(IndependenceModel::from_json(r#"{"m":3,"cis":[{"i":1,"j":4,"s":[]}]}"#).is_err());
        assert!(IndependenceModel::from_json(r#"{"m":3,"cis":[{"i":1,"j":2,"s":[3,3]}]}"#).is_err());
    }

    #[test]
    fn closure_of_empty_is_empty() {
        let c = closure(&IndependenceModel::new(4), AxiomSet::COMPOSITIONAL_GRAPHOID).unwrap();
        assert!(c.statements().is_empty());
    }

    #[test]
    fn contraction_then_decomposition() {
        // 1 ⊥ 2 | ∅ and 1 ⊥ 3 | {2} give 1 ⊥ {2,3} and so 1 ⊥ 3.
        let model = IndependenceModel::from_statements(3, [ci(1, 2, &[]), ci(1, 3, &[2])]).unwrap();
        let semi = closure(&model, AxiomSet::SEMIGRAPHOID).unwrap();
        let pair: VertexSet = [2, 3].into_iter().collect();
        assert!(semi.contains(VertexSet::singleton(1), pair, VertexSet::EMPTY));
        assert!(semi.project().contains(&ci(1, 3, &[])));
        assert!(semi.project().contains(&ci(1, 2, &[3])));
    }

    #[test]
    fn intersection_needs_flag() {
        let model = IndependenceModel::from_statements(3, [ci(1, 2, &[3]), ci(1, 3, &[2])]).unwrap();
        let semi = closure(&model, AxiomSet::SEMIGRAPHOID).unwrap().project();
        let gra = closure(&model, AxiomSet::GRAPHOID).unwrap().project();
        assert!(!semi.contains(&ci(1, 2, &[])));
        assert!(gra.contains(&ci(1, 2, &[])));
    }

    #[test]
    fn unfaithful_set_requires_markov() {
        let chain = Dag::new(3, [(1, 2), (2, 3)]).unwrap();
        let empty = IndependenceModel::new(3);
        assert!(matches!(
            unfaithful_set(&chain, &empty),
            Err(Error::NotMarkovian { .. })
        ));
        let p = IndependenceModel::from_statements(3, [ci(1, 3, &[2]), ci(1, 3, &[])]).unwrap();
        let psi = unfaithful_set(&chain, &p).unwrap();
        assert_eq!(psi.iter().copied().collect::<Vec<_>>(), vec![ci(1, 3, &[])]);
    }
}
