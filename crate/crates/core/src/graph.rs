//! DAGs, d-separation, Markov equivalence, enumeration and the two DAG
//! constructions driven by independence statements.

use std::fmt;

use crate::error::{Error, Result};
use crate::independence::{CiIndex, CiMask, CiStatement, IndependenceModel};
use crate::vset::{VertexSet, MAX_VERTICES};

/// Largest `m` [`enumerate_dags`] accepts.
pub const ENUMERATION_CEILING: usize = 6;

/// A simple acyclic digraph on vertices `1..=m`, stored as parent sets.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dag {
    m: usize,
    parents: Vec<VertexSet>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TripleKind {
    Unshielded,
    Shielded,
}

/// Path `i - j - k` through the middle vertex `j`, with `i < k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triple {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub kind: TripleKind,
    pub collider_at_j: bool,
}

impl Dag {
    pub fn empty(m: usize) -> Result<Dag> {
        check_m(m)?;
        Ok(Dag {
            m,
            parents: vec![VertexSet::EMPTY; m],
        })
    }

    /// Builds and validates a DAG from `(j, k)` pairs meaning `j -> k`.
    pub fn new<I: IntoIterator<Item = (usize, usize)>>(m: usize, edges: I) -> Result<Dag> {
        let mut g = Dag::empty(m)?;
        for (j, k) in edges {
            g.check_vertex(j)?;
            g.check_vertex(k)?;
            if j == k {
                return Err(Error::InvalidDag(format!("self-loop at {j}")));
            }
            if g.parents[k - 1].contains(j) {
                return Err(Error::InvalidDag(format!("duplicate edge {j} -> {k}")));
            }
            if g.parents[j - 1].contains(k) {
                return Err(Error::InvalidDag(format!(
                    "both {j} -> {k} and {k} -> {j} present"
                )));
            }
            g.parents[k - 1].insert(j);
        }
        if let Some(v) = g.cycle_vertex() {
            return Err(Error::InvalidDag(format!("directed cycle through {v}")));
        }
        Ok(g)
    }

    pub fn from_parents(parents: Vec<VertexSet>) -> Result<Dag> {
        let m = parents.len();
        let mut edges = Vec::new();
        for (idx, pa) in parents.iter().enumerate() {
            if pa.last().is_some_and(|v| v > m) {
                return Err(Error::VertexOutOfRange {
                    vertex: pa.last().unwrap(),
                    m,
                });
            }
            edges.extend(pa.iter().map(|j| (j, idx + 1)));
        }
        Dag::new(m, edges)
    }

    /// Complete DAG in which every vertex points to all later vertices of `order`.
    pub fn complete(order: &[usize]) -> Result<Dag> {
        let m = order.len();
        check_permutation(m, order)?;
        let mut parents = vec![VertexSet::EMPTY; m];
        let mut before = VertexSet::EMPTY;
        for &v in order {
            parents[v - 1] = before;
            before.insert(v);
        }
        Ok(Dag { m, parents })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn vertices(&self) -> VertexSet {
        VertexSet::full(self.m)
    }

    pub fn parents(&self, v: usize) -> VertexSet {
        self.parents[v - 1]
    }

    pub fn children(&self, v: usize) -> VertexSet {
        (1..=self.m).filter(|&c| self.parents[c - 1].contains(v)).collect()
    }

    pub fn neighbors(&self, v: usize) -> VertexSet {
        self.parents(v).union(self.children(v))
    }

    pub fn has_edge(&self, j: usize, k: usize) -> bool {
        k >= 1 && k <= self.m && self.parents[k - 1].contains(j)
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    /// Edges `(j, k)` sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<_> = (1..=self.m)
            .flat_map(|k| self.parents[k - 1].iter().map(move |j| (j, k)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(|p| p.len()).sum()
    }

    /// Unordered adjacencies `(a, b)` with `a < b`, sorted.
    pub fn skeleton(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<_> = self
            .edges()
            .into_iter()
            .map(|(j, k)| (j.min(k), j.max(k)))
            .collect();
        out.sort_unstable();
        out
    }

    /// Bitmask over ordered pairs, row-major with the diagonal skipped;
    /// only defined for `m <= 8`.
    pub fn edge_mask(&self) -> Option<u64> {
        (self.m <= 8).then(|| {
            let mut mask = 0u64;
            for (j, k) in self.edges() {
                mask |= 1 << edge_bit(self.m, j, k);
            }
            mask
        })
    }

    /// Every path of length two, classified; each unordered end pair appears
    /// once per middle vertex.
    pub fn triples(&self) -> Vec<Triple> {
        let mut out = Vec::new();
        for j in 1..=self.m {
            let nb = self.neighbors(j).to_vec();
            for (a, &i) in nb.iter().enumerate() {
                for &k in &nb[a + 1..] {
                    out.push(Triple {
                        i,
                        j,
                        k,
                        kind: if self.adjacent(i, k) {
                            TripleKind::Shielded
                        } else {
                            TripleKind::Unshielded
                        },
                        collider_at_j: self.has_edge(i, j) && self.has_edge(k, j),
                    });
                }
            }
        }
        out
    }

    pub fn unshielded_colliders(&self) -> Vec<(usize, usize, usize)> {
        self.triples()
            .into_iter()
            .filter(|t| t.kind == TripleKind::Unshielded && t.collider_at_j)
            .map(|t| (t.i, t.j, t.k))
            .collect()
    }

    /// Vertices reachable from `v` by a nonempty directed path.
    pub fn descendants(&self, v: usize) -> VertexSet {
        let mut seen = VertexSet::EMPTY;
        let mut frontier = self.children(v);
        while !frontier.is_empty() {
            seen = seen.union(frontier);
            let mut next = VertexSet::EMPTY;
            for c in frontier {
                next = next.union(self.children(c));
            }
            frontier = next.difference(seen);
        }
        seen
    }

    /// `set` together with all of its ancestors.
    pub fn ancestral_closure(&self, set: VertexSet) -> VertexSet {
        let mut closed = set;
        let mut frontier = set;
        while !frontier.is_empty() {
            let mut next = VertexSet::EMPTY;
            for v in frontier {
                next = next.union(self.parents[v - 1]);
            }
            frontier = next.difference(closed);
            closed = closed.union(frontier);
        }
        closed
    }

    /// A topological order, smallest available vertex first.
    pub fn topological_order(&self) -> Vec<usize> {
        let mut placed = VertexSet::EMPTY;
        let mut order = Vec::with_capacity(self.m);
        while order.len() < self.m {
            let v = (1..=self.m)
                .find(|&v| !placed.contains(v) && self.parents[v - 1].is_subset(placed))
                .expect("acyclic");
            placed.insert(v);
            order.push(v);
        }
        order
    }

    /// True when every edge of `self` is an edge of `other`.
    pub fn is_subgraph_of(&self, other: &Dag) -> bool {
        self.m == other.m
            && self
                .parents
                .iter()
                .zip(&other.parents)
                .all(|(a, b)| a.is_subset(*b))
    }

    pub fn without_edge(&self, j: usize, k: usize) -> Result<Dag> {
        if !self.has_edge(j, k) {
            return Err(Error::InvalidArgument(format!("no edge {j} -> {k}")));
        }
        let mut g = self.clone();
        g.parents[k - 1].remove(j);
        Ok(g)
    }

    pub fn with_edge(&self, j: usize, k: usize) -> Result<Dag> {
        self.check_vertex(j)?;
        self.check_vertex(k)?;
        if j == k || self.adjacent(j, k) {
            return Err(Error::InvalidArgument(format!("cannot add {j} -> {k}")));
        }
        if self.descendants(k).contains(j) {
            return Err(Error::InvalidDag(format!("adding {j} -> {k} creates a cycle")));
        }
        let mut g = self.clone();
        g.parents[k - 1].insert(j);
        Ok(g)
    }

    pub fn with_edge_reversed(&self, j: usize, k: usize) -> Result<Dag> {
        self.without_edge(j, k)?.with_edge(k, j)
    }

    pub(crate) fn check_vertex(&self, v: usize) -> Result<()> {
        if v == 0 || v > self.m {
            Err(Error::VertexOutOfRange { vertex: v, m: self.m })
        } else {
            Ok(())
        }
    }

    fn cycle_vertex(&self) -> Option<usize> {
        let mut placed = VertexSet::EMPTY;
        loop {
            let before = placed;
            for v in 1..=self.m {
                if self.parents[v - 1].is_subset(placed) {
                    placed.insert(v);
                }
            }
            if placed.len() == self.m {
                return None;
            }
            if placed == before {
                return (1..=self.m).find(|&v| !placed.contains(v));
            }
        }
    }

    /// Vertices connected to `x` by a path that is active given `z`
    /// (reachability form of the blocking rule; `x` itself is excluded).
    pub(crate) fn active_reach(&self, x: usize, z: VertexSet) -> VertexSet {
        let anc = self.ancestral_closure(z);
        let children: Vec<VertexSet> = (1..=self.m).map(|v| self.children(v)).collect();
        // up: entered from a child; down: entered from a parent.
        let mut seen_up = VertexSet::EMPTY;
        let mut seen_down = VertexSet::EMPTY;
        let mut reached = VertexSet::EMPTY;
        let mut stack: Vec<(usize, bool)> = vec![(x, true)];
        while let Some((v, up)) = stack.pop() {
            if up {
                if seen_up.contains(v) {
                    continue;
                }
                seen_up.insert(v);
            } else {
                if seen_down.contains(v) {
                    continue;
                }
                seen_down.insert(v);
            }
            let observed = z.contains(v);
            if !observed {
                reached.insert(v);
            }
            if up && !observed {
                stack.extend(self.parents[v - 1].iter().map(|p| (p, true)));
                stack.extend(children[v - 1].iter().map(|c| (c, false)));
            } else if !up {
                if !observed {
                    stack.extend(children[v - 1].iter().map(|c| (c, false)));
                }
                if anc.contains(v) {
                    stack.extend(self.parents[v - 1].iter().map(|p| (p, true)));
                }
            }
        }
        reached.without(x)
    }

    pub fn d_separated(&self, i: usize, j: usize, s: VertexSet) -> Result<bool> {
        self.check_vertex(i)?;
        self.check_vertex(j)?;
        if i == j {
            return Err(Error::InvalidStatement(format!("{i} paired with itself")));
        }
        if let Some(v) = s.last().filter(|&v| v > self.m) {
            return Err(Error::VertexOutOfRange { vertex: v, m: self.m });
        }
        if s.contains(i) || s.contains(j) {
            return Err(Error::InvalidStatement(format!(
                "conditioning set {s} overlaps {{{i},{j}}}"
            )));
        }
        Ok(!self.active_reach(i, s).contains(j))
    }

    /// I(G) as a bitmask over `index`; one reachability pass per (i, S).
    pub(crate) fn ci_mask(&self, index: &CiIndex) -> CiMask {
        debug_assert_eq!(index.m(), self.m);
        let mut mask = CiMask::default();
        let all = self.vertices();
        for i in 1..=self.m {
            let later = all.difference(VertexSet::full(i));
            for s in all.without(i).subsets() {
                let candidates = later.difference(s);
                if candidates.is_empty() {
                    continue;
                }
                let reach = self.active_reach(i, s);
                for j in candidates.difference(reach) {
                    mask.insert(index.index_of(i, j, s));
                }
            }
        }
        mask
    }
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidDag("a DAG needs at least one vertex".into()));
    }
    if m > MAX_VERTICES {
        return Err(Error::Ceiling {
            what: "vertex count",
            requested: m,
            ceiling: MAX_VERTICES,
        });
    }
    Ok(())
}

fn check_permutation(m: usize, order: &[usize]) -> Result<()> {
    check_m(m)?;
    let seen: VertexSet = order.iter().collect();
    if order.iter().any(|&v| v == 0 || v > m) || seen.len() != m {
        return Err(Error::InvalidArgument(format!(
            "{order:?} is not a permutation of 1..={m}"
        )));
    }
    Ok(())
}

fn edge_bit(m: usize, j: usize, k: usize) -> usize {
    (j - 1) * (m - 1) + if k < j { k - 1 } else { k - 2 }
}

/// I(G): every singleton-pair statement entailed by d-separation.
pub fn independence_model_of_dag(g: &Dag) -> IndependenceModel {
    let mut model = IndependenceModel::new(g.m);
    let all = g.vertices();
    for i in 1..=g.m {
        for s in all.without(i).subsets() {
            let reach = g.active_reach(i, s);
            for j in (i + 1..=g.m).filter(|&j| !s.contains(j) && !reach.contains(j)) {
                model.insert_unchecked(CiStatement::new_unchecked(i, j, s));
            }
        }
    }
    model
}

/// Same skeleton and same unshielded colliders.
pub fn markov_equivalent(g: &Dag, h: &Dag) -> Result<bool> {
    if g.m != h.m {
        return Err(Error::DimensionMismatch {
            expected: g.m,
            found: h.m,
        });
    }
    Ok(g.skeleton() == h.skeleton() && g.unshielded_colliders() == h.unshielded_colliders())
}

/// All labeled DAGs on `m` vertices in ascending [`Dag::edge_mask`] order.
pub fn enumerate_dags(m: usize) -> Result<DagEnumerator> {
    enumerate_dags_with_ceiling(m, ENUMERATION_CEILING)
}

pub fn enumerate_dags_with_ceiling(m: usize, ceiling: usize) -> Result<DagEnumerator> {
    check_m(m)?;
    let ceiling = ceiling.min(8);
    if m > ceiling {
        return Err(Error::Ceiling {
            what: "DAG enumeration",
            requested: m,
            ceiling,
        });
    }
    let nbits = m * (m - 1);
    let mut bit_edge = vec![(0, 0); nbits];
    for j in 1..=m {
        for k in (1..=m).filter(|&k| k != j) {
            bit_edge[edge_bit(m, j, k)] = (j, k);
        }
    }
    Ok(DagEnumerator {
        m,
        bit_edge,
        choices: Vec::with_capacity(nbits),
        parents: vec![VertexSet::EMPTY; m],
        finished: false,
    })
}

/// Depth-first walk over edge bits, most significant first, so that
/// emitted masks ascend. Partial graphs with a cycle or a 2-cycle are pruned.
pub struct DagEnumerator {
    m: usize,
    bit_edge: Vec<(usize, usize)>,
    choices: Vec<bool>,
    parents: Vec<VertexSet>,
    finished: bool,
}

impl DagEnumerator {
    fn edge_at_depth(&self, depth: usize) -> (usize, usize) {
        self.bit_edge[self.bit_edge.len() - 1 - depth]
    }

    fn can_add(&self, j: usize, k: usize) -> bool {
        if self.parents[j - 1].contains(k) {
            return false;
        }
        // Cycle iff j is already reachable from k.
        let mut seen = VertexSet::singleton(k);
        let mut frontier = seen;
        while !frontier.is_empty() {
            let mut next = VertexSet::EMPTY;
            for c in 1..=self.m {
                if !self.parents[c - 1].is_disjoint(frontier) {
                    next.insert(c);
                }
            }
            if next.contains(j) {
                return false;
            }
            frontier = next.difference(seen);
            seen = seen.union(next);
        }
        true
    }

    fn backtrack(&mut self) {
        while let Some(taken) = self.choices.pop() {
            let depth = self.choices.len();
            let (j, k) = self.edge_at_depth(depth);
            if taken {
                self.parents[k - 1].remove(j);
                continue;
            }
            if self.can_add(j, k) {
                self.parents[k - 1].insert(j);
                self.choices.push(true);
                return;
            }
        }
        self.finished = true;
    }
}

impl Iterator for DagEnumerator {
    type Item = Dag;

    fn next(&mut self) -> Option<Dag> {
        if self.finished {
            return None;
        }
        while self.choices.len() < self.bit_edge.len() {
            self.choices.push(false);
        }
        let dag = Dag {
            m: self.m,
            parents: self.parents.clone(),
        };
        self.backtrack();
        Some(dag)
    }
}

/// DAG induced by ordering `pi`: each vertex starts with all of its
/// predecessors as parents; a parent `j` is dropped when
/// `<i, j | remaining parents minus j>` is in `model`. Candidates are tried in
/// increasing vertex order, repeated until nothing more can be dropped.
pub fn permutation_dag(pi: &[usize], model: &IndependenceModel) -> Result<Dag> {
    let m = model.m();
    if pi.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: pi.len(),
        });
    }
    check_permutation(m, pi)?;
    let mut parents = vec![VertexSet::EMPTY; m];
    let mut before = VertexSet::EMPTY;
    for &i in pi {
        let mut pa = before;
        loop {
            let mut changed = false;
            for j in pa {
                let rest = pa.without(j);
                if model.contains(&CiStatement::new_unchecked(i.min(j), i.max(j), rest)) {
                    pa = rest;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        parents[i - 1] = pa;
        before.insert(i);
    }
    Ok(Dag { m, parents })
}

/// A DAG whose independence model is exactly `{<i, j | s>}`: the complete DAG
/// along `i, s..., j, rest...` with the `i - j` edge removed.
pub fn single_ci_dag(m: usize, i: usize, j: usize, s: VertexSet) -> Result<Dag> {
    if m < 2 {
        return Err(Error::InvalidArgument("need at least two vertices".into()));
    }
    let stmt = CiStatement::new(i, j, s)?;
    stmt.check_within(m)?;
    let (i, j) = (stmt.i, stmt.j);
    let mut order = vec![i];
    order.extend(s.iter());
    order.push(j);
    order.extend((1..=m).filter(|v| *v != i && *v != j && !s.contains(*v)));
    Dag::complete(&order)?.without_edge(i, j)
}

impl fmt::Debug for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dag(m={}", self.m)?;
        for (j, k) in self.edges() {
            write!(f, ", {j}->{k}")?;
        }
        f.write_str(")")
    }
}

/// Text form: `m=<int>` then one `j -> k` line per edge, edges sorted.
impl fmt::Display for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "m={}", self.m)?;
        for (j, k) in self.edges() {
            writeln!(f, "{j} -> {k}")?;
        }
        Ok(())
    }
}

impl Dag {
    /// Compact one-line form, e.g. `1->2,2->3`, or `(empty)`.
    pub fn edge_list(&self) -> String {
        if self.edge_count() == 0 {
            return "(empty)".into();
        }
        self.edges()
            .iter()
            .map(|(j, k)| format!("{j}->{k}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn parse_text(text: &str) -> Result<Dag> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing `m=<int>` header"))?;
        let m = header
            .strip_prefix("m=")
            .and_then(|v| v.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::parse(line, format!("expected `m=<int>`, got `{header}`")))?;
        let mut edges = Vec::new();
        for (line, l) in lines {
            let (a, b) = l
                .split_once("->")
                .ok_or_else(|| Error::parse(line, format!("expected `j -> k`, got `{l}`")))?;
            let parse = |t: &str| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::parse(line, format!("bad vertex `{}`", t.trim())))
            };
            edges.push((parse(a)?, parse(b)?));
        }
        Dag::new(m, edges)
    }

    /// One-line form `m:1->2,2->3` (`m:` or `m:(empty)` for no edges).
    pub fn parse_inline(text: &str) -> Result<Dag> {
        let bad = |msg: String| Error::InvalidArgument(format!("`{text}`: {msg}"));
        let (m, edges) = text
            .split_once(':')
            .ok_or_else(|| bad("expected `m:j->k,...`".into()))?;
        let m = m.trim().parse::<usize>().map_err(|_| bad("bad vertex count".into()))?;
        let edges = edges
            .split(',')
            .map(str::trim)
            .filter(|e| !e.is_empty() && *e != "(empty)")
            .map(|e| {
                let (a, b) = e.split_once("->").ok_or_else(|| bad(format!("bad edge `{e}`")))?;
                let v = |t: &str| t.trim().parse::<usize>().map_err(|_| bad(format!("bad vertex in `{e}`")));
                Ok((v(a)?, v(b)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Dag::new(m, edges)
    }
}
