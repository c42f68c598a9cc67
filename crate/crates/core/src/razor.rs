//! The thirteen razor classes, computed by exhaustive enumeration of DAG
//! space, with machine-checkable witnesses for every negative verdict.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    enumerate_dags_with_ceiling, independence_model_of_dag, markov_equivalent, permutation_dag, Dag, TripleKind,
};
use crate::independence::{CiIndex, CiMask, CiStatement, IndependenceModel, MASK_CEILING};
use crate::multinomial::{param_count, RangeSpec};
use crate::vset::VertexSet;

/// Default ceiling for class enumeration.
pub const CLASS_CEILING: usize = 5;

/// Largest vertex count for the permutation witness search used above the
/// enumeration ceiling (7! orders).
pub const PERMUTATION_CEILING: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RazorId {
    Cmc,
    Cfc,
    AdjF,
    OriF,
    ResF,
    TriF,
    Fr,
    UFr,
    Sgs,
    Pm,
    UPm,
    ParamM,
    UParamM,
}

impl RazorId {
    pub const ALL: [RazorId; 13] = [
        RazorId::Cmc,
        RazorId::Cfc,
        RazorId::AdjF,
        RazorId::OriF,
        RazorId::ResF,
        RazorId::TriF,
        RazorId::Fr,
        RazorId::UFr,
        RazorId::Sgs,
        RazorId::Pm,
        RazorId::UPm,
        RazorId::ParamM,
        RazorId::UParamM,
    ];

    /// Row/column order of the pairwise comparison tables.
    pub const TABLE_ORDER: [RazorId; 13] = [
        RazorId::Cfc,
        RazorId::UPm,
        RazorId::ResF,
        RazorId::AdjF,
        RazorId::OriF,
        RazorId::UFr,
        RazorId::Fr,
        RazorId::UParamM,
        RazorId::ParamM,
        RazorId::Pm,
        RazorId::Sgs,
        RazorId::TriF,
        RazorId::Cmc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RazorId::Cmc => "CMC",
            RazorId::Cfc => "CFC",
            RazorId::AdjF => "adjF",
            RazorId::OriF => "oriF",
            RazorId::ResF => "resF",
            RazorId::TriF => "triF",
            RazorId::Fr => "Fr",
            RazorId::UFr => "uFr",
            RazorId::Sgs => "SGS",
            RazorId::Pm => "Pm",
            RazorId::UPm => "uPm",
            RazorId::ParamM => "ParamM",
            RazorId::UParamM => "uParamM",
        }
    }

    pub fn is_parametric(self) -> bool {
        matches!(self, RazorId::ParamM | RazorId::UParamM)
    }

    /// Needs the whole Markovian class, not just the DAG at hand.
    pub fn is_enumerative(self) -> bool {
        matches!(
            self,
            RazorId::Fr | RazorId::UFr | RazorId::Pm | RazorId::UPm | RazorId::ParamM | RazorId::UParamM
        )
    }

    /// The class a unique variant restricts.
    pub fn unique_base(self) -> Option<RazorId> {
        match self {
            RazorId::UFr => Some(RazorId::Fr),
            RazorId::UPm => Some(RazorId::Pm),
            RazorId::UParamM => Some(RazorId::ParamM),
            _ => None,
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for RazorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RazorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RazorId::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let known: Vec<&str> = RazorId::ALL.iter().map(|r| r.name()).collect();
                Error::InvalidArgument(format!("unknown razor `{s}`; known: {}", known.join(", ")))
            })
    }
}

impl Serialize for RazorId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for RazorId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Why a DAG falls outside a class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Entailed by the DAG but absent from the model.
    NotMarkovian { ci: CiStatement },
    /// In the model but not entailed by the DAG.
    UnfaithfulCi { ci: CiStatement },
    AdjacentPair { i: usize, j: usize, ci: CiStatement },
    UnshieldedTriple {
        i: usize,
        j: usize,
        k: usize,
        collider: bool,
        ci: CiStatement,
    },
    ShieldedTriple {
        i: usize,
        j: usize,
        k: usize,
        collider: bool,
        ci: CiStatement,
    },
    SparserMarkovian { dag: Dag },
    MarkovianSubgraph { dag: Dag },
    LargerModel { dag: Dag },
    FewerParameters { dag: Dag, theirs: u64, ours: u64 },
    /// A Markovian DAG showing the base class reaches beyond this DAG's
    /// equivalence class: a co-member for uFr and uParamM, a model not
    /// contained in this DAG's for uPm.
    NotUnique { other: Dag },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::NotMarkovian { ci } => write!(f, "entails {ci}, which does not hold"),
            Witness::UnfaithfulCi { ci } => write!(f, "{ci} holds but is not entailed"),
            Witness::AdjacentPair { i, j, ci } => write!(f, "{i} and {j} are adjacent yet {ci} holds"),
            Witness::UnshieldedTriple { i, j, k, collider, ci } => write!(
                f,
                "unshielded {} {i}-{j}-{k} with {ci}",
                if *collider { "collider" } else { "non-collider" }
            ),
            Witness::ShieldedTriple { i, j, k, collider, ci } => write!(
                f,
                "triangle {} at {j} ({i}-{j}-{k}) with {ci}",
                if *collider { "collider" } else { "non-collider" }
            ),
            Witness::SparserMarkovian { dag } => write!(f, "sparser Markovian DAG {}", dag.edge_list()),
            Witness::MarkovianSubgraph { dag } => write!(f, "Markovian proper subgraph {}", dag.edge_list()),
            Witness::LargerModel { dag } => {
                write!(f, "Markovian DAG {} entails strictly more", dag.edge_list())
            }
            Witness::FewerParameters { dag, theirs, ours } => write!(
                f,
                "Markovian DAG {} has {theirs} parameters against {ours}",
                dag.edge_list()
            ),
            Witness::NotUnique { other } => {
                write!(f, "non-equivalent Markovian DAG {} rules out a unique class", other.edge_list())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Membership {
    In,
    Out { witness: Witness },
    Undetermined { reason: String },
}

impl Membership {
    pub fn is_in(&self) -> bool {
        matches!(self, Membership::In)
    }

    /// `Some(true/false)` when decided.
    pub fn decided(&self) -> Option<bool> {
        match self {
            Membership::In => Some(true),
            Membership::Out { .. } => Some(false),
            Membership::Undetermined { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RazorVerdict {
    pub dag: Dag,
    pub memberships: Vec<(RazorId, Membership)>,
}

impl RazorVerdict {
    pub fn get(&self, razor: RazorId) -> &Membership {
        &self
            .memberships
            .iter()
            .find(|(r, _)| *r == razor)
            .expect("all razors present")
            .1
    }
}

/// Every DAG on `m` vertices with its independence model, cached per `m`.
pub struct Universe {
    m: usize,
    index: CiIndex,
    dags: Vec<Dag>,
    masks: Vec<CiMask>,
    edge_counts: Vec<u32>,
    lookup: HashMap<u64, u32>,
    /// Indices of the single-edge deletions of each DAG.
    deletions: Vec<Vec<u32>>,
}

static UNIVERSES: [OnceLock<Universe>; MASK_CEILING + 1] = [const { OnceLock::new() }; MASK_CEILING + 1];

impl Universe {
    /// Shared enumeration for `m`, refusing `m > ceiling`.
    pub fn get(m: usize, ceiling: usize) -> Result<&'static Universe> {
        let ceiling = ceiling.min(MASK_CEILING);
        if m == 0 || m > ceiling {
            return Err(Error::Ceiling {
                what: "class enumeration",
                requested: m,
                ceiling,
            });
        }
        Ok(UNIVERSES[m].get_or_init(|| Universe::build(m)))
    }

    fn build(m: usize) -> Universe {
        let index = CiIndex::new(m).expect("m within mask ceiling");
        let dags: Vec<Dag> = enumerate_dags_with_ceiling(m, MASK_CEILING)
            .expect("m within ceiling")
            .collect();
        let masks: Vec<CiMask> = dags.par_iter().map(|g| g.ci_mask(&index)).collect();
        let edge_counts = dags.iter().map(|g| g.edge_count() as u32).collect();
        let keys: Vec<u64> = dags.iter().map(|g| g.edge_mask().unwrap()).collect();
        let lookup: HashMap<u64, u32> = keys.iter().enumerate().map(|(n, &k)| (k, n as u32)).collect();
        let deletions = dags
            .iter()
            .map(|g| {
                g.edges()
                    .into_iter()
                    .map(|(j, k)| lookup[&g.without_edge(j, k).unwrap().edge_mask().unwrap()])
                    .collect()
            })
            .collect();
        Universe {
            m,
            index,
            dags,
            masks,
            edge_counts,
            lookup,
            deletions,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn index(&self) -> &CiIndex {
        &self.index
    }

    pub fn dags(&self) -> &[Dag] {
        &self.dags
    }

    pub fn len(&self) -> usize {
        self.dags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dags.is_empty()
    }

    pub fn mask(&self, n: usize) -> &CiMask {
        &self.masks[n]
    }

    pub fn position(&self, g: &Dag) -> Option<usize> {
        if g.m() != self.m {
            return None;
        }
        self.lookup.get(&g.edge_mask()?).map(|&n| n as usize)
    }
}

/// Per-pair summaries of the model used by the faithfulness variants.
struct PairTables {
    m: usize,
    /// `any[(i,k)]`: some statement on the pair holds.
    any: Vec<bool>,
    /// Vertices that occur in the conditioning set of some statement on the pair.
    inside: Vec<VertexSet>,
    /// Vertices absent from the conditioning set of some statement on the pair.
    outside: Vec<VertexSet>,
}

impl PairTables {
    fn new(p: &IndependenceModel) -> Self {
        let m = p.m();
        let mut t = PairTables {
            m,
            any: vec![false; m * m],
            inside: vec![VertexSet::EMPTY; m * m],
            outside: vec![VertexSet::EMPTY; m * m],
        };
        let all = VertexSet::full(m);
        for ci in p.iter() {
            let slot = t.slot(ci.i, ci.j);
            t.any[slot] = true;
            t.inside[slot] = t.inside[slot].union(ci.s);
            t.outside[slot] = t.outside[slot].union(all.difference(ci.s).without(ci.i).without(ci.j));
        }
        t
    }

    fn slot(&self, a: usize, b: usize) -> usize {
        (a.min(b) - 1) * self.m + (a.max(b) - 1)
    }

    fn adjacency_ok(&self, g: &Dag) -> bool {
        g.edges().iter().all(|&(j, k)| !self.any[self.slot(j, k)])
    }

    fn triples_ok(&self, g: &Dag, kind: TripleKind) -> bool {
        g.triples().iter().filter(|t| t.kind == kind).all(|t| {
            let slot = self.slot(t.i, t.k);
            if t.collider_at_j {
                !self.inside[slot].contains(t.j)
            } else {
                !self.outside[slot].contains(t.j)
            }
        })
    }
}

/// The statement on `(a, b)` in `p` first in canonical order, filtered.
fn find_ci(p: &IndependenceModel, a: usize, b: usize, pred: impl Fn(&CiStatement) -> bool) -> Option<CiStatement> {
    let (i, j) = (a.min(b), a.max(b));
    p.iter().find(|c| c.i == i && c.j == j && pred(c)).copied()
}

fn adjacency_witness(g: &Dag, p: &IndependenceModel) -> Option<Witness> {
    g.skeleton()
        .into_iter()
        .find_map(|(i, j)| find_ci(p, i, j, |_| true).map(|ci| Witness::AdjacentPair { i, j, ci }))
}

fn triple_witness(g: &Dag, p: &IndependenceModel, kind: TripleKind) -> Option<Witness> {
    g.triples().into_iter().filter(|t| t.kind == kind).find_map(|t| {
        let collider = t.collider_at_j;
        let ci = find_ci(p, t.i, t.k, |c| c.s.contains(t.j) == collider)?;
        let (i, j, k) = (t.i, t.j, t.k);
        Some(match kind {
            TripleKind::Unshielded => Witness::UnshieldedTriple { i, j, k, collider, ci },
            TripleKind::Shielded => Witness::ShieldedTriple { i, j, k, collider, ci },
        })
    })
}

fn check_model_dims(p: &IndependenceModel, ranges: Option<&RangeSpec>) -> Result<()> {
    if let Some(r) = ranges {
        if r.m() != p.m() {
            return Err(Error::DimensionMismatch {
                expected: p.m(),
                found: r.m(),
            });
        }
    }
    Ok(())
}

/// Class membership of every DAG in a [`Universe`] for one model.
pub struct Evaluation {
    universe: &'static Universe,
    p: IndependenceModel,
    p_mask: CiMask,
    ranges: Option<RangeSpec>,
    params: Option<Vec<u64>>,
    member: Vec<Vec<bool>>,
}

impl Evaluation {
    pub fn new(p: &IndependenceModel, ranges: Option<&RangeSpec>, ceiling: usize) -> Result<Self> {
        check_model_dims(p, ranges)?;
        let u = Universe::get(p.m(), ceiling)?;
        let p_mask = p.to_mask(&u.index);
        let tables = PairTables::new(p);
        let n = u.len();

        let per_dag: Vec<[bool; 5]> = (0..n)
            .into_par_iter()
            .map(|d| {
                let mask = &u.masks[d];
                let cmc = mask.is_subset(&p_mask);
                if !cmc {
                    return [false; 5];
                }
                let g = &u.dags[d];
                [
                    true,
                    *mask == p_mask,
                    tables.adjacency_ok(g),
                    tables.triples_ok(g, TripleKind::Unshielded),
                    tables.triples_ok(g, TripleKind::Shielded),
                ]
            })
            .collect();
        let mut member = vec![vec![false; n]; 13];
        for (d, flags) in per_dag.iter().enumerate() {
            member[RazorId::Cmc.slot()][d] = flags[0];
            member[RazorId::Cfc.slot()][d] = flags[1];
            member[RazorId::AdjF.slot()][d] = flags[2] && flags[0];
            member[RazorId::OriF.slot()][d] = flags[3] && flags[0];
            member[RazorId::TriF.slot()][d] = flags[4] && flags[0];
            member[RazorId::ResF.slot()][d] = flags[0] && flags[2] && flags[3];
        }
        let cmc = member[RazorId::Cmc.slot()].clone();

        // Frugality: running minimum of edge counts over Markovian DAGs.
        let min_edges = (0..n).filter(|&d| cmc[d]).map(|d| u.edge_counts[d]).min();
        member[RazorId::Fr.slot()] = (0..n).map(|d| cmc[d] && Some(u.edge_counts[d]) == min_edges).collect();

        member[RazorId::Sgs.slot()] = (0..n)
            .into_par_iter()
            .map(|d| cmc[d] && u.deletions[d].iter().all(|&e| !cmc[e as usize]))
            .collect();

        // P-minimality: keep Markovian DAGs whose model is maximal.
        let mut distinct: Vec<CiMask> = (0..n)
            .filter(|&d| cmc[d])
            .map(|d| u.masks[d])
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        distinct.sort_by_key(|m| std::cmp::Reverse(m.count()));
        let maximal: HashSet<CiMask> = distinct
            .par_iter()
            .filter(|a| {
                !distinct
                    .iter()
                    .take_while(|b| b.count() > a.count())
                    .any(|b| a.is_subset(b))
            })
            .copied()
            .collect();
        member[RazorId::Pm.slot()] = (0..n).map(|d| cmc[d] && maximal.contains(&u.masks[d])).collect();

        let params = ranges.map(|r| {
            u.dags
                .iter()
                .map(|g| param_count(g, r).expect("dimensions checked"))
                .collect::<Vec<u64>>()
        });
        if let Some(params) = &params {
            let min_params = (0..n).filter(|&d| cmc[d]).map(|d| params[d]).min();
            member[RazorId::ParamM.slot()] = (0..n).map(|d| cmc[d] && Some(params[d]) == min_params).collect();
        }

        let mut eval = Evaluation {
            universe: u,
            p: p.clone(),
            p_mask,
            ranges: ranges.cloned(),
            params,
            member,
        };
        for razor in [RazorId::UFr, RazorId::UPm, RazorId::UParamM] {
            let base = razor.unique_base().unwrap();
            if base.is_parametric() && eval.ranges.is_none() {
                continue;
            }
            let unique = eval.single_class(base);
            eval.member[razor.slot()] = if unique {
                eval.member[base.slot()].clone()
            } else {
                vec![false; n]
            };
        }
        Ok(eval)
    }

    /// Whether all members of `base` are Markov equivalent, comparing each
    /// to the first and stopping at the first mismatch.
    fn single_class(&self, base: RazorId) -> bool {
        let mut members = self.members(base);
        let Some(first) = members.next() else {
            return true;
        };
        let first = &self.universe.dags[first];
        members.all(|d| markov_equivalent(first, &self.universe.dags[d]).expect("same m"))
    }

    fn members(&self, razor: RazorId) -> impl Iterator<Item = usize> + '_ {
        self.member[razor.slot()]
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(d, _)| d)
    }

    pub fn universe(&self) -> &'static Universe {
        self.universe
    }

    pub fn model(&self) -> &IndependenceModel {
        &self.p
    }

    pub fn ranges(&self) -> Option<&RangeSpec> {
        self.ranges.as_ref()
    }

    pub fn is_available(&self, razor: RazorId) -> bool {
        !razor.is_parametric() || self.ranges.is_some()
    }

    /// Membership of the `n`-th universe DAG, `None` for parametric razors
    /// without ranges.
    pub fn contains(&self, razor: RazorId, n: usize) -> Option<bool> {
        self.is_available(razor).then(|| self.member[razor.slot()][n])
    }

    pub fn contains_dag(&self, razor: RazorId, g: &Dag) -> Option<bool> {
        self.contains(razor, self.universe.position(g)?)
    }

    pub fn class(&self, razor: RazorId) -> Result<Vec<Dag>> {
        if !self.is_available(razor) {
            return Err(Error::MissingRanges(razor.name()));
        }
        Ok(self.members(razor).map(|d| self.universe.dags[d].clone()).collect())
    }

    pub fn class_size(&self, razor: RazorId) -> Option<usize> {
        self.is_available(razor).then(|| self.members(razor).count())
    }

    /// Full verdict with witnesses for one DAG of the universe.
    pub fn verdict(&self, g: &Dag) -> Result<RazorVerdict> {
        let n = self.universe.position(g).ok_or(Error::DimensionMismatch {
            expected: self.universe.m,
            found: g.m(),
        })?;
        let mut direct = direct_verdict(g, &self.p);
        let cmc = self.member[RazorId::Cmc.slot()][n];
        let u = self.universe;
        let first_other = |razor: RazorId, pred: &dyn Fn(usize) -> bool| -> Option<usize> {
            self.members(razor).find(|&d| pred(d))
        };
        for razor in RazorId::ALL.into_iter().filter(|r| r.is_enumerative()) {
            let membership = if !cmc {
                direct.get(RazorId::Cmc).clone()
            } else if !self.is_available(razor) {
                Membership::Undetermined {
                    reason: "requires a range specification".into(),
                }
            } else if self.member[razor.slot()][n] {
                Membership::In
            } else {
                let witness = match razor {
                    RazorId::Fr => {
                        let d = first_other(RazorId::Fr, &|_| true).expect("Markovian DAGs exist");
                        Witness::SparserMarkovian { dag: u.dags[d].clone() }
                    }
                    RazorId::Pm => {
                        let d = first_other(RazorId::Cmc, &|d| u.masks[n].is_strict_subset(&u.masks[d]))
                            .expect("a larger model exists when not maximal");
                        Witness::LargerModel { dag: u.dags[d].clone() }
                    }
                    RazorId::ParamM => {
                        let params = self.params.as_ref().unwrap();
                        let d = first_other(RazorId::ParamM, &|_| true).expect("Markovian DAGs exist");
                        Witness::FewerParameters {
                            dag: u.dags[d].clone(),
                            theirs: params[d],
                            ours: params[n],
                        }
                    }
                    _ => {
                        let base = razor.unique_base().unwrap();
                        if !self.member[base.slot()][n] {
                            // Bases precede their unique variants in `ALL` order.
                            match direct.get(base) {
                                Membership::Out { witness } => witness.clone(),
                                other => unreachable!("base membership {other:?}"),
                            }
                        } else {
                            let d = first_other(base, &|d| !markov_equivalent(g, &u.dags[d]).unwrap())
                                .expect("class spans several equivalence classes");
                            Witness::NotUnique { other: u.dags[d].clone() }
                        }
                    }
                };
                Membership::Out { witness }
            };
            direct.set(razor, membership);
        }
        Ok(direct)
    }

    pub fn p_mask(&self) -> &CiMask {
        &self.p_mask
    }
}

impl RazorVerdict {
    fn set(&mut self, razor: RazorId, m: Membership) {
        for (r, slot) in &mut self.memberships {
            if *r == razor {
                *slot = m;
                return;
            }
        }
    }
}

/// Memberships that need nothing beyond the DAG and the model; the
/// enumerative razors are left undetermined.
fn direct_verdict(g: &Dag, p: &IndependenceModel) -> RazorVerdict {
    let ig = independence_model_of_dag(g);
    let not_markov = ig.iter().find(|ci| !p.contains(ci)).copied();
    let undetermined = || Membership::Undetermined {
        reason: "needs class enumeration".into(),
    };
    let mut memberships: Vec<(RazorId, Membership)> = RazorId::ALL.iter().map(|&r| (r, undetermined())).collect();
    let mut put = |r: RazorId, m: Membership| memberships[r.slot()].1 = m;
    if let Some(ci) = not_markov {
        for r in RazorId::ALL {
            put(r, Membership::Out {
                witness: Witness::NotMarkovian { ci },
            });
        }
        return RazorVerdict {
            dag: g.clone(),
            memberships,
        };
    }
    let out = |w: Option<Witness>| match w {
        Some(witness) => Membership::Out { witness },
        None => Membership::In,
    };
    put(RazorId::Cmc, Membership::In);
    let unfaithful = p.iter().find(|ci| !ig.contains(ci)).copied();
    put(RazorId::Cfc, out(unfaithful.map(|ci| Witness::UnfaithfulCi { ci })));
    let adj = adjacency_witness(g, p);
    let ori = triple_witness(g, p, TripleKind::Unshielded);
    put(RazorId::AdjF, out(adj.clone()));
    put(RazorId::OriF, out(ori.clone()));
    put(RazorId::ResF, out(adj.or(ori)));
    put(RazorId::TriF, out(triple_witness(g, p, TripleKind::Shielded)));
    let sub = g.edges().into_iter().find_map(|(j, k)| {
        let h = g.without_edge(j, k).unwrap();
        independence_model_of_dag(&h)
            .iter()
            .all(|ci| p.contains(ci))
            .then_some(h)
    });
    put(RazorId::Sgs, out(sub.map(|dag| Witness::MarkovianSubgraph { dag })));
    RazorVerdict {
        dag: g.clone(),
        memberships,
    }
}

/// Lexicographic successor; false once `v` is the last permutation.
fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Refutes enumerative razors for a Markovian `g` without enumeration, by
/// scanning the Markovian minimal I-maps of every vertex order. Only
/// non-memberships are ever concluded; anything unrefuted stays undetermined.
fn refute_by_permutations(
    g: &Dag,
    p: &IndependenceModel,
    ranges: Option<&RangeSpec>,
    verdict: &mut RazorVerdict,
) -> Result<()> {
    if !verdict.get(RazorId::Cmc).is_in() || g.m() > PERMUTATION_CEILING {
        return Ok(());
    }
    let ig = independence_model_of_dag(g);
    let ours = ranges.map(|r| param_count(g, r)).transpose()?;
    let mut seen = HashSet::new();
    let mut pi: Vec<usize> = (1..=g.m()).collect();
    loop {
        let h = permutation_dag(&pi, p)?;
        if seen.insert(h.edges()) && markovian(&h, p) {
            let ih = independence_model_of_dag(&h);
            let mut refute = |razor: RazorId, witness: Witness| {
                if verdict.get(razor).decided().is_none() {
                    verdict.set(razor, Membership::Out { witness });
                }
            };
            if h.edge_count() < g.edge_count() {
                for r in [RazorId::Fr, RazorId::UFr] {
                    refute(r, Witness::SparserMarkovian { dag: h.clone() });
                }
            }
            let h_covers_g = ig.iter().all(|ci| ih.contains(ci));
            if h_covers_g && ih.len() > ig.len() {
                for r in [RazorId::Pm, RazorId::UPm] {
                    refute(r, Witness::LargerModel { dag: h.clone() });
                }
            }
            if !ih.iter().all(|ci| ig.contains(ci)) {
                refute(RazorId::UPm, Witness::NotUnique { other: h.clone() });
            }
            if let (Some(r), Some(ours)) = (ranges, ours) {
                let theirs = param_count(&h, r)?;
                if theirs < ours {
                    for razor in [RazorId::ParamM, RazorId::UParamM] {
                        refute(razor, Witness::FewerParameters { dag: h.clone(), theirs, ours });
                    }
                }
            }
        }
        if !next_permutation(&mut pi) {
            return Ok(());
        }
    }
}

/// Verdict on every razor. Enumerative razors are resolved when
/// `g.m() <= ceiling`; above it only refutations found among minimal
/// I-maps are reported and the rest stay undetermined.
pub fn classify(
    g: &Dag,
    p: &IndependenceModel,
    ranges: Option<&RangeSpec>,
    ceiling: usize,
) -> Result<RazorVerdict> {
    if g.m() != p.m() {
        return Err(Error::DimensionMismatch {
            expected: g.m(),
            found: p.m(),
        });
    }
    check_model_dims(p, ranges)?;
    if g.m() <= ceiling.min(MASK_CEILING) {
        Evaluation::new(p, ranges, ceiling)?.verdict(g)
    } else {
        let mut verdict = direct_verdict(g, p);
        refute_by_permutations(g, p, ranges, &mut verdict)?;
        Ok(verdict)
    }
}

/// Exact class by enumeration.
pub fn class_of(
    razor: RazorId,
    p: &IndependenceModel,
    ranges: Option<&RangeSpec>,
    ceiling: usize,
) -> Result<Vec<Dag>> {
    if razor.is_parametric() && ranges.is_none() {
        return Err(Error::MissingRanges(razor.name()));
    }
    Evaluation::new(p, ranges, ceiling)?.class(razor)
}

/// Per razor, whether its class is empty (`None` when not computable).
pub fn realizability_report(
    p: &IndependenceModel,
    ranges: Option<&RangeSpec>,
    ceiling: usize,
) -> Result<Vec<(RazorId, Option<bool>)>> {
    let eval = Evaluation::new(p, ranges, ceiling)?;
    Ok(RazorId::ALL
        .iter()
        .map(|&r| (r, eval.class_size(r).map(|n| n == 0)))
        .collect())
}

fn markovian(g: &Dag, p: &IndependenceModel) -> bool {
    independence_model_of_dag(g).iter().all(|ci| p.contains(ci))
}

/// Re-checks a witness from scratch with direct d-separation queries,
/// independent of the enumeration tables.
pub fn check_witness(
    g: &Dag,
    p: &IndependenceModel,
    ranges: Option<&RangeSpec>,
    razor: RazorId,
    witness: &Witness,
) -> Result<bool> {
    let holds_in_p = |ci: &CiStatement| p.contains(ci);
    let entailed = |ci: &CiStatement| g.d_separated(ci.i, ci.j, ci.s);
    Ok(match witness {
        Witness::NotMarkovian { ci } => entailed(ci)? && !holds_in_p(ci),
        Witness::UnfaithfulCi { ci } => razor == RazorId::Cfc && holds_in_p(ci) && !entailed(ci)?,
        Witness::AdjacentPair { i, j, ci } => {
            matches!(razor, RazorId::AdjF | RazorId::ResF)
                && g.adjacent(*i, *j)
                && (ci.i, ci.j) == (*i.min(j), *i.max(j))
                && holds_in_p(ci)
        }
        Witness::UnshieldedTriple { i, j, k, collider, ci } | Witness::ShieldedTriple { i, j, k, collider, ci } => {
            let shielded = matches!(witness, Witness::ShieldedTriple { .. });
            let razor_ok = if shielded {
                razor == RazorId::TriF
            } else {
                matches!(razor, RazorId::OriF | RazorId::ResF)
            };
            razor_ok
                && g.adjacent(*i, *j)
                && g.adjacent(*j, *k)
                && g.adjacent(*i, *k) == shielded
                && (g.has_edge(*i, *j) && g.has_edge(*k, *j)) == *collider
                && (ci.i, ci.j) == (*i.min(k), *i.max(k))
                && ci.s.contains(*j) == *collider
                && holds_in_p(ci)
        }
        Witness::SparserMarkovian { dag } => {
            matches!(razor, RazorId::Fr | RazorId::UFr) && markovian(dag, p) && dag.edge_count() < g.edge_count()
        }
        Witness::MarkovianSubgraph { dag } => {
            razor == RazorId::Sgs && dag.is_subgraph_of(g) && dag != g && markovian(dag, p)
        }
        Witness::LargerModel { dag } => {
            let (ig, ih) = (independence_model_of_dag(g), independence_model_of_dag(dag));
            matches!(razor, RazorId::Pm | RazorId::UPm)
                && markovian(dag, p)
                && ig.len() < ih.len()
                && ig.iter().all(|ci| ih.contains(ci))
        }
        Witness::FewerParameters { dag, theirs, ours } => {
            let Some(r) = ranges else { return Ok(false) };
            matches!(razor, RazorId::ParamM | RazorId::UParamM)
                && markovian(dag, p)
                && param_count(dag, r)? == *theirs
                && param_count(g, r)? == *ours
                && theirs < ours
        }
        Witness::NotUnique { other } => {
            if razor.unique_base().is_none() || !markovian(other, p) || markov_equivalent(g, other)? {
                return Ok(false);
            }
            match razor {
                RazorId::UFr => other.edge_count() == g.edge_count(),
                RazorId::UParamM => {
                    let Some(r) = ranges else { return Ok(false) };
                    param_count(other, r)? == param_count(g, r)?
                }
                // Every Markovian model sits below some maximal one, so a unique
                // maximal class would have to contain I(other).
                _ => {
                    let (ig, ih) = (independence_model_of_dag(g), independence_model_of_dag(other));
                    let covered = ih.iter().all(|ci| ig.contains(ci));
                    !covered
                }
            }
        }
    })
}

/// A model fed to [`hierarchy_matrix`], with optional named DAGs that are
/// preferred as witnesses.
#[derive(Debug, Clone)]
pub struct HierarchyModel {
    pub id: String,
    pub model: IndependenceModel,
    pub ranges: Option<RangeSpec>,
    pub named: Vec<(String, Dag)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellStatus {
    Identity,
    Subset { models: usize },
    Counterexample { dag: String, model: String },
    NoEvidence,
}

#[derive(Debug, Clone, Serialize)]
pub struct HierarchyCell {
    pub row: RazorId,
    pub col: RazorId,
    #[serde(flatten)]
    pub status: CellStatus,
    /// Every `(model, dag)` found in `row \ col`.
    pub witnesses: Vec<(String, String)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HierarchyMatrix {
    pub order: Vec<RazorId>,
    pub cells: Vec<HierarchyCell>,
}

impl HierarchyMatrix {
    pub fn cell(&self, row: RazorId, col: RazorId) -> &HierarchyCell {
        self.cells
            .iter()
            .find(|c| c.row == row && c.col == col)
            .expect("complete matrix")
    }

    /// One line per ordered pair: `row col: subset` or
    /// `row col: counterexample: <dag>, <model>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.cells {
            let status = match &c.status {
                CellStatus::Identity => "identity".to_string(),
                CellStatus::Subset { models } => format!("subset ({models} models)"),
                CellStatus::Counterexample { dag, model } => format!("counterexample: {dag}, {model}"),
                CellStatus::NoEvidence => "no evidence".to_string(),
            };
            out.push_str(&format!("{} {}: {status}\n", c.row, c.col));
        }
        out
    }
}

/// Pairwise comparison over the supplied models, in table order.
///
/// Models within `ceiling` are enumerated, so they can confirm subset cells
/// as well as witness counterexamples. Larger models only contribute
/// witnesses among their named DAGs, for razors decidable per DAG.
pub fn hierarchy_matrix(models: &[HierarchyModel], ceiling: usize) -> Result<HierarchyMatrix> {
    let evals: Vec<Option<Evaluation>> = models
        .par_iter()
        .map(|hm| {
            check_model_dims(&hm.model, hm.ranges.as_ref())?;
            if hm.model.m() <= ceiling.min(MASK_CEILING) {
                Evaluation::new(&hm.model, hm.ranges.as_ref(), ceiling).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;
    let direct: Vec<Vec<RazorVerdict>> = models
        .iter()
        .zip(&evals)
        .map(|(hm, eval)| match eval {
            Some(_) => Ok(Vec::new()),
            None => hm
                .named
                .iter()
                .map(|(_, g)| {
                    let mut v = direct_verdict(g, &hm.model);
                    refute_by_permutations(g, &hm.model, hm.ranges.as_ref(), &mut v)?;
                    Ok(v)
                })
                .collect::<Result<_>>(),
        })
        .collect::<Result<_>>()?;
    let order = RazorId::TABLE_ORDER.to_vec();
    let mut cells = Vec::new();
    for &row in &order {
        for &col in &order {
            if row == col {
                cells.push(HierarchyCell {
                    row,
                    col,
                    status: CellStatus::Identity,
                    witnesses: Vec::new(),
                });
                continue;
            }
            let mut witnesses = Vec::new();
            let mut checked = 0;
            for (n, hm) in models.iter().enumerate() {
                let label = match &evals[n] {
                    Some(eval) => {
                        if !eval.is_available(row) || !eval.is_available(col) {
                            continue;
                        }
                        checked += 1;
                        let named = hm.named.iter().find(|(_, d)| {
                            eval.contains_dag(row, d) == Some(true) && eval.contains_dag(col, d) == Some(false)
                        });
                        match named {
                            Some((name, _)) => Some(name.clone()),
                            None => (0..eval.universe.len())
                                .find(|&d| eval.member[row.slot()][d] && !eval.member[col.slot()][d])
                                .map(|d| eval.universe.dags[d].edge_list()),
                        }
                    }
                    None => hm
                        .named
                        .iter()
                        .zip(&direct[n])
                        .find(|(_, v)| v.get(row).decided() == Some(true) && v.get(col).decided() == Some(false))
                        .map(|((name, _), _)| name.clone()),
                };
                if let Some(dag) = label {
                    witnesses.push((hm.id.clone(), dag));
                }
            }
            let status = match witnesses.first() {
                Some((model, dag)) => CellStatus::Counterexample {
                    dag: dag.clone(),
                    model: model.clone(),
                },
                None if checked > 0 => CellStatus::Subset { models: checked },
                None => CellStatus::NoEvidence,
            };
            cells.push(HierarchyCell {
                row,
                col,
                status,
                witnesses,
            });
        }
    }
    Ok(HierarchyMatrix { order, cells })
}

impl Serialize for Dag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Dag", 2)?;
        st.serialize_field("m", &self.m())?;
        st.serialize_field("edges", &self.edges())?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ci(i: usize, j: usize, s: &[usize]) -> CiStatement {
        CiStatement::new(i, j, s.iter().collect()).unwrap()
    }

    fn dag(m: usize, e: &[(usize, usize)]) -> Dag {
        Dag::new(m, e.iter().copied()).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for r in RazorId::ALL {
            assert_eq!(r.name().parse::<RazorId>().unwrap(), r);
        }
        assert!("nope".parse::<RazorId>().is_err());
    }

    #[test]
    fn collider_is_the_only_faithful_dag() {
        let p = IndependenceModel::from_statements(3, [ci(1, 3, &[])]).unwrap();
        let cfc = class_of(RazorId::Cfc, &p, None, CLASS_CEILING).unwrap();
        assert_eq!(cfc, vec![dag(3, &[(1, 2), (3, 2)])]);
    }

    #[test]
    fn shielded_split_within_one_class() {
        let p = IndependenceModel::from_statements(3, [ci(1, 3, &[])]).unwrap();
        let g1 = dag(3, &[(1, 2), (3, 2), (1, 3)]);
        let g2 = dag(3, &[(1, 2), (2, 3), (1, 3)]);
        let v1 = classify(&g1, &p, None, CLASS_CEILING).unwrap();
        let v2 = classify(&g2, &p, None, CLASS_CEILING).unwrap();
        assert!(v1.get(RazorId::TriF).is_in());
        assert!(!v2.get(RazorId::TriF).is_in());
        assert!(!v1.get(RazorId::Sgs).is_in());
        assert!(v2.get(RazorId::Sgs).is_in());
        assert!(!v2.get(RazorId::Pm).is_in());
    }

    #[test]
    fn parametric_needs_ranges() {
        let p = IndependenceModel::new(2);
        assert!(matches!(
            class_of(RazorId::ParamM, &p, None, CLASS_CEILING),
            Err(Error::MissingRanges(_))
        ));
        let v = classify(&dag(2, &[(1, 2)]), &p, None, CLASS_CEILING).unwrap();
        assert_eq!(v.get(RazorId::ParamM).decided(), None);
        assert!(v.get(RazorId::Fr).is_in());
    }

    #[test]
    fn above_ceiling_leaves_enumerative_razors_open() {
        let p = IndependenceModel::new(3);
        let g = Dag::complete(&[1, 2, 3]).unwrap();
        let v = classify(&g, &p, None, 2).unwrap();
        assert!(v.get(RazorId::Cfc).is_in());
        assert_eq!(v.get(RazorId::Fr).decided(), None);
        assert!(class_of(RazorId::Fr, &p, None, 2).is_err());
    }

    #[test]
    fn empty_hierarchy_is_identity_only() {
        let h = hierarchy_matrix(&[], CLASS_CEILING).unwrap();
        for c in &h.cells {
            if c.row == c.col {
                assert_eq!(c.status, CellStatus::Identity);
            } else {
                assert_eq!(c.status, CellStatus::NoEvidence);
            }
        }
    }
}
