//! Parameterizing sets and the characteristic imset of a DAG.
//!
//! A nonempty `s` is parameterizing when some `i ∈ s` has `s \ {i} ⊆ Pa(i)`;
//! such an `i` is unique in a DAG, which partitions the family by vertex.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::multinomial::RangeSpec;
use crate::vset::VertexSet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterizingSets {
    m: usize,
    /// `cells[i - 1]`: sets whose witness is `i`, ascending by bitmask.
    cells: Vec<Vec<VertexSet>>,
}

impl ParameterizingSets {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cell(&self, i: usize) -> &[VertexSet] {
        &self.cells[i - 1]
    }

    /// Whole family sorted by `(size, members)`.
    pub fn sets(&self) -> Vec<VertexSet> {
        let mut all: Vec<VertexSet> = self.cells.iter().flatten().copied().collect();
        all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.iter().cmp(b.iter())));
        all
    }

    pub fn len(&self) -> usize {
        self.cells.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, s: VertexSet) -> bool {
        self.cells.iter().any(|c| c.contains(&s))
    }

    pub fn is_subset(&self, other: &ParameterizingSets) -> bool {
        self.m == other.m && self.cells.iter().flatten().all(|s| other.contains(*s))
    }

    /// One set per line, `<members> @ <witness>`, grouped by witness.
    pub fn to_text(&self) -> String {
        let mut out = format!("m={}\n", self.m);
        for (idx, cell) in self.cells.iter().enumerate() {
            for s in cell {
                let members: Vec<String> = s.iter().map(|v| v.to_string()).collect();
                writeln!(out, "{} @ {}", members.join(" "), idx + 1).unwrap();
            }
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l.trim()));
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty input"))?;
        let m = header
            .strip_prefix("m=")
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|m| (1..=crate::vset::MAX_VERTICES).contains(m))
            .ok_or_else(|| Error::parse(1, "expected `m=<int>`"))?;
        let mut cells = vec![Vec::new(); m];
        for (line, l) in lines.filter(|(_, l)| !l.is_empty()) {
            let (members, witness) = l
                .split_once('@')
                .ok_or_else(|| Error::parse(line, "expected `<members> @ <witness>`"))?;
            let num = |t: &str| {
                t.parse::<usize>()
                    .ok()
                    .filter(|v| (1..=m).contains(v))
                    .ok_or_else(|| Error::parse(line, format!("bad vertex `{t}`")))
            };
            let w = num(witness.trim())?;
            let s = members
                .split_whitespace()
                .map(num)
                .collect::<Result<VertexSet>>()?;
            if !s.contains(w) {
                return Err(Error::parse(line, "witness must belong to its set"));
            }
            cells[w - 1].push(s);
        }
        for cell in &mut cells {
            cell.sort();
        }
        Ok(ParameterizingSets { m, cells })
    }
}

/// Vertices `i ∈ s` with `s \ {i} ⊆ Pa(i)`; at most one in any DAG.
pub fn witnesses(g: &Dag, s: VertexSet) -> VertexSet {
    s.iter()
        .filter(|&i| s.without(i).is_subset(g.parents(i)))
        .collect()
}

pub fn characteristic_imset(g: &Dag, s: VertexSet) -> Result<u8> {
    if s.is_empty() {
        return Err(Error::InvalidArgument(
            "characteristic imset is defined on nonempty sets".into(),
        ));
    }
    if let Some(v) = s.last().filter(|&v| v > g.m()) {
        return Err(Error::VertexOutOfRange { vertex: v, m: g.m() });
    }
    Ok(u8::from(!witnesses(g, s).is_empty()))
}

pub fn parameterizing_sets(g: &Dag) -> ParameterizingSets {
    let cells = (1..=g.m())
        .map(|i| g.parents(i).subsets().map(|t| t.with(i)).collect())
        .collect();
    ParameterizingSets { m: g.m(), cells }
}

/// `sum over s in S(G) of prod_{j in s} (r(j) - 1)`.
pub fn param_count_via_imset(g: &Dag, ranges: &RangeSpec) -> Result<u64> {
    if g.m() != ranges.m() {
        return Err(Error::DimensionMismatch {
            expected: g.m(),
            found: ranges.m(),
        });
    }
    Ok(parameterizing_sets(g)
        .cells
        .iter()
        .flatten()
        .map(|s| s.iter().map(|j| ranges.r(j) as u64 - 1).product::<u64>())
        .sum())
}

pub fn paramsets_subset(g: &Dag, h: &Dag) -> Result<bool> {
    if g.m() != h.m() {
        return Err(Error::DimensionMismatch {
            expected: g.m(),
            found: h.m(),
        });
    }
    Ok(parameterizing_sets(g).is_subset(&parameterizing_sets(h)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> VertexSet {
        v.iter().collect()
    }

    #[test]
    fn chain_family() {
        let chain = Dag::new(3, [(1, 2), (2, 3)]).unwrap();
        let ps = parameterizing_sets(&chain);
        assert_eq!(
            ps.sets(),
            vec![set(&[1]), set(&[2]), set(&[3]), set(&[1, 2]), set(&[2, 3])]
        );
        assert_eq!(ps.cell(2), &[set(&[2]), set(&[1, 2])]);
        assert_eq!(characteristic_imset(&chain, set(&[1, 3])).unwrap(), 0);
        assert_eq!(characteristic_imset(&chain, set(&[2, 3])).unwrap(), 1);
        assert!(characteristic_imset(&chain, VertexSet::EMPTY).is_err());
    }

    #[test]
    fn complete_dag_has_all_subsets() {
        let g = Dag::complete(&[1, 2, 3]).unwrap();
        assert_eq!(parameterizing_sets(&g).len(), 7);
        let empty = Dag::empty(3).unwrap();
        assert_eq!(parameterizing_sets(&empty).len(), 3);
    }

    #[test]
    fn counts_via_imset() {
        let chain = Dag::new(3, [(1, 2), (2, 3)]).unwrap();
        let r = RangeSpec::new(vec![2, 3, 2]).unwrap();
        assert_eq!(param_count_via_imset(&chain, &r).unwrap(), 8);
        let empty = Dag::empty(2).unwrap();
        assert_eq!(param_count_via_imset(&empty, &RangeSpec::binary(2)).unwrap(), 2);
    }

    #[test]
    fn subset_examples() {
        let chain = Dag::new(3, [(1, 2), (2, 3)]).unwrap();
        let collider = Dag::new(3, [(1, 2), (3, 2)]).unwrap();
        let complete = Dag::complete(&[1, 2, 3]).unwrap();
        assert!(paramsets_subset(&chain, &complete).unwrap());
        assert!(!paramsets_subset(&collider, &chain).unwrap());
        assert!(paramsets_subset(&chain, &chain).unwrap());
    }

    #[test]
    fn dump_round_trip() {
        let g = Dag::new(4, [(1, 3), (2, 3), (3, 4)]).unwrap();
        let ps = parameterizing_sets(&g);
        let text = ps.to_text();
        let back = ParameterizingSets::parse_text(&text).unwrap();
        assert_eq!(back, ps);
        assert_eq!(back.to_text(), text);
    }
}
