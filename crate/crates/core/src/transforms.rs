//! Covered edges, Markov equivalence classes by covered reversals, and
//! I-monotone sequences of reversals and deletions between two DAGs.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};
use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::independence::{CiIndex, CiMask, MASK_CEILING};

/// Largest `m` accepted by [`mec_members`].
pub const MEC_CEILING: usize = 5;

/// `j -> k` is covered when `Pa(j) = Pa(k) \ {j}`.
pub fn is_covered(g: &Dag, j: usize, k: usize) -> bool {
    g.has_edge(j, k) && g.parents(j) == g.parents(k).without(j)
}

pub fn covered_edges(g: &Dag) -> Vec<(usize, usize)> {
    g.edges()
        .into_iter()
        .filter(|&(j, k)| is_covered(g, j, k))
        .collect()
}

pub fn reverse_covered(g: &Dag, (j, k): (usize, usize)) -> Result<Dag> {
    if !g.has_edge(j, k) {
        return Err(Error::NotCovered {
            j,
            k,
            reason: "no such edge".into(),
        });
    }
    let pj = g.parents(j);
    let pk = g.parents(k).without(j);
    if pj != pk {
        return Err(Error::NotCovered {
            j,
            k,
            reason: format!("Pa({j}) = {pj} but Pa({k}) \\ {{{j}}} = {pk}"),
        });
    }
    g.with_edge_reversed(j, k)
}

/// Closure of `g` under covered-edge reversals, sorted.
pub fn mec_members(g: &Dag) -> Result<Vec<Dag>> {
    if g.m() > MEC_CEILING {
        return Err(Error::Ceiling {
            what: "equivalence class traversal",
            requested: g.m(),
            ceiling: MEC_CEILING,
        });
    }
    let mut seen: HashSet<Dag> = HashSet::from([g.clone()]);
    let mut queue = VecDeque::from([g.clone()]);
    while let Some(d) = queue.pop_front() {
        for e in covered_edges(&d) {
            let next = reverse_covered(&d, e)?;
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    let mut out: Vec<Dag> = seen.into_iter().collect();
    out.sort_by_key(|d| d.edge_mask());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Reverse(usize, usize),
    Delete(usize, usize),
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepKind::Reverse(j, k) => write!(f, "reverse {j}->{k}"),
            StepKind::Delete(j, k) => write!(f, "delete {j}->{k}"),
        }
    }
}

/// One move together with the DAG it produces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChickeringStep {
    pub kind: StepKind,
    pub dag: Dag,
}

fn skeleton_distance(a: &Dag, b: &Dag) -> usize {
    let (sa, sb) = (a.skeleton(), b.skeleton());
    sa.iter().filter(|e| !sb.contains(e)).count() + sb.iter().filter(|e| !sa.contains(e)).count()
}

fn orientation_mismatch(a: &Dag, b: &Dag) -> usize {
    a.edges().iter().filter(|&&(j, k)| b.has_edge(k, j)).count()
}

/// A sequence of covered reversals and deletions taking `h` to `g` with the
/// independence model never shrinking, or `None` when `I(h) ⊄ I(g)`.
///
/// Best-first search ordered by skeleton distance to `g`, then orientation
/// mismatches; paths longer than `|E(h)| + m²` are not extended. Running out
/// of states while `I(h) ⊆ I(g)` is reported as an error, since a sequence
/// is guaranteed to exist.
pub fn chickering_sequence(h: &Dag, g: &Dag) -> Result<Option<Vec<ChickeringStep>>> {
    if h.m() != g.m() {
        return Err(Error::DimensionMismatch {
            expected: h.m(),
            found: g.m(),
        });
    }
    if h.m() > MASK_CEILING {
        return Err(Error::Ceiling {
            what: "sequence search",
            requested: h.m(),
            ceiling: MASK_CEILING,
        });
    }
    let index = CiIndex::new(h.m())?;
    let target = g.ci_mask(&index);
    if !h.ci_mask(&index).is_subset(&target) {
        return Ok(None);
    }
    let bound = h.edge_count() + h.m() * h.m();
    let mut parent: HashMap<Dag, Option<(Dag, StepKind)>> = HashMap::from([(h.clone(), None)]);
    let mut depth: HashMap<Dag, usize> = HashMap::from([(h.clone(), 0)]);
    let mut heap = BinaryHeap::new();
    let mut tick = 0usize;
    let key = |d: &Dag| (skeleton_distance(d, g), orientation_mismatch(d, g));
    heap.push(Reverse((key(h), tick, h.clone())));
    while let Some(Reverse((_, _, state))) = heap.pop() {
        if &state == g {
            let mut steps = Vec::new();
            let mut cur = state;
            while let Some(Some((prev, kind))) = parent.get(&cur).cloned() {
                steps.push(ChickeringStep { kind, dag: cur });
                cur = prev;
            }
            steps.reverse();
            return Ok(Some(steps));
        }
        let d = depth[&state];
        if d >= bound {
            continue;
        }
        let mut moves: Vec<(StepKind, Dag)> = Vec::new();
        for (j, k) in covered_edges(&state) {
            moves.push((StepKind::Reverse(j, k), state.with_edge_reversed(j, k)?));
        }
        for (j, k) in state.edges() {
            let next = state.without_edge(j, k)?;
            if next.ci_mask(&index).is_subset(&target) {
                moves.push((StepKind::Delete(j, k), next));
            }
        }
        for (kind, next) in moves {
            if parent.contains_key(&next) {
                continue;
            }
            parent.insert(next.clone(), Some((state.clone(), kind)));
            depth.insert(next.clone(), d + 1);
            tick += 1;
            heap.push(Reverse((key(&next), tick, next)));
        }
    }
    Err(Error::SearchFailed(format!(
        "no sequence from {} to {} within depth {bound}",
        h.edge_list(),
        g.edge_list()
    )))
}

/// Independent replay of a sequence; returns the first problem found.
pub fn validate_sequence(h: &Dag, g: &Dag, steps: &[ChickeringStep]) -> Result<()> {
    let index = CiIndex::new(h.m())?;
    let mut cur = h.clone();
    let mut cur_mask: CiMask = cur.ci_mask(&index);
    for (n, step) in steps.iter().enumerate() {
        let expected = match step.kind {
            StepKind::Reverse(j, k) => reverse_covered(&cur, (j, k))?,
            StepKind::Delete(j, k) => cur.without_edge(j, k)?,
        };
        if expected != step.dag {
            return Err(Error::SearchFailed(format!(
                "step {}: snapshot does not match `{}`",
                n + 1,
                step.kind
            )));
        }
        let next_mask = step.dag.ci_mask(&index);
        if !cur_mask.is_subset(&next_mask) {
            return Err(Error::SearchFailed(format!(
                "step {}: independence model shrank",
                n + 1
            )));
        }
        cur = step.dag.clone();
        cur_mask = next_mask;
    }
    if &cur != g {
        return Err(Error::SearchFailed("sequence does not end at the target".into()));
    }
    Ok(())
}

/// Numbered transcript: `0. start` then one `n. reverse|delete j->k` per step,
/// each followed by the DAG snapshot and a blank line.
pub fn transcript(h: &Dag, steps: &[ChickeringStep]) -> String {
    let mut out = String::new();
    writeln!(out, "0. start\n{h}").unwrap();
    for (n, step) in steps.iter().enumerate() {
        writeln!(out, "{}. {}\n{}", n + 1, step.kind, step.dag).unwrap();
    }
    out
}

pub fn parse_transcript(text: &str) -> Result<(Dag, Vec<ChickeringStep>)> {
    let mut blocks: Vec<(usize, Vec<&str>)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if !line.starts_with("m=") && !line.contains(" -> ") {
            blocks.push((n + 1, vec![line]));
        } else if let Some(b) = blocks.last_mut() {
            b.1.push(line);
        } else {
            return Err(Error::parse(n + 1, "snapshot before any step header"));
        }
    }
    let mut start = None;
    let mut steps = Vec::new();
    for (idx, (line, block)) in blocks.into_iter().enumerate() {
        let (num, action) = block[0]
            .split_once(". ")
            .ok_or_else(|| Error::parse(line, "expected `<n>. <action>`"))?;
        if num.parse::<usize>().ok() != Some(idx) {
            return Err(Error::parse(line, format!("expected step number {idx}")));
        }
        let dag = Dag::parse_text(&block[1..].join("\n"))?;
        if idx == 0 {
            if action != "start" {
                return Err(Error::parse(line, "first block must be `0. start`"));
            }
            start = Some(dag);
            continue;
        }
        let (verb, edge) = action
            .split_once(' ')
            .ok_or_else(|| Error::parse(line, "expected `reverse j->k` or `delete j->k`"))?;
        let (j, k) = edge
            .split_once("->")
            .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
            .ok_or_else(|| Error::parse(line, format!("bad edge `{edge}`")))?;
        let kind = match verb {
            "reverse" => StepKind::Reverse(j, k),
            "delete" => StepKind::Delete(j, k),
            other => return Err(Error::parse(line, format!("unknown action `{other}`"))),
        };
        steps.push(ChickeringStep { kind, dag });
    }
    let start = start.ok_or_else(|| Error::parse(1, "missing `0. start` block"))?;
    Ok((start, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::markov_equivalent;

    fn dag(m: usize, e: &[(usize, usize)]) -> Dag {
        Dag::new(m, e.iter().copied()).unwrap()
    }

    #[test]
    fn covered_examples() {
        assert_eq!(covered_edges(&dag(3, &[(1, 2), (2, 3)])), vec![(1, 2)]);
        assert_eq!(
            covered_edges(&dag(3, &[(1, 2), (1, 3), (2, 3)])),
            vec![(1, 2), (2, 3)]
        );
        assert!(covered_edges(&Dag::empty(3).unwrap()).is_empty());
    }

    #[test]
    fn reversal_stays_in_class() {
        let chain = dag(3, &[(1, 2), (2, 3)]);
        let fork = reverse_covered(&chain, (1, 2)).unwrap();
        assert_eq!(fork, dag(3, &[(2, 1), (2, 3)]));
        assert!(markov_equivalent(&chain, &fork).unwrap());
        assert!(matches!(
            reverse_covered(&chain, (2, 3)),
            Err(Error::NotCovered { .. })
        ));
    }

    #[test]
    fn class_sizes() {
        assert_eq!(mec_members(&dag(3, &[(1, 2), (2, 3)])).unwrap().len(), 3);
        assert_eq!(mec_members(&dag(3, &[(1, 2), (3, 2)])).unwrap().len(), 1);
        assert_eq!(mec_members(&dag(2, &[(1, 2)])).unwrap().len(), 2);
    }

    #[test]
    fn single_deletion_sequence() {
        let h = dag(3, &[(1, 2), (2, 3), (1, 3)]);
        let g = dag(3, &[(1, 2), (2, 3)]);
        let steps = chickering_sequence(&h, &g).unwrap().unwrap();
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].kind, StepKind::Delete(1, 3));
        validate_sequence(&h, &g, &steps).unwrap();
        assert!(chickering_sequence(&g, &g).unwrap().unwrap().is_empty());
        assert!(chickering_sequence(&g, &h).unwrap().is_none());
    }

    #[test]
    fn transcript_round_trip() {
        let h = Dag::complete(&[3, 1, 2]).unwrap();
        let g = dag(3, &[(1, 2), (3, 2)]);
        let steps = chickering_sequence(&h, &g).unwrap().unwrap();
        let text = transcript(&h, &steps);
        let (start, back) = parse_transcript(&text).unwrap();
        assert_eq!(start, h);
        assert_eq!(back, steps);
        assert_eq!(transcript(&start, &back), text);
    }
}
