//! d-separation, equivalence and enumeration checked against brute-force
//! path and orientation oracles written independently of the library.

use causal_razors::graph::{
    enumerate_dags, independence_model_of_dag, markov_equivalent, permutation_dag, single_ci_dag,
};
use causal_razors::{CiStatement, Dag, IndependenceModel, VertexSet};
use proptest::prelude::*;

fn dag(m: usize, edges: &[(usize, usize)]) -> Dag {
    Dag::new(m, edges.iter().copied()).unwrap()
}

fn descendants(g: &Dag, v: usize) -> Vec<usize> {
    let mut seen = vec![v];
    let mut stack = vec![v];
    while let Some(x) = stack.pop() {
        for (a, b) in g.edges() {
            if a == x && !seen.contains(&b) {
                seen.push(b);
                stack.push(b);
            }
        }
    }
    seen
}

/// Some simple path from `i` to `j` is active given `s`.
fn connected_by_paths(g: &Dag, i: usize, j: usize, s: &[usize]) -> bool {
    fn walk(g: &Dag, path: &mut Vec<usize>, j: usize, s: &[usize]) -> bool {
        let last = *path.last().unwrap();
        if last == j {
            return path.windows(3).all(|w| {
                let (a, b, c) = (w[0], w[1], w[2]);
                if g.has_edge(a, b) && g.has_edge(c, b) {
                    descendants(g, b).iter().any(|d| s.contains(d))
                } else {
                    !s.contains(&b)
                }
            });
        }
        for next in 1..=g.m() {
            if g.adjacent(last, next) && !path.contains(&next) {
                path.push(next);
                if walk(g, path, j, s) {
                    return true;
                }
                path.pop();
            }
        }
        false
    }
    walk(g, &mut vec![i], j, s)
}

fn arb_dag(m: usize) -> impl Strategy<Value = Dag> {
    let order = Just((1..=m).collect::<Vec<usize>>()).prop_shuffle();
    (order, proptest::collection::vec(any::<bool>(), m * (m - 1) / 2)).prop_map(move |(order, keep)| {
        let mut edges = Vec::new();
        let mut k = 0;
        for a in 0..m {
            for b in a + 1..m {
                if keep[k] {
                    edges.push((order[a], order[b]));
                }
                k += 1;
            }
        }
        Dag::new(m, edges).unwrap()
    })
}

#[test]
fn separation_matches_path_oracle_exhaustively() {
    for m in 2..=4 {
        for g in enumerate_dags(m).unwrap() {
            for i in 1..=m {
                for j in i + 1..=m {
                    let rest = g.vertices().without(i).without(j);
                    for s in rest.subsets() {
                        let oracle = !connected_by_paths(&g, i, j, &s.to_vec());
                        assert_eq!(g.d_separated(i, j, s).unwrap(), oracle, "{} <{i},{j}|{s:?}>", g.edge_list());
                    }
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn separation_matches_path_oracle_at_six(g in arb_dag(6), i in 1usize..=6, j in 1usize..=6, bits in 0u32..64) {
        prop_assume!(i != j);
        let s = VertexSet::from_bits(bits).difference(VertexSet::singleton(i).with(j));
        let oracle = !connected_by_paths(&g, i, j, &s.to_vec());
        prop_assert_eq!(g.d_separated(i, j, s).unwrap(), oracle);
    }

    #[test]
    fn text_format_round_trips(g in arb_dag(5)) {
        let text = g.to_text();
        let back = Dag::parse_text(&text).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(back.to_text(), text);
    }

    /// Minimal I-maps of a DAG's own model are Markovian to it.
    #[test]
    fn permutation_dags_are_imaps(g in arb_dag(5), rot in 0usize..5) {
        let p = independence_model_of_dag(&g);
        let mut pi: Vec<usize> = (1..=5).collect();
        pi.rotate_left(rot);
        let h = permutation_dag(&pi, &p).unwrap();
        prop_assert!(independence_model_of_dag(&h).iter().all(|c| p.contains(c)));
    }
}

#[test]
fn separation_examples() {
    assert!(Dag::empty(3).unwrap().d_separated(1, 3, VertexSet::EMPTY).unwrap());
    let g = dag(6, &[(1, 2), (2, 3), (1, 4), (4, 5), (3, 6), (5, 6)]);
    let s = VertexSet::singleton(3).with(5);
    assert!(g.d_separated(1, 6, s).unwrap());
    let model = independence_model_of_dag(&g);
    assert!(model.contains(&"<2,4|{1}>".parse().unwrap()));
    assert!(!model.contains(&"<1,6>".parse().unwrap()));
    assert!(!dag(3, &[(1, 2), (3, 2)]).d_separated(1, 3, VertexSet::singleton(2)).unwrap());
}

#[test]
fn dag_counts_match_orientation_oracle() {
    // All orientations of every skeleton, filtered by acyclicity.
    fn brute(m: usize) -> usize {
        let pairs: Vec<(usize, usize)> = (1..=m).flat_map(|a| (a + 1..=m).map(move |b| (a, b))).collect();
        let mut count = 0;
        for code in 0..3usize.pow(pairs.len() as u32) {
            let mut c = code;
            let mut edges = Vec::new();
            for &(a, b) in &pairs {
                match c % 3 {
                    1 => edges.push((a, b)),
                    2 => edges.push((b, a)),
                    _ => {}
                }
                c /= 3;
            }
            count += usize::from(Dag::new(m, edges).is_ok());
        }
        count
    }
    for m in 1..=4 {
        assert_eq!(enumerate_dags(m).unwrap().count(), brute(m), "m={m}");
    }
    assert_eq!(enumerate_dags(5).unwrap().count(), 29281);
}

#[test]
fn equivalence_agrees_with_model_equality() {
    for m in 2..=4 {
        let dags: Vec<Dag> = enumerate_dags(m).unwrap().collect();
        let models: Vec<IndependenceModel> = dags.iter().map(independence_model_of_dag).collect();
        for a in 0..dags.len() {
            for b in a..dags.len() {
                assert_eq!(markov_equivalent(&dags[a], &dags[b]).unwrap(), models[a] == models[b]);
            }
        }
    }
    assert!(markov_equivalent(&dag(2, &[(1, 2)]), &dag(2, &[(2, 1)])).unwrap());
    assert!(markov_equivalent(&dag(3, &[(1, 2), (2, 3)]), &dag(3, &[(2, 1), (2, 3)])).unwrap());
    assert!(!markov_equivalent(&dag(3, &[(1, 2), (2, 3)]), &dag(3, &[(1, 2), (3, 2)])).unwrap());
}

#[test]
fn model_examples() {
    let chain = independence_model_of_dag(&dag(3, &[(1, 2), (2, 3)]));
    assert_eq!(chain.iter().copied().collect::<Vec<_>>(), vec!["<1,3|{2}>".parse::<CiStatement>().unwrap()]);
    assert!(independence_model_of_dag(&Dag::complete(&[1, 2, 3]).unwrap()).is_empty());
}

#[test]
fn permutation_dag_examples() {
    let p = IndependenceModel::from_statements(3, ["<1,3>", "<1,3|{2}>"].iter().map(|s| s.parse().unwrap())).unwrap();
    assert_eq!(permutation_dag(&[1, 2, 3], &p).unwrap(), dag(3, &[(1, 2), (2, 3)]));
    assert_eq!(permutation_dag(&[1, 3, 2], &p).unwrap(), dag(3, &[(1, 2), (3, 2)]));
    let full = permutation_dag(&[2, 1, 3], &IndependenceModel::new(3)).unwrap();
    assert_eq!(full, Dag::complete(&[2, 1, 3]).unwrap());
}

#[test]
fn single_statement_dags() {
    assert_eq!(single_ci_dag(2, 1, 2, VertexSet::EMPTY).unwrap(), Dag::empty(2).unwrap());
    for (m, i, j, s) in [(4, 1, 3, VertexSet::singleton(2)), (5, 1, 5, VertexSet::EMPTY)] {
        let model = independence_model_of_dag(&single_ci_dag(m, i, j, s).unwrap());
        assert_eq!(model.len(), 1);
        assert!(model.contains(&CiStatement::new(i, j, s).unwrap()));
    }
}

#[test]
fn bad_inputs_are_refused() {
    assert!(Dag::new(3, [(1, 2), (2, 3), (3, 1)]).is_err());
    assert!(Dag::new(2, [(1, 3)]).is_err());
    assert!(enumerate_dags(7).is_err());
    assert!(Dag::parse_text("m=3\n1 -> 4\n").is_err());
}
