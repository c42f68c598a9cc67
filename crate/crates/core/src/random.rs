//! Seeded generators for random DAGs, range specifications and strictly
//! positive multinomial models.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::graph::Dag;
use crate::multinomial::{MultinomialModel, RangeSpec};

/// Largest denominator used for generated probabilities.
pub const MAX_DENOMINATOR: usize = 20;

/// Random topological order, each forward edge kept with probability `density`.
pub fn random_dag<R: Rng + ?Sized>(m: usize, density: f64, rng: &mut R) -> Result<Dag> {
    let mut order: Vec<usize> = (1..=m).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            if rng.random_bool(density) {
                edges.push((order[a], order[b]));
            }
        }
    }
    Dag::new(m, edges)
}

pub fn random_ranges<R: Rng + ?Sized>(m: usize, max_r: usize, rng: &mut R) -> Result<RangeSpec> {
    RangeSpec::new((0..m).map(|_| rng.random_range(2..=max_r.max(2))).collect())
}

/// Uniform composition of `d` into `r` positive parts, as fractions of `d`.
fn positive_row<R: Rng + ?Sized>(r: usize, max_denominator: usize, rng: &mut R) -> Vec<BigRational> {
    let d = rng.random_range(r.max(2)..=max_denominator.max(r));
    // Choose r-1 distinct cut points in 1..d.
    let mut cuts: Vec<usize> = (1..d).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(r - 1).collect();
    cuts.sort_unstable();
    cuts.push(d);
    let mut prev = 0;
    cuts.into_iter()
        .map(|c| {
            let part = c - prev;
            prev = c;
            BigRational::new(BigInt::from(part), BigInt::from(d))
        })
        .collect()
}

/// Strictly positive conditional tables on `dag`.
pub fn random_model<R: Rng + ?Sized>(dag: &Dag, ranges: &RangeSpec, rng: &mut R) -> Result<MultinomialModel> {
    random_model_with_denominator(dag, ranges, MAX_DENOMINATOR, rng)
}

/// As [`random_model`] with denominators capped at `max_denominator` (raised
/// to the range where needed). Small caps make repeated rows, and with them
/// extra independences, common.
pub fn random_model_with_denominator<R: Rng + ?Sized>(
    dag: &Dag,
    ranges: &RangeSpec,
    max_denominator: usize,
    rng: &mut R,
) -> Result<MultinomialModel> {
    let rows = (1..=dag.m())
        .map(|v| {
            (0..ranges.product(dag.parents(v)))
                .map(|_| positive_row(ranges.r(v), max_denominator, rng))
                .collect()
        })
        .collect();
    MultinomialModel::new(dag.clone(), ranges.clone(), rows)
}
