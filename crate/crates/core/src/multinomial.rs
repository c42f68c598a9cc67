//! Multinomial causal models with exact rational tables, the factorized joint,
//! exact conditional-independence checks, and parameter counting.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::independence::{CiStatement, IndependenceModel, MASK_CEILING};
use crate::vset::VertexSet;

/// Largest number of full configurations a [`JointTable`] may hold.
pub const JOINT_CEILING: usize = 4096;

const RANGE_PRODUCT_LIMIT: u64 = 1 << 58;

/// Variable cardinalities `r(1), ..., r(m)`, each at least 2.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct RangeSpec(Vec<usize>);

impl RangeSpec {
    pub fn new(r: Vec<usize>) -> Result<Self> {
        if r.is_empty() {
            return Err(Error::InvalidRanges("no variables".into()));
        }
        if let Some((v, bad)) = r.iter().enumerate().find(|(_, &x)| x < 2) {
            return Err(Error::InvalidRanges(format!(
                "r({}) = {bad}; every range must be at least 2",
                v + 1
            )));
        }
        let mut product: u64 = 1;
        for &x in &r {
            product = product
                .checked_mul(x as u64)
                .filter(|p| *p <= RANGE_PRODUCT_LIMIT)
                .ok_or_else(|| Error::InvalidRanges("range product too large".into()))?;
        }
        Ok(RangeSpec(r))
    }

    pub fn binary(m: usize) -> Self {
        RangeSpec(vec![2; m])
    }

    pub fn m(&self) -> usize {
        self.0.len()
    }

    pub fn r(&self, v: usize) -> usize {
        self.0[v - 1]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// `r(s)`, the number of joint configurations of `s`; `r(∅) = 1`.
    pub fn product(&self, s: VertexSet) -> u64 {
        s.iter().map(|v| self.0[v - 1] as u64).product()
    }

    pub fn parse_list(text: &str) -> Result<Self> {
        let r = text
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidRanges(format!("bad range `{}`", t.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        RangeSpec::new(r)
    }
}

impl TryFrom<Vec<usize>> for RangeSpec {
    type Error = Error;
    fn try_from(r: Vec<usize>) -> Result<Self> {
        RangeSpec::new(r)
    }
}

impl From<RangeSpec> for Vec<usize> {
    fn from(r: RangeSpec) -> Vec<usize> {
        r.0
    }
}

impl fmt::Debug for RangeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for RangeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|r| r.to_string()).collect();
        write!(f, "<{}>", parts.join(","))
    }
}

fn check_dims(g: &Dag, ranges: &RangeSpec) -> Result<()> {
    if g.m() != ranges.m() {
        return Err(Error::DimensionMismatch {
            expected: g.m(),
            found: ranges.m(),
        });
    }
    Ok(())
}

/// `sum_i (r(i) - 1) * r(Pa(i))`.
pub fn param_count(g: &Dag, ranges: &RangeSpec) -> Result<u64> {
    check_dims(g, ranges)?;
    Ok((1..=g.m())
        .map(|i| (ranges.r(i) as u64 - 1) * ranges.product(g.parents(i)))
        .sum())
}

/// Parses `a/b`, an integer, or a plain decimal such as `0.075` exactly.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let bad = || Error::InvalidTable(format!("cannot read `{t}` as a rational"));
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if (int.is_empty() && frac.is_empty())
        || !int.chars().all(|c| c.is_ascii_digit())
        || !frac.chars().all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    let value = BigRational::new(numer, denom);
    Ok(if neg { -value } else { value })
}

/// Conditional table of one vertex: one row per parent configuration, parents
/// in ascending order with the last parent varying fastest.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ThetaTable {
    pub vertex: usize,
    pub parents: VertexSet,
    pub rows: Vec<Vec<BigRational>>,
}

impl ThetaTable {
    fn validate(&self, ranges: &RangeSpec) -> Result<()> {
        let v = self.vertex;
        let want_rows = ranges.product(self.parents) as usize;
        if self.rows.len() != want_rows {
            return Err(Error::InvalidTable(format!(
                "vertex {v}: {} rows, expected {want_rows}",
                self.rows.len()
            )));
        }
        for (n, row) in self.rows.iter().enumerate() {
            if row.len() != ranges.r(v) {
                return Err(Error::InvalidTable(format!(
                    "vertex {v} row {n}: {} entries, expected {}",
                    row.len(),
                    ranges.r(v)
                )));
            }
            if row.iter().any(|p| p.is_negative() || *p > BigRational::one()) {
                return Err(Error::InvalidTable(format!(
                    "vertex {v} row {n}: entries must lie in [0, 1]"
                )));
            }
            let sum: BigRational = row.iter().sum();
            if !sum.is_one() {
                return Err(Error::InvalidTable(format!(
                    "vertex {v} row {n} sums to {sum}, not 1"
                )));
            }
        }
        Ok(())
    }

    /// Free parameters: `(r(i) - 1)` per row.
    pub fn free_parameters(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len() - 1) * self.rows.len()
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MultinomialModel {
    dag: Dag,
    ranges: RangeSpec,
    tables: Vec<ThetaTable>,
}

impl MultinomialModel {
    /// `tables[v - 1]` holds the rows for vertex `v`.
    pub fn new(dag: Dag, ranges: RangeSpec, rows: Vec<Vec<Vec<BigRational>>>) -> Result<Self> {
        check_dims(&dag, &ranges)?;
        if rows.len() != dag.m() {
            return Err(Error::InvalidTable(format!(
                "{} tables for {} vertices",
                rows.len(),
                dag.m()
            )));
        }
        let tables: Vec<ThetaTable> = rows
            .into_iter()
            .enumerate()
            .map(|(idx, rows)| ThetaTable {
                vertex: idx + 1,
                parents: dag.parents(idx + 1),
                rows,
            })
            .collect();
        for t in &tables {
            t.validate(&ranges)?;
        }
        Ok(MultinomialModel {
            dag,
            ranges,
            tables,
        })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn ranges(&self) -> &RangeSpec {
        &self.ranges
    }

    pub fn tables(&self) -> &[ThetaTable] {
        &self.tables
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            ranges: self.ranges.0.clone(),
            edges: self.dag.edges().iter().map(|&(j, k)| [j, k]).collect(),
            cpt: self
                .tables
                .iter()
                .map(|t| {
                    t.rows
                        .iter()
                        .map(|row| row.iter().map(|p| p.to_string()).collect())
                        .collect()
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("plain data serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        let ranges = RangeSpec::new(file.ranges)?;
        let dag = Dag::new(ranges.m(), file.edges.iter().map(|e| (e[0], e[1])))?;
        let rows = file
            .cpt
            .iter()
            .map(|table| {
                table
                    .iter()
                    .map(|row| row.iter().map(|s| parse_rational(s)).collect())
                    .collect()
            })
            .collect::<Result<Vec<Vec<Vec<_>>>>>()?;
        MultinomialModel::new(dag, ranges, rows)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    ranges: Vec<usize>,
    edges: Vec<[usize; 2]>,
    cpt: Vec<Vec<Vec<String>>>,
}

/// Exact joint distribution; configuration tuples are mixed-radix with the
/// last variable varying fastest. Stored as integer weights over a common
/// denominator so CI checks stay in integer arithmetic.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct JointTable {
    ranges: RangeSpec,
    weights: Vec<BigInt>,
    denominator: BigInt,
}

impl JointTable {
    pub fn from_probabilities(ranges: RangeSpec, probs: Vec<BigRational>) -> Result<Self> {
        let size = joint_size(&ranges)?;
        if probs.len() != size {
            return Err(Error::InvalidTable(format!(
                "{} probabilities for {size} configurations",
                probs.len()
            )));
        }
        if probs.iter().any(|p| p.is_negative()) {
            return Err(Error::InvalidTable("negative probability".into()));
        }
        let total: BigRational = probs.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidTable(format!("total mass {total}, not 1")));
        }
        let denominator = probs
            .iter()
            .fold(BigInt::one(), |acc, p| num_integer::Integer::lcm(&acc, p.denom()));
        let weights = probs
            .iter()
            .map(|p| p.numer() * (&denominator / p.denom()))
            .collect();
        Ok(JointTable {
            ranges,
            weights,
            denominator,
        })
    }

    pub fn ranges(&self) -> &RangeSpec {
        &self.ranges
    }

    pub fn m(&self) -> usize {
        self.ranges.m()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Integer cell weights; `probability(n) = weights()[n] / denominator()`.
    pub fn weights(&self) -> &[BigInt] {
        &self.weights
    }

    pub fn denominator(&self) -> &BigInt {
        &self.denominator
    }

    pub fn probability(&self, index: usize) -> BigRational {
        BigRational::new(self.weights[index].clone(), self.denominator.clone())
    }

    pub fn probabilities(&self) -> Vec<BigRational> {
        (0..self.len()).map(|n| self.probability(n)).collect()
    }

    /// Configuration of the `index`-th cell, values 0-based.
    pub fn config(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.m()];
        for v in (0..self.m()).rev() {
            let r = self.ranges.0[v];
            out[v] = index % r;
            index /= r;
        }
        out
    }

    pub fn index_of(&self, config: &[usize]) -> usize {
        config
            .iter()
            .zip(&self.ranges.0)
            .fold(0, |acc, (&x, &r)| acc * r + x)
    }

    /// Unnormalized marginal weights over `vars` (ascending), mixed-radix.
    fn marginal(&self, vars: VertexSet) -> Vec<BigInt> {
        let size = self.ranges.product(vars) as usize;
        let mut out = vec![BigInt::zero(); size];
        let vars: Vec<usize> = vars.to_vec();
        for (n, w) in self.weights.iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            let cfg = self.config(n);
            let idx = vars
                .iter()
                .fold(0, |acc, &v| acc * self.ranges.r(v) + cfg[v - 1]);
            out[idx] += w;
        }
        out
    }

    /// `P(target = value | given)`, `None` when the conditioning event has
    /// probability zero.
    pub fn conditional(
        &self,
        target: (usize, usize),
        given: &[(usize, usize)],
    ) -> Result<Option<BigRational>> {
        let m = self.m();
        let check = |(v, x): (usize, usize)| -> Result<()> {
            if v == 0 || v > m {
                return Err(Error::VertexOutOfRange { vertex: v, m });
            }
            if x >= self.ranges.r(v) {
                return Err(Error::InvalidArgument(format!(
                    "value {x} outside the range of variable {v}"
                )));
            }
            Ok(())
        };
        check(target)?;
        for &g in given {
            check(g)?;
        }
        let mut num = BigInt::zero();
        let mut den = BigInt::zero();
        for (n, w) in self.weights.iter().enumerate() {
            let cfg = self.config(n);
            if given.iter().all(|&(v, x)| cfg[v - 1] == x) {
                den += w;
                if cfg[target.0 - 1] == target.1 {
                    num += w;
                }
            }
        }
        Ok((!den.is_zero()).then(|| BigRational::new(num, den)))
    }
}

fn joint_size(ranges: &RangeSpec) -> Result<usize> {
    let size = ranges.product(VertexSet::full(ranges.m()));
    if size > JOINT_CEILING as u64 {
        return Err(Error::Ceiling {
            what: "joint table size (product of ranges)",
            requested: size as usize,
            ceiling: JOINT_CEILING,
        });
    }
    Ok(size as usize)
}

/// Product of the conditional tables for every full configuration.
pub fn joint_from_model(model: &MultinomialModel) -> Result<JointTable> {
    let ranges = model.ranges.clone();
    let size = joint_size(&ranges)?;
    let mut probs = Vec::with_capacity(size);
    let mut cfg = vec![0usize; ranges.m()];
    for _ in 0..size {
        let mut p = BigRational::one();
        for t in &model.tables {
            let row = t
                .parents
                .iter()
                .fold(0, |acc, q| acc * ranges.r(q) + cfg[q - 1]);
            p *= &t.rows[row][cfg[t.vertex - 1]];
        }
        probs.push(p);
        for v in (0..ranges.m()).rev() {
            cfg[v] += 1;
            if cfg[v] < ranges.0[v] {
                break;
            }
            cfg[v] = 0;
        }
    }
    JointTable::from_probabilities(ranges, probs)
}

/// `n(a,b,s) n(s) == n(a,s) n(b,s)` for every configuration; conditioning
/// configurations of zero mass satisfy this vacuously.
pub fn exact_ci(joint: &JointTable, stmt: &CiStatement) -> Result<bool> {
    stmt.check_within(joint.m())?;
    let (i, j, s) = (stmt.i, stmt.j, stmt.s);
    let r = &joint.ranges;
    let (ri, rj) = (r.r(i), r.r(j));
    let rs = r.product(s) as usize;
    let full = joint.marginal(s.with(i).with(j));
    let with_i = joint.marginal(s.with(i));
    let with_j = joint.marginal(s.with(j));
    let only_s = joint.marginal(s);

    // Marginal indices are mixed-radix over ascending vertices; rebuild them
    // from (a, b, cs) where cs enumerates configurations of s.
    let s_vars = s.to_vec();
    let place = |vars: &[usize], assign: &dyn Fn(usize) -> usize| -> usize {
        vars.iter().fold(0, |acc, &v| acc * r.r(v) + assign(v))
    };
    let vars_full = s.with(i).with(j).to_vec();
    let vars_i = s.with(i).to_vec();
    let vars_j = s.with(j).to_vec();
    for (cs, ns) in only_s.iter().enumerate().take(rs) {
        let mut s_cfg = vec![0usize; joint.m() + 1];
        let mut rem = cs;
        for &v in s_vars.iter().rev() {
            s_cfg[v] = rem % r.r(v);
            rem /= r.r(v);
        }
        if ns.is_zero() {
            continue;
        }
        for a in 0..ri {
            let ia = place(&vars_i, &|v| if v == i { a } else { s_cfg[v] });
            for b in 0..rj {
                let jb = place(&vars_j, &|v| if v == j { b } else { s_cfg[v] });
                let ab = place(&vars_full, &|v| {
                    if v == i {
                        a
                    } else if v == j {
                        b
                    } else {
                        s_cfg[v]
                    }
                });
                if &full[ab] * ns != &with_i[ia] * &with_j[jb] {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Every singleton-pair statement that holds exactly in `joint`.
pub fn extract_independence_model(joint: &JointTable) -> Result<IndependenceModel> {
    let m = joint.m();
    if m > MASK_CEILING {
        return Err(Error::Ceiling {
            what: "independence extraction",
            requested: m,
            ceiling: MASK_CEILING,
        });
    }
    let all = VertexSet::full(m);
    let mut candidates = Vec::new();
    for i in 1..=m {
        for j in i + 1..=m {
            for s in all.without(i).without(j).subsets() {
                candidates.push(CiStatement::new_unchecked(i, j, s));
            }
        }
    }
    let holding: Vec<CiStatement> = candidates
        .into_par_iter()
        .map(|c| exact_ci(joint, &c).map(|ok| ok.then_some(c)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    IndependenceModel::from_statements(m, holding)
}

/// Local Markov check against `dag`: every non-descendant non-parent is
/// independent of each vertex given its parents, and the joint equals the
/// product of its own conditionals along `dag`.
pub fn local_markov_holds(joint: &JointTable, dag: &Dag) -> Result<bool> {
    if dag.m() != joint.m() {
        return Err(Error::DimensionMismatch {
            expected: dag.m(),
            found: joint.m(),
        });
    }
    for i in 1..=dag.m() {
        let pa = dag.parents(i);
        let nd = dag
            .vertices()
            .difference(dag.descendants(i))
            .without(i)
            .difference(pa);
        for j in nd {
            if !exact_ci(joint, &CiStatement::new_unchecked(i.min(j), i.max(j), pa))? {
                return Ok(false);
            }
        }
    }
    // Factorization: P(x) * prod P(pa_i) == prod P(x_i, pa_i) (weights scaled).
    let families: Vec<(Vec<BigInt>, VertexSet, Vec<BigInt>)> = (1..=dag.m())
        .map(|i| {
            let pa = dag.parents(i);
            (joint.marginal(pa.with(i)), pa, joint.marginal(pa))
        })
        .collect();
    let r = &joint.ranges;
    for (n, w) in joint.weights.iter().enumerate() {
        let cfg = joint.config(n);
        let at = |vars: VertexSet| vars.iter().fold(0, |acc, v| acc * r.r(v) + cfg[v - 1]);
        let mut lhs = w.clone();
        let mut rhs = BigInt::one();
        for (i, (fam, pa, par)) in families.iter().enumerate() {
            lhs *= &par[at(*pa)];
            rhs *= &fam[at(pa.with(i + 1))];
        }
        // Every weight is scaled by the common denominator D, so the
        // identity reads w * prod(par) == D * prod(fam).
        rhs *= &joint.denominator;
        if lhs != rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn parses_decimals_and_fractions() {
        assert_eq!(q("0.075"), BigRational::new(3.into(), 40.into()));
        assert_eq!(q("2/10"), BigRational::new(1.into(), 5.into()));
        assert_eq!(q("1"), BigRational::one());
        assert_eq!(q(".5"), BigRational::new(1.into(), 2.into()));
        assert_eq!(q("-0.5"), BigRational::new((-1).into(), 2.into()));
        for bad in ["", "abc", "1/0", "0.5.1", "1e3"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn param_count_small() {
        let r = RangeSpec::new(vec![2, 3, 2]).unwrap();
        let chain = Dag::new(3, [(1, 2), (2, 3)]).unwrap();
        let collider = Dag::new(3, [(1, 2), (3, 2)]).unwrap();
        assert_eq!(param_count(&chain, &r).unwrap(), 8);
        assert_eq!(param_count(&collider, &r).unwrap(), 10);
    }

    #[test]
    fn ranges_validated() {
        assert!(RangeSpec::new(vec![2, 1]).is_err());
        assert!(RangeSpec::new(vec![]).is_err());
        assert_eq!(RangeSpec::parse_list("2, 3,2").unwrap().as_slice(), &[2, 3, 2]);
    }

    #[test]
    fn single_fair_coin() {
        let g = Dag::empty(1).unwrap();
        let model = MultinomialModel::new(g, RangeSpec::binary(1), vec![vec![vec![q("1/2"), q("1/2")]]]).unwrap();
        let joint = joint_from_model(&model).unwrap();
        assert_eq!(joint.probabilities(), vec![q("1/2"), q("1/2")]);
    }

    #[test]
    fn rejects_bad_rows() {
        let g = Dag::empty(1).unwrap();
        let r = RangeSpec::binary(1);
        assert!(MultinomialModel::new(g.clone(), r.clone(), vec![vec![vec![q("0.6"), q("0.6")]]]).is_err());
        assert!(MultinomialModel::new(g.clone(), r.clone(), vec![vec![vec![q("1")]]]).is_err());
        assert!(MultinomialModel::new(g, r, vec![vec![vec![q("3/2"), q("-1/2")]]]).is_err());
    }

    #[test]
    fn point_mass_makes_everything_independent() {
        let r = RangeSpec::binary(3);
        let mut probs = vec![BigRational::zero(); 8];
        probs[5] = BigRational::one();
        let joint = JointTable::from_probabilities(r, probs).unwrap();
        assert_eq!(extract_independence_model(&joint).unwrap().len(), 6);
    }

    #[test]
    fn joint_ceiling() {
        let r = RangeSpec::new(vec![2; 13]).unwrap();
        let g = Dag::empty(13).unwrap();
        let rows = vec![vec![vec![q("1/2"), q("1/2")]]; 13];
        let model = MultinomialModel::new(g, r, rows).unwrap();
        assert!(matches!(joint_from_model(&model), Err(Error::Ceiling { .. })));
    }
}
