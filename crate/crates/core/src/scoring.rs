//! Negative edge count, exact sampling from joint tables, and BIC with
//! multinomial maximum-likelihood estimates.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{independence_model_of_dag, Dag};
use crate::independence::IndependenceModel;
use crate::multinomial::{extract_independence_model, joint_from_model, param_count, JointTable, MultinomialModel, RangeSpec};
use crate::vset::VertexSet;

/// Identity of the sampling generator; part of the reproducibility contract.
pub const GENERATOR_ID: &str = "chacha8-v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub source: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    ranges: RangeSpec,
    /// Row-major, `m` values per row.
    values: Vec<u16>,
    provenance: Option<Provenance>,
}

impl Dataset {
    pub fn new(ranges: RangeSpec, rows: Vec<Vec<usize>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("dataset needs at least one row".into()));
        }
        let m = ranges.m();
        let mut values = Vec::with_capacity(rows.len() * m);
        for (n, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: row.len(),
                });
            }
            for (v, &x) in row.iter().enumerate() {
                if x >= ranges.r(v + 1) {
                    return Err(Error::InvalidArgument(format!(
                        "row {n}: value {x} outside the range of variable {}",
                        v + 1
                    )));
                }
                values.push(x as u16);
            }
        }
        Ok(Dataset {
            ranges,
            values,
            provenance: None,
        })
    }

    pub fn with_provenance(mut self, source: impl Into<String>, seed: u64) -> Self {
        self.provenance = Some(Provenance {
            source: source.into(),
            seed,
        });
        self
    }

    pub fn ranges(&self) -> &RangeSpec {
        &self.ranges
    }

    pub fn m(&self) -> usize {
        self.ranges.m()
    }

    pub fn n(&self) -> usize {
        self.values.len() / self.m()
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn row(&self, n: usize) -> &[u16] {
        let m = self.m();
        &self.values[n * m..(n + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u16]> {
        self.values.chunks(self.m())
    }

    /// Counts of each observed configuration of `vars`, keyed mixed-radix.
    fn counts(&self, vars: VertexSet) -> HashMap<u64, u64> {
        let vars = vars.to_vec();
        let mut out = HashMap::new();
        for row in self.rows() {
            let key = vars
                .iter()
                .fold(0u64, |acc, &v| acc * self.ranges.r(v) as u64 + row[v - 1] as u64);
            *out.entry(key).or_insert(0) += 1;
        }
        out
    }

    /// `ranges: [..]`, `n: <n>`, optional `source: <id> <seed>`, then rows.
    pub fn to_text(&self) -> String {
        let r: Vec<String> = self.ranges.as_slice().iter().map(|x| x.to_string()).collect();
        let mut out = format!("ranges: [{}]\nn: {}\n", r.join(", "), self.n());
        if let Some(p) = &self.provenance {
            writeln!(out, "source: {} {}", p.source, p.seed).unwrap();
        }
        for row in self.rows() {
            let vals: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            out.push_str(&vals.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        let (line, header) = lines.next().ok_or_else(|| Error::parse(1, "empty input"))?;
        let list = header
            .strip_prefix("ranges:")
            .map(str::trim)
            .and_then(|l| l.strip_prefix('['))
            .and_then(|l| l.strip_suffix(']'))
            .ok_or_else(|| Error::parse(line, "expected `ranges: [r1, r2, ...]`"))?;
        let ranges = RangeSpec::parse_list(list).map_err(|e| Error::parse(line, e.to_string()))?;
        let (line, n_line) = lines.next().ok_or_else(|| Error::parse(line + 1, "missing `n:` line"))?;
        let n: usize = n_line
            .strip_prefix("n:")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::parse(line, "expected `n: <count>`"))?;
        let mut provenance = None;
        let mut rows = Vec::with_capacity(n);
        for (line, l) in lines {
            if let Some(src) = l.strip_prefix("source:") {
                let mut parts = src.split_whitespace();
                let (Some(source), Some(seed), None) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(Error::parse(line, "expected `source: <id> <seed>`"));
                };
                let seed = seed.parse().map_err(|_| Error::parse(line, "bad seed"))?;
                provenance = Some(Provenance {
                    source: source.to_string(),
                    seed,
                });
                continue;
            }
            let row = l
                .split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|_| Error::parse(line, format!("bad value `{t}`"))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != ranges.m() {
                return Err(Error::parse(line, format!("expected {} values", ranges.m())));
            }
            for (v, &x) in row.iter().enumerate() {
                if x >= ranges.r(v + 1) {
                    return Err(Error::parse(line, format!("value {x} outside range of variable {}", v + 1)));
                }
            }
            rows.push(row);
        }
        if rows.len() != n {
            return Err(Error::parse(0, format!("header says n = {n}, found {} rows", rows.len())));
        }
        let mut data = Dataset::new(ranges, rows).map_err(|e| Error::parse(0, e.to_string()))?;
        data.provenance = provenance;
        Ok(data)
    }
}

/// Uniform integer in `[0, bound)` by rejection on whole 32-bit digits.
fn uniform_below(bound: &BigUint, rng: &mut ChaCha8Rng) -> BigUint {
    let bits = bound.bits();
    let digits = bits.div_ceil(32) as usize;
    let top_mask = if bits.is_multiple_of(32) { u32::MAX } else { (1u32 << (bits % 32)) - 1 };
    loop {
        let mut d: Vec<u32> = (0..digits).map(|_| rng.random()).collect();
        if let Some(last) = d.last_mut() {
            *last &= top_mask;
        }
        let x = BigUint::new(d);
        if &x < bound {
            return x;
        }
    }
}

enum Cdf {
    Small { cumulative: Vec<u64>, total: u64 },
    Big { cumulative: Vec<BigUint>, total: BigUint },
}

impl Cdf {
    fn new(joint: &JointTable) -> Self {
        let to_uint = |w: &BigInt| w.to_biguint().expect("weights are non-negative");
        let mut acc = BigUint::from(0u32);
        let cumulative: Vec<BigUint> = joint
            .weights()
            .iter()
            .map(|w| {
                acc += to_uint(w);
                acc.clone()
            })
            .collect();
        let total = to_uint(joint.denominator());
        match (total.to_u64(), cumulative.iter().map(|c| c.to_u64()).collect::<Option<Vec<_>>>()) {
            (Some(total), Some(cumulative)) => Cdf::Small { cumulative, total },
            _ => Cdf::Big { cumulative, total },
        }
    }

    /// First cell whose cumulative weight exceeds a uniform draw.
    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        match self {
            Cdf::Small { cumulative, total } => {
                let u = rng.random_range(0..*total);
                cumulative.partition_point(|&c| c <= u)
            }
            Cdf::Big { cumulative, total } => {
                let u = uniform_below(total, rng);
                cumulative.partition_point(|c| *c <= u)
            }
        }
    }
}

/// `n` i.i.d. rows by exact inverse CDF over the joint's integer weights.
pub fn sample(joint: &JointTable, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    let cdf = Cdf::new(joint);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = joint.m();
    let mut values = Vec::with_capacity(n * m);
    for _ in 0..n {
        let cell = cdf.draw(&mut rng);
        values.extend(joint.config(cell).into_iter().map(|x| x as u16));
    }
    Ok(Dataset {
        ranges: joint.ranges().clone(),
        values,
        provenance: Some(Provenance {
            source: "joint".into(),
            seed,
        }),
    })
}

/// Population score: `-|E(G)|` for Markovian DAGs, `-inf` otherwise.
pub fn nec(g: &Dag, p: &IndependenceModel) -> Result<f64> {
    if g.m() != p.m() {
        return Err(Error::DimensionMismatch {
            expected: g.m(),
            found: p.m(),
        });
    }
    let markovian = independence_model_of_dag(g).iter().all(|ci| p.contains(ci));
    Ok(if markovian {
        -(g.edge_count() as f64)
    } else {
        f64::NEG_INFINITY
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "criterion", rename_all = "snake_case")]
pub enum Criterion {
    Nec,
    Bic { c: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexScore {
    pub vertex: usize,
    pub log_likelihood: f64,
    pub parameters: u64,
    pub penalty: f64,
    pub score: f64,
    /// Parent configurations never observed; they add nothing to the likelihood.
    pub empty_parent_configs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub dag: Dag,
    #[serde(flatten)]
    pub criterion: Criterion,
    pub value: f64,
    pub vertices: Vec<VertexScore>,
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.criterion {
            Criterion::Nec => writeln!(f, "NEC({}) = {}", self.dag.edge_list(), fmt_score(self.value))?,
            Criterion::Bic { c } => {
                writeln!(f, "BIC({}; c={c}) = {:.6}", self.dag.edge_list(), self.value)?;
                for v in &self.vertices {
                    writeln!(
                        f,
                        "  X{}: loglik {:.6}, params {}, penalty {:.6}, score {:.6}{}",
                        v.vertex,
                        v.log_likelihood,
                        v.parameters,
                        v.penalty,
                        v.score,
                        if v.empty_parent_configs > 0 {
                            format!(", {} unobserved parent configs", v.empty_parent_configs)
                        } else {
                            String::new()
                        }
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// `-inf` prints as such; finite NEC values print as integers.
pub fn fmt_score(x: f64) -> String {
    if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x.fract() == 0.0 {
        format!("{x:.0}")
    } else {
        format!("{x:.6}")
    }
}

pub fn nec_report(g: &Dag, p: &IndependenceModel) -> Result<ScoreReport> {
    Ok(ScoreReport {
        dag: g.clone(),
        criterion: Criterion::Nec,
        value: nec(g, p)?,
        vertices: Vec::new(),
    })
}

fn check_data(g: &Dag, data: &Dataset) -> Result<()> {
    if g.m() != data.m() {
        return Err(Error::DimensionMismatch {
            expected: g.m(),
            found: data.m(),
        });
    }
    Ok(())
}

/// `sum N log N` over observed configurations of `vars`.
fn entropy_term(data: &Dataset, vars: VertexSet) -> f64 {
    if vars.is_empty() {
        let n = data.n() as f64;
        return n * n.ln();
    }
    let mut counts: Vec<u64> = data.counts(vars).into_values().collect();
    counts.sort_unstable();
    counts.iter().map(|&c| c as f64 * (c as f64).ln()).sum()
}

/// `2 l - c k log n` per vertex; the total is the vertex sum.
pub fn bic(g: &Dag, data: &Dataset, c: f64) -> Result<ScoreReport> {
    check_data(g, data)?;
    if c.is_nan() || c <= 0.0 {
        return Err(Error::InvalidArgument(format!("penalty multiplier must be positive, got {c}")));
    }
    let ln_n = (data.n() as f64).ln();
    let ranges = data.ranges();
    let vertices: Vec<VertexScore> = (1..=g.m())
        .map(|v| {
            let pa = g.parents(v);
            let ll = entropy_term(data, pa.with(v)) - entropy_term(data, pa);
            let configs = ranges.product(pa);
            let parameters = (ranges.r(v) as u64 - 1) * configs;
            let observed = if pa.is_empty() { 1 } else { data.counts(pa).len() as u64 };
            let penalty = c * parameters as f64 * ln_n;
            VertexScore {
                vertex: v,
                log_likelihood: ll,
                parameters,
                penalty,
                score: 2.0 * ll - penalty,
                empty_parent_configs: configs - observed,
            }
        })
        .collect();
    Ok(ScoreReport {
        dag: g.clone(),
        criterion: Criterion::Bic { c },
        value: vertices.iter().map(|v| v.score).sum(),
        vertices,
    })
}

/// Maximized log-likelihood as a signed sum of marginal terms with the
/// family/parent cancellations applied first, so Markov-equivalent DAGs
/// evaluate identical terms in identical order.
pub fn log_likelihood(g: &Dag, data: &Dataset) -> Result<f64> {
    check_data(g, data)?;
    let mut terms: BTreeMap<u32, i64> = BTreeMap::new();
    for v in 1..=g.m() {
        let pa = g.parents(v);
        *terms.entry(pa.with(v).bits()).or_default() += 1;
        *terms.entry(pa.bits()).or_default() -= 1;
    }
    Ok(terms
        .into_iter()
        .filter(|&(_, k)| k != 0)
        .map(|(s, k)| k as f64 * entropy_term(data, VertexSet::from_bits(s)))
        .sum())
}

/// One row of the consistency table for a sample size.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeRow {
    pub n: usize,
    pub seeds: usize,
    /// Seeds where BIC ranks every Markovian DAG above every non-Markovian one.
    pub bic_markov_clause: usize,
    /// Seeds where BIC ranks every Markovian DAG above Markovian DAGs with more parameters.
    pub bic_parameter_clause: usize,
    /// `(g, h, seeds with BIC(g) > BIC(h))` for every ordered pair.
    pub bic_prefers: Vec<(usize, usize, usize)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub dags: Vec<Dag>,
    pub markovian: Vec<bool>,
    pub parameters: Vec<u64>,
    pub nec: Vec<f64>,
    /// NEC honours the parameter clause on every applicable pair.
    pub nec_parameter_clause: bool,
    pub rows: Vec<ProbeRow>,
}

impl ProbeReport {
    fn pair_count(row: &ProbeRow, g: usize, h: usize) -> usize {
        row.bic_prefers
            .iter()
            .find(|&&(a, b, _)| (a, b) == (g, h))
            .map_or(0, |t| t.2)
    }

    /// Seeds at `row` where BIC prefers `g` to `h`.
    pub fn bic_wins(&self, row: usize, g: usize, h: usize) -> usize {
        Self::pair_count(&self.rows[row], g, h)
    }

    /// NEC strictly prefers `g` while a majority of seeds has BIC preferring `h`.
    pub fn dilemma(&self, row: usize, g: usize, h: usize) -> bool {
        let r = &self.rows[row];
        self.nec[g] > self.nec[h] && 2 * Self::pair_count(r, h, g) > r.seeds
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (idx, g) in self.dags.iter().enumerate() {
            writeln!(
                out,
                "G{idx}: {}  markovian={} params={} nec={}",
                g.edge_list(),
                self.markovian[idx],
                self.parameters[idx],
                fmt_score(self.nec[idx])
            )
            .unwrap();
        }
        writeln!(out, "nec parameter clause: {}", if self.nec_parameter_clause { "holds" } else { "violated" }).unwrap();
        for r in &self.rows {
            writeln!(
                out,
                "n={}: markov clause {}/{}, parameter clause {}/{}",
                r.n, r.bic_markov_clause, r.seeds, r.bic_parameter_clause, r.seeds
            )
            .unwrap();
            for &(g, h, k) in &r.bic_prefers {
                writeln!(out, "  BIC(G{g}) > BIC(G{h}) in {k}/{}", r.seeds).unwrap();
            }
        }
        out
    }
}

/// Tabulates, per sample size, how often BIC honours the two clauses of a
/// consistent scoring criterion on data drawn from `model`.
pub fn consistency_probe(gs: &[Dag], model: &MultinomialModel, n_schedule: &[usize], seeds: &[u64]) -> Result<ProbeReport> {
    let m = model.dag().m();
    if let Some(g) = gs.iter().find(|g| g.m() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: g.m(),
        });
    }
    let joint = joint_from_model(model)?;
    let p = extract_independence_model(&joint)?;
    let markovian: Vec<bool> = gs.iter().map(|g| nec(g, &p).map(f64::is_finite)).collect::<Result<_>>()?;
    let parameters: Vec<u64> = gs.iter().map(|g| param_count(g, model.ranges())).collect::<Result<_>>()?;
    let necs: Vec<f64> = gs.iter().map(|g| nec(g, &p)).collect::<Result<_>>()?;
    let k = gs.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (0..k).filter(move |&b| b != a).map(move |b| (a, b))).collect();
    let markov_pairs: Vec<(usize, usize)> = pairs.iter().copied().filter(|&(a, b)| markovian[a] && !markovian[b]).collect();
    let param_pairs: Vec<(usize, usize)> = pairs
        .iter()
        .copied()
        .filter(|&(a, b)| markovian[a] && markovian[b] && parameters[a] < parameters[b])
        .collect();
    let nec_parameter_clause = param_pairs.iter().all(|&(a, b)| necs[a] > necs[b]);

    let mut rows = Vec::new();
    for &n in n_schedule {
        let scores: Vec<Vec<f64>> = seeds
            .par_iter()
            .map(|&seed| {
                let data = sample(&joint, n, seed)?;
                gs.iter().map(|g| bic(g, &data, 1.0).map(|r| r.value)).collect()
            })
            .collect::<Result<_>>()?;
        let holds = |set: &[(usize, usize)]| scores.iter().filter(|s| set.iter().all(|&(a, b)| s[a] > s[b])).count();
        rows.push(ProbeRow {
            n,
            seeds: seeds.len(),
            bic_markov_clause: holds(&markov_pairs),
            bic_parameter_clause: holds(&param_pairs),
            bic_prefers: pairs
                .iter()
                .map(|&(a, b)| (a, b, scores.iter().filter(|s| s[a] > s[b]).count()))
                .collect(),
        });
    }
    Ok(ProbeReport {
        dags: gs.to_vec(),
        markovian,
        parameters,
        nec: necs,
        nec_parameter_clause,
        rows,
    })
}
