//! Built-in worked examples stored as data, each with a list of facts that
//! are recomputed from raw inputs (theta-tables or explicit models).

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{independence_model_of_dag, markov_equivalent, Dag};
use crate::imset::param_count_via_imset;
use crate::independence::{closure, model_subset, unfaithful_set, AxiomSet, CiStatement, IndependenceModel};
use crate::multinomial::{
    extract_independence_model, joint_from_model, param_count, parse_rational, JointTable, MultinomialModel,
    RangeSpec,
};
use crate::razor::{
    check_witness, classify, CellStatus, Evaluation, HierarchyMatrix, HierarchyModel, Membership, RazorId,
};
use crate::scoring::nec;

const SOURCES: [&str; 9] = [
    include_str!("../catalog/FIG1.json"),
    include_str!("../catalog/EX_resF.json"),
    include_str!("../catalog/EX_FrUFr.json"),
    include_str!("../catalog/E1.json"),
    include_str!("../catalog/E2.json"),
    include_str!("../catalog/E3.json"),
    include_str!("../catalog/E4.json"),
    include_str!("../catalog/EX_CMC_SGS.json"),
    include_str!("../catalog/EX_oriF_triF.json"),
];

const EXPECTED_MATRIX: &str = include_str!("../catalog/expected_matrix.json");

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    id: String,
    aliases: Vec<String>,
    summary: String,
    m: usize,
    #[serde(default)]
    ranges: Option<Vec<usize>>,
    dags: Vec<RawDag>,
    model: RawModel,
    facts: Vec<Fact>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDag {
    name: String,
    edges: Vec<(usize, usize)>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawModel {
    /// Theta-tables on a named DAG; the model is extracted from the joint.
    Multinomial { dag: String, cpt: Vec<Vec<Vec<String>>> },
    /// `I(dag)` together with extra statements.
    DagPlus { dag: String, extra: Vec<String> },
    Explicit { cis: Vec<String> },
}

#[derive(Debug, Clone)]
pub enum ModelSource {
    Multinomial(MultinomialModel),
    Explicit(IndependenceModel),
}

/// One checkable claim about an entry.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct Fact {
    #[serde(flatten)]
    pub body: FactBody,
    /// Which sub-claim of the example this fact backs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FactBody {
    Membership {
        dag: String,
        razor: RazorId,
        member: bool,
    },
    ClassEmpty {
        razor: RazorId,
        empty: bool,
    },
    ClassEquals {
        razor: RazorId,
        dags: Vec<String>,
    },
    ParamCount {
        dag: String,
        value: u64,
        /// A different figure printed alongside the example, kept for the report.
        #[serde(default)]
        reported_value: Option<u64>,
    },
    UnfaithfulSet {
        dag: String,
        cis: Vec<String>,
    },
    /// The model equals `I(dag) ∪ cis` (or `cis` alone).
    IndependenceModel {
        #[serde(default)]
        dag: Option<String>,
        cis: Vec<String>,
        #[serde(default)]
        size: Option<usize>,
    },
    /// `I(dag)` is exactly `cis`.
    DagModel {
        dag: String,
        cis: Vec<String>,
    },
    Conditional {
        target: (usize, usize),
        given: Vec<(usize, usize)>,
        value: String,
    },
    MarkovEquivalent {
        a: String,
        b: String,
        value: bool,
    },
    /// The graphoid closure of `I(dag) ∪ premises` contains `derived`.
    GraphoidDerivation {
        dag: String,
        premises: Vec<String>,
        derived: Vec<String>,
    },
    Nec {
        dag: String,
        value: f64,
    },
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub id: String,
    pub aliases: Vec<String>,
    pub summary: String,
    pub m: usize,
    pub ranges: Option<RangeSpec>,
    pub dags: Vec<(String, Dag)>,
    pub model: ModelSource,
    pub facts: Vec<Fact>,
}

fn parse_cis(cis: &[String]) -> Result<Vec<CiStatement>> {
    cis.iter().map(|c| c.parse()).collect()
}

impl CatalogEntry {
    fn from_raw(raw: RawEntry) -> Result<Self> {
        let ranges = raw.ranges.map(RangeSpec::new).transpose()?;
        let dags: Vec<(String, Dag)> = raw
            .dags
            .into_iter()
            .map(|d| Dag::new(raw.m, d.edges).map(|g| (d.name, g)))
            .collect::<Result<_>>()?;
        let find = |name: &str| -> Result<Dag> {
            dags.iter()
                .find(|(n, _)| n == name)
                .map(|(_, g)| g.clone())
                .ok_or_else(|| Error::InvalidArgument(format!("{}: no DAG named `{name}`", raw.id)))
        };
        let model = match raw.model {
            RawModel::Multinomial { dag, cpt } => {
                let ranges = ranges
                    .clone()
                    .ok_or_else(|| Error::InvalidArgument(format!("{}: theta-tables need ranges", raw.id)))?;
                let rows = cpt
                    .iter()
                    .map(|t| {
                        t.iter()
                            .map(|r| r.iter().map(|x| parse_rational(x)).collect::<Result<Vec<_>>>())
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                ModelSource::Multinomial(MultinomialModel::new(find(&dag)?, ranges, rows)?)
            }
            RawModel::DagPlus { dag, extra } => {
                let mut p = independence_model_of_dag(&find(&dag)?);
                for ci in parse_cis(&extra)? {
                    p.insert(ci)?;
                }
                ModelSource::Explicit(p)
            }
            RawModel::Explicit { cis } => {
                ModelSource::Explicit(IndependenceModel::from_statements(raw.m, parse_cis(&cis)?)?)
            }
        };
        Ok(CatalogEntry {
            id: raw.id,
            aliases: raw.aliases,
            summary: raw.summary,
            m: raw.m,
            ranges,
            dags,
            model,
            facts: raw.facts,
        })
    }

    pub fn dag(&self, name: &str) -> Result<&Dag> {
        self.dags
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, g)| g)
            .ok_or_else(|| Error::InvalidArgument(format!("{}: no DAG named `{name}`", self.id)))
    }

    pub fn joint(&self) -> Option<Result<JointTable>> {
        match &self.model {
            ModelSource::Multinomial(mm) => Some(joint_from_model(mm)),
            ModelSource::Explicit(_) => None,
        }
    }

    /// Extracted from the joint for theta-table entries, as stored otherwise.
    pub fn independence_model(&self) -> Result<IndependenceModel> {
        match &self.model {
            ModelSource::Multinomial(mm) => extract_independence_model(&joint_from_model(mm)?),
            ModelSource::Explicit(p) => Ok(p.clone()),
        }
    }

    pub fn hierarchy_model(&self) -> Result<HierarchyModel> {
        Ok(HierarchyModel {
            id: self.id.clone(),
            model: self.independence_model()?,
            ranges: self.ranges.clone(),
            named: self.dags.clone(),
        })
    }

    pub fn matches(&self, id: &str) -> bool {
        self.id.eq_ignore_ascii_case(id) || self.aliases.iter().any(|a| a.eq_ignore_ascii_case(id))
    }

    /// Recomputes every fact; each outcome records expected and observed values.
    pub fn verify(&self, ceiling: usize) -> Result<Vec<FactOutcome>> {
        let p = self.independence_model()?;
        let joint = self.joint().transpose()?;
        let eval = if self.m <= ceiling {
            Some(Evaluation::new(&p, self.ranges.as_ref(), ceiling)?)
        } else {
            None
        };
        let ranges = self.ranges.as_ref();
        let need_ranges = || ranges.ok_or(Error::MissingRanges("parameter count"));
        let cis_text = |v: &[CiStatement]| {
            let mut v = v.to_vec();
            v.sort();
            v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
        };
        let dag_names = |gs: &[Dag]| {
            gs.iter()
                .map(|g| {
                    self.dags
                        .iter()
                        .find(|(_, d)| d == g)
                        .map_or_else(|| g.edge_list(), |(n, _)| n.clone())
                })
                .collect::<Vec<_>>()
        };
        let mut out = Vec::new();
        for fact in &self.facts {
            let (description, expected, observed) = match &fact.body {
                FactBody::Membership { dag, razor, member } => {
                    let g = self.dag(dag)?;
                    let verdict = match &eval {
                        Some(e) => e.verdict(g)?,
                        None => classify(g, &p, ranges, ceiling)?,
                    };
                    let observed = match verdict.get(*razor) {
                        Membership::In => "member".to_string(),
                        Membership::Out { witness } => {
                            if check_witness(g, &p, ranges, *razor, witness)? {
                                format!("not a member ({witness})")
                            } else {
                                format!("not a member, witness rejected ({witness})")
                            }
                        }
                        Membership::Undetermined { reason } => format!("undetermined ({reason})"),
                    };
                    let expected = if *member { "member" } else { "not a member" };
                    let ok = match verdict.get(*razor) {
                        Membership::In => *member,
                        Membership::Out { .. } => !*member && !observed.contains("witness rejected"),
                        Membership::Undetermined { .. } => false,
                    };
                    out.push(FactOutcome::new(
                        format!("{dag} in {razor}"),
                        expected.into(),
                        observed,
                        ok,
                        fact,
                    ));
                    continue;
                }
                FactBody::ClassEmpty { razor, empty } => {
                    let eval = eval.as_ref().ok_or(Error::Ceiling {
                        what: "class enumeration",
                        requested: self.m,
                        ceiling,
                    })?;
                    let size = eval.class(*razor)?.len();
                    (
                        format!("{razor} class empty"),
                        empty.to_string(),
                        format!("{} ({size} DAGs)", size == 0),
                    )
                }
                FactBody::ClassEquals { razor, dags } => {
                    let eval = eval.as_ref().ok_or(Error::Ceiling {
                        what: "class enumeration",
                        requested: self.m,
                        ceiling,
                    })?;
                    let mut want = dags.clone();
                    want.sort();
                    let mut got = dag_names(&eval.class(*razor)?);
                    got.sort();
                    (format!("{razor} class"), want.join(", "), got.join(", "))
                }
                FactBody::ParamCount {
                    dag,
                    value,
                    reported_value,
                } => {
                    let g = self.dag(dag)?;
                    let r = need_ranges()?;
                    let direct = param_count(g, r)?;
                    let via_imset = param_count_via_imset(g, r)?;
                    let observed = if direct == via_imset {
                        direct.to_string()
                    } else {
                        format!("{direct} (imset route gives {via_imset})")
                    };
                    let mut expected = value.to_string();
                    if let Some(rv) = reported_value {
                        expected.push_str(&format!(" (printed as {rv})"));
                    }
                    let ok = direct == *value && via_imset == *value;
                    out.push(FactOutcome::new(
                        format!("|param({dag})| under {r}"),
                        expected,
                        observed,
                        ok,
                        fact,
                    ));
                    continue;
                }
                FactBody::UnfaithfulSet { dag, cis } => {
                    let g = self.dag(dag)?;
                    let got: Vec<CiStatement> = unfaithful_set(g, &p)?.iter().copied().collect();
                    (format!("unfaithful statements of {dag}"), cis_text(&parse_cis(cis)?), cis_text(&got))
                }
                FactBody::IndependenceModel { dag, cis, size } => {
                    let mut want = match dag {
                        Some(d) => independence_model_of_dag(self.dag(d)?),
                        None => IndependenceModel::new(self.m),
                    };
                    for ci in parse_cis(cis)? {
                        want.insert(ci)?;
                    }
                    let got: Vec<CiStatement> = p.iter().copied().collect();
                    let mut expected = cis_text(&want.iter().copied().collect::<Vec<_>>());
                    let mut observed = cis_text(&got);
                    if let Some(n) = size {
                        expected = format!("{n} statements: {expected}");
                        observed = format!("{} statements: {observed}", got.len());
                    }
                    ("independence model".into(), expected, observed)
                }
                FactBody::DagModel { dag, cis } => {
                    let got: Vec<CiStatement> = independence_model_of_dag(self.dag(dag)?).iter().copied().collect();
                    (format!("I({dag})"), cis_text(&parse_cis(cis)?), cis_text(&got))
                }
                FactBody::Conditional { target, given, value } => {
                    let joint = joint
                        .as_ref()
                        .ok_or_else(|| Error::InvalidArgument(format!("{}: no theta-tables", self.id)))?;
                    let want = parse_rational(value)?;
                    let got = joint.conditional(*target, given)?;
                    let given_text: Vec<String> = given.iter().map(|(v, x)| format!("X{v}={x}")).collect();
                    (
                        format!("P(X{}={} | {})", target.0, target.1, given_text.join(", ")),
                        want.to_string(),
                        got.map_or_else(|| "undefined".into(), |q| q.to_string()),
                    )
                }
                FactBody::MarkovEquivalent { a, b, value } => (
                    format!("{a} and {b} Markov equivalent"),
                    value.to_string(),
                    markov_equivalent(self.dag(a)?, self.dag(b)?)?.to_string(),
                ),
                FactBody::GraphoidDerivation { dag, premises, derived } => {
                    let mut base = independence_model_of_dag(self.dag(dag)?);
                    for ci in parse_cis(premises)? {
                        base.insert(ci)?;
                    }
                    let closed = closure(&base, AxiomSet::GRAPHOID)?.project();
                    let derived = parse_cis(derived)?;
                    let want = IndependenceModel::from_statements(self.m, derived.iter().copied())?;
                    let missing: Vec<CiStatement> =
                        derived.iter().filter(|c| !closed.contains(c)).copied().collect();
                    let ok = model_subset(&want, &closed)?;
                    out.push(FactOutcome::new(
                        format!("graphoid closure of I({dag}) with {}", premises.join(", ")),
                        format!("contains {}", cis_text(&derived)),
                        if missing.is_empty() {
                            format!("contains all {}", derived.len())
                        } else {
                            format!("missing {}", cis_text(&missing))
                        },
                        ok,
                        fact,
                    ));
                    continue;
                }
                FactBody::Nec { dag, value } => {
                    let got = nec(self.dag(dag)?, &p)?;
                    (
                        format!("NEC({dag})"),
                        crate::scoring::fmt_score(*value),
                        crate::scoring::fmt_score(got),
                    )
                }
            };
            let ok = expected == observed
                || matches!(&fact.body, FactBody::ClassEmpty { empty, .. } if observed.starts_with(&empty.to_string()));
            out.push(FactOutcome::new(description, expected, observed, ok, fact));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FactOutcome {
    pub description: String,
    pub expected: String,
    pub observed: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub claim: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl FactOutcome {
    fn new(description: String, expected: String, observed: String, passed: bool, fact: &Fact) -> Self {
        FactOutcome {
            description,
            expected,
            observed,
            passed,
            claim: fact.claim.clone(),
            note: fact.note.clone(),
        }
    }
}

impl fmt::Display for FactOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: ", self.description)?;
        if self.passed {
            write!(f, "{}", self.observed)?;
        } else {
            write!(f, "expected {}, observed {}", self.expected, self.observed)?;
        }
        if let Some(c) = &self.claim {
            write!(f, " [{c}]")?;
        }
        if let Some(n) = &self.note {
            write!(f, "\n     note: {n}")?;
        }
        Ok(())
    }
}

static CATALOG: OnceLock<Vec<CatalogEntry>> = OnceLock::new();

/// All built-in entries. The data ships with the crate, so a parse failure
/// is a build defect and panics.
pub fn catalog() -> &'static [CatalogEntry] {
    CATALOG.get_or_init(|| {
        SOURCES
            .iter()
            .map(|src| {
                let raw: RawEntry = serde_json::from_str(src).expect("catalog entry parses");
                CatalogEntry::from_raw(raw).expect("catalog entry is well formed")
            })
            .collect()
    })
}

pub fn ids() -> Vec<String> {
    catalog()
        .iter()
        .map(|e| {
            if e.aliases.is_empty() {
                e.id.clone()
            } else {
                format!("{} ({})", e.id, e.aliases.join(", "))
            }
        })
        .collect()
}

/// Looks up an entry by id or alias, case-insensitively.
pub fn lookup(id: &str) -> Result<&'static CatalogEntry> {
    catalog().iter().find(|e| e.matches(id)).ok_or_else(|| Error::UnknownExample {
        id: id.to_string(),
        known: ids().join(", "),
    })
}

/// Resolves `catalog:<id>:<dag>` references.
pub fn lookup_dag(reference: &str) -> Result<(&'static CatalogEntry, &'static Dag)> {
    let rest = reference
        .strip_prefix("catalog:")
        .ok_or_else(|| Error::InvalidArgument(format!("`{reference}` is not a catalog reference")))?;
    let (id, dag) = rest
        .split_once(':')
        .ok_or_else(|| Error::InvalidArgument(format!("expected `catalog:<id>:<dag>`, got `{reference}`")))?;
    let entry = lookup(id)?;
    Ok((entry, entry.dag(dag)?))
}

pub fn hierarchy_models() -> Result<Vec<HierarchyModel>> {
    catalog().iter().map(CatalogEntry::hierarchy_model).collect()
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedCell {
    pub row: RazorId,
    pub col: RazorId,
    pub status: ExpectedStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<String>,
    /// Name of the worked example the cell cites.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part: Option<String>,
    /// The citation covers this cell only by enlarging the row class or
    /// shrinking the column class.
    #[serde(default)]
    pub by_monotonicity: bool,
    /// Both razors are structural (no parametric assumption).
    pub structural: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedStatus {
    Identity,
    Subset,
    Counterexample,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedMatrix {
    pub order: Vec<RazorId>,
    pub cells: Vec<ExpectedCell>,
}

static EXPECTED: OnceLock<ExpectedMatrix> = OnceLock::new();

pub fn expected_matrix() -> &'static ExpectedMatrix {
    EXPECTED.get_or_init(|| serde_json::from_str(EXPECTED_MATRIX).expect("expected matrix parses"))
}

#[derive(Debug, Clone, Serialize)]
pub struct CellDiff {
    pub row: RazorId,
    pub col: RazorId,
    pub expected: String,
    pub observed: String,
}

impl fmt::Display for CellDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: expected {}, observed {}", self.row, self.col, self.expected, self.observed)
    }
}

/// Cells where `computed` disagrees with the stored matrix. A counterexample
/// cell agrees only when the cited entry itself supplies a witness.
pub fn diff_against_expected(computed: &HierarchyMatrix, expected: &ExpectedMatrix) -> Vec<CellDiff> {
    let mut diffs = Vec::new();
    for cell in &expected.cells {
        let got = computed.cell(cell.row, cell.col);
        let describe = |s: &CellStatus| match s {
            CellStatus::Identity => "identity".to_string(),
            CellStatus::Subset { models } => format!("subset over {models} models"),
            CellStatus::Counterexample { dag, model } => format!("counterexample {dag} in {model}"),
            CellStatus::NoEvidence => "no evidence".to_string(),
        };
        let (ok, expected_text) = match cell.status {
            ExpectedStatus::Identity => (got.status == CellStatus::Identity, "identity".to_string()),
            ExpectedStatus::Subset => (matches!(got.status, CellStatus::Subset { .. }), "subset".to_string()),
            ExpectedStatus::Counterexample => {
                let example = cell.example.as_deref().unwrap_or_default();
                let cited = lookup(example).map(|e| e.id.as_str()).unwrap_or(example);
                (
                    got.witnesses.iter().any(|(m, _)| m == cited),
                    format!("counterexample from {cited}"),
                )
            }
        };
        if !ok {
            diffs.push(CellDiff {
                row: cell.row,
                col: cell.col,
                expected: expected_text,
                observed: describe(&got.status),
            });
        }
    }
    diffs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_load_and_resolve() {
        assert_eq!(catalog().len(), 9);
        assert_eq!(lookup("EX_adjF").unwrap().id, "E1");
        assert_eq!(lookup("e4").unwrap().id, "E4");
        assert!(matches!(lookup("nope"), Err(Error::UnknownExample { .. })));
        let (entry, g) = lookup_dag("catalog:E4:G1").unwrap();
        assert_eq!(entry.id, "E4");
        assert_eq!(g.edge_count(), 6);
        assert!(lookup_dag("E4:G1").is_err());
    }

    #[test]
    fn expected_matrix_is_complete() {
        let m = expected_matrix();
        assert_eq!(m.order, RazorId::TABLE_ORDER.to_vec());
        assert_eq!(m.cells.len(), 169);
        for c in &m.cells {
            if c.status == ExpectedStatus::Counterexample {
                assert!(lookup(c.example.as_deref().unwrap()).is_ok());
            }
        }
    }
}
