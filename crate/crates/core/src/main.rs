use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use causal_razors::catalog::{self, diff_against_expected, expected_matrix};
use causal_razors::imset::{param_count_via_imset, parameterizing_sets};
use causal_razors::multinomial::{extract_independence_model, joint_from_model, param_count};
use causal_razors::razor::{class_of, classify, hierarchy_matrix, HierarchyModel, Membership, CLASS_CEILING};
use causal_razors::scoring::{self, bic, fmt_score, nec_report, sample, Dataset};
use causal_razors::transforms::{chickering_sequence, transcript, validate_sequence};
use causal_razors::{Dag, Error, IndependenceModel, MultinomialModel, RazorId, RangeSpec, Result};

#[derive(Parser)]
#[command(name = "razors", version, about = "Exact classification of DAG hypotheses under causal razors")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Largest vertex count for class enumeration (at most 6).
    #[arg(long, global = true, default_value_t = CLASS_CEILING)]
    max_m: usize,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CriterionArg {
    Nec,
    Bic,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Membership of one DAG in every razor class.
    Classify {
        /// DAG file, `catalog:<id>:<dag>`, or inline `m:1->2,2->3`.
        #[arg(long)]
        dag: String,
        /// Model JSON file (independence model or theta-tables) or `catalog:<id>`.
        #[arg(long)]
        model: String,
        /// Ranges such as `2,3,2`; defaults to the model's own.
        #[arg(long)]
        ranges: Option<String>,
    },
    /// Every DAG in one razor class.
    EnumerateClass {
        #[arg(long)]
        razor: String,
        #[arg(long)]
        model: String,
        #[arg(long)]
        ranges: Option<String>,
    },
    /// Pairwise subset matrix over the thirteen razors.
    Hierarchy {
        /// Model files; the built-in catalog is used when none are given.
        #[arg(long = "model")]
        models: Vec<String>,
        /// Start from an empty model list instead of the catalog.
        #[arg(long, conflicts_with = "models")]
        none: bool,
        /// Diff cell statuses against the stored expected matrix.
        #[arg(long, alias = "against-paper")]
        against_expected: bool,
    },
    /// Recompute every stored fact of catalog entries.
    VerifyExample {
        ids: Vec<String>,
        #[arg(long)]
        all: bool,
    },
    /// Parameterizing sets and parameter count by both routes.
    Imset {
        #[arg(long)]
        dag: String,
        #[arg(long)]
        ranges: Option<String>,
    },
    /// Covered reversals and deletions from a denser DAG to a sparser one.
    Chickering {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
    /// Draw i.i.d. rows from a theta-table model.
    Sample {
        #[arg(long)]
        model: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the dataset here instead of stdout.
        #[arg(long)]
        out: Option<String>,
    },
    /// NEC and/or BIC of DAGs against a model or dataset.
    Score {
        /// One or more DAGs.
        #[arg(long = "dag", required = true)]
        dags: Vec<String>,
        /// Model for NEC, and for sampling when no dataset is given.
        #[arg(long)]
        model: Option<String>,
        /// Dataset file for BIC.
        #[arg(long)]
        data: Option<String>,
        #[arg(long, value_enum, default_value_t = CriterionArg::Both)]
        criterion: CriterionArg,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// BIC penalty multiplier.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
}

/// Outcome of a command that ran to completion.
enum Status {
    Pass,
    Mismatch,
}

/// A model argument resolved to its independence model and any ranges or
/// theta-tables that came with it.
struct ModelInput {
    id: String,
    model: IndependenceModel,
    ranges: Option<RangeSpec>,
    multinomial: Option<MultinomialModel>,
    named: Vec<(String, Dag)>,
}

fn read(path: &str) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

fn load_model(arg: &str) -> Result<ModelInput> {
    if let Some(id) = arg.strip_prefix("catalog:") {
        let entry = catalog::lookup(id)?;
        let multinomial = match &entry.model {
            catalog::ModelSource::Multinomial(mm) => Some(mm.clone()),
            catalog::ModelSource::Explicit(_) => None,
        };
        return Ok(ModelInput {
            id: entry.id.clone(),
            model: entry.independence_model()?,
            ranges: entry.ranges.clone(),
            multinomial,
            named: entry.dags.clone(),
        });
    }
    let text = read(arg)?;
    let id = Path::new(arg)
        .file_stem()
        .map_or_else(|| arg.to_string(), |s| s.to_string_lossy().into_owned());
    match IndependenceModel::from_json(&text) {
        Ok(model) => Ok(ModelInput {
            id,
            model,
            ranges: None,
            multinomial: None,
            named: Vec::new(),
        }),
        Err(first) => {
            let mm = MultinomialModel::from_json(&text).map_err(|second| {
                Error::InvalidArgument(format!(
                    "{arg}: neither an independence model ({first}) nor theta-tables ({second})"
                ))
            })?;
            Ok(ModelInput {
                id,
                model: extract_independence_model(&joint_from_model(&mm)?)?,
                ranges: Some(mm.ranges().clone()),
                multinomial: Some(mm),
                named: Vec::new(),
            })
        }
    }
}

fn load_dag(arg: &str) -> Result<(String, Dag)> {
    if arg.starts_with("catalog:") {
        let (_, g) = catalog::lookup_dag(arg)?;
        return Ok((arg.rsplit(':').next().unwrap_or(arg).to_string(), g.clone()));
    }
    if Path::new(arg).is_file() {
        return Ok((arg.to_string(), Dag::parse_text(&read(arg)?)?));
    }
    Ok((arg.to_string(), Dag::parse_inline(arg)?))
}

fn resolve_ranges(explicit: Option<&str>, model: &ModelInput) -> Result<Option<RangeSpec>> {
    match explicit {
        Some(r) => RangeSpec::parse_list(r).map(Some),
        None => Ok(model.ranges.clone()),
    }
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("values serialize"));
}

fn run(cli: Cli) -> Result<Status> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    let ceiling = cli.max_m;
    if ceiling > causal_razors::independence::MASK_CEILING {
        return Err(Error::Ceiling {
            what: "--max-m",
            requested: ceiling,
            ceiling: causal_razors::independence::MASK_CEILING,
        });
    }
    let json_out = cli.format == Format::Json;
    match cli.command {
        Command::Classify { dag, model, ranges } => {
            let (_, g) = load_dag(&dag)?;
            let input = load_model(&model)?;
            let ranges = resolve_ranges(ranges.as_deref(), &input)?;
            let verdict = classify(&g, &input.model, ranges.as_ref(), ceiling)?;
            if json_out {
                print_json(&serde_json::to_value(&verdict)?);
            } else {
                println!("dag: {}", g.edge_list());
                for (razor, m) in &verdict.memberships {
                    let text = match m {
                        Membership::In => "in".to_string(),
                        Membership::Out { witness } => format!("out: {witness}"),
                        Membership::Undetermined { reason } => format!("undetermined: {reason}"),
                    };
                    println!("{:<8} {text}", razor.name());
                }
            }
            Ok(Status::Pass)
        }
        Command::EnumerateClass { razor, model, ranges } => {
            let razor: RazorId = razor.parse()?;
            let input = load_model(&model)?;
            let ranges = resolve_ranges(ranges.as_deref(), &input)?;
            let class = class_of(razor, &input.model, ranges.as_ref(), ceiling)?;
            if json_out {
                print_json(&json!({ "razor": razor, "size": class.len(), "dags": class }));
            } else {
                println!("{razor}: {} DAGs", class.len());
                for g in &class {
                    println!("  {}", g.edge_list());
                }
            }
            Ok(Status::Pass)
        }
        Command::Hierarchy {
            models,
            none,
            against_expected,
        } => {
            let inputs: Vec<HierarchyModel> = if none {
                Vec::new()
            } else if models.is_empty() {
                catalog::hierarchy_models()?
            } else {
                models
                    .iter()
                    .map(|m| {
                        load_model(m).map(|i| HierarchyModel {
                            id: i.id,
                            model: i.model,
                            ranges: i.ranges,
                            named: i.named,
                        })
                    })
                    .collect::<Result<_>>()?
            };
            let matrix = hierarchy_matrix(&inputs, ceiling)?;
            let diffs = if against_expected {
                Some(diff_against_expected(&matrix, expected_matrix()))
            } else {
                None
            };
            if json_out {
                print_json(&json!({ "matrix": matrix, "diffs": diffs }));
            } else {
                print!("{}", matrix.to_text());
                if let Some(d) = &diffs {
                    println!("diffs against expected matrix: {}", d.len());
                    for diff in d {
                        println!("  {diff}");
                    }
                }
            }
            Ok(match diffs {
                Some(d) if !d.is_empty() => Status::Mismatch,
                _ => Status::Pass,
            })
        }
        Command::VerifyExample { ids, all } => {
            let entries: Vec<&catalog::CatalogEntry> = if all {
                catalog::catalog().iter().collect()
            } else if ids.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "name an entry or pass --all; known: {}",
                    catalog::ids().join(", ")
                )));
            } else {
                ids.iter().map(|id| catalog::lookup(id)).collect::<Result<_>>()?
            };
            let mut failed = 0;
            let mut reports = Vec::new();
            for entry in entries {
                let outcomes = entry.verify(ceiling)?;
                failed += outcomes.iter().filter(|o| !o.passed).count();
                if json_out {
                    reports.push(json!({ "id": entry.id, "summary": entry.summary, "facts": outcomes }));
                } else {
                    println!("{}: {}", entry.id, entry.summary);
                    for o in &outcomes {
                        println!("  {o}");
                    }
                }
            }
            if json_out {
                print_json(&json!({ "entries": reports, "failed": failed }));
            } else {
                println!("{}", if failed == 0 { "all facts pass".to_string() } else { format!("{failed} facts failed") });
            }
            Ok(if failed == 0 { Status::Pass } else { Status::Mismatch })
        }
        Command::Imset { dag, ranges } => {
            let (_, g) = load_dag(&dag)?;
            let ps = parameterizing_sets(&g);
            let ranges = ranges.as_deref().map(RangeSpec::parse_list).transpose()?;
            let counts = ranges
                .as_ref()
                .map(|r| Ok::<_, Error>((param_count(&g, r)?, param_count_via_imset(&g, r)?)))
                .transpose()?;
            if json_out {
                let sets: Vec<Vec<usize>> = ps.sets().iter().map(|s| s.to_vec()).collect();
                print_json(&json!({
                    "dag": g,
                    "parameterizing_sets": sets,
                    "param_count": counts.map(|c| c.0),
                    "param_count_via_imset": counts.map(|c| c.1),
                }));
            } else {
                print!("{}", ps.to_text());
                if let (Some((a, b)), Some(r)) = (counts, &ranges) {
                    println!("param count under {r}: {a} (tables), {b} (parameterizing sets)");
                }
            }
            Ok(Status::Pass)
        }
        Command::Chickering { from, to } => {
            let (_, h) = load_dag(&from)?;
            let (_, g) = load_dag(&to)?;
            match chickering_sequence(&h, &g)? {
                None => {
                    if json_out {
                        print_json(&json!({ "sequence": null, "reason": "I(from) is not contained in I(to)" }));
                    } else {
                        println!("no sequence: I(from) is not contained in I(to)");
                    }
                }
                Some(steps) => {
                    validate_sequence(&h, &g, &steps)?;
                    if json_out {
                        let list: Vec<_> = steps
                            .iter()
                            .map(|s| json!({ "step": s.kind.to_string(), "dag": s.dag }))
                            .collect();
                        print_json(&json!({ "start": h, "steps": list }));
                    } else {
                        print!("{}", transcript(&h, &steps));
                    }
                }
            }
            Ok(Status::Pass)
        }
        Command::Sample { model, n, seed, out } => {
            let input = load_model(&model)?;
            let mm = input
                .multinomial
                .ok_or_else(|| Error::InvalidArgument(format!("{model}: sampling needs theta-tables")))?;
            let data = sample(&joint_from_model(&mm)?, n, seed)?.with_provenance(input.id, seed);
            match out {
                Some(path) => {
                    std::fs::write(&path, data.to_text())?;
                    if json_out {
                        print_json(&json!({ "written": path, "n": n, "seed": seed, "generator": scoring::GENERATOR_ID }));
                    } else {
                        println!("wrote {n} rows to {path} ({})", scoring::GENERATOR_ID);
                    }
                }
                None => print!("{}", data.to_text()),
            }
            Ok(Status::Pass)
        }
        Command::Score {
            dags,
            model,
            data,
            criterion,
            n,
            seed,
            c,
        } => {
            let dags: Vec<(String, Dag)> = dags.iter().map(|d| load_dag(d)).collect::<Result<_>>()?;
            let input = model.as_deref().map(load_model).transpose()?;
            let mut reports = Vec::new();
            if matches!(criterion, CriterionArg::Nec | CriterionArg::Both) {
                let input = input
                    .as_ref()
                    .ok_or_else(|| Error::InvalidArgument("NEC needs --model".into()))?;
                for (_, g) in &dags {
                    reports.push(nec_report(g, &input.model)?);
                }
            }
            if matches!(criterion, CriterionArg::Bic | CriterionArg::Both) {
                let dataset = match (&data, &input) {
                    (Some(path), _) => Dataset::parse_text(&read(path)?)?,
                    (None, Some(ModelInput { multinomial: Some(mm), id, .. })) => {
                        sample(&joint_from_model(mm)?, n, seed)?.with_provenance(id.clone(), seed)
                    }
                    _ => return Err(Error::InvalidArgument("BIC needs --data or a theta-table --model".into())),
                };
                for (_, g) in &dags {
                    reports.push(bic(g, &dataset, c)?);
                }
            }
            if json_out {
                print_json(&json!({ "reports": reports }));
            } else {
                for r in &reports {
                    print!("{r}");
                }
                if criterion == CriterionArg::Both && dags.len() == 2 {
                    let k = dags.len();
                    let (nec_a, nec_b) = (reports[0].value, reports[1].value);
                    let (bic_a, bic_b) = (reports[k].value, reports[k + 1].value);
                    let prefer = |a: f64, b: f64| match a.partial_cmp(&b) {
                        Some(std::cmp::Ordering::Greater) => &dags[0].0,
                        Some(std::cmp::Ordering::Less) => &dags[1].0,
                        _ => "neither",
                    }
                    .to_string();
                    println!(
                        "NEC prefers {} ({} vs {}); BIC prefers {} ({:.3} vs {:.3})",
                        prefer(nec_a, nec_b),
                        fmt_score(nec_a),
                        fmt_score(nec_b),
                        prefer(bic_a, bic_b),
                        bic_a,
                        bic_b
                    );
                }
            }
            Ok(Status::Pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Mismatch) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
