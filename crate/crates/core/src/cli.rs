//! The `mapkit` command line.
//!
//! Every command renders its whole output into a buffer before printing,
//! so identical arguments give byte-identical output. Exit codes: 0 pass,
//! 1 property failure, 2 unreadable or unparsable input, 3 semantic error,
//! 4 checker precondition not met.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chase::chase;
use crate::compose::{compose, skolemize, to_plain};
use crate::error::MapError;
use crate::eval::certain_answers_st;
use crate::invert::maximum_recovery;
use crate::lang::{
    parse_instance, parse_instances, parse_mapping, parse_query, print_mapping, print_query, validate, MappingSpec,
};
use crate::model::{FactValue, Instance, Tuple};
use crate::oracle::{self, PoolConfig, Verdict};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_SEMANTIC: i32 = 3;
pub const EXIT_INAPPLICABLE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "mapkit", version, about = "Compose, invert and check relational schema mappings")]
pub struct Args {
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Constants per pool.
    #[arg(long, global = true, default_value_t = 2)]
    pub pool_constants: usize,
    /// Nulls per target pool (and per source pool under extended semantics).
    #[arg(long, global = true, default_value_t = 2)]
    pub pool_nulls: usize,
    /// Largest number of atoms in enumerated conjunctive queries.
    #[arg(long, global = true, default_value_t = 3)]
    pub query_budget: usize,
    /// Worker threads for pool enumeration.
    #[arg(long, global = true, env = "MAPKIT_JOBS")]
    pub jobs: Option<usize>,
    /// Seed for `verify --random`.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Property {
    FaginInverse,
    QuasiInverse,
    Recovery,
    MaxRecovery,
    MaxExtendedRecovery,
    CqRecovery,
    CqEquivalent,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a mapping file, and instance or query files over
    /// its schemas; print them back normalized.
    Parse { mapping: PathBuf, more: Vec<PathBuf> },
    /// Canonical universal solution of an instance, with null provenance.
    Chase { mapping: PathBuf, instance: PathBuf },
    /// Compose two mappings into one SO-tgd.
    Compose {
        first: PathBuf,
        second: PathBuf,
        /// Rewrite the result into a plain SO-tgd.
        #[arg(long)]
        plain: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Maximum recovery of an st-tgd mapping.
    Invert {
        mapping: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a property of a mapping and a second mapping on bounded pools.
    ///
    /// With `--random N`, checks the property of N seeded random st-tgd
    /// mappings against their maximum recoveries (for cq-equivalent,
    /// against their Skolemized form) instead of reading files.
    Verify {
        #[arg(long, value_enum)]
        property: Property,
        #[arg(long, conflicts_with_all = ["mapping", "other"])]
        random: Option<usize>,
        #[arg(required_unless_present = "random")]
        mapping: Option<PathBuf>,
        #[arg(required_unless_present = "random")]
        other: Option<PathBuf>,
    },
    /// Certain answers of a query under an st-tgd mapping.
    Certain { mapping: PathBuf, instance: PathBuf, query: PathBuf },
}

/// A command failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<MapError> for Failure {
    fn from(e: MapError) -> Self {
        let code = match e {
            MapError::Syntax { .. } => EXIT_PARSE,
            _ => EXIT_SEMANTIC,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// Output of a successful command run.
struct Outcome {
    code: i32,
    stdout: String,
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_PASS };
        }
    };
    let (code, out, err) = execute(&args);
    let _ = std::io::stdout().write_all(out.as_bytes());
    let _ = std::io::stderr().write_all(err.as_bytes());
    code
}

/// Runs parsed arguments, returning the exit code, stdout and stderr text.
pub fn execute(args: &Args) -> (i32, String, String) {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.jobs {
        builder = builder.num_threads(n.max(1));
    }
    let result = match builder.build() {
        Ok(pool) => pool.install(|| dispatch(args)),
        Err(e) => Err(Failure {
            code: EXIT_SEMANTIC,
            message: format!("cannot start worker threads: {e}"),
        }),
    };
    match result {
        Ok(o) => (o.code, o.stdout, String::new()),
        Err(f) => (f.code, String::new(), format!("error: {}\n", f.message)),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_PARSE,
        message: format!("{}: {e}", path.display()),
    })
}

fn in_file(path: &Path, e: MapError) -> Failure {
    let mut f = Failure::from(e);
    f.message = format!("{}: {}", path.display(), f.message);
    f
}

fn load_mapping(path: &Path) -> Result<MappingSpec, Failure> {
    parse_mapping(&read(path)?).map_err(|e| in_file(path, e))
}

fn write_output(path: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    if let Some(p) = path {
        std::fs::write(p, text).map_err(|e| Failure {
            code: EXIT_SEMANTIC,
            message: format!("{}: {e}", p.display()),
        })?;
    }
    Ok(())
}

fn json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn render_tuple(t: &Tuple) -> Vec<String> {
    t.iter().map(|v| FactValue(v).to_string()).collect()
}

fn pools(args: &Args) -> PoolConfig {
    PoolConfig {
        constants: args.pool_constants,
        nulls: args.pool_nulls,
    }
}

fn dispatch(args: &Args) -> Result<Outcome, Failure> {
    match &args.command {
        Command::Parse { mapping, more } => cmd_parse(args, mapping, more),
        Command::Chase { mapping, instance } => cmd_chase(args, mapping, instance),
        Command::Compose {
            first,
            second,
            plain,
            output,
        } => cmd_compose(args, first, second, *plain, output),
        Command::Invert { mapping, output } => cmd_invert(args, mapping, output),
        Command::Verify {
            property,
            random,
            mapping,
            other,
        } => match random {
            Some(n) => cmd_verify_random(args, *property, *n),
            None => cmd_verify(
                args,
                *property,
                mapping.as_deref().expect("required"),
                other.as_deref().expect("required"),
            ),
        },
        Command::Certain {
            mapping,
            instance,
            query,
        } => cmd_certain(args, mapping, instance, query),
    }
}

#[derive(Serialize)]
struct ParseJson {
    mapping: String,
    classes: Vec<String>,
    instances: Vec<NamedText>,
    queries: Vec<String>,
}

#[derive(Serialize)]
struct NamedText {
    name: String,
    text: String,
}

fn cmd_parse(args: &Args, path: &Path, more: &[PathBuf]) -> Result<Outcome, Failure> {
    let m = load_mapping(path)?;
    if let Some(v) = validate(&m).into_iter().next() {
        return Err(in_file(path, v.into()));
    }
    let schemas = [m.source.clone(), m.target.clone()];
    let mut instances = Vec::new();
    let mut queries = Vec::new();
    for p in more {
        let text = read(p)?;
        if text.trim_start().starts_with("query") || text.lines().any(|l| l.trim_start().starts_with("query ")) {
            queries.push(parse_query(&text, &schemas).map_err(|e| in_file(p, e))?);
        } else {
            instances.extend(parse_instances(&text, &schemas).map_err(|e| in_file(p, e))?);
        }
    }
    let classes: Vec<String> = match m.dependencies() {
        Some(ds) => ds.iter().map(|d| d.class().to_string()).collect(),
        None => vec![if m.so_tgd().is_some_and(|s| s.is_plain()) {
            "plain SO-tgd".into()
        } else {
            "SO-tgd".into()
        }],
    };
    let stdout = match args.format {
        Format::Text => {
            let mut out = print_mapping(&m);
            for (name, inst) in &instances {
                out.push_str(&inst.to_file(name));
            }
            for q in &queries {
                out.push_str(&print_query(q));
            }
            out
        }
        Format::Json => json(&ParseJson {
            mapping: print_mapping(&m),
            classes,
            instances: instances
                .iter()
                .map(|(n, i)| NamedText {
                    name: n.clone(),
                    text: i.to_file(n),
                })
                .collect(),
            queries: queries.iter().map(print_query).collect(),
        }),
    };
    Ok(Outcome { code: EXIT_PASS, stdout })
}

#[derive(Serialize)]
struct FactJson {
    relation: String,
    tuple: Vec<String>,
    dependency: usize,
    trigger: Vec<(String, String)>,
}

#[derive(Serialize)]
struct NullJson {
    null: String,
    origin: String,
}

#[derive(Serialize)]
struct ChaseJson {
    instance: String,
    facts: Vec<FactJson>,
    nulls: Vec<NullJson>,
}

fn cmd_chase(args: &Args, map_path: &Path, inst_path: &Path) -> Result<Outcome, Failure> {
    let m = load_mapping(map_path)?;
    let i = parse_instance(&read(inst_path)?, &[m.source.clone()]).map_err(|e| in_file(inst_path, e))?;
    let r = chase(&m, &i)?;
    let stdout = match args.format {
        Format::Text => {
            let mut out = r.result.to_file("J");
            for (null, origin) in &r.nulls {
                let _ = writeln!(out, "// {} = {origin}", FactValue(null));
            }
            out
        }
        Format::Json => json(&ChaseJson {
            instance: r.result.to_file("J"),
            facts: r
                .facts
                .iter()
                .map(|(rel, t, o)| FactJson {
                    relation: rel.clone(),
                    tuple: render_tuple(t),
                    dependency: o.dependency + 1,
                    trigger: o.trigger.iter().map(|(x, v)| (x.clone(), FactValue(v).to_string())).collect(),
                })
                .collect(),
            nulls: r
                .nulls
                .iter()
                .map(|(n, o)| NullJson {
                    null: FactValue(n).to_string(),
                    origin: o.to_string(),
                })
                .collect(),
        }),
    };
    Ok(Outcome { code: EXIT_PASS, stdout })
}

#[derive(Serialize)]
struct MappingJson {
    mapping: String,
    plain: bool,
}

fn mapping_outcome(args: &Args, m: &MappingSpec, output: &Option<PathBuf>) -> Result<Outcome, Failure> {
    let text = print_mapping(m);
    write_output(output, &text)?;
    let stdout = match args.format {
        Format::Text => text,
        Format::Json => json(&MappingJson {
            plain: m.so_tgd().is_some_and(|s| s.is_plain()),
            mapping: text,
        }),
    };
    Ok(Outcome { code: EXIT_PASS, stdout })
}

fn cmd_compose(args: &Args, a: &Path, b: &Path, plain: bool, output: &Option<PathBuf>) -> Result<Outcome, Failure> {
    let (m12, m23) = (load_mapping(a)?, load_mapping(b)?);
    let mut m13 = compose(&m12, &m23)?;
    if plain {
        m13 = to_plain(&m13)?;
    }
    mapping_outcome(args, &m13, output)
}

fn cmd_invert(args: &Args, path: &Path, output: &Option<PathBuf>) -> Result<Outcome, Failure> {
    let m = load_mapping(path)?;
    mapping_outcome(args, &maximum_recovery(&m)?, output)
}

fn check(args: &Args, property: Property, m: &MappingSpec, m2: &MappingSpec) -> Result<Verdict, MapError> {
    let cfg = pools(args);
    match property {
        Property::FaginInverse => oracle::check_fagin_inverse(m, m2, cfg),
        Property::QuasiInverse => oracle::check_quasi_inverse(m, m2, cfg),
        Property::Recovery => oracle::check_recovery(m, m2, cfg),
        Property::MaxRecovery => oracle::check_max_recovery(m, m2, cfg),
        Property::MaxExtendedRecovery => oracle::check_max_extended_recovery(m, m2, cfg),
        Property::CqRecovery => oracle::check_cq_recovery(m, m2, cfg, args.query_budget),
        Property::CqEquivalent => oracle::cq_equivalent(m, m2, cfg, args.query_budget),
    }
}

fn exit_code(v: &Verdict) -> i32 {
    match v {
        Verdict::Pass => EXIT_PASS,
        Verdict::Fail(_) => EXIT_FAIL,
        Verdict::Inapplicable(_) => EXIT_INAPPLICABLE,
    }
}

#[derive(Serialize)]
struct VerdictJson {
    property: String,
    verdict: &'static str,
    reason: Option<String>,
    instances: Vec<NamedText>,
    query: Option<String>,
    tuple: Option<Vec<String>>,
}

fn verdict_json(property: Property, v: &Verdict) -> VerdictJson {
    let name = property.to_possible_value().expect("named").get_name().to_string();
    match v {
        Verdict::Pass => VerdictJson {
            property: name,
            verdict: "pass",
            reason: None,
            instances: vec![],
            query: None,
            tuple: None,
        },
        Verdict::Inapplicable(why) => VerdictJson {
            property: name,
            verdict: "inapplicable",
            reason: Some(why.clone()),
            instances: vec![],
            query: None,
            tuple: None,
        },
        Verdict::Fail(c) => VerdictJson {
            property: name,
            verdict: "fail",
            reason: Some(c.reason.clone()),
            instances: c
                .instances
                .iter()
                .map(|(n, i)| NamedText {
                    name: n.clone(),
                    text: i.to_file(n),
                })
                .collect(),
            query: c.query.as_ref().map(print_query),
            tuple: c.tuple.as_ref().map(render_tuple),
        },
    }
}

fn cmd_verify(args: &Args, property: Property, a: &Path, b: &Path) -> Result<Outcome, Failure> {
    let (m, m2) = (load_mapping(a)?, load_mapping(b)?);
    let v = check(args, property, &m, &m2)?;
    let stdout = match args.format {
        Format::Text => v.to_string(),
        Format::Json => json(&verdict_json(property, &v)),
    };
    Ok(Outcome {
        code: exit_code(&v),
        stdout,
    })
}

#[derive(Serialize)]
struct SweepJson {
    property: String,
    seed: u64,
    checked: usize,
    passed: usize,
    failed: usize,
    inapplicable: usize,
    first_failure: Option<SweepFailure>,
}

#[derive(Serialize)]
struct SweepFailure {
    mapping: String,
    verdict: VerdictJson,
}

fn cmd_verify_random(args: &Args, property: Property, n: usize) -> Result<Outcome, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let (mut passed, mut failed, mut inapplicable) = (0, 0, 0);
    let mut first: Option<(MappingSpec, Verdict)> = None;
    for k in 0..n {
        let m = oracle::random_st_mapping(&mut rng, &format!("M{}", k + 1));
        let other = match property {
            Property::CqEquivalent => skolemize(&m)?,
            _ => maximum_recovery(&m)?,
        };
        let v = check(args, property, &m, &other)?;
        match v {
            Verdict::Pass => passed += 1,
            Verdict::Fail(_) => failed += 1,
            Verdict::Inapplicable(_) => inapplicable += 1,
        }
        if !v.is_pass() && first.is_none() {
            first = Some((m, v));
        }
    }
    let code = if failed > 0 {
        EXIT_FAIL
    } else if inapplicable > 0 {
        EXIT_INAPPLICABLE
    } else {
        EXIT_PASS
    };
    let name = property.to_possible_value().expect("named").get_name().to_string();
    let stdout = match args.format {
        Format::Text => {
            let mut out = format!(
                "{name}: {passed} pass, {failed} fail, {inapplicable} inapplicable of {n} (seed {})\n",
                args.seed
            );
            if let Some((m, v)) = &first {
                out.push_str(&print_mapping(m));
                out.push_str(&v.to_string());
            }
            out
        }
        Format::Json => json(&SweepJson {
            property: name,
            seed: args.seed,
            checked: n,
            passed,
            failed,
            inapplicable,
            first_failure: first.as_ref().map(|(m, v)| SweepFailure {
                mapping: print_mapping(m),
                verdict: verdict_json(property, v),
            }),
        }),
    };
    Ok(Outcome { code, stdout })
}

#[derive(Serialize)]
struct CertainJson {
    query: String,
    tuples: Vec<Vec<String>>,
}

fn cmd_certain(args: &Args, map_path: &Path, inst_path: &Path, q_path: &Path) -> Result<Outcome, Failure> {
    let m = load_mapping(map_path)?;
    let i: Instance = parse_instance(&read(inst_path)?, &[m.source.clone()]).map_err(|e| in_file(inst_path, e))?;
    let q = parse_query(&read(q_path)?, &[m.target.clone()]).map_err(|e| in_file(q_path, e))?;
    let answers = certain_answers_st(&m, &q, &i)?;
    let tuples: Vec<Vec<String>> = answers.iter().map(render_tuple).collect();
    let stdout = match args.format {
        Format::Text => tuples.iter().map(|t| format!("({})\n", t.join(", "))).collect(),
        Format::Json => json(&CertainJson {
            query: q.name.clone(),
            tuples,
        }),
    };
    Ok(Outcome { code: EXIT_PASS, stdout })
}
