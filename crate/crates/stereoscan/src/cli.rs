//! Command-line front end. [`run`] returns the process exit code.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use stereoscan_core::blocks_text::emit_project;
use stereoscan_core::framework::{catalog, framework_prompt_block, NaPolicy, RatingSheet};
use stereoscan_core::genprompt::{
    build_generation_prompt, export_questionnaires, generate_batch, questionnaire_markdown, standard_specs,
    GeneratedDescription, GenerationMockProvider, GenerationSpec, Topic,
};
use stereoscan_core::rater::{HashMockProvider, Provider};
use stereoscan_core::render::render_stage;
use stereoscan_core::stats::{
    criterion_means, fleiss_kappa, framework_score, likert_matrix, mann_whitney_u, sheet_verdicts, verdict_tally,
    flagged_percent,
};

use crate::analyze::{analyze_file, analyze_path, load_sheets, project_id, variants_for, AnalyzeOptions};
use crate::archive::load_project;
use crate::config::{load_detector_config, FileConfig, Overrides, Settings};
use crate::images::{encode_png, export_costumes, ArchiveCostumes, SvgMode};
use crate::provider::{HttpProvider, Limited};
use crate::report::RatingSection;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ANALYSIS: i32 = 2;
pub const EXIT_UNREACHABLE: i32 = 3;

#[derive(Parser)]
#[command(name = "stereoscan", version, about = "Find gender stereotype smells in Scratch 3 projects")]
struct Cli {
    /// TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the scratchblocks text of a project.
    Blocks {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write the stage screenshot and one costume PNG per sprite.
    Render {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        svg: SvgArgs,
    },
    /// Analyze a project or a directory of projects.
    Analyze(AnalyzeArgs),
    /// Rate one project with the model and print the ratings as JSON.
    Rate(RateArgs),
    /// Generate project descriptions.
    Generate(GenerateArgs),
    /// Build blinded questionnaires from generated descriptions.
    Questionnaire {
        /// JSON written by `generate`.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        orders: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Aggregate rating sheets.
    Stats {
        /// One or two JSON files of rating sheets; two are compared.
        #[arg(long, num_args = 1..=2, required = true)]
        ratings: Vec<PathBuf>,
        #[arg(long, value_parser = parse_na_policy)]
        na_policy: Option<NaPolicy>,
    },
    /// Print the evaluation framework.
    Framework {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Clone)]
struct SvgArgs {
    /// Draw SVG costumes as gray placeholders instead of rasterizing.
    #[arg(long)]
    svg_placeholders: bool,
    /// Fail when an SVG costume cannot be rasterized.
    #[arg(long)]
    no_placeholders: bool,
}

impl SvgArgs {
    fn source(&self) -> ArchiveCostumes {
        ArchiveCostumes {
            svg: if self.svg_placeholders { SvgMode::Placeholder } else { SvgMode::Rasterize },
            allow_placeholder: !self.no_placeholders,
        }
    }
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Use the offline deterministic mock instead of the HTTP provider.
    #[arg(long)]
    mock: bool,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    base_url: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    repeats: Option<u32>,
    /// Maximum concurrent provider calls.
    #[arg(long)]
    concurrency: Option<usize>,
    /// `plain`, `framework` or `both`.
    #[arg(long, value_parser = ["plain", "framework", "both"])]
    variant: Option<String>,
    /// Project description given to the rater and to the text detectors.
    #[arg(long)]
    description: Option<String>,
}

#[derive(Args)]
struct AnalyzeArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Skip model rating.
    #[arg(long, conflicts_with = "mock")]
    no_llm: bool,
    #[command(flatten)]
    model: ModelArgs,
    /// Human rating sheets, matched to projects by id.
    #[arg(long)]
    ratings: Option<PathBuf>,
    /// Detector thresholds (TOML).
    #[arg(long)]
    detectors: Option<PathBuf>,
    #[arg(long, value_parser = parse_na_policy)]
    na_policy: Option<NaPolicy>,
    /// Parallel projects.
    #[arg(long)]
    workers: Option<usize>,
    /// Stop at the first failing project.
    #[arg(long)]
    strict: bool,
    #[arg(long, overrides_with = "no_transcripts")]
    transcripts: bool,
    #[arg(long)]
    no_transcripts: bool,
    #[command(flatten)]
    svg: SvgArgs,
}

#[derive(Args)]
struct RateArgs {
    input: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, required_unless_present = "all")]
    topic: Option<Topic>,
    /// Include the framework in the prompt.
    #[arg(long)]
    inclusive: bool,
    /// Every topic with and without the framework.
    #[arg(long, conflicts_with_all = ["topic", "inclusive"])]
    all: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    mock: bool,
    /// Print the prompts without calling a model.
    #[arg(long)]
    prompt_only: bool,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_na_policy(s: &str) -> Result<NaPolicy, String> {
    match s {
        "exclude" => Ok(NaPolicy::Exclude),
        "as-midpoint" | "as_midpoint" | "midpoint" => Ok(NaPolicy::AsMidpoint),
        _ => Err(format!("unknown N/A policy `{s}` (exclude, as-midpoint)")),
    }
}

/// A failure that ends the command with a given exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_USAGE, message: message.to_string() }
    }

    fn analysis(message: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_ANALYSIS, message: message.to_string() }
    }
}

type CmdResult = Result<i32, Failure>;

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn env(key: &str) -> Option<String> {
    std::env::var(key).ok()
}

fn file_config(path: Option<&Path>) -> Result<FileConfig, Failure> {
    match path {
        Some(p) => FileConfig::load(p).map_err(Failure::usage),
        None => Ok(FileConfig::default()),
    }
}

fn write_or_print(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::analysis(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(Failure::analysis)
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn dispatch(cli: Cli) -> CmdResult {
    let file = file_config(cli.config.as_deref())?;
    match cli.command {
        Command::Blocks { input, output } => {
            let project = load_project(&input).map_err(Failure::analysis)?;
            write_or_print(output.as_deref(), &(emit_project(&project) + "\n"))?;
            Ok(EXIT_OK)
        }
        Command::Render { input, output, svg } => render(&input, &output, &svg),
        Command::Analyze(args) => analyze(&file, args),
        Command::Rate(args) => rate(&file, args),
        Command::Generate(args) => generate(&file, args),
        Command::Questionnaire { input, orders, seed, output } => questionnaire(&input, orders, seed, &output),
        Command::Stats { ratings, na_policy } => {
            let policy = na_policy.or(file.stats.na_policy).unwrap_or_default();
            let a = load_sheets(&ratings[0]).map_err(Failure::usage)?;
            let b = match ratings.get(1) {
                Some(p) => Some(load_sheets(p).map_err(Failure::usage)?),
                None => None,
            };
            let value = stats_json(&a, b.as_deref(), policy).map_err(Failure::analysis)?;
            write_or_print(None, &to_json(&value))?;
            Ok(EXIT_OK)
        }
        Command::Framework { json } => {
            let text = if json { to_json(catalog()) } else { framework_prompt_block() };
            write_or_print(None, &text)?;
            Ok(EXIT_OK)
        }
    }
}

fn render(input: &Path, output: &Path, svg: &SvgArgs) -> CmdResult {
    let project = load_project(input).map_err(Failure::analysis)?;
    let source = svg.source();
    let stage = render_stage(&project, &source).map_err(Failure::analysis)?;
    std::fs::create_dir_all(output).map_err(Failure::analysis)?;
    let stage_path = output.join(format!("{}.stage.png", project_id(input)));
    std::fs::write(&stage_path, encode_png(&stage.raster)).map_err(Failure::analysis)?;
    println!("{}", stage_path.display());
    let costumes = export_costumes(&project, &source, &output.join("costumes")).map_err(Failure::analysis)?;
    for (_, path) in costumes {
        println!("{}", path.display());
    }
    if !stage.placeholders.is_empty() {
        eprintln!("warning: placeholders drawn for {}", stage.placeholders.join(", "));
    }
    Ok(EXIT_OK)
}

fn overrides(m: &ModelArgs) -> Overrides {
    Overrides {
        model: m.model.clone(),
        base_url: m.base_url.clone(),
        repeats: m.repeats,
        temperature: m.temperature,
        concurrency: m.concurrency,
        variants: m.variant.as_deref().and_then(variants_for),
        ..Default::default()
    }
}

fn http_provider(settings: &Settings) -> Limited<HttpProvider> {
    let mut http = HttpProvider::new(&settings.base_url, settings.api_key.clone(), Duration::from_secs(settings.timeout_secs));
    http.max_retries = settings.max_retries;
    http.backoff = Duration::from_millis(settings.backoff_ms);
    Limited::new(http, settings.concurrency)
}

fn now_unix() -> Option<u64> {
    SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs())
}

fn analyze(file: &FileConfig, args: AnalyzeArgs) -> CmdResult {
    let mut flags = overrides(&args.model);
    flags.na_policy = args.na_policy;
    flags.workers = args.workers;
    flags.transcripts = if args.no_transcripts {
        Some(false)
    } else {
        args.transcripts.then_some(true)
    };
    if let Some(p) = &args.detectors {
        flags.detectors = Some(load_detector_config(p).map_err(Failure::usage)?);
    }
    let settings = Settings::resolve(file, &env, &flags);
    let human = match &args.ratings {
        Some(p) => load_sheets(p).map_err(Failure::usage)?,
        None => Vec::new(),
    };

    let http = (!args.no_llm && !args.model.mock).then(|| http_provider(&settings));
    let mock = Limited::new(HashMockProvider, settings.concurrency);
    let (provider, kind, rated_at): (Option<&dyn Provider>, &'static str, Option<u64>) = if args.no_llm {
        (None, "none", None)
    } else if args.model.mock {
        (Some(&mock), "mock", None)
    } else {
        (http.as_ref().map(|p| p as &dyn Provider), "http", now_unix())
    };

    let mut opts = AnalyzeOptions::offline(settings);
    opts.provider = provider;
    opts.provider_kind = kind;
    opts.human = human;
    opts.description = args.model.description.clone();
    opts.out_dir = args.output.clone();
    opts.strict = args.strict;
    opts.costumes = args.svg.source();
    opts.rated_at_unix = rated_at;

    if args.output.is_none() && !args.input.is_dir() {
        let a = analyze_file(&args.input, &opts).map_err(Failure::analysis)?;
        write_or_print(None, &a.report.to_json())?;
        return Ok(if a.provider_unreachable { EXIT_UNREACHABLE } else { EXIT_OK });
    }
    let outcome = analyze_path(&args.input, &opts).map_err(Failure::analysis)?;
    let s = &outcome.summary;
    if args.output.is_none() {
        write_or_print(None, &s.to_json())?;
    } else {
        eprintln!("analyzed {} projects: {} ok, {} errors", s.n_projects, s.n_ok, s.n_errors);
    }
    for e in &s.errors {
        eprintln!("error: {}: {}", e.path, e.message);
    }
    if outcome.skipped > 0 {
        eprintln!("stopped after the first error; {} projects not analyzed", outcome.skipped);
    }
    Ok(if outcome.provider_unreachable {
        EXIT_UNREACHABLE
    } else if s.n_errors > 0 {
        EXIT_ANALYSIS
    } else {
        EXIT_OK
    })
}

fn rate(file: &FileConfig, args: RateArgs) -> CmdResult {
    let settings = Settings::resolve(file, &env, &overrides(&args.model));
    let http;
    let mock = Limited::new(HashMockProvider, settings.concurrency);
    let (provider, kind, rated_at): (&dyn Provider, _, _) = if args.model.mock {
        (&mock, "mock", None)
    } else {
        http = http_provider(&settings);
        (&http, "http", now_unix())
    };
    let mut opts = AnalyzeOptions::offline(settings);
    opts.provider = Some(provider);
    opts.provider_kind = kind;
    opts.description = args.model.description.clone();
    opts.rated_at_unix = rated_at;
    let a = analyze_file(&args.input, &opts).map_err(Failure::analysis)?;
    if opts.transcripts_enabled() && !a.transcripts.is_empty() {
        let path = Path::new("transcripts.jsonl");
        crate::provider::append_lines(path, &a.transcripts).map_err(Failure::analysis)?;
    }
    let sections: &[RatingSection] = &a.report.ratings;
    write_or_print(args.output.as_deref(), &to_json(&json!({
        "project": a.report.project.id,
        "metadata": a.report.metadata,
        "ratings": sections,
        "aggregates": a.report.aggregates,
    })))?;
    let failed = sections.iter().any(|s| !s.errors.is_empty());
    Ok(if a.provider_unreachable {
        EXIT_UNREACHABLE
    } else if failed {
        EXIT_ANALYSIS
    } else {
        EXIT_OK
    })
}

fn generate(file: &FileConfig, args: GenerateArgs) -> CmdResult {
    let specs = if args.all {
        standard_specs(args.seed)
    } else {
        let topic = args.topic.ok_or_else(|| Failure::usage("--topic or --all is required"))?;
        vec![GenerationSpec { topic, inclusive: args.inclusive, seed: args.seed }]
    };
    if args.prompt_only {
        let prompts: Vec<String> = specs.iter().map(build_generation_prompt).collect();
        write_or_print(args.output.as_deref(), &prompts.join("\n---\n"))?;
        return Ok(EXIT_OK);
    }
    let flags = Overrides { model: args.model.clone(), temperature: args.temperature, ..Default::default() };
    let settings = Settings::resolve(file, &env, &flags);
    let http;
    let provider: &dyn Provider = if args.mock {
        &GenerationMockProvider
    } else {
        http = http_provider(&settings);
        &http
    };
    match generate_batch(provider, &specs, &settings.model, settings.temperature) {
        Ok(descs) => {
            write_or_print(args.output.as_deref(), &to_json(&descs))?;
            Ok(EXIT_OK)
        }
        Err(e) if e.is_unreachable() => Err(Failure { code: EXIT_UNREACHABLE, message: e.to_string() }),
        Err(e) => Err(Failure::analysis(e)),
    }
}

fn questionnaire(input: &Path, orders: usize, seed: u64, output: &Path) -> CmdResult {
    let text = std::fs::read_to_string(input).map_err(|e| Failure::usage(format!("{}: {e}", input.display())))?;
    let descs: Vec<GeneratedDescription> =
        serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", input.display())))?;
    let (docs, key) = export_questionnaires(&descs, orders, seed).map_err(Failure::usage)?;
    std::fs::create_dir_all(output).map_err(Failure::analysis)?;
    let write = |name: String, body: String| {
        std::fs::write(output.join(&name), body).map_err(|e| Failure::analysis(format!("{name}: {e}")))
    };
    for q in &docs {
        write(format!("questionnaire-{}.md", q.order), questionnaire_markdown(q))?;
        write(format!("questionnaire-{}.json", q.order), to_json(q))?;
    }
    write("answer-key.json".into(), to_json(&key))?;
    Ok(EXIT_OK)
}

/// Corpus statistics for one group of sheets, and a Mann-Whitney comparison
/// of per-project sigma when a second group is given.
pub fn stats_json(a: &[RatingSheet], b: Option<&[RatingSheet]>, policy: NaPolicy) -> Result<Value, String> {
    let group = |sheets: &[RatingSheet]| -> Result<(Value, Vec<f64>), String> {
        let mut by_project: BTreeMap<&str, Vec<RatingSheet>> = BTreeMap::new();
        for s in sheets {
            by_project.entry(&s.project_id).or_default().push(s.clone());
        }
        let mut rows = Vec::new();
        let mut sigmas = Vec::new();
        let mut tallies = Vec::new();
        for (id, ps) in &by_project {
            let sigma = framework_score(ps, policy).ok();
            sigmas.extend(sigma.map(|s| s.sigma));
            let tally = verdict_tally(&sheet_verdicts(ps)).map_err(|e| e.to_string())?;
            rows.push(json!({"project": id, "n_raters": ps.len(), "sigma": sigma, "tally": tally}));
            tallies.push(tally);
        }
        let groups: Vec<Vec<RatingSheet>> = by_project.into_values().collect();
        let verdict_items: Vec<Vec<_>> = groups.iter().map(|g| sheet_verdicts(g)).collect();
        let value = json!({
            "n_sheets": sheets.len(),
            "n_projects": groups.len(),
            "criterion_means": criterion_means(sheets, policy).ok(),
            "sigma": framework_score(sheets, policy).ok(),
            "flagged_percent": flagged_percent(&tallies),
            "kappa_verdict": fleiss_kappa(&verdict_items).ok(),
            "kappa_likert": fleiss_kappa(&likert_matrix(&groups)).ok(),
            "projects": rows,
        });
        Ok((value, sigmas))
    };
    let (va, sa) = group(a)?;
    let Some(b) = b else { return Ok(va) };
    let (vb, sb) = group(b)?;
    let mw = mann_whitney_u(&sa, &sb).ok();
    Ok(json!({"a": va, "b": vb, "mann_whitney_sigma": mw}))
}
