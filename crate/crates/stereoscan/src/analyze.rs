//! End-to-end analysis of `.sb3` files and directories.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use stereoscan_core::blocks_text::emit_project;
use stereoscan_core::framework::{RatingSheet, Verdict};
use stereoscan_core::ir::Project;
use stereoscan_core::rater::{build_request, ImagePart, PromptVariant, Provider};
use stereoscan_core::render::{render_stage, RenderError, MONITOR_NOTE};
use stereoscan_core::smells::{concept_profile, run_heuristics, unassessed_criteria, Lexicons};
use stereoscan_core::stats::{criterion_means, framework_score, verdict_tally};

use crate::archive::{load_project, LoadError};
use crate::config::Settings;
use crate::images::{costume_exports, encode_png, ArchiveCostumes, CostumeExport};
use crate::provider::{append_lines, rate_concurrent, transcript_lines};
use crate::report::{
    detector_config_hash, render_markdown, sha256_hex, Aggregate, AnalysisReport, Metadata, ProjectError,
    ProjectInfo, RatingSection, RenderingInfo, RepetitionError, Summary, ToolInfo,
};

/// Description used when none is supplied.
pub const NO_DESCRIPTION: &str = "(no description provided)";

#[derive(Debug, thiserror::Error)]
pub enum AnalyzeError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("rendering failed: {0}")]
    Render(#[from] RenderError),
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("no .sb3 files found in {0}")]
    NoInputs(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AnalyzeError {
    let path = path.display().to_string();
    move |source| AnalyzeError::Io { path, source }
}

pub struct AnalyzeOptions<'a> {
    pub settings: Settings,
    /// `None` skips model rating.
    pub provider: Option<&'a dyn Provider>,
    /// Recorded in report metadata: `none`, `mock` or `http`.
    pub provider_kind: &'static str,
    /// Human sheets for any number of projects, matched by project id.
    pub human: Vec<RatingSheet>,
    /// Overrides sidecar descriptions.
    pub description: Option<String>,
    pub out_dir: Option<PathBuf>,
    pub strict: bool,
    pub costumes: ArchiveCostumes,
    pub lexicons: Lexicons,
    pub rated_at_unix: Option<u64>,
}

impl<'a> AnalyzeOptions<'a> {
    pub fn offline(settings: Settings) -> Self {
        AnalyzeOptions {
            settings,
            provider: None,
            provider_kind: "none",
            human: Vec::new(),
            description: None,
            out_dir: None,
            strict: false,
            costumes: ArchiveCostumes::default(),
            lexicons: Lexicons::builtin(),
            rated_at_unix: None,
        }
    }

    pub fn transcripts_enabled(&self) -> bool {
        self.provider.is_some() && self.settings.transcripts.unwrap_or(self.provider_kind == "http")
    }
}

pub struct ProjectAnalysis {
    pub report: AnalysisReport,
    pub stage_png: Vec<u8>,
    pub costumes: Vec<CostumeExport>,
    pub transcripts: Vec<String>,
    pub provider_unreachable: bool,
}

/// File stem, used as project id.
pub fn project_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "project".into())
}

/// `<stem>.description.txt` next to the archive.
pub fn sidecar_description(path: &Path) -> Option<String> {
    let side = path.with_file_name(format!("{}.description.txt", project_id(path)));
    std::fs::read_to_string(side).ok().map(|s| s.trim().to_string())
}

fn aggregate(source: &str, sheets: &[RatingSheet], verdicts: &[Verdict], settings: &Settings) -> Option<Aggregate> {
    let tally = verdict_tally(verdicts).ok()?;
    Some(Aggregate {
        source: source.to_string(),
        n_raters: verdicts.len(),
        criterion_means: criterion_means(sheets, settings.na_policy).ok(),
        sigma: framework_score(sheets, settings.na_policy).ok(),
        tally: Some(tally),
    })
}

pub fn analyze_project(
    project: &Project,
    id: &str,
    description: Option<&str>,
    opts: &AnalyzeOptions,
) -> Result<ProjectAnalysis, AnalyzeError> {
    let settings = &opts.settings;
    let blocks = emit_project(project);
    let stage = render_stage(project, &opts.costumes)?;
    let stage_png = encode_png(&stage.raster);
    let costumes = costume_exports(project, &opts.costumes)?;

    let mut placeholders = stage.placeholders.clone();
    placeholders.sort();
    placeholders.dedup();
    let mut integrity_warnings: Vec<String> = project
        .targets()
        .flat_map(|t| t.costumes.iter())
        .filter(|c| project.asset_bytes(c).is_ok_and(|b| !b.integrity_ok))
        .map(|c| c.asset_id.clone())
        .collect();
    integrity_warnings.sort();
    integrity_warnings.dedup();
    let mut notes = vec![MONITOR_NOTE.to_string()];
    if !placeholders.is_empty() {
        notes.push("some SVG costumes were drawn as gray placeholders".into());
    }
    let rendering = RenderingInfo {
        stage_png: Some(format!("{id}.stage.png")),
        costumes: costumes.iter().map(|c| format!("{id}.costumes/{}", c.file_name)).collect(),
        placeholders,
        integrity_warnings,
        notes,
    };

    let smells = run_heuristics(project, &settings.detectors, &opts.lexicons, &opts.costumes, description);

    let mut aggregates = Vec::new();
    let human: Vec<RatingSheet> = opts.human.iter().filter(|s| s.project_id == id).cloned().collect();
    let human_verdicts: Vec<Verdict> = human.iter().map(|s| s.verdict).collect();
    aggregates.extend(aggregate("human", &human, &human_verdicts, settings));

    let mut ratings = Vec::new();
    let mut transcripts = Vec::new();
    let mut provider_unreachable = false;
    if let Some(provider) = opts.provider {
        let mut images: Vec<ImagePart> =
            costumes.iter().map(|c| ImagePart { label: c.file_name.clone(), png: c.png.clone() }).collect();
        images.push(ImagePart { label: "stage.png".into(), png: stage_png.clone() });
        for &variant in &settings.variants {
            let request = build_request(
                project,
                description.unwrap_or(NO_DESCRIPTION),
                variant,
                images.clone(),
                &settings.model,
                settings.temperature,
            );
            let run = rate_concurrent(id, &request, provider, settings.repeats, settings.concurrency);
            if opts.transcripts_enabled() {
                transcripts.extend(transcript_lines(&request, &run));
            }
            provider_unreachable |= run.errors().any(|(_, e)| e.is_unreachable());
            let sheets = run.sheets();
            let verdicts = run.verdicts();
            aggregates.extend(aggregate(&format!("model:{}", variant.as_str()), &sheets, &verdicts, settings));
            ratings.push(RatingSection {
                variant,
                sheets,
                verdicts,
                retries: run.retries(),
                errors: run.errors().map(|(repetition, e)| RepetitionError { repetition, message: e.to_string() }).collect(),
            });
        }
    }

    let rated = opts.provider.is_some();
    let report = AnalysisReport {
        tool: ToolInfo::current(),
        project: ProjectInfo {
            id: id.to_string(),
            path: project.source_path.clone(),
            sprites: project.sprites.len(),
            blocks: project.targets().map(|t| t.block_count()).sum(),
            extensions: project.extensions.clone(),
            monitors: project.monitor_count,
        },
        scratchblocks_sha256: sha256_hex(blocks.as_bytes()),
        detector_config_sha256: detector_config_hash(&settings.detectors),
        concept_profile: concept_profile(project),
        smells,
        unassessed_criteria: unassessed_criteria(),
        rendering,
        ratings,
        aggregates,
        metadata: Metadata {
            provider: opts.provider_kind.to_string(),
            model: rated.then(|| settings.model.clone()),
            temperature: settings.temperature.filter(|_| rated),
            repeats: rated.then_some(settings.repeats),
            na_policy: settings.na_policy,
            rated_at_unix: opts.rated_at_unix.filter(|_| rated),
        },
    };
    Ok(ProjectAnalysis { report, stage_png, costumes, transcripts, provider_unreachable })
}

pub fn analyze_file(path: &Path, opts: &AnalyzeOptions) -> Result<ProjectAnalysis, AnalyzeError> {
    let project = load_project(path)?;
    let description = opts.description.clone().or_else(|| sidecar_description(path));
    analyze_project(&project, &project_id(path), description.as_deref(), opts)
}

/// A single `.sb3` file, or every `.sb3` directly inside a directory in
/// name order.
pub fn collect_inputs(path: &Path) -> Result<Vec<PathBuf>, AnalyzeError> {
    if !path.is_dir() {
        std::fs::metadata(path).map_err(io_err(path))?;
        return Ok(vec![path.to_path_buf()]);
    }
    let mut out: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(io_err(path))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("sb3")))
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(AnalyzeError::NoInputs(path.display().to_string()));
    }
    Ok(out)
}

pub struct BatchOutcome {
    pub summary: Summary,
    /// Report file name and report, in input order.
    pub reports: Vec<(String, AnalysisReport)>,
    pub provider_unreachable: bool,
    /// Inputs not attempted because `strict` stopped the batch.
    pub skipped: usize,
}

fn write_outputs(dir: &Path, a: &ProjectAnalysis) -> Result<String, AnalyzeError> {
    let id = &a.report.project.id;
    let json_name = format!("{id}.report.json");
    let write = |name: &str, bytes: &[u8]| {
        let p = dir.join(name);
        std::fs::write(&p, bytes).map_err(io_err(&p))
    };
    write(&json_name, a.report.to_json().as_bytes())?;
    write(&format!("{id}.report.md"), render_markdown(&a.report).as_bytes())?;
    write(&format!("{id}.stage.png"), &a.stage_png)?;
    let cdir = dir.join(format!("{id}.costumes"));
    std::fs::create_dir_all(&cdir).map_err(io_err(&cdir))?;
    for c in &a.costumes {
        let p = cdir.join(&c.file_name);
        std::fs::write(&p, &c.png).map_err(io_err(&p))?;
    }
    Ok(json_name)
}

/// Analyzes every input on a bounded worker pool. Per-project failures are
/// recorded in the summary; with `strict` the first failure stops the
/// batch. Outputs are written when `out_dir` is set.
pub fn analyze_path(path: &Path, opts: &AnalyzeOptions) -> Result<BatchOutcome, AnalyzeError> {
    let inputs = collect_inputs(path)?;
    if let Some(dir) = &opts.out_dir {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let slots: Mutex<Vec<Option<Result<ProjectAnalysis, AnalyzeError>>>> =
        Mutex::new((0..inputs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..opts.settings.workers.min(inputs.len()).max(1) {
            s.spawn(|| loop {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(input) = inputs.get(i) else { break };
                let result = analyze_file(input, opts);
                if result.is_err() && opts.strict {
                    stop.store(true, Ordering::SeqCst);
                }
                slots.lock().expect("lock")[i] = Some(result);
            });
        }
    });

    let mut reports = Vec::new();
    let mut errors = Vec::new();
    let mut transcripts = Vec::new();
    let mut provider_unreachable = false;
    let mut skipped = 0;
    for (input, slot) in inputs.iter().zip(slots.into_inner().expect("lock")) {
        match slot {
            None => skipped += 1,
            Some(Err(e)) => errors.push(ProjectError { path: input.display().to_string(), message: e.to_string() }),
            Some(Ok(a)) => {
                provider_unreachable |= a.provider_unreachable;
                let name = match &opts.out_dir {
                    Some(dir) => write_outputs(dir, &a)?,
                    None => format!("{}.report.json", a.report.project.id),
                };
                transcripts.extend(a.transcripts);
                reports.push((name, a.report));
            }
        }
    }
    let summary = Summary::build(&reports, errors);
    if let Some(dir) = &opts.out_dir {
        let p = dir.join("summary.json");
        std::fs::write(&p, summary.to_json()).map_err(io_err(&p))?;
        if !transcripts.is_empty() {
            let p = dir.join("transcripts.jsonl");
            append_lines(&p, &transcripts).map_err(io_err(&p))?;
        }
    }
    Ok(BatchOutcome { summary, reports, provider_unreachable, skipped })
}

/// Reads a JSON array of rating sheets; each is validated.
pub fn load_sheets(path: &Path) -> Result<Vec<RatingSheet>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("invalid rating sheets in {}: {e}", path.display()))
}

/// Variants to request for a `--variant` flag value.
pub fn variants_for(flag: &str) -> Option<Vec<PromptVariant>> {
    match flag {
        "both" => Some(PromptVariant::ALL.to_vec()),
        other => other.parse().ok().map(|v| vec![v]),
    }
}
