//! Per-project analysis reports, their Markdown rendering and the corpus
//! summary.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stereoscan_core::framework::{CriterionId, NaPolicy, RatingSheet, Verdict};
use stereoscan_core::rater::PromptVariant;
use stereoscan_core::smells::{ConceptProfile, DetectorConfig, Locator, StereotypeSmell};
use stereoscan_core::stats::{CriterionMeans, FrameworkScore, VerdictTally};

pub const TOOL_NAME: &str = "stereoscan";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn detector_config_hash(config: &DetectorConfig) -> String {
    sha256_hex(serde_json::to_string(config).expect("config serializes").as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        ToolInfo { name: TOOL_NAME.into(), version: TOOL_VERSION.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectInfo {
    pub id: String,
    pub path: String,
    pub sprites: usize,
    pub blocks: usize,
    pub extensions: Vec<String>,
    pub monitors: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderingInfo {
    /// File name of the stage screenshot, relative to the report.
    pub stage_png: Option<String>,
    /// Costume PNG file names, one per sprite.
    pub costumes: Vec<String>,
    /// Asset ids drawn as gray placeholders.
    pub placeholders: Vec<String>,
    /// Asset ids whose bytes do not match their declared hash.
    pub integrity_warnings: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepetitionError {
    pub repetition: u32,
    pub message: String,
}

/// Model ratings for one prompt variant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingSection {
    pub variant: PromptVariant,
    pub sheets: Vec<RatingSheet>,
    pub verdicts: Vec<Verdict>,
    pub retries: usize,
    pub errors: Vec<RepetitionError>,
}

/// Statistics over one group of raters: `human`, `model:framework` or
/// `model:plain`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub source: String,
    pub n_raters: usize,
    pub criterion_means: Option<CriterionMeans>,
    pub sigma: Option<FrameworkScore>,
    pub tally: Option<VerdictTally>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    /// `none`, `mock` or `http`.
    pub provider: String,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub repeats: Option<u32>,
    pub na_policy: NaPolicy,
    /// Seconds since the Unix epoch when the ratings were requested; absent
    /// for offline runs so reports stay reproducible.
    pub rated_at_unix: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub tool: ToolInfo,
    pub project: ProjectInfo,
    pub scratchblocks_sha256: String,
    pub detector_config_sha256: String,
    pub concept_profile: ConceptProfile,
    pub smells: Vec<StereotypeSmell>,
    pub unassessed_criteria: Vec<CriterionId>,
    pub rendering: RenderingInfo,
    pub ratings: Vec<RatingSection>,
    pub aggregates: Vec<Aggregate>,
    pub metadata: Metadata,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
}

fn locator(l: &Option<Locator>) -> String {
    match l {
        Some(Locator::Block(id)) => format!(" (block `{id}`)"),
        Some(Locator::Costume(name)) => format!(" (costume `{name}`)"),
        None => String::new(),
    }
}

/// Human-readable report. Deterministic for a given report.
pub fn render_markdown(r: &AnalysisReport) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "# Stereotype smell report: {}\n", r.project.id);
    let _ = writeln!(o, "- Source: `{}`", r.project.path);
    let _ = writeln!(o, "- Sprites: {}, blocks: {}", r.project.sprites, r.project.blocks);
    if !r.project.extensions.is_empty() {
        let _ = writeln!(o, "- Extensions: {}", r.project.extensions.join(", "));
    }
    let _ = writeln!(o, "- Scratchblocks SHA-256: `{}`", r.scratchblocks_sha256);
    let _ = writeln!(o, "- Detector config SHA-256: `{}`", r.detector_config_sha256);
    let _ = writeln!(o, "- Tool: {} {}", r.tool.name, r.tool.version);

    o.push_str("\n## Heuristic smells\n\n");
    if r.smells.is_empty() {
        o.push_str("No heuristic smells detected.\n");
    }
    for s in &r.smells {
        let _ = writeln!(o, "### {} ({:?}, {})\n", s.criterion, s.severity, s.detector);
        o.push_str(&format!("{}\n\n", s.criterion.criterion().statement));
        for e in &s.evidence {
            let _ = writeln!(o, "- `{}`{}: {}", e.target, locator(&e.locator), e.excerpt);
        }
        o.push('\n');
    }
    if !r.unassessed_criteria.is_empty() {
        let ids: Vec<&str> = r.unassessed_criteria.iter().map(|c| c.as_str()).collect();
        let _ = writeln!(o, "\nCriteria without a heuristic detector: {}.", ids.join(", "));
    }

    let p = &r.concept_profile;
    o.push_str("\n## Programming concepts\n\n| Concept | Count |\n|---|---|\n");
    for (name, v) in [
        ("loops", p.loops),
        ("conditionals", p.conditionals),
        ("variables", p.variables),
        ("lists", p.lists),
        ("custom blocks", p.custom_blocks),
        ("broadcasts", p.broadcasts),
        ("events", p.events),
        ("scripts", p.scripts),
        ("sequence-only scripts", p.sequence_only_scripts),
        ("blocks", p.total_blocks),
    ] {
        let _ = writeln!(o, "| {name} | {v} |");
    }

    let scored: Vec<&Aggregate> = r.aggregates.iter().filter(|a| a.criterion_means.is_some()).collect();
    if !scored.is_empty() {
        o.push_str("\n## Criterion means\n\n| Criterion |");
        for a in &scored {
            let _ = write!(o, " {} |", a.source);
        }
        o.push_str("\n|---|");
        o.push_str(&"---|".repeat(scored.len()));
        o.push('\n');
        for id in CriterionId::ALL {
            let _ = write!(o, "| {id} |");
            for a in &scored {
                let m = a.criterion_means.as_ref().and_then(|m| m.get(&id)).and_then(|m| m.mean);
                let _ = write!(o, " {} |", fmt_opt(m));
            }
            o.push('\n');
        }
        o.push_str("| sigma |");
        for a in &scored {
            let _ = write!(o, " {} |", fmt_opt(a.sigma.map(|s| s.sigma)));
        }
        o.push('\n');
    }

    let tallied: Vec<&Aggregate> = r.aggregates.iter().filter(|a| a.tally.is_some()).collect();
    if !tallied.is_empty() {
        o.push_str("\n## Verdicts\n\n| Source | boy | girl | inclusive | gendered | majority |\n|---|---|---|---|---|---|\n");
        for a in tallied {
            let t = a.tally.as_ref().expect("filtered");
            let _ = writeln!(
                o,
                "| {} | {} | {} | {} | {} | {} |",
                a.source,
                t.counts[&Verdict::Boy],
                t.counts[&Verdict::Girl],
                t.counts[&Verdict::Inclusive],
                if t.gendered_flag { "yes" } else { "no" },
                t.majority.map_or("-", |v| v.as_str()),
            );
        }
    }

    let errors: Vec<(PromptVariant, &RepetitionError)> =
        r.ratings.iter().flat_map(|s| s.errors.iter().map(move |e| (s.variant, e))).collect();
    if !errors.is_empty() {
        o.push_str("\n## Rater errors\n\n");
        for (v, e) in errors {
            let _ = writeln!(o, "- {} repetition {}: {}", v.as_str(), e.repetition, e.message);
        }
    }

    o.push_str("\n## Rendering\n\n");
    if let Some(stage) = &r.rendering.stage_png {
        let _ = writeln!(o, "- Stage: `{stage}`");
    }
    for c in &r.rendering.costumes {
        let _ = writeln!(o, "- Costume: `{c}`");
    }
    if !r.rendering.placeholders.is_empty() {
        let _ = writeln!(o, "- Placeholders (reduced visual fidelity): {}", r.rendering.placeholders.join(", "));
    }
    if !r.rendering.integrity_warnings.is_empty() {
        let _ = writeln!(o, "- Asset hash mismatches: {}", r.rendering.integrity_warnings.join(", "));
    }
    for n in &r.rendering.notes {
        let _ = writeln!(o, "- Note: {n}");
    }

    let m = &r.metadata;
    o.push_str("\n## Metadata\n\n");
    let _ = writeln!(o, "- Provider: {}", m.provider);
    if let Some(model) = &m.model {
        let _ = writeln!(o, "- Model: {model}");
    }
    let _ = writeln!(o, "- Temperature: {}", m.temperature.map_or_else(|| "provider default".to_string(), |t| t.to_string()));
    if let Some(n) = m.repeats {
        let _ = writeln!(o, "- Repetitions: {n}");
    }
    let _ = writeln!(o, "- N/A policy: {}", match m.na_policy {
        NaPolicy::Exclude => "exclude",
        NaPolicy::AsMidpoint => "as midpoint",
    });
    o
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectError {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagRate {
    pub source: String,
    pub flagged: usize,
    pub rated: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub id: String,
    pub report: String,
    pub smells: Vec<CriterionId>,
    pub sigma: BTreeMap<String, f64>,
    pub gendered: BTreeMap<String, bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub tool: ToolInfo,
    pub n_projects: usize,
    pub n_ok: usize,
    pub n_errors: usize,
    pub errors: Vec<ProjectError>,
    pub flagged: Vec<FlagRate>,
    pub projects: Vec<SummaryRow>,
}

impl Summary {
    pub fn build(reports: &[(String, AnalysisReport)], errors: Vec<ProjectError>) -> Summary {
        let mut rates: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        let projects = reports
            .iter()
            .map(|(file, r)| {
                let mut sigma = BTreeMap::new();
                let mut gendered = BTreeMap::new();
                for a in &r.aggregates {
                    if let Some(s) = a.sigma {
                        sigma.insert(a.source.clone(), s.sigma);
                    }
                    if let Some(t) = &a.tally {
                        gendered.insert(a.source.clone(), t.gendered_flag);
                        let e = rates.entry(a.source.clone()).or_default();
                        e.0 += usize::from(t.gendered_flag);
                        e.1 += 1;
                    }
                }
                let mut smells: Vec<CriterionId> = r.smells.iter().map(|s| s.criterion).collect();
                smells.dedup();
                SummaryRow { id: r.project.id.clone(), report: file.clone(), smells, sigma, gendered }
            })
            .collect();
        let flagged = rates
            .into_iter()
            .map(|(source, (flagged, rated))| FlagRate {
                source,
                flagged,
                rated,
                percent: 100.0 * flagged as f64 / rated as f64,
            })
            .collect();
        Summary {
            tool: ToolInfo::current(),
            n_projects: reports.len() + errors.len(),
            n_ok: reports.len(),
            n_errors: errors.len(),
            errors,
            flagged,
            projects,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}
