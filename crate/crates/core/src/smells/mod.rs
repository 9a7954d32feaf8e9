//! Heuristic stereotype-smell detectors.
//!
//! Only six criteria have detectors (see [`HEURISTIC_CRITERIA`]); the rest
//! need a human or model rater.

mod color;
pub mod lexicon;

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::framework::CriterionId;
use crate::ir::{Block, InputValue, LiteralKind, Project, Shape, Target};
use crate::render::CostumeSource;

pub use color::{hsv, ColorStats};
pub use lexicon::{Coding, Lexicons, NameLexicon, TextLexicons};

/// Criteria with a heuristic detector.
pub const HEURISTIC_CRITERIA: [CriterionId; 6] = [
    CriterionId::Ch01,
    CriterionId::Co02,
    CriterionId::Co04,
    CriterionId::Co06,
    CriterionId::Pr01,
    CriterionId::Pr04,
];

/// Evidence target for findings about the project as a whole.
pub const PROJECT_TARGET: &str = "(project)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "lowercase")]
pub enum Locator {
    Block(String),
    Costume(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub target: String,
    pub locator: Option<Locator>,
    pub excerpt: String,
}

impl Evidence {
    fn new(target: &str, locator: Option<Locator>, excerpt: impl Into<String>) -> Self {
        Evidence { target: target.to_string(), locator, excerpt: excerpt.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StereotypeSmell {
    pub criterion: CriterionId,
    pub severity: Severity,
    pub evidence: Vec<Evidence>,
    pub detector: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptProfile {
    pub loops: usize,
    pub conditionals: usize,
    pub variables: usize,
    pub lists: usize,
    pub custom_blocks: usize,
    pub broadcasts: usize,
    pub events: usize,
    pub sequence_only_scripts: usize,
    pub total_blocks: usize,
    pub scripts: usize,
    /// Looks, sound, music, pen and text-to-speech blocks.
    pub looks_sound_blocks: usize,
    /// Control blocks other than waits and the clone hat.
    pub control_blocks: usize,
    pub operator_blocks: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Pr01Config {
    pub enabled: bool,
    /// Flag projects whose only concept is a single loop or conditional.
    pub flag_single_concept: bool,
}

impl Default for Pr01Config {
    fn default() -> Self {
        Pr01Config { enabled: true, flag_single_concept: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Toggle {
    pub enabled: bool,
}

impl Default for Toggle {
    fn default() -> Self {
        Toggle { enabled: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Co02Config {
    pub enabled: bool,
    /// Minimum hits for each severity.
    pub low_hits: usize,
    pub medium_hits: usize,
    pub high_hits: usize,
}

impl Default for Co02Config {
    fn default() -> Self {
        Co02Config { enabled: true, low_hits: 1, medium_hits: 3, high_hits: 6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Co04Config {
    pub enabled: bool,
    pub pink_hue_min: f64,
    pub pink_hue_max: f64,
    pub pink_saturation: f64,
    pub pink_fraction: f64,
    pub dark_value: f64,
    pub dark_fraction: f64,
    /// Pixels with lower alpha count as transparent.
    pub min_alpha: u8,
}

impl Default for Co04Config {
    fn default() -> Self {
        Co04Config {
            enabled: true,
            pink_hue_min: 300.0,
            pink_hue_max: 345.0,
            pink_saturation: 0.3,
            pink_fraction: 0.35,
            dark_value: 0.25,
            dark_fraction: 0.5,
            min_alpha: 128,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Co06Config {
    pub enabled: bool,
    /// Number of distinct marker classes that raises severity to High.
    pub high_classes: usize,
}

impl Default for Co06Config {
    fn default() -> Self {
        Co06Config { enabled: true, high_classes: 2 }
    }
}

/// Detector thresholds; every section is optional in the config file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub pr01: Pr01Config,
    pub pr04: Toggle,
    pub ch01: Toggle,
    pub co02: Co02Config,
    pub co04: Co04Config,
    pub co06: Co06Config,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid detector config: {0}")]
    Invalid(String),
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.co02;
        if !(1 <= c.low_hits && c.low_hits <= c.medium_hits && c.medium_hits <= c.high_hits) {
            return Err(ConfigError::Invalid("co02 requires 1 <= low_hits <= medium_hits <= high_hits".into()));
        }
        let p = &self.co04;
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(unit(p.pink_saturation) && unit(p.pink_fraction) && unit(p.dark_value) && unit(p.dark_fraction)) {
            return Err(ConfigError::Invalid("co04 fractions and levels must lie in [0, 1]".into()));
        }
        if !(0.0..=360.0).contains(&p.pink_hue_min) || !(0.0..=360.0).contains(&p.pink_hue_max) || p.pink_hue_min > p.pink_hue_max {
            return Err(ConfigError::Invalid("co04 hue band must satisfy 0 <= min <= max <= 360".into()));
        }
        if self.co06.high_classes == 0 {
            return Err(ConfigError::Invalid("co06 high_classes must be at least 1".into()));
        }
        Ok(())
    }
}

/// Control blocks that add structure. Waits only pace a sequence.
fn is_structuring_control(block: &Block) -> bool {
    block.opcode.starts_with("control_")
        && !matches!(block.opcode.as_str(), "control_wait" | "control_wait_until" | "control_start_as_clone")
}

fn is_creative(opcode: &str) -> bool {
    ["looks_", "sound_", "music_", "pen_", "text2speech_"].iter().any(|p| opcode.starts_with(p))
}

pub fn concept_profile(project: &Project) -> ConceptProfile {
    let mut p = ConceptProfile::default();
    for t in project.targets() {
        p.variables += t.variables.len();
        p.lists += t.lists.len();
        p.broadcasts += t.broadcasts.len();
        for b in t.blocks.values().filter(|b| !b.shadow) {
            p.total_blocks += 1;
            let op = b.opcode.as_str();
            if crate::ir::opcodes::LOOPS.contains(&op) {
                p.loops += 1;
            }
            if crate::ir::opcodes::CONDITIONALS.contains(&op) {
                p.conditionals += 1;
            }
            if op == "procedures_definition" {
                p.custom_blocks += 1;
            }
            if b.shape == Shape::Hat && op.starts_with("event_") {
                p.events += 1;
            }
            if is_creative(op) {
                p.looks_sound_blocks += 1;
            }
            if is_structuring_control(b) {
                p.control_blocks += 1;
            }
            if op.starts_with("operator_") {
                p.operator_blocks += 1;
            }
        }
        for root in t.iter_scripts() {
            p.scripts += 1;
            if !t.script_blocks(root).iter().any(|id| is_structuring_control(&t.blocks[*id])) {
                p.sequence_only_scripts += 1;
            }
        }
    }
    p
}

fn project_smell(criterion: CriterionId, severity: Severity, detector: &str, excerpt: String) -> StereotypeSmell {
    StereotypeSmell {
        criterion,
        severity,
        evidence: Vec::from([Evidence::new(PROJECT_TARGET, None, excerpt)]),
        detector: detector.to_string(),
    }
}

pub fn detect_concept_smells(profile: &ConceptProfile) -> Vec<StereotypeSmell> {
    detect_concept_smells_with(profile, &DetectorConfig::default())
}

pub fn detect_concept_smells_with(profile: &ConceptProfile, config: &DetectorConfig) -> Vec<StereotypeSmell> {
    let mut out = Vec::new();
    let p = profile;
    if config.pr01.enabled && p.total_blocks > 0 {
        let excerpt = format!(
            "{} loops and {} conditionals in {} blocks; {} of {} scripts are plain sequences",
            p.loops, p.conditionals, p.total_blocks, p.sequence_only_scripts, p.scripts
        );
        if p.loops + p.conditionals == 0 {
            out.push(project_smell(CriterionId::Pr01, Severity::High, "concepts", excerpt));
        } else if config.pr01.flag_single_concept && p.loops + p.conditionals == 1 {
            out.push(project_smell(CriterionId::Pr01, Severity::Medium, "concepts", excerpt));
        }
    }
    if config.pr04.enabled && p.looks_sound_blocks > 0 && p.control_blocks + p.operator_blocks == 0 {
        let excerpt = format!(
            "{} looks/sound blocks, no control or operator blocks",
            p.looks_sound_blocks
        );
        out.push(project_smell(CriterionId::Pr04, Severity::Medium, "concepts", excerpt));
    }
    out
}

pub fn detect_character_smells(project: &Project, lexicon: &NameLexicon) -> Vec<StereotypeSmell> {
    let mut codings = BTreeSet::new();
    let mut evidence = Vec::new();
    for sprite in &project.sprites {
        for tok in lexicon::tokens(&sprite.name) {
            if let Some(c) = lexicon.coding(&tok) {
                codings.insert(c);
                evidence.push(Evidence::new(&sprite.name, None, format!("sprite `{}` ({tok}: {c:?})", sprite.name)));
            }
        }
        for costume in &sprite.costumes {
            for tok in lexicon::tokens(&costume.name) {
                if let Some(c) = lexicon.coding(&tok) {
                    codings.insert(c);
                    evidence.push(Evidence::new(
                        &sprite.name,
                        Some(Locator::Costume(costume.name.clone())),
                        format!("costume `{}` ({tok}: {c:?})", costume.name),
                    ));
                }
            }
        }
    }
    if codings.len() == 1 {
        let mut smell = StereotypeSmell {
            criterion: CriterionId::Ch01,
            severity: Severity::High,
            evidence,
            detector: "names".into(),
        };
        smell.evidence.dedup();
        Vec::from([smell])
    } else {
        Vec::new()
    }
}

pub fn detect_color_smells(project: &Project, source: &dyn CostumeSource, config: &Co04Config) -> Vec<StereotypeSmell> {
    color::detect(project, source, config)
}

/// Visible text literals in a block's inputs, including nested reporters.
fn literals_under<'a>(t: &'a Target, block: &'a Block, out: &mut Vec<&'a str>) {
    for input in block.inputs.values() {
        match &input.value {
            InputValue::Literal { kind: LiteralKind::Text, value } => out.push(value),
            InputValue::Block(id) => {
                if let Some(child) = t.blocks.get(id).filter(|c| c.shape.is_expression() || c.shadow) {
                    literals_under(t, child, out);
                }
            }
            _ => {}
        }
    }
}

const SPEECH_OPCODES: &[&str] = &[
    "looks_say",
    "looks_sayforsecs",
    "looks_think",
    "looks_thinkforsecs",
    "sensing_askandwait",
    "text2speech_speakAndWait",
];

/// One piece of scanned text with where it came from.
struct TextSpan<'a> {
    target: &'a str,
    locator: Option<Locator>,
    label: &'static str,
    text: &'a str,
}

fn text_spans<'a>(project: &'a Project, description: Option<&'a str>) -> Vec<TextSpan<'a>> {
    let mut spans = Vec::new();
    for t in project.targets() {
        if !t.is_stage {
            spans.push(TextSpan { target: &t.name, locator: None, label: "sprite name", text: &t.name });
        }
        for name in t.variables.values() {
            spans.push(TextSpan { target: &t.name, locator: None, label: "variable", text: name });
        }
        for name in t.lists.values() {
            spans.push(TextSpan { target: &t.name, locator: None, label: "list", text: name });
        }
        for (id, b) in &t.blocks {
            if b.shadow || !SPEECH_OPCODES.contains(&b.opcode.as_str()) {
                continue;
            }
            let mut lits = Vec::new();
            literals_under(t, b, &mut lits);
            for text in lits {
                spans.push(TextSpan { target: &t.name, locator: Some(Locator::Block(id.clone())), label: "speech", text });
            }
        }
    }
    if let Some(d) = description {
        spans.push(TextSpan { target: PROJECT_TARGET, locator: None, label: "description", text: d });
    }
    spans
}

pub fn detect_text_smells(
    project: &Project,
    lexicons: &TextLexicons,
    description: Option<&str>,
    config: &DetectorConfig,
) -> Vec<StereotypeSmell> {
    let spans = text_spans(project, description);
    let mut out = Vec::new();

    if config.co02.enabled {
        let mut hits = 0usize;
        let mut evidence = Vec::new();
        for span in &spans {
            let mut matched = Vec::new();
            for tok in lexicon::tokens(span.text) {
                if let Some(term) = lexicons.violence_hit(&tok) {
                    hits += 1;
                    matched.push(term);
                }
            }
            if !matched.is_empty() {
                evidence.push(Evidence::new(
                    span.target,
                    span.locator.clone(),
                    format!("{} \"{}\" ({})", span.label, span.text, matched.join(", ")),
                ));
            }
        }
        let c = &config.co02;
        let severity = if hits >= c.high_hits {
            Some(Severity::High)
        } else if hits >= c.medium_hits {
            Some(Severity::Medium)
        } else if hits >= c.low_hits {
            Some(Severity::Low)
        } else {
            None
        };
        if let Some(severity) = severity {
            out.push(StereotypeSmell { criterion: CriterionId::Co02, severity, evidence, detector: "violence-lexicon".into() });
        }
    }

    if config.co06.enabled {
        let mut classes = BTreeSet::new();
        let mut evidence = Vec::new();
        for span in &spans {
            if span.label == "variable" && lexicons.is_competition_variable(span.text) {
                classes.insert("variable");
                evidence.push(Evidence::new(span.target, None, format!("variable `{}`", span.text)));
            }
            if span.label == "speech" || span.label == "description" {
                if let Some(phrase) = lexicons.competition_phrase(span.text) {
                    classes.insert("phrase");
                    evidence.push(Evidence::new(
                        span.target,
                        span.locator.clone(),
                        format!("{} \"{}\" ({phrase})", span.label, span.text),
                    ));
                }
            }
        }
        for t in project.targets() {
            for id in clone_delete_on_touch(t) {
                classes.insert("clone-removal");
                evidence.push(Evidence::new(&t.name, Some(Locator::Block(id.to_string())), "clone deleted when touched"));
            }
        }
        if !classes.is_empty() {
            let severity = if classes.len() >= config.co06.high_classes { Severity::High } else { Severity::Medium };
            out.push(StereotypeSmell { criterion: CriterionId::Co06, severity, evidence, detector: "competition-markers".into() });
        }
    }
    out
}

/// `delete this clone` blocks in scripts that also test `touching …?`.
fn clone_delete_on_touch(t: &Target) -> Vec<&str> {
    let mut out = Vec::new();
    for root in t.iter_scripts() {
        let ids = t.script_blocks(root);
        let touches = ids.iter().any(|id| t.blocks[*id].opcode == "sensing_touchingobject");
        if touches {
            out.extend(
                ids.iter().filter(|id| t.blocks[**id].opcode == "control_delete_this_clone").map(|id| id.as_str()),
            );
        }
    }
    out
}

/// Every detector, sorted by criterion then descending severity.
pub fn run_heuristics(
    project: &Project,
    config: &DetectorConfig,
    lexicons: &Lexicons,
    source: &dyn CostumeSource,
    description: Option<&str>,
) -> Vec<StereotypeSmell> {
    let mut out = detect_concept_smells_with(&concept_profile(project), config);
    if config.ch01.enabled {
        out.extend(detect_character_smells(project, &lexicons.names));
    }
    if config.co04.enabled {
        out.extend(detect_color_smells(project, source, &config.co04));
    }
    out.extend(detect_text_smells(project, &lexicons.text, description, config));
    out.sort_by(|a, b| a.criterion.cmp(&b.criterion).then(b.severity.cmp(&a.severity)));
    out
}

/// Lines for criteria without a detector, as printed in reports.
pub fn unassessed_criteria() -> Vec<CriterionId> {
    CriterionId::ALL.iter().copied().filter(|c| !HEURISTIC_CRITERIA.contains(c)).collect()
}
