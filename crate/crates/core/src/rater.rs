//! Model-as-rater prompts, response grammar and the repetition loop.
//!
//! Transport is behind [`Provider`]; the std crate supplies an HTTP adapter
//! and a concurrent driver built on [`rate_repetition`].

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use md5::{Digest, Md5};
use serde::{Deserialize, Serialize};

use crate::blocks_text::emit_project;
use crate::framework::{
    framework_prompt_block, CriterionId, FrameworkError, LikertScore, Provenance, RatingSheet, Verdict,
    VERDICT_QUESTION,
};
use crate::ir::Project;

/// Repetitions per prompt; each is treated as an independent rater.
pub const DEFAULT_REPEATS: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptVariant {
    Plain,
    #[serde(rename = "framework")]
    WithFramework,
}

impl PromptVariant {
    pub const ALL: [PromptVariant; 2] = [PromptVariant::Plain, PromptVariant::WithFramework];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptVariant::Plain => "plain",
            PromptVariant::WithFramework => "framework",
        }
    }
}

impl core::str::FromStr for PromptVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(PromptVariant::Plain),
            "framework" | "with-framework" => Ok(PromptVariant::WithFramework),
            _ => Err(format!("unknown prompt variant `{s}` (expected plain or framework)")),
        }
    }
}

/// An image attached to a request, PNG encoded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImagePart {
    pub label: String,
    pub png: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaterRequest {
    pub prompt_text: String,
    pub images: Vec<ImagePart>,
    pub variant: PromptVariant,
    pub model_name: String,
    /// `None` leaves the provider default in place.
    pub temperature: Option<f64>,
    pub repetition: u32,
    pub attempt: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaterResponse {
    pub raw_text: String,
    pub scores: Option<BTreeMap<CriterionId, LikertScore>>,
    pub verdict: Verdict,
    pub repetition_index: u32,
}

impl RaterResponse {
    /// Full sheet for framework responses; `None` for plain ones.
    pub fn to_sheet(&self, rater_id: &str, project_id: &str) -> Option<RatingSheet> {
        let scores = self.scores.clone()?;
        RatingSheet::new(rater_id, project_id, scores, self.verdict, Provenance::Model).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RaterError {
    #[error("response contains no @boy@, @girl@ or @inclusive@ verdict")]
    NoVerdict,
    #[error("response lacks scores for {}", join_ids(.0))]
    MissingScores(Vec<CriterionId>),
    #[error("conflicting scores for {0}")]
    DuplicateScore(CriterionId),
    #[error("provider error (status {}): {body}", status.map_or_else(|| "none".to_string(), |s| s.to_string()))]
    Provider { status: Option<u16>, body: String },
    #[error("repetition {repetition} could not be parsed after a retry: {reason}")]
    ParseFailedAfterRetry { repetition: u32, reason: String },
    #[error(transparent)]
    Framework(#[from] FrameworkError),
}

impl RaterError {
    /// Transport failure with no HTTP status at all.
    pub fn is_unreachable(&self) -> bool {
        matches!(self, RaterError::Provider { status: None, .. })
    }
}

fn join_ids(ids: &[CriterionId]) -> String {
    ids.iter().map(|i| i.as_str()).collect::<Vec<_>>().join(", ")
}

/// A chat-completion backend.
pub trait Provider: Sync {
    fn complete(&self, request: &RaterRequest) -> Result<String, RaterError>;
}

impl<P: Provider + ?Sized> Provider for &P {
    fn complete(&self, request: &RaterRequest) -> Result<String, RaterError> {
        (**self).complete(request)
    }
}

const INTRO: &str = "I am teaching programming to children. We use the Scratch programming language.\n\
I have found a Scratch project I would like to use as a starter project. The children then extend it in class with their own ideas.\n";

const KEEP_IN_MIND: &str = "Keep in mind that not only humans but also non-humans, animals, or objects can be characters and have gender-specific features.\n";

const FINAL_TOKENS: &str = "\"@boy@\", \"@girl@\", or \"@inclusive@\".\n";

/// Prompt text for one project. Pure: identical inputs give identical bytes.
pub fn build_prompt(project: &Project, description: &str, variant: PromptVariant) -> String {
    let mut p = String::new();
    p.push_str(INTRO);
    p.push('\n');
    p.push_str("Here is the Scratch program in the ScratchBlocks format as you know it from the Scratch community forums:\n");
    p.push_str(&emit_project(project));
    if !p.ends_with('\n') {
        p.push('\n');
    }
    p.push_str("It was described by the creator as: ");
    p.push_str(description.trim());
    p.push('\n');
    p.push_str("I also give you the images of the sprites of the project and a screenshot of the whole stage as it appears at the start of the program.\n\n");
    match variant {
        PromptVariant::WithFramework => {
            p.push_str("Researchers have identified the following checks to identify if a program is gender-inclusive:\n");
            p.push_str(&framework_prompt_block());
            p.push('\n');
            p.push_str(KEEP_IN_MIND);
            p.push_str("Answer the following question:\n");
            p.push_str(VERDICT_QUESTION);
            p.push_str("\n\n");
            p.push_str("Use the checks from the table above to form your answer.\n");
            p.push_str("Answer each check on a five-point Likert scale ranging from 1=strongly agree to 5=strongly disagree, 3 representing neither agree nor disagree, or alternatively 0=not applicable.\n");
            p.push_str("Output your answers as a list of the following format:\n<Identifier>: <score>.\n");
            p.push_str("Use the <Identifier> from the first column of the table above and <score> as number between 0 and 5 on the Likert scale.\n");
            p.push_str("Finally, give your conclusion as ");
            p.push_str(FINAL_TOKENS);
        }
        PromptVariant::Plain => {
            p.push_str(VERDICT_QUESTION);
            p.push('\n');
            p.push_str(KEEP_IN_MIND);
            p.push_str("Explain your answer.\n");
            p.push_str("Give your final answer as ");
            p.push_str(FINAL_TOKENS);
        }
    }
    p
}

/// Assembles a request; `images` are the sprite costumes followed by the
/// stage screenshot.
pub fn build_request(
    project: &Project,
    description: &str,
    variant: PromptVariant,
    images: Vec<ImagePart>,
    model_name: &str,
    temperature: Option<f64>,
) -> RaterRequest {
    RaterRequest {
        prompt_text: build_prompt(project, description, variant),
        images,
        variant,
        model_name: model_name.to_string(),
        temperature,
        repetition: 0,
        attempt: 0,
    }
}

/// Strips list bullets, emphasis and code markers a model may wrap around
/// `ID: score` lines.
fn unmarkdown(line: &str) -> String {
    let mut s = line.trim();
    for bullet in ["- ", "* ", "+ "] {
        if let Some(rest) = s.strip_prefix(bullet) {
            s = rest.trim_start();
            break;
        }
    }
    s.chars().filter(|c| !matches!(c, '*' | '`' | '_')).collect()
}

fn score_line(line: &str) -> Option<(String, u8)> {
    let line = unmarkdown(line);
    let (id, value) = line.split_once(':')?;
    let id = id.trim();
    let value = value.trim();
    let b = id.as_bytes();
    if b.len() != 4 || !b[2].is_ascii_digit() || !b[3].is_ascii_digit() {
        return None;
    }
    let prefix = id[..2].to_ascii_uppercase();
    if !matches!(prefix.as_str(), "CH" | "CO" | "IN" | "PR") {
        return None;
    }
    let vb = value.as_bytes();
    if vb.len() != 1 || !(b'0'..=b'5').contains(&vb[0]) {
        return None;
    }
    Some((format!("{prefix}{}", &id[2..]), vb[0] - b'0'))
}

/// Last verdict token in the text, matched case-insensitively.
pub fn find_verdict(text: &str) -> Option<Verdict> {
    let lower = text.to_ascii_lowercase();
    Verdict::ALL
        .iter()
        .filter_map(|v| lower.rfind(v.token()).map(|at| (at, *v)))
        .max_by_key(|(at, _)| *at)
        .map(|(_, v)| v)
}

/// Parses a model response. Score lines with well-formed but unknown ids
/// (e.g. `CH09`) are ignored.
pub fn parse_response(raw: &str, variant: PromptVariant) -> Result<RaterResponse, RaterError> {
    let verdict = find_verdict(raw).ok_or(RaterError::NoVerdict)?;
    let scores = match variant {
        PromptVariant::Plain => None,
        PromptVariant::WithFramework => {
            let mut scores: BTreeMap<CriterionId, LikertScore> = BTreeMap::new();
            for line in raw.lines() {
                let Some((id, value)) = score_line(line) else { continue };
                let Ok(id) = id.parse::<CriterionId>() else { continue };
                let score = LikertScore::new(value).expect("0-5 by construction");
                match scores.insert(id, score) {
                    Some(prev) if prev != score => return Err(RaterError::DuplicateScore(id)),
                    _ => {}
                }
            }
            let missing: Vec<CriterionId> =
                CriterionId::ALL.iter().copied().filter(|id| !scores.contains_key(id)).collect();
            if !missing.is_empty() {
                return Err(RaterError::MissingScores(missing));
            }
            Some(scores)
        }
    };
    Ok(RaterResponse { raw_text: raw.to_string(), scores, verdict, repetition_index: 0 })
}

/// Writes a sheet in the response grammar.
pub fn render_response(sheet: &RatingSheet) -> String {
    let mut out = String::new();
    for (id, score) in sheet.scores() {
        out.push_str(&format!("{id}: {}\n", score.value()));
    }
    out.push_str(sheet.verdict.token());
    out.push('\n');
    out
}

/// Rater id for repetition `i`.
pub fn rater_id(model: &str, i: u32) -> String {
    format!("{model}#{i}")
}

/// Outcome of one repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionOutcome {
    pub repetition: u32,
    pub result: Result<RaterResponse, RaterError>,
    /// Raw text of every attempt, in order.
    pub transcripts: Vec<String>,
    pub retried: bool,
}

/// Runs one repetition: a parse failure is retried once, provider errors
/// are not retried here.
pub fn rate_repetition(request: &RaterRequest, provider: &dyn Provider, repetition: u32) -> RepetitionOutcome {
    let mut transcripts = Vec::new();
    let mut last_parse_error = None;
    for attempt in 0..2 {
        let mut req = request.clone();
        req.repetition = repetition;
        req.attempt = attempt;
        let text = match provider.complete(&req) {
            Ok(t) => t,
            Err(e) => {
                return RepetitionOutcome { repetition, result: Err(e), transcripts, retried: attempt > 0 };
            }
        };
        let parsed = parse_response(&text, request.variant);
        transcripts.push(text);
        match parsed {
            Ok(mut r) => {
                r.repetition_index = repetition;
                return RepetitionOutcome { repetition, result: Ok(r), transcripts, retried: attempt > 0 };
            }
            Err(e) => last_parse_error = Some(e),
        }
    }
    let reason = last_parse_error.map(|e| e.to_string()).unwrap_or_default();
    RepetitionOutcome {
        repetition,
        result: Err(RaterError::ParseFailedAfterRetry { repetition, reason }),
        transcripts,
        retried: true,
    }
}

/// All repetitions for one project and variant.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingRun {
    pub project_id: String,
    pub model_name: String,
    pub variant: PromptVariant,
    pub outcomes: Vec<RepetitionOutcome>,
}

impl RatingRun {
    /// Collects outcomes in any order and sorts them by repetition.
    pub fn new(project_id: &str, request: &RaterRequest, mut outcomes: Vec<RepetitionOutcome>) -> Self {
        outcomes.sort_by_key(|o| o.repetition);
        RatingRun {
            project_id: project_id.to_string(),
            model_name: request.model_name.clone(),
            variant: request.variant,
            outcomes,
        }
    }

    pub fn responses(&self) -> impl Iterator<Item = &RaterResponse> {
        self.outcomes.iter().filter_map(|o| o.result.as_ref().ok())
    }

    pub fn verdicts(&self) -> Vec<Verdict> {
        self.responses().map(|r| r.verdict).collect()
    }

    /// Sheets with rater ids `model#<i>`; empty for the plain variant.
    pub fn sheets(&self) -> Vec<RatingSheet> {
        self.responses()
            .filter_map(|r| r.to_sheet(&rater_id(&self.model_name, r.repetition_index), &self.project_id))
            .collect()
    }

    pub fn errors(&self) -> impl Iterator<Item = (u32, &RaterError)> {
        self.outcomes.iter().filter_map(|o| o.result.as_ref().err().map(|e| (o.repetition, e)))
    }

    pub fn retries(&self) -> usize {
        self.outcomes.iter().filter(|o| o.retried).count()
    }
}

/// Sequential driver; the std crate runs repetitions concurrently.
pub fn rate_project(
    project_id: &str,
    request: &RaterRequest,
    provider: &dyn Provider,
    repeats: u32,
) -> RatingRun {
    let outcomes = (0..repeats).map(|i| rate_repetition(request, provider, i)).collect();
    RatingRun::new(project_id, request, outcomes)
}

/// One planned provider call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PlannedRequest {
    pub project: usize,
    pub variant: PromptVariant,
    pub repetition: u32,
}

/// Every (project, variant, repetition) combination, in that order.
pub fn plan_requests(projects: usize, variants: &[PromptVariant], repeats: u32) -> Vec<PlannedRequest> {
    let mut out = Vec::with_capacity(projects * variants.len() * repeats as usize);
    for project in 0..projects {
        for &variant in variants {
            for repetition in 0..repeats {
                out.push(PlannedRequest { project, variant, repetition });
            }
        }
    }
    out
}

/// Offline provider whose answer is a pure function of the prompt and the
/// repetition index. Framework prompts get a full score list, plain ones a
/// one-line explanation.
#[derive(Debug, Clone, Copy, Default)]
pub struct HashMockProvider;

impl HashMockProvider {
    pub fn answer(request: &RaterRequest) -> String {
        let mut h = Md5::new();
        h.update(request.prompt_text.as_bytes());
        h.update(request.repetition.to_le_bytes());
        let digest = h.finalize();
        let verdict = match digest[0] % 8 {
            0 => Verdict::Girl,
            1 => Verdict::Boy,
            _ => Verdict::Inclusive,
        };
        let mut out = String::new();
        match request.variant {
            PromptVariant::WithFramework => {
                for (i, id) in CriterionId::ALL.iter().enumerate() {
                    let b = digest[(i + 1) % digest.len()] ^ (i as u8);
                    let score = match b % 10 {
                        0 => 0,
                        1..=5 => 1,
                        6 | 7 => 2,
                        8 => 3,
                        _ => 4,
                    };
                    out.push_str(&format!("{id}: {score}\n"));
                }
            }
            PromptVariant::Plain => out.push_str("The project uses neutral characters and themes.\n"),
        }
        out.push_str(verdict.token());
        out.push('\n');
        out
    }
}

impl Provider for HashMockProvider {
    fn complete(&self, request: &RaterRequest) -> Result<String, RaterError> {
        Ok(Self::answer(request))
    }
}
