//! Tutorial-generation prompts and blinded rating questionnaires.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use md5::{Digest, Md5};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::framework::{catalog, framework_prompt_block, CriterionId, VERDICT_QUESTION};
use crate::rater::{PromptVariant, Provider, RaterError, RaterRequest};

/// The eight starter-project categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topic {
    Animation,
    Games,
    InteractiveArt,
    Music,
    Stories,
    MathAndScience,
    Extensions,
    CommunityAndKindness,
}

impl Topic {
    pub const ALL: [Topic; 8] = [
        Topic::Animation,
        Topic::Games,
        Topic::InteractiveArt,
        Topic::Music,
        Topic::Stories,
        Topic::MathAndScience,
        Topic::Extensions,
        Topic::CommunityAndKindness,
    ];

    /// Wording used inside the prompt.
    pub fn label(self) -> &'static str {
        match self {
            Topic::Animation => "animation",
            Topic::Games => "games",
            Topic::InteractiveArt => "interactive art",
            Topic::Music => "music",
            Topic::Stories => "stories",
            Topic::MathAndScience => "math and science",
            Topic::Extensions => "extensions",
            Topic::CommunityAndKindness => "community and kindness",
        }
    }
}

impl core::fmt::Display for Topic {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}

impl core::str::FromStr for Topic {
    type Err = String;

    /// Accepts the label or its kebab-case form.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', " ");
        Topic::ALL
            .iter()
            .copied()
            .find(|t| t.label() == norm)
            .ok_or_else(|| format!("unknown topic `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GenerationSpec {
    pub topic: Topic,
    pub inclusive: bool,
    pub seed: u64,
}

/// Every topic once without and once with the framework: 16 specs.
pub fn standard_specs(seed: u64) -> Vec<GenerationSpec> {
    let mut out = Vec::new();
    for topic in Topic::ALL {
        for inclusive in [false, true] {
            out.push(GenerationSpec { topic, inclusive, seed });
        }
    }
    out
}

pub fn build_generation_prompt(spec: &GenerationSpec) -> String {
    let mut p = String::new();
    p.push_str("I am teaching programming to children. We use the Scratch programming language.\n");
    p.push_str("I need help to create a Scratch project the children can implement to learn basic programming concepts.\n\n");
    if spec.inclusive {
        p.push_str("The project should be gender-inclusive.\n");
        p.push_str("As a guideline, researchers have identified the following criteria to check whether a project is gender-inclusive:\n");
        p.push_str(&framework_prompt_block());
        p.push('\n');
    }
    p.push_str("If it makes sense, the project should contain basic programming concepts like conditions and other control structures.\n");
    p.push_str("Keep in mind that the children are beginners. Do not include too many programming concepts at once.\n\n");
    p.push_str(&format!("The general topic for the project should be: '{}'\n\n", spec.topic.label()));
    p.push_str("Describe a Scratch project that fulfils the requirements above.\n");
    p.push_str("Focus on the project design, features, and programming concepts in your description.\n");
    p.push_str("I also want to demonstrate the children an example of this project at the beginning of the class to get them motivated.\n");
    p.push_str("Describe which sprite and background images I should choose for this example demonstration.\n");
    p.push_str("You should not output any code. The project and example image descriptions are enough.\n");
    p
}

/// Text-only request for one spec. `variant` records whether the framework
/// was included.
pub fn generation_request(spec: &GenerationSpec, model_name: &str, temperature: Option<f64>) -> RaterRequest {
    RaterRequest {
        prompt_text: build_generation_prompt(spec),
        images: Vec::new(),
        variant: if spec.inclusive { PromptVariant::WithFramework } else { PromptVariant::Plain },
        model_name: model_name.to_string(),
        temperature,
        repetition: 0,
        attempt: 0,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedDescription {
    pub id: String,
    pub spec: GenerationSpec,
    pub text: String,
}

/// Stable id such as `games-plain` or `interactive-art-inclusive`.
pub fn description_id(spec: &GenerationSpec) -> String {
    format!(
        "{}-{}",
        spec.topic.label().replace(' ', "-"),
        if spec.inclusive { "inclusive" } else { "plain" }
    )
}

/// One sample per spec, in input order.
pub fn generate_batch(
    provider: &dyn Provider,
    specs: &[GenerationSpec],
    model_name: &str,
    temperature: Option<f64>,
) -> Result<Vec<GeneratedDescription>, RaterError> {
    specs
        .iter()
        .map(|spec| {
            let text = provider.complete(&generation_request(spec, model_name, temperature))?;
            Ok(GeneratedDescription { id: description_id(spec), spec: *spec, text })
        })
        .collect()
}

/// Offline generator: a short description derived from the topic and a
/// hash of the prompt.
#[derive(Debug, Clone, Copy, Default)]
pub struct GenerationMockProvider;

impl Provider for GenerationMockProvider {
    fn complete(&self, request: &RaterRequest) -> Result<String, RaterError> {
        let digest = Md5::digest(request.prompt_text.as_bytes());
        let topic = request
            .prompt_text
            .split("should be: '")
            .nth(1)
            .and_then(|r| r.split('\'').next())
            .unwrap_or("scratch");
        const SPRITES: [&str; 6] = ["a robot", "a cat", "a rocket", "a tree", "a drum", "a paintbrush"];
        const STAGES: [&str; 4] = ["a park", "outer space", "a classroom", "an ocean"];
        Ok(format!(
            "Project idea {:02x}{:02x}: a {topic} project starring {} in front of {}. \
             The children use an event hat, a repeat loop and one if block.",
            digest[0],
            digest[1],
            SPRITES[usize::from(digest[2]) % SPRITES.len()],
            STAGES[usize::from(digest[3]) % STAGES.len()],
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Usability {
    AsIs,
    SomeMod,
    LotsMod,
    Not,
}

impl Usability {
    pub const ALL: [Usability; 4] = [Usability::AsIs, Usability::SomeMod, Usability::LotsMod, Usability::Not];

    pub fn label(self) -> &'static str {
        match self {
            Usability::AsIs => "as-is",
            Usability::SomeMod => "some modifications",
            Usability::LotsMod => "lots of modifications",
            Usability::Not => "not at all",
        }
    }
}

pub const USABILITY_QUESTION: &str = "Would you use this project in your class?";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionnaireCriterion {
    pub id: CriterionId,
    pub statement: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionnaireItem {
    pub position: usize,
    pub item_id: String,
    pub text: String,
}

/// One ordering of all descriptions. Carries nothing that reveals how a
/// description was produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Questionnaire {
    pub order: usize,
    pub scale: String,
    pub criteria: Vec<QuestionnaireCriterion>,
    pub verdict_question: String,
    pub usability_question: String,
    pub usability_options: Vec<String>,
    pub items: Vec<QuestionnaireItem>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerKeyEntry {
    pub item_id: String,
    pub description_id: String,
    pub topic: Topic,
    pub inclusive: bool,
}

/// Kept apart from the questionnaires handed to raters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerKey {
    pub seed: u64,
    pub entries: Vec<AnswerKeyEntry>,
    /// `orders[k][i]` is the item id at position `i + 1` of questionnaire `k`.
    pub orders: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QuestionnaireError {
    #[error("no descriptions to build questionnaires from")]
    Empty,
    #[error("duplicate description id `{0}`")]
    DuplicateId(String),
}

const SCALE: &str = "1 = strongly agree, 2 = agree, 3 = neither agree nor disagree, 4 = disagree, 5 = strongly disagree, 0 = not applicable";

fn blinded_id(seed: u64, description_id: &str) -> String {
    let mut h = Md5::new();
    h.update(seed.to_le_bytes());
    h.update(description_id.as_bytes());
    let d = h.finalize();
    format!("D-{:02x}{:02x}{:02x}", d[0], d[1], d[2])
}

/// `n_orders` seeded permutations of all descriptions plus the answer key.
pub fn export_questionnaires(
    descriptions: &[GeneratedDescription],
    n_orders: usize,
    seed: u64,
) -> Result<(Vec<Questionnaire>, AnswerKey), QuestionnaireError> {
    if descriptions.is_empty() {
        return Err(QuestionnaireError::Empty);
    }
    let mut seen = alloc::collections::BTreeSet::new();
    for d in descriptions {
        if !seen.insert(d.id.as_str()) {
            return Err(QuestionnaireError::DuplicateId(d.id.clone()));
        }
    }
    let ids: Vec<String> = descriptions.iter().map(|d| blinded_id(seed, &d.id)).collect();
    let criteria: Vec<QuestionnaireCriterion> =
        catalog().iter().map(|c| QuestionnaireCriterion { id: c.id, statement: c.statement.to_string() }).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::with_capacity(n_orders);
    let mut orders = Vec::with_capacity(n_orders);
    for order in 0..n_orders {
        let mut perm: Vec<usize> = (0..descriptions.len()).collect();
        perm.shuffle(&mut rng);
        let items = perm
            .iter()
            .enumerate()
            .map(|(pos, &i)| QuestionnaireItem {
                position: pos + 1,
                item_id: ids[i].clone(),
                text: descriptions[i].text.clone(),
            })
            .collect();
        orders.push(perm.iter().map(|&i| ids[i].clone()).collect());
        docs.push(Questionnaire {
            order: order + 1,
            scale: SCALE.to_string(),
            criteria: criteria.clone(),
            verdict_question: VERDICT_QUESTION.to_string(),
            usability_question: USABILITY_QUESTION.to_string(),
            usability_options: Usability::ALL.iter().map(|u| u.label().to_string()).collect(),
            items,
        });
    }
    let entries = descriptions
        .iter()
        .zip(&ids)
        .map(|(d, id)| AnswerKeyEntry {
            item_id: id.clone(),
            description_id: d.id.clone(),
            topic: d.spec.topic,
            inclusive: d.spec.inclusive,
        })
        .collect();
    Ok((docs, AnswerKey { seed, entries, orders }))
}

/// Printable form of one questionnaire.
pub fn questionnaire_markdown(q: &Questionnaire) -> String {
    let mut out = format!("# Project questionnaire {}\n\n", q.order);
    out.push_str("For each project, rate every statement on this scale: ");
    out.push_str(&q.scale);
    out.push_str(".\n");
    for item in &q.items {
        out.push_str(&format!("\n## Project {} ({})\n\n", item.position, item.item_id));
        for line in item.text.lines() {
            out.push_str("> ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str("\n| Id | Statement | Score |\n|---|---|---|\n");
        for c in &q.criteria {
            out.push_str(&format!("| {} | {} | |\n", c.id, c.statement));
        }
        out.push_str(&format!("\n{} (boy / girl / inclusive): \n\n", q.verdict_question));
        out.push_str(&q.usability_question);
        out.push('\n');
        for o in &q.usability_options {
            out.push_str(&format!("- [ ] {o}\n"));
        }
    }
    out
}
