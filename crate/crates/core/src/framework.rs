//! The gender bias evaluation framework: 18 scored criteria, the Likert scale
//! they are rated on, the final verdict, and per-rater rating sheets.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Characters,
    Content,
    Instructions,
    ProgrammingConcepts,
}

impl Category {
    pub fn prefix(self) -> &'static str {
        match self {
            Category::Characters => "CH",
            Category::Content => "CO",
            Category::Instructions => "IN",
            Category::ProgrammingConcepts => "PR",
        }
    }
}

/// Where a criterion was adopted from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    Bhargava,
    Heemskerk,
    New,
}

macro_rules! criteria {
    ($($variant:ident => $id:literal, $cat:ident, $src:ident, $text:literal;)*) => {
        /// Identifier of one scored criterion (`CH01` … `PR04`).
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum CriterionId {
            $(#[serde(rename = $id)] $variant,)*
        }

        impl CriterionId {
            pub const ALL: [CriterionId; 18] = [$(CriterionId::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(CriterionId::$variant => $id,)*
                }
            }
        }

        static CATALOG: [Criterion; 18] = [
            $(Criterion {
                id: CriterionId::$variant,
                category: Category::$cat,
                statement: $text,
                source: Source::$src,
            },)*
        ];
    };
}

criteria! {
    Ch01 => "CH01", Characters, Bhargava, "Female and male characters are equally represented.";
    Ch02 => "CH02", Characters, Bhargava, "Active and passive behaviors are equally distributed between female and male characters.";
    Ch03 => "CH03", Characters, Bhargava, "Female characters are presented in problem solving & leadership roles.";
    Ch04 => "CH04", Characters, Bhargava, "The characters are not stereotyped by occupational roles.";
    Ch05 => "CH05", Characters, Bhargava, "The types of emotional statements attributed to females and males are not stereotypic.";
    Co01 => "CO01", Content, Bhargava, "The project is free of sexist language.";
    Co02 => "CO02", Content, Bhargava, "The extent and frequency of aggressive and/or destructive behaviors is limited or non-existent.";
    Co03 => "CO03", Content, Bhargava, "Content and overall style of the project appeal to girls & boys.";
    Co04 => "CO04", Content, Heemskerk, "The preferences of different groups are taken into account in the visual interface (e.g. bright vs dark colours).";
    Co05 => "CO05", Content, Bhargava, "Non-human objects are not assumed to be male.";
    Co06 => "CO06", Content, Bhargava, "The number of elements of competitiveness vs. cooperation is balanced.";
    Co07 => "CO07", Content, New, "Themes and scenarios reflect diverse interests beyond stereotypical gender preferences.";
    In01 => "IN01", Instructions, Heemskerk, "The project addresses different kinds of skills (e.g. writing, drawing).";
    In02 => "IN02", Instructions, Heemskerk, "The project is made in such a flexible manner that students can alter parts to their preference (e.g. own sprites).";
    Pr01 => "PR01", ProgrammingConcepts, New, "Basic programming concepts (i.e., loops, conditionals) are used.";
    Pr02 => "PR02", ProgrammingConcepts, New, "The project complexity is appropriate for beginners.";
    Pr03 => "PR03", ProgrammingConcepts, New, "The project presents programming as having diverse applications beyond games and competition.";
    Pr04 => "PR04", ProgrammingConcepts, New, "Creative and artistic programming features are balanced with logical or computational elements.";
}

impl CriterionId {
    pub fn criterion(self) -> &'static Criterion {
        &CATALOG[self as usize]
    }

    pub fn category(self) -> Category {
        self.criterion().category
    }
}

impl fmt::Display for CriterionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CriterionId {
    type Err = FrameworkError;

    /// Identifiers are matched case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CriterionId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| FrameworkError::UnknownCriterion(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Criterion {
    pub id: CriterionId,
    pub category: Category,
    pub statement: &'static str,
    pub source: Source,
}

/// The 18 scored criteria in table order (CH, CO, IN, PR).
pub fn catalog() -> &'static [Criterion; 18] {
    &CATALOG
}

/// The verdict question, asked after the checks rather than scored.
pub const VERDICT_QUESTION: &str = "Is the program targeted towards boys, girls, or is it gender-inclusive?";

/// Two-column `Identifier  Description` table of all criteria.
pub fn framework_prompt_block() -> String {
    let mut out = String::new();
    out.push_str("Identifier  Description\n");
    for c in catalog() {
        out.push_str(c.id.as_str());
        out.push_str("        ");
        out.push_str(c.statement);
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrameworkError {
    #[error("rating sheet is missing criterion {0}")]
    MissingCriterion(CriterionId),
    #[error("criterion {0} has invalid score {1} (expected 0-5)")]
    InvalidScore(CriterionId, i64),
    #[error("unknown criterion `{0}`")]
    UnknownCriterion(String),
    #[error("unknown verdict `{0}`")]
    UnknownVerdict(String),
}

/// A rating on the 5-point scale, or 0 for "not applicable".
///
/// 1 = strongly agree with the (inclusively phrased) statement, 5 = strongly
/// disagree. Lower non-zero values therefore mean fewer smells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct LikertScore(u8);

impl LikertScore {
    pub const NOT_APPLICABLE: LikertScore = LikertScore(0);
    pub const MIDPOINT: LikertScore = LikertScore(3);

    pub fn new(value: u8) -> Option<Self> {
        (value <= 5).then_some(LikertScore(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn is_applicable(self) -> bool {
        self.0 != 0
    }
}

impl TryFrom<i64> for LikertScore {
    type Error = String;

    fn try_from(v: i64) -> Result<Self, Self::Error> {
        u8::try_from(v)
            .ok()
            .and_then(LikertScore::new)
            .ok_or_else(|| alloc::format!("Likert score out of range: {v}"))
    }
}

impl From<LikertScore> for u8 {
    fn from(s: LikertScore) -> u8 {
        s.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Boy,
    Girl,
    Inclusive,
}

impl Verdict {
    pub const ALL: [Verdict; 3] = [Verdict::Boy, Verdict::Girl, Verdict::Inclusive];

    /// The `@…@` marker raters use to state the verdict.
    pub fn token(self) -> &'static str {
        match self {
            Verdict::Boy => "@boy@",
            Verdict::Girl => "@girl@",
            Verdict::Inclusive => "@inclusive@",
        }
    }

    pub fn is_gendered(self) -> bool {
        self != Verdict::Inclusive
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Boy => "boy",
            Verdict::Girl => "girl",
            Verdict::Inclusive => "inclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verdict {
    type Err = FrameworkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().trim_matches('@');
        Verdict::ALL
            .iter()
            .copied()
            .find(|v| v.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| FrameworkError::UnknownVerdict(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Human,
    Model,
}

/// One rater's scores for one project. Always carries all 18 criteria.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSheet", into = "RawSheet")]
pub struct RatingSheet {
    pub rater_id: String,
    pub project_id: String,
    scores: BTreeMap<CriterionId, LikertScore>,
    pub verdict: Verdict,
    pub provenance: Provenance,
}

impl RatingSheet {
    pub fn new(
        rater_id: impl Into<String>,
        project_id: impl Into<String>,
        scores: BTreeMap<CriterionId, LikertScore>,
        verdict: Verdict,
        provenance: Provenance,
    ) -> Result<Self, FrameworkError> {
        if let Some(missing) = CriterionId::ALL.iter().find(|id| !scores.contains_key(id)) {
            return Err(FrameworkError::MissingCriterion(*missing));
        }
        Ok(RatingSheet {
            rater_id: rater_id.into(),
            project_id: project_id.into(),
            scores,
            verdict,
            provenance,
        })
    }

    pub fn score(&self, id: CriterionId) -> LikertScore {
        self.scores[&id]
    }

    pub fn scores(&self) -> &BTreeMap<CriterionId, LikertScore> {
        &self.scores
    }
}

/// Unvalidated sheet as it arrives from files or other tools.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawSheet {
    pub rater_id: String,
    pub project_id: String,
    pub scores: BTreeMap<String, i64>,
    pub verdict: Verdict,
    pub provenance: Provenance,
}

impl From<RatingSheet> for RawSheet {
    fn from(s: RatingSheet) -> Self {
        RawSheet {
            rater_id: s.rater_id,
            project_id: s.project_id,
            scores: s
                .scores
                .into_iter()
                .map(|(k, v)| (k.as_str().to_string(), i64::from(v.0)))
                .collect(),
            verdict: s.verdict,
            provenance: s.provenance,
        }
    }
}

impl TryFrom<RawSheet> for RatingSheet {
    type Error = FrameworkError;

    fn try_from(raw: RawSheet) -> Result<Self, Self::Error> {
        validate_sheet(&raw)
    }
}

/// Checks ids, ranges and completeness. Unknown ids are reported before
/// out-of-range values, which are reported before missing criteria.
pub fn validate_sheet(raw: &RawSheet) -> Result<RatingSheet, FrameworkError> {
    let mut scores = BTreeMap::new();
    for (key, &value) in &raw.scores {
        let id: CriterionId = key.parse()?;
        let score = u8::try_from(value)
            .ok()
            .and_then(LikertScore::new)
            .ok_or(FrameworkError::InvalidScore(id, value))?;
        scores.insert(id, score);
    }
    RatingSheet::new(
        raw.rater_id.clone(),
        raw.project_id.clone(),
        scores,
        raw.verdict,
        raw.provenance,
    )
}

/// Treatment of "not applicable" answers when averaging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NaPolicy {
    #[default]
    Exclude,
    AsMidpoint,
}

/// Ids grouped by category, in catalog order.
pub fn ids_in(category: Category) -> Vec<CriterionId> {
    catalog().iter().filter(|c| c.category == category).map(|c| c.id).collect()
}
