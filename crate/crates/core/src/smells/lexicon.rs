//! Word lists used by the name and text detectors.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

const FEMALE_NAMES: &str = include_str!("../../data/lexicon/female_names.txt");
const MALE_NAMES: &str = include_str!("../../data/lexicon/male_names.txt");
const FEMALE_NOUNS: &str = include_str!("../../data/lexicon/female_nouns.txt");
const MALE_NOUNS: &str = include_str!("../../data/lexicon/male_nouns.txt");
const VIOLENCE: &str = include_str!("../../data/lexicon/violence.txt");
const COMPETITION_VARIABLES: &str = include_str!("../../data/lexicon/competition_variables.txt");
const COMPETITION_PHRASES: &str = include_str!("../../data/lexicon/competition_phrases.txt");

/// Terms from a lexicon file: one per line, `#` starts a comment, blank
/// lines ignored, lowercased.
pub fn parse_terms(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or_default().trim())
        .filter(|l| !l.is_empty())
        .map(|l| normalize(l))
        .collect()
}

/// Lowercase, with runs of non-alphanumeric characters collapsed to one space.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut gap = false;
    for c in text.chars() {
        if c.is_alphanumeric() {
            if gap && !out.is_empty() {
                out.push(' ');
            }
            gap = false;
            out.extend(c.to_lowercase());
        } else {
            gap = true;
        }
    }
    out
}

/// Lowercase word tokens, splitting on punctuation, camelCase humps and
/// letter/digit boundaries (`DressUpTera2` → dress, up, tera, 2).
pub fn tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut prev: Option<char> = None;
    for c in text.chars() {
        if !c.is_alphanumeric() {
            if !cur.is_empty() {
                out.push(core::mem::take(&mut cur));
            }
            prev = None;
            continue;
        }
        if let Some(p) = prev {
            let hump = p.is_lowercase() && c.is_uppercase();
            let digit_edge = p.is_numeric() != c.is_numeric();
            if (hump || digit_edge) && !cur.is_empty() {
                out.push(core::mem::take(&mut cur));
            }
        }
        cur.extend(c.to_lowercase());
        prev = Some(c);
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Coding {
    Female,
    Male,
}

/// Gender-coded given names and character nouns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NameLexicon {
    pub female: BTreeSet<String>,
    pub male: BTreeSet<String>,
}

impl NameLexicon {
    pub fn builtin() -> Self {
        let mut female = parse_terms(FEMALE_NAMES);
        female.extend(parse_terms(FEMALE_NOUNS));
        let mut male = parse_terms(MALE_NAMES);
        male.extend(parse_terms(MALE_NOUNS));
        NameLexicon { female, male }
    }

    pub fn from_texts(female: &str, male: &str) -> Self {
        NameLexicon { female: parse_terms(female), male: parse_terms(male) }
    }

    pub fn coding(&self, token: &str) -> Option<Coding> {
        match (self.female.contains(token), self.male.contains(token)) {
            (true, false) => Some(Coding::Female),
            (false, true) => Some(Coding::Male),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextLexicons {
    pub violence: BTreeSet<String>,
    pub competition_variables: BTreeSet<String>,
    pub competition_phrases: BTreeSet<String>,
}

impl TextLexicons {
    pub fn builtin() -> Self {
        TextLexicons {
            violence: parse_terms(VIOLENCE),
            competition_variables: parse_terms(COMPETITION_VARIABLES),
            competition_phrases: parse_terms(COMPETITION_PHRASES),
        }
    }

    /// Violence terms hit by one token. Terms of four or more characters
    /// also match as prefixes.
    pub fn violence_hit(&self, token: &str) -> Option<&str> {
        self.violence
            .iter()
            .find(|t| token == t.as_str() || (t.chars().count() >= 4 && token.starts_with(t.as_str())))
            .map(String::as_str)
    }

    pub fn is_competition_variable(&self, name: &str) -> bool {
        let norm = normalize(name);
        let toks = tokens(name);
        self.competition_variables.iter().any(|term| {
            if term.contains(' ') {
                norm.contains(term.as_str())
            } else {
                toks.iter().any(|t| t == term) || norm.replace(' ', "") == *term
            }
        })
    }

    pub fn competition_phrase<'a>(&'a self, text: &str) -> Option<&'a str> {
        let norm = normalize(text);
        let padded = alloc::format!(" {norm} ");
        self.competition_phrases
            .iter()
            .find(|p| padded.contains(&alloc::format!(" {p} ")))
            .map(String::as_str)
    }
}

/// Name and text lexicons together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicons {
    pub names: NameLexicon,
    pub text: TextLexicons,
}

impl Lexicons {
    pub fn builtin() -> Self {
        Lexicons { names: NameLexicon::builtin(), text: TextLexicons::builtin() }
    }
}

impl Default for Lexicons {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn comments_and_blanks_skipped() {
        let terms = parse_terms("# header\nKnight\n\n  fairy  # inline\n");
        assert_eq!(terms.into_iter().collect::<Vec<_>>(), vec!["fairy", "knight"]);
    }

    #[test]
    fn tokenizer_splits_humps_and_digits() {
        assert_eq!(tokens("DressUpTera2"), vec!["dress", "up", "tera", "2"]);
        assert_eq!(tokens("ballerina-a"), vec!["ballerina", "a"]);
        assert_eq!(tokens("GAME over!"), vec!["game", "over"]);
    }

    #[test]
    fn builtin_codings() {
        let lex = NameLexicon::builtin();
        assert_eq!(lex.coding("tera"), Some(Coding::Female));
        assert_eq!(lex.coding("abby"), Some(Coding::Female));
        assert_eq!(lex.coding("ben"), Some(Coding::Male));
        assert_eq!(lex.coding("ballerina"), Some(Coding::Female));
        assert_eq!(lex.coding("knight"), Some(Coding::Male));
        assert_eq!(lex.coding("dani"), None);
        assert_eq!(lex.coding("ball"), None);
        assert!(lex.female.is_disjoint(&lex.male));
    }

    #[test]
    fn violence_prefix_rule() {
        let lex = TextLexicons::builtin();
        assert_eq!(lex.violence_hit("shooting"), Some("shoot"));
        assert_eq!(lex.violence_hit("war"), Some("war"));
        assert_eq!(lex.violence_hit("warm"), None);
        assert_eq!(lex.violence_hit("diet"), None);
        assert_eq!(lex.violence_hit("hello"), None);
    }

    #[test]
    fn competition_markers() {
        let lex = TextLexicons::builtin();
        assert!(lex.is_competition_variable("score"));
        assert!(lex.is_competition_variable("Player Score"));
        assert!(lex.is_competition_variable("HiScore"));
        assert!(lex.is_competition_variable("high_score"));
        assert!(!lex.is_competition_variable("scoreboard colour"));
        assert_eq!(lex.competition_phrase("GAME OVER!"), Some("game over"));
        assert_eq!(lex.competition_phrase("Endgame overview"), None);
    }
}
