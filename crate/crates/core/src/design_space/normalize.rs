use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DesignSpaceError;

const DEFAULT_RULES: &str = include_str!("../../config/normalization_rules.json");

/// Cleanup rules for raw annotated concepts.
///
/// All matching is case-insensitive and works on whitespace-separated words:
/// a denylist entry must equal the whole concept, a prefix must match the
/// leading words, and a conjunction must match whole words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptNormalizationRules {
    pub denylist: Vec<String>,
    pub embellishment_prefixes: Vec<String>,
    pub conjunctions: Vec<String>,
}

impl Default for ConceptNormalizationRules {
    fn default() -> Self {
        ConceptNormalizationRules::from_json(DEFAULT_RULES).expect("bundled rules are valid")
    }
}

impl ConceptNormalizationRules {
    /// Parses a rules document. Lists missing or empty in the document fall
    /// back to the bundled defaults; entries are trimmed and blanks dropped.
    pub fn from_json(text: &str) -> Result<ConceptNormalizationRules, DesignSpaceError> {
        #[derive(Deserialize)]
        struct Partial {
            #[serde(default)]
            denylist: Vec<String>,
            #[serde(default)]
            embellishment_prefixes: Vec<String>,
            #[serde(default)]
            conjunctions: Vec<String>,
        }
        let p: Partial =
            serde_json::from_str(text).map_err(|e| DesignSpaceError::Config(e.to_string()))?;
        let clean = |v: Vec<String>| -> Vec<String> {
            v.into_iter()
                .map(|s| s.split_whitespace().collect::<Vec<_>>().join(" "))
                .filter(|s| !s.is_empty())
                .collect()
        };
        let mut rules = ConceptNormalizationRules {
            denylist: clean(p.denylist),
            embellishment_prefixes: clean(p.embellishment_prefixes),
            conjunctions: clean(p.conjunctions),
        };
        if rules.denylist.is_empty() || rules.embellishment_prefixes.is_empty() || rules.conjunctions.is_empty() {
            if text == DEFAULT_RULES {
                return Err(DesignSpaceError::Config("bundled rules have an empty list".into()));
            }
            let defaults = ConceptNormalizationRules::default();
            if rules.denylist.is_empty() {
                rules.denylist = defaults.denylist;
            }
            if rules.embellishment_prefixes.is_empty() {
                rules.embellishment_prefixes = defaults.embellishment_prefixes;
            }
            if rules.conjunctions.is_empty() {
                rules.conjunctions = defaults.conjunctions;
            }
        }
        Ok(rules)
    }

    pub fn load(path: &Path) -> Result<ConceptNormalizationRules, DesignSpaceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DesignSpaceError::Config(format!("{}: {e}", path.display())))?;
        ConceptNormalizationRules::from_json(&text)
    }
}

fn lower_words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_lowercase).collect()
}

struct Compiled {
    denylist: HashSet<String>,
    prefixes: Vec<Vec<String>>,
    conjunctions: Vec<Vec<String>>,
}

impl Compiled {
    fn new(rules: &ConceptNormalizationRules) -> Compiled {
        Compiled {
            denylist: rules.denylist.iter().map(|d| lower_words(d).join(" ")).collect(),
            prefixes: rules.embellishment_prefixes.iter().map(|p| lower_words(p)).collect(),
            conjunctions: rules.conjunctions.iter().map(|c| lower_words(c)).collect(),
        }
    }

    fn denied(&self, words: &[&str]) -> bool {
        let joined = words.iter().map(|w| w.to_lowercase()).collect::<Vec<_>>().join(" ");
        self.denylist.contains(&joined)
    }

    fn strip_prefixes<'a>(&self, mut words: &'a [&'a str]) -> &'a [&'a str] {
        'outer: loop {
            for p in &self.prefixes {
                if words.len() >= p.len()
                    && words.iter().zip(p).all(|(w, p)| w.to_lowercase() == *p)
                {
                    words = &words[p.len()..];
                    continue 'outer;
                }
            }
            return words;
        }
    }

    fn split<'a>(&self, words: &[&'a str]) -> Vec<Vec<&'a str>> {
        let mut pieces = vec![Vec::new()];
        let mut i = 0;
        'scan: while i < words.len() {
            for c in &self.conjunctions {
                if i + c.len() <= words.len()
                    && words[i..i + c.len()].iter().zip(c).all(|(w, c)| w.to_lowercase() == *c)
                {
                    pieces.push(Vec::new());
                    i += c.len();
                    continue 'scan;
                }
            }
            pieces.last_mut().expect("non-empty").push(words[i]);
            i += 1;
        }
        pieces
    }
}

/// Cleans a list of raw concepts.
///
/// Per concept, in order: drop it if denylisted; strip embellishment prefixes;
/// split on conjunctions; then trim each piece, strip prefixes again and drop
/// blank or denylisted pieces. Survivors are deduplicated keeping first
/// occurrence. Internal whitespace is collapsed to single spaces. The result is
/// a fixed point: normalizing it again changes nothing.
pub fn normalize_concepts(raw: &[String], rules: &ConceptNormalizationRules) -> Vec<String> {
    let c = Compiled::new(rules);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for concept in raw {
        let words: Vec<&str> = concept.split_whitespace().collect();
        if c.denied(&words) {
            continue;
        }
        let words = c.strip_prefixes(&words);
        for piece in c.split(words) {
            let piece = c.strip_prefixes(&piece);
            if piece.is_empty() || c.denied(piece) {
                continue;
            }
            let s = piece.join(" ");
            if seen.insert(s.clone()) {
                out.push(s);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(xs: &[&str]) -> Vec<String> {
        let raw: Vec<String> = xs.iter().map(|s| s.to_string()).collect();
        normalize_concepts(&raw, &ConceptNormalizationRules::default())
    }

    #[test]
    fn splits_compound_concepts() {
        assert_eq!(norm(&["vitality and hope"]), vec!["vitality", "hope"]);
        assert_eq!(norm(&["farmer and ox"]), vec!["farmer", "ox"]);
    }

    #[test]
    fn strips_embellishments() {
        assert_eq!(norm(&["It expresses freedom"]), vec!["freedom"]);
        assert_eq!(norm(&["it represents  longevity"]), vec!["longevity"]);
    }

    #[test]
    fn drops_non_concepts() {
        assert!(norm(&["cultural connotation", "background"]).is_empty());
        assert!(norm(&["Background"]).is_empty());
    }

    #[test]
    fn empty_in_empty_out() {
        assert!(norm(&[]).is_empty());
    }

    #[test]
    fn order_kept_and_deduplicated() {
        assert_eq!(
            norm(&["pine", "crane and pine", "  lotus "]),
            vec!["pine", "crane", "lotus"]
        );
    }

    #[test]
    fn conjunction_must_be_a_whole_word() {
        assert_eq!(norm(&["sandy shore"]), vec!["sandy shore"]);
        assert_eq!(norm(&["and"]), Vec::<String>::new());
    }

    #[test]
    fn pieces_are_rechecked() {
        assert_eq!(norm(&["background and mountains"]), vec!["mountains"]);
        assert_eq!(norm(&["joy and It expresses freedom"]), vec!["joy", "freedom"]);
    }

    #[test]
    fn custom_rules_fill_missing_lists() {
        let r = ConceptNormalizationRules::from_json(r#"{"denylist": [" atmosphere "]}"#).unwrap();
        assert_eq!(r.denylist, vec!["atmosphere"]);
        assert_eq!(r.conjunctions, ConceptNormalizationRules::default().conjunctions);
    }
}
