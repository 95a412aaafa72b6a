//! Tweet text normalization: URL stripping, tokenization, stopword removal
//! and stemming.

use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;

use super::porter;

const STOPWORDS_EN: &str = include_str!("../../data/stopwords_en.txt");

/// Upper bound on re-stemming passes; the stemmer never lengthens a word, so
/// real inputs settle within two or three.
const MAX_STEM_PASSES: usize = 8;

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)(?:https?://|www\.)\S*").unwrap())
}

fn token_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@[a-z0-9_]+|[\p{L}\p{N}]+").unwrap())
}

fn mention_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@[A-Za-z0-9_]+").unwrap())
}

pub fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS_EN
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect()
    })
}

pub fn is_mention(token: &str) -> bool {
    token.starts_with('@')
}

/// Applies the stemmer until the token stops changing.
fn stem_to_fixed_point(token: &str) -> String {
    let mut current = porter::stem(token);
    for _ in 0..MAX_STEM_PASSES {
        let next = porter::stem(&current);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

/// Lowercases, strips URLs, splits into word and `@handle` tokens, drops
/// stopwords and stems the remaining words. Mention tokens are kept verbatim.
pub fn preprocess(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    let without_urls = url_re().replace_all(&lowered, " ");
    let stop = stopwords();
    token_re()
        .find_iter(&without_urls)
        .filter_map(|m| {
            let tok = m.as_str();
            if is_mention(tok) {
                return Some(tok.to_string());
            }
            if stop.contains(tok) {
                return None;
            }
            let stemmed = stem_to_fixed_point(tok);
            (!stop.contains(stemmed.as_str())).then_some(stemmed)
        })
        .collect()
}

/// Lowercased mention handles (without the `@`) in order of appearance.
pub fn extract_mentions(raw_text: &str) -> impl Iterator<Item = String> + '_ {
    mention_re()
        .find_iter(raw_text)
        .map(|m| m.as_str()[1..].to_ascii_lowercase())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn shipped_stopword_list_has_179_entries() {
        assert_eq!(stopwords().len(), 179);
    }

    #[test]
    fn strips_urls_punctuation_and_stems() {
        assert_eq!(
            preprocess("Running to http://t.co/x the stores!!"),
            vec!["run", "store"]
        );
        assert_eq!(preprocess("see www.example.com/page now"), vec!["see"]);
    }

    #[test]
    fn empty_text() {
        assert!(preprocess("").is_empty());
    }

    #[test]
    fn mentions_are_retained() {
        assert_eq!(preprocess("@bob @bob hello"), vec!["@bob", "@bob", "hello"]);
        assert_eq!(preprocess("Hey @Bob_99, thanks!"), vec!["hei", "@bob_99", "thank"]);
    }

    #[test]
    fn mention_extraction_is_case_insensitive() {
        let m: Vec<_> = extract_mentions("@Alice and @ALICE, then @bob_2!").collect();
        assert_eq!(m, vec!["alice", "alice", "bob_2"]);
    }

    #[test]
    fn contractions_fall_out_as_stopwords() {
        assert_eq!(preprocess("I don't think it's late"), vec!["think", "late"]);
    }

    proptest! {
        #[test]
        fn idempotent_on_own_output(text in r"[A-Za-z@#'!?., _0-9éü/:]{0,80}") {
            let once = preprocess(&text);
            let twice = preprocess(&once.join(" "));
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn output_has_no_stopwords_or_punctuation(text in r"[A-Za-z'!?., ]{0,80}") {
            for tok in preprocess(&text) {
                prop_assert!(!stopwords().contains(tok.as_str()));
                prop_assert!(tok.chars().all(|c| c.is_alphanumeric() || c == '@' || c == '_'));
            }
        }
    }
}
