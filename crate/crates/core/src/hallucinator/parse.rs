//! Splitting chat responses into list items.

use std::sync::OnceLock;

use regex::Regex;

fn numbered_prefix() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\d{1,4}(?:[.)]\s+|\)\s*)").expect("static regex"))
}

/// Collapses internal whitespace (line breaks included) to single spaces.
pub fn clean_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn clean_item(raw: &str) -> String {
    let line = clean_line(raw);
    numbered_prefix().replace(&line, "").trim().to_string()
}

fn split_clean<'a>(text: &'a str, separators: &'a [char]) -> impl Iterator<Item = String> + 'a {
    text.split(separators)
        .map(clean_item)
        .filter(|item| !item.is_empty())
}

/// Splits on `delimiter`; when that yields fewer than two items, splits on
/// line breaks as well. Items are trimmed, de-numbered, and never empty or
/// contain the delimiter.
pub fn split_items(text: &str, delimiter: char) -> Vec<String> {
    let primary: Vec<String> = split_clean(text, &[delimiter]).collect();
    if primary.len() >= 2 {
        return primary;
    }
    let fallback: Vec<String> = split_clean(text, &[delimiter, '\n', '\r']).collect();
    if fallback.len() > primary.len() {
        fallback
    } else {
        primary
    }
}

/// Comma-separated seed words. A trailing full stop is dropped.
pub fn parse_seed_words(text: &str) -> Vec<String> {
    split_items(text, ',')
        .into_iter()
        .map(|w| w.trim_end_matches('.').trim().to_string())
        .filter(|w| !w.is_empty())
        .collect()
}

/// Semicolon-separated sentences.
pub fn parse_sentences(text: &str) -> Vec<String> {
    split_items(text, ';')
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seeds_are_trimmed() {
        assert_eq!(
            parse_seed_words("Hund, Katze,Maus, "),
            vec!["Hund", "Katze", "Maus"]
        );
        assert_eq!(parse_seed_words("Hund, Katze."), vec!["Hund", "Katze"]);
    }

    #[test]
    fn trailing_semicolon_dropped() {
        assert_eq!(
            parse_sentences("Der Hund bellt.;Die Katze schläft.;"),
            vec!["Der Hund bellt.", "Die Katze schläft."]
        );
    }

    #[test]
    fn newline_fallback_and_numbering() {
        assert_eq!(
            parse_sentences("1. Der Hund bellt.\n2) Die Katze schläft.\n3.Es regnet."),
            vec!["Der Hund bellt.", "Die Katze schläft.", "3.Es regnet."]
        );
        assert_eq!(
            parse_seed_words("1. Hund\n2. Katze\n"),
            vec!["Hund", "Katze"]
        );
        // a single item with a stray delimiter is still split clean
        assert_eq!(parse_sentences("Ein Satz.;"), vec!["Ein Satz."]);
    }

    #[test]
    fn numbers_that_are_content_survive() {
        assert_eq!(
            parse_sentences("3.5 Meter sind viel.;2010 war gut."),
            vec!["3.5 Meter sind viel.", "2010 war gut."]
        );
    }

    #[test]
    fn internal_line_breaks_collapse() {
        assert_eq!(
            parse_sentences("Ein\nSatz.;Noch einer."),
            vec!["Ein Satz.", "Noch einer."]
        );
    }

    proptest! {
        #[test]
        fn items_never_contain_delimiters(text in "[a-c ,;\n.12)]{0,40}") {
            for item in parse_seed_words(&text) {
                prop_assert!(!item.contains(',') && !item.is_empty() && !item.contains('\n'));
            }
            for item in parse_sentences(&text) {
                prop_assert!(!item.contains(';') && !item.is_empty() && !item.contains('\n'));
            }
        }
    }
}
