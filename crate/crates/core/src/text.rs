//! Small text helpers shared by the matcher, tokenizer and name normalizer.

use alloc::string::String;
use alloc::vec::Vec;

/// Collapses every run of whitespace to one space and trims both ends.
pub fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Lowercased alphanumeric tokens, split on every non-alphanumeric char.
pub fn tokenize(s: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in s.chars() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(core::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// ASCII-case-insensitive substring search.
pub fn contains_ignore_case(haystack: &str, needle: &str) -> bool {
    find_ignore_case(haystack, needle).is_some()
}

pub fn find_ignore_case(haystack: &str, needle: &str) -> Option<usize> {
    let h = haystack.as_bytes();
    let n = needle.as_bytes();
    if n.is_empty() {
        return Some(0);
    }
    if n.len() > h.len() {
        return None;
    }
    (0..=h.len() - n.len()).find(|&i| h[i..i + n.len()].eq_ignore_ascii_case(n))
}

/// Count of non-overlapping ASCII-case-insensitive occurrences.
pub fn count_ignore_case(haystack: &str, needle: &str) -> usize {
    let mut count = 0;
    let mut rest = haystack;
    while let Some(i) = find_ignore_case(rest, needle) {
        count += 1;
        rest = &rest[i + needle.len()..];
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_splits_and_folds() {
        assert_eq!(tokenize("Reportable-Segments, REVENUE!"), ["reportable", "segments", "revenue"]);
        assert!(tokenize("  --  ").is_empty());
    }

    #[test]
    fn whitespace_collapse() {
        assert_eq!(collapse_whitespace("  What   is\tthe\nGVKEY? "), "What is the GVKEY?");
    }

    #[test]
    fn case_insensitive_counts() {
        assert_eq!(count_ignore_case("Segment segments SEGMENT", "segment"), 3);
        assert!(contains_ignore_case("ASC 280", "asc 280"));
    }
}
