//! Token-overlap scoring shared by the mock controller and retrieval ranking.

use std::collections::BTreeSet;

/// Lowercase alphanumeric runs of `text`, in order of appearance.
pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

pub fn token_set(text: &str) -> BTreeSet<String> {
    tokens(text).collect()
}

/// Number of distinct tokens shared by `query` and `candidate`.
pub fn overlap(query: &BTreeSet<String>, candidate: &str) -> usize {
    token_set(candidate).intersection(query).count()
}
