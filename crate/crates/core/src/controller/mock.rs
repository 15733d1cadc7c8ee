use std::collections::BTreeSet;
use std::sync::OnceLock;

use async_trait::async_trait;

use super::{ControllerBackend, ControllerError, PromptBundle, LIBRARY_HEADER};
use crate::textualizer::parse_event_text;
use crate::tokens::{overlap, token_set, tokens};

const RECOMMEND_COUNT: usize = 5;
const PROMPT_TOKENS: usize = 8;

fn stop_words() -> &'static BTreeSet<&'static str> {
    static WORDS: OnceLock<BTreeSet<&'static str>> = OnceLock::new();
    WORDS.get_or_init(|| {
        include_str!("stopwords.txt")
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

/// Library filenames listed in a system context built by
/// [`super::build_controller_request`].
pub fn library_from_context(system_context: &str) -> Vec<&str> {
    system_context
        .lines()
        .skip_while(|l| l.trim() != LIBRARY_HEADER)
        .skip(1)
        .map_while(|l| l.strip_prefix("- "))
        .collect()
}

/// Up to `k` names ranked by token overlap with `text`, best first, ties in
/// lexicographic order. Names sharing no token are dropped.
pub fn rank_by_overlap<'a>(text: &str, names: &[&'a str], k: usize) -> Vec<&'a str> {
    let query = token_set(text);
    let mut scored: Vec<(usize, &str)> = names
        .iter()
        .map(|n| (overlap(&query, n), *n))
        .filter(|(s, _)| *s > 0)
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    scored.into_iter().take(k).map(|(_, n)| n).collect()
}

/// First eight distinct non-stop-word tokens of `text`, space separated.
pub fn condense(text: &str) -> String {
    let stop = stop_words();
    let mut seen = BTreeSet::new();
    let words: Vec<String> = tokens(text)
        .filter(|t| !stop.contains(t.as_str()))
        .filter(|t| seen.insert(t.clone()))
        .take(PROMPT_TOKENS)
        .collect();
    if words.is_empty() {
        "sound effect".to_owned()
    } else {
        words.join(" ")
    }
}

/// Deterministic stand-in for a chat model: a pure function of the bundle.
pub fn mock_controller(bundle: &PromptBundle) -> String {
    let text = &bundle.user_message;
    let library = library_from_context(&bundle.system_context);
    let prompt = condense(text);
    let mut lines: Vec<String> = rank_by_overlap(text, &library, RECOMMEND_COUNT)
        .into_iter()
        .map(|name| format!("method1recommend:{name}"))
        .collect();
    lines.push(format!("method2retrieval:{prompt}"));
    lines.push(format!("method3generation:{prompt}"));
    let time_sensitive = parse_event_text(text).is_some_and(|p| p.event_type.is_time_sensitive());
    if time_sensitive {
        lines.push(format!("method4transfer:{prompt}"));
    }
    lines.join("\n")
}

/// [`ControllerBackend`] wrapper around [`mock_controller`].
#[derive(Debug, Clone, Copy, Default)]
pub struct MockController;

#[async_trait]
impl ControllerBackend for MockController {
    async fn complete(&self, bundle: &PromptBundle) -> Result<String, ControllerError> {
        Ok(mock_controller(bundle))
    }
}
