//! Builds controller prompts from event text and turns replies into
//! acquisition commands.

mod grammar;
mod mock;

use std::time::Duration;

use async_trait::async_trait;
use thiserror::Error;

use crate::acquisition::LibraryIndex;
use crate::textualizer::EventText;

pub use grammar::{
    format_commands, parse_command_bytes, parse_commands, Command, ControllerCommand, Diagnostic,
    ParsedReply,
};
pub use mock::{condense, library_from_context, mock_controller, rank_by_overlap, MockController};

pub(crate) const LIBRARY_HEADER: &str = "Sound library:";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ControllerError {
    #[error("controller returned an empty reply")]
    EmptyReply,
    #[error("controller request timed out")]
    Timeout,
    #[error("controller transport error: {0}")]
    Transport(String),
    #[error("controller returned HTTP {0}")]
    Status(u16),
    #[error("controller response is malformed: {0}")]
    InvalidResponse(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendOptions {
    pub model: String,
    pub temperature: f64,
    pub timeout: Duration,
}

impl Default for BackendOptions {
    fn default() -> Self {
        Self {
            model: "gpt-4".to_owned(),
            temperature: 0.2,
            timeout: Duration::from_secs(30),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    pub system_context: String,
    pub user_message: String,
    pub options: BackendOptions,
}

/// A chat-completion service that answers one prompt bundle.
#[async_trait]
pub trait ControllerBackend: Send + Sync {
    async fn complete(&self, bundle: &PromptBundle) -> Result<String, ControllerError>;
}

const INSTRUCTIONS: &str = "\
You are the sound controller of an augmented reality sound authoring tool. \
The user message describes one event that happened in the AR scene. \
Reply only with commands, one command per line, each of the form KEYWORD:PAYLOAD on a single line. \
Do not add any other text.

Commands:";

const RECOMMEND_HELP: &str = "\
method1recommend:FILENAME  pick a sound from the sound library below that fits the event. \
Emit up to five of these lines, best match first. Copy FILENAME exactly as listed.";

const OTHER_HELP: &str = "\
method2retrieval:PROMPT  a short search query for an online sound effect database.
method3generation:PROMPT  a short description of the sound for a text-to-audio model.
method4transfer:PROMPT  only for Tap Real World Structure, Slide and Collide events: \
a short description used to restyle a default sound for that event.";

const EMPTY_LIBRARY_NOTE: &str = "\
The sound library is empty. Do not emit method1recommend lines; use retrieval and generation.";

/// The system context lists every library filename; the user message is the
/// event text verbatim.
pub fn build_controller_request(text: &EventText, library: &LibraryIndex) -> PromptBundle {
    let mut system = String::from(INSTRUCTIONS);
    system.push('\n');
    if !library.is_empty() {
        system.push_str(RECOMMEND_HELP);
        system.push('\n');
    }
    system.push_str(OTHER_HELP);
    system.push_str("\n\n");
    if library.is_empty() {
        system.push_str(EMPTY_LIBRARY_NOTE);
    } else {
        system.push_str(LIBRARY_HEADER);
        for name in library.names() {
            system.push_str("\n- ");
            system.push_str(name);
        }
    }
    PromptBundle {
        system_context: system,
        user_message: text.text.clone(),
        options: BackendOptions::default(),
    }
}
