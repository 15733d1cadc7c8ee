//! Line-oriented command grammar of controller replies.
//!
//! ```text
//! method1recommend:FILENAME
//! method2retrieval:PROMPT
//! method3generation:PROMPT
//! method4transfer:PROMPT
//! ```
//!
//! Keywords match case-insensitively after trimming the line; payloads are
//! trimmed. Anything else is kept as a diagnostic rather than failing the
//! whole reply.

use serde::{Deserialize, Serialize};

use super::ControllerError;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "method", content = "payload", rename_all = "snake_case")]
pub enum Command {
    Recommend(String),
    Retrieve(String),
    Generate(String),
    Transfer(String),
}

const KEYWORDS: [&str; 4] = [
    "method1recommend:",
    "method2retrieval:",
    "method3generation:",
    "method4transfer:",
];

impl Command {
    pub fn keyword(&self) -> &'static str {
        match self {
            Command::Recommend(_) => KEYWORDS[0],
            Command::Retrieve(_) => KEYWORDS[1],
            Command::Generate(_) => KEYWORDS[2],
            Command::Transfer(_) => KEYWORDS[3],
        }
    }

    pub fn payload(&self) -> &str {
        match self {
            Command::Recommend(p) | Command::Retrieve(p) | Command::Generate(p) | Command::Transfer(p) => p,
        }
    }

    fn from_keyword(index: usize, payload: String) -> Command {
        match index {
            0 => Command::Recommend(payload),
            1 => Command::Retrieve(payload),
            2 => Command::Generate(payload),
            _ => Command::Transfer(payload),
        }
    }

    pub fn to_line(&self) -> String {
        format!("{}{}", self.keyword(), self.payload())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControllerCommand {
    pub command: Command,
    pub raw_line: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// 1-based line number in the reply.
    pub line: usize,
    pub text: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedReply {
    pub commands: Vec<ControllerCommand>,
    pub diagnostics: Vec<Diagnostic>,
}

fn match_keyword(line: &str) -> Option<(usize, &str)> {
    KEYWORDS.iter().enumerate().find_map(|(i, kw)| {
        let head = line.get(..kw.len())?;
        head.eq_ignore_ascii_case(kw).then(|| (i, &line[kw.len()..]))
    })
}

/// Parses a controller reply. Only a zero-length reply is an error; blank
/// lines are skipped silently.
pub fn parse_commands(raw_reply: &str) -> Result<ParsedReply, ControllerError> {
    if raw_reply.is_empty() {
        return Err(ControllerError::EmptyReply);
    }
    let mut out = ParsedReply::default();
    for (i, raw_line) in raw_reply.lines().enumerate() {
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        let diag = |reason: &str| Diagnostic {
            line: i + 1,
            text: raw_line.to_owned(),
            reason: reason.to_owned(),
        };
        match match_keyword(line) {
            None => out.diagnostics.push(diag("no command keyword")),
            Some((_, payload)) if payload.trim().is_empty() => {
                out.diagnostics.push(diag("empty payload"))
            }
            Some((kw, payload)) => out.commands.push(ControllerCommand {
                command: Command::from_keyword(kw, payload.trim().to_owned()),
                raw_line: raw_line.to_owned(),
            }),
        }
    }
    Ok(out)
}

/// Byte-level entry point for untrusted replies; invalid UTF-8 is replaced.
pub fn parse_command_bytes(raw_reply: &[u8]) -> Result<ParsedReply, ControllerError> {
    parse_commands(&String::from_utf8_lossy(raw_reply))
}

pub fn format_commands(commands: &[Command]) -> String {
    commands.iter().map(Command::to_line).collect::<Vec<_>>().join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cmds(reply: &str) -> Vec<Command> {
        parse_commands(reply).unwrap().commands.into_iter().map(|c| c.command).collect()
    }

    #[test]
    fn recommend_line() {
        assert_eq!(
            cmds("method1recommend:Crash Aluminum Tray Bang"),
            [Command::Recommend("Crash Aluminum Tray Bang".into())]
        );
    }

    #[test]
    fn keeps_order() {
        assert_eq!(
            cmds("method2retrieval:metal footsteps on glass\nmethod3generation:metal robot stomp on glass"),
            [
                Command::Retrieve("metal footsteps on glass".into()),
                Command::Generate("metal robot stomp on glass".into())
            ]
        );
    }

    #[test]
    fn chatter_is_a_diagnostic() {
        let r = parse_commands("sure! here are sounds:").unwrap();
        assert!(r.commands.is_empty());
        assert_eq!(r.diagnostics.len(), 1);
        assert_eq!(r.diagnostics[0].line, 1);
    }

    #[test]
    fn empty_reply_is_an_error() {
        assert!(matches!(parse_commands(""), Err(ControllerError::EmptyReply)));
        assert_eq!(parse_commands("  \n\n").unwrap(), ParsedReply::default());
    }

    #[test]
    fn case_insensitive_and_trimmed() {
        let r = parse_commands("  METHOD4Transfer:   heavier thud  \r\nmethod3generation:   \n").unwrap();
        assert_eq!(r.commands.len(), 1);
        assert_eq!(r.commands[0].command, Command::Transfer("heavier thud".into()));
        assert_eq!(r.commands[0].raw_line, "  METHOD4Transfer:   heavier thud  ");
        assert_eq!(r.diagnostics.len(), 1);
        assert_eq!(r.diagnostics[0].reason, "empty payload");
    }

    #[test]
    fn multibyte_prefix_does_not_panic() {
        let r = parse_commands("méthod1recommend:x\n日本語日本語日本語日本語").unwrap();
        assert_eq!(r.diagnostics.len(), 2);
        assert!(parse_command_bytes(&[0xff, 0xfe, b'\n', 0x80]).is_ok());
    }
}
